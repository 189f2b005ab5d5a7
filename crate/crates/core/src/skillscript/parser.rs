//! Recursive-descent parser for SkillScript.
//!
//! ```text
//! program   := line*
//! line      := statement? NEWLINE
//! statement := "let" IDENT "=" expr
//!            | IDENT "=" expr
//!            | IDENT "(" args? ")"
//! expr      := term (("+" | "-") term)*
//! term      := unary (("*" | "/") unary)*
//! unary     := "-" unary | primary
//! primary   := NUMBER | "pi" | IDENT "." AXIS | IDENT "(" args? ")" | IDENT | "(" expr ")"
//! ```

use super::ast::{Axis, BinOp, Expr, SkillProgram, Statement, StmtKind};
use super::error::ExecError;
use super::lexer::{tokenize, Tok, Token};

pub fn parse(source: &str) -> Result<SkillProgram, ExecError> {
    let tokens = tokenize(source)?;
    Parser { tokens, pos: 0 }.program()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, what: &str) -> ExecError {
        let t = self.peek();
        ExecError::parse(format!("expected {what}, found {}", t.tok.describe()), t.line, t.col)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, ExecError> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Token), ExecError> {
        match &self.peek().tok {
            Tok::Ident(name) => {
                let name = name.clone();
                Ok((name, self.bump()))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn program(mut self) -> Result<SkillProgram, ExecError> {
        let mut statements = Vec::new();
        loop {
            match self.peek().tok {
                Tok::Eof => break,
                Tok::Newline => {
                    self.bump();
                }
                _ => {
                    statements.push(self.statement()?);
                    match self.peek().tok {
                        Tok::Newline | Tok::Eof => {}
                        _ => return Err(self.unexpected("end of line")),
                    }
                }
            }
        }
        Ok(SkillProgram::new(statements))
    }

    fn statement(&mut self) -> Result<Statement, ExecError> {
        let line = self.peek().line;
        let kind = if self.peek().tok == Tok::Let {
            self.bump();
            let (name, tok) = self.ident("variable name after `let`")?;
            self.assignment(name, &tok)?
        } else {
            let (name, tok) = self.ident("statement")?;
            match self.peek().tok {
                Tok::Eq => self.assignment(name, &tok)?,
                Tok::LParen => {
                    let args = self.call_args()?;
                    StmtKind::SkillCall(name, args)
                }
                _ => return Err(self.unexpected("`=` or `(`")),
            }
        };
        Ok(Statement { kind, line })
    }

    fn assignment(&mut self, name: String, at: &Token) -> Result<StmtKind, ExecError> {
        if name == "pi" {
            return Err(ExecError::parse("cannot assign to constant `pi`", at.line, at.col));
        }
        self.expect(Tok::Eq, "`=`")?;
        let value = self.expr()?;
        Ok(StmtKind::Assign(name, value))
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, ExecError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek().tok == Tok::RParen {
            self.bump();
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            match self.peek().tok {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    return Ok(args);
                }
                _ => return Err(self.unexpected("`,` or `)`")),
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, ExecError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ExecError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ExecError> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            return Ok(Expr::neg(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ExecError> {
        match self.peek().tok.clone() {
            Tok::Number(v) => {
                self.bump();
                Ok(Expr::Number(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let tok = self.bump();
                match self.peek().tok {
                    Tok::LParen => Ok(Expr::Call(name, self.call_args()?)),
                    Tok::Dot => {
                        self.bump();
                        let field_tok = self.peek().clone();
                        let (field, _) = self.ident("field name")?;
                        let axis = Axis::from_name(&field).ok_or_else(|| {
                            ExecError::parse(
                                format!("unknown field `{field}`; expected x, y or z"),
                                field_tok.line,
                                field_tok.col,
                            )
                        })?;
                        if name == "pi" {
                            return Err(ExecError::parse("`pi` has no fields", tok.line, tok.col));
                        }
                        Ok(Expr::Field(name, axis))
                    }
                    _ if name == "pi" => Ok(Expr::Pi),
                    _ => Ok(Expr::Var(name)),
                }
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skillscript::ErrorCategory;

    #[test]
    fn minimal_program() {
        let p = parse("takeoff()\nfly_to(0, 0, -5)").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.statements[0].kind, StmtKind::SkillCall("takeoff".into(), vec![]));
        assert_eq!(
            p.statements[1].kind,
            StmtKind::SkillCall("fly_to".into(), vec![Expr::num(0.0), Expr::num(0.0), Expr::neg(Expr::num(5.0))])
        );
        assert_eq!(p.statements[1].line, 2);
    }

    #[test]
    fn assignment_and_field_access() {
        let p = parse("pos = get_drone_position()\nfly_to(pos.x, pos.y, pos.z + 5)").unwrap();
        assert_eq!(p.statements[0].kind, StmtKind::Assign("pos".into(), Expr::call("get_drone_position", vec![])));
        assert_eq!(
            p.statements[1].kind,
            StmtKind::SkillCall(
                "fly_to".into(),
                vec![
                    Expr::field("pos", Axis::X),
                    Expr::field("pos", Axis::Y),
                    Expr::add(Expr::field("pos", Axis::Z), Expr::num(5.0)),
                ]
            )
        );
    }

    #[test]
    fn let_and_bare_assignment_are_equal() {
        assert_eq!(parse("let a = 1").unwrap(), parse("a = 1").unwrap());
    }

    #[test]
    fn precedence_and_associativity() {
        let p = parse("v = -a * b - c - d / e / f").unwrap();
        let StmtKind::Assign(_, e) = &p.statements[0].kind else { panic!() };
        let expected = Expr::sub(
            Expr::sub(Expr::mul(Expr::neg(Expr::var("a")), Expr::var("b")), Expr::var("c")),
            Expr::binary(BinOp::Div, Expr::binary(BinOp::Div, Expr::var("d"), Expr::var("e")), Expr::var("f")),
        );
        assert_eq!(e, &expected);
    }

    #[test]
    fn pi_constant() {
        let p = parse("a = pi / 2").unwrap();
        let StmtKind::Assign(_, e) = &p.statements[0].kind else { panic!() };
        assert_eq!(e, &Expr::binary(BinOp::Div, Expr::Pi, Expr::num(2.0)));
        assert!(parse("pi = 3").is_err());
        assert!(parse("let pi = 3").is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let p = parse("# header\n\n  takeoff()   # up we go\n\r\n").unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.statements[0].line, 3);
    }

    #[test]
    fn unterminated_call() {
        let err = parse("fly_to(").unwrap_err();
        assert_eq!(err.category, ErrorCategory::ParseError);
        assert_eq!(err.location.map(|l| l.0), Some(1));
    }

    #[test]
    fn grammar_violations() {
        for src in [
            "takeoff() land()",
            "x = ",
            "let = 3",
            "fly_to(1,,2)",
            "p.w = 3",
            "x = p.w",
            "x = (1 + 2",
            "5 = x",
            "takeoff",
            "x = 1 2",
            "x = pi.x",
            "Sure! Here is the code.",
        ] {
            let err = parse(src).unwrap_err();
            assert_eq!(err.category, ErrorCategory::ParseError, "{src}");
            assert!(err.location.is_some(), "{src}");
        }
    }

    #[test]
    fn error_column_points_at_token() {
        let err = parse("takeoff()\nfly_to(1, 2 3)").unwrap_err();
        assert_eq!(err.location, Some((2, 13)));
    }
}
