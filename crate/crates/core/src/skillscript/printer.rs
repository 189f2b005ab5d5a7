use super::ast::{Expr, SkillProgram, StmtKind};

/// Canonical text for a program: one statement per line, assignments as
/// `let name = expr`, single spaces around binary operators and minimal
/// parentheses.
pub fn pretty_print(program: &SkillProgram) -> String {
    let mut out = String::new();
    for (i, stmt) in program.statements.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match &stmt.kind {
            StmtKind::Assign(name, value) => {
                out.push_str("let ");
                out.push_str(name);
                out.push_str(" = ");
                write_expr(&mut out, value);
            }
            StmtKind::SkillCall(name, args) => write_call(&mut out, name, args),
        }
    }
    out
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

const PREC_UNARY: u8 = 3;
const PREC_ATOM: u8 = 4;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, _, _) => op.precedence(),
        Expr::Neg(_) => PREC_UNARY,
        _ => PREC_ATOM,
    }
}

fn write_wrapped(out: &mut String, e: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_call(out: &mut String, name: &str, args: &[Expr]) {
    out.push_str(name);
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, a);
    }
    out.push(')');
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Number(v) => out.push_str(&v.to_string()),
        Expr::Var(name) => out.push_str(name),
        Expr::Field(base, axis) => {
            out.push_str(base);
            out.push('.');
            out.push_str(axis.name());
        }
        Expr::Pi => out.push_str("pi"),
        Expr::Neg(inner) => {
            out.push('-');
            write_wrapped(out, inner, precedence(inner) < PREC_UNARY);
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            write_wrapped(out, l, precedence(l) < p);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            // left-associative: an equal-precedence right operand needs parens
            write_wrapped(out, r, precedence(r) <= p);
        }
        Expr::Call(name, args) => write_call(out, name, args),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skillscript::parse;

    #[test]
    fn identity_on_simple_call() {
        assert_eq!(pretty_print(&parse("takeoff()").unwrap()), "takeoff()");
    }

    #[test]
    fn canonical_assignment() {
        assert_eq!(pretty_print(&parse("x=1+2").unwrap()), "let x = 1 + 2");
        assert_eq!(pretty_print(&parse("let   x   =   1+2").unwrap()), "let x = 1 + 2");
    }

    #[test]
    fn minimal_parentheses() {
        let cases = [
            ("a = (1 + 2) * 3", "let a = (1 + 2) * 3"),
            ("a = 1 - (2 - 3)", "let a = 1 - (2 - 3)"),
            ("a = (1 - 2) - 3", "let a = 1 - 2 - 3"),
            ("a = -(1 + b)", "let a = -(1 + b)"),
            ("a = --b", "let a = --b"),
            ("a = -p.x * 2", "let a = -p.x * 2"),
            ("a = 8 / (4 / 2)", "let a = 8 / (4 / 2)"),
            ("fly_to(p.x+1,p.y,p.z - 2.5)", "fly_to(p.x + 1, p.y, p.z - 2.5)"),
            ("a = sin(radians(30)) * pi", "let a = sin(radians(30)) * pi"),
        ];
        for (src, want) in cases {
            let p = parse(src).unwrap();
            let printed = pretty_print(&p);
            assert_eq!(printed, want);
            assert_eq!(parse(&printed).unwrap(), p);
        }
    }

    #[test]
    fn comments_are_dropped() {
        let p = parse("# step 1\ntakeoff()\n\n# step 2\nland()").unwrap();
        assert_eq!(pretty_print(&p), "takeoff()\nland()");
    }
}
