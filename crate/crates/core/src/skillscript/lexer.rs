use super::error::ExecError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    Let,
    LParen,
    RParen,
    Comma,
    Dot,
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(v) => format!("number `{v}`"),
            Tok::Let => "`let`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, ExecError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    while i < chars.len() {
        let c = chars[i];
        let start_col = col;
        let push = |out: &mut Vec<Token>, tok: Tok| out.push(Token { tok, line, col: start_col });
        match c {
            '\n' => {
                push(&mut out, Tok::Newline);
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            '\r' if chars.get(i + 1) == Some(&'\n') => {
                i += 1;
                col += 1;
                continue;
            }
            ' ' | '\t' => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                    col += 1;
                }
                continue;
            }
            '(' => push(&mut out, Tok::LParen),
            ')' => push(&mut out, Tok::RParen),
            ',' => push(&mut out, Tok::Comma),
            '+' => push(&mut out, Tok::Plus),
            '-' => push(&mut out, Tok::Minus),
            '*' => push(&mut out, Tok::Star),
            '/' => push(&mut out, Tok::Slash),
            '=' => push(&mut out, Tok::Eq),
            '.' if !chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) => push(&mut out, Tok::Dot),
            c if c.is_ascii_digit() || c == '.' => {
                let begin = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text: String = chars[begin..i].iter().collect();
                let value: f64 = text
                    .parse()
                    .map_err(|_| ExecError::parse(format!("malformed number `{text}`"), line, start_col))?;
                if !value.is_finite() {
                    return Err(ExecError::parse(format!("number `{text}` is out of range"), line, start_col));
                }
                if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                    return Err(ExecError::parse(
                        format!("unexpected character `{}` after number", chars[i]),
                        line,
                        col + (i - begin),
                    ));
                }
                out.push(Token { tok: Tok::Number(value), line, col: start_col });
                col += i - begin;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let begin = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let text: String = chars[begin..i].iter().collect();
                let tok = if text == "let" { Tok::Let } else { Tok::Ident(text) };
                out.push(Token { tok, line, col: start_col });
                col += i - begin;
                continue;
            }
            other => {
                return Err(ExecError::parse(format!("unexpected character `{other}`"), line, start_col));
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_and_fields() {
        assert_eq!(
            kinds("p.x + 2.5e1 - .5"),
            vec![
                Tok::Ident("p".into()),
                Tok::Dot,
                Tok::Ident("x".into()),
                Tok::Plus,
                Tok::Number(25.0),
                Tok::Minus,
                Tok::Number(0.5),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_crlf() {
        assert_eq!(
            kinds("takeoff() # go\r\n# only comment\r\n"),
            vec![Tok::Ident("takeoff".into()), Tok::LParen, Tok::RParen, Tok::Newline, Tok::Newline, Tok::Eof]
        );
    }

    #[test]
    fn bad_characters_report_position() {
        let err = tokenize("fly_to(1, 2)\n  x = 3 $ 4").unwrap_err();
        assert_eq!(err.location, Some((2, 9)));
        assert!(tokenize("x = 1e999").is_err());
        assert!(tokenize("x = 3abc").is_err());
        assert!(tokenize("I'm sorry").is_err());
    }
}
