//! SkillScript: the small line-oriented command language generated code is
//! written in.
//!
//! A program is a list of statements, one per line. Each statement is either
//! an assignment (`let x = expr` or `x = expr`) or a skill call
//! (`fly_to(x, y, z)`). `#` starts a comment. Expressions support numbers,
//! variables, `pos.x`-style field access on positions, unary minus, the four
//! arithmetic operators, `pi` and a fixed set of math functions.
//!
//! There are no loops, conditionals or user-defined functions.

mod ast;
mod error;
mod interp;
mod lexer;
mod parser;
mod printer;

pub use ast::{Axis, BinOp, Expr, SkillProgram, Statement, StmtKind};
pub use error::{ErrorCategory, ExecError};
pub use interp::{
    interpret, is_math_function, is_skill, Interpreter, Limits, Value, DEFAULT_STEP_LIMIT, MATH_FUNCTIONS, SKILLS,
};
pub use parser::parse;
pub use printer::{pretty_print, print_expr};

/// Remove `#` comments and comment-only lines, keeping everything else
/// byte-for-byte. Trailing whitespace left by an inline comment is trimmed.
pub fn strip_comments(source: &str) -> String {
    let mut out: Vec<&str> = Vec::new();
    for line in source.lines() {
        match line.find('#') {
            Some(idx) => {
                let code = line[..idx].trim_end();
                if !code.is_empty() {
                    out.push(code);
                }
            }
            None => out.push(line),
        }
    }
    let mut s = out.join("\n");
    if source.ends_with('\n') && !s.is_empty() {
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_comments_keeps_code() {
        let src = "# step 1: climb\ntakeoff()  # now airborne\np = get_drone_position()\n";
        assert_eq!(strip_comments(src), "takeoff()\np = get_drone_position()\n");
        assert_eq!(parse(&strip_comments(src)).unwrap(), parse(src).unwrap());
        assert_eq!(strip_comments("# only\n"), "");
    }
}
