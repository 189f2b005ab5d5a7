use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn from_name(s: &str) -> Option<Axis> {
        match s {
            "x" => Some(Axis::X),
            "y" => Some(Axis::Y),
            "z" => Some(Axis::Z),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Var(String),
    Field(String, Axis),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    Pi,
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Number(v)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn field(base: impl Into<String>, axis: Axis) -> Expr {
        Expr::Field(base.into(), axis)
    }

    pub fn call(name: impl Into<String>, args: Vec<Expr>) -> Expr {
        Expr::Call(name.into(), args)
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn add(l: Expr, r: Expr) -> Expr {
        Expr::binary(BinOp::Add, l, r)
    }

    pub fn sub(l: Expr, r: Expr) -> Expr {
        Expr::binary(BinOp::Sub, l, r)
    }

    pub fn mul(l: Expr, r: Expr) -> Expr {
        Expr::binary(BinOp::Mul, l, r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign(String, Expr),
    SkillCall(String, Vec<Expr>),
}

/// A statement plus the 1-based source line it came from.
///
/// Equality compares the statement only; the line is diagnostic metadata.
#[derive(Debug, Clone)]
pub struct Statement {
    pub kind: StmtKind,
    pub line: usize,
}

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Statement {
    pub fn new(kind: StmtKind) -> Self {
        Statement { kind, line: 0 }
    }

    pub fn assign(name: impl Into<String>, value: Expr) -> Self {
        Statement::new(StmtKind::Assign(name.into(), value))
    }

    pub fn call(name: impl Into<String>, args: Vec<Expr>) -> Self {
        Statement::new(StmtKind::SkillCall(name.into(), args))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SkillProgram {
    pub statements: Vec<Statement>,
}

impl SkillProgram {
    pub fn new(statements: Vec<Statement>) -> Self {
        SkillProgram { statements }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }
}

impl fmt::Display for SkillProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::pretty_print(self))
    }
}
