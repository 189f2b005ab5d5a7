use std::collections::HashMap;

use crate::dronesim::{SimError, Simulator};

use super::ast::{BinOp, Expr, SkillProgram, StmtKind};
use super::error::{ErrorCategory, ExecError};

pub const DEFAULT_STEP_LIMIT: usize = 1000;

/// The closed set of drone skills a program may call.
pub const SKILLS: [&str; 6] = ["takeoff", "land", "get_yaw", "set_yaw", "fly_to", "get_drone_position"];

/// Math functions available inside expressions. Trig works in radians.
pub const MATH_FUNCTIONS: [&str; 10] =
    ["sin", "cos", "tan", "atan2", "sqrt", "abs", "min", "max", "radians", "degrees"];

pub fn is_skill(name: &str) -> bool {
    SKILLS.contains(&name)
}

pub fn is_math_function(name: &str) -> bool {
    MATH_FUNCTIONS.contains(&name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub step_limit: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { step_limit: DEFAULT_STEP_LIMIT }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Number(f64),
    Vec3([f64; 3]),
    Unit,
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Number(_) => "number",
            Value::Vec3(_) => "position",
            Value::Unit => "unit",
        }
    }
}

fn finite(v: f64, what: &str) -> Result<f64, ExecError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ExecError::runtime(format!("{what} produced a non-finite value")))
    }
}

fn sim_err(skill: &str, e: SimError) -> ExecError {
    ExecError::runtime(format!("{skill}: {e}"))
}

/// Runs programs against one simulator with a flat variable scope.
pub struct Interpreter<'s> {
    sim: &'s mut Simulator,
    limits: Limits,
    env: HashMap<String, Value>,
    steps: usize,
}

impl<'s> Interpreter<'s> {
    pub fn new(sim: &'s mut Simulator, limits: Limits) -> Self {
        Interpreter { sim, limits, env: HashMap::new(), steps: 0 }
    }

    pub fn env(&self) -> &HashMap<String, Value> {
        &self.env
    }

    pub fn variable(&self, name: &str) -> Option<Value> {
        self.env.get(name).copied()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn run(&mut self, program: &SkillProgram) -> Result<(), ExecError> {
        for stmt in &program.statements {
            if self.steps >= self.limits.step_limit {
                return Err(ExecError::new(
                    ErrorCategory::StepLimitExceeded,
                    format!("program exceeded the limit of {} statements", self.limits.step_limit),
                )
                .at_line_if_unset(stmt.line));
            }
            self.steps += 1;
            let result = match &stmt.kind {
                StmtKind::Assign(name, expr) => self.eval(expr).map(|v| {
                    self.env.insert(name.clone(), v);
                }),
                StmtKind::SkillCall(name, args) => {
                    if !is_skill(name) {
                        Err(ExecError::unknown_function(name))
                    } else {
                        self.call_skill(name, args).map(|_| ())
                    }
                }
            };
            result.map_err(|e| e.at_line_if_unset(stmt.line))?;
        }
        Ok(())
    }

    pub fn eval(&mut self, expr: &Expr) -> Result<Value, ExecError> {
        match expr {
            Expr::Number(v) => Ok(Value::Number(finite(*v, "literal")?)),
            Expr::Pi => Ok(Value::Number(std::f64::consts::PI)),
            Expr::Var(name) => {
                self.env.get(name).copied().ok_or_else(|| ExecError::runtime(format!("undefined variable `{name}`")))
            }
            Expr::Field(base, axis) => match self.env.get(base) {
                Some(Value::Vec3(v)) => Ok(Value::Number(v[*axis as usize])),
                Some(other) => {
                    Err(ExecError::runtime(format!("field access `.{}` on a {} value", axis.name(), other.type_name())))
                }
                None => Err(ExecError::runtime(format!("undefined variable `{base}`"))),
            },
            Expr::Neg(inner) => {
                let v = self.number(inner, "operand of `-`")?;
                Ok(Value::Number(-v))
            }
            Expr::Binary(op, l, r) => {
                let a = self.number(l, "left operand")?;
                let b = self.number(r, "right operand")?;
                let v = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                };
                Ok(Value::Number(finite(v, op.symbol())?))
            }
            Expr::Call(name, args) => {
                if is_math_function(name) {
                    self.call_math(name, args)
                } else if is_skill(name) {
                    self.call_skill(name, args)
                } else {
                    Err(ExecError::unknown_function(name))
                }
            }
        }
    }

    fn number(&mut self, expr: &Expr, what: &str) -> Result<f64, ExecError> {
        match self.eval(expr)? {
            Value::Number(v) => Ok(v),
            other => Err(ExecError::runtime(format!("{what} must be a number, got {}", other.type_name()))),
        }
    }

    fn numbers(&mut self, name: &str, args: &[Expr], arity: &[usize]) -> Result<Vec<f64>, ExecError> {
        if !arity.contains(&args.len()) {
            let expected = arity.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" or ");
            return Err(ExecError::runtime(format!("{name} expects {expected} argument(s), got {}", args.len())));
        }
        args.iter().enumerate().map(|(i, a)| self.number(a, &format!("argument {} of {name}", i + 1))).collect()
    }

    fn call_math(&mut self, name: &str, args: &[Expr]) -> Result<Value, ExecError> {
        let binary = matches!(name, "atan2" | "min" | "max");
        let a = self.numbers(name, args, if binary { &[2] } else { &[1] })?;
        let v = match name {
            "sin" => a[0].sin(),
            "cos" => a[0].cos(),
            "tan" => a[0].tan(),
            "sqrt" => a[0].sqrt(),
            "abs" => a[0].abs(),
            "radians" => a[0].to_radians(),
            "degrees" => a[0].to_degrees(),
            "atan2" => a[0].atan2(a[1]),
            "min" => a[0].min(a[1]),
            "max" => a[0].max(a[1]),
            _ => unreachable!("checked by is_math_function"),
        };
        Ok(Value::Number(finite(v, name)?))
    }

    fn call_skill(&mut self, name: &str, args: &[Expr]) -> Result<Value, ExecError> {
        match name {
            "takeoff" => {
                self.numbers(name, args, &[0])?;
                self.sim.takeoff().map_err(|e| sim_err(name, e))?;
                Ok(Value::Unit)
            }
            "land" => {
                self.numbers(name, args, &[0])?;
                self.sim.land().map_err(|e| sim_err(name, e))?;
                Ok(Value::Unit)
            }
            "get_yaw" => {
                self.numbers(name, args, &[0])?;
                Ok(Value::Number(self.sim.get_yaw()))
            }
            "get_drone_position" => {
                self.numbers(name, args, &[0])?;
                Ok(Value::Vec3(self.sim.get_drone_position()))
            }
            "fly_to" => {
                // optional 4th argument (speed) is evaluated and ignored
                let a = self.numbers(name, args, &[3, 4])?;
                self.sim.fly_to(a[0], a[1], a[2]).map_err(|e| sim_err(name, e))?;
                Ok(Value::Unit)
            }
            "set_yaw" => {
                let a = self.numbers(name, args, &[1])?;
                self.sim.set_yaw(a[0]).map_err(|e| sim_err(name, e))?;
                Ok(Value::Unit)
            }
            _ => Err(ExecError::unknown_function(name)),
        }
    }
}

/// Execute `program` on `sim`. The simulator keeps whatever was logged
/// before a failure.
pub fn interpret(program: &SkillProgram, sim: &mut Simulator, limits: Limits) -> Result<(), ExecError> {
    Interpreter::new(sim, limits).run(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dronesim::StateTransition;
    use crate::skillscript::{parse, Statement};

    fn run(src: &str) -> (Result<(), ExecError>, Simulator) {
        let mut sim = Simulator::default();
        let r = interpret(&parse(src).unwrap(), &mut sim, Limits::default());
        (r, sim)
    }

    fn category(src: &str) -> ErrorCategory {
        run(src).0.unwrap_err().category
    }

    #[test]
    fn happy_path() {
        let (r, sim) = run("takeoff()\nfly_to(0,0,-6.5)");
        r.unwrap();
        assert_eq!(sim.log(), &[StateTransition::movement(0.0, 0.0, -5.0)]);
    }

    #[test]
    fn relative_move_via_position() {
        let (r, sim) = run("takeoff()\npos = get_drone_position()\nfly_to(pos.x, pos.y, pos.z + 5)");
        r.unwrap();
        assert_eq!(sim.log(), &[StateTransition::movement(0.0, 0.0, 5.0)]);
    }

    #[test]
    fn unknown_functions() {
        assert_eq!(category("hover_magic()"), ErrorCategory::UnknownFunction);
        assert_eq!(category("x = hover_magic()"), ErrorCategory::UnknownFunction);
        assert_eq!(category("sin(1)"), ErrorCategory::UnknownFunction);
        assert_eq!(category("x = exp(1)"), ErrorCategory::UnknownFunction);
    }

    #[test]
    fn step_limit() {
        let src = "x = 1\n".repeat(2000);
        let mut sim = Simulator::default();
        let err = interpret(&parse(&src).unwrap(), &mut sim, Limits { step_limit: 1000 }).unwrap_err();
        assert_eq!(err.category, ErrorCategory::StepLimitExceeded);
        assert_eq!(err.location, Some((1001, 0)));
        let src = "x = 1\n".repeat(1000);
        interpret(&parse(&src).unwrap(), &mut sim, Limits { step_limit: 1000 }).unwrap();
    }

    #[test]
    fn runtime_errors() {
        for src in [
            "fly_to(1, 2, 3)",
            "takeoff()\ntakeoff()",
            "land()",
            "takeoff()\nfly_to(1, 2)",
            "takeoff()\nfly_to(1, 2, 3, 4, 5)",
            "x = 1 / 0",
            "x = sqrt(-1)",
            "x = takeoff() + 1",
            "p = get_drone_position()\nx = p + 1",
            "x = 3\ny = x.z",
            "y = q.x",
            "y = zz",
            "takeoff(1)",
            "x = sin(1, 2)",
            "takeoff()\nset_yaw(get_drone_position())",
        ] {
            assert_eq!(category(src), ErrorCategory::RuntimeError, "{src}");
        }
    }

    #[test]
    fn halts_at_first_error_keeping_log() {
        let (r, sim) = run("takeoff()\nfly_to(1, 0, -1.5)\nboom()\nfly_to(2, 0, -1.5)");
        assert_eq!(r.unwrap_err().location, Some((3, 0)));
        assert_eq!(sim.log().len(), 1);
    }

    #[test]
    fn speed_argument_ignored() {
        let (r, sim) = run("takeoff()\nfly_to(3, 0, -1.5, 2)");
        r.unwrap();
        assert_eq!(sim.log(), &[StateTransition::movement(3.0, 0.0, 0.0)]);
    }

    #[test]
    fn math_functions() {
        let mut sim = Simulator::default();
        let prog = parse(
            "a = degrees(atan2(1, 1))\nb = max(2, min(5, 3))\nc = abs(-2) * sqrt(16)\nd = cos(pi)\ne = radians(180) - pi",
        )
        .unwrap();
        let mut it = Interpreter::new(&mut sim, Limits::default());
        it.run(&prog).unwrap();
        assert_eq!(it.variable("a"), Some(Value::Number(45.0)));
        assert_eq!(it.variable("b"), Some(Value::Number(3.0)));
        assert_eq!(it.variable("c"), Some(Value::Number(8.0)));
        assert_eq!(it.variable("d"), Some(Value::Number(-1.0)));
        assert_eq!(it.variable("e"), Some(Value::Number(0.0)));
        assert_eq!(it.steps(), 5);
    }

    #[test]
    fn yaw_round_trip() {
        let (r, sim) = run("takeoff()\ny = get_yaw()\nset_yaw(y + 90)\nset_yaw(get_yaw() + 180)");
        r.unwrap();
        assert_eq!(sim.log(), &[StateTransition::rotation(90.0), StateTransition::rotation(180.0)]);
        assert_eq!(sim.get_yaw(), -90.0);
    }

    #[test]
    fn programmatic_program() {
        let prog = SkillProgram::new(vec![Statement::call("takeoff", vec![]), Statement::call("land", vec![])]);
        let mut sim = Simulator::default();
        interpret(&prog, &mut sim, Limits::default()).unwrap();
        assert!(!sim.state().airborne);
    }
}
