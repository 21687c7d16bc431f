//! Tree-walking interpreter with a supervisor watchdog.
//!
//! Builtin functions are recognised by name: `add`, `sub`, `mul`, `div`
//! (protected), `if_greater` (lazy in its two branches) and `seq`. Every other
//! terminal or function is resolved through the [`Environment`].

use thiserror::Error;

use crate::program::{Category, Node, NodeKind, ProgramTree, Sort};

/// Result of protected division when the divisor is zero.
pub const PROTECTED_DIV_SENTINEL: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Number(f64),
    Bool(bool),
    Point(f64, f64),
    /// Result of an Action-sorted node.
    Unit,
}

impl Value {
    pub fn as_number(self) -> f64 {
        match self {
            Value::Number(x) => x,
            Value::Bool(b) => f64::from(u8::from(b)),
            Value::Point(..) | Value::Unit => 0.0,
        }
    }
}

/// Application-side bindings used while a program runs.
pub trait Environment {
    /// Value of a terminal. Action-sorted terminals perform their side effect
    /// here and return [`Value::Unit`]. `None` means the terminal is unbound.
    fn terminal(&mut self, kind: &NodeKind) -> Option<Value>;

    /// Non-builtin function. `None` means the function is unbound.
    fn call(&mut self, _kind: &NodeKind, _args: &[Value]) -> Option<Value> {
        None
    }

    /// Virtual clock in seconds.
    fn clock(&self) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupervisorPolicy {
    /// Node evaluations allowed per run (at least 1).
    pub max_steps: u64,
    /// Virtual seconds allowed per run, measured on [`Environment::clock`].
    pub max_virtual_time: f64,
}

impl SupervisorPolicy {
    pub fn steps(max_steps: u64) -> Self {
        Self {
            max_steps: max_steps.max(1),
            max_virtual_time: f64::INFINITY,
        }
    }
}

impl Default for SupervisorPolicy {
    fn default() -> Self {
        Self::steps(10_000)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Killed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub value: Option<Value>,
    pub steps_used: u64,
    /// Names of Action-sorted nodes executed, in order (partial when killed).
    pub actions: Vec<String>,
}

impl RunOutcome {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error("terminal `{0}` has no binding in this environment")]
    UnboundTerminal(String),
    #[error("function `{0}` has no binding in this environment")]
    UnboundFunction(String),
}

enum Halt {
    Killed,
    Error(InterpError),
}

struct Run<'e, E: Environment + ?Sized> {
    env: &'e mut E,
    policy: SupervisorPolicy,
    started: f64,
    steps: u64,
    actions: Vec<String>,
}

/// Runs `tree` depth-first against `env` under `policy`.
///
/// Returns `Err` only for configuration problems (unbound primitives);
/// exceeding the step or time budget yields a `Killed` outcome.
pub fn execute<E: Environment + ?Sized>(
    tree: &ProgramTree,
    env: &mut E,
    policy: SupervisorPolicy,
) -> Result<RunOutcome, InterpError> {
    let started = env.clock();
    let mut run = Run {
        env,
        policy,
        started,
        steps: 0,
        actions: Vec::new(),
    };
    let result = run.eval(tree.root());
    let (status, value) = match result {
        Ok(v) => (RunStatus::Completed, Some(v)),
        Err(Halt::Killed) => (RunStatus::Killed, None),
        Err(Halt::Error(e)) => return Err(e),
    };
    Ok(RunOutcome {
        status,
        value,
        steps_used: run.steps,
        actions: run.actions,
    })
}

fn sanitize(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(f64::MIN, f64::MAX)
    }
}

impl<E: Environment + ?Sized> Run<'_, E> {
    fn tick(&mut self) -> Result<(), Halt> {
        if self.steps >= self.policy.max_steps {
            return Err(Halt::Killed);
        }
        if self.env.clock() - self.started > self.policy.max_virtual_time {
            return Err(Halt::Killed);
        }
        self.steps += 1;
        Ok(())
    }

    fn eval(&mut self, node: &Node) -> Result<Value, Halt> {
        self.tick()?;
        let kind = &node.kind;
        match kind.category {
            Category::Constant => {
                let v = node.value.unwrap_or_default();
                Ok(match kind.result {
                    Sort::Boolean => Value::Bool(v != 0.0),
                    _ => Value::Number(v),
                })
            }
            Category::Terminal => {
                let value = self
                    .env
                    .terminal(kind)
                    .ok_or_else(|| Halt::Error(InterpError::UnboundTerminal(kind.name.clone())))?;
                self.record(kind);
                Ok(value)
            }
            Category::Function => self.apply(node),
        }
    }

    fn record(&mut self, kind: &NodeKind) {
        if kind.result == Sort::Action {
            self.actions.push(kind.name.clone());
        }
    }

    fn number(&mut self, node: &Node) -> Result<f64, Halt> {
        self.eval(node).map(Value::as_number)
    }

    fn apply(&mut self, node: &Node) -> Result<Value, Halt> {
        let kind = &node.kind;
        let c = &node.children;
        let arith = |x: f64| Ok(Value::Number(sanitize(x)));
        match (kind.name.as_str(), c.len()) {
            ("add", 2) => arith(self.number(&c[0])? + self.number(&c[1])?),
            ("sub", 2) => arith(self.number(&c[0])? - self.number(&c[1])?),
            ("mul", 2) => arith(self.number(&c[0])? * self.number(&c[1])?),
            ("div", 2) => {
                let num = self.number(&c[0])?;
                let den = self.number(&c[1])?;
                if den == 0.0 {
                    Ok(Value::Number(PROTECTED_DIV_SENTINEL))
                } else {
                    arith(num / den)
                }
            }
            ("if_greater", 4) => {
                let lhs = self.number(&c[0])?;
                let rhs = self.number(&c[1])?;
                self.eval(if lhs > rhs { &c[2] } else { &c[3] })
            }
            ("seq", n) if n > 0 => {
                let mut last = Value::Unit;
                for child in c {
                    last = self.eval(child)?;
                }
                Ok(last)
            }
            _ => {
                let args = c
                    .iter()
                    .map(|child| self.eval(child))
                    .collect::<Result<Vec<_>, _>>()?;
                let value = self.env.call(kind, &args).ok_or_else(|| {
                    Halt::Error(InterpError::UnboundFunction(kind.name.clone()))
                })?;
                self.record(kind);
                Ok(value)
            }
        }
    }
}
