//! Guards and effects for program-graph transitions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::cond::MessageCondition;
use crate::error::ModelError;
use crate::value::{Message, Scalar};

/// The variable store of a running channel system: every variable holds a
/// whole message.
pub type Evaluation = BTreeMap<String, Message>;

/// A Boolean condition over variables, built from message conditions on
/// single variables and the usual connectives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Guard {
    True,
    /// The message condition evaluated against the named variable's value.
    Test { var: String, cond: MessageCondition },
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    pub fn test(var: impl Into<String>, cond: MessageCondition) -> Self {
        Guard::Test {
            var: var.into(),
            cond,
        }
    }

    /// Shorthand for `var[part] op rhs`.
    pub fn cmp(
        var: impl Into<String>,
        part: usize,
        op: crate::value::RelOp,
        rhs: Scalar,
    ) -> Self {
        Guard::test(var, MessageCondition::cmp(part, op, rhs))
    }

    pub fn and(a: Guard, b: Guard) -> Guard {
        Guard::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Guard, b: Guard) -> Guard {
        Guard::Or(Box::new(a), Box::new(b))
    }

    pub fn negate(a: Guard) -> Guard {
        Guard::Not(Box::new(a))
    }

    /// An undeclared variable makes the test false rather than an error;
    /// system construction checks that guards only mention declared names.
    pub fn eval(&self, vars: &Evaluation) -> bool {
        match self {
            Guard::True => true,
            Guard::Test { var, cond } => cond.eval(vars.get(var)),
            Guard::Not(g) => !g.eval(vars),
            Guard::And(a, b) => a.eval(vars) && b.eval(vars),
            Guard::Or(a, b) => a.eval(vars) || b.eval(vars),
        }
    }

    pub(crate) fn visit_vars(&self, f: &mut impl FnMut(&str)) {
        match self {
            Guard::True => {}
            Guard::Test { var, .. } => f(var),
            Guard::Not(g) => g.visit_vars(f),
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    pub(crate) fn rename_vars(&mut self, f: &impl Fn(&str) -> String) {
        match self {
            Guard::True => {}
            Guard::Test { var, .. } => *var = f(var),
            Guard::Not(g) => g.rename_vars(f),
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.rename_vars(f);
                b.rename_vars(f);
            }
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::True => write!(f, "true"),
            Guard::Test { var, cond } => write!(f, "{}", DisplayOn(var, cond)),
            Guard::Not(g) => write!(f, "not ({g})"),
            Guard::And(a, b) => write!(f, "({a}) and ({b})"),
            Guard::Or(a, b) => write!(f, "({a}) or ({b})"),
        }
    }
}

/// Prints `cond` with `m[...]` rewritten to `var[...]`.
struct DisplayOn<'a>(&'a str, &'a MessageCondition);

impl fmt::Display for DisplayOn<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.1 {
            MessageCondition::True => write!(f, "true"),
            MessageCondition::Cmp { part, op, rhs } => {
                write!(f, "{}[{part}] {op} {rhs}", self.0)
            }
            MessageCondition::Not(c) => write!(f, "not ({})", DisplayOn(self.0, c)),
            MessageCondition::And(a, b) => write!(
                f,
                "({}) and ({})",
                DisplayOn(self.0, a),
                DisplayOn(self.0, b)
            ),
            MessageCondition::Or(a, b) => {
                write!(f, "({}) or ({})", DisplayOn(self.0, a), DisplayOn(self.0, b))
            }
        }
    }
}

/// Integer/scalar expressions used by assignment effects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(Scalar),
    /// 1-based part of a variable's current message.
    Part { var: String, index: usize },
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Const(Scalar::Int(n))
    }

    pub fn part(var: impl Into<String>, index: usize) -> Expr {
        Expr::Part {
            var: var.into(),
            index,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn eval(&self, vars: &Evaluation) -> Result<Scalar, ModelError> {
        match self {
            Expr::Const(s) => Ok(s.clone()),
            Expr::Part { var, index } => vars
                .get(var)
                .and_then(|m| m.part(*index))
                .cloned()
                .ok_or_else(|| {
                    ModelError::EffectFailed(format!("no part {index} in variable {var}"))
                }),
            Expr::Add(a, b) => arith(a.eval(vars)?, b.eval(vars)?, "+", i64::checked_add),
            Expr::Sub(a, b) => arith(a.eval(vars)?, b.eval(vars)?, "-", i64::checked_sub),
        }
    }

    fn visit_vars(&self, f: &mut impl FnMut(&str)) {
        match self {
            Expr::Const(_) => {}
            Expr::Part { var, .. } => f(var),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    fn rename_vars(&mut self, f: &impl Fn(&str) -> String) {
        match self {
            Expr::Const(_) => {}
            Expr::Part { var, .. } => *var = f(var),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.rename_vars(f);
                b.rename_vars(f);
            }
        }
    }
}

fn arith(
    a: Scalar,
    b: Scalar,
    op: &str,
    f: impl Fn(i64, i64) -> Option<i64>,
) -> Result<Scalar, ModelError> {
    match (a, b) {
        (Scalar::Int(x), Scalar::Int(y)) => f(x, y)
            .map(Scalar::Int)
            .ok_or_else(|| ModelError::EffectFailed(format!("integer overflow in `{op}`"))),
        (a, b) => Err(ModelError::EffectFailed(format!(
            "`{op}` needs integers, got {a} and {b}"
        ))),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(s) => write!(f, "{s}"),
            Expr::Part { var, index } => write!(f, "{var}[{index}]"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
        }
    }
}

/// Context handed to native effects: the variable store plus the current
/// tick identifier.
pub struct EffectCtx<'a> {
    pub vars: &'a mut Evaluation,
    pub tick: u64,
}

impl EffectCtx<'_> {
    pub fn get(&self, var: &str) -> Option<&Message> {
        self.vars.get(var)
    }

    pub fn set(&mut self, var: &str, value: Message) {
        self.vars.insert(var.to_string(), value);
    }

    /// Convenience for single-int variables.
    pub fn get_int(&self, var: &str) -> Option<i64> {
        match self.vars.get(var)?.part(1)? {
            Scalar::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn set_int(&mut self, var: &str, n: i64) {
        self.set(var, Message::of(vec![Scalar::Int(n)]));
    }

    pub fn get_bool(&self, var: &str) -> Option<bool> {
        match self.vars.get(var)?.part(1)? {
            Scalar::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn set_bool(&mut self, var: &str, b: bool) {
        self.set(var, Message::of(vec![Scalar::Bool(b)]));
    }
}

type NativeFn = dyn Fn(&mut EffectCtx<'_>) -> Result<(), ModelError> + Send + Sync;

/// An opaque effect implemented in Rust. Native effects are used by the
/// scenario components; systems loaded from text files only contain
/// assignment actions. Variable names captured by a native are not rewritten
/// by system construction, so natives must use final (qualified or shared)
/// names.
#[derive(Clone)]
pub struct NativeAction {
    pub name: String,
    pub effect: Arc<NativeFn>,
}

impl NativeAction {
    pub fn new(
        name: impl Into<String>,
        effect: impl Fn(&mut EffectCtx<'_>) -> Result<(), ModelError> + Send + Sync + 'static,
    ) -> Self {
        NativeAction {
            name: name.into(),
            effect: Arc::new(effect),
        }
    }
}

impl fmt::Debug for NativeAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NativeAction({})", self.name)
    }
}

/// One simultaneous multi-assignment: right-hand sides are all evaluated in
/// the pre-state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub var: String,
    pub parts: Vec<Expr>,
}

/// An internal action with its effect on the evaluation.
#[derive(Debug, Clone)]
pub enum Action {
    Nop,
    Assign(Vec<Assignment>),
    Native(NativeAction),
}

impl Action {
    pub fn assign(var: impl Into<String>, parts: Vec<Expr>) -> Action {
        Action::Assign(vec![Assignment {
            var: var.into(),
            parts,
        }])
    }

    pub fn apply(&self, ctx: &mut EffectCtx<'_>) -> Result<(), ModelError> {
        match self {
            Action::Nop => Ok(()),
            Action::Assign(assignments) => {
                let mut staged = Vec::with_capacity(assignments.len());
                for a in assignments {
                    let parts = a
                        .parts
                        .iter()
                        .map(|e| e.eval(ctx.vars))
                        .collect::<Result<Vec<_>, _>>()?;
                    staged.push((a.var.clone(), Message::new(parts)?));
                }
                for (var, msg) in staged {
                    ctx.vars.insert(var, msg);
                }
                Ok(())
            }
            Action::Native(n) => (n.effect)(ctx),
        }
    }

    pub(crate) fn visit_vars(&self, f: &mut impl FnMut(&str)) {
        if let Action::Assign(assignments) = self {
            for a in assignments {
                f(&a.var);
                for e in &a.parts {
                    e.visit_vars(f);
                }
            }
        }
    }

    pub(crate) fn rename_vars(&mut self, f: &impl Fn(&str) -> String) {
        if let Action::Assign(assignments) = self {
            for a in assignments {
                a.var = f(&a.var);
                for e in &mut a.parts {
                    e.rename_vars(f);
                }
            }
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Nop => write!(f, "skip"),
            Action::Assign(assignments) => {
                for (i, a) in assignments.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{} := [", a.var)?;
                    for (j, e) in a.parts.iter().enumerate() {
                        if j > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{e}")?;
                    }
                    write!(f, "]")?;
                }
                Ok(())
            }
            Action::Native(n) => write!(f, "native {}", n.name),
        }
    }
}
