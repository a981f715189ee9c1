//! Boolean expressions over `component[state]` atoms.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StateExpr {
    /// `path[state]`, the path relative to the component owning the mapping.
    Atom {
        component: String,
        state: String,
    },
    And(Box<StateExpr>, Box<StateExpr>),
    Or(Box<StateExpr>, Box<StateExpr>),
    Not(Box<StateExpr>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("no state assigned to component {component} (atom {component}[{state}])")]
    MissingComponent { component: String, state: String },
}

impl StateExpr {
    pub fn atom(component: impl Into<String>, state: impl Into<String>) -> Self {
        StateExpr::Atom {
            component: component.into(),
            state: state.into(),
        }
    }

    pub fn and(self, rhs: StateExpr) -> Self {
        StateExpr::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: StateExpr) -> Self {
        StateExpr::Or(Box::new(self), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        StateExpr::Not(Box::new(self))
    }

    /// Atoms in left-to-right order, duplicates included.
    pub fn atoms(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<(&'a str, &'a str)>) {
        match self {
            StateExpr::Atom { component, state } => out.push((component, state)),
            StateExpr::And(a, b) | StateExpr::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            StateExpr::Not(a) => a.collect_atoms(out),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            StateExpr::Or(..) => 1,
            StateExpr::And(..) => 2,
            StateExpr::Not(_) => 3,
            StateExpr::Atom { .. } => 4,
        }
    }
}

/// Evaluate `expr` where `assignment` maps component paths (as written in the
/// atoms) to their current state.
pub fn evaluate_state_expr(
    expr: &StateExpr,
    assignment: &BTreeMap<String, String>,
) -> Result<bool, EvalError> {
    Ok(match expr {
        StateExpr::Atom { component, state } => match assignment.get(component) {
            Some(current) => current == state,
            None => {
                return Err(EvalError::MissingComponent {
                    component: component.clone(),
                    state: state.clone(),
                })
            }
        },
        // Both sides are evaluated so a missing component is always reported.
        StateExpr::And(a, b) => {
            let (a, b) = (
                evaluate_state_expr(a, assignment)?,
                evaluate_state_expr(b, assignment)?,
            );
            a && b
        }
        StateExpr::Or(a, b) => {
            let (a, b) = (
                evaluate_state_expr(a, assignment)?,
                evaluate_state_expr(b, assignment)?,
            );
            a || b
        }
        StateExpr::Not(a) => !evaluate_state_expr(a, assignment)?,
    })
}

/// Prints with the minimum parentheses needed to re-parse to the same tree
/// (`not` > `and` > `or`, binary operators left-associative).
impl fmt::Display for StateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn side(f: &mut fmt::Formatter<'_>, e: &StateExpr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            StateExpr::Atom { component, state } => write!(f, "{component}[{state}]"),
            StateExpr::And(a, b) | StateExpr::Or(a, b) => {
                let p = self.precedence();
                let op = if p == 2 { "and" } else { "or" };
                side(f, a, a.precedence() < p)?;
                write!(f, " {op} ")?;
                side(f, b, b.precedence() <= p)
            }
            StateExpr::Not(a) => {
                f.write_str("not ")?;
                side(f, a, a.precedence() < 3)
            }
        }
    }
}
