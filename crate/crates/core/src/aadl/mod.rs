//! In-memory instance model of an architecture annotated with error models.
//!
//! A model is a tree of [`ComponentInstance`]s rooted at a `system`, plus the
//! flat lists of connections, bindings and bus accesses declared anywhere in
//! the tree (endpoints stored as full dot-separated paths). Error model types
//! are shared by name; each component that carries an annex refers to one
//! through an [`ErrorModelBinding`] and may override occurrences and declare
//! `guard_in` filtering rules.

mod expr;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::diagnostic::SourceSpan;

pub use expr::{evaluate_state_expr, EvalError, StateExpr};
pub use validate::validate_architecture;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    System,
    Process,
    Thread,
    Processor,
    Memory,
    Bus,
    Device,
    Data,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::System,
        Category::Process,
        Category::Thread,
        Category::Processor,
        Category::Memory,
        Category::Bus,
        Category::Device,
        Category::Data,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Category::System => "system",
            Category::Process => "process",
            Category::Thread => "thread",
            Category::Processor => "processor",
            Category::Memory => "memory",
            Category::Bus => "bus",
            Category::Device => "device",
            Category::Data => "data",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.keyword() == word)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    In,
    Out,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::In => f.write_str("in"),
            Direction::Out => f.write_str("out"),
        }
    }
}

/// A port on a component. Only ports exist in this language.
#[derive(Clone, Debug, PartialEq)]
pub struct Feature {
    pub name: String,
    pub direction: Direction,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateMapping {
    pub label: String,
    pub expr: StateExpr,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentInstance {
    /// Full dot-separated path from the root, e.g. `Top.CPU`.
    pub path: String,
    /// Local name (last path segment).
    pub name: String,
    pub category: Category,
    /// The component type this instance was created from.
    pub type_name: String,
    pub features: Vec<Feature>,
    pub subcomponents: Vec<ComponentInstance>,
    pub error_model: Option<ErrorModelBinding>,
    pub state_mapping: Vec<StateMapping>,
    pub span: SourceSpan,
}

impl ComponentInstance {
    pub fn feature(&self, name: &str) -> Option<&Feature> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn mapping(&self, label: &str) -> Option<&StateMapping> {
        self.state_mapping.iter().find(|m| m.label == label)
    }

    /// Pre-order walk over this instance and all its descendants.
    pub fn walk(&self) -> Vec<&ComponentInstance> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(c) = stack.pop() {
            out.push(c);
            stack.extend(c.subcomponents.iter().rev());
        }
        out
    }
}

/// A `(component path, feature name)` pair.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Endpoint {
    pub component: String,
    pub feature: String,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.component, self.feature)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    /// Path of the component whose type declared the connection.
    pub owner: String,
    pub source: Endpoint,
    pub target: Endpoint,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Binding {
    pub owner: String,
    pub application: String,
    pub platform: String,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BusAccess {
    pub owner: String,
    pub accessor: String,
    pub bus: String,
    pub span: SourceSpan,
}

/// Occurrence property of an event or propagation. Rates are per hour.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Occurrence {
    Poisson(f64),
    Fixed(f64),
}

impl Occurrence {
    /// Applied when neither the binding nor the type gives a value.
    pub const IMMEDIATE: Occurrence = Occurrence::Fixed(1.0);

    pub fn is_valid(self) -> bool {
        match self {
            Occurrence::Poisson(rate) => rate.is_finite() && rate > 0.0,
            Occurrence::Fixed(p) => (0.0..=1.0).contains(&p),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateDecl {
    pub name: String,
    pub initial: bool,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventDecl {
    pub name: String,
    pub occurrence: Option<Occurrence>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationDecl {
    pub name: String,
    pub direction: Direction,
    pub occurrence: Option<Occurrence>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trigger {
    Event(String),
    In(String),
    Out(String),
}

impl Trigger {
    pub fn name(&self) -> &str {
        match self {
            Trigger::Event(n) | Trigger::In(n) | Trigger::Out(n) => n,
        }
    }
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trigger::Event(n) => f.write_str(n),
            Trigger::In(n) => write!(f, "in {n}"),
            Trigger::Out(n) => write!(f, "out {n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorTransition {
    pub source: String,
    pub trigger: Trigger,
    pub destination: String,
    pub span: SourceSpan,
}

/// A stochastic automaton: states, events, propagations and transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorModelType {
    pub name: String,
    pub states: Vec<StateDecl>,
    pub events: Vec<EventDecl>,
    pub propagations: Vec<PropagationDecl>,
    pub transitions: Vec<ErrorTransition>,
    pub span: SourceSpan,
}

impl ErrorModelType {
    pub fn has_state(&self, name: &str) -> bool {
        self.states.iter().any(|s| s.name == name)
    }

    pub fn event(&self, name: &str) -> Option<&EventDecl> {
        self.events.iter().find(|e| e.name == name)
    }

    pub fn propagation(&self, name: &str) -> Option<&PropagationDecl> {
        self.propagations.iter().find(|p| p.name == name)
    }

    pub fn has_propagation(&self, name: &str, direction: Direction) -> bool {
        self.propagation(name)
            .is_some_and(|p| p.direction == direction)
    }

    pub fn initial_state(&self) -> Option<&str> {
        let mut initial = self.states.iter().filter(|s| s.initial);
        match (initial.next(), initial.next()) {
            (Some(s), None) => Some(&s.name),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GuardEffect {
    Raise(String),
    Mask,
}

/// `guard_in (a or b) on feature => raise X | mask`.
#[derive(Clone, Debug, PartialEq)]
pub struct GuardInRule {
    pub feature: String,
    /// Any-of set of incoming propagation names, in written order.
    pub condition: Vec<String>,
    pub effect: GuardEffect,
    pub span: SourceSpan,
}

impl GuardInRule {
    pub fn matches(&self, feature: &str, propagation: &str) -> bool {
        self.feature == feature && self.condition.iter().any(|c| c == propagation)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorModelBinding {
    pub type_name: String,
    pub occurrence_overrides: BTreeMap<String, Occurrence>,
    pub guard_in_rules: Vec<GuardInRule>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArchitectureModel {
    pub error_types: BTreeMap<String, ErrorModelType>,
    pub root: ComponentInstance,
    pub connections: Vec<Connection>,
    pub bindings: Vec<Binding>,
    pub bus_accesses: Vec<BusAccess>,
}

impl ArchitectureModel {
    /// All component instances, pre-order from the root.
    pub fn components(&self) -> Vec<&ComponentInstance> {
        self.root.walk()
    }

    pub fn component(&self, path: &str) -> Option<&ComponentInstance> {
        let mut segments = path.split('.');
        if segments.next() != Some(self.root.name.as_str()) {
            return None;
        }
        let mut current = &self.root;
        for seg in segments {
            current = current.subcomponents.iter().find(|c| c.name == seg)?;
        }
        Some(current)
    }

    /// Path relative to the root, used to name generated net elements.
    /// The root itself keeps its own name.
    pub fn relative_path<'a>(&self, path: &'a str) -> &'a str {
        path.strip_prefix(self.root.name.as_str())
            .and_then(|rest| rest.strip_prefix('.'))
            .unwrap_or(path)
    }

    /// Resolved error model instances of every component that has one,
    /// ordered by path.
    pub fn error_model_instances(&self) -> Result<Vec<ErrorModelInstance>, ResolveError> {
        let mut out = Vec::new();
        for c in self.components() {
            if let Some(emi) = resolve_error_model(c, self)? {
                out.push(emi);
            }
        }
        out.sort_by(|a, b| a.owner.cmp(&b.owner));
        Ok(out)
    }
}

/// An error model type instantiated on a component, with every event and
/// out propagation assigned an effective occurrence.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorModelInstance {
    pub owner: String,
    pub type_name: String,
    pub states: Vec<StateDecl>,
    pub events: Vec<EventDecl>,
    pub propagations: Vec<PropagationDecl>,
    pub transitions: Vec<ErrorTransition>,
    pub effective_occurrences: BTreeMap<String, Occurrence>,
    pub guard_in_rules: Vec<GuardInRule>,
}

impl ErrorModelInstance {
    pub fn has_state(&self, name: &str) -> bool {
        self.states.iter().any(|s| s.name == name)
    }

    pub fn has_propagation(&self, name: &str, direction: Direction) -> bool {
        self.propagations
            .iter()
            .any(|p| p.name == name && p.direction == direction)
    }

    pub fn out_propagations(&self) -> impl Iterator<Item = &str> {
        self.propagations
            .iter()
            .filter(|p| p.direction == Direction::Out)
            .map(|p| p.name.as_str())
    }

    /// Occurrence of the event or out propagation firing `trigger`; `None`
    /// for `in` triggers.
    pub fn occurrence_of(&self, trigger: &Trigger) -> Option<Occurrence> {
        match trigger {
            Trigger::Event(n) | Trigger::Out(n) => self.effective_occurrences.get(n).copied(),
            Trigger::In(_) => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResolveError {
    #[error("unresolved reference: error model {type_name} used by component {component}")]
    UnknownType {
        component: String,
        type_name: String,
    },
}

/// Resolve a component's error annex into an instance.
///
/// Effective occurrences follow: binding override, then the type's default,
/// then `fixed 1.0`.
pub fn resolve_error_model(
    component: &ComponentInstance,
    model: &ArchitectureModel,
) -> Result<Option<ErrorModelInstance>, ResolveError> {
    let Some(binding) = &component.error_model else {
        return Ok(None);
    };
    let ty =
        model
            .error_types
            .get(&binding.type_name)
            .ok_or_else(|| ResolveError::UnknownType {
                component: component.path.clone(),
                type_name: binding.type_name.clone(),
            })?;

    let mut effective = BTreeMap::new();
    let declared = ty.events.iter().map(|e| (&e.name, e.occurrence)).chain(
        ty.propagations
            .iter()
            .filter(|p| p.direction == Direction::Out)
            .map(|p| (&p.name, p.occurrence)),
    );
    for (name, default) in declared {
        let occ = binding
            .occurrence_overrides
            .get(name)
            .copied()
            .or(default)
            .unwrap_or(Occurrence::IMMEDIATE);
        effective.insert(name.clone(), occ);
    }

    Ok(Some(ErrorModelInstance {
        owner: component.path.clone(),
        type_name: ty.name.clone(),
        states: ty.states.clone(),
        events: ty.events.clone(),
        propagations: ty.propagations.clone(),
        transitions: ty.transitions.clone(),
        effective_occurrences: effective,
        guard_in_rules: binding.guard_in_rules.clone(),
    }))
}
