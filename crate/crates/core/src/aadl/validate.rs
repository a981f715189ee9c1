use std::collections::BTreeSet;

use super::{
    ArchitectureModel, Category, ComponentInstance, Direction, ErrorModelType, GuardEffect,
    Occurrence, Trigger,
};
use crate::diagnostic::{Diagnostic, SourceSpan};

/// Check every invariant of the instance model. The returned list is empty
/// for a well-formed model.
pub fn validate_architecture(model: &ArchitectureModel) -> Vec<Diagnostic> {
    let mut v = Validator {
        model,
        out: Vec::new(),
    };
    v.root();
    for ty in model.error_types.values() {
        v.error_type(ty);
    }
    for c in model.components() {
        v.component(c);
    }
    v.connections();
    v.bindings();
    v.bus_accesses();
    v.out
}

struct Validator<'a> {
    model: &'a ArchitectureModel,
    out: Vec<Diagnostic>,
}

impl<'a> Validator<'a> {
    fn error(&mut self, message: String, span: &SourceSpan) {
        self.out
            .push(Diagnostic::error(message, Some(span.clone())));
    }

    fn root(&mut self) {
        let root = &self.model.root;
        if root.category != Category::System {
            self.error(
                format!(
                    "invalid model: root component {} must be a system, found {}",
                    root.path, root.category
                ),
                &root.span,
            );
        }
        if root.mapping("failed").is_none() {
            self.error(
                format!(
                    "missing failed mapping: root system {} must define state_mapping failed",
                    root.path
                ),
                &root.span,
            );
        }
    }

    fn occurrence(&mut self, occ: Occurrence, owner: &str, span: &SourceSpan) {
        match occ {
            Occurrence::Poisson(rate) if !Occurrence::Poisson(rate).is_valid() => self.error(
                format!("invalid occurrence: poisson rate of {owner} must be positive, got {rate}"),
                span,
            ),
            Occurrence::Fixed(p) if !Occurrence::Fixed(p).is_valid() => self.error(
                format!(
                    "invalid occurrence: fixed probability of {owner} must be in [0,1], got {p}"
                ),
                span,
            ),
            _ => {}
        }
    }

    fn error_type(&mut self, ty: &ErrorModelType) {
        let initial = ty.states.iter().filter(|s| s.initial).count();
        if initial != 1 {
            self.error(
                format!(
                    "invalid error model: {} must declare exactly one initial state, found {initial}",
                    ty.name
                ),
                &ty.span,
            );
        }
        for e in &ty.events {
            if let Some(occ) = e.occurrence {
                self.occurrence(occ, &e.name, &e.span);
            }
        }
        for p in &ty.propagations {
            match (p.direction, p.occurrence) {
                (Direction::In, Some(_)) => self.error(
                    format!(
                        "invalid error model: in propagation {} of {} cannot carry an occurrence",
                        p.name, ty.name
                    ),
                    &p.span,
                ),
                (Direction::Out, Some(occ)) => self.occurrence(occ, &p.name, &p.span),
                _ => {}
            }
        }
        for t in &ty.transitions {
            for state in [&t.source, &t.destination] {
                if !ty.has_state(state) {
                    self.error(format!("unresolved reference: state {state}"), &t.span);
                }
            }
            let ok = match &t.trigger {
                Trigger::Event(n) => ty.event(n).is_some(),
                Trigger::In(n) => ty.has_propagation(n, Direction::In),
                Trigger::Out(n) => ty.has_propagation(n, Direction::Out),
            };
            if !ok {
                let what = match &t.trigger {
                    Trigger::Event(_) => "event",
                    Trigger::In(_) => "in propagation",
                    Trigger::Out(_) => "out propagation",
                };
                self.error(
                    format!("unresolved reference: {what} {}", t.trigger.name()),
                    &t.span,
                );
            }
        }
    }

    fn component(&mut self, c: &ComponentInstance) {
        let mut names = BTreeSet::new();
        for sub in &c.subcomponents {
            if !names.insert(&sub.name) {
                self.error(
                    format!("duplicate declaration: subcomponent {}", sub.name),
                    &sub.span,
                );
            }
        }
        let mut features = BTreeSet::new();
        for f in &c.features {
            if !features.insert(&f.name) {
                self.error(
                    format!("duplicate declaration: feature {}", f.name),
                    &f.span,
                );
            }
        }

        if let Some(binding) = &c.error_model {
            match self.model.error_types.get(&binding.type_name) {
                None => self.error(
                    format!("unresolved reference: error model {}", binding.type_name),
                    &binding.span,
                ),
                Some(ty) => {
                    for (name, occ) in &binding.occurrence_overrides {
                        if ty.has_propagation(name, Direction::In) {
                            self.error(
                                format!(
                                    "invalid override: {name} is an in propagation of {} and cannot carry an occurrence",
                                    ty.name
                                ),
                                &binding.span,
                            );
                        } else if ty.event(name).is_none() && ty.propagation(name).is_none() {
                            self.error(
                                format!("unresolved reference: event or propagation {name}"),
                                &binding.span,
                            );
                        } else {
                            self.occurrence(*occ, name, &binding.span);
                        }
                    }
                    for rule in &binding.guard_in_rules {
                        match c.feature(&rule.feature) {
                            None => self.error(
                                format!("unresolved reference: feature {}", rule.feature),
                                &rule.span,
                            ),
                            Some(f) if f.direction != Direction::In => self.error(
                                format!(
                                    "invalid guard: feature {} of {} is not an in feature",
                                    rule.feature, c.path
                                ),
                                &rule.span,
                            ),
                            _ => {}
                        }
                        if let GuardEffect::Raise(n) = &rule.effect {
                            if !ty.has_propagation(n, Direction::In) {
                                self.error(
                                    format!(
                                        "invalid guard: {n} is not an in propagation of {}",
                                        ty.name
                                    ),
                                    &rule.span,
                                );
                            }
                        }
                    }
                }
            }
        }

        if !c.state_mapping.is_empty() && c.subcomponents.is_empty() {
            self.error(
                format!(
                    "invalid state mapping: component {} has no subcomponents",
                    c.path
                ),
                &c.state_mapping[0].span,
            );
        }
        let mut labels = BTreeSet::new();
        for m in &c.state_mapping {
            if !labels.insert(&m.label) {
                self.error(
                    format!("duplicate declaration: state_mapping {}", m.label),
                    &m.span,
                );
            }
            if m.label.chars().any(|ch| ch.is_ascii_uppercase()) {
                self.error(
                    format!(
                        "invalid state mapping: label {} must be lower-case",
                        m.label
                    ),
                    &m.span,
                );
            }
            for (path, state) in m.expr.atoms() {
                let full = format!("{}.{}", c.path, path);
                let Some(target) = self.model.component(&full) else {
                    self.error(format!("unresolved reference: component {path}"), &m.span);
                    continue;
                };
                let ty = target
                    .error_model
                    .as_ref()
                    .and_then(|b| self.model.error_types.get(&b.type_name));
                match ty {
                    None => self.error(
                        format!("invalid state mapping: component {path} has no error model"),
                        &m.span,
                    ),
                    Some(ty) if !ty.has_state(state) => self.error(
                        format!("unresolved reference: state {state} in component {path}"),
                        &m.span,
                    ),
                    _ => {}
                }
            }
        }
    }

    fn connections(&mut self) {
        for conn in &self.model.connections {
            let name = format!("{} -> {}", conn.source, conn.target);
            for (end, want) in [
                (&conn.source, Direction::Out),
                (&conn.target, Direction::In),
            ] {
                let feature = self
                    .model
                    .component(&end.component)
                    .and_then(|c| c.feature(&end.feature));
                match feature {
                    None => self.error(format!("unresolved reference: feature {end}"), &conn.span),
                    Some(f) if f.direction != want => self.error(
                        format!(
                            "invalid connection: {name}: feature {end} must be an {want} feature"
                        ),
                        &conn.span,
                    ),
                    _ => {}
                }
            }
            if conn.source.component == conn.target.component {
                self.out.push(Diagnostic::warning(
                    format!("self connection: {name} connects a component to itself and carries no propagation"),
                    Some(conn.span.clone()),
                ));
            }
        }
    }

    fn check_category(
        &mut self,
        what: &str,
        path: &str,
        allowed: &[Category],
        span: &SourceSpan,
        label: &str,
    ) {
        match self.model.component(path) {
            None => self.error(format!("unresolved reference: component {path}"), span),
            Some(c) if !allowed.contains(&c.category) => {
                let names: Vec<_> = allowed.iter().map(|c| c.keyword()).collect();
                self.error(
                    format!(
                        "invalid {what}: {label} {path} must be a {}, found {}",
                        names.join(" or "),
                        c.category
                    ),
                    span,
                )
            }
            _ => {}
        }
    }

    fn bindings(&mut self) {
        for b in &self.model.bindings {
            self.check_category(
                "binding",
                &b.application,
                &[Category::Process, Category::Thread],
                &b.span,
                "application",
            );
            self.check_category(
                "binding",
                &b.platform,
                &[Category::Processor, Category::Memory],
                &b.span,
                "platform",
            );
        }
    }

    fn bus_accesses(&mut self) {
        for a in &self.model.bus_accesses {
            self.check_category(
                "bus access",
                &a.accessor,
                &[Category::Processor, Category::Memory, Category::Device],
                &a.span,
                "accessor",
            );
            self.check_category("bus access", &a.bus, &[Category::Bus], &a.span, "bus");
        }
    }
}
