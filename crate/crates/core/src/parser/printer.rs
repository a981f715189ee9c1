//! Pretty-printer producing `.adm` text that parses back to an equal model.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::aadl::{ArchitectureModel, ComponentInstance, GuardEffect, Occurrence, Trigger};
use crate::format_real;

fn occurrence(o: Occurrence) -> String {
    match o {
        Occurrence::Poisson(r) => format!("poisson {}", format_real(r)),
        Occurrence::Fixed(p) => format!("fixed {}", format_real(p)),
    }
}

fn relative<'a>(owner: &str, path: &'a str) -> &'a str {
    if path == owner {
        ""
    } else {
        path.strip_prefix(owner)
            .and_then(|r| r.strip_prefix('.'))
            .unwrap_or(path)
    }
}

fn join(prefix: &str, leaf: &str) -> String {
    if prefix.is_empty() {
        leaf.to_string()
    } else {
        format!("{prefix}.{leaf}")
    }
}

/// Print `model` in the concrete syntax. One component type is written per
/// distinct `type_name`, taken from its first instance in pre-order.
pub fn print_model(model: &ArchitectureModel) -> String {
    let mut out = String::new();
    for ty in model.error_types.values() {
        writeln!(out, "error model {} {{", ty.name).unwrap();
        out.push_str("  states {");
        for s in &ty.states {
            if s.initial {
                write!(out, " {} : initial;", s.name).unwrap();
            } else {
                write!(out, " {};", s.name).unwrap();
            }
        }
        out.push_str(" }\n  events {");
        for e in &ty.events {
            match e.occurrence {
                Some(o) => write!(out, " {} occurrence {};", e.name, occurrence(o)).unwrap(),
                None => write!(out, " {};", e.name).unwrap(),
            }
        }
        out.push_str(" }\n  propagations {");
        for p in &ty.propagations {
            write!(out, " {} : {}", p.name, p.direction).unwrap();
            if let Some(o) = p.occurrence {
                write!(out, " occurrence {}", occurrence(o)).unwrap();
            }
            out.push(';');
        }
        out.push_str(" }\n  transitions {\n");
        for t in &ty.transitions {
            let trig = match &t.trigger {
                Trigger::Event(n) => n.clone(),
                other => other.to_string(),
            };
            writeln!(out, "    {} -[{}]-> {};", t.source, trig, t.destination).unwrap();
        }
        out.push_str("  }\n}\n");
    }

    let mut printed = BTreeSet::new();
    for c in model.components() {
        if printed.insert(c.type_name.as_str()) {
            component(&mut out, model, c);
        }
    }
    writeln!(out, "root {};", model.root.type_name).unwrap();
    out
}

fn component(out: &mut String, model: &ArchitectureModel, c: &ComponentInstance) {
    writeln!(out, "{} {} {{", c.category, c.type_name).unwrap();
    for f in &c.features {
        writeln!(out, "  feature {} : {} port;", f.name, f.direction).unwrap();
    }
    for s in &c.subcomponents {
        writeln!(out, "  sub {} : {};", s.name, s.type_name).unwrap();
    }
    for conn in model.connections.iter().filter(|k| k.owner == c.path) {
        writeln!(
            out,
            "  connect {} -> {};",
            join(
                relative(&c.path, &conn.source.component),
                &conn.source.feature
            ),
            join(
                relative(&c.path, &conn.target.component),
                &conn.target.feature
            )
        )
        .unwrap();
    }
    for b in model.bindings.iter().filter(|k| k.owner == c.path) {
        writeln!(
            out,
            "  bind {} -> {};",
            relative(&c.path, &b.application),
            relative(&c.path, &b.platform)
        )
        .unwrap();
    }
    for a in model.bus_accesses.iter().filter(|k| k.owner == c.path) {
        writeln!(
            out,
            "  access {} -> {};",
            relative(&c.path, &a.accessor),
            relative(&c.path, &a.bus)
        )
        .unwrap();
    }
    if let Some(b) = &c.error_model {
        writeln!(out, "  annex error_model {{ use {};", b.type_name).unwrap();
        for (name, o) in &b.occurrence_overrides {
            writeln!(out, "    occurrence {name} => {};", occurrence(*o)).unwrap();
        }
        for g in &b.guard_in_rules {
            let effect = match &g.effect {
                GuardEffect::Raise(n) => format!("raise {n}"),
                GuardEffect::Mask => "mask".to_string(),
            };
            writeln!(
                out,
                "    guard_in ({}) on {} => {effect};",
                g.condition.join(" or "),
                g.feature
            )
            .unwrap();
        }
        out.push_str("  }\n");
    }
    for m in &c.state_mapping {
        writeln!(out, "  state_mapping {} => {};", m.label, m.expr).unwrap();
    }
    out.push_str("}\n");
}
