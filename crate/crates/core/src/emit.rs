//! Serializers for GSPNs: PNML, a generic XML interchange format carrying
//! the trace map, and dot text for inspection.
//!
//! All emitters are byte-deterministic: elements are written in id order and
//! reals use [`format_real`].

use std::fmt::Write;

use thiserror::Error;

use crate::aadl::Trigger;
use crate::format_real;
use crate::gspn::{validate_gspn, Arc, Gspn, Place, Transition, TransitionKind};
use crate::transform::{PlaceOrigin, TraceMap, TransitionOrigin};

pub const TOOL_NAME: &str = "adapt-kit";
pub const TOOL_VERSION: &str = "1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmitError {
    #[error("refusing to emit an invalid net: {0}")]
    InvalidNet(String),
    #[error("partial trace: no origin recorded for {0}")]
    PartialTrace(String),
}

/// Escape text for XML attribute values and character data.
pub fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn check(net: &Gspn) -> Result<(), EmitError> {
    let problems: Vec<String> = validate_gspn(net).into_iter().map(|d| d.message).collect();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(EmitError::InvalidNet(problems.join("; ")))
    }
}

fn sorted_places(net: &Gspn) -> Vec<&Place> {
    let mut v: Vec<&Place> = net.places.iter().collect();
    v.sort_by(|a, b| a.id.cmp(&b.id));
    v
}

fn sorted_transitions(net: &Gspn) -> Vec<&Transition> {
    let mut v: Vec<&Transition> = net.transitions.iter().collect();
    v.sort_by(|a, b| a.id.cmp(&b.id));
    v
}

fn sorted_arcs(net: &Gspn) -> Vec<&Arc> {
    let mut v: Vec<&Arc> = net.arcs.iter().collect();
    v.sort_by(|a, b| a.id.cmp(&b.id));
    v
}

fn arc_endpoints(a: &Arc) -> (&str, &str) {
    match a.direction {
        crate::gspn::ArcDirection::PlaceToTransition => (&a.place, &a.transition),
        crate::gspn::ArcDirection::TransitionToPlace => (&a.transition, &a.place),
    }
}

/// PNML PT-net document. Transition kinds and parameters go in a
/// `toolspecific` block.
pub fn emit_pnml(net: &Gspn) -> Result<String, EmitError> {
    check(net)?;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<pnml xmlns=\"http://www.pnml.org/version-2009/grammar/pnml\">\n");
    out.push_str("  <net id=\"gspn\" type=\"http://www.pnml.org/version-2009/grammar/ptnet\">\n");
    out.push_str("    <page id=\"page0\">\n");
    for p in sorted_places(net) {
        writeln!(out, "      <place id=\"{}\">", xml_escape(&p.id)).unwrap();
        writeln!(
            out,
            "        <name><text>{}</text></name>",
            xml_escape(&p.name)
        )
        .unwrap();
        writeln!(
            out,
            "        <initialMarking><text>{}</text></initialMarking>",
            p.initial_marking
        )
        .unwrap();
        out.push_str("      </place>\n");
    }
    for t in sorted_transitions(net) {
        writeln!(out, "      <transition id=\"{}\">", xml_escape(&t.id)).unwrap();
        writeln!(
            out,
            "        <name><text>{}</text></name>",
            xml_escape(&t.name)
        )
        .unwrap();
        writeln!(
            out,
            "        <toolspecific tool=\"{TOOL_NAME}\" version=\"{TOOL_VERSION}\">"
        )
        .unwrap();
        writeln!(out, "          <kind>{}</kind>", t.kind.label()).unwrap();
        writeln!(
            out,
            "          <parameter>{}</parameter>",
            format_real(t.kind.parameter())
        )
        .unwrap();
        out.push_str("        </toolspecific>\n");
        out.push_str("      </transition>\n");
    }
    for a in sorted_arcs(net) {
        let (source, target) = arc_endpoints(a);
        writeln!(
            out,
            "      <arc id=\"{}\" source=\"{}\" target=\"{}\">",
            xml_escape(&a.id),
            xml_escape(source),
            xml_escape(target)
        )
        .unwrap();
        writeln!(
            out,
            "        <inscription><text>{}</text></inscription>",
            a.weight
        )
        .unwrap();
        out.push_str("      </arc>\n");
    }
    out.push_str("    </page>\n  </net>\n</pnml>\n");
    Ok(out)
}

fn trigger_attrs(trigger: &Trigger) -> (&'static str, &str) {
    match trigger {
        Trigger::Event(n) => ("event", n),
        Trigger::In(n) => ("in", n),
        Trigger::Out(n) => ("out", n),
    }
}

/// Generic XML with `<places>`, `<transitions>`, `<arcs>` and `<trace>`
/// sections; see `schema/gspn.xsd`.
pub fn emit_generic_xml(net: &Gspn, trace: &TraceMap) -> Result<String, EmitError> {
    check(net)?;
    for p in &net.places {
        if !trace.place_origin.contains_key(&p.id) {
            return Err(EmitError::PartialTrace(format!("place {}", p.id)));
        }
    }
    for t in &net.transitions {
        if !trace.transition_origin.contains_key(&t.id) {
            return Err(EmitError::PartialTrace(format!("transition {}", t.id)));
        }
    }

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(
        out,
        "<gspn tool=\"{TOOL_NAME}\" version=\"{TOOL_VERSION}\">"
    )
    .unwrap();
    out.push_str("  <places>\n");
    for p in sorted_places(net) {
        writeln!(
            out,
            "    <place id=\"{}\" name=\"{}\" initial_marking=\"{}\"/>",
            xml_escape(&p.id),
            xml_escape(&p.name),
            p.initial_marking
        )
        .unwrap();
    }
    out.push_str("  </places>\n  <transitions>\n");
    for t in sorted_transitions(net) {
        let param = match t.kind {
            TransitionKind::Timed { rate } => format!("rate=\"{}\"", format_real(rate)),
            TransitionKind::Immediate { weight } => format!("weight=\"{}\"", format_real(weight)),
        };
        writeln!(
            out,
            "    <transition id=\"{}\" name=\"{}\" kind=\"{}\" {param}/>",
            xml_escape(&t.id),
            xml_escape(&t.name),
            t.kind.label()
        )
        .unwrap();
    }
    out.push_str("  </transitions>\n  <arcs>\n");
    for a in sorted_arcs(net) {
        writeln!(
            out,
            "    <arc id=\"{}\" direction=\"{}\" place=\"{}\" transition=\"{}\" weight=\"{}\"/>",
            xml_escape(&a.id),
            a.direction.label(),
            xml_escape(&a.place),
            xml_escape(&a.transition),
            a.weight
        )
        .unwrap();
    }
    out.push_str("  </arcs>\n  <trace>\n");
    for p in sorted_places(net) {
        let attrs = match &trace.place_origin[&p.id] {
            PlaceOrigin::State { component, state } => format!(
                "role=\"state\" component=\"{}\" state=\"{}\"",
                xml_escape(component),
                xml_escape(state)
            ),
            PlaceOrigin::Pending(link) => format!(
                "role=\"pending\" sender=\"{}\" out_propagation=\"{}\" receiver=\"{}\"",
                xml_escape(&link.sender),
                xml_escape(&link.out_prop),
                xml_escape(&link.receiver)
            ),
        };
        writeln!(
            out,
            "    <place_origin ref=\"{}\" {attrs}/>",
            xml_escape(&p.id)
        )
        .unwrap();
    }
    for t in sorted_transitions(net) {
        let attrs = match &trace.transition_origin[&t.id] {
            TransitionOrigin::Component {
                component,
                trigger,
                source,
                destination,
            } => {
                let (kind, name) = trigger_attrs(trigger);
                format!(
                    "role=\"component\" component=\"{}\" trigger_kind=\"{kind}\" trigger=\"{}\" source=\"{}\" destination=\"{}\"",
                    xml_escape(component),
                    xml_escape(name),
                    xml_escape(source),
                    xml_escape(destination)
                )
            }
            TransitionOrigin::Consume {
                link,
                source,
                destination,
            } => format!(
                "role=\"consume\" sender=\"{}\" out_propagation=\"{}\" receiver=\"{}\" source=\"{}\" destination=\"{}\"",
                xml_escape(&link.sender),
                xml_escape(&link.out_prop),
                xml_escape(&link.receiver),
                xml_escape(source),
                xml_escape(destination)
            ),
            TransitionOrigin::Absorb { link, state } => format!(
                "role=\"absorb\" sender=\"{}\" out_propagation=\"{}\" receiver=\"{}\" state=\"{}\"",
                xml_escape(&link.sender),
                xml_escape(&link.out_prop),
                xml_escape(&link.receiver),
                xml_escape(state)
            ),
        };
        writeln!(
            out,
            "    <transition_origin ref=\"{}\" {attrs}/>",
            xml_escape(&t.id)
        )
        .unwrap();
    }
    out.push_str("  </trace>\n</gspn>\n");
    Ok(out)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Dot graph: places as circles labeled with name and initial marking,
/// timed transitions as open boxes, immediate ones as filled bars.
pub fn emit_dot(net: &Gspn) -> String {
    let mut out = String::from("digraph gspn {\n  rankdir=LR;\n");
    for p in sorted_places(net) {
        writeln!(
            out,
            "  \"{}\" [shape=circle, label=\"{}\\n{}\"];",
            dot_escape(&p.id),
            dot_escape(&p.name),
            p.initial_marking
        )
        .unwrap();
    }
    for t in sorted_transitions(net) {
        let style = match t.kind {
            TransitionKind::Timed { .. } => "shape=box, style=solid",
            TransitionKind::Immediate { .. } => {
                "shape=box, style=filled, fillcolor=black, width=0.1, height=0.5"
            }
        };
        writeln!(
            out,
            "  \"{}\" [{style}, xlabel=\"{} ({})\", label=\"\"];",
            dot_escape(&t.id),
            dot_escape(&t.name),
            format_real(t.kind.parameter())
        )
        .unwrap();
    }
    for a in sorted_arcs(net) {
        let (source, target) = arc_endpoints(a);
        if a.weight > 1 {
            writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                dot_escape(source),
                dot_escape(target),
                a.weight
            )
            .unwrap();
        } else {
            writeln!(
                out,
                "  \"{}\" -> \"{}\";",
                dot_escape(source),
                dot_escape(target)
            )
            .unwrap();
        }
    }
    out.push_str("}\n");
    out
}
