//! Architecture model to GSPN transformation.
//!
//! Component subnets are built first, one per component carrying an error
//! model, then one dependency subnet per non-masked propagation link.
//!
//! Component rules:
//! * one place `<owner>/<state>` per error state, holding one token for the
//!   initial state;
//! * one transition per event- or `out`-triggered automaton transition, from
//!   the source state place to the destination state place, timed for a
//!   Poisson occurrence and immediate (weight `p`) for a fixed one. The
//!   `out`-triggered ones are the sender anchors of their propagation;
//! * `in`-triggered automaton transitions are left to dependency subnets.
//!
//! Dependency rules, per link `sender --out_prop--> receiver` raising `n`:
//! * a pending place `pend(<sender>/<out_prop>-><receiver>)` fed by every
//!   sender anchor of `out_prop`;
//! * for every receiver transition `s -[in n]-> s'` an immediate consume
//!   transition taking the pending token and moving `s` to `s'`;
//! * for every receiver state with no `in n` transition an immediate absorb
//!   transition that discards the pending token and leaves the state as is.
//!
//! Absorption keeps every pending place empty in tangible markings.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::aadl::{ArchitectureModel, ErrorModelInstance, Occurrence, ResolveError, Trigger};
use crate::dependency::{find_dependencies, DependencyLink, LinkEffect};
use crate::diagnostic::Diagnostic;
use crate::gspn::{Arc, ArcDirection, Gspn, Place, Transition, TransitionKind};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct LinkRef {
    pub sender: String,
    pub out_prop: String,
    pub receiver: String,
}

impl From<&DependencyLink> for LinkRef {
    fn from(l: &DependencyLink) -> Self {
        LinkRef {
            sender: l.sender.clone(),
            out_prop: l.out_prop.clone(),
            receiver: l.receiver.clone(),
        }
    }
}

impl fmt::Display for LinkRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}->{}", self.sender, self.out_prop, self.receiver)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlaceOrigin {
    State { component: String, state: String },
    Pending(LinkRef),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransitionOrigin {
    Component {
        component: String,
        trigger: Trigger,
        source: String,
        destination: String,
    },
    Consume {
        link: LinkRef,
        source: String,
        destination: String,
    },
    Absorb {
        link: LinkRef,
        state: String,
    },
}

/// Origin of every place and transition, keyed by element id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceMap {
    pub place_origin: BTreeMap<String, PlaceOrigin>,
    pub transition_origin: BTreeMap<String, TransitionOrigin>,
}

impl TraceMap {
    pub fn is_total_for(&self, net: &Gspn) -> bool {
        self.place_origin.len() == net.places.len()
            && self.transition_origin.len() == net.transitions.len()
            && net
                .places
                .iter()
                .all(|p| self.place_origin.contains_key(&p.id))
            && net
                .transitions
                .iter()
                .all(|t| self.transition_origin.contains_key(&t.id))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("nothing to transform: no component carries an error model")]
    NothingToTransform,
    #[error(transparent)]
    Resolve(#[from] ResolveError),
}

#[derive(Clone, Debug)]
pub struct Transformed {
    pub net: Gspn,
    pub trace: TraceMap,
    pub links: Vec<DependencyLink>,
    pub warnings: Vec<Diagnostic>,
}

/// Accumulates net elements by index; ids are assigned in [`NetBuilder::finish`].
#[derive(Default)]
pub struct NetBuilder {
    places: Vec<(String, u32, PlaceOrigin)>,
    transitions: Vec<(String, TransitionKind, TransitionOrigin)>,
    arcs: Vec<(ArcDirection, usize, usize)>,
    state_places: BTreeMap<(String, String), usize>,
    anchors: BTreeMap<(String, String), Vec<usize>>,
    warnings: Vec<Diagnostic>,
}

impl NetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn place(&mut self, name: String, m0: u32, origin: PlaceOrigin) -> usize {
        self.places.push((name, m0, origin));
        self.places.len() - 1
    }

    fn transition(
        &mut self,
        name: String,
        kind: TransitionKind,
        origin: TransitionOrigin,
    ) -> usize {
        self.transitions.push((name, kind, origin));
        self.transitions.len() - 1
    }

    fn arc(&mut self, direction: ArcDirection, place: usize, transition: usize) {
        self.arcs.push((direction, place, transition));
    }

    fn state_place(&self, component: &str, state: &str) -> usize {
        self.state_places[&(component.to_string(), state.to_string())]
    }

    /// Places for every state and transitions for event- and out-triggered
    /// automaton transitions of one instance.
    pub fn component_subnet(&mut self, model: &ArchitectureModel, emi: &ErrorModelInstance) {
        let owner = model.relative_path(&emi.owner).to_string();
        for s in &emi.states {
            let ix = self.place(
                format!("{owner}/{}", s.name),
                u32::from(s.initial),
                PlaceOrigin::State {
                    component: emi.owner.clone(),
                    state: s.name.clone(),
                },
            );
            self.state_places
                .insert((emi.owner.clone(), s.name.clone()), ix);
        }
        for tr in &emi.transitions {
            let Some(occ) = emi.occurrence_of(&tr.trigger) else {
                continue;
            };
            let kind = match occ {
                Occurrence::Poisson(rate) => TransitionKind::Timed { rate },
                Occurrence::Fixed(p) if p > 0.0 => TransitionKind::Immediate { weight: p },
                Occurrence::Fixed(_) => {
                    self.warnings.push(Diagnostic::warning(
                        format!(
                            "inert transition: {owner}/{} -[{}]-> {} has probability 0 and is omitted",
                            tr.source, tr.trigger, tr.destination
                        ),
                        Some(tr.span.clone()),
                    ));
                    continue;
                }
            };
            let t = self.transition(
                format!("{owner}/{}-[{}]->{}", tr.source, tr.trigger, tr.destination),
                kind,
                TransitionOrigin::Component {
                    component: emi.owner.clone(),
                    trigger: tr.trigger.clone(),
                    source: tr.source.clone(),
                    destination: tr.destination.clone(),
                },
            );
            let (src, dst) = (
                self.state_place(&emi.owner, &tr.source),
                self.state_place(&emi.owner, &tr.destination),
            );
            self.arc(ArcDirection::PlaceToTransition, src, t);
            self.arc(ArcDirection::TransitionToPlace, dst, t);
            if let Trigger::Out(p) = &tr.trigger {
                self.anchors
                    .entry((emi.owner.clone(), p.clone()))
                    .or_default()
                    .push(t);
            }
        }
    }

    /// Pending place plus consume/absorb transitions for one link. Masked
    /// links add nothing; links whose propagation is never fired add nothing
    /// and leave a warning.
    pub fn dependency_subnet(
        &mut self,
        model: &ArchitectureModel,
        link: &DependencyLink,
        receiver: &ErrorModelInstance,
    ) {
        let LinkEffect::InProp(raised) = &link.effect else {
            return;
        };
        let Some(anchors) = self
            .anchors
            .get(&(link.sender.clone(), link.out_prop.clone()))
            .cloned()
        else {
            self.warnings.push(Diagnostic::warning(
                format!(
                    "inert propagation: out propagation {} of {} is never fired, link to {} dropped",
                    link.out_prop, link.sender, link.receiver
                ),
                model.component(&link.sender).map(|c| c.span.clone()),
            ));
            return;
        };
        let lref = LinkRef::from(link);
        let label = format!(
            "{}/{}->{}",
            model.relative_path(&link.sender),
            link.out_prop,
            model.relative_path(&link.receiver)
        );
        let pending = self.place(
            format!("pend({label})"),
            0,
            PlaceOrigin::Pending(lref.clone()),
        );
        for a in anchors {
            self.arc(ArcDirection::TransitionToPlace, pending, a);
        }

        for tr in &receiver.transitions {
            if tr.trigger != Trigger::In(raised.clone()) {
                continue;
            }
            let t = self.transition(
                format!("consume({label})@{}->{}", tr.source, tr.destination),
                TransitionKind::Immediate { weight: 1.0 },
                TransitionOrigin::Consume {
                    link: lref.clone(),
                    source: tr.source.clone(),
                    destination: tr.destination.clone(),
                },
            );
            let (src, dst) = (
                self.state_place(&receiver.owner, &tr.source),
                self.state_place(&receiver.owner, &tr.destination),
            );
            self.arc(ArcDirection::PlaceToTransition, pending, t);
            self.arc(ArcDirection::PlaceToTransition, src, t);
            self.arc(ArcDirection::TransitionToPlace, dst, t);
        }
        for s in &receiver.states {
            let reacts = receiver
                .transitions
                .iter()
                .any(|tr| tr.source == s.name && tr.trigger == Trigger::In(raised.clone()));
            if reacts {
                continue;
            }
            let t = self.transition(
                format!("absorb({label})@{}", s.name),
                TransitionKind::Immediate { weight: 1.0 },
                TransitionOrigin::Absorb {
                    link: lref.clone(),
                    state: s.name.clone(),
                },
            );
            let sp = self.state_place(&receiver.owner, &s.name);
            self.arc(ArcDirection::PlaceToTransition, pending, t);
            self.arc(ArcDirection::PlaceToTransition, sp, t);
            self.arc(ArcDirection::TransitionToPlace, sp, t);
        }
    }

    /// Assign zero-padded ids (`p0..`, `t0..`, `a0..`) in creation order, so
    /// lexicographic id order equals creation order.
    pub fn finish(self) -> (Gspn, TraceMap, Vec<Diagnostic>) {
        fn ids(prefix: char, n: usize) -> Vec<String> {
            let width = n.saturating_sub(1).to_string().len();
            (0..n).map(|i| format!("{prefix}{i:0width$}")).collect()
        }
        let pids = ids('p', self.places.len());
        let tids = ids('t', self.transitions.len());
        let aids = ids('a', self.arcs.len());
        let mut trace = TraceMap::default();
        let mut net = Gspn::default();
        for ((name, m0, origin), id) in self.places.into_iter().zip(&pids) {
            trace.place_origin.insert(id.clone(), origin);
            net.places.push(Place {
                id: id.clone(),
                name,
                initial_marking: m0,
            });
        }
        for ((name, kind, origin), id) in self.transitions.into_iter().zip(&tids) {
            trace.transition_origin.insert(id.clone(), origin);
            net.transitions.push(Transition {
                id: id.clone(),
                name,
                kind,
            });
        }
        for ((direction, p, t), id) in self.arcs.into_iter().zip(aids) {
            net.arcs.push(Arc {
                id,
                direction,
                place: pids[p].clone(),
                transition: tids[t].clone(),
                weight: 1,
            });
        }
        (net, trace, self.warnings)
    }
}

/// Transform a validated model.
pub fn transform(model: &ArchitectureModel) -> Result<Transformed, TransformError> {
    let instances = model.error_model_instances()?;
    if instances.is_empty() {
        return Err(TransformError::NothingToTransform);
    }
    let by_owner: BTreeMap<&str, &ErrorModelInstance> =
        instances.iter().map(|i| (i.owner.as_str(), i)).collect();

    let mut b = NetBuilder::new();
    for emi in &instances {
        b.component_subnet(model, emi);
    }
    let links = find_dependencies(model);
    for link in &links {
        let receiver = by_owner[link.receiver.as_str()];
        b.dependency_subnet(model, link, receiver);
    }
    let (net, trace, warnings) = b.finish();
    Ok(Transformed {
        net,
        trace,
        links,
        warnings,
    })
}

/// Warnings for `fixed(p)` occurrences with `p < 1` whose transition has no
/// conflicting immediate sibling from the same state: such a transition
/// fires with probability 1 whatever `p` says.
pub fn lone_fixed_occurrences(model: &ArchitectureModel) -> Vec<Diagnostic> {
    let Ok(instances) = model.error_model_instances() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for emi in &instances {
        let immediate = |tr: &crate::aadl::ErrorTransition| matches!(emi.occurrence_of(&tr.trigger), Some(Occurrence::Fixed(p)) if p > 0.0);
        for (i, tr) in emi.transitions.iter().enumerate() {
            let Some(Occurrence::Fixed(p)) = emi.occurrence_of(&tr.trigger) else {
                continue;
            };
            if p <= 0.0 || p >= 1.0 {
                continue;
            }
            let sibling = emi
                .transitions
                .iter()
                .enumerate()
                .any(|(j, other)| j != i && other.source == tr.source && immediate(other));
            if !sibling {
                out.push(Diagnostic::warning(
                    format!(
                        "lone fixed occurrence: {} of {} has probability {p} but no conflicting immediate transition from state {}; it fires with probability 1",
                        tr.trigger.name(),
                        emi.owner,
                        tr.source
                    ),
                    model.component(&emi.owner).map(|c| c.span.clone()),
                ));
            }
        }
    }
    out
}
