//! Generalized Stochastic Petri Nets: places with an initial marking,
//! transitions that are either timed (exponential rate) or immediate
//! (weight), and weighted arcs between them.
//!
//! Immediate transitions pre-empt timed ones. A marking that enables at least
//! one immediate transition is *vanishing*; all others are *tangible*.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::diagnostic::Diagnostic;

#[derive(Clone, Debug, PartialEq)]
pub struct Place {
    pub id: String,
    pub name: String,
    pub initial_marking: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TransitionKind {
    /// Exponentially distributed delay, rate per hour.
    Timed {
        rate: f64,
    },
    Immediate {
        weight: f64,
    },
}

impl TransitionKind {
    pub fn is_immediate(self) -> bool {
        matches!(self, TransitionKind::Immediate { .. })
    }

    /// The rate or weight.
    pub fn parameter(self) -> f64 {
        match self {
            TransitionKind::Timed { rate } => rate,
            TransitionKind::Immediate { weight } => weight,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TransitionKind::Timed { .. } => "timed_exponential",
            TransitionKind::Immediate { .. } => "immediate",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub id: String,
    pub name: String,
    pub kind: TransitionKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArcDirection {
    PlaceToTransition,
    TransitionToPlace,
}

impl ArcDirection {
    pub fn label(self) -> &'static str {
        match self {
            ArcDirection::PlaceToTransition => "place_to_transition",
            ArcDirection::TransitionToPlace => "transition_to_place",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arc {
    pub id: String,
    pub direction: ArcDirection,
    pub place: String,
    pub transition: String,
    pub weight: u32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gspn {
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
    pub arcs: Vec<Arc>,
}

impl Gspn {
    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.places.iter().position(|p| p.id == id)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    pub fn initial_marking(&self) -> Marking {
        Marking(self.places.iter().map(|p| p.initial_marking).collect())
    }
}

/// Token counts, indexed like [`Gspn::places`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(pub Vec<u32>);

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MarkingKind {
    Tangible,
    Vanishing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    /// Index into [`Gspn::transitions`].
    pub transition: usize,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarkingGraph {
    pub markings: Vec<Marking>,
    pub kinds: Vec<MarkingKind>,
    pub edges: Vec<Edge>,
    pub initial: usize,
}

impl MarkingGraph {
    pub fn tangible(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.markings.len()).filter(|&i| self.kinds[i] == MarkingKind::Tangible)
    }

    pub fn out_edges(&self, from: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == from)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GspnError {
    #[error("structurally invalid net: {0}")]
    Invalid(String),
    #[error("marking has {got} entries but the net has {expected} places")]
    Dimension { expected: usize, got: usize },
    #[error("unknown transition {0}")]
    UnknownTransition(String),
    #[error("contract violation: transition {0} is not enabled")]
    NotEnabled(String),
    #[error("unbounded net: place {place} exceeds bound {bound} after a firing sequence of length {depth}")]
    Unbounded {
        place: String,
        bound: u32,
        depth: usize,
    },
}

/// Structural checks. An empty result means the net is valid.
pub fn validate_gspn(net: &Gspn) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut err = |m: String| out.push(Diagnostic::error(m, None));

    let mut ids = BTreeSet::new();
    let all_ids = net
        .places
        .iter()
        .map(|p| &p.id)
        .chain(net.transitions.iter().map(|t| &t.id))
        .chain(net.arcs.iter().map(|a| &a.id));
    for id in all_ids {
        if !ids.insert(id.as_str()) {
            err(format!("duplicate id {id}"));
        }
    }
    for t in &net.transitions {
        let x = t.kind.parameter();
        if !(x.is_finite() && x > 0.0) {
            err(format!(
                "transition {} has non-positive {} {x}",
                t.id,
                if t.kind.is_immediate() {
                    "weight"
                } else {
                    "rate"
                }
            ));
        }
    }
    let places: BTreeSet<&str> = net.places.iter().map(|p| p.id.as_str()).collect();
    let transitions: BTreeSet<&str> = net.transitions.iter().map(|t| t.id.as_str()).collect();
    let mut pairs = BTreeSet::new();
    for a in &net.arcs {
        if !places.contains(a.place.as_str()) {
            err(format!("arc {} references unknown place {}", a.id, a.place));
        }
        if !transitions.contains(a.transition.as_str()) {
            err(format!(
                "arc {} references unknown transition {}",
                a.id, a.transition
            ));
        }
        if a.weight == 0 {
            err(format!("arc {} has weight 0", a.id));
        }
        if !pairs.insert((a.direction, a.place.as_str(), a.transition.as_str())) {
            err(format!(
                "duplicate arc {} ({} {} {})",
                a.id,
                a.direction.label(),
                a.place,
                a.transition
            ));
        }
    }
    for t in &net.transitions {
        let has = |dir| {
            net.arcs
                .iter()
                .any(|a| a.transition == t.id && a.direction == dir)
        };
        if !has(ArcDirection::PlaceToTransition) {
            err(format!("transition {} has no input arc", t.id));
        }
        if !has(ArcDirection::TransitionToPlace) {
            err(format!("transition {} has no output arc", t.id));
        }
    }
    out
}

/// Index-based view of a net used by the firing rule and exploration.
pub(crate) struct CompiledNet {
    /// Transition indices sorted by id.
    pub order: Vec<usize>,
    pub inputs: Vec<Vec<(usize, u32)>>,
    pub outputs: Vec<Vec<(usize, u32)>>,
    pub immediate: Vec<bool>,
}

impl CompiledNet {
    pub fn new(net: &Gspn) -> Result<Self, GspnError> {
        let place_ix: HashMap<&str, usize> = net
            .places
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.as_str(), i))
            .collect();
        let trans_ix: HashMap<&str, usize> = net
            .transitions
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.as_str(), i))
            .collect();
        let n = net.transitions.len();
        let mut inputs = vec![Vec::new(); n];
        let mut outputs = vec![Vec::new(); n];
        for a in &net.arcs {
            let (Some(&p), Some(&t)) = (
                place_ix.get(a.place.as_str()),
                trans_ix.get(a.transition.as_str()),
            ) else {
                return Err(GspnError::Invalid(format!(
                    "arc {} has a dangling endpoint",
                    a.id
                )));
            };
            match a.direction {
                ArcDirection::PlaceToTransition => inputs[t].push((p, a.weight)),
                ArcDirection::TransitionToPlace => outputs[t].push((p, a.weight)),
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| net.transitions[a].id.cmp(&net.transitions[b].id));
        Ok(CompiledNet {
            order,
            inputs,
            outputs,
            immediate: net
                .transitions
                .iter()
                .map(|t| t.kind.is_immediate())
                .collect(),
        })
    }

    fn structurally_enabled(&self, t: usize, m: &Marking) -> bool {
        self.inputs[t].iter().all(|&(p, w)| m.0[p] >= w)
    }

    /// Enabled transitions in id order, immediate ones pre-empting timed ones.
    pub fn enabled(&self, m: &Marking) -> Vec<usize> {
        let all: Vec<usize> = self
            .order
            .iter()
            .copied()
            .filter(|&t| self.structurally_enabled(t, m))
            .collect();
        if all.iter().any(|&t| self.immediate[t]) {
            all.into_iter().filter(|&t| self.immediate[t]).collect()
        } else {
            all
        }
    }

    pub fn fire(&self, m: &Marking, t: usize) -> Marking {
        let mut next = m.0.clone();
        for &(p, w) in &self.inputs[t] {
            next[p] -= w;
        }
        for &(p, w) in &self.outputs[t] {
            next[p] += w;
        }
        Marking(next)
    }
}

fn check_dimension(net: &Gspn, m: &Marking) -> Result<(), GspnError> {
    if m.0.len() != net.places.len() {
        return Err(GspnError::Dimension {
            expected: net.places.len(),
            got: m.0.len(),
        });
    }
    Ok(())
}

/// Ids of the transitions enabled in `m`.
pub fn enabled(net: &Gspn, m: &Marking) -> Result<BTreeSet<String>, GspnError> {
    check_dimension(net, m)?;
    let c = CompiledNet::new(net)?;
    Ok(c.enabled(m)
        .into_iter()
        .map(|t| net.transitions[t].id.clone())
        .collect())
}

/// Fire transition `id` in `m`.
pub fn fire(net: &Gspn, m: &Marking, id: &str) -> Result<Marking, GspnError> {
    check_dimension(net, m)?;
    let t = net
        .transition_index(id)
        .ok_or_else(|| GspnError::UnknownTransition(id.to_string()))?;
    let c = CompiledNet::new(net)?;
    if !c.enabled(m).contains(&t) {
        return Err(GspnError::NotEnabled(id.to_string()));
    }
    Ok(c.fire(m, t))
}

/// Breadth-first reachability graph from the initial marking.
///
/// Markings are numbered in discovery order; successors of a marking are
/// generated in transition id order. Fails as soon as any place holds more
/// than `bound` tokens.
pub fn reachability(net: &Gspn, bound: u32) -> Result<MarkingGraph, GspnError> {
    if let Some(d) = validate_gspn(net).into_iter().next() {
        return Err(GspnError::Invalid(d.message));
    }
    let c = CompiledNet::new(net)?;
    let initial = net.initial_marking();
    if let Some(p) = initial.0.iter().position(|&k| k > bound) {
        return Err(GspnError::Unbounded {
            place: net.places[p].name.clone(),
            bound,
            depth: 0,
        });
    }

    let mut index: HashMap<Marking, usize> = HashMap::new();
    let mut markings = vec![initial.clone()];
    let mut depth = vec![0usize];
    let mut kinds = Vec::new();
    let mut edges = Vec::new();
    index.insert(initial, 0);
    let mut queue = VecDeque::from([0usize]);

    while let Some(i) = queue.pop_front() {
        let m = markings[i].clone();
        let en = c.enabled(&m);
        let vanishing = en.first().is_some_and(|&t| c.immediate[t]);
        debug_assert_eq!(kinds.len(), i);
        kinds.push(if vanishing {
            MarkingKind::Vanishing
        } else {
            MarkingKind::Tangible
        });
        for t in en {
            let next = c.fire(&m, t);
            if let Some(p) = next.0.iter().position(|&k| k > bound) {
                return Err(GspnError::Unbounded {
                    place: net.places[p].name.clone(),
                    bound,
                    depth: depth[i] + 1,
                });
            }
            let j = match index.get(&next) {
                Some(&j) => j,
                None => {
                    let j = markings.len();
                    index.insert(next.clone(), j);
                    markings.push(next);
                    depth.push(depth[i] + 1);
                    queue.push_back(j);
                    j
                }
            };
            edges.push(Edge {
                from: i,
                transition: t,
                to: j,
            });
        }
    }

    Ok(MarkingGraph {
        markings,
        kinds,
        edges,
        initial: 0,
    })
}
