//! Reduction of a marking graph to a CTMC over its tangible markings.

use std::collections::BTreeMap;

use crate::gspn::{Gspn, MarkingGraph, MarkingKind};

use super::AnalysisError;

/// Continuous-time Markov chain with a sparse generator.
///
/// Only off-diagonal rates are stored; the diagonal is the negated row sum.
#[derive(Clone, Debug, PartialEq)]
pub struct Ctmc {
    /// Marking index in the originating graph of each state.
    pub states: Vec<usize>,
    /// Per state, `(target, rate)` pairs sorted by target, no self loops.
    pub rates: Vec<Vec<(usize, f64)>>,
    pub initial: Vec<f64>,
}

impl Ctmc {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        self.rates[i].iter().map(|&(_, r)| r).sum()
    }

    pub fn is_absorbing(&self, i: usize) -> bool {
        self.rates[i].is_empty()
    }

    /// Largest exit rate, the magnitude of the most negative diagonal entry.
    pub fn max_exit_rate(&self) -> f64 {
        (0..self.len())
            .map(|i| self.exit_rate(i))
            .fold(0.0, f64::max)
    }

    /// `x Q` for a row vector `x`.
    pub fn left_multiply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, row) in self.rates.iter().enumerate() {
            if x[i] == 0.0 {
                continue;
            }
            let mut exit = 0.0;
            for &(j, r) in row {
                out[j] += x[i] * r;
                exit += r;
            }
            out[i] -= x[i] * exit;
        }
        out
    }

    /// `‖x Q‖∞`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.left_multiply(x)
            .into_iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Dense generator, for inspection and tests.
    pub fn dense_generator(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut q = vec![vec![0.0; n]; n];
        for (i, row) in self.rates.iter().enumerate() {
            for &(j, r) in row {
                q[i][j] += r;
                q[i][i] -= r;
            }
        }
        q
    }

    /// Copy of the chain where every state in `absorbing` loses its exits.
    pub fn with_absorbing(&self, absorbing: &[bool]) -> Ctmc {
        let mut c = self.clone();
        for (i, row) in c.rates.iter_mut().enumerate() {
            if absorbing[i] {
                row.clear();
            }
        }
        c
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Visit {
    Active,
    Done,
}

/// Random-switch resolution of vanishing markings.
struct Resolver<'a> {
    graph: &'a MarkingGraph,
    net: &'a Gspn,
    tangible_index: &'a [Option<usize>],
    visit: Vec<Option<Visit>>,
    memo: Vec<Option<BTreeMap<usize, f64>>>,
    stack: Vec<usize>,
    out_edges: Vec<Vec<(usize, usize)>>,
}

impl Resolver<'_> {
    /// Probability of ending in each tangible state when leaving marking `m`.
    fn distribution(&mut self, m: usize) -> Result<BTreeMap<usize, f64>, AnalysisError> {
        if let Some(t) = self.tangible_index[m] {
            return Ok(BTreeMap::from([(t, 1.0)]));
        }
        match self.visit[m] {
            Some(Visit::Done) => return Ok(self.memo[m].clone().unwrap_or_default()),
            Some(Visit::Active) => {
                let start = self.stack.iter().position(|&s| s == m).unwrap_or(0);
                let mut cycle: Vec<String> = self.stack[start..]
                    .iter()
                    .map(|&s| self.graph.markings[s].to_string())
                    .collect();
                cycle.push(self.graph.markings[m].to_string());
                return Err(AnalysisError::VanishingLoop(cycle.join(" -> ")));
            }
            None => {}
        }
        self.visit[m] = Some(Visit::Active);
        self.stack.push(m);
        let edges = self.out_edges[m].clone();
        let total: f64 = edges
            .iter()
            .map(|&(t, _)| self.net.transitions[t].kind.parameter())
            .sum();
        let mut dist = BTreeMap::new();
        for (t, to) in edges {
            let p = self.net.transitions[t].kind.parameter() / total;
            for (s, q) in self.distribution(to)? {
                *dist.entry(s).or_insert(0.0) += p * q;
            }
        }
        self.stack.pop();
        self.visit[m] = Some(Visit::Done);
        self.memo[m] = Some(dist.clone());
        Ok(dist)
    }
}

/// Collapse vanishing markings of `graph` into a CTMC over tangible markings.
///
/// Immediate transitions enabled together in a vanishing marking form a
/// random switch with probabilities proportional to their weights. A timed
/// firing into a vanishing marking is split across the tangible markings
/// eventually reached. Jumps that return to their own source are dropped.
pub fn eliminate_vanishing(graph: &MarkingGraph, net: &Gspn) -> Result<Ctmc, AnalysisError> {
    let mut tangible_index = vec![None; graph.markings.len()];
    let mut states = Vec::new();
    for i in graph.tangible() {
        tangible_index[i] = Some(states.len());
        states.push(i);
    }
    let mut out_edges = vec![Vec::new(); graph.markings.len()];
    for e in &graph.edges {
        out_edges[e.from].push((e.transition, e.to));
    }
    let mut r = Resolver {
        graph,
        net,
        tangible_index: &tangible_index,
        visit: vec![None; graph.markings.len()],
        memo: vec![None; graph.markings.len()],
        stack: Vec::new(),
        out_edges,
    };

    let mut initial = vec![0.0; states.len()];
    for (j, p) in r.distribution(graph.initial)? {
        initial[j] += p;
    }
    if states.is_empty() {
        return Err(AnalysisError::NoTangibleState);
    }

    let mut rates = Vec::with_capacity(states.len());
    for (i, &m) in states.iter().enumerate() {
        debug_assert_eq!(graph.kinds[m], MarkingKind::Tangible);
        let mut row: BTreeMap<usize, f64> = BTreeMap::new();
        for (t, to) in r.out_edges[m].clone() {
            let rate = net.transitions[t].kind.parameter();
            for (j, p) in r.distribution(to)? {
                if j != i {
                    *row.entry(j).or_insert(0.0) += rate * p;
                }
            }
        }
        rates.push(row.into_iter().filter(|&(_, v)| v > 0.0).collect());
    }
    Ok(Ctmc {
        states,
        rates,
        initial,
    })
}
