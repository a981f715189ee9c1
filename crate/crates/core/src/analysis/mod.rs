//! Dependability evaluation of a GSPN through its underlying CTMC.
//!
//! The marking graph is reduced to a CTMC over tangible markings
//! ([`eliminate_vanishing`]), each tangible state is labeled from the root
//! system's `state_mapping` ([`classify`]), and [`compute_measures`] derives
//! steady-state availability, a reliability curve and the MTTF. All times are
//! in hours.

mod ctmc;
mod solve;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::aadl::{evaluate_state_expr, ArchitectureModel, StateExpr};
use crate::gspn::{reachability, GspnError, MarkingGraph};
use crate::transform::{transform, PlaceOrigin, TraceMap, TransformError, Transformed};

pub use ctmc::{eliminate_vanishing, Ctmc};
pub use solve::{
    mean_time_to_absorption, steady_state, transient, SteadyState, MAX_ITERATIONS,
    MAX_UNIFORMIZED_HORIZON,
};

pub const DEFAULT_TOLERANCE: f64 = 1.0e-10;
pub const DEFAULT_TIMES: [f64; 4] = [1.0e2, 1.0e3, 1.0e4, 1.0e5];
pub const DEFAULT_BOUND: u32 = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Gspn(#[from] GspnError),
    #[error("vanishing loop detected: {0}")]
    VanishingLoop(String),
    #[error("no tangible marking is reachable")]
    NoTangibleState,
    #[error("classification error: {0}")]
    Classification(String),
    #[error("state {0} is absorbing: steady-state analysis does not apply, use reliability and MTTF instead")]
    AbsorbingState(usize),
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("uniformized horizon {0:e} exceeds {MAX_UNIFORMIZED_HORIZON:e}: use steady-state analysis for such long times")]
    HorizonTooLong(f64),
    #[error("invalid time {0}: times must be finite and non-negative")]
    InvalidTime(f64),
    #[error("invalid tolerance {0}: must be positive")]
    InvalidTolerance(f64),
    #[error("initial state is already failed")]
    InitiallyFailed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Failed,
    Catastrophic,
    Up,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Failed => "failed",
            Label::Catastrophic => "catastrophic",
            Label::Up => "up",
        })
    }
}

/// Labels of every CTMC state, indexed like [`Ctmc::states`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StatePartition {
    pub labels: Vec<BTreeSet<Label>>,
}

impl StatePartition {
    pub fn is_failed(&self, i: usize) -> bool {
        self.labels[i].contains(&Label::Failed)
    }

    pub fn is_up(&self, i: usize) -> bool {
        self.labels[i].contains(&Label::Up)
    }

    pub fn failed_mask(&self) -> Vec<bool> {
        (0..self.labels.len()).map(|i| self.is_failed(i)).collect()
    }
}

/// Component states in a marking, keyed by path relative to the root.
fn assignment(
    model: &ArchitectureModel,
    net_places: &[crate::gspn::Place],
    trace: &TraceMap,
    marking: &[u32],
) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for (p, &tokens) in net_places.iter().zip(marking) {
        if tokens == 0 {
            continue;
        }
        if let Some(PlaceOrigin::State { component, state }) = trace.place_origin.get(&p.id) {
            out.insert(model.relative_path(component).to_string(), state.clone());
        }
    }
    out
}

/// Label every CTMC state from the root system's `failed` and optional
/// `catastrophic` mappings.
pub fn classify(
    model: &ArchitectureModel,
    transformed: &Transformed,
    graph: &MarkingGraph,
    ctmc: &Ctmc,
) -> Result<StatePartition, AnalysisError> {
    let failed = model
        .root
        .mapping("failed")
        .ok_or_else(|| {
            AnalysisError::Classification(format!(
                "root system {} defines no failed state mapping",
                model.root.name
            ))
        })?
        .expr
        .clone();
    let catastrophic: Option<StateExpr> =
        model.root.mapping("catastrophic").map(|m| m.expr.clone());
    let eval = |e: &StateExpr, a: &BTreeMap<String, String>| {
        evaluate_state_expr(e, a).map_err(|err| AnalysisError::Classification(err.to_string()))
    };
    let mut labels = Vec::with_capacity(ctmc.len());
    for &m in &ctmc.states {
        let a = assignment(
            model,
            &transformed.net.places,
            &transformed.trace,
            &graph.markings[m].0,
        );
        let mut set = BTreeSet::new();
        if eval(&failed, &a)? {
            set.insert(Label::Failed);
        } else {
            set.insert(Label::Up);
        }
        if let Some(c) = &catastrophic {
            if eval(c, &a)? {
                set.insert(Label::Catastrophic);
            }
        }
        labels.push(set);
    }
    Ok(StatePartition { labels })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mttf {
    Hours(f64),
    /// Failure is avoided forever with positive probability.
    Infinite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureReport {
    /// Absent when the chain has absorbing states.
    pub steady_availability: Option<f64>,
    pub reliability: Vec<(f64, f64)>,
    pub mttf: Mttf,
    pub steady_iterations: Option<usize>,
    pub steady_residual: Option<f64>,
}

/// Availability, reliability at each of `times`, and MTTF.
///
/// Reliability and MTTF use the chain with every failed state made
/// absorbing.
pub fn compute_measures(
    ctmc: &Ctmc,
    partition: &StatePartition,
    times: &[f64],
    tol: f64,
) -> Result<MeasureReport, AnalysisError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(AnalysisError::InvalidTolerance(tol));
    }
    let failed = partition.failed_mask();
    if (0..ctmc.len()).any(|i| failed[i] && ctmc.initial[i] > 0.0) {
        return Err(AnalysisError::InitiallyFailed);
    }

    let (steady_availability, steady_iterations, steady_residual) = match steady_state(ctmc, tol) {
        Ok(s) => {
            let a = (0..ctmc.len())
                .filter(|&i| partition.is_up(i))
                .map(|i| s.distribution[i])
                .sum::<f64>();
            (
                Some(a.clamp(0.0, 1.0)),
                Some(s.iterations),
                Some(s.residual),
            )
        }
        Err(AnalysisError::AbsorbingState(_)) => (None, None, None),
        Err(e) => return Err(e),
    };

    let absorbing = ctmc.with_absorbing(&failed);
    let mut reliability = Vec::with_capacity(times.len());
    for &t in times {
        let p = transient(&absorbing, t, tol)?;
        let r: f64 = (0..ctmc.len()).filter(|&i| !failed[i]).map(|i| p[i]).sum();
        reliability.push((t, r.clamp(0.0, 1.0)));
    }

    let mttf = match mean_time_to_absorption(&absorbing, &failed)? {
        Some(h) => Mttf::Hours(h),
        None => Mttf::Infinite,
    };
    Ok(MeasureReport {
        steady_availability,
        reliability,
        mttf,
        steady_iterations,
        steady_residual,
    })
}

#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub times: Vec<f64>,
    pub tol: f64,
    pub bound: u32,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            times: DEFAULT_TIMES.to_vec(),
            tol: DEFAULT_TOLERANCE,
            bound: DEFAULT_BOUND,
        }
    }
}

/// Everything produced by [`analyze`], kept for reporting.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub transformed: Transformed,
    pub graph: MarkingGraph,
    pub ctmc: Ctmc,
    pub partition: StatePartition,
    pub report: MeasureReport,
}

impl Analysis {
    pub fn vanishing_count(&self) -> usize {
        self.graph.markings.len() - self.ctmc.len()
    }
}

/// Transform, explore, reduce, classify and measure a validated model.
pub fn analyze(
    model: &ArchitectureModel,
    options: &AnalysisOptions,
) -> Result<Analysis, AnalysisError> {
    let transformed = transform(model)?;
    let graph = reachability(&transformed.net, options.bound)?;
    let ctmc = eliminate_vanishing(&graph, &transformed.net)?;
    let partition = classify(model, &transformed, &graph, &ctmc)?;
    let report = compute_measures(&ctmc, &partition, &options.times, options.tol)?;
    Ok(Analysis {
        transformed,
        graph,
        ctmc,
        partition,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_model;

    const L1: &str = "\
error model TwoState {
  states { ErrorFree : initial; Failed; }
  events { Fault occurrence poisson 1.0e-3; Repair occurrence poisson 1.0e-1; }
  propagations { }
  transitions { ErrorFree -[Fault]-> Failed; Failed -[Repair]-> ErrorFree; }
}
processor CpuT { annex error_model { use TwoState; } }
system Top {
  sub CPU : CpuT;
  state_mapping failed => CPU[Failed];
}
root Top;
";

    #[test]
    fn l1_partition() {
        let m = parse_model(L1, "l1.adm").unwrap();
        let a = analyze(&m, &AnalysisOptions::default()).unwrap();
        assert_eq!(a.graph.markings[a.ctmc.states[0]].0, vec![1, 0]);
        assert!(a.partition.is_up(0));
        assert!(a.partition.is_failed(1));
        assert!(a
            .partition
            .labels
            .iter()
            .all(|l| !l.contains(&Label::Catastrophic)));
    }

    #[test]
    fn failed_unreachable() {
        let text = L1.replace("CPU[Failed]", "CPU[Failed] and not CPU[Failed]");
        let m = parse_model(&text, "x").unwrap();
        let a = analyze(&m, &AnalysisOptions::default()).unwrap();
        assert_eq!(a.report.mttf, Mttf::Infinite);
        assert!(a
            .report
            .reliability
            .iter()
            .all(|&(_, r)| (r - 1.0).abs() < 1e-12));
    }
}
