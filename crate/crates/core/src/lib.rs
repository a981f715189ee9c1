//! Transformation of architecture models annotated with stochastic error
//! models into Generalized Stochastic Petri Nets, and evaluation of
//! dependability measures on the resulting continuous-time Markov chain.
//!
//! The pipeline is:
//!
//! 1. [`parser::parse_model`] reads `.adm` text into an [`aadl::ArchitectureModel`],
//!    checked by [`aadl::validate_architecture`].
//! 2. [`dependency::find_dependencies`] enumerates propagation links over
//!    bindings, connections and bus accesses, applying `guard_in` rules.
//! 3. [`transform::transform`] builds component subnets, then dependency
//!    subnets, and a trace map from every net element back to the model.
//! 4. [`gspn::reachability`] explores the marking graph and
//!    [`analysis`] turns it into a CTMC and computes availability,
//!    reliability and MTTF.
//! 5. [`emit`] writes PNML, a generic XML interchange file and dot text.

pub mod aadl;
pub mod analysis;
pub mod cli;
pub mod dependency;
pub mod diagnostic;
pub mod emit;
pub mod gspn;
pub mod parser;
pub mod transform;

/// Shortest round-trip decimal in scientific notation with at least one
/// fractional digit, e.g. `1.0e-3`, `2.5e0`.
pub fn format_real(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:e}");
    match s.split_once('e') {
        Some((mantissa, exp)) if !mantissa.contains('.') => format!("{mantissa}.0e{exp}"),
        _ => s,
    }
}
