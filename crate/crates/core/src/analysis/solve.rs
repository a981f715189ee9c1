//! Numerical solvers: stationary distribution, transient distribution and
//! mean time to absorption.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::{AnalysisError, Ctmc};

/// Iteration cap for the stationary solver.
pub const MAX_ITERATIONS: usize = 1_000_000;

/// Largest `Λt` accepted by [`transient`].
pub const MAX_UNIFORMIZED_HORIZON: f64 = 1.0e6;

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyState {
    pub distribution: Vec<f64>,
    pub iterations: usize,
    /// `‖πQ‖∞` of the returned distribution.
    pub residual: f64,
}

fn uniformization_constant(ctmc: &Ctmc) -> f64 {
    1.001 * ctmc.max_exit_rate()
}

/// One step `x P` of the uniformized chain `P = I + Q/Λ`.
fn uniformized_step(ctmc: &Ctmc, x: &[f64], lambda: f64) -> Vec<f64> {
    let xq = ctmc.left_multiply(x);
    x.iter().zip(xq).map(|(a, b)| a + b / lambda).collect()
}

fn normalize(x: &mut [f64]) {
    let s: f64 = x.iter().sum();
    if s > 0.0 {
        x.iter_mut().for_each(|v| *v /= s);
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Stationary distribution by power iteration on the uniformized chain,
/// started from the initial distribution.
///
/// Iterates until `‖πQ‖∞ ≤ tol`, then keeps iterating while the step size
/// still shrinks, so results are accurate to rounding and do not depend on
/// the time scale of the rates.
pub fn steady_state(ctmc: &Ctmc, tol: f64) -> Result<SteadyState, AnalysisError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(AnalysisError::InvalidTolerance(tol));
    }
    let n = ctmc.len();
    if n == 1 {
        return Ok(SteadyState {
            distribution: vec![1.0],
            iterations: 0,
            residual: 0.0,
        });
    }
    if let Some(i) = (0..n).find(|&i| ctmc.is_absorbing(i)) {
        return Err(AnalysisError::AbsorbingState(i));
    }
    let lambda = uniformization_constant(ctmc);
    let mut pi = ctmc.initial.clone();
    let mut iterations = 0;
    let mut residual = ctmc.residual(&pi);
    while residual > tol {
        if iterations >= MAX_ITERATIONS {
            return Err(AnalysisError::NoConvergence {
                iterations,
                residual,
            });
        }
        pi = uniformized_step(ctmc, &pi, lambda);
        normalize(&mut pi);
        iterations += 1;
        residual = ctmc.residual(&pi);
    }

    let mut step = f64::INFINITY;
    let extra = (10 * iterations).max(1000).min(MAX_ITERATIONS - iterations);
    for _ in 0..extra {
        let mut next = uniformized_step(ctmc, &pi, lambda);
        normalize(&mut next);
        let d = max_abs_diff(&next, &pi);
        if d >= step {
            break;
        }
        step = d;
        pi = next;
        iterations += 1;
        if d == 0.0 {
            break;
        }
    }
    residual = ctmc.residual(&pi);
    Ok(SteadyState {
        distribution: pi,
        iterations,
        residual,
    })
}

/// Poisson(q) probabilities over `[left, left + weights.len())`, truncated
/// where the terms fall below `eps` and renormalized.
fn poisson_weights(q: f64, eps: f64) -> (usize, Vec<f64>) {
    let mode = q.floor() as usize;
    let ln_fact: f64 = (2..=mode).map(|k| (k as f64).ln()).sum();
    let w_mode = (-q + mode as f64 * q.ln() - ln_fact).exp();
    let w_mode = if q == 0.0 { 1.0 } else { w_mode };

    let mut left = vec![];
    let mut w = w_mode;
    let mut k = mode;
    while k > 0 {
        w *= k as f64 / q;
        k -= 1;
        if w < eps {
            break;
        }
        left.push(w);
    }
    let lo = mode - left.len();
    let mut weights: Vec<f64> = left.into_iter().rev().collect();
    weights.push(w_mode);
    let mut w = w_mode;
    let mut k = mode;
    loop {
        k += 1;
        w *= q / k as f64;
        if w < eps && k as f64 > q {
            break;
        }
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|v| *v /= total);
    (lo, weights)
}

/// Transient distribution at time `t` by uniformization.
pub fn transient(ctmc: &Ctmc, t: f64, tol: f64) -> Result<Vec<f64>, AnalysisError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(AnalysisError::InvalidTime(t));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(AnalysisError::InvalidTolerance(tol));
    }
    let max_exit = ctmc.max_exit_rate();
    if t == 0.0 || max_exit == 0.0 {
        return Ok(ctmc.initial.clone());
    }
    let lambda = 1.001 * max_exit;
    let q = lambda * t;
    if q > MAX_UNIFORMIZED_HORIZON {
        return Err(AnalysisError::HorizonTooLong(q));
    }
    let (lo, weights) = poisson_weights(q, tol * 1e-3);
    let mut x = ctmc.initial.clone();
    for _ in 0..lo {
        x = uniformized_step(ctmc, &x, lambda);
    }
    let mut out = vec![0.0; ctmc.len()];
    for (k, w) in weights.iter().enumerate() {
        if k > 0 {
            x = uniformized_step(ctmc, &x, lambda);
        }
        for (o, v) in out.iter_mut().zip(&x) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// Mean time to reach a state in `target` from the initial distribution.
///
/// `None` when the target is avoided forever with positive probability.
pub fn mean_time_to_absorption(ctmc: &Ctmc, target: &[bool]) -> Result<Option<f64>, AnalysisError> {
    let n = ctmc.len();
    if (0..n).any(|i| target[i] && ctmc.initial[i] > 0.0) {
        return Err(AnalysisError::InitiallyFailed);
    }
    // States reachable from the initial support without passing the target.
    let mut reachable = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| ctmc.initial[i] > 0.0).collect();
    for &i in &queue {
        reachable[i] = true;
    }
    while let Some(i) = queue.pop_front() {
        for &(j, _) in &ctmc.rates[i] {
            if !target[j] && !reachable[j] {
                reachable[j] = true;
                queue.push_back(j);
            }
        }
    }
    // States that can still reach the target.
    let mut can_fail = target.to_vec();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            if !can_fail[i] && ctmc.rates[i].iter().any(|&(j, _)| can_fail[j]) {
                can_fail[i] = true;
                changed = true;
            }
        }
    }
    if (0..n).any(|i| reachable[i] && !can_fail[i]) {
        return Ok(None);
    }

    let live: Vec<usize> = (0..n).filter(|&i| reachable[i]).collect();
    let mut pos = vec![usize::MAX; n];
    for (k, &i) in live.iter().enumerate() {
        pos[i] = k;
    }
    let m = live.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (k, &i) in live.iter().enumerate() {
        for &(j, r) in &ctmc.rates[i] {
            a[(k, k)] -= r;
            if pos[j] != usize::MAX {
                a[(k, pos[j])] += r;
            }
        }
    }
    let rhs = DVector::from_element(m, -1.0);
    let Some(times) = a.lu().solve(&rhs) else {
        return Ok(None);
    };
    Ok(Some(
        live.iter()
            .enumerate()
            .map(|(k, &i)| ctmc.initial[i] * times[k])
            .sum(),
    ))
}
