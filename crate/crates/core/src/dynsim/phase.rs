//! Phase-oscillator diagnostics: basins of the two-cluster quotient and
//! asymptotic phase lags of the full network.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coloring::QuotientNetwork;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::netmodel::Network;

use super::models::Models;
use super::simulate::{integrate_full, integrate_quotient};

/// Wraps an angle into `[0, 2 pi)`.
pub fn wrap_tau(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Angular distance between two phases.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = wrap_tau(a - b);
    d.min(TAU - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseLabel {
    InPhase,
    AntiPhase,
    Other,
}

impl PhaseLabel {
    pub fn classify(lag: f64, tol: f64) -> Self {
        if angle_distance(lag, 0.0) <= tol {
            PhaseLabel::InPhase
        } else if angle_distance(lag, PI) <= tol {
            PhaseLabel::AntiPhase
        } else {
            PhaseLabel::Other
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PhaseLabel::InPhase => "in-phase",
            PhaseLabel::AntiPhase => "anti-phase",
            PhaseLabel::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BasinOptions {
    pub dt: f64,
    pub horizon: f64,
    pub tol: f64,
    pub execution: Execution,
}

impl Default for BasinOptions {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            horizon: 300.0,
            tol: 0.1,
            execution: Execution::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinPoint {
    pub delay: f64,
    pub initial_lag: f64,
    /// Asymptotic `s_2 - s_1` in `[0, 2 pi)`.
    pub final_lag: f64,
    pub label: PhaseLabel,
}

/// Labels the asymptotic lag of a two-cluster phase quotient started at
/// `(0, lag0)` for every `(delay, lag0)` pair.
pub fn basin_map(qnet: &QuotientNetwork, delays: &[f64], lags: &[f64], opts: &BasinOptions) -> Result<Vec<BasinPoint>> {
    if qnet.num_clusters() != 2 || qnet.state_dim != 1 {
        return Err(Error::Config("basin maps need a two-cluster phase quotient".into()));
    }
    let models = Models::for_quotient(qnet)?;
    let pairs: Vec<(f64, f64)> = delays.iter().flat_map(|&d| lags.iter().map(move |&l| (d, l))).collect();
    let out = opts.execution.map(pairs, |(delay, lag0)| -> Result<BasinPoint> {
        let q = qnet.with_delay(delay);
        let tr = integrate_quotient(&q, &models, &[0.0, lag0], opts.horizon, opts.dt, usize::MAX)?;
        let s = tr.last();
        let final_lag = wrap_tau(s[1] - s[0]);
        Ok(BasinPoint {
            delay,
            initial_lag: lag0,
            final_lag,
            label: PhaseLabel::classify(final_lag, opts.tol),
        })
    });
    out.into_iter().collect()
}

#[derive(Debug, Clone, Copy)]
pub struct PhaseLagOptions {
    pub dt: f64,
    pub horizon: f64,
    /// Amplitude of the seeded initial phase perturbation.
    pub perturbation: f64,
    pub seed: u64,
    /// Largest change of any lag over the last tenth of the run for a locked state.
    pub lock_tol: f64,
    pub execution: Execution,
}

impl Default for PhaseLagOptions {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            horizon: 400.0,
            perturbation: 1e-3,
            seed: 0,
            lock_tol: 1e-3,
            execution: Execution::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseLagPoint {
    pub delay: f64,
    /// `phi_i - phi_1` in `[0, 2 pi)` for every node.
    pub lags: Vec<f64>,
    /// Common frequency over the last tenth of the run.
    pub frequency: f64,
    pub locked: bool,
}

/// Asymptotic phase lags relative to node 1 of a phase-oscillator network.
pub fn phase_lag_curve(net: &Network, delays: &[f64], opts: &PhaseLagOptions) -> Result<Vec<PhaseLagPoint>> {
    if net.state_dim != 1 {
        return Err(Error::Config("phase lags need scalar phase nodes".into()));
    }
    let models = Models::for_network(net)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let init: Vec<f64> = (0..net.len())
        .map(|_| opts.perturbation * rng.gen_range(-1.0..1.0))
        .collect();
    let out = opts.execution.map(delays.to_vec(), |delay| -> Result<PhaseLagPoint> {
        let mut n2 = net.clone();
        n2.layers.iter_mut().for_each(|l| l.delay = delay);
        let samples = 200usize;
        let steps = (opts.horizon / opts.dt).round() as usize;
        let tr = integrate_full(&n2, &models, &init, opts.horizon, opts.dt, (steps / samples).max(1))?;
        let last = tr.last();
        let lags: Vec<f64> = last.iter().map(|p| wrap_tau(p - last[0])).collect();
        let t_end = *tr.times.last().expect("samples");
        let t_ref = t_end - 0.1 * opts.horizon;
        let k = tr.times.partition_point(|&t| t < t_ref).min(tr.times.len() - 1);
        let earlier = &tr.states[k];
        let locked = (0..net.len()).all(|i| {
            let then = earlier[i] - earlier[0];
            let now = last[i] - last[0];
            (now - then).abs() <= opts.lock_tol
        });
        let frequency = (last[0] - earlier[0]) / (t_end - tr.times[k]).max(f64::MIN_POSITIVE);
        Ok(PhaseLagPoint {
            delay,
            lags,
            frequency,
            locked,
        })
    });
    out.into_iter().collect()
}

/// Unwraps a sequence of angles so consecutive values differ by less than pi.
pub fn unwrap(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut offset = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if i > 0 {
            let prev = values[i - 1] + offset;
            let d = v + offset - prev;
            offset -= TAU * (d / TAU).round();
        }
        out.push(v + offset);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line; `r2` is 1 for data with no spread.
pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 1e-300 { 1.0 - ss_res / syy } else { 1.0 };
    LineFit { slope, intercept, r2 }
}

/// Line fit of every node's lag along the delay grid, after unwrapping.
pub fn fit_lags(curve: &[PhaseLagPoint]) -> Vec<LineFit> {
    let x: Vec<f64> = curve.iter().map(|p| p.delay).collect();
    let nodes = curve.first().map_or(0, |p| p.lags.len());
    (0..nodes)
        .map(|i| {
            let raw: Vec<f64> = curve.iter().map(|p| p.lags[i]).collect();
            fit_line(&x, &unwrap(&raw))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping_and_labels() {
        assert!((wrap_tau(-0.5) - (TAU - 0.5)).abs() < 1e-12);
        assert_eq!(PhaseLabel::classify(TAU - 0.05, 0.1), PhaseLabel::InPhase);
        assert_eq!(PhaseLabel::classify(PI + 0.05, 0.1), PhaseLabel::AntiPhase);
        assert_eq!(PhaseLabel::classify(1.0, 0.1), PhaseLabel::Other);
    }

    #[test]
    fn unwrap_removes_jumps() {
        let u = unwrap(&[6.0, 0.1, 0.5, 6.2]);
        assert!((u[1] - (TAU + 0.1)).abs() < 1e-12);
        assert!((u[3] - 6.2).abs() < 1e-12);
    }

    #[test]
    fn exact_line() {
        let f = fit_line(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
    }
}
