//! Largest transverse Lyapunov exponent by repeated renormalization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::dde::{DelaySystem, Integrator};
use super::simulate::BLOWUP_NORM;
use super::variational::VariationalSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub dt: f64,
    pub horizon: f64,
    /// Fraction of the horizon discarded before averaging.
    pub transient: f64,
    /// Steps between renormalizations.
    pub renorm_every: usize,
    /// Allowed spread of the running estimate over the last 20% of the horizon.
    pub tol: f64,
    pub seed: u64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 200.0,
            transient: 0.5,
            renorm_every: 100,
            tol: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleEstimate {
    pub value: f64,
    /// Running estimate settled to within `tol` over the last 20% of the horizon.
    pub converged: bool,
    /// Spread of the running estimate over that window.
    pub drift: f64,
}

/// MLE of the perturbation block of `vsys`, with the synchronous part
/// started from `sync_init` and the perturbation from a seeded random unit
/// vector.
pub fn mle(vsys: &VariationalSystem<'_>, sync_init: &[f64], opts: &MleOptions) -> Result<MleEstimate> {
    let sd = vsys.sync_dim();
    if sync_init.len() != sd {
        return Err(Error::Dimension(format!(
            "synchronous state has {} entries, expected {sd}",
            sync_init.len()
        )));
    }
    let total = vsys.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x0 = sync_init.to_vec();
    let mut eta: Vec<f64> = (sd..total).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = eta.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    eta.iter_mut().for_each(|v| *v /= norm);
    x0.extend(eta);
    renormalized_growth(vsys, &x0, sd..total, opts)
}

/// Benettin-style growth rate of the components `range` of any delay system
/// whose dynamics is linear in them.
pub fn renormalized_growth<S: DelaySystem>(
    sys: S,
    x0: &[f64],
    range: std::ops::Range<usize>,
    opts: &MleOptions,
) -> Result<MleEstimate> {
    if range.is_empty() {
        return Ok(MleEstimate {
            value: f64::NEG_INFINITY,
            converged: true,
            drift: 0.0,
        });
    }
    let mut it = Integrator::new(sys, x0, opts.dt)?;
    let every = opts.renorm_every.max(1) as i64;
    let start = opts.transient * opts.horizon;
    let tail = 0.8 * opts.horizon;
    let mut sum = 0.0;
    let mut t_acc = 0.0;
    let mut running: Vec<(f64, f64)> = Vec::new();
    let base = it.history_norm_sq(range.clone()).sqrt();
    it.scale_components(range.clone(), 1.0 / base);
    let mut last_t = it.time();
    while it.time() < opts.horizon - 0.5 * it.dt() {
        it.step();
        if it.steps() % every != 0 {
            continue;
        }
        let sync_norm = it.state()[..range.start].iter().map(|v| v * v).sum::<f64>().sqrt();
        if sync_norm.is_nan() || sync_norm > BLOWUP_NORM {
            return Err(Error::BlowUp { time: it.time() });
        }
        let g = it.history_norm_sq(range.clone()).sqrt();
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::BlowUp { time: it.time() });
        }
        it.scale_components(range.clone(), 1.0 / g);
        let t = it.time();
        if last_t >= start {
            sum += g.ln();
            t_acc += t - last_t;
            running.push((t, sum / t_acc));
        }
        last_t = t;
    }
    let value = if t_acc > 0.0 { sum / t_acc } else { f64::NAN };
    let window: Vec<f64> = running.iter().filter(|(t, _)| *t >= tail).map(|(_, v)| *v).collect();
    let drift = match (
        window.iter().copied().reduce(f64::max),
        window.iter().copied().reduce(f64::min),
    ) {
        (Some(hi), Some(lo)) => hi - lo,
        _ => f64::INFINITY,
    };
    Ok(MleEstimate {
        value,
        converged: drift <= opts.tol,
        drift,
    })
}
