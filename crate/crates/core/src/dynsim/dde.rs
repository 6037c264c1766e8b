//! Fixed-step RK4 for systems with constant delays.
//!
//! The step is shrunk until every delay is a whole number of steps, so
//! full-step delayed states come straight from the history ring. The RK4
//! half-step stages read the delayed state at the midpoint of a stored
//! step, which is filled in by cubic Hermite interpolation from the stored
//! states and derivatives. The initial history is constant.

use crate::error::{Error, Result};

pub trait DelaySystem {
    fn dim(&self) -> usize;
    /// One entry per delay slot; `lagged[k]` passed to [`rhs`](Self::rhs) is the state at `t - delays()[k]`.
    fn delays(&self) -> Vec<f64>;
    fn rhs(&self, x: &[f64], lagged: &[&[f64]], out: &mut [f64]);
}

impl<T: DelaySystem + ?Sized> DelaySystem for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn delays(&self) -> Vec<f64> {
        (**self).delays()
    }
    fn rhs(&self, x: &[f64], lagged: &[&[f64]], out: &mut [f64]) {
        (**self).rhs(x, lagged, out)
    }
}

/// Largest step `<= requested` that divides every positive delay, and the
/// delays in steps.
pub fn align_step(requested: f64, delays: &[f64]) -> Result<(f64, Vec<usize>)> {
    if !(requested > 0.0 && requested.is_finite()) {
        return Err(Error::Config(format!("step size must be positive, got {requested}")));
    }
    let dmax = delays.iter().copied().fold(0.0, f64::max);
    if dmax == 0.0 {
        return Ok((requested, vec![0; delays.len()]));
    }
    let start = (dmax / requested - 1e-9).ceil().max(1.0) as usize;
    for k in start..start.saturating_mul(64).max(start + 100_000) {
        let dt = dmax / k as f64;
        let steps: Vec<f64> = delays.iter().map(|d| d / dt).collect();
        if steps.iter().all(|s| (s - s.round()).abs() < 1e-6) {
            return Ok((dt, steps.iter().map(|s| s.round() as usize).collect()));
        }
    }
    Err(Error::DelayAlignment {
        requested,
        delays: delays.to_vec(),
    })
}

/// RK4 integrator state: the current point plus enough history for the longest delay.
#[derive(Debug, Clone)]
pub struct Integrator<S: DelaySystem> {
    sys: S,
    dim: usize,
    dt: f64,
    lags: Vec<usize>,
    cap: usize,
    /// Stored states and derivatives; slot `m mod cap` holds step index `m`.
    xs: Vec<f64>,
    fs: Vec<f64>,
    /// Index of the newest stored state.
    n: i64,
    scratch: Scratch,
}

#[derive(Debug, Clone)]
struct Scratch {
    k: [Vec<f64>; 4],
    stage: Vec<f64>,
    mids: Vec<Vec<f64>>,
    ends: Vec<Vec<f64>>,
}

impl<S: DelaySystem> Integrator<S> {
    pub fn new(sys: S, x0: &[f64], requested_dt: f64) -> Result<Self> {
        let dim = sys.dim();
        if x0.len() != dim {
            return Err(Error::Dimension(format!(
                "initial state has {} entries, system needs {dim}",
                x0.len()
            )));
        }
        let (dt, lags) = align_step(requested_dt, &sys.delays())?;
        let cap = lags.iter().copied().max().unwrap_or(0) + 2;
        let mut xs = Vec::with_capacity(cap * dim);
        for _ in 0..cap {
            xs.extend_from_slice(x0);
        }
        let slots = lags.len();
        Ok(Self {
            sys,
            dim,
            dt,
            lags,
            cap,
            xs,
            fs: vec![0.0; cap * dim],
            n: 0,
            scratch: Scratch {
                k: std::array::from_fn(|_| vec![0.0; dim]),
                stage: vec![0.0; dim],
                mids: vec![vec![0.0; dim]; slots],
                ends: vec![vec![0.0; dim]; slots],
            },
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.n as f64 * self.dt
    }

    pub fn steps(&self) -> i64 {
        self.n
    }

    pub fn system(&self) -> &S {
        &self.sys
    }

    pub fn lag_steps(&self) -> &[usize] {
        &self.lags
    }

    /// Longest delay in steps.
    pub fn max_lag(&self) -> usize {
        self.cap - 2
    }

    fn slot(&self, m: i64) -> usize {
        m.rem_euclid(self.cap as i64) as usize * self.dim
    }

    pub fn state(&self) -> &[f64] {
        self.stored(self.n)
    }

    /// Stored state at step `m`, for `n - cap < m <= n`.
    pub fn stored(&self, m: i64) -> &[f64] {
        debug_assert!(m <= self.n && m > self.n - self.cap as i64);
        let s = self.slot(m);
        &self.xs[s..s + self.dim]
    }

    /// Applies `f(step_index, state)` to the current state and the stored
    /// history covering the longest delay. Stored derivatives are left alone.
    pub fn edit_history(&mut self, mut f: impl FnMut(i64, &mut [f64])) {
        let depth = self.max_lag() as i64 + 1;
        for m in self.n - depth..=self.n {
            let s = self.slot(m);
            f(m, &mut self.xs[s..s + self.dim]);
        }
    }

    /// Multiplies the given components of all stored states and derivatives by `factor`.
    pub fn scale_components(&mut self, range: std::ops::Range<usize>, factor: f64) {
        for slot in 0..self.cap {
            let b = slot * self.dim;
            for v in &mut self.xs[b + range.start..b + range.end] {
                *v *= factor;
            }
            for v in &mut self.fs[b + range.start..b + range.end] {
                *v *= factor;
            }
        }
    }

    /// Sum of squares of `range` over the current state plus `dt` times the
    /// sum over the delay history.
    pub fn history_norm_sq(&self, range: std::ops::Range<usize>) -> f64 {
        let sq = |m: i64| self.stored(m)[range.clone()].iter().map(|v| v * v).sum::<f64>();
        let depth = self.max_lag() as i64;
        let hist: f64 = (self.n - depth..self.n).map(sq).sum();
        sq(self.n) + self.dt * hist
    }

    /// Advances one step.
    #[allow(clippy::needless_range_loop)]
    pub fn step(&mut self) {
        let dim = self.dim;
        let dt = self.dt;
        let n = self.n;
        let slots = self.lags.len();
        let mut sc = std::mem::replace(
            &mut self.scratch,
            Scratch {
                k: Default::default(),
                stage: Vec::new(),
                mids: Vec::new(),
                ends: Vec::new(),
            },
        );
        let x: Vec<f64> = self.stored(n).to_vec();

        // k1 at t_n
        {
            let lagged: Vec<&[f64]> = self.lags.iter().map(|&l| self.stored(n - l as i64)).collect();
            self.sys.rhs(&x, &lagged, &mut sc.k[0]);
        }
        let sn = self.slot(n);
        self.fs[sn..sn + dim].copy_from_slice(&sc.k[0]);

        // delayed values at t_n + dt/2 and t_n + dt
        for k in 0..slots {
            let l = self.lags[k] as i64;
            if l == 0 {
                continue;
            }
            let m = n - l;
            let (a, b) = (self.slot(m), self.slot(m + 1));
            let hermite = m >= 0;
            for c in 0..dim {
                let (xa, xb) = (self.xs[a + c], self.xs[b + c]);
                sc.mids[k][c] = if hermite {
                    0.5 * (xa + xb) + dt / 8.0 * (self.fs[a + c] - self.fs[b + c])
                } else {
                    0.5 * (xa + xb)
                };
                sc.ends[k][c] = xb;
            }
        }

        for (stage, coeff) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
            for c in 0..dim {
                sc.stage[c] = x[c] + coeff * dt * sc.k[stage - 1][c];
            }
            let lagged: Vec<&[f64]> = (0..slots)
                .map(|k| {
                    if self.lags[k] == 0 {
                        sc.stage.as_slice()
                    } else if stage == 3 {
                        sc.ends[k].as_slice()
                    } else {
                        sc.mids[k].as_slice()
                    }
                })
                .collect();
            let mut out = std::mem::take(&mut sc.k[stage]);
            self.sys.rhs(&sc.stage, &lagged, &mut out);
            sc.k[stage] = out;
        }

        let next = self.slot(n + 1);
        for c in 0..dim {
            self.xs[next + c] = x[c] + dt / 6.0 * (sc.k[0][c] + 2.0 * sc.k[1][c] + 2.0 * sc.k[2][c] + sc.k[3][c]);
            self.fs[next + c] = 0.0;
        }
        self.n += 1;
        self.scratch = sc;
    }

    /// Steps until `time() >= t_end` (within half a step).
    pub fn advance_to(&mut self, t_end: f64) {
        while self.time() < t_end - 0.5 * self.dt {
            self.step();
        }
    }
}
