//! Sample paths of the LARCH recursion and the Volterra-series oracle.
//!
//! Paths start from an empty past (`sigma_1 = a`) and run for
//! `burn_in + n` steps; the recursion uses the first `truncation` lags of the
//! coefficient family. Only the last `n` values form the analysis window.

use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::coeff::{norm_p, CoeffSpec, Theta};
use crate::csvfmt;
use crate::error::{Error, Result};
use crate::kernel::{dot, Reversed};
use crate::rng::{rng_from_seed, StreamRng};

/// Innovation law.
#[derive(Debug, Clone, PartialEq)]
pub enum Noise {
    Gaussian,
    /// Draws uniformly from a table standardized to mean 0 and variance 1.
    Table(Arc<Vec<f64>>),
}

impl Noise {
    /// Builds a resampling law from raw values, rescaling them to zero mean and unit variance.
    pub fn from_table(values: &[f64]) -> Result<Self> {
        if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(
                "innovation table needs at least two finite values".into(),
            ));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if var <= 0.0 {
            return Err(Error::Validation("innovation table has zero variance".into()));
        }
        let sd = var.sqrt();
        Ok(Noise::Table(Arc::new(
            values.iter().map(|v| (v - mean) / sd).collect(),
        )))
    }

    fn draw(&self, rng: &mut StreamRng) -> f64 {
        match self {
            Noise::Gaussian => rng.sample(StandardNormal),
            Noise::Table(t) => t[rng.gen_range(0..t.len())],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub noise: Noise,
}

impl SimConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            burn_in: 10_000,
            seed,
            noise: Noise::Gaussian,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Validation("sample length n must be >= 1".into()));
        }
        Ok(())
    }
}

/// A generated path including its pre-sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// `burn_in + n` observations, pre-sample first.
    pub x: Vec<f64>,
    pub sigma: Vec<f64>,
    pub eps: Vec<f64>,
    pub spec: CoeffSpec,
    pub theta: Theta,
    pub config: SimConfig,
}

impl Sample {
    /// Index of the first retained observation in `x`.
    pub fn first_retained(&self) -> usize {
        self.config.burn_in
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    /// The analysis window `x_1..x_n`.
    pub fn observations(&self) -> &[f64] {
        &self.x[self.first_retained()..]
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigma[self.first_retained()..]
    }

    pub fn innovations(&self) -> &[f64] {
        &self.eps[self.first_retained()..]
    }

    /// CSV with header `t,x,sigma,eps`, one row per retained observation.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x,sigma,eps")?;
        let (x, s, e) = (self.observations(), self.sigmas(), self.innovations());
        for t in 0..self.n() {
            writeln!(
                w,
                "{},{},{},{}",
                t + 1,
                csvfmt::num(x[t]),
                csvfmt::num(s[t]),
                csvfmt::num(e[t])
            )?;
        }
        Ok(())
    }
}

/// Checks that `theta` defines a stationary process: `a != 0`, `0 <= d < 1/2`,
/// `c >= 0` and `sum_j b_j^2 < 1`.
fn validate_process(spec: &CoeffSpec, theta: &Theta) -> Result<()> {
    if !theta.is_finite() || theta.a == 0.0 || theta.c < 0.0 || !(0.0..0.5).contains(&theta.d) {
        return Err(Error::Validation(format!(
            "{theta} does not define a LARCH process (need a != 0, c >= 0, 0 <= d < 1/2)"
        )));
    }
    let b2 = norm_p(spec, theta, 2.0)?;
    if b2 * b2 >= 1.0 {
        return Err(Error::Validation(format!(
            "sum of b_j^2 = {} >= 1 at {theta}",
            b2 * b2
        )));
    }
    Ok(())
}

/// Runs the recursion `sigma_t = a + sum_{j <= min(J, t-1)} b_j x_{t-j}`, `x_t = eps_t sigma_t`.
pub fn simulate(spec: &CoeffSpec, theta: &Theta, cfg: &SimConfig) -> Result<Sample> {
    cfg.validate()?;
    validate_process(spec, theta)?;
    let total = cfg.burn_in + cfg.n;
    let mut rng = rng_from_seed(cfg.seed);
    let eps: Vec<f64> = (0..total).map(|_| cfg.noise.draw(&mut rng)).collect();
    let (x, sigma) = run_recursion(spec, theta, &eps)?;
    Ok(Sample {
        x,
        sigma,
        eps,
        spec: *spec,
        theta: *theta,
        config: cfg.clone(),
    })
}

/// Recursion driven by a given innovation sequence.
pub fn run_recursion(spec: &CoeffSpec, theta: &Theta, eps: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let total = eps.len();
    let lags = spec.truncation.min(total.saturating_sub(1));
    let b: Vec<f64> = spec
        .unit_weights(theta.d, lags, 0)?
        .into_iter()
        .map(|w| theta.c * w)
        .collect();
    let mut past = Reversed::zeros(total);
    let mut x = Vec::with_capacity(total);
    let mut sigma = Vec::with_capacity(total);
    for (t, e) in eps.iter().enumerate() {
        let k = lags.min(t);
        let s = theta.a + dot(&b[..k], past.lags(t, k));
        let xt = e * s;
        past.set(t, xt);
        x.push(xt);
        sigma.push(s);
    }
    Ok((x, sigma))
}

/// Default cap on the work of the Volterra evaluation.
pub const VOLTERRA_BUDGET: u64 = 10_000_000;

/// `sigma_t` from the Volterra expansion
/// `a + a sum_k sum_{j_1..j_k} b_{j_1}..b_{j_k} eps_{t-j_1} .. eps_{t-j_1-..-j_k}`
/// restricted to chains of depth at most `k_max` that stay inside
/// `eps_1..eps_{t-1}` (`t` is 1-based).
///
/// Chains are accumulated depth by depth: `w_k(u)` is the total weight of all
/// depth-`k` chains from `t` that end at time `u`. `budget` caps the number of
/// link evaluations.
pub fn volterra_sigma(
    spec: &CoeffSpec,
    theta: &Theta,
    eps: &[f64],
    t: usize,
    k_max: usize,
    budget: u64,
) -> Result<f64> {
    if t == 0 || t > eps.len() + 1 {
        return Err(Error::Index {
            index: t,
            max: eps.len() + 1,
        });
    }
    if k_max == 0 {
        return Err(Error::Domain("chain depth k_max must be >= 1".into()));
    }
    let past = t - 1;
    let depth = k_max.min(past);
    let j_max = spec.truncation.min(past);
    let needed = depth as u64 * (past as u64) * (j_max as u64);
    if needed > budget {
        return Err(Error::Budget { needed, cap: budget });
    }
    let b: Vec<f64> = spec
        .unit_weights(theta.d, j_max, 0)?
        .into_iter()
        .map(|w| theta.c * w)
        .collect();

    // w[u] for u = 1..t-1 stored at index u - 1.
    let mut w: Vec<f64> = (1..t)
        .map(|u| {
            let j = t - u;
            if j <= j_max {
                b[j - 1] * eps[u - 1]
            } else {
                0.0
            }
        })
        .collect();
    let mut total: f64 = w.iter().sum();
    for _ in 1..depth {
        let mut next = vec![0.0; past];
        for (ui, &wu) in w.iter().enumerate() {
            if wu == 0.0 {
                continue;
            }
            let u = ui + 1;
            for j in 1..=j_max.min(u - 1) {
                next[u - j - 1] += wu * b[j - 1];
            }
        }
        for (v, e) in next.iter_mut().zip(eps) {
            *v *= e;
        }
        total += next.iter().sum::<f64>();
        w = next;
    }
    Ok(theta.a * (1.0 + total))
}
