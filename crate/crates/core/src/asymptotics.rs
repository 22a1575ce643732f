//! Sandwich covariance of the regularized estimator and predicted rates.
//!
//! At the true parameter the conditional mean of `(X_t^2 + eps)/(s_t^2 + eps)`
//! is one, which collapses the score outer product and the Hessian to
//!
//! `G = (E eps^4 - 1) E[4 s^6 / (s^2 + eps)^4  ds ds^T]`,
//! `H = E[4 s^2 / (s^2 + eps)^2  ds ds^T]`.
//!
//! Both expectations are ergodic averages over one long simulated path.

use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::coeff::{CoeffSpec, NoiseMoments, Theta};
use crate::csvfmt;
use crate::error::{Error, Result};
use crate::kernel::{dot, CompensatedSum, Reversed};
use crate::simulate::{simulate, SimConfig};

/// Budget of the long-path Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McBudget {
    pub path_length: usize,
    /// Must be at least the truncation so every averaged `s_t` sees `J` lags.
    pub burn_in: usize,
    pub seed: u64,
    /// Number of contiguous blocks used for standard errors.
    pub blocks: usize,
}

impl Default for McBudget {
    fn default() -> Self {
        Self {
            path_length: 500_000,
            burn_in: 10_000,
            seed: 1,
            blocks: 50,
        }
    }
}

impl McBudget {
    fn validate(&self, spec: &CoeffSpec) -> Result<()> {
        if self.burn_in < spec.truncation {
            return Err(Error::History(format!(
                "burn-in {} shorter than truncation {}",
                self.burn_in, spec.truncation
            )));
        }
        if self.blocks < 2 || self.path_length < 2 * self.blocks {
            return Err(Error::Validation(format!(
                "need >= 2 blocks of >= 2 points, got {} blocks over {}",
                self.blocks, self.path_length
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichResult {
    pub g: Matrix3<f64>,
    pub h: Matrix3<f64>,
    pub cov: Matrix3<f64>,
    /// `sqrt(diag(cov))`, ordered `(d, c, a)`.
    pub sd: Vector3<f64>,
    /// `sqrt(G_dd) / H_dd`: the standard deviation when `d` alone is estimated.
    pub sd_d_only: f64,
    pub g_se: Matrix3<f64>,
    pub h_se: Matrix3<f64>,
    pub condition_h: f64,
    pub samples: usize,
}

fn eigenvalues(m: &Matrix3<f64>) -> [f64; 3] {
    let e = m.symmetric_eigenvalues();
    let mut v = [e[0], e[1], e[2]];
    v.sort_by(f64::total_cmp);
    v
}

fn require_pd(m: &Matrix3<f64>, which: &'static str) -> Result<nalgebra::Cholesky<f64, nalgebra::U3>> {
    m.cholesky().ok_or(Error::NearSingular {
        which,
        eigenvalues: eigenvalues(m),
    })
}

/// `sigma_t` and its gradient over `path_length` points of a stationary path.
struct PathDerivs {
    sigma: Vec<f64>,
    dsig: Vec<[f64; 3]>,
}

fn path_derivatives(spec: &CoeffSpec, theta: &Theta, mc: &McBudget) -> Result<PathDerivs> {
    let cfg = SimConfig::new(mc.path_length, mc.seed).with_burn_in(mc.burn_in);
    let sample = simulate(spec, theta, &cfg)?;
    let j = spec.truncation;
    let w0 = spec.unit_weights(theta.d, j, 0)?;
    let w1 = spec.unit_weights(theta.d, j, 1)?;
    let rev = Reversed::new(&sample.x);
    let start = sample.first_retained();
    let dsig = (start..sample.x.len())
        .into_par_iter()
        .map(|p| {
            let lags = rev.lags(p, j);
            [theta.c * dot(&w1, lags), dot(&w0, lags), 1.0]
        })
        .collect();
    Ok(PathDerivs {
        sigma: sample.sigmas().to_vec(),
        dsig,
    })
}

/// Block averages of `w(s) ds ds^T` (upper triangle, row-major) for `blocks` blocks.
fn block_means<F>(p: &PathDerivs, blocks: usize, weight: F) -> Vec<[f64; 6]>
where
    F: Fn(f64) -> f64 + Sync,
{
    let n = p.sigma.len();
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let (lo, hi) = (b * n / blocks, (b + 1) * n / blocks);
            let mut acc = [CompensatedSum::default(); 6];
            for t in lo..hi {
                let w = weight(p.sigma[t]);
                let g = &p.dsig[t];
                let mut k = 0;
                for r in 0..3 {
                    for q in r..3 {
                        acc[k].add(w * g[r] * g[q]);
                        k += 1;
                    }
                }
            }
            let len = (hi - lo) as f64;
            acc.map(|s| s.value() / len)
        })
        .collect()
}

/// Mean and standard error across blocks, expanded to symmetric matrices.
fn assemble(blocks: &[[f64; 6]]) -> (Matrix3<f64>, Matrix3<f64>) {
    let b = blocks.len() as f64;
    let mut mean = Matrix3::zeros();
    let mut se = Matrix3::zeros();
    let mut k = 0;
    for r in 0..3 {
        for q in r..3 {
            let m = blocks.iter().map(|v| v[k]).sum::<f64>() / b;
            let var = blocks.iter().map(|v| (v[k] - m).powi(2)).sum::<f64>() / (b - 1.0);
            mean[(r, q)] = m;
            mean[(q, r)] = m;
            se[(r, q)] = (var / b).sqrt();
            se[(q, r)] = se[(r, q)];
            k += 1;
        }
    }
    (mean, se)
}

/// Monte Carlo estimate of `G`, `H` and `H^{-1} G H^{-1}` at `theta0`.
pub fn sandwich(
    spec: &CoeffSpec,
    theta0: &Theta,
    epsilon: f64,
    nm: &NoiseMoments,
    mc: &McBudget,
) -> Result<SandwichResult> {
    if !(epsilon > 0.0) {
        return Err(Error::Validation(format!("epsilon = {epsilon} must be > 0")));
    }
    let mu4 = nm.mu(4)?;
    mc.validate(spec)?;
    let p = path_derivatives(spec, theta0, mc)?;
    let (g_raw, g_se_raw) = assemble(&block_means(&p, mc.blocks, |s| {
        let s2 = s * s;
        4.0 * s2 * s2 * s2 / (s2 + epsilon).powi(4)
    }));
    let (h, h_se) = assemble(&block_means(&p, mc.blocks, |s| {
        let s2 = s * s;
        4.0 * s2 / (s2 + epsilon).powi(2)
    }));
    let g = g_raw * (mu4 - 1.0);
    let g_se = g_se_raw * (mu4 - 1.0);
    require_pd(&g, "G")?;
    let h_inv = require_pd(&h, "H")?.inverse();
    let cov = h_inv * g * h_inv;
    let cov = (cov + cov.transpose()) * 0.5;
    let ev = eigenvalues(&h);
    Ok(SandwichResult {
        g,
        h,
        cov,
        sd: cov.diagonal().map(f64::sqrt),
        sd_d_only: g[(0, 0)].sqrt() / h[(0, 0)],
        g_se,
        h_se,
        condition_h: ev[2] / ev[0],
        samples: p.sigma.len(),
    })
}

pub fn write_sandwich_csv<W: Write>(r: &SandwichResult, mut w: W) -> Result<()> {
    writeln!(w, "entry_i,entry_j,G,H,cov")?;
    for i in 0..3 {
        for j in 0..3 {
            writeln!(
                w,
                "{},{},{},{},{}",
                i + 1,
                j + 1,
                csvfmt::num(r.g[(i, j)]),
                csvfmt::num(r.h[(i, j)]),
                csvfmt::num(r.cov[(i, j)])
            )?;
        }
    }
    writeln!(w, "sd_d,sd_c,sd_a")?;
    writeln!(w, "{},{},{}", csvfmt::num(r.sd[0]), csvfmt::num(r.sd[1]), csvfmt::num(r.sd[2]))?;
    Ok(())
}

/// Outcome of the unregularized limit `H_0 = 4 E[ds ds^T / s^2]`.
#[derive(Debug, Clone, PartialEq)]
pub enum H0Limit {
    Finite {
        h0: Matrix3<f64>,
        /// `(E eps^4 - 1) H_0^{-1}` when `H_0` is invertible.
        cov: Option<Matrix3<f64>>,
    },
    /// The running mean failed the stability check; `E s^{-2}` is likely infinite.
    Divergent { max_share: f64, drift: f64 },
}

/// Largest share a single term may hold of the running sum.
const MAX_SHARE: f64 = 0.01;
/// Largest relative change of the running mean from the half-way point to the end.
const MAX_DRIFT: f64 = 0.05;

/// Evaluates `H_0` from given volatilities and gradients, with the divergence
/// monitor applied to the weights `1 / s^2`.
pub fn limit_h0_from_parts(sigma: &[f64], dsig: &[[f64; 3]], mu4: f64) -> Result<H0Limit> {
    if sigma.len() != dsig.len() || sigma.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "need matching series of length >= 4, got {} and {}",
            sigma.len(),
            dsig.len()
        )));
    }
    let n = sigma.len();
    let inv: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    if inv.iter().any(|v| !v.is_finite()) {
        return Ok(H0Limit::Divergent {
            max_share: 1.0,
            drift: f64::INFINITY,
        });
    }
    let mut half = CompensatedSum::default();
    inv[..n / 2].iter().for_each(|&v| half.add(v));
    let mut total = half;
    inv[n / 2..].iter().for_each(|&v| total.add(v));
    let max = inv.iter().copied().fold(0.0, f64::max);
    let max_share = max / total.value();
    let mean_half = half.value() / (n / 2) as f64;
    let mean_all = total.value() / n as f64;
    let drift = (mean_all - mean_half).abs() / mean_all;
    if max_share > MAX_SHARE || drift > MAX_DRIFT {
        return Ok(H0Limit::Divergent { max_share, drift });
    }
    let mut acc = [CompensatedSum::default(); 6];
    for (w, g) in inv.iter().zip(dsig) {
        let mut k = 0;
        for r in 0..3 {
            for q in r..3 {
                acc[k].add(4.0 * w * g[r] * g[q]);
                k += 1;
            }
        }
    }
    let (h0, _) = assemble(&[acc.map(|s| s.value() / n as f64), acc.map(|s| s.value() / n as f64)]);
    let cov = h0.cholesky().map(|c| c.inverse() * (mu4 - 1.0));
    Ok(H0Limit::Finite { h0, cov })
}

/// Simulates a path at `theta0` and evaluates the unregularized limit on it.
pub fn limit_h0(spec: &CoeffSpec, theta0: &Theta, nm: &NoiseMoments, mc: &McBudget) -> Result<H0Limit> {
    mc.validate(spec)?;
    let p = path_derivatives(spec, theta0, mc)?;
    limit_h0_from_parts(&p.sigma, &p.dsig, nm.mu(4)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `beta < 1 - 2d`: root-`m(n)` normal limit.
    Clt,
    /// `beta = 1 - 2d`: the approximation error is of the same order.
    Border,
    /// `beta > 1 - 2d`: the score gap does not vanish; no rate is predicted.
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePrediction {
    /// Exponent of `E|d_n|`: `beta/2 + d - 1/2`.
    pub score_gap_order: f64,
    /// `n^{score_gap_order}`.
    pub score_gap_scale: f64,
    pub regime: Regime,
    /// Exponent of `E|theta_hat - theta_0|` in `n`.
    pub rate_exponent: Option<f64>,
}

const BORDER_TOL: f64 = 1e-12;

pub fn predicted_rate(n: usize, beta: f64, d: f64) -> Result<RatePrediction> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Validation(format!("beta = {beta} must lie in (0, 1]")));
    }
    if !(0.0..0.5).contains(&d) {
        return Err(Error::Validation(format!("d = {d} must lie in [0, 1/2)")));
    }
    let order = beta / 2.0 + d - 0.5;
    let border = 1.0 - 2.0 * d;
    let (regime, rate) = if (beta - border).abs() <= BORDER_TOL {
        (Regime::Border, Some(-(0.5 - d)))
    } else if beta < border {
        (Regime::Clt, Some(-beta / 2.0))
    } else {
        (Regime::Open, None)
    };
    Ok(RatePrediction {
        score_gap_order: order,
        score_gap_scale: (n as f64).powf(order),
        regime,
        rate_exponent: rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::gaussian_moments;
    use rand::Rng;

    fn small() -> McBudget {
        McBudget {
            path_length: 20_000,
            burn_in: 400,
            seed: 3,
            blocks: 20,
        }
    }

    #[test]
    fn rates() {
        let p = predicted_rate(1000, 0.6, 0.2).unwrap();
        assert_eq!(p.regime, Regime::Border);
        assert!((p.rate_exponent.unwrap() + 0.3).abs() < 1e-15);
        let p = predicted_rate(1000, 1.0, 0.0).unwrap();
        assert_eq!(p.score_gap_order, 0.0);
        assert_eq!(p.rate_exponent, Some(-0.5));
        let p = predicted_rate(10_000, 0.599, 0.2).unwrap();
        assert!((p.score_gap_order + 0.0005).abs() < 1e-12);
        assert_eq!(p.regime, Regime::Clt);
        assert!((p.rate_exponent.unwrap() + 0.2995).abs() < 1e-15);
        assert_eq!(predicted_rate(10, 0.9, 0.2).unwrap().regime, Regime::Open);
        assert!(predicted_rate(10, 0.0, 0.2).is_err());
        assert!(predicted_rate(10, 0.5, 0.5).is_err());
    }

    #[test]
    fn sandwich_small_budget_is_positive_definite() {
        let spec = CoeffSpec::power_law(400);
        let r = sandwich(&spec, &Theta::new(0.2, 0.2, 1.0), 0.01, &gaussian_moments(4), &small()).unwrap();
        assert!(r.sd.iter().all(|&v| v > 0.0));
        assert!((r.cov - r.cov.transpose()).abs().max() < 1e-12);
        assert!(r.sd_d_only > 0.0 && r.sd_d_only <= r.sd[0] * (1.0 + 1e-9));
        assert_eq!(r.samples, 20_000);
        let mut buf = Vec::new();
        write_sandwich_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 12);
        assert!(text.contains("\nsd_d,sd_c,sd_a\n"));
    }

    #[test]
    fn degenerate_scale_is_flagged() {
        let spec = CoeffSpec::power_law(400);
        let err = sandwich(&spec, &Theta::new(0.2, 0.0, 1.0), 0.01, &gaussian_moments(4), &small());
        assert!(matches!(err, Err(Error::NearSingular { .. })), "{err:?}");
    }

    #[test]
    fn budget_validation() {
        let spec = CoeffSpec::power_law(400);
        let mc = McBudget { burn_in: 10, ..small() };
        assert!(matches!(
            sandwich(&spec, &Theta::new(0.2, 0.2, 1.0), 0.01, &gaussian_moments(4), &mc),
            Err(Error::History(_))
        ));
        assert!(sandwich(&spec, &Theta::new(0.2, 0.2, 1.0), 0.0, &gaussian_moments(4), &small()).is_err());
    }

    #[test]
    fn h0_at_zero_scale() {
        let spec = CoeffSpec::power_law(400);
        let a = 1.7;
        match limit_h0(&spec, &Theta::new(0.1, 0.0, a), &gaussian_moments(4), &small()).unwrap() {
            H0Limit::Finite { h0, cov } => {
                assert!((h0[(2, 2)] - 4.0 / (a * a)).abs() < 1e-12);
                assert_eq!(h0[(0, 0)], 0.0);
                assert!(cov.is_none());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn h0_gaussian_scaling() {
        let sigma = vec![2.0; 100];
        let dsig: Vec<[f64; 3]> = (0..100).map(|i| [(i % 3) as f64, (i % 5) as f64 - 2.0, 1.0]).collect();
        let (h2, h4) = match (
            limit_h0_from_parts(&sigma, &dsig, 3.0).unwrap(),
            limit_h0_from_parts(&sigma, &dsig, 5.0).unwrap(),
        ) {
            (H0Limit::Finite { cov: Some(a), .. }, H0Limit::Finite { cov: Some(b), .. }) => (a, b),
            other => panic!("{other:?}"),
        };
        assert!((h4 - h2 * 2.0).abs().max() < 1e-12);
    }

    #[test]
    fn divergence_monitor_flags_atoms_near_zero() {
        let mut rng = crate::rng::rng_from_seed(11);
        let n = 100_000;
        let dsig = vec![[0.0, 0.0, 1.0]; n];
        // E s^{-2} = int_0^1 u^{-2} du is infinite
        let heavy: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        assert!(matches!(limit_h0_from_parts(&heavy, &dsig, 3.0).unwrap(), H0Limit::Divergent { .. }));
        let tame: Vec<f64> = (0..n).map(|_| 1.0 + rng.gen::<f64>()).collect();
        assert!(matches!(limit_h0_from_parts(&tame, &dsig, 3.0).unwrap(), H0Limit::Finite { .. }));
    }
}
