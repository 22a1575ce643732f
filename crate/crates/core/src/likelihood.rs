//! Epsilon-regularized pseudo-likelihood.
//!
//! Every variant averages
//! `l_t(theta) = (X_t^2 + eps) / (s_t^2 + eps) + ln(s_t^2 + eps)`
//! over its own time range, where `s_t` is one of two volatility
//! reconstructions:
//!
//! * `Full`  uses the pre-sample history, `a + sum_{j <= J} b_j X_{t-j}`, for `t = 1..n`;
//! * `Bar`   uses the observed past only, `a + sum_{j <= min(J, t-1)} b_j X_{t-j}`, for `t = 1..n`;
//! * `Trunc` is `Bar` restricted to the last `floor(n^beta)` time points.
//!
//! Because `b_j = c phi_j(d)`, the reconstruction and its derivatives reduce
//! to three lagged sums `S_k = sum_j phi_j^{(k)}(d) X_{t-j}`:
//! `s = a + c S_0`, `ds = (c S_1, S_0, 1)`, `d2s/dd2 = c S_2`, `d2s/dd dc = S_1`.

use std::io::Write;

use crate::coeff::{CoeffSpec, Theta};
use crate::csvfmt;
use crate::error::{Error, Result};
use crate::kernel::{dot, CompensatedSum, Reversed};
use crate::simulate::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Full,
    Bar,
    Trunc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub variant: Variant,
    pub epsilon: f64,
    /// Window exponent, used by `Trunc` only.
    pub beta: f64,
}

impl LossSpec {
    pub fn new(variant: Variant, epsilon: f64, beta: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Validation(format!("epsilon = {epsilon} must be > 0")));
        }
        if variant == Variant::Trunc && !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::Validation(format!("beta = {beta} must lie in (0, 1]")));
        }
        Ok(Self {
            variant,
            epsilon,
            beta,
        })
    }

    pub fn full(epsilon: f64) -> Result<Self> {
        Self::new(Variant::Full, epsilon, 1.0)
    }

    pub fn bar(epsilon: f64) -> Result<Self> {
        Self::new(Variant::Bar, epsilon, 1.0)
    }

    pub fn trunc(epsilon: f64, beta: f64) -> Result<Self> {
        Self::new(Variant::Trunc, epsilon, beta)
    }

    /// Same as `new` but also admits `epsilon = 0`; used for plotting the
    /// unregularized criterion, never for estimation.
    pub fn unregularized(variant: Variant, epsilon: f64, beta: f64) -> Result<Self> {
        if epsilon == 0.0 {
            let mut s = Self::new(variant, 1.0, beta)?;
            s.epsilon = 0.0;
            return Ok(s);
        }
        Self::new(variant, epsilon, beta)
    }
}

/// Observations with an optional pre-sample: `values[start..]` is the sample
/// `X_1..X_n`, anything before it is history only the `Full` variant may use.
#[derive(Debug, Clone, Copy)]
pub struct Series<'a> {
    pub values: &'a [f64],
    pub start: usize,
}

impl<'a> Series<'a> {
    pub fn observed(x: &'a [f64]) -> Self {
        Self { values: x, start: 0 }
    }

    pub fn with_history(values: &'a [f64], start: usize) -> Self {
        Self { values, start }
    }

    pub fn n(&self) -> usize {
        self.values.len().saturating_sub(self.start)
    }

    pub fn observations(&self) -> &'a [f64] {
        &self.values[self.start..]
    }
}

impl<'a> From<&'a Sample> for Series<'a> {
    fn from(s: &'a Sample) -> Self {
        Series::with_history(&s.x, s.first_retained())
    }
}

/// `m(n) = floor(n^beta) - 1`; the truncated loss averages the
/// `m(n) + 1` terms `t = n - m(n), ..., n`.
pub fn m_of_n(n: usize, beta: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::DegenerateWindow(format!("n = {n} < 2")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Validation(format!("beta = {beta} must lie in (0, 1]")));
    }
    let count = (n as f64).powf(beta).floor() as usize;
    if count < 2 {
        return Err(Error::DegenerateWindow(format!(
            "floor({n}^{beta}) - 1 = {} < 1",
            count as isize - 1
        )));
    }
    Ok(count.min(n) - 1)
}

/// `a + sum_{j=1}^{min(t-1, J)} b_j x_{t-j}` from the observed past only (`t` is 1-based).
pub fn sigma_bar(spec: &CoeffSpec, theta: &Theta, x: &[f64], t: usize) -> Result<f64> {
    if t == 0 || t > x.len() + 1 {
        return Err(Error::Index {
            index: t,
            max: x.len() + 1,
        });
    }
    let lags = (t - 1).min(spec.truncation);
    let w = spec.unit_weights(theta.d, lags, 0)?;
    let rev: Vec<f64> = x[t - 1 - lags..t - 1].iter().rev().copied().collect();
    Ok(theta.a + theta.c * dot(&w, &rev))
}

/// `a + sum_{j=1}^{J} b_j x_{t-j}` reaching into the pre-sample (`t` is 1-based
/// within the sample).
pub fn sigma_full(spec: &CoeffSpec, theta: &Theta, data: Series<'_>, t: usize) -> Result<f64> {
    if t == 0 || t > data.n() + 1 {
        return Err(Error::Index {
            index: t,
            max: data.n() + 1,
        });
    }
    let abs = data.start + t - 1;
    let lags = spec.truncation;
    if abs < lags {
        return Err(Error::History(format!(
            "t = {t} needs {lags} lags but only {abs} earlier values exist"
        )));
    }
    let w = spec.unit_weights(theta.d, lags, 0)?;
    let rev: Vec<f64> = data.values[abs - lags..abs].iter().rev().copied().collect();
    Ok(theta.a + theta.c * dot(&w, &rev))
}

/// Value, gradient and Hessian of a loss at one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub value: f64,
    /// Gradient ordered `(d, c, a)`.
    pub score: [f64; 3],
    /// Absent only when the coefficient family has no second `d`-derivative.
    pub hessian: Option<[[f64; 3]; 3]>,
    /// First and last time index averaged, 1-based within the sample.
    pub t_range: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Order {
    Value = 0,
    Score = 1,
    Hessian = 2,
}

/// Lagged sums for one value of `d`, reused while only `c` and `a` change.
#[derive(Debug, Clone)]
struct SumCache {
    d_bits: u64,
    sums: [Vec<f64>; 3],
    order: usize,
}

/// A loss bound to one data set, evaluable at many parameters.
#[derive(Debug, Clone)]
pub struct LossSurface {
    lspec: LossSpec,
    spec: CoeffSpec,
    history: Reversed,
    /// 0-based positions in the full series of the averaged time points.
    positions: Vec<usize>,
    lags: Vec<usize>,
    x2: Vec<f64>,
    t_range: (usize, usize),
    max_lag: usize,
    cache: Option<SumCache>,
}

impl LossSurface {
    pub fn new(lspec: LossSpec, spec: CoeffSpec, data: Series<'_>) -> Result<Self> {
        let n = data.n();
        if n == 0 {
            return Err(Error::InsufficientData("empty sample".into()));
        }
        if let Some(i) = data.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                t: i,
                what: "non-finite observation".into(),
            });
        }
        let first = match lspec.variant {
            Variant::Full | Variant::Bar => 1,
            Variant::Trunc => n - m_of_n(n, lspec.beta)?,
        };
        let j_cap = spec.truncation;
        let mut positions = Vec::with_capacity(n - first + 1);
        let mut lags = Vec::with_capacity(n - first + 1);
        for t in first..=n {
            let abs = data.start + t - 1;
            let l = match lspec.variant {
                Variant::Full => {
                    if abs < j_cap {
                        return Err(Error::History(format!(
                            "full-history loss needs {j_cap} lags before t = {t}, \
                             only {abs} values precede it"
                        )));
                    }
                    j_cap
                }
                Variant::Bar | Variant::Trunc => (t - 1).min(j_cap),
            };
            positions.push(abs);
            lags.push(l);
        }
        let x2 = positions.iter().map(|&p| data.values[p].powi(2)).collect();
        let max_lag = lags.iter().copied().max().unwrap_or(0);
        Ok(Self {
            lspec,
            spec,
            history: Reversed::new(data.values),
            positions,
            lags,
            x2,
            t_range: (first, n),
            max_lag,
            cache: None,
        })
    }

    pub fn loss_spec(&self) -> &LossSpec {
        &self.lspec
    }

    /// Number of averaged terms.
    pub fn window(&self) -> usize {
        self.positions.len()
    }

    pub fn t_range(&self) -> (usize, usize) {
        self.t_range
    }

    fn sums(&mut self, d: f64, order: Order) -> Result<&[Vec<f64>; 3]> {
        let need = order as usize;
        let fresh = match &self.cache {
            Some(c) => c.d_bits != d.to_bits() || c.order < need,
            None => true,
        };
        if fresh {
            let mut sums: [Vec<f64>; 3] = Default::default();
            for (k, slot) in sums.iter_mut().enumerate().take(need + 1) {
                let w = self.spec.unit_weights(d, self.max_lag, k as u32)?;
                *slot = self
                    .positions
                    .iter()
                    .zip(&self.lags)
                    .map(|(&p, &l)| dot(&w[..l], self.history.lags(p, l)))
                    .collect();
            }
            self.cache = Some(SumCache {
                d_bits: d.to_bits(),
                sums,
                order: need,
            });
        }
        Ok(&self.cache.as_ref().expect("cache filled above").sums)
    }

    /// Loss value only.
    pub fn value(&mut self, theta: &Theta) -> Result<f64> {
        let eps = self.lspec.epsilon;
        let t0 = self.t_range.0;
        let x2 = std::mem::take(&mut self.x2);
        let result = (|| {
            let s0 = &self.sums(theta.d, Order::Value)?[0];
            let mut acc = CompensatedSum::default();
            for (i, (&xx, &s)) in x2.iter().zip(s0).enumerate() {
                let sig = theta.a + theta.c * s;
                let den = sig * sig + eps;
                let l = (xx + eps) / den + den.ln();
                if !l.is_finite() {
                    return Err(Error::Numeric {
                        t: t0 + i,
                        what: format!("loss term {l} (sigma = {sig})"),
                    });
                }
                acc.add(l);
            }
            Ok(acc.value() / x2.len() as f64)
        })();
        self.x2 = x2;
        result
    }

    /// Value, score and (when available) the Hessian.
    pub fn eval(&mut self, theta: &Theta) -> Result<LossEval> {
        let order = match self.spec.unit_weights(theta.d, 1, 2) {
            Ok(_) => Order::Hessian,
            Err(Error::Unsupported(_)) => Order::Score,
            Err(e) => return Err(e),
        };
        let eps = self.lspec.epsilon;
        let t0 = self.t_range.0;
        let count = self.x2.len() as f64;
        let x2 = std::mem::take(&mut self.x2);
        let result = (|| {
            let sums = self.sums(theta.d, order)?;
            let (Theta { c, a, .. }, mut value) = (*theta, CompensatedSum::default());
            let mut grad = [CompensatedSum::default(); 3];
            let mut hess = [CompensatedSum::default(); 6];
            for (i, &xx) in x2.iter().enumerate() {
                let (s0, s1) = (sums[0][i], sums[1][i]);
                let sig = a + c * s0;
                let den = sig * sig + eps;
                let ratio = (xx + eps) / den;
                let l = ratio + den.ln();
                if !l.is_finite() {
                    return Err(Error::Numeric {
                        t: t0 + i,
                        what: format!("loss term {l} (sigma = {sig})"),
                    });
                }
                value.add(l);
                let dsig = [c * s1, s0, 1.0];
                let g = (1.0 - ratio) * 2.0 * sig / den;
                for k in 0..3 {
                    grad[k].add(g * dsig[k]);
                }
                if order == Order::Hessian {
                    let s2 = sums[2][i];
                    let outer_w = 4.0 * sig * sig / (den * den) * (2.0 * ratio - 1.0)
                        + 2.0 / den * (1.0 - ratio);
                    let curv_w = 2.0 / den * (1.0 - ratio) * sig;
                    // second derivatives of sigma: only (d,d) and (d,c) are nonzero
                    let d2 = [[c * s2, s1, 0.0], [s1, 0.0, 0.0], [0.0, 0.0, 0.0]];
                    let mut k = 0;
                    for r in 0..3 {
                        for q in r..3 {
                            hess[k].add(outer_w * dsig[r] * dsig[q] + curv_w * d2[r][q]);
                            k += 1;
                        }
                    }
                }
            }
            let score = [
                grad[0].value() / count,
                grad[1].value() / count,
                grad[2].value() / count,
            ];
            let hessian = (order == Order::Hessian).then(|| {
                let mut h = [[0.0; 3]; 3];
                let mut k = 0;
                for r in 0..3 {
                    for q in r..3 {
                        h[r][q] = hess[k].value() / count;
                        h[q][r] = h[r][q];
                        k += 1;
                    }
                }
                h
            });
            Ok(LossEval {
                value: value.value() / count,
                score,
                hessian,
                t_range: self.t_range,
            })
        })();
        self.x2 = x2;
        result
    }
}

/// Evaluates a loss variant with its score and Hessian at `theta`.
pub fn loss(lspec: &LossSpec, spec: &CoeffSpec, theta: &Theta, data: Series<'_>) -> Result<LossEval> {
    if !theta.is_finite() {
        return Err(Error::Validation(format!("non-finite parameter {theta}")));
    }
    LossSurface::new(*lspec, *spec, data)?.eval(theta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandscapeRow {
    pub epsilon: f64,
    pub d: f64,
    pub loss: f64,
}

/// The loss as a function of `d` alone, with `c` and `a` held fixed, for each
/// regularization constant in `epsilons` (zero allowed).
pub fn landscape(
    variant: Variant,
    beta: f64,
    spec: &CoeffSpec,
    c: f64,
    a: f64,
    data: Series<'_>,
    d_grid: &[f64],
    epsilons: &[f64],
) -> Result<Vec<LandscapeRow>> {
    if d_grid.is_empty() || epsilons.is_empty() {
        return Err(Error::InsufficientData("landscape grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(d_grid.len() * epsilons.len());
    for &epsilon in epsilons {
        let lspec = LossSpec::unregularized(variant, epsilon, beta)?;
        let mut surface = LossSurface::new(lspec, *spec, data)?;
        for &d in d_grid {
            let loss = surface.value(&Theta::new(d, c, a))?;
            rows.push(LandscapeRow { epsilon, d, loss });
        }
    }
    Ok(rows)
}

pub fn write_landscape_csv<W: Write>(rows: &[LandscapeRow], mut w: W) -> Result<()> {
    writeln!(w, "epsilon,d,loss")?;
    for r in rows {
        writeln!(w, "{},{},{}", csvfmt::num(r.epsilon), csvfmt::num(r.d), csvfmt::num(r.loss))?;
    }
    Ok(())
}

/// Number of strict interior local minima of a sequence.
pub fn count_local_minima(values: &[f64]) -> usize {
    values
        .windows(3)
        .filter(|w| w[1] < w[0] && w[1] < w[2])
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{simulate, SimConfig};

    fn spec() -> CoeffSpec {
        CoeffSpec::default()
    }

    #[test]
    fn window_counts_match_reported_values() {
        for (n, b, m) in [
            (1000, 0.799, 248),
            (2500, 0.799, 517),
            (5000, 0.799, 901),
            (10_000, 0.799, 1569),
            (1000, 0.599, 61),
            (2500, 0.599, 107),
            (5000, 0.599, 163),
            (10_000, 0.599, 247),
        ] {
            assert_eq!(m_of_n(n, b).unwrap(), m, "n={n} beta={b}");
        }
        assert_eq!(m_of_n(777, 1.0).unwrap(), 776);
        assert!(matches!(m_of_n(1, 0.5), Err(Error::DegenerateWindow(_))));
        assert!(matches!(m_of_n(3, 0.5), Err(Error::DegenerateWindow(_))));
    }

    #[test]
    fn sigma_bar_basics() {
        let x = [0.5, -1.0, 2.0];
        let th = Theta::new(0.2, 0.3, 1.5);
        assert_eq!(sigma_bar(&spec(), &th, &x, 1).unwrap(), 1.5);
        let expect = 1.5 + 0.3 * (2.0 + -2f64.powf(-0.8) + 3f64.powf(-0.8) * 0.5);
        assert!((sigma_bar(&spec(), &th, &x, 4).unwrap() - expect).abs() < 1e-15);
        assert_eq!(sigma_bar(&spec(), &Theta::new(0.2, 0.0, 1.5), &x, 3).unwrap(), 1.5);
        assert!(matches!(sigma_bar(&spec(), &th, &x, 5), Err(Error::Index { .. })));
        assert!(matches!(sigma_bar(&spec(), &th, &x, 0), Err(Error::Index { .. })));
    }

    #[test]
    fn reconstructions_reproduce_the_simulator() {
        let th = Theta::new(0.2, 0.2, 1.0);
        let s0 = simulate(&spec(), &th, &SimConfig::new(300, 8).with_burn_in(0)).unwrap();
        for t in 1..=300 {
            assert!((sigma_bar(&spec(), &th, &s0.x, t).unwrap() - s0.sigma[t - 1]).abs() < 1e-12);
        }
        let sp = CoeffSpec::power_law(150);
        let s = simulate(&sp, &th, &SimConfig::new(100, 8).with_burn_in(200)).unwrap();
        for t in 1..=100 {
            let full = sigma_full(&sp, &th, Series::from(&s), t).unwrap();
            assert!((full - s.sigmas()[t - 1]).abs() < 1e-12);
        }
        assert_eq!(sigma_full(&sp, &Theta::new(0.2, 0.0, 1.0), Series::from(&s), 4).unwrap(), 1.0);
        let short = simulate(&sp, &th, &SimConfig::new(100, 8).with_burn_in(10)).unwrap();
        assert!(matches!(sigma_full(&sp, &th, Series::from(&short), 1), Err(Error::History(_))));
    }

    #[test]
    fn degenerate_parameter_closed_form() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let (a, eps) = (1.3, 0.01);
        let ev = loss(&LossSpec::bar(eps).unwrap(), &spec(), &Theta::new(0.2, 0.0, a), Series::observed(&x)).unwrap();
        let den = a * a + eps;
        let n = x.len() as f64;
        let value = x.iter().map(|v| (v * v + eps) / den).sum::<f64>() / n + den.ln();
        let da = x.iter().map(|v| 2.0 * a * (1.0 - (v * v + eps) / den) / den).sum::<f64>() / n;
        assert!((ev.value - value).abs() < 1e-13);
        assert!((ev.score[2] - da).abs() < 1e-13);
        assert_eq!(ev.score[0], 0.0);
        assert_eq!(ev.t_range, (1, 200));
    }

    #[test]
    fn truncated_window_and_normalization() {
        let x: Vec<f64> = (0..1000).map(|i| ((i * 13 % 7) as f64 - 3.0) / 2.0).collect();
        let th = Theta::new(0.1, 0.2, 1.0);
        let ev = loss(&LossSpec::trunc(0.01, 0.799).unwrap(), &spec(), &th, Series::observed(&x)).unwrap();
        assert_eq!(ev.t_range, (752, 1000));
        let mut sum = 0.0;
        for t in 752..=1000 {
            let s = sigma_bar(&spec(), &th, &x, t).unwrap();
            sum += (x[t - 1].powi(2) + 0.01) / (s * s + 0.01) + (s * s + 0.01).ln();
        }
        assert!((ev.value - sum / 249.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(LossSpec::bar(0.0).is_err());
        assert!(LossSpec::trunc(0.01, 0.0).is_err());
        assert!(LossSpec::trunc(0.01, 1.2).is_err());
        assert_eq!(LossSpec::unregularized(Variant::Trunc, 0.0, 0.5).unwrap().epsilon, 0.0);
        let x = [1.0, f64::NAN, 2.0];
        assert!(loss(&LossSpec::bar(0.1).unwrap(), &spec(), &Theta::new(0.1, 0.1, 1.0), Series::observed(&x)).is_err());
        let y = [1.0; 20];
        assert!(matches!(
            loss(&LossSpec::full(0.1).unwrap(), &spec(), &Theta::new(0.1, 0.1, 1.0), Series::observed(&y)),
            Err(Error::History(_))
        ));
    }

    #[test]
    fn score_and_hessian_against_finite_differences() {
        let th0 = Theta::new(0.2, 0.2, 1.0);
        let s = simulate(&spec(), &th0, &SimConfig::new(500, 21).with_burn_in(2000)).unwrap();
        let th = Theta::new(0.17, 0.25, 0.9);
        for lspec in [LossSpec::bar(0.01).unwrap(), LossSpec::full(0.01).unwrap(), LossSpec::trunc(0.01, 0.8).unwrap()] {
            let mut surf = LossSurface::new(lspec, spec(), Series::from(&s)).unwrap();
            let ev = surf.eval(&th).unwrap();
            let h = 1e-6;
            for k in 0..3 {
                let mut up = th.to_array();
                let mut dn = th.to_array();
                up[k] += h;
                dn[k] -= h;
                let fd = (surf.value(&Theta::from_array(up)).unwrap() - surf.value(&Theta::from_array(dn)).unwrap()) / (2.0 * h);
                assert!((fd - ev.score[k]).abs() < 1e-6 * ev.score[k].abs().max(1e-2), "{:?} k={k}", lspec.variant);
                let gu = surf.eval(&Theta::from_array(up)).unwrap().score;
                let gd = surf.eval(&Theta::from_array(dn)).unwrap().score;
                let hess = ev.hessian.unwrap();
                for q in 0..3 {
                    let fdh = (gu[q] - gd[q]) / (2.0 * h);
                    assert!((fdh - hess[k][q]).abs() < 1e-5 * hess[k][q].abs().max(1e-1));
                }
            }
        }
    }

    #[test]
    fn farima_loss_has_score_but_no_hessian() {
        let sp = CoeffSpec::new(crate::coeff::Family::Farima0d0, 300).unwrap();
        let x: Vec<f64> = (0..400).map(|i| ((i * 29 % 13) as f64 - 6.0) / 4.0).collect();
        let th = Theta::new(0.2, 0.3, 1.0);
        let mut surf = LossSurface::new(LossSpec::bar(0.01).unwrap(), sp, Series::observed(&x)).unwrap();
        let ev = surf.eval(&th).unwrap();
        assert!(ev.hessian.is_none());
        let h = 1e-6;
        let fd = (surf.value(&Theta::new(0.2 + h, 0.3, 1.0)).unwrap() - surf.value(&Theta::new(0.2 - h, 0.3, 1.0)).unwrap()) / (2.0 * h);
        assert!((fd - ev.score[0]).abs() < 1e-6 * ev.score[0].abs().max(1e-2));
    }

    #[test]
    fn every_term_is_bounded_below() {
        // (x^2+eps)/(s^2+eps) > 0, so each term exceeds ln(eps)
        let x: Vec<f64> = (0..300).map(|i| ((i * 31 % 17) as f64 - 8.0) / 3.0).collect();
        for &eps in &[1e-4, 1e-2, 1.0] {
            let v = loss(&LossSpec::bar(eps).unwrap(), &spec(), &Theta::new(0.4, 0.1, 0.2), Series::observed(&x)).unwrap();
            assert!(v.value.is_finite() && v.value >= eps.ln());
        }
    }

    #[test]
    fn landscape_shape() {
        let th0 = Theta::new(0.4, 0.1, 1.0);
        let s = simulate(&spec(), &th0, &SimConfig::new(2000, 2).with_burn_in(2000)).unwrap();
        let data = Series::observed(s.observations());
        let one = landscape(Variant::Trunc, 1.0, &spec(), 0.1, 1.0, data, &[0.3], &[0.01]).unwrap();
        assert_eq!(one.len(), 1);
        let grid: Vec<f64> = (0..=45).map(|i| i as f64 * 0.01).collect();
        let rows = landscape(Variant::Trunc, 1.0, &spec(), 0.1, 1.0, data, &grid, &[0.01, 10.0]).unwrap();
        let spread = |e: f64| {
            let v: Vec<f64> = rows.iter().filter(|r| r.epsilon == e).map(|r| r.loss).collect();
            v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
        };
        assert!(spread(10.0) < spread(0.01));
        let mut buf = Vec::new();
        write_landscape_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("epsilon,d,loss\n"));
        assert!(landscape(Variant::Trunc, 1.0, &spec(), 0.1, 1.0, data, &[], &[0.01]).is_err());
    }

    #[test]
    fn local_minima_counter() {
        assert_eq!(count_local_minima(&[3.0, 1.0, 2.0, 0.5, 4.0]), 2);
        assert_eq!(count_local_minima(&[1.0, 2.0, 3.0]), 0);
    }
}
