//! Checks of the asymptotic laws: power-law decay fits and the score gap
//! between the infinite-past and finite-past losses.

use std::io::Write;

use rayon::prelude::*;

use crate::asymptotics::{predicted_rate, RatePrediction};
use crate::coeff::{tail_variance, CoeffSpec, Theta};
use crate::csvfmt;
use crate::error::{Error, Result};
use crate::likelihood::{m_of_n, LossSpec, LossSurface, Series};
use crate::rng::stream_seed;
use crate::simulate::{simulate, SimConfig};

/// Least-squares line through `(ln k, ln value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub k_min: f64,
    pub k_max: f64,
    /// Pairs that survived the range and positivity filters.
    pub points: Vec<(f64, f64)>,
}

pub const MIN_FIT_POINTS: usize = 5;

/// Fits `ln value = intercept + slope ln k` over `k_min <= k <= k_max`;
/// nonpositive values are skipped.
pub fn fit_decay(pairs: &[(f64, f64)], k_min: f64, k_max: f64) -> Result<DecayFit> {
    let points: Vec<(f64, f64)> = pairs
        .iter()
        .copied()
        .filter(|&(k, v)| k > 0.0 && (k_min..=k_max).contains(&k) && v > 0.0 && v.is_finite())
        .collect();
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} usable points in [{k_min}, {k_max}], need {MIN_FIT_POINTS}",
            points.len()
        )));
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(k, v)| (k.ln(), v.ln())).unzip();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("all lags coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(DecayFit {
        slope,
        intercept,
        r2,
        k_min,
        k_max,
        points,
    })
}

/// `(t, sum_{j >= t} b_j^2)` for each `t`.
pub fn tail_variance_curve(spec: &CoeffSpec, theta: &Theta, ts: &[usize]) -> Result<Vec<(f64, f64)>> {
    ts.iter()
        .map(|&t| Ok((t as f64, tail_variance(spec, theta, t)?)))
        .collect()
}

pub fn write_decay_csv<W: Write>(fit: &DecayFit, mut w: W) -> Result<()> {
    writeln!(w, "k,value,log_k,log_value")?;
    for &(k, v) in &fit.points {
        writeln!(
            w,
            "{},{},{},{}",
            csvfmt::num(k),
            csvfmt::num(v),
            csvfmt::num(k.ln()),
            csvfmt::num(v.ln())
        )?;
    }
    csvfmt::comment_line(
        &mut w,
        &[
            ("slope", csvfmt::num(fit.slope)),
            ("intercept", csvfmt::num(fit.intercept)),
            ("r2", csvfmt::num(fit.r2)),
            ("k_min", csvfmt::num(fit.k_min)),
            ("k_max", csvfmt::num(fit.k_max)),
        ],
    )?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGap {
    /// Monte Carlo mean of `|d_n|` for the `d` component.
    pub mean_abs_d: f64,
    pub se_abs_d: f64,
    /// Monte Carlo mean of the Euclidean norm of `d_n`.
    pub mean_norm: f64,
    pub window: usize,
    pub truncation: usize,
    pub prediction: RatePrediction,
}

/// Monte Carlo estimate of `E|d_n|` where
/// `d_n = sqrt(m(n) + 1) (score_full - score_bar)` on the truncated window at `theta0`.
///
/// The infinite past is approximated with `2n` lags and a burn-in of the
/// same length; the coefficient family comes from `spec`.
pub fn score_gap(
    spec: &CoeffSpec,
    theta0: &Theta,
    epsilon: f64,
    n: usize,
    beta: f64,
    replicates: usize,
    base_seed: u64,
) -> Result<ScoreGap> {
    if replicates < 2 {
        return Err(Error::Validation("score gap needs >= 2 replicates".into()));
    }
    let prediction = predicted_rate(n, beta, theta0.d)?;
    let m = m_of_n(n, beta)?;
    let truncation = 2 * n;
    let wide = CoeffSpec::new(spec.family, truncation)?;
    let bar = LossSpec::trunc(epsilon, beta)?;
    let full = LossSpec::full(epsilon)?;
    let gaps: Vec<[f64; 3]> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let cfg = SimConfig::new(n, stream_seed(base_seed, r as u64)).with_burn_in(truncation);
            let s = simulate(&wide, theta0, &cfg)?;
            let sb = LossSurface::new(bar, wide, Series::observed(s.observations()))?.eval(theta0)?;
            let window_start = s.first_retained() + n - m - 1;
            let sf = LossSurface::new(full, wide, Series::with_history(&s.x, window_start))?.eval(theta0)?;
            debug_assert_eq!(sf.t_range.1 - sf.t_range.0, sb.t_range.1 - sb.t_range.0);
            let scale = ((m + 1) as f64).sqrt();
            Ok([0, 1, 2].map(|k| scale * (sf.score[k] - sb.score[k])))
        })
        .collect::<Result<_>>()?;
    let count = gaps.len() as f64;
    let abs_d: Vec<f64> = gaps.iter().map(|g| g[0].abs()).collect();
    let mean_abs_d = abs_d.iter().sum::<f64>() / count;
    let var = abs_d.iter().map(|v| (v - mean_abs_d).powi(2)).sum::<f64>() / (count - 1.0);
    let mean_norm = gaps
        .iter()
        .map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt())
        .sum::<f64>()
        / count;
    Ok(ScoreGap {
        mean_abs_d,
        se_abs_d: (var / count).sqrt(),
        mean_norm,
        window: m + 1,
        truncation,
        prediction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_pairs(exp: f64, scale: f64) -> Vec<(f64, f64)> {
        (1..=200).map(|k| (k as f64, scale * (k as f64).powf(exp))).collect()
    }

    #[test]
    fn exact_power_law() {
        let fit = fit_decay(&power_pairs(-0.8, 1.0), 1.0, 200.0).unwrap();
        assert!((fit.slope + 0.8).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scale_changes_only_the_intercept() {
        let a = fit_decay(&power_pairs(-0.6, 1.0), 5.0, 100.0).unwrap();
        let b = fit_decay(&power_pairs(-0.6, 37.5), 5.0, 100.0).unwrap();
        assert!((a.slope - b.slope).abs() < 1e-12);
        assert!((b.intercept - a.intercept - 37.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn filtering_and_errors() {
        let mut pairs = power_pairs(-0.5, 1.0);
        pairs[10].1 = -1.0;
        pairs[11].1 = 0.0;
        let fit = fit_decay(&pairs, 1.0, 200.0).unwrap();
        assert_eq!(fit.points.len(), 198);
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!(matches!(fit_decay(&pairs, 1.0, 4.0), Err(Error::InsufficientData(_))));
        let mut buf = Vec::new();
        write_decay_csv(&fit, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,value,log_k,log_value\n"));
        assert!(text.lines().last().unwrap().starts_with("# slope="));
    }

    #[test]
    fn tail_variance_slopes() {
        let ts: Vec<usize> = (0..=40).map(|i| (100.0 * 100f64.powf(i as f64 / 40.0)).round() as usize).collect();
        for (d, expect) in [(0.1, -0.8), (0.2, -0.6)] {
            let curve = tail_variance_curve(&CoeffSpec::default(), &Theta::new(d, 0.2, 1.0), &ts).unwrap();
            let fit = fit_decay(&curve, 100.0, 10_000.0).unwrap();
            assert!((fit.slope - expect).abs() < 0.02, "d={d}: {}", fit.slope);
        }
    }

    #[test]
    fn gap_vanishes_without_dependence() {
        for n in [300, 600] {
            let g = score_gap(&CoeffSpec::default(), &Theta::new(0.2, 0.0, 1.0), 0.01, n, 0.8, 3, 1).unwrap();
            assert_eq!(g.mean_abs_d, 0.0);
            assert_eq!(g.truncation, 2 * n);
        }
    }

    #[test]
    fn gap_is_positive_with_dependence() {
        let g = score_gap(&CoeffSpec::default(), &Theta::new(0.2, 0.2, 1.0), 0.01, 400, 0.8, 4, 2).unwrap();
        assert!(g.mean_abs_d > 0.0 && g.mean_norm >= g.mean_abs_d);
        assert_eq!(g.window, 120);
        assert!(score_gap(&CoeffSpec::default(), &Theta::new(0.2, 0.2, 1.0), 0.01, 400, 0.8, 1, 2).is_err());
    }
}
