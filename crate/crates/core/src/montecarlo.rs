//! Replicated simulate-then-estimate studies and their summary statistics.

use std::io::Write;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::coeff::{CoeffSpec, ParamSpace, Theta};
use crate::csvfmt;
use crate::error::{Error, Result};
use crate::estimator::estimate;
use crate::likelihood::{LossSpec, Series};
use crate::optim::{FreeParams, OptimOptions};
use crate::rng::stream_seed;
use crate::simulate::{simulate, SimConfig};

/// `Phi^{-1}(0.75)`.
pub const MAD_SCALE: f64 = 0.674_489_750_196_081_7;

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub label: String,
    pub theta0: Theta,
    pub epsilon: f64,
    pub beta: f64,
    pub ns: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    /// Number of smallest `d` estimates dropped by the trimmed summaries.
    pub trim: usize,
    pub spec: CoeffSpec,
    pub burn_in: usize,
    pub space: ParamSpace,
    pub opts: OptimOptions,
    /// Which of `(d, c, a)` are estimated; the rest stay at `theta0`.
    pub free: [bool; 3],
}

impl StudyConfig {
    /// The two reference designs: `d = 0.1, beta = 0.799` and `d = 0.2, beta = 0.599`,
    /// both with `c = 0.2`, `a = 1`, `eps = 0.01`.
    pub fn case(which: u8) -> Result<Self> {
        let (d, beta) = match which {
            1 => (0.1, 0.799),
            2 => (0.2, 0.599),
            _ => return Err(Error::Validation(format!("unknown case {which}; expected 1 or 2"))),
        };
        Ok(Self {
            label: format!("case{which}"),
            theta0: Theta::new(d, 0.2, 1.0),
            epsilon: 0.01,
            beta,
            ns: vec![1000, 2500, 5000, 10_000],
            replicates: 1000,
            base_seed: 20_080_101,
            trim: 10,
            spec: CoeffSpec::default(),
            burn_in: 10_000,
            space: ParamSpace::default(),
            opts: OptimOptions::default(),
            free: [true, false, false],
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Validation("replicates must be >= 1".into()));
        }
        if self.trim >= self.replicates {
            return Err(Error::Validation(format!(
                "trim {} must be below replicates {}",
                self.trim, self.replicates
            )));
        }
        if self.ns.is_empty() || self.ns.contains(&0) {
            return Err(Error::Validation("sample sizes must be >= 1".into()));
        }
        LossSpec::trunc(self.epsilon, self.beta)?;
        self.free()?;
        self.opts.validate()
    }

    fn free(&self) -> Result<FreeParams> {
        FreeParams::new(self.free, self.theta0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRow {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub theta_hat: Theta,
    pub loss: f64,
    pub converged: bool,
    pub at_boundary: bool,
    /// Set when the replicate failed outright; the estimates are then NaN.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub s: f64,
    pub s_tilde: f64,
    /// `n^{beta/2} s`.
    pub scaled_s: f64,
    pub scaled_s_tilde: f64,
    /// `None` when the second central moment vanishes.
    pub skewness: Option<f64>,
    /// `None` when the interquartile range vanishes.
    pub q_skewness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySummary {
    pub n: usize,
    pub all: Summary,
    pub trimmed: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub label: String,
    pub rows: Vec<ReplicateRow>,
    pub summaries: Vec<StudySummary>,
}

impl McReport {
    pub fn d_hats(&self, n: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.n == n && r.error.is_none())
            .map(|r| r.theta_hat.d)
            .collect()
    }
}

fn replicate(cfg: &StudyConfig, n: usize, r: usize) -> ReplicateRow {
    let seed = stream_seed(cfg.base_seed, r as u64);
    let outcome = (|| {
        let sim = SimConfig::new(n, seed).with_burn_in(cfg.burn_in);
        let sample = simulate(&cfg.spec, &cfg.theta0, &sim)?;
        let lspec = LossSpec::trunc(cfg.epsilon, cfg.beta)?;
        estimate(
            &lspec,
            &cfg.spec,
            Series::observed(sample.observations()),
            &cfg.space,
            &cfg.free()?,
            &cfg.opts,
        )
    })();
    match outcome {
        Ok(res) => ReplicateRow {
            n,
            replicate: r,
            seed,
            theta_hat: res.theta_hat,
            loss: res.loss_at_opt,
            converged: res.converged,
            at_boundary: res.at_boundary,
            error: None,
        },
        Err(e) => ReplicateRow {
            n,
            replicate: r,
            seed,
            theta_hat: Theta::new(f64::NAN, f64::NAN, f64::NAN),
            loss: f64::NAN,
            converged: false,
            at_boundary: false,
            error: Some(e.to_string()),
        },
    }
}

/// Runs every `(n, replicate)` pair; rows come back ordered by `n` then replicate
/// whatever the scheduling.
pub fn run_study(cfg: &StudyConfig) -> Result<McReport> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = cfg
        .ns
        .iter()
        .flat_map(|&n| (0..cfg.replicates).map(move |r| (n, r)))
        .collect();
    let rows: Vec<ReplicateRow> = jobs.par_iter().map(|&(n, r)| replicate(cfg, n, r)).collect();
    let mut summaries = Vec::with_capacity(cfg.ns.len());
    for &n in &cfg.ns {
        let d: Vec<f64> = rows
            .iter()
            .filter(|r| r.n == n && r.error.is_none())
            .map(|r| r.theta_hat.d)
            .collect();
        if d.len() > cfg.trim + 1 {
            summaries.push(summarize(&d, n, cfg.beta, cfg.trim)?);
        }
    }
    Ok(McReport {
        label: cfg.label.clone(),
        rows,
        summaries,
    })
}

/// Quantile by linear interpolation between order statistics at the 1-based
/// position `1 + (N - 1) p`. `sorted` must be ascending.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

impl Summary {
    pub fn of(values: &[f64], n: usize, beta: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InsufficientData(format!("{} values, need >= 2", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("summary input contains non-finite values".into()));
        }
        let v = sorted(values);
        let len = v.len() as f64;
        let mean = v.iter().sum::<f64>() / len;
        let median = quantile(&v, 0.5);
        let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / len;
        let m3 = v.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / len;
        let s = (m2 * len / (len - 1.0)).sqrt();
        let mad = sorted(&v.iter().map(|x| (x - median).abs()).collect::<Vec<_>>());
        let s_tilde = quantile(&mad, 0.5) / MAD_SCALE;
        let (q1, q3) = (quantile(&v, 0.25), quantile(&v, 0.75));
        let scale = (n as f64).powf(beta / 2.0);
        Ok(Self {
            count: v.len(),
            mean,
            median,
            s,
            s_tilde,
            scaled_s: scale * s,
            scaled_s_tilde: scale * s_tilde,
            skewness: (m2 > 0.0).then(|| m3 / m2.powf(1.5)),
            q_skewness: (q3 > q1).then(|| ((q3 - median) - (median - q1)) / (q3 - q1)),
        })
    }

    fn stats(&self) -> [(&'static str, Option<f64>); 8] {
        [
            ("mean", Some(self.mean)),
            ("median", Some(self.median)),
            ("s", Some(self.s)),
            ("s_tilde", Some(self.s_tilde)),
            ("scaled_s", Some(self.scaled_s)),
            ("scaled_s_tilde", Some(self.scaled_s_tilde)),
            ("skewness", self.skewness),
            ("q_skewness", self.q_skewness),
        ]
    }
}

/// Summaries over all values and over the values left after dropping the
/// `trim_k` smallest.
pub fn summarize(values: &[f64], n: usize, beta: f64, trim_k: usize) -> Result<StudySummary> {
    if values.len() < trim_k + 2 {
        return Err(Error::InsufficientData(format!(
            "{} values cannot be trimmed by {trim_k}",
            values.len()
        )));
    }
    let v = sorted(values);
    Ok(StudySummary {
        n,
        all: Summary::of(&v, n, beta)?,
        trimmed: Summary::of(&v[trim_k..], n, beta)?,
    })
}

/// `(Phi^{-1}((i - 0.5)/N), v_(i))` for the sorted values.
pub fn normal_plot_data(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.len() < 2 {
        return Err(Error::InsufficientData("normal plot needs >= 2 values".into()));
    }
    let normal = Normal::standard();
    let n = values.len() as f64;
    Ok(sorted(values)
        .into_iter()
        .enumerate()
        .map(|(i, v)| (normal.inverse_cdf((i as f64 + 0.5) / n), v))
        .collect())
}

/// Sample autocorrelations at lags `0..=max_lag` of `x` or of `x^2`, with the
/// global mean and denominator `n`.
pub fn acf(x: &[f64], max_lag: usize, on_squares: bool) -> Result<Vec<f64>> {
    if max_lag >= x.len() {
        return Err(Error::InsufficientData(format!(
            "max lag {max_lag} needs more than {} observations",
            x.len()
        )));
    }
    let y: Vec<f64> = if on_squares {
        x.iter().map(|v| v * v).collect()
    } else {
        x.to_vec()
    };
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let dev: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let denom: f64 = dev.iter().map(|v| v * v).sum();
    if !(denom > 0.0) {
        return Err(Error::Domain("series has zero variance".into()));
    }
    Ok((0..=max_lag)
        .map(|k| dev[..dev.len() - k].iter().zip(&dev[k..]).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect())
}

pub fn write_rows_csv<W: Write>(report: &McReport, mut w: W) -> Result<()> {
    writeln!(w, "case,n,replicate,seed,d_hat,c_hat,a_hat,loss,converged,at_boundary")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            report.label,
            r.n,
            r.replicate,
            r.seed,
            csvfmt::num(r.theta_hat.d),
            csvfmt::num(r.theta_hat.c),
            csvfmt::num(r.theta_hat.a),
            csvfmt::num(r.loss),
            r.converged,
            r.at_boundary
        )?;
    }
    Ok(())
}

/// Undefined statistics are written as `NaN`.
pub fn write_summary_csv<W: Write>(report: &McReport, mut w: W) -> Result<()> {
    writeln!(w, "case,n,trimmed,stat,value")?;
    for s in &report.summaries {
        for (trimmed, sum) in [(false, &s.all), (true, &s.trimmed)] {
            for (name, value) in sum.stats() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    report.label,
                    s.n,
                    trimmed,
                    name,
                    csvfmt::num(value.unwrap_or(f64::NAN))
                )?;
            }
        }
    }
    Ok(())
}

pub fn write_plot_csv<W: Write>(points: &[(f64, f64)], mut w: W) -> Result<()> {
    writeln!(w, "q_theoretical,value")?;
    for (q, v) in points {
        writeln!(w, "{},{}", csvfmt::num(*q), csvfmt::num(*v))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn mad_constant_is_the_upper_quartile() {
        assert_relative_eq!(Normal::standard().inverse_cdf(0.75), MAD_SCALE, epsilon = 1e-12);
    }

    #[test]
    fn quantile_convention() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.75), 3.25);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn constant_and_symmetric_inputs() {
        let c = Summary::of(&[2.0; 6], 100, 0.5).unwrap();
        assert_eq!((c.s, c.s_tilde), (0.0, 0.0));
        assert!(c.skewness.is_none() && c.q_skewness.is_none());
        let s = Summary::of(&[1.0, -1.0, 0.0], 100, 0.5).unwrap();
        assert_eq!((s.mean, s.median), (0.0, 0.0));
        assert_eq!(s.q_skewness, Some(0.0));
        assert_eq!(s.skewness, Some(0.0));
        assert_eq!(s.s, 1.0);
        assert_relative_eq!(s.scaled_s, 100f64.sqrt().sqrt());
    }

    #[test]
    fn hand_computed_summary() {
        // values 0, 1, 2, 3, 10: mean 3.2, median 2, |v - 2| = 2,1,0,1,8 -> MAD 1
        let s = Summary::of(&[3.0, 10.0, 0.0, 2.0, 1.0], 1, 1.0).unwrap();
        assert_relative_eq!(s.mean, 3.2);
        assert_eq!(s.median, 2.0);
        assert_relative_eq!(s.s_tilde, 1.0 / MAD_SCALE);
        let m2 = [3.2f64, 2.2, 1.2, 0.2, 6.8].iter().map(|d| d * d).sum::<f64>() / 5.0;
        let m3 = [-3.2f64, -2.2, -1.2, -0.2, 6.8].iter().map(|d| d * d * d).sum::<f64>() / 5.0;
        assert_relative_eq!(s.s, (m2 * 5.0 / 4.0).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(s.skewness.unwrap(), m3 / m2.powf(1.5), epsilon = 1e-14);
        // quartiles 1 and 3 around the median 2
        assert_eq!(s.q_skewness, Some(0.0));
    }

    #[test]
    fn trimming_drops_the_smallest() {
        let v = [-100.0, -50.0, 1.0, 2.0, 3.0, 4.0];
        let s = summarize(&v, 10, 1.0, 2).unwrap();
        assert_eq!(s.trimmed.count, 4);
        assert_eq!(s.trimmed.mean, 2.5);
        assert!(s.trimmed.s < s.all.s);
        assert!(summarize(&v, 10, 1.0, 5).is_err());
    }

    #[test]
    fn mad_scale_is_consistent_for_normal_data() {
        let mut rng = crate::rng::rng_from_seed(5);
        let v: Vec<f64> = (0..200_000).map(|_| rng.sample(StandardNormal)).collect();
        let s = Summary::of(&v, 1, 1.0).unwrap();
        assert!((s.s_tilde / s.s - 1.0).abs() < 0.01);
    }

    #[test]
    fn normal_plot() {
        let p = normal_plot_data(&[5.0, 1.0]).unwrap();
        assert_relative_eq!(p[0].0, -MAD_SCALE, epsilon = 1e-12);
        assert_relative_eq!(p[1].0, MAD_SCALE, epsilon = 1e-12);
        assert_eq!((p[0].1, p[1].1), (1.0, 5.0));
        assert!(normal_plot_data(&[1.0]).is_err());

        let mut rng = crate::rng::rng_from_seed(6);
        let v: Vec<f64> = (0..20_000).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let pts = normal_plot_data(&v).unwrap();
        assert!(pts.windows(2).all(|w| w[0].1 <= w[1].1));
        let (mq, mv) = (
            pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64,
            pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64,
        );
        let sxy: f64 = pts.iter().map(|p| (p.0 - mq) * (p.1 - mv)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mq).powi(2)).sum();
        let sd = Summary::of(&v, 1, 1.0).unwrap().s;
        assert!((sxy / sxx - sd).abs() < 0.02 * sd);
    }

    #[test]
    fn acf_properties() {
        let mut rng = crate::rng::rng_from_seed(8);
        let x: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        let r = acf(&x, 20, false).unwrap();
        assert_eq!(r[0], 1.0);
        let band = 3.0 / (x.len() as f64).sqrt();
        assert!(r[1..].iter().all(|v| v.abs() < band));
        assert!(acf(&x, 10_000, false).is_err());
        assert!(matches!(acf(&[1.0; 5], 2, true), Err(Error::Domain(_))));
        let lin = acf(&[1.0, 2.0, 3.0, 4.0], 1, false).unwrap();
        assert_relative_eq!(lin[1], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn study_is_deterministic_and_ordered() {
        let mut cfg = StudyConfig::case(2).unwrap();
        cfg.ns = vec![300, 200];
        cfg.replicates = 6;
        cfg.trim = 1;
        cfg.burn_in = 300;
        cfg.spec = CoeffSpec::power_law(200);
        let a = run_study(&cfg).unwrap();
        let b = run_study(&cfg).unwrap();
        assert_eq!(a, b);
        let order: Vec<(usize, usize)> = a.rows.iter().map(|r| (r.n, r.replicate)).collect();
        let expect: Vec<(usize, usize)> = [300, 200].iter().flat_map(|&n| (0..6).map(move |r| (n, r))).collect();
        assert_eq!(order, expect);
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_study(&cfg).unwrap());
        assert_eq!(a, serial);
        assert_eq!(a.summaries.len(), 2);
        assert_eq!(a.summaries[0].trimmed.count, 5);
        for buf in [
            { let mut b = Vec::new(); write_rows_csv(&a, &mut b).unwrap(); b },
            { let mut b = Vec::new(); write_summary_csv(&a, &mut b).unwrap(); b },
        ] {
            assert!(String::from_utf8(buf).unwrap().starts_with("case,n,"));
        }
    }

    #[test]
    fn degenerate_study_recovers_the_scale() {
        let mut cfg = StudyConfig::case(1).unwrap();
        cfg.theta0 = Theta::new(0.1, 0.0, 1.3);
        cfg.free = [false, false, true];
        cfg.ns = vec![500];
        cfg.replicates = 1;
        cfg.trim = 0;
        cfg.beta = 1.0;
        cfg.burn_in = 0;
        cfg.spec = CoeffSpec::power_law(50);
        let r = run_study(&cfg).unwrap();
        assert_eq!(r.rows.len(), 1);
        let x = simulate(&cfg.spec, &cfg.theta0, &SimConfig::new(500, r.rows[0].seed).with_burn_in(0)).unwrap();
        let rms = (x.x.iter().map(|v| v * v).sum::<f64>() / 500.0).sqrt();
        assert!((r.rows[0].theta_hat.a - rms).abs() < 1e-4, "{} vs {rms}", r.rows[0].theta_hat.a);
    }

    #[test]
    fn config_validation() {
        assert!(StudyConfig::case(3).is_err());
        let mut cfg = StudyConfig::case(1).unwrap();
        cfg.trim = cfg.replicates;
        assert!(cfg.validate().is_err());
    }
}
