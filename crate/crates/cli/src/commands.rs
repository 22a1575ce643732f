use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use larch::asymptotics::{predicted_rate, sandwich, write_sandwich_csv, McBudget, Regime};
use larch::csvfmt;
use larch::diagnostics::score_gap;
use larch::likelihood::{landscape, write_landscape_csv};
use larch::montecarlo::{acf, normal_plot_data, run_study, write_plot_csv, write_rows_csv, write_summary_csv, StudyConfig};
use larch::{
    check_moment_conditions, estimate, gaussian_moments, simulate, CoeffSpec, FreeParams, LossSpec, OptimOptions,
    ParamSpace, Series, SimConfig, Theta,
};

use crate::config::Resolver;

/// Console output that tolerates a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}
use crate::failure::{usage, Failure};
use crate::series::load_series;

/// One invocation: resolved settings plus the output directory.
pub struct Run {
    pub command: &'static str,
    pub res: Resolver,
    out: PathBuf,
    written: Vec<PathBuf>,
}

impl Run {
    pub fn new(command: &'static str, mut res: Resolver) -> Result<Self, Failure> {
        let out: String = res.get("out", ".".to_string())?;
        let out = PathBuf::from(out);
        std::fs::create_dir_all(&out)
            .map_err(|e| usage(format!("cannot create output directory {}: {e}", out.display())))?;
        Ok(Self {
            command,
            res,
            out,
            written: Vec::new(),
        })
    }

    fn header(&self) -> Vec<(&str, String)> {
        let mut fields = vec![("command", self.command.to_string())];
        fields.extend(
            self.res
                .used()
                .iter()
                .filter(|(k, _)| k.as_str() != "out")
                .map(|(k, v)| (k.as_str(), v.clone())),
        );
        fields
    }

    /// Writes `file` as a `#` comment line of settings followed by `body`.
    fn emit<F>(&mut self, file: &str, body: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut BufWriter<File>) -> larch::Result<()>,
    {
        let path = self.out.join(file);
        let mut w = BufWriter::new(File::create(&path)?);
        csvfmt::comment_line(&mut w, &self.header())?;
        body(&mut w)?;
        w.flush()?;
        say!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }

    /// Records the full resolved configuration next to the outputs.
    pub fn finish(self) -> Result<(), Failure> {
        let path = self.out.join(format!("{}.meta", self.command));
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "command = {}", self.command)?;
        writeln!(w, "version = {}", env!("CARGO_PKG_VERSION"))?;
        for (k, v) in self.res.used() {
            writeln!(w, "{k} = {v}")?;
        }
        for p in &self.written {
            writeln!(w, "output = {}", p.display())?;
        }
        w.flush()?;
        Ok(())
    }

    fn preset(&mut self) -> Result<Option<StudyConfig>, Failure> {
        match self.res.opt::<u8>("case")? {
            Some(k) => Ok(Some(StudyConfig::case(k).map_err(|e| usage(e.to_string()))?)),
            None => Ok(None),
        }
    }

    /// `(d, c, a)` from flags, falling back to a case preset, then to `fallback`.
    fn theta(&mut self, fallback: Theta) -> Result<Theta, Failure> {
        let base = self.preset()?.map_or(fallback, |p| p.theta0);
        Ok(Theta::new(
            self.res.get("d", base.d)?,
            self.res.get("c", base.c)?,
            self.res.get("a", base.a)?,
        ))
    }

    fn spec(&mut self) -> Result<CoeffSpec, Failure> {
        Ok(CoeffSpec::power_law(self.res.get("trunc", 2000usize)?))
    }

    fn epsilon(&mut self, fallback: f64) -> Result<f64, Failure> {
        let base = self.preset()?.map_or(fallback, |p| p.epsilon);
        self.res.get("eps", base)
    }

    fn beta(&mut self, fallback: f64) -> Result<f64, Failure> {
        let base = self.preset()?.map_or(fallback, |p| p.beta);
        self.res.get("beta", base)
    }

    fn free(&mut self, default: &str, fixed: Theta) -> Result<FreeParams, Failure> {
        let names: Vec<String> = self.res.list("free", &[default.to_string()])?;
        let mut free = [false; 3];
        for name in names.iter().flat_map(|s| s.split(',')) {
            match name.trim() {
                "d" => free[0] = true,
                "c" => free[1] = true,
                "a" => free[2] = true,
                other => return Err(usage(format!("--free: unknown parameter `{other}`"))),
            }
        }
        FreeParams::new(free, fixed).map_err(|e| usage(e.to_string()))
    }

    fn sample(&mut self, theta: &Theta, default_n: usize) -> Result<larch::Sample, Failure> {
        let spec = self.spec()?;
        let n = self.res.get("n", default_n)?;
        let burn_in = self.res.get("burn-in", 10_000usize)?;
        let seed = self.res.get("seed", 1u64)?;
        Ok(simulate(&spec, theta, &SimConfig::new(n, seed).with_burn_in(burn_in))?)
    }
}

pub fn simulate_cmd(run: &mut Run) -> Result<(), Failure> {
    let theta = run.theta(Theta::new(0.1, 0.2, 1.0))?;
    let sample = run.sample(&theta, 1000)?;
    run.emit("simulate.csv", |w| sample.write_csv(w))
}

pub fn estimate_cmd(run: &mut Run) -> Result<(), Failure> {
    let input: String = run
        .res
        .opt("input")?
        .ok_or_else(|| usage("estimate needs --input <file>"))?;
    let x = load_series(Path::new(&input))?;
    let eps = run.epsilon(0.01)?;
    let lspec = match run.res.opt::<f64>("beta")? {
        Some(b) => LossSpec::trunc(eps, b)?,
        None => LossSpec::bar(eps)?,
    };
    let spec = run.spec()?;
    let fixed = run.theta(Theta::new(0.1, 0.2, 1.0))?;
    let free = run.free("d,c,a", fixed)?;
    let r = estimate(&lspec, &spec, Series::observed(&x), &ParamSpace::default(), &free, &OptimOptions::default())?;
    say!(
        "d = {:.6}  c = {:.6}  a = {:.6}  loss = {:.8}  converged = {}  at_boundary = {}",
        r.theta_hat.d, r.theta_hat.c, r.theta_hat.a, r.loss_at_opt, r.converged, r.at_boundary
    );
    run.emit("estimate.csv", |w| {
        writeln!(w, "d_hat,c_hat,a_hat,loss,converged,at_boundary,iterations")?;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            csvfmt::num(r.theta_hat.d),
            csvfmt::num(r.theta_hat.c),
            csvfmt::num(r.theta_hat.a),
            csvfmt::num(r.loss_at_opt),
            r.converged,
            r.at_boundary,
            r.iterations
        )?;
        Ok(())
    })
}

pub fn mc_cmd(run: &mut Run) -> Result<(), Failure> {
    let mut cfg = run.preset()?.unwrap_or(StudyConfig::case(1)?);
    cfg.theta0 = run.theta(cfg.theta0)?;
    cfg.epsilon = run.epsilon(cfg.epsilon)?;
    cfg.beta = run.beta(cfg.beta)?;
    cfg.ns = run.res.list("n", &cfg.ns)?;
    cfg.replicates = run.res.get("replicates", cfg.replicates)?;
    cfg.trim = run.res.get("trim", cfg.trim)?;
    cfg.base_seed = run.res.get("seed", cfg.base_seed)?;
    cfg.burn_in = run.res.get("burn-in", cfg.burn_in)?;
    cfg.spec = run.spec()?;
    cfg.free = run.free("d", cfg.theta0)?.free;
    run.res.record("label", &cfg.label);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let report = run_study(&cfg)?;
    for s in &report.summaries {
        say!(
            "n = {:>6}  median {:.4}  n^(b/2) s~ {:.3}  | trimmed: median {:.4}  n^(b/2) s~ {:.3}",
            s.n, s.all.median, s.all.scaled_s_tilde, s.trimmed.median, s.trimmed.scaled_s_tilde
        );
    }
    run.emit("mc_rows.csv", |w| write_rows_csv(&report, w))?;
    run.emit("mc_summary.csv", |w| write_summary_csv(&report, w))?;
    for &n in &cfg.ns {
        let d = report.d_hats(n);
        if d.len() >= 2 {
            let pts = normal_plot_data(&d)?;
            run.emit(&format!("mc_plot_n{n}.csv"), |w| write_plot_csv(&pts, w))?;
        }
    }
    Ok(())
}

pub fn landscape_cmd(run: &mut Run) -> Result<(), Failure> {
    let theta = run.theta(Theta::new(0.4, 0.1, 1.0))?;
    let sample = run.sample(&theta, 2000)?;
    let eps = run.res.list("eps", &[0.01, 0.001, 0.0001, 0.0])?;
    let beta = run.res.get("beta", 1.0)?;
    let points = run.res.get("points", 451usize)?;
    if points < 2 {
        return Err(usage("--points must be >= 2"));
    }
    let d_max = ParamSpace::default().d_upper;
    let grid: Vec<f64> = (0..points).map(|i| d_max * i as f64 / (points - 1) as f64).collect();
    let spec = run.spec()?;
    let rows = landscape(
        larch::Variant::Trunc,
        beta,
        &spec,
        theta.c,
        theta.a,
        Series::observed(sample.observations()),
        &grid,
        &eps,
    )?;
    run.emit("landscape.csv", |w| write_landscape_csv(&rows, w))
}

pub fn acf_cmd(run: &mut Run) -> Result<(), Failure> {
    let x = match run.res.opt::<String>("input")? {
        Some(path) => load_series(Path::new(&path))?,
        None => {
            let theta = run.theta(Theta::new(0.2, 0.2, 1.0))?;
            run.sample(&theta, 10_000)?.observations().to_vec()
        }
    };
    let max_lag = run.res.get("max-lag", 100usize)?;
    let rx = acf(&x, max_lag, false)?;
    let rx2 = acf(&x, max_lag, true)?;
    run.emit("acf.csv", |w| {
        writeln!(w, "lag,acf_x,acf_x2")?;
        for k in 0..=max_lag {
            writeln!(w, "{k},{},{}", csvfmt::num(rx[k]), csvfmt::num(rx2[k]))?;
        }
        Ok(())
    })
}

pub fn asymcov_cmd(run: &mut Run) -> Result<(), Failure> {
    let theta = run.theta(Theta::new(0.1, 0.2, 1.0))?;
    let eps = run.epsilon(0.01)?;
    let spec = run.spec()?;
    let mc = McBudget {
        path_length: run.res.get("n", 500_000usize)?,
        burn_in: run.res.get("burn-in", 10_000usize)?,
        seed: run.res.get("seed", 1u64)?,
        ..McBudget::default()
    };
    let r = sandwich(&spec, &theta, eps, &gaussian_moments(4), &mc)?;
    say!(
        "sd (joint) = ({:.4}, {:.4}, {:.4})  sd_d (d only) = {:.4}",
        r.sd[0], r.sd[1], r.sd[2], r.sd_d_only
    );
    run.emit("asymcov.csv", |w| write_sandwich_csv(&r, w))
}

pub fn check_moments_cmd(run: &mut Run) -> Result<(), Failure> {
    let theta = run.theta(Theta::new(0.1, 0.2, 1.0))?;
    let spec = run.spec()?;
    let report = check_moment_conditions(&spec, &theta, &gaussian_moments(8), &[2, 3, 4, 6, 8])?;
    say!("{}", report.to_string().trim_end());
    let path = run.out.join("check_moments.txt");
    let mut w = BufWriter::new(File::create(&path)?);
    csvfmt::comment_line(&mut w, &run.header())?;
    write!(w, "{report}")?;
    w.flush()?;
    run.written.push(path);
    Ok(())
}

pub fn rates_cmd(run: &mut Run) -> Result<(), Failure> {
    let theta = run.theta(Theta::new(0.1, 0.2, 1.0))?;
    let beta = run.beta(0.799)?;
    let eps = run.epsilon(0.01)?;
    let ns = run.res.list("n", &[1000usize, 4000])?;
    let replicates = run.res.get("replicates", 20usize)?;
    let seed = run.res.get("seed", 1u64)?;
    let spec = run.spec()?;
    let mut rows = Vec::new();
    for &n in &ns {
        let p = predicted_rate(n, beta, theta.d)?;
        let gap = if replicates >= 2 {
            Some(score_gap(&spec, &theta, eps, n, beta, replicates, seed)?)
        } else {
            None
        };
        rows.push((n, p, gap));
    }
    run.emit("rates.csv", |w| {
        writeln!(w, "n,beta,d,score_gap_order,regime,rate_exponent,mean_abs_d_n,se_abs_d_n,mean_norm_d_n")?;
        for (n, p, gap) in &rows {
            let regime = match p.regime {
                Regime::Clt => "clt",
                Regime::Border => "border",
                Regime::Open => "open",
            };
            let (m, se, norm) = gap
                .as_ref()
                .map_or((f64::NAN, f64::NAN, f64::NAN), |g| (g.mean_abs_d, g.se_abs_d, g.mean_norm));
            writeln!(
                w,
                "{n},{},{},{},{regime},{},{},{},{}",
                csvfmt::num(beta),
                csvfmt::num(theta.d),
                csvfmt::num(p.score_gap_order),
                csvfmt::num(p.rate_exponent.unwrap_or(f64::NAN)),
                csvfmt::num(m),
                csvfmt::num(se),
                csvfmt::num(norm)
            )?;
        }
        Ok(())
    })
}
