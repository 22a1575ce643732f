//! Multi-start Nelder–Mead over the parameter box.
//!
//! The search runs in unit coordinates (see [`ParamSpace::from_unit`]) over
//! the free axes only; fixed axes keep the values supplied in [`FreeParams`].

use std::cmp::Ordering;

use crate::coeff::{CoeffSpec, ParamSpace, Theta};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimOptions {
    pub starts: usize,
    pub grid_dims: [usize; 3],
    pub tol_x: f64,
    pub tol_f: f64,
    pub max_iter: usize,
    pub boundary_margin: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            starts: 5,
            grid_dims: [9, 9, 9],
            tol_x: 1e-5,
            tol_f: 1e-9,
            max_iter: 2000,
            boundary_margin: 1e-4,
        }
    }
}

impl OptimOptions {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::Validation("starts must be >= 1".into()));
        }
        if self.grid_dims.contains(&0) {
            return Err(Error::Validation("grid dimensions must be >= 1".into()));
        }
        if !(self.tol_x > 0.0 && self.tol_f > 0.0) {
            return Err(Error::Validation("tolerances must be > 0".into()));
        }
        if self.max_iter == 0 || !(self.boundary_margin >= 0.0) {
            return Err(Error::Validation("max_iter must be >= 1 and boundary_margin >= 0".into()));
        }
        Ok(())
    }
}

/// Which of `(d, c, a)` are optimized; the others are held at `fixed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParams {
    pub free: [bool; 3],
    pub fixed: Theta,
}

impl FreeParams {
    pub fn all() -> Self {
        Self {
            free: [true; 3],
            fixed: Theta::new(0.0, 0.0, 1.0),
        }
    }

    /// Only `d` varies; `c` and `a` stay at their values in `at`.
    pub fn only_d(at: Theta) -> Self {
        Self {
            free: [true, false, false],
            fixed: at,
        }
    }

    pub fn new(free: [bool; 3], fixed: Theta) -> Result<Self> {
        if !free.iter().any(|&f| f) {
            return Err(Error::Validation("at least one parameter must be free".into()));
        }
        Ok(Self { free, fixed })
    }

    fn axes(&self) -> Vec<usize> {
        (0..3).filter(|&k| self.free[k]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub theta_hat: Theta,
    pub loss_at_opt: f64,
    /// Simplex iterations of the winning start.
    pub iterations: usize,
    pub converged: bool,
    pub at_boundary: bool,
    /// Index of the winning start in grid-rank order.
    pub start_used: usize,
}

struct Mapper<'a> {
    spec: &'a CoeffSpec,
    space: &'a ParamSpace,
    free: &'a FreeParams,
    axes: Vec<usize>,
}

impl Mapper<'_> {
    fn theta(&self, z: &[f64]) -> Result<Theta> {
        let mut u = [0.0; 3];
        for (&k, &v) in self.axes.iter().zip(z) {
            u[k] = v.clamp(0.0, 1.0);
        }
        let d = if self.free.free[0] {
            u[0] * self.space.d_upper
        } else {
            self.free.fixed.d
        };
        let c = if self.free.free[1] {
            u[1] * self.space.c_max(self.spec, d)?
        } else {
            self.free.fixed.c
        };
        let a = if self.free.free[2] {
            self.space.a_lower + u[2] * (self.space.a_upper - self.space.a_lower)
        } else {
            self.free.fixed.a
        };
        Ok(Theta::new(d, c, a))
    }

    fn at_boundary(&self, th: &Theta, margin: f64) -> Result<bool> {
        let f = self.free.free;
        let near = |v: f64, lo: f64, hi: f64| v - lo <= margin || hi - v <= margin;
        Ok((f[0] && near(th.d, 0.0, self.space.d_upper))
            || (f[1] && near(th.c, 0.0, self.space.c_max(self.spec, th.d)?))
            || (f[2] && near(th.a, self.space.a_lower, self.space.a_upper)))
    }
}

#[derive(Debug, Clone)]
struct Point {
    z: Vec<f64>,
    theta: Theta,
    f: f64,
}

/// Orders by value, then by smallest `d`, `c`, `a`.
fn rank(p: &Point, q: &Point) -> Ordering {
    p.f.total_cmp(&q.f)
        .then(p.theta.d.total_cmp(&q.theta.d))
        .then(p.theta.c.total_cmp(&q.theta.c))
        .then(p.theta.a.total_cmp(&q.theta.a))
}

struct Evaluator<'a, F> {
    f: F,
    map: Mapper<'a>,
}

impl<F: FnMut(&Theta) -> Result<f64>> Evaluator<'_, F> {
    fn point(&mut self, z: Vec<f64>) -> Result<Point> {
        let z: Vec<f64> = z.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let theta = self.map.theta(&z)?;
        let f = match (self.f)(&theta) {
            Ok(v) if v.is_finite() => v,
            _ => f64::INFINITY,
        };
        Ok(Point { z, theta, f })
    }
}

fn combine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

fn nelder_mead<F: FnMut(&Theta) -> Result<f64>>(
    ev: &mut Evaluator<'_, F>,
    start: Point,
    step: &[f64],
    opts: &OptimOptions,
) -> Result<(Point, usize, bool)> {
    let k = start.z.len();
    let mut simplex = vec![start.clone()];
    for i in 0..k {
        let mut z = start.z.clone();
        z[i] += if z[i] <= 0.5 { step[i] } else { -step[i] };
        simplex.push(ev.point(z)?);
    }
    for iter in 0..opts.max_iter {
        simplex.sort_by(rank);
        let (best, worst) = (&simplex[0], &simplex[k]);
        let f_spread = worst.f - best.f;
        let x_spread = simplex[1..]
            .iter()
            .map(|p| p.theta.distance(&best.theta))
            .fold(0.0, f64::max);
        if f_spread.is_finite() && f_spread <= opts.tol_f && x_spread <= opts.tol_x {
            return Ok((simplex.swap_remove(0), iter, true));
        }
        let centroid: Vec<f64> = (0..k)
            .map(|i| simplex[..k].iter().map(|p| p.z[i]).sum::<f64>() / k as f64)
            .collect();
        let worst_z = simplex[k].z.clone();
        let refl = ev.point(combine(&centroid, &worst_z, -1.0))?;
        if rank(&refl, &simplex[0]) == Ordering::Less {
            let exp = ev.point(combine(&centroid, &worst_z, -2.0))?;
            simplex[k] = if rank(&exp, &refl) == Ordering::Less { exp } else { refl };
            continue;
        }
        if rank(&refl, &simplex[k - 1]) == Ordering::Less {
            simplex[k] = refl;
            continue;
        }
        let contracted = if rank(&refl, &simplex[k]) == Ordering::Less {
            ev.point(combine(&centroid, &refl.z, 0.5))?
        } else {
            ev.point(combine(&centroid, &worst_z, 0.5))?
        };
        if rank(&contracted, &simplex[k]) == Ordering::Less && rank(&contracted, &refl) != Ordering::Greater {
            simplex[k] = contracted;
            continue;
        }
        let best_z = simplex[0].z.clone();
        for vertex in simplex.iter_mut().skip(1).take(k) {
            *vertex = ev.point(combine(&best_z, &vertex.z, 0.5))?;
        }
    }
    simplex.sort_by(rank);
    let iters = opts.max_iter;
    Ok((simplex.swap_remove(0), iters, false))
}

/// Minimizes `objective` over the box. Objective errors and non-finite values
/// count as `+inf`. A start that exhausts `max_iter` is reported through
/// `converged = false` rather than an error.
pub fn minimize_box<F>(
    objective: F,
    spec: &CoeffSpec,
    space: &ParamSpace,
    free: &FreeParams,
    opts: &OptimOptions,
) -> Result<EstimationResult>
where
    F: FnMut(&Theta) -> Result<f64>,
{
    opts.validate()?;
    let axes = free.axes();
    if axes.is_empty() {
        return Err(Error::Validation("at least one parameter must be free".into()));
    }
    let dims: Vec<usize> = axes.iter().map(|&k| opts.grid_dims[k]).collect();
    let mut ev = Evaluator {
        f: objective,
        map: Mapper {
            spec,
            space,
            free,
            axes,
        },
    };

    let cells: usize = dims.iter().product();
    let mut grid = Vec::with_capacity(cells);
    for mut idx in 0..cells {
        let mut z = Vec::with_capacity(dims.len());
        for &g in &dims {
            z.push(((idx % g) as f64 + 0.5) / g as f64);
            idx /= g;
        }
        grid.push(ev.point(z)?);
    }
    grid.sort_by(rank);
    grid.truncate(opts.starts);

    let step: Vec<f64> = dims.iter().map(|&g| 0.5 / g as f64).collect();
    let mut best: Option<(Point, usize, bool, usize)> = None;
    for (s, start) in grid.into_iter().enumerate() {
        let (p, iters, conv) = nelder_mead(&mut ev, start, &step, opts)?;
        let better = match &best {
            None => true,
            Some((q, ..)) => rank(&p, q) == Ordering::Less,
        };
        if better {
            best = Some((p, iters, conv, s));
        }
    }
    let (p, iterations, converged, start_used) = best.expect("at least one start");
    let at_boundary = ev.map.at_boundary(&p.theta, opts.boundary_margin)?;
    Ok(EstimationResult {
        theta_hat: p.theta,
        loss_at_opt: p.f,
        iterations,
        converged: converged && p.f.is_finite(),
        at_boundary,
        start_used,
    })
}
