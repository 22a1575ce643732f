//! Coefficient families `b_j(theta)`, parameter-space geometry and the
//! moment conditions that guarantee finite moments of the volatility.
//!
//! Both families are linear in the scale: `b_j = c * phi_j(d)`. Everything
//! downstream (simulation, likelihood, asymptotics) only ever asks for the
//! unit-scale weights `phi_j(d)` and their `d`-derivatives.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::zeta::zeta_tail;

/// Parameter triple, always ordered `(d, c, a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theta {
    /// Long-memory exponent.
    pub d: f64,
    /// Coefficient scale.
    pub c: f64,
    /// Intercept of the volatility equation.
    pub a: f64,
}

impl Theta {
    pub const fn new(d: f64, c: f64, a: f64) -> Self {
        Self { d, c, a }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.d, self.c, self.a]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn is_finite(&self) -> bool {
        self.d.is_finite() && self.c.is_finite() && self.a.is_finite()
    }

    pub fn distance(&self, other: &Theta) -> f64 {
        let (a, b) = (self.to_array(), other.to_array());
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(d={}, c={}, a={})", self.d, self.c, self.a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `b_j = c j^{d-1}`.
    PowerLaw,
    /// `b_j = c pi_j(d)`, where `pi_j` are the coefficients of `(1-B)^{-d} - 1`.
    Farima0d0,
}

/// A coefficient family together with the lag order at which the
/// volatility recursion is truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoeffSpec {
    pub family: Family,
    pub truncation: usize,
}

impl CoeffSpec {
    pub fn new(family: Family, truncation: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::Validation("truncation order must be >= 1".into()));
        }
        Ok(Self { family, truncation })
    }

    pub fn power_law(truncation: usize) -> Self {
        Self {
            family: Family::PowerLaw,
            truncation: truncation.max(1),
        }
    }

    /// Unit-scale weights `d^k/dd^k phi_j(d)` for `j = 1..=len`, stored at index `j - 1`.
    pub fn unit_weights(&self, d: f64, len: usize, order_d: u32) -> Result<Vec<f64>> {
        match self.family {
            Family::PowerLaw => Ok((1..=len)
                .map(|j| {
                    let lj = (j as f64).ln();
                    lj.powi(order_d as i32) * ((d - 1.0) * lj).exp()
                })
                .collect()),
            Family::Farima0d0 => match order_d {
                0 => Ok(farima_pi(d, len)),
                1 => Ok(farima_pi_deriv(d, len)),
                k => Err(Error::Unsupported(format!(
                    "FARIMA(0,d,0) weights: d-derivative of order {k} (only 0 and 1 are available)"
                ))),
            },
        }
    }
}

impl Default for CoeffSpec {
    fn default() -> Self {
        Self::power_law(2000)
    }
}

/// `pi_1 = d, pi_j = pi_{j-1} (j - 1 + d) / j`.
fn farima_pi(d: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut p = d;
    for j in 1..=len {
        if j > 1 {
            p *= (j as f64 - 1.0 + d) / j as f64;
        }
        out.push(p);
    }
    out
}

/// With `r_j = prod_{i=1}^{j-1} (i+d)/i` we have `pi_j = d r_j / j` and
/// `d/dd pi_j = r_j / j + pi_j sum_{i=1}^{j-1} 1/(i+d)`, finite at `d = 0`.
fn farima_pi_deriv(d: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut r = 1.0;
    let mut harmonic = 0.0;
    for j in 1..=len {
        if j > 1 {
            let i = j as f64 - 1.0;
            r *= (i + d) / i;
            harmonic += 1.0 / (i + d);
        }
        let jf = j as f64;
        out.push(r / jf + d * r / jf * harmonic);
    }
    out
}

fn check_lag(j: usize) -> Result<()> {
    if j == 0 {
        return Err(Error::Domain("coefficient index must be >= 1".into()));
    }
    Ok(())
}

/// `b_j(theta)`.
pub fn coeff(spec: &CoeffSpec, theta: &Theta, j: usize) -> Result<f64> {
    check_lag(j)?;
    let phi = match spec.family {
        Family::PowerLaw => (j as f64).powf(theta.d - 1.0),
        Family::Farima0d0 => farima_pi(theta.d, j)[j - 1],
    };
    Ok(theta.c * phi)
}

/// Mixed partial derivative `d^{order_d}/dd d^{order_c}/dc b_j(theta)`.
pub fn coeff_deriv(
    spec: &CoeffSpec,
    theta: &Theta,
    j: usize,
    order_d: u32,
    order_c: u32,
) -> Result<f64> {
    check_lag(j)?;
    if order_d + order_c == 0 {
        return Err(Error::Domain(
            "derivative order must be at least 1; use coeff for the value".into(),
        ));
    }
    if order_c > 1 {
        return Err(Error::Unsupported(format!(
            "b_j is linear in c, derivative of order {order_c} in c is identically zero"
        )));
    }
    if order_d > 3 {
        return Err(Error::Unsupported(format!("d-derivative of order {order_d}")));
    }
    let phi = match spec.family {
        Family::PowerLaw => {
            let lj = (j as f64).ln();
            lj.powi(order_d as i32) * (j as f64).powf(theta.d - 1.0)
        }
        Family::Farima0d0 => spec.unit_weights(theta.d, j, order_d)?[j - 1],
    };
    Ok(if order_c == 1 { phi } else { theta.c * phi })
}

/// Largest admissible scale for the power-law family, `C (sum_j j^{2d-2})^{-1/2}`.
pub fn c_upper(d: f64, big_c: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&d) {
        return Err(Error::Divergence(format!(
            "sum of j^(2d-2) diverges for d = {d} (need 0 <= d < 1/2)"
        )));
    }
    if !(big_c > 0.0 && big_c < 1.0) {
        return Err(Error::Domain(format!("C = {big_c} must lie in (0, 1)")));
    }
    Ok(big_c / zeta_tail(2.0 - 2.0 * d, 1)?.sqrt())
}

/// Number of FARIMA weights summed exactly before the power-law tail takes over.
const FARIMA_DIRECT_TERMS: usize = 20_000;

/// `sum_{j >= from} |pi_j(d)|^p`, summed directly up to a cutoff with the
/// remainder from `pi_j ~ pi_K (j/K)^{d-1}`.
fn farima_power_sum(d: f64, p: f64, from: usize) -> Result<f64> {
    let s = p * (1.0 - d);
    if !(s > 1.0) {
        return Err(Error::Divergence(format!(
            "sum of |pi_j|^{p} diverges for d = {d}"
        )));
    }
    let cutoff = from.max(1) + FARIMA_DIRECT_TERMS;
    let pis = farima_pi(d, cutoff);
    let direct: f64 = pis[from.max(1) - 1..].iter().map(|v| v.abs().powf(p)).sum();
    let last = pis[cutoff - 1].abs() * (cutoff as f64).powf(1.0 - d);
    Ok(direct + last.powf(p) * zeta_tail(s, cutoff as u64 + 1)?)
}

/// `||b(theta)||_p = (sum_j |b_j|^p)^{1/p}`.
pub fn norm_p(spec: &CoeffSpec, theta: &Theta, p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::Domain(format!("norm order p = {p} must be >= 2")));
    }
    if theta.c == 0.0 {
        return Ok(0.0);
    }
    let s = p * (1.0 - theta.d);
    let sum = match spec.family {
        Family::PowerLaw => {
            if !(s > 1.0) {
                return Err(Error::Divergence(format!(
                    "||b||_{p} diverges: p(1-d) = {s} <= 1"
                )));
            }
            theta.c.abs().powf(p) * zeta_tail(s, 1)?
        }
        Family::Farima0d0 => theta.c.abs().powf(p) * farima_power_sum(theta.d, p, 1)?,
    };
    Ok(sum.powf(1.0 / p))
}

/// `sum_{j >= t} b_j^2`, the mean-square gap between the infinite-past and
/// finite-past volatility reconstructions at time `t`.
pub fn tail_variance(spec: &CoeffSpec, theta: &Theta, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::Domain("tail index t must be >= 1".into()));
    }
    if theta.c == 0.0 {
        return Ok(0.0);
    }
    let c2 = theta.c * theta.c;
    match spec.family {
        Family::PowerLaw => Ok(c2 * zeta_tail(2.0 - 2.0 * theta.d, t as u64)?),
        Family::Farima0d0 => Ok(c2 * farima_power_sum(theta.d, 2.0, t)?),
    }
}

/// Scale cap used for the FARIMA family near `d = 0`, where the normalizing
/// bound is unbounded because all weights vanish.
pub const FARIMA_C_CAP: f64 = 100.0;

/// The compact parameter box: `0 <= d <= d_u`, `0 <= c <= c_u(d)`, `a_d <= a <= a_u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpace {
    pub d_upper: f64,
    pub big_c: f64,
    pub a_lower: f64,
    pub a_upper: f64,
}

impl Default for ParamSpace {
    fn default() -> Self {
        Self {
            d_upper: 0.45,
            big_c: 0.9,
            a_lower: 0.1,
            a_upper: 10.0,
        }
    }
}

impl ParamSpace {
    pub fn new(d_upper: f64, big_c: f64, a_lower: f64, a_upper: f64) -> Result<Self> {
        let space = Self {
            d_upper,
            big_c,
            a_lower,
            a_upper,
        };
        space.check()?;
        Ok(space)
    }

    fn check(&self) -> Result<()> {
        if !(self.d_upper > 0.0 && self.d_upper < 0.5) {
            return Err(Error::Validation(format!("d_u = {} not in (0, 1/2)", self.d_upper)));
        }
        if !(self.big_c > 0.0 && self.big_c < 1.0) {
            return Err(Error::Validation(format!("C = {} not in (0, 1)", self.big_c)));
        }
        if !(self.a_lower > 0.0 && self.a_lower < self.a_upper && self.a_upper.is_finite()) {
            return Err(Error::Validation(format!(
                "need 0 < a_d < a_u < inf, got a_d = {}, a_u = {}",
                self.a_lower, self.a_upper
            )));
        }
        Ok(())
    }

    /// Upper bound on `c` at exponent `d` for the given family.
    pub fn c_max(&self, spec: &CoeffSpec, d: f64) -> Result<f64> {
        match spec.family {
            Family::PowerLaw => c_upper(d, self.big_c),
            Family::Farima0d0 => {
                if d <= 0.0 {
                    return Ok(FARIMA_C_CAP);
                }
                let s = farima_power_sum(d, 2.0, 1)?;
                Ok((self.big_c / s.sqrt()).min(FARIMA_C_CAP))
            }
        }
    }

    pub fn contains(&self, spec: &CoeffSpec, theta: &Theta) -> bool {
        self.validate(spec, theta).is_ok()
    }

    pub fn validate(&self, spec: &CoeffSpec, theta: &Theta) -> Result<()> {
        self.check()?;
        if !theta.is_finite() {
            return Err(Error::Validation(format!("non-finite parameter {theta}")));
        }
        if !(0.0..=self.d_upper).contains(&theta.d) {
            return Err(Error::Validation(format!(
                "d = {} outside [0, {}]",
                theta.d, self.d_upper
            )));
        }
        let c_max = self.c_max(spec, theta.d)?;
        if theta.c < 0.0 || theta.c > c_max * (1.0 + 1e-12) {
            return Err(Error::Validation(format!(
                "c = {} outside [0, {c_max}] at d = {}",
                theta.c, theta.d
            )));
        }
        if !(self.a_lower..=self.a_upper).contains(&theta.a) {
            return Err(Error::Validation(format!(
                "a = {} outside [{}, {}]",
                theta.a, self.a_lower, self.a_upper
            )));
        }
        Ok(())
    }

    /// Maps unit coordinates `u in [0,1]^3` onto the box; `c` is scaled by `c_max(d)`.
    pub fn from_unit(&self, spec: &CoeffSpec, u: [f64; 3]) -> Result<Theta> {
        let d = u[0] * self.d_upper;
        let c = u[1] * self.c_max(spec, d)?;
        let a = self.a_lower + u[2] * (self.a_upper - self.a_lower);
        Ok(Theta::new(d, c, a))
    }

    pub fn to_unit(&self, spec: &CoeffSpec, theta: &Theta) -> Result<[f64; 3]> {
        let c_max = self.c_max(spec, theta.d)?;
        Ok([
            theta.d / self.d_upper,
            if c_max > 0.0 { theta.c / c_max } else { 0.0 },
            (theta.a - self.a_lower) / (self.a_upper - self.a_lower),
        ])
    }
}

/// Signed and absolute innovation moments keyed by order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NoiseMoments {
    pub mu: BTreeMap<u32, f64>,
    pub mu_abs: BTreeMap<u32, f64>,
}

impl NoiseMoments {
    pub fn mu(&self, p: u32) -> Result<f64> {
        self.mu
            .get(&p)
            .copied()
            .ok_or_else(|| Error::IncompleteInput(format!("missing moment mu_{p}")))
    }

    pub fn mu_abs(&self, p: u32) -> Result<f64> {
        self.mu_abs
            .get(&p)
            .copied()
            .ok_or_else(|| Error::IncompleteInput(format!("missing absolute moment |mu|_{p}")))
    }

    /// Zero mean, unit variance, `|mu|_p >= |mu_p|` and Lyapunov monotonicity.
    pub fn validate(&self) -> Result<()> {
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * y.abs().max(1.0);
        if let Some(&m1) = self.mu.get(&1) {
            if !close(m1, 0.0) {
                return Err(Error::Validation(format!("mu_1 = {m1}, expected 0")));
            }
        }
        if let Some(&m2) = self.mu.get(&2) {
            if !close(m2, 1.0) {
                return Err(Error::Validation(format!("mu_2 = {m2}, expected 1")));
            }
        }
        for (&p, &abs) in &self.mu_abs {
            if let Some(&m) = self.mu.get(&p) {
                if abs < m.abs() * (1.0 - 1e-12) {
                    return Err(Error::Validation(format!("|mu|_{p} < |mu_{p}|")));
                }
            }
        }
        let mut prev = 0.0;
        for (&p, &abs) in &self.mu_abs {
            let root = abs.powf(1.0 / p as f64);
            if root < prev * (1.0 - 1e-12) {
                return Err(Error::Validation(format!(
                    "|mu|_p^(1/p) must be nondecreasing, fails at p = {p}"
                )));
            }
            prev = root;
        }
        Ok(())
    }
}

/// Moments of the standard normal law up to order `p_max` (at least 2).
pub fn gaussian_moments(p_max: u32) -> NoiseMoments {
    let p_max = p_max.max(2);
    let mut nm = NoiseMoments::default();
    // E|Z|^p = (p-1) E|Z|^{p-2}, E|Z|^0 = 1, E|Z| = sqrt(2/pi)
    let mut abs = [1.0, (2.0 / std::f64::consts::PI).sqrt()];
    let mut double_factorial = 1.0;
    for p in 1..=p_max {
        let slot = (p % 2) as usize;
        abs[slot] *= if p >= 2 { (p - 1) as f64 } else { 1.0 };
        if p % 2 == 0 {
            double_factorial *= (p - 1) as f64;
            nm.mu.insert(p, double_factorial);
        } else {
            nm.mu.insert(p, 0.0);
        }
        nm.mu_abs.insert(p, abs[slot]);
    }
    nm
}

/// Positive root of `3 z^2 - 3 z - 1 = 0`.
pub fn zeta_root() -> f64 {
    (3.0 + 21f64.sqrt()) / 6.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub lhs: f64,
    pub holds: bool,
}

impl Condition {
    fn new(lhs: f64) -> Self {
        Self { lhs, holds: lhs < 1.0 }
    }
}

/// Left-hand sides of the sufficient moment conditions at a parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub m3: Condition,
    pub mp_prime: BTreeMap<u32, Condition>,
    pub mp_dblprime: BTreeMap<u32, Condition>,
}

impl fmt::Display for MomentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |c: &Condition| if c.holds { "holds" } else { "fails" };
        writeln!(f, "M3      lhs = {:.6}  {}", self.m3.lhs, verdict(&self.m3))?;
        for (p, c) in &self.mp_prime {
            writeln!(f, "M'_{p:<4} lhs = {:.6}  {}", c.lhs, verdict(c))?;
        }
        for (p, c) in &self.mp_dblprime {
            writeln!(f, "M''_{p:<3} lhs = {:.6}  {}", c.lhs, verdict(c))?;
        }
        Ok(())
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Evaluates (M3), (M'_p) for every requested order and (M''_p) for the even
/// orders `p >= 4` among them.
pub fn check_moment_conditions(
    spec: &CoeffSpec,
    theta: &Theta,
    nm: &NoiseMoments,
    orders: &[u32],
) -> Result<MomentReport> {
    let b2 = norm_p(spec, theta, 2.0)?;
    let b3 = norm_p(spec, theta, 3.0)?;
    let m3 = Condition::new(nm.mu_abs(3)?.cbrt() * b3 + 3.0 * zeta_root() * b2);

    let mut mp_prime = BTreeMap::new();
    let mut mp_dblprime = BTreeMap::new();
    for &p in orders {
        if p < 2 {
            return Err(Error::Domain(format!("moment order {p} must be >= 2")));
        }
        let pf = p as f64;
        let factor = (2f64.powf(pf) - pf - 1.0).sqrt();
        mp_prime.insert(p, Condition::new(factor * nm.mu_abs(p)?.powf(1.0 / pf) * b2));

        if p >= 4 && p % 2 == 0 {
            let mut lhs = 0.0;
            for j in 2..=p {
                let bj = norm_p(spec, theta, j as f64)?;
                lhs += binomial(p, j) * bj.powi(j as i32) * nm.mu(j)?.abs();
            }
            mp_dblprime.insert(p, Condition::new(lhs));
        }
    }
    Ok(MomentReport {
        m3,
        mp_prime,
        mp_dblprime,
    })
}
