//! Long-memory LARCH processes: simulation, epsilon-regularized
//! pseudo-maximum-likelihood estimation, sandwich asymptotics and the
//! Monte Carlo harness used to study the estimators in finite samples.
//!
//! The model is `X_t = eps_t sigma_t`, `sigma_t = a + sum_j b_j X_{t-j}` with
//! hyperbolically decaying coefficients `b_j = c j^{d-1}`. Parameters are
//! always ordered `(d, c, a)`.

pub mod asymptotics;
pub mod coeff;
pub mod csvfmt;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod likelihood;
mod kernel;
pub mod montecarlo;
pub mod optim;
pub mod rng;
pub mod simulate;
pub mod zeta;

pub use coeff::{
    c_upper, check_moment_conditions, coeff, coeff_deriv, gaussian_moments, norm_p,
    tail_variance, CoeffSpec, Family, MomentReport, NoiseMoments, ParamSpace, Theta,
};
pub use error::{Error, Result};
pub use estimator::estimate;
pub use likelihood::{loss, m_of_n, LossEval, LossSpec, LossSurface, Series, Variant};
pub use optim::{minimize_box, EstimationResult, FreeParams, OptimOptions};
pub use simulate::{simulate, volterra_sigma, Noise, Sample, SimConfig};
