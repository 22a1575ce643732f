use crate::coeff::{CoeffSpec, ParamSpace};
use crate::error::{Error, Result};
use crate::likelihood::{LossSpec, LossSurface, Series};
use crate::optim::{minimize_box, EstimationResult, FreeParams, OptimOptions};

/// Fewest loss terms an estimation window may contain.
pub const MIN_WINDOW: usize = 10;

/// Minimizes the chosen loss variant over the box (or over the free axes of it).
pub fn estimate(
    lspec: &LossSpec,
    spec: &CoeffSpec,
    data: Series<'_>,
    space: &ParamSpace,
    free: &FreeParams,
    opts: &OptimOptions,
) -> Result<EstimationResult> {
    let mut surface = LossSurface::new(*lspec, *spec, data)?;
    if surface.window() < MIN_WINDOW {
        return Err(Error::DegenerateWindow(format!(
            "{} loss terms, need at least {MIN_WINDOW}",
            surface.window()
        )));
    }
    let f = free.fixed;
    let (fd, fc, fa) = (free.free[0], free.free[1], free.free[2]);
    if (!fd && !(0.0..=space.d_upper).contains(&f.d))
        || (!fc && !(f.c >= 0.0 && f.c.is_finite()))
        || (!fa && !(space.a_lower..=space.a_upper).contains(&f.a))
    {
        return Err(Error::Validation(format!("fixed parameters {f} lie outside the box")));
    }
    minimize_box(|t| surface.value(t), spec, space, free, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Theta;
    use crate::simulate::{simulate, SimConfig};

    #[test]
    fn frozen_scale_gives_root_mean_square() {
        let spec = CoeffSpec::default();
        let s = simulate(&spec, &Theta::new(0.1, 0.2, 1.0), &SimConfig::new(1000, 5).with_burn_in(2000)).unwrap();
        let x = s.observations();
        let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
        let free = FreeParams::new([true, false, true], Theta::new(0.0, 0.0, 1.0)).unwrap();
        let res = estimate(
            &LossSpec::bar(0.01).unwrap(),
            &spec,
            Series::observed(x),
            &ParamSpace::default(),
            &free,
            &OptimOptions::default(),
        )
        .unwrap();
        assert!((res.theta_hat.a - rms).abs() < 1e-4, "{} vs {rms}", res.theta_hat.a);
        assert_eq!(res.theta_hat.c, 0.0);
        assert!(res.converged);
    }

    #[test]
    fn tiny_window_is_rejected() {
        let x = [0.3; 12];
        let err = estimate(
            &LossSpec::trunc(0.01, 0.5).unwrap(),
            &CoeffSpec::default(),
            Series::observed(&x),
            &ParamSpace::default(),
            &FreeParams::all(),
            &OptimOptions::default(),
        );
        assert!(matches!(err, Err(Error::DegenerateWindow(_))));
    }

    #[test]
    fn reproducible_and_no_worse_than_seeds() {
        let spec = CoeffSpec::power_law(500);
        let th0 = Theta::new(0.2, 0.2, 1.0);
        let s = simulate(&spec, &th0, &SimConfig::new(1500, 9).with_burn_in(1000)).unwrap();
        let run = || {
            estimate(
                &LossSpec::trunc(0.01, 0.799).unwrap(),
                &spec,
                Series::from(&s),
                &ParamSpace::default(),
                &FreeParams::only_d(th0),
                &OptimOptions::default(),
            )
            .unwrap()
        };
        let (r1, r2) = (run(), run());
        assert_eq!(r1, r2);
        let mut surf = LossSurface::new(LossSpec::trunc(0.01, 0.799).unwrap(), spec, Series::from(&s)).unwrap();
        for i in 0..9 {
            let d = (i as f64 + 0.5) / 9.0 * 0.45;
            assert!(r1.loss_at_opt <= surf.value(&Theta::new(d, 0.2, 1.0)).unwrap());
        }
    }
}
