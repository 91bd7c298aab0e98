//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

use nalgebra::SVector;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Initial step; `None` picks one from the first derivative.
    pub initial_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_steps: 20_000_000,
            initial_step: None,
        }
    }
}

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `dy/dt = rhs(t, y)` from `t0` over `duration`.
pub fn dormand_prince<const N: usize, F>(
    rhs: F,
    t0: f64,
    y0: SVector<f64, N>,
    duration: f64,
    opts: &OdeOptions,
) -> Result<SVector<f64, N>>
where
    F: Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    if duration == 0.0 {
        return Ok(y0);
    }
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::invalid("duration", "must be positive and finite"));
    }
    let t_end = t0 + duration;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = opts.initial_step.unwrap_or_else(|| {
        let scale = y.amax().max(opts.abs_tol);
        let rate = k1.amax();
        if rate > 0.0 {
            (1e-3 * scale / rate).min(duration)
        } else {
            duration
        }
    });
    let h_min = 1e-14 * duration.max(t0.abs());

    for _ in 0..opts.max_steps {
        if t >= t_end {
            return Ok(y);
        }
        if t + h > t_end {
            h = t_end - t;
        }
        let k2 = rhs(t + C2 * h, &(y + h * A21 * k1));
        let k3 = rhs(t + C3 * h, &(y + h * (A31 * k1 + A32 * k2)));
        let k4 = rhs(t + C4 * h, &(y + h * (A41 * k1 + A42 * k2 + A43 * k3)));
        let k5 = rhs(
            t + C5 * h,
            &(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4)),
        );
        let k6 = rhs(
            t + h,
            &(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)),
        );
        let y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = rhs(t + h, &y_new);
        let err_vec = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);

        let mut err_sq = 0.0;
        for i in 0..N {
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (err_vec[i] / sc).powi(2);
        }
        let err = (err_sq / N as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::NonConvergent(format!(
                "non-finite error estimate at t = {t:e}"
            )));
        }

        if err <= 1.0 {
            t += h;
            y = y_new;
            // FSAL: the last stage is the next step's first.
            k1 = k7;
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < h_min {
                return Err(Error::NonConvergent(format!(
                    "step size {h:e} below minimum at t = {t:e}"
                )));
            }
        }
    }
    Err(Error::NonConvergent(format!(
        "exceeded {} steps before t = {t_end:e}",
        opts.max_steps
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    #[test]
    fn exponential_decay() {
        let y = dormand_prince(
            |_, y: &SVector<f64, 1>| -3.0 * y,
            0.0,
            SVector::<f64, 1>::new(2.0),
            1.5,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((y[0] - 2.0 * (-4.5f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let y = dormand_prince(
            |_, y: &Vector2<f64>| Vector2::new(y[1], -y[0]),
            0.0,
            Vector2::new(1.0, 0.0),
            2.0 * std::f64::consts::PI,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8);
        assert!(y[1].abs() < 1e-8);
    }

    #[test]
    fn step_budget_exhaustion_is_reported() {
        let opts = OdeOptions {
            max_steps: 3,
            ..OdeOptions::default()
        };
        let r = dormand_prince(
            |_, y: &Vector2<f64>| Vector2::new(y[1], -y[0]),
            0.0,
            Vector2::new(1.0, 0.0),
            1000.0,
            &opts,
        );
        assert!(matches!(r, Err(Error::NonConvergent(_))));
    }
}
