use crate::density::{Density, DEFAULT_TAIL};
use crate::error::{Result, SieveError};
use crate::quadrature::{breakpoints, Adaptive};

/// Upper end of the integration range for distances.
const X_CAP: f64 = 200.0;
const DISTANCE_TOL: f64 = 1e-10;

fn common_range(f: &dyn Density, g: &dyn Density) -> (f64, Vec<f64>) {
    let upper = f
        .tail_point(DEFAULT_TAIL)
        .max(g.tail_point(DEFAULT_TAIL))
        .min(X_CAP);
    let mut extra = f.kinks(upper);
    extra.extend(g.kinks(upper));
    (upper, breakpoints(0.0, upper, extra))
}

/// Squared Hellinger distance `∫ (√f - √g)^2 = 2 - 2 ∫ √(f g)`, in `[0, 2]`.
///
/// The affinity is integrated on `[0, X]`; the neglected tail is bounded by
/// `√(S_f(X) S_g(X))` (Cauchy-Schwarz) and added to the error budget.
pub fn hellinger_sq(f: &dyn Density, g: &dyn Density) -> Result<f64> {
    let (upper, pts) = common_range(f, g);
    let tail_bound = (f.sf(upper).max(0.0) * g.sf(upper).max(0.0)).sqrt();
    let quad = Adaptive::with_tolerance(DISTANCE_TOL);
    let affinity = quad
        .integrate_pieces(|x| (f.pdf(x).max(0.0) * g.pdf(x).max(0.0)).sqrt(), &pts)
        .map_err(|e| match e {
            SieveError::Accuracy {
                estimate,
                error,
                tolerance,
            } => SieveError::Accuracy {
                estimate: (2.0 - 2.0 * estimate).clamp(0.0, 2.0),
                error: 2.0 * error,
                tolerance: 2.0 * tolerance,
            },
            other => other,
        })?;
    if 2.0 * tail_bound > 1e-6 {
        return Err(SieveError::Accuracy {
            estimate: (2.0 - 2.0 * affinity.value).clamp(0.0, 2.0),
            error: 2.0 * tail_bound,
            tolerance: 1e-6,
        });
    }
    Ok((2.0 - 2.0 * affinity.value).clamp(0.0, 2.0))
}

/// `ρ_α(f, g) = (1/α) ∫ f ((f/g)^α - 1)` for `α >= -1`, `α != 0`.
///
/// `ρ_{-1/2}` equals the squared Hellinger distance.
pub fn rho_alpha(f: &dyn Density, g: &dyn Density, alpha: f64) -> Result<f64> {
    if alpha == 0.0 || !(alpha >= -1.0) || !alpha.is_finite() {
        return Err(SieveError::Domain(format!(
            "rho_alpha needs alpha >= -1 and alpha != 0, got {alpha}"
        )));
    }
    let (_, pts) = common_range(f, g);
    let integrand = |x: f64| -> f64 {
        let fx = f.pdf(x).max(0.0);
        let gx = g.pdf(x).max(0.0);
        if fx == 0.0 {
            return if alpha == -1.0 { gx } else { 0.0 };
        }
        if gx == 0.0 {
            return if alpha > 0.0 {
                f64::INFINITY
            } else {
                -fx / alpha
            };
        }
        (fx.powf(1.0 + alpha) * gx.powf(-alpha) - fx) / alpha
    };
    let quad = Adaptive {
        abs_tol: DISTANCE_TOL,
        rel_tol: 1e-10,
        max_intervals: 20_000,
    };
    let res = quad.integrate_pieces(integrand, &pts)?;
    Ok(res.value)
}
