use serde::{Deserialize, Serialize};

use super::density::LaguerreDensity;
use super::distance::hellinger_sq;
use super::polynomial::{laguerre_all, MAX_DEGREE};
use super::sphere::{polar_map, theta_to_angles};
use crate::density::Density;
use crate::error::{Result, SieveError};
use crate::optim::{BoxDomain, LocalOptimizer, NelderMead};
use crate::quadrature::{breakpoints, GaussLegendre};

const PROJECTION_NODES: usize = 256;
/// Truncation error of the coefficients scales like the square root of the
/// neglected mass, hence the strict tail.
const PROJECTION_TAIL: f64 = 1e-20;
const PROJECTION_PANELS: usize = 8;
const MIN_NORM: f64 = 1e-10;

/// Coefficients `c_k = ∫ √φ(x) L_k(x) e^{-x/2} dx`, `k = 0..=m`.
pub fn projection_coefficients(phi: &dyn Density, m: usize) -> Result<Vec<f64>> {
    if m > MAX_DEGREE {
        return Err(SieveError::UnsupportedDegree {
            degree: m,
            max: MAX_DEGREE,
        });
    }
    let upper = phi.tail_point(PROJECTION_TAIL);
    let h = upper / PROJECTION_PANELS as f64;
    let pts = breakpoints(
        0.0,
        upper,
        phi.kinks(upper)
            .into_iter()
            .chain((1..PROJECTION_PANELS).map(|i| i as f64 * h)),
    );
    let rule = GaussLegendre::new(PROJECTION_NODES);
    let mut c = vec![0.0; m + 1];
    let mut basis = vec![0.0; m + 1];
    for w in pts.windows(2) {
        for (x, wt) in rule.mapped(w[0], w[1]) {
            let f = phi.pdf(x).max(0.0).sqrt() * (-0.5 * x).exp();
            if f == 0.0 {
                continue;
            }
            laguerre_all(x, &mut basis);
            for (ck, lk) in c.iter_mut().zip(&basis) {
                *ck += wt * f * lk;
            }
        }
    }
    Ok(c)
}

/// Closest degree-`m` Laguerre density to `phi` by orthogonal projection of
/// `√(e^x φ)`: `θ = c / ‖c‖`.
pub fn best_approx(phi: &dyn Density, m: usize) -> Result<LaguerreDensity> {
    let c = projection_coefficients(phi, m)?;
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm >= MIN_NORM) {
        return Err(SieveError::DegenerateProjection(norm));
    }
    LaguerreDensity::from_unnormalized(&c)
}

/// Projection and direct Hellinger refinement side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Approximation {
    pub projection: LaguerreDensity,
    pub projection_hellinger_sq: f64,
    pub refined: LaguerreDensity,
    pub refined_hellinger_sq: f64,
}

/// Minimizes `hellinger_sq(phi, φ_θ)` over the angles of `θ`, starting from
/// `start`. Returns `start` unchanged when no better point is found.
pub fn refine(
    phi: &dyn Density,
    start: &LaguerreDensity,
    optimizer: &dyn LocalOptimizer,
) -> Result<(LaguerreDensity, f64)> {
    let start_value = hellinger_sq(phi, start)?;
    let m = start.degree();
    if m == 0 {
        return Ok((start.clone(), start_value));
    }
    let angles = theta_to_angles(start.theta())?;
    let mut theta = vec![0.0; m + 1];
    let mut objective = |a: &[f64]| {
        polar_map(a, &mut theta);
        let cand = LaguerreDensity::build(theta.clone());
        hellinger_sq(phi, &cand).unwrap_or(f64::INFINITY)
    };
    let domain = BoxDomain::uniform(m, 0.0, std::f64::consts::PI);
    let best = optimizer.minimize(&mut objective, angles.as_slice(), &domain);
    if best.value < start_value {
        let mut theta = vec![0.0; m + 1];
        polar_map(&best.x, &mut theta);
        let refined = LaguerreDensity::build(theta);
        let value = hellinger_sq(phi, &refined)?;
        if value < start_value {
            return Ok((refined.canonical(), value));
        }
    }
    Ok((start.clone(), start_value))
}

/// Projection followed by refinement with a fine Nelder-Mead search.
pub fn approximate(phi: &dyn Density, m: usize) -> Result<Approximation> {
    let projection = best_approx(phi, m)?;
    let projection_hellinger_sq = hellinger_sq(phi, &projection)?;
    let optimizer = NelderMead {
        max_iters: 4000,
        f_tol: 1e-12,
        initial_step: 0.05,
    };
    let (refined, refined_hellinger_sq) = refine(phi, &projection, &optimizer)?;
    Ok(Approximation {
        projection,
        projection_hellinger_sq,
        refined,
        refined_hellinger_sq,
    })
}
