//! Laguerre polynomials, the induced density family
//! `φ_θ(x) = e^{-x} (Σ θ_k L_k(x))^2` and distances between densities.

pub mod approx;
pub mod density;
pub mod distance;
pub mod polynomial;
pub mod sphere;

pub use approx::{approximate, best_approx, projection_coefficients, refine, Approximation};
pub use density::{LaguerreDensity, LaguerreSpec, CLOSED_FORM_MAX_DEGREE};
pub use distance::{hellinger_sq, rho_alpha};
pub use polynomial::{laguerre_eval, MAX_DEGREE};
pub use sphere::{angles_to_theta, theta_to_angles, AngleVector};
