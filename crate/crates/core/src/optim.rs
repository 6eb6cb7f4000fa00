//! Derivative-free local minimization on a box.
//!
//! Points leaving the box are mirrored back across the violated bound, so
//! every objective evaluation happens at a feasible point.

use serde::{Deserialize, Serialize};

use crate::laguerre::sphere::fold_into;

/// Axis-aligned feasible region.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Self {
        Self {
            lower: vec![lower; dim],
            upper: vec![upper; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn fold(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = fold_into(*v, self.lower[i], self.upper[i]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub initial_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// A local minimizer usable by the estimator.
pub trait LocalOptimizer: Send + Sync {
    fn name(&self) -> &'static str;

    fn minimize(
        &self,
        objective: &mut dyn FnMut(&[f64]) -> f64,
        start: &[f64],
        domain: &BoxDomain,
    ) -> Minimum;
}

/// Nelder-Mead simplex search with standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMead {
    pub max_iters: usize,
    /// Converged when the spread of simplex values is below
    /// `f_tol * (1 + |f_best|)` and the simplex diameter below `sqrt(f_tol)`.
    pub f_tol: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            f_tol: 1e-8,
            initial_step: 0.5,
        }
    }
}

const MAX_RESTARTS: usize = 5;

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

impl LocalOptimizer for NelderMead {
    fn name(&self) -> &'static str {
        "nelder-mead"
    }

    fn minimize(
        &self,
        objective: &mut dyn FnMut(&[f64]) -> f64,
        start: &[f64],
        domain: &BoxDomain,
    ) -> Minimum {
        let dim = start.len();
        let mut evaluations = 0usize;
        let mut eval = |x: &[f64]| {
            evaluations += 1;
            sanitize(objective(x))
        };
        let mut x0 = start.to_vec();
        domain.fold(&mut x0);
        let f0 = eval(&x0);
        if dim == 0 {
            return Minimum {
                x: x0,
                value: f0,
                initial_value: f0,
                iterations: 0,
                evaluations: 1,
                converged: true,
            };
        }

        let x_tol = self.f_tol.sqrt();
        let mut iterations = 0;
        let mut converged = false;
        let mut best = Vertex { x: x0, f: f0 };
        // a collapsed simplex can stall on a face of the box; restart from
        // the best point until a restart stops improving
        for _ in 0..=MAX_RESTARTS {
            let x0 = best.x.clone();
            let f0 = best.f;
            let mut simplex = Vec::with_capacity(dim + 1);
            simplex.push(Vertex {
                x: x0.clone(),
                f: f0,
            });
            for i in 0..dim {
                let mut x = x0.clone();
                let width = domain.upper[i] - domain.lower[i];
                let step = self.initial_step.min(0.5 * width);
                // step inward when the start sits on the upper part of the box
                if x[i] + step > domain.upper[i] {
                    x[i] -= step;
                } else {
                    x[i] += step;
                }
                domain.fold(&mut x);
                let f = eval(&x);
                simplex.push(Vertex { x, f });
            }

            let mut centroid = vec![0.0; dim];
            let mut trial = vec![0.0; dim];

            while iterations < self.max_iters {
                simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
                let best = simplex[0].f;
                let worst = simplex[dim].f;
                let spread = if worst.is_finite() {
                    (worst - best).abs()
                } else {
                    f64::INFINITY
                };
                let diameter = simplex[1..]
                    .iter()
                    .map(|v| {
                        v.x.iter()
                            .zip(&simplex[0].x)
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max)
                    })
                    .fold(0.0, f64::max);
                if spread <= self.f_tol * (1.0 + best.abs()) && diameter <= x_tol {
                    converged = true;
                    break;
                }
                iterations += 1;

                centroid.iter_mut().for_each(|c| *c = 0.0);
                for v in &simplex[..dim] {
                    for (c, xi) in centroid.iter_mut().zip(&v.x) {
                        *c += xi / dim as f64;
                    }
                }

                let point = |coef: f64, from: &[f64], trial: &mut Vec<f64>| {
                    for i in 0..dim {
                        trial[i] = centroid[i] + coef * (from[i] - centroid[i]);
                    }
                    domain.fold(trial);
                };

                // reflection
                point(-1.0, &simplex[dim].x, &mut trial);
                let xr = trial.clone();
                let fr = eval(&xr);
                if fr < simplex[0].f {
                    point(2.0, &xr, &mut trial);
                    let fe = eval(&trial);
                    simplex[dim] = if fe < fr {
                        Vertex {
                            x: trial.clone(),
                            f: fe,
                        }
                    } else {
                        Vertex { x: xr, f: fr }
                    };
                    continue;
                }
                if fr < simplex[dim - 1].f {
                    simplex[dim] = Vertex { x: xr, f: fr };
                    continue;
                }
                // contraction
                let (fc, accept) = if fr < simplex[dim].f {
                    point(0.5, &xr, &mut trial);
                    let fc = eval(&trial);
                    (fc, fc <= fr)
                } else {
                    point(0.5, &simplex[dim].x.clone(), &mut trial);
                    let fc = eval(&trial);
                    (fc, fc < simplex[dim].f)
                };
                if accept {
                    simplex[dim] = Vertex {
                        x: trial.clone(),
                        f: fc,
                    };
                    continue;
                }
                // shrink towards the best vertex
                let best_x = simplex[0].x.clone();
                for v in simplex.iter_mut().skip(1) {
                    for (xi, bi) in v.x.iter_mut().zip(&best_x) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    domain.fold(&mut v.x);
                    v.f = eval(&v.x);
                }
            }
            simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
            let found = simplex.swap_remove(0);
            let improved = found.f < best.f - self.f_tol * (1.0 + best.f.abs());
            if found.f <= best.f {
                best = found;
            }
            if !converged || !improved || iterations >= self.max_iters {
                break;
            }
            converged = false;
        }
        Minimum {
            x: best.x,
            value: best.f,
            initial_value: f0,
            iterations,
            evaluations,
            converged,
        }
    }
}
