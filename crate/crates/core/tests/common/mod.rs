//! Independent numerical oracles shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Adaptive Simpson quadrature with absolute tolerance `tol`, started on 16
/// equal panels so narrow peaks are not missed by the first samples.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / 16.0;
    (0..16)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i == 15 { b } else { lo + h };
            simpson_panel(f, lo, hi, tol / 16.0)
        })
        .sum()
}

fn simpson_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson split at the given interior points.
pub fn simpson_pieces<F: Fn(f64) -> f64>(f: &F, points: &[f64], tol: f64) -> f64 {
    let pieces = (points.len() - 1).max(1) as f64;
    points
        .windows(2)
        .map(|w| simpson(f, w[0], w[1], tol / pieces))
        .sum()
}

/// Midpoint Riemann sum with `n` cells.
pub fn riemann<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

/// `L_k(x)` from the explicit binomial sum; only accurate for small `k`.
pub fn laguerre_binomial(k: usize, x: f64) -> f64 {
    let mut s = 0.0;
    let mut binom = 1.0;
    let mut fact = 1.0;
    for i in 0..=k {
        if i > 0 {
            binom *= (k + 1 - i) as f64 / i as f64;
            fact *= i as f64;
        }
        s += binom * (-x).powi(i as i32) / fact;
    }
    s
}

/// `e^{-x} (Σ θ_k L_k(x))^2` on `x >= 0`, independent of the library.
pub fn laguerre_pdf(theta: &[f64], x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let p: f64 = theta
        .iter()
        .enumerate()
        .map(|(k, t)| t * laguerre_binomial(k, x))
        .sum();
    (-x).exp() * p * p
}

/// Uniform point on the unit sphere in `R^{m+1}`.
pub fn random_unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..=m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.1 && norm <= 1.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Log of `∫₀^{min(W̃,S2)} e^{rt} φ_I(S1-t) ∫₀^{S2-t} φ_G(y) φ_I(S2-t-y) dy dt`
/// by nested adaptive Simpson, tolerance relative to a coarse estimate.
pub fn loglik_oracle(
    s1: f64,
    s2: f64,
    w_tilde: f64,
    rate: f64,
    phi_i: &dyn Fn(f64) -> f64,
    phi_g: &dyn Fn(f64) -> f64,
) -> f64 {
    let upper = w_tilde.min(s2);
    let inner = |t: f64, tol: f64| {
        let span = s2 - t;
        simpson(&|y: f64| phi_g(y) * phi_i(span - y), 0.0, span, tol)
    };
    let coarse = riemann(
        |t| {
            (rate * t).exp()
                * phi_i(s1 - t)
                * riemann(|y| phi_g(y) * phi_i(s2 - t - y), 0.0, s2 - t, 200)
        },
        0.0,
        upper,
        200,
    );
    let tol = 1e-10 * coarse.abs().max(1e-300);
    let outer = |t: f64| (rate * t).exp() * phi_i(s1 - t) * inner(t, tol / (s2 + 1.0));
    simpson(&outer, 0.0, upper, tol).ln()
}

/// `n`-point Gauss-Laguerre nodes and weights for `∫₀^∞ e^{-x} f(x) dx`,
/// by Newton iteration on `L_n` from asymptotic starting guesses.
pub fn gauss_laguerre(n: usize) -> Vec<(f64, f64)> {
    let nf = n as f64;
    let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut z = 0.0f64;
    for i in 0..n {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2].0)
            }
        };
        let mut weight = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0f64, 0.0f64);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
            }
            let pp = nf * (p1 - p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            weight = -1.0 / (pp * nf * p2);
            if (z - z1).abs() <= 1e-15 * z {
                break;
            }
        }
        nodes.push((z, weight));
    }
    nodes
}
