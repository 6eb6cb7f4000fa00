use crate::error::{Result, SieveError};

/// Highest polynomial degree evaluated by the recurrence.
pub const MAX_DEGREE: usize = 60;

/// `L_k(x)` by the three-term recurrence
/// `(k+1) L_{k+1} = (2k+1-x) L_k - k L_{k-1}`.
pub fn laguerre_eval(k: usize, x: f64) -> Result<f64> {
    if k > MAX_DEGREE {
        return Err(SieveError::UnsupportedDegree {
            degree: k,
            max: MAX_DEGREE,
        });
    }
    let mut prev = 1.0;
    if k == 0 {
        return Ok(prev);
    }
    let mut cur = 1.0 - x;
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 - x) * cur - jf * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Fills `out[k] = L_k(x)` for `k < out.len()`.
#[inline]
pub fn laguerre_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = 1.0 - x;
    for j in 1..out.len() - 1 {
        let jf = j as f64;
        out[j + 1] = ((2.0 * jf + 1.0 - x) * out[j] - jf * out[j - 1]) / (jf + 1.0);
    }
}

/// `Σ θ_k L_k(x)` without allocating.
#[inline]
pub fn laguerre_series(theta: &[f64], x: f64) -> f64 {
    let mut sum = theta[0];
    if theta.len() == 1 {
        return sum;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 - x;
    sum += theta[1] * cur;
    for (j, &t) in theta.iter().enumerate().skip(2) {
        let jf = (j - 1) as f64;
        let next = ((2.0 * jf + 1.0 - x) * cur - jf * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
        sum += t * cur;
    }
    sum
}

/// Laguerre coefficients of `x g(x)` for `g = Σ g_n L_n`, from
/// `x L_n = -(n+1) L_{n+1} + (2n+1) L_n - n L_{n-1}`.
fn times_x(g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.len() + 1];
    for (n, &c) in g.iter().enumerate() {
        let nf = n as f64;
        out[n + 1] -= (nf + 1.0) * c;
        out[n] += (2.0 * nf + 1.0) * c;
        if n > 0 {
            out[n - 1] -= nf * c;
        }
    }
    out
}

/// Laguerre coefficients of `(Σ θ_k L_k)(Σ f_n L_n)`, of length
/// `θ.len() + f.len() - 1`.
pub fn laguerre_product(theta: &[f64], f: &[f64]) -> Vec<f64> {
    let len = theta.len() + f.len() - 1;
    let mut out = vec![0.0; len];
    let mut prev: Vec<f64> = Vec::new();
    let mut cur = f.to_vec();
    for (k, &t) in theta.iter().enumerate() {
        for (o, c) in out.iter_mut().zip(&cur) {
            *o += t * c;
        }
        if k + 1 == theta.len() {
            break;
        }
        // L_{k+1} f = ((2k+1) L_k f - x L_k f - k L_{k-1} f) / (k+1)
        let kf = k as f64;
        let mut next = times_x(&cur);
        next.iter_mut().for_each(|v| *v = -*v);
        for (n, c) in cur.iter().enumerate() {
            next[n] += (2.0 * kf + 1.0) * c;
        }
        for (n, c) in prev.iter().enumerate() {
            next[n] -= kf * c;
        }
        next.iter_mut().for_each(|v| *v /= kf + 1.0);
        prev = cur;
        cur = next;
    }
    out
}

/// Laguerre coefficients `α_a` of `(Σ θ_k L_k)^2`; `α_0 = ‖θ‖²`.
pub fn laguerre_square(theta: &[f64]) -> Vec<f64> {
    laguerre_product(theta, theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `L_k(x) = Σ_i C(k, i) (-x)^i / i!`, exact for integer `x` since
    /// `k! L_k(x)` is then an integer.
    fn binomial_sum(k: u32, x: i128) -> f64 {
        let fact = |n: u32| (1..=n as i128).product::<i128>();
        let mut s: i128 = 0;
        for i in 0..=k {
            let binom = fact(k) / (fact(i) * fact(k - i));
            s += binom * (-x).pow(i) * (fact(k) / fact(i));
        }
        s as f64 / fact(k) as f64
    }

    #[test]
    fn small_cases() {
        assert_eq!(laguerre_eval(0, 17.3).unwrap(), 1.0);
        assert_eq!(laguerre_eval(1, 1.0).unwrap(), 0.0);
        assert!((laguerre_eval(2, 2.0).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn degree_ceiling() {
        assert!(laguerre_eval(60, 1.0).is_ok());
        assert_eq!(
            laguerre_eval(61, 1.0),
            Err(SieveError::UnsupportedDegree {
                degree: 61,
                max: 60
            })
        );
    }

    #[test]
    fn recurrence_matches_binomial_sum() {
        for k in 0..=10u32 {
            for x in -50..=50i128 {
                let r = laguerre_eval(k as usize, x as f64).unwrap();
                let b = binomial_sum(k, x);
                assert!(
                    (r - b).abs() <= 1e-10 * b.abs().max(1.0),
                    "k={k} x={x}: {r} vs {b}"
                );
            }
        }
    }

    #[test]
    fn series_and_basis_agree() {
        let theta = [0.3, -0.5, 0.2, 0.7, -0.1];
        for x in [0.0, 0.5, 3.0, 11.0] {
            let direct = laguerre_series(&theta, x);
            let mut basis = [0.0; 5];
            laguerre_all(x, &mut basis);
            let via_all: f64 = theta.iter().zip(basis).map(|(t, l)| t * l).sum();
            assert!((direct - via_all).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn square_expansions() {
        // (1 - x)^2 = 1 - 2 L_1 + 2 L_2
        assert_eq!(laguerre_square(&[0.0, 1.0]), vec![1.0, -2.0, 2.0]);
        let theta = [0.3, -0.5, 0.2, 0.7, -0.1];
        let alpha = laguerre_square(&theta);
        assert_eq!(alpha.len(), 9);
        assert!((alpha[0] - theta.iter().map(|t| t * t).sum::<f64>()).abs() < 1e-15);
        for x in [0.0, 0.5, 3.0, 11.0, 30.0] {
            let p = laguerre_series(&theta, x);
            let mut basis = [0.0; 9];
            laguerre_all(x, &mut basis);
            let q: f64 = alpha.iter().zip(basis).map(|(a, l)| a * l).sum();
            assert!((q - p * p).abs() < 1e-12 * (p * p).max(1.0) * (1.0 + x).powi(4));
        }
    }
}
