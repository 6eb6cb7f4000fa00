//! Hyperspherical (polar) coordinates for unit coefficient vectors.
//!
//! A unit vector of length `m + 1` is described by `m` angles in `[0, π]`.
//! Since `θ` and `-θ` give the same density, vectors are reported in the
//! canonical orientation whose first nonzero coordinate is nonnegative.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SieveError};

/// Polar angles of a unit coefficient vector, each in `[0, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngleVector(pub Vec<f64>);

impl AngleVector {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if let Some(a) = angles.iter().find(|a| !(0.0..=PI).contains(*a)) {
            return Err(SieveError::Domain(format!("angle {a} outside [0, π]")));
        }
        Ok(Self(angles))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Flips `theta` so that its first nonzero coordinate is nonnegative.
pub fn canonicalize_sign(theta: &mut [f64]) {
    if let Some(&first) = theta.iter().find(|t| **t != 0.0) {
        if first < 0.0 {
            theta.iter_mut().for_each(|t| *t = -*t);
        }
    }
}

/// Standard hyperspherical map with unit radius, written into `out`
/// (`out.len() == angles.len() + 1`), without sign canonicalization.
#[inline]
pub fn polar_map(angles: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len(), angles.len() + 1);
    let mut radius = 1.0;
    for (i, a) in angles.iter().enumerate() {
        let (s, c) = a.sin_cos();
        out[i] = radius * c;
        radius *= s;
    }
    out[angles.len()] = radius;
}

/// Unit vector for the given angles, in canonical orientation.
pub fn angles_to_theta(angles: &AngleVector) -> Vec<f64> {
    let mut theta = vec![0.0; angles.len() + 1];
    polar_map(angles.as_slice(), &mut theta);
    canonicalize_sign(&mut theta);
    theta
}

/// Angles in `[0, π]` representing `theta` up to sign.
pub fn theta_to_angles(theta: &[f64]) -> Result<AngleVector> {
    if theta.is_empty() {
        return Err(SieveError::Domain("coefficient vector is empty".into()));
    }
    let m = theta.len() - 1;
    if m == 0 {
        return Ok(AngleVector(Vec::new()));
    }
    // The polar map with angles in [0, π] covers the half-sphere whose last
    // coordinate is nonnegative.
    let flip = theta[m] < 0.0;
    let v: Vec<f64> = theta.iter().map(|&t| if flip { -t } else { t }).collect();
    let mut angles = Vec::with_capacity(m);
    let mut tail_sq: f64 = v.iter().map(|t| t * t).sum();
    for &t in &v[..m - 1] {
        tail_sq -= t * t;
        let tail = tail_sq.max(0.0).sqrt();
        angles.push(tail.atan2(t));
    }
    angles.push(v[m].abs().atan2(v[m - 1]));
    Ok(AngleVector(angles))
}

/// Reflects `x` into `[lo, hi]` (mirror at the bounds, period `2 (hi - lo)`).
#[inline]
pub fn fold_into(x: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    if (lo..=hi).contains(&x) {
        return x;
    }
    let period = 2.0 * width;
    let mut y = (x - lo).rem_euclid(period);
    if y > width {
        y = period - y;
    }
    lo + y
}
