//! Projections onto the unit box, the shifted ℓ2-sphere, and the nonnegative orthant.
//!
//! The binary cube `{0,1}^n` is exactly the intersection of the box `[0,1]^n`
//! with the sphere `‖x − ½·1‖₂² = n/4`, which is what lets the ADMM loop
//! replace a discrete constraint by two continuous projections.

use crate::error::{Error, Result};

/// Below this distance from the center the projection direction is undefined.
pub const DEGENERATE_RADIUS: f64 = 1e-12;

/// The sphere `{x : ‖x − ½·1‖_p^p = n / 2^p}` through every vertex of the unit cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSpec {
    dimension: usize,
}

impl SphereSpec {
    /// Only `p = 2` has a projection implemented.
    pub fn new(dimension: usize, p: f64) -> Result<Self> {
        if p != 2.0 {
            return Err(Error::UnsupportedSphere(p));
        }
        Ok(Self { dimension })
    }

    pub fn l2(dimension: usize) -> Self {
        Self { dimension }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn center(&self) -> f64 {
        0.5
    }

    pub fn radius(&self) -> f64 {
        (self.dimension as f64).sqrt() / 2.0
    }

    pub fn radius_sq(&self) -> f64 {
        self.dimension as f64 / 4.0
    }

    /// `‖v − ½·1‖₂² − n/4`.
    pub fn residual(&self, v: &[f64]) -> f64 {
        v.iter().map(|x| (x - 0.5) * (x - 0.5)).sum::<f64>() - self.radius_sq()
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        project_sphere_l2_in_place(&mut out);
        out
    }
}

fn check_nan(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| x.is_nan()) {
        Some(index) => Err(Error::NanInput { index }),
        None => Ok(()),
    }
}

/// Euclidean projection onto `[0,1]^n`.
pub fn project_box(v: &[f64]) -> Result<Vec<f64>> {
    check_nan(v)?;
    Ok(v.iter().map(|x| x.clamp(0.0, 1.0)).collect())
}

pub(crate) fn project_box_in_place(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
}

/// Projection onto the sphere of radius `√n/2` centred at `½·1`.
///
/// When `v` is within [`DEGENERATE_RADIUS`] of the center the result is
/// `c + r·e₁`.
pub fn project_sphere_l2(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    project_sphere_l2_in_place(&mut out);
    out
}

pub(crate) fn project_sphere_l2_in_place(v: &mut [f64]) {
    let n = v.len();
    if n == 0 {
        return;
    }
    let radius = (n as f64).sqrt() / 2.0;
    let dist = v.iter().map(|x| (x - 0.5) * (x - 0.5)).sum::<f64>().sqrt();
    if dist < DEGENERATE_RADIUS || !dist.is_finite() {
        v.iter_mut().for_each(|x| *x = 0.5);
        v[0] = 0.5 + radius;
        return;
    }
    let scale = radius / dist;
    v.iter_mut().for_each(|x| *x = 0.5 + (*x - 0.5) * scale);
}

/// Elementwise `max(v, 0)`.
pub fn project_nonneg(v: &[f64]) -> Result<Vec<f64>> {
    check_nan(v)?;
    Ok(v.iter().map(|x| x.max(0.0)).collect())
}

/// Membership in box ∩ sphere, each relaxed by `tol` (sphere by `tol·n`).
/// With `tol = 0` this holds exactly for the binary vectors.
pub fn is_binary_by_intersection(v: &[f64], tol: f64) -> bool {
    let n = v.len() as f64;
    let in_box = v.iter().all(|&x| x >= -tol && x <= 1.0 + tol);
    in_box && SphereSpec::l2(v.len()).residual(v).abs() <= tol * n
}
