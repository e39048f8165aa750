//! Discrete BV functionals.
//!
//! With forward differences `(gx, gy)` and cell area `h²`:
//!
//! ```text
//! TV(u)    = h² Σ |∇u|                      (isotropic |·|₂ or anisotropic |·|₁)
//! trace(u) = h Σ_{boundary faces} |u(cell)|
//! ‖u‖      = I₀(u) = TV(u) + trace(u)
//! Ĩ₀(u)    = h² Σ √(1 + |∇u|₂²) + trace(u)
//! ```
//!
//! There is no singular part on a grid, so the one-sided ray derivatives are
//! explicit: `I₀'(su)u = I₀(u)` for every `s > 0`, and
//! `Ĩ₀'(su)u = h² Σ |∇u|² / √(1/s² + |∇u|²) + trace(u)`.

use crate::domain::{gradient_at, DiscreteDomain, ScalarField};
use crate::math::{hypot, sqrt};
use crate::Error;

/// Pointwise norm used for `|∇u|` in the total variation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TvFlavor {
    /// `√(gx² + gy²)`, rotation-invariant in the continuum limit.
    #[default]
    Isotropic,
    /// `|gx| + |gy|`, submodular on the grid.
    Anisotropic,
}

impl TvFlavor {
    #[inline]
    pub(crate) fn magnitude(self, gx: f64, gy: f64) -> f64 {
        match self {
            TvFlavor::Isotropic => hypot(gx, gy),
            TvFlavor::Anisotropic => gx.abs() + gy.abs(),
        }
    }
}

/// Sums `term(gx, gy)` over all cells.
#[inline]
pub(crate) fn sum_over_gradients(u: &ScalarField, mut term: impl FnMut(f64, f64) -> f64) -> f64 {
    let d = u.domain();
    let v = u.values();
    let mut acc = 0.0;
    for j in 0..d.ny() {
        for i in 0..d.nx() {
            let (gx, gy) = gradient_at(d, v, i, j);
            acc += term(gx, gy);
        }
    }
    acc
}

/// Total variation `h² Σ |∇u|`.
pub fn tv(u: &ScalarField, flavor: TvFlavor) -> f64 {
    u.domain().cell_area() * sum_over_gradients(u, |gx, gy| flavor.magnitude(gx, gy))
}

/// `h Σ_{boundary faces} |u|`; corner cells count once per boundary face.
pub fn boundary_trace_term(u: &ScalarField) -> f64 {
    u.domain().h() * weighted_boundary_sum(u.domain(), u.values(), f64::abs)
}

/// `Σ_{boundary faces} φ(u(cell))`.
pub(crate) fn weighted_boundary_sum(d: &DiscreteDomain, u: &[f64], mut phi: impl FnMut(f64) -> f64) -> f64 {
    let (nx, ny) = (d.nx(), d.ny());
    let mut acc = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let m = d.boundary_multiplicity(i, j);
            if m > 0 {
                acc += m as f64 * phi(u[j * nx + i]);
            }
        }
    }
    acc
}

/// BV norm `TV(u) + trace(u)`.
pub fn bv_norm(u: &ScalarField, flavor: TvFlavor) -> f64 {
    tv(u, flavor) + boundary_trace_term(u)
}

/// Principal part of the 1-Laplacian energy; equal to [`bv_norm`].
pub fn i0(u: &ScalarField, flavor: TvFlavor) -> f64 {
    bv_norm(u, flavor)
}

/// Principal part of the mean-curvature energy (always isotropic).
pub fn i0_tilde(u: &ScalarField) -> f64 {
    let area = u.domain().cell_area() * sum_over_gradients(u, |gx, gy| sqrt(1.0 + gx * gx + gy * gy));
    area + boundary_trace_term(u)
}

fn check_ray_amplitude(s: f64) -> Result<(), Error> {
    if s.is_finite() && s > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "s", value: s })
    }
}

/// `I₀'(su)u`, which equals `I₀(u)` for every `s > 0`.
pub fn i0_dirderiv_ray(u: &ScalarField, s: f64, flavor: TvFlavor) -> Result<f64, Error> {
    check_ray_amplitude(s)?;
    Ok(i0(u, flavor))
}

/// `Ĩ₀'(su)u = h² Σ |∇u|² / √(1/s² + |∇u|²) + trace(u)`.
pub fn i0_tilde_dirderiv_ray(u: &ScalarField, s: f64) -> Result<f64, Error> {
    check_ray_amplitude(s)?;
    let inv_s2 = 1.0 / (s * s);
    let bulk = sum_over_gradients(u, |gx, gy| {
        let q = gx * gx + gy * gy;
        if q == 0.0 {
            0.0
        } else {
            q / sqrt(inv_s2 + q)
        }
    });
    Ok(u.domain().cell_area() * bulk + boundary_trace_term(u))
}

/// Cellwise `(max(u, v), min(u, v))`.
pub fn lattice_pair(u: &ScalarField, v: &ScalarField) -> Result<(ScalarField, ScalarField), Error> {
    u.check_same_domain(v)?;
    let mut hi = u.clone();
    let mut lo = u.clone();
    for ((a, b), (x, y)) in hi.values_mut().iter_mut().zip(lo.values_mut().iter_mut()).zip(u.values().iter().zip(v.values())) {
        *a = x.max(*y);
        *b = x.min(*y);
    }
    Ok((hi, lo))
}
