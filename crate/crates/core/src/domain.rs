//! Uniform rectangular grids and the fields that live on them.
//!
//! Cells are indexed `(i, j)` with `0 <= i < nx` along x and `0 <= j < ny`
//! along y, stored row-major in `j`: flat index `j * nx + i`.
//!
//! Gradients are forward differences padded with zero on the far edges, so
//! `gx` vanishes on the last column and `gy` on the last row. The divergence
//! is the negative adjoint of that gradient, which makes the discrete
//! integration-by-parts identity `Σ z·∇u = -Σ u div z` exact.

use alloc::vec;
use alloc::vec::Vec;

use crate::Error;

/// A rectangle of `nx × ny` square cells of side `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiscreteDomain {
    nx: usize,
    ny: usize,
    h: f64,
}

/// Outward side of a boundary cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Face {
    /// `i = 0` side.
    West,
    /// `i = nx - 1` side.
    East,
    /// `j = 0` side.
    South,
    /// `j = ny - 1` side.
    North,
}

/// One face of the domain boundary together with the cell it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryFace {
    /// Flat index of the adjacent cell.
    pub cell: usize,
    /// Outward side.
    pub face: Face,
}

impl DiscreteDomain {
    /// A grid with `nx × ny` cells of side `h`.
    pub fn new(nx: usize, ny: usize, h: f64) -> Result<Self, Error> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidDomain("cell counts must be positive"));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidDomain("cell side must be positive and finite"));
        }
        Ok(DiscreteDomain { nx, ny, h })
    }

    /// The unit square split into `n × n` cells.
    pub fn unit_square(n: usize) -> Result<Self, Error> {
        if n == 0 {
            return Err(Error::InvalidDomain("cell counts must be positive"));
        }
        Self::new(n, n, 1.0 / n as f64)
    }

    /// Cells along x.
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Cells along y.
    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Cell side length.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Total number of cells.
    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Area of one cell, `h²`.
    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    /// `|Ω| = nx·ny·h²`.
    pub fn area(&self) -> f64 {
        self.cell_area() * self.cell_count() as f64
    }

    /// Length of `∂Ω`, `2(nx + ny)·h`.
    pub fn perimeter(&self) -> f64 {
        self.h * self.boundary_face_count() as f64
    }

    /// Number of boundary faces, `2(nx + ny)`.
    pub fn boundary_face_count(&self) -> usize {
        2 * (self.nx + self.ny)
    }

    /// Flat index of cell `(i, j)`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    /// `(i, j)` of a flat index.
    #[inline]
    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    /// How many boundary faces cell `(i, j)` touches (0 to 4).
    #[inline]
    pub fn boundary_multiplicity(&self, i: usize, j: usize) -> usize {
        usize::from(i == 0)
            + usize::from(i + 1 == self.nx)
            + usize::from(j == 0)
            + usize::from(j + 1 == self.ny)
    }

    /// True when the cell touches no boundary face.
    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        self.boundary_multiplicity(i, j) == 0
    }

    /// Every boundary face once: south row, north row, west column, east
    /// column. Corner cells appear once per face they own.
    pub fn boundary_faces(&self) -> Vec<BoundaryFace> {
        let mut faces = Vec::with_capacity(self.boundary_face_count());
        for i in 0..self.nx {
            faces.push(BoundaryFace { cell: self.index(i, 0), face: Face::South });
        }
        for i in 0..self.nx {
            faces.push(BoundaryFace { cell: self.index(i, self.ny - 1), face: Face::North });
        }
        for j in 0..self.ny {
            faces.push(BoundaryFace { cell: self.index(0, j), face: Face::West });
        }
        for j in 0..self.ny {
            faces.push(BoundaryFace { cell: self.index(self.nx - 1, j), face: Face::East });
        }
        faces
    }
}

/// One finite value per cell.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ScalarField {
    domain: DiscreteDomain,
    values: Vec<f64>,
}

impl ScalarField {
    /// The zero field.
    pub fn zeros(domain: DiscreteDomain) -> Self {
        Self::constant(domain, 0.0)
    }

    /// `u ≡ c`. Panics if `c` is not finite.
    pub fn constant(domain: DiscreteDomain, c: f64) -> Self {
        assert!(c.is_finite(), "constant field value must be finite");
        ScalarField { domain, values: vec![c; domain.cell_count()] }
    }

    /// Wraps row-major values (`j * nx + i`).
    pub fn from_values(domain: DiscreteDomain, values: Vec<f64>) -> Result<Self, Error> {
        if values.len() != domain.cell_count() {
            return Err(Error::FieldLength { expected: domain.cell_count(), found: values.len() });
        }
        if let Some(cell) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { cell });
        }
        Ok(ScalarField { domain, values })
    }

    /// Samples `f(i, j)` on every cell.
    pub fn from_fn(domain: DiscreteDomain, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, Error> {
        let mut values = Vec::with_capacity(domain.cell_count());
        for j in 0..domain.ny() {
            for i in 0..domain.nx() {
                values.push(f(i, j));
            }
        }
        Self::from_values(domain, values)
    }

    /// Grid this field lives on.
    pub fn domain(&self) -> &DiscreteDomain {
        &self.domain
    }

    /// Row-major cell values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Consumes the field.
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at cell `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.domain.index(i, j)]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `t·u`.
    pub fn scaled(&self, t: f64) -> Self {
        ScalarField { domain: self.domain, values: self.values.iter().map(|v| t * v).collect() }
    }

    /// `a·u + b·v`.
    pub fn linear_combination(a: f64, u: &ScalarField, b: f64, v: &ScalarField) -> Result<Self, Error> {
        u.check_same_domain(v)?;
        let values = u.values.iter().zip(&v.values).map(|(x, y)| a * x + b * y).collect();
        Ok(ScalarField { domain: u.domain, values })
    }

    /// Cellwise sum.
    pub fn add(&self, other: &ScalarField) -> Result<Self, Error> {
        Self::linear_combination(1.0, self, 1.0, other)
    }

    /// `max |u|`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True when every value is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// Integral of the product, `h² Σ u v`.
    pub fn integral_product(&self, other: &ScalarField) -> Result<f64, Error> {
        self.check_same_domain(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(self.domain.cell_area() * s)
    }

    /// Forward-difference gradient.
    pub fn gradient(&self) -> GradientField {
        let d = &self.domain;
        let mut x = vec![0.0; d.cell_count()];
        let mut y = vec![0.0; d.cell_count()];
        gradient_into(d, &self.values, &mut x, &mut y);
        VectorField { domain: *d, x, y }
    }

    pub(crate) fn check_same_domain(&self, other: &ScalarField) -> Result<(), Error> {
        if self.domain == other.domain {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }
}

/// A 2-vector per cell, laid out like the forward-difference gradient: the
/// x component of cell `(i, j)` sits on its east face and the y component on
/// its north face.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VectorField {
    domain: DiscreteDomain,
    x: Vec<f64>,
    y: Vec<f64>,
}

/// Forward differences of a [`ScalarField`].
pub type GradientField = VectorField;

impl VectorField {
    /// The zero vector field.
    pub fn zeros(domain: DiscreteDomain) -> Self {
        let n = domain.cell_count();
        VectorField { domain, x: vec![0.0; n], y: vec![0.0; n] }
    }

    /// Wraps component arrays.
    pub fn from_components(domain: DiscreteDomain, x: Vec<f64>, y: Vec<f64>) -> Result<Self, Error> {
        let n = domain.cell_count();
        for len in [x.len(), y.len()] {
            if len != n {
                return Err(Error::FieldLength { expected: n, found: len });
            }
        }
        Ok(VectorField { domain, x, y })
    }

    /// Grid this field lives on.
    pub fn domain(&self) -> &DiscreteDomain {
        &self.domain
    }

    /// x components.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// y components.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Euclidean length of the vector in one cell.
    pub fn magnitude(&self, cell: usize) -> f64 {
        crate::math::hypot(self.x[cell], self.y[cell])
    }

    /// Largest cellwise Euclidean length.
    pub fn max_magnitude(&self) -> f64 {
        (0..self.x.len()).fold(0.0, |m, c| m.max(self.magnitude(c)))
    }

    /// True when every component is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| *v == 0.0)
    }

    /// Discrete divergence, the negative adjoint of [`ScalarField::gradient`].
    pub fn divergence(&self) -> ScalarField {
        let mut out = vec![0.0; self.domain.cell_count()];
        gradient_adjoint_add(&self.domain, &self.x, &self.y, &mut out);
        for v in &mut out {
            *v = -*v;
        }
        ScalarField { domain: self.domain, values: out }
    }
}

/// Writes forward differences of `u` into `gx`, `gy`.
pub(crate) fn gradient_into(d: &DiscreteDomain, u: &[f64], gx: &mut [f64], gy: &mut [f64]) {
    let (nx, ny) = (d.nx(), d.ny());
    let inv_h = 1.0 / d.h();
    for j in 0..ny {
        let row = j * nx;
        for i in 0..nx {
            let c = row + i;
            gx[c] = if i + 1 < nx { (u[c + 1] - u[c]) * inv_h } else { 0.0 };
            gy[c] = if j + 1 < ny { (u[c + nx] - u[c]) * inv_h } else { 0.0 };
        }
    }
}

/// Forward differences at a single cell.
#[inline]
pub(crate) fn gradient_at(d: &DiscreteDomain, u: &[f64], i: usize, j: usize) -> (f64, f64) {
    let nx = d.nx();
    let c = j * nx + i;
    let inv_h = 1.0 / d.h();
    let gx = if i + 1 < nx { (u[c + 1] - u[c]) * inv_h } else { 0.0 };
    let gy = if j + 1 < d.ny() { (u[c + nx] - u[c]) * inv_h } else { 0.0 };
    (gx, gy)
}

/// `out += ∇ᵀ q`, the adjoint of [`gradient_into`].
pub(crate) fn gradient_adjoint_add(d: &DiscreteDomain, qx: &[f64], qy: &[f64], out: &mut [f64]) {
    let (nx, ny) = (d.nx(), d.ny());
    let inv_h = 1.0 / d.h();
    for j in 0..ny {
        let row = j * nx;
        for i in 0..nx {
            let c = row + i;
            if i + 1 < nx {
                let a = qx[c] * inv_h;
                out[c + 1] += a;
                out[c] -= a;
            }
            if j + 1 < ny {
                let b = qy[c] * inv_h;
                out[c + nx] += b;
                out[c] -= b;
            }
        }
    }
}
