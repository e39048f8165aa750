//! Problem description, fibering maps and the Nehari projection.
//!
//! For a direction `w ≠ 0` the fibering map is `γ(t) = Φ(tw)` and its
//! one-sided derivative is `g(t) = P'(tw)w − λ I'(tw)w`, where `P` is the
//! principal part (`I₀`, `Ĩ₀`, or the p-Laplacian surrogate). The Nehari set
//! is `{u ≠ 0 : P'(u)u = λ I'(u)u}`; `t_w w` lands on it where `g` changes
//! sign, and [`FiberingMap::nehari_project`] finds that point by bracketed
//! bisection.

use alloc::vec::Vec;

use crate::bv::{boundary_trace_term, i0, i0_tilde, i0_tilde_dirderiv_ray, sum_over_gradients, TvFlavor};
use crate::domain::{DiscreteDomain, ScalarField};
use crate::math::{powf, sqrt};
use crate::nonlinearity::{ray_reaction, reaction_energy, Nonlinearity, NonlinearityKind};
use crate::Error;

/// Principal part of the energy.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Functional {
    /// `Φ = I₀ − I`: total variation plus boundary trace.
    OneLaplacian,
    /// `Φ = Ĩ₀ − λI`: area integrand plus boundary trace.
    MeanCurvature,
    /// `Φ = (1/s) h² Σ |∇u|^s + trace − I`, the smooth surrogate used by the
    /// exponent-continuation diagnostic. `exponent` lies in `(1, 2]`.
    PLaplacianSurrogate {
        /// Gradient exponent `s`.
        exponent: f64,
    },
}

/// Everything that defines `Φ` on a grid.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    functional: Functional,
    lambda: f64,
    nl: Nonlinearity,
    flavor: TvFlavor,
    domain: DiscreteDomain,
}

impl ProblemSpec {
    /// Validating constructor. The 1-Laplacian and its surrogate carry no
    /// parameter, so they require `lambda == 1`.
    pub fn new(
        functional: Functional,
        lambda: f64,
        nl: Nonlinearity,
        flavor: TvFlavor,
        domain: DiscreteDomain,
    ) -> Result<Self, Error> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter { name: "lambda", value: lambda });
        }
        match functional {
            Functional::OneLaplacian | Functional::PLaplacianSurrogate { .. } if lambda != 1.0 => {
                return Err(Error::InvalidParameter { name: "lambda", value: lambda });
            }
            Functional::PLaplacianSurrogate { exponent } if !(exponent > 1.0 && exponent <= 2.0) => {
                return Err(Error::InvalidParameter { name: "exponent", value: exponent });
            }
            _ => {}
        }
        Ok(ProblemSpec { functional, lambda, nl, flavor, domain })
    }

    /// `−Δ₁u = f(u)` with the relaxed Dirichlet condition.
    pub fn one_laplacian(domain: DiscreteDomain, nl: Nonlinearity, flavor: TvFlavor) -> Self {
        ProblemSpec { functional: Functional::OneLaplacian, lambda: 1.0, nl, flavor, domain }
    }

    /// `−div(∇u/√(1+|∇u|²)) = λ f(u)` with the relaxed Dirichlet condition.
    pub fn mean_curvature(domain: DiscreteDomain, nl: Nonlinearity, lambda: f64) -> Result<Self, Error> {
        Self::new(Functional::MeanCurvature, lambda, nl, TvFlavor::Isotropic, domain)
    }

    /// Surrogate with gradient exponent `exponent ∈ (1, 2]`.
    pub fn p_laplacian_surrogate(
        domain: DiscreteDomain,
        nl: Nonlinearity,
        flavor: TvFlavor,
        exponent: f64,
    ) -> Result<Self, Error> {
        Self::new(Functional::PLaplacianSurrogate { exponent }, 1.0, nl, flavor, domain)
    }

    /// Same problem with another `λ`.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self, Error> {
        Self::new(self.functional, lambda, self.nl.clone(), self.flavor, self.domain)
    }

    /// Principal part.
    pub fn functional(&self) -> Functional {
        self.functional
    }

    /// Weight of the reaction term.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Reaction term.
    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    /// Pointwise gradient norm for TV and the BV norm.
    pub fn flavor(&self) -> TvFlavor {
        self.flavor
    }

    /// Grid.
    pub fn domain(&self) -> &DiscreteDomain {
        &self.domain
    }

    /// Principal part `P(u)`.
    pub fn principal(&self, u: &ScalarField) -> f64 {
        match self.functional {
            Functional::OneLaplacian => i0(u, self.flavor),
            Functional::MeanCurvature => i0_tilde(u),
            Functional::PLaplacianSurrogate { exponent } => {
                let flavor = self.flavor;
                let bulk = sum_over_gradients(u, |gx, gy| powf(flavor.magnitude(gx, gy), exponent));
                u.domain().cell_area() * bulk / exponent + boundary_trace_term(u)
            }
        }
    }

    /// `P'(su)u` for `s > 0`.
    pub fn principal_ray_derivative(&self, u: &ScalarField, s: f64) -> Result<f64, Error> {
        match self.functional {
            Functional::OneLaplacian => crate::bv::i0_dirderiv_ray(u, s, self.flavor),
            Functional::MeanCurvature => i0_tilde_dirderiv_ray(u, s),
            Functional::PLaplacianSurrogate { exponent } => {
                if !(s.is_finite() && s > 0.0) {
                    return Err(Error::InvalidParameter { name: "s", value: s });
                }
                let flavor = self.flavor;
                let bulk = sum_over_gradients(u, |gx, gy| powf(flavor.magnitude(gx, gy), exponent));
                Ok(powf(s, exponent - 1.0) * u.domain().cell_area() * bulk + boundary_trace_term(u))
            }
        }
    }

    /// `Φ(0)`: `|Ω|` for mean curvature, 0 otherwise.
    pub fn phi_at_zero(&self) -> f64 {
        match self.functional {
            Functional::MeanCurvature => self.domain.area(),
            _ => 0.0,
        }
    }

    pub(crate) fn check_field(&self, u: &ScalarField) -> Result<(), Error> {
        if *u.domain() == self.domain {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }
}

/// `Φ(u) = P(u) − λ I(u)`.
pub fn phi(spec: &ProblemSpec, u: &ScalarField) -> f64 {
    spec.principal(u) - spec.lambda * reaction_energy(u, &spec.nl)
}

/// `|P'(u)u − λI'(u)u| / max(1, P'(u)u)`; zero exactly on the Nehari set.
pub fn nehari_residual(spec: &ProblemSpec, u: &ScalarField) -> Result<f64, Error> {
    spec.check_field(u)?;
    if u.is_zero() {
        return Err(Error::ZeroDirection);
    }
    let a = spec.principal_ray_derivative(u, 1.0)?;
    let b = spec.lambda * ray_reaction(u.domain().cell_area(), u.values(), 1.0, &spec.nl);
    Ok((a - b).abs() / a.max(1.0))
}

/// A point of the Nehari set on the ray through `w`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct NehariRoot {
    /// Amplitude with `t_w w ∈ 𝒩`.
    pub t_w: f64,
    /// `|g(t_w)|`.
    pub residual: f64,
    /// Final bracket with `g(lo) > 0 > g(hi)`.
    pub bracket: (f64, f64),
    /// Bisection steps taken.
    pub iterations: usize,
}

/// Ray data precomputed from `w` so each `g(t)` costs one pass over the support.
#[derive(Clone, Debug)]
enum RayPrincipal {
    /// `P(tw) = t P(w)`.
    OneHomogeneous { value: f64 },
    /// `P(tw) = h² Σ √(1 + t²|∇w|²) + t trace(w)`.
    Area { grad_sq: Vec<f64>, flat_cells: usize, trace: f64 },
    /// `P(tw) = t^s/s h² Σ |∇w|^s + t trace(w)`.
    Power { exponent: f64, bulk: f64, trace: f64 },
}

/// Reaction data along the ray. Power laws reduce to moments `h² Σ |w|^p`.
#[derive(Clone, Debug)]
enum RayReaction {
    Moments { terms: [(f64, f64, f64); 2], count: usize },
    General { support: Vec<f64> },
}

/// `γ(t) = Φ(tw)` along a fixed direction.
#[derive(Clone, Debug)]
pub struct FiberingMap<'a> {
    spec: &'a ProblemSpec,
    direction: &'a ScalarField,
    reaction: RayReaction,
    ray: RayPrincipal,
}

/// Halvings or doublings tried before a bracket search gives up.
const BRACKET_STEPS: i32 = 200;
const MAX_BISECTIONS: usize = 400;

impl<'a> FiberingMap<'a> {
    /// Fibering map of `spec` along `w`.
    pub fn new(spec: &'a ProblemSpec, w: &'a ScalarField) -> Result<Self, Error> {
        spec.check_field(w)?;
        if w.is_zero() {
            return Err(Error::ZeroDirection);
        }
        let h2 = spec.domain.cell_area();
        let ray = match spec.functional {
            Functional::OneLaplacian => RayPrincipal::OneHomogeneous { value: i0(w, spec.flavor) },
            Functional::MeanCurvature => {
                let mut grad_sq = Vec::new();
                let mut flat_cells = 0usize;
                sum_over_gradients(w, |gx, gy| {
                    let q = gx * gx + gy * gy;
                    if q == 0.0 {
                        flat_cells += 1;
                    } else {
                        grad_sq.push(q);
                    }
                    0.0
                });
                RayPrincipal::Area { grad_sq, flat_cells, trace: boundary_trace_term(w) }
            }
            Functional::PLaplacianSurrogate { exponent } => {
                let flavor = spec.flavor;
                let bulk = h2 * sum_over_gradients(w, |gx, gy| powf(flavor.magnitude(gx, gy), exponent));
                RayPrincipal::Power { exponent, bulk, trace: boundary_trace_term(w) }
            }
        };
        let moment = |p: f64| h2 * w.values().iter().map(|v| powf(v.abs(), p)).sum::<f64>();
        // Each term is (weight, exponent, h² Σ |w|^exponent).
        let reaction = match spec.nl.kind() {
            NonlinearityKind::Power { p } => RayReaction::Moments { terms: [(1.0, p, moment(p)), (0.0, p, 0.0)], count: 1 },
            NonlinearityKind::PowerSum { p, q, c1, c2 } => {
                RayReaction::Moments { terms: [(c1, p, moment(p)), (c2, q, moment(q))], count: 2 }
            }
            NonlinearityKind::Custom => {
                RayReaction::General { support: w.values().iter().copied().filter(|v| *v != 0.0).collect() }
            }
        };
        Ok(FiberingMap { spec, direction: w, reaction, ray })
    }

    /// The direction `w`.
    pub fn direction(&self) -> &ScalarField {
        self.direction
    }

    /// The problem.
    pub fn spec(&self) -> &ProblemSpec {
        self.spec
    }

    /// `I(tw)`.
    fn reaction_primitive(&self, t: f64) -> f64 {
        match &self.reaction {
            RayReaction::Moments { terms, count } => {
                terms[..*count].iter().map(|&(c, p, m)| c * powf(t, p) / p * m).sum()
            }
            RayReaction::General { support } => {
                let nl = &self.spec.nl;
                self.spec.domain.cell_area() * support.iter().map(|&v| nl.primitive(t * v)).sum::<f64>()
            }
        }
    }

    /// `I'(tw)w`.
    fn reaction_derivative(&self, t: f64) -> f64 {
        match &self.reaction {
            RayReaction::Moments { terms, count } => {
                terms[..*count].iter().map(|&(c, p, m)| c * powf(t, p - 1.0) * m).sum()
            }
            RayReaction::General { support } => {
                let nl = &self.spec.nl;
                self.spec.domain.cell_area() * support.iter().map(|&v| nl.f(t * v) * v).sum::<f64>()
            }
        }
    }

    /// `γ(t) = Φ(tw)` for `t >= 0`.
    pub fn gamma(&self, t: f64) -> Result<f64, Error> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidParameter { name: "t", value: t });
        }
        let h2 = self.spec.domain.cell_area();
        let principal = match &self.ray {
            RayPrincipal::OneHomogeneous { value } => t * value,
            RayPrincipal::Area { grad_sq, flat_cells, trace } => {
                let t2 = t * t;
                let curved: f64 = grad_sq.iter().map(|q| sqrt(1.0 + t2 * q)).sum();
                h2 * (curved + *flat_cells as f64) + t * trace
            }
            RayPrincipal::Power { exponent, bulk, trace } => powf(t, *exponent) / exponent * bulk + t * trace,
        };
        Ok(principal - self.spec.lambda * self.reaction_primitive(t))
    }

    /// `P'(tw)w`.
    pub fn principal_derivative(&self, t: f64) -> Result<f64, Error> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidParameter { name: "t", value: t });
        }
        Ok(self.principal_derivative_unchecked(t))
    }

    fn principal_derivative_unchecked(&self, t: f64) -> f64 {
        match &self.ray {
            RayPrincipal::OneHomogeneous { value } => *value,
            RayPrincipal::Area { grad_sq, trace, .. } => {
                let inv_t2 = 1.0 / (t * t);
                let bulk: f64 = grad_sq.iter().map(|q| q / sqrt(inv_t2 + q)).sum();
                self.spec.domain.cell_area() * bulk + trace
            }
            RayPrincipal::Power { exponent, bulk, trace } => powf(t, exponent - 1.0) * bulk + trace,
        }
    }

    /// `g(t) = γ'(t) = P'(tw)w − λ I'(tw)w` for `t > 0`.
    pub fn g_deriv(&self, t: f64) -> Result<f64, Error> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidParameter { name: "t", value: t });
        }
        Ok(self.g_unchecked(t))
    }

    fn g_unchecked(&self, t: f64) -> f64 {
        self.principal_derivative_unchecked(t) - self.spec.lambda * self.reaction_derivative(t)
    }

    /// Number of sign changes of `g` along increasing amplitudes `ts`
    /// (exact zeros are skipped).
    pub fn sign_changes(&self, ts: &[f64]) -> Result<usize, Error> {
        let mut last = 0.0f64;
        let mut changes = 0;
        for &t in ts {
            let g = self.g_deriv(t)?;
            if g == 0.0 {
                continue;
            }
            if last != 0.0 && (g > 0.0) != (last > 0.0) {
                changes += 1;
            }
            last = g;
        }
        Ok(changes)
    }

    /// Finds `t_w > 0` with `g(t_w) = 0`.
    ///
    /// Starting from `t = 1`, the lower end is halved until `g > 0` and the
    /// upper end doubled until `g < 0` (at most 200 steps each), then the
    /// bracket is bisected until `hi − lo <= tol_root · lo`. When `g` is not
    /// positive anywhere below 1 (zero-trace directions for mean curvature)
    /// the smallest power of two above 1 with `g > 0` is used instead.
    pub fn nehari_project(&self, tol_root: f64) -> Result<NehariRoot, Error> {
        if !(tol_root.is_finite() && tol_root > 0.0) {
            return Err(Error::InvalidParameter { name: "tol_root", value: tol_root });
        }
        let g1 = self.g_unchecked(1.0);
        if g1 == 0.0 {
            return Ok(NehariRoot { t_w: 1.0, residual: 0.0, bracket: (1.0, 1.0), iterations: 0 });
        }
        let (mut lo, mut hi);
        if g1 > 0.0 {
            lo = 1.0;
            hi = self.double_until_negative(1.0)?;
        } else {
            hi = 1.0;
            lo = match self.halve_until_positive() {
                Some(t) => t,
                None => {
                    let t = self.smallest_positive_above_one()?;
                    hi = self.double_until_negative(t)?;
                    t
                }
            };
        }
        let mut iterations = 0;
        while hi - lo > tol_root * lo && iterations < MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let g = self.g_unchecked(mid);
            iterations += 1;
            if g > 0.0 {
                lo = mid;
            } else if g < 0.0 {
                hi = mid;
            } else {
                return Ok(NehariRoot { t_w: mid, residual: 0.0, bracket: (lo, hi), iterations });
            }
        }
        let mid = 0.5 * (lo + hi);
        let (t_w, residual) = [lo, mid, hi]
            .into_iter()
            .map(|t| (t, self.g_unchecked(t).abs()))
            .fold((mid, f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best });
        Ok(NehariRoot { t_w, residual, bracket: (lo, hi), iterations })
    }

    fn halve_until_positive(&self) -> Option<f64> {
        let mut t = 1.0;
        for _ in 0..BRACKET_STEPS {
            t *= 0.5;
            if self.g_unchecked(t) > 0.0 {
                return Some(t);
            }
        }
        None
    }

    fn smallest_positive_above_one(&self) -> Result<f64, Error> {
        let mut t = 1.0;
        for _ in 0..BRACKET_STEPS {
            t *= 2.0;
            if self.g_unchecked(t) > 0.0 {
                return Ok(t);
            }
        }
        Err(Error::BracketFailureLow { t_min: libm::ldexp(1.0, -BRACKET_STEPS) })
    }

    fn double_until_negative(&self, from: f64) -> Result<f64, Error> {
        let mut t = from;
        for _ in 0..BRACKET_STEPS {
            t *= 2.0;
            if self.g_unchecked(t) < 0.0 {
                return Ok(t);
            }
        }
        Err(Error::BracketFailureHigh { t_max: t })
    }
}
