//! Criticality certificates.
//!
//! A field `u` solves the 1-Laplacian problem when
//! `I₀(v) − I₀(u) ≥ λ h² Σ f(u)(v − u)` for every `v` (with `Ĩ₀` in place of
//! `I₀` for mean curvature). [`subdiff_check`] samples that inequality over
//! structured probe families. [`el_certificate`] searches for the dual field
//! of the Euler–Lagrange system: cell vectors `z` with `|z| ≤ 1` and boundary
//! fluxes `s ∈ [−1, 1]` such that `−div z + Bᵀs / h = f(u)`, where `B` maps a
//! cell to its boundary faces. The pairing `h² Σ z·∇u` must then equal
//! `TV(u)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::bv::{tv, TvFlavor};
use crate::domain::{gradient_adjoint_add, gradient_into, ScalarField, VectorField};
use crate::fibering::{Functional, ProblemSpec};
use crate::math::{hypot, sqrt};
use crate::nonlinearity::Nonlinearity;
use crate::Error;

/// Settings of [`certify`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CertifyConfig {
    /// Probes drawn by [`subdiff_check`].
    pub n_probes: usize,
    /// Seed of the random probe families.
    pub seed: u64,
    /// Admissible negative slack.
    pub tol_cert: f64,
    /// Admissible relative Euler–Lagrange residual.
    pub tol_el: f64,
    /// Iteration cap of the dual solve.
    pub el_max_iters: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig { n_probes: 500, seed: 0, tol_cert: 1e-7, tol_el: 1e-6, el_max_iters: 20_000 }
    }
}

impl CertifyConfig {
    /// Checks the documented ranges.
    pub fn validate(&self) -> Result<(), Error> {
        if self.n_probes == 0 {
            return Err(Error::InvalidParameter { name: "n_probes", value: 0.0 });
        }
        for (name, v) in [("tol_cert", self.tol_cert), ("tol_el", self.tol_el)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        Ok(())
    }
}

/// Summary of all checks run on a candidate solution.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CriticalityReport {
    /// Smallest sampled slack of the subdifferential inequality.
    pub subdiff_min_slack: f64,
    /// Probe family that attained it.
    pub worst_probe: String,
    /// Number of probes evaluated.
    pub n_probes: usize,
    /// Relative Euler–Lagrange residual (1-Laplacian only).
    pub el_residual: Option<f64>,
    /// `|h² Σ z·∇u − TV(u)|` of the dual field (1-Laplacian only).
    pub pairing_gap: Option<f64>,
    /// Interior residual of the mean-curvature equation.
    pub mc_el_residual: Option<f64>,
    /// `h² Σ f'(u) u²`, when `f'` is available.
    pub nondegeneracy: Option<f64>,
    /// Tolerance applied to the slack.
    pub tol_cert: f64,
    /// Tolerance applied to `el_residual`.
    pub tol_el: f64,
}

impl CriticalityReport {
    /// `subdiff_min_slack ≥ −tol_cert` and, when computed, `el_residual ≤ tol_el`.
    pub fn passed(&self) -> bool {
        self.subdiff_min_slack >= -self.tol_cert && self.el_residual.is_none_or(|r| r <= self.tol_el)
    }
}

/// Dual field for the 1-Laplacian Euler–Lagrange system.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VectorFieldCertificate {
    /// Cell vectors with `|z| ≤ 1` in the dual norm of the TV flavor.
    pub z: VectorField,
    /// One flux in `[−1, 1]` per boundary face, in the order of
    /// [`DiscreteDomain::boundary_faces`](crate::DiscreteDomain::boundary_faces).
    pub boundary_flux: Vec<f64>,
    /// `−div z + Bᵀs / h − f(u)`.
    pub residual: ScalarField,
    /// `√(h² Σ r²)`.
    pub residual_norm: f64,
    /// `residual_norm / √(h² Σ f(u)²)` (the absolute value when `f(u) = 0`).
    pub relative_residual: f64,
    /// `−h² Σ u div z`.
    pub pairing: f64,
    /// `TV(u)` in the same flavor.
    pub tv: f64,
    /// `|pairing − tv|`.
    pub pairing_gap: f64,
    /// Largest `|z|` over the cells.
    pub max_magnitude: f64,
    /// Iterations performed.
    pub iterations: usize,
    /// Whether `relative_residual ≤ tol_el` was reached.
    pub converged: bool,
}

/// `P(v) − P(u) − λ h² Σ f(u)(v − u)` for the principal part `P` of `spec`.
pub fn subdiff_slack(spec: &ProblemSpec, u: &ScalarField, v: &ScalarField) -> Result<f64, Error> {
    spec.check_field(u)?;
    spec.check_field(v)?;
    let fu: Vec<f64> = u.values().iter().map(|&s| spec.nonlinearity().f(s)).collect();
    Ok(Slack::new(spec, u, fu).at(v.values()))
}

struct Slack<'a> {
    spec: &'a ProblemSpec,
    u: &'a ScalarField,
    pu: f64,
    fu: Vec<f64>,
}

impl<'a> Slack<'a> {
    fn new(spec: &'a ProblemSpec, u: &'a ScalarField, fu: Vec<f64>) -> Self {
        Slack { spec, u, pu: spec.principal(u), fu }
    }

    fn at(&self, v: &[f64]) -> f64 {
        let field = ScalarField::from_values(*self.u.domain(), v.to_vec()).expect("probe matches the grid");
        let h2 = self.u.domain().cell_area();
        let linear: f64 = self.fu.iter().zip(v.iter().zip(self.u.values())).map(|(f, (a, b))| f * (a - b)).sum();
        self.spec.principal(&field) - self.pu - self.spec.lambda() * h2 * linear
    }
}

struct Tally {
    min: f64,
    label: String,
    count: usize,
}

impl Tally {
    fn record(&mut self, value: f64, label: &dyn Fn() -> String) {
        self.count += 1;
        if value < self.min {
            self.min = value;
            self.label = label();
        }
    }
}

const SCALES: [f64; 10] = [0.25, 0.5, 0.9, 0.99, 0.999, 1.001, 1.01, 1.1, 1.5, 3.0];

/// Samples the subdifferential inequality at `u`.
///
/// Probe families, in order: `v = 0` and `v = 2u`; scaled copies `c u`;
/// Gaussian perturbations `u + σξ`; pure Gaussian fields; steps
/// `u − α d` along the descent direction `d` of the lightly smoothed energy;
/// then single-cell bumps `u ± δ e_k` on seeded random cells until
/// `n_probes` is reached. At least the structured families are evaluated even
/// when `n_probes` is smaller.
pub fn subdiff_check(spec: &ProblemSpec, u: &ScalarField, n_probes: usize, seed: u64) -> Result<CriticalityReport, Error> {
    spec.check_field(u)?;
    if u.is_zero() {
        return Err(Error::ZeroDirection);
    }
    let d = *u.domain();
    let n = d.cell_count();
    let nl = spec.nonlinearity();
    let fu: Vec<f64> = u.values().iter().map(|&s| nl.f(s)).collect();
    let slack = Slack::new(spec, u, fu);
    let base = u.values();
    let amp = u.max_abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut tally = Tally { min: f64::INFINITY, label: String::new(), count: 0 };

    tally.record(slack.at(&vec![0.0; n]), &|| String::from("zero"));
    let doubled: Vec<f64> = base.iter().map(|x| 2.0 * x).collect();
    tally.record(slack.at(&doubled), &|| String::from("scaled 2"));
    for c in SCALES {
        let v: Vec<f64> = base.iter().map(|x| c * x).collect();
        tally.record(slack.at(&v), &|| format!("scaled {c}"));
    }
    let gaussian = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(rng)).collect() };
    for rel in [1e-4, 1e-3, 1e-2, 1e-1] {
        for _ in 0..4 {
            let xi = gaussian(&mut rng);
            let v: Vec<f64> = base.iter().zip(&xi).map(|(a, b)| a + rel * amp * b).collect();
            tally.record(slack.at(&v), &|| format!("perturbation {rel}"));
        }
    }
    for rel in [0.1, 1.0] {
        for _ in 0..2 {
            let v: Vec<f64> = gaussian(&mut rng).iter().map(|b| rel * amp * b).collect();
            tally.record(slack.at(&v), &|| format!("gaussian {rel}"));
        }
    }
    let dir = descent_direction(spec, u);
    let dmax = dir.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if dmax > 0.0 {
        for rel in [1e-4, 1e-3, 1e-2, 1e-1] {
            let alpha = rel * amp / dmax;
            let v: Vec<f64> = base.iter().zip(&dir).map(|(a, b)| a - alpha * b).collect();
            tally.record(slack.at(&v), &|| format!("descent {rel}"));
        }
    }

    let mut cells: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        let j = (rng.next_u64() % (k as u64 + 1)) as usize;
        cells.swap(k, j);
    }
    let bumps = [1e-2 * amp, -1e-2 * amp, 1e-1 * amp, -1e-1 * amp];
    let mut v = base.to_vec();
    let mut k = 0usize;
    while tally.count < n_probes {
        let cell = cells[(k / bumps.len()) % n];
        let delta = bumps[k % bumps.len()];
        v[cell] = base[cell] + delta;
        tally.record(slack.at(&v), &|| format!("bump cell {cell} by {delta:e}"));
        v[cell] = base[cell];
        k += 1;
    }

    Ok(CriticalityReport {
        subdiff_min_slack: tally.min,
        worst_probe: tally.label,
        n_probes: tally.count,
        el_residual: None,
        pairing_gap: None,
        mc_el_residual: None,
        nondegeneracy: None,
        tol_cert: CertifyConfig::default().tol_cert,
        tol_el: CertifyConfig::default().tol_el,
    })
}

/// Gradient of the principal part smoothed at `ε = 1e-8` minus the reaction.
fn descent_direction(spec: &ProblemSpec, u: &ScalarField) -> Vec<f64> {
    let d = u.domain();
    let n = d.cell_count();
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    gradient_into(d, u.values(), &mut gx, &mut gy);
    let eps = 1e-8;
    for c in 0..n {
        let (a, b) = (gx[c], gy[c]);
        let (qa, qb) = match (spec.functional(), spec.flavor()) {
            (Functional::MeanCurvature, _) => {
                let r = sqrt(1.0 + a * a + b * b);
                (a / r, b / r)
            }
            (_, TvFlavor::Isotropic) => {
                let r = sqrt(eps * eps + a * a + b * b);
                (a / r, b / r)
            }
            (_, TvFlavor::Anisotropic) => (a / sqrt(eps * eps + a * a), b / sqrt(eps * eps + b * b)),
        };
        gx[c] = qa;
        gy[c] = qb;
    }
    let mut grad = vec![0.0; n];
    gradient_adjoint_add(d, &gx, &gy, &mut grad);
    let h = d.h();
    let nl = spec.nonlinearity();
    for j in 0..d.ny() {
        for i in 0..d.nx() {
            let c = d.index(i, j);
            let s = u.values()[c];
            let m = d.boundary_multiplicity(i, j) as f64;
            grad[c] += m / h * s / sqrt(eps * eps + s * s) - spec.lambda() * nl.f(s);
        }
    }
    grad
}

/// Projected accelerated gradient search for the dual field of the
/// 1-Laplacian Euler–Lagrange system at `u`.
///
/// Minimizes `½ ‖−div z + Bᵀs/h − f(u)‖²` over `|z| ≤ 1` (Euclidean for the
/// isotropic flavor, componentwise for the anisotropic one) and `|s| ≤ 1`,
/// starting from `z = ∇u/|∇u|` and `s = sign(u)` on the boundary.
pub fn el_certificate(
    u: &ScalarField,
    nl: &Nonlinearity,
    flavor: TvFlavor,
    max_iters: usize,
    tol_el: f64,
) -> Result<VectorFieldCertificate, Error> {
    if !(tol_el.is_finite() && tol_el >= 0.0) {
        return Err(Error::InvalidParameter { name: "tol_el", value: tol_el });
    }
    let d = *u.domain();
    let n = d.cell_count();
    let h = d.h();
    let h2 = d.cell_area();
    let faces = d.boundary_faces();
    let nf = faces.len();
    let target: Vec<f64> = u.values().iter().map(|&s| nl.f(s)).collect();
    let target_norm = sqrt(h2 * target.iter().map(|x| x * x).sum::<f64>());
    let scale = if target_norm > 0.0 { target_norm } else { 1.0 };

    let project = |zx: &mut [f64], zy: &mut [f64], s: &mut [f64]| {
        for c in 0..zx.len() {
            match flavor {
                TvFlavor::Isotropic => {
                    let m = hypot(zx[c], zy[c]);
                    if m > 1.0 {
                        zx[c] /= m;
                        zy[c] /= m;
                    }
                }
                TvFlavor::Anisotropic => {
                    zx[c] = zx[c].clamp(-1.0, 1.0);
                    zy[c] = zy[c].clamp(-1.0, 1.0);
                }
            }
        }
        for v in s.iter_mut() {
            *v = v.clamp(-1.0, 1.0);
        }
    };
    let residual_of = |zx: &[f64], zy: &[f64], s: &[f64], r: &mut [f64]| {
        r.iter_mut().zip(&target).for_each(|(ri, t)| *ri = -t);
        gradient_adjoint_add(&d, zx, zy, r);
        for (face, flux) in faces.iter().zip(s) {
            r[face.cell] += flux / h;
        }
    };

    let mut zx = vec![0.0; n];
    let mut zy = vec![0.0; n];
    gradient_into(&d, u.values(), &mut zx, &mut zy);
    for c in 0..n {
        let (a, b) = (zx[c], zy[c]);
        let (qa, qb) = match flavor {
            TvFlavor::Isotropic => {
                let m = hypot(a, b);
                if m > 0.0 { (a / m, b / m) } else { (0.0, 0.0) }
            }
            TvFlavor::Anisotropic => (sign(a), sign(b)),
        };
        zx[c] = qa;
        zy[c] = qb;
    }
    let mut s: Vec<f64> = faces.iter().map(|f| sign(u.values()[f.cell])).collect();

    let lip = 12.0 / h2;
    let mut r = vec![0.0; n];
    let mut gxr = vec![0.0; n];
    let mut gyr = vec![0.0; n];
    let (mut yx, mut yy, mut ys) = (zx.clone(), zy.clone(), s.clone());
    let mut tk = 1.0f64;
    residual_of(&zx, &zy, &s, &mut r);
    let mut res_norm = sqrt(h2 * r.iter().map(|x| x * x).sum::<f64>());
    let mut iterations = 0;
    while res_norm / scale > tol_el && iterations < max_iters {
        iterations += 1;
        residual_of(&yx, &yy, &ys, &mut r);
        gradient_into(&d, &r, &mut gxr, &mut gyr);
        let (px, py, ps) = (zx.clone(), zy.clone(), s.clone());
        for c in 0..n {
            zx[c] = yx[c] - gxr[c] / lip;
            zy[c] = yy[c] - gyr[c] / lip;
        }
        for (k, face) in faces.iter().enumerate() {
            s[k] = ys[k] - r[face.cell] / (h * lip);
        }
        project(&mut zx, &mut zy, &mut s);
        residual_of(&zx, &zy, &s, &mut r);
        let new_norm = sqrt(h2 * r.iter().map(|x| x * x).sum::<f64>());
        // Restart the momentum whenever the residual grows.
        let t_next = if new_norm > res_norm { 1.0 } else { 0.5 * (1.0 + sqrt(1.0 + 4.0 * tk * tk)) };
        let beta = if new_norm > res_norm { 0.0 } else { (tk - 1.0) / t_next };
        for c in 0..n {
            yx[c] = zx[c] + beta * (zx[c] - px[c]);
            yy[c] = zy[c] + beta * (zy[c] - py[c]);
        }
        for k in 0..nf {
            ys[k] = s[k] + beta * (s[k] - ps[k]);
        }
        tk = t_next;
        res_norm = new_norm;
    }
    residual_of(&zx, &zy, &s, &mut r);
    let residual_norm = sqrt(h2 * r.iter().map(|x| x * x).sum::<f64>());
    let z = VectorField::from_components(d, zx, zy)?;
    let pairing = -u.integral_product(&z.divergence())?;
    let tv_u = tv(u, flavor);
    let max_magnitude = match flavor {
        TvFlavor::Isotropic => z.max_magnitude(),
        TvFlavor::Anisotropic => z.x().iter().chain(z.y()).fold(0.0f64, |m, v| m.max(v.abs())),
    };
    let relative_residual = residual_norm / scale;
    Ok(VectorFieldCertificate {
        z,
        boundary_flux: s,
        residual: ScalarField::from_values(d, r)?,
        residual_norm,
        relative_residual,
        pairing,
        tv: tv_u,
        pairing_gap: (pairing - tv_u).abs(),
        max_magnitude,
        iterations,
        converged: relative_residual <= tol_el,
    })
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `‖div z + λ f(u)‖ / ‖λ f(u)‖` over interior cells, with
/// `z = ∇u / √(1 + |∇u|²)`. Returns 0 for `u ≡ 0` and the absolute norm
/// when the reaction vanishes on the interior.
pub fn mc_el_residual(u: &ScalarField, lambda: f64, nl: &Nonlinearity) -> f64 {
    if u.is_zero() {
        return 0.0;
    }
    let d = *u.domain();
    let n = d.cell_count();
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    gradient_into(&d, u.values(), &mut gx, &mut gy);
    for c in 0..n {
        let r = sqrt(1.0 + gx[c] * gx[c] + gy[c] * gy[c]);
        gx[c] /= r;
        gy[c] /= r;
    }
    // −div z = ∇ᵀz.
    let mut neg_div = vec![0.0; n];
    gradient_adjoint_add(&d, &gx, &gy, &mut neg_div);
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..d.ny() {
        for i in 0..d.nx() {
            if d.is_interior(i, j) {
                let c = d.index(i, j);
                let rhs = lambda * nl.f(u.values()[c]);
                num += (rhs - neg_div[c]) * (rhs - neg_div[c]);
                den += rhs * rhs;
            }
        }
    }
    if den > 0.0 {
        sqrt(num / den)
    } else {
        sqrt(d.cell_area() * num)
    }
}

/// `h² Σ f'(u) u²`.
pub fn nondegeneracy(u: &ScalarField, nl: &Nonlinearity) -> Result<f64, Error> {
    let mut acc = 0.0;
    for &s in u.values() {
        acc += nl.derivative(s).ok_or(Error::MissingDerivative)? * s * s;
    }
    if u.values().is_empty() || nl.has_derivative() {
        Ok(u.domain().cell_area() * acc)
    } else {
        Err(Error::MissingDerivative)
    }
}

/// Every check that applies to `spec`.
pub fn certify(spec: &ProblemSpec, u: &ScalarField, cfg: &CertifyConfig) -> Result<CriticalityReport, Error> {
    cfg.validate()?;
    let mut report = subdiff_check(spec, u, cfg.n_probes, cfg.seed)?;
    report.tol_cert = cfg.tol_cert;
    report.tol_el = cfg.tol_el;
    let nl = spec.nonlinearity();
    match spec.functional() {
        Functional::OneLaplacian => {
            let cert = el_certificate(u, nl, spec.flavor(), cfg.el_max_iters, cfg.tol_el)?;
            report.el_residual = Some(cert.relative_residual);
            report.pairing_gap = Some(cert.pairing_gap);
        }
        Functional::MeanCurvature => report.mc_el_residual = Some(mc_el_residual(u, spec.lambda(), nl)),
        Functional::PLaplacianSurrogate { .. } => {}
    }
    if nl.has_derivative() {
        report.nondegeneracy = Some(nondegeneracy(u, nl)?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DiscreteDomain;
    use crate::math::powf;

    fn one_cell(p: f64) -> (ProblemSpec, ScalarField) {
        let d = DiscreteDomain::new(1, 1, 1.0).unwrap();
        let spec = ProblemSpec::one_laplacian(d, Nonlinearity::power(p).unwrap(), TvFlavor::Isotropic);
        // 4 = f(c) = c^(p-1).
        let c = powf(4.0, 1.0 / (p - 1.0));
        (spec, ScalarField::constant(d, c))
    }

    #[test]
    fn slack_at_u_is_zero() {
        let d = DiscreteDomain::unit_square(4).unwrap();
        let spec = ProblemSpec::one_laplacian(d, Nonlinearity::power(1.5).unwrap(), TvFlavor::Isotropic);
        let u = ScalarField::from_fn(d, |i, j| (i * j) as f64 - 1.0).unwrap();
        assert_eq!(subdiff_slack(&spec, &u, &u).unwrap(), 0.0);
    }

    #[test]
    fn one_cell_solution_certifies() {
        for p in [1.1, 1.5, 1.9] {
            let (spec, u) = one_cell(p);
            let report = subdiff_check(&spec, &u, 100, 1).unwrap();
            assert!(report.subdiff_min_slack >= -1e-9 * u.max_abs(), "p={p}: {report:?}");
            assert_eq!(report.n_probes, 100);
            let cert = el_certificate(&u, spec.nonlinearity(), TvFlavor::Isotropic, 100, 1e-12).unwrap();
            assert!(cert.residual_norm <= 1e-8);
            assert!(cert.boundary_flux.iter().all(|s| *s == 1.0));
            assert!(cert.converged);
        }
    }

    #[test]
    fn noncritical_field_is_falsified() {
        let d = DiscreteDomain::unit_square(6).unwrap();
        let spec = ProblemSpec::one_laplacian(d, Nonlinearity::power(1.5).unwrap(), TvFlavor::Isotropic);
        let u = ScalarField::from_fn(d, |i, j| libm::sin((i * 7 + j * 3) as f64)).unwrap();
        let report = subdiff_check(&spec, &u, 200, 0).unwrap();
        assert!(report.subdiff_min_slack < -1e-3);
        assert!(!report.passed());
    }

    #[test]
    fn zero_field_el_certificate() {
        let d = DiscreteDomain::unit_square(5).unwrap();
        let u = ScalarField::zeros(d);
        let cert = el_certificate(&u, &Nonlinearity::power(1.5).unwrap(), TvFlavor::Isotropic, 10, 1e-8).unwrap();
        assert_eq!(cert.residual_norm, 0.0);
        assert_eq!(cert.pairing_gap, 0.0);
        assert!(cert.z.is_zero());
        assert_eq!(mc_el_residual(&u, 0.5, &Nonlinearity::power(1.5).unwrap()), 0.0);
        assert_eq!(nondegeneracy(&u, &Nonlinearity::power(1.5).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn el_certificate_respects_constraints() {
        let d = DiscreteDomain::unit_square(6).unwrap();
        let u = ScalarField::from_fn(d, |i, j| libm::cos((i + 2 * j) as f64)).unwrap();
        for flavor in [TvFlavor::Isotropic, TvFlavor::Anisotropic] {
            let cert = el_certificate(&u, &Nonlinearity::power(1.5).unwrap(), flavor, 300, 0.0).unwrap();
            assert!(cert.max_magnitude <= 1.0 + 1e-12);
            assert!(cert.boundary_flux.iter().all(|s| s.abs() <= 1.0));
            assert!(cert.pairing <= cert.tv + 1e-12);
            assert!(!cert.converged);
        }
    }

    #[test]
    fn mc_residual_of_random_field_is_large() {
        let d = DiscreteDomain::unit_square(8).unwrap();
        let u = ScalarField::from_fn(d, |i, j| libm::sin((i * 5 + j * 11) as f64)).unwrap();
        assert!(mc_el_residual(&u, 0.2, &Nonlinearity::power(1.5).unwrap()) > 0.5);
    }

    #[test]
    fn nondegeneracy_power_law() {
        let d = DiscreteDomain::unit_square(3).unwrap();
        let u = ScalarField::from_fn(d, |i, j| i as f64 - j as f64 + 0.5).unwrap();
        let nl = Nonlinearity::power(1.5).unwrap();
        let expected: f64 = 0.5 * d.cell_area() * u.values().iter().map(|v| powf(v.abs(), 1.5)).sum::<f64>();
        assert!((nondegeneracy(&u, &nl).unwrap() - expected).abs() < 1e-13);
        let custom = Nonlinearity::custom(|s| s * s * s, 4.0);
        assert_eq!(nondegeneracy(&u, &custom).unwrap_err(), Error::MissingDerivative);
    }
}
