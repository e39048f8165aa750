//! Minimization of `Φ` over the Nehari set.
//!
//! The search runs over directions. For a direction `w` the reduced objective
//! is `ψ(w) = Φ_ε(t_w w)`, with `t_w` the Nehari amplitude of the unsmoothed
//! problem and `Φ_ε` the energy with every absolute value replaced by
//! `√(ε² + ·²) − ε`. `ψ` is invariant under positive rescaling of `w`, so its
//! gradient is orthogonal to `w`; the solver approximates it by the
//! tangential part of `t ∇Φ_ε(t w)` and takes limited-memory quasi-Newton
//! steps with Armijo backtracking. Each restart walks down the smoothing
//! schedule, and the final amplitude, energy and certificates are computed
//! with `ε = 0`.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::bv::{bv_norm, weighted_boundary_sum, TvFlavor};
use crate::domain::{gradient_adjoint_add, gradient_into, ScalarField};
use crate::fibering::{nehari_residual, phi, FiberingMap, Functional, ProblemSpec};
use crate::math::{powf, sqrt};
use crate::nonlinearity::{audit, default_audit_grid};
use crate::verification::{certify, CertifyConfig, CriticalityReport};
use crate::Error;

/// Default relative tolerance of the Nehari root.
pub const TOL_ROOT: f64 = 1e-10;

/// Knobs of [`solve`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SolverConfig {
    /// Independent random starts.
    pub restarts: usize,
    /// Base seed; restart `k` draws from stream `k` of this seed.
    pub seed: u64,
    /// Strictly decreasing smoothing parameters, last entry below `1e-5`.
    pub eps_schedule: Vec<f64>,
    /// First trial step, relative to `‖w‖₂ / ‖∇ψ‖₂`.
    pub initial_step: f64,
    /// Backtracking factor in `(0, 1)`.
    pub backtrack: f64,
    /// Iteration cap for each smoothing stage.
    pub max_iters_per_eps: usize,
    /// A stage ends after five consecutive accepted steps whose relative
    /// decrease of `ψ` is below this value.
    pub stop_tol: f64,
    /// Number of curvature pairs kept by the quasi-Newton direction.
    pub memory: usize,
    /// Stages with `ε` at or below this value scale the quasi-Newton
    /// direction by the Hessian diagonal of the smoothed principal part.
    pub precondition_below: f64,
    /// Relative tolerance of the Nehari bisection.
    pub tol_root: f64,
    /// Certificate attached to the result.
    pub certificate: CertifyConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            restarts: 8,
            seed: 0,
            eps_schedule: vec![1.5, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            initial_step: 0.1,
            backtrack: 0.5,
            max_iters_per_eps: 3000,
            stop_tol: 1e-14,
            memory: 8,
            precondition_below: 1e-2,
            tol_root: TOL_ROOT,
            certificate: CertifyConfig::default(),
        }
    }
}

impl SolverConfig {
    /// Checks the documented ranges.
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |name, value| Err(Error::InvalidParameter { name, value });
        if self.restarts == 0 {
            return bad("restarts", 0.0);
        }
        let eps = &self.eps_schedule;
        if eps.is_empty() {
            return bad("eps_schedule", f64::NAN);
        }
        for (k, &e) in eps.iter().enumerate() {
            if !(e.is_finite() && e > 0.0) || (k > 0 && e >= eps[k - 1]) {
                return bad("eps_schedule", e);
            }
        }
        if eps[eps.len() - 1] >= 1e-5 {
            return bad("eps_schedule", eps[eps.len() - 1]);
        }
        if !(self.initial_step.is_finite() && self.initial_step > 0.0) {
            return bad("initial_step", self.initial_step);
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack", self.backtrack);
        }
        if self.max_iters_per_eps == 0 {
            return bad("max_iters_per_eps", 0.0);
        }
        if !(self.stop_tol.is_finite() && self.stop_tol >= 0.0) {
            return bad("stop_tol", self.stop_tol);
        }
        if !(self.precondition_below >= 0.0) {
            return bad("precondition_below", self.precondition_below);
        }
        if !(self.tol_root.is_finite() && self.tol_root > 0.0) {
            return bad("tol_root", self.tol_root);
        }
        self.certificate.validate()
    }
}

/// One accepted descent step.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TraceEntry {
    /// Restart index.
    pub restart: usize,
    /// Smoothing parameter of the stage.
    pub eps: f64,
    /// Iteration within the stage (0 is the stage's starting point).
    pub iteration: usize,
    /// `ψ` after the step.
    pub psi: f64,
}

/// Outcome of one restart.
#[derive(Clone, Debug)]
pub struct RestartOutcome {
    /// Restart index.
    pub index: usize,
    /// `Φ(u)` at `ε = 0`.
    pub energy: f64,
    /// Nehari point `t_w w`.
    pub u: ScalarField,
    /// Amplitude of the final direction, normalized to unit BV norm.
    pub t_w: f64,
    /// Accepted steps.
    pub trace: Vec<TraceEntry>,
}

/// Best restart with its certificate.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GroundStateResult {
    /// The computed ground state.
    pub u_star: ScalarField,
    /// `Φ(u_star)`.
    pub energy: f64,
    /// `nehari_residual(u_star)`.
    pub nehari_residual: f64,
    /// Amplitude along the unit-norm direction of `u_star`.
    pub t_w: f64,
    /// Restart that produced `u_star`.
    pub best_restart: usize,
    /// Final energy of each restart, `None` where the restart failed.
    pub restart_energies: Vec<Option<f64>>,
    /// Criticality certificate of `u_star`.
    pub certificate: CriticalityReport,
    /// Descent log of the best restart.
    pub trace: Vec<TraceEntry>,
}

#[inline]
fn smooth_abs(a: f64, eps: f64) -> f64 {
    sqrt(eps * eps + a * a) - eps
}

/// `Φ_ε(u)`, and its gradient (added into `grad`) when requested.
fn smoothed_energy(spec: &ProblemSpec, u: &[f64], eps: f64, grad: Option<&mut [f64]>) -> f64 {
    let d = spec.domain();
    let n = d.cell_count();
    let h2 = d.cell_area();
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    gradient_into(d, u, &mut gx, &mut gy);
    let want_grad = grad.is_some();
    let (mut qx, mut qy) = if want_grad { (vec![0.0; n], vec![0.0; n]) } else { (Vec::new(), Vec::new()) };

    let mut bulk = 0.0;
    for c in 0..n {
        let (a, b) = (gx[c], gy[c]);
        let (value, dx, dy) = bulk_density(spec, a, b, eps);
        bulk += value;
        if want_grad {
            qx[c] = h2 * dx;
            qy[c] = h2 * dy;
        }
    }
    let trace = d.h() * weighted_boundary_sum(d, u, |s| smooth_abs(s, eps));
    let nl = spec.nonlinearity();
    let lambda = spec.lambda();
    let reaction: f64 = u.iter().map(|&s| nl.primitive(s)).sum();

    if let Some(grad) = grad {
        gradient_adjoint_add(d, &qx, &qy, grad);
        for j in 0..d.ny() {
            for i in 0..d.nx() {
                let c = d.index(i, j);
                let m = d.boundary_multiplicity(i, j);
                if m > 0 {
                    let r = sqrt(eps * eps + u[c] * u[c]);
                    if r > 0.0 {
                        grad[c] += d.h() * m as f64 * u[c] / r;
                    }
                }
                grad[c] -= lambda * h2 * nl.f(u[c]);
            }
        }
    }
    h2 * bulk + trace - lambda * h2 * reaction
}

/// Smoothed principal density at one cell and its partial derivatives in
/// `(gx, gy)`.
#[inline]
fn bulk_density(spec: &ProblemSpec, gx: f64, gy: f64, eps: f64) -> (f64, f64, f64) {
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    match (spec.functional(), spec.flavor()) {
        (Functional::MeanCurvature, _) => {
            let r = sqrt(1.0 + gx * gx + gy * gy);
            (r, gx / r, gy / r)
        }
        (Functional::OneLaplacian, TvFlavor::Isotropic) => {
            let r = sqrt(eps * eps + gx * gx + gy * gy);
            (r - eps, ratio(gx, r), ratio(gy, r))
        }
        (Functional::OneLaplacian, TvFlavor::Anisotropic) => {
            let e = 0.5 * eps;
            let (rx, ry) = (sqrt(e * e + gx * gx), sqrt(e * e + gy * gy));
            (rx + ry - eps, ratio(gx, rx), ratio(gy, ry))
        }
        (Functional::PLaplacianSurrogate { exponent }, TvFlavor::Isotropic) => {
            let r2 = eps * eps + gx * gx + gy * gy;
            let value = (powf(r2, 0.5 * exponent) - powf(eps, exponent)) / exponent;
            let scale = if r2 > 0.0 { powf(r2, 0.5 * exponent - 1.0) } else { 0.0 };
            (value, scale * gx, scale * gy)
        }
        (Functional::PLaplacianSurrogate { exponent }, TvFlavor::Anisotropic) => {
            let e = 0.5 * eps;
            let (rx, ry) = (sqrt(e * e + gx * gx), sqrt(e * e + gy * gy));
            let m = rx + ry - eps;
            let outer = if m > 0.0 { powf(m, exponent - 1.0) } else { 0.0 };
            (powf(m, exponent) / exponent, outer * ratio(gx, rx), outer * ratio(gy, ry))
        }
    }
}

/// Diagonal of the Hessian of the smoothed principal part at `u`, used to
/// precondition the quasi-Newton direction.
fn principal_hessian_diagonal(spec: &ProblemSpec, u: &[f64], eps: f64) -> Vec<f64> {
    let d = spec.domain();
    let (nx, ny) = (d.nx(), d.ny());
    let n = d.cell_count();
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    gradient_into(d, u, &mut gx, &mut gy);
    let mut diag = vec![0.0; n];
    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            let (hxx, hxy, hyy) = bulk_hessian(spec, gx[c], gy[c], eps);
            let has_x = i + 1 < nx;
            let has_y = j + 1 < ny;
            if has_x {
                diag[c] += hxx;
                diag[c + 1] += hxx;
            }
            if has_y {
                diag[c] += hyy;
                diag[c + nx] += hyy;
            }
            if has_x && has_y {
                diag[c] += 2.0 * hxy;
            }
            let m = d.boundary_multiplicity(i, j);
            if m > 0 {
                let r2 = eps * eps + u[c] * u[c];
                if r2 > 0.0 {
                    diag[c] += d.h() * m as f64 * eps * eps / (r2 * sqrt(r2));
                }
            }
        }
    }
    diag
}

/// Hessian entries `(Hxx, Hxy, Hyy)` of the smoothed principal density in
/// the gradient variables (the `h²` cell area and `1/h²` from the
/// differences cancel).
fn bulk_hessian(spec: &ProblemSpec, gx: f64, gy: f64, eps: f64) -> (f64, f64, f64) {
    let iso = |reg: f64| {
        let r2 = reg * reg + gx * gx + gy * gy;
        if r2 == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let r3 = r2 * sqrt(r2);
        ((r2 - gx * gx) / r3, -gx * gy / r3, (r2 - gy * gy) / r3)
    };
    match (spec.functional(), spec.flavor()) {
        (Functional::MeanCurvature, _) => iso(1.0),
        (Functional::OneLaplacian, TvFlavor::Isotropic) => iso(eps),
        (_, TvFlavor::Anisotropic) => {
            let e2 = 0.25 * eps * eps;
            let c = |g: f64| {
                let r2 = e2 + g * g;
                if r2 == 0.0 { 0.0 } else { e2 / (r2 * sqrt(r2)) }
            };
            (c(gx), 0.0, c(gy))
        }
        (Functional::PLaplacianSurrogate { exponent }, TvFlavor::Isotropic) => {
            let r2 = eps * eps + gx * gx + gy * gy;
            if r2 == 0.0 {
                return (0.0, 0.0, 0.0);
            }
            let base = powf(r2, 0.5 * exponent - 1.0);
            let k = (exponent - 2.0) / r2;
            (base * (1.0 + k * gx * gx), base * k * gx * gy, base * (1.0 + k * gy * gy))
        }
    }
}

/// `Φ_ε(u)`: each `|∇u|` becomes `√(ε² + |∇u|²) − ε` and each boundary `|u|`
/// becomes `√(ε² + u²) − ε` (the anisotropic norm smooths each component
/// with `ε/2`). Equals [`phi`] at `ε = 0` up to rounding and never exceeds it.
pub fn smoothed_phi(spec: &ProblemSpec, u: &ScalarField, eps: f64) -> Result<f64, Error> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParameter { name: "eps", value: eps });
    }
    spec.check_field(u)?;
    if eps == 0.0 {
        return Ok(phi(spec, u));
    }
    Ok(smoothed_energy(spec, u.values(), eps, None))
}

/// `ψ(w) = Φ_ε(t_w ŵ)` with `ŵ = w / ‖w‖` and `t_w` the unsmoothed Nehari
/// amplitude of `ŵ`. Returns `(ψ, t_w)`.
pub fn reduced_objective(spec: &ProblemSpec, w: &ScalarField, eps: f64) -> Result<(f64, f64), Error> {
    let (psi, t, _) = reduce(spec, w, eps, TOL_ROOT)?;
    Ok((psi, t))
}

/// `(ψ, t_w, ŵ)`.
fn reduce(spec: &ProblemSpec, w: &ScalarField, eps: f64, tol_root: f64) -> Result<(f64, f64, ScalarField), Error> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParameter { name: "eps", value: eps });
    }
    spec.check_field(w)?;
    if w.is_zero() {
        return Err(Error::ZeroDirection);
    }
    let unit = w.scaled(1.0 / bv_norm(w, spec.flavor()));
    let root = FiberingMap::new(spec, &unit)?.nehari_project(tol_root)?;
    let u = unit.scaled(root.t_w);
    let psi = if eps == 0.0 { phi(spec, &u) } else { smoothed_energy(spec, u.values(), eps, None) };
    Ok((psi, root.t_w, unit))
}

/// `ψ` and its approximate gradient at `w` (any positive scale).
struct Evaluation {
    psi: f64,
    grad: Vec<f64>,
    /// Positive diagonal scaling for the quasi-Newton direction.
    diag: Vec<f64>,
}

fn evaluate(spec: &ProblemSpec, cfg: &SolverConfig, w: &[f64], eps: f64) -> Result<Evaluation, Error> {
    let tol_root = cfg.tol_root;
    let field = ScalarField::from_values(*spec.domain(), w.to_vec())?;
    let norm = bv_norm(&field, spec.flavor());
    if !(norm > 0.0) {
        return Err(Error::ZeroDirection);
    }
    let unit = field.scaled(1.0 / norm);
    let root = FiberingMap::new(spec, &unit)?.nehari_project(tol_root)?;
    // u = τ w is the Nehari point of the ray.
    let tau = root.t_w / norm;
    let u: Vec<f64> = w.iter().map(|v| tau * v).collect();
    let mut grad = vec![0.0; w.len()];
    let psi = smoothed_energy(spec, &u, eps, Some(&mut grad));
    for g in grad.iter_mut() {
        *g *= tau;
    }
    tangential(&mut grad, w);
    if let Some(cell) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite { cell });
    }
    if !psi.is_finite() {
        return Err(Error::NonFinite { cell: 0 });
    }
    if eps > cfg.precondition_below {
        let n = w.len();
        return Ok(Evaluation { psi, grad, diag: vec![1.0; n] });
    }
    let mut diag = principal_hessian_diagonal(spec, &u, eps);
    let mean = diag.iter().sum::<f64>() / diag.len() as f64;
    let floor = 1e-6 * mean.max(f64::MIN_POSITIVE);
    for v in diag.iter_mut() {
        *v = tau * tau * v.max(floor);
    }
    Ok(Evaluation { psi, grad, diag })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Removes the component of `v` along `w`.
fn tangential(v: &mut [f64], w: &[f64]) {
    let ww = dot(w, w);
    if ww > 0.0 {
        let c = dot(v, w) / ww;
        for (x, y) in v.iter_mut().zip(w) {
            *x -= c * y;
        }
    }
}

/// Two-loop recursion for `−H ∇ψ`.
fn lbfgs_direction(grad: &[f64], diag: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let gamma = match pairs.back() {
        Some((s, y, _)) => dot(s, y) / y.iter().zip(diag).map(|(a, b)| a * a / b).sum::<f64>(),
        None => 1.0,
    };
    for (qi, di) in q.iter_mut().zip(diag) {
        *qi *= gamma / di;
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

/// Seeded Gaussian direction for restart `index`, scaled to unit BV norm.
pub fn random_direction(spec: &ProblemSpec, seed: u64, index: usize) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let d = *spec.domain();
    loop {
        let values: Vec<f64> = (0..d.cell_count()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let w = ScalarField::from_values(d, values).expect("finite Gaussian draws");
        if !w.is_zero() {
            return w.scaled(1.0 / bv_norm(&w, spec.flavor()));
        }
    }
}

/// Runs one smoothing stage from `w` in place; returns `ψ` at the end.
fn descend_stage(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    w: &mut Vec<f64>,
    eps: f64,
    restart: usize,
    trace: &mut Vec<TraceEntry>,
) -> Result<f64, Error> {
    const ARMIJO: f64 = 1e-4;
    const MAX_BACKTRACKS: usize = 60;
    let mut cur = evaluate(spec, cfg, w, eps)?;
    trace.push(TraceEntry { restart, eps, iteration: 0, psi: cur.psi });
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut quiet = 0;
    for it in 1..=cfg.max_iters_per_eps {
        let gnorm = sqrt(dot(&cur.grad, &cur.grad));
        if gnorm == 0.0 {
            break;
        }
        let mut dir = lbfgs_direction(&cur.grad, &cur.diag, &pairs);
        tangential(&mut dir, w);
        let mut slope = dot(&dir, &cur.grad);
        let mut alpha = 1.0;
        if !(slope < 0.0) {
            pairs.clear();
            dir = cur.grad.iter().zip(&cur.diag).map(|(g, d)| -g / d).collect();
            tangential(&mut dir, w);
            slope = dot(&dir, &cur.grad);
        }
        if !(slope < 0.0) {
            dir = cur.grad.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
            alpha = cfg.initial_step * sqrt(dot(w, w)) / gnorm;
        } else {
            // Keep the unit trial step from moving any cell by more than ‖w‖∞.
            let wmax = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let dmax = dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if dmax > 0.0 && dmax > wmax {
                alpha = wmax / dmax;
            }
        }
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = w.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
            if let Ok(next) = evaluate(spec, cfg, &trial, eps) {
                if next.psi <= cur.psi + ARMIJO * alpha * slope {
                    accepted = Some((trial, next));
                    break;
                }
            }
            alpha *= cfg.backtrack;
        }
        let Some((trial, next)) = accepted else { break };
        let s: Vec<f64> = trial.iter().zip(w.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * sqrt(dot(&s, &s) * dot(&y, &y)) && sy > 0.0 {
            if pairs.len() == cfg.memory.max(1) {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        let decrease = cur.psi - next.psi;
        *w = trial;
        cur = next;
        trace.push(TraceEntry { restart, eps, iteration: it, psi: cur.psi });
        if decrease <= cfg.stop_tol * cur.psi.abs().max(1.0) {
            quiet += 1;
            if quiet >= 5 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    Ok(cur.psi)
}

/// Runs restart `index` of `solve`. Bracket failures surface as errors.
pub fn run_restart(spec: &ProblemSpec, cfg: &SolverConfig, index: usize) -> Result<RestartOutcome, Error> {
    let start = random_direction(spec, cfg.seed, index);
    // Reject a restart whose starting ray has no Nehari point.
    reduce(spec, &start, 0.0, cfg.tol_root)?;
    let mut w = start.into_values();
    let mut trace = Vec::new();
    for &eps in &cfg.eps_schedule {
        let field = ScalarField::from_values(*spec.domain(), w.clone())?;
        w = field.scaled(1.0 / bv_norm(&field, spec.flavor())).into_values();
        descend_stage(spec, cfg, &mut w, eps, index, &mut trace)?;
    }
    let field = ScalarField::from_values(*spec.domain(), w)?;
    let (energy, t_w, unit) = reduce(spec, &field, 0.0, cfg.tol_root)?;
    Ok(RestartOutcome { index, energy, u: unit.scaled(t_w), t_w, trace })
}

/// Audits the nonlinearity and validates `cfg`.
pub fn check_preconditions(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<(), Error> {
    cfg.validate()?;
    if audit(spec.nonlinearity(), &default_audit_grid())?.passed() {
        Ok(())
    } else {
        Err(Error::AuditFailed)
    }
}

/// Picks the best restart (lowest energy, lowest index on ties) and attaches
/// its certificate. The outcome order does not matter.
pub fn assemble(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    outcomes: Vec<Result<RestartOutcome, Error>>,
) -> Result<GroundStateResult, Error> {
    let restarts = outcomes.len();
    let mut energies = vec![None; restarts];
    let mut best: Option<RestartOutcome> = None;
    for outcome in outcomes.into_iter().flatten() {
        if outcome.index < restarts {
            energies[outcome.index] = Some(outcome.energy);
        }
        let better = match &best {
            None => true,
            Some(b) => (outcome.energy, outcome.index) < (b.energy, b.index),
        };
        if better {
            best = Some(outcome);
        }
    }
    let best = best.ok_or(Error::AllRestartsFailed { restarts })?;
    let certificate = certify(spec, &best.u, &cfg.certificate)?;
    Ok(GroundStateResult {
        nehari_residual: nehari_residual(spec, &best.u)?,
        energy: best.energy,
        t_w: best.t_w,
        best_restart: best.index,
        restart_energies: energies,
        certificate,
        trace: best.trace,
        u_star: best.u,
    })
}

/// Multi-start minimization of `Φ` over the Nehari set (restarts run in
/// sequence; see `nehari-bv` for the parallel driver).
pub fn solve(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<GroundStateResult, Error> {
    check_preconditions(spec, cfg)?;
    let outcomes = (0..cfg.restarts).map(|k| run_restart(spec, cfg, k)).collect();
    assemble(spec, cfg, outcomes)
}

/// Solves the mean-curvature problem at `λ = 1, 1/2, 1/4, …` until a solve
/// succeeds, trying at most `max_halvings + 1` values. Returns the accepted
/// `λ` with its result.
pub fn solve_with_lambda_search<F>(
    spec: &ProblemSpec,
    max_halvings: usize,
    mut solve_at: F,
) -> Result<(f64, GroundStateResult), Error>
where
    F: FnMut(&ProblemSpec) -> Result<GroundStateResult, Error>,
{
    let mut lambda = 1.0;
    let mut last = Error::AllRestartsFailed { restarts: 0 };
    for _ in 0..=max_halvings {
        let candidate = spec.with_lambda(lambda)?;
        match solve_at(&candidate) {
            Ok(result) => return Ok((lambda, result)),
            Err(e @ (Error::AllRestartsFailed { .. } | Error::BracketFailureLow { .. })) => last = e,
            Err(e) => return Err(e),
        }
        lambda *= 0.5;
    }
    Err(last)
}

/// One exponent of [`p_continuation`].
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ContinuationEntry {
    /// Gradient exponent `s` of the surrogate.
    pub exponent: f64,
    /// Ground-state energy of the surrogate, if it has one.
    pub energy: Option<f64>,
    /// Minimizer, if one was found.
    pub field: Option<ScalarField>,
    /// Why the entry is empty, or a failure message.
    pub note: Option<String>,
}

/// Energies of the p-Laplacian surrogates next to the direct answer.
#[derive(Clone, Debug, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ContinuationReport {
    /// One entry per requested exponent, in order.
    pub entries: Vec<ContinuationEntry>,
    /// Energy of the 1-Laplacian problem supplied by the caller.
    pub reference_energy: Option<f64>,
    /// `(E(s) − reference) / |reference|` for the smallest solved exponent.
    pub relative_gap: Option<f64>,
}

/// Minimizes the surrogate `(1/s) h² Σ |∇u|^s + trace − I` for each `s` in
/// `exponents` (decreasing, in `(1, 2]`) with the machinery of [`solve`].
///
/// When `s` reaches the growth exponent of `f` the ray map has no interior
/// maximum, so such entries are reported empty. Certificates are not
/// computed for the surrogates.
pub fn p_continuation(
    spec: &ProblemSpec,
    exponents: &[f64],
    cfg: &SolverConfig,
    reference_energy: Option<f64>,
) -> Result<ContinuationReport, Error> {
    if spec.functional() != Functional::OneLaplacian {
        return Err(Error::UnsupportedFunctional("exponent continuation needs the 1-Laplacian problem"));
    }
    for (k, &s) in exponents.iter().enumerate() {
        if !(s > 1.0 && s <= 2.0) || (k > 0 && s >= exponents[k - 1]) {
            return Err(Error::InvalidParameter { name: "exponent", value: s });
        }
    }
    if exponents.is_empty() {
        return Ok(ContinuationReport { entries: Vec::new(), reference_energy, relative_gap: None });
    }
    check_preconditions(spec, cfg)?;
    let q = spec.nonlinearity().growth_exponent();
    let mut entries = Vec::with_capacity(exponents.len());
    for &s in exponents {
        if s >= q {
            entries.push(ContinuationEntry {
                exponent: s,
                energy: None,
                field: None,
                note: Some(String::from("no mountain-pass geometry: exponent not below the growth of f")),
            });
            continue;
        }
        let surrogate =
            ProblemSpec::p_laplacian_surrogate(*spec.domain(), spec.nonlinearity().clone(), spec.flavor(), s)?;
        let outcomes: Vec<_> = (0..cfg.restarts).map(|k| run_restart(&surrogate, cfg, k)).collect();
        let best = outcomes
            .into_iter()
            .flatten()
            .fold(None::<RestartOutcome>, |b, o| match b {
                Some(b) if (b.energy, b.index) <= (o.energy, o.index) => Some(b),
                _ => Some(o),
            });
        entries.push(match best {
            Some(b) => ContinuationEntry { exponent: s, energy: Some(b.energy), field: Some(b.u), note: None },
            None => ContinuationEntry {
                exponent: s,
                energy: None,
                field: None,
                note: Some(String::from("all restarts failed")),
            },
        });
    }
    let relative_gap = reference_energy.and_then(|r| {
        let last = entries.iter().rev().find_map(|e| e.energy)?;
        Some((last - r) / r.abs())
    });
    Ok(ContinuationReport { entries, reference_energy, relative_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DiscreteDomain;
    use crate::nonlinearity::Nonlinearity;

    fn spec(n: usize, p: f64) -> ProblemSpec {
        ProblemSpec::one_laplacian(DiscreteDomain::unit_square(n).unwrap(), Nonlinearity::power(p).unwrap(), TvFlavor::Isotropic)
    }

    fn quick_cfg(restarts: usize) -> SolverConfig {
        SolverConfig { restarts, max_iters_per_eps: 60, ..SolverConfig::default() }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let mut c = SolverConfig::default();
        c.restarts = 0;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::default();
        c.eps_schedule = vec![1e-2, 1e-1, 1e-6];
        assert!(c.validate().is_err());
        let mut c = SolverConfig::default();
        c.eps_schedule = vec![1e-1, 1e-3];
        assert!(c.validate().is_err());
        let mut c = SolverConfig::default();
        c.backtrack = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn smoothed_phi_at_zero_eps_is_phi() {
        let s = spec(5, 1.5);
        let u = ScalarField::from_fn(*s.domain(), |i, j| (i as f64 - 2.0) * (j as f64 + 0.5)).unwrap();
        assert_eq!(smoothed_phi(&s, &u, 0.0).unwrap(), phi(&s, &u));
        let z = ScalarField::zeros(*s.domain());
        assert_eq!(smoothed_phi(&s, &z, 0.3).unwrap(), 0.0);
        assert!(smoothed_phi(&s, &u, -1.0).is_err());
    }

    #[test]
    fn smoothed_gradient_matches_finite_differences() {
        let d = DiscreteDomain::unit_square(4).unwrap();
        let nl = Nonlinearity::power(1.5).unwrap();
        let specs = [
            ProblemSpec::one_laplacian(d, nl.clone(), TvFlavor::Isotropic),
            ProblemSpec::one_laplacian(d, nl.clone(), TvFlavor::Anisotropic),
            ProblemSpec::mean_curvature(d, nl.clone(), 0.3).unwrap(),
            ProblemSpec::p_laplacian_surrogate(d, nl, TvFlavor::Isotropic, 1.4).unwrap(),
        ];
        let u: Vec<f64> = (0..16).map(|k| libm::sin(k as f64 * 1.3) * 2.0).collect();
        for s in &specs {
            let mut grad = vec![0.0; 16];
            smoothed_energy(s, &u, 0.05, Some(&mut grad));
            for c in 0..16 {
                let step = 1e-6;
                let mut up = u.clone();
                up[c] += step;
                let mut dn = u.clone();
                dn[c] -= step;
                let fd = (smoothed_energy(s, &up, 0.05, None) - smoothed_energy(s, &dn, 0.05, None)) / (2.0 * step);
                assert!((fd - grad[c]).abs() < 1e-6 * (1.0 + fd.abs()), "{:?} cell {c}: {fd} vs {}", s.functional(), grad[c]);
            }
        }
    }

    #[test]
    fn reduced_objective_scale_invariant() {
        let s = spec(6, 1.5);
        let w = random_direction(&s, 3, 0);
        let (a, ta) = reduced_objective(&s, &w, 1e-3).unwrap();
        let (b, tb) = reduced_objective(&s, &w.scaled(7.5), 1e-3).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs());
        assert!((ta - tb).abs() <= 1e-9 * ta);
    }

    #[test]
    fn one_laplacian_power_closed_form_psi() {
        let s = spec(6, 1.5);
        let w = random_direction(&s, 9, 2);
        let m: f64 = s.domain().cell_area() * w.values().iter().map(|v| powf(v.abs(), 1.5)).sum::<f64>();
        let expected = (1.0 - 1.0 / 1.5) * powf(m, -1.0 / 0.5);
        let (psi, _) = reduced_objective(&s, &w, 0.0).unwrap();
        assert!((psi - expected).abs() <= 1e-8 * expected);
    }

    #[test]
    fn random_direction_is_deterministic_and_unit() {
        let s = spec(5, 1.5);
        let a = random_direction(&s, 11, 4);
        assert_eq!(a, random_direction(&s, 11, 4));
        assert_ne!(a, random_direction(&s, 11, 5));
        assert!((bv_norm(&a, TvFlavor::Isotropic) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn descent_lowers_energy() {
        let s = spec(6, 1.5);
        let cfg = quick_cfg(1);
        let start = random_direction(&s, cfg.seed, 0);
        let (psi0, _) = reduced_objective(&s, &start, 0.0).unwrap();
        let out = run_restart(&s, &cfg, 0).unwrap();
        assert!(out.energy < psi0);
        assert!(nehari_residual(&s, &out.u).unwrap() < 1e-8);
        for stage in cfg.eps_schedule.iter() {
            let psis: Vec<f64> = out.trace.iter().filter(|e| e.eps == *stage).map(|e| e.psi).collect();
            assert!(psis.windows(2).all(|p| p[1] <= p[0]));
        }
    }

    #[test]
    fn solve_is_deterministic() {
        let s = spec(5, 1.5);
        let cfg = quick_cfg(2);
        let a = solve(&s, &cfg).unwrap();
        let b = solve(&s, &cfg).unwrap();
        assert_eq!(a.u_star, b.u_star);
        assert_eq!(a.energy, b.energy);
        assert_eq!(a.restart_energies.len(), 2);
    }

    #[test]
    fn assemble_breaks_ties_by_index() {
        let s = spec(2, 1.5);
        let u = ScalarField::constant(*s.domain(), 1.0);
        let mk = |index| Ok(RestartOutcome { index, energy: 1.0, u: u.clone(), t_w: 1.0, trace: Vec::new() });
        let cfg = SolverConfig::default();
        let r = assemble(&s, &cfg, vec![mk(1), mk(0)]).unwrap();
        assert_eq!(r.best_restart, 0);
        let err = assemble(&s, &cfg, vec![Err(Error::ZeroDirection)]).unwrap_err();
        assert_eq!(err, Error::AllRestartsFailed { restarts: 1 });
    }

    #[test]
    fn lambda_search_halves_until_success() {
        let d = DiscreteDomain::unit_square(3).unwrap();
        let s = ProblemSpec::mean_curvature(d, Nonlinearity::power(1.5).unwrap(), 1.0).unwrap();
        let mut seen = Vec::new();
        let r = solve_with_lambda_search(&s, 10, |sp| {
            seen.push(sp.lambda());
            if sp.lambda() > 0.2 {
                Err(Error::AllRestartsFailed { restarts: 1 })
            } else {
                solve(sp, &quick_cfg(1))
            }
        })
        .unwrap();
        assert_eq!(seen, vec![1.0, 0.5, 0.25, 0.125]);
        assert_eq!(r.0, 0.125);
    }

    #[test]
    fn continuation_edge_cases() {
        let s = spec(4, 1.5);
        let cfg = quick_cfg(1);
        let empty = p_continuation(&s, &[], &cfg, None).unwrap();
        assert!(empty.entries.is_empty());
        assert!(p_continuation(&s, &[1.2, 1.4], &cfg, None).is_err());
        let r = p_continuation(&s, &[2.0, 1.3], &cfg, Some(1.0)).unwrap();
        assert!(r.entries[0].energy.is_none());
        assert!(r.entries[1].energy.unwrap() > 0.0);
        let mc = ProblemSpec::mean_curvature(*s.domain(), Nonlinearity::power(1.5).unwrap(), 0.1).unwrap();
        assert!(p_continuation(&mc, &[1.5], &cfg, None).is_err());
    }
}
