//! Reaction terms `f`, their primitives `F(s) = ∫₀ˢ f`, and audits of the
//! hypotheses the Nehari machinery relies on:
//!
//! * (f1) `f` continuous;
//! * (f2) `f(s) → 0` as `s → 0`;
//! * (f3) `|f(s)| <= c1 + c2 |s|^(p-1)` with `1 < p < 1* = 2`;
//! * (f4) `F(t)/t → ±∞` as `t → ±∞`;
//! * (f5) `f` increasing.
//!
//! The hypotheses quantify over all of ℝ, so an audit can only falsify them on
//! a finite sample grid.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::domain::ScalarField;
use crate::math::{powf, signed_pow};
use crate::{Error, CRITICAL_EXPONENT};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Parametric family of a [`Nonlinearity`].
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum NonlinearityKind {
    /// `f(s) = |s|^(p-2) s`.
    Power {
        /// Growth exponent.
        p: f64,
    },
    /// `f(s) = c1 |s|^(p-2) s + c2 |s|^(q-2) s`.
    PowerSum {
        /// First exponent.
        p: f64,
        /// Second exponent.
        q: f64,
        /// Weight of the first term.
        c1: f64,
        /// Weight of the second term.
        c2: f64,
    },
    /// User-supplied evaluators.
    Custom,
}

#[derive(Clone)]
struct CustomFns {
    f: RealFn,
    primitive: Option<RealFn>,
    derivative: Option<RealFn>,
}

/// The pair `(f, F)` with an optional derivative `f'`.
#[derive(Clone)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    growth: f64,
    custom: Option<CustomFns>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("kind", &self.kind)
            .field("growth", &self.growth)
            .field("has_derivative", &self.has_derivative())
            .finish()
    }
}

fn check_exponent(name: &'static str, p: f64) -> Result<(), Error> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value: p })
    }
}

impl Nonlinearity {
    /// `f(s) = |s|^(p-2) s`. Requires `p > 1`; supercritical exponents are
    /// accepted here and flagged by [`audit`].
    pub fn power(p: f64) -> Result<Self, Error> {
        check_exponent("p", p)?;
        Ok(Nonlinearity { kind: NonlinearityKind::Power { p }, growth: p, custom: None })
    }

    /// `f(s) = c1 |s|^(p-2) s + c2 |s|^(q-2) s` with positive weights.
    pub fn power_sum(p: f64, q: f64, c1: f64, c2: f64) -> Result<Self, Error> {
        check_exponent("p", p)?;
        check_exponent("q", q)?;
        for (name, c) in [("c1", c1), ("c2", c2)] {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidParameter { name, value: c });
            }
        }
        Ok(Nonlinearity { kind: NonlinearityKind::PowerSum { p, q, c1, c2 }, growth: p.max(q), custom: None })
    }

    /// Builds the closed-form member of `kind`.
    pub fn from_kind(kind: NonlinearityKind) -> Result<Self, Error> {
        match kind {
            NonlinearityKind::Power { p } => Self::power(p),
            NonlinearityKind::PowerSum { p, q, c1, c2 } => Self::power_sum(p, q, c1, c2),
            NonlinearityKind::Custom => Err(Error::InvalidParameter { name: "kind", value: f64::NAN }),
        }
    }

    /// A custom `f` with declared growth exponent. `F` is obtained by
    /// adaptive quadrature unless [`with_primitive`](Self::with_primitive)
    /// supplies it.
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static, growth_exponent: f64) -> Self {
        Nonlinearity {
            kind: NonlinearityKind::Custom,
            growth: growth_exponent,
            custom: Some(CustomFns { f: Arc::new(f), primitive: None, derivative: None }),
        }
    }

    /// Supplies a closed-form primitive for a custom nonlinearity.
    pub fn with_primitive(self, big_f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.edit_custom(|c| c.primitive = Some(Arc::new(big_f)))
    }

    /// Supplies `f'` for a custom nonlinearity.
    pub fn with_derivative(self, df: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.edit_custom(|c| c.derivative = Some(Arc::new(df)))
    }

    fn edit_custom(mut self, edit: impl FnOnce(&mut CustomFns)) -> Self {
        if let Some(c) = self.custom.as_mut() {
            edit(c);
        }
        self
    }

    /// Family tag.
    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }

    /// Growth exponent `p` in (f3).
    pub fn growth_exponent(&self) -> f64 {
        self.growth
    }

    /// True when `f'` can be evaluated.
    pub fn has_derivative(&self) -> bool {
        match &self.custom {
            Some(c) => c.derivative.is_some(),
            None => true,
        }
    }

    /// `f(s)`.
    pub fn f(&self, s: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Power { p } => signed_pow(s, p),
            NonlinearityKind::PowerSum { p, q, c1, c2 } => c1 * signed_pow(s, p) + c2 * signed_pow(s, q),
            NonlinearityKind::Custom => (self.custom_fns().f)(s),
        }
    }

    /// `F(s) = ∫₀ˢ f`.
    pub fn primitive(&self, s: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Power { p } => powf(s.abs(), p) / p,
            NonlinearityKind::PowerSum { p, q, c1, c2 } => {
                let a = s.abs();
                c1 * powf(a, p) / p + c2 * powf(a, q) / q
            }
            NonlinearityKind::Custom => {
                let c = self.custom_fns();
                match &c.primitive {
                    Some(big_f) => big_f(s),
                    None => integrate(&*c.f, 0.0, s, 1e-13),
                }
            }
        }
    }

    /// `f'(s)`. For power laws with exponent below 2 the derivative blows up
    /// at 0; it is reported as 0 there, which keeps `f'(s) s²` continuous.
    pub fn derivative(&self, s: f64) -> Option<f64> {
        let dpow = |s: f64, e: f64| if s == 0.0 { 0.0 } else { (e - 1.0) * powf(s.abs(), e - 2.0) };
        match self.kind {
            NonlinearityKind::Power { p } => Some(dpow(s, p)),
            NonlinearityKind::PowerSum { p, q, c1, c2 } => Some(c1 * dpow(s, p) + c2 * dpow(s, q)),
            NonlinearityKind::Custom => self.custom_fns().derivative.as_ref().map(|d| d(s)),
        }
    }

    fn custom_fns(&self) -> &CustomFns {
        self.custom.as_ref().expect("custom nonlinearity carries evaluators")
    }
}

/// `I(u) = h² Σ F(u)`.
pub fn reaction_energy(u: &ScalarField, nl: &Nonlinearity) -> f64 {
    u.domain().cell_area() * u.values().iter().map(|&v| nl.primitive(v)).sum::<f64>()
}

/// `I'(tu)u = h² Σ f(t u) u`.
pub fn reaction_ray_derivative(u: &ScalarField, t: f64, nl: &Nonlinearity) -> Result<f64, Error> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter { name: "t", value: t });
    }
    Ok(ray_reaction(u.domain().cell_area(), u.values(), t, nl))
}

pub(crate) fn ray_reaction(cell_area: f64, w: &[f64], t: f64, nl: &Nonlinearity) -> f64 {
    cell_area * w.iter().filter(|v| **v != 0.0).map(|&v| nl.f(t * v) * v).sum::<f64>()
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    simpson_step(f, a, b, fa, fm, fb, whole, tol * scale, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Hypothesis audited by [`audit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Hypothesis {
    /// (f1) continuity.
    Continuity,
    /// (f2) `f(s) = o(1)` at 0.
    VanishingAtZero,
    /// (f3) subcritical power growth.
    SubcriticalGrowth,
    /// (f4) superlinear primitive.
    Superlinearity,
    /// (f5) `f` increasing.
    Monotonicity,
    /// `F' = f`.
    Antiderivative,
    /// `|F(s)| <= ε|s| + C_ε|s|^p` for finite `C_ε`.
    EpsilonBound,
}

/// Outcome of one hypothesis check.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HypothesisCheck {
    /// Which hypothesis.
    pub hypothesis: Hypothesis,
    /// Whether the sample grid is consistent with it.
    pub passed: bool,
    /// A sample point where it fails, when one exists.
    pub witness: Option<f64>,
    /// Human-readable summary.
    pub detail: String,
}

/// An empirical `(ε, C_ε)` pair.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EpsilonBound {
    /// Linear coefficient.
    pub eps: f64,
    /// Smallest power coefficient that works on the grid.
    pub c_eps: f64,
}

/// Result of [`audit`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AuditReport {
    /// Family audited.
    pub kind: NonlinearityKind,
    /// Growth exponent used for (f3) and the ε-bound.
    pub growth_exponent: f64,
    /// One entry per hypothesis.
    pub checks: Vec<HypothesisCheck>,
    /// Least `(c1, c2)` realizing the growth bound on the grid.
    pub growth_fit: Option<(f64, f64)>,
    /// Empirical constants for the ε-bound on `F`.
    pub epsilon_bounds: Vec<EpsilonBound>,
    /// Non-fatal findings (e.g. `f` only non-decreasing).
    pub warnings: Vec<String>,
}

impl AuditReport {
    /// True when every check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The check for `h`.
    pub fn check(&self, h: Hypothesis) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.hypothesis == h)
    }
}

/// Default audit tolerance.
pub const AUDIT_TOL: f64 = 1e-9;

/// `0` and `±10^(k/10)` for `k = -60..=30`, sorted: magnitudes from `1e-6`
/// to `1e3`.
pub fn default_audit_grid() -> Vec<f64> {
    let mags: Vec<f64> = (-60..=30).map(|k| libm::pow(10.0, k as f64 / 10.0)).collect();
    let mut grid: Vec<f64> = mags.iter().rev().map(|m| -m).collect();
    grid.push(0.0);
    grid.extend(mags);
    grid
}

/// Audits (f1)–(f5), `F' = f` and the ε-bound on a sorted sample grid.
pub fn audit(nl: &Nonlinearity, s_grid: &[f64]) -> Result<AuditReport, Error> {
    if s_grid.is_empty() {
        return Err(Error::InvalidParameter { name: "s_grid", value: 0.0 });
    }
    if let Some(w) = s_grid.windows(2).find(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter { name: "s_grid", value: w[1] });
    }
    let tol = AUDIT_TOL;
    let p = nl.growth_exponent();
    let mut checks = Vec::new();
    let mut warnings = Vec::new();

    // (f1): finite values, and the oscillation over a shrinking window shrinks.
    let mut witness = None;
    for &s in s_grid {
        let d1 = 1e-4 * s.abs().max(1.0);
        let d2 = 1e-3 * d1;
        let (a, b) = (nl.f(s - d1), nl.f(s + d1));
        let (c, d) = (nl.f(s - d2), nl.f(s + d2));
        if ![nl.f(s), a, b, c, d].iter().all(|v| v.is_finite()) {
            witness = Some(s);
            break;
        }
        let wide = (b - a).abs();
        let narrow = (d - c).abs();
        if narrow > tol && narrow > 0.9 * wide {
            witness = Some(s);
            break;
        }
    }
    checks.push(HypothesisCheck {
        hypothesis: Hypothesis::Continuity,
        passed: witness.is_none(),
        witness,
        detail: match witness {
            None => String::from("finite and oscillation shrinks with the window"),
            Some(s) => format!("jump or non-finite value near s = {s:e}"),
        },
    });

    // (f2): f(0) = 0 and |f(±10^-k)| non-increasing in k.
    let f0 = nl.f(0.0);
    let mut witness = if f0.abs() > tol { Some(0.0) } else { None };
    if witness.is_none() {
        for sign in [1.0, -1.0] {
            let mut prev = f64::INFINITY;
            for k in 0..=12 {
                let s = sign * libm::pow(10.0, -(k as f64));
                let v = nl.f(s).abs();
                if v > prev + tol {
                    witness = Some(s);
                    break;
                }
                prev = v;
            }
        }
    }
    checks.push(HypothesisCheck {
        hypothesis: Hypothesis::VanishingAtZero,
        passed: witness.is_none(),
        witness,
        detail: format!("f(0) = {f0:e}"),
    });

    // (f3): growth exponent in (1, 1*) and |f(s)| / |s|^(p-1) not growing in the tail.
    let ratio = |s: f64| nl.f(s).abs() / powf(s.abs(), p - 1.0);
    let mut c1: f64 = 0.0;
    for &s in s_grid.iter().filter(|s| s.abs() <= 1.0) {
        c1 = c1.max(nl.f(s).abs());
    }
    c1 = c1.max(tol);
    let mut c2: f64 = tol;
    for &s in s_grid.iter().filter(|s| **s != 0.0) {
        c2 = c2.max((nl.f(s).abs() - c1).max(0.0) / powf(s.abs(), p - 1.0));
    }
    let smax = s_grid.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let mut witness = None;
    let subcritical = p > 1.0 && p < CRITICAL_EXPONENT;
    if !subcritical {
        witness = Some(p);
    } else if smax > 1.0 {
        for sign in [1.0, -1.0] {
            let far = ratio(sign * smax);
            let mid = ratio(sign * libm::sqrt(smax));
            if far > 1.01 * mid + tol {
                witness = Some(sign * smax);
            }
        }
    }
    checks.push(HypothesisCheck {
        hypothesis: Hypothesis::SubcriticalGrowth,
        passed: witness.is_none(),
        witness,
        detail: if subcritical {
            format!("|f(s)| <= {c1:.6e} + {c2:.6e} |s|^{:.4}", p - 1.0)
        } else {
            format!("growth exponent {p} outside (1, {CRITICAL_EXPONENT}) for N = 2")
        },
    });

    // (f4): F(t)/t strictly monotone along t = ±2^k.
    let mut witness = None;
    for sign in [1.0, -1.0] {
        let mut prev = sign * f64::NEG_INFINITY;
        for k in 1..=20 {
            let t = sign * libm::pow(2.0, k as f64);
            let r = nl.primitive(t) / t;
            let grows = if sign > 0.0 { r > prev } else { r < prev };
            if !r.is_finite() || !grows {
                witness = Some(t);
                break;
            }
            prev = r;
        }
    }
    checks.push(HypothesisCheck {
        hypothesis: Hypothesis::Superlinearity,
        passed: witness.is_none(),
        witness,
        detail: format!("F(2^20)/2^20 = {:e}", nl.primitive(1048576.0) / 1048576.0),
    });

    // (f5): strict increase on the grid; ties only warn.
    let mut witness = None;
    let mut ties = 0usize;
    for w in s_grid.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let (a, b) = (nl.f(w[0]), nl.f(w[1]));
        if b < a {
            witness = Some(w[1]);
            break;
        }
        if b == a {
            ties += 1;
        }
    }
    if ties > 0 && witness.is_none() {
        warnings.push(format!("f is only non-decreasing: {ties} flat steps on the audit grid"));
    }
    checks.push(HypothesisCheck {
        hypothesis: Hypothesis::Monotonicity,
        passed: witness.is_none(),
        witness,
        detail: match witness {
            None => String::from("f increasing on the grid"),
            Some(s) => format!("f decreases before s = {s:e}"),
        },
    });

    // F' = f by relative central differences.
    let mut witness = None;
    let mut worst: f64 = 0.0;
    for &s in s_grid.iter().filter(|s| **s != 0.0) {
        let d = 1e-6 * s.abs();
        let slope = (nl.primitive(s + d) - nl.primitive(s - d)) / (2.0 * d);
        let fs = nl.f(s);
        let err = (slope - fs).abs() / fs.abs().max(1e-9);
        worst = worst.max(err);
        if err > 1e-6 && witness.is_none() {
            witness = Some(s);
        }
    }
    let prim0 = nl.primitive(0.0);
    if prim0.abs() > tol && witness.is_none() {
        witness = Some(0.0);
    }
    checks.push(HypothesisCheck {
        hypothesis: Hypothesis::Antiderivative,
        passed: witness.is_none(),
        witness,
        detail: format!("F(0) = {prim0:e}, worst relative slope error {worst:.3e}"),
    });

    // |F(s)| <= ε|s| + C_ε |s|^p.
    let mut epsilon_bounds = Vec::new();
    for eps in [1e-1, 1e-2, 1e-3] {
        let mut c_eps: f64 = 0.0;
        for &s in s_grid.iter().filter(|s| **s != 0.0) {
            let a = s.abs();
            c_eps = c_eps.max((nl.primitive(s).abs() - eps * a).max(0.0) / powf(a, p));
        }
        epsilon_bounds.push(EpsilonBound { eps, c_eps });
    }
    let finite = epsilon_bounds.iter().all(|b| b.c_eps.is_finite());
    checks.push(HypothesisCheck {
        hypothesis: Hypothesis::EpsilonBound,
        passed: finite,
        witness: None,
        detail: format!("C_eps for eps = 1e-1, 1e-2, 1e-3: {:?}", epsilon_bounds.iter().map(|b| b.c_eps).collect::<Vec<_>>()),
    });

    Ok(AuditReport {
        kind: nl.kind(),
        growth_exponent: p,
        checks,
        growth_fit: if subcritical { Some((c1, c2)) } else { None },
        epsilon_bounds,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DiscreteDomain;

    #[test]
    fn power_values() {
        let nl = Nonlinearity::power(1.5).unwrap();
        assert!((nl.f(4.0) - 2.0).abs() < 1e-15);
        assert!((nl.f(-4.0) + 2.0).abs() < 1e-15);
        assert_eq!(nl.f(0.0), 0.0);
        assert_eq!(nl.primitive(0.0), 0.0);
        assert!((nl.primitive(1.0) - 1.0 / 1.5).abs() < 1e-15);
        assert_eq!(nl.primitive(-2.0), nl.primitive(2.0));
    }

    #[test]
    fn power_sum_values() {
        let nl = Nonlinearity::power_sum(1.2, 1.8, 2.0, 0.5).unwrap();
        let s: f64 = 3.0;
        let expect = 2.0 * s.powf(0.2) + 0.5 * s.powf(0.8);
        assert!((nl.f(s) - expect).abs() < 1e-14);
        assert_eq!(nl.growth_exponent(), 1.8);
        assert!(Nonlinearity::power_sum(1.2, 1.8, 0.0, 1.0).is_err());
    }

    #[test]
    fn rejects_exponent_at_most_one() {
        assert!(Nonlinearity::power(1.0).is_err());
        assert!(Nonlinearity::power(f64::NAN).is_err());
    }

    #[test]
    fn quadrature_primitive_matches_closed_form() {
        for p in [1.1, 1.5, 1.9] {
            let closed = Nonlinearity::power(p).unwrap();
            let custom = Nonlinearity::custom(move |s| signed_pow(s, p), p);
            for s in [-7.5, -1.0, -0.01, 0.3, 1.0, 12.0] {
                let (a, b) = (custom.primitive(s), closed.primitive(s));
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "p={p} s={s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn derivative_convention_at_zero() {
        let nl = Nonlinearity::power(1.5).unwrap();
        assert_eq!(nl.derivative(0.0), Some(0.0));
        assert!((nl.derivative(4.0).unwrap() - 0.25).abs() < 1e-15);
        let c = Nonlinearity::custom(|s| s, 1.5);
        assert_eq!(c.derivative(1.0), None);
        let c = c.with_derivative(|_| 1.0).with_primitive(|s| 0.5 * s * s);
        assert_eq!(c.derivative(1.0), Some(1.0));
        assert_eq!(c.primitive(2.0), 2.0);
    }

    #[test]
    fn functional_and_ray_derivative() {
        let nl = Nonlinearity::power(1.5).unwrap();
        let d = DiscreteDomain::unit_square(4).unwrap();
        assert_eq!(reaction_energy(&ScalarField::zeros(d), &nl), 0.0);
        let one = ScalarField::constant(d, 1.0);
        assert!((reaction_energy(&one, &nl) - 1.0 / 1.5).abs() < 1e-15);
        let wide = DiscreteDomain::new(8, 4, 0.25).unwrap();
        let ratio = reaction_energy(&ScalarField::constant(wide, 1.0), &nl) / reaction_energy(&one, &nl);
        assert!((ratio - 2.0).abs() < 1e-14);
        assert!(reaction_ray_derivative(&one, 0.0, &nl).is_err());
        assert_eq!(reaction_ray_derivative(&ScalarField::zeros(d), 3.0, &nl).unwrap(), 0.0);
    }

    #[test]
    fn audit_power_passes() {
        for p in [1.1, 1.3, 1.5, 1.9] {
            let r = audit(&Nonlinearity::power(p).unwrap(), &default_audit_grid()).unwrap();
            assert!(r.passed(), "p = {p}: {:?}", r.checks);
            assert!(r.warnings.is_empty());
        }
    }

    #[test]
    fn audit_flags_supercritical() {
        for p in [2.0, 2.5] {
            let r = audit(&Nonlinearity::power(p).unwrap(), &default_audit_grid()).unwrap();
            assert!(!r.check(Hypothesis::SubcriticalGrowth).unwrap().passed);
            assert!(r.check(Hypothesis::Monotonicity).unwrap().passed);
        }
    }

    #[test]
    fn audit_non_monotone_cubic() {
        let nl = Nonlinearity::custom(|s| s - s * s * s, 1.5).with_primitive(|s| 0.5 * s * s - 0.25 * s * s * s * s);
        let r = audit(&nl, &default_audit_grid()).unwrap();
        let c = r.check(Hypothesis::Monotonicity).unwrap();
        assert!(!c.passed);
        let w = c.witness.unwrap();
        assert!(w.abs() > 1.0 / libm::sqrt(3.0));
    }

    #[test]
    fn audit_constant_fails_vanishing() {
        let nl = Nonlinearity::custom(|_| 1.0, 1.5).with_primitive(|s| s);
        let r = audit(&nl, &default_audit_grid()).unwrap();
        assert!(!r.check(Hypothesis::VanishingAtZero).unwrap().passed);
    }

    #[test]
    fn audit_detects_jump() {
        let nl = Nonlinearity::custom(|s| if s > 1.0 { s + 1.0 } else { s }, 1.5);
        let r = audit(&nl, &default_audit_grid()).unwrap();
        assert!(!r.check(Hypothesis::Continuity).unwrap().passed);
    }

    #[test]
    fn audit_rejects_bad_grid() {
        let nl = Nonlinearity::power(1.5).unwrap();
        assert!(audit(&nl, &[]).is_err());
        assert!(audit(&nl, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn non_strict_custom_warns() {
        let nl = Nonlinearity::custom(|s| if s.abs() < 0.5 { 0.0 } else { s - 0.5 * s.signum() }, 1.5);
        let r = audit(&nl, &default_audit_grid()).unwrap();
        assert!(r.check(Hypothesis::Monotonicity).unwrap().passed);
        assert!(!r.warnings.is_empty());
    }
}
