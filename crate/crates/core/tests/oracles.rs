//! Closed-form and analytic checks of the fibering map and the certificates.

use nehari_core::bv::bv_norm;
use nehari_core::fibering::{nehari_residual, phi, FiberingMap, ProblemSpec};
use nehari_core::ground_state::{random_direction, reduced_objective, solve, SolverConfig};
use nehari_core::verification::{el_certificate, subdiff_check};
use nehari_core::{DiscreteDomain, Error, Nonlinearity, ScalarField, TvFlavor};

fn moment(w: &ScalarField, p: f64) -> f64 {
    w.domain().cell_area() * w.values().iter().map(|v| v.abs().powf(p)).sum::<f64>()
}

fn one_laplacian(n: usize, p: f64) -> ProblemSpec {
    ProblemSpec::one_laplacian(DiscreteDomain::unit_square(n).unwrap(), Nonlinearity::power(p).unwrap(), TvFlavor::Isotropic)
}

/// `t_w 2^k` for `k = −20..20`; the roots of unit-norm directions range over
/// many decades, so the sweep is centered on the root found by bisection.
fn sweep(t_w: f64) -> Vec<f64> {
    (-20..=20).map(|k| t_w * 2f64.powi(k)).collect()
}

#[test]
fn projection_matches_closed_form() {
    for p in [1.1, 1.5, 1.9] {
        let spec = one_laplacian(12, p);
        for k in 0..50 {
            let w = random_direction(&spec, 42, k).scaled(0.3 + k as f64 * 0.1);
            let expected = (bv_norm(&w, TvFlavor::Isotropic) / moment(&w, p)).powf(1.0 / (p - 1.0));
            let fib = FiberingMap::new(&spec, &w).unwrap();
            let root = fib.nehari_project(1e-10).unwrap();
            assert!((root.t_w - expected).abs() <= 1e-9 * expected, "p={p} k={k}: {} vs {expected}", root.t_w);
            assert_eq!(fib.sign_changes(&sweep(root.t_w)).unwrap(), 1);
            let (lo, hi) = root.bracket;
            assert!(fib.g_deriv(lo).unwrap() > 0.0 || lo == hi);
            assert!(fib.g_deriv(hi).unwrap() < 0.0 || lo == hi);
        }
    }
}

#[test]
fn stated_root_example() {
    // ‖w‖ = 4 and h² Σ |w|^1.5 = 1 on one unit cell: w = 1, trace 4.
    let d = DiscreteDomain::new(1, 1, 1.0).unwrap();
    let spec = ProblemSpec::one_laplacian(d, Nonlinearity::power(1.5).unwrap(), TvFlavor::Isotropic);
    let w = ScalarField::constant(d, 1.0);
    let root = FiberingMap::new(&spec, &w).unwrap().nehari_project(1e-12).unwrap();
    assert!((root.t_w - 16.0).abs() <= 1e-10);
}

#[test]
fn gamma_closed_form_example() {
    // ‖w‖ = 1 and h² Σ |w|^1.5 = 1: γ(t) = t − t^1.5/1.5 peaks at t = 1.
    let d = DiscreteDomain::new(1, 1, 1.0).unwrap();
    let spec = ProblemSpec::one_laplacian(d, Nonlinearity::power(1.5).unwrap(), TvFlavor::Isotropic);
    let w = ScalarField::constant(d, 0.25);
    let scale = moment(&w, 1.5);
    let w = w.scaled(1.0 / scale.powf(1.0 / 1.5));
    let norm = bv_norm(&w, TvFlavor::Isotropic);
    let fib = FiberingMap::new(&spec, &w).unwrap();
    for t in [0.5, 1.0, 2.0, 7.0] {
        let expected = t * norm - t.powf(1.5) / 1.5 * moment(&w, 1.5);
        assert!((fib.gamma(t).unwrap() - expected).abs() < 1e-12);
    }
    let big: Vec<f64> = (10..20).map(|k| fib.gamma(2f64.powi(k)).unwrap()).collect();
    assert!(big.windows(2).all(|p| p[1] < p[0]));
}

#[test]
fn mountain_pass_and_ray_maximality() {
    for p in [1.1, 1.5, 1.9] {
        let spec = one_laplacian(10, p);
        for k in 0..50 {
            let w = random_direction(&spec, 7, k);
            let fib = FiberingMap::new(&spec, &w).unwrap();
            let t_w = fib.nehari_project(1e-10).unwrap().t_w;
            let top = fib.gamma(t_w).unwrap();
            assert!(top > spec.phi_at_zero());
            for j in 0..1000 {
                let t = t_w * 10f64.powf(-4.0 + 8.0 * j as f64 / 999.0);
                assert!(fib.gamma(t).unwrap() <= top + 1e-10, "p={p} k={k} t={t}");
            }
        }
    }
}

#[test]
fn mean_curvature_random_directions_have_one_root() {
    let d = DiscreteDomain::unit_square(10).unwrap();
    for lambda in [1.0, 0.25, 0.01] {
        let spec = ProblemSpec::mean_curvature(d, Nonlinearity::power(1.5).unwrap(), lambda).unwrap();
        for k in 0..50 {
            let w = random_direction(&spec, 5, k);
            let fib = FiberingMap::new(&spec, &w).unwrap();
            let root = fib.nehari_project(1e-10).unwrap();
            assert_eq!(fib.sign_changes(&sweep(root.t_w)).unwrap(), 1, "lambda={lambda} k={k}");
            assert!(fib.gamma(root.t_w).unwrap() > spec.phi_at_zero());
            assert!(nehari_residual(&spec, &w.scaled(root.t_w)).unwrap() <= 1e-8);
        }
    }
}

#[test]
fn residual_below_the_nehari_point() {
    // On the ray through a unit-norm w, u = s t_w w has I₀'(u)u = s t_w and
    // I'(u)u = s^p t_w, so the residual is 1 − s^(p−1) while s t_w ≥ 1.
    let spec = one_laplacian(6, 1.5);
    let w = random_direction(&spec, 1, 0);
    let t_w = FiberingMap::new(&spec, &w).unwrap().nehari_project(1e-12).unwrap().t_w;
    for s in [0.5, 0.2, 0.1] {
        assert!(s * t_w >= 1.0);
        let r = nehari_residual(&spec, &w.scaled(s * t_w)).unwrap();
        assert!((r - (1.0 - s.powf(0.5))).abs() < 1e-9, "s={s}: {r}");
    }
    // Below unit norm the max(1, ·) normalization makes the residual vanish with u.
    let tiny = w.scaled(1e-9);
    assert!(nehari_residual(&spec, &tiny).unwrap() < 1e-8);
}

#[test]
fn mean_curvature_phi_at_zero_is_area() {
    let d = DiscreteDomain::new(3, 5, 0.4).unwrap();
    let spec = ProblemSpec::mean_curvature(d, Nonlinearity::power(1.5).unwrap(), 0.5).unwrap();
    let z = ScalarField::zeros(d);
    assert_eq!(phi(&spec, &z), d.area());
    let w = random_direction(&spec, 0, 0);
    assert_eq!(FiberingMap::new(&spec, &w).unwrap().gamma(0.0).unwrap(), d.area());
}

#[test]
fn one_cell_problem_is_solved_in_closed_form() {
    let d = DiscreteDomain::new(1, 1, 1.0).unwrap();
    for p in [1.1, 1.5, 1.9] {
        let spec = ProblemSpec::one_laplacian(d, Nonlinearity::power(p).unwrap(), TvFlavor::Isotropic);
        let c = 4f64.powf(1.0 / (p - 1.0));
        let result = solve(&spec, &SolverConfig { restarts: 2, ..SolverConfig::default() }).unwrap();
        let found = result.u_star.values()[0].abs();
        assert!((found - c).abs() <= 1e-8 * c, "p={p}: {found} vs {c}");
        assert!(result.certificate.subdiff_min_slack >= -1e-7 * c);
        let cert = el_certificate(&result.u_star, spec.nonlinearity(), TvFlavor::Isotropic, 1000, 1e-10).unwrap();
        assert!(cert.residual_norm <= 1e-8 * c.powf(p - 1.0));
        assert!(cert.boundary_flux.iter().all(|s| s.abs() == 1.0));
    }
}

#[test]
fn reduced_objective_is_bounded_below_by_mountain_pass_level() {
    let spec = one_laplacian(8, 1.5);
    for k in 0..20 {
        let w = random_direction(&spec, 3, k);
        let (psi, _) = reduced_objective(&spec, &w, 0.0).unwrap();
        assert!(psi > spec.phi_at_zero());
    }
}

#[test]
fn certificate_requires_nonzero_field() {
    let spec = one_laplacian(4, 1.5);
    let z = ScalarField::zeros(*spec.domain());
    assert_eq!(subdiff_check(&spec, &z, 10, 0).unwrap_err(), Error::ZeroDirection);
}
