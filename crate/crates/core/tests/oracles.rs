//! Constant-weight closed forms: for `w₀ ≡ c` the constants
//! `u = ½ ln x±`, `x± = (1 ± √(1 − 4t²c)) / 2`, solve the discrete equation
//! exactly.

use hypgauss_core::geometry::{degeneration_radius, lambda_distance};
use hypgauss_core::solver::first_eigenpair;
use hypgauss_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn x_minus(t: f64) -> f64 {
    (1.0 - (1.0 - 4.0 * t * t).sqrt()) / 2.0
}

fn x_plus(t: f64) -> f64 {
    (1.0 + (1.0 - 4.0 * t * t).sqrt()) / 2.0
}

fn mesh(level: usize) -> SurfaceMesh {
    build_mesh(&BolzaDomain::new(), level).unwrap()
}

#[test]
fn zero_parameter_solution_is_totally_geodesic() {
    let m = mesh(3);
    let n = m.n_canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u0: Vec<f64> = (0..n).map(|_| 0.3 * rng.gen_range(-1.0..1.0)).collect();
    let sol = newton_solve(&u0, 0.0, &m, &vec![1.0; n], &NewtonOptions::default()).unwrap();
    assert!(sol.converged);
    assert!(sol.sup_norm() <= 1e-9);
}

#[test]
fn constant_branch_first_eigenvalues() {
    let m = mesh(2);
    let n = m.n_canonical();
    for (c, t) in [(1.0f64, 0.3f64), (2.0, 0.2), (0.5, 0.6)] {
        let w0 = vec![c; n];
        let d = (1.0 - 4.0 * t * t * c).sqrt();
        for (x, sign) in [((1.0 + d) / 2.0, 1.0), ((1.0 - d) / 2.0, -1.0)] {
            let u = vec![0.5 * f64::ln(x); n];
            let (mu1, _) = first_eigenpair(&u, t, &m, &w0, None).unwrap();
            assert!((mu1 - sign * 2.0 * d).abs() < 1e-6, "c {c} t {t}: {mu1}");
        }
    }
}

#[test]
fn branch_through_fold_and_blowup_trend() {
    let m = mesh(2);
    let n = m.n_canonical();
    let w0 = vec![1.0; n];
    let branch = continue_branch(&m, &w0, &StepControl::default()).unwrap();
    assert!((branch.fold_parameter.unwrap() - 0.5).abs() < 1e-6);
    assert_eq!(branch.mu1_sign_changes(), 1);
    let opts = NewtonOptions::default();
    let trend = blowup_trend(&branch, &[0.4, 0.2, 0.1], &m, &w0, &opts).unwrap();
    for (row, t) in trend.unstable.iter().zip([0.4, 0.2, 0.1]) {
        assert_eq!(row.t, t);
        assert!((row.sup_norm - 0.5 * x_minus(t).ln().abs()).abs() < 1e-6);
        let exact = 1.0 + t * t / x_minus(t).powi(2);
        assert!((row.curvature_max_abs - exact).abs() < 1e-4);
        assert!(row.stabilized.abs() < 1.0);
    }
    assert!(trend.sup_norm_increasing && trend.curvature_increasing);
    for row in &trend.stable {
        assert!((row.sup_norm - 0.5 * x_plus(row.t).ln().abs()).abs() < 1e-6);
        assert!(row.lambda_max < 1.0);
    }
    assert!(trend.stable.windows(2).all(|w| w[1].sup_norm < w[0].sup_norm));

    // degeneration radius shrinks as λ grows along the lower branch
    let mut last: Option<(f64, f64)> = None;
    for p in branch.unstable_points().iter().step_by(5) {
        let rep = curvature_report(&p.solution, &m, &w0).unwrap();
        let r = degeneration_radius(&rep).unwrap_or(f64::INFINITY);
        if let Some((lm, lr)) = last {
            if rep.lambda_max >= lm {
                assert!(r <= lr);
            }
        }
        last = Some((rep.lambda_max, r));
    }
}

#[test]
fn two_constant_solutions_have_distinct_curvatures() {
    let m = mesh(2);
    let n = m.n_canonical();
    let w0 = vec![1.0; n];
    let opts = NewtonOptions::default();
    let up = newton_solve(&vec![0.0; n], 0.4, &m, &w0, &opts).unwrap();
    let lo = mountain_pass_solve(&up, &m, &w0, &MountainPassOptions::default()).unwrap();
    assert!(lo.solution.u_max() < up.u_min());
    let (a, b) = (curvature_report(&up, &m, &w0).unwrap(), curvature_report(&lo.solution, &m, &w0).unwrap());
    assert!((lambda_distance(&a, &b) - 1.5).abs() < 1e-9);
    let r = degeneration_radius(&b).unwrap();
    assert!((r - 0.5f64.atanh()).abs() < 1e-8);
}
