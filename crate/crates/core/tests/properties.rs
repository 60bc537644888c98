//! Property checks over randomly generated operators and problems.

mod common;

use proptest::prelude::*;

use lqflat::polymat::{rat, smith_form, PolyMatrix, RatPoly};
use lqflat::problem::LQProblem;
use lqflat::qmat::QMatrix;
use lqflat::turnpike::{analyze, fit_envelope, AnalyzeOptions, Pipeline};

use common::{double_integrator, regular_battery};

fn poly_matrix(m: usize, coeffs: &[i64], degree: usize) -> PolyMatrix {
    PolyMatrix::from_fn(m, m, |i, j| {
        let start = (i * m + j) * (degree + 1);
        RatPoly::from_i64(&coeffs[start..start + degree + 1])
    })
}

fn coeff_vec(len: usize) -> impl Strategy<Value = Vec<i64>> {
    proptest::collection::vec(-3i64..=3, len)
}

/// Lower-unitriangular polynomial matrix: unimodular by construction.
fn unimodular(m: usize, coeffs: &[i64]) -> PolyMatrix {
    let mut k = 0;
    PolyMatrix::from_fn(m, m, |i, j| {
        if i == j {
            RatPoly::one()
        } else if i > j {
            k += 2;
            RatPoly::from_i64(&coeffs[k - 2..k])
        } else {
            RatPoly::zero()
        }
    })
}

fn max_state_gap(a: &Pipeline, b: &Pipeline, map: impl Fn(&nalgebra::DVector<f64>) -> nalgebra::DVector<f64>) -> f64 {
    let horizon = a.problem.horizon;
    let (_, ta) = a.solve_on_grid(horizon).unwrap();
    let (_, tb) = b.solve_on_grid(horizon).unwrap();
    ta.x.iter()
        .zip(&tb.x)
        .map(|(xa, xb)| (map(xa) - xb).amax())
        .fold(0.0, f64::max)
}

fn mul_rows(m: &QMatrix, scale: &[i64]) -> QMatrix {
    QMatrix::from_fn(m.rows(), m.cols(), |i, j| m.row(i)[j].clone() * rat(scale[i]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adjoint_is_an_antiautomorphism(m in 1usize..=3, a in coeff_vec(27), b in coeff_vec(27)) {
        let p = poly_matrix(m, &a, 2);
        let q = poly_matrix(m, &b, 2);
        prop_assert_eq!(p.adjoint().adjoint(), p.clone());
        prop_assert_eq!((&p * &q).adjoint(), &q.adjoint() * &p.adjoint());
    }

    #[test]
    fn smith_factors_are_unimodular_invariants(
        m in 1usize..=3,
        f in coeff_vec(27),
        u in coeff_vec(6),
        v in coeff_vec(6),
    ) {
        let e = poly_matrix(m, &f, 2);
        let moved = &(&unimodular(m, &u) * &e) * &unimodular(m, &v).transpose();
        prop_assert_eq!(smith_form(&e).factors, smith_form(&moved).factors);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn boundary_row_scaling_leaves_solution_unchanged(
        data in proptest::collection::vec(-3i64..=3, 4),
        scale in proptest::collection::vec(prop_oneof![-3i64..=-1, 1i64..=3], 4),
    ) {
        let s: Vec<String> = data.iter().map(|v| v.to_string()).collect();
        let p = double_integrator("1", "2", "1", [&s[0], &s[1]], [&s[2], &s[3]], 8.0);
        let mut scaled = p.clone();
        scaled.m0 = mul_rows(&p.m0, &scale);
        scaled.m1 = mul_rows(&p.m1, &scale);
        scaled.gamma = p.gamma.iter().zip(&scale).map(|(g, k)| g * rat(*k)).collect();
        let opts = AnalyzeOptions::default();
        let a = Pipeline::build(&p, &opts).unwrap();
        let b = Pipeline::build(&scaled, &opts).unwrap();
        prop_assert!(max_state_gap(&a, &b, |x| x.clone()) <= 1e-9);
    }

    #[test]
    fn state_coordinates_do_not_matter(t in proptest::collection::vec(-2i64..=2, 4), data in coeff_vec(4)) {
        let tm = QMatrix::from_i64(2, 2, &t);
        prop_assume!(tm.rank() == 2);
        let ti = tm.inverse().unwrap();
        let s: Vec<String> = data.iter().map(|v| v.to_string()).collect();
        let p = double_integrator("1", "1", "1", [&s[0], &s[1]], [&s[2], &s[3]], 8.0);
        let moved = LQProblem {
            a: tm.try_mul(&p.a).unwrap().try_mul(&ti).unwrap(),
            b: tm.try_mul(&p.b).unwrap(),
            q: ti.transpose().try_mul(&p.q).unwrap().try_mul(&ti).unwrap(),
            m0: p.m0.try_mul(&ti).unwrap(),
            m1: p.m1.try_mul(&ti).unwrap(),
            x_ref: tm.mul_vec(&p.x_ref).unwrap(),
            ..p.clone()
        };
        let opts = AnalyzeOptions::default();
        let a = Pipeline::build(&p, &opts).unwrap();
        let b = Pipeline::build(&moved, &opts).unwrap();
        prop_assert_eq!(&a.el.smith.factors, &b.el.smith.factors);
        let tf = tm.to_f64();
        prop_assert!(max_state_gap(&a, &b, |x| &tf * x) <= 1e-8);
    }

    #[test]
    fn analysis_is_deterministic(data in coeff_vec(4)) {
        let s: Vec<String> = data.iter().map(|v| v.to_string()).collect();
        let p = double_integrator("1", "1", "1", [&s[0], &s[1]], [&s[2], &s[3]], 12.0);
        let opts = AnalyzeOptions::default();
        prop_assert_eq!(analyze(&p, &opts).unwrap().serialize(), analyze(&p, &opts).unwrap().serialize());
    }
}

#[test]
fn envelope_bounds_battery_trajectories() {
    for case in regular_battery() {
        let opts = AnalyzeOptions::default();
        let pipe = Pipeline::build(&case.problem, &opts).unwrap();
        let (_, traj) = pipe.solve_on_grid(case.problem.horizon).unwrap();
        let fit = fit_envelope(&traj, pipe.certificate.gap, &opts).unwrap();
        let horizon = traj.horizon();
        for (t, d) in traj.grid.iter().zip(&traj.deviation) {
            let env = fit.c_fitted * ((-fit.mu_fitted * t).exp() + (-fit.mu_fitted * (horizon - t)).exp());
            assert!(*d <= 1.05 * env, "{}: t = {t}, {d} > {env}", case.name);
        }
        assert!((pipe.certificate.gap - case.mu0).abs() <= 1e-12 * case.mu0.max(1.0), "{}", case.name);
    }
}
