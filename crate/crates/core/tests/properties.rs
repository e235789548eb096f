use elliptic_qybe::dd::e;
use elliptic_qybe::exact::{exact_rank, ExactMatrix};
use elliptic_qybe::linalg::{
    image, kron, log_det, max_principal_angle, rank_info, rel_residual, subspace_intersect, subspace_sum, CMatrix,
    RankPolicy, Subspace,
};
use elliptic_qybe::report::Report;
use elliptic_qybe::rmatrix::{basis_ops, det_closed_form, r_matrix, AlgebraParams};
use elliptic_qybe::theta::ThetaContext;
use elliptic_qybe::verify::{CheckResult, Config, Status};
use num_complex::Complex64;
use proptest::prelude::*;
use std::collections::BTreeMap;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

fn eta() -> impl Strategy<Value = Complex64> {
    (-0.5..0.5f64, 0.8..1.6f64).prop_map(|(x, y)| c(x, y))
}

fn point() -> impl Strategy<Value = Complex64> {
    (-0.6..0.6f64, -0.6..0.6f64).prop_map(|(x, y)| c(x, y))
}

fn nk() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![
        Just((2, 1)),
        Just((3, 1)),
        Just((3, 2)),
        Just((4, 1)),
        Just((4, 3)),
        Just((5, 2))
    ]
}

fn params(n: usize, k: usize) -> AlgebraParams {
    AlgebraParams::generic(n, k).unwrap()
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), rows * cols)
        .prop_map(move |v| CMatrix::from_iterator(rows, cols, v.into_iter().map(|(x, y)| c(x, y))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn theta_quasi_periodic(eta in eta(), z in point()) {
        let th = ThetaContext::new(3, eta).unwrap();
        let t = th.theta1(z).unwrap();
        prop_assert!(rel(th.theta1(z + 1.0).unwrap(), t) < 1e-10);
        prop_assert!(rel(th.theta1(z + eta).unwrap(), -e(-z) * t) < 1e-10);
    }

    #[test]
    fn theta_alpha_shifts(eta in eta(), z in point(), n in 2usize..=5, a in 0i64..5) {
        let th = ThetaContext::new(n, eta).unwrap();
        let nf = n as f64;
        let lhs = th.theta_alpha(a, z + 1.0 / nf).unwrap();
        prop_assert!(rel(lhs, e(c(a as f64 / nf, 0.0)) * th.theta_alpha(a, z).unwrap()) < 1e-10);
        let lhs = th.theta_alpha(a, z + eta / nf).unwrap();
        let rhs = e(-z - 0.5 / nf + eta * ((nf - 1.0) / (2.0 * nf))) * th.theta_alpha(a + 1, z).unwrap();
        prop_assert!(rel(lhs, rhs) < 1e-10);
        prop_assert!(rel(th.theta_alpha(a + n as i64, z).unwrap(), th.theta_alpha(a, z).unwrap()) < 1e-12);
    }

    #[test]
    fn rank_ignores_scale(m in matrix(6, 2), w in matrix(2, 7), s in 1e-6..1e6f64, phase in 0.0..std::f64::consts::TAU) {
        let p = RankPolicy::default();
        let a = &m * &w;
        let r = rank_info(&a, &p);
        prop_assert_eq!(r.rank, 2);
        let scaled = &a * Complex64::from_polar(s, phase);
        prop_assert_eq!(rank_info(&scaled, &p).rank, r.rank);
    }

    #[test]
    fn span_ignores_column_mixing(m in matrix(8, 3), g in matrix(3, 3)) {
        let p = RankPolicy::default();
        prop_assume!(g.determinant().norm() > 1e-2);
        let a = image(&m, &p).unwrap();
        let b = image(&(&m * &g), &p).unwrap();
        prop_assert_eq!(a.dim(), 3);
        prop_assert!(max_principal_angle(&a, &b) < 1e-8);
    }

    /// `A ∩ (B + C) = B + (A ∩ C)` whenever `B ⊂ A`.
    #[test]
    fn modular_law(x in matrix(7, 2), y in matrix(7, 2), z in matrix(7, 3)) {
        let p = RankPolicy::default();
        let b = image(&x, &p).unwrap();
        let mut ab = CMatrix::zeros(7, 4);
        ab.view_mut((0, 0), (7, 2)).copy_from(&x);
        ab.view_mut((0, 2), (7, 2)).copy_from(&y);
        let a = image(&ab, &p).unwrap();
        let cc = image(&z, &p).unwrap();
        let lhs = subspace_intersect(&[&a, &subspace_sum(&[&b, &cc], &p).unwrap()], &p).unwrap();
        let rhs = subspace_sum(&[&b, &subspace_intersect(&[&a, &cc], &p).unwrap()], &p).unwrap();
        prop_assert_eq!(lhs.dim(), rhs.dim());
        prop_assert!(max_principal_angle(&lhs, &rhs) < 1e-8);
    }

    #[test]
    fn exact_rank_matches_numeric(v in proptest::collection::vec(-3i64..=3, 20), r in 1usize..=4) {
        let low = ExactMatrix::from_i64(5, r, &v[..5 * r]);
        let high = ExactMatrix::from_i64(r, 4, &v[..4 * r]);
        let m = low.mul(&high);
        let numeric = CMatrix::from_fn(5, 4, |i, j| c(m.get(i, j).to_string().parse().unwrap(), 0.0));
        prop_assert_eq!(exact_rank(&m), rank_info(&numeric, &RankPolicy::default()).rank);
    }

    #[test]
    fn r_unitarity((n, k) in nk(), z in point()) {
        let p = params(n, k);
        let prod = r_matrix(&p, z).unwrap() * r_matrix(&p, -z).unwrap();
        let scalar = prod.trace() / Complex64::from((n * n) as f64);
        let id = CMatrix::identity(n * n, n * n) * scalar;
        prop_assert!(rel_residual(&prod, &id) < 1e-9);
    }

    #[test]
    fn r_at_zero_is_identity((n, k) in nk()) {
        let p = params(n, k);
        prop_assert!(rel_residual(&r_matrix(&p, c(0.0, 0.0)).unwrap(), &CMatrix::identity(n * n, n * n)) < 1e-12);
    }

    #[test]
    fn qybe2(n in 2usize..=3, u in point(), v in point()) {
        let p = params(n, 1);
        let id = CMatrix::identity(n, n);
        let r = |z| r_matrix(&p, z).unwrap();
        let l = kron(&r(u), &id) * kron(&id, &r(u + v)) * kron(&r(v), &id);
        let rr = kron(&id, &r(v)) * kron(&r(u + v), &id) * kron(&id, &r(u));
        prop_assert!(rel_residual(&l, &rr) < 1e-8);
    }

    #[test]
    fn heisenberg_symmetry((n, k) in nk(), z in point()) {
        let p = params(n, k);
        let o = basis_ops(n);
        let r = r_matrix(&p, z).unwrap();
        for g in [&o.s, &o.t] {
            let gg = kron(g, g);
            prop_assert!(rel_residual(&(&gg * &r), &(&r * &gg)) < 1e-9);
        }
    }

    #[test]
    fn determinant_formula((n, k) in prop_oneof![Just((2, 1)), Just((3, 1)), Just((3, 2)), Just((4, 1))], z in point()) {
        let p = params(n, k);
        let ratio = (log_det(&r_matrix(&p, z).unwrap()) - det_closed_form(&p, z).unwrap().ln()).exp();
        prop_assert!((ratio - 1.0).norm() < 1e-6);
    }

    #[test]
    fn report_round_trip(
        rows in proptest::collection::vec(("[a-z]{1,8}\\.[a-z_]{1,10}", -1e3..1e3f64, 0u8..4, proptest::option::of(1.0..1e16f64)), 0..6),
    ) {
        let results: Vec<CheckResult> = rows
            .into_iter()
            .map(|(name, x, s, gap)| CheckResult {
                name,
                params: BTreeMap::from([("x".to_string(), serde_json::json!(x))]),
                expected: serde_json::json!(0.0),
                observed: serde_json::json!(x),
                residual: x.abs(),
                tolerance: 1e-8,
                gap,
                status: [Status::Pass, Status::Fail, Status::Ambiguous, Status::Refused][s as usize],
                wall_time: 0.0,
                note: None,
            })
            .collect();
        let r = Report::new(Config::default(), results);
        let back = Report::from_json(&r.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert_eq!(r.summary.total, r.results.len());
        let s = r.summary;
        prop_assert_eq!(s.pass + s.fail + s.ambiguous + s.refused, s.total);
    }
}

#[test]
fn subspace_helpers_agree_on_trivial_cases() {
    let p = RankPolicy::default();
    let a = Subspace::ambient(4);
    let z = Subspace::zero(4);
    assert_eq!(subspace_intersect(&[&a, &z], &p).unwrap().dim(), 0);
    assert_eq!(subspace_sum(&[&a, &z], &p).unwrap().dim(), 4);
}
