use edgeflow_bulk::bulkfb::{
    band_energies, chern_number_fhs, find_quadratic_degeneracy, locate_dirac_points, measure_local_gap, solve_bloch_bands, solve_bloch_bands_dense, BulkModel, Selector,
};
use edgeflow_bulk::effparams::{compute_effective_params, deflated_resolvent_solve, select_degenerate_basis, Which};
use edgeflow_core::lattice::{m_point, V2};
use edgeflow_core::linalg::{axpy, dot, norm};
use edgeflow_core::media::{Deformation, MediumSpec};
use edgeflow_core::C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn undeformed(delta: f64) -> MediumSpec {
    MediumSpec::paper(Deformation::identity(), delta)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol * (1.0 + x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bloch_operators_are_hermitian(half in 4usize..8, k1 in -PI..PI, k2 in -PI..PI, delta in 0.0f64..0.3, s in 0usize..3, tilt in any::<bool>()) {
        let d = if tilt { Deformation::tilt(PI / 100.0).unwrap() } else { Deformation::identity() };
        let model = BulkModel::new(&MediumSpec::paper(d, delta), 2 * half).unwrap();
        let sel = [Selector::Plus, Selector::Minus, Selector::Unperturbed][s];
        let k = V2::new(k1, k2);
        prop_assert!(model.operator(k, sel).matrix.hermitian_defect() < 1e-12);
        for dirs in [&[0][..], &[1], &[0, 1]] {
            prop_assert!(model.k_derivative(k, dirs, sel).hermitian_defect() < 1e-12);
        }
    }

    #[test]
    fn unperturbed_dispersion_is_even(k1 in -PI..PI, k2 in -PI..PI) {
        let model = BulkModel::new(&undeformed(0.0), 12).unwrap();
        let k = V2::new(k1, k2);
        let p = band_energies(&model.operator(k, Selector::Unperturbed), 8);
        let m = band_energies(&model.operator(-k, Selector::Unperturbed), 8);
        prop_assert!(close(&p, &m, 1e-8), "{p:?} vs {m:?}");
    }

    #[test]
    fn conjugation_exchanges_the_two_media(k1 in -PI..PI, k2 in -PI..PI, delta in 0.01f64..0.3) {
        let model = BulkModel::new(&undeformed(delta), 12).unwrap();
        let k = V2::new(k1, k2);
        let p = band_energies(&model.operator(k, Selector::Plus), 8);
        let m = band_energies(&model.operator(-k, Selector::Minus), 8);
        prop_assert!(close(&p, &m, 1e-8), "{p:?} vs {m:?}");
    }

    #[test]
    fn periodic_gauge_is_reciprocal_periodic(k1 in -PI..PI, k2 in -PI..PI, g1 in -1i32..=1, g2 in -1i32..=1) {
        let model = BulkModel::new(&undeformed(0.1), 12).unwrap();
        let k = V2::new(k1, k2);
        let shifted = k + V2::new(2.0 * PI * g1 as f64, 2.0 * PI * g2 as f64);
        let p = band_energies(&model.operator(k, Selector::Plus), 8);
        let q = band_energies(&model.operator(shifted, Selector::Plus), 8);
        prop_assert!(close(&p, &q, 1e-8), "{p:?} vs {q:?}");
    }
}

#[test]
fn sparse_bands_match_dense_oracle() {
    for (n, k) in [(16, V2::new(0.3, -1.2)), (24, m_point()), (20, V2::new(PI, 0.0))] {
        let model = BulkModel::new(&undeformed(0.1), n).unwrap();
        let op = model.operator(k, Selector::Plus);
        let sparse = solve_bloch_bands(&model, &op, 8).unwrap();
        let dense = solve_bloch_bands_dense(&op, 8);
        assert!(close(&sparse.energies, &dense.energies, 1e-8), "{:?} vs {:?}", sparse.energies, dense.energies);
        for (i, u) in sparse.vectors.iter().enumerate() {
            for (j, v) in sparse.vectors.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(u, v) - want).norm() < 1e-8);
            }
        }
    }
}

struct Quadratic {
    model: BulkModel,
    deg: edgeflow_bulk::bulkfb::DegeneracyPoint,
    basis: edgeflow_bulk::effparams::DegenerateBasis,
    params: edgeflow_bulk::effparams::EffectiveParams,
}

fn quadratic(n: usize) -> Quadratic {
    let medium = undeformed(0.0);
    let deg = find_quadratic_degeneracy(&medium, 0, n).unwrap();
    let model = BulkModel::new(&medium, n).unwrap();
    let basis = select_degenerate_basis(&model, &deg, Which::M).unwrap();
    let params = compute_effective_params(&model, &deg, &basis).unwrap();
    Quadratic { model, deg, basis, params }
}

#[test]
fn quadratic_degeneracy_sits_at_m_between_second_and_third_band() {
    let q = quadratic(16);
    assert_eq!(q.deg.bands, (1, 2));
    assert!((q.deg.k_star - m_point()).norm() < 1e-12);
    let e = band_energies(&q.model.operator(m_point(), Selector::Unperturbed), 4);
    assert!((e[2] - e[1]).abs() < 1e-6 * (e[3] - e[0]));
    assert!((q.deg.e_star - 0.5 * (e[1] + e[2])).abs() < 1e-9);
}

#[test]
fn alpha_matches_finite_difference_band_curvature() {
    let q = quadratic(16);
    let alpha = q.params.alpha().unwrap();
    let eps = 4e-3;
    let split = |dir: V2| {
        let e = band_energies(&q.model.operator(m_point() + dir * eps, Selector::Unperturbed), 3);
        ((e[1] + e[2] - 2.0 * q.deg.e_star) / (2.0 * eps * eps), (e[2] - e[1]) / (2.0 * eps * eps))
    };
    let (mean_x, half_x) = split(V2::new(1.0, 0.0));
    let (mean_d, half_d) = split(V2::new(1.0, 1.0) / 2f64.sqrt());
    let tol = 1e-3 * (1.0 + alpha.iter().fold(0.0f64, |m, a| m.max(a.abs())));
    assert!((mean_x - (1.0 - alpha[0])).abs() < tol, "{mean_x} vs {}", 1.0 - alpha[0]);
    assert!((mean_d - (1.0 - alpha[0])).abs() < tol, "{mean_d} vs {}", 1.0 - alpha[0]);
    assert!((half_x - alpha[2].abs()).abs() < tol, "{half_x} vs {}", alpha[2]);
    assert!((half_d - alpha[1].abs()).abs() < tol, "{half_d} vs {}", alpha[1]);
}

#[test]
fn theta_matches_first_order_splitting() {
    let q = quadratic(16);
    let delta = 1e-3;
    let gap = measure_local_gap(&undeformed(0.0), &q.deg, delta, 16).unwrap();
    let want = 2.0 * q.params.theta.abs() * delta * delta;
    assert!((gap - want).abs() < 1e-4 * want, "{gap} vs {want}");
}

#[test]
fn m_point_basis_has_vanishing_first_order_terms_and_real_outputs() {
    let q = quadratic(16);
    assert!(q.params.first_order_defect < 1e-8, "{}", q.params.first_order_defect);
    assert!(q.params.imag_residue < 1e-8, "{}", q.params.imag_residue);
}

#[test]
fn deflated_resolvent_inverts_on_the_complement() {
    let q = quadratic(16);
    let h = q.model.operator(q.basis.k, Selector::Unperturbed).matrix;
    let mut f: Vec<C64> = (0..h.n).map(|j| C64::new((0.7 * j as f64).sin(), (0.3 * j as f64).cos())).collect();
    for b in [&q.basis.phi1, &q.basis.phi2] {
        let c = dot(b, &f);
        axpy(&mut f, -c, b);
    }
    let u = deflated_resolvent_solve(&h, q.basis.e_star, &q.basis, &f).unwrap();
    let hu = h.matvec(&u);
    let r: Vec<C64> = hu.iter().zip(&u).zip(&f).map(|((a, b), c)| a - b * q.basis.e_star - c).collect();
    assert!(norm(&r) < 1e-9 * norm(&f), "{}", norm(&r) / norm(&f));
    assert!(dot(&q.basis.phi1, &u).norm().max(dot(&q.basis.phi2, &u).norm()) < 1e-9 * norm(&u));
}

#[test]
fn chern_numbers_flip_under_conjugation() {
    let medium = undeformed(0.0);
    let plus = chern_number_fhs(&medium, 0.1, Selector::Plus, 2, 10, 12).unwrap();
    let minus = chern_number_fhs(&medium, 0.1, Selector::Minus, 2, 10, 12).unwrap();
    assert!((plus.raw - plus.chern as f64).abs() < 1e-6);
    assert!((minus.raw - minus.chern as f64).abs() < 1e-6);
    assert_eq!(plus.chern, -minus.chern);
    assert_eq!((plus.chern - minus.chern).abs(), 2);
}

#[test]
fn lowest_band_of_the_unperturbed_medium_is_trivial() {
    let r = chern_number_fhs(&undeformed(0.0), 0.0, Selector::Unperturbed, 1, 8, 12).unwrap();
    assert_eq!(r.chern, 0);
}

#[test]
fn dirac_pair_is_inversion_related_with_opposite_velocities() {
    let medium = MediumSpec::paper(Deformation::tilt(PI / 100.0).unwrap(), 0.0);
    let deg = locate_dirac_points(&medium, 1, 16).unwrap();
    let wrapped = deg.k_star + deg.k_minus - V2::new(2.0 * PI, 2.0 * PI);
    assert!(wrapped.norm() < 1e-6, "D⁺ + D⁻ − 2M = {wrapped:?}");
    let model = BulkModel::new(&medium, 16).unwrap();
    let gp = compute_effective_params(&model, &deg, &select_degenerate_basis(&model, &deg, Which::DPlus).unwrap()).unwrap();
    let gm = compute_effective_params(&model, &deg, &select_degenerate_basis(&model, &deg, Which::DMinus).unwrap()).unwrap();
    let (a, b) = (gp.gamma().unwrap(), gm.gamma().unwrap());
    for l in 0..3 {
        assert!((a[l] + b[l]).norm() < 1e-8, "γ{l}: {:?} vs {:?}", a[l], b[l]);
    }
    assert!((gp.theta - gm.theta).abs() < 1e-8 * gp.theta.abs());
}
