use edgeflow_core::lattice::{make_rational_edge, reparameterize_edge, Lattice2D, RationalEdge};
use edgeflow_core::linalg::residual;
use edgeflow_core::media::DomainWall;
use edgeflow_core::C64;
use edgeflow_effedge::essential::{dirac_edges_closed, scan_edges, schrodinger_edges_closed};
use edgeflow_effedge::{gap_bound_states_with, perturbation_slopes, BoundOpts, EffEdgeOperator, Kind};
use proptest::prelude::*;

fn lenient() -> BoundOpts {
    BoundOpts { strict: false, ..BoundOpts::default() }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn wall() -> impl Strategy<Value = DomainWall> {
    prop_oneof![
        (0.3f64..3.0).prop_map(|steepness| DomainWall::Tanh { steepness }),
        Just(DomainWall::Sign),
        (0.5f64..2.0, -5.0f64..5.0).prop_map(|(steepness, height)| DomainWall::TanhBump { steepness, height }),
        (1.0f64..4.0).prop_map(|l| DomainWall::MultiOdd { l }),
        (1.0f64..4.0).prop_map(|l| DomainWall::MultiEven { l }),
    ]
}

fn edge() -> impl Strategy<Value = RationalEdge> {
    (-4i64..=4, -4i64..=4)
        .prop_filter("primitive", |(m, n)| {
            let (mut a, mut b) = (m.abs(), n.abs());
            while b != 0 {
                (a, b) = (b, a % b);
            }
            a == 1
        })
        .prop_map(|(m, n)| make_rational_edge(m, n, Lattice2D::square()).unwrap())
}

fn odd_walls() -> Vec<DomainWall> {
    vec![DomainWall::Tanh { steepness: 1.0 }, DomainWall::Sign, DomainWall::MultiOdd { l: 3.0 }]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schrodinger_operators_are_hermitian(a0 in -1.0f64..3.0, a1 in -3.0f64..3.0, a2 in -3.0f64..3.0, theta in -4.0f64..4.0,
                                           e in edge(), w in wall(), kappa in -2.0f64..2.0) {
        let op = EffEdgeOperator::schrodinger([a0, a1, a2], theta, &e, w).with_domain(8.0, 64);
        prop_assert!(op.assemble(kappa).hermitian_defect() < 1e-12);
        prop_assert!(op.kappa_derivative(kappa).hermitian_defect() < 1e-12);
    }

    #[test]
    fn dirac_operators_are_hermitian(a in prop::array::uniform3(-2.0f64..2.0), b in prop::array::uniform3(-2.0f64..2.0),
                                     c in -2.0f64..2.0, plus in any::<bool>(), w in wall(), kappa in -2.0f64..2.0) {
        let kind = if plus { Kind::DiracPlus } else { Kind::DiracMinus };
        let op = EffEdgeOperator::dirac(kind, a, b, c, w).with_domain(8.0, 64);
        prop_assert!(op.assemble(kappa).hermitian_defect() < 1e-12);
        prop_assert!(op.kappa_derivative(kappa).hermitian_defect() < 1e-12);
    }

    #[test]
    fn schrodinger_closed_edges_match_the_scan(a1 in 0.2f64..3.0, a2 in 0.2f64..3.0, theta in -3.0f64..3.0, kappa in -2.0f64..2.0) {
        prop_assume!(theta.abs() > 0.1);
        let op = EffEdgeOperator::vertical([1.0, a1, a2], theta, DomainWall::Sign);
        let (lo, hi) = schrodinger_edges_closed(&op, kappa).unwrap();
        let (slo, shi) = scan_edges(&op, kappa).unwrap();
        let scale = 1.0 + lo.abs().max(hi.abs());
        prop_assert!((lo - slo).abs() < 1e-9 * scale && (hi - shi).abs() < 1e-9 * scale, "{lo} {hi} vs {slo} {shi}");
    }

    #[test]
    fn dirac_closed_edges_match_the_scan(a0 in -0.5f64..0.5, a1 in 0.6f64..2.0, a2 in -2.0f64..2.0,
                                         b in prop::array::uniform3(-1.5f64..1.5), c in 0.2f64..2.0, kappa in -2.0f64..2.0) {
        let op = EffEdgeOperator::dirac(Kind::DiracPlus, [a0, a1, a2], b, c, DomainWall::Sign);
        let (lo, hi) = dirac_edges_closed(&op, kappa).unwrap();
        let (slo, shi) = scan_edges(&op, kappa).unwrap();
        let scale = 1.0 + lo.abs().max(hi.abs());
        prop_assert!((lo - slo).abs() < 1e-8 * scale && (hi - shi).abs() < 1e-8 * scale, "{lo} {hi} vs {slo} {shi}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sigma1_pairs_the_spectrum_at_zero_kappa(a1 in 0.3f64..2.0, a2 in 0.5f64..2.0, theta in 0.5f64..3.0, w in 0usize..3) {
        let op = EffEdgeOperator::vertical([1.0, a1, a2], theta, odd_walls()[w].clone()).with_scaled_domain();
        let op = op.clone().with_domain(op.lx, 1024);
        let s = gap_bound_states_with(&op, 0.0, 16, &lenient()).unwrap();
        let a = op.assemble(0.0);
        for (wv, v) in s.gap_eigenvalues.iter().zip(&s.eigenvectors) {
            let flipped: Vec<C64> = v.chunks(2).flat_map(|c| [c[1], c[0]]).collect();
            prop_assert!(residual(&a, -wv, &flipped) < 1e-8);
            prop_assert!(wv.abs() > 1e-6);
        }
    }

    #[test]
    fn reparameterized_families_share_spectra(j in -3i64..=3, kappa in -1.0f64..1.0, a1 in 0.5f64..2.0, a2 in 0.5f64..2.0) {
        let e = RationalEdge::vertical();
        let base = EffEdgeOperator::schrodinger([1.0, a1, a2], 1.0, &e, DomainWall::Tanh { steepness: 1.0 }).with_domain(20.0, 1024);
        let other = EffEdgeOperator::schrodinger([1.0, a1, a2], 1.0, &reparameterize_edge(&e, j), DomainWall::Tanh { steepness: 1.0 }).with_domain(20.0, 1024);
        let p = sorted(gap_bound_states_with(&base, kappa, 16, &lenient()).unwrap().gap_eigenvalues);
        let q = sorted(gap_bound_states_with(&other, kappa, 16, &lenient()).unwrap().gap_eigenvalues);
        prop_assert_eq!(p.len(), q.len());
        for (x, y) in p.iter().zip(&q) {
            prop_assert!((x - y).abs() < 1e-8 * x.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn odd_walls_make_dirac_curves_antisymmetric(kappa in 0.1f64..1.5, plus in any::<bool>(), w in 0usize..2) {
        let kind = if plus { Kind::DiracPlus } else { Kind::DiracMinus };
        let op = EffEdgeOperator::dirac(kind, [0.3, 1.0, 1.0], [0.0, 0.0, 1.0], 0.5, odd_walls()[w].clone()).with_domain(40.0, 2048);
        let p = sorted(gap_bound_states_with(&op, kappa, 16, &lenient()).unwrap().gap_eigenvalues);
        let m = sorted(gap_bound_states_with(&op, -kappa, 16, &lenient()).unwrap().gap_eigenvalues);
        prop_assert_eq!(p.len(), m.len());
        for (x, y) in p.iter().zip(m.iter().rev()) {
            prop_assert!((x + y).abs() < 1e-7);
        }
    }
}

#[test]
fn slopes_agree_with_central_differences() {
    let op = EffEdgeOperator::vertical([1.0, 1.0, 1.0], 1.0, DomainWall::Tanh { steepness: 1.0 }).with_domain(20.0, 2048);
    let base = gap_bound_states_with(&op, 0.0, 16, &lenient()).unwrap();
    let slopes = perturbation_slopes(&op, &base).unwrap();
    assert!(slopes.len() >= 2);
    let h = 1e-3;
    let p = gap_bound_states_with(&op, h, 16, &lenient()).unwrap().gap_eigenvalues;
    let m = gap_bound_states_with(&op, -h, 16, &lenient()).unwrap().gap_eigenvalues;
    let near = |v: &[f64], w: f64| *v.iter().min_by(|a, b| (*a - w).abs().partial_cmp(&(*b - w).abs()).unwrap()).unwrap();
    for s in &slopes {
        let fd = (near(&p, s.omega) - near(&m, s.omega)) / (2.0 * h);
        assert!((fd - s.slope).abs() < 1e-4, "fd {fd} vs {}", s.slope);
    }
    let spread = slopes.iter().map(|s| (s.slope - slopes[0].slope).abs()).fold(0.0, f64::max);
    assert!(spread < 1e-6, "odd wall slopes differ by {spread}");
}

#[test]
fn even_profiles_have_flat_curves_at_zero() {
    let op = EffEdgeOperator::vertical([1.0, 1.0, 1.0], 1.0, DomainWall::MultiEven { l: 2.0 }).with_domain(30.0, 2048);
    let base = gap_bound_states_with(&op, 0.0, 16, &lenient()).unwrap();
    let slopes = perturbation_slopes(&op, &base).unwrap();
    assert!(!slopes.is_empty());
    for s in slopes {
        assert!(s.slope.abs() < 1e-6, "slope {} at Ω = {}", s.slope, s.omega);
    }
}

#[test]
fn sign_condition_wall_has_two_nonzero_states() {
    for wall in [DomainWall::Tanh { steepness: 1.0 }, DomainWall::Tanh { steepness: 10.0 }, DomainWall::Tanh { steepness: 20.0 }] {
        let op = EffEdgeOperator::vertical([1.0, 1.0, 1.0], 1.0, wall.clone()).with_domain(20.0, 4096);
        let s = gap_bound_states_with(&op, 0.0, 16, &lenient()).unwrap();
        let nonzero = s.gap_eigenvalues.iter().filter(|w| w.abs() > 1e-6).count();
        assert!(nonzero >= 2, "{wall:?}: {:?}", s.gap_eigenvalues);
    }
}

#[test]
fn wall_free_profiles_have_no_gap_states() {
    for value in [1.0, -1.0] {
        let op = EffEdgeOperator::vertical([1.0, 1.0, 1.0], 1.0, DomainWall::Constant { value }).with_domain(20.0, 1024);
        let s = gap_bound_states_with(&op, 0.0, 16, &lenient()).unwrap();
        assert!(s.gap_eigenvalues.is_empty(), "χ ≡ {value}: {:?}", s.gap_eigenvalues);
    }
}
