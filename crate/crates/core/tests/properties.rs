use edgeflow_core::lattice::{make_rational_edge, reparameterize_edge, Grid, Lattice2D, QuasimomentumSlice, V2};
use edgeflow_core::linalg::{dense_eigvalsh, eigs_near, Csr, KrylovOpts};
use edgeflow_core::media::{sample_potential, validate_square_symmetry, Deformation, DomainWall, PotentialSpec};
use edgeflow_core::C64;
use proptest::prelude::*;

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn coprime() -> impl Strategy<Value = (i64, i64)> {
    (-40i64..=40, -40i64..=40).prop_filter("coprime", |(m, n)| gcd(*m, *n) == 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bezout_identity_is_exact((m1, n1) in coprime(), j in -6i64..=6) {
        let e = make_rational_edge(m1, n1, Lattice2D::square()).unwrap();
        prop_assert_eq!(e.bezout(), 1);
        prop_assert_eq!(reparameterize_edge(&e, j).bezout(), 1);
    }

    #[test]
    fn reparameterization_round_trip((m1, n1) in coprime(), j in -6i64..=6) {
        let e = make_rational_edge(m1, n1, Lattice2D::square()).unwrap();
        let back = reparameterize_edge(&reparameterize_edge(&e, j), -j);
        prop_assert_eq!((back.m1, back.n1, back.m2, back.n2), (e.m1, e.n1, e.m2, e.n2));
    }

    #[test]
    fn edge_basis_is_unimodular_and_dual((m1, n1) in coprime(), a in 0.5f64..2.0, s in -0.5f64..0.5) {
        let lat = Lattice2D::new(V2::new(a, 0.0), V2::new(s, 1.0)).unwrap();
        let e = make_rational_edge(m1, n1, lat).unwrap();
        let change = (e.m1 * e.n2 - e.n1 * e.m2).abs();
        prop_assert_eq!(change, 1);
        let pair = [(e.fv1, e.fk1, 1.0), (e.fv1, e.fk2, 0.0), (e.fv2, e.fk1, 0.0), (e.fv2, e.fk2, 1.0)];
        for (v, k, want) in pair {
            prop_assert!((v.dot(&k) - want).abs() < 1e-9 * (1.0 + v.norm() * k.norm()));
        }
    }

    #[test]
    fn slice_samples_run_along_the_dual_direction((m1, n1) in coprime(), k_par in -3.0f64..3.0) {
        let e = make_rational_edge(m1, n1, Lattice2D::square()).unwrap();
        let s = QuasimomentumSlice::new(&e, k_par, 9);
        for k in &s.samples {
            let d = k - e.fk1 * k_par;
            let cross = d.x * e.fk2.y - d.y * e.fk2.x;
            prop_assert!(cross.abs() < 1e-9 * (1.0 + d.norm() * e.fk2.norm()));
        }
    }

    #[test]
    fn tilt_metric_inverts_the_gram_matrix(phi in -0.39f64..0.39) {
        let d = Deformation::tilt(phi).unwrap();
        let prod = d.metric * (d.t.transpose() * d.t);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((prod[(i, j)] - want).abs() < 1e-12);
            }
        }
        prop_assert!((d.det_tinv - 1.0 / (2.0 * phi).cos()).abs() < 1e-12);
    }

    #[test]
    fn multi_walls_have_the_advertised_far_field_signs(l in 1.0f64..30.0) {
        let far = l + 40.0;
        let even = DomainWall::MultiEven { l };
        let odd = DomainWall::MultiOdd { l };
        prop_assert!(even.eval(far) * even.eval(-far) > 0.0);
        prop_assert!(odd.eval(far) * odd.eval(-far) < 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn periodized_bump_is_square_symmetric_on_even_grids(half in 4usize..24, amp in -200.0f64..200.0, width in 0.05f64..0.49) {
        let grid = Grid::new(2 * half).unwrap();
        let v = sample_potential(&PotentialSpec::PeriodizedBump { amplitude: amp, width }, &grid).unwrap();
        prop_assert!(validate_square_symmetry(&v, &grid).unwrap().passes());
    }

    #[test]
    fn shift_invert_matches_dense(seed in any::<u64>(), n in 40usize..120, sigma in -1.0f64..1.0) {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C64::new(4.0 * next(), 0.0)));
            for d in [1, 3] {
                if i + d < n {
                    let z = C64::new(next(), next());
                    t.push((i, i + d, z));
                    t.push((i + d, i, z.conj()));
                }
            }
        }
        let a = Csr::from_triplets(n, t);
        let dense = dense_eigvalsh(&a);
        let r = eigs_near(&a, sigma, 8, KrylovOpts::default()).unwrap();
        let mut near = dense.clone();
        near.sort_by(|p, q| (p - sigma).abs().partial_cmp(&(q - sigma).abs()).unwrap());
        let cutoff = (near[7] - sigma).abs();
        for v in &r.values {
            let closest = dense.iter().map(|d| (d - v).abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(closest < 1e-8, "value {} not in dense spectrum", v);
            prop_assert!((v - sigma).abs() <= cutoff + 1e-8);
        }
    }
}
