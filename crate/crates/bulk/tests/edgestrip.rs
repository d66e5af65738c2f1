use edgeflow_bulk::edgestrip::{assemble_strip_operator, edge_spectrum, slice_gap, StateClass, DEFAULT_WIDTH};
use edgeflow_core::lattice::{make_rational_edge, Lattice2D, RationalEdge};
use edgeflow_core::media::{Deformation, DomainWall, MediumSpec};
use edgeflow_core::Error;
use std::f64::consts::PI;

const N: usize = 10;
const W: usize = 20;

fn medium(wall: DomainWall) -> MediumSpec {
    MediumSpec { wall, ..MediumSpec::paper(Deformation::identity(), 0.1) }
}

#[test]
fn strip_operators_are_hermitian() {
    let e = RationalEdge::vertical();
    for k in [PI - 0.7, PI, PI + 0.3] {
        for wall in [DomainWall::Tanh { steepness: 10.0 }, DomainWall::Sign, DomainWall::Constant { value: -1.0 }] {
            let op = assemble_strip_operator(&medium(wall), &e, k, W, N).unwrap();
            assert!(op.matrix.hermitian_defect() < 1e-12);
            assert_eq!(op.rows(), W * N - 1);
        }
    }
}

/// Intersection of the slice gaps over a period of parallel quasimomenta and the sampled slices.
fn bulk_gap(m: &MediumSpec, ks: &[f64]) -> (f64, f64) {
    let e = RationalEdge::vertical();
    let uniform = (0..16).map(|i| 2.0 * PI * i as f64 / 16.0);
    uniform.chain(ks.iter().copied()).map(|k| slice_gap(m, &e, k, (1, 2), 32, N).unwrap()).fold((f64::NEG_INFINITY, f64::INFINITY), |g, s| (g.0.max(s.0), g.1.min(s.1)))
}

#[test]
fn wall_free_strips_have_no_states_inside_the_bulk_gap() {
    let e = RationalEdge::vertical();
    let ks = [PI - 1.0, PI - 0.5, PI, PI + 0.5, PI + 1.0];
    let (lo, hi) = bulk_gap(&medium(DomainWall::Constant { value: 1.0 }), &ks);
    assert!(hi > lo);
    for value in [1.0, -1.0] {
        let m = medium(DomainWall::Constant { value });
        for k in ks {
            let op = assemble_strip_operator(&m, &e, k, DEFAULT_WIDTH, N).unwrap();
            let s = edge_spectrum(&op, (lo, hi), 16).unwrap();
            let inside: Vec<f64> = s.non_spurious().map(|st| st.value).collect();
            assert!(inside.is_empty(), "χ ≡ {value}, k = {k}: {inside:?} in ({lo}, {hi})");
        }
    }
}

#[test]
fn domain_wall_binds_edge_states_in_the_gap() {
    let e = RationalEdge::vertical();
    let m = medium(DomainWall::Tanh { steepness: 10.0 });
    let mut found = 0;
    for k in [PI - 0.3, PI, PI + 0.3] {
        let (lo, hi) = slice_gap(&m, &e, k, (1, 2), 32, N).unwrap();
        let op = assemble_strip_operator(&m, &e, k, W, N).unwrap();
        let s = edge_spectrum(&op, (lo, hi), 16).unwrap();
        found += s.states.iter().filter(|st| st.class == StateClass::Edge && st.value > lo && st.value < hi).count();
        for st in &s.states {
            assert!(st.residual < 1e-8 * (1.0 + st.value.abs()));
            assert!(st.edge_mass + st.boundary_mass <= 1.0 + 1e-12);
        }
    }
    assert!(found >= 1);
}

#[test]
fn classification_survives_grid_refinement() {
    let e = RationalEdge::vertical();
    let m = medium(DomainWall::Tanh { steepness: 10.0 });
    let k = PI + 0.3;
    let (lo, hi) = slice_gap(&m, &e, k, (1, 2), 32, N).unwrap();
    let pad = 0.5 * (hi - lo);
    let window = (lo - pad, hi + pad);
    let coarse = edge_spectrum(&assemble_strip_operator(&m, &e, k, W, N).unwrap(), window, 24).unwrap();
    let fine = edge_spectrum(&assemble_strip_operator(&m, &e, k, W, 2 * N).unwrap(), (window.0 - pad, window.1 + pad), 48).unwrap();
    let count = |s: &edgeflow_bulk::edgestrip::EdgeSpectrum, c: StateClass| s.states.iter().filter(|st| st.class == c && st.value > window.0 && st.value < window.1).count();
    let edges = (count(&coarse, StateClass::Edge), count(&fine, StateClass::Edge));
    assert_eq!(edges.0, edges.1, "edge states coarse {} fine {}", edges.0, edges.1);
}

#[test]
fn strip_rejects_unsupported_inputs() {
    let m = medium(DomainWall::Tanh { steepness: 10.0 });
    let diag = make_rational_edge(1, 1, Lattice2D::square()).unwrap();
    assert!(matches!(assemble_strip_operator(&m, &diag, PI, W, N), Err(Error::UnsupportedParameters(_))));
    assert!(matches!(assemble_strip_operator(&m, &RationalEdge::vertical(), PI, 21, N), Err(Error::InvalidGrid(_))));
    let wide = MediumSpec { delta: 0.01, ..medium(DomainWall::Tanh { steepness: 1.0 }) };
    assert!(matches!(assemble_strip_operator(&wide, &RationalEdge::vertical(), PI, W, N), Err(Error::WallTooWide(_))));
}
