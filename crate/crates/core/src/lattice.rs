//! Lattices, dual bases, rational edges and the periodic sampling grid.

use crate::error::{Error, Result};
use nalgebra::Vector2;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

pub type V2 = Vector2<f64>;

/// High-symmetry quasimomentum M = [π, π].
pub fn m_point() -> V2 {
    V2::new(PI, PI)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice2D {
    pub v1: V2,
    pub v2: V2,
    pub k1: V2,
    pub k2: V2,
}

impl Lattice2D {
    pub fn new(v1: V2, v2: V2) -> Result<Self> {
        let det = v1.x * v2.y - v1.y * v2.x;
        if det.abs() <= 1e-12 {
            return Err(Error::Precondition("lattice vectors are linearly dependent".into()));
        }
        // rows of [v1 v2]^{-1}
        let k1 = V2::new(v2.y, -v2.x) / det;
        let k2 = V2::new(-v1.y, v1.x) / det;
        Ok(Self { v1, v2, k1, k2 })
    }

    pub fn square() -> Self {
        Self::new(V2::new(1.0, 0.0), V2::new(0.0, 1.0)).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalEdge {
    pub m1: i64,
    pub n1: i64,
    pub m2: i64,
    pub n2: i64,
    pub fv1: V2,
    pub fv2: V2,
    pub fk1: V2,
    pub fk2: V2,
    pub lattice: Lattice2D,
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.signum() * a, a.signum(), 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    ext_gcd(a.abs(), b.abs()).0
}

impl RationalEdge {
    fn from_ints(m1: i64, n1: i64, m2: i64, n2: i64, lattice: Lattice2D) -> Self {
        let (v1, v2, k1, k2) = (lattice.v1, lattice.v2, lattice.k1, lattice.k2);
        Self {
            m1,
            n1,
            m2,
            n2,
            fv1: v1 * m1 as f64 + v2 * n1 as f64,
            fv2: v1 * m2 as f64 + v2 * n2 as f64,
            fk1: k1 * n2 as f64 - k2 * m2 as f64,
            fk2: -k1 * n1 as f64 + k2 * m1 as f64,
            lattice,
        }
    }

    /// Vertical edge 𝔳₁ = v₂ on ℤ².
    pub fn vertical() -> Self {
        make_rational_edge(0, 1, Lattice2D::square()).unwrap()
    }

    pub fn bezout(&self) -> i64 {
        self.m1 * self.n2 - self.m2 * self.n1
    }

    /// Parallel quasimomentum k⋆ = k·𝔳₁.
    pub fn k_parallel(&self, k: &V2) -> f64 {
        k.dot(&self.fv1)
    }
}

/// Bézout completion of a coprime edge direction, with |m2| minimal.
pub fn make_rational_edge(m1: i64, n1: i64, lattice: Lattice2D) -> Result<RationalEdge> {
    if (m1, n1) == (0, 0) || gcd(m1, n1) != 1 {
        return Err(Error::NotCoprime(m1, n1));
    }
    // m1·x + n1·y = 1  ⇒  n2 = x, m2 = −y
    let (g, x, y) = ext_gcd(m1, n1);
    let (x, y) = if g == 1 { (x, y) } else { (-x, -y) };
    let (n2_0, m2_0) = (x, -y);
    debug_assert_eq!(m1 * n2_0 - m2_0 * n1, 1);
    let t0 = if m1 != 0 { -((m2_0 as f64) / (m1 as f64)).round() as i64 } else { -((n2_0 as f64) / (n1 as f64)).round() as i64 };
    let key = |t: i64| {
        let (m2, n2) = (m2_0 + t * m1, n2_0 + t * n1);
        (m2.abs(), n2 < 0, if m1 == 0 { n2.abs() } else { 0 }, m2 < 0)
    };
    let t = (t0 - 2..=t0 + 2).min_by_key(|&t| key(t)).unwrap();
    Ok(RationalEdge::from_ints(m1, n1, m2_0 + t * m1, n2_0 + t * n1, lattice))
}

/// Replace (m2, n2) by (m2, n2) + j·(m1, n1).
pub fn reparameterize_edge(edge: &RationalEdge, j: i64) -> RationalEdge {
    RationalEdge::from_ints(edge.m1, edge.n1, edge.m2 + j * edge.m1, edge.n2 + j * edge.n1, edge.lattice)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasimomentumSlice {
    pub k_par: f64,
    pub samples: Vec<V2>,
}

impl QuasimomentumSlice {
    pub fn new(edge: &RationalEdge, k_par: f64, nq: usize) -> Self {
        let samples = (0..nq)
            .map(|i| {
                let q = -PI + 2.0 * PI * i as f64 / (nq.max(2) - 1) as f64;
                edge.fk1 * k_par + edge.fk2 * q
            })
            .collect();
        Self { k_par, samples }
    }
}

/// Uniform N×N periodic grid on the unit cell, nodes at (i/N, j/N) with index i·N + j.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidGrid(format!("N = {n} < 4")));
        }
        Ok(Self { n })
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn idx(&self, i: i64, j: i64) -> usize {
        let n = self.n as i64;
        (i.rem_euclid(n) * n + j.rem_euclid(n)) as usize
    }

    /// Node coordinates wrapped into [−1/2, 1/2).
    pub fn coord(&self, p: usize) -> V2 {
        let n = self.n as i64;
        let (i, j) = ((p / self.n) as i64, (p % self.n) as i64);
        let w = |a: i64| if 2 * a >= n { a - n } else { a };
        V2::new(w(i) as f64, w(j) as f64) * self.h()
    }

    /// Integer node coordinates wrapped into [−N/2, N/2).
    pub fn icoord(&self, p: usize) -> (i64, i64) {
        let n = self.n as i64;
        let (i, j) = ((p / self.n) as i64, (p % self.n) as i64);
        let w = |a: i64| if 2 * a >= n { a - n } else { a };
        (w(i), w(j))
    }
}

/// Symmetry operations acting on periodic parts p of Bloch functions Φ = e^{ik·x}p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymOp {
    /// 𝒫: f(x) ↦ f(−x), maps L²_k to L²_{−k}.
    Parity,
    /// 𝒞: complex conjugation, maps L²_k to L²_{−k}.
    Conj,
    /// 𝒫𝒞, maps L²_k to itself.
    ParityConj,
    /// ℛ: f(x) ↦ f(Rᵀx).
    Rotation,
    /// Σ₁: f(x) ↦ f(σ₁x).
    Swap,
}

impl Grid {
    fn source_index(&self, op: SymOp, p: usize) -> usize {
        let (i, j) = self.icoord(p);
        match op {
            SymOp::Parity | SymOp::ParityConj => self.idx(-i, -j),
            SymOp::Conj => p,
            // Rᵀx = (−x₂, x₁)
            SymOp::Rotation => self.idx(-j, i),
            SymOp::Swap => self.idx(j, i),
        }
    }

    /// Apply an operation to a real field (no Bloch phase involved).
    pub fn apply_real(&self, op: SymOp, f: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|p| f[self.source_index(op, p)]).collect()
    }

    /// Apply an operation to the periodic part at quasimomentum k. Returns the periodic
    /// part of the image relative to `k_out`, which must be congruent to the image
    /// quasimomentum modulo 2πℤ².
    pub fn apply_bloch(&self, op: SymOp, k: &V2, k_out: &V2, p: &[C64]) -> Vec<C64> {
        let img = match op {
            SymOp::Parity | SymOp::Conj => -k,
            SymOp::ParityConj => *k,
            // ℛΦ ∈ L²_{Rk} with R = [[0,1],[−1,0]]
            SymOp::Rotation => V2::new(k.y, -k.x),
            SymOp::Swap => V2::new(k.y, k.x),
        };
        let shift = img - k_out;
        let g = (shift / (2.0 * PI)).map(|z| z.round());
        assert!((shift - g * 2.0 * PI).norm() < 1e-9, "k_out is not congruent to the image quasimomentum");
        let conj = matches!(op, SymOp::Conj | SymOp::ParityConj);
        (0..self.len())
            .map(|q| {
                let (i, j) = self.icoord(q);
                let src = self.source_index(op, q);
                let v = if conj { p[src].conj() } else { p[src] };
                // e^{i (img − k_out)·x} with x on the grid is a periodic phase
                let ph = 2.0 * PI * (g.x * i as f64 + g.y * j as f64) / self.n as f64;
                v * C64::from_polar(1.0, ph)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertical_edge_matches_example() {
        let e = RationalEdge::vertical();
        assert_eq!((e.m2, e.n2), (-1, 0));
        assert_eq!(e.fv1, V2::new(0.0, 1.0));
        assert_eq!(e.fv2, V2::new(-1.0, 0.0));
        assert_eq!(e.fk1, V2::new(0.0, 1.0));
        assert_eq!(e.fk2, V2::new(-1.0, 0.0));
    }

    #[test]
    fn horizontal_and_diagonal_edges() {
        let e = make_rational_edge(1, 0, Lattice2D::square()).unwrap();
        assert_eq!((e.m2, e.n2), (0, 1));
        let e = make_rational_edge(2, 1, Lattice2D::square()).unwrap();
        assert_eq!((e.m2, e.n2), (1, 1));
        assert_eq!(e.bezout(), 1);
    }

    #[test]
    fn reparameterization_examples() {
        let e = RationalEdge::vertical();
        assert_eq!(reparameterize_edge(&e, 0), e);
        let r = reparameterize_edge(&e, 1);
        assert_eq!((r.m2, r.n2), (-1, 1));
        let d = make_rational_edge(2, 1, Lattice2D::square()).unwrap();
        let r = reparameterize_edge(&d, -1);
        assert_eq!((r.m2, r.n2), (-1, 0));
        assert_eq!(r.bezout(), 1);
    }

    #[test]
    fn not_coprime() {
        assert_eq!(make_rational_edge(2, 4, Lattice2D::square()), Err(Error::NotCoprime(2, 4)));
        assert!(make_rational_edge(0, 0, Lattice2D::square()).is_err());
    }

    #[test]
    fn dual_basis() {
        let l = Lattice2D::new(V2::new(1.0, 0.2), V2::new(-0.3, 0.9)).unwrap();
        assert!((l.k1.dot(&l.v1) - 1.0).abs() < 1e-12 && l.k1.dot(&l.v2).abs() < 1e-12);
        assert!((l.k2.dot(&l.v2) - 1.0).abs() < 1e-12 && l.k2.dot(&l.v1).abs() < 1e-12);
    }

    #[test]
    fn slice_samples_are_parallel_to_k2() {
        let e = RationalEdge::vertical();
        let s = QuasimomentumSlice::new(&e, 2.0, 9);
        for k in &s.samples {
            let d = k - e.fk1 * 2.0;
            assert!((d.x * e.fk2.y - d.y * e.fk2.x).abs() < 1e-14);
        }
    }

    #[test]
    fn rotation_four_times_is_identity() {
        let g = Grid::new(8).unwrap();
        let m = m_point();
        let p: Vec<C64> = (0..g.len()).map(|i| C64::new(i as f64, (i * i % 7) as f64)).collect();
        let mut q = p.clone();
        for _ in 0..4 {
            q = g.apply_bloch(SymOp::Rotation, &m, &m, &q);
        }
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
