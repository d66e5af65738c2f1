//! Discrete effective edge operators on [−L, L] with Dirichlet ends.
//!
//! 𝕊(κ): collocated grid X_m = −L + m·h (m = 1..M−1), spin interleaved.
//! P_X² uses the five-point fourth-order stencil, P_X the centered second-order one.
//!
//! Ɗ±(κ): staggered grids. In a rotated spin frame the first component lives on the
//! integer nodes and the second on the half nodes −L + (j+½)h (j = 0..M−1); spin-off-diagonal
//! derivatives become one-cell differences between the two grids, which removes the
//! doubled low-energy branch of the collocated centered difference.

use edgeflow_core::lattice::{RationalEdge, V2};
use edgeflow_core::linalg::Csr;
use edgeflow_core::media::DomainWall;
use edgeflow_core::pauli::{sigma, M2};
use edgeflow_core::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Schrodinger,
    DiracPlus,
    DiracMinus,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Schrodinger => "schrodinger",
            Kind::DiracPlus => "dirac_plus",
            Kind::DiracMinus => "dirac_minus",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coeffs {
    Schrodinger { alpha: [f64; 3], theta: f64, fk1: V2, fk2: V2 },
    Dirac { a: [f64; 3], b: [f64; 3], c: f64 },
}

/// Pauli components (σ₀, σ₁, σ₂, σ₃) of a Hermitian 2×2 matrix.
pub type Pauli4 = [f64; 4];

pub fn pauli_matrix(p: &Pauli4) -> M2 {
    (0..4).fold(M2::zeros(), |acc, l| acc + sigma(l) * C64::from(p[l]))
}

/// 𝕊 written as A₂·(P_X + q)² + κA₁·(P_X + q) + κ²A₀ + ϑχσ₃ with q = q_rate·κ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchrodingerSymbol {
    pub a2: Pauli4,
    pub a1: Pauli4,
    pub a0: Pauli4,
    pub q_rate: f64,
    pub theta: f64,
}

impl SchrodingerSymbol {
    pub fn new(alpha: [f64; 3], theta: f64, fk1: V2, fk2: V2) -> Self {
        let q_rate = fk1.dot(&fk2) / fk2.norm_squared();
        let k1p = fk1 - fk2 * q_rate;
        // quadratic forms u·S u for S = I, σ₁, σ₃ with coefficient matrices σ₀, σ₁, σ₂
        let forms = |u: V2, v: V2| [u.dot(&v), u.x * v.y + u.y * v.x, u.x * v.x - u.y * v.y];
        let build = |f: [f64; 3]| -> Pauli4 { [(1.0 - alpha[0]) * f[0], -alpha[1] * f[1], -alpha[2] * f[2], 0.0] };
        let a2 = build(forms(fk2, fk2));
        let mut a1 = build(forms(k1p, fk2));
        a1.iter_mut().for_each(|x| *x *= 2.0);
        let a0 = build(forms(k1p, k1p));
        Self { a2, a1, a0, q_rate, theta }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffEdgeOperator {
    pub kind: Kind,
    pub coeffs: Coeffs,
    pub wall: DomainWall,
    pub lx: f64,
    pub m: usize,
}

/// Unitary U with U(e·σ)U† = σ₃ for a unit vector e.
fn frame(e: [f64; 3]) -> M2 {
    let h = (0..3).fold(M2::zeros(), |acc, l| acc + sigma(l + 1) * C64::from(e[l]));
    let (vals, vecs) = edgeflow_core::linalg::small_eigh(&[vec![h[(0, 0)], h[(0, 1)]], vec![h[(1, 0)], h[(1, 1)]]]);
    let (top, bot) = if vals[0] > vals[1] { (0, 1) } else { (1, 0) };
    M2::new(vecs[top][0].conj(), vecs[top][1].conj(), vecs[bot][0].conj(), vecs[bot][1].conj())
}

impl EffEdgeOperator {
    pub fn schrodinger(alpha: [f64; 3], theta: f64, edge: &RationalEdge, wall: DomainWall) -> Self {
        Self { kind: Kind::Schrodinger, coeffs: Coeffs::Schrodinger { alpha, theta, fk1: edge.fk1, fk2: edge.fk2 }, wall, lx: 40.0, m: 4096 }
    }

    pub fn vertical(alpha: [f64; 3], theta: f64, wall: DomainWall) -> Self {
        Self::schrodinger(alpha, theta, &RationalEdge::vertical(), wall)
    }

    pub fn dirac(kind: Kind, a: [f64; 3], b: [f64; 3], c: f64, wall: DomainWall) -> Self {
        assert!(kind != Kind::Schrodinger);
        Self { kind, coeffs: Coeffs::Dirac { a, b, c }, wall, lx: 60.0, m: 4096 }
    }

    pub fn with_domain(mut self, lx: f64, m: usize) -> Self {
        self.lx = lx;
        self.m = m;
        self
    }

    pub fn with_wall(mut self, wall: DomainWall) -> Self {
        self.wall = wall;
        self
    }

    /// Decay length of wall states away from the transition: √(|A|/|ϑ|) for 𝕊, √g/|c| for Ɗ±.
    pub fn decay_length(&self) -> f64 {
        match &self.coeffs {
            Coeffs::Schrodinger { alpha, theta, .. } => ((1.0 - alpha[0]).abs().max(alpha[1].abs()).max(alpha[2].abs()) / theta.abs()).sqrt(),
            Coeffs::Dirac { a, c, .. } => (a[1] * a[1] + a[2] * a[2] - a[0] * a[0]).abs().sqrt() / c.abs(),
        }
    }

    /// Domain [−L, L] with L = 2·(wall half width) + 40·(decay length), keeping M.
    pub fn with_scaled_domain(self) -> Self {
        let lx = 2.0 * self.wall.transition_half_width(50.0) + 40.0 * self.decay_length();
        let m = self.m;
        self.with_domain(lx, m)
    }

    pub fn h(&self) -> f64 {
        2.0 * self.lx / self.m as f64
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            Kind::Schrodinger => 2 * (self.m - 1),
            _ => 2 * self.m - 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 16 || !self.m.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("M = {} must be even and at least 16", self.m)));
        }
        if self.lx.is_nan() || self.lx <= 0.0 {
            return Err(Error::InvalidGrid(format!("half-length {} must be positive", self.lx)));
        }
        Ok(())
    }

    pub fn symbol(&self) -> Option<SchrodingerSymbol> {
        match &self.coeffs {
            Coeffs::Schrodinger { alpha, theta, fk1, fk2 } => Some(SchrodingerSymbol::new(*alpha, *theta, *fk1, *fk2)),
            _ => None,
        }
    }

    /// ±1 for Ɗ±, +1 for 𝕊.
    pub fn sign(&self) -> f64 {
        if self.kind == Kind::DiracMinus {
            -1.0
        } else {
            1.0
        }
    }

    /// Spin axis that the staggered Dirac frame maps to σ₃. Default σ₃ (mass on site); when
    /// a₀ = 0 and a⊥·b⊥ = 0 the in-plane direction of b, so that ∂_κƊ is site-diagonal and
    /// the zero mode stays an exact eigenvector of it.
    pub fn dirac_axis(&self) -> [f64; 3] {
        let Coeffs::Dirac { a, b, .. } = &self.coeffs else { return [0.0, 0.0, 1.0] };
        let nb = b[1].hypot(b[2]);
        let na = a[1].hypot(a[2]);
        if nb > 0.0 && a[0] == 0.0 && (a[1] * b[1] + a[2] * b[2]).abs() <= 1e-12 * na * nb {
            return [b[1] / nb, b[2] / nb, 0.0];
        }
        [0.0, 0.0, 1.0]
    }

    /// Spin frame U of the discrete unknowns (identity for 𝕊).
    pub fn frame(&self) -> M2 {
        match self.kind {
            Kind::Schrodinger => M2::identity(),
            _ => frame(self.dirac_axis()),
        }
    }

    /// Position and spin component (in the operator frame) of every unknown.
    pub fn sites(&self) -> Vec<(f64, usize)> {
        let h = self.h();
        match self.kind {
            Kind::Schrodinger => (0..self.dim()).map(|i| (-self.lx + (i / 2 + 1) as f64 * h, i % 2)).collect(),
            _ => (0..self.dim()).map(|i| (-self.lx + (i + 1) as f64 * 0.5 * h, 1 - i % 2)).collect(),
        }
    }

    /// Samples a continuum spinor into the discrete representation (frame applied).
    pub fn sample(&self, f: &dyn Fn(f64) -> [C64; 2]) -> Vec<C64> {
        let u = self.frame();
        self.sites()
            .into_iter()
            .map(|(x, s)| {
                let v = f(x);
                u[(s, 0)] * v[0] + u[(s, 1)] * v[1]
            })
            .collect()
    }

    /// Discrete L² inner product ⟨x, y⟩ = h Σ x̄ y.
    pub fn inner(&self, x: &[C64], y: &[C64]) -> C64 {
        edgeflow_core::linalg::dot(x, y) * self.h()
    }

    pub fn assemble(&self, kappa: f64) -> Csr {
        self.build(kappa, false)
    }

    /// ∂_κ of the discrete operator.
    pub fn kappa_derivative(&self, kappa: f64) -> Csr {
        self.build(kappa, true)
    }

    fn build(&self, kappa: f64, deriv: bool) -> Csr {
        match &self.coeffs {
            Coeffs::Schrodinger { .. } => self.build_schrodinger(&self.symbol().unwrap(), kappa, deriv),
            Coeffs::Dirac { a, b, c } => self.build_dirac(*a, *b, *c, kappa, deriv),
        }
    }

    fn build_schrodinger(&self, s: &SchrodingerSymbol, kappa: f64, deriv: bool) -> Csr {
        let n = self.m - 1;
        let h = self.h();
        let q = s.q_rate * kappa;
        let (a2, a1, a0) = (pauli_matrix(&s.a2), pauli_matrix(&s.a1), pauli_matrix(&s.a0));
        let s3 = sigma(3);
        let i = C64::new(0.0, 1.0);
        let p2 = [(0i64, 30.0), (1, -16.0), (-1, -16.0), (2, 1.0), (-2, 1.0)].map(|(d, c)| (d, C64::from(c / (12.0 * h * h))));
        let p1 = [(1i64, -i / (2.0 * h)), (-1, i / (2.0 * h))];
        let mut t = Vec::with_capacity(n * 40);
        let mut push = |r: usize, c: usize, blk: M2| {
            for a in 0..2 {
                for b in 0..2 {
                    if blk[(a, b)].norm() != 0.0 {
                        t.push((2 * r + a, 2 * c + b, blk[(a, b)]));
                    }
                }
            }
        };
        for r in 0..n {
            let x = -self.lx + (r + 1) as f64 * h;
            let diag = if deriv { a0 * C64::from(2.0 * kappa) } else { a0 * C64::from(kappa * kappa) + s3 * C64::from(s.theta * self.wall.eval(x)) };
            push(r, r, diag);
            for &(d, c) in &p2 {
                let col = r as i64 + d;
                if col < 0 || col >= n as i64 {
                    continue;
                }
                let ph = C64::from_polar(1.0, q * d as f64 * h);
                let dph = ph * i * (d as f64 * h * s.q_rate);
                push(r, col as usize, a2 * (c * if deriv { dph } else { ph }));
            }
            for &(d, c) in &p1 {
                let col = r as i64 + d;
                if col < 0 || col >= n as i64 {
                    continue;
                }
                let ph = C64::from_polar(1.0, q * d as f64 * h);
                let dph = ph * i * (d as f64 * h * s.q_rate);
                let v = if deriv { c * (ph + dph * kappa) } else { c * ph * kappa };
                push(r, col as usize, a1 * v);
            }
        }
        Csr::from_triplets(2 * n, t)
    }

    fn build_dirac(&self, a: [f64; 3], b: [f64; 3], c: f64, kappa: f64, deriv: bool) -> Csr {
        let m = self.m;
        let h = self.h();
        let sg = self.sign();
        let u = self.frame();
        let rot = |p: M2| u * p * u.adjoint();
        let kin = rot(edgeflow_core::pauli::dot_sigma(a)) * C64::from(sg);
        let bb = rot(edgeflow_core::pauli::dot_sigma(b)) * C64::from(sg);
        let mass = rot(sigma(3) * C64::from(c));
        let i = C64::new(0.0, 1.0);
        // integer node m' (1..M−1) ↦ 2m'−1, half node j (0..M−1) ↦ 2j
        let iu = |mm: usize| 2 * mm - 1;
        let iv = |j: usize| 2 * j;
        let xu = |mm: usize| -self.lx + mm as f64 * h;
        let xv = |j: usize| -self.lx + (j as f64 + 0.5) * h;
        let (chi_u, chi_v): (Vec<f64>, Vec<f64>) = if deriv { (vec![], vec![]) } else { ((0..=m).map(|mm| self.wall.eval(xu(mm))).collect(), (0..m).map(|j| self.wall.eval(xv(j))).collect()) };
        let mut t = Vec::with_capacity(12 * m);
        let mut herm = |r: usize, cc: usize, v: C64| {
            if v.norm() != 0.0 {
                t.push((r, cc, v));
                if r != cc {
                    t.push((cc, r, v.conj()));
                }
            }
        };
        let cd = i / (2.0 * h);
        // spin-diagonal blocks
        for mm in 1..m {
            let r = iu(mm);
            let d = if deriv { bb[(0, 0)] } else { bb[(0, 0)] * kappa + mass[(0, 0)] * chi_u[mm] };
            herm(r, r, d);
            if !deriv && mm + 1 < m {
                herm(r, iu(mm + 1), -kin[(0, 0)] * cd);
            }
        }
        for j in 0..m {
            let r = iv(j);
            let d = if deriv { bb[(1, 1)] } else { bb[(1, 1)] * kappa + mass[(1, 1)] * chi_v[j] };
            herm(r, r, d);
            if !deriv && j + 1 < m {
                herm(r, iv(j + 1), -kin[(1, 1)] * cd);
            }
        }
        // spin-off-diagonal: integer row mm couples to half nodes j = mm−1 (left) and j = mm (right)
        for mm in 1..m {
            let r = iu(mm);
            for (j, side) in [(mm - 1, -1.0), (mm, 1.0)] {
                let v = if deriv {
                    bb[(0, 1)] * 0.5
                } else {
                    kin[(0, 1)] * (-i * side / h) + bb[(0, 1)] * (0.5 * kappa) + mass[(0, 1)] * (0.25 * (chi_u[mm] + chi_v[j]))
                };
                herm(r, iv(j), v);
            }
        }
        Csr::from_triplets(2 * m - 1, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones() -> EffEdgeOperator {
        EffEdgeOperator::vertical([1.0, 1.0, 1.0], 1.0, DomainWall::Tanh { steepness: 1.0 }).with_domain(10.0, 128)
    }

    #[test]
    fn vertical_symbol_matches_reduced_form() {
        let s = SchrodingerSymbol::new([0.3, 0.7, 1.9], 1.0, V2::new(0.0, 1.0), V2::new(-1.0, 0.0));
        assert_eq!(s.q_rate, 0.0);
        assert_eq!(s.a2, [0.7, 0.0, -1.9, 0.0]);
        assert_eq!(s.a1, [0.0, 1.4, 0.0, 0.0]);
        assert_eq!(s.a0, [0.7, 0.0, 1.9, 0.0]);
    }

    #[test]
    fn operators_are_hermitian() {
        let op = ones();
        for k in [-1.3, 0.0, 0.4] {
            assert!(op.assemble(k).hermitian_defect() < 1e-12);
            assert!(op.kappa_derivative(k).hermitian_defect() < 1e-12);
        }
        let d = EffEdgeOperator::dirac(Kind::DiracMinus, [0.3, 1.0, 1.0], [0.2, 0.0, 1.0], 0.5, DomainWall::Sign).with_domain(10.0, 64);
        for k in [-0.7, 0.0, 1.1] {
            assert!(d.assemble(k).hermitian_defect() < 1e-12);
        }
    }

    #[test]
    fn kappa_derivative_matches_difference_quotient() {
        let edge = edgeflow_core::lattice::make_rational_edge(1, 2, edgeflow_core::lattice::Lattice2D::square()).unwrap();
        let op = EffEdgeOperator::schrodinger([0.8, 1.1, 1.7], -0.6, &edge, DomainWall::Sign).with_domain(6.0, 64);
        let x: Vec<C64> = (0..op.dim()).map(|j| C64::new((j as f64 * 0.37).sin(), (j as f64 * 0.11).cos())).collect();
        let (k, e) = (0.45, 1e-6);
        let fd: Vec<C64> = op.assemble(k + e).matvec(&x).iter().zip(op.assemble(k - e).matvec(&x)).map(|(p, q)| (p - q) / (2.0 * e)).collect();
        let ex = op.kappa_derivative(k).matvec(&x);
        let err = fd.iter().zip(&ex).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        let scale = ex.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-6 * scale, "{err} vs {scale}");
    }

    #[test]
    fn frame_diagonalizes_axis() {
        for e in [[0.0, 0.0, 1.0], [0.6, 0.8, 0.0], [0.0, -1.0, 0.0]] {
            let u = frame(e);
            let h = (0..3).fold(M2::zeros(), |acc, l| acc + sigma(l + 1) * C64::from(e[l]));
            let d = u * h * u.adjoint() - sigma(3);
            assert!(d.norm() < 1e-12);
            assert!((u * u.adjoint() - M2::identity()).norm() < 1e-12);
        }
    }
}
