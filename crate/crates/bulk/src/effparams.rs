//! Homogenized coefficients from the degenerate Bloch eigenspace.
//!
//! In the periodic gauge Φ = e^{ik·x}p the operator −2i∇ (with the metric, for deformed media)
//! acting on Φ corresponds to ∂_k H(k) acting on p, so all first-order quantities use the
//! assembled k-derivatives of the discrete operator.

use crate::bulkfb::{BulkModel, DegeneracyKind, DegeneracyPoint, Selector};
use edgeflow_core::lattice::{RationalEdge, SymOp, V2};
use edgeflow_core::linalg::{axpy, dense_eigh, dot, norm, scale, BorderedSolver, Csr};
use edgeflow_core::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    RotationEigenbasis,
    PcSymmetrized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    M,
    DPlus,
    DMinus,
}

#[derive(Debug, Clone)]
pub struct DegenerateBasis {
    pub phi1: Vec<C64>,
    pub phi2: Vec<C64>,
    pub kind: BasisKind,
    pub k: V2,
    pub e_star: f64,
    /// max deviation of the symmetry eigenvalues from their ideal values
    pub symmetry_defect: f64,
}

fn gram_defect(b: &DegenerateBasis) -> f64 {
    let d11 = (dot(&b.phi1, &b.phi1) - 1.0).norm();
    let d22 = (dot(&b.phi2, &b.phi2) - 1.0).norm();
    d11.max(d22).max(dot(&b.phi1, &b.phi2).norm())
}

fn combo(c: &[C64], v: &[&Vec<C64>]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v[0].len()];
    for (ci, vi) in c.iter().zip(v) {
        axpy(&mut out, *ci, vi);
    }
    out
}

fn normalize(v: &mut [C64]) {
    let n = norm(v);
    scale(v, C64::from(1.0 / n));
}

/// Multiply by the phase that makes the largest-magnitude entry real and positive.
pub fn fix_gauge(v: &mut [C64]) {
    let big = v.iter().cloned().max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()).unwrap();
    let ph = big.conj() / big.norm();
    scale(v, ph);
}

/// Eigenvectors of bands (b, b+1) at k⋆ for the unperturbed operator.
fn eigenspace(model: &BulkModel, k: V2, b: usize) -> (Vec<C64>, Vec<C64>, f64) {
    let (vals, vecs) = dense_eigh(&model.operator(k, Selector::Unperturbed).matrix);
    (vecs[b].clone(), vecs[b + 1].clone(), 0.5 * (vals[b] + vals[b + 1]))
}

pub fn select_degenerate_basis(model: &BulkModel, deg: &DegeneracyPoint, which: Which) -> Result<DegenerateBasis> {
    let grid = &model.grid;
    if grid.n % 2 == 1 {
        return Err(Error::GridNotSymmetric(grid.n));
    }
    let b = deg.bands.0;
    match which {
        Which::M => {
            let k = deg.k_star;
            let (v1, v2, es) = eigenspace(model, k, b);
            let vs = [&v1, &v2];
            // 2×2 restriction of the rotation: Rm_ij = ⟨v_i, ℛ v_j⟩
            let rv: Vec<Vec<C64>> = vs.iter().map(|v| grid.apply_bloch(SymOp::Rotation, &k, &k, v)).collect();
            let r = nalgebra::Matrix2::new(dot(&v1, &rv[0]), dot(&v1, &rv[1]), dot(&v2, &rv[0]), dot(&v2, &rv[1]));
            // eigenvector for +i: (r − i)c = 0
            let i = C64::new(0.0, 1.0);
            let a = r - nalgebra::Matrix2::identity() * i;
            let c = if a[(0, 1)].norm() > a[(0, 0)].norm() { [a[(0, 1)], -a[(0, 0)]] } else { [a[(1, 1)], -a[(1, 0)]] };
            let mut phi1 = combo(&c, &vs);
            normalize(&mut phi1);
            // phase fixed by Σ₁Φ₁ = Φ₂ = 𝒫𝒞Φ₁ (the gauge in which α₁, α₂ are real); the residual sign is set
            // by making the largest entry of Φ₁ have positive real part
            let s = grid.apply_bloch(SymOp::Swap, &k, &k, &phi1);
            let pc = grid.apply_bloch(SymOp::ParityConj, &k, &k, &phi1);
            // Σ₁(e^{iθ}Φ₁) = e^{iθ}s, 𝒫𝒞(e^{iθ}Φ₁) = e^{−iθ}pc  ⇒  e^{2iθ} = ⟨s, pc⟩ / |⟨s, pc⟩|
            let z = dot(&s, &pc);
            if z.norm() < 0.5 {
                return Err(Error::SymmetryViolation(format!("Σ₁Φ₁ and 𝒫𝒞Φ₁ are not parallel (overlap {:.3})", z.norm())));
            }
            let th = 0.5 * z.arg();
            scale(&mut phi1, C64::from_polar(1.0, th));
            let big = *phi1.iter().max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()).unwrap();
            if big.re < 0.0 {
                scale(&mut phi1, C64::from(-1.0));
            }
            let phi2 = grid.apply_bloch(SymOp::ParityConj, &k, &k, &phi1);
            let r1 = grid.apply_bloch(SymOp::Rotation, &k, &k, &phi1);
            let r2 = grid.apply_bloch(SymOp::Rotation, &k, &k, &phi2);
            let d1 = norm(&r1.iter().zip(&phi1).map(|(x, y)| x - i * y).collect::<Vec<_>>());
            let d2 = norm(&r2.iter().zip(&phi2).map(|(x, y)| x + i * y).collect::<Vec<_>>());
            let out = DegenerateBasis { phi1, phi2, kind: BasisKind::RotationEigenbasis, k, e_star: es, symmetry_defect: d1.max(d2) };
            if out.symmetry_defect > 1e-6 || gram_defect(&out) > 1e-8 {
                return Err(Error::SymmetryViolation(format!("rotation eigenbasis defect {:e}", out.symmetry_defect)));
            }
            Ok(out)
        }
        Which::DPlus => {
            if deg.kind != DegeneracyKind::DiracPair {
                return Err(Error::Precondition("D basis requested for a quadratic point".into()));
            }
            dirac_basis(model, deg.k_star, b)
        }
        Which::DMinus => {
            let p = select_degenerate_basis(model, deg, Which::DPlus)?;
            let km = deg.k_minus;
            let phi1 = grid.apply_bloch(SymOp::Parity, &p.k, &km, &p.phi1);
            let phi2 = grid.apply_bloch(SymOp::Parity, &p.k, &km, &p.phi2);
            Ok(DegenerateBasis { phi1, phi2, k: km, ..p })
        }
    }
}

/// 𝒫𝒞-symmetrized basis at a Dirac point: Φ̃₁ = u₁ (𝒫𝒞 = +1), Φ̃₂ = iu₂ (𝒫𝒞 = −1).
fn dirac_basis(model: &BulkModel, k: V2, b: usize) -> Result<DegenerateBasis> {
    let grid = &model.grid;
    let (v1, v2, es) = eigenspace(model, k, b);
    let pc = |v: &Vec<C64>| grid.apply_bloch(SymOp::ParityConj, &k, &k, v);
    let i = C64::new(0.0, 1.0);
    // 𝒫𝒞-even vectors w = v + 𝒫𝒞v span a real two-dimensional space
    let mut cands = Vec::new();
    for v in [&v1, &v2] {
        for ph in [C64::from(1.0), i] {
            let w: Vec<C64> = v.iter().map(|z| z * ph).collect();
            let pw = pc(&w);
            cands.push(w.iter().zip(&pw).map(|(a, b)| a + b).collect::<Vec<_>>());
        }
    }
    cands.sort_by(|a, b| norm(b).partial_cmp(&norm(a)).unwrap());
    let mut u1 = cands[0].clone();
    normalize(&mut u1);
    let mut u2 = None;
    for c in &cands[1..] {
        let mut w = c.clone();
        let o = dot(&u1, &w).re;
        axpy(&mut w, C64::from(-o), &u1);
        if norm(&w) > 1e-3 {
            normalize(&mut w);
            u2 = Some(w);
            break;
        }
    }
    let u2 = u2.ok_or_else(|| Error::SymmetryViolation("𝒫𝒞-even subspace is one-dimensional".into()))?;
    let mut phi1: Vec<C64> = u1.iter().zip(&u2).map(|(a, b)| (a + i * b) / 2f64.sqrt()).collect();
    fix_gauge(&mut phi1);
    let mut phi2 = pc(&phi1);
    // orientation: det[γ₁ γ₂] < 0, the sign inherited from the rotation eigenbasis at M when α₁α₂ > 0
    let x: Vec<C64> = (0..2).map(|m| model.k_derivative(k, &[m], Selector::Unperturbed).form(&phi1, &phi2)).collect();
    if x[0].re * (-x[1].im) - x[1].re * (-x[0].im) > 0.0 {
        phi1 = phi2;
        fix_gauge(&mut phi1);
        phi2 = pc(&phi1);
    }
    let defect = norm(&pc(&u1).iter().zip(&u1).map(|(x, y)| x - y).collect::<Vec<_>>());
    let out = DegenerateBasis { phi1, phi2, kind: BasisKind::PcSymmetrized, k, e_star: es, symmetry_defect: defect };
    if gram_defect(&out) > 1e-8 {
        return Err(Error::SymmetryViolation(format!("Dirac basis not orthonormal ({:e})", gram_defect(&out))));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValues {
    Quadratic {
        /// coefficients of the discrete effective symbol (1−α₀)|κ|²σ₀ − α₁(κ·σ₁κ)σ₁ − α₂(κ·σ₃κ)σ₂
        alpha: [f64; 3],
        /// resolvent inner products alone (continuum second-order term taken as exactly |κ|²)
        alpha_resolvent: [f64; 3],
    },
    Dirac {
        gamma: [V2; 3],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveParams {
    pub values: ParamValues,
    pub theta: f64,
    pub e_star: f64,
    pub k_star: V2,
    /// largest imaginary part among nominally real outputs
    pub imag_residue: f64,
    /// largest |⟨Φ_j, ∂_m H Φ_k⟩| (quadratic) or first-order symmetry defect (Dirac)
    pub first_order_defect: f64,
    pub gauge_info: String,
}

impl EffectiveParams {
    pub fn alpha(&self) -> Option<[f64; 3]> {
        match &self.values {
            ParamValues::Quadratic { alpha, .. } => Some(*alpha),
            _ => None,
        }
    }

    pub fn gamma(&self) -> Option<[V2; 3]> {
        match &self.values {
            ParamValues::Dirac { gamma } => Some(*gamma),
            _ => None,
        }
    }
}

/// (H(k⋆) − E⋆)u = Π⊥f with u ⊥ {Φ₁, Φ₂}.
pub fn deflated_resolvent_solve(op: &Csr, e_star: f64, basis: &DegenerateBasis, f: &[C64]) -> Result<Vec<C64>> {
    let overlap = dot(&basis.phi1, f).norm().max(dot(&basis.phi2, f).norm());
    if overlap > 1e-8 * norm(f).max(1e-300) {
        return Err(Error::Precondition(format!("right-hand side overlaps the kernel ({overlap:e})")));
    }
    BorderedSolver::new(op, e_star, &[basis.phi1.clone(), basis.phi2.clone()])?.solve(f)
}

fn project(basis: &DegenerateBasis, f: &[C64]) -> Vec<C64> {
    let mut g = f.to_vec();
    for b in [&basis.phi1, &basis.phi2] {
        let c = dot(b, &g);
        axpy(&mut g, -c, b);
    }
    g
}

/// ⟨Φ_j, Op Φ_k⟩ for j, k ∈ {1, 2}.
fn matrix_elements(op: &Csr, basis: &DegenerateBasis) -> [[C64; 2]; 2] {
    let ph = [&basis.phi1, &basis.phi2];
    let mut m = [[C64::new(0.0, 0.0); 2]; 2];
    for j in 0..2 {
        let av = op.matvec(ph[j]);
        for i in 0..2 {
            m[i][j] = dot(ph[i], &av);
        }
    }
    m
}

pub fn compute_effective_params(model: &BulkModel, deg: &DegeneracyPoint, basis: &DegenerateBasis) -> Result<EffectiveParams> {
    let k = basis.k;
    let d = [model.k_derivative(k, &[0], Selector::Unperturbed), model.k_derivative(k, &[1], Selector::Unperturbed)];
    let w = model.magnetic_operator(k);
    let wm = matrix_elements(&w, basis);
    let det_tinv = model.medium.deformation.det_tinv;
    let theta_c = wm[0][0] * det_tinv;
    let mut residue = theta_c.im.abs().max(wm[0][1].norm() * det_tinv).max((wm[0][0] + wm[1][1]).norm() * det_tinv);
    let first: Vec<[[C64; 2]; 2]> = d.iter().map(|dm| matrix_elements(dm, basis)).collect();
    match basis.kind {
        BasisKind::RotationEigenbasis => {
            let fo = first.iter().flat_map(|m| m.iter().flatten().map(|z| z.norm())).fold(0.0, f64::max);
            let h = model.operator(k, Selector::Unperturbed).matrix;
            let solver = BorderedSolver::new(&h, basis.e_star, &[basis.phi1.clone(), basis.phi2.clone()])?;
            let ph = [&basis.phi1, &basis.phi2];
            // g[m][j] = ∂_m H Φ_j,  r[m][j] = ℛ(E_S) g[m][j]
            let g: Vec<Vec<Vec<C64>>> = (0..2).map(|m| (0..2).map(|j| project(basis, &d[m].matvec(ph[j]))).collect()).collect();
            let mut r = vec![vec![vec![]; 2]; 2];
            for m in 0..2 {
                for j in 0..2 {
                    r[m][j] = solver.solve(&g[m][j])?;
                }
            }
            // X[m][n][j][l] = ⟨g[m][j], r[n][l]⟩
            let x = |m: usize, n: usize, j: usize, l: usize| dot(&g[m][j], &r[n][l]);
            let a0 = x(0, 0, 0, 0);
            let a1 = x(0, 1, 0, 1);
            // the σ₂ structure of the quadratic form places −iα₂ in the (1,2) entry
            let a2 = C64::new(0.0, 1.0) * x(0, 0, 0, 1);
            // ½⟨Φ_j, ∂_m∂_n H Φ_l⟩ in the same structure
            let dd = |m: usize, n: usize| matrix_elements(&model.k_derivative(k, &[m, n], Selector::Unperturbed), basis);
            let (d11, d12) = (dd(0, 0), dd(0, 1));
            let b0 = 0.5 * d11[0][0];
            let b1 = 0.5 * d12[0][1];
            let b2 = C64::new(0.0, 1.0) * 0.5 * d11[0][1];
            residue = residue.max(a0.im.abs()).max(a1.im.abs()).max(a2.im.abs()).max(b0.im.abs()).max(b1.im.abs()).max(b2.im.abs());
            let alpha = [a0.re + 1.0 - b0.re, a1.re - b1.re, a2.re - b2.re];
            if alpha[1].abs() < 1e-12 || alpha[2].abs() < 1e-12 {
                return Err(Error::Precondition("non-degeneracy condition fails (α₁ or α₂ vanishes)".into()));
            }
            Ok(EffectiveParams {
                values: ParamValues::Quadratic { alpha, alpha_resolvent: [a0.re, a1.re, a2.re] },
                theta: theta_c.re,
                e_star: basis.e_star,
                k_star: k,
                imag_residue: residue,
                first_order_defect: fo,
                gauge_info: "Phi1: rotation eigenvalue +i; phase fixed by Swap(Phi1) = PC(Phi1), largest entry Re > 0".into(),
            })
        }
        BasisKind::PcSymmetrized => {
            let g0 = V2::new(first[0][0][0].re, first[1][0][0].re);
            let g1 = V2::new(first[0][0][1].re, first[1][0][1].re);
            let g2 = V2::new(-first[0][0][1].im, -first[1][0][1].im);
            let fo = first.iter().map(|m| (m[0][0] - m[1][1]).norm().max(m[0][0].im.abs())).fold(0.0, f64::max);
            residue = residue.max(fo);
            if g1.norm() < 1e-12 || g2.norm() < 1e-12 {
                return Err(Error::Precondition("non-degeneracy condition fails (γ₁ or γ₂ vanishes)".into()));
            }
            let _ = deg;
            Ok(EffectiveParams {
                values: ParamValues::Dirac { gamma: [g0, g1, g2] },
                theta: theta_c.re,
                e_star: basis.e_star,
                k_star: k,
                imag_residue: residue,
                first_order_defect: fo,
                gauge_info: "Phi1 = (u1 + i u2)/sqrt2 with PC-even u1, u2; orientation det[gamma1 gamma2] < 0; largest entry of Phi1 real positive".into(),
            })
        }
    }
}

/// a_ℓ = γ_ℓ·𝔎₂, b_ℓ = γ_ℓ·𝔎₁, c = ϑ.
pub fn edge_project_params(params: &EffectiveParams, edge: &RationalEdge) -> Result<([f64; 3], [f64; 3], f64)> {
    let g = params.gamma().ok_or_else(|| Error::Precondition("edge projection needs Dirac parameters".into()))?;
    let a = [g[0].dot(&edge.fk2), g[1].dot(&edge.fk2), g[2].dot(&edge.fk2)];
    let b = [g[0].dot(&edge.fk1), g[1].dot(&edge.fk1), g[2].dot(&edge.fk1)];
    Ok((a, b, params.theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use edgeflow_core::lattice::{reparameterize_edge, RationalEdge};

    fn dirac(gamma: [V2; 3]) -> EffectiveParams {
        EffectiveParams {
            values: ParamValues::Dirac { gamma },
            theta: -2.5,
            e_star: 0.0,
            k_star: V2::zeros(),
            imag_residue: 0.0,
            first_order_defect: 0.0,
            gauge_info: String::new(),
        }
    }

    #[test]
    fn unit_velocities_on_the_vertical_edge() {
        let p = dirac([V2::new(0.3, -0.2), V2::new(1.0, 0.0), V2::new(0.0, 1.0)]);
        let (a, b, c) = edge_project_params(&p, &RationalEdge::vertical()).unwrap();
        assert_eq!(a, [-0.3, -1.0, 0.0]);
        assert_eq!(b, [-0.2, 0.0, 1.0]);
        assert_eq!(c, -2.5);
    }

    #[test]
    fn reparameterization_shifts_b_by_multiples_of_a() {
        let p = dirac([V2::new(0.1, 0.4), V2::new(0.9, -0.3), V2::new(0.2, 1.1)]);
        let e = RationalEdge::vertical();
        let (a, b, _) = edge_project_params(&p, &e).unwrap();
        for j in [-3, -1, 2, 5] {
            let (aj, bj, _) = edge_project_params(&p, &reparameterize_edge(&e, j)).unwrap();
            for l in 0..3 {
                assert!((aj[l] - a[l]).abs() < 1e-15);
                assert!((bj[l] - (b[l] - j as f64 * a[l])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadratic_parameters_cannot_be_projected() {
        let mut p = dirac([V2::zeros(); 3]);
        p.values = ParamValues::Quadratic { alpha: [1.0; 3], alpha_resolvent: [0.0; 3] };
        assert!(p.gamma().is_none());
        assert!(matches!(edge_project_params(&p, &RationalEdge::vertical()), Err(Error::Precondition(_))));
    }
}
