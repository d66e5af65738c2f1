//! Floquet–Bloch operators on the unit cell, band solves, degeneracies, local gaps and Chern numbers.

use crate::assemble::{assemble, coefficient, Layout};
use edgeflow_core::lattice::{m_point, Grid, V2};
use edgeflow_core::linalg::{dense_eigh, dense_eigvalsh, dot, eigs_near, small_eigh, Csr, KrylovOpts};
use edgeflow_core::media::{sample_magnetic, sample_potential, MediumSpec};
use edgeflow_core::{Error, Result, C64};
use nalgebra::Matrix2;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Which bulk operator: H^{+,δ}, H^{−,δ} or the unperturbed one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    Plus,
    Minus,
    Unperturbed,
}

impl Selector {
    pub fn sign(&self) -> f64 {
        match self {
            Selector::Plus => 1.0,
            Selector::Minus => -1.0,
            Selector::Unperturbed => 0.0,
        }
    }
}

/// Sampled medium on an N×N cell.
#[derive(Debug, Clone)]
pub struct BulkModel {
    pub medium: MediumSpec,
    pub grid: Grid,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BlochOperator {
    pub k: V2,
    pub n: usize,
    pub selector: Selector,
    pub matrix: Csr,
}

impl BulkModel {
    pub fn new(medium: &MediumSpec, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidGrid(format!("N = {n} < 8")));
        }
        medium.validate()?;
        let grid = Grid::new(n)?;
        Ok(Self { medium: medium.clone(), grid, v: sample_potential(&medium.potential, &grid)?, a: sample_magnetic(&medium.magnetic, &grid) })
    }

    fn layout(&self) -> Layout {
        Layout { n1: self.grid.n, n2: self.grid.n, periodic1: true, h: self.grid.h() }
    }

    fn field(&self, sel: Selector) -> Vec<Matrix2<C64>> {
        let d = &self.medium.deformation;
        let amp = sel.sign() * self.medium.strength() * d.det_tinv;
        self.a.iter().map(|a| coefficient(&d.metric, amp * a)).collect()
    }

    /// H(k) in the periodic gauge.
    pub fn operator(&self, k: V2, sel: Selector) -> BlochOperator {
        let m = assemble(&self.layout(), &self.field(sel), Some(&self.v), [k.x, k.y], &[]);
        BlochOperator { k, n: self.grid.n, selector: sel, matrix: m }
    }

    /// Derivatives of H(k) with respect to the quasimomentum components in `dirs`.
    pub fn k_derivative(&self, k: V2, dirs: &[usize], sel: Selector) -> Csr {
        assemble(&self.layout(), &self.field(sel), None, [k.x, k.y], dirs)
    }

    /// Discrete ∇·Aσ₂∇ with unit amplitude (no δ, sign or det T⁻¹).
    pub fn magnetic_operator(&self, k: V2) -> Csr {
        let i = C64::new(0.0, 1.0);
        let m: Vec<_> = self.a.iter().map(|a| Matrix2::new(C64::from(0.0), i * *a, -i * *a, C64::from(0.0))).collect();
        assemble(&self.layout(), &m, None, [k.x, k.y], &[])
    }

    /// Lower bound for the spectrum (used as the shift for the lowest bands).
    pub fn spectral_floor(&self) -> f64 {
        self.v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0
    }
}

#[derive(Debug, Clone)]
pub struct Bands {
    pub energies: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
}

/// Lowest B eigenpairs by shift-invert below the spectrum.
pub fn solve_bloch_bands(model: &BulkModel, op: &BlochOperator, b: usize) -> Result<Bands> {
    if b >= op.matrix.n {
        return Err(Error::Precondition(format!("B = {b} ≥ matrix dimension")));
    }
    let r = eigs_near(&op.matrix, model.spectral_floor(), b, KrylovOpts::default())?;
    for (e, res) in r.values.iter().zip(&r.residuals) {
        if *res > 1e-8 * (1.0 + e.abs()) {
            return Err(Error::ConvergenceFailure(format!("residual {res:e} at E = {e}")));
        }
    }
    Ok(Bands { energies: r.values, vectors: r.vectors })
}

/// Dense oracle: lowest B eigenpairs.
pub fn solve_bloch_bands_dense(op: &BlochOperator, b: usize) -> Bands {
    let (vals, vecs) = dense_eigh(&op.matrix);
    Bands { energies: vals[..b].to_vec(), vectors: vecs[..b].to_vec() }
}

/// Lowest B eigenvalues only (dense).
pub fn band_energies(op: &BlochOperator, b: usize) -> Vec<f64> {
    dense_eigvalsh(&op.matrix)[..b].to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegeneracyKind {
    Quadratic,
    DiracPair,
}

#[derive(Debug, Clone)]
pub struct DegeneracyPoint {
    pub kind: DegeneracyKind,
    pub e_star: f64,
    pub k_star: V2,
    /// D⁻ for a Dirac pair (equal to k_star otherwise).
    pub k_minus: V2,
    /// zero-based indices (b, b+1)
    pub bands: (usize, usize),
    pub splitting: f64,
    pub local_fit: Vec<f64>,
    pub fit_residual: f64,
}

/// Degeneracy tolerance 1e-6 × (E_B − E_1).
pub fn degeneracy_tolerance(energies: &[f64]) -> f64 {
    1e-6 * (energies[energies.len() - 1] - energies[0])
}

/// Finds a two-fold degeneracy at M at or above the zero-based band index `band_hint`.
pub fn find_quadratic_degeneracy(medium: &MediumSpec, band_hint: usize, n: usize) -> Result<DegeneracyPoint> {
    if !medium.deformation.is_volumetric() || medium.delta != 0.0 {
        return Err(Error::Precondition("quadratic degeneracy search needs an undeformed, unperturbed medium".into()));
    }
    let model = BulkModel::new(medium, n)?;
    let nb = band_hint + 10;
    let m = m_point();
    let e = band_energies(&model.operator(m, Selector::Unperturbed), nb);
    let tol = degeneracy_tolerance(&e);
    let mut b = band_hint;
    let mut min_gap = f64::INFINITY;
    while b + 1 < nb {
        let gap = e[b + 1] - e[b];
        min_gap = min_gap.min(gap);
        if gap < tol {
            let below = b > 0 && e[b] - e[b - 1] < tol;
            let above = b + 2 < nb && e[b + 2] - e[b + 1] < tol;
            if !below && !above {
                let (fit, res) = quadratic_fit(&model, m, b, 0.5 * (e[b] + e[b + 1]))?;
                return Ok(DegeneracyPoint {
                    kind: DegeneracyKind::Quadratic,
                    e_star: 0.5 * (e[b] + e[b + 1]),
                    k_star: m,
                    k_minus: m,
                    bands: (b, b + 1),
                    splitting: gap,
                    local_fit: fit,
                    fit_residual: res,
                });
            }
            // skip the whole cluster
            while b + 1 < nb && e[b + 1] - e[b] < tol {
                b += 1;
            }
        }
        b += 1;
    }
    Err(Error::NoDegeneracyFound(min_gap))
}

/// Fits E_± − E_S = |κ|²[c₀ ± √(c₁ sin²2θ + c₂ cos²2θ)] on |κ| ∈ {0.025, 0.05};
/// returns [c₀, √c₁, √c₂] (the symbol predicts c₀ = 1−α₀, √c₁ = |α₁|, √c₂ = |α₂|).
fn quadratic_fit(model: &BulkModel, m: V2, b: usize, es: f64) -> Result<(Vec<f64>, f64)> {
    let mut rows_sum = Vec::new();
    let mut rows_diff = Vec::new();
    for &r in &[0.025, 0.05] {
        for j in 0..8 {
            let th = PI * j as f64 / 8.0 + 0.1;
            let kap = V2::new(th.cos(), th.sin()) * r;
            let e = band_energies(&model.operator(m + kap, Selector::Unperturbed), b + 2);
            let (em, ep) = (e[b] - es, e[b + 1] - es);
            rows_sum.push((r * r, 0.5 * (ep + em)));
            let s2 = (2.0 * th).sin().powi(2);
            let c2 = (2.0 * th).cos().powi(2);
            rows_diff.push((r.powi(4) * s2, r.powi(4) * c2, (0.5 * (ep - em)).powi(2)));
        }
    }
    let c0 = rows_sum.iter().map(|(x, y)| x * y).sum::<f64>() / rows_sum.iter().map(|(x, _)| x * x).sum::<f64>();
    // 2×2 normal equations
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (p, q, y) in &rows_diff {
        a11 += p * p;
        a12 += p * q;
        a22 += q * q;
        b1 += p * y;
        b2 += q * y;
    }
    let det = a11 * a22 - a12 * a12;
    let c1 = (a22 * b1 - a12 * b2) / det;
    let c2 = (a11 * b2 - a12 * b1) / det;
    let mut res: f64 = 0.0;
    for ((x, y), (p, q, z)) in rows_sum.iter().zip(&rows_diff) {
        res = res.max((c0 * x - y).abs() / x).max(((c1 * p + c2 * q) - z).abs() / (x * x));
    }
    Ok((vec![c0, c1.max(0.0).sqrt(), c2.max(0.0).sqrt()], res))
}

/// Gap E_{b+1} − E_b at k.
fn pair_gap(model: &BulkModel, k: V2, b: usize) -> f64 {
    let e = band_energies(&model.operator(k, Selector::Unperturbed), b + 2);
    e[b + 1] - e[b]
}

/// Rayleigh–Ritz energies of H(k) on the span of `basis` (eigenvectors at a nearby quasimomentum).
fn ritz_energies(model: &BulkModel, basis: &[Vec<C64>], k: V2) -> Vec<f64> {
    let h = model.operator(k, Selector::Unperturbed).matrix;
    let hb: Vec<Vec<C64>> = basis.iter().map(|b| h.matvec(b)).collect();
    let t: Vec<Vec<C64>> = basis.iter().map(|bi| hb.iter().map(|hj| dot(bi, hj)).collect()).collect();
    small_eigh(&t).0
}

const RITZ_DIM: usize = 40;

fn ritz_basis(model: &BulkModel, k: V2) -> Vec<Vec<C64>> {
    let (_, mut v) = dense_eigh(&model.operator(k, Selector::Unperturbed).matrix);
    v.truncate(RITZ_DIM.min(v.len()));
    v
}

/// Minimizes g(k)² from `k0` by Newton steps with a finite-difference Hessian, falling back to
/// coordinate searches when the local model is not convex. Gaps are evaluated by Rayleigh–Ritz on
/// a basis recentered at every step.
fn refine_minimum(model: &BulkModel, k0: V2, b: usize, h0: f64) -> V2 {
    let mut k = k0;
    let mut h = h0;
    for _ in 0..60 {
        let basis = ritz_basis(model, k);
        let f = |q: V2| {
            let e = ritz_energies(model, &basis, q);
            (e[b + 1] - e[b]).powi(2)
        };
        let fk = f(k);
        if fk.sqrt() < 1e-10 || h < 1e-10 {
            break;
        }
        let e = [V2::new(h, 0.0), V2::new(0.0, h)];
        let fp = [f(k + e[0]), f(k + e[1])];
        let fm = [f(k - e[0]), f(k - e[1])];
        let fpp = f(k + e[0] + e[1]);
        let fmm = f(k - e[0] - e[1]);
        let g = V2::new((fp[0] - fm[0]) / (2.0 * h), (fp[1] - fm[1]) / (2.0 * h));
        let h11 = (fp[0] - 2.0 * fk + fm[0]) / (h * h);
        let h22 = (fp[1] - 2.0 * fk + fm[1]) / (h * h);
        let h12 = (fpp - fp[0] - fp[1] + 2.0 * fk - fm[0] - fm[1] + fmm) / (2.0 * h * h);
        let det = h11 * h22 - h12 * h12;
        let mut moved = false;
        if det > 0.0 && h11 > 0.0 {
            let step = V2::new(-(h22 * g.x - h12 * g.y) / det, -(h11 * g.y - h12 * g.x) / det);
            if step.norm() < 4.0 * h0 {
                let cand = k + step;
                if f(cand) < fk {
                    k = cand;
                    h = (step.norm() * 0.5).clamp(1e-9, h);
                    moved = true;
                }
            }
        }
        if !moved {
            let mut best = (fk, k);
            for cand in [k + e[0], k - e[0], k + e[1], k - e[1]] {
                let fc = f(cand);
                if fc < best.0 {
                    best = (fc, cand);
                }
            }
            if best.0 < fk {
                k = best.1;
            } else {
                h *= 0.5;
            }
        }
    }
    k
}

/// Locates the Dirac pair splitting from the M-point degeneracy of bands (b, b+1) under deformation.
pub fn locate_dirac_points(medium: &MediumSpec, b: usize, n: usize) -> Result<DegeneracyPoint> {
    if medium.delta != 0.0 {
        return Err(Error::Precondition("Dirac search needs δ = 0".into()));
    }
    let model = BulkModel::new(medium, n)?;
    let m = m_point();
    let ns = 41;
    let span = 0.5;
    let step = 2.0 * span / (ns - 1) as f64;
    let pts: Vec<V2> = (0..ns * ns).map(|p| m + V2::new(-span + step * (p / ns) as f64, -span + step * (p % ns) as f64)).collect();
    let basis = ritz_basis(&model, m);
    let gaps: Vec<f64> = pts
        .par_iter()
        .map(|k| {
            let e = ritz_energies(&model, &basis, *k);
            e[b + 1] - e[b]
        })
        .collect();
    let best = (0..pts.len()).min_by(|&p, &q| gaps[p].partial_cmp(&gaps[q]).unwrap()).unwrap();
    let dp = refine_minimum(&model, pts[best], b, step);
    let dm0 = V2::new(2.0 * PI, 2.0 * PI) - dp;
    let dm = refine_minimum(&model, dm0, b, step * 0.25);
    let defect = (dm - dm0).norm();
    if defect > 1e-4 {
        return Err(Error::NotInversionSymmetric(defect));
    }
    let (gp, gm) = (pair_gap(&model, dp, b), pair_gap(&model, dm, b));
    if gp.max(gm) > 1e-6 {
        return Err(Error::NoDegeneracyFound(gp.max(gm)));
    }
    let e = band_energies(&model.operator(dp, Selector::Unperturbed), b + 2);
    let es = 0.5 * (e[b] + e[b + 1]);
    let (fit, res) = cone_fit(&model, dp, b, es);
    // orient D⁺ so that its parallel component along the vertical edge exceeds π
    let (kp, km) = if dp.y >= dm.y { (dp, dm) } else { (dm, dp) };
    Ok(DegeneracyPoint { kind: DegeneracyKind::DiracPair, e_star: es, k_star: kp, k_minus: km, bands: (b, b + 1), splitting: gp, local_fit: fit, fit_residual: res })
}

/// Cone fit E_± − E_D ≈ ±s(θ)|κ| along 8 directions; returns the 8 slopes s(θ) and the mean tilt.
fn cone_fit(model: &BulkModel, d: V2, b: usize, es: f64) -> (Vec<f64>, f64) {
    let r = 1e-4;
    let mut out = Vec::new();
    let mut tilt_dev: f64 = 0.0;
    for j in 0..8 {
        let th = PI * j as f64 / 4.0;
        let e = band_energies(&model.operator(d + V2::new(th.cos(), th.sin()) * r, Selector::Unperturbed), b + 2);
        out.push((e[b + 1] - e[b]) / (2.0 * r));
        tilt_dev = tilt_dev.max(((e[b + 1] + e[b]) / 2.0 - es).abs() / r);
    }
    (out, tilt_dev)
}

/// E_{b+1}(k⋆) − E_b(k⋆) for H^{+,δ}.
pub fn measure_local_gap(medium: &MediumSpec, at: &DegeneracyPoint, delta: f64, n: usize) -> Result<f64> {
    let model = BulkModel::new(&medium.with_delta(delta), n)?;
    let b = at.bands.0;
    let e = band_energies(&model.operator(at.k_star, Selector::Plus), b + 2);
    Ok(e[b + 1] - e[b])
}

/// Nodes of a periodic quasimomentum axis: `base` uniform points on [c − π, c + π) plus `extra`
/// points clustered within ±`width` of the center c.
pub fn k_axis(center: f64, base: usize, extra: usize, width: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..base).map(|i| center - PI + 2.0 * PI * i as f64 / base as f64).collect();
    for i in 0..extra {
        pts.push(center - width + 2.0 * width * (i as f64 + 0.5) / extra as f64);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts
}

#[derive(Debug, Clone)]
pub struct ChernResult {
    pub chern: i64,
    pub raw: f64,
    pub min_gap: f64,
    pub max_plaquette_phase: f64,
}

/// Link-variable Chern number of the lowest `bands_below` bands on the tensor grid `ax1 × ax2`
/// (each axis covering one period). `chern_number_fhs` uses uniform axes.
pub fn chern_on_axes(model: &BulkModel, sel: Selector, bands_below: usize, ax1: &[f64], ax2: &[f64]) -> Result<ChernResult> {
    let (n1, n2) = (ax1.len(), ax2.len());
    let nb = bands_below;
    let kpts: Vec<V2> = (0..n1 * n2).map(|p| V2::new(ax1[p / n2], ax2[p % n2])).collect();
    let data: Vec<(Vec<Vec<C64>>, f64, V2)> = kpts
        .par_iter()
        .map(|k| {
            let (vals, vecs) = dense_eigh(&model.operator(*k, sel).matrix);
            (vecs[..nb].to_vec(), vals[nb] - vals[nb - 1], *k)
        })
        .collect();
    let (min_gap, at) = data.iter().map(|d| (d.1, d.2)).fold((f64::INFINITY, V2::zeros()), |a, b| if b.0 < a.0 { b } else { a });
    if min_gap < 1e-9 {
        return Err(Error::GapClosedOnGrid(at.x, at.y));
    }
    let grid = &model.grid;
    // periodic part at k + 2π e_j is e^{−2πi x_j} u(k)
    let wrap = |u: &[C64], g: (i64, i64)| -> Vec<C64> {
        (0..u.len())
            .map(|p| {
                let (i, j) = ((p / grid.n) as f64, (p % grid.n) as f64);
                u[p] * C64::from_polar(1.0, -2.0 * PI * (g.0 as f64 * i + g.1 as f64 * j) / grid.n as f64)
            })
            .collect()
    };
    let link = |a: &[Vec<C64>], b: &[Vec<C64>]| -> C64 {
        let m = nalgebra::DMatrix::<C64>::from_fn(nb, nb, |i, j| dot(&a[i], &b[j]));
        let d = m.determinant();
        d / d.norm()
    };
    let mut total = 0.0;
    let mut maxp: f64 = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            let (i1, j1) = ((i + 1) % n1, (j + 1) % n2);
            let (gi, gj) = ((i + 1 == n1) as i64, (j + 1 == n2) as i64);
            let u00 = &data[i * n2 + j].0;
            let u10: Vec<Vec<C64>> = data[i1 * n2 + j].0.iter().map(|u| wrap(u, (gi, 0))).collect();
            let u01: Vec<Vec<C64>> = data[i * n2 + j1].0.iter().map(|u| wrap(u, (0, gj))).collect();
            let u11: Vec<Vec<C64>> = data[i1 * n2 + j1].0.iter().map(|u| wrap(u, (gi, gj))).collect();
            let w = link(u00, &u10) * link(&u10, &u11) * link(&u11, &u01) * link(&u01, u00);
            let f = w.arg();
            maxp = maxp.max(f.abs());
            total += f;
        }
    }
    // plaquette phases sum to −∮A with A = i⟨u, ∇u⟩; the Chern number is (1/2π)∫∇×A
    let raw = -total / (2.0 * PI);
    Ok(ChernResult { chern: raw.round() as i64, raw, min_gap, max_plaquette_phase: maxp })
}

pub fn chern_number_fhs(medium: &MediumSpec, delta: f64, sel: Selector, bands_below: usize, nk: usize, n: usize) -> Result<ChernResult> {
    let model = BulkModel::new(&medium.with_delta(delta), n)?;
    let ax = k_axis(0.0, nk, 0, 0.0);
    chern_on_axes(&model, sel, bands_below, &ax, &ax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use edgeflow_core::media::Deformation;

    #[test]
    fn k_axis_covers_one_period_with_a_cluster() {
        let ax = k_axis(PI, 8, 4, 0.2);
        assert_eq!(ax.len(), 12);
        assert!(ax.windows(2).all(|w| w[1] > w[0]));
        assert!((ax[0] - 0.0).abs() < 1e-15 && ax[ax.len() - 1] < 2.0 * PI);
        assert_eq!(ax.iter().filter(|k| (*k - PI).abs() < 0.2).count(), 5);
    }

    #[test]
    fn tolerance_scales_with_bandwidth() {
        assert_eq!(degeneracy_tolerance(&[1.0, 2.0, 5.0]), 4e-6);
    }

    #[test]
    fn searches_reject_the_wrong_regime() {
        let tilted = MediumSpec::paper(Deformation::tilt(0.03).unwrap(), 0.0);
        assert!(matches!(find_quadratic_degeneracy(&tilted, 0, 12), Err(Error::Precondition(_))));
        let perturbed = MediumSpec::paper(Deformation::identity(), 0.1);
        assert!(matches!(locate_dirac_points(&perturbed, 1, 12), Err(Error::Precondition(_))));
        assert!(matches!(BulkModel::new(&perturbed, 6), Err(Error::InvalidGrid(_))));
    }
}
