//! Sparse Hermitian matrices, dense eigensolves, shift-invert block Krylov and bordered solves.

use crate::error::{Error, Result};
use faer::complex_native::c64;
use faer::prelude::SpSolver;
use faer::sparse::SparseColMat;
use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn to_f(z: C64) -> c64 {
    c64::new(z.re, z.im)
}

fn from_f(z: c64) -> C64 {
    C64::new(z.re, z.im)
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale(y: &mut [C64], a: C64) {
    for yi in y.iter_mut() {
        *yi *= a;
    }
}

/// Complex sparse matrix in compressed rows.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<C64>,
}

impl Csr {
    /// Duplicate entries are summed.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, C64)>) -> Self {
        t.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0; n + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<C64> = Vec::with_capacity(t.len());
        let mut last = (usize::MAX, usize::MAX);
        for (i, j, v) in t {
            if (i, j) == last {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = (i, j);
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Self { n, indptr, indices, values }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| (self.indptr[i]..self.indptr[i + 1]).map(|p| self.values[p] * x[self.indices[p]]).sum())
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let row = &self.indices[self.indptr[i]..self.indptr[i + 1]];
        match row.binary_search(&j) {
            Ok(p) => self.values[self.indptr[i] + p],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// max |H_ij − conj(H_ji)|
    pub fn hermitian_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.n {
            for p in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[p];
                d = d.max((self.values[p] - self.get(j, i).conj()).norm());
            }
        }
        d
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |i| (self.indptr[i]..self.indptr[i + 1]).map(move |p| (i, self.indices[p], self.values[p])))
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let mut m = Mat::<c64>::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m.write(i, j, to_f(v));
        }
        m
    }

    /// ⟨x, A y⟩
    pub fn form(&self, x: &[C64], y: &[C64]) -> C64 {
        dot(x, &self.matvec(y))
    }
}

/// All eigenpairs of a Hermitian matrix, ascending. Columns of the returned vector list are orthonormal.
pub fn dense_eigh(a: &Csr) -> (Vec<f64>, Vec<Vec<C64>>) {
    let m = a.to_dense();
    let e = m.selfadjoint_eigendecomposition(Side::Lower);
    let s = e.s().column_vector();
    let u = e.u();
    let vals = (0..a.n).map(|i| s.read(i).re).collect();
    let vecs = (0..a.n).map(|j| (0..a.n).map(|i| from_f(u.read(i, j))).collect()).collect();
    (vals, vecs)
}

pub fn dense_eigvalsh(a: &Csr) -> Vec<f64> {
    a.to_dense().selfadjoint_eigenvalues(Side::Lower)
}

/// Sparse LU factorization of A − σI (optionally bordered).
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, c64>,
}

impl SparseLu {
    pub fn new(t: Vec<(usize, usize, C64)>, n: usize) -> Result<Self> {
        let c = Csr::from_triplets(n, t);
        let ft: Vec<(usize, usize, c64)> = c.triplets().map(|(i, j, v)| (i, j, to_f(v))).collect();
        let m = SparseColMat::<usize, c64>::try_new_from_triplets(n, n, &ft).map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let lu = m.sp_lu().map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Self { n, lu })
    }

    pub fn shifted(a: &Csr, sigma: f64) -> Result<Self> {
        let mut t: Vec<_> = a.triplets().collect();
        t.extend((0..a.n).map(|i| (i, i, C64::new(-sigma, 0.0))));
        Self::new(t, a.n)
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut rhs = Mat::<c64>::from_fn(self.n, 1, |i, _| to_f(b[i]));
        self.lu.solve_in_place(rhs.as_mut());
        (0..self.n).map(|i| from_f(rhs.read(i, 0))).collect()
    }

    pub fn solve_many(&self, b: &[Vec<C64>]) -> Vec<Vec<C64>> {
        if b.is_empty() {
            return vec![];
        }
        let mut rhs = Mat::<c64>::from_fn(self.n, b.len(), |i, j| to_f(b[j][i]));
        self.lu.solve_in_place(rhs.as_mut());
        (0..b.len()).map(|j| (0..self.n).map(|i| from_f(rhs.read(i, j))).collect()).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOpts {
    pub block: usize,
    pub tol: f64,
    pub max_dim: usize,
    pub seed: u64,
}

impl Default for KrylovOpts {
    fn default() -> Self {
        Self { block: 4, tol: 1e-11, max_dim: 640, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct EigResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
    pub dim: usize,
}

fn random_col(rng: &mut ChaCha8Rng, n: usize) -> Mat<c64> {
    Mat::from_fn(n, 1, |_, _| c64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
}

/// Orthogonalizes column `x` against columns `start..m` of `v` (twice) and normalizes.
/// Returns None when less than 1e-10 of the reference norm `n0` survives.
fn orthonormalize(x: &mut Mat<c64>, v: &Mat<c64>, start: usize, m: usize, n0: f64) -> Option<()> {
    for _ in 0..2 {
        if m > start {
            let vm = v.as_ref().subcols(start, m - start);
            let c = vm.adjoint() * x.as_ref();
            *x = &*x - vm * &c;
        }
    }
    let nv = x.norm_l2();
    if nv <= 1e-10 * n0.max(1e-300) {
        return None;
    }
    *x = &*x * faer::scale(c64::new(1.0 / nv, 0.0));
    Some(())
}

/// Reserves column capacity by doubling so that appending columns stays amortized O(n).
fn grow(v: &mut Mat<c64>, w: &mut Mat<c64>, need: usize, max_dim: usize) {
    if need > v.col_capacity() {
        let cap = (2 * v.col_capacity()).max(32).max(need).min(max_dim.max(need));
        let n = v.nrows();
        v.reserve_exact(n, cap);
        w.reserve_exact(n, cap);
    }
}

fn col_to_vec(x: faer::ColRef<c64>) -> Vec<C64> {
    (0..x.nrows()).map(|i| from_f(x.read(i))).collect()
}

/// `nev` eigenpairs of Hermitian `a` nearest to `sigma` by shift-invert block Krylov with
/// full reorthogonalization and Rayleigh–Ritz. Sorted ascending.
pub fn eigs_near(a: &Csr, sigma: f64, nev: usize, opts: KrylovOpts) -> Result<EigResult> {
    krylov(a, sigma, nev, opts, &|_| true)
}

/// Shift-invert block Krylov; Ritz pairs whose value satisfies `strict` must reach `opts.tol`,
/// the others only the loose level where their Ritz values are already accurate to ~1e-10.
fn krylov(a: &Csr, sigma: f64, nev: usize, opts: KrylovOpts, strict: &dyn Fn(f64) -> bool) -> Result<EigResult> {
    let n = a.n;
    let nev = nev.min(n);
    if n <= 64 || nev * 3 >= n {
        return dense_near(a, sigma, nev);
    }
    let lu = SparseLu::shifted(a, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let b = opts.block.max(1);
    let max_dim = opts.max_dim.min(n);
    // V (orthonormal basis) and W = (A − σ)⁻¹V, stored column-wise
    let mut v = Mat::<c64>::zeros(n, 0);
    let mut w = Mat::<c64>::zeros(n, 0);
    let mut m = 0usize;
    let mut t: Vec<Vec<C64>> = Vec::new();
    // Gram matrix of the images, G_ij = ⟨w_i, w_j⟩, for cheap Ritz residuals
    let mut g: Vec<Vec<C64>> = Vec::new();
    let mut block: Vec<Mat<c64>> = (0..b).map(|_| random_col(&mut rng, n)).collect();
    loop {
        let mut added: Vec<Vec<C64>> = Vec::new();
        // project the whole block against V at once (twice), then orthonormalize inside the block
        let room = max_dim.saturating_sub(m).min(block.len());
        if room > 0 {
            let mut xb = Mat::<c64>::from_fn(n, room, |i, j| block[j].read(i, 0));
            let norms0: Vec<f64> = (0..room).map(|j| block[j].norm_l2()).collect();
            let m0 = m;
            for _ in 0..2 {
                if m > 0 {
                    let vm = v.as_ref().subcols(0, m);
                    let c = vm.adjoint() * xb.as_ref();
                    xb = &xb - vm * &c;
                }
            }
            for j in 0..room {
                let mut x = xb.as_ref().subcols(j, 1).to_owned();
                let mut ok = orthonormalize(&mut x, &v, m0, m, norms0[j]);
                let mut tries = 0;
                while ok.is_none() && tries < 3 {
                    x = random_col(&mut rng, n);
                    let n0 = x.norm_l2();
                    ok = orthonormalize(&mut x, &v, 0, m, n0);
                    tries += 1;
                }
                if ok.is_some() {
                    grow(&mut v, &mut w, m + 1, max_dim);
                    v.resize_with(n, m + 1, |_, _| c64::new(0.0, 0.0));
                    v.as_mut().col_mut(m).copy_from(x.col(0));
                    added.push(col_to_vec(x.col(0)));
                    m += 1;
                }
            }
        }
        block.clear();
        if added.is_empty() {
            break;
        }
        let ws = lu.solve_many(&added);
        let m0 = m - added.len();
        w.resize_with(n, m, |i, j| to_f(ws[j - m0][i]));
        let wn = w.as_ref().subcols(m0, m - m0);
        let tv = v.as_ref().adjoint() * wn;
        let gv = w.as_ref().adjoint() * wn;
        for row in t.iter_mut().chain(g.iter_mut()) {
            row.resize(m, C64::new(0.0, 0.0));
        }
        t.resize(m, vec![C64::new(0.0, 0.0); m]);
        g.resize(m, vec![C64::new(0.0, 0.0); m]);
        for jj in 0..m - m0 {
            let j = m0 + jj;
            for i in 0..m {
                let tval = from_f(tv.read(i, jj));
                let gval = from_f(gv.read(i, jj));
                t[i][j] = tval;
                t[j][i] = tval.conj();
                g[i][j] = gval;
                g[j][i] = gval.conj();
            }
        }
        block = (0..wn.ncols()).map(|j| wn.subcols(j, 1).to_owned()).collect();
        if m >= nev + b && (m.is_multiple_of(2 * b) || m >= max_dim) {
            let (theta, y) = small_eigh(&t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&p, &q| theta[q].abs().partial_cmp(&theta[p].abs()).unwrap());
            let sel = &order[..nev];
            // ‖W y − θ V y‖² = y†Gy − θ², accurate down to ~1e-7 relative
            let cheap = sel
                .iter()
                .map(|&p| {
                    let yg: C64 = (0..m).map(|i| y[p][i].conj() * (0..m).map(|j| g[i][j] * y[p][j]).sum::<C64>()).sum();
                    let r = (yg.re - theta[p] * theta[p]).max(0.0).sqrt() / theta[p].abs();
                    if strict(sigma + 1.0 / theta[p]) {
                        r
                    } else {
                        r * 1e-2
                    }
                })
                .fold(0.0, f64::max);
            if cheap > 1e-5 && m < max_dim {
                continue;
            }
            let ymat = Mat::<c64>::from_fn(m, nev, |i, k| to_f(y[sel[k]][i]));
            let vy = v.as_ref() * &ymat;
            let wy = w.as_ref() * &ymat;
            let mut worst: f64 = 0.0;
            for (k, &p) in sel.iter().enumerate() {
                let r = (0..n).map(|i| (from_f(wy.read(i, k)) - from_f(vy.read(i, k)) * theta[p]).norm_sqr()).sum::<f64>().sqrt();
                let rel = r / theta[p].abs();
                worst = worst.max(if strict(sigma + 1.0 / theta[p]) { rel } else { rel * opts.tol / 1e-3 });
            }
            if worst < opts.tol || m >= max_dim {
                let mut out: Vec<(f64, Vec<C64>)> = sel
                    .iter()
                    .enumerate()
                    .map(|(k, &p)| {
                        let mut x = col_to_vec(vy.col(k));
                        let nx = norm(&x);
                        scale(&mut x, C64::from(1.0 / nx));
                        (sigma + 1.0 / theta[p], x)
                    })
                    .collect();
                out.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
                let residuals: Vec<f64> = out.iter().map(|(l, x)| residual(a, *l, x)).collect();
                if worst >= 1e2 * opts.tol {
                    return Err(Error::ConvergenceFailure(format!("Krylov dimension {m} reached, Ritz residual {worst:e}")));
                }
                return Ok(EigResult { values: out.iter().map(|p| p.0).collect(), vectors: out.into_iter().map(|p| p.1).collect(), residuals, dim: m });
            }
        }
    }
    Err(Error::ConvergenceFailure("Krylov space exhausted".into()))
}

fn dense_near(a: &Csr, sigma: f64, nev: usize) -> Result<EigResult> {
    let (vals, vecs) = dense_eigh(a);
    let mut order: Vec<usize> = (0..a.n).collect();
    order.sort_by(|&p, &q| (vals[p] - sigma).abs().partial_cmp(&(vals[q] - sigma).abs()).unwrap());
    let mut sel: Vec<usize> = order[..nev].to_vec();
    sel.sort_by(|&p, &q| vals[p].partial_cmp(&vals[q]).unwrap());
    let values: Vec<f64> = sel.iter().map(|&p| vals[p]).collect();
    let vectors: Vec<Vec<C64>> = sel.iter().map(|&p| vecs[p].clone()).collect();
    let residuals = values.iter().zip(&vectors).map(|(l, x)| residual(a, *l, x)).collect();
    Ok(EigResult { values, vectors, residuals, dim: a.n })
}

/// ‖Ax − λx‖
pub fn residual(a: &Csr, lambda: f64, x: &[C64]) -> f64 {
    let ax = a.matvec(x);
    ax.iter().zip(x).map(|(p, q)| (p - q * lambda).norm_sqr()).sum::<f64>().sqrt()
}

/// All eigenvalues of `a` inside [lo, hi], growing the request until the window is covered.
pub fn eigs_in_window(a: &Csr, lo: f64, hi: f64, nev0: usize, opts: KrylovOpts) -> Result<EigResult> {
    // off-center shift: symmetric spectra put an eigenvalue exactly at the midpoint
    let hw = 0.5 * (hi - lo);
    let off = 0.001_234_5 * hw;
    let sigma = 0.5 * (lo + hi) + off;
    let mut nev = nev0.max(4);
    loop {
        let r = krylov(a, sigma, nev, opts, &|l| (lo..=hi).contains(&l))?;
        // the nev nearest eigenvalues are returned, so reaching past hw + off covers the window
        let reach = r.values.iter().map(|l| (l - sigma).abs()).fold(0.0, f64::max);
        if reach > hw + off || nev >= a.n {
            let keep: Vec<usize> = (0..r.values.len()).filter(|&i| (lo..=hi).contains(&r.values[i])).collect();
            return Ok(EigResult {
                values: keep.iter().map(|&i| r.values[i]).collect(),
                vectors: keep.iter().map(|&i| r.vectors[i].clone()).collect(),
                residuals: keep.iter().map(|&i| r.residuals[i]).collect(),
                dim: r.dim,
            });
        }
        nev = (nev * 2).min(a.n);
    }
}

/// Dense Hermitian eigendecomposition of a small matrix given by rows; eigenvectors as rows of y.
pub fn small_eigh(t: &[Vec<C64>]) -> (Vec<f64>, Vec<Vec<C64>>) {
    let m = t.len();
    let a = Mat::<c64>::from_fn(m, m, |i, j| to_f(0.5 * (t[i][j] + t[j][i].conj())));
    let e = a.selfadjoint_eigendecomposition(Side::Lower);
    let s = e.s().column_vector();
    let u = e.u();
    ((0..m).map(|i| s.read(i).re).collect(), (0..m).map(|j| (0..m).map(|i| from_f(u.read(i, j))).collect()).collect())
}

/// Solves (A − E)u = P⊥f with ⟨b_j, u⟩ = 0 via the bordered system
/// [[A − E, B], [B†, 0]]. The basis B must be orthonormal.
pub struct BorderedSolver {
    a: Csr,
    e: f64,
    basis: Vec<Vec<C64>>,
    lu: SparseLu,
}

impl BorderedSolver {
    pub fn new(a: &Csr, e: f64, basis: &[Vec<C64>]) -> Result<Self> {
        let n = a.n;
        let k = basis.len();
        let mut t: Vec<_> = a.triplets().collect();
        t.extend((0..n).map(|i| (i, i, C64::new(-e, 0.0))));
        for (j, b) in basis.iter().enumerate() {
            for (i, &bi) in b.iter().enumerate() {
                if bi.norm() > 0.0 {
                    t.push((i, n + j, bi));
                    t.push((n + j, i, bi.conj()));
                }
            }
        }
        let lu = SparseLu::new(t, n + k)?;
        Ok(Self { a: a.clone(), e, basis: basis.to_vec(), lu })
    }

    pub fn project(&self, f: &[C64]) -> Vec<C64> {
        let mut g = f.to_vec();
        for b in &self.basis {
            let c = dot(b, &g);
            axpy(&mut g, -c, b);
        }
        g
    }

    pub fn solve(&self, f: &[C64]) -> Result<Vec<C64>> {
        let n = self.a.n;
        let pf = self.project(f);
        let mut rhs = pf.clone();
        rhs.extend(std::iter::repeat_n(C64::new(0.0, 0.0), self.basis.len()));
        let mut u = self.lu.solve(&rhs);
        u.truncate(n);
        let u = self.project(&u);
        let au = self.a.matvec(&u);
        let r: Vec<C64> = au.iter().zip(&u).map(|(x, y)| x - y * self.e).collect();
        let res = norm(&self.project(&r).iter().zip(&pf).map(|(x, y)| x - y).collect::<Vec<_>>());
        let rel = res / norm(f).max(1e-300);
        if rel > 1e-9 {
            return Err(Error::IllConditioned(rel));
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, shift: f64) -> Csr {
        let mut t = vec![];
        for i in 0..n {
            t.push((i, i, C64::new(2.0 + shift * (i as f64 / n as f64), 0.0)));
            if i + 1 < n {
                t.push((i, i + 1, C64::new(-1.0, 0.3)));
                t.push((i + 1, i, C64::new(-1.0, -0.3)));
            }
        }
        Csr::from_triplets(n, t)
    }

    #[test]
    fn duplicates_are_summed() {
        let c = Csr::from_triplets(2, vec![(0, 1, C64::new(1.0, 0.0)), (0, 1, C64::new(2.0, 0.0)), (1, 0, C64::new(3.0, 0.0))]);
        assert_eq!(c.get(0, 1), C64::new(3.0, 0.0));
        assert_eq!(c.hermitian_defect(), 0.0);
    }

    #[test]
    fn krylov_matches_dense() {
        let a = chain(600, 3.0);
        let (vals, _) = dense_eigh(&a);
        let r = eigs_near(&a, 2.0, 12, KrylovOpts::default()).unwrap();
        let mut near: Vec<f64> = vals.clone();
        near.sort_by(|p, q| (p - 2.0).abs().partial_cmp(&(q - 2.0).abs()).unwrap());
        let mut near = near[..12].to_vec();
        near.sort_by(|p, q| p.partial_cmp(q).unwrap());
        for (x, y) in near.iter().zip(&r.values) {
            assert!((x - y).abs() < 1e-9, "{x} {y}");
        }
        assert!(r.residuals.iter().all(|r| *r < 1e-8));
    }

    #[test]
    fn window_is_complete() {
        let a = chain(500, 1.0);
        let (vals, _) = dense_eigh(&a);
        let want: Vec<f64> = vals.iter().cloned().filter(|l| (1.0..1.6).contains(l)).collect();
        let r = eigs_in_window(&a, 1.0, 1.6, 4, KrylovOpts::default()).unwrap();
        assert_eq!(want.len(), r.values.len());
        for (x, y) in want.iter().zip(&r.values) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn bordered_inverts_on_complement() {
        let a = chain(200, 0.0);
        let (vals, vecs) = dense_eigh(&a);
        let e = vals[50];
        let s = BorderedSolver::new(&a, e, &[vecs[50].clone()]).unwrap();
        let g = s.project(&(0..200).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect::<Vec<_>>());
        let ag = a.matvec(&g);
        let f: Vec<C64> = ag.iter().zip(&g).map(|(x, y)| x - y * e).collect();
        let u = s.solve(&f).unwrap();
        let err = norm(&u.iter().zip(&g).map(|(x, y)| x - y).collect::<Vec<_>>());
        assert!(err < 1e-8 * norm(&g));
    }
}
