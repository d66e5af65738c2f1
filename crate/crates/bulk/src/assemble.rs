//! Finite-difference assembly of D†·M·D + V on periodic cells and strips.
//!
//! D is the forward (or backward) difference with Bloch phase; the two products are averaged.
//! Derivatives with respect to quasimomentum are taken entrywise.

use edgeflow_core::linalg::Csr;
use edgeflow_core::C64;
use nalgebra::Matrix2;

/// Node layout: n1 × n2 nodes, index i1·n2 + i2, spacing h. Direction 2 is always periodic.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub n1: usize,
    pub n2: usize,
    pub periodic1: bool,
    pub h: f64,
}

impl Layout {
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn neighbor(&self, i1: usize, i2: usize, dir: usize, step: i64) -> Option<usize> {
        let (mut a, mut b) = (i1 as i64, i2 as i64);
        if dir == 0 {
            a += step;
            if self.periodic1 {
                a = a.rem_euclid(self.n1 as i64);
            } else if a < 0 || a >= self.n1 as i64 {
                return None;
            }
        } else {
            b = (b + step).rem_euclid(self.n2 as i64);
        }
        Some(a as usize * self.n2 + b as usize)
    }
}

/// Assembles Σ_x ½[(D u)† M (D u) + (B u)† M (B u)] (+ V on the diagonal when `derivs` is empty),
/// differentiated with respect to k along each direction listed in `derivs`.
pub fn assemble(layout: &Layout, mfield: &[Matrix2<C64>], v: Option<&[f64]>, k: [f64; 2], derivs: &[usize]) -> Csr {
    let h = layout.h;
    let n = layout.len();
    let mut t: Vec<(usize, usize, C64)> = Vec::with_capacity(n * 32);
    let ih = C64::new(0.0, h);
    for i1 in 0..layout.n1 {
        for i2 in 0..layout.n2 {
            let x = i1 * layout.n2 + i2;
            let m = &mfield[x];
            for fwd in [true, false] {
                // support of the difference along each direction: (node, coefficient, phase exponent s)
                let supp = |dir: usize| -> [(Option<usize>, C64, i64); 2] {
                    let ph = k[dir] * h;
                    if fwd {
                        [(layout.neighbor(i1, i2, dir, 1), C64::from_polar(1.0 / h, ph), 1), (Some(x), C64::from(-1.0 / h), 0)]
                    } else {
                        [(Some(x), C64::from(1.0 / h), 0), (layout.neighbor(i1, i2, dir, -1), -C64::from_polar(1.0 / h, -ph), -1)]
                    }
                };
                for mm in 0..2 {
                    for nn in 0..2 {
                        let mv = m[(mm, nn)];
                        if mv.norm() == 0.0 {
                            continue;
                        }
                        for (a, ca, sa) in supp(mm) {
                            let Some(a) = a else { continue };
                            for (b, cb, sb) in supp(nn) {
                                let Some(b) = b else { continue };
                                let mut val = ca.conj() * mv * cb * 0.5;
                                for &p in derivs {
                                    let f = -(if mm == p { sa } else { 0 }) + if nn == p { sb } else { 0 };
                                    val *= ih * f as f64;
                                }
                                if val.norm() != 0.0 {
                                    t.push((a, b, val));
                                }
                            }
                        }
                    }
                }
            }
            if derivs.is_empty() {
                if let Some(v) = v {
                    t.push((x, x, C64::from(v[x])));
                }
            }
        }
    }
    Csr::from_triplets(n, t)
}

/// Pointwise Hermitian coefficient G − F·σ₂.
pub fn coefficient(metric: &Matrix2<f64>, f: f64) -> Matrix2<C64> {
    let i = C64::new(0.0, 1.0);
    Matrix2::new(
        C64::from(metric[(0, 0)]),
        C64::from(metric[(0, 1)]) + i * f,
        C64::from(metric[(1, 0)]) - i * f,
        C64::from(metric[(1, 1)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn free(n: usize, k: [f64; 2], derivs: &[usize]) -> Csr {
        let l = Layout { n1: n, n2: n, periodic1: true, h: 1.0 / n as f64 };
        let m = vec![coefficient(&Matrix2::identity(), 0.0); n * n];
        assemble(&l, &m, Some(&vec![0.0; n * n]), k, derivs)
    }

    #[test]
    fn plane_waves_diagonalize_free_stencil() {
        // e^{2πi(a x1 + b x2)} is an eigenvector with symbol Σ (2/h²)(1 − cos((k + 2πa)h))
        let n = 12;
        let h = 1.0 / n as f64;
        let k = [0.7, -1.3];
        let a = free(n, k, &[]);
        let (p, q) = (2i64, -3i64);
        let u: Vec<C64> = (0..n * n).map(|x| C64::from_polar(1.0, 2.0 * PI * (p * (x / n) as i64 + q * (x % n) as i64) as f64 / n as f64)).collect();
        let sym = |kk: f64| 2.0 / (h * h) * (1.0 - (kk * h).cos());
        let lam = sym(k[0] + 2.0 * PI * p as f64) + sym(k[1] + 2.0 * PI * q as f64);
        let au = a.matvec(&u);
        for (x, y) in au.iter().zip(&u) {
            assert!((x - y * lam).norm() < 1e-9);
        }
        // first and second k-derivatives of the symbol
        let d = free(n, k, &[0]).matvec(&u);
        let dsym = 2.0 / h * ((k[0] + 2.0 * PI * p as f64) * h).sin();
        assert!((d[5] - u[5] * dsym).norm() < 1e-9);
        let dd = free(n, k, &[1, 1]).matvec(&u);
        let ddsym = 2.0 * ((k[1] + 2.0 * PI * q as f64) * h).cos();
        assert!((dd[7] - u[7] * ddsym).norm() < 1e-9);
        assert!(free(n, k, &[0, 1]).matvec(&u).iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn hermitian_with_magnetic_and_metric() {
        let n = 10;
        let l = Layout { n1: n, n2: n, periodic1: true, h: 0.1 };
        let g = Matrix2::new(1.1, 0.2, 0.2, 0.9);
        let m: Vec<_> = (0..n * n).map(|x| coefficient(&g, (x as f64 * 0.37).sin())).collect();
        let a = assemble(&l, &m, None, [0.3, 2.0], &[]);
        assert!(a.hermitian_defect() < 1e-12);
        let ls = Layout { n1: 7, n2: n, periodic1: false, h: 0.1 };
        let a = assemble(&ls, &m[..70], None, [0.0, 2.0], &[]);
        assert!(a.hermitian_defect() < 1e-12);
    }
}
