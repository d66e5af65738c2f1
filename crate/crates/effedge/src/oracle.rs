//! Closed-form eigenpairs used as independent checks of the discrete solvers.

use crate::operator::EffEdgeOperator;
use edgeflow_core::media::DomainWall;
use edgeflow_core::pauli::{sigma, M2};
use edgeflow_core::quad::adaptive_simpson;
use edgeflow_core::{Error, Result, C64};
use nalgebra::{Matrix2, Matrix4, Vector2};
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

fn apply(m: &M2, v: [C64; 2]) -> [C64; 2] {
    [m[(0, 0)] * v[0] + m[(0, 1)] * v[1], m[(1, 0)] * v[0] + m[(1, 1)] * v[1]]
}

/// Unnormalized eigenfunction of −P²σ₂ + sgn(X)σ₃ for Ω = +1/√2.
fn unit_profile(x: f64) -> [C64; 2] {
    let w = 2f64.powf(0.25) / 2.0;
    let r = 1.0 + SQRT_2;
    if x >= 0.0 {
        let e = (-w * x).exp();
        [C64::new(0.0, r * r * e * (w * x - 3.0 * PI / 8.0).cos()), C64::from(-r * e * (w * x - 3.0 * PI / 8.0).sin())]
    } else {
        let e = (w * x).exp();
        [C64::new(0.0, r * e * (w * x - PI / 8.0).cos()), C64::from(-r * r * e * (w * x - PI / 8.0).sin())]
    }
}

fn unit_norm() -> f64 {
    let w = 2f64.powf(0.25) / 2.0;
    let f = |x: f64| unit_profile(x).iter().map(|z| z.norm_sqr()).sum::<f64>();
    let r = 80.0 / w;
    (adaptive_simpson(&f, -r, 0.0, 1e-14) + adaptive_simpson(&f, 0.0, r, 1e-14)).sqrt()
}

/// Eigenpair of 𝕊(0) = −α₂P_X²σ₂ + ϑ sgn(X)σ₃ from the unit model by scaling X and Pauli conjugation.
#[derive(Debug, Clone)]
pub struct ExactS0Pair {
    pub omega: f64,
    /// +1 for the Ω > 0 branch of the unit model, −1 for its σ₁ partner.
    pub branch: i32,
    pub length: f64,
    pub conj: M2,
    norm: f64,
}

impl ExactS0Pair {
    pub fn eval(&self, x: f64) -> [C64; 2] {
        let mut v = unit_profile(x / self.length);
        if self.branch < 0 {
            v = [v[1], v[0]];
        }
        let c = 1.0 / (self.norm * self.length.sqrt());
        let v = apply(&self.conj, v);
        [v[0] * c, v[1] * c]
    }

    /// ω of the oscillating exponential, in units of X.
    pub fn rate(&self) -> f64 {
        2f64.powf(0.25) / 2.0 / self.length
    }
}

/// The two gap eigenpairs of the solvable sgn-wall model with α₀ = 1.
pub fn exact_s0_oracle(alpha2: f64, theta: f64) -> Result<Vec<ExactS0Pair>> {
    if alpha2 == 0.0 || theta == 0.0 || !alpha2.is_finite() || !theta.is_finite() {
        return Err(Error::UnsupportedParameters(format!("solvable model needs α₂ ≠ 0 and ϑ ≠ 0 (got {alpha2}, {theta})")));
    }
    let mut conj = M2::identity();
    if alpha2 < 0.0 {
        conj *= sigma(3);
    }
    if theta < 0.0 {
        conj *= sigma(2);
    }
    let length = (alpha2.abs() / theta.abs()).sqrt();
    let norm = unit_norm();
    let om = theta.abs() * FRAC_1_SQRT_2;
    Ok(vec![ExactS0Pair { omega: -om, branch: -1, length, conj, norm }, ExactS0Pair { omega: om, branch: 1, length, conj, norm }])
}

/// Gap eigenpair of 𝕊(0) = (1−α₀)P²σ₀ − α₂P²σ₂ + ϑ sgn σ₃ built from decaying exponentials
/// on each half-line, matched in value and derivative at X = 0.
#[derive(Debug, Clone)]
pub struct ModeEigenpair {
    pub omega: f64,
    /// (rate μ, coefficient·vector) with Re μ > 0.
    pub left: Vec<(C64, [C64; 2])>,
    /// (rate μ, coefficient·vector) with Re μ < 0.
    pub right: Vec<(C64, [C64; 2])>,
    /// σ_min/σ_max of the matching matrix at the root.
    pub defect: f64,
}

impl ModeEigenpair {
    pub fn eval(&self, x: f64) -> [C64; 2] {
        let modes = if x >= 0.0 { &self.right } else { &self.left };
        modes.iter().fold([C64::new(0.0, 0.0); 2], |acc, (mu, v)| {
            let e = (mu * x).exp();
            [acc[0] + v[0] * e, acc[1] + v[1] * e]
        })
    }
}

type Modes = [(C64, Vector2<C64>); 2];

/// Eigenvalues μ² and eigenvectors of B⁻¹(ϑsσ₃ − Ω); returns the two modes decaying on the side `s`.
fn half_line_modes(binv: &Matrix2<C64>, theta: f64, s: f64, omega: f64) -> Option<Modes> {
    let c = binv * (sigma(3) * C64::from(theta * s) - M2::identity() * C64::from(omega));
    let tr = c[(0, 0)] + c[(1, 1)];
    let det = c[(0, 0)] * c[(1, 1)] - c[(0, 1)] * c[(1, 0)];
    let disc = (tr * tr * 0.25 - det).sqrt();
    let mut out = Vec::new();
    for lam in [tr * 0.5 + disc, tr * 0.5 - disc] {
        let mut mu = lam.sqrt();
        // decaying towards s·∞
        if mu.re * s > 0.0 {
            mu = -mu;
        }
        if mu.re.abs() < 1e-12 {
            return None;
        }
        let v1 = Vector2::new(c[(0, 1)], lam - c[(0, 0)]);
        let v2 = Vector2::new(lam - c[(1, 1)], c[(1, 0)]);
        let v = if v1.norm() > v2.norm() { v1 } else { v2 };
        if v.norm() < 1e-300 {
            return None;
        }
        out.push((mu, v / C64::from(v.norm())));
    }
    Some([out[0], out[1]])
}

fn matching_matrix(binv: &Matrix2<C64>, theta: f64, omega: f64) -> Option<(Matrix4<C64>, Modes, Modes)> {
    let r = half_line_modes(binv, theta, 1.0, omega)?;
    let l = half_line_modes(binv, theta, -1.0, omega)?;
    let mut m = Matrix4::zeros();
    for (j, (mu, v)) in r.iter().chain(l.iter()).enumerate() {
        let sg = if j < 2 { 1.0 } else { -1.0 };
        for i in 0..2 {
            m[(i, j)] = v[i] * sg;
            m[(i + 2, j)] = v[i] * mu * sg;
        }
    }
    Some((m, r, l))
}

fn smin_ratio(m: &Matrix4<C64>) -> f64 {
    let s = m.singular_values();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for x in s.iter() {
        lo = lo.min(*x);
        hi = hi.max(*x);
    }
    lo / hi
}

/// Gap eigenpairs of the sgn-wall 𝕊(0) for general α₀ by root-finding on the matching determinant.
pub fn matching_s0_oracle(alpha: [f64; 3], theta: f64) -> Result<Vec<ModeEigenpair>> {
    let b = M2::identity() * C64::from(1.0 - alpha[0]) - sigma(2) * C64::from(alpha[2]);
    let binv = b.try_inverse().ok_or_else(|| Error::UnsupportedParameters("(1−α₀)σ₀ − α₂σ₂ is singular".into()))?;
    let op = EffEdgeOperator::vertical(alpha, theta, DomainWall::Sign);
    let (lo, hi) = crate::essential::essential_spectrum_edges(&op, 0.0)?;
    let f = |om: f64| matching_matrix(&binv, theta, om).map(|(m, _, _)| smin_ratio(&m)).unwrap_or(f64::INFINITY);
    let n = 2000;
    let eps = 1e-6 * (hi - lo);
    let grid: Vec<f64> = (0..=n).map(|i| lo + eps + (hi - lo - 2.0 * eps) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let mut out = Vec::new();
    for i in 1..n {
        if vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1] && vals[i] < 0.05 {
            let (om, _) = golden(&f, grid[i - 1], grid[i + 1]);
            let (m, r, l) = matching_matrix(&binv, theta, om).unwrap();
            let defect = smin_ratio(&m);
            if defect > 1e-10 {
                continue;
            }
            let svd = m.svd(false, true);
            let vt = svd.v_t.unwrap();
            let k = (0..4).min_by(|&p, &q| svd.singular_values[p].partial_cmp(&svd.singular_values[q]).unwrap()).unwrap();
            let coef: Vec<C64> = (0..4).map(|j| vt[(k, j)].conj()).collect();
            let pack = |modes: &Modes, off: usize| modes.iter().enumerate().map(|(j, (mu, v))| (*mu, [v[0] * coef[off + j], v[1] * coef[off + j]])).collect::<Vec<_>>();
            let mut pair = ModeEigenpair { omega: om, left: pack(&l, 2), right: pack(&r, 0), defect };
            normalize_modes(&mut pair);
            out.push(pair);
        }
    }
    Ok(out)
}

fn golden(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        if (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Exact L² normalization: ∫₀^∞ e^{(μ̄_i + μ_j)X} = −1/(μ̄_i + μ_j) on the right, and mirrored on the left.
fn normalize_modes(p: &mut ModeEigenpair) {
    let mut tot = 0.0;
    for (modes, sg) in [(&p.right, 1.0), (&p.left, -1.0)] {
        for (mi, vi) in modes {
            for (mj, vj) in modes {
                let ip = vi[0].conj() * vj[0] + vi[1].conj() * vj[1];
                tot += (ip * (-sg) / (mi.conj() + mj)).re;
            }
        }
    }
    let c = 1.0 / tot.sqrt();
    let ph = {
        let v = p.eval(0.0);
        let big = if v[0].norm() > v[1].norm() { v[0] } else { v[1] };
        big.conj() / big.norm()
    };
    for m in p.right.iter_mut().chain(p.left.iter_mut()) {
        m.1 = [m.1[0] * ph * c, m.1[1] * ph * c];
    }
}

/// ψ⋆(X) = exp(−|c|/√g ∫₀^X χ) ψ_λ, the zero mode of Ɗ±(0).
#[derive(Debug, Clone)]
pub struct DiracZeroMode {
    pub spinor: [C64; 2],
    pub lambda: f64,
    pub decay: f64,
    pub wall: DomainWall,
    norm: f64,
}

impl DiracZeroMode {
    pub fn envelope(&self, x: f64) -> f64 {
        (-self.decay * self.wall.integral(x)).exp()
    }

    pub fn eval(&self, x: f64) -> [C64; 2] {
        let e = self.envelope(x) / self.norm;
        [self.spinor[0] * e, self.spinor[1] * e]
    }
}

/// The matrix [[ia₀, ia₁+a₂], [−ia₁+a₂, −ia₀]] whose eigenvectors carry the zero modes.
pub fn zero_mode_matrix(a: [f64; 3]) -> M2 {
    let i = C64::new(0.0, 1.0);
    M2::new(i * a[0], i * a[1] + a[2], -i * a[1] + a[2], -i * a[0])
}

/// Zero mode of Ɗ⁺ (plus = true) or Ɗ⁻.
pub fn dirac_zero_mode(a: [f64; 3], c: f64, wall: DomainWall, plus: bool) -> Result<DiracZeroMode> {
    let g = -a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
    if g <= 0.0 || c == 0.0 {
        return Err(Error::NoBandGap(format!("zero mode needs −a₀²+a₁²+a₂² > 0 and c ≠ 0 (g = {g}, c = {c})")));
    }
    let lambda = if plus { -c.signum() * g.sqrt() } else { c.signum() * g.sqrt() };
    let m = zero_mode_matrix(a);
    let l = C64::from(lambda);
    let v1 = [m[(0, 1)], l - m[(0, 0)]];
    let v2 = [l - m[(1, 1)], m[(1, 0)]];
    let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
    let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
    let v = if n1 > n2 { v1 } else { v2 };
    let nv = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let big = if v[0].norm() >= v[1].norm() { v[0] } else { v[1] };
    let ph = big.conj() / big.norm();
    let spinor = [v[0] * ph / nv, v[1] * ph / nv];
    let decay = c.abs() / g.sqrt();
    let mut z = DiracZeroMode { spinor, lambda, decay, wall, norm: 1.0 };
    let f = |x: f64| z.envelope(x).powi(2);
    let r = zero_mode_extent(&z);
    z.norm = (adaptive_simpson(&f, -r, 0.0, 1e-14) + adaptive_simpson(&f, 0.0, r, 1e-14)).sqrt();
    Ok(z)
}

/// Half-width beyond which the squared envelope is below 1e-40.
fn zero_mode_extent(z: &DiracZeroMode) -> f64 {
    let mut r = 1.0;
    while r < 1e6 && (z.envelope(r).powi(2) > 1e-40 || z.envelope(-r).powi(2) > 1e-40) {
        r *= 1.5;
    }
    r
}

/// Discrete L² distance between a discrete eigenvector and a unit-norm continuum function,
/// after aligning the phase.
pub fn l2_error(op: &EffEdgeOperator, v: &[C64], f: &dyn Fn(f64) -> [C64; 2]) -> f64 {
    let s = op.sample(f);
    let nv = op.inner(v, v).re.sqrt();
    let ov = op.inner(v, &s);
    let ph = if ov.norm() > 0.0 { ov / ov.norm() } else { C64::new(1.0, 0.0) };
    let d: Vec<C64> = s.iter().zip(v).map(|(p, q)| p - q * ph / nv).collect();
    op.inner(&d, &d).re.sqrt()
}
