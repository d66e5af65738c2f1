//! Potentials, magnetic profiles, domain walls and linear deformations.

use crate::error::{Error, Result};
use crate::lattice::{Grid, SymOp};
use crate::quad;
use nalgebra::Matrix2;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// Periodized radial mollifier amplitude·exp(1 − 1/(1 − (ρ/width)²)).
    PeriodizedBump { amplitude: f64, width: f64 },
    /// Σ c·cos(2π m·x).
    Fourier { coefficients: Vec<([i64; 2], f64)> },
}

impl PotentialSpec {
    pub fn paper() -> Self {
        PotentialSpec::PeriodizedBump { amplitude: -150.0, width: 0.25 }
    }

    pub fn zero() -> Self {
        PotentialSpec::Fourier { coefficients: vec![] }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            PotentialSpec::PeriodizedBump { amplitude, width } => {
                let mut s = 0.0;
                for a in -1..=1 {
                    for b in -1..=1 {
                        let rho = ((x - a as f64).powi(2) + (y - b as f64).powi(2)).sqrt();
                        s += bump(rho, *width);
                    }
                }
                amplitude * s
            }
            PotentialSpec::Fourier { coefficients } => fourier(coefficients, x, y),
        }
    }
}

fn bump(rho: f64, width: f64) -> f64 {
    let t = rho / width;
    if t >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

fn fourier(c: &[([i64; 2], f64)], x: f64, y: f64) -> f64 {
    c.iter().map(|(m, a)| a * (2.0 * PI * (m[0] as f64 * x + m[1] as f64 * y)).cos()).sum()
}

/// Real cosine series A(x) = Σ c·cos(2π m·x).
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticSpec {
    pub coefficients: Vec<([i64; 2], f64)>,
}

impl MagneticSpec {
    pub fn paper() -> Self {
        Self { coefficients: vec![([1, 0], 5.0), ([0, 1], 5.0), ([1, 1], 5.0), ([1, -1], 5.0)] }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        fourier(&self.coefficients, x, y)
    }
}

pub fn sample_potential(spec: &PotentialSpec, grid: &Grid) -> Result<Vec<f64>> {
    if let PotentialSpec::PeriodizedBump { width, .. } = spec {
        if *width >= 0.5 || *width <= 0.0 {
            return Err(Error::WidthTooLarge(*width));
        }
    }
    Ok((0..grid.len()).map(|p| { let c = grid.coord(p); spec.eval(c.x, c.y) }).collect())
}

pub fn sample_magnetic(spec: &MagneticSpec, grid: &Grid) -> Vec<f64> {
    (0..grid.len()).map(|p| { let c = grid.coord(p); spec.eval(c.x, c.y) }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    pub parity: f64,
    pub conj: f64,
    pub rotation: f64,
    pub swap: f64,
}

impl SymmetryReport {
    pub fn passes(&self) -> bool {
        [self.parity, self.conj, self.rotation, self.swap].iter().all(|d| *d < 1e-10)
    }
}

/// Max pointwise deviation of a real field under 𝒫, 𝒞, ℛ and Σ₁.
pub fn validate_square_symmetry(field: &[f64], grid: &Grid) -> Result<SymmetryReport> {
    if grid.n % 2 == 1 {
        return Err(Error::GridNotSymmetric(grid.n));
    }
    let dev = |op| {
        let g = grid.apply_real(op, field);
        g.iter().zip(field).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    Ok(SymmetryReport { parity: dev(SymOp::Parity), conj: 0.0, rotation: dev(SymOp::Rotation), swap: dev(SymOp::Swap) })
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainWall {
    /// tanh(steepness·X)
    Tanh { steepness: f64 },
    /// sgn(X) with χ(0) = 0
    Sign,
    /// tanh(steepness·X) + height·exp(−X²)
    TanhBump { steepness: f64, height: f64 },
    /// tanh(X−L) + (1 − tanh(X+L))
    MultiEven { l: f64 },
    /// tanh(X−L) − (1 + tanh X) + (1 + tanh(X+L))
    MultiOdd { l: f64 },
    /// 1 − exp(−(steepness·X)²); even, not a wall
    Notch { steepness: f64 },
    /// χ ≡ value
    Constant { value: f64 },
    /// piecewise linear, constant beyond the ends
    Table { xs: Vec<f64>, ys: Vec<f64> },
}

impl DomainWall {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            DomainWall::Tanh { steepness } => (steepness * x).tanh(),
            DomainWall::Sign => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            DomainWall::TanhBump { steepness, height } => (steepness * x).tanh() + height * (-x * x).exp(),
            DomainWall::MultiEven { l } => (x - l).tanh() + (1.0 - (x + l).tanh()),
            DomainWall::MultiOdd { l } => (x - l).tanh() - (1.0 + x.tanh()) + (1.0 + (x + l).tanh()),
            DomainWall::Notch { steepness } => 1.0 - (-(steepness * x).powi(2)).exp(),
            DomainWall::Constant { value } => *value,
            DomainWall::Table { xs, ys } => {
                if xs.is_empty() {
                    return 0.0;
                }
                if x <= xs[0] {
                    return ys[0];
                }
                if x >= xs[xs.len() - 1] {
                    return ys[ys.len() - 1];
                }
                let i = xs.partition_point(|&t| t <= x) - 1;
                let s = (x - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] * (1.0 - s) + ys[i + 1] * s
            }
        }
    }

    /// ∫₀^X χ.
    pub fn integral(&self, x: f64) -> f64 {
        match self {
            DomainWall::Tanh { steepness } => log_cosh(steepness * x) / steepness,
            DomainWall::Sign => x.abs(),
            DomainWall::Constant { value } => value * x,
            _ => quad::adaptive_simpson(&|t| self.eval(t), 0.0, x, 1e-13),
        }
    }

    /// Odd walls satisfy χ(−X) = −χ(X).
    pub fn is_odd(&self) -> bool {
        matches!(self, DomainWall::Tanh { .. } | DomainWall::Sign | DomainWall::MultiOdd { .. })
    }

    pub fn is_even(&self) -> bool {
        matches!(self, DomainWall::MultiEven { .. } | DomainWall::Notch { .. } | DomainWall::Constant { .. })
    }

    /// Number of sign changes of χ on a fine sample of [−span, span].
    pub fn sign_transitions(&self, span: f64) -> usize {
        let n = 20001;
        let mut last = 0.0;
        let mut count = 0;
        for i in 0..n {
            let x = -span + 2.0 * span * i as f64 / (n - 1) as f64;
            let v = self.eval(x);
            if v.abs() > 1e-12 {
                if last != 0.0 && v.signum() != last {
                    count += 1;
                }
                last = v.signum();
            }
        }
        count
    }

    /// Largest |X| at which |χ(X)| < 0.99, searched up to `span`.
    pub fn transition_half_width(&self, span: f64) -> f64 {
        let n = 40001;
        let mut w: f64 = 0.0;
        for i in 0..n {
            let x = -span + 2.0 * span * i as f64 / (n - 1) as f64;
            if self.eval(x).abs() < 0.99 {
                w = w.max(x.abs());
            }
        }
        w
    }
}

/// log cosh without overflow.
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deformation {
    pub t: Matrix2<f64>,
    pub metric: Matrix2<f64>,
    pub det_tinv: f64,
}

impl Deformation {
    pub fn identity() -> Self {
        Self::new(Matrix2::identity()).unwrap()
    }

    pub fn new(t: Matrix2<f64>) -> Result<Self> {
        let (metric, det_tinv) = pullback_coefficients(&t)?;
        Ok(Self { t, metric, det_tinv })
    }

    /// T(φ) = [[cos φ, −sin φ], [−sin φ, cos φ]].
    pub fn tilt(phi: f64) -> Result<Self> {
        let (s, c) = phi.sin_cos();
        Self::new(Matrix2::new(c, -s, -s, c))
    }

    /// T proportional to the identity.
    pub fn is_volumetric(&self) -> bool {
        let t = &self.t;
        t[(0, 1)].abs() < 1e-14 && t[(1, 0)].abs() < 1e-14 && (t[(0, 0)] - t[(1, 1)]).abs() < 1e-14
    }
}

/// ((TᵀT)⁻¹, det T⁻¹).
pub fn pullback_coefficients(t: &Matrix2<f64>) -> Result<(Matrix2<f64>, f64)> {
    let det = t.determinant();
    if det.abs() < 1e-14 {
        return Err(Error::SingularDeformation(det));
    }
    let g = (t.transpose() * t).try_inverse().ok_or(Error::SingularDeformation(det))?;
    let g = (g + g.transpose()) * 0.5;
    Ok((g, 1.0 / det))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediumSpec {
    pub potential: PotentialSpec,
    pub magnetic: MagneticSpec,
    pub deformation: Deformation,
    pub wall: DomainWall,
    pub delta: f64,
    pub r: i32,
}

impl MediumSpec {
    /// Paper bump potential and magnetic series; r is chosen from the deformation.
    pub fn paper(deformation: Deformation, delta: f64) -> Self {
        let r = if deformation.is_volumetric() { 2 } else { 1 };
        Self {
            potential: PotentialSpec::paper(),
            magnetic: MagneticSpec::paper(),
            deformation,
            wall: DomainWall::Tanh { steepness: 10.0 },
            delta,
            r,
        }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta < 0.0 {
            return Err(Error::Precondition(format!("delta = {} < 0", self.delta)));
        }
        let want = if self.deformation.is_volumetric() { 2 } else { 1 };
        if self.r != want {
            return Err(Error::Precondition(format!("scaling exponent r = {} but deformation requires {}", self.r, want)));
        }
        Ok(())
    }

    /// δ^r
    pub fn strength(&self) -> f64 {
        self.delta.powi(self.r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_minimum_at_center() {
        let g = Grid::new(20).unwrap();
        let v = sample_potential(&PotentialSpec::paper(), &g).unwrap();
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((min + 150.0).abs() < 1e-12);
        assert!((v[0] + 150.0).abs() < 1e-12);
        assert!(validate_square_symmetry(&v, &g).unwrap().passes());
    }

    #[test]
    fn zero_amplitude_and_width_check() {
        let g = Grid::new(8).unwrap();
        let v = sample_potential(&PotentialSpec::PeriodizedBump { amplitude: 0.0, width: 0.25 }, &g).unwrap();
        assert!(v.iter().all(|x| *x == 0.0));
        let bad = PotentialSpec::PeriodizedBump { amplitude: 1.0, width: 0.6 };
        assert_eq!(sample_potential(&bad, &g), Err(Error::WidthTooLarge(0.6)));
    }

    #[test]
    fn single_cosine_breaks_rotation() {
        let g = Grid::new(20).unwrap();
        let c = PotentialSpec::Fourier { coefficients: vec![([1, 0], 1.0)] };
        let v = sample_potential(&c, &g).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15);
        let rep = validate_square_symmetry(&v, &g).unwrap();
        assert!(rep.rotation > 0.1 && !rep.passes());
        let a = sample_magnetic(&MagneticSpec::paper(), &g);
        assert!(validate_square_symmetry(&a, &g).unwrap().passes());
        assert_eq!(validate_square_symmetry(&[0.0; 25], &Grid::new(5).unwrap()), Err(Error::GridNotSymmetric(5)));
    }

    #[test]
    fn walls() {
        assert_eq!(DomainWall::Tanh { steepness: 10.0 }.eval(0.0), 0.0);
        assert_eq!(DomainWall::Sign.eval(-3.0), -1.0);
        let l = 20.0f64;
        let exact = (-l).tanh() + (1.0 - l.tanh());
        assert_eq!(DomainWall::MultiEven { l }.eval(0.0), exact);
        assert!((exact + 1.0).abs() < 1e-15);
        let e = DomainWall::MultiEven { l };
        assert!(e.eval(l + 40.0) * e.eval(-l - 40.0) > 0.0);
        let o = DomainWall::MultiOdd { l };
        assert!(o.eval(l + 40.0) * o.eval(-l - 40.0) < 0.0);
        assert_eq!(e.sign_transitions(60.0), 2);
        assert_eq!(o.sign_transitions(60.0), 3);
    }

    #[test]
    fn wall_integrals() {
        let w = DomainWall::Tanh { steepness: 2.0 };
        let num = quad::adaptive_simpson(&|t| w.eval(t), 0.0, 3.0, 1e-13);
        assert!((w.integral(3.0) - num).abs() < 1e-10);
        assert!((log_cosh(800.0) - (800.0 - std::f64::consts::LN_2)).abs() < 1e-12);
        let t = DomainWall::Table { xs: vec![-1.0, 1.0], ys: vec![-1.0, 1.0] };
        assert!((t.eval(0.5) - 0.5).abs() < 1e-15 && t.eval(4.0) == 1.0);
    }

    #[test]
    fn pullback_examples() {
        let d = Deformation::identity();
        assert_eq!(d.metric, Matrix2::identity());
        assert_eq!(d.det_tinv, 1.0);
        let phi = PI / 100.0;
        let d = Deformation::tilt(phi).unwrap();
        let (sec, tan) = (1.0 / (2.0 * phi).cos(), (2.0 * phi).tan());
        let want = Matrix2::new(sec * sec, sec * tan, sec * tan, sec * sec);
        assert!((d.metric - want).norm() < 1e-12);
        assert!((d.det_tinv - sec).abs() < 1e-12);
        let v = Deformation::new(Matrix2::identity() * 2.0).unwrap();
        assert!((v.metric - Matrix2::identity() / 4.0).norm() < 1e-15 && v.det_tinv == 0.25);
        assert!(v.is_volumetric());
        assert!(matches!(Deformation::new(Matrix2::zeros()), Err(Error::SingularDeformation(_))));
    }
}
