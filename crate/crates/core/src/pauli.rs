//! Pauli matrices and small 2×2 helpers.

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

pub type M2 = Matrix2<C64>;

const O: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn sigma0() -> M2 {
    M2::new(ONE, O, O, ONE)
}

pub fn sigma1() -> M2 {
    M2::new(O, ONE, ONE, O)
}

pub fn sigma2() -> M2 {
    M2::new(O, -I, I, O)
}

pub fn sigma3() -> M2 {
    M2::new(ONE, O, O, -ONE)
}

/// σ by index 0..=3.
pub fn sigma(l: usize) -> M2 {
    match l {
        0 => sigma0(),
        1 => sigma1(),
        2 => sigma2(),
        3 => sigma3(),
        _ => panic!("Pauli index {l} out of range"),
    }
}

/// v·σ = v0 σ0 + v1 σ1 + v2 σ2 for a real triple.
pub fn dot_sigma(v: [f64; 3]) -> M2 {
    sigma0() * C64::from(v[0]) + sigma1() * C64::from(v[1]) + sigma2() * C64::from(v[2])
}

/// Counter-clockwise rotation R = iσ₂ = [[0, 1], [−1, 0]] (real form).
pub fn rot() -> nalgebra::Matrix2<f64> {
    nalgebra::Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algebra() {
        let s = [sigma1(), sigma2(), sigma3()];
        for a in &s {
            assert!((a * a - sigma0()).norm() < 1e-15);
        }
        assert!((s[0] * s[1] - sigma3() * I).norm() < 1e-15);
        let r = sigma2() * I;
        assert!((r.map(|z| z.re) - rot()).norm() < 1e-15);
    }
}
