//! One-dimensional quadrature.

pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let c = 0.5 * (a + b);
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    step(f, a, b, fa, fb, fc, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fb: f64, fc: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let (d, e) = (0.5 * (a + c), 0.5 * (c + b));
    let (fd, fe) = (f(d), f(e));
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        step(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1) + step(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
    }
}

/// Composite trapezoid on samples with uniform spacing h.
pub fn trapezoid(y: &[f64], h: f64) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    h * (y.iter().sum::<f64>() - 0.5 * (y[0] + y[y.len() - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_exp() {
        assert!((adaptive_simpson(&|x| x * x, 0.0, 3.0, 1e-12) - 9.0).abs() < 1e-12);
        assert!((adaptive_simpson(&|x| x.exp(), -1.0, 1.0, 1e-13) - (1f64.exp() - (-1f64).exp())).abs() < 1e-12);
        assert!((adaptive_simpson(&|x| x, 2.0, 0.0, 1e-12) + 2.0).abs() < 1e-13);
    }
}
