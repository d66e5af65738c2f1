//! Essential spectrum edges from the constant-coefficient symbols at X → ±∞.

use crate::operator::{Coeffs, EffEdgeOperator, Kind, Pauli4, SchrodingerSymbol};
use edgeflow_core::{Error, Result};

const FAR: f64 = 1e6;

/// Limits χ(−∞), χ(+∞).
fn wall_limits(op: &EffEdgeOperator) -> [f64; 2] {
    [op.wall.eval(-FAR), op.wall.eval(FAR)]
}

/// (σ-vector, σ₀) of the symbol at Fourier variable ξ; the mass enters σ₃.
fn schrodinger_at(s: &SchrodingerSymbol, kappa: f64, mass: f64, xi: f64) -> (f64, [f64; 3]) {
    let c = |p: &Pauli4, l: usize| p[l];
    let comp = |l: usize| c(&s.a2, l) * xi * xi + c(&s.a1, l) * kappa * xi + c(&s.a0, l) * kappa * kappa;
    (comp(0), [comp(1), comp(2), comp(3) + mass])
}

fn dirac_at(a: [f64; 3], b: [f64; 3], c: f64, sign: f64, kappa: f64, chi: f64, xi: f64) -> (f64, [f64; 3]) {
    let comp = |l: usize| sign * (a[l] * xi + b[l] * kappa);
    (comp(0), [comp(1), comp(2), c * chi])
}

fn branches((h0, v): (f64, [f64; 3])) -> (f64, f64) {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    (h0 - r, h0 + r)
}

/// Necessary band-gap condition.
pub fn check_gap_condition(op: &EffEdgeOperator) -> Result<()> {
    match &op.coeffs {
        Coeffs::Schrodinger { alpha, .. } => {
            let s = op.symbol().unwrap();
            let g = s.a2[1].hypot(s.a2[2]).powi(2) - s.a2[0].powi(2);
            if g <= 0.0 {
                return Err(Error::NoBandGap(format!("−(1−α₀)² + α₂² = {g:e} ≤ 0 for α = {alpha:?}")));
            }
            Ok(())
        }
        Coeffs::Dirac { a, c, .. } => {
            let g = -a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
            if g <= 0.0 {
                return Err(Error::NoBandGap(format!("−a₀² + a₁² + a₂² = {g:e} ≤ 0")));
            }
            if *c == 0.0 {
                return Err(Error::NoBandGap("mass c = 0".into()));
            }
            Ok(())
        }
    }
}

/// (η₋(κ), η₊(κ)) for 𝕊 or (ν₋(κ), ν₊(κ)) for Ɗ±: closed forms where available, otherwise the scan.
pub fn essential_spectrum_edges(op: &EffEdgeOperator, kappa: f64) -> Result<(f64, f64)> {
    check_gap_condition(op)?;
    let r = match &op.coeffs {
        Coeffs::Schrodinger { .. } => schrodinger_edges_closed(op, kappa).or_else(|_| scan_edges(op, kappa))?,
        Coeffs::Dirac { .. } => dirac_edges_closed(op, kappa)?,
    };
    if r.0 >= r.1 {
        return Err(Error::NoBandGap(format!("edges {} ≥ {} at κ = {kappa}", r.0, r.1)));
    }
    Ok(r)
}

/// Closed form for 𝕊 when σ₀ vanishes and the radicand is even in ξ:
/// it is then quadratic in u = ξ² and minimized at u* ≥ 0.
pub fn schrodinger_edges_closed(op: &EffEdgeOperator, kappa: f64) -> Result<(f64, f64)> {
    let s = op.symbol().ok_or_else(|| Error::Precondition("not a Schrödinger operator".into()))?;
    check_gap_condition(op)?;
    if s.a2[0] != 0.0 || s.a1[0] != 0.0 || s.a0[0] != 0.0 {
        return Err(Error::UnsupportedParameters("closed form needs α₀ = 1".into()));
    }
    // h_l(ξ) = p_l ξ² + q_l ξ + r_l
    let (p, q, r) = ([s.a2[1], s.a2[2]], [s.a1[1] * kappa, s.a1[2] * kappa], [s.a0[1] * kappa * kappa, s.a0[2] * kappa * kappa]);
    let odd3: f64 = (0..2).map(|l| p[l] * q[l]).sum();
    let odd1: f64 = (0..2).map(|l| q[l] * r[l]).sum();
    let scale = (p[0].abs() + p[1].abs() + q[0].abs() + q[1].abs() + r[0].abs() + r[1].abs()).powi(2).max(1e-300);
    if odd3.abs() > 1e-14 * scale || odd1.abs() > 1e-14 * scale {
        return Err(Error::UnsupportedParameters("radicand is not even in ξ".into()));
    }
    let c2: f64 = (0..2).map(|l| p[l] * p[l]).sum();
    let c1: f64 = (0..2).map(|l| q[l] * q[l] + 2.0 * p[l] * r[l]).sum();
    let c0: f64 = (0..2).map(|l| r[l] * r[l]).sum();
    let u = (-c1 / (2.0 * c2)).max(0.0);
    let mut eta = f64::INFINITY;
    for chi in wall_limits(op) {
        let m2 = (s.theta * chi).powi(2);
        eta = eta.min((c2 * u * u + c1 * u + c0 + m2).sqrt());
    }
    Ok((-eta, eta))
}

/// Appendix-D type closed form for Ɗ±.
pub fn dirac_edges_closed(op: &EffEdgeOperator, kappa: f64) -> Result<(f64, f64)> {
    let Coeffs::Dirac { a, b, c } = op.coeffs else { return Err(Error::Precondition("not a Dirac operator".into())) };
    check_gap_condition(op)?;
    let k = op.sign() * kappa;
    let g = -a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
    let na2 = a[1] * a[1] + a[2] * a[2];
    let lin = (-a[0] * (a[1] * b[1] + a[2] * b[2]) / na2 + b[0]) * k;
    let cross = a[1] * b[2] - a[2] * b[1];
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for chi in wall_limits(op) {
        let rad = (g * (cross * cross * k * k + na2 * (c * chi).powi(2))).sqrt() / na2;
        lo = lo.max(lin - rad);
        hi = hi.min(lin + rad);
    }
    Ok((lo, hi))
}

/// Gap width 2|c|√(g/(a₁²+a₂²)) of Ɗ±(0).
pub fn dirac_gap_width(a: [f64; 3], c: f64) -> f64 {
    let g = -a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
    2.0 * c.abs() * (g / (a[1] * a[1] + a[2] * a[2])).sqrt()
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Numeric edges: inf of the upper branch and sup of the lower branch over ξ ∈ [−Ξ, Ξ],
/// with Ξ from the growth bound |branch| ≥ g ξ^p − B|ξ| − C (p = 2 for 𝕊, 1 for Ɗ).
pub fn scan_edges(op: &EffEdgeOperator, kappa: f64) -> Result<(f64, f64)> {
    check_gap_condition(op)?;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for chi in wall_limits(op) {
        let (sym, growth, lin, cst, quad): (Box<dyn Fn(f64) -> (f64, [f64; 3])>, f64, f64, f64, bool) = match &op.coeffs {
            Coeffs::Schrodinger { .. } => {
                let s = op.symbol().unwrap();
                let mass = s.theta * chi;
                let l1 = |p: &Pauli4| p.iter().map(|x| x.abs()).sum::<f64>();
                let g = s.a2[1].hypot(s.a2[2]) - s.a2[0].abs();
                (Box::new(move |xi| schrodinger_at(&s, kappa, mass, xi)), g, 2.0 * kappa.abs() * l1(&s.a1), 2.0 * kappa * kappa * l1(&s.a0) + mass.abs(), true)
            }
            Coeffs::Dirac { a, b, c } => {
                let (a, b, c, sg) = (*a, *b, *c, op.sign());
                let g = a[1].hypot(a[2]) - a[0].abs();
                (Box::new(move |xi| dirac_at(a, b, c, sg, kappa, chi, xi)), g, 0.0, 2.0 * kappa.abs() * b.iter().map(|x| x.abs()).sum::<f64>() + (c * chi).abs(), false)
            }
        };
        debug_assert_eq!(op.kind == Kind::Schrodinger, quad);
        let up0 = branches(sym(0.0)).1.abs().max(branches(sym(0.0)).0.abs());
        let xi_max = if quad { (lin + (lin * lin + 4.0 * growth * (cst + up0)).sqrt()) / (2.0 * growth) } else { (cst + up0) / growth };
        let xi_max = 1.1 * xi_max + 1.0;
        let n = 4001;
        let grid: Vec<f64> = (0..n).map(|i| -xi_max + 2.0 * xi_max * i as f64 / (n - 1) as f64).collect();
        let upper = |x: f64| branches(sym(x)).1;
        let lower = |x: f64| -branches(sym(x)).0;
        for (f, out) in [(&upper as &dyn Fn(f64) -> f64, 1), (&lower as &dyn Fn(f64) -> f64, 0)] {
            let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
            let ib = (0..n).min_by(|&p, &q| vals[p].partial_cmp(&vals[q]).unwrap()).unwrap();
            let (a, b) = (grid[ib.saturating_sub(1)], grid[(ib + 1).min(n - 1)]);
            let (_, v) = golden_min(&f, a, b);
            let v = v.min(vals[ib]);
            if out == 1 {
                hi = hi.min(v);
            } else {
                lo = lo.max(-v);
            }
        }
    }
    if lo >= hi {
        return Err(Error::NoBandGap(format!("scan edges {lo} ≥ {hi} at κ = {kappa}")));
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::EffEdgeOperator;
    use edgeflow_core::media::DomainWall;

    #[test]
    fn exact_model_gap_is_unit() {
        let op = EffEdgeOperator::vertical([1.0, 1.0, 1.0], 1.0, DomainWall::Sign);
        let (lo, hi) = essential_spectrum_edges(&op, 0.0).unwrap();
        assert!((lo + 1.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dirac_gap_width_example() {
        // g = −0.09 + 2 = 1.91, |a|² = 2: width = √(1.91/2)
        let w = dirac_gap_width([0.3, 1.0, 1.0], 0.5);
        assert!((w - 0.977_241_014_284_559_7).abs() < 1e-12, "{w}");
        let op = EffEdgeOperator::dirac(Kind::DiracPlus, [0.3, 1.0, 1.0], [0.0, 0.0, 1.0], 0.5, DomainWall::Tanh { steepness: 1.0 });
        let (lo, hi) = essential_spectrum_edges(&op, 0.0).unwrap();
        assert!((hi - lo - w).abs() < 1e-14);
    }

    #[test]
    fn no_gap_conditions() {
        let op = EffEdgeOperator::dirac(Kind::DiracPlus, [2.0, 1.0, 1.0], [0.0, 0.0, 1.0], 0.5, DomainWall::Sign);
        assert!(matches!(essential_spectrum_edges(&op, 0.0), Err(Error::NoBandGap(_))));
        let op = EffEdgeOperator::vertical([-1.0, 1.0, 1.5], 1.0, DomainWall::Sign);
        assert!(matches!(essential_spectrum_edges(&op, 0.0), Err(Error::NoBandGap(_))));
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, v) = golden_min(&|x| (x - 0.3).powi(2) + 2.0, -1.0, 1.0);
        assert!((x - 0.3).abs() < 1e-7 && (v - 2.0).abs() < 1e-14);
    }
}
