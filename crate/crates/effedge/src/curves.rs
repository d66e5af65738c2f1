//! Eigenvalue curves κ ↦ Ω(κ), spectral flow and perturbative slopes.

use crate::operator::EffEdgeOperator;
use crate::spectrum::{gap_bound_states_with, richardson_error, BoundOpts, SpectrumSlice};
use edgeflow_core::linalg::{dot, BorderedSolver};
use edgeflow_core::{Error, Result, C64};
use rayon::prelude::*;

pub const OVERLAP_MIN: f64 = 0.8;
/// Below this best overlap a state is taken to have left the window rather than to be ambiguous.
const OVERLAP_LOST: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveEnd {
    /// First or last κ of the grid.
    GridEnd,
    /// Merged into the essential spectrum below the gap.
    Lower,
    /// Merged into the essential spectrum above the gap.
    Upper,
}

#[derive(Debug, Clone)]
pub struct EigenvalueCurve {
    pub points: Vec<(f64, f64)>,
    /// Minimal overlap between consecutive eigenvectors.
    pub min_overlap: f64,
    pub start: CurveEnd,
    pub end: CurveEnd,
    pub flow_contribution: i32,
}

#[derive(Debug, Clone)]
pub struct CurveTrace {
    pub slices: Vec<SpectrumSlice>,
    pub curves: Vec<EigenvalueCurve>,
    pub spectral_flow: i32,
}

impl CurveTrace {
    pub fn traversing(&self) -> usize {
        self.curves.iter().filter(|c| c.flow_contribution != 0).count()
    }
}

/// Signed crossings of the gap-center line, +1 for each upward crossing as κ increases.
pub fn crossings(points: &[(f64, f64)], center: &dyn Fn(f64) -> f64) -> i32 {
    let side = |(k, w): (f64, f64)| w >= center(k);
    points.windows(2).map(|p| match (side(p[0]), side(p[1])) {
        (false, true) => 1,
        (true, false) => -1,
        _ => 0,
    }).sum()
}

fn slice_opts(margin: f64) -> BoundOpts {
    BoundOpts { margin: Some(margin), strict: false, ..BoundOpts::default() }
}

fn slices_at(op: &EffEdgeOperator, kappas: &[f64], margin: f64, max_states: usize) -> Result<Vec<SpectrumSlice>> {
    let opts = slice_opts(margin);
    kappas.par_iter().map(|&k| gap_bound_states_with(op, k, max_states, &opts)).collect()
}

fn overlaps(a: &SpectrumSlice, b: &SpectrumSlice) -> Vec<Vec<f64>> {
    a.eigenvectors.iter().map(|x| b.eigenvectors.iter().map(|y| dot(x, y).norm()).collect()).collect()
}

/// Greedy maximal-overlap assignment a → b above the threshold.
pub fn assign(ov: &[Vec<f64>]) -> Vec<Option<usize>> {
    let mut pairs: Vec<(usize, usize, f64)> = ov.iter().enumerate().flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &v)| (i, j, v))).collect();
    pairs.sort_by(|p, q| q.2.partial_cmp(&p.2).unwrap());
    let nb = ov.first().map_or(0, |r| r.len());
    let mut out = vec![None; ov.len()];
    let mut used = vec![false; nb];
    for (i, j, v) in pairs {
        if v > OVERLAP_MIN && out[i].is_none() && !used[j] {
            out[i] = Some(j);
            used[j] = true;
        }
    }
    out
}

/// True when some state of `a` is neither matched nor clearly gone.
fn ambiguous(ov: &[Vec<f64>], asg: &[Option<usize>]) -> Option<f64> {
    ov.iter().zip(asg).filter(|(_, a)| a.is_none()).map(|(r, _)| r.iter().copied().fold(0.0, f64::max)).filter(|&b| b >= OVERLAP_LOST).reduce(f64::max)
}

/// Traces all gap eigenvalue curves over an increasing κ grid. Intervals whose matching is
/// ambiguous are bisected up to twice before failing.
pub fn trace_eigenvalue_curves(op: &EffEdgeOperator, kappas: &[f64]) -> Result<CurveTrace> {
    trace_eigenvalue_curves_with(op, kappas, 8)
}

pub fn trace_eigenvalue_curves_with(op: &EffEdgeOperator, kappas: &[f64], max_states: usize) -> Result<CurveTrace> {
    if kappas.len() < 2 || kappas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("κ grid must be increasing with at least two points".into()));
    }
    // one Richardson estimate at the grid center sets the acceptance margin for every slice
    let k0 = kappas[kappas.len() / 2];
    let probe = gap_bound_states_with(op, k0, max_states, &BoundOpts { strict: false, margin: Some(0.0), ..BoundOpts::default() })?;
    let err = richardson_error(op, k0, probe.ess_lower_edge, probe.ess_upper_edge, &probe.gap_eigenvalues, &BoundOpts::default())?;
    let margin = (3.0 * err).max(1e-9 * (probe.ess_upper_edge - probe.ess_lower_edge));
    let base = slices_at(op, kappas, margin, max_states)?;
    let mut slices: Vec<SpectrumSlice> = vec![base[0].clone()];
    for w in base.windows(2) {
        let mut seg = vec![w[0].clone(), w[1].clone()];
        for level in 0..=2 {
            let bad = seg.windows(2).find_map(|p| {
                let ov = overlaps(&p[0], &p[1]);
                let asg = assign(&ov);
                ambiguous(&ov, &asg).map(|b| (p[1].kappa, b))
            });
            match bad {
                None => break,
                Some((k, b)) if level == 2 => return Err(Error::ContinuationAmbiguous { kappa: k, overlap: b }),
                Some(_) => {
                    let mids: Vec<f64> = seg.windows(2).map(|p| 0.5 * (p[0].kappa + p[1].kappa)).collect();
                    let extra = slices_at(op, &mids, margin, max_states)?;
                    let mut merged = Vec::with_capacity(seg.len() + extra.len());
                    for (s, e) in seg.iter().zip(extra) {
                        merged.push(s.clone());
                        merged.push(e);
                    }
                    merged.push(seg.last().unwrap().clone());
                    seg = merged;
                }
            }
        }
        slices.extend(seg.into_iter().skip(1));
    }
    let curves = link(&slices);
    let spectral_flow = curves.iter().map(|c| c.flow_contribution).sum();
    Ok(CurveTrace { slices, curves, spectral_flow })
}

fn end_tag(s: &SpectrumSlice, w: f64, grid_end: bool) -> CurveEnd {
    if grid_end {
        CurveEnd::GridEnd
    } else if w > s.gap_center() {
        CurveEnd::Upper
    } else {
        CurveEnd::Lower
    }
}

fn link(slices: &[SpectrumSlice]) -> Vec<EigenvalueCurve> {
    let n = slices.len();
    let centers: Vec<(f64, f64)> = slices.iter().map(|s| (s.kappa, s.gap_center())).collect();
    let center = |k: f64| {
        let i = centers.partition_point(|c| c.0 < k).min(n - 1);
        centers[i].1
    };
    let mut curves: Vec<EigenvalueCurve> = Vec::new();
    // open[j] = curve index carrying state j of the current slice
    let mut open: Vec<usize> = Vec::new();
    for (j, &w) in slices[0].gap_eigenvalues.iter().enumerate() {
        curves.push(EigenvalueCurve { points: vec![(slices[0].kappa, w)], min_overlap: 1.0, start: CurveEnd::GridEnd, end: CurveEnd::GridEnd, flow_contribution: 0 });
        open.push(j);
    }
    for i in 0..n - 1 {
        let (a, b) = (&slices[i], &slices[i + 1]);
        let ov = overlaps(a, b);
        let asg = assign(&ov);
        let mut next = vec![usize::MAX; b.gap_eigenvalues.len()];
        for (ja, m) in asg.iter().enumerate() {
            let c = open[ja];
            match m {
                Some(jb) => {
                    curves[c].points.push((b.kappa, b.gap_eigenvalues[*jb]));
                    curves[c].min_overlap = curves[c].min_overlap.min(ov[ja][*jb]);
                    next[*jb] = c;
                }
                None => curves[c].end = end_tag(a, a.gap_eigenvalues[ja], false),
            }
        }
        for (jb, slot) in next.iter_mut().enumerate() {
            if *slot == usize::MAX {
                let w = b.gap_eigenvalues[jb];
                curves.push(EigenvalueCurve { points: vec![(b.kappa, w)], min_overlap: 1.0, start: end_tag(b, w, false), end: CurveEnd::GridEnd, flow_contribution: 0 });
                *slot = curves.len() - 1;
            }
        }
        open = next;
    }
    for c in curves.iter_mut() {
        c.flow_contribution = crossings(&c.points, &center);
    }
    curves
}

#[derive(Debug, Clone, Copy)]
pub struct Slope {
    pub omega: f64,
    /// ⟨ψ, ∂_κA ψ⟩
    pub slope: f64,
    /// ½⟨ψ, ∂²_κA ψ⟩ − ⟨Vψ, (A − Ω)⁻¹ P⊥ Vψ⟩ with V = ∂_κA − Ω'
    pub curvature: f64,
}

/// First and second κ-derivatives of each simple gap eigenvalue at the slice's κ.
pub fn perturbation_slopes(op: &EffEdgeOperator, base: &SpectrumSlice) -> Result<Vec<Slope>> {
    let k = base.kappa;
    let a = op.assemble(k);
    let d1 = op.kappa_derivative(k);
    let e = 1e-4;
    let (dp, dm) = (op.kappa_derivative(k + e), op.kappa_derivative(k - e));
    let mut out = Vec::new();
    for (w, psi) in base.gap_eigenvalues.iter().zip(&base.eigenvectors) {
        let vpsi = d1.matvec(psi);
        let slope = dot(psi, &vpsi).re;
        let second: C64 = dot(psi, &dp.matvec(psi)) - dot(psi, &dm.matvec(psi));
        let second = second.re / (2.0 * e);
        let f: Vec<C64> = vpsi.iter().zip(psi).map(|(v, p)| v - p * slope).collect();
        let solver = BorderedSolver::new(&a, *w, std::slice::from_ref(psi))?;
        let u = solver.solve(&f)?;
        let curvature = 0.5 * second - dot(&f, &u).re;
        out.push(Slope { omega: *w, slope, curvature });
    }
    Ok(out)
}

/// Number of gap eigenvalues of the operator at κ (boundary states excluded).
pub fn count_gap_states(op: &EffEdgeOperator, kappa: f64) -> Result<usize> {
    Ok(gap_bound_states_with(op, kappa, 64, &BoundOpts::default())?.gap_eigenvalues.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_signs() {
        let up = [(0.0, -1.0), (1.0, -0.2), (2.0, 0.3), (3.0, 0.9)];
        assert_eq!(crossings(&up, &|_| 0.0), 1);
        let down: Vec<_> = up.iter().map(|&(k, w)| (k, -w)).collect();
        assert_eq!(crossings(&down, &|_| 0.0), -1);
        let bounce = [(0.0, -1.0), (1.0, 0.5), (2.0, -0.5)];
        assert_eq!(crossings(&bounce, &|_| 0.0), 0);
        assert_eq!(crossings(&up, &|k| k - 1.0), -1);
    }

    #[test]
    fn assignment_prefers_largest_overlap() {
        let ov = vec![vec![0.9, 0.85], vec![0.95, 0.1]];
        assert_eq!(assign(&ov), vec![Some(1), Some(0)]);
        let ov = vec![vec![0.5, 0.1]];
        assert_eq!(assign(&ov), vec![None]);
        assert_eq!(ambiguous(&ov, &assign(&ov)), Some(0.5));
        let ov = vec![vec![0.05]];
        assert_eq!(ambiguous(&ov, &assign(&ov)), None);
    }
}
