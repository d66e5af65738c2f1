//! Discrete eigenvalues inside the essential gap.

use crate::essential::essential_spectrum_edges;
use crate::operator::EffEdgeOperator;
use edgeflow_core::linalg::{eigs_in_window, norm, scale, KrylovOpts};
use edgeflow_core::{Error, Result, C64};

#[derive(Debug, Clone)]
pub struct BoundOpts {
    /// Allowed mass in the outer zone for an accepted state.
    pub boundary_tol: f64,
    /// Width of the outer zone as a fraction of L.
    pub outer_fraction: f64,
    pub margin_factor: f64,
    /// Fixed acceptance margin; `None` estimates it from a half-resolution solve.
    pub margin: Option<f64>,
    /// Fail with DomainTooSmall on leaking wall states instead of dropping them.
    pub strict: bool,
    pub krylov: KrylovOpts,
}

impl Default for BoundOpts {
    fn default() -> Self {
        Self { boundary_tol: 1e-6, outer_fraction: 0.1, margin_factor: 3.0, margin: None, strict: true, krylov: KrylovOpts::default() }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumSlice {
    pub kappa: f64,
    pub ess_lower_edge: f64,
    pub ess_upper_edge: f64,
    pub gap_eigenvalues: Vec<f64>,
    /// Unit Euclidean norm, largest entry real positive.
    pub eigenvectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
    /// Eigenvalues of boundary-localized (box) states removed by the filter.
    pub boundary_states: Vec<f64>,
    /// Gap eigenvalues dropped because their tails reach the outer zone.
    pub leaking: Vec<f64>,
    pub margin: f64,
}

impl SpectrumSlice {
    pub fn gap_center(&self) -> f64 {
        0.5 * (self.ess_lower_edge + self.ess_upper_edge)
    }
}

pub fn outer_mass(op: &EffEdgeOperator, v: &[C64], fraction: f64) -> f64 {
    let cut = (1.0 - fraction) * op.lx;
    let tot: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let out: f64 = op.sites().iter().zip(v).filter(|((x, _), _)| x.abs() > cut).map(|(_, z)| z.norm_sqr()).sum();
    out / tot
}

pub fn fix_phase(v: &mut [C64]) {
    let big = v.iter().copied().max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()).unwrap_or(C64::new(1.0, 0.0));
    if big.norm() > 0.0 {
        let ph = big.conj() / big.norm();
        scale(v, ph);
    }
    let n = norm(v);
    scale(v, C64::from(1.0 / n));
}

fn window_eigs(op: &EffEdgeOperator, kappa: f64, lo: f64, hi: f64, nev0: usize, opts: &BoundOpts) -> Result<(Vec<f64>, Vec<Vec<C64>>, Vec<f64>)> {
    let a = op.assemble(kappa);
    let r = eigs_in_window(&a, lo, hi, nev0, opts.krylov)?;
    Ok((r.values, r.vectors, r.residuals))
}

/// Richardson estimate of the discretization error of the eigenvalues in (lo, hi):
/// |Ω_M − Ω_{M/2}| / 3 for the nearest coarse partner.
pub fn richardson_error(op: &EffEdgeOperator, kappa: f64, lo: f64, hi: f64, fine: &[f64], opts: &BoundOpts) -> Result<f64> {
    if fine.is_empty() {
        return Ok(0.0);
    }
    let coarse = op.clone().with_domain(op.lx, op.m / 2);
    let pad = 0.05 * (hi - lo);
    let (cv, _, _) = window_eigs(&coarse, kappa, lo - pad, hi + pad, fine.len() + 4, opts)?;
    let mut err: f64 = 0.0;
    for &f in fine {
        let d = cv.iter().map(|c| (c - f).abs()).fold(f64::INFINITY, f64::min);
        err = err.max(d / 3.0);
    }
    Ok(err)
}

pub fn gap_bound_states(op: &EffEdgeOperator, kappa: f64, max_states: usize) -> Result<SpectrumSlice> {
    gap_bound_states_with(op, kappa, max_states, &BoundOpts::default())
}

pub fn gap_bound_states_with(op: &EffEdgeOperator, kappa: f64, max_states: usize, opts: &BoundOpts) -> Result<SpectrumSlice> {
    op.validate()?;
    let (lo, hi) = essential_spectrum_edges(op, kappa)?;
    let (vals, vecs, res) = window_eigs(op, kappa, lo, hi, max_states.max(4), opts)?;
    let mut keep = Vec::new();
    let mut boundary_states = Vec::new();
    let mut leaking = Vec::new();
    let mut wall_vals = Vec::new();
    for (i, (&v, x)) in vals.iter().zip(&vecs).enumerate() {
        let w = outer_mass(op, x, opts.outer_fraction);
        if w > 0.5 {
            boundary_states.push(v);
        } else {
            wall_vals.push(v);
            keep.push((i, w));
        }
    }
    let margin = match opts.margin {
        Some(m) => m,
        None => opts.margin_factor * richardson_error(op, kappa, lo, hi, &wall_vals, opts)?,
    };
    let mut acc = Vec::new();
    for (i, w) in keep {
        let v = vals[i];
        if v <= lo + margin || v >= hi - margin {
            continue;
        }
        if w > opts.boundary_tol {
            if opts.strict {
                return Err(Error::DomainTooSmall(format!("gap state Ω = {v} at κ = {kappa} carries {w:e} of its mass in the outer {:.0}% of [−{}, {}]", 100.0 * opts.outer_fraction, op.lx, op.lx)));
            }
            leaking.push(v);
            continue;
        }
        acc.push(i);
    }
    let mid = 0.5 * (lo + hi);
    acc.sort_by(|&p, &q| (vals[p] - mid).abs().partial_cmp(&(vals[q] - mid).abs()).unwrap());
    acc.truncate(max_states);
    acc.sort_by(|&p, &q| vals[p].partial_cmp(&vals[q]).unwrap());
    let eigenvectors = acc
        .iter()
        .map(|&i| {
            let mut x = vecs[i].clone();
            fix_phase(&mut x);
            x
        })
        .collect();
    Ok(SpectrumSlice {
        kappa,
        ess_lower_edge: lo,
        ess_upper_edge: hi,
        gap_eigenvalues: acc.iter().map(|&i| vals[i]).collect(),
        eigenvectors,
        residuals: acc.iter().map(|&i| res[i]).collect(),
        boundary_states,
        leaking,
        margin,
    })
}
