//! Truncated strips carrying a domain wall: assembly, classified spectra, edge state diagrams
//! and comparison with the effective edge operators.

use crate::assemble::{assemble, coefficient, Layout};
use crate::bulkfb::{band_energies, BulkModel, Selector};
use edgeflow_core::lattice::{QuasimomentumSlice, RationalEdge};
use edgeflow_core::linalg::{dot, eigs_near, Csr, KrylovOpts};
use edgeflow_core::media::MediumSpec;
use edgeflow_core::{Error, Result, C64};
use edgeflow_effedge::{assign, crossings, gap_bound_states_with, BoundOpts, EffEdgeOperator};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Strip width used by the reference computations, in cells.
pub const DEFAULT_WIDTH: usize = 60;

#[derive(Debug, Clone)]
pub struct StripOperator {
    pub k_par: f64,
    pub width_cells: usize,
    pub n: usize,
    pub medium: MediumSpec,
    pub edge: RationalEdge,
    pub matrix: Csr,
    /// x₁ of each node row; rows are the interior nodes of [−W/2, W/2].
    pub x1: Vec<f64>,
}

impl StripOperator {
    pub fn rows(&self) -> usize {
        self.x1.len()
    }

    /// Mass of `v` per node row.
    pub fn profile(&self, v: &[C64]) -> Vec<f64> {
        v.chunks(self.n).map(|c| c.iter().map(|z| z.norm_sqr()).sum()).collect()
    }
}

fn check_vertical(edge: &RationalEdge) -> Result<()> {
    if (edge.m1, edge.n1) != (0, 1) {
        return Err(Error::UnsupportedParameters(format!("strip assembly supports the vertical edge (0, 1) only, got ({}, {})", edge.m1, edge.n1)));
    }
    Ok(())
}

/// Half extent in x₁ of the region where |χ(δ𝔎₂·x)| < 0.99.
pub fn wall_extent(medium: &MediumSpec, edge: &RationalEdge) -> f64 {
    if medium.delta == 0.0 {
        return 0.0;
    }
    medium.wall.transition_half_width(50.0) / (medium.delta * edge.fk2.x.abs())
}

/// Smallest even width ≥ 60 cells whose inner 90% contains the wall transition.
pub fn default_width(medium: &MediumSpec, edge: &RationalEdge) -> usize {
    let need = (2.0 * wall_extent(medium, edge) / 0.9).ceil() as usize + 2;
    let w = DEFAULT_WIDTH.max(need);
    w + w % 2
}

/// H^δ_edge at parallel quasimomentum `k_par` on W cells across the wall with N nodes per cell.
pub fn assemble_strip_operator(medium: &MediumSpec, edge: &RationalEdge, k_par: f64, w: usize, n: usize) -> Result<StripOperator> {
    check_vertical(edge)?;
    if w < 2 || !w.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!("strip width W = {w} must be even and ≥ 2")));
    }
    let model = BulkModel::new(medium, n)?;
    let ext = wall_extent(medium, edge);
    if ext >= 0.45 * w as f64 {
        return Err(Error::WallTooWide(format!("transition half extent {ext:.3} exceeds the inner 90% of a {w}-cell strip")));
    }
    let h = 1.0 / n as f64;
    let half = (w / 2) as i64 * n as i64;
    let rows = w * n - 1;
    let x1: Vec<f64> = (0..rows).map(|i| (i as i64 + 1 - half) as f64 * h).collect();
    let (v, a) = (&model.v, &model.a);
    let d = &medium.deformation;
    let amp = medium.strength() * d.det_tinv;
    let mut vs = Vec::with_capacity(rows * n);
    let mut field = Vec::with_capacity(rows * n);
    for (i1, &x) in x1.iter().enumerate() {
        let gi = i1 as i64 + 1 - half;
        for i2 in 0..n {
            let p = model.grid.idx(gi, i2 as i64);
            let xx = edge.fk2.x * x + edge.fk2.y * i2 as f64 * h;
            vs.push(v[p]);
            field.push(coefficient(&d.metric, amp * medium.wall.eval(medium.delta * xx) * a[p]));
        }
    }
    let layout = Layout { n1: rows, n2: n, periodic1: false, h };
    let matrix = assemble(&layout, &field, Some(&vs), [0.0, k_par], &[]);
    Ok(StripOperator { k_par, width_cells: w, n, medium: medium.clone(), edge: *edge, matrix, x1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateClass {
    Edge,
    Bulk,
    Spurious,
}

impl StateClass {
    pub fn name(&self) -> &'static str {
        match self {
            StateClass::Edge => "edge",
            StateClass::Bulk => "bulk",
            StateClass::Spurious => "spurious",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Classifier {
    pub mass_threshold: f64,
    /// Boundary zone as a fraction of the strip on each side.
    pub outer_fraction: f64,
    /// Edge zone |x₁| ≤ radius; `None` uses min(3/(δ|𝔎₂|), W/6).
    pub edge_radius: Option<f64>,
}

impl Default for Classifier {
    fn default() -> Self {
        Self { mass_threshold: 0.5, outer_fraction: 0.1, edge_radius: None }
    }
}

impl Classifier {
    pub fn radius(&self, op: &StripOperator) -> f64 {
        let cap = op.width_cells as f64 / 6.0;
        self.edge_radius.unwrap_or_else(|| if op.medium.delta > 0.0 { (3.0 / (op.medium.delta * op.edge.fk2.x.abs())).min(cap) } else { cap })
    }

    /// (class, mass in the edge zone, mass in the boundary zone)
    pub fn classify(&self, op: &StripOperator, v: &[C64]) -> (StateClass, f64, f64) {
        let prof = op.profile(v);
        let tot: f64 = prof.iter().sum();
        let half = 0.5 * op.width_cells as f64;
        let r = self.radius(op);
        let cut = (1.0 - self.outer_fraction) * half;
        let mut inner = 0.0;
        let mut outer = 0.0;
        for (m, x) in prof.iter().zip(&op.x1) {
            if x.abs() <= r {
                inner += m;
            }
            if x.abs() > cut {
                outer += m;
            }
        }
        let (inner, outer) = (inner / tot, outer / tot);
        let class = if outer >= self.mass_threshold {
            StateClass::Spurious
        } else if inner >= self.mass_threshold {
            StateClass::Edge
        } else {
            StateClass::Bulk
        };
        (class, inner, outer)
    }
}

#[derive(Debug, Clone)]
pub struct ClassifiedState {
    pub value: f64,
    pub class: StateClass,
    pub edge_mass: f64,
    pub boundary_mass: f64,
    pub residual: f64,
    /// Unit norm, largest entry real positive.
    pub vector: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct EdgeSpectrum {
    pub k_par: f64,
    pub window: (f64, f64),
    /// Eigenvalues in the window, ascending.
    pub states: Vec<ClassifiedState>,
    /// False when `max_states` eigenvalues did not cover the window.
    pub complete: bool,
}

impl EdgeSpectrum {
    pub fn count(&self, class: StateClass) -> usize {
        self.states.iter().filter(|s| s.class == class).count()
    }

    pub fn non_spurious(&self) -> impl Iterator<Item = &ClassifiedState> {
        self.states.iter().filter(|s| s.class != StateClass::Spurious)
    }
}

fn fix_phase(v: &mut [C64]) {
    let big = v.iter().copied().max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()).unwrap_or(C64::new(1.0, 0.0));
    if big.norm() > 0.0 {
        let ph = big.conj() / big.norm();
        v.iter_mut().for_each(|z| *z *= ph);
    }
}

pub fn edge_spectrum(op: &StripOperator, window: (f64, f64), max_states: usize) -> Result<EdgeSpectrum> {
    edge_spectrum_with(op, window, max_states, &Classifier::default())
}

/// Shift-invert solve for the `max_states` eigenvalues nearest the window center, keeping those
/// inside the window.
pub fn edge_spectrum_with(op: &StripOperator, window: (f64, f64), max_states: usize, cls: &Classifier) -> Result<EdgeSpectrum> {
    let (lo, hi) = window;
    if hi <= lo {
        return Err(Error::Precondition(format!("empty window ({lo}, {hi})")));
    }
    let hw = 0.5 * (hi - lo);
    let sigma = 0.5 * (lo + hi) + 0.001_234_5 * hw;
    let r = eigs_near(&op.matrix, sigma, max_states.max(4), KrylovOpts::default())?;
    let reach = r.values.iter().map(|l| (l - sigma).abs()).fold(0.0, f64::max);
    let mut states = Vec::new();
    for ((&value, x), &res) in r.values.iter().zip(&r.vectors).zip(&r.residuals) {
        if value < lo || value > hi {
            continue;
        }
        let mut vector = x.clone();
        fix_phase(&mut vector);
        let (class, edge_mass, boundary_mass) = cls.classify(op, &vector);
        states.push(ClassifiedState { value, class, edge_mass, boundary_mass, residual: res, vector });
    }
    Ok(EdgeSpectrum { k_par: op.k_par, window, states, complete: reach >= hw + 0.001_234_5 * hw || r.values.len() >= op.matrix.n })
}

/// Essential-band estimate at `k_par`: the top of band `bands.0` and the bottom of band `bands.1`
/// over the q-slice, taken over both bulk media H^{±,δ}.
pub fn slice_gap(medium: &MediumSpec, edge: &RationalEdge, k_par: f64, bands: (usize, usize), nq: usize, n: usize) -> Result<(f64, f64)> {
    let model = BulkModel::new(medium, n)?;
    let sels: &[Selector] = if medium.delta == 0.0 { &[Selector::Unperturbed] } else { &[Selector::Plus, Selector::Minus] };
    let nb = bands.1 + 1;
    let eval = |q: f64, s: Selector| -> (f64, f64) {
        let k = edge.fk1 * k_par + edge.fk2 * q;
        let e = band_energies(&model.operator(k, s), nb);
        (e[bands.0], e[bands.1])
    };
    let qs = QuasimomentumSlice::new(edge, k_par, nq.max(8) + 1);
    let qgrid: Vec<f64> = (0..qs.samples.len()).map(|i| -PI + 2.0 * PI * i as f64 / (qs.samples.len() - 1) as f64).collect();
    let step = qgrid[1] - qgrid[0];
    let mut lo_top = f64::NEG_INFINITY;
    let mut hi_bot = f64::INFINITY;
    for &s in sels {
        let vals: Vec<(f64, f64)> = qgrid.par_iter().map(|&q| eval(q, s)).collect();
        let i_top = (0..vals.len()).max_by(|&p, &q| vals[p].0.partial_cmp(&vals[q].0).unwrap()).unwrap();
        let i_bot = (0..vals.len()).min_by(|&p, &q| vals[p].1.partial_cmp(&vals[q].1).unwrap()).unwrap();
        let top = golden(&|q| -eval(q, s).0, qgrid[i_top] - step, qgrid[i_top] + step);
        let bot = golden(&|q| eval(q, s).1, qgrid[i_bot] - step, qgrid[i_bot] + step);
        lo_top = lo_top.max(vals[i_top].0).max(-top);
        hi_bot = hi_bot.min(vals[i_bot].1).min(bot);
    }
    Ok((lo_top, hi_bot))
}

fn golden(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

#[derive(Debug, Clone)]
pub struct DiagramOpts {
    pub n: usize,
    /// `None` uses `default_width`.
    pub width: Option<usize>,
    /// Band pair (b, b+1) bounding the gap.
    pub bands: (usize, usize),
    pub e_star: f64,
    /// Half width of the eigenvalue window in units of the bulk gap at the grid center; 0 restricts
    /// the window to the slice gap.
    pub gap_multiple: f64,
    pub max_states: usize,
    pub nq: usize,
    pub classifier: Classifier,
}

impl DiagramOpts {
    pub fn new(bands: (usize, usize), e_star: f64) -> Self {
        Self { n: 20, width: None, bands, e_star, gap_multiple: 0.0, max_states: 16, nq: 48, classifier: Classifier::default() }
    }
}

#[derive(Debug, Clone)]
pub struct DiagramSlice {
    pub k_par: f64,
    pub ess_lower_edge: f64,
    pub ess_upper_edge: f64,
    pub spectrum: EdgeSpectrum,
    /// Indices into `spectrum.states` of the non-spurious states inside the slice gap.
    pub gap_states: Vec<usize>,
}

impl DiagramSlice {
    pub fn gap_center(&self) -> f64 {
        0.5 * (self.ess_lower_edge + self.ess_upper_edge)
    }

    pub fn gap_values(&self) -> Vec<f64> {
        self.gap_states.iter().map(|&i| self.spectrum.states[i].value).collect()
    }
}

#[derive(Debug, Clone)]
pub struct EdgeCurve {
    /// (k, E) along the curve.
    pub points: Vec<(f64, f64)>,
    pub min_overlap: f64,
    pub flow_contribution: i32,
}

#[derive(Debug, Clone)]
pub struct EdgeDiagram {
    pub k_grid: Vec<f64>,
    pub slices: Vec<DiagramSlice>,
    pub curves: Vec<EdgeCurve>,
    pub flow: i32,
    pub width_cells: usize,
}

impl EdgeDiagram {
    pub fn traversing(&self) -> usize {
        self.curves.iter().filter(|c| c.flow_contribution != 0).count()
    }
}

/// Edge state diagram over an increasing k grid. Gap states are matched across k by eigenvector
/// overlap and the flow counts signed crossings of the gap-center line.
pub fn edge_diagram(medium: &MediumSpec, edge: &RationalEdge, k_grid: &[f64], opts: &DiagramOpts) -> Result<EdgeDiagram> {
    check_vertical(edge)?;
    if k_grid.len() < 2 || k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("k grid must be increasing with at least two points".into()));
    }
    let w = opts.width.unwrap_or_else(|| default_width(medium, edge));
    let gaps: Vec<(f64, f64)> = k_grid.iter().map(|&k| slice_gap(medium, edge, k, opts.bands, opts.nq, opts.n)).collect::<Result<_>>()?;
    let mid = gaps[gaps.len() / 2];
    let half = opts.gap_multiple * (mid.1 - mid.0).max(0.0);
    let mut slices = Vec::with_capacity(k_grid.len());
    for (&k, &(lo, hi)) in k_grid.iter().zip(&gaps) {
        let op = assemble_strip_operator(medium, edge, k, w, opts.n)?;
        let window = if half > 0.0 { (opts.e_star - half, opts.e_star + half) } else { (lo.min(hi), hi.max(lo)) };
        let spectrum = if window.1 > window.0 {
            edge_spectrum_with(&op, window, opts.max_states, &opts.classifier)?
        } else {
            EdgeSpectrum { k_par: k, window, states: vec![], complete: true }
        };
        let gap_states = (0..spectrum.states.len())
            .filter(|&i| {
                let s = &spectrum.states[i];
                s.class != StateClass::Spurious && s.value > lo && s.value < hi
            })
            .collect();
        slices.push(DiagramSlice { k_par: k, ess_lower_edge: lo, ess_upper_edge: hi, spectrum, gap_states });
    }
    let curves = link(&slices);
    let flow = curves.iter().map(|c| c.flow_contribution).sum();
    Ok(EdgeDiagram { k_grid: k_grid.to_vec(), slices, curves, flow, width_cells: w })
}

fn link(slices: &[DiagramSlice]) -> Vec<EdgeCurve> {
    let centers: Vec<(f64, f64)> = slices.iter().map(|s| (s.k_par, s.gap_center())).collect();
    let center = |k: f64| centers[centers.partition_point(|c| c.0 < k).min(centers.len() - 1)].1;
    fn vecs(s: &DiagramSlice) -> Vec<&Vec<C64>> {
        s.gap_states.iter().map(|&i| &s.spectrum.states[i].vector).collect()
    }
    let mut curves: Vec<EdgeCurve> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    for v in slices[0].gap_values() {
        curves.push(EdgeCurve { points: vec![(slices[0].k_par, v)], min_overlap: 1.0, flow_contribution: 0 });
        open.push(curves.len() - 1);
    }
    for p in slices.windows(2) {
        let (a, b) = (&p[0], &p[1]);
        let (va, vb) = (vecs(a), vecs(b));
        let ov: Vec<Vec<f64>> = va.iter().map(|x| vb.iter().map(|y| dot(x, y).norm()).collect()).collect();
        let asg = assign(&ov);
        let bv = b.gap_values();
        let mut next = vec![usize::MAX; bv.len()];
        for (ia, m) in asg.iter().enumerate() {
            if let Some(jb) = m {
                let c = open[ia];
                curves[c].points.push((b.k_par, bv[*jb]));
                curves[c].min_overlap = curves[c].min_overlap.min(ov[ia][*jb]);
                next[*jb] = c;
            }
        }
        for (jb, slot) in next.iter_mut().enumerate() {
            if *slot == usize::MAX {
                curves.push(EdgeCurve { points: vec![(b.k_par, bv[jb])], min_overlap: 1.0, flow_contribution: 0 });
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

/// One effective family anchored at a degeneracy whose parallel quasimomentum is `k_star`.
#[derive(Debug, Clone)]
pub struct EffectiveBranch {
    pub k_star: f64,
    pub op: EffEdgeOperator,
    /// Number of effective eigenvalues nearest the gap center that are compared.
    pub tracked: usize,
}

#[derive(Debug, Clone)]
pub struct ComparePoint {
    pub branch: usize,
    pub kappa: f64,
    pub k_par: f64,
    pub omega: f64,
    pub energy: f64,
    /// |E − E⋆ − δ^r Ω(κ)|
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub delta: f64,
    pub points: Vec<ComparePoint>,
    pub max_residual: f64,
}

/// Residuals between strip edge eigenvalues at k = k⋆ + δκ (|κ| ≤ `kappa_max`) and the
/// effective prediction E⋆ + δ^r Ω(κ), each effective eigenvalue matched to the nearest
/// non-spurious strip eigenvalue.
pub fn compare_with_effective(diagram: &EdgeDiagram, branches: &[EffectiveBranch], e_star: f64, delta: f64, r: i32, kappa_max: f64) -> Result<CompareReport> {
    if delta <= 0.0 {
        return Err(Error::Precondition("comparison needs δ > 0".into()));
    }
    let scale = delta.powi(r);
    let opts = BoundOpts { strict: false, ..BoundOpts::default() };
    let mut points = Vec::new();
    for s in &diagram.slices {
        for (bi, br) in branches.iter().enumerate() {
            let kappa = (s.k_par - br.k_star) / delta;
            if kappa.abs() > kappa_max * (1.0 + 1e-12) {
                continue;
            }
            let eff = gap_bound_states_with(&br.op, kappa, 16, &opts)?;
            let mid = eff.gap_center();
            let mut om = eff.gap_eigenvalues.clone();
            om.sort_by(|p, q| (p - mid).abs().partial_cmp(&(q - mid).abs()).unwrap());
            om.truncate(br.tracked);
            for omega in om {
                let target = e_star + scale * omega;
                let best = s.spectrum.non_spurious().map(|st| st.value).min_by(|p, q| (p - target).abs().partial_cmp(&(q - target).abs()).unwrap());
                let Some(energy) = best else {
                    return Err(Error::WindowMismatch(format!("no strip eigenvalue near {target} at k = {}", s.k_par)));
                };
                points.push(ComparePoint { branch: bi, kappa, k_par: s.k_par, omega, energy, residual: (energy - target).abs() });
            }
        }
    }
    if points.is_empty() {
        return Err(Error::WindowMismatch(format!("no diagram slice within |κ| ≤ {kappa_max} of any branch")));
    }
    let max_residual = points.iter().map(|p| p.residual).fold(0.0, f64::max);
    Ok(CompareReport { delta, points, max_residual })
}

/// Empirical order p from two reports: residual ∝ δ^p.
pub fn order_fit(a: &CompareReport, b: &CompareReport) -> f64 {
    (a.max_residual / b.max_residual).ln() / (a.delta / b.delta).ln()
}

/// Parallel quasimomenta k⋆ + δκ for every branch and κ, sorted and deduplicated.
pub fn comparison_grid(branches: &[EffectiveBranch], delta: f64, kappas: &[f64]) -> Vec<f64> {
    let mut ks: Vec<f64> = branches.iter().flat_map(|b| kappas.iter().map(move |k| b.k_star + delta * k)).collect();
    ks.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ks.dedup_by(|p, q| (*p - *q).abs() < 1e-12);
    ks
}

#[cfg(test)]
mod tests {
    use super::*;
    use edgeflow_core::media::{Deformation, DomainWall};
    use edgeflow_effedge::Kind;

    fn strip() -> StripOperator {
        let m = MediumSpec { wall: DomainWall::Tanh { steepness: 10.0 }, ..MediumSpec::paper(Deformation::identity(), 0.1) };
        assemble_strip_operator(&m, &RationalEdge::vertical(), PI, 20, 8).unwrap()
    }

    fn shaped(op: &StripOperator, f: &dyn Fn(f64) -> f64) -> Vec<C64> {
        op.x1.iter().flat_map(|x| std::iter::repeat_n(C64::from(f(*x)), op.n)).collect()
    }

    #[test]
    fn classifier_separates_wall_boundary_and_extended_profiles() {
        let op = strip();
        let cls = Classifier::default();
        assert_eq!(cls.radius(&op), 20.0 / 6.0);
        let at_wall = shaped(&op, &|x| (-x * x).exp());
        let at_end = shaped(&op, &|x| (-(x - 9.8) * (x - 9.8) * 4.0).exp());
        let flat = shaped(&op, &|_| 1.0);
        assert_eq!(cls.classify(&op, &at_wall).0, StateClass::Edge);
        assert_eq!(cls.classify(&op, &at_end).0, StateClass::Spurious);
        let (c, inner, outer) = cls.classify(&op, &flat);
        assert_eq!(c, StateClass::Bulk);
        assert!((inner - 1.0 / 3.0).abs() < 0.02 && (outer - 0.1).abs() < 0.02);
    }

    #[test]
    fn order_fit_recovers_the_exponent() {
        let report = |delta: f64, p: f64| CompareReport { delta, points: vec![], max_residual: 0.7 * delta.powf(p) };
        for p in [1.0, 2.0, 3.0] {
            assert!((order_fit(&report(0.1, p), &report(0.05, p)) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn comparison_grid_is_sorted_and_deduplicated() {
        let op = EffEdgeOperator::dirac(Kind::DiracPlus, [0.0, 1.0, 1.0], [0.0, 0.0, 1.0], 1.0, DomainWall::Sign);
        let br = |k_star| EffectiveBranch { k_star, op: op.clone(), tracked: 1 };
        let ks = comparison_grid(&[br(3.0), br(3.05)], 0.1, &[-0.5, 0.0, 0.5]);
        assert_eq!(ks.len(), 4);
        assert!(ks.windows(2).all(|w| w[1] > w[0]));
        assert!((ks[0] - 2.95).abs() < 1e-12 && (ks[3] - 3.1).abs() < 1e-12);
    }

    #[test]
    fn diagram_needs_an_increasing_grid() {
        let m = MediumSpec::paper(Deformation::identity(), 0.1);
        let opts = DiagramOpts::new((1, 2), 13.0);
        assert!(matches!(edge_diagram(&m, &RationalEdge::vertical(), &[3.0, 3.0], &opts), Err(Error::Precondition(_))));
        assert!(matches!(edge_diagram(&m, &RationalEdge::vertical(), &[3.0], &opts), Err(Error::Precondition(_))));
    }
}
