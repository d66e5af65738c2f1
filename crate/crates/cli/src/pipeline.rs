//! Experiment pipelines. Each one validates its inputs, writes the manifest first and then its
//! data files through an [`OutputRecord`].

use crate::acceptance;
use crate::config::{ConfigError, Experiment, RunConfig};
use crate::export::{json_text, Cell, DiagramPlot, Table};
use crate::manifest::OutputRecord;
use anyhow::{anyhow, Context as _, Result};
use edgeflow_bulk::bulkfb::{band_energies, chern_number_fhs, find_quadratic_degeneracy, locate_dirac_points, measure_local_gap, BulkModel, DegeneracyKind, DegeneracyPoint, Selector};
use edgeflow_bulk::edgestrip::{compare_with_effective, comparison_grid, edge_diagram, order_fit, DiagramOpts, EdgeDiagram, EffectiveBranch};
use edgeflow_bulk::effparams::{compute_effective_params, edge_project_params, select_degenerate_basis, EffectiveParams, ParamValues, Which};
use edgeflow_core::lattice::{m_point, RationalEdge, V2};
use edgeflow_core::media::MediumSpec;
use edgeflow_effedge::curves::trace_eigenvalue_curves_with;
use edgeflow_effedge::{CurveEnd, EffEdgeOperator, Kind};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0:#}")]
    Runtime(#[from] anyhow::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Runtime(_) => 1,
        }
    }
}

/// Outcome of a successful run: `passed` is false only when `validate` found a failing criterion.
#[derive(Debug)]
pub struct RunSummary {
    pub record: OutputRecord,
    pub passed: bool,
}

struct Sink<'a> {
    rec: OutputRecord,
    formats: &'a [String],
}

impl Sink<'_> {
    fn wants(&self, f: &str) -> bool {
        self.formats.iter().any(|x| x == f)
    }

    fn table(&mut self, t: &Table) -> Result<()> {
        if self.wants("csv") {
            self.rec.write(&format!("{}.csv", t.name), &t.to_csv())?;
        }
        if self.wants("json") {
            self.rec.write(&format!("{}.json", t.name), &json_text(&t.to_json()))?;
        }
        Ok(())
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        if self.wants("json") {
            self.rec.write(&format!("{name}.json"), &json_text(v))?;
        }
        Ok(())
    }

    fn svg(&mut self, name: &str, p: &DiagramPlot) -> Result<()> {
        if self.wants("svg") {
            self.rec.write(&format!("{name}.svg"), &p.to_svg())?;
        }
        Ok(())
    }
}

/// Runs `experiment` with `cfg`, writing into `out`. `config_text` is hashed into the manifest.
pub fn run_pipeline(experiment: Experiment, cfg: &RunConfig, config_text: &str, out: &Path, formats: &[String]) -> Result<RunSummary, RunError> {
    cfg.validate()?;
    let medium = cfg.medium()?;
    let edge = cfg.edge()?;
    let rec = OutputRecord::create(out, experiment.name(), config_text).with_context(|| format!("creating {}", out.display()))?;
    let mut sink = Sink { rec, formats };
    let t = Instant::now();
    let result = match experiment {
        Experiment::Bands => bands(cfg, &medium, &mut sink).map(|_| true),
        Experiment::BulkGap => bulk_gap(cfg, &medium, &mut sink).map(|_| true),
        Experiment::Chern => chern(cfg, &medium, &mut sink).map(|_| true),
        Experiment::EffSpec => eff_spec(cfg, &mut sink).map(|_| true),
        Experiment::EdgeDiagram => diagram(cfg, &medium, &edge, &mut sink).map(|_| true),
        Experiment::Compare => compare(cfg, &medium, &edge, &mut sink).map(|_| true),
        Experiment::Validate => validate(&mut sink),
    };
    sink.rec.timing("total", t.elapsed().as_secs_f64());
    match result {
        Ok(passed) => {
            sink.rec.finish(if passed { "complete" } else { "acceptance-failed" }).context("writing manifest")?;
            Ok(RunSummary { record: sink.rec, passed })
        }
        Err(e) => {
            sink.rec.diagnostic("error", json!(format!("{e:#}")));
            let _ = sink.rec.finish("failed");
            Err(RunError::Runtime(e))
        }
    }
}

fn unperturbed(medium: &MediumSpec) -> MediumSpec {
    medium.with_delta(0.0)
}

/// The degeneracy of the unperturbed medium: quadratic at M when undeformed, a Dirac pair otherwise.
fn degeneracy(medium: &MediumSpec) -> Result<DegeneracyPoint> {
    let m0 = unperturbed(medium);
    let quad = find_quadratic_degeneracy(&MediumSpec { deformation: edgeflow_core::media::Deformation::identity(), ..m0.clone() }, 0, 20).context("locating the M-point degeneracy")?;
    if m0.deformation.is_volumetric() {
        return Ok(quad);
    }
    locate_dirac_points(&m0, quad.bands.0, 20).context("locating the Dirac pair")
}

fn params_for(medium: &MediumSpec, deg: &DegeneracyPoint, n: usize, which: Which) -> Result<EffectiveParams> {
    let model = BulkModel::new(&unperturbed(medium), n)?;
    let basis = select_degenerate_basis(&model, deg, which)?;
    Ok(compute_effective_params(&model, deg, &basis)?)
}

fn v2(v: &V2) -> Value {
    json!([v.x, v.y])
}

fn params_json(p: &EffectiveParams) -> Value {
    let values = match &p.values {
        ParamValues::Quadratic { alpha, alpha_resolvent } => json!({ "alpha": alpha, "alpha_resolvent": alpha_resolvent }),
        ParamValues::Dirac { gamma } => json!({ "gamma": gamma.iter().map(v2).collect::<Vec<_>>() }),
    };
    json!({ "values": values, "theta": p.theta, "e_star": p.e_star, "k_star": v2(&p.k_star), "first_order_defect": p.first_order_defect, "imag_residue": p.imag_residue })
}

fn degeneracy_json(d: &DegeneracyPoint) -> Value {
    json!({
        "kind": if d.kind == DegeneracyKind::Quadratic { "quadratic" } else { "dirac-pair" },
        "e_star": d.e_star,
        "k_star": v2(&d.k_star),
        "k_minus": v2(&d.k_minus),
        "bands": [d.bands.0, d.bands.1],
        "splitting": d.splitting,
    })
}

fn bands(cfg: &RunConfig, medium: &MediumSpec, sink: &mut Sink) -> Result<()> {
    let s = &cfg.solver;
    let model = BulkModel::new(medium, s.n)?;
    let sel = if medium.delta > 0.0 { Selector::Plus } else { Selector::Unperturbed };
    let corners = [V2::new(0.0, 0.0), V2::new(PI, 0.0), m_point(), V2::new(0.0, 0.0)];
    let mut ks: Vec<V2> = Vec::new();
    for w in corners.windows(2) {
        for i in 0..s.nq {
            ks.push(w[0] + (w[1] - w[0]) * (i as f64 / s.nq as f64));
        }
    }
    ks.push(corners[3]);
    let t = Instant::now();
    let energies: Vec<Vec<f64>> = ks.par_iter().map(|k| band_energies(&model.operator(*k, sel), s.bands)).collect();
    sink.rec.timing("bands", t.elapsed().as_secs_f64());
    let mut rows: Vec<(f64, f64, usize, f64)> = Vec::new();
    for (k, e) in ks.iter().zip(&energies) {
        for (b, x) in e.iter().enumerate() {
            rows.push((k.x, k.y, b, *x));
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    rows.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1 && a.2 == b.2);
    let mut table = Table::new("bands", &["k1", "k2", "band", "energy"]);
    for r in rows {
        table.push(vec![r.0.into(), r.1.into(), r.2.into(), r.3.into()]);
    }
    if medium.delta == 0.0 {
        let d = degeneracy(medium)?;
        sink.rec.diagnostic("degeneracy", degeneracy_json(&d));
        sink.json("degeneracy", &degeneracy_json(&d))?;
    }
    sink.table(&table)
}

fn bulk_gap(cfg: &RunConfig, medium: &MediumSpec, sink: &mut Sink) -> Result<()> {
    if medium.delta <= 0.0 {
        return Err(anyhow!("bulk-gap needs medium.delta > 0"));
    }
    let d = degeneracy(medium)?;
    let n = cfg.solver.n;
    let params = params_for(medium, &d, n, if d.kind == DegeneracyKind::Quadratic { Which::M } else { Which::DPlus })?;
    let gap = measure_local_gap(&unperturbed(medium), &d, medium.delta, n)?;
    let scaled = gap / medium.strength();
    let v = json!({
        "degeneracy": degeneracy_json(&d),
        "params": params_json(&params),
        "delta": medium.delta,
        "r": medium.r,
        "gap": gap,
        "gap_over_delta_r": scaled,
        "two_abs_theta": 2.0 * params.theta.abs(),
    });
    sink.rec.diagnostic("gap_over_delta_r", json!(scaled));
    sink.json("bulk_gap", &v)?;
    let mut t = Table::new("bulk_gap", &["delta", "gap", "gap_over_delta_r", "two_abs_theta"]);
    t.push(vec![medium.delta.into(), gap.into(), scaled.into(), (2.0 * params.theta.abs()).into()]);
    if sink.wants("csv") {
        sink.rec.write("bulk_gap.csv", &t.to_csv())?;
    }
    Ok(())
}

fn chern(cfg: &RunConfig, medium: &MediumSpec, sink: &mut Sink) -> Result<()> {
    let s = &cfg.solver;
    if medium.delta <= 0.0 {
        return Err(anyhow!("chern needs medium.delta > 0"));
    }
    let mut t = Table::new("chern", &["selector", "chern", "raw", "min_gap"]);
    let mut cs = Vec::new();
    for (name, sel) in [("plus", Selector::Plus), ("minus", Selector::Minus)] {
        let c = chern_number_fhs(medium, medium.delta, sel, s.bands_below, s.nk, s.n)?;
        t.push(vec![name.into(), c.chern.into(), c.raw.into(), c.min_gap.into()]);
        cs.push(c.chern);
    }
    sink.rec.diagnostic("chern_difference", json!(cs[0] - cs[1]));
    sink.table(&t)
}

fn end_name(e: CurveEnd) -> &'static str {
    match e {
        CurveEnd::GridEnd => "grid-end",
        CurveEnd::Lower => "lower",
        CurveEnd::Upper => "upper",
    }
}

fn eff_spec(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let op = cfg.effective_operator()?;
    let kappas = cfg.kappa_grid();
    let tr = trace_eigenvalue_curves_with(&op, &kappas, cfg.solver.max_states)?;
    let mut t = Table::new("eff_spec", &["kappa", "value", "class", "curve_id"]);
    for s in &tr.slices {
        t.push(vec![s.kappa.into(), s.ess_lower_edge.into(), "ess-lower".into(), Cell::Int(-1)]);
        t.push(vec![s.kappa.into(), s.ess_upper_edge.into(), "ess-upper".into(), Cell::Int(-1)]);
    }
    for (i, c) in tr.curves.iter().enumerate() {
        for (k, w) in &c.points {
            t.push(vec![(*k).into(), (*w).into(), "bound".into(), i.into()]);
        }
    }
    let curves: Vec<Value> = tr.curves.iter().map(|c| json!({ "start": end_name(c.start), "end": end_name(c.end), "flow": c.flow_contribution, "points": c.points.len(), "min_overlap": c.min_overlap })).collect();
    sink.rec.diagnostic("spectral_flow", json!(tr.spectral_flow));
    sink.rec.diagnostic("traversing_curves", json!(tr.traversing()));
    sink.table(&t)?;
    sink.json("eff_spec_summary", &json!({ "kind": op.kind.name(), "spectral_flow": tr.spectral_flow, "curves": curves }))?;
    let plot = DiagramPlot {
        title: format!("{} family, spectral flow {}", op.kind.name(), tr.spectral_flow),
        x_label: "κ".into(),
        y_label: "Ω".into(),
        xs: tr.slices.iter().map(|s| s.kappa).collect(),
        lower: tr.slices.iter().map(|s| s.ess_lower_edge).collect(),
        upper: tr.slices.iter().map(|s| s.ess_upper_edge).collect(),
        curves: tr.curves.iter().map(|c| c.points.clone()).collect(),
        points: vec![],
        y_range: None,
    };
    sink.svg("eff_spec", &plot)
}

fn diagram_table(name: &str, dg: &EdgeDiagram) -> Table {
    let mut t = Table::new(name, &["k", "value", "class", "curve_id"]);
    for s in &dg.slices {
        t.push(vec![s.k_par.into(), s.ess_lower_edge.into(), "ess-lower".into(), Cell::Int(-1)]);
        t.push(vec![s.k_par.into(), s.ess_upper_edge.into(), "ess-upper".into(), Cell::Int(-1)]);
        for st in &s.spectrum.states {
            let id = dg.curves.iter().position(|c| c.points.iter().any(|p| p.0 == s.k_par && p.1 == st.value)).map(|i| i as i64).unwrap_or(-1);
            t.push(vec![s.k_par.into(), st.value.into(), st.class.name().into(), Cell::Int(id)]);
        }
    }
    t
}

fn diagram_plot(dg: &EdgeDiagram, title: String) -> DiagramPlot {
    DiagramPlot {
        title,
        x_label: "k∥".into(),
        y_label: "E".into(),
        xs: dg.k_grid.clone(),
        lower: dg.slices.iter().map(|s| s.ess_lower_edge).collect(),
        upper: dg.slices.iter().map(|s| s.ess_upper_edge).collect(),
        curves: dg.curves.iter().map(|c| c.points.clone()).collect(),
        points: vec![],
        y_range: None,
    }
}

fn diagram(cfg: &RunConfig, medium: &MediumSpec, edge: &RationalEdge, sink: &mut Sink) -> Result<()> {
    let s = &cfg.solver;
    let d = degeneracy(medium)?;
    let mut opts = DiagramOpts::new(d.bands, d.e_star);
    opts.n = s.n;
    opts.width = s.width;
    opts.max_states = s.max_states;
    opts.nq = s.nq;
    let t = Instant::now();
    let dg = edge_diagram(medium, edge, &cfg.k_grid(), &opts)?;
    sink.rec.timing("edge_diagram", t.elapsed().as_secs_f64());
    sink.rec.diagnostic("spectral_flow", json!(dg.flow));
    sink.rec.diagnostic("traversing_curves", json!(dg.traversing()));
    sink.rec.diagnostic("width_cells", json!(dg.width_cells));
    let counts: Vec<Value> = dg
        .slices
        .iter()
        .map(|s| {
            use edgeflow_bulk::edgestrip::StateClass::*;
            json!({ "k": s.k_par, "edge": s.spectrum.count(Edge), "bulk": s.spectrum.count(Bulk), "spurious": s.spectrum.count(Spurious), "complete": s.spectrum.complete })
        })
        .collect();
    sink.rec.diagnostic("classification", Value::Array(counts));
    sink.table(&diagram_table("edge_diagram", &dg))?;
    sink.svg("edge_diagram", &diagram_plot(&dg, format!("edge states, spectral flow {}", dg.flow)))
}

/// Effective families anchored at the degeneracy of `medium` for the vertical edge.
pub fn effective_branches(medium: &MediumSpec, deg: &DegeneracyPoint, edge: &RationalEdge, n: usize) -> Result<Vec<EffectiveBranch>> {
    let wall = medium.wall.clone();
    if deg.kind == DegeneracyKind::Quadratic {
        let p = params_for(medium, deg, n, Which::M)?;
        let alpha = p.alpha().ok_or_else(|| anyhow!("missing α"))?;
        let op = EffEdgeOperator::schrodinger(alpha, p.theta, edge, wall).with_scaled_domain();
        return Ok(vec![EffectiveBranch { k_star: edge.k_parallel(&deg.k_star), op, tracked: 2 }]);
    }
    let p = params_for(medium, deg, n, Which::DPlus)?;
    let (a, b, c) = edge_project_params(&p, edge)?;
    Ok(vec![
        EffectiveBranch { k_star: edge.k_parallel(&deg.k_star), op: EffEdgeOperator::dirac(Kind::DiracPlus, a, b, c, wall.clone()).with_scaled_domain(), tracked: 1 },
        EffectiveBranch { k_star: edge.k_parallel(&deg.k_minus), op: EffEdgeOperator::dirac(Kind::DiracMinus, a, b, c, wall).with_scaled_domain(), tracked: 1 },
    ])
}

fn compare(cfg: &RunConfig, medium: &MediumSpec, edge: &RationalEdge, sink: &mut Sink) -> Result<()> {
    if medium.delta <= 0.0 {
        return Err(anyhow!("compare needs medium.delta > 0"));
    }
    let s = &cfg.solver;
    let d = degeneracy(medium)?;
    let branches = effective_branches(medium, &d, edge, s.n)?;
    let kappas = &s.compare_kappas;
    let kmax = kappas.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let mut reports = Vec::new();
    let mut t = Table::new("compare", &["delta", "branch", "kappa", "k", "omega", "energy", "residual"]);
    for delta in [medium.delta, 0.5 * medium.delta] {
        let med = medium.with_delta(delta);
        let mut opts = DiagramOpts::new(d.bands, d.e_star);
        opts.n = s.n;
        opts.max_states = s.max_states;
        opts.nq = s.nq;
        let ks = comparison_grid(&branches, delta, kappas);
        let dg = edge_diagram(&med, edge, &ks, &opts)?;
        let rep = compare_with_effective(&dg, &branches, d.e_star, delta, medium.r, kmax)?;
        for p in &rep.points {
            t.push(vec![delta.into(), p.branch.into(), p.kappa.into(), p.k_par.into(), p.omega.into(), p.energy.into(), p.residual.into()]);
        }
        reports.push(rep);
    }
    let p = order_fit(&reports[0], &reports[1]);
    sink.rec.diagnostic("order_fit", json!(p));
    sink.rec.diagnostic("max_residuals", json!(reports.iter().map(|r| r.max_residual).collect::<Vec<_>>()));
    sink.table(&t)
}

fn validate(sink: &mut Sink) -> Result<bool> {
    let mut t = Table::new("acceptance", &["id", "title", "pass", "seconds", "detail"]);
    let outcomes = acceptance::run(&[], &mut |o| println!("{}", o.line()));
    for o in &outcomes {
        t.push(vec![o.id.into(), o.title.into(), (if o.pass { "PASS" } else { "FAIL" }).into(), o.seconds.into(), o.detail.as_str().into()]);
    }
    let passed = outcomes.iter().all(|o| o.pass);
    sink.rec.diagnostic("failed", json!(outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect::<Vec<_>>()));
    if sink.wants("csv") || sink.wants("json") {
        sink.table(&t)?;
    }
    Ok(passed)
}
