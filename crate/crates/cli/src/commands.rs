use anyhow::{Context, Result};
use opgrowth::analysis::{build_report, GrowthReport};
use opgrowth::dynamics::{correlation_function, krylov_complexity, propagate_chain};
use opgrowth::lanczos::{lanczos_run, LanczosSequence};
use opgrowth::models::{DecayLaw, Model};
use opgrowth::spin::{extract_structure_function, StructureFunctionFit};
use opgrowth::ThermalEnsemble;
use serde::Serialize;

use crate::config::{ModelSpec, RunConfig};
use crate::output::{num, Run};

/// Norm drift above which the manifest carries a warning.
const NORM_WARNING: f64 = 1e-8;

#[derive(Serialize)]
struct ReportFile<'a> {
    #[serde(flatten)]
    report: &'a GrowthReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    structure: Option<&'a StructureFunctionFit>,
}

fn build(cfg: &RunConfig, run: &mut Run) -> Result<Model> {
    let model = cfg.build().context("building model")?;
    run.warnings.extend(model.warnings.iter().cloned());
    Ok(model)
}

fn lanczos(cfg: &RunConfig, model: &Model) -> Result<LanczosSequence> {
    let ens = ThermalEnsemble::new(&model.spectrum, cfg.beta)?;
    Ok(lanczos_run(&model.operator, &model.spectrum, &ens, &cfg.lanczos)?)
}

fn write_lanczos(run: &mut Run, b: &LanczosSequence) -> Result<()> {
    let rows = b.active().iter().enumerate().map(|(i, v)| vec![(i + 1).to_string(), num(*v)]);
    run.csv("lanczos.csv", &["n", "b_n"], rows)?;
    if let Some(t) = b.terminated_at {
        run.notes.push(format!("Lanczos terminated at n = {t}: b_{t} below tolerance"));
    }
    if b.floor_zeroed > 0 {
        run.notes.push(format!("{} matrix elements below the noise floor were zeroed", b.floor_zeroed));
    }
    Ok(())
}

fn report(cfg: &RunConfig, b: &LanczosSequence, decay: Option<&DecayLaw>, run: &mut Run) -> Result<GrowthReport> {
    let r = build_report(b, decay, cfg.beta, cfg.analysis.window)?;
    run.warnings.extend(r.warnings.iter().cloned());
    Ok(r)
}

pub fn model(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let m = build(cfg, run)?;
    let e = m.spectrum.energies();
    run.csv("spectrum.csv", &["index", "energy"], e.iter().enumerate().map(|(i, x)| vec![i.to_string(), num(*x)]))?;
    let o = m.operator.elements();
    let dim = o.nrows();
    let rows = (0..dim).flat_map(|l| {
        (l..dim).filter(move |&k| o[(l, k)] != 0.0).map(move |k| vec![l.to_string(), k.to_string(), num(o[(l, k)])])
    });
    run.csv("operator.csv", &["l", "k", "value"], rows)?;
    Ok(())
}

pub fn lanczos_cmd(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let m = build(cfg, run)?;
    let b = lanczos(cfg, &m)?;
    write_lanczos(run, &b)?;
    let r = report(cfg, &b, cfg.decay_class().as_ref(), run)?;
    run.json("growth_report.json", &ReportFile { report: &r, structure: None })
}

pub fn dynamics(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let m = build(cfg, run)?;
    let b = lanczos(cfg, &m)?;
    write_lanczos(run, &b)?;
    let times = cfg.dynamics.grid()?;
    let wf = propagate_chain(&b, &times, &cfg.dynamics.propagation)?;
    let ck = krylov_complexity(&wf);
    run.csv("complexity.csv", &["t", "complexity"], times.iter().zip(&ck).map(|(t, c)| vec![num(*t), num(*c)]))?;
    let ens = ThermalEnsemble::new(&m.spectrum, cfg.beta)?;
    let c = correlation_function(&m.operator, &m.spectrum, &ens, &times, false)?;
    run.csv("correlation.csv", &["t", "correlation"], times.iter().zip(&c).map(|(t, c)| vec![num(*t), num(*c)]))?;
    if wf.max_norm_error > NORM_WARNING {
        run.warnings.push(format!("Krylov norm drifted by {:.3e}", wf.max_norm_error));
    }
    if let Some(n) = wf.padded_from {
        run.notes.push(format!("chain extrapolated linearly from n = {n} to {} sites", wf.sites));
    }
    run.dynamics = Some(serde_json::json!({
        "method": wf.method,
        "sites": wf.sites,
        "padded_from": wf.padded_from,
        "max_norm_error": wf.max_norm_error,
        "max_boundary_occupancy": wf.max_boundary_occupancy,
    }));
    Ok(())
}

pub fn structure(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let m = build(cfg, run)?;
    let fit = extract_structure_function(&m.operator, &m.spectrum, &cfg.analysis.structure)?;
    let rows = fit.omega_bins.iter().map(|b| vec![num(b.omega), num(b.rms), b.count.to_string()]);
    run.csv("structure_function.csv", &["omega", "rms_element", "count"], rows)?;
    if let Some(c) = &fit.crossover {
        run.notes.push(format!("decay changes from {} to {} near ω = {:.6}", c.lower.law.name(), c.upper.law.name(), c.split));
    }
    let b = lanczos(cfg, &m)?;
    write_lanczos(run, &b)?;
    let r = report(cfg, &b, Some(&fit.classified), run)?;
    run.json("growth_report.json", &ReportFile { report: &r, structure: Some(&fit) })
}

#[derive(Serialize)]
struct SweepPoint {
    beta: f64,
    gamma: Option<f64>,
    p: Option<u32>,
    sites: Option<usize>,
    report: GrowthReport,
}

fn sweep_point(cfg: &RunConfig) -> Result<SweepPoint> {
    let m = cfg.build()?;
    let ens = ThermalEnsemble::new(&m.spectrum, cfg.beta)?;
    let b = lanczos_run(&m.operator, &m.spectrum, &ens, &cfg.lanczos)?;
    let mut report = build_report(&b, cfg.decay_class().as_ref(), cfg.beta, cfg.analysis.window)?;
    report.warnings.extend(m.warnings);
    let (gamma, p, sites) = match cfg.model {
        ModelSpec::Random { decay: DecayLaw::Exponential { gamma }, .. } => (Some(gamma), None, None),
        ModelSpec::Anharmonic { p, .. } | ModelSpec::Semiclassical { p, .. } => (None, Some(p), None),
        ModelSpec::Xxz { sites, .. } => (None, None, Some(sites)),
        _ => (None, None, None),
    };
    Ok(SweepPoint { beta: cfg.beta, gamma, p, sites, report })
}

#[cfg(feature = "parallel")]
fn map_points(points: &[RunConfig]) -> Vec<Result<SweepPoint>> {
    use rayon::prelude::*;
    points.par_iter().map(sweep_point).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_points(points: &[RunConfig]) -> Vec<Result<SweepPoint>> {
    points.iter().map(sweep_point).collect()
}

pub fn sweep(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let points = cfg.sweep_points()?;
    let results: Vec<SweepPoint> = map_points(&points).into_iter().collect::<Result<_>>()?;
    let opt = |x: Option<String>| x.unwrap_or_default();
    let rows = results.iter().map(|s| {
        let r = &s.report;
        vec![
            num(s.beta),
            opt(s.gamma.map(num)),
            opt(s.p.map(|p| p.to_string())),
            opt(s.sites.map(|l| l.to_string())),
            num(r.alpha_fit),
            num(r.alpha_stderr),
            num(r.exponent),
            num(r.r_squared),
            num(r.alpha_bound),
            opt(r.alpha_predicted.map(num)),
            num(r.saturation_ratio),
            r.window.0.to_string(),
            r.window.1.to_string(),
        ]
    });
    let header = [
        "beta",
        "gamma",
        "p",
        "sites",
        "alpha_fit",
        "alpha_stderr",
        "exponent",
        "r_squared",
        "alpha_bound",
        "alpha_predicted",
        "saturation_ratio",
        "window_lo",
        "window_hi",
    ];
    run.csv("sweep.csv", &header, rows)?;
    for (i, s) in results.iter().enumerate() {
        run.warnings.extend(s.report.warnings.iter().map(|w| format!("point {i}: {w}")));
    }
    run.json("sweep_reports.json", &results)
}
