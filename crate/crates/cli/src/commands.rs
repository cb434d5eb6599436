//! The four subcommands. Each returns the lines it wants printed.

use crate::config::{ExperimentConfig, ReconMode};
use crate::experiment::Experiment;
use pat_core::io::{read_field, read_record, write_field, write_pgm, write_record};
use pat_core::media::{Rect, ScalarField2D};
use pat_core::reconstruction::{back_projection, metrics, neumann_reconstruct, Metrics, NeumannConfig};
use pat_core::wavesolver::SolverConfig;
use pat_core::{PatError, Result};
use std::fs;
use std::path::Path;

fn prepare(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn save_image(dir: &Path, stem: &str, f: &ScalarField2D, window: [f64; 2]) -> Result<()> {
    write_field(&dir.join(format!("{stem}.patf")), f)?;
    write_pgm(&dir.join(format!("{stem}.pgm")), f, window[0], window[1])
}

/// Forward simulation with the data solver; writes `data.patr` and the truth.
pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<String>> {
    let exp = Experiment::build(cfg)?;
    let t = exp.t_final()?;
    let model = exp.data_model(t)?;
    prepare(out)?;
    let run = model.forward(&exp.truth, cfg.output.dump_every)?;
    let record = run.record.expect("forward runs record");
    write_record(&out.join("data.patr"), &record)?;
    save_image(out, "truth", &exp.truth.f1, cfg.output.window)?;
    write_field(&out.join("truth_f2.patf"), &exp.truth.f2)?;
    write_field(&out.join("speed.patf"), &exp.medium.c)?;
    write_field(&out.join("damping.patf"), &exp.medium.a)?;
    for (step, _, u) in &run.snapshots {
        write_field(&out.join(format!("snapshot_{step:06}.patf")), &u.restrict_to(&exp.domain)?)?;
    }
    Ok(vec![
        format!("T = {t:.6}, dt = {:.6e}, steps = {}", model.cfg.dt, model.cfg.n_steps()),
        format!("nodes on Γ = {}, max |h| = {:.6e}", record.n_nodes(), record.max_abs()),
        format!("wrote {}", out.join("data.patr").display()),
    ])
}

fn metrics_line(name: &str, m: &Metrics) -> String {
    format!("{name},{:.6},{:.6}", m.rel_l2, m.rel_linf)
}

/// Back-projection and Neumann series from a record. The truth is only read
/// after the series has finished.
pub fn reconstruct(
    cfg: &ExperimentConfig,
    data: &Path,
    truth: Option<&Path>,
    out: &Path,
    terms: Option<usize>,
) -> Result<Vec<String>> {
    let exp = Experiment::build(cfg)?;
    let h = read_record(data)?;
    if h.n_samples() < 2 {
        return Err(PatError::Geometry("record holds fewer than two samples".into()));
    }
    let probe = exp.solver_config(h.t_final())?;
    let scfg = SolverConfig::with_dt(cfg.solver.order, h.dt, h.n_samples() - 1, probe.courant);
    let model = exp.recon_model(scfg)?;
    model.check_record(&h)?;
    prepare(out)?;
    let mut lines = vec![format!("T = {:.6}, dt = {:.6e}, nodes = {}", h.t_final(), h.dt, h.n_nodes())];
    let mut results = Vec::new();
    let mode = cfg.recon.mode;
    if matches!(mode, ReconMode::BackProjection | ReconMode::Both) {
        let bp = back_projection(&model, &h)?;
        save_image(out, "back_projection", &bp.f1, cfg.output.window)?;
        results.push(("back_projection", bp.f1));
    }
    if matches!(mode, ReconMode::Neumann | ReconMode::Both) {
        let ncfg = NeumannConfig {
            n_terms: terms.unwrap_or(cfg.recon.n_terms),
            stop_tol: cfg.recon.stop_tol,
            kind: cfg.recon.tr_kind,
            record_history: truth.is_some(),
        };
        let mut report = match neumann_reconstruct(&model, &h, &ncfg) {
            Ok(r) => r,
            Err(e @ PatError::NonContraction { .. }) => {
                if let Ok(rep) = exp.visibility() {
                    fs::write(out.join("rays.csv"), rep.to_csv())?;
                }
                return Err(e);
            }
            Err(e) => return Err(e),
        };
        save_image(out, "neumann", &report.reconstruction.f1, cfg.output.window)?;
        for (m, partial) in report.history.iter().enumerate() {
            write_field(&out.join(format!("neumann_term_{m:02}.patf")), &partial.f1)?;
        }
        if let Some(path) = truth {
            let t = load_truth(path, &exp)?;
            report.attach_truth(&t, &exp.omega0)?;
        }
        fs::write(out.join("terms.csv"), report.to_csv())?;
        lines.push(format!("terms = {}, last increment ratio = {:.4}", report.increments.len(), {
            report.ratios().last().copied().unwrap_or(0.0)
        }));
        results.push(("neumann", report.reconstruction.f1));
    }
    if let Some(path) = truth {
        let t = load_truth(path, &exp)?;
        let mut csv = String::from("method,rel_l2,rel_linf\n");
        for (name, f) in &results {
            let line = metrics_line(name, &metrics(f, &t, &exp.omega0)?);
            csv.push_str(&line);
            csv.push('\n');
            lines.push(line);
        }
        fs::write(out.join("metrics.csv"), csv)?;
    }
    Ok(lines)
}

fn load_truth(path: &Path, exp: &Experiment) -> Result<ScalarField2D> {
    let t = read_field(path)?;
    if !t.grid().same_shape(&exp.domain) {
        return Err(PatError::Geometry(format!(
            "truth grid {}x{} does not match the domain grid {}x{}",
            t.grid().nx,
            t.grid().ny,
            exp.domain.nx,
            exp.domain.ny
        )));
    }
    ScalarField2D::from_values(exp.domain, t.into_values())
}

/// `T0`, `T1` and the offender list; fails when rays are trapped or the
/// configured `T` does not exceed `T1`.
pub fn rays(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<String>> {
    let exp = Experiment::build(cfg)?;
    let rep = exp.visibility()?;
    prepare(out)?;
    fs::write(out.join("rays.csv"), rep.to_csv())?;
    let t = cfg.solver.t_final.unwrap_or(1.2 * rep.t1);
    let visible = rep.visible(t);
    let lines = vec![
        format!("T0 = {:.6}", rep.t0),
        format!("T1 = {:.6}", rep.t1),
        format!("seeds = {}, degenerate = {}, offenders = {}", rep.n_seeds, rep.degenerate, rep.offenders.len()),
        format!("visible: T > T1 = {visible} (T = {t:.6})"),
    ];
    if !rep.offenders.is_empty() {
        return Err(PatError::Visibility(format!(
            "{} sampled rays never reach Γ (T1 = ∞); offenders in {}\n{}",
            rep.offenders.len(),
            out.join("rays.csv").display(),
            lines.join("\n")
        )));
    }
    if !visible {
        return Err(PatError::Visibility(format!("T = {t} does not exceed T1 = {}\n{}", rep.t1, lines.join("\n"))));
    }
    Ok(lines)
}

/// Relative errors of `reco` against `truth` over `region` (whole grid when absent).
pub fn metrics_cmd(reco: &Path, truth: &Path, region: Option<Rect>) -> Result<Vec<String>> {
    let r = read_field(reco)?;
    let t = read_field(truth)?;
    if !r.grid().same_shape(t.grid()) {
        return Err(PatError::Geometry("reconstruction and truth grids differ".into()));
    }
    let region = region.unwrap_or_else(|| t.grid().bounds());
    let m = metrics(&r, &t, &region)?;
    Ok(vec!["rel_l2,rel_linf".into(), format!("{:.6},{:.6}", m.rel_l2, m.rel_linf)])
}
