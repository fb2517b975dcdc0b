use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use fracdamp::evolution::{
    fit_decay_window, initial_data, step_count, DecayFit, EnergyTrace, SimulationResult, Stepper,
};
use fracdamp::kernel::build_quadrature;
use fracdamp::operator::build_grid;
use fracdamp::spectral::{
    build_generator, compute_spectrum, fit_resolvent_exponent, resolvent_peaks, spectrum_to_json,
    write_resolvent_csv, AsymptoticConstants, ResolventFit, ResolventPeak,
};
use fracdamp::{ModelConfig, RunConfig};

use crate::manifest;

fn model_of(cfg: &RunConfig) -> anyhow::Result<ModelConfig> {
    Ok(cfg.validate()?.model)
}

fn create(out: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    let path = out.join(name);
    Ok(BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> anyhow::Result<()> {
    let mut w = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn simulate_model(
    cfg: &RunConfig,
    model: &ModelConfig,
) -> anyhow::Result<(Stepper, SimulationResult)> {
    let stepper = Stepper::from_config(model, &cfg.grid())?;
    let psi0 = initial_data(&stepper.grid, model.bc_branch);
    let state = stepper.initial_state(&psi0)?;
    let n = step_count(cfg.t_final, cfg.dt);
    log::info!("simulating {n} steps of dt = {}", cfg.dt);
    let res = stepper.run(state, n, cfg.output_every)?;
    Ok((stepper, res))
}

fn fit_json(fit: &fracdamp::Result<DecayFit>, alpha_frac: f64) -> serde_json::Value {
    let target = if alpha_frac < 1.0 {
        json!(-2.0 / (1.0 - alpha_frac))
    } else {
        serde_json::Value::Null
    };
    match fit {
        Ok(f) => json!({ "fit": f, "target_slope": target }),
        Err(e) => {
            json!({ "fit": null, "error": { "kind": e.kind(), "message": e.to_string() }, "target_slope": target })
        }
    }
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let model = model_of(cfg)?;
    let (stepper, res) = simulate_model(cfg, &model)?;
    let mut w = create(out, "energy_trace.csv")?;
    res.trace.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(out, "final_state.csv")?;
    stepper.write_state_csv(&res.final_state, &mut w)?;
    w.flush()?;
    let fit = fit_decay_window(&res.trace, cfg.fit_t_start);
    write_json(
        out,
        "simulation.json",
        &json!({ "audit": res.audit, "decay": fit_json(&fit, model.alpha_frac) }),
    )?;
    let artifacts = ["energy_trace.csv", "final_state.csv", "simulation.json"].map(String::from);
    manifest::write(
        out,
        "simulate",
        cfg,
        &model,
        &artifacts,
        serde_json::Value::Null,
    )
}

pub fn spectrum(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let model = model_of(cfg)?;
    let spec = compute_spectrum(cfg.k_min as i64, cfg.k_max as i64, &model)?;
    let flagged: Vec<i64> = spec.iter().filter(|e| e.flagged).map(|e| e.k).collect();
    if !flagged.is_empty() {
        log::warn!("roots far from their seeds for k = {flagged:?}");
    }
    let mut w = create(out, "spectrum.json")?;
    writeln!(w, "{}", spectrum_to_json(&spec)?)?;
    w.flush()?;
    manifest::write(
        out,
        "spectrum",
        cfg,
        &model,
        &["spectrum.json".to_string()],
        json!({ "flagged": flagged }),
    )
}

fn resolvent_study(
    cfg: &RunConfig,
    model: &ModelConfig,
) -> anyhow::Result<(Vec<ResolventPeak>, ResolventFit)> {
    let grid = build_grid(cfg.n_x, model.alpha_deg)?;
    let quad = if model.is_direct_damping() {
        None
    } else {
        Some(build_quadrature(
            model.alpha_frac,
            model.wp,
            cfg.n_xi,
            cfg.xi_min,
            cfg.xi_max,
        )?)
    };
    let generator = build_generator(model, &grid, quad.as_ref())?;
    let peaks = resolvent_peaks(
        model,
        &generator,
        cfg.resolvent_k_min as i64,
        cfg.resolvent_k_max as i64,
    )?;
    let fit = fit_resolvent_exponent(&peaks)?;
    Ok((peaks, fit))
}

pub fn resolvent(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let model = model_of(cfg)?;
    let (peaks, fit) = resolvent_study(cfg, &model)?;
    let rows: Vec<(f64, f64)> = peaks.iter().map(|p| (p.beta, p.norm)).collect();
    let mut w = create(out, "resolvent.csv")?;
    write_resolvent_csv(&mut w, &rows)?;
    w.flush()?;
    write_json(
        out,
        "resolvent_fit.json",
        &json!({ "fit": fit, "target_slope": 1.0 - model.alpha_frac, "peaks": peaks }),
    )?;
    let artifacts = ["resolvent.csv", "resolvent_fit.json"].map(String::from);
    manifest::write(
        out,
        "resolvent",
        cfg,
        &model,
        &artifacts,
        serde_json::Value::Null,
    )
}

pub fn validate_kernel(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let model = model_of(cfg)?;
    let quad = build_quadrature(model.alpha_frac, model.wp, cfg.n_xi, cfg.xi_min, cfg.xi_max)?;
    let report = quad.certification_report(
        &fracdamp::kernel::CERTIFICATION_LAMBDAS,
        fracdamp::kernel::CERTIFICATION_TOLERANCE,
    )?;
    write_json(out, "kernel_report.json", &report)?;
    manifest::write(
        out,
        "validate-kernel",
        cfg,
        &model,
        &["kernel_report.json".to_string()],
        serde_json::Value::Null,
    )?;
    if !report.passed {
        return Err(fracdamp::Error::Certification {
            worst_lambda: report.worst_lambda,
            worst_error: report.max_relative_error,
            tolerance: report.tolerance,
        }
        .into());
    }
    Ok(())
}

pub fn fit_decay(cfg: &RunConfig, out: &Path, trace: Option<&Path>) -> anyhow::Result<()> {
    let model = model_of(cfg)?;
    let (trace, source) = match trace {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            (
                EnergyTrace::read_csv(BufReader::new(f))?,
                p.display().to_string(),
            )
        }
        None => (
            simulate_model(cfg, &model)?.1.trace,
            "simulation".to_string(),
        ),
    };
    let fit = fit_decay_window(&trace, cfg.fit_t_start);
    write_json(out, "decay_fit.json", &fit_json(&fit, model.alpha_frac))?;
    manifest::write(
        out,
        "fit-decay",
        cfg,
        &model,
        &["decay_fit.json".to_string()],
        json!({ "trace": source }),
    )?;
    fit?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepRow {
    value: f64,
    decay_slope: Option<f64>,
    resolvent_slope: Option<f64>,
    /// Mean of k^{2−2α̃}|Re λ_k| over the fit window.
    re_constant_fit: Option<f64>,
    re_constant_predicted: Option<f64>,
    /// Re λ at the largest index of the window.
    re_lambda_kmax: Option<f64>,
    errors: Vec<String>,
}

/// Indices used for the asymptotic constant: k ≥ 20 when the range allows,
/// otherwise everything from k = 5 up.
fn re_constant_window(cfg: &RunConfig) -> (i64, i64) {
    let hi = cfg.k_max as i64;
    let lo = if hi >= 20 {
        20.max(cfg.k_min as i64)
    } else {
        5.max(cfg.k_min as i64)
    };
    (lo.min(hi), hi)
}

fn sweep_row(base: &RunConfig, param: &str, value: f64) -> SweepRow {
    let mut row = SweepRow {
        value,
        decay_slope: None,
        resolvent_slope: None,
        re_constant_fit: None,
        re_constant_predicted: None,
        re_lambda_kmax: None,
        errors: Vec::new(),
    };
    let mut cfg = base.clone();
    let model = match cfg
        .set(param, &value.to_string())
        .and_then(|_| cfg.validate())
    {
        Ok(v) => v.model,
        Err(e) => {
            row.errors.push(format!("config: {e}"));
            return row;
        }
    };
    match simulate_model(&cfg, &model)
        .map_err(|e| e.to_string())
        .and_then(|(_, r)| fit_decay_window(&r.trace, cfg.fit_t_start).map_err(|e| e.to_string()))
    {
        Ok(f) => row.decay_slope = Some(f.slope),
        Err(e) => row.errors.push(format!("decay: {e}")),
    }
    match resolvent_study(&cfg, &model) {
        Ok((_, f)) => row.resolvent_slope = Some(f.slope),
        Err(e) => row.errors.push(format!("resolvent: {e}")),
    }
    let (lo, hi) = re_constant_window(&cfg);
    match compute_spectrum(lo, hi, &model) {
        Ok(spec) => {
            let e = 2.0 - 2.0 * model.alpha_frac;
            let vals: Vec<f64> = spec
                .iter()
                .map(|s| (s.k as f64).powf(e) * s.lambda.re.abs())
                .collect();
            row.re_constant_fit = Some(vals.iter().sum::<f64>() / vals.len() as f64);
            row.re_lambda_kmax = spec.iter().find(|s| s.k == hi).map(|s| s.lambda.re);
        }
        Err(e) => row.errors.push(format!("spectrum: {e}")),
    }
    match AsymptoticConstants::new(&model) {
        Ok(c) if model.alpha_frac != 0.5 && model.alpha_frac < 1.0 => {
            row.re_constant_predicted = Some(c.re_constant(model.alpha_frac).abs())
        }
        Ok(_) => {}
        Err(e) => row.errors.push(format!("asymptotics: {e}")),
    }
    row
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

pub fn sweep(cfg: &RunConfig, out: &Path, param: &str, values: &[f64]) -> anyhow::Result<()> {
    let model = model_of(cfg)?;
    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&v| sweep_row(cfg, param, v))
        .collect();
    let mut w = create(out, "sweep.csv")?;
    writeln!(
        w,
        "param,value,decay_slope,resolvent_slope,re_constant_fit,re_constant_predicted,re_lambda_kmax,errors"
    )?;
    for r in &rows {
        writeln!(
            w,
            "{param},{:.16e},{},{},{},{},{},\"{}\"",
            r.value,
            opt(r.decay_slope),
            opt(r.resolvent_slope),
            opt(r.re_constant_fit),
            opt(r.re_constant_predicted),
            opt(r.re_lambda_kmax),
            r.errors.join("; ").replace('"', "'")
        )?;
    }
    w.flush()?;
    write_json(out, "sweep.json", &json!({ "param": param, "rows": rows }))?;
    let artifacts = ["sweep.csv", "sweep.json"].map(String::from);
    manifest::write(
        out,
        "sweep",
        cfg,
        &model,
        &artifacts,
        json!({ "param": param, "values": values }),
    )
}
