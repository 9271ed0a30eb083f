//! Window-ensemble fits over width and potential tables from earlier runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use rydlink::fit::{
    gamma0_distribution, pooled_estimate, potential_ratios, width_ratios, ChiRatio, FitEnsemble, FitError,
    FitEstimate, Model,
};
use rydlink::observables::BROKEN_THRESHOLD;

use crate::config::{Experiment, RunConfig};
use crate::error::RunError;
use crate::ground::tag;
use crate::records::{read_table, Output, PotentialTableRow, WidthTableRow, POTENTIAL, WIDTHS};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateRow {
    pub delta: f64,
    pub dataset: String,
    pub model: Model,
    pub param: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub delta: f64,
    pub dataset: String,
    pub window_start: usize,
    pub window_end: usize,
    pub ratio: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramRow {
    pub delta: f64,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Analysis {
    pub estimates: Vec<EstimateRow>,
    pub ratios: Vec<RatioRow>,
    pub gamma0: BTreeMap<String, Vec<f64>>,
}

impl Analysis {
    pub fn find(&self, delta: f64, dataset: &str, param: &str) -> Option<&EstimateRow> {
        self.estimates
            .iter()
            .find(|e| e.delta == delta && e.dataset == dataset && e.param == param)
    }
}

pub const HISTOGRAM_BINS: usize = 40;

fn table_paths(input: &Path, name: &str) -> Option<PathBuf> {
    if input.is_dir() {
        let p = input.join(name);
        p.exists().then_some(p)
    } else if input.file_name().and_then(|f| f.to_str()) == Some(name) {
        Some(input.to_path_buf())
    } else {
        None
    }
}

pub fn load_tables(inputs: &[PathBuf]) -> Result<(Vec<WidthTableRow>, Vec<PotentialTableRow>), RunError> {
    if inputs.is_empty() {
        return Err(RunError::Usage("analyze needs at least one entry in `inputs`".into()));
    }
    let mut widths = Vec::new();
    let mut potential = Vec::new();
    for input in inputs {
        if !input.exists() {
            return Err(RunError::Usage(format!("input {} does not exist", input.display())));
        }
        let w = table_paths(input, WIDTHS);
        let p = table_paths(input, POTENTIAL);
        if w.is_none() && p.is_none() {
            return Err(RunError::Usage(format!("no {WIDTHS} or {POTENTIAL} at {}", input.display())));
        }
        if let Some(w) = w {
            widths.extend(read_table::<WidthTableRow>(&w)?);
        }
        if let Some(p) = p {
            potential.extend(read_table::<PotentialTableRow>(&p)?);
        }
    }
    Ok((widths, potential))
}

/// Rows may only be pooled when `(Ω, n_rows, χ)` agree.
fn check_metadata(widths: &[WidthTableRow], potential: &[PotentialTableRow]) -> Result<(), RunError> {
    let keys: Vec<(f64, usize, usize)> = widths
        .iter()
        .map(|r| (r.omega, r.n_rows, r.chi))
        .chain(potential.iter().map(|r| (r.omega, r.n_rows, r.chi)))
        .collect();
    if let Some(first) = keys.first() {
        if let Some(other) = keys.iter().find(|k| *k != first) {
            return Err(RunError::Invariant(format!(
                "tables mix run settings (omega, n_rows, chi) = {first:?} and {other:?}"
            )));
        }
    }
    Ok(())
}

fn sorted_xy(mut pts: Vec<(f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.into_iter().unzip()
}

fn push_estimates(rows: &mut Vec<EstimateRow>, delta: f64, ens: &FitEnsemble) -> Result<(), FitError> {
    for (i, name) in ens.model.param_names().iter().enumerate() {
        let e = ens.estimate(i)?;
        rows.push(estimate_row(delta, &ens.dataset, ens.model, name, e));
    }
    Ok(())
}

fn estimate_row(delta: f64, dataset: &str, model: Model, param: &str, e: FitEstimate) -> EstimateRow {
    EstimateRow {
        delta,
        dataset: dataset.to_string(),
        model,
        param: param.to_string(),
        value: e.value,
        lo: e.lo,
        hi: e.hi,
        n: e.n,
    }
}

fn push_ratios(rows: &mut Vec<RatioRow>, delta: f64, dataset: &str, ratios: Vec<ChiRatio>) {
    rows.extend(ratios.into_iter().map(|r| RatioRow {
        delta,
        dataset: dataset.to_string(),
        window_start: r.window.start,
        window_end: r.window.end,
        ratio: r.ratio,
        flagged: r.flagged,
    }));
}

pub fn histogram(delta: f64, values: &[f64], bins: usize) -> Vec<HistogramRow> {
    if values.is_empty() {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramRow {
            delta,
            lo: lo + i as f64 * width,
            hi: lo + (i + 1) as f64 * width,
            count,
        })
        .collect()
}

fn skip(out: &mut Output, delta: f64, dataset: &str, e: &FitError) -> Result<(), RunError> {
    out.record("fit_skipped", serde_json::json!({ "delta": delta, "dataset": dataset, "reason": e.to_string() }))
}

pub fn run_analyze(cfg: &RunConfig, out: &mut Output) -> Result<Analysis, RunError> {
    cfg.expect(&[Experiment::Analyze])?;
    let (widths, potential) = load_tables(&cfg.inputs)?;
    check_metadata(&widths, &potential)?;
    let n_min = cfg.n_min;

    let mut deltas: Vec<f64> = widths.iter().map(|r| r.delta).chain(potential.iter().map(|r| r.delta)).collect();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();

    let mut analysis = Analysis::default();
    let mut hist_rows = Vec::new();
    for delta in deltas {
        let mut log_by_k = Vec::new();
        for k in 0..3 {
            let pts: Vec<(f64, f64)> = widths
                .iter()
                .filter(|r| r.delta == delta && r.k == k && r.o_broken <= BROKEN_THRESHOLD)
                .map(|r| (r.r, r.w2))
                .collect();
            if pts.is_empty() {
                continue;
            }
            let dataset = format!("width_k{k}");
            let (r, y) = sorted_xy(pts);
            let fits = FitEnsemble::build(&dataset, &r, &y, Model::Log, n_min)
                .and_then(|log| Ok((FitEnsemble::build(&dataset, &r, &y, Model::Linear, n_min)?, log)));
            match fits {
                Ok((lin, log)) => {
                    push_estimates(&mut analysis.estimates, delta, &log).map_err(fit_err)?;
                    push_estimates(&mut analysis.estimates, delta, &lin).map_err(fit_err)?;
                    push_ratios(&mut analysis.ratios, delta, &dataset, width_ratios(&lin, &log).map_err(fit_err)?);
                    log_by_k.push(log);
                }
                Err(e) => skip(out, delta, &dataset, &e)?,
            }
        }
        if !log_by_k.is_empty() {
            let pooled = pooled_estimate(&log_by_k, 0).map_err(fit_err)?;
            analysis.estimates.push(estimate_row(delta, "width_pooled", Model::Log, "A", pooled));
        }

        let pts: Vec<(f64, f64)> = potential
            .iter()
            .filter(|r| r.delta == delta && r.charge_weight <= cfg.charge_weight_max)
            .map(|r| (r.r, r.v))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let (r, y) = sorted_xy(pts);
        let fits = FitEnsemble::build("potential", &r, &y, Model::Potential, n_min)
            .and_then(|p| Ok((FitEnsemble::build("potential", &r, &y, Model::Linear, n_min)?, p)));
        let (lin, pot) = match fits {
            Ok(f) => f,
            Err(e) => {
                skip(out, delta, "potential", &e)?;
                continue;
            }
        };
        push_estimates(&mut analysis.estimates, delta, &pot).map_err(fit_err)?;
        push_estimates(&mut analysis.estimates, delta, &lin).map_err(fit_err)?;
        push_ratios(&mut analysis.ratios, delta, "potential", potential_ratios(&lin, &pot).map_err(fit_err)?);
        if log_by_k.is_empty() {
            continue;
        }
        match gamma0_distribution(&pot, &log_by_k) {
            Ok(g) => {
                analysis
                    .estimates
                    .push(estimate_row(delta, "gamma0", Model::Potential, "gamma0", g.estimate));
                out.record("gamma0", serde_json::json!({ "delta": delta, "estimate": g.estimate, "skipped": g.skipped }))?;
                hist_rows.extend(histogram(delta, &g.values, HISTOGRAM_BINS));
                analysis.gamma0.insert(tag(delta), g.values);
            }
            Err(e) => skip(out, delta, "gamma0", &e)?,
        }
    }
    if analysis.estimates.is_empty() {
        return Err(RunError::Usage(format!(
            "insufficient points: no dataset has the {n_min} points a fit window needs"
        )));
    }
    for e in &analysis.estimates {
        out.record("estimate", e)?;
    }
    out.write_table("estimates.csv", &analysis.estimates)?;
    out.write_table("chi2_ratios.csv", &analysis.ratios)?;
    out.write_table("gamma0_histogram.csv", &hist_rows)?;
    Ok(analysis)
}

fn fit_err(e: FitError) -> RunError {
    RunError::Solver {
        context: "fit".into(),
        message: e.to_string(),
    }
}
