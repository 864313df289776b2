//! One runner per experiment. Each returns the CSV table and a small JSON
//! summary for the manifest.

use std::path::Path;

use arisim_core::config::{Experiment, ExperimentConfig};
use arisim_core::feedback::{export_dataset, sidecar_path};
use arisim_core::metrics::{dbm_to_watt, energy_efficiency_from_rate};
use arisim_core::montecarlo::{run_power_sweep, sweep_elements, EnsembleResult, Proportion};
use arisim_core::optimizer::{optimize_pa, optimize_split, SearchResult};
use serde_json::json;

use crate::output::{manifest_path, RunManifest, Table};
use crate::CliError;

fn f(x: f64) -> String {
    format!("{x}")
}

fn sumrate_vs_elements(cfg: &ExperimentConfig) -> Result<(Table, serde_json::Value), CliError> {
    let points = sweep_elements(&cfg.trial_plan(), &cfg.scenario())?;
    let mut t = Table::new(&["M", "sum_rate_mean", "sum_rate_stderr"]);
    for p in &points {
        t.push(vec![p.elements.to_string(), f(p.sum_rate.mean), f(p.sum_rate.stderr)]);
    }
    let summary = json!({
        "p_tx_dbm": cfg.power.p_tx_dbm,
        "points": points,
    });
    Ok((t, summary))
}

fn rate_vs_power(cfg: &ExperimentConfig) -> Result<(Table, serde_json::Value), CliError> {
    let res = run_power_sweep(&cfg.trial_plan(), &cfg.scenario())?;
    let mut t = Table::new(&[
        "p_tx_dbm",
        "rate_near1_mean",
        "rate_near1_stderr",
        "rate_near2_mean",
        "rate_near2_stderr",
        "rate_far_mean",
        "rate_far_stderr",
        "rate_far_noncomp_mean",
        "rate_far_noncomp_stderr",
        "sum_rate_mean",
        "sum_rate_stderr",
    ]);
    for p in &res.points {
        let r = &p.rates;
        t.push(vec![
            f(p.p_tx_dbm),
            f(r.rate_near[0].mean),
            f(r.rate_near[0].stderr),
            f(r.rate_near[1].mean),
            f(r.rate_near[1].stderr),
            f(r.rate_far.mean),
            f(r.rate_far.stderr),
            f(r.rate_far_noncomp.mean),
            f(r.rate_far_noncomp.stderr),
            f(r.sum_rate.mean),
            f(r.sum_rate.stderr),
        ]);
    }
    let summary = json!({ "rates": res.points.iter().map(|p| &p.rates).collect::<Vec<_>>() });
    Ok((t, summary))
}

fn ris_and_noris(cfg: &ExperimentConfig) -> Result<(EnsembleResult, EnsembleResult), CliError> {
    let plan = cfg.trial_plan();
    let scenario = cfg.scenario();
    let with = run_power_sweep(&plan, &scenario)?;
    let without = run_power_sweep(&plan, &scenario.without_ris())?;
    Ok((with, without))
}

fn outage_vs_power(cfg: &ExperimentConfig) -> Result<(Table, serde_json::Value), CliError> {
    let (with, without) = ris_and_noris(cfg)?;
    let series = ["near1", "near2", "far_comp", "far_noncomp"];
    let mut columns = vec!["p_tx_dbm".to_string()];
    for variant in ["ris", "noris"] {
        for s in series {
            columns.push(format!("{s}_{variant}"));
            columns.push(format!("{s}_{variant}_lo"));
            columns.push(format!("{s}_{variant}_hi"));
        }
    }
    let mut t = Table {
        columns,
        rows: Vec::new(),
    };
    for (a, b) in with.points.iter().zip(&without.points) {
        let mut row = vec![f(a.p_tx_dbm)];
        for point in [a, b] {
            let o = &point.outage;
            let props: [&Proportion; 4] = [&o.near[0], &o.near[1], &o.far_comp, &o.far_noncomp];
            for p in props {
                row.extend([f(p.p), f(p.lo), f(p.hi)]);
            }
        }
        t.push(row);
    }
    let summary = json!({
        "threshold_far": cfg.plan.threshold_far,
        "threshold_near": cfg.plan.threshold_near,
        "ris": with.points.iter().map(|p| &p.outage).collect::<Vec<_>>(),
        "noris": without.points.iter().map(|p| &p.outage).collect::<Vec<_>>(),
    });
    Ok((t, summary))
}

fn se_ee(cfg: &ExperimentConfig) -> Result<(Table, serde_json::Value), CliError> {
    let (with, without) = ris_and_noris(cfg)?;
    let per_user = cfg.metrics.per_user_efficiency;
    let mut columns: Vec<String> = ["p_tx_dbm", "se_ris", "ee_ris", "se_noris", "ee_noris"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if per_user {
        for variant in ["ris", "noris"] {
            for user in ["near1", "near2", "far"] {
                columns.push(format!("se_{user}_{variant}"));
                columns.push(format!("ee_{user}_{variant}"));
            }
        }
    }
    let mut t = Table {
        columns,
        rows: Vec::new(),
    };
    let bw = cfg.link_budget.bandwidth_hz;
    for (a, b) in with.points.iter().zip(&without.points) {
        let mut row = vec![f(a.p_tx_dbm), f(a.se), f(a.ee), f(b.se), f(b.ee)];
        if per_user {
            let p = dbm_to_watt(a.p_tx_dbm);
            for point in [a, b] {
                let r = &point.rates;
                // near users are served by one BS, the far user by both
                let users = [
                    (r.rate_near[0].mean, p),
                    (r.rate_near[1].mean, p),
                    (r.rate_far.mean, 2.0 * p),
                ];
                for (se, power) in users {
                    row.push(f(se));
                    row.push(f(energy_efficiency_from_rate(se, bw, power)?));
                }
            }
        }
        t.push(row);
    }
    let summary = json!({
        "bandwidth_hz": bw,
        "ee_definition": "bandwidth * mean_sum_rate / (2 * p_tx)",
    });
    Ok((t, summary))
}

fn search_table(first: [&str; 2], res: &SearchResult, key: impl Fn(usize) -> [String; 2]) -> Table {
    let mut t = Table::new(&[
        first[0],
        first[1],
        "sum_rate_mean",
        "sum_rate_stderr",
        "rate_far_mean",
        "rate_near1_mean",
        "rate_near2_mean",
        "feasible",
        "best",
    ]);
    for (i, c) in res.trace.iter().enumerate() {
        let [a, b] = key(i);
        t.push(vec![
            a,
            b,
            f(c.sum_rate.mean),
            f(c.sum_rate.stderr),
            f(c.rate_far),
            f(c.rate_near[0]),
            f(c.rate_near[1]),
            c.feasible.to_string(),
            (i == res.best_index).to_string(),
        ]);
    }
    t
}

fn pa_sweep(cfg: &ExperimentConfig) -> Result<(Table, serde_json::Value), CliError> {
    let res = optimize_pa(&cfg.search_space(), &cfg.trial_plan(), &cfg.scenario())?;
    let t = search_table(["gamma_far", "gamma_near"], &res, |i| {
        let g = res.trace[i].gamma_far;
        [f(g), f(1.0 - g)]
    });
    let summary = json!({
        "best_gamma_far": res.best_pa.gamma_far[0],
        "best_gamma_near": res.best_pa.gamma_near[0],
        "objective": res.objective,
        "feasible": res.feasible,
    });
    Ok((t, summary))
}

fn split_search(cfg: &ExperimentConfig) -> Result<(Table, serde_json::Value), CliError> {
    let res = optimize_split(&cfg.search_space(), &cfg.trial_plan(), &cfg.scenario())?;
    let t = search_table(["m1", "m2"], &res, |i| {
        let (a, b) = res.trace[i].split;
        [a.to_string(), b.to_string()]
    });
    let summary = json!({
        "best_split": [res.best_split.0, res.best_split.1],
        "objective": res.objective,
        "feasible": res.feasible,
    });
    Ok((t, summary))
}

/// Runs a table-producing experiment. `export-qps` writes its own dataset
/// and is handled by [`run_and_write`].
pub fn run_experiment(cfg: &ExperimentConfig, experiment: Experiment) -> Result<(Table, serde_json::Value), CliError> {
    match experiment {
        Experiment::SumrateVsElements => sumrate_vs_elements(cfg),
        Experiment::RateVsPower => rate_vs_power(cfg),
        Experiment::OutageVsPower => outage_vs_power(cfg),
        Experiment::SeEe => se_ee(cfg),
        Experiment::PaSweep => pa_sweep(cfg),
        Experiment::SplitSearch => split_search(cfg),
        Experiment::ExportQps => Err(CliError::Config(
            "export-qps writes a dataset, not a table".into(),
        )),
    }
}

fn export_qps(cfg: &ExperimentConfig, out: &Path, trials: Option<usize>) -> Result<(), CliError> {
    let m = cfg.ris.elements;
    if m == 0 {
        return Err(CliError::Config("ris.elements: export-qps needs at least one element".into()));
    }
    let trials = trials.unwrap_or_else(|| cfg.feedback.records_per_user.div_ceil(m));
    let scenario = cfg.scenario();
    let records = export_dataset(&scenario, trials, cfg.plan.seed, out, &cfg.hash())?;
    let mut columns = vec!["user".to_string(), "element".to_string()];
    columns.extend((0..scenario.quant_bits).map(|k| format!("b{k}")));
    let summary = json!({
        "dataset_trials": trials,
        "records": records,
        "sidecar": sidecar_path(out),
    });
    RunManifest::new(cfg, Experiment::ExportQps.name(), columns, records, summary).write(&manifest_path(out))
}

/// Runs `experiment` and writes its CSV (or dataset) and manifest.
pub fn run_and_write(
    cfg: &ExperimentConfig,
    experiment: Experiment,
    out: &Path,
    export_trials: Option<usize>,
) -> Result<(), CliError> {
    if experiment == Experiment::ExportQps {
        return export_qps(cfg, out, export_trials);
    }
    let (table, summary) = run_experiment(cfg, experiment)?;
    table.write_csv(out)?;
    RunManifest::new(cfg, experiment.name(), table.columns.clone(), table.rows.len(), summary)
        .write(&manifest_path(out))
}
