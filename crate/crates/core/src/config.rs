//! Experiment configuration: one nested document (TOML or JSON) whose
//! sections mirror the simulator's types. Unknown keys are rejected and
//! every field is validated on load with its dotted path in the error.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{Geometry, PathLossParams, RicianParams};
use crate::error::{Error, Result};
use crate::feedback::FeedbackChannelParams;
use crate::metrics::LinkBudget;
use crate::montecarlo::{default_power_sweep, Scenario, TrialPlan};
use crate::noma::PowerAllocation;
use crate::optimizer::{all_full_splits, default_gamma_far_grid, SearchSpace};
use crate::ris::{balanced_split, MAX_QUANT_BITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SumrateVsElements,
    RateVsPower,
    OutageVsPower,
    SeEe,
    PaSweep,
    SplitSearch,
    ExportQps,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::SumrateVsElements,
        Experiment::RateVsPower,
        Experiment::OutageVsPower,
        Experiment::SeEe,
        Experiment::PaSweep,
        Experiment::SplitSearch,
        Experiment::ExportQps,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::SumrateVsElements => "sumrate-vs-elements",
            Experiment::RateVsPower => "rate-vs-power",
            Experiment::OutageVsPower => "outage-vs-power",
            Experiment::SeEe => "se-ee",
            Experiment::PaSweep => "pa-sweep",
            Experiment::SplitSearch => "split-search",
            Experiment::ExportQps => "export-qps",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RisSection {
    pub elements: usize,
    /// `[M_A^1, M_A^2]`; balanced when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<[usize; 2]>,
    pub quant_bits: u32,
    /// Separate near/far reflection profiles. Only `false` is supported.
    pub distinct_profiles: bool,
}

impl Default for RisSection {
    fn default() -> Self {
        Self {
            elements: 70,
            split: None,
            quant_bits: 9,
            distinct_profiles: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerSection {
    pub gamma_near: [f64; 2],
    pub gamma_far: [f64; 2],
    /// Operating point for experiments that do not sweep power.
    pub p_tx_dbm: [f64; 2],
    /// 1-based cell serving the far user when CoMP is off.
    pub noncomp_serving_cell: usize,
}

impl Default for PowerSection {
    fn default() -> Self {
        Self {
            gamma_near: [0.2; 2],
            gamma_far: [0.8; 2],
            p_tx_dbm: [0.0; 2],
            noncomp_serving_cell: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanSection {
    pub trials: usize,
    pub seed: u64,
    pub power_sweep_dbm: Vec<f64>,
    pub element_counts: Vec<usize>,
    pub threshold_far: f64,
    pub threshold_near: f64,
}

impl Default for PlanSection {
    fn default() -> Self {
        let p = TrialPlan::default();
        Self {
            trials: p.trials,
            seed: p.master_seed,
            power_sweep_dbm: default_power_sweep(),
            element_counts: p.element_counts,
            threshold_far: p.threshold_far,
            threshold_near: p.threshold_near,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub gamma_far_grid: Vec<f64>,
    /// All full-usage splits when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split_candidates: Option<Vec<[usize; 2]>>,
    pub min_rate_far: f64,
    pub min_rate_near: f64,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            gamma_far_grid: default_gamma_far_grid(),
            split_candidates: None,
            min_rate_far: 0.0,
            min_rate_near: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    /// Also emit per-user SE/EE columns.
    pub per_user_efficiency: bool,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeedbackSection {
    pub records_per_user: usize,
    pub k_factor: f64,
    pub snr_db: f64,
    pub block_fading: bool,
}

impl Default for FeedbackSection {
    fn default() -> Self {
        let ch = FeedbackChannelParams::default();
        Self {
            records_per_user: 100_000,
            k_factor: ch.k_factor,
            snr_db: ch.snr_db,
            block_fading: ch.block_fading,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub geometry: Geometry,
    pub path_loss: PathLossParams,
    pub rician: RicianParams,
    pub ris: RisSection,
    pub power: PowerSection,
    pub plan: PlanSection,
    pub search: SearchSection,
    pub link_budget: LinkBudget,
    pub metrics: MetricsSection,
    pub feedback: FeedbackSection,
}

fn field_err(field: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Domain(msg) => Error::config(field, msg),
        other => other,
    }
}

fn check(cond: bool, field: &str, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::config(field, msg))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::config(parse_error_field(e.message()), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Accepts either a bare config object or a run manifest carrying one
    /// under `config`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::config("<document>", e.to_string()))?;
        let inner = match value.get("manifest_version") {
            Some(_) => value
                .get("config")
                .cloned()
                .ok_or_else(|| Error::config("config", "manifest has no `config` object"))?,
            None => value,
        };
        let cfg: Self = serde_json::from_value(inner).map_err(|e| Error::config("<document>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads by extension: `.json` as JSON (config or manifest), anything
    /// else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// SHA-256 over the canonical JSON form, ignoring the output path.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes to JSON");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate().map_err(field_err("geometry"))?;
        self.path_loss.validate().map_err(field_err("path_loss"))?;
        self.rician.validate().map_err(field_err("rician"))?;
        self.link_budget.validate().map_err(field_err("link_budget"))?;

        let ris = &self.ris;
        check(
            (1..=MAX_QUANT_BITS).contains(&ris.quant_bits),
            "ris.quant_bits",
            format!("must be in 1..={MAX_QUANT_BITS}"),
        )?;
        check(
            !ris.distinct_profiles,
            "ris.distinct_profiles",
            "only a single reflection profile per element is supported",
        )?;
        if let Some([a, b]) = ris.split {
            check(a + b <= ris.elements, "ris.split", format!("{a} + {b} exceeds {} elements", ris.elements))?;
        }

        self.power_allocation().validate().map_err(field_err("power"))?;
        check(
            self.power.p_tx_dbm.iter().all(|p| p.is_finite()),
            "power.p_tx_dbm",
            "must be finite",
        )?;
        check(
            matches!(self.power.noncomp_serving_cell, 1 | 2),
            "power.noncomp_serving_cell",
            "must be 1 or 2",
        )?;

        let plan = &self.plan;
        check(plan.trials >= 1, "plan.trials", "must be at least 1")?;
        check(!plan.power_sweep_dbm.is_empty(), "plan.power_sweep_dbm", "must not be empty")?;
        check(
            plan.power_sweep_dbm.iter().all(|p| p.is_finite()),
            "plan.power_sweep_dbm",
            "values must be finite",
        )?;
        check(!plan.element_counts.is_empty(), "plan.element_counts", "must not be empty")?;
        check(
            plan.element_counts.windows(2).all(|w| w[0] <= w[1]),
            "plan.element_counts",
            "must be sorted ascending",
        )?;
        check(plan.threshold_far >= 0.0, "plan.threshold_far", "must be non-negative")?;
        check(plan.threshold_near >= 0.0, "plan.threshold_near", "must be non-negative")?;

        let s = &self.search;
        check(!s.gamma_far_grid.is_empty(), "search.gamma_far_grid", "must not be empty")?;
        check(
            s.gamma_far_grid.iter().all(|g| *g > 0.5 && *g < 1.0),
            "search.gamma_far_grid",
            "values must lie in (0.5, 1)",
        )?;
        if let Some(cands) = &s.split_candidates {
            check(!cands.is_empty(), "search.split_candidates", "must not be empty")?;
            for [a, b] in cands {
                check(
                    a + b <= ris.elements,
                    "search.split_candidates",
                    format!("[{a}, {b}] exceeds {} elements", ris.elements),
                )?;
            }
        }
        check(s.min_rate_far >= 0.0, "search.min_rate_far", "must be non-negative")?;
        check(s.min_rate_near >= 0.0, "search.min_rate_near", "must be non-negative")?;

        self.feedback_channel().validate().map_err(field_err("feedback"))?;
        check(self.feedback.snr_db.is_finite(), "feedback.snr_db", "must be finite")?;
        Ok(())
    }

    pub fn power_allocation(&self) -> PowerAllocation {
        PowerAllocation {
            gamma_near: self.power.gamma_near,
            gamma_far: self.power.gamma_far,
            p_tx_w: self.power.p_tx_dbm.map(crate::metrics::dbm_to_watt),
        }
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            geometry: self.geometry.clone(),
            path_loss: self.path_loss,
            rician: self.rician,
            link_budget: self.link_budget,
            pa: self.power_allocation(),
            elements: self.ris.elements,
            split: self
                .ris
                .split
                .map(|[a, b]| (a, b))
                .unwrap_or_else(|| balanced_split(self.ris.elements)),
            quant_bits: self.ris.quant_bits,
            noncomp_serving: self.power.noncomp_serving_cell.saturating_sub(1),
        }
    }

    pub fn trial_plan(&self) -> TrialPlan {
        TrialPlan {
            trials: self.plan.trials,
            master_seed: self.plan.seed,
            power_sweep_dbm: self.plan.power_sweep_dbm.clone(),
            element_counts: self.plan.element_counts.clone(),
            threshold_far: self.plan.threshold_far,
            threshold_near: self.plan.threshold_near,
        }
    }

    pub fn search_space(&self) -> SearchSpace {
        SearchSpace {
            gamma_far_grid: self.search.gamma_far_grid.clone(),
            split_candidates: match &self.search.split_candidates {
                Some(c) => c.iter().map(|[a, b]| (*a, *b)).collect(),
                None => all_full_splits(self.ris.elements),
            },
            min_rate_far: self.search.min_rate_far,
            min_rate_near: self.search.min_rate_near,
        }
    }

    pub fn feedback_channel(&self) -> FeedbackChannelParams {
        FeedbackChannelParams {
            snr_db: self.feedback.snr_db,
            k_factor: self.feedback.k_factor,
            block_fading: self.feedback.block_fading,
        }
    }
}

/// Best-effort field name for a TOML parse error ("unknown field `x`" and
/// friends carry it in backticks).
fn parse_error_field(message: &str) -> String {
    message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "<document>".to_string())
}
