//! Seeded trial ensembles.
//!
//! Trial `i` always draws from ChaCha8 stream `i` of the master seed, so a
//! trial's channels do not depend on which worker runs it. Results are
//! collected in trial order and reduced sequentially, which makes every
//! estimate independent of the thread count.
//!
//! Every estimator for a given plan sees the same channel draws (common
//! random numbers): a scenario with fewer RIS elements consumes a prefix of
//! the draws of one with more, and the direct links are drawn first.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, ChannelRealization, Geometry, PathLossParams, RicianParams};
use crate::error::{Error, Result};
use crate::metrics::{dbm_to_watt, energy_efficiency_from_rate, noise_power_w, LinkBudget};
use crate::noma::{combine_channels, rates, sinr_far, CombinedChannels, FarMode, PowerAllocation, RateReport};
use crate::ris::{balanced_split, configure_for_cluster, split_assignment};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub trials: usize,
    pub master_seed: u64,
    pub power_sweep_dbm: Vec<f64>,
    pub element_counts: Vec<usize>,
    /// Linear SINR threshold for decoding the far user's message.
    pub threshold_far: f64,
    /// Linear SINR threshold for the near users' own messages.
    pub threshold_near: f64,
}

impl Default for TrialPlan {
    fn default() -> Self {
        Self {
            trials: 10_000,
            master_seed: 1,
            power_sweep_dbm: default_power_sweep(),
            element_counts: (0..=70).step_by(10).collect(),
            threshold_far: 1.0,
            threshold_near: 1.0,
        }
    }
}

/// -45 dBm to 0 dBm in 5 dB steps.
pub fn default_power_sweep() -> Vec<f64> {
    (0..10).map(|i| -45.0 + 5.0 * i as f64).collect()
}

impl TrialPlan {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("trial count must be at least 1"));
        }
        if self.power_sweep_dbm.is_empty() {
            return Err(Error::domain("power sweep must not be empty"));
        }
        if self.power_sweep_dbm.iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("power sweep values must be finite"));
        }
        if self.element_counts.is_empty() {
            return Err(Error::domain("element sweep must not be empty"));
        }
        for (name, th) in [("threshold_far", self.threshold_far), ("threshold_near", self.threshold_near)] {
            if th.is_nan() || th < 0.0 {
                return Err(Error::domain(format!("{name} must be non-negative, got {th}")));
            }
        }
        Ok(())
    }
}

/// Everything that defines the simulated network at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub geometry: Geometry,
    pub path_loss: PathLossParams,
    pub rician: RicianParams,
    pub link_budget: LinkBudget,
    pub pa: PowerAllocation,
    pub elements: usize,
    pub split: (usize, usize),
    pub quant_bits: u32,
    /// Cell that serves the far user when CoMP is off.
    pub noncomp_serving: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            geometry: Geometry::default(),
            path_loss: PathLossParams::default(),
            rician: RicianParams::default(),
            link_budget: LinkBudget::default(),
            pa: PowerAllocation::symmetric(0.2, 0.8, 0.0),
            elements: 70,
            split: balanced_split(70),
            quant_bits: 9,
            noncomp_serving: 0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.path_loss.validate()?;
        self.rician.validate()?;
        self.link_budget.validate()?;
        split_assignment(self.elements, self.split)?;
        if self.quant_bits == 0 || self.quant_bits > crate::ris::MAX_QUANT_BITS {
            return Err(Error::domain(format!("invalid quantizer width {}", self.quant_bits)));
        }
        if self.noncomp_serving > 1 {
            return Err(Error::domain("non-CoMP serving cell must be 0 or 1"));
        }
        Ok(())
    }

    /// Same scenario with `m` elements split evenly.
    pub fn with_elements(&self, m: usize) -> Self {
        Self {
            elements: m,
            split: balanced_split(m),
            ..self.clone()
        }
    }

    pub fn without_ris(&self) -> Self {
        self.with_elements(0)
    }

    pub fn noncomp_mode(&self) -> FarMode {
        FarMode::NonComp {
            serving: self.noncomp_serving,
        }
    }

    pub fn channel_model(&self) -> Result<ChannelModel> {
        ChannelModel::new(&self.geometry, &self.path_loss, &self.rician)
    }

    pub fn noise_w(&self) -> Result<f64> {
        noise_power_w(&self.link_budget)
    }

    /// Channels after configuring this scenario's RIS on `real`.
    pub fn combined(&self, real: &ChannelRealization) -> Result<CombinedChannels> {
        let assignment = split_assignment(self.elements, self.split)?;
        let ris = configure_for_cluster(real, &assignment, self.quant_bits)?;
        combine_channels(real, &ris)
    }
}

/// RNG for trial `trial` of the ensemble seeded with `master_seed`.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Runs `f` once per trial on the current rayon pool and returns the
/// outputs in trial order.
pub fn run_trials<T, F>(trials: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| f(i, &mut trial_rng(master_seed, i as u64)))
        .collect()
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MeanEstimate {
    /// Sequential two-pass estimate; `n = 1` gives zero standard error.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                n,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, n }
    }

    pub fn from_iter(samples: impl IntoIterator<Item = f64>) -> Self {
        Self::from_samples(&samples.into_iter().collect::<Vec<_>>())
    }
}

/// Mean and standard error of `a_i - b_i`.
pub fn paired_difference(a: &[f64], b: &[f64]) -> Result<MeanEstimate> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            what: "paired samples",
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(MeanEstimate::from_iter(a.iter().zip(b).map(|(x, y)| x - y)))
}

/// Binomial proportion with its Wilson score 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub events: u64,
    pub trials: u64,
    pub p: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Proportion {
    pub fn new(events: u64, trials: u64) -> Self {
        let (lo, hi) = wilson_interval(events, trials, Z_95);
        let p = if trials == 0 { f64::NAN } else { events as f64 / trials as f64 };
        Self { events, trials, p, lo, hi }
    }

    pub fn from_flags(flags: impl IntoIterator<Item = bool>) -> Self {
        let (mut events, mut trials) = (0u64, 0u64);
        for f in flags {
            trials += 1;
            events += u64::from(f);
        }
        Self::new(events, trials)
    }
}

pub fn wilson_interval(events: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = events as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // clamp guards the p = 0 and p = 1 ends against rounding
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

/// Per-trial quantities at one transmit power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSample {
    /// Rates with the far user under CoMP.
    pub report: RateReport,
    pub sinr_far_noncomp: f64,
}

impl PointSample {
    pub fn rate_far_noncomp(&self) -> f64 {
        crate::noma::rate(self.sinr_far_noncomp)
    }
}

pub fn near_outage(report: &RateReport, c: usize, threshold_far: f64, threshold_near: f64) -> bool {
    !(report.sinr_near_decoding_far[c] >= threshold_far && report.sinr_near[c] >= threshold_near)
}

pub fn far_outage(sinr_far: f64, threshold_far: f64) -> bool {
    sinr_far < threshold_far
}

/// Evaluates `eval` on every (trial, sweep power) pair. Output is indexed
/// `[trial][power]`.
pub fn sample_power_sweep_with<T, F>(plan: &TrialPlan, scenario: &Scenario, eval: F) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(&CombinedChannels, &PowerAllocation, f64) -> Result<T> + Sync,
{
    plan.validate()?;
    scenario.validate()?;
    let model = scenario.channel_model()?;
    let noise = scenario.noise_w()?;
    let pas: Vec<PowerAllocation> = plan
        .power_sweep_dbm
        .iter()
        .map(|&p| scenario.pa.with_power_dbm(p))
        .collect();
    run_trials(plan.trials, plan.master_seed, |_, rng| {
        let real = model.realize(scenario.elements, rng);
        let ch = scenario.combined(&real)?;
        pas.iter().map(|pa| eval(&ch, pa, noise)).collect()
    })
}

pub fn sample_power_sweep(plan: &TrialPlan, scenario: &Scenario) -> Result<Vec<Vec<PointSample>>> {
    let mode = scenario.noncomp_mode();
    sample_power_sweep_with(plan, scenario, |ch, pa, noise| {
        Ok(PointSample {
            report: rates(ch, pa, noise, FarMode::Comp)?,
            sinr_far_noncomp: sinr_far(ch, pa, noise, mode),
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub rate_near: [MeanEstimate; 2],
    pub rate_near_decoding_far: [MeanEstimate; 2],
    pub rate_far: MeanEstimate,
    pub rate_far_noncomp: MeanEstimate,
    pub sum_rate: MeanEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageSummary {
    pub near: [Proportion; 2],
    pub far_comp: Proportion,
    pub far_noncomp: Proportion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p_tx_dbm: f64,
    pub rates: RateSummary,
    pub outage: OutageSummary,
    /// Network spectral efficiency, the mean sum rate (bit/s/Hz).
    pub se: f64,
    /// Network energy efficiency `B * se / (2 P_t)` (bit/J).
    pub ee: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub points: Vec<SweepPoint>,
}

/// Collects column `k` of a `[trial][point]` table.
fn column<T, U>(table: &[Vec<T>], k: usize, f: impl Fn(&T) -> U) -> Vec<U> {
    table.iter().map(|row| f(&row[k])).collect()
}

pub fn summarize_power_sweep(
    plan: &TrialPlan,
    scenario: &Scenario,
    samples: &[Vec<PointSample>],
) -> Result<EnsembleResult> {
    let (tf, tn) = (plan.threshold_far, plan.threshold_near);
    let points = plan
        .power_sweep_dbm
        .iter()
        .enumerate()
        .map(|(k, &p_dbm)| {
            let mean = |f: &dyn Fn(&PointSample) -> f64| MeanEstimate::from_samples(&column(samples, k, f));
            let prop = |f: &dyn Fn(&PointSample) -> bool| Proportion::from_flags(column(samples, k, f));
            let rates = RateSummary {
                rate_near: [mean(&|s| s.report.rate_near[0]), mean(&|s| s.report.rate_near[1])],
                rate_near_decoding_far: [
                    mean(&|s| s.report.rate_near_decoding_far[0]),
                    mean(&|s| s.report.rate_near_decoding_far[1]),
                ],
                rate_far: mean(&|s| s.report.rate_far),
                rate_far_noncomp: mean(&|s| s.rate_far_noncomp()),
                sum_rate: mean(&|s| s.report.sum),
            };
            let outage = OutageSummary {
                near: [
                    prop(&|s| near_outage(&s.report, 0, tf, tn)),
                    prop(&|s| near_outage(&s.report, 1, tf, tn)),
                ],
                far_comp: prop(&|s| far_outage(s.report.sinr_far, tf)),
                far_noncomp: prop(&|s| far_outage(s.sinr_far_noncomp, tf)),
            };
            let se = rates.sum_rate.mean;
            let total_p = 2.0 * dbm_to_watt(p_dbm);
            let ee = energy_efficiency_from_rate(se, scenario.link_budget.bandwidth_hz, total_p)?;
            Ok(SweepPoint {
                p_tx_dbm: p_dbm,
                rates,
                outage,
                se,
                ee,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleResult { points })
}

/// Rates, outage and SE/EE at every sweep power.
pub fn run_power_sweep(plan: &TrialPlan, scenario: &Scenario) -> Result<EnsembleResult> {
    let samples = sample_power_sweep(plan, scenario)?;
    summarize_power_sweep(plan, scenario, &samples)
}

/// Outage probability of the near user of cell `c` at each sweep power.
pub fn estimate_outage_near(plan: &TrialPlan, scenario: &Scenario, c: usize) -> Result<Vec<Proportion>> {
    if c > 1 {
        return Err(Error::domain(format!("cell index {c} out of range")));
    }
    let (tf, tn) = (plan.threshold_far, plan.threshold_near);
    let flags = sample_power_sweep_with(plan, scenario, |ch, pa, noise| {
        Ok(near_outage(&rates(ch, pa, noise, FarMode::Comp)?, c, tf, tn))
    })?;
    Ok((0..plan.power_sweep_dbm.len())
        .map(|k| Proportion::from_flags(column(&flags, k, |f| *f)))
        .collect())
}

/// Far-user outage probability at each sweep power.
pub fn estimate_outage_far(plan: &TrialPlan, scenario: &Scenario, mode: FarMode) -> Result<Vec<Proportion>> {
    let tf = plan.threshold_far;
    let flags = sample_power_sweep_with(plan, scenario, |ch, pa, noise| {
        Ok(far_outage(sinr_far(ch, pa, noise, mode), tf))
    })?;
    Ok((0..plan.power_sweep_dbm.len())
        .map(|k| Proportion::from_flags(column(&flags, k, |f| *f)))
        .collect())
}

pub fn estimate_rates(plan: &TrialPlan, scenario: &Scenario) -> Result<Vec<RateSummary>> {
    Ok(run_power_sweep(plan, scenario)?
        .points
        .into_iter()
        .map(|p| p.rates)
        .collect())
}

/// Per-trial sum rate for every entry of `plan.element_counts`, at the
/// scenario's operating power, with each count split evenly. Output is
/// indexed `[trial][count]`.
pub fn sample_element_sweep(plan: &TrialPlan, scenario: &Scenario) -> Result<Vec<Vec<f64>>> {
    plan.validate()?;
    scenario.validate()?;
    if plan.element_counts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("element counts must be sorted ascending"));
    }
    let max_m = *plan.element_counts.last().expect("validated non-empty");
    let model = scenario.channel_model()?;
    let noise = scenario.noise_w()?;
    let variants: Vec<Scenario> = plan
        .element_counts
        .iter()
        .map(|&m| scenario.with_elements(m))
        .collect();
    run_trials(plan.trials, plan.master_seed, |_, rng| {
        let full = model.realize(max_m, rng);
        variants
            .iter()
            .map(|v| {
                let ch = v.combined(&full.truncated(v.elements)?)?;
                Ok(rates(&ch, &v.pa, noise, FarMode::Comp)?.sum)
            })
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementPoint {
    pub elements: usize,
    pub sum_rate: MeanEstimate,
}

/// Mean network sum rate against the number of RIS elements.
pub fn sweep_elements(plan: &TrialPlan, scenario: &Scenario) -> Result<Vec<ElementPoint>> {
    let samples = sample_element_sweep(plan, scenario)?;
    Ok(plan
        .element_counts
        .iter()
        .enumerate()
        .map(|(k, &m)| ElementPoint {
            elements: m,
            sum_rate: MeanEstimate::from_samples(&column(&samples, k, |x| *x)),
        })
        .collect())
}
