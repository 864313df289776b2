//! Exhaustive searches over NOMA power-allocation factors and over the
//! split of RIS elements between the two base stations.
//!
//! Every candidate is scored on the same trial set (common random numbers),
//! so the comparison between candidates is paired and the stored objective
//! of the winner is bit-identical to its entry in the trace.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::{run_trials, MeanEstimate, Scenario, TrialPlan};
use crate::noma::{combine_channels, rates, FarMode, PowerAllocation, RateReport};
use crate::ris::{configure_for_cluster, split_assignment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    /// Far-user coefficients to try; the near user gets `1 - gamma_far`.
    pub gamma_far_grid: Vec<f64>,
    /// `(M_A^1, M_A^2)` element splits to try.
    pub split_candidates: Vec<(usize, usize)>,
    pub min_rate_far: f64,
    pub min_rate_near: f64,
}

impl SearchSpace {
    pub fn new(elements: usize) -> Self {
        Self {
            gamma_far_grid: default_gamma_far_grid(),
            split_candidates: all_full_splits(elements),
            min_rate_far: 0.0,
            min_rate_near: 0.0,
        }
    }
}

/// 0.51, 0.56, ..., 0.91 plus the 0.8 operating point, ascending.
pub fn default_gamma_far_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..)
        .map(|k| (51 + 5 * k) as f64 / 100.0)
        .take_while(|g| *g <= 0.95)
        .collect();
    grid.push(0.8);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Every split that uses all `m` elements: `(0, m), (1, m - 1), ..., (m, 0)`.
pub fn all_full_splits(m: usize) -> Vec<(usize, usize)> {
    (0..=m).map(|a| (a, m - a)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEval {
    pub gamma_far: f64,
    pub split: (usize, usize),
    pub sum_rate: MeanEstimate,
    pub rate_far: f64,
    pub rate_near: [f64; 2],
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_pa: PowerAllocation,
    pub best_split: (usize, usize),
    /// Mean sum rate of the winner.
    pub objective: f64,
    pub feasible: bool,
    pub trace: Vec<CandidateEval>,
    /// Index of the winner in `trace`.
    pub best_index: usize,
}

#[derive(Debug, Clone, Copy)]
struct TrialRates {
    sum: f64,
    far: f64,
    near: [f64; 2],
}

impl From<RateReport> for TrialRates {
    fn from(r: RateReport) -> Self {
        Self {
            sum: r.sum,
            far: r.rate_far,
            near: r.rate_near,
        }
    }
}

fn evaluate(
    per_trial: &[Vec<TrialRates>],
    k: usize,
    gamma_far: f64,
    split: (usize, usize),
    space: &SearchSpace,
) -> CandidateEval {
    let col = |f: fn(&TrialRates) -> f64| MeanEstimate::from_iter(per_trial.iter().map(|row| f(&row[k])));
    let sum_rate = col(|t| t.sum);
    let rate_far = col(|t| t.far).mean;
    let rate_near = [col(|t| t.near[0]).mean, col(|t| t.near[1]).mean];
    let feasible = rate_far >= space.min_rate_far && rate_near.iter().all(|r| *r >= space.min_rate_near);
    CandidateEval {
        gamma_far,
        split,
        sum_rate,
        rate_far,
        rate_near,
        feasible,
    }
}

/// Picks the best feasible candidate, or the best overall when none is
/// feasible. `prefer(a, b)` says whether `a` should win a tie against `b`.
fn select(trace: &[CandidateEval], prefer: impl Fn(&CandidateEval, &CandidateEval) -> bool) -> (usize, bool) {
    let any_feasible = trace.iter().any(|c| c.feasible);
    let mut best: Option<usize> = None;
    for (i, cand) in trace.iter().enumerate() {
        if any_feasible && !cand.feasible {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let (x, y) = (cand.sum_rate.mean, trace[b].sum_rate.mean);
                if x > y || (x == y && prefer(cand, &trace[b])) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    (best.expect("non-empty trace"), any_feasible)
}

fn check_rate_floors(space: &SearchSpace) -> Result<()> {
    for (name, v) in [("min_rate_far", space.min_rate_far), ("min_rate_near", space.min_rate_near)] {
        if v.is_nan() || v < 0.0 {
            return Err(Error::domain(format!("{name} must be non-negative, got {v}")));
        }
    }
    Ok(())
}

/// Grid search over `gamma_far` (same in both cells) at the scenario's
/// transmit power and element split. Ties go to the larger `gamma_far`.
pub fn optimize_pa(space: &SearchSpace, plan: &TrialPlan, scenario: &Scenario) -> Result<SearchResult> {
    if space.gamma_far_grid.is_empty() {
        return Err(Error::domain("power-allocation grid must not be empty"));
    }
    if let Some(g) = space.gamma_far_grid.iter().find(|g| !(**g > 0.5 && **g < 1.0)) {
        return Err(Error::domain(format!("gamma_far candidate {g} outside (0.5, 1)")));
    }
    check_rate_floors(space)?;
    plan.validate()?;
    scenario.validate()?;
    let model = scenario.channel_model()?;
    let noise = scenario.noise_w()?;
    let pas: Vec<PowerAllocation> = space
        .gamma_far_grid
        .iter()
        .map(|&g| PowerAllocation {
            gamma_near: [1.0 - g; 2],
            gamma_far: [g; 2],
            p_tx_w: scenario.pa.p_tx_w,
        })
        .collect();
    let per_trial = run_trials(plan.trials, plan.master_seed, |_, rng| {
        let ch = scenario.combined(&model.realize(scenario.elements, rng))?;
        pas.iter()
            .map(|pa| rates(&ch, pa, noise, FarMode::Comp).map(TrialRates::from))
            .collect()
    })?;
    let trace: Vec<CandidateEval> = space
        .gamma_far_grid
        .iter()
        .enumerate()
        .map(|(k, &g)| evaluate(&per_trial, k, g, scenario.split, space))
        .collect();
    let (best, feasible) = select(&trace, |a, b| a.gamma_far > b.gamma_far);
    Ok(SearchResult {
        best_pa: pas[best],
        best_split: scenario.split,
        objective: trace[best].sum_rate.mean,
        feasible,
        trace,
        best_index: best,
    })
}

/// Exhaustive search over element splits at the scenario's power
/// allocation. Ties go to the more balanced split, then to fewer elements
/// on cell 1.
pub fn optimize_split(space: &SearchSpace, plan: &TrialPlan, scenario: &Scenario) -> Result<SearchResult> {
    if space.split_candidates.is_empty() {
        return Err(Error::domain("split candidate list must not be empty"));
    }
    check_rate_floors(space)?;
    plan.validate()?;
    scenario.validate()?;
    let m = scenario.elements;
    let assignments = space
        .split_candidates
        .iter()
        .map(|&s| split_assignment(m, s))
        .collect::<Result<Vec<_>>>()?;
    let model = scenario.channel_model()?;
    let noise = scenario.noise_w()?;
    let per_trial = run_trials(plan.trials, plan.master_seed, |_, rng| {
        let real = model.realize(m, rng);
        assignments
            .iter()
            .map(|a| {
                let ris = configure_for_cluster(&real, a, scenario.quant_bits)?;
                let ch = combine_channels(&real, &ris)?;
                rates(&ch, &scenario.pa, noise, FarMode::Comp).map(TrialRates::from)
            })
            .collect()
    })?;
    let gamma = scenario.pa.gamma_far[0];
    let trace: Vec<CandidateEval> = space
        .split_candidates
        .iter()
        .enumerate()
        .map(|(k, &s)| evaluate(&per_trial, k, gamma, s, space))
        .collect();
    let imbalance = |c: &CandidateEval| c.split.0.abs_diff(c.split.1);
    let (best, feasible) = select(&trace, |a, b| {
        imbalance(a) < imbalance(b) || (imbalance(a) == imbalance(b) && a.split.0 < b.split.0)
    });
    Ok(SearchResult {
        best_pa: scenario.pa,
        best_split: trace[best].split,
        objective: trace[best].sum_rate.mean,
        feasible,
        trace,
        best_index: best,
    })
}
