//! Reference implementations shared by the integration tests. The oracle
//! SINRs are built from explicit per-transmitter symbol streams and never
//! touch the closed-form code; the helpers at the end compare the two.
#![allow(dead_code)]

use std::f64::consts::TAU;

use arisim_core::channel::{ChannelRealization, ComplexGain};
use arisim_core::montecarlo::{estimate_outage_far, estimate_outage_near, trial_rng, Scenario, TrialPlan};
use arisim_core::noma::{combine_channels, rates, FarMode, PowerAllocation};
use arisim_core::ris::{configure_for_cluster, split_assignment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Symbols on the air in the two-cell cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    Near(usize),
    Far,
    /// A non-CoMP BS's second stream, unrelated to the far user.
    Private(usize),
}

/// One superposition-coded stream leaving a BS.
#[derive(Debug, Clone, Copy)]
pub struct Stream {
    pub bs: usize,
    pub symbol: Symbol,
    /// Amplitude coefficient, `sqrt(gamma P)`.
    pub amplitude: f64,
}

pub struct Transmit {
    pub gamma_near: [f64; 2],
    pub gamma_far: [f64; 2],
    pub p_tx_w: [f64; 2],
}

/// Streams for CoMP (`serving = None`) or single-cell service of the far
/// user from `serving`.
pub fn streams(tx: &Transmit, serving: Option<usize>) -> Vec<Stream> {
    let mut out = Vec::new();
    for bs in 0..2 {
        let p = tx.p_tx_w[bs];
        out.push(Stream {
            bs,
            symbol: Symbol::Near(bs),
            amplitude: (tx.gamma_near[bs] * p).sqrt(),
        });
        let second = match serving {
            None => Symbol::Far,
            Some(s) if s == bs => Symbol::Far,
            Some(_) => Symbol::Private(bs),
        };
        out.push(Stream {
            bs,
            symbol: second,
            amplitude: (tx.gamma_far[bs] * p).sqrt(),
        });
    }
    out
}

/// SINR of each symbol in `order`, decoded successively.
///
/// `gains[b]` is the channel from BS `b` to this receiver. Streams from BSs
/// outside `trusted` have unknown channels at this receiver: they never count
/// as signal and are never cancelled. Copies of one symbol from several
/// trusted BSs add in power (non-coherent combining).
pub fn sic_sinrs(
    all: &[Stream],
    gains: [ComplexGain; 2],
    trusted: &[usize],
    order: &[Symbol],
    noise_w: f64,
) -> Vec<f64> {
    let rx: Vec<(Stream, f64)> = all
        .iter()
        .map(|s| (*s, (gains[s.bs] * s.amplitude).norm_sqr()))
        .collect();
    let mut cancelled: Vec<Symbol> = Vec::new();
    let mut out = Vec::new();
    for &target in order {
        let mut signal = 0.0;
        let mut interference = 0.0;
        for (s, p) in &rx {
            let known = trusted.contains(&s.bs);
            if known && s.symbol == target {
                signal += p;
            } else if !(known && cancelled.contains(&s.symbol)) {
                interference += p;
            }
        }
        out.push(signal / (interference + noise_w));
        cancelled.push(target);
    }
    out
}

/// Effective channels recomputed from scratch.
pub struct OracleChannels {
    pub near: [ComplexGain; 2],
    pub far: [ComplexGain; 2],
    /// BS c to the other cell's near user.
    pub ici: [ComplexGain; 2],
}

fn angle(z: ComplexGain) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        0.0
    } else {
        z.im.atan2(z.re)
    }
}

/// Nearest point of the `2^bits` grid, as an angle in [0, 2pi).
pub fn grid_phase(theta: f64, bits: u32) -> f64 {
    let levels = (1u64 << bits) as f64;
    let step = TAU / levels;
    let mut k = (theta / step).round() % levels;
    if k < 0.0 {
        k += levels;
    }
    k * step
}

/// Elements `0..m1` reflect for BS 1 and the next `m2` for BS 2, each phase
/// aligned with the far user's direct link from that BS and rounded to the
/// grid.
pub fn oracle_channels(real: &ChannelRealization, split: (usize, usize), bits: u32) -> OracleChannels {
    let mut near = real.direct_near;
    let mut far = real.direct_far;
    for e in 0..real.ris_to_far.len() {
        let c = if e < split.0 {
            0
        } else if e < split.0 + split.1 {
            1
        } else {
            continue;
        };
        let g = real.bs_to_ris[c][e];
        let theta = angle(real.direct_far[c]) - angle(g) - angle(real.ris_to_far[e]);
        let q = grid_phase(theta, bits);
        let shift = ComplexGain::new(q.cos(), q.sin());
        near[c] += g * shift * real.ris_to_near[c][e];
        far[c] += g * shift * real.ris_to_far[e];
    }
    OracleChannels {
        near,
        far,
        ici: real.interference,
    }
}

/// `[near decoding far, near own]` at the near user of cell `c`.
pub fn near_user(ch: &OracleChannels, tx: &Transmit, noise_w: f64, c: usize, serving: Option<usize>) -> [f64; 2] {
    let o = 1 - c;
    let mut gains = [ComplexGain::new(0.0, 0.0); 2];
    gains[c] = ch.near[c];
    gains[o] = ch.ici[o];
    let s = streams(tx, serving);
    // the near user peels off whatever its own BS sent in the far slot
    let first = match serving {
        Some(sv) if sv != c => Symbol::Private(c),
        _ => Symbol::Far,
    };
    let v = sic_sinrs(&s, gains, &[c], &[first, Symbol::Near(c)], noise_w);
    [v[0], v[1]]
}

pub fn far_user(ch: &OracleChannels, tx: &Transmit, noise_w: f64, serving: Option<usize>) -> f64 {
    let trusted: Vec<usize> = match serving {
        None => vec![0, 1],
        Some(s) => vec![s],
    };
    sic_sinrs(&streams(tx, serving), ch.far, &trusted, &[Symbol::Far], noise_w)[0]
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo..hi))
}

fn gain<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> ComplexGain {
    ComplexGain::from_polar(log_uniform(rng, lo, hi), rng.random_range(0.0..TAU))
}

/// Link gains spread over several decades so that no term of the SINRs
/// dominates every instance.
pub fn random_realization<R: Rng>(rng: &mut R, m: usize) -> ChannelRealization {
    let mut g = |lo, hi| gain(rng, lo, hi);
    let direct_near = [g(-4.0, -1.0), g(-4.0, -1.0)];
    let direct_far = [g(-5.0, -2.0), g(-5.0, -2.0)];
    let interference = [g(-5.0, -2.0), g(-5.0, -2.0)];
    let mut per = |lo, hi| (0..m).map(|_| gain(rng, lo, hi)).collect::<Vec<_>>();
    ChannelRealization {
        direct_near,
        direct_far,
        interference,
        bs_to_ris: [per(-3.0, -1.0), per(-3.0, -1.0)],
        ris_to_near: [per(-3.0, -1.0), per(-3.0, -1.0)],
        ris_to_far: per(-3.0, -1.0),
    }
}

/// Compares every closed-form SINR with the oracle on `instances` random
/// draws (random sizes, splits, widths, power allocations and noise).
/// Returns the worst relative error.
pub fn compare_with_oracle(instances: usize, seed: u64, tol: f64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let m = rng.random_range(0..=16);
        let m1 = rng.random_range(0..=m);
        let m2 = rng.random_range(0..=m - m1);
        let bits = rng.random_range(1..=9);
        let real = random_realization(&mut rng, m);
        let gf = [rng.random_range(0.5..0.99), rng.random_range(0.5..0.99)];
        let tx = Transmit {
            gamma_near: [1.0 - gf[0], 1.0 - gf[1]],
            gamma_far: gf,
            p_tx_w: [log_uniform(&mut rng, -5.0, 0.0), log_uniform(&mut rng, -5.0, 0.0)],
        };
        let noise = log_uniform(&mut rng, -12.0, -7.0);
        let serving = rng.random_range(0..2);

        let pa = PowerAllocation {
            gamma_near: tx.gamma_near,
            gamma_far: tx.gamma_far,
            p_tx_w: tx.p_tx_w,
        };
        let lib = || -> arisim_core::Result<_> {
            let assignment = split_assignment(m, (m1, m2))?;
            let ch = combine_channels(&real, &configure_for_cluster(&real, &assignment, bits)?)?;
            Ok((
                rates(&ch, &pa, noise, FarMode::Comp)?,
                rates(&ch, &pa, noise, FarMode::NonComp { serving })?,
            ))
        };
        let (comp, single) = lib().map_err(|e| format!("instance {i}: {e}"))?;

        let oc = oracle_channels(&real, (m1, m2), bits);
        let mut pairs = Vec::new();
        for c in 0..2 {
            let [nf, n] = near_user(&oc, &tx, noise, c, None);
            pairs.push(("near decoding far", comp.sinr_near_decoding_far[c], nf));
            pairs.push(("near own", comp.sinr_near[c], n));
            pairs.push(("near own, single-cell far", single.sinr_near[c], n));
        }
        pairs.push(("far CoMP", comp.sinr_far, far_user(&oc, &tx, noise, None)));
        pairs.push(("far single-cell", single.sinr_far, far_user(&oc, &tx, noise, Some(serving))));
        for (what, a, b) in pairs {
            let e = rel_err(a, b);
            worst = worst.max(e);
            if !(e <= tol) {
                return Err(format!("instance {i}, {what}: closed form {a} vs oracle {b}"));
            }
        }
    }
    Ok(worst)
}

/// Outage event counts per sweep point from a plain sequential loop over
/// trials using the oracle SINRs: `(near [c], far CoMP, far single-cell)`.
pub fn recount_outages(plan: &TrialPlan, scenario: &Scenario) -> (Vec<[u64; 2]>, Vec<u64>, Vec<u64>) {
    let model = scenario.channel_model().unwrap();
    let noise = scenario.noise_w().unwrap();
    let n = plan.power_sweep_dbm.len();
    let mut near = vec![[0u64; 2]; n];
    let mut far_comp = vec![0u64; n];
    let mut far_single = vec![0u64; n];
    for t in 0..plan.trials {
        let real = model.realize(scenario.elements, &mut trial_rng(plan.master_seed, t as u64));
        let oc = oracle_channels(&real, scenario.split, scenario.quant_bits);
        for (k, &p_dbm) in plan.power_sweep_dbm.iter().enumerate() {
            let p = 10f64.powf((p_dbm - 30.0) / 10.0);
            let tx = Transmit {
                gamma_near: scenario.pa.gamma_near,
                gamma_far: scenario.pa.gamma_far,
                p_tx_w: [p, p],
            };
            for c in 0..2 {
                let [nf, own] = near_user(&oc, &tx, noise, c, None);
                if nf < plan.threshold_far || own < plan.threshold_near {
                    near[k][c] += 1;
                }
            }
            if far_user(&oc, &tx, noise, None) < plan.threshold_far {
                far_comp[k] += 1;
            }
            if far_user(&oc, &tx, noise, Some(scenario.noncomp_serving)) < plan.threshold_far {
                far_single[k] += 1;
            }
        }
    }
    (near, far_comp, far_single)
}

/// Checks the library's outage counts against [`recount_outages`]. Returns
/// how many (series, point) counts were strictly between 0 and the trial
/// count.
pub fn check_outage_recount(plan: &TrialPlan, scenario: &Scenario) -> Result<u64, String> {
    let (near, comp, single) = recount_outages(plan, scenario);
    let err = |e: arisim_core::Error| e.to_string();
    let lib_near = [
        estimate_outage_near(plan, scenario, 0).map_err(err)?,
        estimate_outage_near(plan, scenario, 1).map_err(err)?,
    ];
    let lib_comp = estimate_outage_far(plan, scenario, FarMode::Comp).map_err(err)?;
    let lib_single = estimate_outage_far(plan, scenario, scenario.noncomp_mode()).map_err(err)?;
    let n = plan.trials as u64;
    let mut informative = 0;
    for k in 0..plan.power_sweep_dbm.len() {
        let pairs = [
            ("near 1", lib_near[0][k].events, near[k][0]),
            ("near 2", lib_near[1][k].events, near[k][1]),
            ("far CoMP", lib_comp[k].events, comp[k]),
            ("far single-cell", lib_single[k].events, single[k]),
        ];
        for (what, lib, re) in pairs {
            if lib != re {
                return Err(format!("{what} at {} dBm: {lib} events vs recount {re}", plan.power_sweep_dbm[k]));
            }
            if re != 0 && re != n {
                informative += 1;
            }
        }
    }
    Ok(informative)
}
