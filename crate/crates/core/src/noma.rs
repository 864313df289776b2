//! Combined channels, SINRs and achievable rates for the coordinated NOMA
//! cluster: one near user per cell plus a far user shared by both cells.
//!
//! Near users run SIC: they first decode the far user's message treating
//! their own as noise, then decode their own message. The far user is served
//! by non-coherent joint transmission, so the two BS contributions add in
//! power.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, ComplexGain};
use crate::error::{Error, Result};
use crate::metrics::dbm_to_watt;
use crate::ris::RisConfig;

/// NOMA power split and transmit power for both base stations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub gamma_near: [f64; 2],
    pub gamma_far: [f64; 2],
    pub p_tx_w: [f64; 2],
}

impl PowerAllocation {
    /// Same coefficients and power for both cells.
    pub fn symmetric(gamma_near: f64, gamma_far: f64, p_tx_dbm: f64) -> Self {
        Self {
            gamma_near: [gamma_near; 2],
            gamma_far: [gamma_far; 2],
            p_tx_w: [dbm_to_watt(p_tx_dbm); 2],
        }
    }

    pub fn with_power_dbm(mut self, p_tx_dbm: f64) -> Self {
        self.p_tx_w = [dbm_to_watt(p_tx_dbm); 2];
        self
    }

    /// NOMA ordering constraints: `gamma_n < 0.5 < gamma_f < 1` and
    /// `gamma_n + gamma_f <= 1` in each cell.
    pub fn validate(&self) -> Result<()> {
        for c in 0..2 {
            let (n, f) = (self.gamma_near[c], self.gamma_far[c]);
            if !(n >= 0.0 && n < 0.5) {
                return Err(Error::domain(format!(
                    "cell {}: near-user coefficient must lie in [0, 0.5), got {n}",
                    c + 1
                )));
            }
            if !(f > 0.5 && f < 1.0) {
                return Err(Error::domain(format!(
                    "cell {}: far-user coefficient must lie in (0.5, 1), got {f}",
                    c + 1
                )));
            }
            if n + f > 1.0 + 1e-12 {
                return Err(Error::domain(format!(
                    "cell {}: coefficients sum to {} > 1",
                    c + 1,
                    n + f
                )));
            }
            let p = self.p_tx_w[c];
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::domain(format!(
                    "cell {}: transmit power must be non-negative, got {p} W",
                    c + 1
                )));
            }
        }
        Ok(())
    }
}

/// Effective channels after RIS reflection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedChannels {
    pub near: [ComplexGain; 2],
    pub far: [ComplexGain; 2],
    /// BS c to the near user of the other cell.
    pub ici: [ComplexGain; 2],
}

impl CombinedChannels {
    /// Channels with no RIS at all.
    pub fn direct(realization: &ChannelRealization) -> Self {
        Self {
            near: realization.direct_near,
            far: realization.direct_far,
            ici: realization.interference,
        }
    }
}

/// `H = h + sum_m e^{j theta_m} g_m r_m` over the elements assigned to each
/// cell. Interfering links are not reflected.
pub fn combine_channels(realization: &ChannelRealization, ris: &RisConfig) -> Result<CombinedChannels> {
    realization.check_dimensions()?;
    if ris.elements() != realization.elements() || ris.assignment.len() != ris.elements() {
        return Err(Error::Dimension {
            what: "RIS configuration elements",
            expected: realization.elements(),
            found: ris.elements().min(ris.assignment.len()),
        });
    }
    let mut out = CombinedChannels::direct(realization);
    for (m, (theta, cell)) in ris.phases.iter().zip(&ris.assignment).enumerate() {
        let Some(c) = *cell else { continue };
        if c > 1 {
            return Err(Error::domain(format!("element {m} assigned to unknown cell index {c}")));
        }
        let incident = ComplexGain::from_polar(1.0, *theta) * realization.bs_to_ris[c][m];
        out.near[c] += incident * realization.ris_to_near[c][m];
        out.far[c] += incident * realization.ris_to_far[m];
    }
    Ok(out)
}

/// Far-user service mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarMode {
    /// Non-coherent joint transmission from both cells.
    Comp,
    /// Served by one cell; the other transmits to its own near user only.
    NonComp { serving: usize },
}

fn other(c: usize) -> usize {
    1 - c
}

/// SINR at the near user of cell `c` while decoding the far user's message.
pub fn sinr_near_decoding_far(ch: &CombinedChannels, pa: &PowerAllocation, noise_w: f64, c: usize) -> f64 {
    let g = ch.near[c].norm_sqr() * pa.p_tx_w[c];
    let o = other(c);
    let ici = pa.p_tx_w[o] * ch.ici[o].norm_sqr();
    pa.gamma_far[c] * g / (pa.gamma_near[c] * g + ici + noise_w)
}

/// SINR at the near user of cell `c` for its own message after SIC.
pub fn sinr_near_own(ch: &CombinedChannels, pa: &PowerAllocation, noise_w: f64, c: usize) -> f64 {
    let o = other(c);
    let ici = pa.p_tx_w[o] * ch.ici[o].norm_sqr();
    pa.gamma_near[c] * pa.p_tx_w[c] * ch.near[c].norm_sqr() / (ici + noise_w)
}

/// Far-user SINR under non-coherent JT-CoMP.
pub fn sinr_far_comp(ch: &CombinedChannels, pa: &PowerAllocation, noise_w: f64) -> f64 {
    let rx = [0, 1].map(|c| pa.p_tx_w[c] * ch.far[c].norm_sqr());
    let signal = pa.gamma_far[0] * rx[0] + pa.gamma_far[1] * rx[1];
    let interference = pa.gamma_near[0] * rx[0] + pa.gamma_near[1] * rx[1];
    signal / (interference + noise_w)
}

/// Far-user SINR when only `serving` transmits its message; the other BS's
/// whole transmit power is interference.
pub fn sinr_far_noncomp(ch: &CombinedChannels, pa: &PowerAllocation, noise_w: f64, serving: usize) -> f64 {
    let o = other(serving);
    let own = pa.p_tx_w[serving] * ch.far[serving].norm_sqr();
    let foreign = pa.p_tx_w[o] * ch.far[o].norm_sqr();
    pa.gamma_far[serving] * own / (pa.gamma_near[serving] * own + foreign + noise_w)
}

pub fn sinr_far(ch: &CombinedChannels, pa: &PowerAllocation, noise_w: f64, mode: FarMode) -> f64 {
    match mode {
        FarMode::Comp => sinr_far_comp(ch, pa, noise_w),
        FarMode::NonComp { serving } => sinr_far_noncomp(ch, pa, noise_w, serving),
    }
}

/// `log2(1 + sinr)`.
pub fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rate_near: [f64; 2],
    pub rate_near_decoding_far: [f64; 2],
    pub rate_far: f64,
    pub sum: f64,
    pub sinr_near: [f64; 2],
    pub sinr_near_decoding_far: [f64; 2],
    pub sinr_far: f64,
}

pub fn rates(ch: &CombinedChannels, pa: &PowerAllocation, noise_w: f64, mode: FarMode) -> Result<RateReport> {
    if !(noise_w > 0.0) {
        return Err(Error::domain(format!("noise power must be positive, got {noise_w} W")));
    }
    if let FarMode::NonComp { serving } = mode {
        if serving > 1 {
            return Err(Error::domain(format!("serving cell index {serving} out of range")));
        }
    }
    let sinr_near = [0, 1].map(|c| sinr_near_own(ch, pa, noise_w, c));
    let sinr_nf = [0, 1].map(|c| sinr_near_decoding_far(ch, pa, noise_w, c));
    let sinr_f = sinr_far(ch, pa, noise_w, mode);
    let rate_near = sinr_near.map(rate);
    let rate_far = rate(sinr_f);
    Ok(RateReport {
        rate_near,
        rate_near_decoding_far: sinr_nf.map(rate),
        rate_far,
        sum: rate_near[0] + rate_near[1] + rate_far,
        sinr_near,
        sinr_near_decoding_far: sinr_nf,
        sinr_far: sinr_f,
    })
}
