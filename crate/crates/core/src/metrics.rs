//! Power units, thermal noise and the spectral/energy efficiency figures.
//!
//! Every formula elsewhere in the crate works in linear watts. Decibel
//! quantities are converted here and nowhere else.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thermal noise density at room temperature, dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(watt: f64) -> f64 {
    10.0 * watt.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Receiver noise budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkBudget {
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            bandwidth_hz: 2.4e9,
            noise_figure_db: 12.0,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::domain(format!(
                "bandwidth must be positive, got {} Hz",
                self.bandwidth_hz
            )));
        }
        if !self.noise_figure_db.is_finite() {
            return Err(Error::domain("noise figure must be finite"));
        }
        Ok(())
    }

    /// `-174 + 10 log10(B) + NF`, in dBm.
    pub fn noise_power_dbm(&self) -> Result<f64> {
        self.validate()?;
        Ok(THERMAL_NOISE_DBM_PER_HZ + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db)
    }
}

pub fn noise_power_w(budget: &LinkBudget) -> Result<f64> {
    budget.noise_power_dbm().map(dbm_to_watt)
}

/// `log2(1 + sinr)` in bit/s/Hz.
pub fn spectral_efficiency(sinr: f64) -> Result<f64> {
    if sinr.is_nan() || sinr < 0.0 {
        return Err(Error::domain(format!("SINR must be non-negative, got {sinr}")));
    }
    Ok((1.0 + sinr).log2())
}

/// `B log2(1 + sinr) / P` in bit/J.
pub fn energy_efficiency(sinr: f64, bandwidth_hz: f64, p_tx_w: f64) -> Result<f64> {
    if !(p_tx_w > 0.0) {
        return Err(Error::domain(format!(
            "energy efficiency needs positive transmit power, got {p_tx_w} W"
        )));
    }
    if !(bandwidth_hz > 0.0) {
        return Err(Error::domain(format!(
            "bandwidth must be positive, got {bandwidth_hz} Hz"
        )));
    }
    Ok(bandwidth_hz * spectral_efficiency(sinr)? / p_tx_w)
}

/// Network energy efficiency from an already computed rate (sum of
/// per-user spectral efficiencies) and the total radiated power.
pub fn energy_efficiency_from_rate(rate: f64, bandwidth_hz: f64, total_p_w: f64) -> Result<f64> {
    if !(total_p_w > 0.0) {
        return Err(Error::domain(format!(
            "energy efficiency needs positive transmit power, got {total_p_w} W"
        )));
    }
    Ok(bandwidth_hz * rate / total_p_w)
}
