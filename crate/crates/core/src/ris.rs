//! RIS phase state: per-element optimal phases, uniform phase quantization
//! and the partition of elements between the two base stations.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, ComplexGain};
use crate::error::{Error, Result};

/// Largest supported quantizer width.
pub const MAX_QUANT_BITS: u32 = 24;

/// Phase of `z`, with `arg(0) = 0`.
pub fn phase_of(z: ComplexGain) -> f64 {
    if z.norm_sqr() == 0.0 {
        0.0
    } else {
        z.arg()
    }
}

/// Phase that aligns the cascade `bs_to_ris * ris_to_user` with `direct`.
pub fn optimal_phase(direct: ComplexGain, bs_to_ris: ComplexGain, ris_to_user: ComplexGain) -> f64 {
    let theta = phase_of(direct) - phase_of(bs_to_ris) - phase_of(ris_to_user);
    wrap_phase(theta)
}

/// Wraps into [0, 2pi). `rem_euclid` can round up to exactly 2pi for tiny
/// negative inputs, which is folded back to 0.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Shortest distance between two angles on the circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_phase(a - b);
    d.min(TAU - d)
}

fn check_bits(bits: u32) -> Result<()> {
    if bits == 0 || bits > MAX_QUANT_BITS {
        return Err(Error::domain(format!(
            "quantizer width must be in 1..={MAX_QUANT_BITS}, got {bits}"
        )));
    }
    Ok(())
}

/// Index into the `2^I`-level uniform phase grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantizedPhase {
    index: u32,
    bits: u32,
}

impl QuantizedPhase {
    pub fn new(index: u32, bits: u32) -> Result<Self> {
        check_bits(bits)?;
        if index >= 1 << bits {
            return Err(Error::domain(format!(
                "phase index {index} out of range for {bits} bits"
            )));
        }
        Ok(Self { index, bits })
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn width(&self) -> u32 {
        self.bits
    }

    /// Bit vector, most significant bit first.
    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.bits)
            .rev()
            .map(|k| ((self.index >> k) & 1) as u8)
            .collect()
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let width = u32::try_from(bits.len()).map_err(|_| Error::domain("bit vector too long"))?;
        check_bits(width)?;
        let mut index = 0u32;
        for &b in bits {
            if b > 1 {
                return Err(Error::domain(format!("bit value {b} is not 0 or 1")));
            }
            index = (index << 1) | u32::from(b);
        }
        Self::new(index, width)
    }
}

pub fn quantize(theta: f64, bits: u32) -> Result<QuantizedPhase> {
    check_bits(bits)?;
    if !theta.is_finite() {
        return Err(Error::domain("cannot quantize a non-finite phase"));
    }
    let levels = 1u64 << bits;
    let scaled = wrap_phase(theta) * levels as f64 / TAU;
    let index = (scaled.round() as u64) % levels;
    QuantizedPhase::new(index as u32, bits)
}

pub fn dequantize(q: QuantizedPhase, bits: u32) -> Result<f64> {
    check_bits(bits)?;
    if q.index >= 1 << bits {
        return Err(Error::domain(format!(
            "phase index {} out of range for {bits} bits",
            q.index
        )));
    }
    Ok(TAU * f64::from(q.index) / (1u64 << bits) as f64)
}

/// Which BS an element serves. `None` leaves the element idle.
pub type Assignment = Vec<Option<usize>>;

/// Elements `0..m1` serve cell 1, the next `m2` serve cell 2, the rest idle.
pub fn split_assignment(m: usize, split: (usize, usize)) -> Result<Assignment> {
    let (m1, m2) = split;
    if m1 + m2 > m {
        return Err(Error::domain(format!(
            "element split ({m1}, {m2}) exceeds the {m} available elements"
        )));
    }
    Ok((0..m)
        .map(|i| {
            if i < m1 {
                Some(0)
            } else if i < m1 + m2 {
                Some(1)
            } else {
                None
            }
        })
        .collect())
}

/// Balanced split, odd element to cell 1.
pub fn balanced_split(m: usize) -> (usize, usize) {
    (m - m / 2, m / 2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisConfig {
    /// Applied phase per element, radians in [0, 2pi).
    pub phases: Vec<f64>,
    pub assignment: Assignment,
    pub quant_bits: u32,
}

impl RisConfig {
    pub fn elements(&self) -> usize {
        self.phases.len()
    }

    pub fn split(&self) -> (usize, usize) {
        let count = |c| self.assignment.iter().filter(|a| **a == Some(c)).count();
        (count(0), count(1))
    }

    pub fn validate(&self) -> Result<()> {
        check_bits(self.quant_bits)?;
        if self.assignment.len() != self.phases.len() {
            return Err(Error::Dimension {
                what: "RIS assignment",
                expected: self.phases.len(),
                found: self.assignment.len(),
            });
        }
        if let Some(p) = self.phases.iter().find(|p| !(0.0..TAU).contains(*p)) {
            return Err(Error::domain(format!("phase {p} outside [0, 2pi)")));
        }
        if let Some(c) = self.assignment.iter().flatten().find(|c| **c > 1) {
            return Err(Error::domain(format!("element assigned to unknown cell index {c}")));
        }
        Ok(())
    }
}

fn check_assignment(realization: &ChannelRealization, assignment: &Assignment) -> Result<()> {
    realization.check_dimensions()?;
    if assignment.len() != realization.elements() {
        return Err(Error::Dimension {
            what: "RIS assignment",
            expected: realization.elements(),
            found: assignment.len(),
        });
    }
    if let Some(c) = assignment.iter().flatten().find(|c| **c > 1) {
        return Err(Error::domain(format!("element assigned to unknown cell index {c}")));
    }
    Ok(())
}

/// Continuous far-user-aligned phases; idle elements get phase 0.
pub fn continuous_phases(realization: &ChannelRealization, assignment: &Assignment) -> Result<Vec<f64>> {
    check_assignment(realization, assignment)?;
    Ok(assignment
        .iter()
        .enumerate()
        .map(|(m, a)| match *a {
            Some(c) => optimal_phase(
                realization.direct_far[c],
                realization.bs_to_ris[c][m],
                realization.ris_to_far[m],
            ),
            None => 0.0,
        })
        .collect())
}

/// Aligns every assigned element with the far user's direct link from its
/// BS, then quantizes to `quant_bits`.
pub fn configure_for_cluster(
    realization: &ChannelRealization,
    assignment: &Assignment,
    quant_bits: u32,
) -> Result<RisConfig> {
    check_bits(quant_bits)?;
    let phases = continuous_phases(realization, assignment)?
        .into_iter()
        .map(|theta| dequantize(quantize(theta, quant_bits)?, quant_bits))
        .collect::<Result<Vec<_>>>()?;
    Ok(RisConfig {
        phases,
        assignment: assignment.clone(),
        quant_bits,
    })
}
