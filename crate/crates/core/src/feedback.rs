//! Quantized-phase datasets for the feedback compressors, and the reference
//! feedback channel (Rician fading plus AWGN on the compressed symbols).
//!
//! Dataset layout is a comma-separated file with header
//! `user,element,b0,...,b{I-1}` (b0 is the most significant bit) and a JSON
//! sidecar next to it (same stem, `.json` extension) carrying the quantizer
//! width, seed and configuration hash.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_rayleigh, ChannelRealization, ComplexGain};
use crate::error::{Error, Result};
use crate::montecarlo::{trial_rng, Scenario};
use crate::ris::{optimal_phase, quantize, split_assignment, QuantizedPhase};

/// Floor on the average symbol energy used to set the noise variance.
pub const MIN_SYMBOL_ENERGY: f64 = 1e-8;

pub const DATASET_FORMAT: &str = "arisim-qps";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserTag {
    Near1,
    Near2,
    Far,
}

impl UserTag {
    pub const ALL: [UserTag; 3] = [UserTag::Near1, UserTag::Near2, UserTag::Far];

    pub fn as_str(&self) -> &'static str {
        match self {
            UserTag::Near1 => "near_1",
            UserTag::Near2 => "near_2",
            UserTag::Far => "far",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::domain(format!("unknown user tag `{s}`")))
    }
}

/// One element's quantized phase for one user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QpsRecord {
    pub user: UserTag,
    pub element: usize,
    pub phase: QuantizedPhase,
}

impl QpsRecord {
    pub fn bits(&self) -> Vec<u8> {
        self.phase.to_bits()
    }
}

/// Contents of the dataset's JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub format: String,
    pub version: u32,
    pub quant_bits: u32,
    pub seed: u64,
    pub config_hash: String,
    pub trials: usize,
    pub elements: usize,
    pub records: usize,
    pub user_tags: Vec<String>,
}

pub fn sidecar_path(dataset: &Path) -> PathBuf {
    dataset.with_extension("json")
}

/// Quantized optimal phases of one trial, per user tag.
///
/// Near user c aligns every element with its own BS's direct link. The far
/// user aligns each element with the BS it is assigned to; idle elements use
/// cell 1.
pub fn trial_records(real: &ChannelRealization, assignment: &[Option<usize>], bits: u32) -> Result<Vec<QpsRecord>> {
    real.check_dimensions()?;
    let m = real.elements();
    if assignment.len() != m {
        return Err(Error::Dimension {
            what: "RIS assignment",
            expected: m,
            found: assignment.len(),
        });
    }
    let mut out = Vec::with_capacity(3 * m);
    for user in UserTag::ALL {
        for e in 0..m {
            let theta = match user {
                UserTag::Near1 | UserTag::Near2 => {
                    let c = if user == UserTag::Near1 { 0 } else { 1 };
                    optimal_phase(real.direct_near[c], real.bs_to_ris[c][e], real.ris_to_near[c][e])
                }
                UserTag::Far => {
                    let c = assignment[e].unwrap_or(0);
                    optimal_phase(real.direct_far[c], real.bs_to_ris[c][e], real.ris_to_far[e])
                }
            };
            out.push(QpsRecord {
                user,
                element: e,
                phase: quantize(theta, bits)?,
            });
        }
    }
    Ok(out)
}

fn header(bits: u32) -> String {
    let mut h = String::from("user,element");
    for k in 0..bits {
        h.push_str(&format!(",b{k}"));
    }
    h
}

/// Writes `trials` trials of quantized phases (three users times `M`
/// elements each) to `path` plus the JSON sidecar. Returns the number of
/// records written.
pub fn export_dataset(
    scenario: &Scenario,
    trials: usize,
    master_seed: u64,
    path: &Path,
    config_hash: &str,
) -> Result<usize> {
    scenario.validate()?;
    let model = scenario.channel_model()?;
    let assignment = split_assignment(scenario.elements, scenario.split)?;
    let bits = scenario.quant_bits;

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", header(bits)).map_err(io)?;
    let mut count = 0usize;
    let mut line = String::new();
    for t in 0..trials {
        let real = model.realize(scenario.elements, &mut trial_rng(master_seed, t as u64));
        for rec in trial_records(&real, &assignment, bits)? {
            line.clear();
            line.push_str(rec.user.as_str());
            line.push(',');
            line.push_str(&rec.element.to_string());
            for b in rec.bits() {
                line.push(',');
                line.push(if b == 1 { '1' } else { '0' });
            }
            writeln!(w, "{line}").map_err(io)?;
            count += 1;
        }
    }
    w.flush().map_err(io)?;

    let sidecar = DatasetSidecar {
        format: DATASET_FORMAT.to_string(),
        version: DATASET_VERSION,
        quant_bits: bits,
        seed: master_seed,
        config_hash: config_hash.to_string(),
        trials,
        elements: scenario.elements,
        records: count,
        user_tags: UserTag::ALL.iter().map(|t| t.as_str().to_string()).collect(),
    };
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    std::fs::write(&side, json + "\n").map_err(|e| Error::io(&side, e))?;
    Ok(count)
}

/// Parses a dataset written by [`export_dataset`].
pub fn read_dataset(path: &Path) -> Result<(u32, Vec<QpsRecord>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let head = lines
        .next()
        .ok_or_else(|| Error::domain(format!("{} is empty", path.display())))?
        .map_err(|e| Error::io(path, e))?;
    let bits = head.split(',').count().saturating_sub(2) as u32;
    if head != header(bits) {
        return Err(Error::domain(format!("unexpected dataset header `{head}`")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != bits as usize + 2 {
            return Err(Error::domain(format!("row {} has {} fields", i + 1, fields.len())));
        }
        let user = UserTag::parse(fields[0])?;
        let element = fields[1]
            .parse()
            .map_err(|_| Error::domain(format!("row {}: bad element index", i + 1)))?;
        let bitv = fields[2..]
            .iter()
            .map(|f| match *f {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(Error::domain(format!("row {}: bad bit `{other}`", i + 1))),
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(QpsRecord {
            user,
            element,
            phase: QuantizedPhase::from_bits(&bitv)?,
        });
    }
    Ok((bits, out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackChannelParams {
    pub snr_db: f64,
    /// Linear Rician K.
    pub k_factor: f64,
    /// One fading coefficient for the whole vector instead of one per symbol.
    pub block_fading: bool,
}

impl Default for FeedbackChannelParams {
    fn default() -> Self {
        Self {
            snr_db: 10.0,
            k_factor: 3.0,
            block_fading: false,
        }
    }
}

impl FeedbackChannelParams {
    /// Normalized LoS weight `b = sqrt(K / (K + 1))`.
    pub fn los_weight(&self) -> f64 {
        if self.k_factor.is_infinite() {
            1.0
        } else {
            (self.k_factor / (self.k_factor + 1.0)).sqrt()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_factor.is_nan() || self.k_factor < 0.0 {
            return Err(Error::domain(format!("Rician K must be non-negative, got {}", self.k_factor)));
        }
        if self.snr_db.is_nan() {
            return Err(Error::domain("SNR must not be NaN"));
        }
        Ok(())
    }

    fn draw_fading<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexGain {
        let b = self.los_weight();
        ComplexGain::new(b, 0.0) + draw_rayleigh(rng) * (1.0 - b * b).sqrt()
    }
}

/// Average energy of `x`, floored at [`MIN_SYMBOL_ENERGY`].
pub fn average_energy(x: &[f64]) -> f64 {
    if x.is_empty() {
        return MIN_SYMBOL_ENERGY;
    }
    let e = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    e.max(MIN_SYMBOL_ENERGY)
}

/// Noise variance `E_avg / SNR_linear` for the symbols `x`.
pub fn noise_variance(x: &[f64], snr_db: f64) -> f64 {
    average_energy(x) / 10f64.powf(snr_db / 10.0)
}

/// Passes real symbols through Rician fading and complex AWGN and returns
/// the received envelope `|h x + n|`.
pub fn feedback_channel<R: Rng + ?Sized>(x: &[f64], params: &FeedbackChannelParams, rng: &mut R) -> Result<Vec<f64>> {
    params.validate()?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("feedback symbols must be finite"));
    }
    let sigma = (noise_variance(x, params.snr_db) / 2.0).sqrt();
    let block = params.block_fading.then(|| params.draw_fading(rng));
    Ok(x.iter()
        .map(|&xi| {
            let h = block.unwrap_or_else(|| params.draw_fading(rng));
            let nr: f64 = rng.sample(StandardNormal);
            let ni: f64 = rng.sample(StandardNormal);
            let z = h * xi + ComplexGain::new(nr * sigma, ni * sigma);
            z.norm()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_zero_symbols_use_energy_floor() {
        let x = vec![0.0; 1000];
        assert_eq!(average_energy(&x), MIN_SYMBOL_ENERGY);
        let p = FeedbackChannelParams {
            snr_db: 0.0,
            ..Default::default()
        };
        let z = feedback_channel(&x, &p, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        // pure noise envelope: E|n|^2 = 1e-8
        let e = z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64;
        assert!(e > 0.5e-8 && e < 1.5e-8, "{e}");
    }

    #[test]
    fn noiseless_los_limit_is_identity() {
        let x = [0.3, -1.2, 0.0, 2.5];
        let p = FeedbackChannelParams {
            snr_db: f64::INFINITY,
            k_factor: f64::INFINITY,
            block_fading: false,
        };
        let z = feedback_channel(&x, &p, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        for (a, b) in z.iter().zip(x) {
            assert!((a - b.abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn envelope_non_negative() {
        let x: Vec<f64> = (0..500).map(|i| (i as f64 * 0.37).sin()).collect();
        let z = feedback_channel(&x, &FeedbackChannelParams::default(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(z.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn invalid_params_rejected() {
        let p = FeedbackChannelParams {
            k_factor: -1.0,
            ..Default::default()
        };
        assert!(feedback_channel(&[1.0], &p, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!(feedback_channel(&[f64::NAN], &FeedbackChannelParams::default(), &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn los_weight_default() {
        let b = FeedbackChannelParams::default().los_weight();
        assert!((b - 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn block_fading_shares_one_coefficient() {
        // with no noise and block fading, |Z_i| / |x_i| is constant
        let x = [1.0, 2.0, -3.0, 0.5];
        let p = FeedbackChannelParams {
            snr_db: f64::INFINITY,
            k_factor: 1.0,
            block_fading: true,
        };
        let z = feedback_channel(&x, &p, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let g = z[0] / 1.0;
        for (zi, xi) in z.iter().zip(x) {
            assert!((zi / xi.abs() - g).abs() < 1e-12);
        }
    }

    #[test]
    fn user_tags_roundtrip() {
        for t in UserTag::ALL {
            assert_eq!(UserTag::parse(t.as_str()).unwrap(), t);
        }
        assert!(UserTag::parse("near_3").is_err());
    }

    #[test]
    fn zero_trials_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("qps.csv");
        let n = export_dataset(&Scenario::default(), 0, 1, &path, "abc").unwrap();
        assert_eq!(n, 0);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "user,element,b0,b1,b2,b3,b4,b5,b6,b7,b8\n");
        let side: DatasetSidecar =
            serde_json::from_str(&std::fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
        assert_eq!(side.records, 0);
        assert_eq!(side.quant_bits, 9);
        assert_eq!(side.config_hash, "abc");
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = export_dataset(&Scenario::default(), 1, 1, Path::new("/nonexistent/dir/x.csv"), "")
            .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
