//! Large-scale path loss and small-scale fading for every link of the
//! two-cell topology.
//!
//! Base station to user links (direct and interfering) are Rayleigh. Links
//! that touch the aerial RIS are Rician with a deterministic line-of-sight
//! term whose phase follows the geometric link length.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::db_to_linear;

/// Complex baseband channel coefficient.
pub type ComplexGain = Complex64;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type Point3 = [f64; 3];

pub fn distance(a: &Point3, b: &Point3) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Positions of the two base stations, the aerial RIS and the three users.
///
/// Index 0 is cell 1 and index 1 is cell 2 throughout the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Geometry {
    pub bs_positions: [Point3; 2],
    pub ris_position: Point3,
    pub near_user_positions: [Point3; 2],
    pub far_user_position: Point3,
}

impl Default for Geometry {
    /// Base stations 10 m high, far user at the cell edge 300 m from both,
    /// near users halfway along each BS to far-user segment (150 m), RIS
    /// hovering 50 m above the cell boundary.
    fn default() -> Self {
        let far = [0.0, 150.0, 1.5];
        let bs_height = 10.0;
        let dy = far[1];
        let dz = bs_height - far[2];
        let half_spacing = (300.0f64 * 300.0 - dy * dy - dz * dz).sqrt();
        let bs = [[-half_spacing, 0.0, bs_height], [half_spacing, 0.0, bs_height]];
        let near = bs.map(|b| {
            [
                0.5 * (b[0] + far[0]),
                0.5 * (b[1] + far[1]),
                0.5 * (b[2] + far[2]),
            ]
        });
        Self {
            bs_positions: bs,
            ris_position: [0.0, 0.0, 50.0],
            near_user_positions: near,
            far_user_position: far,
        }
    }
}

impl Geometry {
    pub fn bs_to_near(&self, c: usize) -> f64 {
        distance(&self.bs_positions[c], &self.near_user_positions[c])
    }

    pub fn bs_to_far(&self, c: usize) -> f64 {
        distance(&self.bs_positions[c], &self.far_user_position)
    }

    pub fn bs_to_ris(&self, c: usize) -> f64 {
        distance(&self.bs_positions[c], &self.ris_position)
    }

    pub fn ris_to_near(&self, c: usize) -> f64 {
        distance(&self.ris_position, &self.near_user_positions[c])
    }

    pub fn ris_to_far(&self) -> f64 {
        distance(&self.ris_position, &self.far_user_position)
    }

    /// Distance from BS `c` to the near user of the other cell.
    pub fn interfering(&self, c: usize) -> f64 {
        distance(&self.bs_positions[c], &self.near_user_positions[1 - c])
    }

    pub fn validate(&self) -> Result<()> {
        let all = self
            .bs_positions
            .iter()
            .chain(self.near_user_positions.iter())
            .chain([&self.ris_position, &self.far_user_position]);
        for p in all {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain("geometry coordinates must be finite"));
            }
        }
        for c in 0..2 {
            let ds = [
                ("bs_to_near", self.bs_to_near(c)),
                ("bs_to_far", self.bs_to_far(c)),
                ("bs_to_ris", self.bs_to_ris(c)),
                ("ris_to_near", self.ris_to_near(c)),
                ("interfering", self.interfering(c)),
            ];
            for (name, d) in ds {
                if !(d > 0.0) {
                    return Err(Error::domain(format!(
                        "{name} distance for cell {} must be positive",
                        c + 1
                    )));
                }
            }
        }
        if !(self.ris_to_far() > 0.0) {
            return Err(Error::domain("ris_to_far distance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkClass {
    BsNear,
    BsFar,
    BsRis,
    RisNear,
    RisFar,
    Interfering,
}

impl LinkClass {
    pub const ALL: [LinkClass; 6] = [
        LinkClass::BsNear,
        LinkClass::BsFar,
        LinkClass::BsRis,
        LinkClass::RisNear,
        LinkClass::RisFar,
        LinkClass::Interfering,
    ];
}

/// Path-loss exponents per link class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathLossExponents {
    pub bs_near: f64,
    pub bs_far: f64,
    pub bs_ris: f64,
    pub ris_near: f64,
    pub ris_far: f64,
    pub interfering: f64,
}

impl Default for PathLossExponents {
    fn default() -> Self {
        Self {
            bs_near: 3.2,
            bs_far: 4.5,
            bs_ris: 2.7,
            ris_near: 3.0,
            ris_far: 2.7,
            interfering: 4.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathLossParams {
    /// Loss at the 1 m reference distance, in dB (negative is attenuation).
    pub reference_loss_db: f64,
    pub exponents: PathLossExponents,
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            reference_loss_db: -30.0,
            exponents: PathLossExponents::default(),
        }
    }
}

impl PathLossParams {
    pub fn exponent(&self, class: LinkClass) -> f64 {
        let e = &self.exponents;
        match class {
            LinkClass::BsNear => e.bs_near,
            LinkClass::BsFar => e.bs_far,
            LinkClass::BsRis => e.bs_ris,
            LinkClass::RisNear => e.ris_near,
            LinkClass::RisFar => e.ris_far,
            LinkClass::Interfering => e.interfering,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.reference_loss_db.is_finite() {
            return Err(Error::domain("reference loss must be finite"));
        }
        for class in LinkClass::ALL {
            let a = self.exponent(class);
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::domain(format!(
                    "path-loss exponent for {class:?} must be positive, got {a}"
                )));
            }
        }
        Ok(())
    }

    /// Linear power gain `PL(d0) / d^alpha` for a link of length `d` metres.
    pub fn path_loss_linear(&self, d: f64, class: LinkClass) -> Result<f64> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::domain(format!(
                "path loss needs a positive distance, got {d}"
            )));
        }
        Ok(db_to_linear(self.reference_loss_db) / d.powf(self.exponent(class)))
    }
}

/// Rician K-factors (dB) for the links touching the RIS, and the carrier
/// used to derive line-of-sight phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RicianParams {
    pub bs_ris_db: f64,
    pub ris_near_db: f64,
    pub ris_far_db: f64,
    pub carrier_hz: f64,
}

impl Default for RicianParams {
    fn default() -> Self {
        Self {
            bs_ris_db: 4.0,
            ris_near_db: 3.0,
            ris_far_db: 4.0,
            carrier_hz: 2.4e9,
        }
    }
}

impl RicianParams {
    pub fn validate(&self) -> Result<()> {
        for (name, db) in [
            ("bs_ris_db", self.bs_ris_db),
            ("ris_near_db", self.ris_near_db),
            ("ris_far_db", self.ris_far_db),
        ] {
            // -inf dB is a valid K = 0 (pure Rayleigh)
            if db.is_nan() || db == f64::INFINITY {
                return Err(Error::domain(format!("{name} must be a finite dB value")));
            }
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(Error::domain("carrier frequency must be positive"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Phase of the free-space term `exp(-j 2 pi d / lambda)`, wrapped to [0, 2pi).
    pub fn los_phase(&self, d: f64) -> f64 {
        let cycles = d / self.wavelength();
        (-TAU * cycles.fract()).rem_euclid(TAU)
    }
}

/// Circularly symmetric CN(0, 1) sample.
pub fn draw_rayleigh<R: Rng + ?Sized>(rng: &mut R) -> ComplexGain {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    ComplexGain::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Unit-power Rician sample: `sqrt(K/(K+1)) e^{j phase} + sqrt(1/(K+1)) w`.
pub fn draw_rician<R: Rng + ?Sized>(rng: &mut R, k_linear: f64, los_phase: f64) -> Result<ComplexGain> {
    if k_linear.is_nan() || k_linear < 0.0 {
        return Err(Error::domain(format!(
            "Rician K must be non-negative, got {k_linear}"
        )));
    }
    let scatter = draw_rayleigh(rng);
    Ok(rician_mix(k_linear, los_phase, scatter))
}

fn rician_mix(k_linear: f64, los_phase: f64, scatter: ComplexGain) -> ComplexGain {
    if k_linear == 0.0 {
        return scatter;
    }
    if k_linear.is_infinite() {
        return ComplexGain::from_polar(1.0, los_phase);
    }
    let los_w = (k_linear / (k_linear + 1.0)).sqrt();
    let nlos_w = (1.0 / (k_linear + 1.0)).sqrt();
    ComplexGain::from_polar(los_w, los_phase) + scatter * nlos_w
}

/// One Monte Carlo draw of every link.
///
/// Arrays indexed by cell hold `[cell 1, cell 2]`; per-element vectors have
/// one entry per RIS element.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// BS c to its own near user.
    pub direct_near: [ComplexGain; 2],
    /// BS c to the shared far user.
    pub direct_far: [ComplexGain; 2],
    /// BS c to the near user of the other cell.
    pub interference: [ComplexGain; 2],
    pub bs_to_ris: [Vec<ComplexGain>; 2],
    /// RIS element to the near user of cell c.
    pub ris_to_near: [Vec<ComplexGain>; 2],
    pub ris_to_far: Vec<ComplexGain>,
}

impl ChannelRealization {
    pub fn elements(&self) -> usize {
        self.ris_to_far.len()
    }

    pub fn check_dimensions(&self) -> Result<()> {
        let m = self.elements();
        for v in self.bs_to_ris.iter().chain(self.ris_to_near.iter()) {
            if v.len() != m {
                return Err(Error::Dimension {
                    what: "per-element channel vector",
                    expected: m,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }

    /// Keeps the first `m` elements. Realizations are drawn element by
    /// element, so a truncated draw matches a fresh draw with `m` elements
    /// from the same stream.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m > self.elements() {
            return Err(Error::Dimension {
                what: "truncated element count",
                expected: self.elements(),
                found: m,
            });
        }
        let cut = |v: &Vec<ComplexGain>| v[..m].to_vec();
        Ok(Self {
            direct_near: self.direct_near,
            direct_far: self.direct_far,
            interference: self.interference,
            bs_to_ris: [cut(&self.bs_to_ris[0]), cut(&self.bs_to_ris[1])],
            ris_to_near: [cut(&self.ris_to_near[0]), cut(&self.ris_to_near[1])],
            ris_to_far: cut(&self.ris_to_far),
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct RicianLink {
    amplitude: f64,
    k_linear: f64,
    los_phase: f64,
}

impl RicianLink {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexGain {
        rician_mix(self.k_linear, self.los_phase, draw_rayleigh(rng)) * self.amplitude
    }
}

/// Precomputed large-scale amplitudes and LoS phases for a fixed geometry.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    direct_near: [f64; 2],
    direct_far: [f64; 2],
    interference: [f64; 2],
    bs_to_ris: [RicianLink; 2],
    ris_to_near: [RicianLink; 2],
    ris_to_far: RicianLink,
}

impl ChannelModel {
    pub fn new(geometry: &Geometry, path_loss: &PathLossParams, rician: &RicianParams) -> Result<Self> {
        geometry.validate()?;
        path_loss.validate()?;
        rician.validate()?;
        let amp = |d: f64, class| path_loss.path_loss_linear(d, class).map(f64::sqrt);
        let rician_link = |d: f64, class, k_db: f64| -> Result<RicianLink> {
            Ok(RicianLink {
                amplitude: amp(d, class)?,
                k_linear: db_to_linear(k_db),
                los_phase: rician.los_phase(d),
            })
        };
        Ok(Self {
            direct_near: [
                amp(geometry.bs_to_near(0), LinkClass::BsNear)?,
                amp(geometry.bs_to_near(1), LinkClass::BsNear)?,
            ],
            direct_far: [
                amp(geometry.bs_to_far(0), LinkClass::BsFar)?,
                amp(geometry.bs_to_far(1), LinkClass::BsFar)?,
            ],
            interference: [
                amp(geometry.interfering(0), LinkClass::Interfering)?,
                amp(geometry.interfering(1), LinkClass::Interfering)?,
            ],
            bs_to_ris: [
                rician_link(geometry.bs_to_ris(0), LinkClass::BsRis, rician.bs_ris_db)?,
                rician_link(geometry.bs_to_ris(1), LinkClass::BsRis, rician.bs_ris_db)?,
            ],
            ris_to_near: [
                rician_link(geometry.ris_to_near(0), LinkClass::RisNear, rician.ris_near_db)?,
                rician_link(geometry.ris_to_near(1), LinkClass::RisNear, rician.ris_near_db)?,
            ],
            ris_to_far: rician_link(geometry.ris_to_far(), LinkClass::RisFar, rician.ris_far_db)?,
        })
    }

    /// Draws all links for `m` RIS elements.
    ///
    /// Draw order is fixed: the six BS-user links, then element by element
    /// (BS1-RIS, BS2-RIS, RIS-near1, RIS-near2, RIS-far).
    pub fn realize<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> ChannelRealization {
        let mut rayleigh = |a: f64| draw_rayleigh(rng) * a;
        let direct_near = [rayleigh(self.direct_near[0]), rayleigh(self.direct_near[1])];
        let direct_far = [rayleigh(self.direct_far[0]), rayleigh(self.direct_far[1])];
        let interference = [rayleigh(self.interference[0]), rayleigh(self.interference[1])];

        let mut bs_to_ris = [Vec::with_capacity(m), Vec::with_capacity(m)];
        let mut ris_to_near = [Vec::with_capacity(m), Vec::with_capacity(m)];
        let mut ris_to_far = Vec::with_capacity(m);
        for _ in 0..m {
            bs_to_ris[0].push(self.bs_to_ris[0].draw(rng));
            bs_to_ris[1].push(self.bs_to_ris[1].draw(rng));
            ris_to_near[0].push(self.ris_to_near[0].draw(rng));
            ris_to_near[1].push(self.ris_to_near[1].draw(rng));
            ris_to_far.push(self.ris_to_far.draw(rng));
        }
        ChannelRealization {
            direct_near,
            direct_far,
            interference,
            bs_to_ris,
            ris_to_near,
            ris_to_far,
        }
    }
}

pub fn realize_channels<R: Rng + ?Sized>(
    geometry: &Geometry,
    path_loss: &PathLossParams,
    rician: &RicianParams,
    m: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    Ok(ChannelModel::new(geometry, path_loss, rician)?.realize(m, rng))
}
