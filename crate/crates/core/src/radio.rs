//! Geometry and link budget: log-distance path loss, a parabolic
//! three-sector antenna pattern, RSRP and downlink SINR with full
//! co-channel interference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offset from boresight at which the sector pattern is 12 dB down.
pub const SECTOR_BEAMWIDTH_DEG: f64 = 65.0;
pub const SECTOR_FRONT_TO_BACK_DB: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Bearing from `self` to `other`, degrees counter-clockwise from east.
    pub fn bearing_deg(&self, other: &Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x).to_degrees()
    }
}

/// One directional cell of an eNodeB site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorConfig {
    pub sector_id: usize,
    pub site_id: usize,
    pub site_position: Point,
    /// Boresight, degrees counter-clockwise from east, in `[0, 360)`.
    pub azimuth_deg: f64,
    pub tx_power_dbm: f64,
    pub total_prbs: u32,
}

impl SectorConfig {
    pub fn new(
        sector_id: usize,
        site_id: usize,
        site_position: Point,
        azimuth_deg: f64,
        tx_power_dbm: f64,
        total_prbs: u32,
    ) -> Result<Self> {
        if !tx_power_dbm.is_finite() {
            return Err(Error::InvalidInput(format!(
                "sector {sector_id}: tx power must be finite, got {tx_power_dbm}"
            )));
        }
        if total_prbs == 0 {
            return Err(Error::InvalidInput(format!(
                "sector {sector_id}: total PRBs must be at least 1"
            )));
        }
        if !(0.0..360.0).contains(&azimuth_deg) {
            return Err(Error::InvalidInput(format!(
                "sector {sector_id}: azimuth {azimuth_deg} outside [0, 360)"
            )));
        }
        if !(site_position.x.is_finite() && site_position.y.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sector {sector_id}: site position must be finite"
            )));
        }
        Ok(Self {
            sector_id,
            site_id,
            site_position,
            azimuth_deg,
            tx_power_dbm,
            total_prbs,
        })
    }

    /// Offset of the direction toward `ue` from boresight, in `(-180, 180]`.
    pub fn bearing_offset_deg(&self, ue: &Point) -> f64 {
        normalize_bearing(self.site_position.bearing_deg(ue) - self.azimuth_deg)
    }
}

/// Three sites on an equilateral triangle with side `inter_site_distance`,
/// three sectors per site at `azimuth_offset + {0, 120, 240}` degrees.
/// Sector `k` of site `s` gets id `3 * s + k`.
pub fn tri_site_layout(
    inter_site_distance: f64,
    azimuth_offset_deg: f64,
    tx_power_dbm: f64,
    total_prbs: u32,
) -> Result<Vec<SectorConfig>> {
    if !(inter_site_distance.is_finite() && inter_site_distance > 0.0) {
        return Err(Error::InvalidInput(format!(
            "inter-site distance must be positive, got {inter_site_distance}"
        )));
    }
    let d = inter_site_distance;
    let sites = [
        Point::new(0.0, 0.0),
        Point::new(d, 0.0),
        Point::new(d / 2.0, d * 3f64.sqrt() / 2.0),
    ];
    let mut sectors = Vec::with_capacity(9);
    for (site_id, site) in sites.iter().enumerate() {
        for k in 0..3 {
            let azimuth = (azimuth_offset_deg + 120.0 * k as f64).rem_euclid(360.0);
            sectors.push(SectorConfig::new(
                3 * site_id + k,
                site_id,
                *site,
                azimuth,
                tx_power_dbm,
                total_prbs,
            )?);
        }
    }
    Ok(sectors)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossParams {
    /// Loss at `reference_distance_m`, dB.
    pub reference_loss_db: f64,
    pub exponent: f64,
    pub reference_distance_m: f64,
    /// Log-normal shadowing standard deviation; 0 disables shadowing.
    pub shadowing_stddev_db: f64,
    /// Thermal noise over the channel bandwidth plus UE noise figure.
    pub noise_floor_dbm: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            reference_loss_db: 34.5,
            exponent: 3.5,
            reference_distance_m: 1.0,
            shadowing_stddev_db: 0.0,
            noise_floor_dbm: -98.0,
        }
    }
}

impl PathLossParams {
    pub fn validate(&self) -> Result<()> {
        if !self.reference_loss_db.is_finite() {
            return Err(Error::config("radio.reference_loss_db", "must be finite"));
        }
        if !(self.exponent.is_finite() && self.exponent > 0.0) {
            return Err(Error::config("radio.exponent", "must be > 0"));
        }
        if !(self.reference_distance_m.is_finite() && self.reference_distance_m > 0.0) {
            return Err(Error::config("radio.reference_distance_m", "must be > 0"));
        }
        if !(self.shadowing_stddev_db.is_finite() && self.shadowing_stddev_db >= 0.0) {
            return Err(Error::config("radio.shadowing_stddev_db", "must be >= 0"));
        }
        if !self.noise_floor_dbm.is_finite() {
            return Err(Error::config("radio.noise_floor_dbm", "must be finite"));
        }
        Ok(())
    }
}

/// One UE's view of the network at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub ue_id: usize,
    /// Indexed by sector id.
    pub rsrp_dbm: Vec<f64>,
    pub serving_sinr_db: f64,
    pub timestamp: f64,
}

/// Log-distance path loss. Distances below the reference distance are
/// clamped to it.
pub fn path_loss(distance: f64, params: &PathLossParams, shadowing_db: f64) -> Result<f64> {
    if !distance.is_finite() {
        return Err(Error::InvalidInput(format!(
            "distance must be finite, got {distance}"
        )));
    }
    let d = distance.max(params.reference_distance_m);
    Ok(params.reference_loss_db
        + 10.0 * params.exponent * (d / params.reference_distance_m).log10()
        + shadowing_db)
}

/// Maps any angle in degrees into `(-180, 180]`.
pub fn normalize_bearing(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Parabolic horizontal sector pattern, `-min(12 (offset/65)^2, 20)` dB.
pub fn antenna_gain(bearing_offset_deg: f64) -> f64 {
    let offset = normalize_bearing(bearing_offset_deg);
    let attenuation = 12.0 * (offset / SECTOR_BEAMWIDTH_DEG).powi(2);
    -attenuation.min(SECTOR_FRONT_TO_BACK_DB)
}

pub fn rsrp(
    sector: &SectorConfig,
    ue_position: &Point,
    params: &PathLossParams,
    shadowing_db: f64,
) -> Result<f64> {
    let distance = sector.site_position.distance(ue_position);
    let loss = path_loss(distance, params, shadowing_db)?;
    Ok(sector.tx_power_dbm + antenna_gain(sector.bearing_offset_deg(ue_position)) - loss)
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// SINR of `serving` given the received power from every sector (indexed
/// by position in `rsrp_dbm`). Every non-serving sector interferes.
pub fn sinr_from_rsrp(serving: usize, rsrp_dbm: &[f64], noise_floor_dbm: f64) -> f64 {
    let signal = dbm_to_mw(rsrp_dbm[serving]);
    let interference: f64 = rsrp_dbm
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != serving)
        .map(|(_, &p)| dbm_to_mw(p))
        .sum();
    mw_to_dbm(signal / (interference + dbm_to_mw(noise_floor_dbm)))
}

/// SINR at `ue_position` when served by `serving`, without shadowing.
pub fn sinr(
    serving: &SectorConfig,
    all_sectors: &[SectorConfig],
    ue_position: &Point,
    params: &PathLossParams,
) -> Result<f64> {
    let Some(serving_idx) = all_sectors
        .iter()
        .position(|s| s.sector_id == serving.sector_id)
    else {
        return Err(Error::InvalidInput(format!(
            "serving sector {} is not part of the sector set",
            serving.sector_id
        )));
    };
    let powers = all_sectors
        .iter()
        .map(|s| rsrp(s, ue_position, params, 0.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(sinr_from_rsrp(serving_idx, &powers, params.noise_floor_dbm))
}

/// Index of the strongest entry; ties go to the lowest index.
pub fn strongest(rsrp_dbm: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in rsrp_dbm.iter().enumerate().skip(1) {
        if p > rsrp_dbm[best] {
            best = i;
        }
    }
    best
}
