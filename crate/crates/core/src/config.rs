//! Scenario configuration.
//!
//! Stored as JSON whose keys mirror [`ScenarioConfig`]. Missing keys take
//! their defaults, unknown keys are rejected, and defaults describe the
//! reference scenario: three sites 500 m apart with three sectors each,
//! 5 MHz (25 PRBs), 46 dBm, 60 km/h UEs, TTT 256 ms, 3 dB hysteresis and
//! MLB thresholds 0.2 / 0.3 / 0.4.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::handover::HandoverParams;
use crate::mlb::{Algorithm, BetaVariant, MlbThresholds};
use crate::mobility::{Region, DEFAULT_SPEED_MPS};
use crate::radio::{tri_site_layout, PathLossParams, SectorConfig};
use crate::scheduler::McsThresholds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub inter_site_distance_m: f64,
    /// Boresight of each site's first sector; the others follow at +120 and +240.
    pub azimuth_offset_deg: f64,
    /// Free space around the sites' bounding box in which UEs roam.
    pub region_margin_m: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            inter_site_distance_m: 500.0,
            azimuth_offset_deg: 30.0,
            region_margin_m: 250.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub tx_power_dbm: f64,
    pub total_prbs: u32,
    pub reference_loss_db: f64,
    pub exponent: f64,
    pub reference_distance_m: f64,
    pub shadowing_stddev_db: f64,
    pub noise_floor_dbm: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        let pl = PathLossParams::default();
        Self {
            tx_power_dbm: 46.0,
            total_prbs: 25,
            reference_loss_db: pl.reference_loss_db,
            exponent: pl.exponent,
            reference_distance_m: pl.reference_distance_m,
            shadowing_stddev_db: pl.shadowing_stddev_db,
            noise_floor_dbm: pl.noise_floor_dbm,
        }
    }
}

impl RadioConfig {
    pub fn path_loss(&self) -> PathLossParams {
        PathLossParams {
            reference_loss_db: self.reference_loss_db,
            exponent: self.exponent,
            reference_distance_m: self.reference_distance_m,
            shadowing_stddev_db: self.shadowing_stddev_db,
            noise_floor_dbm: self.noise_floor_dbm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityConfig {
    pub speed_mps: f64,
    pub heading_redraw_interval_s: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self {
            speed_mps: DEFAULT_SPEED_MPS,
            heading_redraw_interval_s: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    /// Constant downlink rate offered by every UE.
    pub offered_rate_bps: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            offered_rate_bps: DEFAULT_OFFERED_RATE_BPS,
        }
    }
}

/// Per-UE offered load. At 5 Mbps, 37 UEs already push some sectors past
/// their capacity and 75 UEs saturate the whole network.
pub const DEFAULT_OFFERED_RATE_BPS: f64 = 5.0e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Free-form label carried into the KPI tables.
    pub scenario: String,
    pub duration_s: f64,
    pub tick_s: f64,
    pub mlb_period_s: f64,
    pub ue_count: usize,
    pub algorithm: Algorithm,
    pub beta_variant: BetaVariant,
    pub seed: u64,
    pub thresholds: MlbThresholds,
    pub handover: HandoverParams,
    pub topology: TopologyConfig,
    pub radio: RadioConfig,
    pub mcs: McsThresholds,
    pub mobility: MobilityConfig,
    pub traffic: TrafficConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: "default".into(),
            duration_s: 100.0,
            tick_s: 0.01,
            mlb_period_s: 0.2,
            ue_count: 37,
            algorithm: Algorithm::None,
            beta_variant: BetaVariant::Literal,
            seed: 1,
            thresholds: MlbThresholds::default(),
            handover: HandoverParams::default(),
            topology: TopologyConfig::default(),
            radio: RadioConfig::default(),
            mcs: McsThresholds::default(),
            mobility: MobilityConfig::default(),
            traffic: TrafficConfig::default(),
        }
    }
}

/// `value / step` as an integer count, if it is one.
fn whole_multiple(value: f64, step: f64) -> Option<u64> {
    let n = (value / step).round();
    ((n * step - value).abs() <= 1e-9 * value.abs().max(step) && n >= 1.0).then_some(n as u64)
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::config("duration_s", "must be > 0"));
        }
        if !(self.tick_s.is_finite() && self.tick_s > 0.0) {
            return Err(Error::config("tick_s", "must be > 0"));
        }
        if whole_multiple(self.duration_s, self.tick_s).is_none() {
            return Err(Error::config(
                "duration_s",
                "must be a whole number of ticks",
            ));
        }
        if !(self.mlb_period_s.is_finite() && self.mlb_period_s >= self.tick_s) {
            return Err(Error::config("mlb_period_s", "must be >= tick_s"));
        }
        if whole_multiple(self.mlb_period_s, self.tick_s).is_none() {
            return Err(Error::config(
                "mlb_period_s",
                "must be a whole number of ticks",
            ));
        }
        if self.ue_count == 0 {
            return Err(Error::config("ue_count", "must be at least 1"));
        }
        self.thresholds.validate()?;
        self.handover.validate()?;
        self.radio.path_loss().validate()?;
        if !self.radio.tx_power_dbm.is_finite() {
            return Err(Error::config("radio.tx_power_dbm", "must be finite"));
        }
        if self.radio.total_prbs == 0 {
            return Err(Error::config("radio.total_prbs", "must be at least 1"));
        }
        self.mcs.validate()?;
        let t = &self.topology;
        if !(t.inter_site_distance_m.is_finite() && t.inter_site_distance_m > 0.0) {
            return Err(Error::config(
                "topology.inter_site_distance_m",
                "must be > 0",
            ));
        }
        if !t.azimuth_offset_deg.is_finite() {
            return Err(Error::config(
                "topology.azimuth_offset_deg",
                "must be finite",
            ));
        }
        if !(t.region_margin_m.is_finite() && t.region_margin_m >= 0.0) {
            return Err(Error::config("topology.region_margin_m", "must be >= 0"));
        }
        if !(self.mobility.speed_mps.is_finite() && self.mobility.speed_mps >= 0.0) {
            return Err(Error::config("mobility.speed_mps", "must be >= 0"));
        }
        let redraw = self.mobility.heading_redraw_interval_s;
        if !(redraw.is_finite() && redraw >= self.tick_s) {
            return Err(Error::config(
                "mobility.heading_redraw_interval_s",
                "must be >= tick_s",
            ));
        }
        let rate = self.traffic.offered_rate_bps;
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::config("traffic.offered_rate_bps", "must be > 0"));
        }
        Ok(())
    }

    pub fn total_ticks(&self) -> u64 {
        whole_multiple(self.duration_s, self.tick_s).unwrap_or(0)
    }

    pub fn mlb_period_ticks(&self) -> u64 {
        whole_multiple(self.mlb_period_s, self.tick_s).unwrap_or(1)
    }

    pub fn heading_redraw_ticks(&self) -> u64 {
        ((self.mobility.heading_redraw_interval_s / self.tick_s).round() as u64).max(1)
    }

    pub fn sectors(&self) -> Result<Vec<SectorConfig>> {
        tri_site_layout(
            self.topology.inter_site_distance_m,
            self.topology.azimuth_offset_deg,
            self.radio.tx_power_dbm,
            self.radio.total_prbs,
        )
    }

    pub fn region(&self) -> Result<Region> {
        let sites: Vec<_> = self.sectors()?.iter().map(|s| s.site_position).collect();
        Region::enclosing(&sites, self.topology.region_margin_m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_reference_scenario() {
        let c = ScenarioConfig::default();
        c.validate().unwrap();
        assert_eq!(c.total_ticks(), 10_000);
        assert_eq!(c.mlb_period_ticks(), 20);
        assert_eq!(c.heading_redraw_ticks(), 1000);
        assert_eq!(c.radio.tx_power_dbm, 46.0);
        assert_eq!(c.radio.total_prbs, 25);
        assert_eq!(c.handover.ttt_s, 0.256);
        assert_eq!(c.handover.default_hysteresis_db, 3.0);
        assert_eq!(c.mobility.speed_mps, 16.6667);
        assert_eq!(c.sectors().unwrap().len(), 9);
        let r = c.region().unwrap();
        assert_eq!((r.x_min, r.x_max, r.y_min), (-250.0, 750.0, -250.0));
        assert!((r.y_max - (250.0 * 3f64.sqrt() + 250.0)).abs() < 1e-9);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c = ScenarioConfig::from_json(
            r#"{"ue_count": 56, "algorithm": "mlb2", "thresholds": {"th_pre": 0.1}}"#,
        )
        .unwrap();
        assert_eq!(c.ue_count, 56);
        assert_eq!(c.algorithm, Algorithm::Mlb2);
        assert_eq!(c.thresholds.th_pre, 0.1);
        assert_eq!(c.thresholds.th_post, 0.4);
        assert_eq!(c.duration_s, 100.0);
    }

    #[test]
    fn round_trips_through_json() {
        let c = ScenarioConfig {
            seed: 99,
            ..Default::default()
        };
        assert_eq!(ScenarioConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn radio_keys_are_flat() {
        let c = ScenarioConfig::from_json(r#"{"radio": {"exponent": 3.0, "tx_power_dbm": 43}}"#)
            .unwrap();
        assert_eq!(c.radio.path_loss().exponent, 3.0);
        assert_eq!(c.radio.tx_power_dbm, 43.0);
    }

    fn rejected_key(json: &str) -> String {
        match ScenarioConfig::from_json(json).unwrap_err() {
            Error::InvalidConfig { key, .. } => key,
            other => panic!("expected InvalidConfig, got {other}"),
        }
    }

    #[test]
    fn diagnostics_name_the_key() {
        assert_eq!(rejected_key(r#"{"duration_s": 0}"#), "duration_s");
        assert_eq!(rejected_key(r#"{"tick_s": 0.003}"#), "duration_s");
        assert_eq!(rejected_key(r#"{"mlb_period_s": 0.001}"#), "mlb_period_s");
        assert_eq!(rejected_key(r#"{"ue_count": 0}"#), "ue_count");
        assert_eq!(
            rejected_key(r#"{"thresholds": {"th_avail": 0.5}}"#),
            "thresholds.th_post"
        );
        assert_eq!(
            rejected_key(r#"{"radio": {"exponent": -1}}"#),
            "radio.exponent"
        );
        assert_eq!(
            rejected_key(r#"{"traffic": {"offered_rate_bps": 0}}"#),
            "traffic.offered_rate_bps"
        );
        assert_eq!(
            rejected_key(r#"{"handover": {"ttt_s": -0.1}}"#),
            "handover.ttt_s"
        );
    }

    #[test]
    fn unknown_keys_are_parse_errors_naming_the_key() {
        let err = ScenarioConfig::from_json(r#"{"ue_cout": 3}"#).unwrap_err();
        assert!(matches!(err, Error::ConfigParse(_)));
        assert!(err.to_string().contains("ue_cout"));
        let err = ScenarioConfig::from_json(r#"{"algorithm": "mlb9"}"#).unwrap_err();
        assert!(err.to_string().contains("mlb9"));
    }
}
