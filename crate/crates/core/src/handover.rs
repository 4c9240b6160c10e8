//! A3-event handover: the neighbour must beat the serving cell by more than
//! the per-neighbour hysteresis, continuously, for the time-to-trigger.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobility::UeState;
use crate::radio::Measurement;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HandoverParams {
    pub default_hysteresis_db: f64,
    /// Time-to-trigger in seconds.
    pub ttt_s: f64,
}

impl Default for HandoverParams {
    fn default() -> Self {
        Self {
            default_hysteresis_db: 3.0,
            ttt_s: 0.256,
        }
    }
}

impl HandoverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.default_hysteresis_db.is_finite() && self.default_hysteresis_db >= 0.0) {
            return Err(Error::config(
                "handover.default_hysteresis_db",
                "must be >= 0",
            ));
        }
        if !(self.ttt_s.is_finite() && self.ttt_s >= 0.0) {
            return Err(Error::config("handover.ttt_s", "must be >= 0"));
        }
        Ok(())
    }
}

/// Effective hysteresis per (serving, neighbour) sector pair.
///
/// Alongside the quantized value actually used by the A3 check, the table
/// keeps the unquantized product that produced it, for logging.
#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisTable {
    sectors: usize,
    default_db: f64,
    effective: Vec<f64>,
    raw: Vec<f64>,
}

impl HysteresisTable {
    pub fn new(sectors: usize, default_db: f64) -> Self {
        Self {
            sectors,
            default_db,
            effective: vec![default_db; sectors * sectors],
            raw: vec![default_db; sectors * sectors],
        }
    }

    pub fn sectors(&self) -> usize {
        self.sectors
    }

    pub fn default_db(&self) -> f64 {
        self.default_db
    }

    pub fn get(&self, serving: usize, neighbor: usize) -> f64 {
        self.effective[serving * self.sectors + neighbor]
    }

    pub fn raw(&self, serving: usize, neighbor: usize) -> f64 {
        self.raw[serving * self.sectors + neighbor]
    }

    pub fn set(&mut self, serving: usize, neighbor: usize, effective_db: f64, raw_db: f64) {
        let i = serving * self.sectors + neighbor;
        self.effective[i] = effective_db;
        self.raw[i] = raw_db;
    }

    /// True when every entry of `serving` toward other sectors is the default.
    pub fn is_default_for(&self, serving: usize) -> bool {
        (0..self.sectors)
            .filter(|&n| n != serving)
            .all(|n| self.get(serving, n) == self.default_db)
    }
}

/// Per-neighbour time the A3 condition has held continuously, for one UE.
#[derive(Debug, Clone, PartialEq)]
pub struct A3Timer {
    accumulated: Vec<f64>,
}

impl A3Timer {
    pub fn new(sectors: usize) -> Self {
        Self {
            accumulated: vec![0.0; sectors],
        }
    }

    pub fn get(&self, neighbor: usize) -> f64 {
        self.accumulated[neighbor]
    }

    pub fn reset(&mut self) {
        self.accumulated.iter_mut().for_each(|a| *a = 0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HandoverCause {
    /// Triggered under the default hysteresis.
    A3,
    /// Triggered under a hysteresis lowered by the MLB controller.
    MlbInducedA3,
}

impl HandoverCause {
    pub fn as_str(self) -> &'static str {
        match self {
            HandoverCause::A3 => "a3",
            HandoverCause::MlbInducedA3 => "mlb-induced-a3",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandoverEvent {
    pub timestamp: f64,
    pub ue_id: usize,
    pub source: usize,
    pub target: usize,
    pub cause: HandoverCause,
    pub hysteresis_db: f64,
}

/// Strict A3 entry condition: `neighbor - serving > hysteresis`.
pub fn a3_condition(rsrp_serving: f64, rsrp_neighbor: f64, hysteresis: f64) -> bool {
    rsrp_neighbor - rsrp_serving > hysteresis
}

/// Advances the UE's A3 timers by one measurement.
///
/// Each neighbour accumulates `dt` while its condition holds and is reset
/// the first tick it fails. Once one or more neighbours have held for the
/// full time-to-trigger, the strongest of them (lowest id on ties) is
/// returned as the target and all of the UE's timers restart.
pub fn update_a3(
    ue: &UeState,
    timer: &mut A3Timer,
    measurement: &Measurement,
    table: &HysteresisTable,
    params: &HandoverParams,
    dt: f64,
) -> Option<HandoverEvent> {
    let serving = ue.serving_sector;
    let serving_rsrp = measurement.rsrp_dbm[serving];
    let mut best: Option<usize> = None;
    for (neighbor, &neighbor_rsrp) in measurement.rsrp_dbm.iter().enumerate() {
        if neighbor == serving {
            timer.accumulated[neighbor] = 0.0;
            continue;
        }
        let hys = table.get(serving, neighbor);
        let acc = &mut timer.accumulated[neighbor];
        if !a3_condition(serving_rsrp, neighbor_rsrp, hys) {
            *acc = 0.0;
            continue;
        }
        *acc = (*acc + dt).min(params.ttt_s);
        if *acc >= params.ttt_s {
            // strict `>` keeps the lower id on equal RSRP
            if best.is_none_or(|b| neighbor_rsrp > measurement.rsrp_dbm[b]) {
                best = Some(neighbor);
            }
        }
    }
    let target = best?;
    timer.reset();
    let hysteresis_db = table.get(serving, target);
    let cause = if hysteresis_db < table.default_db() {
        HandoverCause::MlbInducedA3
    } else {
        HandoverCause::A3
    };
    Some(HandoverEvent {
        timestamp: measurement.timestamp,
        ue_id: ue.ue_id,
        source: serving,
        target,
        cause,
        hysteresis_db,
    })
}

/// Log of executed handovers; every executed handover is successful.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HandoverLog {
    pub events: Vec<HandoverEvent>,
}

impl HandoverLog {
    pub fn successful(&self) -> u64 {
        self.events.len() as u64
    }
}

/// Re-attaches the UE to the event's target. Returns `false` (and records
/// nothing) when the target equals the current serving sector.
pub fn execute_handover(
    ue: &mut UeState,
    event: &HandoverEvent,
    sectors: usize,
    log: &mut HandoverLog,
) -> Result<bool> {
    if event.target >= sectors {
        return Err(Error::InvalidInput(format!(
            "handover target {} does not exist ({} sectors)",
            event.target, sectors
        )));
    }
    if event.target == ue.serving_sector {
        return Ok(false);
    }
    ue.serving_sector = event.target;
    log.events.push(event.clone());
    Ok(true)
}
