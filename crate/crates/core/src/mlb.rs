//! Distributed mobility load balancing.
//!
//! Each sector compares its free-PRB ratio `V_AR / V_TR` against three
//! thresholds:
//!
//! ```text
//!   0 ──── th_pre ──── th_avail ──── th_post ──── 1
//!     overloaded         │  mid band   │   ample
//! ```
//!
//! A sector whose own ratio drops below `th_pre` activates MLB and rewrites
//! its hysteresis toward each neighbour as `alpha * base`, where `alpha`
//! depends on the neighbour's ratio: 0 above `th_post`, a slope `beta`
//! inside `[th_avail, th_post]`, and 1 below `th_avail`. MLB switches off
//! once the sector's own ratio rises above `th_post`, and the original
//! hysteresis is restored. Between the two edges nothing changes, which
//! keeps the controller from oscillating.
//!
//! Only the overloaded sector's own table is touched; neighbours keep
//! their hysteresis.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::handover::HysteresisTable;

/// Grid onto which adapted hysteresis values are snapped.
pub const HYSTERESIS_STEP_DB: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Plain A3 handover, no load balancing.
    None,
    /// Linear `beta` in the neighbour's free ratio.
    Mlb1,
    /// Constant `beta = 0.5`.
    Mlb2,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::None, Algorithm::Mlb1, Algorithm::Mlb2];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::None => "none",
            Algorithm::Mlb1 => "mlb1",
            Algorithm::Mlb2 => "mlb2",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Algorithm::None),
            "mlb1" => Ok(Algorithm::Mlb1),
            "mlb2" => Ok(Algorithm::Mlb2),
            other => Err(Error::config(
                "algorithm",
                format!("unknown algorithm `{other}` (expected none, mlb1 or mlb2)"),
            )),
        }
    }
}

/// Orientation of the `Mlb1` slope inside the mid band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaVariant {
    /// `(th_avail - r) / (th_avail - th_post)`: 0 at `th_avail`, 1 at `th_post`.
    #[default]
    Literal,
    /// `(th_post - r) / (th_post - th_avail)`: 1 at `th_avail`, 0 at `th_post`,
    /// continuous with both outer branches.
    Continuous,
}

impl BetaVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            BetaVariant::Literal => "literal",
            BetaVariant::Continuous => "continuous",
        }
    }
}

impl fmt::Display for BetaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BetaVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "literal" => Ok(BetaVariant::Literal),
            "continuous" => Ok(BetaVariant::Continuous),
            other => Err(Error::config(
                "beta_variant",
                format!("unknown beta variant `{other}` (expected literal or continuous)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlbThresholds {
    /// Activation: own free ratio strictly below this.
    pub th_pre: f64,
    /// Cooperation: neighbour free ratio strictly above this.
    pub th_avail: f64,
    /// Deactivation: own free ratio strictly above this.
    pub th_post: f64,
}

impl Default for MlbThresholds {
    fn default() -> Self {
        Self {
            th_pre: 0.2,
            th_avail: 0.3,
            th_post: 0.4,
        }
    }
}

impl MlbThresholds {
    pub fn new(th_pre: f64, th_avail: f64, th_post: f64) -> Result<Self> {
        let th = Self {
            th_pre,
            th_avail,
            th_post,
        };
        th.validate()?;
        Ok(th)
    }

    /// Requires `0 <= th_pre < th_avail < th_post < 1`. A zero `th_pre`
    /// is accepted: it disables activation, since no ratio is below 0.
    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.th_pre, self.th_avail, self.th_post]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite || self.th_pre < 0.0 {
            return Err(Error::config(
                "thresholds.th_pre",
                "must be finite and >= 0",
            ));
        }
        if self.th_avail <= self.th_pre {
            return Err(Error::config("thresholds.th_avail", "must exceed th_pre"));
        }
        if self.th_post <= self.th_avail {
            return Err(Error::config("thresholds.th_post", "must exceed th_avail"));
        }
        if self.th_post >= 1.0 {
            return Err(Error::config("thresholds.th_post", "must be below 1"));
        }
        Ok(())
    }
}

/// Resource snapshot one sector shares with its neighbours each period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub sector_id: usize,
    /// Available (free) PRBs, averaged over the reporting period.
    pub v_ar: f64,
    /// Total PRBs.
    pub v_tr: f64,
}

impl LoadReport {
    pub fn new(sector_id: usize, v_ar: f64, v_tr: f64) -> Result<Self> {
        if !(v_tr.is_finite() && v_tr > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sector {sector_id}: total resources must be positive, got {v_tr}"
            )));
        }
        if !(v_ar.is_finite() && (0.0..=v_tr).contains(&v_ar)) {
            return Err(Error::InvalidInput(format!(
                "sector {sector_id}: available resources {v_ar} outside [0, {v_tr}]"
            )));
        }
        Ok(Self {
            sector_id,
            v_ar,
            v_tr,
        })
    }

    /// Report carrying a given free ratio over 25 PRBs.
    pub fn from_ratio(sector_id: usize, ratio: f64) -> Result<Self> {
        Self::new(sector_id, ratio * 25.0, 25.0)
    }

    pub fn ratio(&self) -> f64 {
        self.v_ar / self.v_tr
    }
}

pub fn is_overloaded(report: &LoadReport, th: &MlbThresholds) -> bool {
    report.ratio() < th.th_pre
}

pub fn should_deactivate(report: &LoadReport, th: &MlbThresholds) -> bool {
    report.ratio() > th.th_post
}

pub fn neighbor_eligible(report: &LoadReport, th: &MlbThresholds) -> bool {
    report.ratio() > th.th_avail
}

/// Mid-band weight. `Mlb2` is always 0.5; `Mlb1` is a linear slope whose
/// orientation depends on `variant`. `None` has no adaptation and yields 1.
pub fn beta(
    ratio: f64,
    th: &MlbThresholds,
    algorithm: Algorithm,
    variant: BetaVariant,
) -> Result<f64> {
    let value = match algorithm {
        Algorithm::None => 1.0,
        Algorithm::Mlb2 => 0.5,
        Algorithm::Mlb1 => {
            let width = th.th_post - th.th_avail;
            if width == 0.0 {
                return Err(Error::config(
                    "thresholds.th_post",
                    "th_avail == th_post leaves the mid band empty",
                ));
            }
            match variant {
                BetaVariant::Literal => (th.th_avail - ratio) / (th.th_avail - th.th_post),
                BetaVariant::Continuous => (th.th_post - ratio) / width,
            }
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Hysteresis scale toward a neighbour with free ratio `ratio`.
pub fn alpha(
    ratio: f64,
    th: &MlbThresholds,
    algorithm: Algorithm,
    variant: BetaVariant,
) -> Result<f64> {
    if algorithm == Algorithm::None {
        return Ok(1.0);
    }
    if ratio > th.th_post {
        Ok(0.0)
    } else if ratio >= th.th_avail {
        beta(ratio, th, algorithm, variant)
    } else {
        Ok(1.0)
    }
}

/// `alpha * base` before quantization.
pub fn raw_hysteresis(base_db: f64, alpha: f64) -> f64 {
    alpha * base_db
}

/// Snaps a non-negative dB value to the 0.5 dB grid; exact midpoints go
/// toward zero.
pub fn quantize_hysteresis(db: f64) -> f64 {
    let steps = db / HYSTERESIS_STEP_DB;
    let lower = steps.floor();
    let snapped = if steps - lower > 0.5 {
        lower + 1.0
    } else {
        lower
    };
    snapped * HYSTERESIS_STEP_DB
}

/// Adapted hysteresis `alpha * base`, on the 0.5 dB grid and never above
/// `base`.
pub fn effective_hysteresis(base_db: f64, alpha: f64) -> f64 {
    let q = quantize_hysteresis(raw_hysteresis(base_db, alpha));
    if q > base_db {
        q - HYSTERESIS_STEP_DB
    } else {
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MlbPhase {
    Inactive,
    Active,
}

impl MlbPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            MlbPhase::Inactive => "inactive",
            MlbPhase::Active => "active",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlbState {
    pub sector_id: usize,
    pub phase: MlbPhase,
    /// Current scale per neighbour; empty while inactive.
    pub alpha: BTreeMap<usize, f64>,
    pub algorithm: Algorithm,
    pub beta_variant: BetaVariant,
}

impl MlbState {
    pub fn new(sector_id: usize, algorithm: Algorithm, beta_variant: BetaVariant) -> Self {
        Self {
            sector_id,
            phase: MlbPhase::Inactive,
            alpha: BTreeMap::new(),
            algorithm,
            beta_variant,
        }
    }
}

/// Broadcast to the UEs of a sector whenever its hysteresis table changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementControlMessage {
    pub sector_id: usize,
    pub timestamp: f64,
    /// `(neighbour, effective hysteresis)` for every neighbour.
    pub hysteresis_db: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HysteresisUpdate {
    pub serving: usize,
    pub neighbor: usize,
    pub effective_db: f64,
    pub raw_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborDecision {
    pub neighbor: usize,
    /// `None` when no report arrived this period.
    pub ratio: Option<f64>,
    pub alpha: f64,
    pub raw_db: f64,
    pub effective_db: f64,
}

/// One controller evaluation, as written to the decision log.
#[derive(Debug, Clone, PartialEq)]
pub struct MlbDecision {
    pub timestamp: f64,
    pub sector_id: usize,
    pub phase: MlbPhase,
    pub own_ratio: f64,
    pub neighbors: Vec<NeighborDecision>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlbTickOutput {
    pub state: MlbState,
    /// Only entries whose effective value differs from the current table.
    pub updates: Vec<HysteresisUpdate>,
    pub message: Option<MeasurementControlMessage>,
    pub decision: MlbDecision,
}

/// Inputs shared by every controller evaluation in a period.
#[derive(Debug, Clone, Copy)]
pub struct MlbContext<'a> {
    pub thresholds: &'a MlbThresholds,
    pub base_hysteresis_db: f64,
    pub timestamp: f64,
}

/// Runs one controller period for the sector owning `state`.
///
/// `neighbor_reports` maps neighbour id to its latest report; neighbours in
/// `neighbors` without a report are treated as unable to cooperate. The
/// table is read only; changed entries come back in `updates` for the
/// caller to apply.
pub fn mlb_tick(
    state: &MlbState,
    own_report: &LoadReport,
    neighbors: &[usize],
    neighbor_reports: &BTreeMap<usize, LoadReport>,
    table: &HysteresisTable,
    ctx: &MlbContext<'_>,
) -> Result<MlbTickOutput> {
    let th = ctx.thresholds;
    let base = ctx.base_hysteresis_db;
    let serving = state.sector_id;
    let mut next = state.clone();

    next.phase = match (state.algorithm, state.phase) {
        (Algorithm::None, _) => MlbPhase::Inactive,
        (_, MlbPhase::Inactive) if is_overloaded(own_report, th) => MlbPhase::Active,
        (_, MlbPhase::Active) if should_deactivate(own_report, th) => MlbPhase::Inactive,
        (_, phase) => phase,
    };

    let mut decisions = Vec::with_capacity(neighbors.len());
    next.alpha.clear();
    for &neighbor in neighbors.iter().filter(|&&n| n != serving) {
        let report = neighbor_reports.get(&neighbor);
        let ratio = report.map(LoadReport::ratio);
        let (a, raw, effective) = if next.phase == MlbPhase::Active {
            let a = match report {
                Some(r) if neighbor_eligible(r, th) => {
                    alpha(r.ratio(), th, state.algorithm, state.beta_variant)?
                }
                _ => 1.0,
            };
            next.alpha.insert(neighbor, a);
            (a, raw_hysteresis(base, a), effective_hysteresis(base, a))
        } else {
            (1.0, base, base)
        };
        decisions.push(NeighborDecision {
            neighbor,
            ratio,
            alpha: a,
            raw_db: raw,
            effective_db: effective,
        });
    }

    let updates: Vec<HysteresisUpdate> = if state.algorithm == Algorithm::None {
        Vec::new()
    } else {
        decisions
            .iter()
            .filter(|d| table.get(serving, d.neighbor) != d.effective_db)
            .map(|d| HysteresisUpdate {
                serving,
                neighbor: d.neighbor,
                effective_db: d.effective_db,
                raw_db: d.raw_db,
            })
            .collect()
    };

    let message = (!updates.is_empty()).then(|| MeasurementControlMessage {
        sector_id: serving,
        timestamp: ctx.timestamp,
        hysteresis_db: decisions
            .iter()
            .map(|d| (d.neighbor, d.effective_db))
            .collect(),
    });

    let decision = MlbDecision {
        timestamp: ctx.timestamp,
        sector_id: serving,
        phase: next.phase,
        own_ratio: own_report.ratio(),
        neighbors: decisions,
    };

    Ok(MlbTickOutput {
        state: next,
        updates,
        message,
        decision,
    })
}

/// Writes `updates` into the table in order.
pub fn apply_updates(table: &mut HysteresisTable, updates: &[HysteresisUpdate]) {
    for u in updates {
        table.set(u.serving, u.neighbor, u.effective_db, u.raw_db);
    }
}
