//! Downlink PRB scheduling for one sector.
//!
//! Link adaptation picks one of three representative MCS indices from the
//! UE's SINR. The cell capacity of each modulation class over 25 PRBs
//! (5 MHz) fixes a per-PRB rate; each flow asks for enough whole PRBs to
//! carry its constant offered rate, and PRBs are handed out round-robin.
//! Whatever a flow does not get is lost that tick (no queueing).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of PRBs the class capacities are quoted for.
pub const REFERENCE_PRBS: u32 = 25;
pub const MAX_MCS: u8 = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModulationClass {
    Qpsk,
    Qam16,
    Qam64,
}

impl ModulationClass {
    /// Cell capacity at 25 PRBs, Mbps.
    pub fn capacity_mbps(self) -> f64 {
        match self {
            ModulationClass::Qpsk => 13.2,
            ModulationClass::Qam16 => 26.4,
            ModulationClass::Qam64 => 39.6,
        }
    }

    pub fn per_prb_rate_bps(self) -> f64 {
        self.capacity_mbps() * 1e6 / REFERENCE_PRBS as f64
    }
}

/// MCS 0-9 QPSK, 10-16 16QAM, 17-28 64QAM.
pub fn modulation_class(mcs: u8) -> Result<ModulationClass> {
    match mcs {
        0..=9 => Ok(ModulationClass::Qpsk),
        10..=16 => Ok(ModulationClass::Qam16),
        17..=MAX_MCS => Ok(ModulationClass::Qam64),
        _ => Err(Error::InvalidInput(format!(
            "MCS index {mcs} outside 0..=28"
        ))),
    }
}

/// SINR switching points between the three MCS tiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McsThresholds {
    pub qam16_min_sinr_db: f64,
    pub qam64_min_sinr_db: f64,
}

impl Default for McsThresholds {
    fn default() -> Self {
        Self {
            qam16_min_sinr_db: 5.0,
            qam64_min_sinr_db: 14.0,
        }
    }
}

impl McsThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.qam16_min_sinr_db.is_finite() && self.qam64_min_sinr_db.is_finite()) {
            return Err(Error::config("mcs", "thresholds must be finite"));
        }
        if self.qam64_min_sinr_db <= self.qam16_min_sinr_db {
            return Err(Error::config(
                "mcs.qam64_min_sinr_db",
                "must exceed qam16_min_sinr_db",
            ));
        }
        Ok(())
    }
}

pub const QPSK_TIER_MCS: u8 = 5;
pub const QAM16_TIER_MCS: u8 = 12;
pub const QAM64_TIER_MCS: u8 = 20;

pub fn mcs_from_sinr(sinr_db: f64, th: &McsThresholds) -> u8 {
    if sinr_db >= th.qam64_min_sinr_db {
        QAM64_TIER_MCS
    } else if sinr_db >= th.qam16_min_sinr_db {
        QAM16_TIER_MCS
    } else {
        QPSK_TIER_MCS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub ue_id: usize,
    pub offered_rate_bps: f64,
    pub serving_sector: usize,
}

/// Whole PRBs needed to carry the flow's rate at `mcs`. Rates, not bits,
/// so the answer does not depend on `dt`.
pub fn prbs_required(flow: &Flow, mcs: u8, dt: f64) -> Result<u32> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tick must be positive, got {dt}"
        )));
    }
    if !(flow.offered_rate_bps.is_finite() && flow.offered_rate_bps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "UE {}: offered rate must be positive",
            flow.ue_id
        )));
    }
    let per_prb = modulation_class(mcs)?.per_prb_rate_bps();
    // absorb rounding noise at exact multiples of the per-PRB rate
    let exact = flow.offered_rate_bps / per_prb;
    Ok((exact - 1e-9).ceil().max(1.0) as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grant {
    pub ue_id: usize,
    pub mcs: u8,
    pub required: u32,
    pub granted: u32,
    pub offered_bits: f64,
    pub served_bits: f64,
}

impl Grant {
    pub fn lost_bits(&self) -> f64 {
        self.offered_bits - self.served_bits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub sector_id: usize,
    pub grants: Vec<Grant>,
    pub offered_bits: f64,
    pub served_bits: f64,
    pub lost_bits: f64,
    pub granted_prbs: u32,
    pub v_ar: u32,
    pub v_tr: u32,
}

impl AllocationResult {
    pub fn free_ratio(&self) -> f64 {
        self.v_ar as f64 / self.v_tr as f64
    }
}

/// Allocates one tick of PRBs among `flows` (paired with their MCS).
///
/// PRBs are granted one at a time, cycling over flows in `ue_id` order,
/// until each flow has what it needs or the sector runs out.
pub fn allocate(
    sector_id: usize,
    total_prbs: u32,
    flows: &[(Flow, u8)],
    dt: f64,
) -> Result<AllocationResult> {
    let mut order: Vec<&(Flow, u8)> = flows.iter().collect();
    order.sort_by_key(|(f, _)| f.ue_id);

    let mut grants = Vec::with_capacity(order.len());
    for (flow, mcs) in &order {
        if flow.serving_sector != sector_id {
            return Err(Error::InvalidInput(format!(
                "UE {} is attached to sector {}, not {sector_id}",
                flow.ue_id, flow.serving_sector
            )));
        }
        grants.push(Grant {
            ue_id: flow.ue_id,
            mcs: *mcs,
            required: prbs_required(flow, *mcs, dt)?,
            granted: 0,
            offered_bits: flow.offered_rate_bps * dt,
            served_bits: 0.0,
        });
    }

    let mut remaining = total_prbs;
    let mut progress = true;
    while remaining > 0 && progress {
        progress = false;
        for g in grants.iter_mut() {
            if remaining == 0 {
                break;
            }
            if g.granted < g.required {
                g.granted += 1;
                remaining -= 1;
                progress = true;
            }
        }
    }

    let (mut offered, mut served) = (0.0, 0.0);
    for g in grants.iter_mut() {
        g.served_bits = if g.granted >= g.required {
            g.offered_bits
        } else {
            g.granted as f64 / g.required as f64 * g.offered_bits
        };
        offered += g.offered_bits;
        served += g.served_bits;
    }

    Ok(AllocationResult {
        sector_id,
        grants,
        offered_bits: offered,
        served_bits: served,
        lost_bits: offered - served,
        granted_prbs: total_prbs - remaining,
        v_ar: remaining,
        v_tr: total_prbs,
    })
}
