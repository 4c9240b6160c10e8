//! The tick loop.
//!
//! Each tick runs, in order: mobility, measurements, A3 timers, handover
//! execution (in `ue_id` order), PRB scheduling and KPI accumulation. On
//! MLB period boundaries, after scheduling, every sector reports its
//! period-averaged free PRBs and the controllers run in sector order.
//!
//! A UE that hands over during a tick is still scheduled by its source
//! sector that tick; its flow moves to the target on the next one.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::handover::{
    execute_handover, update_a3, A3Timer, HandoverCause, HandoverEvent, HandoverLog,
    HysteresisTable,
};
use crate::mlb::{
    apply_updates, mlb_tick, Algorithm, BetaVariant, LoadReport, MeasurementControlMessage,
    MlbContext, MlbDecision, MlbPhase, MlbState,
};
use crate::mobility::{self, Region, UeState};
use crate::radio::{self, Measurement, PathLossParams, SectorConfig};
use crate::rng::{stream_rng, Stream};
use crate::scheduler::{allocate, mcs_from_sinr, Flow};

/// What to keep beyond the run totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub record_tick_series: bool,
    pub record_sector_load: bool,
    pub record_decisions: bool,
    /// Sample every UE position every this many ticks.
    pub trajectory_stride: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            record_tick_series: true,
            record_sector_load: true,
            record_decisions: true,
            trajectory_stride: None,
        }
    }
}

impl RunOptions {
    /// Totals, handover log and control messages only.
    pub fn summary() -> Self {
        Self {
            record_tick_series: false,
            record_sector_load: false,
            record_decisions: false,
            trajectory_stride: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TickKpi {
    pub time: f64,
    pub offered_bits: f64,
    pub served_bits: f64,
    pub lost_bits: f64,
    pub handovers: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorLoadRecord {
    pub time: f64,
    pub sector: usize,
    pub offered_bits: f64,
    pub served_bits: f64,
    pub lost_bits: f64,
    pub granted_prbs: u32,
    pub v_ar: u32,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub ue_id: usize,
    pub x: f64,
    pub y: f64,
}

/// Worst values seen by the per-tick, per-sector invariant checks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConservationCheck {
    /// `|served + lost - offered| / offered`.
    pub max_relative_error: f64,
    pub max_granted_prbs: u32,
    pub max_sector_throughput_mbps: f64,
    /// Ticks on which some inactive sector had a non-default table entry.
    pub inactive_table_violations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpiRecord {
    pub scenario: String,
    pub algorithm: Algorithm,
    pub beta_variant: BetaVariant,
    pub ue_count: usize,
    pub seed: u64,
    pub ticks: u64,
    pub duration_s: f64,
    /// Mean served downlink throughput of the whole network.
    pub throughput_mbps: f64,
    /// Lost bits over offered bits.
    pub loss_ratio: f64,
    pub ho_count: u64,
    pub mlb_induced_ho_count: u64,
    pub control_messages: u64,
    pub offered_bits: f64,
    pub served_bits: f64,
    pub lost_bits: f64,
    pub sector_throughput_mbps: Vec<f64>,
    pub sector_offered_bits: Vec<f64>,
    pub sector_served_bits: Vec<f64>,
    pub sector_lost_bits: Vec<f64>,
    pub series: Vec<TickKpi>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub kpi: KpiRecord,
    pub handovers: Vec<HandoverEvent>,
    pub messages: Vec<MeasurementControlMessage>,
    pub decisions: Vec<MlbDecision>,
    pub sector_load: Vec<SectorLoadRecord>,
    pub trajectories: Vec<TrajectoryPoint>,
    pub conservation: ConservationCheck,
}

pub struct Simulation {
    config: ScenarioConfig,
    options: RunOptions,
    sectors: Vec<SectorConfig>,
    region: Region,
    path_loss: PathLossParams,
    neighbors: Vec<Vec<usize>>,
    ues: Vec<UeState>,
    ue_rngs: Vec<ChaCha8Rng>,
    /// `ue * sectors + sector`, frozen for the run.
    shadowing: Vec<f64>,
    timers: Vec<A3Timer>,
    table: HysteresisTable,
    mlb: Vec<MlbState>,
    tick: u64,
    total_ticks: u64,
    period_ticks: u64,
    redraw_ticks: u64,
    free_prb_sum: Vec<f64>,
    log: HandoverLog,
    messages: Vec<MeasurementControlMessage>,
    decisions: Vec<MlbDecision>,
    sector_load: Vec<SectorLoadRecord>,
    trajectories: Vec<TrajectoryPoint>,
    series: Vec<TickKpi>,
    sector_offered: Vec<f64>,
    sector_served: Vec<f64>,
    sector_lost: Vec<f64>,
    conservation: ConservationCheck,
}

impl Simulation {
    pub fn new(config: ScenarioConfig, options: RunOptions) -> Result<Self> {
        config.validate()?;
        let sectors = config.sectors()?;
        let region = config.region()?;
        let path_loss = config.radio.path_loss();
        let n = sectors.len();

        let shadowing = draw_shadowing(
            config.seed,
            config.ue_count,
            n,
            path_loss.shadowing_stddev_db,
        )?;

        let (ues, ue_rngs) = {
            let mut attach_err = None;
            let result = mobility::init_ues(
                config.ue_count,
                &region,
                config.mobility.speed_mps,
                config.seed,
                |ue_id, pos| match measure_rsrp(
                    &sectors,
                    pos,
                    &path_loss,
                    &shadowing[ue_id * n..(ue_id + 1) * n],
                ) {
                    Ok(p) => radio::strongest(&p),
                    Err(e) => {
                        attach_err.get_or_insert(e);
                        0
                    }
                },
            )?;
            if let Some(e) = attach_err {
                return Err(e);
            }
            result
        };

        let neighbors = (0..n)
            .map(|s| (0..n).filter(|&o| o != s).collect())
            .collect();
        let mlb = (0..n)
            .map(|s| MlbState::new(s, config.algorithm, config.beta_variant))
            .collect();

        Ok(Self {
            options,
            region,
            path_loss,
            neighbors,
            timers: vec![A3Timer::new(n); config.ue_count],
            table: HysteresisTable::new(n, config.handover.default_hysteresis_db),
            mlb,
            tick: 0,
            total_ticks: config.total_ticks(),
            period_ticks: config.mlb_period_ticks(),
            redraw_ticks: config.heading_redraw_ticks(),
            free_prb_sum: vec![0.0; n],
            log: HandoverLog::default(),
            messages: Vec::new(),
            decisions: Vec::new(),
            sector_load: Vec::new(),
            trajectories: Vec::new(),
            series: Vec::new(),
            sector_offered: vec![0.0; n],
            sector_served: vec![0.0; n],
            sector_lost: vec![0.0; n],
            conservation: ConservationCheck::default(),
            ues,
            ue_rngs,
            shadowing,
            sectors,
            config,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn sectors(&self) -> &[SectorConfig] {
        &self.sectors
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn ues(&self) -> &[UeState] {
        &self.ues
    }

    pub fn hysteresis_table(&self) -> &HysteresisTable {
        &self.table
    }

    pub fn mlb_states(&self) -> &[MlbState] {
        &self.mlb
    }

    pub fn handovers(&self) -> &[HandoverEvent] {
        &self.log.events
    }

    /// Ticks processed so far.
    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn total_ticks(&self) -> u64 {
        self.total_ticks
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.config.tick_s
    }

    pub fn is_finished(&self) -> bool {
        self.tick >= self.total_ticks
    }

    fn measure(&self, ue: &UeState, timestamp: f64) -> Result<Measurement> {
        let n = self.sectors.len();
        let shadow = &self.shadowing[ue.ue_id * n..(ue.ue_id + 1) * n];
        let rsrp_dbm = measure_rsrp(&self.sectors, &ue.position, &self.path_loss, shadow)?;
        let serving_sinr_db =
            radio::sinr_from_rsrp(ue.serving_sector, &rsrp_dbm, self.path_loss.noise_floor_dbm);
        Ok(Measurement {
            ue_id: ue.ue_id,
            rsrp_dbm,
            serving_sinr_db,
            timestamp,
        })
    }

    /// Advances one tick. Returns `false` once the configured duration has
    /// been simulated (and then does nothing).
    pub fn step(&mut self) -> Result<bool> {
        if self.is_finished() {
            return Ok(false);
        }
        let dt = self.config.tick_s;
        let tick_no = self.tick + 1;
        let now = tick_no as f64 * dt;
        let n = self.sectors.len();

        for (ue, rng) in self.ues.iter_mut().zip(self.ue_rngs.iter_mut()) {
            *ue = mobility::step(ue, dt, &self.region);
            if tick_no.is_multiple_of(self.redraw_ticks) {
                mobility::redraw_heading(ue, rng);
            }
        }
        if let Some(stride) = self.options.trajectory_stride {
            if stride > 0 && tick_no.is_multiple_of(stride) {
                self.trajectories
                    .extend(self.ues.iter().map(|u| TrajectoryPoint {
                        time: now,
                        ue_id: u.ue_id,
                        x: u.position.x,
                        y: u.position.y,
                    }));
            }
        }

        let measurements = self
            .ues
            .iter()
            .map(|ue| self.measure(ue, now))
            .collect::<Result<Vec<_>>>()?;

        let mut events = Vec::new();
        for (ue, m) in self.ues.iter().zip(&measurements) {
            if let Some(ev) = update_a3(
                ue,
                &mut self.timers[ue.ue_id],
                m,
                &self.table,
                &self.config.handover,
                dt,
            ) {
                events.push(ev);
            }
        }

        // scheduling uses the attachment in force at the start of the tick
        let mut flows: Vec<Vec<(Flow, u8)>> = vec![Vec::new(); n];
        for (ue, m) in self.ues.iter().zip(&measurements) {
            let flow = Flow {
                ue_id: ue.ue_id,
                offered_rate_bps: self.config.traffic.offered_rate_bps,
                serving_sector: ue.serving_sector,
            };
            let mcs = mcs_from_sinr(m.serving_sinr_db, &self.config.mcs);
            flows[ue.serving_sector].push((flow, mcs));
        }

        let mut executed = 0;
        for ev in &events {
            if execute_handover(&mut self.ues[ev.ue_id], ev, n, &mut self.log)? {
                executed += 1;
            }
        }

        let mut tick_kpi = TickKpi {
            time: now,
            offered_bits: 0.0,
            served_bits: 0.0,
            lost_bits: 0.0,
            handovers: executed,
        };
        for (sector, sector_flows) in flows.iter().enumerate() {
            let total_prbs = self.sectors[sector].total_prbs;
            let alloc = allocate(sector, total_prbs, sector_flows, dt)?;
            self.record_allocation(now, dt, &alloc);
            tick_kpi.offered_bits += alloc.offered_bits;
            tick_kpi.served_bits += alloc.served_bits;
            tick_kpi.lost_bits += alloc.lost_bits;
        }
        if self.options.record_tick_series {
            self.series.push(tick_kpi);
        }

        if tick_no.is_multiple_of(self.period_ticks) {
            if self.config.algorithm != Algorithm::None {
                self.run_controllers(now)?;
            }
            self.free_prb_sum.fill(0.0);
        }

        let violated = self
            .mlb
            .iter()
            .any(|s| s.phase == MlbPhase::Inactive && !self.table.is_default_for(s.sector_id));
        if violated {
            self.conservation.inactive_table_violations += 1;
        }

        self.tick = tick_no;
        Ok(true)
    }

    fn record_allocation(&mut self, now: f64, dt: f64, alloc: &crate::scheduler::AllocationResult) {
        let s = alloc.sector_id;
        self.sector_offered[s] += alloc.offered_bits;
        self.sector_served[s] += alloc.served_bits;
        self.sector_lost[s] += alloc.lost_bits;
        self.free_prb_sum[s] += alloc.v_ar as f64;

        let c = &mut self.conservation;
        if alloc.offered_bits > 0.0 {
            let err = (alloc.served_bits + alloc.lost_bits - alloc.offered_bits).abs()
                / alloc.offered_bits;
            c.max_relative_error = c.max_relative_error.max(err);
        }
        c.max_granted_prbs = c.max_granted_prbs.max(alloc.granted_prbs);
        c.max_sector_throughput_mbps = c
            .max_sector_throughput_mbps
            .max(alloc.served_bits / dt / 1e6);

        if self.options.record_sector_load {
            self.sector_load.push(SectorLoadRecord {
                time: now,
                sector: s,
                offered_bits: alloc.offered_bits,
                served_bits: alloc.served_bits,
                lost_bits: alloc.lost_bits,
                granted_prbs: alloc.granted_prbs,
                v_ar: alloc.v_ar,
                ratio: alloc.free_ratio(),
            });
        }
    }

    fn run_controllers(&mut self, now: f64) -> Result<()> {
        let reports: BTreeMap<usize, LoadReport> = self
            .sectors
            .iter()
            .map(|s| {
                let avg_free = self.free_prb_sum[s.sector_id] / self.period_ticks as f64;
                LoadReport::new(s.sector_id, avg_free, s.total_prbs as f64)
                    .map(|r| (s.sector_id, r))
            })
            .collect::<Result<_>>()?;
        let ctx = MlbContext {
            thresholds: &self.config.thresholds,
            base_hysteresis_db: self.config.handover.default_hysteresis_db,
            timestamp: now,
        };
        // every controller sees the same table snapshot; each writes only its own row
        let outputs = self
            .mlb
            .iter()
            .map(|state| {
                mlb_tick(
                    state,
                    &reports[&state.sector_id],
                    &self.neighbors[state.sector_id],
                    &reports,
                    &self.table,
                    &ctx,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        for out in outputs {
            apply_updates(&mut self.table, &out.updates);
            if let Some(msg) = out.message {
                self.messages.push(msg);
            }
            if self.options.record_decisions {
                self.decisions.push(out.decision);
            }
            let id = out.state.sector_id;
            self.mlb[id] = out.state;
        }
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while self.step()? {}
        Ok(())
    }

    pub fn finish(self) -> RunOutput {
        let duration = self.tick as f64 * self.config.tick_s;
        let offered: f64 = self.sector_offered.iter().sum();
        let served: f64 = self.sector_served.iter().sum();
        let lost: f64 = self.sector_lost.iter().sum();
        let per_sec = |bits: f64| {
            if duration > 0.0 {
                bits / duration / 1e6
            } else {
                0.0
            }
        };
        let mlb_induced = self
            .log
            .events
            .iter()
            .filter(|e| e.cause == HandoverCause::MlbInducedA3)
            .count() as u64;
        let kpi = KpiRecord {
            scenario: self.config.scenario.clone(),
            algorithm: self.config.algorithm,
            beta_variant: self.config.beta_variant,
            ue_count: self.config.ue_count,
            seed: self.config.seed,
            ticks: self.tick,
            duration_s: duration,
            throughput_mbps: per_sec(served),
            loss_ratio: if offered > 0.0 { lost / offered } else { 0.0 },
            ho_count: self.log.successful(),
            mlb_induced_ho_count: mlb_induced,
            control_messages: self.messages.len() as u64,
            offered_bits: offered,
            served_bits: served,
            lost_bits: lost,
            sector_throughput_mbps: self.sector_served.iter().map(|&b| per_sec(b)).collect(),
            sector_offered_bits: self.sector_offered,
            sector_served_bits: self.sector_served,
            sector_lost_bits: self.sector_lost,
            series: self.series,
        };
        RunOutput {
            kpi,
            handovers: self.log.events,
            messages: self.messages,
            decisions: self.decisions,
            sector_load: self.sector_load,
            trajectories: self.trajectories,
            conservation: self.conservation,
        }
    }
}

fn measure_rsrp(
    sectors: &[SectorConfig],
    position: &radio::Point,
    params: &PathLossParams,
    shadowing: &[f64],
) -> Result<Vec<f64>> {
    sectors
        .iter()
        .zip(shadowing)
        .map(|(s, &sh)| radio::rsrp(s, position, params, sh))
        .collect()
}

/// Log-normal shadowing per (UE, sector), frozen for the run.
fn draw_shadowing(seed: u64, ues: usize, sectors: usize, stddev: f64) -> Result<Vec<f64>> {
    if stddev == 0.0 {
        return Ok(vec![0.0; ues * sectors]);
    }
    let normal = Normal::new(0.0, stddev)
        .map_err(|e| Error::config("radio.shadowing_stddev_db", e.to_string()))?;
    let mut out = Vec::with_capacity(ues * sectors);
    for ue in 0..ues {
        let mut rng = stream_rng(seed, Stream::Shadowing, ue as u64);
        out.extend((0..sectors).map(|_| normal.sample(&mut rng)));
    }
    Ok(out)
}

/// Runs `config` to completion, recording everything but trajectories.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    run_with(config, RunOptions::default())
}

pub fn run_with(config: &ScenarioConfig, options: RunOptions) -> Result<RunOutput> {
    let mut sim = Simulation::new(config.clone(), options)?;
    sim.run_to_end()?;
    Ok(sim.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(algorithm: Algorithm, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            duration_s: 5.0,
            ue_count: 20,
            algorithm,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn processes_exact_tick_count() {
        let out = run_with(&short(Algorithm::None, 1), RunOptions::summary()).unwrap();
        assert_eq!(out.kpi.ticks, 500);
        let full = ScenarioConfig::default();
        assert_eq!(full.total_ticks(), 10_000);
    }

    #[test]
    fn initial_attachment_is_strongest() {
        let sim = Simulation::new(short(Algorithm::Mlb1, 3), RunOptions::default()).unwrap();
        for ue in sim.ues() {
            let m = sim.measure(ue, 0.0).unwrap();
            assert_eq!(ue.serving_sector, radio::strongest(&m.rsrp_dbm));
        }
    }

    #[test]
    fn baseline_sends_no_control_messages() {
        let out = run(&short(Algorithm::None, 2)).unwrap();
        assert!(out.messages.is_empty());
        assert!(out.decisions.is_empty());
        assert_eq!(out.kpi.mlb_induced_ho_count, 0);
    }

    #[test]
    fn step_stops_at_duration() {
        let mut sim = Simulation::new(
            ScenarioConfig {
                duration_s: 0.05,
                ..short(Algorithm::None, 1)
            },
            RunOptions::default(),
        )
        .unwrap();
        let mut steps = 0;
        while sim.step().unwrap() {
            steps += 1;
        }
        assert_eq!(steps, 5);
        assert!(!sim.step().unwrap());
        assert!((sim.time() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn offered_bits_are_conserved_globally() {
        let cfg = short(Algorithm::Mlb2, 4);
        let out = run(&cfg).unwrap();
        let expected = cfg.ue_count as f64 * cfg.traffic.offered_rate_bps * cfg.duration_s;
        assert!((out.kpi.offered_bits - expected).abs() / expected < 1e-9);
        assert!(
            (out.kpi.served_bits + out.kpi.lost_bits - out.kpi.offered_bits).abs() / expected
                < 1e-9
        );
        assert_eq!(out.kpi.ho_count as usize, out.handovers.len());
        assert_eq!(out.kpi.series.len(), 500);
        assert_eq!(out.sector_load.len(), 500 * 9);
    }

    #[test]
    fn shadowing_is_frozen_and_seeded() {
        let a = draw_shadowing(5, 3, 9, 8.0).unwrap();
        let b = draw_shadowing(5, 3, 9, 8.0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, draw_shadowing(6, 3, 9, 8.0).unwrap());
        assert!(draw_shadowing(5, 3, 9, 0.0)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }
}
