//! Scenario matrices: the Cartesian product of algorithms, UE counts and
//! seeds over one base configuration.
//!
//! Seeds are shared across algorithms, so for a given `(ue_count, seed)`
//! every algorithm sees the same UE trajectories and the KPI differences
//! are paired.

use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::mlb::Algorithm;
use crate::sim::{run_with, ConservationCheck, KpiRecord, RunOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRun {
    pub kpi: KpiRecord,
    pub conservation: ConservationCheck,
}

/// Seed-aggregated statistics for one (algorithm, UE count) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCell {
    pub scenario: String,
    pub algorithm: Algorithm,
    pub ue_count: usize,
    pub runs: usize,
    pub throughput_mean: f64,
    pub throughput_std: f64,
    pub loss_mean: f64,
    pub loss_std: f64,
    pub ho_mean: f64,
    pub ho_std: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatrixResult {
    /// Ordered algorithm-major, then UE count, then seed.
    pub runs: Vec<MatrixRun>,
    pub cells: Vec<AggregateCell>,
}

/// Which KPI a paired comparison looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Throughput,
    LossRatio,
    Handovers,
}

impl Metric {
    pub fn of(self, kpi: &KpiRecord) -> f64 {
        match self {
            Metric::Throughput => kpi.throughput_mbps,
            Metric::LossRatio => kpi.loss_ratio,
            Metric::Handovers => kpi.ho_count as f64,
        }
    }
}

/// Per-seed sign tally of `a - b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SignCounts {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl MatrixResult {
    pub fn cell(&self, algorithm: Algorithm, ue_count: usize) -> Option<&AggregateCell> {
        self.cells
            .iter()
            .find(|c| c.algorithm == algorithm && c.ue_count == ue_count)
    }

    pub fn run(&self, algorithm: Algorithm, ue_count: usize, seed: u64) -> Option<&MatrixRun> {
        self.runs.iter().find(|r| {
            r.kpi.algorithm == algorithm && r.kpi.ue_count == ue_count && r.kpi.seed == seed
        })
    }

    /// Compares `a` against `b` seed by seed at one UE count.
    pub fn paired_signs(
        &self,
        metric: Metric,
        a: Algorithm,
        b: Algorithm,
        ue_count: usize,
    ) -> SignCounts {
        let mut counts = SignCounts::default();
        for ra in self
            .runs
            .iter()
            .filter(|r| r.kpi.algorithm == a && r.kpi.ue_count == ue_count)
        {
            let Some(rb) = self.run(b, ue_count, ra.kpi.seed) else {
                continue;
            };
            let d = metric.of(&ra.kpi) - metric.of(&rb.kpi);
            if d > 0.0 {
                counts.positive += 1;
            } else if d < 0.0 {
                counts.negative += 1;
            } else {
                counts.zero += 1;
            }
        }
        counts
    }
}

/// Runs every combination, in parallel when rayon has threads to spare.
/// Results come back in matrix order regardless of completion order.
pub fn run_matrix(
    base: &ScenarioConfig,
    algorithms: &[Algorithm],
    ue_counts: &[usize],
    seeds: &[u64],
) -> Result<MatrixResult> {
    if algorithms.is_empty() || ue_counts.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidInput(
            "matrix needs at least one algorithm, UE count and seed".into(),
        ));
    }
    let mut configs = Vec::with_capacity(algorithms.len() * ue_counts.len() * seeds.len());
    for &algorithm in algorithms {
        for &ue_count in ue_counts {
            for &seed in seeds {
                configs.push(ScenarioConfig {
                    algorithm,
                    ue_count,
                    seed,
                    ..base.clone()
                });
            }
        }
    }
    for cfg in &configs {
        cfg.validate()?;
    }

    let runs = configs
        .par_iter()
        .map(|cfg| {
            run_with(cfg, RunOptions::summary()).map(|out| MatrixRun {
                kpi: out.kpi,
                conservation: out.conservation,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::with_capacity(algorithms.len() * ue_counts.len());
    for (i, chunk) in runs.chunks(seeds.len()).enumerate() {
        let algorithm = algorithms[i / ue_counts.len()];
        let ue_count = ue_counts[i % ue_counts.len()];
        let pick =
            |f: fn(&KpiRecord) -> f64| -> Vec<f64> { chunk.iter().map(|r| f(&r.kpi)).collect() };
        let (throughput_mean, throughput_std) = mean_std(&pick(|k| k.throughput_mbps));
        let (loss_mean, loss_std) = mean_std(&pick(|k| k.loss_ratio));
        let (ho_mean, ho_std) = mean_std(&pick(|k| k.ho_count as f64));
        cells.push(AggregateCell {
            scenario: base.scenario.clone(),
            algorithm,
            ue_count,
            runs: chunk.len(),
            throughput_mean,
            throughput_std,
            loss_mean,
            loss_std,
            ho_mean,
            ho_std,
        });
    }

    Ok(MatrixResult { runs, cells })
}
