//! CSV and SVG output.
//!
//! Files written for a single run: `kpi.csv`, `handovers.csv`,
//! `mlb_decisions.csv`, `sector_load.csv`, `sector_kpi.csv`,
//! `tick_kpi.csv` and `control_messages.csv`. A matrix writes `kpi.csv`
//! with one row per run followed by one aggregate row per
//! (algorithm, UE count) cell. Numbers are printed in shortest
//! round-trip form, so identical runs give byte-identical files.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::matrix::{AggregateCell, MatrixResult};
use crate::sim::{KpiRecord, RunOutput};

pub const KPI_HEADER: [&str; 13] = [
    "scenario",
    "algorithm",
    "ue_count",
    "seed",
    "throughput_mbps",
    "loss_ratio",
    "ho_count",
    "aggregate",
    "beta_variant",
    "runs",
    "throughput_std",
    "loss_std",
    "ho_std",
];

pub const HANDOVER_HEADER: [&str; 6] = [
    "timestamp",
    "ue_id",
    "source",
    "target",
    "cause",
    "effective_hysteresis_used",
];

pub const DECISION_HEADER: [&str; 9] = [
    "timestamp",
    "sector",
    "phase",
    "own_ratio",
    "neighbor",
    "neighbor_ratio",
    "alpha",
    "raw_hysteresis",
    "effective_hysteresis",
];

pub const SECTOR_LOAD_HEADER: [&str; 8] = [
    "time",
    "sector",
    "offered_bits",
    "served_bits",
    "lost_bits",
    "granted_prbs",
    "v_ar",
    "ratio",
];

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writer that tags every failure with the file it was writing.
struct Table<'a> {
    path: &'a Path,
    w: csv::Writer<BufWriter<File>>,
}

impl<'a> Table<'a> {
    fn create(path: &'a Path, header: &[&str]) -> Result<Self> {
        let mut t = Self {
            path,
            w: create(path)?,
        };
        t.row(header.iter().map(|s| s.to_string()))?;
        Ok(t)
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> Result<()> {
        self.w
            .write_record(fields.into_iter().collect::<Vec<_>>())
            .map_err(|e| Error::csv(self.path, e))
    }

    fn close(self) -> Result<()> {
        finish(self.w, self.path)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn kpi_row(k: &KpiRecord) -> Vec<String> {
    vec![
        k.scenario.clone(),
        k.algorithm.to_string(),
        k.ue_count.to_string(),
        k.seed.to_string(),
        k.throughput_mbps.to_string(),
        k.loss_ratio.to_string(),
        k.ho_count.to_string(),
        "false".into(),
        k.beta_variant.to_string(),
        "1".into(),
        String::new(),
        String::new(),
        String::new(),
    ]
}

fn aggregate_row(c: &AggregateCell, beta_variant: &str) -> Vec<String> {
    vec![
        c.scenario.clone(),
        c.algorithm.to_string(),
        c.ue_count.to_string(),
        String::new(),
        c.throughput_mean.to_string(),
        c.loss_mean.to_string(),
        c.ho_mean.to_string(),
        "true".into(),
        beta_variant.to_string(),
        c.runs.to_string(),
        c.throughput_std.to_string(),
        c.loss_std.to_string(),
        c.ho_std.to_string(),
    ]
}

/// KPI table for `runs`, then one aggregate row per cell in `cells`.
pub fn write_kpi_csv(path: &Path, runs: &[&KpiRecord], cells: &[AggregateCell]) -> Result<()> {
    let mut t = Table::create(path, &KPI_HEADER)?;
    for k in runs {
        t.row(kpi_row(k))?;
    }
    for c in cells {
        let variant = runs
            .iter()
            .find(|k| k.algorithm == c.algorithm && k.ue_count == c.ue_count)
            .map(|k| k.beta_variant.to_string())
            .unwrap_or_default();
        t.row(aggregate_row(c, &variant))?;
    }
    t.close()
}

pub fn write_matrix(dir: &Path, matrix: &MatrixResult) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("kpi.csv");
    let runs: Vec<&KpiRecord> = matrix.runs.iter().map(|r| &r.kpi).collect();
    write_kpi_csv(&path, &runs, &matrix.cells)?;
    Ok(path)
}

/// Writes every table of a single run into `dir`; returns the paths.
pub fn write_run(dir: &Path, out: &RunOutput) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();

    let path = dir.join("kpi.csv");
    write_kpi_csv(&path, &[&out.kpi], &[])?;
    written.push(path);

    let path = dir.join("handovers.csv");
    let mut t = Table::create(&path, &HANDOVER_HEADER)?;
    for e in &out.handovers {
        t.row([
            e.timestamp.to_string(),
            e.ue_id.to_string(),
            e.source.to_string(),
            e.target.to_string(),
            e.cause.as_str().to_string(),
            e.hysteresis_db.to_string(),
        ])?;
    }
    t.close()?;
    written.push(path);

    let path = dir.join("mlb_decisions.csv");
    let mut t = Table::create(&path, &DECISION_HEADER)?;
    for d in &out.decisions {
        for nb in &d.neighbors {
            t.row([
                d.timestamp.to_string(),
                d.sector_id.to_string(),
                d.phase.as_str().to_string(),
                d.own_ratio.to_string(),
                nb.neighbor.to_string(),
                opt(nb.ratio),
                nb.alpha.to_string(),
                nb.raw_db.to_string(),
                nb.effective_db.to_string(),
            ])?;
        }
    }
    t.close()?;
    written.push(path);

    let path = dir.join("sector_load.csv");
    let mut t = Table::create(&path, &SECTOR_LOAD_HEADER)?;
    for r in &out.sector_load {
        t.row([
            r.time.to_string(),
            r.sector.to_string(),
            r.offered_bits.to_string(),
            r.served_bits.to_string(),
            r.lost_bits.to_string(),
            r.granted_prbs.to_string(),
            r.v_ar.to_string(),
            r.ratio.to_string(),
        ])?;
    }
    t.close()?;
    written.push(path);

    let path = dir.join("sector_kpi.csv");
    let k = &out.kpi;
    let mut t = Table::create(
        &path,
        &[
            "sector",
            "offered_bits",
            "served_bits",
            "lost_bits",
            "throughput_mbps",
        ],
    )?;
    for s in 0..k.sector_throughput_mbps.len() {
        t.row([
            s.to_string(),
            k.sector_offered_bits[s].to_string(),
            k.sector_served_bits[s].to_string(),
            k.sector_lost_bits[s].to_string(),
            k.sector_throughput_mbps[s].to_string(),
        ])?;
    }
    t.close()?;
    written.push(path);

    let path = dir.join("tick_kpi.csv");
    let mut t = Table::create(
        &path,
        &[
            "time",
            "offered_bits",
            "served_bits",
            "lost_bits",
            "handovers",
        ],
    )?;
    for s in &k.series {
        t.row([
            s.time.to_string(),
            s.offered_bits.to_string(),
            s.served_bits.to_string(),
            s.lost_bits.to_string(),
            s.handovers.to_string(),
        ])?;
    }
    t.close()?;
    written.push(path);

    let path = dir.join("control_messages.csv");
    let mut t = Table::create(
        &path,
        &["timestamp", "sector", "neighbor", "effective_hysteresis"],
    )?;
    for m in &out.messages {
        for (nb, h) in &m.hysteresis_db {
            t.row([
                m.timestamp.to_string(),
                m.sector_id.to_string(),
                nb.to_string(),
                h.to_string(),
            ])?;
        }
    }
    t.close()?;
    written.push(path);

    Ok(written)
}

/// One line of `kpi.csv` as read back for plotting.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct KpiRow {
    pub scenario: String,
    pub algorithm: String,
    pub ue_count: usize,
    pub seed: Option<u64>,
    pub throughput_mbps: f64,
    pub loss_ratio: f64,
    pub ho_count: f64,
    pub aggregate: bool,
    #[serde(default)]
    pub beta_variant: String,
}

pub fn read_kpi_csv(path: &Path) -> Result<Vec<KpiRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<KpiRow>, _>>()
        .map_err(|e| Error::csv(path, e))
}

/// `series -> [(ue_count, value)]`, from aggregate rows when the file has
/// them, otherwise averaged over the per-run rows.
fn series_of(rows: &[KpiRow], value: fn(&KpiRow) -> f64) -> BTreeMap<String, Vec<(f64, f64)>> {
    let has_aggregates = rows.iter().any(|r| r.aggregate);
    let variants: std::collections::BTreeSet<&str> = rows
        .iter()
        .filter(|r| r.algorithm == "mlb1")
        .map(|r| r.beta_variant.as_str())
        .collect();
    let label = |r: &KpiRow| {
        if r.algorithm == "mlb1" && variants.len() > 1 {
            format!("{} ({})", r.algorithm, r.beta_variant)
        } else {
            r.algorithm.clone()
        }
    };
    let mut acc: BTreeMap<String, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.aggregate == has_aggregates) {
        let e = acc
            .entry(label(r))
            .or_default()
            .entry(r.ue_count)
            .or_insert((0.0, 0));
        e.0 += value(r);
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(k, pts)| {
            let pts = pts
                .into_iter()
                .map(|(ue, (sum, n))| (ue as f64, sum / n as f64))
                .collect();
            (k, pts)
        })
        .collect()
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Minimal line chart: one polyline with markers per series.
pub fn line_chart_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &BTreeMap<String, Vec<(f64, f64)>>,
) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 55.0);
    let pw = w - left - right;
    let ph = h - top - bottom;

    let pts = series.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, 0.0f64, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    if x1 == x0 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    y1 += (y1 - y0) * 0.08;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        left + pw / 2.0,
        escape(title)
    ));
    // axes and ticks
    svg.push_str(&format!(
        "<path d=\"M{left} {top} V{} H{}\" stroke=\"black\" fill=\"none\"/>\n",
        top + ph,
        left + pw
    ));
    for i in 0..=5 {
        let y = y0 + (y1 - y0) * i as f64 / 5.0;
        let py = sy(y);
        svg.push_str(&format!(
            "<line x1=\"{left}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" stroke=\"#ddd\"/>\n<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            left + pw,
            left - 6.0,
            py + 4.0,
            format_tick(y)
        ));
    }
    let mut xs: Vec<f64> = series.values().flatten().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in xs {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            sx(x),
            top + ph + 18.0,
            format_tick(x)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
        left + pw / 2.0,
        h - 12.0,
        escape(x_label)
    ));
    svg.push_str(&format!(
        "<text transform=\"translate(18 {:.1}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
        top + ph / 2.0,
        escape(y_label)
    ));

    for (i, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            path.join(" ")
        ));
        for &(x, y) in points {
            svg.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3.5\" fill=\"{color}\"/>\n",
                sx(x),
                sy(y)
            ));
        }
        let ly = top + 10.0 + 20.0 * i as f64;
        let lx = left + pw + 15.0;
        svg.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n<text x=\"{}\" y=\"{}\">{}</text>\n",
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else if v.abs() >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

/// File name, title, y-axis label and the plotted value.
type Chart = (&'static str, &'static str, &'static str, fn(&KpiRow) -> f64);

/// Throughput, loss and handover count versus UE count, one series per
/// algorithm.
pub fn plot_kpis(rows: &[KpiRow], dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let charts: [Chart; 3] = [
        (
            "throughput.svg",
            "Global downlink throughput",
            "throughput (Mbps)",
            |r| r.throughput_mbps,
        ),
        (
            "loss_ratio.svg",
            "Relative loss ratio",
            "lost / offered",
            |r| r.loss_ratio,
        ),
        (
            "handovers.svg",
            "Successful handovers",
            "handovers per run",
            |r| r.ho_count,
        ),
    ];
    let mut written = Vec::new();
    for (file, title, y_label, value) in charts {
        let path = dir.join(file);
        let svg = line_chart_svg(title, "UEs", y_label, &series_of(rows, value));
        let mut f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(svg.as_bytes())
            .map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

pub fn write_trajectories(path: &Path, points: &[crate::sim::TrajectoryPoint]) -> Result<()> {
    let mut t = Table::create(path, &["time", "ue_id", "x", "y"])?;
    for p in points {
        t.row([
            p.time.to_string(),
            p.ue_id.to_string(),
            p.x.to_string(),
            p.y.to_string(),
        ])?;
    }
    t.close()
}
