//! CSV and manifest writers, and the text rendering of a run's summary.
//!
//! Reals are written with six decimals so repeated runs are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::SimOutput;
use crate::error::{Error, Result};
use crate::metrics::{
    emit_figure_data, summarize, ComparisonReport, NodeSeries, RegionSeries, VariantTotals,
    FIGURE_FILES,
};
use crate::protocol::RegionId;

pub const ROUNDS_CSV: &str = "rounds.csv";
pub const NODES_CSV: &str = "nodes.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const COMPARE_CSV: &str = "compare.csv";
pub const SWEEP_SUMMARY_CSV: &str = "sweep_summary.csv";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const CONFIG_TXT: &str = "config.txt";
pub const FIGURES_DIR: &str = "figures";

pub const ROUNDS_HEADER: [&str; 13] = [
    "round",
    "controller",
    "beacons",
    "acks",
    "tx_energy_j",
    "rx_energy_j",
    "alive",
    "alive_A",
    "alive_B",
    "alive_C",
    "prr_A",
    "prr_B",
    "prr_C",
];
pub const NODES_HEADER: [&str; 10] = [
    "node",
    "x_m",
    "y_m",
    "region",
    "final_temp_c",
    "final_loss_dbm",
    "final_level_dbm",
    "final_pt_dbm",
    "battery_j",
    "alive",
];
pub const SUMMARY_HEADER: [&str; 10] = [
    "region",
    "initial_count",
    "desired",
    "survivors",
    "threshold_level_dbm",
    "nodes_above_threshold",
    "nodes_below_threshold",
    "prr_min_pct",
    "prr_max_pct",
    "threshold_loss_dbm",
];

pub fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

fn opt6(v: Option<f64>) -> String {
    v.map(fmt6).unwrap_or_default()
}

fn region_label(r: Option<RegionId>) -> &'static str {
    r.map_or("", RegionId::label)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_fingerprint: String,
    pub seed: u64,
    pub controller: String,
    pub rounds_executed: usize,
    pub extinction_round: Option<usize>,
    pub files: Vec<String>,
}

struct CsvFile {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl CsvFile {
    fn create(path: PathBuf) -> Result<Self> {
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            writer: csv::Writer::from_writer(file),
            path,
        })
    }

    fn row<I, T>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(|e| Error::csv(&self.path, e))
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes every artifact of one run into `dir`.
pub fn write_run(dir: &Path, out: &SimOutput, figure_round: Option<usize>) -> Result<RunManifest> {
    let figures = emit_figure_data(&out.records, figure_round)?;
    let summary = summarize(&out.records, &out.config)?;
    create_dir(&dir.join(FIGURES_DIR))?;
    let mut files = Vec::new();

    let mut rounds = CsvFile::create(dir.join(ROUNDS_CSV))?;
    rounds.row(ROUNDS_HEADER)?;
    for r in &out.records {
        rounds.row([
            r.round.to_string(),
            r.controller.label().to_string(),
            r.traffic.beacons_sent.to_string(),
            r.traffic.acks_sent.to_string(),
            fmt6(r.tx_energy_j),
            fmt6(r.rx_energy_j),
            r.alive.to_string(),
            r.alive_per_region[RegionId::A].to_string(),
            r.alive_per_region[RegionId::B].to_string(),
            r.alive_per_region[RegionId::C].to_string(),
            opt6(r.prr_per_region[RegionId::A]),
            opt6(r.prr_per_region[RegionId::B]),
            opt6(r.prr_per_region[RegionId::C]),
        ])?;
    }
    rounds.finish()?;
    files.push(ROUNDS_CSV.to_string());

    let last = out
        .records
        .last()
        .expect("summarize rejected empty records");
    let mut nodes = CsvFile::create(dir.join(NODES_CSV))?;
    nodes.row(NODES_HEADER)?;
    for (state, rec) in out.final_nodes.iter().zip(&last.nodes) {
        nodes.row([
            state.id.to_string(),
            fmt6(state.pos.x),
            fmt6(state.pos.y),
            region_label(state.region).to_string(),
            fmt6(rec.temp.0),
            fmt6(rec.loss.0),
            opt6(rec.level.map(|l| l.0)),
            opt6(rec.pt.map(|p| p.0)),
            fmt6(state.battery_j),
            u8::from(state.alive).to_string(),
        ])?;
    }
    nodes.finish()?;
    files.push(NODES_CSV.to_string());

    let mut sum = CsvFile::create(dir.join(SUMMARY_CSV))?;
    sum.row(SUMMARY_HEADER)?;
    for s in &summary {
        sum.row([
            s.region.label().to_string(),
            s.initial_count.to_string(),
            s.desired.to_string(),
            s.survivors.to_string(),
            fmt6(s.threshold_level.0),
            s.nodes_above_threshold.to_string(),
            s.nodes_below_threshold.to_string(),
            opt6(s.prr_min),
            opt6(s.prr_max),
            fmt6(s.threshold_loss.0),
        ])?;
    }
    sum.finish()?;
    files.push(SUMMARY_CSV.to_string());

    let node_series = [
        &figures.temperature,
        &figures.rssi_loss,
        &figures.power_level,
        &figures.transmit_power,
    ];
    for (name, series) in FIGURE_FILES[..4].iter().zip(node_series) {
        write_node_series(&dir.join(FIGURES_DIR).join(name), series)?;
        files.push(format!("{FIGURES_DIR}/{name}"));
    }
    let region_series = [
        &figures.region_required_level,
        &figures.region_assigned_level,
    ];
    for (name, series) in FIGURE_FILES[4..].iter().zip(region_series) {
        write_region_series(&dir.join(FIGURES_DIR).join(name), series)?;
        files.push(format!("{FIGURES_DIR}/{name}"));
    }

    write_text(&dir.join(CONFIG_TXT), &out.config.to_config_text())?;
    files.push(CONFIG_TXT.to_string());
    files.push(MANIFEST_JSON.to_string());

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_fingerprint: out.config.fingerprint(),
        seed: out.config.seed,
        controller: out.config.controller.label().to_string(),
        rounds_executed: out.summary.rounds_executed,
        extinction_round: out.summary.extinction_round,
        files,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_text(&dir.join(MANIFEST_JSON), &(json + "\n"))?;
    Ok(manifest)
}

fn write_node_series(path: &Path, s: &NodeSeries) -> Result<()> {
    let mut f = CsvFile::create(path.to_path_buf())?;
    f.row(["round", "node", s.name.as_str()])?;
    for &(node, v) in &s.points {
        f.row([s.round.to_string(), node.to_string(), fmt6(v)])?;
    }
    f.finish()
}

fn write_region_series(path: &Path, s: &RegionSeries) -> Result<()> {
    let mut f = CsvFile::create(path.to_path_buf())?;
    f.row(["round", "region", "node", s.name.as_str()])?;
    for &(region, node, v) in &s.points {
        f.row([
            s.round.to_string(),
            region.label().to_string(),
            node.to_string(),
            fmt6(v),
        ])?;
    }
    f.finish()
}

fn totals_row(variant: &str, t: &VariantTotals) -> Vec<String> {
    vec![
        variant.to_string(),
        t.controller.label().to_string(),
        t.beacons.to_string(),
        t.acks.to_string(),
        t.control_packets.to_string(),
        fmt6(t.energy_j),
        t.survivors.to_string(),
        fmt6(t.mean_prr),
    ]
}

pub const COMPARE_HEADER: [&str; 8] = [
    "variant",
    "controller",
    "beacons",
    "acks",
    "control_packets",
    "energy_j",
    "survivors",
    "mean_prr",
];

pub fn write_compare(path: &Path, rep: &ComparisonReport) -> Result<()> {
    let mut f = CsvFile::create(path.to_path_buf())?;
    f.row(COMPARE_HEADER)?;
    f.row(totals_row("east", &rep.east))?;
    f.row(totals_row("classical", &rep.classical))?;
    f.row([
        "delta".to_string(),
        String::new(),
        (rep.east.beacons as i64 - rep.classical.beacons as i64).to_string(),
        (rep.east.acks as i64 - rep.classical.acks as i64).to_string(),
        rep.deltas.control_packets.to_string(),
        fmt6(rep.deltas.energy_j),
        rep.deltas.survivors.to_string(),
        fmt6(rep.deltas.mean_prr),
    ])?;
    f.finish()
}

/// One line of a sweep summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub rounds_executed: usize,
    pub totals: VariantTotals,
    pub run_dir: String,
}

pub fn write_sweep_summary(path: &Path, key: &str, rows: &[SweepRow]) -> Result<()> {
    let mut f = CsvFile::create(path.to_path_buf())?;
    f.row([
        "key",
        "value",
        "controller",
        "rounds_executed",
        "beacons",
        "acks",
        "control_packets",
        "energy_j",
        "survivors",
        "mean_prr",
        "run_dir",
    ])?;
    for r in rows {
        f.row([
            key.to_string(),
            r.value.clone(),
            r.totals.controller.label().to_string(),
            r.rounds_executed.to_string(),
            r.totals.beacons.to_string(),
            r.totals.acks.to_string(),
            r.totals.control_packets.to_string(),
            fmt6(r.totals.energy_j),
            r.totals.survivors.to_string(),
            fmt6(r.totals.mean_prr),
            r.run_dir.clone(),
        ])?;
    }
    f.finish()
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Renders a run directory's summary as an aligned text table with one
/// column per region.
pub fn render_report(dir: &Path) -> Result<String> {
    let summary_path = dir.join(SUMMARY_CSV);
    let manifest_path = dir.join(MANIFEST_JSON);
    let summary_text = read_to_string(&summary_path)?;
    let manifest: RunManifest = serde_json::from_str(&read_to_string(&manifest_path)?)
        .map_err(|e| Error::Data(format!("{}: {e}", manifest_path.display())))?;

    let mut reader = csv::Reader::from_reader(summary_text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::csv(&summary_path, e))?
        .clone();
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(Error::Data(format!(
            "{}: unexpected header",
            summary_path.display()
        )));
    }
    let rows = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::csv(&summary_path, e))?;
    if rows.len() != 3 {
        return Err(Error::Data(format!(
            "{}: expected one row per region, found {}",
            summary_path.display(),
            rows.len()
        )));
    }
    let col = |i: usize| -> Vec<String> { rows.iter().map(|r| r[i].to_string()).collect() };
    let dbm = |i: usize| -> Vec<String> {
        rows.iter()
            .map(|r| {
                r[i].parse::<f64>()
                    .map_or_else(|_| r[i].to_string(), |v| format!("{v:.2} dBm"))
            })
            .collect()
    };
    let prr: Vec<String> = rows
        .iter()
        .map(|r| match (r[7].parse::<f64>(), r[8].parse::<f64>()) {
            (Ok(lo), Ok(hi)) => format!("({lo:.0}-{hi:.0}) %"),
            _ => "n/a".to_string(),
        })
        .collect();

    let table: Vec<(String, Vec<String>)> = vec![
        ("Number of Nodes (A,B,C)".into(), col(1)),
        ("Desired Neighbors (A,B,C)".into(), col(2)),
        (
            format!("Nodes after {} Rounds (A,B,C)", manifest.rounds_executed),
            col(3),
        ),
        ("Threshold power level (A,B,C)".into(), dbm(4)),
        ("Nodes above threshold RSSI_loss (A,B,C)".into(), col(5)),
        ("Nodes below threshold RSSI_loss (A,B,C)".into(), col(6)),
        ("PRR (A,B,C)".into(), prr),
        ("Threshold RSSI_loss (A,B,C)".into(), dbm(9)),
    ];
    let label_w = table.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let value_w = table
        .iter()
        .flat_map(|(_, v)| v.iter().map(String::len))
        .max()
        .unwrap_or(0)
        .max(1);

    let mut out = format!(
        "Estimated Parameters ({} controller, seed {})\n",
        manifest.controller, manifest.seed
    );
    out.push_str(&format!("{:<label_w$}", ""));
    for r in ["A", "B", "C"] {
        out.push_str(&format!("  {r:>value_w$}"));
    }
    out.push('\n');
    for (label, values) in &table {
        out.push_str(&format!("{label:<label_w$}"));
        for v in values {
            out.push_str(&format!("  {v:>value_w$}"));
        }
        out.push('\n');
    }
    Ok(out)
}
