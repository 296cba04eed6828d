//! Aggregation of round records: per-region summaries, controller
//! comparisons and figure data series.

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::engine::{RoundRecord, SimOutput};
use crate::error::{Error, Result};
use crate::protocol::{ControllerKind, RegionId, DESIRED_NEIGHBOR_OFFSET};
use crate::radio::{power_level_for_rssi_loss, PowerDbm, RssiLossDbm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub region: RegionId,
    pub initial_count: usize,
    pub desired: usize,
    pub survivors: usize,
    pub threshold_loss: RssiLossDbm,
    pub threshold_level: PowerDbm,
    pub nodes_above_threshold: usize,
    pub nodes_below_threshold: usize,
    /// Percent; `None` when the region never transmitted.
    pub prr_min: Option<f64>,
    pub prr_max: Option<f64>,
}

pub fn summarize(records: &[RoundRecord], config: &SimConfig) -> Result<Vec<RegionSummary>> {
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return Err(Error::Data("cannot summarize an empty record list".into()));
    };
    Ok(RegionId::ALL
        .into_iter()
        .map(|r| {
            let initial_count = first.nodes.iter().filter(|n| n.region == Some(r)).count();
            let threshold_loss = config.regions.threshold_loss[r];
            let survivors: Vec<_> = last
                .nodes
                .iter()
                .filter(|n| n.alive && n.region == Some(r))
                .collect();
            let above = survivors
                .iter()
                .filter(|n| n.loss.0 >= threshold_loss.0)
                .count();
            let band = records
                .iter()
                .filter_map(|rec| rec.prr_per_region[r])
                .map(|p| p * 100.0)
                .fold(None, |acc: Option<(f64, f64)>, p| {
                    Some(acc.map_or((p, p), |(lo, hi)| (lo.min(p), hi.max(p))))
                });
            RegionSummary {
                region: r,
                initial_count,
                desired: initial_count.saturating_sub(DESIRED_NEIGHBOR_OFFSET),
                survivors: survivors.len(),
                threshold_loss,
                threshold_level: config.regions.threshold_level(r),
                nodes_above_threshold: above,
                nodes_below_threshold: survivors.len() - above,
                prr_min: band.map(|b| b.0),
                prr_max: band.map(|b| b.1),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantTotals {
    pub controller: ControllerKind,
    pub beacons: u64,
    pub acks: u64,
    pub control_packets: u64,
    pub energy_j: f64,
    pub survivors: usize,
    /// Mean reception ratio over every data packet sent.
    pub mean_prr: f64,
}

impl VariantTotals {
    pub fn from_records(controller: ControllerKind, records: &[RoundRecord]) -> Self {
        let beacons = records.iter().map(|r| r.traffic.beacons_sent).sum();
        let acks = records.iter().map(|r| r.traffic.acks_sent).sum();
        let energy_j = records.iter().map(|r| r.tx_energy_j + r.rx_energy_j).sum();
        let (prr_sum, sent) = records
            .iter()
            .flat_map(|r| r.nodes.iter().filter_map(|n| n.prr))
            .fold((0.0, 0usize), |(s, c), p| (s + p, c + 1));
        Self {
            controller,
            beacons,
            acks,
            control_packets: beacons + acks,
            energy_j,
            survivors: records.last().map_or(0, |r| r.alive),
            mean_prr: if sent == 0 {
                0.0
            } else {
                prr_sum / sent as f64
            },
        }
    }
}

/// `east - classical` for every total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonDeltas {
    pub control_packets: i64,
    pub energy_j: f64,
    pub survivors: i64,
    pub mean_prr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub east: VariantTotals,
    pub classical: VariantTotals,
    pub deltas: ComparisonDeltas,
    /// Fewer control packets and less energy on the EAST side.
    pub east_dominates: bool,
}

/// Compares two runs of the same scenario. The first argument is reported as
/// the EAST side, the second as the classical side.
pub fn compare_runs(east: &SimOutput, classical: &SimOutput) -> Result<ComparisonReport> {
    if east.config.scenario_fingerprint() != classical.config.scenario_fingerprint() {
        return Err(Error::Usage(
            "runs differ in more than the controller choice; compare needs an identical scenario"
                .into(),
        ));
    }
    let e = VariantTotals::from_records(east.config.controller, &east.records);
    let c = VariantTotals::from_records(classical.config.controller, &classical.records);
    let deltas = ComparisonDeltas {
        control_packets: e.control_packets as i64 - c.control_packets as i64,
        energy_j: e.energy_j - c.energy_j,
        survivors: e.survivors as i64 - c.survivors as i64,
        mean_prr: e.mean_prr - c.mean_prr,
    };
    Ok(ComparisonReport {
        east_dominates: deltas.control_packets < 0 && deltas.energy_j < 0.0,
        east: e,
        classical: c,
        deltas,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSeries {
    pub name: String,
    pub round: usize,
    /// `(node id, value)` for every node.
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSeries {
    pub name: String,
    pub round: usize,
    /// `(region, node id, value)` for surviving nodes, ordered by region then node.
    pub points: Vec<(RegionId, usize, f64)>,
}

impl RegionSeries {
    pub fn values_in(&self, r: RegionId) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().filter(move |p| p.0 == r).map(|p| p.2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSeries {
    pub temperature: NodeSeries,
    pub rssi_loss: NodeSeries,
    pub power_level: NodeSeries,
    pub transmit_power: NodeSeries,
    /// Compensation level each survivor's own loss calls for (no regions).
    pub region_required_level: RegionSeries,
    /// Level the controller actually assigned.
    pub region_assigned_level: RegionSeries,
}

pub const FIGURE_FILES: [&str; 6] = [
    "fig1_temperature.csv",
    "fig2_rssi_loss.csv",
    "fig3_power_level.csv",
    "fig4_transmit_power.csv",
    "fig5_region_required_level.csv",
    "fig6_region_assigned_level.csv",
];

/// Per-node series from `round` (default 0) and per-region level series from the final round.
pub fn emit_figure_data(records: &[RoundRecord], round: Option<usize>) -> Result<FigureSeries> {
    let Some(last) = records.last() else {
        return Err(Error::Data(
            "cannot build figure data from an empty record list".into(),
        ));
    };
    let round = round.unwrap_or(0);
    let rec = records.get(round).ok_or_else(|| {
        Error::Usage(format!(
            "figure round {round} out of range; run has {} rounds",
            records.len()
        ))
    })?;
    let node_series = |name: &str, f: &dyn Fn(&crate::engine::NodeRecord) -> f64| NodeSeries {
        name: name.to_string(),
        round,
        points: rec.nodes.iter().map(|n| (n.id, f(n))).collect(),
    };
    let nan = f64::NAN;

    let mut survivors: Vec<_> = last
        .nodes
        .iter()
        .filter(|n| n.alive)
        .filter_map(|n| n.region.map(|r| (r, n)))
        .collect();
    survivors.sort_by_key(|(r, n)| (*r, n.id));
    let required = survivors
        .iter()
        .map(|(r, n)| Ok((*r, n.id, power_level_for_rssi_loss(n.loss)?.0)))
        .collect::<Result<Vec<_>>>()?;
    let assigned = survivors
        .iter()
        .map(|(r, n)| (*r, n.id, n.level.map_or(nan, |l| l.0)))
        .collect();

    Ok(FigureSeries {
        temperature: node_series("temperature_c", &|n| n.temp.0),
        rssi_loss: node_series("rssi_loss_dbm", &|n| n.loss.0),
        power_level: node_series("power_level_dbm", &|n| n.level.map_or(nan, |l| l.0)),
        transmit_power: node_series("transmit_power_dbm", &|n| n.pt.map_or(nan, |p| p.0)),
        region_required_level: RegionSeries {
            name: "required_level_dbm".into(),
            round: last.round,
            points: required,
        },
        region_assigned_level: RegionSeries {
            name: "assigned_level_dbm".into(),
            round: last.round,
            points: assigned,
        },
    })
}
