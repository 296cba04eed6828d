//! The EAST power controller and the classical single-region baseline.
//!
//! EAST splits the network into three logical regions by RSSI loss at
//! initialization. A region is polled with a beacon/ACK exchange only when its
//! cadence period has elapsed or its open-loop loss prediction has drifted;
//! between polls nodes compensate from their own temperature reading.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio::{
    power_level_for_rssi_loss, power_level_for_temperature, rssi_loss_from_temperature, PowerDbm,
    RssiLossDbm, TemperatureC,
};
use crate::topology::NodeState;

/// Nodes a region's desired neighbor count sits below its initial population.
pub const DESIRED_NEIGHBOR_OFFSET: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegionId {
    /// High RSSI loss.
    A,
    /// Medium RSSI loss.
    B,
    /// Low RSSI loss.
    C,
}

impl RegionId {
    pub const ALL: [RegionId; 3] = [RegionId::A, RegionId::B, RegionId::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            RegionId::A => "A",
            RegionId::B => "B",
            RegionId::C => "C",
        }
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RegionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(RegionId::A),
            "B" | "b" => Ok(RegionId::B),
            "C" | "c" => Ok(RegionId::C),
            other => Err(Error::Data(format!("unknown region `{other}`"))),
        }
    }
}

/// One value per region, indexed by [`RegionId`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerRegion<T>(pub [T; 3]);

impl<T> PerRegion<T> {
    pub fn from_fn(mut f: impl FnMut(RegionId) -> T) -> Self {
        PerRegion([f(RegionId::A), f(RegionId::B), f(RegionId::C)])
    }

    pub fn iter(&self) -> impl Iterator<Item = (RegionId, &T)> {
        RegionId::ALL.into_iter().zip(self.0.iter())
    }

    pub fn map<U>(&self, mut f: impl FnMut(RegionId, &T) -> U) -> PerRegion<U> {
        PerRegion::from_fn(|r| f(r, &self[r]))
    }
}

impl<T> Index<RegionId> for PerRegion<T> {
    type Output = T;

    fn index(&self, r: RegionId) -> &T {
        &self.0[r.index()]
    }
}

impl<T> IndexMut<RegionId> for PerRegion<T> {
    fn index_mut(&mut self, r: RegionId) -> &mut T {
        &mut self.0[r.index()]
    }
}

/// Region cut points and per-region controller thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionConfig {
    /// Losses above this are region A.
    pub boundary_high: RssiLossDbm,
    /// Losses at or below this are region C.
    pub boundary_low: RssiLossDbm,
    pub threshold_loss: PerRegion<RssiLossDbm>,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            boundary_high: RssiLossDbm(-0.61),
            boundary_low: RssiLossDbm(-5.17),
            threshold_loss: PerRegion([RssiLossDbm(3.78), RssiLossDbm(-0.61), RssiLossDbm(-5.17)]),
        }
    }
}

impl RegionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.boundary_high.0.is_finite() && self.boundary_low.0.is_finite()) {
            return Err(Error::config(
                "regions.boundary_high_dbm",
                "boundaries must be finite",
            ));
        }
        if self.boundary_low.0 >= self.boundary_high.0 {
            return Err(Error::config(
                "regions.boundary_low_dbm",
                format!(
                    "regions.boundary_low_dbm ({}) must be below regions.boundary_high_dbm ({})",
                    self.boundary_low.0, self.boundary_high.0
                ),
            ));
        }
        for (r, loss) in self.threshold_loss.iter() {
            let key = format!("regions.threshold_loss_{}_dbm", r.label().to_lowercase());
            if !loss.0.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
            power_level_for_rssi_loss(*loss).map_err(|e| Error::config(key, e.to_string()))?;
        }
        Ok(())
    }

    /// Per-region threshold power level, derived from the threshold loss.
    pub fn threshold_level(&self, r: RegionId) -> PowerDbm {
        power_level_for_rssi_loss(self.threshold_loss[r])
            .expect("threshold losses are validated above the power-level domain guard")
    }

    pub fn threshold_levels(&self) -> PerRegion<PowerDbm> {
        PerRegion::from_fn(|r| self.threshold_level(r))
    }

    pub fn classify(&self, loss: RssiLossDbm) -> RegionId {
        if loss.0 > self.boundary_high.0 {
            RegionId::A
        } else if loss.0 > self.boundary_low.0 {
            RegionId::B
        } else {
            RegionId::C
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPartition {
    pub assignment: BTreeMap<usize, RegionId>,
    pub counts: PerRegion<usize>,
}

/// Closed-loop scheduling knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cadence {
    /// Maximum rounds between polls of a region.
    pub period_rounds: usize,
    /// Open-loop prediction drift (dB) that forces an early poll.
    pub drift_db: f64,
}

impl Default for Cadence {
    fn default() -> Self {
        Self {
            period_rounds: 10,
            drift_db: 1.0,
        }
    }
}

impl Cadence {
    pub fn validate(&self) -> Result<()> {
        if self.period_rounds == 0 {
            return Err(Error::config("cadence.period_rounds", "must be >= 1"));
        }
        if !(self.drift_db.is_finite() && self.drift_db >= 0.0) {
            return Err(Error::config("cadence.drift_db", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ControlTraffic {
    pub beacons_sent: u64,
    pub acks_sent: u64,
}

impl ControlTraffic {
    pub fn total(&self) -> u64 {
        self.beacons_sent + self.acks_sent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub n_current: PerRegion<usize>,
    /// Frozen at initialization.
    pub n_desired: PerRegion<usize>,
    pub last_closed_loop_round: PerRegion<Option<usize>>,
    pub last_estimated_loss: BTreeMap<usize, RssiLossDbm>,
}

impl ControllerState {
    pub fn new(
        partition: &RegionPartition,
        losses: BTreeMap<usize, RssiLossDbm>,
        round: usize,
    ) -> Self {
        Self {
            n_current: partition.counts,
            n_desired: desired_neighbors_saturating(partition),
            last_closed_loop_round: PerRegion([Some(round); 3]),
            last_estimated_loss: losses,
        }
    }

    /// `n_desired - n_current` per region.
    pub fn error(&self) -> PerRegion<i64> {
        PerRegion::from_fn(|r| self.n_desired[r] as i64 - self.n_current[r] as i64)
    }
}

/// Beacon/ACK exchange: every alive node in `nodes` answers with an ACK
/// carrying its RSSI loss. Returns `None` when nobody is alive to answer.
pub fn estimate_rssi_loss<'a>(
    nodes: impl IntoIterator<Item = &'a NodeState>,
    traffic: &mut ControlTraffic,
) -> Result<Option<BTreeMap<usize, RssiLossDbm>>> {
    let mut losses = BTreeMap::new();
    for node in nodes.into_iter().filter(|n| n.alive) {
        losses.insert(node.id, rssi_loss_from_temperature(node.current_temp)?);
    }
    if losses.is_empty() {
        return Ok(None);
    }
    traffic.beacons_sent += 1;
    traffic.acks_sent += losses.len() as u64;
    Ok(Some(losses))
}

pub fn partition_regions(
    losses: &BTreeMap<usize, RssiLossDbm>,
    cfg: &RegionConfig,
) -> RegionPartition {
    let mut counts = PerRegion([0usize; 3]);
    let assignment = losses
        .iter()
        .map(|(&id, &loss)| {
            let r = cfg.classify(loss);
            counts[r] += 1;
            (id, r)
        })
        .collect();
    RegionPartition { assignment, counts }
}

/// Desired neighbor count per region, five below the initial population.
/// Regions of five nodes or fewer are rejected.
pub fn init_desired_neighbors(partition: &RegionPartition) -> Result<PerRegion<usize>> {
    for (r, &count) in partition.counts.iter() {
        if count <= DESIRED_NEIGHBOR_OFFSET {
            return Err(Error::config(
                "node_count",
                format!(
                    "region {r} has {count} nodes; at least {} are needed for a desired neighbor count",
                    DESIRED_NEIGHBOR_OFFSET + 1
                ),
            ));
        }
    }
    Ok(desired_neighbors_saturating(partition))
}

/// Like [`init_desired_neighbors`] but small regions get a target of zero.
pub fn desired_neighbors_saturating(partition: &RegionPartition) -> PerRegion<usize> {
    partition
        .counts
        .map(|_, &c| c.saturating_sub(DESIRED_NEIGHBOR_OFFSET))
}

/// Region rule table for one node.
///
/// * loss at or above the region threshold with enough neighbors: threshold level;
/// * loss at or above threshold with a neighbor deficit: own compensation level, never lower than before;
/// * loss below threshold: keep the previous level.
pub fn east_assign(
    region: RegionId,
    loss: RssiLossDbm,
    previous: PowerDbm,
    state: &ControllerState,
    cfg: &RegionConfig,
) -> Result<PowerDbm> {
    if loss.0 < cfg.threshold_loss[region].0 {
        return Ok(previous);
    }
    if state.n_current[region] >= state.n_desired[region] {
        Ok(cfg.threshold_level(region))
    } else {
        let own = power_level_for_rssi_loss(loss)?;
        Ok(if own.0 > previous.0 { own } else { previous })
    }
}

/// Worst-case compensation level used by the classical scheme for every node.
pub fn classical_assign(t_max: TemperatureC) -> Result<PowerDbm> {
    power_level_for_temperature(t_max)
}

pub fn needs_closed_loop(
    region: RegionId,
    round: usize,
    state: &ControllerState,
    cadence: &Cadence,
    max_drift_db: f64,
) -> bool {
    match state.last_closed_loop_round[region] {
        None => true,
        Some(last) => {
            round.saturating_sub(last) >= cadence.period_rounds || max_drift_db > cadence.drift_db
        }
    }
}

/// Largest |predicted - last estimated| loss among alive nodes of `region`.
pub fn max_region_drift(
    region: RegionId,
    nodes: &[NodeState],
    predicted: &[RssiLossDbm],
    state: &ControllerState,
) -> f64 {
    nodes
        .iter()
        .filter(|n| n.alive && n.region == Some(region))
        .filter_map(|n| {
            state
                .last_estimated_loss
                .get(&n.id)
                .map(|last| (predicted[n.id].0 - last.0).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControllerKind {
    East,
    Classical,
}

impl ControllerKind {
    pub fn label(self) -> &'static str {
        match self {
            ControllerKind::East => "east",
            ControllerKind::Classical => "classical",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "east" => Ok(ControllerKind::East),
            "classical" => Ok(ControllerKind::Classical),
            other => Err(Error::config(
                "controller",
                format!("expected `east` or `classical`, got `{other}`"),
            )),
        }
    }
}

/// What a controller did in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlStep {
    pub traffic: ControlTraffic,
    /// Nodes that received a beacon and sent an ACK this round.
    pub polled: Vec<bool>,
}

/// Stateful controller driven once per round by the engine.
#[derive(Debug, Clone)]
pub struct Controller {
    kind: ControllerKind,
    regions: RegionConfig,
    cadence: Cadence,
    level_cap: PowerDbm,
    classical_level: PowerDbm,
    state: Option<ControllerState>,
}

impl Controller {
    pub fn new(
        kind: ControllerKind,
        regions: RegionConfig,
        cadence: Cadence,
        level_cap: PowerDbm,
        t_max: TemperatureC,
    ) -> Result<Self> {
        Ok(Self {
            kind,
            classical_level: classical_assign(t_max)?,
            regions,
            cadence,
            level_cap,
            state: None,
        })
    }

    pub fn kind(&self) -> ControllerKind {
        self.kind
    }

    pub fn state(&self) -> Option<&ControllerState> {
        self.state.as_ref()
    }

    fn cap(&self, level: PowerDbm) -> PowerDbm {
        if level.0 > self.level_cap.0 {
            self.level_cap
        } else {
            level
        }
    }

    /// Runs the controller for `round`, updating each alive node's assigned level
    /// (and, on the first call, its region). Returns `None` if no node is alive.
    pub fn step(&mut self, round: usize, nodes: &mut [NodeState]) -> Result<Option<ControlStep>> {
        if self.state.is_none() {
            return self.initialize(round, nodes);
        }
        match self.kind {
            ControllerKind::East => self.east_step(round, nodes),
            ControllerKind::Classical => self.classical_step(nodes),
        }
    }

    fn initialize(&mut self, round: usize, nodes: &mut [NodeState]) -> Result<Option<ControlStep>> {
        let mut traffic = ControlTraffic::default();
        let Some(losses) = estimate_rssi_loss(nodes.iter(), &mut traffic)? else {
            return Ok(None);
        };
        let partition = partition_regions(&losses, &self.regions);
        let state = ControllerState::new(&partition, losses, round);
        let mut polled = vec![false; nodes.len()];
        for node in nodes.iter_mut().filter(|n| n.alive) {
            let region = partition.assignment[&node.id];
            node.region = Some(region);
            polled[node.id] = true;
            let level = match self.kind {
                ControllerKind::East => {
                    let start = self.regions.threshold_level(region);
                    east_assign(
                        region,
                        state.last_estimated_loss[&node.id],
                        start,
                        &state,
                        &self.regions,
                    )?
                }
                ControllerKind::Classical => self.classical_level,
            };
            node.assigned_level = Some(self.cap(level));
        }
        self.state = Some(state);
        Ok(Some(ControlStep { traffic, polled }))
    }

    fn classical_step(&mut self, nodes: &mut [NodeState]) -> Result<Option<ControlStep>> {
        let mut traffic = ControlTraffic::default();
        let Some(losses) = estimate_rssi_loss(nodes.iter(), &mut traffic)? else {
            return Ok(None);
        };
        let state = self.state.as_mut().expect("initialized");
        let mut polled = vec![false; nodes.len()];
        let mut counts = PerRegion([0usize; 3]);
        for node in nodes.iter().filter(|n| n.alive) {
            polled[node.id] = true;
            if let Some(r) = node.region {
                counts[r] += 1;
            }
        }
        state.n_current = counts;
        state.last_estimated_loss.extend(losses);
        let level = self.cap(self.classical_level);
        for node in nodes.iter_mut().filter(|n| n.alive) {
            node.assigned_level = Some(level);
        }
        Ok(Some(ControlStep { traffic, polled }))
    }

    fn east_step(&mut self, round: usize, nodes: &mut [NodeState]) -> Result<Option<ControlStep>> {
        if !nodes.iter().any(|n| n.alive) {
            return Ok(None);
        }
        // open-loop prediction from each node's own sensor
        let predicted = nodes
            .iter()
            .map(|n| rssi_loss_from_temperature(n.current_temp))
            .collect::<Result<Vec<_>>>()?;

        let state = self.state.as_mut().expect("initialized");
        let mut alive_per_region = PerRegion([0usize; 3]);
        for n in nodes.iter().filter(|n| n.alive) {
            if let Some(r) = n.region {
                alive_per_region[r] += 1;
            }
        }
        let poll = PerRegion::from_fn(|r| {
            alive_per_region[r] > 0 && {
                let drift = max_region_drift(r, nodes, &predicted, state);
                needs_closed_loop(r, round, state, &self.cadence, drift)
            }
        });

        let mut traffic = ControlTraffic::default();
        let polled_nodes: Vec<&NodeState> = nodes
            .iter()
            .filter(|n| n.region.is_some_and(|r| poll[r]))
            .collect();
        let mut polled = vec![false; nodes.len()];
        if let Some(losses) = estimate_rssi_loss(polled_nodes, &mut traffic)? {
            for &id in losses.keys() {
                polled[id] = true;
            }
            for r in RegionId::ALL.into_iter().filter(|&r| poll[r]) {
                state.n_current[r] = alive_per_region[r];
                state.last_closed_loop_round[r] = Some(round);
            }
            state.last_estimated_loss.extend(losses);
        }

        for node in nodes.iter_mut().filter(|n| n.alive) {
            let Some(region) = node.region else { continue };
            let previous = node
                .assigned_level
                .unwrap_or_else(|| self.regions.threshold_level(region));
            let level = east_assign(region, predicted[node.id], previous, state, &self.regions)?;
            node.assigned_level = Some(if level.0 > self.level_cap.0 {
                self.level_cap
            } else {
                level
            });
        }
        Ok(Some(ControlStep { traffic, polled }))
    }
}
