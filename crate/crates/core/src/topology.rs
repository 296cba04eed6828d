//! Node deployment, distance geometry and the per-round temperature process.
//!
//! Every random draw comes from a ChaCha8 stream keyed by
//! `(root seed, purpose label, index)`:
//!
//! ```text
//! stream_seed = splitmix64(splitmix64(root ^ fnv1a64(label)) ^ index)
//! ```
//!
//! so deployment, base temperatures and temperature walks never share state.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::RegionId;
use crate::radio::{PowerDbm, TemperatureC};

pub const STREAM_DEPLOY: &str = "deploy";
pub const STREAM_BASE_TEMP: &str = "base_temp";
pub const STREAM_TEMPERATURE: &str = "temperature";
pub const STREAM_PRR: &str = "prr";

pub fn fnv1a64(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_seed(root: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ fnv1a64(label)) ^ index)
}

pub fn stream(root: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(root, label, index))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Euclidean distance in meters.
pub fn distance(a: Position, b: Position) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: usize,
    pub pos: Position,
    pub base_temp: TemperatureC,
    pub current_temp: TemperatureC,
    pub battery_j: f64,
    pub assigned_level: Option<PowerDbm>,
    pub assigned_pt: Option<PowerDbm>,
    pub alive: bool,
    pub region: Option<RegionId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub nodes: Vec<NodeState>,
    pub reference_pos: Position,
    pub area_side: f64,
    pub seed: u64,
}

/// Places `n` nodes uniformly over an `area_side` square, with the reference
/// node at the midpoint of the left edge.
///
/// Nodes start at the reference temperature with an empty battery; callers
/// seed temperatures and batteries afterwards.
pub fn deploy_random(n: usize, area_side: f64, seed: u64) -> Result<Deployment> {
    if n == 0 {
        return Err(Error::config("node_count", "must be >= 1"));
    }
    if !(area_side.is_finite() && area_side > 0.0) {
        return Err(Error::config("area_side_m", "must be finite and > 0"));
    }
    let mut rng = stream(seed, STREAM_DEPLOY, 0);
    let nodes = (0..n)
        .map(|id| {
            let x = rng.random::<f64>() * area_side;
            let y = rng.random::<f64>() * area_side;
            NodeState {
                id,
                pos: Position::new(x, y),
                base_temp: TemperatureC(crate::radio::REFERENCE_TEMPERATURE_C),
                current_temp: TemperatureC(crate::radio::REFERENCE_TEMPERATURE_C),
                battery_j: 0.0,
                assigned_level: None,
                assigned_pt: None,
                alive: true,
                region: None,
            }
        })
        .collect();
    Ok(Deployment {
        nodes,
        reference_pos: Position::new(0.0, area_side / 2.0),
        area_side,
        seed,
    })
}

impl Deployment {
    /// Sets every node's base and current temperature from the process.
    pub fn seed_temperatures(&mut self, proc: &TemperatureProcess) -> Result<()> {
        for node in &mut self.nodes {
            let t = proc.base_temperature(self.seed, node.id)?;
            node.base_temp = t;
            node.current_temp = t;
        }
        Ok(())
    }

    pub fn charge_batteries(&mut self, joules: f64) {
        for node in &mut self.nodes {
            node.battery_j = joules;
            node.alive = joules > 0.0;
        }
    }

    pub fn alive_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }
}

/// Dense per-node, per-round temperature table.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureTrace {
    nodes: usize,
    rounds: usize,
    values: Vec<f64>,
}

impl TemperatureTrace {
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, node: usize, round: usize) -> Result<TemperatureC> {
        if node >= self.nodes || round >= self.rounds {
            return Err(Error::Data(format!(
                "temperature trace has no entry for node {node} round {round}"
            )));
        }
        Ok(TemperatureC(self.values[node * self.rounds + round]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TemperatureSource {
    /// Uniform base temperature plus a clamped Gaussian random walk.
    Synthetic,
    Trace(Arc<TemperatureTrace>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureProcess {
    pub t_min: TemperatureC,
    pub t_max: TemperatureC,
    /// Standard deviation of the per-round walk step, °C.
    pub walk_sigma_c: f64,
    pub source: TemperatureSource,
}

impl Default for TemperatureProcess {
    fn default() -> Self {
        Self {
            t_min: TemperatureC(-10.0),
            t_max: TemperatureC(53.0),
            walk_sigma_c: 0.5,
            source: TemperatureSource::Synthetic,
        }
    }
}

impl TemperatureProcess {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_min.0.is_finite() && self.t_max.0.is_finite()) {
            return Err(Error::config(
                "temperature.t_min_c",
                "bounds must be finite",
            ));
        }
        if self.t_min.0 >= self.t_max.0 {
            return Err(Error::config(
                "temperature.t_min_c",
                format!(
                    "must be below temperature.t_max_c ({} >= {})",
                    self.t_min.0, self.t_max.0
                ),
            ));
        }
        if !(self.walk_sigma_c.is_finite() && self.walk_sigma_c >= 0.0) {
            return Err(Error::config(
                "temperature.walk_sigma_c",
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }

    fn clamp(&self, t: f64) -> f64 {
        t.clamp(self.t_min.0, self.t_max.0)
    }

    /// Temperature of `node` at round 0.
    pub fn base_temperature(&self, seed: u64, node: usize) -> Result<TemperatureC> {
        match &self.source {
            TemperatureSource::Synthetic => {
                let u: f64 = stream(seed, STREAM_BASE_TEMP, node as u64).random();
                Ok(TemperatureC(
                    self.clamp(self.t_min.0 + u * (self.t_max.0 - self.t_min.0)),
                ))
            }
            TemperatureSource::Trace(trace) => trace.get(node, 0),
        }
    }

    /// Stateful per-node walk, advanced one round at a time.
    pub fn walk(&self, seed: u64, node: usize, base: TemperatureC) -> TemperatureWalk {
        TemperatureWalk {
            node,
            round: 0,
            current: base,
            rng: stream(seed, STREAM_TEMPERATURE, node as u64),
        }
    }
}

pub struct TemperatureWalk {
    node: usize,
    round: usize,
    current: TemperatureC,
    rng: ChaCha8Rng,
}

impl TemperatureWalk {
    pub fn current(&self) -> TemperatureC {
        self.current
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Moves to the next round and returns its temperature.
    pub fn advance(&mut self, proc: &TemperatureProcess) -> Result<TemperatureC> {
        self.round += 1;
        self.current = match &proc.source {
            TemperatureSource::Synthetic => {
                let z: f64 = self.rng.sample(StandardNormal);
                TemperatureC(proc.clamp(self.current.0 + proc.walk_sigma_c * z))
            }
            TemperatureSource::Trace(trace) => trace.get(self.node, self.round)?,
        };
        Ok(self.current)
    }
}

/// Temperature of `node` at `round`, replaying its walk from round 0.
pub fn temperature_at(
    node: &NodeState,
    round: usize,
    proc: &TemperatureProcess,
    seed: u64,
) -> Result<TemperatureC> {
    if let TemperatureSource::Trace(trace) = &proc.source {
        return trace.get(node.id, round);
    }
    let mut walk = proc.walk(seed, node.id, node.base_temp);
    while walk.round() < round {
        walk.advance(proc)?;
    }
    Ok(walk.current())
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    node: usize,
    round: usize,
    temp_c: f64,
}

/// Reads a `node,round,temp_c` table into a trace-mode process.
///
/// Requires every `(node, round)` pair for `node_count` x `rounds` to be
/// present exactly once and every value to lie within `[t_min, t_max]`.
/// Rows for rounds past `rounds` are ignored.
pub fn load_temperature_trace(
    path: &Path,
    node_count: usize,
    rounds: usize,
    t_min: TemperatureC,
    t_max: TemperatureC,
) -> Result<TemperatureProcess> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Data(format!("{}: {other:?}", path.display())),
        })?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let expected = ["node", "round", "temp_c"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Data(format!(
            "{}: header must be `node,round,temp_c`, got `{}`",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut values = vec![f64::NAN; node_count * rounds];
    let mut seen = vec![false; node_count * rounds];
    for (i, row) in reader.deserialize::<TraceRow>().enumerate() {
        // header is line 1
        let line = i + 2;
        let row = row.map_err(|e| {
            Error::Data(format!(
                "{} line {line}: malformed row ({e})",
                path.display()
            ))
        })?;
        if row.node >= node_count {
            return Err(Error::Data(format!(
                "{} line {line}: node {} outside configured node count {node_count}",
                path.display(),
                row.node
            )));
        }
        if row.round >= rounds {
            continue;
        }
        if !row.temp_c.is_finite() || row.temp_c < t_min.0 || row.temp_c > t_max.0 {
            return Err(Error::Data(format!(
                "{} line {line}: temperature {} outside declared range [{}, {}]",
                path.display(),
                row.temp_c,
                t_min.0,
                t_max.0
            )));
        }
        let idx = row.node * rounds + row.round;
        if seen[idx] {
            return Err(Error::Data(format!(
                "{} line {line}: duplicate entry for node {} round {}",
                path.display(),
                row.node,
                row.round
            )));
        }
        seen[idx] = true;
        values[idx] = row.temp_c;
    }
    if let Some(idx) = seen.iter().position(|s| !s) {
        return Err(Error::Data(format!(
            "{}: missing entry for node {} round {}",
            path.display(),
            idx / rounds,
            idx % rounds
        )));
    }

    Ok(TemperatureProcess {
        t_min,
        t_max,
        walk_sigma_c: 0.0,
        source: TemperatureSource::Trace(Arc::new(TemperatureTrace {
            nodes: node_count,
            rounds,
            values,
        })),
    })
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    #[test]
    fn deployment_is_deterministic_and_bounded() {
        let a = deploy_random(100, 100.0, 42).unwrap();
        let b = deploy_random(100, 100.0, 42).unwrap();
        assert_eq!(a, b);
        for n in &a.nodes {
            assert!((0.0..=100.0).contains(&n.pos.x));
            assert!((0.0..=100.0).contains(&n.pos.y));
        }
        assert_eq!(a.reference_pos, Position::new(0.0, 50.0));
        assert_ne!(a, deploy_random(100, 100.0, 43).unwrap());
    }

    #[test]
    fn deployment_rejects_empty() {
        assert!(matches!(
            deploy_random(0, 100.0, 1),
            Err(Error::Config { .. })
        ));
        assert!(deploy_random(3, 0.0, 1).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            distance(Position::new(0.0, 0.0), Position::new(3.0, 4.0)),
            5.0
        );
        let d = distance(Position::new(0.0, 0.0), Position::new(100.0, 100.0));
        assert!((d - 141.421356).abs() < 1e-6);
    }

    #[test]
    fn zero_sigma_walk_is_constant() {
        let proc = TemperatureProcess {
            walk_sigma_c: 0.0,
            ..Default::default()
        };
        let mut d = deploy_random(3, 100.0, 9).unwrap();
        d.seed_temperatures(&proc).unwrap();
        for node in &d.nodes {
            for r in [0, 1, 17, 200] {
                assert_eq!(temperature_at(node, r, &proc, 9).unwrap(), node.base_temp);
            }
        }
    }

    #[test]
    fn walk_matches_replay() {
        let proc = TemperatureProcess::default();
        let mut d = deploy_random(2, 100.0, 5).unwrap();
        d.seed_temperatures(&proc).unwrap();
        let node = &d.nodes[1];
        let mut walk = proc.walk(5, node.id, node.base_temp);
        for r in 1..50 {
            let t = walk.advance(&proc).unwrap();
            assert_eq!(t, temperature_at(node, r, &proc, 5).unwrap());
        }
    }

    fn write_trace(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn trace_well_formed() {
        let f =
            write_trace("node,round,temp_c\n0,0,10.5\n0,1,11\n0,2,12\n1,0,-3\n1,1,-2.5\n1,2,40\n");
        let proc = load_temperature_trace(f.path(), 2, 3, TemperatureC(-10.0), TemperatureC(53.0))
            .unwrap();
        let TemperatureSource::Trace(trace) = &proc.source else {
            panic!("expected trace mode");
        };
        assert_eq!(trace.len(), 6);
        assert_eq!(trace.get(1, 1).unwrap(), TemperatureC(-2.5));
        assert_eq!(proc.base_temperature(0, 0).unwrap(), TemperatureC(10.5));
    }

    #[test]
    fn trace_coverage_gap_names_pair() {
        let f = write_trace("node,round,temp_c\n0,0,1\n0,1,1\n0,2,1\n1,0,1\n1,1,1\n");
        let err = load_temperature_trace(f.path(), 2, 3, TemperatureC(-10.0), TemperatureC(53.0))
            .unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Data(_)));
        assert!(msg.contains("node 1 round 2"), "{msg}");
    }

    #[test]
    fn trace_out_of_range_value() {
        let f = write_trace("node,round,temp_c\n0,0,60\n");
        let err = load_temperature_trace(f.path(), 1, 1, TemperatureC(-10.0), TemperatureC(53.0))
            .unwrap_err();
        assert!(matches!(err, Error::Data(_)));
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn trace_malformed_row() {
        let f = write_trace("node,round,temp_c\n0,zero,1\n");
        let err = load_temperature_trace(f.path(), 1, 1, TemperatureC(-10.0), TemperatureC(53.0))
            .unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
