//! Round-based executor.
//!
//! Each round runs in a fixed order:
//!
//! 1. advance every node's temperature;
//! 2. run the controller (closed-loop poll or open-loop compensation);
//! 3. transmit power `p_t = base(d) + level` per alive node;
//! 4. one data packet per alive node, reception from the logistic PRR model;
//! 5. debit control and data energy;
//! 6. mark depleted nodes dead;
//! 7. emit a [`RoundRecord`].

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{PrrMode, SimConfig};
use crate::error::{Error, Result};
use crate::protocol::{ControlTraffic, Controller, ControllerKind, PerRegion, RegionId};
use crate::radio::{
    free_space_base_requirement, power_level_for_rssi_loss, prr_from_margin,
    rssi_loss_from_temperature, rx_energy, tx_energy, PowerDbm, RssiLossDbm, TemperatureC,
};
use crate::topology::{
    deploy_random, distance, stream, Deployment, NodeState, Position, TemperatureProcess,
    TemperatureWalk, STREAM_PRR,
};

/// Links shorter than this are budgeted as if at this distance.
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub region: Option<RegionId>,
    pub temp: TemperatureC,
    pub loss: RssiLossDbm,
    pub level: Option<PowerDbm>,
    pub pt: Option<PowerDbm>,
    /// Reception ratio of this round's data packet; `None` if the node did not transmit.
    pub prr: Option<f64>,
    /// State after this round's deaths were applied.
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub controller: ControllerKind,
    pub traffic: ControlTraffic,
    pub tx_energy_j: f64,
    pub rx_energy_j: f64,
    pub control_energy_j: f64,
    pub data_energy_j: f64,
    pub nodes: Vec<NodeRecord>,
    pub alive: usize,
    pub alive_per_region: PerRegion<usize>,
    /// Mean PRR over the region's transmitting nodes.
    pub prr_per_region: PerRegion<Option<f64>>,
}

/// Cumulative energy drawn from node batteries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub tx_j: f64,
    pub rx_j: f64,
    pub control_j: f64,
    pub data_j: f64,
}

impl EnergyLedger {
    pub fn total_j(&self) -> f64 {
        self.tx_j + self.rx_j
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub rounds_executed: usize,
    /// Round after which no node was alive, if that happened.
    pub extinction_round: Option<usize>,
    pub initial_battery_total_j: f64,
    pub final_battery_total_j: f64,
    pub ledger: EnergyLedger,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub config: SimConfig,
    pub reference_pos: Position,
    pub records: Vec<RoundRecord>,
    pub final_nodes: Vec<NodeState>,
    pub summary: RunSummary,
}

fn draw(battery: &mut f64, cost: f64) -> f64 {
    let drawn = cost.min(*battery).max(0.0);
    *battery -= drawn;
    drawn
}

/// A single run in progress.
pub struct Simulation {
    config: SimConfig,
    process: TemperatureProcess,
    deployment: Deployment,
    walks: Vec<TemperatureWalk>,
    prr_streams: Vec<ChaCha8Rng>,
    base_requirement: Vec<PowerDbm>,
    controller: Controller,
    ledger: EnergyLedger,
    initial_battery_total_j: f64,
    next_round: usize,
    extinct: bool,
}

impl Simulation {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let process = config.temperature_process()?;
        let mut deployment = deploy_random(config.node_count, config.area_side_m, config.seed)?;
        deployment.seed_temperatures(&process)?;
        deployment.charge_batteries(config.energy.initial_battery_j);

        let walks = deployment
            .nodes
            .iter()
            .map(|n| process.walk(config.seed, n.id, n.base_temp))
            .collect();
        let prr_streams = (0..config.node_count)
            .map(|i| stream(config.seed, STREAM_PRR, i as u64))
            .collect();
        let base_requirement = deployment
            .nodes
            .iter()
            .map(|n| {
                let d = distance(n.pos, deployment.reference_pos).max(MIN_LINK_DISTANCE_M);
                free_space_base_requirement(d, &config.link_budget)
            })
            .collect::<Result<Vec<_>>>()?;
        let controller = Controller::new(
            config.controller,
            config.regions.clone(),
            config.cadence,
            config.level_cap,
            TemperatureC(config.temperature.t_max_c),
        )?;
        let initial_battery_total_j = deployment.nodes.iter().map(|n| n.battery_j).sum();

        Ok(Self {
            config: config.clone(),
            process,
            deployment,
            walks,
            prr_streams,
            base_requirement,
            controller,
            ledger: EnergyLedger::default(),
            initial_battery_total_j,
            next_round: 0,
            extinct: false,
        })
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.deployment.nodes
    }

    pub fn deployment(&self) -> &Deployment {
        &self.deployment
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    /// Free-space requirement of each node's link to the reference node.
    pub fn base_requirements(&self) -> &[PowerDbm] {
        &self.base_requirement
    }

    pub fn next_round(&self) -> usize {
        self.next_round
    }

    /// Executes the next round. Returns `None` once every node is dead.
    pub fn run_round(&mut self) -> Result<Option<RoundRecord>> {
        if self.extinct {
            return Ok(None);
        }
        let round = self.next_round;
        let cfg = &self.config;
        let nodes = &mut self.deployment.nodes;

        // 1. temperatures
        if round > 0 {
            for (node, walk) in nodes.iter_mut().zip(self.walks.iter_mut()) {
                node.current_temp = walk.advance(&self.process)?;
            }
        }

        // 2. controller
        let Some(step) = self.controller.step(round, nodes)? else {
            self.extinct = true;
            return Ok(None);
        };

        // 3. transmit power
        for node in nodes.iter_mut().filter(|n| n.alive) {
            let level = node
                .assigned_level
                .expect("controller assigns every alive node");
            node.assigned_pt = Some(self.base_requirement[node.id] + level);
        }

        let mut prr = vec![None; nodes.len()];
        let mut round_ledger = EnergyLedger::default();
        let beacon_rx = rx_energy(cfg.energy.beacon_bits, &cfg.energy)?;
        for node in nodes.iter_mut() {
            let uniform: Option<f64> = match cfg.prr_mode {
                PrrMode::Bernoulli => Some(self.prr_streams[node.id].random()),
                PrrMode::Expectation => None,
            };
            if !node.alive {
                continue;
            }
            let level = node.assigned_level.expect("assigned above");
            let pt = node.assigned_pt.expect("assigned above");

            // 4. data packet reception
            let needed = power_level_for_rssi_loss(rssi_loss_from_temperature(node.current_temp)?)?;
            let expected = prr_from_margin(level.0 - needed.0, &cfg.prr)?;
            prr[node.id] = Some(match uniform {
                Some(u) => f64::from(u8::from(u < expected)),
                None => expected,
            });

            // 5. energy
            if step.polled[node.id] {
                let rx = draw(&mut node.battery_j, beacon_rx);
                let tx = draw(
                    &mut node.battery_j,
                    tx_energy(pt, cfg.energy.ack_bits, &cfg.energy)?,
                );
                round_ledger.rx_j += rx;
                round_ledger.tx_j += tx;
                round_ledger.control_j += rx + tx;
            }
            let data = draw(
                &mut node.battery_j,
                tx_energy(pt, cfg.energy.data_bits, &cfg.energy)?,
            );
            round_ledger.tx_j += data;
            round_ledger.data_j += data;

            // 6. death
            if node.battery_j <= 0.0 {
                node.alive = false;
            }
        }

        self.ledger.tx_j += round_ledger.tx_j;
        self.ledger.rx_j += round_ledger.rx_j;
        self.ledger.control_j += round_ledger.control_j;
        self.ledger.data_j += round_ledger.data_j;

        // 7. record
        let node_records = nodes
            .iter()
            .map(|n| {
                Ok(NodeRecord {
                    id: n.id,
                    region: n.region,
                    temp: n.current_temp,
                    loss: rssi_loss_from_temperature(n.current_temp)?,
                    level: n.assigned_level,
                    pt: n.assigned_pt,
                    prr: prr[n.id],
                    alive: n.alive,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let alive_per_region = PerRegion::from_fn(|r| {
            node_records
                .iter()
                .filter(|n| n.alive && n.region == Some(r))
                .count()
        });
        let prr_per_region = PerRegion::from_fn(|r| {
            let values: Vec<f64> = node_records
                .iter()
                .filter(|n| n.region == Some(r))
                .filter_map(|n| n.prr)
                .collect();
            (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
        });
        let alive = node_records.iter().filter(|n| n.alive).count();
        if alive == 0 {
            self.extinct = true;
        }
        self.next_round += 1;

        Ok(Some(RoundRecord {
            round,
            controller: cfg.controller,
            traffic: step.traffic,
            tx_energy_j: round_ledger.tx_j,
            rx_energy_j: round_ledger.rx_j,
            control_energy_j: round_ledger.control_j,
            data_energy_j: round_ledger.data_j,
            nodes: node_records,
            alive,
            alive_per_region,
            prr_per_region,
        }))
    }

    pub fn finish(self, records: Vec<RoundRecord>) -> SimOutput {
        let final_battery_total_j = self.deployment.nodes.iter().map(|n| n.battery_j).sum();
        let extinction_round = if self.extinct {
            records.last().map(|r| r.round)
        } else {
            None
        };
        SimOutput {
            summary: RunSummary {
                rounds_executed: records.len(),
                extinction_round,
                initial_battery_total_j: self.initial_battery_total_j,
                final_battery_total_j,
                ledger: self.ledger,
            },
            reference_pos: self.deployment.reference_pos,
            final_nodes: self.deployment.nodes,
            config: self.config,
            records,
        }
    }
}

/// Runs `config.rounds` rounds, stopping early if every node dies.
pub fn run_simulation(config: &SimConfig) -> Result<SimOutput> {
    let mut sim = Simulation::new(config)?;
    let mut records = Vec::with_capacity(config.rounds);
    while records.len() < config.rounds {
        match sim.run_round()? {
            Some(r) => records.push(r),
            None => break,
        }
    }
    if records.is_empty() {
        return Err(Error::Data("no node alive at the first round".into()));
    }
    Ok(sim.finish(records))
}
