//! Straight-line reference executor used to cross-check the engine.
//!
//! Written from the model description only: it shares no code with the
//! library apart from reading parameters out of `SimConfig`.

#![allow(dead_code)]

use east_core::config::{PrrMode, SimConfig};
use east_core::ControllerKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleNode {
    pub region: usize,
    pub temp: f64,
    pub loss: f64,
    pub level: f64,
    pub pt: f64,
    pub prr: Option<f64>,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRound {
    pub round: usize,
    pub beacons: u64,
    pub acks: u64,
    pub tx_j: f64,
    pub rx_j: f64,
    pub alive: usize,
    pub alive_region: [usize; 3],
    pub prr_region: [Option<f64>; 3],
    pub nodes: Vec<OracleNode>,
}

fn fnv(label: &str) -> u64 {
    let mut h = 14695981039346656037u64;
    for b in label.as_bytes() {
        h = (h ^ *b as u64).wrapping_mul(1099511628211);
    }
    h
}

fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn rng(seed: u64, label: &str, idx: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(mix(seed ^ fnv(label)) ^ idx as u64))
}

pub fn run(cfg: &SimConfig) -> Vec<OracleRound> {
    let n = cfg.node_count;
    let seed = cfg.seed;
    let side = cfg.area_side_m;
    let tmin = cfg.temperature.t_min_c;
    let tmax = cfg.temperature.t_max_c;
    let sigma = cfg.temperature.walk_sigma_c;
    let east = cfg.controller == ControllerKind::East;
    let cap = cfg.level_cap.0;
    let period = cfg.cadence.period_rounds;
    let drift_limit = cfg.cadence.drift_db;
    let e = &cfg.energy;
    let lb = &cfg.link_budget;

    let loss_of = |t: f64| 0.1996 * (t - 25.0);
    let level_of = |l: f64| ((l + 40.0) / 12.0).powf(2.91);
    let hi = cfg.regions.boundary_high.0;
    let lo = cfg.regions.boundary_low.0;
    let region_of = |l: f64| {
        if l > hi {
            0
        } else if l > lo {
            1
        } else {
            2
        }
    };
    let thr_loss: Vec<f64> = cfg.regions.threshold_loss.0.iter().map(|l| l.0).collect();
    let thr_level: Vec<f64> = thr_loss.iter().map(|&l| level_of(l)).collect();
    let classical = level_of(loss_of(tmax));

    // deployment
    let mut dep = rng(seed, "deploy", 0);
    let mut pos = Vec::new();
    for _ in 0..n {
        let x = dep.random::<f64>() * side;
        let y = dep.random::<f64>() * side;
        pos.push((x, y));
    }
    let reference = (0.0, side / 2.0);

    // link budget
    let k = 1.380649e-23;
    let lambda = 299792458.0 / lb.frequency_hz;
    let mut base = Vec::new();
    for &(x, y) in &pos {
        let mut d = ((x - reference.0).powi(2) + (y - reference.1).powi(2)).sqrt();
        if d < 1.0 {
            d = 1.0;
        }
        let fspl = 20.0 * (4.0 * std::f64::consts::PI * d / lambda).log10();
        let noise =
            10.0 * (lb.margin_m * k * lb.temperature_kelvin * lb.bandwidth_hz / 1e-3).log10();
        base.push(10.0 * lb.eta.log10() + lb.eb_n0_db + noise + fspl + lb.rnf_db);
    }

    let mut temp = Vec::new();
    for i in 0..n {
        let u: f64 = rng(seed, "base_temp", i).random();
        temp.push((tmin + u * (tmax - tmin)).clamp(tmin, tmax));
    }
    let mut walk: Vec<ChaCha8Rng> = (0..n).map(|i| rng(seed, "temperature", i)).collect();
    let mut prr_rng: Vec<ChaCha8Rng> = (0..n).map(|i| rng(seed, "prr", i)).collect();

    let mut battery = vec![e.initial_battery_j; n];
    let mut alive = vec![true; n];
    let mut region = vec![usize::MAX; n];
    let mut level = vec![f64::NAN; n];
    let mut pt = vec![f64::NAN; n];
    let mut n_cur = [0usize; 3];
    let mut n_des = [0usize; 3];
    let mut last_poll = [0usize; 3];
    let mut last_est = vec![f64::NAN; n];

    let rule = |r: usize, l: f64, prev: f64, n_cur: &[usize; 3], n_des: &[usize; 3]| -> f64 {
        if l < thr_loss[r] {
            prev
        } else if n_cur[r] >= n_des[r] {
            thr_level[r]
        } else {
            let own = level_of(l);
            if own > prev {
                own
            } else {
                prev
            }
        }
    };

    let mut out = Vec::new();
    for round in 0..cfg.rounds {
        if round > 0 {
            for i in 0..n {
                let z: f64 = walk[i].sample(StandardNormal);
                temp[i] = (temp[i] + sigma * z).clamp(tmin, tmax);
            }
        }
        if !alive.iter().any(|&a| a) {
            break;
        }

        let mut beacons = 0u64;
        let mut acks = 0u64;
        let mut polled = vec![false; n];

        if round == 0 {
            beacons = 1;
            for i in 0..n {
                if alive[i] {
                    acks += 1;
                    polled[i] = true;
                    let l = loss_of(temp[i]);
                    region[i] = region_of(l);
                    n_cur[region[i]] += 1;
                    last_est[i] = l;
                }
            }
            for r in 0..3 {
                n_des[r] = n_cur[r].saturating_sub(5);
            }
            for i in 0..n {
                if alive[i] {
                    let v = if east {
                        rule(
                            region[i],
                            loss_of(temp[i]),
                            thr_level[region[i]],
                            &n_cur,
                            &n_des,
                        )
                    } else {
                        classical
                    };
                    level[i] = v.min(cap);
                }
            }
        } else if !east {
            beacons = 1;
            for i in 0..n {
                if alive[i] {
                    acks += 1;
                    polled[i] = true;
                    level[i] = classical.min(cap);
                }
            }
        } else {
            let mut alive_r = [0usize; 3];
            let mut drift = [0.0f64; 3];
            for i in 0..n {
                if alive[i] {
                    alive_r[region[i]] += 1;
                    let dv = (loss_of(temp[i]) - last_est[i]).abs();
                    if dv > drift[region[i]] {
                        drift[region[i]] = dv;
                    }
                }
            }
            let mut poll = [false; 3];
            for r in 0..3 {
                poll[r] =
                    alive_r[r] > 0 && (round - last_poll[r] >= period || drift[r] > drift_limit);
            }
            if poll.iter().any(|&p| p) {
                beacons = 1;
                for i in 0..n {
                    if alive[i] && poll[region[i]] {
                        acks += 1;
                        polled[i] = true;
                        last_est[i] = loss_of(temp[i]);
                    }
                }
                for r in 0..3 {
                    if poll[r] {
                        n_cur[r] = alive_r[r];
                        last_poll[r] = round;
                    }
                }
            }
            for i in 0..n {
                if alive[i] {
                    level[i] = rule(region[i], loss_of(temp[i]), level[i], &n_cur, &n_des).min(cap);
                }
            }
        }

        let mut tx_j = 0.0;
        let mut rx_j = 0.0;
        let mut prr = vec![None; n];
        for i in 0..n {
            let u: Option<f64> = if cfg.prr_mode == PrrMode::Bernoulli {
                Some(prr_rng[i].random())
            } else {
                None
            };
            if !alive[i] {
                continue;
            }
            pt[i] = base[i] + level[i];
            let margin = level[i] - level_of(loss_of(temp[i]));
            let p = 1.0 / (1.0 + (-cfg.prr.alpha * (margin - cfg.prr.beta_db)).exp());
            prr[i] = Some(match u {
                Some(u) if u < p => 1.0,
                Some(_) => 0.0,
                None => p,
            });
            let watts = 10f64.powf((pt[i] - 30.0) / 10.0);
            let tx_cost = |bits: u32| {
                e.e_elec_j_per_bit * bits as f64 + watts * (bits as f64 / e.bitrate_bps)
            };
            let mut spend = |cost: f64| -> f64 {
                let d = if cost < battery[i] { cost } else { battery[i] };
                battery[i] -= d;
                d
            };
            if polled[i] {
                rx_j += spend(e.e_elec_j_per_bit * e.beacon_bits as f64);
                tx_j += spend(tx_cost(e.ack_bits));
            }
            tx_j += spend(tx_cost(e.data_bits));
            if battery[i] <= 0.0 {
                alive[i] = false;
            }
        }

        let mut alive_region = [0usize; 3];
        let mut prr_sum = [0.0f64; 3];
        let mut prr_cnt = [0usize; 3];
        for i in 0..n {
            if alive[i] {
                alive_region[region[i]] += 1;
            }
            if let Some(p) = prr[i] {
                prr_sum[region[i]] += p;
                prr_cnt[region[i]] += 1;
            }
        }
        let mut prr_region = [None; 3];
        for r in 0..3 {
            if prr_cnt[r] > 0 {
                prr_region[r] = Some(prr_sum[r] / prr_cnt[r] as f64);
            }
        }
        out.push(OracleRound {
            round,
            beacons,
            acks,
            tx_j,
            rx_j,
            alive: alive.iter().filter(|&&a| a).count(),
            alive_region,
            prr_region,
            nodes: (0..n)
                .map(|i| OracleNode {
                    region: region[i],
                    temp: temp[i],
                    loss: loss_of(temp[i]),
                    level: level[i],
                    pt: pt[i],
                    prr: prr[i],
                    alive: alive[i],
                })
                .collect(),
        });
        if !alive.iter().any(|&a| a) {
            break;
        }
    }
    out
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Compares engine records with oracle rounds; returns the first mismatch.
pub fn diff(records: &[east_core::RoundRecord], oracle: &[OracleRound]) -> Result<(), String> {
    if records.len() != oracle.len() {
        return Err(format!(
            "round count {} vs oracle {}",
            records.len(),
            oracle.len()
        ));
    }
    for (r, o) in records.iter().zip(oracle) {
        let ctx = |what: &str| format!("round {} {what}", o.round);
        if r.round != o.round
            || r.traffic.beacons_sent != o.beacons
            || r.traffic.acks_sent != o.acks
            || r.alive != o.alive
            || r.alive_per_region.0 != o.alive_region
        {
            return Err(ctx("counters"));
        }
        if !close(r.tx_energy_j, o.tx_j) || !close(r.rx_energy_j, o.rx_j) {
            return Err(ctx(&format!(
                "energy {} {} vs {} {}",
                r.tx_energy_j, r.rx_energy_j, o.tx_j, o.rx_j
            )));
        }
        for k in 0..3 {
            match (r.prr_per_region.0[k], o.prr_region[k]) {
                (None, None) => {}
                (Some(a), Some(b)) if close(a, b) => {}
                other => return Err(ctx(&format!("region prr {k}: {other:?}"))),
            }
        }
        for (i, (n, on)) in r.nodes.iter().zip(&o.nodes).enumerate() {
            let region_ok = n.region.map(|x| x.index()) == Some(on.region);
            let level_ok = n.level.is_some_and(|l| close(l.0, on.level));
            let pt_ok = n.pt.is_some_and(|p| close(p.0, on.pt));
            let prr_ok = match (n.prr, on.prr) {
                (None, None) => true,
                (Some(a), Some(b)) => close(a, b),
                _ => false,
            };
            if !(region_ok
                && close(n.temp.0, on.temp)
                && close(n.loss.0, on.loss)
                && level_ok
                && pt_ok
                && prr_ok
                && n.alive == on.alive)
            {
                return Err(ctx(&format!("node {i}: {n:?} vs {on:?}")));
            }
        }
    }
    Ok(())
}
