//! Radio link models: temperature-induced RSSI loss, compensation power level,
//! free-space link budget, packet reception ratio and first-order radio energy.
//!
//! Units are carried by newtypes. All functions are pure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant, J/K (exact SI value).
pub const BOLTZMANN_J_PER_K: f64 = 1.380_649e-23;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT_M_PER_S: f64 = 299_792_458.0;

/// Temperature at which the RSSI loss is zero.
pub const REFERENCE_TEMPERATURE_C: f64 = 25.0;
/// RSSI loss slope, dB per degree Celsius.
pub const RSSI_LOSS_DB_PER_C: f64 = 0.1996;
/// Offset, divisor and exponent of the least-squares power-level fit.
pub const LEVEL_FIT_OFFSET_DB: f64 = 40.0;
pub const LEVEL_FIT_DIVISOR: f64 = 12.0;
pub const LEVEL_FIT_EXPONENT: f64 = 2.91;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TemperatureC(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct RssiLossDbm(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PowerDbm(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PowerWatts(pub f64);

impl std::ops::Add for PowerDbm {
    type Output = PowerDbm;

    fn add(self, rhs: PowerDbm) -> PowerDbm {
        PowerDbm(self.0 + rhs.0)
    }
}

/// Constants of the free-space link budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetParams {
    /// Spectral efficiency, dimensionless.
    pub eta: f64,
    pub eb_n0_db: f64,
    /// Kept for completeness of the parameter set; not used by the budget.
    pub snr_db: f64,
    pub bandwidth_hz: f64,
    pub frequency_hz: f64,
    /// Receiver noise figure.
    pub rnf_db: f64,
    pub temperature_kelvin: f64,
    /// Margin on thermal noise, dimensionless, >= 1.
    pub margin_m: f64,
}

impl Default for LinkBudgetParams {
    fn default() -> Self {
        Self {
            eta: 0.0029,
            eb_n0_db: 8.3,
            snr_db: 0.20,
            bandwidth_hz: 83.5e6,
            frequency_hz: 2.45e9,
            rnf_db: 5.0,
            temperature_kelvin: 300.0,
            margin_m: 1.0,
        }
    }
}

impl LinkBudgetParams {
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT_M_PER_S / self.frequency_hz
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("link_budget.eta", self.eta),
            ("link_budget.eb_n0_db", self.eb_n0_db),
            ("link_budget.snr_db", self.snr_db),
            ("link_budget.bandwidth_hz", self.bandwidth_hz),
            ("link_budget.frequency_hz", self.frequency_hz),
            ("link_budget.rnf_db", self.rnf_db),
            ("link_budget.temperature_k", self.temperature_kelvin),
            ("link_budget.margin_m", self.margin_m),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
        }
        if self.eta <= 0.0 {
            return Err(Error::config("link_budget.eta", "must be > 0"));
        }
        if self.bandwidth_hz <= 0.0 {
            return Err(Error::config("link_budget.bandwidth_hz", "must be > 0"));
        }
        if self.frequency_hz <= 0.0 {
            return Err(Error::config("link_budget.frequency_hz", "must be > 0"));
        }
        if self.temperature_kelvin <= 0.0 {
            return Err(Error::config("link_budget.temperature_k", "must be > 0"));
        }
        if self.margin_m < 1.0 {
            return Err(Error::config("link_budget.margin_m", "must be >= 1"));
        }
        Ok(())
    }
}

/// Logistic packet-reception model over link margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrrParams {
    /// Slope per dB.
    pub alpha: f64,
    /// Margin (dB) at which reception is 50 %.
    pub beta_db: f64,
}

impl Default for PrrParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta_db: -4.0,
        }
    }
}

impl PrrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::config("prr.alpha", "must be finite and > 0"));
        }
        if !self.beta_db.is_finite() {
            return Err(Error::config("prr.beta_db", "must be finite"));
        }
        Ok(())
    }
}

/// First-order radio energy model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyModelParams {
    pub e_elec_j_per_bit: f64,
    pub bitrate_bps: f64,
    pub beacon_bits: u32,
    pub ack_bits: u32,
    pub data_bits: u32,
    pub initial_battery_j: f64,
}

impl Default for EnergyModelParams {
    fn default() -> Self {
        Self {
            e_elec_j_per_bit: 50e-9,
            bitrate_bps: 250_000.0,
            beacon_bits: 256,
            ack_bits: 256,
            data_bits: 1024,
            initial_battery_j: 2.0,
        }
    }
}

impl EnergyModelParams {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("energy.e_elec_j_per_bit", self.e_elec_j_per_bit),
            ("energy.bitrate_bps", self.bitrate_bps),
            ("energy.initial_battery_j", self.initial_battery_j),
        ];
        for (key, v) in reals {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, "must be finite and > 0"));
            }
        }
        let counts = [
            ("energy.beacon_bits", self.beacon_bits),
            ("energy.ack_bits", self.ack_bits),
            ("energy.data_bits", self.data_bits),
        ];
        for (key, v) in counts {
            if v == 0 {
                return Err(Error::config(key, "must be > 0"));
            }
        }
        Ok(())
    }
}

fn ensure_finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be finite, got {v}")))
    }
}

/// Transmit-power loss caused by ambient temperature, linear around 25 °C.
pub fn rssi_loss_from_temperature(t: TemperatureC) -> Result<RssiLossDbm> {
    ensure_finite(t.0, "temperature")?;
    Ok(RssiLossDbm(
        RSSI_LOSS_DB_PER_C * (t.0 - REFERENCE_TEMPERATURE_C),
    ))
}

/// Power level that compensates a given RSSI loss.
///
/// Defined only for losses above -40 dB, where the base of the fractional
/// power is positive.
pub fn power_level_for_rssi_loss(loss: RssiLossDbm) -> Result<PowerDbm> {
    ensure_finite(loss.0, "rssi loss")?;
    if loss.0 <= -LEVEL_FIT_OFFSET_DB {
        return Err(Error::domain(format!(
            "rssi loss must exceed -{LEVEL_FIT_OFFSET_DB} dB, got {}",
            loss.0
        )));
    }
    Ok(PowerDbm(
        ((loss.0 + LEVEL_FIT_OFFSET_DB) / LEVEL_FIT_DIVISOR).powf(LEVEL_FIT_EXPONENT),
    ))
}

/// Convenience composition of the two temperature relations.
pub fn power_level_for_temperature(t: TemperatureC) -> Result<PowerDbm> {
    power_level_for_rssi_loss(rssi_loss_from_temperature(t)?)
}

/// Receiver-side free-space requirement at distance `d_m`, as a dB budget:
///
/// ```text
/// 10log10(eta) + Eb/N0 + 10log10(m k T B / 1 mW) + 20log10(4 pi d / lambda) + RNF
/// ```
pub fn free_space_base_requirement(d_m: f64, p: &LinkBudgetParams) -> Result<PowerDbm> {
    ensure_finite(d_m, "distance")?;
    if d_m <= 0.0 {
        return Err(Error::domain(format!("distance must be > 0, got {d_m}")));
    }
    let efficiency_db = 10.0 * p.eta.log10();
    let noise_dbm = 10.0
        * (p.margin_m * BOLTZMANN_J_PER_K * p.temperature_kelvin * p.bandwidth_hz / 1e-3).log10();
    let path_loss_db = 20.0 * (4.0 * std::f64::consts::PI * d_m / p.wavelength_m()).log10();
    Ok(PowerDbm(
        efficiency_db + p.eb_n0_db + noise_dbm + path_loss_db + p.rnf_db,
    ))
}

/// Transmit power needed at distance `d_m` once the compensation `level` is added.
pub fn required_transmit_power(
    d_m: f64,
    level: PowerDbm,
    p: &LinkBudgetParams,
) -> Result<PowerDbm> {
    Ok(free_space_base_requirement(d_m, p)? + level)
}

pub fn dbm_to_watts(p: PowerDbm) -> PowerWatts {
    PowerWatts(10f64.powf((p.0 - 30.0) / 10.0))
}

pub fn watts_to_dbm(w: PowerWatts) -> Result<PowerDbm> {
    if !(w.0.is_finite() && w.0 > 0.0) {
        return Err(Error::domain(format!(
            "power must be finite and > 0 W, got {}",
            w.0
        )));
    }
    Ok(PowerDbm(10.0 * w.0.log10() + 30.0))
}

/// Expected packet reception ratio for a link margin (dB), in (0, 1).
pub fn prr_from_margin(margin_db: f64, q: &PrrParams) -> Result<f64> {
    if margin_db.is_nan() {
        return Err(Error::domain("link margin is NaN"));
    }
    Ok(1.0 / (1.0 + (-q.alpha * (margin_db - q.beta_db)).exp()))
}

/// Energy to transmit `bits` at radiated power `p_t`: electronics plus radiated power over airtime.
pub fn tx_energy(p_t: PowerDbm, bits: u32, e: &EnergyModelParams) -> Result<f64> {
    if bits == 0 {
        return Err(Error::domain("bit count must be > 0"));
    }
    ensure_finite(p_t.0, "transmit power")?;
    let bits = f64::from(bits);
    Ok(e.e_elec_j_per_bit * bits + dbm_to_watts(p_t).0 * (bits / e.bitrate_bps))
}

pub fn rx_energy(bits: u32, e: &EnergyModelParams) -> Result<f64> {
    if bits == 0 {
        return Err(Error::domain("bit count must be > 0"));
    }
    Ok(e.e_elec_j_per_bit * f64::from(bits))
}
