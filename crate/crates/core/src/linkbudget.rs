//! Link budget: antenna gain, free-space path loss and the dB power balance
//! `P_r = P_t + G_t − L_p + G_r`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{power_to_db, Error, Result, BOLTZMANN};

/// Speed of light used throughout the budget, m/s.
pub const SPEED_OF_LIGHT: f64 = 3e8;

/// Parabolic dish description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaSpec {
    pub diameter_m: f64,
    pub efficiency: f64,
    #[serde(default)]
    pub pointing_loss_db: f64,
}

impl AntennaSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.diameter_m > 0.0 && self.diameter_m.is_finite()) {
            return Err(Error::param("diameter_m", "must be positive"));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::param("efficiency", "must be in (0, 1]"));
        }
        if !(self.pointing_loss_db >= 0.0) {
            return Err(Error::param("pointing_loss_db", "must be >= 0"));
        }
        Ok(())
    }
}

/// Path geometry of one leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkGeometry {
    pub range_m: f64,
    pub frequency_hz: f64,
}

impl LinkGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.range_m > 0.0 && self.range_m.is_finite()) {
            return Err(Error::param("range_m", "must be positive"));
        }
        if !(self.frequency_hz > 0.0 && self.frequency_hz.is_finite()) {
            return Err(Error::param("frequency_hz", "must be positive"));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }
}

/// Either a dish to evaluate or a gain quoted directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AntennaGain {
    Dish(AntennaSpec),
    GainDb(f64),
}

impl AntennaGain {
    /// Gain (dB) and pointing loss (dB) at `frequency_hz`.
    pub fn evaluate(&self, frequency_hz: f64) -> Result<(f64, f64)> {
        match self {
            AntennaGain::Dish(spec) => {
                Ok((antenna_gain_db(spec, frequency_hz)?, spec.pointing_loss_db))
            }
            AntennaGain::GainDb(g) if g.is_finite() => Ok((*g, 0.0)),
            AntennaGain::GainDb(g) => Err(Error::param("gain_db", format!("{g} is not finite"))),
        }
    }
}

/// `10·log10(η(πD/λ)²)`, pointing loss excluded.
pub fn antenna_gain_db(spec: &AntennaSpec, frequency_hz: f64) -> Result<f64> {
    spec.validate()?;
    if !(frequency_hz > 0.0 && frequency_hz.is_finite()) {
        return Err(Error::param("frequency_hz", "must be positive"));
    }
    let lambda = SPEED_OF_LIGHT / frequency_hz;
    Ok(power_to_db(
        spec.efficiency * (PI * spec.diameter_m / lambda).powi(2),
    ))
}

/// `20·log10(4πR/λ)`.
pub fn free_space_path_loss_db(geom: &LinkGeometry) -> Result<f64> {
    geom.validate()?;
    Ok(20.0 * (4.0 * PI * geom.range_m / geom.wavelength_m()).log10())
}

/// `10·log10(k_B·T·B)`, dBW.
pub fn noise_power_dbw(temperature_k: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(temperature_k > 0.0 && temperature_k.is_finite()) {
        return Err(Error::param("temperature_k", "must be positive"));
    }
    if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
        return Err(Error::param("bandwidth_hz", "must be positive"));
    }
    Ok(power_to_db(BOLTZMANN * temperature_k * bandwidth_hz))
}

/// One direction of the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetLeg {
    pub name: String,
    pub tx_power_w: f64,
    pub tx_antenna: AntennaGain,
    pub rx_antenna: AntennaGain,
    pub geometry: LinkGeometry,
    #[serde(default)]
    pub loss_override_db: Option<f64>,
    pub bandwidth_hz: f64,
    pub system_noise_temperature_k: f64,
}

impl BudgetLeg {
    pub fn validate(&self) -> Result<()> {
        if !(self.tx_power_w > 0.0 && self.tx_power_w.is_finite()) {
            return Err(Error::param("tx_power_w", "must be positive"));
        }
        self.geometry.validate()?;
        self.tx_antenna.evaluate(self.geometry.frequency_hz)?;
        self.rx_antenna.evaluate(self.geometry.frequency_hz)?;
        if let Some(l) = self.loss_override_db {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::param("loss_override_db", "must be >= 0"));
            }
        }
        noise_power_dbw(self.system_noise_temperature_k, self.bandwidth_hz)?;
        Ok(())
    }
}

/// Line items of one leg's budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetReport {
    pub name: String,
    pub tx_power_dbw: f64,
    pub tx_antenna_gain_db: f64,
    pub pointing_loss_db: f64,
    pub eirp_dbw: f64,
    pub path_loss_computed_db: f64,
    pub path_loss_override_db: Option<f64>,
    /// Loss actually used: the override when set.
    pub path_loss_db: f64,
    pub rx_gain_db: f64,
    pub rx_power_dbw: f64,
    pub noise_power_dbw: f64,
    pub cn_db: f64,
}

/// Evaluates the power balance for one leg.
///
/// EIRP carries the Tx pointing loss; an Rx-side pointing loss is folded into
/// the receive gain line.
pub fn compute_budget(leg: &BudgetLeg) -> Result<LinkBudgetReport> {
    leg.validate()?;
    let f = leg.geometry.frequency_hz;
    let (tx_gain, tx_pointing) = leg.tx_antenna.evaluate(f)?;
    let (rx_gain_raw, rx_pointing) = leg.rx_antenna.evaluate(f)?;
    let tx_power_dbw = power_to_db(leg.tx_power_w);
    let eirp_dbw = tx_power_dbw + tx_gain - tx_pointing;
    let computed = free_space_path_loss_db(&leg.geometry)?;
    let path_loss_db = leg.loss_override_db.unwrap_or(computed);
    let rx_gain_db = rx_gain_raw - rx_pointing;
    let rx_power_dbw = eirp_dbw - path_loss_db + rx_gain_db;
    let noise = noise_power_dbw(leg.system_noise_temperature_k, leg.bandwidth_hz)?;
    Ok(LinkBudgetReport {
        name: leg.name.clone(),
        tx_power_dbw,
        tx_antenna_gain_db: tx_gain,
        pointing_loss_db: tx_pointing + rx_pointing,
        eirp_dbw,
        path_loss_computed_db: computed,
        path_loss_override_db: leg.loss_override_db,
        path_loss_db,
        rx_gain_db,
        rx_power_dbw,
        noise_power_dbw: noise,
        cn_db: rx_power_dbw - noise,
    })
}

/// Received power from the product form `P_t G_t G_r c² / (4π² R² f²)`
/// scaled by the pointing losses, watts. Independent of the dB route.
pub fn received_power_linear_w(leg: &BudgetLeg) -> Result<f64> {
    leg.validate()?;
    let f = leg.geometry.frequency_hz;
    let lin = |db: f64| 10f64.powf(db / 10.0);
    let (gt, lt) = leg.tx_antenna.evaluate(f)?;
    let (gr, lr) = leg.rx_antenna.evaluate(f)?;
    let r = leg.geometry.range_m;
    let free_space = SPEED_OF_LIGHT.powi(2) / (4.0 * PI * r * f).powi(2);
    let loss_factor = match leg.loss_override_db {
        Some(l) => lin(-l) / free_space,
        None => 1.0,
    };
    Ok(leg.tx_power_w * lin(gt) * lin(gr) * free_space * loss_factor / lin(lt + lr))
}

/// End-to-end C/N of cascaded legs, `−10·log10(Σ 10^(−C/N_i/10))`.
pub fn combined_cn_db(legs: &[LinkBudgetReport]) -> Option<f64> {
    if legs.is_empty() {
        return None;
    }
    let inv: f64 = legs.iter().map(|r| 10f64.powf(-r.cn_db / 10.0)).sum();
    Some(-power_to_db(inv))
}
