//! Fuel-switching economics: marginal generation cost, its variance, the
//! carbon prices at which the coal/gas merit order flips, and the resulting
//! coupling regime of the carbon price.
//!
//! Formulas use €/GJ for fuel cost, kg CO₂/GJ for emission factors and
//! €/kg CO₂ for the carbon price, so marginal costs come out in €/GJ of
//! electricity. [`per_kg_to_per_tonne`] and [`per_gj_to_per_mwh`] convert to
//! the market quoting units.

use crate::error::{Error, Result};

pub const KG_PER_TONNE: f64 = 1000.0;
pub const GJ_PER_MWH: f64 = 3.6;

/// €/kg CO₂ → €/t CO₂.
pub fn per_kg_to_per_tonne(price: f64) -> f64 {
    price * KG_PER_TONNE
}

/// €/t CO₂ → €/kg CO₂.
pub fn per_tonne_to_per_kg(price: f64) -> f64 {
    price / KG_PER_TONNE
}

/// €/GJ → €/MWh.
pub fn per_gj_to_per_mwh(price: f64) -> f64 {
    price * GJ_PER_MWH
}

/// €/MWh → €/GJ.
pub fn per_mwh_to_per_gj(price: f64) -> f64 {
    price / GJ_PER_MWH
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fuel {
    Coal,
    Gas,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    pub fuel: Fuel,
    /// Net thermal efficiency, GJ of electricity per GJ of fuel.
    pub efficiency: f64,
    /// kg CO₂ per GJ of fuel.
    pub emission_factor: f64,
}

impl PlantParams {
    pub fn new(fuel: Fuel, efficiency: f64, emission_factor: f64) -> Result<Self> {
        let p = Self {
            fuel,
            efficiency,
            emission_factor,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency < 1.0) {
            return Err(Error::InvalidParams(format!(
                "efficiency must lie in (0, 1), got {}",
                self.efficiency
            )));
        }
        if !(self.emission_factor >= 0.0 && self.emission_factor.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "emission factor must be non-negative, got {}",
                self.emission_factor
            )));
        }
        Ok(())
    }
}

/// Extreme plants of a generation portfolio plus fuel prices and the
/// volatility inputs used for marginal-cost risk.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchContext {
    pub coal_efficient: PlantParams,
    pub coal_inefficient: PlantParams,
    pub gas_efficient: PlantParams,
    pub gas_inefficient: PlantParams,
    /// €/GJ.
    pub fc_coal: f64,
    pub fc_gas: f64,
    pub sigma_fc_coal: f64,
    pub sigma_fc_gas: f64,
    pub sigma_ec: f64,
    /// Correlation of each fuel price with the carbon price.
    pub rho_coal_ec: f64,
    pub rho_gas_ec: f64,
}

impl SwitchContext {
    pub fn validate(&self) -> Result<()> {
        for (p, fuel) in [
            (&self.coal_efficient, Fuel::Coal),
            (&self.coal_inefficient, Fuel::Coal),
            (&self.gas_efficient, Fuel::Gas),
            (&self.gas_inefficient, Fuel::Gas),
        ] {
            p.validate()?;
            if p.fuel != fuel {
                return Err(Error::InvalidParams(format!("{:?} plant in a {fuel:?} slot", p.fuel)));
            }
        }
        if self.coal_efficient.efficiency < self.coal_inefficient.efficiency
            || self.gas_efficient.efficiency < self.gas_inefficient.efficiency
        {
            return Err(Error::InvalidParams(
                "efficient plant must be at least as efficient as the inefficient one".into(),
            ));
        }
        if !(self.fc_coal >= 0.0 && self.fc_gas >= 0.0) {
            return Err(Error::InvalidParams("fuel costs must be non-negative".into()));
        }
        if !(self.sigma_fc_coal >= 0.0 && self.sigma_fc_gas >= 0.0 && self.sigma_ec >= 0.0) {
            return Err(Error::InvalidParams("standard deviations must be non-negative".into()));
        }
        if !(self.rho_coal_ec.abs() <= 1.0 && self.rho_gas_ec.abs() <= 1.0) {
            return Err(Error::InvalidParams("correlations must lie in [-1, 1]".into()));
        }
        Ok(())
    }

    /// Same portfolio with different fuel costs.
    pub fn with_fuel_costs(&self, fc_coal: f64, fc_gas: f64) -> Self {
        Self {
            fc_coal,
            fc_gas,
            ..self.clone()
        }
    }

    pub fn fuel_cost(&self, fuel: Fuel) -> f64 {
        match fuel {
            Fuel::Coal => self.fc_coal,
            Fuel::Gas => self.fc_gas,
        }
    }

    /// Marginal-cost variance of a plant using this context's risk inputs.
    pub fn plant_risk(&self, plant: &PlantParams) -> f64 {
        let (sigma_fc, rho) = match plant.fuel {
            Fuel::Coal => (self.sigma_fc_coal, self.rho_coal_ec),
            Fuel::Gas => (self.sigma_fc_gas, self.rho_gas_ec),
        };
        marginal_cost_variance(plant, sigma_fc, self.sigma_ec, rho)
    }
}

/// `MC = FC/n + (EF/n) EC`.
pub fn marginal_cost(plant: &PlantParams, fc: f64, ec: f64) -> f64 {
    fc / plant.efficiency + plant.emission_factor / plant.efficiency * ec
}

/// Variance of the marginal cost when fuel and carbon prices have standard
/// deviations `sigma_fc`, `sigma_ec` and correlation `rho`:
/// `σ²_FC/n² + EF² σ²_EC/n² + 2 (1/n)(EF/n) ρ σ_FC σ_EC`.
pub fn marginal_cost_variance(plant: &PlantParams, sigma_fc: f64, sigma_ec: f64, rho: f64) -> f64 {
    let n = plant.efficiency;
    let ef = plant.emission_factor;
    let v = sigma_fc * sigma_fc / (n * n)
        + ef * ef * sigma_ec * sigma_ec / (n * n)
        + 2.0 * (1.0 / n) * (ef / n) * rho * sigma_fc * sigma_ec;
    // a PSD quadratic form; only rounding can push it below zero
    v.max(0.0)
}

/// Carbon price equating the marginal costs of a coal and a gas plant.
fn indifference_price(coal: &PlantParams, gas: &PlantParams, fc_coal: f64, fc_gas: f64) -> Result<f64> {
    let num = coal.efficiency * fc_gas - gas.efficiency * fc_coal;
    let den = gas.efficiency * coal.emission_factor - coal.efficiency * gas.emission_factor;
    let scale = (gas.efficiency * coal.emission_factor).abs() + (coal.efficiency * gas.emission_factor).abs();
    if !(den.abs() > 1e-12 * scale) {
        return Err(Error::DegenerateDenominator);
    }
    Ok(num / den)
}

/// Carbon price above which gas beats coal for every plant pairing: the
/// indifference price of the most efficient coal and least efficient gas plant.
pub fn switch_price_upper(ctx: &SwitchContext) -> Result<f64> {
    indifference_price(&ctx.coal_efficient, &ctx.gas_inefficient, ctx.fc_coal, ctx.fc_gas)
}

/// Carbon price below which coal beats gas for every plant pairing: the
/// indifference price of the least efficient coal and most efficient gas plant.
pub fn switch_price_lower(ctx: &SwitchContext) -> Result<f64> {
    indifference_price(&ctx.coal_inefficient, &ctx.gas_efficient, ctx.fc_coal, ctx.fc_gas)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchPrices {
    pub lower: f64,
    pub upper: f64,
    /// Set when the lower bound exceeds the upper one.
    pub warning: Option<String>,
}

pub fn switch_prices(ctx: &SwitchContext) -> Result<SwitchPrices> {
    let lower = switch_price_lower(ctx)?;
    let upper = switch_price_upper(ctx)?;
    let warning = (lower > upper).then(|| {
        format!("lower switch price {lower} exceeds upper switch price {upper}; portfolio is inconsistent")
    });
    Ok(SwitchPrices { lower, upper, warning })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Below the lower bound: coal dispatches first and prices decouple.
    DecoupledCoal,
    /// Between the bounds: mixed merit order.
    Coupled,
    /// Above the upper bound: gas dispatches first and prices decouple.
    DecoupledGas,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::DecoupledCoal => "decoupled_coal",
            Regime::Coupled => "coupled",
            Regime::DecoupledGas => "decoupled_gas",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Regime for a carbon price given the bounds; both bounds belong to the
/// coupled band.
pub fn regime_for(eua: f64, bounds: &SwitchPrices) -> Regime {
    if eua < bounds.lower {
        Regime::DecoupledCoal
    } else if eua > bounds.upper {
        Regime::DecoupledGas
    } else {
        Regime::Coupled
    }
}

pub fn classify_regime(eua: f64, ctx: &SwitchContext) -> Result<Regime> {
    Ok(regime_for(eua, &switch_prices(ctx)?))
}
