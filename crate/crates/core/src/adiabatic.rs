//! Adiabaticity check for a detuning schedule:
//! 2g²/κ ≪ √β ≪ η when shaping, κ < g ≪ √β ≪ η for Rabi oscillations.

use serde::{Deserialize, Serialize};

use crate::model::SystemParams;
use crate::num::Real;
use crate::schedule::DetuningSchedule;

pub const DEFAULT_MARGIN_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    #[default]
    Shaping,
    Rabi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AdiabaticityReport<T: Real> {
    pub regime: Regime,
    /// 2g²/κ_t for shaping, g for Rabi.
    pub lhs: T,
    /// √β_max.
    pub mid: T,
    /// η.
    pub rhs: T,
    pub beta_max: T,
    /// mid / lhs
    pub lower_margin: T,
    /// rhs / mid
    pub upper_margin: T,
    pub factor: T,
    pub pass: bool,
    /// κ_t < g; only evaluated in the Rabi regime.
    pub extra_rabi_check: Option<bool>,
}

pub fn check_adiabaticity<T: Real>(
    schedule: &DetuningSchedule<T>,
    params: &SystemParams<T>,
    regime: Regime,
) -> AdiabaticityReport<T> {
    check_adiabaticity_with(schedule, params, regime, T::lit(DEFAULT_MARGIN_FACTOR))
}

pub fn check_adiabaticity_with<T: Real>(
    schedule: &DetuningSchedule<T>,
    params: &SystemParams<T>,
    regime: Regime,
    factor: T,
) -> AdiabaticityReport<T> {
    let beta_max = schedule.max_slope();
    let mid = beta_max.sqrt();
    let lhs = match regime {
        Regime::Shaping => params.bare_emission_rate(),
        Regime::Rabi => params.g,
    };
    let rhs = params.eta;
    let lower_margin = mid / lhs;
    let upper_margin = rhs / mid;
    AdiabaticityReport {
        regime,
        lhs,
        mid,
        rhs,
        beta_max,
        lower_margin,
        upper_margin,
        factor,
        pass: lower_margin >= factor && upper_margin >= factor,
        extra_rabi_check: (regime == Regime::Rabi).then(|| params.kappa_t < params.g),
    }
}
