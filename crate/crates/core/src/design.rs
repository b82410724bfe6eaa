//! Inverse design of Δ(t) for a Gaussian target emission profile.
//!
//! The emitter follows the dark mode adiabatically, so its instantaneous
//! decay rate is set by the target fraction x = |α_t|² of that mode. A
//! target photon density p(t) fixes the hazard rate Γ = p/(1 − ∫₀ᵗp), which
//! is inverted first to x and then to Δ.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, SystemParams};
use crate::num::Real;
use crate::schedule::{DetuningSchedule, SampledCurve, ScheduleError};

/// Relative band around κ_t inside which unequal control losses are handled.
pub const LOSS_BAND: f64 = 0.2;
pub const DEFAULT_DELTA_MAX_OVER_ETA: f64 = 10.0;
pub const DEFAULT_P_TOT: f64 = 0.95;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("target infeasible: needs target fraction {fraction} at t = {t} (limit 1)")]
    Infeasible { t: f64, fraction: f64 },
    #[error(
        "control losses κ_l = {kappa_l}, κ_r = {kappa_r} lie outside ±20% of κ_t = {kappa_t}"
    )]
    UnequalLosses {
        kappa_l: f64,
        kappa_r: f64,
        kappa_t: f64,
    },
    #[error("target fraction must lie in [0, 1), got {0}")]
    FractionOutOfRange(f64),
    #[error("invalid design grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Gaussian emission target: density P_tot·N(t₀, σ²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", deny_unknown_fields)]
pub struct GaussianTarget<T: Real> {
    pub t0: T,
    pub sigma: T,
    pub p_tot: T,
}

impl<T: Real> GaussianTarget<T> {
    pub fn validate(&self) -> Result<(), DesignError> {
        if !(self.sigma > T::zero()) || !self.sigma.is_finite() {
            return Err(DesignError::InvalidTarget(format!("sigma = {}", self.sigma)));
        }
        if !(self.p_tot > T::zero() && self.p_tot < T::one()) {
            return Err(DesignError::InvalidTarget(format!(
                "p_tot = {} must lie in (0, 1)",
                self.p_tot
            )));
        }
        if !self.t0.is_finite() {
            return Err(DesignError::InvalidTarget("t0 not finite".into()));
        }
        Ok(())
    }

    pub fn density(&self, t: T) -> T {
        let u = (t - self.t0) / self.sigma;
        self.p_tot * (-u * u / T::lit(2.0)).exp() / (self.sigma * (T::lit(2.0) * T::PI()).sqrt())
    }

    /// ∫₀ᵗ p.
    pub fn emitted_by(&self, t: T) -> T {
        let s = self.sigma * T::SQRT_2();
        self.p_tot / T::lit(2.0) * (((t - self.t0) / s).erf() - ((-self.t0) / s).erf())
    }

    /// Γ(t) = p(t) / (1 − ∫₀ᵗp).
    pub fn hazard_rate(&self, t: T) -> T {
        self.density(t) / (T::one() - self.emitted_by(t))
    }
}

/// Emission rate of an emitter coupled to a mode with target fraction x.
pub fn effective_rate<T: Real>(params: &SystemParams<T>, x: T) -> T {
    let mean_side = (params.kappa_l + params.kappa_r) / T::lit(2.0);
    let kappa_1 = x * params.kappa_t + (T::one() - x) * mean_side;
    T::lit(2.0) * x * params.g * params.g / kappa_1
}

fn check_losses<T: Real>(params: &SystemParams<T>) -> Result<(), DesignError> {
    let band = T::lit(LOSS_BAND);
    let off = |k: T| ((k - params.kappa_t) / params.kappa_t).abs() > band;
    if off(params.kappa_l) || off(params.kappa_r) {
        return Err(DesignError::UnequalLosses {
            kappa_l: params.kappa_l.as_f64(),
            kappa_r: params.kappa_r.as_f64(),
            kappa_t: params.kappa_t.as_f64(),
        });
    }
    Ok(())
}

/// Fraction solving γ_eff(x) = Γ, without the x ≤ 1 check. Returns values
/// above 1 when the rate exceeds the bare-cavity limit.
fn raw_fraction<T: Real>(params: &SystemParams<T>, gamma: T) -> T {
    let limit = params.bare_emission_rate();
    if params.kappa_l == params.kappa_t && params.kappa_r == params.kappa_t {
        return gamma / limit;
    }
    if gamma >= limit {
        return gamma / limit;
    }
    // γ_eff is increasing on [0, 1]
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid == lo || mid == hi {
            break;
        }
        if effective_rate(params, mid) < gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// Target fraction x(t) that makes the emitter follow `target`.
pub fn required_fraction<T: Real>(
    target: &GaussianTarget<T>,
    params: &SystemParams<T>,
    t: T,
) -> Result<T, DesignError> {
    target.validate()?;
    params.validate_for_dynamics()?;
    if !(params.g > T::zero()) {
        return Err(DesignError::InvalidTarget("g must be positive".into()));
    }
    check_losses(params)?;
    let x = raw_fraction(params, target.hazard_rate(t));
    if x > T::one() {
        return Err(DesignError::Infeasible {
            t: t.as_f64(),
            fraction: x.as_f64(),
        });
    }
    Ok(x)
}

/// Δ = η·√(2x/(1−x)), the inverse of the lossless target fraction.
pub fn fraction_to_detuning<T: Real>(x: T, eta: T) -> Result<T, DesignError> {
    if !(x >= T::zero() && x < T::one()) {
        return Err(DesignError::FractionOutOfRange(x.as_f64()));
    }
    Ok(eta * (T::lit(2.0) * x / (T::one() - x)).sqrt())
}

/// What to do where the target asks for more than the bare-cavity rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfeasiblePolicy {
    #[default]
    Reject,
    /// Pin Δ at the clamp and emit as fast as the system allows.
    Saturate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", deny_unknown_fields, default)]
pub struct DesignOptions<T: Real> {
    pub delta_max_over_eta: T,
    pub policy: InfeasiblePolicy,
}

impl<T: Real> Default for DesignOptions<T> {
    fn default() -> Self {
        Self {
            delta_max_over_eta: T::lit(DEFAULT_DELTA_MAX_OVER_ETA),
            policy: InfeasiblePolicy::Reject,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DesignReport<T: Real> {
    pub times: Vec<T>,
    /// Unclamped x(t); may exceed 1 under `Saturate`.
    pub fractions: Vec<T>,
    pub max_fraction: T,
    /// Samples pinned at Δ_max.
    pub clamped_samples: usize,
    /// Samples where x > 1.
    pub infeasible_samples: usize,
}

pub fn design_symmetric_schedule<T: Real>(
    params: &SystemParams<T>,
    target: &GaussianTarget<T>,
    window: (T, T),
    n_samples: usize,
    options: &DesignOptions<T>,
) -> Result<DetuningSchedule<T>, DesignError> {
    design_with_report(params, target, window, n_samples, options).map(|(s, _)| s)
}

pub fn design_with_report<T: Real>(
    params: &SystemParams<T>,
    target: &GaussianTarget<T>,
    (t_start, t_end): (T, T),
    n_samples: usize,
    options: &DesignOptions<T>,
) -> Result<(DetuningSchedule<T>, DesignReport<T>), DesignError> {
    target.validate()?;
    params.validate_for_dynamics()?;
    if !(params.g > T::zero()) {
        return Err(DesignError::InvalidTarget("g must be positive".into()));
    }
    check_losses(params)?;
    if n_samples < 2 {
        return Err(DesignError::InvalidGrid(format!("{n_samples} samples")));
    }
    if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
        return Err(DesignError::InvalidGrid("empty window".into()));
    }
    if !(options.delta_max_over_eta > T::zero()) {
        return Err(DesignError::InvalidGrid("delta_max_over_eta must be positive".into()));
    }
    let delta_max = options.delta_max_over_eta * params.eta;
    let step = (t_end - t_start) / T::from_usize_lossy(n_samples - 1);
    let times: Vec<T> = (0..n_samples)
        .map(|i| t_start + step * T::from_usize_lossy(i))
        .collect();
    let fractions: Vec<T> = times
        .iter()
        .map(|&t| raw_fraction(params, target.hazard_rate(t)))
        .collect();
    let (worst, max_fraction) = fractions
        .iter()
        .enumerate()
        .fold((0, T::neg_infinity()), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
    if max_fraction > T::one() && options.policy == InfeasiblePolicy::Reject {
        return Err(DesignError::Infeasible {
            t: times[worst].as_f64(),
            fraction: max_fraction.as_f64(),
        });
    }
    let mut clamped = 0;
    let pairs: Vec<(T, T)> = times
        .iter()
        .zip(&fractions)
        .map(|(&t, &x)| {
            let delta = if x < T::one() {
                fraction_to_detuning(x, params.eta).unwrap_or(delta_max)
            } else {
                delta_max
            };
            if delta >= delta_max {
                clamped += 1;
            }
            (t, delta.min(delta_max))
        })
        .collect();
    let infeasible = fractions.iter().filter(|&&x| x > T::one()).count();
    let schedule = DetuningSchedule::Designed {
        samples: SampledCurve::new(&pairs)?,
    };
    Ok((
        schedule,
        DesignReport {
            times,
            fractions,
            max_fraction,
            clamped_samples: clamped,
            infeasible_samples: infeasible,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ldos_ratio;
    use approx::assert_abs_diff_eq;

    fn reference_params() -> SystemParams<f64> {
        SystemParams::uniform(10.0, 1.0, 0.1)
    }

    #[test]
    fn detuning_examples() {
        assert_eq!(fraction_to_detuning(0.0, 10.0).unwrap(), 0.0);
        assert_abs_diff_eq!(fraction_to_detuning(1.0 / 3.0, 10.0).unwrap(), 10.0, epsilon = 1e-12);
        let d = fraction_to_detuning(0.9804, 1.0).unwrap();
        assert_abs_diff_eq!(d, 10.0, epsilon = 0.01);
        assert!((ldos_ratio(1.0, d) - 0.9804f64).abs() < 1e-12);
        assert!(fraction_to_detuning(1.0, 1.0).is_err());
        assert!(fraction_to_detuning(-0.1, 1.0).is_err());
    }

    #[test]
    fn hazard_rate_matches_numeric_integral() {
        let target = GaussianTarget { t0: 50.0, sigma: 25.0, p_tot: 0.95 };
        // midpoint quadrature oracle for ∫₀ᵗ p
        let n = 200_000;
        let t = 70.0;
        let h = t / n as f64;
        let cum: f64 = (0..n).map(|i| target.density((i as f64 + 0.5) * h) * h).sum();
        assert_abs_diff_eq!(target.emitted_by(t), cum, epsilon = 1e-9);
        assert_abs_diff_eq!(target.hazard_rate(t), target.density(t) / (1.0 - cum), epsilon = 1e-10);
    }

    #[test]
    fn fraction_is_negligible_early() {
        let target = GaussianTarget { t0: 50.0, sigma: 5.0, p_tot: 0.5 };
        let x = required_fraction(&target, &reference_params(), 0.0).unwrap();
        assert!(x < 1e-10);
    }

    #[test]
    fn feasibility_boundary_gives_unit_fraction() {
        let p = reference_params();
        let target = GaussianTarget { t0: 50.0, sigma: 25.0, p_tot: 0.4 };
        let limit = p.bare_emission_rate();
        let t = 60.0;
        // scale g so that Γ(t) sits exactly on the bare-cavity limit
        let g = (target.hazard_rate(t) * p.kappa_t / 2.0).sqrt();
        let p = SystemParams { g, ..p };
        assert!(limit > 0.0);
        assert_abs_diff_eq!(required_fraction(&target, &p, t).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn infeasible_and_unequal_losses_are_rejected() {
        let p = reference_params();
        let target = GaussianTarget { t0: 50.0, sigma: 25.0, p_tot: 0.95 };
        assert!(matches!(
            required_fraction(&target, &p, 75.0),
            Err(DesignError::Infeasible { .. })
        ));
        let lossy = SystemParams { kappa_l: 1.5, ..p };
        assert!(matches!(
            required_fraction(&target, &lossy, 10.0),
            Err(DesignError::UnequalLosses { .. })
        ));
        let bad = GaussianTarget { p_tot: 1.0, ..target };
        assert!(matches!(required_fraction(&bad, &p, 10.0), Err(DesignError::InvalidTarget(_))));
    }

    #[test]
    fn unequal_losses_inside_band_solve_rate_equation() {
        let p = SystemParams { kappa_l: 1.15, kappa_r: 0.9, ..reference_params() };
        let target = GaussianTarget { t0: 50.0, sigma: 25.0, p_tot: 0.4 };
        for t in [10.0, 40.0, 80.0] {
            let x = required_fraction(&target, &p, t).unwrap();
            assert_abs_diff_eq!(effective_rate(&p, x), target.hazard_rate(t), epsilon = 1e-14);
        }
    }

    #[test]
    fn designed_schedule_rises_before_peak() {
        let target = GaussianTarget { t0: 50.0, sigma: 25.0, p_tot: 0.4 };
        let opts = DesignOptions::default();
        let (s, rep) = design_with_report(&reference_params(), &target, (0.0, 120.0), 241, &opts).unwrap();
        assert_eq!(s.kind_name(), "designed");
        assert!(rep.max_fraction < 1.0);
        let curve = s.samples().unwrap();
        let early: Vec<f64> = curve.pairs().filter(|(t, _)| *t <= 50.0).map(|p| p.1).collect();
        assert!(early.windows(2).all(|w| w[1] >= w[0]));
        assert!(early[0] < 0.5 * 10.0);
        let again = design_symmetric_schedule(&reference_params(), &target, (0.0, 120.0), 241, &opts).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn wide_target_gives_small_flat_schedule() {
        let target = GaussianTarget { t0: 0.0, sigma: 1e6, p_tot: 0.1 };
        let s = design_symmetric_schedule(&reference_params(), &target, (0.0, 100.0), 11, &DesignOptions::default())
            .unwrap();
        let v: Vec<f64> = s.samples().unwrap().values().to_vec();
        assert!(v.iter().all(|d| *d < 0.1));
        assert!(v.iter().fold(0.0f64, |m, d| m.max((d - v[0]).abs())) < 1e-4);
    }

    #[test]
    fn saturate_policy_pins_clamp() {
        let target = GaussianTarget { t0: 50.0, sigma: 25.0, p_tot: 0.95 };
        assert!(matches!(
            design_symmetric_schedule(&reference_params(), &target, (0.0, 120.0), 241, &DesignOptions::default()),
            Err(DesignError::Infeasible { .. })
        ));
        let opts = DesignOptions { policy: InfeasiblePolicy::Saturate, ..Default::default() };
        let (s, rep) = design_with_report(&reference_params(), &target, (0.0, 120.0), 241, &opts).unwrap();
        assert!(rep.max_fraction > 1.0);
        assert!(rep.infeasible_samples > 0 && rep.clamped_samples >= rep.infeasible_samples);
        assert_abs_diff_eq!(s.eval(75.0), 100.0, epsilon = 1e-9);
    }
}
