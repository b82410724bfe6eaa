//! End-to-end runs: integrate a schedule and analyse the emitted pulse.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adiabatic::{check_adiabaticity_with, AdiabaticityReport, Regime};
use crate::design::{design_with_report, DesignError, DesignOptions, DesignReport, GaussianTarget};
use crate::dynamics::{
    integrate, populations, AmplitudeState, ContinuumGrid, DynamicsError, IntegrationSettings,
    Populations, Trajectory,
};
use crate::model::{ModelError, SystemParams};
use crate::num::Real;
use crate::pulse::{
    extract_output_pulse, fit_gaussian, overlap_fidelity, phase_profile, transfer_fidelity,
    FidelityReport, GaussianFit, PhaseProfile, PulseError, Waveform,
};
use crate::schedule::DetuningSchedule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Design(#[from] DesignError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EmissionRun<T: Real> {
    pub trajectory: Trajectory<T>,
    pub populations: Populations<T>,
    pub pulse: Waveform<T>,
}

/// Uniform pulse sampling times: every snapshot stride from 0 up to t_final.
pub fn pulse_times<T: Real>(settings: &IntegrationSettings<T>) -> Vec<T> {
    let stride = settings.snapshot_stride.max(1);
    let dt = settings.step() * T::from_usize_lossy(stride);
    let count = settings.n_steps() / stride + 1;
    (0..count).map(|i| dt * T::from_usize_lossy(i)).collect()
}

/// Starts with the emitter excited and everything else empty.
pub fn run_emission<T: Real>(
    params: &SystemParams<T>,
    schedule: &DetuningSchedule<T>,
    grid: &ContinuumGrid<T>,
    settings: &IntegrationSettings<T>,
) -> Result<EmissionRun<T>, PipelineError> {
    let initial = AmplitudeState::excited_emitter(grid.n_modes());
    let trajectory = integrate(params, schedule, grid, settings, &initial)?;
    let populations = populations(&trajectory);
    let pulse = extract_output_pulse(
        trajectory.final_state.continuum(),
        grid,
        trajectory.t_final,
        &pulse_times(settings),
    )?;
    Ok(EmissionRun {
        trajectory,
        populations,
        pulse,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ShapeSettings<T: Real> {
    pub target: GaussianTarget<T>,
    pub design: DesignOptions<T>,
    pub design_samples: usize,
    /// Design window; `None` uses `[0, t_final]`.
    pub window: Option<(T, T)>,
    pub threshold_fraction: T,
    pub adiabatic_factor: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ShapeRun<T: Real> {
    pub schedule: DetuningSchedule<T>,
    pub design: DesignReport<T>,
    pub emission: EmissionRun<T>,
    pub phase: PhaseProfile<T>,
    pub fit: GaussianFit<T>,
    pub fidelity: FidelityReport<T>,
    /// Overlap of the emitted pulse with the amplitude √p(t) of the target.
    pub target_overlap: T,
    pub adiabaticity: AdiabaticityReport<T>,
}

/// Designs a schedule for the target, simulates it and analyses the pulse.
pub fn run_shape<T: Real>(
    params: &SystemParams<T>,
    grid: &ContinuumGrid<T>,
    settings: &IntegrationSettings<T>,
    shape: &ShapeSettings<T>,
) -> Result<ShapeRun<T>, PipelineError> {
    let window = shape.window.unwrap_or((T::zero(), settings.t_final));
    let (schedule, design) = design_with_report(
        params,
        &shape.target,
        window,
        shape.design_samples,
        &shape.design,
    )?;
    let emission = run_emission(params, &schedule, grid, settings)?;
    let phase = phase_profile(&emission.pulse, shape.threshold_fraction)?;
    let fit = fit_gaussian(&emission.pulse)?;
    let fidelity = transfer_fidelity(&emission.pulse, shape.threshold_fraction)?;
    let reference = Waveform::new(
        emission.pulse.times.clone(),
        emission
            .pulse
            .times
            .iter()
            .map(|&t| shape.target.density(t).sqrt().into())
            .collect(),
    )?;
    let target_overlap = overlap_fidelity(&emission.pulse, &reference)?;
    let adiabaticity =
        check_adiabaticity_with(&schedule, params, Regime::Shaping, shape.adiabatic_factor);
    Ok(ShapeRun {
        schedule,
        design,
        emission,
        phase,
        fit,
        fidelity,
        target_overlap,
        adiabaticity,
    })
}
