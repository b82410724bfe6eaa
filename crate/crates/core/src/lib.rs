//! Emitter coupled to a chain of three cavities (left, target, right), with
//! the target cavity leaking into a waveguide. Detuning the outer cavities
//! moves the dark supermode between "all control cavities" and "mostly
//! target", which switches and shapes spontaneous emission into the
//! waveguide.
//!
//! Everything numeric is generic over [`num::Real`] (`f32` or `f64`); the
//! `*F64` aliases below are what the CLI uses.

pub mod adiabatic;
pub mod config;
pub mod design;
pub mod dynamics;
pub mod export;
pub mod linalg;
pub mod model;
pub mod num;
pub mod pipeline;
pub mod pulse;
pub mod scenario;
pub mod schedule;

pub use adiabatic::{check_adiabaticity, AdiabaticityReport, Regime};
pub use config::{load_config, parse_config, RunConfig, Scenario};
pub use design::{design_symmetric_schedule, fraction_to_detuning, required_fraction, GaussianTarget};
pub use dynamics::{build_continuum, integrate, AmplitudeState, ContinuumGrid, IntegrationSettings, Trajectory};
pub use model::{
    analytic_eigenvalues, build_cavity_hamiltonian, dark_mode_vector, ldos_ratio,
    numeric_eigensystem, se_rate_ratio, EigenSystem, SystemParams,
};
pub use pulse::{
    extract_output_pulse, fit_gaussian, overlap_fidelity, phase_profile, time_invert,
    FidelityReport, GaussianFit, Waveform,
};
pub use scenario::{run_scenario, RunManifest};
pub use schedule::{make_constant, make_ramp, make_sampled, make_zero, DetuningSchedule};

pub type C64 = num::Complex<f64>;
pub type SystemParamsF64 = SystemParams<f64>;
pub type EigenSystemF64 = EigenSystem<f64>;
pub type ContinuumGridF64 = ContinuumGrid<f64>;
pub type AmplitudeStateF64 = AmplitudeState<f64>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type WaveformF64 = Waveform<f64>;
pub type DetuningScheduleF64 = DetuningSchedule<f64>;
pub type GaussianTargetF64 = GaussianTarget<f64>;

pub type SystemParamsF32 = SystemParams<f32>;
pub type ContinuumGridF32 = ContinuumGrid<f32>;
pub type WaveformF32 = Waveform<f32>;
