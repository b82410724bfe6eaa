//! Scenario runner: turns a [`RunConfig`] into CSV data files plus a
//! `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::adiabatic::check_adiabaticity_with;
use crate::config::{ConfigError, RunConfig, Scenario, ScheduleSpec};
use crate::design::{design_symmetric_schedule, DesignError, DesignOptions, GaussianTarget};
use crate::dynamics::{ContinuumGrid, DynamicsError};
use crate::export::{
    csv_bytes, populations_series, read_schedule_csv, schedule_series, waveform_series,
    ExportError, Series,
};
use crate::model::{
    analytic_eigenvalues, build_cavity_hamiltonian, ldos_ratio, numeric_eigensystem, ModelError,
    SystemParams,
};
use crate::pipeline::{pulse_times, run_emission, run_shape, PipelineError, ShapeSettings};
use crate::schedule::{make_constant, make_ramp, make_sampled, make_zero, DetuningSchedule, ScheduleError};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scenario: Scenario,
    /// Fully resolved config; running it again reproduces the metrics.
    pub config: RunConfig,
    pub derived: BTreeMap<String, Value>,
    pub metrics: BTreeMap<String, Value>,
    pub files: Vec<String>,
    pub wall_clock_seconds: f64,
}

/// Everything a run produces, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub manifest: RunManifest,
    pub files: Vec<(String, Vec<u8>)>,
}

#[derive(Default)]
struct Collector {
    derived: BTreeMap<String, Value>,
    metrics: BTreeMap<String, Value>,
    files: Vec<(String, Vec<u8>)>,
}

impl Collector {
    fn derived(&mut self, k: &str, v: impl Into<Value>) {
        self.derived.insert(k.into(), v.into());
    }

    fn metric(&mut self, k: &str, v: impl Into<Value>) {
        self.metrics.insert(k.into(), v.into());
    }

    fn csv(&mut self, name: &str, s: &Series) -> Result<(), ScenarioError> {
        self.files.push((name.into(), csv_bytes(s)?));
        Ok(())
    }
}

/// Builds the Δ(t) a config asks for.
pub fn resolve_schedule(cfg: &RunConfig) -> Result<DetuningSchedule<f64>, ScenarioError> {
    let params = cfg.params();
    Ok(match cfg.schedule.as_ref().unwrap_or(&ScheduleSpec::Zero) {
        ScheduleSpec::Zero => make_zero(),
        ScheduleSpec::Constant { value } => make_constant(*value)?,
        ScheduleSpec::LinearRamp { rate } => make_ramp(*rate)?,
        ScheduleSpec::Sampled { samples } => make_sampled(samples)?,
        ScheduleSpec::Csv { path } => {
            let file = fs::File::open(path).map_err(|source| ScenarioError::Io {
                path: path.clone(),
                source,
            })?;
            read_schedule_csv(file)?
        }
        ScheduleSpec::Designed => {
            let target = cfg.target.ok_or_else(|| {
                ConfigError::Invalid("a designed schedule needs `target`".into())
            })?;
            design_symmetric_schedule(
                &params,
                &GaussianTarget::from(target),
                design_window(cfg),
                cfg.design.n_samples,
                &design_options(cfg),
            )?
        }
    })
}

fn design_window(cfg: &RunConfig) -> (f64, f64) {
    cfg.design.window.unwrap_or((0.0, cfg.integration.t_final))
}

fn design_options(cfg: &RunConfig) -> DesignOptions<f64> {
    DesignOptions {
        delta_max_over_eta: cfg.design.delta_max_over_eta,
        policy: cfg.design.policy,
    }
}

/// Computes a scenario entirely in memory.
pub fn compute_scenario(cfg: &RunConfig) -> Result<ScenarioOutput, ScenarioError> {
    let start = Instant::now();
    let cfg = cfg.clone().resolved();
    cfg.validate()?;
    let mut out = Collector::default();
    match cfg.scenario {
        Scenario::Eigens => eigens(&cfg, &mut out)?,
        Scenario::Ldos => ldos(&cfg, &mut out)?,
        Scenario::Dynamics => dynamics(&cfg, &mut out)?,
        Scenario::Shape => shape(&cfg, &mut out)?,
        Scenario::Adiabaticity => adiabaticity(&cfg, &mut out)?,
    }
    if !cfg.output.csv {
        out.files.clear();
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: cfg.scenario,
        derived: out.derived,
        metrics: out.metrics,
        files: out.files.iter().map(|(n, _)| n.clone()).collect(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        config: cfg,
    };
    Ok(ScenarioOutput {
        manifest,
        files: out.files,
    })
}

/// Runs a scenario and writes its files and manifest into `dir`. Nothing is
/// left behind when a step fails.
pub fn run_scenario(cfg: &RunConfig, dir: &Path) -> Result<RunManifest, ScenarioError> {
    let output = compute_scenario(cfg)?;
    write_output(&output, dir)?;
    Ok(output.manifest)
}

pub fn write_output(output: &ScenarioOutput, dir: &Path) -> Result<(), ScenarioError> {
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source| ScenarioError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let manifest = serde_json::to_vec_pretty(&output.manifest).expect("manifest serializes");
    let mut written = Vec::new();
    let entries = output
        .files
        .iter()
        .map(|(n, b)| (n.as_str(), b.as_slice()))
        .chain(std::iter::once((MANIFEST_FILE, manifest.as_slice())));
    for (name, bytes) in entries {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(io(&path)(e));
        }
        written.push(path);
    }
    Ok(())
}

fn grid_for(cfg: &RunConfig, params: &SystemParams<f64>) -> Result<ContinuumGrid<f64>, ScenarioError> {
    Ok(ContinuumGrid::for_target(
        params,
        cfg.continuum.n_modes,
        cfg.continuum.bandwidth,
    )?)
}

fn grid_derived(out: &mut Collector, grid: &ContinuumGrid<f64>) {
    out.derived("kappa_prime", grid.kappa_prime());
    out.derived("mode_spacing", grid.spacing());
    out.derived("recurrence_time", grid.recurrence_time());
    out.derived("continuum_decay_rate", grid.decay_rate());
}

fn eigens(cfg: &RunConfig, out: &mut Collector) -> Result<(), ScenarioError> {
    let mut params = cfg.params();
    if cfg.sweep.lossless {
        params.kappa_t = 0.0;
        params.kappa_l = 0.0;
        params.kappa_r = 0.0;
    }
    let eta = params.eta;
    let xs = cfg.sweep.points();
    let mut cols: [Vec<f64>; 4] = Default::default();
    let (mut eig_err, mut frac_err) = (0.0f64, 0.0f64);
    for &x in &xs {
        let es = numeric_eigensystem(&build_cavity_hamiltonian(&params, x * eta))?;
        let exact = analytic_eigenvalues(eta, x * eta);
        for i in 0..3 {
            cols[i].push(es.omegas[i].re / eta);
            eig_err = eig_err.max((es.omegas[i] - exact[i]).norm() / eta);
        }
        let frac = es.dark_target_fraction();
        cols[3].push(frac);
        frac_err = frac_err.max((frac - ldos_ratio(eta, x * eta)).abs());
    }
    let [w1, w2, w3, frac] = cols;
    out.csv(
        "eigens.csv",
        &Series::new()
            .column("delta_over_eta", xs)
            .column("w1", w1)
            .column("w2", w2)
            .column("w3", w3)
            .column("frac_t", frac),
    )?;
    out.derived("lossless", cfg.sweep.lossless);
    out.metric("max_eigenvalue_deviation_over_eta", eig_err);
    out.metric("max_target_fraction_deviation", frac_err);
    Ok(())
}

fn ldos(cfg: &RunConfig, out: &mut Collector) -> Result<(), ScenarioError> {
    let eta = cfg.system.eta;
    let xs = cfg.sweep.points();
    let ratio: Vec<f64> = xs.iter().map(|x| ldos_ratio(eta, x * eta)).collect();
    // half maximum of Δ²/(2η²+Δ²) on the positive branch, by bisection
    let (mut lo, mut hi) = (0.0f64, 1e3f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ldos_ratio(1.0, mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    out.csv(
        "ldos.csv",
        &Series::new().column("delta_over_eta", xs).column("ldos_ratio", ratio),
    )?;
    out.metric("half_max_delta_over_eta", 0.5 * (lo + hi));
    Ok(())
}

fn dynamics(cfg: &RunConfig, out: &mut Collector) -> Result<(), ScenarioError> {
    let params = cfg.params();
    let grid = grid_for(cfg, &params)?;
    grid.check_bandwidth(2.0 * params.kappa_t, cfg.continuum.guard_factor)?;
    let schedule = resolve_schedule(cfg)?;
    let run = run_emission(&params, &schedule, &grid, &cfg.integration)?;
    grid_derived(out, &grid);
    out.derived("schedule_kind", schedule.kind_name());
    out.derived("beta_max", schedule.max_slope());
    out.derived("step", run.trajectory.dt);
    if let Some(ScheduleSpec::Constant { value }) = cfg.schedule {
        out.derived("constant_delta_over_eta", value / params.eta);
    }
    let p = &run.populations;
    let last = p.len() - 1;
    out.metric("final_p_e", p.emitter[last]);
    out.metric("final_p_t", p.target[last]);
    out.metric("final_p_l", p.left[last]);
    out.metric("final_p_r", p.right[last]);
    out.metric("final_p_cont", p.continuum[last]);
    out.metric("final_total_norm", run.trajectory.final_state.total_norm());
    out.metric("pulse_energy", run.pulse.energy);
    out.metric("max_norm_increase", run.trajectory.max_norm_increase);
    if let Some((lo, hi)) = cfg.analysis.decay_fit_window {
        out.metric("emitter_decay_rate", json_opt(p.emitter_decay_rate(lo, hi)));
        out.derived("bare_emission_rate", params.bare_emission_rate());
    }
    out.csv("populations.csv", &populations_series(p))?;
    out.csv("pulse.csv", &waveform_series(&run.pulse))?;
    out.csv("schedule.csv", &schedule_series(&schedule, &run.pulse.times))?;
    Ok(())
}

fn json_opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, Value::from)
}

fn shape(cfg: &RunConfig, out: &mut Collector) -> Result<(), ScenarioError> {
    let params = cfg.params();
    let target: GaussianTarget<f64> = cfg
        .target
        .ok_or_else(|| ConfigError::Invalid("shape needs `target`".into()))?
        .into();
    let grid = grid_for(cfg, &params)?;
    grid.check_bandwidth(
        (2.0 * params.kappa_t).max(1.0 / target.sigma),
        cfg.continuum.guard_factor,
    )?;
    let settings = ShapeSettings {
        target,
        design: design_options(cfg),
        design_samples: cfg.design.n_samples,
        window: Some(design_window(cfg)),
        threshold_fraction: cfg.analysis.threshold_fraction,
        adiabatic_factor: cfg.adiabaticity.factor,
    };
    let run = run_shape(&params, &grid, &cfg.integration, &settings)?;
    grid_derived(out, &grid);
    out.derived("beta_max", run.adiabaticity.beta_max);
    out.derived("design_max_fraction", run.design.max_fraction);
    out.derived("design_infeasible_samples", run.design.infeasible_samples);
    out.derived("design_clamped_samples", run.design.clamped_samples);
    out.derived("step", run.emission.trajectory.dt);
    out.metric("fidelity", run.fidelity.fidelity);
    out.metric("inversion_center", run.fidelity.inversion_center);
    out.metric("phase_flatness", run.fidelity.phase_flatness);
    out.metric("r_squared", run.fit.r_squared);
    out.metric(
        "fit",
        json!({"amplitude": run.fit.amplitude, "center": run.fit.center, "width": run.fit.width}),
    );
    out.metric("target_overlap", run.target_overlap);
    out.metric("pulse_energy", run.emission.pulse.energy);
    let p = &run.emission.populations;
    let last = p.len() - 1;
    out.metric("final_p_e", p.emitter[last]);
    out.metric("final_p_cont", p.continuum[last]);
    out.metric("adiabatic_pass", run.adiabaticity.pass);
    out.csv("schedule.csv", &schedule_series(&run.schedule, &[]))?;
    out.csv("populations.csv", &populations_series(p))?;
    out.csv("pulse.csv", &waveform_series(&run.emission.pulse))?;
    out.csv(
        "phase.csv",
        &Series::new()
            .column("t", run.phase.times.clone())
            .column("phase", run.phase.phase.clone()),
    )?;
    Ok(())
}

fn adiabaticity(cfg: &RunConfig, out: &mut Collector) -> Result<(), ScenarioError> {
    let params = cfg.params();
    let schedule = resolve_schedule(cfg)?;
    let r = check_adiabaticity_with(&schedule, &params, cfg.adiabaticity.regime, cfg.adiabaticity.factor);
    out.derived("schedule_kind", schedule.kind_name());
    out.derived("beta_max", r.beta_max);
    out.metric("lhs", r.lhs);
    out.metric("mid", r.mid);
    out.metric("rhs", r.rhs);
    out.metric("lower_margin", r.lower_margin);
    out.metric("upper_margin", r.upper_margin);
    out.metric("pass", r.pass);
    if let Some(extra) = r.extra_rabi_check {
        out.metric("extra_rabi_check", extra);
    }
    let times = pulse_times(&cfg.integration);
    out.csv("schedule.csv", &schedule_series(&schedule, &times))?;
    Ok(())
}

/// Outcome of one job in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub label: String,
    pub dir: PathBuf,
    pub error: Option<String>,
    pub metrics: BTreeMap<String, Value>,
}

/// Runs independent configs on worker threads, each into `root/<label>`,
/// and writes a merged `sweep.json`.
pub fn run_sweep(
    jobs: &[(String, RunConfig)],
    root: &Path,
    workers: usize,
) -> Result<Vec<SweepEntry>, ScenarioError> {
    let workers = workers.max(1).min(jobs.len().max(1));
    let mut entries: Vec<Option<SweepEntry>> = vec![None; jobs.len()];
    std::thread::scope(|scope| {
        for (chunk_idx, slots) in entries.chunks_mut(jobs.len().div_ceil(workers).max(1)).enumerate() {
            let offset = chunk_idx * jobs.len().div_ceil(workers).max(1);
            scope.spawn(move || {
                for (i, slot) in slots.iter_mut().enumerate() {
                    let (label, cfg) = &jobs[offset + i];
                    let dir = root.join(label);
                    let (error, metrics) = match run_scenario(cfg, &dir) {
                        Ok(m) => (None, m.metrics),
                        Err(e) => (Some(e.to_string()), BTreeMap::new()),
                    };
                    *slot = Some(SweepEntry {
                        label: label.clone(),
                        dir,
                        error,
                        metrics,
                    });
                }
            });
        }
    });
    let entries: Vec<SweepEntry> = entries.into_iter().map(|e| e.expect("job ran")).collect();
    let path = root.join("sweep.json");
    fs::create_dir_all(root).map_err(|source| ScenarioError::Io {
        path: root.to_owned(),
        source,
    })?;
    fs::write(&path, serde_json::to_vec_pretty(&entries).expect("serializes"))
        .map_err(|source| ScenarioError::Io { path, source })?;
    Ok(entries)
}
