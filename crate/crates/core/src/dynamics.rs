//! Single-excitation emission dynamics into a discretized waveguide.
//!
//! The state holds the emitter, the three cavity amplitudes and one
//! amplitude per quasi-continuum mode, all in the frame rotating at the
//! target-cavity frequency. Evolution is fixed-step classical RK4.

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, SystemParams};
use crate::num::{Complex, Real};
use crate::schedule::DetuningSchedule;

/// Number of discrete (non-continuum) amplitudes in a state vector.
pub const LOCAL_AMPLITUDES: usize = 4;

const EMITTER: usize = 0;
const TARGET: usize = 1;
const LEFT: usize = 2;
const RIGHT: usize = 3;

/// Relative norm growth treated as a numerical blow-up.
pub const NORM_BLOWUP_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid continuum grid: {0}")]
    InvalidGrid(String),
    #[error("bandwidth {bandwidth} is below {factor}x the expected pulse width {width}")]
    BandwidthTooNarrow {
        bandwidth: f64,
        width: f64,
        factor: f64,
    },
    #[error("invalid integration settings: {0}")]
    InvalidSettings(String),
    #[error("state has {got} continuum modes, grid has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("integration unstable at t = {t}: norm grew to {norm} (step too large for the fastest frequency?)")]
    Unstable { t: f64, norm: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Uniform quasi-continuum of waveguide modes centred on the target
/// resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ContinuumGrid<T: Real> {
    n_modes: usize,
    bandwidth: T,
    spacing: T,
    detunings: Vec<T>,
    /// Energy decay rate the continuum imposes on the target cavity.
    decay_rate: T,
    kappa_prime: T,
}

/// Grid whose coupling drains the target-cavity population at `decay_rate`,
/// with κ′ = √(decay_rate·Δω/2π).
pub fn build_continuum<T: Real>(
    decay_rate: T,
    n_modes: usize,
    bandwidth: T,
) -> Result<ContinuumGrid<T>, DynamicsError> {
    ContinuumGrid::new(decay_rate, n_modes, bandwidth)
}

impl<T: Real> ContinuumGrid<T> {
    pub fn new(decay_rate: T, n_modes: usize, bandwidth: T) -> Result<Self, DynamicsError> {
        if n_modes < 2 {
            return Err(DynamicsError::InvalidGrid("need at least 2 modes".into()));
        }
        if !(bandwidth > T::zero()) || !bandwidth.is_finite() {
            return Err(DynamicsError::InvalidGrid("bandwidth must be > 0".into()));
        }
        if !(decay_rate >= T::zero()) || !decay_rate.is_finite() {
            return Err(DynamicsError::InvalidGrid("decay rate must be >= 0".into()));
        }
        let spacing = bandwidth / T::from_usize_lossy(n_modes - 1);
        let centre = T::from_usize_lossy(n_modes - 1) / T::lit(2.0);
        let detunings = (0..n_modes)
            .map(|k| (T::from_usize_lossy(k) - centre) * spacing)
            .collect();
        let kappa_prime = (decay_rate * spacing / (T::lit(2.0) * T::PI())).sqrt();
        Ok(Self {
            n_modes,
            bandwidth,
            spacing,
            detunings,
            decay_rate,
            kappa_prime,
        })
    }

    /// Grid for a target cavity with field decay rate `params.kappa_t`: the
    /// waveguide removes population at twice that rate, so the target loses
    /// field at the same kind of rate as the control cavities.
    pub fn for_target(
        params: &SystemParams<T>,
        n_modes: usize,
        bandwidth: T,
    ) -> Result<Self, DynamicsError> {
        Self::new(T::lit(2.0) * params.kappa_t, n_modes, bandwidth)
    }

    /// Rejects grids narrower than `factor` times `pulse_width`.
    pub fn check_bandwidth(&self, pulse_width: T, factor: T) -> Result<(), DynamicsError> {
        if self.bandwidth < factor * pulse_width {
            return Err(DynamicsError::BandwidthTooNarrow {
                bandwidth: self.bandwidth.as_f64(),
                width: pulse_width.as_f64(),
                factor: factor.as_f64(),
            });
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn detunings(&self) -> &[T] {
        &self.detunings
    }

    pub fn kappa_prime(&self) -> T {
        self.kappa_prime
    }

    pub fn decay_rate(&self) -> T {
        self.decay_rate
    }

    /// Recurrence time 2π/Δω of the discrete continuum.
    pub fn recurrence_time(&self) -> T {
        T::lit(2.0) * T::PI() / self.spacing
    }
}

/// Single-excitation amplitudes `(c_e, c_t, c_l, c_r, c_k…)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AmplitudeState<T: Real> {
    data: Vec<Complex<T>>,
}

impl<T: Real> AmplitudeState<T> {
    pub fn zeros(n_modes: usize) -> Self {
        Self {
            data: vec![Complex::zero(); LOCAL_AMPLITUDES + n_modes],
        }
    }

    /// Fully inverted emitter, everything else empty.
    pub fn excited_emitter(n_modes: usize) -> Self {
        let mut s = Self::zeros(n_modes);
        s.data[EMITTER] = Complex::new(T::one(), T::zero());
        s
    }

    pub fn from_parts(
        emitter: Complex<T>,
        target: Complex<T>,
        left: Complex<T>,
        right: Complex<T>,
        continuum: &[Complex<T>],
    ) -> Self {
        let mut data = Vec::with_capacity(LOCAL_AMPLITUDES + continuum.len());
        data.extend_from_slice(&[emitter, target, left, right]);
        data.extend_from_slice(continuum);
        Self { data }
    }

    pub fn n_modes(&self) -> usize {
        self.data.len() - LOCAL_AMPLITUDES
    }

    pub fn emitter(&self) -> Complex<T> {
        self.data[EMITTER]
    }

    pub fn target(&self) -> Complex<T> {
        self.data[TARGET]
    }

    pub fn left(&self) -> Complex<T> {
        self.data[LEFT]
    }

    pub fn right(&self) -> Complex<T> {
        self.data[RIGHT]
    }

    pub fn continuum(&self) -> &[Complex<T>] {
        &self.data[LOCAL_AMPLITUDES..]
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn continuum_population(&self) -> T {
        self.continuum().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn total_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `self + a·other`
    pub fn add_scaled(&self, a: Complex<T>, other: &Self) -> Self {
        Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| x + a * y)
                .collect(),
        }
    }
}

/// Time derivative of the amplitudes at time `t`.
pub fn rhs<T: Real>(
    state: &AmplitudeState<T>,
    t: T,
    params: &SystemParams<T>,
    schedule: &DetuningSchedule<T>,
    grid: &ContinuumGrid<T>,
) -> Result<AmplitudeState<T>, DynamicsError> {
    check_dims(state, grid)?;
    let mut out = AmplitudeState::zeros(grid.n_modes());
    rhs_into(
        state.as_slice(),
        schedule.eval(t),
        params,
        grid,
        out.as_mut_slice(),
    );
    Ok(out)
}

fn check_dims<T: Real>(
    state: &AmplitudeState<T>,
    grid: &ContinuumGrid<T>,
) -> Result<(), DynamicsError> {
    if state.n_modes() != grid.n_modes() {
        return Err(DynamicsError::DimensionMismatch {
            expected: grid.n_modes(),
            got: state.n_modes(),
        });
    }
    Ok(())
}

// Multiplication by −i·w without forming the complex product.
#[inline(always)]
fn times_minus_i<T: Real>(w: T, z: Complex<T>) -> Complex<T> {
    Complex::new(w * z.im, -w * z.re)
}

#[inline]
fn rhs_into<T: Real>(
    y: &[Complex<T>],
    delta: T,
    p: &SystemParams<T>,
    grid: &ContinuumGrid<T>,
    out: &mut [Complex<T>],
) {
    let kp = grid.kappa_prime;
    let (ce, ct, cl, cr) = (y[EMITTER], y[TARGET], y[LEFT], y[RIGHT]);
    let drive = ct * kp;
    let mut sum = Complex::zero();
    for ((o, c), &dk) in out[LOCAL_AMPLITUDES..]
        .iter_mut()
        .zip(&y[LOCAL_AMPLITUDES..])
        .zip(&grid.detunings)
    {
        sum = sum + *c;
        *o = times_minus_i(dk, *c) - drive;
    }
    out[EMITTER] = ct * p.g - ce * p.gamma;
    out[TARGET] = -ce * p.g - (cl + cr) * p.eta + sum * kp - ct * p.extra_target_loss;
    out[LEFT] = ct * p.eta + times_minus_i(delta, cl) - cl * p.kappa_l;
    out[RIGHT] = ct * p.eta - times_minus_i(delta, cr) - cr * p.kappa_r;
}

/// Step size, horizon and snapshot decimation of an integration run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", deny_unknown_fields, default)]
pub struct IntegrationSettings<T: Real> {
    pub t_final: T,
    pub dt: T,
    /// Keep one snapshot every `snapshot_stride` steps.
    pub snapshot_stride: usize,
}

impl<T: Real> Default for IntegrationSettings<T> {
    fn default() -> Self {
        Self {
            t_final: T::lit(120.0),
            dt: T::lit(0.01),
            snapshot_stride: 10,
        }
    }
}

impl<T: Real> IntegrationSettings<T> {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(DynamicsError::InvalidSettings("dt must be > 0".into()));
        }
        if !(self.t_final >= self.dt) || !self.t_final.is_finite() {
            return Err(DynamicsError::InvalidSettings("t_final must be >= dt".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(DynamicsError::InvalidSettings(
                "snapshot_stride must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Number of steps; the step is adjusted so they land exactly on t_final.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round().to_usize().unwrap_or(1).max(1)
    }

    pub fn step(&self) -> T {
        self.t_final / T::from_usize_lossy(self.n_steps())
    }
}

/// Decimated record of the discrete amplitudes; the continuum is kept only
/// as its total population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Snapshot<T: Real> {
    pub emitter: Complex<T>,
    pub target: Complex<T>,
    pub left: Complex<T>,
    pub right: Complex<T>,
    pub continuum_population: T,
    pub total_norm: T,
}

impl<T: Real> Snapshot<T> {
    fn of(state: &AmplitudeState<T>) -> Self {
        Self {
            emitter: state.emitter(),
            target: state.target(),
            left: state.left(),
            right: state.right(),
            continuum_population: state.continuum_population(),
            total_norm: state.total_norm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub snapshots: Vec<Snapshot<T>>,
    pub final_state: AmplitudeState<T>,
    pub t_final: T,
    /// Step actually used (t_final / number of steps).
    pub dt: T,
    /// Largest single-step increase of the total norm.
    pub max_norm_increase: T,
}

/// Integrates the amplitude equations from `initial` over `[0, t_final]`.
pub fn integrate<T: Real>(
    params: &SystemParams<T>,
    schedule: &DetuningSchedule<T>,
    grid: &ContinuumGrid<T>,
    settings: &IntegrationSettings<T>,
    initial: &AmplitudeState<T>,
) -> Result<Trajectory<T>, DynamicsError> {
    params.validate_for_dynamics()?;
    settings.validate()?;
    check_dims(initial, grid)?;

    let n_steps = settings.n_steps();
    let h = settings.step();
    let half = h / T::lit(2.0);
    let sixth = h / T::lit(6.0);
    let dim = initial.as_slice().len();

    let mut y = initial.clone();
    let mut k1 = vec![Complex::zero(); dim];
    let mut k2 = vec![Complex::zero(); dim];
    let mut k3 = vec![Complex::zero(); dim];
    let mut k4 = vec![Complex::zero(); dim];
    let mut tmp = vec![Complex::zero(); dim];

    let initial_norm = y.total_norm();
    let blowup = initial_norm * (T::one() + T::lit(NORM_BLOWUP_TOLERANCE));
    let mut norm = initial_norm;
    let mut max_norm_increase = T::zero();

    let expected = n_steps / settings.snapshot_stride + 2;
    let mut times = Vec::with_capacity(expected);
    let mut snapshots = Vec::with_capacity(expected);
    times.push(T::zero());
    snapshots.push(Snapshot::of(&y));

    for step in 0..n_steps {
        let t = h * T::from_usize_lossy(step);
        let d0 = schedule.eval(t);
        let dh = schedule.eval(t + half);
        let d1 = schedule.eval(t + h);

        rhs_into(y.as_slice(), d0, params, grid, &mut k1);
        axpy(&mut tmp, y.as_slice(), half, &k1);
        rhs_into(&tmp, dh, params, grid, &mut k2);
        axpy(&mut tmp, y.as_slice(), half, &k2);
        rhs_into(&tmp, dh, params, grid, &mut k3);
        axpy(&mut tmp, y.as_slice(), h, &k3);
        rhs_into(&tmp, d1, params, grid, &mut k4);

        let two = T::lit(2.0);
        for (i, yi) in y.as_mut_slice().iter_mut().enumerate() {
            *yi = *yi + (k1[i] + (k2[i] + k3[i]) * two + k4[i]) * sixth;
        }

        let new_norm = y.total_norm();
        let t_next = h * T::from_usize_lossy(step + 1);
        if !new_norm.is_finite() || new_norm > blowup {
            return Err(DynamicsError::Unstable {
                t: t_next.as_f64(),
                norm: new_norm.as_f64(),
            });
        }
        max_norm_increase = max_norm_increase.max(new_norm - norm);
        norm = new_norm;

        if (step + 1) % settings.snapshot_stride == 0 || step + 1 == n_steps {
            times.push(t_next);
            snapshots.push(Snapshot::of(&y));
        }
    }

    Ok(Trajectory {
        times,
        snapshots,
        final_state: y,
        t_final: settings.t_final,
        dt: h,
        max_norm_increase,
    })
}

#[inline]
fn axpy<T: Real>(out: &mut [Complex<T>], y: &[Complex<T>], a: T, k: &[Complex<T>]) {
    for ((o, yi), ki) in out.iter_mut().zip(y).zip(k) {
        *o = *yi + *ki * a;
    }
}

/// Population time series extracted from a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Populations<T: Real> {
    pub times: Vec<T>,
    pub emitter: Vec<T>,
    pub target: Vec<T>,
    pub left: Vec<T>,
    pub right: Vec<T>,
    pub continuum: Vec<T>,
}

pub fn populations<T: Real>(traj: &Trajectory<T>) -> Populations<T> {
    let col = |f: fn(&Snapshot<T>) -> T| traj.snapshots.iter().map(f).collect::<Vec<T>>();
    Populations {
        times: traj.times.clone(),
        emitter: col(|s| s.emitter.norm_sqr()),
        target: col(|s| s.target.norm_sqr()),
        left: col(|s| s.left.norm_sqr()),
        right: col(|s| s.right.norm_sqr()),
        continuum: col(|s| s.continuum_population),
    }
}

impl<T: Real> Populations<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Sum of all populations at sample `i`.
    pub fn total(&self, i: usize) -> T {
        self.emitter[i] + self.target[i] + self.left[i] + self.right[i] + self.continuum[i]
    }

    /// Decay rate of the emitter population from a least-squares line
    /// through `ln|c_e|²` on `[t_lo, t_hi]`. `None` if fewer than two
    /// usable samples fall in the window.
    pub fn emitter_decay_rate(&self, t_lo: T, t_hi: T) -> Option<T> {
        fit_exponential_rate(&self.times, &self.emitter, t_lo, t_hi)
    }
}

/// Least-squares slope of `ln(values)` against `times` within a window,
/// returned as a positive decay rate.
pub fn fit_exponential_rate<T: Real>(times: &[T], values: &[T], t_lo: T, t_hi: T) -> Option<T> {
    let pts: Vec<(T, T)> = times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t >= t_lo && **t <= t_hi && **v > T::zero())
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = T::from_usize_lossy(pts.len());
    let mt = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxy: T = pts.iter().map(|(t, y)| (*t - mt) * (*y - my)).sum();
    let sxx: T = pts.iter().map(|(t, _)| (*t - mt) * (*t - mt)).sum();
    (sxx > T::zero()).then(|| -sxy / sxx)
}
