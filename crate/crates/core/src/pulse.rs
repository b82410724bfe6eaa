//! Emitted-pulse reconstruction and analysis: waveform, phase, Gaussian
//! fit, time inversion and transfer fidelity.

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::ContinuumGrid;
use crate::linalg::solve_real;
use crate::num::{Complex, Real};

pub const DEFAULT_THRESHOLD_FRACTION: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PulseError {
    #[error("expected {expected} amplitudes, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("time grid must be uniform, increasing and have at least two points")]
    NonUniformGrid,
    #[error("time window {window} exceeds the continuum recurrence time {recurrence}")]
    Aliasing { window: f64, recurrence: f64 },
    #[error("waveform carries no energy")]
    ZeroEnergy,
    #[error("no samples above the threshold")]
    EmptyWindow,
    #[error("threshold fraction must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("Gaussian fit did not converge: {0}")]
    FitNoConvergence(String),
}

/// Complex photon waveform f(t) on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Waveform<T: Real> {
    pub times: Vec<T>,
    pub amplitudes: Vec<Complex<T>>,
    /// Σ|f|²·dt, the emitted photon number.
    pub energy: T,
}

fn check_uniform<T: Real>(times: &[T]) -> Result<T, PulseError> {
    if times.len() < 2 {
        return Err(PulseError::NonUniformGrid);
    }
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / T::from_usize_lossy(n - 1);
    if !(dt > T::zero()) {
        return Err(PulseError::NonUniformGrid);
    }
    let tol = dt * T::lit(1e-6);
    let ok = times
        .iter()
        .enumerate()
        .all(|(i, &t)| (t - (times[0] + dt * T::from_usize_lossy(i))).abs() <= tol);
    if ok {
        Ok(dt)
    } else {
        Err(PulseError::NonUniformGrid)
    }
}

impl<T: Real> Waveform<T> {
    pub fn new(times: Vec<T>, amplitudes: Vec<Complex<T>>) -> Result<Self, PulseError> {
        if times.len() != amplitudes.len() {
            return Err(PulseError::LengthMismatch {
                expected: times.len(),
                got: amplitudes.len(),
            });
        }
        let dt = check_uniform(&times)?;
        let energy = amplitudes.iter().map(|z| z.norm_sqr()).sum::<T>() * dt;
        Ok(Self {
            times,
            amplitudes,
            energy,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> T {
        (self.times[self.len() - 1] - self.times[0]) / T::from_usize_lossy(self.len() - 1)
    }

    pub fn intensities(&self) -> Vec<T> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Intensity-weighted mean time.
    pub fn centroid(&self) -> Option<T> {
        let w = self.intensities();
        let total: T = w.iter().copied().sum();
        (total > T::zero())
            .then(|| self.times.iter().zip(&w).map(|(t, i)| *t * *i).sum::<T>() / total)
    }

    /// Largest sub-window whose midpoint is the sample nearest the centroid.
    pub fn centered_on_centroid(&self) -> Result<Self, PulseError> {
        let tc = self.centroid().ok_or(PulseError::ZeroEnergy)?;
        let n = self.len();
        let ic = ((tc - self.times[0]) / self.dt())
            .round()
            .to_usize()
            .unwrap_or(0)
            .min(n - 1);
        let half = ic.min(n - 1 - ic);
        if half == 0 {
            return Err(PulseError::EmptyWindow);
        }
        let range = ic - half..ic + half + 1;
        Self::new(
            self.times[range.clone()].to_vec(),
            self.amplitudes[range].to_vec(),
        )
    }
}

/// Reconstructs the emitted pulse from the continuum amplitudes at time
/// `t_final`: f(t) = √(Δω/2π)·Σ_k c_k·exp(−iΔ_k(t − t_final)).
pub fn extract_output_pulse<T: Real>(
    continuum: &[Complex<T>],
    grid: &ContinuumGrid<T>,
    t_final: T,
    times: &[T],
) -> Result<Waveform<T>, PulseError> {
    if continuum.len() != grid.n_modes() {
        return Err(PulseError::LengthMismatch {
            expected: grid.n_modes(),
            got: continuum.len(),
        });
    }
    check_uniform(times)?;
    let recurrence = grid.recurrence_time();
    let window = (times[times.len() - 1] - times[0]).max(t_final);
    if window > recurrence {
        return Err(PulseError::Aliasing {
            window: window.as_f64(),
            recurrence: recurrence.as_f64(),
        });
    }
    let norm = (grid.spacing() / (T::lit(2.0) * T::PI())).sqrt();
    let d0 = grid.detunings()[0];
    let spacing = grid.spacing();
    let amplitudes = times
        .iter()
        .map(|&t| {
            let tau = t - t_final;
            // Σ c_k z^k with z = exp(−iΔω·τ), evaluated by Horner
            let z = Complex::from_polar(T::one(), -spacing * tau);
            let poly = continuum
                .iter()
                .rev()
                .fold(Complex::<T>::zero(), |acc, c| acc * z + c);
            poly * Complex::from_polar(norm, -d0 * tau)
        })
        .collect();
    Waveform::new(times.to_vec(), amplitudes)
}

/// Unwrapped phase of a waveform over its above-threshold samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PhaseProfile<T: Real> {
    pub times: Vec<T>,
    pub phase: Vec<T>,
    /// max − min of the unwrapped phase.
    pub flatness: T,
    pub threshold_fraction: T,
}

pub fn phase_profile<T: Real>(
    w: &Waveform<T>,
    threshold_fraction: T,
) -> Result<PhaseProfile<T>, PulseError> {
    if !(threshold_fraction > T::zero() && threshold_fraction < T::one()) {
        return Err(PulseError::InvalidThreshold(threshold_fraction.as_f64()));
    }
    let intensity = w.intensities();
    let peak = intensity.iter().copied().fold(T::zero(), T::max);
    if peak <= T::zero() {
        return Err(PulseError::EmptyWindow);
    }
    let cut = threshold_fraction * peak;
    let mut times = Vec::new();
    let mut phase: Vec<T> = Vec::new();
    let two_pi = T::lit(2.0) * T::PI();
    for ((t, z), i) in w.times.iter().zip(&w.amplitudes).zip(&intensity) {
        if *i < cut {
            continue;
        }
        let raw = z.arg();
        let value = match phase.last() {
            None => raw,
            Some(&prev) => raw + two_pi * ((prev - raw) / two_pi).round(),
        };
        times.push(*t);
        phase.push(value);
    }
    let max = phase.iter().copied().fold(T::neg_infinity(), T::max);
    let min = phase.iter().copied().fold(T::infinity(), T::min);
    Ok(PhaseProfile {
        times,
        phase,
        flatness: max - min,
        threshold_fraction,
    })
}

/// A·exp(−(t−t₀)²/(2σ²)) fitted to |f(t)|².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GaussianFit<T: Real> {
    pub amplitude: T,
    pub center: T,
    pub width: T,
    pub r_squared: T,
}

impl<T: Real> GaussianFit<T> {
    pub fn eval(&self, t: T) -> T {
        let u = (t - self.center) / self.width;
        self.amplitude * (-u * u / T::lit(2.0)).exp()
    }
}

pub fn fit_gaussian<T: Real>(w: &Waveform<T>) -> Result<GaussianFit<T>, PulseError> {
    if !(w.energy > T::zero()) {
        return Err(PulseError::ZeroEnergy);
    }
    fit_gaussian_samples(&w.times, &w.intensities())
}

const FIT_MAX_ITERATIONS: usize = 200;

/// Least-squares Gaussian fit to `(t, y)` samples.
///
/// The starting point comes from a y²-weighted quadratic fit of `ln y` in
/// moment-normalized time; Gauss–Newton with step halving then minimizes the
/// linear-domain residuals.
pub fn fit_gaussian_samples<T: Real>(times: &[T], y: &[T]) -> Result<GaussianFit<T>, PulseError> {
    if times.len() != y.len() {
        return Err(PulseError::LengthMismatch {
            expected: times.len(),
            got: y.len(),
        });
    }
    let total: T = y.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(PulseError::ZeroEnergy);
    }
    let mean = times.iter().zip(y).map(|(t, v)| *t * *v).sum::<T>() / total;
    let var = times
        .iter()
        .zip(y)
        .map(|(t, v)| (*t - mean) * (*t - mean) * *v)
        .sum::<T>()
        / total;
    let spread = if var > T::zero() { var.sqrt() } else { T::one() };
    let peak = y.iter().copied().fold(T::zero(), T::max);

    let seed = log_quadratic_seed(times, y, mean, spread, peak).unwrap_or([peak, mean, spread]);
    let mut params = seed;
    let mut ss = sum_sq(times, y, params);
    let mut converged = false;
    for _ in 0..FIT_MAX_ITERATIONS {
        let Some(step) = gauss_newton_step(times, y, params) else {
            break;
        };
        let mut lambda = T::one();
        let mut accepted = None;
        for _ in 0..40 {
            let trial = [
                params[0] + step[0] * lambda,
                params[1] + step[1] * lambda,
                params[2] + step[2] * lambda,
            ];
            let trial_ss = sum_sq(times, y, trial);
            if trial[2] > T::zero() && trial_ss <= ss {
                accepted = Some((trial, trial_ss));
                break;
            }
            lambda = lambda / T::lit(2.0);
        }
        let Some((next, next_ss)) = accepted else {
            // no descent direction left: at the minimum to working precision
            converged = true;
            break;
        };
        let rel = (0..3)
            .map(|i| ((next[i] - params[i]) / params[i].abs().max(spread)).abs())
            .fold(T::zero(), T::max);
        params = next;
        let done = rel < T::epsilon().sqrt() * T::lit(1e-3) || ss - next_ss <= ss * T::epsilon().sqrt() * T::lit(1e-2);
        ss = next_ss;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(PulseError::FitNoConvergence(format!(
            "no convergence in {FIT_MAX_ITERATIONS} iterations"
        )));
    }
    let [amplitude, center, width] = params;
    if !(width > T::zero()) || !amplitude.is_finite() || !center.is_finite() {
        return Err(PulseError::FitNoConvergence("degenerate parameters".into()));
    }
    let n = T::from_usize_lossy(y.len());
    let ybar = total / n;
    let ss_tot: T = y.iter().map(|v| (*v - ybar) * (*v - ybar)).sum();
    let r_squared = if ss_tot > T::zero() {
        T::one() - ss / ss_tot
    } else {
        T::one()
    };
    Ok(GaussianFit {
        amplitude,
        center,
        width: width.abs(),
        r_squared,
    })
}

fn model<T: Real>([a, c, s]: [T; 3], t: T) -> T {
    let u = (t - c) / s;
    a * (-u * u / T::lit(2.0)).exp()
}

fn sum_sq<T: Real>(times: &[T], y: &[T], p: [T; 3]) -> T {
    times
        .iter()
        .zip(y)
        .map(|(t, v)| {
            let r = *v - model(p, *t);
            r * r
        })
        .sum()
}

fn gauss_newton_step<T: Real>(times: &[T], y: &[T], p: [T; 3]) -> Option<[T; 3]> {
    let [a, c, s] = p;
    let mut jtj = [[T::zero(); 3]; 3];
    let mut jtr = [T::zero(); 3];
    for (t, v) in times.iter().zip(y) {
        let u = (*t - c) / s;
        let e = (-u * u / T::lit(2.0)).exp();
        let f = a * e;
        let j = [e, f * u / s, f * u * u / s];
        let r = *v - f;
        for i in 0..3 {
            jtr[i] += j[i] * r;
            for k in 0..3 {
                jtj[i][k] += j[i] * j[k];
            }
        }
    }
    solve_real(jtj, jtr)
}

fn log_quadratic_seed<T: Real>(
    times: &[T],
    y: &[T],
    mean: T,
    spread: T,
    peak: T,
) -> Option<[T; 3]> {
    let floor = peak * T::lit(1e-8);
    let mut ata = [[T::zero(); 3]; 3];
    let mut atb = [T::zero(); 3];
    let mut used = 0usize;
    for (t, v) in times.iter().zip(y) {
        if *v <= floor {
            continue;
        }
        used += 1;
        let u = (*t - mean) / spread;
        let w = *v * *v;
        let row = [T::one(), u, u * u];
        let ly = v.ln();
        for i in 0..3 {
            atb[i] += w * row[i] * ly;
            for k in 0..3 {
                ata[i][k] += w * row[i] * row[k];
            }
        }
    }
    if used < 3 {
        return None;
    }
    let [a0, b, c] = solve_real(ata, atb)?;
    if !(c < T::zero()) {
        return None;
    }
    let sigma_u = (-T::one() / (T::lit(2.0) * c)).sqrt();
    let centre_u = -b / (T::lit(2.0) * c);
    let amp = (a0 - b * b / (T::lit(4.0) * c)).exp();
    let out = [amp, mean + centre_u * spread, sigma_u * spread];
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// f(t) → f*(t_a + t_b − t) over the window `[t_a, t_b]`.
pub fn time_invert<T: Real>(w: &Waveform<T>) -> Waveform<T> {
    Waveform {
        times: w.times.clone(),
        amplitudes: w.amplitudes.iter().rev().map(|z| z.conj()).collect(),
        energy: w.energy,
    }
}

/// |∫f*h dt|² / (∫|f|²dt · ∫|h|²dt). Waveforms on different grids are
/// linearly interpolated onto the finer spacing over the union of spans.
pub fn overlap_fidelity<T: Real>(f: &Waveform<T>, h: &Waveform<T>) -> Result<T, PulseError> {
    if !(f.energy > T::zero()) || !(h.energy > T::zero()) {
        return Err(PulseError::ZeroEnergy);
    }
    let (fa, ha, dt) = if same_grid(f, h) {
        (f.amplitudes.clone(), h.amplitudes.clone(), f.dt())
    } else {
        let dt = f.dt().min(h.dt());
        let start = f.times[0].min(h.times[0]);
        let end = f.times[f.len() - 1].max(h.times[h.len() - 1]);
        let n = ((end - start) / dt).floor().to_usize().unwrap_or(0) + 1;
        let grid: Vec<T> = (0..n).map(|i| start + dt * T::from_usize_lossy(i)).collect();
        (resample(f, &grid), resample(h, &grid), dt)
    };
    let overlap = fa
        .iter()
        .zip(&ha)
        .fold(Complex::zero(), |acc: Complex<T>, (a, b)| acc + a.conj() * b)
        * dt;
    let ef: T = fa.iter().map(|z| z.norm_sqr()).sum::<T>() * dt;
    let eh: T = ha.iter().map(|z| z.norm_sqr()).sum::<T>() * dt;
    if !(ef > T::zero()) || !(eh > T::zero()) {
        return Err(PulseError::ZeroEnergy);
    }
    Ok((overlap.norm_sqr() / (ef * eh)).min(T::one()))
}

fn same_grid<T: Real>(f: &Waveform<T>, h: &Waveform<T>) -> bool {
    if f.len() != h.len() {
        return false;
    }
    let dt = f.dt();
    let tol = dt * T::lit(1e-9);
    (f.times[0] - h.times[0]).abs() <= tol && (dt - h.dt()).abs() <= tol
}

fn resample<T: Real>(w: &Waveform<T>, grid: &[T]) -> Vec<Complex<T>> {
    let dt = w.dt();
    let t0 = w.times[0];
    let n = w.len();
    grid.iter()
        .map(|&t| {
            let x = (t - t0) / dt;
            if x < -T::lit(1e-9) || x > T::from_usize_lossy(n - 1) + T::lit(1e-9) {
                return Complex::zero();
            }
            let x = x.max(T::zero());
            let i = x.floor().to_usize().unwrap_or(0).min(n - 1);
            if i + 1 >= n {
                return w.amplitudes[n - 1];
            }
            let frac = x - T::from_usize_lossy(i);
            w.amplitudes[i] * (T::one() - frac) + w.amplitudes[i + 1] * frac
        })
        .collect()
}

/// Fidelity of absorbing a pulse with a time-reversed copy of the emitter,
/// with the phase flatness of the pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FidelityReport<T: Real> {
    pub fidelity: T,
    pub phase_flatness: T,
    pub threshold_fraction: T,
    /// Midpoint of the window the pulse was reversed about.
    pub inversion_center: T,
}

/// Crops `w` symmetrically about its centroid, then compares it with its
/// own time inverse.
pub fn transfer_fidelity<T: Real>(
    w: &Waveform<T>,
    threshold_fraction: T,
) -> Result<FidelityReport<T>, PulseError> {
    let centred = w.centered_on_centroid()?;
    let inverted = time_invert(&centred);
    let fidelity = overlap_fidelity(&centred, &inverted)?;
    let phase = phase_profile(w, threshold_fraction)?;
    let mid = centred.times[centred.len() / 2];
    Ok(FidelityReport {
        fidelity,
        phase_flatness: phase.flatness,
        threshold_fraction,
        inversion_center: mid,
    })
}
