//! Control-cavity detuning schedules Δ(t).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("schedule needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample times must be strictly increasing (index {0})")]
    NonMonotone(usize),
    #[error("non-finite schedule input")]
    NonFinite,
}

/// Δ(t) in the rotating frame. Left cavity sits at +Δ, right at −Δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "")]
pub enum DetuningSchedule<T: Real> {
    Zero,
    Constant { value: T },
    /// Δ(t) = rate·t
    LinearRamp { rate: T },
    Sampled { samples: SampledCurve<T> },
    /// Output of the inverse-design engine; evaluates like `Sampled`.
    Designed { samples: SampledCurve<T> },
}

pub fn make_zero<T: Real>() -> DetuningSchedule<T> {
    DetuningSchedule::Zero
}

pub fn make_constant<T: Real>(delta0: T) -> Result<DetuningSchedule<T>, ScheduleError> {
    if !delta0.is_finite() {
        return Err(ScheduleError::NonFinite);
    }
    Ok(DetuningSchedule::Constant { value: delta0 })
}

pub fn make_ramp<T: Real>(beta: T) -> Result<DetuningSchedule<T>, ScheduleError> {
    if !beta.is_finite() {
        return Err(ScheduleError::NonFinite);
    }
    Ok(DetuningSchedule::LinearRamp { rate: beta })
}

pub fn make_sampled<T: Real>(pairs: &[(T, T)]) -> Result<DetuningSchedule<T>, ScheduleError> {
    Ok(DetuningSchedule::Sampled {
        samples: SampledCurve::new(pairs)?,
    })
}

impl<T: Real> DetuningSchedule<T> {
    #[inline]
    pub fn eval(&self, t: T) -> T {
        match self {
            DetuningSchedule::Zero => T::zero(),
            DetuningSchedule::Constant { value } => *value,
            DetuningSchedule::LinearRamp { rate } => *rate * t,
            DetuningSchedule::Sampled { samples } | DetuningSchedule::Designed { samples } => {
                samples.eval(t)
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DetuningSchedule::Zero => "zero",
            DetuningSchedule::Constant { .. } => "constant",
            DetuningSchedule::LinearRamp { .. } => "linear_ramp",
            DetuningSchedule::Sampled { .. } => "sampled",
            DetuningSchedule::Designed { .. } => "designed",
        }
    }

    pub fn samples(&self) -> Option<&SampledCurve<T>> {
        match self {
            DetuningSchedule::Sampled { samples } | DetuningSchedule::Designed { samples } => {
                Some(samples)
            }
            _ => None,
        }
    }

    /// Largest |dΔ/dt|. Sampled schedules use central differences on their
    /// own sample grid (one-sided at the ends).
    pub fn max_slope(&self) -> T {
        match self {
            DetuningSchedule::Zero | DetuningSchedule::Constant { .. } => T::zero(),
            DetuningSchedule::LinearRamp { rate } => rate.abs(),
            DetuningSchedule::Sampled { samples } | DetuningSchedule::Designed { samples } => {
                samples.max_finite_difference_slope()
            }
        }
    }

    /// Values of Δ on a uniform grid `t = t0 + i·dt`, `i < n`.
    pub fn tabulate(&self, t0: T, dt: T, n: usize) -> Vec<(T, T)> {
        (0..n)
            .map(|i| {
                let t = t0 + dt * T::from_usize_lossy(i);
                (t, self.eval(t))
            })
            .collect()
    }
}

/// Cubic spline through `(t, Δ)` samples with zero end slopes. Held
/// constant outside the sampled span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(T, T)>", into = "Vec<(T, T)>", bound = "")]
pub struct SampledCurve<T: Real> {
    times: Vec<T>,
    values: Vec<T>,
    second: Vec<T>,
}

impl<T: Real> TryFrom<Vec<(T, T)>> for SampledCurve<T> {
    type Error = ScheduleError;

    fn try_from(pairs: Vec<(T, T)>) -> Result<Self, Self::Error> {
        Self::new(&pairs)
    }
}

impl<T: Real> From<SampledCurve<T>> for Vec<(T, T)> {
    fn from(c: SampledCurve<T>) -> Self {
        c.pairs().collect()
    }
}

impl<T: Real> SampledCurve<T> {
    pub fn new(pairs: &[(T, T)]) -> Result<Self, ScheduleError> {
        if pairs.len() < 2 {
            return Err(ScheduleError::TooFewSamples(pairs.len()));
        }
        if pairs.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(ScheduleError::NonFinite);
        }
        if let Some(i) = pairs.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(ScheduleError::NonMonotone(i + 1));
        }
        let times: Vec<T> = pairs.iter().map(|p| p.0).collect();
        let values: Vec<T> = pairs.iter().map(|p| p.1).collect();
        let second = clamped_second_derivatives(&times, &values);
        Ok(Self {
            times,
            values,
            second,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn pairs(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn span(&self) -> (T, T) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    pub fn eval(&self, t: T) -> T {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        // index of the interval containing t
        let i = self.times.partition_point(|&x| x <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let a = t1 - t;
        let b = t - t0;
        let six = T::lit(6.0);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        m0 * a * a * a / (six * h)
            + m1 * b * b * b / (six * h)
            + (self.values[i] / h - m0 * h / six) * a
            + (self.values[i + 1] / h - m1 * h / six) * b
    }

    fn max_finite_difference_slope(&self) -> T {
        let (t, v) = (&self.times, &self.values);
        let n = t.len();
        (0..n)
            .map(|i| {
                let (lo, hi) = match i {
                    0 => (0, 1),
                    _ if i == n - 1 => (n - 2, n - 1),
                    _ => (i - 1, i + 1),
                };
                ((v[hi] - v[lo]) / (t[hi] - t[lo])).abs()
            })
            .fold(T::zero(), T::max)
    }
}

// Tridiagonal solve for spline second derivatives with S'(t_0) = S'(t_n) = 0.
fn clamped_second_derivatives<T: Real>(t: &[T], y: &[T]) -> Vec<T> {
    let n = t.len();
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let h: Vec<T> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let slope: Vec<T> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

    let mut sub = vec![T::zero(); n];
    let mut diag = vec![T::zero(); n];
    let mut sup = vec![T::zero(); n];
    let mut rhs = vec![T::zero(); n];
    diag[0] = two * h[0];
    sup[0] = h[0];
    rhs[0] = six * slope[0];
    for i in 1..n - 1 {
        sub[i] = h[i - 1];
        diag[i] = two * (h[i - 1] + h[i]);
        sup[i] = h[i];
        rhs[i] = six * (slope[i] - slope[i - 1]);
    }
    sub[n - 1] = h[n - 2];
    diag[n - 1] = two * h[n - 2];
    rhs[n - 1] = -six * slope[n - 2];

    // Thomas algorithm
    for i in 1..n {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        let r = rhs[i - 1];
        rhs[i] -= w * r;
    }
    let mut m = vec![T::zero(); n];
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
    }
    m
}
