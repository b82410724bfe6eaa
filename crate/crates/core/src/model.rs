//! Static coupled-mode theory of the three-cavity system.
//!
//! Everything here lives in the frame rotating at the target-cavity
//! frequency, so the bare target resonance sits at zero. Vectors and matrix
//! rows are ordered (left, target, right).

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{vec_norm, CMatrix, CMatrix3, CMatrix4};
use crate::num::{Complex, Real};

pub const LEFT: usize = 0;
pub const TARGET: usize = 1;
pub const RIGHT: usize = 2;

/// Iteration cap for root polishing and inverse iteration.
pub const DEFAULT_MAX_ITERATIONS: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("eigensolver did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("rate ratio undefined: all cavity losses are zero")]
    DegenerateLosses,
}

/// Physical rates of the emitter/cavity system in units of the target-cavity
/// loss rate. Cavity losses are field (amplitude) decay rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SystemParams<T: Real> {
    /// Nearest-neighbour inter-cavity coupling.
    pub eta: T,
    pub kappa_t: T,
    pub kappa_l: T,
    pub kappa_r: T,
    /// Emitter–target-cavity coupling.
    pub g: T,
    /// Emitter decay into non-cavity modes.
    pub gamma: T,
    /// Emitter detuning from the target cavity.
    pub omega_e: T,
    /// Intrinsic target-cavity loss on top of the waveguide channel. Not part
    /// of the reference model; keep at zero to reproduce it.
    pub extra_target_loss: T,
}

impl<T: Real> SystemParams<T> {
    /// Equal losses on all three cavities, no emitter detuning or leakage.
    pub fn uniform(eta: T, kappa: T, g: T) -> Self {
        Self {
            eta,
            kappa_t: kappa,
            kappa_l: kappa,
            kappa_r: kappa,
            g,
            gamma: T::zero(),
            omega_e: T::zero(),
            extra_target_loss: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("eta", self.eta),
            ("kappa_t", self.kappa_t),
            ("kappa_l", self.kappa_l),
            ("kappa_r", self.kappa_r),
            ("g", self.g),
            ("gamma", self.gamma),
            ("omega_e", self.omega_e),
            ("extra_target_loss", self.extra_target_loss),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(ModelError::InvalidParams(format!("{name} must be finite")));
            }
        }
        for (name, v) in &fields[..7] {
            if *name != "omega_e" && *v < T::zero() {
                return Err(ModelError::InvalidParams(format!("{name} must be >= 0")));
            }
        }
        if self.extra_target_loss < T::zero() {
            return Err(ModelError::InvalidParams("extra_target_loss must be >= 0".into()));
        }
        if self.eta <= T::zero() {
            return Err(ModelError::InvalidParams("eta must be > 0".into()));
        }
        Ok(())
    }

    /// Stricter check used before dynamics runs: the target cavity must
    /// couple to the waveguide.
    pub fn validate_for_dynamics(&self) -> Result<(), ModelError> {
        self.validate()?;
        if self.kappa_t <= T::zero() {
            return Err(ModelError::InvalidParams("kappa_t must be > 0".into()));
        }
        Ok(())
    }

    /// Bare weak-coupling emission rate 2g²/κ_t into the uncoupled target cavity.
    pub fn bare_emission_rate(&self) -> T {
        T::lit(2.0) * self.g * self.g / self.kappa_t
    }
}

/// Coupled-mode eigenstructure of a 3×3 cavity Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EigenSystem<T: Real> {
    /// Complex eigenfrequencies; the imaginary part is minus the mode loss.
    pub omegas: [Complex<T>; 3],
    /// Unit-norm eigenvectors, components ordered (left, target, right).
    pub vectors: [[Complex<T>; 3]; 3],
    /// |α_t^(i)|² for each mode.
    pub target_fractions: [T; 3],
    /// κ_i = Σ_j |α_j^(i)|² κ_j.
    pub effective_losses: [T; 3],
    /// Mode whose frequency stays pinned at the target resonance.
    pub dark_index: usize,
}

impl<T: Real> EigenSystem<T> {
    pub fn dark_vector(&self) -> &[Complex<T>; 3] {
        &self.vectors[self.dark_index]
    }

    pub fn dark_target_fraction(&self) -> T {
        self.target_fractions[self.dark_index]
    }
}

/// Hamiltonian of the empty three-cavity chain at control detuning `delta`.
pub fn build_cavity_hamiltonian<T: Real>(params: &SystemParams<T>, delta: T) -> CMatrix3<T> {
    let z = Complex::zero();
    let eta = Complex::from(params.eta);
    CMatrix([
        [Complex::new(delta, -params.kappa_l), eta, z],
        [eta, Complex::new(T::zero(), -params.kappa_t), eta],
        [z, eta, Complex::new(-delta, -params.kappa_r)],
    ])
}

/// Lossless eigenfrequencies `(0, +√(2η²+Δ²), −√(2η²+Δ²))`, dark mode first.
pub fn analytic_eigenvalues<T: Real>(eta: T, delta: T) -> [T; 3] {
    let s = (T::lit(2.0) * eta * eta + delta * delta).sqrt();
    [T::zero(), s, -s]
}

/// Lossless dark-mode eigenvector `(−1, Δ/η, 1)/√(2+(Δ/η)²)`.
pub fn dark_mode_vector<T: Real>(eta: T, delta: T) -> [T; 3] {
    let r = delta / eta;
    let n = (T::lit(2.0) + r * r).sqrt();
    [-T::one() / n, r / n, T::one() / n]
}

/// Target-cavity fraction of the dark mode, Δ²/(2η²+Δ²). This is also the
/// local density of states at the emitter relative to the isolated cavity.
pub fn ldos_ratio<T: Real>(eta: T, delta: T) -> T {
    let d2 = delta * delta;
    let denom = T::lit(2.0) * eta * eta + d2;
    if denom == T::zero() {
        T::zero()
    } else {
        d2 / denom
    }
}

/// Ratio of the coupled to the uncoupled emission rate using the lossless
/// dark-mode vector.
pub fn se_rate_ratio<T: Real>(params: &SystemParams<T>, delta: T) -> Result<T, ModelError> {
    params.validate()?;
    let [l, t, r] = dark_mode_vector(params.eta, delta);
    let num = t * t * params.kappa_t;
    let denom = num + l * l * params.kappa_l + r * r * params.kappa_r;
    if denom <= T::zero() {
        return Err(ModelError::DegenerateLosses);
    }
    Ok(num / denom)
}

/// Converts a refractive-index change into the resonance shift
/// `Δω = −(Δn/n)·ω`.
pub fn index_shift_to_detuning<T: Real>(delta_n: T, n: T, omega: T) -> Result<T, ModelError> {
    if !(n > T::zero()) || !(omega > T::zero()) {
        return Err(ModelError::InvalidArgument(
            "refractive index and carrier frequency must be positive".into(),
        ));
    }
    Ok(-(delta_n / n) * omega)
}

/// Diagonalizes a 3×3 complex cavity matrix.
pub fn numeric_eigensystem<T: Real>(h: &CMatrix3<T>) -> Result<EigenSystem<T>, ModelError> {
    numeric_eigensystem_with(h, DEFAULT_MAX_ITERATIONS)
}

/// As [`numeric_eigensystem`] with an explicit iteration cap.
///
/// Roots of the characteristic cubic come from the closed form and are
/// polished by Newton steps; each eigenvector starts from the null direction
/// of `H − λI` and gets inverse-iteration refinement.
pub fn numeric_eigensystem_with<T: Real>(
    h: &CMatrix3<T>,
    max_iterations: usize,
) -> Result<EigenSystem<T>, ModelError> {
    if !h.is_finite() {
        return Err(ModelError::NonFinite);
    }
    let scale = {
        let s = h.max_abs();
        if s > T::zero() {
            s
        } else {
            T::one()
        }
    };
    let coeffs = char_poly(h);
    let mut roots = cubic_roots(coeffs);
    for root in roots.iter_mut() {
        *root = polish_root(coeffs, *root, scale, max_iterations)?;
    }

    let mut pairs = Vec::with_capacity(3);
    for (k, &lambda) in roots.iter().enumerate() {
        let v = eigenvector(h, lambda, scale, k, max_iterations)?;
        pairs.push((lambda, v));
    }

    // dark mode first, the remaining two by descending frequency
    let dark = (0..3)
        .min_by(|&a, &b| {
            pairs[a].0.re.abs().partial_cmp(&pairs[b].0.re.abs()).unwrap()
        })
        .unwrap();
    let mut rest: Vec<usize> = (0..3).filter(|&i| i != dark).collect();
    rest.sort_by(|&a, &b| pairs[b].0.re.partial_cmp(&pairs[a].0.re).unwrap());
    let order = [dark, rest[0], rest[1]];

    let losses = [-h.0[0][0].im, -h.0[1][1].im, -h.0[2][2].im];
    let mut omegas = [Complex::zero(); 3];
    let mut vectors = [[Complex::zero(); 3]; 3];
    let mut target_fractions = [T::zero(); 3];
    let mut effective_losses = [T::zero(); 3];
    for (slot, &i) in order.iter().enumerate() {
        let (lambda, v) = pairs[i];
        omegas[slot] = lambda;
        vectors[slot] = v;
        target_fractions[slot] = v[TARGET].norm_sqr();
        effective_losses[slot] = v
            .iter()
            .zip(losses)
            .map(|(a, k)| a.norm_sqr() * k)
            .sum();
    }
    Ok(EigenSystem {
        omegas,
        vectors,
        target_fractions,
        effective_losses,
        dark_index: 0,
    })
}

/// Emitter plus coupled cavity modes: diagonal `(ω_e−iγ, ω_i−iκ_i)` and
/// couplings `g_i = α_t^(i)·g` in the first row and column.
pub fn coupled_qe_hamiltonian<T: Real>(
    params: &SystemParams<T>,
    delta: T,
) -> Result<CMatrix4<T>, ModelError> {
    params.validate()?;
    let eig = numeric_eigensystem(&build_cavity_hamiltonian(params, delta))?;
    let mut m = CMatrix4::<T>::zeros();
    m.0[0][0] = Complex::new(params.omega_e, -params.gamma);
    for i in 0..3 {
        m.0[i + 1][i + 1] = Complex::new(eig.omegas[i].re, -eig.effective_losses[i]);
        let gi = eig.vectors[i][TARGET] * params.g;
        m.0[0][i + 1] = gi;
        m.0[i + 1][0] = gi;
    }
    Ok(m)
}

// Coefficients (a, b, c) of λ³ + aλ² + bλ + c = det(λI − H).
fn char_poly<T: Real>(h: &CMatrix3<T>) -> [Complex<T>; 3] {
    let m = &h.0;
    let minor = |i: usize, j: usize| m[i][i] * m[j][j] - m[i][j] * m[j][i];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    [-h.trace(), minor(0, 1) + minor(0, 2) + minor(1, 2), -det]
}

fn eval_poly<T: Real>([a, b, c]: [Complex<T>; 3], x: Complex<T>) -> (Complex<T>, Complex<T>) {
    let p = ((x + a) * x + b) * x + c;
    let dp = (x * T::lit(3.0) + a * T::lit(2.0)) * x + b;
    (p, dp)
}

fn cubic_roots<T: Real>([a, b, c]: [Complex<T>; 3]) -> [Complex<T>; 3] {
    let three = T::lit(3.0);
    let shift = a / three;
    let p = b - a * a / three;
    let q = a * a * a * T::lit(2.0 / 27.0) - a * b / three + c;
    let disc = (q * q / T::lit(4.0) + p * p * p / T::lit(27.0)).sqrt();
    let half_q = q / T::lit(2.0);
    let w1 = -half_q + disc;
    let w2 = -half_q - disc;
    let w = if w1.norm() >= w2.norm() { w1 } else { w2 };
    let u = w.cbrt();
    if u.norm() == T::zero() {
        return [-shift; 3];
    }
    let rot = Complex::from_polar(T::one(), T::lit(2.0) * T::PI() / three);
    let mut out = [Complex::zero(); 3];
    let mut uk = u;
    for root in out.iter_mut() {
        *root = uk - p / (uk * three) - shift;
        uk = uk * rot;
    }
    out
}

fn polish_root<T: Real>(
    coeffs: [Complex<T>; 3],
    mut x: Complex<T>,
    scale: T,
    max_iterations: usize,
) -> Result<Complex<T>, ModelError> {
    let tol = T::epsilon() * T::lit(8.0) * scale;
    for _ in 0..max_iterations {
        let (p, dp) = eval_poly(coeffs, x);
        if p.norm() == T::zero() || dp.norm() <= tol * scale {
            // exact root, or a repeated root where Newton stalls
            return Ok(x);
        }
        let step = p / dp;
        x = x - step;
        if step.norm() <= tol {
            return Ok(x);
        }
    }
    let (p, _) = eval_poly(coeffs, x);
    if p.norm() <= T::epsilon().sqrt() * scale * scale * scale {
        Ok(x)
    } else {
        Err(ModelError::NoConvergence(max_iterations))
    }
}

fn cross<T: Real>(a: &[Complex<T>; 3], b: &[Complex<T>; 3]) -> [Complex<T>; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize<T: Real>(v: [Complex<T>; 3]) -> [Complex<T>; 3] {
    let n = vec_norm(&v);
    v.map(|z| z / n)
}

// Makes the right component real positive, falling back to target then left.
fn fix_phase<T: Real>(v: [Complex<T>; 3]) -> [Complex<T>; 3] {
    let floor = T::epsilon().sqrt();
    let anchor = [RIGHT, TARGET, LEFT]
        .into_iter()
        .find(|&i| v[i].norm() > floor)
        .unwrap_or(RIGHT);
    let a = v[anchor];
    if a.norm() == T::zero() {
        return v;
    }
    let phase = a.conj() / a.norm();
    v.map(|z| z * phase)
}

fn initial_null_vector<T: Real>(m: &CMatrix3<T>, variant: usize) -> [Complex<T>; 3] {
    let rows = &m.0;
    let candidates = [
        cross(&rows[0], &rows[1]),
        cross(&rows[0], &rows[2]),
        cross(&rows[1], &rows[2]),
    ];
    let best = candidates
        .iter()
        .max_by(|a, b| vec_norm(&a[..]).partial_cmp(&vec_norm(&b[..])).unwrap())
        .unwrap();
    let scale = m.max_abs();
    if vec_norm(&best[..]) > T::epsilon() * scale * scale {
        return *best;
    }
    // rank ≤ 1: pick a vector annihilated by the dominant row
    let row = rows
        .iter()
        .max_by(|a, b| vec_norm(&a[..]).partial_cmp(&vec_norm(&b[..])).unwrap())
        .unwrap();
    let z = Complex::zero();
    let o = Complex::one();
    if vec_norm(&row[..]) <= T::epsilon() * scale {
        let mut e = [z; 3];
        e[variant % 3] = o;
        return e;
    }
    let options = [
        [row[1], -row[0], z],
        [row[2], z, -row[0]],
        [z, row[2], -row[1]],
    ];
    let mut sorted = options;
    sorted.sort_by(|a, b| vec_norm(&b[..]).partial_cmp(&vec_norm(&a[..])).unwrap());
    if variant % 2 == 1 && vec_norm(&sorted[1][..]) > T::epsilon() * scale {
        sorted[1]
    } else {
        sorted[0]
    }
}

fn eigenvector<T: Real>(
    h: &CMatrix3<T>,
    lambda: Complex<T>,
    scale: T,
    variant: usize,
    max_iterations: usize,
) -> Result<[Complex<T>; 3], ModelError> {
    let shifted = h.shifted(lambda);
    let mut v = normalize(initial_null_vector(&shifted, variant));
    let tol = T::epsilon().sqrt() * T::epsilon().sqrt().sqrt() * scale;
    let residual = |v: &[Complex<T>; 3]| vec_norm(&shifted.mul_vec(v)[..]);
    // inverse iteration with a tiny offset so the solve stays regular
    let offset = Complex::new(T::epsilon().sqrt() * scale * T::lit(1e-3), T::zero());
    let near = h.shifted(lambda + offset);
    for _ in 0..max_iterations.max(1) {
        if let Some(w) = near.solve(&v) {
            let n = vec_norm(&w[..]);
            if n.is_finite() && n > T::zero() {
                v = w.map(|z| z / n);
            }
        }
        if residual(&v) <= tol {
            return Ok(fix_phase(v));
        }
    }
    Err(ModelError::NoConvergence(max_iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lossless(eta: f64) -> SystemParams<f64> {
        SystemParams::uniform(eta, 0.0, 0.0)
    }

    #[test]
    fn hamiltonian_entries() {
        let h = build_cavity_hamiltonian(&lossless(1.0), 0.0);
        for i in 0..3 {
            assert_eq!(h.0[i][i], Complex::new(0.0, 0.0));
        }
        assert_eq!(h.0[0][1], Complex::new(1.0, 0.0));
        assert_eq!(h.0[2][1], Complex::new(1.0, 0.0));
        assert_eq!(h.0[0][2], Complex::new(0.0, 0.0));
        assert_eq!(h.0[2][0], Complex::new(0.0, 0.0));

        let h = build_cavity_hamiltonian(&SystemParams::uniform(10.0, 1.0, 0.0), 5.0);
        assert_eq!(h.0[0][0], Complex::new(5.0, -1.0));
        assert_eq!(h.0[1][1], Complex::new(0.0, -1.0));
        assert_eq!(h.0[2][2], Complex::new(-5.0, -1.0));
        assert_eq!(h.0[1][0], Complex::new(10.0, 0.0));
        assert_eq!(h.0[1][2], Complex::new(10.0, 0.0));
    }

    #[test]
    fn hamiltonian_with_tenth_eta_losses() {
        let eta = 3.0;
        let p = SystemParams::uniform(eta, 0.1 * eta, 0.0);
        let h = build_cavity_hamiltonian(&p, 1.7);
        for i in 0..3 {
            assert_abs_diff_eq!(h.0[i][i].im, -0.3, epsilon = 1e-15);
        }
    }

    #[test]
    fn analytic_eigenvalue_examples() {
        let [a, b, c] = analytic_eigenvalues(1.0, 0.0);
        assert_eq!(a, 0.0);
        assert_abs_diff_eq!(b, 1.414_213_56, epsilon = 1e-8);
        assert_abs_diff_eq!(c, -1.414_213_56, epsilon = 1e-8);
        let [_, b, c] = analytic_eigenvalues(1.0, 2f64.sqrt());
        assert_abs_diff_eq!(b, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c, -2.0, epsilon = 1e-15);
    }

    #[test]
    fn dark_vector_examples() {
        let v = dark_mode_vector(1.0, 0.0);
        let s = 0.5f64.sqrt();
        assert_abs_diff_eq!(v[0], -s, epsilon = 1e-15);
        assert_eq!(v[1], 0.0);
        assert_abs_diff_eq!(v[2], s, epsilon = 1e-15);

        let v = dark_mode_vector(2.0, 2.0);
        let s = (1.0f64 / 3.0).sqrt();
        assert_abs_diff_eq!(v[0], -s, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], s, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1] * v[1], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn large_detuning_fraction_matches_diagonalization() {
        let eta = 1.3;
        let v = dark_mode_vector(eta, 10.0 * eta);
        assert_abs_diff_eq!(v[1] * v[1], 100.0 / 102.0, epsilon = 1e-14);
        let eig = numeric_eigensystem(&build_cavity_hamiltonian(&lossless(eta), 10.0 * eta))
            .unwrap();
        for (a, b) in eig.dark_vector().iter().zip(v) {
            assert_abs_diff_eq!(a.re, b, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn lossless_numeric_matches_analytic() {
        for &(eta, delta) in &[(1.0, 0.0), (1.0, 0.7), (10.0, -35.0), (0.2, 3.0)] {
            let eig =
                numeric_eigensystem(&build_cavity_hamiltonian(&lossless(eta), delta)).unwrap();
            let expect = analytic_eigenvalues(eta, delta);
            for i in 0..3 {
                assert_abs_diff_eq!(eig.omegas[i].re, expect[i], epsilon = 1e-9 * eta);
                assert_abs_diff_eq!(eig.omegas[i].im, 0.0, epsilon = 1e-9 * eta);
            }
            let total: f64 = eig.target_fractions.iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn equal_losses_give_equal_effective_losses() {
        let p = SystemParams::uniform(2.0, 0.4, 0.0);
        let eig = numeric_eigensystem(&build_cavity_hamiltonian(&p, 2.0)).unwrap();
        for k in eig.effective_losses {
            assert_abs_diff_eq!(k, 0.4, epsilon = 1e-9);
        }
    }

    #[test]
    fn eigenvectors_have_unit_norm_and_positive_right_component() {
        let p = SystemParams {
            kappa_l: 3.0,
            kappa_r: 0.5,
            ..SystemParams::uniform(1.0, 1.0, 0.0)
        };
        let eig = numeric_eigensystem(&build_cavity_hamiltonian(&p, 0.8)).unwrap();
        for v in &eig.vectors {
            assert_abs_diff_eq!(vec_norm(&v[..]), 1.0, epsilon = 1e-12);
            assert!(v[RIGHT].re > 0.0);
            assert_abs_diff_eq!(v[RIGHT].im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn degenerate_matrices_still_diagonalize() {
        let eig = numeric_eigensystem(&CMatrix3::<f64>::zeros()).unwrap();
        for w in eig.omegas {
            assert_eq!(w, Complex::new(0.0, 0.0));
        }
        let mut id = CMatrix3::<f64>::zeros();
        for i in 0..3 {
            id.0[i][i] = Complex::new(2.0, -1.0);
        }
        let eig = numeric_eigensystem(&id).unwrap();
        for w in eig.omegas {
            assert_abs_diff_eq!((w - Complex::new(2.0, -1.0)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn non_finite_matrix_rejected() {
        let mut h = CMatrix3::<f64>::zeros();
        h.0[1][2] = Complex::new(f64::NAN, 0.0);
        assert_eq!(numeric_eigensystem(&h), Err(ModelError::NonFinite));
    }

    #[test]
    fn rate_ratio_examples() {
        let p = SystemParams::uniform(10.0, 1.0, 0.1);
        assert_eq!(se_rate_ratio(&p, 0.0).unwrap(), 0.0);
        assert!(se_rate_ratio(&p, 1000.0).unwrap() >= 0.9998);
        let p = SystemParams {
            kappa_l: 10.0,
            kappa_r: 10.0,
            ..SystemParams::uniform(10.0, 1.0, 0.1)
        };
        assert_abs_diff_eq!(se_rate_ratio(&p, 10.0).unwrap(), 1.0 / 21.0, epsilon = 1e-15);
        let dead = SystemParams::uniform(1.0, 0.0, 0.1);
        assert_eq!(se_rate_ratio(&dead, 1.0), Err(ModelError::DegenerateLosses));
    }

    #[test]
    fn ldos_examples() {
        assert_eq!(ldos_ratio(1.0, 0.0), 0.0);
        assert_abs_diff_eq!(ldos_ratio(3.0, 2f64.sqrt() * 3.0), 0.5, epsilon = 1e-12);
        assert!(ldos_ratio(1.0, 11.0) > 0.98);
    }

    #[test]
    fn index_shift_examples() {
        assert_eq!(index_shift_to_detuning(0.0, 3.4, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            index_shift_to_detuning(-0.034, 3.4, 1.0).unwrap(),
            0.01,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            index_shift_to_detuning(0.034, 3.4, 200.0).unwrap(),
            -2.0,
            epsilon = 1e-13
        );
        assert!(index_shift_to_detuning(0.1, 0.0, 1.0).is_err());
        assert!(index_shift_to_detuning(0.1, 1.0, -1.0).is_err());
    }

    #[test]
    fn qe_hamiltonian_examples() {
        let p = SystemParams::uniform(10.0, 1.0, 0.1);
        let m = coupled_qe_hamiltonian(&p, 0.0).unwrap();
        assert!(m.0[0][1].norm() < 1e-12);

        let uncoupled = SystemParams::uniform(10.0, 1.0, 0.0);
        let m = coupled_qe_hamiltonian(&uncoupled, 4.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(m.0[i][j], Complex::new(0.0, 0.0));
                }
            }
        }

        let lossless_g = SystemParams::uniform(1.0, 0.0, 0.1);
        let m = coupled_qe_hamiltonian(&lossless_g, 1.0).unwrap();
        assert_abs_diff_eq!(m.0[0][1].norm(), 0.1 / 3f64.sqrt(), epsilon = 1e-12);
        assert_eq!(m.0[0][1], m.0[1][0]);
    }

    #[test]
    fn params_validation() {
        let mut p = SystemParams::uniform(1.0, 1.0, 0.1);
        assert!(p.validate().is_ok());
        p.eta = 0.0;
        assert!(p.validate().is_err());
        p.eta = 1.0;
        p.kappa_l = -0.1;
        assert!(p.validate().is_err());
        p.kappa_l = 1.0;
        p.omega_e = -2.0;
        assert!(p.validate().is_ok());
        p.kappa_t = 0.0;
        assert!(p.validate().is_ok());
        assert!(p.validate_for_dynamics().is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let p = SystemParams::<f32>::uniform(1.0, 0.0, 0.0);
        let eig = numeric_eigensystem(&build_cavity_hamiltonian(&p, 1.0)).unwrap();
        let expect = analytic_eigenvalues(1.0f32, 1.0);
        for i in 0..3 {
            assert!((eig.omegas[i].re - expect[i]).abs() < 1e-4);
        }
    }
}
