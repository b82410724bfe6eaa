//! Fixed-size dense complex matrices used by the coupled-mode model.

use std::ops::{Index, IndexMut};

use num_traits::Zero;

use crate::num::{Complex, Real};

/// Row-major square complex matrix of fixed dimension `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMatrix<T: Real, const N: usize>(pub [[Complex<T>; N]; N]);

/// 3×3 matrix over the (left, target, right) cavity basis.
pub type CMatrix3<T> = CMatrix<T, 3>;
/// 4×4 matrix over the (emitter, mode 1, mode 2, mode 3) basis.
pub type CMatrix4<T> = CMatrix<T, 4>;

impl<T: Real, const N: usize> CMatrix<T, N> {
    pub fn zeros() -> Self {
        Self([[Complex::zero(); N]; N])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..N).map(|i| self.0[i][i]).fold(Complex::zero(), |a, b| a + b)
    }

    pub fn mul_vec(&self, v: &[Complex<T>; N]) -> [Complex<T>; N] {
        let mut out = [Complex::zero(); N];
        for (i, row) in self.0.iter().enumerate() {
            out[i] = row.iter().zip(v).fold(Complex::zero(), |acc, (a, b)| acc + *a * *b);
        }
        out
    }

    /// Largest absolute entry; used as the scale for relative tolerances.
    pub fn max_abs(&self) -> T {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(T::zero(), T::max)
    }

    /// `self − shift·I`.
    pub fn shifted(&self, shift: Complex<T>) -> Self {
        let mut m = *self;
        for i in 0..N {
            m.0[i][i] = m.0[i][i] - shift;
        }
        m
    }

    /// Solves `self · x = b` by Gaussian elimination with partial pivoting.
    /// Returns `None` for a numerically singular matrix.
    pub fn solve(&self, b: &[Complex<T>; N]) -> Option<[Complex<T>; N]> {
        let mut a = self.0;
        let mut x = *b;
        for col in 0..N {
            let pivot = (col..N)
                .max_by(|&i, &j| a[i][col].norm().partial_cmp(&a[j][col].norm()).unwrap())
                .unwrap();
            if a[pivot][col].norm() == T::zero() {
                return None;
            }
            a.swap(col, pivot);
            x.swap(col, pivot);
            for row in col + 1..N {
                let f = a[row][col] / a[col][col];
                for k in col..N {
                    let v = a[col][k];
                    a[row][k] = a[row][k] - f * v;
                }
                x[row] = x[row] - f * x[col];
            }
        }
        for col in (0..N).rev() {
            let mut s = x[col];
            for k in col + 1..N {
                s = s - a[col][k] * x[k];
            }
            x[col] = s / a[col][col];
        }
        x.iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
            .then_some(x)
    }
}

impl<T: Real, const N: usize> Index<(usize, usize)> for CMatrix<T, N> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.0[i][j]
    }
}

impl<T: Real, const N: usize> IndexMut<(usize, usize)> for CMatrix<T, N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.0[i][j]
    }
}

/// Euclidean norm of a complex vector.
pub fn vec_norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Solves a small dense real system in place (partial pivoting).
pub(crate) fn solve_real<T: Real, const N: usize>(
    mut a: [[T; N]; N],
    mut b: [T; N],
) -> Option<[T; N]> {
    for col in 0..N {
        let pivot = (col..N)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col] == T::zero() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            let bc = b[col];
            b[row] -= f * bc;
        }
    }
    for col in (0..N).rev() {
        let mut s = b[col];
        for k in col + 1..N {
            s -= a[col][k] * b[k];
        }
        b[col] = s / a[col][col];
    }
    b.iter().all(|v| v.is_finite()).then_some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn complex_solve_recovers_known_vector() {
        let m: CMatrix3<f64> = CMatrix([
            [c(2.0, 1.0), c(1.0, 0.0), c(0.0, 0.0)],
            [c(1.0, 0.0), c(0.0, -1.0), c(3.0, 0.5)],
            [c(0.0, 2.0), c(1.0, 1.0), c(4.0, 0.0)],
        ]);
        let x = [c(1.0, -1.0), c(0.5, 2.0), c(-3.0, 0.25)];
        let b = m.mul_vec(&x);
        let got = m.solve(&b).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-13);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = CMatrix3::<f64>::zeros();
        assert!(m.solve(&[c(1.0, 0.0); 3]).is_none());
    }

    #[test]
    fn real_solve_three_by_three() {
        let a = [[4.0, 1.0, 2.0], [1.0, 3.0, 0.0], [2.0, 0.0, 5.0]];
        let x = solve_real(a, [7.0, 4.0, 7.0]).unwrap();
        for (g, e) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((g - e as f64).abs() < 1e-14);
        }
    }
}
