//! Small fixed-size tensors used for chart components.
//!
//! Vectors and matrices are `nalgebra` static types. Three- and four-index
//! arrays are plain nested arrays; dimensions never exceed four, so everything
//! lives on the stack.

use std::ops::{Index, IndexMut};

use nalgebra::{SMatrix, SVector};

pub type Vector<const N: usize> = SVector<f64, N>;
pub type Matrix<const N: usize> = SMatrix<f64, N, N>;

/// Derivative of a map from a surface: column `α` holds `f^i_α`.
pub type TangentMap<const N: usize> = SMatrix<f64, N, 2>;

/// Three-index array `T[i][j][k]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor3<const N: usize>(pub [[[f64; N]; N]; N]);

impl<const N: usize> Default for Tensor3<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Tensor3<N> {
    pub fn zeros() -> Self {
        Tensor3([[[0.0; N]; N]; N])
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                for k in 0..N {
                    t.0[i][j][k] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .flatten()
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..N {
            for j in 0..N {
                for k in 0..N {
                    m = m.max((self.0[i][j][k] - other.0[i][j][k]).abs());
                }
            }
        }
        m
    }
}

impl<const N: usize> Index<(usize, usize, usize)> for Tensor3<N> {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.0[i][j][k]
    }
}

impl<const N: usize> IndexMut<(usize, usize, usize)> for Tensor3<N> {
    #[inline]
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        &mut self.0[i][j][k]
    }
}

/// Four-index array `T[i][j][k][l]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor4<const N: usize>(pub [[[[f64; N]; N]; N]; N]);

impl<const N: usize> Default for Tensor4<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Tensor4<N> {
    pub fn zeros() -> Self {
        Tensor4([[[[0.0; N]; N]; N]; N])
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                for k in 0..N {
                    for l in 0..N {
                        t.0[i][j][k][l] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..N {
            for j in 0..N {
                for k in 0..N {
                    for l in 0..N {
                        m = m.max((self.0[i][j][k][l] - other.0[i][j][k][l]).abs());
                    }
                }
            }
        }
        m
    }
}

impl<const N: usize> Index<(usize, usize, usize, usize)> for Tensor4<N> {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j, k, l): (usize, usize, usize, usize)) -> &f64 {
        &self.0[i][j][k][l]
    }
}

impl<const N: usize> IndexMut<(usize, usize, usize, usize)> for Tensor4<N> {
    #[inline]
    fn index_mut(&mut self, (i, j, k, l): (usize, usize, usize, usize)) -> &mut f64 {
        &mut self.0[i][j][k][l]
    }
}

/// Neumaier-compensated sum in iteration order.
///
/// Every reduction over grid nodes goes through here so results are
/// reproducible bit-for-bit run to run.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Standard complex structure on `ℝ^N` (`J e₁ = e₂`, `J e₃ = e₄`, ...).
pub fn standard_complex_structure<const N: usize>() -> Matrix<N> {
    let mut j = Matrix::<N>::zeros();
    for b in 0..N / 2 {
        j[(2 * b + 1, 2 * b)] = 1.0;
        j[(2 * b, 2 * b + 1)] = -1.0;
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn standard_j_squares_to_minus_identity() {
        let j = standard_complex_structure::<4>();
        assert_eq!(j * j, -Matrix::<4>::identity());
        assert_eq!(j * Vector::<4>::x(), Vector::<4>::y());
    }
}
