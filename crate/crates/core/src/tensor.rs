//! Dense symmetric `n × n` matrices at a point.

use std::ops::{Add, Index, Mul, Neg, Sub};

use crate::error::Error;

/// Symmetric matrix stored densely in row-major order. Symmetry is exact: every
/// constructor either writes both triangles or symmetrizes its input.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    n: usize,
    data: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, k: f64) -> Self {
        let mut t = Self::zeros(n);
        for i in 0..n {
            t.data[i * n + i] = k;
        }
        t
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut t = Self::zeros(n);
        for (i, &x) in d.iter().enumerate() {
            t.data[i * n + i] = x;
        }
        t
    }

    /// Builds from an entry function, symmetrizing as `(f(i,j) + f(j,i)) / 2`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(n);
        for i in 0..n {
            t.data[i * n + i] = f(i, i);
            for j in 0..i {
                let v = 0.5 * (f(i, j) + f(j, i));
                t.data[i * n + j] = v;
                t.data[j * n + i] = v;
            }
        }
        t
    }

    /// Symmetric product `(a ⊗ b + b ⊗ a) / 2`; equals `a ⊗ a` when `a == b`.
    pub fn sym_outer(a: &[f64], b: &[f64]) -> Self {
        assert_eq!(a.len(), b.len());
        Self::from_fn(a.len(), |i, j| a[i] * b[j])
    }

    pub fn outer(a: &[f64]) -> Self {
        Self::sym_outer(a, a)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|x| x * k).collect() }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Euclidean (Frobenius) contraction `Σ A_ij B_ij`.
    pub fn contract(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// `T v` for a column vector `v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        self.data
            .chunks(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Lower-triangular Cholesky factor, or `None` when not positive definite.
    pub fn cholesky(&self) -> Option<Vec<f64>> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Some(l)
    }

    /// Inverse of a positive-definite matrix.
    pub fn inverse_spd(&self) -> Result<Self, Error> {
        let n = self.n;
        let l = self.cholesky().ok_or(Error::NotPositiveDefinite)?;
        let mut inv = Self::zeros(n);
        for col in 0..n {
            // forward then backward substitution on e_col
            let mut y = vec![0.0; n];
            for i in 0..n {
                let mut s = if i == col { 1.0 } else { 0.0 };
                for k in 0..i {
                    s -= l[i * n + k] * y[k];
                }
                y[i] = s / l[i * n + i];
            }
            let mut x = vec![0.0; n];
            for i in (0..n).rev() {
                let mut s = y[i];
                for k in i + 1..n {
                    s -= l[k * n + i] * x[k];
                }
                x[i] = s / l[i * n + i];
            }
            for i in 0..n {
                inv.data[i * n + col] = x[i];
            }
        }
        Ok(Self::from_fn(n, |i, j| inv.get(i, j)))
    }

    /// `g^{ij} T_ij` for a positive-definite `g`.
    pub fn trace_g(&self, g: &Self) -> Result<f64, Error> {
        Ok(self.contract(&g.inverse_spd()?))
    }
}

/// Traceless part `T − (tr_g T / n) g`.
pub fn traceless(t: &SymTensor, g: &SymTensor) -> Result<SymTensor, Error> {
    let n = t.dim() as f64;
    let tr = t.trace_g(g)?;
    Ok(t - &g.scale(tr / n))
}

impl Index<(usize, usize)> for SymTensor {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl Add for &SymTensor {
    type Output = SymTensor;
    fn add(self, rhs: &SymTensor) -> SymTensor {
        assert_eq!(self.n, rhs.n);
        SymTensor { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &SymTensor {
    type Output = SymTensor;
    fn sub(self, rhs: &SymTensor) -> SymTensor {
        assert_eq!(self.n, rhs.n);
        SymTensor { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Add for SymTensor {
    type Output = SymTensor;
    fn add(self, rhs: SymTensor) -> SymTensor {
        &self + &rhs
    }
}

impl Sub for SymTensor {
    type Output = SymTensor;
    fn sub(self, rhs: SymTensor) -> SymTensor {
        &self - &rhs
    }
}

impl Mul<f64> for &SymTensor {
    type Output = SymTensor;
    fn mul(self, k: f64) -> SymTensor {
        self.scale(k)
    }
}

impl Neg for &SymTensor {
    type Output = SymTensor;
    fn neg(self) -> SymTensor {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traceless_of_metric_is_zero() {
        let g = SymTensor::diagonal(&[2.0, 3.0, 5.0]);
        assert!(traceless(&g, &g).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn traceless_diag_example() {
        let t = SymTensor::diagonal(&[1.0, 0.0, 0.0]);
        let r = traceless(&t, &SymTensor::identity(3)).unwrap();
        let expect = SymTensor::diagonal(&[2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0]);
        assert!((&r - &expect).max_abs() < 1e-15);
    }

    #[test]
    fn traceless_rejects_singular_metric() {
        let t = SymTensor::identity(3);
        let g = SymTensor::diagonal(&[1.0, 0.0, 1.0]);
        assert!(matches!(traceless(&t, &g), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn spd_inverse_round_trip() {
        let g = SymTensor::from_fn(3, |i, j| if i == j { 4.0 } else { 1.0 / (1 + i + j) as f64 });
        let inv = g.inverse_spd().unwrap();
        for i in 0..3 {
            let col: Vec<f64> = (0..3).map(|k| inv.get(k, i)).collect();
            let e = g.apply(&col);
            for (k, x) in e.iter().enumerate() {
                let want = if k == i { 1.0 } else { 0.0 };
                assert!((x - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn general_traceless_has_zero_g_trace() {
        let g = SymTensor::from_fn(4, |i, j| if i == j { 3.0 + i as f64 } else { 0.3 });
        let t = SymTensor::from_fn(4, |i, j| (i * 3 + j) as f64 - 2.5);
        let r = traceless(&t, &g).unwrap();
        assert!(r.trace_g(&g).unwrap().abs() < 1e-13);
    }
}
