//! Dense problem representation: design matrix, count response and coefficients.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Tolerance used to decide whether a design is standardized.
pub const STANDARDIZED_TOL: f64 = 1e-10;

/// Dense row-major `n x p` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl Design {
    /// Builds a design from row-major storage.
    pub fn from_row_major(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidProblem(format!(
                "design must have at least one row and one column, got {n}x{p}"
            )));
        }
        if data.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "non-finite design entry at row {}, column {}",
                pos / p,
                pos % p
            )));
        }
        Ok(Self { n, p, data })
    }

    /// Builds a design from a list of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::InvalidProblem(format!(
                    "row {i} has {} entries, expected {p}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(n, p, data)
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    /// `X v`, skipping zero coordinates of `v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.p);
        let active: Vec<usize> = (0..self.p).filter(|&j| v[j] != 0.0).collect();
        if active.len() * 2 < self.p {
            (0..self.n)
                .map(|i| {
                    let row = self.row(i);
                    active.iter().map(|&j| row[j] * v[j]).sum()
                })
                .collect()
        } else {
            (0..self.n).map(|i| math::dot(self.row(i), v)).collect()
        }
    }

    /// `X^T r`.
    pub fn tmul_vec(&self, r: &[f64]) -> Vec<f64> {
        debug_assert_eq!(r.len(), self.n);
        let mut out = vec![0.0; self.p];
        for (i, &ri) in r.iter().enumerate() {
            if ri == 0.0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o += x * ri;
            }
        }
        out
    }

    /// `max |x_ij|`, the bound `R` of the design.
    pub fn max_abs(&self) -> f64 {
        math::norm_inf(&self.data)
    }

    /// Whether every column has mean zero and unit mean square.
    pub fn is_standardized(&self) -> bool {
        let n = self.n as f64;
        (0..self.p).all(|j| {
            let (mut s, mut ss) = (0.0, 0.0);
            for i in 0..self.n {
                let v = self.get(i, j);
                s += v;
                ss += v * v;
            }
            (s / n).abs() <= STANDARDIZED_TOL && (ss / n - 1.0).abs() <= STANDARDIZED_TOL
        })
    }

    /// Sub-design keeping only the listed rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Design {
        let mut data = Vec::with_capacity(rows.len() * self.p);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Design {
            n: rows.len(),
            p: self.p,
            data,
        }
    }
}

/// Design matrix plus count response.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelProblem {
    x: Design,
    y: Vec<f64>,
    standardized: bool,
}

impl ModelProblem {
    /// Validates the response (non-negative integral counts, one per row) and
    /// records whether the design is standardized.
    pub fn new(x: Design, y: Vec<f64>) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                found: y.len(),
            });
        }
        for (i, &v) in y.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0 && math::floor(v) == v) {
                return Err(Error::InvalidProblem(format!(
                    "response at row {i} is {v}, expected a non-negative integer count"
                )));
            }
        }
        let standardized = x.is_standardized();
        Ok(Self { x, y, standardized })
    }

    pub fn from_counts(x: Design, counts: &[u64]) -> Result<Self> {
        Self::new(x, counts.iter().map(|&c| c as f64).collect())
    }

    pub fn x(&self) -> &Design {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Same design, new response.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: y.len(),
            });
        }
        if let Some(i) = y.iter().position(|&v| !(v >= 0.0 && math::floor(v) == v)) {
            return Err(Error::InvalidProblem(format!(
                "response at row {i} is {}, expected a non-negative integer count",
                y[i]
            )));
        }
        Ok(Self {
            x: self.x.clone(),
            y,
            standardized: self.standardized,
        })
    }

    /// Sub-problem on the listed rows. The standardization flag is recomputed.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let x = self.x.select_rows(rows);
        let y = rows.iter().map(|&i| self.y[i]).collect();
        Self::new(x, y)
    }

    pub(crate) fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                found: v.len(),
            });
        }
        Ok(())
    }
}

/// Dense coefficient vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Coefficients(Vec<f64>);

impl Coefficients {
    pub fn new(beta: Vec<f64>) -> Self {
        Self(beta)
    }

    pub fn zeros(p: usize) -> Self {
        Self(vec![0.0; p])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Indices of the non-zero coordinates, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }

    pub fn l1_norm(&self) -> f64 {
        math::norm_l1(&self.0)
    }

    pub fn l2_norm(&self) -> f64 {
        math::sqrt(math::dot(&self.0, &self.0))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `self - other`, coordinate-wise.
    pub fn sub(&self, other: &Coefficients) -> Coefficients {
        Coefficients(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

impl From<Vec<f64>> for Coefficients {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl core::ops::Index<usize> for Coefficients {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_negative_and_fractional_counts() {
        let x = Design::from_row_major(2, 1, vec![1.0, -1.0]).unwrap();
        assert!(ModelProblem::new(x.clone(), vec![1.0, -1.0]).is_err());
        assert!(ModelProblem::new(x.clone(), vec![1.0, 0.5]).is_err());
        assert!(ModelProblem::new(x.clone(), vec![1.0]).is_err());
        let prob = ModelProblem::new(x, vec![3.0, 0.0]).unwrap();
        assert!(prob.is_standardized());
    }

    #[test]
    fn design_products() {
        let x = Design::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(x.mul_vec(&[1.0, 0.0]), vec![1.0, 3.0, 5.0]);
        assert_eq!(x.mul_vec(&[1.0, -1.0]), vec![-1.0, -1.0, -1.0]);
        assert_eq!(x.tmul_vec(&[1.0, 1.0, 1.0]), vec![9.0, 12.0]);
        assert_eq!(x.max_abs(), 6.0);
        assert!(!x.is_standardized());
        assert!(Design::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(Design::from_row_major(0, 1, vec![]).is_err());
    }

    #[test]
    fn support_accessors() {
        let b = Coefficients::new(vec![0.0, 1.5, 0.0, -2.0]);
        assert_eq!(b.support(), vec![1, 3]);
        assert_eq!(b.support_size(), 2);
        assert_eq!(b.l1_norm(), 3.5);
    }
}
