use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NeuralError;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor2D {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Tensor2D {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, values: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, NeuralError> {
        if values.len() != rows * cols {
            return Err(NeuralError::Shape { op: "from_vec", left: (rows, cols), right: (values.len(), 1) });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NeuralError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(NeuralError::Shape { op: "from_rows", left: (1, cols), right: (1, r.len()) });
            }
            values.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, values })
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(n, n);
        for i in 0..n {
            t.set(i, i, 1.0);
        }
        t
    }

    /// Glorot-uniform initialization.
    pub fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let limit = libm::sqrt(6.0 / (rows + cols) as f64);
        let values = (0..rows * cols).map(|_| rng.random_range(-limit..limit)).collect();
        Self { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn fill(&mut self, v: f64) {
        self.values.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    fn check(&self, other: &Self, op: &'static str, ok: bool) -> Result<(), NeuralError> {
        if ok {
            Ok(())
        } else {
            Err(NeuralError::Shape { op, left: self.shape(), right: other.shape() })
        }
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self, NeuralError> {
        self.check(other, "matmul", self.cols == other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.values[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.values[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other`.
    pub fn t_matmul(&self, other: &Self) -> Result<Self, NeuralError> {
        self.check(other, "t_matmul", self.rows == other.rows)?;
        let mut out = Self::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let b_row = other.row(r);
            for i in 0..self.cols {
                let a = self.values[r * self.cols + i];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out.values[i * other.cols..(i + 1) * other.cols].iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · otherᵀ`.
    pub fn matmul_t(&self, other: &Self) -> Result<Self, NeuralError> {
        self.check(other, "matmul_t", self.cols == other.cols)?;
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                out.values[i * other.rows + j] = a.iter().zip(other.row(j)).map(|(x, y)| x * y).sum();
            }
        }
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<(), NeuralError> {
        self.check(other, "add_assign", self.shape() == other.shape())?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    /// Add a `1 × cols` row to every row.
    pub fn add_row_assign(&mut self, row: &Self) -> Result<(), NeuralError> {
        self.check(row, "add_row", row.rows == 1 && row.cols == self.cols)?;
        for r in 0..self.rows {
            for (a, b) in self.row_mut(r).iter_mut().zip(&row.values) {
                *a += b;
            }
        }
        Ok(())
    }

    /// `1 × cols` column sums.
    pub fn column_sums(&self) -> Self {
        let mut out = Self::zeros(1, self.cols);
        for r in 0..self.rows {
            for (o, v) in out.values.iter_mut().zip(self.row(r)) {
                *o += v;
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { rows: self.rows, cols: self.cols, values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

/// A trainable tensor and its accumulated gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub value: Tensor2D,
    #[serde(skip, default = "empty")]
    pub grad: Tensor2D,
}

fn empty() -> Tensor2D {
    Tensor2D::zeros(0, 0)
}

impl Parameter {
    pub fn new(value: Tensor2D) -> Self {
        let grad = Tensor2D::zeros(value.rows(), value.cols());
        Self { value, grad }
    }

    pub fn zero_grad(&mut self) {
        if self.grad.shape() != self.value.shape() {
            self.grad = Tensor2D::zeros(self.value.rows(), self.value.cols());
        } else {
            self.grad.fill(0.0);
        }
    }

    pub fn len(&self) -> usize {
        self.value.values().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_variants_agree() {
        let a = Tensor2D::from_vec(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let b = Tensor2D::from_vec(3, 2, vec![7., 8., 9., 10., 11., 12.]).unwrap();
        let ab = a.matmul(&b).unwrap();
        assert_eq!(ab.values(), &[58., 64., 139., 154.]);
        let at = Tensor2D::from_rows(&[vec![1., 4.], vec![2., 5.], vec![3., 6.]]).unwrap();
        assert_eq!(at.t_matmul(&b).unwrap(), ab);
        let bt = Tensor2D::from_rows(&[vec![7., 9., 11.], vec![8., 10., 12.]]).unwrap();
        assert_eq!(a.matmul_t(&bt).unwrap(), ab);
        assert!(matches!(a.matmul(&a), Err(NeuralError::Shape { left: (2, 3), right: (2, 3), .. })));
    }

    #[test]
    fn deserialized_parameter_gets_fresh_grad() {
        let mut p: Parameter = serde_json::from_str(r#"{"value":{"rows":1,"cols":2,"values":[1.0,2.0]}}"#).unwrap();
        p.zero_grad();
        assert_eq!(p.grad.shape(), (1, 2));
    }
}
