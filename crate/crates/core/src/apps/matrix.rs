use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DecodeError, Error, Result};
use crate::groups::{BinaryOp, Wire};

/// Row-major matrix of `f64`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "ragged rows: {} and {cols} columns",
                bad.len()
            )));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Entries drawn uniformly from `[lo, hi)`.
    pub fn random(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> Self {
        Self {
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Naive triple loop.
    pub fn multiply(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0.0;
                for l in 0..self.cols {
                    acc += self.data[i * self.cols + l] * other.data[l * other.cols + j];
                }
                out.data[i * other.cols + j] = acc;
            }
        }
        Ok(out)
    }

    /// The `size`×`size` block at block coordinates `(bi, bj)`.
    pub fn block(&self, bi: usize, bj: usize, size: usize) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(size, size);
        for i in 0..size {
            let src = (bi * size + i) * self.cols + bj * size;
            out.data[i * size..(i + 1) * size].copy_from_slice(&self.data[src..src + size]);
        }
        out
    }

    /// Copies `block` into this matrix at block coordinates `(bi, bj)`.
    pub fn set_block(&mut self, bi: usize, bj: usize, block: &DenseMatrix) {
        let (h, w) = (block.rows, block.cols);
        for i in 0..h {
            let dst = (bi * h + i) * self.cols + bj * w;
            self.data[dst..dst + w].copy_from_slice(block.row(i));
        }
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Entrywise `|a − b| ≤ rel·max(1, |b|)`.
    pub fn approx_eq(&self, other: &DenseMatrix, rel: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| (a - b).abs() <= rel * b.abs().max(1.0))
    }

    /// Bit-for-bit equality, so that `NaN` and signed zeros count.
    pub fn bits_eq(&self, other: &DenseMatrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Wire for DenseMatrix {
    fn encode(&self, out: &mut Vec<u8>) {
        self.rows.encode(out);
        self.cols.encode(out);
        self.data.encode(out);
    }

    fn decode(input: &mut &[u8]) -> Result<Self, DecodeError> {
        let rows = usize::decode(input)?;
        let cols = usize::decode(input)?;
        let data = Vec::<f64>::decode(input)?;
        DenseMatrix::new(rows, cols, data).map_err(|e| DecodeError::Invalid(e.to_string()))
    }
}

/// Matrix product as an associative operator. Panics on mismatched shapes.
pub fn matmul() -> BinaryOp<DenseMatrix> {
    BinaryOp::associative("matmul", |a: DenseMatrix, b: DenseMatrix| {
        a.multiply(&b).expect("operands of matmul must have matching shapes")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiply_small() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap();
        let c = a.multiply(&b).unwrap();
        assert_eq!(c.data(), &[19.0, 22.0, 43.0, 50.0]);
        assert!(a.multiply(&DenseMatrix::zeros(3, 1)).is_err());
        assert_eq!(a.multiply(&DenseMatrix::identity(2)).unwrap(), a);
    }

    #[test]
    fn blocks_reassemble() {
        let m = DenseMatrix::new(4, 4, (0..16).map(f64::from).collect()).unwrap();
        let mut back = DenseMatrix::zeros(4, 4);
        for bi in 0..2 {
            for bj in 0..2 {
                back.set_block(bi, bj, &m.block(bi, bj, 2));
            }
        }
        assert_eq!(back, m);
        assert_eq!(m.block(1, 0, 2).data(), &[8.0, 9.0, 12.0, 13.0]);
        assert_eq!(m.col(1), vec![1.0, 5.0, 9.0, 13.0]);
    }

    #[test]
    fn wire_round_trip() {
        let m = DenseMatrix::new(2, 3, vec![1.0, f64::INFINITY, -0.0, 2.5, 3.0, 4.0]).unwrap();
        assert!(DenseMatrix::from_bytes(&m.to_bytes()).unwrap().bits_eq(&m));
        let mut bad = Vec::new();
        2usize.encode(&mut bad);
        2usize.encode(&mut bad);
        vec![1.0f64].encode(&mut bad);
        assert!(DenseMatrix::from_bytes(&bad).is_err());
    }
}
