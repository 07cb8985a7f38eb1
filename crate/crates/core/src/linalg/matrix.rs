use std::fmt;

use crate::error::{Result, SwscError};

/// Dense row-major matrix of finite `f64` values.
///
/// This is the unit that gets compressed. Values may originate from narrower
/// storage (f16/f32) but all arithmetic happens at 64 bits.
#[derive(Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(SwscError::shape(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| SwscError::shape(format!("{rows}x{cols} overflows usize")))?;
        if values.len() != expected {
            return Err(SwscError::shape(format!(
                "{rows}x{cols} matrix needs {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(SwscError::param(format!(
                "non-finite value {} at row {}, col {}",
                values[pos],
                pos / cols,
                pos % cols
            )));
        }
        Ok(WeightMatrix { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows.saturating_mul(cols)])
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.saturating_mul(cols));
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self::new(rows, cols, values)
    }

    /// Builds a matrix from nested rows. All rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(SwscError::shape(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, values)
    }

    /// Builds a matrix from column vectors of equal length.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let rows = columns.first().map(|c| c.as_ref().len()).unwrap_or(0);
        let cols = columns.len();
        for (j, c) in columns.iter().enumerate() {
            if c.as_ref().len() != rows {
                return Err(SwscError::shape(format!(
                    "column {j} has {} entries, expected {rows}",
                    c.as_ref().len()
                )));
            }
        }
        Self::from_fn(rows, cols, |i, j| columns[j].as_ref()[i])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// All columns laid out contiguously, column after column.
    pub fn columns_contiguous(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            out.extend((0..self.rows).map(|i| self.get(i, j)));
        }
        out
    }

    pub fn transpose(&self) -> WeightMatrix {
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                values.push(self.get(i, j));
            }
        }
        WeightMatrix {
            rows: self.cols,
            cols: self.rows,
            values,
        }
    }

    fn zip_with(&self, other: &WeightMatrix, op: &str, f: impl Fn(f64, f64) -> f64) -> Result<WeightMatrix> {
        if self.shape() != other.shape() {
            return Err(SwscError::shape(format!(
                "cannot {op} {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        WeightMatrix::new(self.rows, self.cols, values)
    }

    pub fn add(&self, other: &WeightMatrix) -> Result<WeightMatrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &WeightMatrix) -> Result<WeightMatrix> {
        self.zip_with(other, "subtract", |a, b| a - b)
    }
}

impl fmt::Debug for WeightMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "WeightMatrix {}x{} [", self.rows, self.cols)?;
        let shown = self.rows.min(8);
        for i in 0..shown {
            let row = self.row(i);
            let cells: Vec<String> = row.iter().take(8).map(|v| format!("{v:.6}")).collect();
            let ellipsis = if self.cols > 8 { ", ..." } else { "" };
            writeln!(f, "  [{}{ellipsis}]", cells.join(", "))?;
        }
        if self.rows > shown {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}
