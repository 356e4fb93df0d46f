//! Dense matrices over a prime field and the block grids used to split them.

use std::fmt;

use thiserror::Error;

use crate::field::{FieldElement, PrimeField};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("{axis} dimension {len} is not divisible by {parts}")]
    NotDivisible {
        axis: Axis,
        len: usize,
        parts: usize,
    },
    #[error("matrix shape must be positive, got {rows}x{cols}")]
    EmptyShape { rows: usize, cols: usize },
    #[error("expected {expected} entries, got {actual}")]
    EntryCount { expected: usize, actual: usize },
    #[error("ragged block grid: block ({row},{col}) is {got:?}, expected {expected:?}")]
    Ragged {
        row: usize,
        col: usize,
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("grid holds {actual} blocks, expected {expected}")]
    BlockCount { expected: usize, actual: usize },
    #[error("shape mismatch: {left:?} against {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("operands live in different fields")]
    FieldMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Row => f.write_str("row"),
            Axis::Column => f.write_str("column"),
        }
    }
}

/// Row-major matrix of canonical residues.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    field: PrimeField,
    entries: Vec<u64>,
}

impl DenseMatrix {
    /// Builds a matrix, reducing every entry into the field.
    pub fn new(
        field: PrimeField,
        rows: usize,
        cols: usize,
        entries: Vec<u64>,
    ) -> Result<Self, GridError> {
        if rows == 0 || cols == 0 {
            return Err(GridError::EmptyShape { rows, cols });
        }
        if entries.len() != rows * cols {
            return Err(GridError::EntryCount {
                expected: rows * cols,
                actual: entries.len(),
            });
        }
        let entries = entries.into_iter().map(|v| field.reduce(v)).collect();
        Ok(Self {
            rows,
            cols,
            field,
            entries,
        })
    }

    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self {
            rows,
            cols,
            field,
            entries: vec![0; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        m
    }

    pub fn from_fn(
        field: PrimeField,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> u64,
    ) -> Self {
        let mut m = Self::zeros(field, rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.entries[r * cols + c] = field.reduce(f(r, c));
            }
        }
        m
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

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.entries[row * self.cols + col]
    }

    pub fn element(&self, row: usize, col: usize) -> FieldElement {
        self.field.element(self.get(row, col))
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u64) {
        self.entries[row * self.cols + col] = self.field.reduce(value);
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0)
    }

    /// Copy of the contiguous submatrix starting at `(row, col)`.
    pub fn submatrix(&self, row: usize, col: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(self.field, rows, cols, |r, c| self.get(row + r, col + c))
    }

    fn check_same(&self, other: &Self) -> Result<(), GridError> {
        if self.field != other.field {
            return Err(GridError::FieldMismatch);
        }
        if self.shape() != other.shape() {
            return Err(GridError::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, GridError> {
        self.check_same(other)?;
        let mut out = self.clone();
        out.add_assign_scaled(other, 1);
        Ok(out)
    }

    /// `self += scalar * other`; shapes must already agree.
    pub(crate) fn add_assign_scaled(&mut self, other: &Self, scalar: u64) {
        debug_assert_eq!(self.shape(), other.shape());
        let f = self.field;
        for (dst, &src) in self.entries.iter_mut().zip(&other.entries) {
            *dst = f.add(*dst, f.mul(src, scalar));
        }
    }

    pub fn scale(&self, scalar: u64) -> Self {
        let f = self.field;
        let scalar = f.reduce(scalar);
        Self {
            entries: self.entries.iter().map(|&v| f.mul(v, scalar)).collect(),
            ..self.clone()
        }
    }

    /// Schoolbook product over the field.
    pub fn matmul(&self, other: &Self) -> Result<Self, GridError> {
        if self.field != other.field {
            return Err(GridError::FieldMismatch);
        }
        if self.cols != other.rows {
            return Err(GridError::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        let f = self.field;
        let q = f.modulus() as u128;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc: u128 = 0;
                for k in 0..self.cols {
                    acc = (acc + self.get(r, k) as u128 * other.get(k, c) as u128) % q;
                }
                out.entries[r * other.cols + c] = acc as u64;
            }
        }
        Ok(out)
    }

    /// Rank via Gaussian elimination over the field.
    pub fn rank(&self) -> usize {
        let f = self.field;
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            let Some(pivot) = (rank..m.rows).find(|&r| m.get(r, col) != 0) else {
                continue;
            };
            if pivot != rank {
                for c in 0..m.cols {
                    m.entries.swap(pivot * m.cols + c, rank * m.cols + c);
                }
            }
            let inv = f.inv(m.get(rank, col)).expect("pivot is nonzero");
            for r in (rank + 1)..m.rows {
                let factor = f.mul(m.get(r, col), inv);
                if factor == 0 {
                    continue;
                }
                for c in col..m.cols {
                    let v = f.sub(m.get(r, c), f.mul(factor, m.get(rank, c)));
                    m.entries[r * m.cols + c] = v;
                }
            }
            rank += 1;
            if rank == m.rows {
                break;
            }
        }
        rank
    }
}

impl fmt::Display for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// A grid of equally shaped blocks, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    block_rows: usize,
    block_cols: usize,
    blocks: Vec<DenseMatrix>,
}

impl BlockGrid {
    pub fn new(
        block_rows: usize,
        block_cols: usize,
        blocks: Vec<DenseMatrix>,
    ) -> Result<Self, GridError> {
        if block_rows == 0 || block_cols == 0 {
            return Err(GridError::EmptyShape {
                rows: block_rows,
                cols: block_cols,
            });
        }
        if blocks.len() != block_rows * block_cols {
            return Err(GridError::BlockCount {
                expected: block_rows * block_cols,
                actual: blocks.len(),
            });
        }
        let expected = blocks[0].shape();
        let field = blocks[0].field();
        for (idx, block) in blocks.iter().enumerate() {
            if block.field() != field {
                return Err(GridError::FieldMismatch);
            }
            if block.shape() != expected {
                return Err(GridError::Ragged {
                    row: idx / block_cols,
                    col: idx % block_cols,
                    got: block.shape(),
                    expected,
                });
            }
        }
        Ok(Self {
            block_rows,
            block_cols,
            blocks,
        })
    }

    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn block_cols(&self) -> usize {
        self.block_cols
    }

    /// Shape shared by every block.
    pub fn block_shape(&self) -> (usize, usize) {
        self.blocks[0].shape()
    }

    /// Zero-based block accessor.
    pub fn block(&self, row: usize, col: usize) -> &DenseMatrix {
        &self.blocks[row * self.block_cols + col]
    }

    pub fn blocks(&self) -> &[DenseMatrix] {
        &self.blocks
    }
}

/// Splits `m` into a `block_rows x block_cols` grid of contiguous bands.
pub fn partition(
    m: &DenseMatrix,
    block_rows: usize,
    block_cols: usize,
) -> Result<BlockGrid, GridError> {
    for (axis, len, parts) in [
        (Axis::Row, m.rows(), block_rows),
        (Axis::Column, m.cols(), block_cols),
    ] {
        if parts == 0 || len % parts != 0 {
            return Err(GridError::NotDivisible { axis, len, parts });
        }
    }
    let (h, w) = (m.rows() / block_rows, m.cols() / block_cols);
    let mut blocks = Vec::with_capacity(block_rows * block_cols);
    for i in 0..block_rows {
        for j in 0..block_cols {
            blocks.push(m.submatrix(i * h, j * w, h, w));
        }
    }
    BlockGrid::new(block_rows, block_cols, blocks)
}

/// Inverse of [`partition`].
pub fn reassemble(grid: &BlockGrid) -> DenseMatrix {
    let (h, w) = grid.block_shape();
    let field = grid.blocks[0].field();
    DenseMatrix::from_fn(field, grid.block_rows * h, grid.block_cols * w, |r, c| {
        grid.block(r / h, c / w).get(r % h, c % w)
    })
}
