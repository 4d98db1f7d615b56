use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Tensor, EQ_TOL, MAX_OPERATOR_DIM};
use crate::error::{contract, QssError, Result};

/// A dense operator on a register of qudits.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: DMatrix<Complex64>,
    dims: Vec<usize>,
}

impl Operator {
    pub fn from_matrix(dims: &[usize], matrix: DMatrix<Complex64>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || matrix.nrows() != total || matrix.ncols() != total {
            return contract(format!(
                "{}x{} matrix does not act on register {dims:?}",
                matrix.nrows(),
                matrix.ncols()
            ));
        }
        Ok(Operator {
            matrix,
            dims: dims.to_vec(),
        })
    }

    pub fn identity(dims: &[usize]) -> Self {
        let total: usize = dims.iter().product();
        Operator {
            matrix: DMatrix::identity(total, total),
            dims: dims.to_vec(),
        }
    }

    pub fn diagonal(dims: &[usize], entries: &[Complex64]) -> Result<Self> {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries));
        Operator::from_matrix(dims, m)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            matrix: self.matrix.adjoint(),
            dims: self.dims.clone(),
        }
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        if self.dims != other.dims {
            return contract("composing operators on different registers");
        }
        Ok(Operator {
            matrix: &self.matrix * &other.matrix,
            dims: self.dims.clone(),
        })
    }

    pub fn pow(&self, exp: usize) -> Operator {
        let mut acc = Operator::identity(&self.dims);
        for _ in 0..exp {
            acc.matrix = &acc.matrix * &self.matrix;
        }
        acc
    }

    pub fn scale(&self, factor: Complex64) -> Operator {
        Operator {
            matrix: &self.matrix * factor,
            dims: self.dims.clone(),
        }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |U^dagger U - I|` entrywise.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.matrix.adjoint() * &self.matrix;
        let id = DMatrix::<Complex64>::identity(self.dim(), self.dim());
        prod.iter()
            .zip(id.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() < EQ_TOL
    }

    /// Column `k` as a plain vector.
    pub fn column(&self, k: usize) -> Vec<Complex64> {
        self.matrix.column(k).iter().copied().collect()
    }
}

impl Tensor for Operator {
    fn tensor_with_limit(&self, other: &Self, limit: usize) -> Result<Self> {
        let limit = limit.min(MAX_OPERATOR_DIM);
        let total = self.dim().checked_mul(other.dim()).filter(|&t| t <= limit);
        if total.is_none() {
            return Err(QssError::Resource(format!(
                "operator tensor product of dimensions {} and {} exceeds limit {limit}",
                self.dim(),
                other.dim()
            )));
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Ok(Operator {
            matrix: self.matrix.kronecker(&other.matrix),
            dims,
        })
    }
}
