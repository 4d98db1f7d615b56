use num_complex::Complex64;

use super::{strides, Operator, Tensor, EQ_TOL};
use crate::error::{contract, QssError, Result};

/// A normalized pure state over one or more subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
    dims: Vec<usize>,
}

impl PureState {
    /// Computational basis state `|index>` of a register with the given dims.
    pub fn basis(dims: &[usize], index: usize) -> Result<Self> {
        let total = checked_total(dims)?;
        if index >= total {
            return contract(format!("basis index {index} out of range for dimension {total}"));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); total];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(PureState {
            amplitudes,
            dims: dims.to_vec(),
        })
    }

    /// Wraps amplitudes that must already be normalized within `1e-9`.
    pub fn from_amplitudes(dims: &[usize], amplitudes: Vec<Complex64>) -> Result<Self> {
        let state = Self::unchecked(dims, amplitudes)?;
        let norm_sq = state.norm_sqr();
        if (norm_sq - 1.0).abs() > EQ_TOL {
            return contract(format!("amplitudes not normalized: sum |a|^2 = {norm_sq}"));
        }
        Ok(state)
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(dims: &[usize], amplitudes: Vec<Complex64>) -> Result<Self> {
        let mut state = Self::unchecked(dims, amplitudes)?;
        let norm = state.norm_sqr().sqrt();
        if norm < 1e-12 {
            return Err(QssError::Numerical("cannot normalize the zero vector".into()));
        }
        state.amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(state)
    }

    fn unchecked(dims: &[usize], amplitudes: Vec<Complex64>) -> Result<Self> {
        let total = checked_total(dims)?;
        if amplitudes.len() != total {
            return contract(format!(
                "{} amplitudes supplied for a register of dimension {total}",
                amplitudes.len()
            ));
        }
        Ok(PureState {
            amplitudes,
            dims: dims.to_vec(),
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.total_dim() != other.total_dim() {
            return contract(format!(
                "inner product of states with dimensions {} and {}",
                self.total_dim(),
                other.total_dim()
            ));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// True iff `|<self|other>| > 1 - tol`, i.e. equal up to a global phase.
    pub fn equal_up_to_phase(&self, other: &PureState, tol: f64) -> bool {
        if self.dims != other.dims {
            return false;
        }
        match self.inner(other) {
            Ok(ov) => ov.norm() > 1.0 - tol,
            Err(_) => false,
        }
    }

    /// Multiplies every amplitude by a unit-modulus phase.
    pub fn with_phase(&self, phase: Complex64) -> PureState {
        PureState {
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
            dims: self.dims.clone(),
        }
    }

    /// Complex conjugate in the computational basis.
    pub fn conj(&self) -> PureState {
        PureState {
            amplitudes: self.amplitudes.iter().map(|a| a.conj()).collect(),
            dims: self.dims.clone(),
        }
    }

    /// Applies a full-register operator. The result is renormalized, so
    /// callers should pass unitaries unless they want a projection.
    pub fn apply(&self, op: &Operator) -> Result<PureState> {
        if op.dims() != self.dims.as_slice() {
            return contract("operator and state registers differ");
        }
        let out = op.matrix() * nalgebra::DVector::from_column_slice(&self.amplitudes);
        PureState::normalized(&self.dims, out.as_slice().to_vec())
    }

    /// Applies a single-qudit operator to subsystem `slot` without
    /// renormalizing.
    pub fn apply_local_raw(&self, op: &Operator, slot: usize) -> Result<Vec<Complex64>> {
        if slot >= self.dims.len() {
            return contract(format!("slot {slot} out of range"));
        }
        if op.dims() != [self.dims[slot]] {
            return contract(format!("operator dimension does not match slot {slot}"));
        }
        let (high, d, low) = strides(&self.dims, slot);
        let m = op.matrix();
        let mut out = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for h in 0..high {
            for l in 0..low {
                for col in 0..d {
                    let a = self.amplitudes[(h * d + col) * low + l];
                    if a == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for row in 0..d {
                        let e = m[(row, col)];
                        if e != Complex64::new(0.0, 0.0) {
                            out[(h * d + row) * low + l] += e * a;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Applies a single-qudit unitary to subsystem `slot`.
    pub fn apply_local(&self, op: &Operator, slot: usize) -> Result<PureState> {
        let out = self.apply_local_raw(op, slot)?;
        PureState::normalized(&self.dims, out)
    }

    /// Euclidean distance between amplitude vectors (no phase fixing).
    pub fn distance(&self, other: &PureState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl Tensor for PureState {
    fn tensor_with_limit(&self, other: &Self, limit: usize) -> Result<Self> {
        let total = self
            .total_dim()
            .checked_mul(other.total_dim())
            .filter(|&t| t <= limit)
            .ok_or_else(|| {
                QssError::Resource(format!(
                    "tensor product of dimensions {} and {} exceeds limit {limit}",
                    self.total_dim(),
                    other.total_dim()
                ))
            })?;
        let mut amplitudes = Vec::with_capacity(total);
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Ok(PureState { amplitudes, dims })
    }
}

/// `states_equal_up_to_phase` in free-function form.
pub fn states_equal_up_to_phase(a: &PureState, b: &PureState, tol: f64) -> bool {
    a.equal_up_to_phase(b, tol)
}

fn checked_total(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return contract(format!("invalid subsystem dimensions {dims:?}"));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&t| t <= super::MAX_TOTAL_DIM)
        .ok_or_else(|| QssError::Resource(format!("register {dims:?} is too large")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::c;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn random_state(dims: &[usize], raw: &[(f64, f64)]) -> PureState {
        let amps = raw.iter().map(|&(re, im)| c(re, im)).collect();
        PureState::normalized(dims, amps).unwrap()
    }

    #[test]
    fn tensor_of_basis_states() {
        let zero = PureState::basis(&[2], 0).unwrap();
        let zz = zero.tensor(&zero).unwrap();
        assert_eq!(zz.dims(), &[2, 2]);
        assert_eq!(zz.amplitude(0), c(1.0, 0.0));
        assert!((zz.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_plus_with_one() {
        let plus = PureState::from_amplitudes(&[2], vec![c(FRAC_1_SQRT_2, 0.0); 2]).unwrap();
        let one = PureState::basis(&[2], 1).unwrap();
        let s = plus.tensor(&one).unwrap();
        let expected = [0.0, FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2];
        for (a, e) in s.amplitudes().iter().zip(expected) {
            assert!((a - c(e, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn tensor_respects_limit() {
        let s = PureState::basis(&[10, 10], 0).unwrap();
        assert!(matches!(s.tensor_with_limit(&s, 1000), Err(QssError::Resource(_))));
    }

    #[test]
    fn inner_products() {
        let zero = PureState::basis(&[3], 0).unwrap();
        let one = PureState::basis(&[3], 1).unwrap();
        assert_eq!(zero.inner(&one).unwrap(), c(0.0, 0.0));
        assert!((zero.inner(&zero).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
        let other = PureState::basis(&[2], 0).unwrap();
        assert!(matches!(zero.inner(&other), Err(QssError::Contract(_))));
    }

    #[test]
    fn inner_is_conjugate_linear_in_first_argument() {
        let a = PureState::from_amplitudes(&[2], vec![c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let b = PureState::basis(&[2], 0).unwrap();
        assert!((a.inner(&b).unwrap() - c(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn phase_equality() {
        let psi = random_state(&[3], &[(0.3, 0.1), (-0.2, 0.7), (0.5, -0.4)]);
        assert!(psi.equal_up_to_phase(&psi, 1e-9));
        let rotated = psi.with_phase(Complex64::from_polar(1.0, 1.234));
        assert!(psi.equal_up_to_phase(&rotated, 1e-9));
        let zero = PureState::basis(&[3], 0).unwrap();
        let one = PureState::basis(&[3], 1).unwrap();
        assert!(!zero.equal_up_to_phase(&one, 1e-9));
    }

    #[test]
    fn unnormalized_amplitudes_rejected() {
        assert!(PureState::from_amplitudes(&[2], vec![c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(PureState::normalized(&[2], vec![c(0.0, 0.0); 2]).is_err());
    }

    proptest! {
        #[test]
        fn tensor_is_associative(
            a in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2),
            b in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3),
            cc in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2),
        ) {
            prop_assume!(a.iter().any(|&(x, y)| x.abs() + y.abs() > 1e-3));
            prop_assume!(b.iter().any(|&(x, y)| x.abs() + y.abs() > 1e-3));
            prop_assume!(cc.iter().any(|&(x, y)| x.abs() + y.abs() > 1e-3));
            let (a, b, cc) = (random_state(&[2], &a), random_state(&[3], &b), random_state(&[2], &cc));
            let left = a.tensor(&b).unwrap().tensor(&cc).unwrap();
            let right = a.tensor(&b.tensor(&cc).unwrap()).unwrap();
            prop_assert_eq!(left.dims(), right.dims());
            for (x, y) in left.amplitudes().iter().zip(right.amplitudes()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
            prop_assert!((left.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }
}
