//! Generalized Pauli operators and the two mutually unbiased bases used by
//! the protocol.
//!
//! `X|j> = |j+1>`, `Z|j> = w^j |j>` and `Y = XZ`, with `w = exp(2 pi i / d)`.
//! The X eigenbasis is the Fourier basis. The Y eigenbasis has quadratic
//! phases whose exponent depends on the parity of `d`; for even `d` the
//! half-integer exponents are evaluated on the principal branch
//! `sqrt(w) = exp(pi i / d)`, which makes the Y eigenvalues `w^k sqrt(w)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::math::{Dim, Operator, PureState};

/// A receiver's measurement direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    X,
    Y,
}

impl Direction {
    pub const ALL: [Direction; 2] = [Direction::X, Direction::Y];

    pub fn label(self) -> BasisLabel {
        match self {
            Direction::X => BasisLabel::X,
            Direction::Y => BasisLabel::Y,
        }
    }

    pub fn uniform(sampler: &mut crate::math::Sampler) -> Direction {
        if sampler.coin() {
            Direction::Y
        } else {
            Direction::X
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::X => f.write_str("X"),
            Direction::Y => f.write_str("Y"),
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "X" => Ok(Direction::X),
            "Y" => Ok(Direction::Y),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

/// Which basis a [`MeasBasis`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisLabel {
    X,
    Y,
    /// `{U |k_x>}`, Alice's basis when both receivers measure X.
    #[serde(rename = "UXUdag")]
    UXUdag,
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisLabel::X => f.write_str("X"),
            BasisLabel::Y => f.write_str("Y"),
            BasisLabel::UXUdag => f.write_str("UXUdag"),
        }
    }
}

/// An ordered orthonormal basis of one qudit. Outcome `k` is the projection
/// onto `vectors[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasBasis {
    vectors: Vec<PureState>,
    label: BasisLabel,
    dim: Dim,
}

impl MeasBasis {
    pub fn vectors(&self) -> &[PureState] {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> &PureState {
        &self.vectors[k]
    }

    pub fn label(&self) -> BasisLabel {
        self.label
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// The entrywise complex conjugate basis. If one half of
    /// `sum_j |jj> / sqrt(d)` is found in `vectors[k]`, the other half is
    /// left in `conjugate().vectors[k]`.
    pub fn conjugate(&self) -> MeasBasis {
        MeasBasis {
            vectors: self.vectors.iter().map(PureState::conj).collect(),
            label: self.label,
            dim: self.dim,
        }
    }

    /// Largest `| |<v_k|v_l>| - delta_kl |`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (k, a) in self.vectors.iter().enumerate() {
            for (l, b) in self.vectors.iter().enumerate() {
                let ov = a.inner(b).expect("same dimension").norm();
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((ov - target).abs());
            }
        }
        worst
    }

    /// Matrix whose row `k` is `<v_k|`, mapping amplitudes in the
    /// computational basis to amplitudes in this basis.
    pub fn analysis_operator(&self) -> Operator {
        let d = self.dim.get();
        let m = DMatrix::from_fn(d, d, |k, j| self.vectors[k].amplitude(j).conj());
        Operator::from_matrix(&[d], m).expect("square")
    }
}

/// The shift `X|j> = |j+1 mod d>`.
pub fn pauli_x(d: Dim) -> Operator {
    let n = d.get();
    let m = DMatrix::from_fn(n, n, |row, col| {
        if row == (col + 1) % n {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Operator::from_matrix(&[n], m).expect("square")
}

/// The clock `Z|j> = w^j |j>`.
pub fn pauli_z(d: Dim) -> Operator {
    let entries: Vec<Complex64> = (0..d.get() as i64).map(|j| d.omega_pow(j)).collect();
    Operator::diagonal(&[d.get()], &entries).expect("square")
}

/// `Y = X Z`, so `Y|j> = w^j |j+1>`.
pub fn pauli_y(d: Dim) -> Operator {
    pauli_x(d).compose(&pauli_z(d)).expect("same register")
}

/// Eigenvalue of `X` on `|k_x>`.
pub fn x_eigenvalue(d: Dim, k: usize) -> Complex64 {
    d.omega_pow(k as i64)
}

/// Eigenvalue of `Y` on `|k_y>`: `w^k` for odd `d`, `w^k sqrt(w)` for even.
pub fn y_eigenvalue(d: Dim, k: usize) -> Complex64 {
    if d.is_even() {
        d.half_omega_pow(2 * k as i64 + 1)
    } else {
        d.omega_pow(k as i64)
    }
}

/// Diagonal phase `U` carrying the XXX GHZ-like state to the XYY one:
/// entry `j` is `w^(j(j-1))` for odd `d` and `w^(j(j-2))` for even `d`.
pub fn unitary_u(d: Dim) -> Operator {
    let shift = if d.is_even() { 2 } else { 1 };
    let entries: Vec<Complex64> = (0..d.get() as i64).map(|j| d.omega_pow(j * (j - shift))).collect();
    Operator::diagonal(&[d.get()], &entries).expect("square")
}

fn build_x(d: Dim) -> MeasBasis {
    let n = d.get();
    let norm = 1.0 / (n as f64).sqrt();
    let vectors = (0..n as i64)
        .map(|k| {
            let amps = (0..n as i64).map(|j| d.omega_pow(-k * j) * norm).collect();
            PureState::from_amplitudes(&[n], amps).expect("fourier vector is normalized")
        })
        .collect();
    MeasBasis {
        vectors,
        label: BasisLabel::X,
        dim: d,
    }
}

fn build_y(d: Dim) -> MeasBasis {
    let n = d.get();
    let norm = 1.0 / (n as f64).sqrt();
    let linear = if d.is_even() { 2 } else { 1 };
    let vectors = (0..n as i64)
        .map(|k| {
            let amps = (0..n as i64)
                .map(|j| d.half_omega_pow(j * j - 2 * k * j - linear * j) * norm)
                .collect();
            PureState::from_amplitudes(&[n], amps).expect("chirp vector is normalized")
        })
        .collect();
    MeasBasis {
        vectors,
        label: BasisLabel::Y,
        dim: d,
    }
}

fn build_uxu(d: Dim) -> MeasBasis {
    let u = unitary_u(d);
    let vectors = build_x(d)
        .vectors
        .iter()
        .map(|v| v.apply_local(&u, 0).expect("single qudit"))
        .collect();
    MeasBasis {
        vectors,
        label: BasisLabel::UXUdag,
        dim: d,
    }
}

type Cache = Mutex<HashMap<(Dim, BasisLabel), Arc<MeasBasis>>>;

fn cached(d: Dim, label: BasisLabel) -> Arc<MeasBasis> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(b) = cache.lock().expect("basis cache poisoned").get(&(d, label)) {
        return Arc::clone(b);
    }
    let basis = Arc::new(match label {
        BasisLabel::X => build_x(d),
        BasisLabel::Y => build_y(d),
        BasisLabel::UXUdag => build_uxu(d),
    });
    cache
        .lock()
        .expect("basis cache poisoned")
        .entry((d, label))
        .or_insert(basis)
        .clone()
}

/// `|k_x> = d^(-1/2) sum_j w^(-kj) |j>`.
pub fn x_basis(d: Dim) -> Arc<MeasBasis> {
    cached(d, BasisLabel::X)
}

/// `|k_y> = d^(-1/2) sum_j w^((j^2 - 2kj - j)/2) |j>` for odd `d`, with
/// `-2j` in place of `-j` for even `d`.
pub fn y_basis(d: Dim) -> Arc<MeasBasis> {
    cached(d, BasisLabel::Y)
}

/// `{U |k_x>}`.
pub fn uxu_basis(d: Dim) -> Arc<MeasBasis> {
    cached(d, BasisLabel::UXUdag)
}

pub fn basis(d: Dim, label: BasisLabel) -> Arc<MeasBasis> {
    cached(d, label)
}

pub fn basis_for(d: Dim, dir: Direction) -> Arc<MeasBasis> {
    cached(d, dir.label())
}

/// Max over `k, k'` of `| |<k_x|k'_y>| - 1/sqrt(d) |`.
pub fn check_mub(d: Dim) -> f64 {
    let target = 1.0 / (d.get() as f64).sqrt();
    let (xb, yb) = (x_basis(d), y_basis(d));
    let mut worst = 0.0f64;
    for a in xb.vectors() {
        for b in yb.vectors() {
            worst = worst.max((a.inner(b).expect("same dimension").norm() - target).abs());
        }
    }
    worst
}

/// Largest `||A v_k - lambda_k v_k||` for the X and Y eigenbases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenResiduals {
    pub x: f64,
    pub y: f64,
}

pub fn eigen_residuals(d: Dim) -> Result<EigenResiduals> {
    let residual = |op: &Operator, basis: &MeasBasis, eig: fn(Dim, usize) -> Complex64| -> Result<f64> {
        let mut worst = 0.0f64;
        for (k, v) in basis.vectors().iter().enumerate() {
            let image = v.apply_local_raw(op, 0)?;
            let lambda = eig(d, k);
            let r = image
                .iter()
                .zip(v.amplitudes())
                .map(|(a, b)| (a - lambda * b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        Ok(worst)
    };
    Ok(EigenResiduals {
        x: residual(&pauli_x(d), &x_basis(d), x_eigenvalue)?,
        y: residual(&pauli_y(d), &y_basis(d), y_eigenvalue)?,
    })
}
