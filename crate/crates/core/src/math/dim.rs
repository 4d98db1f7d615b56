use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Local dimension of one qudit, always at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dim(usize);

impl Dim {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return contract(format!("qudit dimension must be at least 2, got {d}"));
        }
        Ok(Dim(d))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    pub fn is_even(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// The primitive root of unity `exp(2 pi i / d)`.
    pub fn omega(self) -> Complex64 {
        self.omega_pow(1)
    }

    /// `omega^e`, with `e` reduced mod `d` before exponentiating.
    pub fn omega_pow(self, e: i64) -> Complex64 {
        let d = self.0 as i64;
        let r = e.rem_euclid(d) as f64;
        Complex64::from_polar(1.0, 2.0 * PI * r / self.0 as f64)
    }

    /// `exp(pi i e / d)`, the principal branch of `omega^(e/2)`.
    pub fn half_omega_pow(self, e: i64) -> Complex64 {
        let two_d = 2 * self.0 as i64;
        let r = e.rem_euclid(two_d) as f64;
        Complex64::from_polar(1.0, PI * r / self.0 as f64)
    }

    pub fn residue(self, value: i64) -> ZMod {
        ZMod::new(value, self)
    }

    pub fn residues(self) -> impl Iterator<Item = ZMod> {
        (0..self.0).map(move |v| ZMod { value: v, dim: self })
    }
}

impl TryFrom<usize> for Dim {
    type Error = crate::QssError;

    fn try_from(d: usize) -> Result<Self> {
        Dim::new(d)
    }
}

impl From<Dim> for usize {
    fn from(d: Dim) -> usize {
        d.0
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A residue in `Z_d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ZMod {
    value: usize,
    dim: Dim,
}

impl ZMod {
    pub fn new(value: i64, dim: Dim) -> Self {
        let value = value.rem_euclid(dim.0 as i64) as usize;
        ZMod { value, dim }
    }

    pub fn zero(dim: Dim) -> Self {
        ZMod { value: 0, dim }
    }

    #[inline]
    pub fn value(self) -> usize {
        self.value
    }

    #[inline]
    pub fn dim(self) -> Dim {
        self.dim
    }

    fn check(self, other: ZMod) {
        assert_eq!(self.dim, other.dim, "mixed moduli in residue arithmetic");
    }
}

impl Add for ZMod {
    type Output = ZMod;

    fn add(self, rhs: ZMod) -> ZMod {
        self.check(rhs);
        ZMod {
            value: (self.value + rhs.value) % self.dim.0,
            dim: self.dim,
        }
    }
}

impl Sub for ZMod {
    type Output = ZMod;

    fn sub(self, rhs: ZMod) -> ZMod {
        self.check(rhs);
        ZMod {
            value: (self.value + self.dim.0 - rhs.value) % self.dim.0,
            dim: self.dim,
        }
    }
}

impl Mul for ZMod {
    type Output = ZMod;

    fn mul(self, rhs: ZMod) -> ZMod {
        self.check(rhs);
        ZMod {
            value: (self.value * rhs.value) % self.dim.0,
            dim: self.dim,
        }
    }
}

impl Neg for ZMod {
    type Output = ZMod;

    fn neg(self) -> ZMod {
        ZMod {
            value: (self.dim.0 - self.value) % self.dim.0,
            dim: self.dim,
        }
    }
}

impl fmt::Display for ZMod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.value.fmt(f)
    }
}
