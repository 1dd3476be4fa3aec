//! Gaussian measurement ensembles, phaseless observations and the
//! sign-diagonal matrices `A_z = diag(sgn(Az)) A`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::matvec_transpose;
use crate::rng::{gaussian_matrix, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementScheme {
    /// `N(0, 1/m)` entries.
    PerRow,
    /// `N(0, 1)` entries.
    Unit,
}

impl MeasurementScheme {
    pub fn variance(self, m: usize) -> f64 {
        match self {
            MeasurementScheme::PerRow => 1.0 / m as f64,
            MeasurementScheme::Unit => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEnsemble {
    a: Array2<f64>,
    scheme: MeasurementScheme,
}

/// `sgn` with `sgn(0) = 0`.
#[inline]
pub fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl MeasurementEnsemble {
    pub fn sample(m: usize, n: usize, scheme: MeasurementScheme, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidDimensions(format!(
                "measurement matrix must be nonempty, got {m}×{n}"
            )));
        }
        let mut rng = rng_from_seed(seed);
        Ok(Self {
            a: gaussian_matrix(m, n, scheme.variance(m).sqrt(), &mut rng),
            scheme,
        })
    }

    pub fn from_matrix(a: Array2<f64>, scheme: MeasurementScheme) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::InvalidDimensions("measurement matrix must be nonempty".into()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDimensions("measurement matrix has non-finite entries".into()));
        }
        Ok(Self { a, scheme })
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn scheme(&self) -> MeasurementScheme {
        self.scheme
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.a.view()
    }

    /// `A y`.
    pub fn apply(&self, y: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len(self.n(), y.len(), "measured signal")?;
        Ok(self.a.dot(&y))
    }

    /// `Aᵀ u`.
    pub fn apply_transpose(&self, u: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len(self.m(), u.len(), "measurement-space vector")?;
        Ok(matvec_transpose(&self.a, &u))
    }

    /// `b = |A y|`.
    pub fn observe(&self, y: ArrayView1<f64>) -> Result<Observation> {
        Ok(Observation(self.apply(y)?.mapv(f64::abs)))
    }

    /// Lazy `A_z`: the sign vector `sgn(Az)` plus a borrow of `A`.
    pub fn sign_matrix(&self, z: ArrayView1<f64>) -> Result<SignedMeasurements<'_>> {
        let signs = self.apply(z)?.mapv(sgn);
        Ok(SignedMeasurements {
            ensemble: self,
            signs,
        })
    }
}

/// Nonnegative magnitudes `|A y₀|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(Array1<f64>);

impl Observation {
    pub fn new(b: Array1<f64>) -> Result<Self> {
        if b.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain("observations must be finite and nonnegative".into()));
        }
        Ok(Self(b))
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SignedMeasurements<'a> {
    ensemble: &'a MeasurementEnsemble,
    signs: Array1<f64>,
}

impl SignedMeasurements<'_> {
    pub fn signs(&self) -> &Array1<f64> {
        &self.signs
    }

    /// `A_z y`.
    pub fn apply(&self, y: ArrayView1<f64>) -> Result<Array1<f64>> {
        Ok(self.ensemble.apply(y)? * &self.signs)
    }

    /// `A_zᵀ u`.
    pub fn apply_transpose(&self, u: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len(self.signs.len(), u.len(), "measurement-space vector")?;
        self.ensemble.apply_transpose((&u * &self.signs).view())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = self.ensemble.a.clone();
        for (mut row, &s) in out.rows_mut().into_iter().zip(self.signs.iter()) {
            row *= s;
        }
        out
    }
}
