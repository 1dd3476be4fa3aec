//! Swap matrices and the expectation operators `Q_{x,y}` and `Φ_{z,w}`.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{check_len, Error, Result};
use crate::linalg::{angle_between, norm, outer};

/// Below this rejection norm the pair is treated as collinear.
const COLLINEAR_TOL: f64 = 1e-14;

/// `M_{x̂↔ŷ}`: sends `x̂ ↦ ŷ`, `ŷ ↦ x̂` and annihilates `span(x, y)^⊥`.
///
/// Stored as `cos θ (uuᵀ − wwᵀ) + sin θ (uwᵀ + wuᵀ)` with `u = x̂` and `w`
/// the unit Gram–Schmidt complement of `ŷ` against `u`. For collinear
/// inputs `w` is absent and the matrix is `±uuᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapMatrix {
    pub x_hat: Array1<f64>,
    pub y_hat: Array1<f64>,
    pub theta: f64,
    complement: Option<Array1<f64>>,
}

impl SwapMatrix {
    pub fn new(x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<Self> {
        check_len(x.len(), y.len(), "swap matrix operands")?;
        let theta = angle_between(&x, &y)
            .ok_or_else(|| Error::Domain("swap matrix needs nonzero vectors".into()))?;
        let x_hat = &x / norm(&x);
        let y_hat = &y / norm(&y);
        let rejection = &y_hat - &(&x_hat * x_hat.dot(&y_hat));
        let r = norm(&rejection);
        let complement = (r > COLLINEAR_TOL).then(|| rejection / r);
        Ok(Self {
            x_hat,
            y_hat,
            theta,
            complement,
        })
    }

    pub fn dim(&self) -> usize {
        self.x_hat.len()
    }

    pub fn apply(&self, v: ArrayView1<f64>) -> Array1<f64> {
        let u = &self.x_hat;
        let pu = u.dot(&v);
        match &self.complement {
            None => u * (self.theta.cos().signum() * pu),
            Some(w) => {
                let pw = w.dot(&v);
                let (s, c) = self.theta.sin_cos();
                u * (c * pu + s * pw) + w * (s * pu - c * pw)
            }
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let u = &self.x_hat;
        match &self.complement {
            None => outer(u, u) * self.theta.cos().signum(),
            Some(w) => {
                let (s, c) = self.theta.sin_cos();
                (outer(u, u) - outer(w, w)) * c + (outer(u, w) + outer(w, u)) * s
            }
        }
    }
}

pub fn swap_matrix(x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<SwapMatrix> {
    SwapMatrix::new(x, y)
}

/// `Q_{x,y} = ((π − θ)/2π) I + (sin θ/2π) M_{x̂↔ŷ}`, the expectation of
/// `W_{+,x}ᵀ W_{+,y}` for `W` with i.i.d. `N(0, 1/n)` entries.
pub fn q_matrix(x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<Array2<f64>> {
    let m = SwapMatrix::new(x, y)?;
    let k = m.dim();
    let theta = m.theta;
    Ok(Array2::eye(k) * ((PI - theta) / (2.0 * PI)) + m.to_dense() * (theta.sin() / (2.0 * PI)))
}

/// `Φ_{z,w} = ((π − 2θ)/π) I + (2 sin θ/π) M_{ẑ↔ŵ}`, the expectation of
/// `A_zᵀ A_w` for `A` with i.i.d. `N(0, 1/m)` entries. Held as
/// scalar·identity plus the rank-2 swap so it can act on long vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiOperator {
    pub identity_coeff: f64,
    pub swap_coeff: f64,
    pub swap: SwapMatrix,
}

impl PhiOperator {
    pub fn new(z: ArrayView1<f64>, w: ArrayView1<f64>) -> Result<Self> {
        let swap = SwapMatrix::new(z, w)?;
        let theta = swap.theta;
        Ok(Self {
            identity_coeff: (PI - 2.0 * theta) / PI,
            swap_coeff: 2.0 * theta.sin() / PI,
            swap,
        })
    }

    pub fn dim(&self) -> usize {
        self.swap.dim()
    }

    pub fn apply(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len(self.dim(), v.len(), "Φ operand")?;
        Ok(&v * self.identity_coeff + self.swap.apply(v) * self.swap_coeff)
    }

    /// `Φ B` for a tall matrix `B` (one column at a time).
    pub fn apply_to_columns(&self, b: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_len(self.dim(), b.nrows(), "Φ operand rows")?;
        let mut out = Array2::zeros(b.raw_dim());
        for (j, col) in b.columns().into_iter().enumerate() {
            out.column_mut(j).assign(&self.apply(col)?);
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        Array2::eye(self.dim()) * self.identity_coeff + self.swap.to_dense() * self.swap_coeff
    }
}

pub fn phi_matrix(z: ArrayView1<f64>, w: ArrayView1<f64>) -> Result<PhiOperator> {
    PhiOperator::new(z, w)
}
