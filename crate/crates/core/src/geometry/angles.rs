//! Expected angle contraction of one random ReLU layer and its iterates.

use std::f64::consts::PI;

use crate::error::{Error, Result};

fn check_angle(theta: f64) -> Result<()> {
    if (0.0..=PI).contains(&theta) {
        Ok(())
    } else {
        Err(Error::Domain(format!("angle {theta} outside [0, π]")))
    }
}

/// `g(θ) = arccos((cos θ (π − θ) + sin θ) / π)`.
pub fn g_theta(theta: f64) -> Result<f64> {
    check_angle(theta)?;
    Ok(g_unchecked(theta))
}

fn g_unchecked(theta: f64) -> f64 {
    let arg = (theta.cos() * (PI - theta) + theta.sin()) / PI;
    arg.clamp(-1.0, 1.0).acos()
}

/// `θ̄_0 = θ₀`, `θ̄_i = g(θ̄_{i−1})` for `i = 1..=d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSequence {
    pub theta0: f64,
    pub values: Vec<f64>,
}

impl AngleSequence {
    pub fn depth(&self) -> usize {
        self.values.len() - 1
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// `∏_{i=0}^{d−1} (π − θ̄_i)/π`.
    pub fn pi_product(&self) -> f64 {
        self.values[..self.depth()]
            .iter()
            .map(|t| (PI - t) / PI)
            .product()
    }

    /// `Σ_{i=0}^{d−1} (sin θ̄_i/π) ∏_{j=i+1}^{d−1} (π − θ̄_j)/π`.
    pub fn sine_product_sum(&self) -> f64 {
        let d = self.depth();
        // Accumulate from the top so each tail product is reused.
        let mut tail = 1.0;
        let mut sum = 0.0;
        for i in (0..d).rev() {
            sum += self.values[i].sin() / PI * tail;
            tail *= (PI - self.values[i]) / PI;
        }
        sum
    }
}

pub fn iterate_angles(theta0: f64, d: usize) -> Result<AngleSequence> {
    check_angle(theta0)?;
    let mut values = Vec::with_capacity(d + 1);
    values.push(theta0);
    for _ in 0..d {
        let prev = *values.last().unwrap();
        values.push(g_unchecked(prev));
    }
    Ok(AngleSequence { theta0, values })
}

/// `ρ_d = 2 sin θ̆_d/π + ((π − 2θ̆_d)/π) Σ_{i=0}^{d−1} (sin θ̆_i/π) ∏_{j=i+1}^{d−1} (π − θ̆_j)/π`
/// with `θ̆_0 = π`. The spurious critical point of the expected landscape
/// sits at `−ρ_d x₀`.
pub fn rho_d(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::Domain(format!("ρ_d is defined for d ≥ 2, got {d}")));
    }
    Ok(large_angle_alpha(&iterate_angles(PI, d)?))
}

/// The radial coefficient `α` of `h_{x,x₀}` for a given angle sequence.
pub(crate) fn large_angle_alpha(seq: &AngleSequence) -> f64 {
    let td = seq.last();
    2.0 * td.sin() / PI + (PI - 2.0 * td) / PI * seq.sine_product_sum()
}
