//! Sparse comparator: amplitude flow on `½‖|Ay| − b‖²` directly over the
//! signal, with hard thresholding to the `s` largest entries after every
//! step.
//!
//! This is a deliberately small stand-in for a sparse phase-retrieval method
//! so that sweeps have something to compare against. It is not SPARTA, TWF
//! or CoPRAM and makes no claim to their sample complexity.

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::index::sample as sample_indices;

use crate::error::{check_len, Error, Result};
use crate::linalg::{matvec_transpose, norm};
use crate::measurement::{sgn, MeasurementEnsemble, MeasurementScheme, Observation};
use crate::rng::{gaussian_vector, rng_from_seed, split_seed};
use crate::solver::{Optimizer, SolverConfig, StepScaling, TrialResult};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseProblem {
    ensemble: MeasurementEnsemble,
    observation: Observation,
    sparsity: usize,
    signal: Option<Array1<f64>>,
}

impl SparseProblem {
    pub fn new(ensemble: MeasurementEnsemble, observation: Observation, sparsity: usize) -> Result<Self> {
        check_len(ensemble.m(), observation.len(), "observation length")?;
        if sparsity == 0 || sparsity > ensemble.n() {
            return Err(Error::InvalidDimensions(format!(
                "sparsity {sparsity} outside 1..={}",
                ensemble.n()
            )));
        }
        Ok(Self {
            ensemble,
            observation,
            sparsity,
            signal: None,
        })
    }

    pub fn from_signal(ensemble: MeasurementEnsemble, y0: Array1<f64>, sparsity: usize) -> Result<Self> {
        let b = ensemble.observe(y0.view())?;
        let mut p = Self::new(ensemble, b, sparsity)?;
        p.signal = Some(y0);
        Ok(p)
    }

    /// `s`-sparse signal with a uniformly random support and `N(0, 1)`
    /// values there, plus a fresh Gaussian ensemble.
    pub fn sample(m: usize, n: usize, sparsity: usize, scheme: MeasurementScheme, seed: u64) -> Result<Self> {
        if sparsity == 0 || sparsity > n {
            return Err(Error::InvalidDimensions(format!("sparsity {sparsity} outside 1..={n}")));
        }
        let ensemble = MeasurementEnsemble::sample(m, n, scheme, split_seed(seed, &[0]))?;
        let mut rng = rng_from_seed(split_seed(seed, &[1]));
        let values = gaussian_vector(sparsity, 1.0, &mut rng);
        let mut y0 = Array1::zeros(n);
        for (i, idx) in sample_indices(&mut rng, n, sparsity).into_iter().enumerate() {
            y0[idx] = values[i];
        }
        Self::from_signal(ensemble, y0, sparsity)
    }

    pub fn ensemble(&self) -> &MeasurementEnsemble {
        &self.ensemble
    }

    pub fn observation(&self) -> &Observation {
        &self.observation
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn signal(&self) -> Option<&Array1<f64>> {
        self.signal.as_ref()
    }

    /// `m·σ_A²`, the expected squared gain of `A`.
    pub fn curvature_scale(&self) -> f64 {
        let m = self.ensemble.m();
        m as f64 * self.ensemble.scheme().variance(m)
    }

    pub fn objective(&self, y: ArrayView1<f64>) -> Result<f64> {
        let r = self.ensemble.apply(y)?.mapv(f64::abs) - self.observation.values();
        Ok(0.5 * r.dot(&r))
    }

    /// Objective and `A_yᵀ(|Ay| − b)`.
    pub fn evaluate(&self, y: ArrayView1<f64>) -> Result<(f64, Array1<f64>)> {
        let ay = self.ensemble.apply(y)?;
        let r = ay.mapv(f64::abs) - self.observation.values();
        let weighted = &r * &ay.mapv(sgn);
        Ok((0.5 * r.dot(&r), self.ensemble.apply_transpose(weighted.view())?))
    }

    /// `min(‖y − y₀‖, ‖y + y₀‖)/‖y₀‖`; the global sign is unrecoverable.
    pub fn relative_error(&self, y: ArrayView1<f64>) -> Option<f64> {
        self.signal.as_ref().map(|y0| {
            let minus = norm(&(&y - y0));
            let plus = norm(&(&y + y0));
            minus.min(plus) / norm(y0)
        })
    }

    /// Restricted spectral start: keep the `s` coordinates with the largest
    /// `Σ_j b_j² a_{ji}²`, take the top eigenvector of the weighted
    /// covariance on them, and scale it to the norm implied by `‖b‖`.
    pub fn spectral_start(&self, seed: u64) -> Array1<f64> {
        let a = self.ensemble.matrix();
        let b2 = self.observation.values().mapv(|v| v * v);
        let m = a.nrows() as f64;
        let diag = matvec_transpose(&a.mapv(|v| v * v), &b2) / m;
        let support = top_indices(diag.view(), self.sparsity);

        let sub = Array2::from_shape_fn((a.nrows(), support.len()), |(j, c)| a[[j, support[c]]]);
        let weighted = &sub * &b2.view().insert_axis(ndarray::Axis(1));
        let cov = weighted.t().dot(&sub) / m;
        let mut v = gaussian_vector(support.len(), 1.0, &mut rng_from_seed(seed));
        for _ in 0..200 {
            let next = cov.dot(&v);
            let nn = norm(&next);
            if nn == 0.0 {
                break;
            }
            v = next / nn;
        }
        let scale = (b2.sum() / (m * self.ensemble.scheme().variance(a.nrows()))).sqrt();
        let mut y = Array1::zeros(a.ncols());
        let nv = norm(&v);
        for (c, &i) in support.iter().enumerate() {
            y[i] = if nv > 0.0 { scale * v[c] / nv } else { 0.0 };
        }
        y
    }
}

fn top_indices(v: ArrayView1<f64>, s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    // Ties broken by index so thresholding is deterministic.
    idx.sort_by(|&p, &q| v[q].abs().total_cmp(&v[p].abs()).then(p.cmp(&q)));
    idx.truncate(s);
    idx.sort_unstable();
    idx
}

/// Zeroes everything outside the `s` largest magnitudes; returns the kept
/// support in increasing order.
pub fn hard_threshold(y: &mut Array1<f64>, s: usize) -> Vec<usize> {
    let keep = top_indices(y.view(), s);
    let mut mask = vec![false; y.len()];
    for &i in &keep {
        mask[i] = true;
    }
    for (i, v) in y.iter_mut().enumerate() {
        if !mask[i] {
            *v = 0.0;
        }
    }
    keep
}

/// Runs from the restricted spectral start drawn with `seed`.
pub fn thresholded_amplitude_flow(p: &SparseProblem, cfg: &SolverConfig, seed: u64) -> Result<TrialResult> {
    thresholded_amplitude_flow_from(p, cfg, p.spectral_start(seed))
}

/// Gradient step then hard threshold, repeated. Stops when `f ≤ obj_tol` or
/// the gradient restricted to the current support is below
/// `grad_tol · max(‖y‖, 1)` (both scaled as in [`SolverConfig`]). Negation
/// checks are meaningless here since `f(−y) = f(y)`.
pub fn thresholded_amplitude_flow_from(p: &SparseProblem, cfg: &SolverConfig, y_init: Array1<f64>) -> Result<TrialResult> {
    cfg.validate()?;
    if cfg.optimizer != Optimizer::PlainGradient {
        return Err(Error::InvalidConfig(
            "the sparse baseline only supports plain gradient steps".into(),
        ));
    }
    check_len(p.ensemble.n(), y_init.len(), "initial iterate")?;
    let scale = match cfg.step_scaling {
        StepScaling::Fixed => 1.0,
        StepScaling::Curvature => p.curvature_scale(),
    };
    let step = cfg.step_size / scale;
    let mut y = y_init;
    let mut support = hard_threshold(&mut y, p.sparsity);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let (mut value, mut grad) = p.evaluate(y.view())?;

    for it in 0..=cfg.max_iters {
        if !value.is_finite() || grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                iteration: it,
                last_finite: trace.last().copied().unwrap_or(f64::NAN),
                trace,
            });
        }
        trace.push(value);
        let on_support = support.iter().map(|&i| grad[i] * grad[i]).sum::<f64>().sqrt();
        if value / scale <= cfg.obj_tol || on_support / scale <= cfg.grad_tol * norm(&y).max(1.0) {
            converged = true;
            break;
        }
        if it == cfg.max_iters {
            break;
        }
        y.scaled_add(-step, &grad);
        support = hard_threshold(&mut y, p.sparsity);
        iterations = it + 1;
        (value, grad) = p.evaluate(y.view())?;
    }

    Ok(TrialResult {
        relative_error: p.relative_error(y.view()),
        x_final: y.to_vec(),
        objective_final: value,
        iterations_used: iterations,
        negation_events: Vec::new(),
        objective_trace: trace,
        converged,
    })
}
