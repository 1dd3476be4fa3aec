//! Sampled estimates of how far random weights and measurements are from
//! their expectations, and sign-pattern counting for measurement matrices
//! restricted to low-dimensional subspaces.
//!
//! Everything here reports sampled maxima over random inputs. The conditions
//! being probed quantify over all inputs, so these are lower bounds on the
//! true deviation.

use std::collections::HashSet;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{GeneratorNetwork, VarianceScheme};
use crate::geometry::{q_matrix, PhiOperator};
use crate::linalg::{norm, spectral_norm};
use crate::measurement::{sgn, MeasurementEnsemble};
use crate::rng::{gaussian_vector, rng_from_seed, split_seed, unit_sphere};

/// Norms below this are treated as zero when normalizing RRCP deviations.
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DeviationDims {
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub max_deviation: f64,
    pub mean_deviation: f64,
    pub samples: usize,
    pub dims: DeviationDims,
    pub seed: u64,
    /// Set when the input was degenerate (e.g. an all-zero weight matrix),
    /// so the numbers say nothing about concentration.
    #[serde(default)]
    pub flagged: bool,
}

impl DeviationReport {
    fn from_values(values: &[f64], dims: DeviationDims, seed: u64, flagged: bool) -> Self {
        let max = values.iter().copied().fold(0.0, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Self {
            max_deviation: max,
            // Summation error must not break mean ≤ max.
            mean_deviation: mean.min(max),
            samples: values.len(),
            dims,
            seed,
            flagged,
        }
    }

    pub fn summary(&self) -> String {
        format!(
            "max {:.6e}, mean {:.6e} over {} samples (seed {}){}",
            self.max_deviation,
            self.mean_deviation,
            self.samples,
            self.seed,
            if self.flagged { " [degenerate input]" } else { "" }
        )
    }
}

/// `W_{+,x}ᵀ W_{+,y} = Σ_i 1[⟨w_i,x⟩>0] 1[⟨w_i,y⟩>0] w_i w_iᵀ`, accumulated
/// row by row so nothing of size `n × k` is copied.
pub fn active_gram(w: ArrayView2<f64>, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Array2<f64> {
    let k = w.ncols();
    let mut out = Array2::zeros((k, k));
    for row in w.rows() {
        if row.dot(&x) > 0.0 && row.dot(&y) > 0.0 {
            for a in 0..k {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                for b in 0..k {
                    out[[a, b]] += ra * row[b];
                }
            }
        }
    }
    out
}

/// `‖W_{+,x}ᵀ W_{+,y} − Q_{x,y}‖` for `W` normalized to `N(0, 1/n)` entries.
pub fn wdc_pair_deviation(w: ArrayView2<f64>, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64> {
    if x.len() != w.ncols() || y.len() != w.ncols() {
        return Err(Error::DimensionMismatch {
            expected: w.ncols(),
            got: if x.len() != w.ncols() { x.len() } else { y.len() },
            context: "WDC pair",
        });
    }
    let q = q_matrix(x, y)?;
    Ok(spectral_norm(&(active_gram(w, x, y) - q)))
}

/// Pair `i` of a WDC sweep: cycles through random, equal, antipodal and
/// orthogonal pairs so extreme angles are always covered.
fn wdc_pair(k: usize, seed: u64, i: usize) -> (Array1<f64>, Array1<f64>) {
    let mut rng = rng_from_seed(split_seed(seed, &[i as u64]));
    let x = unit_sphere(k, &mut rng);
    let y = match i % 4 {
        1 => x.clone(),
        2 => -&x,
        3 if k >= 2 => {
            let r = unit_sphere(k, &mut rng);
            let rej = &r - &(&x * x.dot(&r));
            let n = norm(&rej);
            if n > 0.0 {
                rej / n
            } else {
                r
            }
        }
        _ => unit_sphere(k, &mut rng),
    };
    (x, y)
}

/// Sampled WDC deviation of one layer. `W` is `n × k` and is compared
/// against `Q_{x,y}` as is, i.e. it is assumed to have `N(0, 1/n)` entries;
/// see [`layer_wdc_deviations`] for generators with other normalizations.
pub fn wdc_deviation(w: ArrayView2<f64>, pair_samples: usize, seed: u64) -> Result<DeviationReport> {
    let (n, k) = w.dim();
    if n == 0 || k == 0 {
        return Err(Error::InvalidDimensions(format!("weight matrix is {n}×{k}")));
    }
    if pair_samples == 0 {
        return Err(Error::InsufficientSamples("pair_samples must be at least 1".into()));
    }
    let values = (0..pair_samples)
        .into_par_iter()
        .map(|i| {
            let (x, y) = wdc_pair(k, seed, i);
            wdc_pair_deviation(w, x.view(), y.view())
        })
        .collect::<Result<Vec<_>>>()?;
    let flagged = w.iter().all(|&v| v == 0.0);
    let dims = DeviationDims {
        k,
        n: Some(n),
        ..Default::default()
    };
    Ok(DeviationReport::from_values(&values, dims, seed, flagged))
}

/// One report per layer, each layer rescaled to `N(0, 1/n_i)` entries.
pub fn layer_wdc_deviations(g: &GeneratorNetwork, pair_samples: usize, seed: u64) -> Result<Vec<DeviationReport>> {
    g.weights()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let scale = match g.scheme() {
                VarianceScheme::PerLayer => 1.0,
                VarianceScheme::Unit => 1.0 / (w.nrows() as f64).sqrt(),
            };
            let layer_seed = split_seed(seed, &[i as u64]);
            if scale == 1.0 {
                wdc_deviation(w.view(), pair_samples, layer_seed)
            } else {
                wdc_deviation((w * scale).view(), pair_samples, layer_seed)
            }
        })
        .collect()
}

/// Largest per-layer WDC deviation: the `ε` the generator satisfies, as far
/// as sampling can tell.
pub fn generator_wdc_epsilon(g: &GeneratorNetwork, pair_samples: usize, seed: u64) -> Result<f64> {
    Ok(layer_wdc_deviations(g, pair_samples, seed)?
        .iter()
        .map(|r| r.max_deviation)
        .fold(0.0, f64::max))
}

/// Latent codes `(x, y, x₁, x₂, x₃, x₄)` for one RRCP sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RrcpTuple {
    pub x: Array1<f64>,
    pub y: Array1<f64>,
    pub x1: Array1<f64>,
    pub x2: Array1<f64>,
    pub x3: Array1<f64>,
    pub x4: Array1<f64>,
}

impl RrcpTuple {
    /// Swaps `(x, y)` and `(x₁, x₂) ↔ (x₃, x₄)`, which transposes the
    /// bilinear form being measured.
    pub fn transposed(&self) -> Self {
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
            x1: self.x3.clone(),
            x2: self.x4.clone(),
            x3: self.x1.clone(),
            x4: self.x2.clone(),
        }
    }
}

fn rrcp_tuple(k: usize, seed: u64, i: usize) -> RrcpTuple {
    let mut rng = rng_from_seed(split_seed(seed, &[i as u64]));
    let mut draw = || gaussian_vector(k, 1.0, &mut rng);
    let (x, y0, x1, x2, x3, x4) = (draw(), draw(), draw(), draw(), draw(), draw());
    // Every fourth tuple uses y = x, every fourth (offset) y = −x.
    let y = match i % 4 {
        1 => x.clone(),
        3 => -&x,
        _ => y0,
    };
    RrcpTuple { x, y, x1, x2, x3, x4 }
}

/// `|⟨(A_{G(x)}ᵀ A_{G(y)} − Φ_{G(x),G(y)}) u, w⟩| / (‖u‖‖w‖)` with
/// `u = G(x₁) − G(x₂)` and `w = G(x₃) − G(x₄)`, where `A` is rescaled to
/// `N(0, 1/m)` entries. `None` when the tuple is degenerate: `u` or `w`
/// is (numerically) zero, or `G(x)` or `G(y)` vanishes.
pub fn rrcp_tuple_deviation(e: &MeasurementEnsemble, g: &GeneratorNetwork, t: &RrcpTuple) -> Result<Option<f64>> {
    let gx = g.forward(t.x.view())?;
    let gy = g.forward(t.y.view())?;
    let u = g.forward(t.x1.view())? - g.forward(t.x2.view())?;
    let w = g.forward(t.x3.view())? - g.forward(t.x4.view())?;
    let (nu, nw) = (norm(&u), norm(&w));
    if nu < DEGENERATE_NORM || nw < DEGENERATE_NORM || norm(&gx) == 0.0 || norm(&gy) == 0.0 {
        return Ok(None);
    }
    let m = e.m();
    let scale = 1.0 / (m as f64 * e.scheme().variance(m));
    let sx = e.apply(gx.view())?.mapv(sgn);
    let sy = e.apply(gy.view())?.mapv(sgn);
    // ⟨A_xᵀ A_y u, w⟩ = ⟨s_y ⊙ A u, s_x ⊙ A w⟩.
    let au = e.apply(u.view())? * &sy;
    let aw = e.apply(w.view())? * &sx;
    let empirical = scale * au.dot(&aw);
    let expected = PhiOperator::new(gx.view(), gy.view())?.apply(u.view())?.dot(&w);
    Ok(Some((empirical - expected).abs() / (nu * nw)))
}

/// Sampled RRCP deviation over random latent tuples. Degenerate tuples are
/// skipped; `samples` in the report counts the ones actually used.
pub fn rrcp_deviation(
    e: &MeasurementEnsemble,
    g: &GeneratorNetwork,
    tuple_samples: usize,
    seed: u64,
) -> Result<DeviationReport> {
    if e.n() != g.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: g.output_dim(),
            got: e.n(),
            context: "measurement width vs generator output",
        });
    }
    let k = g.latent_dim();
    let values: Vec<f64> = (0..tuple_samples)
        .into_par_iter()
        .map(|i| rrcp_tuple_deviation(e, g, &rrcp_tuple(k, seed, i)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    if values.is_empty() {
        return Err(Error::InsufficientSamples(format!(
            "all {tuple_samples} sampled tuples were degenerate"
        )));
    }
    let dims = DeviationDims {
        k,
        layers: Some(g.dims().to_vec()),
        m: Some(e.m()),
        ..Default::default()
    };
    Ok(DeviationReport::from_values(&values, dims, seed, false))
}

/// `10 m^{2ℓ}`: the bound on the number of distinct matrices
/// `diag(sgn(Av))A` as `v` ranges over an `ℓ`-dimensional subspace.
pub fn sign_pattern_bound(m: usize, l: usize) -> f64 {
    10.0 * (m as f64).powi(2 * l as i32)
}

/// `2 Σ_{i<ℓ} C(m−1, i)`: the number of open cells cut by `m` generic
/// hyperplanes through the origin of `ℝ^ℓ`, i.e. the number of full-sign
/// patterns `sgn(Bc)` for generic `B ∈ ℝ^{m×ℓ}`.
pub fn hyperplane_cell_count(m: usize, l: usize) -> u128 {
    if m == 0 {
        return 1;
    }
    let mut binom: u128 = 1;
    let mut sum: u128 = 0;
    for i in 0..l.min(m) {
        sum += binom;
        binom = binom * (m - 1 - i) as u128 / (i + 1) as u128;
    }
    2 * sum
}

/// Counts distinct sign vectors `sgn(A V c)` over random coefficient vectors
/// `c` (and, for `ℓ = 2`, `sweep_samples` equally spaced angles as well).
/// `V` is `n × ℓ` with the subspace basis in its columns; `ℓ ≤ 3`.
pub fn count_sign_patterns(e: &MeasurementEnsemble, v: ArrayView2<f64>, sweep_samples: usize, seed: u64) -> Result<usize> {
    let l = v.ncols();
    if l == 0 || l > 3 {
        return Err(Error::Unsupported(format!("subspace dimension {l}; only 1 to 3 are supported")));
    }
    if v.nrows() != e.n() {
        return Err(Error::DimensionMismatch {
            expected: e.n(),
            got: v.nrows(),
            context: "subspace basis rows",
        });
    }
    let b = e.matrix().dot(&v);
    let pattern = |c: &[f64]| -> Vec<i8> {
        b.rows()
            .into_iter()
            .map(|row| {
                let s: f64 = row.iter().zip(c).map(|(r, ci)| r * ci).sum();
                sgn(s) as i8
            })
            .collect()
    };
    let mut seen = HashSet::new();
    let mut rng = rng_from_seed(seed);
    for _ in 0..sweep_samples {
        let c: Vec<f64> = (0..l).map(|_| StandardNormal.sample(&mut rng)).collect();
        seen.insert(pattern(&c));
    }
    if l == 2 {
        // Random phase so grid angles do not line up with anything special.
        let phase: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        for j in 0..sweep_samples {
            let t = phase + std::f64::consts::TAU * j as f64 / sweep_samples as f64;
            seen.insert(pattern(&[t.cos(), t.sin()]));
        }
    }
    Ok(seen.len())
}
