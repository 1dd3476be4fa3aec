//! Large-measurement landscape of the amplitude objective over a 2-D
//! latent grid.
//!
//! With `A` having i.i.d. `N(0, 1/m)` entries, `f(x)` tends to
//! `½ E[(|⟨a, G(x)⟩| − |⟨a, G(x₀)⟩|)²]` with `a ~ N(0, I)` as `m → ∞`. The
//! expectation is estimated by Monte Carlo. Only the projection of `a` onto
//! `span(G(x), G(x₀))` matters, so each row is drawn as two standard normals
//! in an orthonormal basis of that span, which has the same law as drawing a
//! full Gaussian row. The same row stream is reused at every grid point.

use std::io::Write;

use ndarray::{array, Array1, ArrayView1};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{GeneratorNetwork, VarianceScheme};
use crate::linalg::{angle_between, norm};
use crate::rng::{rng_from_seed, split_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub n1: usize,
    pub n2: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.x1_min, self.x1_max, self.x2_min, self.x2_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x1_min >= self.x1_max || self.x2_min >= self.x2_max || self.n1 < 2 || self.n2 < 2 {
            return Err(Error::Domain(format!("invalid landscape grid {self:?}")));
        }
        Ok(())
    }

    pub fn coords(&self) -> (Vec<f64>, Vec<f64>) {
        let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        };
        (axis(self.x1_min, self.x1_max, self.n1), axis(self.x2_min, self.x2_max, self.n2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeSpec {
    pub dims: Vec<usize>,
    pub scheme: VarianceScheme,
    pub x0: [f64; 2],
    pub grid: GridSpec,
    pub mc_samples: usize,
    pub seed: u64,
}

/// One CSV row: `x1,x2,value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapePoint {
    pub x1: f64,
    pub x2: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid {
    pub n1: usize,
    pub n2: usize,
    /// Row-major with `x1` varying fastest.
    pub points: Vec<LandscapePoint>,
}

impl LandscapeGrid {
    pub fn at(&self, i1: usize, i2: usize) -> &LandscapePoint {
        &self.points[i2 * self.n1 + i1]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Monte-Carlo estimate of `½ E[(|⟨a,u⟩| − |⟨a,v⟩|)²]` from a fixed stream
/// of standard-normal pairs.
pub fn expected_residual(u: ArrayView1<f64>, v: ArrayView1<f64>, normals: &[(f64, f64)]) -> f64 {
    let (nu, nv) = (norm(&u), norm(&v));
    let phi = angle_between(&u, &v).unwrap_or(0.0);
    let (s, c) = phi.sin_cos();
    let total: f64 = normals
        .iter()
        .map(|&(z1, z2)| {
            let p = nu * z1;
            let q = nv * (c * z1 + s * z2);
            let r = p.abs() - q.abs();
            r * r
        })
        .sum();
    0.5 * total / normals.len() as f64
}

pub fn landscape_grid(spec: &LandscapeSpec) -> Result<LandscapeGrid> {
    if spec.dims.first() != Some(&2) {
        return Err(Error::Unsupported(format!(
            "landscape grids need a 2-D latent space, got dims {:?}",
            spec.dims
        )));
    }
    spec.grid.validate()?;
    if spec.mc_samples == 0 {
        return Err(Error::InsufficientSamples("mc_samples must be positive".into()));
    }
    let g = GeneratorNetwork::sample(&spec.dims, spec.scheme, split_seed(spec.seed, &[0]))?;
    landscape_for_generator(&g, spec)
}

/// Landscape for an already-sampled generator; the row stream still comes
/// from `spec.seed`.
pub fn landscape_for_generator(g: &GeneratorNetwork, spec: &LandscapeSpec) -> Result<LandscapeGrid> {
    if g.latent_dim() != 2 {
        return Err(Error::Unsupported("landscape grids need a 2-D latent space".into()));
    }
    spec.grid.validate()?;
    let mut rng = rng_from_seed(split_seed(spec.seed, &[1]));
    let normals: Vec<(f64, f64)> = (0..spec.mc_samples)
        .map(|_| (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let x0: Array1<f64> = array![spec.x0[0], spec.x0[1]];
    let target = g.forward(x0.view())?;
    let (c1, c2) = spec.grid.coords();
    let points = (0..c1.len() * c2.len())
        .into_par_iter()
        .map(|idx| {
            let (x1, x2) = (c1[idx % c1.len()], c2[idx / c1.len()]);
            let gx = g.forward(array![x1, x2].view())?;
            Ok(LandscapePoint {
                x1,
                x2,
                value: expected_residual(gx.view(), target.view(), &normals),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LandscapeGrid {
        n1: c1.len(),
        n2: c2.len(),
        points,
    })
}
