//! Fully-connected, bias-free ReLU generators and their active-weight
//! factorization.
//!
//! For an input `x` the network is locally linear: `G(x) = (W_{d,+,x} ⋯ W_{1,+,x}) x`
//! where `W_{i,+,x}` keeps the rows of `W_i` whose pre-activation at `x` is
//! strictly positive. Rows with a pre-activation of exactly zero are zeroed.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::matvec_transpose;
use crate::rng::{gaussian_matrix, rng_from_seed};

/// Entry variance used when sampling weight layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceScheme {
    /// `N(0, 1/n_i)` for the layer with `n_i` output rows.
    PerLayer,
    /// `N(0, 1)`.
    Unit,
}

impl VarianceScheme {
    pub fn variance(self, rows: usize) -> f64 {
        match self {
            VarianceScheme::PerLayer => 1.0 / rows as f64,
            VarianceScheme::Unit => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorNetwork {
    dims: Vec<usize>,
    weights: Vec<Array2<f64>>,
    scheme: VarianceScheme,
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::InvalidDimensions(format!(
            "a generator needs at least one layer, got dims {dims:?}"
        )));
    }
    if dims[0] == 0 {
        return Err(Error::InvalidDimensions("latent dimension must be positive".into()));
    }
    if let Some(w) = dims.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidDimensions(format!(
            "layer sizes must be strictly increasing, found {} -> {} in {dims:?}",
            w[0], w[1]
        )));
    }
    Ok(())
}

impl GeneratorNetwork {
    /// Builds a generator from explicit weights. Layer `i` must have shape
    /// `n_{i+1} × n_i` and the sizes must be strictly increasing.
    pub fn new(weights: Vec<Array2<f64>>, scheme: VarianceScheme) -> Result<Self> {
        let first = weights
            .first()
            .ok_or_else(|| Error::InvalidDimensions("a generator needs at least one layer".into()))?;
        let mut dims = vec![first.ncols()];
        for (i, w) in weights.iter().enumerate() {
            check_len(*dims.last().unwrap(), w.ncols(), "weight layer input width")?;
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDimensions(format!("layer {i} has non-finite entries")));
            }
            dims.push(w.nrows());
        }
        validate_dims(&dims)?;
        Ok(Self {
            dims,
            weights,
            scheme,
        })
    }

    /// Samples i.i.d. Gaussian weights for the given layer sizes.
    pub fn sample(dims: &[usize], scheme: VarianceScheme, seed: u64) -> Result<Self> {
        validate_dims(dims)?;
        let mut rng = rng_from_seed(seed);
        let weights = dims
            .windows(2)
            .map(|w| gaussian_matrix(w[1], w[0], scheme.variance(w[1]).sqrt(), &mut rng))
            .collect();
        Ok(Self {
            dims: dims.to_vec(),
            weights,
            scheme,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn scheme(&self) -> VarianceScheme {
        self.scheme
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn latent_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    /// Expected squared gain `∏ n_i σ_i² / 2` of the network on a generic
    /// input: each layer keeps about half its rows, and an active row of
    /// variance `σ_i²` contributes `σ_i²` per unit of input energy.
    pub fn expected_gain(&self) -> f64 {
        self.dims[1..]
            .iter()
            .map(|&n| n as f64 * self.scheme.variance(n) / 2.0)
            .product()
    }

    pub fn forward(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len(self.latent_dim(), x.len(), "generator input")?;
        let mut a = x.to_owned();
        for w in &self.weights {
            a = w.dot(&a);
            a.mapv_inplace(|v| if v > 0.0 { v } else { 0.0 });
        }
        Ok(a)
    }

    /// Runs the network and keeps every post-activation so that the
    /// active-path adjoint can be applied without recomputation.
    pub fn trace(&self, x: ArrayView1<f64>) -> Result<ForwardTrace> {
        check_len(self.latent_dim(), x.len(), "generator input")?;
        let mut activations = Vec::with_capacity(self.depth());
        let mut a = x.to_owned();
        for w in &self.weights {
            a = w.dot(&a);
            a.mapv_inplace(|v| if v > 0.0 { v } else { 0.0 });
            activations.push(a.clone());
        }
        Ok(ForwardTrace { activations })
    }

    /// Active-row masks and the product `W_{d,+,x} ⋯ W_{1,+,x}`.
    pub fn active_path(&self, x: ArrayView1<f64>) -> Result<ActivePath> {
        let trace = self.trace(x)?;
        let masks: Vec<Vec<bool>> = trace
            .activations
            .iter()
            .map(|a| a.iter().map(|&v| v > 0.0).collect())
            .collect();
        let mut product = Array2::eye(self.latent_dim());
        for (w, mask) in self.weights.iter().zip(&masks) {
            let mut next = w.dot(&product);
            for (mut row, &on) in next.rows_mut().into_iter().zip(mask) {
                if !on {
                    row.fill(0.0);
                }
            }
            product = next;
        }
        Ok(ActivePath { masks, product })
    }

    /// Applies `(Π W_{i,+,x})ᵀ` recorded in `trace` to `upstream`.
    pub fn pullback(&self, trace: &ForwardTrace, upstream: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len(self.output_dim(), upstream.len(), "pullback input")?;
        let mut u = upstream.to_owned();
        for (w, a) in self.weights.iter().zip(&trace.activations).rev() {
            Zip::from(&mut u).and(a).for_each(|ui, &ai| {
                if ai <= 0.0 {
                    *ui = 0.0;
                }
            });
            u = matvec_transpose(w, &u);
        }
        Ok(u)
    }
}

/// Post-activations of every layer for one input.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    activations: Vec<Array1<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Array1<f64> {
        self.activations.last().expect("trace of a network with at least one layer")
    }

    pub fn activations(&self) -> &[Array1<f64>] {
        &self.activations
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivePath {
    pub masks: Vec<Vec<bool>>,
    /// `n_d × k` matrix equal to `Π_{i=d}^{1} W_{i,+,x}`.
    pub product: Array2<f64>,
}

/// `diag(Wv > 0) W`: rows of `W` with non-positive product against `v`
/// are zeroed.
pub fn active_rows(w: ArrayView2<f64>, v: ArrayView1<f64>) -> Result<Array2<f64>> {
    check_len(w.ncols(), v.len(), "active_rows vector")?;
    let pre = w.dot(&v);
    let mut out = w.to_owned();
    for (mut row, &p) in out.rows_mut().into_iter().zip(pre.iter()) {
        if p <= 0.0 {
            row.fill(0.0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_vector, unit_sphere};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn toy() -> GeneratorNetwork {
        GeneratorNetwork::new(vec![array![[1.0], [-1.0]]], VarianceScheme::Unit).unwrap()
    }

    #[test]
    fn full_scale_shapes() {
        let g = GeneratorNetwork::sample(&[10, 500, 1000], VarianceScheme::Unit, 7).unwrap();
        assert_eq!(g.depth(), 2);
        assert_eq!(g.weights()[0].dim(), (500, 10));
        assert_eq!(g.weights()[1].dim(), (1000, 500));
    }

    #[test]
    fn per_layer_variance_is_one_over_rows() {
        // 10⁴ entries pooled from many 3×2 draws.
        let mut sum = 0.0;
        let mut sq = 0.0;
        let mut count = 0.0;
        for seed in 0..1667u64 {
            let g = GeneratorNetwork::sample(&[2, 3], VarianceScheme::PerLayer, seed).unwrap();
            for &v in g.weights()[0].iter() {
                sum += v;
                sq += v * v;
                count += 1.0;
            }
        }
        assert!(count >= 1e4);
        let mean = sum / count;
        let var = sq / count - mean * mean;
        assert!((var - 1.0 / 3.0).abs() <= 0.05 / 3.0, "variance {var}");
    }

    #[test]
    fn non_expansive_dims_rejected() {
        assert!(matches!(
            GeneratorNetwork::sample(&[3, 2], VarianceScheme::Unit, 0),
            Err(Error::InvalidDimensions(_))
        ));
        assert!(GeneratorNetwork::sample(&[3, 3], VarianceScheme::Unit, 0).is_err());
        assert!(GeneratorNetwork::sample(&[3], VarianceScheme::Unit, 0).is_err());
        assert!(GeneratorNetwork::new(vec![array![[1.0, 2.0]]], VarianceScheme::Unit).is_err());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let a = GeneratorNetwork::sample(&[3, 8, 20], VarianceScheme::PerLayer, 11).unwrap();
        let b = GeneratorNetwork::sample(&[3, 8, 20], VarianceScheme::PerLayer, 11).unwrap();
        let c = GeneratorNetwork::sample(&[3, 8, 20], VarianceScheme::PerLayer, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn forward_small_cases() {
        let g = toy();
        assert_eq!(g.forward(array![2.0].view()).unwrap(), array![2.0, 0.0]);
        let big = GeneratorNetwork::sample(&[4, 9, 30], VarianceScheme::Unit, 1).unwrap();
        assert!(big.forward(Array1::zeros(4).view()).unwrap().iter().all(|&v| v == 0.0));
        assert!(matches!(
            big.forward(Array1::zeros(3).view()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn active_rows_cases() {
        let id = array![[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(
            active_rows(id.view(), array![1.0, -1.0].view()).unwrap(),
            array![[1.0, 0.0], [0.0, 0.0]]
        );
        assert_eq!(
            active_rows(id.view(), array![0.0, 0.0].view()).unwrap(),
            Array2::<f64>::zeros((2, 2))
        );
        let w = array![[1.0, 1.0], [2.0, -1.0]];
        assert_eq!(active_rows(w.view(), array![1.0, 1.0].view()).unwrap(), w);
        assert!(active_rows(w.view(), array![1.0].view()).is_err());
    }

    #[test]
    fn active_path_small_cases() {
        let path = toy().active_path(array![1.0].view()).unwrap();
        assert_eq!(path.product, array![[1.0], [0.0]]);
        assert_eq!(path.masks, vec![vec![true, false]]);

        // Entrywise-positive weights and input: every mask is the identity.
        let w1 = array![[1.0, 2.0], [0.5, 1.0], [3.0, 0.1]];
        let w2 = array![[1.0, 1.0, 1.0], [0.2, 0.3, 0.4], [2.0, 0.0, 1.0], [1.0, 5.0, 1.0]];
        let g = GeneratorNetwork::new(vec![w1.clone(), w2.clone()], VarianceScheme::Unit).unwrap();
        let path = g.active_path(array![1.0, 1.0].view()).unwrap();
        assert_abs_diff_eq!(path.product, w2.dot(&w1), epsilon = 1e-14);
    }

    #[test]
    fn pullback_matches_dense_product() {
        let g = GeneratorNetwork::sample(&[3, 12, 40], VarianceScheme::PerLayer, 5).unwrap();
        let mut rng = rng_from_seed(9);
        let x = gaussian_vector(3, 1.0, &mut rng);
        let u = gaussian_vector(40, 1.0, &mut rng);
        let trace = g.trace(x.view()).unwrap();
        let path = g.active_path(x.view()).unwrap();
        let dense = path.product.t().dot(&u);
        assert_abs_diff_eq!(g.pullback(&trace, u.view()).unwrap(), dense, epsilon = 1e-12);
    }

    #[test]
    fn per_layer_active_weights_are_contractive() {
        // ‖W_{i,+,x}‖² stays below the Gaussian edge (1 + 2√(n_{i−1}/n_i))²/2.
        let g = GeneratorNetwork::sample(&[2, 100, 2000], VarianceScheme::PerLayer, 2).unwrap();
        let mut rng = rng_from_seed(4);
        for _ in 0..5 {
            let x = unit_sphere(2, &mut rng);
            let trace = g.trace(x.view()).unwrap();
            let mut input = x.clone();
            for (w, a) in g.weights().iter().zip(trace.activations()) {
                let active = active_rows(w.view(), input.view()).unwrap();
                let s = crate::linalg::spectral_norm(&active);
                let edge = (1.0 + 2.0 * (w.ncols() as f64 / w.nrows() as f64).sqrt()).powi(2) / 2.0;
                assert!(s * s <= edge, "‖W₊‖² = {} > {edge}", s * s);
                input = a.clone();
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn path_product_reproduces_forward(seed in 0u64..10_000) {
            let g = GeneratorNetwork::sample(&[3, 7, 15, 31], VarianceScheme::Unit, seed).unwrap();
            let mut rng = rng_from_seed(seed ^ 0xABCD);
            let x = gaussian_vector(3, 1.0, &mut rng);
            let out = g.forward(x.view()).unwrap();
            let path = g.active_path(x.view()).unwrap();
            let via_path = path.product.dot(&x);
            let scale = 1.0 + crate::linalg::norm(&out);
            for (a, b) in out.iter().zip(via_path.iter()) {
                prop_assert!((a - b).abs() <= 1e-12 * scale);
                prop_assert!(*a >= 0.0);
            }
        }

        #[test]
        fn positive_scaling_commutes(seed in 0u64..10_000, c in 0.01f64..100.0) {
            let g = GeneratorNetwork::sample(&[2, 6, 13], VarianceScheme::PerLayer, seed).unwrap();
            let mut rng = rng_from_seed(seed);
            let x = gaussian_vector(2, 1.0, &mut rng);
            let a = g.forward(x.view()).unwrap() * c;
            let b = g.forward((&x * c).view()).unwrap();
            let scale = 1.0 + crate::linalg::norm(&a);
            for (p, q) in a.iter().zip(b.iter()) {
                prop_assert!((p - q).abs() <= 1e-12 * scale);
            }
            let pa = g.active_path(x.view()).unwrap();
            let pb = g.active_path((&x * c).view()).unwrap();
            prop_assert_eq!(pa.masks, pb.masks);
        }

        #[test]
        fn locally_linear_along_short_segments(seed in 0u64..10_000) {
            let g = GeneratorNetwork::sample(&[3, 9, 21], VarianceScheme::Unit, seed).unwrap();
            let mut rng = rng_from_seed(seed + 1);
            let x = gaussian_vector(3, 1.0, &mut rng);
            let v = unit_sphere(3, &mut rng);
            let path = g.active_path(x.view()).unwrap();
            let t = 1e-9;
            let moved = &x + &(&v * t);
            if g.active_path(moved.view()).unwrap().masks == path.masks {
                let lin = path.product.dot(&moved);
                let out = g.forward(moved.view()).unwrap();
                let scale = 1.0 + crate::linalg::norm(&out);
                for (p, q) in lin.iter().zip(out.iter()) {
                    prop_assert!((p - q).abs() <= 1e-12 * scale);
                }
            }
        }
    }
}
