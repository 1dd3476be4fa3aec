//! The amplitude empirical risk `f(x) = ½‖|A G(x)| − b‖²` over latent codes
//! and its descent direction
//! `v_x = (Π W_{i,+,x})ᵀ A_{G(x)}ᵀ (|A G(x)| − b)`.

use ndarray::{Array1, ArrayView1, Zip};

use crate::error::{check_len, Error, Result};
use crate::generator::GeneratorNetwork;
use crate::measurement::{sgn, MeasurementEnsemble, Observation};

#[derive(Debug, Clone)]
pub struct Problem {
    generator: GeneratorNetwork,
    ensemble: MeasurementEnsemble,
    observation: Observation,
    latent: Option<Array1<f64>>,
}

/// Objective value and descent direction computed from one forward pass so
/// that both use the same activation masks and measurement signs.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub direction: Array1<f64>,
}

impl Problem {
    pub fn new(
        generator: GeneratorNetwork,
        ensemble: MeasurementEnsemble,
        observation: Observation,
    ) -> Result<Self> {
        check_len(generator.output_dim(), ensemble.n(), "measurement width vs generator output")?;
        check_len(ensemble.m(), observation.len(), "observation length")?;
        Ok(Self {
            generator,
            ensemble,
            observation,
            latent: None,
        })
    }

    /// Builds the problem with `b = |A G(x₀)|` and remembers `x₀` for
    /// diagnostics that need it.
    pub fn from_latent(
        generator: GeneratorNetwork,
        ensemble: MeasurementEnsemble,
        x0: Array1<f64>,
    ) -> Result<Self> {
        check_len(generator.latent_dim(), x0.len(), "generating code")?;
        let y0 = generator.forward(x0.view())?;
        check_len(generator.output_dim(), ensemble.n(), "measurement width vs generator output")?;
        let observation = ensemble.observe(y0.view())?;
        Ok(Self {
            generator,
            ensemble,
            observation,
            latent: Some(x0),
        })
    }

    pub fn generator(&self) -> &GeneratorNetwork {
        &self.generator
    }

    pub fn ensemble(&self) -> &MeasurementEnsemble {
        &self.ensemble
    }

    pub fn observation(&self) -> &Observation {
        &self.observation
    }

    /// The generating code, when the problem was synthesized from one.
    pub fn latent(&self) -> Option<&Array1<f64>> {
        self.latent.as_ref()
    }

    pub fn latent_dim(&self) -> usize {
        self.generator.latent_dim()
    }

    /// Typical curvature of `f`: the generator's expected squared gain times
    /// `m·σ_A²`, the expected squared gain of `A`.
    pub fn curvature_scale(&self) -> f64 {
        let m = self.ensemble.m();
        self.generator.expected_gain() * m as f64 * self.ensemble.scheme().variance(m)
    }

    pub fn objective(&self, x: ArrayView1<f64>) -> Result<f64> {
        let gx = self.generator.forward(x)?;
        let ax = self.ensemble.apply(gx.view())?;
        let b = self.observation.values();
        Ok(0.5
            * Zip::from(&ax)
                .and(b)
                .fold(0.0, |acc, &p, &q| acc + (p.abs() - q) * (p.abs() - q)))
    }

    pub fn evaluate(&self, x: ArrayView1<f64>) -> Result<Evaluation> {
        let trace = self.generator.trace(x)?;
        let gx = trace.output();
        let ax = self.ensemble.apply(gx.view())?;
        let b = self.observation.values();
        let mut value = 0.0;
        // A_{G(x)}ᵀ (|AG(x)| − b) = Aᵀ (sgn(AG(x)) ∘ (|AG(x)| − b))
        let signed_residual = Zip::from(&ax).and(b).map_collect(|&p, &q| {
            let r = p.abs() - q;
            value += r * r;
            sgn(p) * r
        });
        let pulled = self.ensemble.apply_transpose(signed_residual.view())?;
        let direction = self.generator.pullback(&trace, pulled.view())?;
        Ok(Evaluation {
            value: 0.5 * value,
            direction,
        })
    }

    pub fn descent_direction(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        Ok(self.evaluate(x)?.direction)
    }

    /// One-sided derivative of `f` at the origin along `x`:
    /// `D_x f(0) = −Σ_j |⟨a_j, G(x)⟩ ⟨a_j, G(x₀)⟩|`, always `≤ 0`.
    ///
    /// Needs the generating code; returns `UnsupportedDiagnostic` otherwise.
    pub fn directional_derivative_at_zero(&self, x: ArrayView1<f64>) -> Result<f64> {
        let x0 = self.latent.as_ref().ok_or_else(|| {
            Error::UnsupportedDiagnostic(
                "directional derivative at the origin needs the generating code".into(),
            )
        })?;
        if x.iter().all(|&v| v == 0.0) {
            return Err(Error::Domain("direction must be nonzero".into()));
        }
        let ax = self.ensemble.apply(self.generator.forward(x)?.view())?;
        let ax0 = self.ensemble.apply(self.generator.forward(x0.view())?.view())?;
        Ok(-Zip::from(&ax)
            .and(&ax0)
            .fold(0.0, |acc, &p, &q| acc + (p * q).abs()))
    }
}
