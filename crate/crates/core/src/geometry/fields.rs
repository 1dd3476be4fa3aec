//! Deterministic fields that the descent direction concentrates around,
//! and the critical-region test built on them.

use std::f64::consts::PI;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::angles::{iterate_angles, large_angle_alpha, rho_d, AngleSequence};
use super::operators::PhiOperator;
use crate::error::{check_len, Error, Result};
use crate::generator::GeneratorNetwork;
use crate::linalg::{angle_between, norm};

fn angles_for(x: ArrayView1<f64>, y: ArrayView1<f64>, d: usize) -> Result<AngleSequence> {
    check_len(x.len(), y.len(), "field operands")?;
    let theta0 = angle_between(&x, &y).ok_or_else(|| Error::Domain("field operands must be nonzero".into()))?;
    iterate_angles(theta0, d)
}

/// Closed-form `h_{x,x₀}`:
///
/// `2^{−d} [ −‖x₀‖ β x̂₀ + (‖x‖ − ‖x₀‖ α) x̂ ]` with
/// `β = ((π − 2θ̄_d)/π) ∏_{i<d} (π − θ̄_i)/π` and
/// `α = 2 sin θ̄_d/π + ((π − 2θ̄_d)/π) Σ_{i<d} (sin θ̄_i/π) ∏_{i<j<d} (π − θ̄_j)/π`.
pub fn h_vector(x: ArrayView1<f64>, x0: ArrayView1<f64>, d: usize) -> Result<Array1<f64>> {
    if d == 0 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    let seq = angles_for(x, x0, d)?;
    let (nx, n0) = (norm(&x), norm(&x0));
    let td = seq.last();
    let beta = (PI - 2.0 * td) / PI * seq.pi_product();
    let alpha = large_angle_alpha(&seq);
    let scale = 0.5_f64.powi(d as i32);
    Ok((&x0 * (-beta) + &x * ((nx - n0 * alpha) / nx)) * scale)
}

/// `h̃_{x,y} = 2^{−d} [ (∏_{i<d} (π − θ̄_i)/π) y + Σ_{i<d} (sin θ̄_i/π) ∏_{i<j<d} ((π − θ̄_j)/π) (‖y‖/‖x‖) x ]`.
pub fn htilde_vector(x: ArrayView1<f64>, y: ArrayView1<f64>, d: usize) -> Result<Array1<f64>> {
    let seq = angles_for(x, y, d)?;
    let ratio = norm(&y) / norm(&x);
    let scale = 0.5_f64.powi(d as i32);
    Ok((&y * seq.pi_product() + &x * (seq.sine_product_sum() * ratio)) * scale)
}

/// `v̄_{x,x₀} = P_xᵀ (G(x) − Φ_{G(x),G(x₀)} G(x₀))` where `P_x = Π W_{i,+,x}`.
pub fn vbar_vector(g: &GeneratorNetwork, x: ArrayView1<f64>, x0: ArrayView1<f64>) -> Result<Array1<f64>> {
    let trace = g.trace(x)?;
    let gx = trace.output();
    let gx0 = g.forward(x0)?;
    if gx.iter().all(|&v| v == 0.0) || gx0.iter().all(|&v| v == 0.0) {
        return Err(Error::DegeneratePath("G(x) or G(x₀) is zero".into()));
    }
    let phi = PhiOperator::new(gx.view(), gx0.view())?;
    let inner = gx - &phi.apply(gx0.view())?;
    g.pullback(&trace, inner.view())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalClass {
    /// In the critical region and within `89 d √ε ‖x₀‖` of `x₀`.
    NearTruth,
    /// In the critical region and within `836831 d¹² √ε ‖x₀‖` of `−ρ_d x₀`.
    NearNegativeMultiple,
    /// `‖h_{x,x₀}‖` is above the critical threshold.
    Outside,
    /// In the critical region but in neither ball. The containment result
    /// says this cannot happen; sweeps report it as a violation.
    Uncontained,
}

/// Radii of the two balls that contain the critical region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalBalls {
    pub rho: f64,
    pub near_truth_radius: f64,
    pub near_negative_radius: f64,
}

impl CriticalBalls {
    pub fn new(x0_norm: f64, d: usize, eps: f64) -> Result<Self> {
        check_critical_hypothesis(d, eps)?;
        let root = eps.sqrt();
        Ok(Self {
            rho: rho_d(d)?,
            near_truth_radius: 89.0 * d as f64 * root * x0_norm,
            near_negative_radius: 836_831.0 * (d as f64).powi(12) * root * x0_norm,
        })
    }
}

fn check_critical_hypothesis(d: usize, eps: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::Domain(format!("critical-region test needs d ≥ 2, got {d}")));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("ε must be positive, got {eps}")));
    }
    let lhs = 24.0 * PI * (d as f64).powi(6) * eps.sqrt();
    if lhs > 1.0 {
        return Err(Error::Domain(format!(
            "hypothesis 24π d⁶ √ε ≤ 1 fails: 24π·{d}⁶·√{eps} = {lhs}"
        )));
    }
    Ok(())
}

/// Membership of `x` in `{ x ≠ 0 : ‖h_{x,x₀}‖ ≤ 2^{−d} ε max(‖x‖, ‖x₀‖) }`
/// and, for members, which containing ball it falls in.
pub fn in_critical_set(x: ArrayView1<f64>, x0: ArrayView1<f64>, d: usize, eps: f64) -> Result<CriticalClass> {
    let balls = CriticalBalls::new(norm(&x0), d, eps)?;
    classify_with(&balls, x, x0, d, eps)
}

/// [`in_critical_set`] with precomputed balls, for sweeps.
pub fn classify_with(
    balls: &CriticalBalls,
    x: ArrayView1<f64>,
    x0: ArrayView1<f64>,
    d: usize,
    eps: f64,
) -> Result<CriticalClass> {
    let h = h_vector(x, x0, d)?;
    let threshold = 0.5_f64.powi(d as i32) * eps * norm(&x).max(norm(&x0));
    if norm(&h) > threshold {
        return Ok(CriticalClass::Outside);
    }
    if norm(&(&x - &x0)) <= balls.near_truth_radius {
        Ok(CriticalClass::NearTruth)
    } else if norm(&(&x + &(&x0 * balls.rho))) <= balls.near_negative_radius {
        Ok(CriticalClass::NearNegativeMultiple)
    } else {
        Ok(CriticalClass::Uncontained)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::VarianceScheme;
    use crate::rng::{gaussian_vector, rng_from_seed, unit_sphere};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn h_vanishes_at_truth() {
        let x0 = array![0.3, -1.2, 2.0];
        for d in 1..6 {
            assert!(norm(&h_vector(x0.view(), x0.view(), d).unwrap()) < 1e-15);
        }
    }

    #[test]
    fn h_on_positive_ray() {
        let x0 = array![1.0, 2.0];
        let n0 = norm(&x0);
        let d = 3;
        for &t in &[0.2, 0.9, 1.7, 5.0] {
            let x = &x0 * (t / n0);
            let h = h_vector(x.view(), x0.view(), d).unwrap();
            let expected = &x0 / n0 * ((t - n0) / 8.0);
            assert_abs_diff_eq!(h, expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn h_vanishes_at_negative_multiple() {
        // Root of the radial coefficient on the ray −t x̂₀ by bisection.
        let x0 = array![2.0, -1.0, 0.5];
        let n0 = norm(&x0);
        let d = 3;
        let radial = |t: f64| {
            let x = &x0 * (-t / n0);
            let h = h_vector(x.view(), x0.view(), d).unwrap();
            // x̂ = −x̂₀ on this ray, so project onto −x̂₀.
            -h.dot(&x0) / n0
        };
        let (mut lo, mut hi) = (1e-6, 10.0);
        assert!(radial(lo) < 0.0 && radial(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if radial(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        assert!((t / n0 - rho_d(d).unwrap()).abs() < 1e-12);
        let x = &x0 * (-rho_d(d).unwrap());
        let h = h_vector(x.view(), x0.view(), d).unwrap();
        assert!(norm(&h) / (0.125 * norm(&x).max(n0)) <= 1e-6);
    }

    #[test]
    fn htilde_cases() {
        let x = array![1.0, -3.0, 2.0];
        for d in 1..5 {
            assert_abs_diff_eq!(
                htilde_vector(x.view(), x.view(), d).unwrap(),
                &x * 0.5_f64.powi(d as i32),
                epsilon = 1e-15
            );
        }
        // θ̄₀ = π/2, d = 1: ½ [ ((π − π/2)/π) y + (sin(π/2)/π) (‖y‖/‖x‖) x ].
        let x = array![2.0, 0.0];
        let y = array![0.0, 3.0];
        let expected = array![0.5 * (1.0 / PI) * 1.5 * 2.0, 0.5 * 0.5 * 3.0];
        assert_abs_diff_eq!(htilde_vector(x.view(), y.view(), 1).unwrap(), expected, epsilon = 1e-15);

        let mut rng = rng_from_seed(4);
        for i in 0..200 {
            let x = gaussian_vector(4, 1.0, &mut rng);
            let y = gaussian_vector(4, 2.0, &mut rng);
            let d = 1 + i % 6;
            let bound = 0.5_f64.powi(d as i32) * (1.0 + d as f64 / PI) * norm(&y);
            assert!(norm(&htilde_vector(x.view(), y.view(), d).unwrap()) <= bound + 1e-15);
        }
    }

    #[test]
    fn vbar_vanishes_at_truth_and_rejects_dead_paths() {
        let g = GeneratorNetwork::sample(&[3, 20, 50], VarianceScheme::PerLayer, 1).unwrap();
        let x0 = gaussian_vector(3, 1.0, &mut rng_from_seed(2));
        assert!(norm(&vbar_vector(&g, x0.view(), x0.view()).unwrap()) < 1e-12);

        let dead = GeneratorNetwork::new(vec![array![[1.0], [2.0]]], VarianceScheme::Unit).unwrap();
        assert!(matches!(
            vbar_vector(&dead, array![-1.0].view(), array![1.0].view()),
            Err(Error::DegeneratePath(_))
        ));
    }

    #[test]
    fn vbar_concentrates_around_h_as_layers_widen() {
        // Worst ‖v̄ − h‖ / (2^{-d} max(‖x‖, ‖x₀‖)) over random x.
        let worst = |dims: &[usize]| {
            let g = GeneratorNetwork::sample(dims, VarianceScheme::PerLayer, 9).unwrap();
            let mut rng = rng_from_seed(10);
            let x0 = unit_sphere(3, &mut rng);
            let mut worst = 0.0_f64;
            for _ in 0..10 {
                let x = gaussian_vector(3, 1.0, &mut rng);
                let vbar = vbar_vector(&g, x.view(), x0.view()).unwrap();
                let h = h_vector(x.view(), x0.view(), 2).unwrap();
                worst = worst.max(norm(&(&vbar - &h)) / (0.25 * norm(&x).max(1.0)));
            }
            worst
        };
        let narrow = worst(&[3, 30, 150]);
        let wide = worst(&[3, 600, 3000]);
        assert!(wide < 0.2, "wide deviation {wide}");
        assert!(wide < 0.5 * narrow, "narrow {narrow}, wide {wide}");
    }

    #[test]
    fn critical_set_cases() {
        let x0 = array![1.0, 0.0];
        let d = 2;
        let eps = 1e-8;
        assert_eq!(in_critical_set(x0.view(), x0.view(), d, eps).unwrap(), CriticalClass::NearTruth);
        assert_eq!(
            in_critical_set(array![0.0, 1.0].view(), x0.view(), d, eps).unwrap(),
            CriticalClass::Outside
        );
        let spurious = &x0 * -rho_d(d).unwrap();
        assert_eq!(
            in_critical_set(spurious.view(), x0.view(), d, eps).unwrap(),
            CriticalClass::NearNegativeMultiple
        );
        assert!(matches!(in_critical_set(x0.view(), x0.view(), d, 1e-3), Err(Error::Domain(_))));
        assert!(in_critical_set(x0.view(), x0.view(), 1, 1e-12).is_err());
    }
}
