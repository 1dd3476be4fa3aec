//! Gradient method with negation escape for the amplitude risk over latent
//! codes, plus the two-start variant that runs from `x₁` and `−x₁` without
//! negation checks and keeps the better run.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::objective::Problem;
use crate::rng::{gaussian_vector, rng_from_seed, split_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    PlainGradient,
    AdaptiveMoment { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::AdaptiveMoment {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// How the step size and tolerances are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepScaling {
    /// Step `α`; tolerances in raw objective units.
    #[default]
    Fixed,
    /// Step `α / s`, gradient test `‖v‖/s`, objective test `f/s`, where `s`
    /// is [`Problem::curvature_scale`]. Makes one `α` work across weight
    /// and measurement normalizations.
    Curvature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub step_size: f64,
    pub max_iters: usize,
    /// Stop when `‖v‖ ≤ grad_tol · max(‖x‖, 1)`.
    pub grad_tol: f64,
    /// Stop when `f ≤ obj_tol`.
    pub obj_tol: f64,
    pub negation_check: bool,
    pub optimizer: Optimizer,
    /// Extra random restarts for runs that hit `max_iters` unconverged.
    /// Only used when the start is drawn from a seed.
    pub restarts: usize,
    pub step_scaling: StepScaling,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            max_iters: 10_000,
            grad_tol: 1e-10,
            obj_tol: 0.0,
            negation_check: true,
            optimizer: Optimizer::PlainGradient,
            restarts: 0,
            step_scaling: StepScaling::Fixed,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::InvalidConfig(format!("step_size must be positive, got {}", self.step_size)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.grad_tol >= 0.0) || !(self.obj_tol >= 0.0) {
            return Err(Error::InvalidConfig("tolerances must be nonnegative".into()));
        }
        if let Optimizer::AdaptiveMoment { beta1, beta2, eps } = self.optimizer {
            let unit = 0.0..1.0;
            if !unit.contains(&beta1) || !unit.contains(&beta2) || !(eps > 0.0) {
                return Err(Error::InvalidConfig(format!("invalid adaptive-moment parameters {:?}", self.optimizer)));
            }
        }
        Ok(())
    }

    fn scale(&self, problem: &Problem) -> f64 {
        match self.step_scaling {
            StepScaling::Fixed => 1.0,
            StepScaling::Curvature => problem.curvature_scale(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub x_final: Vec<f64>,
    pub objective_final: f64,
    /// `‖x − x₀‖/‖x₀‖` when the generating code is known.
    pub relative_error: Option<f64>,
    pub iterations_used: usize,
    /// Iteration indices at which the iterate was replaced by its negation.
    pub negation_events: Vec<usize>,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

impl TrialResult {
    pub fn succeeded(&self, threshold: f64) -> bool {
        self.relative_error.is_some_and(|e| e <= threshold)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Point(Array1<f64>),
    /// `x₁ ~ N(0, I_k)` drawn from this seed.
    Random(u64),
}

pub fn random_start(k: usize, seed: u64) -> Array1<f64> {
    gaussian_vector(k, 1.0, &mut rng_from_seed(seed))
}

pub(crate) fn relative_error(x: ArrayView1<f64>, x0: Option<&Array1<f64>>) -> Option<f64> {
    x0.map(|x0| norm(&(&x - x0)) / norm(x0))
}

struct Moments {
    first: Array1<f64>,
    second: Array1<f64>,
    t: i32,
}

/// Runs the negation-escape gradient method from `start`.
///
/// Each iteration optionally replaces `x` by `−x` when `f(−x) < f(x)`,
/// computes the descent direction at the (possibly negated) iterate, tests
/// the stopping rules and then steps.
pub fn dpr_solve(problem: &Problem, cfg: &SolverConfig, start: Start) -> Result<TrialResult> {
    cfg.validate()?;
    match start {
        Start::Point(x) => solve_from(problem, cfg, x),
        Start::Random(seed) => {
            let k = problem.latent_dim();
            let mut best = solve_from(problem, cfg, random_start(k, seed))?;
            for r in 0..cfg.restarts {
                if best.converged {
                    break;
                }
                let next = solve_from(problem, cfg, random_start(k, split_seed(seed, &[r as u64 + 1])))?;
                if next.objective_final < best.objective_final {
                    best = next;
                }
            }
            Ok(best)
        }
    }
}

fn solve_from(problem: &Problem, cfg: &SolverConfig, x_init: Array1<f64>) -> Result<TrialResult> {
    if x_init.len() != problem.latent_dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.latent_dim(),
            got: x_init.len(),
            context: "initial iterate",
        });
    }
    if x_init.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidStart("the initial iterate must be nonzero".into()));
    }
    let scale = cfg.scale(problem);
    let step = cfg.step_size / scale;
    let mut x = x_init;
    let mut trace = Vec::new();
    let mut negations = Vec::new();
    let mut moments = Moments {
        first: Array1::zeros(x.len()),
        second: Array1::zeros(x.len()),
        t: 0,
    };
    let mut converged = false;
    let mut iterations = 0;
    let mut last = problem.evaluate(x.view())?;

    for it in 0..=cfg.max_iters {
        if !last.value.is_finite() || last.direction.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                iteration: it,
                last_finite: trace.last().copied().unwrap_or(f64::NAN),
                trace,
            });
        }
        if cfg.negation_check {
            let negated = -&x;
            let f_neg = problem.objective(negated.view())?;
            if f_neg < last.value {
                x = negated;
                negations.push(it);
                last = problem.evaluate(x.view())?;
                debug_assert!(last.value <= f_neg);
                moments.first.fill(0.0);
                moments.second.fill(0.0);
                moments.t = 0;
            }
        }
        trace.push(last.value);
        let grad_norm = norm(&last.direction);
        if last.value / scale <= cfg.obj_tol || grad_norm / scale <= cfg.grad_tol * norm(&x).max(1.0) {
            converged = true;
            break;
        }
        if it == cfg.max_iters {
            break;
        }
        match cfg.optimizer {
            Optimizer::PlainGradient => x.scaled_add(-step, &last.direction),
            Optimizer::AdaptiveMoment { beta1, beta2, eps } => {
                moments.t += 1;
                let g = &last.direction;
                moments.first = &moments.first * beta1 + g * (1.0 - beta1);
                moments.second = &moments.second * beta2 + &(g * g) * (1.0 - beta2);
                let c1 = 1.0 - beta1.powi(moments.t);
                let c2 = 1.0 - beta2.powi(moments.t);
                ndarray::Zip::from(&mut x)
                    .and(&moments.first)
                    .and(&moments.second)
                    .for_each(|xi, &m, &v| *xi -= cfg.step_size * (m / c1) / ((v / c2).sqrt() + eps));
            }
        }
        iterations = it + 1;
        last = problem.evaluate(x.view())?;
    }

    Ok(TrialResult {
        relative_error: relative_error(x.view(), problem.latent()),
        x_final: x.to_vec(),
        objective_final: last.value,
        iterations_used: iterations,
        negation_events: negations,
        objective_trace: trace,
        converged,
    })
}

/// Runs without negation checks from `x₁` (drawn from `seed`) and from
/// `−x₁`, returning the run with the lower final objective (first on ties).
pub fn dpr_solve_two_start(problem: &Problem, cfg: &SolverConfig, seed: u64) -> Result<TrialResult> {
    cfg.validate()?;
    let plain = SolverConfig {
        negation_check: false,
        restarts: 0,
        ..cfg.clone()
    };
    let x1 = random_start(problem.latent_dim(), seed);
    let a = solve_from(problem, &plain, x1.clone())?;
    let b = solve_from(problem, &plain, -x1)?;
    Ok(if b.objective_final < a.objective_final { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{GeneratorNetwork, VarianceScheme};
    use crate::geometry::rho_d;
    use crate::measurement::{MeasurementEnsemble, MeasurementScheme};
    use crate::rng::unit_sphere;
    use ndarray::array;

    fn instance(dims: &[usize], m: usize, seed: u64) -> Problem {
        let g = GeneratorNetwork::sample(dims, VarianceScheme::PerLayer, split_seed(seed, &[0])).unwrap();
        let e = MeasurementEnsemble::sample(m, *dims.last().unwrap(), MeasurementScheme::PerRow, split_seed(seed, &[1]))
            .unwrap();
        let x0 = gaussian_vector(dims[0], 1.0, &mut rng_from_seed(split_seed(seed, &[2])));
        Problem::from_latent(g, e, x0).unwrap()
    }

    fn cfg() -> SolverConfig {
        SolverConfig {
            step_size: 0.5,
            max_iters: 5000,
            grad_tol: 1e-9,
            step_scaling: StepScaling::Curvature,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn validation() {
        let p = instance(&[3, 20, 60], 60, 1);
        let bad = SolverConfig { step_size: 0.0, ..cfg() };
        assert!(matches!(dpr_solve(&p, &bad, Start::Random(0)), Err(Error::InvalidConfig(_))));
        let bad = SolverConfig { max_iters: 0, ..cfg() };
        assert!(bad.validate().is_err());
        assert!(matches!(
            dpr_solve(&p, &cfg(), Start::Point(Array1::zeros(3))),
            Err(Error::InvalidStart(_))
        ));
        assert!(dpr_solve(&p, &cfg(), Start::Point(Array1::ones(2))).is_err());
    }

    #[test]
    fn starting_at_truth_stops_immediately() {
        let p = instance(&[3, 20, 60], 60, 2);
        let x0 = p.latent().unwrap().clone();
        let r = dpr_solve(&p, &cfg(), Start::Point(x0)).unwrap();
        assert!(r.converged);
        assert!(r.iterations_used <= 1);
        assert_eq!(r.relative_error, Some(0.0));
    }

    #[test]
    fn recovers_small_instance() {
        let p = instance(&[4, 40, 120], 100, 3);
        let r = dpr_solve(&p, &cfg(), Start::Random(9)).unwrap();
        assert!(r.converged, "{:?}", r.objective_final);
        assert!(r.relative_error.unwrap() <= 1e-4, "{:?}", r.relative_error);
    }

    #[test]
    fn adaptive_moment_also_recovers() {
        let p = instance(&[4, 40, 120], 100, 3);
        let c = SolverConfig {
            step_size: 0.01,
            optimizer: Optimizer::adam(),
            max_iters: 20_000,
            ..cfg()
        };
        let r = dpr_solve(&p, &c, Start::Random(9)).unwrap();
        assert!(r.relative_error.unwrap() <= 1e-3, "{:?}", r.relative_error);
    }

    #[test]
    fn negation_escapes_spurious_basin() {
        let p = instance(&[4, 60, 300], 200, 4);
        let x0 = p.latent().unwrap().clone();
        let rho = rho_d(2).unwrap();
        let mut rng = rng_from_seed(5);
        let start = &x0 * -rho + &(unit_sphere(4, &mut rng) * (0.05 * norm(&x0)));
        let r = dpr_solve(&p, &cfg(), Start::Point(start)).unwrap();
        assert!(!r.negation_events.is_empty());
        assert!(r.relative_error.unwrap() <= 1e-4);
    }

    #[test]
    fn negation_strictly_lowers_objective() {
        let p = instance(&[4, 60, 300], 200, 6);
        let x0 = p.latent().unwrap().clone();
        let start = &x0 * -rho_d(2).unwrap();
        let f_start = p.objective(start.view()).unwrap();
        let r = dpr_solve(&p, &SolverConfig { max_iters: 1, ..cfg() }, Start::Point(start)).unwrap();
        assert_eq!(r.negation_events, vec![0]);
        assert!(r.objective_trace[0] < f_start);
    }

    #[test]
    fn two_start_picks_lower_objective_and_is_deterministic() {
        let p = instance(&[4, 40, 120], 100, 7);
        let a = dpr_solve_two_start(&p, &cfg(), 11).unwrap();
        let b = dpr_solve_two_start(&p, &cfg(), 11).unwrap();
        assert_eq!(a, b);
        assert!(a.negation_events.is_empty());

        let plain = SolverConfig { negation_check: false, ..cfg() };
        let x1 = random_start(4, 11);
        let first = dpr_solve(&p, &plain, Start::Point(x1.clone())).unwrap();
        let second = dpr_solve(&p, &plain, Start::Point(-x1)).unwrap();
        let expected = if second.objective_final < first.objective_final { second } else { first };
        assert_eq!(a, expected);
    }

    #[test]
    fn two_start_prefers_true_basin_over_spurious_one() {
        // Start at the spurious point: without negation checks the run from
        // x₁ stays near −ρ x₀ while the run from −x₁ reaches x₀.
        let p = instance(&[2, 80, 400], 300, 8);
        let x0 = p.latent().unwrap().clone();
        let plain = SolverConfig { negation_check: false, ..cfg() };
        let spurious = dpr_solve(&p, &plain, Start::Point(&x0 * -rho_d(2).unwrap())).unwrap();
        let truth = dpr_solve(&p, &plain, Start::Point(&x0 * rho_d(2).unwrap())).unwrap();
        assert!(spurious.relative_error.unwrap() > 0.5);
        assert!(truth.objective_final < spurious.objective_final);
        // Seed whose draw lands in the left half-plane relative to x₀.
        let seed = (0..100u64)
            .find(|&s| random_start(2, s).dot(&x0) < -0.5 * norm(&x0) * norm(&random_start(2, s)))
            .unwrap();
        let picked = dpr_solve_two_start(&p, &plain, seed).unwrap();
        assert!(picked.relative_error.unwrap() <= 1e-4);
    }

    #[test]
    fn divergence_is_reported() {
        let p = instance(&[3, 20, 60], 60, 9);
        let wild = SolverConfig { step_size: 1e6, max_iters: 2000, ..cfg() };
        match dpr_solve(&p, &wild, Start::Point(array![1.0, 1.0, 1.0])) {
            Err(Error::Diverged { trace, .. }) => assert!(!trace.is_empty()),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
