//! Seeded experiment harness behind the `dpr` binary.
//!
//! Every output is a pure function of the spec (including its seed).
//! Instance `t` of measurement count `m` is drawn from
//! `trial_seed = split_seed(seed, [m, t])`, and from that seed the generator
//! uses stream 0, the measurement matrix stream 1, the latent code stream 2
//! and the solver start stream 3. Keying on the value of `m` rather than its
//! position keeps results stable when the grid is edited.

pub mod cli;

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{array, Array1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{thresholded_amplitude_flow, SparseProblem};
use crate::concentration::{layer_wdc_deviations, rrcp_deviation, DeviationReport};
use crate::error::{Error, Result};
use crate::generator::{GeneratorNetwork, VarianceScheme};
use crate::geometry::{landscape_for_generator, rho_d, GridSpec, LandscapeGrid, LandscapeSpec};
use crate::linalg::norm;
use crate::measurement::{MeasurementEnsemble, MeasurementScheme};
use crate::objective::Problem;
use crate::rng::{gaussian_vector, rng_from_seed, split_seed};
use crate::solver::{dpr_solve, dpr_solve_two_start, Start, SolverConfig, TrialResult};

/// Default `m/n` ratios when no grid is given.
pub const DEFAULT_RATIOS: [f64; 20] = [
    0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90,
    0.95, 1.00,
];

pub fn default_m_grid(n: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = DEFAULT_RATIOS
        .iter()
        .map(|r| ((r * n as f64).round() as usize).max(1))
        .collect();
    grid.dedup();
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PhaseTransition,
    Landscape,
    WdcStudy,
    RrcpStudy,
    OriginCheck,
    CriticalSweep,
    SolveOne,
}

impl ExperimentKind {
    fn needs_solver(self) -> bool {
        matches!(self, ExperimentKind::PhaseTransition | ExperimentKind::SolveOne)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Negation-escape gradient method from one random start.
    #[default]
    Dpr,
    /// Runs from `x₁` and `−x₁` without negation checks, keeps the better.
    DprTwoStart,
    /// Thresholded amplitude flow on an `s`-sparse signal of length `n_d`.
    SparseBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeOptions {
    pub x0: [f64; 2],
    pub grid: GridSpec,
    pub mc_samples: usize,
}

impl Default for LandscapeOptions {
    fn default() -> Self {
        Self {
            x0: [1.0, 0.0],
            grid: GridSpec {
                x1_min: -1.5,
                x1_max: 1.5,
                x2_min: -1.5,
                x2_max: 1.5,
                n1: 61,
                n2: 61,
            },
            mc_samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub n_angles: usize,
    pub n_radii: usize,
    /// Largest sweep radius as a multiple of `‖x₀‖`.
    pub max_radius: f64,
    /// Failures must fall within this multiple of `‖x₀‖` of `x₀` or `−ρ_d x₀`.
    pub ball_radius: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            n_angles: 100,
            n_radii: 60,
            max_radius: 2.0,
            ball_radius: 0.2,
        }
    }
}

/// Parsed from TOML; every field has a default so configs only need to say
/// what differs. `kind` may be omitted when the CLI subcommand implies it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: Option<ExperimentKind>,
    pub dims: Vec<usize>,
    pub weight_scheme: VarianceScheme,
    pub measurement_scheme: MeasurementScheme,
    /// Defaults to `round(r·n_d)` for `r ∈ {0.05, 0.10, …, 1.00}`.
    pub m_grid: Option<Vec<usize>>,
    pub trials: usize,
    /// Required for solving experiments: no single step size works at every
    /// scale, so there is no default.
    pub solver: Option<SolverConfig>,
    pub seed: u64,
    pub success_threshold: f64,
    pub output_path: Option<PathBuf>,
    pub method: Method,
    /// Sparsity of the baseline's signal.
    pub sparsity: usize,
    /// Directions (origin check), pairs (WDC) or tuples (RRCP).
    pub samples: Option<usize>,
    pub landscape: LandscapeOptions,
    pub sweep: SweepOptions,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            kind: None,
            dims: vec![10, 500, 1000],
            weight_scheme: VarianceScheme::Unit,
            measurement_scheme: MeasurementScheme::PerRow,
            m_grid: None,
            trials: 25,
            solver: None,
            seed: 0,
            success_threshold: 1e-4,
            output_path: None,
            method: Method::Dpr,
            sparsity: 10,
            samples: None,
            landscape: LandscapeOptions::default(),
            sweep: SweepOptions::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Reads and parses a config file. Errors name the path.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn output_dim(&self) -> usize {
        self.dims.last().copied().unwrap_or(0)
    }

    pub fn m_values(&self) -> Vec<usize> {
        self.m_grid.clone().unwrap_or_else(|| default_m_grid(self.output_dim()))
    }

    pub fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    fn kind(&self) -> Result<ExperimentKind> {
        self.kind
            .ok_or_else(|| Error::InvalidConfig("experiment kind is not set".into()))
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        if self.dims.len() < 2 || self.dims.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "dims must list at least two positive sizes, got {:?}",
                self.dims
            )));
        }
        if self.dims.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(format!("dims must be strictly increasing, got {:?}", self.dims)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        let grid = self.m_values();
        if grid.is_empty() || grid.contains(&0) {
            return Err(Error::InvalidConfig("m_grid must be nonempty and positive".into()));
        }
        if !(self.success_threshold > 0.0) {
            return Err(Error::InvalidConfig("success_threshold must be positive".into()));
        }
        if self.samples == Some(0) {
            return Err(Error::InvalidConfig("samples must be at least 1".into()));
        }
        if kind.needs_solver() {
            self.solver
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig(format!("{kind:?} needs a [solver] table")))?
                .validate()?;
        }
        if self.method == Method::SparseBaseline && (self.sparsity == 0 || self.sparsity > self.output_dim()) {
            return Err(Error::InvalidConfig(format!(
                "sparsity {} outside 1..={}",
                self.sparsity,
                self.output_dim()
            )));
        }
        if matches!(kind, ExperimentKind::Landscape | ExperimentKind::CriticalSweep) && self.dims[0] != 2 {
            return Err(Error::InvalidConfig(format!("{kind:?} needs a 2-D latent space, got dims {:?}", self.dims)));
        }
        if kind == ExperimentKind::Landscape {
            self.landscape.grid.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
            if self.landscape.mc_samples == 0 {
                return Err(Error::InvalidConfig("landscape.mc_samples must be positive".into()));
            }
        }
        if kind == ExperimentKind::CriticalSweep {
            let s = &self.sweep;
            if s.n_angles == 0 || s.n_radii == 0 || !(s.max_radius > 0.0) || !(s.ball_radius > 0.0) {
                return Err(Error::InvalidConfig(format!("invalid sweep options {s:?}")));
            }
        }
        Ok(())
    }

    fn solver(&self) -> Result<&SolverConfig> {
        self.solver
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("missing [solver] table".into()))
    }
}

/// Generator, measurements and latent code for one seeded instance.
pub fn sample_instance(spec: &ExperimentSpec, m: usize, trial_seed: u64) -> Result<Problem> {
    let g = GeneratorNetwork::sample(&spec.dims, spec.weight_scheme, split_seed(trial_seed, &[0]))?;
    let e = MeasurementEnsemble::sample(m, spec.output_dim(), spec.measurement_scheme, split_seed(trial_seed, &[1]))?;
    let x0 = gaussian_vector(spec.dims[0], 1.0, &mut rng_from_seed(split_seed(trial_seed, &[2])));
    Problem::from_latent(g, e, x0)
}

pub fn trial_seed(master: u64, m: usize, trial: usize) -> u64 {
    split_seed(master, &[m as u64, trial as u64])
}

/// Solves one seeded instance with the spec's method.
pub fn run_trial(spec: &ExperimentSpec, m: usize, trial: usize) -> Result<TrialResult> {
    let cfg = spec.solver()?;
    let seed = trial_seed(spec.seed, m, trial);
    let start_seed = split_seed(seed, &[3]);
    match spec.method {
        Method::Dpr => dpr_solve(&sample_instance(spec, m, seed)?, cfg, Start::Random(start_seed)),
        Method::DprTwoStart => dpr_solve_two_start(&sample_instance(spec, m, seed)?, cfg, start_seed),
        Method::SparseBaseline => {
            let p = SparseProblem::sample(m, spec.output_dim(), spec.sparsity, spec.measurement_scheme, seed)?;
            thresholded_amplitude_flow(&p, cfg, start_seed)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTransitionRow {
    pub m: usize,
    pub m_over_n: f64,
    pub successes: usize,
    pub trials: usize,
    pub success_rate: f64,
    /// Mean over trials that finished; diverged trials have no final error.
    pub mean_rel_error: f64,
    /// Mean over all trials; a diverged trial counts the iterations it ran.
    pub mean_iters: f64,
}

pub const PHASE_TRANSITION_HEADER: &str = "m,m_over_n,successes,trials,success_rate,mean_rel_error,mean_iters";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTransitionResult {
    pub rows: Vec<PhaseTransitionRow>,
}

impl PhaseTransitionResult {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn rate_at(&self, m: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.m == m).map(|r| r.success_rate)
    }
}

struct Outcome {
    m: usize,
    success: bool,
    rel_error: Option<f64>,
    iterations: usize,
}

pub fn run_phase_transition(spec: &ExperimentSpec) -> Result<PhaseTransitionResult> {
    spec.validate()?;
    let mut grid = spec.m_values();
    grid.sort_unstable();
    grid.dedup();
    let jobs: Vec<(usize, usize)> = grid
        .iter()
        .flat_map(|&m| (0..spec.trials).map(move |t| (m, t)))
        .collect();
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|&(m, t)| match run_trial(spec, m, t) {
            Ok(r) => Ok(Outcome {
                m,
                success: r.relative_error.is_some_and(|e| e <= spec.success_threshold),
                rel_error: r.relative_error,
                iterations: r.iterations_used,
            }),
            Err(Error::Diverged { iteration, .. }) => Ok(Outcome {
                m,
                success: false,
                rel_error: None,
                iterations: iteration,
            }),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    let n = spec.output_dim() as f64;
    let rows = grid
        .iter()
        .map(|&m| {
            let of_m: Vec<&Outcome> = outcomes.iter().filter(|o| o.m == m).collect();
            let successes = of_m.iter().filter(|o| o.success).count();
            let errors: Vec<f64> = of_m.iter().filter_map(|o| o.rel_error).collect();
            PhaseTransitionRow {
                m,
                m_over_n: m as f64 / n,
                successes,
                trials: of_m.len(),
                success_rate: successes as f64 / of_m.len() as f64,
                mean_rel_error: if errors.is_empty() {
                    f64::NAN
                } else {
                    errors.iter().sum::<f64>() / errors.len() as f64
                },
                mean_iters: of_m.iter().map(|o| o.iterations as f64).sum::<f64>() / of_m.len() as f64,
            }
        })
        .collect();
    Ok(PhaseTransitionResult { rows })
}

/// Solves trial 0 at the first `m` of the grid.
pub fn run_solve_one(spec: &ExperimentSpec) -> Result<TrialResult> {
    spec.validate()?;
    run_trial(spec, spec.m_values()[0], 0)
}

pub fn run_landscape(spec: &ExperimentSpec) -> Result<LandscapeGrid> {
    spec.validate()?;
    let opts = &spec.landscape;
    let ls = LandscapeSpec {
        dims: spec.dims.clone(),
        scheme: spec.weight_scheme,
        x0: opts.x0,
        grid: opts.grid.clone(),
        mc_samples: opts.mc_samples,
        seed: spec.seed,
    };
    let g = GeneratorNetwork::sample(&spec.dims, spec.weight_scheme, split_seed(spec.seed, &[0]))?;
    landscape_for_generator(&g, &ls)
}

/// One report per generator layer.
pub fn run_wdc_study(spec: &ExperimentSpec) -> Result<Vec<DeviationReport>> {
    spec.validate()?;
    let g = GeneratorNetwork::sample(&spec.dims, spec.weight_scheme, split_seed(spec.seed, &[0]))?;
    layer_wdc_deviations(&g, spec.samples_or(200), split_seed(spec.seed, &[1]))
}

/// One report per `m` in the grid, all against the same generator.
pub fn run_rrcp_study(spec: &ExperimentSpec) -> Result<Vec<DeviationReport>> {
    spec.validate()?;
    let g = GeneratorNetwork::sample(&spec.dims, spec.weight_scheme, split_seed(spec.seed, &[0]))?;
    let mut grid = spec.m_values();
    grid.sort_unstable();
    grid.dedup();
    grid.iter()
        .map(|&m| {
            let e = MeasurementEnsemble::sample(m, spec.output_dim(), spec.measurement_scheme, split_seed(spec.seed, &[1, m as u64]))?;
            rrcp_deviation(&e, &g, spec.samples_or(200), split_seed(spec.seed, &[2]))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginReport {
    pub dims: Vec<usize>,
    pub m: usize,
    pub seed: u64,
    pub directions: usize,
    /// Directions with `D_x f(0) ≥ 0` although `G(x)` and `G(x₀)` are nonzero.
    pub violations: usize,
    /// Directions whose activation path dies (`G(x) = 0`); the derivative is
    /// 0 there for a trivial reason and is not counted as a violation.
    pub degenerate_directions: usize,
    /// Set when `G(x₀) = 0`, which makes every derivative vanish.
    pub degenerate_instance: bool,
    /// Largest (closest to zero) derivative over nondegenerate directions.
    pub max_derivative: f64,
    /// `D_{x₀} f(0)`.
    pub along_truth: f64,
}

pub fn run_origin_check(spec: &ExperimentSpec) -> Result<OriginReport> {
    spec.validate()?;
    let m = spec.m_values()[0];
    let p = sample_instance(spec, m, trial_seed(spec.seed, m, 0))?;
    let g = p.generator();
    let x0 = p.latent().expect("instance has a latent code").clone();
    let degenerate_instance = g.forward(x0.view())?.iter().all(|&v| v == 0.0);
    let k = spec.dims[0];
    let directions = spec.samples_or(1000);
    let base = split_seed(spec.seed, &[4]);
    let results: Vec<(bool, f64)> = (0..directions)
        .into_par_iter()
        .map(|i| {
            let x = gaussian_vector(k, 1.0, &mut rng_from_seed(split_seed(base, &[i as u64])));
            let dead = g.forward(x.view())?.iter().all(|&v| v == 0.0);
            Ok((dead, p.directional_derivative_at_zero(x.view())?))
        })
        .collect::<Result<_>>()?;
    let live: Vec<f64> = results.iter().filter(|(dead, _)| !dead).map(|&(_, d)| d).collect();
    Ok(OriginReport {
        dims: spec.dims.clone(),
        m,
        seed: spec.seed,
        directions,
        violations: if degenerate_instance { 0 } else { live.iter().filter(|&&d| d >= 0.0).count() },
        degenerate_directions: directions - live.len(),
        degenerate_instance,
        max_derivative: live.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        along_truth: p.directional_derivative_at_zero(x0.view())?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x1: f64,
    pub x2: f64,
    /// `f(x) − f(x − τv)`; positive when the step decreases the objective.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSweepReport {
    pub dims: Vec<usize>,
    pub m: usize,
    pub seed: u64,
    pub x0: [f64; 2],
    pub rho: f64,
    pub ball_radius: f64,
    pub points: Vec<SweepPoint>,
    /// Grid points where the step along `−v` does not decrease `f`.
    pub failures: Vec<SweepPoint>,
    /// Failures outside both balls of radius `ball_radius·‖x₀‖`.
    pub stray_failures: usize,
}

impl CriticalSweepReport {
    pub fn contained(&self) -> bool {
        self.stray_failures == 0
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Polar sweep around the origin of a 2-D latent space: at each point the
/// descent direction `v` is computed and one short step
/// `τ = 10⁻⁴‖x‖/max(‖v‖, 1)` is tested for decrease.
pub fn run_critical_sweep(spec: &ExperimentSpec) -> Result<CriticalSweepReport> {
    spec.validate()?;
    let m = spec.m_values()[0];
    let p = sample_instance(spec, m, trial_seed(spec.seed, m, 0))?;
    let x0 = p.latent().expect("instance has a latent code").clone();
    let r0 = norm(&x0);
    let rho = rho_d(spec.dims.len() - 1)?;
    let opts = &spec.sweep;
    let grid: Vec<Array1<f64>> = (0..opts.n_radii)
        .flat_map(|i| {
            let r = opts.max_radius * r0 * (i + 1) as f64 / opts.n_radii as f64;
            (0..opts.n_angles).map(move |j| {
                let t = std::f64::consts::TAU * j as f64 / opts.n_angles as f64;
                array![r * t.cos(), r * t.sin()]
            })
        })
        .collect();
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .map(|x| {
            let ev = p.evaluate(x.view())?;
            let tau = 1e-4 * norm(x) / norm(&ev.direction).max(1.0);
            let stepped = x - &(&ev.direction * tau);
            Ok(SweepPoint {
                x1: x[0],
                x2: x[1],
                value: ev.value - p.objective(stepped.view())?,
            })
        })
        .collect::<Result<_>>()?;
    let failures: Vec<SweepPoint> = points.iter().copied().filter(|q| q.value <= 0.0).collect();
    let in_ball = |q: &SweepPoint, c: &Array1<f64>| {
        ((q.x1 - c[0]).powi(2) + (q.x2 - c[1]).powi(2)).sqrt() <= opts.ball_radius * r0
    };
    let neg = &x0 * -rho;
    let stray_failures = failures.iter().filter(|q| !in_ball(q, &x0) && !in_ball(q, &neg)).count();
    Ok(CriticalSweepReport {
        dims: spec.dims.clone(),
        m,
        seed: spec.seed,
        x0: [x0[0], x0[1]],
        rho,
        ball_radius: opts.ball_radius,
        points,
        failures,
        stray_failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::StepScaling;

    fn small(kind: ExperimentKind) -> ExperimentSpec {
        ExperimentSpec {
            kind: Some(kind),
            dims: vec![3, 30, 90],
            weight_scheme: VarianceScheme::PerLayer,
            m_grid: Some(vec![90, 5, 40]),
            trials: 4,
            solver: Some(SolverConfig {
                step_size: 1.0,
                max_iters: 500,
                step_scaling: StepScaling::Curvature,
                ..SolverConfig::default()
            }),
            seed: 7,
            ..ExperimentSpec::default()
        }
    }

    #[test]
    fn default_grid_covers_ratios() {
        let g = default_m_grid(1000);
        assert_eq!(g.len(), 20);
        assert_eq!((g[0], g[19]), (50, 1000));
    }

    #[test]
    fn toml_round_trip_and_unknown_fields() {
        let spec = small(ExperimentKind::PhaseTransition);
        let text = toml::to_string(&spec).unwrap();
        assert_eq!(ExperimentSpec::from_toml_str(&text).unwrap(), spec);
        assert!(ExperimentSpec::from_toml_str("dimz = [1, 2]").is_err());
        let partial = ExperimentSpec::from_toml_str("kind = \"origin_check\"\nseed = 3").unwrap();
        assert_eq!(partial.dims, vec![10, 500, 1000]);
        assert_eq!(partial.trials, 25);
        assert_eq!(partial.success_threshold, 1e-4);
    }

    #[test]
    fn validation_rules() {
        let mut s = small(ExperimentKind::PhaseTransition);
        s.solver = None;
        assert!(s.validate().is_err());
        let mut s = small(ExperimentKind::PhaseTransition);
        s.trials = 0;
        assert!(s.validate().is_err());
        let mut s = small(ExperimentKind::PhaseTransition);
        s.m_grid = Some(vec![]);
        assert!(s.validate().is_err());
        let s = small(ExperimentKind::Landscape);
        assert!(s.validate().is_err(), "k = 3 landscape");
        let mut s = small(ExperimentKind::OriginCheck);
        s.solver = None;
        assert!(s.validate().is_ok());
    }

    #[test]
    fn phase_transition_rows_sorted_and_consistent() {
        let r = run_phase_transition(&small(ExperimentKind::PhaseTransition)).unwrap();
        let ms: Vec<usize> = r.rows.iter().map(|r| r.m).collect();
        assert_eq!(ms, vec![5, 40, 90]);
        for row in &r.rows {
            assert!(row.successes <= row.trials && row.trials == 4);
            assert!((0.0..=1.0).contains(&row.success_rate));
            assert!((row.m_over_n - row.m as f64 / 90.0).abs() < 1e-15);
        }
        assert_eq!(r.rate_at(90), Some(1.0));
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().next().unwrap(), PHASE_TRANSITION_HEADER);
    }

    #[test]
    fn trials_are_keyed_by_m_value() {
        let spec = small(ExperimentKind::PhaseTransition);
        let mut sub = spec.clone();
        sub.m_grid = Some(vec![40]);
        let full = run_phase_transition(&spec).unwrap();
        let part = run_phase_transition(&sub).unwrap();
        assert_eq!(full.rows[1], part.rows[0]);
    }

    #[test]
    fn baseline_method_runs() {
        let mut spec = small(ExperimentKind::PhaseTransition);
        spec.method = Method::SparseBaseline;
        spec.sparsity = 2;
        spec.m_grid = Some(vec![90]);
        let r = run_phase_transition(&spec).unwrap();
        assert_eq!(r.rows.len(), 1);
        spec.sparsity = 91;
        assert!(run_phase_transition(&spec).is_err());
    }

    #[test]
    fn two_start_method_runs() {
        let mut spec = small(ExperimentKind::PhaseTransition);
        spec.method = Method::DprTwoStart;
        spec.m_grid = Some(vec![90]);
        let r = run_phase_transition(&spec).unwrap();
        assert_eq!(r.rows[0].trials, 4);
    }

    #[test]
    fn origin_check_small() {
        let mut spec = small(ExperimentKind::OriginCheck);
        spec.samples = Some(100);
        let r = run_origin_check(&spec).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.along_truth < 0.0);
        assert_eq!(r.directions, 100);
    }

    #[test]
    fn origin_check_flags_dead_instance() {
        let mut spec = small(ExperimentKind::OriginCheck);
        spec.dims = vec![1, 2, 3];
        spec.samples = Some(50);
        // With a 1-D latent space, x₀ and half the directions point the
        // other way; find a seed where G(x₀) dies.
        let dead = (0..200u64).find_map(|s| {
            spec.seed = s;
            let r = run_origin_check(&spec).unwrap();
            r.degenerate_instance.then_some(r)
        });
        let r = dead.expect("some seed kills G(x0)");
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn sweep_small_instance() {
        let mut spec = small(ExperimentKind::CriticalSweep);
        spec.dims = vec![2, 40, 200];
        spec.m_grid = Some(vec![400]);
        spec.sweep.n_angles = 24;
        spec.sweep.n_radii = 8;
        let r = run_critical_sweep(&spec).unwrap();
        assert_eq!(r.points.len(), 24 * 8);
        assert!(r.failures.iter().all(|f| f.value <= 0.0));
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("x1,x2,value\n"));
    }

    #[test]
    fn deviation_studies_small() {
        let mut spec = small(ExperimentKind::WdcStudy);
        spec.samples = Some(10);
        assert_eq!(run_wdc_study(&spec).unwrap().len(), 2);
        spec.kind = Some(ExperimentKind::RrcpStudy);
        let r = run_rrcp_study(&spec).unwrap();
        assert_eq!(r.iter().map(|r| r.dims.m.unwrap()).collect::<Vec<_>>(), vec![5, 40, 90]);
    }

    #[test]
    fn landscape_small() {
        let mut spec = small(ExperimentKind::Landscape);
        spec.dims = vec![2, 10, 30];
        spec.landscape.grid.n1 = 5;
        spec.landscape.grid.n2 = 3;
        spec.landscape.mc_samples = 100;
        let g = run_landscape(&spec).unwrap();
        assert_eq!(g.points.len(), 15);
        assert_eq!(g, run_landscape(&spec).unwrap());
    }
}
