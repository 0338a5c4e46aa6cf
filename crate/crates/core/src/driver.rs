//! Alternating minimization: an MM round on `(W, H)` at the current spectrogram,
//! then a few transform-learning steps at the current model `W H`.

use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dct_matrix, frobenius_norm, project_antisymmetric, random_orthogonal, OrthogonalTransform};
use crate::manifold::{gradient, LineSearchParams, StepStats, TransformAlgorithm, TransformProblem};
use crate::nmf::{nmf_step, NmfFactors};
use crate::objective::{power, tlnmf_objective, transform_loss, FLOOR};

/// Number of consecutive small relative changes that ends a run early.
pub const PATIENCE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformInit {
    Random,
    Dct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TlnmfConfig {
    pub rank: usize,
    pub lambda: f64,
    /// Transform steps per outer iteration.
    pub inner_tl_iters: usize,
    pub n_outer: usize,
    /// MM rounds on `(W, H)` per outer iteration.
    pub n_inner_mm: usize,
    pub seed: u64,
    pub algorithm: TransformAlgorithm,
    /// Relative objective change below which an iteration counts as stalled.
    pub tolerance: f64,
    pub init: TransformInit,
    pub line_search: LineSearchParams,
}

impl Default for TlnmfConfig {
    fn default() -> Self {
        Self {
            rank: 10,
            lambda: 1.0,
            inner_tl_iters: 5,
            n_outer: 100,
            n_inner_mm: 1,
            seed: 0,
            algorithm: TransformAlgorithm::QuasiNewton,
            tolerance: 1e-8,
            init: TransformInit::Random,
            line_search: LineSearchParams::default(),
        }
    }
}

impl TlnmfConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.rank == 0 {
            return fail("rank must be >= 1".into());
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return fail(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if self.inner_tl_iters == 0 {
            return fail("inner_tl_iters must be >= 1".into());
        }
        if self.n_outer == 0 {
            return fail("n_outer must be >= 1".into());
        }
        if self.n_inner_mm == 0 {
            return fail("n_inner_mm must be >= 1".into());
        }
        if !(self.tolerance >= 0.0) {
            return fail(format!("tolerance must be >= 0, got {}", self.tolerance));
        }
        self.line_search
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub fit: f64,
    pub penalty: f64,
    pub elapsed_s: f64,
    /// Accepted transform step sizes in this iteration.
    pub step_sizes: Vec<f64>,
    /// `||Π_A(G)||_F` at the start of the transform phase.
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentLog {
    pub records: Vec<IterationRecord>,
}

impl ExperimentLog {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Largest relative increase between consecutive objective values.
    pub fn worst_relative_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| (w[1].objective - w[0].objective) / w[0].objective.abs().max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct TlnmfResult {
    pub transform: OrthogonalTransform,
    pub factors: NmfFactors,
    pub log: ExperimentLog,
    pub transform_steps: Vec<StepStats>,
}

fn tangent_gradient_norm(frames: ArrayView2<'_, f64>, phi: &OrthogonalTransform, model: ArrayView2<'_, f64>) -> Result<f64> {
    let x = phi.apply(frames)?;
    let g = gradient(x.view(), model)?;
    Ok(frobenius_norm(project_antisymmetric(g.view())?.view()))
}

struct Stall {
    tolerance: f64,
    count: usize,
}

impl Stall {
    fn observe(&mut self, previous: f64, current: f64) -> bool {
        let change = (previous - current).abs() / previous.abs().max(f64::MIN_POSITIVE);
        if change < self.tolerance {
            self.count += 1;
        } else {
            self.count = 0;
        }
        self.count >= PATIENCE
    }
}

pub fn initial_transform(dim: usize, init: TransformInit, seed: u64) -> Result<OrthogonalTransform> {
    match init {
        TransformInit::Random => random_orthogonal(dim, seed),
        TransformInit::Dct => dct_matrix(dim),
    }
}

/// Full TL-NMF by alternating minimization.
pub fn run_tlnmf(frames: ArrayView2<'_, f64>, config: &TlnmfConfig) -> Result<TlnmfResult> {
    config.validate()?;
    let (dim, n_frames) = frames.dim();
    if dim < config.rank {
        return Err(Error::Config(format!(
            "rank {} exceeds frame length {dim}",
            config.rank
        )));
    }
    if frames.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("frames"));
    }
    let clock = Instant::now();
    let mut phi = initial_transform(dim, config.init, config.seed)?;
    let mut factors = NmfFactors::random(dim, n_frames, config.rank, config.seed.wrapping_add(1))?;
    let mut optimizer = config.algorithm.optimizer(config.line_search);
    let mut transform_steps = Vec::new();

    let start = tlnmf_objective(frames, &phi, &factors, config.lambda)?;
    let mut log = ExperimentLog {
        records: vec![IterationRecord {
            iteration: 0,
            objective: start.total,
            fit: start.fit,
            penalty: start.penalty,
            elapsed_s: clock.elapsed().as_secs_f64(),
            step_sizes: Vec::new(),
            gradient_norm: f64::NAN,
        }],
    };
    let mut stall = Stall {
        tolerance: config.tolerance,
        count: 0,
    };

    for iteration in 1..=config.n_outer {
        let spectrogram = power(phi.apply(frames)?.view());
        factors = nmf_step(spectrogram.view(), &factors, config.lambda, config.n_inner_mm)?;

        let model = factors.product().mapv(|v| v.max(FLOOR));
        let problem = TransformProblem::new(frames, model.view())?;
        let mut step_sizes = Vec::with_capacity(config.inner_tl_iters);
        let mut gradient_norm = f64::NAN;
        for l in 0..config.inner_tl_iters {
            let (next, stats) = optimizer.step(&problem, &phi)?;
            if l == 0 {
                gradient_norm = stats.gradient_norm;
            }
            phi = next;
            transform_steps.push(stats);
            if !stats.status.moved() {
                break;
            }
            step_sizes.push(stats.step_size);
        }

        let value = tlnmf_objective(frames, &phi, &factors, config.lambda)?;
        let previous = log.records.last().map(|r| r.objective).unwrap_or(value.total);
        log.records.push(IterationRecord {
            iteration,
            objective: value.total,
            fit: value.fit,
            penalty: value.penalty,
            elapsed_s: clock.elapsed().as_secs_f64(),
            step_sizes,
            gradient_norm,
        });
        if stall.observe(previous, value.total) {
            break;
        }
    }

    Ok(TlnmfResult {
        transform: phi,
        factors,
        log,
        transform_steps,
    })
}

#[derive(Debug, Clone)]
pub struct TransformRun {
    pub transform: OrthogonalTransform,
    pub log: ExperimentLog,
    pub steps: Vec<StepStats>,
}

/// Optimizes `L(Φ)` alone at a fixed model spectrogram, logging every iteration.
///
/// Stops early when a step can no longer move the transform.
pub fn run_transform_only(
    frames: ArrayView2<'_, f64>,
    model: ArrayView2<'_, f64>,
    start: &OrthogonalTransform,
    algorithm: TransformAlgorithm,
    iters: usize,
    params: LineSearchParams,
) -> Result<TransformRun> {
    if iters == 0 {
        return Err(Error::Config("iteration count must be >= 1".into()));
    }
    let problem = TransformProblem::new(frames, model)?;
    let mut optimizer = algorithm.optimizer(params);
    let clock = Instant::now();
    let mut phi = start.clone();
    let initial = transform_loss(frames, &phi, model)?;
    let mut log = ExperimentLog {
        records: vec![IterationRecord {
            iteration: 0,
            objective: initial,
            fit: initial,
            penalty: 0.0,
            elapsed_s: 0.0,
            step_sizes: Vec::new(),
            gradient_norm: tangent_gradient_norm(frames, &phi, model)?,
        }],
    };
    let mut steps = Vec::with_capacity(iters);
    for iteration in 1..=iters {
        let (next, stats) = optimizer.step(&problem, &phi)?;
        steps.push(stats);
        if !stats.status.moved() {
            break;
        }
        phi = next;
        let value = problem.loss(&phi)?;
        let elapsed_s = clock.elapsed().as_secs_f64();
        log.records.push(IterationRecord {
            iteration,
            objective: value,
            fit: value,
            penalty: 0.0,
            elapsed_s,
            step_sizes: vec![stats.step_size],
            gradient_norm: stats.gradient_norm,
        });
    }
    Ok(TransformRun {
        transform: phi,
        log,
        steps,
    })
}

/// Current spectrogram `|Φ Y|^2`, floored.
pub fn current_spectrogram(frames: ArrayView2<'_, f64>, phi: &OrthogonalTransform) -> Result<Array2<f64>> {
    Ok(power(phi.apply(frames)?.view()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::standard_normal_matrix;
    use crate::synthetic::SyntheticProblem;

    #[test]
    fn config_validation() {
        let bad = [
            TlnmfConfig { n_outer: 0, ..Default::default() },
            TlnmfConfig { rank: 0, ..Default::default() },
            TlnmfConfig { lambda: -1.0, ..Default::default() },
            TlnmfConfig { inner_tl_iters: 0, ..Default::default() },
            TlnmfConfig { n_inner_mm: 0, ..Default::default() },
        ];
        let y = standard_normal_matrix(12, 20, 0);
        for config in &bad {
            assert!(matches!(run_tlnmf(y.view(), config), Err(Error::Config(_))));
        }
        let too_wide = TlnmfConfig { rank: 13, ..Default::default() };
        assert!(matches!(run_tlnmf(y.view(), &too_wide), Err(Error::Config(_))));
    }

    #[test]
    fn log_is_monotone_and_constraints_hold() {
        let y = standard_normal_matrix(8, 60, 4);
        let config = TlnmfConfig {
            rank: 3,
            n_outer: 15,
            seed: 2,
            ..Default::default()
        };
        let result = run_tlnmf(y.view(), &config).unwrap();
        assert!(result.log.worst_relative_increase() <= 1e-10);
        assert!(result.transform.orthogonality_error() <= 1e-8);
        assert!(result.factors.max_column_sum_error() <= 1e-10);
        assert!(result.factors.h.iter().all(|&h| h >= 0.0));
        assert_eq!(result.log.records.len(), 16);
    }

    #[test]
    fn projected_gradient_driver_is_monotone() {
        let y = standard_normal_matrix(6, 40, 8);
        let config = TlnmfConfig {
            rank: 2,
            n_outer: 10,
            algorithm: TransformAlgorithm::ProjectedGradient,
            ..Default::default()
        };
        let result = run_tlnmf(y.view(), &config).unwrap();
        assert!(result.log.worst_relative_increase() <= 1e-10);
    }

    #[test]
    fn identical_configs_give_identical_logs() {
        let y = standard_normal_matrix(8, 50, 1);
        let config = TlnmfConfig {
            rank: 2,
            n_outer: 6,
            seed: 11,
            ..Default::default()
        };
        let a = run_tlnmf(y.view(), &config).unwrap();
        let b = run_tlnmf(y.view(), &config).unwrap();
        assert_eq!(a.log.objectives(), b.log.objectives());
        assert_eq!(a.transform, b.transform);
        assert_eq!(a.factors, b.factors);
    }

    #[test]
    fn transform_only_from_the_optimum_does_not_move() {
        let p = SyntheticProblem::generate(6, 80, 1e-3, 5).unwrap();
        let run = run_transform_only(
            p.frames.view(),
            p.model.view(),
            &p.target,
            TransformAlgorithm::QuasiNewton,
            10,
            LineSearchParams::default(),
        )
        .unwrap();
        assert_eq!(run.log.records.len(), 1);
        assert_eq!(run.transform, p.target);
        assert_eq!(run.log.records[0].objective, 0.0);
    }

    #[test]
    fn transform_only_runs_are_deterministic() {
        let p = SyntheticProblem::generate(5, 60, 1e-2, 9).unwrap();
        let go = |alg| {
            run_transform_only(p.frames.view(), p.model.view(), &p.start, alg, 15, LineSearchParams::default()).unwrap()
        };
        for alg in TransformAlgorithm::ALL {
            let a = go(alg);
            let b = go(alg);
            assert_eq!(a.log.objectives(), b.log.objectives());
            assert!(a.log.worst_relative_increase() <= 1e-12);
        }
    }
}
