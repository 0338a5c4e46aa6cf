use ndarray::{Array2, ArrayView2};

use super::derivatives::{gradient, gradient_and_hessian_approx, paired_search_direction, search_direction};
use super::line_search::{wolfe_line_search, LineSearchParams, LineSearchStatus};
use super::{DirectionKind, StepStats, StepStatus, TransformAlgorithm, TransformOptimizer, TransformProblem};
use crate::error::Result;
use crate::linalg::{expm_antisymmetric, frobenius_dot, frobenius_norm, project_antisymmetric, DriftGuard, OrthogonalTransform};
use crate::objective::loss_from_coefficients;

/// Quasi-Newton transform learning with the diagonal Hessian approximation
/// and a strong Wolfe line search on `η ↦ L(exp(η E) Φ)`.
#[derive(Debug, Clone)]
pub struct QuasiNewton {
    params: LineSearchParams,
    guard: DriftGuard,
}

impl Default for QuasiNewton {
    fn default() -> Self {
        Self::new(LineSearchParams::default())
    }
}

impl QuasiNewton {
    pub fn new(params: LineSearchParams) -> Self {
        Self {
            params,
            guard: DriftGuard::default(),
        }
    }

    pub fn params(&self) -> &LineSearchParams {
        &self.params
    }

    /// Runs up to `iters` steps, stopping early once a step cannot move.
    pub fn run(
        &mut self,
        problem: &TransformProblem<'_>,
        phi: OrthogonalTransform,
        iters: usize,
    ) -> Result<(OrthogonalTransform, Vec<StepStats>)> {
        let mut phi = phi;
        let mut history = Vec::with_capacity(iters);
        for _ in 0..iters {
            let (next, stats) = self.step(problem, &phi)?;
            phi = next;
            history.push(stats);
            if !stats.status.moved() {
                break;
            }
        }
        Ok((phi, history))
    }
}

fn unchanged(status: StepStatus, direction: DirectionKind, loss: f64, gradient_norm: f64, evals: usize) -> StepStats {
    StepStats {
        status,
        direction,
        step_size: 0.0,
        loss_before: loss,
        loss_after: loss,
        gradient_norm,
        evals,
        line_search: None,
    }
}

/// `(φ(η), φ'(η))` for `φ(η) = L(exp(η E) X)`, using `φ'(η) = <G(exp(η E) X) | E>`.
fn line_function(x: ArrayView2<'_, f64>, model: ArrayView2<'_, f64>, direction: &Array2<f64>, step: f64) -> Result<(f64, f64)> {
    let rotation = expm_antisymmetric((direction * step).view())?;
    let moved = rotation.matrix().dot(&x);
    let value = loss_from_coefficients(moved.view(), model)?;
    let slope = frobenius_dot(gradient(moved.view(), model)?.view(), direction.view());
    Ok((value, slope))
}

impl TransformOptimizer for QuasiNewton {
    fn step(&mut self, problem: &TransformProblem<'_>, phi: &OrthogonalTransform) -> Result<(OrthogonalTransform, StepStats)> {
        let model = problem.model();
        let x = problem.coefficients(phi)?;
        let loss = loss_from_coefficients(x.view(), model)?;
        let (g, h) = gradient_and_hessian_approx(x.view(), model)?;
        let gradient_norm = frobenius_norm(project_antisymmetric(g.view())?.view());

        let mut kind = DirectionKind::QuasiNewton;
        let mut direction = search_direction(g.view(), h.view())?;
        let mut slope = frobenius_dot(g.view(), direction.view());
        if slope > 0.0 {
            kind = DirectionKind::Paired;
            direction = paired_search_direction(g.view(), h.view())?;
            slope = frobenius_dot(g.view(), direction.view());
        }
        if !(slope < 0.0) {
            return Ok((phi.clone(), unchanged(StepStatus::Stationary, kind, loss, gradient_norm, 0)));
        }

        let outcome = wolfe_line_search(
            |eta| line_function(x.view(), model, &direction, eta),
            loss,
            slope,
            &self.params,
        )?;
        let status = match outcome.status {
            LineSearchStatus::Converged => StepStatus::Wolfe,
            LineSearchStatus::MaxEvals => StepStatus::BestEffort,
            LineSearchStatus::NoDecrease => {
                let mut stats = unchanged(StepStatus::Stagnated, kind, loss, gradient_norm, outcome.evals);
                stats.line_search = Some(outcome);
                return Ok((phi.clone(), stats));
            }
        };
        let rotation = expm_antisymmetric((&direction * outcome.step).view())?;
        let next = self.guard.record_update(phi.left_multiply(&rotation))?;
        let stats = StepStats {
            status,
            direction: kind,
            step_size: outcome.step,
            loss_before: loss,
            loss_after: outcome.value,
            gradient_norm,
            evals: outcome.evals,
            line_search: Some(outcome),
        };
        Ok((next, stats))
    }

    fn algorithm(&self) -> TransformAlgorithm {
        TransformAlgorithm::QuasiNewton
    }
}

/// One quasi-Newton update `Φ ← exp(η E) Φ`, `E = -Π_A(h̃^{∘-1} ∘ G)`.
pub fn quasi_newton_step(
    frames: ArrayView2<'_, f64>,
    phi: &OrthogonalTransform,
    model: ArrayView2<'_, f64>,
    params: &LineSearchParams,
) -> Result<(OrthogonalTransform, StepStats)> {
    let problem = TransformProblem::new(frames, model)?;
    QuasiNewton::new(*params).step(&problem, phi)
}

/// `iters` quasi-Newton steps at a fixed model spectrogram.
pub fn transform_learning(
    model: ArrayView2<'_, f64>,
    frames: ArrayView2<'_, f64>,
    phi: OrthogonalTransform,
    iters: usize,
    params: &LineSearchParams,
) -> Result<(OrthogonalTransform, Vec<StepStats>)> {
    if iters == 0 {
        return Err(crate::Error::InvalidParameter(
            "transform learning needs at least one iteration".into(),
        ));
    }
    let problem = TransformProblem::new(frames, model)?;
    QuasiNewton::new(*params).run(&problem, phi, iters)
}
