use ndarray::{Array2, ArrayView2};

use super::derivatives::gradient;
use super::line_search::satisfies_armijo;
use super::{DirectionKind, StepStats, StepStatus, TransformAlgorithm, TransformOptimizer, TransformProblem};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, project_antisymmetric, project_orthogonal, OrthogonalTransform};
use crate::objective::loss_from_coefficients;

fn polar_update(g: &Array2<f64>, phi: &OrthogonalTransform, eta: f64) -> Result<OrthogonalTransform> {
    let mut shifted = g * -eta;
    for i in 0..shifted.nrows() {
        shifted[[i, i]] += 1.0;
    }
    project_orthogonal(shifted.dot(phi.matrix()).view())
}

/// `Φ ← Π((I - η G) Φ)` with `Π` the polar projection.
pub fn projected_gradient_step(
    frames: ArrayView2<'_, f64>,
    phi: &OrthogonalTransform,
    model: ArrayView2<'_, f64>,
    eta: f64,
) -> Result<OrthogonalTransform> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("step size must be > 0, got {eta}")));
    }
    let problem = TransformProblem::new(frames, model)?;
    let x = problem.coefficients(phi)?;
    let g = gradient(x.view(), model)?;
    if g.iter().all(|&v| v == 0.0) {
        return Ok(phi.clone());
    }
    polar_update(&g, phi, eta)
}

/// Projected gradient baseline with Armijo backtracking.
///
/// Each search starts from twice the previously accepted step.
#[derive(Debug, Clone)]
pub struct ProjectedGradient {
    next_step: f64,
    c1: f64,
    max_backtracks: usize,
}

impl Default for ProjectedGradient {
    fn default() -> Self {
        Self {
            next_step: 1.0,
            c1: 1e-4,
            max_backtracks: 50,
        }
    }
}

impl ProjectedGradient {
    pub fn new(initial_step: f64, c1: f64, max_backtracks: usize) -> Self {
        Self {
            next_step: initial_step,
            c1,
            max_backtracks,
        }
    }
}

impl TransformOptimizer for ProjectedGradient {
    fn step(&mut self, problem: &TransformProblem<'_>, phi: &OrthogonalTransform) -> Result<(OrthogonalTransform, StepStats)> {
        let model = problem.model();
        let x = problem.coefficients(phi)?;
        let loss = loss_from_coefficients(x.view(), model)?;
        let g = gradient(x.view(), model)?;
        let gradient_norm = frobenius_norm(project_antisymmetric(g.view())?.view());
        // the polar factor of (I - ηG)Φ moves along -Π_A(G) to first order
        let slope = -gradient_norm * gradient_norm;
        let mut stats = StepStats {
            status: StepStatus::Stationary,
            direction: DirectionKind::ProjectedGradient,
            step_size: 0.0,
            loss_before: loss,
            loss_after: loss,
            gradient_norm,
            evals: 0,
            line_search: None,
        };
        if !(slope < 0.0) {
            return Ok((phi.clone(), stats));
        }

        let mut eta = self.next_step;
        for _ in 0..self.max_backtracks {
            stats.evals += 1;
            let candidate = match polar_update(&g, phi, eta) {
                Ok(c) => c,
                Err(Error::SingularInput { .. }) => {
                    eta *= 0.5;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let value = problem.loss(&candidate)?;
            if satisfies_armijo(loss, slope, eta, value, self.c1) {
                self.next_step = 2.0 * eta;
                stats.status = StepStatus::Armijo;
                stats.step_size = eta;
                stats.loss_after = value;
                return Ok((candidate, stats));
            }
            eta *= 0.5;
        }
        stats.status = StepStatus::Stagnated;
        Ok((phi.clone(), stats))
    }

    fn algorithm(&self) -> TransformAlgorithm {
        TransformAlgorithm::ProjectedGradient
    }
}
