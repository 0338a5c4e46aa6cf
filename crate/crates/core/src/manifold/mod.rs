//! Minimizing `L(Φ) = D_IS(|Φ Y|^2 | V̂)` over orthogonal `Φ`.
//!
//! Iterates are parametrized multiplicatively, `Φ ← exp(E) Φ` with `E`
//! antisymmetric, so every accepted update stays on the manifold.

mod derivatives;
mod line_search;
mod projected_gradient;
mod quasi_newton;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::{ensure_finite, OrthogonalTransform};
use crate::objective::{check_model, loss_from_coefficients};

pub use derivatives::{
    full_hessian_oracle, gradient, gradient_and_hessian_approx, hessian_approx,
    paired_search_direction, search_direction, FullHessian, FULL_HESSIAN_MAX_DIM,
};
pub use line_search::{
    satisfies_armijo, satisfies_strong_wolfe, wolfe_line_search, LineSearchOutcome,
    LineSearchParams, LineSearchStatus,
};
pub use projected_gradient::{projected_gradient_step, ProjectedGradient};
pub use quasi_newton::{quasi_newton_step, transform_learning, QuasiNewton};

/// Frames `Y` together with a fixed model spectrogram `V̂`.
#[derive(Debug, Clone, Copy)]
pub struct TransformProblem<'a> {
    frames: ArrayView2<'a, f64>,
    model: ArrayView2<'a, f64>,
}

impl<'a> TransformProblem<'a> {
    pub fn new(frames: ArrayView2<'a, f64>, model: ArrayView2<'a, f64>) -> Result<Self> {
        if frames.dim() != model.dim() {
            return Err(shape_mismatch("TransformProblem::new", frames.dim(), model.dim()));
        }
        ensure_finite("frames", frames)?;
        check_model("TransformProblem::new", model)?;
        Ok(Self { frames, model })
    }

    pub fn dim(&self) -> usize {
        self.frames.nrows()
    }

    pub fn frames(&self) -> ArrayView2<'a, f64> {
        self.frames
    }

    pub fn model(&self) -> ArrayView2<'a, f64> {
        self.model
    }

    /// `X = Φ Y`.
    pub fn coefficients(&self, phi: &OrthogonalTransform) -> Result<Array2<f64>> {
        phi.apply(self.frames)
    }

    pub fn loss(&self, phi: &OrthogonalTransform) -> Result<f64> {
        let x = self.coefficients(phi)?;
        loss_from_coefficients(x.view(), self.model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepStatus {
    /// Step certified by the strong Wolfe conditions.
    Wolfe,
    /// Line search budget ran out; the best decreasing step was taken.
    BestEffort,
    /// Backtracking step satisfying the Armijo condition.
    Armijo,
    /// The tangent gradient vanished; the transform was left unchanged.
    Stationary,
    /// No decreasing step was found; the transform was left unchanged.
    Stagnated,
}

impl StepStatus {
    pub fn moved(self) -> bool {
        matches!(self, Self::Wolfe | Self::BestEffort | Self::Armijo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectionKind {
    /// `-Π_A(h̃^{∘-1} ∘ G)`.
    QuasiNewton,
    /// Pairwise-diagonal fallback used when the quasi-Newton direction is not
    /// a descent direction.
    Paired,
    /// `-G`, projected back by the polar factor.
    ProjectedGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub status: StepStatus,
    pub direction: DirectionKind,
    pub step_size: f64,
    pub loss_before: f64,
    pub loss_after: f64,
    /// `||Π_A(G)||_F` at the start of the step.
    pub gradient_norm: f64,
    pub evals: usize,
    pub line_search: Option<LineSearchOutcome>,
}

/// One iteration of a transform-learning algorithm.
pub trait TransformOptimizer {
    fn step(
        &mut self,
        problem: &TransformProblem<'_>,
        phi: &OrthogonalTransform,
    ) -> Result<(OrthogonalTransform, StepStats)>;

    fn algorithm(&self) -> TransformAlgorithm;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformAlgorithm {
    QuasiNewton,
    ProjectedGradient,
}

impl TransformAlgorithm {
    pub const ALL: [TransformAlgorithm; 2] = [Self::QuasiNewton, Self::ProjectedGradient];

    pub fn name(self) -> &'static str {
        match self {
            Self::QuasiNewton => "quasi-newton",
            Self::ProjectedGradient => "projected-gradient",
        }
    }

    pub fn optimizer(self, params: LineSearchParams) -> Box<dyn TransformOptimizer> {
        match self {
            Self::QuasiNewton => Box::new(QuasiNewton::new(params)),
            Self::ProjectedGradient => Box::new(ProjectedGradient::default()),
        }
    }
}

impl fmt::Display for TransformAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quasi-newton" | "qn" => Ok(Self::QuasiNewton),
            "projected-gradient" | "pg" => Ok(Self::ProjectedGradient),
            other => Err(Error::Config(format!(
                "unknown algorithm '{other}' (expected quasi-newton or projected-gradient)"
            ))),
        }
    }
}
