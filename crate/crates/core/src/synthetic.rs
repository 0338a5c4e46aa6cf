//! Synthetic recovery problem with a known global minimum `L(Φ*) = 0`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{expm_antisymmetric, project_antisymmetric, random_orthogonal, standard_normal_matrix, OrthogonalTransform};
use crate::objective::power;

#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    /// `M x N` i.i.d. standard normal frames.
    pub frames: Array2<f64>,
    /// Ground-truth transform `Φ*`.
    pub target: OrthogonalTransform,
    /// `V̂ = |Φ* Y|^2`.
    pub model: Array2<f64>,
    /// `exp(E) Φ*` with `E = perturbation · Π_A(N(0, I))`.
    pub start: OrthogonalTransform,
}

impl SyntheticProblem {
    pub fn generate(dim: usize, frames: usize, perturbation: f64, seed: u64) -> Result<Self> {
        if dim < 2 || frames < 1 {
            return Err(Error::Config(format!(
                "synthetic problem needs M >= 2 and N >= 1, got M = {dim}, N = {frames}"
            )));
        }
        if !(perturbation >= 0.0) || !perturbation.is_finite() {
            return Err(Error::Config(format!("invalid perturbation {perturbation}")));
        }
        let y = standard_normal_matrix(dim, frames, seed);
        let target = random_orthogonal(dim, seed.wrapping_add(1))?;
        let model = power(target.apply(y.view())?.view());
        let noise = standard_normal_matrix(dim, dim, seed.wrapping_add(2));
        let e = project_antisymmetric(noise.view())? * perturbation;
        let start = target.left_multiply(&expm_antisymmetric(e.view())?);
        Ok(Self {
            frames: y,
            target,
            model,
            start,
        })
    }
}
