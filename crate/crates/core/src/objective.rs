//! Itakura-Saito divergence and the penalized TL-NMF objective.

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::OrthogonalTransform;
use crate::nmf::NmfFactors;

/// Floor applied to squared transform coefficients and to model spectrogram
/// entries before they enter a division or a logarithm.
pub const FLOOR: f64 = 1e-12;

/// `d_IS(a, b)` written through the ratio `r = a / b` as `(r - 1) - ln(1 + (r - 1))`,
/// which keeps full relative accuracy when `r` is close to 1.
#[inline]
pub fn is_scalar_from_ratio(ratio: f64) -> f64 {
    if ratio == f64::INFINITY {
        return f64::INFINITY;
    }
    let delta = ratio - 1.0;
    (delta - delta.ln_1p()).max(0.0)
}

#[inline]
pub fn is_scalar(a: f64, b: f64) -> f64 {
    is_scalar_from_ratio(a / b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub fit: f64,
    pub penalty: f64,
    pub total: f64,
}

/// `D_IS(A | B) = sum a/b - log(a/b) - 1`.
pub fn is_divergence(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(shape_mismatch("is_divergence", a.dim(), b.dim()));
    }
    if let Some(&low) = b.iter().find(|&&v| !(v >= FLOOR)) {
        return Err(Error::FloorViolation {
            context: "is_divergence",
            value: low,
        });
    }
    let total: f64 = a.iter().zip(b.iter()).map(|(&x, &y)| is_scalar(x, y)).sum();
    if !total.is_finite() {
        return Err(Error::NonFinite("is_divergence"));
    }
    Ok(total)
}

/// Squared coefficients `|X|^2` floored at [`FLOOR`].
pub fn power(x: ArrayView2<'_, f64>) -> Array2<f64> {
    x.mapv(|v| (v * v).max(FLOOR))
}

pub(crate) fn check_model(context: &'static str, model: ArrayView2<'_, f64>) -> Result<()> {
    match model.iter().find(|&&v| !(v >= FLOOR) || !v.is_finite()) {
        None => Ok(()),
        Some(&v) if v.is_finite() => Err(Error::FloorViolation { context, value: v }),
        Some(_) => Err(Error::NonFinite(context)),
    }
}

/// `L = sum f_v(x)` evaluated on transformed frames `X = Φ Y`, with
/// `f_v(x) = d_IS(x^2, v)` and `x^2` floored.
pub fn loss_from_coefficients(x: ArrayView2<'_, f64>, model: ArrayView2<'_, f64>) -> Result<f64> {
    if x.dim() != model.dim() {
        return Err(shape_mismatch("transform_loss", model.dim(), x.dim()));
    }
    let mut total = 0.0;
    Zip::from(&x).and(&model).for_each(|&xi, &v| {
        total += is_scalar_from_ratio((xi * xi).max(FLOOR) / v);
    });
    if !total.is_finite() {
        return Err(Error::NonFinite("transform_loss"));
    }
    Ok(total)
}

/// `L(Φ) = D_IS(|Φ Y|^2 | V̂)`.
pub fn transform_loss(
    frames: ArrayView2<'_, f64>,
    phi: &OrthogonalTransform,
    model: ArrayView2<'_, f64>,
) -> Result<f64> {
    check_model("transform_loss", model)?;
    let x = phi.apply(frames)?;
    loss_from_coefficients(x.view(), model)
}

/// `λ (M / K) ||H||_1`.
pub fn sparsity_penalty(activations: ArrayView2<'_, f64>, frame_len: usize, lambda: f64) -> f64 {
    let rank = activations.nrows() as f64;
    lambda * frame_len as f64 / rank * activations.iter().map(|h| h.abs()).sum::<f64>()
}

/// Objective at a fixed spectrogram `V`: `D_IS(V | W H) + λ (M/K) ||H||_1`.
///
/// Positive entries of `W H` are floored at [`FLOOR`] like the model handed to
/// transform learning; zero or negative entries are an error.
pub fn nmf_objective(spectrogram: ArrayView2<'_, f64>, factors: &NmfFactors, lambda: f64) -> Result<ObjectiveValue> {
    if lambda < 0.0 {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let product = factors.product();
    if product.dim() != spectrogram.dim() {
        return Err(shape_mismatch("nmf_objective", spectrogram.dim(), product.dim()));
    }
    if let Some(&bad) = product.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::FloorViolation {
            context: "tlnmf_objective (W H)",
            value: bad,
        });
    }
    let model = product.mapv(|v| v.max(FLOOR));
    let fit = is_divergence(spectrogram, model.view())?;
    let penalty = sparsity_penalty(factors.h.view(), spectrogram.nrows(), lambda);
    Ok(ObjectiveValue {
        fit,
        penalty,
        total: fit + penalty,
    })
}

/// `C_λ(Φ, W, H) = D_IS(|Φ Y|^2 | W H) + λ (M/K) ||H||_1`.
pub fn tlnmf_objective(
    frames: ArrayView2<'_, f64>,
    phi: &OrthogonalTransform,
    factors: &NmfFactors,
    lambda: f64,
) -> Result<ObjectiveValue> {
    let x = phi.apply(frames)?;
    nmf_objective(power(x.view()).view(), factors, lambda)
}
