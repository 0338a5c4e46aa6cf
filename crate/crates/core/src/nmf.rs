//! Multiplicative majorization-minimization updates for IS-NMF with an L1
//! penalty on the activations.
//!
//! The dictionary columns are kept at unit L1 norm. The `W` update carries the
//! penalty gradient `λ (M/K) 1 H^T`, so that after [`normalize_joint`] the
//! penalized objective is non-increasing across a full round.

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_mismatch, Error, Result};

/// Lower bound applied to every factor entry after a multiplicative update.
pub const FACTOR_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct NmfFactors {
    /// `M x K` dictionary.
    pub w: Array2<f64>,
    /// `K x N` activations.
    pub h: Array2<f64>,
}

impl NmfFactors {
    /// Checks shapes and nonnegativity and normalizes `W` columns jointly with `H` rows.
    pub fn new(w: Array2<f64>, h: Array2<f64>) -> Result<Self> {
        if w.ncols() != h.nrows() {
            return Err(shape_mismatch("NmfFactors::new", (w.nrows(), h.nrows()), w.dim()));
        }
        if w.iter().chain(h.iter()).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "NMF factors must be finite and nonnegative".into(),
            ));
        }
        let (w, h) = normalize_joint(w.view(), h.view())?;
        Ok(Self { w, h })
    }

    /// Seeded uniform `(0, 1]` entries, then joint normalization.
    pub fn random(frame_len: usize, frames: usize, rank: usize, seed: u64) -> Result<Self> {
        if rank == 0 || frame_len == 0 || frames == 0 {
            return Err(Error::InvalidParameter("NMF dimensions must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || 1.0 - rng.random::<f64>();
        let w = Array2::from_shape_simple_fn((frame_len, rank), &mut draw);
        let h = Array2::from_shape_simple_fn((rank, frames), &mut draw);
        Self::new(w, h)
    }

    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    /// `W H`.
    pub fn product(&self) -> Array2<f64> {
        self.w.dot(&self.h)
    }

    pub fn max_column_sum_error(&self) -> f64 {
        self.w
            .sum_axis(Axis(0))
            .iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn check_update_inputs(
    context: &'static str,
    v: ArrayView2<'_, f64>,
    w: ArrayView2<'_, f64>,
    h: ArrayView2<'_, f64>,
    lambda: f64,
) -> Result<()> {
    if w.ncols() != h.nrows() {
        return Err(shape_mismatch(context, (w.nrows(), h.nrows()), w.dim()));
    }
    if v.dim() != (w.nrows(), h.ncols()) {
        return Err(shape_mismatch(context, (w.nrows(), h.ncols()), v.dim()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(())
}

/// Returns `((WH)^-2 ∘ V, (WH)^-1)`.
fn inverse_powers(v: ArrayView2<'_, f64>, w: ArrayView2<'_, f64>, h: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let model = w.dot(&h);
    if model.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
        return Err(Error::NonFinite("NMF model W H"));
    }
    let weighted = Zip::from(&model).and(&v).map_collect(|&m, &x| x / (m * m));
    let inverse = model.mapv(f64::recip);
    Ok((weighted, inverse))
}

fn multiplicative(current: ArrayView2<'_, f64>, numerator: Array2<f64>, denominator: Array2<f64>, context: &'static str) -> Result<Array2<f64>> {
    let updated = Zip::from(&current)
        .and(&numerator)
        .and(&denominator)
        .map_collect(|&c, &num, &den| (c * (num / den).sqrt()).max(FACTOR_FLOOR));
    if updated.iter().all(|v| v.is_finite()) {
        Ok(updated)
    } else {
        Err(Error::NonFinite(context))
    }
}

/// `H ∘ [W^T((WH)^-2 ∘ V) / (W^T (WH)^-1 + λ M/K)]^(1/2)`.
pub fn update_h(v: ArrayView2<'_, f64>, w: ArrayView2<'_, f64>, h: ArrayView2<'_, f64>, lambda: f64) -> Result<Array2<f64>> {
    check_update_inputs("update_h", v, w, h, lambda)?;
    let (weighted, inverse) = inverse_powers(v, w, h)?;
    let shift = lambda * w.nrows() as f64 / w.ncols() as f64;
    let numerator = w.t().dot(&weighted);
    let denominator = w.t().dot(&inverse) + shift;
    multiplicative(h, numerator, denominator, "update_h")
}

/// `W ∘ [((WH)^-2 ∘ V) H^T / ((WH)^-1 H^T + λ M/K 1 H^T)]^(1/2)`.
pub fn update_w(v: ArrayView2<'_, f64>, w: ArrayView2<'_, f64>, h: ArrayView2<'_, f64>, lambda: f64) -> Result<Array2<f64>> {
    check_update_inputs("update_w", v, w, h, lambda)?;
    let (weighted, inverse) = inverse_powers(v, w, h)?;
    let shift = lambda * w.nrows() as f64 / w.ncols() as f64;
    let numerator = weighted.dot(&h.t());
    let row_sums = h.sum_axis(Axis(1));
    let mut denominator = inverse.dot(&h.t());
    for mut row in denominator.rows_mut() {
        row.scaled_add(shift, &row_sums);
    }
    multiplicative(w, numerator, denominator, "update_w")
}

/// Rescales `w_k ← w_k / ||w_k||_1` and `h_k ← h_k ||w_k||_1`, leaving `W H` unchanged.
pub fn normalize_joint(w: ArrayView2<'_, f64>, h: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    if w.ncols() != h.nrows() {
        return Err(shape_mismatch("normalize_joint", (w.nrows(), h.nrows()), w.dim()));
    }
    let sums = w.sum_axis(Axis(0));
    if let Some((column, &sum)) = sums.iter().enumerate().find(|(_, s)| !(**s >= FACTOR_FLOOR)) {
        return Err(Error::DegenerateColumn { column, sum });
    }
    let mut w = w.to_owned();
    let mut h = h.to_owned();
    for (k, &sum) in sums.iter().enumerate() {
        w.column_mut(k).mapv_inplace(|x| x / sum);
        h.row_mut(k).mapv_inplace(|x| x * sum);
    }
    Ok((w, h))
}

/// `rounds` passes of (H update, W update, joint normalization) at a fixed spectrogram.
pub fn nmf_step(v: ArrayView2<'_, f64>, factors: &NmfFactors, lambda: f64, rounds: usize) -> Result<NmfFactors> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("nmf_step needs at least one round".into()));
    }
    let mut w = factors.w.clone();
    let mut h = factors.h.clone();
    for _ in 0..rounds {
        h = update_h(v, w.view(), h.view(), lambda)?;
        w = update_w(v, w.view(), h.view(), lambda)?;
        (w, h) = normalize_joint(w.view(), h.view())?;
    }
    Ok(NmfFactors { w, h })
}
