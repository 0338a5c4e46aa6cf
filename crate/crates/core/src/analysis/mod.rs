//! Post-hoc inspection of learned transforms: how energy concentrates on a
//! few atoms, and which atoms two independently learned transforms share.

mod assignment;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::OrthogonalTransform;

pub use assignment::{max_weight_assignment, min_cost_assignment};

/// Atoms compared across runs by default.
pub const DEFAULT_SELECTED_ATOMS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    /// `e_i = sum_n [φ_i Y]_n^2`, indexed by atom.
    pub energies: Vec<f64>,
    /// Atom indices by decreasing energy (ties by lower index).
    pub order: Vec<usize>,
    /// Normalized cumulative sums of the sorted energies; ends at 1.
    pub sorted_cumulative: Vec<f64>,
}

impl EnergyProfile {
    pub fn total(&self) -> f64 {
        self.energies.iter().sum()
    }

    /// Cumulative share of energy carried by the `count` strongest atoms.
    pub fn share_of_top(&self, count: usize) -> f64 {
        match count {
            0 => 0.0,
            c => self.sorted_cumulative[c.min(self.sorted_cumulative.len()) - 1],
        }
    }
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

pub fn energy_profile(phi: &OrthogonalTransform, frames: ArrayView2<'_, f64>) -> Result<EnergyProfile> {
    let x = phi.apply(frames)?;
    let energies: Vec<f64> = x.map_axis(Axis(1), |row| row.iter().map(|v| v * v).sum()).to_vec();
    let order = descending_order(&energies);
    let total: f64 = energies.iter().sum();
    let mut running = 0.0;
    let mut sorted_cumulative: Vec<f64> = order
        .iter()
        .map(|&i| {
            running += energies[i];
            if total > 0.0 {
                running / total
            } else {
                0.0
            }
        })
        .collect();
    if total > 0.0 {
        if let Some(last) = sorted_cumulative.last_mut() {
            *last = 1.0;
        }
    }
    Ok(EnergyProfile {
        energies,
        order,
        sorted_cumulative,
    })
}

/// The `count` most energetic atoms (rows of `Φ`), strongest first.
pub fn top_atoms(phi: &OrthogonalTransform, frames: ArrayView2<'_, f64>, count: usize) -> Result<Array2<f64>> {
    if count == 0 || count > phi.dim() {
        return Err(Error::InvalidCount {
            count,
            dim: phi.dim(),
        });
    }
    let profile = energy_profile(phi, frames)?;
    Ok(phi.matrix().select(Axis(0), &profile.order[..count]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    pub selected_count: usize,
    /// `T = A B^T`; rows index atoms of the first set, columns the second.
    pub correlation: Array2<f64>,
    /// `permutation[i]` is the row of `T` moved to position `i`, i.e. the
    /// first-set atom matched with second-set atom `i`.
    pub permutation: Vec<usize>,
    /// `|P T|`, whose diagonal holds the matched similarities.
    pub permuted_abs: Array2<f64>,
}

impl SimilarityReport {
    pub fn matched_similarities(&self) -> Vec<f64> {
        (0..self.selected_count).map(|i| self.permuted_abs[[i, i]]).collect()
    }

    pub fn matched_trace(&self) -> f64 {
        self.matched_similarities().iter().sum()
    }

    pub fn permutation_matrix(&self) -> Array2<f64> {
        let k = self.selected_count;
        let mut p = Array2::zeros((k, k));
        for (i, &row) in self.permutation.iter().enumerate() {
            p[[i, row]] = 1.0;
        }
        p
    }
}

/// Pairs the atoms of two transforms by maximum-weight assignment on `|A B^T|`.
pub fn match_atoms(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<SimilarityReport> {
    if a.dim() != b.dim() {
        return Err(shape_mismatch("match_atoms", a.dim(), b.dim()));
    }
    let k = a.nrows();
    let correlation = a.dot(&b.t());
    let magnitude = correlation.mapv(f64::abs);
    // assign each second-set atom (column) a first-set atom (row)
    let permutation = max_weight_assignment(magnitude.t());
    let permuted_abs = magnitude.select(Axis(0), &permutation);
    Ok(SimilarityReport {
        selected_count: k,
        correlation,
        permutation,
        permuted_abs,
    })
}

/// Frobenius norms of consecutive `block_size x block_size` diagonal blocks of
/// `|P T|`; a trailing partial block is included.
pub fn block_span_score(report: &SimilarityReport, block_size: usize) -> Result<Vec<f64>> {
    if !(block_size == 1 || block_size == 2) {
        return Err(Error::InvalidParameter(format!(
            "block size must be 1 or 2, got {block_size}"
        )));
    }
    let k = report.selected_count;
    Ok((0..k)
        .step_by(block_size)
        .map(|start| {
            let end = (start + block_size).min(k);
            let mut sq = 0.0;
            for i in start..end {
                for j in start..end {
                    sq += report.permuted_abs[[i, j]].powi(2);
                }
            }
            sq.sqrt()
        })
        .collect())
}
