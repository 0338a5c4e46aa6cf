//! Dense linear assignment (Hungarian algorithm with row/column potentials).

use ndarray::ArrayView2;

/// Minimum-cost perfect matching on a square cost matrix.
///
/// Returns `assignment` with `assignment[row] = column`. O(n^3).
pub fn min_cost_assignment(cost: ArrayView2<'_, f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "assignment needs a square cost matrix");
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; index 0 is a virtual row/column
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        row_of[0] = row;
        let mut col0 = 0usize;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = row_of[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0usize;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let reduced = cost[[r - 1, col - 1]] - u[r] - v[col];
                if reduced < min_v[col] {
                    min_v[col] = reduced;
                    way[col] = col0;
                }
                if min_v[col] < delta {
                    delta = min_v[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[row_of[col]] += delta;
                    v[col] -= delta;
                } else {
                    min_v[col] -= delta;
                }
            }
            col0 = col1;
            if row_of[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            row_of[col0] = row_of[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for col in 1..=n {
        assignment[row_of[col] - 1] = col - 1;
    }
    assignment
}

/// Maximum-weight perfect matching; `assignment[row] = column`.
pub fn max_weight_assignment(weights: ArrayView2<'_, f64>) -> Vec<usize> {
    min_cost_assignment(weights.mapv(|w| -w).view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn brute_force_max(weights: &Array2<f64>) -> f64 {
        let n = weights.nrows();
        (0..n)
            .permutations(n)
            .map(|p| p.iter().enumerate().map(|(r, &c)| weights[[r, c]]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn small_known_instance() {
        let cost = array![[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let a = min_cost_assignment(cost.view());
        let total: f64 = a.iter().enumerate().map(|(r, &c)| cost[[r, c]]).sum();
        assert_eq!(total, 5.0);
        assert_eq!(a, vec![1, 0, 2]);
    }

    #[test]
    fn empty_and_single() {
        assert!(min_cost_assignment(Array2::<f64>::zeros((0, 0)).view()).is_empty());
        assert_eq!(max_weight_assignment(array![[3.0]].view()), vec![0]);
    }

    proptest! {
        #[test]
        fn matches_exhaustive_search(n in 1usize..=6, entries in proptest::collection::vec(0.0f64..1.0, 36)) {
            let weights = Array2::from_shape_fn((n, n), |(i, j)| entries[i * 6 + j]);
            let a = max_weight_assignment(weights.view());
            let mut seen = a.clone();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
            let total: f64 = a.iter().enumerate().map(|(r, &c)| weights[[r, c]]).sum();
            prop_assert!((total - brute_force_max(&weights)).abs() < 1e-12);
        }
    }
}
