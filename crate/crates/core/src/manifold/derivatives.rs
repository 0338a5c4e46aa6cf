//! First and second derivatives of `L(exp(E) Φ)` at `E = 0`.
//!
//! With `X = Φ Y` and `f_v(x) = d_IS(x^2, v)`:
//!
//! * gradient `G_ij = sum_n f'(x_in) x_jn`, `f'(x) = 2 (x / v - 1 / x)`
//! * Hessian `H_ijkl = δ_ik sum_n f''(x_in) x_jn x_ln + δ_jk G_il`, `f''(x) = 2 (1 / v + 1 / x^2)`
//! * approximation `h̃_ij = sum_n f''(x_in) x_jn^2`, acting on `E` as `h̃ ∘ E`.
//!
//! Reciprocals of `x` use `|x| >= sqrt(FLOOR)`, which matches the `x^2 >= FLOOR`
//! floor in the loss.

use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::{ensure_finite, project_antisymmetric};
use crate::objective::{check_model, FLOOR};

/// Largest dimension for which [`full_hessian_oracle`] will build the `M^4` tensor.
pub const FULL_HESSIAN_MAX_DIM: usize = 20;

fn check_pair(context: &'static str, x: ArrayView2<'_, f64>, model: ArrayView2<'_, f64>) -> Result<()> {
    if x.dim() != model.dim() {
        return Err(shape_mismatch(context, model.dim(), x.dim()));
    }
    check_model(context, model)?;
    ensure_finite(context, x)
}

#[inline]
fn guarded_square(x: f64) -> f64 {
    (x * x).max(FLOOR)
}

#[inline]
fn guarded(x: f64) -> f64 {
    let floor = FLOOR.sqrt();
    if x.abs() >= floor {
        x
    } else if x < 0.0 {
        -floor
    } else {
        floor
    }
}

/// `f'(x)` written as `2 (x^2 / v - 1) / x` so that it is exactly zero when `x^2 = v`.
fn first_derivatives(x: ArrayView2<'_, f64>, model: ArrayView2<'_, f64>) -> Array2<f64> {
    Zip::from(&x)
        .and(&model)
        .par_map_collect(|&xi, &v| 2.0 * (guarded_square(xi) / v - 1.0) / guarded(xi))
}

fn second_derivatives(x: ArrayView2<'_, f64>, model: ArrayView2<'_, f64>) -> Array2<f64> {
    Zip::from(&x)
        .and(&model)
        .par_map_collect(|&xi, &v| 2.0 * (1.0 / v + 1.0 / guarded_square(xi)))
}

/// Relative gradient `G` (an `M x M` matrix).
pub fn gradient(x: ArrayView2<'_, f64>, model: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check_pair("gradient", x, model)?;
    let g = first_derivatives(x, model).dot(&x.t());
    ensure_finite("gradient", g.view())?;
    Ok(g)
}

/// Coefficients `h̃_ij` of the diagonal Hessian approximation.
pub fn hessian_approx(x: ArrayView2<'_, f64>, model: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check_pair("hessian_approx", x, model)?;
    let squares = x.mapv(|v| v * v);
    let h = second_derivatives(x, model).dot(&squares.t());
    ensure_finite("hessian_approx", h.view())?;
    Ok(h)
}

/// Gradient and Hessian approximation sharing one pass over `X`.
pub fn gradient_and_hessian_approx(
    x: ArrayView2<'_, f64>,
    model: ArrayView2<'_, f64>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_pair("gradient_and_hessian_approx", x, model)?;
    let g = first_derivatives(x, model).dot(&x.t());
    let squares = x.mapv(|v| v * v);
    let h = second_derivatives(x, model).dot(&squares.t());
    ensure_finite("gradient", g.view())?;
    ensure_finite("hessian_approx", h.view())?;
    Ok((g, h))
}

/// Dense fourth-order Hessian tensor, for testing only.
#[derive(Debug, Clone)]
pub struct FullHessian {
    dim: usize,
    entries: Vec<f64>,
}

impl FullHessian {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.dim + j) * self.dim + k) * self.dim + l
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.entries[self.offset(i, j, k, l)]
    }

    /// `<A|H|B> = sum H_ijkl a_ij b_kl`.
    pub fn bilinear(&self, a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
        let m = self.dim;
        let mut total = 0.0;
        for i in 0..m {
            for j in 0..m {
                let aij = a[[i, j]];
                if aij == 0.0 {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        total += self.get(i, j, k, l) * aij * b[[k, l]];
                    }
                }
            }
        }
        total
    }

    pub fn quadratic_form(&self, e: ArrayView2<'_, f64>) -> f64 {
        self.bilinear(e, e)
    }
}

/// Exact Hessian of `L(exp(E) Φ)` at `E = 0`; refuses `M > 20`.
pub fn full_hessian_oracle(
    x: ArrayView2<'_, f64>,
    model: ArrayView2<'_, f64>,
    g: ArrayView2<'_, f64>,
) -> Result<FullHessian> {
    let m = x.nrows();
    if m > FULL_HESSIAN_MAX_DIM {
        return Err(Error::SizeGuard {
            dim: m,
            limit: FULL_HESSIAN_MAX_DIM,
        });
    }
    check_pair("full_hessian_oracle", x, model)?;
    if g.dim() != (m, m) {
        return Err(shape_mismatch("full_hessian_oracle", (m, m), g.dim()));
    }
    let curvature = second_derivatives(x, model);
    let mut hessian = FullHessian {
        dim: m,
        entries: vec![0.0; m.pow(4)],
    };
    for i in 0..m {
        // sum_n f''(x_in) x_jn x_ln for every (j, l)
        let weighted = &x * &curvature.row(i);
        let block = weighted.dot(&x.t());
        for j in 0..m {
            for l in 0..m {
                let idx = hessian.offset(i, j, i, l);
                hessian.entries[idx] += block[[j, l]];
            }
            for l in 0..m {
                let idx = hessian.offset(i, j, j, l);
                hessian.entries[idx] += g[[i, l]];
            }
        }
    }
    Ok(hessian)
}

/// `E = -Π_A(h̃^{∘-1} ∘ G)`.
pub fn search_direction(g: ArrayView2<'_, f64>, h: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if g.dim() != h.dim() || g.nrows() != g.ncols() {
        return Err(shape_mismatch("search_direction", h.dim(), g.dim()));
    }
    if let Some(&bad) = h.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "Hessian approximation must be positive, found {bad:e}"
        )));
    }
    let scaled = Zip::from(&g).and(&h).map_collect(|&gi, &hi| -gi / hi);
    project_antisymmetric(scaled.view())
}

/// `E_ij = -(G_ij - G_ji) / (h̃_ij + h̃_ji)`: the minimizer of the diagonal model
/// restricted to antisymmetric `E`, which always has `<G|E> <= 0`.
pub fn paired_search_direction(g: ArrayView2<'_, f64>, h: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if g.dim() != h.dim() || g.nrows() != g.ncols() {
        return Err(shape_mismatch("paired_search_direction", h.dim(), g.dim()));
    }
    if let Some(&bad) = h.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "Hessian approximation must be positive, found {bad:e}"
        )));
    }
    Ok(Array2::from_shape_fn(g.dim(), |(i, j)| {
        -(g[[i, j]] - g[[j, i]]) / (h[[i, j]] + h[[j, i]])
    }))
}
