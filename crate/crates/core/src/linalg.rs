//! Dense primitives for working on the orthogonal group O(M).
//!
//! Products go through `ndarray`; factorizations (LU, QR, SVD) are delegated
//! to `nalgebra` and converted at the boundary.

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{shape_mismatch, Error, Result};

/// Maximum allowed `max |Q Q^T - I|` for a value to count as orthogonal.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-8;

/// Maximum allowed `max |E + E^T|` accepted by [`expm_antisymmetric`].
pub const ANTISYMMETRY_TOLERANCE: f64 = 1e-10;

/// Number of multiplicative updates after which a transform is snapped back
/// onto the manifold with [`project_orthogonal`].
pub const REPROJECT_EVERY: usize = 100;

/// A square matrix `Φ` with `Φ Φ^T = I`. Rows are the atoms of the transform.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalTransform(Array2<f64>);

impl OrthogonalTransform {
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        ensure_square("OrthogonalTransform::new", matrix.view())?;
        ensure_finite("OrthogonalTransform::new", matrix.view())?;
        let deviation = orthogonality_error(matrix.view());
        if deviation > ORTHOGONALITY_TOLERANCE {
            return Err(Error::NotOrthogonal { deviation });
        }
        Ok(Self(matrix))
    }

    /// Wraps a matrix that is orthogonal by construction (exponential of an
    /// antisymmetric matrix, product of orthogonal factors, polar factor).
    pub(crate) fn from_trusted(matrix: Array2<f64>) -> Self {
        debug_assert!(matrix.is_square());
        Self(matrix)
    }

    pub fn identity(dim: usize) -> Self {
        Self(Array2::eye(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(self.0.view())
    }

    /// `Φ Y`.
    pub fn apply(&self, frames: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if frames.nrows() != self.dim() {
            return Err(shape_mismatch(
                "OrthogonalTransform::apply",
                (self.dim(), frames.ncols()),
                frames.dim(),
            ));
        }
        Ok(self.0.dot(&frames))
    }

    /// `R Φ` for another orthogonal `R`.
    pub fn left_multiply(&self, rotation: &OrthogonalTransform) -> Self {
        Self(rotation.0.dot(&self.0))
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.t().to_owned())
    }
}

/// Counts multiplicative updates of a transform and re-projects it onto the
/// manifold every `period` updates.
#[derive(Debug, Clone)]
pub struct DriftGuard {
    period: usize,
    since_projection: usize,
}

impl Default for DriftGuard {
    fn default() -> Self {
        Self::new(REPROJECT_EVERY)
    }
}

impl DriftGuard {
    pub fn new(period: usize) -> Self {
        Self {
            period: period.max(1),
            since_projection: 0,
        }
    }

    pub fn record_update(&mut self, phi: OrthogonalTransform) -> Result<OrthogonalTransform> {
        self.since_projection += 1;
        if self.since_projection >= self.period {
            self.since_projection = 0;
            return project_orthogonal(phi.view());
        }
        Ok(phi)
    }
}

pub fn max_abs(m: ArrayView2<'_, f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()))
}

pub fn frobenius_norm(m: ArrayView2<'_, f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Frobenius inner product `<A|B> = sum_ij a_ij b_ij`.
pub fn frobenius_dot(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// `max |Q Q^T - I|`.
pub fn orthogonality_error(q: ArrayView2<'_, f64>) -> f64 {
    let gram = q.dot(&q.t());
    gram.indexed_iter()
        .map(|((i, j), &v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn ensure_square(context: &'static str, m: ArrayView2<'_, f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(shape_mismatch(context, (m.nrows(), m.nrows()), m.dim()));
    }
    Ok(())
}

pub(crate) fn ensure_finite(context: &'static str, m: ArrayView2<'_, f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}

fn to_nalgebra(m: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

fn from_nalgebra(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// `(C - C^T) / 2`.
pub fn project_antisymmetric(c: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    ensure_square("project_antisymmetric", c)?;
    Ok(Array2::from_shape_fn(c.dim(), |(i, j)| {
        0.5 * (c[[i, j]] - c[[j, i]])
    }))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Largest 1-norm for which the [13/13] approximant is accurate to unit roundoff.
const PADE13_THETA: f64 = 5.371920351148152;

/// Matrix exponential of an antisymmetric matrix, which is orthogonal.
///
/// Scaling and squaring around the diagonal [13/13] Padé approximant.
pub fn expm_antisymmetric(e: ArrayView2<'_, f64>) -> Result<OrthogonalTransform> {
    ensure_square("expm_antisymmetric", e)?;
    ensure_finite("expm_antisymmetric", e)?;
    let deviation = e
        .indexed_iter()
        .map(|((i, j), &v)| (v + e[[j, i]]).abs())
        .fold(0.0, f64::max);
    if deviation > ANTISYMMETRY_TOLERANCE {
        return Err(Error::NotAntisymmetric { deviation });
    }
    let n = e.nrows();
    if e.iter().all(|&v| v == 0.0) {
        return Ok(OrthogonalTransform::identity(n));
    }

    let norm1 = (0..n)
        .map(|j| e.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > PADE13_THETA {
        (norm1 / PADE13_THETA).log2().ceil() as i32
    } else {
        0
    };
    let a = e.mapv(|v| v / 2f64.powi(squarings));
    let eye = Array2::<f64>::eye(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let b = &PADE13;

    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u_poly = a6.dot(&inner_u) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &eye * b[1];
    let u = a.dot(&u_poly);
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = a6.dot(&inner_v) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &eye * b[0];

    let numerator = to_nalgebra((&v + &u).view());
    let denominator = to_nalgebra((&v - &u).view());
    let solved = denominator
        .lu()
        .solve(&numerator)
        .ok_or(Error::SingularInput {
            condition: f64::INFINITY,
        })?;
    let mut result = from_nalgebra(&solved);
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    ensure_finite("expm_antisymmetric", result.view())?;
    Ok(OrthogonalTransform::from_trusted(result))
}

/// Polar factor `(C C^T)^{-1/2} C`, the closest orthogonal matrix to `C`.
///
/// Computed by scaled Newton iteration `X <- (γ X + X^{-T} / γ) / 2`; the
/// singular values are only used to reject near-singular input.
pub fn project_orthogonal(c: ArrayView2<'_, f64>) -> Result<OrthogonalTransform> {
    ensure_square("project_orthogonal", c)?;
    ensure_finite("project_orthogonal", c)?;
    let mut x = to_nalgebra(c);
    let sv = x.singular_values();
    let largest = sv.max();
    let smallest = sv.min();
    if !(smallest > 1e-12 * largest) {
        return Err(Error::SingularInput {
            condition: largest / smallest,
        });
    }
    let mut previous_change = f64::INFINITY;
    for _ in 0..100 {
        let Some(inv) = x.clone().try_inverse() else {
            return Err(Error::SingularInput {
                condition: f64::INFINITY,
            });
        };
        let gamma = (inv.norm() / x.norm()).sqrt();
        let next = (&x * gamma + inv.transpose() / gamma) * 0.5;
        let change = (&next - &x).norm();
        x = next;
        // stop at convergence or once rounding noise dominates
        if change <= 1e-15 * x.norm() || (change < 1e-10 && change >= previous_change) {
            break;
        }
        previous_change = change;
    }
    Ok(OrthogonalTransform::from_trusted(from_nalgebra(&x)))
}

/// Seeded Haar-distributed orthogonal matrix: the Q factor of a standard normal
/// matrix with the signs fixed so that R has a positive diagonal.
pub fn random_orthogonal(dim: usize, seed: u64) -> Result<OrthogonalTransform> {
    if dim == 0 {
        return Err(Error::InvalidParameter(
            "random_orthogonal needs dim >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussian = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    let qr = gaussian.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(OrthogonalTransform::from_trusted(from_nalgebra(&q)))
}

/// Orthonormal DCT-II matrix; row `k` holds `c_k cos(pi (n + 1/2) k / M)`.
pub fn dct_matrix(dim: usize) -> Result<OrthogonalTransform> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dct_matrix needs dim >= 1".into()));
    }
    let m = dim as f64;
    let matrix = Array2::from_shape_fn((dim, dim), |(k, n)| {
        let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
        scale * (std::f64::consts::PI * (n as f64 + 0.5) * k as f64 / m).cos()
    });
    Ok(OrthogonalTransform::from_trusted(matrix))
}

/// Seeded `M x N` matrix of i.i.d. standard normal entries.
pub fn standard_normal_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(&mut rng))
}
