//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex64`. The only
//! structured type is [`HermitianPsd`], which is validated once on
//! construction so downstream code can factor it without re-checking.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigenvalues below this are treated as inactive modes.
pub const ACTIVITY_FLOOR: f64 = 1e-300;

/// Acceptance tolerances for Hermitian-ness and positive semi-definiteness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `max|A - A*| <= hermitian * (1 + max|A|)`.
    pub hermitian: f64,
    /// `lambda_min >= -psd * lambda_max`.
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: 1e-10,
            psd: 1e-9,
        }
    }
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn symmetrized(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition with eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, in the order of `values`.
    pub vectors: CMatrix,
}

impl Eigen {
    /// Largest eigenvalue and its unit eigenvector.
    pub fn top(&self) -> (f64, CVector) {
        (self.values[0], self.vectors.column(0).into_owned())
    }
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if !all_finite(m) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn check_hermitian(m: &CMatrix, tol: &Tolerances) -> Result<()> {
    check_square(m)?;
    let defect = hermitian_defect(m);
    if defect > tol.hermitian * (1.0 + max_abs(m)) {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

/// Hermitian eigendecomposition of `a`, eigenvalues descending.
///
/// Each eigenvector is phase-normalized so that its first entry with
/// modulus above `1e-12` is real and positive. Within clusters of nearly
/// equal eigenvalues the basis is not unique.
pub fn herm_eig(a: &CMatrix) -> Result<Eigen> {
    check_hermitian(a, &Tolerances::default())?;
    Ok(eig_unchecked(&symmetrized(a)))
}

pub(crate) fn eig_unchecked(a: &CMatrix) -> Eigen {
    let n = a.nrows();
    let decomposition = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        decomposition.eigenvalues[j]
            .partial_cmp(&decomposition.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| decomposition.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = decomposition.eigenvectors.column(src).into_owned();
        let norm = col.norm();
        if norm > 0.0 {
            col.unscale_mut(norm);
        }
        if let Some(lead) = col.iter().find(|z| z.norm() > 1e-12).copied() {
            let phase = lead.conj() / lead.norm();
            col *= phase;
        }
        vectors.set_column(dst, &col);
    }
    Eigen { values, vectors }
}

/// A Hermitian positive semi-definite matrix, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianPsd {
    matrix: CMatrix,
}

impl HermitianPsd {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::default())
    }

    pub fn with_tolerances(matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        check_hermitian(&matrix, tol)?;
        let matrix = symmetrized(&matrix);
        if matrix.nrows() > 0 {
            let eig = eig_unchecked(&matrix);
            let max = eig.values[0];
            let min = *eig.values.last().unwrap();
            // Roundoff floor so that exact zero matrices with tiny noise pass.
            let floor = 64.0 * f64::EPSILON * max_abs(&matrix) * matrix.nrows() as f64;
            if min < -tol.psd * max.max(0.0) - floor {
                return Err(Error::NotPsd { min, max });
            }
        }
        Ok(HermitianPsd { matrix })
    }

    /// Wraps a matrix that is PSD by construction (Gramians, `V D V*`).
    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        HermitianPsd {
            matrix: symmetrized(&matrix),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianPsd {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        HermitianPsd {
            matrix: CMatrix::identity(dim, dim).scale(scale),
        }
    }

    /// Diagonal matrix with the given non-negative entries.
    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        if entries.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidArgument(
                "diagonal entries must be finite and non-negative".into(),
            ));
        }
        let diag = DVector::from_iterator(
            entries.len(),
            entries.iter().map(|&d| Complex64::new(d, 0.0)),
        );
        Ok(HermitianPsd {
            matrix: CMatrix::from_diagonal(&diag),
        })
    }

    /// `V diag(values) V*` for non-negative `values`.
    pub fn from_eigen_parts(vectors: &CMatrix, values: &[f64]) -> Self {
        let mut scaled = vectors.clone();
        for (j, &v) in values.iter().enumerate() {
            let mut col = scaled.column_mut(j);
            col *= Complex64::new(v.max(0.0), 0.0);
        }
        HermitianPsd::from_trusted(&scaled * vectors.adjoint())
    }

    /// Gramian `A* A`.
    pub fn gram(a: &CMatrix) -> Self {
        HermitianPsd::from_trusted(a.adjoint() * a)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn eig(&self) -> Eigen {
        eig_unchecked(&self.matrix)
    }

    /// Hermitian square root `V sqrt(Lambda) V*`, negative roundoff clipped.
    pub fn sqrt(&self) -> CMatrix {
        let eig = self.eig();
        let roots: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
        HermitianPsd::from_eigen_parts(&eig.vectors, &roots).into_matrix()
    }
}

/// `log2 det(I + scale * G)` in bits.
pub fn log2_det_i_plus(scale: f64, g: &HermitianPsd) -> Result<f64> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "scale must be positive and finite, got {scale}"
        )));
    }
    Ok(log2_det_i_plus_unchecked(scale, g.matrix()))
}

/// As [`log2_det_i_plus`] for a matrix known to be Hermitian PSD.
///
/// Uses a Cholesky factor of `I + scale * G`; falls back to the
/// eigenvalue sum if roundoff makes the factorization fail.
pub(crate) fn log2_det_i_plus_unchecked(scale: f64, g: &CMatrix) -> f64 {
    let n = g.nrows();
    let mut m = g.scale(scale);
    for i in 0..n {
        m[(i, i)] += Complex64::new(1.0, 0.0);
    }
    match m.clone().cholesky() {
        Some(chol) => {
            let l = chol.l_dirty();
            let ln: f64 = (0..n).map(|i| l[(i, i)].re.ln()).sum();
            (2.0 * ln / std::f64::consts::LN_2).max(0.0)
        }
        None => eig_unchecked(&symmetrized(g))
            .values
            .iter()
            .map(|&l| (1.0 + scale * l.max(0.0)).log2())
            .sum(),
    }
}

/// Inverse of a Hermitian positive-definite matrix.
pub(crate) fn hpd_inverse(m: &CMatrix) -> CMatrix {
    match m.clone().cholesky() {
        Some(chol) => chol.inverse(),
        None => {
            let eig = eig_unchecked(&symmetrized(m));
            let inv: Vec<f64> = eig
                .values
                .iter()
                .map(|&l| if l > ACTIVITY_FLOOR { 1.0 / l } else { 0.0 })
                .collect();
            HermitianPsd::from_eigen_parts(&eig.vectors, &inv).into_matrix()
        }
    }
}

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
