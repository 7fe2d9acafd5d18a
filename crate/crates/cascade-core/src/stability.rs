//! System matrices, eigenvalues, and stability verdicts, including the
//! kinase non-specificity perturbations and the feedback stability bound.
//!
//! The unperturbed cascade matrix is lower bidiagonal, so its spectrum is the
//! diagonal `{-beta_i} ∪ {-l}` and the system is always stable. Feedback adds
//! a single corner entry and destabilizes the system exactly when `eps`
//! exceeds `beta_1 ... beta_n / (alpha_2 ... alpha_n)`.

use crate::model::Cascade;
use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StabilityError {
    #[error("eigenvalue iteration failed to converge for a {dim}x{dim} matrix")]
    NoConvergence { dim: usize },
    #[error("perturbation entry ({row}, {col}) outside the {dim}x{dim} state space")]
    EntryOutOfRange { row: usize, col: usize, dim: usize },
    #[error("perturbation entry ({index}, {index}) would overwrite a decay rate")]
    DiagonalEntry { index: usize },
}

/// Extra couplings added to the system matrix: entry `(row, col, value)` adds
/// `value` at that position (0-based over the `n + 1` states). Diagonal
/// entries are rejected — the decay rates `-beta_i` and `-l` are structural.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PerturbationSpec {
    pub entries: Vec<(usize, usize, f64)>,
}

impl PerturbationSpec {
    /// True when every coupling sits strictly below the diagonal, i.e. signal
    /// only leaks further downstream. Such perturbations keep the matrix
    /// lower triangular and cannot affect stability.
    pub fn is_strictly_downstream(&self) -> bool {
        self.entries.iter().all(|&(r, c, _)| r > c)
    }

    fn validate(&self, dim: usize) -> Result<(), StabilityError> {
        for &(row, col, _) in &self.entries {
            if row >= dim || col >= dim {
                return Err(StabilityError::EntryOutOfRange { row, col, dim });
            }
            if row == col {
                return Err(StabilityError::DiagonalEntry { index: row });
            }
        }
        Ok(())
    }
}

/// The `(n+1) x (n+1)` state matrix: diagonal `(-beta_1, ..., -beta_n, -l)`,
/// subdiagonal `(alpha_2, ..., alpha_n, 1)`, and the feedback coupling
/// `eps` at `(0, n-1)` when present.
pub fn build_system_matrix(c: &Cascade) -> DMatrix<f64> {
    let n = c.n();
    let dim = n + 1;
    let mut a = DMatrix::zeros(dim, dim);
    for (i, &b) in c.beta().iter().enumerate() {
        a[(i, i)] = -b;
    }
    a[(n, n)] = -c.leak();
    for i in 1..n {
        a[(i, i - 1)] = c.alpha()[i];
    }
    a[(n, n - 1)] = 1.0;
    if c.feedback() > 0.0 && n >= 1 {
        a[(0, n - 1)] += c.feedback();
    }
    a
}

/// All eigenvalues of a small dense real matrix (Schur-based iteration).
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>, StabilityError> {
    let dim = a.nrows();
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 100 * dim)
        .ok_or(StabilityError::NoConvergence { dim })?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect())
}

/// Largest real part over the spectrum of the (possibly perturbed) system
/// matrix.
pub fn max_real_part(
    c: &Cascade,
    pert: Option<&PerturbationSpec>,
) -> Result<f64, StabilityError> {
    let mut a = build_system_matrix(c);
    if let Some(p) = pert {
        p.validate(a.nrows())?;
        for &(row, col, value) in &p.entries {
            a[(row, col)] += value;
        }
    }
    Ok(eigenvalues(&a)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// True iff every eigenvalue of the (possibly perturbed) system matrix has a
/// strictly negative real part.
pub fn is_stable(c: &Cascade, pert: Option<&PerturbationSpec>) -> Result<bool, StabilityError> {
    Ok(max_real_part(c, pert)? < 0.0)
}

/// Critical feedback strength `eps_max = beta_1 ... beta_n / (alpha_2 ... alpha_n)`:
/// the cascade is stable for `eps < eps_max` and unstable beyond it.
/// Computed in log-space for overflow safety.
pub fn feedback_stability_bound(c: &Cascade) -> f64 {
    let ln_a_tail: f64 = c.alpha()[1..].iter().map(|a| a.ln()).sum();
    (c.ln_beta_product() - ln_a_tail).exp()
}
