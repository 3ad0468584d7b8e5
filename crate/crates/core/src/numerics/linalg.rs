//! Hermitian positive-definite solves and the generalized Rayleigh-quotient
//! maximizer.

use nalgebra::DMatrix;

use super::cmatrix::{dot, norm_sqr, normalize_phase, CMatrix, CVec, C64};
use crate::error::{contract, Error, Result};

/// Relative asymmetry above which an input is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Condition estimate above which a system is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Lower-triangular Cholesky factor `A = L Lᴴ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: CMatrix,
    condition: f64,
}

fn check_hermitian(a: &CMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(contract(format!(
            "expected square matrix, got {}×{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(contract("matrix has non-finite entries"));
    }
    let scale = a.max_abs();
    if scale == 0.0 {
        return Err(Error::IllConditioned(f64::INFINITY));
    }
    let n = a.rows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((a[(r, c)] - a[(c, r)].conj()).norm());
        }
    }
    let rel = worst / scale;
    if rel > HERMITIAN_TOL {
        return Err(Error::NotHermitian(rel));
    }
    Ok(())
}

impl Cholesky {
    pub fn new(a: &CMatrix) -> Result<Self> {
        check_hermitian(a)?;
        let n = a.rows();
        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::IllConditioned(f64::INFINITY));
            }
            let djj = d.sqrt();
            l[(j, j)] = C64::new(djj, 0.0);
            for i in (j + 1)..n {
                // use the lower triangle so a slightly asymmetric input is read consistently
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        let (lo, hi) = (0..n).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
            let d = l[(i, i)].re;
            (lo.min(d), hi.max(d))
        });
        let condition = (hi / lo).powi(2);
        if condition > MAX_CONDITION {
            return Err(Error::IllConditioned(condition));
        }
        Ok(Self { l, condition })
    }

    /// Cheap lower bound on the 2-norm condition number from the pivots.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[C64]) -> CVec {
        let n = self.dim();
        let mut y: CVec = b.iter().copied().collect();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)].re;
        }
        y
    }

    /// Solves `Lᴴ x = y`.
    pub fn backward(&self, y: &[C64]) -> CVec {
        let n = self.dim();
        let mut x: CVec = y.iter().copied().collect();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)].conj() * x[k];
            }
            x[i] = s / self.l[(i, i)].re;
        }
        x
    }

    pub fn solve(&self, b: &[C64]) -> CVec {
        self.backward(&self.forward(b))
    }
}

/// Solves `A x = b` for Hermitian positive-definite `A`.
pub fn herm_solve(a: &CMatrix, b: &[C64]) -> Result<CVec> {
    if b.len() != a.rows() {
        return Err(contract(format!(
            "rhs length {} does not match {}×{} system",
            b.len(),
            a.rows(),
            a.cols()
        )));
    }
    Ok(Cholesky::new(a)?.solve(b))
}

/// `vᴴ A v / vᴴ B v`.
pub fn rayleigh_quotient(a: &CMatrix, b: &CMatrix, v: &[C64]) -> f64 {
    dot(v, &a.mul_vec(v)).re / dot(v, &b.mul_vec(v)).re
}

/// Unit-norm maximizer of the generalized Rayleigh quotient `vᴴAv / vᴴBv`.
///
/// `B` is whitened by its Cholesky factor and the dominant eigenvector of
/// `L⁻¹ A L⁻ᴴ` is mapped back. The returned vector has its first nonzero
/// entry real-positive.
pub fn dominant_gen_eigvec(a: &CMatrix, b: &CMatrix) -> Result<CVec> {
    check_hermitian(a)?;
    if a.rows() != b.rows() {
        return Err(contract("A and B must have equal dimensions"));
    }
    let chol = Cholesky::new(b)?;
    let n = a.rows();

    // C = L⁻¹ A L⁻ᴴ, built column by column: L⁻¹ (A L⁻ᴴ)
    let mut w = CMatrix::zeros(n, n); // W = L⁻¹ A, so C = W L⁻ᴴ = (L⁻¹ Wᴴ)ᴴ
    for c in 0..n {
        let col = chol.forward(&a.column(c));
        for r in 0..n {
            w[(r, c)] = col[r];
        }
    }
    let wh = w.adjoint();
    let mut cmat = DMatrix::<C64>::zeros(n, n);
    for c in 0..n {
        let col = chol.forward(&wh.column(c));
        for r in 0..n {
            // (L⁻¹ Wᴴ)ᴴ
            cmat[(c, r)] = col[r].conj();
        }
    }
    // symmetrize away rounding before the Hermitian eigensolver
    let cmat = (&cmat + cmat.adjoint()) * C64::new(0.5, 0.0);
    let eig = cmat.symmetric_eigen();
    let (best, _) =
        eig.eigenvalues.iter().enumerate().fold(
            (0usize, f64::NEG_INFINITY),
            |acc, (i, &ev)| if ev > acc.1 { (i, ev) } else { acc },
        );
    let y: CVec = (0..n).map(|r| eig.eigenvectors[(r, best)]).collect();
    let mut v = chol.backward(&y);
    normalize_phase(&mut v).ok_or(Error::IllConditioned(f64::INFINITY))?;
    Ok(v)
}

/// Dominant right singular vector of `h` (unit norm, phase convention applied).
pub fn dominant_right_singular(h: &CMatrix) -> Result<CVec> {
    let gram = &h.adjoint() * h;
    let n = gram.rows();
    let scale = gram.max_abs().max(f64::MIN_POSITIVE);
    dominant_gen_eigvec(&gram, &CMatrix::identity(n).scale(C64::new(scale, 0.0)))
}

/// Relative residual `‖A x − b‖ / ‖b‖`.
pub fn relative_residual(a: &CMatrix, x: &[C64], b: &[C64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum();
    (r / norm_sqr(b)).sqrt()
}
