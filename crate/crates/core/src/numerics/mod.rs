//! Deterministic complex linear algebra and seeded sampling.

mod cmatrix;
mod linalg;
mod rng;

pub use cmatrix::{dot, norm_sqr, normalize_phase, CMatrix, CVec, C64};
pub use linalg::{
    dominant_gen_eigvec, dominant_right_singular, herm_solve, rayleigh_quotient, relative_residual, Cholesky,
    HERMITIAN_TOL, MAX_CONDITION,
};
pub use rng::{cgauss, tag, RngStream};

/// Power ratio in dB.
pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    from_db(dbm) * 1e-3
}
