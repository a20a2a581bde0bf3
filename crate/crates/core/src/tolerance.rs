//! Numeric tolerances shared by the closed forms and the oracle.

use serde::{Deserialize, Serialize};

/// Support threshold for conditional moments (`S`, `G`, `S'`).
pub const SUPPORT_TOL: f64 = 1e-12;
/// Absolute threshold for level sets, essential-range clustering,
/// measurability, and pointwise criterion inequalities.
pub const LEVEL_TOL: f64 = 1e-9;
/// Relative threshold for Loewner-order, partial-isometry and normality tests.
pub const PSD_TOL: f64 = 1e-8;
/// Relative threshold (scaled by `1 + ‖T‖`) for eigenvalue clustering,
/// zero detection and numeric kernels.
pub const SPEC_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub support: f64,
    pub level: f64,
    pub psd: f64,
    pub spec: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            support: SUPPORT_TOL,
            level: LEVEL_TOL,
            psd: PSD_TOL,
            spec: SPEC_TOL,
        }
    }
}
