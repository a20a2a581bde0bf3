//! Spectrum, point spectrum, joint point spectrum and spectral radius of
//! `M_w E M_u`, from the moments and from the operator matrix.
//!
//! In finite dimension `σ(T) = σ_p(T)` is the eigenvalue set and
//! `0 ∈ σ(T)` iff `T` is rank deficient. Sets of numeric eigenvalues are
//! clustered at `tol.spec · (1 + ‖T‖)`, and clusters within that radius of
//! the origin are reported as exactly zero.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure_space::{cluster_values, ess_range, ess_sup_norm, level_set};
use crate::operator_algebra::{
    aluthge_numeric, eigenvalues, kernel, smallest_principal_angle, WeightedOperator,
};
use crate::operator_classes::{is_quasi_star_a_definitional, unit_weight_deviation};
use crate::tolerance::Tolerances;
use crate::wce_operator::WceOperator;
use crate::Scalar;

/// Two kernels intersect nontrivially iff their smallest principal angle
/// is below this many radians.
pub const JOINT_ANGLE_TOL: f64 = 1e-6;

const ZERO: Scalar = Scalar::new(0.0, 0.0);

/// Set semantics on complex scalars.
pub type ScalarSet = Vec<Scalar>;

fn without_zero(set: &[Scalar], zero_tol: f64) -> ScalarSet {
    set.iter()
        .copied()
        .filter(|z| z.norm() > zero_tol)
        .collect()
}

/// Hausdorff distance between finite sets; `0` for two empty sets and
/// `∞` when exactly one is empty.
pub fn hausdorff_distance(a: &[Scalar], b: &[Scalar]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let directed = |x: &[Scalar], y: &[Scalar]| {
        x.iter()
            .map(|p| {
                y.iter()
                    .map(|q| (p - q).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Set equality up to `tol` in Hausdorff distance.
pub fn sets_match(a: &[Scalar], b: &[Scalar], tol: f64) -> bool {
    hausdorff_distance(a, b) <= tol
}

/// Scale-aware spectral threshold `tol.spec · (1 + ‖T‖)`.
pub fn spectral_threshold(t: &WeightedOperator, tols: &Tolerances) -> Result<f64> {
    Ok(tols.spec * (1.0 + t.norm()?))
}

/// Closed-form spectrum: nonzero part from the essential range of `E(uw)`,
/// zero membership from the rank of `T`.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormSpectrum {
    pub nonzero: ScalarSet,
    pub zero_in_spectrum: bool,
    pub rank: usize,
    /// `S ∩ G = X`, the hypothesis under which `σ(T) = ess range E(uw)` is claimed.
    pub supports_cover_space: bool,
}

pub fn spectrum_closed_form(w: &WceOperator, tols: &Tolerances) -> Result<ClosedFormSpectrum> {
    let t = w.to_matrix();
    let null = kernel(&t, tols.spec)?.len();
    Ok(ClosedFormSpectrum {
        nonzero: without_zero(&ess_range(&w.moments().e_uw, tols.level), tols.level),
        zero_in_spectrum: null > 0,
        rank: w.point_count() - null,
        supports_cover_space: w.supports_cover_space(),
    })
}

/// `{λ ≠ 0 : A_{λ,w} ≠ ∅}`, plus `0` when `T` has a nontrivial kernel.
pub fn point_spectrum_closed_form(w: &WceOperator, tols: &Tolerances) -> Result<ScalarSet> {
    let e_uw = &w.moments().e_uw;
    let mut set: ScalarSet = without_zero(&ess_range(e_uw, tols.level), tols.level)
        .into_iter()
        .filter(|&lambda| !level_set(e_uw, lambda, tols.level).is_empty())
        .collect();
    if !kernel(&w.to_matrix(), tols.spec)?.is_empty() {
        set.push(ZERO);
    }
    Ok(set)
}

/// Distinct eigenvalues of `T`, clustered, with near-zero clusters snapped to `0`.
pub fn numeric_point_spectrum(t: &WeightedOperator, tols: &Tolerances) -> Result<ScalarSet> {
    let thr = spectral_threshold(t, tols)?;
    let eig = eigenvalues(t)?;
    let mut set: ScalarSet = cluster_values(eig.iter().copied().filter(|z| z.norm() > thr), thr);
    if eig.iter().any(|z| z.norm() <= thr) {
        set.push(ZERO);
    }
    Ok(set)
}

/// `{λ ∈ σ_p(T) : ker(T − λ) ∩ ker(T* − λ̄) ≠ {0}}`.
pub fn joint_point_spectrum(t: &WeightedOperator, tols: &Tolerances) -> Result<ScalarSet> {
    let adj = t.adjoint();
    let mut joint = Vec::new();
    for lambda in numeric_point_spectrum(t, tols)? {
        let right = kernel(&t.shift(lambda), tols.spec)?;
        let left = kernel(&adj.shift(lambda.conj()), tols.spec)?;
        if smallest_principal_angle(t.space(), &right, &left)? < JOINT_ANGLE_TOL {
            joint.push(lambda);
        }
    }
    Ok(joint)
}

pub fn spectral_radius_closed_form(w: &WceOperator) -> f64 {
    ess_sup_norm(&w.moments().e_uw)
}

/// `max |λ|` over the numeric eigenvalues.
pub fn spectral_radius_numeric(t: &WeightedOperator) -> Result<f64> {
    Ok(eigenvalues(t)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// `Δ_n(T)`, the `n`-fold numeric Aluthge transform.
pub fn iterated_aluthge(t: &WeightedOperator, n: usize) -> Result<WeightedOperator> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "Aluthge iteration count must be >= 1".into(),
        ));
    }
    let mut current = aluthge_numeric(t)?;
    for _ in 1..n {
        current = aluthge_numeric(&current)?;
    }
    Ok(current)
}

/// `‖Δ_k(T)‖` for `k = 1..=n`.
pub fn aluthge_norm_sequence(t: &WeightedOperator, n: usize) -> Result<Vec<f64>> {
    let mut norms = Vec::with_capacity(n);
    let mut current = t.clone();
    for _ in 0..n {
        current = aluthge_numeric(&current)?;
        norms.push(current.norm()?);
    }
    Ok(norms)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub closed_form_nonzero: ScalarSet,
    pub numeric_eigenvalues: Vec<Scalar>,
    pub numeric_nonzero: ScalarSet,
    pub zero_in_spectrum: bool,
    pub zero_reason: String,
    pub rank: usize,
    pub hausdorff_distance: f64,
    pub tolerance: f64,
    /// Nonzero closed-form and numeric sets agree within `tolerance`.
    pub matches: bool,
    pub supports_cover_space: bool,
    /// Whether `σ(T) = ess range E(uw)` (zero included) holds on this
    /// instance; reported only when `S ∩ G = X`.
    pub full_equality_with_ess_range: Option<bool>,
    pub spectral_radius_closed_form: f64,
    pub spectral_radius_numeric: f64,
}

pub fn spectrum_report(w: &WceOperator, tols: &Tolerances) -> Result<SpectrumReport> {
    let t = w.to_matrix();
    let thr = spectral_threshold(&t, tols)?;
    let closed = spectrum_closed_form(w, tols)?;
    let numeric_eigenvalues = eigenvalues(&t)?;
    let numeric_nonzero = cluster_values(
        numeric_eigenvalues
            .iter()
            .copied()
            .filter(|z| z.norm() > thr),
        thr,
    );
    // Compare both sides on the same footing: drop closed-form values the
    // numeric side would have called zero.
    let closed_nonzero = without_zero(&closed.nonzero, thr);
    let hausdorff = hausdorff_distance(&closed_nonzero, &numeric_nonzero);
    let zero_reason = if closed.zero_in_spectrum {
        format!("rank {} < {} points", closed.rank, w.point_count())
    } else {
        "full rank".to_string()
    };
    let full_equality_with_ess_range = closed.supports_cover_space.then(|| {
        let zero_in_range = ess_range(&w.moments().e_uw, tols.level)
            .iter()
            .any(|z| z.norm() <= tols.level);
        zero_in_range == closed.zero_in_spectrum
    });
    Ok(SpectrumReport {
        closed_form_nonzero: closed.nonzero,
        numeric_nonzero,
        zero_in_spectrum: closed.zero_in_spectrum,
        zero_reason,
        rank: closed.rank,
        hausdorff_distance: hausdorff,
        tolerance: thr,
        matches: hausdorff <= thr,
        supports_cover_space: closed.supports_cover_space,
        full_equality_with_ess_range,
        spectral_radius_closed_form: spectral_radius_closed_form(w),
        spectral_radius_numeric: numeric_eigenvalues
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
        numeric_eigenvalues,
    })
}

/// Point spectrum of `E M_u` against the level sets of `E(u)`.
#[derive(Debug, Clone, Serialize)]
pub struct EmuPointSpectrumReport {
    /// `{λ : A_λ ≠ ∅}`.
    pub level_values: ScalarSet,
    pub numeric_point_spectrum: ScalarSet,
    /// `σ_p \ {0} = {λ ≠ 0 : A_λ ≠ ∅}`.
    pub nonzero_parts_equal: bool,
    /// `{λ : A_λ ≠ ∅} ⊆ σ_p`.
    pub contained: bool,
    /// Equality including zero, checked only when `E(u)` vanishes somewhere.
    pub equal_when_zero_level_nonempty: Option<bool>,
}

pub fn em_u_point_spectrum(w: &WceOperator, tols: &Tolerances) -> Result<EmuPointSpectrumReport> {
    let deviation = unit_weight_deviation(w);
    if deviation > tols.level {
        return Err(Error::WeightNotUnit { deviation });
    }
    let t = w.to_matrix();
    let thr = spectral_threshold(&t, tols)?;
    let e_u = &w.moments().e_u;
    let level_values: ScalarSet = ess_range(e_u, tols.level)
        .into_iter()
        .map(|z| if z.norm() <= tols.level { ZERO } else { z })
        .collect();
    let numeric = numeric_point_spectrum(&t, tols)?;
    let nonzero_parts_equal = sets_match(
        &without_zero(&level_values, thr),
        &without_zero(&numeric, thr),
        thr,
    );
    let contained = level_values
        .iter()
        .all(|l| numeric.iter().any(|z| (z - l).norm() <= thr));
    let zero_level = !level_set(e_u, ZERO, tols.level).is_empty();
    let equal_when_zero_level_nonempty =
        zero_level.then(|| sets_match(&level_values, &numeric, thr));
    Ok(EmuPointSpectrumReport {
        level_values,
        numeric_point_spectrum: numeric,
        nonzero_parts_equal,
        contained,
        equal_when_zero_level_nonempty,
    })
}

/// `σ_p = σ_jp` for quasi-∗-A operators.
#[derive(Debug, Clone, Serialize)]
pub struct JointSpectrumCheck {
    pub quasi_star_a: bool,
    pub point_spectrum: ScalarSet,
    pub joint_point_spectrum: ScalarSet,
    pub sets_equal: bool,
    /// Eigenvalues without a joint eigenvector.
    pub counterexamples: ScalarSet,
    /// False only when the operator is quasi-∗-A and the sets differ.
    pub holds: bool,
    pub tolerance: f64,
}

pub fn sigma_p_equals_sigma_jp_check(
    t: &WeightedOperator,
    tols: &Tolerances,
) -> Result<JointSpectrumCheck> {
    let quasi_star_a = is_quasi_star_a_definitional(t, tols.psd)?;
    let thr = spectral_threshold(t, tols)?;
    let point = numeric_point_spectrum(t, tols)?;
    let joint = joint_point_spectrum(t, tols)?;
    let counterexamples: ScalarSet = point
        .iter()
        .copied()
        .filter(|l| !joint.iter().any(|j| (j - l).norm() <= thr))
        .collect();
    let sets_equal = counterexamples.is_empty() && sets_match(&point, &joint, thr);
    Ok(JointSpectrumCheck {
        quasi_star_a,
        holds: !quasi_star_a || sets_equal,
        point_spectrum: point,
        joint_point_spectrum: joint,
        sets_equal,
        counterexamples,
        tolerance: thr,
    })
}

/// Joint point spectrum against `ess range E(uw)` under `|E(uw)|² ≥ E|u|² E|w|²`.
#[derive(Debug, Clone, Serialize)]
pub struct JointSpectrumRangeCheck {
    pub hypothesis: bool,
    pub joint_nonzero: ScalarSet,
    pub ess_range_nonzero: ScalarSet,
    pub point_spectrum_nonzero: ScalarSet,
    /// All three nonzero sets agree; `None` when the hypothesis fails.
    pub nonzero_sets_agree: Option<bool>,
    pub supports_cover_space: bool,
    /// `σ_jp = ess range E(uw)` including zero; evaluated when the
    /// hypothesis holds and `S ∩ G = X`.
    pub full_sets_agree: Option<bool>,
    pub tolerance: f64,
}

pub fn joint_spectrum_range_check(
    w: &WceOperator,
    tols: &Tolerances,
) -> Result<JointSpectrumRangeCheck> {
    let t = w.to_matrix();
    let thr = spectral_threshold(&t, tols)?;
    let hypothesis = w
        .cauchy_schwarz_gap()
        .values()
        .iter()
        .all(|g| g.re <= tols.level);
    let joint = joint_point_spectrum(&t, tols)?;
    let range: ScalarSet = ess_range(&w.moments().e_uw, tols.level)
        .into_iter()
        .map(|z| if z.norm() <= tols.level { ZERO } else { z })
        .collect();
    let point = point_spectrum_closed_form(w, tols)?;
    let joint_nonzero = without_zero(&joint, thr);
    let ess_range_nonzero = without_zero(&range, thr);
    let point_spectrum_nonzero = without_zero(&point, thr);
    let nonzero_sets_agree = hypothesis.then(|| {
        sets_match(&joint_nonzero, &ess_range_nonzero, thr)
            && sets_match(&ess_range_nonzero, &point_spectrum_nonzero, thr)
    });
    let supports_cover_space = w.supports_cover_space();
    let full_sets_agree =
        (hypothesis && supports_cover_space).then(|| sets_match(&joint, &range, thr));
    Ok(JointSpectrumRangeCheck {
        hypothesis,
        joint_nonzero,
        ess_range_nonzero,
        point_spectrum_nonzero,
        nonzero_sets_agree,
        supports_cover_space,
        full_sets_agree,
        tolerance: thr,
    })
}
