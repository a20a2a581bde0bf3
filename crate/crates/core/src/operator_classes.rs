//! A-class, ∗-A-class and quasi-∗-A-class membership.
//!
//! Each class is decided twice: definitionally, by a Loewner-order test on
//! the operator matrix (moduli from spectral calculus), and through the
//! pointwise moment criteria for `M_w E M_u`. The verdict reports both
//! without reconciling them, so a disagreement surfaces as an
//! inconsistency rather than being corrected.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure_space::{is_algebra_measurable, IndexSet, MeasurableFunction};
use crate::operator_algebra::{is_normal, loewner_geq, modulus, WeightedOperator};
use crate::tolerance::Tolerances;
use crate::wce_operator::WceOperator;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorClass {
    A,
    StarA,
    QuasiStarA,
}

/// Location and size of the worst violation of a pointwise criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub criterion: &'static str,
    pub point: usize,
    pub block: usize,
    /// `lhs − rhs`; negative means the inequality fails.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassVerdict {
    pub class_name: OperatorClass,
    pub definitional: bool,
    pub sufficient_criterion: Option<bool>,
    pub necessary_criterion: Option<bool>,
    /// `sufficient ⇒ definitional` and `definitional ⇒ necessary`.
    pub consistent: bool,
    pub witness: Option<Witness>,
    /// For the A-class: whether `S = S'`, under which the criterion is an equivalence.
    pub supports_agree: Option<bool>,
    /// How a criterion between non-real quantities was read, when relevant.
    pub interpretation: Option<String>,
    pub criterion_tolerance: f64,
    pub loewner_tolerance: f64,
}

impl ClassVerdict {
    fn new(
        class_name: OperatorClass,
        definitional: bool,
        sufficient: Pointwise,
        necessary: Pointwise,
        tols: &Tolerances,
    ) -> Self {
        let sufficient_ok = sufficient.holds();
        let necessary_ok = necessary.holds();
        let consistent = (!sufficient_ok || definitional) && (!definitional || necessary_ok);
        let witness = sufficient.witness().or_else(|| necessary.witness());
        Self {
            class_name,
            definitional,
            sufficient_criterion: Some(sufficient_ok),
            necessary_criterion: Some(necessary_ok),
            consistent,
            witness,
            supports_agree: None,
            interpretation: None,
            criterion_tolerance: tols.level,
            loewner_tolerance: tols.psd,
        }
    }
}

/// Margins `lhs − rhs` of a pointwise inequality over a set of points.
struct Pointwise {
    name: &'static str,
    tol: f64,
    worst: Option<(usize, f64)>,
    blocks: Vec<usize>,
}

impl Pointwise {
    fn evaluate(
        name: &'static str,
        w: &WceOperator,
        points: impl IntoIterator<Item = usize>,
        tol: f64,
        margin: impl Fn(usize) -> f64,
    ) -> Self {
        let worst = points
            .into_iter()
            .map(|i| (i, margin(i)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let blocks = (0..w.point_count())
            .map(|i| w.algebra().block_of(i))
            .collect();
        Self {
            name,
            tol,
            worst,
            blocks,
        }
    }

    fn holds(&self) -> bool {
        self.worst.is_none_or(|(_, m)| m >= -self.tol)
    }

    fn witness(&self) -> Option<Witness> {
        match self.worst {
            Some((point, margin)) if margin < -self.tol => Some(Witness {
                criterion: self.name,
                point,
                block: self.blocks[point],
                margin,
            }),
            _ => None,
        }
    }
}

/// `|T|² ≤ |T²|`.
pub fn is_a_class_definitional(t: &WeightedOperator, tol: f64) -> Result<bool> {
    let abs = modulus(t)?;
    loewner_geq(&modulus(&t.compose(t)?)?, &abs.compose(&abs)?, tol)
}

/// `|T²| ≥ |T*|²`.
pub fn is_star_a_definitional(t: &WeightedOperator, tol: f64) -> Result<bool> {
    let abs_adj = modulus(&t.adjoint())?;
    loewner_geq(&modulus(&t.compose(t)?)?, &abs_adj.compose(&abs_adj)?, tol)
}

/// `T*|T²|T ≥ T*|T*|²T`.
pub fn is_quasi_star_a_definitional(t: &WeightedOperator, tol: f64) -> Result<bool> {
    let adj = t.adjoint();
    let abs_adj = modulus(&adj)?;
    let lhs = adj.compose(&modulus(&t.compose(t)?)?)?.compose(t)?;
    let rhs = adj.compose(&abs_adj.compose(&abs_adj)?)?.compose(t)?;
    loewner_geq(&lhs, &rhs, tol)
}

struct MomentView<'a> {
    e_u: &'a MeasurableFunction,
    e_w: &'a MeasurableFunction,
    e_uw: &'a MeasurableFunction,
    e_abs_u2: &'a MeasurableFunction,
    e_abs_w2: &'a MeasurableFunction,
}

impl<'a> MomentView<'a> {
    fn of(w: &'a WceOperator) -> Self {
        let m = w.moments();
        Self {
            e_u: &m.e_u,
            e_w: &m.e_w,
            e_uw: &m.e_uw,
            e_abs_u2: &m.e_abs_u2,
            e_abs_w2: &m.e_abs_w2,
        }
    }

    fn uu(&self, i: usize) -> f64 {
        self.e_abs_u2.get(i).re
    }

    fn ww(&self, i: usize) -> f64 {
        self.e_abs_w2.get(i).re
    }

    fn uw(&self, i: usize) -> f64 {
        self.e_uw.get(i).norm()
    }

    /// `(E|w|² / E|u|²)` guarded by `S`.
    fn ratio(&self, s: &IndexSet, i: usize) -> f64 {
        if s.contains(i) {
            self.ww(i).max(0.0) / self.uu(i)
        } else {
            0.0
        }
    }
}

/// Pointwise A-class criteria: `|E(uw)|² ≥ E|u|² E|w|²` on `S`
/// (sufficient) and on `S'` (necessary).
pub fn a_class_criterion(w: &WceOperator, tols: &Tolerances) -> Result<ClassVerdict> {
    let m = MomentView::of(w);
    let margin = |i: usize| m.uw(i).powi(2) - m.uu(i) * m.ww(i);
    let sufficient = Pointwise::evaluate(
        "|E(uw)|^2 >= E(|u|^2)E(|w|^2) on S",
        w,
        w.support_s().members().iter().copied(),
        tols.level,
        margin,
    );
    let necessary = Pointwise::evaluate(
        "|E(uw)|^2 >= E(|u|^2)E(|w|^2) on S'",
        w,
        w.support_s_prime().members().iter().copied(),
        tols.level,
        margin,
    );
    let definitional = is_a_class_definitional(&w.to_matrix(), tols.psd)?;
    let mut verdict =
        ClassVerdict::new(OperatorClass::A, definitional, sufficient, necessary, tols);
    verdict.supports_agree = Some(w.support_s() == w.support_s_prime());
    Ok(verdict)
}

/// Pointwise ∗-A-class criteria.
///
/// The necessary condition is the one obtained by testing `|T²| ≥ |T*|²`
/// against indicators of atoms: `E(|u|²)` enters to the first power, which
/// also keeps both sides homogeneous of degree 2 in `u` and in `w`.
///
/// The sufficient condition compares `u |E(uw)|^{1/2} (E|w|²/E|u|²)^{1/4} χ_S`
/// with `w̄ (E|u|²)^{1/2}`. Both sides are functions that need not be real;
/// where both are real and nonnegative they are compared directly,
/// elsewhere their moduli are compared. A signed comparison of negative
/// values would hold trivially whenever `u` and `w̄` have opposite signs. The verdict's `interpretation` records which reading was used.
pub fn star_a_criteria(w: &WceOperator, tols: &Tolerances) -> Result<ClassVerdict> {
    let m = MomentView::of(w);
    let s = w.support_s();
    let u = w.u().values();
    let wv = w.w().values();
    let real_tol = tols.level;
    let mut direct = 0usize;
    let mut modulus_used = 0usize;
    let sides: Vec<(f64, f64)> = (0..w.point_count())
        .map(|i| {
            let scale =
                m.uw(i).sqrt() * m.ratio(s, i).powf(0.25) * if s.contains(i) { 1.0 } else { 0.0 };
            let lhs = u[i] * scale;
            let rhs = wv[i].conj() * m.uu(i).max(0.0).sqrt();
            let nonnegative = |z: Scalar| z.im.abs() <= real_tol && z.re >= -real_tol;
            if nonnegative(lhs) && nonnegative(rhs) {
                direct += 1;
                (lhs.re, rhs.re)
            } else {
                modulus_used += 1;
                (lhs.norm(), rhs.norm())
            }
        })
        .collect();
    let sufficient = Pointwise::evaluate(
        "u|E(uw)|^(1/2)(E|w|^2/E|u|^2)^(1/4)chi_S >= conj(w)(E|u|^2)^(1/2)",
        w,
        0..w.point_count(),
        tols.level,
        |i| sides[i].0 - sides[i].1,
    );
    let necessary = Pointwise::evaluate(
        "|E(u)|^2|E(uw)|(E|w|^2/E|u|^2)^(1/2)chi_S >= E(|u|^2)|E(w)|^2",
        w,
        0..w.point_count(),
        tols.level,
        |i| {
            m.e_u.get(i).norm_sqr() * m.uw(i) * m.ratio(s, i).sqrt()
                - m.uu(i).max(0.0) * m.e_w.get(i).norm_sqr()
        },
    );
    let definitional = is_star_a_definitional(&w.to_matrix(), tols.psd)?;
    let mut verdict = ClassVerdict::new(
        OperatorClass::StarA,
        definitional,
        sufficient,
        necessary,
        tols,
    );
    verdict.interpretation = Some(match (direct, modulus_used) {
        (_, 0) => "nonnegative values compared directly at every point".to_string(),
        (0, _) => "moduli compared at every point".to_string(),
        (d, k) => {
            format!("nonnegative values compared directly at {d} points, moduli at {k} points")
        }
    });
    Ok(verdict)
}

/// Pointwise quasi-∗-A criteria: `|E(uw)|² ≥ E|u|² E|w|²` everywhere
/// (sufficient) and `|E(uw)|³ (E|w|²)^{1/2} ≥ (E|u|²)^{3/2} (E|w|²)²`
/// (necessary).
pub fn quasi_star_a_criteria(w: &WceOperator, tols: &Tolerances) -> Result<ClassVerdict> {
    let m = MomentView::of(w);
    let sufficient = Pointwise::evaluate(
        "|E(uw)|^2 >= E(|u|^2)E(|w|^2)",
        w,
        0..w.point_count(),
        tols.level,
        |i| m.uw(i).powi(2) - m.uu(i) * m.ww(i),
    );
    let necessary = Pointwise::evaluate(
        "|E(uw)|^3(E|w|^2)^(1/2) >= (E|u|^2)^(3/2)(E|w|^2)^2",
        w,
        0..w.point_count(),
        tols.level,
        |i| {
            let uu = m.uu(i).max(0.0);
            let ww = m.ww(i).max(0.0);
            m.uw(i).powi(3) * ww.sqrt() - uu.powf(1.5) * ww * ww
        },
    );
    let definitional = is_quasi_star_a_definitional(&w.to_matrix(), tols.psd)?;
    Ok(ClassVerdict::new(
        OperatorClass::QuasiStarA,
        definitional,
        sufficient,
        necessary,
        tols,
    ))
}

/// All three verdicts.
pub fn classify(w: &WceOperator, tols: &Tolerances) -> Result<Vec<ClassVerdict>> {
    Ok(vec![
        a_class_criterion(w, tols)?,
        star_a_criteria(w, tols)?,
        quasi_star_a_criteria(w, tols)?,
    ])
}

/// For `T = E M_u`: normality, quasi-∗-A membership and
/// `A`-measurability of `u`, which should all coincide.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityReport {
    pub normal: bool,
    pub quasi_star_a: bool,
    pub u_measurable: bool,
    pub consistent: bool,
}

/// Largest `|w_i − 1|`.
pub fn unit_weight_deviation(w: &WceOperator) -> f64 {
    w.w()
        .values()
        .iter()
        .map(|v| (v - 1.0).norm())
        .fold(0.0, f64::max)
}

pub fn normality_equivalence(w: &WceOperator, tols: &Tolerances) -> Result<NormalityReport> {
    let deviation = unit_weight_deviation(w);
    if deviation > tols.level {
        return Err(Error::WeightNotUnit { deviation });
    }
    let t = w.to_matrix();
    let normal = is_normal(&t, tols.psd)?;
    let quasi_star_a = is_quasi_star_a_definitional(&t, tols.psd)?;
    let u_measurable = is_algebra_measurable(w.u(), w.algebra(), tols.level);
    Ok(NormalityReport {
        normal,
        quasi_star_a,
        u_measurable,
        consistent: normal == quasi_star_a && quasi_star_a == u_measurable,
    })
}

/// `E|u|² E|w|² − |E(uw)|²`.
pub fn cauchy_schwarz_gap(w: &WceOperator) -> MeasurableFunction {
    w.cauchy_schwarz_gap()
}
