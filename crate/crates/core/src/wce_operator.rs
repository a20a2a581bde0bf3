//! Closed forms for `T = M_w E M_u`.
//!
//! Every operator produced here has the shape `f ↦ a ⊙ E(b ⊙ f)` for some
//! pair of functions `(a, b)`, where `a` is assembled pointwise from the
//! conditional moments cached at build time. The moments are the single
//! source of truth: no closed form recomputes `E`.

use serde::Serialize;

use crate::error::Result;
use crate::measure_space::{
    conditional_expectation, ess_sup_norm, support, FiniteMeasureSpace, IndexSet,
    MeasurableFunction, SubSigmaAlgebra,
};
use crate::operator_algebra::{PolarParts, WeightedOperator};
use crate::tolerance::SUPPORT_TOL;
use crate::Scalar;

const ZERO: Scalar = Scalar::new(0.0, 0.0);

fn real(x: f64) -> Scalar {
    Scalar::new(x, 0.0)
}

/// Block-constant conditional moments of `u` and `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub e_u: MeasurableFunction,
    pub e_w: MeasurableFunction,
    pub e_uw: MeasurableFunction,
    /// `E(|u|²)`, stored with zero imaginary part.
    pub e_abs_u2: MeasurableFunction,
    /// `E(|w|²)`, stored with zero imaginary part.
    pub e_abs_w2: MeasurableFunction,
}

/// The weighted conditional type operator `f ↦ w · E(u · f)`.
#[derive(Debug, Clone)]
pub struct WceOperator {
    space: FiniteMeasureSpace,
    algebra: SubSigmaAlgebra,
    u: MeasurableFunction,
    w: MeasurableFunction,
    moments: Moments,
    /// `S = S(E|u|²)`
    s: IndexSet,
    /// `G = S(E|w|²)`
    g: IndexSet,
    /// `S' = S(E(u))`
    s_prime: IndexSet,
    support_tol: f64,
}

impl WceOperator {
    pub fn new(
        space: &FiniteMeasureSpace,
        algebra: &SubSigmaAlgebra,
        u: &MeasurableFunction,
        w: &MeasurableFunction,
    ) -> Result<Self> {
        Self::with_support_tol(space, algebra, u, w, SUPPORT_TOL)
    }

    pub fn with_support_tol(
        space: &FiniteMeasureSpace,
        algebra: &SubSigmaAlgebra,
        u: &MeasurableFunction,
        w: &MeasurableFunction,
        support_tol: f64,
    ) -> Result<Self> {
        algebra.check(space)?;
        space.check(u, "weight u")?;
        space.check(w, "weight w")?;
        let cond = |f: &MeasurableFunction| conditional_expectation(space, algebra, f);
        let moments = Moments {
            e_u: cond(u)?,
            e_w: cond(w)?,
            e_uw: cond(&u.mul(w)?)?,
            e_abs_u2: cond(&u.abs_sq())?,
            e_abs_w2: cond(&w.abs_sq())?,
        };
        let s = support(&moments.e_abs_u2, support_tol);
        let g = support(&moments.e_abs_w2, support_tol);
        let s_prime = support(&moments.e_u, support_tol);
        Ok(Self {
            space: space.clone(),
            algebra: algebra.clone(),
            u: u.clone(),
            w: w.clone(),
            moments,
            s,
            g,
            s_prime,
            support_tol,
        })
    }

    pub fn space(&self) -> &FiniteMeasureSpace {
        &self.space
    }

    pub fn algebra(&self) -> &SubSigmaAlgebra {
        &self.algebra
    }

    pub fn u(&self) -> &MeasurableFunction {
        &self.u
    }

    pub fn w(&self) -> &MeasurableFunction {
        &self.w
    }

    pub fn moments(&self) -> &Moments {
        &self.moments
    }

    pub fn support_s(&self) -> &IndexSet {
        &self.s
    }

    pub fn support_g(&self) -> &IndexSet {
        &self.g
    }

    pub fn support_s_prime(&self) -> &IndexSet {
        &self.s_prime
    }

    pub fn support_tol(&self) -> f64 {
        self.support_tol
    }

    pub fn point_count(&self) -> usize {
        self.space.point_count()
    }

    /// Whether `S ∩ G` is the whole space.
    pub fn supports_cover_space(&self) -> bool {
        self.s.intersection(&self.g).len() == self.point_count()
    }

    fn e_abs_u2(&self, i: usize) -> f64 {
        self.moments.e_abs_u2.get(i).re
    }

    fn e_abs_w2(&self, i: usize) -> f64 {
        self.moments.e_abs_w2.get(i).re
    }

    fn sandwich(&self, left: Vec<Scalar>, right: &[Scalar]) -> WeightedOperator {
        WeightedOperator::conditional_sandwich(&self.space, &self.algebra, &left, right)
            .expect("sandwich factors are built on the operator's own space")
    }

    /// Pointwise left factor, zero wherever `indicator` is false.
    fn left_factor(&self, indicator: &IndexSet, value: impl Fn(usize) -> Scalar) -> Vec<Scalar> {
        (0..self.point_count())
            .map(|i| {
                if indicator.contains(i) {
                    value(i)
                } else {
                    ZERO
                }
            })
            .collect()
    }

    /// Matrix of `f ↦ w ⊙ E(u ⊙ f)`.
    pub fn to_matrix(&self) -> WeightedOperator {
        self.sandwich(self.w.values().to_vec(), self.u.values())
    }

    /// `‖T‖ = ‖(E|w|²)^{1/2} (E|u|²)^{1/2}‖_∞`.
    pub fn norm_closed_form(&self) -> f64 {
        (0..self.point_count())
            .map(|i| (self.e_abs_u2(i) * self.e_abs_w2(i)).max(0.0).sqrt())
            .fold(0.0, f64::max)
    }

    /// `(T*T)^p = M_{ū (E|u|²)^{p−1} χ_S (E|w|²)^p} E M_u`.
    pub fn tstar_t_power(&self, p: f64) -> WeightedOperator {
        let u = self.u.values();
        let left = self.left_factor(&self.s, |i| {
            u[i].conj() * self.e_abs_u2(i).powf(p - 1.0) * self.e_abs_w2(i).max(0.0).powf(p)
        });
        self.sandwich(left, u)
    }

    /// `(TT*)^p = M_{w (E|w|²)^{p−1} χ_G (E|u|²)^p} E M_{w̄}`.
    pub fn t_tstar_power(&self, p: f64) -> WeightedOperator {
        let w = self.w.values();
        let left = self.left_factor(&self.g, |i| {
            w[i] * self.e_abs_w2(i).powf(p - 1.0) * self.e_abs_u2(i).max(0.0).powf(p)
        });
        self.sandwich(left, &self.w.conj().into_values())
    }

    /// `|T| = M_{(E|w|²/E|u|²)^{1/2} χ_S ū} E M_u` and
    /// `U = M_{(χ_{S∩G} / (E|w|² E|u|²))^{1/2} w} E M_u`.
    pub fn polar_closed_form(&self) -> PolarParts {
        let u = self.u.values();
        let w = self.w.values();
        let modulus_left = self.left_factor(&self.s, |i| {
            u[i].conj() * (self.e_abs_w2(i).max(0.0) / self.e_abs_u2(i)).sqrt()
        });
        let both = self.s.intersection(&self.g);
        let isometry_left = self.left_factor(&both, |i| {
            w[i] / (self.e_abs_w2(i) * self.e_abs_u2(i)).sqrt()
        });
        PolarParts {
            isometry: self.sandwich(isometry_left, u),
            modulus: self.sandwich(modulus_left, u),
        }
    }

    /// Left factor of the Aluthge transform: `χ_S E(uw) ū / E|u|²`.
    fn aluthge_left(&self) -> Vec<Scalar> {
        let u = self.u.values();
        let e_uw = self.moments.e_uw.values();
        self.left_factor(&self.s, |i| e_uw[i] * u[i].conj() / self.e_abs_u2(i))
    }

    /// `T̂ = M_{χ_S E(uw) ū / E|u|²} E M_u`.
    pub fn aluthge_closed_form(&self) -> WeightedOperator {
        self.sandwich(self.aluthge_left(), self.u.values())
    }

    /// The Aluthge transform as a weighted conditional type operator with
    /// the same `u` and algebra.
    pub fn aluthge_wce(&self) -> Result<WceOperator> {
        let w = MeasurableFunction::new(&self.space, self.aluthge_left())?;
        Self::with_support_tol(&self.space, &self.algebra, &self.u, &w, self.support_tol)
    }

    /// `|T*|`, the partial isometry of `T*`, and the Aluthge transform of
    /// `T*`, from the moments of `T`.
    pub fn adjoint_parts_closed_form(&self) -> AdjointParts {
        let u = self.u.values();
        let w = self.w.values();
        let w_bar = self.w.conj().into_values();
        let e_uw = self.moments.e_uw.values();
        let modulus_left = self.left_factor(&self.g, |i| {
            w[i] * (self.e_abs_u2(i).max(0.0) / self.e_abs_w2(i)).sqrt()
        });
        let both = self.s.intersection(&self.g);
        let isometry_left = self.left_factor(&both, |i| {
            u[i].conj() / (self.e_abs_u2(i) * self.e_abs_w2(i)).sqrt()
        });
        let aluthge_left = self.left_factor(&self.g, |i| e_uw[i].conj() * w[i] / self.e_abs_w2(i));
        AdjointParts {
            modulus: self.sandwich(modulus_left, &w_bar),
            isometry: self.sandwich(isometry_left, &w_bar),
            aluthge: self.sandwich(aluthge_left, &w_bar),
        }
    }

    /// `T* = M_ū E M_w̄`.
    pub fn adjoint_wce(&self) -> WceOperator {
        let u = self.w.conj();
        let w = self.u.conj();
        Self::with_support_tol(&self.space, &self.algebra, &u, &w, self.support_tol)
            .expect("conjugated weights live on the same space")
    }

    /// `T² = M_{w E(uw)} E M_u`.
    pub fn square_wce(&self) -> WceOperator {
        let w = self
            .w
            .mul(&self.moments.e_uw)
            .expect("moments share the operator's dimension");
        Self::with_support_tol(&self.space, &self.algebra, &self.u, &w, self.support_tol)
            .expect("product lives on the same space")
    }

    /// `‖E(uw)‖_∞`.
    pub fn spectral_radius_closed_form(&self) -> f64 {
        ess_sup_norm(&self.moments.e_uw)
    }

    /// `E(|u|²) E(|w|²) − |E(uw)|²` pointwise.
    pub fn cauchy_schwarz_gap(&self) -> MeasurableFunction {
        MeasurableFunction::from_raw(
            (0..self.point_count())
                .map(|i| {
                    real(self.e_abs_u2(i) * self.e_abs_w2(i) - self.moments.e_uw.get(i).norm_sqr())
                })
                .collect(),
        )
    }

    /// Serializable snapshot of moments and supports.
    pub fn summary(&self) -> WceSummary {
        let pairs = |f: &MeasurableFunction| f.values().iter().map(|v| [v.re, v.im]).collect();
        WceSummary {
            point_count: self.point_count(),
            block_count: self.algebra.block_count(),
            e_u: pairs(&self.moments.e_u),
            e_w: pairs(&self.moments.e_w),
            e_uw: pairs(&self.moments.e_uw),
            e_abs_u2: self.moments.e_abs_u2.re(),
            e_abs_w2: self.moments.e_abs_w2.re(),
            support_s: self.s.members().to_vec(),
            support_g: self.g.members().to_vec(),
            support_s_prime: self.s_prime.members().to_vec(),
            supports_cover_space: self.supports_cover_space(),
            support_tol: self.support_tol,
        }
    }
}

/// Free-function form of [`WceOperator::new`].
pub fn build_wce(
    space: &FiniteMeasureSpace,
    algebra: &SubSigmaAlgebra,
    u: &MeasurableFunction,
    w: &MeasurableFunction,
) -> Result<WceOperator> {
    WceOperator::new(space, algebra, u, w)
}

/// Closed-form parts of `T*`.
#[derive(Debug, Clone)]
pub struct AdjointParts {
    pub modulus: WeightedOperator,
    pub isometry: WeightedOperator,
    pub aluthge: WeightedOperator,
}

#[derive(Debug, Clone, Serialize)]
pub struct WceSummary {
    pub point_count: usize,
    pub block_count: usize,
    pub e_u: Vec<[f64; 2]>,
    pub e_w: Vec<[f64; 2]>,
    pub e_uw: Vec<[f64; 2]>,
    pub e_abs_u2: Vec<f64>,
    pub e_abs_w2: Vec<f64>,
    pub support_s: Vec<usize>,
    pub support_g: Vec<usize>,
    pub support_s_prime: Vec<usize>,
    pub supports_cover_space: bool,
    pub support_tol: f64,
}
