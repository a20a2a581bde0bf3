//! Instance files and the reports emitted by the `condexp` binary.
//!
//! Everything here is a plain function of an [`Instance`] and a set of
//! [`Tolerances`]; argument parsing and process exit live in the binary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance_factory::Instance;
use crate::measure_space::{FiniteMeasureSpace, MeasurableFunction, SubSigmaAlgebra};
use crate::operator_algebra::{
    aluthge_numeric, gram_power, kernel, modulus, partial_isometry_residual,
    polar_decompose_numeric, singular_values, subspace_distance, WeightedOperator,
};
use crate::operator_classes::{classify, normality_equivalence, ClassVerdict, OperatorClass};
use crate::spectral_analysis::{
    aluthge_norm_sequence, em_u_point_spectrum, hausdorff_distance, iterated_aluthge,
    joint_spectrum_range_check, numeric_point_spectrum, point_spectrum_closed_form,
    sigma_p_equals_sigma_jp_check, spectral_threshold, spectrum_report, SpectrumReport,
};
use crate::tolerance::Tolerances;
use crate::wce_operator::{WceOperator, WceSummary};
use crate::Scalar;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;

/// Tolerance for the operator identities checked by `verify`.
pub const IDENTITY_TOL: f64 = 1e-8;

/// Lowest admissible Cauchy–Schwarz gap.
pub const GAP_TOL: f64 = 1e-9;

/// Powers of `T*T` and `TT*` compared against spectral calculus.
pub const POWERS: [f64; 4] = [0.5, 1.0, 2.0, 3.5];

/// Number of Aluthge iterates whose norms are compared with `r(T)`.
pub const ALUTHGE_ITERATES: usize = 3;

/// Process exit code for an error raised while loading or analysing an
/// instance.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
        Error::DimensionMismatch { .. }
        | Error::EmptySpace
        | Error::InvalidWeight { .. }
        | Error::NonFinite { .. }
        | Error::InvalidPartition(_)
        | Error::InvalidParameter(_) => EXIT_INVALID_INPUT,
        Error::NotPositiveSemidefinite { .. }
        | Error::NotSelfAdjoint { .. }
        | Error::WeightNotUnit { .. } => EXIT_CHECK_FAILED,
    }
}

/// A complex value as `[re, im]`, or a bare number for a real one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueRepr {
    Pair([f64; 2]),
    Real(f64),
}

impl ValueRepr {
    fn scalar(self) -> Scalar {
        match self {
            Self::Pair([re, im]) => Scalar::new(re, im),
            Self::Real(re) => Scalar::new(re, 0.0),
        }
    }
}

/// On-disk form of an instance. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub weights: Vec<f64>,
    pub blocks: Vec<Vec<usize>>,
    pub u: Vec<ValueRepr>,
    pub w: Vec<ValueRepr>,
}

impl InstanceFile {
    /// Always written as `[re, im]` pairs.
    pub fn from_instance(instance: &Instance) -> Self {
        let pairs = |f: &MeasurableFunction| {
            f.values()
                .iter()
                .map(|v| ValueRepr::Pair([v.re, v.im]))
                .collect()
        };
        Self {
            weights: instance.space.weights().to_vec(),
            blocks: instance.algebra.blocks().to_vec(),
            u: pairs(&instance.u),
            w: pairs(&instance.w),
        }
    }

    /// Validates every invariant of the measure space, partition and weights.
    pub fn into_instance(self) -> Result<Instance> {
        let space = FiniteMeasureSpace::new(self.weights)?;
        let algebra = SubSigmaAlgebra::new(space.point_count(), self.blocks)?;
        let function = |values: Vec<ValueRepr>, name: &'static str| {
            if values.len() != space.point_count() {
                return Err(Error::DimensionMismatch {
                    context: name,
                    expected: space.point_count(),
                    found: values.len(),
                });
            }
            MeasurableFunction::new(&space, values.into_iter().map(ValueRepr::scalar).collect())
        };
        let u = function(self.u, "weight u")?;
        let w = function(self.w, "weight w")?;
        Instance::new(space, algebra, u, w)
    }

    pub fn parse(text: &str) -> Result<Instance> {
        let file: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("malformed instance file: {e}")))?;
        file.into_instance()
    }

    pub fn to_json(instance: &Instance) -> String {
        serde_json::to_string_pretty(&Self::from_instance(instance))
            .expect("finite floats and integers always serialize")
    }
}

/// One pass/fail line of a report. Non-gating checks are informational and
/// never affect the exit code.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub gating: bool,
    /// Measured error or violation count.
    pub value: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn within(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= tolerance,
            gating: true,
            value,
            tolerance,
            detail: None,
        }
    }

    fn flag(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
            gating: true,
            value: if passed { 0.0 } else { 1.0 },
            tolerance: 0.0,
            detail: None,
        }
    }

    fn informational(mut self) -> Self {
        self.gating = false;
        self
    }

    fn detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceSummary {
    pub fingerprint: String,
    pub point_count: usize,
    pub block_count: usize,
    pub unit_w: bool,
}

impl InstanceSummary {
    fn of(instance: &Instance, w: &WceOperator, tols: &Tolerances) -> Self {
        Self {
            fingerprint: instance.fingerprint(),
            point_count: instance.space.point_count(),
            block_count: instance.algebra.block_count(),
            unit_w: crate::operator_classes::unit_weight_deviation(w) <= tols.level,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InspectReport {
    pub instance: InstanceSummary,
    pub moments: WceSummary,
    pub cauchy_schwarz_gap: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub instance: InstanceSummary,
    pub verdicts: Vec<ClassVerdict>,
    pub cauchy_schwarz_gap_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumCommandReport {
    pub instance: InstanceSummary,
    pub spectrum: SpectrumReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormComparison {
    pub closed_form: f64,
    pub numeric: f64,
    pub error: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub instance: InstanceSummary,
    pub tolerances: Tolerances,
    pub norm: NormComparison,
    pub classes: Vec<ClassVerdict>,
    pub spectrum: SpectrumReport,
    pub checks: Vec<Check>,
    /// Names of the gating checks that failed.
    pub failures: Vec<String>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

/// Several `verify` runs, in input order.
#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub count: usize,
    pub failed: usize,
    pub passed: bool,
    pub reports: Vec<VerifyReport>,
}

impl BatchReport {
    pub fn new(reports: Vec<VerifyReport>) -> Self {
        let failed = reports.iter().filter(|r| !r.passed).count();
        Self {
            count: reports.len(),
            failed,
            passed: failed == 0,
            reports,
        }
    }
}

fn operator(instance: &Instance, tols: &Tolerances) -> Result<WceOperator> {
    instance.to_wce_with_support_tol(tols.support)
}

fn gap_values(w: &WceOperator) -> Vec<f64> {
    w.cauchy_schwarz_gap().re()
}

pub fn inspect(instance: &Instance, tols: &Tolerances) -> Result<InspectReport> {
    let w = operator(instance, tols)?;
    Ok(InspectReport {
        instance: InstanceSummary::of(instance, &w, tols),
        moments: w.summary(),
        cauchy_schwarz_gap: gap_values(&w),
    })
}

pub fn classify_instance(instance: &Instance, tols: &Tolerances) -> Result<ClassifyReport> {
    let w = operator(instance, tols)?;
    Ok(ClassifyReport {
        instance: InstanceSummary::of(instance, &w, tols),
        verdicts: classify(&w, tols)?,
        cauchy_schwarz_gap_max: gap_values(&w).into_iter().fold(f64::NEG_INFINITY, f64::max),
    })
}

pub fn spectrum_instance(instance: &Instance, tols: &Tolerances) -> Result<SpectrumCommandReport> {
    let w = operator(instance, tols)?;
    Ok(SpectrumCommandReport {
        instance: InstanceSummary::of(instance, &w, tols),
        spectrum: spectrum_report(&w, tols)?,
    })
}

fn diff(a: &WeightedOperator, b: &WeightedOperator) -> f64 {
    a.max_abs_diff(b)
}

/// `|a − b| ≤ tol · a` when `a` is clearly nonzero, otherwise within the
/// spectral zero threshold.
fn radius_check(name: &str, closed: f64, numeric: f64, tols: &Tolerances, zero_thr: f64) -> Check {
    let tolerance = if closed > zero_thr {
        tols.spec * closed
    } else {
        zero_thr
    };
    Check::within(name, (closed - numeric).abs(), tolerance)
}

/// Runs every closed-form-versus-oracle comparison and theorem-consistency
/// check on one instance.
pub fn verify(instance: &Instance, tols: &Tolerances) -> Result<VerifyReport> {
    let w = operator(instance, tols)?;
    let t = w.to_matrix();
    let mut checks = Vec::new();

    let closed_norm = w.norm_closed_form();
    let numeric_norm = singular_values(&t)?.first().copied().unwrap_or(0.0);
    let norm = NormComparison {
        closed_form: closed_norm,
        numeric: numeric_norm,
        error: (closed_norm - numeric_norm).abs(),
        tolerance: IDENTITY_TOL * (1.0 + numeric_norm),
    };
    checks.push(Check::within("norm", norm.error, norm.tolerance));

    let adj = t.adjoint();
    for p in POWERS {
        checks.push(Check::within(
            format!("power.tstar_t.p{p}"),
            diff(&w.tstar_t_power(p), &gram_power(&t, p)?),
            IDENTITY_TOL,
        ));
        checks.push(Check::within(
            format!("power.t_tstar.p{p}"),
            diff(&w.t_tstar_power(p), &gram_power(&adj, p)?),
            IDENTITY_TOL,
        ));
    }

    let polar = w.polar_closed_form();
    let reconstruction = polar.isometry.compose(&polar.modulus)?.sub(&t)?.norm()?;
    checks.push(Check::within(
        "polar.reconstruction",
        reconstruction,
        IDENTITY_TOL,
    ));
    checks.push(Check::within(
        "polar.partial_isometry",
        partial_isometry_residual(&polar.isometry)?,
        IDENTITY_TOL,
    ));
    let kernel_gap = subspace_distance(
        w.space(),
        &kernel(&polar.isometry, tols.spec)?,
        &kernel(&polar.modulus, tols.spec)?,
    )?;
    checks.push(Check::within(
        "polar.kernel_condition",
        kernel_gap,
        IDENTITY_TOL,
    ));
    checks.push(Check::within(
        "polar.modulus_vs_oracle",
        diff(&polar.modulus, &modulus(&t)?),
        IDENTITY_TOL,
    ));
    let numeric_polar = polar_decompose_numeric(&t)?;
    checks.push(
        Check::within(
            "polar.isometry_vs_oracle",
            diff(&polar.isometry, &numeric_polar.isometry),
            IDENTITY_TOL,
        )
        .informational()
        .detail("the oracle's U inverts small singular values and loses accuracy near the kernel"),
    );

    let aluthge = w.aluthge_closed_form();
    let numeric_aluthge = aluthge_numeric(&t)?;
    checks.push(Check::within(
        "aluthge.vs_oracle",
        diff(&aluthge, &numeric_aluthge),
        IDENTITY_TOL,
    ));
    checks.push(Check::within(
        "aluthge.second_iterate",
        diff(&iterated_aluthge(&t, 2)?, &numeric_aluthge),
        IDENTITY_TOL,
    ));
    checks.push(Check::within(
        "aluthge.closed_form_fixed_point",
        diff(&w.aluthge_wce()?.aluthge_closed_form(), &aluthge),
        IDENTITY_TOL,
    ));

    let parts = w.adjoint_parts_closed_form();
    checks.push(Check::within(
        "adjoint.modulus",
        diff(&parts.modulus, &modulus(&adj)?),
        IDENTITY_TOL,
    ));
    checks.push(Check::within(
        "adjoint.isometry",
        diff(&parts.isometry, &polar.isometry.adjoint()),
        IDENTITY_TOL,
    ));
    checks.push(Check::within(
        "adjoint.reconstruction",
        parts.isometry.compose(&parts.modulus)?.sub(&adj)?.norm()?,
        IDENTITY_TOL,
    ));
    checks.push(Check::within(
        "adjoint.aluthge",
        diff(&parts.aluthge, &aluthge_numeric(&adj)?),
        IDENTITY_TOL,
    ));

    let classes = classify(&w, tols)?;
    for verdict in &classes {
        let name = match verdict.class_name {
            OperatorClass::A => "class.a.consistent",
            OperatorClass::StarA => "class.star_a.consistent",
            OperatorClass::QuasiStarA => "class.quasi_star_a.consistent",
        };
        let mut check =
            Check::flag(name, verdict.consistent).with_tolerance(verdict.loewner_tolerance);
        if let Some(witness) = &verdict.witness {
            check = check.detail(format!(
                "{} fails at point {} (block {}) by {:e}",
                witness.criterion, witness.point, witness.block, -witness.margin
            ));
        }
        checks.push(check);
    }

    let unit_w = crate::operator_classes::unit_weight_deviation(&w) <= tols.level;
    if unit_w {
        let normality = normality_equivalence(&w, tols)?;
        checks.push(
            Check::flag("normality.equivalence", normality.consistent).detail(format!(
                "normal={} quasi_star_a={} u_measurable={}",
                normality.normal, normality.quasi_star_a, normality.u_measurable
            )),
        );
        let emu = em_u_point_spectrum(&w, tols)?;
        checks.push(Check::flag(
            "point_spectrum.emu.nonzero",
            emu.nonzero_parts_equal,
        ));
        checks.push(Check::flag("point_spectrum.emu.contained", emu.contained));
        if let Some(equal) = emu.equal_when_zero_level_nonempty {
            checks.push(Check::flag("point_spectrum.emu.zero_level", equal));
        }
    }

    let spectrum = spectrum_report(&w, tols)?;
    checks.push(Check::within(
        "spectrum.nonzero",
        spectrum.hausdorff_distance,
        spectrum.tolerance,
    ));
    if let Some(equal) = spectrum.full_equality_with_ess_range {
        checks.push(
            Check::flag("spectrum.full_with_zero", equal)
                .informational()
                .detail("0 is an eigenvalue whenever an atom has two or more points"),
        );
    }
    let zero_thr = spectral_threshold(&t, tols)?;
    let closed_points = point_spectrum_closed_form(&w, tols)?;
    let numeric_points = numeric_point_spectrum(&t, tols)?;
    checks.push(Check::within(
        "point_spectrum",
        hausdorff_distance(&closed_points, &numeric_points),
        zero_thr,
    ));
    checks.push(radius_check(
        "spectral_radius",
        spectrum.spectral_radius_closed_form,
        spectrum.spectral_radius_numeric,
        tols,
        zero_thr,
    ));
    let norms = aluthge_norm_sequence(&t, ALUTHGE_ITERATES)?;
    let worst = norms
        .iter()
        .map(|n| (n - spectrum.spectral_radius_closed_form).abs())
        .fold(0.0, f64::max);
    checks.push(radius_check(
        "spectral_radius.aluthge_norms",
        spectrum.spectral_radius_closed_form,
        spectrum.spectral_radius_closed_form + worst,
        tols,
        zero_thr,
    ));

    let joint = sigma_p_equals_sigma_jp_check(&t, tols)?;
    checks.push(
        Check::flag("joint_spectrum.quasi_star_a", joint.holds)
            .with_tolerance(joint.tolerance)
            .detail(format!(
                "quasi_star_a={} sets_equal={}",
                joint.quasi_star_a, joint.sets_equal
            )),
    );
    let range_check = joint_spectrum_range_check(&w, tols)?;
    if let Some(agree) = range_check.nonzero_sets_agree {
        checks.push(
            Check::flag("joint_spectrum.nonzero_ess_range", agree)
                .with_tolerance(range_check.tolerance),
        );
    }
    if let Some(agree) = range_check.full_sets_agree {
        checks.push(
            Check::flag("joint_spectrum.full_ess_range", agree)
                .with_tolerance(range_check.tolerance)
                .informational()
                .detail("0 is an eigenvalue whenever an atom has two or more points"),
        );
    }

    let min_gap = gap_values(&w).into_iter().fold(f64::INFINITY, f64::min);
    checks.push(Check::within("cauchy_schwarz_gap", -min_gap, GAP_TOL));

    let failures: Vec<String> = checks
        .iter()
        .filter(|c| c.gating && !c.passed)
        .map(|c| c.name.clone())
        .collect();
    for name in &failures {
        log::warn!("check {name} failed on instance {}", instance.fingerprint());
    }
    Ok(VerifyReport {
        instance: InstanceSummary::of(instance, &w, tols),
        tolerances: *tols,
        norm,
        classes,
        spectrum,
        passed: failures.is_empty(),
        failures,
        checks,
    })
}

fn fmt_scalar(z: &Scalar) -> String {
    if z.im == 0.0 {
        format!("{:.6}", z.re)
    } else {
        format!("{:.6}{:+.6}i", z.re, z.im)
    }
}

fn fmt_set(set: &[Scalar]) -> String {
    let items: Vec<String> = set.iter().map(fmt_scalar).collect();
    format!("{{{}}}", items.join(", "))
}

fn header(out: &mut String, summary: &InstanceSummary) {
    out.push_str(&format!(
        "instance {}  points {}  blocks {}  w=1 {}\n",
        summary.fingerprint, summary.point_count, summary.block_count, summary.unit_w
    ));
}

pub fn render_inspect(report: &InspectReport) -> String {
    let mut out = String::new();
    header(&mut out, &report.instance);
    let m = &report.moments;
    out.push_str(&format!(
        "{:>5}  {:>22}  {:>22}  {:>22}  {:>12}  {:>12}  {:>11}\n",
        "point", "E(u)", "E(w)", "E(uw)", "E|u|^2", "E|w|^2", "CS gap"
    ));
    for i in 0..m.point_count {
        let c = |v: [f64; 2]| fmt_scalar(&Scalar::new(v[0], v[1]));
        out.push_str(&format!(
            "{:>5}  {:>22}  {:>22}  {:>22}  {:>12.6}  {:>12.6}  {:>11.3e}\n",
            i,
            c(m.e_u[i]),
            c(m.e_w[i]),
            c(m.e_uw[i]),
            m.e_abs_u2[i],
            m.e_abs_w2[i],
            report.cauchy_schwarz_gap[i]
        ));
    }
    out.push_str(&format!(
        "S {:?}\nG {:?}\nS' {:?}\n",
        m.support_s, m.support_g, m.support_s_prime
    ));
    out
}

fn opt(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "yes",
        Some(false) => "no",
        None => "-",
    }
}

pub fn render_classify(report: &ClassifyReport) -> String {
    let mut out = String::new();
    header(&mut out, &report.instance);
    out.push_str(&format!(
        "{:<14} {:>12} {:>10} {:>10} {:>10}\n",
        "class", "definitional", "sufficient", "necessary", "consistent"
    ));
    for v in &report.verdicts {
        out.push_str(&format!(
            "{:<14} {:>12} {:>10} {:>10} {:>10}\n",
            format!("{:?}", v.class_name),
            if v.definitional { "yes" } else { "no" },
            opt(v.sufficient_criterion),
            opt(v.necessary_criterion),
            if v.consistent { "yes" } else { "no" }
        ));
        if let Some(note) = &v.interpretation {
            out.push_str(&format!("  note: {note}\n"));
        }
    }
    out.push_str(&format!(
        "max Cauchy-Schwarz gap {:.3e}\n",
        report.cauchy_schwarz_gap_max
    ));
    out
}

pub fn render_spectrum(report: &SpectrumCommandReport) -> String {
    let mut out = String::new();
    header(&mut out, &report.instance);
    let s = &report.spectrum;
    out.push_str(&format!(
        "closed form nonzero  {}\n",
        fmt_set(&s.closed_form_nonzero)
    ));
    out.push_str(&format!(
        "numeric nonzero      {}\n",
        fmt_set(&s.numeric_nonzero)
    ));
    out.push_str(&format!(
        "0 in spectrum        {} ({})\n",
        s.zero_in_spectrum, s.zero_reason
    ));
    out.push_str(&format!(
        "hausdorff            {:.3e} (tol {:.3e}) {}\n",
        s.hausdorff_distance,
        s.tolerance,
        if s.matches { "match" } else { "MISMATCH" }
    ));
    out.push_str(&format!(
        "spectral radius      {:.12} closed, {:.12} numeric\n",
        s.spectral_radius_closed_form, s.spectral_radius_numeric
    ));
    out
}

pub fn render_verify(report: &VerifyReport) -> String {
    let mut out = String::new();
    header(&mut out, &report.instance);
    out.push_str(&format!(
        "{:<36} {:>6} {:>7} {:>11} {:>11}\n",
        "check", "result", "gating", "value", "tolerance"
    ));
    for c in &report.checks {
        out.push_str(&format!(
            "{:<36} {:>6} {:>7} {:>11.3e} {:>11.3e}\n",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            if c.gating { "yes" } else { "no" },
            c.value,
            c.tolerance
        ));
    }
    out.push_str(if report.passed {
        "all gating checks passed\n"
    } else {
        "FAILED\n"
    });
    out
}

pub fn render_batch(report: &BatchReport) -> String {
    let mut out = String::new();
    for r in &report.reports {
        out.push_str(&format!(
            "{}  {}{}\n",
            r.instance.fingerprint,
            if r.passed { "pass" } else { "FAIL " },
            r.failures.join(", ")
        ));
    }
    out.push_str(&format!(
        "{} of {} instances failed\n",
        report.failed, report.count
    ));
    out
}
