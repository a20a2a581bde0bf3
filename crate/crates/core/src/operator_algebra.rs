//! Dense operators on `L²(μ)` and the numerical oracle.
//!
//! A matrix `A` acting on value vectors is self-adjoint for the weighted
//! inner product iff `D^{1/2} A D^{-1/2}` is Hermitian, where `D = diag(μ)`.
//! Every spectral routine therefore works on that similarity transform
//! (the "standard" coordinates) and maps results back.

use nalgebra::{DMatrix, Schur, SymmetricEigen};

use crate::error::{Error, Result};
use crate::measure_space::{FiniteMeasureSpace, MeasurableFunction, SubSigmaAlgebra};
use crate::tolerance::PSD_TOL;
use crate::Scalar;

/// Iteration cap for the eigen/SVD engines is `ITERATION_FACTOR · n²`.
pub const ITERATION_FACTOR: usize = 100;

/// Eigenvalues of a nominally PSD operator below `PSD_SNAP · λ_max` are
/// treated as exact zeros before any fractional power is taken.
pub const PSD_SNAP: f64 = 1e-11;

/// Singular values below `SV_SNAP · σ_max` are treated as exact zeros in
/// moduli, polar parts and Aluthge transforms.
pub const SV_SNAP: f64 = 1e-12;

const ZERO: Scalar = Scalar::new(0.0, 0.0);

/// Square complex matrix acting on functions over a finite measure space.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedOperator {
    space: FiniteMeasureSpace,
    entries: DMatrix<Scalar>,
}

impl WeightedOperator {
    pub fn new(space: &FiniteMeasureSpace, entries: DMatrix<Scalar>) -> Result<Self> {
        let n = space.point_count();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "operator matrix",
                expected: n,
                found: if entries.nrows() != n {
                    entries.nrows()
                } else {
                    entries.ncols()
                },
            });
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            space: space.clone(),
            entries,
        })
    }

    /// Row-major construction from nested slices.
    pub fn from_rows(space: &FiniteMeasureSpace, rows: &[Vec<Scalar>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter(
                "operator rows must be square".into(),
            ));
        }
        let flat: Vec<Scalar> = rows.iter().flatten().copied().collect();
        Self::new(space, DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn from_real_rows(space: &FiniteMeasureSpace, rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Scalar>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| Scalar::new(v, 0.0)).collect())
            .collect();
        Self::from_rows(space, &rows)
    }

    pub fn identity(space: &FiniteMeasureSpace) -> Self {
        let n = space.point_count();
        Self {
            space: space.clone(),
            entries: DMatrix::identity(n, n),
        }
    }

    pub fn zero(space: &FiniteMeasureSpace) -> Self {
        let n = space.point_count();
        Self {
            space: space.clone(),
            entries: DMatrix::zeros(n, n),
        }
    }

    /// The multiplication operator `M_f`.
    pub fn multiplication(space: &FiniteMeasureSpace, f: &MeasurableFunction) -> Result<Self> {
        space.check(f, "multiplication operator")?;
        let n = space.point_count();
        let mut entries = DMatrix::zeros(n, n);
        for (i, v) in f.values().iter().enumerate() {
            entries[(i, i)] = *v;
        }
        Ok(Self {
            space: space.clone(),
            entries,
        })
    }

    /// Matrix of `f ↦ left ⊙ E(right ⊙ f)`. Entry `(i, j)` is
    /// `left_i · right_j · μ_j / μ(B)` when `i, j` share the block `B`.
    pub fn conditional_sandwich(
        space: &FiniteMeasureSpace,
        algebra: &SubSigmaAlgebra,
        left: &[Scalar],
        right: &[Scalar],
    ) -> Result<Self> {
        algebra.check(space)?;
        let n = space.point_count();
        for side in [left, right] {
            if side.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "conditional sandwich",
                    expected: n,
                    found: side.len(),
                });
            }
        }
        let mu = space.weights();
        let mut entries = DMatrix::zeros(n, n);
        for block in algebra.blocks() {
            let mass: f64 = block.iter().map(|&i| mu[i]).sum();
            for &i in block {
                for &j in block {
                    entries[(i, j)] = left[i] * right[j] * (mu[j] / mass);
                }
            }
        }
        Self::new(space, entries)
    }

    /// Matrix of the conditional expectation `E`.
    pub fn conditional_expectation(
        space: &FiniteMeasureSpace,
        algebra: &SubSigmaAlgebra,
    ) -> Result<Self> {
        let ones = vec![Scalar::new(1.0, 0.0); space.point_count()];
        Self::conditional_sandwich(space, algebra, &ones, &ones)
    }

    pub fn space(&self) -> &FiniteMeasureSpace {
        &self.space
    }

    pub fn entries(&self) -> &DMatrix<Scalar> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, f: &MeasurableFunction) -> Result<MeasurableFunction> {
        self.space.check(f, "operator application")?;
        let v = nalgebra::DVector::from_column_slice(f.values());
        Ok(MeasurableFunction::from_raw(
            (&self.entries * v).as_slice().to_vec(),
        ))
    }

    /// Adjoint for `⟨·,·⟩_μ`: `D⁻¹ · Aᴴ · D`.
    pub fn adjoint(&self) -> Self {
        let mu = self.space.weights();
        let mut entries = self.entries.adjoint();
        for ((i, j), v) in entries
            .iter_mut()
            .enumerate()
            .map(|(k, v)| ((k % mu.len(), k / mu.len()), v))
        {
            *v *= mu[j] / mu[i];
        }
        Self {
            space: self.space.clone(),
            entries,
        }
    }

    fn same_space(&self, other: &Self, context: &'static str) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dim(),
                found: other.dim(),
            });
        }
        if self.space != other.space {
            return Err(Error::InvalidParameter(format!(
                "{context}: operators live on different measure spaces"
            )));
        }
        Ok(())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.same_space(other, "composition")?;
        Ok(Self {
            space: self.space.clone(),
            entries: &self.entries * &other.entries,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_space(other, "sum")?;
        Ok(Self {
            space: self.space.clone(),
            entries: &self.entries + &other.entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_space(other, "difference")?;
        Ok(Self {
            space: self.space.clone(),
            entries: &self.entries - &other.entries,
        })
    }

    pub fn scale(&self, c: Scalar) -> Self {
        Self {
            space: self.space.clone(),
            entries: &self.entries * c,
        }
    }

    /// `T − λI`.
    pub fn shift(&self, lambda: Scalar) -> Self {
        let mut entries = self.entries.clone();
        for i in 0..self.dim() {
            entries[(i, i)] -= lambda;
        }
        Self {
            space: self.space.clone(),
            entries,
        }
    }

    /// Largest entry modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.entries - &other.entries)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Operator norm on `L²(μ)`.
    pub fn norm(&self) -> Result<f64> {
        Ok(singular_values(self)?.first().copied().unwrap_or(0.0))
    }

    /// `D^{1/2} A D^{-1/2}`: unitarily equivalent matrix on `ℂⁿ` with the
    /// standard inner product.
    fn standard(&self) -> DMatrix<Scalar> {
        let root: Vec<f64> = self.space.weights().iter().map(|m| m.sqrt()).collect();
        let mut m = self.entries.clone();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                m[(i, j)] *= root[i] / root[j];
            }
        }
        m
    }

    fn from_standard(space: &FiniteMeasureSpace, mut m: DMatrix<Scalar>) -> Self {
        let root: Vec<f64> = space.weights().iter().map(|m| m.sqrt()).collect();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                m[(i, j)] *= root[j] / root[i];
            }
        }
        Self {
            space: space.clone(),
            entries: m,
        }
    }
}

pub fn apply(t: &WeightedOperator, f: &MeasurableFunction) -> Result<MeasurableFunction> {
    t.apply(f)
}

pub fn adjoint(t: &WeightedOperator) -> WeightedOperator {
    t.adjoint()
}

pub fn compose(a: &WeightedOperator, b: &WeightedOperator) -> Result<WeightedOperator> {
    a.compose(b)
}

fn iteration_cap(n: usize) -> usize {
    (ITERATION_FACTOR * n * n).max(ITERATION_FACTOR)
}

/// Connected components of the graph with an edge `i — j` whenever
/// `m[(i, j)]` or `m[(j, i)]` is nonzero, each sorted. A square matrix is
/// the direct sum of its principal submatrices on these index sets, so the
/// spectral routines below solve one component at a time.
fn components(m: &DMatrix<Scalar>) -> Vec<Vec<usize>> {
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    for j in 0..n {
        for i in 0..n {
            if m[(i, j)] != ZERO {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let root = find(&mut parent, i);
        groups[root].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

fn submatrix(m: &DMatrix<Scalar>, idx: &[usize]) -> DMatrix<Scalar> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

/// Direct sum of per-component matrices, back in the original indexing.
fn scatter(
    n: usize,
    pieces: impl IntoIterator<Item = (Vec<usize>, DMatrix<Scalar>)>,
) -> DMatrix<Scalar> {
    let mut out = DMatrix::from_element(n, n, ZERO);
    for (idx, local) in pieces {
        for (b, &j) in idx.iter().enumerate() {
            for (a, &i) in idx.iter().enumerate() {
                out[(i, j)] = local[(a, b)];
            }
        }
    }
    out
}

/// All `n` eigenvalues with multiplicity, from complex Schur forms.
pub fn eigenvalues(t: &WeightedOperator) -> Result<Vec<Scalar>> {
    // Eigenvalues are similarity invariant; the standard form is better scaled.
    let m = t.standard();
    let mut values = Vec::with_capacity(t.dim());
    for idx in components(&m) {
        let cap = iteration_cap(idx.len());
        let schur = Schur::try_new(submatrix(&m, &idx), f64::EPSILON, cap).ok_or(
            Error::NonConvergence {
                routine: "Schur decomposition",
                iterations: cap,
            },
        )?;
        let (_, tri) = schur.unpack();
        values.extend((0..idx.len()).map(|i| tri[(i, i)]));
    }
    Ok(values)
}

/// Largest asymmetry `max|Â − Âᴴ|` in standard coordinates.
fn asymmetry(m: &DMatrix<Scalar>) -> f64 {
    (m - m.adjoint())
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

fn max_abs(m: &DMatrix<Scalar>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Self-adjoint w.r.t. `⟨·,·⟩_μ`, up to `tol · (1 + max|entry|)`.
pub fn is_hermitian(t: &WeightedOperator, tol: f64) -> bool {
    let m = t.standard();
    asymmetry(&m) <= tol * (1.0 + max_abs(&m))
}

/// Spectral data of a self-adjoint operator.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Ascending real eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal in `⟨·,·⟩_μ`, matching `eigenvalues`.
    pub eigenvectors: Vec<MeasurableFunction>,
}

/// Eigenpairs of a Hermitian matrix, values ascending.
struct HermitianEigen {
    values: Vec<f64>,
    vectors: DMatrix<Scalar>,
}

/// Dense solve of one Hermitian matrix.
fn hermitian_dense(m: DMatrix<Scalar>) -> Result<HermitianEigen> {
    let n = m.nrows();
    let cap = iteration_cap(n);
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, cap).ok_or(Error::NonConvergence {
        routine: "Hermitian eigensolver",
        iterations: cap,
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok(HermitianEigen { values, vectors })
}

fn hermitize(m: &DMatrix<Scalar>) -> DMatrix<Scalar> {
    (m + m.adjoint()) * Scalar::new(0.5, 0.0)
}

/// Per-component eigenpairs of the Hermitian part of `m`.
fn hermitian_blocks(m: &DMatrix<Scalar>) -> Result<Vec<(Vec<usize>, HermitianEigen)>> {
    let sym = hermitize(m);
    components(&sym)
        .into_iter()
        .map(|idx| Ok((idx.clone(), hermitian_dense(submatrix(&sym, &idx))?)))
        .collect()
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
fn hermitian_values(m: &DMatrix<Scalar>) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = hermitian_blocks(m)?
        .into_iter()
        .flat_map(|(_, eig)| eig.values)
        .collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Eigenpairs of the Hermitian part of `m` as full-length vectors.
fn hermitian_eigen(m: &DMatrix<Scalar>) -> Result<HermitianEigen> {
    let n = m.nrows();
    let mut pairs: Vec<(f64, Vec<usize>, DMatrix<Scalar>, usize)> = Vec::with_capacity(n);
    for (idx, eig) in hermitian_blocks(m)? {
        for (k, &value) in eig.values.iter().enumerate() {
            pairs.push((value, idx.clone(), eig.vectors.clone(), k));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut vectors = DMatrix::from_element(n, n, ZERO);
    for (col, (_, idx, local, k)) in pairs.iter().enumerate() {
        for (a, &i) in idx.iter().enumerate() {
            vectors[(i, col)] = local[(a, *k)];
        }
    }
    Ok(HermitianEigen {
        values: pairs.iter().map(|p| p.0).collect(),
        vectors,
    })
}

fn require_hermitian(m: &DMatrix<Scalar>, tol: f64) -> Result<()> {
    let asym = asymmetry(m);
    let bound = tol * (1.0 + max_abs(m));
    if asym > bound {
        return Err(Error::NotSelfAdjoint {
            asymmetry: asym,
            tolerance: bound,
        });
    }
    Ok(())
}

fn to_weighted_vector(
    space: &FiniteMeasureSpace,
    column: impl Iterator<Item = Scalar>,
) -> MeasurableFunction {
    MeasurableFunction::from_raw(
        column
            .zip(space.weights())
            .map(|(v, m)| v / m.sqrt())
            .collect(),
    )
}

/// Eigen-decomposition of a self-adjoint operator.
pub fn self_adjoint_eigensystem(t: &WeightedOperator, tol: f64) -> Result<EigenSystem> {
    let m = t.standard();
    require_hermitian(&m, tol)?;
    let eig = hermitian_eigen(&m)?;
    let eigenvectors = (0..t.dim())
        .map(|k| to_weighted_vector(t.space(), eig.vectors.column(k).iter().copied()))
        .collect();
    Ok(EigenSystem {
        eigenvalues: eig.values,
        eigenvectors,
    })
}

/// `A ≥ B` in the Loewner order of `L²(μ)`: `A − B` is self-adjoint and its
/// smallest eigenvalue is at least `−tol · (1 + ‖A − B‖)`.
pub fn loewner_geq(a: &WeightedOperator, b: &WeightedOperator, tol: f64) -> Result<bool> {
    let d = a.sub(b)?.standard();
    if asymmetry(&d) > tol * (1.0 + max_abs(&d)) {
        return Ok(false);
    }
    let values = hermitian_values(&d)?;
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = values.first().copied().unwrap_or(0.0);
    Ok(min >= -tol * (1.0 + scale))
}

/// Snapped spectral decomposition of a PSD matrix in standard coordinates,
/// one piece per component.
struct PsdSpectrum {
    n: usize,
    blocks: Vec<(Vec<usize>, HermitianEigen)>,
}

impl PsdSpectrum {
    fn new(m: &DMatrix<Scalar>) -> Result<Self> {
        require_hermitian(m, PSD_TOL)?;
        let mut blocks = hermitian_blocks(m)?;
        let all = || {
            blocks
                .iter()
                .flat_map(|(_, eig)| eig.values.iter().copied())
        };
        let scale = all().map(f64::abs).fold(0.0, f64::max);
        let min = all().fold(f64::INFINITY, f64::min);
        let floor = -PSD_TOL * (1.0 + scale);
        if min < floor {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min,
                tolerance: floor.abs(),
            });
        }
        for (_, eig) in blocks.iter_mut() {
            for v in eig.values.iter_mut() {
                if *v <= PSD_SNAP * scale {
                    *v = 0.0;
                }
            }
        }
        Ok(Self {
            n: m.nrows(),
            blocks,
        })
    }

    /// `A^p = V · diag(λ^p) · Vᴴ`.
    fn power(&self, p: f64) -> DMatrix<Scalar> {
        scatter(
            self.n,
            self.blocks.iter().map(|(idx, eig)| {
                let mut scaled = eig.vectors.clone();
                for (k, &lambda) in eig.values.iter().enumerate() {
                    let g = if lambda > 0.0 { lambda.powf(p) } else { 0.0 };
                    scaled.column_mut(k).iter_mut().for_each(|v| *v *= g);
                }
                (idx.clone(), scaled * eig.vectors.adjoint())
            }),
        )
    }
}

/// `A^p` by spectral calculus for a PSD operator `A` and `p > 0`.
pub fn fractional_power(a: &WeightedOperator, p: f64) -> Result<WeightedOperator> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "power must be positive, got {p}"
        )));
    }
    let spectrum = PsdSpectrum::new(&a.standard())?;
    Ok(WeightedOperator::from_standard(
        a.space(),
        spectrum.power(p),
    ))
}

/// Singular triplets `M = Σ σ_k w_k v_kᴴ` of an `r × c` matrix, `σ`
/// descending, `min(r, c)` of them.
///
/// Taken from the Hermitian eigenproblem of `[[0, M], [Mᴴ, 0]]`, whose
/// eigenvalues are `±σ_k` with eigenvectors `(w_k, ±v_k)/√2`; this keeps
/// the absolute accuracy `ε‖M‖` of a Hermitian solver. nalgebra's complex
/// `SVD` is not used because it returns wrong factors for some
/// rank-deficient complex matrices. Vectors belonging to zero singular
/// values are not meaningful.
struct Svd {
    sigma: Vec<f64>,
    left: DMatrix<Scalar>,
    right: DMatrix<Scalar>,
}

fn svd(m: &DMatrix<Scalar>) -> Result<Svd> {
    let (r, c) = m.shape();
    let total = r + c;
    let mut h = DMatrix::from_element(total, total, ZERO);
    h.view_mut((0, r), (r, c)).copy_from(m);
    h.view_mut((r, 0), (c, r)).copy_from(&m.adjoint());
    let eig = hermitian_dense(h)?;
    let k = r.min(c);
    let top = |j: usize| total - 1 - j;
    let scale = Scalar::new(std::f64::consts::SQRT_2, 0.0);
    Ok(Svd {
        sigma: (0..k).map(|j| eig.values[top(j)].max(0.0)).collect(),
        left: DMatrix::from_fn(r, k, |i, j| eig.vectors[(i, top(j))] * scale),
        right: DMatrix::from_fn(c, k, |i, j| eig.vectors[(r + i, top(j))] * scale),
    })
}

/// Per-component SVD of a square matrix with singular values below
/// `SV_SNAP · σ_max` set to zero.
///
/// Functions of `X*X` are taken from `Σ` rather than from the eigenvalues
/// of `X*X`: the latter lose half their relative accuracy near zero, which
/// square roots then amplify.
struct GramSpectrum {
    n: usize,
    blocks: Vec<(Vec<usize>, Svd)>,
    largest: f64,
}

impl GramSpectrum {
    fn new(x: &DMatrix<Scalar>) -> Result<Self> {
        let mut blocks = components(x)
            .into_iter()
            .map(|idx| Ok((idx.clone(), svd(&submatrix(x, &idx))?)))
            .collect::<Result<Vec<_>>>()?;
        let largest = blocks
            .iter()
            .flat_map(|(_, s)| s.sigma.iter().copied())
            .fold(0.0, f64::max);
        for (_, s) in blocks.iter_mut() {
            for v in s.sigma.iter_mut() {
                if *v <= SV_SNAP * largest {
                    *v = 0.0;
                }
            }
        }
        Ok(Self {
            n: x.nrows(),
            blocks,
            largest,
        })
    }

    fn local_power(s: &Svd, p: f64) -> DMatrix<Scalar> {
        let mut scaled = s.right.clone();
        for (k, &sigma) in s.sigma.iter().enumerate() {
            let g = if sigma > 0.0 {
                sigma.powf(2.0 * p)
            } else {
                0.0
            };
            scaled.column_mut(k).iter_mut().for_each(|v| *v *= g);
        }
        scaled * s.right.adjoint()
    }

    /// `Σ_{σ_k > 0} w_k v_kᴴ`.
    fn local_isometry(s: &Svd) -> DMatrix<Scalar> {
        let n = s.left.nrows();
        let mut u = DMatrix::from_element(n, n, ZERO);
        for (k, &sigma) in s.sigma.iter().enumerate() {
            if sigma > 0.0 {
                u += s.left.column(k) * s.right.column(k).adjoint();
            }
        }
        u
    }

    fn map(&self, f: impl Fn(&Svd) -> DMatrix<Scalar>) -> DMatrix<Scalar> {
        scatter(
            self.n,
            self.blocks.iter().map(|(idx, s)| (idx.clone(), f(s))),
        )
    }

    /// `(X*X)^p = V Σ^{2p} Vᴴ`.
    fn power(&self, p: f64) -> DMatrix<Scalar> {
        self.map(|s| Self::local_power(s, p))
    }

    /// The partial isometry of the polar decomposition, `W Vᴴ` on the
    /// nonzero singular values.
    fn isometry(&self) -> DMatrix<Scalar> {
        self.map(Self::local_isometry)
    }
}

/// Singular values in descending order.
pub fn singular_values(t: &WeightedOperator) -> Result<Vec<f64>> {
    let m = t.standard();
    let mut all = Vec::with_capacity(t.dim());
    for idx in components(&m) {
        all.extend(svd(&submatrix(&m, &idx))?.sigma);
    }
    all.sort_by(|a, b| b.total_cmp(a));
    Ok(all)
}

/// `(T*T)^p` for `p > 0`, from the singular values of `T`.
pub fn gram_power(t: &WeightedOperator, p: f64) -> Result<WeightedOperator> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "power must be positive, got {p}"
        )));
    }
    let spectrum = GramSpectrum::new(&t.standard())?;
    Ok(WeightedOperator::from_standard(
        t.space(),
        spectrum.power(p),
    ))
}

/// `|T| = (T*T)^{1/2}`.
pub fn modulus(t: &WeightedOperator) -> Result<WeightedOperator> {
    gram_power(t, 0.5)
}

/// `T = U|T|` with `kernel(U) = kernel(|T|)`.
#[derive(Debug, Clone)]
pub struct PolarParts {
    pub isometry: WeightedOperator,
    pub modulus: WeightedOperator,
}

/// Polar decomposition from the SVD `T = W Σ Vᴴ`: `|T| = V Σ Vᴴ` and
/// `U = W Vᴴ` restricted to the nonzero singular values.
pub fn polar_decompose_numeric(t: &WeightedOperator) -> Result<PolarParts> {
    let spectrum = GramSpectrum::new(&t.standard())?;
    Ok(PolarParts {
        isometry: WeightedOperator::from_standard(t.space(), spectrum.isometry()),
        modulus: WeightedOperator::from_standard(t.space(), spectrum.power(0.5)),
    })
}

/// `‖UU*U − U‖ ≤ tol · (1 + ‖U‖)`.
pub fn is_partial_isometry(u: &WeightedOperator, tol: f64) -> Result<bool> {
    Ok(partial_isometry_residual(u)? <= tol * (1.0 + u.norm()?))
}

/// `‖UU*U − U‖` in the operator norm.
pub fn partial_isometry_residual(u: &WeightedOperator) -> Result<f64> {
    u.compose(&u.adjoint())?.compose(u)?.sub(u)?.norm()
}

/// `T̂ = |T|^{1/2} U |T|^{1/2}`.
pub fn aluthge_numeric(t: &WeightedOperator) -> Result<WeightedOperator> {
    let spectrum = GramSpectrum::new(&t.standard())?;
    let transformed = spectrum.map(|s| {
        let root = GramSpectrum::local_power(s, 0.25);
        &root * GramSpectrum::local_isometry(s) * &root
    });
    Ok(WeightedOperator::from_standard(t.space(), transformed))
}

/// Weighted-orthonormal basis of `{f : ‖Tf‖ ≤ tol · ‖T‖ · ‖f‖}`.
pub fn kernel(t: &WeightedOperator, tol: f64) -> Result<Vec<MeasurableFunction>> {
    let n = t.dim();
    let spectrum = GramSpectrum::new(&t.standard())?;
    let mut basis = Vec::new();
    for (idx, s) in &spectrum.blocks {
        // Complement of the span of the right singular vectors that are kept.
        let k = idx.len();
        let mut range = DMatrix::from_element(k, k, ZERO);
        for (j, &sigma) in s.sigma.iter().enumerate() {
            if spectrum.largest > 0.0 && sigma > tol * spectrum.largest {
                range += s.right.column(j) * s.right.column(j).adjoint();
            }
        }
        let eig = hermitian_dense(hermitize(&range))?;
        for j in (0..k).filter(|&j| eig.values[j] < 0.5) {
            let mut full = vec![ZERO; n];
            for (a, &i) in idx.iter().enumerate() {
                full[i] = eig.vectors[(a, j)];
            }
            basis.push(to_weighted_vector(t.space(), full.into_iter()));
        }
    }
    Ok(basis)
}

/// Weighted-orthonormal basis as columns of a standard-coordinate matrix.
fn standard_basis(space: &FiniteMeasureSpace, basis: &[MeasurableFunction]) -> DMatrix<Scalar> {
    let n = space.point_count();
    let mu = space.weights();
    DMatrix::from_fn(n, basis.len(), |i, k| basis[k].get(i) * mu[i].sqrt())
}

/// `‖P_A − P_B‖` for the orthogonal projections onto the spans of two
/// weighted-orthonormal bases. Zero iff the subspaces coincide; 1 when
/// their dimensions differ.
pub fn subspace_distance(
    space: &FiniteMeasureSpace,
    a: &[MeasurableFunction],
    b: &[MeasurableFunction],
) -> Result<f64> {
    let qa = standard_basis(space, a);
    let qb = standard_basis(space, b);
    let diff = &qa * qa.adjoint() - &qb * qb.adjoint();
    Ok(hermitian_values(&diff)?
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max))
}

/// Smallest principal angle (radians) between two subspaces given by
/// weighted-orthonormal bases; `π/2` when either is trivial.
pub fn smallest_principal_angle(
    space: &FiniteMeasureSpace,
    a: &[MeasurableFunction],
    b: &[MeasurableFunction],
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    let cross = standard_basis(space, a).adjoint() * standard_basis(space, b);
    let cosine = svd(&cross)?.sigma.first().copied().unwrap_or(0.0).min(1.0);
    Ok(cosine.acos())
}

/// `‖TT* − T*T‖ ≤ tol · (1 + ‖T‖²)`.
pub fn is_normal(t: &WeightedOperator, tol: f64) -> Result<bool> {
    let adj = t.adjoint();
    let commutator = t.compose(&adj)?.sub(&adj.compose(t)?)?;
    let norm = t.norm()?;
    Ok(commutator.norm()? <= tol * (1.0 + norm * norm))
}
