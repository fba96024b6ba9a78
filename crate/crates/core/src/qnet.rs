//! Finite dimensional nets of matrix algebras.
//!
//! A local algebra is a unital `*`-subalgebra of `M_d`, stored as an
//! orthonormal basis for the Hilbert-Schmidt inner product together with the
//! generators it came from. Inclusions, commutants and intersections reduce
//! to small Hermitian eigenvalue problems in the ambient matrix space.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    double_complement, is_shielding, spacelike, MinimalCone, Region, Shielding, ShieldingVariant, Translate,
    Translation,
};
use crate::PROB_TOL;

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance for matrix identities (projections, normalisation, membership).
pub const MATRIX_TOL: f64 = 1e-10;
/// Largest ambient dimension.
pub const DIM_CAP: usize = 64;
/// Largest ambient dimension for commutants in the full matrix algebra.
pub const COMMUTANT_CAP: usize = 16;
/// Eigenvalues closer than this are treated as one spectral value.
pub const SPECTRAL_GAP: f64 = 1e-8;

const SPAN_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// `(1 + cos θ Z + sin θ X) / 2`, the projection on spin up along angle `θ`
/// in the x-z plane.
pub fn spin_projection(theta: f64) -> CMatrix {
    (identity(2) + pauli_z() * c(theta.cos(), 0.) + pauli_x() * c(theta.sin(), 0.)) * c(0.5, 0.)
}

/// `|v><v|` for a (not necessarily normalised) vector.
pub fn ket_bra(v: &[Complex64]) -> CMatrix {
    let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    CMatrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj() / n)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `tr(a† b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hs_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn commute(a: &CMatrix, b: &CMatrix) -> bool {
    hs_norm(&commutator(a, b)) <= MATRIX_TOL * (1.0 + hs_norm(a) * hs_norm(b))
}

pub fn is_hermitian(a: &CMatrix) -> bool {
    a.is_square() && hs_norm(&(a - a.adjoint())) <= MATRIX_TOL * (1.0 + hs_norm(a))
}

pub fn is_projection(p: &CMatrix) -> bool {
    is_hermitian(p) && hs_norm(&(p * p - p)) <= MATRIX_TOL * (1.0 + hs_norm(p))
}

fn real_trace(a: &CMatrix) -> f64 {
    a.trace().re
}

fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * c(0.5, 0.)
}

/// Eigenvalues ascending with the matching orthonormal eigenvectors.
fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(a.nrows(), order.len(), |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Spectral projections of a Hermitian matrix, grouping eigenvalues that
/// differ by less than [`SPECTRAL_GAP`].
pub fn spectral_projections(a: &CMatrix) -> Vec<(f64, CMatrix)> {
    let (values, vectors) = hermitian_eigen(a);
    let d = a.nrows();
    let mut out: Vec<(f64, CMatrix)> = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k] - values[k - 1] > SPECTRAL_GAP {
            let cols = vectors.columns(start, k - start);
            let p = &cols * cols.adjoint();
            let mean = values[start..k].iter().sum::<f64>() / (k - start) as f64;
            out.push((mean, CMatrix::from_fn(d, d, |i, j| p[(i, j)])));
            start = k;
        }
    }
    out
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    hermitian_eigen(a).0.first().copied().unwrap_or(0.0)
}

pub fn random_complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// Haar random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let qr = random_complex_gaussian(d, d, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            let x = r[(i, i)];
            if x.norm() > 0.0 {
                x / x.norm()
            } else {
                c(1., 0.)
            }
        } else {
            c(0., 0.)
        }
    });
    q * phases
}

/// Embed a single-qubit operator acting on bit `site` of an `n`-qubit space.
/// Bit `k` of a basis index is the state of qubit `k`.
pub fn embed_qubit(op: &CMatrix, site: usize, n: usize) -> CMatrix {
    let d = 1usize << n;
    CMatrix::from_fn(d, d, |x, y| {
        if (x ^ y) & !(1 << site) != 0 {
            c(0., 0.)
        } else {
            op[((x >> site) & 1, (y >> site) & 1)]
        }
    })
}

/// Orthonormal family of matrices under the Hilbert-Schmidt inner product.
#[derive(Clone, Debug, Default)]
struct OrthoBasis {
    vectors: Vec<CMatrix>,
}

impl OrthoBasis {
    fn residual(&self, m: &CMatrix) -> CMatrix {
        let mut r = m.clone();
        // two passes of Gram-Schmidt for numerical stability
        for _ in 0..2 {
            for b in &self.vectors {
                let coeff = hs_inner(b, &r);
                r -= b * coeff;
            }
        }
        r
    }

    fn try_add(&mut self, m: &CMatrix) -> bool {
        let n = hs_norm(m);
        if n <= f64::MIN_POSITIVE {
            return false;
        }
        let r = self.residual(&(m / c(n, 0.)));
        let rn = hs_norm(&r);
        if rn <= SPAN_TOL {
            return false;
        }
        self.vectors.push(r / c(rn, 0.));
        true
    }

    fn in_span(&self, m: &CMatrix) -> bool {
        let n = hs_norm(m);
        n <= f64::MIN_POSITIVE || hs_norm(&self.residual(m)) <= SPAN_TOL * n.max(1.0)
    }

    fn project(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(m.nrows(), m.ncols());
        for b in &self.vectors {
            out += b * hs_inner(b, m);
        }
        out
    }
}

/// Unital `*`-subalgebra of `M_d`.
#[derive(Clone, Debug)]
pub struct Subalgebra {
    dim: usize,
    generators: Vec<CMatrix>,
    basis: OrthoBasis,
}

impl Subalgebra {
    /// The algebra generated by `generators`, their adjoints and the unit.
    pub fn generated_by(dim: usize, generators: &[CMatrix]) -> Result<Self> {
        if dim == 0 || dim > DIM_CAP {
            return Err(Error::CapExceeded { what: "matrix dimension", size: dim, cap: DIM_CAP });
        }
        if let Some(g) = generators.iter().find(|g| g.nrows() != dim || g.ncols() != dim) {
            return Err(Error::InvariantViolation(format!(
                "generator of shape {}x{} in M_{dim}",
                g.nrows(),
                g.ncols()
            )));
        }
        let mut letters: Vec<CMatrix> = Vec::new();
        for g in generators {
            letters.push(g.clone());
            if !is_hermitian(g) {
                letters.push(g.adjoint());
            }
        }
        let mut basis = OrthoBasis::default();
        basis.try_add(&identity(dim));
        for g in &letters {
            basis.try_add(g);
        }
        // right multiplication by letters reaches every word
        let mut k = 0;
        while k < basis.vectors.len() && basis.vectors.len() < dim * dim {
            let b = basis.vectors[k].clone();
            for g in &letters {
                basis.try_add(&(&b * g));
            }
            k += 1;
        }
        Ok(Self { dim, generators: letters, basis })
    }

    pub fn scalars(dim: usize) -> Result<Self> {
        Self::generated_by(dim, &[])
    }

    pub fn full(dim: usize) -> Result<Self> {
        let units: Vec<CMatrix> = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| CMatrix::from_fn(dim, dim, |r, s| c(f64::from(u8::from(r == i && s == j)), 0.))))
            .collect();
        Self::generated_by(dim, &units)
    }

    fn from_basis(dim: usize, vectors: Vec<CMatrix>) -> Self {
        let mut basis = OrthoBasis::default();
        for v in &vectors {
            basis.try_add(v);
        }
        Self { dim, generators: basis.vectors.clone(), basis }
    }

    /// Ambient matrix size `d`.
    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    /// Dimension as a complex vector space.
    pub fn linear_dim(&self) -> usize {
        self.basis.vectors.len()
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis.vectors
    }

    pub fn contains(&self, m: &CMatrix) -> bool {
        m.nrows() == self.dim && m.ncols() == self.dim && self.basis.in_span(m)
    }

    pub fn contains_algebra(&self, other: &Subalgebra) -> bool {
        other.generators.iter().all(|g| self.contains(g))
    }

    pub fn same_as(&self, other: &Subalgebra) -> bool {
        self.linear_dim() == other.linear_dim() && self.contains_algebra(other)
    }

    pub fn commutes_with(&self, other: &Subalgebra) -> bool {
        self.generators
            .iter()
            .all(|a| other.generators.iter().all(|b| commute(a, b)))
    }

    pub fn is_abelian(&self) -> bool {
        self.commutes_with(self)
    }

    /// Hilbert-Schmidt projection onto the algebra; for density matrices this
    /// is the trace preserving conditional expectation.
    pub fn project(&self, m: &CMatrix) -> CMatrix {
        self.basis.project(m)
    }

    /// The smallest algebra containing both.
    pub fn join(&self, other: &Subalgebra) -> Result<Subalgebra> {
        let gens: Vec<CMatrix> = self.generators.iter().chain(&other.generators).cloned().collect();
        Self::generated_by(self.dim, &gens)
    }

    /// Elements of `within` commuting with every element of `self`.
    pub fn relative_commutant(&self, within: &Subalgebra) -> Subalgebra {
        let k = within.linear_dim();
        let b = &within.basis.vectors;
        // Gram matrix of the linear map x -> ([g, x])_g in the basis of `within`
        let images: Vec<Vec<CMatrix>> = self
            .generators
            .iter()
            .map(|g| {
                let g = g / c(hs_norm(g).max(f64::MIN_POSITIVE), 0.);
                b.iter().map(|x| commutator(&g, x)).collect()
            })
            .collect();
        let gram = CMatrix::from_fn(k, k, |i, j| images.iter().map(|im| hs_inner(&im[i], &im[j])).sum());
        let (values, vectors) = hermitian_eigen(&gram);
        let null: Vec<CMatrix> = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= 1e-14)
            .map(|(n, _)| {
                let mut m = CMatrix::zeros(self.dim, self.dim);
                for (i, x) in b.iter().enumerate() {
                    m += x * vectors[(i, n)];
                }
                m
            })
            .collect();
        Self::from_basis(self.dim, null)
    }

    /// `A'` inside the full matrix algebra.
    pub fn commutant(&self) -> Result<Subalgebra> {
        if self.dim > COMMUTANT_CAP {
            return Err(Error::CapExceeded { what: "commutant dimension", size: self.dim, cap: COMMUTANT_CAP });
        }
        Ok(self.relative_commutant(&Self::full(self.dim)?))
    }

    pub fn intersection(&self, other: &Subalgebra) -> Subalgebra {
        let a = &self.basis.vectors;
        let k = a.len();
        // P_A P_B P_A restricted to A; the intersection is its eigenvalue 1
        let coeffs: Vec<Vec<Complex64>> = a
            .iter()
            .map(|x| other.basis.vectors.iter().map(|y| hs_inner(y, x)).collect())
            .collect();
        let m = CMatrix::from_fn(k, k, |i, j| {
            coeffs[i].iter().zip(&coeffs[j]).map(|(p, q)| p.conj() * q).sum()
        });
        let (values, vectors) = hermitian_eigen(&m);
        let common: Vec<CMatrix> = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| (v - 1.0).abs() <= 1e-8)
            .map(|(n, _)| {
                let mut out = CMatrix::zeros(self.dim, self.dim);
                for (i, x) in a.iter().enumerate() {
                    out += x * vectors[(i, n)];
                }
                out
            })
            .collect();
        Self::from_basis(self.dim, common)
    }

    pub fn center(&self) -> Subalgebra {
        self.relative_commutant(self)
    }

    pub fn is_factor(&self) -> bool {
        self.center().linear_dim() == 1
    }

    /// Random self-adjoint element with Gaussian coordinates.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for b in &self.basis.vectors {
            m += b * c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal));
        }
        hermitian_part(&m)
    }

    /// A maximal family of mutually orthogonal minimal projections: the
    /// spectral projections of a random self-adjoint element.
    pub fn random_minimal_projections<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<CMatrix> {
        spectral_projections(&self.random_element(rng)).into_iter().map(|(_, p)| p).collect()
    }

    /// Minimal projections from a fixed seed; for abelian algebras this is the
    /// unique set of atoms.
    pub fn minimal_projections(&self) -> Vec<CMatrix> {
        self.random_minimal_projections(&mut ChaCha8Rng::seed_from_u64(0x5eed))
    }

    /// `P A P = C P` and `P` is a nonzero projection in the algebra.
    pub fn is_minimal_projection(&self, p: &CMatrix) -> bool {
        if !is_projection(p) || hs_norm(p) < 0.5 || !self.contains(p) {
            return false;
        }
        let mut span = OrthoBasis::default();
        for b in &self.basis.vectors {
            span.try_add(&(p * b * p));
        }
        span.vectors.len() == 1
    }

    /// Sum of a random subset of a random maximal family of minimal
    /// projections.
    pub fn random_projection<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        let mut p = CMatrix::zeros(self.dim, self.dim);
        for q in self.random_minimal_projections(rng) {
            if rng.random::<bool>() {
                p += q;
            }
        }
        p
    }
}

/// Projection localised in a region.
#[derive(Clone, Debug)]
pub struct Projection {
    matrix: CMatrix,
    region: Region,
}

impl Projection {
    pub fn new(matrix: CMatrix, region: Region) -> Result<Self> {
        if !is_projection(&matrix) {
            return Err(Error::InvariantViolation("matrix is not an orthogonal projection".into()));
        }
        Ok(Self { matrix, region })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn complement(&self) -> Projection {
        Projection { matrix: identity(self.matrix.nrows()) - &self.matrix, region: self.region.clone() }
    }
}

/// Mutually orthogonal projections summing to the unit.
#[derive(Clone, Debug)]
pub struct PartitionOfUnit {
    projections: Vec<CMatrix>,
    region: Region,
}

impl PartitionOfUnit {
    pub fn new(projections: Vec<CMatrix>, region: Region) -> Result<Self> {
        let d = projections
            .first()
            .map(|p| p.nrows())
            .ok_or_else(|| Error::InvariantViolation("empty partition".into()))?;
        if let Some(k) = projections.iter().position(|p| p.nrows() != d || !is_projection(p)) {
            return Err(Error::InvariantViolation(format!("member {k} is not a projection")));
        }
        for (i, p) in projections.iter().enumerate() {
            for q in &projections[i + 1..] {
                if hs_norm(&(p * q)) > MATRIX_TOL * d as f64 {
                    return Err(Error::InvariantViolation("members are not orthogonal".into()));
                }
            }
        }
        let sum = projections.iter().fold(CMatrix::zeros(d, d), |acc, p| acc + p);
        if hs_norm(&(sum - identity(d))) > MATRIX_TOL * d as f64 {
            return Err(Error::InvariantViolation("members do not sum to the unit".into()));
        }
        Ok(Self { projections, region })
    }

    pub fn trivial(d: usize, region: Region) -> Self {
        Self { projections: vec![identity(d)], region }
    }

    pub fn of_projection(p: &Projection) -> Result<Self> {
        Self::new(vec![p.matrix.clone(), p.complement().matrix], p.region.clone())
    }

    pub fn projections(&self) -> &[CMatrix] {
        &self.projections
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn len(&self) -> usize {
        self.projections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projections.is_empty()
    }

    pub fn commutes_with(&self, m: &CMatrix) -> bool {
        self.projections.iter().all(|p| commute(p, m))
    }
}

/// Normalised positive matrix.
#[derive(Clone, Debug)]
pub struct DensityState {
    rho: CMatrix,
}

impl DensityState {
    pub fn new(rho: CMatrix) -> Result<Self> {
        if !is_hermitian(&rho) {
            return Err(Error::InvariantViolation("density matrix is not Hermitian".into()));
        }
        let tr = real_trace(&rho);
        if (tr - 1.0).abs() > MATRIX_TOL {
            return Err(Error::InvariantViolation(format!("density matrix has trace {tr}")));
        }
        let low = min_eigenvalue(&rho);
        if low < -MATRIX_TOL {
            return Err(Error::InvariantViolation(format!("density matrix has eigenvalue {low}")));
        }
        Ok(Self { rho: hermitian_part(&rho) })
    }

    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        Self::new(ket_bra(psi))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { rho: identity(d) / c(d as f64, 0.) }
    }

    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        Self::new(CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            weights.len(),
            weights.iter().map(|&w| c(w, 0.)),
        )))
    }

    /// Two-qubit singlet `(|01> - |10>)/√2`.
    pub fn singlet() -> Self {
        let s = 1.0 / 2f64.sqrt();
        Self { rho: ket_bra(&[c(0., 0.), c(s, 0.), c(-s, 0.), c(0., 0.)]) }
    }

    /// `G G† / tr`, full rank with probability one.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        Self::random_with_rank(d, d, rng)
    }

    pub fn random_with_rank<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Self {
        let g = random_complex_gaussian(d, rank.max(1), rng);
        let m = &g * g.adjoint();
        let tr = real_trace(&m);
        Self { rho: hermitian_part(&(m / c(tr, 0.))) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn expectation(&self, x: &CMatrix) -> Complex64 {
        (&self.rho * x).trace()
    }

    /// Real part of the expectation; for Hermitian `x` this is the value.
    pub fn value(&self, x: &CMatrix) -> f64 {
        self.expectation(x).re
    }

    /// Strict positivity of the state on `alg`.
    pub fn is_faithful_on(&self, alg: &Subalgebra) -> bool {
        min_eigenvalue(&alg.project(&self.rho)) > MATRIX_TOL
    }

    /// Whether all expectations on `alg` agree with `other` within `tol`.
    pub fn agrees_on(&self, other: &DensityState, alg: &Subalgebra, tol: f64) -> bool {
        alg.basis()
            .iter()
            .all(|b| (self.expectation(b) - other.expectation(b)).norm() <= tol)
    }
}

/// State after the non-selective operation `X -> Σ A_k X A_k`.
pub fn nonselective(phi: &DensityState, part: &PartitionOfUnit) -> Result<DensityState> {
    if part.projections()[0].nrows() != phi.dim() {
        return Err(Error::InvariantViolation("partition and state have different dimension".into()));
    }
    let rho = part
        .projections()
        .iter()
        .fold(CMatrix::zeros(phi.dim(), phi.dim()), |acc, a| acc + a * &phi.rho * a);
    Ok(DensityState { rho: hermitian_part(&rho) })
}

/// State after the selective operation with outcome `a`: `X -> φ(aXa)/φ(a)`.
pub fn selective(phi: &DensityState, a: &CMatrix) -> Result<DensityState> {
    let pa = phi.value(a);
    if pa <= 1e-12 {
        return Err(Error::ZeroProbability);
    }
    Ok(DensityState { rho: hermitian_part(&(a * &phi.rho * a / c(pa, 0.))) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoSignaling {
    pub holds: bool,
    pub before: f64,
    pub after: f64,
}

/// Compares `φ(B)` with its value after the non-selective operation.
pub fn check_no_signaling(phi: &DensityState, part: &PartitionOfUnit, b: &CMatrix) -> Result<NoSignaling> {
    let before = phi.value(b);
    let after = nonselective(phi, part)?.value(b);
    Ok(NoSignaling { holds: (before - after).abs() <= PROB_TOL, before, after })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OutcomeIndependence {
    pub holds: bool,
    /// `φ(ab) = φ(a) φ(b)` on the pair algebra.
    pub product: bool,
    pub conditioned: f64,
    pub unconditioned: f64,
}

pub fn check_outcome_independence(phi: &DensityState, a: &CMatrix, b: &CMatrix) -> Result<OutcomeIndependence> {
    let conditioned = selective(phi, a)?.value(b);
    let unconditioned = phi.value(b);
    let product = (phi.value(&(a * b)) - phi.value(a) * unconditioned).abs() <= PROB_TOL;
    Ok(OutcomeIndependence {
        holds: (conditioned - unconditioned).abs() <= PROB_TOL,
        product,
        conditioned,
        unconditioned,
    })
}

/// Result of a conditional requirement: the consequent is only meaningful when
/// the antecedent holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Implication {
    pub antecedent: bool,
    pub consequent: bool,
}

impl Implication {
    pub fn holds(&self) -> bool {
        !self.antecedent || self.consequent
    }
}

#[derive(Clone, Debug)]
struct NetEntry {
    region: Region,
    algebra: Subalgebra,
}

/// Finite collection of regions with local algebras in a common `M_d`.
#[derive(Clone, Debug)]
pub struct FiniteNet {
    dim: usize,
    entries: Vec<NetEntry>,
    global: Subalgebra,
    /// Qubit tensor factors, for nets built from sites.
    sites: Option<Vec<MinimalCone>>,
}

impl FiniteNet {
    /// Net with explicitly generated local algebras. Isotony is verified.
    pub fn new(dim: usize, regions: Vec<(Region, Vec<CMatrix>)>) -> Result<Self> {
        let mut entries: Vec<NetEntry> = Vec::with_capacity(regions.len());
        for (region, gens) in regions {
            if entries.iter().any(|e| e.region == region) {
                return Err(Error::InvariantViolation(format!("region {region} listed twice")));
            }
            entries.push(NetEntry { region, algebra: Subalgebra::generated_by(dim, &gens)? });
        }
        let all: Vec<CMatrix> = entries.iter().flat_map(|e| e.algebra.generators.clone()).collect();
        let global = Subalgebra::generated_by(dim, &all)?;
        let net = Self { dim, entries, global, sites: None };
        if let Some((a, b)) = net.isotony_violation() {
            return Err(Error::InvariantViolation(format!("isotony fails for {a} ⊂ {b}")));
        }
        Ok(net)
    }

    /// Net on qubit sites: site `k` of `sites` is tensor factor `k`, and the
    /// algebra of a region is generated by `local` acting on the sites inside it.
    pub fn qubit_net(sites: &Region, local: &[CMatrix], regions: Vec<Region>) -> Result<Self> {
        let n = sites.len();
        if n == 0 || (1usize << n) > DIM_CAP {
            return Err(Error::CapExceeded { what: "qubit sites", size: n, cap: DIM_CAP.trailing_zeros() as usize });
        }
        let list: Vec<MinimalCone> = sites.iter().collect();
        let spec = regions
            .into_iter()
            .map(|r| {
                let gens = r
                    .iter()
                    .filter_map(|c| list.iter().position(|x| *x == c))
                    .flat_map(|k| local.iter().map(move |g| embed_qubit(g, k, n)))
                    .collect();
                (r, gens)
            })
            .collect();
        let mut net = Self::new(1 << n, spec)?;
        net.sites = Some(list);
        Ok(net)
    }

    /// Abelian net of `±1` fields: each site carries `Z`, so the local algebra of
    /// a region is the algebra of functions of the configuration on it.
    pub fn ising(sites: &Region, regions: Vec<Region>) -> Result<Self> {
        Self::qubit_net(sites, &[pauli_z()], regions)
    }

    /// Abelian net over every double cone contained in `sites`.
    pub fn ising_double_cones(sites: &Region) -> Result<Self> {
        let list: Vec<MinimalCone> = sites.iter().collect();
        let mut regions: Vec<Region> = Vec::new();
        for (k, &a) in list.iter().enumerate() {
            for &b in &list[k..] {
                let r = crate::geometry::join(a, b).into_region();
                if r.is_subset(sites) && !regions.contains(&r) {
                    regions.push(r);
                }
            }
        }
        regions.sort();
        Self::ising(sites, regions)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn regions(&self) -> impl Iterator<Item = &Region> {
        self.entries.iter().map(|e| &e.region)
    }

    pub fn sites(&self) -> Option<&[MinimalCone]> {
        self.sites.as_deref()
    }

    pub fn global(&self) -> &Subalgebra {
        &self.global
    }

    pub fn algebra(&self, v: &Region) -> Result<&Subalgebra> {
        self.entries
            .iter()
            .find(|e| e.region == *v)
            .map(|e| &e.algebra)
            .ok_or_else(|| Error::MissingRegion(v.to_string()))
    }

    /// The algebra generated by the local algebras of net regions inside `v`.
    pub fn generated_within(&self, v: &Region) -> Result<Subalgebra> {
        let gens: Vec<CMatrix> = self
            .entries
            .iter()
            .filter(|e| e.region.is_subset(v))
            .flat_map(|e| e.algebra.generators.clone())
            .collect();
        Subalgebra::generated_by(self.dim, &gens)
    }

    fn isotony_violation(&self) -> Option<(Region, Region)> {
        for a in &self.entries {
            for b in &self.entries {
                if a.region.is_subset(&b.region) && !b.algebra.contains_algebra(&a.algebra) {
                    return Some((a.region.clone(), b.region.clone()));
                }
            }
        }
        None
    }

    pub fn check_isotony(&self) -> bool {
        self.isotony_violation().is_none()
    }

    pub fn check_microcausality(&self) -> bool {
        self.entries.iter().all(|a| {
            self.entries
                .iter()
                .filter(|b| spacelike(&a.region, &b.region))
                .all(|b| a.algebra.commutes_with(&b.algebra))
        })
    }

    /// Algebras of spacelike separated regions share only multiples of the unit.
    pub fn check_intersection_property(&self) -> bool {
        self.entries.iter().all(|a| {
            self.entries
                .iter()
                .filter(|b| spacelike(&a.region, &b.region))
                .all(|b| a.algebra.intersection(&b.algebra).linear_dim() == 1)
        })
    }

    /// `A(V')' ∩ A = A(V)` for every region, with `A(V')` generated by the net
    /// regions spacelike to `V` and `A` the algebra of the whole net.
    pub fn check_haag_duality(&self) -> Result<bool> {
        for e in &self.entries {
            let gens: Vec<CMatrix> = self
                .entries
                .iter()
                .filter(|o| spacelike(&o.region, &e.region))
                .flat_map(|o| o.algebra.generators.clone())
                .collect();
            let outside = Subalgebra::generated_by(self.dim, &gens)?;
            if !outside.relative_commutant(&self.global).same_as(&e.algebra) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `A(V'') = A(V)`: every net region inside `V''` has its algebra in `A(V)`.
    pub fn check_local_primitive_causality(&self) -> bool {
        self.entries.iter().all(|e| {
            let completion = double_complement(&e.region);
            self.entries
                .iter()
                .filter(|o| o.region.is_subset(&completion))
                .all(|o| e.algebra.contains_algebra(&o.algebra))
        })
    }

    /// The regions inside `surface` generate the algebra of the whole net.
    pub fn check_primitive_causality(&self, surface: &Region) -> Result<bool> {
        Ok(self.generated_within(surface)?.same_as(&self.global))
    }

    /// Site permutation covariance: for every region `V` with `gV` in the net,
    /// conjugation by the permutation of tensor factors maps `A(V)` onto `A(gV)`.
    pub fn check_covariance(&self, g: Translation) -> Result<bool> {
        let sites = self
            .sites
            .as_ref()
            .ok_or_else(|| Error::Precondition("covariance needs a net built on sites".into()))?;
        let n = sites.len();
        let image: Vec<Option<usize>> = sites
            .iter()
            .map(|c| {
                let t = c.translate(g);
                sites.iter().position(|x| *x == t)
            })
            .collect();
        // complete the partial injection to a permutation of the factors
        let mut perm: Vec<usize> = vec![usize::MAX; n];
        let mut used = vec![false; n];
        for (k, im) in image.iter().enumerate() {
            if let Some(j) = im {
                perm[k] = *j;
                used[*j] = true;
            }
        }
        let mut free = (0..n).filter(|j| !used[*j]);
        for p in perm.iter_mut().filter(|p| **p == usize::MAX) {
            *p = free.next().expect("counts match");
        }
        let d = self.dim;
        let u = CMatrix::from_fn(d, d, |x, y| {
            let moved = (0..n).fold(0usize, |acc, k| acc | ((y >> k) & 1) << perm[k]);
            c(f64::from(u8::from(moved == x)), 0.)
        });
        for e in &self.entries {
            let moved = e.region.translate(g);
            let Ok(target) = self.algebra(&moved) else { continue };
            let ok = e.algebra.linear_dim() == target.linear_dim()
                && e.algebra.generators.iter().all(|m| target.contains(&(&u * m * u.adjoint())));
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Agreement on `A(V)` implies agreement on `A(V'')`.
    pub fn check_local_determinism(&self, phi1: &DensityState, phi2: &DensityState, v: &Region) -> Result<Implication> {
        let local = self.algebra(v)?;
        let completion = self.generated_within(&double_complement(v))?;
        let antecedent = phi1.agrees_on(phi2, local, PROB_TOL);
        let consequent = phi1.agrees_on(phi2, &completion.join(local)?, PROB_TOL);
        Ok(Implication { antecedent, consequent })
    }

    /// Agreement on `A(V_C)` implies agreement on the projections of `A(V_A)`,
    /// for `V_C` in the past of `V_A` with `V_A ⊂ V_C''`.
    pub fn check_sel(&self, phi1: &DensityState, phi2: &DensityState, vc: &Region, va: &Region) -> Result<Implication> {
        let past = vc.iter().all(|x| va.iter().any(|a| crate::geometry::causally_precedes(x, a)));
        if !past || !va.is_subset(&double_complement(vc)) {
            return Err(Error::Precondition(format!("{vc} does not determine {va}")));
        }
        let antecedent = phi1.agrees_on(phi2, self.algebra(vc)?, PROB_TOL);
        let consequent = phi1.agrees_on(phi2, self.algebra(va)?, PROB_TOL);
        Ok(Implication { antecedent, consequent })
    }
}

/// One minimal projection of the screening region and what it does.
#[derive(Clone, Debug, Serialize)]
pub struct ScreeningEntry {
    /// `tr(CAC)/tr(C)`, the scalar with `CAC = r C`.
    pub r: f64,
    /// `‖CAC - rC‖`.
    pub cac_defect: f64,
    pub probability: f64,
    /// `|φ_C(AB) - φ_C(A) φ_C(B)|`; `None` for zero-probability `C`.
    pub defect: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop1Report {
    pub shielding: Shielding,
    pub local_primitive_causality: bool,
    pub faithful: bool,
    pub a_localized: bool,
    pub b_localized: bool,
    pub entries: Vec<ScreeningEntry>,
    pub max_defect: f64,
}

impl Prop1Report {
    pub fn preconditions(&self) -> bool {
        self.shielding.holds() && self.local_primitive_causality && self.faithful && self.a_localized && self.b_localized
    }

    pub fn holds(&self) -> bool {
        self.max_defect <= PROB_TOL
    }
}

/// `φ_C(X) = φ(CXC)/φ(C)`.
pub fn conditioned_value(phi: &DensityState, cp: &CMatrix, x: &CMatrix) -> Option<f64> {
    let pc = phi.value(cp);
    (pc > 1e-12).then(|| phi.value(&(cp * x * cp)) / pc)
}

/// Screening defect of `a`, `b` under every member of a maximal family of
/// minimal projections of `A(V_C)`. For non-abelian `A(V_C)` the family is
/// drawn with `rng`; repeated calls sample different families.
#[allow(clippy::too_many_arguments)]
pub fn verify_prop1<R: Rng + ?Sized>(
    net: &FiniteNet,
    phi: &DensityState,
    a: &Projection,
    b: &Projection,
    vc: &Region,
    rng: &mut R,
) -> Result<Prop1Report> {
    let shielding = is_shielding(vc, a.region(), b.region(), ShieldingVariant::Quantum)?;
    let alg_c = net.algebra(vc)?;
    let report_base = Prop1Report {
        shielding,
        local_primitive_causality: net.check_local_primitive_causality(),
        faithful: net.entries.iter().all(|e| phi.is_faithful_on(&e.algebra)),
        a_localized: net.algebra(a.region())?.contains(a.matrix()),
        b_localized: net.algebra(b.region())?.contains(b.matrix()),
        entries: Vec::new(),
        max_defect: 0.0,
    };
    let (am, bm) = (a.matrix(), b.matrix());
    let ab = am * bm;
    let mut entries = Vec::new();
    for cp in alg_c.random_minimal_projections(rng) {
        let tr = real_trace(&cp);
        let cac = &cp * am * &cp;
        let r = real_trace(&cac) / tr;
        let cac_defect = hs_norm(&(cac - &cp * c(r, 0.)));
        let defect = conditioned_value(phi, &cp, &ab).map(|pab| {
            let pa = conditioned_value(phi, &cp, am).expect("same condition");
            let pb = conditioned_value(phi, &cp, bm).expect("same condition");
            (pab - pa * pb).abs()
        });
        entries.push(ScreeningEntry { r, cac_defect, probability: phi.value(&cp), defect });
    }
    let max_defect = entries.iter().filter_map(|e| e.defect).fold(0.0, f64::max);
    Ok(Prop1Report { entries, max_defect, ..report_base })
}
