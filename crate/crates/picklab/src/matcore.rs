//! Dense complex linear algebra: Hermitian spectra, PSD tests, norms and the
//! Stein / Lyapunov solvers that sum the geometric operator series appearing
//! in operator-argument Pick matrices.
//!
//! Eigenvalues, SVD and LU come from `nalgebra`; the equation solvers are
//! Kronecker vectorizations on top of its LU.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Largest vectorized system (rows of the Kronecker operator) solved densely.
pub const VEC_CAP: usize = 4096;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A square matrix equal to its adjoint, bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix(ComplexMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMatrix(ComplexMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }
}

impl std::ops::Index<(usize, usize)> for HermitianMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// `dim * eps * spectral_norm(H)`.
    Auto,
    Absolute(f64),
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::Auto
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdVerdict {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    pub tolerance_used: f64,
}

/// How a geometric operator series was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SumMethod {
    ClosedForm,
    SteinSolve,
    TruncatedSeries,
}

impl SumMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SumMethod::ClosedForm => "closed_form",
            SumMethod::SteinSolve => "stein_solve",
            SumMethod::TruncatedSeries => "truncated_series",
        }
    }

    /// The least exact of two methods.
    pub fn combine(self, other: SumMethod) -> SumMethod {
        use SumMethod::*;
        match (self, other) {
            (TruncatedSeries, _) | (_, TruncatedSeries) => TruncatedSeries,
            (SteinSolve, _) | (_, SteinSolve) => SteinSolve,
            _ => ClosedForm,
        }
    }
}

fn require_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

fn require_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Argument("matrix has non-finite entries".into()))
    }
}

/// `(M + M*) / 2`, with the diagonal forced real and mirrored entries exact conjugates.
pub fn hermitize(m: &ComplexMatrix) -> Result<HermitianMatrix> {
    let n = require_square(m)?;
    let mut h = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
        }
    }
    Ok(HermitianMatrix(h))
}

fn eig_iteration_cap(n: usize) -> usize {
    1000 + 200 * n
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(h: &HermitianMatrix) -> Result<Vec<f64>> {
    if h.dim() == 0 {
        return Ok(Vec::new());
    }
    let cap = eig_iteration_cap(h.dim());
    let eig = SymmetricEigen::try_new(h.0.clone(), f64::EPSILON, cap).ok_or(Error::NoConvergence(cap))?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    Ok(vals)
}

/// Full eigendecomposition `H = U diag(w) U*`, eigenvalues unsorted.
pub fn hermitian_eigh(h: &HermitianMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let cap = eig_iteration_cap(h.dim());
    let eig = SymmetricEigen::try_new(h.0.clone(), f64::EPSILON, cap).ok_or(Error::NoConvergence(cap))?;
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

pub fn min_eigenvalue(h: &HermitianMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(h)?.first().copied().unwrap_or(0.0))
}

impl Tolerance {
    pub fn resolve(self, h: &HermitianMatrix, eigenvalues: &[f64]) -> Result<f64> {
        match self {
            Tolerance::Absolute(t) if t < 0.0 || t.is_nan() => {
                Err(Error::Argument(format!("tolerance must be nonnegative, got {t}")))
            }
            Tolerance::Absolute(t) => Ok(t),
            Tolerance::Auto => {
                let norm = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                Ok(h.dim() as f64 * f64::EPSILON * norm)
            }
        }
    }
}

pub fn is_psd(h: &HermitianMatrix, tol: Tolerance) -> Result<PsdVerdict> {
    let vals = hermitian_eigenvalues(h)?;
    let tolerance_used = tol.resolve(h, &vals)?;
    Ok(verdict_from(vals.first().copied().unwrap_or(0.0), tolerance_used))
}

pub fn verdict_from(min_eigenvalue: f64, tolerance_used: f64) -> PsdVerdict {
    PsdVerdict { is_psd: min_eigenvalue >= -tolerance_used, min_eigenvalue, tolerance_used }
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    // Route through the smaller Gram matrix: exact for the norm and far cheaper than an SVD.
    let gram = if m.nrows() <= m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    match hermitize(&gram).and_then(|g| hermitian_eigenvalues(&g)) {
        Ok(vals) => vals.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        Err(_) => m.clone().singular_values().max(),
    }
}

/// Eigenvalues of a general square matrix via the Schur form.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    let n = require_square(m)?;
    require_finite(m)?;
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![m[(0, 0)]]),
        _ => {}
    }
    let cap = eig_iteration_cap(n);
    let schur = Schur::try_new(m.clone(), f64::EPSILON, cap).ok_or(Error::NoConvergence(cap))?;
    let (_, t) = schur.unpack();
    let scale = t.iter().fold(0.0f64, |acc, z| acc.max(z.norm())).max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].norm() > 1e-14 * scale {
            // Unsplit 2x2 block: roots of its characteristic polynomial.
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let half_tr = (a + d) * 0.5;
            let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
            out.push(half_tr + disc);
            out.push(half_tr - disc);
            i += 2;
        } else {
            out.push(t[(i, i)]);
            i += 1;
        }
    }
    Ok(out)
}

pub fn spectral_radius(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().fold(0.0f64, |acc, z| acc.max(z.norm())))
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// `I_p ⊗ M`.
pub fn identity_kron(p: usize, m: &ComplexMatrix) -> ComplexMatrix {
    let (r, c) = m.shape();
    let mut out = ComplexMatrix::zeros(p * r, p * c);
    for k in 0..p {
        out.view_mut((k * r, k * c), (r, c)).copy_from(m);
    }
    out
}

/// Standard basis column `e_k` of length `n`.
pub fn basis_vector(n: usize, k: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(n, 1);
    e[(k, 0)] = ONE;
    e
}

/// Matrix unit `e_a e_b*` of size `n x n`.
pub fn matrix_unit(n: usize, a: usize, b: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(n, n);
    e[(a, b)] = ONE;
    e
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.norm()
}

/// Assemble a block matrix from a rectangular grid of equally shaped blocks.
pub fn assemble_blocks(blocks: &[Vec<ComplexMatrix>]) -> Result<ComplexMatrix> {
    let rows = blocks.len();
    if rows == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    let cols = blocks[0].len();
    let (br, bc) = blocks[0].first().map(|b| b.shape()).unwrap_or((0, 0));
    let mut out = ComplexMatrix::zeros(rows * br, cols * bc);
    for (i, row) in blocks.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::shape("ragged block grid"));
        }
        for (j, b) in row.iter().enumerate() {
            if b.shape() != (br, bc) {
                return Err(Error::shape(format!("block ({i},{j}) is {:?}, expected {:?}", b.shape(), (br, bc))));
            }
            out.view_mut((i * br, j * bc), (br, bc)).copy_from(b);
        }
    }
    Ok(out)
}

/// Block-diagonal direct sum.
pub fn direct_sum(blocks: &[ComplexMatrix]) -> ComplexMatrix {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = ComplexMatrix::zeros(r, c);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), b.shape()).copy_from(b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

/// `P[perm[r], perm[c]]`: row/column `r` of the result is row/column `perm[r]` of `m`.
pub fn permute_symmetric(m: &ComplexMatrix, perm: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(perm.len(), perm.len(), |r, c| m[(perm[r], perm[c])])
}

/// Result of summing `Σ_n A^n Q B*^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteinSolution {
    pub p: ComplexMatrix,
    pub method: SumMethod,
    /// Bound on the Frobenius norm of the neglected remainder; zero for exact solves.
    pub tail_bound: f64,
}

/// Solve `P - A P B* = Q`, i.e. sum `Σ_n A^n Q B*^n`.
pub fn solve_stein(a: &ComplexMatrix, q: &ComplexMatrix, b: &ComplexMatrix) -> Result<SteinSolution> {
    solve_stein_capped(a, q, b, VEC_CAP)
}

/// [`solve_stein`] with an explicit dense-solve cap; above it the series is summed with a certified tail.
pub fn solve_stein_capped(
    a: &ComplexMatrix,
    q: &ComplexMatrix,
    b: &ComplexMatrix,
    cap: usize,
) -> Result<SteinSolution> {
    let m = require_square(a)?;
    let n = require_square(b)?;
    if q.shape() != (m, n) {
        return Err(Error::shape(format!("Stein right-hand side is {:?}, expected {:?}", q.shape(), (m, n))));
    }
    require_finite(a)?;
    require_finite(b)?;
    require_finite(q)?;
    let product = spectral_radius(a)? * spectral_radius(b)?;
    if product >= 1.0 {
        return Err(Error::Divergent(product));
    }
    if m * n > cap {
        return stein_series(a, q, b);
    }
    let bbar = b.map(|z| z.conj());
    let op = ComplexMatrix::identity(m * n, m * n) - kron(&bbar, a);
    let apply = |p: &ComplexMatrix| p - a * p * b.adjoint();
    let p = solve_vectorized(op, q, apply)?;
    Ok(SteinSolution { p, method: SumMethod::SteinSolve, tail_bound: 0.0 })
}

/// Solve `op · vec(P) = vec(Q)` with one step of iterative refinement against `apply`.
fn solve_vectorized(
    op: ComplexMatrix,
    q: &ComplexMatrix,
    apply: impl Fn(&ComplexMatrix) -> ComplexMatrix,
) -> Result<ComplexMatrix> {
    let (m, n) = q.shape();
    let lu = op.lu();
    let rhs = DVector::from_column_slice(q.as_slice());
    let x = lu.solve(&rhs).ok_or(Error::Singular)?;
    let mut p = ComplexMatrix::from_column_slice(m, n, x.as_slice());
    let residual = q - apply(&p);
    if residual.norm() > 1e-14 * q.norm() {
        let r = DVector::from_column_slice(residual.as_slice());
        if let Some(dx) = lu.solve(&r) {
            p += ComplexMatrix::from_column_slice(m, n, dx.as_slice());
        }
    }
    if p.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(p)
}

/// Doubling summation of `Σ_n A^n Q B*^n` with a certified Frobenius tail bound.
///
/// After `K` terms the remainder is `Σ_{m≥1} A^{mK} P_K B*^{mK}`, bounded by
/// `S_K c/(1-c)` with `c = ‖A^K‖‖B^K‖` and `S_K ≥ Σ_{n<K} ‖A^n Q B*^n‖`.
pub fn stein_series(a: &ComplexMatrix, q: &ComplexMatrix, b: &ComplexMatrix) -> Result<SteinSolution> {
    let qn = q.norm();
    let mut p = q.clone();
    let mut ak = a.clone();
    let mut bk = b.clone();
    let mut partial = qn;
    for _ in 0..64 {
        let c = ak.norm() * bk.norm();
        if c < 1.0 {
            let tail = partial * c / (1.0 - c);
            if tail <= 1e-15 * qn.max(f64::MIN_POSITIVE) || c == 0.0 {
                return Ok(SteinSolution { p, method: SumMethod::TruncatedSeries, tail_bound: tail });
            }
        }
        p = &p + &ak * &p * bk.adjoint();
        partial *= 1.0 + c;
        ak = &ak * &ak;
        bk = &bk * &bk;
        if !partial.is_finite() {
            break;
        }
    }
    let c = ak.norm() * bk.norm();
    if c < 1.0 {
        return Ok(SteinSolution { p, method: SumMethod::TruncatedSeries, tail_bound: partial * c / (1.0 - c) });
    }
    Err(Error::Divergent(c))
}

/// Solve `P Z* + Z P = Q`.
///
/// Requires `λ + conj(μ) ≠ 0` for all eigenvalue pairs of `Z`; `P` is Hermitian whenever `Q` is.
pub fn solve_lyapunov_rhp(z: &ComplexMatrix, q: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = require_square(z)?;
    if q.shape() != (n, n) {
        return Err(Error::shape(format!("Lyapunov right-hand side is {:?}, expected {:?}", q.shape(), (n, n))));
    }
    require_finite(q)?;
    let eigs = eigenvalues(z)?;
    let scale = eigs.iter().fold(1.0f64, |acc, l| acc.max(l.norm()));
    for &lambda in &eigs {
        for &mu in &eigs {
            if (lambda + mu.conj()).norm() <= 1e-10 * scale {
                return Err(Error::LyapunovSingular { lambda, mu });
            }
        }
    }
    if n * n > VEC_CAP {
        return Err(Error::budget(format!("Lyapunov system of size {} exceeds {VEC_CAP}", n * n), None));
    }
    let id = ComplexMatrix::identity(n, n);
    let zbar = z.map(|v| v.conj());
    let op = kron(&id, z) + kron(&zbar, &id);
    let apply = |p: &ComplexMatrix| p * z.adjoint() + z * p;
    solve_vectorized(op, q, apply)
}

#[cfg(test)]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) const CZERO: C64 = ZERO;
pub(crate) const CONE: C64 = ONE;
