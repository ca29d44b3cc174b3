//! Agler decompositions on the polydisk by projection onto an affine set and the PSD cone.
//!
//! Every variant is brought to one form. Rows `r` carry a block size `b` and a
//! tuple `D_1^{(r)}, …, D_d^{(r)}` of `b×b` matrices; with `D_k = ⊕_r D_k^{(r)}`
//! the constraint is `Σ_k (K_k - D_k K_k D_k*) = R` for Hermitian `K_k ⪰ 0`.
//! Each `K ↦ K - D K D*` is invertible when `ρ(D) < 1`, so the affine set is
//! never empty for valid data; infeasibility shows up as a persistent gap
//! between the two sets.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::matcore::{
    basis_vector, direct_sum, frobenius, hermitian_eigh, hermitize, kron, min_eigenvalue, operator_norm,
    spectral_radius, ComplexMatrix, HermitianMatrix, C64, CONE,
};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Cap on `d·n²`, the real dimension of the kernel tuple.
pub const DEFAULT_BUDGET: usize = 20_000;
/// Cap on `n²`, the side of the factored Gram operator.
pub const GRAM_CAP: usize = 1600;
/// Iterations over which a stable gap is read as infeasibility.
pub const STABLE_WINDOW: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub enum AglerVariant {
    /// Scalar points `λ^{(i)} ∈ D^d` and values `f_i`.
    ScalarPoints { points: Vec<Vec<C64>>, values: Vec<C64> },
    /// Strictly contractive tuples `T^{(i)}` on `C` with `X_i: Y -> C`, `Y_i: U -> C`.
    NcLtoa { t: Vec<Vec<ComplexMatrix>>, x: Vec<ComplexMatrix>, y: Vec<ComplexMatrix> },
    /// Strictly contractive tuples `Z^{(i)}` and values `W_i` on `Z`, basis `e_1 … e_κ`.
    NcRd { z: Vec<Vec<ComplexMatrix>>, w: Vec<ComplexMatrix>, kappa: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AglerProblem {
    pub d: usize,
    pub variant: AglerVariant,
    block: usize,
    /// `diag[k] = ⊕_r D_k^{(r)}`.
    diag: Vec<ComplexMatrix>,
    rhs: HermitianMatrix,
}

impl AglerProblem {
    pub fn new(variant: AglerVariant) -> Result<Self> {
        let (d, block, rows, rhs) = match &variant {
            AglerVariant::ScalarPoints { points, values } => {
                if points.is_empty() || points.len() != values.len() {
                    return Err(Error::shape(format!("{} points but {} values", points.len(), values.len())));
                }
                let d = points[0].len();
                for (i, p) in points.iter().enumerate() {
                    if p.len() != d || d == 0 {
                        return Err(Error::shape(format!("point {i} has {} coordinates, expected {d}", p.len())));
                    }
                    if let Some(z) = p.iter().find(|z| z.norm() >= 1.0) {
                        return Err(Error::domain(format!("point {i} has coordinate {z} outside the disk")));
                    }
                }
                let rows: Vec<Vec<ComplexMatrix>> =
                    points.iter().map(|p| p.iter().map(|&z| ComplexMatrix::from_element(1, 1, z)).collect()).collect();
                let n = points.len();
                let rhs = ComplexMatrix::from_fn(n, n, |i, j| CONE - values[i] * values[j].conj());
                (d, 1, rows, rhs)
            }
            AglerVariant::NcLtoa { t, x, y } => {
                let (d, c) = check_tuples(t)?;
                if x.len() != t.len() || y.len() != t.len() {
                    return Err(Error::shape(format!("{} points but {} X and {} Y", t.len(), x.len(), y.len())));
                }
                let (yc, uc) = (x[0].ncols(), y[0].ncols());
                for i in 0..t.len() {
                    if x[i].shape() != (c, yc) || y[i].shape() != (c, uc) {
                        return Err(Error::shape(format!("condition {i}: X must be {c}x{yc} and Y {c}x{uc}")));
                    }
                }
                let blocks: Vec<Vec<ComplexMatrix>> = (0..t.len())
                    .map(|i| (0..t.len()).map(|j| &x[i] * x[j].adjoint() - &y[i] * y[j].adjoint()).collect())
                    .collect();
                (d, c, t.clone(), crate::matcore::assemble_blocks(&blocks)?)
            }
            AglerVariant::NcRd { z, w, kappa } => {
                let (d, g) = check_tuples(z)?;
                if w.len() != z.len() || w.iter().any(|m| m.shape() != (g, g)) {
                    return Err(Error::shape("values must be square on the point space, one per point"));
                }
                if *kappa == 0 || *kappa > g {
                    return Err(Error::Argument(format!("basis size {kappa} must lie in 1..={g}")));
                }
                let mut rows = Vec::with_capacity(z.len() * kappa);
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for (zi, wi) in z.iter().zip(w) {
                    for k in 0..*kappa {
                        let e = basis_vector(g, k);
                        rows.push(zi.clone());
                        ys.push(wi * &e);
                        xs.push(e);
                    }
                }
                let m = rows.len();
                let blocks: Vec<Vec<ComplexMatrix>> = (0..m)
                    .map(|a| (0..m).map(|b| &xs[a] * xs[b].adjoint() - &ys[a] * ys[b].adjoint()).collect())
                    .collect();
                (d, g, rows, crate::matcore::assemble_blocks(&blocks)?)
            }
        };
        let diag = (0..d).map(|k| direct_sum(&rows.iter().map(|r| r[k].clone()).collect::<Vec<_>>())).collect();
        Ok(AglerProblem { d, variant, block, diag, rhs: hermitize(&rhs)? })
    }

    /// Side `n` of each kernel.
    pub fn dim(&self) -> usize {
        self.rhs.dim()
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    /// Work measure `d·n²` compared against the budget.
    pub fn variable_dimension(&self) -> usize {
        self.d * self.dim() * self.dim()
    }
}

fn check_tuples(t: &[Vec<ComplexMatrix>]) -> Result<(usize, usize)> {
    let Some(first) = t.first() else {
        return Err(Error::Argument("at least one point is required".into()));
    };
    let d = first.len();
    let c = first.first().map(|m| m.nrows()).unwrap_or(0);
    if d == 0 || c == 0 {
        return Err(Error::Argument("tuples must be nonempty with positive dimension".into()));
    }
    for (i, tup) in t.iter().enumerate() {
        if tup.len() != d || tup.iter().any(|m| m.shape() != (c, c)) {
            return Err(Error::shape(format!("point {i} must be a {d}-tuple of {c}x{c} matrices")));
        }
        for (k, m) in tup.iter().enumerate() {
            let nrm = operator_norm(m);
            if nrm >= 1.0 {
                return Err(Error::domain(format!("point {i} coordinate {k} has norm {nrm} >= 1")));
            }
        }
    }
    Ok((d, c))
}

/// The Hermitian target `R`.
pub fn constraint_rhs(problem: &AglerProblem) -> &HermitianMatrix {
    &problem.rhs
}

/// `Σ_k (K_k - D_k K_k D_k*)`.
pub fn apply_constraint(problem: &AglerProblem, kernels: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let n = problem.dim();
    if kernels.len() != problem.d || kernels.iter().any(|k| k.shape() != (n, n)) {
        return Err(Error::shape(format!("expected {} kernels of size {n}x{n}", problem.d)));
    }
    Ok(kernels.iter().zip(&problem.diag).fold(ComplexMatrix::zeros(n, n), |acc, (k, d)| acc + k - d * k * d.adjoint()))
}

fn apply_adjoint(problem: &AglerProblem, h: &ComplexMatrix) -> Vec<ComplexMatrix> {
    problem.diag.iter().map(|d| h - d.adjoint() * h * d).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AglerCertificate {
    pub kernels: Vec<HermitianMatrix>,
    pub residual_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AglerStatus {
    FeasibleWithCertificate,
    InfeasibleEvidence,
    Unknown,
}

impl AglerStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            AglerStatus::FeasibleWithCertificate => "feasible_with_certificate",
            AglerStatus::InfeasibleEvidence => "infeasible_evidence",
            AglerStatus::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AglerReport {
    pub status: AglerStatus,
    pub certificate: Option<AglerCertificate>,
    /// Distance between the last affine and cone iterates.
    pub gap_estimate: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionScheme {
    /// Plain alternating projections; the inter-set gap is non-increasing.
    Alternating,
    /// Dykstra's scheme with a correction term on the cone step.
    Dykstra,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AglerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub budget: usize,
    pub scheme: ProjectionScheme,
}

impl Default for AglerOptions {
    fn default() -> Self {
        AglerOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            budget: DEFAULT_BUDGET,
            scheme: ProjectionScheme::Alternating,
        }
    }
}

/// Least-squares projection onto `{K : A(K) = R}` through the factored Gram operator `A A*`.
struct AffineProjector {
    gram: GramSolver,
}

enum GramSolver {
    Cholesky(nalgebra::linalg::Cholesky<C64, nalgebra::Dyn>),
    Pseudo(ComplexMatrix),
}

impl AffineProjector {
    /// `A A* = Σ_k (I - C_k)(I - C_k*)` with `C_k = conj(D_k) ⊗ D_k` acting on column-major `vec`.
    fn new(problem: &AglerProblem) -> Result<Self> {
        let n = problem.dim();
        let nn = n * n;
        let mut g = ComplexMatrix::zeros(nn, nn);
        for d in &problem.diag {
            let c = kron(&d.map(|z| z.conj()), d);
            let dd = d * d.adjoint();
            g += ComplexMatrix::identity(nn, nn) - &c - c.adjoint() + kron(&dd.map(|z| z.conj()), &dd);
        }
        let gram = match nalgebra::linalg::Cholesky::new(g.clone()) {
            Some(ch) => GramSolver::Cholesky(ch),
            None => GramSolver::Pseudo(g.pseudo_inverse(1e-14).map_err(|_| Error::Singular)?),
        };
        Ok(AffineProjector { gram })
    }

    fn project(&self, problem: &AglerProblem, k: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
        let n = problem.dim();
        let resid = apply_constraint(problem, k)? - problem.rhs.as_matrix();
        let v = DVector::from_column_slice(resid.as_slice());
        let sol = match &self.gram {
            GramSolver::Cholesky(ch) => ch.solve(&v),
            GramSolver::Pseudo(p) => p * v,
        };
        let h = ComplexMatrix::from_column_slice(n, n, sol.as_slice());
        let corr = apply_adjoint(problem, &h);
        k.iter().zip(corr).map(|(a, b)| Ok(hermitize(&(a - b))?.into_inner())).collect()
    }
}

fn project_psd(k: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (eigs, vecs) = hermitian_eigh(&hermitize(k)?)?;
    let mut scaled = vecs.clone();
    for (j, &l) in eigs.iter().enumerate() {
        let s = C64::new(l.max(0.0), 0.0);
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= s);
    }
    Ok(hermitize(&(scaled * vecs.adjoint()))?.into_inner())
}

fn tuple_distance(a: &[ComplexMatrix], b: &[ComplexMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| frobenius(&(x - y)).powi(2)).sum::<f64>().sqrt()
}

/// One iteration's monitored quantities, exposed for tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepTrace {
    pub gap: f64,
    pub residual: f64,
}

/// Search for PSD kernels solving the constraint.
pub fn solve_feasibility(problem: &AglerProblem, opts: &AglerOptions) -> Result<AglerReport> {
    solve_traced(problem, opts, |_| {})
}

/// [`solve_feasibility`] with a callback per sweep.
pub fn solve_traced(
    problem: &AglerProblem,
    opts: &AglerOptions,
    mut trace: impl FnMut(SweepTrace),
) -> Result<AglerReport> {
    let n = problem.dim();
    if problem.variable_dimension() > opts.budget || n * n > GRAM_CAP {
        return Err(Error::budget(
            format!(
                "kernel tuple has d·n² = {} (budget {}), Gram side n² = {} (cap {GRAM_CAP})",
                problem.variable_dimension(),
                opts.budget,
                n * n
            ),
            None,
        ));
    }
    let proj = AffineProjector::new(problem)?;
    let zero = vec![ComplexMatrix::zeros(n, n); problem.d];
    // Least-squares feasibility of the linear system itself.
    let y0 = proj.project(problem, &zero)?;
    let affine_resid = frobenius(&(apply_constraint(problem, &y0)? - problem.rhs.as_matrix()));
    if affine_resid > opts.tol {
        return Ok(AglerReport {
            status: AglerStatus::InfeasibleEvidence,
            certificate: None,
            gap_estimate: affine_resid,
            iterations: 0,
        });
    }

    let mut x = zero.clone();
    let mut q = zero;
    let mut gaps: Vec<f64> = Vec::new();
    for it in 1..=opts.max_iter {
        let y = proj.project(problem, &x)?;
        let shifted: Vec<ComplexMatrix> = match opts.scheme {
            ProjectionScheme::Alternating => y.clone(),
            ProjectionScheme::Dykstra => y.iter().zip(&q).map(|(a, b)| a + b).collect(),
        };
        let xn: Vec<ComplexMatrix> = shifted.iter().map(project_psd).collect::<Result<_>>()?;
        if opts.scheme == ProjectionScheme::Dykstra {
            q = shifted.iter().zip(&xn).map(|(s, p)| s - p).collect();
        }
        let gap = tuple_distance(&y, &xn);
        let residual = frobenius(&(apply_constraint(problem, &xn)? - problem.rhs.as_matrix()));
        trace(SweepTrace { gap, residual });
        if residual <= opts.tol {
            let kernels = xn.iter().map(hermitize).collect::<Result<Vec<_>>>()?;
            return Ok(AglerReport {
                status: AglerStatus::FeasibleWithCertificate,
                certificate: Some(AglerCertificate { kernels, residual_norm: residual, iterations: it }),
                gap_estimate: gap,
                iterations: it,
            });
        }
        // The affine iterate is exact on the constraint; accept it when already PSD within tol.
        let yh: Vec<HermitianMatrix> = y.iter().map(hermitize).collect::<Result<_>>()?;
        if yh.iter().map(min_eigenvalue).collect::<Result<Vec<_>>>()?.iter().all(|&m| m >= -opts.tol) {
            let residual = frobenius(&(apply_constraint(problem, &y)? - problem.rhs.as_matrix()));
            if residual <= opts.tol {
                return Ok(AglerReport {
                    status: AglerStatus::FeasibleWithCertificate,
                    certificate: Some(AglerCertificate { kernels: yh, residual_norm: residual, iterations: it }),
                    gap_estimate: gap,
                    iterations: it,
                });
            }
        }
        gaps.push(gap);
        if gaps.len() > STABLE_WINDOW {
            let then = gaps[gaps.len() - 1 - STABLE_WINDOW];
            if gap > 10.0 * opts.tol && (then - gap).abs() <= 1e-4 * gap {
                return Ok(AglerReport {
                    status: AglerStatus::InfeasibleEvidence,
                    certificate: None,
                    gap_estimate: gap,
                    iterations: it,
                });
            }
        }
        x = xn;
    }
    Ok(AglerReport {
        status: AglerStatus::Unknown,
        certificate: None,
        gap_estimate: gaps.last().copied().unwrap_or(0.0),
        iterations: opts.max_iter,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateCheck {
    /// Frobenius norm of `A(K) - R`.
    pub residual: f64,
    pub min_eigenvalues: Vec<f64>,
}

impl CertificateCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.residual <= tol && self.min_eigenvalues.iter().all(|&m| m >= -tol)
    }
}

/// Recompute the residual and kernel spectra from scratch.
pub fn verify_certificate(problem: &AglerProblem, cert: &AglerCertificate) -> Result<CertificateCheck> {
    let ks: Vec<ComplexMatrix> = cert.kernels.iter().map(|k| k.as_matrix().clone()).collect();
    let residual = frobenius(&(apply_constraint(problem, &ks)? - problem.rhs.as_matrix()));
    let min_eigenvalues = cert.kernels.iter().map(min_eigenvalue).collect::<Result<_>>()?;
    Ok(CertificateCheck { residual, min_eigenvalues })
}

/// Largest spectral radius among the coordinate matrices, for diagnostics.
pub fn max_spectral_radius(problem: &AglerProblem) -> Result<f64> {
    problem.diag.iter().try_fold(0.0, |acc: f64, d| Ok(acc.max(spectral_radius(d)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disk_np::{pick_frd, pick_ltoa};
    use crate::matcore::{c, Tolerance};
    use crate::oracle::{eval_ltoa, sample_blaschke, sample_contractive_poly, SampleKind};
    use crate::random::{disk_point, gaussian_matrix, seeded, with_norm};
    use proptest::prelude::*;

    fn scalar(points: Vec<Vec<C64>>, values: Vec<C64>) -> AglerProblem {
        AglerProblem::new(AglerVariant::ScalarPoints { points, values }).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let p = scalar(vec![vec![c(0., 0.), c(0., 0.)], vec![c(0.5, 0.), c(0., 0.)]], vec![c(0., 0.), c(0., 0.)]);
        assert!(constraint_rhs(&p).as_matrix().iter().all(|z| *z == CONE));
        let p = scalar(vec![vec![c(0., 0.); 2]; 2], vec![c(0., 0.), c(0.5, 0.)]);
        let expect = ComplexMatrix::from_row_slice(2, 2, &[c(1., 0.), c(1., 0.), c(1., 0.), c(0.75, 0.)]);
        assert_eq!(constraint_rhs(&p).as_matrix(), &expect);

        let mut rng = seeded(1);
        let t = vec![vec![with_norm(&mut rng, 2, 2, 0.5)]; 2];
        let x = vec![gaussian_matrix(&mut rng, 2, 1), gaussian_matrix(&mut rng, 2, 1)];
        let p = AglerProblem::new(AglerVariant::NcLtoa { t, x: x.clone(), y: x }).unwrap();
        assert!(constraint_rhs(&p).as_matrix().norm() < 1e-15);
    }

    #[test]
    fn apply_constraint_examples() {
        let mut rng = seeded(2);
        let pts: Vec<Vec<C64>> = (0..3).map(|_| vec![disk_point(&mut rng, 0.9)]).collect();
        let p = scalar(pts.clone(), vec![c(0., 0.); 3]);
        let zero = vec![ComplexMatrix::zeros(3, 3)];
        assert_eq!(apply_constraint(&p, &zero).unwrap(), ComplexMatrix::zeros(3, 3));
        let k = gaussian_matrix(&mut rng, 3, 3);
        let got = apply_constraint(&p, std::slice::from_ref(&k)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = (CONE - pts[i][0] * pts[j][0].conj()) * k[(i, j)];
                assert!((got[(i, j)] - expect).norm() < 1e-15);
            }
        }
        let t = vec![vec![ComplexMatrix::zeros(2, 2); 2]; 2];
        let x = vec![ComplexMatrix::zeros(2, 1); 2];
        let p = AglerProblem::new(AglerVariant::NcLtoa { t, x: x.clone(), y: x }).unwrap();
        let ks = vec![gaussian_matrix(&mut rng, 4, 4), gaussian_matrix(&mut rng, 4, 4)];
        assert!((apply_constraint(&p, &ks).unwrap() - &ks[0] - &ks[1]).norm() < 1e-15);
    }

    #[test]
    fn feasible_bidisk_fixture() {
        let p = scalar(vec![vec![c(0., 0.), c(0., 0.)], vec![c(0.5, 0.), c(0., 0.)]], vec![c(0., 0.), c(0.5, 0.)]);
        let r = solve_feasibility(&p, &AglerOptions::default()).unwrap();
        assert_eq!(r.status, AglerStatus::FeasibleWithCertificate);
        let cert = r.certificate.unwrap();
        assert!(cert.residual_norm <= 1e-6);
        assert!(verify_certificate(&p, &cert).unwrap().passes(2e-6));
    }

    #[test]
    fn forced_indefinite_sum_fixture() {
        let p = scalar(vec![vec![c(0., 0.); 2]; 2], vec![c(0., 0.), c(0.5, 0.)]);
        let r = solve_feasibility(&p, &AglerOptions::default()).unwrap();
        assert_eq!(r.status, AglerStatus::InfeasibleEvidence);
        assert!(r.gap_estimate >= 1e-3);
    }

    #[test]
    fn d1_matches_disk_pick() {
        let mut rng = seeded(3);
        let mut checked = 0;
        for _ in 0..20 {
            let t: Vec<ComplexMatrix> = (0..2).map(|_| with_norm(&mut rng, 2, 2, 0.7)).collect();
            let x: Vec<ComplexMatrix> = (0..2).map(|_| gaussian_matrix(&mut rng, 2, 1)).collect();
            let y: Vec<ComplexMatrix> = (0..2).map(|_| gaussian_matrix(&mut rng, 2, 1) * c(0.4, 0.)).collect();
            let pick = pick_ltoa(&t, &x, &y, Tolerance::Absolute(1e-9)).unwrap();
            if pick.verdict.min_eigenvalue.abs() < 1e-6 {
                continue;
            }
            let prob = AglerProblem::new(AglerVariant::NcLtoa { t: t.iter().map(|m| vec![m.clone()]).collect(), x, y })
                .unwrap();
            let r = solve_feasibility(&prob, &AglerOptions::default()).unwrap();
            assert_eq!(r.status == AglerStatus::FeasibleWithCertificate, pick.feasible());
            if let Some(cert) = r.certificate {
                assert!((cert.kernels[0].as_matrix() - pick.pick.as_matrix()).norm() < 1e-6);
            }
            checked += 1;
        }
        assert!(checked >= 15);
    }

    #[test]
    fn d1_rd_kernel_is_frd_pick() {
        let mut rng = seeded(4);
        let b = sample_blaschke(2, 5).unwrap();
        let z: Vec<ComplexMatrix> = (0..2).map(|_| with_norm(&mut rng, 2, 2, 0.6)).collect();
        let w: Vec<ComplexMatrix> =
            z.iter().map(|zi| crate::oracle::eval_tensor(&b, zi).unwrap() * c(0.9, 0.)).collect();
        let pick = pick_frd(&z, &w, 2, Tolerance::Auto).unwrap();
        let prob =
            AglerProblem::new(AglerVariant::NcRd { z: z.iter().map(|m| vec![m.clone()]).collect(), w, kappa: 2 })
                .unwrap();
        let r = solve_feasibility(&prob, &AglerOptions::default()).unwrap();
        assert!(pick.feasible());
        assert_eq!(r.status, AglerStatus::FeasibleWithCertificate);
        let k = r.certificate.unwrap();
        assert!((k.kernels[0].as_matrix() - pick.pick.as_matrix()).norm() < 1e-6);
    }

    #[test]
    fn nc_data_from_one_variable_sample_is_feasible() {
        let mut rng = seeded(6);
        let s = sample_contractive_poly(1, 1, 3, &SampleKind::Disk, 7).unwrap();
        let t: Vec<Vec<ComplexMatrix>> =
            (0..2).map(|_| vec![with_norm(&mut rng, 2, 2, 0.6), with_norm(&mut rng, 2, 2, 0.6)]).collect();
        let x: Vec<ComplexMatrix> = (0..2).map(|_| gaussian_matrix(&mut rng, 2, 1)).collect();
        let y: Vec<ComplexMatrix> = t.iter().zip(&x).map(|(ti, xi)| eval_ltoa(&s, xi, &ti[0]).unwrap()).collect();
        let prob = AglerProblem::new(AglerVariant::NcLtoa { t, x, y }).unwrap();
        let r = solve_feasibility(&prob, &AglerOptions::default()).unwrap();
        assert_eq!(r.status, AglerStatus::FeasibleWithCertificate);
        assert!(verify_certificate(&prob, r.certificate.as_ref().unwrap()).unwrap().passes(2e-6));
    }

    #[test]
    fn scalar_schur_agler_data_is_feasible() {
        let mut rng = seeded(8);
        let b = sample_blaschke(1, 9).unwrap();
        let pts: Vec<Vec<C64>> = (0..3).map(|_| vec![disk_point(&mut rng, 0.8), disk_point(&mut rng, 0.8)]).collect();
        let vals: Vec<C64> = pts.iter().map(|p| b.blaschke.as_ref().unwrap().value(p[0]) * p[1] * 0.9).collect();
        let r = solve_feasibility(&scalar(pts, vals), &AglerOptions::default()).unwrap();
        assert_eq!(r.status, AglerStatus::FeasibleWithCertificate);
    }

    #[test]
    fn certificate_perturbation_is_linear() {
        let p = scalar(vec![vec![c(0., 0.), c(0., 0.)], vec![c(0.5, 0.), c(0., 0.)]], vec![c(0., 0.), c(0.5, 0.)]);
        let cert = solve_feasibility(&p, &AglerOptions::default()).unwrap().certificate.unwrap();
        let base: Vec<ComplexMatrix> = cert.kernels.iter().map(|k| k.as_matrix().clone()).collect();
        let resid0 = apply_constraint(&p, &base).unwrap() - p.rhs.as_matrix();
        let eps = 1e-3;
        let mut bumped = cert.clone();
        bumped.kernels[0] = hermitize(&(base[0].clone() + ComplexMatrix::identity(2, 2) * c(eps, 0.))).unwrap();
        let d = &p.diag[0];
        let predicted = resid0 + (ComplexMatrix::identity(2, 2) - d * d.adjoint()) * c(eps, 0.);
        let got = verify_certificate(&p, &bumped).unwrap().residual;
        assert!((got - frobenius(&predicted)).abs() < 1e-14);
        let zero = AglerCertificate { kernels: vec![HermitianMatrix::zeros(2); 2], residual_norm: 0.0, iterations: 0 };
        let zp = scalar(vec![vec![c(0., 0.); 2]; 2], vec![CONE, CONE]);
        assert_eq!(verify_certificate(&zp, &zero).unwrap().residual, 0.0);
    }

    #[test]
    fn budget_is_enforced() {
        let pts: Vec<Vec<C64>> = (0..10).map(|_| vec![c(0.1, 0.); 3]).collect();
        let p = scalar(pts, vec![c(0., 0.); 10]);
        let opts = AglerOptions { budget: 100, ..AglerOptions::default() };
        assert!(matches!(solve_feasibility(&p, &opts), Err(Error::Budget { .. })));
    }

    #[test]
    fn dykstra_also_certifies() {
        let p = scalar(vec![vec![c(0., 0.), c(0., 0.)], vec![c(0.5, 0.), c(0., 0.)]], vec![c(0., 0.), c(0.5, 0.)]);
        let opts = AglerOptions { scheme: ProjectionScheme::Dykstra, ..AglerOptions::default() };
        let r = solve_feasibility(&p, &opts).unwrap();
        assert_eq!(r.status, AglerStatus::FeasibleWithCertificate);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn constraint_is_linear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let mut rng = seeded(seed);
            let t: Vec<Vec<ComplexMatrix>> = (0..2).map(|_| vec![with_norm(&mut rng, 2, 2, 0.8), with_norm(&mut rng, 2, 2, 0.5)]).collect();
            let x = vec![ComplexMatrix::zeros(2, 1); 2];
            let p = AglerProblem::new(AglerVariant::NcLtoa { t, x: x.clone(), y: x }).unwrap();
            let k1: Vec<ComplexMatrix> = (0..2).map(|_| gaussian_matrix(&mut rng, 4, 4)).collect();
            let k2: Vec<ComplexMatrix> = (0..2).map(|_| gaussian_matrix(&mut rng, 4, 4)).collect();
            let comb: Vec<ComplexMatrix> = k1.iter().zip(&k2).map(|(u, v)| u * c(a, 0.) + v * c(b, 0.)).collect();
            let lhs = apply_constraint(&p, &comb).unwrap();
            let rhs = apply_constraint(&p, &k1).unwrap() * c(a, 0.) + apply_constraint(&p, &k2).unwrap() * c(b, 0.);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn alternating_gap_is_monotone(seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let pts: Vec<Vec<C64>> = (0..3).map(|_| vec![disk_point(&mut rng, 0.8), disk_point(&mut rng, 0.8)]).collect();
            let vals: Vec<C64> = (0..3).map(|_| disk_point(&mut rng, 1.0)).collect();
            let p = scalar(pts, vals);
            let mut trace = Vec::new();
            let opts = AglerOptions { max_iter: 300, ..AglerOptions::default() };
            solve_traced(&p, &opts, |t| trace.push(t)).unwrap();
            for w in trace.windows(2) {
                prop_assert!(w[1].gap <= w[0].gap * (1.0 + 1e-9) + 1e-13);
            }
        }
    }
}
