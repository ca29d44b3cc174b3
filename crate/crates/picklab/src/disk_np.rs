//! Single-variable Pick criteria: full-matrix, tangential, operator-argument and
//! Riesz-Dunford point evaluations on the unit disk, plus the Lyapunov test for
//! Nevanlinna-class functions on the right half-plane.

use crate::error::{Error, Result};
use crate::matcore::{
    basis_vector, hermitian_eigenvalues, hermitize, solve_lyapunov_rhp, solve_stein, spectral_radius, verdict_from,
    ComplexMatrix, HermitianMatrix, PsdVerdict, SumMethod, Tolerance, C64,
};

/// A Pick matrix together with its PSD verdict.
///
/// `tail_bound` bounds the operator norm of the difference between the
/// computed and the exact matrix; it is added to the PSD tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub pick: HermitianMatrix,
    pub verdict: PsdVerdict,
    pub method: SumMethod,
    pub tail_bound: f64,
}

impl FeasibilityReport {
    pub fn from_raw(raw: ComplexMatrix, method: SumMethod, tail_bound: f64, tol: Tolerance) -> Result<Self> {
        let pick = hermitize(&raw)?;
        let vals = hermitian_eigenvalues(&pick)?;
        let base = tol.resolve(&pick, &vals)?;
        let min = vals.first().copied().unwrap_or(0.0);
        Ok(FeasibilityReport { verdict: verdict_from(min, base + tail_bound), pick, method, tail_bound })
    }

    pub fn feasible(&self) -> bool {
        self.verdict.is_psd
    }
}

/// One block of a Pick matrix and how it was obtained.
pub(crate) struct Block {
    pub value: ComplexMatrix,
    pub method: SumMethod,
    pub tail: f64,
}

impl Block {
    pub fn exact(value: ComplexMatrix, method: SumMethod) -> Self {
        Block { value, method, tail: 0.0 }
    }
}

/// Assemble `[f(i, j)]` over `n` indices; block `(i, j)` must be `sizes[i] x sizes[j]`.
///
/// The combined tail is `sqrt(Σ t_ij²)`, which dominates the operator norm of the block error matrix.
pub(crate) fn assemble_pairwise(
    sizes: &[usize],
    mut f: impl FnMut(usize, usize) -> Result<Block>,
) -> Result<(ComplexMatrix, SumMethod, f64)> {
    let n = sizes.len();
    let mut offsets = Vec::with_capacity(n);
    let mut total = 0;
    for &s in sizes {
        offsets.push(total);
        total += s;
    }
    let mut out = ComplexMatrix::zeros(total, total);
    let mut method = SumMethod::ClosedForm;
    let mut tail_sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            let b = f(i, j)?;
            if b.value.shape() != (sizes[i], sizes[j]) {
                return Err(Error::shape(format!(
                    "block ({i},{j}) is {:?}, expected {:?}",
                    b.value.shape(),
                    (sizes[i], sizes[j])
                )));
            }
            out.view_mut((offsets[i], offsets[j]), (sizes[i], sizes[j])).copy_from(&b.value);
            method = method.combine(b.method);
            tail_sq += b.tail * b.tail;
        }
    }
    Ok((out, method, tail_sq.sqrt()))
}

fn check_disk_point(i: usize, l: C64) -> Result<()> {
    if l.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("point {i} = {l} is not in the open unit disk")))
    }
}

fn check_stable(i: usize, t: &ComplexMatrix) -> Result<()> {
    if t.nrows() != t.ncols() {
        return Err(Error::NotSquare { rows: t.nrows(), cols: t.ncols() });
    }
    let r = spectral_radius(t)?;
    if r < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("operator point {i} has spectral radius {r} >= 1")))
    }
}

fn check_len(what: &str, n: usize, got: usize) -> Result<()> {
    if n == got {
        Ok(())
    } else {
        Err(Error::shape(format!("{what}: expected {n} entries, got {got}")))
    }
}

fn check_common_cols(what: &str, ms: &[ComplexMatrix]) -> Result<()> {
    if let Some(first) = ms.first() {
        if let Some(bad) = ms.iter().position(|m| m.ncols() != first.ncols()) {
            return Err(Error::shape(format!(
                "{what}[{bad}] has {} columns, expected {}",
                ms[bad].ncols(),
                first.ncols()
            )));
        }
    }
    Ok(())
}

fn check_rows_match(x: &[ComplexMatrix], y: &[ComplexMatrix]) -> Result<()> {
    for (i, (a, b)) in x.iter().zip(y).enumerate() {
        if a.nrows() != b.nrows() {
            return Err(Error::shape(format!("condition {i}: direction rows {} vs {}", a.nrows(), b.nrows())));
        }
    }
    Ok(())
}

/// `[(I - W_i W_j*) / (1 - λ_i conj λ_j)]`.
pub fn pick_fov(points: &[C64], w: &[ComplexMatrix], tol: Tolerance) -> Result<FeasibilityReport> {
    let n = points.len();
    check_len("values", n, w.len())?;
    points.iter().enumerate().try_for_each(|(i, &l)| check_disk_point(i, l))?;
    let p = w.first().map(|m| m.nrows()).unwrap_or(0);
    if w.iter().any(|m| m.shape() != w[0].shape()) {
        return Err(Error::shape("values must share one shape"));
    }
    let id = ComplexMatrix::identity(p, p);
    let (raw, method, tail) = assemble_pairwise(&vec![p; n], |i, j| {
        let k = C64::new(1.0, 0.0) - points[i] * points[j].conj();
        Ok(Block::exact((&id - &w[i] * w[j].adjoint()) / k, SumMethod::ClosedForm))
    })?;
    FeasibilityReport::from_raw(raw, method, tail, tol)
}

/// `[(X_i X_j* - Y_i Y_j*) / (1 - λ_i conj λ_j)]`.
pub fn pick_lt(points: &[C64], x: &[ComplexMatrix], y: &[ComplexMatrix], tol: Tolerance) -> Result<FeasibilityReport> {
    let n = points.len();
    check_len("x", n, x.len())?;
    check_len("y", n, y.len())?;
    points.iter().enumerate().try_for_each(|(i, &l)| check_disk_point(i, l))?;
    check_common_cols("x", x)?;
    check_common_cols("y", y)?;
    check_rows_match(x, y)?;
    let sizes: Vec<usize> = x.iter().map(|m| m.nrows()).collect();
    let (raw, method, tail) = assemble_pairwise(&sizes, |i, j| {
        let k = C64::new(1.0, 0.0) - points[i] * points[j].conj();
        Ok(Block::exact((&x[i] * x[j].adjoint() - &y[i] * y[j].adjoint()) / k, SumMethod::ClosedForm))
    })?;
    FeasibilityReport::from_raw(raw, method, tail, tol)
}

/// `[(U_i* U_j - V_i* V_j) / (1 - conj λ_i λ_j)]`.
pub fn pick_rt(points: &[C64], u: &[ComplexMatrix], v: &[ComplexMatrix], tol: Tolerance) -> Result<FeasibilityReport> {
    let n = points.len();
    check_len("u", n, u.len())?;
    check_len("v", n, v.len())?;
    points.iter().enumerate().try_for_each(|(i, &l)| check_disk_point(i, l))?;
    let sizes: Vec<usize> = u.iter().map(|m| m.ncols()).collect();
    for i in 0..n {
        if v[i].ncols() != sizes[i] || u[i].nrows() != u[0].nrows() || v[i].nrows() != v[0].nrows() {
            return Err(Error::shape(format!("condition {i}: inconsistent right directions")));
        }
    }
    let (raw, method, tail) = assemble_pairwise(&sizes, |i, j| {
        let k = C64::new(1.0, 0.0) - points[i].conj() * points[j];
        Ok(Block::exact((u[i].adjoint() * &u[j] - v[i].adjoint() * &v[j]) / k, SumMethod::ClosedForm))
    })?;
    FeasibilityReport::from_raw(raw, method, tail, tol)
}

/// Block `(i, j)` is `Σ_n T_i^n (X_i X_j* - Y_i Y_j*) T_j*^n`, summed by a Stein solve.
pub fn pick_ltoa(
    t: &[ComplexMatrix],
    x: &[ComplexMatrix],
    y: &[ComplexMatrix],
    tol: Tolerance,
) -> Result<FeasibilityReport> {
    let n = t.len();
    check_len("x", n, x.len())?;
    check_len("y", n, y.len())?;
    t.iter().enumerate().try_for_each(|(i, m)| check_stable(i, m))?;
    check_common_cols("x", x)?;
    check_common_cols("y", y)?;
    check_rows_match(x, y)?;
    for i in 0..n {
        if x[i].nrows() != t[i].nrows() {
            return Err(Error::shape(format!(
                "condition {i}: X has {} rows, point is {}-square",
                x[i].nrows(),
                t[i].nrows()
            )));
        }
    }
    let sizes: Vec<usize> = t.iter().map(|m| m.nrows()).collect();
    let (raw, method, tail) = assemble_pairwise(&sizes, |i, j| {
        let q = &x[i] * x[j].adjoint() - &y[i] * y[j].adjoint();
        let s = solve_stein(&t[i], &q, &t[j])?;
        Ok(Block { value: s.p, method: s.method, tail: s.tail_bound })
    })?;
    FeasibilityReport::from_raw(raw, method, tail, tol)
}

/// Block `(i, j)` is `Σ_n A_i*^n (U_i* U_j - V_i* V_j) A_j^n`.
pub fn pick_rtoa(
    a: &[ComplexMatrix],
    u: &[ComplexMatrix],
    v: &[ComplexMatrix],
    tol: Tolerance,
) -> Result<FeasibilityReport> {
    let n = a.len();
    check_len("u", n, u.len())?;
    check_len("v", n, v.len())?;
    a.iter().enumerate().try_for_each(|(i, m)| check_stable(i, m))?;
    for i in 0..n {
        if u[i].ncols() != a[i].nrows() || v[i].ncols() != a[i].nrows() {
            return Err(Error::shape(format!("condition {i}: U/V columns must match the point dimension")));
        }
        if u[i].nrows() != u[0].nrows() || v[i].nrows() != v[0].nrows() {
            return Err(Error::shape(format!("condition {i}: U/V rows differ across conditions")));
        }
    }
    let sizes: Vec<usize> = a.iter().map(|m| m.nrows()).collect();
    let (raw, method, tail) = assemble_pairwise(&sizes, |i, j| {
        let q = u[i].adjoint() * &u[j] - v[i].adjoint() * &v[j];
        let s = solve_stein(&a[i].adjoint(), &q, &a[j].adjoint())?;
        Ok(Block { value: s.p, method: s.method, tail: s.tail_bound })
    })?;
    FeasibilityReport::from_raw(raw, method, tail, tol)
}

/// Riesz-Dunford data: operator points `Z_i` with a finite basis section of size `kappa`.
#[derive(Debug, Clone, PartialEq)]
pub enum RdDataset {
    /// `s(Z_i) = W_i`.
    Frd { z: Vec<ComplexMatrix>, w: Vec<ComplexMatrix> },
    /// `X_i s(Z_i) = Y_i` with `X_i, Y_i: Z -> C`.
    Ltrd { z: Vec<ComplexMatrix>, x: Vec<ComplexMatrix>, y: Vec<ComplexMatrix> },
    /// `s(Z_i) U_i = V_i` with `U_i, V_i: C -> Z`.
    Rtrd { z: Vec<ComplexMatrix>, u: Vec<ComplexMatrix>, v: Vec<ComplexMatrix> },
}

/// Operator-argument data produced by the basis expansion.
#[derive(Debug, Clone, PartialEq)]
pub enum OaDataset {
    Ltoa { t: Vec<ComplexMatrix>, x: Vec<ComplexMatrix>, y: Vec<ComplexMatrix> },
    Rtoa { a: Vec<ComplexMatrix>, u: Vec<ComplexMatrix>, v: Vec<ComplexMatrix> },
}

impl OaDataset {
    pub fn len(&self) -> usize {
        match self {
            OaDataset::Ltoa { t, .. } => t.len(),
            OaDataset::Rtoa { a, .. } => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_kappa(kappa: usize, dim: usize) -> Result<()> {
    if kappa == 0 {
        return Err(Error::Argument("basis size kappa must be positive".into()));
    }
    if kappa > dim {
        return Err(Error::Argument(format!("basis size {kappa} exceeds the space dimension {dim}")));
    }
    Ok(())
}

/// Replace each condition by `kappa` conditions, one per basis vector; condition `(i, i')` lands at `i * kappa + i'`.
pub fn expand_rd_to_ltoa(data: &RdDataset, kappa: usize) -> Result<OaDataset> {
    match data {
        RdDataset::Frd { z, w } => {
            check_len("w", z.len(), w.len())?;
            let g = z.first().map(|m| m.nrows()).unwrap_or(0);
            check_kappa(kappa, g)?;
            let (mut t, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
            for (zi, wi) in z.iter().zip(w) {
                if zi.shape() != (g, g) || wi.shape() != (g, g) {
                    return Err(Error::shape("FRD points and values must all be square of one dimension"));
                }
                for k in 0..kappa {
                    let e = basis_vector(g, k);
                    t.push(zi.clone());
                    y.push(wi * &e);
                    x.push(e);
                }
            }
            Ok(OaDataset::Ltoa { t, x, y })
        }
        RdDataset::Rtrd { z, u, v } => {
            check_len("u", z.len(), u.len())?;
            check_len("v", z.len(), v.len())?;
            let c = u.first().map(|m| m.ncols()).unwrap_or(0);
            check_kappa(kappa, c)?;
            let (mut t, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
            for ((zi, ui), vi) in z.iter().zip(u).zip(v) {
                if ui.ncols() != c || vi.ncols() != c || ui.nrows() != zi.nrows() || vi.nrows() != zi.nrows() {
                    return Err(Error::shape("RTRD directions must map C into the point space"));
                }
                for k in 0..kappa {
                    let e = basis_vector(c, k);
                    t.push(zi.clone());
                    x.push(ui * &e);
                    y.push(vi * &e);
                }
            }
            Ok(OaDataset::Ltoa { t, x, y })
        }
        RdDataset::Ltrd { z, x, y } => {
            check_len("x", z.len(), x.len())?;
            check_len("y", z.len(), y.len())?;
            let c = x.first().map(|m| m.nrows()).unwrap_or(0);
            check_kappa(kappa, c)?;
            let (mut a, mut u, mut v) = (Vec::new(), Vec::new(), Vec::new());
            for ((zi, xi), yi) in z.iter().zip(x).zip(y) {
                if xi.nrows() != c || yi.nrows() != c || xi.ncols() != zi.nrows() || yi.ncols() != zi.nrows() {
                    return Err(Error::shape("LTRD directions must map the point space into C"));
                }
                for k in 0..kappa {
                    let e = basis_vector(c, k);
                    a.push(zi.clone());
                    u.push(e.adjoint() * xi);
                    v.push(e.adjoint() * yi);
                }
            }
            Ok(OaDataset::Rtoa { a, u, v })
        }
    }
}

fn pick_oa(data: &OaDataset, tol: Tolerance) -> Result<FeasibilityReport> {
    match data {
        OaDataset::Ltoa { t, x, y } => pick_ltoa(t, x, y, tol),
        OaDataset::Rtoa { a, u, v } => pick_rtoa(a, u, v, tol),
    }
}

/// Blocks `Σ_n Z_i^n (e_{i'} e_{j'}* - W_i e_{i'} e_{j'}* W_j*) Z_j*^n`.
pub fn pick_frd(z: &[ComplexMatrix], w: &[ComplexMatrix], kappa: usize, tol: Tolerance) -> Result<FeasibilityReport> {
    pick_oa(&expand_rd_to_ltoa(&RdDataset::Frd { z: z.to_vec(), w: w.to_vec() }, kappa)?, tol)
}

/// Blocks `Σ_n Z_i*^n (X_i* e_{i'} e_{j'}* X_j - Y_i* e_{i'} e_{j'}* Y_j) Z_j^n`.
pub fn pick_ltrd(
    z: &[ComplexMatrix],
    x: &[ComplexMatrix],
    y: &[ComplexMatrix],
    kappa: usize,
    tol: Tolerance,
) -> Result<FeasibilityReport> {
    let data = RdDataset::Ltrd { z: z.to_vec(), x: x.to_vec(), y: y.to_vec() };
    pick_oa(&expand_rd_to_ltoa(&data, kappa)?, tol)
}

/// Blocks `Σ_n Z_i^n (U_i e_{i'} e_{j'}* U_j* - V_i e_{i'} e_{j'}* V_j*) Z_j*^n`.
pub fn pick_rtrd(
    z: &[ComplexMatrix],
    u: &[ComplexMatrix],
    v: &[ComplexMatrix],
    kappa: usize,
    tol: Tolerance,
) -> Result<FeasibilityReport> {
    let data = RdDataset::Rtrd { z: z.to_vec(), u: u.to_vec(), v: v.to_vec() };
    pick_oa(&expand_rd_to_ltoa(&data, kappa)?, tol)
}

/// Right half-plane test: block `(i', j')` solves `P Z* + Z P = e_{i'} e_{j'}* W* + W e_{i'} e_{j'}*`.
pub fn nevanlinna_rd_check(
    z: &ComplexMatrix,
    w: &ComplexMatrix,
    kappa: usize,
    tol: Tolerance,
) -> Result<FeasibilityReport> {
    let g = z.nrows();
    if z.ncols() != g {
        return Err(Error::NotSquare { rows: g, cols: z.ncols() });
    }
    if w.shape() != (g, g) {
        return Err(Error::shape(format!("W is {:?}, expected {:?}", w.shape(), (g, g))));
    }
    check_kappa(kappa, g)?;
    for l in crate::matcore::eigenvalues(z)? {
        if l.re <= 0.0 {
            return Err(Error::domain(format!("eigenvalue {l} is not in the open right half-plane")));
        }
    }
    let (raw, method, tail) = assemble_pairwise(&vec![g; kappa], |a, b| {
        let unit = basis_vector(g, a) * basis_vector(g, b).adjoint();
        let q = &unit * w.adjoint() + w * &unit;
        Ok(Block::exact(solve_lyapunov_rhp(z, &q)?, SumMethod::SteinSolve))
    })?;
    FeasibilityReport::from_raw(raw, method, tail, tol)
}
