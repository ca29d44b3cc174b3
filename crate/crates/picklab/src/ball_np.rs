//! Pick criteria on the unit ball: the Drury-Arveson (commuting) setting and the
//! free-semigroup (noncommuting) setting.
//!
//! Words are stored in written order: `Word(vec![a, b, c])` is `γ = a b c` and
//! `Z^γ = Z_a Z_b Z_c`. Letters are zero-based.

use crate::disk_np::{assemble_pairwise, Block, FeasibilityReport};
use crate::error::{Error, Result};
use crate::matcore::{basis_vector, kron, operator_norm, ComplexMatrix, SumMethod, Tolerance, C64, VEC_CAP};

/// Default cap on matrix multiplications spent by one dataset.
pub const DEFAULT_BUDGET: usize = 10_000_000;

/// Cap on the number of enumerated words or paths.
pub const ENUMERATION_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn transpose(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }
}

/// Number of words of length `≤ l` over `d` letters, or `None` on overflow.
pub fn word_count(d: usize, l: usize) -> Option<usize> {
    let mut total: usize = 0;
    let mut level: usize = 1;
    for n in 0..=l {
        total = total.checked_add(level)?;
        if n < l {
            level = level.checked_mul(d)?;
        }
    }
    Some(total)
}

/// All words of length `≤ l`, ordered by length and then lexicographically.
pub fn words_up_to(d: usize, l: usize) -> Result<Vec<Word>> {
    if d == 0 {
        return Err(Error::Argument("alphabet must have at least one letter".into()));
    }
    match word_count(d, l) {
        Some(n) if n <= ENUMERATION_CAP => {}
        _ => return Err(Error::budget(format!("{d} letters up to length {l} exceeds {ENUMERATION_CAP} words"), None)),
    }
    let mut out = vec![Word::empty()];
    let mut start = 0;
    for _ in 0..l {
        let end = out.len();
        for w in start..end {
            for k in 0..d {
                let mut letters = out[w].0.clone();
                letters.push(k);
                out.push(Word(letters));
            }
        }
        start = end;
    }
    Ok(out)
}

/// A `d`-tuple of square matrices of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTuple {
    mats: Vec<ComplexMatrix>,
    row_norm: f64,
}

impl OperatorTuple {
    pub fn new(mats: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(Error::Argument("operator tuple must have at least one entry".into()));
        };
        let n = first.nrows();
        for m in &mats {
            if m.shape() != (n, n) {
                return Err(Error::shape(format!("tuple entries must be {n}x{n}, got {:?}", m.shape())));
            }
        }
        let row_norm = row_norm(&mats);
        Ok(OperatorTuple { mats, row_norm })
    }

    /// The tuple `(λ_1 I, …, λ_d I)`.
    pub fn scalar(point: &[C64], dim: usize) -> Result<Self> {
        Self::new(point.iter().map(|&l| ComplexMatrix::identity(dim, dim) * l).collect())
    }

    pub fn d(&self) -> usize {
        self.mats.len()
    }

    pub fn dim(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn mats(&self) -> &[ComplexMatrix] {
        &self.mats
    }

    /// Operator norm of the block row `[Z_1 … Z_d]`.
    pub fn row_norm(&self) -> f64 {
        self.row_norm
    }

    /// Operator norm of the block column `[Z_1; …; Z_d]`.
    pub fn column_norm(&self) -> f64 {
        let adj: Vec<_> = self.mats.iter().map(|m| m.adjoint()).collect();
        row_norm(&adj)
    }

    pub fn adjoint(&self) -> OperatorTuple {
        let mats: Vec<_> = self.mats.iter().map(|m| m.adjoint()).collect();
        let row_norm = row_norm(&mats);
        OperatorTuple { mats, row_norm }
    }

    /// Largest pairwise commutator norm.
    pub fn commutator_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.d() {
            for l in k + 1..self.d() {
                let c = &self.mats[k] * &self.mats[l] - &self.mats[l] * &self.mats[k];
                worst = worst.max(operator_norm(&c));
            }
        }
        worst
    }

    pub fn is_commutative(&self) -> bool {
        self.commutator_defect() <= 1e-12
    }
}

/// `sqrt‖Σ_k A_k A_k*‖`, the norm of the block row.
pub fn row_norm(mats: &[ComplexMatrix]) -> f64 {
    let Some(first) = mats.first() else {
        return 0.0;
    };
    let mut gram = ComplexMatrix::zeros(first.nrows(), first.nrows());
    for m in mats {
        gram += m * m.adjoint();
    }
    operator_norm(&gram).sqrt()
}

/// `Z^γ`, or `Z^{γᵀ}` when `transpose` is set; the empty word gives the identity.
pub fn word_power(z: &OperatorTuple, word: &Word, transpose: bool) -> Result<ComplexMatrix> {
    if let Some(&bad) = word.0.iter().find(|&&k| k >= z.d()) {
        return Err(Error::Argument(format!("letter {bad} outside an alphabet of {}", z.d())));
    }
    let mut out = ComplexMatrix::identity(z.dim(), z.dim());
    let letters: Box<dyn Iterator<Item = &usize>> =
        if transpose { Box::new(word.0.iter().rev()) } else { Box::new(word.0.iter()) };
    for &k in letters {
        out *= &z.mats[k];
    }
    Ok(out)
}

/// Truncation controls for word and path sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Target bound on the operator norm of the neglected tail of one block.
    pub tol: f64,
    /// Hard cap on the summed level, if any.
    pub max_level: Option<usize>,
    /// Matrix multiplications allowed for a whole dataset.
    pub budget: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { tol: 1e-13, max_level: None, budget: DEFAULT_BUDGET }
    }
}

/// Outcome of [`word_sum`].
#[derive(Debug, Clone, PartialEq)]
pub struct WordSum {
    pub value: ComplexMatrix,
    /// Highest level included.
    pub levels: usize,
    pub tail_bound: f64,
    pub mults: usize,
}

/// Levels needed so that `m0 ρ^{L+1} / (1-ρ) ≤ tol`.
fn levels_for(m0: f64, rho: f64, tol: f64) -> usize {
    if m0 == 0.0 || rho == 0.0 {
        return 0;
    }
    let mut l = 0usize;
    let mut pow = rho;
    while m0 * pow / (1.0 - rho) > tol && l < 1 << 20 {
        pow *= rho;
        l += 1;
    }
    l
}

/// `Σ_γ A^γ M0 (B^γ)*` summed by levels `M_{n+1} = Σ_k A_k M_n B_k*`.
///
/// The level map has norm at most `ρ = r_A r_B` (block-row norms), so the
/// tail after level `L` is at most `‖M0‖ ρ^{L+1}/(1-ρ)`. `spent` accumulates
/// matrix multiplications against `opts.budget`.
pub fn word_sum(
    a: &[ComplexMatrix],
    m0: &ComplexMatrix,
    b: &[ComplexMatrix],
    opts: &SeriesOptions,
    spent: &mut usize,
) -> Result<WordSum> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("tuples have {} and {} entries", a.len(), b.len())));
    }
    for (ak, bk) in a.iter().zip(b) {
        if ak.shape() != (m0.nrows(), m0.nrows()) || bk.shape() != (m0.ncols(), m0.ncols()) {
            return Err(Error::shape("tuple entries must act on the rows and columns of the seed"));
        }
    }
    let rho = row_norm(a) * row_norm(b);
    let norm0 = operator_norm(m0);
    if norm0 == 0.0 || a.is_empty() {
        return Ok(WordSum { value: m0.clone(), levels: 0, tail_bound: 0.0, mults: 0 });
    }
    if rho >= 1.0 {
        return Err(Error::Divergent(rho));
    }
    let wanted = levels_for(norm0, rho, opts.tol);
    let levels = opts.max_level.map_or(wanted, |cap| cap.min(wanted));
    let per_level = 2 * a.len();
    let tail_at = |l: usize| norm0 * rho.powi(l as i32 + 1) / (1.0 - rho);
    let affordable = opts.budget.saturating_sub(*spent) / per_level;
    if levels > affordable {
        return Err(Error::budget(
            format!("word sum needs {levels} levels, budget allows {affordable}"),
            Some(tail_at(affordable)),
        ));
    }
    let mut value = m0.clone();
    let mut level = m0.clone();
    for _ in 0..levels {
        let mut next = ComplexMatrix::zeros(m0.nrows(), m0.ncols());
        for (ak, bk) in a.iter().zip(b) {
            next += ak * &level * bk.adjoint();
        }
        level = next;
        value += &level;
    }
    let mults = levels * per_level;
    *spent += mults;
    Ok(WordSum { value, levels, tail_bound: if rho == 0.0 { 0.0 } else { tail_at(levels) }, mults })
}

/// Exact solution of `M = M0 + Σ_k A_k M B_k*` by vectorization.
///
/// Valid whenever the spectral radius of `Σ_k conj(B_k) ⊗ A_k` is below one,
/// which is weaker than the row-norm condition used by [`word_sum`].
pub fn word_sum_exact(a: &[ComplexMatrix], m0: &ComplexMatrix, b: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let (m, n) = m0.shape();
    if m * n > VEC_CAP {
        return Err(Error::budget(format!("vectorized system of size {} exceeds {VEC_CAP}", m * n), None));
    }
    let mut op = ComplexMatrix::zeros(m * n, m * n);
    for (ak, bk) in a.iter().zip(b) {
        op += kron(&bk.map(|z| z.conj()), ak);
    }
    let rho = crate::matcore::spectral_radius(&op)?;
    if rho >= 1.0 {
        return Err(Error::Divergent(rho));
    }
    let sys = ComplexMatrix::identity(m * n, m * n) - op;
    let x = sys.lu().solve(&nalgebra::DVector::from_column_slice(m0.as_slice())).ok_or(Error::Singular)?;
    Ok(ComplexMatrix::from_column_slice(m, n, x.as_slice()))
}

fn check_tuples(z: &[OperatorTuple]) -> Result<()> {
    if let Some(first) = z.first() {
        for (i, t) in z.iter().enumerate() {
            if t.d() != first.d() {
                return Err(Error::shape(format!("point {i} has {} entries, expected {}", t.d(), first.d())));
            }
            if t.row_norm() >= 1.0 {
                return Err(Error::domain(format!("point {i} has row norm {} >= 1", t.row_norm())));
            }
        }
    }
    Ok(())
}

fn check_directions(z: &[OperatorTuple], x: &[ComplexMatrix], y: &[ComplexMatrix]) -> Result<()> {
    if x.len() != z.len() || y.len() != z.len() {
        return Err(Error::shape(format!("{} points but {} X and {} Y", z.len(), x.len(), y.len())));
    }
    for i in 0..z.len() {
        if x[i].nrows() != z[i].dim() || y[i].nrows() != z[i].dim() {
            return Err(Error::shape(format!("condition {i}: directions must map into the point space")));
        }
        if x[i].ncols() != x[0].ncols() || y[i].ncols() != y[0].ncols() {
            return Err(Error::shape(format!("condition {i}: direction domains differ across conditions")));
        }
    }
    Ok(())
}

/// Free-semigroup left-tangential Pick matrix `[Σ_γ Z^{(i)γ} (X_i X_j* - Y_i Y_j*) Z^{(j)γ*}]`.
pub fn pick_nc_ltoa(
    z: &[OperatorTuple],
    x: &[ComplexMatrix],
    y: &[ComplexMatrix],
    opts: &SeriesOptions,
    tol: Tolerance,
) -> Result<FeasibilityReport> {
    check_tuples(z)?;
    check_directions(z, x, y)?;
    let mut spent = 0;
    let sizes: Vec<usize> = z.iter().map(|t| t.dim()).collect();
    let (raw, method, tail) = assemble_pairwise(&sizes, |i, j| {
        let m0 = &x[i] * x[j].adjoint() - &y[i] * y[j].adjoint();
        let s = word_sum(z[i].mats(), &m0, z[j].mats(), opts, &mut spent)?;
        let method =
            if s.levels == 0 && s.tail_bound == 0.0 { SumMethod::ClosedForm } else { SumMethod::TruncatedSeries };
        Ok(Block { value: s.value, method, tail: s.tail_bound })
    })?;
    FeasibilityReport::from_raw(raw, method, tail, tol)
}

/// `⟨λ, ζ⟩ = Σ_k λ_k conj(ζ_k)`.
pub fn ball_inner(l: &[C64], z: &[C64]) -> C64 {
    l.iter().zip(z).map(|(a, b)| a * b.conj()).sum()
}

fn check_ball_points(points: &[Vec<C64>]) -> Result<()> {
    for (i, p) in points.iter().enumerate() {
        if p.len() != points[0].len() || p.is_empty() {
            return Err(Error::shape(format!("point {i} has {} coordinates", p.len())));
        }
        let r = ball_inner(p, p).re;
        if r >= 1.0 {
            return Err(Error::domain(format!("point {i} has squared norm {r} >= 1")));
        }
    }
    Ok(())
}

/// `[(I - W_i W_j*) / (1 - ⟨λ_i, λ_j⟩)]`.
pub fn pick_da_fov(points: &[Vec<C64>], w: &[ComplexMatrix], tol: Tolerance) -> Result<FeasibilityReport> {
    let p = w.first().map(|m| m.nrows()).unwrap_or(0);
    let id = vec![ComplexMatrix::identity(p, p); w.len()];
    pick_da_lt(points, &id, w, tol)
}

/// `[(X_i X_j* - Y_i Y_j*) / (1 - ⟨λ_i, λ_j⟩)]`.
pub fn pick_da_lt(
    points: &[Vec<C64>],
    x: &[ComplexMatrix],
    y: &[ComplexMatrix],
    tol: Tolerance,
) -> Result<FeasibilityReport> {
    if x.len() != points.len() || y.len() != points.len() {
        return Err(Error::shape(format!("{} points but {} X and {} Y", points.len(), x.len(), y.len())));
    }
    check_ball_points(points)?;
    for i in 0..x.len() {
        if x[i].nrows() != y[i].nrows() || x[i].ncols() != x[0].ncols() || y[i].ncols() != y[0].ncols() {
            return Err(Error::shape(format!("condition {i}: inconsistent directions")));
        }
    }
    let sizes: Vec<usize> = x.iter().map(|m| m.nrows()).collect();
    let (raw, method, tail) = assemble_pairwise(&sizes, |i, j| {
        let k = C64::new(1.0, 0.0) - ball_inner(&points[i], &points[j]);
        Ok(Block::exact((&x[i] * x[j].adjoint() - &y[i] * y[j].adjoint()) / k, SumMethod::ClosedForm))
    })?;
    FeasibilityReport::from_raw(raw, method, tail, tol)
}

/// How commuting-tuple sums are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DaWeighting {
    /// `Σ_n (|n|!/n!) Z^n M Z'^{n*}`, equal to the free-word sum.
    #[default]
    Multinomial,
    /// `Σ_n Z^n M Z'^{n*}` without weights.
    LiteralUnweighted,
}

/// Multi-indices of total degree `m` in `d` variables, lexicographically descending.
fn multi_indices(d: usize, m: usize) -> Vec<Vec<usize>> {
    if d == 1 {
        return vec![vec![m]];
    }
    let mut out = Vec::new();
    for first in (0..=m).rev() {
        for mut rest in multi_indices(d - 1, m - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn multinomial(n: &[usize]) -> f64 {
    let mut total = 0usize;
    let mut w = 1.0;
    for &k in n {
        for j in 1..=k {
            total += 1;
            w *= total as f64 / j as f64;
        }
    }
    w
}

fn monomial(z: &OperatorTuple, n: &[usize]) -> ComplexMatrix {
    let mut out = ComplexMatrix::identity(z.dim(), z.dim());
    for (k, &e) in n.iter().enumerate() {
        for _ in 0..e {
            out *= &z.mats()[k];
        }
    }
    out
}

/// Multi-index sum `Σ_{|n| ≤ L} w(n) Z^n M0 Z'^{n*}` over commuting tuples.
///
/// The tail bound uses `c_k = ‖Z_k‖‖Z'_k‖`: `(Σ c_k)^{L+1}/(1-Σ c_k)` for the
/// multinomial weighting and `Π 1/(1-c_k) - Σ_{|n|≤L} c^n` for the literal one;
/// it is infinite when those series diverge.
pub fn da_multi_index_sum(
    zi: &OperatorTuple,
    m0: &ComplexMatrix,
    zj: &OperatorTuple,
    weighting: DaWeighting,
    levels: usize,
) -> Result<WordSum> {
    if zi.d() != zj.d() {
        return Err(Error::shape("tuples have different lengths"));
    }
    let d = zi.d();
    let cs: Vec<f64> = zi.mats().iter().zip(zj.mats()).map(|(a, b)| operator_norm(a) * operator_norm(b)).collect();
    let norm0 = operator_norm(m0);
    let mut value = ComplexMatrix::zeros(m0.nrows(), m0.ncols());
    let mut mults = 0;
    let mut partial = 0.0;
    for m in 0..=levels {
        for n in multi_indices(d, m) {
            let w = match weighting {
                DaWeighting::Multinomial => multinomial(&n),
                DaWeighting::LiteralUnweighted => 1.0,
            };
            value += monomial(zi, &n) * m0 * monomial(zj, &n).adjoint() * C64::new(w, 0.0);
            mults += 2 * m + 2;
            partial += n.iter().zip(&cs).map(|(&e, &c)| c.powi(e as i32)).product::<f64>();
        }
    }
    let tail_bound = if norm0 == 0.0 {
        0.0
    } else {
        match weighting {
            DaWeighting::Multinomial => {
                let s: f64 = cs.iter().sum();
                if s < 1.0 {
                    norm0 * s.powi(levels as i32 + 1) / (1.0 - s)
                } else {
                    f64::INFINITY
                }
            }
            DaWeighting::LiteralUnweighted => {
                if cs.iter().all(|&c| c < 1.0) {
                    let full: f64 = cs.iter().map(|c| 1.0 / (1.0 - c)).product();
                    norm0 * (full - partial).max(0.0)
                } else {
                    f64::INFINITY
                }
            }
        }
    };
    Ok(WordSum { value, levels, tail_bound, mults })
}

/// Drury-Arveson operator-argument Pick matrix for commuting tuples.
///
/// The multinomial weighting is evaluated as the free-word sum; the literal
/// weighting sums multi-indices until the product tail bound meets `opts.tol`.
pub fn pick_da_ltoa(
    z: &[OperatorTuple],
    x: &[ComplexMatrix],
    y: &[ComplexMatrix],
    weighting: DaWeighting,
    opts: &SeriesOptions,
    tol: Tolerance,
) -> Result<FeasibilityReport> {
    for (i, t) in z.iter().enumerate() {
        let defect = t.commutator_defect();
        if defect > 1e-12 {
            return Err(Error::domain(format!("point {i} does not commute (defect {defect:e})")));
        }
    }
    match weighting {
        DaWeighting::Multinomial => pick_nc_ltoa(z, x, y, opts, tol),
        DaWeighting::LiteralUnweighted => {
            check_tuples(z)?;
            check_directions(z, x, y)?;
            let mut spent = 0usize;
            let sizes: Vec<usize> = z.iter().map(|t| t.dim()).collect();
            let (raw, method, tail) = assemble_pairwise(&sizes, |i, j| {
                let m0 = &x[i] * x[j].adjoint() - &y[i] * y[j].adjoint();
                let cap = opts.max_level.unwrap_or(usize::MAX);
                let mut levels = 0;
                loop {
                    let s = da_multi_index_sum(&z[i], &m0, &z[j], DaWeighting::LiteralUnweighted, levels)?;
                    spent += s.mults;
                    if spent > opts.budget {
                        return Err(Error::budget("multi-index sum exceeded the work budget", Some(s.tail_bound)));
                    }
                    if s.tail_bound <= opts.tol || levels >= cap {
                        return Ok(Block { value: s.value, method: SumMethod::TruncatedSeries, tail: s.tail_bound });
                    }
                    levels = (levels * 2).max(levels + 4);
                }
            })?;
            FeasibilityReport::from_raw(raw, method, tail, tol)
        }
    }
}

/// Free-semigroup transposed Riesz-Dunford Pick matrix, indexed by `(i, i')` at `i·κ + i'`.
pub fn pick_nc_frd(
    z: &[OperatorTuple],
    w: &[ComplexMatrix],
    kappa: usize,
    opts: &SeriesOptions,
    tol: Tolerance,
) -> Result<FeasibilityReport> {
    if w.len() != z.len() {
        return Err(Error::shape(format!("{} points but {} values", z.len(), w.len())));
    }
    let g = z.first().map(|t| t.dim()).unwrap_or(0);
    if kappa == 0 || kappa > g {
        return Err(Error::Argument(format!("basis size {kappa} must lie in 1..={g}")));
    }
    let (mut zs, mut xs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for (t, wi) in z.iter().zip(w) {
        if t.dim() != g || wi.shape() != (g, g) {
            return Err(Error::shape("points and values must all act on one space"));
        }
        for k in 0..kappa {
            let e = basis_vector(g, k);
            zs.push(t.clone());
            ys.push(wi * &e);
            xs.push(e);
        }
    }
    pick_nc_ltoa(&zs, &xs, &ys, opts, tol)
}

/// Free-semigroup Riesz-Dunford Pick matrix `[Σ_γ Z^{(i)γ*} (e e* - W_i* e e* W_j) Z^{(j)γ}]`.
///
/// Runs [`pick_nc_frd`] on the adjoint data `(Z^{(i)*}, W_i*)`: since
/// `(Z*)^γ = (Z^{γᵀ})*` and transposition permutes words, this is the same matrix.
pub fn pick_nc_frd_star(
    z: &[OperatorTuple],
    w: &[ComplexMatrix],
    kappa: usize,
    opts: &SeriesOptions,
    tol: Tolerance,
) -> Result<FeasibilityReport> {
    let za: Vec<_> = z.iter().map(|t| t.adjoint()).collect();
    let wa: Vec<_> = w.iter().map(|m| m.adjoint()).collect();
    pick_nc_frd(&za, &wa, kappa, opts, tol)
}
