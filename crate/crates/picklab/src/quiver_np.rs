//! Quivers, path enumeration and the quiver Toeplitz-algebra Pick criteria.
//!
//! A path is stored in written order `γ = α_n ⋯ α_1`: `arrows[0]` is the last
//! arrow traversed and `arrows[n-1]` the first. `s(γ) = src(α_1)`,
//! `r(γ) = rng(α_n)`. Vertex-graded spaces are realized as contiguous index
//! ranges, so every embedding `i_V` is a block placement.

use crate::ball_np::{row_norm, word_sum, word_sum_exact, SeriesOptions, ENUMERATION_CAP};
use crate::disk_np::{assemble_pairwise, Block, FeasibilityReport};
use crate::error::{Error, Result};
use crate::matcore::{
    basis_vector, hermitize, identity_kron, operator_norm, verdict_from, ComplexMatrix, HermitianMatrix, SumMethod,
    Tolerance, C64, CZERO,
};
use crate::random::gaussian_matrix;
use rand::Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrow {
    pub name: String,
    pub src: usize,
    pub rng: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quiver {
    vertices: Vec<String>,
    arrows: Vec<Arrow>,
}

impl Quiver {
    pub fn new(vertices: Vec<String>, arrows: Vec<Arrow>) -> Result<Self> {
        if vertices.is_empty() || arrows.is_empty() {
            return Err(Error::Argument("a quiver needs at least one vertex and one arrow".into()));
        }
        let mut names: Vec<&str> = vertices.iter().map(String::as_str).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Argument("vertex names must be distinct".into()));
        }
        let mut anames: Vec<&str> = arrows.iter().map(|a| a.name.as_str()).collect();
        anames.sort_unstable();
        if anames.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Argument("arrow names must be distinct".into()));
        }
        for a in &arrows {
            if a.src >= vertices.len() || a.rng >= vertices.len() {
                return Err(Error::Argument(format!("arrow {} refers to a missing vertex", a.name)));
            }
        }
        Ok(Quiver { vertices, arrows })
    }

    /// Build from names; each arrow is `(name, source, range)`.
    pub fn from_names(vertices: &[&str], arrows: &[(&str, &str, &str)]) -> Result<Self> {
        let find = |v: &str| {
            vertices.iter().position(|&x| x == v).ok_or_else(|| Error::Argument(format!("unknown vertex {v}")))
        };
        let arrows = arrows
            .iter()
            .map(|&(name, s, r)| Ok(Arrow { name: name.to_string(), src: find(s)?, rng: find(r)? }))
            .collect::<Result<Vec<_>>>()?;
        Quiver::new(vertices.iter().map(|v| v.to_string()).collect(), arrows)
    }

    /// One vertex with `d` loops; its paths are the words over `d` letters.
    pub fn single_vertex(d: usize) -> Result<Self> {
        let arrows = (0..d).map(|k| Arrow { name: format!("z{}", k + 1), src: 0, rng: 0 }).collect();
        Quiver::new(vec!["v".into()], arrows)
    }

    /// Vertices `a, b`; a loop `alpha` at `a` and `beta: a -> b`.
    pub fn two_vertex_example() -> Self {
        Quiver::from_names(&["a", "b"], &[("alpha", "a", "a"), ("beta", "a", "b")]).expect("valid quiver")
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_arrows(&self) -> usize {
        self.arrows.len()
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn arrow_index(&self, name: &str) -> Option<usize> {
        self.arrows.iter().position(|a| a.name == name)
    }

    /// Same vertices, every arrow reversed.
    pub fn transposed(&self) -> Quiver {
        let arrows = self.arrows.iter().map(|a| Arrow { name: a.name.clone(), src: a.rng, rng: a.src }).collect();
        Quiver { vertices: self.vertices.clone(), arrows }
    }

    /// `A[w][v]` counts arrows `v -> w`; `(A^n)[w][v]` counts paths of length `n`.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.num_vertices();
        let mut a = vec![vec![0; n]; n];
        for arrow in &self.arrows {
            a[arrow.rng][arrow.src] += 1;
        }
        a
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    /// The start vertex `s(γ)`; for length zero this is the path itself.
    pub source: usize,
    /// Arrows in written order.
    pub arrows: Vec<usize>,
}

impl Path {
    pub fn vertex(v: usize) -> Self {
        Path { source: v, arrows: Vec::new() }
    }

    /// Check composability and return the path; `arrows` in written order.
    pub fn from_arrows(q: &Quiver, arrows: Vec<usize>) -> Result<Self> {
        let Some(&first) = arrows.last() else {
            return Err(Error::Path("use Path::vertex for length-zero paths".into()));
        };
        if first >= q.num_arrows() {
            return Err(Error::Path(format!("unknown arrow index {first}")));
        }
        let p = Path { source: q.arrows[first].src, arrows };
        p.validate(q)?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.arrows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrows.is_empty()
    }

    pub fn s(&self) -> usize {
        self.source
    }

    pub fn r(&self, q: &Quiver) -> usize {
        self.arrows.first().map_or(self.source, |&a| q.arrows[a].rng)
    }

    pub fn validate(&self, q: &Quiver) -> Result<()> {
        if self.source >= q.num_vertices() {
            return Err(Error::Path(format!("unknown vertex index {}", self.source)));
        }
        let mut at = self.source;
        for &a in self.arrows.iter().rev() {
            let arrow = q.arrows.get(a).ok_or_else(|| Error::Path(format!("unknown arrow index {a}")))?;
            if arrow.src != at {
                return Err(Error::Path(format!(
                    "arrow {} starts at {} but the path is at {}",
                    arrow.name, q.vertices[arrow.src], q.vertices[at]
                )));
            }
            at = arrow.rng;
        }
        Ok(())
    }

    pub fn display(&self, q: &Quiver) -> String {
        if self.arrows.is_empty() {
            q.vertices[self.source].clone()
        } else {
            self.arrows.iter().map(|&a| q.arrows[a].name.as_str()).collect::<Vec<_>>().join(".")
        }
    }
}

/// Number of paths of length `≤ l`, or `None` on overflow.
pub fn path_count(q: &Quiver, l: usize) -> Option<usize> {
    let n = q.num_vertices();
    let adj = q.adjacency();
    let mut ends = vec![1usize; n];
    let mut total = n;
    for _ in 0..l {
        let mut next = vec![0usize; n];
        for w in 0..n {
            for v in 0..n {
                next[w] = next[w].checked_add(adj[w][v].checked_mul(ends[v])?)?;
            }
        }
        ends = next;
        total = ends.iter().try_fold(total, |acc, &c| acc.checked_add(c))?;
    }
    Some(total)
}

/// All paths of length `≤ l`, by length; each path `γ` is extended to `αγ` for arrows with `src(α) = r(γ)`.
pub fn paths_up_to(q: &Quiver, l: usize) -> Result<Vec<Path>> {
    match path_count(q, l) {
        Some(n) if n <= ENUMERATION_CAP => {}
        _ => return Err(Error::budget(format!("paths up to length {l} exceed {ENUMERATION_CAP}"), None)),
    }
    let mut out: Vec<Path> = (0..q.num_vertices()).map(Path::vertex).collect();
    let mut start = 0;
    for _ in 0..l {
        let end = out.len();
        for p in start..end {
            let r = out[p].r(q);
            for (a, arrow) in q.arrows.iter().enumerate() {
                if arrow.src == r {
                    let mut arrows = Vec::with_capacity(out[p].len() + 1);
                    arrows.push(a);
                    arrows.extend_from_slice(&out[p].arrows);
                    out.push(Path { source: out[p].source, arrows });
                }
            }
        }
        start = end;
    }
    Ok(out)
}

/// Dimensions of the vertex summands of a graded space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedSpace {
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl GradedSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(dims.len());
        let mut total = 0;
        for &d in &dims {
            offsets.push(total);
            total += d;
        }
        if total == 0 {
            return Err(Error::Argument("graded space must have positive total dimension".into()));
        }
        Ok(GradedSpace { dims, offsets })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, v: usize) -> usize {
        self.dims[v]
    }

    pub fn offset(&self, v: usize) -> usize {
        self.offsets[v]
    }

    pub fn total(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn num_vertices(&self) -> usize {
        self.dims.len()
    }

    /// Place `block: dims[src] -> dims[dst]` into the full space.
    pub fn embed(&self, dst: usize, src: usize, block: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.total(), self.total());
        out.view_mut((self.offsets[dst], self.offsets[src]), (self.dims[dst], self.dims[src])).copy_from(block);
        out
    }

    /// Orthogonal projection onto the summand at `v`.
    pub fn projection(&self, v: usize) -> ComplexMatrix {
        self.embed(v, v, &ComplexMatrix::identity(self.dims[v], self.dims[v]))
    }

    /// The `(dst, src)` block of a full-space matrix.
    pub fn block(&self, m: &ComplexMatrix, dst: usize, src: usize) -> ComplexMatrix {
        m.view((self.offsets[dst], self.offsets[src]), (self.dims[dst], self.dims[src])).into_owned()
    }

    /// Coordinate of basis vector `k` of summand `v` in the full space.
    pub fn coordinate(&self, v: usize, k: usize) -> usize {
        self.offsets[v] + k
    }
}

/// Which generalized disk a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    /// `Z_α: Z_{s(α)} -> Z_{r(α)}`, rows over arrows with a common range.
    Tensor,
    /// `T_α: X_{r(α)} -> X_{s(α)}`, rows over arrows with a common source.
    OperatorArgument,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuiverPoint {
    pub kind: PointKind,
    /// One block per arrow, in arrow order.
    pub blocks: Vec<ComplexMatrix>,
}

impl QuiverPoint {
    pub fn zeros(q: &Quiver, dims: &GradedSpace, kind: PointKind) -> Self {
        let blocks = q
            .arrows()
            .iter()
            .map(|a| {
                let (to, from) = endpoints(kind, a);
                ComplexMatrix::zeros(dims.dim(to), dims.dim(from))
            })
            .collect();
        QuiverPoint { kind, blocks }
    }
}

/// Gaussian point rescaled so every nonzero per-vertex row norm equals `r`.
pub fn random_member_point(rng: &mut impl Rng, q: &Quiver, dims: &GradedSpace, kind: PointKind, r: f64) -> QuiverPoint {
    let mut p = QuiverPoint::zeros(q, dims, kind);
    for b in p.blocks.iter_mut() {
        *b = gaussian_matrix(rng, b.nrows(), b.ncols());
    }
    let norms: Vec<f64> = (0..q.num_vertices())
        .map(|v| {
            let row: Vec<ComplexMatrix> = q
                .arrows()
                .iter()
                .zip(&p.blocks)
                .filter(|(a, _)| endpoints(kind, a).0 == v)
                .map(|(_, m)| m.clone())
                .collect();
            row_norm(&row)
        })
        .collect();
    for (a, b) in q.arrows().iter().zip(p.blocks.iter_mut()) {
        let v = endpoints(kind, a).0;
        if norms[v] > 0.0 {
            *b *= C64::new(r / norms[v], 0.0);
        }
    }
    p
}

/// `(codomain vertex, domain vertex)` of an arrow's block.
fn endpoints(kind: PointKind, a: &Arrow) -> (usize, usize) {
    match kind {
        PointKind::Tensor => (a.rng, a.src),
        PointKind::OperatorArgument => (a.src, a.rng),
    }
}

fn check_point(q: &Quiver, dims: &GradedSpace, p: &QuiverPoint) -> Result<()> {
    if dims.num_vertices() != q.num_vertices() {
        return Err(Error::shape(format!(
            "grading has {} vertices, quiver has {}",
            dims.num_vertices(),
            q.num_vertices()
        )));
    }
    if p.blocks.len() != q.num_arrows() {
        return Err(Error::shape(format!("point has {} blocks, quiver has {} arrows", p.blocks.len(), q.num_arrows())));
    }
    for (a, m) in q.arrows().iter().zip(&p.blocks) {
        let (to, from) = endpoints(p.kind, a);
        if m.shape() != (dims.dim(to), dims.dim(from)) {
            return Err(Error::shape(format!(
                "block for arrow {} is {:?}, expected {:?}",
                a.name,
                m.shape(),
                (dims.dim(to), dims.dim(from))
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub member: bool,
    /// Per-vertex norm of the row of blocks landing at that vertex.
    pub row_norms: Vec<f64>,
    pub worst: f64,
}

/// Strict-contraction test of the per-vertex rows.
pub fn disk_membership(q: &Quiver, dims: &GradedSpace, p: &QuiverPoint) -> Result<Membership> {
    check_point(q, dims, p)?;
    let mut row_norms = Vec::with_capacity(q.num_vertices());
    for v in 0..q.num_vertices() {
        let row: Vec<ComplexMatrix> = q
            .arrows()
            .iter()
            .zip(&p.blocks)
            .filter(|(a, _)| endpoints(p.kind, a).0 == v)
            .map(|(_, m)| m.clone())
            .collect();
        row_norms.push(row_norm(&row));
    }
    let worst = row_norms.iter().copied().fold(0.0, f64::max);
    Ok(Membership { member: worst < 1.0, row_norms, worst })
}

fn require_member(q: &Quiver, dims: &GradedSpace, p: &QuiverPoint, i: usize) -> Result<()> {
    let m = disk_membership(q, dims, p)?;
    if m.member {
        Ok(())
    } else {
        Err(Error::domain(format!("point {i} is outside the generalized disk (row norm {})", m.worst)))
    }
}

/// The point's blocks placed in the full graded space.
pub fn embedded_tuple(q: &Quiver, dims: &GradedSpace, p: &QuiverPoint) -> Result<Vec<ComplexMatrix>> {
    check_point(q, dims, p)?;
    Ok(q.arrows()
        .iter()
        .zip(&p.blocks)
        .map(|(a, m)| {
            let (to, from) = endpoints(p.kind, a);
            dims.embed(to, from, m)
        })
        .collect())
}

/// `Z^γ = Z_{α_n} ⋯ Z_{α_1}` for tensor points, `T^{γᵀ} = T_{α_1} ⋯ T_{α_n}` for operator-argument points.
pub fn path_power(q: &Quiver, dims: &GradedSpace, p: &QuiverPoint, path: &Path) -> Result<ComplexMatrix> {
    check_point(q, dims, p)?;
    path.validate(q)?;
    let d = match p.kind {
        PointKind::Tensor => dims.dim(path.s()),
        PointKind::OperatorArgument => dims.dim(path.r(q)),
    };
    let mut out = ComplexMatrix::identity(d, d);
    match p.kind {
        PointKind::Tensor => {
            for &a in path.arrows.iter().rev() {
                out = &p.blocks[a] * out;
            }
        }
        PointKind::OperatorArgument => {
            for &a in &path.arrows {
                out = &p.blocks[a] * out;
            }
        }
    }
    Ok(out)
}

/// One report per vertex; the data are feasible when all are.
#[derive(Debug, Clone, PartialEq)]
pub struct QuiverReport {
    pub vertices: Vec<FeasibilityReport>,
}

impl QuiverReport {
    pub fn feasible(&self) -> bool {
        self.vertices.iter().all(FeasibilityReport::feasible)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.vertices.iter().map(|r| r.verdict.min_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    pub fn tail_bound(&self) -> f64 {
        self.vertices.iter().map(|r| r.tail_bound).fold(0.0, f64::max)
    }
}

/// `⊕_w I_{c_w} ⊗ F_w` for a block-diagonal `F` on `dims`, with coefficient grading `coef`.
fn amplify(dims: &GradedSpace, coef: &[usize], f: &ComplexMatrix) -> ComplexMatrix {
    let blocks: Vec<ComplexMatrix> =
        (0..dims.num_vertices()).map(|w| identity_kron(coef[w], &dims.block(f, w, w))).collect();
    crate::matcore::direct_sum(&blocks)
}

/// Tangential tensor-calculus criterion, one Pick matrix per vertex.
///
/// Vertex `v` has blocks indexed by `(i, i')` at `i·dims[v] + i'`:
/// `X_i (⊕_w I ⊗ F_w) X_j* - Y_i (⊕_w I ⊗ F_w) Y_j*` where
/// `F = Σ_γ Z^{(i)γ} e_{i'} e_{j'}* Z^{(j)γ*}` over paths starting at `v`.
/// `X_i` acts on `⊕_w Y_w ⊗ Z_w` and `Y_i` on `⊕_w U_w ⊗ Z_w`.
#[allow(clippy::too_many_arguments)]
pub fn pick_qltt(
    q: &Quiver,
    z_dims: &GradedSpace,
    y_dims: &[usize],
    u_dims: &[usize],
    points: &[QuiverPoint],
    x: &[ComplexMatrix],
    y: &[ComplexMatrix],
    opts: &SeriesOptions,
    tol: Tolerance,
) -> Result<QuiverReport> {
    let data = QlttData::new(q, z_dims, y_dims, u_dims, points, x, y)?;
    let mut spent = 0;
    let mut reports = Vec::with_capacity(q.num_vertices());
    for v in 0..q.num_vertices() {
        let kv = z_dims.dim(v);
        let sizes = vec![data.c; points.len() * kv];
        let (raw, method, tail) = assemble_pairwise(&sizes, |a, b| {
            let (i, ip) = (a / kv, a % kv);
            let (j, jp) = (b / kv, b % kv);
            let (value, t) = data.kernel(i, j, z_dims.coordinate(v, ip), z_dims.coordinate(v, jp), opts, &mut spent)?;
            let method = if t == 0.0 { SumMethod::ClosedForm } else { SumMethod::TruncatedSeries };
            Ok(Block { value, method, tail: t })
        })?;
        reports.push(FeasibilityReport::from_raw(raw, method, tail, tol)?);
    }
    Ok(QuiverReport { vertices: reports })
}

/// Validated tensor-calculus data, shared with the completely positive map construction.
pub(crate) struct QlttData<'a> {
    z_dims: &'a GradedSpace,
    y_dims: &'a [usize],
    u_dims: &'a [usize],
    big: Vec<Vec<ComplexMatrix>>,
    x: &'a [ComplexMatrix],
    y: &'a [ComplexMatrix],
    xn: Vec<f64>,
    yn: Vec<f64>,
    /// Rows of every `X_i` and `Y_i`.
    pub(crate) c: usize,
}

impl<'a> QlttData<'a> {
    pub(crate) fn new(
        q: &Quiver,
        z_dims: &'a GradedSpace,
        y_dims: &'a [usize],
        u_dims: &'a [usize],
        points: &[QuiverPoint],
        x: &'a [ComplexMatrix],
        y: &'a [ComplexMatrix],
    ) -> Result<Self> {
        let n = points.len();
        if x.len() != n || y.len() != n {
            return Err(Error::shape(format!("{n} points but {} X and {} Y", x.len(), y.len())));
        }
        if y_dims.len() != q.num_vertices() || u_dims.len() != q.num_vertices() {
            return Err(Error::shape("coefficient gradings must list every vertex"));
        }
        let qdim: usize = (0..q.num_vertices()).map(|w| y_dims[w] * z_dims.dim(w)).sum();
        let rdim: usize = (0..q.num_vertices()).map(|w| u_dims[w] * z_dims.dim(w)).sum();
        let c = x.first().map(|m| m.nrows()).unwrap_or(0);
        for i in 0..n {
            if points[i].kind != PointKind::Tensor {
                return Err(Error::Argument(format!("point {i} must be a tensor point")));
            }
            require_member(q, z_dims, &points[i], i)?;
            if x[i].shape() != (c, qdim) || y[i].shape() != (c, rdim) {
                return Err(Error::shape(format!(
                    "condition {i}: expected X {:?} and Y {:?}, got {:?} and {:?}",
                    (c, qdim),
                    (c, rdim),
                    x[i].shape(),
                    y[i].shape()
                )));
            }
        }
        let big = points.iter().map(|p| embedded_tuple(q, z_dims, p)).collect::<Result<_>>()?;
        Ok(QlttData {
            z_dims,
            y_dims,
            u_dims,
            big,
            x,
            y,
            xn: x.iter().map(operator_norm).collect(),
            yn: y.iter().map(operator_norm).collect(),
            c,
        })
    }

    /// `X_i (⊕ I ⊗ F) X_j* - Y_i (⊕ I ⊗ F) Y_j*` with `F = Σ_γ Z^{(i)γ} e_p e_q* Z^{(j)γ*}`, and its tail.
    ///
    /// `p`, `q` are coordinates of the full graded space.
    pub(crate) fn kernel(
        &self,
        i: usize,
        j: usize,
        p: usize,
        q: usize,
        opts: &SeriesOptions,
        spent: &mut usize,
    ) -> Result<(ComplexMatrix, f64)> {
        let g = self.z_dims.total();
        let unit = basis_vector(g, p) * basis_vector(g, q).adjoint();
        let s = word_sum(&self.big[i], &unit, &self.big[j], opts, spent)?;
        let value = &self.x[i] * amplify(self.z_dims, self.y_dims, &s.value) * self.x[j].adjoint()
            - &self.y[i] * amplify(self.z_dims, self.u_dims, &s.value) * self.y[j].adjoint();
        Ok((value, (self.xn[i] * self.xn[j] + self.yn[i] * self.yn[j]) * s.tail_bound))
    }
}

/// Riesz-Dunford criterion with `X_i, Y_i: Z -> C` and `κ = dim C`.
///
/// Block `(i, i'), (j, j')` is `Σ_γ Z^{(i)γ*} M Z^{(j)γ}` with
/// `M = X_i* e_{i'} e_{j'}* X_j - Y_i* e_{i'} e_{j'}* Y_j` compressed to `r(γ)`.
/// This is a word sum over the adjoint tuple, whose rate is governed by the
/// per-source column norms; when those fail the exact vectorized sum is used
/// if its spectral radius is below one.
pub fn pick_qltrd(
    q: &Quiver,
    z_dims: &GradedSpace,
    points: &[QuiverPoint],
    x: &[ComplexMatrix],
    y: &[ComplexMatrix],
    kappa: usize,
    opts: &SeriesOptions,
    tol: Tolerance,
) -> Result<FeasibilityReport> {
    let n = points.len();
    if x.len() != n || y.len() != n {
        return Err(Error::shape(format!("{n} points but {} X and {} Y", x.len(), y.len())));
    }
    let g = z_dims.total();
    let c = x.first().map(|m| m.nrows()).unwrap_or(0);
    if kappa == 0 || kappa > c {
        return Err(Error::Argument(format!("basis size {kappa} must lie in 1..={c}")));
    }
    for i in 0..n {
        if points[i].kind != PointKind::Tensor {
            return Err(Error::Argument(format!("point {i} must be a tensor point")));
        }
        require_member(q, z_dims, &points[i], i)?;
        if x[i].shape() != (c, g) || y[i].shape() != (c, g) {
            return Err(Error::shape(format!("condition {i}: X and Y must be {c}x{g}")));
        }
    }
    let adj: Vec<Vec<ComplexMatrix>> = points
        .iter()
        .map(|p| Ok(embedded_tuple(q, z_dims, p)?.iter().map(|m| m.adjoint()).collect()))
        .collect::<Result<_>>()?;
    let projections: Vec<ComplexMatrix> = (0..q.num_vertices()).map(|v| z_dims.projection(v)).collect();
    let mut spent = 0;
    let sizes = vec![g; n * kappa];
    let (raw, method, tail) = assemble_pairwise(&sizes, |a, b| {
        let (i, ip) = (a / kappa, a % kappa);
        let (j, jp) = (b / kappa, b % kappa);
        let unit = basis_vector(c, ip) * basis_vector(c, jp).adjoint();
        let m = x[i].adjoint() * &unit * &x[j] - y[i].adjoint() * &unit * &y[j];
        let m0 = projections.iter().fold(ComplexMatrix::zeros(g, g), |acc, p| acc + p * &m * p);
        match word_sum(&adj[i], &m0, &adj[j], opts, &mut spent) {
            Ok(s) => {
                let method = if s.tail_bound == 0.0 { SumMethod::ClosedForm } else { SumMethod::TruncatedSeries };
                Ok(Block { value: s.value, method, tail: s.tail_bound })
            }
            Err(Error::Divergent(_)) => Ok(Block::exact(word_sum_exact(&adj[i], &m0, &adj[j])?, SumMethod::SteinSolve)),
            Err(e) => Err(e),
        }
    })?;
    FeasibilityReport::from_raw(raw, method, tail, tol)
}

/// Require `m` to vanish off the diagonal blocks of `rows x cols` gradings.
fn check_block_diagonal(m: &ComplexMatrix, rows: &GradedSpace, cols: &[usize], what: &str) -> Result<()> {
    let col_space = GradedSpace::new(cols.to_vec())?;
    if m.shape() != (rows.total(), col_space.total()) || rows.num_vertices() != cols.len() {
        return Err(Error::shape(format!(
            "{what} is {:?}, expected {:?}",
            m.shape(),
            (rows.total(), col_space.total())
        )));
    }
    for v in 0..rows.num_vertices() {
        for w in 0..cols.len() {
            if v == w {
                continue;
            }
            let blk = m.view((rows.offset(v), col_space.offset(w)), (rows.dim(v), col_space.dim(w)));
            if blk.iter().any(|z| *z != CZERO) {
                return Err(Error::shape(format!("{what} is not block diagonal over the vertices")));
            }
        }
    }
    Ok(())
}

/// Operator-argument criterion over the transposed-quiver disk.
///
/// Block `(i, j)` is `Σ_γ T^{(i)γᵀ} (X^{(i)}_{r(γ)} X^{(j)*}_{r(γ)} - Y^{(i)}_{r(γ)} Y^{(j)*}_{r(γ)}) T^{(j)γᵀ*}`
/// placed at `s(γ)`; `T^{γᵀ}` is the only composable product along `γ`.
/// `X^{(i)}: ⊕ Y_v -> ⊕ X_v` and `Y^{(i)}: ⊕ U_v -> ⊕ X_v` must be block diagonal.
#[allow(clippy::too_many_arguments)]
pub fn pick_qltoa(
    q: &Quiver,
    x_dims: &GradedSpace,
    y_dims: &[usize],
    u_dims: &[usize],
    points: &[QuiverPoint],
    x: &[ComplexMatrix],
    y: &[ComplexMatrix],
    opts: &SeriesOptions,
    tol: Tolerance,
) -> Result<FeasibilityReport> {
    let n = points.len();
    if x.len() != n || y.len() != n {
        return Err(Error::shape(format!("{n} points but {} X and {} Y", x.len(), y.len())));
    }
    for i in 0..n {
        if points[i].kind != PointKind::OperatorArgument {
            return Err(Error::Argument(format!("point {i} must be an operator-argument point")));
        }
        require_member(q, x_dims, &points[i], i)?;
        check_block_diagonal(&x[i], x_dims, y_dims, &format!("X[{i}]"))?;
        check_block_diagonal(&y[i], x_dims, u_dims, &format!("Y[{i}]"))?;
    }
    let big: Vec<Vec<ComplexMatrix>> = points.iter().map(|p| embedded_tuple(q, x_dims, p)).collect::<Result<_>>()?;
    let mut spent = 0;
    let sizes = vec![x_dims.total(); n];
    let (raw, method, tail) = assemble_pairwise(&sizes, |i, j| {
        let m0 = &x[i] * x[j].adjoint() - &y[i] * y[j].adjoint();
        let s = word_sum(&big[i], &m0, &big[j], opts, &mut spent)?;
        let method = if s.tail_bound == 0.0 { SumMethod::ClosedForm } else { SumMethod::TruncatedSeries };
        Ok(Block { value: s.value, method, tail: s.tail_bound })
    })?;
    FeasibilityReport::from_raw(raw, method, tail, tol)
}

/// Permutation grouping the coordinates of `n` stacked copies of a graded space by vertex.
///
/// Entry `k` of the result is the original index of new position `k`: first every
/// copy's vertex-0 coordinates, then every copy's vertex-1 coordinates, and so on.
pub fn vertex_grouping(dims: &GradedSpace, copies: usize) -> Vec<usize> {
    let g = dims.total();
    let mut perm = Vec::with_capacity(copies * g);
    for v in 0..dims.num_vertices() {
        for copy in 0..copies {
            for k in 0..dims.dim(v) {
                perm.push(copy * g + dims.coordinate(v, k));
            }
        }
    }
    perm
}

/// Outcome of the constant-multiplier test.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantMultiplier {
    /// `[X_i e_{i'} (X_j e_{j'})* - Y_i e_{i'} (Y_j e_{j'})*]` indexed by `(i, i')`.
    pub report: FeasibilityReport,
    /// `x x* - y y*` with `x = col_{i'} col_i X_i e_{i'}`.
    pub rank_one: HermitianMatrix,
    /// The scalar `δ` with `δ X_i = Y_i`, `|δ| ≤ 1`, when it exists.
    pub delta: Option<C64>,
}

/// Decide whether some `|δ| ≤ 1` satisfies `δ X_i = Y_i` for all `i`.
pub fn constant_multiplier_check(
    x: &[ComplexMatrix],
    y: &[ComplexMatrix],
    tol: Tolerance,
) -> Result<ConstantMultiplier> {
    if x.len() != y.len() {
        return Err(Error::shape(format!("{} X but {} Y", x.len(), y.len())));
    }
    let Some(first) = x.first() else {
        return Err(Error::Argument("at least one condition is required".into()));
    };
    let (k, kappa) = first.shape();
    if x.iter().chain(y).any(|m| m.shape() != (k, kappa)) {
        return Err(Error::shape("all X_i and Y_i must share one shape"));
    }
    let n = x.len();
    let sizes = vec![k; n * kappa];
    let (raw, method, tail) = assemble_pairwise(&sizes, |a, b| {
        let (i, ip) = (a / kappa, a % kappa);
        let (j, jp) = (b / kappa, b % kappa);
        let value = x[i].column(ip) * x[j].column(jp).adjoint() - y[i].column(ip) * y[j].column(jp).adjoint();
        Ok(Block::exact(value, SumMethod::ClosedForm))
    })?;
    let report = FeasibilityReport::from_raw(raw, method, tail, tol)?;

    let stack = |ms: &[ComplexMatrix]| {
        let mut v = ComplexMatrix::zeros(n * k * kappa, 1);
        for ip in 0..kappa {
            for (i, m) in ms.iter().enumerate() {
                for r in 0..k {
                    v[((ip * n + i) * k + r, 0)] = m[(r, ip)];
                }
            }
        }
        v
    };
    let (xv, yv) = (stack(x), stack(y));
    let rank_one = hermitize(&(&xv * xv.adjoint() - &yv * yv.adjoint()))?;

    let xx = xv.norm_squared();
    let delta = if xx == 0.0 {
        (yv.norm() == 0.0).then_some(CZERO)
    } else {
        let d = (xv.adjoint() * &yv)[(0, 0)] / xx;
        let resid = (&xv * d - &yv).norm();
        let slack = report.verdict.tolerance_used.max(1e-12).sqrt();
        (report.feasible() && d.norm() <= 1.0 + slack && resid <= slack * xx.sqrt().max(1.0)).then_some(d)
    };
    Ok(ConstantMultiplier { report, rank_one, delta })
}

/// Truncated norm of `[[M_V, 0], [M_W, M_{B0}]]` over degrees `0..=l`.
///
/// Lower bound on the multiplier norm, nondecreasing in `l`.
pub fn two_vertex_toeplitz_norm(v: &[ComplexMatrix], w: &[ComplexMatrix], b0: &ComplexMatrix, l: usize) -> Result<f64> {
    let na = v.first().map(|m| m.nrows()).or_else(|| w.first().map(|m| m.ncols())).unwrap_or(0);
    let nb = b0.nrows();
    if b0.ncols() != nb || v.iter().any(|m| m.shape() != (na, na)) || w.iter().any(|m| m.shape() != (nb, na)) {
        return Err(Error::shape("V_n must be square on A, W_n map A into B, B0 be square on B"));
    }
    let deg = l + 1;
    let (ta, tb) = (deg * na, deg * nb);
    let mut m = ComplexMatrix::zeros(ta + tb, ta + tb);
    for row in 0..deg {
        for col in 0..=row {
            if let Some(vn) = v.get(row - col) {
                m.view_mut((row * na, col * na), (na, na)).copy_from(vn);
            }
            if let Some(wn) = w.get(row - col) {
                m.view_mut((ta + row * nb, col * na), (nb, na)).copy_from(wn);
            }
        }
        m.view_mut((ta + row * nb, ta + row * nb), (nb, nb)).copy_from(b0);
    }
    Ok(operator_norm(&m))
}

/// Verdict of a stacked matrix, used where several per-vertex reports must combine.
pub fn combined_verdict(report: &QuiverReport) -> crate::matcore::PsdVerdict {
    let tol = report.vertices.iter().map(|r| r.verdict.tolerance_used).fold(0.0, f64::max);
    verdict_from(report.min_eigenvalue(), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball_np::{pick_nc_ltoa, word_power, OperatorTuple, Word};
    use crate::matcore::{c, permute_symmetric};
    use crate::random::{gaussian_matrix, seeded, SeededRng};

    fn scal(v: f64) -> ComplexMatrix {
        ComplexMatrix::from_element(1, 1, c(v, 0.0))
    }

    #[test]
    fn two_vertex_paths() {
        let q = Quiver::two_vertex_example();
        let names: Vec<String> = paths_up_to(&q, 2).unwrap().iter().map(|p| p.display(&q)).collect();
        assert_eq!(names, vec!["a", "b", "alpha", "beta", "alpha.alpha", "beta.alpha"]);
    }

    #[test]
    fn single_vertex_paths_are_words() {
        let q = Quiver::single_vertex(3).unwrap();
        let paths = paths_up_to(&q, 3).unwrap();
        let words = crate::ball_np::words_up_to(3, 3).unwrap();
        assert_eq!(paths.len(), words.len());
        for l in 0..=3 {
            assert_eq!(paths.iter().filter(|p| p.len() == l).count(), 3usize.pow(l as u32));
        }
    }

    #[test]
    fn path_counts_match_adjacency_powers() {
        let q = Quiver::from_names(
            &["u", "v", "w"],
            &[("a", "u", "v"), ("b", "v", "w"), ("c", "w", "u"), ("d", "u", "u"), ("e", "v", "u"), ("f", "w", "w")],
        )
        .unwrap();
        let adj = q.adjacency();
        let paths = paths_up_to(&q, 5).unwrap();
        let mut power = vec![vec![0usize; 3]; 3];
        for (k, row) in power.iter_mut().enumerate() {
            row[k] = 1;
        }
        for l in 0..=5 {
            let expect: usize = power.iter().flatten().sum();
            assert_eq!(paths.iter().filter(|p| p.len() == l).count(), expect);
            let mut next = vec![vec![0usize; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    next[i][j] = (0..3).map(|k| adj[i][k] * power[k][j]).sum();
                }
            }
            power = next;
        }
        assert!(paths.iter().all(|p| p.validate(&q).is_ok()));
    }

    #[test]
    fn membership_examples() {
        let q = Quiver::two_vertex_example();
        let dims = GradedSpace::new(vec![1, 1]).unwrap();
        let zero = QuiverPoint::zeros(&q, &dims, PointKind::Tensor);
        let m = disk_membership(&q, &dims, &zero).unwrap();
        assert!(m.member && m.worst == 0.0);
        let p = QuiverPoint { kind: PointKind::Tensor, blocks: vec![scal(0.6), scal(0.6)] };
        let m = disk_membership(&q, &dims, &p).unwrap();
        assert!(m.member);
        assert!((m.row_norms[0] - 0.6).abs() < 1e-15 && (m.row_norms[1] - 0.6).abs() < 1e-15);
        let p = QuiverPoint { kind: PointKind::Tensor, blocks: vec![scal(1.0), scal(0.6)] };
        assert!(!disk_membership(&q, &dims, &p).unwrap().member);
    }

    #[test]
    fn path_power_examples() {
        let q = Quiver::two_vertex_example();
        let dims = GradedSpace::new(vec![2, 3]).unwrap();
        let mut rng = seeded(1);
        let p = random_member_point(&mut rng, &q, &dims, PointKind::Tensor, 0.7);
        assert_eq!(path_power(&q, &dims, &p, &Path::vertex(1)).unwrap(), ComplexMatrix::identity(3, 3));
        let ba = Path::from_arrows(&q, vec![1, 0]).unwrap();
        assert_eq!(path_power(&q, &dims, &p, &ba).unwrap(), &p.blocks[1] * &p.blocks[0]);
        assert!(matches!(Path::from_arrows(&q, vec![0, 1]), Err(Error::Path(_))));

        let sv = Quiver::single_vertex(2).unwrap();
        let d1 = GradedSpace::new(vec![3]).unwrap();
        let t = random_member_point(&mut rng, &sv, &d1, PointKind::Tensor, 0.8);
        let tuple = OperatorTuple::new(t.blocks.clone()).unwrap();
        let path = Path::from_arrows(&sv, vec![1, 0, 0, 1]).unwrap();
        let direct = word_power(&tuple, &Word(vec![1, 0, 0, 1]), false).unwrap();
        assert!((path_power(&sv, &d1, &t, &path).unwrap() - direct).norm() < 1e-14);
    }

    #[test]
    fn qltt_zero_points() {
        let q = Quiver::two_vertex_example();
        let dims = GradedSpace::new(vec![2, 1]).unwrap();
        let mut rng = seeded(2);
        let zero = QuiverPoint::zeros(&q, &dims, PointKind::Tensor);
        let x = gaussian_matrix(&mut rng, 2, 3);
        let r = pick_qltt(
            &q,
            &dims,
            &[1, 1],
            &[1, 1],
            &[zero],
            &[x.clone()],
            &[x.clone()],
            &SeriesOptions::default(),
            Tolerance::Auto,
        )
        .unwrap();
        assert!(r.feasible());
        for rep in &r.vertices {
            assert_eq!(rep.pick.as_matrix().norm(), 0.0);
        }
    }

    #[test]
    fn qltt_matches_path_enumeration() {
        let q = Quiver::two_vertex_example();
        let dims = GradedSpace::new(vec![2, 1]).unwrap();
        let (yd, ud) = ([1usize, 2], [2usize, 1]);
        let mut rng = seeded(3);
        let pts: Vec<_> = (0..2).map(|_| random_member_point(&mut rng, &q, &dims, PointKind::Tensor, 0.5)).collect();
        let x: Vec<_> = (0..2).map(|_| gaussian_matrix(&mut rng, 2, 4)).collect();
        let y: Vec<_> = (0..2).map(|_| gaussian_matrix(&mut rng, 2, 5)).collect();
        let r = pick_qltt(&q, &dims, &yd, &ud, &pts, &x, &y, &SeriesOptions::default(), Tolerance::Auto).unwrap();
        let paths = paths_up_to(&q, 40).unwrap();
        let qs = GradedSpace::new(vec![yd[0] * 2, yd[1]]).unwrap();
        let rs = GradedSpace::new(vec![ud[0] * 2, ud[1]]).unwrap();
        for v in 0..2 {
            let kv = dims.dim(v);
            for a in 0..2 * kv {
                for b in 0..2 * kv {
                    let (i, ip, j, jp) = (a / kv, a % kv, b / kv, b % kv);
                    let mut sum = ComplexMatrix::zeros(2, 2);
                    for p in paths.iter().filter(|p| p.s() == v) {
                        let w = p.r(&q);
                        let zi = path_power(&q, &dims, &pts[i], p).unwrap();
                        let zj = path_power(&q, &dims, &pts[j], p).unwrap();
                        let f = zi.column(ip) * zj.column(jp).adjoint();
                        let xq = identity_kron(yd[w], &f);
                        let yq = identity_kron(ud[w], &f);
                        let xi = x[i].columns(qs.offset(w), qs.dim(w)).into_owned();
                        let xj = x[j].columns(qs.offset(w), qs.dim(w)).into_owned();
                        let yi = y[i].columns(rs.offset(w), rs.dim(w)).into_owned();
                        let yj = y[j].columns(rs.offset(w), rs.dim(w)).into_owned();
                        sum += xi * xq * xj.adjoint() - yi * yq * yj.adjoint();
                    }
                    let blk = r.vertices[v].pick.as_matrix().view((2 * a, 2 * b), (2, 2)).into_owned();
                    assert!((blk - sum).norm() < 1e-10, "vertex {v} block ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn qltoa_zero_points_and_single_vertex() {
        let q = Quiver::two_vertex_example();
        let dims = GradedSpace::new(vec![2, 1]).unwrap();
        let mut rng = seeded(4);
        let mk = |rng: &mut SeededRng, cols: [usize; 2]| {
            crate::matcore::direct_sum(&[gaussian_matrix(rng, 2, cols[0]), gaussian_matrix(rng, 1, cols[1])])
        };
        let x = vec![mk(&mut rng, [1, 1]), mk(&mut rng, [1, 1])];
        let y = vec![mk(&mut rng, [2, 1]), mk(&mut rng, [2, 1])];
        let zero = QuiverPoint::zeros(&q, &dims, PointKind::OperatorArgument);
        let r = pick_qltoa(
            &q,
            &dims,
            &[1, 1],
            &[2, 1],
            &[zero.clone(), zero],
            &x,
            &y,
            &SeriesOptions::default(),
            Tolerance::Auto,
        )
        .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = &x[i] * x[j].adjoint() - &y[i] * y[j].adjoint();
                let blk = r.pick.as_matrix().view((3 * i, 3 * j), (3, 3)).into_owned();
                assert!((blk - expect).norm() < 1e-14);
            }
        }
        let mut bad = x[0].clone();
        bad[(2, 0)] = c(1.0, 0.0);
        let zero = QuiverPoint::zeros(&q, &dims, PointKind::OperatorArgument);
        let err = pick_qltoa(
            &q,
            &dims,
            &[1, 1],
            &[2, 1],
            &[zero],
            &[bad],
            &y[..1],
            &SeriesOptions::default(),
            Tolerance::Auto,
        );
        assert!(matches!(err, Err(Error::Shape(_))));

        let sv = Quiver::single_vertex(2).unwrap();
        let d1 = GradedSpace::new(vec![2]).unwrap();
        let pts: Vec<_> =
            (0..2).map(|_| random_member_point(&mut rng, &sv, &d1, PointKind::OperatorArgument, 0.6)).collect();
        let xs: Vec<_> = (0..2).map(|_| gaussian_matrix(&mut rng, 2, 2)).collect();
        let ys: Vec<_> = (0..2).map(|_| gaussian_matrix(&mut rng, 2, 1)).collect();
        let a = pick_qltoa(&sv, &d1, &[2], &[1], &pts, &xs, &ys, &SeriesOptions::default(), Tolerance::Auto).unwrap();
        let tuples: Vec<_> = pts.iter().map(|p| OperatorTuple::new(p.blocks.clone()).unwrap()).collect();
        let b = pick_nc_ltoa(&tuples, &xs, &ys, &SeriesOptions::default(), Tolerance::Auto).unwrap();
        assert!((a.pick.as_matrix() - b.pick.as_matrix()).norm() < 1e-12);
    }

    #[test]
    fn qltoa_two_vertex_grading_zeros() {
        let q = Quiver::two_vertex_example();
        let dims = GradedSpace::new(vec![2, 1]).unwrap();
        let mut rng = seeded(5);
        let pts: Vec<_> =
            (0..3).map(|_| random_member_point(&mut rng, &q, &dims, PointKind::OperatorArgument, 0.6)).collect();
        let x: Vec<_> = (0..3)
            .map(|_| crate::matcore::direct_sum(&[gaussian_matrix(&mut rng, 2, 1), gaussian_matrix(&mut rng, 1, 1)]))
            .collect();
        let y: Vec<_> = (0..3)
            .map(|_| crate::matcore::direct_sum(&[gaussian_matrix(&mut rng, 2, 1), gaussian_matrix(&mut rng, 1, 1)]))
            .collect();
        let r =
            pick_qltoa(&q, &dims, &[1, 1], &[1, 1], &pts, &x, &y, &SeriesOptions::default(), Tolerance::Auto).unwrap();
        let perm = vertex_grouping(&dims, 3);
        let grouped = permute_symmetric(r.pick.as_matrix(), &perm);
        // Vertex a rows come first (3 copies of dim 2), vertex b rows after.
        assert!(grouped.view((0, 6), (6, 3)).iter().all(|z| z.norm() < 1e-14));
        assert!(grouped.view((6, 0), (3, 6)).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn qltrd_zero_and_split() {
        let q = Quiver::two_vertex_example();
        let dims = GradedSpace::new(vec![1, 1]).unwrap();
        let zero = QuiverPoint::zeros(&q, &dims, PointKind::Tensor);
        let mut rng = seeded(6);
        let x = gaussian_matrix(&mut rng, 2, 2);
        let r =
            pick_qltrd(&q, &dims, &[zero], &[x.clone()], &[x], 2, &SeriesOptions::default(), Tolerance::Auto).unwrap();
        assert_eq!(r.pick.as_matrix().norm(), 0.0);
    }

    #[test]
    fn qltrd_single_vertex_is_frd_star() {
        let sv = Quiver::single_vertex(2).unwrap();
        let d1 = GradedSpace::new(vec![2]).unwrap();
        let mut rng = seeded(7);
        let pts: Vec<_> = (0..2).map(|_| random_member_point(&mut rng, &sv, &d1, PointKind::Tensor, 0.3)).collect();
        let w: Vec<_> = (0..2).map(|_| gaussian_matrix(&mut rng, 2, 2)).collect();
        let id = vec![ComplexMatrix::identity(2, 2); 2];
        let a = pick_qltrd(&sv, &d1, &pts, &id, &w, 2, &SeriesOptions::default(), Tolerance::Auto).unwrap();
        let tuples: Vec<_> = pts.iter().map(|p| OperatorTuple::new(p.blocks.clone()).unwrap()).collect();
        let b = crate::ball_np::pick_nc_frd_star(&tuples, &w, 2, &SeriesOptions::default(), Tolerance::Auto).unwrap();
        assert!((a.pick.as_matrix() - b.pick.as_matrix()).norm() <= 1e-12 + a.tail_bound + b.tail_bound);
    }

    #[test]
    fn constant_multiplier_examples() {
        let row = |a: f64, b: f64| ComplexMatrix::from_row_slice(1, 2, &[c(a, 0.), c(b, 0.)]);
        let r = constant_multiplier_check(&[row(1., 0.)], &[row(0., 1.)], Tolerance::Auto).unwrap();
        let expect = ComplexMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
        assert_eq!(r.report.pick.as_matrix(), &expect);
        assert!(!r.report.feasible() && r.delta.is_none());

        let r = constant_multiplier_check(&[row(1., 0.)], &[row(0.5, 0.)], Tolerance::Auto).unwrap();
        let expect = ComplexMatrix::from_row_slice(2, 2, &[c(0.75, 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        assert_eq!(r.report.pick.as_matrix(), &expect);
        assert!(r.report.feasible());
        assert!((r.delta.unwrap() - c(0.5, 0.)).norm() < 1e-15);

        let mut rng = seeded(8);
        let xs: Vec<_> = (0..3).map(|_| gaussian_matrix(&mut rng, 2, 3)).collect();
        let r = constant_multiplier_check(&xs, &xs, Tolerance::Auto).unwrap();
        assert!(r.report.feasible() && (r.delta.unwrap() - c(1., 0.)).norm() < 1e-12);
        let e1 = crate::matcore::hermitian_eigenvalues(&r.report.pick).unwrap();
        let e2 = crate::matcore::hermitian_eigenvalues(&r.rank_one).unwrap();
        assert!(e1.iter().zip(&e2).all(|(a, b)| (a - b).abs() < 1e-12));

        let zero = vec![ComplexMatrix::zeros(1, 2)];
        assert_eq!(constant_multiplier_check(&zero, &zero, Tolerance::Auto).unwrap().delta, Some(c(0., 0.)));
    }

    #[test]
    fn toeplitz_norm_examples() {
        assert!((two_vertex_toeplitz_norm(&[scal(1.)], &[], &scal(1.), 4).unwrap() - 1.0).abs() < 1e-14);
        assert!((two_vertex_toeplitz_norm(&[], &[], &scal(-0.3), 4).unwrap() - 0.3).abs() < 1e-14);
        for l in 1..6 {
            let n = two_vertex_toeplitz_norm(&[scal(0.), scal(1.)], &[], &scal(0.), l).unwrap();
            assert!((n - 1.0).abs() < 1e-14);
        }
        let v = [scal(0.3), scal(0.2), scal(-0.1)];
        let w = [scal(0.4), scal(0.1)];
        let norms: Vec<f64> = (0..8).map(|l| two_vertex_toeplitz_norm(&v, &w, &scal(0.5), l).unwrap()).collect();
        assert!(norms.windows(2).all(|p| p[1] >= p[0] - 1e-15));
    }
}
