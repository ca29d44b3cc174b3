//! Complete positivity of linear maps between matrix algebras.
//!
//! Maps are stored extensionally: the image of every matrix unit `e_ab` is
//! kept, so the Choi matrix `[φ(e_ab)]` is read off without evaluating code.
//! A map may be declared on a block-diagonal subalgebra by labelling input
//! indices with classes; units joining two classes lie outside the domain and
//! carry zero images.
//!
//! The constructors cover the tensor-calculus maps of the disk and quiver
//! interpolation problems, their adjoint-side duals, and finite sections of
//! kernels indexed by repeated points.

use crate::ball_np::SeriesOptions;
use crate::error::{Error, Result};
use crate::matcore::{
    basis_vector, direct_sum, frobenius, hermitian_eigenvalues, hermitize, identity_kron, kron, matrix_unit,
    solve_stein, spectral_radius, verdict_from, ComplexMatrix, HermitianMatrix, Tolerance, C64,
};
use crate::quiver_np::{GradedSpace, QlttData, Quiver, QuiverPoint};
use crate::random::{gaussian_matrix, seeded};

/// Trials per amplification level in the witness search.
pub const WITNESS_TRIALS: usize = 100;
/// Largest amplification level tried by the witness search.
pub const WITNESS_MAX_K: usize = 3;

/// Relative slack for the Hermiticity-preservation check.
const HERMITIAN_SLACK: f64 = 1e-12;

/// `φ: M_n -> M_m` given by the images of the `n²` matrix units.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMapOnMatrices {
    in_dim: usize,
    out_dim: usize,
    /// `images[a * n + b] = φ(e_ab)`.
    images: Vec<ComplexMatrix>,
    /// Class label per input index; `None` means all of `M_n`.
    domain: Option<Vec<usize>>,
    /// Bound on the Frobenius error of the image family, zero for exact images.
    tail_bound: f64,
}

impl LinearMapOnMatrices {
    pub fn new(in_dim: usize, out_dim: usize, images: Vec<ComplexMatrix>) -> Result<Self> {
        if images.len() != in_dim * in_dim {
            return Err(Error::shape(format!("{} images for {} matrix units", images.len(), in_dim * in_dim)));
        }
        if let Some((k, m)) = images.iter().enumerate().find(|(_, m)| m.shape() != (out_dim, out_dim)) {
            return Err(Error::shape(format!("image {k} is {:?}, expected {:?}", m.shape(), (out_dim, out_dim))));
        }
        Ok(LinearMapOnMatrices { in_dim, out_dim, images, domain: None, tail_bound: 0.0 })
    }

    /// Build from `f(a, b) = φ(e_ab)`.
    pub fn from_fn(
        in_dim: usize,
        out_dim: usize,
        mut f: impl FnMut(usize, usize) -> Result<ComplexMatrix>,
    ) -> Result<Self> {
        let mut images = Vec::with_capacity(in_dim * in_dim);
        for a in 0..in_dim {
            for b in 0..in_dim {
                images.push(f(a, b)?);
            }
        }
        Self::new(in_dim, out_dim, images)
    }

    /// Restrict to the block-diagonal subalgebra given by `classes`; images outside it are zeroed.
    pub fn with_domain(mut self, classes: Vec<usize>) -> Result<Self> {
        if classes.len() != self.in_dim {
            return Err(Error::shape(format!("{} class labels for input dimension {}", classes.len(), self.in_dim)));
        }
        let n = self.in_dim;
        for a in 0..n {
            for b in 0..n {
                if classes[a] != classes[b] {
                    self.images[a * n + b].fill(C64::new(0.0, 0.0));
                }
            }
        }
        self.domain = Some(classes);
        Ok(self)
    }

    pub fn with_tail_bound(mut self, tail: f64) -> Self {
        self.tail_bound = tail;
        self
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn image(&self, a: usize, b: usize) -> &ComplexMatrix {
        &self.images[a * self.in_dim + b]
    }

    pub fn images(&self) -> &[ComplexMatrix] {
        &self.images
    }

    pub fn domain_classes(&self) -> Option<&[usize]> {
        self.domain.as_deref()
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn in_domain(&self, a: usize, b: usize) -> bool {
        self.domain.as_ref().is_none_or(|c| c[a] == c[b])
    }

    /// The same images on all of `M_n`: the map composed with the conditional expectation onto the domain.
    pub fn extended(&self) -> Self {
        LinearMapOnMatrices { domain: None, ..self.clone() }
    }

    /// `φ(A) = Σ_ab A_ab φ(e_ab)`; entries outside the domain are ignored.
    pub fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.in_dim;
        if a.shape() != (n, n) {
            return Err(Error::shape(format!("input is {:?}, expected {:?}", a.shape(), (n, n))));
        }
        let mut out = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for r in 0..n {
            for c in 0..n {
                let v = a[(r, c)];
                if v != C64::new(0.0, 0.0) && self.in_domain(r, c) {
                    out += self.image(r, c) * v;
                }
            }
        }
        Ok(out)
    }

    /// `(id_k ⊗ φ)(B)` for a `k x k` block matrix with `n x n` blocks.
    pub fn amplify(&self, k: usize, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        let (n, m) = (self.in_dim, self.out_dim);
        if b.shape() != (k * n, k * n) {
            return Err(Error::shape(format!("amplified input is {:?}, expected {:?}", b.shape(), (k * n, k * n))));
        }
        let mut out = ComplexMatrix::zeros(k * m, k * m);
        for s in 0..k {
            for t in 0..k {
                let blk = self.apply(&b.view((s * n, t * n), (n, n)).into_owned())?;
                out.view_mut((s * m, t * m), (m, m)).copy_from(&blk);
            }
        }
        Ok(out)
    }

    /// Class labels in order of first appearance, each with its input indices.
    fn classes(&self) -> Vec<Vec<usize>> {
        match &self.domain {
            None => vec![(0..self.in_dim).collect()],
            Some(labels) => {
                let mut seen: Vec<(usize, Vec<usize>)> = Vec::new();
                for (a, &l) in labels.iter().enumerate() {
                    match seen.iter_mut().find(|(k, _)| *k == l) {
                        Some((_, v)) => v.push(a),
                        None => seen.push((l, vec![a])),
                    }
                }
                seen.into_iter().map(|(_, v)| v).collect()
            }
        }
    }

    fn scale(&self) -> f64 {
        self.images.iter().map(frobenius).fold(1.0, f64::max)
    }
}

/// Choi matrix `[φ(e_ab)]`; for a restricted domain, the direct sum of the per-class Choi matrices.
///
/// Fails unless `φ(e_ba) = φ(e_ab)*` for every unit in the domain, which is
/// Hermiticity preservation.
pub fn choi_matrix(phi: &LinearMapOnMatrices) -> Result<HermitianMatrix> {
    let slack = HERMITIAN_SLACK * phi.scale();
    let n = phi.in_dim;
    for a in 0..n {
        for b in a..n {
            if phi.in_domain(a, b) && frobenius(&(phi.image(b, a) - phi.image(a, b).adjoint())) > slack {
                return Err(Error::Map(format!("image of e_{b}{a} is not the adjoint of the image of e_{a}{b}")));
            }
        }
    }
    let m = phi.out_dim;
    let pieces: Vec<ComplexMatrix> = phi
        .classes()
        .iter()
        .map(|idx| {
            let k = idx.len();
            let mut out = ComplexMatrix::zeros(k * m, k * m);
            for (r, &a) in idx.iter().enumerate() {
                for (c, &b) in idx.iter().enumerate() {
                    out.view_mut((r * m, c * m), (m, m)).copy_from(phi.image(a, b));
                }
            }
            out
        })
        .collect();
    hermitize(&direct_sum(&pieces))
}

/// A PSD input to `id_k ⊗ φ` whose image has a negative eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub k: usize,
    pub input: ComplexMatrix,
    pub image_min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpVerdict {
    pub is_cp: bool,
    pub choi_min_eig: f64,
    /// PSD tolerance plus the map's tail bound.
    pub tolerance_used: f64,
    /// Present only when `is_cp` is false and sampling found one.
    pub witness: Option<Witness>,
}

/// Decide complete positivity from the Choi matrix; when it fails, search for a witness.
///
/// The search draws unit-norm rank-one inputs `g g*` with Gaussian `g`,
/// compressed to the domain, for `k = 1..=3` and [`WITNESS_TRIALS`] draws per level.
pub fn cp_check(phi: &LinearMapOnMatrices, tol: Tolerance, seed: u64) -> Result<CpVerdict> {
    let choi = choi_matrix(phi)?;
    let vals = hermitian_eigenvalues(&choi)?;
    let tolerance_used = tol.resolve(&choi, &vals)? + phi.tail_bound;
    let choi_min_eig = vals.first().copied().unwrap_or(0.0);
    let is_cp = verdict_from(choi_min_eig, tolerance_used).is_psd;
    let witness = if is_cp { None } else { search_witness(phi, tolerance_used, seed)? };
    Ok(CpVerdict { is_cp, choi_min_eig, tolerance_used, witness })
}

fn search_witness(phi: &LinearMapOnMatrices, tol: f64, seed: u64) -> Result<Option<Witness>> {
    let mut rng = seeded(seed);
    let n = phi.in_dim;
    for k in 1..=WITNESS_MAX_K {
        for _ in 0..WITNESS_TRIALS {
            let g = gaussian_matrix(&mut rng, k * n, 1);
            let g = &g / C64::new(g.norm().max(f64::MIN_POSITIVE), 0.0);
            let mut input = &g * g.adjoint();
            for r in 0..k * n {
                for c in 0..k * n {
                    if !phi.in_domain(r % n, c % n) {
                        input[(r, c)] = C64::new(0.0, 0.0);
                    }
                }
            }
            let image = hermitize(&phi.amplify(k, &input)?)?;
            let min = hermitian_eigenvalues(&image)?.first().copied().unwrap_or(0.0);
            if min < -tol {
                return Ok(Some(Witness { k, input, image_min_eigenvalue: min }));
            }
        }
    }
    Ok(None)
}

/// `sqrt(Σ ‖φ(e_ab)‖_F²)`, which bounds `‖φ(A)‖_F / ‖A‖_F`.
fn family_norm(phi: &LinearMapOnMatrices) -> f64 {
    phi.images.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

/// `outer ∘ inner`, on the domain of `inner`.
pub fn compose(outer: &LinearMapOnMatrices, inner: &LinearMapOnMatrices) -> Result<LinearMapOnMatrices> {
    if inner.out_dim != outer.in_dim {
        return Err(Error::shape(format!(
            "inner map lands in M_{}, outer map acts on M_{}",
            inner.out_dim, outer.in_dim
        )));
    }
    let images = inner.images.iter().map(|m| outer.apply(m)).collect::<Result<Vec<_>>>()?;
    let mut out = LinearMapOnMatrices::new(inner.in_dim, outer.out_dim, images)?;
    if let Some(c) = &inner.domain {
        out = out.with_domain(c.clone())?;
    }
    Ok(out.with_tail_bound(outer.tail_bound * family_norm(inner) + family_norm(outer) * inner.tail_bound))
}

pub fn identity_map(n: usize) -> LinearMapOnMatrices {
    LinearMapOnMatrices::from_fn(n, n, |a, b| Ok(matrix_unit(n, a, b))).expect("unit images have the declared shape")
}

pub fn transpose_map(n: usize) -> LinearMapOnMatrices {
    LinearMapOnMatrices::from_fn(n, n, |a, b| Ok(matrix_unit(n, b, a))).expect("unit images have the declared shape")
}

/// `A ↦ V A V*` for `V: m x n`.
pub fn conjugation_map(v: &ComplexMatrix) -> LinearMapOnMatrices {
    let (m, n) = v.shape();
    LinearMapOnMatrices::from_fn(n, m, |a, b| Ok(v.column(a) * v.column(b).adjoint()))
        .expect("rank-one images have the declared shape")
}

/// Compression onto the block diagonal: `e_ab ↦ e_ab` when `labels[a] == labels[b]`, else zero.
pub fn conditional_expectation_map(labels: &[usize]) -> LinearMapOnMatrices {
    let n = labels.len();
    LinearMapOnMatrices::from_fn(n, n, |a, b| {
        Ok(if labels[a] == labels[b] { matrix_unit(n, a, b) } else { ComplexMatrix::zeros(n, n) })
    })
    .expect("unit images have the declared shape")
}

fn require_stable_points(z: &[ComplexMatrix]) -> Result<usize> {
    let g = z.first().map(|m| m.nrows()).unwrap_or(0);
    for (i, zi) in z.iter().enumerate() {
        if zi.shape() != (g, g) {
            return Err(Error::shape(format!("point {i} is {:?}, expected {:?}", zi.shape(), (g, g))));
        }
        let rho = spectral_radius(zi)?;
        if rho >= 1.0 {
            return Err(Error::domain(format!("point {i} has spectral radius {rho} >= 1")));
        }
    }
    Ok(g)
}

/// Place `blk` at block `(i, j)` of an `n x n` array of `s x s` zero blocks.
fn lone_block(n: usize, s: usize, i: usize, j: usize, blk: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(n * s, n * s);
    out.view_mut((i * s, j * s), (s, s)).copy_from(blk);
    out
}

/// `[B_ij] ↦ [X_i (I_V ⊗ S_ij) X_j* - Y_i (I_U ⊗ S_ij) Y_j*]` with `S_ij = Σ_n Z_iⁿ B_ij Z_j*ⁿ`.
///
/// `X_i: c x (v_dim g)`, `Y_i: c x (u_dim g)`. Input unit `(i, p), (j, q)` sits at `i g + p`.
pub fn build_phi_disk(
    z: &[ComplexMatrix],
    x: &[ComplexMatrix],
    y: &[ComplexMatrix],
    v_dim: usize,
    u_dim: usize,
) -> Result<LinearMapOnMatrices> {
    let n = z.len();
    if x.len() != n || y.len() != n {
        return Err(Error::shape(format!("{n} points but {} X and {} Y", x.len(), y.len())));
    }
    let g = require_stable_points(z)?;
    let c = x.first().map(|m| m.nrows()).unwrap_or(0);
    for i in 0..n {
        if x[i].shape() != (c, v_dim * g) || y[i].shape() != (c, u_dim * g) {
            return Err(Error::shape(format!(
                "condition {i}: expected X {:?} and Y {:?}, got {:?} and {:?}",
                (c, v_dim * g),
                (c, u_dim * g),
                x[i].shape(),
                y[i].shape()
            )));
        }
    }
    let mut tail_sq = 0.0;
    let map = LinearMapOnMatrices::from_fn(n * g, n * c, |a, b| {
        let (i, p, j, q) = (a / g, a % g, b / g, b % g);
        let s = solve_stein(&z[i], &matrix_unit(g, p, q), &z[j])?;
        tail_sq += (s.tail_bound * (x[i].norm() * x[j].norm() + y[i].norm() * y[j].norm())).powi(2);
        let blk =
            &x[i] * identity_kron(v_dim, &s.p) * x[j].adjoint() - &y[i] * identity_kron(u_dim, &s.p) * y[j].adjoint();
        Ok(lone_block(n, c, i, j, &blk))
    })?;
    Ok(map.with_tail_bound(tail_sq.sqrt()))
}

/// `[C_ij] ↦ [Σ_n Z_i*ⁿ (X_i* C_ij X_j - Y_i* C_ij Y_j) Z_jⁿ]` for `X_i, Y_i: c x g`.
///
/// Input unit `(i, k), (j, l)` sits at `i c + k`.
pub fn build_phi_star_disk(
    z: &[ComplexMatrix],
    x: &[ComplexMatrix],
    y: &[ComplexMatrix],
) -> Result<LinearMapOnMatrices> {
    let n = z.len();
    if x.len() != n || y.len() != n {
        return Err(Error::shape(format!("{n} points but {} X and {} Y", x.len(), y.len())));
    }
    let g = require_stable_points(z)?;
    let c = x.first().map(|m| m.nrows()).unwrap_or(0);
    for i in 0..n {
        if x[i].shape() != (c, g) || y[i].shape() != (c, g) {
            return Err(Error::shape(format!("condition {i}: X and Y must be {:?}", (c, g))));
        }
    }
    let mut tail_sq = 0.0;
    let map = LinearMapOnMatrices::from_fn(n * c, n * g, |a, b| {
        let (i, k, j, l) = (a / c, a % c, b / c, b % c);
        let q = x[i].row(k).adjoint() * x[j].row(l) - y[i].row(k).adjoint() * y[j].row(l);
        let s = solve_stein(&z[i].adjoint(), &q, &z[j].adjoint())?;
        tail_sq += s.tail_bound * s.tail_bound;
        Ok(lone_block(n, g, i, j, &s.p))
    })?;
    Ok(map.with_tail_bound(tail_sq.sqrt()))
}

/// Vertex of each coordinate of a graded space.
fn coordinate_vertices(dims: &GradedSpace) -> Vec<usize> {
    (0..dims.num_vertices()).flat_map(|v| std::iter::repeat_n(v, dims.dim(v))).collect()
}

/// Quiver tensor map on `N x N` arrays over `⊕_v L(G_v)`, through the path-sum kernel.
///
/// Input unit `(i, p), (j, q)` sits at `i g + p` with `g = dim G`; units with
/// `p`, `q` at different vertices lie outside the domain.
#[allow(clippy::too_many_arguments)]
pub fn build_phi_quiver(
    q: &Quiver,
    z_dims: &GradedSpace,
    y_dims: &[usize],
    u_dims: &[usize],
    points: &[QuiverPoint],
    x: &[ComplexMatrix],
    y: &[ComplexMatrix],
    opts: &SeriesOptions,
) -> Result<LinearMapOnMatrices> {
    let data = QlttData::new(q, z_dims, y_dims, u_dims, points, x, y)?;
    let (n, g, c) = (points.len(), z_dims.total(), data.c);
    let verts = coordinate_vertices(z_dims);
    let mut spent = 0;
    let mut tail_sq = 0.0;
    let map = LinearMapOnMatrices::from_fn(n * g, n * c, |a, b| {
        let (i, p, j, pq) = (a / g, a % g, b / g, b % g);
        if verts[p] != verts[pq] {
            return Ok(ComplexMatrix::zeros(n * c, n * c));
        }
        let (blk, t) = data.kernel(i, j, p, pq, opts, &mut spent)?;
        tail_sq += t * t;
        Ok(lone_block(n, c, i, j, &blk))
    })?;
    let labels = (0..n * g).map(|a| verts[a % g]).collect();
    Ok(map.with_domain(labels)?.with_tail_bound(tail_sq.sqrt()))
}

/// The quiver tensor map extended to all of `L(G)^{N x N}` by precomposing the blockwise conditional expectation.
#[allow(clippy::too_many_arguments)]
pub fn build_phi_bar_quiver(
    q: &Quiver,
    z_dims: &GradedSpace,
    y_dims: &[usize],
    u_dims: &[usize],
    points: &[QuiverPoint],
    x: &[ComplexMatrix],
    y: &[ComplexMatrix],
    opts: &SeriesOptions,
) -> Result<LinearMapOnMatrices> {
    let phi = build_phi_quiver(q, z_dims, y_dims, u_dims, points, x, y, opts)?;
    let labels = phi.domain_classes().map(<[usize]>::to_vec).unwrap_or_default();
    compose(&phi.extended(), &conditional_expectation_map(&labels))
}

/// Row order taking the Choi matrix of the extended quiver map to `⊕_v P_v ⊕ 0`.
///
/// `P_v` is the per-vertex tensor Pick matrix with rows `(i, p', r)`: condition
/// `i`, coordinate `p'` of `G_v`, row `r` of the `c`-dimensional target.
pub fn choi_vertex_permutation(n_points: usize, z_dims: &GradedSpace, c: usize) -> Vec<usize> {
    let g = z_dims.total();
    let m = n_points * c;
    let mut perm = Vec::with_capacity(n_points * g * m);
    for v in 0..z_dims.num_vertices() {
        for i in 0..n_points {
            for pp in 0..z_dims.dim(v) {
                let a = i * g + z_dims.offset(v) + pp;
                perm.extend((0..c).map(|r| a * m + i * c + r));
            }
        }
    }
    let mut used = vec![false; n_points * g * m];
    for &r in &perm {
        used[r] = true;
    }
    perm.extend((0..used.len()).filter(|&r| !used[r]));
    perm
}

/// Complete positivity of the map `[B_ab] ↦ [K(ω_a, ω_b)[B_ab]]` on the repeated-point section.
///
/// The section lists `sections` copies of the `n_points` indices, so `ω_a` is
/// index `a mod n_points`; `K(i, j)` maps `g x g` inputs to `c x c` outputs.
pub fn finite_section_kernel_check(
    mut kernel: impl FnMut(usize, usize, &ComplexMatrix) -> Result<ComplexMatrix>,
    n_points: usize,
    g: usize,
    c: usize,
    sections: usize,
    tol: Tolerance,
    seed: u64,
) -> Result<CpVerdict> {
    let len = sections * n_points;
    let phi = LinearMapOnMatrices::from_fn(len * g, len * c, |u, w| {
        let (a, p, b, q) = (u / g, u % g, w / g, w % g);
        let blk = kernel(a % n_points, b % n_points, &matrix_unit(g, p, q))?;
        if blk.shape() != (c, c) {
            return Err(Error::shape(format!("kernel value is {:?}, expected {:?}", blk.shape(), (c, c))));
        }
        Ok(lone_block(len, c, a, b, &blk))
    })?;
    cp_check(&phi, tol, seed)
}

/// Stacked columns of `v`; the Choi vector of `A ↦ V A V*`.
pub fn column_stack(v: &ComplexMatrix) -> ComplexMatrix {
    let (m, n) = v.shape();
    let mut out = ComplexMatrix::zeros(m * n, 1);
    for a in 0..n {
        out.view_mut((a * m, 0), (m, 1)).copy_from(&v.column(a));
    }
    out
}

/// `Σ_a e_a ⊗ e_a`.
pub fn maximally_entangled(n: usize) -> ComplexMatrix {
    (0..n).fold(ComplexMatrix::zeros(n * n, 1), |acc, a| acc + kron(&basis_vector(n, a), &basis_vector(n, a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disk_np::{pick_lt, pick_ltrd};
    use crate::matcore::{permute_symmetric, CONE, CZERO};
    use crate::oracle::{eval_quiver, eval_tensor, sample_contractive_poly, QuiverArgument, SampleKind};
    use crate::quiver_np::{pick_qltt, random_member_point, PointKind};
    use crate::random::{disk_point, seeded, with_spectral_radius, SeededRng};
    use proptest::prelude::*;

    fn eig(h: &HermitianMatrix) -> Vec<f64> {
        hermitian_eigenvalues(h).unwrap()
    }

    #[test]
    fn identity_map_choi_is_rank_one() {
        let choi = choi_matrix(&identity_map(2)).unwrap();
        let e = maximally_entangled(2);
        assert_eq!(choi.as_matrix(), &(&e * e.adjoint()));
        let vals = eig(&choi);
        for (v, want) in vals.iter().zip([0.0, 0.0, 0.0, 2.0]) {
            assert!((v - want).abs() < 1e-12);
        }
        assert!(cp_check(&identity_map(2), Tolerance::Auto, 0).unwrap().is_cp);
    }

    #[test]
    fn transpose_map_is_swap_and_fails() {
        let n = 2;
        let mut swap = ComplexMatrix::zeros(n * n, n * n);
        for a in 0..n {
            for b in 0..n {
                swap[(b * n + a, a * n + b)] = CONE;
            }
        }
        let t = transpose_map(n);
        let choi = choi_matrix(&t).unwrap();
        assert_eq!(choi.as_matrix(), &swap);
        let v = cp_check(&t, Tolerance::Auto, 7).unwrap();
        assert!(!v.is_cp);
        assert!((v.choi_min_eig + 1.0).abs() < 1e-12);
        let w = v.witness.expect("transpose has a 2-positivity witness");
        // Transposition is positive, so no witness exists at k = 1.
        assert_eq!(w.k, 2);
        let mut partial = ComplexMatrix::zeros(4, 4);
        for s in 0..2 {
            for r in 0..2 {
                let blk = w.input.view((s * 2, r * 2), (2, 2)).transpose();
                partial.view_mut((s * 2, r * 2), (2, 2)).copy_from(&blk);
            }
        }
        let min = eig(&hermitize(&partial).unwrap())[0];
        assert!((min - w.image_min_eigenvalue).abs() < 1e-12 && min < 0.0);
    }

    #[test]
    fn conjugation_map_choi_is_column_stack() {
        let mut rng = seeded(1);
        let v = gaussian_matrix(&mut rng, 3, 2);
        let phi = conjugation_map(&v);
        let w = column_stack(&v);
        let choi = choi_matrix(&phi).unwrap();
        assert!((choi.as_matrix() - &w * w.adjoint()).norm() < 1e-13);
        assert!(cp_check(&phi, Tolerance::Auto, 0).unwrap().is_cp);
        let b = gaussian_matrix(&mut rng, 2, 2);
        assert!((phi.apply(&b).unwrap() - &v * &b * v.adjoint()).norm() < 1e-13);
    }

    #[test]
    fn conditional_expectation_is_cp() {
        let mut rng = seeded(2);
        for labels in [vec![0, 1, 0, 2, 1], vec![3, 3, 3], vec![0, 1, 2, 3]] {
            let psi = conditional_expectation_map(&labels);
            assert!(cp_check(&psi, Tolerance::Auto, 1).unwrap().is_cp);
            let a = gaussian_matrix(&mut rng, labels.len(), labels.len());
            let out = psi.apply(&a).unwrap();
            for r in 0..labels.len() {
                for c in 0..labels.len() {
                    let want = if labels[r] == labels[c] { a[(r, c)] } else { CZERO };
                    assert_eq!(out[(r, c)], want);
                }
            }
        }
    }

    #[test]
    fn non_hermitian_preserving_map_rejected() {
        let phi = LinearMapOnMatrices::from_fn(2, 2, |a, b| Ok(matrix_unit(2, a, b) * C64::new(0.0, 1.0))).unwrap();
        assert!(matches!(choi_matrix(&phi), Err(Error::Map(_))));
        assert!(matches!(LinearMapOnMatrices::new(2, 2, vec![]), Err(Error::Shape(_))));
    }

    #[test]
    fn restricted_domain_choi_is_class_direct_sum() {
        let phi = identity_map(3).with_domain(vec![0, 1, 0]).unwrap();
        let choi = choi_matrix(&phi).unwrap();
        assert_eq!(choi.dim(), (2 + 1) * 3);
        assert!(cp_check(&phi, Tolerance::Auto, 0).unwrap().is_cp);
        // Extension by zero keeps the nonzero spectrum: {2, 1} from the classes {0, 2} and {1}.
        let full = choi_matrix(&phi.extended()).unwrap();
        let (a, b) = (eig(&choi), eig(&full));
        assert_eq!(b.len(), 9);
        assert!((a[8] - 2.0).abs() < 1e-12 && (a[7] - 1.0).abs() < 1e-12 && a[6].abs() < 1e-12);
        assert!((b[8] - 2.0).abs() < 1e-12 && (b[7] - 1.0).abs() < 1e-12 && b[6].abs() < 1e-12);
    }

    #[test]
    fn phi_disk_zero_points() {
        let mut rng = seeded(3);
        let z = vec![ComplexMatrix::zeros(2, 2); 2];
        let x: Vec<_> = (0..2).map(|_| gaussian_matrix(&mut rng, 3, 4)).collect();
        let y: Vec<_> = (0..2).map(|_| gaussian_matrix(&mut rng, 3, 2)).collect();
        let phi = build_phi_disk(&z, &x, &y, 2, 1).unwrap();
        let b = gaussian_matrix(&mut rng, 4, 4);
        let out = phi.apply(&b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let bij = b.view((i * 2, j * 2), (2, 2)).into_owned();
                let want = &x[i] * identity_kron(2, &bij) * x[j].adjoint() - &y[i] * &bij * y[j].adjoint();
                assert!((out.view((i * 3, j * 3), (3, 3)) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn phi_disk_scalar_points_match_pick_lt() {
        let mut rng = seeded(4);
        for trial in 0..10 {
            let pts: Vec<C64> = (0..3).map(|_| disk_point(&mut rng, 0.8)).collect();
            let z: Vec<_> = pts.iter().map(|&l| ComplexMatrix::from_element(1, 1, l)).collect();
            let x: Vec<_> = (0..3).map(|_| gaussian_matrix(&mut rng, 2, 2)).collect();
            let y: Vec<_> = (0..3).map(|_| gaussian_matrix(&mut rng, 2, 1) * C64::new(0.3, 0.0)).collect();
            let phi = build_phi_disk(&z, &x, &y, 2, 1).unwrap();
            let lt = pick_lt(&pts, &x, &y, Tolerance::Auto).unwrap();
            let choi = choi_matrix(&phi).unwrap();
            // Unit (i, i) contributes only block (i, i) of its image.
            let rows: Vec<usize> = (0..3).flat_map(|i| (0..2).map(move |r| i * 6 + i * 2 + r)).collect();
            let compressed = permute_symmetric(choi.as_matrix(), &rows);
            assert!((compressed - lt.pick.as_matrix()).norm() < 1e-12, "trial {trial}");
            assert_eq!(cp_check(&phi, Tolerance::Auto, 0).unwrap().is_cp, lt.feasible());
        }
    }

    #[test]
    fn phi_disk_from_schur_sample_is_cp() {
        let mut rng = seeded(5);
        for seed in 0..5 {
            let s = sample_contractive_poly(2, 1, 3, &SampleKind::Disk, seed).unwrap();
            let z: Vec<_> = (0..2).map(|_| with_spectral_radius(&mut rng, 2, 0.6)).collect();
            let x: Vec<_> = (0..2).map(|_| gaussian_matrix(&mut rng, 2, 4)).collect();
            let y: Vec<_> = z.iter().zip(&x).map(|(zi, xi)| xi * eval_tensor(&s, zi).unwrap()).collect();
            let phi = build_phi_disk(&z, &x, &y, 2, 1).unwrap();
            assert!(cp_check(&phi, Tolerance::Auto, 0).unwrap().is_cp, "seed {seed}");
        }
    }

    #[test]
    fn phi_star_zero_points() {
        let mut rng = seeded(6);
        let z = vec![ComplexMatrix::zeros(3, 3); 2];
        let x: Vec<_> = (0..2).map(|_| gaussian_matrix(&mut rng, 2, 3)).collect();
        let y: Vec<_> = (0..2).map(|_| gaussian_matrix(&mut rng, 2, 3)).collect();
        let phi = build_phi_star_disk(&z, &x, &y).unwrap();
        let cm = gaussian_matrix(&mut rng, 4, 4);
        let out = phi.apply(&cm).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let cij = cm.view((i * 2, j * 2), (2, 2)).into_owned();
                let want = x[i].adjoint() * &cij * &x[j] - y[i].adjoint() * &cij * &y[j];
                assert!((out.view((i * 3, j * 3), (3, 3)) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn phi_star_choi_is_ltrd_pick() {
        let mut rng = seeded(7);
        let (n, g, c) = (2, 3, 2);
        let z: Vec<_> = (0..n).map(|_| with_spectral_radius(&mut rng, g, 0.7)).collect();
        let x: Vec<_> = (0..n).map(|_| gaussian_matrix(&mut rng, c, g)).collect();
        let y: Vec<_> = (0..n).map(|_| gaussian_matrix(&mut rng, c, g)).collect();
        let choi = choi_matrix(&build_phi_star_disk(&z, &x, &y).unwrap()).unwrap();
        let ltrd = pick_ltrd(&z, &x, &y, c, Tolerance::Auto).unwrap();
        let rows: Vec<usize> = (0..n)
            .flat_map(|i| (0..c).flat_map(move |k| (0..g).map(move |r| (i * c + k) * (n * g) + i * g + r)))
            .collect();
        assert!((permute_symmetric(choi.as_matrix(), &rows) - ltrd.pick.as_matrix()).norm() < 1e-12);
    }

    /// Data `Y = t X s(Z)` for a scalar Schur polynomial `s`: CP for `t <= 1`, usually not for large `t`.
    fn duality_instance(
        rng: &mut SeededRng,
        seed: u64,
        t: f64,
    ) -> (Vec<ComplexMatrix>, Vec<ComplexMatrix>, Vec<ComplexMatrix>) {
        let s = sample_contractive_poly(1, 1, 2, &SampleKind::Disk, seed).unwrap();
        let z: Vec<_> = (0..2).map(|_| with_spectral_radius(rng, 2, 0.7)).collect();
        let x: Vec<_> = (0..2).map(|_| gaussian_matrix(rng, 2, 2)).collect();
        let y = z.iter().zip(&x).map(|(zi, xi)| xi * eval_tensor(&s, zi).unwrap() * C64::new(t, 0.0)).collect();
        (z, x, y)
    }

    #[test]
    fn phi_and_phi_star_verdicts_agree() {
        let mut rng = seeded(8);
        let mut seen = [0usize; 2];
        for k in 0..30u64 {
            let t = if k % 2 == 0 { 0.5 } else { 3.0 };
            let (z, x, y) = duality_instance(&mut rng, 100 + k, t);
            let a = cp_check(&build_phi_disk(&z, &x, &y, 1, 1).unwrap(), Tolerance::Auto, k).unwrap();
            let b = cp_check(&build_phi_star_disk(&z, &x, &y).unwrap(), Tolerance::Auto, k).unwrap();
            assert_eq!(a.is_cp, b.is_cp, "instance {k}: {} vs {}", a.choi_min_eig, b.choi_min_eig);
            seen[a.is_cp as usize] += 1;
        }
        assert!(seen[0] > 0 && seen[1] > 0, "both verdicts exercised: {seen:?}");
    }

    fn quiver_instance(
        rng: &mut SeededRng,
        seed: u64,
        scale: f64,
    ) -> (Quiver, GradedSpace, Vec<QuiverPoint>, Vec<ComplexMatrix>, Vec<ComplexMatrix>) {
        let q = Quiver::two_vertex_example();
        let dims = GradedSpace::new(vec![2, 1]).unwrap();
        let (yd, ud) = (vec![1usize, 1], vec![1usize, 1]);
        let kind = SampleKind::Quiver { quiver: q.clone(), u_dims: ud.clone(), y_dims: yd.clone() };
        let s = sample_contractive_poly(2, 2, 2, &kind, seed).unwrap();
        let pts: Vec<_> = (0..2).map(|_| random_member_point(rng, &q, &dims, PointKind::Tensor, 0.5)).collect();
        let x: Vec<_> = (0..2).map(|_| gaussian_matrix(rng, 2, 3)).collect();
        let y = pts
            .iter()
            .zip(&x)
            .map(|(p, xi)| {
                xi * eval_quiver(&s, QuiverArgument::Tensor { z_dims: &dims, point: p }).unwrap() * C64::new(scale, 0.0)
            })
            .collect();
        (q, dims, pts, x, y)
    }

    #[test]
    fn phi_bar_choi_permutes_into_vertex_picks() {
        let mut rng = seeded(9);
        let (q, dims, pts, x, y) = quiver_instance(&mut rng, 11, 2.0);
        let opts = SeriesOptions::default();
        let one = [1usize, 1];
        let bar = build_phi_bar_quiver(&q, &dims, &one, &one, &pts, &x, &y, &opts).unwrap();
        let choi = choi_matrix(&bar).unwrap();
        let picks = pick_qltt(&q, &dims, &one, &one, &pts, &x, &y, &opts, Tolerance::Auto).unwrap();
        let perm = choi_vertex_permutation(2, &dims, 2);
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..choi.dim()).collect::<Vec<_>>());
        let permuted = permute_symmetric(choi.as_matrix(), &perm);
        let blocks: Vec<ComplexMatrix> = picks.vertices.iter().map(|r| r.pick.as_matrix().clone()).collect();
        let ds = direct_sum(&blocks);
        let k = ds.nrows();
        assert!((permuted.view((0, 0), (k, k)) - &ds).norm() < 1e-12);
        let rest = permuted.norm_squared() - permuted.view((0, 0), (k, k)).norm_squared();
        assert!(rest.abs() < 1e-24);
    }

    #[test]
    fn phi_and_phi_bar_verdicts_agree() {
        let mut rng = seeded(10);
        let opts = SeriesOptions::default();
        let one = [1usize, 1];
        let mut seen = [0usize; 2];
        for k in 0..6u64 {
            let scale = if k % 2 == 0 { 1.0 } else { 4.0 };
            let (q, dims, pts, x, y) = quiver_instance(&mut rng, 20 + k, scale);
            let phi = build_phi_quiver(&q, &dims, &one, &one, &pts, &x, &y, &opts).unwrap();
            let bar = build_phi_bar_quiver(&q, &dims, &one, &one, &pts, &x, &y, &opts).unwrap();
            let a = cp_check(&phi, Tolerance::Auto, k).unwrap();
            let b = cp_check(&bar, Tolerance::Auto, k).unwrap();
            assert_eq!(a.is_cp, b.is_cp);
            if scale == 1.0 {
                assert!(a.is_cp, "sampled Schur data must give a CP map");
            }
            seen[a.is_cp as usize] += 1;
        }
        assert!(seen[0] > 0 && seen[1] > 0, "{seen:?}");
    }

    #[test]
    fn single_vertex_quiver_matches_disk() {
        let mut rng = seeded(12);
        let q = Quiver::single_vertex(1).unwrap();
        let dims = GradedSpace::new(vec![2]).unwrap();
        let pts: Vec<_> = (0..2).map(|_| random_member_point(&mut rng, &q, &dims, PointKind::Tensor, 0.6)).collect();
        let x: Vec<_> = (0..2).map(|_| gaussian_matrix(&mut rng, 2, 4)).collect();
        let y: Vec<_> = (0..2).map(|_| gaussian_matrix(&mut rng, 2, 2)).collect();
        let opts = SeriesOptions::default();
        let a = build_phi_quiver(&q, &dims, &[2], &[1], &pts, &x, &y, &opts).unwrap();
        let z: Vec<_> = pts.iter().map(|p| p.blocks[0].clone()).collect();
        let b = build_phi_disk(&z, &x, &y, 2, 1).unwrap();
        for (u, v) in a.images().iter().zip(b.images()) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn finite_sections() {
        let zero = |_: usize, _: usize, _: &ComplexMatrix| Ok(ComplexMatrix::zeros(1, 1));
        assert!(finite_section_kernel_check(zero, 3, 2, 1, 2, Tolerance::Auto, 0).unwrap().is_cp);

        // Pick matrix [[1, 1], [1, 0]]: both conditions at the origin, X = (1, 1), Y = (0, 1).
        let (xs, ys) = ([1.0, 1.0], [0.0, 1.0]);
        let bad = |i: usize, j: usize, b: &ComplexMatrix| Ok(b * C64::new(xs[i] * xs[j] - ys[i] * ys[j], 0.0));
        let v = finite_section_kernel_check(bad, 2, 1, 1, 1, Tolerance::Auto, 0).unwrap();
        assert!(!v.is_cp);
        assert!((v.choi_min_eig - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);

        let mut rng = seeded(13);
        let s = sample_contractive_poly(1, 1, 3, &SampleKind::Disk, 14).unwrap();
        let z: Vec<_> = (0..3).map(|_| with_spectral_radius(&mut rng, 2, 0.6)).collect();
        let x: Vec<_> = (0..3).map(|_| gaussian_matrix(&mut rng, 1, 2)).collect();
        let y: Vec<_> = z.iter().zip(&x).map(|(zi, xi)| xi * eval_tensor(&s, zi).unwrap()).collect();
        let szego = |i: usize, j: usize, b: &ComplexMatrix| {
            let f = solve_stein(&z[i], b, &z[j])?.p;
            Ok(&x[i] * &f * x[j].adjoint() - &y[i] * &f * y[j].adjoint())
        };
        for k in [1, 2] {
            assert!(finite_section_kernel_check(szego, 3, 2, 1, k, Tolerance::Auto, 0).unwrap().is_cp, "k = {k}");
        }
    }

    #[test]
    fn compose_matches_sequential_application() {
        let mut rng = seeded(15);
        let v = gaussian_matrix(&mut rng, 3, 2);
        let w = gaussian_matrix(&mut rng, 2, 3);
        let both = compose(&conjugation_map(&w), &conjugation_map(&v)).unwrap();
        let wv = &w * &v;
        assert!(
            (choi_matrix(&both).unwrap().as_matrix() - choi_matrix(&conjugation_map(&wv)).unwrap().as_matrix()).norm()
                < 1e-12
        );
        assert!(matches!(compose(&conjugation_map(&v), &conjugation_map(&v)), Err(Error::Shape(_))));
    }

    fn random_map(seed: u64, n: usize, neg: f64) -> LinearMapOnMatrices {
        let mut rng = seeded(seed);
        let v = gaussian_matrix(&mut rng, n, n);
        let w = gaussian_matrix(&mut rng, n, n);
        let a = conjugation_map(&v);
        let b = conjugation_map(&w);
        let t = transpose_map(n);
        let tb = compose(&t, &b).unwrap();
        let images = a.images().iter().zip(tb.images()).map(|(p, m)| p - m * C64::new(neg, 0.0)).collect();
        LinearMapOnMatrices::new(n, n, images).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn witnesses_never_contradict_choi(seed in 0u64..1000, n in 1usize..=3, neg in 0.0f64..2.0) {
            let phi = random_map(seed, n, neg);
            let v = cp_check(&phi, Tolerance::Auto, seed).unwrap();
            if let Some(w) = &v.witness {
                prop_assert!(!v.is_cp);
                prop_assert!(w.k <= WITNESS_MAX_K);
                let image = hermitize(&phi.amplify(w.k, &w.input).unwrap()).unwrap();
                prop_assert!(eig(&image)[0] < -v.tolerance_used);
            }
            if v.is_cp {
                prop_assert!(v.witness.is_none());
            }
        }

        #[test]
        fn conditional_expectations_are_cp(labels in proptest::collection::vec(0usize..3, 1..6)) {
            prop_assert!(cp_check(&conditional_expectation_map(&labels), Tolerance::Auto, 0).unwrap().is_cp);
        }

        #[test]
        fn composition_of_cp_maps_is_cp(seed in 0u64..1000) {
            let mut rng = seeded(seed);
            let v = gaussian_matrix(&mut rng, 3, 2);
            let labels = [0usize, 1, 0];
            let phi = compose(&conditional_expectation_map(&labels), &conjugation_map(&v)).unwrap();
            prop_assert!(cp_check(&phi, Tolerance::Auto, seed).unwrap().is_cp);
        }
    }
}
