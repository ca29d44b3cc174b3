//! Certified Schur-class samples and the functional calculi they are evaluated with.
//!
//! A sample is a finitely supported coefficient family whose multiplier norm is
//! bounded above by a certified estimate: `Σ_k ‖level k‖` with each level's norm
//! computed exactly (disk levels are single coefficients; word and path levels
//! have orthogonal ranges). Random samples are rescaled so this bound is 0.95.
//! The truncated Toeplitz norm, a lower bound, is recorded alongside.

use std::collections::HashMap;

use rand::Rng;

use crate::ball_np::{word_count, word_power, words_up_to, OperatorTuple, Word};
use crate::error::{Error, Result};
use crate::matcore::{kron, operator_norm, spectral_radius, ComplexMatrix, C64, CONE, CZERO};
use crate::quiver_np::{
    disk_membership, path_count, path_power, paths_up_to, GradedSpace, Path, PointKind, Quiver, QuiverPoint,
};
use crate::random::{disk_point, gaussian_matrix, seeded};

/// Taylor coefficients stored for a Blaschke sample.
pub const BLASCHKE_TERMS: usize = 64;

/// Norm target for rescaled random samples.
pub const SCALE_TARGET: f64 = 0.95;

/// Largest coefficient degree for word and path samples.
pub const MAX_NC_DEGREE: usize = 8;

/// Largest Toeplitz truncation (rows) used when reporting a norm.
const TOEPLITZ_ROW_CAP: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    /// `S_n` for `n = 0, 1, …`.
    Disk(Vec<ComplexMatrix>),
    /// `S_γ` over words in `d` letters.
    Ball { d: usize, terms: Vec<(Word, ComplexMatrix)> },
    /// `S_γ: U_{s(γ)} -> Y_{r(γ)}` over paths.
    Quiver { quiver: Quiver, u_dims: Vec<usize>, y_dims: Vec<usize>, terms: Vec<(Path, ComplexMatrix)> },
}

impl Coefficients {
    /// `(dim Y, dim U)` of the full coefficient space.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Coefficients::Disk(c) => c.first().map_or((0, 0), |m| m.shape()),
            Coefficients::Ball { terms, .. } => terms.first().map_or((0, 0), |(_, m)| m.shape()),
            Coefficients::Quiver { u_dims, y_dims, .. } => (y_dims.iter().sum(), u_dims.iter().sum()),
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            Coefficients::Disk(c) => c.len().saturating_sub(1),
            Coefficients::Ball { terms, .. } => terms.iter().map(|(w, _)| w.len()).max().unwrap_or(0),
            Coefficients::Quiver { terms, .. } => terms.iter().map(|(p, _)| p.len()).max().unwrap_or(0),
        }
    }

    fn scale(&mut self, s: f64) {
        let s = C64::new(s, 0.0);
        match self {
            Coefficients::Disk(c) => c.iter_mut().for_each(|m| *m *= s),
            Coefficients::Ball { terms, .. } => terms.iter_mut().for_each(|(_, m)| *m *= s),
            Coefficients::Quiver { terms, .. } => terms.iter_mut().for_each(|(_, m)| *m *= s),
        }
    }
}

/// `b(λ) = c Π (λ - a_k)/(1 - conj(a_k) λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blaschke {
    pub zeros: Vec<C64>,
    pub unimodular: C64,
}

impl Blaschke {
    pub fn value(&self, lambda: C64) -> C64 {
        self.zeros.iter().fold(self.unimodular, |acc, &a| acc * (lambda - a) / (CONE - a.conj() * lambda))
    }

    /// Rational calculus `c Π (T - a)(I - conj(a) T)^{-1}`; the factors commute.
    pub fn at_matrix(&self, t: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = t.nrows();
        let id = ComplexMatrix::identity(n, n);
        let mut out = &id * self.unimodular;
        for &a in &self.zeros {
            let den = (&id - t * a.conj()).try_inverse().ok_or(Error::Singular)?;
            out = out * (t - &id * a) * den;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchurSample {
    pub coefficients: Coefficients,
    /// `1 -` the certified norm bound; for inner Blaschke samples, the coefficient tail.
    pub contractivity_margin: f64,
    /// Factor applied to the raw coefficients.
    pub scale: f64,
    /// Certified upper bound on the multiplier norm of the stored coefficients.
    pub certified_norm: f64,
    /// Truncated Toeplitz norm, a lower bound on the multiplier norm.
    pub toeplitz_norm: f64,
    /// Blocks (disk) or word/path length (ball, quiver) of that truncation.
    pub toeplitz_levels: usize,
    /// Sup-norm bound on the coefficients not stored; zero for polynomials.
    pub tail_bound: f64,
    /// Exact form when the sample is a Blaschke product.
    pub blaschke: Option<Blaschke>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleKind {
    Disk,
    Ball { d: usize },
    Quiver { quiver: Quiver, u_dims: Vec<usize>, y_dims: Vec<usize> },
}

/// Blaschke product with given zeros (`|a_k| < 1`) and constant `|c| ≤ 1`.
pub fn blaschke(zeros: &[C64], unimodular: C64) -> Result<SchurSample> {
    if let Some(a) = zeros.iter().find(|a| a.norm() >= 1.0) {
        return Err(Error::domain(format!("Blaschke zero {a} is not inside the disk")));
    }
    if unimodular.norm() > 1.0 {
        return Err(Error::domain("Blaschke constant exceeds one in modulus"));
    }
    let mut coef = vec![CZERO; BLASCHKE_TERMS];
    coef[0] = unimodular;
    let mut majorant = vec![0.0; BLASCHKE_TERMS];
    majorant[0] = 1.0;
    let mut total = 1.0;
    for &a in zeros {
        let r = a.norm();
        let mut factor = vec![CZERO; BLASCHKE_TERMS];
        let mut fmaj = vec![0.0; BLASCHKE_TERMS];
        factor[0] = -a;
        fmaj[0] = r;
        let mut pow = CONE;
        let mut rpow = 1.0;
        for n in 1..BLASCHKE_TERMS {
            factor[n] = pow * (1.0 - r * r);
            fmaj[n] = rpow * (1.0 - r * r);
            pow *= a.conj();
            rpow *= r;
        }
        coef = convolve(&coef, &factor);
        majorant = convolve(&majorant, &fmaj);
        // Majorant at λ = 1: r + (1 - r²)/(1 - r).
        total *= 1.0 + 2.0 * r;
    }
    let partial: f64 = majorant.iter().sum();
    let tail = if zeros.iter().all(|a| a.norm() == 0.0) {
        0.0
    } else {
        unimodular.norm() * ((total - partial).max(0.0) + 4.0 * f64::EPSILON * BLASCHKE_TERMS as f64 * total)
    };
    let certified: f64 = coef.iter().map(|z| z.norm()).sum::<f64>().min(unimodular.norm() + tail);
    let margin = if unimodular.norm() < 1.0 { 1.0 - unimodular.norm() } else { tail.max(f64::EPSILON) };
    let coefficients = Coefficients::Disk(coef.into_iter().map(|z| ComplexMatrix::from_element(1, 1, z)).collect());
    let (toeplitz_norm, toeplitz_levels) = reported_toeplitz(&coefficients)?;
    Ok(SchurSample {
        coefficients,
        contractivity_margin: margin,
        scale: 1.0,
        certified_norm: certified,
        toeplitz_norm,
        toeplitz_levels,
        tail_bound: tail,
        blaschke: Some(Blaschke { zeros: zeros.to_vec(), unimodular }),
    })
}

fn convolve<T>(a: &[T], b: &[T]) -> Vec<T>
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<Output = T>,
{
    (0..a.len()).map(|n| (0..=n).fold(T::default(), |acc, k| acc + a[k] * b[n - k])).collect()
}

/// Random inner Blaschke product of the given degree, zeros in `|a| ≤ 0.9`.
pub fn sample_blaschke(degree: usize, seed: u64) -> Result<SchurSample> {
    let mut rng = seeded(seed);
    let zeros: Vec<C64> = (0..degree).map(|_| disk_point(&mut rng, 0.9)).collect();
    let unimodular = C64::from_polar(1.0, std::f64::consts::TAU * rng.random::<f64>());
    blaschke(&zeros, unimodular)
}

/// Random polynomial with geometrically decaying coefficients, rescaled to certified norm 0.95.
///
/// `p = dim Y` and `q = dim U`; for quivers they must equal the graded totals.
pub fn sample_contractive_poly(p: usize, q: usize, degree: usize, kind: &SampleKind, seed: u64) -> Result<SchurSample> {
    if p == 0 || q == 0 {
        return Err(Error::Argument("coefficient spaces must be nonzero".into()));
    }
    let mut rng = seeded(seed);
    let decay = |n: usize| C64::new(0.5f64.powi(n as i32), 0.0);
    let coefficients = match kind {
        SampleKind::Disk => {
            Coefficients::Disk((0..=degree).map(|n| gaussian_matrix(&mut rng, p, q) * decay(n)).collect())
        }
        SampleKind::Ball { d } => {
            if degree > MAX_NC_DEGREE || *d == 0 {
                return Err(Error::Argument(format!("ball samples need d ≥ 1 and degree ≤ {MAX_NC_DEGREE}")));
            }
            let terms = words_up_to(*d, degree)?
                .into_iter()
                .map(|w| {
                    let m = gaussian_matrix(&mut rng, p, q) * decay(w.len());
                    (w, m)
                })
                .collect();
            Coefficients::Ball { d: *d, terms }
        }
        SampleKind::Quiver { quiver, u_dims, y_dims } => {
            if degree > MAX_NC_DEGREE {
                return Err(Error::Argument(format!("quiver samples need degree ≤ {MAX_NC_DEGREE}")));
            }
            let n = quiver.num_vertices();
            if u_dims.len() != n || y_dims.len() != n {
                return Err(Error::shape("coefficient gradings must list every vertex"));
            }
            if y_dims.iter().sum::<usize>() != p || u_dims.iter().sum::<usize>() != q {
                return Err(Error::shape(format!(
                    "gradings sum to {:?}, expected {:?}",
                    (y_dims.iter().sum::<usize>(), u_dims.iter().sum::<usize>()),
                    (p, q)
                )));
            }
            let terms = paths_up_to(quiver, degree)?
                .into_iter()
                .map(|path| {
                    let m = gaussian_matrix(&mut rng, y_dims[path.r(quiver)], u_dims[path.s()]) * decay(path.len());
                    (path, m)
                })
                .collect();
            Coefficients::Quiver { quiver: quiver.clone(), u_dims: u_dims.clone(), y_dims: y_dims.clone(), terms }
        }
    };
    scaled_sample(coefficients)
}

/// Rescale coefficients so the certified norm bound equals 0.95.
pub fn scaled_sample(mut coefficients: Coefficients) -> Result<SchurSample> {
    validate(&coefficients)?;
    let bound = certified_norm_bound(&coefficients);
    let scale = if bound > 0.0 { SCALE_TARGET / bound } else { 1.0 };
    coefficients.scale(scale);
    let certified = bound * scale;
    let (toeplitz_norm, toeplitz_levels) = reported_toeplitz(&coefficients)?;
    Ok(SchurSample {
        coefficients,
        contractivity_margin: 1.0 - certified,
        scale,
        certified_norm: certified,
        toeplitz_norm,
        toeplitz_levels,
        tail_bound: 0.0,
        blaschke: None,
    })
}

fn validate(c: &Coefficients) -> Result<()> {
    match c {
        Coefficients::Disk(cs) => {
            let Some(first) = cs.first() else {
                return Err(Error::Argument("no coefficients".into()));
            };
            if cs.iter().any(|m| m.shape() != first.shape()) {
                return Err(Error::shape("disk coefficients must share one shape"));
            }
        }
        Coefficients::Ball { d, terms } => {
            let Some((_, first)) = terms.first() else {
                return Err(Error::Argument("no coefficients".into()));
            };
            for (w, m) in terms {
                if w.letters().iter().any(|&k| k >= *d) {
                    return Err(Error::Argument(format!("word {:?} uses a letter outside {d}", w.letters())));
                }
                if m.shape() != first.shape() {
                    return Err(Error::shape("ball coefficients must share one shape"));
                }
            }
        }
        Coefficients::Quiver { quiver, u_dims, y_dims, terms } => {
            if u_dims.len() != quiver.num_vertices() || y_dims.len() != quiver.num_vertices() {
                return Err(Error::shape("coefficient gradings must list every vertex"));
            }
            for (p, m) in terms {
                p.validate(quiver)?;
                if m.shape() != (y_dims[p.r(quiver)], u_dims[p.s()]) {
                    return Err(Error::shape(format!(
                        "coefficient of path {} has shape {:?}",
                        p.display(quiver),
                        m.shape()
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Upper bound on the multiplier norm of a finitely supported coefficient family.
///
/// Level `k` of a word or path family is `Σ_{|γ|=k} S_γ ⊗ L_γ` with isometries of
/// orthogonal range, so its norm is `max_v sqrt‖Σ_{|γ|=k, s(γ)=v} S_γ* S_γ‖`. For the
/// disk the bound is the smaller of `Σ‖S_n‖` and a grid maximum of `‖S(e^{iθ})‖`
/// inflated by Bernstein's inequality.
pub fn certified_norm_bound(c: &Coefficients) -> f64 {
    match c {
        Coefficients::Disk(cs) => {
            let l1: f64 = cs.iter().map(operator_norm).sum();
            let m = cs.len().saturating_sub(1);
            if m == 0 {
                return l1;
            }
            let k = 512 * m;
            let grid = (0..k)
                .map(|j| {
                    let z = C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / k as f64);
                    operator_norm(&horner(cs, z))
                })
                .fold(0.0, f64::max);
            // Moving π/k along the circle changes ‖S‖ by at most (π/k)·m·sup‖S‖.
            let bernstein = grid / (1.0 - std::f64::consts::PI * m as f64 / k as f64);
            l1.min(bernstein)
        }
        Coefficients::Ball { terms, .. } => {
            let iter = terms.iter().map(|(w, m)| (w.len(), 0usize, m));
            level_bound(iter, 1)
        }
        Coefficients::Quiver { quiver, terms, .. } => {
            let iter = terms.iter().map(|(p, m)| (p.len(), p.s(), m));
            level_bound(iter, quiver.num_vertices())
        }
    }
}

fn level_bound<'a>(terms: impl Iterator<Item = (usize, usize, &'a ComplexMatrix)>, vertices: usize) -> f64 {
    let mut grams: HashMap<(usize, usize), ComplexMatrix> = HashMap::new();
    for (len, v, m) in terms {
        let g = m.adjoint() * m;
        grams.entry((len, v)).and_modify(|acc| *acc += &g).or_insert(g);
    }
    let max_len = grams.keys().map(|k| k.0).max().unwrap_or(0);
    (0..=max_len)
        .map(|len| {
            (0..vertices).filter_map(|v| grams.get(&(len, v))).map(|g| operator_norm(g).sqrt()).fold(0.0, f64::max)
        })
        .sum()
}

fn horner(cs: &[ComplexMatrix], z: C64) -> ComplexMatrix {
    let mut acc = cs.last().expect("nonempty").clone();
    for m in cs.iter().rev().skip(1) {
        acc = acc * z + m;
    }
    acc
}

fn reported_toeplitz(c: &Coefficients) -> Result<(f64, usize)> {
    let levels = match c {
        Coefficients::Disk(cs) => {
            let rows = cs.first().map_or(1, |m| m.nrows().max(m.ncols()).max(1));
            (TOEPLITZ_ROW_CAP / rows).clamp(1, 64)
        }
        Coefficients::Ball { d, .. } => {
            let rows = c.shape().0.max(c.shape().1).max(1);
            (0..=MAX_NC_DEGREE)
                .rev()
                .find(|&l| word_count(*d, l).is_some_and(|n| n * rows <= TOEPLITZ_ROW_CAP))
                .unwrap_or(0)
        }
        Coefficients::Quiver { quiver, .. } => {
            let rows = c.shape().0.max(c.shape().1).max(1);
            (0..=MAX_NC_DEGREE)
                .rev()
                .find(|&l| path_count(quiver, l).is_some_and(|n| n * rows <= TOEPLITZ_ROW_CAP))
                .unwrap_or(0)
        }
    };
    Ok((truncated_toeplitz_norm(c, levels)?, levels))
}

/// Norm of the Toeplitz matrix `[S_{γγ'^{-1}}]` truncated to `levels` blocks (disk) or lengths `≤ levels`.
pub fn truncated_toeplitz_norm(c: &Coefficients, levels: usize) -> Result<f64> {
    match c {
        Coefficients::Disk(cs) => {
            let (p, q) = c.shape();
            let n = levels.max(1);
            let mut t = ComplexMatrix::zeros(n * p, n * q);
            for row in 0..n {
                for col in 0..=row {
                    if let Some(s) = cs.get(row - col) {
                        t.view_mut((row * p, col * q), (p, q)).copy_from(s);
                    }
                }
            }
            Ok(operator_norm(&t))
        }
        Coefficients::Ball { d, terms } => {
            let (p, q) = c.shape();
            let words = words_up_to(*d, levels)?;
            let lookup: HashMap<&[usize], &ComplexMatrix> = terms.iter().map(|(w, m)| (w.letters(), m)).collect();
            let mut t = ComplexMatrix::zeros(words.len() * p, words.len() * q);
            for (r, g) in words.iter().enumerate() {
                for (col, h) in words.iter().enumerate() {
                    if let Some(prefix) = strip_suffix(g.letters(), h.letters()) {
                        if let Some(s) = lookup.get(prefix) {
                            t.view_mut((r * p, col * q), (p, q)).copy_from(*s);
                        }
                    }
                }
            }
            Ok(operator_norm(&t))
        }
        Coefficients::Quiver { quiver, u_dims, y_dims, terms } => {
            let paths = paths_up_to(quiver, levels)?;
            let lookup: HashMap<&Path, &ComplexMatrix> = terms.iter().map(|(p, m)| (p, m)).collect();
            let row_off: Vec<usize> = offsets(paths.iter().map(|g| y_dims[g.r(quiver)]));
            let col_off: Vec<usize> = offsets(paths.iter().map(|g| u_dims[g.r(quiver)]));
            let mut t = ComplexMatrix::zeros(*row_off.last().unwrap(), *col_off.last().unwrap());
            for (r, g) in paths.iter().enumerate() {
                for (col, h) in paths.iter().enumerate() {
                    if g.s() != h.s() {
                        continue;
                    }
                    let Some(prefix) = strip_suffix(&g.arrows, &h.arrows) else {
                        continue;
                    };
                    let delta = Path { source: h.r(quiver), arrows: prefix.to_vec() };
                    if let Some(s) = lookup.get(&delta) {
                        t.view_mut((row_off[r], col_off[col]), s.shape()).copy_from(*s);
                    }
                }
            }
            Ok(operator_norm(&t))
        }
    }
}

fn strip_suffix<'a>(g: &'a [usize], h: &[usize]) -> Option<&'a [usize]> {
    g.strip_suffix(h)
}

/// Running offsets with the total appended.
fn offsets(sizes: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut out = vec![0];
    for s in sizes {
        out.push(out.last().unwrap() + s);
    }
    out
}

/// `S♯(λ) = S(conj λ)*`: coefficients `S_n*`.
pub fn sharp(s: &SchurSample) -> Result<SchurSample> {
    let Coefficients::Disk(cs) = &s.coefficients else {
        return Err(Error::Argument("the sharp transform is defined for disk samples".into()));
    };
    let mut out = s.clone();
    out.coefficients = Coefficients::Disk(cs.iter().map(|m| m.adjoint()).collect());
    out.blaschke = s
        .blaschke
        .as_ref()
        .map(|b| Blaschke { zeros: b.zeros.iter().map(|a| a.conj()).collect(), unimodular: b.unimodular.conj() });
    Ok(out)
}

fn disk_coefficients(s: &SchurSample) -> Result<&[ComplexMatrix]> {
    match &s.coefficients {
        Coefficients::Disk(cs) => Ok(cs),
        _ => Err(Error::Argument("expected a disk sample".into())),
    }
}

fn require_stable(t: &ComplexMatrix, what: &str) -> Result<()> {
    let r = spectral_radius(t)?;
    if r >= 1.0 {
        return Err(Error::domain(format!("{what} has spectral radius {r} >= 1")));
    }
    Ok(())
}

/// `S(λ) = Σ λⁿ S_n`.
pub fn eval_point(s: &SchurSample, lambda: C64) -> Result<ComplexMatrix> {
    let cs = disk_coefficients(s)?;
    if lambda.norm() >= 1.0 {
        return Err(Error::domain(format!("point {lambda} is not inside the disk")));
    }
    if let Some(b) = &s.blaschke {
        return Ok(ComplexMatrix::from_element(1, 1, b.value(lambda)));
    }
    Ok(horner(cs, lambda))
}

/// Left operator-argument value `Σ Tⁿ X S_n`.
pub fn eval_ltoa(s: &SchurSample, x: &ComplexMatrix, t: &ComplexMatrix) -> Result<ComplexMatrix> {
    let cs = disk_coefficients(s)?;
    let (p, _) = s.coefficients.shape();
    if t.nrows() != t.ncols() || x.shape() != (t.nrows(), p) {
        return Err(Error::shape(format!(
            "T is {:?} and X is {:?}; X must be {}x{p}",
            t.shape(),
            x.shape(),
            t.nrows()
        )));
    }
    require_stable(t, "T")?;
    if let Some(b) = &s.blaschke {
        return Ok(b.at_matrix(t)? * x);
    }
    let mut out = ComplexMatrix::zeros(x.nrows(), cs[0].ncols());
    let mut tn = x.clone();
    for sn in cs {
        out += &tn * sn;
        tn = t * tn;
    }
    Ok(out)
}

/// Right operator-argument value `Σ S_n U Aⁿ`.
pub fn eval_rtoa(s: &SchurSample, u: &ComplexMatrix, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let cs = disk_coefficients(s)?;
    let (_, q) = s.coefficients.shape();
    if a.nrows() != a.ncols() || u.shape() != (q, a.nrows()) {
        return Err(Error::shape(format!(
            "A is {:?} and U is {:?}; U must be {q}x{}",
            a.shape(),
            u.shape(),
            a.nrows()
        )));
    }
    require_stable(a, "A")?;
    if let Some(b) = &s.blaschke {
        return Ok(u * b.at_matrix(a)?);
    }
    let mut out = ComplexMatrix::zeros(cs[0].nrows(), u.ncols());
    let mut ua = u.clone();
    for sn in cs {
        out += sn * &ua;
        ua *= a;
    }
    Ok(out)
}

/// Tensor value `Σ S_n ⊗ Zⁿ`.
pub fn eval_tensor(s: &SchurSample, z: &ComplexMatrix) -> Result<ComplexMatrix> {
    let cs = disk_coefficients(s)?;
    if z.nrows() != z.ncols() {
        return Err(Error::NotSquare { rows: z.nrows(), cols: z.ncols() });
    }
    require_stable(z, "Z")?;
    if let Some(b) = &s.blaschke {
        return b.at_matrix(z);
    }
    let g = z.nrows();
    let (p, q) = s.coefficients.shape();
    let mut out = ComplexMatrix::zeros(p * g, q * g);
    let mut zn = ComplexMatrix::identity(g, g);
    for sn in cs {
        out += kron(sn, &zn);
        zn = z * zn;
    }
    Ok(out)
}

fn ball_terms<'a>(s: &'a SchurSample, z: &OperatorTuple) -> Result<&'a [(Word, ComplexMatrix)]> {
    let Coefficients::Ball { d, terms } = &s.coefficients else {
        return Err(Error::Argument("expected a ball sample".into()));
    };
    if z.d() != *d {
        return Err(Error::shape(format!("sample has {d} variables, point has {}", z.d())));
    }
    if z.row_norm() >= 1.0 {
        return Err(Error::domain(format!("point has row norm {} >= 1", z.row_norm())));
    }
    Ok(terms)
}

/// `Σ_γ Z^{γᵀ} X S_γ` when `transpose_words`, else `Σ_γ Z^γ X S_γ`.
pub fn eval_ball_ltoa(
    s: &SchurSample,
    x: &ComplexMatrix,
    z: &OperatorTuple,
    transpose_words: bool,
) -> Result<ComplexMatrix> {
    let terms = ball_terms(s, z)?;
    let (p, q) = s.coefficients.shape();
    if x.shape() != (z.dim(), p) {
        return Err(Error::shape(format!("X must be {}x{p}", z.dim())));
    }
    let mut out = ComplexMatrix::zeros(z.dim(), q);
    for (w, sw) in terms {
        out += word_power(z, w, transpose_words)? * x * sw;
    }
    Ok(out)
}

/// `Σ_γ S_γ ⊗ Z^{γᵀ}` when `transpose_words`, else with `Z^γ`; for scalar samples this is `s(Z)`.
pub fn eval_ball_tensor(s: &SchurSample, z: &OperatorTuple, transpose_words: bool) -> Result<ComplexMatrix> {
    let terms = ball_terms(s, z)?;
    let (p, q) = s.coefficients.shape();
    let mut out = ComplexMatrix::zeros(p * z.dim(), q * z.dim());
    for (w, sw) in terms {
        out += kron(sw, &word_power(z, w, transpose_words)?);
    }
    Ok(out)
}

/// Argument of a quiver evaluation.
#[derive(Debug, Clone, Copy)]
pub enum QuiverArgument<'a> {
    /// `S(Z) = Σ_γ i_{Q_{r(γ)}} (S_γ ⊗ Z^γ) i*_{R_{s(γ)}}` with `Q_v = Y_v ⊗ Z_v`, `R_v = U_v ⊗ Z_v`.
    Tensor { z_dims: &'a GradedSpace, point: &'a QuiverPoint },
    /// `Σ_γ i_{X_{s(γ)}} T^{γᵀ} X_{r(γ)} S_γ i*_{U_{s(γ)}}` with block-diagonal `X: ⊕ Y_v -> ⊕ X_v`.
    Ltoa { x_dims: &'a GradedSpace, x: &'a ComplexMatrix, point: &'a QuiverPoint },
}

pub fn eval_quiver(s: &SchurSample, arg: QuiverArgument<'_>) -> Result<ComplexMatrix> {
    let Coefficients::Quiver { quiver, u_dims, y_dims, terms } = &s.coefficients else {
        return Err(Error::Argument("expected a quiver sample".into()));
    };
    match arg {
        QuiverArgument::Tensor { z_dims, point } => {
            if point.kind != PointKind::Tensor {
                return Err(Error::Argument("tensor evaluation needs a tensor point".into()));
            }
            let m = disk_membership(quiver, z_dims, point)?;
            if !m.member {
                return Err(Error::domain(format!("point is outside the generalized disk (row norm {})", m.worst)));
            }
            let n = quiver.num_vertices();
            let q_off = offsets((0..n).map(|v| y_dims[v] * z_dims.dim(v)));
            let r_off = offsets((0..n).map(|v| u_dims[v] * z_dims.dim(v)));
            let mut out = ComplexMatrix::zeros(q_off[n], r_off[n]);
            for (path, sg) in terms {
                let blk = kron(sg, &path_power(quiver, z_dims, point, path)?);
                let mut view = out.view_mut((q_off[path.r(quiver)], r_off[path.s()]), blk.shape());
                view += &blk;
            }
            Ok(out)
        }
        QuiverArgument::Ltoa { x_dims, x, point } => {
            if point.kind != PointKind::OperatorArgument {
                return Err(Error::Argument("operator-argument evaluation needs an operator-argument point".into()));
            }
            let m = disk_membership(quiver, x_dims, point)?;
            if !m.member {
                return Err(Error::domain(format!("point is outside the generalized disk (row norm {})", m.worst)));
            }
            let n = quiver.num_vertices();
            let y_off = offsets(y_dims.iter().copied());
            let u_off = offsets(u_dims.iter().copied());
            if x.shape() != (x_dims.total(), y_off[n]) {
                return Err(Error::shape(format!("X is {:?}, expected {:?}", x.shape(), (x_dims.total(), y_off[n]))));
            }
            let mut out = ComplexMatrix::zeros(x_dims.total(), u_off[n]);
            for (path, sg) in terms {
                let (r, s_v) = (path.r(quiver), path.s());
                let xr = x.view((x_dims.offset(r), y_off[r]), (x_dims.dim(r), y_dims[r]));
                let blk = path_power(quiver, x_dims, point, path)? * xr * sg;
                let mut view = out.view_mut((x_dims.offset(s_v), u_off[s_v]), blk.shape());
                view += &blk;
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::c;
    use crate::random::{with_norm, with_spectral_radius};
    use proptest::prelude::*;

    fn scal(v: C64) -> ComplexMatrix {
        ComplexMatrix::from_element(1, 1, v)
    }

    #[test]
    fn blaschke_examples() {
        let one = blaschke(&[], CONE).unwrap();
        let Coefficients::Disk(cs) = &one.coefficients else { unreachable!() };
        assert_eq!(cs[0][(0, 0)], CONE);
        assert!(cs[1..].iter().all(|m| m[(0, 0)] == CZERO));
        assert_eq!(one.tail_bound, 0.0);

        let shift = blaschke(&[CZERO], CONE).unwrap();
        let Coefficients::Disk(cs) = &shift.coefficients else { unreachable!() };
        assert_eq!(cs[0][(0, 0)], CZERO);
        assert_eq!(cs[1][(0, 0)], CONE);
        assert!(cs[2..].iter().all(|m| m[(0, 0)] == CZERO));
        assert_eq!(eval_point(&shift, c(0.5, 0.0)).unwrap()[(0, 0)], c(0.5, 0.0));
    }

    #[test]
    fn blaschke_against_product_formula() {
        let s = sample_blaschke(2, 11).unwrap();
        let b = s.blaschke.as_ref().unwrap();
        let lam = c(0.3, 0.4);
        let direct = b.unimodular * b.zeros.iter().map(|&a| (lam - a) / (CONE - a.conj() * lam)).product::<C64>();
        assert!(direct.norm() <= 1.0);
        assert!((eval_point(&s, lam).unwrap()[(0, 0)] - direct).norm() < 1e-12);
        // The stored Taylor polynomial agrees up to the certified tail.
        let Coefficients::Disk(cs) = &s.coefficients else { unreachable!() };
        let poly = horner(cs, lam)[(0, 0)];
        assert!((poly - direct).norm() <= s.tail_bound + 1e-14);
        let at = eval_point(&s, c(0.3, 0.0)).unwrap()[(0, 0)];
        let d2 = b.unimodular * b.zeros.iter().map(|&a| (c(0.3, 0.) - a) / (CONE - a.conj() * 0.3)).product::<C64>();
        assert!((at - d2).norm() < 1e-12);
    }

    #[test]
    fn blaschke_tail_is_small() {
        for seed in 0..5 {
            let s = sample_blaschke(2, seed).unwrap();
            assert!(s.tail_bound < 0.1, "tail {}", s.tail_bound);
        }
    }

    #[test]
    fn contractive_poly_examples() {
        let s = sample_contractive_poly(2, 2, 0, &SampleKind::Disk, 3).unwrap();
        let Coefficients::Disk(cs) = &s.coefficients else { unreachable!() };
        assert_eq!(cs.len(), 1);
        assert!((operator_norm(&cs[0]) - 0.95).abs() < 1e-12);

        let id = ComplexMatrix::identity(2, 2);
        let s = scaled_sample(Coefficients::Disk(vec![ComplexMatrix::zeros(2, 2), id.clone()])).unwrap();
        let Coefficients::Disk(cs) = &s.coefficients else { unreachable!() };
        assert!((&cs[1] - id * c(0.95, 0.)).norm() < 1e-15);
        assert!((s.toeplitz_norm - 0.95).abs() < 1e-12);
    }

    #[test]
    fn ball_sample_toeplitz_reverified() {
        let s = sample_contractive_poly(1, 1, 2, &SampleKind::Ball { d: 2 }, 5).unwrap();
        assert!(s.toeplitz_norm <= 0.95 + 1e-12);
        // Independent truncated Toeplitz at length 4: rows γ, columns γ', entry S_δ when γ = δγ'.
        let Coefficients::Ball { terms, .. } = &s.coefficients else { unreachable!() };
        let words = words_up_to(2, 4).unwrap();
        let mut t = ComplexMatrix::zeros(words.len(), words.len());
        for (i, g) in words.iter().enumerate() {
            for (j, h) in words.iter().enumerate() {
                if g.len() >= h.len() && g.0[g.len() - h.len()..] == h.0[..] {
                    let delta = &g.0[..g.len() - h.len()];
                    if let Some((_, m)) = terms.iter().find(|(w, _)| w.0 == delta) {
                        t[(i, j)] = m[(0, 0)];
                    }
                }
            }
        }
        assert!(operator_norm(&t) <= 0.95 + 1e-12);
    }

    #[test]
    fn quiver_sample_shapes_checked() {
        let q = Quiver::two_vertex_example();
        let kind = SampleKind::Quiver { quiver: q, u_dims: vec![1, 2], y_dims: vec![2, 1] };
        assert!(matches!(sample_contractive_poly(3, 4, 2, &kind, 1), Err(Error::Shape(_))));
        let s = sample_contractive_poly(3, 3, 3, &kind, 1).unwrap();
        assert!(s.toeplitz_norm <= s.certified_norm + 1e-12);
        assert!((s.certified_norm - 0.95).abs() < 1e-12);
    }

    #[test]
    fn evaluation_examples() {
        let shift = blaschke(&[CZERO], CONE).unwrap();
        assert_eq!(eval_ltoa(&shift, &scal(CONE), &scal(c(0.5, 0.))).unwrap()[(0, 0)], c(0.5, 0.));
        assert_eq!(eval_rtoa(&shift, &scal(CONE), &scal(c(0.5, 0.))).unwrap()[(0, 0)], c(0.5, 0.));
        let mut rng = seeded(9);
        let z = with_spectral_radius(&mut rng, 2, 0.7);
        assert!((eval_tensor(&shift, &z).unwrap() - &z).norm() < 1e-12);

        let s0 = gaussian_matrix(&mut rng, 2, 3);
        let constant = scaled_sample(Coefficients::Disk(vec![s0])).unwrap();
        let Coefficients::Disk(cs) = &constant.coefficients else { unreachable!() };
        let x = gaussian_matrix(&mut rng, 4, 2);
        let t = with_spectral_radius(&mut rng, 4, 0.6);
        assert!((eval_ltoa(&constant, &x, &t).unwrap() - &x * &cs[0]).norm() < 1e-14);
        let u = gaussian_matrix(&mut rng, 3, 4);
        assert!((eval_rtoa(&constant, &u, &t).unwrap() - &cs[0] * &u).norm() < 1e-14);
        assert!((eval_tensor(&constant, &z).unwrap() - kron(&cs[0], &ComplexMatrix::identity(2, 2))).norm() < 1e-14);
        assert!(matches!(eval_point(&constant, c(1.0, 0.0)), Err(Error::Domain(_))));
        let big = ComplexMatrix::identity(4, 4) * c(1.2, 0.);
        assert!(matches!(eval_ltoa(&constant, &x, &big), Err(Error::Domain(_))));
    }

    #[test]
    fn scalar_argument_reductions() {
        let s = sample_contractive_poly(2, 3, 3, &SampleKind::Disk, 21).unwrap();
        let mut rng = seeded(22);
        let lam = c(0.2, -0.5);
        let x = gaussian_matrix(&mut rng, 3, 2);
        let t = ComplexMatrix::identity(3, 3) * lam;
        let v = eval_point(&s, lam).unwrap();
        assert!((eval_ltoa(&s, &x, &t).unwrap() - &x * &v).norm() < 1e-12);
        let z = ComplexMatrix::identity(2, 2) * lam;
        assert!((eval_tensor(&s, &z).unwrap() - kron(&v, &ComplexMatrix::identity(2, 2))).norm() < 1e-12);
    }

    #[test]
    fn sharp_duality_of_evaluations() {
        let s = sample_contractive_poly(2, 3, 3, &SampleKind::Disk, 31).unwrap();
        let sh = sharp(&s).unwrap();
        let mut rng = seeded(32);
        let a = with_spectral_radius(&mut rng, 4, 0.8);
        let u = gaussian_matrix(&mut rng, 3, 4);
        let lhs = eval_rtoa(&s, &u, &a).unwrap();
        let rhs = eval_ltoa(&sh, &u.adjoint(), &a.adjoint()).unwrap().adjoint();
        assert!((lhs - rhs).norm() < 1e-12);

        let b = sample_blaschke(3, 33).unwrap();
        let bs = sharp(&b).unwrap();
        let u = gaussian_matrix(&mut rng, 1, 4);
        let lhs = eval_rtoa(&b, &u, &a).unwrap();
        let rhs = eval_ltoa(&bs, &u.adjoint(), &a.adjoint()).unwrap().adjoint();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn scalar_tensor_is_power_sum() {
        let s = sample_contractive_poly(1, 1, 4, &SampleKind::Disk, 41).unwrap();
        let Coefficients::Disk(cs) = &s.coefficients else { unreachable!() };
        let mut rng = seeded(42);
        let z = with_spectral_radius(&mut rng, 3, 0.9);
        let mut direct = ComplexMatrix::zeros(3, 3);
        for (n, sn) in cs.iter().enumerate() {
            direct += z.pow(n as u32) * sn[(0, 0)];
        }
        assert!((eval_tensor(&s, &z).unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn ball_evaluations() {
        let mut rng = seeded(51);
        // d = 1 is the disk calculus.
        let s1 = sample_contractive_poly(1, 1, 3, &SampleKind::Ball { d: 1 }, 52).unwrap();
        let Coefficients::Ball { terms, .. } = &s1.coefficients else { unreachable!() };
        let mut ordered = terms.clone();
        ordered.sort_by_key(|(w, _)| w.len());
        let disk = scaled_sample(Coefficients::Disk(ordered.iter().map(|(_, m)| m.clone()).collect())).unwrap();
        let t = with_norm(&mut rng, 3, 3, 0.7);
        let x = gaussian_matrix(&mut rng, 3, 1);
        let tup = OperatorTuple::new(vec![t.clone()]).unwrap();
        let scale = C64::new(1.0 / disk.scale, 0.0);
        let lhs = eval_ball_ltoa(&s1, &x, &tup, true).unwrap();
        assert!((lhs - eval_ltoa(&disk, &x, &t).unwrap() * scale).norm() < 1e-12);

        // A single letter coefficient gives Z_k X s.
        let single = Coefficients::Ball { d: 2, terms: vec![(Word(vec![1]), scal(c(0.5, 0.)))] };
        let s = scaled_sample(single).unwrap();
        let z = OperatorTuple::new(vec![with_norm(&mut rng, 2, 2, 0.5), with_norm(&mut rng, 2, 2, 0.5)]).unwrap();
        let x = gaussian_matrix(&mut rng, 2, 1);
        let expect = &z.mats()[1] * &x * c(0.95, 0.);
        assert!((eval_ball_ltoa(&s, &x, &z, true).unwrap() - expect).norm() < 1e-14);

        // Commuting points make the two word orders agree.
        let s2 = sample_contractive_poly(1, 1, 3, &SampleKind::Ball { d: 2 }, 53).unwrap();
        let base = with_spectral_radius(&mut rng, 3, 0.5);
        let z = OperatorTuple::new(vec![&base * c(0.6, 0.), &base * &base * c(0.4, 0.)]).unwrap();
        let x = gaussian_matrix(&mut rng, 3, 1);
        let a = eval_ball_ltoa(&s2, &x, &z, true).unwrap();
        let b = eval_ball_ltoa(&s2, &x, &z, false).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn quiver_two_vertex_block_formula() {
        let q = Quiver::two_vertex_example();
        let (alpha, beta) = (0, 1);
        let v = [c(0.3, 0.), c(0.2, 0.1), c(-0.1, 0.)];
        let w = [c(0.25, 0.), c(0.1, -0.05)];
        let b0 = c(0.2, 0.);
        let mut terms = vec![(Path::vertex(1), scal(b0))];
        for (n, &vn) in v.iter().enumerate() {
            let p = if n == 0 { Path::vertex(0) } else { Path::from_arrows(&q, vec![alpha; n]).unwrap() };
            terms.push((p, scal(vn)));
        }
        for (n, &wn) in w.iter().enumerate() {
            let mut arrows = vec![beta];
            arrows.extend(std::iter::repeat_n(alpha, n));
            terms.push((Path::from_arrows(&q, arrows).unwrap(), scal(wn)));
        }
        let s =
            scaled_sample(Coefficients::Quiver { quiver: q.clone(), u_dims: vec![1, 1], y_dims: vec![1, 1], terms })
                .unwrap();
        let k = C64::new(s.scale, 0.);
        let dims = GradedSpace::new(vec![2, 3]).unwrap();
        let mut rng = seeded(61);
        let za = with_norm(&mut rng, 2, 2, 0.6);
        let zb = with_norm(&mut rng, 3, 2, 0.6);
        let point = QuiverPoint { kind: PointKind::Tensor, blocks: vec![za.clone(), zb.clone()] };
        let got = eval_quiver(&s, QuiverArgument::Tensor { z_dims: &dims, point: &point }).unwrap();
        let mut top = ComplexMatrix::zeros(2, 2);
        let mut low = ComplexMatrix::zeros(2, 2);
        for (n, &vn) in v.iter().enumerate() {
            top += za.pow(n as u32) * vn;
        }
        for (n, &wn) in w.iter().enumerate() {
            low += za.pow(n as u32) * wn;
        }
        let mut expect = ComplexMatrix::zeros(5, 5);
        expect.view_mut((0, 0), (2, 2)).copy_from(&(top * k));
        expect.view_mut((2, 0), (3, 2)).copy_from(&(zb * low * k));
        expect.view_mut((2, 2), (3, 3)).copy_from(&(ComplexMatrix::identity(3, 3) * b0 * k));
        assert!((got - expect).norm() < 1e-12);
    }

    #[test]
    fn quiver_single_vertex_matches_ball() {
        let sv = Quiver::single_vertex(2).unwrap();
        let kind = SampleKind::Quiver { quiver: sv.clone(), u_dims: vec![1], y_dims: vec![1] };
        let s = sample_contractive_poly(1, 1, 3, &kind, 71).unwrap();
        let Coefficients::Quiver { terms, .. } = &s.coefficients else { unreachable!() };
        let ball = Coefficients::Ball {
            d: 2,
            terms: terms.iter().map(|(p, m)| (Word(p.arrows.clone()), m.clone())).collect(),
        };
        let ball = SchurSample { coefficients: ball, ..s.clone() };
        let mut rng = seeded(72);
        let dims = GradedSpace::new(vec![3]).unwrap();
        let mats = vec![with_norm(&mut rng, 3, 3, 0.5), with_norm(&mut rng, 3, 3, 0.5)];
        let tup = OperatorTuple::new(mats.clone()).unwrap();
        let zp = QuiverPoint { kind: PointKind::Tensor, blocks: mats.clone() };
        let a = eval_quiver(&s, QuiverArgument::Tensor { z_dims: &dims, point: &zp }).unwrap();
        assert!((a - eval_ball_tensor(&ball, &tup, false).unwrap()).norm() < 1e-12);
        let tp = QuiverPoint { kind: PointKind::OperatorArgument, blocks: mats };
        let x = gaussian_matrix(&mut rng, 3, 1);
        let b = eval_quiver(&s, QuiverArgument::Ltoa { x_dims: &dims, x: &x, point: &tp }).unwrap();
        assert!((b - eval_ball_ltoa(&ball, &x, &tup, true).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn quiver_zero_point_places_constants() {
        let q = Quiver::two_vertex_example();
        let kind = SampleKind::Quiver { quiver: q.clone(), u_dims: vec![1, 1], y_dims: vec![1, 1] };
        let s = sample_contractive_poly(2, 2, 2, &kind, 81).unwrap();
        let Coefficients::Quiver { terms, .. } = &s.coefficients else { unreachable!() };
        let dims = GradedSpace::new(vec![2, 1]).unwrap();
        let zero = QuiverPoint::zeros(&q, &dims, PointKind::Tensor);
        let got = eval_quiver(&s, QuiverArgument::Tensor { z_dims: &dims, point: &zero }).unwrap();
        let s_a = terms.iter().find(|(p, _)| *p == Path::vertex(0)).unwrap().1[(0, 0)];
        let s_b = terms.iter().find(|(p, _)| *p == Path::vertex(1)).unwrap().1[(0, 0)];
        let mut expect = ComplexMatrix::zeros(3, 3);
        expect[(0, 0)] = s_a;
        expect[(1, 1)] = s_a;
        expect[(2, 2)] = s_b;
        assert!((got - expect).norm() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn same_seed_same_sample(seed in any::<u64>(), degree in 0usize..4) {
            let a = sample_contractive_poly(2, 1, degree, &SampleKind::Ball { d: 2 }, seed).unwrap();
            let b = sample_contractive_poly(2, 1, degree, &SampleKind::Ball { d: 2 }, seed).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn disk_samples_are_contractive_on_the_circle(seed in any::<u64>(), degree in 0usize..6) {
            let s = sample_contractive_poly(2, 2, degree, &SampleKind::Disk, seed).unwrap();
            let Coefficients::Disk(cs) = &s.coefficients else { unreachable!() };
            prop_assert!(s.toeplitz_norm <= 1.0);
            for j in 0..997 {
                let z = C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / 997.0);
                prop_assert!(operator_norm(&horner(cs, z)) <= 0.95 + 1e-12);
            }
        }
    }
}
