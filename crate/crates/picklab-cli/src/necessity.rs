//! Necessity suites: seeded Schur-class samples pushed through each criterion.
//!
//! Every trial interpolates data produced by an actual contractive multiplier,
//! so its Pick matrix must be PSD up to the reported tail bound. A trial passes
//! when `min_eigenvalue >= -(tail_bound + NECESSITY_SLACK)`.

use picklab::ball_np::{pick_da_ltoa, pick_nc_ltoa, DaWeighting, OperatorTuple, SeriesOptions};
use picklab::disk_np::{pick_fov, pick_frd, pick_lt, pick_ltoa, pick_ltrd, pick_rt, pick_rtoa, pick_rtrd};
use picklab::oracle::{
    eval_ball_ltoa, eval_ltoa, eval_point, eval_quiver, eval_rtoa, eval_tensor, sample_blaschke,
    sample_contractive_poly, QuiverArgument, SampleKind, SchurSample,
};
use picklab::quiver_np::{pick_qltoa, pick_qltrd, pick_qltt, random_member_point, GradedSpace, PointKind, Quiver};
use picklab::random::{disk_point, gaussian_matrix, random_unitary, seeded, with_spectral_radius, SeededRng};
use picklab::{ComplexMatrix, Result, Tolerance, C64};
use rand::Rng;

pub const NECESSITY_SLACK: f64 = 1e-8;

/// Interpolation conditions per trial.
const POINTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Fov,
    Lt,
    Rt,
    Ltoa,
    Rtoa,
    Frd,
    Ltrd,
    Rtrd,
    NcLtoa,
    DaLtoa,
    Qltt,
    Qltrd,
    Qltoa,
}

impl Criterion {
    pub const ALL: [Criterion; 13] = [
        Criterion::Fov,
        Criterion::Lt,
        Criterion::Rt,
        Criterion::Ltoa,
        Criterion::Rtoa,
        Criterion::Frd,
        Criterion::Ltrd,
        Criterion::Rtrd,
        Criterion::NcLtoa,
        Criterion::DaLtoa,
        Criterion::Qltt,
        Criterion::Qltrd,
        Criterion::Qltoa,
    ];

    pub fn setting(self) -> &'static str {
        match self {
            Criterion::Fov => "disk.fov",
            Criterion::Lt => "disk.lt",
            Criterion::Rt => "disk.rt",
            Criterion::Ltoa => "disk.ltoa",
            Criterion::Rtoa => "disk.rtoa",
            Criterion::Frd => "disk.frd",
            Criterion::Ltrd => "disk.ltrd",
            Criterion::Rtrd => "disk.rtrd",
            Criterion::NcLtoa => "ball.nc_ltoa",
            Criterion::DaLtoa => "ball.da_ltoa",
            Criterion::Qltt => "quiver.qltt",
            Criterion::Qltrd => "quiver.qltrd",
            Criterion::Qltoa => "quiver.qltoa",
        }
    }

    pub fn from_setting(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.setting() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub seed: u64,
    pub min_eigenvalue: f64,
    pub tail_bound: f64,
}

impl TrialOutcome {
    pub fn passed(&self) -> bool {
        self.min_eigenvalue >= -(self.tail_bound + NECESSITY_SLACK)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NecessitySummary {
    pub criterion: Criterion,
    pub seed: u64,
    pub outcomes: Vec<TrialOutcome>,
}

impl NecessitySummary {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(TrialOutcome::passed)
    }

    /// Smallest `min_eigenvalue + tail_bound` over the trials.
    pub fn worst_margin(&self) -> f64 {
        self.outcomes.iter().map(|o| o.min_eigenvalue + o.tail_bound).fold(f64::INFINITY, f64::min)
    }

    pub fn worst_tail(&self) -> f64 {
        self.outcomes.iter().map(|o| o.tail_bound).fold(0.0, f64::max)
    }
}

/// Seed of trial `k` in a suite seeded by `seed`.
pub fn trial_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64)
}

pub fn run(criterion: Criterion, trials: usize, seed: u64) -> Result<NecessitySummary> {
    let outcomes = (0..trials).map(|k| trial(criterion, trial_seed(seed, k))).collect::<Result<_>>()?;
    Ok(NecessitySummary { criterion, seed, outcomes })
}

/// Scalar disk sample: a Blaschke product on odd seeds, a scaled polynomial otherwise.
fn scalar_sample(seed: u64) -> Result<SchurSample> {
    if seed % 2 == 1 {
        sample_blaschke(2, seed)
    } else {
        sample_contractive_poly(1, 1, 3, &SampleKind::Disk, seed)
    }
}

fn row_contraction(rng: &mut SeededRng, d: usize, n: usize, r: f64) -> Result<OperatorTuple> {
    let mats: Vec<ComplexMatrix> = (0..d).map(|_| gaussian_matrix(rng, n, n)).collect();
    let t = OperatorTuple::new(mats.clone())?;
    let s = C64::new(r / t.row_norm(), 0.0);
    OperatorTuple::new(mats.into_iter().map(|m| m * s).collect())
}

/// `Z_k = V D_k V*` with diagonal `D_k` whose columns have Euclidean norm `r`.
fn commuting_contraction(rng: &mut SeededRng, d: usize, n: usize, r: f64) -> Result<OperatorTuple> {
    let v = random_unitary(rng, n);
    let mut diags = vec![vec![C64::new(0.0, 0.0); n]; d];
    for j in 0..n {
        let col: Vec<C64> = (0..d).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        for k in 0..d {
            diags[k][j] = col[k] * (r / norm);
        }
    }
    let mats = diags
        .iter()
        .map(|dk| &v * ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(dk.clone())) * v.adjoint())
        .collect();
    OperatorTuple::new(mats)
}

fn gaussians(rng: &mut SeededRng, rows: usize, cols: usize) -> Vec<ComplexMatrix> {
    (0..POINTS).map(|_| gaussian_matrix(rng, rows, cols)).collect()
}

fn stable_points(rng: &mut SeededRng, dim: usize) -> Vec<ComplexMatrix> {
    (0..POINTS).map(|_| with_spectral_radius(rng, dim, 0.8)).collect()
}

/// One trial: `(min eigenvalue, tail bound)` of the criterion on sampled data.
pub fn trial(criterion: Criterion, seed: u64) -> Result<TrialOutcome> {
    let mut rng = seeded(seed);
    let tol = Tolerance::Auto;
    let opts = SeriesOptions::default();
    let report = match criterion {
        Criterion::Fov => {
            let s = sample_contractive_poly(2, 2, 3, &SampleKind::Disk, seed)?;
            let pts: Vec<C64> = (0..POINTS).map(|_| disk_point(&mut rng, 0.9)).collect();
            let w = pts.iter().map(|&l| eval_point(&s, l)).collect::<Result<Vec<_>>>()?;
            pick_fov(&pts, &w, tol)?
        }
        Criterion::Lt => {
            let s = sample_contractive_poly(2, 3, 3, &SampleKind::Disk, seed)?;
            let pts: Vec<C64> = (0..POINTS).map(|_| disk_point(&mut rng, 0.9)).collect();
            let x = gaussians(&mut rng, 2, 2);
            let y = pts.iter().zip(&x).map(|(&l, xi)| Ok(xi * eval_point(&s, l)?)).collect::<Result<Vec<_>>>()?;
            pick_lt(&pts, &x, &y, tol)?
        }
        Criterion::Rt => {
            let s = sample_contractive_poly(2, 3, 3, &SampleKind::Disk, seed)?;
            let pts: Vec<C64> = (0..POINTS).map(|_| disk_point(&mut rng, 0.9)).collect();
            let u = gaussians(&mut rng, 3, 2);
            let v = pts.iter().zip(&u).map(|(&l, ui)| Ok(eval_point(&s, l)? * ui)).collect::<Result<Vec<_>>>()?;
            pick_rt(&pts, &u, &v, tol)?
        }
        Criterion::Ltoa => {
            let s = scalar_sample(seed)?;
            let t = stable_points(&mut rng, 3);
            let x = gaussians(&mut rng, 3, 1);
            let y = t.iter().zip(&x).map(|(ti, xi)| eval_ltoa(&s, xi, ti)).collect::<Result<Vec<_>>>()?;
            pick_ltoa(&t, &x, &y, tol)?
        }
        Criterion::Rtoa => {
            let s = sample_contractive_poly(2, 2, 3, &SampleKind::Disk, seed)?;
            let a = stable_points(&mut rng, 2);
            let u = gaussians(&mut rng, 2, 2);
            let v = a.iter().zip(&u).map(|(ai, ui)| eval_rtoa(&s, ui, ai)).collect::<Result<Vec<_>>>()?;
            pick_rtoa(&a, &u, &v, tol)?
        }
        Criterion::Frd => {
            let s = scalar_sample(seed)?;
            let z = stable_points(&mut rng, 3);
            let w = z.iter().map(|zi| eval_tensor(&s, zi)).collect::<Result<Vec<_>>>()?;
            pick_frd(&z, &w, 2, tol)?
        }
        Criterion::Ltrd => {
            let s = scalar_sample(seed)?;
            let z = stable_points(&mut rng, 3);
            let x = gaussians(&mut rng, 2, 3);
            let y = z.iter().zip(&x).map(|(zi, xi)| Ok(xi * eval_tensor(&s, zi)?)).collect::<Result<Vec<_>>>()?;
            pick_ltrd(&z, &x, &y, 2, tol)?
        }
        Criterion::Rtrd => {
            let s = scalar_sample(seed)?;
            let z = stable_points(&mut rng, 3);
            let u = gaussians(&mut rng, 3, 2);
            let v = z.iter().zip(&u).map(|(zi, ui)| Ok(eval_tensor(&s, zi)? * ui)).collect::<Result<Vec<_>>>()?;
            pick_rtrd(&z, &u, &v, 2, tol)?
        }
        Criterion::NcLtoa | Criterion::DaLtoa => {
            let s = sample_contractive_poly(1, 2, 2, &SampleKind::Ball { d: 2 }, seed)?;
            let z = (0..POINTS)
                .map(|_| match criterion {
                    Criterion::NcLtoa => row_contraction(&mut rng, 2, 2, 0.7),
                    _ => commuting_contraction(&mut rng, 2, 2, 0.7),
                })
                .collect::<Result<Vec<_>>>()?;
            let x = gaussians(&mut rng, 2, 1);
            let y = z.iter().zip(&x).map(|(zi, xi)| eval_ball_ltoa(&s, xi, zi, true)).collect::<Result<Vec<_>>>()?;
            match criterion {
                Criterion::NcLtoa => pick_nc_ltoa(&z, &x, &y, &opts, tol)?,
                _ => pick_da_ltoa(&z, &x, &y, DaWeighting::Multinomial, &opts, tol)?,
            }
        }
        Criterion::Qltt => {
            let (q, dims) = (Quiver::two_vertex_example(), GradedSpace::new(vec![2, 1])?);
            let (yd, ud) = (vec![1, 2], vec![2, 1]);
            let s = quiver_sample(&q, &yd, &ud, seed)?;
            let pts: Vec<_> =
                (0..POINTS).map(|_| random_member_point(&mut rng, &q, &dims, PointKind::Tensor, 0.6)).collect();
            let x = gaussians(&mut rng, 2, 4);
            let y = pts
                .iter()
                .zip(&x)
                .map(|(p, xi)| Ok(xi * eval_quiver(&s, QuiverArgument::Tensor { z_dims: &dims, point: p })?))
                .collect::<Result<Vec<_>>>()?;
            let r = pick_qltt(&q, &dims, &yd, &ud, &pts, &x, &y, &opts, tol)?;
            return Ok(TrialOutcome { seed, min_eigenvalue: r.min_eigenvalue(), tail_bound: r.tail_bound() });
        }
        Criterion::Qltrd => {
            let (q, dims) = (Quiver::two_vertex_example(), GradedSpace::new(vec![2, 1])?);
            let s = quiver_sample(&q, &[1, 1], &[1, 1], seed)?;
            let pts: Vec<_> =
                (0..POINTS).map(|_| random_member_point(&mut rng, &q, &dims, PointKind::Tensor, 0.6)).collect();
            let x = gaussians(&mut rng, 2, 3);
            let y = pts
                .iter()
                .zip(&x)
                .map(|(p, xi)| Ok(xi * eval_quiver(&s, QuiverArgument::Tensor { z_dims: &dims, point: p })?))
                .collect::<Result<Vec<_>>>()?;
            pick_qltrd(&q, &dims, &pts, &x, &y, 2, &opts, tol)?
        }
        Criterion::Qltoa => {
            let (q, dims) = (Quiver::two_vertex_example(), GradedSpace::new(vec![2, 1])?);
            let (yd, ud) = (vec![1, 1], vec![2, 1]);
            let s = quiver_sample(&q, &yd, &ud, seed)?;
            let pts: Vec<_> = (0..POINTS)
                .map(|_| random_member_point(&mut rng, &q, &dims, PointKind::OperatorArgument, 0.6))
                .collect();
            let x: Vec<ComplexMatrix> = (0..POINTS)
                .map(|_| {
                    picklab::matcore::direct_sum(&[gaussian_matrix(&mut rng, 2, 1), gaussian_matrix(&mut rng, 1, 1)])
                })
                .collect();
            let y = pts
                .iter()
                .zip(&x)
                .map(|(p, xi)| eval_quiver(&s, QuiverArgument::Ltoa { x_dims: &dims, x: xi, point: p }))
                .collect::<Result<Vec<_>>>()?;
            pick_qltoa(&q, &dims, &yd, &ud, &pts, &x, &y, &opts, tol)?
        }
    };
    Ok(TrialOutcome { seed, min_eigenvalue: report.verdict.min_eigenvalue, tail_bound: report.tail_bound })
}

fn quiver_sample(q: &Quiver, y_dims: &[usize], u_dims: &[usize], seed: u64) -> Result<SchurSample> {
    let kind = SampleKind::Quiver { quiver: q.clone(), u_dims: u_dims.to_vec(), y_dims: y_dims.to_vec() };
    sample_contractive_poly(y_dims.iter().sum(), u_dims.iter().sum(), 2, &kind, seed)
}
