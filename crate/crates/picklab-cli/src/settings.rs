//! Setting names, payload decoding and dispatch to the criteria.

use crate::wire::{DataError, Node, WireResult};
use picklab::agler_np::{AglerOptions, AglerVariant};
use picklab::ball_np::{
    pick_da_fov, pick_da_lt, pick_da_ltoa, pick_nc_frd, pick_nc_frd_star, pick_nc_ltoa, DaWeighting, OperatorTuple,
    SeriesOptions,
};
use picklab::cp_toolkit::{
    build_phi_bar_quiver, build_phi_disk, build_phi_quiver, build_phi_star_disk, conditional_expectation_map,
    conjugation_map, identity_map, transpose_map, LinearMapOnMatrices,
};
use picklab::disk_np::{
    nevanlinna_rd_check, pick_fov, pick_frd, pick_lt, pick_ltoa, pick_ltrd, pick_rt, pick_rtoa, pick_rtrd,
    FeasibilityReport,
};
use picklab::quiver_np::{pick_qltoa, pick_qltrd, pick_qltt, Arrow, GradedSpace, PointKind, Quiver, QuiverPoint};
use picklab::{ComplexMatrix, Error, Tolerance};

/// Every recognised setting, grouped by family.
pub const PICK_SETTINGS: [&str; 18] = [
    "disk.fov",
    "disk.lt",
    "disk.rt",
    "disk.ltoa",
    "disk.rtoa",
    "disk.frd",
    "disk.ltrd",
    "disk.rtrd",
    "disk.nevanlinna_rd",
    "ball.nc_ltoa",
    "ball.nc_frd",
    "ball.nc_frd_star",
    "ball.da_fov",
    "ball.da_lt",
    "ball.da_ltoa",
    "quiver.qltt",
    "quiver.qltrd",
    "quiver.qltoa",
];
pub const AGLER_SETTINGS: [&str; 3] = ["polydisk.agler_scalar", "polydisk.agler_nc_ltoa", "polydisk.agler_nc_rd"];
pub const MAP_SETTINGS: [&str; 9] = [
    "cp.map",
    "cp.identity",
    "cp.transpose",
    "cp.conjugation",
    "cp.conditional_expectation",
    "cp.phi_disk",
    "cp.phi_star_disk",
    "cp.phi_quiver",
    "cp.phi_bar_quiver",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Pick,
    Agler,
    Map,
}

pub fn family(setting: &str) -> Option<Family> {
    if PICK_SETTINGS.contains(&setting) {
        Some(Family::Pick)
    } else if AGLER_SETTINGS.contains(&setting) {
        Some(Family::Agler)
    } else if MAP_SETTINGS.contains(&setting) {
        Some(Family::Map)
    } else {
        None
    }
}

/// Resolved numeric options for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub tol: Tolerance,
    pub series: SeriesOptions,
    pub agler: AglerOptions,
    pub seed: u64,
    pub weighting: DaWeighting,
}

/// Why a run produced no verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Data(DataError),
    /// Budget or iteration exhaustion: the verdict is unknown.
    Unknown {
        message: String,
        achieved_bound: Option<f64>,
    },
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Failure::Data(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Budget { detail, achieved_bound } => Failure::Unknown { message: detail, achieved_bound },
            Error::NoConvergence(_) => Failure::Unknown { message: e.to_string(), achieved_bound: None },
            Error::Domain(_) | Error::Divergent(_) => {
                Failure::Data(DataError::new("domain", e.to_string(), "/payload"))
            }
            _ => Failure::Data(DataError::new("data", e.to_string(), "/payload")),
        }
    }
}

pub type RunResult<T> = std::result::Result<T, Failure>;

/// One Pick matrix of a report, with its block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PickPart {
    /// Vertex name for per-vertex quiver matrices.
    pub label: Option<String>,
    pub report: FeasibilityReport,
    pub block_sizes: Vec<usize>,
}

fn single(report: FeasibilityReport, block_sizes: Vec<usize>) -> Vec<PickPart> {
    vec![PickPart { label: None, report, block_sizes }]
}

fn rows(m: &[ComplexMatrix]) -> Vec<usize> {
    m.iter().map(|x| x.nrows()).collect()
}

fn tuples(n: Node<'_>) -> WireResult<Vec<OperatorTuple>> {
    n.list(|t| {
        let mats = t.matrices()?;
        OperatorTuple::new(mats).map_err(|e| DataError::new("data", e.to_string(), t.path()))
    })
}

pub fn parse_quiver(n: Node<'_>) -> WireResult<Quiver> {
    if let Ok(name) = n.str() {
        return match name {
            "two_vertex_example" => Ok(Quiver::two_vertex_example()),
            "single_loop" => Quiver::single_vertex(1).map_err(|e| DataError::new("data", e.to_string(), n.path())),
            _ => Err(DataError::new("schema", format!("unknown named quiver `{name}`"), n.path())),
        };
    }
    let vertices: Vec<String> = n.field("vertices", |v| v.list(|s| s.str().map(str::to_string)))?;
    let index = |name: &str, at: &Node<'_>| {
        vertices
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| DataError::new("schema", format!("unknown vertex `{name}`"), at.path()))
    };
    let arrows = n.field("arrows", |a| {
        a.list(|arr| {
            Ok(Arrow {
                name: arr.field("name", |s| s.str().map(str::to_string))?,
                src: arr.field("src", |s| index(s.str()?, &s))?,
                rng: arr.field("rng", |s| index(s.str()?, &s))?,
            })
        })
    })?;
    Quiver::new(vertices.clone(), arrows).map_err(|e| DataError::new("data", e.to_string(), n.path()))
}

fn graded(n: Node<'_>) -> WireResult<GradedSpace> {
    GradedSpace::new(n.usizes()?).map_err(|e| DataError::new("data", e.to_string(), n.path()))
}

/// Points as objects keyed by arrow name.
fn quiver_points(n: Node<'_>, q: &Quiver, kind: PointKind) -> WireResult<Vec<QuiverPoint>> {
    n.list(|p| {
        let blocks = q.arrows().iter().map(|a| p.field(&a.name, |m| m.matrix())).collect::<WireResult<_>>()?;
        Ok(QuiverPoint { kind, blocks })
    })
}

struct QuiverData {
    q: Quiver,
    dims: GradedSpace,
    points: Vec<QuiverPoint>,
    x: Vec<ComplexMatrix>,
    y: Vec<ComplexMatrix>,
}

fn quiver_data(p: Node<'_>, kind: PointKind) -> WireResult<QuiverData> {
    let q = p.field("quiver", parse_quiver)?;
    Ok(QuiverData {
        dims: p.field("dims", graded)?,
        points: p.field("points", |n| quiver_points(n, &q, kind))?,
        x: p.field("x", |n| n.matrices())?,
        y: p.field("y", |n| n.matrices())?,
        q,
    })
}

fn usizes(p: Node<'_>, name: &str) -> WireResult<Vec<usize>> {
    p.field(name, |n| n.usizes())
}

fn kappa(p: Node<'_>) -> WireResult<usize> {
    p.field("kappa", |n| n.usize())
}

fn repeat(size: usize, count: usize) -> Vec<usize> {
    vec![size; count]
}

/// Run a Pick-matrix criterion.
pub fn evaluate_pick(setting: &str, p: Node<'_>, o: &RunOptions) -> RunResult<Vec<PickPart>> {
    let tol = o.tol;
    let opts = &o.series;
    let parts = match setting {
        "disk.fov" => {
            let (pts, w) = (p.field("points", |n| n.complexes())?, p.field("values", |n| n.matrices())?);
            single(pick_fov(&pts, &w, tol)?, rows(&w))
        }
        "disk.lt" | "disk.rt" => {
            let pts = p.field("points", |n| n.complexes())?;
            if setting == "disk.lt" {
                let (x, y) = (p.field("x", |n| n.matrices())?, p.field("y", |n| n.matrices())?);
                single(pick_lt(&pts, &x, &y, tol)?, rows(&x))
            } else {
                let (u, v) = (p.field("u", |n| n.matrices())?, p.field("v", |n| n.matrices())?);
                let sizes = u.iter().map(|m| m.ncols()).collect();
                single(pick_rt(&pts, &u, &v, tol)?, sizes)
            }
        }
        "disk.ltoa" => {
            let t = p.field("t", |n| n.matrices())?;
            let (x, y) = (p.field("x", |n| n.matrices())?, p.field("y", |n| n.matrices())?);
            single(pick_ltoa(&t, &x, &y, tol)?, rows(&t))
        }
        "disk.rtoa" => {
            let a = p.field("a", |n| n.matrices())?;
            let (u, v) = (p.field("u", |n| n.matrices())?, p.field("v", |n| n.matrices())?);
            single(pick_rtoa(&a, &u, &v, tol)?, rows(&a))
        }
        "disk.frd" | "disk.ltrd" | "disk.rtrd" => {
            let z = p.field("z", |n| n.matrices())?;
            let k = kappa(p)?;
            let g = z.first().map_or(0, |m| m.nrows());
            let report = match setting {
                "disk.frd" => pick_frd(&z, &p.field("w", |n| n.matrices())?, k, tol)?,
                "disk.ltrd" => {
                    pick_ltrd(&z, &p.field("x", |n| n.matrices())?, &p.field("y", |n| n.matrices())?, k, tol)?
                }
                _ => pick_rtrd(&z, &p.field("u", |n| n.matrices())?, &p.field("v", |n| n.matrices())?, k, tol)?,
            };
            single(report, repeat(g, z.len() * k))
        }
        "disk.nevanlinna_rd" => {
            let (z, w) = (p.field("z", |n| n.matrix())?, p.field("w", |n| n.matrix())?);
            let k = kappa(p)?;
            single(nevanlinna_rd_check(&z, &w, k, tol)?, repeat(z.nrows(), k))
        }
        "ball.nc_ltoa" | "ball.da_ltoa" => {
            let z = p.field("points", tuples)?;
            let (x, y) = (p.field("x", |n| n.matrices())?, p.field("y", |n| n.matrices())?);
            let report = if setting == "ball.nc_ltoa" {
                pick_nc_ltoa(&z, &x, &y, opts, tol)?
            } else {
                pick_da_ltoa(&z, &x, &y, o.weighting, opts, tol)?
            };
            single(report, z.iter().map(OperatorTuple::dim).collect())
        }
        "ball.nc_frd" | "ball.nc_frd_star" => {
            let z = p.field("points", tuples)?;
            let w = p.field("w", |n| n.matrices())?;
            let k = kappa(p)?;
            let report = if setting == "ball.nc_frd" {
                pick_nc_frd(&z, &w, k, opts, tol)?
            } else {
                pick_nc_frd_star(&z, &w, k, opts, tol)?
            };
            let g = z.first().map_or(0, OperatorTuple::dim);
            single(report, repeat(g, z.len() * k))
        }
        "ball.da_fov" | "ball.da_lt" => {
            let pts = p.field("points", |n| n.list(|c| c.complexes()))?;
            if setting == "ball.da_fov" {
                let w = p.field("values", |n| n.matrices())?;
                single(pick_da_fov(&pts, &w, tol)?, rows(&w))
            } else {
                let (x, y) = (p.field("x", |n| n.matrices())?, p.field("y", |n| n.matrices())?);
                single(pick_da_lt(&pts, &x, &y, tol)?, rows(&x))
            }
        }
        "quiver.qltt" => {
            let d = quiver_data(p, PointKind::Tensor)?;
            let (yd, ud) = (usizes(p, "y_dims")?, usizes(p, "u_dims")?);
            let r = pick_qltt(&d.q, &d.dims, &yd, &ud, &d.points, &d.x, &d.y, opts, tol)?;
            let c = d.x.first().map_or(0, |m| m.nrows());
            r.vertices
                .into_iter()
                .enumerate()
                .map(|(v, report)| PickPart {
                    label: Some(d.q.vertices()[v].clone()),
                    report,
                    block_sizes: repeat(c, d.points.len() * d.dims.dim(v)),
                })
                .collect()
        }
        "quiver.qltrd" => {
            let d = quiver_data(p, PointKind::Tensor)?;
            let k = kappa(p)?;
            let r = pick_qltrd(&d.q, &d.dims, &d.points, &d.x, &d.y, k, opts, tol)?;
            single(r, repeat(d.dims.total(), d.points.len() * k))
        }
        "quiver.qltoa" => {
            let d = quiver_data(p, PointKind::OperatorArgument)?;
            let (yd, ud) = (usizes(p, "y_dims")?, usizes(p, "u_dims")?);
            let r = pick_qltoa(&d.q, &d.dims, &yd, &ud, &d.points, &d.x, &d.y, opts, tol)?;
            single(r, repeat(d.dims.total(), d.points.len()))
        }
        other => return Err(DataError::new("usage", format!("`{other}` is not a Pick setting"), "/setting").into()),
    };
    Ok(parts)
}

pub fn agler_variant(setting: &str, p: Node<'_>) -> WireResult<AglerVariant> {
    match setting {
        "polydisk.agler_scalar" => Ok(AglerVariant::ScalarPoints {
            points: p.field("points", |n| n.list(|c| c.complexes()))?,
            values: p.field("values", |n| n.complexes())?,
        }),
        "polydisk.agler_nc_ltoa" => Ok(AglerVariant::NcLtoa {
            t: p.field("t", |n| n.list(|t| t.matrices()))?,
            x: p.field("x", |n| n.matrices())?,
            y: p.field("y", |n| n.matrices())?,
        }),
        "polydisk.agler_nc_rd" => Ok(AglerVariant::NcRd {
            z: p.field("z", |n| n.list(|t| t.matrices()))?,
            w: p.field("w", |n| n.matrices())?,
            kappa: kappa(p)?,
        }),
        other => Err(DataError::new("usage", format!("`{other}` is not an Agler setting"), "/setting")),
    }
}

/// Build the linear map named by a `cp.*` setting.
pub fn build_map(setting: &str, p: Node<'_>, o: &RunOptions) -> RunResult<LinearMapOnMatrices> {
    let map = match setting {
        "cp.map" => {
            let (n, m) = (p.field("in_dim", |v| v.usize())?, p.field("out_dim", |v| v.usize())?);
            let map = LinearMapOnMatrices::new(n, m, p.field("images", |v| v.matrices())?)?;
            match p.opt_field("domain", |v| v.usizes())? {
                Some(classes) => map.with_domain(classes)?,
                None => map,
            }
        }
        "cp.identity" => identity_map(p.field("n", |v| v.usize())?),
        "cp.transpose" => transpose_map(p.field("n", |v| v.usize())?),
        "cp.conjugation" => conjugation_map(&p.field("v", |v| v.matrix())?),
        "cp.conditional_expectation" => conditional_expectation_map(&usizes(p, "labels")?),
        "cp.phi_disk" => build_phi_disk(
            &p.field("z", |n| n.matrices())?,
            &p.field("x", |n| n.matrices())?,
            &p.field("y", |n| n.matrices())?,
            p.field("v_dim", |n| n.usize())?,
            p.field("u_dim", |n| n.usize())?,
        )?,
        "cp.phi_star_disk" => build_phi_star_disk(
            &p.field("z", |n| n.matrices())?,
            &p.field("x", |n| n.matrices())?,
            &p.field("y", |n| n.matrices())?,
        )?,
        "cp.phi_quiver" | "cp.phi_bar_quiver" => {
            let d = quiver_data(p, PointKind::Tensor)?;
            let (yd, ud) = (usizes(p, "y_dims")?, usizes(p, "u_dims")?);
            let build = if setting == "cp.phi_quiver" { build_phi_quiver } else { build_phi_bar_quiver };
            build(&d.q, &d.dims, &yd, &ud, &d.points, &d.x, &d.y, &o.series)?
        }
        other => return Err(DataError::new("usage", format!("`{other}` is not a map setting"), "/setting").into()),
    };
    Ok(map)
}
