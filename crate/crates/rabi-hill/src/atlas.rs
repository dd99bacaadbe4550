//! Zero curves of the Judd determinant J_n and the tail limit F_n in the
//! (g, delta) parameter plane: grid sampling, marching-squares extraction
//! with per-crossing bisection refinement, and loop/line classification.
//!
//! Both fields are even in g. When a region abuts the g = 0 axis from the
//! right, a branch whose two endpoints both land on that axis closes through
//! its mirror image; such branches are completed by reflection and reported
//! as closed loops. Branches touching any other boundary stay open (the
//! line family extends indefinitely, the loops do not).

use crate::recurrence::{
    finite_determinant, tail_limit, ModelParams, RecurrenceError, SolverOptions, SpectralVariable,
};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use thiserror::Error;

const REFINE_TARGET_REL: f64 = 1e-8;
const MAX_REFINE_ITERS: usize = 80;

#[derive(Debug, Error)]
pub enum AtlasError {
    #[error("invalid region: {0}")]
    InvalidRegion(&'static str),
    #[error("fewer than 2x2 unmasked nodes: nothing to contour")]
    InsufficientGrid,
    #[error(transparent)]
    Recurrence(#[from] RecurrenceError),
}

/// Rectangular sampling window in the (g, delta) plane.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridRegion {
    pub g_min: f64,
    pub g_max: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridRegion {
    pub fn new(
        g_min: f64,
        g_max: f64,
        delta_min: f64,
        delta_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self, AtlasError> {
        if !(g_min < g_max) {
            return Err(AtlasError::InvalidRegion("g_min must be < g_max"));
        }
        if !(delta_min < delta_max) {
            return Err(AtlasError::InvalidRegion("delta_min must be < delta_max"));
        }
        if nx < 2 || ny < 2 {
            return Err(AtlasError::InvalidRegion("nx and ny must be >= 2"));
        }
        Ok(Self { g_min, g_max, delta_min, delta_max, nx, ny })
    }

    pub fn dg(&self) -> f64 {
        (self.g_max - self.g_min) / (self.nx - 1) as f64
    }

    pub fn ddelta(&self) -> f64 {
        (self.delta_max - self.delta_min) / (self.ny - 1) as f64
    }

    pub fn g_at(&self, i: usize) -> f64 {
        self.g_min + i as f64 * self.dg()
    }

    pub fn delta_at(&self, j: usize) -> f64 {
        self.delta_min + j as f64 * self.ddelta()
    }

    pub fn cell_diagonal(&self) -> f64 {
        (self.dg() * self.dg() + self.ddelta() * self.ddelta()).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FieldKind {
    Judd,
    Tail,
}

impl FieldKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldKind::Judd => "judd",
            FieldKind::Tail => "tail",
        }
    }
}

/// Sampled scalar field; `None` marks nodes whose evaluation did not converge.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub n: usize,
    pub kind: FieldKind,
    pub region: GridRegion,
    pub values: Vec<Option<f64>>,
}

impl FieldGrid {
    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        self.values[j * self.region.nx + i]
    }
}

/// One zero-curve branch.
#[derive(Debug, Clone, Serialize)]
pub struct CurvePointSet {
    pub n: usize,
    pub field_kind: FieldKind,
    pub branch_id: usize,
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
    pub on_judd: bool,
}

fn field_at(n: usize, kind: FieldKind, g: f64, delta: f64, opts: &SolverOptions) -> Option<f64> {
    let params = ModelParams { g, delta };
    match kind {
        FieldKind::Judd => {
            finite_determinant(0, n as i64 - 1, SpectralVariable::new(n as f64), &params).ok()
        }
        FieldKind::Tail => {
            let ev = tail_limit(n, &params, opts).ok()?;
            if ev.converged && ev.value.is_finite() {
                Some(ev.value)
            } else {
                None
            }
        }
    }
}

/// Evaluates J_n or F_n at every grid node. Node order is fixed (row-major),
/// so the result is deterministic regardless of the parallel schedule.
pub fn sample_field(n: usize, region: &GridRegion, kind: FieldKind, opts: &SolverOptions) -> FieldGrid {
    let nx = region.nx;
    let ny = region.ny;
    let values: Vec<Option<f64>> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let i = idx % nx;
            let j = idx / nx;
            field_at(n, kind, region.g_at(i), region.delta_at(j), opts)
        })
        .collect();
    FieldGrid { n, kind, region: *region, values }
}

/// Raw polyline from the contouring pass.
#[derive(Debug, Clone)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
    /// True when the chain of segments is a cycle.
    pub cycle: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    Horizontal(usize, usize), // between nodes (i, j) and (i+1, j)
    Vertical(usize, usize),   // between nodes (i, j) and (i, j+1)
}

fn refine_crossing<F: Fn(f64, f64) -> f64>(
    p0: (f64, f64),
    v0: f64,
    p1: (f64, f64),
    v1: f64,
    field: &F,
    scale: f64,
) -> (f64, f64) {
    debug_assert!(v0.signum() != v1.signum());
    let (mut a, mut fa, mut b) = (p0, v0, p1);
    let _ = v1;
    let mut best = (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
    for _ in 0..MAX_REFINE_ITERS {
        let mid = (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
        best = mid;
        let fm = field(mid.0, mid.1);
        if fm == 0.0 || (fm.abs() <= REFINE_TARGET_REL * scale && (b.0 - a.0).abs() + (b.1 - a.1).abs() < 1e-12)
        {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
        if (b.0 - a.0).abs() + (b.1 - a.1).abs() < 1e-15 {
            break;
        }
    }
    best
}

/// Marching squares over a sampled grid, with each edge crossing refined by
/// 1-D bisection on the continuous field. Ambiguous (saddle) cells are
/// resolved by the sign of the field at the cell midpoint. Returns maximal
/// linked polylines.
pub fn extract_zero_set_with<F: Fn(f64, f64) -> f64 + Sync>(
    region: &GridRegion,
    values: &[Option<f64>],
    field: F,
) -> Result<Vec<Polyline>, AtlasError> {
    let nx = region.nx;
    let ny = region.ny;
    if values.iter().filter(|v| v.is_some()).count() < 4 {
        return Err(AtlasError::InsufficientGrid);
    }
    let mut mags: Vec<f64> = values.iter().flatten().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let scale = mags[mags.len() / 2].max(f64::MIN_POSITIVE);

    let at = |i: usize, j: usize| values[j * nx + i];
    let neg = |v: f64| v < 0.0;

    // Collect segments cell by cell; refined crossing points are shared
    // through the edge-key cache so adjacent cells link exactly.
    let mut crossings: HashMap<EdgeKey, (f64, f64)> = HashMap::new();
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();

    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (Some(v00), Some(v10), Some(v11), Some(v01)) =
                (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1))
            else {
                continue;
            };
            let case = (neg(v00) as usize)
                | (neg(v10) as usize) << 1
                | (neg(v11) as usize) << 2
                | (neg(v01) as usize) << 3;
            if case == 0 || case == 15 {
                continue;
            }

            let bottom = EdgeKey::Horizontal(i, j);
            let top = EdgeKey::Horizontal(i, j + 1);
            let left = EdgeKey::Vertical(i, j);
            let right = EdgeKey::Vertical(i + 1, j);

            let mut refine = |key: EdgeKey| {
                if !crossings.contains_key(&key) {
                    let ((i0, j0), (i1, j1)) = match key {
                        EdgeKey::Horizontal(i, j) => ((i, j), (i + 1, j)),
                        EdgeKey::Vertical(i, j) => ((i, j), (i, j + 1)),
                    };
                    let p0 = (region.g_at(i0), region.delta_at(j0));
                    let p1 = (region.g_at(i1), region.delta_at(j1));
                    let f0 = at(i0, j0).unwrap();
                    let f1 = at(i1, j1).unwrap();
                    let pt = refine_crossing(p0, f0, p1, f1, &field, scale);
                    crossings.insert(key, pt);
                }
                key
            };

            let mut emit = |a: EdgeKey, b: EdgeKey, segs: &mut Vec<(EdgeKey, EdgeKey)>| {
                let a = refine(a);
                let b = refine(b);
                segs.push((a, b));
            };

            match case {
                1 => emit(left, bottom, &mut segments),
                2 => emit(bottom, right, &mut segments),
                3 => emit(left, right, &mut segments),
                4 => emit(right, top, &mut segments),
                6 => emit(bottom, top, &mut segments),
                7 => emit(left, top, &mut segments),
                8 => emit(top, left, &mut segments),
                9 => emit(bottom, top, &mut segments),
                11 => emit(right, top, &mut segments),
                12 => emit(right, left, &mut segments),
                13 => emit(bottom, right, &mut segments),
                14 => emit(left, bottom, &mut segments),
                5 | 10 => {
                    // Saddle: pair the crossings by the midpoint sign.
                    let gc = 0.5 * (region.g_at(i) + region.g_at(i + 1));
                    let dc = 0.5 * (region.delta_at(j) + region.delta_at(j + 1));
                    let center_neg = neg(field(gc, dc));
                    let connect_first = (case == 5) == center_neg;
                    if connect_first {
                        // Negative band along the main diagonal (or its dual).
                        emit(bottom, right, &mut segments);
                        emit(top, left, &mut segments);
                    } else {
                        emit(left, bottom, &mut segments);
                        emit(right, top, &mut segments);
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    Ok(link_segments(&segments, &crossings))
}

fn link_segments(
    segments: &[(EdgeKey, EdgeKey)],
    crossings: &HashMap<EdgeKey, (f64, f64)>,
) -> Vec<Polyline> {
    let mut adjacency: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (idx, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(idx);
        adjacency.entry(*b).or_default().push(idx);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();

    let walk = |start: EdgeKey, used: &mut Vec<bool>| -> (Vec<EdgeKey>, bool) {
        let mut chain = vec![start];
        let mut here = start;
        loop {
            let Some(next_seg) = adjacency
                .get(&here)
                .into_iter()
                .flatten()
                .copied()
                .find(|&s| !used[s])
            else {
                return (chain, false);
            };
            used[next_seg] = true;
            let (a, b) = segments[next_seg];
            here = if a == here { b } else { a };
            if here == start {
                return (chain, true);
            }
            chain.push(here);
        }
    };

    // Open chains first: start from endpoints of odd degree.
    let mut endpoints: Vec<EdgeKey> = adjacency
        .iter()
        .filter(|(_, segs)| segs.len() % 2 == 1)
        .map(|(k, _)| *k)
        .collect();
    endpoints.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    for start in endpoints {
        if adjacency[&start].iter().all(|&s| used[s]) {
            continue;
        }
        let (chain, cycle) = walk(start, &mut used);
        if chain.len() >= 2 {
            polylines.push(Polyline {
                points: chain.iter().map(|k| crossings[k]).collect(),
                cycle,
            });
        }
    }
    // Remaining segments belong to cycles.
    for idx in 0..segments.len() {
        if used[idx] {
            continue;
        }
        let start = segments[idx].0;
        let (mut chain, cycle) = walk(start, &mut used);
        if cycle {
            let first = chain[0];
            chain.push(first);
        }
        if chain.len() >= 2 {
            polylines.push(Polyline {
                points: chain.iter().map(|k| crossings[k]).collect(),
                cycle,
            });
        }
    }
    polylines
}

/// Contours the zero set of a sampled Judd or Tail field.
pub fn extract_zero_set(grid: &FieldGrid, opts: &SolverOptions) -> Result<Vec<Polyline>, AtlasError> {
    let n = grid.n;
    let kind = grid.kind;
    let opts = *opts;
    extract_zero_set_with(&grid.region, &grid.values, move |g, d| {
        field_at(n, kind, g, d, &opts).unwrap_or(f64::NAN)
    })
}

/// True when the region sits in the right half-plane flush against g = 0, so
/// evenness in g closes branches whose endpoints both land on that axis.
fn mirror_axis_applies(region: &GridRegion) -> bool {
    region.g_min >= 0.0 && region.g_min <= 2.0 * region.dg()
}

fn on_mirror_axis(region: &GridRegion, p: (f64, f64)) -> bool {
    (p.0 - region.g_min).abs() <= 0.25 * region.dg()
}

/// Turns raw polylines into classified branches. `judd_grid` supplies the
/// magnitude scale for the |J_n| = 0 decision; J_n itself is re-evaluated
/// exactly at every curve point.
pub fn classify_branches(
    polylines: &[Polyline],
    judd_grid: &FieldGrid,
    tol_j: f64,
) -> Vec<CurvePointSet> {
    let region = &judd_grid.region;
    let n = judd_grid.n;
    let mut mags: Vec<f64> = judd_grid.values.iter().flatten().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let judd_scale = if mags.is_empty() {
        1.0
    } else {
        mags[mags.len() / 2].max(1.0)
    };

    let mirror = mirror_axis_applies(region);
    let mut out = Vec::new();
    for (branch_id, pl) in polylines.iter().enumerate() {
        let mut points = pl.points.clone();
        let mut closed = pl.cycle;
        if !closed && mirror && points.len() >= 2 {
            let first = points[0];
            let last = *points.last().unwrap();
            if on_mirror_axis(region, first) && on_mirror_axis(region, last) {
                // Complete the loop through the mirror image in g < 0.
                let mirrored: Vec<(f64, f64)> =
                    points.iter().rev().map(|&(g, d)| (-g, d)).collect();
                points.extend(mirrored);
                points.push(first);
                closed = true;
            }
        }
        let on_judd = !points.is_empty()
            && points.iter().all(|&(g, d)| {
                let params = ModelParams { g, delta: d };
                finite_determinant(0, n as i64 - 1, SpectralVariable::new(n as f64), &params)
                    .map(|j| j.abs() <= tol_j * judd_scale)
                    .unwrap_or(false)
            });
        out.push(CurvePointSet {
            n,
            field_kind: FieldKind::Tail,
            branch_id,
            points,
            closed,
            // Defined only for Tail branches; Judd-field callers overwrite.
            on_judd,
        });
    }
    merge_split_loops(&mut out, region);
    for (id, b) in out.iter_mut().enumerate() {
        b.branch_id = id;
    }
    out
}

/// A loop wider than the sampled window surfaces as two on-Judd arcs, each
/// running from the g = 0 axis to the outer boundary, mirror images of one
/// another under delta -> -delta (all fields are even in delta). Each such
/// pair is one loop that closes outside the window; merge it and classify it
/// closed. Open lines also come in mirror pairs but never lie on the Judd
/// zero set, so the on_judd requirement keeps them apart.
fn merge_split_loops(branches: &mut Vec<CurvePointSet>, region: &GridRegion) {
    if !mirror_axis_applies(region)
        || (region.delta_min + region.delta_max).abs() > region.ddelta()
    {
        return;
    }
    let tol_g = 2.0 * region.dg();
    let tol_d = 2.0 * region.ddelta();
    // Orient every candidate arc axis -> outer boundary.
    let split_ends = |b: &CurvePointSet| -> Option<((f64, f64), (f64, f64), bool)> {
        if b.closed || !b.on_judd || b.points.len() < 2 {
            return None;
        }
        let first = b.points[0];
        let last = *b.points.last().unwrap();
        match (on_mirror_axis(region, first), on_mirror_axis(region, last)) {
            (true, false) => Some((first, last, false)),
            (false, true) => Some((last, first, true)),
            _ => None,
        }
    };
    let mut i = 0;
    while i < branches.len() {
        let Some((ax_i, out_i, rev_i)) = split_ends(&branches[i]) else {
            i += 1;
            continue;
        };
        let partner = (i + 1..branches.len()).find(|&j| {
            split_ends(&branches[j]).is_some_and(|(ax_j, out_j, _)| {
                (ax_i.1 + ax_j.1).abs() <= tol_d
                    && (out_i.0 - out_j.0).abs() <= tol_g
                    && (out_i.1 + out_j.1).abs() <= tol_d
            })
        });
        let Some(j) = partner else {
            i += 1;
            continue;
        };
        let (_, _, rev_j) = split_ends(&branches[j]).unwrap();
        let other = branches.remove(j);
        let merged = &mut branches[i];
        if rev_i {
            merged.points.reverse();
        }
        // Continue from the outer boundary back to the axis along the twin.
        if rev_j {
            merged.points.extend(other.points.iter().copied());
        } else {
            merged.points.extend(other.points.iter().rev().copied());
        }
        merged.closed = true;
        i += 1;
    }
}

/// Samples, contours, and classifies one field. Judd-field branches carry
/// `on_judd = false` by convention (the flag describes Tail branches that lie
/// on the Judd zero set).
pub fn trace_curves(
    n: usize,
    region: &GridRegion,
    kind: FieldKind,
    tol_j: f64,
    opts: &SolverOptions,
) -> Result<Vec<CurvePointSet>, AtlasError> {
    let grid = sample_field(n, region, kind, opts);
    let polylines = match extract_zero_set(&grid, opts) {
        Ok(p) => p,
        // A constant-sign field (e.g. J_0 = 1) has no zero curves.
        Err(AtlasError::InsufficientGrid) => return Err(AtlasError::InsufficientGrid),
        Err(e) => return Err(e),
    };
    match kind {
        FieldKind::Tail => {
            let judd_grid = sample_field(n, region, FieldKind::Judd, opts);
            Ok(classify_branches(&polylines, &judd_grid, tol_j))
        }
        FieldKind::Judd => {
            let mut branches = classify_branches(&polylines, &grid, tol_j);
            for b in &mut branches {
                b.field_kind = FieldKind::Judd;
                b.on_judd = false;
            }
            Ok(branches)
        }
    }
}

/// Delta intercepts of each branch with the g = 0 axis, interpolated from the
/// two nearest polyline points. Branches that do not reach the axis yield no
/// intercepts.
pub fn axis_intercepts(curves: &[CurvePointSet], tol: f64) -> Vec<(usize, Vec<f64>)> {
    let mut out = Vec::new();
    for c in curves {
        let mut intercepts: Vec<f64> = Vec::new();
        let pts = &c.points;
        for w in pts.windows(2) {
            let (g1, d1) = w[0];
            let (g2, d2) = w[1];
            if g1 == 0.0 {
                intercepts.push(d1);
            } else if g1.signum() != g2.signum() && g2 != 0.0 {
                intercepts.push(d1 + (d2 - d1) * (0.0 - g1) / (g2 - g1));
            }
        }
        // Endpoints that stop just short of the axis: extrapolate.
        if !c.closed && pts.len() >= 2 {
            for (a, b) in [(pts[0], pts[1]), (*pts.last().unwrap(), pts[pts.len() - 2])] {
                if a.0.abs() <= tol && b.0 != a.0 {
                    intercepts.push(a.1 + (b.1 - a.1) * (0.0 - a.0) / (b.0 - a.0));
                }
            }
        }
        intercepts.sort_by(f64::total_cmp);
        intercepts.dedup_by(|a, b| (*a - *b).abs() <= tol);
        if !intercepts.is_empty() {
            out.push((c.branch_id, intercepts));
        }
    }
    out
}
