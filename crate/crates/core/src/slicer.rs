//! Horizontal slicing of closed meshes into layers of simple closed contours.
//!
//! A vertex lying exactly on a slicing plane is treated as if it sat 1e-9 mm
//! above it, so point contacts and coplanar facets never produce segments.
//! Contours are oriented by signed area (outer counter-clockwise, holes
//! clockwise) regardless of facet winding.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{
    point_in_ring, ring_length, ring_self_intersections, segment_intersection_point, signed_area,
    Bounds2, Point2,
};
use crate::mesh::{validate_watertight, Facet, TriangleMesh, WatertightReport};

/// Vertical nudge applied to on-plane vertices during intersection.
pub const PLANE_NUDGE: f64 = 1e-9;
/// Default endpoint-matching tolerance for stitching.
pub const DEFAULT_STITCH_TOL: f64 = 1e-7;
/// Smallest contour area accepted by [`validate_contours`].
pub const MIN_CONTOUR_AREA: f64 = 1e-6;

pub type Segment = [Point2; 2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SliceError {
    #[error("mesh is not watertight ({} boundary, {} non-manifold edges)", .0.boundary_edges.len(), .0.non_manifold_edges.len())]
    NotWatertight(Box<WatertightReport>),
    #[error("layer thickness must be positive and finite, got {0}")]
    DegenerateThickness(f64),
    #[error("open contour: {} dangling endpoint(s)", dangling.len())]
    OpenContour { dangling: Vec<Point2> },
    #[error("stitch tolerance must be non-negative, got {0}")]
    InvalidTolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourRole {
    Outer,
    Hole,
}

/// Closed polygon; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub vertices: Vec<Point2>,
    pub role: ContourRole,
    pub signed_area: f64,
}

impl Contour {
    pub fn perimeter(&self) -> f64 {
        ring_length(&self.vertices)
    }

    pub fn bounds(&self) -> Option<Bounds2> {
        Bounds2::of_points(&self.vertices)
    }

    /// Lexicographically smallest vertex; the contour starts here after stitching.
    pub fn entry_point(&self) -> Point2 {
        self.vertices
            .iter()
            .copied()
            .min_by(|a, b| a.lex_cmp(b))
            .unwrap_or_default()
    }
}

/// An outer contour and the holes nested directly inside it (indices into
/// [`Layer::contours`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Island {
    pub outer: usize,
    pub holes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub z: f64,
    pub contours: Vec<Contour>,
    pub islands: Vec<Island>,
    /// Dangling chain endpoints found while stitching (only in lenient slicing).
    pub open_endpoints: Vec<Point2>,
}

impl Layer {
    pub fn new(z: f64, contours: Vec<Contour>) -> Self {
        let islands = assign_islands(&contours);
        Self {
            z,
            contours,
            islands,
            open_endpoints: Vec::new(),
        }
    }

    pub fn bounds(&self) -> Option<Bounds2> {
        self.contours
            .iter()
            .filter_map(Contour::bounds)
            .reduce(Bounds2::union)
    }

    /// Net cross-section area (outers minus holes).
    pub fn area(&self) -> f64 {
        self.contours.iter().map(|c| c.signed_area).sum()
    }
}

/// Segment where facet `f` crosses the plane at height `z`, if any.
pub fn intersect_facet_plane(f: &Facet, z: f64) -> Option<Segment> {
    let lifted = f
        .vertices
        .map(|v| if v.z == z { v.z + PLANE_NUDGE } else { v.z });
    let above = lifted.map(|h| h > z);
    let n_above = above.iter().filter(|&&a| a).count();
    if n_above == 0 || n_above == 3 {
        return None;
    }
    let mut pts = [Point2::default(); 2];
    let mut k = 0;
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        if above[i] == above[j] {
            continue;
        }
        // always interpolate from the lower vertex so neighbours agree bit for bit
        let (lo, hi) = if above[i] { (j, i) } else { (i, j) };
        let (a, b) = (f.vertices[lo], f.vertices[hi]);
        let t = (z - lifted[lo]) / (lifted[hi] - lifted[lo]);
        pts[k] = Point2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
        k += 1;
    }
    Some(pts)
}

struct Graph {
    nodes: Vec<Point2>,
    /// Per node: incident (edge index, other node).
    adj: Vec<Vec<(usize, usize)>>,
    edge_count: usize,
}

fn quantize(v: f64, q: f64) -> i64 {
    (v / q).floor() as i64
}

fn build_graph(segments: &[Segment], tol: f64) -> Graph {
    let mut nodes: Vec<Point2> = Vec::new();
    let mut adj: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut exact: HashMap<(u64, u64), usize> = HashMap::new();
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let bits = |x: f64| if x == 0.0 { 0 } else { x.to_bits() };
    let mut node_of =
        |p: Point2, nodes: &mut Vec<Point2>, adj: &mut Vec<Vec<(usize, usize)>>| -> usize {
            if let Some(&id) = exact.get(&(bits(p.x), bits(p.y))) {
                return id;
            }
            if tol > 0.0 {
                let (cx, cy) = (quantize(p.x, tol), quantize(p.y, tol));
                let mut best: Option<(f64, usize)> = None;
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        for &id in grid.get(&(cx + dx, cy + dy)).into_iter().flatten() {
                            let d = nodes[id].dist(p);
                            if d <= tol && best.is_none_or(|(bd, _)| d < bd) {
                                best = Some((d, id));
                            }
                        }
                    }
                }
                if let Some((_, id)) = best {
                    exact.insert((bits(p.x), bits(p.y)), id);
                    return id;
                }
                grid.entry((cx, cy)).or_default().push(nodes.len());
            }
            exact.insert((bits(p.x), bits(p.y)), nodes.len());
            nodes.push(p);
            adj.push(Vec::new());
            nodes.len() - 1
        };
    let mut edge_count = 0;
    for s in segments {
        let a = node_of(s[0], &mut nodes, &mut adj);
        let b = node_of(s[1], &mut nodes, &mut adj);
        if a == b {
            continue;
        }
        adj[a].push((edge_count, b));
        adj[b].push((edge_count, a));
        edge_count += 1;
    }
    Graph {
        nodes,
        adj,
        edge_count,
    }
}

fn is_collinear(prev: Point2, cur: Point2, next: Point2) -> bool {
    let (u, v) = (cur - prev, next - cur);
    let scale = u.len() * v.len();
    u.cross(v).abs() <= 1e-9 * scale && u.dot(v) > 0.0
}

/// Drop repeated and straight-through vertices.
fn simplify_ring(ring: Vec<Point2>) -> Vec<Point2> {
    let mut pts = ring;
    pts.dedup();
    while pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    loop {
        let n = pts.len();
        if n < 3 {
            return pts;
        }
        let keep: Vec<bool> = (0..n)
            .map(|i| !is_collinear(pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]))
            .collect();
        if keep.iter().all(|&k| k) {
            return pts;
        }
        // remove one vertex at a time from each run so chains collapse cleanly
        let mut out = Vec::with_capacity(n);
        let mut removed_prev = false;
        for i in 0..n {
            if !keep[i] && !removed_prev {
                removed_prev = true;
                continue;
            }
            removed_prev = false;
            out.push(pts[i]);
        }
        pts = out;
    }
}

/// Rotate to start at the lexicographically smallest vertex and orient by
/// the requested sign.
fn normalize_ring(mut ring: Vec<Point2>, ccw: bool) -> Vec<Point2> {
    if (signed_area(&ring) > 0.0) != ccw {
        ring.reverse();
    }
    if let Some(start) = (0..ring.len()).min_by(|&a, &b| ring[a].lex_cmp(&ring[b])) {
        ring.rotate_left(start);
    }
    ring
}

/// Stitched rings plus any dangling chain endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct StitchResult {
    pub contours: Vec<Contour>,
    pub dangling: Vec<Point2>,
}

/// Chain segments into contours, tolerating open chains (they are dropped
/// and their endpoints reported).
pub fn stitch_segments_lenient(segments: &[Segment], tol: f64) -> Result<StitchResult, SliceError> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(SliceError::InvalidTolerance(tol));
    }
    let g = build_graph(segments, tol);
    let mut dangling: Vec<Point2> = (0..g.nodes.len())
        .filter(|&n| g.adj[n].len() % 2 == 1)
        .map(|n| g.nodes[n])
        .collect();
    dangling.sort_by(|a, b| a.lex_cmp(b));

    let mut used = vec![false; g.edge_count];
    let mut cursor = vec![0usize; g.nodes.len()];
    let mut next_edge = |node: usize, used: &mut [bool]| -> Option<usize> {
        while cursor[node] < g.adj[node].len() {
            let (e, other) = g.adj[node][cursor[node]];
            cursor[node] += 1;
            if !used[e] {
                used[e] = true;
                return Some(other);
            }
        }
        None
    };

    // open chains first, starting from odd-degree nodes
    let odd: Vec<usize> = (0..g.nodes.len())
        .filter(|&n| g.adj[n].len() % 2 == 1)
        .collect();
    for &start in &odd {
        let mut cur = start;
        while let Some(n) = next_edge(cur, &mut used) {
            cur = n;
        }
    }

    // branch nodes first, so rings that touch at a vertex are walked as one
    let mut starts: Vec<usize> = (0..g.nodes.len()).collect();
    starts.sort_by_key(|&n| std::cmp::Reverse(g.adj[n].len() > 2));
    let mut rings: Vec<Vec<Point2>> = Vec::new();
    for start in starts {
        while let Some(mut cur) = next_edge(start, &mut used) {
            let mut ring = vec![g.nodes[start]];
            // keep walking through the start node while it still has edges, so
            // a figure-eight becomes one (non-simple) ring rather than two
            loop {
                if cur == start {
                    match next_edge(start, &mut used) {
                        Some(n) => {
                            ring.push(g.nodes[start]);
                            cur = n;
                            continue;
                        }
                        None => break,
                    }
                }
                ring.push(g.nodes[cur]);
                match next_edge(cur, &mut used) {
                    Some(n) => cur = n,
                    None => break,
                }
            }
            let ring = simplify_ring(ring);
            if ring.len() >= 3 {
                rings.push(ring);
            }
        }
    }
    Ok(StitchResult {
        contours: classify_rings(rings),
        dangling,
    })
}

/// Chain segments end to end into closed contours. Any open chain is an error.
pub fn stitch_segments(segments: &[Segment], tol: f64) -> Result<Vec<Contour>, SliceError> {
    let r = stitch_segments_lenient(segments, tol)?;
    if !r.dangling.is_empty() {
        return Err(SliceError::OpenContour {
            dangling: r.dangling,
        });
    }
    Ok(r.contours)
}

fn sample_point(ring: &[Point2]) -> Point2 {
    // midpoint of the first edge avoids shared-vertex ambiguity
    ring[0].lerp(ring[1], 0.5)
}

/// Assign outer/hole roles by even-odd containment depth and orient.
fn classify_rings(rings: Vec<Vec<Point2>>) -> Vec<Contour> {
    let n = rings.len();
    let depth: Vec<usize> = (0..n)
        .map(|i| {
            let p = sample_point(&rings[i]);
            (0..n)
                .filter(|&j| j != i && point_in_ring(p, &rings[j]))
                .count()
        })
        .collect();
    let mut contours: Vec<Contour> = rings
        .into_iter()
        .zip(depth)
        .map(|(ring, d)| {
            let outer = d % 2 == 0;
            let vertices = normalize_ring(ring, outer);
            Contour {
                signed_area: signed_area(&vertices),
                vertices,
                role: if outer {
                    ContourRole::Outer
                } else {
                    ContourRole::Hole
                },
            }
        })
        .collect();
    contours.sort_by(|a, b| a.vertices[0].lex_cmp(&b.vertices[0]));
    contours
}

/// Group each hole with the smallest outer contour that contains it.
pub fn assign_islands(contours: &[Contour]) -> Vec<Island> {
    let mut islands: Vec<Island> = contours
        .iter()
        .enumerate()
        .filter(|(_, c)| c.role == ContourRole::Outer)
        .map(|(i, _)| Island {
            outer: i,
            holes: Vec::new(),
        })
        .collect();
    for (h, hole) in contours.iter().enumerate() {
        if hole.role != ContourRole::Hole || hole.vertices.len() < 2 {
            continue;
        }
        let p = sample_point(&hole.vertices);
        let parent = islands
            .iter_mut()
            .filter(|isl| point_in_ring(p, &contours[isl.outer].vertices))
            .min_by(|a, b| {
                contours[a.outer]
                    .signed_area
                    .abs()
                    .total_cmp(&contours[b.outer].signed_area.abs())
            });
        if let Some(isl) = parent {
            isl.holes.push(h);
        }
    }
    islands
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceOptions {
    pub layer_thickness: f64,
    /// Height of the first plane; `None` means half a layer.
    pub z_offset: Option<f64>,
    pub stitch_tol: f64,
    /// Refuse meshes that fail [`validate_watertight`].
    pub require_watertight: bool,
}

impl SliceOptions {
    pub fn new(layer_thickness: f64) -> Self {
        Self {
            layer_thickness,
            z_offset: None,
            stitch_tol: DEFAULT_STITCH_TOL,
            require_watertight: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SliceWarning {
    /// No slicing plane fell strictly inside the mesh's height range.
    EmptyPrint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sliced {
    pub layers: Vec<Layer>,
    pub warnings: Vec<SliceWarning>,
}

/// Heights of the slicing planes strictly inside `(zmin, zmax)`.
pub fn plane_heights(zmin: f64, zmax: f64, thickness: f64, offset: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let z = offset + k as f64 * thickness;
        if z >= zmax {
            break;
        }
        if z > zmin {
            out.push(z);
        }
        k += 1;
    }
    out
}

struct FacetSpan<'a> {
    facet: &'a Facet,
    lo: f64,
    hi: f64,
}

fn spans(m: &TriangleMesh) -> Vec<FacetSpan<'_>> {
    m.facets
        .iter()
        .map(|f| {
            let zs = f.vertices.map(|v| v.z);
            FacetSpan {
                facet: f,
                lo: zs[0].min(zs[1]).min(zs[2]),
                hi: zs[0].max(zs[1]).max(zs[2]),
            }
        })
        .collect()
}

fn layer_from_spans(spans: &[FacetSpan<'_>], z: f64, tol: f64) -> Result<Layer, SliceError> {
    let segs: Vec<Segment> = spans
        .iter()
        .filter(|s| s.lo <= z && s.hi >= z)
        .filter_map(|s| intersect_facet_plane(s.facet, z))
        .collect();
    let r = stitch_segments_lenient(&segs, tol)?;
    let mut layer = Layer::new(z, r.contours);
    layer.open_endpoints = r.dangling;
    Ok(layer)
}

/// Slice a single plane without any watertightness check. Open chains are
/// dropped and reported in [`Layer::open_endpoints`].
pub fn slice_at(m: &TriangleMesh, z: f64) -> Layer {
    layer_from_spans(&spans(m), z, DEFAULT_STITCH_TOL).expect("default tolerance is valid")
}

/// Slice into layers at `z_offset + k · layer_thickness`.
pub fn slice_mesh(m: &TriangleMesh, opts: SliceOptions) -> Result<Sliced, SliceError> {
    let t = opts.layer_thickness;
    if !(t.is_finite() && t > 0.0) {
        return Err(SliceError::DegenerateThickness(t));
    }
    if opts.require_watertight {
        let report = validate_watertight(m);
        if !report.is_sound() {
            return Err(SliceError::NotWatertight(Box::new(report)));
        }
    }
    let Some(b) = m.bounds() else {
        return Ok(Sliced {
            layers: Vec::new(),
            warnings: vec![SliceWarning::EmptyPrint],
        });
    };
    let offset = opts.z_offset.unwrap_or(t / 2.0);
    let heights = plane_heights(b.min.z, b.max.z, t, offset);
    let spans = spans(m);
    let layers = heights
        .par_iter()
        .map(|&z| layer_from_spans(&spans, z, opts.stitch_tol))
        .collect::<Result<Vec<_>, _>>()?;
    let mut warnings = Vec::new();
    if layers.is_empty() {
        warnings.push(SliceWarning::EmptyPrint);
    }
    Ok(Sliced { layers, warnings })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContourFinding {
    /// Two non-adjacent edges of one contour touch or cross.
    SimplicityViolation {
        layer: usize,
        contour: usize,
        edges: (usize, usize),
        at: Point2,
    },
    /// Edges of two different contours touch or cross.
    ContourCrossing {
        layer: usize,
        contours: (usize, usize),
        at: Point2,
    },
    OpenContour {
        layer: usize,
        endpoints: Vec<Point2>,
    },
    TooFewVertices {
        layer: usize,
        contour: usize,
        count: usize,
    },
    TooSmall {
        layer: usize,
        contour: usize,
        area: f64,
    },
    /// A hole that is not strictly inside any outer contour, or whose
    /// orientation contradicts its role.
    NestingViolation { layer: usize, contour: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContourReport {
    pub layers_checked: usize,
    pub contours_checked: usize,
    pub findings: Vec<ContourFinding>,
}

impl ContourReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn count(&self, pred: impl Fn(&ContourFinding) -> bool) -> usize {
        self.findings.iter().filter(|f| pred(f)).count()
    }
}

fn rings_cross(a: &[Point2], b: &[Point2]) -> Option<Point2> {
    let (ba, bb) = (Bounds2::of_points(a)?, Bounds2::of_points(b)?);
    if !ba.overlaps(&bb) {
        return None;
    }
    let (n, m) = (a.len(), b.len());
    for i in 0..n {
        let (p, q) = (a[i], a[(i + 1) % n]);
        for j in 0..m {
            if let Some(x) = segment_intersection_point(p, q, b[j], b[(j + 1) % m]) {
                return Some(x);
            }
        }
    }
    None
}

fn check_layer(li: usize, layer: &Layer) -> Vec<ContourFinding> {
    let mut out = Vec::new();
    if !layer.open_endpoints.is_empty() {
        out.push(ContourFinding::OpenContour {
            layer: li,
            endpoints: layer.open_endpoints.clone(),
        });
    }
    for (ci, c) in layer.contours.iter().enumerate() {
        let n = c.vertices.len();
        if n < 3 {
            out.push(ContourFinding::TooFewVertices {
                layer: li,
                contour: ci,
                count: n,
            });
            continue;
        }
        let area = signed_area(&c.vertices);
        if area.abs() <= MIN_CONTOUR_AREA {
            out.push(ContourFinding::TooSmall {
                layer: li,
                contour: ci,
                area,
            });
        }
        for (i, j, at) in ring_self_intersections(&c.vertices) {
            out.push(ContourFinding::SimplicityViolation {
                layer: li,
                contour: ci,
                edges: (i, j),
                at,
            });
        }
        let wrong_orientation = match c.role {
            ContourRole::Outer => area < 0.0,
            ContourRole::Hole => area > 0.0,
        };
        let orphan =
            c.role == ContourRole::Hole && !layer.islands.iter().any(|isl| isl.holes.contains(&ci));
        let escapes = c.role == ContourRole::Hole
            && layer
                .islands
                .iter()
                .find(|isl| isl.holes.contains(&ci))
                .is_some_and(|isl| {
                    let outer = &layer.contours[isl.outer].vertices;
                    !c.vertices.iter().all(|&p| point_in_ring(p, outer))
                });
        if wrong_orientation || orphan || escapes {
            out.push(ContourFinding::NestingViolation {
                layer: li,
                contour: ci,
            });
        }
    }
    for a in 0..layer.contours.len() {
        for b in a + 1..layer.contours.len() {
            if let Some(at) = rings_cross(&layer.contours[a].vertices, &layer.contours[b].vertices)
            {
                out.push(ContourFinding::ContourCrossing {
                    layer: li,
                    contours: (a, b),
                    at,
                });
            }
        }
    }
    out
}

/// Closure, simplicity, minimum area and hole nesting for every contour.
pub fn validate_contours(layers: &[Layer]) -> ContourReport {
    let findings: Vec<ContourFinding> = layers
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, l)| check_layer(i, l))
        .collect();
    ContourReport {
        layers_checked: layers.len(),
        contours_checked: layers.iter().map(|l| l.contours.len()).sum(),
        findings,
    }
}
