//! Triangle meshes: heightfield tessellation, watertightness checks and
//! rigid/scaling transforms.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::Vec3;
use crate::heightfield::HeightField;

pub type Vertex = Vec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("degenerate facet: vertices are collinear")]
    DegenerateFacet,
    #[error("invalid tessellation option: {0}")]
    InvalidOption(String),
}

/// One triangle with its stored unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub normal: Vec3,
    pub vertices: [Vertex; 3],
}

impl Facet {
    /// Builds a facet whose normal follows the right-hand rule on the vertex order.
    pub fn from_vertices(v1: Vertex, v2: Vertex, v3: Vertex) -> Result<Self, MeshError> {
        Ok(Self {
            normal: facet_normal(v1, v2, v3)?,
            vertices: [v1, v2, v3],
        })
    }

    pub fn area(&self) -> f64 {
        let [a, b, c] = self.vertices;
        (b - a).cross(c - a).norm() * 0.5
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    pub name: String,
    pub facets: Vec<Facet>,
}

/// `normalize((v2 - v1) × (v3 - v1))`; negative zeros are folded to `+0.0`.
pub fn facet_normal(v1: Vertex, v2: Vertex, v3: Vertex) -> Result<Vec3, MeshError> {
    let n = (v2 - v1).cross(v3 - v1);
    let len = n.norm();
    if len == 0.0 || !len.is_finite() {
        return Err(MeshError::DegenerateFacet);
    }
    Ok(Vec3::new(n.x / len + 0.0, n.y / len + 0.0, n.z / len + 0.0))
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl TriangleMesh {
    pub fn new(name: impl Into<String>, facets: Vec<Facet>) -> Self {
        Self {
            name: name.into(),
            facets,
        }
    }

    pub fn len(&self) -> usize {
        self.facets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }

    pub fn bounds(&self) -> Option<Aabb> {
        let mut it = self.facets.iter().flat_map(|f| f.vertices);
        let first = it.next()?;
        let mut b = Aabb {
            min: first,
            max: first,
        };
        for v in it {
            b.min = Vec3::new(b.min.x.min(v.x), b.min.y.min(v.y), b.min.z.min(v.z));
            b.max = Vec3::new(b.max.x.max(v.x), b.max.y.max(v.y), b.max.z.max(v.z));
        }
        Some(b)
    }

    /// Sum of signed tetrahedron volumes against the origin. Positive for a
    /// closed, outward-wound solid.
    pub fn signed_volume(&self) -> f64 {
        self.facets
            .iter()
            .map(|f| {
                let [a, b, c] = f.vertices;
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    /// The classic 12-facet hand-written cube with corner at the origin.
    ///
    /// Facet order, vertex order and stored normals match the well-known
    /// ASCII listing exactly. Six of its facets are wound clockwise as seen
    /// from outside, so their stored normal disagrees with the right-hand
    /// rule; [`validate_watertight`] reports those as normal deviations.
    pub fn reference_cube(side: f64) -> Self {
        let s = side;
        let p = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
        let table: [([f64; 3], [[f64; 3]; 3]); 12] = [
            (
                [0.0, -1.0, 0.0],
                [[0.0, 0.0, 0.0], [s, 0.0, 0.0], [0.0, 0.0, s]],
            ),
            (
                [0.0, -1.0, 0.0],
                [[s, 0.0, s], [s, 0.0, 0.0], [0.0, 0.0, s]],
            ),
            ([0.0, 1.0, 0.0], [[0.0, s, 0.0], [s, s, 0.0], [0.0, s, s]]),
            ([0.0, 1.0, 0.0], [[s, s, s], [s, s, 0.0], [0.0, s, s]]),
            (
                [-1.0, 0.0, 0.0],
                [[0.0, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, s]],
            ),
            (
                [-1.0, 0.0, 0.0],
                [[0.0, s, s], [0.0, s, 0.0], [0.0, 0.0, s]],
            ),
            ([1.0, 0.0, 0.0], [[s, 0.0, 0.0], [s, s, 0.0], [s, 0.0, s]]),
            ([1.0, 0.0, 0.0], [[s, s, s], [s, s, 0.0], [s, 0.0, s]]),
            (
                [0.0, 0.0, -1.0],
                [[0.0, 0.0, 0.0], [s, 0.0, 0.0], [0.0, s, 0.0]],
            ),
            (
                [0.0, 0.0, -1.0],
                [[s, s, 0.0], [s, 0.0, 0.0], [0.0, s, 0.0]],
            ),
            ([0.0, 0.0, 1.0], [[0.0, 0.0, s], [s, 0.0, s], [0.0, s, s]]),
            ([0.0, 0.0, 1.0], [[s, s, s], [s, 0.0, s], [0.0, s, s]]),
        ];
        let facets = table
            .iter()
            .map(|(n, vs)| Facet {
                normal: p(n[0], n[1], n[2]),
                vertices: vs.map(|v| p(v[0], v[1], v[2])),
            })
            .collect();
        TriangleMesh::new("mycube", facets)
    }

    /// Closed box `[0, sx] × [0, sy] × [0, sz]` with consistent outward winding.
    pub fn cuboid(sx: f64, sy: f64, sz: f64) -> Self {
        let hf = HeightField::new(2, 2, 1.0, vec![sz; 4], 0.0).expect("valid 2x2 grid");
        let mut m = tessellate_heightfield(&hf).expect("box tessellates");
        if sx != 1.0 || sy != 1.0 {
            for f in &mut m.facets {
                for v in &mut f.vertices {
                    v.x *= sx;
                    v.y *= sy;
                }
                f.normal =
                    facet_normal(f.vertices[0], f.vertices[1], f.vertices[2]).unwrap_or(f.normal);
            }
        }
        m.name = "box".into();
        m
    }
}

/// Knobs for [`tessellate_heightfield_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TessellateOptions {
    /// Top-surface heights below this are raised to it so that the top never
    /// touches the base. Must be positive unless `shell_only` is set.
    pub min_thickness: f64,
    /// Emit only the open top surface with raw heights, no walls or base.
    pub shell_only: bool,
}

pub const DEFAULT_MIN_THICKNESS: f64 = 0.2;

impl Default for TessellateOptions {
    fn default() -> Self {
        Self {
            min_thickness: DEFAULT_MIN_THICKNESS,
            shell_only: false,
        }
    }
}

/// Closed solid from a heightfield with default options.
pub fn tessellate_heightfield(h: &HeightField) -> Result<TriangleMesh, MeshError> {
    tessellate_heightfield_with(h, TessellateOptions::default())
}

/// Two triangles per lattice cell on top, vertical walls around the border
/// and a lattice-matched base at `z = 0`.
///
/// Facet order: every lower-left top triangle in row-major cell order, then
/// every upper-right top triangle, then walls (south, east, north, west),
/// then the base.
pub fn tessellate_heightfield_with(
    h: &HeightField,
    opts: TessellateOptions,
) -> Result<TriangleMesh, MeshError> {
    if !opts.shell_only && !(opts.min_thickness.is_finite() && opts.min_thickness > 0.0) {
        return Err(MeshError::InvalidOption(format!(
            "min_thickness must be positive for a closed solid, got {}",
            opts.min_thickness
        )));
    }
    let (rows, cols) = (h.rows(), h.cols());
    let lift = if opts.shell_only {
        0.0
    } else {
        opts.min_thickness
    };
    let top = |r: usize, c: usize| {
        let p = h.node_xy(r, c);
        Vec3::new(p.x, p.y, h.get(r, c).max(lift))
    };
    let bottom = |r: usize, c: usize| {
        let p = h.node_xy(r, c);
        Vec3::new(p.x, p.y, 0.0)
    };
    let tri = |a: Vec3, b: Vec3, c: Vec3| Facet::from_vertices(a, b, c);

    // lower-left: (i, j), (i+1, j), (i, j+1) in (x, y): counter-clockwise from above
    let lower: Vec<Facet> = (0..rows - 1)
        .into_par_iter()
        .map(|r| {
            (0..cols - 1)
                .map(|c| tri(top(r, c), top(r, c + 1), top(r + 1, c)))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?
        .concat();
    // upper-right: (i+1, j+1), (i, j+1), (i+1, j): same vertices as the
    // classic (i+1, j+1), (i+1, j), (i, j+1) split, wound to face up
    let upper: Vec<Facet> = (0..rows - 1)
        .into_par_iter()
        .map(|r| {
            (0..cols - 1)
                .map(|c| tri(top(r + 1, c + 1), top(r + 1, c), top(r, c + 1)))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?
        .concat();

    let mut facets = Vec::with_capacity(4 * (rows - 1) * (cols - 1) + 4 * (rows + cols));
    facets.extend(lower);
    facets.extend(upper);
    if opts.shell_only {
        return Ok(TriangleMesh::new("heightfield", facets));
    }

    // Walk the border counter-clockwise (seen from above); the solid is on
    // the left, so each wall quad a→b faces outward with this winding.
    let mut ring: Vec<(usize, usize)> = Vec::with_capacity(2 * (rows + cols));
    ring.extend((0..cols - 1).map(|c| (0, c)));
    ring.extend((0..rows - 1).map(|r| (r, cols - 1)));
    ring.extend((1..cols).rev().map(|c| (rows - 1, c)));
    ring.extend((1..rows).rev().map(|r| (r, 0)));
    for i in 0..ring.len() {
        let (ar, ac) = ring[i];
        let (br, bc) = ring[(i + 1) % ring.len()];
        let (at, ab, bt, bb) = (top(ar, ac), bottom(ar, ac), top(br, bc), bottom(br, bc));
        facets.push(tri(ab, bb, bt)?);
        facets.push(tri(ab, bt, at)?);
    }

    for r in 0..rows - 1 {
        for c in 0..cols - 1 {
            facets.push(tri(bottom(r, c), bottom(r + 1, c), bottom(r, c + 1))?);
            facets.push(tri(
                bottom(r + 1, c + 1),
                bottom(r, c + 1),
                bottom(r + 1, c),
            )?);
        }
    }
    Ok(TriangleMesh::new("heightfield", facets))
}

/// Bit-exact vertex key; `-0.0` and `+0.0` compare equal.
fn vkey(v: Vec3) -> [u64; 3] {
    let k = |x: f64| if x == 0.0 { 0 } else { x.to_bits() };
    [k(v.x), k(v.y), k(v.z)]
}

/// An undirected edge used by a number of facets other than two.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDefect {
    pub a: Vertex,
    pub b: Vertex,
    pub facet_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalDeviation {
    pub facet: usize,
    pub stored: Vec3,
    pub computed: Vec3,
    /// Largest per-component difference; above 1 means opposite orientation.
    pub deviation: f64,
}

/// Findings of [`validate_watertight`]. Nothing here is fatal on its own.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WatertightReport {
    pub facet_count: usize,
    pub edge_count: usize,
    /// Edges with exactly one facet.
    pub boundary_edges: Vec<EdgeDefect>,
    /// Edges with three or more facets.
    pub non_manifold_edges: Vec<EdgeDefect>,
    pub degenerate_facets: Vec<usize>,
    pub normal_deviations: Vec<NormalDeviation>,
}

impl WatertightReport {
    /// Every edge is shared by exactly two facets.
    pub fn is_watertight(&self) -> bool {
        self.facet_count > 0 && self.boundary_edges.is_empty() && self.non_manifold_edges.is_empty()
    }

    /// Watertight with no degenerate facets: safe to slice.
    pub fn is_sound(&self) -> bool {
        self.is_watertight() && self.degenerate_facets.is_empty()
    }

    pub fn is_clean(&self) -> bool {
        self.is_sound() && self.normal_deviations.is_empty()
    }
}

pub const NORMAL_TOLERANCE: f64 = 1e-6;

type EdgeKey = ([u64; 3], [u64; 3]);

/// Edge pairing, degeneracy and stored-normal checks.
pub fn validate_watertight(m: &TriangleMesh) -> WatertightReport {
    let mut edges: HashMap<EdgeKey, (Vertex, Vertex, usize)> = HashMap::new();
    let mut report = WatertightReport {
        facet_count: m.facets.len(),
        ..Default::default()
    };
    for (i, f) in m.facets.iter().enumerate() {
        let [a, b, c] = f.vertices;
        match facet_normal(a, b, c) {
            Ok(n) => {
                let deviation = n.max_abs_diff(f.normal);
                if !(deviation <= NORMAL_TOLERANCE) {
                    report.normal_deviations.push(NormalDeviation {
                        facet: i,
                        stored: f.normal,
                        computed: n,
                        deviation,
                    });
                }
            }
            Err(_) => report.degenerate_facets.push(i),
        }
        for (p, q) in [(a, b), (b, c), (c, a)] {
            let (kp, kq) = (vkey(p), vkey(q));
            let key = if kp <= kq { (kp, kq) } else { (kq, kp) };
            edges.entry(key).or_insert((p, q, 0)).2 += 1;
        }
    }
    report.edge_count = edges.len();
    let mut defects: Vec<_> = edges.into_iter().filter(|(_, (_, _, n))| *n != 2).collect();
    defects.sort_by_key(|x| x.0);
    for (_, (a, b, facet_count)) in defects {
        let d = EdgeDefect { a, b, facet_count };
        if facet_count == 1 {
            report.boundary_edges.push(d);
        } else {
            report.non_manifold_edges.push(d);
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Scale(f64),
    MirrorX,
    Translate(f64, f64, f64),
}

/// Apply `op` to every vertex and recompute normals. Mirroring swaps the
/// last two vertices of each facet so outward winding survives.
pub fn transform(m: &TriangleMesh, op: Transform) -> TriangleMesh {
    let map = |v: Vec3| match op {
        Transform::Scale(s) => v * s,
        Transform::MirrorX => Vec3::new(-v.x, v.y, v.z),
        Transform::Translate(dx, dy, dz) => Vec3::new(v.x + dx, v.y + dy, v.z + dz),
    };
    let facets = m
        .facets
        .iter()
        .map(|f| {
            let [a, b, c] = f.vertices.map(map);
            let vertices = if op == Transform::MirrorX {
                [a, c, b]
            } else {
                [a, b, c]
            };
            let fallback = match op {
                Transform::MirrorX => Vec3::new(-f.normal.x, f.normal.y, f.normal.z),
                _ => f.normal,
            };
            Facet {
                normal: facet_normal(vertices[0], vertices[1], vertices[2]).unwrap_or(fallback),
                vertices,
            }
        })
        .collect();
    TriangleMesh::new(m.name.clone(), facets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normals_from_cross_product() {
        let n = facet_normal(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(40.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 40.0),
        )
        .unwrap();
        assert_eq!(n, Vec3::new(0.0, -1.0, 0.0));
        assert!(n.x.is_sign_positive() && n.z.is_sign_positive());
        let n = facet_normal(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        )
        .unwrap();
        assert_eq!(n, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(
            facet_normal(
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(2.0, 2.0, 0.0)
            ),
            Err(MeshError::DegenerateFacet)
        );
    }

    #[test]
    fn reference_cube_is_watertight() {
        let cube = TriangleMesh::reference_cube(40.0);
        assert_eq!(cube.len(), 12);
        let r = validate_watertight(&cube);
        assert!(r.is_watertight());
        assert!(r.boundary_edges.is_empty());
        assert_eq!(r.edge_count, 18);
        // the hand-written listing winds half its facets against their normals
        assert_eq!(r.normal_deviations.len(), 6);
        assert!(r.normal_deviations.iter().all(|d| d.deviation > 1.0));
    }

    #[test]
    fn missing_facet_exposes_three_edges() {
        let mut cube = TriangleMesh::reference_cube(40.0);
        cube.facets.remove(3);
        let r = validate_watertight(&cube);
        assert_eq!(r.boundary_edges.len(), 3);
        assert!(!r.is_watertight());

        let single = TriangleMesh::new(
            "t",
            vec![Facet::from_vertices(
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            )
            .unwrap()],
        );
        let r = validate_watertight(&single);
        assert_eq!(r.boundary_edges.len(), 3);
        assert!(!r.is_watertight());
    }

    #[test]
    fn degenerate_and_bad_normals_reported() {
        let flat = Facet {
            normal: Vec3::new(0.0, 0.0, 1.0),
            vertices: [
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(2.0, 2.0, 0.0),
            ],
        };
        let mut tilted = Facet::from_vertices(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        )
        .unwrap();
        tilted.normal = Vec3::new(0.0, 0.001, 0.9999995);
        let r = validate_watertight(&TriangleMesh::new("x", vec![flat, tilted]));
        assert_eq!(r.degenerate_facets, vec![0]);
        assert_eq!(r.normal_deviations.len(), 1);
        assert!(r.normal_deviations[0].deviation < 1.0);
    }

    #[test]
    fn two_by_two_box_has_twelve_facets() {
        let h = HeightField::new(2, 2, 40.0, vec![5.0; 4], 0.0).unwrap();
        let m = tessellate_heightfield(&h).unwrap();
        assert_eq!(m.len(), 12);
        let r = validate_watertight(&m);
        assert!(r.is_clean(), "{r:?}");
        assert!((m.signed_volume() - 40.0 * 40.0 * 5.0).abs() < 1e-9);
        // top facets face up
        assert!(m.facets[..2]
            .iter()
            .all(|f| f.normal == Vec3::new(0.0, 0.0, 1.0)));
        assert!(m.facets[10..]
            .iter()
            .all(|f| f.normal == Vec3::new(0.0, 0.0, -1.0)));
    }

    #[test]
    fn top_facet_counts() {
        let h = HeightField::new(3, 3, 1.0, vec![1.0; 9], 0.0).unwrap();
        let m = tessellate_heightfield_with(
            &h,
            TessellateOptions {
                shell_only: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(m.len(), 8);
        let h = HeightField::new(54, 54, 1.0, vec![1.0; 54 * 54], 0.0).unwrap();
        let m = tessellate_heightfield_with(
            &h,
            TessellateOptions {
                shell_only: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(m.len(), 5618);
    }

    #[test]
    fn zero_heights_are_lifted_to_min_thickness() {
        // checkerboard of 0/10 would pinch the top onto the base without the lift
        let mut v = vec![0.0; 25];
        for (i, h) in v.iter_mut().enumerate() {
            let (r, c) = (i / 5, i % 5);
            if (1..4).contains(&r) && (1..4).contains(&c) && (r + c) % 2 == 0 {
                *h = 10.0;
            }
        }
        let h = HeightField::new(5, 5, 1.0, v, 0.0).unwrap();
        let m = tessellate_heightfield(&h).unwrap();
        let r = validate_watertight(&m);
        assert!(r.is_clean(), "{r:?}");
        assert!(m.signed_volume() > 0.0);
        assert_eq!(m.bounds().unwrap().min.z, 0.0);
        assert!(tessellate_heightfield_with(
            &h,
            TessellateOptions {
                min_thickness: 0.0,
                shell_only: false
            }
        )
        .is_err());
    }

    #[test]
    fn transforms() {
        let cube = TriangleMesh::cuboid(40.0, 40.0, 40.0);
        let half = transform(&cube, Transform::Scale(0.5));
        let b = half.bounds().unwrap();
        assert_eq!(b.max.x - b.min.x, 20.0);
        assert_eq!(b.max.z - b.min.z, 20.0);

        let twice = transform(&transform(&cube, Transform::MirrorX), Transform::MirrorX);
        for (a, b) in cube.facets.iter().zip(&twice.facets) {
            assert_eq!(vkey(a.vertices[0]), vkey(b.vertices[0]));
            assert_eq!(a.vertices.map(vkey), b.vertices.map(vkey));
        }
        let mirrored = transform(&cube, Transform::MirrorX);
        assert!(validate_watertight(&mirrored).is_clean());
        assert!(mirrored.signed_volume() > 0.0);

        let moved = transform(&cube, Transform::Translate(10.0, 0.0, 0.0));
        assert_eq!(moved.bounds().unwrap().min, Vec3::new(10.0, 0.0, 0.0));
    }
}
