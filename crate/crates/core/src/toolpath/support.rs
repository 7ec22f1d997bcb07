//! Overhang detection and plate-anchored support pillars.

use std::collections::BTreeMap;

use crate::geometry::Point2;
use crate::mesh::{facet_normal, TriangleMesh};

use super::PrintConfig;

/// Facets whose lowest point is at or below this height rest on the plate.
pub const PLATE_EPS: f64 = 1e-9;

/// A vertical pillar from the plate up to `top`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportColumn {
    pub at: Point2,
    pub top: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overhangs {
    pub facets: Vec<usize>,
    pub columns: Vec<SupportColumn>,
}

/// Pillar grid spacing.
pub fn column_spacing(cfg: &PrintConfig) -> f64 {
    4.0 * cfg.extrusion_width
}

fn barycentric_z(p: Point2, v: &[crate::geometry::Vec3; 3]) -> Option<f64> {
    let (a, b, c) = (v[0].xy(), v[1].xy(), v[2].xy());
    let den = (b - a).cross(c - a);
    if den.abs() < 1e-15 {
        return None;
    }
    let w1 = (p - a).cross(c - a) / den;
    let w2 = (b - a).cross(p - a) / den;
    let w0 = 1.0 - w1 - w2;
    let eps = -1e-12;
    (w0 >= eps && w1 >= eps && w2 >= eps).then(|| w0 * v[0].z + w1 * v[1].z + w2 * v[2].z)
}

/// Flag facets whose outward normal points down more steeply than
/// `support_overhang_deg` below horizontal, ignoring facets on the plate,
/// and place pillars on a `4·extrusion_width` grid under them. Each pillar
/// stops one layer below the lowest overhang above it.
pub fn detect_overhangs(m: &TriangleMesh, cfg: &PrintConfig) -> Overhangs {
    let threshold = -cfg.support_overhang_deg.to_radians().sin();
    let s = column_spacing(cfg);
    let mut facets = Vec::new();
    let mut tops: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    for (i, f) in m.facets.iter().enumerate() {
        let Ok(n) = facet_normal(f.vertices[0], f.vertices[1], f.vertices[2]) else {
            continue;
        };
        let zmin = f.vertices.iter().map(|v| v.z).fold(f64::INFINITY, f64::min);
        if n.z >= threshold || zmin <= PLATE_EPS {
            continue;
        }
        facets.push(i);
        let xs = f.vertices.map(|v| v.x);
        let ys = f.vertices.map(|v| v.y);
        let lo = |a: [f64; 3]| ((a[0].min(a[1]).min(a[2])) / s - 0.5).ceil() as i64;
        let hi = |a: [f64; 3]| ((a[0].max(a[1]).max(a[2])) / s - 0.5).floor() as i64;
        for gx in lo(xs)..=hi(xs) {
            for gy in lo(ys)..=hi(ys) {
                let p = Point2::new((gx as f64 + 0.5) * s, (gy as f64 + 0.5) * s);
                if let Some(z) = barycentric_z(p, &f.vertices) {
                    let top = z - cfg.layer_thickness;
                    if top > 0.0 {
                        let e = tops.entry((gx, gy)).or_insert(top);
                        *e = e.min(top);
                    }
                }
            }
        }
    }
    let columns = tops
        .into_iter()
        .map(|((gx, gy), top)| SupportColumn {
            at: Point2::new((gx as f64 + 0.5) * s, (gy as f64 + 0.5) * s),
            top,
        })
        .collect();
    Overhangs { facets, columns }
}
