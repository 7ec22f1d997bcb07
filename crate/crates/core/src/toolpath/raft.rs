//! Adhesion raft under the first layer.

use crate::geometry::{convex_hull, Point2};
use crate::slicer::{ContourRole, Layer};

use super::infill::{scanline_fill, FillDirection};
use super::offset::offset_ring;
use super::PrintConfig;

/// Convex hull of the layer's outer contours grown by `raft_margin`.
pub fn raft_outline(first: &Layer, cfg: &PrintConfig) -> Option<Vec<Point2>> {
    let pts: Vec<Point2> = first
        .contours
        .iter()
        .filter(|c| c.role == ContourRole::Outer)
        .flat_map(|c| c.vertices.iter().copied())
        .collect();
    let hull = convex_hull(&pts);
    if hull.len() < 3 {
        return None;
    }
    offset_ring(&hull, -cfg.raft_margin)
}

/// Solid fill lines for each raft layer, bottom first, alternating direction.
pub fn generate_raft(first: &Layer, cfg: &PrintConfig) -> Vec<Vec<[Point2; 2]>> {
    if cfg.raft_layers == 0 {
        return Vec::new();
    }
    let Some(outline) = raft_outline(first, cfg) else {
        return Vec::new();
    };
    (0..cfg.raft_layers as usize)
        .map(|j| {
            scanline_fill(
                std::slice::from_ref(&outline),
                cfg.extrusion_width,
                FillDirection::for_layer(j),
            )
        })
        .collect()
}
