use rayon::prelude::*;

use crate::geometry::{point_in_ring, Point2};
use crate::slicer::{Island, Layer};

use super::infill::{line_spacing, scanline_fill, FillDirection};
use super::offset::offset_ring;
use super::ordering::order_islands;
use super::raft::generate_raft;
use super::support::Overhangs;
use super::{LayerKind, LayerPath, PathBuilder, PrintConfig, ToolPath, ToolpathError};

#[derive(Debug, Clone, PartialEq)]
pub enum PlanWarning {
    /// A contour too small for one bead; nothing is printed for it.
    VanishedLoop { layer: usize, contour: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Perimeters {
    /// One loop per surviving contour, same orientation as the contour.
    pub loops: Vec<Vec<Point2>>,
    /// Indices of contours whose loop vanished.
    pub vanished: Vec<usize>,
}

/// Bead centre lines: every contour offset half a bead into the solid.
pub fn generate_perimeters(layer: &Layer, cfg: &PrintConfig) -> Perimeters {
    let mut out = Perimeters::default();
    for (i, c) in layer.contours.iter().enumerate() {
        match offset_ring(&c.vertices, cfg.extrusion_width / 2.0) {
            Some(r) => out.loops.push(r),
            None => out.vanished.push(i),
        }
    }
    out
}

fn inside_island(layer: &Layer, isl: &Island, p: Point2) -> bool {
    point_in_ring(p, &layer.contours[isl.outer].vertices)
        && !isl
            .holes
            .iter()
            .any(|&h| point_in_ring(p, &layer.contours[h].vertices))
}

fn island_infill(
    layer: &Layer,
    isl: &Island,
    cfg: &PrintConfig,
    dir: FillDirection,
) -> Vec<[Point2; 2]> {
    let Some(spacing) = line_spacing(cfg.extrusion_width, cfg.fill_fraction) else {
        return Vec::new();
    };
    let w = cfg.extrusion_width;
    let Some(outer) = offset_ring(&layer.contours[isl.outer].vertices, w) else {
        return Vec::new();
    };
    let mut rings = vec![outer];
    rings.extend(
        isl.holes
            .iter()
            .filter_map(|&h| offset_ring(&layer.contours[h].vertices, w)),
    );
    scanline_fill(&rings, spacing, dir)
        .into_iter()
        .filter(|s| inside_island(layer, isl, s[0].lerp(s[1], 0.5)))
        .collect()
}

/// Rectilinear infill inside the inner edge of the perimeter beads. Lines are
/// spaced `extrusion_width / fill_fraction` apart and turn 90° on odd layers.
pub fn generate_infill(layer: &Layer, cfg: &PrintConfig, layer_index: usize) -> Vec<[Point2; 2]> {
    let dir = FillDirection::for_layer(layer_index);
    layer
        .islands
        .iter()
        .flat_map(|isl| island_infill(layer, isl, cfg, dir))
        .collect()
}

enum Stroke {
    Loop(Vec<Point2>),
    Line([Point2; 2]),
}

struct LayerPlan {
    kind: LayerKind,
    z: f64,
    strokes: Vec<Stroke>,
    warnings: Vec<PlanWarning>,
}

fn model_strokes(
    index: usize,
    layer: &Layer,
    cfg: &PrintConfig,
) -> (Vec<Stroke>, Vec<PlanWarning>) {
    let mut strokes = Vec::new();
    let mut warnings = Vec::new();
    let entries: Vec<Point2> = layer
        .islands
        .iter()
        .map(|isl| layer.contours[isl.outer].entry_point())
        .collect();
    let tour = order_islands(&entries, Point2::default());
    let dir = FillDirection::for_layer(index);
    for &k in &tour.order {
        let isl = &layer.islands[k];
        for c in std::iter::once(isl.outer).chain(isl.holes.iter().copied()) {
            match offset_ring(&layer.contours[c].vertices, cfg.extrusion_width / 2.0) {
                Some(r) => strokes.push(Stroke::Loop(r)),
                None => warnings.push(PlanWarning::VanishedLoop {
                    layer: index,
                    contour: c,
                }),
            }
        }
        strokes.extend(
            island_infill(layer, isl, cfg, dir)
                .into_iter()
                .map(Stroke::Line),
        );
    }
    (strokes, warnings)
}

fn support_strokes(
    layer: Option<&Layer>,
    plane_z: f64,
    overhangs: &Overhangs,
    cfg: &PrintConfig,
) -> Vec<Stroke> {
    let h = cfg.extrusion_width / 2.0;
    overhangs
        .columns
        .iter()
        .filter(|c| c.top > plane_z)
        .filter(|c| {
            layer.is_none_or(|l| !l.contours.iter().any(|k| point_in_ring(c.at, &k.vertices)))
        })
        .map(|c| {
            let p = c.at;
            Stroke::Loop(vec![
                Point2::new(p.x - h, p.y - h),
                Point2::new(p.x + h, p.y - h),
                Point2::new(p.x + h, p.y + h),
                Point2::new(p.x - h, p.y + h),
            ])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub toolpath: ToolPath,
    pub warnings: Vec<PlanWarning>,
}

/// Plan the whole print: raft layers, support-only layers below the model,
/// then one path per sliced layer. The nozzle height of a model layer is the
/// top of its slab (`plane_z + thickness/2`) lifted by the raft.
///
/// `overhangs` enables support pillars.
pub fn plan_print(
    layers: &[Layer],
    overhangs: Option<&Overhangs>,
    cfg: &PrintConfig,
) -> Result<Plan, ToolpathError> {
    cfg.validate()?;
    let t = cfg.layer_thickness;
    let lift = cfg.raft_layers as f64 * t;
    let mut plans: Vec<LayerPlan> = Vec::new();

    if let Some(first) = layers.first() {
        for (j, lines) in generate_raft(first, cfg).into_iter().enumerate() {
            plans.push(LayerPlan {
                kind: LayerKind::Raft,
                z: (j + 1) as f64 * t,
                strokes: lines.into_iter().map(Stroke::Line).collect(),
                warnings: Vec::new(),
            });
        }
    }

    if let (Some(o), Some(first)) = (overhangs, layers.first()) {
        let mut z = first.z - t;
        let mut below = Vec::new();
        while z > 0.0 {
            below.push(z);
            z -= t;
        }
        for &z in below.iter().rev() {
            plans.push(LayerPlan {
                kind: LayerKind::Support,
                z: z + t / 2.0 + lift,
                strokes: support_strokes(None, z, o, cfg),
                warnings: Vec::new(),
            });
        }
    }

    let model: Vec<LayerPlan> = layers
        .par_iter()
        .enumerate()
        .map(|(i, layer)| {
            let (mut strokes, warnings) = model_strokes(i, layer, cfg);
            if let Some(o) = overhangs {
                strokes.extend(support_strokes(Some(layer), layer.z, o, cfg));
            }
            LayerPlan {
                kind: LayerKind::Model(i),
                z: layer.z + t / 2.0 + lift,
                strokes,
                warnings,
            }
        })
        .collect();
    plans.extend(model);

    let mut pos = Point2::default();
    let mut toolpath = ToolPath::default();
    let mut warnings = Vec::new();
    for p in plans {
        let mut b = PathBuilder::new(cfg, pos, p.z);
        for s in &p.strokes {
            match s {
                Stroke::Loop(r) => b.extrude_loop(r),
                Stroke::Line(l) => b.extrude_line(*l),
            }
        }
        pos = b.position();
        toolpath.layers.push(LayerPath {
            kind: p.kind,
            z: p.z,
            moves: b.finish(),
        });
        warnings.extend(p.warnings);
    }
    toolpath.check()?;
    Ok(Plan { toolpath, warnings })
}
