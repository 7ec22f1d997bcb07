//! Per-layer SVG previews. One user unit is one millimetre and the y axis
//! points up, as in plan view.

use std::fmt::Write;

use thiserror::Error;

use crate::geometry::{Bounds2, Point2};
use crate::slicer::{ContourRole, Layer};
use crate::toolpath::{LayerPath, MoveKind};

pub const OUTER_COLOR: &str = "#1f77b4";
pub const HOLE_COLOR: &str = "#d62728";
pub const EXTRUDE_COLOR: &str = "#2ca02c";
pub const TRAVEL_COLOR: &str = "#7f7f7f";
pub const MARKER_COLOR: &str = "#ff00ff";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PreviewError {
    #[error("canvas {canvas:?} does not enclose the layer bounds {needed:?}")]
    CanvasTooSmall { canvas: Bounds2, needed: Bounds2 },
}

/// `layer_0007.svg` style file name.
pub fn layer_file_name(index: usize) -> String {
    format!("layer_{index:04}.svg")
}

fn num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    match s {
        "-0" | "" => "0".into(),
        _ => s.into(),
    }
}

fn pt(p: Point2) -> String {
    format!("{} {}", num(p.x), num(p.y))
}

/// Everything drawn for the layer, for choosing a canvas.
pub fn layer_extent(layer: &Layer, paths: Option<&LayerPath>) -> Option<Bounds2> {
    let mut b = layer.bounds();
    let extra = paths
        .into_iter()
        .flat_map(|p| &p.moves)
        .flat_map(|m| [m.from, m.to])
        .chain(layer.open_endpoints.iter().copied());
    for p in extra {
        match &mut b {
            Some(b) => b.include(p),
            None => b = Some(Bounds2::new(p, p)),
        }
    }
    b
}

fn polyline(runs: &mut Vec<Vec<Point2>>, from: Point2, to: Point2) {
    match runs.last_mut() {
        Some(run) if run.last() == Some(&from) => run.push(to),
        _ => runs.push(vec![from, to]),
    }
}

/// Outer contours, holes, extrude and (dashed) travel moves, and circles at
/// dangling contour endpoints.
pub fn render_layer_svg(
    layer: &Layer,
    paths: Option<&LayerPath>,
    canvas: Bounds2,
) -> Result<String, PreviewError> {
    if let Some(needed) = layer_extent(layer, paths) {
        if !canvas.expand(1e-9).contains(&needed) {
            return Err(PreviewError::CanvasTooSmall { canvas, needed });
        }
    }
    let (w, h) = (canvas.width(), canvas.height());
    let stroke = 0.2;
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}mm\" height=\"{}mm\" viewBox=\"{} {} {} {}\">",
        num(w),
        num(h),
        num(canvas.min.x),
        num(-canvas.max.y),
        num(w),
        num(h)
    )
    .unwrap();
    writeln!(s, "<title>layer z={}</title>", num(layer.z)).unwrap();
    s.push_str("<g transform=\"scale(1,-1)\" fill=\"none\" stroke-linejoin=\"round\">\n");
    writeln!(
        s,
        "<rect class=\"frame\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" stroke=\"#cccccc\" stroke-width=\"{stroke}\"/>",
        num(canvas.min.x),
        num(canvas.min.y),
        num(w),
        num(h)
    )
    .unwrap();
    for c in &layer.contours {
        let (class, color) = match c.role {
            ContourRole::Outer => ("outer", OUTER_COLOR),
            ContourRole::Hole => ("hole", HOLE_COLOR),
        };
        let mut d = String::new();
        for (i, &v) in c.vertices.iter().enumerate() {
            d.push_str(if i == 0 { "M " } else { " L " });
            d.push_str(&pt(v));
        }
        d.push_str(" Z");
        writeln!(
            s,
            "<path class=\"{class}\" d=\"{d}\" stroke=\"{color}\" stroke-width=\"{stroke}\"/>"
        )
        .unwrap();
    }
    if let Some(p) = paths {
        let mut extrude = Vec::new();
        let mut travel = Vec::new();
        for m in &p.moves {
            match m.kind {
                MoveKind::Extrude => polyline(&mut extrude, m.from, m.to),
                MoveKind::Travel => polyline(&mut travel, m.from, m.to),
            }
        }
        for (class, runs, color, extra) in [
            ("extrude", extrude, EXTRUDE_COLOR, ""),
            ("travel", travel, TRAVEL_COLOR, " stroke-dasharray=\"1 1\""),
        ] {
            for run in runs {
                let d: Vec<String> = run
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| format!("{}{}", if i == 0 { "M " } else { "L " }, pt(v)))
                    .collect();
                writeln!(
                    s,
                    "<path class=\"{class}\" d=\"{}\" stroke=\"{color}\" stroke-width=\"0.1\"{extra}/>",
                    d.join(" ")
                )
                .unwrap();
            }
        }
    }
    for &e in &layer.open_endpoints {
        writeln!(
            s,
            "<circle class=\"open-endpoint\" cx=\"{}\" cy=\"{}\" r=\"0.5\" fill=\"{MARKER_COLOR}\"/>",
            num(e.x),
            num(e.y)
        )
        .unwrap();
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::signed_area;
    use crate::slicer::Contour;

    fn square() -> Layer {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(40.0, 0.0),
            Point2::new(40.0, 40.0),
            Point2::new(0.0, 40.0),
        ];
        Layer::new(
            5.0,
            vec![Contour {
                signed_area: signed_area(&v),
                vertices: v,
                role: ContourRole::Outer,
            }],
        )
    }

    fn canvas() -> Bounds2 {
        Bounds2::new(Point2::new(-5.0, -5.0), Point2::new(45.0, 45.0))
    }

    #[test]
    fn cube_layer_single_path() {
        let svg = render_layer_svg(&square(), None, canvas()).unwrap();
        assert_eq!(svg.matches("<path").count(), 1);
        assert!(svg.contains("d=\"M 0 0 L 40 0 L 40 40 L 0 40 Z\""), "{svg}");
        assert!(svg.contains("viewBox=\"-5 -45 50 50\""));
    }

    #[test]
    fn empty_layer_has_frame_only() {
        let svg = render_layer_svg(&Layer::new(1.0, Vec::new()), None, canvas()).unwrap();
        assert!(svg.contains("class=\"frame\""));
        assert!(!svg.contains("<path"));
    }

    #[test]
    fn too_small_canvas() {
        let small = Bounds2::new(Point2::new(0.0, 0.0), Point2::new(10.0, 10.0));
        assert!(matches!(
            render_layer_svg(&square(), None, small),
            Err(PreviewError::CanvasTooSmall { .. })
        ));
    }

    #[test]
    fn dangling_markers() {
        let mut l = square();
        l.open_endpoints = vec![Point2::new(1.0, 2.0), Point2::new(3.0, 4.0)];
        let svg = render_layer_svg(&l, None, canvas()).unwrap();
        assert_eq!(svg.matches("class=\"open-endpoint\"").count(), 2);
    }

    #[test]
    fn file_names() {
        assert_eq!(layer_file_name(7), "layer_0007.svg");
    }
}
