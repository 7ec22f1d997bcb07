use printmesh::geometry::Point2;
use printmesh::preview::layer_extent;
use printmesh::slicer::stitch_segments;
use printmesh::{plan_print, render_layer_svg, Layer, PrintConfig};
use proptest::prelude::*;

fn polygon(n: usize, cx: f64, cy: f64, r: f64, phase: f64) -> Vec<[Point2; 2]> {
    let p: Vec<Point2> = (0..n)
        .map(|i| {
            let a = phase + i as f64 * std::f64::consts::TAU / n as f64;
            Point2::new(cx + r * a.cos(), cy + r * a.sin())
        })
        .collect();
    (0..n).map(|i| [p[i], p[(i + 1) % n]]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn svg_is_well_formed(n in 3usize..40, m in 3usize..12, r in 5.0f64..50.0, cx in -100.0f64..100.0, phase in 0.0f64..6.0) {
        let mut segs = polygon(n, cx, 0.0, r, phase);
        segs.extend(polygon(m, cx, 0.0, r / 3.0, phase));
        let layer = Layer::new(0.1, stitch_segments(&segs, 1e-7).unwrap());
        let plan = plan_print(std::slice::from_ref(&layer), None, &PrintConfig::default()).unwrap();
        let paths = plan.toolpath.layers.first();
        let canvas = layer_extent(&layer, paths).unwrap().expand(1.0);
        let svg = render_layer_svg(&layer, paths, canvas).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        prop_assert_eq!(doc.root_element().tag_name().name(), "svg");
        let contour_paths: Vec<_> = doc
            .descendants()
            .filter(|e| matches!(e.attribute("class"), Some("outer" | "hole")))
            .collect();
        prop_assert_eq!(contour_paths.len(), layer.contours.len());
        let mut counts: Vec<usize> = contour_paths
            .iter()
            .map(|e| e.attribute("d").unwrap().split_whitespace().filter(|t| t.parse::<f64>().is_ok()).count())
            .collect();
        let mut expected: Vec<usize> = layer.contours.iter().map(|c| 2 * c.vertices.len()).collect();
        counts.sort();
        expected.sort();
        prop_assert_eq!(counts, expected);
    }
}
