//! Rectilinear scanline fill.

use crate::geometry::{Bounds2, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillDirection {
    /// Lines parallel to the x axis.
    Horizontal,
    /// Lines parallel to the y axis.
    Vertical,
}

impl FillDirection {
    /// 0° on even layers, 90° on odd ones.
    pub fn for_layer(index: usize) -> Self {
        if index.is_multiple_of(2) {
            Self::Horizontal
        } else {
            Self::Vertical
        }
    }
}

fn swap(p: Point2) -> Point2 {
    Point2::new(p.y, p.x)
}

/// Clip parallel lines at the given spacing against the even-odd region
/// bounded by `rings`. Lines sit at `min + spacing/2 + k·spacing` across the
/// region's extent, so at spacing equal to the bead width the beads tile the
/// region exactly. Consecutive lines alternate direction.
pub fn scanline_fill(rings: &[Vec<Point2>], spacing: f64, dir: FillDirection) -> Vec<[Point2; 2]> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Vec::new();
    }
    let rings: Vec<Vec<Point2>> = match dir {
        FillDirection::Horizontal => rings.to_vec(),
        FillDirection::Vertical => rings
            .iter()
            .map(|r| r.iter().copied().map(swap).collect())
            .collect(),
    };
    let Some(b) = rings
        .iter()
        .filter_map(Bounds2::of_points)
        .reduce(Bounds2::union)
    else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    let mut k = 0usize;
    loop {
        let y = b.min.y + spacing / 2.0 + k as f64 * spacing;
        if y >= b.max.y {
            break;
        }
        xs.clear();
        for r in &rings {
            let n = r.len();
            for i in 0..n {
                let (a, c) = (r[i], r[(i + 1) % n]);
                if (a.y <= y) != (c.y <= y) {
                    xs.push(a.x + (y - a.y) * (c.x - a.x) / (c.y - a.y));
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        let mut segs: Vec<[Point2; 2]> = xs
            .chunks_exact(2)
            .filter(|p| p[1] - p[0] > 1e-9)
            .map(|p| [Point2::new(p[0], y), Point2::new(p[1], y)])
            .collect();
        if k % 2 == 1 {
            segs.reverse();
            for s in &mut segs {
                s.swap(0, 1);
            }
        }
        out.extend(segs);
        k += 1;
    }
    if dir == FillDirection::Vertical {
        for s in &mut out {
            *s = [swap(s[0]), swap(s[1])];
        }
    }
    out
}

/// Line spacing for a fill fraction, or `None` when nothing is filled.
pub fn line_spacing(extrusion_width: f64, fill_fraction: f64) -> Option<f64> {
    (fill_fraction > 0.0).then(|| extrusion_width / fill_fraction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(lo: f64, hi: f64) -> Vec<Point2> {
        vec![
            Point2::new(lo, lo),
            Point2::new(hi, lo),
            Point2::new(hi, hi),
            Point2::new(lo, hi),
        ]
    }

    #[test]
    fn solid_square_tiles_exactly() {
        let segs = scanline_fill(&[square(0.4, 39.6)], 0.4, FillDirection::Horizontal);
        assert_eq!(segs.len(), 98);
        let total: f64 = segs.iter().map(|s| s[0].dist(s[1])).sum();
        assert!((total * 0.4 - 39.2 * 39.2).abs() < 1e-6);
        // boustrophedon: second line runs right to left
        assert!(segs[1][0].x > segs[1][1].x);
    }

    #[test]
    fn vertical_lines_and_hole() {
        let mut hole = square(4.0, 6.0);
        hole.reverse();
        let segs = scanline_fill(&[square(0.0, 10.0), hole], 1.0, FillDirection::Vertical);
        assert!(segs.iter().all(|s| s[0].x == s[1].x));
        // lines at x = 4.5 and 5.5 are split by the hole
        assert_eq!(segs.len(), 12);
        let total: f64 = segs.iter().map(|s| s[0].dist(s[1])).sum();
        assert!((total - 96.0).abs() < 1e-9);
    }

    #[test]
    fn spacing_from_fraction() {
        assert_eq!(line_spacing(0.4, 0.0), None);
        assert_eq!(line_spacing(0.4, 1.0), Some(0.4));
        assert!((line_spacing(0.4, 0.25).unwrap() - 1.6).abs() < 1e-15);
    }
}
