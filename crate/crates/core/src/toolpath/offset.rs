//! Miter-join polygon offsetting.

use crate::geometry::{ring_self_intersections, signed_area, Point2};

/// Corners sharper than this (miter length / distance) are bevelled.
pub const MITER_LIMIT: f64 = 4.0;

fn unit(v: Point2) -> Option<Point2> {
    let l = v.len();
    (l > 1e-12).then(|| v * (1.0 / l))
}

fn left(v: Point2) -> Point2 {
    Point2::new(-v.y, v.x)
}

fn dedup_close(ring: &[Point2]) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::with_capacity(ring.len());
    for &p in ring {
        if out.last().is_none_or(|q| q.dist(p) > 1e-9) {
            out.push(p);
        }
    }
    while out.len() > 1 && out[0].dist(out[out.len() - 1]) <= 1e-9 {
        out.pop();
    }
    out
}

/// Shift every edge of `ring` by `d` toward its left side and rejoin the
/// corners with miters. For a counter-clockwise outer ring a positive `d`
/// shrinks it; for a clockwise hole it grows the hole.
///
/// Edges that would flip direction are removed and the offset retried.
/// Returns `None` when the result vanishes, flips orientation or crosses
/// itself.
pub fn offset_ring(ring: &[Point2], d: f64) -> Option<Vec<Point2>> {
    let mut pts = dedup_close(ring);
    let orig_area = signed_area(&pts);
    if d == 0.0 {
        return (pts.len() >= 3).then_some(pts);
    }
    loop {
        let n = pts.len();
        if n < 3 {
            return None;
        }
        let dirs: Option<Vec<Point2>> = (0..n).map(|i| unit(pts[(i + 1) % n] - pts[i])).collect();
        let dirs = dirs?;
        let corner = |i: usize| -> Point2 {
            let (a, b) = (dirs[(i + n - 1) % n], dirs[i]);
            let (na, nb) = (left(a), left(b));
            let denom = a.cross(b);
            if denom.abs() < 1e-12 {
                return pts[i] + nb * d;
            }
            // intersect p + na*d + s*a with p + nb*d + u*b
            let pa = pts[i] + na * d;
            let pb = pts[i] + nb * d;
            let s = (pb - pa).cross(b) / denom;
            pa + a * s
        };
        let moved: Vec<Point2> = (0..n).map(corner).collect();
        let reversed = (0..n).find(|&i| (moved[(i + 1) % n] - moved[i]).dot(dirs[i]) <= 0.0);
        if let Some(i) = reversed {
            pts.remove((i + 1) % n);
            continue;
        }
        let mut out = Vec::with_capacity(n);
        for (i, &m) in moved.iter().enumerate() {
            if m.dist(pts[i]) > MITER_LIMIT * d.abs() {
                let (a, b) = (dirs[(i + n - 1) % n], dirs[i]);
                out.push(pts[i] + left(a) * d);
                out.push(pts[i] + left(b) * d);
            } else {
                out.push(m);
            }
        }
        let out = dedup_close(&out);
        let area = signed_area(&out);
        if out.len() < 3 || area.abs() < 1e-9 || area.signum() != orig_area.signum() {
            return None;
        }
        if !ring_self_intersections(&out).is_empty() {
            return None;
        }
        return Some(out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ring_length;

    fn square(lo: f64, hi: f64) -> Vec<Point2> {
        vec![
            Point2::new(lo, lo),
            Point2::new(hi, lo),
            Point2::new(hi, hi),
            Point2::new(lo, hi),
        ]
    }

    #[test]
    fn square_inset() {
        let r = offset_ring(&square(0.0, 40.0), 0.2).unwrap();
        assert_eq!(r.len(), 4);
        assert!((ring_length(&r) - 158.4).abs() < 1e-9);
        assert!((signed_area(&r) - 39.6 * 39.6).abs() < 1e-9);
    }

    #[test]
    fn hole_grows() {
        let mut hole = square(10.0, 20.0);
        hole.reverse();
        let r = offset_ring(&hole, 0.5).unwrap();
        assert!((signed_area(&r) + 11.0 * 11.0).abs() < 1e-9);
    }

    #[test]
    fn outward_offset_and_vanishing() {
        let r = offset_ring(&square(0.0, 40.0), -3.0).unwrap();
        assert!((signed_area(&r) - 46.0 * 46.0).abs() < 1e-9);
        assert!(offset_ring(&square(0.0, 0.3), 0.2).is_none());
    }

    #[test]
    fn tiny_edges_are_dropped() {
        // a near-duplicate corner vertex produces an edge that flips under inset
        let ring = vec![
            Point2::new(0.0, 0.0),
            Point2::new(10.0, 0.0),
            Point2::new(10.0, 1e-4),
            Point2::new(10.0, 10.0),
            Point2::new(0.0, 10.0),
        ];
        let r = offset_ring(&ring, 0.5).unwrap();
        assert!((signed_area(&r) - 81.0).abs() < 1e-3);
    }

    #[test]
    fn l_shape_inset() {
        let ring = vec![
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(4.0, 2.0),
            Point2::new(2.0, 2.0),
            Point2::new(2.0, 4.0),
            Point2::new(0.0, 4.0),
        ];
        let r = offset_ring(&ring, 0.5).unwrap();
        // bottom bar 3 x 1 plus upright 1 x 2
        assert!((signed_area(&r) - 5.0).abs() < 1e-9, "{}", signed_area(&r));
    }
}
