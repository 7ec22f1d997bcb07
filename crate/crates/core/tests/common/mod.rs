//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use printmesh::geometry::Point2;
use printmesh::heightfield::{apply_scale, from_flat_grid};
use printmesh::{GridSourceSpec, HeightField};
use rand::Rng;

/// Random grid with a border of at least one ring at the minimum value.
pub fn random_padded_field<R: Rng>(rng: &mut R) -> HeightField {
    let cols = rng.gen_range(1..=10);
    let rows = rng.gen_range(1..=10);
    let values: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(0.0..50.0)).collect();
    let scale = [1.0, 0.5, 1.0 / 50.0, 0.3][rng.gen_range(0..4)];
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let spec = GridSourceSpec {
        length_x: cols,
        total: rows * cols,
        scale,
        pad_width: rng.gen_range(1..=3),
        pad_value: apply_scale(min, scale),
    };
    let h = from_flat_grid(&values, &spec).unwrap();
    let spacing = [1.0, 0.5, 2.5][rng.gen_range(0..3)];
    h.with_spacing(spacing).unwrap()
}

/// Shortest open path from `start` through all points, by trying every
/// permutation.
pub fn brute_force_tour(points: &[Point2], start: Point2) -> f64 {
    fn go(points: &[Point2], cur: Point2, used: &mut [bool], acc: f64, best: &mut f64) {
        if acc >= *best {
            return;
        }
        if used.iter().all(|&u| u) {
            *best = acc;
            return;
        }
        for i in 0..points.len() {
            if !used[i] {
                used[i] = true;
                go(points, points[i], used, acc + cur.dist(points[i]), best);
                used[i] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    if points.is_empty() {
        return 0.0;
    }
    go(
        points,
        start,
        &mut vec![false; points.len()],
        0.0,
        &mut best,
    );
    best
}

/// Filament cross-section, written out independently of the library.
pub fn filament_area(diameter: f64) -> f64 {
    let r = diameter / 2.0;
    std::f64::consts::PI * r * r
}
