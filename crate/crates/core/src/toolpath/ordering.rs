//! Island visiting order: nearest neighbour, then 2-opt and Or-opt.

use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    pub order: Vec<usize>,
    /// Open path length from the start point through every island.
    pub length: f64,
}

/// Length of the open path `start → points[order[0]] → …`.
pub fn tour_length(points: &[Point2], start: Point2, order: &[usize]) -> f64 {
    let mut cur = start;
    let mut total = 0.0;
    for &i in order {
        total += cur.dist(points[i]);
        cur = points[i];
    }
    total
}

/// Greedy tour; ties go to the lowest index.
pub fn nearest_neighbor(points: &[Point2], start: Point2) -> Tour {
    let mut visited = vec![false; points.len()];
    let mut order = Vec::with_capacity(points.len());
    let mut cur = start;
    for _ in 0..points.len() {
        let mut best: Option<(f64, usize)> = None;
        for (i, &p) in points.iter().enumerate() {
            if visited[i] {
                continue;
            }
            let d = cur.dist(p);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        let (_, i) = best.expect("an unvisited point remains");
        visited[i] = true;
        order.push(i);
        cur = points[i];
    }
    Tour {
        length: tour_length(points, start, &order),
        order,
    }
}

/// Reverse segments of the path while that shortens it. The start point is
/// fixed and the path end is free.
pub fn two_opt(points: &[Point2], start: Point2, mut order: Vec<usize>) -> Tour {
    let n = order.len();
    let at = |order: &[usize], k: usize| if k == 0 { start } else { points[order[k - 1]] };
    let mut improved = true;
    while improved {
        improved = false;
        // path positions 1..=n; reverse positions i..=j
        for i in 1..n {
            for j in i + 1..=n {
                let (a, b, c) = (at(&order, i - 1), at(&order, i), at(&order, j));
                let mut delta = a.dist(c) - a.dist(b);
                if j < n {
                    let d = at(&order, j + 1);
                    delta += b.dist(d) - c.dist(d);
                }
                if delta < -1e-12 {
                    order[i - 1..j].reverse();
                    improved = true;
                }
            }
        }
    }
    Tour {
        length: tour_length(points, start, &order),
        order,
    }
}

/// Move a run of up to three consecutive stops (possibly reversed) to the
/// spot where it is cheapest. Returns whether anything moved.
fn or_opt_pass(points: &[Point2], start: Point2, order: &mut Vec<usize>) -> bool {
    let n = order.len();
    let at = |order: &[usize], k: usize| if k == 0 { start } else { points[order[k - 1]] };
    let mut moved = false;
    for len in 1..=3.min(n) {
        let mut s = 1;
        while s + len - 1 <= n {
            let e = s + len - 1;
            let (first, last) = (at(order, s), at(order, e));
            let prev = at(order, s - 1);
            let next = (e < n).then(|| at(order, e + 1));
            let removed = prev.dist(first) + next.map_or(0.0, |q| last.dist(q))
                - next.map_or(0.0, |q| prev.dist(q));
            let mut best: Option<(f64, usize, bool)> = None;
            for k in (0..=n).filter(|&k| k + 1 < s || k > e) {
                let a = at(order, k);
                let b = (k < n).then(|| at(order, k + 1));
                let base = b.map_or(0.0, |b| a.dist(b));
                for rev in [false, true] {
                    let (x, y) = if rev { (last, first) } else { (first, last) };
                    let added = a.dist(x) + b.map_or(0.0, |b| y.dist(b)) - base;
                    let gain = added - removed;
                    if gain < -1e-12 && best.is_none_or(|(g, _, _)| gain < g) {
                        best = Some((gain, k, rev));
                    }
                }
            }
            if let Some((_, k, rev)) = best {
                let mut seg: Vec<usize> = order.drain(s - 1..e).collect();
                if rev {
                    seg.reverse();
                }
                // k is a path position; shift it if it sat after the removed run
                let at_pos = if k > e { k - len } else { k };
                order.splice(at_pos..at_pos, seg);
                moved = true;
            }
            s += 1;
        }
    }
    moved
}

/// Deterministic visiting order for island entry points: nearest neighbour,
/// then alternating 2-opt and Or-opt passes until neither improves.
pub fn order_islands(points: &[Point2], start: Point2) -> Tour {
    let mut order = nearest_neighbor(points, start).order;
    loop {
        order = two_opt(points, start, order).order;
        if !or_opt_pass(points, start, &mut order) {
            break;
        }
    }
    Tour {
        length: tour_length(points, start, &order),
        order,
    }
}
