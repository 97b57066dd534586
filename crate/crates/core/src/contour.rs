//! Marching-squares level sets on a rectangular node grid.

use std::collections::HashMap;

/// A polyline in parameter coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

impl Polyline {
    /// Absolute shoelace area (zero for open polylines).
    pub fn area(&self) -> f64 {
        if !self.closed || self.points.len() < 3 {
            return 0.0;
        }
        let n = self.points.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let (x0, y0) = self.points[i];
                let (x1, y1) = self.points[(i + 1) % n];
                x0 * y1 - x1 * y0
            })
            .sum();
        twice.abs() / 2.0
    }

    /// Winding number of the closed polyline around `(x, y)`.
    pub fn winding_number(&self, x: f64, y: f64) -> i32 {
        let n = self.points.len();
        let mut wn = 0;
        for i in 0..n {
            let (x0, y0) = self.points[i];
            let (x1, y1) = self.points[(i + 1) % n];
            let side = (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0);
            if y0 <= y {
                if y1 > y && side > 0.0 {
                    wn += 1;
                }
            } else if y1 <= y && side < 0.0 {
                wn -= 1;
            }
        }
        wn
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.closed && self.winding_number(x, y) != 0
    }

    /// Distance from `(x, y)` to the nearest segment.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let n = self.points.len();
        let segs = if self.closed { n } else { n.saturating_sub(1) };
        (0..segs)
            .map(|i| {
                let (x0, y0) = self.points[i];
                let (x1, y1) = self.points[(i + 1) % n];
                let (dx, dy) = (x1 - x0, y1 - y0);
                let len2 = dx * dx + dy * dy;
                let t = if len2 > 0.0 {
                    (((x - x0) * dx + (y - y0) * dy) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                ((x0 + t * dx - x).powi(2) + (y0 + t * dy - y).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Traces the boundary of `{values <= level}`.
///
/// `values[i * ys.len() + j]` is the field at `(xs[i], ys[j])`; non-finite
/// values count as outside. The grid is padded with an outside ring placed on
/// the boundary nodes, so every returned polyline is closed and regions that
/// reach the edge of the grid follow the outermost nodes.
pub fn marching_squares(xs: &[f64], ys: &[f64], values: &[f64], level: f64) -> Vec<Polyline> {
    let (nx, ny) = (xs.len(), ys.len());
    assert_eq!(values.len(), nx * ny, "grid size mismatch");
    if nx == 0 || ny == 0 {
        return Vec::new();
    }
    // padded indices run 0..nx+2, padded node a maps to original a-1 (clamped)
    let px = nx + 2;
    let py = ny + 2;
    let coord = |a: usize, b: usize| -> (f64, f64) {
        let i = a.saturating_sub(1).min(nx - 1);
        let j = b.saturating_sub(1).min(ny - 1);
        (xs[i], ys[j])
    };
    let value = |a: usize, b: usize| -> f64 {
        if a == 0 || b == 0 || a == px - 1 || b == py - 1 {
            return f64::INFINITY;
        }
        let v = values[(a - 1) * ny + (b - 1)];
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let inside = |a: usize, b: usize| value(a, b) <= level;

    // edge keys: (0, a, b) joins (a,b)-(a+1,b); (1, a, b) joins (a,b)-(a,b+1)
    type Key = (u8, usize, usize);
    let crossing = |key: Key| -> (f64, f64) {
        let (p, q) = match key {
            (0, a, b) => ((a, b), (a + 1, b)),
            (_, a, b) => ((a, b), (a, b + 1)),
        };
        let (inn, out) = if inside(p.0, p.1) { (p, q) } else { (q, p) };
        let vi = value(inn.0, inn.1);
        let vo = value(out.0, out.1);
        let t = if vo.is_finite() && vo != vi {
            ((level - vi) / (vo - vi)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (x0, y0) = coord(inn.0, inn.1);
        let (x1, y1) = coord(out.0, out.1);
        (x0 + t * (x1 - x0), y0 + t * (y1 - y0))
    };

    let mut segments: Vec<(Key, Key)> = Vec::new();
    for a in 0..px - 1 {
        for b in 0..py - 1 {
            let c0 = inside(a, b);
            let c1 = inside(a + 1, b);
            let c2 = inside(a + 1, b + 1);
            let c3 = inside(a, b + 1);
            let case = (c0 as u8) | (c1 as u8) << 1 | (c2 as u8) << 2 | (c3 as u8) << 3;
            let bottom: Key = (0, a, b);
            let right: Key = (1, a + 1, b);
            let top: Key = (0, a, b + 1);
            let left: Key = (1, a, b);
            match case {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 | 10 => {
                    let centre = (value(a, b) + value(a + 1, b) + value(a + 1, b + 1) + value(a, b + 1)) / 4.0;
                    let centre_inside = centre <= level;
                    // case 5: corners 0 and 2 inside
                    if (case == 5) == centre_inside {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let mut by_key: HashMap<Key, Vec<usize>> = HashMap::new();
    for (i, (u, v)) in segments.iter().enumerate() {
        by_key.entry(*u).or_default().push(i);
        by_key.entry(*v).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (first, mut current) = segments[start];
        let mut keys = vec![first, current];
        let mut closed = false;
        loop {
            if current == first {
                keys.pop();
                closed = true;
                break;
            }
            let next = by_key
                .get(&current)
                .and_then(|segs| segs.iter().copied().find(|&s| !used[s]));
            let Some(s) = next else { break };
            used[s] = true;
            let (u, v) = segments[s];
            current = if u == current { v } else { u };
            keys.push(current);
        }
        let mut points: Vec<(f64, f64)> = Vec::with_capacity(keys.len());
        for k in keys {
            let p = crossing(k);
            if points.last() != Some(&p) {
                points.push(p);
            }
        }
        if closed && points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        lines.push(Polyline { points, closed });
    }
    lines
}
