//! Fixed-radius neighbour search.
//!
//! 1-D samples are kept sorted and answered by binary search; 2-D samples
//! use a uniform bucket grid in compressed-row layout. Both return exactly
//! the indices a linear scan with `dist(p, c) <= radius` would return, in
//! increasing index order.

use crate::pointset::{dist, BallQuery, PointSet, Vector};

#[derive(Debug, Clone)]
pub enum SpatialIndex {
    Line(LineIndex),
    Grid(GridIndex),
}

#[derive(Debug, Clone)]
pub struct LineIndex {
    /// (x, original index), sorted by x.
    sorted: Vec<(f64, usize)>,
    points: Vec<Vector>,
}

#[derive(Debug, Clone)]
pub struct GridIndex {
    points: Vec<Vector>,
    origin: Vector,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

/// Builds the index appropriate to the sample's dimension.
pub fn build_index(ps: &PointSet) -> SpatialIndex {
    SpatialIndex::build(ps.dim, &ps.points, ps.r)
}

/// Reference implementation used as the oracle for the index.
pub fn linear_scan(points: &[Vector], q: &BallQuery) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| dist(**p, q.center) <= q.radius)
        .map(|(i, _)| i)
        .collect()
}

impl SpatialIndex {
    pub fn build(dim: usize, points: &[Vector], packing_radius: f64) -> Self {
        if dim == 1 {
            let mut sorted: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| (p[0], i)).collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            SpatialIndex::Line(LineIndex { sorted, points: points.to_vec() })
        } else {
            SpatialIndex::Grid(GridIndex::build(points, packing_radius))
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SpatialIndex::Line(l) => l.points.len(),
            SpatialIndex::Grid(g) => g.points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> &[Vector] {
        match self {
            SpatialIndex::Line(l) => &l.points,
            SpatialIndex::Grid(g) => &g.points,
        }
    }

    /// Indices of all points in the closed ball, in increasing order.
    pub fn points_in_ball(&self, q: &BallQuery) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_in_ball(q, |i| out.push(i));
        out.sort_unstable();
        out
    }

    /// Visits every point in the closed ball (unspecified order).
    pub fn for_each_in_ball(&self, q: &BallQuery, mut f: impl FnMut(usize)) {
        match self {
            SpatialIndex::Line(l) => {
                let lo = q.center[0] - q.radius;
                let start = l.sorted.partition_point(|&(x, _)| x < lo);
                for &(x, i) in &l.sorted[start..] {
                    if x > q.center[0] + q.radius {
                        break;
                    }
                    if dist(l.points[i], q.center) <= q.radius {
                        f(i);
                    }
                }
            }
            SpatialIndex::Grid(g) => g.for_each_in_ball(q, f),
        }
    }

    /// Nearest point to `p` and its distance.
    pub fn nearest(&self, p: Vector) -> Option<(usize, f64)> {
        match self {
            SpatialIndex::Line(l) => {
                if l.sorted.is_empty() {
                    return None;
                }
                let k = l.sorted.partition_point(|&(x, _)| x < p[0]);
                let mut best: Option<(usize, f64)> = None;
                for j in [k.wrapping_sub(1), k] {
                    if let Some(&(_, i)) = l.sorted.get(j) {
                        let d = dist(l.points[i], p);
                        if best.is_none_or(|(bi, bd)| d < bd || (d == bd && i < bi)) {
                            best = Some((i, d));
                        }
                    }
                }
                best
            }
            SpatialIndex::Grid(g) => g.nearest(p),
        }
    }
}

impl GridIndex {
    fn build(points: &[Vector], packing_radius: f64) -> Self {
        let n = points.len().max(1);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        if points.is_empty() {
            lo = [0.0; 2];
            hi = [0.0; 2];
        }
        let area = ((hi[0] - lo[0]) * (hi[1] - lo[1])).max(1e-12);
        let cell = (area / n as f64).sqrt().max(2.0 * packing_radius).max(1e-9);
        let nx = (((hi[0] - lo[0]) / cell).floor() as usize + 1).max(1);
        let ny = (((hi[1] - lo[1]) / cell).floor() as usize + 1).max(1);
        let cell_of = |p: &Vector| {
            let cx = (((p[0] - lo[0]) / cell).floor() as usize).min(nx - 1);
            let cy = (((p[1] - lo[1]) / cell).floor() as usize).min(ny - 1);
            cy * nx + cx
        };
        let mut counts = vec![0u32; nx * ny + 1];
        for p in points {
            counts[cell_of(p) + 1] += 1;
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = cell_of(p);
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        GridIndex { points: points.to_vec(), origin: lo, cell, nx, ny, starts: counts, items }
    }

    fn cell_coord(&self, v: f64, axis: usize) -> i64 {
        ((v - self.origin[axis]) / self.cell).floor() as i64
    }

    fn for_each_in_ball(&self, q: &BallQuery, mut f: impl FnMut(usize)) {
        if self.points.is_empty() {
            return;
        }
        let x0 = self.cell_coord(q.center[0] - q.radius, 0);
        let x1 = self.cell_coord(q.center[0] + q.radius, 0);
        let y0 = self.cell_coord(q.center[1] - q.radius, 1);
        let y1 = self.cell_coord(q.center[1] + q.radius, 1);
        let (x0, x1) = (x0.max(0), x1.min(self.nx as i64 - 1));
        let (y0, y1) = (y0.max(0), y1.min(self.ny as i64 - 1));
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                let c = cy as usize * self.nx + cx as usize;
                for &i in &self.items[self.starts[c] as usize..self.starts[c + 1] as usize] {
                    let i = i as usize;
                    if dist(self.points[i], q.center) <= q.radius {
                        f(i);
                    }
                }
            }
        }
    }

    fn nearest(&self, p: Vector) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let clamp = |v: f64, axis: usize, n: usize| {
            (((v - self.origin[axis]) / self.cell).floor() as i64).clamp(0, n as i64 - 1)
        };
        let cx = clamp(p[0], 0, self.nx);
        let cy = clamp(p[1], 1, self.ny);
        let mut best: Option<(usize, f64)> = None;
        let max_ring = self.nx.max(self.ny) as i64;
        for ring in 0..=max_ring {
            for gy in (cy - ring)..=(cy + ring) {
                if gy < 0 || gy >= self.ny as i64 {
                    continue;
                }
                for gx in (cx - ring)..=(cx + ring) {
                    if gx < 0 || gx >= self.nx as i64 {
                        continue;
                    }
                    if (gy - cy).abs() != ring && (gx - cx).abs() != ring {
                        continue;
                    }
                    let c = gy as usize * self.nx + gx as usize;
                    for &i in &self.items[self.starts[c] as usize..self.starts[c + 1] as usize] {
                        let i = i as usize;
                        let d = dist(self.points[i], p);
                        if best.is_none_or(|(bi, bd)| d < bd || (d == bd && i < bi)) {
                            best = Some((i, d));
                        }
                    }
                }
            }
            // unscanned cells are at least `ring * cell` away from p
            if best.is_some_and(|(_, bd)| bd <= ring as f64 * self.cell) {
                break;
            }
        }
        best
    }
}
