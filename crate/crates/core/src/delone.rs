//! Uniform discreteness and relative denseness checks.
//!
//! In 1-D both quantities are exact (gap scan). In 2-D the minimum gap is
//! exact (it is realised by a Delaunay edge) while the largest empty ball
//! is searched over Voronoi vertices, the eroded-window boundary and an
//! interior grid of step `r/2`. The 2-D hole search is one-sided: it can
//! miss a hole smaller than the grid resolution near the boundary, but it
//! never reports a hole that is not there.

use serde::{Deserialize, Serialize};
use spade::{DelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::index::build_index;
use crate::pointset::{dist, PointSet, Vector};

/// Interior grids larger than this are skipped in favour of the Voronoi
/// and boundary candidates alone.
const MAX_GRID_NODES: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeloneReport {
    pub uniformly_discrete: bool,
    pub relatively_dense: bool,
    pub min_gap: f64,
    pub max_hole: f64,
    /// Where the largest empty ball was found.
    pub hole_center: Vector,
}

pub fn verify_delone(ps: &PointSet) -> Result<DeloneReport> {
    if ps.is_empty() {
        return Err(Error::Precondition("point set is empty".into()));
    }
    for a in 0..ps.dim {
        if ps.window.extent(a) < 2.0 * ps.big_r {
            return Err(Error::WindowTooSmallForDenseness);
        }
    }
    let (min_gap, max_hole, hole_center) = if ps.dim == 1 { scan_1d(ps) } else { scan_2d(ps) };
    let tol = 1e-9 * (1.0 + ps.r);
    Ok(DeloneReport {
        uniformly_discrete: min_gap >= 2.0 * ps.r - tol,
        relatively_dense: max_hole <= ps.big_r + 1e-9 * (1.0 + ps.big_r),
        min_gap,
        max_hole,
        hole_center,
    })
}

/// Smallest distance between two distinct entries of `points`
/// (0 for duplicates), exact in both dimensions.
pub fn min_gap(dim: usize, points: &[Vector]) -> f64 {
    let mut sorted = points.to_vec();
    sorted.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
    if dim == 1 {
        return sorted.windows(2).map(|w| w[1][0] - w[0][0]).fold(f64::INFINITY, f64::min);
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return 0.0;
    }
    let vertices: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let Ok(tri) = DelaunayTriangulation::<Point2<f64>>::bulk_load(vertices) else {
        return f64::INFINITY;
    };
    tri.undirected_edges()
        .map(|e| {
            let [u, v] = e.vertices();
            let (pu, pv) = (u.position(), v.position());
            dist([pu.x, pu.y], [pv.x, pv.y])
        })
        .fold(f64::INFINITY, f64::min)
}

fn scan_1d(ps: &PointSet) -> (f64, f64, Vector) {
    let mut xs: Vec<f64> = ps.points.iter().map(|p| p[0]).collect();
    xs.sort_by(f64::total_cmp);
    let min_gap = xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);

    let eroded = ps.window.eroded(ps.big_r);
    let (a, b) = (eroded.lo[0], eroded.hi[0]);
    let nearest = |c: f64| {
        let k = xs.partition_point(|&x| x < c);
        let left = if k > 0 { c - xs[k - 1] } else { f64::INFINITY };
        let right = if k < xs.len() { xs[k] - c } else { f64::INFINITY };
        left.min(right)
    };
    // the distance-to-nearest function is piecewise linear with maxima at
    // gap midpoints or at the ends of the admissible centre interval
    let mut best = (nearest(a), a);
    let end = nearest(b);
    if end > best.0 {
        best = (end, b);
    }
    for w in xs.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        if m >= a && m <= b {
            let h = nearest(m);
            if h > best.0 {
                best = (h, m);
            }
        }
    }
    (min_gap, best.0, [best.1, 0.0])
}

fn scan_2d(ps: &PointSet) -> (f64, f64, Vector) {
    let index = build_index(ps);

    // exact duplicates would be merged by the triangulation
    let mut sorted: Vec<Vector> = ps.points.clone();
    sorted.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
    let has_duplicate = sorted.windows(2).any(|w| w[0] == w[1]);

    let vertices: Vec<Point2<f64>> = ps.points.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let tri = DelaunayTriangulation::<Point2<f64>>::bulk_load(vertices).ok();

    let mut min_gap = f64::INFINITY;
    let mut candidates: Vec<Vector> = Vec::new();
    if let Some(tri) = &tri {
        for e in tri.undirected_edges() {
            let [u, v] = e.vertices();
            let (pu, pv) = (u.position(), v.position());
            min_gap = min_gap.min(dist([pu.x, pu.y], [pv.x, pv.y]));
        }
        for f in tri.inner_faces() {
            let c = f.circumcenter();
            if c.x.is_finite() && c.y.is_finite() {
                candidates.push([c.x, c.y]);
            }
        }
    }
    if has_duplicate {
        min_gap = 0.0;
    }
    if tri.is_none() || ps.len() < 3 {
        // fall back to brute force for degenerate inputs
        for i in 0..ps.len() {
            for j in i + 1..ps.len() {
                min_gap = min_gap.min(dist(ps.points[i], ps.points[j]));
            }
        }
    }

    let eroded = ps.window.eroded(ps.big_r);
    let step = 0.5 * ps.r;
    let nx = ((eroded.extent(0) / step).ceil() as usize).max(1);
    let ny = ((eroded.extent(1) / step).ceil() as usize).max(1);
    let along = |n: usize, lo: f64, hi: f64| (0..=n).map(move |k| lo + (hi - lo) * k as f64 / n as f64);
    for x in along(nx, eroded.lo[0], eroded.hi[0]) {
        candidates.push([x, eroded.lo[1]]);
        candidates.push([x, eroded.hi[1]]);
    }
    for y in along(ny, eroded.lo[1], eroded.hi[1]) {
        candidates.push([eroded.lo[0], y]);
        candidates.push([eroded.hi[0], y]);
    }
    if (nx + 1) * (ny + 1) <= MAX_GRID_NODES {
        for x in along(nx, eroded.lo[0], eroded.hi[0]) {
            for y in along(ny, eroded.lo[1], eroded.hi[1]) {
                candidates.push([x, y]);
            }
        }
    }

    let mut best = (f64::NEG_INFINITY, eroded.center());
    for c in candidates {
        if !eroded.contains(c) {
            continue;
        }
        if let Some((_, d)) = index.nearest(c) {
            if d > best.0 {
                best = (d, c);
            }
        }
    }
    (min_gap, best.0.max(0.0), best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointset::Window;

    #[test]
    fn unit_lattice_is_delone() {
        let pts = (-10..=10).map(|k| [k as f64, 0.0]).collect();
        let ps = PointSet::new(1, pts, 0.5, 0.5, Window::interval(-10.0, 10.0));
        let rep = verify_delone(&ps).unwrap();
        assert!(rep.uniformly_discrete && rep.relatively_dense);
        assert_eq!(rep.min_gap, 1.0);
        assert_eq!(rep.max_hole, 0.5);
    }

    #[test]
    fn close_pair_is_not_uniformly_discrete() {
        let ps = PointSet::new(1, vec![[0.0, 0.0], [0.3, 0.0]], 0.5, 0.5, Window::interval(-0.5, 1.0));
        assert!(!verify_delone(&ps).unwrap().uniformly_discrete);
    }

    #[test]
    fn narrow_window_rejected() {
        let ps = PointSet::new(1, vec![[0.0, 0.0]], 0.5, 2.0, Window::interval(-1.0, 1.0));
        assert_eq!(verify_delone(&ps).unwrap_err(), Error::WindowTooSmallForDenseness);
    }

    #[test]
    fn square_lattice_hole_is_half_diagonal() {
        let mut pts = Vec::new();
        for i in -6..=6 {
            for j in -6..=6 {
                pts.push([i as f64, j as f64]);
            }
        }
        let ps = PointSet::new(2, pts, 0.5, 0.5f64.sqrt(), Window::rect((-6.0, 6.0), (-6.0, 6.0)));
        let rep = verify_delone(&ps).unwrap();
        assert!(rep.uniformly_discrete && rep.relatively_dense);
        assert!((rep.min_gap - 1.0).abs() < 1e-12);
        assert!((rep.max_hole - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn removed_point_opens_a_hole() {
        let mut pts = Vec::new();
        for i in -6i32..=6 {
            for j in -6i32..=6 {
                if (i, j) != (1, 2) {
                    pts.push([i as f64, j as f64]);
                }
            }
        }
        let ps = PointSet::new(2, pts, 0.5, 0.75, Window::rect((-6.0, 6.0), (-6.0, 6.0)));
        let rep = verify_delone(&ps).unwrap();
        assert!(!rep.relatively_dense);
        assert!((rep.max_hole - 1.0).abs() < 1e-9);
        assert!(dist(rep.hole_center, [1.0, 2.0]) < 1e-6);
    }
}
