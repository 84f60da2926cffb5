use num_integer::Integer;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pointset::{ModuleCoords, PointSet, Vector, Window};

/// Primitive integer vectors `(p, q)` with `|p|, |q| ≤ bound`.
///
/// The set has arbitrarily large holes, so it is flagged non-Delone; the
/// stored `R = 1` only describes the covering radius of the ambient lattice.
pub fn visible_points(bound: u32) -> Result<PointSet> {
    if bound == 0 {
        return Err(Error::Validation("bound must be at least 1".into()));
    }
    let b = bound as i64;
    let mut points = Vec::new();
    let mut coords = Vec::new();
    for q in -b..=b {
        for p in -b..=b {
            if p.unsigned_abs().gcd(&q.unsigned_abs()) == 1 {
                points.push([p as f64, q as f64]);
                coords.push(vec![p, q]);
            }
        }
    }
    let mut ps = PointSet::new(2, points, 0.5, 1.0, Window::centered(2, bound as f64));
    ps.module = Some(ModuleCoords { basis: vec![[1.0, 0.0], [0.0, 1.0]], origin: [0.0, 0.0], coords });
    ps.delone = false;
    ps.provenance = format!("visible_points{{bound={bound}}}");
    Ok(ps)
}

/// `a_n = 1 + e + … + e^{n-1}`, by the telescoping sum.
pub fn euler_partial_sum(n: u32) -> f64 {
    (0..n).map(|k| (k as f64).exp()).sum()
}

/// `{±a_n : 1 ≤ n ≤ N}`; gaps grow like `e^n`, so the set is uniformly
/// discrete but not relatively dense.
pub fn euler_gap_set(n_max: u32) -> Result<PointSet> {
    if n_max == 0 {
        return Err(Error::Validation("N must be at least 1".into()));
    }
    let a: Vec<f64> = (1..=n_max).map(euler_partial_sum).collect();
    let mut xs: Vec<f64> = a.iter().map(|&x| -x).chain(a.iter().copied()).collect();
    xs.sort_by(f64::total_cmp);
    let top = a[a.len() - 1];
    let max_gap = xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let points = xs.iter().map(|&x| [x, 0.0]).collect();
    let mut ps = PointSet::new(1, points, 1.0, (0.5 * max_gap).max(1.0), Window::interval(-top, top));
    ps.delone = false;
    ps.provenance = format!("euler_gap_set{{N={n_max}}}");
    Ok(ps)
}

/// `n` independent uniform points in `window`, seeded. A control sample
/// with no long-range order; `r` is half the observed minimum gap.
pub fn uniform_random(n: usize, window: Window, seed: u64) -> Result<PointSet> {
    if n < 2 || window.is_empty() || window.volume() <= 0.0 {
        return Err(Error::Validation("need at least 2 points and a nondegenerate window".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vector> = (0..n)
        .map(|_| {
            let mut p = [0.0; 2];
            for a in 0..window.dim {
                p[a] = rng.gen_range(window.lo[a]..=window.hi[a]);
            }
            p
        })
        .collect();
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let gap = crate::delone::min_gap(window.dim, &points);
    let mut ps = PointSet::new(window.dim, points, 0.5 * gap, window.min_extent(), window);
    ps.delone = false;
    ps.seed = Some(seed);
    ps.provenance = format!("uniform_random{{n={n}}}");
    Ok(ps)
}
