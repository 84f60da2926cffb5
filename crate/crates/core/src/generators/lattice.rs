use crate::error::{Error, Result};
use crate::pointset::{dot, norm, sub, ModuleCoords, PointSet, Vector, Window};

/// All points of the lattice spanned by `basis` inside `window`.
///
/// For `dim == 1` only `basis[0][0]` is used. Packing and covering radii
/// are derived from the reduced basis: `r` is half the shortest vector and
/// `R` the circumradius of the (non-obtuse) reduced fundamental triangle.
pub fn lattice(basis: &[Vector], window: Window) -> Result<PointSet> {
    let dim = window.dim;
    if basis.len() != dim {
        return Err(Error::Validation(format!("need {dim} basis vectors, got {}", basis.len())));
    }
    let mut points = Vec::new();
    let mut coords = Vec::new();
    let (r, big_r);
    if dim == 1 {
        let b = basis[0][0];
        if b.abs() < 1e-12 {
            return Err(Error::SingularBasis);
        }
        let (lo, hi) = (window.lo[0] / b, window.hi[0] / b);
        let (k0, k1) = (lo.min(hi).floor() as i64 - 1, lo.max(hi).ceil() as i64 + 1);
        for k in k0..=k1 {
            let p = [k as f64 * b, 0.0];
            if window.contains(p) {
                points.push(p);
                coords.push(vec![k]);
            }
        }
        r = 0.5 * b.abs();
        big_r = r;
    } else {
        let (u, v) = (basis[0], basis[1]);
        let det = u[0] * v[1] - u[1] * v[0];
        if det.abs() < 1e-12 * (1.0 + norm(u) * norm(v)) {
            return Err(Error::SingularBasis);
        }
        // coefficient ranges from the window corners
        let inv = |p: Vector| [(p[0] * v[1] - p[1] * v[0]) / det, (u[0] * p[1] - u[1] * p[0]) / det];
        let corners = [
            [window.lo[0], window.lo[1]],
            [window.lo[0], window.hi[1]],
            [window.hi[0], window.lo[1]],
            [window.hi[0], window.hi[1]],
        ];
        let (mut cmin, mut cmax) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for c in corners.iter().map(|&p| inv(p)) {
            for a in 0..2 {
                cmin[a] = cmin[a].min(c[a]);
                cmax[a] = cmax[a].max(c[a]);
            }
        }
        for j in (cmin[1].floor() as i64 - 1)..=(cmax[1].ceil() as i64 + 1) {
            for i in (cmin[0].floor() as i64 - 1)..=(cmax[0].ceil() as i64 + 1) {
                let p = [i as f64 * u[0] + j as f64 * v[0], i as f64 * u[1] + j as f64 * v[1]];
                if window.contains(p) {
                    points.push(p);
                    coords.push(vec![i, j]);
                }
            }
        }
        let (a, b) = gauss_reduce(u, v);
        r = 0.5 * norm(a);
        big_r = norm(a) * norm(b) * norm(sub(a, b)) / (2.0 * det.abs());
    }
    let mut ps = PointSet::new(dim, points, r, big_r, window);
    ps.module = Some(ModuleCoords { basis: basis.to_vec(), origin: [0.0, 0.0], coords });
    ps.provenance = format!("lattice{{basis={basis:?}}}");
    Ok(ps)
}

/// Lagrange–Gauss reduction, returning `(a, b)` with `|a| ≤ |b|` and
/// `0 ≤ a·b ≤ |a|²/2`.
pub fn gauss_reduce(mut a: Vector, mut b: Vector) -> (Vector, Vector) {
    loop {
        if dot(a, a) > dot(b, b) {
            std::mem::swap(&mut a, &mut b);
        }
        let ratio = dot(a, b) / dot(a, a);
        if ratio.abs() <= 0.5 + 1e-12 {
            break;
        }
        let mu = ratio.round();
        b = [b[0] - mu * a[0], b[1] - mu * a[1]];
    }
    if dot(a, b) < 0.0 {
        b = [-b[0], -b[1]];
    }
    (a, b)
}
