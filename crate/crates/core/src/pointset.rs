//! Finite samples of point sets in one or two dimensions.
//!
//! A [`PointSet`] is complete inside its [`Window`]: every point of the
//! underlying infinite set that lies in the window is present. All 1-D data
//! is stored in the first coordinate of a [`Vector`], with the second fixed
//! at zero, so distances and norms need no special casing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vector = [f64; 2];

pub const ORIGIN: Vector = [0.0, 0.0];

#[inline]
pub fn add(a: Vector, b: Vector) -> Vector {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Vector, b: Vector) -> Vector {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(a: Vector, s: f64) -> Vector {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot(a: Vector, b: Vector) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Vector) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: Vector, b: Vector) -> f64 {
    norm(sub(a, b))
}

/// Volume of the closed ball of radius `s` in dimension `dim`.
pub fn ball_volume(dim: usize, s: f64) -> f64 {
    match dim {
        1 => 2.0 * s,
        _ => std::f64::consts::PI * s * s,
    }
}

/// Axis-aligned box with closed per-axis intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub dim: usize,
    pub lo: Vector,
    pub hi: Vector,
}

impl Window {
    pub fn interval(a: f64, b: f64) -> Self {
        Window { dim: 1, lo: [a, 0.0], hi: [b, 0.0] }
    }

    pub fn rect(x: (f64, f64), y: (f64, f64)) -> Self {
        Window { dim: 2, lo: [x.0, y.0], hi: [x.1, y.1] }
    }

    /// Centred cube `[-h, h]^dim`.
    pub fn centered(dim: usize, h: f64) -> Self {
        if dim == 1 {
            Self::interval(-h, h)
        } else {
            Self::rect((-h, h), (-h, h))
        }
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn min_extent(&self) -> f64 {
        (0..self.dim).map(|a| self.extent(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.extent(a)).product()
    }

    pub fn center(&self) -> Vector {
        let mut c = ORIGIN;
        for a in 0..self.dim {
            c[a] = 0.5 * (self.lo[a] + self.hi[a]);
        }
        c
    }

    pub fn is_empty(&self) -> bool {
        (0..self.dim).any(|a| self.hi[a] < self.lo[a])
    }

    pub fn contains(&self, p: Vector) -> bool {
        (0..self.dim).all(|a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }

    /// Contains `p` up to a small absolute slack on each face.
    pub fn contains_tol(&self, p: Vector, tol: f64) -> bool {
        (0..self.dim).all(|a| p[a] >= self.lo[a] - tol && p[a] <= self.hi[a] + tol)
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        (0..self.dim).all(|a| other.lo[a] >= self.lo[a] && other.hi[a] <= self.hi[a])
    }

    /// True when the closed ball `B_s(c)` lies inside the box.
    pub fn contains_ball(&self, c: Vector, s: f64) -> bool {
        (0..self.dim).all(|a| c[a] - s >= self.lo[a] && c[a] + s <= self.hi[a])
    }

    /// Shrinks every face inwards by `s`; may produce an empty box.
    pub fn eroded(&self, s: f64) -> Window {
        let mut w = *self;
        for a in 0..self.dim {
            w.lo[a] += s;
            w.hi[a] -= s;
        }
        w
    }

    pub fn intersect(&self, other: &Window) -> Window {
        let mut w = *self;
        for a in 0..self.dim {
            w.lo[a] = self.lo[a].max(other.lo[a]);
            w.hi[a] = self.hi[a].min(other.hi[a]);
        }
        w
    }

    pub fn shifted(&self, by: Vector) -> Window {
        Window { dim: self.dim, lo: add(self.lo, by), hi: add(self.hi, by) }
    }
}

/// Exact coordinates of every point in a finitely generated module:
/// `point = origin + Σ coords[j] · basis[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleCoords {
    pub basis: Vec<Vector>,
    pub origin: Vector,
    pub coords: Vec<Vec<i64>>,
}

impl ModuleCoords {
    pub fn embed(&self, c: &[i64]) -> Vector {
        let mut p = self.origin;
        for (b, &k) in self.basis.iter().zip(c) {
            p[0] += k as f64 * b[0];
            p[1] += k as f64 * b[1];
        }
        p
    }
}

/// Closed ball query `B_radius(center)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallQuery {
    pub center: Vector,
    pub radius: f64,
}

impl BallQuery {
    pub fn new(center: Vector, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::Validation(format!("ball radius must be ≥ 0, got {radius}")));
        }
        Ok(BallQuery { center, radius })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub dim: usize,
    pub points: Vec<Vector>,
    pub module: Option<ModuleCoords>,
    pub weights: Option<Vec<Complex64>>,
    /// Indices into `alphabet`.
    pub colors: Option<Vec<u32>>,
    pub alphabet: Vec<String>,
    /// Packing radius `r`.
    pub r: f64,
    /// Covering radius `R` (declared; see `delone`).
    pub big_r: f64,
    pub window: Window,
    /// Whether the generator claims the underlying set is Delone.
    pub delone: bool,
    pub provenance: String,
    pub seed: Option<u64>,
}

impl PointSet {
    /// Bare point set with no weights, colours or module coordinates.
    pub fn new(dim: usize, points: Vec<Vector>, r: f64, big_r: f64, window: Window) -> Self {
        PointSet {
            dim,
            points,
            module: None,
            weights: None,
            colors: None,
            alphabet: Vec::new(),
            r,
            big_r,
            window,
            delone: true,
            provenance: String::new(),
            seed: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight(&self, i: usize) -> Complex64 {
        self.weights.as_ref().map_or(Complex64::new(1.0, 0.0), |w| w[i])
    }

    pub fn color(&self, i: usize) -> Option<u32> {
        self.colors.as_ref().map(|c| c[i])
    }

    /// Checks the structural invariants; the packing-radius invariant is
    /// checked separately by [`crate::delone::verify_delone`].
    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::Validation(format!("dimension {} not supported", self.dim)));
        }
        if self.window.dim != self.dim {
            return Err(Error::Validation("window dimension mismatch".into()));
        }
        if !(self.r > 0.0) || !(self.big_r > 0.0) || self.r > self.big_r {
            return Err(Error::Validation(format!(
                "need 0 < r ≤ R, got r={} R={}",
                self.r, self.big_r
            )));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::Validation(format!("point {i} is not finite")));
            }
            if self.dim == 1 && p[1] != 0.0 {
                return Err(Error::Validation(format!("point {i} has a second coordinate")));
            }
            if !self.window.contains_tol(*p, 1e-9) {
                return Err(Error::Validation(format!("point {i} lies outside the window")));
            }
        }
        let n = self.points.len();
        if self.weights.as_ref().is_some_and(|w| w.len() != n) {
            return Err(Error::Validation("weights length mismatch".into()));
        }
        if let Some(c) = &self.colors {
            if c.len() != n {
                return Err(Error::Validation("colors length mismatch".into()));
            }
            if c.iter().any(|&k| k as usize >= self.alphabet.len()) {
                return Err(Error::Validation("color index outside alphabet".into()));
            }
        }
        if let Some(m) = &self.module {
            if m.coords.len() != n {
                return Err(Error::Validation("module coordinate length mismatch".into()));
            }
            for (i, (p, c)) in self.points.iter().zip(&m.coords).enumerate() {
                if c.len() != m.basis.len() {
                    return Err(Error::Validation(format!("module row {i} has wrong rank")));
                }
                let q = m.embed(c);
                let tol = 1e-12 * (1.0 + norm(*p));
                if dist(*p, q) > tol.max(1e-12) * 8.0 {
                    return Err(Error::Validation(format!(
                        "point {i} disagrees with its module coordinates"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Keeps the points for which `keep` returns true, carrying every
    /// per-point attribute along.
    pub fn filter_indices(&self, keep: impl Fn(usize) -> bool) -> PointSet {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        self.select(&idx)
    }

    pub fn select(&self, idx: &[usize]) -> PointSet {
        let mut out = self.clone();
        out.points = idx.iter().map(|&i| self.points[i]).collect();
        out.weights = self.weights.as_ref().map(|w| idx.iter().map(|&i| w[i]).collect());
        out.colors = self.colors.as_ref().map(|c| idx.iter().map(|&i| c[i]).collect());
        if let Some(m) = &self.module {
            out.module = Some(ModuleCoords {
                basis: m.basis.clone(),
                origin: m.origin,
                coords: idx.iter().map(|&i| m.coords[i].clone()).collect(),
            });
        }
        out
    }
}

/// Restricts a sample to a sub-box; the result is complete in `bx`.
pub fn crop(ps: &PointSet, bx: Window) -> Result<PointSet> {
    if bx.dim != ps.dim {
        return Err(Error::Validation("crop box dimension mismatch".into()));
    }
    if bx.is_empty() || !ps.window.contains_window(&bx) {
        return Err(Error::CropOutsideWindow);
    }
    let mut out = ps.filter_indices(|i| bx.contains(ps.points[i]));
    out.window = bx;
    let mut desc = String::from("crop[");
    for a in 0..bx.dim {
        if a > 0 {
            desc.push(';');
        }
        desc.push_str(&format!("{},{}", bx.lo[a], bx.hi[a]));
    }
    desc.push(']');
    out.provenance = if ps.provenance.is_empty() { desc } else { format!("{}|{desc}", ps.provenance) };
    Ok(out)
}

/// The translation action `x ↦ -x + ω`.
pub fn translate(ps: &PointSet, x: Vector) -> PointSet {
    let neg = [-x[0], -x[1]];
    let mut out = ps.clone();
    for p in &mut out.points {
        *p = add(*p, neg);
    }
    if ps.dim == 1 {
        for p in &mut out.points {
            p[1] = 0.0;
        }
    }
    out.window = ps.window.shifted(if ps.dim == 1 { [neg[0], 0.0] } else { neg });
    if let Some(m) = &mut out.module {
        m.origin = add(m.origin, if ps.dim == 1 { [neg[0], 0.0] } else { neg });
    }
    out
}
