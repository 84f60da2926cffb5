//! The hull metric, the orbit metric `d_D`, separated sets and the
//! comparison between separated-set growth and patch counts.
//!
//! For a scale `S` write `F(S)` for "there are `u, v ∈ B_S` with
//! `(-u+ξ₁) ∩ B_{1/S} = (-v+ξ₂) ∩ B_{1/S}`". `F` is monotone in `S`, so
//! `d(ξ₁, ξ₂) = min{1/√2, inf{S : F(S)}}` is found by bisection. Each
//! evaluation is decided exactly from finite data: any nonempty agreement
//! forces `t = v - u` to be a difference of two points, and for fixed `t`
//! the admissible `u` form the lens `B_S ∩ B_S(-t)` minus the closed balls
//! of radius `1/S` around the points where `ξ₁` and `ξ₂ - t` disagree.
//!
//! An evaluation answers `No` only when the visible data already rules out
//! every `(u, v)`, so lower brackets are certified. When the windows hide
//! part of the relevant region the answer is `Unknown`, which the bisection
//! treats like `Yes`; upper brackets are therefore optimistic near window
//! edges.

use std::f64::consts::FRAC_1_SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{build_index, SpatialIndex};
use crate::patchstat::PatchContext;
use crate::pointset::{add, dist, norm, sub, BallQuery, PointSet, Vector, Window, ORIGIN};

/// The metric is capped at `1/√2`.
pub const CAP: f64 = FRAC_1_SQRT_2;
pub const DEFAULT_RESOLUTION: f64 = 1e-3;
/// Grid nodes per axis in orbit-metric scans.
const GRID_CAP_1D: usize = 4096;
const GRID_CAP_2D: usize = 64;
const EQ_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBracket {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Yes,
    No,
    Unknown,
}

/// `ξ = crop(ps - shift, window)`, answered through the index of `ps`.
#[derive(Clone, Copy)]
struct View<'a> {
    ps: &'a PointSet,
    index: &'a SpatialIndex,
    shift: Vector,
    window: Window,
}

impl<'a> View<'a> {
    fn new(ps: &'a PointSet, index: &'a SpatialIndex) -> Self {
        View { ps, index, shift: ORIGIN, window: ps.window }
    }

    /// `α_x ξ = -x + ξ`.
    fn moved(&self, x: Vector) -> Self {
        let x = self.flat(x);
        View {
            ps: self.ps,
            index: self.index,
            shift: add(self.shift, x),
            window: self.window.shifted([-x[0], -x[1]]),
        }
    }

    fn flat(&self, mut v: Vector) -> Vector {
        if self.ps.dim == 1 {
            v[1] = 0.0;
        }
        v
    }

    fn covers(&self, z: Vector, radius: f64) -> bool {
        self.window.contains_ball(z, radius)
    }

    fn for_each_near(&self, z: Vector, radius: f64, mut f: impl FnMut(Vector, Option<u32>)) {
        let q = BallQuery { center: add(z, self.shift), radius };
        self.index.for_each_in_ball(&q, |j| {
            let p = self.flat(sub(self.ps.points[j], self.shift));
            if self.window.contains(p) {
                f(p, self.ps.color(j));
            }
        });
    }

    fn has_point(&self, z: Vector, color: Option<u32>) -> bool {
        let mut found = false;
        self.for_each_near(z, EQ_TOL, |_, c| found |= c == color);
        found
    }

    /// Distance from `z` to the nearest point and whether it is certain.
    fn nearest(&self, z: Vector) -> Option<(f64, bool)> {
        let (j, d) = self.index.nearest(add(z, self.shift))?;
        let p = self.flat(sub(self.ps.points[j], self.shift));
        Some((d, self.window.contains(p) && self.covers(z, d)))
    }
}

/// Whether some `u ∈ B_s(0) ∩ B_s(-t)` keeps distance at least `radius`
/// from every point of `deltas` (up to a relative slack of 1e-10 that only
/// ever favours feasibility).
pub fn region_feasible(dim: usize, s: f64, t: Vector, deltas: &[Vector], radius: f64) -> bool {
    let ks = 1e-10 * (1.0 + s);
    let rr = radius - 1e-10 * (1.0 + radius);
    if norm(t) > 2.0 * s + 2.0 * ks {
        return false;
    }
    if dim == 1 {
        let lo = (-s).max(-t[0] - s) - ks;
        let hi = s.min(s - t[0]) + ks;
        if lo > hi {
            return false;
        }
        let mut iv: Vec<(f64, f64)> = deltas.iter().map(|d| (d[0] - rr, d[0] + rr)).collect();
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cur = lo;
        for (a, b) in iv {
            if cur > hi {
                return false;
            }
            if a >= cur {
                return true;
            }
            cur = cur.max(b);
        }
        return cur <= hi;
    }

    let relevant: Vec<Vector> = deltas.iter().copied().filter(|d| norm(*d) <= s + rr + 2.0 * ks).collect();
    let mut circles: Vec<(Vector, f64)> = vec![(ORIGIN, s), ([-t[0], -t[1]], s)];
    circles.extend(relevant.iter().map(|&d| (d, rr)));
    let ok = |u: Vector| {
        norm(u) <= s + ks && dist(u, [-t[0], -t[1]]) <= s + ks && relevant.iter().all(|&d| dist(u, d) >= rr)
    };
    for &(c, r) in &circles {
        for u in [[c[0] + r, c[1]], [c[0] - r, c[1]], [c[0], c[1] + r], [c[0], c[1] - r], c] {
            if ok(u) {
                return true;
            }
        }
    }
    for i in 0..circles.len() {
        for j in i + 1..circles.len() {
            for u in circle_intersections(circles[i], circles[j]) {
                if ok(u) {
                    return true;
                }
            }
        }
    }
    false
}

fn circle_intersections((c1, r1): (Vector, f64), (c2, r2): (Vector, f64)) -> Vec<Vector> {
    let d = dist(c1, c2);
    if d == 0.0 || d > r1 + r2 || d < (r1 - r2).abs() {
        return Vec::new();
    }
    let a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let h = (r1 * r1 - a * a).max(0.0).sqrt();
    let e = [(c2[0] - c1[0]) / d, (c2[1] - c1[1]) / d];
    let m = [c1[0] + a * e[0], c1[1] + a * e[1]];
    vec![[m[0] - h * e[1], m[1] + h * e[0]], [m[0] + h * e[1], m[1] - h * e[0]]]
}

/// Decides `F(s)` for the pair as seen through the two views.
fn decide(a: &View, b: &View, s: f64) -> Decision {
    let dim = a.ps.dim;
    let inv = 1.0 / s;
    let rho = s + inv;
    let mut unknown = false;

    // both restrictions empty
    let mut pa = Vec::new();
    a.for_each_near(ORIGIN, rho + EQ_TOL, |p, _| pa.push(p));
    let mut pb = Vec::new();
    b.for_each_near(ORIGIN, rho + EQ_TOL, |p, _| pb.push(p));
    if region_feasible(dim, s, ORIGIN, &pa, inv) && region_feasible(dim, s, ORIGIN, &pb, inv) {
        if a.covers(ORIGIN, rho) && b.covers(ORIGIN, rho) {
            return Decision::Yes;
        }
        unknown = true;
    }

    // candidate offsets t = v - u from matched pairs
    let Some((d0, sure)) = a.nearest(ORIGIN) else {
        return if unknown || !a.covers(ORIGIN, rho) { Decision::Unknown } else { Decision::No };
    };
    let rx = 2.0 * s + d0;
    if !sure || !a.covers(ORIGIN, rx) || !b.covers(ORIGIN, rx + 2.0 * s) {
        unknown = true;
    }
    let mut ts: Vec<Vector> = Vec::new();
    a.for_each_near(ORIGIN, rx + EQ_TOL, |x, cx| {
        b.for_each_near(x, 2.0 * s + EQ_TOL, |y, cy| {
            if cx == cy {
                ts.push(sub(y, x));
            }
        });
    });
    let q = |v: f64| (v / EQ_TOL).round() as i64;
    ts.sort_by_key(|t| (q(norm(*t)), q(t[0]), q(t[1])));
    ts.dedup_by(|x, y| dist(*x, *y) <= EQ_TOL);

    for t in ts {
        match decide_offset(a, b, s, t) {
            Decision::Yes => return Decision::Yes,
            Decision::Unknown => unknown = true,
            Decision::No => {}
        }
    }
    if unknown {
        Decision::Unknown
    } else {
        Decision::No
    }
}

fn decide_offset(a: &View, b: &View, s: f64, t: Vector) -> Decision {
    let inv = 1.0 / s;
    let rho = s + inv;
    let mut complete = a.covers(ORIGIN, rho) && b.covers(t, rho);
    let reject = inv - s - 1e-10 * (1.0 + inv);
    let mut deltas: Vec<Vector> = Vec::new();
    let mut early_no = false;
    a.for_each_near(ORIGIN, rho + EQ_TOL, |p, c| {
        if !b.has_point(add(p, t), c) {
            if b.window.contains(add(p, t)) {
                early_no |= norm(p) < reject;
                deltas.push(p);
            } else {
                complete = false;
            }
        }
    });
    if early_no {
        return Decision::No;
    }
    b.for_each_near(t, rho + EQ_TOL, |qp, c| {
        let p = sub(qp, t);
        if !a.has_point(p, c) {
            if a.window.contains(p) {
                early_no |= norm(p) < reject;
                deltas.push(p);
            } else {
                complete = false;
            }
        }
    });
    if early_no || !region_feasible(a.ps.dim, s, t, &deltas, inv) {
        return Decision::No;
    }
    if complete {
        Decision::Yes
    } else {
        Decision::Unknown
    }
}

fn bisect(a: &View, b: &View, lo: f64, resolution: f64) -> MetricBracket {
    if decide(a, b, CAP) == Decision::No {
        return MetricBracket { lower: CAP, upper: CAP };
    }
    let (mut lo, mut hi) = (lo, CAP);
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if decide(a, b, mid) == Decision::No {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    MetricBracket { lower: lo, upper: hi }
}

/// Radius around the origin that a window must contain for the metric to
/// be decided at the cap.
pub fn metric_margin() -> f64 {
    3.0 * CAP + 2.0 * CAP
}

fn check_windows(xi1: &PointSet, xi2: &PointSet, center_radius: f64) -> Result<()> {
    if xi1.dim != xi2.dim {
        return Err(Error::Validation("point sets have different dimensions".into()));
    }
    for (k, w) in [(1, &xi1.window), (2, &xi2.window)] {
        if !w.contains_ball(ORIGIN, center_radius + metric_margin()) {
            return Err(Error::WindowTooSmallForMetric(format!(
                "window of ξ{k} must contain the ball of radius {:.3} about 0",
                center_radius + metric_margin()
            )));
        }
    }
    Ok(())
}

/// Bracket for `d(ξ₁, ξ₂)` of width at most `resolution`.
pub fn hull_metric(xi1: &PointSet, xi2: &PointSet, resolution: f64) -> Result<MetricBracket> {
    if !(resolution > 0.0) {
        return Err(Error::Validation("resolution must be positive".into()));
    }
    check_windows(xi1, xi2, 0.0)?;
    let (i1, i2) = (build_index(xi1), build_index(xi2));
    Ok(bisect(&View::new(xi1, &i1), &View::new(xi2, &i2), 0.0, resolution))
}

/// Shifts scanned for `sup_{x ∈ B_D}`: points of either set in `B_D`,
/// then a grid of the given step.
fn orbit_candidates(a: &View, b: &View, d: f64, step: f64) -> Vec<Vector> {
    let dim = a.ps.dim;
    let mut out = vec![ORIGIN];
    a.for_each_near(ORIGIN, d, |p, _| out.push(p));
    b.for_each_near(ORIGIN, d, |p, _| out.push(p));
    let cap = if dim == 1 { GRID_CAP_1D } else { GRID_CAP_2D };
    let step = step.max(2.0 * d / cap as f64);
    let n = (d / step).floor() as i64;
    if dim == 1 {
        out.extend((-n..=n).map(|k| [k as f64 * step, 0.0]));
    } else {
        for i in -n..=n {
            for j in -n..=n {
                let x = [i as f64 * step, j as f64 * step];
                if norm(x) <= d {
                    out.push(x);
                }
            }
        }
    }
    let mut seen = Vec::with_capacity(out.len());
    for x in out {
        if !seen.iter().any(|y: &Vector| dist(*y, x) <= EQ_TOL) {
            seen.push(x);
        }
    }
    seen
}

fn orbit_bracket(a: &View, b: &View, d: f64, resolution: f64, step: f64) -> MetricBracket {
    let mut best = 0.0f64;
    for x in orbit_candidates(a, b, d, step) {
        let (ax, bx) = (a.moved(x), b.moved(x));
        let probe = best + resolution;
        if probe >= CAP {
            if decide(&ax, &bx, CAP) == Decision::No {
                best = CAP;
                break;
            }
            continue;
        }
        if decide(&ax, &bx, probe) == Decision::No {
            best = bisect(&ax, &bx, probe, resolution).lower;
        }
    }
    MetricBracket { lower: best, upper: (best + resolution).min(CAP) }
}

/// True when some scanned shift certifies `d(α_x ξ₁, α_x ξ₂) ≥ threshold`.
fn orbit_at_least(a: &View, b: &View, d: f64, threshold: f64, step: f64) -> bool {
    let s = threshold.min(CAP);
    orbit_candidates(a, b, d, step).into_iter().any(|x| decide(&a.moved(x), &b.moved(x), s) == Decision::No)
}

/// Bracket for `d_D(ξ₁, ξ₂) = sup_{x ∈ B_D} d(α_x ξ₁, α_x ξ₂)`.
///
/// The supremum is taken over the points of either set in `B_D` and a
/// grid of step `resolution` (coarsened to at most 4096 nodes per axis in
/// 1-D and 64 in 2-D). The lower value is certified; the upper value is the
/// supremum over the scanned shifts.
pub fn orbit_metric(xi1: &PointSet, xi2: &PointSet, d: f64, resolution: f64) -> Result<MetricBracket> {
    if !(resolution > 0.0) || !(d >= 0.0) {
        return Err(Error::Validation("need D ≥ 0 and resolution > 0".into()));
    }
    check_windows(xi1, xi2, d)?;
    let (i1, i2) = (build_index(xi1), build_index(xi2));
    Ok(orbit_bracket(&View::new(xi1, &i1), &View::new(xi2, &i2), d, resolution, resolution))
}

pub fn epsilon0(r: f64, big_r: f64) -> f64 {
    CAP.min(r / 2.0).min(1.0 / (2.0 * big_r))
}

pub fn rho(d: f64, big_r: f64, eps: f64) -> f64 {
    d + big_r + eps + 1.0 / eps
}

/// Size of an explicit cover of `B_R` by balls of radius `ε/2`: intervals
/// of length `ε` in 1-D, squares of diagonal `ε` meeting the disc in 2-D.
pub fn cover_count(dim: usize, big_r: f64, eps: f64) -> usize {
    if dim == 1 {
        return ((2.0 * big_r / eps).ceil() as usize).max(1);
    }
    let h = eps / 2f64.sqrt();
    let n = (big_r / h).ceil() as i64;
    let mut count = 0;
    for i in -n..n {
        for j in -n..n {
            // nearest point of the cell [ih,(i+1)h]×[jh,(j+1)h] to the origin
            let cx = 0f64.clamp(i as f64 * h, (i + 1) as f64 * h);
            let cy = 0f64.clamp(j as f64 * h, (j + 1) as f64 * h);
            if cx.hypot(cy) <= big_r {
                count += 1;
            }
        }
    }
    count
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaGeometryReport {
    pub bound: f64,
    pub bracket: MetricBracket,
    pub d_lower_bound: f64,
    pub holds: bool,
}

/// Checks `d(ξ₁, ξ₂) ≥ min{1/√2, r/2, 1/S}` for two sets that contain the
/// origin and differ inside `B_S`.
pub fn check_lemma_geometry(xi1: &PointSet, xi2: &PointSet, s: f64, resolution: f64) -> Result<LemmaGeometryReport> {
    check_windows(xi1, xi2, 0.0)?;
    if !(s > 0.0) {
        return Err(Error::Validation("S must be positive".into()));
    }
    let (i1, i2) = (build_index(xi1), build_index(xi2));
    let (a, b) = (View::new(xi1, &i1), View::new(xi2, &i2));
    if !contains_origin(xi1) {
        return Err(Error::Precondition("0 ∉ ξ₁".into()));
    }
    if !contains_origin(xi2) {
        return Err(Error::Precondition("0 ∉ ξ₂".into()));
    }
    let mut differ = false;
    a.for_each_near(ORIGIN, s, |p, c| differ |= !b.has_point(p, c));
    b.for_each_near(ORIGIN, s, |p, c| differ |= !a.has_point(p, c));
    if !differ {
        return Err(Error::Precondition("ξ₁∩B_S ≠ ξ₂∩B_S fails".into()));
    }
    let r = xi1.r.min(xi2.r);
    let bound = CAP.min(r / 2.0).min(1.0 / s);
    let bracket = bisect(&a, &b, 0.0, resolution);
    Ok(LemmaGeometryReport { bound, bracket, d_lower_bound: bracket.lower, holds: bracket.lower >= bound - resolution })
}

fn contains_origin(ps: &PointSet) -> bool {
    ps.points.iter().any(|p| norm(*p) <= EQ_TOL)
}

/// Finite sample of the hull: translates `-a + ω` of a base sample, all
/// cropped to the largest box common to them.
#[derive(Debug, Clone)]
pub struct HullSample {
    pub base: PointSet,
    pub translation_vectors: Vec<Vector>,
    pub window: Window,
}

impl HullSample {
    pub fn new(base: PointSet, translation_vectors: Vec<Vector>) -> Result<Self> {
        if translation_vectors.is_empty() {
            return Err(Error::Validation("hull sample needs at least one translate".into()));
        }
        let a0 = translation_vectors[0];
        let mut window = base.window.shifted([-a0[0], -a0[1]]);
        for a in &translation_vectors[1..] {
            window = window.intersect(&base.window.shifted([-a[0], -a[1]]));
        }
        if window.is_empty() {
            return Err(Error::Validation("translates have no common window".into()));
        }
        Ok(HullSample { base, translation_vectors, window })
    }

    /// Translates by the `n_points` sample points nearest the window centre,
    /// each combined with every offset.
    pub fn central(base: &PointSet, n_points: usize, offsets: &[Vector]) -> Result<Self> {
        let mid = base.window.center();
        let mut order: Vec<usize> = (0..base.len()).collect();
        order.sort_by(|&i, &j| dist(base.points[i], mid).total_cmp(&dist(base.points[j], mid)).then(i.cmp(&j)));
        let mut vectors = Vec::new();
        for &i in order.iter().take(n_points) {
            for &o in offsets {
                vectors.push(add(base.points[i], o));
            }
        }
        HullSample::new(base.clone(), vectors)
    }

    pub fn len(&self) -> usize {
        self.translation_vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.translation_vectors.is_empty()
    }

    /// The `k`-th element as an explicit point set.
    pub fn element(&self, k: usize) -> PointSet {
        let a = self.translation_vectors[k];
        let moved = crate::translate(&self.base, a);
        let mut out = moved.filter_indices(|i| self.window.contains(moved.points[i]));
        out.window = self.window;
        out
    }

    fn view<'a>(&'a self, index: &'a SpatialIndex, k: usize) -> View<'a> {
        let a = self.translation_vectors[k];
        View { ps: &self.base, index, shift: if self.base.dim == 1 { [a[0], 0.0] } else { a }, window: self.window }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatedSet {
    pub indices: Vec<usize>,
    pub n_hat: usize,
}

/// Greedy `(D, ε)`-separated subset, scanning elements in order and keeping
/// one when its certified orbit distance to every kept element exceeds `ε`.
/// `N_hat` is a lower bound for `N(D, ε)`.
pub fn separated_set(hs: &HullSample, d: f64, eps: f64, step: f64) -> Result<SeparatedSet> {
    if !(eps > 0.0) {
        return Err(Error::Validation("ε must be positive".into()));
    }
    if !hs.window.contains_ball(ORIGIN, d + metric_margin()) {
        return Err(Error::WindowTooSmallForMetric(format!("hull window cannot hold B_{}", d + metric_margin())));
    }
    let index = build_index(&hs.base);
    let threshold = eps * (1.0 + 1e-9) + 1e-12;
    let mut kept: Vec<usize> = Vec::new();
    for k in 0..hs.len() {
        let vk = hs.view(&index, k);
        let separated = kept.par_iter().all(|&j| orbit_at_least(&vk, &hs.view(&index, j), d, threshold, step));
        if separated {
            kept.push(k);
        }
    }
    Ok(SeparatedSet { n_hat: kept.len(), indices: kept })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HtopRecord {
    #[serde(rename = "D")]
    pub d: f64,
    pub eps: f64,
    pub eps0: f64,
    #[serde(rename = "N_hat")]
    pub n_hat: usize,
    #[serde(rename = "patch_count_D")]
    pub patch_count_d: usize,
    #[serde(rename = "M_eps")]
    pub m_eps: usize,
    #[serde(rename = "rho_D")]
    pub rho_d: f64,
    #[serde(rename = "patch_count_rhoD")]
    pub patch_count_rho: usize,
    /// Smallest certified pairwise `d_D` among patch representatives.
    pub min_pairwise_lower: Option<f64>,
    pub separation_check: CheckStatus,
    pub covering_check: CheckStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// `ε ≥ ε₀`: the separation of patch representatives is not claimed.
    NotGuaranteed,
}

impl CheckStatus {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        }
    }
}

#[derive(Debug, Clone)]
pub struct HtopOptions {
    pub resolution: f64,
    /// Hull sample: central points and offsets.
    pub hull_points: usize,
    pub hull_offsets: Vec<Vector>,
    /// Grid step for orbit scans (point-aligned shifts are always tried).
    pub grid_step: Option<f64>,
}

impl HtopOptions {
    pub fn for_sample(ps: &PointSet, eps: f64) -> Self {
        let offsets = if ps.dim == 1 {
            (0..4).map(|k| [k as f64 * ps.big_r / 2.0, 0.0]).collect()
        } else {
            vec![ORIGIN, [ps.big_r / 2.0, 0.0], [0.0, ps.big_r / 2.0], [ps.big_r / 2.0, ps.big_r / 2.0]]
        };
        HtopOptions { resolution: DEFAULT_RESOLUTION, hull_points: 48, hull_offsets: offsets, grid_step: Some(eps / 2.0) }
    }
}

/// Both inequalities behind `H_ε = h_pc` at each `D`: patch representatives
/// are pairwise `(D, ε₀)`-separated, and a greedy separated set in the hull
/// sample is no larger than `M(ε) · card p(ρ(D))`.
pub fn check_htop_equals_hpc(ps: &PointSet, d_list: &[f64], eps: f64, opts: &HtopOptions) -> Result<Vec<HtopRecord>> {
    let eps0 = epsilon0(ps.r, ps.big_r);
    let step = opts.grid_step.unwrap_or(opts.resolution);
    let ctx = PatchContext::new(ps);
    let index = build_index(ps);
    let hs = HullSample::central(ps, opts.hull_points, &opts.hull_offsets)?;
    let m_eps = cover_count(ps.dim, ps.big_r, eps);
    let mid = ps.window.center();
    let mut out = Vec::new();
    for &d in d_list {
        let rho_d = rho(d, ps.big_r, eps);
        if ps.window.eroded(rho_d).is_empty() {
            return Err(Error::RadiusExceedsSample);
        }
        let table = ctx.table(d)?;
        let patch_count_rho = ctx.table(rho_d)?.len();

        let (min_lower, separation) = if eps < eps0 {
            let centers: Vec<usize> =
                (0..ps.len()).filter(|&i| ps.window.contains_ball(ps.points[i], d)).collect();
            let keys = ctx.keys(&centers, d);
            let mut reps: std::collections::BTreeMap<_, usize> = std::collections::BTreeMap::new();
            for (&c, k) in centers.iter().zip(&keys) {
                let e = reps.entry(*k).or_insert(c);
                if dist(ps.points[c], mid) < dist(ps.points[*e], mid) {
                    *e = c;
                }
            }
            let reps: Vec<usize> = reps.into_values().collect();
            let views: Vec<View> = reps.iter().map(|&c| View::new(ps, &index).moved(ps.points[c])).collect();
            for v in &views {
                if !v.covers(ORIGIN, d + metric_margin()) {
                    return Err(Error::WindowTooSmallForMetric(format!("representative too close to the edge at D={d}")));
                }
            }
            let pairs: Vec<(usize, usize)> =
                (0..views.len()).flat_map(|i| (i + 1..views.len()).map(move |j| (i, j))).collect();
            let min_lower = pairs
                .par_iter()
                .map(|&(i, j)| orbit_bracket(&views[i], &views[j], d, opts.resolution, step).lower)
                .reduce(|| CAP, f64::min);
            (Some(min_lower), CheckStatus::from_bool(min_lower >= eps0 - opts.resolution))
        } else {
            (None, CheckStatus::NotGuaranteed)
        };

        let sep = separated_set(&hs, d, eps, step)?;
        out.push(HtopRecord {
            d,
            eps,
            eps0,
            n_hat: sep.n_hat,
            patch_count_d: table.len(),
            m_eps,
            rho_d,
            patch_count_rho,
            min_pairwise_lower: min_lower,
            separation_check: separation,
            covering_check: CheckStatus::from_bool(sep.n_hat <= m_eps * patch_count_rho),
        });
    }
    Ok(out)
}

/// Rotation `x ↦ ξ + x·θ` on the `k`-torus with the invariant metric
/// `max_i ‖a_i - b_i‖` (circle distance per coordinate).
///
/// Torus points are stored in 64-bit fixed point, so translating two
/// points by the same amount leaves their difference bit-for-bit unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KroneckerSystem {
    pub rotation: Vec<f64>,
}

const TWO64: f64 = 18_446_744_073_709_551_616.0;

impl KroneckerSystem {
    /// `θ_i = √p_i mod 1` for the first `k` primes.
    pub fn sqrt_primes(k: usize) -> Self {
        let mut primes = Vec::new();
        let mut n = 2u64;
        while primes.len() < k {
            if (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0) {
                primes.push(n);
            }
            n += 1;
        }
        KroneckerSystem { rotation: primes.iter().map(|&p| (p as f64).sqrt().fract()).collect() }
    }

    pub fn dim(&self) -> usize {
        self.rotation.len()
    }

    fn to_fixed(v: f64) -> u64 {
        let f = v.rem_euclid(1.0);
        (f * TWO64) as u64
    }

    /// `i(x) = x·θ mod 1`.
    pub fn shift(&self, x: f64) -> Vec<u64> {
        self.rotation.iter().map(|&t| Self::to_fixed(x * t)).collect()
    }

    pub fn translate(&self, p: &[u64], by: &[u64]) -> Vec<u64> {
        p.iter().zip(by).map(|(a, b)| a.wrapping_add(*b)).collect()
    }

    pub fn dist(&self, a: &[u64], b: &[u64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let d = x.wrapping_sub(*y);
                d.min(d.wrapping_neg()) as f64 / TWO64
            })
            .fold(0.0, f64::max)
    }

    /// `sup_{|x| ≤ D} dist(a + i(x), b + i(x))` over a grid of 65 shifts.
    pub fn orbit_dist(&self, a: &[u64], b: &[u64], d: f64) -> f64 {
        (0..=64)
            .map(|k| {
                let s = self.shift(-d + 2.0 * d * k as f64 / 64.0);
                self.dist(&self.translate(a, &s), &self.translate(b, &s))
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KroneckerRecord {
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "N_hat")]
    pub n_hat: usize,
}

/// Greedy `(D, ε)`-separated set sizes among the orbit points
/// `i(0), i(1), …, i(n_points-1)` for each `D`.
pub fn kronecker_entropy_demo(sys: &KroneckerSystem, eps: f64, d_list: &[f64], n_points: usize) -> Vec<KroneckerRecord> {
    let orbit: Vec<Vec<u64>> = (0..n_points).map(|j| sys.shift(j as f64)).collect();
    d_list
        .iter()
        .map(|&d| {
            let mut kept: Vec<usize> = Vec::new();
            for k in 0..orbit.len() {
                if kept.iter().all(|&j| sys.orbit_dist(&orbit[k], &orbit[j], d) > eps) {
                    kept.push(k);
                }
            }
            KroneckerRecord { d, n_hat: kept.len() }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{lattice, model_set, CutProjectScheme};
    use crate::translate;

    const RES: f64 = 1e-3;

    fn z(lo: f64, hi: f64) -> PointSet {
        lattice(&[[1.0, 0.0]], Window::interval(lo, hi)).unwrap()
    }

    fn fib(len: f64) -> PointSet {
        model_set(&CutProjectScheme::fibonacci(), Window::interval(0.0, len)).unwrap()
    }

    #[test]
    fn identical_sets_are_close() {
        let a = z(-50.0, 50.0);
        let b = hull_metric(&a, &a, RES).unwrap();
        assert_eq!(b.lower, 0.0);
        assert!(b.upper <= RES);
    }

    #[test]
    fn small_translate() {
        let a = z(-50.0, 50.0);
        let b = translate(&z(-60.0, 60.0), [0.1, 0.0]);
        let m = hull_metric(&a, &b, RES).unwrap();
        assert!(m.upper <= 0.1 + RES, "{m:?}");
        assert!(m.lower <= 0.05 && m.upper >= 0.05, "{m:?}");
    }

    #[test]
    fn different_lattices_hit_the_cap() {
        let a = z(-50.0, 50.0);
        let b = lattice(&[[2.0, 0.0]], Window::interval(-50.0, 50.0)).unwrap();
        let m = hull_metric(&a, &b, RES).unwrap();
        assert!(m.lower >= CAP - RES, "{m:?}");
    }

    #[test]
    fn symmetric() {
        let a = fib(200.0);
        let b = translate(&a, a.points[40]);
        let c = translate(&a, a.points[41]);
        let (m1, m2) = (hull_metric(&b, &c, RES).unwrap(), hull_metric(&c, &b, RES).unwrap());
        assert!(m1.lower <= m2.upper && m2.lower <= m1.upper);
    }

    #[test]
    fn planar_translate() {
        let a = lattice(&[[1.0, 0.0], [0.0, 1.0]], Window::centered(2, 20.0)).unwrap();
        let b = translate(&lattice(&[[1.0, 0.0], [0.0, 1.0]], Window::centered(2, 25.0)).unwrap(), [0.1, 0.05]);
        let m = hull_metric(&a, &b, RES).unwrap();
        let half = 0.5 * 0.1f64.hypot(0.05);
        assert!(m.lower <= half + 1e-9 && m.upper >= half - 1e-9 && m.upper <= half + RES, "{m:?}");
    }

    #[test]
    fn small_window_rejected() {
        let a = z(-1.0, 1.0);
        assert!(matches!(hull_metric(&a, &a, RES), Err(Error::WindowTooSmallForMetric(_))));
    }

    #[test]
    fn lemma_geometry_example() {
        let mut a = z(-50.0, 50.0);
        a.r = 0.4;
        let mut b = a.clone();
        let k = b.points.iter().position(|p| p[0] == 2.0).unwrap();
        b.points[k][0] = 2.1;
        b.module = None;
        let rep = check_lemma_geometry(&a, &b, 2.0, RES).unwrap();
        assert!((rep.bound - 0.2).abs() < 1e-12);
        assert!(rep.holds, "{rep:?}");
        assert!(matches!(check_lemma_geometry(&a, &a, 2.0, RES), Err(Error::Precondition(_))));
    }

    #[test]
    fn orbit_metric_grows_with_d() {
        let a = fib(300.0);
        let b = translate(&a, a.points[100]);
        let c = translate(&a, a.points[103]);
        let d0 = orbit_metric(&b, &c, 0.0, RES).unwrap();
        let h = hull_metric(&b, &c, RES).unwrap();
        assert!(d0.lower <= h.upper && h.lower <= d0.upper);
        let mut last = 0.0;
        for d in [0.0, 2.0, 5.0, 10.0] {
            let m = orbit_metric(&b, &c, d, RES).unwrap();
            assert!(m.lower >= last - 1e-12);
            last = m.lower;
        }
    }

    #[test]
    fn region_feasibility() {
        assert!(region_feasible(1, 0.5, ORIGIN, &[], 2.0));
        assert!(!region_feasible(1, 0.5, [1.5, 0.0], &[], 2.0));
        assert!(!region_feasible(1, 0.5, ORIGIN, &[[0.0, 0.0]], 2.0));
        assert!(region_feasible(1, 0.5, ORIGIN, &[[2.4, 0.0]], 2.0));
        assert!(!region_feasible(2, 0.5, ORIGIN, &[[0.0, 0.0]], 2.0));
        assert!(region_feasible(2, 0.5, ORIGIN, &[[2.4, 0.0]], 2.0));
        assert!(!region_feasible(2, 0.5, ORIGIN, &[[1.9, 0.0], [-1.9, 0.0], [0.0, 1.9], [0.0, -1.9]], 2.0));
    }

    #[test]
    fn constants() {
        assert!((epsilon0(1.0, 0.5) - 0.5).abs() < 1e-15);
        assert!((epsilon0(2.0, 0.5) - CAP).abs() < 1e-15);
        assert!((rho(4.0, 1.0, 0.5) - 7.5).abs() < 1e-15);
        assert_eq!(cover_count(1, 1.0, 0.25), 8);
        assert!(cover_count(2, 1.0, 0.25) >= 13);
    }

    #[test]
    fn separated_sets() {
        let a = z(-100.0, 100.0);
        let one = HullSample::new(a.clone(), vec![ORIGIN]).unwrap();
        assert_eq!(separated_set(&one, 5.0, 0.2, 0.1).unwrap().n_hat, 1);
        let offs: Vec<Vector> = (0..10).map(|k| [k as f64 * 0.1, 0.0]).collect();
        let hs = HullSample::new(a, offs).unwrap();
        let counts: Vec<usize> = [1.0, 4.0, 8.0].iter().map(|&d| separated_set(&hs, d, 0.2, 0.1).unwrap().n_hat).collect();
        assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
        assert_eq!(hs.element(3).window, hs.window);
    }

    #[test]
    fn fibonacci_separation_exceeds_patch_count() {
        let ps = fib(600.0);
        let hs = HullSample::central(&ps, 48, &[ORIGIN]).unwrap();
        let n = separated_set(&hs, 10.0, 0.2, 0.1).unwrap().n_hat;
        let p = crate::patchstat::patch_count(&ps, 10.0).unwrap();
        assert!(n >= p, "{n} < {p}");
    }

    #[test]
    fn kronecker_is_isometric() {
        let sys = KroneckerSystem { rotation: vec![2f64.sqrt().fract()] };
        let (a, b) = (sys.shift(3.0), sys.shift(17.0));
        let base = sys.dist(&a, &b);
        for x in [0.3, 1.7, -5.2, 1e6] {
            let s = sys.shift(x);
            assert_eq!(sys.dist(&sys.translate(&a, &s), &sys.translate(&b, &s)), base);
        }
        let recs = kronecker_entropy_demo(&sys, 0.1, &[1.0, 10.0, 100.0], 200);
        assert!(recs.iter().all(|r| r.n_hat == recs[0].n_hat));
        // packing bound for strictly 0.1-separated points on a unit circle
        assert!(recs[0].n_hat <= 9);
        assert_eq!(kronecker_entropy_demo(&sys, 0.5, &[1.0], 50)[0].n_hat, 1);
        assert_eq!(KroneckerSystem::sqrt_primes(3).dim(), 3);
    }
}
