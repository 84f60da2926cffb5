//! Patch extraction and the statistics built on it: patch counts and their
//! entropy, cluster frequencies over anchor boxes, and the repetitivity
//! function.
//!
//! Only complete patches are counted: a point `x` is a centre when the
//! closed ball `B_D(x)` lies inside the sample window. Patches are compared
//! through a canonical key built from the sorted relative positions (exact
//! module coordinates when available, otherwise positions quantised to a
//! 1e-9 grid) together with the colours, then hashed with SHA-256.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::index::{build_index, SpatialIndex};
use crate::pointset::{ball_volume, dist, sub, BallQuery, PointSet, Vector, Window};

pub type PatchKey = [u8; 32];

/// Grid for comparing positions that carry no module coordinates.
pub const QUANTUM: f64 = 1e-9;
/// Anchors tested by [`repetitivity_estimate`] unless told otherwise.
pub const DEFAULT_ANCHORS: usize = 32;

pub fn key_hex(k: &PatchKey) -> String {
    k.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub radius: f64,
    /// Relative positions, including the origin, in canonical order.
    pub points: Vec<Vector>,
    pub colors: Option<Vec<u32>>,
    pub weights: Option<Vec<Complex64>>,
    pub key: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchEntry {
    pub count: usize,
    /// Index of the lexicographically smallest centre carrying the patch.
    pub first_center: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchTable {
    pub radius: f64,
    pub entries: BTreeMap<PatchKey, PatchEntry>,
    pub n_centers: usize,
}

fn ball_tol(d: f64) -> f64 {
    1e-9 * (1.0 + d)
}

fn lex_less(a: Vector, b: Vector) -> bool {
    a[0] < b[0] || (a[0] == b[0] && a[1] < b[1])
}

/// Indices of the points whose `D`-ball lies inside `region`.
pub fn admissible_centers(ps: &PointSet, d: f64, region: &Window) -> Vec<usize> {
    (0..ps.len()).filter(|&i| region.contains_ball(ps.points[i], d)).collect()
}

/// Precomputed neighbourhood data shared by the patch routines.
pub struct PatchContext<'a> {
    ps: &'a PointSet,
    index: SpatialIndex,
}

impl<'a> PatchContext<'a> {
    pub fn new(ps: &'a PointSet) -> Self {
        PatchContext { ps, index: build_index(ps) }
    }

    pub fn point_set(&self) -> &PointSet {
        self.ps
    }

    /// Neighbours of centre `i` in `B_D` as rows of `stride` integers
    /// (relative coordinates, then colour), sorted canonically, plus the
    /// point index of each row.
    fn neighbourhood(&self, i: usize, d: f64) -> (Vec<i64>, Vec<usize>, usize) {
        let ps = self.ps;
        let c = ps.points[i];
        let q = BallQuery { center: c, radius: d + ball_tol(d) };
        let rank = ps.module.as_ref().map_or(ps.dim, |m| m.basis.len());
        let stride = rank + 1;
        let mut flat: Vec<i64> = Vec::with_capacity(stride * 32);
        let mut who: Vec<usize> = Vec::with_capacity(32);
        self.index.for_each_in_ball(&q, |j| {
            match &ps.module {
                Some(m) => flat.extend(m.coords[j].iter().zip(&m.coords[i]).map(|(a, b)| a - b)),
                None => {
                    let v = sub(ps.points[j], c);
                    flat.extend((0..ps.dim).map(|a| (v[a] / QUANTUM).round() as i64));
                }
            }
            flat.push(ps.color(j).map_or(-1, i64::from));
            who.push(j);
        });
        let mut order: Vec<usize> = (0..who.len()).collect();
        if stride <= 4 {
            let row = |k: usize| {
                let mut r = [0i64; 4];
                r[..stride].copy_from_slice(&flat[k * stride..(k + 1) * stride]);
                r
            };
            let mut rows: Vec<([i64; 4], usize)> = order.iter().map(|&k| (row(k), k)).collect();
            rows.sort_unstable();
            order = rows.into_iter().map(|t| t.1).collect();
        } else {
            order.sort_unstable_by(|&a, &b| {
                flat[a * stride..(a + 1) * stride].cmp(&flat[b * stride..(b + 1) * stride])
            });
        }
        let mut sorted = Vec::with_capacity(flat.len());
        for &k in &order {
            sorted.extend_from_slice(&flat[k * stride..(k + 1) * stride]);
        }
        (sorted, order.iter().map(|&k| who[k]).collect(), stride)
    }

    pub fn key(&self, i: usize, d: f64) -> PatchKey {
        let (flat, _, _) = self.neighbourhood(i, d);
        let mut buf = Vec::with_capacity(flat.len() * 2);
        for v in flat {
            push_varint(&mut buf, ((v << 1) ^ (v >> 63)) as u64);
        }
        Sha256::digest(&buf).into()
    }

    pub fn keys(&self, centers: &[usize], d: f64) -> Vec<PatchKey> {
        centers.par_iter().map(|&i| self.key(i, d)).collect()
    }

    pub fn patch(&self, i: usize, d: f64) -> Patch {
        let ps = self.ps;
        let (_, idx, _) = self.neighbourhood(i, d);
        Patch {
            radius: d,
            points: idx
                .iter()
                .map(|&j| {
                    let mut v = sub(ps.points[j], ps.points[i]);
                    if ps.dim == 1 {
                        v[1] = 0.0;
                    }
                    v
                })
                .collect(),
            colors: ps.colors.as_ref().map(|c| idx.iter().map(|&j| c[j]).collect()),
            weights: ps.weights.as_ref().map(|w| idx.iter().map(|&j| w[j]).collect()),
            key: key_hex(&self.key(i, d)),
        }
    }

    pub fn table(&self, d: f64) -> Result<PatchTable> {
        let centers = self.centers(d)?;
        let keys = self.keys(&centers, d);
        Ok(self.table_from_keys(d, &centers, &keys))
    }

    fn centers(&self, d: f64) -> Result<Vec<usize>> {
        if !(d > 0.0) {
            return Err(Error::Validation(format!("patch radius must be positive, got {d}")));
        }
        let eroded = self.ps.window.eroded(d);
        if eroded.is_empty() {
            return Err(Error::RadiusExceedsSample);
        }
        Ok(admissible_centers(self.ps, d, &self.ps.window))
    }

    fn table_from_keys(&self, d: f64, centers: &[usize], keys: &[PatchKey]) -> PatchTable {
        let pts = &self.ps.points;
        let merged = centers
            .par_iter()
            .zip(keys.par_iter())
            .fold(HashMap::<PatchKey, PatchEntry>::new, |mut m, (&i, k)| {
                let e = m.entry(*k).or_insert(PatchEntry { count: 0, first_center: i });
                e.count += 1;
                if lex_less(pts[i], pts[e.first_center]) {
                    e.first_center = i;
                }
                m
            })
            .reduce(HashMap::new, |mut a, b| {
                for (k, v) in b {
                    a.entry(k)
                        .and_modify(|e| {
                            e.count += v.count;
                            if lex_less(pts[v.first_center], pts[e.first_center]) {
                                e.first_center = v.first_center;
                            }
                        })
                        .or_insert(v);
                }
                a
            });
        PatchTable { radius: d, entries: merged.into_iter().collect(), n_centers: centers.len() }
    }
}

fn push_varint(buf: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        buf.push((v as u8) | 0x80);
        v >>= 7;
    }
    buf.push(v as u8);
}

impl PatchTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `{D, n_centers, patches: [{key, count, points}]}`.
    pub fn to_json(&self, ps: &PointSet) -> serde_json::Value {
        let ctx = PatchContext::new(ps);
        let patches: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|(k, e)| {
                let p = ctx.patch(e.first_center, self.radius);
                let pts: Vec<Vec<f64>> = p.points.iter().map(|v| v[..ps.dim].to_vec()).collect();
                let mut obj = serde_json::json!({ "key": key_hex(k), "count": e.count, "points": pts });
                if let Some(c) = p.colors {
                    obj["colors"] = c.iter().map(|&i| ps.alphabet[i as usize].clone()).collect();
                }
                obj
            })
            .collect();
        serde_json::json!({ "D": self.radius, "n_centers": self.n_centers, "patches": patches })
    }
}

pub fn extract_patches(ps: &PointSet, d: f64) -> Result<PatchTable> {
    PatchContext::new(ps).table(d)
}

pub fn patch_count(ps: &PointSet, d: f64) -> Result<usize> {
    Ok(extract_patches(ps, d)?.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub radius: f64,
    pub count: usize,
    /// `log(count) / |B_radius|`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCurve {
    pub points: Vec<EntropyPoint>,
    /// Maximum over the last third of the radii.
    pub limsup_proxy: f64,
}

/// `log(card p(n)) / |B_n|` along `radii`, with the maximum over the last
/// third of the curve standing in for the limsup.
pub fn entropy_estimate(ps: &PointSet, radii: &[f64]) -> Result<EntropyCurve> {
    if radii.len() < 3 {
        return Err(Error::Validation("need at least 3 radii".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("radii must be strictly increasing".into()));
    }
    let ctx = PatchContext::new(ps);
    let mut points = Vec::with_capacity(radii.len());
    for &n in radii {
        let count = ctx.table(n)?.len();
        let value = if count == 0 { 0.0 } else { (count as f64).ln() / ball_volume(ps.dim, n) };
        points.push(EntropyPoint { radius: n, count, value });
    }
    let tail = radii.len().div_ceil(3);
    let limsup_proxy = points[points.len() - tail..].iter().map(|p| p.value).fold(0.0, f64::max);
    Ok(EntropyCurve { points, limsup_proxy })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorFrequencies {
    pub window: Window,
    pub n_centers: usize,
    /// Relative frequency per patch key (hex).
    pub frequencies: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub radius: f64,
    pub anchors: Vec<AnchorFrequencies>,
    /// Largest pairwise total-variation distance `½ Σ |f_a - f_b|`.
    pub max_total_variation: f64,
}

/// Relative patch frequencies over each anchor box. A centre belongs to an
/// anchor when its `D`-ball lies inside both the anchor and the window.
pub fn patch_frequencies(ps: &PointSet, d: f64, anchors: &[Window]) -> Result<FrequencyReport> {
    if !(d > 0.0) {
        return Err(Error::Validation(format!("patch radius must be positive, got {d}")));
    }
    let ctx = PatchContext::new(ps);
    let mut maps: Vec<BTreeMap<PatchKey, f64>> = Vec::with_capacity(anchors.len());
    let mut out = Vec::with_capacity(anchors.len());
    for (a, w) in anchors.iter().enumerate() {
        if w.dim != ps.dim {
            return Err(Error::Validation(format!("anchor {a} has the wrong dimension")));
        }
        let region = w.intersect(&ps.window);
        let centers = admissible_centers(ps, d, &region);
        if centers.is_empty() {
            return Err(Error::Precondition(format!("anchor {a} has no admissible centres at D={d}")));
        }
        let mut m: BTreeMap<PatchKey, f64> = BTreeMap::new();
        for k in ctx.keys(&centers, d) {
            *m.entry(k).or_default() += 1.0;
        }
        for v in m.values_mut() {
            *v /= centers.len() as f64;
        }
        out.push(AnchorFrequencies {
            window: *w,
            n_centers: centers.len(),
            frequencies: m.iter().map(|(k, v)| (key_hex(k), *v)).collect(),
        });
        maps.push(m);
    }
    let mut tv: f64 = 0.0;
    for i in 0..maps.len() {
        for j in i + 1..maps.len() {
            tv = tv.max(total_variation(&maps[i], &maps[j]));
        }
    }
    Ok(FrequencyReport { radius: d, anchors: out, max_total_variation: tv })
}

fn total_variation(a: &BTreeMap<PatchKey, f64>, b: &BTreeMap<PatchKey, f64>) -> f64 {
    let mut s = 0.0;
    for (k, &x) in a {
        s += (x - b.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &y) in b {
        if !a.contains_key(k) {
            s += y;
        }
    }
    0.5 * s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepetitivityStatus {
    ExactInWindow,
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitivityEstimate {
    pub radius: f64,
    pub f_hat: f64,
    pub anchors_tested: usize,
    pub status: RepetitivityStatus,
}

/// Smallest `F` such that every `D`-patch of the sample occurs at a centre
/// within distance `F` of each tested anchor (and at least 1).
///
/// Anchors are the admissible centres closest to the window centre. The
/// status is `LowerBound` when some search ball reaches past the region in
/// which centres can be observed.
pub fn repetitivity_estimate(ps: &PointSet, d: f64, n_anchors: usize) -> Result<RepetitivityEstimate> {
    if d < 1.0 {
        return Err(Error::Validation(format!("repetitivity needs D ≥ 1, got {d}")));
    }
    let ctx = PatchContext::new(ps);
    let centers = ctx.centers(d)?;
    let keys = ctx.keys(&centers, d);
    let mut ids: HashMap<PatchKey, u32> = HashMap::new();
    let key_ids: Vec<u32> = keys
        .iter()
        .map(|k| {
            let next = ids.len() as u32;
            *ids.entry(*k).or_insert(next)
        })
        .collect();
    let n_keys = ids.len();

    let mid = ps.window.center();
    let mut order: Vec<usize> = (0..centers.len()).collect();
    order.sort_by(|&a, &b| {
        dist(ps.points[centers[a]], mid).total_cmp(&dist(ps.points[centers[b]], mid)).then(a.cmp(&b))
    });
    let anchors: Vec<usize> = order.into_iter().take(n_anchors).collect();
    if anchors.len() < 3 {
        return Err(Error::WindowTooSmallForRepetitivity(format!(
            "only {} admissible anchors at D={d}",
            anchors.len()
        )));
    }

    let observable = ps.window.eroded(d);
    let per_anchor: Vec<(f64, bool)> = anchors
        .par_iter()
        .map(|&a| {
            let x = ps.points[centers[a]];
            let mut by_dist: Vec<(f64, u32)> =
                centers.iter().zip(&key_ids).map(|(&c, &k)| (dist(ps.points[c], x), k)).collect();
            by_dist.sort_by(|p, q| p.0.total_cmp(&q.0));
            let mut seen = vec![false; n_keys];
            let mut remaining = n_keys;
            let mut f = 0.0;
            for (dd, k) in by_dist {
                if !seen[k as usize] {
                    seen[k as usize] = true;
                    remaining -= 1;
                    if remaining == 0 {
                        f = dd;
                        break;
                    }
                }
            }
            (f, observable.contains_ball(x, f))
        })
        .collect();
    let f_hat = per_anchor.iter().map(|t| t.0).fold(1.0, f64::max);
    let inside = per_anchor.iter().all(|t| t.1);
    Ok(RepetitivityEstimate {
        radius: d,
        f_hat,
        anchors_tested: anchors.len(),
        status: if inside { RepetitivityStatus::ExactInWindow } else { RepetitivityStatus::LowerBound },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitivityBound {
    pub radius: f64,
    pub lhs: usize,
    pub rhs: f64,
    pub holds: bool,
    /// `max card(ω ∩ B_1(p)) / |B_1|` over sample points `p`.
    pub kappa1: f64,
    pub f_hat: f64,
    pub diagnostic: Option<String>,
}

/// `card p(D) ≤ κ₁ · |B_{F(D)}|` with `F` from [`repetitivity_estimate`].
pub fn check_repetitivity_bound(ps: &PointSet, d: f64, n_anchors: usize) -> Result<RepetitivityBound> {
    let rep = repetitivity_estimate(ps, d, n_anchors)?;
    let lhs = patch_count(ps, d)?;
    let index = build_index(ps);
    let max_count = (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let mut n = 0usize;
            index.for_each_in_ball(&BallQuery { center: ps.points[i], radius: 1.0 }, |_| n += 1);
            n
        })
        .max()
        .unwrap_or(0);
    let kappa1 = max_count as f64 / ball_volume(ps.dim, 1.0);
    let rhs = kappa1 * ball_volume(ps.dim, rep.f_hat);
    Ok(RepetitivityBound {
        radius: d,
        lhs,
        rhs,
        holds: lhs as f64 <= rhs,
        kappa1,
        f_hat: rep.f_hat,
        diagnostic: (!ps.delone).then(|| "not relatively dense".to_string()),
    })
}
