//! Cut-and-project sets with one physical and one internal dimension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointset::{ModuleCoords, PointSet, Window};

/// Golden ratio τ.
pub const TAU: f64 = 1.618_033_988_749_895;
/// Its algebraic conjugate τ' = 1 − τ.
pub const TAU_CONJ: f64 = 1.0 - TAU;

/// Interval acceptance window in internal space, closed on the left and
/// open on the right when `half_open` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InternalWindow {
    pub lo: f64,
    pub hi: f64,
    pub half_open: bool,
}

impl InternalWindow {
    pub fn contains(&self, y: f64) -> bool {
        y >= self.lo && if self.half_open { y < self.hi } else { y <= self.hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }

    /// Concentric copy scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let c = 0.5 * (self.lo + self.hi);
        let h = 0.5 * self.len() * factor;
        InternalWindow { lo: c - h, hi: c + h, half_open: self.half_open }
    }
}

/// Lattice plus projections. Rows of `lattice_basis` are the lattice
/// generators in the total space `R^n`; here `n = 2` with one physical and
/// one internal coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutProjectScheme {
    pub total_dim: usize,
    pub physical_dim: usize,
    pub lattice_basis: Vec<Vec<f64>>,
    pub proj_phys: Vec<Vec<f64>>,
    pub proj_int: Vec<Vec<f64>>,
    pub window_int: InternalWindow,
}

impl CutProjectScheme {
    /// Lattice `Z²`, `x = m + kτ`, `x* = m + kτ'`, window `[-1, τ-1)`.
    ///
    /// A window of length τ yields the two tile lengths `{1, τ}`; it contains
    /// the internal image of the origin.
    pub fn fibonacci() -> Self {
        CutProjectScheme {
            total_dim: 2,
            physical_dim: 1,
            lattice_basis: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            proj_phys: vec![vec![1.0, TAU]],
            proj_int: vec![vec![1.0, TAU_CONJ]],
            window_int: InternalWindow { lo: -1.0, hi: TAU - 1.0, half_open: true },
        }
    }

    pub fn with_window(&self, window_int: InternalWindow) -> Self {
        CutProjectScheme { window_int, ..self.clone() }
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.total_dim;
        if n != 2 || self.physical_dim != 1 {
            return Err(Error::Validation(
                "only schemes with one physical and one internal dimension are supported".into(),
            ));
        }
        let rows_ok = |m: &Vec<Vec<f64>>, r: usize| m.len() == r && m.iter().all(|row| row.len() == n);
        if !rows_ok(&self.lattice_basis, n) || !rows_ok(&self.proj_phys, 1) || !rows_ok(&self.proj_int, 1) {
            return Err(Error::Validation("scheme matrix shapes do not match total_dim".into()));
        }
        Ok(())
    }

    /// Physical and internal images of each lattice generator:
    /// `(g_j, h_j)` for `j = 0..n`.
    pub fn generator_images(&self) -> Vec<(f64, f64)> {
        self.lattice_basis
            .iter()
            .map(|b| {
                let g: f64 = self.proj_phys[0].iter().zip(b).map(|(p, x)| p * x).sum();
                let h: f64 = self.proj_int[0].iter().zip(b).map(|(p, x)| p * x).sum();
                (g, h)
            })
            .collect()
    }

    /// `|det|` of the embedded lattice.
    pub fn covolume(&self) -> f64 {
        let im = self.generator_images();
        (im[0].0 * im[1].1 - im[1].0 * im[0].1).abs()
    }

    /// Expected point density `|W| / covolume`.
    pub fn density(&self) -> f64 {
        self.window_int.len() / self.covolume()
    }

    /// Positions `(k, k*)` of the Fourier module (the dual lattice projected
    /// to physical and internal space) with `0 ≤ k ≤ k_max`, `|k*| ≤ kstar_max`,
    /// sorted by `k`.
    pub fn fourier_module(&self, k_max: f64, kstar_max: f64) -> Result<Vec<(f64, f64)>> {
        self.check_shape()?;
        let im = self.generator_images();
        let (a, b, c, d) = (im[0].0, im[1].0, im[0].1, im[1].1);
        let det = a * d - b * c;
        if det.abs() < 1e-12 {
            return Err(Error::SingularBasis);
        }
        // (k, k*) solves k·g_j + k*·h_j = m_j for integer m
        let solve = |m0: f64, m1: f64| ((m0 * d - m1 * c) / det, (a * m1 - b * m0) / det);
        let corners = [(0.0, -kstar_max), (0.0, kstar_max), (k_max, -kstar_max), (k_max, kstar_max)];
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for (k, ks) in corners {
            let m = [k * a + ks * c, k * b + ks * d];
            for i in 0..2 {
                lo[i] = lo[i].min(m[i]);
                hi[i] = hi[i].max(m[i]);
            }
        }
        let mut out = Vec::new();
        for m0 in (lo[0].floor() as i64)..=(hi[0].ceil() as i64) {
            for m1 in (lo[1].floor() as i64)..=(hi[1].ceil() as i64) {
                let (k, ks) = solve(m0 as f64, m1 as f64);
                if (-1e-12..=k_max).contains(&k) && ks.abs() <= kstar_max {
                    out.push((k.max(0.0), ks));
                }
            }
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        Ok(out)
    }

    /// Largest gap between sorted internal images of the points generated in
    /// `phys_window`, a statistical check that the internal images fill the
    /// acceptance window.
    pub fn internal_fill_gap(&self, phys_window: Window) -> Result<f64> {
        let ps = model_set(self, phys_window)?;
        let im = self.generator_images();
        let m = ps.module.as_ref().expect("model sets carry module coordinates");
        let mut ys: Vec<f64> = m.coords.iter().map(|c| c[0] as f64 * im[0].1 + c[1] as f64 * im[1].1).collect();
        ys.push(self.window_int.lo);
        ys.push(self.window_int.hi);
        ys.sort_by(f64::total_cmp);
        Ok(ys.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max))
    }
}

/// Model set `{ x : l ∈ L, x* ∈ W }` restricted to `phys_window`.
///
/// Enumeration is exact: for each value of the second lattice coordinate
/// the admissible range of the first follows from the two linear
/// constraints, so no lattice point is missed.
pub fn model_set(scheme: &CutProjectScheme, phys_window: Window) -> Result<PointSet> {
    scheme.check_shape()?;
    if phys_window.dim != 1 || phys_window.is_empty() {
        return Err(Error::Validation("physical window must be a bounded 1-D interval".into()));
    }
    let w = scheme.window_int;
    if w.is_empty() {
        return Err(Error::DegenerateWindow);
    }
    let im = scheme.generator_images();
    let ((g0, h0), (g1, h1)) = (im[0], im[1]);
    let det = g0 * h1 - g1 * h0;
    if det.abs() < 1e-12 {
        return Err(Error::SingularBasis);
    }
    let (x_lo, x_hi) = (phys_window.lo[0], phys_window.hi[0]);
    // range of the second coefficient over the box phys × internal
    let c1_of = |x: f64, y: f64| (g0 * y - h0 * x) / det;
    let cands = [c1_of(x_lo, w.lo), c1_of(x_lo, w.hi), c1_of(x_hi, w.lo), c1_of(x_hi, w.hi)];
    let c1_min = cands.iter().cloned().fold(f64::INFINITY, f64::min).floor() as i64 - 1;
    let c1_max = cands.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil() as i64 + 1;

    let interval_for = |coef: f64, rest: f64, lo: f64, hi: f64| -> (f64, f64) {
        if coef.abs() < 1e-300 {
            if rest >= lo && rest <= hi {
                (f64::NEG_INFINITY, f64::INFINITY)
            } else {
                (1.0, 0.0)
            }
        } else {
            let (a, b) = ((lo - rest) / coef, (hi - rest) / coef);
            (a.min(b), a.max(b))
        }
    };

    let mut rows: Vec<(f64, [i64; 2])> = Vec::new();
    for c1 in c1_min..=c1_max {
        let (rx, ry) = (c1 as f64 * g1, c1 as f64 * h1);
        let (a0, a1) = interval_for(g0, rx, x_lo, x_hi);
        let (b0, b1) = interval_for(h0, ry, w.lo, w.hi);
        let (lo, hi) = (a0.max(b0), a1.min(b1));
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            continue;
        }
        for c0 in (lo.floor() as i64 - 1)..=(hi.ceil() as i64 + 1) {
            let x = c0 as f64 * g0 + rx;
            let y = c0 as f64 * h0 + ry;
            if x >= x_lo && x <= x_hi && w.contains(y) {
                rows.push((x, [c0, c1]));
            }
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    if rows.windows(2).any(|p| p[0].0 == p[1].0) {
        return Err(Error::Validation("projection is not injective on the sampled range".into()));
    }

    let points: Vec<_> = rows.iter().map(|(x, _)| [*x, 0.0]).collect();
    let coords: Vec<Vec<i64>> = rows.iter().map(|(_, c)| c.to_vec()).collect();
    let gaps: Vec<f64> = points.windows(2).map(|p| p[1][0] - p[0][0]).collect();
    let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_gap = gaps.iter().cloned().fold(0.0, f64::max);
    let (r, big_r) = if gaps.is_empty() { (0.5, 0.5) } else { (0.5 * min_gap, 0.5 * max_gap) };

    let mut ps = PointSet::new(1, points, r, big_r, phys_window);
    ps.module = Some(ModuleCoords { basis: vec![[g0, 0.0], [g1, 0.0]], origin: [0.0, 0.0], coords });
    ps.provenance = format!(
        "model_set{{window_int=[{},{}{}}}",
        w.lo,
        w.hi,
        if w.half_open { ")" } else { "]" }
    );
    Ok(ps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn fibonacci_two_gaps() {
        let ps = model_set(&CutProjectScheme::fibonacci(), Window::interval(-200.0, 200.0)).unwrap();
        ps.validate().unwrap();
        // brute-force gap scan, quantised to 1e-9
        let gaps: BTreeSet<i64> = ps.points.windows(2).map(|p| ((p[1][0] - p[0][0]) * 1e9).round() as i64).collect();
        let expected: BTreeSet<i64> = [1e9 as i64, (TAU * 1e9).round() as i64].into_iter().collect();
        assert_eq!(gaps, expected);
        assert!(ps.points.iter().any(|p| p[0] == 0.0));
        assert!((ps.r - 0.5).abs() < 1e-9 && (ps.big_r - TAU / 2.0).abs() < 1e-9);
    }

    #[test]
    fn fibonacci_density() {
        let scheme = CutProjectScheme::fibonacci();
        let ps = model_set(&scheme, Window::interval(-500.0, 500.0)).unwrap();
        let measured = ps.len() as f64 / 1000.0;
        // |W| / |det| with |W| = τ and det = τ' - τ = -√5
        let oracle = TAU / 5f64.sqrt();
        assert!((measured - oracle).abs() / oracle < 0.01, "{measured} vs {oracle}");
        assert!((scheme.density() - oracle).abs() < 1e-12);
    }

    #[test]
    fn shrinking_window_gives_subset() {
        let scheme = CutProjectScheme::fibonacci();
        let big = model_set(&scheme, Window::interval(-300.0, 300.0)).unwrap();
        let small = model_set(&scheme.with_window(scheme.window_int.scaled(0.5)), Window::interval(-300.0, 300.0)).unwrap();
        let all: BTreeSet<Vec<i64>> = big.module.unwrap().coords.into_iter().collect();
        assert!(small.len() < all.len());
        assert!(small.module.unwrap().coords.iter().all(|c| all.contains(c)));
    }

    #[test]
    fn degenerate_window_rejected() {
        let s = CutProjectScheme::fibonacci().with_window(InternalWindow { lo: 0.0, hi: 0.0, half_open: false });
        assert_eq!(model_set(&s, Window::interval(-10.0, 10.0)).unwrap_err(), Error::DegenerateWindow);
    }

    #[test]
    fn internal_images_fill_window() {
        let gap = CutProjectScheme::fibonacci().internal_fill_gap(Window::interval(-2000.0, 2000.0)).unwrap();
        assert!(gap < 0.01, "{gap}");
    }

    #[test]
    fn fourier_module_contains_origin_and_integers() {
        let s = CutProjectScheme::fibonacci();
        let fm = s.fourier_module(2.0, 3.0).unwrap();
        assert!(fm.iter().any(|&(k, ks)| k.abs() < 1e-12 && ks.abs() < 1e-12));
        // every position is a dual vector: k·g + k*·h integral for both generators
        for (k, ks) in fm {
            for (g, h) in s.generator_images() {
                let v = k * g + ks * h;
                assert!((v - v.round()).abs() < 1e-9);
            }
        }
    }
}
