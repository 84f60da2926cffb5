//! Finite-volume autocorrelation and diffraction of weighted Dirac combs.
//!
//! The autocorrelation is computed from the single sample (centered boxes
//! as the averaging sequence). Bragg peaks are detected by volume scaling:
//! a peak at `k` has `Î_n(k) = |Σ w e(-k·x)|² / vol` growing linearly in
//! the volume, with slope equal to the peak intensity.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::build_index;
use crate::pointset::{crop, dist, sub, BallQuery, PointSet, Vector, Window};

const BIN: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Autocorrelation {
    pub z_max: f64,
    /// `(z, coefficient)` sorted by `z`.
    pub coefficients: Vec<(Vector, Complex64)>,
    pub normalizing_volume: f64,
}

impl Autocorrelation {
    pub fn coeff(&self, z: Vector) -> Complex64 {
        self.coefficients
            .iter()
            .find(|(y, _)| dist(*y, z) <= 10.0 * BIN)
            .map(|(_, c)| *c)
            .unwrap_or_default()
    }

    /// `Σ_z γ(z) e(-k·z)` over the stored support.
    pub fn fourier_sum(&self, k: Vector) -> f64 {
        self.coefficients.iter().map(|(z, c)| (c * phase(k, *z)).re).sum()
    }

    /// Mass `Σ |γ(z)|` over `|z| > radius`, the truncation error of
    /// `fourier_sum` when the coefficients are cut at `radius`.
    pub fn tail_mass(&self, radius: f64) -> f64 {
        self.coefficients.iter().filter(|(z, _)| z[0].hypot(z[1]) > radius).map(|(_, c)| c.norm()).sum()
    }

    pub fn truncated(&self, radius: f64) -> Autocorrelation {
        Autocorrelation {
            z_max: radius,
            coefficients: self.coefficients.iter().copied().filter(|(z, _)| z[0].hypot(z[1]) <= radius).collect(),
            normalizing_volume: self.normalizing_volume,
        }
    }
}

/// `e(-k·x)`, with the argument reduced mod 1 before scaling.
fn phase(k: Vector, x: Vector) -> Complex64 {
    let t = k[0] * x[0] + k[1] * x[1];
    let f = t - t.round();
    Complex64::from_polar(1.0, -2.0 * PI * f)
}

fn bin_key(z: Vector) -> (i64, i64) {
    ((z[0] / BIN).round() as i64, (z[1] / BIN).round() as i64)
}

fn collect(ps: &PointSet, z_max: f64, region: Window, vol: f64) -> Autocorrelation {
    let index = build_index(ps);
    let inside: Vec<usize> = (0..ps.len()).filter(|&i| region.contains(ps.points[i])).collect();
    let mut bins: BTreeMap<(i64, i64), (Vector, Complex64)> = BTreeMap::new();
    for &i in &inside {
        let x = ps.points[i];
        let wx = ps.weight(i);
        index.for_each_in_ball(&BallQuery { center: x, radius: z_max }, |j| {
            if region.contains(ps.points[j]) {
                let z = sub(x, ps.points[j]);
                let e = bins.entry(bin_key(z)).or_insert((z, Complex64::default()));
                e.1 += wx * ps.weight(j).conj();
            }
        });
    }
    Autocorrelation {
        z_max,
        coefficients: bins.into_values().map(|(z, c)| (z, c / vol)).collect(),
        normalizing_volume: vol,
    }
}

/// `γ(z) = vol⁻¹ Σ w_x conj(w_y)` over pairs with `x - y = z` and both
/// points in the window eroded by `z_max`.
pub fn autocorrelation(ps: &PointSet, z_max: f64) -> Result<Autocorrelation> {
    if !(z_max >= 0.0) || z_max > ps.window.min_extent() / 2.0 {
        return Err(Error::Validation(format!(
            "z_max={z_max} too large: must not exceed half the window extent ({})",
            ps.window.min_extent() / 2.0
        )));
    }
    let region = ps.window.eroded(z_max);
    Ok(collect(ps, z_max, region, region.volume()))
}

/// Pair autocorrelation of the whole sample, normalized by the window
/// volume. With `z_max` at least the window diameter its Fourier sum is
/// exactly the finite intensity.
pub fn pair_autocorrelation(ps: &PointSet, z_max: f64) -> Result<Autocorrelation> {
    if !(z_max >= 0.0) {
        return Err(Error::Validation("z_max must be non-negative".into()));
    }
    Ok(collect(ps, z_max, ps.window, ps.window.volume()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub k_grid: Vec<Vector>,
    /// `|Σ w e(-k·x)|² / vol`.
    pub intensities: Vec<f64>,
    pub volume: f64,
    pub n_points: usize,
}

impl Spectrum {
    pub fn to_csv(&self, dim: usize) -> String {
        let mut out = String::from(if dim == 1 { "k,intensity_per_volume\n" } else { "kx,ky,intensity_per_volume\n" });
        for (k, v) in self.k_grid.iter().zip(&self.intensities) {
            if dim == 1 {
                out.push_str(&format!("{},{}\n", k[0], v));
            } else {
                out.push_str(&format!("{},{},{}\n", k[0], k[1], v));
            }
        }
        out
    }
}

fn amplitude(ps: &PointSet, k: Vector) -> Complex64 {
    (0..ps.len()).map(|i| ps.weight(i) * phase(k, ps.points[i])).sum()
}

/// Direct evaluation of the finite intensity at every `k`.
pub fn intensity(ps: &PointSet, k_grid: &[Vector]) -> Spectrum {
    let volume = ps.window.volume();
    let intensities = k_grid.par_iter().map(|&k| amplitude(ps, k).norm_sqr() / volume).collect();
    Spectrum { k_grid: k_grid.to_vec(), intensities, volume, n_points: ps.len() }
}

/// `n` equally spaced wave numbers on `[0, k_max]`.
pub fn uniform_grid(n: usize, k_max: f64) -> Vec<Vector> {
    match n {
        0 => Vec::new(),
        1 => vec![[0.0, 0.0]],
        _ => (0..n).map(|i| [k_max * i as f64 / (n - 1) as f64, 0.0]).collect(),
    }
}

/// `[0,1)²` sampled with step `1/q`.
pub fn rational_grid(q: usize) -> Vec<Vector> {
    let mut out = Vec::with_capacity(q * q);
    for i in 0..q {
        for j in 0..q {
            out.push([i as f64 / q as f64, j as f64 / q as f64]);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub k: Vector,
    pub intensity: f64,
    pub scaling_r2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeakReport {
    pub peaks: Vec<Peak>,
    pub background_level: f64,
    pub pure_point_fraction: f64,
    /// Background at the two largest volumes.
    pub background_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PeakCriteria {
    pub r2_min: f64,
    /// Allowed range of the log-log growth exponent between the smallest
    /// and largest volume.
    pub exponent_range: (f64, f64),
    /// A peak must reach this multiple of `Σ|w|²/vol` at the largest volume.
    pub floor_factor: f64,
}

impl Default for PeakCriteria {
    fn default() -> Self {
        PeakCriteria { r2_min: 0.99, exponent_range: (0.8, 1.2), floor_factor: 10.0 }
    }
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Peak detection across spectra of increasing volume. `weight_mass` is
/// `Σ|w|²` at the largest volume and sets the intensity floor.
pub fn detect_peaks(spectra: &[Spectrum], weight_mass: f64, criteria: &PeakCriteria) -> Result<PeakReport> {
    if spectra.len() < 3 {
        return Err(Error::Validation("peak detection needs at least 3 volumes".into()));
    }
    if spectra.windows(2).any(|w| !(w[1].volume > w[0].volume)) {
        return Err(Error::Validation("volumes not increasing".into()));
    }
    let grid = &spectra[0].k_grid;
    if spectra.iter().any(|s| s.k_grid != *grid) {
        return Err(Error::Validation("spectra must share one k grid".into()));
    }
    let last = spectra.last().unwrap();
    let floor = criteria.floor_factor * weight_mass / last.volume;
    let vols: Vec<f64> = spectra.iter().map(|s| s.volume).collect();
    let span = (vols[vols.len() - 1] / vols[0]).ln();

    let mut peaks = Vec::new();
    let mut is_peak = vec![false; grid.len()];
    for (i, k) in grid.iter().enumerate() {
        let ys: Vec<f64> = spectra.iter().map(|s| s.intensities[i]).collect();
        let (slope, _, r2) = linear_fit(&vols, &ys);
        let exponent = if ys[0] > 0.0 { (ys[ys.len() - 1] / ys[0]).ln() / span } else { f64::INFINITY };
        if r2 >= criteria.r2_min
            && slope > 0.0
            && (criteria.exponent_range.0..=criteria.exponent_range.1).contains(&exponent)
            && ys[ys.len() - 1] >= floor
        {
            is_peak[i] = true;
            peaks.push(Peak { k: *k, intensity: slope, scaling_r2: r2 });
        }
    }
    let background = |s: &Spectrum| median(s.intensities.iter().zip(&is_peak).filter(|(_, p)| !**p).map(|(v, _)| *v).collect());
    let total = last.intensities.iter().fold(0.0, |a, v| a + v);
    let in_peaks = last.intensities.iter().zip(&is_peak).filter(|(_, p)| **p).fold(0.0, |a, (v, _)| a + v);
    let n = spectra.len();
    Ok(PeakReport {
        peaks,
        background_level: background(last),
        pure_point_fraction: if total > 0.0 { (in_peaks / total).clamp(0.0, 1.0) } else { 0.0 },
        background_history: vec![background(&spectra[n - 2]), background(last)],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWithPurePoint,
    ContinuousComponentDetected,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticConfig {
    pub k_grid: Vec<Vector>,
    /// Centered boxes scaled from the full window by these factors.
    pub volume_fractions: Vec<f64>,
    pub criteria: PeakCriteria,
}

impl DiagnosticConfig {
    pub fn new(k_grid: Vec<Vector>) -> Self {
        DiagnosticConfig { k_grid, volume_fractions: vec![0.25, 0.5, 1.0], criteria: PeakCriteria::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnosis {
    pub report: PeakReport,
    pub verdict: Verdict,
    pub volumes: Vec<f64>,
}

pub const PURE_POINT_MIN: f64 = 0.95;
pub const CONTINUOUS_MAX: f64 = 0.7;
/// Largest ratio between the background levels at the two largest volumes
/// that still counts as stable.
pub const STABLE_BACKGROUND: f64 = 2.0;

/// Nested boxes sharing the window's centre.
pub fn centered_boxes(window: &Window, fractions: &[f64]) -> Vec<Window> {
    let c = window.center();
    fractions
        .iter()
        .map(|&f| {
            let mut w = *window;
            for a in 0..window.dim {
                let h = 0.5 * f * window.extent(a);
                w.lo[a] = c[a] - h;
                w.hi[a] = c[a] + h;
            }
            w
        })
        .collect()
}

/// Peak statistics on centered boxes and the verdict: fraction ≥ 0.95 is
/// consistent with pure point; fraction ≤ 0.7 with a stable background is
/// a continuous component; anything else is inconclusive.
pub fn pure_point_diagnostic(ps: &PointSet, config: &DiagnosticConfig) -> Result<Diagnosis> {
    if config.volume_fractions.len() < 3 {
        return Err(Error::Validation("need at least 3 nested volumes".into()));
    }
    let boxes = centered_boxes(&ps.window, &config.volume_fractions);
    let mut spectra = Vec::new();
    let mut mass = 0.0;
    for b in &boxes {
        let sub = crop(ps, *b)?;
        mass = (0..sub.len()).map(|i| sub.weight(i).norm_sqr()).sum();
        spectra.push(intensity(&sub, &config.k_grid));
    }
    let report = detect_peaks(&spectra, mass, &config.criteria)?;
    let f = report.pure_point_fraction;
    let (b0, b1) = (report.background_history[0], report.background_history[1]);
    let stable = b0 > 0.0 && b1 > 0.0 && (b1 / b0).max(b0 / b1) <= STABLE_BACKGROUND;
    let verdict = if f >= PURE_POINT_MIN {
        Verdict::ConsistentWithPurePoint
    } else if f <= CONTINUOUS_MAX && stable {
        Verdict::ContinuousComponentDetected
    } else {
        Verdict::Inconclusive
    };
    Ok(Diagnosis { report, verdict, volumes: spectra.iter().map(|s| s.volume).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{lattice, model_set, substitution_chain, CutProjectScheme, SubstitutionRule, TAU};
    use crate::translate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z(n: f64) -> PointSet {
        lattice(&[[1.0, 0.0]], Window::interval(-n, n)).unwrap()
    }

    #[test]
    fn lattice_autocorrelation() {
        let ps = z(500.0);
        let ac = autocorrelation(&ps, 5.0).unwrap();
        assert_eq!(ac.coefficients.len(), 11);
        for (zv, c) in &ac.coefficients {
            assert!((c.re - 1.0).abs() < 0.02 && c.im == 0.0, "{zv:?} {c}");
        }
        let n_in = ps.points.iter().filter(|p| ps.window.eroded(5.0).contains(**p)).count();
        assert!((ac.coeff([0.0, 0.0]).re - n_in as f64 / ac.normalizing_volume).abs() < 1e-9);
        assert!(autocorrelation(&ps, 600.0).is_err());
    }

    #[test]
    fn zero_weights_give_zero() {
        let mut ps = z(50.0);
        ps.weights = Some(vec![Complex64::default(); ps.len()]);
        assert!(autocorrelation(&ps, 3.0).unwrap().coefficients.iter().all(|(_, c)| c.norm() == 0.0));
    }

    #[test]
    fn fibonacci_autocorrelation_support() {
        let ps = model_set(&CutProjectScheme::fibonacci(), Window::interval(0.0, 700.0)).unwrap();
        assert!(ps.len() >= 400);
        let ac = autocorrelation(&ps, 10.0).unwrap();
        // double-loop oracle
        let region = ps.window.eroded(10.0);
        let mut oracle: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        for x in &ps.points {
            for y in &ps.points {
                if region.contains(*x) && region.contains(*y) && (x[0] - y[0]).abs() <= 10.0 {
                    *oracle.entry(bin_key(sub(*x, *y))).or_default() += 1.0;
                }
            }
        }
        assert_eq!(oracle.len(), ac.coefficients.len());
        for (zv, c) in &ac.coefficients {
            assert!((oracle[&bin_key(*zv)] / ac.normalizing_volume - c.re).abs() < 1e-12);
            // z = m + nτ with small integers
            let ok = (-20..=20).any(|n: i32| {
                let m = zv[0] - n as f64 * TAU;
                (m - m.round()).abs() < 1e-6
            });
            assert!(ok, "{zv:?}");
            let mirror = ac.coeff([-zv[0], 0.0]);
            assert!((mirror - c.conj()).norm() < 1e-9);
        }
    }

    #[test]
    fn lattice_intensity() {
        let ps = z(500.0);
        let s = intensity(&ps, &[[0.0, 0.0], [0.5, 0.0]]);
        assert!((s.intensities[0] / s.volume - 1.0).abs() < 0.02);
        assert!(s.intensities[1] / s.volume <= 1e-3);
        // closed-form geometric sum
        let k = 0.3;
        let n = ps.len() as f64;
        let oracle = ((PI * k * n).sin() / (PI * k).sin()).powi(2) / s.volume;
        let got = intensity(&ps, &[[k, 0.0]]).intensities[0];
        assert!((got - oracle).abs() < 1e-9 * (1.0 + oracle));
    }

    #[test]
    fn thue_morse_balanced_at_zero() {
        let ps = substitution_chain(&SubstitutionRule::thue_morse(), 10, "a").unwrap();
        let s = intensity(&ps, &[[0.0, 0.0]]);
        assert!(s.intensities[0] / s.volume < 1e-12);
    }

    #[test]
    fn intensity_symmetries() {
        let ps = model_set(&CutProjectScheme::fibonacci(), Window::interval(0.0, 500.0)).unwrap();
        let ks: Vec<Vector> = (0..50).map(|i| [0.037 * i as f64, 0.0]).collect();
        let neg: Vec<Vector> = ks.iter().map(|k| [-k[0], 0.0]).collect();
        let (a, b) = (intensity(&ps, &ks), intensity(&ps, &neg));
        let moved = intensity(&translate(&ps, [3.25, 0.0]), &ks);
        for i in 0..ks.len() {
            assert!(a.intensities[i] >= 0.0);
            assert!((a.intensities[i] - b.intensities[i]).abs() <= 1e-9 * (1.0 + a.intensities[i]));
            assert!((a.intensities[i] - moved.intensities[i]).abs() <= 1e-9 * (1.0 + a.intensities[i]));
        }
    }

    #[test]
    fn fourier_sum_matches_intensity() {
        let ps = z(30.0);
        let full = pair_autocorrelation(&ps, 61.0).unwrap();
        for k in [0.0, 0.13, 0.5, 1.0] {
            let direct = intensity(&ps, &[[k, 0.0]]).intensities[0];
            assert!((full.fourier_sum([k, 0.0]) - direct).abs() < 1e-9 * (1.0 + direct));
            let cut = full.truncated(20.0);
            assert!((cut.fourier_sum([k, 0.0]) - direct).abs() <= full.tail_mass(20.0) + 1e-9);
        }
    }

    #[test]
    fn lattice_peaks_at_integers() {
        let grid: Vec<Vector> = (0..=16).map(|i| [i as f64 * 0.25, 0.0]).collect();
        let spectra: Vec<Spectrum> = [100.0, 200.0, 400.0].iter().map(|&n| intensity(&z(n), &grid)).collect();
        let mass = z(400.0).len() as f64;
        let rep = detect_peaks(&spectra, mass, &PeakCriteria::default()).unwrap();
        let ks: Vec<f64> = rep.peaks.iter().map(|p| p.k[0]).collect();
        assert_eq!(ks, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        for p in &rep.peaks {
            assert!((p.intensity - 1.0).abs() < 0.02);
        }
        assert!(detect_peaks(&spectra[..2], mass, &PeakCriteria::default()).is_err());
        let rev: Vec<Spectrum> = spectra.iter().rev().cloned().collect();
        assert!(detect_peaks(&rev, mass, &PeakCriteria::default()).is_err());
    }

    #[test]
    fn random_points_only_peak_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut xs: Vec<f64> = (0..4000).map(|_| rng.gen_range(0.0..4000.0)).collect();
        xs.sort_by(f64::total_cmp);
        let ps = PointSet::new(1, xs.iter().map(|&x| [x, 0.0]).collect(), 1e-6, 10.0, Window::interval(0.0, 4000.0));
        let diag = pure_point_diagnostic(&ps, &DiagnosticConfig::new(uniform_grid(512, 2.0))).unwrap();
        assert!(diag.report.peaks.iter().all(|p| p.k[0] == 0.0), "{:?}", diag.report.peaks);
        assert_eq!(diag.report.peaks.len(), 1);
    }
}
