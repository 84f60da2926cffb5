//! Logarithmic Mahler measure of two-variable Laurent polynomials and the
//! comparison with per-site entropies of exact dimer counts.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{domino_count, lozenge_count};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentPolynomial {
    /// `(a, b) ↦ c` for the monomial `c·x^a·y^b`.
    pub terms: BTreeMap<(i32, i32), Complex64>,
}

impl LaurentPolynomial {
    pub fn new(terms: impl IntoIterator<Item = ((i32, i32), Complex64)>) -> Result<Self> {
        let mut map: BTreeMap<(i32, i32), Complex64> = BTreeMap::new();
        for (e, c) in terms {
            *map.entry(e).or_default() += c;
        }
        map.retain(|_, c| c.norm() > 0.0);
        if map.is_empty() {
            return Err(Error::Validation("polynomial is identically zero".into()));
        }
        Ok(LaurentPolynomial { terms: map })
    }

    pub fn real(terms: &[((i32, i32), f64)]) -> Result<Self> {
        Self::new(terms.iter().map(|&(e, c)| (e, Complex64::new(c, 0.0))))
    }

    /// `1 + x + y`.
    pub fn lozenge() -> Self {
        Self::real(&[((0, 0), 1.0), ((1, 0), 1.0), ((0, 1), 1.0)]).unwrap()
    }

    /// `4 + x + 1/x + y + 1/y`.
    pub fn domino() -> Self {
        Self::real(&[((0, 0), 4.0), ((1, 0), 1.0), ((-1, 0), 1.0), ((0, 1), 1.0), ((0, -1), 1.0)]).unwrap()
    }

    /// Parses whitespace-separated `a,b,re[,im]` terms.
    pub fn parse(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for tok in s.split_whitespace() {
            let f: Vec<&str> = tok.split(',').collect();
            if f.len() != 3 && f.len() != 4 {
                return Err(Error::Validation(format!("bad term '{tok}': expected a,b,re[,im]")));
            }
            let bad = || Error::Validation(format!("bad term '{tok}'"));
            let a: i32 = f[0].trim().parse().map_err(|_| bad())?;
            let b: i32 = f[1].trim().parse().map_err(|_| bad())?;
            let re: f64 = f[2].trim().parse().map_err(|_| bad())?;
            let im: f64 = if f.len() == 4 { f[3].trim().parse().map_err(|_| bad())? } else { 0.0 };
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::Validation(format!("non-finite coefficient in '{tok}'")));
            }
            terms.push(((a, b), Complex64::new(re, im)));
        }
        Self::new(terms)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for (&(a, b), &c) in &self.terms {
            for (&(p, q), &d) in &other.terms {
                out.push(((a + p, b + q), c * d));
            }
        }
        Self::new(out).expect("product of nonzero polynomials")
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self::new(self.terms.iter().map(|(&e, &v)| (e, v * c))).expect("nonzero scale")
    }

    pub fn swap_xy(&self) -> Self {
        Self::new(self.terms.iter().map(|(&(a, b), &c)| ((b, a), c))).unwrap()
    }

    pub fn invert_x(&self) -> Self {
        Self::new(self.terms.iter().map(|(&(a, b), &c)| ((-a, b), c))).unwrap()
    }

    pub fn coeff_mass(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }
}

/// `P(e(s), e(t))` with `e(u) = exp(2πiu)`.
pub fn eval_on_torus(p: &LaurentPolynomial, s: f64, t: f64) -> Complex64 {
    p.terms
        .iter()
        .map(|(&(a, b), &c)| {
            let arg = (a as f64 * s + b as f64 * t).rem_euclid(1.0);
            c * Complex64::from_polar(1.0, 2.0 * PI * arg)
        })
        .sum()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    /// `(grid size, value)` per level.
    pub levels: Vec<(usize, f64)>,
    pub singular_cells_refined: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub base_grid: usize,
    pub max_levels: usize,
    /// Cells whose midpoint has `|P|` below `threshold · Σ|c|` are refined.
    pub threshold: f64,
    /// Sub-grid per axis used inside a refined cell.
    pub refine: usize,
    pub tolerance: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { base_grid: 64, max_levels: 6, threshold: 1e-3, refine: 16, tolerance: 5e-4 }
    }
}

fn log_abs(p: &LaurentPolynomial, s: f64, t: f64, jitter: f64) -> f64 {
    let v = eval_on_torus(p, s, t).norm();
    if v > 0.0 {
        v.ln()
    } else {
        eval_on_torus(p, s + jitter, t + jitter).norm().ln()
    }
}

/// Midpoint rule on an `n × n` grid, with small-`|P|` cells replaced by a
/// finer midpoint rule. Returns the average and the number of refined cells.
fn level(p: &LaurentPolynomial, n: usize, opts: &QuadratureOptions) -> (f64, usize) {
    let h = 1.0 / n as f64;
    let cut = opts.threshold * p.coeff_mass();
    let jitter = 1.0 / (8.0 * n as f64);
    let m = opts.refine;
    let rows: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let s = (i as f64 + 0.5) * h;
            let mut acc = 0.0;
            let mut refined = 0;
            for j in 0..n {
                let t = (j as f64 + 0.5) * h;
                if eval_on_torus(p, s, t).norm() >= cut {
                    acc += log_abs(p, s, t, jitter);
                    continue;
                }
                refined += 1;
                let hs = h / m as f64;
                let mut sub = 0.0;
                for a in 0..m {
                    for b in 0..m {
                        let ss = i as f64 * h + (a as f64 + 0.5) * hs;
                        let tt = j as f64 * h + (b as f64 + 0.5) * hs;
                        sub += log_abs(p, ss, tt, jitter / m as f64);
                    }
                }
                acc += sub / (m * m) as f64;
            }
            (acc, refined)
        })
        .collect();
    let total: f64 = rows.iter().map(|r| r.0).sum();
    (total * h * h, rows.iter().map(|r| r.1).sum())
}

/// `m(P) = ∫∫ log|P(e(s), e(t))| ds dt` by grid doubling until successive
/// levels agree within the tolerance. The error estimate is the last
/// difference plus the geometric tail implied by the last two differences;
/// it is not a rigorous enclosure.
pub fn mahler_measure(p: &LaurentPolynomial, opts: &QuadratureOptions) -> Result<QuadratureResult> {
    if opts.base_grid == 0 || opts.max_levels == 0 || opts.refine == 0 {
        return Err(Error::Validation("grid sizes and level count must be positive".into()));
    }
    let mut levels = Vec::new();
    let mut refined = 0;
    let mut converged = false;
    for l in 0..opts.max_levels {
        let n = opts.base_grid << l;
        let (v, r) = level(p, n, opts);
        levels.push((n, v));
        refined += r;
        if levels.len() >= 3 {
            let d: Vec<f64> = levels.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
            let k = d.len();
            if d[k - 1] <= opts.tolerance && d[k - 1] <= d[k - 2] {
                converged = true;
                break;
            }
        }
    }
    let k = levels.len();
    let value = levels[k - 1].1;
    let last = if k >= 2 { (levels[k - 1].1 - levels[k - 2].1).abs() } else { f64::INFINITY };
    let prev = if k >= 3 { (levels[k - 2].1 - levels[k - 3].1).abs() } else { f64::INFINITY };
    let tail = if prev > 0.0 && last < prev { last * (last / prev) / (1.0 - last / prev) } else { last };
    Ok(QuadratureResult { value, error_estimate: last + tail, levels, singular_cells_refined: refined, converged })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimerModel {
    Domino,
    Lozenge,
}

impl DimerModel {
    pub fn polynomial(self) -> LaurentPolynomial {
        match self {
            DimerModel::Domino => LaurentPolynomial::domino(),
            DimerModel::Lozenge => LaurentPolynomial::lozenge(),
        }
    }

    /// Square `n × n` boards or regular hexagons `(n, n, n)`.
    pub fn default_sizes(self) -> Vec<u32> {
        match self {
            DimerModel::Domino => vec![6, 8, 10, 12, 14, 16, 18, 20],
            DimerModel::Lozenge => (3..=10).collect(),
        }
    }

    fn log_per_site(self, n: u32) -> Result<f64> {
        let r = match self {
            DimerModel::Domino => domino_count(n, n)?,
            DimerModel::Lozenge => lozenge_count(n, n, n)?,
        };
        if r.count == 0u32.into() {
            return Err(Error::DegenerateEnsemble);
        }
        Ok(r.log_count_per_site)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimerExtrapolation {
    pub per_site: f64,
    /// Root mean square residual of the affine fit.
    pub fit_residual: f64,
    pub sizes: Vec<u32>,
    pub values: Vec<f64>,
}

/// Fits `log(count)/sites = a + b/n` and returns the intercept `a`.
pub fn dimer_entropy_extrapolation(model: DimerModel, sizes: &[u32]) -> Result<DimerExtrapolation> {
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::TooFewSizes);
    }
    let values: Vec<f64> = sizes.iter().map(|&n| model.log_per_site(n)).collect::<Result<_>>()?;
    let xs: Vec<f64> = sizes.iter().map(|&n| 1.0 / n as f64).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, values.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&values).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&values).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(DimerExtrapolation { per_site: intercept, fit_residual: (rss / k).sqrt(), sizes, values })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsetRatio {
    pub sizes: Vec<u32>,
    pub per_site: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MahlerDimerReport {
    pub model: DimerModel,
    pub m_value: f64,
    pub quadrature: QuadratureResult,
    pub per_site: f64,
    pub ratio: f64,
    pub subsets: Vec<SubsetRatio>,
    /// `|r_last - r_prev| / |r_last|` over the two largest subsets.
    pub ratio_stability: f64,
}

/// Ratio `m(P) / per_site` over sliding windows of four consecutive sizes.
/// The constant relating the two is measured here, not assumed.
pub fn mahler_vs_dimer_report(model: DimerModel, sizes: &[u32], opts: &QuadratureOptions) -> Result<MahlerDimerReport> {
    let quad = mahler_measure(&model.polynomial(), opts)?;
    if !quad.converged {
        return Err(Error::Precondition("Mahler quadrature did not converge".into()));
    }
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let w = 4.min(sizes.len());
    if w < 2 || sizes.len() < 3 {
        return Err(Error::TooFewSizes);
    }
    let mut subsets = Vec::new();
    for win in sizes.windows(w) {
        let ex = dimer_entropy_extrapolation(model, win)?;
        if !(ex.per_site > 0.0) {
            return Err(Error::DegenerateEnsemble);
        }
        subsets.push(SubsetRatio { sizes: win.to_vec(), per_site: ex.per_site, ratio: quad.value / ex.per_site });
    }
    let n = subsets.len();
    let last = &subsets[n - 1];
    let stability = if n >= 2 { (last.ratio - subsets[n - 2].ratio).abs() / last.ratio.abs() } else { 0.0 };
    Ok(MahlerDimerReport {
        model,
        m_value: quad.value,
        per_site: last.per_site,
        ratio: last.ratio,
        quadrature: quad,
        subsets,
        ratio_stability: stability,
    })
}
