use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointset::{ModuleCoords, PointSet, Window};

use super::model_set::TAU;

/// Longest word the chain generator will expand.
pub const MAX_WORD_LEN: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionRule {
    pub alphabet: Vec<String>,
    /// `images[a]` is the word that letter `a` maps to.
    pub images: Vec<Vec<usize>>,
    pub lengths: Vec<f64>,
    pub weights: Option<Vec<Complex64>>,
}

impl SubstitutionRule {
    /// `a → ab`, `b → a` with tile lengths `(τ, 1)`.
    pub fn fibonacci() -> Self {
        SubstitutionRule {
            alphabet: vec!["a".into(), "b".into()],
            images: vec![vec![0, 1], vec![0]],
            lengths: vec![TAU, 1.0],
            weights: None,
        }
    }

    /// `a → ab`, `b → ba` with unit tiles and weights `±1`.
    pub fn thue_morse() -> Self {
        SubstitutionRule {
            alphabet: vec!["a".into(), "b".into()],
            images: vec![vec![0, 1], vec![1, 0]],
            lengths: vec![1.0, 1.0],
            weights: Some(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]),
        }
    }

    /// `M[i][j]` = number of occurrences of letter `i` in the image of `j`.
    pub fn matrix(&self) -> Vec<Vec<u64>> {
        let k = self.alphabet.len();
        let mut m = vec![vec![0u64; k]; k];
        for (j, img) in self.images.iter().enumerate() {
            for &i in img {
                m[i][j] += 1;
            }
        }
        m
    }

    /// Some power of the substitution matrix is strictly positive. By
    /// Wielandt's bound it suffices to check powers up to `(k-1)² + 1`.
    pub fn is_primitive(&self) -> bool {
        let k = self.alphabet.len();
        let m: Vec<Vec<bool>> = self.matrix().iter().map(|row| row.iter().map(|&x| x > 0).collect()).collect();
        let mut p = m.clone();
        for _ in 0..((k - 1) * (k - 1) + 1) {
            if p.iter().all(|row| row.iter().all(|&x| x)) {
                return true;
            }
            let mut q = vec![vec![false; k]; k];
            for i in 0..k {
                for j in 0..k {
                    q[i][j] = (0..k).any(|l| p[i][l] && m[l][j]);
                }
            }
            p = q;
        }
        p.iter().all(|row| row.iter().all(|&x| x))
    }

    /// Inflation factor λ implied by the tile lengths, if they form a left
    /// Perron eigenvector (`|σ(a)| = λ·ℓ_a` for every letter) within 1e-9.
    pub fn inflation_factor(&self) -> Option<f64> {
        let ratios: Vec<f64> = self
            .images
            .iter()
            .zip(&self.lengths)
            .map(|(img, &l)| img.iter().map(|&i| self.lengths[i]).sum::<f64>() / l)
            .collect();
        let lambda = ratios[0];
        ratios.iter().all(|&x| (x - lambda).abs() <= 1e-9 * lambda).then_some(lambda)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.alphabet.len();
        if k == 0 || self.images.len() != k || self.lengths.len() != k {
            return Err(Error::Validation("alphabet, images and lengths must align".into()));
        }
        if self.images.iter().any(|w| w.is_empty() || w.iter().any(|&i| i >= k)) {
            return Err(Error::Validation("images must be nonempty words over the alphabet".into()));
        }
        if self.lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Validation("tile lengths must be positive".into()));
        }
        if self.weights.as_ref().is_some_and(|w| w.len() != k) {
            return Err(Error::Validation("one weight per letter required".into()));
        }
        if !self.is_primitive() {
            return Err(Error::NotPrimitive);
        }
        if self.inflation_factor().is_none() {
            return Err(Error::Validation("tile lengths are not a left Perron eigenvector".into()));
        }
        Ok(())
    }

    pub fn letter(&self, name: &str) -> Result<usize> {
        self.alphabet.iter().position(|a| a == name).ok_or_else(|| Error::UnknownAxiom(name.into()))
    }

    /// `σ^iterations(axiom)` as letter indices.
    pub fn expand(&self, axiom: usize, iterations: usize) -> Result<Vec<usize>> {
        let mut word = vec![axiom];
        for _ in 0..iterations {
            let len: usize = word.iter().map(|&a| self.images[a].len()).sum();
            if len > MAX_WORD_LEN {
                return Err(Error::Capacity(format!("word length {len} exceeds {MAX_WORD_LEN}")));
            }
            let mut next = Vec::with_capacity(len);
            for &a in &word {
                next.extend_from_slice(&self.images[a]);
            }
            word = next;
        }
        Ok(word)
    }
}

/// Left tile endpoints of `σ^iterations(axiom)` laid out from 0.
///
/// Module coordinates count the tiles of each type to the left of a point,
/// so positions are exact integer combinations of the tile lengths (for
/// integer lengths the coordinate is the position itself). The
/// window ends at the last left endpoint, which keeps the sample complete.
pub fn substitution_chain(rule: &SubstitutionRule, iterations: usize, axiom: &str) -> Result<PointSet> {
    rule.validate()?;
    let a = rule.letter(axiom)?;
    let word = rule.expand(a, iterations)?;
    let k = rule.alphabet.len();
    let mut counts = vec![0i64; k];
    let mut points = Vec::with_capacity(word.len());
    let mut coords = Vec::with_capacity(word.len());
    for &letter in &word {
        let x: f64 = counts.iter().zip(&rule.lengths).map(|(&c, &l)| c as f64 * l).sum();
        points.push([x, 0.0]);
        coords.push(counts.clone());
        counts[letter] += 1;
    }
    let used: Vec<f64> = (0..k).filter(|l| word.contains(l)).map(|l| rule.lengths[l]).collect();
    let r = 0.5 * used.iter().cloned().fold(f64::INFINITY, f64::min);
    let big_r = 0.5 * used.iter().cloned().fold(0.0, f64::max);
    let last = points.last().map_or(0.0, |p| p[0]);
    let mut ps = PointSet::new(1, points, r, big_r, Window::interval(0.0, last));
    // integer tile lengths make the letter counts redundant; use Z instead so
    // equal positions always have equal coordinates
    let integral = rule.lengths.iter().all(|&l| (l - l.round()).abs() < 1e-12);
    ps.module = Some(if integral {
        ModuleCoords {
            basis: vec![[1.0, 0.0]],
            origin: [0.0, 0.0],
            coords: ps.points.iter().map(|p| vec![p[0].round() as i64]).collect(),
        }
    } else {
        ModuleCoords { basis: rule.lengths.iter().map(|&l| [l, 0.0]).collect(), origin: [0.0, 0.0], coords }
    });
    ps.colors = Some(word.iter().map(|&l| l as u32).collect());
    ps.alphabet = rule.alphabet.clone();
    ps.weights = rule.weights.as_ref().map(|w| word.iter().map(|&l| w[l]).collect());
    ps.provenance = format!("substitution_chain{{iterations={iterations},axiom={axiom}}}");
    Ok(ps)
}
