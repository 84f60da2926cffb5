//! Exact dimer counts for the domino (square lattice) and lozenge
//! (hexagonal lattice) cases.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Widest strip the domino transfer matrix accepts.
pub const MAX_DOMINO_WIDTH: u32 = 24;
/// Cap on `2^width · limbs`, i.e. on the transfer vector's memory in words.
pub const MAX_DOMINO_WORDS: usize = 1 << 26;
/// Cap on the number of row states in the lozenge transfer.
pub const MAX_LOZENGE_STATES: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TilingShape {
    Rectangle { rows: u32, cols: u32 },
    Hexagon { a: u32, b: u32, c: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TilingCountResult {
    pub shape: TilingShape,
    #[serde(serialize_with = "decimal")]
    pub count: BigUint,
    /// Cells (domino) or lozenges (hexagon) the count is normalised by.
    pub sites: u64,
    pub log_count_per_site: f64,
}

fn decimal<S: Serializer>(n: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_str_radix(10))
}

/// Natural log of a big integer; `-inf` for zero.
pub fn ln_big(n: &BigUint) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

impl TilingCountResult {
    fn new(shape: TilingShape, count: BigUint, sites: u64) -> Self {
        let log_count_per_site = ln_big(&count) / sites as f64;
        TilingCountResult { shape, count, sites, log_count_per_site }
    }
}

/// Domino tilings of the `m × n` rectangle by a broken-profile transfer
/// matrix along the longer side.
///
/// Counts are accumulated in fixed-width limbs sized from the bound
/// `count ≤ 2^{mn/2}` and converted to a big integer at the end, so the
/// result is exact. Odd areas give count 0.
pub fn domino_count(m: u32, n: u32) -> Result<TilingCountResult> {
    if m == 0 || n == 0 {
        return Err(Error::Validation("rectangle sides must be positive".into()));
    }
    let shape = TilingShape::Rectangle { rows: m, cols: n };
    let sites = m as u64 * n as u64;
    if sites % 2 == 1 {
        return Ok(TilingCountResult::new(shape, BigUint::zero(), sites));
    }
    let (w, len) = (m.min(n), m.max(n));
    if w > MAX_DOMINO_WIDTH {
        return Err(Error::Capacity(format!("strip width {w} exceeds {MAX_DOMINO_WIDTH}")));
    }
    let limbs = (sites / 2 / 64 + 1) as usize;
    let states = 1usize << w;
    if states.saturating_mul(limbs) > MAX_DOMINO_WORDS {
        return Err(Error::Capacity(format!("{m}×{n} needs {states}×{limbs} words")));
    }

    // bit j of a profile marks column j as already covered; bits below the
    // current column belong to the next row, the rest to the current row
    let mut dp = vec![0u64; states * limbs];
    dp[0] = 1;
    let w = w as usize;
    for _row in 0..len {
        for j in 0..w {
            let bj = 1usize << j;
            if j + 1 < w {
                let bk = 1usize << (j + 1);
                for base in 0..states {
                    if base & (bj | bk) != 0 {
                        continue;
                    }
                    let (s00, s01, s10, s11) = (base, base | bj, base | bk, base | bj | bk);
                    // new[00] = old[01], new[01] = old[00],
                    // new[10] = old[11] + old[00], new[11] = old[10]
                    for l in 0..limbs {
                        let (a, b, c, d) =
                            (dp[s00 * limbs + l], dp[s10 * limbs + l], dp[s01 * limbs + l], dp[s11 * limbs + l]);
                        dp[s00 * limbs + l] = c;
                        dp[s01 * limbs + l] = a;
                        dp[s10 * limbs + l] = d;
                        dp[s11 * limbs + l] = b;
                    }
                    add_into(&mut dp, s10 * limbs, s01 * limbs, limbs);
                }
            } else {
                for base in 0..states {
                    if base & bj != 0 {
                        continue;
                    }
                    for l in 0..limbs {
                        dp.swap(base * limbs + l, (base | bj) * limbs + l);
                    }
                }
            }
        }
    }
    let count = BigUint::from_slice(
        &dp[..limbs].iter().flat_map(|&x| [x as u32, (x >> 32) as u32]).collect::<Vec<_>>(),
    );
    Ok(TilingCountResult::new(shape, count, sites))
}

/// `dp[dst..] += dp[src..]` over `limbs` little-endian words. The limb
/// count is sized so this never carries out of the top word.
fn add_into(dp: &mut [u64], dst: usize, src: usize, limbs: usize) {
    let mut carry = 0u64;
    for l in 0..limbs {
        let (s1, c1) = dp[dst + l].overflowing_add(dp[src + l]);
        let (s2, c2) = s1.overflowing_add(carry);
        dp[dst + l] = s2;
        carry = (c1 as u64) + (c2 as u64);
    }
    debug_assert_eq!(carry, 0);
}

/// Lozenge tilings of the hexagon with sides `a, b, c, a, b, c`.
///
/// Tilings are in bijection with plane partitions in an `a × b × c` box:
/// `a` rows, each a partition with at most `b` parts bounded by `c`, every
/// row dominated by the one before. The transfer step
/// `f'(μ) = Σ_{λ ≥ μ} f(λ)` is evaluated one coordinate at a time.
pub fn lozenge_count(a: u32, b: u32, c: u32) -> Result<TilingCountResult> {
    if a == 0 || b == 0 || c == 0 {
        return Err(Error::Validation("hexagon sides must be positive".into()));
    }
    let shape = TilingShape::Hexagon { a, b, c };
    let sites = a as u64 * b as u64 + b as u64 * c as u64 + c as u64 * a as u64;
    // rows have b parts; use the symmetry to keep b the smallest side
    let mut sides = [a, b, c];
    sides.sort_unstable();
    let [parts, rows, bound] = sides;
    let (parts, bound) = (parts as usize, bound as u8);
    if bound as u32 != sides[2] || sides[2] > 255 {
        return Err(Error::Capacity("hexagon side exceeds 255".into()));
    }

    let states = partitions_in_box(parts, bound, MAX_LOZENGE_STATES)?;
    let index: HashMap<&[u8], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    // successor[k][i]: state i with part k raised by one and the parts
    // before it lifted to stay weakly decreasing
    let successor: Vec<Vec<Option<usize>>> = (0..parts)
        .map(|k| {
            states
                .iter()
                .map(|s| {
                    if s[k] == bound {
                        return None;
                    }
                    let mut t = s.clone();
                    t[k] += 1;
                    for j in 0..k {
                        t[j] = t[j].max(t[k]);
                    }
                    Some(index[t.as_slice()])
                })
                .collect()
        })
        .collect();
    // order by decreasing value of part k so successors come first
    let orders: Vec<Vec<usize>> = (0..parts)
        .map(|k| {
            let mut o: Vec<usize> = (0..states.len()).collect();
            o.sort_by_key(|&i| std::cmp::Reverse(states[i][k]));
            o
        })
        .collect();

    let mut f = vec![BigUint::from(1u32); states.len()];
    for _ in 1..rows {
        for k in 0..parts {
            for &i in &orders[k] {
                if let Some(s) = successor[k][i] {
                    let add = f[s].clone();
                    f[i] += add;
                }
            }
        }
    }
    let count: BigUint = f.iter().sum();
    Ok(TilingCountResult::new(shape, count, sites))
}

/// Weakly decreasing sequences of length `parts` with entries in `0..=bound`.
fn partitions_in_box(parts: usize, bound: u8, cap: usize) -> Result<Vec<Vec<u8>>> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; parts];
    fn rec(k: usize, max: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>, cap: usize) -> Result<()> {
        if k == cur.len() {
            if out.len() >= cap {
                return Err(Error::Capacity(format!("more than {cap} row states")));
            }
            out.push(cur.clone());
            return Ok(());
        }
        for v in 0..=max {
            cur[k] = v;
            rec(k + 1, v, cur, out, cap)?;
        }
        Ok(())
    }
    rec(0, bound, &mut cur, &mut out, cap)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Backtracking enumeration: cover the first free cell either way.
    fn brute_dominoes(m: usize, n: usize) -> u64 {
        fn go(grid: &mut Vec<bool>, m: usize, n: usize) -> u64 {
            let Some(p) = grid.iter().position(|&x| !x) else { return 1 };
            let (i, j) = (p / n, p % n);
            let mut total = 0;
            if j + 1 < n && !grid[p + 1] {
                grid[p] = true;
                grid[p + 1] = true;
                total += go(grid, m, n);
                grid[p] = false;
                grid[p + 1] = false;
            }
            if i + 1 < m && !grid[p + n] {
                grid[p] = true;
                grid[p + n] = true;
                total += go(grid, m, n);
                grid[p] = false;
                grid[p + n] = false;
            }
            total
        }
        go(&mut vec![false; m * n], m, n)
    }

    /// Boxed plane partitions: ∏ (i+j+k-1)/(i+j+k-2).
    fn macmahon(a: u32, b: u32, c: u32) -> BigUint {
        let (mut num, mut den) = (BigUint::from(1u32), BigUint::from(1u32));
        for i in 1..=a {
            for j in 1..=b {
                for k in 1..=c {
                    num *= i + j + k - 1;
                    den *= i + j + k - 2;
                }
            }
        }
        num / den
    }

    #[test]
    fn domino_small_cases() {
        assert_eq!(domino_count(2, 2).unwrap().count, BigUint::from(2u32));
        assert_eq!(domino_count(2, 3).unwrap().count, BigUint::from(3u32));
        assert_eq!(domino_count(4, 4).unwrap().count, BigUint::from(36u32));
        assert_eq!(domino_count(3, 3).unwrap().count, BigUint::zero());
        assert!(domino_count(3, 3).unwrap().log_count_per_site.is_infinite());
    }

    #[test]
    fn domino_matches_enumeration() {
        for m in 1..=6 {
            for n in 1..=7 {
                let got = domino_count(m, n).unwrap().count;
                assert_eq!(got, BigUint::from(brute_dominoes(m as usize, n as usize)), "{m}×{n}");
                assert_eq!(got, domino_count(n, m).unwrap().count);
            }
        }
    }

    #[test]
    fn domino_large_is_exact() {
        // 8×8 board: 12988816; 2×n is Fibonacci
        assert_eq!(domino_count(8, 8).unwrap().count, BigUint::from(12_988_816u32));
        let mut fib = (BigUint::from(1u32), BigUint::from(1u32));
        for _ in 0..299 {
            fib = (fib.1.clone(), fib.0 + fib.1);
        }
        assert_eq!(domino_count(2, 300).unwrap().count, fib.1);
    }

    #[test]
    fn domino_per_site_increases_on_squares() {
        let v: Vec<f64> = (1..=7).map(|k| domino_count(2 * k, 2 * k).unwrap().log_count_per_site).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        assert!(v[6] < 0.2916);
    }

    #[test]
    fn domino_capacity() {
        assert!(matches!(domino_count(25, 30), Err(Error::Capacity(_))));
    }

    #[test]
    fn lozenge_matches_product_formula() {
        assert_eq!(lozenge_count(1, 1, 1).unwrap().count, BigUint::from(2u32));
        assert_eq!(lozenge_count(2, 2, 2).unwrap().count, BigUint::from(20u32));
        for c in 1..=5 {
            assert_eq!(lozenge_count(1, 1, c).unwrap().count, BigUint::from(c + 1));
        }
        for a in 1..=4 {
            for b in 1..=4 {
                for c in 1..=4 {
                    let got = lozenge_count(a, b, c).unwrap().count;
                    assert_eq!(got, macmahon(a, b, c), "({a},{b},{c})");
                }
            }
        }
        assert_eq!(lozenge_count(7, 7, 7).unwrap().count, macmahon(7, 7, 7));
    }

    #[test]
    fn lozenge_symmetric() {
        let base = lozenge_count(2, 3, 5).unwrap();
        for (a, b, c) in [(3, 2, 5), (5, 3, 2), (2, 5, 3)] {
            assert_eq!(lozenge_count(a, b, c).unwrap().count, base.count);
        }
        assert_eq!(base.sites, 6 + 15 + 10);
    }
}
