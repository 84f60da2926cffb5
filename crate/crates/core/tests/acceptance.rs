//! Acceptance criteria 1-10. Each criterion prints one PASS/FAIL line; the
//! run exits nonzero if any failed.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::f64::consts::FRAC_1_SQRT_2;
use std::time::{Duration, Instant};

use flc_core::delone::{min_gap, verify_delone};
use flc_core::diffraction::{intensity, pure_point_diagnostic, rational_grid, uniform_grid, DiagnosticConfig, Verdict};
use flc_core::generators::{
    domino_count, lattice, lozenge_count, model_set, substitution_chain, uniform_random, visible_points,
    CutProjectScheme, SubstitutionRule,
};
use flc_core::hullmetric::{
    check_htop_equals_hpc, cover_count, epsilon0, hull_metric, kronecker_entropy_demo, CheckStatus, HtopOptions,
    KroneckerSystem,
};
use flc_core::index::{build_index, linear_scan};
use flc_core::io::{parse_point_set, write_point_set};
use flc_core::mahler::{mahler_measure, mahler_vs_dimer_report, DimerModel, LaurentPolynomial, QuadratureOptions};
use flc_core::patchstat::{check_repetitivity_bound, entropy_estimate, extract_patches, patch_count, repetitivity_estimate};
use flc_core::{translate, BallQuery, PointSet, Vector, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static FAILED: AtomicUsize = AtomicUsize::new(0);

fn report(n: u32, ok: bool, detail: String) {
    println!("criterion {n}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    if !ok {
        FAILED.fetch_add(1, Ordering::Relaxed);
    }
}

fn fibonacci_sample() -> PointSet {
    model_set(&CutProjectScheme::fibonacci(), Window::interval(0.0, 14000.0)).unwrap()
}

fn criterion_01_lattice_zero_entropy() {
    let t = Instant::now();
    let z = lattice(&[[1.0, 0.0]], Window::interval(-200.0, 200.0)).unwrap();
    let z2 = lattice(&[[1.0, 0.0], [0.0, 1.0]], Window::centered(2, 30.0)).unwrap();
    let radii = [1.0, 2.0, 3.0, 5.0, 8.0];
    let mut ok = true;
    for ps in [&z, &z2] {
        for &d in &radii {
            ok &= patch_count(ps, d).unwrap() == 1;
        }
        let curve = entropy_estimate(ps, &radii).unwrap();
        ok &= curve.points.iter().all(|p| p.value == 0.0) && curve.limsup_proxy == 0.0;
    }
    let el = t.elapsed();
    report(1, ok && el < Duration::from_secs(1), format!("one patch and zero entropy for Z and Z^2, {el:?}"));
}

fn criterion_02_model_set_entropy_decay() {
    let t = Instant::now();
    let ps = fibonacci_sample();
    let curve = entropy_estimate(&ps, &[10.0, 20.0, 30.0, 40.0, 50.0]).unwrap();
    let el = t.elapsed();
    let v: Vec<f64> = curve.points.iter().map(|p| p.value).collect();
    let tail = v[4];
    let ratio = v[0] / v[4];
    let ok = ps.len() >= 10_000 && tail <= 0.05 && ratio >= 4.0 && el < Duration::from_secs(30);
    report(
        2,
        ok,
        format!("{} points, values {v:.4?}, tail {tail:.4} <= 0.05, decrease {ratio:.2}x >= 4x, {el:?}", ps.len()),
    );
}

fn criterion_03_htop_equals_hpc() {
    let t = Instant::now();
    let ps = fibonacci_sample();
    let eps0 = epsilon0(ps.r, ps.big_r);
    let eps = 0.9 * eps0;
    let recs = check_htop_equals_hpc(&ps, &[4.0, 8.0, 12.0], eps, &HtopOptions::for_sample(&ps, eps)).unwrap();
    let el = t.elapsed();
    let mut ok = el < Duration::from_secs(300);
    let mut detail = Vec::new();
    for r in &recs {
        let lower = r.min_pairwise_lower.unwrap_or(f64::NAN);
        ok &= lower >= eps0 - 1e-3 && r.separation_check == CheckStatus::Pass;
        ok &= r.n_hat <= r.m_eps * r.patch_count_rho && r.covering_check == CheckStatus::Pass;
        ok &= r.m_eps == cover_count(1, ps.big_r, eps);
        detail.push(format!(
            "D={} min d_D={:.4} N_hat={} <= {}*{}",
            r.d, lower, r.n_hat, r.m_eps, r.patch_count_rho
        ));
    }
    report(3, ok, format!("eps0={eps0:.4}; {}; {el:?}", detail.join("; ")));
}

/// Pairs sharing the origin that differ inside `B_S`, with the packing
/// radius taken from both sets.
fn lemma_pairs() -> Vec<(PointSet, PointSet, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::new();
    for case in 0..50 {
        let planar = case >= 25;
        let a = rng.gen_range(0.6..2.0);
        let (dim, basis, window) = if planar {
            let hex = case % 2 == 0;
            let b = if hex { vec![[a, 0.0], [0.5 * a, 0.75f64.sqrt() * a]] } else { vec![[a, 0.0], [0.0, a]] };
            (2, b, Window::centered(2, 12.0))
        } else {
            (1, vec![[a, 0.0]], Window::interval(-30.0, 30.0))
        };
        let base = lattice(&basis, window).unwrap();
        // a nonzero lattice point within a few spacings
        let candidates: Vec<usize> = (0..base.len())
            .filter(|&i| {
                let n = base.points[i][0].hypot(base.points[i][1]);
                n > 1e-9 && n <= 3.0 * a
            })
            .collect();
        let p = candidates[rng.gen_range(0..candidates.len())];
        let mut pts = base.points.clone();
        let mode = case % 3;
        match mode {
            0 => {
                let delta = rng.gen_range(0.05..0.4) * a;
                let ang: f64 = if dim == 1 { 0.0 } else { rng.gen_range(0.0..std::f64::consts::TAU) };
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                pts[p] = [pts[p][0] + sign * delta * ang.cos(), pts[p][1] + delta * ang.sin()];
            }
            1 => {
                pts.remove(p);
            }
            _ => {
                // extra point on the segment towards the origin, closer to p than any lattice point
                let f = rng.gen_range(0.2..0.45) * a / base.points[p][0].hypot(base.points[p][1]);
                pts.push([(1.0 - f) * pts[p][0], (1.0 - f) * pts[p][1]]);
            }
        }
        // smallest S separating the two restrictions
        let s = base
            .points
            .iter()
            .filter(|q| !pts.contains(q))
            .chain(pts.iter().filter(|q| !base.points.contains(q)))
            .map(|q| q[0].hypot(q[1]))
            .fold(f64::INFINITY, f64::min)
            + 1e-6;
        let mut xi1 = base.clone();
        let mut xi2 = PointSet::new(dim, pts, base.r, base.big_r, window);
        xi2.module = None;
        let r = 0.5 * min_gap(dim, &xi1.points).min(min_gap(dim, &xi2.points));
        xi1.r = r;
        xi2.r = r;
        out.push((xi1, xi2, s));
    }
    out
}

fn criterion_04_lemma_geometry() {
    let pairs = lemma_pairs();
    let mut good = 0;
    let mut good_shifted = 0;
    let mut worst = f64::INFINITY;
    for (xi1, xi2, s) in &pairs {
        let bound = FRAC_1_SQRT_2.min(xi1.r / 2.0).min(1.0 / s);
        let m = hull_metric(xi1, xi2, 1e-3).unwrap();
        worst = worst.min(m.lower - bound);
        if m.lower >= bound - 1e-3 {
            good += 1;
        }
        // a differing point at distance S leaves B_{1/s} under shifts of size s unless s(S + s) <= 1
        let shifted = FRAC_1_SQRT_2.min(xi1.r / 2.0).min(0.5 * ((s * s + 4.0).sqrt() - s));
        if m.lower >= shifted - 1e-3 {
            good_shifted += 1;
        }
    }
    report(4, good == pairs.len(), format!(
            "{good}/{} pairs, smallest margin {worst:.4}; with 1/S replaced by (sqrt(S^2+4)-S)/2: {good_shifted}/{}",
            pairs.len(),
            pairs.len()
        ));
}

fn criterion_05_kronecker() {
    let t = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for k in 1..=3 {
        let sys = if k == 1 { KroneckerSystem { rotation: vec![2f64.sqrt().fract()] } } else { KroneckerSystem::sqrt_primes(k) };
        let recs = kronecker_entropy_demo(&sys, 0.1, &[1.0, 10.0, 100.0], 200);
        let n: Vec<usize> = recs.iter().map(|r| r.n_hat).collect();
        ok &= n.iter().all(|&x| x == n[0]);
        detail.push(format!("k={k}: {n:?}"));
    }
    let el = t.elapsed();
    report(5, ok && el < Duration::from_secs(10), format!("{}; {el:?}", detail.join(", ")));
}

fn criterion_06_repetitivity() {
    let ps = fibonacci_sample();
    let mut ratios = Vec::new();
    let mut holds = true;
    for d in [2.0, 4.0, 8.0, 16.0] {
        let est = repetitivity_estimate(&ps, d, 32).unwrap();
        ratios.push(est.f_hat / d);
        holds &= check_repetitivity_bound(&ps, d, 32).unwrap().holds;
    }
    let (mx, mn) = ratios.iter().fold((0.0f64, f64::INFINITY), |(a, b), &r| (a.max(r), b.min(r)));
    report(6, holds && mx / mn <= 2.0, format!("F_hat/D = {ratios:.3?}, spread {:.3}, bound holds: {holds}", mx / mn));
}

/// Bragg intensity of the Fibonacci model set at `(k, k*)`:
/// `(dens · sinc(π k* |W|))²`.
fn model_set_oracle(scheme: &CutProjectScheme, kstar: f64) -> f64 {
    let l = scheme.window_int.hi - scheme.window_int.lo;
    let dens = l / scheme.covolume();
    let x = std::f64::consts::PI * kstar * l;
    let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
    (dens * sinc).powi(2)
}

fn criterion_07_diffraction_contrast() {
    let t = Instant::now();
    let scheme = CutProjectScheme::fibonacci();
    let fib = fibonacci_sample();
    let module = scheme.fourier_module(4.0, 5.0).unwrap();
    let grid: Vec<Vector> = module.iter().map(|m| [m.0, 0.0]).collect();
    let df = pure_point_diagnostic(&fib, &DiagnosticConfig::new(grid)).unwrap();
    let mut peaks = df.report.peaks.clone();
    peaks.sort_by(|a, b| b.intensity.total_cmp(&a.intensity));
    let mut worst: f64 = 0.0;
    for p in peaks.iter().take(10) {
        let kstar = module.iter().find(|m| (m.0 - p.k[0]).abs() < 1e-12).unwrap().1;
        let want = model_set_oracle(&scheme, kstar);
        worst = worst.max((p.intensity - want).abs() / want);
    }
    let tm = substitution_chain(&SubstitutionRule::thue_morse(), 14, "a").unwrap();
    let dt = pure_point_diagnostic(&tm, &DiagnosticConfig::new(uniform_grid(4096, 1.0))).unwrap();
    let el = t.elapsed();
    let ok = df.verdict == Verdict::ConsistentWithPurePoint
        && df.report.pure_point_fraction >= 0.95
        && dt.verdict == Verdict::ContinuousComponentDetected
        && dt.report.pure_point_fraction <= 0.7
        && peaks.len() >= 10
        && worst <= 0.03
        && el < Duration::from_secs(120);
    report(
        7,
        ok,
        format!(
            "Fibonacci {:?} fraction {:.4}, top-10 peak error {:.2e}; Thue-Morse {:?} fraction {:.4}; {el:?}",
            df.verdict, df.report.pure_point_fraction, worst, dt.verdict, dt.report.pure_point_fraction
        ),
    );
}

fn criterion_08_visible_points() {
    let ps = visible_points(1000).unwrap();
    let radii: Vec<f64> = (1..=6).map(f64::from).collect();
    let curve = entropy_estimate(&ps, &radii).unwrap();
    let v: Vec<f64> = curve.points.iter().map(|p| p.value).collect();
    let positive = v.iter().all(|&x| x > 0.0);
    let nondecreasing = v.windows(2).all(|w| w[1] >= w[0]);
    let diag = pure_point_diagnostic(&ps, &DiagnosticConfig::new(rational_grid(8))).unwrap();
    let dense = verify_delone(&ps).unwrap().relatively_dense;
    let ok = positive && nondecreasing && diag.verdict == Verdict::ConsistentWithPurePoint && !dense;
    report(
        8,
        ok,
        format!(
            "entropy {v:.4?} positive={positive} nondecreasing={nondecreasing}; {:?} fraction {:.4}; relatively_dense={dense}",
            diag.verdict, diag.report.pure_point_fraction
        ),
    );
}

/// Domino tilings of an `m × n` board by first-empty-cell recursion.
fn brute_domino(m: usize, n: usize) -> u64 {
    fn go(board: &mut Vec<bool>, m: usize, n: usize) -> u64 {
        let Some(i) = board.iter().position(|&f| !f) else { return 1 };
        let (r, c) = (i / n, i % n);
        let mut total = 0;
        if c + 1 < n && !board[i + 1] {
            board[i] = true;
            board[i + 1] = true;
            total += go(board, m, n);
            board[i] = false;
            board[i + 1] = false;
        }
        if r + 1 < m && !board[i + n] {
            board[i] = true;
            board[i + n] = true;
            total += go(board, m, n);
            board[i] = false;
            board[i + n] = false;
        }
        total
    }
    go(&mut vec![false; m * n], m, n)
}

/// Lozenge tilings of the `(a, b, c)` hexagon as plane partitions in an
/// `a × b` box with entries at most `c`, enumerated exhaustively.
fn brute_lozenge(a: usize, b: usize, c: u32) -> u64 {
    let cells = a * b;
    let mut count = 0;
    let total = (c as u64 + 1).pow(cells as u32);
    for code in 0..total {
        let mut h = vec![0u32; cells];
        let mut x = code;
        for v in h.iter_mut() {
            *v = (x % (c as u64 + 1)) as u32;
            x /= c as u64 + 1;
        }
        let ok = (0..a).all(|i| {
            (0..b).all(|j| {
                (j + 1 >= b || h[i * b + j] >= h[i * b + j + 1]) && (i + 1 >= a || h[i * b + j] >= h[(i + 1) * b + j])
            })
        });
        count += ok as u64;
    }
    count
}

fn criterion_09_mahler_dimer() {
    let t = Instant::now();
    let opts = QuadratureOptions::default();
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, p) in [("1+x+y", LaurentPolynomial::lozenge()), ("4+x+1/x+y+1/y", LaurentPolynomial::domino())] {
        let q = mahler_measure(&p, &opts).unwrap();
        let k = q.levels.len();
        let delta = (q.levels[k - 1].1 - q.levels[k - 2].1).abs();
        ok &= q.converged && delta <= 5e-4;
        detail.push(format!("m({name})={:.5} last delta {delta:.1e}", q.value));
    }
    for (model, limit) in [(DimerModel::Domino, 0.05), (DimerModel::Lozenge, 0.08)] {
        let rep = mahler_vs_dimer_report(model, &model.default_sizes(), &opts).unwrap();
        ok &= rep.per_site > 0.0 && rep.ratio_stability <= limit;
        detail.push(format!(
            "{model:?} per-site {:.4} ratio {:.4} stability {:.2e}",
            rep.per_site, rep.ratio, rep.ratio_stability
        ));
    }
    let d44 = domino_count(4, 4).unwrap().count;
    let l222 = lozenge_count(2, 2, 2).unwrap().count;
    let (bd, bl) = (brute_domino(4, 4), brute_lozenge(2, 2, 2));
    ok &= d44 == 36u32.into() && l222 == 20u32.into() && bd == 36 && bl == 20;
    ok &= domino_count(3, 6).unwrap().count == brute_domino(3, 6).into();
    ok &= lozenge_count(2, 3, 2).unwrap().count == brute_lozenge(2, 3, 2).into();
    let el = t.elapsed();
    ok &= el < Duration::from_secs(180);
    detail.push(format!("domino(4,4)={d44} lozenge(2,2,2)={l222}"));
    report(9, ok, format!("{}; {el:?}", detail.join("; ")));
}

fn criterion_10_oracles_and_determinism() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let fib = model_set(&CutProjectScheme::fibonacci(), Window::interval(0.0, 3000.0)).unwrap();
    let plane = uniform_random(3000, Window::centered(2, 40.0), 3).unwrap();

    // index against linear scan
    let mut index_ok = true;
    for ps in [&fib, &plane] {
        let idx = build_index(ps);
        for _ in 0..500 {
            let w = ps.window;
            let mut c = [0.0; 2];
            for a in 0..ps.dim {
                c[a] = rng.gen_range(w.lo[a]..w.hi[a]);
            }
            let q = BallQuery::new(c, rng.gen_range(0.0..6.0)).unwrap();
            index_ok &= idx.points_in_ball(&q) == linear_scan(&ps.points, &q);
        }
    }

    // patch tables across runs and point orderings
    let canonical = |ps: &PointSet, d: f64| -> BTreeMap<[u8; 32], (usize, Vector)> {
        let t = extract_patches(ps, d).unwrap();
        t.entries.iter().map(|(k, e)| (*k, (e.count, ps.points[e.first_center]))).collect()
    };
    let mut shuffled = fib.clone();
    let mut order: Vec<usize> = (0..fib.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    shuffled = shuffled.select(&order);
    let tables_ok = canonical(&fib, 6.0) == canonical(&fib, 6.0) && canonical(&fib, 6.0) == canonical(&shuffled, 6.0);

    // file round trip
    let tm = substitution_chain(&SubstitutionRule::thue_morse(), 8, "a").unwrap();
    let round_ok = [&fib, &plane, &tm].iter().all(|ps| {
        let text = write_point_set(ps);
        let back = parse_point_set(&text).unwrap();
        back == **ps && write_point_set(&back) == text
    });

    // spectrum under translation
    let ks = uniform_grid(200, 3.0);
    let a = intensity(&fib, &ks);
    let b = intensity(&translate(&fib, [17.375, 0.0]), &ks);
    let spec_ok = a.intensities.iter().zip(&b.intensities).all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + x.abs()));

    report(
        10,
        index_ok && tables_ok && round_ok && spec_ok,
        format!("index={index_ok} tables={tables_ok} round-trip={round_ok} translation={spec_ok}"),
    );
}

fn main() {
    let criteria: [(u32, fn()); 10] = [
        (1, criterion_01_lattice_zero_entropy),
        (2, criterion_02_model_set_entropy_decay),
        (3, criterion_03_htop_equals_hpc),
        (4, criterion_04_lemma_geometry),
        (5, criterion_05_kronecker),
        (6, criterion_06_repetitivity),
        (7, criterion_07_diffraction_contrast),
        (8, criterion_08_visible_points),
        (9, criterion_09_mahler_dimer),
        (10, criterion_10_oracles_and_determinism),
    ];
    for (n, run) in criteria {
        if std::panic::catch_unwind(run).is_err() {
            report(n, false, "panicked".into());
        }
    }
    let failed = FAILED.load(Ordering::Relaxed);
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
