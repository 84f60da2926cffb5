use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use flc_core::diffraction::{self, DiagnosticConfig, Spectrum};
use flc_core::generators::{self, CutProjectScheme, SubstitutionRule};
use flc_core::hullmetric::{self, HtopOptions, HullSample, KroneckerSystem};
use flc_core::io::{load_point_set, save_point_set, write_point_set};
use flc_core::mahler::{self, DimerModel, LaurentPolynomial, QuadratureOptions};
use flc_core::{crop, delone, patchstat, Error, PointSet, Vector, Window};

#[derive(Parser, Debug)]
#[command(name = "flc", version, about = "Order diagnostics for point sets with finite local complexity")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "FLC_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Recorded in every output header; used by seeded generators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the result here instead of stdout.
    #[arg(short = 'o', long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a point set sample (lattice, model set, substitution tiling, visible points, ...).
    Generate(GenerateArgs),
    /// Delone check: uniform discreteness and relative denseness.
    Verify { input: PathBuf },
    /// Count distinct D-patches (finite local complexity).
    Patches {
        input: PathBuf,
        #[arg(long = "D")]
        d: f64,
        /// Also list every patch with its count.
        #[arg(long)]
        list: bool,
    },
    /// Patch counting entropy log(card p(n))/vol(B_n) over radii.
    Entropy {
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
    },
    /// Patch frequencies in anchor boxes (uniform cluster frequencies).
    Frequencies {
        input: PathBuf,
        #[arg(long = "D")]
        d: f64,
        /// Anchor boxes "lo,hi[,lo2,hi2]"; default splits the window into thirds.
        #[arg(long = "anchor", allow_hyphen_values = true)]
        anchors: Vec<String>,
    },
    /// Repetitivity function estimate and the linear repetitivity bound.
    Repetitivity {
        input: PathBuf,
        #[arg(long = "D")]
        d: f64,
        #[arg(long, default_value_t = patchstat::DEFAULT_ANCHORS)]
        anchors: usize,
    },
    /// Hull metric d (or orbit metric d_D with --D) between two samples.
    Metric {
        first: PathBuf,
        second: PathBuf,
        #[arg(long = "D")]
        d: Option<f64>,
        #[arg(long, default_value_t = hullmetric::DEFAULT_RESOLUTION)]
        resolution: f64,
    },
    /// Greedy (D, eps)-separated set in a hull sample (topological entropy).
    Separated {
        input: PathBuf,
        #[arg(long = "D")]
        d: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 48)]
        hull_points: usize,
    },
    /// Topological entropy equals patch counting entropy: both inequalities at finite scale.
    TheoremCheck {
        input: PathBuf,
        #[arg(long = "D", value_delimiter = ',', required = true)]
        d: Vec<f64>,
        /// A number, or "auto" for 0.9·eps0.
        #[arg(long, default_value = "auto")]
        eps: String,
        #[arg(long, default_value_t = hullmetric::DEFAULT_RESOLUTION)]
        resolution: f64,
    },
    /// Separated-set sizes for a Kronecker (torus rotation) system: zero entropy.
    Kronecker {
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long = "D", value_delimiter = ',', default_values_t = vec![1.0, 10.0, 100.0])]
        d: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Finite-volume autocorrelation coefficients.
    Autocorr {
        input: PathBuf,
        #[arg(long)]
        zmax: f64,
    },
    /// Diffraction intensity |Σ w e(-k·x)|²/vol on a k grid.
    Spectrum {
        input: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Bragg peak detection by volume scaling on centered boxes.
    Peaks {
        input: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 0.5, 1.0])]
        fractions: Vec<f64>,
    },
    /// Pure point diffraction diagnostic with verdict.
    Diagnose {
        input: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 0.5, 1.0])]
        fractions: Vec<f64>,
    },
    /// Logarithmic Mahler measure of a Laurent polynomial.
    Mahler {
        /// Terms "a,b,re[,im]" separated by spaces, for c·x^a·y^b.
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        #[arg(long, default_value_t = 64)]
        base_grid: usize,
        #[arg(long, default_value_t = 6)]
        levels: usize,
    },
    /// Exact dimer counts and per-site entropy extrapolation.
    Dimer {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<u32>,
    },
    /// Mahler measure versus dimer per-site entropy.
    Report {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<u32>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Domino,
    Lozenge,
}

impl From<ModelArg> for DimerModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Domino => DimerModel::Domino,
            ModelArg::Lozenge => DimerModel::Lozenge,
        }
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// "lo,hi" or "lo,hi,lo2,hi2".
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// Lattice basis "x,y;x,y".
    #[arg(long, allow_hyphen_values = true)]
    basis: Option<String>,
    /// Substitution rule for --kind substitution.
    #[arg(long, value_enum, default_value_t = RuleArg::Fibonacci)]
    rule: RuleArg,
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    #[arg(long, default_value = "a")]
    axiom: String,
    /// Bound for visible points, N for the Euler set, count for random points.
    #[arg(long)]
    n: Option<u32>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Lattice,
    Fibonacci,
    Substitution,
    Visible,
    Euler,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RuleArg {
    Fibonacci,
    ThueMorse,
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    /// "uniform:N:KMAX", "rational:Q", "fib-module:KMAX:KSTAR" or "list:k1,k2,..".
    #[arg(long, default_value = "uniform:4096:4")]
    grid: String,
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: if e.is_validation() { 1 } else { 2 }, msg: e.to_string() }
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure { code: 1, msg: msg.into() }
}

type Out = std::result::Result<Payload, Failure>;

enum Payload {
    Json(Value),
    /// CSV body plus an equivalent JSON rendering.
    Table { csv: String, json: Value },
    PointSet(PointSet),
}

fn parse_window(s: &str) -> std::result::Result<Window, Failure> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| invalid(format!("bad window '{s}'")))?;
    match v.len() {
        2 if v[0] < v[1] => Ok(Window::interval(v[0], v[1])),
        4 if v[0] < v[1] && v[2] < v[3] => Ok(Window::rect((v[0], v[1]), (v[2], v[3]))),
        _ => Err(invalid(format!("bad window '{s}': expected lo,hi or lo,hi,lo2,hi2 with lo < hi"))),
    }
}

fn parse_basis(s: &str, dim: usize) -> std::result::Result<Vec<Vector>, Failure> {
    let mut out = Vec::new();
    for row in s.split(';') {
        let v: Vec<f64> = row
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| invalid(format!("bad basis '{s}'")))?;
        match v.len() {
            1 => out.push([v[0], 0.0]),
            2 => out.push([v[0], v[1]]),
            _ => return Err(invalid(format!("bad basis row '{row}'"))),
        }
    }
    if out.len() != dim {
        return Err(invalid(format!("basis must have {dim} vectors")));
    }
    Ok(out)
}

fn parse_grid(s: &str) -> std::result::Result<Vec<Vector>, Failure> {
    let bad = || invalid(format!("bad grid '{s}'"));
    let parts: Vec<&str> = s.split(':').collect();
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        ["uniform", n, kmax] => {
            let n: usize = n.parse().map_err(|_| bad())?;
            Ok(diffraction::uniform_grid(n, num(kmax)?))
        }
        ["rational", q] => {
            let q: usize = q.parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            Ok(diffraction::rational_grid(q))
        }
        ["fib-module", kmax, kstar] => {
            let m = CutProjectScheme::fibonacci().fourier_module(num(kmax)?, num(kstar)?)?;
            Ok(m.into_iter().map(|(k, _)| [k, 0.0]).collect())
        }
        ["list", ks] => ks
            .split(';')
            .map(|v| {
                let c: Vec<f64> = v.split(',').map(num).collect::<std::result::Result<_, _>>()?;
                match c.len() {
                    1 => Ok([c[0], 0.0]),
                    2 => Ok([c[0], c[1]]),
                    _ => Err(bad()),
                }
            })
            .collect(),
        _ => Err(bad()),
    }
}

fn positive(name: &str, v: f64) -> std::result::Result<(), Failure> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("--{name} must be positive")))
    }
}

/// Unreadable or malformed input is a usage error.
fn load(path: &Path) -> std::result::Result<PointSet, Failure> {
    load_point_set(path).map_err(|e| Failure { code: 1, msg: format!("{}: {e}", path.display()) })
}

fn generate(a: &GenerateArgs, seed: u64) -> Out {
    let ps = match a.kind {
        Kind::Lattice => {
            let w = parse_window(a.window.as_deref().ok_or_else(|| invalid("--window is required"))?)?;
            if w.dim != a.dim {
                return Err(invalid("window dimension does not match --dim"));
            }
            let basis = match &a.basis {
                Some(b) => parse_basis(b, a.dim)?,
                None if a.dim == 1 => vec![[1.0, 0.0]],
                None => vec![[1.0, 0.0], [0.0, 1.0]],
            };
            generators::lattice(&basis, w)?
        }
        Kind::Fibonacci => {
            let w = parse_window(a.window.as_deref().unwrap_or("0,1000"))?;
            generators::model_set(&CutProjectScheme::fibonacci(), w)?
        }
        Kind::Substitution => {
            let rule = match a.rule {
                RuleArg::Fibonacci => SubstitutionRule::fibonacci(),
                RuleArg::ThueMorse => SubstitutionRule::thue_morse(),
            };
            generators::substitution_chain(&rule, a.iterations, &a.axiom)?
        }
        Kind::Visible => generators::visible_points(a.n.unwrap_or(100))?,
        Kind::Euler => generators::euler_gap_set(a.n.unwrap_or(8))?,
        Kind::Random => {
            let w = parse_window(a.window.as_deref().ok_or_else(|| invalid("--window is required"))?)?;
            generators::uniform_random(a.n.unwrap_or(1000) as usize, w, seed)?
        }
    };
    Ok(Payload::PointSet(ps))
}

fn anchors_for(ps: &PointSet, specs: &[String]) -> std::result::Result<Vec<Window>, Failure> {
    if !specs.is_empty() {
        return specs.iter().map(|s| parse_window(s)).collect();
    }
    let w = ps.window;
    let third = w.extent(0) / 3.0;
    Ok((0..3)
        .map(|i| {
            let mut b = w;
            b.lo[0] = w.lo[0] + i as f64 * third;
            b.hi[0] = w.lo[0] + (i + 1) as f64 * third;
            b
        })
        .collect())
}

fn spectrum_table(s: &Spectrum, dim: usize) -> Payload {
    Payload::Table { csv: s.to_csv(dim), json: serde_json::to_value(s).unwrap() }
}

fn spectra_on_boxes(ps: &PointSet, grid: &[Vector], fractions: &[f64]) -> std::result::Result<(Vec<Spectrum>, f64), Failure> {
    let mut spectra = Vec::new();
    let mut mass = 0.0;
    for b in diffraction::centered_boxes(&ps.window, fractions) {
        let sub = crop(ps, b)?;
        mass = (0..sub.len()).map(|i| sub.weight(i).norm_sqr()).sum();
        spectra.push(diffraction::intensity(&sub, grid));
    }
    Ok((spectra, mass))
}

fn run(cmd: &Command, seed: u64) -> Out {
    let js = |v: Value| Ok(Payload::Json(v));
    let to = |x: &dyn erased::Ser| x.value();
    match cmd {
        Command::Generate(a) => generate(a, seed),
        Command::Verify { input } => {
            let ps = load(input)?;
            js(to(&delone::verify_delone(&ps)?))
        }
        Command::Patches { input, d, list } => {
            positive("D", *d)?;
            let ps = load(input)?;
            let table = patchstat::extract_patches(&ps, *d)?;
            let mut out = json!({ "D": d, "patch_count": table.len(), "n_centers": table.n_centers });
            if *list {
                out["table"] = table.to_json(&ps);
            }
            js(out)
        }
        Command::Entropy { input, radii } => {
            let ps = load(input)?;
            let curve = patchstat::entropy_estimate(&ps, radii)?;
            let mut csv = String::from("n,patch_count,value\n");
            for p in &curve.points {
                csv.push_str(&format!("{},{},{}\n", p.radius, p.count, p.value));
            }
            Ok(Payload::Table { csv, json: to(&curve) })
        }
        Command::Frequencies { input, d, anchors } => {
            positive("D", *d)?;
            let ps = load(input)?;
            let boxes = anchors_for(&ps, anchors)?;
            js(to(&patchstat::patch_frequencies(&ps, *d, &boxes)?))
        }
        Command::Repetitivity { input, d, anchors } => {
            positive("D", *d)?;
            let ps = load(input)?;
            let est = patchstat::repetitivity_estimate(&ps, *d, *anchors)?;
            let bound = patchstat::check_repetitivity_bound(&ps, *d, *anchors)?;
            js(json!({ "estimate": to(&est), "bound": to(&bound) }))
        }
        Command::Metric { first, second, d, resolution } => {
            positive("resolution", *resolution)?;
            let (a, b) = (load(first)?, load(second)?);
            let m = match d {
                Some(d) => hullmetric::orbit_metric(&a, &b, *d, *resolution)?,
                None => hullmetric::hull_metric(&a, &b, *resolution)?,
            };
            js(json!({ "D": d, "resolution": resolution, "bracket": to(&m) }))
        }
        Command::Separated { input, d, eps, hull_points } => {
            positive("eps", *eps)?;
            let ps = load(input)?;
            let opts = HtopOptions::for_sample(&ps, *eps);
            let hs = HullSample::central(&ps, *hull_points, &opts.hull_offsets)?;
            let sep = hullmetric::separated_set(&hs, *d, *eps, opts.grid_step.unwrap_or(opts.resolution))?;
            js(json!({ "D": d, "eps": eps, "hull_size": hs.len(), "N_hat": sep.n_hat, "indices": sep.indices }))
        }
        Command::TheoremCheck { input, d, eps, resolution } => {
            positive("resolution", *resolution)?;
            let ps = load(input)?;
            let eps0 = hullmetric::epsilon0(ps.r, ps.big_r);
            let eps = if eps == "auto" {
                0.9 * eps0
            } else {
                eps.parse::<f64>().map_err(|_| invalid("--eps must be a number or 'auto'"))?
            };
            positive("eps", eps)?;
            let mut opts = HtopOptions::for_sample(&ps, eps);
            opts.resolution = *resolution;
            let recs = hullmetric::check_htop_equals_hpc(&ps, d, eps, &opts)?;
            js(json!({ "eps": eps, "eps0": eps0, "records": to(&recs) }))
        }
        Command::Kronecker { k, eps, d, points } => {
            if *k == 0 {
                return Err(invalid("--k must be at least 1"));
            }
            positive("eps", *eps)?;
            let sys = KroneckerSystem::sqrt_primes(*k);
            let recs = hullmetric::kronecker_entropy_demo(&sys, *eps, d, *points);
            js(json!({ "rotation": sys.rotation, "eps": eps, "records": to(&recs) }))
        }
        Command::Autocorr { input, zmax } => {
            let ps = load(input)?;
            let ac = diffraction::autocorrelation(&ps, *zmax)?;
            let mut csv = String::from("zx,zy,re,im\n");
            for (z, c) in &ac.coefficients {
                csv.push_str(&format!("{},{},{},{}\n", z[0], z[1], c.re, c.im));
            }
            Ok(Payload::Table { csv, json: to(&ac) })
        }
        Command::Spectrum { input, grid } => {
            let ps = load(input)?;
            let g = parse_grid(&grid.grid)?;
            Ok(spectrum_table(&diffraction::intensity(&ps, &g), ps.dim))
        }
        Command::Peaks { input, grid, fractions } => {
            let ps = load(input)?;
            let g = parse_grid(&grid.grid)?;
            let (spectra, mass) = spectra_on_boxes(&ps, &g, fractions)?;
            js(to(&diffraction::detect_peaks(&spectra, mass, &Default::default())?))
        }
        Command::Diagnose { input, grid, fractions } => {
            let ps = load(input)?;
            let mut cfg = DiagnosticConfig::new(parse_grid(&grid.grid)?);
            cfg.volume_fractions = fractions.clone();
            js(to(&diffraction::pure_point_diagnostic(&ps, &cfg)?))
        }
        Command::Mahler { poly, base_grid, levels } => {
            let p = LaurentPolynomial::parse(poly)?;
            let opts = QuadratureOptions { base_grid: *base_grid, max_levels: *levels, ..Default::default() };
            js(to(&mahler::mahler_measure(&p, &opts)?))
        }
        Command::Dimer { model, sizes } => {
            let m = DimerModel::from(*model);
            let sizes = if sizes.is_empty() { m.default_sizes() } else { sizes.clone() };
            js(to(&mahler::dimer_entropy_extrapolation(m, &sizes)?))
        }
        Command::Report { model, sizes } => {
            let m = DimerModel::from(*model);
            let sizes = if sizes.is_empty() { m.default_sizes() } else { sizes.clone() };
            js(to(&mahler::mahler_vs_dimer_report(m, &sizes, &QuadratureOptions::default())?))
        }
    }
}

mod erased {
    pub trait Ser {
        fn value(&self) -> serde_json::Value;
    }
    impl<T: serde::Serialize> Ser for T {
        fn value(&self) -> serde_json::Value {
            serde_json::to_value(self).expect("serializable result")
        }
    }
}

fn render(cli: &Cli, argv: &[String], payload: Payload) -> String {
    let meta = json!({
        "tool": "flc",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cli.seed,
        "config": argv[1..].join(" "),
    });
    match (payload, cli.format) {
        (Payload::PointSet(mut ps), _) => {
            if ps.seed.is_none() {
                ps.seed = Some(cli.seed);
            }
            write_point_set(&ps)
        }
        (Payload::Table { csv, .. }, Format::Csv) => {
            format!("# tool=flc version={} seed={} config={}\n{csv}", env!("CARGO_PKG_VERSION"), cli.seed, meta["config"].as_str().unwrap())
        }
        (Payload::Table { json, .. } | Payload::Json(json), _) => {
            let mut s = serde_json::to_string_pretty(&json!({ "meta": meta, "result": json })).unwrap();
            s.push('\n');
            s
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = run(&cli.command, cli.seed).and_then(|payload| {
        if let (Payload::PointSet(ps), Some(path)) = (&payload, &cli.output) {
            let mut ps = ps.clone();
            ps.seed.get_or_insert(cli.seed);
            save_point_set(&ps, path)?;
            return Ok(String::new());
        }
        let text = render(&cli, &argv, payload);
        if let Some(path) = &cli.output {
            std::fs::write(path, &text).map_err(|e| Failure::from(Error::from(e)))?;
            return Ok(String::new());
        }
        Ok(text)
    });
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
