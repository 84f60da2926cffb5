//! Plain-text point-set format.
//!
//! ```text
//! # dim=1
//! # r=0.5
//! # R=0.809016994374947
//! # window=0,20
//! # basis=1.618033988749895;1
//! # alphabet=a,b
//! # columns=x,weight,color,module
//! 0 1,0 a 0 0
//! 1.618033988749895 1,0 b 1 0
//! ```
//!
//! Header lines are `# key=value`; unknown keys and plain `#` comments are
//! ignored. Each row holds the coordinates, then the optional columns in the
//! order given by `columns`. Without a `columns` header the optional fields
//! are recognised by shape: a `re,im` pair is a weight, a non-numeric token
//! a colour label, and trailing integers module coordinates.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pointset::{ModuleCoords, PointSet, Vector, Window};

pub fn write_point_set(ps: &PointSet) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# dim={}", ps.dim);
    let _ = writeln!(s, "# r={}", ps.r);
    let _ = writeln!(s, "# R={}", ps.big_r);
    let axes: Vec<String> = (0..ps.dim).map(|a| format!("{},{}", ps.window.lo[a], ps.window.hi[a])).collect();
    let _ = writeln!(s, "# window={}", axes.join(";"));
    if let Some(m) = &ps.module {
        let basis: Vec<String> =
            m.basis.iter().map(|v| v[..ps.dim].iter().map(f64::to_string).collect::<Vec<_>>().join(",")).collect();
        let _ = writeln!(s, "# basis={}", basis.join(";"));
        if m.origin != [0.0, 0.0] {
            let o: Vec<String> = m.origin[..ps.dim].iter().map(f64::to_string).collect();
            let _ = writeln!(s, "# origin={}", o.join(","));
        }
    }
    let _ = writeln!(s, "# delone={}", ps.delone);
    if !ps.provenance.is_empty() {
        let _ = writeln!(s, "# provenance={}", ps.provenance);
    }
    if let Some(seed) = ps.seed {
        let _ = writeln!(s, "# seed={seed}");
    }
    if !ps.alphabet.is_empty() {
        let _ = writeln!(s, "# alphabet={}", ps.alphabet.join(","));
    }
    let mut cols = vec!["x"];
    if ps.dim == 2 {
        cols.push("y");
    }
    if ps.weights.is_some() {
        cols.push("weight");
    }
    if ps.colors.is_some() {
        cols.push("color");
    }
    if ps.module.is_some() {
        cols.push("module");
    }
    let _ = writeln!(s, "# columns={}", cols.join(","));
    for i in 0..ps.len() {
        let p = ps.points[i];
        let _ = write!(s, "{}", p[0]);
        if ps.dim == 2 {
            let _ = write!(s, " {}", p[1]);
        }
        if let Some(w) = &ps.weights {
            let _ = write!(s, " {},{}", w[i].re, w[i].im);
        }
        if let Some(c) = &ps.colors {
            let _ = write!(s, " {}", ps.alphabet[c[i] as usize]);
        }
        if let Some(m) = &ps.module {
            for k in &m.coords[i] {
                let _ = write!(s, " {k}");
            }
        }
        s.push('\n');
    }
    s
}

pub fn save_point_set(ps: &PointSet, path: &Path) -> Result<()> {
    std::fs::write(path, write_point_set(ps))?;
    Ok(())
}

pub fn load_point_set(path: &Path) -> Result<PointSet> {
    parse_point_set(&std::fs::read_to_string(path)?)
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_f64(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = tok.trim().parse().map_err(|_| perr(line, format!("invalid {what} '{tok}'")))?;
    if v.is_nan() {
        return Err(perr(line, format!("{what} is NaN")));
    }
    Ok(v)
}

fn parse_list(s: &str, line: usize, what: &str) -> Result<Vec<f64>> {
    s.split(',').map(|t| parse_f64(t, line, what)).collect()
}

#[derive(Default)]
struct Header {
    dim: Option<usize>,
    r: Option<f64>,
    big_r: Option<f64>,
    window: Option<Vec<(f64, f64)>>,
    basis: Option<Vec<Vec<f64>>>,
    origin: Option<Vec<f64>>,
    delone: Option<bool>,
    provenance: String,
    seed: Option<u64>,
    alphabet: Vec<String>,
    columns: Option<Vec<String>>,
}

pub fn parse_point_set(text: &str) -> Result<PointSet> {
    let mut h = Header::default();
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            let Some((key, val)) = rest.trim().split_once('=') else { continue };
            let (key, val) = (key.trim(), val.trim());
            match key {
                "dim" => {
                    let d: usize = val.parse().map_err(|_| perr(line, format!("invalid dim '{val}'")))?;
                    if d != 1 && d != 2 {
                        return Err(perr(line, format!("dimension {d} not supported")));
                    }
                    h.dim = Some(d);
                }
                "r" => h.r = Some(parse_f64(val, line, "r")?),
                "R" => h.big_r = Some(parse_f64(val, line, "R")?),
                "window" => {
                    let mut axes = Vec::new();
                    for part in val.split(';') {
                        let v = parse_list(part, line, "window bound")?;
                        if v.len() != 2 {
                            return Err(perr(line, "window axis needs two bounds"));
                        }
                        axes.push((v[0], v[1]));
                    }
                    h.window = Some(axes);
                }
                "basis" => {
                    h.basis = Some(val.split(';').map(|p| parse_list(p, line, "basis entry")).collect::<Result<_>>()?)
                }
                "origin" => h.origin = Some(parse_list(val, line, "origin")?),
                "delone" => {
                    h.delone = Some(val.parse().map_err(|_| perr(line, format!("invalid delone flag '{val}'")))?)
                }
                "provenance" => h.provenance = val.to_string(),
                "seed" => h.seed = Some(val.parse().map_err(|_| perr(line, format!("invalid seed '{val}'")))?),
                "alphabet" => h.alphabet = val.split(',').map(|s| s.trim().to_string()).collect(),
                "columns" => h.columns = Some(val.split(',').map(|s| s.trim().to_string()).collect()),
                _ => {}
            }
            continue;
        }
        rows.push((line, t.split_whitespace().collect()));
    }

    let dim = h.dim.ok_or_else(|| perr(0, "missing '# dim=' header"))?;
    let r = h.r.ok_or_else(|| perr(0, "missing '# r=' header"))?;
    let big_r = h.big_r.ok_or_else(|| perr(0, "missing '# R=' header"))?;
    let axes = h.window.ok_or_else(|| perr(0, "missing '# window=' header"))?;
    if axes.len() != dim {
        return Err(perr(0, format!("window has {} axes for dim={dim}", axes.len())));
    }
    let window = if dim == 1 { Window::interval(axes[0].0, axes[0].1) } else { Window::rect(axes[0], axes[1]) };
    let basis: Option<Vec<Vector>> = match h.basis {
        Some(b) => Some(
            b.iter()
                .map(|v| {
                    if v.len() != dim {
                        return Err(perr(0, "basis vector has wrong length"));
                    }
                    Ok(if dim == 1 { [v[0], 0.0] } else { [v[0], v[1]] })
                })
                .collect::<Result<_>>()?,
        ),
        None => None,
    };
    let rank = basis.as_ref().map_or(0, Vec::len);

    let mut points = Vec::with_capacity(rows.len());
    let mut weights: Vec<Complex64> = Vec::new();
    let mut colors: Vec<u32> = Vec::new();
    let mut coords: Vec<Vec<i64>> = Vec::new();
    let mut alphabet = h.alphabet.clone();
    let explicit = h.columns.as_ref().map(|c| c.iter().skip(dim).cloned().collect::<Vec<_>>());
    for (row_idx, (line, toks)) in rows.iter().enumerate() {
        let line = *line;
        if toks.len() < dim {
            return Err(perr(line, format!("row {row_idx} has fewer than {dim} coordinates")));
        }
        let mut p = [0.0; 2];
        for a in 0..dim {
            p[a] = toks[a]
                .parse::<f64>()
                .map_err(|_| perr(line, format!("row {row_idx}: invalid coordinate '{}'", toks[a])))?;
            if p[a].is_nan() {
                return Err(perr(line, format!("row {row_idx}: coordinate is NaN")));
            }
        }
        points.push(p);
        let rest = &toks[dim..];
        let (mut w, mut c, mut m) = (None, None, None);
        match &explicit {
            Some(cols) => {
                let mut pos = 0;
                for col in cols {
                    match col.as_str() {
                        "weight" => {
                            let tok = rest.get(pos).ok_or_else(|| perr(line, format!("row {row_idx}: missing weight")))?;
                            w = Some(parse_weight(tok, line, row_idx)?);
                            pos += 1;
                        }
                        "color" => {
                            let tok = rest.get(pos).ok_or_else(|| perr(line, format!("row {row_idx}: missing color")))?;
                            c = Some(*tok);
                            pos += 1;
                        }
                        "module" => {
                            m = Some(parse_ints(&rest[pos.min(rest.len())..], line, row_idx)?);
                            pos = rest.len();
                        }
                        other => return Err(perr(line, format!("unknown column '{other}'"))),
                    }
                }
                if pos < rest.len() {
                    return Err(perr(line, format!("row {row_idx}: unexpected trailing fields")));
                }
            }
            None => {
                let mut pos = 0;
                if rest.first().is_some_and(|t| t.contains(',')) {
                    w = Some(parse_weight(rest[0], line, row_idx)?);
                    pos = 1;
                }
                if rest.get(pos).is_some_and(|t| t.parse::<i64>().is_err()) {
                    c = Some(rest[pos]);
                    pos += 1;
                }
                if pos < rest.len() {
                    m = Some(parse_ints(&rest[pos..], line, row_idx)?);
                }
            }
        }
        if let Some(w) = w {
            if weights.len() != row_idx {
                return Err(perr(line, format!("row {row_idx}: weight column is not present on every row")));
            }
            weights.push(w);
        }
        if let Some(label) = c {
            if colors.len() != row_idx {
                return Err(perr(line, format!("row {row_idx}: color column is not present on every row")));
            }
            let k = match alphabet.iter().position(|a| a == label) {
                Some(k) => k,
                None => {
                    alphabet.push(label.to_string());
                    alphabet.len() - 1
                }
            };
            colors.push(k as u32);
        }
        if let Some(m) = m {
            if coords.len() != row_idx {
                return Err(perr(line, format!("row {row_idx}: module column is not present on every row")));
            }
            if basis.is_none() || m.len() != rank {
                return Err(perr(line, format!("row {row_idx}: module coordinates do not match the basis")));
            }
            coords.push(m);
        }
    }
    let n = points.len();
    for (len, what) in [(weights.len(), "weight"), (colors.len(), "color"), (coords.len(), "module")] {
        if len != 0 && len != n {
            return Err(perr(0, format!("{what} column is not present on every row")));
        }
    }

    let mut ps = PointSet::new(dim, points, r, big_r, window);
    ps.weights = (!weights.is_empty()).then_some(weights);
    ps.colors = (!colors.is_empty()).then_some(colors);
    ps.alphabet = alphabet;
    if let Some(basis) = basis {
        if !coords.is_empty() || n == 0 {
            let o = h.origin.unwrap_or_else(|| vec![0.0; dim]);
            let origin = if dim == 1 { [o[0], 0.0] } else { [o[0], *o.get(1).unwrap_or(&0.0)] };
            ps.module = Some(ModuleCoords { basis, origin, coords });
        }
    }
    ps.delone = h.delone.unwrap_or(true);
    ps.provenance = h.provenance;
    ps.seed = h.seed;
    ps.validate()?;
    Ok(ps)
}

fn parse_weight(tok: &str, line: usize, row: usize) -> Result<Complex64> {
    let (re, im) = tok.split_once(',').ok_or_else(|| perr(line, format!("row {row}: weight must be re,im")))?;
    let re = parse_f64(re, line, &format!("row {row} weight"))?;
    let im = parse_f64(im, line, &format!("row {row} weight"))?;
    Ok(Complex64::new(re, im))
}

fn parse_ints(toks: &[&str], line: usize, row: usize) -> Result<Vec<i64>> {
    toks.iter()
        .map(|t| t.parse::<i64>().map_err(|_| perr(line, format!("row {row}: invalid module coordinate '{t}'"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{lattice, substitution_chain, visible_points, SubstitutionRule};

    #[test]
    fn round_trip_generated_sets() {
        let sets = [
            substitution_chain(&SubstitutionRule::thue_morse(), 6, "a").unwrap(),
            substitution_chain(&SubstitutionRule::fibonacci(), 8, "b").unwrap(),
            lattice(&[[1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]], Window::centered(2, 4.0)).unwrap(),
            visible_points(5).unwrap(),
            crate::translate(&visible_points(3).unwrap(), [0.1, -0.7]),
        ];
        for ps in sets {
            let back = parse_point_set(&write_point_set(&ps)).unwrap();
            assert_eq!(back, ps);
        }
    }

    #[test]
    fn inferred_columns() {
        let text = "# dim=1\n# r=0.5\n# R=0.5\n# window=0,2\n# basis=1\n0 1,0 a 0\n1 -1,0 b 1\n2 1,0 a 2\n";
        let ps = parse_point_set(text).unwrap();
        assert_eq!(ps.colors, Some(vec![0, 1, 0]));
        assert_eq!(ps.alphabet, vec!["a", "b"]);
        assert_eq!(ps.weights.unwrap()[1], Complex64::new(-1.0, 0.0));
        assert_eq!(ps.module.unwrap().coords, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn errors_name_the_problem() {
        let e = parse_point_set("# r=1\n# R=1\n# window=0,1\n0\n").unwrap_err();
        assert!(e.to_string().contains("dim="), "{e}");
        let e = parse_point_set("# dim=1\n# r=0.5\n# R=0.5\n# window=0,3\n0\n1\nNaN\n").unwrap_err();
        assert_eq!(e, Error::Parse { line: 7, msg: "row 2: coordinate is NaN".into() });
        let e = parse_point_set("# dim=1\n# r=0.5\n# R=0.5\n# window=0,3\n0\nx\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 6, .. }));
        let e = parse_point_set("# dim=1\n# r=0.5\n# R=0.5\n# window=0,3\n5\n").unwrap_err();
        assert!(e.is_validation());
    }
}
