//! Problem directories on disk.
//!
//! Every directory holds a plain-text `key = value` file (`manifest` for BQP
//! and ℓ1 problems, `meta` for application instances) next to Matrix Market
//! matrices and whitespace-separated vectors. Parse errors carry the file and
//! line they come from.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::warn;

use crate::bqp::BqpProblem;
use crate::error::{Error, Result};
use crate::l1ext::L1Problem;
use crate::linalg::{read_matrix_market, write_matrix_market, SparseMatrix};
use crate::problems::{ClusteringInstance, MatchingInstance, MrfInstance};

pub const MANIFEST: &str = "manifest";
pub const META: &str = "meta";

/// Default `rho0` when an ℓ1 manifest does not set one.
pub const DEFAULT_RHO0: f64 = 1e-3;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

/// A parsed `key = value` file. Keys remember their line for error messages.
#[derive(Debug, Clone)]
pub struct Manifest {
    path: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
}

impl Manifest {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected `key = value`, found `{content}`"),
                ));
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(parse_err(path, line, "empty key"));
            }
            if let Some((first, _)) = entries.insert(key.clone(), (line, value.trim().to_string()))
            {
                return Err(parse_err(
                    path,
                    line,
                    format!("`{key}` already set on line {first}"),
                ));
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, path)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| parse_err(&self.path, *line, format!("bad `{key}` value `{v}`: {e}"))),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.value(key)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.value(key)
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        self.usize(key)?
            .ok_or_else(|| parse_err(&self.path, 0, format!("missing required key `{key}`")))
    }

    /// Errors unless `found` equals the manifest value of `key`, when present.
    pub fn check_dim(&self, key: &str, found: usize) -> Result<()> {
        if let Some(expected) = self.usize(key)? {
            if expected != found {
                let line = self.entries[key].0;
                return Err(parse_err(
                    &self.path,
                    line,
                    format!("`{key}` = {expected} but the data has {found}"),
                ));
            }
        }
        Ok(())
    }

    pub fn warn_unknown(&self, known: &[&str]) {
        for (key, (line, _)) in &self.entries {
            if !known.contains(&key.as_str()) {
                warn!(
                    "{}:{line}: ignoring unknown key `{key}`",
                    self.path.display()
                );
            }
        }
    }
}

/// Whitespace-separated reals, any number per line.
pub fn parse_vector(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        for token in content.split_whitespace() {
            let v: f64 = token
                .parse()
                .map_err(|e| parse_err(path, i + 1, format!("bad number `{token}`: {e}")))?;
            if !v.is_finite() {
                return Err(parse_err(
                    path,
                    i + 1,
                    format!("non-finite value `{token}`"),
                ));
            }
            out.push(v);
        }
    }
    Ok(out)
}

pub fn read_vector(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let v = parse_vector(&read_text(path)?, path)?;
    if v.len() != expected {
        return Err(parse_err(
            path,
            0,
            format!("expected {expected} values, found {}", v.len()),
        ));
    }
    Ok(v)
}

pub fn format_vector(v: &[f64]) -> String {
    let mut out = String::new();
    for x in v {
        let _ = writeln!(out, "{x:?}");
    }
    out
}

/// Comma-separated feature rows. A first line that does not parse as numbers
/// is taken as a header.
pub fn parse_features_csv(text: &str, path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let content = line.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = content
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect();
        let is_header = std::mem::take(&mut first) && parsed.is_err();
        match parsed {
            Ok(row) => {
                if let Some(prev) = rows.first() {
                    if prev.len() != row.len() {
                        return Err(parse_err(
                            path,
                            i + 1,
                            format!("expected {} columns, found {}", prev.len(), row.len()),
                        ));
                    }
                }
                if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                    return Err(parse_err(path, i + 1, format!("non-finite value {bad}")));
                }
                rows.push(row);
            }
            Err(_) if is_header => {}
            Err(e) => {
                return Err(parse_err(
                    path,
                    i + 1,
                    format!("bad feature row `{content}`: {e}"),
                ))
            }
        }
    }
    Ok(rows)
}

fn optional_matrix(path: &Path) -> Result<Option<SparseMatrix>> {
    if path.exists() {
        read_matrix_market(path).map(Some)
    } else {
        Ok(None)
    }
}

fn optional_vector(path: &Path, expected: usize) -> Result<Vec<f64>> {
    if path.exists() {
        read_vector(path, expected)
    } else if expected == 0 {
        Ok(Vec::new())
    } else {
        Err(Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "required right-hand side is missing",
            ),
        })
    }
}

fn check_shape(path: &Path, m: &SparseMatrix, rows: Option<usize>, cols: usize) -> Result<()> {
    if m.n_cols() != cols || rows.is_some_and(|r| r != m.n_rows()) {
        let want_rows = rows.map_or_else(|| "m".to_string(), |r| r.to_string());
        return Err(parse_err(
            path,
            2,
            format!(
                "expected a {want_rows}×{cols} matrix, found {}×{}",
                m.n_rows(),
                m.n_cols()
            ),
        ));
    }
    Ok(())
}

const BQP_KEYS: [&str; 4] = ["n", "m1", "m2", "alpha"];
const L1_KEYS: [&str; 6] = ["n", "m1", "m2", "alpha", "lambda", "rho0"];

fn load_bqp_with(dir: &Path, manifest: &Manifest) -> Result<BqpProblem> {
    let a_path = dir.join("A.mtx");
    let a = read_matrix_market(&a_path)?;
    let n = manifest.usize("n")?.unwrap_or(a.n_rows());
    check_shape(&a_path, &a, Some(n), n)?;
    let b = read_vector(&dir.join("b.txt"), n)?;
    let mut p = BqpProblem::new(a, b)?;

    let c1_path = dir.join("C1.mtx");
    if let Some(c1) = optional_matrix(&c1_path)? {
        check_shape(&c1_path, &c1, manifest.usize("m1")?, n)?;
        let d1 = optional_vector(&dir.join("d1.txt"), c1.n_rows())?;
        p = p.with_equalities(c1, d1)?;
    }
    manifest.check_dim("m1", p.n_equalities())?;
    let c2_path = dir.join("C2.mtx");
    if let Some(c2) = optional_matrix(&c2_path)? {
        check_shape(&c2_path, &c2, manifest.usize("m2")?, n)?;
        let d2 = optional_vector(&dir.join("d2.txt"), c2.n_rows())?;
        p = p.with_inequalities(c2, d2)?;
    }
    manifest.check_dim("m2", p.n_inequalities())?;

    match manifest.raw("alpha") {
        None => Ok(p),
        Some("auto") => p.shifted_to_psd(),
        Some(_) => {
            let alpha = manifest.f64("alpha")?.unwrap_or(0.0);
            p.with_psd_shift(alpha)
        }
    }
}

/// Loads `manifest`, `A.mtx`, `b.txt` and the optional constraint files.
///
/// `alpha` may be a number or `auto` for [`psd_shift_bound`](crate::bqp::psd_shift_bound). Missing
/// `C1.mtx`/`C2.mtx` mean no constraints of that kind.
pub fn load_bqp(dir: &Path) -> Result<BqpProblem> {
    let manifest = Manifest::read(&dir.join(MANIFEST))?;
    manifest.warn_unknown(&BQP_KEYS);
    load_bqp_with(dir, &manifest)
}

/// A BQP directory plus `C.mtx` and the `lambda` (and optional `rho0`) keys.
pub fn load_l1(dir: &Path) -> Result<L1Problem> {
    let manifest = Manifest::read(&dir.join(MANIFEST))?;
    manifest.warn_unknown(&L1_KEYS);
    let base = load_bqp_with(dir, &manifest)?;
    let c_path = dir.join("C.mtx");
    let c = read_matrix_market(&c_path)?;
    check_shape(&c_path, &c, None, base.dim())?;
    let lambda = manifest
        .f64("lambda")?
        .ok_or_else(|| parse_err(&dir.join(MANIFEST), 0, "missing required key `lambda`"))?;
    let rho0 = manifest.f64("rho0")?.unwrap_or(DEFAULT_RHO0);
    L1Problem::new(base, c, lambda, rho0)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

fn manifest_text(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

fn save_bqp_files(dir: &Path, p: &BqpProblem, extra: &[(&str, String)]) -> Result<()> {
    create_dir(dir)?;
    // store the unshifted coefficients and let `alpha` reapply the shift
    let a = p.a.shifted(-p.psd_shift).to_sparse();
    let b: Vec<f64> = p.b.iter().map(|v| v + p.psd_shift).collect();
    write_matrix_market(&dir.join("A.mtx"), &a)?;
    write_text(&dir.join("b.txt"), &format_vector(&b))?;
    if p.n_equalities() > 0 {
        write_matrix_market(&dir.join("C1.mtx"), &p.c1)?;
        write_text(&dir.join("d1.txt"), &format_vector(&p.d1))?;
    }
    if p.n_inequalities() > 0 {
        write_matrix_market(&dir.join("C2.mtx"), &p.c2)?;
        write_text(&dir.join("d2.txt"), &format_vector(&p.d2))?;
    }
    let mut pairs = vec![
        ("n", p.dim().to_string()),
        ("m1", p.n_equalities().to_string()),
        ("m2", p.n_inequalities().to_string()),
        ("alpha", format!("{:?}", p.psd_shift)),
    ];
    pairs.extend(extra.iter().cloned());
    write_text(&dir.join(MANIFEST), &manifest_text(&pairs))
}

/// Writes a directory that [`load_bqp`] reads back. The reported-objective
/// sign and offset are not stored.
pub fn save_bqp(dir: &Path, p: &BqpProblem) -> Result<()> {
    save_bqp_files(dir, p, &[])
}

pub fn save_l1(dir: &Path, p: &L1Problem) -> Result<()> {
    save_bqp_files(
        dir,
        &p.base,
        &[
            ("lambda", format!("{:?}", p.lambda)),
            ("rho0", format!("{:?}", p.rho0)),
        ],
    )?;
    write_matrix_market(&dir.join("C.mtx"), &p.c)
}

/// `meta` (`n_nodes`, `K`), `W.mtx` and `unary.txt` in state-major order.
pub fn load_mrf(dir: &Path) -> Result<MrfInstance> {
    let meta = Manifest::read(&dir.join(META))?;
    meta.warn_unknown(&["n_nodes", "K"]);
    let k = meta.require_usize("K")?;
    let w = read_matrix_market(&dir.join("W.mtx"))?;
    meta.check_dim("n_nodes", w.n_rows())?;
    let unary = read_vector(&dir.join("unary.txt"), w.n_rows() * k)?;
    MrfInstance::new(k, w, unary)
}

pub fn save_mrf(dir: &Path, inst: &MrfInstance) -> Result<()> {
    create_dir(dir)?;
    write_matrix_market(&dir.join("W.mtx"), &inst.w)?;
    write_text(&dir.join("unary.txt"), &format_vector(&inst.unary))?;
    write_text(
        &dir.join(META),
        &manifest_text(&[
            ("n_nodes", inst.n_nodes.to_string()),
            ("K", inst.n_states.to_string()),
        ]),
    )
}

/// `meta` (`n1`, `n2`) and `M.mtx` over the `a·n1 + i` ordering.
pub fn load_matching(dir: &Path) -> Result<MatchingInstance> {
    let meta = Manifest::read(&dir.join(META))?;
    meta.warn_unknown(&["n1", "n2"]);
    let n1 = meta.require_usize("n1")?;
    let n2 = meta.require_usize("n2")?;
    MatchingInstance::new(n1, n2, read_matrix_market(&dir.join("M.mtx"))?)
}

pub fn save_matching(dir: &Path, inst: &MatchingInstance) -> Result<()> {
    create_dir(dir)?;
    write_matrix_market(&dir.join("M.mtx"), &inst.m)?;
    write_text(
        &dir.join(META),
        &manifest_text(&[("n1", inst.n1.to_string()), ("n2", inst.n2.to_string())]),
    )
}

/// `meta` (`N`, `K`) and either `features.csv` or `W.mtx`; features win when
/// both are present.
pub fn load_clustering(dir: &Path) -> Result<ClusteringInstance> {
    let meta = Manifest::read(&dir.join(META))?;
    meta.warn_unknown(&["N", "K"]);
    let k = meta.require_usize("K")?;
    let features_path = dir.join("features.csv");
    let inst = if features_path.exists() {
        let features = parse_features_csv(&read_text(&features_path)?, &features_path)?;
        ClusteringInstance::from_features(features, k)?
    } else {
        ClusteringInstance::from_similarity(read_matrix_market(&dir.join("W.mtx"))?, k)?
    };
    meta.check_dim("N", inst.n)?;
    Ok(inst)
}

pub fn save_clustering(dir: &Path, inst: &ClusteringInstance) -> Result<()> {
    create_dir(dir)?;
    match &inst.features {
        Some(features) => {
            let text: String = features
                .iter()
                .map(|row| {
                    let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                    cells.join(",") + "\n"
                })
                .collect();
            write_text(&dir.join("features.csv"), &text)?;
        }
        None => write_matrix_market(&dir.join("W.mtx"), &inst.w)?,
    }
    write_text(
        &dir.join(META),
        &manifest_text(&[("N", inst.n.to_string()), ("K", inst.k.to_string())]),
    )
}
