//! Plain-text code manifests.
//!
//! A manifest is a list of `key=value` lines (`#` starts a comment):
//!
//! ```text
//! type=css
//! name=surface3
//! n=13
//! k=1
//! d=3
//! h_x=surface3.h_x.txt
//! h_z=surface3.h_z.txt
//! j_x=surface3.j_x.txt
//! j_z=surface3.j_z.txt
//! ```
//!
//! Classical manifests use `type=classical` with `h=` (required), `g=` and an
//! optional `soundness=p/q`. Matrix paths are relative to the manifest's
//! directory and hold matrices in the repository-wide text format. CSS
//! manifests without `j_x`/`j_z` get logical generators completed from the
//! checks.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_rational::Ratio;

use crate::codes::{hamming_743, repetition, steane, surface_code_via_hgp, validate_css, ClassicalCode, CssCode};
use crate::gf2::BitMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Code {
    Css(CssCode),
    Classical(ClassicalCode),
}

impl Code {
    pub fn n(&self) -> usize {
        match self {
            Code::Css(c) => c.n,
            Code::Classical(c) => c.n,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Code::Css(c) => c.k,
            Code::Classical(c) => c.k,
        }
    }

    pub fn d(&self) -> Option<usize> {
        match self {
            Code::Css(c) => c.d,
            Code::Classical(c) => c.d,
        }
    }

    pub fn as_css(&self) -> Result<&CssCode> {
        match self {
            Code::Css(c) => Ok(c),
            Code::Classical(_) => Err(Error::Precondition("expected a CSS code manifest".into())),
        }
    }

    pub fn as_classical(&self) -> Result<&ClassicalCode> {
        match self {
            Code::Classical(c) => Ok(c),
            Code::Css(_) => Err(Error::Precondition("expected a classical code manifest".into())),
        }
    }
}

/// Built-in example codes: `repetition:N`, `hamming743`, `steane`, `surface:D`.
pub fn builtin(spec: &str) -> Result<Code> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let num = |what: &str| -> Result<usize> {
        arg.ok_or_else(|| Error::Parse(format!("{what} needs a size, e.g. {what}:3")))?
            .parse()
            .map_err(|_| Error::Parse(format!("bad size in {spec:?}")))
    };
    match name {
        "repetition" => {
            let n = num("repetition")?;
            if n == 0 {
                return Err(Error::Precondition("repetition length must be positive".into()));
            }
            Ok(Code::Classical(repetition(n)))
        }
        "hamming743" => Ok(Code::Classical(hamming_743())),
        "steane" => Ok(Code::Css(steane())),
        "surface" => {
            let d = num("surface")?;
            Ok(Code::Css(surface_code_via_hgp(d)?.with_distance(d)))
        }
        _ => Err(Error::Parse(format!("unknown built-in code {spec:?}"))),
    }
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("manifest line {}: expected key=value", i + 1)))?;
        if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("manifest line {}: duplicate key {:?}", i + 1, k.trim())));
        }
    }
    Ok(map)
}

fn read_matrix(base: &Path, file: &str) -> Result<BitMatrix> {
    let path = base.join(file);
    let text = fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    BitMatrix::parse_text(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn parse_usize(map: &BTreeMap<String, String>, key: &str) -> Result<Option<usize>> {
    map.get(key)
        .map(|v| v.parse().map_err(|_| Error::Parse(format!("{key}: not a non-negative integer: {v:?}"))))
        .transpose()
}

/// Parse manifest text; matrix references resolve against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Code> {
    let map = parse_pairs(text)?;
    let need = |key: &str| map.get(key).ok_or_else(|| Error::Parse(format!("manifest is missing {key}=")));
    let code = match need("type")?.as_str() {
        "css" => {
            let h_x = read_matrix(base, need("h_x")?)?;
            let h_z = read_matrix(base, need("h_z")?)?;
            let code = match (map.get("j_x"), map.get("j_z")) {
                (Some(jx), Some(jz)) => {
                    let j_x = read_matrix(base, jx)?;
                    let j_z = read_matrix(base, jz)?;
                    let (n, k) = (h_x.cols(), j_x.rows());
                    let code = CssCode { h_x, h_z, j_x, j_z, n, k, d: None };
                    let issues = validate_css(&code);
                    if !issues.is_empty() {
                        return Err(Error::Precondition(format!("invalid CSS code: {}", issues.join("; "))));
                    }
                    code
                }
                (None, None) => CssCode::from_checks(h_x, h_z)?,
                _ => return Err(Error::Parse("give both j_x and j_z or neither".into())),
            };
            Code::Css(code)
        }
        "classical" => {
            let h = read_matrix(base, need("h")?)?;
            let mut code = ClassicalCode::from_check(h);
            if let Some(g) = map.get("g") {
                let g = read_matrix(base, g)?;
                if g.cols() != code.n || !code.h.mul(&g.transpose()).is_zero() || g.rank() != code.k || g.rows() != code.k {
                    return Err(Error::Precondition("g is not a generator matrix for ker h".into()));
                }
                code.g = g;
            }
            if let Some(s) = map.get("soundness") {
                let r: Ratio<u64> = s.parse().map_err(|_| Error::Parse(format!("soundness: bad rational {s:?}")))?;
                code.soundness = Some(r);
            }
            Code::Classical(code)
        }
        other => return Err(Error::Parse(format!("unknown manifest type {other:?}"))),
    };
    for (key, actual) in [("n", code.n()), ("k", code.k())] {
        if let Some(v) = parse_usize(&map, key)? {
            if v != actual {
                return Err(Error::Precondition(format!("manifest says {key}={v} but the matrices give {actual}")));
            }
        }
    }
    let d = parse_usize(&map, "d")?;
    Ok(match code {
        Code::Css(mut c) => {
            c.d = d;
            Code::Css(c)
        }
        Code::Classical(mut c) => {
            c.d = d;
            Code::Classical(c)
        }
    })
}

/// Load a manifest from disk, or a built-in code when `source` starts with `builtin:`.
pub fn load(source: &str) -> Result<Code> {
    if let Some(spec) = source.strip_prefix("builtin:") {
        return builtin(spec);
    }
    let path = Path::new(source);
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{source}: {e}")))?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}

fn write_matrix(dir: &Path, file: &str, m: &BitMatrix) -> Result<()> {
    fs::write(dir.join(file), m.to_text())?;
    Ok(())
}

/// Write `code` as `<dir>/<name>.manifest` plus one matrix file per matrix.
pub fn write(dir: &Path, name: &str, code: &Code) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut text = String::new();
    let mut line = |k: &str, v: String| text.push_str(&format!("{k}={v}\n"));
    match code {
        Code::Css(c) => {
            line("type", "css".into());
            line("name", name.into());
            line("n", c.n.to_string());
            line("k", c.k.to_string());
            if let Some(d) = c.d {
                line("d", d.to_string());
            }
            for (key, m) in [("h_x", &c.h_x), ("h_z", &c.h_z), ("j_x", &c.j_x), ("j_z", &c.j_z)] {
                let file = format!("{name}.{key}.txt");
                write_matrix(dir, &file, m)?;
                line(key, file);
            }
        }
        Code::Classical(c) => {
            line("type", "classical".into());
            line("name", name.into());
            line("n", c.n.to_string());
            line("k", c.k.to_string());
            if let Some(d) = c.d {
                line("d", d.to_string());
            }
            if let Some(s) = c.soundness {
                line("soundness", format!("{}/{}", s.numer(), s.denom()));
            }
            for (key, m) in [("h", &c.h), ("g", &c.g)] {
                let file = format!("{name}.{key}.txt");
                write_matrix(dir, &file, m)?;
                line(key, file);
            }
        }
    }
    let path = dir.join(format!("{name}.manifest"));
    fs::write(&path, text)?;
    Ok(path)
}
