//! Domain (`.dom`) and map (`.map`) files.
//!
//! Both are TOML documents. A domain file:
//!
//! ```toml
//! name = "ball"
//! dimension = 2
//! defining_function = "+ + abs2(1) abs2(2) -1"
//! enclosing_radius = 1.25
//! regularity = "real-analytic"
//! witness_point = ["0", "0"]
//! # optional
//! gradient_bound = 2.5
//! tubular_radius = 0.5
//! pseudoconvex = true
//! ```
//!
//! A map file:
//!
//! ```toml
//! name = "identity"
//! dimension = 2
//! components = ["z(1)", "z(2)"]
//! ```
//!
//! Expression errors are reported at their line and column in the file.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use koblab::domain::{DomainSpec, Regularity};
use koblab::holomap::{parse_component_at, HoloMapSpec};
use koblab::parse::{parse_field_at, Origin};
use koblab::{CVector, C64};
use serde::Deserialize;
use toml::Spanned;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainFile {
    name: Option<String>,
    dimension: usize,
    defining_function: Spanned<String>,
    enclosing_radius: f64,
    regularity: String,
    witness_point: Vec<String>,
    gradient_bound: Option<f64>,
    tubular_radius: Option<f64>,
    pseudoconvex: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    name: Option<String>,
    dimension: usize,
    components: Vec<Spanned<String>>,
}

/// Line and column (1-based) of byte offset `at`.
fn position(src: &str, at: usize) -> (usize, usize) {
    let before = &src[..at.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Position of the first character inside a TOML string whose value span
/// starts at `start`.
fn string_origin(src: &str, start: usize) -> Origin {
    let rest = &src[start..];
    let skip = if rest.starts_with("\"\"\"") || rest.starts_with("'''") {
        let after = &rest[3..];
        3 + if after.starts_with("\r\n") {
            2
        } else if after.starts_with('\n') {
            1
        } else {
            0
        }
    } else {
        1
    };
    let (line, column) = position(src, start + skip);
    Origin { line, column }
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "domain".into(), |s| s.to_string_lossy().into_owned())
}

/// Parses a complex number such as `0.5`, `-2i` or `0.3-0.1i`.
pub fn parse_complex(s: &str) -> Result<C64> {
    s.trim()
        .replace(' ', "")
        .parse::<C64>()
        .map_err(|_| anyhow!("'{s}' is not a complex number"))
}

/// A comma-separated list of complex entries. A single entry is repeated
/// to fill `dim`; `eK` is the K-th unit vector.
pub fn parse_vector(s: &str, dim: usize) -> Result<CVector> {
    let t = s.trim();
    if let Some(k) = t.strip_prefix('e').and_then(|k| k.parse::<usize>().ok()) {
        if k == 0 || k > dim {
            return Err(anyhow!("unit vector {t} out of range for dimension {dim}"));
        }
        return Ok(CVector::unit(dim, k - 1));
    }
    let parts = t.split(',').map(parse_complex).collect::<Result<Vec<_>>>()?;
    match parts.len() {
        1 => Ok(CVector::new(vec![parts[0]; dim])),
        n if n == dim => Ok(CVector::new(parts)),
        n => Err(anyhow!("expected {dim} entries, got {n} in '{t}'")),
    }
}

pub fn domain_from_str(src: &str, fallback_name: &str) -> Result<DomainSpec> {
    let f: DomainFile = toml::from_str(src).context("malformed domain file")?;
    let origin = string_origin(src, f.defining_function.span().start);
    let field = parse_field_at(f.defining_function.get_ref(), f.dimension, origin)?;
    let witness = parse_vector(&f.witness_point.join(","), f.dimension).context("witness_point")?;
    let name = f.name.unwrap_or_else(|| fallback_name.to_string());
    let regularity = Regularity::parse(&f.regularity)?;
    let mut dom = DomainSpec::new(name, field, f.enclosing_radius, regularity, witness, f.gradient_bound)?;
    if let Some(r) = f.tubular_radius {
        if !(r > 0.0) {
            return Err(anyhow!("tubular_radius must be positive"));
        }
        dom = dom.with_tubular_radius(r);
    }
    Ok(dom.with_pseudoconvex(f.pseudoconvex.unwrap_or(false)))
}

pub fn load_domain(path: &Path) -> Result<DomainSpec> {
    let src = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    domain_from_str(&src, &stem(path)).with_context(|| format!("in {}", path.display()))
}

pub fn map_from_str(src: &str) -> Result<(String, HoloMapSpec)> {
    let f: MapFile = toml::from_str(src).context("malformed map file")?;
    let comps = f
        .components
        .iter()
        .map(|c| parse_component_at(c.get_ref(), f.dimension, string_origin(src, c.span().start)))
        .collect::<koblab::Result<Vec<_>>>()?;
    Ok((f.name.unwrap_or_else(|| "map".into()), HoloMapSpec::new(comps, f.dimension)?))
}

pub fn load_map(path: &Path) -> Result<(String, HoloMapSpec)> {
    let src = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (name, map) = map_from_str(&src).with_context(|| format!("in {}", path.display()))?;
    Ok((if name == "map" { stem(path) } else { name }, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use koblab::c;

    const BALL: &str = r#"
name = "ball"
dimension = 2
defining_function = "+ + abs2(1) abs2(2) -1"
enclosing_radius = 1.25
regularity = "real-analytic"
witness_point = ["0", "0"]
"#;

    #[test]
    fn reads_a_domain() {
        let d = domain_from_str(BALL, "x").unwrap();
        assert_eq!(d.name, "ball");
        assert!(d.contains(&CVector::zeros(2)));
    }

    #[test]
    fn expression_errors_point_into_the_file() {
        let src = BALL.replace("abs2(2)", "abz(2)");
        let e = domain_from_str(&src, "x").unwrap_err();
        let msg = format!("{e:#}");
        // `abz` is the 34th character of line 4
        assert!(msg.contains("line 4, column 34"), "{msg}");
    }

    #[test]
    fn vectors() {
        assert_eq!(parse_vector("e2", 3).unwrap(), CVector::unit(3, 1));
        assert_eq!(parse_vector("0", 2).unwrap(), CVector::zeros(2));
        let v = parse_vector("0.5, 1-2i", 2).unwrap();
        assert_eq!(v[1], c(1.0, -2.0));
        assert!(parse_vector("1,2,3", 2).is_err());
    }

    #[test]
    fn reads_a_map() {
        let (name, m) = map_from_str("name = \"id\"\ndimension = 2\ncomponents = [\"z(1)\", \"z(2)\"]\n").unwrap();
        assert_eq!(name, "id");
        let z = CVector::new(vec![c(0.1, 0.2), c(0.3, 0.0)]);
        assert_eq!(m.eval(&z).unwrap(), z);
        let e = map_from_str("dimension = 1\ncomponents = [\"q(1)\"]\n").unwrap_err();
        assert!(format!("{e:#}").contains("line 2, column 16"), "{e:#}");
    }
}
