//! Text instance files.
//!
//! ```text
//! # comment
//! ring: GF(3)
//! vars: 4
//! P1: x1*x2 + 2*x3^2*x4
//! f: table { (0,0,0,0)=1, (1,0,0,0)=2 }
//! ```
//!
//! `ring` and `vars` come first. Every other key names a polynomial or a
//! function table; names are identifiers and may not repeat. Tables may span
//! several lines up to the closing brace.

use std::collections::BTreeMap;

use polybias::algebra::{ring_from_text, Ring};
use polybias::poly::{parse_poly, MultiPoly, PolyCollection};
use polybias::universality::FunctionTable;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug)]
pub struct Instance {
    pub ring: Ring,
    pub vars: usize,
    pub polys: BTreeMap<String, MultiPoly>,
    pub tables: BTreeMap<String, FunctionTable>,
    /// Hex SHA-256 of the file contents.
    pub digest: String,
}

fn input_error(line: usize, message: impl Into<String>) -> CliError {
    CliError::Input(format!("line {line}: {}", message.into()))
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Instance {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let digest = format!("{:x}", Sha256::digest(text.as_bytes()));
        let mut ring: Option<Ring> = None;
        let mut vars: Option<usize> = None;
        let mut polys = BTreeMap::new();
        let mut tables = BTreeMap::new();
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        while let Some((no, raw)) = lines.next() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| input_error(no, "expected `key: value`"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "ring" => {
                    if ring.is_some() {
                        return Err(input_error(no, "ring given twice"));
                    }
                    ring = Some(ring_from_text(value).map_err(|e| input_error(no, e.to_string()))?);
                }
                "vars" => {
                    if vars.is_some() {
                        return Err(input_error(no, "vars given twice"));
                    }
                    let n: usize = value.parse().map_err(|_| input_error(no, format!("bad variable count {value:?}")))?;
                    if n == 0 {
                        return Err(input_error(no, "need at least one variable"));
                    }
                    vars = Some(n);
                }
                name if is_identifier(name) => {
                    let (Some(ring), Some(n)) = (&ring, vars) else {
                        return Err(input_error(no, "ring and vars must precede definitions"));
                    };
                    if polys.contains_key(name) || tables.contains_key(name) {
                        return Err(input_error(no, format!("{name} defined twice")));
                    }
                    if let Some(body) = value.strip_prefix("table") {
                        let mut body = body.trim().to_string();
                        while !body.contains('}') {
                            let Some((_, more)) = lines.next() else {
                                return Err(input_error(no, "unterminated table"));
                            };
                            body.push(' ');
                            body.push_str(more.split('#').next().unwrap_or("").trim());
                        }
                        let table = parse_table(&body, ring, n).map_err(|m| input_error(no, m))?;
                        tables.insert(name.to_string(), table);
                    } else {
                        let p = parse_poly(value, ring, n).map_err(|e| input_error(no, e.to_string()))?;
                        polys.insert(name.to_string(), p);
                    }
                }
                other => return Err(input_error(no, format!("unknown key {other:?}"))),
            }
        }
        let ring = ring.ok_or_else(|| CliError::Input("missing `ring:`".into()))?;
        let vars = vars.ok_or_else(|| CliError::Input("missing `vars:`".into()))?;
        Ok(Instance {
            ring,
            vars,
            polys,
            tables,
            digest,
        })
    }

    pub fn poly(&self, name: &str) -> Result<&MultiPoly, CliError> {
        self.polys
            .get(name)
            .ok_or_else(|| CliError::Input(format!("no polynomial named {name:?}")))
    }

    pub fn table(&self, name: &str) -> Result<&FunctionTable, CliError> {
        self.tables
            .get(name)
            .ok_or_else(|| CliError::Input(format!("no table named {name:?}")))
    }

    /// A comma separated list of polynomial names.
    pub fn collection(&self, names: &str) -> Result<PolyCollection, CliError> {
        let polys = names
            .split(',')
            .map(|n| self.poly(n.trim()).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolyCollection::new(polys)?)
    }

    /// Parses a comma separated list of ring elements, given as their
    /// integer encodings `0..q`.
    pub fn elements(&self, text: &str) -> Result<Vec<u32>, CliError> {
        text.split(',')
            .map(|t| parse_element(t.trim(), &self.ring))
            .collect::<Result<_, _>>()
            .map_err(CliError::Input)
    }
}

fn parse_element(text: &str, ring: &Ring) -> Result<u32, String> {
    match text.parse::<u32>() {
        Ok(v) if v < ring.order() => Ok(v),
        _ => Err(format!("{text:?} is not an element code below {}", ring.order())),
    }
}

/// `{ (a,b,..)=v, ... }`
fn parse_table(body: &str, ring: &Ring, n: usize) -> Result<FunctionTable, String> {
    let inner = body
        .trim()
        .strip_prefix('{')
        .and_then(|b| b.trim_end().strip_suffix('}'))
        .ok_or("table body must be enclosed in braces")?;
    let mut points = Vec::new();
    let mut values = Vec::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        let open = rest.strip_prefix('(').ok_or_else(|| format!("expected `(` at {rest:?}"))?;
        let (coords, after) = open.split_once(')').ok_or("unclosed point")?;
        let point = coords
            .split(',')
            .map(|c| parse_element(c.trim(), ring))
            .collect::<Result<Vec<_>, _>>()?;
        if point.len() != n {
            return Err(format!("point ({coords}) has {} coordinates, expected {n}", point.len()));
        }
        let after = after.trim_start().strip_prefix('=').ok_or("expected `=` after a point")?;
        let (value, tail) = match after.split_once(',') {
            Some((v, t)) => (v, t),
            None => (after, ""),
        };
        values.push(parse_element(value.trim(), ring)?);
        points.push(point);
        rest = tail.trim();
    }
    FunctionTable::new(ring, n, points, values).map_err(|e| e.to_string())
}
