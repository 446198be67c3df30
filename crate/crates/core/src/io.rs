//! Text formats for distributions and samples.
//!
//! - Distribution TSV: one `id<TAB>mass` per line, mass as an integer, fraction `p/q` or decimal.
//! - Distribution JSON: an array of `{"id": <integer>, "mass": "<mass string>"}`.
//! - Raw samples: element ids separated by whitespace.
//! - Labelled samples: one `id<TAB>label` per line with label `0` or `1`.
//!
//! Blank lines and lines starting with `#` are ignored in the line-oriented formats. Writers emit
//! masses as reduced fractions, so reading back reproduces the exact rationals.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::LabeledSample;
use crate::rational;
use crate::simulate::SparseDistribution;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Non-comment lines with their 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn two_fields(line_no: usize, line: &str) -> Result<(&str, &str)> {
    let mut it = line.split('\t').map(str::trim);
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((a, b)),
        _ => Err(parse_err(line_no, format!("expected two tab-separated fields, got {line:?}"))),
    }
}

fn parse_id(line_no: usize, s: &str) -> Result<u64> {
    s.parse().map_err(|_| parse_err(line_no, format!("bad element id {s:?}")))
}

pub fn parse_distribution_tsv(text: &str) -> Result<SparseDistribution> {
    let mut atoms = Vec::new();
    for (no, line) in content_lines(text) {
        let (id, mass) = two_fields(no, line)?;
        let mass = rational::parse(mass).map_err(|e| parse_err(no, e.to_string()))?;
        atoms.push((parse_id(no, id)?, mass));
    }
    SparseDistribution::from_atoms(atoms)
}

pub fn format_distribution_tsv(dist: &SparseDistribution) -> String {
    dist.atoms().iter().map(|(id, p)| format!("{id}\t{}\n", rational::format(p))).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonAtom {
    id: u64,
    mass: String,
}

pub fn parse_distribution_json(text: &str) -> Result<SparseDistribution> {
    let raw: Vec<JsonAtom> = serde_json::from_str(text)?;
    let atoms = raw
        .into_iter()
        .enumerate()
        .map(|(i, a)| Ok((a.id, rational::parse(&a.mass).map_err(|e| parse_err(i + 1, e.to_string()))?)))
        .collect::<Result<Vec<_>>>()?;
    SparseDistribution::from_atoms(atoms)
}

pub fn format_distribution_json(dist: &SparseDistribution) -> String {
    let atoms: Vec<JsonAtom> =
        dist.atoms().iter().map(|(id, p)| JsonAtom { id: *id, mass: rational::format(p) }).collect();
    serde_json::to_string_pretty(&atoms).expect("plain data serialises")
}

/// Reads a distribution file, choosing JSON for a `.json` extension and TSV otherwise.
pub fn read_distribution(path: &Path) -> Result<SparseDistribution> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        parse_distribution_json(&text)
    } else {
        parse_distribution_tsv(&text)
    }
}

pub fn parse_samples(text: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for (no, line) in content_lines(text) {
        for tok in line.split_whitespace() {
            out.push(parse_id(no, tok)?);
        }
    }
    Ok(out)
}

pub fn parse_labeled(text: &str) -> Result<LabeledSample> {
    let mut sample = LabeledSample::default();
    for (no, line) in content_lines(text) {
        let (id, label) = two_fields(no, line)?;
        let label: u8 = label.parse().map_err(|_| parse_err(no, format!("bad label {label:?}")))?;
        sample.add(parse_id(no, id)?, label, 1).map_err(|e| parse_err(no, e.to_string()))?;
    }
    Ok(sample)
}
