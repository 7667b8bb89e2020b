//! Flat file formats. Element codes are decimal; the header pins q.
//!
//! Plane sets:
//!
//! ```text
//! q=2 n=4 k=2 count=2
//! 1 0 0 0
//! 0 1 0 0
//!
//! 1 0 0 1
//! 0 0 1 0
//! ```
//!
//! Map tables: a `q= n= k= k'=` header, then one codomain index per line in
//! canonical domain order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use grassmann_core::grassmann::{PlaneSet, Space, Subspace};
use grassmann_core::maps::GrassmannMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Core(#[from] grassmann_core::Error),
}

fn perr(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

fn header(line: &str, keys: &[&str]) -> Result<BTreeMap<String, usize>, FormatError> {
    let mut out = BTreeMap::new();
    let fields: Vec<&str> = line.split(' ').collect();
    if fields.len() != keys.len() {
        return Err(perr(1, format!("header needs {}", keys.join(" "))));
    }
    for (field, key) in fields.iter().zip(keys) {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| perr(1, format!("expected {key}=<value>, got {field:?}")))?;
        if k != *key {
            return Err(perr(1, format!("expected key {key}, got {k}")));
        }
        let v: usize = v.parse().map_err(|_| perr(1, format!("{key} is not a number: {v:?}")))?;
        out.insert(k.to_string(), v);
    }
    Ok(out)
}

fn body_lines(text: &str) -> Result<Vec<&str>, FormatError> {
    if text.contains('\r') {
        return Err(perr(1, "CR line endings are not accepted"));
    }
    let mut lines: Vec<&str> = text.split('\n').collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    for (i, l) in lines.iter().enumerate() {
        if l.ends_with(' ') || l.ends_with('\t') || l.starts_with(' ') {
            return Err(perr(i + 1, "stray whitespace"));
        }
    }
    Ok(lines)
}

pub fn write_plane_set(space: &Space, set: &PlaneSet) -> Result<String, FormatError> {
    set.check_space(space)?;
    let mut out = String::new();
    writeln!(out, "q={} n={} k={} count={}", space.q(), space.n(), set.k(), set.len()).unwrap();
    for (b, s) in set.subspaces(space)?.iter().enumerate() {
        if b > 0 {
            out.push('\n');
        }
        for row in s.basis_vectors() {
            let codes: Vec<String> = row.iter().map(u8::to_string).collect();
            out.push_str(&codes.join(" "));
            out.push('\n');
        }
    }
    Ok(out)
}

/// Parses a plane-set file against its own header, returning the space too.
pub fn read_plane_set(text: &str) -> Result<(Space, PlaneSet), FormatError> {
    let lines = body_lines(text)?;
    let first = lines.first().ok_or_else(|| perr(1, "empty file"))?;
    let h = header(first, &["q", "n", "k", "count"])?;
    let (q, n, k, count) = (h["q"], h["n"], h["k"], h["count"]);
    if k == 0 || k >= n {
        return Err(perr(1, format!("k = {k} must lie in 1..n-1")));
    }
    let space = Space::with_order(q, n)?;
    // Header, count blocks of k rows, count - 1 separators.
    let expected = (count * (k + 1)).max(1);
    if lines.len() != expected {
        return Err(perr(
            lines.len().min(expected).max(1),
            format!("{count} blocks of {k} rows need {expected} lines, found {}", lines.len()),
        ));
    }
    let mut planes: Vec<Subspace> = Vec::with_capacity(count);
    for b in 0..count {
        let start = 1 + b * (k + 1);
        if b > 0 && !lines[start - 1].is_empty() {
            return Err(perr(start, "blocks must be separated by one blank line"));
        }
        let mut rows = Vec::with_capacity(k);
        for (r, line) in lines[start..start + k].iter().enumerate() {
            let at = start + r + 1;
            let row: Vec<u8> = line
                .split(' ')
                .map(|c| {
                    c.parse::<u8>()
                        .ok()
                        .filter(|&x| (x as usize) < q)
                        .ok_or_else(|| perr(at, format!("bad element code {c:?} for q = {q}")))
                })
                .collect::<Result<_, _>>()?;
            if row.len() != n {
                return Err(perr(at, format!("expected {n} codes, found {}", row.len())));
            }
            rows.push(row);
        }
        let s = Subspace::new(space.field(), n, &rows)?;
        if s.dim() != k {
            return Err(perr(start + 1, format!("block {} spans dimension {}, not {k}", b + 1, s.dim())));
        }
        planes.push(s);
    }
    let idx: Vec<u32> = planes.iter().map(|s| space.index_of(s)).collect::<Result<_, _>>()?;
    let mut sorted = idx.clone();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        let b = idx.iter().position(|&x| x == w[0]).unwrap();
        return Err(perr(1 + b * (k + 1) + 1, format!("duplicate plane (block {})", b + 1)));
    }
    let set = PlaneSet::new(&space, k, idx)?;
    Ok((space, set))
}

pub fn write_map_table(f: &GrassmannMap) -> String {
    let mut out = String::new();
    writeln!(out, "q={} n={} k={} k'={}", f.q(), f.n(), f.k_dom(), f.k_cod()).unwrap();
    for &t in f.table() {
        writeln!(out, "{t}").unwrap();
    }
    out
}

pub fn read_map_table(text: &str) -> Result<(Space, GrassmannMap), FormatError> {
    let lines = body_lines(text)?;
    let first = lines.first().ok_or_else(|| perr(1, "empty file"))?;
    let h = header(first, &["q", "n", "k", "k'"])?;
    let (q, n, k, k2) = (h["q"], h["n"], h["k"], h["k'"]);
    if k == 0 || k >= n || k2 == 0 || k2 >= n {
        return Err(perr(1, "k and k' must lie in 1..n-1"));
    }
    let space = Space::with_order(q, n)?;
    let size = space.size(k);
    if lines.len() != size + 1 {
        return Err(perr(1, format!("G_{k} has {size} planes but the table has {} rows", lines.len() - 1)));
    }
    let table: Vec<u32> = lines[1..]
        .iter()
        .enumerate()
        .map(|(i, l)| l.parse::<u32>().map_err(|_| perr(i + 2, format!("bad index {l:?}"))))
        .collect::<Result<_, _>>()?;
    let f = GrassmannMap::new(&space, k, k2, table)?;
    Ok((space, f))
}
