//! Plain-text side files: landmarks, functional maps, labels, vertex maps,
//! curves and traces.
//!
//! Blank lines and lines starting with `#` are skipped everywhere. Vertex
//! indices in files are 1-based.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dense::RowMatrix;
use crate::error::{Error, Result};
use crate::init::{FunctionalMap, LandmarkSet};
use crate::metrics::CumulativeCurve;
use crate::solver::TraceRow;

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_index(tok: &str, n: usize, path: &Path, line: usize) -> Result<usize> {
    let i: usize = tok
        .parse()
        .map_err(|_| Error::parse(path, line, format!("bad vertex index {tok:?}")))?;
    if i == 0 || i > n {
        return Err(Error::parse(path, line, format!("vertex index {i} outside 1..={n}")));
    }
    Ok(i - 1)
}

/// Landmark pairs, one `p q` per line (source vertex, target vertex).
pub fn parse_landmarks(text: &str, path: &Path, n1: usize, n2: usize) -> Result<LandmarkSet> {
    let mut pairs = Vec::new();
    for (line, l) in content_lines(text) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::parse(path, line, "expected two vertex indices"));
        }
        pairs.push((parse_index(toks[0], n1, path, line)?, parse_index(toks[1], n2, path, line)?));
    }
    LandmarkSet::new(pairs, n1, n2)
}

pub fn read_landmarks(path: impl AsRef<Path>, n1: usize, n2: usize) -> Result<LandmarkSet> {
    let path = path.as_ref();
    parse_landmarks(&fs::read_to_string(path)?, path, n1, n2)
}

/// Two blocks, `C12 k1 k2` followed by `k1` rows of `k2` numbers, then
/// `C21 k2 k1` followed by `k2` rows of `k1` numbers.
pub fn parse_functional_map(text: &str, path: &Path) -> Result<FunctionalMap> {
    let mut lines = content_lines(text);
    let mut block = |name: &str| -> Result<RowMatrix> {
        let (line, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 0, format!("missing {name} block")))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 3 || toks[0] != name {
            return Err(Error::parse(path, line, format!("expected `{name} rows cols`")));
        }
        let dim = |t: &str| -> Result<usize> {
            t.parse().map_err(|_| Error::parse(path, line, format!("bad dimension {t:?}")))
        };
        let (r, c) = (dim(toks[1])?, dim(toks[2])?);
        let mut data = Vec::with_capacity(r * c);
        for _ in 0..r {
            let (line, row) = lines
                .next()
                .ok_or_else(|| Error::parse(path, line, format!("{name} has fewer than {r} rows")))?;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::parse(path, line, format!("bad number {t:?}"))))
                .collect::<Result<_>>()?;
            if vals.len() != c {
                return Err(Error::parse(path, line, format!("expected {c} values, found {}", vals.len())));
            }
            data.extend(vals);
        }
        RowMatrix::from_vec(r, c, data)
    };
    let c12 = block("C12")?;
    let c21 = block("C21")?;
    FunctionalMap::new(c12, c21)
}

pub fn read_functional_map(path: impl AsRef<Path>) -> Result<FunctionalMap> {
    let path = path.as_ref();
    parse_functional_map(&fs::read_to_string(path)?, path)
}

pub fn functional_map_text(fmap: &FunctionalMap) -> String {
    let mut s = String::new();
    for (name, m) in [("C12", &fmap.c12), ("C21", &fmap.c21)] {
        let _ = writeln!(s, "{name} {} {}", m.rows(), m.cols());
        for row in m.row_iter() {
            let strs: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            let _ = writeln!(s, "{}", strs.join(" "));
        }
    }
    s
}

/// One integer label per line; negative labels mean "unlabelled".
pub fn parse_labels(text: &str, path: &Path, n: usize) -> Result<Vec<Option<i64>>> {
    let mut out = Vec::with_capacity(n);
    for (line, l) in content_lines(text) {
        let v: i64 = l
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad label {l:?}")))?;
        out.push((v >= 0).then_some(v));
    }
    if out.len() != n {
        return Err(Error::Dimension(format!("{}: {} labels for {n} elements", path.display(), out.len())));
    }
    Ok(out)
}

pub fn read_labels(path: impl AsRef<Path>, n: usize) -> Result<Vec<Option<i64>>> {
    let path = path.as_ref();
    parse_labels(&fs::read_to_string(path)?, path, n)
}

/// One target vertex per source vertex, 1-based; `0` or a negative value
/// marks a missing entry.
pub fn parse_vertex_map(text: &str, path: &Path, n_source: usize, n_target: usize) -> Result<Vec<Option<usize>>> {
    let mut out = Vec::with_capacity(n_source);
    for (line, l) in content_lines(text) {
        let v: i64 = l
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad vertex index {l:?}")))?;
        if v > n_target as i64 {
            return Err(Error::parse(path, line, format!("vertex index {v} outside 1..={n_target}")));
        }
        out.push((v > 0).then(|| v as usize - 1));
    }
    if out.len() != n_source {
        return Err(Error::Dimension(format!("{}: {} entries for {n_source} vertices", path.display(), out.len())));
    }
    Ok(out)
}

pub fn read_vertex_map(path: impl AsRef<Path>, n_source: usize, n_target: usize) -> Result<Vec<Option<usize>>> {
    let path = path.as_ref();
    parse_vertex_map(&fs::read_to_string(path)?, path, n_source, n_target)
}

pub fn write_curve(path: impl AsRef<Path>, curve: &CumulativeCurve) -> Result<()> {
    fs::write(path, curve.to_csv())?;
    Ok(())
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut s = String::from(TraceRow::CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

pub fn write_trace(path: impl AsRef<Path>, rows: &[TraceRow]) -> Result<()> {
    fs::write(path, trace_csv(rows))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test")
    }

    #[test]
    fn landmarks() {
        let l = parse_landmarks("# pairs\n1 2\n\n3 1\n", p(), 3, 2).unwrap();
        assert_eq!(l.pairs, vec![(0, 1), (2, 0)]);
        assert!(parse_landmarks("0 1\n", p(), 3, 2).is_err());
        assert!(parse_landmarks("1 3\n", p(), 3, 2).is_err());
        assert!(parse_landmarks("1\n", p(), 3, 2).is_err());
    }

    #[test]
    fn functional_map_round_trip() {
        let fm = FunctionalMap::new(
            RowMatrix::from_vec(2, 3, vec![1.0, 0.5, -2.0, 0.0, 1e-3, 3.0]).unwrap(),
            RowMatrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap(),
        )
        .unwrap();
        let back = parse_functional_map(&functional_map_text(&fm), p()).unwrap();
        assert_eq!(back, fm);
        assert!(parse_functional_map("C12 1 1\n1\n", p()).is_err());
        assert!(parse_functional_map("C12 1 2\n1\nC21 2 1\n1\n1\n", p()).is_err());
    }

    #[test]
    fn labels_and_vertex_maps() {
        assert_eq!(parse_labels("1\n-1\n2\n", p(), 3).unwrap(), vec![Some(1), None, Some(2)]);
        assert!(parse_labels("1\n", p(), 2).is_err());
        assert!(parse_labels("x\n", p(), 1).is_err());
        assert_eq!(parse_vertex_map("2\n0\n", p(), 2, 2).unwrap(), vec![Some(1), None]);
        assert!(parse_vertex_map("3\n1\n", p(), 2, 2).is_err());
    }
}
