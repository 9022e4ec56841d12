//! The alist sparse-matrix text format.
//!
//! Layout: `N M` (columns, rows), the two maximum degrees, the N column
//! degrees, the M row degrees, then one line per column and one line per row
//! listing 1-based indices, zero-padded up to the maximum degree.

use std::fmt::Write as _;
use std::path::Path;

use wbp_core::gf2::BinaryMatrix;

#[derive(Debug, thiserror::Error)]
pub enum AlistError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unexpected end of input: {0}")]
    Truncated(String),
    #[error("{0}")]
    Matrix(#[from] wbp_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {inner}")]
    InFile { path: String, inner: Box<AlistError> },
}

impl AlistError {
    /// Line number of a parse error.
    pub fn line(&self) -> Option<usize> {
        match self {
            AlistError::Parse { line, .. } => Some(*line),
            AlistError::InFile { inner, .. } => inner.line(),
            _ => None,
        }
    }
}

fn err(line: usize, msg: impl Into<String>) -> AlistError {
    AlistError::Parse { line, msg: msg.into() }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line as `(line number, integers)`.
    fn next_ints(&mut self, what: &str) -> Result<(usize, Vec<usize>), AlistError> {
        for (i, text) in self.inner.by_ref() {
            let text = text.trim();
            if text.is_empty() {
                continue;
            }
            let vals = text
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| err(i + 1, format!("expected a non-negative integer, found {t:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok((i + 1, vals));
        }
        Err(AlistError::Truncated(format!("missing {what}")))
    }
}

// One index list: `deg` indices in 1..=bound followed by optional zero padding.
fn index_list(line: usize, vals: &[usize], deg: usize, max: usize, bound: usize, what: &str) -> Result<Vec<usize>, AlistError> {
    if vals.len() < deg || vals.len() > max.max(deg) {
        return Err(err(line, format!("{what} has degree {deg} (maximum {max}) but lists {} entries", vals.len())));
    }
    let (idx, pad) = vals.split_at(deg);
    if let Some(p) = idx.iter().position(|&v| v == 0) {
        return Err(err(line, format!("{what}: entry {} is 0, but indices are 1-based", p + 1)));
    }
    if let Some(&v) = idx.iter().find(|&&v| v > bound) {
        return Err(err(line, format!("{what}: index {v} out of range 1..={bound}")));
    }
    if pad.iter().any(|&v| v != 0) {
        return Err(err(line, format!("{what}: more than {deg} nonzero indices")));
    }
    let mut sorted: Vec<usize> = idx.iter().map(|v| v - 1).collect();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(err(line, format!("{what}: repeated index")));
    }
    Ok(sorted)
}

/// Parses alist text. Column and row lists must describe the same matrix.
pub fn parse_alist(text: &str) -> Result<BinaryMatrix, AlistError> {
    let mut lines = Lines { inner: text.lines().enumerate() };
    let (l, dims) = lines.next_ints("dimensions")?;
    let [n, m] = dims[..] else {
        return Err(err(l, format!("expected `columns rows`, found {} values", dims.len())));
    };
    let (l, maxes) = lines.next_ints("maximum degrees")?;
    let [max_col, max_row] = maxes[..] else {
        return Err(err(l, format!("expected two maximum degrees, found {} values", maxes.len())));
    };
    let (l, col_deg) = lines.next_ints("column degrees")?;
    if col_deg.len() != n {
        return Err(err(l, format!("expected {n} column degrees, found {}", col_deg.len())));
    }
    if let Some((v, &d)) = col_deg.iter().enumerate().find(|(_, &d)| d > max_col || d > m) {
        return Err(err(l, format!("column {} has degree {d}, above the maximum {max_col} or the row count {m}", v + 1)));
    }
    let (l, row_deg) = lines.next_ints("row degrees")?;
    if row_deg.len() != m {
        return Err(err(l, format!("expected {m} row degrees, found {}", row_deg.len())));
    }
    if let Some((c, &d)) = row_deg.iter().enumerate().find(|(_, &d)| d > max_row || d > n) {
        return Err(err(l, format!("row {} has degree {d}, above the maximum {max_row} or the column count {n}", c + 1)));
    }
    if col_deg.iter().sum::<usize>() != row_deg.iter().sum::<usize>() {
        return Err(err(l, "column and row degrees sum to different totals"));
    }

    let mut from_cols: Vec<Vec<usize>> = vec![Vec::new(); m];
    for v in 0..n {
        if max_col == 0 {
            break;
        }
        let (l, vals) = lines.next_ints(&format!("index list of column {}", v + 1))?;
        for c in index_list(l, &vals, col_deg[v], max_col, m, &format!("column {}", v + 1))? {
            from_cols[c].push(v);
        }
    }
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(m);
    for c in 0..m {
        if max_row == 0 {
            rows.push(Vec::new());
            continue;
        }
        let (l, vals) = lines.next_ints(&format!("index list of row {}", c + 1))?;
        let row = index_list(l, &vals, row_deg[c], max_row, n, &format!("row {}", c + 1))?;
        if row != from_cols[c] {
            return Err(err(l, format!("row {} disagrees with the column lists", c + 1)));
        }
        rows.push(row);
    }
    if let Ok((l, _)) = lines.next_ints("") {
        return Err(err(l, "unexpected data after the row lists"));
    }
    Ok(BinaryMatrix::from_supports(n, rows)?)
}

/// Renders `m` as alist text.
pub fn format_alist(m: &BinaryMatrix) -> String {
    let (n, rows) = (m.cols(), m.rows());
    let col_w = m.column_weights();
    let row_w = m.row_weights();
    let max_col = col_w.iter().copied().max().unwrap_or(0);
    let max_row = row_w.iter().copied().max().unwrap_or(0);
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for c in 0..rows {
        for &v in m.row_support(c) {
            cols[v as usize].push(c + 1);
        }
    }
    let join = |xs: &mut dyn Iterator<Item = usize>| xs.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    let _ = writeln!(out, "{n} {rows}");
    let _ = writeln!(out, "{max_col} {max_row}");
    let _ = writeln!(out, "{}", join(&mut col_w.iter().copied()));
    let _ = writeln!(out, "{}", join(&mut row_w.iter().copied()));
    for list in &cols {
        let pad = max_col - list.len();
        let _ = writeln!(out, "{}", join(&mut list.iter().copied().chain(std::iter::repeat_n(0, pad))));
    }
    for c in 0..rows {
        let pad = max_row - m.row_support(c).len();
        let _ = writeln!(out, "{}", join(&mut m.row_support(c).iter().map(|&v| v as usize + 1).chain(std::iter::repeat_n(0, pad))));
    }
    out
}

pub fn read_alist(path: &Path) -> Result<BinaryMatrix, AlistError> {
    let text = std::fs::read_to_string(path).map_err(|source| AlistError::Io { path: path.display().to_string(), source })?;
    parse_alist(&text).map_err(|e| AlistError::InFile { path: path.display().to_string(), inner: Box::new(e) })
}

pub fn write_alist(m: &BinaryMatrix, path: &Path) -> Result<(), AlistError> {
    std::fs::write(path, format_alist(m)).map_err(|source| AlistError::Io { path: path.display().to_string(), source })
}
