//! Text matrix files.
//!
//! ```text
//! splitadmm-matrix
//! rows 2
//! cols 3
//! kind dense
//! 1e0 -2.5e0 0e0
//! 4e-1 0e0 7e0
//! ```
//!
//! Values are written in Rust's shortest round-trip form, so reading a file
//! back gives the same `f64`s. A `mask` file holds only `0` and `1`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use splitadmm::numkern::DenseMatrix;

const MAGIC: &str = "splitadmm-matrix";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Dense,
    Mask,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Dense => "dense",
            Kind::Mask => "mask",
        }
    }
}

pub fn to_text(m: &DenseMatrix, kind: Kind) -> String {
    let mut out = format!("{MAGIC}\nrows {}\ncols {}\nkind {}\n", m.rows(), m.cols(), kind.name());
    for i in 0..m.rows() {
        let row = m.row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v:e}");
        }
        out.push('\n');
    }
    out
}

pub fn from_text(text: &str) -> Result<(DenseMatrix, Kind)> {
    let mut lines = text.lines();
    ensure!(lines.next().map(str::trim) == Some(MAGIC), "missing '{MAGIC}' header");
    let mut field = |name: &str| -> Result<String> {
        let line = lines.next().with_context(|| format!("missing '{name}' line"))?;
        match line.trim().split_once(' ') {
            Some((key, value)) if key == name => Ok(value.trim().to_string()),
            _ => bail!("expected '{name} <value>', found '{line}'"),
        }
    };
    let rows: usize = field("rows")?.parse().context("rows")?;
    let cols: usize = field("cols")?.parse().context("cols")?;
    let kind = match field("kind")?.as_str() {
        "dense" => Kind::Dense,
        "mask" => Kind::Mask,
        other => bail!("unknown matrix kind '{other}'"),
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen_rows = 0;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().with_context(|| format!("bad value '{tok}' in row {seen_rows}"))?;
            data.push(v);
        }
        ensure!(data.len() - before == cols, "row {seen_rows} has {} values, expected {cols}", data.len() - before);
        seen_rows += 1;
    }
    ensure!(seen_rows == rows, "found {seen_rows} rows, header says {rows}");
    if kind == Kind::Mask {
        ensure!(data.iter().all(|&v| v == 0.0 || v == 1.0), "mask entries must be 0 or 1");
    }
    Ok((DenseMatrix::from_row_major(rows, cols, data)?, kind))
}

/// Writes to a sibling temporary file first so readers never see a partial
/// file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", Path::new(&tmp).display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))
}

pub fn write(path: &Path, m: &DenseMatrix, kind: Kind) -> Result<()> {
    write_atomic(path, to_text(m, kind).as_bytes())
}

pub fn read(path: &Path) -> Result<(DenseMatrix, Kind)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    from_text(&text).with_context(|| format!("parsing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let m = DenseMatrix::from_rows(&[[0.1, -1e-300, 3.0], [f64::MAX, 2.0 / 3.0, -0.0]]).unwrap();
        let (back, kind) = from_text(&to_text(&m, Kind::Dense)).unwrap();
        assert_eq!(kind, Kind::Dense);
        for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn layout() {
        let m = DenseMatrix::from_rows(&[[1.0, 0.0]]).unwrap();
        assert_eq!(to_text(&m, Kind::Mask), "splitadmm-matrix\nrows 1\ncols 2\nkind mask\n1e0 0e0\n");
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(from_text("rows 1\ncols 1\nkind dense\n1\n").is_err());
        assert!(from_text("splitadmm-matrix\nrows 2\ncols 1\nkind dense\n1\n").is_err());
        assert!(from_text("splitadmm-matrix\nrows 1\ncols 2\nkind dense\n1\n").is_err());
        assert!(from_text("splitadmm-matrix\nrows 1\ncols 1\nkind sparse\n1\n").is_err());
        assert!(from_text("splitadmm-matrix\nrows 1\ncols 1\nkind mask\n0.5\n").is_err());
        assert!(from_text("splitadmm-matrix\nrows 1\ncols 1\nkind dense\nx\n").is_err());
    }

    #[test]
    fn empty_matrix() {
        let m = DenseMatrix::zeros(0, 3);
        let (back, _) = from_text(&to_text(&m, Kind::Dense)).unwrap();
        assert_eq!(back.shape(), (0, 3));
    }
}
