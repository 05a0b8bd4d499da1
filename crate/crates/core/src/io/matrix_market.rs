//! Matrix Market coordinate reader/writer. Real, integer, and pattern
//! fields are accepted; symmetric files are expanded to full storage on
//! read.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use std::io::{BufRead, BufReader, Read, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixMarketKind {
    General,
    Symmetric,
}

pub fn read_matrix_market<R: Read>(reader: R) -> Result<SparseMatrix> {
    let mut lines = BufReader::new(reader).lines().enumerate();

    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))?
        .1
        .map_err(Error::Io)?;
    let header_lc = header.to_lowercase();
    if !header_lc.starts_with("%%matrixmarket") {
        return Err(parse_err(1, "missing MatrixMarket header"));
    }
    let tokens: Vec<&str> = header_lc.split_whitespace().collect();
    if tokens.len() < 5 || tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(parse_err(
            1,
            "only 'matrix coordinate' files are supported",
        ));
    }
    let field = tokens[3];
    if !matches!(field, "real" | "integer" | "pattern") {
        return Err(parse_err(1, &format!("unsupported field '{field}'")));
    }
    let kind = match tokens[4] {
        "general" => MatrixMarketKind::General,
        "symmetric" => MatrixMarketKind::Symmetric,
        other => return Err(parse_err(1, &format!("unsupported symmetry '{other}'"))),
    };

    // skip comments, read the size line
    let mut size_line = None;
    let mut line_no = 1;
    for (idx, line) in lines.by_ref() {
        line_no = idx + 1;
        let line = line.map_err(Error::Io)?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some(trimmed.to_string());
        break;
    }
    let size_line = size_line.ok_or_else(|| parse_err(line_no, "missing size line"))?;
    let dims: Vec<&str> = size_line.split_whitespace().collect();
    if dims.len() != 3 {
        return Err(parse_err(line_no, "size line must be 'nrows ncols nnz'"));
    }
    let nrows: usize = dims[0]
        .parse()
        .map_err(|_| parse_err(line_no, "bad row count"))?;
    let ncols: usize = dims[1]
        .parse()
        .map_err(|_| parse_err(line_no, "bad column count"))?;
    let nnz: usize = dims[2]
        .parse()
        .map_err(|_| parse_err(line_no, "bad nnz count"))?;

    let mut triplets = Vec::with_capacity(if kind == MatrixMarketKind::Symmetric {
        2 * nnz
    } else {
        nnz
    });
    let mut seen = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(Error::Io)?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        let expected = if field == "pattern" { 2 } else { 3 };
        if parts.len() < expected {
            return Err(parse_err(line_no, "entry line too short"));
        }
        let i: usize = parts[0]
            .parse()
            .map_err(|_| parse_err(line_no, "bad row index"))?;
        let j: usize = parts[1]
            .parse()
            .map_err(|_| parse_err(line_no, "bad column index"))?;
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(parse_err(line_no, "index out of bounds (1-based)"));
        }
        let v: f64 = if field == "pattern" {
            1.0
        } else {
            parts[2]
                .parse()
                .map_err(|_| parse_err(line_no, "bad value"))?
        };
        triplets.push((i - 1, j - 1, v));
        if kind == MatrixMarketKind::Symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected {nnz} entries, found {seen}"),
        });
    }
    SparseMatrix::from_triplets(nrows, ncols, &triplets)
}

/// Write in coordinate real format. With `MatrixMarketKind::Symmetric` only
/// the lower triangle is stored; the caller is responsible for the matrix
/// actually being symmetric.
pub fn write_matrix_market<W: Write>(
    writer: &mut W,
    m: &SparseMatrix,
    kind: MatrixMarketKind,
) -> Result<()> {
    let sym = kind == MatrixMarketKind::Symmetric;
    writeln!(
        writer,
        "%%MatrixMarket matrix coordinate real {}",
        if sym { "symmetric" } else { "general" }
    )?;
    let mut entries = Vec::new();
    for j in 0..m.ncols() {
        for (i, v) in m.col_iter(j) {
            if !sym || i >= j {
                entries.push((i, j, v));
            }
        }
    }
    writeln!(writer, "{} {} {}", m.nrows(), m.ncols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(writer, "{} {} {}", i + 1, j + 1, v)?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse {
        line,
        msg: msg.to_string(),
    }
}
