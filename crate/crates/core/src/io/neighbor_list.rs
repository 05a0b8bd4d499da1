//! Neighbor-list text format for 0/1 adjacency: one line per unit,
//! `id: neighbor ids` separated by whitespace. Written 0-based; files with
//! 1-based ids (no zero anywhere, maximum id equal to the unit count) are
//! detected and accepted.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use std::io::{BufRead, BufReader, Read, Write};

pub fn read_neighbor_list<R: Read>(reader: R) -> Result<SparseMatrix> {
    let mut rows: Vec<(usize, Vec<usize>)> = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(Error::Io)?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (id_part, rest) = trimmed.split_once(':').ok_or(Error::Parse {
            line: line_no,
            msg: "expected 'id: neighbor ids'".to_string(),
        })?;
        let id: usize = id_part.trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("bad unit id '{}'", id_part.trim()),
        })?;
        let mut nbrs = Vec::new();
        for tok in rest.split_whitespace() {
            let v: usize = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad neighbor id '{tok}'"),
            })?;
            nbrs.push(v);
        }
        rows.push((id, nbrs));
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidInput("neighbor list is empty".into()));
    }
    let min_id = rows
        .iter()
        .flat_map(|(id, nb)| std::iter::once(*id).chain(nb.iter().copied()))
        .min()
        .unwrap();
    let max_id = rows
        .iter()
        .flat_map(|(id, nb)| std::iter::once(*id).chain(nb.iter().copied()))
        .max()
        .unwrap();
    let offset = if min_id == 0 {
        0
    } else if max_id == n {
        1
    } else {
        return Err(Error::InvalidInput(format!(
            "cannot tell whether ids are 0- or 1-based (min {min_id}, max {max_id}, {n} units)"
        )));
    };

    let mut triplets = Vec::new();
    for (id, nbrs) in &rows {
        let i = id - offset;
        if i >= n {
            return Err(Error::InvalidInput(format!("unit id {id} out of range")));
        }
        for &nb in nbrs {
            let j = nb - offset;
            if j >= n {
                return Err(Error::InvalidInput(format!("neighbor id {nb} out of range")));
            }
            triplets.push((i, j, 1.0));
        }
    }
    SparseMatrix::from_triplets(n, n, &triplets)
}

pub fn write_neighbor_list<W: Write>(writer: &mut W, w: &SparseMatrix) -> Result<()> {
    let n = w.nrows();
    // CSC stores columns; gather the row adjacency first
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..w.ncols() {
        for (i, v) in w.col_iter(j) {
            if v != 0.0 {
                rows[i].push(j);
            }
        }
    }
    for (i, nbrs) in rows.iter().enumerate() {
        write!(writer, "{i}:")?;
        for nb in nbrs {
            write!(writer, " {nb}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::SpatialWeights;

    #[test]
    fn roundtrip_rook_grid() {
        let sw = SpatialWeights::rook_grid(3, 4, false).unwrap();
        let mut buf = Vec::new();
        write_neighbor_list(&mut buf, sw.matrix()).unwrap();
        let back = read_neighbor_list(&buf[..]).unwrap();
        assert_eq!(sw.matrix(), &back);
    }

    #[test]
    fn one_based_files_are_detected() {
        let text = "1: 2\n2: 1 3\n3: 2\n";
        let m = read_neighbor_list(text.as_bytes()).unwrap();
        assert_eq!(m.nrows(), 3);
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(1, 2), 1.0);
        assert_eq!(m.get(0, 2), 0.0);
    }

    #[test]
    fn comments_and_islands() {
        let text = "# three units, last one isolated\n0: 1\n1: 0\n2:\n";
        let m = read_neighbor_list(text.as_bytes()).unwrap();
        assert_eq!(m.nrows(), 3);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn bad_line_reports_number() {
        let text = "0: 1\nnot-a-line\n";
        match read_neighbor_list(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
