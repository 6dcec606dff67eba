//! Sparse binary matrices stored as per-row column lists.

use std::fmt::Write;

use crate::{Error, Result};

/// Header line of the plain-text parity-check format.
pub const EXPORT_MAGIC: &str = "# psqam parity-check v1";

/// Binary matrix with the column indices of each row's ones, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SparseMatrix {
    num_cols: usize,
    rows: Vec<Vec<u32>>,
}

impl SparseMatrix {
    pub fn new(num_cols: usize, mut rows: Vec<Vec<u32>>) -> Self {
        for r in &mut rows {
            r.sort_unstable();
            debug_assert!(r.windows(2).all(|w| w[0] != w[1]), "duplicate entry");
            debug_assert!(r.iter().all(|&c| (c as usize) < num_cols));
        }
        SparseMatrix { num_cols, rows }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.rows[r]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.rows.iter().map(Vec::as_slice)
    }

    pub fn num_entries(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Column-wise view: the rows holding a one in each column.
    pub fn columns(&self) -> Vec<Vec<u32>> {
        let mut cols = vec![Vec::new(); self.num_cols];
        for (r, row) in self.rows.iter().enumerate() {
            for &c in row {
                cols[c as usize].push(r as u32);
            }
        }
        cols
    }

    /// `H · x` over GF(2) for a 0/1 vector.
    pub fn syndrome(&self, x: &[u8]) -> Vec<u8> {
        self.rows
            .iter()
            .map(|row| row.iter().fold(0u8, |acc, &c| acc ^ (x[c as usize] & 1)))
            .collect()
    }

    /// Plain-text export.
    ///
    /// ```text
    /// # psqam parity-check v1
    /// <rows> <cols>
    /// <column indices of row 0, space separated, ascending>
    /// ...
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.num_entries() * 6);
        writeln!(s, "{EXPORT_MAGIC}").unwrap();
        writeln!(s, "{} {}", self.rows.len(), self.num_cols).unwrap();
        for row in &self.rows {
            let mut first = true;
            for c in row {
                if !first {
                    s.push(' ');
                }
                write!(s, "{c}").unwrap();
                first = false;
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Domain(format!("parity-check text: {msg}"));
        let mut lines = text.lines();
        if lines.next() != Some(EXPORT_MAGIC) {
            return Err(bad("missing header".into()));
        }
        let dims = lines.next().ok_or_else(|| bad("missing dimensions".into()))?;
        let dims: Vec<usize> = dims
            .split_whitespace()
            .map(|x| x.parse().map_err(|e| bad(format!("{e}"))))
            .collect::<Result<_>>()?;
        let [num_rows, num_cols] = dims[..] else {
            return Err(bad("dimensions need two integers".into()));
        };
        let rows = lines
            .take(num_rows)
            .map(|l| {
                l.split_whitespace()
                    .map(|x| {
                        let c: u32 = x.parse().map_err(|e| bad(format!("{e}")))?;
                        if c as usize >= num_cols {
                            return Err(bad(format!("column {c} out of range")));
                        }
                        Ok(c)
                    })
                    .collect::<Result<Vec<u32>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.len() != num_rows {
            return Err(bad(format!("expected {num_rows} rows, found {}", rows.len())));
        }
        Ok(SparseMatrix::new(num_cols, rows))
    }
}
