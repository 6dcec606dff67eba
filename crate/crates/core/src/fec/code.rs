use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::gf2::{pack, BitMatrix};
use super::sparse::SparseMatrix;
use crate::shaping::CodeRate;
use crate::{Error, Result};

const SHIFT_ATTEMPTS: usize = 10_000;

/// Parameters of the quasi-cyclic construction.
///
/// The base matrix has `check_blocks` rows and `info_blocks + check_blocks`
/// columns of `lifting × lifting` circulant permutation blocks. Information
/// columns come first and each carries `info_column_weight` circulants with
/// seeded random shifts, rejected whenever they would close a 4-cycle. The
/// parity part is the dual-diagonal staircase preceded by a weight-3 column
/// with shifts `(1, 0, 1)` on the first, middle and last block rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodeSpec {
    pub lifting: usize,
    pub info_blocks: usize,
    pub check_blocks: usize,
    pub info_column_weight: usize,
    pub seed: u64,
}

impl Default for CodeSpec {
    /// Rate 5/6 with 3456 coded bits.
    fn default() -> Self {
        CodeSpec {
            lifting: 144,
            info_blocks: 20,
            check_blocks: 4,
            info_column_weight: 3,
            seed: 0x5eed_0c0d_e5a5_5e5d,
        }
    }
}

impl CodeSpec {
    pub fn code_length(&self) -> usize {
        (self.info_blocks + self.check_blocks) * self.lifting
    }

    pub fn info_length(&self) -> usize {
        self.info_blocks * self.lifting
    }
}

/// Systematic binary LDPC code.
///
/// Codewords are `[information | parity]`: columns `0..k` are systematic.
#[derive(Debug, Clone)]
pub struct CodeDefinition {
    spec: CodeSpec,
    h: SparseMatrix,
    k: usize,
    parity_inverse: BitMatrix,
    pub(super) row_ptr: Vec<usize>,
    pub(super) edge_vars: Vec<u32>,
    pub(super) var_ptr: Vec<usize>,
    pub(super) var_edges: Vec<u32>,
}

/// Builds the parity-check matrix described by `spec`.
pub fn build_code(spec: &CodeSpec) -> Result<CodeDefinition> {
    let z = spec.lifting;
    let mb = spec.check_blocks;
    let kb = spec.info_blocks;
    if z < 2 || kb == 0 {
        return Err(Error::Construction(format!("degenerate spec {spec:?}")));
    }
    if mb < 3 {
        return Err(Error::Construction(
            "the staircase parity part needs at least 3 block rows".into(),
        ));
    }
    if spec.info_column_weight == 0 || spec.info_column_weight > mb {
        return Err(Error::Construction(format!(
            "information column weight {} outside 1..={mb}",
            spec.info_column_weight
        )));
    }
    let nb = kb + mb;
    let mut base: Vec<Vec<Option<usize>>> = vec![vec![None; nb]; mb];

    base[0][kb] = Some(1);
    base[mb / 2][kb] = Some(0);
    base[mb - 1][kb] = Some(1);
    for j in 1..mb {
        base[j - 1][kb + j] = Some(0);
        base[j][kb + j] = Some(0);
    }
    if has_four_cycle(&base, z) {
        return Err(Error::Construction("parity part has a 4-cycle".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for c in 0..kb {
        for t in 0..spec.info_column_weight {
            let r = (c + t) % mb;
            let mut placed = false;
            for _ in 0..SHIFT_ATTEMPTS {
                base[r][c] = Some(rng.random_range(0..z));
                if !creates_four_cycle(&base, z, r, c) {
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::Construction(format!(
                    "no 4-cycle-free shift found for block ({r}, {c}); increase the lifting"
                )));
            }
        }
    }

    let n = nb * z;
    let mut rows = vec![Vec::new(); mb * z];
    for (br, base_row) in base.iter().enumerate() {
        for (bc, shift) in base_row.iter().enumerate() {
            if let Some(s) = shift {
                for i in 0..z {
                    rows[br * z + i].push((bc * z + (i + s) % z) as u32);
                }
            }
        }
    }
    let h = SparseMatrix::new(n, rows);
    CodeDefinition::from_parity_check(*spec, h)
}

fn creates_four_cycle(base: &[Vec<Option<usize>>], z: usize, r: usize, c: usize) -> bool {
    let s_rc = base[r][c].unwrap() as isize;
    for (r2, row2) in base.iter().enumerate() {
        if r2 == r {
            continue;
        }
        let Some(s_r2c) = row2[c] else { continue };
        for c2 in 0..row2.len() {
            if c2 == c {
                continue;
            }
            if let (Some(s_rc2), Some(s_r2c2)) = (base[r][c2], row2[c2]) {
                let d = s_rc - s_rc2 as isize + s_r2c2 as isize - s_r2c as isize;
                if d.rem_euclid(z as isize) == 0 {
                    return true;
                }
            }
        }
    }
    false
}

fn has_four_cycle(base: &[Vec<Option<usize>>], z: usize) -> bool {
    (0..base.len()).any(|r| {
        (0..base[r].len()).any(|c| base[r][c].is_some() && creates_four_cycle(base, z, r, c))
    })
}

impl CodeDefinition {
    /// Wraps a parity-check matrix whose last `rows` columns form an
    /// invertible square block, making columns `0..n-rows` systematic.
    pub fn from_parity_check(spec: CodeSpec, h: SparseMatrix) -> Result<Self> {
        let m = h.num_rows();
        let n = h.num_cols();
        if m == 0 || m >= n {
            return Err(Error::Construction(format!("{m}x{n} parity-check matrix has no information columns")));
        }
        let k = n - m;
        let mut hp = BitMatrix::zeros(m, m);
        for (r, row) in h.rows().enumerate() {
            for &c in row {
                if c as usize >= k {
                    hp.flip(r, c as usize - k);
                }
            }
        }
        let parity_inverse = hp.inverse().ok_or_else(|| {
            Error::Construction("parity part is rank deficient".into())
        })?;

        let mut row_ptr = Vec::with_capacity(m + 1);
        let mut edge_vars = Vec::with_capacity(h.num_entries());
        row_ptr.push(0);
        for row in h.rows() {
            edge_vars.extend_from_slice(row);
            row_ptr.push(edge_vars.len());
        }
        let mut per_var = vec![Vec::new(); n];
        for (e, &v) in edge_vars.iter().enumerate() {
            per_var[v as usize].push(e as u32);
        }
        let mut var_ptr = Vec::with_capacity(n + 1);
        let mut var_edges = Vec::with_capacity(edge_vars.len());
        var_ptr.push(0);
        for edges in per_var {
            var_edges.extend(edges);
            var_ptr.push(var_edges.len());
        }
        Ok(CodeDefinition {
            spec,
            h,
            k,
            parity_inverse,
            row_ptr,
            edge_vars,
            var_ptr,
            var_edges,
        })
    }

    pub fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    pub fn parity_check(&self) -> &SparseMatrix {
        &self.h
    }

    /// Codeword length `n_c`.
    pub fn n(&self) -> usize {
        self.h.num_cols()
    }

    /// Information length `k_c`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn parity_bits(&self) -> usize {
        self.n() - self.k
    }

    pub fn rate(&self) -> CodeRate {
        CodeRate::new(self.k as u64, self.n() as u64).expect("0 < k < n")
    }

    pub fn systematic_columns(&self) -> std::ops::Range<usize> {
        0..self.k
    }

    /// Systematic encoding: the codeword is `info` followed by the parity
    /// bits that zero the syndrome.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k {
            return Err(Error::framing("information bits", self.k, info.len()));
        }
        let k = self.k as u32;
        let partial: Vec<u8> = self
            .h
            .rows()
            .map(|row| {
                row.iter()
                    .take_while(|&&c| c < k)
                    .fold(0u8, |acc, &c| acc ^ (info[c as usize] & 1))
            })
            .collect();
        let parity = self.parity_inverse.mul_packed(&pack(&partial));
        let mut codeword = Vec::with_capacity(self.n());
        codeword.extend(info.iter().map(|b| b & 1));
        codeword.extend(parity);
        Ok(codeword)
    }

    pub fn syndrome(&self, word: &[u8]) -> Vec<u8> {
        self.h.syndrome(word)
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        word.len() == self.n() && self.syndrome(word).iter().all(|&s| s == 0)
    }

    /// Plain-text export of the parity-check matrix.
    pub fn export(&self) -> String {
        self.h.to_text()
    }

    /// SHA-256 of [`CodeDefinition::export`], in hex.
    pub fn code_hash(&self) -> String {
        let digest = Sha256::digest(self.export().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_code_is_consistent() {
        let spec = CodeSpec {
            lifting: 12,
            info_blocks: 5,
            check_blocks: 3,
            info_column_weight: 3,
            seed: 3,
        };
        let code = build_code(&spec).unwrap();
        assert_eq!(code.n(), 96);
        assert_eq!(code.k(), 60);
        let zero = code.encode(&vec![0; 60]).unwrap();
        assert!(zero.iter().all(|&b| b == 0));
        let info: Vec<u8> = (0..60).map(|i| (i * 7 % 3 == 0) as u8).collect();
        let cw = code.encode(&info).unwrap();
        assert!(code.is_codeword(&cw));
        assert_eq!(&cw[..60], &info[..]);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = CodeSpec::default();
        spec.check_blocks = 2;
        assert!(matches!(build_code(&spec), Err(Error::Construction(_))));
        let mut spec = CodeSpec::default();
        spec.info_column_weight = 5;
        assert!(matches!(build_code(&spec), Err(Error::Construction(_))));
        // Too small a lifting cannot avoid 4-cycles with weight-4 columns.
        let spec = CodeSpec {
            lifting: 3,
            info_blocks: 20,
            check_blocks: 4,
            info_column_weight: 4,
            seed: 1,
        };
        assert!(matches!(build_code(&spec), Err(Error::Construction(_))));
    }

    #[test]
    fn rank_deficient_parity_part() {
        // Two identical parity columns.
        let h = SparseMatrix::new(4, vec![vec![0, 2, 3], vec![1, 2, 3]]);
        assert!(matches!(
            CodeDefinition::from_parity_check(CodeSpec::default(), h),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn encode_length_checked() {
        let code = build_code(&CodeSpec::default()).unwrap();
        assert!(matches!(code.encode(&[0; 10]), Err(Error::Framing { .. })));
    }
}
