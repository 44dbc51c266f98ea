//! Binary LDPC code: systematic GF(2) encoder and flooding sum-product decoder.
//!
//! Parity-check matrices are read from a sparse text format: `#` comment
//! lines, a header `<columns> <rows>`, then one line per check
//! `<check>: <variable> <variable> ...` with zero-based indices.

use crate::error::{Error, Result};

const BUNDLED_648_R34: &str = include_str!("../../assets/ieee80211n_648_r34.txt");

/// Magnitude limit applied to channel LLRs before decoding.
pub const LLR_CLIP: f64 = 30.0;

/// Decoder output.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    /// Hard decisions on the information bits.
    pub info_bits: Vec<u8>,
    /// Hard decisions on the whole codeword.
    pub codeword: Vec<u8>,
    /// Belief-propagation iterations run.
    pub iterations: usize,
    pub parity_satisfied: bool,
}

/// Parity-check description plus a precomputed systematic encoder.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    n: usize,
    checks: Vec<Vec<usize>>,
    /// Codeword positions carrying information bits, in order.
    info_positions: Vec<usize>,
    /// For each dependent position, the information-bit indices it sums.
    parity_equations: Vec<(usize, Vec<usize>)>,
}

impl LdpcCode {
    /// The bundled (648, 486) rate-3/4 code with 27x27 circulants.
    pub fn ieee80211n_648_r34() -> Self {
        Self::from_sparse_text(BUNDLED_648_R34).expect("bundled matrix is valid")
    }

    pub fn from_sparse_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidParityMatrix(msg);
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| bad("missing header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(format!("bad header `{header}`"))))
            .collect::<Result<_>>()?;
        let [n, m] = dims[..] else {
            return Err(bad(format!("header `{header}` needs two numbers")));
        };
        let mut checks = vec![Vec::new(); m];
        for line in lines {
            let (row, vars) = line
                .split_once(':')
                .ok_or_else(|| bad(format!("line `{line}` has no `:`")))?;
            let row: usize = row.trim().parse().map_err(|_| bad(format!("bad row in `{line}`")))?;
            if row >= m {
                return Err(bad(format!("row {row} out of range")));
            }
            for v in vars.split_whitespace() {
                let v: usize = v.parse().map_err(|_| bad(format!("bad index `{v}`")))?;
                if v >= n {
                    return Err(bad(format!("column {v} out of range")));
                }
                checks[row].push(v);
            }
            checks[row].sort_unstable();
            checks[row].dedup();
        }
        Self::from_checks(n, checks)
    }

    pub fn from_checks(n: usize, checks: Vec<Vec<usize>>) -> Result<Self> {
        if checks.iter().any(|c| c.is_empty()) {
            return Err(Error::InvalidParityMatrix("empty check".into()));
        }
        let (info_positions, parity_equations) = systematic_form(n, &checks);
        Ok(Self {
            n,
            checks,
            info_positions,
            parity_equations,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.info_positions.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    pub fn checks(&self) -> &[Vec<usize>] {
        &self.checks
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    /// `H c = 0` over GF(2).
    pub fn is_codeword(&self, codeword: &[u8]) -> bool {
        codeword.len() == self.n
            && self
                .checks
                .iter()
                .all(|c| c.iter().fold(0u8, |acc, &v| acc ^ (codeword[v] & 1)) == 0)
    }

    /// Systematic encoding of `k` information bits.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(Error::DimensionMismatch {
                context: "ldpc information bits",
                expected: self.k(),
                found: info.len(),
            });
        }
        let mut codeword = vec![0u8; self.n];
        for (&pos, &b) in self.info_positions.iter().zip(info) {
            codeword[pos] = b & 1;
        }
        for (pos, terms) in &self.parity_equations {
            codeword[*pos] = terms.iter().fold(0u8, |acc, &j| acc ^ (info[j] & 1));
        }
        Ok(codeword)
    }

    /// Flooding sum-product decoding with early stop once all checks hold.
    /// Channel LLRs are clipped to `±LLR_CLIP`; non-finite values count as 0.
    pub fn decode(&self, llrs: &[f64], max_iterations: usize) -> DecodeOutcome {
        assert_eq!(llrs.len(), self.n, "LLR frame length");
        let channel: Vec<f64> = llrs
            .iter()
            .map(|&l| if l.is_nan() { 0.0 } else { l.clamp(-LLR_CLIP, LLR_CLIP) })
            .collect();
        let edges: usize = self.checks.iter().map(Vec::len).sum();
        let mut to_check = Vec::with_capacity(edges);
        for c in &self.checks {
            to_check.extend(c.iter().map(|&v| channel[v]));
        }
        let mut to_var = vec![0.0; edges];
        let mut total = channel.clone();
        let mut hard: Vec<u8> = total.iter().map(|&l| u8::from(l < 0.0)).collect();
        let mut iterations = 0;
        let mut satisfied = self.is_codeword(&hard);
        let mut tanh_buf = Vec::new();

        while !satisfied && iterations < max_iterations {
            iterations += 1;
            let mut offset = 0;
            for c in &self.checks {
                let d = c.len();
                tanh_buf.clear();
                tanh_buf.extend(to_check[offset..offset + d].iter().map(|m| (m / 2.0).tanh()));
                // Leave-one-out products via prefix and suffix sweeps.
                let mut prefix = 1.0;
                for j in 0..d {
                    to_var[offset + j] = prefix;
                    prefix *= tanh_buf[j];
                }
                let mut suffix = 1.0;
                for j in (0..d).rev() {
                    let product = (to_var[offset + j] * suffix).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                    to_var[offset + j] = 2.0 * product.atanh();
                    suffix *= tanh_buf[j];
                }
                offset += d;
            }
            total.copy_from_slice(&channel);
            let mut offset = 0;
            for c in &self.checks {
                for (j, &v) in c.iter().enumerate() {
                    total[v] += to_var[offset + j];
                }
                offset += c.len();
            }
            let mut offset = 0;
            for c in &self.checks {
                for (j, &v) in c.iter().enumerate() {
                    to_check[offset + j] = total[v] - to_var[offset + j];
                }
                offset += c.len();
            }
            for (h, t) in hard.iter_mut().zip(&total) {
                *h = u8::from(*t < 0.0);
            }
            satisfied = self.is_codeword(&hard);
        }

        DecodeOutcome {
            info_bits: self.info_positions.iter().map(|&p| hard[p]).collect(),
            codeword: hard,
            iterations,
            parity_satisfied: satisfied,
        }
    }
}

/// Gauss–Jordan elimination over GF(2), pivoting from the last column
/// backwards. Returns the free (information) positions and, for every pivot
/// position, the information indices whose sum gives it.
fn systematic_form(n: usize, checks: &[Vec<usize>]) -> (Vec<usize>, Vec<(usize, Vec<usize>)>) {
    let words = n.div_ceil(64);
    let mut rows: Vec<Vec<u64>> = checks
        .iter()
        .map(|c| {
            let mut r = vec![0u64; words];
            for &v in c {
                r[v / 64] ^= 1 << (v % 64);
            }
            r
        })
        .collect();
    let get = |r: &[u64], col: usize| (r[col / 64] >> (col % 64)) & 1 == 1;

    let mut pivots = Vec::new();
    let mut next = 0;
    for col in (0..n).rev() {
        if next == rows.len() {
            break;
        }
        let Some(found) = (next..rows.len()).find(|&r| get(&rows[r], col)) else {
            continue;
        };
        rows.swap(next, found);
        let pivot_row = rows[next].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != next && get(row, col) {
                for (a, b) in row.iter_mut().zip(&pivot_row) {
                    *a ^= b;
                }
            }
        }
        pivots.push(col);
        next += 1;
    }

    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let info_positions: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
    let equations = pivots
        .iter()
        .enumerate()
        .map(|(r, &p)| {
            let terms = info_positions
                .iter()
                .enumerate()
                .filter(|(_, &c)| get(&rows[r], c))
                .map(|(j, _)| j)
                .collect();
            (p, terms)
        })
        .collect();
    (info_positions, equations)
}
