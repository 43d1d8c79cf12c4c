use std::fmt;

use super::gf2::{self, BitRow};
use super::CodeError;

/// Sparse binary parity-check matrix.
///
/// Symbols (columns) and checks (rows) are numbered from 1. Each row is stored
/// as its strictly ascending support set; the column view and the GF(2) rank
/// are derived once at construction.
#[derive(Clone)]
pub struct ParityCheckMatrix {
    n: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
    rank: usize,
}

impl ParityCheckMatrix {
    /// Builds a matrix with `n` columns from row support sets (1-based column
    /// indices, any order).
    pub fn new(n: usize, rows: Vec<Vec<usize>>) -> Result<Self, CodeError> {
        if n == 0 {
            return Err(CodeError::Empty);
        }
        let mut rows = rows;
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            if let Some(&bad) = row.iter().find(|&&c| c == 0 || c > n) {
                return Err(CodeError::IndexOutOfRange {
                    index: bad,
                    bound: n,
                });
            }
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(CodeError::DuplicateIndex { row: r + 1 });
            }
        }
        let mut cols = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for &c in row {
                cols[c - 1].push(r + 1);
            }
        }
        let rank = gf2::reduce(packed_rows(n, &rows), n).rows.len();
        if rank >= n {
            return Err(CodeError::NoInformation { n, rank });
        }
        Ok(Self {
            n,
            rows,
            cols,
            rank,
        })
    }

    /// Blocklength (number of symbols).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Code dimension, `n - rank(H)`.
    pub fn k(&self) -> usize {
        self.n - self.rank
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Support of row `r` (1-based).
    pub fn row(&self, r: usize) -> &[usize] {
        &self.rows[r - 1]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[usize]> {
        self.rows.iter().map(Vec::as_slice)
    }

    /// Rows (1-based, ascending) whose support contains symbol `s`.
    pub fn col(&self, s: usize) -> &[usize] {
        &self.cols[s - 1]
    }

    pub fn col_degree(&self, s: usize) -> usize {
        self.cols[s - 1].len()
    }

    pub fn row_degree(&self, r: usize) -> usize {
        self.rows[r - 1].len()
    }

    pub fn max_col_degree(&self) -> usize {
        self.cols.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_row_degree(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// True when every check is satisfied by `word`.
    pub fn is_codeword(&self, word: &Codeword) -> bool {
        word.len() == self.n
            && self
                .rows
                .iter()
                .all(|row| !row.iter().fold(false, |acc, &c| acc ^ word.bit(c)))
    }
}

impl PartialEq for ParityCheckMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.rows == other.rows
    }
}

impl Eq for ParityCheckMatrix {}

impl fmt::Debug for ParityCheckMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParityCheckMatrix")
            .field("n", &self.n)
            .field("rows", &self.rows.len())
            .field("rank", &self.rank)
            .finish()
    }
}

fn packed_rows(n: usize, rows: &[Vec<usize>]) -> Vec<BitRow> {
    rows.iter()
        .map(|row| {
            let mut bits = BitRow::zeros(n);
            for &c in row {
                bits.set(c - 1);
            }
            bits
        })
        .collect()
}

/// Binary word indexed by 1-based symbol number.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Codeword(Vec<bool>);

impl Codeword {
    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Value of symbol `s` (1-based).
    #[inline]
    pub fn bit(&self, s: usize) -> bool {
        self.0[s - 1]
    }

    pub fn set(&mut self, s: usize, value: bool) {
        self.0[s - 1] = value;
    }

    pub fn as_bits(&self) -> &[bool] {
        &self.0
    }
}

/// Systematic encoder over a fixed information set.
///
/// The information set is the set of pivot-free columns found by
/// left-to-right Gauss-Jordan elimination of `H`; every other column is a
/// pivot whose value is the parity of the information bits selected by its
/// reduced row.
pub struct SystematicEncoder {
    n: usize,
    info_set: Vec<usize>,
    pivots: Vec<usize>,
    rows: Vec<BitRow>,
}

impl SystematicEncoder {
    pub fn new(h: &ParityCheckMatrix) -> Self {
        let echelon = gf2::reduce(packed_rows(h.n, &h.rows), h.n);
        let mut is_pivot = vec![false; h.n];
        for &p in &echelon.pivots {
            is_pivot[p] = true;
        }
        let info_set = (0..h.n).filter(|&c| !is_pivot[c]).map(|c| c + 1).collect();
        let rows = echelon
            .rows
            .into_iter()
            .zip(&echelon.pivots)
            .map(|(mut row, &p)| {
                row.clear(p);
                row
            })
            .collect();
        Self {
            n: h.n,
            info_set,
            pivots: echelon.pivots,
            rows,
        }
    }

    pub fn k(&self) -> usize {
        self.info_set.len()
    }

    /// Information positions (1-based, ascending).
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn encode(&self, data: &[bool]) -> Result<Codeword, CodeError> {
        if data.len() != self.k() {
            return Err(CodeError::DataLength {
                expected: self.k(),
                actual: data.len(),
            });
        }
        let mut packed = BitRow::zeros(self.n);
        for (&pos, &bit) in self.info_set.iter().zip(data) {
            if bit {
                packed.set(pos - 1);
            }
        }
        let mut word = Codeword::zeros(self.n);
        for &pos in &self.info_set {
            word.set(pos, packed.get(pos - 1));
        }
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            word.set(p + 1, row.dot(&packed));
        }
        Ok(word)
    }
}

/// Encodes `data` on the information set of `h`. Builds a fresh encoder;
/// reuse a [`SystematicEncoder`] when encoding many words.
pub fn systematic_encode(h: &ParityCheckMatrix, data: &[bool]) -> Result<Codeword, CodeError> {
    SystematicEncoder::new(h).encode(data)
}
