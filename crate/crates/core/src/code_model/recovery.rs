use super::{CodeError, Codeword, ParityCheckMatrix};

/// One way to rebuild a lost symbol: `target` is the XOR of `helpers`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RecoveryEquation {
    pub target: usize,
    /// Check row (1-based) the equation comes from.
    pub row: usize,
    /// Ascending, never contains `target`.
    pub helpers: Vec<usize>,
}

impl RecoveryEquation {
    pub fn len(&self) -> usize {
        self.helpers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.helpers.is_empty()
    }

    /// XOR of the helper values in `word`.
    pub fn evaluate(&self, word: &Codeword) -> bool {
        self.helpers.iter().fold(false, |acc, &h| acc ^ word.bit(h))
    }
}

/// All recovery equations for symbol `s`, fewest helpers first, ties by row.
///
/// Rows whose only member is `s` itself carry no helpers and are skipped.
pub fn recovery_equations(
    h: &ParityCheckMatrix,
    s: usize,
) -> Result<Vec<RecoveryEquation>, CodeError> {
    if s == 0 || s > h.n() {
        return Err(CodeError::IndexOutOfRange {
            index: s,
            bound: h.n(),
        });
    }
    let mut equations: Vec<RecoveryEquation> = h
        .col(s)
        .iter()
        .map(|&row| RecoveryEquation {
            target: s,
            row,
            helpers: h.row(row).iter().copied().filter(|&c| c != s).collect(),
        })
        .filter(|eq| !eq.helpers.is_empty())
        .collect();
    equations.sort_by_key(|eq| (eq.helpers.len(), eq.row));
    Ok(equations)
}
