//! Parity-check matrices, recovery equations and GF(2) encoding.

mod alist;
mod array;
mod gf2;
mod matrix;
mod recovery;

use thiserror::Error;

pub use alist::{load_alist, save_alist};
pub use array::{build_array_ldpc, ArrayCodeSpec};
pub use matrix::{systematic_encode, Codeword, ParityCheckMatrix, SystematicEncoder};
pub use recovery::{recovery_equations, RecoveryEquation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("matrix has no columns")]
    Empty,
    #[error("index {index} outside 1..={bound}")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("row {row} repeats a column index")]
    DuplicateIndex { row: usize },
    #[error("rank {rank} leaves no information symbols for n = {n}")]
    NoInformation { n: usize, rank: usize },
    #[error("invalid array code: {0}")]
    ArraySpec(String),
    #[error("malformed alist: {0}")]
    Alist(String),
    #[error("expected {expected} data bits, got {actual}")]
    DataLength { expected: usize, actual: usize },
}

/// The (8, 4) example code used throughout the tests and docs.
///
/// ```text
/// 0 0 1 0 1 1 0 0
/// 1 0 1 0 0 0 1 0
/// 1 1 0 1 0 0 0 0
/// 0 1 0 1 0 0 1 1
/// ```
pub fn example_matrix() -> ParityCheckMatrix {
    ParityCheckMatrix::new(
        8,
        vec![vec![3, 5, 6], vec![1, 3, 7], vec![1, 2, 4], vec![2, 4, 7, 8]],
    )
    .expect("example matrix is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn helpers(eqs: &[RecoveryEquation]) -> Vec<Vec<usize>> {
        eqs.iter().map(|e| e.helpers.clone()).collect()
    }

    #[test]
    fn example_has_dimension_four() {
        let h = example_matrix();
        assert_eq!(h.n(), 8);
        assert_eq!(h.k(), 4);
    }

    #[test]
    fn equations_for_first_two_symbols() {
        let h = example_matrix();
        let s1 = recovery_equations(&h, 1).unwrap();
        assert_eq!(helpers(&s1), vec![vec![3, 7], vec![2, 4]]);
        let s2 = recovery_equations(&h, 2).unwrap();
        assert_eq!(helpers(&s2), vec![vec![1, 4], vec![4, 7, 8]]);
        assert_eq!(s2[1].row, 4);
    }

    #[test]
    fn single_parity_check_equation() {
        let h = ParityCheckMatrix::new(2, vec![vec![1, 2]]).unwrap();
        assert_eq!(h.k(), 1);
        let eqs = recovery_equations(&h, 1).unwrap();
        assert_eq!(helpers(&eqs), vec![vec![2]]);
    }

    #[test]
    fn out_of_range_symbol() {
        let h = example_matrix();
        assert!(recovery_equations(&h, 0).is_err());
        assert!(recovery_equations(&h, 9).is_err());
    }

    #[test]
    fn construction_rejects_bad_rows() {
        assert_eq!(
            ParityCheckMatrix::new(3, vec![vec![1, 4]]).unwrap_err(),
            CodeError::IndexOutOfRange { index: 4, bound: 3 }
        );
        assert_eq!(
            ParityCheckMatrix::new(3, vec![vec![1, 1]]).unwrap_err(),
            CodeError::DuplicateIndex { row: 1 }
        );
        assert!(matches!(
            ParityCheckMatrix::new(2, vec![vec![1], vec![2]]),
            Err(CodeError::NoInformation { .. })
        ));
    }

    #[test]
    fn zero_data_encodes_to_zero() {
        let h = example_matrix();
        let word = systematic_encode(&h, &[false; 4]).unwrap();
        assert_eq!(word, Codeword::zeros(8));
    }

    #[test]
    fn wrong_data_length() {
        let h = example_matrix();
        assert_eq!(
            systematic_encode(&h, &[true; 3]).unwrap_err(),
            CodeError::DataLength {
                expected: 4,
                actual: 3
            }
        );
    }

    #[test]
    fn every_codeword_satisfies_every_equation() {
        // All 2^4 messages of the example code.
        let h = example_matrix();
        let enc = SystematicEncoder::new(&h);
        for msg in 0u8..16 {
            let data: Vec<bool> = (0..4).map(|b| msg >> b & 1 == 1).collect();
            let word = enc.encode(&data).unwrap();
            assert!(h.is_codeword(&word));
            for (&pos, &bit) in enc.info_set().iter().zip(&data) {
                assert_eq!(word.bit(pos), bit);
            }
            for s in 1..=8 {
                for eq in recovery_equations(&h, s).unwrap() {
                    assert_eq!(eq.evaluate(&word), word.bit(s));
                }
            }
        }
    }
}
