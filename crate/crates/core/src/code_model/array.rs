//! Array LDPC codes in the upper-triangular "efficient encoding" form.
//!
//! `H` is a `j x kk` grid of `q x q` circulant blocks. Block `(i, l)` (both
//! 1-based) is zero below the block diagonal and `P^((i-1)(l-i) mod q)`
//! elsewhere, where `P` is the single-step cyclic shift. The identity blocks
//! on the diagonal give `rank(H) = j*q`, so `k = (kk - j) * q`.
//!
//! Columns in block `l < j` have degree `l`, and rows of block-row `i` have
//! degree `kk - i + 1`.

use serde::{Deserialize, Serialize};

use super::{CodeError, ParityCheckMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArrayCodeSpec {
    /// Circulant size, a prime.
    pub q: usize,
    /// Block rows (column degree target).
    pub j: usize,
    /// Block columns (row degree target).
    pub kk: usize,
}

impl ArrayCodeSpec {
    pub fn new(q: usize, j: usize, kk: usize) -> Result<Self, CodeError> {
        let spec = Self { q, j, kk };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CodeError> {
        if !is_prime(self.q) {
            return Err(CodeError::ArraySpec(format!("q = {} is not prime", self.q)));
        }
        if self.kk > self.q {
            return Err(CodeError::ArraySpec(format!(
                "kk = {} exceeds q = {}",
                self.kk, self.q
            )));
        }
        if self.j == 0 || self.j >= self.kk {
            return Err(CodeError::ArraySpec(format!(
                "need 1 <= j < kk, got j = {}, kk = {}",
                self.j, self.kk
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.kk * self.q
    }

    /// Design dimension `(kk - j) * q`.
    pub fn k_design(&self) -> usize {
        (self.kk - self.j) * self.q
    }
}

pub fn build_array_ldpc(spec: ArrayCodeSpec) -> Result<ParityCheckMatrix, CodeError> {
    spec.validate()?;
    let ArrayCodeSpec { q, j, kk } = spec;
    let mut rows = Vec::with_capacity(j * q);
    for i in 1..=j {
        for r in 0..q {
            let row = (i..=kk)
                .map(|l| {
                    let shift = ((i - 1) * (l - i)) % q;
                    (l - 1) * q + (r + shift) % q + 1
                })
                .collect();
            rows.push(row);
        }
    }
    ParityCheckMatrix::new(kk * q, rows)
}

fn is_prime(x: usize) -> bool {
    if x < 2 {
        return false;
    }
    (2..).take_while(|d| d * d <= x).all(|d| !x.is_multiple_of(d))
}
