//! Banded LU factorization with partial pivoting, in the LAPACK band storage
//! layout. The Newton linearization of the Shortley-Weller operator has
//! bandwidth about one grid line, so a band solver keeps the cost at
//! O(rows · bandwidth²) with O(rows · bandwidth) memory.

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Entry (i, j) lives at `ab[j * ldab + (kl + ku + i - j)]`; the extra `kl`
/// rows of headroom absorb fill-in from row pivoting.
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, ldab, ab: vec![0.0; ldab * n] }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(i + self.ku >= j && j + self.kl >= i, "entry ({i},{j}) outside band");
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.ab[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.ab[s] += v;
    }

    /// Factors in place and solves A x = b. Consumes the matrix: the band
    /// storage is overwritten by the LU factors.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.n);
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku; // row index of the diagonal within a column slab
        let mut ipiv = vec![0usize; n];
        // ju tracks the last column touched by pivoting so far.
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // Partial pivot among rows j..=j+km.
            let mut jp = 0usize;
            let mut best = self.ab[j * ldab + kv].abs();
            for k in 1..=km {
                let v = self.ab[j * ldab + kv + k].abs();
                if v > best {
                    best = v;
                    jp = k;
                }
            }
            ipiv[j] = j + jp;
            let piv = self.ab[j * ldab + kv + jp];
            if piv == 0.0 || !piv.is_finite() {
                return Err(Error::LinearSolve(format!(
                    "singular pivot at column {j} (value {piv})"
                )));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                // Swap rows j and j+jp across columns j..=ju.
                for c in j..=ju {
                    let a = c * ldab + kv + j - c;
                    self.ab.swap(a, a + jp);
                }
            }
            if km > 0 {
                let piv = self.ab[j * ldab + kv];
                for k in 1..=km {
                    self.ab[j * ldab + kv + k] /= piv;
                }
                for c in (j + 1)..=ju {
                    let t = self.ab[c * ldab + kv + j - c];
                    if t != 0.0 {
                        for k in 1..=km {
                            self.ab[c * ldab + kv + j - c + k] -=
                                self.ab[j * ldab + kv + k] * t;
                        }
                    }
                }
            }
        }
        // Forward substitution with the recorded row interchanges.
        let mut x = b.to_vec();
        for j in 0..n {
            let p = ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            for k in 1..=km {
                x[j + k] -= self.ab[j * ldab + kv + k] * x[j];
            }
        }
        // Back substitution on U (diagonals 0..=ju span at most kl+ku supers).
        for j in (0..n).rev() {
            let top = j.saturating_sub(kl + ku);
            x[j] /= self.ab[j * ldab + kv];
            let xj = x[j];
            for i in top..j {
                x[i] -= self.ab[j * ldab + kv + i - j] * xj;
            }
        }
        Ok(x)
    }
}
