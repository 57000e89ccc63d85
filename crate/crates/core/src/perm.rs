use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A column permutation together with the transpositions that produced it.
///
/// `forward()[p]` is the original column index that sits at position `p`,
/// so `M·Π` has column `p` equal to column `forward()[p]` of `M`.
/// Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationSeq {
    forward: Vec<usize>,
    swaps: Vec<(usize, usize)>,
}

impl PermutationSeq {
    pub fn identity(n: usize) -> Self {
        Self {
            forward: (0..n).collect(),
            swaps: Vec::new(),
        }
    }

    /// Builds a permutation from a forward map, logging the transpositions a
    /// selection sort would use to reach it.
    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut seen = vec![false; n];
        for &c in &forward {
            if c >= n || seen[c] {
                return Err(domain(format!("not a permutation of 0..{n}: {forward:?}")));
            }
            seen[c] = true;
        }
        let mut p = Self::identity(n);
        for pos in 0..n {
            if p.forward[pos] != forward[pos] {
                let j = (pos + 1..n).find(|&q| p.forward[q] == forward[pos]).unwrap();
                p.swap(pos, j);
            }
        }
        Ok(p)
    }

    /// Replays a transposition log starting from the identity.
    pub fn from_swaps(n: usize, swaps: &[(usize, usize)]) -> Result<Self> {
        let mut p = Self::identity(n);
        for &(i, j) in swaps {
            if i >= n || j >= n {
                return Err(domain(format!("swap ({i}, {j}) out of range for size {n}")));
            }
            p.swap(i, j);
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Interchanges positions `i` and `j`. Swapping a position with itself is
    /// a no-op and is not logged.
    pub fn swap(&mut self, i: usize, j: usize) {
        if i != j {
            self.forward.swap(i, j);
            self.swaps.push((i, j));
        }
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn swaps(&self) -> &[(usize, usize)] {
        &self.swaps
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(p, &c)| p == c)
    }

    /// `inverse()[c]` is the position of original column `c`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.len()];
        for (p, &c) in self.forward.iter().enumerate() {
            inv[c] = p;
        }
        inv
    }

    /// Original column indices in the leading `k` positions.
    pub fn selected(&self, k: usize) -> &[usize] {
        &self.forward[..k]
    }
}
