//! Support-containment filters that every zero-error adder-channel codebook must pass.

use serde::Serialize;

use crate::codebook::Codeword;
use crate::util::binomial;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("union structure needs both codebooks to have more than one codeword")]
    CodebookTooSmall,
    #[error("block length must be at least 1")]
    ZeroLength,
    #[error("Sperner bound overflows for n = {0}")]
    Overflow(usize),
}

/// `supp(a) ⊆ supp(b)`.
pub fn support_le(a: &[u8], b: &[u8]) -> bool {
    a.iter().zip(b).all(|(&x, &y)| x <= y)
}

/// Indices `(i, j)`, `i ≠ j`, with `supp(codebook[i]) ⊆ supp(codebook[j])`, if any.
pub fn check_antichain(codebook: &[Codeword]) -> Option<(usize, usize)> {
    for (i, a) in codebook.iter().enumerate() {
        for (j, b) in codebook.iter().enumerate() {
            if i != j && support_le(a, b) {
                return Some((i, j));
            }
        }
    }
    None
}

/// A related pair `lower ≤ upper` in the disjoint union `C₁ ⊔ C₂`; codewords are tagged
/// `(user, index)` with 0-based user and index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RelatedPair {
    pub lower: (usize, usize),
    pub upper: (usize, usize),
}

impl RelatedPair {
    fn touches(&self, other: &RelatedPair) -> bool {
        let ends = [self.lower, self.upper];
        ends.contains(&other.lower) || ends.contains(&other.upper)
    }

    fn crosses(&self) -> bool {
        self.lower.0 != self.upper.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnionViolation {
    /// The same codeword appears in both codebooks (indices into `C₁` and `C₂`).
    Intersection { first: usize, second: usize },
    /// Two related pairs on four distinct codewords whose lower ends lie in the same
    /// codebook. Then `x₁ + y₂ + a = x₂ + y₂ = y₁ + x₂ + b` is an adversarial output whose
    /// decompositions agree on no user.
    SameSideLowers { a: RelatedPair, b: RelatedPair },
}

/// Related pairs across `C₁ ⊔ C₂`.
pub fn related_pairs(c1: &[Codeword], c2: &[Codeword]) -> Vec<RelatedPair> {
    let tagged: Vec<((usize, usize), &Codeword)> = c1
        .iter()
        .enumerate()
        .map(|(i, c)| ((0, i), c))
        .chain(c2.iter().enumerate().map(|(i, c)| ((1, i), c)))
        .collect();
    let mut out = Vec::new();
    for (ta, a) in &tagged {
        for (tb, b) in &tagged {
            if ta != tb && a != b && support_le(a, b) {
                out.push(RelatedPair { lower: *ta, upper: *tb });
            }
        }
    }
    out
}

/// Two-user structure of a zero-error pair at `γ = 1/2`, `ℓ = 1`: disjoint codebooks,
/// and any two related pairs on four distinct codewords have their lower ends in
/// different codebooks. So at most two such pairs are pairwise disjoint.
///
/// Pairs sharing a codeword are allowed: their decompositions agree on the shared
/// user (`C₁={001,010}`, `C₂={011,100}` is zero-error). Pairs inside one codebook are
/// left to [`check_antichain`].
pub fn check_union_structure(c1: &[Codeword], c2: &[Codeword]) -> Result<Option<UnionViolation>, StructureError> {
    if c1.len() < 2 || c2.len() < 2 {
        return Err(StructureError::CodebookTooSmall);
    }
    for (i, a) in c1.iter().enumerate() {
        if let Some(j) = c2.iter().position(|b| b == a) {
            return Ok(Some(UnionViolation::Intersection { first: i, second: j }));
        }
    }
    let pairs: Vec<RelatedPair> = related_pairs(c1, c2).into_iter().filter(RelatedPair::crosses).collect();
    for (i, a) in pairs.iter().enumerate() {
        for b in &pairs[i + 1..] {
            if !a.touches(b) && a.lower.0 == b.lower.0 {
                return Ok(Some(UnionViolation::SameSideLowers { a: *a, b: *b }));
            }
        }
    }
    Ok(None)
}

/// `C(n, ⌈n/2⌉) + 2`, the largest possible `|C₁ ⊔ C₂|` for a zero-error pair.
pub fn sperner_bound(n: usize) -> Result<u64, StructureError> {
    if n == 0 {
        return Err(StructureError::ZeroLength);
    }
    let n64 = n as u64;
    binomial(n64, n64.div_ceil(2)).and_then(|b| b.checked_add(2)).ok_or(StructureError::Overflow(n))
}

/// Largest antichain in `{0,1}ⁿ`: `C(n, ⌊n/2⌋)`.
pub fn max_antichain_size(n: usize) -> Option<u64> {
    binomial(n as u64, n as u64 / 2)
}
