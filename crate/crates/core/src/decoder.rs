//! Decoders mapping channel outputs to message estimates (1-based, `0` = discarded).

use serde::Serialize;

use crate::codebook::CodebookTuple;
use crate::rational::Gamma;
use crate::verifier::{build_a0, is_zero_error, A0Entry, VerifierConfig, VerifyError};

/// Maps an output sequence (output-alphabet indices) to one estimate per user.
///
/// Estimates are 1-based message indices; `0` marks a discarded user.
pub trait Decoder: Sync {
    fn decode(&self, y: &[usize]) -> Vec<usize>;
}

impl<F> Decoder for F
where
    F: Fn(&[usize]) -> Vec<usize> + Sync,
{
    fn decode(&self, y: &[usize]) -> Vec<usize> {
        self(y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecodeKind {
    /// Unique noiseless decomposition: every user decoded.
    Clean,
    /// Adversarial output: only users on which all decompositions agree are kept.
    Partial { agreement: Vec<usize> },
    /// Output unreachable by any decomposition; all users discarded by convention.
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decoded {
    pub messages: Vec<usize>,
    pub kind: DecodeKind,
}

/// The canonical decoder for the adder channel with states `{0,…,ℓ}`.
///
/// A unique noiseless decomposition yields the full message tuple. Otherwise the
/// decompositions `y = s + Σxⱼ` (including noiseless ones when they are ambiguous) are
/// intersected and the agreeing users are decoded, the rest set to `0`.
#[derive(Debug, Clone)]
pub struct CanonicalDecoder {
    n: usize,
    t: usize,
    ell: usize,
    a0: Vec<A0Entry>,
}

impl CanonicalDecoder {
    /// Builds the decoder without checking that the tuple is zero-error.
    pub fn new_unchecked(cb: &CodebookTuple, ell: usize) -> Self {
        CanonicalDecoder { n: cb.n(), t: cb.t(), ell, a0: build_a0(cb) }
    }

    /// Builds the decoder after verifying the tuple has zero partial-correction error.
    pub fn new(cb: &CodebookTuple, ell: usize, gamma: &Gamma) -> Result<Self, VerifyError> {
        if !is_zero_error(cb, ell, gamma, &VerifierConfig::default())? {
            return Err(VerifyError::NotVerified { ell, gamma: gamma.to_string() });
        }
        Ok(Self::new_unchecked(cb, ell))
    }

    pub fn decode_detailed(&self, y: &[usize]) -> Decoded {
        let zeros = || Decoded { messages: vec![0; self.t], kind: DecodeKind::Unreachable };
        if y.len() != self.n {
            return zeros();
        }
        let mut clean: Vec<&A0Entry> = Vec::new();
        let mut noisy: Vec<&A0Entry> = Vec::new();
        for e in &self.a0 {
            let mut equal = true;
            let mut reachable = true;
            for (&yk, &uk) in y.iter().zip(&e.sum) {
                let uk = usize::from(uk);
                if yk < uk || yk - uk > self.ell {
                    reachable = false;
                    break;
                }
                equal &= yk == uk;
            }
            if reachable {
                if equal {
                    clean.push(e);
                } else {
                    noisy.push(e);
                }
            }
        }
        // A unique noiseless decomposition wins; for zero-error tuples `noisy` is then empty.
        if clean.len() == 1 {
            return Decoded { messages: clean[0].tuple.iter().map(|m| m + 1).collect(), kind: DecodeKind::Clean };
        }
        let decomps: Vec<&A0Entry> = clean.into_iter().chain(noisy).collect();
        let Some(first) = decomps.first() else {
            return zeros();
        };
        let agreement: Vec<usize> =
            (0..self.t).filter(|&j| decomps.iter().all(|e| e.tuple[j] == first.tuple[j])).collect();
        let mut messages = vec![0; self.t];
        for &j in &agreement {
            messages[j] = first.tuple[j] + 1;
        }
        Decoded { messages, kind: DecodeKind::Partial { agreement } }
    }
}

impl Decoder for CanonicalDecoder {
    fn decode(&self, y: &[usize]) -> Vec<usize> {
        self.decode_detailed(y).messages
    }
}

/// Decodes `y` with the canonical decoder of a verified tuple.
pub fn canonical_decode(cb: &CodebookTuple, ell: usize, gamma: &Gamma, y: &[usize]) -> Result<Decoded, VerifyError> {
    if y.len() != cb.n() {
        return Err(VerifyError::OutputLength { got: y.len(), n: cb.n() });
    }
    Ok(CanonicalDecoder::new(cb, ell, gamma)?.decode_detailed(y))
}
