//! Binary codebook tuples: one list of equal-length codewords per user.

use std::fmt;

use crate::util::Odometer;

pub type Codeword = Vec<u8>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodebookError {
    #[error("a codebook tuple needs at least one user")]
    NoUsers,
    #[error("codebook of user {0} is empty")]
    EmptyCodebook(usize),
    #[error("user {user}: codeword {index} has length {len}, expected {n}")]
    LengthMismatch { user: usize, index: usize, len: usize, n: usize },
    #[error("user {user}: codeword {index} has a non-binary symbol")]
    NonBinary { user: usize, index: usize },
    #[error("user {user}: codewords {first} and {second} are equal")]
    Duplicate { user: usize, first: usize, second: usize },
    #[error("cannot parse codeword {0:?}: expected a 0/1 string")]
    Parse(String),
}

/// `t` codebooks of common block length `n` over `{0,1}`, in the order given.
///
/// Message `i` (1-based) of user `j` is the `i`-th listed codeword of codebook `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodebookTuple {
    n: usize,
    codebooks: Vec<Vec<Codeword>>,
}

pub fn parse_codeword(s: &str) -> Result<Codeword, CodebookError> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(CodebookError::Parse(s.to_string())),
        })
        .collect()
}

pub fn codeword_string(cw: &[u8]) -> String {
    cw.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

impl CodebookTuple {
    pub fn new(codebooks: Vec<Vec<Codeword>>) -> Result<Self, CodebookError> {
        if codebooks.is_empty() {
            return Err(CodebookError::NoUsers);
        }
        let n = codebooks.iter().find_map(|c| c.first().map(Vec::len)).ok_or(CodebookError::EmptyCodebook(1))?;
        for (j, cb) in codebooks.iter().enumerate() {
            let user = j + 1;
            if cb.is_empty() {
                return Err(CodebookError::EmptyCodebook(user));
            }
            for (i, cw) in cb.iter().enumerate() {
                if cw.len() != n {
                    return Err(CodebookError::LengthMismatch { user, index: i + 1, len: cw.len(), n });
                }
                if cw.iter().any(|&b| b > 1) {
                    return Err(CodebookError::NonBinary { user, index: i + 1 });
                }
                if let Some(first) = cb[..i].iter().position(|other| other == cw) {
                    return Err(CodebookError::Duplicate { user, first: first + 1, second: i + 1 });
                }
            }
        }
        Ok(CodebookTuple { n, codebooks })
    }

    /// Convenience constructor from `0/1` strings.
    pub fn from_strs<S: AsRef<str>>(codebooks: &[&[S]]) -> Result<Self, CodebookError> {
        let cbs = codebooks
            .iter()
            .map(|cb| cb.iter().map(|s| parse_codeword(s.as_ref())).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(cbs)
    }

    pub fn t(&self) -> usize {
        self.codebooks.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn codebooks(&self) -> &[Vec<Codeword>] {
        &self.codebooks
    }

    pub fn codebook(&self, user: usize) -> &[Codeword] {
        &self.codebooks[user]
    }

    /// Codeword for 0-based `message` of 0-based `user`.
    pub fn codeword(&self, user: usize, message: usize) -> &[u8] {
        &self.codebooks[user][message]
    }

    /// `M_j` for every user.
    pub fn sizes(&self) -> Vec<usize> {
        self.codebooks.iter().map(Vec::len).collect()
    }

    pub fn tuple_count(&self) -> usize {
        self.codebooks.iter().map(Vec::len).product()
    }

    /// `R_j = log₂(M_j) / n`.
    pub fn rates(&self) -> Vec<f64> {
        self.codebooks.iter().map(|c| (c.len() as f64).log2() / self.n as f64).collect()
    }

    /// All message tuples as 0-based indices, last user fastest.
    pub fn message_tuples(&self) -> Odometer {
        Odometer::new(&self.sizes())
    }

    /// Coordinatewise integer sum of the codewords selected by a 0-based message tuple.
    pub fn sum(&self, tuple: &[usize]) -> Vec<u8> {
        let mut out = vec![0u8; self.n];
        for (j, &m) in tuple.iter().enumerate() {
            for (o, &b) in out.iter_mut().zip(&self.codebooks[j][m]) {
                *o += b;
            }
        }
        out
    }
}

impl fmt::Display for CodebookTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, cb) in self.codebooks.iter().enumerate() {
            if j > 0 {
                write!(f, " ")?;
            }
            let words: Vec<String> = cb.iter().map(|c| codeword_string(c)).collect();
            write!(f, "C{}={{{}}}", j + 1, words.join(","))?;
        }
        Ok(())
    }
}

/// Serializes as a list of codebooks, each a list of `0/1` strings.
impl serde::Serialize for CodebookTuple {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let books: Vec<Vec<String>> =
            self.codebooks.iter().map(|c| c.iter().map(|w| codeword_string(w)).collect()).collect();
        books.serialize(s)
    }
}
