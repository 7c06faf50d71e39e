//! Finite arbitrarily varying multiple-access channels with exact transition tables.
//!
//! Alphabets are dense `0..k` ranges; optional labels are carried only for display and
//! file round-trips. The transition table is stored row by row, one row per
//! `(x₁,…,xₜ, s)` pair, each row a dense distribution over outputs. A row may be absent
//! (as parsed from an incomplete file); [`ChannelSpec::validate`] reports that.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{is_probability, Rational};
use crate::util::{mixed_radix_index, Odometer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChannelError {
    #[error("a channel needs at least 2 users, got {0}")]
    TooFewUsers(usize),
    #[error("adder channel needs ell >= 1, got {0}")]
    InvalidEll(usize),
    #[error("alphabet for {0} is empty")]
    EmptyAlphabet(String),
    #[error("expected {expected} transition rows, got {got}")]
    RowCount { expected: usize, got: usize },
    #[error("input tuple has {got} entries, channel has {expected} users")]
    InputArity { expected: usize, got: usize },
    #[error("input symbol {symbol} out of range for user {user} (alphabet size {size})")]
    InputOutOfRange { user: usize, symbol: usize, size: usize },
    #[error("state {state} out of range (alphabet size {size})")]
    StateOutOfRange { state: usize, size: usize },
    #[error("output {output} out of range (alphabet size {size})")]
    OutputOutOfRange { output: usize, size: usize },
    #[error("transition row for x={x:?}, s={s} is missing")]
    MissingRow { x: Vec<usize>, s: usize },
    #[error("channel is not deterministic")]
    NotDeterministic,
    #[error("sequence length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid user permutation {0:?}")]
    BadPermutation(Vec<usize>),
    #[error("channel fails validation: {0}")]
    Invalid(String),
}

/// Optional human-readable names for alphabet symbols.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Labels {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
}

/// A finite t-user AV-MAC `W(y | x₁…xₜ, s)` with a distinguished no-adversary state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelSpec {
    input_sizes: Vec<usize>,
    state_count: usize,
    output_count: usize,
    s0: usize,
    rows: Vec<Option<Vec<Rational>>>,
    deterministic: bool,
    labels: Option<Labels>,
}

/// Adversary state sequence over the channel's state alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateSequence(pub Vec<usize>);

impl StateSequence {
    /// The all-`s0` sequence of length `n`.
    pub fn no_adversary(n: usize, s0: usize) -> Self {
        StateSequence(vec![s0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_no_adversary(&self, s0: usize) -> bool {
        self.0.iter().all(|&s| s == s0)
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for StateSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_symbols(f, &self.0)
    }
}

pub(crate) fn write_symbols(f: &mut fmt::Formatter<'_>, symbols: &[usize]) -> fmt::Result {
    let wide = symbols.iter().any(|&s| s > 9);
    for (i, s) in symbols.iter().enumerate() {
        if wide && i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{s}")?;
    }
    // A lone wide symbol keeps a trailing comma so "10," is not read back as 1, 0.
    if wide && symbols.len() == 1 {
        write!(f, ",")?;
    }
    Ok(())
}

/// Renders a symbol vector as a digit string (comma-separated when any symbol exceeds 9).
pub fn symbols_to_string(symbols: &[usize]) -> String {
    struct D<'a>(&'a [usize]);
    impl fmt::Display for D<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write_symbols(f, self.0)
        }
    }
    D(symbols).to_string()
}

impl ChannelSpec {
    /// Assembles a channel from raw parts without checking stochasticity.
    ///
    /// Shape errors (user count, empty alphabets, wrong row count) are rejected here;
    /// everything else is left to [`ChannelSpec::validate`].
    pub fn from_parts(
        input_sizes: Vec<usize>,
        state_count: usize,
        output_count: usize,
        s0: usize,
        rows: Vec<Option<Vec<Rational>>>,
        deterministic: bool,
    ) -> Result<Self, ChannelError> {
        if input_sizes.len() < 2 {
            return Err(ChannelError::TooFewUsers(input_sizes.len()));
        }
        for (j, &k) in input_sizes.iter().enumerate() {
            if k == 0 {
                return Err(ChannelError::EmptyAlphabet(format!("user {}", j + 1)));
            }
        }
        if state_count == 0 {
            return Err(ChannelError::EmptyAlphabet("states".into()));
        }
        if output_count == 0 {
            return Err(ChannelError::EmptyAlphabet("outputs".into()));
        }
        let expected = input_sizes.iter().product::<usize>() * state_count;
        if rows.len() != expected {
            return Err(ChannelError::RowCount { expected, got: rows.len() });
        }
        Ok(ChannelSpec { input_sizes, state_count, output_count, s0, rows, deterministic, labels: None })
    }

    /// Builds a channel from a row function `f(x, s) -> distribution over outputs`.
    pub fn from_fn(
        input_sizes: Vec<usize>,
        state_count: usize,
        output_count: usize,
        s0: usize,
        mut f: impl FnMut(&[usize], usize) -> Vec<Rational>,
    ) -> Result<Self, ChannelError> {
        let mut rows = Vec::new();
        for x in Odometer::new(&input_sizes) {
            for s in 0..state_count {
                rows.push(Some(f(&x, s)));
            }
        }
        let mut ch = Self::from_parts(input_sizes, state_count, output_count, s0, rows, false)?;
        ch.deterministic = ch.rows_are_deterministic();
        Ok(ch)
    }

    /// Builds a deterministic channel from an output map `g(x, s) -> y`.
    pub fn deterministic_from_fn(
        input_sizes: Vec<usize>,
        state_count: usize,
        output_count: usize,
        s0: usize,
        mut g: impl FnMut(&[usize], usize) -> usize,
    ) -> Result<Self, ChannelError> {
        let mut rows = Vec::new();
        for x in Odometer::new(&input_sizes) {
            for s in 0..state_count {
                let y = g(&x, s);
                if y >= output_count {
                    return Err(ChannelError::OutputOutOfRange { output: y, size: output_count });
                }
                let mut row = vec![Rational::zero(); output_count];
                row[y] = Rational::one();
                rows.push(Some(row));
            }
        }
        Self::from_parts(input_sizes, state_count, output_count, s0, rows, true)
    }

    pub fn with_labels(mut self, labels: Labels) -> Self {
        self.labels = Some(labels);
        self
    }

    /// Replaces one transition row; `None` removes it.
    pub fn with_row(mut self, x: &[usize], s: usize, row: Option<Vec<Rational>>) -> Result<Self, ChannelError> {
        let idx = self.row_index(x, s)?;
        self.rows[idx] = row;
        Ok(self)
    }

    pub fn users(&self) -> usize {
        self.input_sizes.len()
    }

    pub fn input_sizes(&self) -> &[usize] {
        &self.input_sizes
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn output_count(&self) -> usize {
        self.output_count
    }

    pub fn s0(&self) -> usize {
        self.s0
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    pub(crate) fn raw_rows(&self) -> &[Option<Vec<Rational>>] {
        &self.rows
    }

    /// Number of distinct input tuples `x = (x₁,…,xₜ)`.
    pub fn input_tuple_count(&self) -> usize {
        self.input_sizes.iter().product()
    }

    fn check_inputs(&self, x: &[usize]) -> Result<(), ChannelError> {
        if x.len() != self.users() {
            return Err(ChannelError::InputArity { expected: self.users(), got: x.len() });
        }
        for (user, (&symbol, &size)) in x.iter().zip(&self.input_sizes).enumerate() {
            if symbol >= size {
                return Err(ChannelError::InputOutOfRange { user: user + 1, symbol, size });
            }
        }
        Ok(())
    }

    fn row_index(&self, x: &[usize], s: usize) -> Result<usize, ChannelError> {
        self.check_inputs(x)?;
        if s >= self.state_count {
            return Err(ChannelError::StateOutOfRange { state: s, size: self.state_count });
        }
        Ok(mixed_radix_index(&self.input_sizes, x) * self.state_count + s)
    }

    /// Transition row for `(x, s)` as a distribution over outputs.
    pub fn row(&self, x: &[usize], s: usize) -> Result<&[Rational], ChannelError> {
        let idx = self.row_index(x, s)?;
        self.rows[idx].as_deref().ok_or_else(|| ChannelError::MissingRow { x: x.to_vec(), s })
    }

    /// Exact `W(y | x, s)`.
    pub fn transition_prob(&self, x: &[usize], s: usize, y: usize) -> Result<&Rational, ChannelError> {
        if y >= self.output_count {
            return Err(ChannelError::OutputOutOfRange { output: y, size: self.output_count });
        }
        let row = self.row(x, s)?;
        row.get(y).ok_or(ChannelError::OutputOutOfRange { output: y, size: row.len() })
    }

    /// The unique output of a deterministic channel on `(x, s)`.
    pub fn deterministic_output(&self, x: &[usize], s: usize) -> Result<usize, ChannelError> {
        if !self.deterministic {
            return Err(ChannelError::NotDeterministic);
        }
        let row = self.row(x, s)?;
        row.iter().position(|p| p.is_one()).ok_or(ChannelError::NotDeterministic)
    }

    /// Applies a deterministic channel coordinatewise to one codeword per user.
    pub fn output_of(&self, codewords: &[&[usize]], states: &StateSequence) -> Result<Vec<usize>, ChannelError> {
        if !self.deterministic {
            return Err(ChannelError::NotDeterministic);
        }
        if codewords.len() != self.users() {
            return Err(ChannelError::InputArity { expected: self.users(), got: codewords.len() });
        }
        let n = states.len();
        for cw in codewords {
            if cw.len() != n {
                return Err(ChannelError::LengthMismatch { expected: n, got: cw.len() });
            }
        }
        let mut x = vec![0; self.users()];
        (0..n)
            .map(|k| {
                for (slot, cw) in x.iter_mut().zip(codewords) {
                    *slot = cw[k];
                }
                self.deterministic_output(&x, states.0[k])
            })
            .collect()
    }

    fn rows_are_deterministic(&self) -> bool {
        self.rows.iter().all(|r| match r {
            Some(row) => {
                row.iter().filter(|p| p.is_one()).count() == 1 && row.iter().all(|p| p.is_zero() || p.is_one())
            }
            None => false,
        })
    }

    /// Checks every structural and stochastic invariant, collecting all violations.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.s0 >= self.state_count {
            violations.push(Violation::S0OutOfRange { s0: self.s0, states: self.state_count });
        }
        let mut missing = 0usize;
        for (i, x) in Odometer::new(&self.input_sizes).enumerate() {
            for s in 0..self.state_count {
                let Some(row) = &self.rows[i * self.state_count + s] else {
                    missing += 1;
                    violations.push(Violation::MissingRow { x: x.clone(), s });
                    continue;
                };
                if row.len() != self.output_count {
                    violations.push(Violation::RowLength {
                        x: x.clone(),
                        s,
                        len: row.len(),
                        outputs: self.output_count,
                    });
                    continue;
                }
                for (y, p) in row.iter().enumerate() {
                    if !is_probability(p) {
                        violations.push(Violation::NotAProbability { x: x.clone(), s, y, value: p.clone() });
                    }
                }
                let sum: Rational = row.iter().sum();
                if !sum.is_one() {
                    violations.push(Violation::RowSum { x: x.clone(), s, sum });
                }
                if self.deterministic
                    && !(row.iter().filter(|p| p.is_one()).count() == 1
                        && row.iter().all(|p| p.is_zero() || p.is_one()))
                {
                    violations.push(Violation::NotDeterministicRow { x: x.clone(), s });
                }
            }
        }
        if let Some(labels) = &self.labels {
            let input_ok = labels.inputs.is_empty()
                || (labels.inputs.len() == self.users()
                    && labels.inputs.iter().zip(&self.input_sizes).all(|(l, &k)| l.len() == k));
            let state_ok = labels.states.is_empty() || labels.states.len() == self.state_count;
            let output_ok = labels.outputs.is_empty() || labels.outputs.len() == self.output_count;
            if !(input_ok && state_ok && output_ok) {
                violations.push(Violation::LabelShape);
            }
        }
        ValidationReport { violations, incomplete: missing > 0 }
    }

    /// Errors unless [`ChannelSpec::validate`] passes.
    pub fn ensure_valid(&self) -> Result<(), ChannelError> {
        let report = self.validate();
        if report.is_ok() {
            Ok(())
        } else {
            Err(ChannelError::Invalid(report.to_string()))
        }
    }

    /// Relabels users: user `j` of the result is user `perm[j]` of `self`.
    pub fn permute_users(&self, perm: &[usize]) -> Result<ChannelSpec, ChannelError> {
        let t = self.users();
        let mut seen = vec![false; t];
        if perm.len() != t || perm.iter().any(|&p| p >= t || std::mem::replace(&mut seen[p], true)) {
            return Err(ChannelError::BadPermutation(perm.to_vec()));
        }
        let sizes: Vec<usize> = perm.iter().map(|&p| self.input_sizes[p]).collect();
        let mut rows = Vec::with_capacity(self.rows.len());
        let mut orig = vec![0; t];
        for x in Odometer::new(&sizes) {
            for (j, &p) in perm.iter().enumerate() {
                orig[p] = x[j];
            }
            let base = mixed_radix_index(&self.input_sizes, &orig) * self.state_count;
            for s in 0..self.state_count {
                rows.push(self.rows[base + s].clone());
            }
        }
        let mut out =
            ChannelSpec::from_parts(sizes, self.state_count, self.output_count, self.s0, rows, self.deterministic)?;
        if let Some(l) = &self.labels {
            let mut l = l.clone();
            if !l.inputs.is_empty() {
                l.inputs = perm.iter().map(|&p| self.labels.as_ref().unwrap().inputs[p].clone()).collect();
            }
            out.labels = Some(l);
        }
        Ok(out)
    }
}

/// The deterministic adder channel `Y = X₁ + ⋯ + Xₜ + S` with binary inputs and
/// states `{0,…,ℓ}`, `s₀ = 0`.
pub fn make_adder_channel(t: usize, ell: usize) -> Result<ChannelSpec, ChannelError> {
    if t < 2 {
        return Err(ChannelError::TooFewUsers(t));
    }
    if ell < 1 {
        return Err(ChannelError::InvalidEll(ell));
    }
    ChannelSpec::deterministic_from_fn(vec![2; t], ell + 1, t + ell + 1, 0, |x, s| x.iter().sum::<usize>() + s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    S0OutOfRange { s0: usize, states: usize },
    MissingRow { x: Vec<usize>, s: usize },
    RowLength { x: Vec<usize>, s: usize, len: usize, outputs: usize },
    NotAProbability { x: Vec<usize>, s: usize, y: usize, value: Rational },
    RowSum { x: Vec<usize>, s: usize, sum: Rational },
    NotDeterministicRow { x: Vec<usize>, s: usize },
    LabelShape,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::S0OutOfRange { s0, states } => {
                write!(f, "s0 = {s0} is not in the state alphabet of size {states}")
            }
            Violation::MissingRow { x, s } => write!(f, "incomplete: no row for x={x:?}, s={s}"),
            Violation::RowLength { x, s, len, outputs } => {
                write!(f, "row x={x:?}, s={s} has {len} entries, expected {outputs}")
            }
            Violation::NotAProbability { x, s, y, value } => {
                write!(f, "W({y} | x={x:?}, s={s}) = {value} is not in [0,1]")
            }
            Violation::RowSum { x, s, sum } => write!(f, "row x={x:?}, s={s}: row sum {sum}"),
            Violation::NotDeterministicRow { x, s } => {
                write!(f, "row x={x:?}, s={s} is not a point mass but the channel is marked deterministic")
            }
            Violation::LabelShape => write!(f, "label lists do not match alphabet sizes"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub incomplete: bool,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rational};

    #[test]
    fn adder_shape() {
        let ch = make_adder_channel(2, 1).unwrap();
        assert_eq!(ch.output_count(), 4);
        assert_eq!(ch.transition_prob(&[1, 1], 1, 3).unwrap(), &int(1));
        assert!(ch.is_deterministic());
        let ch = make_adder_channel(3, 1).unwrap();
        assert_eq!(ch.output_count(), 5);
        assert_eq!(ch.state_count(), 2);
        assert_eq!(ch.s0(), 0);
    }

    #[test]
    fn adder_rejects_bad_parameters() {
        assert_eq!(make_adder_channel(2, 0), Err(ChannelError::InvalidEll(0)));
        assert_eq!(make_adder_channel(1, 1), Err(ChannelError::TooFewUsers(1)));
    }

    #[test]
    fn transition_lookup() {
        let ch = make_adder_channel(2, 1).unwrap();
        assert_eq!(ch.transition_prob(&[0, 1], 0, 1).unwrap(), &int(1));
        assert_eq!(ch.transition_prob(&[0, 1], 0, 2).unwrap(), &int(0));
        assert!(matches!(ch.transition_prob(&[0, 1], 0, 4), Err(ChannelError::OutputOutOfRange { .. })));
        assert!(matches!(ch.transition_prob(&[0, 2], 0, 1), Err(ChannelError::InputOutOfRange { .. })));
        assert!(matches!(ch.transition_prob(&[0, 1], 2, 1), Err(ChannelError::StateOutOfRange { .. })));
    }

    #[test]
    fn coordinatewise_output() {
        let ch = make_adder_channel(3, 1).unwrap();
        let rows = [[0, 1, 1, 0, 1, 0], [0, 1, 0, 1, 1, 0], [0, 0, 1, 1, 0, 1]];
        let cws: Vec<&[usize]> = rows.iter().map(|r| &r[..]).collect();
        let y = ch.output_of(&cws, &StateSequence::no_adversary(6, 0)).unwrap();
        assert_eq!(y, vec![0, 2, 2, 2, 2, 1]);

        let ch = make_adder_channel(2, 1).unwrap();
        let y = ch.output_of(&[&[0, 1, 1], &[0, 1, 0]], &StateSequence(vec![0, 0, 0])).unwrap();
        assert_eq!(y, vec![0, 2, 1]);
        assert!(matches!(
            ch.output_of(&[&[0, 1], &[0, 1, 0]], &StateSequence(vec![0, 0, 0])),
            Err(ChannelError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn stochastic_channel_has_no_coordinatewise_output() {
        let ch = ChannelSpec::from_fn(vec![2, 2], 2, 2, 0, |_, _| vec![rational(1, 2), rational(1, 2)]).unwrap();
        assert!(!ch.is_deterministic());
        assert!(ch.validate().is_ok());
        assert_eq!(ch.output_of(&[&[0], &[1]], &StateSequence(vec![0])), Err(ChannelError::NotDeterministic));
    }

    #[test]
    fn validate_flags_scaled_row() {
        let ch = make_adder_channel(2, 1).unwrap();
        assert!(ch.validate().is_ok());
        let mut row = ch.row(&[0, 1], 0).unwrap().to_vec();
        for p in &mut row {
            *p = &*p * rational(1, 2);
        }
        let bad = ch.with_row(&[0, 1], 0, Some(row)).unwrap();
        let report = bad.validate();
        assert!(!report.is_ok());
        assert!(report.violations.iter().any(|v| matches!(v, Violation::RowSum { sum, .. } if *sum == rational(1, 2))));
    }

    #[test]
    fn validate_flags_missing_row() {
        let ch = make_adder_channel(2, 1).unwrap().with_row(&[1, 1], 1, None).unwrap();
        let report = ch.validate();
        assert!(report.incomplete);
        assert!(report.to_string().contains("incomplete"));
        assert!(matches!(ch.transition_prob(&[1, 1], 1, 3), Err(ChannelError::MissingRow { .. })));
    }

    #[test]
    fn validate_flags_bad_s0_and_negative_entries() {
        let ch = ChannelSpec::from_fn(vec![2, 2], 2, 2, 5, |_, _| vec![rational(3, 2), rational(-1, 2)]).unwrap();
        let report = ch.validate();
        assert!(report.violations.iter().any(|v| matches!(v, Violation::S0OutOfRange { .. })));
        assert!(report.violations.iter().any(|v| matches!(v, Violation::NotAProbability { .. })));
    }

    #[test]
    fn user_permutation_relabels_rows() {
        let ch = ChannelSpec::deterministic_from_fn(vec![2, 3], 1, 6, 0, |x, _| x[0] * 3 + x[1]).unwrap();
        let p = ch.permute_users(&[1, 0]).unwrap();
        assert_eq!(p.input_sizes(), &[3, 2]);
        assert_eq!(p.deterministic_output(&[2, 1], 0).unwrap(), ch.deterministic_output(&[1, 2], 0).unwrap());
        assert!(ch.permute_users(&[0, 0]).is_err());
    }
}
