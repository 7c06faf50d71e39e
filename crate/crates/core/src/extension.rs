//! Block-length extension: a zero-error inner tuple concatenated with per-user outer
//! erasure codes of length `r`.
//!
//! Each inner block whose user is discarded by the inner decoder becomes an erasure for
//! that user's outer code. The adversary can erase at most `t − u` users per block, so
//! some `u` users see at most `⌊r(t−u)/(t−u+1)⌋` erasures.

use std::collections::HashMap;
use std::fmt;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::codebook::{CodebookTuple, Codeword};
use crate::decoder::CanonicalDecoder;
use crate::rational::{Gamma, Rational};
use crate::util::{binomial, k_subsets};
use crate::verifier::{is_zero_error, VerifierConfig, VerifyError};

/// Default cap on the number of erasure patterns (or DP states) examined exhaustively.
pub const DEFAULT_PATTERN_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtensionError {
    #[error("need t >= 2 and 1 <= u < t (got t = {t}, u = {u})")]
    BadParameters { t: usize, u: usize },
    #[error("exhaustive mode needs {needed} cases, budget is {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
    #[error("minimum distance needs at least two codewords")]
    TooFewCodewords,
    #[error("codewords have different lengths")]
    RaggedCode,
    #[error("inner tuple is not zero-error for ell = {ell}, gamma = {gamma}")]
    InnerNotVerified { ell: usize, gamma: String },
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("expected {expected} outer codes, got {got}")]
    OuterCount { expected: usize, got: usize },
    #[error("user {user}: outer codeword {index} has length {len}, expected r = {r}")]
    OuterLength { user: usize, index: usize, len: usize, r: usize },
    #[error("user {user}: outer symbol {symbol} outside alphabet of size {size}")]
    OuterSymbol { user: usize, symbol: usize, size: usize },
    #[error("user {user}: outer code is empty")]
    EmptyOuter { user: usize },
    #[error("user {user}: outer codewords {first} and {second} are equal")]
    DuplicateOuter { user: usize, first: usize, second: usize },
    #[error("user {user}: message {message} out of range 1..={size}")]
    BadMessage { user: usize, message: usize, size: usize },
    #[error("malformed grid: {0}")]
    MalformedGrid(String),
}

/// `⌊r(t−u)/(t−u+1)⌋`.
pub fn erasure_budget(t: usize, u: usize, r: usize) -> Result<usize, ExtensionError> {
    check_tu(t, u)?;
    Ok(r * (t - u) / (t - u + 1))
}

fn check_tu(t: usize, u: usize) -> Result<(), ExtensionError> {
    if t < 2 || u < 1 || u >= t {
        return Err(ExtensionError::BadParameters { t, u });
    }
    Ok(())
}

/// `t × r` erasure grid; `erased[j][k]` is true when user `j` is erased in instance `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ErasurePattern {
    pub erased: Vec<Vec<bool>>,
}

impl ErasurePattern {
    pub fn clean(t: usize, r: usize) -> Self {
        ErasurePattern { erased: vec![vec![false; r]; t] }
    }

    /// Builds a pattern from per-instance lists of erased users.
    pub fn from_instances(t: usize, instances: &[Vec<usize>]) -> Self {
        let mut p = Self::clean(t, instances.len());
        for (k, users) in instances.iter().enumerate() {
            for &j in users {
                p.erased[j][k] = true;
            }
        }
        p
    }

    pub fn t(&self) -> usize {
        self.erased.len()
    }

    pub fn r(&self) -> usize {
        self.erased.first().map_or(0, Vec::len)
    }

    pub fn counts(&self) -> Vec<usize> {
        self.erased.iter().map(|row| row.iter().filter(|&&e| e).count()).collect()
    }

    /// At most `t − u` erasures in every instance.
    pub fn is_admissible(&self, u: usize) -> bool {
        let t = self.t();
        (0..self.r()).all(|k| self.erased.iter().filter(|row| row[k]).count() + u <= t)
    }

    /// The erasure count the best `u` users are held to: the `u`-th smallest per-user
    /// count, i.e. the minimum over size-`u` subsets of the subset's maximum.
    pub fn value(&self, u: usize) -> usize {
        let mut c = self.counts();
        c.sort_unstable();
        c.get(u.saturating_sub(1)).copied().unwrap_or(0)
    }
}

impl fmt::Display for ErasurePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, row) in self.erased.iter().enumerate() {
            if j > 0 {
                write!(f, " ")?;
            }
            let s: String = row.iter().map(|&e| if e { 'E' } else { '.' }).collect();
            write!(f, "u{}:{}", j + 1, if s.is_empty() { "-".to_string() } else { s })?;
        }
        Ok(())
    }
}

/// Erases `t − u` of the first `t − u + 1` users in every instance, rotating the spared one.
pub fn concentrating_pattern(t: usize, u: usize, r: usize) -> Result<ErasurePattern, ExtensionError> {
    check_tu(t, u)?;
    let targets = t - u + 1;
    let instances: Vec<Vec<usize>> = (0..r).map(|k| (0..targets).filter(|&j| j != k % targets).collect()).collect();
    Ok(ErasurePattern::from_instances(t, &instances))
}

/// Spreads `t − u` erasures per instance round-robin over all users.
pub fn uniform_pattern(t: usize, u: usize, r: usize) -> Result<ErasurePattern, ExtensionError> {
    check_tu(t, u)?;
    let instances: Vec<Vec<usize>> = (0..r).map(|k| (0..t - u).map(|i| (k * (t - u) + i) % t).collect()).collect();
    Ok(ErasurePattern::from_instances(t, &instances))
}

/// Worst case over admissible patterns of [`ErasurePattern::value`], with a maximizing
/// pattern. The adversary always erases exactly `t − u` users per instance, which is
/// never worse for it than erasing fewer.
///
/// Dynamic programming over reachable per-user count vectors; the state space is at most
/// `(r+1)^t` and is checked against `budget`.
pub fn worst_case_erasures(
    t: usize,
    u: usize,
    r: usize,
    budget: u64,
) -> Result<(usize, ErasurePattern), ExtensionError> {
    check_tu(t, u)?;
    let states = (r as u64 + 1).checked_pow(t as u32);
    match states {
        Some(s) if s <= budget => {}
        _ => {
            return Err(ExtensionError::BudgetExceeded {
                needed: states.map_or_else(|| "more than 2^64".into(), |s| s.to_string()),
                budget,
            })
        }
    }
    let choices = k_subsets(t, t - u);
    // layer[k]: count vector -> (previous vector, choice index)
    type Layer = HashMap<Vec<usize>, (Vec<usize>, usize)>;
    let mut layers: Vec<Layer> = Vec::with_capacity(r);
    let mut frontier: Vec<Vec<usize>> = vec![vec![0; t]];
    for _ in 0..r {
        let mut next: Layer = HashMap::new();
        for c in &frontier {
            for (ci, subset) in choices.iter().enumerate() {
                let mut d = c.clone();
                for &j in subset {
                    d[j] += 1;
                }
                next.entry(d).or_insert_with(|| (c.clone(), ci));
            }
        }
        let mut keys: Vec<Vec<usize>> = next.keys().cloned().collect();
        keys.sort();
        frontier = keys;
        layers.push(next);
    }
    let value_of = |c: &[usize]| {
        let mut s = c.to_vec();
        s.sort_unstable();
        s[u - 1]
    };
    // Deterministic tie-break: the lexicographically smallest maximizer.
    let best = frontier
        .iter()
        .max_by(|a, b| value_of(a).cmp(&value_of(b)).then_with(|| b.cmp(a)))
        .cloned()
        .unwrap_or_else(|| vec![0; t]);
    let value = value_of(&best);
    let mut instances = vec![Vec::new(); r];
    let mut cur = best;
    for k in (0..r).rev() {
        let (prev, ci) = layers[k][&cur].clone();
        instances[k] = choices[ci].clone();
        cur = prev;
    }
    Ok((value, ErasurePattern::from_instances(t, &instances)))
}

/// Minimum pairwise Hamming distance.
pub fn min_distance<T: PartialEq>(code: &[Vec<T>]) -> Result<usize, ExtensionError> {
    if code.len() < 2 {
        return Err(ExtensionError::TooFewCodewords);
    }
    let len = code[0].len();
    if code.iter().any(|c| c.len() != len) {
        return Err(ExtensionError::RaggedCode);
    }
    let mut best = usize::MAX;
    for (i, a) in code.iter().enumerate() {
        for b in &code[i + 1..] {
            best = best.min(a.iter().zip(b).filter(|(x, y)| x != y).count());
        }
    }
    Ok(best)
}

/// An outer codeword: one inner message index (0-based) per instance.
pub type OuterWord = Vec<usize>;

#[derive(Debug, Clone, Serialize)]
pub struct ExtensionPlan {
    #[serde(skip)]
    pub inner: CodebookTuple,
    #[serde(serialize_with = "serialize_outer")]
    pub outer: Vec<Vec<OuterWord>>,
    pub r: usize,
    pub ell: usize,
    pub gamma: Gamma,
    pub t: usize,
    pub u: usize,
    pub budget: usize,
    pub required_dmin: usize,
    /// `None` for codes with fewer than two codewords.
    pub outer_dmin: Vec<Option<usize>>,
    pub warnings: Vec<String>,
}

fn serialize_outer<S: serde::Serializer>(outer: &[Vec<OuterWord>], s: S) -> Result<S::Ok, S::Error> {
    let text: Vec<Vec<String>> =
        outer.iter().map(|code| code.iter().map(|w| crate::channel::symbols_to_string(w)).collect()).collect();
    text.serialize(s)
}

impl ExtensionPlan {
    /// Users whose outer code is below the required minimum distance.
    pub fn weak_users(&self) -> Vec<usize> {
        self.outer_dmin
            .iter()
            .enumerate()
            .filter(|(_, d)| matches!(d, Some(d) if *d < self.required_dmin))
            .map(|(j, _)| j)
            .collect()
    }
}

/// Assembles a plan after verifying the inner tuple and checking outer shapes.
pub fn build_plan(
    inner: CodebookTuple,
    outer: Vec<Vec<OuterWord>>,
    r: usize,
    ell: usize,
    gamma: &Gamma,
) -> Result<ExtensionPlan, ExtensionError> {
    let t = inner.t();
    let u = gamma.required_users(t);
    check_tu(t, u)?;
    if !is_zero_error(&inner, ell, gamma, &VerifierConfig::default())? {
        return Err(ExtensionError::InnerNotVerified { ell, gamma: gamma.to_string() });
    }
    if outer.len() != t {
        return Err(ExtensionError::OuterCount { expected: t, got: outer.len() });
    }
    let sizes = inner.sizes();
    for (j, code) in outer.iter().enumerate() {
        let user = j + 1;
        if code.is_empty() {
            return Err(ExtensionError::EmptyOuter { user });
        }
        for (i, w) in code.iter().enumerate() {
            if w.len() != r {
                return Err(ExtensionError::OuterLength { user, index: i + 1, len: w.len(), r });
            }
            if let Some(&symbol) = w.iter().find(|&&v| v >= sizes[j]) {
                return Err(ExtensionError::OuterSymbol { user, symbol, size: sizes[j] });
            }
            if let Some(first) = code[..i].iter().position(|o| o == w) {
                return Err(ExtensionError::DuplicateOuter { user, first: first + 1, second: i + 1 });
            }
        }
    }
    let budget = erasure_budget(t, u, r)?;
    let required_dmin = budget + 1;
    let outer_dmin: Vec<Option<usize>> = outer.iter().map(|c| min_distance(c).ok()).collect();
    let warnings = outer_dmin
        .iter()
        .enumerate()
        .filter_map(|(j, d)| match d {
            Some(d) if *d < required_dmin => {
                Some(format!("user {}: outer minimum distance {d} is below the required {required_dmin}", j + 1))
            }
            _ => None,
        })
        .collect();
    Ok(ExtensionPlan { inner, outer, r, ell, gamma: gamma.clone(), t, u, budget, required_dmin, outer_dmin, warnings })
}

/// Concatenated encoding: per user, the inner codewords selected by the outer codeword
/// of the given 1-based outer message, joined over the `r` instances.
pub fn concat_encode(plan: &ExtensionPlan, messages: &[usize]) -> Result<Vec<Codeword>, ExtensionError> {
    if messages.len() != plan.t {
        return Err(ExtensionError::MalformedGrid(format!("expected {} messages", plan.t)));
    }
    messages
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let code = &plan.outer[j];
            if m == 0 || m > code.len() {
                return Err(ExtensionError::BadMessage { user: j + 1, message: m, size: code.len() });
            }
            Ok(code[m - 1].iter().flat_map(|&v| plan.inner.codeword(j, v).iter().copied()).collect())
        })
        .collect()
}

/// Inner decoding of a length-`r·n` output block by block; `None` marks an erasure.
/// Returns an `r × t` grid.
pub fn inner_results(plan: &ExtensionPlan, y: &[usize]) -> Result<Vec<Vec<Option<usize>>>, ExtensionError> {
    let n = plan.inner.n();
    if y.len() != plan.r * n {
        return Err(ExtensionError::MalformedGrid(format!("output length {} is not r*n = {}", y.len(), plan.r * n)));
    }
    let dec = CanonicalDecoder::new_unchecked(&plan.inner, plan.ell);
    Ok((0..plan.r)
        .map(|k| dec.decode_detailed(&y[k * n..(k + 1) * n]).messages.into_iter().map(|m| m.checked_sub(1)).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConcatDecoded {
    /// 1-based outer message per user; `0` when the completion is not unique.
    pub estimates: Vec<usize>,
    pub decoded_users: usize,
}

impl ConcatDecoded {
    /// Number of users whose estimate equals the true 1-based message.
    pub fn correct(&self, truth: &[usize]) -> usize {
        self.estimates.iter().zip(truth).filter(|(e, t)| **e != 0 && e == t).count()
    }
}

fn unique_completion(code: &[OuterWord], received: impl Fn(usize) -> Option<usize>) -> usize {
    let mut hit = 0;
    for (i, w) in code.iter().enumerate() {
        if w.iter().enumerate().all(|(k, &v)| received(k).is_none_or(|s| s == v)) {
            if hit != 0 {
                return 0;
            }
            hit = i + 1;
        }
    }
    hit
}

/// Outer erasure decoding by unique completion. `grid[k][j]` is user `j`'s inner result
/// in instance `k` (0-based inner message, or `None` when erased).
pub fn concat_decode(plan: &ExtensionPlan, grid: &[Vec<Option<usize>>]) -> Result<ConcatDecoded, ExtensionError> {
    if grid.len() != plan.r || grid.iter().any(|row| row.len() != plan.t) {
        return Err(ExtensionError::MalformedGrid(format!("expected {} rows of {} entries", plan.r, plan.t)));
    }
    let estimates: Vec<usize> = (0..plan.t).map(|j| unique_completion(&plan.outer[j], |k| grid[k][j])).collect();
    let decoded_users = estimates.iter().filter(|&&e| e != 0).count();
    Ok(ConcatDecoded { estimates, decoded_users })
}

/// A user is safe under an erasure row if every outer codeword is the unique completion
/// of its unerased positions.
fn user_safe(code: &[OuterWord], erased: &[bool]) -> bool {
    code.iter()
        .enumerate()
        .all(|(i, w)| unique_completion(code, |k| if erased[k] { None } else { Some(w[k]) }) == i + 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtensionFailure {
    pub pattern: ErasurePattern,
    /// 1-based outer messages for which fewer than `u` users are recovered.
    pub messages: Vec<usize>,
    pub recovered: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtensionVerdict {
    pub pass: bool,
    pub patterns_checked: u64,
    pub failure: Option<ExtensionFailure>,
}

/// Exhausts admissible erasure patterns (always-successful erasures, every message tuple)
/// and checks that at least `u` users' outer messages are recovered.
///
/// Patterns are enumerated instance by instance, each instance choosing an erased set of
/// size at most `t − u` in size-then-lexicographic order; the first violating pattern in
/// that order is reported.
pub fn verify_extension(plan: &ExtensionPlan, budget: u64) -> Result<ExtensionVerdict, ExtensionError> {
    let (t, u, r) = (plan.t, plan.u, plan.r);
    let choices: Vec<Vec<usize>> = (0..=t - u).flat_map(|k| k_subsets(t, k)).collect();
    let per_instance: u64 = (0..=t - u).map(|k| binomial(t as u64, k as u64).unwrap_or(u64::MAX)).sum();
    let total = per_instance.checked_pow(r as u32);
    let total = match total {
        Some(n) if n <= budget => n,
        _ => {
            return Err(ExtensionError::BudgetExceeded {
                needed: total.map_or_else(|| "more than 2^64".into(), |n| n.to_string()),
                budget,
            })
        }
    };
    let c = choices.len();
    let first_failure = (0..total).into_par_iter().find_first(|&idx| {
        let pattern = decode_pattern(idx, t, r, &choices, c);
        let unsafe_users = (0..t).filter(|&j| !user_safe(&plan.outer[j], &pattern.erased[j])).count();
        unsafe_users > t - u
    });
    let failure = first_failure.map(|idx| {
        let pattern = decode_pattern(idx, t, r, &choices, c);
        let recovers = |j: usize, i: usize| {
            let (code, erased) = (&plan.outer[j], &pattern.erased[j]);
            unique_completion(code, |k| if erased[k] { None } else { Some(code[i][k]) }) == i + 1
        };
        // Per user, the first message that is lost under this pattern (else message 1).
        let messages: Vec<usize> =
            (0..t).map(|j| (0..plan.outer[j].len()).find(|&i| !recovers(j, i)).unwrap_or(0) + 1).collect();
        let recovered = (0..t).filter(|&j| recovers(j, messages[j] - 1)).count();
        ExtensionFailure { pattern, messages, recovered }
    });
    Ok(ExtensionVerdict { pass: failure.is_none(), patterns_checked: total, failure })
}

fn decode_pattern(mut idx: u64, t: usize, r: usize, choices: &[Vec<usize>], c: usize) -> ErasurePattern {
    let mut instances = vec![Vec::new(); r];
    for k in (0..r).rev() {
        instances[k] = choices[(idx % c as u64) as usize].clone();
        idx /= c as u64;
    }
    ErasurePattern::from_instances(t, &instances)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AchievedRates {
    pub inner: Vec<f64>,
    pub outer: Vec<f64>,
    pub achieved: Vec<f64>,
    /// Exact `QⱼRⱼ` when every code size involved is a power of two.
    #[serde(serialize_with = "serialize_exact")]
    pub exact: Vec<Option<Rational>>,
}

fn serialize_exact<S: serde::Serializer>(v: &[Option<Rational>], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&x.as_ref().map(crate::rational::format_rational))?;
    }
    seq.end()
}

fn exact_log2(m: usize) -> Option<usize> {
    m.is_power_of_two().then(|| m.trailing_zeros() as usize)
}

/// `QⱼRⱼ` with `Qⱼ = log₂|outerⱼ|/r` and `Rⱼ = log₂Mⱼ/n`.
pub fn achieved_rates(plan: &ExtensionPlan) -> AchievedRates {
    let n = plan.inner.n();
    let inner = plan.inner.rates();
    let outer: Vec<f64> =
        plan.outer.iter().map(|c| if plan.r == 0 { 0.0 } else { (c.len() as f64).log2() / plan.r as f64 }).collect();
    let achieved = inner.iter().zip(&outer).map(|(a, b)| a * b).collect();
    let exact = plan
        .outer
        .iter()
        .zip(plan.inner.sizes())
        .map(|(c, m)| {
            let (lq, lr) = (exact_log2(c.len())?, exact_log2(m)?);
            if plan.r == 0 || lq == 0 {
                return Some(Rational::zero());
            }
            Some(Rational::new((lq * lr).into(), (plan.r * n).into()))
        })
        .collect();
    AchievedRates { inner, outer, achieved, exact }
}
