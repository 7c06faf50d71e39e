//! Zero-error γ partial correction over the adder channel `Y = ΣXⱼ + S`, `S ∈ {0,…,ℓ}`.
//!
//! `A₀` is the multiset of noiseless sums `Σ xⱼ`; `A₁` the multiset of `s + Σ xⱼ` over
//! nonzero `s ∈ {0,…,ℓ}ⁿ`. A tuple has zero partial-correction error iff
//! (1) `A₀ ∩ A₁ = ∅`, (2) the elements of `A₀` are distinct, and (3) every output repeated
//! in `A₁` has decompositions agreeing on at least `⌈γt⌉` users.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::channel::symbols_to_string;
use crate::codebook::CodebookTuple;
use crate::rational::Gamma;

/// Default cap on `ΠMⱼ · ((ℓ+1)ⁿ − 1)` decompositions enumerated for condition 3.
pub const DEFAULT_A1_BUDGET: u64 = 1 << 26;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("ell must be at least 1")]
    InvalidEll,
    #[error("A1 enumeration needs {needed} decompositions, budget is {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
    #[error("codebook tuple is not zero-error for ell={ell}, gamma={gamma}")]
    NotVerified { ell: usize, gamma: String },
    #[error("output length {got} does not match block length {n}")]
    OutputLength { got: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifierConfig {
    pub a1_budget: u64,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig { a1_budget: DEFAULT_A1_BUDGET }
    }
}

/// One element of `A₀`: a 0-based message tuple and its coordinatewise sum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct A0Entry {
    pub tuple: Vec<usize>,
    pub sum: Vec<u8>,
}

/// All `ΠMⱼ` noiseless outputs with their generating message tuples.
pub fn build_a0(cb: &CodebookTuple) -> Vec<A0Entry> {
    cb.message_tuples()
        .map(|tuple| {
            let sum = cb.sum(&tuple);
            A0Entry { tuple, sum }
        })
        .collect()
}

fn difference_in_states(u: &[u8], v: &[u8], ell: usize) -> bool {
    u.iter().zip(v).all(|(&a, &b)| a >= b && usize::from(a - b) <= ell)
}

/// `u = v + s` with both sums in `A₀` and `s ∈ {0,…,ℓ}ⁿ` nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Condition1Witness {
    pub u: Vec<u8>,
    pub u_tuple: Vec<usize>,
    pub v: Vec<u8>,
    pub v_tuple: Vec<usize>,
    pub s: Vec<u8>,
}

/// Two message tuples with the same noiseless sum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Condition2Witness {
    pub sum: Vec<u8>,
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

/// A decomposition `w = s + Σ xⱼ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    pub tuple: Vec<usize>,
    pub s: Vec<u8>,
}

/// An output repeated in `A₁` whose decompositions agree on fewer than `⌈γt⌉` users.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Condition3Witness {
    pub w: Vec<u8>,
    pub decompositions: Vec<Decomposition>,
    /// 0-based users on which every decomposition carries the same message.
    pub agreement: Vec<usize>,
}

fn condition1_scan(a0: &[A0Entry], ell: usize, all: bool) -> Vec<Condition1Witness> {
    let mut out = Vec::new();
    for a in a0 {
        for b in a0 {
            if a.sum != b.sum && difference_in_states(&a.sum, &b.sum, ell) {
                out.push(Condition1Witness {
                    u: a.sum.clone(),
                    u_tuple: a.tuple.clone(),
                    v: b.sum.clone(),
                    v_tuple: b.tuple.clone(),
                    s: a.sum.iter().zip(&b.sum).map(|(x, y)| x - y).collect(),
                });
                if !all {
                    return out;
                }
            }
        }
    }
    out
}

/// Condition (1) by the difference scan over ordered pairs of distinct `A₀` vectors.
/// Returns the first witness found, if any.
pub fn check_condition1(cb: &CodebookTuple, ell: usize) -> Option<Condition1Witness> {
    condition1_scan(&build_a0(cb), ell, false).pop()
}

/// Every condition-(1) witness, in scan order.
pub fn condition1_witnesses(cb: &CodebookTuple, ell: usize) -> Vec<Condition1Witness> {
    condition1_scan(&build_a0(cb), ell, true)
}

fn condition2_scan(a0: &[A0Entry], all: bool) -> Vec<Condition2Witness> {
    let mut first_of: HashMap<&[u8], &[usize]> = HashMap::new();
    let mut out = Vec::new();
    for e in a0 {
        match first_of.get(e.sum.as_slice()) {
            Some(first) => {
                out.push(Condition2Witness { sum: e.sum.clone(), first: first.to_vec(), second: e.tuple.clone() });
                if !all {
                    break;
                }
            }
            None => {
                first_of.insert(&e.sum, &e.tuple);
            }
        }
    }
    out
}

/// Condition (2): no two message tuples share a noiseless sum.
pub fn check_condition2(cb: &CodebookTuple) -> Option<Condition2Witness> {
    condition2_scan(&build_a0(cb), false).pop()
}

pub fn condition2_witnesses(cb: &CodebookTuple) -> Vec<Condition2Witness> {
    condition2_scan(&build_a0(cb), true)
}

/// All nonzero state sequences in `{0,…,ℓ}ⁿ`, last coordinate fastest.
fn nonzero_states(n: usize, ell: usize) -> impl Iterator<Item = Vec<u8>> {
    crate::util::Odometer::new(&vec![ell + 1; n]).skip(1).map(|s| s.into_iter().map(|v| v as u8).collect())
}

fn a1_size(cb: &CodebookTuple, ell: usize) -> Option<u64> {
    let states = u64::try_from(ell + 1).ok()?.checked_pow(u32::try_from(cb.n()).ok()?)? - 1;
    states.checked_mul(cb.tuple_count() as u64)
}

struct Group {
    first: usize,
    agree: Vec<bool>,
    count: usize,
}

/// All decompositions `w = s + Σxⱼ` with `s ≠ 0`, in tuple order.
pub fn a1_decompositions(a0: &[A0Entry], ell: usize, w: &[u8]) -> Vec<Decomposition> {
    a0.iter()
        .filter(|e| e.sum.len() == w.len() && w != e.sum.as_slice() && difference_in_states(w, &e.sum, ell))
        .map(|e| Decomposition { tuple: e.tuple.clone(), s: w.iter().zip(&e.sum).map(|(a, b)| a - b).collect() })
        .collect()
}

/// Condition (3), ground truth: streams all of `A₁`, groups by output and checks the
/// maximal agreement set of every repeated output.
pub fn condition3_witnesses(
    cb: &CodebookTuple,
    ell: usize,
    gamma: &Gamma,
    config: &VerifierConfig,
) -> Result<Vec<Condition3Witness>, VerifyError> {
    if ell == 0 {
        return Err(VerifyError::InvalidEll);
    }
    match a1_size(cb, ell) {
        Some(k) if k <= config.a1_budget => {}
        other => {
            return Err(VerifyError::BudgetExceeded {
                needed: other.map_or_else(|| "more than 2^64".to_string(), |k| k.to_string()),
                budget: config.a1_budget,
            })
        }
    }
    let t = cb.t();
    let u = gamma.required_users(t);
    let a0 = build_a0(cb);
    let mut groups: HashMap<Vec<u8>, Group> = HashMap::new();
    let mut w = vec![0u8; cb.n()];
    for s in nonzero_states(cb.n(), ell) {
        for (idx, e) in a0.iter().enumerate() {
            for ((o, a), b) in w.iter_mut().zip(&e.sum).zip(&s) {
                *o = a + b;
            }
            match groups.get_mut(&w) {
                Some(g) => {
                    g.count += 1;
                    let first = &a0[g.first].tuple;
                    for (j, flag) in g.agree.iter_mut().enumerate() {
                        if first[j] != e.tuple[j] {
                            *flag = false;
                        }
                    }
                }
                None => {
                    groups.insert(w.clone(), Group { first: idx, agree: vec![true; t], count: 1 });
                }
            }
        }
    }
    let mut failing: Vec<(Vec<u8>, Vec<usize>)> = groups
        .into_iter()
        .filter(|(_, g)| g.count >= 2 && g.agree.iter().filter(|&&a| a).count() < u)
        .map(|(w, g)| {
            let agreement = g.agree.iter().enumerate().filter(|(_, &a)| a).map(|(j, _)| j).collect();
            (w, agreement)
        })
        .collect();
    failing.sort();
    Ok(failing
        .into_iter()
        .map(|(w, agreement)| Condition3Witness { decompositions: a1_decompositions(&a0, ell, &w), w, agreement })
        .collect())
}

pub fn check_condition3(
    cb: &CodebookTuple,
    ell: usize,
    gamma: &Gamma,
) -> Result<Option<Condition3Witness>, VerifyError> {
    Ok(condition3_witnesses(cb, ell, gamma, &VerifierConfig::default())?.into_iter().next())
}

/// A pair of `A₀` elements that certifies a condition-(3) failure without building `A₁`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuspiciousPair {
    pub u: Vec<u8>,
    pub u_tuple: Vec<usize>,
    pub v: Vec<u8>,
    pub v_tuple: Vec<usize>,
    /// `|u − v|` coordinatewise.
    pub abs_diff: Vec<u8>,
    /// Nonzero states with `u + s_u = v + s_v`.
    pub s_u: Vec<u8>,
    pub s_v: Vec<u8>,
}

fn realize_collision(u: &[u8], v: &[u8], ell: usize) -> Option<(Vec<u8>, Vec<u8>)> {
    let mut s_u: Vec<u8> = u.iter().zip(v).map(|(&a, &b)| b.saturating_sub(a)).collect();
    let mut s_v: Vec<u8> = u.iter().zip(v).map(|(&a, &b)| a.saturating_sub(b)).collect();
    let zero = |s: &[u8]| s.iter().all(|&x| x == 0);
    if zero(&s_u) || zero(&s_v) {
        // Lift both sides by one unit where there is headroom so neither state is s₀.
        let k = s_u.iter().zip(&s_v).position(|(&a, &b)| usize::from(a.max(b)) < ell)?;
        s_u[k] += 1;
        s_v[k] += 1;
    }
    Some((s_u, s_v))
}

/// Sound failure detector for condition (3): `A₀` pairs differing on at least
/// `t − ⌈γt⌉ + 1` users whose coordinatewise distance is at most `ℓ`, restricted to pairs
/// that admit nonzero states on both sides.
pub fn scan_condition3_fast(cb: &CodebookTuple, ell: usize, gamma: &Gamma) -> Vec<SuspiciousPair> {
    let a0 = build_a0(cb);
    let t = cb.t();
    let threshold = t - gamma.required_users(t) + 1;
    let mut out = Vec::new();
    for (i, a) in a0.iter().enumerate() {
        for b in &a0[i + 1..] {
            let differing = a.tuple.iter().zip(&b.tuple).filter(|(x, y)| x != y).count();
            if differing < threshold {
                continue;
            }
            let close = a.sum.iter().zip(&b.sum).all(|(&x, &y)| usize::from(x.abs_diff(y)) <= ell);
            if !close {
                continue;
            }
            if let Some((s_u, s_v)) = realize_collision(&a.sum, &b.sum, ell) {
                out.push(SuspiciousPair {
                    u: a.sum.clone(),
                    u_tuple: a.tuple.clone(),
                    v: b.sum.clone(),
                    v_tuple: b.tuple.clone(),
                    abs_diff: a.sum.iter().zip(&b.sum).map(|(&x, &y)| x.abs_diff(y)).collect(),
                    s_u,
                    s_v,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "condition")]
pub enum ConditionFailure {
    #[serde(rename = "1")]
    Condition1(Condition1Witness),
    #[serde(rename = "2")]
    Condition2(Condition2Witness),
    #[serde(rename = "3")]
    Condition3(Condition3Witness),
}

impl ConditionFailure {
    pub fn condition(&self) -> u8 {
        match self {
            ConditionFailure::Condition1(_) => 1,
            ConditionFailure::Condition2(_) => 2,
            ConditionFailure::Condition3(_) => 3,
        }
    }
}

impl fmt::Display for ConditionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |v: &[u8]| symbols_to_string(&v.iter().map(|&x| usize::from(x)).collect::<Vec<_>>());
        let msgs = |t: &[usize]| {
            let v: Vec<String> = t.iter().map(|m| (m + 1).to_string()).collect();
            format!("({})", v.join(","))
        };
        match self {
            ConditionFailure::Condition1(w) => write!(
                f,
                "condition 1: {} - {} = {} (messages {} and {})",
                s(&w.u),
                s(&w.v),
                s(&w.s),
                msgs(&w.u_tuple),
                msgs(&w.v_tuple)
            ),
            ConditionFailure::Condition2(w) => {
                write!(f, "condition 2: messages {} and {} both sum to {}", msgs(&w.first), msgs(&w.second), s(&w.sum))
            }
            ConditionFailure::Condition3(w) => {
                write!(f, "condition 3: w = {} =", s(&w.w))?;
                for (i, d) in w.decompositions.iter().enumerate() {
                    if i > 0 {
                        write!(f, " =")?;
                    }
                    write!(f, " {} + sum{}", s(&d.s), msgs(&d.tuple))?;
                }
                let users: Vec<String> = w.agreement.iter().map(|j| (j + 1).to_string()).collect();
                write!(f, "; agreeing users {{{}}}", users.join(","))
            }
        }
    }
}

/// Verdict of the zero-error verifier with every witness it found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartialCorrectionReport {
    pub verdict: bool,
    pub gamma: Gamma,
    pub ell: usize,
    pub t: usize,
    pub u: usize,
    pub failures: Vec<ConditionFailure>,
}

impl PartialCorrectionReport {
    pub fn failed_conditions(&self) -> Vec<u8> {
        let mut c: Vec<u8> = self.failures.iter().map(ConditionFailure::condition).collect();
        c.dedup();
        c
    }
}

pub fn verify_zero_error(
    cb: &CodebookTuple,
    ell: usize,
    gamma: &Gamma,
) -> Result<PartialCorrectionReport, VerifyError> {
    verify_zero_error_with(cb, ell, gamma, &VerifierConfig::default())
}

/// Checks conditions (1)–(3) and collects all witnesses.
pub fn verify_zero_error_with(
    cb: &CodebookTuple,
    ell: usize,
    gamma: &Gamma,
    config: &VerifierConfig,
) -> Result<PartialCorrectionReport, VerifyError> {
    if ell == 0 {
        return Err(VerifyError::InvalidEll);
    }
    let a0 = build_a0(cb);
    let mut failures: Vec<ConditionFailure> =
        condition1_scan(&a0, ell, true).into_iter().map(ConditionFailure::Condition1).collect();
    failures.extend(condition2_scan(&a0, true).into_iter().map(ConditionFailure::Condition2));
    failures.extend(condition3_witnesses(cb, ell, gamma, config)?.into_iter().map(ConditionFailure::Condition3));
    Ok(PartialCorrectionReport {
        verdict: failures.is_empty(),
        gamma: gamma.clone(),
        ell,
        t: cb.t(),
        u: gamma.required_users(cb.t()),
        failures,
    })
}

/// Early-exit variant: `true` iff all three conditions hold.
pub fn is_zero_error(
    cb: &CodebookTuple,
    ell: usize,
    gamma: &Gamma,
    config: &VerifierConfig,
) -> Result<bool, VerifyError> {
    if ell == 0 {
        return Err(VerifyError::InvalidEll);
    }
    let a0 = build_a0(cb);
    if !condition1_scan(&a0, ell, false).is_empty() || !condition2_scan(&a0, false).is_empty() {
        return Ok(false);
    }
    Ok(condition3_witnesses(cb, ell, gamma, config)?.is_empty())
}

/// Direct check of `A₀ ∩ A₁ = ∅` by materialising `A₁`; used to cross-check the
/// difference scan.
pub fn a0_a1_intersect(cb: &CodebookTuple, ell: usize) -> bool {
    let a0 = build_a0(cb);
    let sums: std::collections::HashSet<&[u8]> = a0.iter().map(|e| e.sum.as_slice()).collect();
    let mut w = vec![0u8; cb.n()];
    for s in nonzero_states(cb.n(), ell) {
        for e in &a0 {
            for ((o, a), b) in w.iter_mut().zip(&e.sum).zip(&s) {
                *o = a + b;
            }
            if sums.contains(w.as_slice()) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> CodebookTuple {
        CodebookTuple::from_strs(&[&["011", "100"], &["010", "101"]]).unwrap()
    }

    pub(crate) fn good_triple() -> CodebookTuple {
        CodebookTuple::from_strs(&[&["011010", "100101"], &["010110", "101001"], &["001101", "110010"]]).unwrap()
    }

    fn v(s: &str) -> Vec<u8> {
        s.bytes().map(|b| b - b'0').collect()
    }

    #[test]
    fn a0_of_pair() {
        // 011+010, 011+101, 100+010, 100+101
        let sums: Vec<Vec<u8>> = build_a0(&pair()).into_iter().map(|e| e.sum).collect();
        assert_eq!(sums, vec![v("021"), v("112"), v("110"), v("201")]);
    }

    #[test]
    fn a0_of_good_triple_contains_expected_sums() {
        let a0 = build_a0(&good_triple());
        assert_eq!(a0.len(), 8);
        assert!(a0.iter().any(|e| e.sum == v("022221") && e.tuple == vec![0, 0, 0]));
        assert!(a0.iter().any(|e| e.sum == v("311112") && e.tuple == vec![1, 1, 1]));
    }

    #[test]
    fn single_codeword_codebooks() {
        let cb = CodebookTuple::from_strs(&[&["000"], &["000"]]).unwrap();
        assert_eq!(build_a0(&cb).len(), 1);
        assert!(check_condition1(&cb, 1).is_none());
        assert!(check_condition2(&cb).is_none());
    }

    #[test]
    fn condition2_symmetric_collision() {
        assert!(check_condition2(&pair()).is_none());
        let cb = CodebookTuple::from_strs(&[&["01", "10"], &["01", "10"]]).unwrap();
        let w = check_condition2(&cb).unwrap();
        assert_eq!(w.sum, v("11"));
    }

    #[test]
    fn pair_verifies() {
        let g: Gamma = "1/2".parse().unwrap();
        let r = verify_zero_error(&pair(), 1, &g).unwrap();
        assert!(r.verdict, "{:?}", r.failures);
        assert!(check_condition3(&pair(), 1, &g).unwrap().is_none());
    }

    #[test]
    fn fast_scan_threshold() {
        // t = 2, u = 1: pairs must differ on both users; (0,0) vs (0,1) differ on one.
        let g: Gamma = "1/2".parse().unwrap();
        let cb = CodebookTuple::from_strs(&[&["00"], &["00", "01"]]).unwrap();
        assert!(scan_condition3_fast(&cb, 1, &g).is_empty());
    }

    #[test]
    fn zero_ell_rejected() {
        let g: Gamma = "1/2".parse().unwrap();
        assert_eq!(verify_zero_error(&pair(), 0, &g), Err(VerifyError::InvalidEll));
    }

    #[test]
    fn budget_guard() {
        let g: Gamma = "1/2".parse().unwrap();
        let cfg = VerifierConfig { a1_budget: 10 };
        assert!(matches!(verify_zero_error_with(&pair(), 1, &g, &cfg), Err(VerifyError::BudgetExceeded { .. })));
    }
}
