//! Symmetrizability and overwritability of a channel, decided by exact linear feasibility.
//!
//! For a user subset `U` the unknowns are the conditional probabilities `P(s | x_U)`.
//! Inputs of users outside `U` range over every fixed assignment, identical on both
//! sides of each defining equality.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelError, ChannelSpec};
use crate::lp::EqualitySystem;
use crate::rational::{Gamma, Rational};
use crate::util::{k_subsets, mixed_radix_index, Odometer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeasibilityError {
    #[error("user subset is empty")]
    EmptySubset,
    #[error("user index {0} out of range for a {1}-user channel")]
    UserOutOfRange(usize, usize),
    #[error("user {0} listed twice")]
    DuplicateUser(usize),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("malformed witness: {0}")]
    MalformedWitness(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessKind {
    Symmetrizer,
    Overwriter,
}

impl fmt::Display for WitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WitnessKind::Symmetrizer => "symmetrizer",
            WitnessKind::Overwriter => "overwriter",
        })
    }
}

/// A conditional state distribution `P(s | x_{i₁},…,x_{iₘ})`.
///
/// `users` are 0-based and ascending; `table[c]` is the distribution over states for the
/// conditioning tuple with mixed-radix index `c` (last user fastest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateConditionalWitness {
    users: Vec<usize>,
    input_sizes: Vec<usize>,
    state_count: usize,
    table: Vec<Vec<Rational>>,
}

impl StateConditionalWitness {
    /// Wraps a table without checking it; see [`StateConditionalWitness::check`].
    pub fn from_table(
        users: Vec<usize>,
        input_sizes: Vec<usize>,
        state_count: usize,
        table: Vec<Vec<Rational>>,
    ) -> Self {
        StateConditionalWitness { users, input_sizes, state_count, table }
    }

    /// Builds a witness by evaluating `f(x_sub) -> distribution over states`.
    pub fn from_fn(
        ch: &ChannelSpec,
        users: &[usize],
        mut f: impl FnMut(&[usize]) -> Vec<Rational>,
    ) -> Result<Self, FeasibilityError> {
        let users = normalize_users(ch.users(), users)?;
        let input_sizes: Vec<usize> = users.iter().map(|&u| ch.input_sizes()[u]).collect();
        let table = Odometer::new(&input_sizes).map(|c| f(&c)).collect();
        Ok(Self::from_table(users, input_sizes, ch.state_count(), table))
    }

    /// The point-mass witness `P(s | x_sub) = 1` iff `s = g(x_sub)`.
    pub fn point_mass(
        ch: &ChannelSpec,
        users: &[usize],
        mut g: impl FnMut(&[usize]) -> usize,
    ) -> Result<Self, FeasibilityError> {
        let states = ch.state_count();
        Self::from_fn(ch, users, |c| {
            let mut row = vec![Rational::zero(); states];
            if let Some(slot) = row.get_mut(g(c)) {
                *slot = Rational::one();
            }
            row
        })
    }

    pub fn users(&self) -> &[usize] {
        &self.users
    }

    pub fn input_sizes(&self) -> &[usize] {
        &self.input_sizes
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn table(&self) -> &[Vec<Rational>] {
        &self.table
    }

    /// `P(· | x_sub)`.
    pub fn distribution(&self, x_sub: &[usize]) -> &[Rational] {
        &self.table[mixed_radix_index(&self.input_sizes, x_sub)]
    }

    pub fn prob(&self, x_sub: &[usize], s: usize) -> &Rational {
        &self.distribution(x_sub)[s]
    }

    /// Checks shape against `ch` and that every row is a probability distribution.
    pub fn check(&self, ch: &ChannelSpec) -> Result<(), FeasibilityError> {
        let users = normalize_users(ch.users(), &self.users)?;
        if users != self.users {
            return Err(FeasibilityError::MalformedWitness("users must be ascending".into()));
        }
        let sizes: Vec<usize> = users.iter().map(|&u| ch.input_sizes()[u]).collect();
        if sizes != self.input_sizes || self.state_count != ch.state_count() {
            return Err(FeasibilityError::MalformedWitness("alphabet sizes do not match the channel".into()));
        }
        let expected: usize = sizes.iter().product();
        if self.table.len() != expected {
            return Err(FeasibilityError::MalformedWitness(format!(
                "expected {expected} conditioning rows, got {}",
                self.table.len()
            )));
        }
        for (c, row) in Odometer::new(&sizes).zip(&self.table) {
            if row.len() != self.state_count {
                return Err(FeasibilityError::MalformedWitness(format!(
                    "row {c:?} has {} entries, expected {}",
                    row.len(),
                    self.state_count
                )));
            }
            if row.iter().any(|p| p.is_negative()) {
                return Err(FeasibilityError::MalformedWitness(format!("row {c:?} has a negative entry")));
            }
            let sum: Rational = row.iter().sum();
            if !sum.is_one() {
                return Err(FeasibilityError::MalformedWitness(format!("row {c:?} sums to {sum}")));
            }
        }
        Ok(())
    }
}

fn normalize_users(t: usize, users: &[usize]) -> Result<Vec<usize>, FeasibilityError> {
    if users.is_empty() {
        return Err(FeasibilityError::EmptySubset);
    }
    let mut sorted = users.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(FeasibilityError::DuplicateUser(w[0]));
        }
    }
    if let Some(&u) = sorted.iter().find(|&&u| u >= t) {
        return Err(FeasibilityError::UserOutOfRange(u, t));
    }
    Ok(sorted)
}

/// Index bookkeeping for splitting a full input tuple into subset and rest coordinates.
struct Split {
    users: Vec<usize>,
    rest: Vec<usize>,
    sub_sizes: Vec<usize>,
    rest_sizes: Vec<usize>,
}

impl Split {
    fn new(ch: &ChannelSpec, users: Vec<usize>) -> Self {
        let rest: Vec<usize> = (0..ch.users()).filter(|u| !users.contains(u)).collect();
        let sub_sizes = users.iter().map(|&u| ch.input_sizes()[u]).collect();
        let rest_sizes = rest.iter().map(|&u| ch.input_sizes()[u]).collect();
        Split { users, rest, sub_sizes, rest_sizes }
    }

    fn merge(&self, x_sub: &[usize], x_rest: &[usize], out: &mut [usize]) {
        for (&u, &v) in self.users.iter().zip(x_sub) {
            out[u] = v;
        }
        for (&u, &v) in self.rest.iter().zip(x_rest) {
            out[u] = v;
        }
    }
}

/// Every defining equality as `(x_sub, x'_sub, x_rest, y)`, in lexicographic order.
fn for_each_equation(
    ch: &ChannelSpec,
    split: &Split,
    mut f: impl FnMut(&[usize], &[usize], &[usize], usize, &[usize], &[usize]) -> Result<bool, ChannelError>,
) -> Result<(), ChannelError> {
    let subs: Vec<Vec<usize>> = Odometer::new(&split.sub_sizes).collect();
    let rests: Vec<Vec<usize>> = Odometer::new(&split.rest_sizes).collect();
    let mut full = vec![0; ch.users()];
    let mut full_prime = vec![0; ch.users()];
    for x in &subs {
        for xp in &subs {
            for r in &rests {
                split.merge(x, r, &mut full);
                split.merge(xp, r, &mut full_prime);
                for y in 0..ch.output_count() {
                    if !f(x, xp, r, y, &full, &full_prime)? {
                        return Ok(());
                    }
                }
            }
        }
    }
    Ok(())
}

fn build_system(ch: &ChannelSpec, split: &Split, kind: WitnessKind) -> Result<Option<EqualitySystem>, ChannelError> {
    let states = ch.state_count();
    let conds: usize = split.sub_sizes.iter().product();
    let num_vars = conds * states;
    let mut seen: HashSet<(Vec<Rational>, Rational)> = HashSet::new();
    let mut system = EqualitySystem::new(num_vars);
    let mut contradiction = false;

    for_each_equation(ch, split, |x, xp, _r, y, full, full_prime| {
        let mut coeffs = vec![Rational::zero(); num_vars];
        let cx = mixed_radix_index(&split.sub_sizes, x);
        let cxp = mixed_radix_index(&split.sub_sizes, xp);
        let mut rhs = Rational::zero();
        for s in 0..states {
            let w = ch.transition_prob(full, s, y)?;
            if !w.is_zero() {
                coeffs[cxp * states + s] += w;
            }
        }
        match kind {
            WitnessKind::Symmetrizer => {
                for s in 0..states {
                    let w = ch.transition_prob(full_prime, s, y)?;
                    if !w.is_zero() {
                        coeffs[cx * states + s] -= w;
                    }
                }
            }
            WitnessKind::Overwriter => {
                rhs = ch.transition_prob(full_prime, ch.s0(), y)?.clone();
            }
        }
        let Some(lead) = coeffs.iter().find(|c| !c.is_zero()).cloned() else {
            if !rhs.is_zero() {
                contradiction = true;
                return Ok(false);
            }
            return Ok(true);
        };
        for c in coeffs.iter_mut() {
            *c = &*c / &lead;
        }
        let rhs = rhs / &lead;
        if seen.insert((coeffs.clone(), rhs.clone())) {
            system.push(coeffs, rhs);
        }
        Ok(true)
    })?;
    if contradiction {
        return Ok(None);
    }
    for c in 0..conds {
        let mut coeffs = vec![Rational::zero(); num_vars];
        for s in 0..states {
            coeffs[c * states + s] = Rational::one();
        }
        system.push(coeffs, Rational::one());
    }
    Ok(Some(system))
}

fn find_witness(
    ch: &ChannelSpec,
    users: &[usize],
    kind: WitnessKind,
) -> Result<Option<StateConditionalWitness>, FeasibilityError> {
    let users = normalize_users(ch.users(), users)?;
    ch.ensure_valid()?;
    let split = Split::new(ch, users);
    let Some(system) = build_system(ch, &split, kind)? else {
        return Ok(None);
    };
    let Some(solution) = system.solve() else {
        return Ok(None);
    };
    let states = ch.state_count();
    let table = solution.chunks(states).map(|c| c.to_vec()).collect();
    Ok(Some(StateConditionalWitness::from_table(split.users, split.sub_sizes, states, table)))
}

/// A symmetrizing distribution for `users` (0-based), or `None` if none exists.
pub fn find_symmetrizer(
    ch: &ChannelSpec,
    users: &[usize],
) -> Result<Option<StateConditionalWitness>, FeasibilityError> {
    find_witness(ch, users, WitnessKind::Symmetrizer)
}

/// An overwriting distribution for `users` (0-based), or `None` if none exists.
pub fn find_overwriter(ch: &ChannelSpec, users: &[usize]) -> Result<Option<StateConditionalWitness>, FeasibilityError> {
    find_witness(ch, users, WitnessKind::Overwriter)
}

/// The first defining equality a witness violates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessViolation {
    pub x_sub: Vec<usize>,
    pub x_sub_prime: Vec<usize>,
    pub x_rest: Vec<usize>,
    pub y: usize,
    #[serde(with = "crate::rational::as_text")]
    pub lhs: Rational,
    #[serde(with = "crate::rational::as_text")]
    pub rhs: Rational,
}

impl fmt::Display for WitnessViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "x={:?}, x'={:?}, rest={:?}, y={}: {} != {}",
            self.x_sub, self.x_sub_prime, self.x_rest, self.y, self.lhs, self.rhs
        )
    }
}

/// Re-checks every defining equality of `kind` for `w` exactly, independently of the solver.
///
/// Returns `None` when all equalities hold, otherwise the first violation in
/// `(x_sub, x'_sub, x_rest, y)` lexicographic order.
pub fn verify_witness(
    ch: &ChannelSpec,
    w: &StateConditionalWitness,
    kind: WitnessKind,
) -> Result<Option<WitnessViolation>, FeasibilityError> {
    w.check(ch)?;
    ch.ensure_valid()?;
    let split = Split::new(ch, w.users.clone());
    let mut violation = None;
    for_each_equation(ch, &split, |x, xp, r, y, full, full_prime| {
        let mut lhs = Rational::zero();
        for (s, p) in w.distribution(xp).iter().enumerate() {
            if !p.is_zero() {
                lhs += p * ch.transition_prob(full, s, y)?;
            }
        }
        let rhs = match kind {
            WitnessKind::Symmetrizer => {
                let mut acc = Rational::zero();
                for (s, p) in w.distribution(x).iter().enumerate() {
                    if !p.is_zero() {
                        acc += p * ch.transition_prob(full_prime, s, y)?;
                    }
                }
                acc
            }
            WitnessKind::Overwriter => ch.transition_prob(full_prime, ch.s0(), y)?.clone(),
        };
        if lhs != rhs {
            violation =
                Some(WitnessViolation { x_sub: x.to_vec(), x_sub_prime: xp.to_vec(), x_rest: r.to_vec(), y, lhs, rhs });
            return Ok(false);
        }
        Ok(true)
    })?;
    Ok(violation)
}

/// A user subset together with the witness found for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetWitness {
    pub users: Vec<usize>,
    pub witness: StateConditionalWitness,
}

fn all_subsets(t: usize) -> Vec<Vec<usize>> {
    (1..=t).flat_map(|m| k_subsets(t, m)).collect()
}

fn scan(ch: &ChannelSpec, kind: WitnessKind) -> Result<BTreeMap<usize, Vec<SubsetWitness>>, FeasibilityError> {
    ch.ensure_valid()?;
    let found: Vec<Option<SubsetWitness>> = all_subsets(ch.users())
        .into_par_iter()
        .map(|users| find_witness(ch, &users, kind).map(|w| w.map(|witness| SubsetWitness { users, witness })))
        .collect::<Result<_, _>>()?;
    let mut by_size: BTreeMap<usize, Vec<SubsetWitness>> = (1..=ch.users()).map(|m| (m, Vec::new())).collect();
    for sw in found.into_iter().flatten() {
        by_size.get_mut(&sw.users.len()).expect("size in range").push(sw);
    }
    Ok(by_size)
}

/// All symmetrizable subsets, grouped by size `m = 1..=t` (every size present as a key).
pub fn symmetrizable_orders(ch: &ChannelSpec) -> Result<BTreeMap<usize, Vec<SubsetWitness>>, FeasibilityError> {
    scan(ch, WitnessKind::Symmetrizer)
}

/// All overwritable subsets, grouped by size.
pub fn overwritable_orders(ch: &ChannelSpec) -> Result<BTreeMap<usize, Vec<SubsetWitness>>, FeasibilityError> {
    scan(ch, WitnessKind::Overwriter)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum InteriorFailure {
    /// The channel is overwritable on these users (0-based).
    Overwritable { users: Vec<usize> },
    /// Symmetrizable on more users than may be left uncorrected.
    Symmetrizable { users: Vec<usize>, tolerance: usize },
}

impl fmt::Display for InteriorFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InteriorFailure::Overwritable { users } => {
                write!(f, "overwritable on users {}", one_based(users))
            }
            InteriorFailure::Symmetrizable { users, tolerance } => write!(
                f,
                "{}-symmetrizable on users {} with {} > t - u = {}",
                users.len(),
                one_based(users),
                users.len(),
                tolerance
            ),
        }
    }
}

pub(crate) fn one_based(users: &[usize]) -> String {
    let v: Vec<String> = users.iter().map(|u| (u + 1).to_string()).collect();
    format!("{{{}}}", v.join(","))
}

/// Outcome of the necessary-condition check for a nonempty partial-correction region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteriorReport {
    pub gamma: Gamma,
    pub t: usize,
    pub u: usize,
    pub overwritable: Vec<SubsetWitness>,
    pub symmetrizable: BTreeMap<usize, Vec<SubsetWitness>>,
    pub failures: Vec<InteriorFailure>,
}

impl InteriorReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Evaluates both necessary conditions: no overwritable subset of any size, and no
/// symmetrizable subset larger than `t − ⌈γt⌉`.
pub fn interior_necessary_conditions(ch: &ChannelSpec, gamma: &Gamma) -> Result<InteriorReport, FeasibilityError> {
    let t = ch.users();
    let u = gamma.required_users(t);
    let tolerance = t - u;
    let overwritable: Vec<SubsetWitness> = overwritable_orders(ch)?.into_values().flatten().collect();
    let symmetrizable = symmetrizable_orders(ch)?;
    let mut failures: Vec<InteriorFailure> =
        overwritable.iter().map(|sw| InteriorFailure::Overwritable { users: sw.users.clone() }).collect();
    for (&m, subsets) in &symmetrizable {
        if m > tolerance {
            failures
                .extend(subsets.iter().map(|sw| InteriorFailure::Symmetrizable { users: sw.users.clone(), tolerance }));
        }
    }
    Ok(InteriorReport { gamma: gamma.clone(), t, u, overwritable, symmetrizable, failures })
}
