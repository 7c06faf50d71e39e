//! Partial-correction error probabilities, exact or by seeded Monte Carlo, and the attacks
//! driven by symmetrizing or overwriting witnesses.
//!
//! Messages are uniform. Under the no-adversary sequence a trial succeeds only if every
//! user is decoded exactly; under any other sequence the estimate may discard users (`0`)
//! as long as at least `⌈γt⌉` are kept and every kept one is correct.

use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::channel::{ChannelError, ChannelSpec, StateSequence};
use crate::codebook::CodebookTuple;
use crate::decoder::Decoder;
use crate::feasibility::{verify_witness, FeasibilityError, StateConditionalWitness, WitnessKind};
use crate::rational::{format_rational, Gamma, Rational};
use crate::util::{checked_product, Odometer};

pub const DEFAULT_EVAL_BUDGET: u64 = 1 << 26;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

#[derive(Debug, thiserror::Error)]
pub enum AdversaryError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Feasibility(#[from] FeasibilityError),
    #[error("channel has {channel} users but the codebook tuple has {tuple}")]
    UserCount { channel: usize, tuple: usize },
    #[error("user {user}: codeword symbol {symbol} outside input alphabet of size {size}")]
    InputSymbol { user: usize, symbol: usize, size: usize },
    #[error("state sequence has length {got}, block length is {n}")]
    StateLength { got: usize, n: usize },
    #[error("state {state} outside the state alphabet of size {size}")]
    StateOutOfRange { state: usize, size: usize },
    #[error("exhaustive mode needs {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
    #[error("witness is not a valid {kind}: {reason}")]
    InvalidWitness { kind: WitnessKind, reason: String },
    #[error("at least one trial is required")]
    NoTrials,
    #[error("confidence level must lie strictly between 0 and 1")]
    BadConfidence,
    #[error("decoder returned {got} estimates for {t} users")]
    DecoderArity { got: usize, t: usize },
}

/// Success test for one transmission. `sent` is 1-based.
pub fn in_success_set(decoded: &[usize], sent: &[usize], no_adversary: bool, u: usize) -> bool {
    if no_adversary {
        return decoded == sent;
    }
    let kept = decoded.iter().filter(|&&d| d != 0).count();
    kept >= u && decoded.iter().zip(sent).all(|(&d, &m)| d == 0 || d == m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub trials: u64,
    pub failures: u64,
    pub mean: f64,
    /// Largest distance from `mean` to an endpoint of the Wilson interval.
    pub radius: f64,
    pub lower: f64,
    pub upper: f64,
    pub confidence: f64,
}

impl Estimate {
    /// Wilson score interval for `failures` out of `trials`.
    pub fn wilson(failures: u64, trials: u64, confidence: f64) -> Result<Self, AdversaryError> {
        if trials == 0 {
            return Err(AdversaryError::NoTrials);
        }
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(AdversaryError::BadConfidence);
        }
        let z = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
        let nf = trials as f64;
        let p = failures as f64 / nf;
        let z2 = z * z;
        let denom = 1.0 + z2 / nf;
        let center = (p + z2 / (2.0 * nf)) / denom;
        let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
        let lower = (center - half).max(0.0);
        let upper = (center + half).min(1.0);
        Ok(Estimate { trials, failures, mean: p, radius: (p - lower).max(upper - p), lower, upper, confidence })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorValue {
    Exact {
        #[serde(with = "crate::rational::as_text")]
        value: Rational,
    },
    Estimate(Estimate),
}

impl ErrorValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            ErrorValue::Exact { value } => value.to_f64().unwrap_or(f64::NAN),
            ErrorValue::Estimate(e) => e.mean,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            ErrorValue::Exact { value } => Some(value),
            ErrorValue::Estimate(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorEntry {
    /// State sequence or strategy name.
    pub label: String,
    pub value: ErrorValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorProfile {
    pub convention: &'static str,
    pub entries: Vec<ErrorEntry>,
    /// First entry with the largest value.
    pub max: Option<ErrorEntry>,
    /// Rate at which the decoder output the spoofed messages (overwrite attacks only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub impersonation: Option<Estimate>,
}

pub const CONVENTION: &str =
    "uniform messages; exact match under the no-adversary sequence, partial correction otherwise";

impl ErrorProfile {
    pub fn new(entries: Vec<ErrorEntry>) -> Self {
        let mut max: Option<&ErrorEntry> = None;
        for e in &entries {
            let better = match (max.map(|m| &m.value), &e.value) {
                (None, _) => true,
                (Some(ErrorValue::Exact { value: a }), ErrorValue::Exact { value: b }) => b > a,
                (Some(a), b) => b.as_f64() > a.as_f64(),
            };
            if better {
                max = Some(e);
            }
        }
        let max = max.cloned();
        ErrorProfile { convention: CONVENTION, entries, max, impersonation: None }
    }

    pub fn max_value(&self) -> Option<&ErrorValue> {
        self.max.as_ref().map(|e| &e.value)
    }
}

struct Setup<'a> {
    ch: &'a ChannelSpec,
    words: Vec<Vec<Vec<usize>>>,
    sizes: Vec<usize>,
    n: usize,
    t: usize,
    u: usize,
}

impl<'a> Setup<'a> {
    fn new(cb: &CodebookTuple, ch: &'a ChannelSpec, gamma: &Gamma) -> Result<Self, AdversaryError> {
        if ch.users() != cb.t() {
            return Err(AdversaryError::UserCount { channel: ch.users(), tuple: cb.t() });
        }
        let mut words = Vec::with_capacity(cb.t());
        for (j, book) in cb.codebooks().iter().enumerate() {
            let size = ch.input_sizes()[j];
            let mut converted = Vec::with_capacity(book.len());
            for w in book {
                let w: Vec<usize> = w.iter().map(|&b| usize::from(b)).collect();
                if let Some(&symbol) = w.iter().find(|&&b| b >= size) {
                    return Err(AdversaryError::InputSymbol { user: j + 1, symbol, size });
                }
                converted.push(w);
            }
            words.push(converted);
        }
        Ok(Setup { ch, words, sizes: cb.sizes(), n: cb.n(), t: cb.t(), u: gamma.required_users(cb.t()) })
    }

    fn check_states(&self, s: &StateSequence) -> Result<(), AdversaryError> {
        if s.len() != self.n {
            return Err(AdversaryError::StateLength { got: s.len(), n: self.n });
        }
        let size = self.ch.state_count();
        if let Some(&state) = s.entries().iter().find(|&&x| x >= size) {
            return Err(AdversaryError::StateOutOfRange { state, size });
        }
        Ok(())
    }

    fn codewords(&self, tuple: &[usize]) -> Vec<&[usize]> {
        tuple.iter().enumerate().map(|(j, &m)| self.words[j][m].as_slice()).collect()
    }

    fn decode_checked(&self, decoder: &dyn Decoder, y: &[usize]) -> Result<Vec<usize>, AdversaryError> {
        let d = decoder.decode(y);
        if d.len() != self.t {
            return Err(AdversaryError::DecoderArity { got: d.len(), t: self.t });
        }
        Ok(d)
    }

    fn tuple_count(&self) -> u64 {
        checked_product(self.sizes.iter().copied()).map_or(u64::MAX, |p| p as u64)
    }
}

fn one_based(tuple: &[usize]) -> Vec<usize> {
    tuple.iter().map(|m| m + 1).collect()
}

fn exact_error_inner(setup: &Setup, decoder: &dyn Decoder, s: &StateSequence) -> Result<Rational, AdversaryError> {
    let clean = s.is_no_adversary(setup.ch.s0());
    let mut failures: u64 = 0;
    for tuple in Odometer::new(&setup.sizes) {
        let y = setup.ch.output_of(&setup.codewords(&tuple), s)?;
        let d = setup.decode_checked(decoder, &y)?;
        if !in_success_set(&d, &one_based(&tuple), clean, setup.u) {
            failures += 1;
        }
    }
    Ok(Rational::new(failures.into(), setup.tuple_count().into()))
}

/// `e_γ(s)`: the fraction of message tuples decoded outside their success set under the
/// fixed state sequence `s` (deterministic channels only).
pub fn exact_error(
    cb: &CodebookTuple,
    ch: &ChannelSpec,
    decoder: &dyn Decoder,
    s: &StateSequence,
    gamma: &Gamma,
) -> Result<Rational, AdversaryError> {
    if !ch.is_deterministic() {
        return Err(ChannelError::NotDeterministic.into());
    }
    let setup = Setup::new(cb, ch, gamma)?;
    setup.check_states(s)?;
    exact_error_inner(&setup, decoder, s)
}

/// `e_γ(s)` for every `s ∈ Sⁿ`, in odometer order.
pub fn max_error_exhaustive(
    cb: &CodebookTuple,
    ch: &ChannelSpec,
    decoder: &dyn Decoder,
    gamma: &Gamma,
    budget: u64,
) -> Result<ErrorProfile, AdversaryError> {
    if !ch.is_deterministic() {
        return Err(ChannelError::NotDeterministic.into());
    }
    let setup = Setup::new(cb, ch, gamma)?;
    let states = (ch.state_count() as u64).checked_pow(setup.n as u32);
    let needed = states.and_then(|s| s.checked_mul(setup.tuple_count()));
    match needed {
        Some(k) if k <= budget => {}
        _ => {
            return Err(AdversaryError::BudgetExceeded {
                needed: needed.map_or_else(|| "more than 2^64".into(), |k| k.to_string()),
                budget,
            })
        }
    }
    let seqs: Vec<StateSequence> = Odometer::new(&vec![ch.state_count(); setup.n]).map(StateSequence).collect();
    let entries = seqs
        .par_iter()
        .map(|s| {
            Ok(ErrorEntry {
                label: s.to_string(),
                value: ErrorValue::Exact { value: exact_error_inner(&setup, decoder, s)? },
            })
        })
        .collect::<Result<Vec<_>, AdversaryError>>()?;
    Ok(ErrorProfile::new(entries))
}

/// Adversary behaviour for Monte-Carlo evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    NoAdversary,
    Fixed(StateSequence),
    /// Every state drawn independently and uniformly per symbol.
    UniformRandom,
}

impl Strategy {
    pub fn label(&self) -> String {
        match self {
            Strategy::NoAdversary => "no-adversary".into(),
            Strategy::Fixed(s) => format!("fixed:{s}"),
            Strategy::UniformRandom => "uniform-random".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    pub trials: u64,
    pub seed: u64,
    pub confidence: f64,
}

impl MonteCarloConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        MonteCarloConfig { trials, seed, confidence: DEFAULT_CONFIDENCE }
    }
}

/// Trial `i` draws only from the stream `(seed, i)`, so results do not depend on how
/// trials are scheduled.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draws an index from a distribution given as exact rationals.
fn sample_index(dist: &[Rational], rng: &mut ChaCha8Rng) -> usize {
    let x: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in dist.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        acc += p.to_f64().unwrap_or(0.0);
        last = i;
        if x < acc {
            return i;
        }
    }
    last
}

fn transmit(
    setup: &Setup,
    codewords: &[&[usize]],
    states: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>, AdversaryError> {
    let ch = setup.ch;
    let mut x = vec![0; setup.t];
    (0..setup.n)
        .map(|k| {
            for (slot, cw) in x.iter_mut().zip(codewords) {
                *slot = cw[k];
            }
            if ch.is_deterministic() {
                Ok(ch.deterministic_output(&x, states[k])?)
            } else {
                Ok(sample_index(ch.row(&x, states[k])?, rng))
            }
        })
        .collect()
}

fn draw_tuple(sizes: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    sizes.iter().map(|&m| rng.random_range(0..m)).collect()
}

fn count_parallel<F>(trials: u64, f: F) -> Result<(u64, u64), AdversaryError>
where
    F: Fn(u64) -> Result<(bool, bool), AdversaryError> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| f(i).map(|(a, b)| (u64::from(a), u64::from(b))))
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))
}

/// Seeded Monte-Carlo estimate of the error under `strategy`; works for stochastic channels.
pub fn monte_carlo_error(
    cb: &CodebookTuple,
    ch: &ChannelSpec,
    decoder: &dyn Decoder,
    strategy: &Strategy,
    gamma: &Gamma,
    cfg: &MonteCarloConfig,
) -> Result<ErrorProfile, AdversaryError> {
    if cfg.trials == 0 {
        return Err(AdversaryError::NoTrials);
    }
    ch.ensure_valid()?;
    let setup = Setup::new(cb, ch, gamma)?;
    if let Strategy::Fixed(s) = strategy {
        setup.check_states(s)?;
    }
    let s0 = ch.s0();
    let (failures, _) = count_parallel(cfg.trials, |i| {
        let mut rng = trial_rng(cfg.seed, i);
        let tuple = draw_tuple(&setup.sizes, &mut rng);
        let states: Vec<usize> = match strategy {
            Strategy::NoAdversary => vec![s0; setup.n],
            Strategy::Fixed(s) => s.0.clone(),
            Strategy::UniformRandom => (0..setup.n).map(|_| rng.random_range(0..ch.state_count())).collect(),
        };
        let y = transmit(&setup, &setup.codewords(&tuple), &states, &mut rng)?;
        let d = setup.decode_checked(decoder, &y)?;
        let clean = states.iter().all(|&s| s == s0);
        Ok((!in_success_set(&d, &one_based(&tuple), clean, setup.u), false))
    })?;
    let est = Estimate::wilson(failures, cfg.trials, cfg.confidence)?;
    Ok(ErrorProfile::new(vec![ErrorEntry { label: strategy.label(), value: ErrorValue::Estimate(est) }]))
}

fn check_attack_witness(
    ch: &ChannelSpec,
    users: &[usize],
    w: &StateConditionalWitness,
    kind: WitnessKind,
) -> Result<(), AdversaryError> {
    let mut sorted = users.to_vec();
    sorted.sort_unstable();
    if sorted != w.users() {
        return Err(AdversaryError::InvalidWitness {
            kind,
            reason: "witness conditions on a different user set".into(),
        });
    }
    match verify_witness(ch, w, kind) {
        Ok(None) => Ok(()),
        Ok(Some(v)) => Err(AdversaryError::InvalidWitness { kind, reason: format!("violated at {v}") }),
        Err(e) => Err(AdversaryError::InvalidWitness { kind, reason: e.to_string() }),
    }
}

/// State at coordinate `k` drawn from the witness given the spoofed symbols there.
fn spoof_states(
    w: &StateConditionalWitness,
    attacked: &[usize],
    spoof_words: &[&[usize]],
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut x = vec![0; attacked.len()];
    (0..n)
        .map(|k| {
            for (slot, cw) in x.iter_mut().zip(spoof_words) {
                *slot = cw[k];
            }
            sample_index(w.distribution(&x), rng)
        })
        .collect()
}

/// Monte-Carlo symmetrization attack: the adversary picks spoof messages for `users`
/// uniformly and draws each state from the witness given the spoofed symbols.
#[allow(clippy::too_many_arguments)]
pub fn symmetrization_attack(
    ch: &ChannelSpec,
    users: &[usize],
    witness: &StateConditionalWitness,
    cb: &CodebookTuple,
    decoder: &dyn Decoder,
    gamma: &Gamma,
    cfg: &MonteCarloConfig,
) -> Result<ErrorProfile, AdversaryError> {
    if cfg.trials == 0 {
        return Err(AdversaryError::NoTrials);
    }
    check_attack_witness(ch, users, witness, WitnessKind::Symmetrizer)?;
    let setup = Setup::new(cb, ch, gamma)?;
    let attacked = witness.users().to_vec();
    let attacked_sizes: Vec<usize> = attacked.iter().map(|&j| setup.sizes[j]).collect();
    let s0 = ch.s0();
    let (failures, _) = count_parallel(cfg.trials, |i| {
        let mut rng = trial_rng(cfg.seed, i);
        let spoof = draw_tuple(&attacked_sizes, &mut rng);
        let legit = draw_tuple(&setup.sizes, &mut rng);
        let spoof_words: Vec<&[usize]> =
            attacked.iter().zip(&spoof).map(|(&j, &m)| setup.words[j][m].as_slice()).collect();
        let states = spoof_states(witness, &attacked, &spoof_words, setup.n, &mut rng);
        let y = transmit(&setup, &setup.codewords(&legit), &states, &mut rng)?;
        let d = setup.decode_checked(decoder, &y)?;
        let clean = states.iter().all(|&s| s == s0);
        Ok((!in_success_set(&d, &one_based(&legit), clean, setup.u), false))
    })?;
    let est = Estimate::wilson(failures, cfg.trials, cfg.confidence)?;
    Ok(ErrorProfile::new(vec![ErrorEntry { label: "symmetrization".into(), value: ErrorValue::Estimate(est) }]))
}

/// Exact expected error of the symmetrization attack on a deterministic channel:
/// averaged over legitimate and spoofed tuples, weighted over the witness's state
/// distributions.
pub fn symmetrization_attack_exact(
    ch: &ChannelSpec,
    users: &[usize],
    witness: &StateConditionalWitness,
    cb: &CodebookTuple,
    decoder: &dyn Decoder,
    gamma: &Gamma,
    budget: u64,
) -> Result<Rational, AdversaryError> {
    if !ch.is_deterministic() {
        return Err(ChannelError::NotDeterministic.into());
    }
    check_attack_witness(ch, users, witness, WitnessKind::Symmetrizer)?;
    let setup = Setup::new(cb, ch, gamma)?;
    let attacked = witness.users().to_vec();
    let attacked_sizes: Vec<usize> = attacked.iter().map(|&j| setup.sizes[j]).collect();
    let spoofs: Vec<Vec<usize>> = Odometer::new(&attacked_sizes).collect();
    let legits: Vec<Vec<usize>> = Odometer::new(&setup.sizes).collect();

    // Per spoof tuple, the support of the product state distribution.
    let mut supports: Vec<Vec<(Vec<usize>, Rational)>> = Vec::with_capacity(spoofs.len());
    let mut work: u64 = 0;
    for spoof in &spoofs {
        let mut per_coord: Vec<Vec<(usize, Rational)>> = Vec::with_capacity(setup.n);
        let mut x = vec![0; attacked.len()];
        for k in 0..setup.n {
            for (slot, (&j, &m)) in x.iter_mut().zip(attacked.iter().zip(spoof)) {
                *slot = setup.words[j][m][k];
            }
            per_coord.push(
                witness
                    .distribution(&x)
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(s, p)| (s, p.clone()))
                    .collect(),
            );
        }
        let radix: Vec<usize> = per_coord.iter().map(Vec::len).collect();
        let count = checked_product(radix.iter().copied()).map_or(u64::MAX, |c| c as u64);
        work = work.saturating_add(count.saturating_mul(legits.len() as u64));
        if work > budget {
            return Err(AdversaryError::BudgetExceeded { needed: format!("more than {budget}"), budget });
        }
        supports.push(
            Odometer::new(&radix)
                .map(|pick| {
                    let mut p = Rational::from_integer(1.into());
                    let states = pick
                        .iter()
                        .enumerate()
                        .map(|(k, &i)| {
                            p *= &per_coord[k][i].1;
                            per_coord[k][i].0
                        })
                        .collect();
                    (states, p)
                })
                .collect(),
        );
    }
    let s0 = ch.s0();
    let total: Rational = legits
        .par_iter()
        .map(|legit| -> Result<Rational, AdversaryError> {
            let mut acc = Rational::zero();
            let words = setup.codewords(legit);
            for support in &supports {
                for (states, p) in support {
                    let seq = StateSequence(states.clone());
                    let y = ch.output_of(&words, &seq)?;
                    let d = setup.decode_checked(decoder, &y)?;
                    if !in_success_set(&d, &one_based(legit), seq.is_no_adversary(s0), setup.u) {
                        acc += p;
                    }
                }
            }
            Ok(acc)
        })
        .try_reduce(Rational::zero, |a, b| Ok(a + b))?;
    Ok(total / Rational::from_integer(((legits.len() * spoofs.len()) as u64).into()))
}

/// Monte-Carlo overwrite attack. Reports the partial-correction error and the rate at
/// which the decoder returns the spoofed messages on every attacked user.
#[allow(clippy::too_many_arguments)]
pub fn overwrite_attack(
    ch: &ChannelSpec,
    users: &[usize],
    witness: &StateConditionalWitness,
    cb: &CodebookTuple,
    decoder: &dyn Decoder,
    gamma: &Gamma,
    cfg: &MonteCarloConfig,
) -> Result<ErrorProfile, AdversaryError> {
    if cfg.trials == 0 {
        return Err(AdversaryError::NoTrials);
    }
    check_attack_witness(ch, users, witness, WitnessKind::Overwriter)?;
    let setup = Setup::new(cb, ch, gamma)?;
    let attacked = witness.users().to_vec();
    let attacked_sizes: Vec<usize> = attacked.iter().map(|&j| setup.sizes[j]).collect();
    let s0 = ch.s0();
    let (failures, impersonated) = count_parallel(cfg.trials, |i| {
        let mut rng = trial_rng(cfg.seed, i);
        let spoof = draw_tuple(&attacked_sizes, &mut rng);
        let legit = draw_tuple(&setup.sizes, &mut rng);
        let spoof_words: Vec<&[usize]> =
            attacked.iter().zip(&spoof).map(|(&j, &m)| setup.words[j][m].as_slice()).collect();
        let states = spoof_states(witness, &attacked, &spoof_words, setup.n, &mut rng);
        let y = transmit(&setup, &setup.codewords(&legit), &states, &mut rng)?;
        let d = setup.decode_checked(decoder, &y)?;
        let clean = states.iter().all(|&s| s == s0);
        let fooled = attacked.iter().zip(&spoof).all(|(&j, &m)| d[j] == m + 1);
        Ok((!in_success_set(&d, &one_based(&legit), clean, setup.u), fooled))
    })?;
    let est = Estimate::wilson(failures, cfg.trials, cfg.confidence)?;
    let mut profile =
        ErrorProfile::new(vec![ErrorEntry { label: "overwrite".into(), value: ErrorValue::Estimate(est) }]);
    profile.impersonation = Some(Estimate::wilson(impersonated, cfg.trials, cfg.confidence)?);
    Ok(profile)
}

/// Text form of an error value: `p/q` when exact, `mean ± radius` otherwise.
pub fn describe(value: &ErrorValue) -> String {
    match value {
        ErrorValue::Exact { value } => format_rational(value),
        ErrorValue::Estimate(e) => format!("{:.6} ± {:.6} ({}/{})", e.mean, e.radius, e.failures, e.trials),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::make_adder_channel;
    use crate::decoder::CanonicalDecoder;
    use crate::feasibility::find_overwriter;
    use crate::rational::rational;

    fn triple(c3: [&str; 2]) -> CodebookTuple {
        CodebookTuple::from_strs(&[&["011010", "100101"], &["010110", "101001"], &c3]).unwrap()
    }

    fn g(s: &str) -> Gamma {
        s.parse().unwrap()
    }

    fn seq(s: &str) -> StateSequence {
        StateSequence(s.bytes().map(|b| usize::from(b - b'0')).collect())
    }

    #[test]
    fn success_sets() {
        assert!(in_success_set(&[1, 2], &[1, 2], true, 1));
        assert!(!in_success_set(&[1, 0], &[1, 2], true, 1));
        assert!(in_success_set(&[1, 0], &[1, 2], false, 1));
        assert!(!in_success_set(&[1, 0], &[1, 2], false, 2));
        assert!(!in_success_set(&[2, 0], &[1, 2], false, 1));
    }

    #[test]
    fn good_triple_has_zero_error_everywhere() {
        let cb = triple(["001101", "110010"]);
        let ch = make_adder_channel(3, 1).unwrap();
        let dec = CanonicalDecoder::new_unchecked(&cb, 1);
        let p = max_error_exhaustive(&cb, &ch, &dec, &g("2/3"), DEFAULT_EVAL_BUDGET).unwrap();
        assert_eq!(p.entries.len(), 64);
        assert_eq!(p.max_value().unwrap().exact(), Some(&Rational::zero()));
    }

    #[test]
    fn condition3_triple_errs_at_witness() {
        let cb = triple(["010101", "101010"]);
        let ch = make_adder_channel(3, 1).unwrap();
        let dec = CanonicalDecoder::new_unchecked(&cb, 1);
        let e = exact_error(&cb, &ch, &dec, &seq("011001"), &g("2/3")).unwrap();
        assert!(e >= rational(1, 8), "{e}");
    }

    #[test]
    fn exhaustive_budget() {
        let cb = triple(["001101", "110010"]);
        let ch = make_adder_channel(3, 1).unwrap();
        let dec = CanonicalDecoder::new_unchecked(&cb, 1);
        assert!(matches!(
            max_error_exhaustive(&cb, &ch, &dec, &g("2/3"), 100),
            Err(AdversaryError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn monte_carlo_is_reproducible_and_zero_for_good_triple() {
        let cb = triple(["001101", "110010"]);
        let ch = make_adder_channel(3, 1).unwrap();
        let dec = CanonicalDecoder::new_unchecked(&cb, 1);
        let cfg = MonteCarloConfig::new(2000, 7);
        let a = monte_carlo_error(&cb, &ch, &dec, &Strategy::UniformRandom, &g("2/3"), &cfg).unwrap();
        let b = monte_carlo_error(&cb, &ch, &dec, &Strategy::UniformRandom, &g("2/3"), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.max_value().unwrap().as_f64(), 0.0);
    }

    #[test]
    fn symmetrization_attack_on_adder() {
        let ch = make_adder_channel(3, 2).unwrap();
        let cb = triple(["001101", "110010"]);
        let dec = CanonicalDecoder::new_unchecked(&cb, 2);
        let w = StateConditionalWitness::point_mass(&ch, &[0, 1], |x| x.iter().sum()).unwrap();
        let exact = symmetrization_attack_exact(&ch, &[0, 1], &w, &cb, &dec, &g("2/3"), DEFAULT_EVAL_BUDGET).unwrap();
        assert!(exact >= rational(1, 4), "{exact}");
        let mc =
            symmetrization_attack(&ch, &[0, 1], &w, &cb, &dec, &g("2/3"), &MonteCarloConfig::new(4000, 1)).unwrap();
        let est = mc.max_value().unwrap().as_f64();
        assert!((est - exact.to_f64().unwrap()).abs() < 0.05);
    }

    #[test]
    fn single_user_attack_is_harmless_for_verified_tuple() {
        let ch = make_adder_channel(3, 1).unwrap();
        let cb = triple(["001101", "110010"]);
        let dec = CanonicalDecoder::new_unchecked(&cb, 1);
        let w = StateConditionalWitness::point_mass(&ch, &[1], |x| x[0]).unwrap();
        let exact = symmetrization_attack_exact(&ch, &[1], &w, &cb, &dec, &g("2/3"), DEFAULT_EVAL_BUDGET).unwrap();
        assert_eq!(exact, Rational::zero());
    }

    #[test]
    fn invalid_witness_is_rejected() {
        let ch = make_adder_channel(3, 2).unwrap();
        let cb = triple(["001101", "110010"]);
        let dec = CanonicalDecoder::new_unchecked(&cb, 2);
        let w = StateConditionalWitness::point_mass(&ch, &[0, 1], |_| 0).unwrap();
        assert!(matches!(
            symmetrization_attack(&ch, &[0, 1], &w, &cb, &dec, &g("2/3"), &MonteCarloConfig::new(10, 1)),
            Err(AdversaryError::InvalidWitness { .. })
        ));
        assert!(matches!(
            overwrite_attack(&ch, &[0, 1], &w, &cb, &dec, &g("2/3"), &MonteCarloConfig::new(10, 1)),
            Err(AdversaryError::InvalidWitness { .. })
        ));
        assert_eq!(find_overwriter(&ch, &[0, 1]).unwrap(), None);
    }

    #[test]
    fn overwrite_on_input_ignoring_channel() {
        // Output equals the state; s0 = 0. Clean outputs are constant, so the point mass
        // on s0 overwrites any subset.
        let ch = ChannelSpec::deterministic_from_fn(vec![2, 2], 2, 2, 0, |_, s| s).unwrap();
        let w = StateConditionalWitness::point_mass(&ch, &[0], |_| 0).unwrap();
        let cb = CodebookTuple::from_strs(&[&["01", "10", "11", "00"], &["01", "10"]]).unwrap();
        let constant = |_: &[usize]| vec![1, 1];
        let p = overwrite_attack(&ch, &[0], &w, &cb, &constant, &g("1/2"), &MonteCarloConfig::new(20000, 3)).unwrap();
        let imp = p.impersonation.unwrap();
        assert!((imp.mean - 0.25).abs() <= 2.0 * imp.radius, "{imp:?}");
    }
}
