mod common;

use std::collections::BTreeSet;

use avmac_core::search::{enumerate_antichain_codebooks, search, Filter, SearchSpec};
use avmac_core::verifier::{is_zero_error, VerifierConfig};
use avmac_core::{CodebookTuple, Gamma};
use common::*;
use itertools::Itertools;

fn gamma(s: &str) -> Gamma {
    s.parse().unwrap()
}

/// Least image under coordinate permutations and swaps of equally sized users, with
/// each codebook sorted.
fn orbit_key(books: &[Vec<Vec<u8>>]) -> Vec<Vec<Vec<u8>>> {
    let n = books[0][0].len();
    let t = books.len();
    let mut best: Option<Vec<Vec<Vec<u8>>>> = None;
    for cols in (0..n).permutations(n) {
        for users in (0..t).permutations(t) {
            if users.iter().enumerate().any(|(i, &j)| books[i].len() != books[j].len()) {
                continue;
            }
            let key: Vec<Vec<Vec<u8>>> = users
                .iter()
                .map(|&j| {
                    let mut b: Vec<Vec<u8>> = books[j].iter().map(|w| cols.iter().map(|&k| w[k]).collect()).collect();
                    b.sort();
                    b
                })
                .collect();
            if best.as_ref().is_none_or(|b| key < *b) {
                best = Some(key);
            }
        }
    }
    best.unwrap()
}

fn brute_verified(n: usize, sizes: &[usize], ell: usize, g: &Gamma) -> Vec<CodebookTuple> {
    sizes
        .iter()
        .map(|&m| all_codebooks(n, m))
        .multi_cartesian_product()
        .map(|books| CodebookTuple::new(books).unwrap())
        .filter(|cb| is_zero_error(cb, ell, g, &VerifierConfig::default()).unwrap())
        .collect()
}

#[test]
fn filters_never_reject_zero_error_tuples() {
    let cases: [(usize, &[usize]); 5] = [(2, &[2, 2]), (3, &[2, 2]), (4, &[2, 2]), (3, &[2, 3]), (3, &[3, 3])];
    for (n, sizes) in cases {
        for g in ["1/2", "2/3"] {
            let g = gamma(g);
            let mut rejected = [0usize; 6];
            for books in sizes.iter().map(|&m| all_codebooks(n, m)).multi_cartesian_product() {
                let cb = CodebookTuple::new(books).unwrap();
                let ok = is_zero_error(&cb, 1, &g, &VerifierConfig::default()).unwrap();
                for (i, f) in Filter::ALL.into_iter().enumerate() {
                    if !f.passes(&cb, 1, &g) {
                        assert!(!ok, "{f:?} rejects zero-error {cb} at {g}");
                        rejected[i] += 1;
                    }
                }
            }
            // Each filter must actually prune something on these shapes.
            assert!(rejected[0] > 0 && rejected[3] > 0, "n={n} {sizes:?}: {rejected:?}");
        }
    }
}

#[test]
fn antichain_enumeration_matches_brute_force() {
    for n in 1..=4 {
        for m in 1..=6 {
            let brute: Vec<Vec<Vec<u8>>> = all_codebooks(n, m)
                .into_iter()
                .filter(|b| b.iter().array_combinations().all(|[a, c]| !leq(a, c) && !leq(c, a)))
                .collect();
            let listed: Vec<Vec<Vec<u8>>> = match enumerate_antichain_codebooks(n, m) {
                Ok(it) => it.collect(),
                Err(_) => Vec::new(),
            };
            assert_eq!(listed, brute, "n={n} m={m}");
        }
    }
}

fn leq(a: &[u8], b: &[u8]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

#[test]
fn search_finds_every_orbit() {
    let cases: [(usize, &[usize], &str, usize); 6] = [
        (3, &[2, 2], "1/2", 1),
        (4, &[2, 2], "1/2", 1),
        (4, &[2, 2], "1/2", 2),
        (4, &[2, 3], "1/2", 1),
        (3, &[2, 2, 2], "1/3", 1),
        (3, &[1, 2, 2], "2/3", 1),
    ];
    for (n, sizes, g, ell) in cases {
        let g = gamma(g);
        let brute = brute_verified(n, sizes, ell, &g);
        let expected: BTreeSet<_> = brute.iter().map(|cb| orbit_key(cb.codebooks())).collect();

        let outcome = search(&SearchSpec::new(n, ell, g.clone(), sizes.to_vec())).unwrap();
        assert!(!outcome.budget_exhausted && !outcome.stopped_early);
        let keys: Vec<_> = outcome.results.iter().map(|cb| orbit_key(cb.codebooks())).collect();
        let found: BTreeSet<_> = keys.iter().cloned().collect();
        assert_eq!(found.len(), keys.len(), "n={n} {sizes:?}: duplicate orbit in results");
        assert_eq!(found, expected, "n={n} {sizes:?} l={ell}");

        let mut plain = SearchSpec::new(n, ell, g.clone(), sizes.to_vec());
        plain.symmetry_reduction = false;
        let outcome = search(&plain).unwrap();
        let as_sets = |cb: &CodebookTuple| -> Vec<Vec<Vec<u8>>> {
            cb.codebooks().iter().map(|b| b.iter().cloned().sorted().collect()).collect()
        };
        let listed: BTreeSet<_> = outcome.results.iter().map(as_sets).collect();
        let brute_sets: BTreeSet<_> = brute.iter().map(as_sets).collect();
        assert_eq!(listed.len(), outcome.results.len());
        assert_eq!(listed, brute_sets, "n={n} {sizes:?} without symmetry reduction");
    }
}

#[test]
fn search_recovers_the_two_user_example() {
    let outcome = search(&SearchSpec::new(3, 1, gamma("1/2"), vec![2, 2])).unwrap();
    let target = orbit_key(pair().codebooks());
    assert!(outcome.results.iter().any(|cb| orbit_key(cb.codebooks()) == target));
    let empty = search(&SearchSpec::new(1, 1, gamma("1/2"), vec![2, 2])).unwrap();
    assert!(empty.results.is_empty());
}

#[test]
fn search_is_deterministic_and_truncates_cleanly() {
    let spec = SearchSpec::new(4, 1, gamma("1/2"), vec![2, 2]);
    let a = search(&spec).unwrap();
    let b = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap().install(|| search(&spec).unwrap());
    assert_eq!(a.results, b.results);
    assert_eq!(a.stats, b.stats);

    let mut stop = spec.clone();
    stop.stop_after = Some(2);
    let s = search(&stop).unwrap();
    assert!(s.stopped_early);
    assert_eq!(s.results, a.results[..2]);

    let mut tight = spec;
    tight.budget = 3;
    let t = search(&tight).unwrap();
    assert!(t.budget_exhausted);
    assert!(t.results.len() < a.results.len());
}

/// The largest example: all (2,2,2) triples of length 6 over W+(3,1) at γ = 2/3.
#[test]
fn search_finds_the_good_triple_orbit() {
    let outcome = search(&SearchSpec::new(6, 1, gamma("2/3"), vec![2, 2, 2])).unwrap();
    assert!(!outcome.budget_exhausted);
    // Codeword weights are orbit invariants; only matching tuples need the full key.
    let weights = |cb: &CodebookTuple| -> Vec<Vec<usize>> {
        let mut w: Vec<Vec<usize>> = cb
            .codebooks()
            .iter()
            .map(|b| b.iter().map(|x| x.iter().map(|&v| usize::from(v)).sum()).sorted().collect())
            .collect();
        w.sort();
        w
    };
    let good = good_triple();
    let (target, signature) = (orbit_key(good.codebooks()), weights(&good));
    assert!(outcome.results.iter().any(|cb| weights(cb) == signature && orbit_key(cb.codebooks()) == target));
    for cb in outcome.results.iter().step_by(997) {
        assert!(is_zero_error(cb, 1, &gamma("2/3"), &VerifierConfig::default()).unwrap());
    }
}
