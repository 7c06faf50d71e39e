//! Fixtures and brute-force oracles shared by the integration tests. The oracles work
//! straight from the definitions and never call into the library's decision code.

#![allow(dead_code)]

use std::collections::HashMap;

use avmac_core::CodebookTuple;

pub fn tuple(books: &[&[&str]]) -> CodebookTuple {
    CodebookTuple::from_strs(books).expect("well-formed fixture")
}

pub fn bits(s: &str) -> Vec<u8> {
    s.bytes().map(|b| b - b'0').collect()
}

pub fn pair() -> CodebookTuple {
    tuple(&[&["011", "100"], &["010", "101"]])
}

pub fn good_triple() -> CodebookTuple {
    tuple(&[&["011010", "100101"], &["010110", "101001"], &["001101", "110010"]])
}

/// Fails the difference condition: 222231 − 211221 = 011010.
pub fn bad_difference() -> CodebookTuple {
    tuple(&[&["100110", "110110"], &["111010", "100101"], &["011111", "001010"]])
}

/// Fails the agreement condition: 211221 + 011001 = 122112 + 100110.
pub fn bad_collision() -> CodebookTuple {
    tuple(&[&["011010", "100101"], &["010110", "101001"], &["010101", "101010"]])
}

pub fn ceil_ratio(num: usize, den: usize, t: usize) -> usize {
    (num * t).div_ceil(den)
}

/// Every vector in `{0,…,base−1}^len`, last coordinate fastest.
pub fn all_vectors(base: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..base).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

pub fn message_tuples(cb: &CodebookTuple) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for m in cb.sizes() {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..m).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

/// `y = s + Σ xⱼ` on the adder channel.
pub fn adder_output(cb: &CodebookTuple, tuple: &[usize], s: &[usize]) -> Vec<usize> {
    (0..cb.n())
        .map(|k| s[k] + tuple.iter().enumerate().map(|(j, &m)| usize::from(cb.codebooks()[j][m][k])).sum::<usize>())
        .collect()
}

/// Success set membership for 1-based estimates (0 = discarded) against 0-based truth.
pub fn succeeds(estimate: &[usize], truth: &[usize], clean: bool, u: usize) -> bool {
    if clean {
        return estimate.iter().zip(truth).all(|(&d, &m)| d == m + 1);
    }
    let kept = estimate.iter().filter(|&&d| d != 0).count();
    kept >= u && estimate.iter().zip(truth).all(|(&d, &m)| d == 0 || d == m + 1)
}

/// Whether any decoder at all is zero-error: for every output, some estimate must lie in
/// the success set of every (tuple, state) pair producing it.
pub fn zero_error_achievable(cb: &CodebookTuple, ell: usize, u: usize) -> bool {
    let mut by_output: HashMap<Vec<usize>, Vec<(Vec<usize>, bool)>> = HashMap::new();
    let states = all_vectors(ell + 1, cb.n());
    for m in message_tuples(cb) {
        for s in &states {
            let clean = s.iter().all(|&x| x == 0);
            by_output.entry(adder_output(cb, &m, s)).or_default().push((m.clone(), clean));
        }
    }
    let estimates: Vec<Vec<usize>> = {
        let mut out = vec![Vec::new()];
        for m in cb.sizes() {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..=m).map(move |x| {
                        let mut w = v.clone();
                        w.push(x);
                        w
                    })
                })
                .collect();
        }
        out
    };
    by_output
        .values()
        .all(|sources| estimates.iter().any(|d| sources.iter().all(|(m, clean)| succeeds(d, m, *clean, u))))
}

/// `e(s)` for an arbitrary decoder, recomputed from scratch.
pub fn error_under(
    cb: &CodebookTuple,
    u: usize,
    s: &[usize],
    decode: &dyn Fn(&[usize]) -> Vec<usize>,
) -> (usize, usize) {
    let clean = s.iter().all(|&x| x == 0);
    let tuples = message_tuples(cb);
    let failures = tuples.iter().filter(|m| !succeeds(&decode(&adder_output(cb, m, s)), m, clean, u)).count();
    (failures, tuples.len())
}

/// Worst-case erasure count over all count vectors an adversary erasing at most
/// `t − u` users per instance can realise in `r` instances.
pub fn worst_case_brute(t: usize, u: usize, r: usize) -> usize {
    all_vectors(r + 1, t)
        .into_iter()
        .filter(|c| c.iter().sum::<usize>() <= r * (t - u))
        .map(|mut c| {
            c.sort_unstable();
            c[u - 1]
        })
        .max()
        .unwrap_or(0)
}

/// Whether the unerased positions single out `word` within `code`.
pub fn recoverable(code: &[Vec<usize>], word: &[usize], erased: &[bool]) -> bool {
    code.iter().filter(|c| c.iter().zip(word).zip(erased).all(|((a, b), &e)| e || a == b)).count() == 1
}

pub fn hamming(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

pub fn outer(words: &[&str]) -> Vec<Vec<usize>> {
    words.iter().map(|w| w.bytes().map(|b| usize::from(b - b'0')).collect()).collect()
}

/// All size-`m` subsets of `{0,1}^n` as codebooks, in lexicographic order.
pub fn all_codebooks(n: usize, m: usize) -> Vec<Vec<Vec<u8>>> {
    let words: Vec<Vec<u8>> = all_vectors(2, n).into_iter().map(|v| v.into_iter().map(|x| x as u8).collect()).collect();
    itertools::Itertools::combinations(words.into_iter(), m).collect()
}
