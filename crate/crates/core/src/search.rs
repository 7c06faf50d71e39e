//! Exhaustive search for zero-error partially correcting tuples over the adder channel.
//!
//! Candidates are built user by user from antichain codebooks. Prefixes of the first
//! `t − 1` users are pruned by conditions (1) and (2), which can only get worse as users
//! are added. Each surviving prefix is a work unit whose leaves (choices of the last
//! codebook) go through the remaining filters in order of cost.

use std::collections::{HashMap, HashSet};

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::codebook::{CodebookTuple, Codeword};
use crate::rational::Gamma;
use crate::structure::{check_antichain, check_union_structure, max_antichain_size, sperner_bound};
use crate::util::{binomial, Odometer};
use crate::verifier::{is_zero_error, VerifierConfig, VerifyError};

/// Longest block length the search accepts.
pub const MAX_SEARCH_N: usize = 16;
pub const DEFAULT_SEARCH_BUDGET: u64 = 200_000_000;
const CHUNK_UNITS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("block length must be at least 1")]
    ZeroLength,
    #[error("block length {0} exceeds the search limit {MAX_SEARCH_N}")]
    TooLong(usize),
    #[error("codebook size must be at least 1")]
    ZeroSize,
    #[error("antichain of size {size} does not exist in {{0,1}}^{n} (maximum {max})")]
    AntichainTooLarge { n: usize, size: usize, max: u64 },
    #[error("need at least two users, got {0}")]
    TooFewUsers(usize),
    #[error("ell must be at least 1")]
    InvalidEll,
    #[error("budget must be positive")]
    ZeroBudget,
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

/// Lazy enumeration of size-`size` antichains in `{0,1}ⁿ`.
///
/// Vectors are ordered as binary strings; each antichain is listed once as an ascending
/// list, and antichains come in lexicographic order of those lists.
pub struct AntichainIter {
    n: usize,
    size: usize,
    stack: Vec<u32>,
    started: bool,
    done: bool,
}

pub fn enumerate_antichain_codebooks(n: usize, size: usize) -> Result<AntichainIter, SearchError> {
    if n == 0 {
        return Err(SearchError::ZeroLength);
    }
    if n > MAX_SEARCH_N {
        return Err(SearchError::TooLong(n));
    }
    if size == 0 {
        return Err(SearchError::ZeroSize);
    }
    let max = max_antichain_size(n).unwrap_or(u64::MAX);
    if size as u64 > max {
        return Err(SearchError::AntichainTooLarge { n, size, max });
    }
    Ok(AntichainIter { n, size, stack: Vec::with_capacity(size), started: false, done: false })
}

fn comparable(a: u32, b: u32) -> bool {
    a & b == a || a & b == b
}

fn mask_to_codeword(mask: u32, n: usize) -> Codeword {
    (0..n).map(|k| ((mask >> (n - 1 - k)) & 1) as u8).collect()
}

impl AntichainIter {
    fn fill(&mut self, mut start: u32) -> bool {
        let limit = 1u32 << self.n;
        loop {
            if self.stack.len() == self.size {
                return true;
            }
            let need = (self.size - self.stack.len()) as u32;
            let next = (start..limit)
                .take_while(|&c| limit - c >= need)
                .find(|&c| self.stack.iter().all(|&s| !comparable(s, c)));
            match next {
                Some(c) => {
                    self.stack.push(c);
                    start = c + 1;
                }
                None => match self.stack.pop() {
                    Some(p) => start = p + 1,
                    None => return false,
                },
            }
        }
    }
}

impl Iterator for AntichainIter {
    type Item = Vec<Codeword>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let found = if !self.started {
            self.started = true;
            self.fill(0)
        } else {
            let last = self.stack.pop().expect("non-empty after a hit");
            self.fill(last + 1)
        };
        if !found {
            self.done = true;
            return None;
        }
        Some(self.stack.iter().map(|&m| mask_to_codeword(m, self.n)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchSpec {
    pub t: usize,
    pub n: usize,
    pub ell: usize,
    pub gamma: Gamma,
    pub sizes: Vec<usize>,
    pub symmetry_reduction: bool,
    /// Maximum number of candidates (prefixes plus complete tuples) examined.
    pub budget: u64,
    pub stop_after: Option<usize>,
}

impl SearchSpec {
    pub fn new(n: usize, ell: usize, gamma: Gamma, sizes: Vec<usize>) -> Self {
        SearchSpec {
            t: sizes.len(),
            n,
            ell,
            gamma,
            sizes,
            symmetry_reduction: true,
            budget: DEFAULT_SEARCH_BUDGET,
            stop_after: None,
        }
    }

    fn validate(&self) -> Result<(), SearchError> {
        if self.t < 2 || self.sizes.len() != self.t {
            return Err(SearchError::TooFewUsers(self.sizes.len()));
        }
        if self.n == 0 {
            return Err(SearchError::ZeroLength);
        }
        if self.n > MAX_SEARCH_N {
            return Err(SearchError::TooLong(self.n));
        }
        if self.sizes.contains(&0) {
            return Err(SearchError::ZeroSize);
        }
        if self.ell == 0 {
            return Err(SearchError::InvalidEll);
        }
        if self.budget == 0 {
            return Err(SearchError::ZeroBudget);
        }
        Ok(())
    }
}

/// Individual pruning filters, exposed so their soundness can be tested in isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Filter {
    Antichain,
    UnionStructure,
    Sperner,
    Condition1,
    Condition2,
    Condition3Fast,
}

impl Filter {
    pub const ALL: [Filter; 6] = [
        Filter::Antichain,
        Filter::UnionStructure,
        Filter::Sperner,
        Filter::Condition1,
        Filter::Condition2,
        Filter::Condition3Fast,
    ];

    /// `true` if the tuple survives this filter. Filters that do not apply to the tuple's
    /// shape (the two-user structure filters for `t ≠ 2`) always pass.
    pub fn passes(self, cb: &CodebookTuple, ell: usize, gamma: &Gamma) -> bool {
        match self {
            Filter::Antichain => cb.codebooks().iter().all(|c| check_antichain(c).is_none()),
            Filter::UnionStructure => {
                cb.t() != 2
                    || cb.sizes().contains(&1)
                    || matches!(check_union_structure(cb.codebook(0), cb.codebook(1)), Ok(None))
            }
            Filter::Sperner => {
                cb.t() != 2 || sperner_bound(cb.n()).is_ok_and(|b| (cb.sizes().iter().sum::<usize>() as u64) <= b)
            }
            Filter::Condition1 => crate::verifier::check_condition1(cb, ell).is_none(),
            Filter::Condition2 => crate::verifier::check_condition2(cb).is_none(),
            Filter::Condition3Fast => crate::verifier::scan_condition3_fast(cb, ell, gamma).is_empty(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PruneCounts {
    pub union_structure: u64,
    pub sperner: u64,
    pub condition1: u64,
    pub condition2: u64,
    pub condition3_fast: u64,
    pub condition3: u64,
}

impl PruneCounts {
    fn add(&mut self, o: &PruneCounts) {
        self.union_structure += o.union_structure;
        self.sperner += o.sperner;
        self.condition1 += o.condition1;
        self.condition2 += o.condition2;
        self.condition3_fast += o.condition3_fast;
        self.condition3 += o.condition3;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// Antichain codebooks available per user (after the canonical restriction on user 1).
    pub codebooks_per_user: Vec<u64>,
    /// Size-`Mⱼ` subsets of `{0,1}ⁿ` rejected by the antichain filter, per user
    /// (`None` when the count overflows).
    pub antichain_rejected: Vec<Option<u64>>,
    pub prefixes_generated: u64,
    pub prefixes_pruned: PruneCounts,
    pub candidates_generated: u64,
    pub pruned: PruneCounts,
    pub verified: u64,
    pub duplicates: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    pub spec: SearchSpec,
    pub results: Vec<CodebookTuple>,
    pub stats: SearchStats,
    /// True when the budget ran out before the space was exhausted.
    pub budget_exhausted: bool,
    /// True when `stop_after` truncated the search.
    pub stopped_early: bool,
}

fn column_sorted(rows: &[&[u8]], n: usize) -> Vec<Codeword> {
    let mut cols: Vec<Vec<u8>> = (0..n).map(|k| rows.iter().map(|r| r[k]).collect()).collect();
    cols.sort_unstable();
    (0..rows.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
}

/// Every admissible order of the flattened codewords: users of equal size may swap
/// slots and codewords may be reordered within each codebook.
fn admissible_orders(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (j, &m) in sizes.iter().enumerate() {
        match groups.iter_mut().find(|g| sizes[g[0]] == m) {
            Some(g) => g.push(j),
            None => groups.push(vec![j]),
        }
    }
    let offsets: Vec<usize> = sizes.iter().scan(0, |acc, &m| Some(std::mem::replace(acc, *acc + m))).collect();
    let user_orders: Vec<Vec<Vec<usize>>> =
        groups.iter().map(|g| g.iter().copied().permutations(g.len()).collect()).collect();
    let row_orders: Vec<Vec<Vec<usize>>> = sizes.iter().map(|&m| (0..m).permutations(m).collect()).collect();
    let mut orders = Vec::new();
    let mut assign = vec![0; sizes.len()];
    for uc in Odometer::new(&user_orders.iter().map(Vec::len).collect::<Vec<_>>()) {
        // slot `s` of the arrangement is filled by user `assign[s]`
        for (g, (group, &choice)) in groups.iter().zip(&uc).enumerate() {
            for (&slot, &user) in group.iter().zip(&user_orders[g][choice]) {
                assign[slot] = user;
            }
        }
        for rc in Odometer::new(&assign.iter().map(|&u| row_orders[u].len()).collect::<Vec<_>>()) {
            orders.push(
                assign
                    .iter()
                    .zip(&rc)
                    .flat_map(|(&u, &c)| {
                        let base = offsets[u];
                        row_orders[u][c].iter().map(move |&i| base + i)
                    })
                    .collect(),
            );
        }
    }
    orders
}

fn canonical_books(books: &[Vec<Codeword>], n: usize) -> Vec<Vec<Codeword>> {
    let sizes: Vec<usize> = books.iter().map(Vec::len).collect();
    let flat: Vec<&[u8]> = books.iter().flatten().map(Vec::as_slice).collect();
    let best = admissible_orders(&sizes)
        .into_iter()
        .map(|order| column_sorted(&order.iter().map(|&i| flat[i]).collect::<Vec<_>>(), n))
        .min()
        .unwrap_or_default();
    let mut rows = best.into_iter();
    sizes.iter().map(|&m| rows.by_ref().take(m).collect()).collect()
}

/// Complete orbit invariant used for deduplication: the least sorted multiset of
/// columns over admissible codeword orders, packed into integers when it fits.
#[derive(Clone, PartialEq, Eq, Hash)]
enum OrbitKey {
    Columns(Vec<u128>),
    Canonical(Vec<Vec<Codeword>>),
}

struct OrbitKeyer {
    orders: Vec<Vec<usize>>,
    packed: bool,
    n: usize,
}

impl OrbitKeyer {
    fn new(sizes: &[usize], n: usize) -> Self {
        let packed = sizes.iter().sum::<usize>() <= 128;
        let orders = if packed { admissible_orders(sizes) } else { Vec::new() };
        OrbitKeyer { orders, packed, n }
    }

    fn key(&self, books: &[Vec<Codeword>]) -> OrbitKey {
        if !self.packed {
            return OrbitKey::Canonical(canonical_books(books, self.n));
        }
        let flat: Vec<&[u8]> = books.iter().flatten().map(Vec::as_slice).collect();
        let mut best = [u128::MAX; MAX_SEARCH_N];
        let mut cols = [0u128; MAX_SEARCH_N];
        for order in &self.orders {
            for (k, col) in cols[..self.n].iter_mut().enumerate() {
                *col = order.iter().fold(0, |acc, &i| (acc << 1) | u128::from(flat[i][k]));
            }
            cols[..self.n].sort_unstable();
            if cols[..self.n] < best[..self.n] {
                best = cols;
            }
        }
        OrbitKey::Columns(best[..self.n].to_vec())
    }
}

/// Canonical representative of the orbit of `cb` under coordinate permutations,
/// message relabelings and relabelings of users with equal codebook sizes.
///
/// For a fixed order of all codewords, sorting the columns ascending yields the
/// lexicographically least arrangement, so the orbit minimum is the least such
/// arrangement over admissible codeword orders.
pub fn canonical_form(cb: &CodebookTuple) -> Vec<Vec<Codeword>> {
    canonical_books(cb.codebooks(), cb.n())
}

type Row = [u8; MAX_SEARCH_N];

struct Book {
    words: Vec<Codeword>,
    rows: Vec<Row>,
    /// Rank of this codebook's orbit under coordinate permutations (symmetry mode).
    orbit: usize,
}

fn to_row(c: &[u8]) -> Row {
    let mut r = [0u8; MAX_SEARCH_N];
    r[..c.len()].copy_from_slice(c);
    r
}

fn antichain_books(n: usize, size: usize) -> Vec<Book> {
    match enumerate_antichain_codebooks(n, size) {
        Ok(it) => it
            .map(|words| {
                let rows = words.iter().map(|w| to_row(w)).collect();
                Book { words, rows, orbit: 0 }
            })
            .collect(),
        Err(_) => Vec::new(),
    }
}

fn assign_orbits(books: &mut [Book], n: usize) {
    let canon: Vec<Vec<Codeword>> =
        books.iter().map(|b| canonical_books(std::slice::from_ref(&b.words), n).remove(0)).collect();
    let mut distinct = canon.clone();
    distinct.sort();
    distinct.dedup();
    for (b, c) in books.iter_mut().zip(&canon) {
        b.orbit = distinct.binary_search(c).expect("present");
    }
}

/// Sums for every tuple of `prefix × book`, last user fastest.
fn extend_sums(prefix: &[Row], book: &[Row], n: usize, out: &mut Vec<Row>) {
    out.clear();
    for p in prefix {
        for b in book {
            let mut s = *p;
            for k in 0..n {
                s[k] += b[k];
            }
            out.push(s);
        }
    }
}

fn condition1_violated(sums: &[Row], n: usize, ell: u8) -> bool {
    sums.iter().any(|a| sums.iter().any(|b| a[..n] != b[..n] && (0..n).all(|k| a[k] >= b[k] && a[k] - b[k] <= ell)))
}

fn condition2_violated(sums: &[Row], n: usize) -> bool {
    sums.iter().enumerate().any(|(i, a)| sums[i + 1..].iter().any(|b| a[..n] == b[..n]))
}

fn condition3_fast_violated(sums: &[Row], pairs: &[(usize, usize)], n: usize, ell: u8) -> bool {
    pairs.iter().any(|&(i, j)| {
        let (a, b) = (&sums[i], &sums[j]);
        if (0..n).any(|k| a[k].abs_diff(b[k]) > ell) {
            return false;
        }
        let a_lower = (0..n).any(|k| a[k] < b[k]);
        let b_lower = (0..n).any(|k| b[k] < a[k]);
        // Both states nonzero as they stand, or liftable by one unit where there is headroom.
        (a_lower && b_lower) || (0..n).any(|k| a[k].abs_diff(b[k]) < ell)
    })
}

/// Exact condition (3). A repeated output of `A₁` needs two distinct tuples whose sums
/// are within `ℓ` of each other coordinatewise, so scanning the common reachable box of
/// every such pair finds all of them.
fn condition3_violated(sums: &[Row], tuples: &[Vec<usize>], n: usize, ell: u8, u: usize) -> bool {
    let t = tuples.first().map_or(0, Vec::len);
    for (i, a) in sums.iter().enumerate() {
        for b in &sums[i + 1..] {
            if (0..n).any(|k| a[k].abs_diff(b[k]) > ell) {
                continue;
            }
            let mut lo = [0u8; MAX_SEARCH_N];
            let mut hi = [0u8; MAX_SEARCH_N];
            for k in 0..n {
                lo[k] = a[k].max(b[k]);
                hi[k] = a[k].min(b[k]) + ell;
            }
            let mut w = lo;
            'boxed: loop {
                if w[..n] != a[..n] && w[..n] != b[..n] {
                    let mut agree = vec![true; t];
                    for (m, c) in sums.iter().enumerate() {
                        if w[..n] != c[..n] && (0..n).all(|k| w[k] >= c[k] && w[k] - c[k] <= ell) {
                            for (j, flag) in agree.iter_mut().enumerate() {
                                *flag &= tuples[m][j] == tuples[i][j];
                            }
                        }
                    }
                    if agree.iter().filter(|&&f| f).count() < u {
                        return true;
                    }
                }
                let mut k = n;
                loop {
                    if k == 0 {
                        break 'boxed;
                    }
                    k -= 1;
                    if w[k] < hi[k] {
                        w[k] += 1;
                        break;
                    }
                    w[k] = lo[k];
                }
            }
        }
    }
    false
}

struct Unit {
    choice: Vec<usize>,
    sums: Vec<Row>,
}

#[derive(Default)]
struct UnitOutcome {
    found: Vec<(CodebookTuple, Option<OrbitKey>)>,
    generated: u64,
    pruned: PruneCounts,
}

struct Context<'a> {
    spec: &'a SearchSpec,
    lists: Vec<&'a [Book]>,
    pairs: Vec<(usize, usize)>,
    tuples: Vec<Vec<usize>>,
    /// Nearest earlier user with the same codebook size (symmetry mode).
    prev_same: Vec<Option<usize>>,
    keyer: Option<OrbitKeyer>,
    u: usize,
    sperner_ok: bool,
    ell: u8,
}

impl Context<'_> {
    fn process(&self, unit: &Unit) -> Result<UnitOutcome, SearchError> {
        let spec = self.spec;
        let (t, n) = (spec.t, spec.n);
        let mut out = UnitOutcome::default();
        let mut sums = Vec::new();
        let floor = self.prev_same[t - 1].map(|p| self.lists[p][unit.choice[p]].orbit);
        for book in self.lists[t - 1] {
            if floor.is_some_and(|f| book.orbit < f) {
                continue;
            }
            out.generated += 1;
            if t == 2 {
                if !self.sperner_ok {
                    out.pruned.sperner += 1;
                    continue;
                }
                let c1 = &self.lists[0][unit.choice[0]].words;
                if c1.len() > 1 && book.words.len() > 1 && !matches!(check_union_structure(c1, &book.words), Ok(None)) {
                    out.pruned.union_structure += 1;
                    continue;
                }
            }
            extend_sums(&unit.sums, &book.rows, n, &mut sums);
            if condition1_violated(&sums, n, self.ell) {
                out.pruned.condition1 += 1;
                continue;
            }
            if condition2_violated(&sums, n) {
                out.pruned.condition2 += 1;
                continue;
            }
            if condition3_fast_violated(&sums, &self.pairs, n, self.ell) {
                out.pruned.condition3_fast += 1;
                continue;
            }
            if condition3_violated(&sums, &self.tuples, n, self.ell, self.u) {
                out.pruned.condition3 += 1;
                continue;
            }
            let tuple = CodebookTuple::new(
                unit.choice
                    .iter()
                    .enumerate()
                    .map(|(j, &c)| self.lists[j][c].words.clone())
                    .chain(std::iter::once(book.words.clone()))
                    .collect(),
            )
            .expect("antichain codebooks form a valid tuple");
            let key = self.keyer.as_ref().map(|k| k.key(tuple.codebooks()));
            out.found.push((tuple, key));
        }
        Ok(out)
    }
}

/// Pairs of full message tuples (indices in odometer order) that differ on enough users
/// to break condition (3) if their outputs can collide.
fn suspicious_index_pairs(sizes: &[usize], threshold: usize) -> Vec<(usize, usize)> {
    let tuples: Vec<Vec<usize>> = Odometer::new(sizes).collect();
    let mut pairs = Vec::new();
    for (i, a) in tuples.iter().enumerate() {
        for (j, b) in tuples.iter().enumerate().skip(i + 1) {
            if a.iter().zip(b).filter(|(x, y)| x != y).count() >= threshold {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Runs the search. Results are in enumeration order, which does not depend on the
/// number of worker threads.
pub fn search(spec: &SearchSpec) -> Result<SearchOutcome, SearchError> {
    spec.validate()?;
    let (t, n) = (spec.t, spec.n);
    let ell = u8::try_from(spec.ell).map_err(|_| SearchError::InvalidEll)?;
    let u = spec.gamma.required_users(t);

    let mut by_size: HashMap<usize, Vec<Book>> = HashMap::new();
    for &m in &spec.sizes {
        by_size.entry(m).or_insert_with(|| {
            let mut books = antichain_books(n, m);
            if spec.symmetry_reduction {
                assign_orbits(&mut books, n);
            }
            books
        });
    }
    // Users of equal size are interchangeable; ordering them by codebook orbit keeps at
    // least one representative of every orbit of tuples.
    let prev_same: Vec<Option<usize>> = (0..t)
        .map(|j| if spec.symmetry_reduction { (0..j).rev().find(|&p| spec.sizes[p] == spec.sizes[j]) } else { None })
        .collect();
    let first_canonical: Vec<Book>;
    let mut lists: Vec<&[Book]> = spec.sizes.iter().map(|m| by_size[m].as_slice()).collect();
    if spec.symmetry_reduction {
        first_canonical = by_size[&spec.sizes[0]]
            .iter()
            .filter(|b| canonical_books(std::slice::from_ref(&b.words), n)[0] == b.words)
            .map(|b| Book { words: b.words.clone(), rows: b.rows.clone(), orbit: b.orbit })
            .collect();
        lists[0] = &first_canonical;
    }

    let mut stats = SearchStats {
        codebooks_per_user: lists.iter().map(|l| l.len() as u64).collect(),
        antichain_rejected: spec
            .sizes
            .iter()
            .map(|&m| {
                let total = binomial(1u64 << n, m as u64)?;
                total.checked_sub(by_size[&m].len() as u64)
            })
            .collect(),
        ..SearchStats::default()
    };

    // Serial prefix enumeration over users 1..t-1, pruned by conditions (1) and (2).
    let mut units: Vec<Unit> = Vec::new();
    let mut budget_left = spec.budget;
    let mut budget_exhausted = false;
    let mut stack: Vec<(Vec<usize>, Vec<Row>)> = vec![(Vec::new(), vec![[0u8; MAX_SEARCH_N]])];
    let mut prefix_sums = Vec::new();
    'prefixes: while let Some((choice, sums)) = stack.pop() {
        let depth = choice.len();
        if depth == t - 1 {
            units.push(Unit { choice, sums });
            continue;
        }
        // Push children in reverse so they pop in enumeration order.
        let mut children: Vec<(Vec<usize>, Vec<Row>)> = Vec::new();
        let floor = prev_same[depth].map(|p| lists[p][choice[p]].orbit);
        for (ci, book) in lists[depth].iter().enumerate() {
            if floor.is_some_and(|f| book.orbit < f) {
                continue;
            }
            if budget_left == 0 {
                // Keep the complete prefixes enumerated so far and stop.
                budget_exhausted = true;
                units.extend(
                    children.into_iter().filter(|(c, _)| c.len() == t - 1).map(|(choice, sums)| Unit { choice, sums }),
                );
                break 'prefixes;
            }
            budget_left -= 1;
            stats.prefixes_generated += 1;
            extend_sums(&sums, &book.rows, n, &mut prefix_sums);
            if depth >= 1 {
                if condition1_violated(&prefix_sums, n, ell) {
                    stats.prefixes_pruned.condition1 += 1;
                    continue;
                }
                if condition2_violated(&prefix_sums, n) {
                    stats.prefixes_pruned.condition2 += 1;
                    continue;
                }
            }
            let mut c = choice.clone();
            c.push(ci);
            children.push((c, prefix_sums.clone()));
        }
        children.reverse();
        stack.extend(children);
    }

    let leaves_per_unit = lists[t - 1].len() as u64;
    if let Some(units_left) = budget_left.checked_div(leaves_per_unit) {
        let max_units = usize::try_from(units_left).unwrap_or(usize::MAX);
        if units.len() > max_units {
            units.truncate(max_units);
            budget_exhausted = true;
        }
    }

    let ctx = Context {
        spec,
        lists,
        pairs: suspicious_index_pairs(&spec.sizes, t - u + 1),
        tuples: Odometer::new(&spec.sizes).collect(),
        prev_same,
        keyer: spec.symmetry_reduction.then(|| OrbitKeyer::new(&spec.sizes, n)),
        u,
        sperner_ok: t != 2 || sperner_bound(n).is_ok_and(|b| spec.sizes.iter().sum::<usize>() as u64 <= b),
        ell,
    };
    let mut results: Vec<CodebookTuple> = Vec::new();
    let mut seen: HashSet<OrbitKey> = HashSet::new();
    let mut stopped_early = false;
    let limit = spec.stop_after.unwrap_or(usize::MAX);
    'chunks: for (ci, chunk) in units.chunks(CHUNK_UNITS).enumerate() {
        let outcomes: Vec<UnitOutcome> = chunk.par_iter().map(|unit| ctx.process(unit)).collect::<Result<_, _>>()?;
        let last_chunk = (ci + 1) * CHUNK_UNITS >= units.len();
        let total_found: usize = outcomes.iter().map(|o| o.found.len()).sum();
        let mut consumed = 0;
        for o in outcomes {
            stats.candidates_generated += o.generated;
            stats.pruned.add(&o.pruned);
            for (tuple, key) in o.found {
                consumed += 1;
                if results.len() >= limit {
                    stopped_early = true;
                    continue;
                }
                if key.is_some_and(|k| !seen.insert(k)) {
                    stats.duplicates += 1;
                    continue;
                }
                // Ground-truth check of every reported tuple.
                if !is_zero_error(&tuple, spec.ell, &spec.gamma, &VerifierConfig::default())? {
                    stats.pruned.condition3 += 1;
                    continue;
                }
                stats.verified += 1;
                results.push(tuple);
            }
        }
        debug_assert_eq!(consumed, total_found);
        if results.len() >= limit {
            stopped_early |= !last_chunk;
            break 'chunks;
        }
    }
    if stopped_early {
        budget_exhausted = false;
    }
    Ok(SearchOutcome { spec: spec.clone(), results, stats, budget_exhausted, stopped_early })
}


#[cfg(test)]
mod fast_check_tests {
    use super::*;
    use crate::verifier::{check_condition1, check_condition2, condition3_witnesses};

    #[test]
    fn exact_condition3_matches_verifier() {
        let g: Gamma = "2/3".parse().unwrap();
        let books = antichain_books(4, 2);
        let tuples: Vec<Vec<usize>> = Odometer::new(&[2, 2, 2]).collect();
        let mut checked = 0;
        for (i, a) in books.iter().enumerate().step_by(3) {
            for b in books.iter().skip(i % 5).step_by(4) {
                for c in books.iter().step_by(5) {
                    let cb = CodebookTuple::new(vec![a.words.clone(), b.words.clone(), c.words.clone()]).unwrap();
                    if check_condition1(&cb, 1).is_some() || check_condition2(&cb).is_some() {
                        continue;
                    }
                    let mut sums = Vec::new();
                    let mut ab = Vec::new();
                    extend_sums(&[[0u8; MAX_SEARCH_N]], &a.rows, 4, &mut sums);
                    extend_sums(&sums, &b.rows, 4, &mut ab);
                    extend_sums(&ab, &c.rows, 4, &mut sums);
                    let fast = condition3_violated(&sums, &tuples, 4, 1, 2);
                    let truth = !condition3_witnesses(&cb, 1, &g, &VerifierConfig::default()).unwrap().is_empty();
                    assert_eq!(fast, truth, "{cb}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 0);
    }
}
