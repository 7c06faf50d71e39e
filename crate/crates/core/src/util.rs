//! Small enumeration helpers shared across modules.

/// Mixed-radix counter over `0..sizes[0] × … × 0..sizes[k-1]`, last digit fastest.
///
/// An empty `sizes` yields exactly one empty tuple.
#[derive(Debug, Clone)]
pub struct Odometer {
    sizes: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl Odometer {
    pub fn new(sizes: &[usize]) -> Self {
        Odometer { sizes: sizes.to_vec(), current: vec![0; sizes.len()], done: sizes.contains(&0) }
    }
}

impl Iterator for Odometer {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut i = self.sizes.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.current[i] += 1;
            if self.current[i] < self.sizes[i] {
                break;
            }
            self.current[i] = 0;
        }
        Some(out)
    }
}

/// Position of `digits` in [`Odometer`] order.
pub fn mixed_radix_index(sizes: &[usize], digits: &[usize]) -> usize {
    digits.iter().zip(sizes).fold(0, |acc, (&d, &s)| acc * s + d)
}

/// Checked product of sizes; `None` on overflow.
pub fn checked_product(sizes: impl IntoIterator<Item = usize>) -> Option<usize> {
    sizes.into_iter().try_fold(1usize, |acc, s| acc.checked_mul(s))
}

/// Binomial coefficient, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(acc as u64)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}
