use alloc::vec::Vec;

const PASCAL_ROWS: usize = 64;

const PASCAL: [[u64; PASCAL_ROWS]; PASCAL_ROWS] = {
    let mut table = [[0u64; PASCAL_ROWS]; PASCAL_ROWS];
    let mut n = 0;
    while n < PASCAL_ROWS {
        table[n][0] = 1;
        let mut k = 1;
        while k <= n {
            table[n][k] = table[n - 1][k - 1].saturating_add(table[n - 1][k]);
            k += 1;
        }
        n += 1;
    }
    table
};

/// Binomial coefficient `C(n, k)`; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    if n < PASCAL_ROWS {
        return PASCAL[n][k] as usize;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// `n!` as a float.
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// All strictly increasing `k`-tuples drawn from `0..n`, in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        // advance the rightmost entry that still has room
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] < n - k + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        current[i] += 1;
        for j in i + 1..k {
            current[j] = current[j - 1] + 1;
        }
    }
}

/// Sign of the permutation sorting `entries`, together with the sorted tuple.
/// Returns `None` when two entries coincide.
pub(crate) fn sort_with_sign(entries: &[usize]) -> Option<(f64, Vec<usize>)> {
    let mut v = entries.to_vec();
    let mut sign = 1.0;
    // insertion sort, counting transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((sign, v))
}

/// Sign of a permutation given as a list of distinct indices `0..n`.
pub(crate) fn permutation_sign(perm: &[usize]) -> f64 {
    sort_with_sign(perm).map(|(s, _)| s).unwrap_or(0.0)
}

/// All permutations of `0..n` (Heap's algorithm order is irrelevant to callers).
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut used = alloc::vec![false; n];
    rec(&mut Vec::with_capacity(n), &mut used, &mut out);
    out
}
