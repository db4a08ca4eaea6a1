//! Character-level edit distance.

use alloc::vec::Vec;

/// Levenshtein distance over Unicode scalar values, case-sensitive.
///
/// Two-row dynamic program: O(|a|·|b|) time, O(min) extra space would need a
/// swap of arguments; we keep the simpler O(|b|) buffer.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }

    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr: Vec<usize> = alloc::vec![0; b.len() + 1];

    for (i, &ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let substitution = prev[j] + usize::from(ca != cb);
            let deletion = prev[j + 1] + 1;
            let insertion = curr[j] + 1;
            curr[j + 1] = substitution.min(deletion).min(insertion);
        }
        core::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}
