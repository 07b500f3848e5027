//! Integer partitions and the dominance order.
//!
//! A partition is a weakly decreasing tuple of positive integers. For a
//! partition `lambda` write `n_lambda(i) = #{j : lambda_j > i}`; the
//! sequence `n_lambda(0), n_lambda(1), ...` is the conjugate partition.
//!
//! `dominates(lambda, mu)` decides the dominance order: `lambda >= mu` iff
//! the two have equal size and every prefix sum of `lambda` is at least the
//! corresponding prefix sum of `mu`. Four independent implementations are
//! provided and cross-checked in the tests:
//!
//! 1. prefix sums directly;
//! 2. a certificate: nonnegative coefficients `c_j` with
//!    `lambda - mu = sum_j c_j (e_j - e_{j+1})`;
//! 3. tail sums of the conjugate, `sum_{i >= m} n_lambda(i)`;
//! 4. clipped row sums, `sum_j max(lambda_j - m, 0)`.

use crate::{Error, Result};
use std::fmt;

/// A partition: weakly decreasing positive parts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    parts: Vec<u32>,
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

impl Partition {
    /// Build from weakly decreasing parts; trailing zeros are stripped.
    pub fn new(parts: Vec<u32>) -> Result<Partition> {
        for w in parts.windows(2) {
            if w[0] < w[1] {
                return Err(Error::Shape(format!(
                    "parts {:?} are not weakly decreasing",
                    parts
                )));
            }
        }
        let mut parts = parts;
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Ok(Partition { parts })
    }

    /// Build from parts in any order (zeros discarded).
    pub fn from_unsorted(mut parts: Vec<u32>) -> Partition {
        parts.retain(|&x| x > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Partition { parts }
    }

    pub fn empty() -> Partition {
        Partition { parts: vec![] }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// `lambda_j` with 1-based `j`, zero beyond the length.
    pub fn part(&self, j: usize) -> u32 {
        if j == 0 || j > self.parts.len() {
            0
        } else {
            self.parts[j - 1]
        }
    }

    /// The size `|lambda|`.
    pub fn size(&self) -> u64 {
        self.parts.iter().map(|&x| x as u64).sum()
    }

    /// The largest part (0 for the empty partition).
    pub fn max_part(&self) -> u32 {
        self.parts.first().copied().unwrap_or(0)
    }

    /// `n_lambda(i) = #{j : lambda_j > i}`.
    pub fn n_at(&self, i: u32) -> usize {
        self.parts.iter().filter(|&&x| x > i).count()
    }

    /// Conjugate partition.
    pub fn conjugate(&self) -> Partition {
        let m = self.max_part();
        let parts = (0..m).map(|i| self.n_at(i) as u32).collect();
        Partition { parts }
    }

    /// Parts padded with zeros to length `n`; errors if more than `n` parts.
    pub fn padded(&self, n: usize) -> Result<Vec<u32>> {
        if self.parts.len() > n {
            return Err(Error::Shape(format!(
                "partition with {} parts does not fit in {} rows",
                self.parts.len(),
                n
            )));
        }
        let mut v = self.parts.clone();
        v.resize(n, 0);
        Ok(v)
    }

    /// Decrement every positive part by one: `lambda - 1`.
    pub fn minus_one(&self) -> Partition {
        Partition {
            parts: self
                .parts
                .iter()
                .filter(|&&x| x > 1)
                .map(|&x| x - 1)
                .collect(),
        }
    }

    /// Whether the partition fits in an `n x c` box (at most `n` parts, each
    /// at most `c`).
    pub fn fits_in_box(&self, n: usize, c: u32) -> bool {
        self.parts.len() <= n && self.max_part() <= c
    }

    /// The complement `(c - lambda_n, ..., c - lambda_1)` in an `n x c` box.
    pub fn complement_in_box(&self, n: usize, c: u32) -> Result<Partition> {
        if !self.fits_in_box(n, c) {
            return Err(Error::Shape(format!(
                "{:?} does not fit in a {}x{} box",
                self.parts, n, c
            )));
        }
        let padded = self.padded(n)?;
        let parts: Vec<u32> = padded.iter().rev().map(|&x| c - x).collect();
        Partition::new(parts)
    }
}

/// Dominance by prefix sums: equal size and every prefix of `lhs` at least
/// the matching prefix of `rhs`.
pub fn dominates_prefix_sums(lhs: &Partition, rhs: &Partition) -> bool {
    if lhs.size() != rhs.size() {
        return false;
    }
    let n = lhs.len().max(rhs.len());
    let mut sl = 0u64;
    let mut sr = 0u64;
    for j in 1..=n {
        sl += lhs.part(j) as u64;
        sr += rhs.part(j) as u64;
        if sl < sr {
            return false;
        }
    }
    true
}

/// Dominance with a certificate: `Some(c)` iff `lhs >= rhs`, where
/// `c[j-1] = sum_{k <= j} (lhs_k - rhs_k) >= 0` for `1 <= j <= n` and the
/// last entry is zero, so `lhs - mu = sum_j c_j (e_j - e_{j+1})` termwise.
/// The returned certificate is re-verified by reconstruction before being
/// handed out.
pub fn dominance_witness(lhs: &Partition, rhs: &Partition) -> Option<Vec<u64>> {
    let n = lhs.len().max(rhs.len());
    let mut c: Vec<i64> = Vec::with_capacity(n);
    let mut acc = 0i64;
    for j in 1..=n {
        acc += lhs.part(j) as i64 - rhs.part(j) as i64;
        if acc < 0 {
            return None;
        }
        c.push(acc);
    }
    if *c.last().unwrap_or(&0) != 0 {
        return None;
    }
    // reconstruction check: lhs_j - rhs_j = c_j - c_{j-1}
    let mut prev = 0i64;
    for j in 1..=n {
        let diff = c[j - 1] - prev;
        assert_eq!(
            diff,
            lhs.part(j) as i64 - rhs.part(j) as i64,
            "certificate reconstruction failed"
        );
        prev = c[j - 1];
    }
    Some(c.into_iter().map(|x| x as u64).collect())
}

/// Dominance via tail sums of the conjugate: `sum_{i >= m} n_lhs(i)` at
/// least matches for every `m >= 1`, with equal sizes.
pub fn dominates_conjugate_tails(lhs: &Partition, rhs: &Partition) -> bool {
    if lhs.size() != rhs.size() {
        return false;
    }
    let top = lhs.max_part().max(rhs.max_part());
    for m in 1..=top {
        let tl: u64 = (m..top + 1).map(|i| lhs.n_at(i - 1) as u64).sum();
        let tr: u64 = (m..top + 1).map(|i| rhs.n_at(i - 1) as u64).sum();
        if tl < tr {
            return false;
        }
    }
    true
}

/// Dominance via clipped row sums: `sum_j max(lhs_j - m, 0)` at least
/// matches for every `m >= 0`, with equal sizes.
pub fn dominates_clipped_rows(lhs: &Partition, rhs: &Partition) -> bool {
    if lhs.size() != rhs.size() {
        return false;
    }
    let top = lhs.max_part().max(rhs.max_part());
    for m in 0..=top {
        let sl: u64 = lhs.parts().iter().map(|&x| (x.saturating_sub(m)) as u64).sum();
        let sr: u64 = rhs.parts().iter().map(|&x| (x.saturating_sub(m)) as u64).sum();
        if sl < sr {
            return false;
        }
    }
    true
}

/// The dominance order `lhs >= rhs` (prefix-sum implementation).
pub fn dominates(lhs: &Partition, rhs: &Partition) -> bool {
    dominates_prefix_sums(lhs, rhs)
}

/// All partitions of `total`, in descending lexicographic order.
pub fn partitions_of(total: u32) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut cur: Vec<u32> = Vec::new();
    fn rec(remaining: u32, max_part: u32, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if remaining == 0 {
            out.push(Partition { parts: cur.clone() });
            return;
        }
        let hi = remaining.min(max_part);
        for part in (1..=hi).rev() {
            cur.push(part);
            rec(remaining - part, part, cur, out);
            cur.pop();
        }
    }
    rec(total, total.max(1), &mut cur, &mut out);
    out
}

/// All partitions fitting in an `n x c` box (at most `n` parts, each at most
/// `c`), in descending lexicographic order of padded part vectors.
pub fn partitions_in_box(n: usize, c: u32) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut cur: Vec<u32> = Vec::new();
    fn rec(rows_left: usize, max_part: u32, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
        out.push(Partition {
            parts: cur.iter().copied().filter(|&x| x > 0).collect(),
        });
        if rows_left == 0 {
            return;
        }
        for part in (1..=max_part).rev() {
            cur.push(part);
            rec(rows_left - 1, part, cur, out);
            cur.pop();
        }
    }
    rec(n, c, &mut cur, &mut out);
    // descending lex on padded vectors
    out.sort_by(|a, b| {
        let pa = a.padded(n).unwrap();
        let pb = b.padded(n).unwrap();
        pb.cmp(&pa)
    });
    out
}
