//! Set partitions and sums of cluster products over them.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest n for which partition sums are attempted.
pub const PARTITION_CAP: usize = 12;

fn check_cap(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("set partitions need n >= 1"));
    }
    if n > PARTITION_CAP {
        return Err(Error::PartitionCap { n, cap: PARTITION_CAP });
    }
    Ok(())
}

/// Bell number B(n) by the Bell triangle.
pub fn bell(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &r in &row {
            next.push(next.last().unwrap() + r);
        }
        row = next;
    }
    row[0]
}

/// Lazily enumerated partitions of {0, …, n−1}, each as clusters sorted by
/// their smallest element with members ascending.
#[derive(Debug, Clone)]
pub struct SetPartitions {
    codes: Vec<usize>,
    done: bool,
}

pub fn set_partitions(n: usize) -> Result<SetPartitions> {
    check_cap(n)?;
    Ok(SetPartitions { codes: vec![0; n], done: false })
}

impl Iterator for SetPartitions {
    type Item = Vec<Vec<usize>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let k = self.codes.iter().max().map_or(0, |m| m + 1);
        let mut out = vec![Vec::new(); k];
        for (i, &c) in self.codes.iter().enumerate() {
            out[c].push(i);
        }
        // advance the restricted growth string
        let n = self.codes.len();
        let mut prefix_max = vec![0usize; n];
        for i in 1..n {
            prefix_max[i] = prefix_max[i - 1].max(self.codes[i - 1]);
        }
        self.done = true;
        for i in (1..n).rev() {
            if self.codes[i] <= prefix_max[i] {
                self.codes[i] += 1;
                for c in &mut self.codes[i + 1..] {
                    *c = 0;
                }
                self.done = false;
                break;
            }
        }
        Some(out)
    }
}

/// Bitmask of a cluster.
pub(crate) fn mask_of(cluster: &[usize]) -> usize {
    cluster.iter().fold(0, |m, &i| m | (1 << i))
}

/// Cluster value with a derivative part and modulus bounds for both.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Term {
    pub s: Complex64,
    pub d: Complex64,
    pub s_abs: f64,
    pub d_abs: f64,
}

impl Term {
    pub fn one() -> Self {
        Self { s: Complex64::new(1.0, 0.0), d: Complex64::new(0.0, 0.0), s_abs: 1.0, d_abs: 0.0 }
    }
}

impl Add for Term {
    type Output = Term;
    fn add(self, o: Term) -> Term {
        Term { s: self.s + o.s, d: self.d + o.d, s_abs: self.s_abs + o.s_abs, d_abs: self.d_abs + o.d_abs }
    }
}

impl Mul for Term {
    type Output = Term;
    fn mul(self, o: Term) -> Term {
        Term {
            s: self.s * o.s,
            d: self.d * o.s + self.s * o.d,
            s_abs: self.s_abs * o.s_abs,
            d_abs: self.d_abs * o.s_abs + self.s_abs * o.d_abs,
        }
    }
}

/// Σ over partitions of {0, …, n−1} of ∏_j cluster[mask(C_j)], where `cluster`
/// is indexed by bitmask. Each subset's value is computed once.
pub(crate) fn partition_sum(cluster: &[Term], n: usize) -> Term {
    let full = (1usize << n) - 1;
    debug_assert_eq!(cluster.len(), full + 1);
    let mut s = vec![Term::default(); full + 1];
    s[0] = Term::one();
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut acc = Term::default();
        let mut sub = rest;
        loop {
            let c = sub | low;
            acc = acc + cluster[c] * s[mask ^ c];
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        s[mask] = acc;
    }
    s[full]
}
