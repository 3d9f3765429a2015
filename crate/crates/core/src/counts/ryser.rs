//! Permanent of `M_ij = x^((i-j)²)` over truncated integer polynomials.
//!
//! The permanent is the generating polynomial of the Spearman distance from
//! the identity: the coefficient of `x^d` counts the permutations at
//! distance `d`. It is evaluated with Ryser's inclusion–exclusion formula,
//!
//! ```text
//! perm(M) = (-1)^n Σ_{S ⊆ cols} (-1)^{|S|} Π_i Σ_{j ∈ S} M_ij,
//! ```
//!
//! walking the column subsets in Gray-code order so every step flips one
//! column in the per-row sums. Products are truncated at `x^{d_max}`, which
//! is exact because no entry carries a negative exponent.
//!
//! All arithmetic is wrapping `u64`, i.e. modulo 2^64. Intermediate products
//! overflow 64 bits for larger `n`, but every final coefficient is at most
//! `n! < 2^64` (for `n <= 20`), so the residue is the exact count.

use rayon::prelude::*;

use crate::ranking::d_max;

/// Largest `n` for which the coefficients fit in the `u64` residue ring.
pub const MAX_RYSER_N: usize = 20;

/// Coefficients of the distance polynomial, index = distance `0..=d_max`.
pub(crate) fn distance_polynomial(n: usize) -> Vec<u64> {
    assert!((1..=MAX_RYSER_N).contains(&n), "n = {n} outside 1..={MAX_RYSER_N}");
    let len = d_max(n) as usize + 1;
    let subsets: u64 = 1 << n;
    let chunk_bits = n.min(8);
    let chunk_len = subsets >> chunk_bits;

    let total = (0..(1u64 << chunk_bits))
        .into_par_iter()
        .map(|c| {
            let start = (c * chunk_len).max(1);
            let end = (c + 1) * chunk_len;
            let mut worker = ChunkWorker::new(n, len);
            worker.run(start, end);
            worker.total
        })
        .reduce(
            || vec![0u64; len],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = x.wrapping_add(y);
                }
                a
            },
        );
    total
}

fn gray(k: u64) -> u64 {
    k ^ (k >> 1)
}

struct ChunkWorker {
    n: usize,
    len: usize,
    /// `row_sums[i][e]` = number of columns `j ∈ S` with `(i-j)² = e`.
    row_sums: Vec<Vec<u64>>,
    acc: Vec<u64>,
    next: Vec<u64>,
    terms: Vec<(usize, u64)>,
    total: Vec<u64>,
}

impl ChunkWorker {
    fn new(n: usize, len: usize) -> Self {
        let max_exp = (n - 1) * (n - 1);
        ChunkWorker {
            n,
            len,
            row_sums: vec![vec![0; max_exp + 1]; n],
            acc: vec![0; len],
            next: vec![0; len],
            terms: Vec::with_capacity(n),
            total: vec![0; len],
        }
    }

    fn toggle(&mut self, col: usize, add: bool) {
        for (i, row) in self.row_sums.iter_mut().enumerate() {
            let e = (i as isize - col as isize).pow(2) as usize;
            if add {
                row[e] += 1;
            } else {
                row[e] -= 1;
            }
        }
    }

    fn run(&mut self, start: u64, end: u64) {
        if start >= end {
            return;
        }
        let mut set = gray(start);
        for col in 0..self.n {
            if set >> col & 1 == 1 {
                self.toggle(col, true);
            }
        }
        self.accumulate(set);
        for k in start + 1..end {
            let col = k.trailing_zeros() as usize;
            let bit = 1u64 << col;
            let adding = set & bit == 0;
            set ^= bit;
            self.toggle(col, adding);
            self.accumulate(set);
        }
    }

    /// Adds `(-1)^(n-|S|) Π_i rowsum_i(x)` to the running total.
    fn accumulate(&mut self, set: u64) {
        let len = self.len;
        self.acc[0] = 1;
        let mut deg = 0usize;
        for i in 0..self.n {
            self.terms.clear();
            for (e, &c) in self.row_sums[i].iter().enumerate() {
                if c != 0 {
                    self.terms.push((e, c));
                }
            }
            let max_e = self.terms.last().map_or(0, |t| t.0);
            let new_deg = (deg + max_e).min(len - 1);
            self.next[..=new_deg].fill(0);
            for &(e, c) in &self.terms {
                if e > new_deg {
                    break;
                }
                let upto = deg.min(new_deg - e);
                let src = &self.acc[..=upto];
                let dst = &mut self.next[e..=e + upto];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = d.wrapping_add(c.wrapping_mul(s));
                }
            }
            std::mem::swap(&mut self.acc, &mut self.next);
            deg = new_deg;
        }
        let negative = (self.n - set.count_ones() as usize) % 2 == 1;
        for (t, &a) in self.total[..=deg].iter_mut().zip(&self.acc[..=deg]) {
            *t = if negative { t.wrapping_sub(a) } else { t.wrapping_add(a) };
        }
        self.acc[..=deg].fill(0);
    }
}
