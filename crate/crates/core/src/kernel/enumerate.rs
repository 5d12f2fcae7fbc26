use std::collections::HashMap;
use std::sync::Arc;

use super::{OperatorDecl, Signature, Sort, Term};

/// All closed terms of `sort` with at most `max_size` nodes, ordered by size,
/// then operator, then children. Empty for `max_size == 0`.
pub fn enumerate_terms(sig: &dyn Signature, sort: &Sort, max_size: usize) -> Vec<Term> {
    let mut counter = TermCounter::new(sig);
    (1..=max_size)
        .flat_map(|k| counter.terms_of_size(sort, k))
        .collect()
}

/// Memoized counting, listing and unranking of closed terms by exact size.
pub struct TermCounter<'a> {
    sig: &'a dyn Signature,
    ops: HashMap<Sort, Vec<Arc<OperatorDecl>>>,
    counts: HashMap<(Sort, usize), u128>,
    lists: HashMap<(Sort, usize), Vec<Term>>,
}

impl<'a> TermCounter<'a> {
    pub fn new(sig: &'a dyn Signature) -> Self {
        TermCounter {
            sig,
            ops: HashMap::new(),
            counts: HashMap::new(),
            lists: HashMap::new(),
        }
    }

    fn ops(&mut self, sort: &Sort) -> Vec<Arc<OperatorDecl>> {
        if let Some(ops) = self.ops.get(sort) {
            return ops.clone();
        }
        let mut ops = self.sig.operators_into(sort);
        ops.sort();
        ops.dedup();
        self.ops.insert(sort.clone(), ops.clone());
        ops
    }

    /// Number of closed terms of `sort` with exactly `size` nodes
    /// (saturating at `u128::MAX`).
    pub fn count(&mut self, sort: &Sort, size: usize) -> u128 {
        if size == 0 {
            return 0;
        }
        let key = (sort.clone(), size);
        if let Some(&c) = self.counts.get(&key) {
            return c;
        }
        let mut total: u128 = 0;
        for op in self.ops(sort) {
            total = total.saturating_add(self.count_op(&op, size));
        }
        self.counts.insert(key, total);
        total
    }

    fn count_op(&mut self, op: &OperatorDecl, size: usize) -> u128 {
        let arity = op.arity();
        if arity == 0 {
            return u128::from(size == 1);
        }
        if size < 1 + arity {
            return 0;
        }
        let mut total: u128 = 0;
        for parts in compositions(size - 1, arity) {
            let mut prod: u128 = 1;
            for (s, &k) in op.arg_sorts.iter().zip(&parts) {
                prod = prod.saturating_mul(self.count(s, k));
                if prod == 0 {
                    break;
                }
            }
            total = total.saturating_add(prod);
        }
        total
    }

    /// Terms of exactly `size` nodes, in enumeration order.
    pub fn terms_of_size(&mut self, sort: &Sort, size: usize) -> Vec<Term> {
        if size == 0 {
            return Vec::new();
        }
        let key = (sort.clone(), size);
        if let Some(v) = self.lists.get(&key) {
            return v.clone();
        }
        let mut out = Vec::new();
        for op in self.ops(sort) {
            let arity = op.arity();
            if arity == 0 {
                if size == 1 {
                    out.push(Term::constant(&op).expect("nullary operator"));
                }
                continue;
            }
            if size < 1 + arity {
                continue;
            }
            for parts in compositions(size - 1, arity) {
                let pools: Vec<Vec<Term>> = op
                    .arg_sorts
                    .iter()
                    .zip(&parts)
                    .map(|(s, &k)| self.terms_of_size(s, k))
                    .collect();
                if pools.iter().any(Vec::is_empty) {
                    continue;
                }
                for args in cartesian(&pools) {
                    out.push(Term::make(&op, args).expect("enumerated arguments are well-sorted"));
                }
            }
        }
        self.lists.insert(key, out.clone());
        out
    }

    /// The `rank`-th term (in enumeration order) of `sort` with `size` nodes.
    pub fn unrank(&mut self, sort: &Sort, size: usize, mut rank: u128) -> Option<Term> {
        for op in self.ops(sort) {
            let c = self.count_op(&op, size);
            if rank >= c {
                rank -= c;
                continue;
            }
            if op.arity() == 0 {
                return Term::constant(&op).ok();
            }
            for parts in compositions(size - 1, op.arity()) {
                let counts: Vec<u128> = op
                    .arg_sorts
                    .iter()
                    .zip(&parts)
                    .map(|(s, &k)| self.count(s, k))
                    .collect();
                let block = counts.iter().fold(1u128, |a, &b| a.saturating_mul(b));
                if rank >= block {
                    rank -= block;
                    continue;
                }
                // Mixed radix with the first child most significant.
                let mut digits = vec![0u128; counts.len()];
                for i in (0..counts.len()).rev() {
                    digits[i] = rank % counts[i];
                    rank /= counts[i];
                }
                let mut args = Vec::with_capacity(parts.len());
                for ((s, &k), &d) in op.arg_sorts.iter().zip(&parts).zip(&digits) {
                    args.push(self.unrank(s, k, d)?);
                }
                return Term::make(&op, args).ok();
            }
            return None;
        }
        None
    }
}

/// Ordered ways to write `total` as `parts` positive summands, lexicographic.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(parts);
    fn go(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            if left >= 1 {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for first in 1..left {
            if left - first < parts - 1 {
                break;
            }
            cur.push(first);
            go(left - first, parts - 1, cur, out);
            cur.pop();
        }
    }
    if parts > 0 && total >= parts {
        go(total, parts, &mut cur, &mut out);
    }
    out
}

fn cartesian(pools: &[Vec<Term>]) -> Vec<Vec<Term>> {
    let mut out: Vec<Vec<Term>> = vec![Vec::new()];
    for pool in pools {
        let mut next = Vec::with_capacity(out.len() * pool.len());
        for prefix in &out {
            for t in pool {
                let mut v = prefix.clone();
                v.push(t.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compositions_are_lexicographic() {
        assert_eq!(
            compositions(4, 2),
            vec![vec![1, 3], vec![2, 2], vec![3, 1]]
        );
        assert_eq!(compositions(2, 3), Vec::<Vec<usize>>::new());
        assert_eq!(compositions(3, 1), vec![vec![3]]);
    }
}
