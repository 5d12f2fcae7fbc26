//! Seeded random terms.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::{enumerate_terms, Sort, Term, TermCounter};
use crate::lang::{language, LangId};

/// `count` distinct closed terms of `sort` with at most `max_size` nodes.
///
/// A size is drawn uniformly among the inhabited sizes, then a term of that
/// size uniformly; repeats are redrawn. When fewer than `count` terms exist
/// at all, every one of them is returned in enumeration order.
pub fn gen_terms(lang: LangId, sort: &Sort, max_size: usize, count: usize, seed: u64) -> Result<Vec<Term>> {
    let sig = language(lang).sig().clone();
    let mut counter = TermCounter::new(sig.as_ref());
    let sizes: Vec<(usize, u128)> = (1..=max_size)
        .map(|k| (k, counter.count(sort, k)))
        .filter(|(_, c)| *c > 0)
        .collect();
    if sizes.is_empty() {
        return Err(Error::UninhabitedAtSize { sort: sort.clone(), size: max_size });
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let total = sizes.iter().fold(0u128, |a, (_, c)| a.saturating_add(*c));
    if total <= count as u128 {
        return Ok(enumerate_terms(sig.as_ref(), sort, max_size));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let limit = count.saturating_mul(200).max(10_000);
    while out.len() < count && attempts < limit {
        attempts += 1;
        let (size, c) = sizes[rng.gen_range(0..sizes.len())];
        let rank = rng.gen_range(0..c);
        let t = counter
            .unrank(sort, size, rank)
            .ok_or_else(|| Error::Invalid(format!("rank {rank} of size {size} out of range")))?;
        if seen.insert(t.clone()) {
            out.push(t);
        }
    }
    Ok(out)
}

/// `count` same-sort pairs, both sides drawn from a pool of `pool` terms per
/// program sort, so that pools of small terms produce repeated and
/// behaviourally equal pairs as well as distinct ones.
pub fn gen_pairs(
    lang: LangId,
    max_size: usize,
    pool: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<(Term, Term)>> {
    let sorts = language(lang).program_sorts();
    let pools: Vec<Vec<Term>> = sorts
        .iter()
        .enumerate()
        .map(|(i, s)| gen_terms(lang, s, max_size, pool, seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_9a15);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let p = &pools[rng.gen_range(0..pools.len())];
        out.push((p[rng.gen_range(0..p.len())].clone(), p[rng.gen_range(0..p.len())].clone()));
    }
    Ok(out)
}

/// Terms drawn across all program sorts, `count` in total.
pub fn gen_program_terms(lang: LangId, max_size: usize, count: usize, seed: u64) -> Result<Vec<Term>> {
    let sorts = language(lang).program_sorts();
    let per = count.div_ceil(sorts.len());
    let mut out = Vec::with_capacity(count);
    for (i, s) in sorts.iter().enumerate() {
        out.extend(gen_terms(lang, s, max_size, per, seed.wrapping_add(i as u64))?);
    }
    out.truncate(count);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_distinct() {
        let a = gen_terms(LangId::Xcl, &Sort::Untyped, 8, 100, 7).unwrap();
        let b = gen_terms(LangId::Xcl, &Sort::Untyped, 8, 100, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        assert_eq!(a.iter().collect::<HashSet<_>>().len(), 100);
        assert!(a.iter().all(|t| t.size() <= 8 && t.is_closed()));
        assert_ne!(a, gen_terms(LangId::Xcl, &Sort::Untyped, 8, 100, 8).unwrap());
    }

    #[test]
    fn edge_cases() {
        assert!(gen_terms(LangId::Xtcl, &Sort::unit(), 6, 0, 1).unwrap().is_empty());
        assert!(matches!(
            gen_terms(LangId::Xtcl, &Sort::unit(), 0, 3, 1),
            Err(Error::UninhabitedAtSize { .. })
        ));
        // only e at size 1
        assert_eq!(gen_terms(LangId::Xtcl, &Sort::unit(), 1, 5, 1).unwrap().len(), 1);
    }

    #[test]
    fn pairs_share_a_sort() {
        for (p, q) in gen_pairs(LangId::Xtcl, 6, 20, 50, 3).unwrap() {
            assert_eq!(p.sort(), q.sort());
        }
    }
}
