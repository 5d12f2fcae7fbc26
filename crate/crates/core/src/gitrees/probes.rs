use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::behavior::Env;
use crate::error::{Error, Result};
use crate::kernel::{enumerate_terms, Signature, Sort, Term};

type Source<C> = dyn Fn(&Sort) -> Result<Vec<C>> + Send + Sync;

/// Per-sort lists of probe values for function summands, and environments
/// for substitution components. Lists are computed on first use and cached.
pub struct ProbeSet<C> {
    source: Arc<Source<C>>,
    cache: Arc<Mutex<HashMap<Sort, Arc<Vec<C>>>>>,
    /// Environments use the first `env_width` closed probes per slot.
    pub env_width: usize,
}

impl<C> Clone for ProbeSet<C> {
    fn clone(&self) -> Self {
        ProbeSet {
            source: self.source.clone(),
            cache: self.cache.clone(),
            env_width: self.env_width,
        }
    }
}

impl<C> fmt::Debug for ProbeSet<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cache = self.cache.lock().expect("probe cache");
        let mut sizes: Vec<_> = cache.iter().map(|(s, v)| (s.to_string(), v.len())).collect();
        sizes.sort();
        write!(f, "ProbeSet{sizes:?}")
    }
}

impl<C: Clone + Send + Sync + 'static> ProbeSet<C> {
    pub fn new(source: impl Fn(&Sort) -> Result<Vec<C>> + Send + Sync + 'static) -> Self {
        ProbeSet {
            source: Arc::new(source),
            cache: Arc::new(Mutex::new(HashMap::new())),
            env_width: 2,
        }
    }

    /// The same list at every sort.
    pub fn fixed(items: Vec<C>) -> Self {
        let items = Arc::new(items);
        ProbeSet::new(move |_| Ok(items.as_ref().clone()))
    }

    pub fn with_env_width(mut self, width: usize) -> Self {
        self.env_width = width;
        self
    }

    /// Probes at `sort`; an empty list is an error.
    pub fn get(&self, sort: &Sort) -> Result<Arc<Vec<C>>> {
        if let Some(v) = self.cache.lock().expect("probe cache").get(sort) {
            return Ok(v.clone());
        }
        let v = Arc::new((self.source)(sort)?);
        if v.is_empty() {
            return Err(Error::ProbeSetEmpty(sort.clone()));
        }
        let mut cache = self.cache.lock().expect("probe cache");
        Ok(cache.entry(sort.clone()).or_insert(v).clone())
    }

    /// Environments observing a term at `sort`: for a context of size
    /// `m > 0`, every vector of `m` closed probes drawn from the first
    /// `env_width` of them. Other sorts have none.
    pub fn envs(&self, sort: &Sort) -> Result<Vec<Env<C>>> {
        let m = match sort {
            Sort::Ctx(m) if *m > 0 => *m as usize,
            _ => return Ok(Vec::new()),
        };
        let closed = self.get(&Sort::Ctx(0))?;
        let pool: Vec<C> = closed.iter().take(self.env_width.max(1)).cloned().collect();
        let mut out: Vec<Vec<C>> = vec![Vec::new()];
        for _ in 0..m {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    pool.iter().map(move |p| {
                        let mut v = prefix.clone();
                        v.push(p.clone());
                        v
                    })
                })
                .collect();
        }
        Ok(out
            .into_iter()
            .map(|items| Env {
                target: Sort::Ctx(0),
                items,
            })
            .collect())
    }
}

/// Closed terms of each sort up to `max_size` nodes.
pub fn term_probes(sig: Arc<dyn Signature>, max_size: usize) -> ProbeSet<Term> {
    ProbeSet::new(move |s| Ok(enumerate_terms(sig.as_ref(), s, max_size)))
}

/// Images of `base` under `f` (typically the denotation map), sort by sort.
pub fn mapped_probes<C, D>(base: &ProbeSet<C>, f: impl Fn(&C) -> Result<D> + Send + Sync + 'static) -> ProbeSet<D>
where
    C: Clone + Send + Sync + 'static,
    D: Clone + Send + Sync + 'static,
{
    let base = base.clone();
    let width = base.env_width;
    ProbeSet::new(move |s| base.get(s)?.iter().map(&f).collect()).with_env_width(width)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_pools_are_errors() {
        let p: ProbeSet<u8> = ProbeSet::new(|_| Ok(Vec::new()));
        assert_eq!(p.get(&Sort::Untyped), Err(Error::ProbeSetEmpty(Sort::Untyped)));
    }

    #[test]
    fn environments_cover_all_slots() {
        let p = ProbeSet::fixed(vec![1u8, 2, 3]).with_env_width(2);
        assert!(p.envs(&Sort::Ctx(0)).unwrap().is_empty());
        let envs = p.envs(&Sort::Ctx(2)).unwrap();
        let items: Vec<Vec<u8>> = envs.iter().map(|e| e.items.clone()).collect();
        assert_eq!(items, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
    }

    #[test]
    fn pools_are_cached() {
        let calls = Arc::new(Mutex::new(0));
        let c = calls.clone();
        let p = ProbeSet::new(move |_| {
            *c.lock().unwrap() += 1;
            Ok(vec![0u8])
        });
        p.get(&Sort::Untyped).unwrap();
        p.get(&Sort::Untyped).unwrap();
        assert_eq!(*calls.lock().unwrap(), 1);
    }
}
