//! Step-indexed applicative bisimilarity on closed terms, with labels
//! restricted to a finite probe set.
//!
//! [`bisim`] compares depth-bounded observations of the operational model.
//! [`prob_bisim`] and [`pow_bisim`] compute the same relation on a finite
//! universe by partition refinement, matching reduct bags by class masses
//! or by Egli-Milner, respectively.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::behavior::{Bag, Step, StepTag, Weight};
use crate::engine::{Model, OperationalModel};
use crate::error::{Error, Result};
use crate::gitrees::{Move, ProbeSet, Truncator, Witness};
use crate::kernel::{Sort, Term};
use crate::lang::LangId;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum BisimReport {
    /// Not distinguished by these probes up to this depth.
    Related { depth: usize, probes: String },
    Distinguished { witness: Witness },
}

impl BisimReport {
    pub fn related(&self) -> bool {
        matches!(self, BisimReport::Related { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            BisimReport::Distinguished { witness } => Some(witness),
            _ => None,
        }
    }
}

/// A reusable checker: shares the operational model and its observation
/// cache across queries.
pub struct Bisimulator {
    pub lang: LangId,
    truncator: Truncator<OperationalModel>,
}

impl Bisimulator {
    pub fn new(lang: LangId, probes: ProbeSet<Term>) -> Bisimulator {
        Bisimulator::with_model(lang, lang.language().operational(), probes)
    }

    pub fn with_model(lang: LangId, model: Arc<OperationalModel>, probes: ProbeSet<Term>) -> Bisimulator {
        Bisimulator {
            lang,
            truncator: Truncator::new(model, probes),
        }
    }

    pub fn truncator(&self) -> &Truncator<OperationalModel> {
        &self.truncator
    }

    pub fn check(&self, p: &Term, q: &Term, depth: usize) -> Result<BisimReport> {
        if p.sort() != q.sort() {
            return Err(Error::SortMismatch {
                context: "bisimilarity".into(),
                expected: p.sort().clone(),
                found: q.sort().clone(),
            });
        }
        p.ensure_closed()?;
        q.ensure_closed()?;
        Ok(match self.truncator.witness(p, q, depth)? {
            None => BisimReport::Related {
                depth,
                probes: format!("{:?}", self.truncator.probes()),
            },
            Some(witness) => BisimReport::Distinguished { witness },
        })
    }

    /// Follows a witness path on both terms and confirms that the states
    /// reached are observably different with the remaining depth.
    pub fn replay(&self, p: &Term, q: &Term, witness: &Witness) -> Result<bool> {
        let (mut a, mut b) = (p.clone(), q.clone());
        for m in &witness.path {
            a = self.follow(&a, m)?;
            b = self.follow(&b, m)?;
        }
        let rest = witness.depth - witness.path.len();
        Ok(self.truncator.truncate(&a, rest)? != self.truncator.truncate(&b, rest)?)
    }

    fn follow(&self, t: &Term, m: &Move) -> Result<Term> {
        let model = self.truncator.model();
        let beh = model.behavior(t)?;
        match (m, &beh.step) {
            (Move::Step, Step::Reduct(Bag::Det(next))) => Ok(next.clone()),
            (Move::Probe { index }, Step::Function(f)) => {
                let (dom, _) = model
                    .signature()
                    .function_sorts(t.sort())
                    .ok_or_else(|| Error::Invalid("function without a domain".into()))?;
                let pool = self.truncator.probes().get(&dom)?;
                f.apply(&pool[*index])
            }
            (Move::Env { index }, _) => {
                let envs = self.truncator.probes().envs(t.sort())?;
                let s = beh.subst.as_ref().ok_or_else(|| Error::Invalid("no substitution component".into()))?;
                s.apply(&envs[*index])
            }
            _ => Err(Error::Invalid(format!("witness move {m} does not apply"))),
        }
    }
}

/// Probe-restricted, depth-`n` bisimilarity of two closed terms.
pub fn bisim(lang: LangId, p: &Term, q: &Term, n: usize, probes: &ProbeSet<Term>) -> Result<BisimReport> {
    Bisimulator::new(lang, probes.clone()).check(p, q, n)
}

// ------------------------------------------------------ partition refinement

/// Canonical refinement key of a state: its tag and its successors'
/// blocks from the previous round.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RefinementKey {
    Root(Sort, StepTag),
    Terminal(Sort),
    Det(Sort, usize),
    /// Class masses, sorted by block, exact.
    Masses(Sort, Vec<(usize, Weight)>),
    Set(Sort, BTreeSet<usize>),
    Function(Sort, Vec<usize>),
}

/// Blocks of a finite universe, in order of first element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub blocks: Vec<Vec<Term>>,
    /// Final refinement key of each universe element.
    pub keys: Vec<(Term, RefinementKey)>,
    pub depth: usize,
    /// States examined, including successors and probe applications.
    pub explored: usize,
}

impl Partition {
    pub fn block_of(&self, t: &Term) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(t))
    }

    pub fn related(&self, p: &Term, q: &Term) -> bool {
        matches!((self.block_of(p), self.block_of(q)), (Some(a), Some(b)) if a == b)
    }

    /// Checks the equivalence-relation invariants against a universe.
    pub fn is_valid_for(&self, universe: &[Term]) -> bool {
        let mut seen: Vec<&Term> = self.blocks.iter().flatten().collect();
        let n = seen.len();
        seen.sort();
        seen.dedup();
        let mut u: Vec<&Term> = universe.iter().collect();
        u.sort();
        u.dedup();
        seen.len() == n && seen == u && self.blocks.iter().all(|b| !b.is_empty())
    }

    /// Whether every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.blocks.iter().all(|b| {
            let owner = coarser.block_of(&b[0]);
            owner.is_some() && b.iter().all(|t| coarser.block_of(t) == owner)
        })
    }
}

/// Default bound on explored states.
pub const UNIVERSE_CAP: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BagMatching {
    Masses,
    EgliMilner,
}

fn successors(model: &OperationalModel, probes: &ProbeSet<Term>, t: &Term) -> Result<Vec<Term>> {
    let b = model.behavior(t)?;
    Ok(match &b.step {
        Step::Terminal => Vec::new(),
        Step::Reduct(bag) => bag.support().into_iter().cloned().collect(),
        Step::Function(f) => {
            let (dom, _) = model
                .signature()
                .function_sorts(t.sort())
                .ok_or_else(|| Error::Invalid("function without a domain".into()))?;
            probes.get(&dom)?.iter().map(|p| f.apply(p)).collect::<Result<_>>()?
        }
    })
}

/// Depth-`n` partition refinement of `universe`, closed under successors
/// up to depth `n`.
pub fn refine(
    model: &OperationalModel,
    universe: &[Term],
    n: usize,
    probes: &ProbeSet<Term>,
    matching: BagMatching,
    cap: usize,
) -> Result<Partition> {
    // level[i]: least distance from the universe
    let mut states: Vec<Term> = Vec::new();
    let mut index: HashMap<Term, usize> = HashMap::new();
    let mut level: Vec<usize> = Vec::new();
    for t in universe {
        t.ensure_closed()?;
        if !index.contains_key(t) {
            index.insert(t.clone(), states.len());
            states.push(t.clone());
            level.push(0);
        }
    }
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); states.len()];
    let mut i = 0;
    while i < states.len() {
        if level[i] < n {
            let next = successors(model, probes, &states[i])?;
            let mut ids = Vec::with_capacity(next.len());
            for s in next {
                let j = match index.get(&s) {
                    Some(&j) => j,
                    None => {
                        if states.len() >= cap {
                            return Err(Error::UniverseExplosion(cap));
                        }
                        index.insert(s.clone(), states.len());
                        states.push(s);
                        level.push(level[i] + 1);
                        succ.push(Vec::new());
                        states.len() - 1
                    }
                };
                ids.push(j);
            }
            succ[i] = ids;
        }
        i += 1;
    }

    let behaviors = states.iter().map(|t| model.behavior(t)).collect::<Result<Vec<_>>>()?;
    let root = |k: usize| RefinementKey::Root(states[k].sort().clone(), behaviors[k].tag());
    let mut keys: Vec<Option<RefinementKey>> = (0..states.len()).map(|k| Some(root(k))).collect();
    let mut blocks = canonical(&keys);
    for round in 1..=n {
        // states at level ≤ n - round have every successor at the previous round
        let mut next_keys: Vec<Option<RefinementKey>> = vec![None; states.len()];
        for k in 0..states.len() {
            if level[k] + round > n {
                continue;
            }
            let sort = states[k].sort().clone();
            let blk = |j: usize| blocks[j].expect("successor refined in the previous round");
            next_keys[k] = Some(match &behaviors[k].step {
                Step::Terminal => RefinementKey::Terminal(sort),
                Step::Function(_) => RefinementKey::Function(sort, succ[k].iter().map(|&j| blk(j)).collect()),
                Step::Reduct(Bag::Det(_)) => RefinementKey::Det(sort, blk(succ[k][0])),
                Step::Reduct(Bag::Pow(_)) => {
                    RefinementKey::Set(sort, succ[k].iter().map(|&j| blk(j)).collect())
                }
                Step::Reduct(Bag::Dist(ws)) => {
                    let mut masses: BTreeMap<usize, Weight> = BTreeMap::new();
                    for (y, w) in ws {
                        let e = masses.entry(blk(index[y])).or_insert_with(Weight::zero);
                        *e += w.clone();
                    }
                    match matching {
                        BagMatching::Masses => RefinementKey::Masses(sort, masses.into_iter().collect()),
                        BagMatching::EgliMilner => RefinementKey::Set(sort, masses.into_keys().collect()),
                    }
                }
            });
        }
        keys = next_keys;
        blocks = canonical(&keys);
    }

    let mut out_blocks: Vec<Vec<Term>> = Vec::new();
    let mut block_pos: HashMap<usize, usize> = HashMap::new();
    let mut out_keys = Vec::new();
    let mut seen = BTreeSet::new();
    for t in universe {
        let k = index[t];
        if !seen.insert(k) {
            continue;
        }
        let b = blocks[k].expect("universe refined to depth n");
        let pos = *block_pos.entry(b).or_insert_with(|| {
            out_blocks.push(Vec::new());
            out_blocks.len() - 1
        });
        out_blocks[pos].push(t.clone());
        out_keys.push((t.clone(), keys[k].clone().expect("universe refined to depth n")));
    }
    Ok(Partition {
        blocks: out_blocks,
        keys: out_keys,
        depth: n,
        explored: states.len(),
    })
}

/// Block numbers by sorted key, so that numbering is deterministic.
fn canonical(keys: &[Option<RefinementKey>]) -> Vec<Option<usize>> {
    let distinct: BTreeSet<&RefinementKey> = keys.iter().flatten().collect();
    let number: HashMap<&RefinementKey, usize> = distinct.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
    keys.iter().map(|k| k.as_ref().map(|k| number[k])).collect()
}

fn refine_lang(lang: LangId, universe: &[Term], n: usize, probes: &ProbeSet<Term>, m: BagMatching) -> Result<Partition> {
    let model = lang.language().operational();
    refine(&model, universe, n, probes, m, UNIVERSE_CAP)
}

/// Probabilistic bisimilarity: reduct distributions must give equal mass to
/// every class.
pub fn prob_bisim(lang: LangId, universe: &[Term], n: usize, probes: &ProbeSet<Term>) -> Result<Partition> {
    refine_lang(lang, universe, n, probes, BagMatching::Masses)
}

/// Nondeterministic bisimilarity: reduct sets must reach the same classes.
pub fn pow_bisim(lang: LangId, universe: &[Term], n: usize, probes: &ProbeSet<Term>) -> Result<Partition> {
    refine_lang(lang, universe, n, probes, BagMatching::EgliMilner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::language;
    use num_traits::One;

    fn parse(l: LangId, s: &str) -> Term {
        language(l).parse(s).unwrap()
    }

    #[test]
    fn reflexive_and_root_mismatch() {
        let l = LangId::Xtcl;
        let probes = language(l).probes(2);
        let ie = parse(l, "I e");
        assert!(bisim(l, &ie, &ie, 4, &probes).unwrap().related());
        let r = bisim(l, &parse(l, "e"), &ie, 1, &probes).unwrap();
        let w = r.witness().unwrap();
        assert!(w.path.is_empty());
        assert_eq!((w.left.as_str(), w.right.as_str()), ("✓", "→"));
    }

    #[test]
    fn sort_mismatch_is_an_error() {
        let l = LangId::Xtcl;
        let probes = language(l).probes(2);
        assert!(matches!(
            bisim(l, &parse(l, "e"), &parse(l, "I"), 1, &probes),
            Err(Error::SortMismatch { .. })
        ));
    }

    #[test]
    fn witnesses_replay() {
        let l = LangId::Xtcl;
        let b = Bisimulator::new(l, language(l).probes(3));
        let (p, q) = (parse(l, "K e"), parse(l, "K'(e)"));
        let r = b.check(&p, &q, 1).unwrap();
        assert!(b.replay(&p, &q, r.witness().unwrap()).unwrap());
        let (p, q) = (parse(l, "K (I e)"), parse(l, "K e"));
        let r = b.check(&p, &q, 6).unwrap();
        let w = r.witness().unwrap();
        assert!(!w.path.is_empty());
        assert!(b.replay(&p, &q, w).unwrap());
    }

    #[test]
    fn choice_is_separated_from_values_and_symmetric() {
        let l = LangId::Xptcl;
        let probes = language(l).probes(2);
        let (e, ee) = (parse(l, "e"), parse(l, "e (+) e"));
        let part = prob_bisim(l, &[e.clone(), ee.clone()], 3, &probes).unwrap();
        assert!(!part.related(&e, &ee));
        let (a, b) = (parse(l, "e (+) I e"), parse(l, "I e (+) e"));
        let part = prob_bisim(l, &[a.clone(), b.clone()], 5, &probes).unwrap();
        assert!(part.related(&a, &b));
        for (_, key) in &part.keys {
            if let RefinementKey::Masses(_, ms) = key {
                let total: Weight = ms.iter().map(|(_, w)| w.clone()).sum();
                assert!(total.is_one());
            }
        }
        assert!(part.is_valid_for(&[a, b]));
    }

    #[test]
    fn sets_match_by_classes() {
        let l = LangId::Xnccl;
        let probes = language(l).probes(1);
        let (a, b) = (parse(l, "S (+) K"), parse(l, "K (+) S"));
        let part = pow_bisim(l, &[a.clone(), b.clone()], 3, &probes).unwrap();
        assert!(part.related(&a, &b));
        let single = pow_bisim(l, &[a.clone()], 2, &probes).unwrap();
        assert_eq!(single.blocks.len(), 1);
    }

    #[test]
    fn deeper_refinement_refines() {
        let l = LangId::Xtcl;
        let probes = language(l).probes(2);
        let universe: Vec<Term> = ["e", "I e", "I (I e)", "I (I (I e))", "K e e", "K'(e) e"].iter().map(|s| parse(l, s)).collect();
        let model = language(l).operational();
        let p1 = refine(&model, &universe, 1, &probes, BagMatching::Masses, UNIVERSE_CAP).unwrap();
        let p3 = refine(&model, &universe, 3, &probes, BagMatching::Masses, UNIVERSE_CAP).unwrap();
        assert!(p3.refines(&p1));
        assert!(p3.blocks.len() > p1.blocks.len());
    }
}
