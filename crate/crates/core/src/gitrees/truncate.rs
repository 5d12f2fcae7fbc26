use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::probes::ProbeSet;
use super::tree::{Entry, Tree, TreeBag, TreeNode};
use crate::behavior::{Bag, Behavior, Step, StepTag, Weight};
use crate::engine::{Carrier, Model};
use crate::error::{Error, Result};
use crate::kernel::Sort;

/// Depth-bounded observation of a model's states.
///
/// Depth counts reduct, function and substitution edges. Function summands
/// are tabulated on the probes of their domain sort. For guarded models
/// probes that agree up to the child depth are merged into one row, keyed by
/// the least probe index of the class; later-modality discipline makes the
/// omitted rows redundant.
pub struct Truncator<M: Model> {
    model: Arc<M>,
    probes: ProbeSet<M::C>,
    collapse: bool,
    iteration: Option<u32>,
    memo: Mutex<HashMap<(M::C, usize), Tree>>,
    reps: Mutex<HashMap<(Sort, usize), Arc<Vec<usize>>>>,
}

impl<M: Model> fmt::Debug for Truncator<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Truncator(collapse: {}, iteration: {:?}, cached: {})",
            self.collapse,
            self.iteration,
            self.memo.lock().expect("memo lock").len()
        )
    }
}

impl<M: Model> Truncator<M> {
    pub fn new(model: Arc<M>, probes: ProbeSet<M::C>) -> Truncator<M> {
        let collapse = model.guarded();
        Truncator {
            model,
            probes,
            collapse,
            iteration: None,
            memo: Mutex::new(HashMap::new()),
            reps: Mutex::new(HashMap::new()),
        }
    }

    /// Tabulate every probe, even for guarded models.
    pub fn without_collapse(mut self) -> Self {
        self.collapse = false;
        self
    }

    /// Observe states through the `n`-th approximant of the typed tower:
    /// iteration 0 sees only the terminal object, and iteration `n > 0`
    /// leaves function summands whose domain type has complexity `≥ n`
    /// untabulated.
    pub fn at_iteration(mut self, n: u32) -> Self {
        self.iteration = Some(n);
        self
    }

    pub fn model(&self) -> &Arc<M> {
        &self.model
    }

    pub fn probes(&self) -> &ProbeSet<M::C> {
        &self.probes
    }

    pub fn cached(&self) -> usize {
        self.memo.lock().expect("memo lock").len()
    }

    pub fn clear_cache(&self) {
        self.memo.lock().expect("memo lock").clear();
    }

    pub fn truncate(&self, x: &M::C, depth: usize) -> Result<Tree> {
        if self.iteration == Some(0) {
            return Ok(Tree::new(TreeNode::Unit));
        }
        let key = (x.clone(), depth);
        if let Some(t) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(t.clone());
        }
        let b = self.model.behavior(x)?;
        let t = self.truncate_behavior(&b, x.sort(), depth)?;
        let mut memo = self.memo.lock().expect("memo lock");
        Ok(memo.entry(key).or_insert(t).clone())
    }

    /// Truncation of a behaviour of a state at `sort`.
    pub fn truncate_behavior(&self, b: &Behavior<M::C>, sort: &Sort, depth: usize) -> Result<Tree> {
        if self.iteration == Some(0) {
            return Ok(Tree::new(TreeNode::Unit));
        }
        let observe_subst = matches!(sort, Sort::Ctx(m) if *m > 0) && b.subst.is_some();
        if depth == 0 {
            if matches!(b.step, Step::Terminal) && !observe_subst {
                return Ok(Tree::terminal());
            }
            let nonempty = match &b.step {
                Step::Reduct(Bag::Pow(v)) => Some(!v.is_empty()),
                _ => None,
            };
            return Ok(Tree::new(TreeNode::Cut {
                step: b.tag(),
                nonempty,
            }));
        }
        let subst = match (&b.subst, observe_subst) {
            (Some(s), true) => {
                let mut rows = Vec::new();
                for (i, env) in self.probes.envs(sort)?.iter().enumerate() {
                    rows.push(Entry {
                        probe: i,
                        tree: self.truncate(&s.apply(env)?, depth - 1)?,
                    });
                }
                Some(rows)
            }
            _ => None,
        };
        let node = match &b.step {
            Step::Terminal => TreeNode::Terminal { subst },
            Step::Reduct(bag) => TreeNode::Reduct {
                bag: match bag {
                    Bag::Det(y) => TreeBag::Det {
                        next: self.truncate(y, depth - 1)?,
                    },
                    Bag::Dist(v) => TreeBag::dist(
                        v.iter()
                            .map(|(y, w)| Ok((self.truncate(y, depth - 1)?, w.clone())))
                            .collect::<Result<Vec<_>>>()?,
                    ),
                    Bag::Pow(v) => TreeBag::set(
                        v.iter()
                            .map(|y| self.truncate(y, depth - 1))
                            .collect::<Result<Vec<_>>>()?,
                    ),
                },
                subst,
            },
            Step::Function(f) => {
                let (dom, _) = self
                    .model
                    .signature()
                    .function_sorts(sort)
                    .ok_or_else(|| Error::Invalid(format!("function summand at sort {sort} without a function type")))?;
                if self.untabulated(&dom) {
                    TreeNode::Function {
                        table: Vec::new(),
                        subst,
                    }
                } else {
                    let pool = self.probes.get(&dom)?;
                    let mut table = Vec::new();
                    for &i in self.representatives(&dom, depth - 1)?.iter() {
                        table.push(Entry {
                            probe: i,
                            tree: self.truncate(&f.apply(&pool[i])?, depth - 1)?,
                        });
                    }
                    TreeNode::Function { table, subst }
                }
            }
        };
        Ok(Tree::new(node))
    }

    fn untabulated(&self, dom: &Sort) -> bool {
        match (self.iteration, dom) {
            (Some(n), Sort::Ty(t)) => t.complexity() >= n,
            _ => false,
        }
    }

    /// Indices of the probes tabulated at a function node whose rows are
    /// observed to `depth`.
    pub fn representatives(&self, sort: &Sort, depth: usize) -> Result<Arc<Vec<usize>>> {
        let key = (sort.clone(), depth);
        if let Some(r) = self.reps.lock().expect("reps lock").get(&key) {
            return Ok(r.clone());
        }
        let pool = self.probes.get(sort)?;
        let reps = if self.collapse {
            let mut seen: HashMap<Tree, usize> = HashMap::new();
            let mut reps = Vec::new();
            for (i, p) in pool.iter().enumerate() {
                let t = self.truncate(p, depth)?;
                if let std::collections::hash_map::Entry::Vacant(v) = seen.entry(t) {
                    v.insert(i);
                    reps.push(i);
                }
            }
            reps
        } else {
            (0..pool.len()).collect()
        };
        let reps = Arc::new(reps);
        let mut cache = self.reps.lock().expect("reps lock");
        Ok(cache.entry(key).or_insert(reps).clone())
    }

    /// Cuts a tree observed to `depth + k` back to `depth`. Agrees with
    /// truncating the state at `depth` directly.
    pub fn restrict(&self, tree: &Tree, sort: &Sort, depth: usize) -> Result<Tree> {
        if depth == 0 {
            return Ok(match tree.node() {
                TreeNode::Terminal { subst: None } | TreeNode::Unit => tree.clone(),
                TreeNode::Cut { .. } => tree.clone(),
                TreeNode::Reduct {
                    bag: TreeBag::Set { branches },
                    ..
                } => Tree::new(TreeNode::Cut {
                    step: StepTag::Reduct,
                    nonempty: Some(!branches.is_empty()),
                }),
                _ => Tree::new(TreeNode::Cut {
                    step: tree.tag().expect("tagged node"),
                    nonempty: None,
                }),
            });
        }
        let subst = |s: &Option<Vec<Entry>>| -> Result<Option<Vec<Entry>>> {
            s.as_ref()
                .map(|rows| {
                    rows.iter()
                        .map(|e| {
                            Ok(Entry {
                                probe: e.probe,
                                tree: self.restrict(&e.tree, &Sort::Ctx(0), depth - 1)?,
                            })
                        })
                        .collect()
                })
                .transpose()
        };
        let node = match tree.node() {
            TreeNode::Cut { .. } => {
                return Err(Error::Invalid("cannot restrict a tree to a depth it does not reach".into()))
            }
            TreeNode::Unit => TreeNode::Unit,
            TreeNode::Terminal { subst: s } => TreeNode::Terminal { subst: subst(s)? },
            TreeNode::Reduct { bag, subst: s } => TreeNode::Reduct {
                bag: match bag {
                    TreeBag::Det { next } => TreeBag::Det {
                        next: self.restrict(next, sort, depth - 1)?,
                    },
                    TreeBag::Dist { branches } => TreeBag::dist(
                        branches
                            .iter()
                            .map(|b| {
                                let w: Weight = b
                                    .weight
                                    .parse()
                                    .map_err(|_| Error::MalformedDistribution(b.weight.clone()))?;
                                Ok((self.restrict(&b.tree, sort, depth - 1)?, w))
                            })
                            .collect::<Result<Vec<_>>>()?,
                    ),
                    TreeBag::Set { branches } => TreeBag::set(
                        branches
                            .iter()
                            .map(|b| self.restrict(b, sort, depth - 1))
                            .collect::<Result<Vec<_>>>()?,
                    ),
                },
                subst: subst(s)?,
            },
            TreeNode::Function { table, subst: s } => {
                let (dom, cod) = self
                    .model
                    .signature()
                    .function_sorts(sort)
                    .ok_or_else(|| Error::Invalid(format!("no function type at sort {sort}")))?;
                let mut rows = Vec::new();
                if !table.is_empty() {
                    for &i in self.representatives(&dom, depth - 1)?.iter() {
                        let e = table
                            .iter()
                            .find(|e| e.probe == i)
                            .ok_or_else(|| Error::Invalid(format!("row for probe {i} missing")))?;
                        rows.push(Entry {
                            probe: i,
                            tree: self.restrict(&e.tree, &cod, depth - 1)?,
                        });
                    }
                }
                TreeNode::Function {
                    table: rows,
                    subst: subst(s)?,
                }
            }
        };
        Ok(Tree::new(node))
    }

    pub fn obs_equal(&self, x: &M::C, y: &M::C, depth: usize) -> Result<bool> {
        if x == y {
            return Ok(true);
        }
        Ok(self.truncate(x, depth)? == self.truncate(y, depth)?)
    }

    /// Least depth `k ≤ max_depth` at which the truncations differ.
    pub fn first_difference(&self, x: &M::C, y: &M::C, max_depth: usize) -> Result<Option<usize>> {
        if x == y {
            return Ok(None);
        }
        for k in 0..=max_depth {
            if self.truncate(x, k)? != self.truncate(y, k)? {
                return Ok(Some(k));
            }
        }
        Ok(None)
    }

    /// `2^-k` for the least differing depth `k`, `0` when the states agree up
    /// to `max_depth`.
    pub fn distance(&self, x: &M::C, y: &M::C, max_depth: usize) -> Result<Weight> {
        Ok(match self.first_difference(x, y, max_depth)? {
            None => Weight::zero(),
            Some(k) => dyadic(k),
        })
    }

    /// A path to the first point where the truncations disagree, at the
    /// least depth `k ≤ depth` where they do.
    pub fn witness(&self, x: &M::C, y: &M::C, depth: usize) -> Result<Option<Witness>> {
        let Some(k) = self.first_difference(x, y, depth)? else {
            return Ok(None);
        };
        let (a, b) = (self.truncate(x, k)?, self.truncate(y, k)?);
        Ok(tree_difference(&a, &b).map(|(path, left, right)| Witness {
            depth: k,
            path,
            left,
            right,
        }))
    }
}

/// `2^-k`.
pub fn dyadic(k: usize) -> Weight {
    Weight::new(BigInt::one(), BigInt::from(2u8).pow(k as u32))
}

/// One edge of a witness path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "move", rename_all = "lowercase")]
pub enum Move {
    /// The unique reduct.
    Step,
    /// Application to the probe with this index.
    Probe { index: usize },
    /// Substitution of the environment with this index.
    Env { index: usize },
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Step => write!(f, "→"),
            Move::Probe { index } => write!(f, "@p{index}"),
            Move::Env { index } => write!(f, "[u{index}]"),
        }
    }
}

/// Where and how two truncations disagree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub depth: usize,
    pub path: Vec<Move>,
    /// Observations at the end of the path.
    pub left: String,
    pub right: String,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "root tags {} vs {}", self.left, self.right)
        } else {
            let path: Vec<String> = self.path.iter().map(Move::to_string).collect();
            write!(f, "after {}: {} vs {}", path.join(" "), self.left, self.right)
        }
    }
}

fn shallow(t: &Tree) -> String {
    match t.node() {
        TreeNode::Reduct {
            bag: TreeBag::Dist { branches },
            ..
        } => {
            let parts: Vec<String> = branches.iter().map(|b| format!("{}: {}", b.weight, b.tree)).collect();
            format!("→[{}]", parts.join(", "))
        }
        TreeNode::Reduct {
            bag: TreeBag::Set { branches },
            ..
        } => {
            let parts: Vec<String> = branches.iter().map(Tree::to_string).collect();
            format!("→{{{}}}", parts.join(", "))
        }
        _ => match t.tag() {
            Some(tag) => tag.to_string(),
            None => "*".into(),
        },
    }
}

/// First disagreement between two trees, descending through deterministic
/// reducts, function rows and substitution rows.
pub fn tree_difference(a: &Tree, b: &Tree) -> Option<(Vec<Move>, String, String)> {
    if a == b {
        return None;
    }
    let here = || Some((Vec::new(), shallow(a), shallow(b)));
    let subst_rows = |t: &Tree| -> Option<Vec<Entry>> {
        match t.node() {
            TreeNode::Terminal { subst } | TreeNode::Reduct { subst, .. } | TreeNode::Function { subst, .. } => {
                subst.clone()
            }
            _ => None,
        }
    };
    if a.tag() != b.tag() {
        return here();
    }
    if let (Some(sa), Some(sb)) = (subst_rows(a), subst_rows(b)) {
        for (ea, eb) in sa.iter().zip(&sb) {
            if ea.tree != eb.tree {
                let (mut p, l, r) = tree_difference(&ea.tree, &eb.tree)?;
                p.insert(0, Move::Env { index: ea.probe });
                return Some((p, l, r));
            }
        }
    }
    match (a.node(), b.node()) {
        (
            TreeNode::Reduct {
                bag: TreeBag::Det { next: na },
                ..
            },
            TreeNode::Reduct {
                bag: TreeBag::Det { next: nb },
                ..
            },
        ) if na != nb => {
            let (mut p, l, r) = tree_difference(na, nb)?;
            p.insert(0, Move::Step);
            Some((p, l, r))
        }
        (TreeNode::Function { table: ta, .. }, TreeNode::Function { table: tb, .. }) => {
            for ea in ta {
                if let Some(eb) = tb.iter().find(|e| e.probe == ea.probe) {
                    if ea.tree != eb.tree {
                        let (mut p, l, r) = tree_difference(&ea.tree, &eb.tree)?;
                        p.insert(0, Move::Probe { index: ea.probe });
                        return Some((p, l, r));
                    }
                }
            }
            here()
        }
        _ => here(),
    }
}

/// Shape of a unit-sort state in `ℕ × O + {∞}`: the number of reduct steps
/// to an observation, or no observation within the fuel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum UnitShape {
    Halts { steps: usize, observation: StepTag },
    Divergent { fuel: usize },
}

impl fmt::Display for UnitShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitShape::Halts { steps, observation } => write!(f, "({steps}, {observation})"),
            UnitShape::Divergent { fuel } => write!(f, "divergent (no observation within {fuel} steps)"),
        }
    }
}

/// Follows deterministic reducts of `x` for at most `fuel` steps.
pub fn classify_unit<M: Model>(model: &M, x: &M::C, fuel: usize) -> Result<UnitShape> {
    let mut cur = x.clone();
    for steps in 0..=fuel {
        let b = model.behavior(&cur)?;
        match &b.step {
            Step::Reduct(Bag::Det(next)) => cur = next.clone(),
            Step::Reduct(_) => return Err(Error::Invalid("classification needs deterministic reducts".into())),
            Step::Terminal => {
                return Ok(UnitShape::Halts {
                    steps,
                    observation: StepTag::Terminal,
                })
            }
            Step::Function(_) => {
                return Ok(UnitShape::Halts {
                    steps,
                    observation: StepTag::Function,
                })
            }
        }
    }
    Ok(UnitShape::Divergent { fuel })
}

