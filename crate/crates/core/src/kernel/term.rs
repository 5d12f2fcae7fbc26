use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::Sort;
use crate::error::{Error, Result};

/// An instantiated operator of a sorted signature.
///
/// Operator identity is the whole declaration: the same family at different
/// sorts gives different operators.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct OperatorDecl {
    pub family: Arc<str>,
    /// Extra discriminator for indexed families (the variable index of `var`).
    pub index: Option<u32>,
    pub arg_sorts: Vec<Sort>,
    pub result_sort: Sort,
    pub rank: u32,
}

impl OperatorDecl {
    pub fn new(family: &str, arg_sorts: Vec<Sort>, result_sort: Sort, rank: u32) -> Self {
        OperatorDecl {
            family: family.into(),
            index: None,
            arg_sorts,
            result_sort,
            rank,
        }
    }

    pub fn with_index(mut self, index: u32) -> Self {
        self.index = Some(index);
        self
    }

    pub fn arity(&self) -> usize {
        self.arg_sorts.len()
    }
}

impl PartialOrd for OperatorDecl {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OperatorDecl {
    fn cmp(&self, other: &Self) -> Ordering {
        self.family
            .cmp(&other.family)
            .then_with(|| self.index.cmp(&other.index))
            .then_with(|| self.result_sort.cmp(&other.result_sort))
            .then_with(|| self.arg_sorts.cmp(&other.arg_sorts))
            .then_with(|| self.rank.cmp(&other.rank))
    }
}

impl fmt::Display for OperatorDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}{}", self.family, i),
            None => write!(f, "{}", self.family),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Head {
    Op(Arc<OperatorDecl>),
    /// A metavariable of a declared sort; only meaningful inside open terms.
    Meta(Arc<str>),
}

struct Node {
    head: Head,
    children: Vec<Term>,
    sort: Sort,
    size: usize,
    closed: bool,
    hash: u64,
}

/// An immutable, well-sorted syntax tree. Cloning is cheap.
#[derive(Clone)]
pub struct Term(Arc<Node>);

impl Term {
    /// Builds `op(args)`, checking arity and argument sorts.
    pub fn make(op: &Arc<OperatorDecl>, args: Vec<Term>) -> Result<Term> {
        if op.arity() != args.len() {
            return Err(Error::ArityMismatch {
                op: op.to_string(),
                expected: op.arity(),
                found: args.len(),
            });
        }
        for (i, (want, arg)) in op.arg_sorts.iter().zip(&args).enumerate() {
            if want != arg.sort() {
                return Err(Error::SortMismatch {
                    context: format!("argument {i} of {op}"),
                    expected: want.clone(),
                    found: arg.sort().clone(),
                });
            }
        }
        Ok(Term::raw(Head::Op(op.clone()), args, op.result_sort.clone()))
    }

    pub fn constant(op: &Arc<OperatorDecl>) -> Result<Term> {
        Term::make(op, Vec::new())
    }

    pub fn meta(name: &str, sort: Sort) -> Term {
        Term::raw(Head::Meta(name.into()), Vec::new(), sort)
    }

    fn raw(head: Head, children: Vec<Term>, sort: Sort) -> Term {
        let size = 1 + children.iter().map(Term::size).sum::<usize>();
        let closed = matches!(head, Head::Op(_)) && children.iter().all(Term::is_closed);
        let mut h = DefaultHasher::new();
        head.hash(&mut h);
        sort.hash(&mut h);
        for c in &children {
            c.0.hash.hash(&mut h);
        }
        Term(Arc::new(Node {
            head,
            children,
            sort,
            size,
            closed,
            hash: h.finish(),
        }))
    }

    pub fn head(&self) -> &Head {
        &self.0.head
    }

    /// The head operator, or `None` for a metavariable.
    pub fn op(&self) -> Option<&Arc<OperatorDecl>> {
        match &self.0.head {
            Head::Op(op) => Some(op),
            Head::Meta(_) => None,
        }
    }

    pub fn children(&self) -> &[Term] {
        &self.0.children
    }

    pub fn sort(&self) -> &Sort {
        &self.0.sort
    }

    /// Node count.
    pub fn size(&self) -> usize {
        self.0.size
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(Term::depth).max().unwrap_or(0)
    }

    pub fn is_closed(&self) -> bool {
        self.0.closed
    }

    pub fn ptr_eq(&self, other: &Term) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Checks that the term has no metavariables.
    pub fn ensure_closed(&self) -> Result<()> {
        if self.is_closed() {
            return Ok(());
        }
        match self.first_meta() {
            Some(name) => Err(Error::UnboundMetavariable(name.to_string())),
            None => Ok(()),
        }
    }

    fn first_meta(&self) -> Option<&str> {
        match &self.0.head {
            Head::Meta(name) => Some(name),
            Head::Op(_) => self.children().iter().find_map(Term::first_meta),
        }
    }

    /// Replaces metavariables according to `f` (identity where `f` declines).
    pub fn rename_metas(&self, f: &impl Fn(&str) -> Option<Term>) -> Term {
        match &self.0.head {
            Head::Meta(name) => f(name).unwrap_or_else(|| self.clone()),
            Head::Op(_) => {
                if self.is_closed() {
                    return self.clone();
                }
                let children = self.children().iter().map(|c| c.rename_metas(f)).collect();
                Term::raw(self.0.head.clone(), children, self.0.sort.clone())
            }
        }
    }

    /// Unique algebra morphism out of closed terms: evaluates `alg` bottom-up.
    pub fn fold<A>(&self, alg: &mut impl FnMut(&Arc<OperatorDecl>, Vec<A>) -> Result<A>) -> Result<A> {
        match &self.0.head {
            Head::Meta(name) => Err(Error::UnboundMetavariable(name.to_string())),
            Head::Op(op) => {
                let mut vals = Vec::with_capacity(self.children().len());
                for c in self.children() {
                    vals.push(c.fold(alg)?);
                }
                alg(op, vals)
            }
        }
    }

    /// Primitive recursion: like [`Term::fold`], but each step also sees the
    /// original child terms next to their results.
    pub fn primitive_recursion<A>(
        &self,
        step: &mut impl FnMut(&Arc<OperatorDecl>, Vec<(Term, A)>) -> Result<A>,
    ) -> Result<A> {
        match &self.0.head {
            Head::Meta(name) => Err(Error::UnboundMetavariable(name.to_string())),
            Head::Op(op) => {
                let mut pairs = Vec::with_capacity(self.children().len());
                for c in self.children() {
                    let r = c.primitive_recursion(step)?;
                    pairs.push((c.clone(), r));
                }
                step(op, pairs)
            }
        }
    }

    /// All subterms in pre-order, including the term itself.
    pub fn subterms(&self) -> Vec<Term> {
        let mut out = Vec::new();
        let mut stack = vec![self.clone()];
        while let Some(t) = stack.pop() {
            for c in t.children().iter().rev() {
                stack.push(c.clone());
            }
            out.push(t);
        }
        out
    }

    /// Replaces the subterm at `path` (child indices from the root).
    pub fn replace_at(&self, path: &[usize], with: Term) -> Result<Term> {
        match path.split_first() {
            None => {
                if with.sort() != self.sort() {
                    return Err(Error::SortMismatch {
                        context: "subterm replacement".into(),
                        expected: self.sort().clone(),
                        found: with.sort().clone(),
                    });
                }
                Ok(with)
            }
            Some((&i, rest)) => {
                let mut children = self.children().to_vec();
                let slot = children
                    .get_mut(i)
                    .ok_or_else(|| Error::Invalid(format!("no child {i}")))?;
                *slot = slot.replace_at(rest, with)?;
                Ok(Term::raw(self.0.head.clone(), children, self.0.sort.clone()))
            }
        }
    }

    /// Paths of all subterms, pre-order, paired with the subterm.
    pub fn positions(&self) -> Vec<(Vec<usize>, Term)> {
        let mut out = Vec::new();
        fn go(t: &Term, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, Term)>) {
            out.push((path.clone(), t.clone()));
            for (i, c) in t.children().iter().enumerate() {
                path.push(i);
                go(c, path, out);
                path.pop();
            }
        }
        go(self, &mut Vec::new(), &mut out);
        out
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        self.0.hash == other.0.hash
            && self.0.size == other.0.size
            && self.0.head == other.0.head
            && self.0.sort == other.0.sort
            && self.0.children == other.0.children
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash.hash(state);
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Enumeration order: size, then head (operators by family name before
/// metavariables), then children lexicographically.
impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.ptr_eq(other) {
            return Ordering::Equal;
        }
        self.size()
            .cmp(&other.size())
            .then_with(|| match (self.head(), other.head()) {
                (Head::Op(a), Head::Op(b)) => a.cmp(b),
                (Head::Op(_), Head::Meta(_)) => Ordering::Less,
                (Head::Meta(_), Head::Op(_)) => Ordering::Greater,
                (Head::Meta(a), Head::Meta(b)) => a.cmp(b),
            })
            .then_with(|| self.sort().cmp(other.sort()))
            .then_with(|| self.children().cmp(other.children()))
    }
}

/// Generic prefix rendering `f(a, b)`; languages provide their own surface printers.
impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.head() {
            Head::Meta(name) => write!(f, "?{name}"),
            Head::Op(op) => {
                write!(f, "{op}")?;
                if !self.children().is_empty() {
                    write!(f, "(")?;
                    for (i, c) in self.children().iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{c:?}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}
