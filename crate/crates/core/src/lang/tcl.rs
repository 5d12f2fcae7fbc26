//! Typed combinatory logic with unit (xTCL) and its probabilistic
//! extension with fair choice (xPTCL).

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::syntax::{is_metavariable, Raw};
use crate::error::{Error, Result};
use crate::kernel::{enumerate_terms, Family, OperatorDecl, Signature, Sort, Term, Ty};

const FAMILIES: &[Family] = &[
    fam("e", 0, 1),
    fam("S", 0, 1),
    fam("K", 0, 1),
    fam("I", 0, 1),
    fam("S'", 1, 1),
    fam("K'", 1, 1),
    fam("S''", 2, 1),
    fam("app", 2, 0),
];

const PROB_FAMILIES: &[Family] = &[
    fam("e", 0, 1),
    fam("S", 0, 1),
    fam("K", 0, 1),
    fam("I", 0, 1),
    fam("S'", 1, 1),
    fam("K'", 1, 1),
    fam("S''", 2, 1),
    fam("app", 2, 0),
    fam("plus", 2, 1),
];

const fn fam(name: &'static str, arity: usize, rank: u32) -> Family {
    Family {
        name,
        arity,
        rank,
        indexed: false,
    }
}

/// The Ty-sorted signature. Operators are instantiated per type; hidden
/// types (the argument type of `app`, the middle type of `S''`) range over
/// types of complexity at most `bound` when listing operators into a sort.
#[derive(Debug)]
pub struct TclSig {
    pub probabilistic: bool,
    pub bound: u32,
    cache: Mutex<HashMap<Sort, Vec<Arc<OperatorDecl>>>>,
}

impl TclSig {
    pub fn new(probabilistic: bool) -> TclSig {
        TclSig::with_bound(probabilistic, 2)
    }

    pub fn with_bound(probabilistic: bool, bound: u32) -> TclSig {
        TclSig {
            probabilistic,
            bound,
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn rank(&self, family: &str) -> u32 {
        if family == "app" {
            0
        } else {
            1
        }
    }

    fn decl(&self, family: &str, args: &[&Ty], res: Ty) -> Arc<OperatorDecl> {
        Arc::new(OperatorDecl::new(
            family,
            args.iter().map(|t| Sort::Ty((*t).clone())).collect(),
            Sort::Ty(res),
            self.rank(family),
        ))
    }

    /// `I : τ → τ`
    pub fn i(&self, t: &Ty) -> Arc<OperatorDecl> {
        self.decl("I", &[], arr(t, t))
    }

    /// `K : τ₁ → τ₂ → τ₁`
    pub fn k(&self, a: &Ty, b: &Ty) -> Arc<OperatorDecl> {
        self.decl("K", &[], arr(a, &arr(b, a)))
    }

    /// `K' : τ₁ ⇒ τ₂ → τ₁`
    pub fn k1(&self, a: &Ty, b: &Ty) -> Arc<OperatorDecl> {
        self.decl("K'", &[a], arr(b, a))
    }

    /// `S : (τ₁ → τ₂ → τ₃) → (τ₁ → τ₂) → τ₁ → τ₃`
    pub fn s(&self, a: &Ty, b: &Ty, c: &Ty) -> Arc<OperatorDecl> {
        let (f, g, h) = s_parts(a, b, c);
        self.decl("S", &[], arr(&f, &arr(&g, &h)))
    }

    pub fn s1(&self, a: &Ty, b: &Ty, c: &Ty) -> Arc<OperatorDecl> {
        let (f, g, h) = s_parts(a, b, c);
        self.decl("S'", &[&f], arr(&g, &h))
    }

    pub fn s2(&self, a: &Ty, b: &Ty, c: &Ty) -> Arc<OperatorDecl> {
        let (f, g, h) = s_parts(a, b, c);
        self.decl("S''", &[&f, &g], h)
    }

    pub fn app(&self, a: &Ty, b: &Ty) -> Arc<OperatorDecl> {
        self.decl("app", &[&arr(a, b), a], b.clone())
    }

    pub fn e(&self) -> Arc<OperatorDecl> {
        self.decl("e", &[], Ty::Unit)
    }

    pub fn plus(&self, t: &Ty) -> Arc<OperatorDecl> {
        self.decl("plus", &[t, t], t.clone())
    }

    fn compute_into(&self, t: &Ty) -> Vec<Arc<OperatorDecl>> {
        let mut out = Vec::new();
        let hidden = Ty::all_up_to(self.bound);
        if *t == Ty::Unit {
            out.push(self.e());
        }
        if let Some((a, b)) = t.split_arrow() {
            if a == b {
                out.push(self.i(a));
            }
            if let Some((b2, a2)) = b.split_arrow() {
                if a2 == a {
                    out.push(self.k(a, b2));
                }
            }
            out.push(self.k1(b, a));
            // S : (a→b→c)→(a→b)→a→c
            if let Some((f, rest)) = t.split_arrow() {
                if let (Some((a1, bc)), Some((g, h))) = (f.split_arrow(), rest.split_arrow()) {
                    if let (Some((b1, c1)), Some((a2, b2)), Some((a3, c3))) =
                        (bc.split_arrow(), g.split_arrow(), h.split_arrow())
                    {
                        if a1 == a2 && a1 == a3 && b1 == b2 && c1 == c3 {
                            out.push(self.s(a1, b1, c1));
                        }
                    }
                }
            }
            // S'(a→b→c) : (a→b)→a→c
            if let (Some((a1, b1)), Some((a2, c2))) = (a.split_arrow(), b.split_arrow()) {
                if a1 == a2 {
                    out.push(self.s1(a1, b1, c2));
                }
            }
            // S''(a→b→c, a→b) : a→c
            for h in &hidden {
                out.push(self.s2(a, h, b));
            }
        }
        for h in &hidden {
            out.push(self.app(h, t));
        }
        if self.probabilistic {
            out.push(self.plus(t));
        }
        out
    }

    /// Closed terms of type `t` with at most `size` nodes.
    pub fn probes_for_type(&self, t: &Ty, size: usize) -> Result<Vec<Term>> {
        let terms = enumerate_terms(self, &Sort::Ty(t.clone()), size);
        if terms.is_empty() {
            return Err(Error::UninhabitedAtSize {
                sort: Sort::Ty(t.clone()),
                size,
            });
        }
        Ok(terms)
    }
}

fn arr(a: &Ty, b: &Ty) -> Ty {
    Ty::arrow(a.clone(), b.clone())
}

fn s_parts(a: &Ty, b: &Ty, c: &Ty) -> (Ty, Ty, Ty) {
    (arr(a, &arr(b, c)), arr(a, b), arr(a, c))
}

fn ill(msg: impl Into<String>) -> Error {
    Error::IllTyped(msg.into())
}

fn ty_of(s: &Sort) -> Result<&Ty> {
    s.as_ty().ok_or_else(|| ill(format!("{s} is not a type")))
}

impl Signature for TclSig {
    fn name(&self) -> &str {
        if self.probabilistic {
            "xptcl"
        } else {
            "xtcl"
        }
    }

    fn families(&self) -> &[Family] {
        if self.probabilistic {
            PROB_FAMILIES
        } else {
            FAMILIES
        }
    }

    fn operators_into(&self, sort: &Sort) -> Vec<Arc<OperatorDecl>> {
        let Some(t) = sort.as_ty() else { return Vec::new() };
        let mut cache = self.cache.lock().expect("operator cache");
        cache.entry(sort.clone()).or_insert_with(|| self.compute_into(t)).clone()
    }

    fn instantiate(
        &self,
        family: &str,
        _index: Option<u32>,
        args: &[Sort],
        result: Option<&Sort>,
    ) -> Result<Arc<OperatorDecl>> {
        let args: Vec<&Ty> = args.iter().map(ty_of).collect::<Result<_>>()?;
        let res = result.map(ty_of).transpose()?;
        let need_res = || res.ok_or_else(|| ill(format!("cannot infer the type of {family}")));
        let op = match (family, args.as_slice()) {
            ("e", []) => self.e(),
            ("I", []) => {
                let (a, _) = need_res()?.split_arrow().ok_or_else(|| ill("I at a non-arrow type"))?;
                self.i(a)
            }
            ("K", []) => {
                let (a, rest) = need_res()?.split_arrow().ok_or_else(|| ill("K at a non-arrow type"))?;
                let (b, _) = rest.split_arrow().ok_or_else(|| ill("K at a non-arrow type"))?;
                self.k(a, b)
            }
            ("S", []) => {
                let t = need_res()?;
                let (f, _) = t.split_arrow().ok_or_else(|| ill("S at a non-arrow type"))?;
                let (a, bc) = f.split_arrow().ok_or_else(|| ill("S at a bad type"))?;
                let (b, c) = bc.split_arrow().ok_or_else(|| ill("S at a bad type"))?;
                self.s(a, b, c)
            }
            ("K'", [a]) => {
                let (b, _) = need_res()?.split_arrow().ok_or_else(|| ill("K' at a non-arrow type"))?;
                self.k1(a, b)
            }
            ("S'", [f]) => {
                let (a, bc) = f.split_arrow().ok_or_else(|| ill("S' argument is not a function"))?;
                let (b, c) = bc.split_arrow().ok_or_else(|| ill("S' argument has too few arrows"))?;
                self.s1(a, b, c)
            }
            ("S''", [f, _]) => {
                let (a, bc) = f.split_arrow().ok_or_else(|| ill("S'' argument is not a function"))?;
                let (b, c) = bc.split_arrow().ok_or_else(|| ill("S'' argument has too few arrows"))?;
                self.s2(a, b, c)
            }
            ("app", [f, _]) => {
                let (a, b) = f.split_arrow().ok_or_else(|| ill(format!("applying a term of type {f}")))?;
                self.app(a, b)
            }
            ("plus", [a, _]) if self.probabilistic => self.plus(a),
            _ if self.family(family).is_none() => return Err(Error::UnknownOperator(family.to_string())),
            _ => {
                return Err(Error::ArityMismatch {
                    op: family.to_string(),
                    expected: self.family(family).map_or(0, |f| f.arity),
                    found: args.len(),
                })
            }
        };
        for (i, (want, got)) in op.arg_sorts.iter().zip(&args).enumerate() {
            if want.as_ty() != Some(*got) {
                return Err(Error::SortMismatch {
                    context: format!("argument {i} of {family}"),
                    expected: want.clone(),
                    found: Sort::Ty((*got).clone()),
                });
            }
        }
        if let Some(r) = res {
            if op.result_sort.as_ty() != Some(r) {
                return Err(Error::SortMismatch {
                    context: format!("result of {family}"),
                    expected: Sort::Ty(r.clone()),
                    found: op.result_sort.clone(),
                });
            }
        }
        Ok(op)
    }

    fn function_sorts(&self, sort: &Sort) -> Option<(Sort, Sort)> {
        let (a, b) = sort.as_ty()?.split_arrow()?;
        Some((Sort::Ty(a.clone()), Sort::Ty(b.clone())))
    }

    fn has_terminal(&self, sort: &Sort) -> bool {
        *sort == Sort::unit()
    }
}

// ------------------------------------------------------------- inference

#[derive(Clone, Debug)]
enum Tv {
    Var(usize),
    Unit,
    Arr(Box<Tv>, Box<Tv>),
}

fn tv_arr(a: Tv, b: Tv) -> Tv {
    Tv::Arr(Box::new(a), Box::new(b))
}

fn tv_of(t: &Ty) -> Tv {
    match t {
        Ty::Unit => Tv::Unit,
        Ty::Arrow(a, b) => tv_arr(tv_of(a), tv_of(b)),
    }
}

#[derive(Default)]
struct Unifier {
    binding: Vec<Option<Tv>>,
}

impl Unifier {
    fn fresh(&mut self) -> Tv {
        self.binding.push(None);
        Tv::Var(self.binding.len() - 1)
    }

    fn walk(&self, t: &Tv) -> Tv {
        match t {
            Tv::Var(v) => match &self.binding[*v] {
                Some(b) => self.walk(b),
                None => t.clone(),
            },
            _ => t.clone(),
        }
    }

    fn occurs(&self, v: usize, t: &Tv) -> bool {
        match self.walk(t) {
            Tv::Var(w) => v == w,
            Tv::Unit => false,
            Tv::Arr(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
        }
    }

    fn unify(&mut self, a: &Tv, b: &Tv) -> bool {
        match (self.walk(a), self.walk(b)) {
            (Tv::Var(v), Tv::Var(w)) if v == w => true,
            (Tv::Var(v), t) | (t, Tv::Var(v)) => {
                if self.occurs(v, &t) {
                    return false;
                }
                self.binding[v] = Some(t);
                true
            }
            (Tv::Unit, Tv::Unit) => true,
            (Tv::Arr(a1, b1), Tv::Arr(a2, b2)) => self.unify(&a1, &a2) && self.unify(&b1, &b2),
            _ => false,
        }
    }

    /// Resolves a type, defaulting unconstrained variables to `unit`.
    fn zonk(&self, t: &Tv) -> Ty {
        match self.walk(t) {
            Tv::Var(_) | Tv::Unit => Ty::Unit,
            Tv::Arr(a, b) => Ty::arrow(self.zonk(&a), self.zonk(&b)),
        }
    }
}

enum Node {
    Leaf { name: String, params: Vec<Tv> },
    Meta(String),
    Op { family: &'static str, params: Vec<Tv>, kids: Vec<Elab> },
}

struct Elab {
    node: Node,
    ty: Tv,
}

struct Infer<'a> {
    sig: &'a TclSig,
    u: Unifier,
    metas: HashMap<String, Tv>,
}

impl Infer<'_> {
    fn expect(&mut self, pos: usize, what: &str, want: &Tv, got: &Tv) -> Result<()> {
        if self.u.unify(want, got) {
            Ok(())
        } else {
            Err(ill(format!(
                "at {pos}: {what} has type {} but {} was expected",
                self.u.zonk(got),
                self.u.zonk(want)
            )))
        }
    }

    fn params(&mut self, n: usize, given: &Option<Vec<Ty>>, name: &str, pos: usize) -> Result<Vec<Tv>> {
        match given {
            None => Ok((0..n).map(|_| self.u.fresh()).collect()),
            Some(tys) if tys.len() == n => Ok(tys.iter().map(tv_of).collect()),
            Some(tys) => Err(Error::parse(
                pos,
                format!("{name} takes {n} type arguments, {} given", tys.len()),
            )),
        }
    }

    fn elab(&mut self, r: &Raw) -> Result<Elab> {
        match r {
            Raw::Name { name, types, pos } => {
                if is_metavariable(name) {
                    if types.is_some() {
                        return Err(Error::parse(*pos, "metavariables take no type arguments"));
                    }
                    let ty = match self.metas.get(name) {
                        Some(t) => t.clone(),
                        None => {
                            let t = self.u.fresh();
                            self.metas.insert(name.clone(), t.clone());
                            t
                        }
                    };
                    return Ok(Elab {
                        node: Node::Meta(name.clone()),
                        ty,
                    });
                }
                let (n, build): (usize, fn(&[Tv]) -> Tv) = match name.as_str() {
                    "e" => (0, |_| Tv::Unit),
                    "I" => (1, |p| tv_arr(p[0].clone(), p[0].clone())),
                    "K" => (2, |p| tv_arr(p[0].clone(), tv_arr(p[1].clone(), p[0].clone()))),
                    "S" => (3, |p| {
                        let (a, b, c) = (&p[0], &p[1], &p[2]);
                        tv_arr(
                            tv_arr(a.clone(), tv_arr(b.clone(), c.clone())),
                            tv_arr(tv_arr(a.clone(), b.clone()), tv_arr(a.clone(), c.clone())),
                        )
                    }),
                    _ => return Err(Error::UnknownOperator(name.clone())),
                };
                let params = self.params(n, types, name, *pos)?;
                let ty = build(&params);
                Ok(Elab {
                    node: Node::Leaf {
                        name: name.clone(),
                        params,
                    },
                    ty,
                })
            }
            Raw::Primed { name, args, pos } => {
                let kids = args.iter().map(|a| self.elab(a)).collect::<Result<Vec<_>>>()?;
                let arity = |n: usize| -> Result<()> {
                    if kids.len() == n {
                        Ok(())
                    } else {
                        Err(Error::ArityMismatch {
                            op: name.clone(),
                            expected: n,
                            found: kids.len(),
                        })
                    }
                };
                let (a, b, c) = (self.u.fresh(), self.u.fresh(), self.u.fresh());
                let abc = tv_arr(a.clone(), tv_arr(b.clone(), c.clone()));
                let ab = tv_arr(a.clone(), b.clone());
                let ac = tv_arr(a.clone(), c.clone());
                let (family, ty) = match name.as_str() {
                    "K'" => {
                        arity(1)?;
                        self.expect(*pos, "the argument of K'", &a, &kids[0].ty)?;
                        ("K'", tv_arr(b.clone(), a.clone()))
                    }
                    "S'" => {
                        arity(1)?;
                        self.expect(*pos, "the argument of S'", &abc, &kids[0].ty)?;
                        ("S'", tv_arr(ab.clone(), ac.clone()))
                    }
                    "S''" => {
                        arity(2)?;
                        self.expect(*pos, "the first argument of S''", &abc, &kids[0].ty)?;
                        self.expect(args[1].pos(), "the second argument of S''", &ab, &kids[1].ty)?;
                        ("S''", ac.clone())
                    }
                    _ => return Err(Error::UnknownOperator(name.clone())),
                };
                Ok(Elab {
                    node: Node::Op {
                        family,
                        params: vec![a, b, c],
                        kids,
                    },
                    ty,
                })
            }
            Raw::App(f, x) => {
                let (fe, xe) = (self.elab(f)?, self.elab(x)?);
                let (a, b) = (self.u.fresh(), self.u.fresh());
                self.expect(f.pos(), "the applied term", &tv_arr(a.clone(), b.clone()), &fe.ty)?;
                self.expect(x.pos(), "the argument", &a, &xe.ty)?;
                Ok(Elab {
                    node: Node::Op {
                        family: "app",
                        params: vec![a, b.clone()],
                        kids: vec![fe, xe],
                    },
                    ty: b,
                })
            }
            Raw::Plus(p, q) => {
                if !self.sig.probabilistic {
                    return Err(Error::UnknownOperator("(+)".into()));
                }
                let (pe, qe) = (self.elab(p)?, self.elab(q)?);
                self.expect(q.pos(), "the right summand", &pe.ty, &qe.ty)?;
                let ty = pe.ty.clone();
                Ok(Elab {
                    node: Node::Op {
                        family: "plus",
                        params: vec![ty.clone()],
                        kids: vec![pe, qe],
                    },
                    ty,
                })
            }
            Raw::Par(..) => Err(Error::UnknownOperator("||".into())),
        }
    }

    fn build(&self, e: &Elab) -> Result<Term> {
        let z = |i: usize, ps: &[Tv]| self.u.zonk(&ps[i]);
        match &e.node {
            Node::Meta(name) => Ok(Term::meta(name, Sort::Ty(self.u.zonk(&e.ty)))),
            Node::Leaf { name, params } => {
                let op = match name.as_str() {
                    "e" => self.sig.e(),
                    "I" => self.sig.i(&z(0, params)),
                    "K" => self.sig.k(&z(0, params), &z(1, params)),
                    _ => self.sig.s(&z(0, params), &z(1, params), &z(2, params)),
                };
                Term::constant(&op)
            }
            Node::Op { family, params, kids } => {
                let args = kids.iter().map(|k| self.build(k)).collect::<Result<Vec<_>>>()?;
                let op = match *family {
                    "K'" => self.sig.k1(&z(0, params), &z(1, params)),
                    "S'" => self.sig.s1(&z(0, params), &z(1, params), &z(2, params)),
                    "S''" => self.sig.s2(&z(0, params), &z(1, params), &z(2, params)),
                    "app" => self.sig.app(&z(0, params), &z(1, params)),
                    _ => self.sig.plus(&z(0, params)),
                };
                Term::make(&op, args)
            }
        }
    }
}

/// Infers the unique most general typing of a raw term and elaborates it,
/// resolving type variables left open to `unit`.
pub fn elaborate(sig: &TclSig, raw: &Raw) -> Result<Term> {
    let mut inf = Infer {
        sig,
        u: Unifier::default(),
        metas: HashMap::new(),
    };
    let e = inf.elab(raw)?;
    inf.build(&e)
}

/// The type of a raw term, as elaborated.
pub fn typecheck(sig: &TclSig, raw: &Raw) -> Result<Ty> {
    let t = elaborate(sig, raw)?;
    Ok(t.sort().as_ty().cloned().expect("typed signature"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::syntax::parse_raw;

    fn sig() -> TclSig {
        TclSig::new(false)
    }

    fn ty(src: &str) -> Result<Ty> {
        typecheck(&sig(), &parse_raw(src)?)
    }

    #[test]
    fn typing_examples() {
        assert_eq!(ty("e").unwrap(), Ty::Unit);
        assert_eq!(ty("I e").unwrap(), Ty::Unit);
        assert!(matches!(ty("e e"), Err(Error::IllTyped(_))));
        assert_eq!(ty("K e").unwrap(), Ty::arrow(Ty::Unit, Ty::Unit));
        assert_eq!(ty("S K K e").unwrap(), Ty::Unit);
    }

    #[test]
    fn annotations_fix_hidden_types() {
        let t = elaborate(&sig(), &parse_raw("K[unit, unit -> unit] e I").unwrap()).unwrap();
        assert_eq!(t.sort(), &Sort::unit());
        assert!(matches!(ty("I[unit] I"), Err(Error::IllTyped(_))));
    }

    #[test]
    fn self_application_is_rejected() {
        assert!(matches!(ty("S I I"), Err(Error::IllTyped(_))));
    }

    #[test]
    fn operators_into_unit() {
        let s = sig();
        let ops = s.operators_into(&Sort::unit());
        let names: Vec<String> = ops.iter().map(|o| o.family.to_string()).collect();
        assert!(names.contains(&"e".to_string()));
        assert!(names.contains(&"app".to_string()));
        assert!(!names.contains(&"I".to_string()));
    }

    #[test]
    fn probes_per_type() {
        let s = sig();
        let unit = s.probes_for_type(&Ty::Unit, 1).unwrap();
        assert_eq!(unit.len(), 1);
        let fun = s.probes_for_type(&Ty::arrow(Ty::Unit, Ty::Unit), 1).unwrap();
        assert_eq!(fun.len(), 1);
        assert_eq!(fun[0].op().unwrap().family.as_ref(), "I");
        assert!(matches!(s.probes_for_type(&Ty::Unit, 0), Err(Error::UninhabitedAtSize { .. })));
    }

    #[test]
    fn enumeration_is_well_typed_and_sized() {
        let s = sig();
        let terms = enumerate_terms(&s, &Sort::unit(), 3);
        assert!(terms.iter().all(|t| t.sort() == &Sort::unit() && t.size() <= 3));
        assert!(terms.iter().any(|t| format!("{t:?}") == "app(I, e)"));
    }
}
