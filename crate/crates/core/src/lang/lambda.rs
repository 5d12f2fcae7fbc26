//! The untyped λ-calculus over finite contexts, with de Bruijn levels:
//! a term in context `m` uses variables `0..m`, and `λ` binds variable `m`
//! of its body.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::{Family, Head, OperatorDecl, Signature, Sort, Term};

const FAMILIES: &[Family] = &[
    Family {
        name: "var",
        arity: 0,
        rank: 0,
        indexed: true,
    },
    Family {
        name: "lam",
        arity: 1,
        rank: 0,
        indexed: false,
    },
    Family {
        name: "app",
        arity: 2,
        rank: 0,
        indexed: false,
    },
];

/// Sorted by context size.
#[derive(Debug, Default)]
pub struct LambdaSig;

impl LambdaSig {
    pub fn var(j: u32, m: u32) -> Arc<OperatorDecl> {
        Arc::new(OperatorDecl::new("var", Vec::new(), Sort::Ctx(m), 0).with_index(j))
    }

    pub fn lam(m: u32) -> Arc<OperatorDecl> {
        Arc::new(OperatorDecl::new("lam", vec![Sort::Ctx(m + 1)], Sort::Ctx(m), 0))
    }

    pub fn app(m: u32) -> Arc<OperatorDecl> {
        Arc::new(OperatorDecl::new("app", vec![Sort::Ctx(m), Sort::Ctx(m)], Sort::Ctx(m), 0))
    }
}

fn ctx(s: &Sort) -> Result<u32> {
    match s {
        Sort::Ctx(m) => Ok(*m),
        other => Err(Error::SortMismatch {
            context: "λ-term".into(),
            expected: Sort::Ctx(0),
            found: other.clone(),
        }),
    }
}

impl Signature for LambdaSig {
    fn name(&self) -> &str {
        "lambda"
    }

    fn families(&self) -> &[Family] {
        FAMILIES
    }

    fn operators_into(&self, sort: &Sort) -> Vec<Arc<OperatorDecl>> {
        let Sort::Ctx(m) = *sort else { return Vec::new() };
        let mut out: Vec<_> = (0..m).map(|j| LambdaSig::var(j, m)).collect();
        out.push(LambdaSig::lam(m));
        out.push(LambdaSig::app(m));
        out
    }

    fn instantiate(
        &self,
        family: &str,
        index: Option<u32>,
        args: &[Sort],
        result: Option<&Sort>,
    ) -> Result<Arc<OperatorDecl>> {
        let op = match (family, args) {
            ("var", []) => {
                let m = ctx(result.ok_or_else(|| Error::Invalid("variable without a context".into()))?)?;
                let j = index.ok_or_else(|| Error::Invalid("variable without an index".into()))?;
                if j >= m {
                    return Err(Error::Invalid(format!("variable {j} outside context {m}")));
                }
                LambdaSig::var(j, m)
            }
            ("lam", [body]) => {
                let b = ctx(body)?;
                if b == 0 {
                    return Err(Error::Invalid("λ-body in the empty context".into()));
                }
                LambdaSig::lam(b - 1)
            }
            ("app", [f, x]) => {
                let (m, k) = (ctx(f)?, ctx(x)?);
                if m != k {
                    return Err(Error::SortMismatch {
                        context: "argument of app".into(),
                        expected: Sort::Ctx(m),
                        found: Sort::Ctx(k),
                    });
                }
                LambdaSig::app(m)
            }
            ("var" | "lam" | "app", _) => {
                return Err(Error::ArityMismatch {
                    op: family.into(),
                    expected: self.family(family).map_or(0, |f| f.arity),
                    found: args.len(),
                })
            }
            _ => return Err(Error::UnknownOperator(family.into())),
        };
        if let Some(r) = result {
            if *r != op.result_sort {
                return Err(Error::SortMismatch {
                    context: format!("result of {family}"),
                    expected: r.clone(),
                    found: op.result_sort.clone(),
                });
            }
        }
        Ok(op)
    }

    fn function_sorts(&self, sort: &Sort) -> Option<(Sort, Sort)> {
        matches!(sort, Sort::Ctx(_)).then(|| (sort.clone(), sort.clone()))
    }

    fn has_terminal(&self, sort: &Sort) -> bool {
        matches!(sort, Sort::Ctx(_))
    }
}

// ---------------------------------------------------------------- oracle

/// A λ-term body; the context size is carried alongside.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LamTerm {
    Var(u32),
    Lam(Box<LamTerm>),
    App(Box<LamTerm>, Box<LamTerm>),
}

impl LamTerm {
    pub fn lam(b: LamTerm) -> LamTerm {
        LamTerm::Lam(Box::new(b))
    }

    pub fn app(f: LamTerm, x: LamTerm) -> LamTerm {
        LamTerm::App(Box::new(f), Box::new(x))
    }

    /// Whether all variables are below `m` in context `m`.
    pub fn well_scoped(&self, m: u32) -> bool {
        match self {
            LamTerm::Var(i) => *i < m,
            LamTerm::Lam(b) => b.well_scoped(m + 1),
            LamTerm::App(f, x) => f.well_scoped(m) && x.well_scoped(m),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            LamTerm::Var(_) => 1,
            LamTerm::Lam(b) => 1 + b.size(),
            LamTerm::App(f, x) => 1 + f.size() + x.size(),
        }
    }

    /// Renames along `f : m → k`; binders extend `f` by `m ↦ k`.
    pub fn rename(&self, f: &[u32], k: u32) -> LamTerm {
        match self {
            LamTerm::Var(i) => LamTerm::Var(f[*i as usize]),
            LamTerm::Lam(b) => {
                let mut g = f.to_vec();
                g.push(k);
                LamTerm::lam(b.rename(&g, k + 1))
            }
            LamTerm::App(a, b) => LamTerm::app(a.rename(f, k), b.rename(f, k)),
        }
    }

    /// Weakening from context `m` into `m + 1`.
    pub fn weaken(&self, m: u32) -> LamTerm {
        let id: Vec<u32> = (0..m).collect();
        self.rename(&id, m + 1)
    }

    /// Simultaneous substitution of `env` (terms in context `l`) for the
    /// variables of context `m = env.len()`.
    pub fn subst(&self, m: u32, env: &[LamTerm], l: u32) -> Result<LamTerm> {
        if env.len() != m as usize {
            return Err(Error::EnvLengthMismatch {
                expected: m as usize,
                found: env.len(),
            });
        }
        Ok(self.subst_unchecked(env, l))
    }

    fn subst_unchecked(&self, env: &[LamTerm], l: u32) -> LamTerm {
        match self {
            LamTerm::Var(i) => env[*i as usize].clone(),
            LamTerm::Lam(b) => {
                let mut ext: Vec<LamTerm> = env.iter().map(|u| u.weaken(l)).collect();
                ext.push(LamTerm::Var(l));
                LamTerm::lam(b.subst_unchecked(&ext, l + 1))
            }
            LamTerm::App(f, x) => LamTerm::app(f.subst_unchecked(env, l), x.subst_unchecked(env, l)),
        }
    }

    /// One weak-head reduction step in context `m`.
    pub fn beta_step(&self, m: u32) -> Option<LamTerm> {
        match self {
            LamTerm::App(f, x) => match f.as_ref() {
                LamTerm::Lam(b) => {
                    let mut env: Vec<LamTerm> = (0..m).map(LamTerm::Var).collect();
                    env.push((**x).clone());
                    Some(b.subst_unchecked(&env, m))
                }
                _ => f.beta_step(m).map(|f2| LamTerm::App(Box::new(f2), x.clone())),
            },
            _ => None,
        }
    }

    pub fn to_term(&self, m: u32) -> Result<Term> {
        match self {
            LamTerm::Var(i) => {
                if *i >= m {
                    return Err(Error::Invalid(format!("variable {i} outside context {m}")));
                }
                Term::constant(&LambdaSig::var(*i, m))
            }
            LamTerm::Lam(b) => Term::make(&LambdaSig::lam(m), vec![b.to_term(m + 1)?]),
            LamTerm::App(f, x) => Term::make(&LambdaSig::app(m), vec![f.to_term(m)?, x.to_term(m)?]),
        }
    }

    /// Inverse of [`LamTerm::to_term`]; also returns the context size.
    pub fn from_term(t: &Term) -> Result<(LamTerm, u32)> {
        let m = ctx(t.sort())?;
        let op = match t.head() {
            Head::Op(op) => op,
            Head::Meta(name) => return Err(Error::UnboundMetavariable(name.to_string())),
        };
        let kids = t.children();
        let body = match &*op.family {
            "var" => LamTerm::Var(op.index.unwrap_or(0)),
            "lam" => LamTerm::lam(LamTerm::from_term(&kids[0])?.0),
            "app" => LamTerm::app(LamTerm::from_term(&kids[0])?.0, LamTerm::from_term(&kids[1])?.0),
            other => return Err(Error::UnknownOperator(other.to_string())),
        };
        Ok((body, m))
    }
}

/// Named-binder rendering with `x{level}` names, which never capture.
pub struct Named<'a>(pub &'a LamTerm, pub u32);

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", print_named(self.0, self.1, 0))
    }
}

/// `level`: 0 top / λ-body, 1 function position, 2 argument position.
fn print_named(t: &LamTerm, m: u32, level: u8) -> String {
    match t {
        LamTerm::Var(i) => format!("x{i}"),
        LamTerm::Lam(b) => {
            let s = format!("\\x{m}. {}", print_named(b, m + 1, 0));
            if level > 0 {
                format!("({s})")
            } else {
                s
            }
        }
        LamTerm::App(a, b) => {
            let s = format!("{} {}", print_named(a, m, 1), print_named(b, m, 2));
            if level > 1 {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

pub fn print_lambda(t: &Term) -> String {
    match LamTerm::from_term(t) {
        Ok((body, m)) => print_named(&body, m, 0),
        Err(_) => format!("{t:?}"),
    }
}

/// Parses `\x. t`, `λx. t` (also `\x y. t`), application by juxtaposition
/// and parentheses. Free names become the context variables in order of
/// first occurrence, unless `context` lists them.
pub fn parse_lambda(src: &str, context: &[&str]) -> Result<Term> {
    let mut p = LParser {
        s: src,
        pos: 0,
        bound: Vec::new(),
        free: context.iter().map(|s| s.to_string()).collect(),
        fixed_context: !context.is_empty(),
    };
    let t = p.term()?;
    p.ws();
    if p.pos != src.len() {
        return Err(Error::parse(p.pos, "unexpected input"));
    }
    t.resolve(&p.free).to_term(p.free.len() as u32)
}

/// Parse tree with names resolved late, so that free names discovered
/// inside binders still land in the outer context.
enum Pre {
    Name(String),
    Lam(String, Box<Pre>),
    App(Box<Pre>, Box<Pre>),
}

impl Pre {
    fn resolve(&self, free: &[String]) -> LamTerm {
        let mut bound: Vec<String> = free.to_vec();
        self.go(&mut bound)
    }

    fn go(&self, bound: &mut Vec<String>) -> LamTerm {
        match self {
            Pre::Name(n) => {
                let i = bound.iter().rposition(|b| b == n).expect("names are resolved at parse time");
                LamTerm::Var(i as u32)
            }
            Pre::Lam(x, b) => {
                bound.push(x.clone());
                let body = b.go(bound);
                bound.pop();
                LamTerm::lam(body)
            }
            Pre::App(f, x) => LamTerm::app(f.go(bound), x.go(bound)),
        }
    }
}

struct LParser<'a> {
    s: &'a str,
    pos: usize,
    bound: Vec<String>,
    free: Vec<String>,
    fixed_context: bool,
}

impl LParser<'_> {
    fn ws(&mut self) {
        let rest = &self.s[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.ws();
        if self.s[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.ws();
        let rest = &self.s[self.pos..];
        let len = rest
            .char_indices()
            .find(|(_, c)| !(c.is_alphanumeric() || *c == '_' || *c == '\''))
            .map_or(rest.len(), |(i, _)| i);
        let first = rest.chars().next()?;
        if len == 0 || first == 'λ' || first.is_ascii_digit() {
            return None;
        }
        self.pos += len;
        Some(rest[..len].to_string())
    }

    fn term(&mut self) -> Result<Pre> {
        if self.eat("\\") || self.eat("λ") {
            let mut names = Vec::new();
            while let Some(x) = self.ident() {
                names.push(x);
            }
            if names.is_empty() {
                return Err(Error::parse(self.pos, "expected a binder name"));
            }
            if !self.eat(".") {
                return Err(Error::parse(self.pos, "expected `.`"));
            }
            let depth = self.bound.len();
            self.bound.extend(names.iter().cloned());
            let body = self.term();
            self.bound.truncate(depth);
            let mut t = body?;
            for x in names.into_iter().rev() {
                t = Pre::Lam(x, Box::new(t));
            }
            return Ok(t);
        }
        let mut t = self.atom()?;
        loop {
            self.ws();
            let rest = &self.s[self.pos..];
            if rest.starts_with('\\') || rest.starts_with('λ') {
                let arg = self.term()?;
                return Ok(Pre::App(Box::new(t), Box::new(arg)));
            }
            let starts = rest.starts_with('(') || rest.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_');
            if !starts {
                return Ok(t);
            }
            let arg = self.atom()?;
            t = Pre::App(Box::new(t), Box::new(arg));
        }
    }

    fn atom(&mut self) -> Result<Pre> {
        if self.eat("(") {
            let t = self.term()?;
            if !self.eat(")") {
                return Err(Error::parse(self.pos, "expected `)`"));
            }
            return Ok(t);
        }
        let start = self.pos;
        let x = self.ident().ok_or_else(|| Error::parse(start, "expected a term"))?;
        if !self.bound.contains(&x) && !self.free.contains(&x) {
            if self.fixed_context {
                return Err(Error::parse(start, format!("unbound variable `{x}`")));
            }
            self.free.push(x.clone());
        }
        Ok(Pre::Name(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> LamTerm {
        LamTerm::Var(i)
    }

    fn id() -> LamTerm {
        LamTerm::lam(v(0))
    }

    #[test]
    fn renaming() {
        assert_eq!(v(0).rename(&[0], 1), v(0));
        assert_eq!(LamTerm::app(v(0), v(1)).rename(&[1, 0], 2), LamTerm::app(v(1), v(0)));
        // levels: the binder of a closed abstraction moves up with the context
        assert_eq!(id().weaken(0), LamTerm::lam(v(1)));
    }

    #[test]
    fn substitution() {
        let u = LamTerm::lam(LamTerm::app(v(0), v(0)));
        assert_eq!(v(0).subst(1, &[u.clone()], 0).unwrap(), u);
        // λ binds variable 1 in context 1
        let t = LamTerm::lam(v(1));
        assert_eq!(t.subst(1, &[u.clone()], 0).unwrap(), LamTerm::lam(v(0)));
        assert_eq!(
            LamTerm::app(v(0), v(0)).subst(1, &[id()], 0).unwrap(),
            LamTerm::app(id(), id())
        );
        assert_eq!(v(0).subst(1, &[], 0), Err(Error::EnvLengthMismatch { expected: 1, found: 0 }));
    }

    #[test]
    fn substitution_under_binders_weakens() {
        // λy. x y in context {x}, with x := z (context {z, w}) -> λy. z y
        let t = LamTerm::lam(LamTerm::app(v(0), v(1)));
        let out = t.subst(1, &[v(0)], 2).unwrap();
        assert_eq!(out, LamTerm::lam(LamTerm::app(v(0), v(2))));
    }

    #[test]
    fn weak_head_steps() {
        assert_eq!(LamTerm::app(id(), id()).beta_step(0), Some(id()));
        let delta = LamTerm::lam(LamTerm::app(v(0), v(0)));
        let omega = LamTerm::app(delta.clone(), delta);
        assert_eq!(omega.beta_step(0), Some(omega.clone()));
        assert_eq!(id().beta_step(0), None);
        assert_eq!(v(0).beta_step(1), None);
    }

    #[test]
    fn parse_and_print() {
        let t = parse_lambda("(\\x. x x) (λy. y)", &[]).unwrap();
        assert_eq!(t.sort(), &Sort::Ctx(0));
        let (body, m) = LamTerm::from_term(&t).unwrap();
        assert_eq!(m, 0);
        assert_eq!(
            body,
            LamTerm::app(LamTerm::lam(LamTerm::app(v(0), v(0))), id())
        );
        let printed = print_lambda(&t);
        assert_eq!(printed, "(\\x0. x0 x0) (\\x0. x0)");
        assert_eq!(parse_lambda(&printed, &[]).unwrap(), t);
    }

    #[test]
    fn free_names_form_the_context() {
        let t = parse_lambda("\\y. f y z", &[]).unwrap();
        assert_eq!(t.sort(), &Sort::Ctx(2));
        let (body, _) = LamTerm::from_term(&t).unwrap();
        assert_eq!(body, LamTerm::lam(LamTerm::app(LamTerm::app(v(0), v(2)), v(1))));
        assert!(parse_lambda("\\y. f y", &["g"]).is_err());
    }

    #[test]
    fn multi_binders_and_trailing_lambda() {
        let a = parse_lambda("\\x y. x", &[]).unwrap();
        let b = parse_lambda("\\x. \\y. x", &[]).unwrap();
        assert_eq!(a, b);
        let c = parse_lambda("(\\x. x) \\y. y", &[]).unwrap();
        assert_eq!(LamTerm::from_term(&c).unwrap().0, LamTerm::app(id(), id()));
    }
}
