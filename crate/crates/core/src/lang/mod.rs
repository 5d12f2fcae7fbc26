//! The five calculi: signatures, shipped rule tables, surface syntax and
//! default probe pools.

pub mod guarded;
pub mod lambda;
pub mod syntax;
pub mod tcl;

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::engine::{DenotationalModel, HoGsosLaw, OperationalModel};
use crate::error::{Error, Result};
use crate::gitrees::{ProbeSet, StageLanguage};
use crate::kernel::{enumerate_terms, Head, Signature, Sort, Term, Ty};
use guarded::UntypedSig;
use lambda::LambdaSig;
use syntax::{paren, parse_raw, Prec};
use tcl::TclSig;

pub const XTCL_LAW: &str = include_str!("../../laws/xtcl.law");
pub const XPTCL_LAW: &str = include_str!("../../laws/xptcl.law");
pub const XCL_LAW: &str = include_str!("../../laws/xcl.law");
pub const XNCCL_LAW: &str = include_str!("../../laws/xnccl.law");
pub const LAMBDA_LAW: &str = include_str!("../../laws/lambda.law");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LangId {
    Xtcl,
    Xptcl,
    Xcl,
    Xnccl,
    Lambda,
}

impl LangId {
    pub const ALL: [LangId; 5] = [LangId::Xtcl, LangId::Xptcl, LangId::Xcl, LangId::Xnccl, LangId::Lambda];

    pub fn name(self) -> &'static str {
        match self {
            LangId::Xtcl => "xtcl",
            LangId::Xptcl => "xptcl",
            LangId::Xcl => "xcl",
            LangId::Xnccl => "xnccl",
            LangId::Lambda => "lambda",
        }
    }

    pub fn is_typed(self) -> bool {
        matches!(self, LangId::Xtcl | LangId::Xptcl)
    }

    pub fn is_guarded(self) -> bool {
        matches!(self, LangId::Xcl | LangId::Xnccl | LangId::Lambda)
    }

    pub fn language(self) -> &'static Language {
        language(self)
    }
}

impl fmt::Display for LangId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LangId {
    type Err = Error;

    fn from_str(s: &str) -> Result<LangId> {
        LangId::ALL
            .into_iter()
            .find(|l| l.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Invalid(format!("unknown language `{s}` (xtcl, xptcl, xcl, xnccl, lambda)")))
    }
}

#[derive(Debug)]
enum Sig {
    Tcl(Arc<TclSig>),
    Untyped(Arc<UntypedSig>),
    Lambda,
}

/// A calculus: its signature, its shipped law and its surface syntax.
#[derive(Debug)]
pub struct Language {
    pub id: LangId,
    pub law: Arc<HoGsosLaw>,
    sig: Sig,
}

impl Language {
    fn build(id: LangId) -> Language {
        let (sig, dyn_sig, text): (Sig, Arc<dyn Signature>, &str) = match id {
            LangId::Xtcl | LangId::Xptcl => {
                let s = Arc::new(TclSig::new(id == LangId::Xptcl));
                let text = if id == LangId::Xtcl { XTCL_LAW } else { XPTCL_LAW };
                (Sig::Tcl(s.clone()), s, text)
            }
            LangId::Xcl | LangId::Xnccl => {
                let s = Arc::new(UntypedSig::new(id == LangId::Xnccl));
                let text = if id == LangId::Xcl { XCL_LAW } else { XNCCL_LAW };
                (Sig::Untyped(s.clone()), s, text)
            }
            LangId::Lambda => (Sig::Lambda, Arc::new(LambdaSig), LAMBDA_LAW),
        };
        let law = HoGsosLaw::parse(dyn_sig, text).unwrap_or_else(|e| panic!("shipped law {id} does not parse: {e}"));
        Language {
            id,
            law: Arc::new(law),
            sig,
        }
    }

    pub fn sig(&self) -> &Arc<dyn Signature> {
        &self.law.sig
    }

    pub fn tcl(&self) -> Option<&TclSig> {
        match &self.sig {
            Sig::Tcl(s) => Some(s),
            _ => None,
        }
    }

    pub fn parse(&self, src: &str) -> Result<Term> {
        match &self.sig {
            Sig::Tcl(s) => tcl::elaborate(s, &parse_raw(src)?),
            Sig::Untyped(s) => s.elaborate(&parse_raw(src)?),
            Sig::Lambda => lambda::parse_lambda(src, &[]),
        }
    }

    /// Surface rendering; typed terms carry annotations only when the
    /// unannotated text would elaborate differently.
    pub fn print(&self, t: &Term) -> String {
        match &self.sig {
            Sig::Lambda => lambda::print_lambda(t),
            Sig::Tcl(_) => {
                let plain = print_combinators(t, false);
                if self.parse(&plain).ok().as_ref() == Some(t) {
                    plain
                } else {
                    print_combinators(t, true)
                }
            }
            Sig::Untyped(_) => print_combinators(t, false),
        }
    }

    /// Sorts sampled by the test suites.
    pub fn program_sorts(&self) -> Vec<Sort> {
        match self.id {
            LangId::Xtcl | LangId::Xptcl => vec![
                Sort::unit(),
                Sort::Ty(Ty::arrow(Ty::Unit, Ty::Unit)),
                Sort::Ty(Ty::arrow(Ty::Unit, Ty::arrow(Ty::Unit, Ty::Unit))),
            ],
            LangId::Xcl | LangId::Xnccl => vec![Sort::Untyped],
            LangId::Lambda => vec![Sort::Ctx(0)],
        }
    }

    /// Closed terms up to `max_size` nodes, at every sort on demand.
    pub fn probes(&self, max_size: usize) -> ProbeSet<Term> {
        let sig = self.sig().clone();
        ProbeSet::new(move |s| Ok(enumerate_terms(sig.as_ref(), s, max_size)))
    }

    pub fn stage_language(&self) -> Option<StageLanguage> {
        match self.id {
            LangId::Xcl => Some(StageLanguage::Xcl),
            LangId::Xnccl => Some(StageLanguage::Xnccl),
            _ => None,
        }
    }

    pub fn operational(&self) -> Arc<OperationalModel> {
        OperationalModel::new(self.law.clone())
    }

    pub fn denotational(&self) -> Arc<DenotationalModel> {
        DenotationalModel::new(self.law.clone()).expect("shipped laws are relatively flat")
    }
}

pub fn language(id: LangId) -> &'static Language {
    static CELLS: [OnceLock<Language>; 5] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    let i = LangId::ALL.iter().position(|l| *l == id).expect("listed");
    CELLS[i].get_or_init(|| Language::build(id))
}

/// Renders combinator terms: juxtaposition, `S'(p)`, `(+)`, `||`.
pub fn print_combinators(t: &Term, annotate: bool) -> String {
    go(t, Prec::Par, annotate)
}

fn go(t: &Term, ctx: Prec, annotate: bool) -> String {
    let op = match t.head() {
        Head::Meta(m) => return m.to_string(),
        Head::Op(op) => op,
    };
    let kids = t.children();
    match &*op.family {
        "app" => paren(
            format!("{} {}", go(&kids[0], Prec::AppFun, annotate), go(&kids[1], Prec::Atom, annotate)),
            Prec::AppFun,
            ctx,
        ),
        "plus" => paren(
            format!("{} (+) {}", go(&kids[0], Prec::Plus, annotate), go(&kids[1], Prec::AppFun, annotate)),
            Prec::Plus,
            ctx,
        ),
        "par" => paren(
            format!("{} || {}", go(&kids[0], Prec::Par, annotate), go(&kids[1], Prec::Plus, annotate)),
            Prec::Par,
            ctx,
        ),
        name if kids.is_empty() => match (annotate, op.result_sort.as_ty()) {
            (true, Some(ty)) if name != "e" => format!("{name}[{}]", type_args(name, ty)),
            _ => name.to_string(),
        },
        name => {
            let args: Vec<String> = kids.iter().map(|k| go(k, Prec::Par, annotate)).collect();
            format!("{name}({})", args.join(", "))
        }
    }
}

/// Type arguments of a constant, read off its instance type.
fn type_args(name: &str, t: &Ty) -> String {
    let parts: Vec<Ty> = match name {
        "I" => vec![t.split_arrow().map(|(a, _)| a.clone()).unwrap_or(Ty::Unit)],
        "K" => {
            let (a, rest) = t.split_arrow().expect("K has an arrow type");
            vec![a.clone(), rest.split_arrow().expect("K type").0.clone()]
        }
        _ => {
            let (f, _) = t.split_arrow().expect("S has an arrow type");
            let (a, bc) = f.split_arrow().expect("S type");
            let (b, c) = bc.split_arrow().expect("S type");
            vec![a.clone(), b.clone(), c.clone()]
        }
    };
    parts.iter().map(Ty::to_string).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::print_law;

    #[test]
    fn shipped_laws_round_trip() {
        for id in LangId::ALL {
            let lang = language(id);
            let text = match id {
                LangId::Xtcl => XTCL_LAW,
                LangId::Xptcl => XPTCL_LAW,
                LangId::Xcl => XCL_LAW,
                LangId::Xnccl => XNCCL_LAW,
                LangId::Lambda => LAMBDA_LAW,
            };
            assert_eq!(print_law(&lang.law), text, "{id}");
        }
    }

    #[test]
    fn printing_is_minimal_and_reparses() {
        let l = language(LangId::Xtcl);
        for src in ["S K K e", "K e (I e)", "S''(K, I) e", "I (I e)"] {
            let t = l.parse(src).unwrap();
            assert_eq!(l.print(&t), src);
        }
        let n = language(LangId::Xnccl);
        for src in ["S (+) K || I", "(S || K) (+) I", "S (K (+) I)", "(S (+) K) I"] {
            let t = n.parse(src).unwrap();
            assert_eq!(n.print(&t), src);
        }
    }

    #[test]
    fn annotations_appear_when_needed() {
        let l = language(LangId::Xtcl);
        let t = l.parse("K[unit, (unit -> unit) -> unit -> unit] e I").unwrap();
        let s = l.print(&t);
        assert_eq!(l.parse(&s).unwrap(), t);
        assert!(s.contains('['));
    }

    #[test]
    fn names() {
        assert_eq!("XCL".parse::<LangId>().unwrap(), LangId::Xcl);
        assert!("foo".parse::<LangId>().is_err());
    }
}
