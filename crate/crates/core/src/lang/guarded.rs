//! Untyped combinatory logic over the topos of trees (xCL) and its
//! extension with nondeterministic choice and parallel composition (xNCCL).

use std::sync::Arc;

use super::syntax::{is_metavariable, Raw};
use crate::error::{Error, Result};
use crate::kernel::{Family, OperatorDecl, Signature, Sort, Term};

const XCL: &[Family] = &[
    fam("S", 0, 1),
    fam("K", 0, 1),
    fam("I", 0, 1),
    fam("S'", 1, 1),
    fam("K'", 1, 1),
    fam("S''", 2, 1),
    fam("app", 2, 0),
];

const XNCCL: &[Family] = &[
    fam("S", 0, 1),
    fam("K", 0, 1),
    fam("I", 0, 1),
    fam("S'", 1, 1),
    fam("K'", 1, 1),
    fam("S''", 2, 1),
    fam("app", 2, 0),
    fam("plus", 2, 1),
    fam("par", 2, 1),
];

const fn fam(name: &'static str, arity: usize, rank: u32) -> Family {
    Family {
        name,
        arity,
        rank,
        indexed: false,
    }
}

/// Single-sorted signature; every operator has one instance.
#[derive(Debug)]
pub struct UntypedSig {
    pub nondeterministic: bool,
    ops: Vec<Arc<OperatorDecl>>,
}

impl UntypedSig {
    pub fn new(nondeterministic: bool) -> UntypedSig {
        let fams = if nondeterministic { XNCCL } else { XCL };
        let ops = fams
            .iter()
            .map(|f| {
                Arc::new(OperatorDecl::new(
                    f.name,
                    vec![Sort::Untyped; f.arity],
                    Sort::Untyped,
                    f.rank,
                ))
            })
            .collect();
        UntypedSig { nondeterministic, ops }
    }

    pub fn op(&self, family: &str) -> Result<&Arc<OperatorDecl>> {
        self.ops
            .iter()
            .find(|o| &*o.family == family)
            .ok_or_else(|| Error::UnknownOperator(family.to_string()))
    }

    /// Elaborates a raw term; type annotations are rejected.
    pub fn elaborate(&self, raw: &Raw) -> Result<Term> {
        let mk = |fam: &str, args: Vec<Term>| Term::make(self.op(fam)?, args);
        match raw {
            Raw::Name { name, types, pos } => {
                if types.is_some() {
                    return Err(Error::parse(*pos, "untyped combinators take no type arguments"));
                }
                if is_metavariable(name) {
                    Ok(Term::meta(name, Sort::Untyped))
                } else {
                    mk(name, Vec::new())
                }
            }
            Raw::Primed { name, args, .. } => {
                let args = args.iter().map(|a| self.elaborate(a)).collect::<Result<Vec<_>>>()?;
                mk(name, args)
            }
            Raw::App(f, x) => mk("app", vec![self.elaborate(f)?, self.elaborate(x)?]),
            Raw::Plus(p, q) => {
                if !self.nondeterministic {
                    return Err(Error::UnknownOperator("(+)".into()));
                }
                mk("plus", vec![self.elaborate(p)?, self.elaborate(q)?])
            }
            Raw::Par(p, q) => {
                if !self.nondeterministic {
                    return Err(Error::UnknownOperator("||".into()));
                }
                mk("par", vec![self.elaborate(p)?, self.elaborate(q)?])
            }
        }
    }
}

impl Signature for UntypedSig {
    fn name(&self) -> &str {
        if self.nondeterministic {
            "xnccl"
        } else {
            "xcl"
        }
    }

    fn families(&self) -> &[Family] {
        if self.nondeterministic {
            XNCCL
        } else {
            XCL
        }
    }

    fn operators_into(&self, sort: &Sort) -> Vec<Arc<OperatorDecl>> {
        if *sort == Sort::Untyped {
            self.ops.clone()
        } else {
            Vec::new()
        }
    }

    fn instantiate(
        &self,
        family: &str,
        _index: Option<u32>,
        args: &[Sort],
        result: Option<&Sort>,
    ) -> Result<Arc<OperatorDecl>> {
        let op = self.op(family)?;
        if op.arity() != args.len() {
            return Err(Error::ArityMismatch {
                op: family.to_string(),
                expected: op.arity(),
                found: args.len(),
            });
        }
        for s in args.iter().chain(result) {
            if *s != Sort::Untyped {
                return Err(Error::SortMismatch {
                    context: family.to_string(),
                    expected: Sort::Untyped,
                    found: s.clone(),
                });
            }
        }
        Ok(op.clone())
    }

    fn function_sorts(&self, sort: &Sort) -> Option<(Sort, Sort)> {
        (*sort == Sort::Untyped).then_some((Sort::Untyped, Sort::Untyped))
    }

    fn has_terminal(&self, _sort: &Sort) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::enumerate_terms;
    use crate::lang::syntax::parse_raw;

    #[test]
    fn nccl_extends_cl() {
        let cl = UntypedSig::new(false);
        let nccl = UntypedSig::new(true);
        assert_eq!(cl.operators_into(&Sort::Untyped).len(), 7);
        assert_eq!(nccl.operators_into(&Sort::Untyped).len(), 9);
        assert!(cl.elaborate(&parse_raw("S (+) K").unwrap()).is_err());
        assert!(nccl.elaborate(&parse_raw("S (+) K || I").unwrap()).is_ok());
    }

    #[test]
    fn small_terms() {
        let cl = UntypedSig::new(false);
        // size 1: S K I; size 2: S'(-), K'(-) over 3 atoms
        assert_eq!(enumerate_terms(&cl, &Sort::Untyped, 1).len(), 3);
        assert_eq!(enumerate_terms(&cl, &Sort::Untyped, 2).len(), 3 + 6);
    }

    #[test]
    fn annotations_are_rejected() {
        let cl = UntypedSig::new(false);
        assert!(matches!(
            cl.elaborate(&parse_raw("I[unit]").unwrap()),
            Err(Error::ParseError { .. })
        ));
        assert!(matches!(cl.elaborate(&parse_raw("e").unwrap()), Err(Error::UnknownOperator(_))));
    }
}
