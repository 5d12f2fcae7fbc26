//! Documented rule mutations. Every suite that checks a law must reject at
//! least one of them.

use std::sync::Arc;

use serde::Serialize;

use crate::engine::HoGsosLaw;
use crate::error::Result;
use crate::lang::{language, LangId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Mutation {
    pub id: &'static str,
    /// Printed pattern of the rule being replaced.
    pub pattern: &'static str,
    pub replacement: &'static str,
    pub description: &'static str,
}

impl Mutation {
    pub fn apply(&self, law: &HoGsosLaw) -> Result<HoGsosLaw> {
        law.with_rule_replaced(self.pattern, self.replacement)
    }

    /// The shipped law of `lang` with this mutation applied.
    pub fn law(&self, lang: LangId) -> Result<Arc<HoGsosLaw>> {
        Ok(Arc::new(self.apply(&language(lang).law)?))
    }
}

const fn m(id: &'static str, pattern: &'static str, replacement: &'static str, description: &'static str) -> Mutation {
    Mutation {
        id,
        pattern,
        replacement,
        description,
    }
}

const TYPED_COMMON: [Mutation; 4] = [
    m("I-loops", "I", "I => red I", "I reduces to itself instead of being the identity"),
    m("K'-loops", "K'(any)", "K'(any) => red K'(x0)", "K'(p) reduces to itself instead of returning p"),
    m(
        "app-fun-stalls",
        "app(fun, any)",
        "app(fun, any) => red app(x0, x1)",
        "application of a function never fires",
    ),
    m(
        "app-red-stalls",
        "app(red, any)",
        "app(red, any) => red app(x0, x1)",
        "application ignores the head's reduct",
    ),
];

const XTCL: [Mutation; 5] = [
    m("e-loops", "e", "e => red e", "e reduces to itself instead of terminating"),
    TYPED_COMMON[0],
    TYPED_COMMON[1],
    TYPED_COMMON[2],
    TYPED_COMMON[3],
];

const XPTCL: [Mutation; 5] = [
    m(
        "plus-biased",
        "plus(any, any)",
        "plus(any, any) => red [1/3: x0, 2/3: x1]",
        "choice uses a biased coin",
    ),
    TYPED_COMMON[0],
    TYPED_COMMON[1],
    TYPED_COMMON[2],
    TYPED_COMMON[3],
];

const XCL: [Mutation; 5] = [
    m("I-loops", "I", "I => red I", "I reduces to itself instead of being the identity"),
    m("K'-loops", "K'(any)", "K'(any) => red K'(x0)", "K'(p) reduces to itself instead of returning p"),
    m(
        "S''-swapped",
        "S''(any, any)",
        "S''(any, any) => fun app(app(x1, t), app(x0, t))",
        "S'' applies its arguments in the wrong order",
    ),
    m(
        "app-fun-stalls",
        "app(fun, any) @+",
        "app(fun, any) @+ => red app(x0, x1)",
        "application of a function never fires",
    ),
    m(
        "app-red-stalls",
        "app(red, any) @+",
        "app(red, any) @+ => red app(x0, x1)",
        "application ignores the head's reduct",
    ),
];

const XNCCL: [Mutation; 5] = [
    m(
        "plus-left",
        "plus(any, any) @+",
        "plus(any, any) @+ => red {x0}",
        "choice always takes the left branch",
    ),
    m(
        "par-fun-left",
        "par(fun, fun)",
        "par(fun, fun) => fun app(x0, t)",
        "parallel functions forget the right component",
    ),
    m(
        "par-red-left-only",
        "par(red, red)",
        "par(red, red) => red par(y0, x1)",
        "parallel composition steps only on the left",
    ),
    m("K'-loops", "K'(any)", "K'(any) => red K'(x0)", "K'(p) reduces to itself instead of returning p"),
    m(
        "app-fun-stalls",
        "app(fun, any) @+",
        "app(fun, any) @+ => red app(x0, x1)",
        "application of a function never fires",
    ),
];

const LAMBDA: [Mutation; 5] = [
    m(
        "lam-identity",
        "lam(any)",
        "lam(any) => fun t ; subst lam(s0[u+])",
        "every abstraction behaves as the identity",
    ),
    m(
        "stuck-loops",
        "app(term, any)",
        "app(term, any) => red app(x0, x1) ; subst app(s0[u], s1[u])",
        "stuck applications reduce to themselves",
    ),
    m(
        "beta-drops-body",
        "app(fun, any)",
        "app(fun, any) => red x1 ; subst app(s0[u], s1[u])",
        "β-reduction returns the argument",
    ),
    m(
        "subst-swaps-app",
        "app(red, any)",
        "app(red, any) => red app(y0, x1) ; subst app(s1[u], s0[u])",
        "substitution swaps function and argument of reducible applications",
    ),
    m(
        "beta-self-applies",
        "app(fun, any)",
        "app(fun, any) => red f0(x0) ; subst app(s0[u], s1[u])",
        "β-reduction feeds the function to itself",
    ),
];

pub fn mutations(lang: LangId) -> &'static [Mutation] {
    match lang {
        LangId::Xtcl => &XTCL,
        LangId::Xptcl => &XPTCL,
        LangId::Xcl => &XCL,
        LangId::Xnccl => &XNCCL,
        LangId::Lambda => &LAMBDA,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{check_flatness, DenotationalModel};

    #[test]
    fn every_mutation_applies_and_stays_flat() {
        for lang in LangId::ALL {
            for mu in mutations(lang) {
                let law = mu.law(lang).unwrap_or_else(|e| panic!("{lang} {}: {e}", mu.id));
                assert_ne!(*law, *language(lang).law, "{lang} {}", mu.id);
                assert!(check_flatness(&law).flat, "{lang} {}", mu.id);
                DenotationalModel::new(law).unwrap();
            }
        }
    }
}
