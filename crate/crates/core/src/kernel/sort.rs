use std::fmt;
use std::sync::Arc;

/// Simple types `unit | τ → τ`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Ty {
    Unit,
    Arrow(Arc<Ty>, Arc<Ty>),
}

impl Ty {
    pub fn arrow(dom: Ty, cod: Ty) -> Ty {
        Ty::Arrow(Arc::new(dom), Arc::new(cod))
    }

    /// `|unit| = 1`, `|τ₁ → τ₂| = |τ₁| + |τ₂|`.
    pub fn complexity(&self) -> u32 {
        match self {
            Ty::Unit => 1,
            Ty::Arrow(a, b) => a.complexity() + b.complexity(),
        }
    }

    pub fn split_arrow(&self) -> Option<(&Ty, &Ty)> {
        match self {
            Ty::Unit => None,
            Ty::Arrow(a, b) => Some((a, b)),
        }
    }

    /// All types of complexity at most `bound`, ordered by complexity and
    /// then structurally.
    pub fn all_up_to(bound: u32) -> Vec<Ty> {
        let mut by_complexity: Vec<Vec<Ty>> = vec![Vec::new(); bound as usize + 1];
        if bound >= 1 {
            by_complexity[1].push(Ty::Unit);
        }
        for c in 2..=bound as usize {
            let mut level = Vec::new();
            for left in 1..c {
                for a in &by_complexity[left] {
                    for b in &by_complexity[c - left] {
                        level.push(Ty::arrow(a.clone(), b.clone()));
                    }
                }
            }
            level.sort();
            by_complexity[c] = level;
        }
        by_complexity.into_iter().flatten().collect()
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Unit => write!(f, "unit"),
            Ty::Arrow(a, b) => {
                if a.split_arrow().is_some() {
                    write!(f, "({a}) -> {b}")
                } else {
                    write!(f, "{a} -> {b}")
                }
            }
        }
    }
}

/// The sort of a term.
///
/// Typed combinatory logics sort terms by their type, the untyped calculi
/// have a single sort, and the λ-calculus sorts terms by context size.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Sort {
    Ty(Ty),
    Untyped,
    Ctx(u32),
}

impl Sort {
    pub fn unit() -> Sort {
        Sort::Ty(Ty::Unit)
    }

    pub fn as_ty(&self) -> Option<&Ty> {
        match self {
            Sort::Ty(t) => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Ty(t) => write!(f, "{t}"),
            Sort::Untyped => write!(f, "*"),
            Sort::Ctx(m) => write!(f, "ctx{m}"),
        }
    }
}

impl From<Ty> for Sort {
    fn from(t: Ty) -> Self {
        Sort::Ty(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complexity_is_additive_and_positive() {
        for t in Ty::all_up_to(5) {
            if let Some((a, b)) = t.split_arrow() {
                assert!(t.complexity() > a.complexity());
                assert!(t.complexity() > b.complexity());
                assert_eq!(t.complexity(), a.complexity() + b.complexity());
            } else {
                assert_eq!(t.complexity(), 1);
            }
        }
    }

    #[test]
    fn type_counts_follow_catalan_numbers() {
        let counts: Vec<usize> = (1..=5)
            .map(|c| {
                Ty::all_up_to(c)
                    .iter()
                    .filter(|t| t.complexity() == c)
                    .count()
            })
            .collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 14]);
    }

    #[test]
    fn arrow_display_is_right_associative() {
        let u = Ty::Unit;
        let t = Ty::arrow(Ty::arrow(u.clone(), u.clone()), Ty::arrow(u.clone(), u));
        assert_eq!(t.to_string(), "(unit -> unit) -> unit -> unit");
    }
}
