//! Exact finite stages of the guarded untyped domains and of the
//! approximants `F^n 1`, `F X = νB(X, −)`, in the topos of trees.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The guarded untyped calculi with finite stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageLanguage {
    /// `B(X, Y) = ▷Y + ▷Y^{▷X}`
    Xcl,
    /// `B(X, Y) = P(▷Y) + ▷Y^{▷X}`
    Xnccl,
}

impl StageLanguage {
    /// Largest stage enumerated by default.
    pub fn bound(self) -> usize {
        match self {
            StageLanguage::Xcl => 2,
            StageLanguage::Xnccl => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StageLanguage::Xcl => "xcl",
            StageLanguage::Xnccl => "xnccl",
        }
    }
}

/// Candidate function tables examined before giving up.
pub const CANDIDATE_CAP: u64 = 20_000_000;

/// An element of a stage. Stage `k + 1` elements refer to stage-`k`
/// elements; stage-0 payloads are [`StageElement::Unit`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StageElement {
    /// The element of `1`.
    Unit,
    Reduct { next: Box<StageElement> },
    /// Duplicate-free, in the order of the previous stage.
    ReductSet { next: Vec<StageElement> },
    /// `(f_0, .., f_{k-1})` at stage `k`; `f_i` maps positions of the
    /// argument's stage `i` to positions of the result's stage `i`.
    Function { tables: Vec<Vec<usize>> },
}

impl fmt::Display for StageElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageElement::Unit => write!(f, "*"),
            StageElement::Reduct { next } => write!(f, "→{next}"),
            StageElement::ReductSet { next } => {
                write!(f, "→{{")?;
                for (i, x) in next.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "}}")
            }
            StageElement::Function { tables } => {
                write!(f, "λ(")?;
                for (i, t) in tables.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    let cells: Vec<String> = t.iter().map(usize::to_string).collect();
                    write!(f, "{}", cells.join(""))?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A presheaf on `ω^op`, truncated: finite stages with restriction maps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tower {
    pub stages: Vec<Vec<StageElement>>,
    /// `restrict[k]` maps positions of stage `k` to positions of stage
    /// `k - 1`; `restrict[0]` is empty.
    pub restrict: Vec<Vec<usize>>,
}

impl Tower {
    /// The terminal presheaf up to stage `top`.
    pub fn terminal(top: usize) -> Tower {
        Tower {
            stages: vec![vec![StageElement::Unit]; top + 1],
            restrict: (0..=top).map(|k| if k == 0 { Vec::new() } else { vec![0] }).collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.stages.iter().map(Vec::len).collect()
    }

    pub fn top(&self) -> usize {
        self.stages.len().saturating_sub(1)
    }
}

/// Stages `0..=top` of `νB(X, −)`. With `x = None` the argument is the
/// result itself, which yields the locally final coalgebra `Z`.
pub fn nu_tower(lang: StageLanguage, x: Option<&Tower>, top: usize) -> Result<Tower> {
    if let Some(x) = x {
        if x.top() + 1 < top {
            return Err(Error::Invalid(format!(
                "argument presheaf known up to stage {}, stage {} needs {}",
                x.top(),
                top,
                top - 1
            )));
        }
    }
    let mut y = Tower {
        stages: Vec::new(),
        restrict: Vec::new(),
    };
    for k in 0..=top {
        let (stage, restrict) = next_stage(lang, x.unwrap_or(&y), &y, k)?;
        y.stages.push(stage);
        y.restrict.push(restrict);
    }
    Ok(y)
}

fn position(stage: &[StageElement], e: &StageElement) -> usize {
    stage
        .iter()
        .position(|x| x == e)
        .expect("restriction lands in the previous stage")
}

/// Builds stage `k` of `Y` from stages `< k` of `X` and `Y`.
fn next_stage(lang: StageLanguage, x: &Tower, y: &Tower, k: usize) -> Result<(Vec<StageElement>, Vec<usize>)> {
    // payloads of the later modality: ▷Y at stage k is Y_{k-1}, or 1
    let later: Vec<StageElement> = if k == 0 {
        vec![StageElement::Unit]
    } else {
        y.stages[k - 1].clone()
    };
    let mut out = Vec::new();
    match lang {
        StageLanguage::Xcl => {
            for e in &later {
                out.push(StageElement::Reduct { next: Box::new(e.clone()) });
            }
        }
        StageLanguage::Xnccl => {
            let n = later.len();
            if n >= 40 {
                return Err(Error::StageTooLarge {
                    requested: k,
                    bound: lang.bound(),
                });
            }
            for mask in 0u64..(1u64 << n) {
                let next: Vec<StageElement> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| later[i].clone()).collect();
                out.push(StageElement::ReductSet { next });
            }
        }
    }
    if k == 0 {
        out.push(StageElement::Function { tables: Vec::new() });
    } else {
        // extend each stage-(k-1) tuple by a compatible f_{k-1} : X_{k-1} → Y_{k-1}
        let (xs, ys) = (&x.stages[k - 1], &y.stages[k - 1]);
        let prev_tuples: Vec<&Vec<Vec<usize>>> = y.stages[k - 1]
            .iter()
            .filter_map(|e| match e {
                StageElement::Function { tables } => Some(tables),
                _ => None,
            })
            .collect();
        let candidates = (ys.len() as u64)
            .checked_pow(xs.len() as u32)
            .and_then(|c| c.checked_mul(prev_tuples.len() as u64));
        match candidates {
            Some(c) if c <= CANDIDATE_CAP => {}
            _ => {
                return Err(Error::StageTooLarge {
                    requested: k,
                    bound: lang.bound(),
                })
            }
        }
        for prev in prev_tuples {
            let mut f = vec![0usize; xs.len()];
            loop {
                if compatible(x, y, k - 1, prev, &f) {
                    let mut tables = prev.clone();
                    tables.push(f.clone());
                    out.push(StageElement::Function { tables });
                }
                if !advance(&mut f, ys.len()) {
                    break;
                }
            }
        }
    }
    let restrict = if k == 0 {
        Vec::new()
    } else {
        let index: HashMap<&StageElement, usize> = y.stages[k - 1].iter().enumerate().map(|(i, e)| (e, i)).collect();
        out.iter().map(|e| index[&restrict_element(y, k, e)]).collect()
    };
    Ok((out, restrict))
}

/// Next map in lexicographic order; false after the last one.
fn advance(f: &mut [usize], base: usize) -> bool {
    for i in (0..f.len()).rev() {
        f[i] += 1;
        if f[i] < base {
            return true;
        }
        f[i] = 0;
    }
    false
}

/// `r_Y ∘ f_i = f_{i-1} ∘ r_X` on stage `i` of `X`, for the new table
/// `f = f_i` against the last table of `prev`.
fn compatible(x: &Tower, y: &Tower, i: usize, prev: &[Vec<usize>], f: &[usize]) -> bool {
    if i == 0 {
        return true;
    }
    let last = &prev[i - 1];
    (0..f.len()).all(|a| y.restrict[i][f[a]] == last[x.restrict[i][a]])
}

/// Restriction of a stage-`k` element to stage `k - 1`.
fn restrict_element(y: &Tower, k: usize, e: &StageElement) -> StageElement {
    let down = |z: &StageElement| -> StageElement {
        if k == 1 {
            StageElement::Unit
        } else {
            let stage = &y.stages[k - 1];
            y.stages[k - 2][y.restrict[k - 1][position(stage, z)]].clone()
        }
    };
    match e {
        StageElement::Reduct { next } => StageElement::Reduct {
            next: Box::new(down(next)),
        },
        StageElement::ReductSet { next } => {
            let v: Vec<StageElement> = next.iter().map(down).collect();
            // keep the enumeration order of subsets of the previous stage
            let prev_later: Vec<StageElement> = if k == 1 {
                vec![StageElement::Unit]
            } else {
                y.stages[k - 2].clone()
            };
            let ordered: Vec<StageElement> = prev_later.into_iter().filter(|z| v.contains(z)).collect();
            StageElement::ReductSet { next: ordered }
        }
        StageElement::Function { tables } => StageElement::Function {
            tables: tables[..tables.len() - 1].to_vec(),
        },
        StageElement::Unit => StageElement::Unit,
    }
}

fn check_bound(lang: StageLanguage, n: usize) -> Result<()> {
    if n > lang.bound() {
        return Err(Error::StageTooLarge {
            requested: n,
            bound: lang.bound(),
        });
    }
    Ok(())
}

/// The exact stage `Z_n` of the locally final coalgebra.
pub fn enumerate_stage(lang: StageLanguage, n: usize) -> Result<Vec<StageElement>> {
    check_bound(lang, n)?;
    Ok(nu_tower(lang, None, n)?.stages.pop().expect("stage n"))
}

/// Stages `0..=n` of `Z` with their restriction maps.
pub fn stage_tower(lang: StageLanguage, n: usize) -> Result<Tower> {
    check_bound(lang, n)?;
    nu_tower(lang, None, n)
}

/// Stages `0..=top` of the approximant `F^n 1`.
pub fn approximant(lang: StageLanguage, n: usize, top: usize) -> Result<Tower> {
    check_bound(lang, top)?;
    let mut x = Tower::terminal(top);
    for _ in 0..n {
        x = nu_tower(lang, Some(&x), top)?;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_stages() {
        assert_eq!(enumerate_stage(StageLanguage::Xcl, 0).unwrap().len(), 2);
        assert_eq!(enumerate_stage(StageLanguage::Xnccl, 0).unwrap().len(), 3);
        assert_eq!(enumerate_stage(StageLanguage::Xcl, 1).unwrap().len(), 6);
        assert_eq!(enumerate_stage(StageLanguage::Xnccl, 1).unwrap().len(), 8 + 27);
    }

    #[test]
    fn beyond_the_bound_is_refused() {
        assert_eq!(
            enumerate_stage(StageLanguage::Xcl, 3),
            Err(Error::StageTooLarge { requested: 3, bound: 2 })
        );
        assert!(matches!(enumerate_stage(StageLanguage::Xnccl, 2), Err(Error::StageTooLarge { .. })));
    }

    #[test]
    fn first_approximant() {
        let t = approximant(StageLanguage::Xcl, 1, 1).unwrap();
        assert_eq!(t.sizes(), vec![2, 4]);
        assert_eq!(approximant(StageLanguage::Xcl, 0, 2).unwrap().sizes(), vec![1, 1, 1]);
    }

    #[test]
    fn restrictions_are_surjective() {
        let t = stage_tower(StageLanguage::Xcl, 1).unwrap();
        let mut hit = vec![false; t.stages[0].len()];
        for &j in &t.restrict[1] {
            hit[j] = true;
        }
        assert!(hit.iter().all(|h| *h));
    }
}
