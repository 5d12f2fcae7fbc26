//! Rule tables: a data-level encoding of higher-order GSOS laws and their
//! line-oriented text format.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::behavior::{Effect, StepTag, Weight};
use crate::error::{Error, Result};
use crate::kernel::Signature;

/// Premise on one argument's behaviour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Premise {
    Any,
    Tag(StepTag),
}

impl Premise {
    pub fn admits(&self, tag: StepTag) -> bool {
        match self {
            Premise::Any => true,
            Premise::Tag(t) => *t == tag,
        }
    }
}

/// Guarded laws may split a rule on stage 0 versus stage n+1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StageGuard {
    Zero,
    Succ,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RulePattern {
    pub family: String,
    pub premises: Vec<Premise>,
    pub stage: Option<StageGuard>,
}

/// Terms of `Σ*(X + Y)` built from rule metavariables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    /// `xN`: the N-th argument.
    Arg(usize),
    /// `yN`: a reduct of the N-th argument (ranges over the whole bag).
    ReductOf(usize),
    /// `fN(e)`: the N-th argument's function applied to `e`.
    ApplyFun(usize, Box<Expr>),
    /// `Family(e, ..)`, with the index for indexed families.
    Op(String, Option<u32>, Vec<Expr>),
    /// `sN[env]`: the N-th argument's substitution component.
    SubstOf(usize, EnvExpr),
    /// `t`: the input of the function summand being defined.
    Probe,
    /// `u@`: the incoming environment at the operator's own index.
    EnvAt,
    /// `*`: the trivial payload of stage-0 rules.
    Trivial,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnvExpr {
    /// `u`
    Incoming,
    /// `u+`: weakened by one fresh variable, which is appended.
    Weakened,
    /// `id, e`: the variables of the operator's context followed by `e`.
    Extend(Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Branches {
    Single(Expr),
    Set(Vec<Expr>),
    Dist(Vec<(Weight, Expr)>),
}

impl Branches {
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Branches::Single(e) => vec![e],
            Branches::Set(v) => v.iter().collect(),
            Branches::Dist(v) => v.iter().map(|(_, e)| e).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConclusionStep {
    Terminal,
    Reduct(Branches),
    Function(Expr),
}

impl ConclusionStep {
    pub fn tag(&self) -> StepTag {
        match self {
            ConclusionStep::Terminal => StepTag::Terminal,
            ConclusionStep::Reduct(_) => StepTag::Reduct,
            ConclusionStep::Function(_) => StepTag::Function,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleConclusion {
    pub step: ConclusionStep,
    pub subst: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub pattern: RulePattern,
    pub conclusion: RuleConclusion,
}

/// A higher-order GSOS law together with its signature and ranking.
#[derive(Clone)]
pub struct HoGsosLaw {
    pub name: String,
    pub sig: Arc<dyn Signature>,
    pub effect: Effect,
    pub guarded: bool,
    /// Family used for the identity environment of `id, e` (V-pointed laws).
    pub variables: Option<String>,
    pub ranks: Vec<(String, u32)>,
    pub rules: Vec<Rule>,
}

impl fmt::Debug for HoGsosLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HoGsosLaw")
            .field("name", &self.name)
            .field("effect", &self.effect)
            .field("rules", &self.rules.len())
            .finish()
    }
}

impl PartialEq for HoGsosLaw {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.sig.name() == other.sig.name()
            && self.effect == other.effect
            && self.guarded == other.guarded
            && self.variables == other.variables
            && self.ranks == other.ranks
            && self.rules == other.rules
    }
}

impl HoGsosLaw {
    /// Rank of a family: the law's table first, then the signature.
    pub fn rank(&self, family: &str) -> Option<u32> {
        self.ranks
            .iter()
            .find(|(f, _)| f == family)
            .map(|(_, r)| *r)
            .or_else(|| self.sig.family(family).map(|f| f.rank))
    }

    pub fn rules_for<'a, 'f>(&'a self, family: &'f str) -> impl Iterator<Item = &'a Rule> + use<'a, 'f> {
        self.rules.iter().filter(move |r| r.pattern.family == family)
    }

    /// Parses the text format against a signature.
    pub fn parse(sig: Arc<dyn Signature>, text: &str) -> Result<HoGsosLaw> {
        parse_law(sig, text)
    }

    /// Replaces the rule whose pattern prints as `pattern` by `replacement`
    /// (a full rule line). Used to build mutants.
    pub fn with_rule_replaced(&self, pattern: &str, replacement: &str) -> Result<HoGsosLaw> {
        let new_rule = parse_rule_line(replacement, 0)?;
        let mut out = self.clone();
        let slot = out
            .rules
            .iter_mut()
            .find(|r| print_pattern(&r.pattern) == pattern)
            .ok_or_else(|| Error::Invalid(format!("no rule with pattern `{pattern}`")))?;
        *slot = new_rule;
        Ok(out)
    }

    pub fn with_rule_added(&self, line: &str) -> Result<HoGsosLaw> {
        let mut out = self.clone();
        out.rules.push(parse_rule_line(line, 0)?);
        Ok(out)
    }

    /// Pairs of rules that can both match some argument behaviours.
    pub fn overlapping_rules(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, a) in self.rules.iter().enumerate() {
            for (j, b) in self.rules.iter().enumerate().skip(i + 1) {
                let (pa, pb) = (&a.pattern, &b.pattern);
                if pa.family != pb.family || pa.premises.len() != pb.premises.len() {
                    continue;
                }
                let stages_meet = match (pa.stage, pb.stage) {
                    (Some(x), Some(y)) => x == y,
                    _ => true,
                };
                let premises_meet = pa.premises.iter().zip(&pb.premises).all(|(x, y)| match (x, y) {
                    (Premise::Tag(s), Premise::Tag(t)) => s == t,
                    _ => true,
                });
                // an unguarded rule and a stage-0 rule coexist: the guarded one wins at stage 0
                let guard_split = matches!(
                    (pa.stage, pb.stage),
                    (None, Some(StageGuard::Zero)) | (Some(StageGuard::Zero), None)
                );
                if stages_meet && premises_meet && !guard_split {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

impl fmt::Display for HoGsosLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_law(self))
    }
}

// ---------------------------------------------------------------- printing

pub fn print_law(law: &HoGsosLaw) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "law {}", law.name);
    let _ = writeln!(s, "signature {}", law.sig.name());
    let _ = writeln!(s, "effect {}", law.effect);
    if law.guarded {
        let _ = writeln!(s, "guarded");
    }
    if let Some(v) = &law.variables {
        let _ = writeln!(s, "variables {v}");
    }
    for (fam, r) in &law.ranks {
        let _ = writeln!(s, "rank {fam} {r}");
    }
    for rule in &law.rules {
        let _ = writeln!(s, "{}", print_rule(rule));
    }
    s
}

pub fn print_rule(rule: &Rule) -> String {
    let mut s = print_pattern(&rule.pattern);
    s.push_str(" => ");
    match &rule.conclusion.step {
        ConclusionStep::Terminal => s.push_str("term"),
        ConclusionStep::Function(e) => {
            s.push_str("fun ");
            s.push_str(&print_expr(e));
        }
        ConclusionStep::Reduct(b) => {
            s.push_str("red ");
            match b {
                Branches::Single(e) => s.push_str(&print_expr(e)),
                Branches::Set(es) => {
                    s.push('{');
                    s.push_str(&es.iter().map(print_expr).collect::<Vec<_>>().join(", "));
                    s.push('}');
                }
                Branches::Dist(ws) => {
                    s.push('[');
                    let parts: Vec<String> = ws.iter().map(|(w, e)| format!("{w}: {}", print_expr(e))).collect();
                    s.push_str(&parts.join(", "));
                    s.push(']');
                }
            }
        }
    }
    if let Some(e) = &rule.conclusion.subst {
        s.push_str(" ; subst ");
        s.push_str(&print_expr(e));
    }
    s
}

pub fn print_pattern(p: &RulePattern) -> String {
    let stage = match p.stage {
        Some(StageGuard::Zero) => " @0",
        Some(StageGuard::Succ) => " @+",
        None => "",
    };
    if p.premises.is_empty() {
        return format!("{}{stage}", p.family);
    }
    let ps: Vec<&str> = p
        .premises
        .iter()
        .map(|p| match p {
            Premise::Any => "any",
            Premise::Tag(StepTag::Reduct) => "red",
            Premise::Tag(StepTag::Function) => "fun",
            Premise::Tag(StepTag::Terminal) => "term",
        })
        .collect();
    format!("{}({}){stage}", p.family, ps.join(", "))
}

pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Arg(i) => format!("x{i}"),
        Expr::ReductOf(i) => format!("y{i}"),
        Expr::ApplyFun(i, a) => format!("f{i}({})", print_expr(a)),
        Expr::Op(f, idx, args) => {
            let head = match idx {
                Some(i) => format!("{f}#{i}"),
                None => f.clone(),
            };
            if args.is_empty() {
                head
            } else {
                format!("{head}({})", args.iter().map(print_expr).collect::<Vec<_>>().join(", "))
            }
        }
        Expr::SubstOf(i, env) => {
            let env = match env {
                EnvExpr::Incoming => "u".to_string(),
                EnvExpr::Weakened => "u+".to_string(),
                EnvExpr::Extend(e) => format!("id, {}", print_expr(e)),
            };
            format!("s{i}[{env}]")
        }
        Expr::Probe => "t".into(),
        Expr::EnvAt => "u@".into(),
        Expr::Trivial => "*".into(),
    }
}

// ----------------------------------------------------------------- parsing

fn parse_law(sig: Arc<dyn Signature>, text: &str) -> Result<HoGsosLaw> {
    let mut name = None;
    let mut effect = Effect::Deterministic;
    let mut guarded = false;
    let mut variables = None;
    let mut ranks = Vec::new();
    let mut rules = Vec::new();
    let mut offset = 0;
    for line in text.lines() {
        let pos = offset;
        offset += line.len() + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut words = trimmed.split_whitespace();
        match words.next() {
            Some("law") => name = words.next().map(str::to_string),
            Some("signature") => {
                let want = words.next().unwrap_or_default();
                if want != sig.name() {
                    return Err(Error::parse(pos, format!("law is for signature `{want}`, got `{}`", sig.name())));
                }
            }
            Some("effect") => {
                effect = match words.next() {
                    Some("det") => Effect::Deterministic,
                    Some("dist") => Effect::FiniteDistribution,
                    Some("set") => Effect::FinitePowerset,
                    other => return Err(Error::parse(pos, format!("unknown effect {other:?}"))),
                }
            }
            Some("guarded") => guarded = true,
            Some("variables") => variables = words.next().map(str::to_string),
            Some("rank") => {
                let fam = words.next().ok_or_else(|| Error::parse(pos, "rank needs a family"))?;
                let r = words
                    .next()
                    .and_then(|w| w.parse::<u32>().ok())
                    .ok_or_else(|| Error::parse(pos, "rank needs a number"))?;
                ranks.push((fam.to_string(), r));
            }
            _ => rules.push(parse_rule_line(trimmed, pos)?),
        }
    }
    let name = name.ok_or_else(|| Error::parse(0, "missing `law NAME` header"))?;
    Ok(HoGsosLaw {
        name,
        sig,
        effect,
        guarded,
        variables,
        ranks,
        rules,
    })
}

/// Parses one rule line `pattern [@0|@+] => conclusion [; subst expr]`.
pub fn parse_rule_line(line: &str, base: usize) -> Result<Rule> {
    let mut p = Parser { src: line, pos: 0, base };
    let rule = p.rule()?;
    p.ws();
    if p.pos != p.src.len() {
        return Err(p.err("trailing input"));
    }
    Ok(rule)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    base: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::parse(self.base + self.pos, msg)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn ws(&mut self) {
        while let Some(c) = self.rest().chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{tok}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.ws();
        let start = self.pos;
        for (i, c) in self.rest().char_indices() {
            if !(c.is_alphanumeric() || c == '_' || c == '\'') {
                self.pos = start + i;
                break;
            }
            self.pos = start + i + c.len_utf8();
        }
        if self.pos == start {
            return Err(self.err("expected identifier"));
        }
        Ok(&self.src[start..self.pos])
    }

    fn number(&mut self) -> Result<u64> {
        self.ws();
        let start = self.pos;
        while self.rest().chars().next().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.src[start..self.pos].parse().map_err(|_| self.err("expected number"))
    }

    fn rule(&mut self) -> Result<Rule> {
        let family = self.ident()?.to_string();
        let mut premises = Vec::new();
        if self.eat("(") {
            loop {
                let w = self.ident()?;
                premises.push(match w {
                    "any" => Premise::Any,
                    "red" => Premise::Tag(StepTag::Reduct),
                    "fun" => Premise::Tag(StepTag::Function),
                    "term" => Premise::Tag(StepTag::Terminal),
                    _ => return Err(self.err("premise must be any, red, fun or term")),
                });
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        let stage = if self.eat("@0") {
            Some(StageGuard::Zero)
        } else if self.eat("@+") {
            Some(StageGuard::Succ)
        } else {
            None
        };
        self.expect("=>")?;
        let step = match self.ident()? {
            "term" => ConclusionStep::Terminal,
            "fun" => ConclusionStep::Function(self.expr()?),
            "red" => ConclusionStep::Reduct(self.branches()?),
            _ => return Err(self.err("conclusion must start with term, red or fun")),
        };
        let subst = if self.eat(";") {
            if self.ident()? != "subst" {
                return Err(self.err("expected `subst`"));
            }
            Some(self.expr()?)
        } else {
            None
        };
        Ok(Rule {
            pattern: RulePattern {
                family,
                premises,
                stage,
            },
            conclusion: RuleConclusion { step, subst },
        })
    }

    fn branches(&mut self) -> Result<Branches> {
        if self.eat("{") {
            let mut es = vec![self.expr()?];
            while self.eat(",") {
                es.push(self.expr()?);
            }
            self.expect("}")?;
            return Ok(Branches::Set(es));
        }
        if self.eat("[") {
            let mut ws = Vec::new();
            let mut total = Weight::zero();
            loop {
                let num = self.number()?;
                let den = if self.eat("/") { self.number()? } else { 1 };
                if den == 0 {
                    return Err(self.err("zero denominator"));
                }
                let w = Weight::new(num.into(), den.into());
                self.expect(":")?;
                total += &w;
                ws.push((w, self.expr()?));
                if self.eat("]") {
                    break;
                }
                self.expect(",")?;
            }
            if !total.is_one() {
                return Err(Error::MalformedDistribution(format!("rule weights sum to {total}")));
            }
            return Ok(Branches::Dist(ws));
        }
        Ok(Branches::Single(self.expr()?))
    }

    fn expr(&mut self) -> Result<Expr> {
        if self.eat("*") {
            return Ok(Expr::Trivial);
        }
        let id = self.ident()?;
        let indexed = |prefix: char| -> Option<usize> {
            let rest = id.strip_prefix(prefix)?;
            if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_digit()) {
                return None;
            }
            rest.parse().ok()
        };
        if id == "t" {
            return Ok(Expr::Probe);
        }
        if id == "u" {
            self.expect("@")?;
            return Ok(Expr::EnvAt);
        }
        if let Some(i) = indexed('x') {
            return Ok(Expr::Arg(i));
        }
        if let Some(i) = indexed('y') {
            return Ok(Expr::ReductOf(i));
        }
        if let Some(i) = indexed('f') {
            self.expect("(")?;
            let a = self.expr()?;
            self.expect(")")?;
            return Ok(Expr::ApplyFun(i, Box::new(a)));
        }
        if let Some(i) = indexed('s') {
            self.expect("[")?;
            let env = if self.eat("id") {
                self.expect(",")?;
                EnvExpr::Extend(Box::new(self.expr()?))
            } else {
                self.expect("u")?;
                if self.eat("+") {
                    EnvExpr::Weakened
                } else {
                    EnvExpr::Incoming
                }
            };
            self.expect("]")?;
            return Ok(Expr::SubstOf(i, env));
        }
        let index = if self.rest().starts_with('#') {
            self.pos += 1;
            Some(self.number()? as u32)
        } else {
            None
        };
        let mut args = Vec::new();
        if self.eat("(") {
            loop {
                args.push(self.expr()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(Expr::Op(id.to_string(), index, args))
    }
}

// ------------------------------------------------------------- utilities

impl Expr {
    /// Operator families in head position and strictly nested, for flatness.
    pub fn visit_ops(&self, nested: bool, f: &mut impl FnMut(&str, bool)) {
        match self {
            Expr::Op(fam, _, args) => {
                f(fam, nested);
                for a in args {
                    a.visit_ops(true, f);
                }
            }
            Expr::ApplyFun(_, a) => a.visit_ops(true, f),
            Expr::SubstOf(_, EnvExpr::Extend(e)) => e.visit_ops(true, f),
            _ => {}
        }
    }

    pub fn reduct_indices(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expr::ReductOf(i) => {
                out.insert(*i);
            }
            Expr::ApplyFun(_, a) => a.reduct_indices(out),
            Expr::Op(_, _, args) => args.iter().for_each(|a| a.reduct_indices(out)),
            Expr::SubstOf(_, EnvExpr::Extend(e)) => e.reduct_indices(out),
            _ => {}
        }
    }

    /// Highest argument position mentioned, for arity validation.
    pub fn max_position(&self) -> Option<usize> {
        match self {
            Expr::Arg(i) | Expr::ReductOf(i) => Some(*i),
            Expr::ApplyFun(i, a) => Some((*i).max(a.max_position().unwrap_or(0))),
            Expr::SubstOf(i, EnvExpr::Extend(e)) => Some((*i).max(e.max_position().unwrap_or(0))),
            Expr::SubstOf(i, _) => Some(*i),
            Expr::Op(_, _, args) => args.iter().filter_map(Expr::max_position).max(),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_lines_round_trip() {
        let lines = [
            "e => term",
            "I => fun t",
            "K'(any) => fun x0",
            "S''(any, any) => fun app(app(x0, t), app(x1, t))",
            "app(red, any) => red app(y0, x1)",
            "app(fun, any) => red f0(x1)",
            "plus(any, any) => red [1/2: x0, 1/2: x1]",
            "plus(any, any) => red {x0, x1}",
            "app(any, any) @0 => red *",
            "var => term ; subst u@",
            "lam(any) => fun s0[id, t] ; subst lam(s0[u+])",
            "app(term, any) => term ; subst app(s0[u], s1[u])",
        ];
        for l in lines {
            let r = parse_rule_line(l, 0).unwrap();
            assert_eq!(print_rule(&r), l);
        }
    }

    #[test]
    fn malformed_rules_are_rejected() {
        assert!(parse_rule_line("app(red any) => term", 0).is_err());
        assert!(parse_rule_line("e => jump", 0).is_err());
        assert!(matches!(
            parse_rule_line("plus(any, any) => red [1/2: x0, 1/3: x1]", 0),
            Err(Error::MalformedDistribution(_))
        ));
    }

    #[test]
    fn nested_operator_visit_marks_depth() {
        let r = parse_rule_line("S''(any, any) => fun app(app(x0, t), app(x1, t))", 0).unwrap();
        let ConclusionStep::Function(e) = &r.conclusion.step else { panic!() };
        let mut seen = Vec::new();
        e.visit_ops(false, &mut |f, nested| seen.push((f.to_string(), nested)));
        assert_eq!(seen[0], ("app".to_string(), false));
        assert!(seen[1..].iter().all(|(_, n)| *n));
    }
}
