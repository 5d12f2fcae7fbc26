//! Surface syntax of the combinatory calculi.
//!
//! ```text
//! par   ::= plus ('||' plus)*            ∥ also accepted for ||
//! plus  ::= app ('(+)' app)*             ⊕ also accepted for (+)
//! app   ::= atom atom*                   left-associative
//! atom  ::= '(' par ')'
//!         | NAME ['[' ty (',' ty)* ']']  S K I e, or a metavariable
//!         | PRIMED '(' par (',' par)* ')'  S'(p)  K'(p)  S''(p, q)
//! ty    ::= 'unit' | ty '->' ty | '(' ty ')'
//! ```
//!
//! Primes may be written `'`, `′` or `″`. Lowercase names other than `e`
//! are metavariables.

use crate::error::{Error, Result};
use crate::kernel::Ty;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Raw {
    /// Constant or metavariable, with optional explicit type arguments.
    Name {
        name: String,
        types: Option<Vec<Ty>>,
        pos: usize,
    },
    /// `S'`, `K'` or `S''` with their arguments.
    Primed { name: String, args: Vec<Raw>, pos: usize },
    App(Box<Raw>, Box<Raw>),
    Plus(Box<Raw>, Box<Raw>),
    Par(Box<Raw>, Box<Raw>),
}

impl Raw {
    pub fn pos(&self) -> usize {
        match self {
            Raw::Name { pos, .. } | Raw::Primed { pos, .. } => *pos,
            Raw::App(a, _) | Raw::Plus(a, _) | Raw::Par(a, _) => a.pos(),
        }
    }
}

pub fn is_metavariable(name: &str) -> bool {
    name != "e" && name.chars().next().is_some_and(|c| c.is_lowercase())
}

/// Replaces typographic primes and operators by their ASCII forms.
fn normalize(src: &str) -> String {
    src.replace('″', "''")
        .replace('′', "'")
        .replace('⊕', "(+)")
        .replace('∥', "||")
        .replace('→', "->")
}

pub fn parse_raw(src: &str) -> Result<Raw> {
    let text = normalize(src);
    let mut p = P { s: &text, pos: 0 };
    let r = p.par()?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(Error::parse(p.pos, "unexpected input"));
    }
    Ok(r)
}

pub fn parse_ty(src: &str) -> Result<Ty> {
    let text = normalize(src);
    let mut p = P { s: &text, pos: 0 };
    let t = p.ty()?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(Error::parse(p.pos, "unexpected input after type"));
    }
    Ok(t)
}

struct P<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> P<'a> {
    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.s.len() - trimmed.len();
    }

    fn peek(&mut self, tok: &str) -> bool {
        self.ws();
        self.rest().starts_with(tok)
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.peek(tok) {
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
            Err(Error::parse(self.pos, format!("expected `{tok}`")))
        }
    }

    fn par(&mut self) -> Result<Raw> {
        let mut left = self.plus()?;
        while self.eat("||") {
            let right = self.plus()?;
            left = Raw::Par(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn plus(&mut self) -> Result<Raw> {
        let mut left = self.app()?;
        while self.eat("(+)") {
            let right = self.app()?;
            left = Raw::Plus(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn starts_atom(&mut self) -> bool {
        self.ws();
        if self.rest().starts_with("(+)") {
            return false;
        }
        match self.rest().chars().next() {
            Some('(') => true,
            Some(c) => c.is_alphabetic() || c == '_',
            None => false,
        }
    }

    fn app(&mut self) -> Result<Raw> {
        let mut left = self.atom()?;
        while self.starts_atom() {
            let right = self.atom()?;
            left = Raw::App(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn name(&mut self) -> Result<(String, usize)> {
        self.ws();
        let start = self.pos;
        let len = self
            .rest()
            .char_indices()
            .find(|(_, c)| !(c.is_alphanumeric() || *c == '_' || *c == '\''))
            .map_or(self.rest().len(), |(i, _)| i);
        if len == 0 {
            return Err(Error::parse(start, "expected a term"));
        }
        self.pos += len;
        Ok((self.s[start..start + len].to_string(), start))
    }

    fn atom(&mut self) -> Result<Raw> {
        if self.eat("(") {
            let r = self.par()?;
            self.expect(")")?;
            return Ok(r);
        }
        let (name, pos) = self.name()?;
        if name.ends_with('\'') {
            self.expect("(")?;
            let mut args = vec![self.par()?];
            while self.eat(",") {
                args.push(self.par()?);
            }
            self.expect(")")?;
            return Ok(Raw::Primed { name, args, pos });
        }
        let types = if self.eat("[") {
            let mut tys = vec![self.ty()?];
            while self.eat(",") {
                tys.push(self.ty()?);
            }
            self.expect("]")?;
            Some(tys)
        } else {
            None
        };
        Ok(Raw::Name { name, types, pos })
    }

    fn ty(&mut self) -> Result<Ty> {
        let dom = if self.eat("(") {
            let t = self.ty()?;
            self.expect(")")?;
            t
        } else if self.eat("unit") {
            Ty::Unit
        } else {
            return Err(Error::parse(self.pos, "expected a type"));
        };
        if self.eat("->") {
            Ok(Ty::arrow(dom, self.ty()?))
        } else {
            Ok(dom)
        }
    }
}

/// Precedence levels for printing: parallel < choice < application < atom.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Prec {
    Par,
    Plus,
    AppFun,
    Atom,
}

/// Wraps `s` in parentheses when its own level is below the context's.
pub fn paren(s: String, own: Prec, ctx: Prec) -> String {
    if own < ctx {
        format!("({s})")
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn application_is_left_associative() {
        let r = parse_raw("S t s e").unwrap();
        let Raw::App(f, _) = r else { panic!() };
        assert!(matches!(*f, Raw::App(_, _)));
    }

    #[test]
    fn primes_and_unicode() {
        assert_eq!(parse_raw("S″(t, s) e").unwrap(), parse_raw("S''(t, s) e").unwrap());
        assert_eq!(parse_raw("p ⊕ q ∥ r").unwrap(), parse_raw("p (+) q || r").unwrap());
    }

    #[test]
    fn choice_binds_tighter_than_parallel() {
        let r = parse_raw("a (+) b || c").unwrap();
        assert!(matches!(r, Raw::Par(ref l, _) if matches!(**l, Raw::Plus(_, _))));
    }

    #[test]
    fn type_arrows_are_right_associative() {
        let t = parse_ty("unit -> unit -> unit").unwrap();
        assert_eq!(t, Ty::arrow(Ty::Unit, Ty::arrow(Ty::Unit, Ty::Unit)));
        assert_eq!(parse_ty("(unit → unit) → unit").unwrap().complexity(), 3);
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(parse_raw("S (K"), Err(Error::ParseError { .. })));
        assert!(matches!(parse_raw("K' e"), Err(Error::ParseError { .. })));
    }
}
