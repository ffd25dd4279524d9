//! Syntax of the modal mu-calculus: parsing, pretty printing, occurrence
//! bookkeeping, reference formulas and normal form.
//!
//! Negation appears only on proposition symbols. Propositions are
//! lowercase-initial identifiers, labels uppercase-initial, so the two
//! namespaces cannot collide. Distinct occurrences of equal subformulas are
//! told apart by their child-index path from the root ([`OccPath`]).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which fixpoint a binder takes: least (`mu`) or greatest (`nu`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum FixKind {
    Mu,
    Nu,
}

impl fmt::Display for FixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FixKind::Mu => "mu",
            FixKind::Nu => "nu",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("invalid proposition symbol {0:?} (lowercase-initial identifier required)")]
    InvalidProp(String),
    #[error("invalid label symbol {0:?} (uppercase-initial identifier required)")]
    InvalidLabel(String),
    #[error("no occurrence at path {0}")]
    InvalidPath(OccPath),
    #[error("occurrence {0} is not a label")]
    NotALabel(OccPath),
    #[error("label {sym} at {occ} is free: no enclosing binder")]
    FreeLabel { sym: LabelSym, occ: OccPath },
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

fn is_ident_tail(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// A proposition symbol: `[a-z][A-Za-z0-9_]*`, excluding the keywords
/// `mu` and `nu`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct PropSym(String);

impl PropSym {
    pub fn new(name: &str) -> Result<Self, FormulaError> {
        let ok = name
            .as_bytes()
            .first()
            .is_some_and(|b| b.is_ascii_lowercase())
            && name.bytes().all(is_ident_tail)
            && name != "mu"
            && name != "nu";
        if ok {
            Ok(PropSym(name.to_string()))
        } else {
            Err(FormulaError::InvalidProp(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PropSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A label symbol: `[A-Z][A-Za-z0-9_]*`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct LabelSym(String);

impl LabelSym {
    pub fn new(name: &str) -> Result<Self, FormulaError> {
        let ok = name
            .as_bytes()
            .first()
            .is_some_and(|b| b.is_ascii_uppercase())
            && name.bytes().all(is_ident_tail);
        if ok {
            Ok(LabelSym(name.to_string()))
        } else {
            Err(FormulaError::InvalidLabel(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LabelSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Path of child indices from the root of a formula to one occurrence.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize)]
pub struct OccPath(Vec<u8>);

impl OccPath {
    pub fn root() -> Self {
        OccPath(Vec::new())
    }

    pub fn child(&self, index: u8) -> Self {
        let mut v = self.0.clone();
        v.push(index);
        OccPath(v)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(OccPath(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn indices(&self) -> &[u8] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// True when `self` is a proper prefix of `other`.
    pub fn is_strict_ancestor_of(&self, other: &OccPath) -> bool {
        self.0.len() < other.0.len() && other.0[..self.0.len()] == self.0[..]
    }
}

impl fmt::Display for OccPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (i, ix) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{ix}")?;
        }
        Ok(())
    }
}

/// Abstract syntax of a mu-calculus formula.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Formula {
    Prop(PropSym),
    NegProp(PropSym),
    Label(LabelSym),
    Or(std::boxed::Box<Formula>, std::boxed::Box<Formula>),
    And(std::boxed::Box<Formula>, std::boxed::Box<Formula>),
    Diamond(std::boxed::Box<Formula>),
    Box(std::boxed::Box<Formula>),
    Mu(LabelSym, std::boxed::Box<Formula>),
    Nu(LabelSym, std::boxed::Box<Formula>),
}

impl Formula {
    /// Convenience constructor; panics on a malformed name.
    pub fn prop(name: &str) -> Formula {
        Formula::Prop(PropSym::new(name).expect("valid proposition name"))
    }

    pub fn neg_prop(name: &str) -> Formula {
        Formula::NegProp(PropSym::new(name).expect("valid proposition name"))
    }

    pub fn label(name: &str) -> Formula {
        Formula::Label(LabelSym::new(name).expect("valid label name"))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(l.into(), r.into())
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(l.into(), r.into())
    }

    pub fn diamond(f: Formula) -> Formula {
        Formula::Diamond(f.into())
    }

    pub fn box_(f: Formula) -> Formula {
        Formula::Box(f.into())
    }

    pub fn mu(x: &str, body: Formula) -> Formula {
        Formula::Mu(LabelSym::new(x).expect("valid label name"), body.into())
    }

    pub fn nu(x: &str, body: Formula) -> Formula {
        Formula::Nu(LabelSym::new(x).expect("valid label name"), body.into())
    }

    pub fn fix(kind: FixKind, x: LabelSym, body: Formula) -> Formula {
        match kind {
            FixKind::Mu => Formula::Mu(x, body.into()),
            FixKind::Nu => Formula::Nu(x, body.into()),
        }
    }

    pub fn child_count(&self) -> usize {
        match self {
            Formula::Prop(_) | Formula::NegProp(_) | Formula::Label(_) => 0,
            Formula::Diamond(_) | Formula::Box(_) | Formula::Mu(..) | Formula::Nu(..) => 1,
            Formula::Or(..) | Formula::And(..) => 2,
        }
    }

    pub fn child(&self, i: usize) -> Option<&Formula> {
        match (self, i) {
            (Formula::Or(l, _), 0) | (Formula::And(l, _), 0) => Some(l),
            (Formula::Or(_, r), 1) | (Formula::And(_, r), 1) => Some(r),
            (Formula::Diamond(c), 0)
            | (Formula::Box(c), 0)
            | (Formula::Mu(_, c), 0)
            | (Formula::Nu(_, c), 0) => Some(c),
            _ => None,
        }
    }

    pub fn node_at(&self, path: &OccPath) -> Result<&Formula, FormulaError> {
        let mut node = self;
        for &ix in path.indices() {
            node = node
                .child(ix as usize)
                .ok_or_else(|| FormulaError::InvalidPath(path.clone()))?;
        }
        Ok(node)
    }

    /// Every node of the syntax tree, in preorder.
    pub fn occurrences(&self) -> Vec<OccPath> {
        let mut out = Vec::new();
        self.walk(&OccPath::root(), &mut |path, _| out.push(path.clone()));
        out
    }

    /// The `mu`/`nu` occurrences, in preorder.
    pub fn fixpoint_occurrences(&self) -> Vec<OccPath> {
        let mut out = Vec::new();
        self.walk(&OccPath::root(), &mut |path, node| {
            if matches!(node, Formula::Mu(..) | Formula::Nu(..)) {
                out.push(path.clone());
            }
        });
        out
    }

    fn walk(&self, at: &OccPath, visit: &mut impl FnMut(&OccPath, &Formula)) {
        visit(at, self);
        for i in 0..self.child_count() {
            self.child(i)
                .expect("child in range")
                .walk(&at.child(i as u8), visit);
        }
    }

    pub fn node_count(&self) -> usize {
        1 + (0..self.child_count())
            .map(|i| self.child(i).expect("child in range").node_count())
            .sum::<usize>()
    }

    /// Height in edges of the syntax tree (0 for an atom).
    pub fn height(&self) -> usize {
        (0..self.child_count())
            .map(|i| 1 + self.child(i).expect("child in range").height())
            .max()
            .unwrap_or(0)
    }

    /// Labels not bound by any enclosing `mu`/`nu`. A formula is a sentence
    /// iff this is empty.
    pub fn free_labels(&self) -> BTreeSet<LabelSym> {
        fn go(f: &Formula, bound: &mut Vec<LabelSym>, out: &mut BTreeSet<LabelSym>) {
            match f {
                Formula::Label(x) => {
                    if !bound.contains(x) {
                        out.insert(x.clone());
                    }
                }
                Formula::Mu(x, body) | Formula::Nu(x, body) => {
                    bound.push(x.clone());
                    go(body, bound, out);
                    bound.pop();
                }
                _ => {
                    for i in 0..f.child_count() {
                        go(f.child(i).expect("child in range"), bound, out);
                    }
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_sentence(&self) -> bool {
        self.free_labels().is_empty()
    }

    /// The nearest enclosing `mu`/`nu` occurrence binding the label at
    /// `label_occ`.
    pub fn reference_formula(&self, label_occ: &OccPath) -> Result<OccPath, FormulaError> {
        let sym = match self.node_at(label_occ)? {
            Formula::Label(x) => x.clone(),
            _ => return Err(FormulaError::NotALabel(label_occ.clone())),
        };
        let mut prefix = label_occ.clone();
        while let Some(parent) = prefix.parent() {
            match self.node_at(&parent)? {
                Formula::Mu(y, _) | Formula::Nu(y, _) if *y == sym => return Ok(parent),
                _ => prefix = parent,
            }
        }
        Err(FormulaError::FreeLabel {
            sym,
            occ: label_occ.clone(),
        })
    }

    /// True when no label is bound by two distinct `mu`/`nu` occurrences.
    pub fn is_normal_form(&self) -> bool {
        let mut seen = BTreeSet::new();
        let mut ok = true;
        self.walk(&OccPath::root(), &mut |_, node| {
            if let Formula::Mu(x, _) | Formula::Nu(x, _) = node {
                if !seen.insert(x.clone()) {
                    ok = false;
                }
            }
        });
        ok
    }

    /// Renames binders so every label is bound at most once. The first
    /// occurrence of a binder keeps its name; later ones get the original
    /// name suffixed with the smallest collision-free counter. Idempotent
    /// and semantics-preserving.
    pub fn to_normal_form(&self) -> Formula {
        let mut used: BTreeSet<String> = BTreeSet::new();
        self.walk(&OccPath::root(), &mut |_, node| match node {
            Formula::Label(x) => {
                used.insert(x.as_str().to_string());
            }
            Formula::Mu(x, _) | Formula::Nu(x, _) => {
                used.insert(x.as_str().to_string());
            }
            _ => {}
        });
        let mut taken: BTreeSet<String> = BTreeSet::new();

        fn go(
            f: &Formula,
            env: &mut Vec<(LabelSym, LabelSym)>,
            used: &mut BTreeSet<String>,
            taken: &mut BTreeSet<String>,
        ) -> Formula {
            match f {
                Formula::Prop(_) | Formula::NegProp(_) => f.clone(),
                Formula::Label(x) => {
                    let renamed = env
                        .iter()
                        .rev()
                        .find(|(orig, _)| orig == x)
                        .map(|(_, new)| new.clone())
                        .unwrap_or_else(|| x.clone());
                    Formula::Label(renamed)
                }
                Formula::Or(l, r) => Formula::or(go(l, env, used, taken), go(r, env, used, taken)),
                Formula::And(l, r) => {
                    Formula::and(go(l, env, used, taken), go(r, env, used, taken))
                }
                Formula::Diamond(c) => Formula::diamond(go(c, env, used, taken)),
                Formula::Box(c) => Formula::box_(go(c, env, used, taken)),
                Formula::Mu(x, body) | Formula::Nu(x, body) => {
                    let kind = if matches!(f, Formula::Mu(..)) {
                        FixKind::Mu
                    } else {
                        FixKind::Nu
                    };
                    let name = if taken.contains(x.as_str()) {
                        let mut k = 1u64;
                        let fresh = loop {
                            let cand = format!("{}{}", x.as_str(), k);
                            if !used.contains(&cand) && !taken.contains(&cand) {
                                break cand;
                            }
                            k += 1;
                        };
                        used.insert(fresh.clone());
                        LabelSym::new(&fresh).expect("generated label is valid")
                    } else {
                        x.clone()
                    };
                    taken.insert(name.as_str().to_string());
                    env.push((x.clone(), name.clone()));
                    let body = go(body, env, used, taken);
                    env.pop();
                    Formula::fix(kind, name, body)
                }
            }
        }

        go(self, &mut Vec::new(), &mut used, &mut taken)
    }
}

// Printing. Precedence: or < and < unary < atoms, with fixpoints weakest.
// Fixpoint bodies and right operands are parenthesized where re-parsing
// would otherwise associate differently.
fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Mu(..) | Formula::Nu(..) => 0,
        Formula::Or(..) => 1,
        Formula::And(..) => 2,
        Formula::Diamond(_) | Formula::Box(_) => 3,
        Formula::Prop(_) | Formula::NegProp(_) | Formula::Label(_) => 4,
    }
}

fn fmt_prec(f: &Formula, min: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(f) < min {
        out.write_str("(")?;
        fmt_prec(f, 0, out)?;
        return out.write_str(")");
    }
    match f {
        Formula::Prop(p) => write!(out, "{p}"),
        Formula::NegProp(p) => write!(out, "~{p}"),
        Formula::Label(x) => write!(out, "{x}"),
        Formula::Or(l, r) => {
            fmt_prec(l, 1, out)?;
            out.write_str(" | ")?;
            fmt_prec(r, 2, out)
        }
        Formula::And(l, r) => {
            fmt_prec(l, 2, out)?;
            out.write_str(" & ")?;
            fmt_prec(r, 3, out)
        }
        Formula::Diamond(c) => {
            out.write_str("<>")?;
            fmt_prec(c, 3, out)
        }
        Formula::Box(c) => {
            out.write_str("[]")?;
            fmt_prec(c, 3, out)
        }
        Formula::Mu(x, body) => {
            write!(out, "mu {x}. ")?;
            fmt_prec(body, 3, out)
        }
        Formula::Nu(x, body) => {
            write!(out, "nu {x}. ")?;
            fmt_prec(body, 3, out)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, 0, f)
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    let f = p.or_level()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(f)
}

impl FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_formula(s)
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            position: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.bytes[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let start = self.pos;
        if !self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_alphabetic())
        {
            return None;
        }
        while self.bytes.get(self.pos).is_some_and(|&b| is_ident_tail(b)) {
            self.pos += 1;
        }
        Some(std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii ident"))
    }

    fn or_level(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.and_level()?;
        while self.peek() == Some(b'|') {
            self.pos += 1;
            acc = Formula::or(acc, self.and_level()?);
        }
        Ok(acc)
    }

    fn and_level(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while self.peek() == Some(b'&') {
            self.pos += 1;
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(b'~') => {
                self.pos += 1;
                self.skip_ws();
                let at = self.pos;
                match self.ident() {
                    Some(name) if name != "mu" && name != "nu" => {
                        match PropSym::new(name) {
                            Ok(p) => Ok(Formula::NegProp(p)),
                            Err(_) => {
                                self.pos = at;
                                Err(self.err("negation applies only to proposition symbols"))
                            }
                        }
                    }
                    _ => {
                        self.pos = at;
                        Err(self.err("negation applies only to proposition symbols"))
                    }
                }
            }
            Some(b'<') => {
                if self.eat("<>") {
                    Ok(Formula::diamond(self.unary()?))
                } else {
                    Err(self.err("expected '<>'"))
                }
            }
            Some(b'[') => {
                if self.eat("[]") {
                    Ok(Formula::box_(self.unary()?))
                } else {
                    Err(self.err("expected '[]'"))
                }
            }
            Some(b'(') => {
                self.pos += 1;
                let f = self.or_level()?;
                if self.peek() == Some(b')') {
                    self.pos += 1;
                    Ok(f)
                } else {
                    Err(self.err("expected ')'"))
                }
            }
            Some(b) if b.is_ascii_alphabetic() => {
                let at = self.pos;
                let name = self.ident().expect("alphabetic start");
                match name {
                    "mu" | "nu" => {
                        let kind = if name == "mu" { FixKind::Mu } else { FixKind::Nu };
                        self.skip_ws();
                        let label_at = self.pos;
                        let label = match self.ident() {
                            Some(l) => match LabelSym::new(l) {
                                Ok(sym) => sym,
                                Err(_) => {
                                    self.pos = label_at;
                                    return Err(self.err(
                                        "fixpoint operators bind label symbols (uppercase-initial)",
                                    ));
                                }
                            },
                            None => {
                                self.pos = label_at;
                                return Err(self.err("expected a label symbol"));
                            }
                        };
                        if !self.eat(".") {
                            return Err(self.err("expected '.' after fixpoint binder"));
                        }
                        // Fixpoint scope extends maximally to the right.
                        Ok(Formula::fix(kind, label, self.or_level()?))
                    }
                    _ => {
                        if name.as_bytes()[0].is_ascii_lowercase() {
                            Ok(Formula::Prop(PropSym::new(name).map_err(|_| {
                                self.pos = at;
                                self.err(format!("invalid proposition name {name:?}"))
                            })?))
                        } else {
                            Ok(Formula::Label(LabelSym::new(name).map_err(|_| {
                                self.pos = at;
                                self.err(format!("invalid label name {name:?}"))
                            })?))
                        }
                    }
                }
            }
            _ => Err(self.err("expected a formula")),
        }
    }
}
