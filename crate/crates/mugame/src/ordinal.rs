//! Ordinals in Cantor normal form below `w^w`.
//!
//! A value is a finite sum `w^k1*c1 + ... + w^kn*cn` with strictly decreasing
//! exponents and positive coefficients; the empty sum is zero. These serve as
//! clock values and clock bounds. Only comparison, classification and
//! predecessor are needed downstream, so no general ordinal arithmetic is
//! provided.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// An ordinal below `w^w` in Cantor normal form.
///
/// The derived `Ord` on the term list is exactly the ordinal order: a higher
/// leading exponent dominates, equal exponents compare by coefficient, and a
/// proper prefix (fewer trailing terms) is smaller.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Ordinal {
    /// `(exponent, coefficient)` pairs, exponents strictly decreasing,
    /// coefficients >= 1.
    terms: Vec<(u32, u64)>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OrdinalClass {
    Zero,
    Successor,
    Limit,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrdinalError {
    #[error("ordinal syntax error: {0}")]
    Parse(String),
    #[error("ordinal {0} is not a successor, it has no predecessor")]
    NoPredecessor(Ordinal),
    #[error("invalid Cantor normal form: {0}")]
    BadTerms(String),
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn finite(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            Ordinal { terms: vec![(0, n)] }
        }
    }

    pub fn omega() -> Self {
        Ordinal { terms: vec![(1, 1)] }
    }

    /// Builds an ordinal from `(exponent, coefficient)` pairs, which must
    /// have strictly decreasing exponents and nonzero coefficients.
    pub fn from_terms(terms: Vec<(u32, u64)>) -> Result<Self, OrdinalError> {
        for pair in terms.windows(2) {
            if pair[0].0 <= pair[1].0 {
                return Err(OrdinalError::BadTerms(
                    "exponents must be strictly decreasing".into(),
                ));
            }
        }
        if terms.iter().any(|&(_, c)| c == 0) {
            return Err(OrdinalError::BadTerms("coefficients must be >= 1".into()));
        }
        Ok(Ordinal { terms })
    }

    pub fn terms(&self) -> &[(u32, u64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The natural-number value if this ordinal is below `w`.
    pub fn to_finite(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [(0, c)] => Some(*c),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_finite().is_some()
    }

    pub fn classify(&self) -> OrdinalClass {
        match self.terms.last() {
            None => OrdinalClass::Zero,
            Some((0, _)) => OrdinalClass::Successor,
            Some(_) => OrdinalClass::Limit,
        }
    }

    /// The ordinal `b` with `b + 1 == self`; errors on zero and limits.
    pub fn predecessor(&self) -> Result<Ordinal, OrdinalError> {
        if self.classify() != OrdinalClass::Successor {
            return Err(OrdinalError::NoPredecessor(self.clone()));
        }
        let mut terms = self.terms.clone();
        let last = terms.last_mut().expect("successor has a trailing term");
        if last.1 > 1 {
            last.1 -= 1;
        } else {
            terms.pop();
        }
        Ok(Ordinal { terms })
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, &(exp, coef)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            match (exp, coef) {
                (0, c) => write!(f, "{c}")?,
                (1, 1) => write!(f, "w")?,
                (1, c) => write!(f, "w*{c}")?,
                (e, 1) => write!(f, "w^{e}")?,
                (e, c) => write!(f, "w^{e}*{c}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for Ordinal {
    type Err = OrdinalError;

    /// Parses `"w^K*C + ... + C0"`; a plain natural denotes a finite
    /// ordinal. Exponents must be strictly decreasing.
    fn from_str(s: &str) -> Result<Self, OrdinalError> {
        let trimmed = s.trim();
        if trimmed.is_empty() {
            return Err(OrdinalError::Parse("empty input".into()));
        }
        if trimmed == "0" {
            return Ok(Ordinal::zero());
        }
        let mut terms = Vec::new();
        for raw in trimmed.split('+') {
            terms.push(parse_term(raw.trim())?);
        }
        for pair in terms.windows(2) {
            if pair[0].0 <= pair[1].0 {
                return Err(OrdinalError::Parse(format!(
                    "exponents must be strictly decreasing, got w^{} after w^{}",
                    pair[1].0, pair[0].0
                )));
            }
        }
        Ok(Ordinal { terms })
    }
}

fn parse_term(t: &str) -> Result<(u32, u64), OrdinalError> {
    if t.is_empty() {
        return Err(OrdinalError::Parse("empty term".into()));
    }
    if let Some(rest) = t.strip_prefix('w') {
        let (exp_part, coef_part) = match rest.split_once('*') {
            Some((e, c)) => (e, Some(c)),
            None => (rest, None),
        };
        let exp: u32 = if exp_part.is_empty() {
            1
        } else {
            let digits = exp_part
                .strip_prefix('^')
                .ok_or_else(|| OrdinalError::Parse(format!("malformed term {t:?}")))?;
            parse_nat(digits)?.try_into().map_err(|_| {
                OrdinalError::Parse(format!("exponent out of range in {t:?}"))
            })?
        };
        let coef = match coef_part {
            Some(c) => parse_nat(c)?,
            None => 1,
        };
        if coef == 0 {
            return Err(OrdinalError::Parse(format!(
                "coefficient must be >= 1 in {t:?}"
            )));
        }
        Ok((exp, coef))
    } else {
        let n = parse_nat(t)?;
        if n == 0 {
            return Err(OrdinalError::Parse(
                "term 0 is not allowed; write the ordinal 0 on its own".into(),
            ));
        }
        Ok((0, n))
    }
}

fn parse_nat(s: &str) -> Result<u64, OrdinalError> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(OrdinalError::Parse(format!("expected a natural, got {s:?}")));
    }
    s.parse()
        .map_err(|_| OrdinalError::Parse(format!("natural out of range: {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::cmp::Ordering;

    fn ord(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    #[test]
    fn parse_examples() {
        assert_eq!(ord("3"), Ordinal::finite(3));
        assert_eq!(ord("w"), Ordinal::omega());
        assert_eq!(
            ord("w^2*2+w+4"),
            Ordinal::from_terms(vec![(2, 2), (1, 1), (0, 4)]).unwrap()
        );
        assert_eq!(ord("0"), Ordinal::zero());
        // Exponent 0 written out canonicalizes to a plain natural.
        assert_eq!(ord("w^0*3"), Ordinal::finite(3));
        assert_eq!(ord(" w + 2 "), Ordinal::from_terms(vec![(1, 1), (0, 2)]).unwrap());
    }

    #[test]
    fn parse_rejects_malformed() {
        assert!("".parse::<Ordinal>().is_err());
        assert!("w+w".parse::<Ordinal>().is_err()); // not strictly decreasing
        assert!("2+w".parse::<Ordinal>().is_err());
        assert!("w*0".parse::<Ordinal>().is_err());
        assert!("w^".parse::<Ordinal>().is_err());
        assert!("x".parse::<Ordinal>().is_err());
        assert!("3+0".parse::<Ordinal>().is_err());
    }

    #[test]
    fn compare_examples() {
        assert_eq!(Ordinal::finite(5).cmp(&Ordinal::omega()), Ordering::Less);
        let w2 = Ordinal::from_terms(vec![(1, 2)]).unwrap();
        assert_eq!(w2.cmp(&w2.clone()), Ordering::Equal);
        assert_eq!(ord("w^2").cmp(&ord("w*9+7")), Ordering::Greater);
        assert_eq!(ord("w^2*2").cmp(&ord("w^2*2+w")), Ordering::Less);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(Ordinal::zero().classify(), OrdinalClass::Zero);
        assert_eq!(ord("w+1").classify(), OrdinalClass::Successor);
        assert_eq!(ord("w^2").classify(), OrdinalClass::Limit);
        assert_eq!(ord("7").classify(), OrdinalClass::Successor);
    }

    #[test]
    fn predecessor_examples() {
        assert_eq!(Ordinal::finite(1).predecessor().unwrap(), Ordinal::zero());
        assert_eq!(ord("w+3").predecessor().unwrap(), ord("w+2"));
        assert_eq!(ord("w+1").predecessor().unwrap(), ord("w"));
        assert!(Ordinal::omega().predecessor().is_err());
        assert!(Ordinal::zero().predecessor().is_err());
    }

    #[test]
    fn to_finite_examples() {
        assert_eq!(Ordinal::finite(7).to_finite(), Some(7));
        assert_eq!(Ordinal::omega().to_finite(), None);
        assert_eq!(Ordinal::zero().to_finite(), Some(0));
    }

    fn arb_ordinal() -> impl Strategy<Value = Ordinal> {
        // Up to four terms with exponents < 6; sort + dedup gives valid CNF.
        proptest::collection::btree_map(0u32..6, 1u64..50, 0..4).prop_map(|m| {
            let mut terms: Vec<(u32, u64)> = m.into_iter().collect();
            terms.sort_by(|a, b| b.0.cmp(&a.0));
            Ordinal::from_terms(terms).unwrap()
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(o in arb_ordinal()) {
            let back: Ordinal = o.to_string().parse().unwrap();
            prop_assert_eq!(back, o);
        }

        #[test]
        fn predecessor_is_smaller(o in arb_ordinal()) {
            if o.classify() == OrdinalClass::Successor {
                prop_assert!(o.predecessor().unwrap() < o);
            }
        }

        #[test]
        fn order_is_total_and_consistent(a in arb_ordinal(), b in arb_ordinal()) {
            match a.cmp(&b) {
                Ordering::Equal => prop_assert_eq!(&a, &b),
                Ordering::Less => prop_assert_eq!(b.cmp(&a), Ordering::Greater),
                Ordering::Greater => prop_assert_eq!(b.cmp(&a), Ordering::Less),
            }
        }
    }
}
