//! Exact coefficient ring for the engine.
//!
//! A [`Scalar`] is a rational-coefficient Laurent polynomial in the invertible
//! parameter symbols `t(i,j)` and `c(i,k)` (k indexes a coset representative of
//! the root lattice), and an ordinary polynomial in the symbols `s(i,j;p,q)`.
//! Zero coefficients are never stored, so structural equality is semantic
//! equality. Term order is lexicographic over the symbol alphabet.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};
use thiserror::Error;

/// A formal parameter symbol of the calculus.
///
/// `S` symbols are kept with `i < j`; `s(j,i;q,p)` is identified with
/// `s(i,j;p,q)` at construction time, which bakes the symmetry axiom into the
/// representation.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Sym {
    /// `t(i,j)` with `i != j`; `t(i,i) = 1` never materializes as a symbol.
    T(u8, u8),
    /// `c(i,k)`: base bubble parameter for color `i`, coset representative `k`.
    C(u8, u32),
    /// `s(i,j;p,q)` with `i < j`.
    S(u8, u8, u8, u8),
}

impl Sym {
    pub fn t(i: u8, j: u8) -> Sym {
        assert_ne!(i, j, "t(i,i) is the ring unit, not a symbol");
        Sym::T(i, j)
    }

    pub fn c(i: u8, coset: u32) -> Sym {
        Sym::C(i, coset)
    }

    pub fn s(i: u8, j: u8, p: u8, q: u8) -> Sym {
        assert_ne!(i, j, "s is only defined for distinct colors");
        if i < j {
            Sym::S(i, j, p, q)
        } else {
            Sym::S(j, i, q, p)
        }
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::T(i, j) => write!(f, "t({},{})", i, j),
            Sym::C(i, k) => write!(f, "c({},{})", i, k),
            Sym::S(i, j, p, q) => write!(f, "s({},{};{},{})", i, j, p, q),
        }
    }
}

/// Sorted exponent vector; no zero exponents stored.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial(Vec<(Sym, i32)>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }

    pub fn sym(s: Sym) -> Monomial {
        Monomial(vec![(s, 1)])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Sym, i32)] {
        &self.0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut map: BTreeMap<Sym, i32> = self.0.iter().copied().collect();
        for &(s, e) in &other.0 {
            let entry = map.entry(s).or_insert(0);
            *entry += e;
            if *entry == 0 {
                map.remove(&s);
            }
        }
        Monomial(map.into_iter().collect())
    }

    pub fn inverse(&self) -> Monomial {
        Monomial(self.0.iter().map(|&(s, e)| (s, -e)).collect())
    }

    fn has_s_symbol(&self) -> bool {
        self.0.iter().any(|(s, _)| matches!(s, Sym::S(..)))
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("not a unit: only nonzero monomials in t- and c-symbols are invertible")]
    NotAUnit,
    #[error("zero assigned to invertible symbol {0}")]
    ZeroAssigned(String),
    #[error("no value assigned to symbol {0}")]
    Unassigned(String),
    #[error("scalar parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// Element of the coefficient ring. Empty term map is zero.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Scalar {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Scalar {
    pub fn zero() -> Scalar {
        Scalar::default()
    }

    pub fn one() -> Scalar {
        Scalar::int(1)
    }

    pub fn int(n: i64) -> Scalar {
        Scalar::ratio(n, 1)
    }

    pub fn ratio(num: i64, den: i64) -> Scalar {
        assert!(den != 0, "zero denominator");
        let q = BigRational::new(BigInt::from(num), BigInt::from(den));
        Scalar::from_coeff(Monomial::one(), q)
    }

    pub fn from_coeff(m: Monomial, q: BigRational) -> Scalar {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(m, q);
        }
        Scalar { terms }
    }

    pub fn sym(s: Sym) -> Scalar {
        Scalar::from_coeff(Monomial::sym(s), BigRational::one())
    }

    /// `sym^e` for any integer exponent (only unit symbols should go negative).
    pub fn sym_pow(s: Sym, e: i32) -> Scalar {
        if e == 0 {
            return Scalar::one();
        }
        debug_assert!(e >= 0 || !matches!(s, Sym::S(..)), "negative power of s-symbol");
        Scalar::from_coeff(Monomial(vec![(s, e)]), BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&Monomial::one())
                .map(|q| q.is_one())
                .unwrap_or(false)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        let mut terms = self.terms.clone();
        for (m, q) in &other.terms {
            let entry = terms.entry(m.clone()).or_insert_with(BigRational::zero);
            *entry += q;
            if entry.is_zero() {
                terms.remove(m);
            }
        }
        Scalar { terms }
    }

    pub fn neg(&self) -> Scalar {
        Scalar {
            terms: self.terms.iter().map(|(m, q)| (m.clone(), -q)).collect(),
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        let mut terms: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (ma, qa) in &self.terms {
            for (mb, qb) in &other.terms {
                let m = ma.mul(mb);
                let q = qa * qb;
                let entry = terms.entry(m).or_insert_with(BigRational::zero);
                *entry += q;
            }
        }
        terms.retain(|_, q| !q.is_zero());
        Scalar { terms }
    }

    pub fn scale_int(&self, n: i64) -> Scalar {
        self.mul(&Scalar::int(n))
    }

    pub fn pow(&self, e: u32) -> Scalar {
        let mut acc = Scalar::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Succeeds exactly on monomial units: a single term with nonzero rational
    /// coefficient and no s-symbols.
    pub fn try_invert(&self) -> Result<Scalar, ScalarError> {
        if self.terms.len() != 1 {
            return Err(ScalarError::NotAUnit);
        }
        let (m, q) = self.terms.iter().next().unwrap();
        if q.is_zero() || m.has_s_symbol() {
            return Err(ScalarError::NotAUnit);
        }
        Ok(Scalar::from_coeff(m.inverse(), q.recip()))
    }

    pub fn is_unit(&self) -> bool {
        self.try_invert().is_ok()
    }

    /// Integer power allowing negative exponents on units.
    pub fn unit_pow(&self, e: i32) -> Result<Scalar, ScalarError> {
        if e >= 0 {
            Ok(self.pow(e as u32))
        } else {
            Ok(self.try_invert()?.pow((-e) as u32))
        }
    }

    /// Exact evaluation under an assignment of rationals to symbols.
    /// Every symbol occurring in `self` must be assigned; symbols appearing
    /// with a negative exponent must receive a nonzero value.
    pub fn substitute(&self, assign: &BTreeMap<Sym, BigRational>) -> Result<BigRational, ScalarError> {
        let mut total = BigRational::zero();
        for (m, q) in &self.terms {
            let mut val = q.clone();
            for &(s, e) in m.factors() {
                let v = assign
                    .get(&s)
                    .ok_or_else(|| ScalarError::Unassigned(s.to_string()))?;
                if v.is_zero() {
                    if e < 0 {
                        return Err(ScalarError::ZeroAssigned(s.to_string()));
                    }
                    val = BigRational::zero();
                    break;
                }
                let base = if e >= 0 { v.clone() } else { v.recip() };
                for _ in 0..e.unsigned_abs() {
                    val *= &base;
                }
            }
            total += val;
        }
        Ok(total)
    }

    pub fn render(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Scalar, ScalarError> {
        Parser::new(text).parse_scalar_all()
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, q)) in self.terms.iter().enumerate() {
            let neg = q.is_negative();
            let abs = q.abs();
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let show_coeff = !abs.is_one() || m.is_one();
            if show_coeff {
                write!(f, "{}", abs)?;
            }
            for (k, &(s, e)) in m.factors().iter().enumerate() {
                if show_coeff || k > 0 {
                    write!(f, "*")?;
                }
                write!(f, "{}", s)?;
                if e != 1 {
                    write!(f, "^{}", e)?;
                }
            }
        }
        Ok(())
    }
}

/// Recursive-descent parser for the textual scalar syntax, e.g.
/// `3/2*t(1,2)^-1*s(1,2;0,1) + c(1,0)`.
struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Parser<'a> {
        Parser {
            input: text.as_bytes(),
            pos: 0,
        }
    }

    fn err<T>(&self, msg: &str) -> Result<T, ScalarError> {
        Err(ScalarError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.input.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    fn expect(&mut self, b: u8) -> Result<(), ScalarError> {
        match self.bump() {
            Some(x) if x == b => Ok(()),
            _ => self.err(&format!("expected '{}'", b as char)),
        }
    }

    fn parse_scalar_all(&mut self) -> Result<Scalar, ScalarError> {
        let s = self.parse_sum()?;
        self.skip_ws();
        if self.pos != self.input.len() {
            return self.err("trailing input");
        }
        Ok(s)
    }

    fn parse_sum(&mut self) -> Result<Scalar, ScalarError> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.bump();
                self.parse_term()?.neg()
            }
            _ => self.parse_term()?,
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.bump();
                    acc = acc.add(&self.parse_term()?);
                }
                Some(b'-') => {
                    self.bump();
                    acc = acc.sub(&self.parse_term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Scalar, ScalarError> {
        let mut acc = self.parse_factor()?;
        while self.peek() == Some(b'*') {
            self.bump();
            acc = acc.mul(&self.parse_factor()?);
        }
        Ok(acc)
    }

    fn parse_factor(&mut self) -> Result<Scalar, ScalarError> {
        let base = match self.peek() {
            Some(b'(') => {
                self.bump();
                let inner = self.parse_sum()?;
                self.expect(b')')?;
                inner
            }
            Some(b) if b.is_ascii_digit() => self.parse_rational()?,
            Some(b't') | Some(b'c') | Some(b's') => self.parse_symbol()?,
            _ => return self.err("expected rational, symbol, or parenthesized scalar"),
        };
        if self.peek() == Some(b'^') {
            self.bump();
            let e = self.parse_int()?;
            let e: i32 = e
                .try_into()
                .map_err(|_| ScalarError::Parse {
                    pos: self.pos,
                    msg: "exponent out of range".into(),
                })?;
            if e >= 0 {
                return Ok(base.pow(e as u32));
            }
            return base.try_invert().map(|inv| inv.pow((-e) as u32));
        }
        Ok(base)
    }

    fn parse_rational(&mut self) -> Result<Scalar, ScalarError> {
        let n = self.parse_int()?;
        if self.peek() == Some(b'/') {
            self.bump();
            let d = self.parse_int()?;
            if d == 0 {
                return self.err("zero denominator");
            }
            Ok(Scalar::ratio(n, d))
        } else {
            Ok(Scalar::int(n))
        }
    }

    fn parse_int(&mut self) -> Result<i64, ScalarError> {
        self.skip_ws();
        let mut sign = 1i64;
        if self.input.get(self.pos) == Some(&b'-') {
            sign = -1;
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err("expected integer");
        }
        let digits = std::str::from_utf8(&self.input[start..self.pos]).unwrap();
        digits
            .parse::<i64>()
            .map(|v| sign * v)
            .map_err(|_| ScalarError::Parse {
                pos: start,
                msg: "integer out of range".into(),
            })
    }

    fn parse_symbol(&mut self) -> Result<Scalar, ScalarError> {
        let kind = self.bump().unwrap();
        self.expect(b'(')?;
        let a = self.parse_int()? as i64;
        self.expect(b',')?;
        let b = self.parse_int()?;
        let sym = match kind {
            b't' => {
                if a == b {
                    // t(i,i) is the unit by axiom.
                    self.expect(b')')?;
                    return Ok(Scalar::one());
                }
                Sym::t(self.small(a)?, self.small(b)?)
            }
            b'c' => Sym::c(self.small(a)?, b as u32),
            b's' => {
                self.expect(b';')?;
                let p = self.parse_int()?;
                self.expect(b',')?;
                let q = self.parse_int()?;
                Sym::s(self.small(a)?, self.small(b)?, self.small(p)?, self.small(q)?)
            }
            _ => unreachable!(),
        };
        self.expect(b')')?;
        Ok(Scalar::sym(sym))
    }

    fn small(&self, v: i64) -> Result<u8, ScalarError> {
        u8::try_from(v).map_err(|_| ScalarError::Parse {
            pos: self.pos,
            msg: "index out of range".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t12() -> Scalar {
        Scalar::sym(Sym::t(1, 2))
    }

    fn t21() -> Scalar {
        Scalar::sym(Sym::t(2, 1))
    }

    #[test]
    fn unit_inverse() {
        let prod = t12().mul(&t12().try_invert().unwrap());
        assert!(prod.is_one());
    }

    #[test]
    fn commutativity_cancels() {
        let a = t12().add(&t21());
        let b = t21().add(&t12());
        assert!(a.sub(&b).is_zero());
    }

    #[test]
    fn invert_non_monomial_fails() {
        let x = t12().add(&Scalar::one());
        assert_eq!(x.try_invert(), Err(ScalarError::NotAUnit));
    }

    #[test]
    fn invert_s_symbol_fails() {
        let x = Scalar::sym(Sym::s(1, 2, 0, 0));
        assert_eq!(x.try_invert(), Err(ScalarError::NotAUnit));
    }

    #[test]
    fn s_symmetry_identified() {
        assert_eq!(Sym::s(2, 1, 3, 4), Sym::s(1, 2, 4, 3));
    }

    #[test]
    fn substitute_examples() {
        // t_12 * c(1,0)^-1 at t_12 = -1, c(1,0) = 1 evaluates to -1.
        let x = t12().mul(&Scalar::sym(Sym::c(1, 0)).try_invert().unwrap());
        let mut assign = BTreeMap::new();
        assign.insert(Sym::t(1, 2), BigRational::from(BigInt::from(-1)));
        assign.insert(Sym::c(1, 0), BigRational::from(BigInt::from(1)));
        assert_eq!(x.substitute(&assign).unwrap(), BigRational::from(BigInt::from(-1)));

        assert!(Scalar::zero().substitute(&BTreeMap::new()).unwrap().is_zero());

        // t_12^-1 t_21 at t_12 = 2, t_21 = 3 evaluates to 3/2.
        let y = t12().try_invert().unwrap().mul(&t21());
        let mut assign = BTreeMap::new();
        assign.insert(Sym::t(1, 2), BigRational::from(BigInt::from(2)));
        assign.insert(Sym::t(2, 1), BigRational::from(BigInt::from(3)));
        assert_eq!(
            y.substitute(&assign).unwrap(),
            BigRational::new(BigInt::from(3), BigInt::from(2))
        );
    }

    #[test]
    fn substitute_zero_to_unit_errors() {
        let x = t12().try_invert().unwrap();
        let mut assign = BTreeMap::new();
        assign.insert(Sym::t(1, 2), BigRational::zero());
        assert!(matches!(x.substitute(&assign), Err(ScalarError::ZeroAssigned(_))));
    }

    #[test]
    fn render_round_trip() {
        let x = Scalar::ratio(3, 2)
            .mul(&t12().try_invert().unwrap())
            .mul(&Scalar::sym(Sym::s(1, 2, 0, 1)))
            .add(&Scalar::sym(Sym::c(1, 0)).neg());
        let text = x.render();
        let back = Scalar::parse(&text).unwrap();
        assert_eq!(x, back);
    }

    #[test]
    fn parse_spec_syntax() {
        let x = Scalar::parse("3/2*t(1,2)^-1*s(1,2;0,1)").unwrap();
        assert_eq!(x.num_terms(), 1);
        let y = Scalar::parse("(t(1,2)+1)^2").unwrap();
        assert_eq!(y.num_terms(), 3);
    }
}
