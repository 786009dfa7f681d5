//! Textual diagram language.
//!
//! ```text
//! morphism := term (('+'|'-') term)*
//! term     := [scalar '*'] diagram
//! diagram  := slice (';' slice)* '@' weight
//! slice    := item ('|' item)*
//! item     := id(±i) | id1 | dot(±i) | x(±i,±j)
//!           | cup(fe,i) | cup(ef,i) | cap(fe,i) | cap(ef,i)
//!           | bub(cw|ccw,i,♠+m)
//! weight   := '[' int (',' int)* ']'
//! ```
//!
//! Colors are datum labels; signs select ℰ (+) or ℱ (−). The weight annotates
//! the rightmost region. `♠` may be spelled `sp`. `id1` is the width-zero
//! identity, needed to write endomorphisms of `1_λ` with no bubbles. Scalars
//! use the coefficient-ring syntax; multi-term scalars must be parenthesized.

use thiserror::Error;

use crate::cartan::{CartanDatum, Weight};
use crate::diagram::{seq_to_string, Diagram, Entry, Gen, Morphism, Seq, Slice};
use crate::scalars::Scalar;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("parse error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("type error: {0}")]
    Type(String),
}

fn spade(cw: bool, h: i64) -> i64 {
    if cw {
        h - 1
    } else {
        -h - 1
    }
}

#[derive(Clone, Debug)]
enum RawItem {
    Id(Entry),
    Id1,
    Gen(GenKind),
}

#[derive(Clone, Debug)]
enum GenKind {
    Dot(Entry),
    Cross(Entry, Entry),
    Cup { ef: bool, color: usize },
    Cap { ef: bool, color: usize },
    Bub { cw: bool, color: usize, m: i64 },
}

impl GenKind {
    fn in_seq(&self) -> Seq {
        match *self {
            GenKind::Dot(e) => vec![e],
            GenKind::Cross(a, b) => vec![a, b],
            GenKind::Cup { .. } | GenKind::Bub { .. } => vec![],
            GenKind::Cap { ef, color } => {
                if ef {
                    vec![Entry::down(color), Entry::up(color)]
                } else {
                    vec![Entry::up(color), Entry::down(color)]
                }
            }
        }
    }

    fn out_seq(&self) -> Seq {
        match *self {
            GenKind::Dot(e) => vec![e],
            GenKind::Cross(a, b) => vec![b, a],
            GenKind::Cup { ef, color } => {
                if ef {
                    vec![Entry::down(color), Entry::up(color)]
                } else {
                    vec![Entry::up(color), Entry::down(color)]
                }
            }
            GenKind::Cap { .. } | GenKind::Bub { .. } => vec![],
        }
    }
}

struct Cursor<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Cursor<'a> {
        Cursor {
            text,
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, b: u8) -> Result<(), ParseError> {
        if self.eat(b) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", b as char))
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(kw) {
            // Keywords are always followed by a delimiter, never a letter.
            let after = self.bytes.get(self.pos + kw.len());
            if !matches!(after, Some(c) if c.is_ascii_alphanumeric()) {
                self.pos += kw.len();
                return true;
            }
        }
        false
    }

    fn parse_int(&mut self) -> Result<i64, ParseError> {
        self.skip_ws();
        let mut sign = 1i64;
        if self.bytes.get(self.pos) == Some(&b'-') {
            sign = -1;
            self.pos += 1;
        } else if self.bytes.get(self.pos) == Some(&b'+') {
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        self.text[start..self.pos]
            .parse::<i64>()
            .map(|v| sign * v)
            .map_err(|_| ParseError::Syntax {
                pos: start,
                msg: "integer out of range".into(),
            })
    }
}

fn color_of_label(datum: &CartanDatum, cur: &Cursor, label: i64) -> Result<usize, ParseError> {
    let lab = u8::try_from(label).map_err(|_| ParseError::Syntax {
        pos: cur.pos,
        msg: format!("color label {} out of range", label),
    })?;
    datum.index_of_label(lab).ok_or_else(|| ParseError::Syntax {
        pos: cur.pos,
        msg: format!("unknown color label {}", label),
    })
}

/// Parse a full morphism expression.
pub fn parse_morphism(datum: &CartanDatum, text: &str) -> Result<Morphism, ParseError> {
    let mut cur = Cursor::new(text);
    let mut negate = cur.eat(b'-');
    let mut acc: Option<Morphism> = None;
    loop {
        let (coeff, diag) = parse_term(datum, &mut cur)?;
        let coeff = if negate { coeff.neg() } else { coeff };
        let term = Morphism::from_scaled_diagram(diag, coeff);
        acc = Some(match acc {
            None => term,
            Some(a) => a
                .add(&term)
                .map_err(|e| ParseError::Type(e.to_string()))?,
        });
        match cur.peek() {
            Some(b'+') => {
                cur.pos += 1;
                negate = false;
            }
            Some(b'-') => {
                cur.pos += 1;
                negate = true;
            }
            None => break,
            Some(c) => return cur.err(format!("unexpected '{}'", c as char)),
        }
    }
    Ok(acc.expect("at least one term parsed"))
}

fn at_item_keyword(cur: &mut Cursor) -> bool {
    cur.skip_ws();
    ["id1", "id(", "dot(", "x(", "cup(", "cap(", "bub("]
        .iter()
        .any(|kw| cur.text[cur.pos..].starts_with(kw))
}

fn parse_term(datum: &CartanDatum, cur: &mut Cursor) -> Result<(Scalar, Diagram), ParseError> {
    let coeff = if at_item_keyword(cur) {
        Scalar::one()
    } else {
        let scalar = parse_scalar_prefix(cur)?;
        cur.expect(b'*')?;
        scalar
    };
    let diag = parse_diagram(datum, cur)?;
    Ok((coeff, diag))
}

/// A scalar prefix is either a parenthesized scalar expression or a product
/// of simple factors (rationals / parameter symbols with optional `^int`).
fn parse_scalar_prefix(cur: &mut Cursor) -> Result<Scalar, ParseError> {
    if cur.peek() == Some(b'(') {
        let start = cur.pos;
        let mut depth = 0usize;
        let mut end = None;
        for (off, b) in cur.text[start..].bytes().enumerate() {
            match b {
                b'(' => depth += 1,
                b')' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(start + off + 1);
                        break;
                    }
                }
                _ => {}
            }
        }
        let end = end.ok_or(ParseError::Syntax {
            pos: start,
            msg: "unbalanced parenthesis in scalar".into(),
        })?;
        let s = Scalar::parse(&cur.text[start..end]).map_err(|e| ParseError::Syntax {
            pos: start,
            msg: e.to_string(),
        })?;
        cur.pos = end;
        return Ok(s);
    }
    // Greedy factor chain up to the '*' that precedes an item keyword.
    let start = cur.pos;
    loop {
        // one factor
        cur.skip_ws();
        let fstart = cur.pos;
        match cur.peek() {
            Some(c) if c.is_ascii_digit() => {
                while matches!(cur.bytes.get(cur.pos), Some(c) if c.is_ascii_digit() || *c == b'/') {
                    cur.pos += 1;
                }
            }
            Some(b't') | Some(b'c') | Some(b's') => {
                cur.pos += 1;
                cur.expect(b'(')?;
                while cur.bytes.get(cur.pos).is_some() && cur.bytes[cur.pos] != b')' {
                    cur.pos += 1;
                }
                cur.expect(b')')?;
            }
            _ => return cur.err("expected scalar factor"),
        }
        if cur.eat(b'^') {
            let _ = cur.parse_int()?;
        }
        if fstart == cur.pos {
            return cur.err("empty scalar factor");
        }
        let checkpoint = cur.pos;
        if cur.eat(b'*') {
            if at_item_keyword(cur) {
                let text = &cur.text[start..checkpoint];
                let s = Scalar::parse(text).map_err(|e| ParseError::Syntax {
                    pos: start,
                    msg: e.to_string(),
                })?;
                cur.pos = checkpoint;
                return Ok(s);
            }
            continue;
        }
        return cur.err("scalar prefix must be followed by '*' and a diagram");
    }
}

fn parse_signed_color(datum: &CartanDatum, cur: &mut Cursor) -> Result<Entry, ParseError> {
    cur.skip_ws();
    let up = match cur.bytes.get(cur.pos) {
        Some(b'+') => true,
        Some(b'-') => false,
        _ => return cur.err("expected '+' or '-' before a color label"),
    };
    cur.pos += 1;
    let label = cur.parse_int()?;
    let color = color_of_label(datum, cur, label)?;
    Ok(Entry { color, up })
}

fn parse_item(datum: &CartanDatum, cur: &mut Cursor) -> Result<RawItem, ParseError> {
    if cur.eat_keyword("id1") {
        return Ok(RawItem::Id1);
    }
    if cur.eat_keyword("id") {
        cur.expect(b'(')?;
        let e = parse_signed_color(datum, cur)?;
        cur.expect(b')')?;
        return Ok(RawItem::Id(e));
    }
    if cur.eat_keyword("dot") {
        cur.expect(b'(')?;
        let e = parse_signed_color(datum, cur)?;
        cur.expect(b')')?;
        return Ok(RawItem::Gen(GenKind::Dot(e)));
    }
    if cur.eat_keyword("x") {
        cur.expect(b'(')?;
        let a = parse_signed_color(datum, cur)?;
        cur.expect(b',')?;
        let b = parse_signed_color(datum, cur)?;
        cur.expect(b')')?;
        return Ok(RawItem::Gen(GenKind::Cross(a, b)));
    }
    for (kw, is_cup) in [("cup", true), ("cap", false)] {
        if cur.eat_keyword(kw) {
            cur.expect(b'(')?;
            let ef = if cur.eat_keyword("ef") {
                true
            } else if cur.eat_keyword("fe") {
                false
            } else {
                return cur.err("expected 'ef' or 'fe'");
            };
            cur.expect(b',')?;
            let label = cur.parse_int()?;
            let color = color_of_label(datum, cur, label)?;
            cur.expect(b')')?;
            return Ok(RawItem::Gen(if is_cup {
                GenKind::Cup { ef, color }
            } else {
                GenKind::Cap { ef, color }
            }));
        }
    }
    if cur.eat_keyword("bub") {
        cur.expect(b'(')?;
        let cw = if cur.eat_keyword("cw") {
            true
        } else if cur.eat_keyword("ccw") {
            false
        } else {
            return cur.err("expected 'cw' or 'ccw'");
        };
        cur.expect(b',')?;
        let label = cur.parse_int()?;
        let color = color_of_label(datum, cur, label)?;
        cur.expect(b',')?;
        cur.skip_ws();
        if cur.text[cur.pos..].starts_with('♠') {
            cur.pos += '♠'.len_utf8();
        } else if cur.eat_keyword("sp") {
        } else {
            return cur.err("expected '♠' or 'sp'");
        }
        let m = cur.parse_int()?;
        cur.expect(b')')?;
        return Ok(RawItem::Gen(GenKind::Bub { cw, color, m }));
    }
    cur.err("expected an item (id, id1, dot, x, cup, cap, bub)")
}

fn parse_diagram(datum: &CartanDatum, cur: &mut Cursor) -> Result<Diagram, ParseError> {
    let mut lines: Vec<Vec<RawItem>> = Vec::new();
    loop {
        let mut items = vec![parse_item(datum, cur)?];
        while cur.eat(b'|') {
            items.push(parse_item(datum, cur)?);
        }
        lines.push(items);
        if !cur.eat(b';') {
            break;
        }
    }
    cur.expect(b'@')?;
    cur.expect(b'[')?;
    let mut coords = vec![cur.parse_int()?];
    while cur.eat(b',') {
        coords.push(cur.parse_int()?);
    }
    cur.expect(b']')?;
    if coords.len() != datum.rank() {
        return Err(ParseError::Type(format!(
            "weight has {} coordinates but the datum has rank {}",
            coords.len(),
            datum.rank()
        )));
    }
    let lambda = Weight::new(coords);
    elaborate(datum, &lines, lambda)
}

fn line_in_seq(items: &[RawItem]) -> Seq {
    let mut seq = Seq::new();
    for item in items {
        match item {
            RawItem::Id(e) => seq.push(*e),
            RawItem::Id1 => {}
            RawItem::Gen(g) => seq.extend(g.in_seq()),
        }
    }
    seq
}

fn elaborate(
    datum: &CartanDatum,
    lines: &[Vec<RawItem>],
    lambda: Weight,
) -> Result<Diagram, ParseError> {
    let source = line_in_seq(&lines[0]);
    let mut cur = source.clone();
    let mut slices = Vec::new();
    for items in lines {
        let expect = line_in_seq(items);
        if expect != cur {
            return Err(ParseError::Type(format!(
                "boundary mismatch: slice expects {}, previous slice produced {}",
                seq_to_string(&expect),
                seq_to_string(&cur)
            )));
        }
        let mut consumed = 0usize;
        let mut out_offset = 0usize;
        let mut next = Seq::new();
        for item in items {
            match item {
                RawItem::Id(e) => {
                    next.push(*e);
                    consumed += 1;
                    out_offset += 1;
                }
                RawItem::Id1 => {}
                RawItem::Gen(kind) => {
                    let region = Diagram::region_of_gap(datum, &cur, &lambda, consumed);
                    let gen = match *kind {
                        GenKind::Dot(e) => Gen::Dot { i: e.color, up: e.up },
                        GenKind::Cross(a, b) => match (a.up, b.up) {
                            (true, true) => Gen::CrossUU { i: a.color, j: b.color },
                            (false, false) => Gen::CrossDD { i: a.color, j: b.color },
                            (false, true) => Gen::CrossFE { i: a.color, j: b.color },
                            (true, false) => Gen::CrossEF { i: a.color, j: b.color },
                        },
                        GenKind::Cup { ef, color } => {
                            if ef {
                                Gen::CupEF { i: color }
                            } else {
                                Gen::CupFE { i: color }
                            }
                        }
                        GenKind::Cap { ef, color } => {
                            if ef {
                                Gen::CapEF { i: color }
                            } else {
                                Gen::CapFE { i: color }
                            }
                        }
                        GenKind::Bub { cw, color, m } => {
                            let h = datum.pairing(color, &region);
                            Gen::Bubble {
                                i: color,
                                cw,
                                dots: spade(cw, h) + m,
                            }
                        }
                    };
                    slices.push(Slice { pos: out_offset, gen });
                    next.extend(kind.out_seq());
                    consumed += kind.in_seq().len();
                    out_offset += kind.out_seq().len();
                }
            }
        }
        cur = next;
    }
    Diagram::new(source, lambda, slices).map_err(|e| ParseError::Type(e.to_string()))
}

fn entry_str(datum: &CartanDatum, e: Entry) -> String {
    format!("{}{}", if e.up { "+" } else { "-" }, datum.label(e.color))
}

fn item_str(datum: &CartanDatum, gen: &Gen, region: &Weight) -> String {
    match *gen {
        Gen::Dot { i, up } => format!("dot({})", entry_str(datum, Entry { color: i, up })),
        Gen::CrossUU { .. } | Gen::CrossDD { .. } | Gen::CrossFE { .. } | Gen::CrossEF { .. } => {
            let s = gen.in_seq();
            format!(
                "x({},{})",
                entry_str(datum, s[0]),
                entry_str(datum, s[1])
            )
        }
        Gen::CupEF { i } => format!("cup(ef,{})", datum.label(i)),
        Gen::CupFE { i } => format!("cup(fe,{})", datum.label(i)),
        Gen::CapEF { i } => format!("cap(ef,{})", datum.label(i)),
        Gen::CapFE { i } => format!("cap(fe,{})", datum.label(i)),
        Gen::Bubble { i, cw, dots } => {
            let h = datum.pairing(i, region);
            let m = dots - spade(cw, h);
            format!(
                "bub({},{},♠+{})",
                if cw { "cw" } else { "ccw" },
                datum.label(i),
                m
            )
        }
    }
}

pub fn render_diagram(datum: &CartanDatum, d: &Diagram) -> String {
    let levels = d.levels().expect("render of valid diagram");
    let mut lines: Vec<String> = Vec::new();
    if d.slices.is_empty() {
        let line: Vec<String> = if d.source.is_empty() {
            vec!["id1".into()]
        } else {
            d.source.iter().map(|e| format!("id({})", entry_str(datum, *e))).collect()
        };
        lines.push(line.join("|"));
    }
    for (k, s) in d.slices.iter().enumerate() {
        let seq = &levels[k];
        let a = s.gen.in_arity();
        let mut parts: Vec<String> = Vec::new();
        let region = d.slice_region(datum, &levels, k);
        let mut idx = 0usize;
        while idx < seq.len() || (a == 0 && idx <= seq.len()) {
            if idx == s.pos {
                parts.push(item_str(datum, &s.gen, &region));
                if a > 0 {
                    for _ in 0..a {
                        idx += 1;
                    }
                    continue;
                }
                if idx == seq.len() {
                    break;
                }
            }
            if idx < seq.len() {
                parts.push(format!("id({})", entry_str(datum, seq[idx])));
                idx += 1;
            } else {
                break;
            }
        }
        if parts.is_empty() {
            parts.push("id1".into());
        }
        lines.push(parts.join("|"));
    }
    format!("{} @ {}", lines.join(" ; "), d.lambda)
}

pub fn render_morphism(datum: &CartanDatum, m: &Morphism) -> String {
    if m.terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, (d, c)) in m.terms.iter().enumerate() {
        let (neg, abs) = if c.num_terms() == 1 && c.neg().is_one() {
            (true, None)
        } else if c.is_one() {
            (false, None)
        } else {
            // render general coefficients parenthesized; fold a leading minus
            (false, Some(format!("({})", c.render())))
        };
        if k == 0 {
            if neg {
                out.push_str("- ");
            }
        } else if neg {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        if let Some(cs) = abs {
            out.push_str(&cs);
            out.push('*');
        }
        out.push_str(&render_diagram(datum, d));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_dot() {
        let datum = CartanDatum::sl2();
        let m = parse_morphism(&datum, "dot(+1) @ [0]").unwrap();
        assert_eq!(m.source, vec![Entry::up(0)]);
        assert_eq!(m.terms.len(), 1);
    }

    #[test]
    fn boundary_mismatch_is_type_error() {
        let datum = CartanDatum::sl2();
        let err = parse_morphism(&datum, "cup(fe,1) ; cap(fe,1)|id(+1) @ [2]");
        assert!(matches!(err, Err(ParseError::Type(_))), "{:?}", err);
    }

    #[test]
    fn double_crossing_degree() {
        let datum = CartanDatum::sl2();
        let m = parse_morphism(&datum, "x(+1,+1) ; x(+1,+1) @ [0]").unwrap();
        assert_eq!(m.degree(&datum).unwrap(), Some(-4));
    }

    #[test]
    fn round_trip() {
        let datum = CartanDatum::a2();
        for text in [
            "dot(+1)|id(-2) @ [0,1]",
            "cup(ef,1) ; dot(-1)|id(+1) ; x(-1,+1) @ [1,-1]",
            "3/2*x(+1,+2) @ [0,0] - t(1,2)*x(+1,+2) @ [0,0]",
            "bub(cw,1,♠+2)|id(+2) @ [-1,2]",
            "bub(ccw,2,sp+0) @ [0,3]",
        ] {
            let m = parse_morphism(&datum, text).unwrap();
            let rendered = render_morphism(&datum, &m);
            let back = parse_morphism(&datum, &rendered).unwrap();
            assert_eq!(m, back, "round trip failed for {} (rendered {})", text, rendered);
        }
    }

    #[test]
    fn scalar_prefix_forms() {
        let datum = CartanDatum::a2();
        for text in [
            "(t(1,2)+1)*dot(+1) @ [0,0]",
            "t(1,2)^-1*dot(+1) @ [0,0]",
            "2*dot(+1) @ [0,0]",
            "3/2*t(2,1)*dot(+1) @ [0,0]",
        ] {
            parse_morphism(&datum, text).unwrap();
        }
    }
}
