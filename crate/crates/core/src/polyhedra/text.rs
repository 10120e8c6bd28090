//! Textual syntax for sets, maps and piecewise values:
//!
//! ```text
//! { S0[i] -> M[i] : 0 <= i < 4; S1[j] -> M[3 - j] : 0 <= j < 4 }
//! { S[i, j] : 0 <= i < 3 and 0 <= j < i or i = 5 and j = 0 }
//! { [c] : c = floor((i + 1)/8) ... }
//! ```
//!
//! Tuple entries may be expressions; an entry that is not a fresh
//! identifier introduces an anonymous dimension equal to it.

use std::collections::HashMap;

use super::constraint::Constraint;
use super::error::PolyError;
use super::expr::AffineExpr;
use super::map::{BasicMap, Map};
use super::qpoly::QuasiPolynomial;
use super::set::{BasicSet, Set};
use super::space::Space;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

const SYMS: [&str; 19] =
    ["->", "<=", ">=", "==", "{", "}", "[", "]", "(", ")", ",", ";", ":", "+", "-", "*", "/", "%", "<"];

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>, PolyError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let (l0, c0) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<i64>().map_err(|_| PolyError::Parse { line: l0, col: c0, msg: "integer too large".into() })?;
            col += i - start;
            out.push((Tok::Int(v), l0, c0));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Ident(chars[start..i].iter().collect()), l0, c0));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let sym = SYMS.iter().find(|s| rest.starts_with(**s)).copied().or(match c {
            '>' => Some(">"),
            '=' => Some("="),
            _ => None,
        });
        match sym {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push((Tok::Sym(s), l0, c0));
            }
            None => return Err(PolyError::Parse { line: l0, col: c0, msg: format!("unexpected character `{c}`") }),
        }
    }
    Ok(out)
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn err(&self, msg: impl Into<String>) -> PolyError {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|t| (t.1, t.2))
            .unwrap_or_else(|| self.toks.last().map(|t| (t.1, t.2 + 1)).unwrap_or((1, 1)));
        PolyError::Parse { line, col, msg: msg.into() }
    }

    fn eat(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(x)) if *x == s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(x)) if x == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), PolyError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn int(&mut self) -> Result<i64, PolyError> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err("expected integer")),
        }
    }
}

/// `lhs op rhs` with the operator as written.
type Comparison = (Lin, &'static str, Lin);

/// Linear expressions during parsing, over named variables.
#[derive(Clone, Debug)]
struct Lin {
    /// Built lazily against the final variable count.
    terms: Vec<(i64, LinAtom)>,
    constant: i64,
}

#[derive(Clone, Debug)]
enum LinAtom {
    Var(String),
    Floor(Box<Lin>, i64),
}

impl Lin {
    fn constant(c: i64) -> Lin {
        Lin { terms: Vec::new(), constant: c }
    }

    fn var(name: String) -> Lin {
        Lin { terms: vec![(1, LinAtom::Var(name))], constant: 0 }
    }

    fn scale(mut self, k: i64) -> Lin {
        for t in &mut self.terms {
            t.0 *= k;
        }
        self.constant *= k;
        self
    }

    fn add(mut self, o: Lin) -> Lin {
        self.terms.extend(o.terms);
        self.constant += o.constant;
        self
    }

    fn as_constant(&self) -> Option<i64> {
        if self.terms.is_empty() {
            Some(self.constant)
        } else {
            None
        }
    }

    fn build(&self, vars: &HashMap<String, usize>, n: usize) -> Result<AffineExpr, PolyError> {
        let mut e = AffineExpr::constant(n, self.constant);
        for (c, a) in &self.terms {
            let t = match a {
                LinAtom::Var(name) => match vars.get(name) {
                    Some(&i) => AffineExpr::var(n, i),
                    None => return Err(PolyError::UnknownDimension(name.clone())),
                },
                LinAtom::Floor(inner, d) => inner.build(vars, n)?.floor_div(*d),
            };
            e = e.add(&t.scale(*c));
        }
        Ok(e)
    }
}

struct Parser {
    lx: Lexer,
    fresh: usize,
}

/// One parsed tuple: optional name and entries (identifier or expression).
struct RawTuple {
    name: Option<String>,
    entries: Vec<Lin>,
}

struct RawPart {
    src: RawTuple,
    dst: Option<RawTuple>,
    /// Disjunction of conjunctions.
    formula: Vec<Vec<Comparison>>,
}

impl Parser {
    fn parse_expr(&mut self) -> Result<Lin, PolyError> {
        let mut e = self.parse_term()?;
        loop {
            if self.lx.eat("+") {
                e = e.add(self.parse_term()?);
            } else if self.lx.eat("-") {
                e = e.add(self.parse_term()?.scale(-1));
            } else {
                return Ok(e);
            }
        }
    }

    fn parse_term(&mut self) -> Result<Lin, PolyError> {
        let neg = self.lx.eat("-");
        let mut e = self.parse_factor()?;
        loop {
            if self.lx.eat("*") {
                let f = self.parse_factor()?;
                e = match (e.as_constant(), f.as_constant()) {
                    (Some(k), _) => f.scale(k),
                    (_, Some(k)) => e.scale(k),
                    _ => return Err(self.lx.err("non-affine product")),
                };
            } else if self.lx.eat("%") || self.lx.eat_kw("mod") {
                let d = self.lx.int()?;
                if d <= 0 {
                    return Err(self.lx.err("modulus must be positive"));
                }
                let fl = Lin { terms: vec![(1, LinAtom::Floor(Box::new(e.clone()), d))], constant: 0 };
                e = e.add(fl.scale(-d));
            } else {
                break;
            }
        }
        Ok(if neg { e.scale(-1) } else { e })
    }

    fn parse_factor(&mut self) -> Result<Lin, PolyError> {
        match self.lx.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.lx.pos += 1;
                Ok(Lin::constant(v))
            }
            Some(Tok::Ident(name)) if name == "floor" => {
                self.lx.pos += 1;
                self.lx.expect("(")?;
                let inner = self.parse_expr()?;
                self.lx.expect("/")?;
                let d = self.lx.int()?;
                if d <= 0 {
                    return Err(self.lx.err("divisor must be positive"));
                }
                self.lx.expect(")")?;
                Ok(Lin { terms: vec![(1, LinAtom::Floor(Box::new(inner), d))], constant: 0 })
            }
            Some(Tok::Ident(name)) => {
                self.lx.pos += 1;
                Ok(Lin::var(name))
            }
            Some(Tok::Sym("(")) => {
                self.lx.pos += 1;
                let e = self.parse_expr()?;
                self.lx.expect(")")?;
                Ok(e)
            }
            _ => Err(self.lx.err("expected expression")),
        }
    }

    fn parse_tuple(&mut self) -> Result<RawTuple, PolyError> {
        let name = match self.lx.peek().cloned() {
            Some(Tok::Ident(n)) => {
                self.lx.pos += 1;
                Some(n)
            }
            _ => None,
        };
        self.lx.expect("[")?;
        let mut entries = Vec::new();
        if !self.lx.eat("]") {
            loop {
                entries.push(self.parse_expr()?);
                if self.lx.eat("]") {
                    break;
                }
                self.lx.expect(",")?;
            }
        }
        Ok(RawTuple { name, entries })
    }

    fn parse_chain(&mut self) -> Result<Vec<Comparison>, PolyError> {
        let mut lhs = self.parse_expr()?;
        let mut out = Vec::new();
        loop {
            let op = match self.lx.peek() {
                Some(Tok::Sym(s)) if ["<=", "<", ">=", ">", "=", "=="].contains(s) => *s,
                _ => break,
            };
            self.lx.pos += 1;
            let rhs = self.parse_expr()?;
            out.push((lhs, op, rhs.clone()));
            lhs = rhs;
        }
        if out.is_empty() {
            return Err(self.lx.err("expected comparison"));
        }
        Ok(out)
    }

    fn parse_formula(&mut self) -> Result<Vec<Vec<Comparison>>, PolyError> {
        let mut disj = Vec::new();
        loop {
            let mut conj = self.parse_chain()?;
            while self.lx.eat_kw("and") {
                conj.extend(self.parse_chain()?);
            }
            disj.push(conj);
            if !self.lx.eat_kw("or") {
                return Ok(disj);
            }
        }
    }

    fn parse_part(&mut self) -> Result<RawPart, PolyError> {
        let src = self.parse_tuple()?;
        let dst = if self.lx.eat("->") { Some(self.parse_tuple()?) } else { None };
        let formula = if self.lx.eat(":") { self.parse_formula()? } else { vec![Vec::new()] };
        Ok(RawPart { src, dst, formula })
    }

    fn parse_all(&mut self) -> Result<Vec<RawPart>, PolyError> {
        self.lx.expect("{")?;
        let mut parts = Vec::new();
        if self.lx.eat("}") {
            return self.finish(parts);
        }
        loop {
            parts.push(self.parse_part()?);
            if self.lx.eat("}") {
                break;
            }
            self.lx.expect(";")?;
        }
        self.finish(parts)
    }

    fn finish(&mut self, parts: Vec<RawPart>) -> Result<Vec<RawPart>, PolyError> {
        if self.lx.pos != self.lx.toks.len() {
            return Err(self.lx.err("trailing input"));
        }
        Ok(parts)
    }

    /// Assigns dimensions to tuple entries; returns the space and extra
    /// equalities for non-identifier entries.
    fn tuple_space(
        &mut self,
        t: &RawTuple,
        vars: &mut HashMap<String, usize>,
        names: &mut Vec<String>,
        eqs: &mut Vec<Comparison>,
    ) -> Space {
        let mut dims = Vec::new();
        for e in &t.entries {
            let fresh_ident = match e.terms.as_slice() {
                [(1, LinAtom::Var(n))] if e.constant == 0 && !vars.contains_key(n) => Some(n.clone()),
                _ => None,
            };
            let name = match fresh_ident {
                Some(n) => n,
                None => {
                    self.fresh += 1;
                    let mut n = format!("_t{}", self.fresh);
                    while vars.contains_key(&n) {
                        self.fresh += 1;
                        n = format!("_t{}", self.fresh);
                    }
                    eqs.push((Lin::var(n.clone()), "=", e.clone()));
                    n
                }
            };
            vars.insert(name.clone(), names.len());
            names.push(name.clone());
            dims.push(name);
        }
        Space { name: t.name.clone(), dims }
    }
}

fn to_constraints(
    chain: &[Comparison],
    vars: &HashMap<String, usize>,
    n: usize,
) -> Result<Vec<Constraint>, PolyError> {
    let mut out = Vec::new();
    for (l, op, r) in chain {
        let l = l.build(vars, n)?;
        let r = r.build(vars, n)?;
        out.push(match *op {
            "<=" => Constraint::ge(r.sub(&l)),
            "<" => Constraint::ge(r.sub(&l).add_constant(-1)),
            ">=" => Constraint::ge(l.sub(&r)),
            ">" => Constraint::ge(l.sub(&r).add_constant(-1)),
            _ => Constraint::eq(l.sub(&r)),
        });
    }
    Ok(out)
}

enum Parsed {
    Sets(Vec<BasicSet>),
    Maps(Vec<BasicMap>),
}

fn parse(src: &str) -> Result<Parsed, PolyError> {
    let toks = lex(src)?;
    let mut p = Parser { lx: Lexer { toks, pos: 0 }, fresh: 0 };
    let parts = p.parse_all()?;
    let is_map = parts.first().map(|x| x.dst.is_some()).unwrap_or(false);
    let mut sets = Vec::new();
    let mut maps = Vec::new();
    for part in parts {
        if part.dst.is_some() != is_map {
            return Err(PolyError::Parse { line: 1, col: 1, msg: "mixing sets and maps".into() });
        }
        let mut vars = HashMap::new();
        let mut names = Vec::new();
        let mut eqs = Vec::new();
        let src_space = p.tuple_space(&part.src, &mut vars, &mut names, &mut eqs);
        let dst_space = part.dst.as_ref().map(|d| p.tuple_space(d, &mut vars, &mut names, &mut eqs));
        let n = names.len();
        for conj in &part.formula {
            let mut cons = to_constraints(&eqs, &vars, n)?;
            cons.extend(to_constraints(conj, &vars, n)?);
            match &dst_space {
                Some(d) => maps.push(BasicMap::new(src_space.clone(), d.clone(), cons)),
                None => sets.push(BasicSet::new(src_space.clone(), cons)),
            }
        }
    }
    Ok(if is_map { Parsed::Maps(maps) } else { Parsed::Sets(sets) })
}

pub fn parse_set(src: &str) -> Result<Set, PolyError> {
    match parse(src)? {
        Parsed::Sets(s) => Set::from_pieces(s),
        Parsed::Maps(m) if m.is_empty() => Ok(Set::empty()),
        Parsed::Maps(_) => Err(PolyError::Parse { line: 1, col: 1, msg: "expected a set, found a map".into() }),
    }
}

pub fn parse_map(src: &str) -> Result<Map, PolyError> {
    match parse(src)? {
        Parsed::Maps(m) => Map::from_pieces(m),
        Parsed::Sets(s) if s.is_empty() => Ok(Map::empty()),
        Parsed::Sets(_) => Err(PolyError::Parse { line: 1, col: 1, msg: "expected a map, found a set".into() }),
    }
}

fn constraints_text(cons: &[Constraint], names: &[String]) -> String {
    cons.iter().map(|c| c.fmt_with(names)).collect::<Vec<_>>().join(" and ")
}

fn tuple_text(s: &Space, names: &[String]) -> String {
    format!("{}[{}]", s.display_name(), names.join(", "))
}

/// Output dimension names made distinct from the input ones.
fn pair_names(src: &Space, dst: &Space) -> (Vec<String>, Vec<String>) {
    let a = src.dims.clone();
    let b = dst
        .dims
        .iter()
        .map(|d| {
            let mut d = d.clone();
            while a.contains(&d) {
                d.push('\'');
            }
            d
        })
        .collect();
    (a, b)
}

pub fn format_set(s: &Set) -> String {
    let parts: Vec<String> = s
        .pieces
        .iter()
        .map(|b| {
            let t = tuple_text(&b.space, &b.space.dims);
            if b.poly.constraints().is_empty() {
                t
            } else {
                format!("{t} : {}", constraints_text(b.poly.constraints(), &b.space.dims))
            }
        })
        .collect();
    format!("{{ {} }}", parts.join("; "))
}

pub fn format_map(m: &Map) -> String {
    let parts: Vec<String> = m
        .pieces
        .iter()
        .map(|b| {
            let (a, c) = pair_names(&b.src, &b.dst);
            let all: Vec<String> = a.iter().chain(c.iter()).cloned().collect();
            let t = format!("{} -> {}", tuple_text(&b.src, &a), tuple_text(&b.dst, &c));
            if b.poly.constraints().is_empty() {
                t
            } else {
                format!("{t} : {}", constraints_text(b.poly.constraints(), &all))
            }
        })
        .collect();
    format!("{{ {} }}", parts.join("; "))
}

pub(crate) fn format_piece(space: &Space, cons: &[Constraint], poly: &QuasiPolynomial) -> String {
    let t = tuple_text(space, &space.dims);
    let p = poly.fmt_with(&space.dims);
    if cons.is_empty() {
        format!("{t} -> {p}")
    } else {
        format!("{t} -> {p} : {}", constraints_text(cons, &space.dims))
    }
}

impl std::fmt::Display for Set {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&format_set(self))
    }
}

impl std::fmt::Display for Map {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&format_map(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_enumerate() {
        let s = parse_set("{ S[i, j] : 0 <= i < 3 and 0 <= j < i }").unwrap();
        assert_eq!(s.cardinality().unwrap(), 3.into());
        let m = parse_map("{ S0[i] -> M[i] : 0 <= i < 4; S1[j] -> M[3 - j] : 0 <= j < 4 }").unwrap();
        assert!(m.contains(Some("S1"), &[1], Some("M"), &[2]));
        assert!(!m.contains(Some("S1"), &[1], Some("M"), &[1]));
    }

    #[test]
    fn floor_and_mod() {
        let s = parse_set("{ [i] : 0 <= i < 16 and i mod 4 = 1 }").unwrap();
        let pts: Vec<i64> = s.enumerate().unwrap().into_iter().map(|p| p.1[0]).collect();
        assert_eq!(pts, vec![1, 5, 9, 13]);
        let s = parse_set("{ [i] : floor((i)/8) = 1 and 0 <= i }").unwrap();
        assert_eq!(s.cardinality().unwrap(), 8.into());
    }

    #[test]
    fn round_trip() {
        for src in [
            "{ S[i, j] : 0 <= i < 3 and 0 <= j < i; T[k] : k = 2 }",
            "{ [i] : 0 <= i < 20 and floor((i + 1)/8) = 1 }",
            "{ S[i] : 0 <= i < 10 and i mod 3 = 2 or i = 11 }",
        ] {
            let s = parse_set(src).unwrap();
            let again = parse_set(&format_set(&s)).unwrap();
            assert!(s.is_equal(&again).unwrap(), "{src} vs {}", format_set(&s));
        }
        let m = parse_map("{ S[i] -> T[i + 1, 0] : 0 <= i < 4 }").unwrap();
        let again = parse_map(&format_map(&m)).unwrap();
        assert!(m.is_equal(&again).unwrap());
    }

    #[test]
    fn errors_carry_positions() {
        match parse_set("{ S[i] : i <= }") {
            Err(PolyError::Parse { line: 1, col, .. }) => assert_eq!(col, 15),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_set("{ S[i] : j = 0 }"), Err(PolyError::UnknownDimension(_))));
    }
}
