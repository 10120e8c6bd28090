//! Compulsory and capacity miss counting.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::distance::AccessView;
use crate::frontend::Program;
use crate::polyhedra::{
    AffineExpr, Atom, BasicMap, BasicSet, Constraint, Div, Map, Piece, PolyError, Polyhedron, QuasiPolynomial, Set,
    Space,
};

/// First touches per statement (declaration order): the instances holding
/// the lexicographically smallest schedule value among all accesses of
/// their line.
pub fn count_compulsory_misses(p: &Program) -> Result<Vec<BigInt>, PolyError> {
    let views = AccessView::all(p);
    let time = p.time_space();
    let d = time.dim();
    let mut pieces = Vec::new();
    let mut images = Vec::new();
    for y in &views {
        let arr = p.array_space(&y.array);
        let r = arr.dim();
        // variables: [line | time | instance]
        let total = r + d + y.n;
        let py = y.placed(r + d, total);
        let mut cons = py.domain.clone();
        for (k, e) in py.time.iter().enumerate() {
            cons.push(Constraint::eq(AffineExpr::var(total, r + k).sub(e)));
        }
        for (k, e) in py.line.iter().enumerate() {
            cons.push(Constraint::eq(AffineExpr::var(total, k).sub(e)));
        }
        let mut poly = Polyhedron { n_dim: r + d, n_ex: y.n, cons, empty: false };
        poly.eliminate_existentials()?;
        if poly.is_empty() {
            images.push(None);
            continue;
        }
        let bm = BasicMap::from_poly(arr, time.clone(), poly);
        images.push(Some(Set::from_basic(bm.range()?)));
        pieces.push(bm);
    }
    // Distinct accesses have distinct schedule values, so the pieces are
    // disjoint.
    let first = Map::from_disjoint(pieces).lexmin(&[])?;
    let mut out = vec![BigInt::zero(); p.statements.len()];
    for (y, img) in views.iter().zip(&images) {
        if let Some(img) = img {
            out[y.stmt] += first.intersect_range(img)?.cardinality()?;
        }
    }
    Ok(out)
}

/// Instances of a piece whose distance exceeds `capacity_lines`. The piece
/// polynomial must be affine.
pub fn count_affine_piece(piece: &Piece, capacity_lines: u64) -> Result<BigInt, PolyError> {
    let (expr, den) = piece.poly.to_affine().expect("count_affine_piece needs an affine polynomial");
    let c = i64::try_from(capacity_lines).expect("capacity fits in i64");
    // expr / den > c  <=>  expr - c*den - 1 >= 0
    let miss = Constraint::ge(expr.add_constant(-c * den - 1));
    piece.domain.filter(|_| vec![miss.clone()]).cardinality()
}

/// Variables of each factor of every monomial: `(variables, exponent)`.
fn factors(poly: &QuasiPolynomial) -> Vec<Vec<(Vec<usize>, u32)>> {
    let n = poly.n_vars();
    poly.terms()
        .keys()
        .map(|m| {
            m.iter()
                .map(|(a, e)| {
                    let vs = match a {
                        Atom::Var(i) => vec![*i],
                        Atom::Floor(d) => (0..n).filter(|&v| d.inner().uses_var(v)).collect(),
                    };
                    (vs, *e)
                })
                .collect()
        })
        .collect()
}

/// Dimensions to enumerate so that binding them leaves an affine
/// polynomial: every dimension of degree two or more, then greedily the
/// dimension involved in most remaining products (ties toward the earlier
/// dimension).
pub fn non_affine_dims(poly: &QuasiPolynomial) -> Vec<usize> {
    let n = poly.n_vars();
    let monos = factors(poly);
    let mut selected = vec![false; n];
    for m in &monos {
        for v in 0..n {
            let deg: u32 = m.iter().filter(|(vs, _)| vs.contains(&v)).map(|(_, e)| e).sum();
            if deg >= 2 {
                selected[v] = true;
            }
        }
    }
    loop {
        let free_degree = |m: &Vec<(Vec<usize>, u32)>| -> u32 {
            m.iter().filter(|(vs, _)| vs.iter().any(|v| !selected[*v])).map(|(_, e)| e).sum()
        };
        let violating: Vec<&Vec<(Vec<usize>, u32)>> = monos.iter().filter(|m| free_degree(m) >= 2).collect();
        if violating.is_empty() {
            break;
        }
        let mut best: Option<(usize, usize)> = None;
        for v in (0..n).filter(|v| !selected[*v]) {
            let hits = violating.iter().filter(|m| m.iter().any(|(vs, _)| vs.contains(&v))).count();
            if hits > 0 && best.is_none_or(|(h, _)| hits > h) {
                best = Some((hits, v));
            }
        }
        match best {
            Some((_, v)) => selected[v] = true,
            None => break,
        }
    }
    (0..n).filter(|v| selected[*v]).collect()
}

/// The enumeration domain of a non-affine piece: its domain projected onto
/// the dimensions chosen by [`non_affine_dims`].
pub fn get_non_affine_domain(piece: &Piece) -> Result<(Vec<usize>, Set), PolyError> {
    let dims = non_affine_dims(&piece.poly);
    let mut out = Vec::new();
    for b in piece.domain.pieces() {
        let names: Vec<&str> = dims.iter().map(|&d| b.space().dims[d].as_str()).collect();
        out.extend(Set::from_basic(b.clone()).project(&names)?.pieces().iter().cloned());
    }
    Ok((dims, Set::from_pieces(out)?))
}

/// Fixes the dimensions `dims` of a piece to `values`, leaving a piece over
/// the remaining dimensions.
pub fn bind_non_affine_dimensions(piece: &Piece, dims: &[usize], values: &[i64]) -> Piece {
    assert_eq!(dims.len(), values.len());
    let n = piece.poly.n_vars();
    let rest: Vec<usize> = (0..n).filter(|v| !dims.contains(v)).collect();
    let m = rest.len();
    let subs: Vec<AffineExpr> = (0..n)
        .map(|v| match dims.iter().position(|d| *d == v) {
            Some(k) => AffineExpr::constant(m, values[k]),
            None => AffineExpr::var(m, rest.iter().position(|r| *r == v).expect("free dimension")),
        })
        .collect();
    let mut pieces = Vec::new();
    for b in piece.domain.pieces() {
        let space = Space {
            name: b.space().name.clone(),
            dims: rest.iter().map(|&v| b.space().dims[v].clone()).collect(),
        };
        let poly = b.polyhedron().substituted(&subs, m, 0);
        if !poly.is_marked_empty() {
            pieces.push(BasicSet::from_poly(space, poly));
        }
    }
    Piece::new(Set::from_disjoint(pieces), piece.poly.substitute(&subs, m))
}

/// How one distance piece is counted at every level.
#[derive(Clone, Debug)]
pub(crate) enum Plan {
    /// Symbolic count of the miss set.
    Affine(Piece),
    /// Partial enumeration: one affine piece per bound point. Constant
    /// pieces are reduced to `(value, size)`.
    Enumerated { affine: Vec<Piece>, constant: Vec<(BigRational, BigInt)> },
    /// Full enumeration: the distance of every point.
    Values(Vec<BigRational>),
}

impl Plan {
    pub fn new(piece: &Piece, partial: bool) -> Result<Plan, PolyError> {
        if piece.poly.is_affine() {
            return Ok(Plan::Affine(piece.clone()));
        }
        if !partial {
            let mut vals = Vec::new();
            for (_, pt) in piece.domain.enumerate()? {
                vals.push(piece.poly.eval(&pt));
            }
            return Ok(Plan::Values(vals));
        }
        let (dims, dom) = get_non_affine_domain(piece)?;
        let mut affine = Vec::new();
        let mut constant = Vec::new();
        for (_, pt) in dom.enumerate()? {
            let b = bind_non_affine_dimensions(piece, &dims, &pt);
            if b.domain.pieces().is_empty() {
                continue;
            }
            match b.poly.constant_value() {
                Some(v) => {
                    let size = b.domain.cardinality()?;
                    if !size.is_zero() {
                        constant.push((v, size));
                    }
                }
                None => affine.push(b),
            }
        }
        Ok(Plan::Enumerated { affine, constant })
    }

    pub fn enumerated_points(&self) -> usize {
        match self {
            Plan::Affine(_) => 0,
            Plan::Enumerated { affine, constant } => affine.len() + constant.len(),
            Plan::Values(v) => v.len(),
        }
    }

    pub fn count(&self, capacity_lines: u64) -> Result<BigInt, PolyError> {
        let c = BigRational::from_integer(BigInt::from(capacity_lines));
        match self {
            Plan::Affine(p) => count_affine_piece(p, capacity_lines),
            Plan::Enumerated { affine, constant } => {
                let mut total = BigInt::zero();
                for (v, size) in constant {
                    if *v > c {
                        total += size;
                    }
                }
                for p in affine {
                    total += count_affine_piece(p, capacity_lines)?;
                }
                Ok(total)
            }
            Plan::Values(vals) => Ok(BigInt::from(vals.iter().filter(|v| **v > c).count())),
        }
    }
}

/// Capacity misses of a list of distance pieces at `capacity_lines`
/// (Algorithm 1: symbolic for affine pieces, partial enumeration of the
/// non-affine dimensions otherwise).
pub fn count_capacity_misses(pieces: &[Piece], capacity_lines: u64) -> Result<BigInt, PolyError> {
    let mut total = BigInt::zero();
    for p in pieces {
        total += Plan::new(p, true)?.count(capacity_lines)?;
    }
    Ok(total)
}

/// Capacity misses counted by evaluating every point, for cross-checks.
pub fn count_capacity_misses_by_enumeration(pieces: &[Piece], capacity_lines: u64) -> Result<BigInt, PolyError> {
    let mut total = BigInt::zero();
    for p in pieces {
        total += Plan::new(p, false)?.count(capacity_lines)?;
    }
    Ok(total)
}

/// `floor(atom)` as an affine expression over `n` variables.
pub(crate) fn atom_expr(n: usize, atom: &Arc<Div>) -> AffineExpr {
    let mut e = AffineExpr::zero(n);
    e.add_div_term(atom.clone(), 1);
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyhedra::parse_set;

    fn q(n: usize, i: usize) -> QuasiPolynomial {
        QuasiPolynomial::var(n, i)
    }

    #[test]
    fn selects_squared_dimension() {
        // i + j^2
        let p = q(2, 0).add(&q(2, 1).pow(2));
        assert_eq!(non_affine_dims(&p), vec![1]);
    }

    #[test]
    fn selects_most_conflicting_dimension() {
        // i*j + i*k
        let p = q(3, 0).mul(&q(3, 1)).add(&q(3, 0).mul(&q(3, 2)));
        assert_eq!(non_affine_dims(&p), vec![0]);
        // i*j: tie goes to the earlier dimension
        assert_eq!(non_affine_dims(&q(2, 0).mul(&q(2, 1))), vec![0]);
        assert!(non_affine_dims(&q(2, 0).add(&q(2, 1))).is_empty());
    }

    #[test]
    fn floor_products_count_as_conflicts() {
        // floor(j/2) * i
        let f = QuasiPolynomial::from_affine(&AffineExpr::var(2, 1).floor_div(2));
        assert_eq!(non_affine_dims(&f.mul(&q(2, 0))), vec![0]);
    }

    #[test]
    fn binds_dimension() {
        let dom = parse_set("{ S[i, j] : 0 <= i < 4 and 0 <= j < 4 }").unwrap();
        let piece = Piece::new(dom, q(2, 0).add(&q(2, 1).pow(2)));
        let (dims, e) = get_non_affine_domain(&piece).unwrap();
        assert_eq!(dims, vec![1]);
        assert_eq!(e.cardinality().unwrap(), BigInt::from(4));
        let b = bind_non_affine_dimensions(&piece, &[1], &[2]);
        assert_eq!(b.poly.to_string(), q(1, 0).add(&QuasiPolynomial::from_int(1, 4)).to_string());
        assert_eq!(b.domain.cardinality().unwrap(), BigInt::from(4));
    }

    #[test]
    fn affine_piece_count() {
        let dom = parse_set("{ S1[j] : 0 <= j < 4 }").unwrap();
        let piece = Piece::new(dom, q(1, 0).add(&QuasiPolynomial::from_int(1, 1)));
        assert_eq!(count_affine_piece(&piece, 2).unwrap(), BigInt::from(2));
        assert_eq!(count_affine_piece(&piece, 0).unwrap(), BigInt::from(4));
        assert_eq!(count_affine_piece(&piece, 4).unwrap(), BigInt::from(0));
    }

    #[test]
    fn partial_matches_full_enumeration() {
        let dom = parse_set("{ S[i, j, k] : 0 <= i < 5 and 0 <= j <= i and 0 <= k < 3 }").unwrap();
        let poly = q(3, 0).mul(&q(3, 1)).add(&q(3, 2)).add(&q(3, 1).pow(2));
        let piece = Piece::new(dom, poly);
        for c in 0..30 {
            assert_eq!(
                count_capacity_misses(std::slice::from_ref(&piece), c).unwrap(),
                count_capacity_misses_by_enumeration(std::slice::from_ref(&piece), c).unwrap(),
                "capacity {c}"
            );
        }
    }
}
