//! Floor-eliminating rewrites of distance pieces.
//!
//! Equalization replaces the difference of two floor terms whose arguments
//! differ by a constant with its value on each run of residues.
//! Rasterization replaces `x - d*floor(x/d)` by each residue `r` in turn.
//! Both are kept only when some resulting polynomial has lower degree.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::misses::atom_expr;
use crate::polyhedra::{AffineExpr, Atom, Constraint, Div, Piece, QuasiPolynomial};

/// Floor atoms occurring in a monomial of degree two or more.
fn product_atoms(poly: &QuasiPolynomial) -> Vec<Arc<Div>> {
    let mut out: Vec<Arc<Div>> = Vec::new();
    for m in poly.terms().keys() {
        let deg: u32 = m.iter().map(|(_, e)| e).sum();
        if deg < 2 {
            continue;
        }
        for (a, _) in m {
            if let Atom::Floor(d) = a {
                if !out.contains(d) {
                    out.push(d.clone());
                }
            }
        }
    }
    out
}

/// Replaces floor atoms by polynomials.
fn replace(poly: &QuasiPolynomial, with: &[(Arc<Div>, QuasiPolynomial)]) -> QuasiPolynomial {
    let n = poly.n_vars();
    poly.map_atoms(n, &mut |a| {
        if let Atom::Floor(d) = a {
            if let Some((_, q)) = with.iter().find(|(x, _)| x == d) {
                return q.clone();
            }
        }
        QuasiPolynomial::atom(n, a.clone())
    })
}

/// Restricts a piece's domain and keeps it when nonempty.
fn region(piece: &Piece, cons: Vec<Constraint>, poly: QuasiPolynomial) -> Option<Piece> {
    let domain = piece.domain.filter(|_| cons.clone());
    if domain.pieces().is_empty() {
        None
    } else {
        Some(Piece::new(domain, poly))
    }
}

fn lowers_degree(before: &QuasiPolynomial, after: &[Piece]) -> bool {
    let d = before.degree();
    after.iter().any(|p| p.poly.degree() < d)
}

fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Splits a piece by the residue of floor arguments that differ only by a
/// constant. Returns `None` when no group of such floors lowers the degree.
pub fn equalize(piece: &Piece) -> Option<Vec<Piece>> {
    let n = piece.poly.n_vars();
    // Group by argument without its constant, and divisor.
    let mut groups: BTreeMap<(AffineExpr, i64), Vec<Arc<Div>>> = BTreeMap::new();
    for a in product_atoms(&piece.poly) {
        let key = a.inner().add_constant(-a.inner().constant_term());
        groups.entry((key, a.divisor())).or_default().push(a);
    }
    let mut current = vec![piece.clone()];
    let mut changed = false;
    for ((_, d), mut atoms) in groups {
        if atoms.len() < 2 {
            continue;
        }
        atoms.sort_by_key(|a| a.inner().constant_term());
        let base = atoms[0].clone();
        let c0 = base.inner().constant_term();
        let offsets: Vec<i64> = atoms[1..].iter().map(|a| a.inner().constant_term() - c0).collect();
        // Runs of residues of the base argument with equal floor differences.
        let value = |r: i64| -> Vec<i64> { offsets.iter().map(|o| (r + o).div_euclid(d)).collect() };
        let mut runs: Vec<(i64, i64, Vec<i64>)> = Vec::new();
        for r in 0..d {
            let v = value(r);
            match runs.last_mut() {
                Some((_, hi, w)) if *w == v => *hi = r,
                _ => runs.push((r, r, v)),
            }
        }
        let arg = base.inner().clone();
        let residue = arg.sub(&atom_expr(n, &base).scale(d));
        let base_q = QuasiPolynomial::atom(n, Atom::Floor(base.clone()));
        let mut next = Vec::new();
        for p in &current {
            let mut parts = Vec::new();
            for (lo, hi, vals) in &runs {
                let with: Vec<(Arc<Div>, QuasiPolynomial)> = atoms[1..]
                    .iter()
                    .zip(vals)
                    .map(|(a, v)| (a.clone(), base_q.add(&QuasiPolynomial::constant(n, rat(*v)))))
                    .collect();
                let cons = vec![
                    Constraint::ge(residue.add_constant(-lo)),
                    Constraint::ge(residue.neg().add_constant(*hi)),
                ];
                parts.extend(region(p, cons, replace(&p.poly, &with)));
            }
            if lowers_degree(&p.poly, &parts) {
                changed = true;
                next.extend(parts);
            } else {
                next.push(p.clone());
            }
        }
        current = next;
    }
    changed.then_some(current)
}

/// Splits a piece into one region per residue of a floor argument,
/// substituting `floor(x/d) = (x - r)/d`. Returns `None` when no floor term
/// lowers the degree this way.
pub fn rasterize(piece: &Piece) -> Option<Vec<Piece>> {
    let n = piece.poly.n_vars();
    let mut current = vec![piece.clone()];
    let mut changed = false;
    for atom in product_atoms(&piece.poly) {
        let d = atom.divisor();
        let arg = atom.inner().clone();
        let arg_q = QuasiPolynomial::from_affine(&arg);
        let residue = arg.sub(&atom_expr(n, &atom).scale(d));
        let mut next = Vec::new();
        for p in &current {
            if !p.poly.floor_atoms().contains(&atom) {
                next.push(p.clone());
                continue;
            }
            let mut parts = Vec::new();
            for r in 0..d {
                let value = arg_q.sub(&QuasiPolynomial::constant(n, rat(r))).scale(&BigRational::new(1.into(), d.into()));
                let cons = vec![Constraint::eq(residue.add_constant(-r))];
                parts.extend(region(p, cons, replace(&p.poly, &[(atom.clone(), value)])));
            }
            if lowers_degree(&p.poly, &parts) {
                changed = true;
                next.extend(parts);
            } else {
                next.push(p.clone());
            }
        }
        current = next;
    }
    changed.then_some(current)
}

/// Applies equalization then rasterization as enabled.
pub fn simplify_pieces(pieces: Vec<Piece>, equalization: bool, rasterization: bool) -> Vec<Piece> {
    let mut out = pieces;
    if equalization {
        out = out.into_iter().flat_map(|p| equalize(&p).unwrap_or_else(|| vec![p])).collect();
    }
    if rasterization {
        out = out.into_iter().flat_map(|p| rasterize(&p).unwrap_or_else(|| vec![p])).collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyhedra::{parse_set, Set};

    fn floor_q(e: AffineExpr, d: i64) -> QuasiPolynomial {
        QuasiPolynomial::from_affine(&e.floor_div(d))
    }

    fn grid() -> Set {
        parse_set("{ S[i, j] : 0 <= i < 3 and 0 <= j < 2 }").unwrap()
    }

    /// Every point of the input lies in exactly one output piece, with the
    /// same value.
    fn assert_equivalent(input: &Piece, out: &[Piece]) {
        for (_, pt) in input.domain.enumerate().unwrap() {
            let hits: Vec<&Piece> = out.iter().filter(|p| p.domain.contains(Some("S"), &pt)).collect();
            assert_eq!(hits.len(), 1, "point {pt:?}");
            assert_eq!(hits[0].poly.eval(&pt), input.poly.eval(&pt), "point {pt:?}");
        }
        let total: BigInt = out.iter().map(|p| p.domain.cardinality().unwrap()).sum();
        assert_eq!(total, input.domain.cardinality().unwrap());
    }

    #[test]
    fn equalize_floor_difference() {
        let i = AffineExpr::var(2, 0);
        let j = QuasiPolynomial::var(2, 1);
        let diff = floor_q(i.add_constant(1), 3).sub(&floor_q(i.clone(), 3));
        let piece = Piece::new(grid(), diff.mul(&j));
        assert_eq!(piece.poly.degree(), 2);
        let out = equalize(&piece).expect("equalization applies");
        assert_equivalent(&piece, &out);
        assert!(out.iter().all(|p| p.poly.degree() <= 1));
        // i in {0, 1} gives 0, i = 2 gives j.
        let values: Vec<String> = out.iter().map(|p| p.poly.to_string()).collect();
        assert!(values.contains(&"0".to_string()), "{values:?}");
    }

    #[test]
    fn rasterize_modulo() {
        let i = AffineExpr::var(2, 0);
        let j = QuasiPolynomial::var(2, 1);
        let m = QuasiPolynomial::from_affine(&i).sub(&floor_q(i.clone(), 3).scale(&rat(3)));
        let piece = Piece::new(grid(), m.mul(&j));
        let out = rasterize(&piece).expect("rasterization applies");
        assert_equivalent(&piece, &out);
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|p| p.poly.degree() <= 1));
    }

    #[test]
    fn rewrites_keep_affine_pieces() {
        let piece = Piece::new(grid(), QuasiPolynomial::var(2, 1).add(&floor_q(AffineExpr::var(2, 0), 2)));
        assert!(equalize(&piece).is_none());
        assert!(rasterize(&piece).is_none());
    }
}
