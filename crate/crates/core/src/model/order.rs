//! Lexicographic order relations over schedule values.

use crate::frontend::Program;
use crate::polyhedra::{AffineExpr, BasicMap, Constraint, Map, PolyError, Polyhedron, Set};

/// `a ≺ b` (or `a ⪯ b` when `strict` is false) as a disjunction of
/// conjunctions, one per position of the first difference. The disjuncts
/// are pairwise disjoint.
pub(crate) fn lex_pieces(a: &[AffineExpr], b: &[AffineExpr], strict: bool) -> Vec<Vec<Constraint>> {
    assert_eq!(a.len(), b.len());
    let mut out = Vec::new();
    for p in 0..=a.len() {
        if p == a.len() && strict {
            break;
        }
        let mut cons: Vec<Constraint> = (0..p).map(|q| Constraint::eq(b[q].sub(&a[q]))).collect();
        if p < a.len() {
            cons.push(Constraint::ge(b[p].sub(&a[p]).add_constant(-1)));
        }
        out.push(cons);
    }
    out
}

/// The range of the schedule as a set of time points.
pub fn schedule_range(p: &Program) -> Result<Set, PolyError> {
    p.schedule.range()
}

/// `L≺` and `L⪯`: every schedule value related to all lexicographically
/// larger (or equal) schedule values, restricted to the schedule range.
pub fn build_order_maps(p: &Program) -> Result<(Map, Map), PolyError> {
    let range = schedule_range(p)?;
    let space = p.time_space();
    let d = space.dim();
    let n = 2 * d;
    let x: Vec<AffineExpr> = (0..d).map(|i| AffineExpr::var(n, i)).collect();
    let y: Vec<AffineExpr> = (0..d).map(|i| AffineExpr::var(n, d + i)).collect();
    let left = AffineExpr::embedding(d, n, Some);
    let right = AffineExpr::embedding(d, n, |i| Some(d + i));
    let mut maps = Vec::new();
    for strict in [true, false] {
        let mut pieces = Vec::new();
        for a in range.pieces() {
            for b in range.pieces() {
                for lex in lex_pieces(&x, &y, strict) {
                    let mut cons: Vec<Constraint> =
                        a.constraints().iter().map(|c| c.substitute(&left, n)).collect();
                    cons.extend(b.constraints().iter().map(|c| c.substitute(&right, n)));
                    cons.extend(lex);
                    let mut poly = Polyhedron::from_constraints(n, cons);
                    poly.simplify();
                    if !poly.is_empty() {
                        pieces.push(BasicMap::from_poly(space.clone(), space.clone(), poly));
                    }
                }
            }
        }
        maps.push(Map::from_pieces(pieces)?);
    }
    let le = maps.pop().expect("two maps");
    let lt = maps.pop().expect("two maps");
    Ok((lt, le))
}
