//! Backward stack distances of every access as piecewise quasi-polynomials.
//!
//! For a target access `X` at instance `y`, the previous access to the same
//! cache line is the lexicographic maximum of all earlier schedule values
//! touching that line. The distance is the number of distinct lines touched
//! by accesses whose schedule value lies between that previous access and
//! `y`, both included.

use super::order::lex_pieces;
use crate::frontend::Program;
use crate::polyhedra::{AffineExpr, BasicMap, Constraint, Map, Piece, PolyError, Polyhedron};

/// Stack distance pieces of one access.
#[derive(Clone, Debug)]
pub struct AccessDistances {
    pub statement: String,
    pub access: usize,
    pub array: String,
    /// Pieces over the statement's loop variables. They partition the
    /// instances that are not first touches of their line.
    pub pieces: Vec<Piece>,
}

/// Distances of every access, in declaration order.
#[derive(Clone, Debug, Default)]
pub struct DistanceSet {
    pub accesses: Vec<AccessDistances>,
}

impl DistanceSet {
    pub fn piece_count(&self) -> usize {
        self.accesses.iter().map(|a| a.pieces.len()).sum()
    }

    pub fn get(&self, statement: &str, access: usize) -> Option<&AccessDistances> {
        self.accesses.iter().find(|a| a.statement == statement && a.access == access)
    }
}

/// Everything about one access needed to place it in a constraint system.
pub(crate) struct AccessView {
    pub stmt: usize,
    pub access: usize,
    pub n: usize,
    pub array: String,
    pub domain: Vec<Constraint>,
    pub time: Vec<AffineExpr>,
    pub line: Vec<AffineExpr>,
}

impl AccessView {
    pub fn all(p: &Program) -> Vec<AccessView> {
        let mut out = Vec::new();
        for (s, st) in p.statements.iter().enumerate() {
            let Some(dom) = st.domain.pieces().first() else { continue };
            for (k, acc) in st.accesses.iter().enumerate() {
                out.push(AccessView {
                    stmt: s,
                    access: k,
                    n: st.iters.len(),
                    array: acc.array.clone(),
                    domain: dom.constraints().to_vec(),
                    time: st.access_schedule(k),
                    line: acc.line.clone(),
                });
            }
        }
        out
    }

    /// Expressions and constraints moved to variables `offset..offset+n`
    /// of an `total`-variable system.
    pub fn placed(&self, offset: usize, total: usize) -> Placed {
        let subs = AffineExpr::embedding(self.n, total, |i| Some(offset + i));
        Placed {
            domain: self.domain.iter().map(|c| c.substitute(&subs, total)).collect(),
            time: self.time.iter().map(|e| e.substitute(&subs, total)).collect(),
            line: self.line.iter().map(|e| e.substitute(&subs, total)).collect(),
        }
    }
}

pub(crate) struct Placed {
    pub domain: Vec<Constraint>,
    pub time: Vec<AffineExpr>,
    pub line: Vec<AffineExpr>,
}

fn vars(total: usize, offset: usize, len: usize) -> Vec<AffineExpr> {
    (0..len).map(|i| AffineExpr::var(total, offset + i)).collect()
}

fn equal(a: &[AffineExpr], b: &[AffineExpr]) -> Vec<Constraint> {
    a.iter().zip(b).map(|(x, y)| Constraint::eq(x.sub(y))).collect()
}

/// Projects out the existentials of a system and drops it when empty.
fn finish(n_dim: usize, n_ex: usize, cons: Vec<Constraint>) -> Result<Option<Polyhedron>, PolyError> {
    let mut p = Polyhedron { n_dim, n_ex, cons, empty: false };
    p.simplify();
    if p.is_marked_empty() || p.is_rationally_empty() {
        return Ok(None);
    }
    p.eliminate_existentials()?;
    if p.is_empty() {
        return Ok(None);
    }
    p.remove_redundant();
    Ok(Some(p))
}

/// Maps every instance `y` of `x` to the schedule value of the previous
/// access to the same line. Instances without one are first touches and
/// lie outside the domain.
pub(crate) fn previous_access(p: &Program, views: &[AccessView], x: &AccessView) -> Result<Map, PolyError> {
    let st = &p.statements[x.stmt];
    let src = st.space();
    let time = p.time_space();
    let d = time.dim();
    // Candidates whose schedule first differs from the target at a deeper
    // position are later, so layers run from the deepest position up.
    let mut layers: Vec<Vec<BasicMap>> = vec![Vec::new(); d];
    for y in views.iter().filter(|v| v.array == x.array) {
        // variables: [target instance | time | source instance]
        let total = x.n + d + y.n;
        let px = x.placed(0, total);
        let py = y.placed(x.n + d, total);
        let t = vars(total, x.n, d);
        let mut base = px.domain.clone();
        base.extend(py.domain.iter().cloned());
        base.extend(equal(&t, &py.time));
        base.extend(equal(&py.line, &px.line));
        for (k, lex) in lex_pieces(&t, &px.time, true).into_iter().enumerate() {
            let mut cons = base.clone();
            cons.extend(lex);
            if let Some(poly) = finish(x.n + d, y.n, cons)? {
                layers[d - 1 - k].push(BasicMap::from_poly(src.clone(), time.clone(), poly));
            }
        }
    }
    Map::lexmax_layered(layers)
}

/// The lines touched between the previous access and `y`, as a map from
/// instances of `x` to lines.
pub(crate) fn touched_lines(p: &Program, views: &[AccessView], x: &AccessView, prev: &Map) -> Result<Map, PolyError> {
    let st = &p.statements[x.stmt];
    let src = st.space();
    let d = p.sched_dims;
    let mut pieces = Vec::new();
    for z in views {
        let dst = p.array_space(&z.array);
        let r = dst.dim();
        // variables: [y | line | previous time | source instance]
        let total = x.n + r + d + z.n;
        let px = x.placed(0, total);
        let pz = z.placed(x.n + r + d, total);
        let mut z_base = pz.domain.clone();
        z_base.extend(equal(&vars(total, x.n, r), &pz.line));
        // Upper ends `t_z ⪯ t_x` do not depend on the previous access.
        let mut pair = px.domain.clone();
        pair.extend(pz.domain.iter().cloned());
        let his: Vec<Vec<Constraint>> = lex_pieces(&pz.time, &px.time, false)
            .into_iter()
            .filter(|hi| {
                let mut cons = pair.clone();
                cons.extend(hi.iter().cloned());
                let mut q = Polyhedron::from_constraints(total, cons);
                q.simplify();
                !q.is_marked_empty() && !q.is_rationally_empty()
            })
            .collect();
        if his.is_empty() {
            continue;
        }
        let tp = vars(total, x.n + r, d);
        let los = lex_pieces(&tp, &pz.time, false);
        let prev_subs = AffineExpr::embedding(x.n + d, total, |i| Some(if i < x.n { i } else { i + r }));
        for pp in prev.pieces() {
            let mut base: Vec<Constraint> = pp.constraints().iter().map(|c| c.substitute(&prev_subs, total)).collect();
            base.extend(z_base.iter().cloned());
            for lo in &los {
                let mut with_lo = base.clone();
                with_lo.extend(lo.iter().cloned());
                let probe = Polyhedron::from_constraints(total, with_lo.clone());
                if probe.is_rationally_empty() {
                    continue;
                }
                for hi in &his {
                    let mut cons = with_lo.clone();
                    cons.extend(hi.iter().cloned());
                    if let Some(poly) = finish(x.n + r, d + z.n, cons)? {
                        pieces.push(BasicMap::from_poly(src.clone(), dst.clone(), poly));
                    }
                }
            }
        }
    }
    Map::from_pieces(pieces)
}

/// Stack distance pieces of one access.
pub(crate) fn access_distances(p: &Program, views: &[AccessView], x: &AccessView) -> Result<Vec<Piece>, PolyError> {
    let prev = previous_access(p, views, x)?;
    if prev.is_empty() {
        return Ok(Vec::new());
    }
    let lines = touched_lines(p, views, x, &prev)?;
    lines.cardinality_per_domain_point()
}

/// Stack distances of all accesses of `p`.
pub fn compute_stack_distances(p: &Program) -> Result<DistanceSet, PolyError> {
    let views = AccessView::all(p);
    let mut accesses = Vec::new();
    for x in &views {
        let pieces = access_distances(p, &views, x)?;
        accesses.push(AccessDistances {
            statement: p.statements[x.stmt].name.clone(),
            access: x.access,
            array: x.array.clone(),
            pieces,
        });
    }
    Ok(DistanceSet { accesses })
}
