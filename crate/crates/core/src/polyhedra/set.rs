use std::collections::BTreeMap;

use num_bigint::BigInt;

use super::constraint::Constraint;
use super::count::{self, CountBudget};
use super::error::PolyError;
use super::expr::AffineExpr;
use super::poly::{self, Polyhedron};
use super::scan;
use super::space::{Space, TupleKey};

/// A point with the name of the tuple it belongs to.
pub type NamedPoint = (Option<String>, Vec<i64>);

/// A conjunction of constraints over one tuple space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasicSet {
    pub(crate) space: Space,
    pub(crate) poly: Polyhedron,
}

impl BasicSet {
    pub fn new(space: Space, constraints: Vec<Constraint>) -> Self {
        let n = space.dim();
        BasicSet { space, poly: Polyhedron::from_constraints(n, constraints) }
    }

    pub fn universe(space: Space) -> Self {
        let n = space.dim();
        BasicSet { space, poly: Polyhedron::universe(n) }
    }

    pub(crate) fn from_poly(space: Space, poly: Polyhedron) -> Self {
        debug_assert_eq!(space.dim(), poly.n_dim);
        BasicSet { space, poly }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn polyhedron(&self) -> &Polyhedron {
        &self.poly
    }

    pub fn constraints(&self) -> &[Constraint] {
        self.poly.constraints()
    }

    pub fn is_empty(&self) -> bool {
        self.poly.is_empty()
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        self.poly.contains(point)
    }

    pub fn points(&self) -> Result<Vec<Vec<i64>>, PolyError> {
        scan::points(&self.poly, &self.space.dims)
    }

    pub fn cardinality(&self) -> Result<BigInt, PolyError> {
        count::count_points(&self.poly, &self.space.dims, CountBudget::default())
    }
}

/// A finite union of basic sets, kept pairwise disjoint. Pieces may live in
/// different tuple spaces.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Set {
    pub(crate) pieces: Vec<BasicSet>,
}

/// Groups polyhedra by tuple key, keeping the first space seen per key.
pub(crate) fn group<'a>(
    pieces: impl Iterator<Item = &'a BasicSet>,
) -> BTreeMap<TupleKey, (Space, Vec<Polyhedron>)> {
    let mut m: BTreeMap<TupleKey, (Space, Vec<Polyhedron>)> = BTreeMap::new();
    for p in pieces {
        m.entry(p.space.key()).or_insert_with(|| (p.space.clone(), Vec::new())).1.push(p.poly.clone());
    }
    m
}

fn check_all(a: &[BasicSet], b: &[BasicSet]) -> Result<(), PolyError> {
    for x in a {
        for y in b {
            x.space.check_compatible(&y.space)?;
        }
    }
    Ok(())
}

impl Set {
    pub fn empty() -> Self {
        Set { pieces: Vec::new() }
    }

    pub fn from_basic(b: BasicSet) -> Self {
        if b.poly.is_marked_empty() {
            return Set::empty();
        }
        Set { pieces: vec![b] }
    }

    /// Builds a set from possibly overlapping pieces.
    pub fn from_pieces(pieces: Vec<BasicSet>) -> Result<Self, PolyError> {
        check_all(&pieces, &pieces)?;
        let mut out = Vec::new();
        for (_, (space, polys)) in group(pieces.iter()) {
            for p in poly::disjointify(polys) {
                out.push(BasicSet::from_poly(space.clone(), p));
            }
        }
        Ok(Set { pieces: out })
    }

    /// Trusts the caller that the pieces are already disjoint.
    pub(crate) fn from_disjoint(pieces: Vec<BasicSet>) -> Self {
        Set { pieces: pieces.into_iter().filter(|p| !p.poly.is_marked_empty()).collect() }
    }

    pub fn pieces(&self) -> &[BasicSet] {
        &self.pieces
    }

    pub fn spaces(&self) -> Vec<Space> {
        group(self.pieces.iter()).into_values().map(|(s, _)| s).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.iter().all(|p| p.is_empty())
    }

    pub fn contains(&self, name: Option<&str>, point: &[i64]) -> bool {
        self.pieces.iter().any(|p| {
            p.space.name.as_deref() == name && p.space.dim() == point.len() && p.poly.contains(point)
        })
    }

    pub fn intersect(&self, o: &Set) -> Result<Set, PolyError> {
        check_all(&self.pieces, &o.pieces)?;
        let mut out = Vec::new();
        for a in &self.pieces {
            for b in &o.pieces {
                if !a.space.matches(&b.space) {
                    continue;
                }
                let p = a.poly.intersect(&b.poly);
                if !p.is_empty() {
                    out.push(BasicSet::from_poly(a.space.clone(), p));
                }
            }
        }
        Ok(Set::from_disjoint(out))
    }

    pub fn union(&self, o: &Set) -> Result<Set, PolyError> {
        check_all(&self.pieces, &o.pieces)?;
        let mut out = self.pieces.clone();
        out.extend(o.subtract(self)?.pieces);
        Ok(Set { pieces: out })
    }

    pub fn subtract(&self, o: &Set) -> Result<Set, PolyError> {
        check_all(&self.pieces, &o.pieces)?;
        let mut out = Vec::new();
        for a in &self.pieces {
            let others: Vec<Polyhedron> =
                o.pieces.iter().filter(|b| b.space.matches(&a.space)).map(|b| b.poly.clone()).collect();
            for p in poly::subtract_all(&a.poly, &others) {
                out.push(BasicSet::from_poly(a.space.clone(), p));
            }
        }
        Ok(Set { pieces: out })
    }

    pub fn is_subset(&self, o: &Set) -> Result<bool, PolyError> {
        Ok(self.subtract(o)?.is_empty())
    }

    pub fn is_equal(&self, o: &Set) -> Result<bool, PolyError> {
        Ok(self.is_subset(o)? && o.is_subset(self)?)
    }

    /// Projection onto the named dimensions (in the given order).
    pub fn project(&self, keep: &[&str]) -> Result<Set, PolyError> {
        let mut out = Vec::new();
        for p in &self.pieces {
            let idx: Vec<usize> = keep.iter().map(|d| p.space.index_of(d)).collect::<Result<_, _>>()?;
            out.push(project_piece(p, &idx)?);
        }
        Set::from_pieces(out)
    }

    /// Total number of points.
    pub fn cardinality(&self) -> Result<BigInt, PolyError> {
        let mut total = BigInt::from(0);
        for p in &self.pieces {
            total += p.cardinality()?;
        }
        Ok(total)
    }

    /// All points, ordered by tuple name and then lexicographically.
    pub fn enumerate(&self) -> Result<Vec<NamedPoint>, PolyError> {
        let mut out = Vec::new();
        for p in &self.pieces {
            for pt in p.points()? {
                out.push((p.space.name.clone(), pt));
            }
        }
        out.sort();
        Ok(out)
    }

    /// Merges pieces where possible.
    pub fn coalesce(&self) -> Set {
        let mut out = Vec::new();
        for (_, (space, polys)) in group(self.pieces.iter()) {
            for p in poly::coalesce(polys) {
                out.push(BasicSet::from_poly(space.clone(), p));
            }
        }
        Set { pieces: out }
    }

    /// Restricts every piece by extra constraints given over the dimensions
    /// of each piece's space.
    pub fn filter(&self, f: impl Fn(&Space) -> Vec<Constraint>) -> Set {
        let mut out = Vec::new();
        for p in &self.pieces {
            let mut q = p.poly.clone();
            for c in f(&p.space) {
                q.add(c);
            }
            q.simplify();
            if !q.is_empty() {
                out.push(BasicSet::from_poly(p.space.clone(), q));
            }
        }
        Set { pieces: out }
    }
}

/// Projects one basic set onto dimensions `idx` (in order).
pub(crate) fn project_piece(p: &BasicSet, idx: &[usize]) -> Result<BasicSet, PolyError> {
    let n = p.space.dim();
    let k = idx.len();
    let mut target: Vec<usize> = vec![usize::MAX; n];
    for (pos, &i) in idx.iter().enumerate() {
        target[i] = pos;
    }
    let mut next = k;
    for t in target.iter_mut() {
        if *t == usize::MAX {
            *t = next;
            next += 1;
        }
    }
    let subs = AffineExpr::embedding(n, n, |i| Some(target[i]));
    let mut q = p.poly.substituted(&subs, k, n - k);
    q.eliminate_existentials()?;
    let dims = idx.iter().map(|&i| p.space.dims[i].clone()).collect();
    Ok(BasicSet::from_poly(Space { name: p.space.name.clone(), dims }, q))
}
