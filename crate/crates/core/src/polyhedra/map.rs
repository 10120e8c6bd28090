use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;

use super::constraint::Constraint;
use super::count::{self, CountBudget};
use super::error::PolyError;
use super::expr::AffineExpr;
use super::piece::{self, Piece};
use super::poly::{self, Polyhedron};
use super::qpoly::QuasiPolynomial;
use super::set::{BasicSet, NamedPoint, Set};
use super::space::{Space, TupleKey};

/// A conjunction of constraints over the concatenated input and output
/// dimensions of a relation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasicMap {
    pub(crate) src: Space,
    pub(crate) dst: Space,
    pub(crate) poly: Polyhedron,
}

impl BasicMap {
    pub fn new(src: Space, dst: Space, constraints: Vec<Constraint>) -> Self {
        let n = src.dim() + dst.dim();
        BasicMap { src, dst, poly: Polyhedron::from_constraints(n, constraints) }
    }

    pub(crate) fn from_poly(src: Space, dst: Space, poly: Polyhedron) -> Self {
        debug_assert_eq!(src.dim() + dst.dim(), poly.n_dim);
        BasicMap { src, dst, poly }
    }

    /// `x -> (f_0(x), .., f_k(x))` restricted to `domain`.
    pub fn from_affine(src: Space, dst: Space, outputs: &[AffineExpr]) -> Self {
        let ni = src.dim();
        let no = dst.dim();
        assert_eq!(outputs.len(), no);
        let n = ni + no;
        let lift = AffineExpr::embedding(ni, n, Some);
        let cons = outputs
            .iter()
            .enumerate()
            .map(|(k, e)| Constraint::eq(AffineExpr::var(n, ni + k).sub(&e.substitute(&lift, n))))
            .collect();
        BasicMap::new(src, dst, cons)
    }

    pub fn src(&self) -> &Space {
        &self.src
    }

    pub fn dst(&self) -> &Space {
        &self.dst
    }

    pub fn polyhedron(&self) -> &Polyhedron {
        &self.poly
    }

    pub fn constraints(&self) -> &[Constraint] {
        self.poly.constraints()
    }

    fn key(&self) -> (TupleKey, TupleKey) {
        (self.src.key(), self.dst.key())
    }

    fn names(&self) -> Vec<String> {
        self.src.dims.iter().chain(self.dst.dims.iter()).cloned().collect()
    }

    pub fn contains(&self, x: &[i64], y: &[i64]) -> bool {
        let mut p = x.to_vec();
        p.extend_from_slice(y);
        self.poly.contains(&p)
    }

    /// Swaps input and output.
    pub fn inverse(&self) -> BasicMap {
        let ni = self.src.dim();
        let no = self.dst.dim();
        let n = ni + no;
        let subs = AffineExpr::embedding(n, n, |i| Some(if i < ni { no + i } else { i - ni }));
        BasicMap { src: self.dst.clone(), dst: self.src.clone(), poly: self.poly.substituted(&subs, n, 0) }
    }

    pub fn domain(&self) -> Result<BasicSet, PolyError> {
        let ni = self.src.dim();
        let drop: Vec<bool> = (0..self.poly.n_dim).map(|i| i >= ni).collect();
        let mut q = self.poly.dims_to_existentials(&drop);
        q.eliminate_existentials()?;
        Ok(BasicSet::from_poly(self.src.clone(), q))
    }

    pub fn range(&self) -> Result<BasicSet, PolyError> {
        self.inverse().domain()
    }

    /// The set of pairs as a basic set over an anonymous wrapped space.
    pub fn wrap(&self) -> BasicSet {
        BasicSet::from_poly(Space::anonymous(self.names()), self.poly.clone())
    }
}

/// A finite union of basic relations, kept pairwise disjoint as sets of
/// pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Map {
    pub(crate) pieces: Vec<BasicMap>,
}

type Groups = BTreeMap<(TupleKey, TupleKey), (Space, Space, Vec<Polyhedron>)>;

fn group<'a>(pieces: impl Iterator<Item = &'a BasicMap>) -> Groups {
    let mut m: Groups = BTreeMap::new();
    for p in pieces {
        m.entry(p.key())
            .or_insert_with(|| (p.src.clone(), p.dst.clone(), Vec::new()))
            .2
            .push(p.poly.clone());
    }
    m
}

fn check_all(a: &[BasicMap], b: &[BasicMap]) -> Result<(), PolyError> {
    for x in a {
        for y in b {
            x.src.check_compatible(&y.src)?;
            x.dst.check_compatible(&y.dst)?;
        }
    }
    Ok(())
}

/// Lifts a polyhedron over the input dimensions to the pair space.
fn lift_domain(p: &Polyhedron, ni: usize, no: usize) -> Polyhedron {
    let subs = AffineExpr::embedding(ni, ni + no, Some);
    p.substituted(&subs, ni + no, 0)
}

impl Map {
    pub fn empty() -> Self {
        Map { pieces: Vec::new() }
    }

    pub fn from_basic(b: BasicMap) -> Self {
        if b.poly.is_marked_empty() {
            return Map::empty();
        }
        Map { pieces: vec![b] }
    }

    pub fn from_pieces(pieces: Vec<BasicMap>) -> Result<Self, PolyError> {
        check_all(&pieces, &pieces)?;
        let mut out = Vec::new();
        for (_, (src, dst, polys)) in group(pieces.iter()) {
            for p in poly::disjointify(polys) {
                out.push(BasicMap::from_poly(src.clone(), dst.clone(), p));
            }
        }
        Ok(Map { pieces: out })
    }

    pub(crate) fn from_disjoint(pieces: Vec<BasicMap>) -> Self {
        Map { pieces: pieces.into_iter().filter(|p| !p.poly.is_marked_empty()).collect() }
    }

    /// Identity relation on a set.
    pub fn identity(s: &Set) -> Map {
        let mut out = Vec::new();
        for p in &s.pieces {
            let n = p.space.dim();
            let lift = AffineExpr::embedding(n, 2 * n, Some);
            let mut q = p.poly.substituted(&lift, 2 * n, 0);
            for i in 0..n {
                q.add(Constraint::eq(AffineExpr::var(2 * n, n + i).sub(&AffineExpr::var(2 * n, i))));
            }
            q.simplify();
            out.push(BasicMap::from_poly(p.space.clone(), p.space.clone(), q));
        }
        Map::from_disjoint(out)
    }

    pub fn pieces(&self) -> &[BasicMap] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.iter().all(|p| p.poly.is_empty())
    }

    pub fn contains(&self, src: Option<&str>, x: &[i64], dst: Option<&str>, y: &[i64]) -> bool {
        self.pieces.iter().any(|p| {
            p.src.name.as_deref() == src
                && p.dst.name.as_deref() == dst
                && p.src.dim() == x.len()
                && p.dst.dim() == y.len()
                && p.contains(x, y)
        })
    }

    pub fn inverse(&self) -> Map {
        Map { pieces: self.pieces.iter().map(BasicMap::inverse).collect() }
    }

    pub fn domain(&self) -> Result<Set, PolyError> {
        let pieces = self.pieces.iter().map(|p| p.domain()).collect::<Result<Vec<_>, _>>()?;
        Set::from_pieces(pieces)
    }

    pub fn range(&self) -> Result<Set, PolyError> {
        self.inverse().domain()
    }

    pub fn intersect(&self, o: &Map) -> Result<Map, PolyError> {
        check_all(&self.pieces, &o.pieces)?;
        let mut out = Vec::new();
        for a in &self.pieces {
            for b in &o.pieces {
                if a.key() != b.key() {
                    continue;
                }
                let p = a.poly.intersect(&b.poly);
                if !p.is_empty() {
                    out.push(BasicMap::from_poly(a.src.clone(), a.dst.clone(), p));
                }
            }
        }
        Ok(Map::from_disjoint(out))
    }

    pub fn union(&self, o: &Map) -> Result<Map, PolyError> {
        check_all(&self.pieces, &o.pieces)?;
        let mut out = self.pieces.clone();
        out.extend(o.subtract(self)?.pieces);
        Ok(Map { pieces: out })
    }

    pub fn subtract(&self, o: &Map) -> Result<Map, PolyError> {
        check_all(&self.pieces, &o.pieces)?;
        let mut out = Vec::new();
        for a in &self.pieces {
            let others: Vec<Polyhedron> =
                o.pieces.iter().filter(|b| b.key() == a.key()).map(|b| b.poly.clone()).collect();
            for p in poly::subtract_all(&a.poly, &others) {
                out.push(BasicMap::from_poly(a.src.clone(), a.dst.clone(), p));
            }
        }
        Ok(Map { pieces: out })
    }

    pub fn is_subset(&self, o: &Map) -> Result<bool, PolyError> {
        Ok(self.subtract(o)?.is_empty())
    }

    pub fn is_equal(&self, o: &Map) -> Result<bool, PolyError> {
        Ok(self.is_subset(o)? && o.is_subset(self)?)
    }

    /// Restricts the inputs to `s`.
    pub fn intersect_domain(&self, s: &Set) -> Result<Map, PolyError> {
        let mut out = Vec::new();
        for a in &self.pieces {
            for b in &s.pieces {
                a.src.check_compatible(&b.space)?;
                if !a.src.matches(&b.space) {
                    continue;
                }
                let lifted = lift_domain(&b.poly, a.src.dim(), a.dst.dim());
                let p = a.poly.intersect(&lifted);
                if !p.is_empty() {
                    out.push(BasicMap::from_poly(a.src.clone(), a.dst.clone(), p));
                }
            }
        }
        Ok(Map::from_disjoint(out))
    }

    /// Restricts the outputs to `s`.
    pub fn intersect_range(&self, s: &Set) -> Result<Map, PolyError> {
        Ok(self.inverse().intersect_domain(s)?.inverse())
    }

    /// `self ∘ f`: pairs `(x, z)` with `(x, y) ∈ f` and `(y, z) ∈ self`.
    pub fn compose(&self, f: &Map) -> Result<Map, PolyError> {
        let mut out = Vec::new();
        for a in &f.pieces {
            for b in &self.pieces {
                a.dst.check_compatible(&b.src)?;
                if !a.dst.matches(&b.src) {
                    continue;
                }
                if let Some(p) = compose_pieces(a, b)? {
                    out.push(p);
                }
            }
        }
        Map::from_pieces(out)
    }

    /// Lexicographically smallest image of every input. Outputs in
    /// different tuples are ordered by `order` (tuple names listed first
    /// are smaller), then by name.
    pub fn lexmin(&self, order: &[String]) -> Result<Map, PolyError> {
        self.lexopt(order, false)
    }

    pub fn lexmax(&self, order: &[String]) -> Result<Map, PolyError> {
        self.lexopt(order, true)
    }

    /// Lexicographic maximum over layers of candidates sharing one pair of
    /// spaces: every input takes its maximum from the first layer where it
    /// has an image. Exact when every image in an earlier layer is greater
    /// than every image of the same input in later layers.
    pub fn lexmax_layered(layers: Vec<Vec<BasicMap>>) -> Result<Map, PolyError> {
        let mut out = Vec::new();
        let mut served: Vec<Polyhedron> = Vec::new();
        for layer in layers {
            let Some(first) = layer.first() else { continue };
            let (src, dst) = (first.src.clone(), first.dst.clone());
            let (ni, no) = (src.dim(), dst.dim());
            let lifted: Vec<Polyhedron> = served.iter().map(|s| lift_domain(s, ni, no)).collect();
            let mut polys = Vec::new();
            for p in &layer {
                debug_assert!(p.src.matches(&src) && p.dst.matches(&dst));
                polys.extend(poly::subtract_all(&p.poly, &lifted).into_iter().filter(|q| !q.is_empty()));
            }
            for p in lexopt_single(polys, ni, no, true)? {
                let bm = BasicMap::from_poly(src.clone(), dst.clone(), p);
                served.push(bm.domain()?.poly);
                out.push(bm);
            }
        }
        Ok(Map { pieces: out })
    }

    fn lexopt(&self, order: &[String], max: bool) -> Result<Map, PolyError> {
        // Group by input key, then order output keys.
        let mut by_src: BTreeMap<TupleKey, Vec<&BasicMap>> = BTreeMap::new();
        for p in &self.pieces {
            by_src.entry(p.src.key()).or_default().push(p);
        }
        let rank = |k: &TupleKey| -> (usize, Option<String>, usize) {
            let pos = k.0.as_ref().and_then(|n| order.iter().position(|o| o == n)).unwrap_or(order.len());
            (pos, k.0.clone(), k.1)
        };
        let mut out = Vec::new();
        for (_, pieces) in by_src {
            let mut by_dst: BTreeMap<(usize, Option<String>, usize), Vec<&BasicMap>> = BTreeMap::new();
            for p in pieces {
                by_dst.entry(rank(&p.dst.key())).or_default().push(p);
            }
            let mut keys: Vec<_> = by_dst.keys().cloned().collect();
            if max {
                keys.reverse();
            }
            // Input points already served by a preferred output tuple.
            let mut served: Vec<Polyhedron> = Vec::new();
            for k in keys {
                let group = &by_dst[&k];
                let src = group[0].src.clone();
                let dst = group[0].dst.clone();
                let (ni, no) = (src.dim(), dst.dim());
                let mut polys = Vec::new();
                for p in group {
                    let lifted: Vec<Polyhedron> = served.iter().map(|s| lift_domain(s, ni, no)).collect();
                    polys.extend(poly::subtract_all(&p.poly, &lifted));
                }
                let opt = lexopt_single(polys, ni, no, max)?;
                for p in &opt {
                    let bm = BasicMap::from_poly(src.clone(), dst.clone(), p.clone());
                    served.push(bm.domain()?.poly);
                    out.push(bm);
                }
            }
        }
        Ok(Map { pieces: out })
    }

    /// Number of related outputs per input point, as pieces partitioning the
    /// domain.
    pub fn cardinality_per_domain_point(&self) -> Result<Vec<Piece>, PolyError> {
        self.cardinality_per_domain_point_with(CountBudget::default())
    }

    pub fn cardinality_per_domain_point_with(&self, budget: CountBudget) -> Result<Vec<Piece>, PolyError> {
        let mut by_src: BTreeMap<TupleKey, (Space, Vec<count::Term>)> = BTreeMap::new();
        for p in &self.pieces {
            let names = p.names();
            let one = QuasiPolynomial::from_int(p.poly.n_dim, 1);
            let terms = count::sum(&p.poly, p.src.dim(), &one, &names, budget)?;
            by_src.entry(p.src.key()).or_insert_with(|| (p.src.clone(), Vec::new())).1.extend(terms);
        }
        let mut out = Vec::new();
        for (_, (space, terms)) in by_src {
            out.extend(piece::accumulate(&space, terms));
        }
        Ok(out)
    }

    /// Number of related pairs.
    pub fn cardinality(&self) -> Result<num_bigint::BigInt, PolyError> {
        let mut total = num_bigint::BigInt::zero();
        for p in &self.pieces {
            total += p.wrap().cardinality()?;
        }
        Ok(total)
    }

    /// All pairs, ordered by input tuple, input point, output tuple, output point.
    #[allow(clippy::type_complexity)]
    pub fn enumerate(&self) -> Result<Vec<(NamedPoint, NamedPoint)>, PolyError> {
        let mut out = Vec::new();
        for p in &self.pieces {
            let ni = p.src.dim();
            for pt in p.wrap().points()? {
                out.push(((p.src.name.clone(), pt[..ni].to_vec()), (p.dst.name.clone(), pt[ni..].to_vec())));
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn coalesce(&self) -> Map {
        let mut out = Vec::new();
        for (_, (src, dst, polys)) in group(self.pieces.iter()) {
            for p in poly::coalesce(polys) {
                out.push(BasicMap::from_poly(src.clone(), dst.clone(), p));
            }
        }
        Map { pieces: out }
    }

    /// Evaluates a single-valued map at a point.
    pub fn apply(&self, src: Option<&str>, x: &[i64]) -> Result<Vec<NamedPoint>, PolyError> {
        let mut out = Vec::new();
        for p in &self.pieces {
            if p.src.name.as_deref() != src || p.src.dim() != x.len() {
                continue;
            }
            let ni = x.len();
            let no = p.dst.dim();
            let n = ni + no;
            let subs: Vec<AffineExpr> = (0..n)
                .map(|i| if i < ni { AffineExpr::constant(no, x[i]) } else { AffineExpr::var(no, i - ni) })
                .collect();
            let q = p.poly.substituted(&subs, no, 0);
            for pt in super::scan::points(&q, &p.dst.dims)? {
                out.push((p.dst.name.clone(), pt));
            }
        }
        out.sort();
        Ok(out)
    }
}

fn compose_pieces(f: &BasicMap, g: &BasicMap) -> Result<Option<BasicMap>, PolyError> {
    let (nx, ny, nz) = (f.src.dim(), f.dst.dim(), g.dst.dim());
    let n = nx + nz + ny;
    // f over (x, y): x -> x, y -> existentials
    let fs = AffineExpr::embedding(nx + ny, n, |i| Some(if i < nx { i } else { nx + nz + (i - nx) }));
    // g over (y, z): y -> existentials, z -> after x
    let gs = AffineExpr::embedding(ny + nz, n, |i| Some(if i < ny { nx + nz + i } else { nx + (i - ny) }));
    let mut cons: Vec<Constraint> = f.poly.constraints().iter().map(|c| c.substitute(&fs, n)).collect();
    cons.extend(g.poly.constraints().iter().map(|c| c.substitute(&gs, n)));
    if f.poly.is_marked_empty() || g.poly.is_marked_empty() {
        return Ok(None);
    }
    let mut p = Polyhedron { n_dim: nx + nz, n_ex: ny, cons, empty: false };
    p.simplify();
    p.eliminate_existentials()?;
    if p.is_empty() {
        return Ok(None);
    }
    p.remove_redundant();
    Ok(Some(BasicMap::from_poly(f.src.clone(), g.dst.clone(), p)))
}

/// Per-dimension lexicographic optimisation within one (input, output) tuple
/// pair. `polys` are disjoint relations over `(x, y)`.
fn lexopt_single(mut polys: Vec<Polyhedron>, ni: usize, no: usize, max: bool) -> Result<Vec<Polyhedron>, PolyError> {
    let n = ni + no;
    for k in 0..no {
        let col = ni + k;
        if same_fixed_output(&polys, ni, col) {
            continue;
        }
        // Projection of every piece onto (x, y_k).
        let mut proj: Vec<Polyhedron> = Vec::with_capacity(polys.len());
        for p in &polys {
            let drop: Vec<bool> = (0..n).map(|i| i >= ni && i != col).collect();
            let mut q = p.dims_to_existentials(&drop);
            q.eliminate_existentials()?;
            proj.push(q);
        }
        let mut next = Vec::new();
        for b in &polys {
            // Pairs of b dominated by some point of a with a better y_k.
            let mut dominated = Vec::new();
            for a in &proj {
                // vars: (x, y) then u
                let m = n + 1;
                let asubs = AffineExpr::embedding(ni + 1, m, |i| Some(if i < ni { i } else { n }));
                let bsubs = AffineExpr::embedding(n, m, Some);
                let mut cons: Vec<Constraint> = a.constraints().iter().map(|c| c.substitute(&asubs, m)).collect();
                cons.extend(b.constraints().iter().map(|c| c.substitute(&bsubs, m)));
                let u = AffineExpr::var(m, n);
                let y = AffineExpr::var(m, col);
                cons.push(Constraint::ge(if max { u.sub(&y) } else { y.sub(&u) }.add_constant(-1)));
                let mut d = Polyhedron { n_dim: n, n_ex: 1, cons, empty: false };
                d.simplify();
                if d.is_rationally_empty() {
                    continue;
                }
                d.eliminate_existentials()?;
                if !d.is_empty() {
                    dominated.push(d);
                }
            }
            if dominated.is_empty() {
                next.push(b.clone());
            } else {
                next.extend(poly::subtract_all(b, &dominated));
            }
        }
        polys = poly::coalesce(next);
    }
    Ok(polys)
}

/// Whether every piece fixes output `col` to one common affine function of
/// the inputs, so no piece can beat another on it.
fn same_fixed_output(polys: &[Polyhedron], ni: usize, col: usize) -> bool {
    let n = polys.first().map_or(0, |p| p.n_dim + p.n_ex);
    let mut common: Option<AffineExpr> = None;
    for p in polys {
        let fixed = p.constraints().iter().find_map(|c| {
            let a = c.expr.coeff(col);
            let inputs_only = (ni..n).all(|v| v == col || c.expr.coeff(v) == 0)
                && !c.expr.var_in_divs(col)
                && c.expr.div_terms().iter().all(|(d, _)| (ni..n).all(|v| !d.inner().uses_var(v)));
            (c.is_eq() && a.abs() == 1 && inputs_only).then(|| c.expr.scale(a))
        });
        match (fixed, &common) {
            (None, _) => return false,
            (Some(f), None) => common = Some(f),
            (Some(f), Some(g)) if f == *g => {}
            _ => return false,
        }
    }
    true
}

/// Sum of a cardinality result at a point (for tests and oracles).
pub fn eval_pieces(pieces: &[Piece], name: Option<&str>, point: &[i64]) -> Option<BigRational> {
    let mut hit = None;
    for p in pieces {
        if p.domain.contains(name, point) {
            let v = p.poly.eval(point);
            hit = Some(hit.map_or(v.clone(), |h: BigRational| h + v));
        }
    }
    hit
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(name: &str, dims: &[&str]) -> Space {
        Space::new(Some(name), dims)
    }

    #[test]
    fn lexmin_of_interval_image() {
        // { [x] -> [y] : x = 0, 0 <= y < 3 } -> { 0 -> 0 }
        let n = 2;
        let x = AffineExpr::var(n, 0);
        let y = AffineExpr::var(n, 1);
        let m = Map::from_basic(BasicMap::new(
            Space::anonymous_n("x", 1),
            Space::anonymous_n("y", 1),
            vec![Constraint::eq(x.clone()), Constraint::ge(y.clone()), Constraint::ge(y.neg().add_constant(2))],
        ));
        let l = m.lexmin(&[]).unwrap();
        let pairs = l.enumerate().unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].1 .1, vec![0]);
        let h = m.lexmax(&[]).unwrap();
        assert_eq!(h.enumerate().unwrap()[0].1 .1, vec![2]);
    }

    #[test]
    fn compose_and_inverse() {
        // f: S[i] -> M[i], g: M[m] -> T[3 - m], 0 <= i < 4
        let n = 2;
        let i = AffineExpr::var(n, 0);
        let o = AffineExpr::var(n, 1);
        let f = Map::from_basic(BasicMap::new(
            sp("S", &["i"]),
            sp("M", &["m"]),
            vec![Constraint::eq(o.sub(&i)), Constraint::ge(i.clone()), Constraint::ge(i.neg().add_constant(3))],
        ));
        let g = Map::from_basic(BasicMap::new(
            sp("M", &["m"]),
            sp("T", &["t"]),
            vec![Constraint::eq(o.add(&i).add_constant(-3))],
        ));
        let h = g.compose(&f).unwrap();
        let pairs = h.enumerate().unwrap();
        assert_eq!(pairs.len(), 4);
        for ((_, x), (_, z)) in pairs {
            assert_eq!(z[0], 3 - x[0]);
        }
        let back = h.inverse().compose(&h).unwrap();
        assert_eq!(back.enumerate().unwrap().len(), 4);
    }

    #[test]
    fn per_point_cardinality() {
        // { i -> j : 0 <= j <= i, 0 <= i < 5 } : i + 1
        let n = 2;
        let i = AffineExpr::var(n, 0);
        let j = AffineExpr::var(n, 1);
        let m = Map::from_basic(BasicMap::new(
            sp("S", &["i"]),
            sp("T", &["j"]),
            vec![
                Constraint::ge(i.clone()),
                Constraint::ge(i.neg().add_constant(4)),
                Constraint::ge(j.clone()),
                Constraint::ge(i.sub(&j)),
            ],
        ));
        let pieces = m.cardinality_per_domain_point().unwrap();
        for x in 0..5 {
            let v = eval_pieces(&pieces, Some("S"), &[x]).unwrap();
            assert_eq!(v, BigRational::from_integer((x + 1).into()));
        }
        assert!(eval_pieces(&pieces, Some("S"), &[5]).is_none());
    }
}
