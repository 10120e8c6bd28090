//! Piecewise quasi-polynomials.

use super::constraint::Constraint;
use super::count::Term;
use super::poly::{self, Polyhedron};
use super::qpoly::QuasiPolynomial;
use super::set::{BasicSet, Set};
use super::space::Space;

/// A quasi-polynomial together with the subdomain where it is valid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub domain: Set,
    pub poly: QuasiPolynomial,
}

impl Piece {
    pub fn new(domain: Set, poly: QuasiPolynomial) -> Self {
        Piece { domain, poly }
    }

    pub fn space(&self) -> Option<&Space> {
        self.domain.pieces.first().map(|b| &b.space)
    }

    pub fn fmt_with_space(&self) -> String {
        let mut parts = Vec::new();
        for b in &self.domain.pieces {
            parts.push(super::text::format_piece(&b.space, b.poly.constraints(), &self.poly));
        }
        format!("{{ {} }}", parts.join("; "))
    }
}

/// Turns overlapping additive terms into disjoint pieces (values summed on
/// overlaps), then merges pieces with identical polynomials.
pub(crate) fn accumulate(space: &Space, terms: Vec<Term>) -> Vec<Piece> {
    let mut acc: Vec<(Polyhedron, QuasiPolynomial)> = Vec::new();
    for t in terms {
        let mut rest = vec![t.domain.clone()];
        let mut next = Vec::with_capacity(acc.len() + 1);
        for (d, v) in acc {
            let both = d.intersect(&t.domain);
            if both.is_empty() {
                next.push((d, v));
                continue;
            }
            for part in poly::subtract_all(&d, std::slice::from_ref(&t.domain)) {
                next.push((part, v.clone()));
            }
            let mut both = both;
            both.remove_redundant();
            next.push((both, v.add(&t.value)));
            rest = rest.into_iter().flat_map(|r| poly::subtract_all(&r, std::slice::from_ref(&d))).collect();
        }
        for r in rest {
            next.push((r, t.value.clone()));
        }
        acc = next;
    }
    group_by_value(space, acc)
}

/// Collects disjoint `(domain, value)` pairs into pieces, one per distinct
/// value, coalescing domains.
pub(crate) fn group_by_value(space: &Space, list: Vec<(Polyhedron, QuasiPolynomial)>) -> Vec<Piece> {
    let mut groups: Vec<(QuasiPolynomial, Vec<Polyhedron>)> = Vec::new();
    for (d, v) in list {
        if d.is_marked_empty() {
            continue;
        }
        match groups.iter_mut().find(|(g, _)| *g == v) {
            Some((_, ds)) => ds.push(d),
            None => groups.push((v, vec![d])),
        }
    }
    // Fold a group into another whose value already agrees on its domain.
    let mut merged: Vec<(QuasiPolynomial, Vec<Polyhedron>)> = Vec::new();
    for (v, ds) in groups {
        if let Some((_, ks)) = merged.iter_mut().find(|(k, _)| agrees_on(k, &v, &ds)) {
            ks.extend(ds);
            continue;
        }
        if let Some(slot) = merged.iter_mut().find(|(k, ks)| agrees_on(&v, k, ks)) {
            slot.0 = v;
            slot.1.extend(ds);
            continue;
        }
        merged.push((v, ds));
    }
    merged
        .into_iter()
        .map(|(v, ds)| {
            let pieces = poly::coalesce_thorough(ds).into_iter().map(|d| BasicSet::from_poly(space.clone(), d)).collect();
            Piece { domain: Set::from_disjoint(pieces), poly: v }
        })
        .collect()
}

/// Whether `value` equals `other` at every integer point of `domains`.
fn agrees_on(value: &QuasiPolynomial, other: &QuasiPolynomial, domains: &[Polyhedron]) -> bool {
    let Some((diff, _)) = value.sub(other).to_affine() else { return false };
    domains.iter().all(|d| {
        [diff.add_constant(-1), diff.neg().add_constant(-1)].into_iter().all(|e| {
            let mut q = d.clone();
            q.add(Constraint::ge(e));
            q.simplify();
            q.is_empty()
        })
    })
}
