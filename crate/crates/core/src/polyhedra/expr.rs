//! Quasi-affine expressions: integer combinations of variables and of
//! floor-division terms `floor(e / d)` with constant positive divisors.
//!
//! Expressions are kept in a canonical form so that two structurally equal
//! floor terms are recognised as the same atom:
//!
//! * the inner expression of every floor term has non-constant coefficients in
//!   `(-d/2, d/2]`, a constant in `[0, d)`, a positive leading coefficient and
//!   no common factor with the divisor;
//! * floor terms are sorted and merged, zero coefficients are dropped.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use super::int::{self, gcd, symmetric_divmod};

/// The atom `floor(inner / divisor)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Div {
    pub(crate) inner: AffineExpr,
    pub(crate) divisor: i64,
}

impl Div {
    pub fn inner(&self) -> &AffineExpr {
        &self.inner
    }

    pub fn divisor(&self) -> i64 {
        self.divisor
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineExpr {
    pub(crate) coeffs: Vec<i64>,
    pub(crate) divs: Vec<(Arc<Div>, i64)>,
    pub(crate) constant: i64,
}

impl AffineExpr {
    pub fn zero(n: usize) -> Self {
        AffineExpr { coeffs: vec![0; n], divs: Vec::new(), constant: 0 }
    }

    pub fn constant(n: usize, c: i64) -> Self {
        AffineExpr { coeffs: vec![0; n], divs: Vec::new(), constant: c }
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = Self::zero(n);
        e.coeffs[i] = 1;
        e
    }

    pub fn from_parts(coeffs: Vec<i64>, constant: i64) -> Self {
        AffineExpr { coeffs, divs: Vec::new(), constant }
    }

    pub fn n_vars(&self) -> usize {
        self.coeffs.len()
    }

    pub fn constant_term(&self) -> i64 {
        self.constant
    }

    pub fn coeff(&self, i: usize) -> i64 {
        self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn div_terms(&self) -> &[(Arc<Div>, i64)] {
        &self.divs
    }

    pub fn is_constant(&self) -> bool {
        self.divs.is_empty() && self.coeffs.iter().all(|&c| c == 0)
    }

    /// True when the expression has no floor terms.
    pub fn is_linear(&self) -> bool {
        self.divs.is_empty()
    }

    /// Gcd of all non-constant coefficients (0 if there are none).
    pub(crate) fn content(&self) -> i64 {
        let mut g = 0;
        for &c in &self.coeffs {
            g = gcd(g, c);
        }
        for (_, c) in &self.divs {
            g = gcd(g, *c);
        }
        g
    }

    pub(crate) fn first_nonconst_sign(&self) -> i64 {
        for &c in &self.coeffs {
            if c != 0 {
                return c.signum();
            }
        }
        for (_, c) in &self.divs {
            if *c != 0 {
                return c.signum();
            }
        }
        0
    }

    pub fn add(&self, o: &AffineExpr) -> AffineExpr {
        debug_assert_eq!(self.coeffs.len(), o.coeffs.len());
        let coeffs = self
            .coeffs
            .iter()
            .zip(&o.coeffs)
            .map(|(&a, &b)| int::add(a, b))
            .collect();
        let divs = merge_divs(&self.divs, &o.divs, 1);
        AffineExpr { coeffs, divs, constant: int::add(self.constant, o.constant) }
    }

    pub fn sub(&self, o: &AffineExpr) -> AffineExpr {
        self.add(&o.scale(-1))
    }

    pub fn neg(&self) -> AffineExpr {
        self.scale(-1)
    }

    pub fn scale(&self, k: i64) -> AffineExpr {
        if k == 0 {
            return AffineExpr::zero(self.n_vars());
        }
        AffineExpr {
            coeffs: self.coeffs.iter().map(|&c| int::mul(c, k)).collect(),
            divs: self.divs.iter().map(|(d, c)| (d.clone(), int::mul(*c, k))).collect(),
            constant: int::mul(self.constant, k),
        }
    }

    pub fn add_constant(&self, c: i64) -> AffineExpr {
        let mut e = self.clone();
        e.constant = int::add(e.constant, c);
        e
    }

    /// Expression with the constant term removed.
    pub fn linear_part(&self) -> AffineExpr {
        let mut e = self.clone();
        e.constant = 0;
        e
    }

    pub(crate) fn add_div_term(&mut self, atom: Arc<Div>, c: i64) {
        if c == 0 {
            return;
        }
        match self.divs.binary_search_by(|(a, _)| a.as_ref().cmp(atom.as_ref())) {
            Ok(pos) => {
                let v = int::add(self.divs[pos].1, c);
                if v == 0 {
                    self.divs.remove(pos);
                } else {
                    self.divs[pos].1 = v;
                }
            }
            Err(pos) => self.divs.insert(pos, (atom, c)),
        }
    }

    /// Divides all coefficients exactly by `g`.
    pub(crate) fn exact_div(&self, g: i64) -> AffineExpr {
        AffineExpr {
            coeffs: self.coeffs.iter().map(|c| c / g).collect(),
            divs: self.divs.iter().map(|(d, c)| (d.clone(), c / g)).collect(),
            constant: self.constant / g,
        }
    }

    /// Canonical form of `floor(self / d)`.
    pub fn floor_div(&self, d: i64) -> AffineExpr {
        assert!(d > 0, "floor division by non-positive divisor {d}");
        if d == 1 {
            return self.clone();
        }
        let n = self.n_vars();
        let mut q = AffineExpr::zero(n);
        let mut r = AffineExpr::zero(n);
        for (i, &a) in self.coeffs.iter().enumerate() {
            let (qa, ra) = symmetric_divmod(a, d);
            q.coeffs[i] = qa;
            r.coeffs[i] = ra;
        }
        for (atom, a) in &self.divs {
            let (qa, ra) = symmetric_divmod(*a, d);
            if qa != 0 {
                q.divs.push((atom.clone(), qa));
            }
            if ra != 0 {
                r.divs.push((atom.clone(), ra));
            }
        }
        q.constant = self.constant.div_euclid(d);
        r.constant = self.constant.rem_euclid(d);
        if r.coeffs.iter().all(|&c| c == 0) && r.divs.is_empty() {
            return q;
        }
        if r.first_nonconst_sign() < 0 {
            // floor(r/d) = -floor((-r + d - 1)/d)
            let flipped = r.neg().add_constant(d - 1);
            return q.sub(&flipped.floor_div(d));
        }
        let g = gcd(r.content(), d);
        if g > 1 {
            let mut reduced = r.clone();
            reduced.constant = 0;
            let reduced = reduced.exact_div(g).add_constant(r.constant.div_euclid(g));
            return q.add(&reduced.floor_div(d / g));
        }
        // floor((floor(e/d2) + c)/d) = floor((e + c*d2)/(d*d2))
        if r.coeffs.iter().all(|&c| c == 0) && r.divs.len() == 1 && r.divs[0].1 == 1 {
            let atom = &r.divs[0].0;
            let inner = atom.inner.add_constant(int::mul(r.constant, atom.divisor));
            return q.add(&inner.floor_div(int::mul(d, atom.divisor)));
        }
        let mut out = q;
        out.add_div_term(Arc::new(Div { inner: r, divisor: d }), 1);
        out
    }

    /// `self mod d` as `self - d * floor(self / d)`.
    pub fn modulo(&self, d: i64) -> AffineExpr {
        self.sub(&self.floor_div(d).scale(d))
    }

    pub fn eval(&self, point: &[i64]) -> i64 {
        let mut v = self.constant;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c != 0 {
                v = int::add(v, int::mul(c, point[i]));
            }
        }
        for (atom, c) in &self.divs {
            let inner = atom.inner.eval(point);
            v = int::add(v, int::mul(*c, inner.div_euclid(atom.divisor)));
        }
        v
    }

    /// Direct (non-floor) coefficient of variable `i` is nonzero.
    pub fn uses_var_directly(&self, i: usize) -> bool {
        self.coeffs[i] != 0
    }

    /// Variable `i` appears anywhere, including inside floor terms.
    pub fn uses_var(&self, i: usize) -> bool {
        self.coeffs[i] != 0 || self.divs.iter().any(|(d, _)| d.inner.uses_var(i))
    }

    /// Variable `i` appears inside some floor term.
    pub fn var_in_divs(&self, i: usize) -> bool {
        self.divs.iter().any(|(d, _)| d.inner.uses_var(i))
    }

    /// Highest variable index used anywhere, if any.
    pub fn max_var(&self) -> Option<usize> {
        let mut m = self.coeffs.iter().rposition(|&c| c != 0);
        for (d, _) in &self.divs {
            if let Some(v) = d.inner.max_var() {
                m = Some(m.map_or(v, |x: usize| x.max(v)));
            }
        }
        m
    }

    /// All floor atoms, innermost first, without duplicates.
    pub fn collect_atoms(&self, out: &mut Vec<Arc<Div>>) {
        for (d, _) in &self.divs {
            d.inner.collect_atoms(out);
            if !out.iter().any(|x| x == d) {
                out.push(d.clone());
            }
        }
    }

    /// Substitutes every variable `i` by `subs[i]` (expressions over `new_n`
    /// variables) and renormalises all floor terms.
    pub fn substitute(&self, subs: &[AffineExpr], new_n: usize) -> AffineExpr {
        self.rewrite(subs, new_n, &mut |_| None)
    }

    /// Like [`substitute`](Self::substitute) but lets `hook` replace whole
    /// floor atoms (given in the original variable space) before recursing.
    pub(crate) fn rewrite(
        &self,
        subs: &[AffineExpr],
        new_n: usize,
        hook: &mut dyn FnMut(&Arc<Div>) -> Option<AffineExpr>,
    ) -> AffineExpr {
        debug_assert_eq!(subs.len(), self.coeffs.len());
        let mut out = AffineExpr::constant(new_n, self.constant);
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c != 0 {
                out.add_scaled(&subs[i], c);
            }
        }
        for (atom, c) in &self.divs {
            let replaced = match hook(atom) {
                Some(e) => e,
                None => atom.inner.rewrite(subs, new_n, hook).floor_div(atom.divisor),
            };
            out.add_scaled(&replaced, *c);
        }
        out
    }

    /// `self += k * o` in place.
    pub(crate) fn add_scaled(&mut self, o: &AffineExpr, k: i64) {
        debug_assert_eq!(self.coeffs.len(), o.coeffs.len());
        for (a, &b) in self.coeffs.iter_mut().zip(&o.coeffs) {
            if b != 0 {
                *a = int::add(*a, int::mul(b, k));
            }
        }
        self.constant = int::add(self.constant, int::mul(o.constant, k));
        for (d, c) in &o.divs {
            self.add_div_term(d.clone(), int::mul(*c, k));
        }
    }

    /// Identity substitution vector embedding `n` variables into `new_n`
    /// variables through `map` (None maps to zero).
    pub(crate) fn embedding(
        n: usize,
        new_n: usize,
        map: impl Fn(usize) -> Option<usize>,
    ) -> Vec<AffineExpr> {
        (0..n)
            .map(|i| match map(i) {
                Some(j) => AffineExpr::var(new_n, j),
                None => AffineExpr::zero(new_n),
            })
            .collect()
    }

    /// Renders the expression using the given variable names.
    pub fn fmt_with(&self, names: &[String]) -> String {
        let mut terms: Vec<(i64, String)> = Vec::new();
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c != 0 {
                terms.push((c, names[i].clone()));
            }
        }
        for (atom, c) in &self.divs {
            terms.push((
                *c,
                format!("floor(({})/{})", atom.inner.fmt_with(names), atom.divisor),
            ));
        }
        render_terms(&terms, self.constant)
    }
}

pub(crate) fn render_terms(terms: &[(i64, String)], constant: i64) -> String {
    let mut s = String::new();
    for (k, (c, name)) in terms.iter().enumerate() {
        let c = *c;
        if k == 0 {
            match c {
                1 => {}
                -1 => s.push('-'),
                _ => {
                    let _ = write!(s, "{c}*");
                }
            }
        } else if c < 0 {
            s.push_str(" - ");
            if c != -1 {
                let _ = write!(s, "{}*", -c);
            }
        } else {
            s.push_str(" + ");
            if c != 1 {
                let _ = write!(s, "{c}*");
            }
        }
        s.push_str(name);
    }
    if terms.is_empty() {
        let _ = write!(s, "{constant}");
    } else if constant > 0 {
        let _ = write!(s, " + {constant}");
    } else if constant < 0 {
        let _ = write!(s, " - {}", -constant);
    }
    s
}

fn merge_divs(a: &[(Arc<Div>, i64)], b: &[(Arc<Div>, i64)], kb: i64) -> Vec<(Arc<Div>, i64)> {
    if b.is_empty() {
        return a.to_vec();
    }
    let mut m: BTreeMap<Arc<Div>, i64> = BTreeMap::new();
    for (d, c) in a {
        *m.entry(d.clone()).or_insert(0) += *c;
    }
    for (d, c) in b {
        let e = m.entry(d.clone()).or_insert(0);
        *e = int::add(*e, int::mul(*c, kb));
    }
    m.into_iter().filter(|(_, c)| *c != 0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> AffineExpr {
        AffineExpr::var(n, i)
    }

    #[test]
    fn floor_div_matches_integer_floor() {
        let n = 2;
        let exprs = vec![
            x(n, 0),
            x(n, 0).scale(-1).add_constant(7),
            x(n, 0).add(&x(n, 1).scale(-3)).add_constant(-2),
            x(n, 0).scale(6).add_constant(3),
            x(n, 0).floor_div(3).add(&x(n, 1)),
        ];
        for e in &exprs {
            for d in 1..7 {
                let f = e.floor_div(d);
                for a in -12..12 {
                    for b in -5..5 {
                        let p = [a, b];
                        assert_eq!(f.eval(&p), e.eval(&p).div_euclid(d), "{e:?} / {d} at {p:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn ceil_and_floor_of_shifted_share_family() {
        // ceil((j - 6)/8) == floor((j + 1)/8): the canonical atom keeps the
        // inner linear part `j` so equal families are recognised.
        let n = 1;
        let j = x(n, 0);
        let ceil = j.add_constant(-6).add_constant(7).floor_div(8);
        let lower = j.floor_div(8);
        assert_eq!(ceil.divs.len(), 1);
        assert_eq!(lower.divs.len(), 1);
        assert_eq!(ceil.divs[0].0.inner.linear_part(), lower.divs[0].0.inner.linear_part());
        assert_eq!(ceil.divs[0].0.inner.constant, 1);
    }

    #[test]
    fn negated_floor_is_canonical() {
        let n = 1;
        let a = x(n, 0).add_constant(7).floor_div(8);
        let b = x(n, 0).neg().floor_div(8).neg();
        assert_eq!(a, b);
    }

    #[test]
    fn nested_floors_collapse() {
        let n = 1;
        let a = x(n, 0).floor_div(2).floor_div(4);
        assert_eq!(a, x(n, 0).floor_div(8));
    }

    #[test]
    fn substitution_renormalises() {
        // floor(i/8) with i := 8w + 3  ->  w
        let e = x(1, 0).floor_div(8);
        let sub = vec![x(1, 0).scale(8).add_constant(3)];
        assert_eq!(e.substitute(&sub, 1), x(1, 0));
    }
}
