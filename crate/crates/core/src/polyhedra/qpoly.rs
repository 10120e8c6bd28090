//! Quasi-polynomials: polynomials with rational coefficients over variables
//! and floor atoms `floor(e / d)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::expr::{AffineExpr, Div};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Var(usize),
    Floor(Arc<Div>),
}

/// Sorted list of `(atom, exponent)` with positive exponents.
pub type Monomial = Vec<(Atom, u32)>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuasiPolynomial {
    n: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut m: BTreeMap<Atom, u32> = BTreeMap::new();
    for (x, e) in a.iter().chain(b.iter()) {
        *m.entry(x.clone()).or_insert(0) += e;
    }
    m.into_iter().collect()
}

pub(crate) fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl QuasiPolynomial {
    pub fn zero(n: usize) -> Self {
        QuasiPolynomial { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: BigRational) -> Self {
        let mut p = Self::zero(n);
        if !c.is_zero() {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    pub fn from_int(n: usize, c: i64) -> Self {
        Self::constant(n, rat(c))
    }

    pub fn var(n: usize, i: usize) -> Self {
        Self::atom(n, Atom::Var(i))
    }

    pub fn atom(n: usize, a: Atom) -> Self {
        let mut p = Self::zero(n);
        p.terms.insert(vec![(a, 1)], BigRational::one());
        p
    }

    /// Embeds a quasi-affine expression.
    pub fn from_affine(e: &AffineExpr) -> Self {
        let n = e.n_vars();
        let mut p = Self::from_int(n, e.constant);
        for (i, &c) in e.coeffs.iter().enumerate() {
            if c != 0 {
                p.terms.insert(vec![(Atom::Var(i), 1)], rat(c));
            }
        }
        for (d, c) in &e.divs {
            p.terms.insert(vec![(Atom::Floor(d.clone()), 1)], rat(*c));
        }
        p
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, BigRational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.insert(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-BigRational::one())
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        if k.is_zero() {
            return Self::zero(self.n);
        }
        QuasiPolynomial { n: self.n, terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero(self.n);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                r.insert(mono_mul(ma, mb), ca * cb);
            }
        }
        r
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut r = Self::from_int(self.n, 1);
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    /// Degree with every floor atom counting as one.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().map(|(_, e)| e).sum()).max().unwrap_or(0)
    }

    pub fn is_affine(&self) -> bool {
        self.degree() <= 1
    }

    pub fn constant_value(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn eval(&self, point: &[i64]) -> BigRational {
        assert_eq!(point.len(), self.n, "point arity");
        let mut s = BigRational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (a, e) in m {
                let x = match a {
                    Atom::Var(i) => point[*i],
                    Atom::Floor(d) => d.inner.eval(point).div_euclid(d.divisor),
                };
                v *= rat(x).pow(*e as i32);
            }
            s += v;
        }
        s
    }

    /// Evaluates and requires an integer result.
    pub fn eval_int(&self, point: &[i64]) -> BigInt {
        let v = self.eval(point);
        assert!(v.is_integer(), "non-integer value {v} of a counting polynomial");
        v.to_integer()
    }

    pub fn eval_i64(&self, point: &[i64]) -> i64 {
        self.eval_int(point).to_i64().expect("value fits in i64")
    }

    pub fn uses_var(&self, v: usize) -> bool {
        self.terms.keys().any(|m| {
            m.iter().any(|(a, _)| match a {
                Atom::Var(i) => *i == v,
                Atom::Floor(d) => d.inner.uses_var(v),
            })
        })
    }

    pub fn var_in_floors(&self, v: usize) -> bool {
        self.terms
            .keys()
            .any(|m| m.iter().any(|(a, _)| matches!(a, Atom::Floor(d) if d.inner.uses_var(v))))
    }

    pub fn floor_atoms(&self) -> Vec<Arc<Div>> {
        let mut out: Vec<Arc<Div>> = Vec::new();
        for m in self.terms.keys() {
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

    /// Replaces every atom by a quasi-polynomial given by `f`.
    pub fn map_atoms(&self, new_n: usize, f: &mut dyn FnMut(&Atom) -> QuasiPolynomial) -> Self {
        let mut cache: BTreeMap<Atom, QuasiPolynomial> = BTreeMap::new();
        let mut r = Self::zero(new_n);
        for (m, c) in &self.terms {
            let mut t = Self::constant(new_n, c.clone());
            for (a, e) in m {
                if !cache.contains_key(a) {
                    cache.insert(a.clone(), f(a));
                }
                t = t.mul(&cache[a].pow(*e));
            }
            r = r.add(&t);
        }
        r
    }

    /// Substitutes each variable `i` by `subs[i]`, renormalising floor atoms.
    pub fn substitute(&self, subs: &[AffineExpr], new_n: usize) -> Self {
        assert_eq!(subs.len(), self.n);
        self.map_atoms(new_n, &mut |a| match a {
            Atom::Var(i) => Self::from_affine(&subs[*i]),
            Atom::Floor(d) => Self::from_affine(&d.inner.substitute(subs, new_n).floor_div(d.divisor)),
        })
    }

    /// Coefficients of the powers of variable `v` (which must not occur in
    /// floor atoms): `self = sum_k out[k] * v^k`.
    pub fn coefficients_in(&self, v: usize) -> Vec<QuasiPolynomial> {
        debug_assert!(!self.var_in_floors(v));
        let mut out: Vec<QuasiPolynomial> = Vec::new();
        for (m, c) in &self.terms {
            let mut k = 0u32;
            let mut rest = Vec::new();
            for (a, e) in m {
                if *a == Atom::Var(v) {
                    k = *e;
                } else {
                    rest.push((a.clone(), *e));
                }
            }
            while out.len() <= k as usize {
                out.push(Self::zero(self.n));
            }
            out[k as usize].insert(rest, c.clone());
        }
        out
    }

    /// For a polynomial of degree at most one, returns `(expr, den)` with
    /// `self = expr / den` and `expr` integral.
    pub fn to_affine(&self) -> Option<(AffineExpr, i64)> {
        if !self.is_affine() {
            return None;
        }
        let mut den = BigInt::one();
        for c in self.terms.values() {
            den = num_integer::Integer::lcm(&den, c.denom());
        }
        let den_i = den.to_i64()?;
        let mut e = AffineExpr::zero(self.n);
        for (m, c) in &self.terms {
            let k = (c * BigRational::from_integer(den.clone())).to_integer().to_i64()?;
            match m.first() {
                None => e.constant = k,
                Some((Atom::Var(i), _)) => e.coeffs[*i] = k,
                Some((Atom::Floor(d), _)) => e.add_div_term(d.clone(), k),
            }
        }
        Some((e, den_i))
    }

    pub fn fmt_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        // Highest degree first, constant last.
        let mut terms: Vec<(&Monomial, &BigRational)> = self.terms.iter().collect();
        terms.sort_by_key(|(m, _)| std::cmp::Reverse(m.iter().map(|(_, e)| *e).sum::<u32>()));
        for (k, (m, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mut factors: Vec<String> = Vec::new();
            for (atom, e) in m {
                let base = match atom {
                    Atom::Var(i) => names[*i].clone(),
                    Atom::Floor(d) => format!("floor(({})/{})", d.inner.fmt_with(names), d.divisor),
                };
                factors.push(if *e == 1 { base } else { format!("{base}^{e}") });
            }
            let coeff = if a.is_integer() { a.to_integer().to_string() } else { format!("({a})") };
            if factors.is_empty() {
                s.push_str(&coeff);
            } else {
                if !a.is_one() {
                    s.push_str(&coeff);
                    s.push('*');
                }
                s.push_str(&factors.join("*"));
            }
        }
        s
    }
}

impl fmt::Display for QuasiPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.n).map(|i| format!("x{i}")).collect();
        f.write_str(&self.fmt_with(&names))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_degree_affinity() {
        // i + j^2
        let p = QuasiPolynomial::var(2, 0).add(&QuasiPolynomial::var(2, 1).pow(2));
        assert_eq!(p.eval_i64(&[1, 2]), 5);
        assert_eq!(p.degree(), 2);
        assert!(!p.is_affine());
        let q = QuasiPolynomial::var(1, 0).add(&QuasiPolynomial::from_int(1, 1));
        assert!(q.is_affine());
    }

    #[test]
    fn floor_atom_times_var_is_not_affine() {
        let n = 2;
        let f = QuasiPolynomial::from_affine(&AffineExpr::var(n, 0).floor_div(3));
        let p = f.mul(&QuasiPolynomial::var(n, 1));
        assert_eq!(p.degree(), 2);
        assert_eq!(p.eval_i64(&[7, 5]), 10);
    }

    #[test]
    fn substitution_and_coefficients() {
        // (x0 + 1)^2 with x0 := 2*x1 - 1  ->  4*x1^2
        let n = 2;
        let p = QuasiPolynomial::var(n, 0).add(&QuasiPolynomial::from_int(n, 1)).pow(2);
        let subs = vec![AffineExpr::var(n, 1).scale(2).add_constant(-1), AffineExpr::var(n, 1)];
        let q = p.substitute(&subs, n);
        let c = q.coefficients_in(1);
        assert_eq!(c.len(), 3);
        assert_eq!(c[2].constant_value().unwrap(), rat(4));
        assert!(c[1].is_zero() && c[0].is_zero());
    }

    #[test]
    fn to_affine_clears_denominators() {
        let p = QuasiPolynomial::var(1, 0).scale(&BigRational::new(1.into(), 2.into()));
        let (e, d) = p.to_affine().unwrap();
        assert_eq!(d, 2);
        assert_eq!(e.coeffs, vec![1]);
    }
}
