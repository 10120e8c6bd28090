//! Symbolic summation of quasi-polynomials over the integer points of a
//! polyhedron, parametric in a prefix of its dimensions.
//!
//! The innermost counted dimension is removed at each step:
//!
//! * if it occurs inside a floor term, it is split into residue classes
//!   `v = M*w + r` where `M` is the lcm of the involved divisors;
//! * if it occurs in an equality, it is substituted;
//! * otherwise the parameter space is split into chambers by which lower
//!   bound is the largest and which upper bound is the smallest, and the
//!   summand is summed in closed form with power-sum polynomials.
//!
//! Shapes that exceed the splitting budget fall back to enumeration.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::constraint::Constraint;
use super::error::PolyError;
use super::expr::{AffineExpr, Div};
use super::int::{gcd, lcm};
use super::poly::Polyhedron;
use super::qpoly::QuasiPolynomial;
use super::scan;

/// Limits on the symbolic recursion before switching to enumeration.
#[derive(Clone, Copy, Debug)]
pub struct CountBudget {
    /// Maximum product of residue splits along one recursion path.
    pub max_residues: i64,
    /// Maximum number of recursion steps for one count.
    pub max_steps: usize,
}

impl Default for CountBudget {
    fn default() -> Self {
        CountBudget { max_residues: 1 << 14, max_steps: 200_000 }
    }
}

static FALLBACKS: AtomicUsize = AtomicUsize::new(0);

/// Number of counts (process-wide) that exceeded the symbolic budget and
/// were answered by enumeration.
pub fn fallback_count() -> usize {
    FALLBACKS.load(Ordering::Relaxed)
}

/// A summand over the parameter space with the parameter domain where it
/// applies. Pieces produced by one count may overlap; the value at a point
/// is the sum over all pieces containing it.
#[derive(Clone, Debug)]
pub(crate) struct Term {
    pub domain: Polyhedron,
    pub value: QuasiPolynomial,
}

enum Failure {
    Budget,
    Error(PolyError),
}

impl From<PolyError> for Failure {
    fn from(e: PolyError) -> Self {
        Failure::Error(e)
    }
}

struct Ctx<'a> {
    n_params: usize,
    budget: CountBudget,
    steps: usize,
    names: &'a [String],
    out: Vec<Term>,
}

/// Sums `weight` over the points of `p` whose first `n_params` coordinates
/// are fixed. Returns possibly overlapping terms (see [`Term`]).
pub(crate) fn sum(
    p: &Polyhedron,
    n_params: usize,
    weight: &QuasiPolynomial,
    names: &[String],
    budget: CountBudget,
) -> Result<Vec<Term>, PolyError> {
    assert_eq!(p.n_ex, 0);
    let mut ctx = Ctx { n_params, budget, steps: 0, names, out: Vec::new() };
    match rec(&mut ctx, p.clone(), weight.clone(), 1) {
        Ok(()) => Ok(ctx.out),
        Err(Failure::Error(e)) => Err(e),
        Err(Failure::Budget) => {
            FALLBACKS.fetch_add(1, Ordering::Relaxed);
            enumerate_fallback(p, n_params, weight, names)
        }
    }
}

/// Number of integer points of a polyhedron without parameters.
pub(crate) fn count_points(p: &Polyhedron, names: &[String], budget: CountBudget) -> Result<BigInt, PolyError> {
    let one = QuasiPolynomial::from_int(p.n_dim, 1);
    let terms = sum(p, 0, &one, names, budget)?;
    let mut total = BigRational::zero();
    for t in terms {
        total += t.value.eval(&[]);
    }
    assert!(total.is_integer());
    Ok(total.to_integer())
}

fn enumerate_fallback(
    p: &Polyhedron,
    n_params: usize,
    weight: &QuasiPolynomial,
    names: &[String],
) -> Result<Vec<Term>, PolyError> {
    let pts = scan::points(p, names)?;
    let mut out: Vec<Term> = Vec::new();
    let mut cur: Option<(Vec<i64>, BigRational)> = None;
    let flush = |cur: Option<(Vec<i64>, BigRational)>, out: &mut Vec<Term>| {
        if let Some((prefix, v)) = cur {
            let cons = prefix
                .iter()
                .enumerate()
                .map(|(i, &x)| Constraint::eq(AffineExpr::var(n_params, i).add_constant(-x)))
                .collect();
            out.push(Term {
                domain: Polyhedron::from_constraints(n_params, cons),
                value: QuasiPolynomial::constant(n_params, v),
            });
        }
    };
    for pt in pts {
        let prefix = pt[..n_params].to_vec();
        let w = weight.eval(&pt);
        match &mut cur {
            Some((pre, v)) if *pre == prefix => *v += w,
            _ => {
                flush(cur.take(), &mut out);
                cur = Some((prefix, w));
            }
        }
    }
    flush(cur, &mut out);
    Ok(out)
}

/// Drops the last variable of a constraint set and substitutes it by
/// `value` (an expression over the remaining variables).
fn eliminate_last(cons: &[Constraint], n: usize, value: &AffineExpr) -> Vec<Constraint> {
    let mut subs: Vec<AffineExpr> = (0..n - 1).map(|i| AffineExpr::var(n - 1, i)).collect();
    subs.push(value.clone());
    cons.iter().map(|c| c.substitute(&subs, n - 1)).collect()
}

fn shrink(e: &AffineExpr) -> AffineExpr {
    let n = e.n_vars();
    let subs: Vec<AffineExpr> = (0..n)
        .map(|i| if i + 1 < n { AffineExpr::var(n - 1, i) } else { AffineExpr::zero(n - 1) })
        .collect();
    e.substitute(&subs, n - 1)
}

fn rec(ctx: &mut Ctx, p: Polyhedron, w: QuasiPolynomial, residues: i64) -> Result<(), Failure> {
    ctx.steps += 1;
    if ctx.steps > ctx.budget.max_steps {
        return Err(Failure::Budget);
    }
    if p.is_marked_empty() || w.is_zero() {
        return Ok(());
    }
    let n = p.n_dim;
    if n == ctx.n_params {
        if p.n_dim == 0 {
            if p.constraints().iter().all(|c| c.holds(&[])) {
                ctx.out.push(Term { domain: p, value: w });
            }
            return Ok(());
        }
        if !p.is_empty() {
            ctx.out.push(Term { domain: p, value: w });
        }
        return Ok(());
    }
    if p.is_rationally_empty() {
        return Ok(());
    }
    let (p, w) = move_cheapest_last(p, w, ctx.n_params);
    let v = n - 1;

    // Residue split when v occurs inside floor terms.
    let mut m = 1i64;
    let mut atoms = Vec::new();
    for c in p.constraints() {
        c.expr.collect_atoms(&mut atoms);
    }
    for a in w.floor_atoms() {
        a.inner.collect_atoms(&mut atoms);
        atoms.push(a);
    }
    for a in &atoms {
        if a.inner.uses_var(v) {
            m = lcm(m, residue_period(a, v));
        }
    }
    if m > 1 {
        if residues.saturating_mul(m) > ctx.budget.max_residues {
            return Err(Failure::Budget);
        }
        for r in 0..m {
            let mut subs: Vec<AffineExpr> = (0..n).map(|i| AffineExpr::var(n, i)).collect();
            subs[v] = AffineExpr::var(n, v).scale(m).add_constant(r);
            let q = p.substituted(&subs, n, 0);
            let wq = w.substitute(&subs, n);
            rec(ctx, q, wq, residues * m)?;
        }
        return Ok(());
    }

    // Equality on v: a single value.
    if let Some(eq) = p.constraints().iter().find(|c| c.is_eq() && c.expr.coeffs[v] != 0) {
        let mut a = eq.expr.coeffs[v];
        let mut rest = eq.expr.clone();
        rest.coeffs[v] = 0;
        if a < 0 {
            a = -a;
            rest = rest.neg();
        }
        let num = shrink(&rest.neg());
        let value = num.floor_div(a);
        let mut cons = eliminate_last(p.constraints(), n, &value);
        if a != 1 {
            cons.push(Constraint::eq(num.sub(&value.scale(a))));
        }
        let mut subs: Vec<AffineExpr> = (0..n - 1).map(|i| AffineExpr::var(n - 1, i)).collect();
        subs.push(value);
        let wq = w.substitute(&subs, n - 1);
        let q = Polyhedron::from_constraints(n - 1, cons);
        return rec(ctx, q, wq, residues);
    }

    // Bounds on v.
    let mut lowers: Vec<AffineExpr> = Vec::new();
    let mut uppers: Vec<AffineExpr> = Vec::new();
    let mut rest: Vec<Constraint> = Vec::new();
    for c in p.constraints() {
        let a = c.expr.coeffs[v];
        if a == 0 {
            rest.push(Constraint { kind: c.kind, expr: shrink(&c.expr) });
            continue;
        }
        let mut r = c.expr.clone();
        r.coeffs[v] = 0;
        let r = shrink(&r);
        if a > 0 {
            // a*v + r >= 0  ->  v >= ceil(-r/a)
            lowers.push(r.neg().add_constant(a - 1).floor_div(a));
        } else {
            // -b*v + r >= 0 ->  v <= floor(r/b)
            uppers.push(r.floor_div(-a));
        }
    }
    lowers.sort();
    lowers.dedup();
    uppers.sort();
    uppers.dedup();
    drop_dominated(&mut lowers, true);
    drop_dominated(&mut uppers, false);
    if lowers.is_empty() || uppers.is_empty() {
        if p.is_empty() {
            return Ok(());
        }
        return Err(Failure::Error(PolyError::Unbounded(ctx.names[v].clone())));
    }
    let drop_v: Vec<AffineExpr> = (0..n)
        .map(|i| if i < v { AffineExpr::var(n - 1, i) } else { AffineExpr::zero(n - 1) })
        .collect();
    let coeffs: Vec<QuasiPolynomial> =
        w.coefficients_in(v).iter().map(|c| c.substitute(&drop_v, n - 1)).collect();
    let base = Polyhedron::from_constraints(n - 1, rest);
    if base.is_marked_empty() {
        return Ok(());
    }
    let single = lowers.len() == 1 && uppers.len() == 1;
    for (i, lo) in lowers.iter().enumerate() {
        for (j, up) in uppers.iter().enumerate() {
            let mut cons: Vec<Constraint> = Vec::new();
            for (k, other) in lowers.iter().enumerate() {
                if k != i {
                    let strict = i64::from(k < i);
                    cons.push(Constraint::ge(lo.sub(other).add_constant(-strict)));
                }
            }
            for (k, other) in uppers.iter().enumerate() {
                if k != j {
                    let strict = i64::from(k < j);
                    cons.push(Constraint::ge(other.sub(up).add_constant(-strict)));
                }
            }
            cons.push(Constraint::ge(up.sub(lo)));
            let mut q = base.clone();
            for c in cons {
                q.add(c);
            }
            q.simplify();
            if q.is_marked_empty() || (!single && q.is_rationally_empty()) {
                continue;
            }
            let summed = sum_powers(&coeffs, lo, up);
            rec(ctx, q, summed, residues)?;
        }
    }
    Ok(())
}

/// Reorders the counted variables so that the cheapest one to eliminate
/// comes last: equalities first, then the fewest bound pairs, with floor
/// occurrences last.
fn move_cheapest_last(p: Polyhedron, w: QuasiPolynomial, n_params: usize) -> (Polyhedron, QuasiPolynomial) {
    let n = p.n_dim;
    let mut best = (usize::MAX, n - 1);
    for u in (n_params..n).rev() {
        let mut lo = 0usize;
        let mut hi = 0usize;
        let mut eq = None;
        let mut floors = w.var_in_floors(u);
        for c in p.constraints() {
            if c.expr.var_in_divs(u) {
                floors = true;
            }
            let a = c.expr.coeffs[u];
            if a == 0 {
                continue;
            }
            if c.is_eq() {
                eq = Some(eq.unwrap_or(false) || a.abs() == 1);
            } else if a > 0 {
                lo += 1;
            } else {
                hi += 1;
            }
        }
        let cost = if floors {
            1_000_000 + lo * hi
        } else if eq == Some(true) {
            0
        } else if eq == Some(false) {
            50
        } else {
            1 + lo * hi
        };
        if cost < best.0 {
            best = (cost, u);
        }
    }
    let u = best.1;
    if u == n - 1 {
        return (p, w);
    }
    let subs: Vec<AffineExpr> = (0..n)
        .map(|i| {
            let j = if i == u {
                n - 1
            } else if i == n - 1 {
                u
            } else {
                i
            };
            AffineExpr::var(n, j)
        })
        .collect();
    (p.substituted(&subs, n, 0), w.substitute(&subs, n))
}

/// Smallest `M` such that substituting `v = M*w + r` moves `w` out of the
/// floor atom `a`.
fn residue_period(a: &Div, v: usize) -> i64 {
    let d = a.divisor;
    if a.inner.var_in_divs(v) {
        let mut inner = 1;
        for (sub, _) in &a.inner.divs {
            if sub.inner.uses_var(v) {
                inner = lcm(inner, residue_period(sub, v));
            }
        }
        d * inner
    } else {
        d / gcd(a.inner.coeffs[v], d)
    }
}

/// Removes bounds that differ from another bound by a constant and are
/// therefore never the active one.
fn drop_dominated(bounds: &mut Vec<AffineExpr>, lower: bool) {
    let mut keep = vec![true; bounds.len()];
    for i in 0..bounds.len() {
        for j in 0..bounds.len() {
            if i == j || !keep[j] {
                continue;
            }
            let d = bounds[i].sub(&bounds[j]);
            if d.is_constant() {
                let c = d.constant_term();
                // lower: i is dominated if bounds[i] <= bounds[j]
                if (lower && c <= 0) || (!lower && c >= 0) {
                    keep[i] = false;
                    break;
                }
            }
        }
    }
    let mut k = 0;
    bounds.retain(|_| {
        k += 1;
        keep[k - 1]
    });
}

/// `sum_{v=lo}^{up} sum_e coeffs[e] * v^e` for `lo <= up + 1`.
fn sum_powers(coeffs: &[QuasiPolynomial], lo: &AffineExpr, up: &AffineExpr) -> QuasiPolynomial {
    let n = lo.n_vars();
    let u = QuasiPolynomial::from_affine(up);
    let l1 = QuasiPolynomial::from_affine(&lo.add_constant(-1));
    let mut total = QuasiPolynomial::zero(n);
    for (e, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let s = power_sum(e).eval_at(&u).sub(&power_sum(e).eval_at(&l1));
        total = total.add(&c.mul(&s));
    }
    total
}

/// Polynomial `S_e(x) = sum_{t=1}^{x} t^e` as rational coefficients of
/// `x^0 .. x^(e+1)`.
struct PowerSum(Vec<BigRational>);

impl PowerSum {
    fn eval_at(&self, x: &QuasiPolynomial) -> QuasiPolynomial {
        // Horner.
        let n = x.n_vars();
        let mut acc = QuasiPolynomial::zero(n);
        for c in self.0.iter().rev() {
            acc = acc.mul(x).add(&QuasiPolynomial::constant(n, c.clone()));
        }
        acc
    }
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

fn bernoulli(max: usize) -> Vec<BigRational> {
    // B_1 = +1/2 convention.
    let mut b: Vec<BigRational> = Vec::with_capacity(max + 1);
    for m in 0..=max {
        let mut s = BigRational::zero();
        for (k, bk) in b.iter().enumerate() {
            s += BigRational::from_integer(binomial(m + 1, k)) * bk;
        }
        let bm = if m == 0 {
            BigRational::one()
        } else {
            -s / BigRational::from_integer(BigInt::from(m + 1))
        };
        b.push(bm);
    }
    if max >= 1 {
        b[1] = -b[1].clone();
    }
    b
}

fn power_sum(e: usize) -> &'static PowerSum {
    static TABLE: OnceLock<Vec<PowerSum>> = OnceLock::new();
    const MAX: usize = 24;
    let table = TABLE.get_or_init(|| {
        let b = bernoulli(MAX + 1);
        (0..=MAX)
            .map(|e| {
                // S_e(x) = 1/(e+1) sum_{j=0}^{e} C(e+1, j) B_j x^(e+1-j)
                let mut c = vec![BigRational::zero(); e + 2];
                for (j, bj) in b.iter().enumerate().take(e + 1) {
                    c[e + 1 - j] += BigRational::from_integer(binomial(e + 1, j)) * bj
                        / BigRational::from_integer(BigInt::from(e + 1));
                }
                PowerSum(c)
            })
            .collect()
    });
    assert!(e <= MAX, "summand degree {e} too large");
    &table[e]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyhedra::qpoly::rat;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn power_sums_match_direct_sums() {
        let at = |e: usize, x: i64| power_sum(e).eval_at(&QuasiPolynomial::from_int(0, x)).eval(&[]);
        for e in 0..8 {
            assert_eq!(at(e, 0), rat(0));
            for x in -6i64..12 {
                // S_e(x) - S_e(x - 1) = x^e holds as a polynomial identity.
                assert_eq!(at(e, x) - at(e, x - 1), rat(x.pow(e as u32)), "e={e} x={x}");
            }
        }
    }

    #[test]
    fn triangle_count() {
        // { (i, j) : 0 <= i < 3, 0 <= j < i } has 3 points.
        let n = 2;
        let i = AffineExpr::var(n, 0);
        let j = AffineExpr::var(n, 1);
        let p = Polyhedron::from_constraints(
            n,
            vec![
                Constraint::ge(i.clone()),
                Constraint::ge(i.neg().add_constant(2)),
                Constraint::ge(j.clone()),
                Constraint::ge(i.sub(&j).add_constant(-1)),
            ],
        );
        assert_eq!(count_points(&p, &names(2), CountBudget::default()).unwrap(), BigInt::from(3));
    }

    #[test]
    fn parametric_count_of_prefix() {
        // i -> #{ j : 0 <= j <= i } = i + 1 for 0 <= i < 5
        let n = 2;
        let i = AffineExpr::var(n, 0);
        let j = AffineExpr::var(n, 1);
        let p = Polyhedron::from_constraints(
            n,
            vec![
                Constraint::ge(i.clone()),
                Constraint::ge(i.neg().add_constant(4)),
                Constraint::ge(j.clone()),
                Constraint::ge(i.sub(&j)),
            ],
        );
        let one = QuasiPolynomial::from_int(n, 1);
        let terms = sum(&p, 1, &one, &names(2), CountBudget::default()).unwrap();
        for x in 0..5 {
            let v: BigRational =
                terms.iter().filter(|t| t.domain.contains(&[x])).map(|t| t.value.eval(&[x])).sum();
            assert_eq!(v, rat(x + 1));
        }
    }

    #[test]
    fn floors_are_split_by_residue() {
        // { (i, c) : 0 <= i < 20, c = floor(i / 8) } has 20 points, 3 distinct c
        let n = 2;
        let i = AffineExpr::var(n, 0);
        let c = AffineExpr::var(n, 1);
        let p = Polyhedron::from_constraints(
            n,
            vec![
                Constraint::ge(i.clone()),
                Constraint::ge(i.neg().add_constant(19)),
                Constraint::eq(c.sub(&i.floor_div(8))),
            ],
        );
        assert_eq!(count_points(&p, &names(2), CountBudget::default()).unwrap(), BigInt::from(20));
        // project i out: distinct lines
        let mut q = p.dims_to_existentials(&[true, false]);
        q.eliminate_existentials().unwrap();
        assert_eq!(count_points(&q, &names(1), CountBudget::default()).unwrap(), BigInt::from(3));
    }
}
