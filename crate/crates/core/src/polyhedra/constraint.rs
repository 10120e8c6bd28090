use super::expr::AffineExpr;
use super::int::floor_div;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    /// `expr = 0`
    Eq,
    /// `expr >= 0`
    Ineq,
}

/// A single quasi-affine constraint over the variables of a polyhedron.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub expr: AffineExpr,
}

pub(crate) enum Normalized {
    True,
    False,
    Keep(Constraint),
}

impl Constraint {
    pub fn eq(expr: AffineExpr) -> Self {
        Constraint { kind: ConstraintKind::Eq, expr }
    }

    pub fn ge(expr: AffineExpr) -> Self {
        Constraint { kind: ConstraintKind::Ineq, expr }
    }

    pub fn is_eq(&self) -> bool {
        self.kind == ConstraintKind::Eq
    }

    pub fn holds(&self, point: &[i64]) -> bool {
        let v = self.expr.eval(point);
        match self.kind {
            ConstraintKind::Eq => v == 0,
            ConstraintKind::Ineq => v >= 0,
        }
    }

    /// Integer tightening: divides by the content of the non-constant part
    /// and resolves constant constraints.
    pub(crate) fn normalize(self) -> Normalized {
        let g = self.expr.content();
        if g == 0 {
            let c = self.expr.constant;
            let ok = match self.kind {
                ConstraintKind::Eq => c == 0,
                ConstraintKind::Ineq => c >= 0,
            };
            return if ok { Normalized::True } else { Normalized::False };
        }
        let mut expr = self.expr;
        match self.kind {
            ConstraintKind::Ineq => {
                if g > 1 {
                    let c = floor_div(expr.constant, g);
                    let mut lin = expr.linear_part().exact_div(g);
                    lin.constant = c;
                    expr = lin;
                }
            }
            ConstraintKind::Eq => {
                if expr.constant % g != 0 {
                    return Normalized::False;
                }
                if g > 1 {
                    expr = expr.exact_div(g);
                }
                if expr.first_nonconst_sign() < 0 {
                    expr = expr.neg();
                }
            }
        }
        Normalized::Keep(Constraint { kind: self.kind, expr })
    }

    /// Complements of this constraint as a list of inequalities whose union is
    /// the complement (one for an inequality, two for an equality).
    pub(crate) fn complement(&self) -> Vec<Constraint> {
        match self.kind {
            ConstraintKind::Ineq => vec![Constraint::ge(self.expr.neg().add_constant(-1))],
            ConstraintKind::Eq => vec![
                Constraint::ge(self.expr.add_constant(-1)),
                Constraint::ge(self.expr.neg().add_constant(-1)),
            ],
        }
    }

    pub(crate) fn substitute(&self, subs: &[AffineExpr], new_n: usize) -> Constraint {
        Constraint { kind: self.kind, expr: self.expr.substitute(subs, new_n) }
    }

    pub fn fmt_with(&self, names: &[String]) -> String {
        // Move negative terms to the right-hand side for readability.
        let e = &self.expr;
        let mut lhs: Vec<(i64, String)> = Vec::new();
        let mut rhs: Vec<(i64, String)> = Vec::new();
        for (i, &c) in e.coeffs.iter().enumerate() {
            if c > 0 {
                lhs.push((c, names[i].clone()));
            } else if c < 0 {
                rhs.push((-c, names[i].clone()));
            }
        }
        for (atom, c) in &e.divs {
            let s = format!("floor(({})/{})", atom.inner.fmt_with(names), atom.divisor);
            if *c > 0 {
                lhs.push((*c, s));
            } else {
                rhs.push((-*c, s));
            }
        }
        let (lc, rc) = if e.constant >= 0 { (e.constant, 0) } else { (0, -e.constant) };
        let op = if self.is_eq() { "=" } else { ">=" };
        let l = super::expr::render_terms(&lhs, lc);
        let r = super::expr::render_terms(&rhs, rc);
        // Prefer `x <= 3` over `3 >= x`.
        if lhs.is_empty() && !self.is_eq() {
            format!("{r} <= {l}")
        } else {
            format!("{l} {op} {r}")
        }
    }
}
