//! Lowering of a loop nest to iteration domain, schedule and access map.

use super::ast::*;
use super::{ErrorKind, FrontendError};
use crate::polyhedra::{AffineExpr, BasicMap, BasicSet, Constraint, Map, PolyError, Set, Space};

/// Converts an index or bound expression to an affine expression over the
/// loop variables in `scope`, folding constants.
pub(crate) fn affine(e: &Expr, scope: &[String], consts: &[(String, i64)]) -> Result<AffineExpr, FrontendError> {
    let n = scope.len();
    let non_affine = |msg: String| FrontendError::new(ErrorKind::NonAffine, e.pos, msg);
    match &e.kind {
        ExprKind::Num(v) => Ok(AffineExpr::constant(n, *v)),
        ExprKind::Real(_) => Err(non_affine("non-integer literal in an affine expression".into())),
        ExprKind::Ident(name) => {
            if let Some(k) = scope.iter().position(|s| s == name) {
                Ok(AffineExpr::var(n, k))
            } else if let Some((_, v)) = consts.iter().find(|(c, _)| c == name) {
                Ok(AffineExpr::constant(n, *v))
            } else {
                Err(FrontendError::new(ErrorKind::UnknownIdentifier, e.pos, format!("unknown identifier `{name}`")))
            }
        }
        ExprKind::Access(r) => Err(non_affine(format!("array element `{}` in an affine expression", r.name))),
        ExprKind::Neg(a) => Ok(affine(a, scope, consts)?.neg()),
        ExprKind::Call(f, args) if f == "floor" && args.len() == 1 => affine(&args[0], scope, consts),
        ExprKind::Call(f, _) => Err(non_affine(format!("call to `{f}` in an affine expression"))),
        ExprKind::Binary(op, a, b) => {
            let x = affine(a, scope, consts)?;
            let y = affine(b, scope, consts)?;
            match op {
                BinOp::Add => Ok(x.add(&y)),
                BinOp::Sub => Ok(x.sub(&y)),
                BinOp::Mul => {
                    if y.is_constant() {
                        Ok(x.scale(y.constant_term()))
                    } else if x.is_constant() {
                        Ok(y.scale(x.constant_term()))
                    } else {
                        Err(non_affine("product of two non-constant expressions".into()))
                    }
                }
                BinOp::Div | BinOp::Mod => {
                    if !y.is_constant() || y.constant_term() <= 0 {
                        return Err(non_affine(format!("`{}` needs a positive constant divisor", op.symbol())));
                    }
                    let d = y.constant_term();
                    Ok(if *op == BinOp::Div { x.floor_div(d) } else { x.modulo(d) })
                }
            }
        }
    }
}

/// One array access of a statement.
#[derive(Clone, Debug, PartialEq)]
pub struct Access {
    pub array: String,
    pub kind: AccessKind,
    /// Element subscripts over the statement's loop variables.
    pub subscripts: Vec<AffineExpr>,
    /// Cache line coordinates: outer subscripts unchanged, the innermost
    /// one mapped to `floor(x * elem / line_size)`.
    pub line: Vec<AffineExpr>,
}

impl Access {
    pub fn line_at(&self, point: &[i64]) -> Vec<i64> {
        self.line.iter().map(|e| e.eval(point)).collect()
    }
}

/// A lowered statement.
#[derive(Clone, Debug, PartialEq)]
pub struct Statement {
    pub name: String,
    /// Enclosing loop variables, outermost first.
    pub iters: Vec<String>,
    /// Iteration domain over `iters`.
    pub domain: Set,
    /// Schedule over `iters` followed by the access index.
    pub schedule: Vec<AffineExpr>,
    pub accesses: Vec<Access>,
}

impl Statement {
    pub fn space(&self) -> Space {
        Space::named(&self.name, self.iters.clone())
    }

    /// Schedule of access `k` as expressions over the loop variables.
    pub fn access_schedule(&self, k: usize) -> Vec<AffineExpr> {
        let n = self.iters.len();
        let mut subs: Vec<AffineExpr> = (0..n).map(|i| AffineExpr::var(n, i)).collect();
        subs.push(AffineExpr::constant(n, k as i64));
        self.schedule.iter().map(|e| e.substitute(&subs, n)).collect()
    }

    /// Name of the access index dimension of instance tuples.
    pub fn access_dim(&self) -> String {
        let mut name = "a".to_string();
        while self.iters.contains(&name) {
            name.push('\'');
        }
        name
    }

    fn instance_space(&self) -> Space {
        let mut dims = self.iters.clone();
        dims.push(self.access_dim());
        Space::named(&self.name, dims)
    }
}

/// A lowered program: iteration domain `domain` over instances
/// `S[iters.., a]`, schedule `schedule` into an anonymous time space and
/// access map `access` into cache lines.
#[derive(Clone, Debug)]
pub struct Program {
    pub arrays: Vec<ArrayDecl>,
    pub statements: Vec<Statement>,
    pub line_size: i64,
    pub sched_dims: usize,
    pub domain: Set,
    pub schedule: Map,
    pub access: Map,
}

impl Program {
    pub fn statement(&self, name: &str) -> Option<&Statement> {
        self.statements.iter().find(|s| s.name == name)
    }

    /// Statement labels in declaration order.
    pub fn statement_order(&self) -> Vec<String> {
        self.statements.iter().map(|s| s.name.clone()).collect()
    }

    pub fn array(&self, name: &str) -> Option<&ArrayDecl> {
        self.arrays.iter().find(|a| a.name == name)
    }

    pub fn array_space(&self, name: &str) -> Space {
        let n = self.array(name).map_or(0, |a| a.extents.len());
        Space::named(name, (0..n).map(|k| format!("d{k}")).collect())
    }

    pub fn time_space(&self) -> Space {
        Space::anonymous_n("t", self.sched_dims)
    }

    /// Accesses as `(statement index, access index)` in declaration order.
    pub fn access_ids(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (s, st) in self.statements.iter().enumerate() {
            for k in 0..st.accesses.len() {
                out.push((s, k));
            }
        }
        out
    }
}

/// Raw schedule entry before constant columns are dropped.
#[derive(Clone, Copy, PartialEq)]
enum Entry {
    Pos(i64),
    Iter(usize),
}

struct Collected<'a> {
    stmt: &'a Stmt,
    loops: Vec<&'a Loop>,
    entries: Vec<Entry>,
}

fn collect<'a>(nodes: &'a [Node], loops: &mut Vec<&'a Loop>, prefix: &mut Vec<Entry>, out: &mut Vec<Collected<'a>>) {
    for (pos, n) in nodes.iter().enumerate() {
        prefix.push(Entry::Pos(pos as i64));
        match n {
            Node::Stmt(s) => out.push(Collected { stmt: s, loops: loops.clone(), entries: prefix.clone() }),
            Node::Loop(l) => {
                prefix.push(Entry::Iter(loops.len()));
                loops.push(l);
                collect(&l.body, loops, prefix, out);
                loops.pop();
                prefix.pop();
            }
        }
        prefix.pop();
    }
}

fn internal(e: PolyError) -> FrontendError {
    FrontendError::new(ErrorKind::Internal, Pos::default(), e.to_string())
}

/// Lowers a checked loop nest at cache line size `line_size` (bytes).
pub fn lower(ast: &LoopNestAst, line_size: i64) -> Result<Program, FrontendError> {
    if line_size <= 0 {
        return Err(FrontendError::new(ErrorKind::Syntax, Pos::default(), "line size must be positive".into()));
    }
    let mut found = Vec::new();
    collect(&ast.body, &mut Vec::new(), &mut Vec::new(), &mut found);
    let width = found.iter().map(|c| c.entries.len()).max().unwrap_or(0);
    // Columns holding the same position for every statement carry no order.
    let keep: Vec<bool> = (0..width)
        .map(|col| {
            let first = found[0].entries.get(col).copied().unwrap_or(Entry::Pos(0));
            !found.iter().all(|c| {
                let e = c.entries.get(col).copied().unwrap_or(Entry::Pos(0));
                matches!((e, first), (Entry::Pos(x), Entry::Pos(y)) if x == y)
            })
        })
        .collect();
    let sched_dims = keep.iter().filter(|k| **k).count() + 1;
    let is_array = |n: &str| ast.array(n).is_some();

    let mut statements = Vec::new();
    for c in &found {
        let iters: Vec<String> = c.loops.iter().map(|l| l.var.clone()).collect();
        let n = iters.len();
        let mut cons = Vec::new();
        for (k, l) in c.loops.iter().enumerate() {
            let lo = affine(&l.lo, &iters[..k], &ast.consts)?;
            let hi = affine(&l.hi, &iters[..k], &ast.consts)?;
            let widen = AffineExpr::embedding(k, n, Some);
            let v = AffineExpr::var(n, k);
            cons.push(Constraint::ge(v.sub(&lo.substitute(&widen, n))));
            cons.push(Constraint::ge(hi.substitute(&widen, n).sub(&v)));
        }
        let space = Space::named(&c.stmt.label, iters.clone());
        let domain = Set::from_basic(BasicSet::new(space, cons));

        let mut schedule = Vec::new();
        for (col, kept) in keep.iter().enumerate() {
            if !kept {
                continue;
            }
            schedule.push(match c.entries.get(col).copied().unwrap_or(Entry::Pos(0)) {
                Entry::Pos(p) => AffineExpr::constant(n + 1, p),
                Entry::Iter(k) => AffineExpr::var(n + 1, k),
            });
        }
        schedule.push(AffineExpr::var(n + 1, n));

        let mut accesses = Vec::new();
        for (r, kind) in c.stmt.ordered_refs(&is_array) {
            let decl = ast.array(&r.name).expect("checked by the parser");
            let subscripts: Vec<AffineExpr> =
                r.indices.iter().map(|e| affine(e, &iters, &ast.consts)).collect::<Result<_, _>>()?;
            let mut line = subscripts.clone();
            if let Some(last) = line.last_mut() {
                *last = last.scale(decl.elem).floor_div(line_size);
            }
            accesses.push(Access { array: r.name.clone(), kind, subscripts, line });
        }
        statements.push(Statement { name: c.stmt.label.clone(), iters, domain, schedule, accesses });
    }

    let time = Space::anonymous_n("t", sched_dims);
    let mut dom_pieces = Vec::new();
    let mut sched_pieces = Vec::new();
    let mut acc_pieces = Vec::new();
    for st in &statements {
        if st.accesses.is_empty() {
            continue;
        }
        let n = st.iters.len();
        let inst = st.instance_space();
        let widen = AffineExpr::embedding(n, n + 1, Some);
        let a = AffineExpr::var(n + 1, n);
        let mut cons: Vec<Constraint> =
            st.domain.pieces()[0].constraints().iter().map(|c| c.substitute(&widen, n + 1)).collect();
        cons.push(Constraint::ge(a.clone()));
        cons.push(Constraint::ge(a.neg().add_constant(st.accesses.len() as i64 - 1)));
        let inst_domain = Set::from_basic(BasicSet::new(inst.clone(), cons));
        dom_pieces.extend(inst_domain.pieces().iter().cloned());

        let s = Map::from_basic(BasicMap::from_affine(inst.clone(), time.clone(), &st.schedule));
        sched_pieces.extend(s.intersect_domain(&inst_domain).map_err(internal)?.pieces().iter().cloned());

        for (k, acc) in st.accesses.iter().enumerate() {
            let line: Vec<AffineExpr> = acc.line.iter().map(|e| e.substitute(&widen, n + 1)).collect();
            let arr = Space::named(&acc.array, (0..line.len()).map(|d| format!("d{d}")).collect());
            let m = Map::from_basic(BasicMap::from_affine(inst.clone(), arr, &line));
            let only_k = Set::from_basic(BasicSet::new(inst.clone(), vec![Constraint::eq(a.add_constant(-(k as i64)))]));
            let m = m.intersect_domain(&inst_domain).map_err(internal)?.intersect_domain(&only_k).map_err(internal)?;
            acc_pieces.extend(m.pieces().iter().cloned());
        }
    }
    Ok(Program {
        arrays: ast.arrays.clone(),
        statements,
        line_size,
        sched_dims,
        domain: Set::from_pieces(dom_pieces).map_err(internal)?,
        schedule: Map::from_pieces(sched_pieces).map_err(internal)?,
        access: Map::from_pieces(acc_pieces).map_err(internal)?,
    })
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse_program;
    use super::*;

    const RUNNING: &str = "
        array M[4] elem 4;
        for i = 0 .. 3 { S0: M[i] = i; }
        for j = 0 .. 3 { S1: x = M[3 - j]; }
    ";

    #[test]
    fn running_example_maps() {
        let p = lower(&parse_program(RUNNING).unwrap(), 4).unwrap();
        assert_eq!(p.sched_dims, 3);
        assert!(p.access.contains(Some("S0"), &[2, 0], Some("M"), &[2]));
        assert!(p.access.contains(Some("S1"), &[1, 0], Some("M"), &[2]));
        assert!(p.schedule.contains(Some("S0"), &[3, 0], None, &[0, 3, 0]));
        assert!(p.schedule.contains(Some("S1"), &[0, 0], None, &[1, 0, 0]));
        assert_eq!(p.domain.cardinality().unwrap(), 8.into());
    }

    #[test]
    fn read_then_write_order() {
        let p = lower(&parse_program("array I[4]; array M[4]; for i = 0 .. 3 { S0: M[i] = I[i]; }").unwrap(), 8)
            .unwrap();
        assert!(p.access.contains(Some("S0"), &[1, 0], Some("I"), &[1]));
        assert!(p.access.contains(Some("S0"), &[1, 1], Some("M"), &[1]));
        // A single top-level loop leaves only the iterator and the access index.
        assert!(p.schedule.contains(Some("S0"), &[1, 1], None, &[1, 1]));
    }

    #[test]
    fn cache_line_mapping() {
        let p = lower(&parse_program("array M[32] elem 4; for i = 0 .. 31 { S: M[i] = 0; }").unwrap(), 64).unwrap();
        let lines = p.access.range().unwrap().enumerate().unwrap();
        let lines: Vec<i64> = lines.into_iter().map(|(_, v)| v[0]).collect();
        assert_eq!(lines, vec![0, 1]);
        let acc = &p.statements[0].accesses[0];
        assert_eq!(acc.line_at(&[15]), vec![0]);
        assert_eq!(acc.line_at(&[16]), vec![1]);
    }
}
