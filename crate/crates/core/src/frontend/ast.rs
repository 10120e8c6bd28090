use std::fmt;

/// Source position, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
        }
    }
}

/// An array element or scalar reference: `A[i][j + 1]` or `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ref {
    pub name: String,
    pub indices: Vec<Expr>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Num(i64),
    /// A non-integer literal; only meaningful as a value.
    Real(f64),
    /// A loop variable, constant or scalar.
    Ident(String),
    /// An array element (or a scalar, when written with brackets omitted
    /// but declared as an array this is an arity error).
    Access(Ref),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `floor(e)`, or any other function applied to values.
    Call(String, Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Expr { kind, pos }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArrayDecl {
    pub name: String,
    pub extents: Vec<i64>,
    /// Element size in bytes.
    pub elem: i64,
    pub pos: Pos,
}

/// `label: lhs op rhs;`
#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub label: String,
    pub lhs: Ref,
    pub op: AssignOp,
    pub rhs: Expr,
    pub pos: Pos,
}

/// `for var = lo .. hi { body }` with inclusive bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct Loop {
    pub var: String,
    pub lo: Expr,
    pub hi: Expr,
    pub body: Vec<Node>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Loop(Loop),
    Stmt(Stmt),
}

/// A parsed and checked loop nest. Constant values are already resolved.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoopNestAst {
    pub consts: Vec<(String, i64)>,
    pub arrays: Vec<ArrayDecl>,
    pub body: Vec<Node>,
}

impl LoopNestAst {
    pub fn array(&self, name: &str) -> Option<&ArrayDecl> {
        self.arrays.iter().find(|a| a.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<i64> {
        self.consts.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Statements in textual order.
    pub fn statements(&self) -> Vec<&Stmt> {
        fn walk<'a>(nodes: &'a [Node], out: &mut Vec<&'a Stmt>) {
            for n in nodes {
                match n {
                    Node::Loop(l) => walk(&l.body, out),
                    Node::Stmt(s) => out.push(s),
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.body, &mut out);
        out
    }
}

/// An access of a statement in evaluation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessKind {
    Read,
    Write,
}

impl Stmt {
    /// Array references in access order: for compound assignments the
    /// target is read first, then the right-hand side left to right, then
    /// the target is written. Scalars (no declared array) are registers
    /// and do not appear.
    pub fn ordered_refs<'a>(&'a self, is_array: &dyn Fn(&str) -> bool) -> Vec<(&'a Ref, AccessKind)> {
        fn reads<'a>(e: &'a Expr, is_array: &dyn Fn(&str) -> bool, out: &mut Vec<(&'a Ref, AccessKind)>) {
            match &e.kind {
                ExprKind::Num(_) | ExprKind::Real(_) | ExprKind::Ident(_) => {}
                ExprKind::Access(r) => {
                    if is_array(&r.name) {
                        out.push((r, AccessKind::Read));
                    }
                }
                ExprKind::Neg(a) => reads(a, is_array, out),
                ExprKind::Binary(_, a, b) => {
                    reads(a, is_array, out);
                    reads(b, is_array, out);
                }
                ExprKind::Call(_, args) => {
                    for a in args {
                        reads(a, is_array, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        let target = is_array(&self.lhs.name);
        if target && self.op != AssignOp::Set {
            out.push((&self.lhs, AccessKind::Read));
        }
        reads(&self.rhs, is_array, &mut out);
        if target {
            out.push((&self.lhs, AccessKind::Write));
        }
        out
    }
}
