//! Recursive descent parser for `.scop.dsl` loop nests.

use std::collections::HashMap;

use super::ast::*;
use super::lower::affine;
use super::{ErrorKind, FrontendError};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Sym(&'static str),
    Eof,
}

const SYMS: [&str; 19] =
    ["+=", "-=", "*=", "..", "[", "]", "{", "}", "(", ")", ";", ":", ",", "=", "+", "-", "*", "/", "%"];

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut real = false;
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                real = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = if real {
                Tok::Real(text.parse().map_err(|_| syntax(pos, format!("bad number `{text}`")))?)
            } else {
                Tok::Int(text.parse().map_err(|_| syntax(pos, format!("integer `{text}` out of range")))?)
            };
            out.push((tok, pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push((Tok::Sym(s), pos));
            }
            None => return Err(syntax(pos, format!("unexpected character `{c}`"))),
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

fn syntax(pos: Pos, msg: String) -> FrontendError {
    FrontendError::new(ErrorKind::Syntax, pos, msg)
}

struct Parser<'a> {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    overrides: &'a HashMap<String, i64>,
    consts: Vec<(String, i64)>,
    arrays: Vec<ArrayDecl>,
    scope: Vec<String>,
    labels: Vec<String>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn expect(&mut self, s: &str) -> Result<Pos, FrontendError> {
        if self.is_sym(s) {
            Ok(self.bump().1)
        } else {
            Err(syntax(self.pos(), format!("expected `{s}`, found {}", describe(self.peek()))))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), FrontendError> {
        match self.bump() {
            (Tok::Ident(s), p) => Ok((s, p)),
            (t, p) => Err(syntax(p, format!("expected identifier, found {}", describe(&t)))),
        }
    }

    fn program(&mut self) -> Result<Vec<Node>, FrontendError> {
        let mut body = Vec::new();
        while *self.peek() != Tok::Eof {
            if self.is_kw("const") {
                self.const_decl()?;
            } else if self.is_kw("array") {
                self.array_decl()?;
            } else {
                body.push(self.node()?);
            }
        }
        Ok(body)
    }

    fn const_value(&mut self, e: &Expr) -> Result<i64, FrontendError> {
        let a = affine(e, &[], &self.consts)?;
        Ok(a.constant_term())
    }

    fn const_decl(&mut self) -> Result<(), FrontendError> {
        self.bump();
        let (name, pos) = self.ident()?;
        self.expect("=")?;
        let e = self.expr()?;
        self.expect(";")?;
        if self.consts.iter().any(|(n, _)| *n == name) || self.arrays.iter().any(|a| a.name == name) {
            return Err(FrontendError::new(ErrorKind::Duplicate, pos, format!("`{name}` is already declared")));
        }
        let v = match self.overrides.get(&name) {
            Some(v) => *v,
            None => self.const_value(&e)?,
        };
        self.consts.push((name, v));
        Ok(())
    }

    fn array_decl(&mut self) -> Result<(), FrontendError> {
        self.bump();
        let (name, pos) = self.ident()?;
        if self.consts.iter().any(|(n, _)| *n == name) || self.arrays.iter().any(|a| a.name == name) {
            return Err(FrontendError::new(ErrorKind::Duplicate, pos, format!("`{name}` is already declared")));
        }
        let mut extents = Vec::new();
        while self.is_sym("[") {
            self.bump();
            let e = self.expr()?;
            self.expect("]")?;
            let v = self.const_value(&e)?;
            if v <= 0 {
                return Err(syntax(e.pos, format!("array extent must be positive, got {v}")));
            }
            extents.push(v);
        }
        if extents.is_empty() {
            return Err(syntax(self.pos(), format!("array `{name}` needs at least one extent")));
        }
        let mut elem = 8;
        if self.is_kw("elem") {
            self.bump();
            let e = self.expr()?;
            elem = self.const_value(&e)?;
            if elem <= 0 {
                return Err(syntax(e.pos, format!("element size must be positive, got {elem}")));
            }
        }
        self.expect(";")?;
        self.arrays.push(ArrayDecl { name, extents, elem, pos });
        Ok(())
    }

    fn node(&mut self) -> Result<Node, FrontendError> {
        if self.is_kw("for") {
            return self.for_loop().map(Node::Loop);
        }
        if self.is_kw("const") || self.is_kw("array") {
            return Err(syntax(self.pos(), "declarations are only allowed at the top level".into()));
        }
        self.stmt().map(Node::Stmt)
    }

    fn for_loop(&mut self) -> Result<Loop, FrontendError> {
        let pos = self.bump().1;
        let (var, vpos) = self.ident()?;
        if self.scope.contains(&var) || self.consts.iter().any(|(n, _)| *n == var) {
            return Err(FrontendError::new(ErrorKind::Duplicate, vpos, format!("`{var}` shadows an outer name")));
        }
        self.expect("=")?;
        let lo = self.expr()?;
        self.expect("..")?;
        let hi = self.expr()?;
        affine(&lo, &self.scope, &self.consts)?;
        affine(&hi, &self.scope, &self.consts)?;
        self.expect("{")?;
        self.scope.push(var.clone());
        let mut body = Vec::new();
        while !self.is_sym("}") {
            if *self.peek() == Tok::Eof {
                return Err(syntax(self.pos(), "unterminated loop body".into()));
            }
            body.push(self.node()?);
        }
        self.bump();
        self.scope.pop();
        Ok(Loop { var, lo, hi, body, pos })
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        let (label, pos) = self.ident()?;
        self.expect(":")?;
        if self.labels.contains(&label) {
            return Err(FrontendError::new(ErrorKind::Duplicate, pos, format!("duplicate statement label `{label}`")));
        }
        self.labels.push(label.clone());
        let (name, rpos) = self.ident()?;
        let lhs = self.reference(name, rpos)?;
        let is_scalar = lhs.indices.is_empty() && self.arrays.iter().all(|a| a.name != lhs.name);
        if is_scalar && (self.scope.contains(&lhs.name) || self.consts.iter().any(|(n, _)| *n == lhs.name)) {
            return Err(syntax(rpos, format!("cannot assign to `{}`", lhs.name)));
        }
        let op = match self.bump() {
            (Tok::Sym("="), _) => AssignOp::Set,
            (Tok::Sym("+="), _) => AssignOp::Add,
            (Tok::Sym("-="), _) => AssignOp::Sub,
            (Tok::Sym("*="), _) => AssignOp::Mul,
            (t, p) => return Err(syntax(p, format!("expected assignment, found {}", describe(&t)))),
        };
        let rhs = self.expr()?;
        self.expect(";")?;
        Ok(Stmt { label, lhs, op, rhs, pos })
    }

    /// Parses the brackets after `name` and checks the reference.
    fn reference(&mut self, name: String, pos: Pos) -> Result<Ref, FrontendError> {
        let mut indices = Vec::new();
        while self.is_sym("[") {
            self.bump();
            indices.push(self.expr()?);
            self.expect("]")?;
        }
        match self.arrays.iter().find(|a| a.name == name) {
            Some(a) => {
                if a.extents.len() != indices.len() {
                    return Err(FrontendError::new(
                        ErrorKind::Arity,
                        pos,
                        format!("array `{name}` has {} dimensions, {} subscripts given", a.extents.len(), indices.len()),
                    ));
                }
                for e in &indices {
                    affine(e, &self.scope, &self.consts)?;
                }
            }
            None if !indices.is_empty() => {
                return Err(FrontendError::new(ErrorKind::UndeclaredArray, pos, format!("undeclared array `{name}`")));
            }
            None => {}
        }
        Ok(Ref { name, indices, pos })
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.is_sym("+") {
                BinOp::Add
            } else if self.is_sym("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let pos = self.bump().1;
            let rhs = self.term()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos);
        }
    }

    fn term(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.is_sym("*") {
                BinOp::Mul
            } else if self.is_sym("/") {
                BinOp::Div
            } else if self.is_sym("%") {
                BinOp::Mod
            } else {
                return Ok(lhs);
            };
            let pos = self.bump().1;
            let rhs = self.unary()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos);
        }
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        if self.is_sym("-") {
            let pos = self.bump().1;
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Neg(Box::new(e)), pos));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        match self.bump() {
            (Tok::Int(v), p) => Ok(Expr::new(ExprKind::Num(v), p)),
            (Tok::Real(v), p) => Ok(Expr::new(ExprKind::Real(v), p)),
            (Tok::Sym("("), _) => {
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            (Tok::Ident(name), p) => {
                if self.is_sym("(") {
                    self.bump();
                    let mut args = Vec::new();
                    if !self.is_sym(")") {
                        args.push(self.expr()?);
                        while self.is_sym(",") {
                            self.bump();
                            args.push(self.expr()?);
                        }
                    }
                    self.expect(")")?;
                    return Ok(Expr::new(ExprKind::Call(name, args), p));
                }
                let is_array = self.arrays.iter().any(|a| a.name == name);
                if self.is_sym("[") || is_array {
                    let r = self.reference(name, p)?;
                    return Ok(Expr::new(ExprKind::Access(r), p));
                }
                Ok(Expr::new(ExprKind::Ident(name), p))
            }
            (t, p) => Err(syntax(p, format!("expected expression, found {}", describe(&t)))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Real(v) => format!("`{v}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses a program, applying `overrides` to `const` declarations.
pub fn parse_program_with(src: &str, overrides: &HashMap<String, i64>) -> Result<LoopNestAst, FrontendError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        at: 0,
        overrides,
        consts: Vec::new(),
        arrays: Vec::new(),
        scope: Vec::new(),
        labels: Vec::new(),
    };
    let body = p.program()?;
    if let Some(name) = overrides.keys().find(|k| p.consts.iter().all(|(n, _)| n != *k)) {
        return Err(syntax(Pos { line: 1, col: 1 }, format!("override for undeclared constant `{name}`")));
    }
    Ok(LoopNestAst { consts: p.consts, arrays: p.arrays, body })
}

pub fn parse_program(src: &str) -> Result<LoopNestAst, FrontendError> {
    parse_program_with(src, &HashMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    const RUNNING: &str = "
        array M[4] elem 4;
        for i = 0 .. 3 { S0: M[i] = i; }
        for j = 0 .. 3 { S1: x = M[3 - j]; }
    ";

    #[test]
    fn running_example_has_two_statements() {
        let ast = parse_program(RUNNING).unwrap();
        let st = ast.statements();
        assert_eq!(st.len(), 2);
        assert_eq!(st[0].label, "S0");
        assert_eq!(st[1].label, "S1");
    }

    #[test]
    fn empty_program() {
        let ast = parse_program("  # nothing\n").unwrap();
        assert!(ast.body.is_empty());
    }

    #[test]
    fn non_affine_subscript_is_rejected() {
        let err = parse_program("array M[16]; for i = 0 .. 3 { S: M[i*i] = 0; }").unwrap_err();
        assert_eq!(err.kind, ErrorKind::NonAffine);
        assert_eq!((err.pos.line, err.pos.col), (1, 37));
    }

    #[test]
    fn undeclared_and_arity() {
        let e = parse_program("for i = 0 .. 3 { S: Q[i] = 0; }").unwrap_err();
        assert_eq!(e.kind, ErrorKind::UndeclaredArray);
        let e = parse_program("array M[4][4]; for i = 0 .. 3 { S: M[i] = 0; }").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Arity);
    }

    #[test]
    fn syntax_error_position() {
        let e = parse_program("array M[4];\nfor i = 0 .. 3 {\n  S: M[i] = ;\n}").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Syntax);
        assert_eq!((e.pos.line, e.pos.col), (3, 13));
    }

    #[test]
    fn constants_and_overrides() {
        let src = "const N = 8; array A[N]; for i = 0 .. N - 1 { S: A[i] = 0; }";
        assert_eq!(parse_program(src).unwrap().constant("N"), Some(8));
        let mut o = HashMap::new();
        o.insert("N".to_string(), 32);
        let ast = parse_program_with(src, &o).unwrap();
        assert_eq!(ast.array("A").unwrap().extents, vec![32]);
    }

    #[test]
    fn compound_assignment_order() {
        let ast = parse_program("array C[4]; array A[4]; array B[4]; for i = 0 .. 3 { S: C[i] += A[i] * B[i]; }").unwrap();
        let s = ast.statements()[0];
        let names: Vec<_> = s
            .ordered_refs(&|n| ast.array(n).is_some())
            .into_iter()
            .map(|(r, k)| format!("{}{:?}", r.name, k))
            .collect();
        assert_eq!(names, vec!["CRead", "ARead", "BRead", "CWrite"]);
    }
}
