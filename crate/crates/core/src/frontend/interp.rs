//! Direct execution of the loop nest, used as an ordering oracle.

use super::ast::{LoopNestAst, Node};
use super::lower::affine;

/// Statement instances `(label, loop values)` in execution order.
pub fn execution_order(ast: &LoopNestAst) -> Vec<(String, Vec<i64>)> {
    fn run(ast: &LoopNestAst, nodes: &[Node], scope: &mut Vec<String>, vals: &mut Vec<i64>, out: &mut Vec<(String, Vec<i64>)>) {
        for n in nodes {
            match n {
                Node::Stmt(s) => out.push((s.label.clone(), vals.clone())),
                Node::Loop(l) => {
                    let lo = affine(&l.lo, scope, &ast.consts).expect("checked by the parser").eval(vals);
                    let hi = affine(&l.hi, scope, &ast.consts).expect("checked by the parser").eval(vals);
                    scope.push(l.var.clone());
                    for v in lo..=hi {
                        vals.push(v);
                        run(ast, &l.body, scope, vals, out);
                        vals.pop();
                    }
                    scope.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    run(ast, &ast.body, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}
