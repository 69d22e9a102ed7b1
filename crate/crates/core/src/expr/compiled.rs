//! Flat postfix programs for fast repeated `f64` evaluation.

use super::{Expr, Node};

#[derive(Clone, Debug, PartialEq)]
enum Op {
    Var(u8),
    Const(f64),
    Add(u32),
    Mul(u32),
    Powi(i32),
    Neg,
    Sin,
    Cos,
    Exp,
}

/// A batch of expressions compiled to postfix code sharing one evaluation
/// stack.
#[derive(Clone, Debug)]
pub struct CompiledSet {
    ops: Vec<Op>,
    /// End offset into `ops` of each expression's program.
    ends: Vec<usize>,
    max_depth: usize,
}

fn emit(e: &Expr, ops: &mut Vec<Op>, depth: usize, max_depth: &mut usize) {
    *max_depth = (*max_depth).max(depth + 1);
    match e.node() {
        Node::Var(v) => ops.push(Op::Var(v.index() as u8)),
        Node::Const(c) => ops.push(Op::Const(c.approx())),
        Node::Sum(ts) | Node::Product(ts) => {
            for (i, t) in ts.iter().enumerate() {
                emit(t, ops, depth + i, max_depth);
            }
            let n = ts.len() as u32;
            ops.push(if matches!(e.node(), Node::Sum(_)) { Op::Add(n) } else { Op::Mul(n) });
        }
        Node::Pow(b, n) => {
            emit(b, ops, depth, max_depth);
            ops.push(Op::Powi(*n));
        }
        Node::Neg(b) | Node::Sin(b) | Node::Cos(b) | Node::Exp(b) => {
            emit(b, ops, depth, max_depth);
            ops.push(match e.node() {
                Node::Neg(_) => Op::Neg,
                Node::Sin(_) => Op::Sin,
                Node::Cos(_) => Op::Cos,
                _ => Op::Exp,
            });
        }
    }
}

impl CompiledSet {
    pub fn new(exprs: &[Expr]) -> Self {
        let mut ops = Vec::new();
        let mut ends = Vec::with_capacity(exprs.len());
        let mut max_depth = 1;
        for e in exprs {
            emit(e, &mut ops, 0, &mut max_depth);
            ends.push(ops.len());
        }
        CompiledSet { ops, ends, max_depth }
    }

    pub fn len(&self) -> usize {
        self.ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ends.is_empty()
    }

    /// Evaluates every expression at `p`, writing into `out`.
    pub fn eval_into(&self, p: [f64; 3], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.ends.len());
        let mut stack = Vec::with_capacity(self.max_depth);
        let mut start = 0;
        for (slot, &end) in out.iter_mut().zip(&self.ends) {
            stack.clear();
            for op in &self.ops[start..end] {
                match op {
                    Op::Var(i) => stack.push(p[*i as usize]),
                    Op::Const(c) => stack.push(*c),
                    Op::Add(n) => {
                        let k = stack.len() - *n as usize;
                        let s: f64 = stack[k..].iter().sum();
                        stack.truncate(k);
                        stack.push(s);
                    }
                    Op::Mul(n) => {
                        let k = stack.len() - *n as usize;
                        let s: f64 = stack[k..].iter().product();
                        stack.truncate(k);
                        stack.push(s);
                    }
                    Op::Powi(n) => {
                        let v = stack.last_mut().unwrap();
                        *v = v.powi(*n);
                    }
                    Op::Neg => {
                        let v = stack.last_mut().unwrap();
                        *v = -*v;
                    }
                    Op::Sin => {
                        let v = stack.last_mut().unwrap();
                        *v = v.sin();
                    }
                    Op::Cos => {
                        let v = stack.last_mut().unwrap();
                        *v = v.cos();
                    }
                    Op::Exp => {
                        let v = stack.last_mut().unwrap();
                        *v = v.exp();
                    }
                }
            }
            *slot = stack[0];
            start = end;
        }
    }

    pub fn eval(&self, p: [f64; 3]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(p, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    #[test]
    fn matches_tree_evaluation() {
        let srcs = ["x^3*y/6 - x^2*z", "sin(x)*exp(-y) + cos(z)^2", "1/(1 + x^2)", "-3"];
        let exprs: Vec<Expr> = srcs.iter().map(|s| parse_expr(s).unwrap()).collect();
        let set = CompiledSet::new(&exprs);
        let p = [0.3, -1.2, 0.7];
        let vals = set.eval(p);
        for (e, v) in exprs.iter().zip(vals) {
            assert_eq!(e.eval_f64(p), v);
        }
    }
}
