use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Expr, Node, Var};

/// Expanded polynomial in `x, y, z` with rational coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub(crate) struct Poly {
    terms: BTreeMap<[u32; 3], BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert([0, 0, 0], c);
        }
        p
    }

    pub fn var(v: Var) -> Self {
        let mut e = [0; 3];
        e[v.index()] = 1;
        let mut p = Poly::zero();
        p.terms.insert(e, BigRational::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_assign(&mut self, other: &Poly) {
        for (m, c) in &other.terms {
            let entry = self.terms.entry(*m).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                self.terms.remove(m);
            }
        }
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m = [m1[0] + m2[0], m1[1] + m2[1], m1[2] + m2[2]];
                let entry = out.terms.entry(m).or_insert_with(BigRational::zero);
                *entry += c1 * c2;
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    fn pow(&self, n: u32) -> Poly {
        let mut out = Poly::constant(BigRational::one());
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    fn negate(mut self) -> Poly {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }

    /// Expands a strict polynomial expression. Callers must check
    /// [`Expr::is_strict_polynomial`] first.
    pub fn from_expr(e: &Expr) -> Poly {
        match e.node() {
            Node::Var(v) => Poly::var(*v),
            Node::Const(c) => Poly::constant(c.exact().clone()),
            Node::Sum(ts) => {
                let mut acc = Poly::zero();
                for t in ts {
                    acc.add_assign(&Poly::from_expr(t));
                }
                acc
            }
            Node::Product(fs) => {
                let mut acc = Poly::constant(BigRational::one());
                for f in fs {
                    acc = acc.mul(&Poly::from_expr(f));
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            Node::Pow(b, n) => {
                debug_assert!(*n >= 0);
                Poly::from_expr(b).pow(*n as u32)
            }
            Node::Neg(b) => Poly::from_expr(b).negate(),
            Node::Sin(_) | Node::Cos(_) | Node::Exp(_) => {
                unreachable!("transcendental node in polynomial expansion")
            }
        }
    }

    /// Monomials ordered by descending total degree, then lexicographically
    /// descending in `(x, y, z)`.
    pub fn to_expr(&self) -> Expr {
        let mut monos: Vec<(&[u32; 3], &BigRational)> = self.terms.iter().collect();
        monos.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        Expr::sum(monos.into_iter().map(|(m, c)| {
            let mut factors = vec![Expr::constant(c.clone())];
            for v in Var::ALL {
                let k = m[v.index()];
                if k > 0 {
                    factors.push(Expr::pow(Expr::var(v), k as i32));
                }
            }
            Expr::product(factors)
        }))
    }
}
