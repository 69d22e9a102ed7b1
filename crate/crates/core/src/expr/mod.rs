//! Symbolic scalar expressions over the chart coordinates `x`, `y`, `z`.
//!
//! An [`Expr`] is an immutable, reference-counted tree. Constructors apply a
//! small set of local rewrites (flattening, constant folding, dropping neutral
//! elements) so that repeated differentiation does not blow up, but no
//! canonical form is promised in general. Polynomial subtrees can be brought
//! to an expanded canonical form with [`Expr::simplify`], and identity of two
//! expressions is decided by [`Expr::is_identically_zero`].

mod compiled;
mod eval;
mod parse;
mod poly;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use compiled::CompiledSet;
pub use eval::{parse_decimal, ChartPoint, EvalError, EvalMode, ExactLimits, Scalar};
pub use parse::{parse_expr, ParseError, ParseErrorKind};
pub(crate) use poly::Poly;

/// Default cap on iterated differentiation order.
pub const DEFAULT_MAX_DERIVATIVE_ORDER: usize = 12;

/// A chart coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    Z,
}

impl Var {
    pub const ALL: [Var; 3] = [Var::X, Var::Y, Var::Z];

    pub fn index(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
            Var::Z => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
        }
    }
}

/// Rational constant with a cached `f64` approximation.
#[derive(Clone, Debug)]
pub struct Constant {
    exact: BigRational,
    approx: f64,
}

impl Constant {
    fn new(exact: BigRational) -> Self {
        let approx = ratio_to_f64(&exact);
        Constant { exact, approx }
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn approx(&self) -> f64 {
        self.approx
    }
}

impl PartialEq for Constant {
    fn eq(&self, other: &Self) -> bool {
        self.exact == other.exact
    }
}

/// Node kinds of the expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Var(Var),
    Const(Constant),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Expr, i32),
    Neg(Expr),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
}

/// Immutable symbolic expression. Cloning is cheap.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    r.to_f64().unwrap_or(f64::NAN)
}

impl Expr {
    fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn var(v: Var) -> Self {
        Self::from_node(Node::Var(v))
    }

    pub fn x() -> Self {
        Self::var(Var::X)
    }

    pub fn y() -> Self {
        Self::var(Var::Y)
    }

    pub fn z() -> Self {
        Self::var(Var::Z)
    }

    pub fn constant(r: BigRational) -> Self {
        Self::from_node(Node::Const(Constant::new(r)))
    }

    pub fn int(i: i64) -> Self {
        Self::constant(BigRational::from_integer(BigInt::from(i)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Self::constant(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn as_constant(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Const(c) => Some(&c.exact),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    /// Sum with flattening and constant folding. Constants end up first.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Self {
        let mut acc = BigRational::zero();
        let mut rest = Vec::new();
        for t in terms {
            push_sum_term(t, &mut acc, &mut rest);
        }
        match (acc.is_zero(), rest.len()) {
            (true, 0) => Expr::zero(),
            (false, 0) => Expr::constant(acc),
            (true, 1) => rest.pop().unwrap(),
            _ => {
                let mut all = Vec::with_capacity(rest.len() + 1);
                if !acc.is_zero() {
                    all.push(Expr::constant(acc));
                }
                all.extend(rest);
                Self::from_node(Node::Sum(all))
            }
        }
    }

    /// Product with flattening, constant folding and absorption of negations.
    /// A coefficient of `-1` is represented as a [`Node::Neg`] wrapper.
    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Self {
        let mut coef = BigRational::one();
        let mut rest = Vec::new();
        for f in factors {
            push_product_factor(f, &mut coef, &mut rest);
        }
        if coef.is_zero() {
            return Expr::zero();
        }
        if rest.is_empty() {
            return Expr::constant(coef);
        }
        let body = if rest.len() == 1 {
            rest.pop().unwrap()
        } else {
            Self::from_node(Node::Product(rest))
        };
        if coef.is_one() {
            body
        } else if coef == -BigRational::one() {
            Self::from_node(Node::Neg(body))
        } else {
            match body.node() {
                Node::Product(fs) => {
                    let mut all = Vec::with_capacity(fs.len() + 1);
                    all.push(Expr::constant(coef));
                    all.extend(fs.iter().cloned());
                    Self::from_node(Node::Product(all))
                }
                _ => Self::from_node(Node::Product(vec![Expr::constant(coef), body])),
            }
        }
    }

    pub fn neg(e: Expr) -> Self {
        Self::product([Expr::int(-1), e])
    }

    /// Integer power. `0^n` with `n < 0` is kept unevaluated so that
    /// evaluation reports the division by zero.
    pub fn pow(base: Expr, n: i32) -> Self {
        if n == 0 {
            return Expr::one();
        }
        if n == 1 {
            return base;
        }
        match base.node() {
            Node::Const(c) if !(c.exact.is_zero() && n < 0) => {
                Expr::constant(rational_pow(&c.exact, n))
            }
            Node::Pow(inner, m) => match m.checked_mul(n) {
                Some(k) => Expr::pow(inner.clone(), k),
                None => Self::from_node(Node::Pow(base, n)),
            },
            _ => Self::from_node(Node::Pow(base, n)),
        }
    }

    pub fn div(num: Expr, den: Expr) -> Self {
        Self::product([num, Expr::pow(den, -1)])
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Self::sum([a, Expr::neg(b)])
    }

    pub fn sin(e: Expr) -> Self {
        if e.is_zero() {
            return Expr::zero();
        }
        Self::from_node(Node::Sin(e))
    }

    pub fn cos(e: Expr) -> Self {
        if e.is_zero() {
            return Expr::one();
        }
        Self::from_node(Node::Cos(e))
    }

    pub fn exp(e: Expr) -> Self {
        if e.is_zero() {
            return Expr::one();
        }
        Self::from_node(Node::Exp(e))
    }

    pub fn scale(&self, c: BigRational) -> Self {
        Self::product([Expr::constant(c), self.clone()])
    }

    /// True iff the tree contains no `sin`/`cos`/`exp` node. Negative integer
    /// powers are allowed, so this is really "rational function".
    pub fn is_polynomial(&self) -> bool {
        match self.node() {
            Node::Var(_) | Node::Const(_) => true,
            Node::Sum(ts) | Node::Product(ts) => ts.iter().all(Expr::is_polynomial),
            Node::Pow(b, _) | Node::Neg(b) => b.is_polynomial(),
            Node::Sin(_) | Node::Cos(_) | Node::Exp(_) => false,
        }
    }

    /// True iff the tree is a polynomial in the strict sense: no
    /// transcendental nodes and no negative power of a non-constant.
    pub fn is_strict_polynomial(&self) -> bool {
        match self.node() {
            Node::Var(_) | Node::Const(_) => true,
            Node::Sum(ts) | Node::Product(ts) => ts.iter().all(Expr::is_strict_polynomial),
            Node::Pow(b, n) => *n >= 0 && b.is_strict_polynomial(),
            Node::Neg(b) => b.is_strict_polynomial(),
            Node::Sin(_) | Node::Cos(_) | Node::Exp(_) => false,
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Var(_) | Node::Const(_) => 1,
            Node::Sum(ts) | Node::Product(ts) => 1 + ts.iter().map(Expr::size).sum::<usize>(),
            Node::Pow(b, _) | Node::Neg(b) | Node::Sin(b) | Node::Cos(b) | Node::Exp(b) => {
                1 + b.size()
            }
        }
    }

    /// Exact partial derivative.
    pub fn differentiate(&self, v: Var) -> Expr {
        match self.node() {
            Node::Var(w) => {
                if *w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Const(_) => Expr::zero(),
            Node::Sum(ts) => Expr::sum(ts.iter().map(|t| t.differentiate(v))),
            Node::Product(fs) => {
                let mut terms = Vec::with_capacity(fs.len());
                for (i, fi) in fs.iter().enumerate() {
                    let d = fi.differentiate(v);
                    if d.is_zero() {
                        continue;
                    }
                    let mut factors: Vec<Expr> = Vec::with_capacity(fs.len());
                    factors.extend(fs[..i].iter().cloned());
                    factors.push(d);
                    factors.extend(fs[i + 1..].iter().cloned());
                    terms.push(Expr::product(factors));
                }
                Expr::sum(terms)
            }
            Node::Pow(b, n) => {
                let db = b.differentiate(v);
                if db.is_zero() {
                    return Expr::zero();
                }
                Expr::product([Expr::int(*n as i64), Expr::pow(b.clone(), n - 1), db])
            }
            Node::Neg(b) => Expr::neg(b.differentiate(v)),
            Node::Sin(b) => Expr::product([Expr::cos(b.clone()), b.differentiate(v)]),
            Node::Cos(b) => Expr::neg(Expr::product([Expr::sin(b.clone()), b.differentiate(v)])),
            Node::Exp(b) => Expr::product([self.clone(), b.differentiate(v)]),
        }
    }

    /// Partial derivative followed by [`Expr::simplify`].
    pub fn d(&self, v: Var) -> Expr {
        self.differentiate(v).simplify()
    }

    /// Brings strict-polynomial subtrees to expanded canonical form and
    /// recursively simplifies the rest.
    pub fn simplify(&self) -> Expr {
        if self.is_strict_polynomial() {
            return Poly::from_expr(self).to_expr();
        }
        match self.node() {
            Node::Var(_) | Node::Const(_) => self.clone(),
            Node::Sum(ts) => Expr::sum(ts.iter().map(Expr::simplify)),
            Node::Product(fs) => Expr::product(fs.iter().map(Expr::simplify)),
            Node::Pow(b, n) => Expr::pow(b.simplify(), *n),
            Node::Neg(b) => Expr::neg(b.simplify()),
            Node::Sin(b) => Expr::sin(b.simplify()),
            Node::Cos(b) => Expr::cos(b.simplify()),
            Node::Exp(b) => Expr::exp(b.simplify()),
        }
    }

    /// Decides whether the expression vanishes identically.
    ///
    /// Strict polynomials are decided exactly by expansion. Rational
    /// functions are evaluated exactly at random rational points (polynomial
    /// identity testing). Anything transcendental falls back to `f64`
    /// evaluation at random points with a relative tolerance of `1e-10`.
    pub fn is_identically_zero(&self) -> bool {
        let s = self.simplify();
        if s.is_zero() {
            return true;
        }
        if s.is_strict_polynomial() {
            return false;
        }
        identity::random_point_zero_test(&s)
    }

    pub fn identically_equal(&self, other: &Expr) -> bool {
        Expr::sub(self.clone(), other.clone()).is_identically_zero()
    }
}

fn push_sum_term(t: Expr, acc: &mut BigRational, rest: &mut Vec<Expr>) {
    match t.node() {
        Node::Const(c) => *acc += &c.exact,
        Node::Sum(ts) => {
            for s in ts {
                push_sum_term(s.clone(), acc, rest);
            }
        }
        _ => rest.push(t),
    }
}

fn push_product_factor(f: Expr, coef: &mut BigRational, rest: &mut Vec<Expr>) {
    match f.node() {
        Node::Const(c) => *coef *= &c.exact,
        Node::Product(fs) => {
            for g in fs {
                push_product_factor(g.clone(), coef, rest);
            }
        }
        Node::Neg(g) => {
            *coef = -coef.clone();
            push_product_factor(g.clone(), coef, rest);
        }
        _ => rest.push(f),
    }
}

pub(crate) fn rational_pow(r: &BigRational, n: i32) -> BigRational {
    let mut out = BigRational::one();
    let base = if n < 0 { r.recip() } else { r.clone() };
    let mut k = n.unsigned_abs();
    let mut b = base;
    while k > 0 {
        if k & 1 == 1 {
            out *= &b;
        }
        k >>= 1;
        if k > 0 {
            b = &b * &b;
        }
    }
    out
}

mod identity {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SEED: u64 = 0x5eed_1de7;
    const EXACT_POINTS: usize = 5;
    const FLOAT_POINTS: usize = 20;

    pub(super) fn random_point_zero_test(e: &Expr) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        if e.is_polynomial() {
            let mut tested = 0;
            let mut attempts = 0;
            while tested < EXACT_POINTS && attempts < 50 {
                attempts += 1;
                let p = ChartPoint::new(std::array::from_fn(|_| {
                    BigRational::new(
                        BigInt::from(rng.gen_range(-1000i64..=1000)),
                        BigInt::from(rng.gen_range(1i64..=97)),
                    )
                }));
                match e.eval_exact(&p, &ExactLimits::default()) {
                    Ok(v) => {
                        if !v.is_zero() {
                            return false;
                        }
                        tested += 1;
                    }
                    Err(_) => continue,
                }
            }
            tested > 0
        } else {
            for _ in 0..FLOAT_POINTS {
                let p: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.5..1.5));
                let v = e.eval_f64(p);
                let scale = e.abs_scale_f64(p).max(1.0);
                if !(v.abs() <= 1e-10 * scale) {
                    return false;
                }
            }
            true
        }
    }
}

impl Expr {
    /// Sum of absolute values of the terms at the top level, used as a
    /// magnitude scale for relative float tests.
    fn abs_scale_f64(&self, p: [f64; 3]) -> f64 {
        match self.node() {
            Node::Sum(ts) => ts.iter().map(|t| t.eval_f64(p).abs()).sum(),
            _ => self.eval_f64(p).abs(),
        }
    }
}

// ----- printing -------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Sum = 0,
    Product = 1,
    Unary = 2,
    Power = 3,
}

fn write_rational(f: &mut fmt::Formatter<'_>, r: &BigRational) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

impl Expr {
    fn write_prec(&self, f: &mut fmt::Formatter<'_>, ctx: Prec) -> fmt::Result {
        match self.node() {
            Node::Var(v) => f.write_str(v.name()),
            Node::Const(c) => {
                let r = &c.exact;
                let needs_paren = (r.is_negative() && ctx > Prec::Sum)
                    || (!r.is_integer() && ctx > Prec::Sum);
                if needs_paren {
                    f.write_str("(")?;
                    write_rational(f, r)?;
                    f.write_str(")")
                } else {
                    write_rational(f, r)
                }
            }
            Node::Sum(ts) => {
                let paren = ctx > Prec::Sum;
                if paren {
                    f.write_str("(")?;
                }
                for (i, t) in ts.iter().enumerate() {
                    if i == 0 {
                        t.write_prec(f, Prec::Sum)?;
                    } else if let Node::Neg(inner) = t.node() {
                        f.write_str(" - ")?;
                        inner.write_prec(f, Prec::Product)?;
                    } else {
                        f.write_str(" + ")?;
                        t.write_prec(f, Prec::Product)?;
                    }
                }
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Node::Product(fs) => {
                let paren = ctx > Prec::Product;
                if paren {
                    f.write_str("(")?;
                }
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("*")?;
                    }
                    g.write_prec(f, Prec::Unary)?;
                }
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Node::Pow(b, n) => {
                let paren = ctx > Prec::Power;
                if paren {
                    f.write_str("(")?;
                }
                match b.node() {
                    Node::Var(_) => b.write_prec(f, Prec::Power)?,
                    _ => {
                        f.write_str("(")?;
                        b.write_prec(f, Prec::Sum)?;
                        f.write_str(")")?;
                    }
                }
                if *n < 0 {
                    write!(f, "^({n})")?;
                } else {
                    write!(f, "^{n}")?;
                }
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Node::Neg(b) => {
                let paren = ctx > Prec::Sum;
                if paren {
                    f.write_str("(")?;
                }
                f.write_str("-")?;
                b.write_prec(f, Prec::Unary)?;
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Node::Sin(b) | Node::Cos(b) | Node::Exp(b) => {
                let name = match self.node() {
                    Node::Sin(_) => "sin",
                    Node::Cos(_) => "cos",
                    _ => "exp",
                };
                write!(f, "{name}(")?;
                b.write_prec(f, Prec::Sum)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, Prec::Sum)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

/// Iterated partial derivative `∂^order / ∂v^order`, bounded by `max_order`.
pub fn nth_derivative(
    e: &Expr,
    v: Var,
    order: usize,
    max_order: usize,
) -> Result<Expr, DerivativeBudgetExceeded> {
    if order > max_order {
        return Err(DerivativeBudgetExceeded { requested: order, max: max_order });
    }
    let mut out = e.simplify();
    for _ in 0..order {
        out = out.d(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("derivative order {requested} exceeds the configured budget {max}")]
pub struct DerivativeBudgetExceeded {
    pub requested: usize,
    pub max: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn constructors_fold_neutral_elements() {
        assert_eq!(Expr::sum([Expr::zero(), Expr::x()]), Expr::x());
        assert_eq!(Expr::product([Expr::one(), Expr::x()]), Expr::x());
        assert!(Expr::product([Expr::zero(), Expr::x()]).is_zero());
        assert_eq!(Expr::sum([Expr::int(2), Expr::int(3)]), Expr::int(5));
        assert_eq!(Expr::neg(Expr::neg(Expr::y())), Expr::y());
        assert_eq!(Expr::pow(Expr::ratio(2, 3), -2), Expr::ratio(9, 4));
    }

    #[test]
    fn derivative_of_half_square_is_x() {
        assert_eq!(p("x^2/2").d(Var::X), Expr::x());
        assert!(p("z - x*y/2").d(Var::Z).is_one());
    }

    #[test]
    fn transcendental_derivatives() {
        let e = p("sin(x)*exp(y)");
        let dx = e.d(Var::X);
        let pt = [0.3, -0.2, 0.0];
        assert!((dx.eval_f64(pt) - 0.3f64.cos() * (-0.2f64).exp()).abs() < 1e-15);
        let c = p("cos(x*y)").d(Var::Y);
        assert!((c.eval_f64(pt) + 0.3 * (-0.06f64).sin()).abs() < 1e-15);
    }

    #[test]
    fn nth_derivative_respects_budget() {
        let e = p("x^5");
        assert!(nth_derivative(&e, Var::X, 13, DEFAULT_MAX_DERIVATIVE_ORDER).is_err());
        let d5 = nth_derivative(&e, Var::X, 5, DEFAULT_MAX_DERIVATIVE_ORDER).unwrap();
        assert_eq!(d5, Expr::int(120));
    }

    #[test]
    fn identity_testing() {
        assert!(p("(x + y)^2 - x^2 - 2*x*y - y^2").is_identically_zero());
        assert!(!p("(x + y)^2 - x^2 - y^2").is_identically_zero());
        assert!(p("x/(1 + x^2) - x*(1 + x^2)^(-1)").is_identically_zero());
        assert!(p("sin(x)^2 + cos(x)^2 - 1").is_identically_zero());
        assert!(!p("sin(x)^2 - cos(x)^2").is_identically_zero());
    }

    #[test]
    fn polynomial_predicate() {
        assert!(p("x^2 + y/3").is_polynomial());
        assert!(p("1/(1 + x)").is_polynomial());
        assert!(!p("1/(1 + x)").is_strict_polynomial());
        assert!(!p("x*sin(y)").is_polynomial());
    }
}
