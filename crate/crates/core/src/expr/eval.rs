use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};

use super::{rational_pow, ratio_to_f64, Expr, Node};

/// Arithmetic used when evaluating expressions at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    #[default]
    Float64,
    ExactRational,
}

/// Value produced by [`Expr::eval`].
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Float(f64),
    Exact(BigRational),
}

impl Scalar {
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Float(v) => *v,
            Scalar::Exact(r) => ratio_to_f64(r),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Float(v) => *v == 0.0,
            Scalar::Exact(r) => r.is_zero(),
        }
    }
}

/// A point of the chart with exact rational coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint {
    coords: [BigRational; 3],
    approx: [f64; 3],
}

impl ChartPoint {
    pub fn new(coords: [BigRational; 3]) -> Self {
        let approx = std::array::from_fn(|i| ratio_to_f64(&coords[i]));
        ChartPoint { coords, approx }
    }

    /// Exact binary value of each `f64` coordinate.
    pub fn from_f64(p: [f64; 3]) -> Option<Self> {
        let mut coords: [BigRational; 3] = std::array::from_fn(|_| BigRational::zero());
        for (c, v) in coords.iter_mut().zip(p) {
            *c = BigRational::from_f64(v)?;
        }
        Some(ChartPoint { coords, approx: p })
    }

    pub fn from_ints(p: [i64; 3]) -> Self {
        Self::new(p.map(|v| BigRational::from_integer(BigInt::from(v))))
    }

    /// Parses decimal strings such as `"0.1"`, `"-3"`, `"2/7"` or `"1e-3"`
    /// into exact rationals.
    pub fn from_decimal_strs(p: [&str; 3]) -> Result<Self, EvalError> {
        let mut coords: [BigRational; 3] = std::array::from_fn(|_| BigRational::zero());
        for (c, s) in coords.iter_mut().zip(p) {
            *c = parse_decimal(s).ok_or_else(|| EvalError::BadCoordinate(s.to_string()))?;
        }
        Ok(Self::new(coords))
    }

    pub fn coords(&self) -> &[BigRational; 3] {
        &self.coords
    }

    pub fn approx(&self) -> [f64; 3] {
        self.approx
    }
}

/// Exact rational parsed from a decimal, scientific or `p/q` literal.
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n)?;
        let d = parse_decimal(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(digits.parse::<BigInt>().ok()?);
    let scale = exp - frac_part.len() as i32;
    value *= rational_pow(&BigRational::from_integer(BigInt::from(10)), scale);
    Some(if neg { -value } else { value })
}

/// Resource limits for exact evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactLimits {
    /// Maximum decimal digits of numerator or denominator of any
    /// intermediate result.
    pub max_digits: u64,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits { max_digits: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero during exact evaluation")]
    DivisionByZero,
    #[error("`{0}` cannot be evaluated in exact rational mode")]
    Transcendental(&'static str),
    #[error("intermediate rational exceeds {max_digits} digits")]
    DigitBudgetExceeded { max_digits: u64 },
    #[error("invalid coordinate literal `{0}`")]
    BadCoordinate(String),
    #[error("point {0:?} has no exact rational representation")]
    NotFinite([f64; 3]),
}

fn check_size(r: &BigRational, limits: &ExactLimits) -> Result<(), EvalError> {
    let bits = r.numer().bits().max(r.denom().bits());
    // log2(10) ~ 3.3219
    let max_bits = (limits.max_digits as f64 * 3.3219280948873626).ceil() as u64;
    if bits > max_bits {
        Err(EvalError::DigitBudgetExceeded { max_digits: limits.max_digits })
    } else {
        Ok(())
    }
}

impl Expr {
    /// Plain `f64` evaluation.
    pub fn eval_f64(&self, p: [f64; 3]) -> f64 {
        match self.node() {
            Node::Var(v) => p[v.index()],
            Node::Const(c) => c.approx(),
            Node::Sum(ts) => ts.iter().map(|t| t.eval_f64(p)).sum(),
            Node::Product(fs) => fs.iter().map(|t| t.eval_f64(p)).product(),
            Node::Pow(b, n) => b.eval_f64(p).powi(*n),
            Node::Neg(b) => -b.eval_f64(p),
            Node::Sin(b) => b.eval_f64(p).sin(),
            Node::Cos(b) => b.eval_f64(p).cos(),
            Node::Exp(b) => b.eval_f64(p).exp(),
        }
    }

    /// Exact rational evaluation. Fails on transcendental nodes, division by
    /// zero, or when an intermediate exceeds the digit budget.
    pub fn eval_exact(&self, p: &ChartPoint, limits: &ExactLimits) -> Result<BigRational, EvalError> {
        let out = match self.node() {
            Node::Var(v) => return Ok(p.coords[v.index()].clone()),
            Node::Const(c) => return Ok(c.exact().clone()),
            Node::Sum(ts) => {
                let mut acc = BigRational::zero();
                for t in ts {
                    acc += t.eval_exact(p, limits)?;
                }
                acc
            }
            Node::Product(fs) => {
                let mut acc = BigRational::one();
                for f in fs {
                    let v = f.eval_exact(p, limits)?;
                    if v.is_zero() {
                        acc = v;
                        // remaining factors still need to be defined
                        for g in fs {
                            g.eval_exact(p, limits)?;
                        }
                        break;
                    }
                    acc *= v;
                    check_size(&acc, limits)?;
                }
                acc
            }
            Node::Pow(b, n) => {
                let v = b.eval_exact(p, limits)?;
                if v.is_zero() && *n < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                let bits = v.numer().bits().max(v.denom().bits());
                let est_digits = (bits as f64 * n.unsigned_abs() as f64) / 3.3219280948873626;
                if est_digits > limits.max_digits as f64 {
                    return Err(EvalError::DigitBudgetExceeded { max_digits: limits.max_digits });
                }
                rational_pow(&v, *n)
            }
            Node::Neg(b) => -b.eval_exact(p, limits)?,
            Node::Sin(_) => return Err(EvalError::Transcendental("sin")),
            Node::Cos(_) => return Err(EvalError::Transcendental("cos")),
            Node::Exp(_) => return Err(EvalError::Transcendental("exp")),
        };
        check_size(&out, limits)?;
        Ok(out)
    }

    /// Evaluation in the requested arithmetic.
    pub fn eval(&self, mode: EvalMode, p: &ChartPoint) -> Result<Scalar, EvalError> {
        match mode {
            EvalMode::Float64 => Ok(Scalar::Float(self.eval_f64(p.approx()))),
            EvalMode::ExactRational => {
                self.eval_exact(p, &ExactLimits::default()).map(Scalar::Exact)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    #[test]
    fn exact_and_float_agree_on_polynomials() {
        let e = parse_expr("x^3*y/6 - x^2*z + 1/7").unwrap();
        let p = ChartPoint::from_decimal_strs(["0.5", "-1.25", "2"]).unwrap();
        let exact = e.eval_exact(&p, &ExactLimits::default()).unwrap();
        let float = e.eval_f64(p.approx());
        assert!((ratio_to_f64(&exact) - float).abs() < 1e-14);
    }

    #[test]
    fn exact_mode_rejects_transcendentals_and_zero_division() {
        let p = ChartPoint::from_ints([0, 0, 0]);
        let e = parse_expr("sin(x) + 1").unwrap();
        assert_eq!(e.eval_exact(&p, &ExactLimits::default()), Err(EvalError::Transcendental("sin")));
        let d = parse_expr("1/x").unwrap();
        assert_eq!(d.eval_exact(&p, &ExactLimits::default()), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn digit_budget_is_enforced() {
        let e = parse_expr("(x + 1/3)^200").unwrap();
        let p = ChartPoint::from_ints([1, 0, 0]);
        let tight = ExactLimits { max_digits: 20 };
        assert!(matches!(e.eval_exact(&p, &tight), Err(EvalError::DigitBudgetExceeded { .. })));
        assert!(e.eval_exact(&p, &ExactLimits::default()).is_ok());
    }

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(parse_decimal("0.1").unwrap(), BigRational::new(1.into(), 10.into()));
        assert_eq!(parse_decimal("-2.5e-1").unwrap(), BigRational::new((-1).into(), 4.into()));
        assert_eq!(parse_decimal("3/4").unwrap(), BigRational::new(3.into(), 4.into()));
        assert!(parse_decimal("abc").is_none());
        assert!(parse_decimal("1/0").is_none());
    }
}
