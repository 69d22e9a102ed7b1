use super::{value, LiftError};
use crate::contact::{ContactData, VectorField};
use crate::expr::{ChartPoint, Expr, Scalar};
use crate::magnetic::MagneticScenario;
use crate::rumin::{da12, HOneForm, HTwoForm};

/// Vector field `V + w ∂w` on `M × R` whose coefficients do not depend on
/// `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedField {
    pub base: VectorField,
    pub w: Expr,
}

impl LiftedField {
    pub fn new(base: VectorField, w: Expr) -> Self {
        LiftedField { base, w: w.simplify() }
    }

    pub fn dw() -> Self {
        LiftedField { base: VectorField::zero(), w: Expr::one() }
    }

    /// `([V, V′], V w′ − V′ w)`.
    pub fn bracket(&self, other: &LiftedField) -> LiftedField {
        LiftedField {
            base: self.base.bracket(&other.base),
            w: Expr::sub(self.base.apply(&other.w), other.base.apply(&self.w)).simplify(),
        }
    }

    pub fn scaled(&self, f: &Expr) -> LiftedField {
        LiftedField { base: self.base.scaled(f), w: Expr::product([f.clone(), self.w.clone()]).simplify() }
    }

    pub fn add(&self, other: &LiftedField) -> LiftedField {
        LiftedField { base: self.base.add(&other.base), w: Expr::sum([self.w.clone(), other.w.clone()]).simplify() }
    }

    pub fn sub(&self, other: &LiftedField) -> LiftedField {
        self.add(&other.scaled(&Expr::int(-1)))
    }

    /// Components in `∂x, ∂y, ∂z, ∂w` order.
    pub fn components(&self) -> [&Expr; 4] {
        [&self.base.0[0], &self.base.0[1], &self.base.0[2], &self.w]
    }

    pub fn is_identically_zero(&self) -> bool {
        self.base.is_identically_zero() && self.w.is_identically_zero()
    }

    pub fn identically_equal(&self, other: &LiftedField) -> bool {
        self.sub(other).is_identically_zero()
    }

    pub fn eval(&self, p: &ChartPoint) -> Result<Vec<Scalar>, LiftError> {
        self.components().iter().map(|e| value(e, p)).collect()
    }

    pub fn eval_f64(&self, p: [f64; 3]) -> [f64; 4] {
        let c = self.components();
        std::array::from_fn(|i| c[i].eval_f64(p))
    }
}

/// Frame `Y₁, Y₂, Y₀` of the lifted distribution and its complement.
#[derive(Clone, Debug)]
pub struct LiftedFrame {
    pub y1: LiftedField,
    pub y2: LiftedField,
    pub y0: LiftedField,
    /// `dA(X₁, X₂)`, the `∂w` coefficient of `Y₀`.
    pub da12: Expr,
    pub potential: HOneForm,
}

impl LiftedFrame {
    /// `[Y₁, Y₂, Y₀]` indexed by frame index `0 = Y₀`.
    pub fn field(&self, i: usize) -> &LiftedField {
        match i {
            0 => &self.y0,
            1 => &self.y1,
            2 => &self.y2,
            _ => panic!("frame index {i} out of range"),
        }
    }

    /// Coefficients `(a₁, a₂, a₀, a_w)` of `V = a₁Y₁ + a₂Y₂ + a₀Y₀ + a_w∂w`.
    pub fn decompose(&self, data: &ContactData, v: &LiftedField) -> [Expr; 4] {
        let [a0, a1, a2] = data.frame_coefficients(&v.base);
        let aw = Expr::sum([
            v.w.clone(),
            Expr::neg(Expr::product([a1.clone(), self.potential.a1.clone()])),
            Expr::neg(Expr::product([a2.clone(), self.potential.a2.clone()])),
            Expr::neg(Expr::product([a0.clone(), self.da12.clone()])),
        ])
        .simplify();
        [a1, a2, a0, aw]
    }
}

/// Builds `Y_i = X_i + A_i ∂w` and `Y₀ = X₀ + dA(X₁,X₂) ∂w`, checking
/// `[Y₁, Y₂] = c₁₂¹Y₁ + c₁₂²Y₂ + Y₀`.
pub fn build_lift(s: &MagneticScenario) -> Result<LiftedFrame, LiftError> {
    let a = s.potential.as_ref().ok_or(LiftError::MissingPotential)?;
    let data = &s.data;
    let da = da12(a, data);
    let frame = LiftedFrame {
        y1: LiftedField::new(data.x1().clone(), a.a1.clone()),
        y2: LiftedField::new(data.x2().clone(), a.a2.clone()),
        y0: LiftedField::new(data.x0().clone(), da.clone()),
        da12: da,
        potential: a.clone(),
    };
    let lhs = frame.y1.bracket(&frame.y2);
    let rhs = frame.y1.scaled(data.c(1, 2, 1)).add(&frame.y2.scaled(data.c(1, 2, 2))).add(&frame.y0);
    let diff = lhs.sub(&rhs);
    if let Some(component) = diff.components().iter().position(|e| !e.is_identically_zero()) {
        return Err(LiftError::BracketIdentity { component });
    }
    Ok(frame)
}

/// Decompositions of `[F₁, Y₀]` and `[F₂, Y₀]` for `F₁ = β₁Y₁ + β₂Y₂`,
/// `F₂ = −β₂Y₁ + β₁Y₂`, as `(a₁, a₂, a₀, a_w)`.
#[derive(Clone, Debug)]
pub struct FrameSplitting {
    pub f1: [Expr; 4],
    pub f2: [Expr; 4],
    beta_sq: Expr,
}

impl FrameSplitting {
    /// `[F₁, Y₀] ≡ |β|² ∂w` and `[F₂, Y₀] ≡ 0` modulo the lifted distribution.
    pub fn holds(&self) -> bool {
        self.f1[2].is_identically_zero()
            && Expr::sub(self.f1[3].clone(), self.beta_sq.clone()).is_identically_zero()
            && self.f2[2].is_identically_zero()
            && self.f2[3].is_identically_zero()
    }
}

pub fn f_frame_splitting(lift: &LiftedFrame, data: &ContactData, beta: &HTwoForm) -> FrameSplitting {
    let f1 = lift.y1.scaled(&beta.b1).add(&lift.y2.scaled(&beta.b2));
    let f2 = lift.y2.scaled(&beta.b1).sub(&lift.y1.scaled(&beta.b2));
    FrameSplitting {
        f1: lift.decompose(data, &f1.bracket(&lift.y0)),
        f2: lift.decompose(data, &f2.bracket(&lift.y0)),
        beta_sq: Expr::sum([
            Expr::product([beta.b1.clone(), beta.b1.clone()]),
            Expr::product([beta.b2.clone(), beta.b2.clone()]),
        ])
        .simplify(),
    }
}
