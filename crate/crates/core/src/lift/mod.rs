//! The lifted rank-two distribution on `M × R`: its frame, step, zero-locus
//! classification, normal flow and abnormal certificates.

mod abnormal;
mod flow;
mod frame;
mod linalg;
mod rank;
mod step;

pub use abnormal::{abnormal_certificate, CHARACTERISTIC_TOL, ZERO_LOCUS_TOL, AbnormalReport, HorizontalCurve, SampleClass, Segment};
pub use flow::{integrate_lifted_flow, LiftedState, LiftedTrajectory, LIFTED_HEADER};
pub use frame::{build_lift, f_frame_splitting, FrameSplitting, LiftedField, LiftedFrame};
pub use linalg::{exact_rank, float_rank, RANK_THRESHOLD};
pub use rank::{
    is_characteristic_point, rank_classify, surface_family_predict, PredictedStep, RankReport, SurfaceClass,
    SurfacePrediction,
};
pub use step::{
    derivative_word_value, step_via_brackets, step_via_derivatives, BracketTower, DerivativeTower, StepMethod, StepReport,
    StepValue,
};

use crate::contact::{sample_value, BigRationalOrFloat};
use crate::expr::{ChartPoint, EvalError, Expr, Scalar};

/// Values below this are treated as zero when a quantity cannot be evaluated
/// exactly.
pub const ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LiftError {
    #[error("the lift needs a magnetic potential A")]
    MissingPotential,
    #[error("[Y1,Y2] = c12^1 Y1 + c12^2 Y2 + Y0 fails; residual component {component}")]
    BracketIdentity { component: usize },
    #[error("budget {0} is outside 3..={max}", max = MAX_BUDGET)]
    BadBudget(u32),
    #[error("point is not in the zero locus: |beta| = {0:e}")]
    NotInZeroLocus(f64),
    #[error("point is not on the surface: f = {0:e}")]
    NotOnSurface(f64),
    #[error("surface is not regular at the point")]
    NonRegular,
    #[error("b1^2 + b2^2 vanishes at the point")]
    DegenerateDirection,
    #[error("V2 f + div(V2) f / n does not vanish identically")]
    ClosednessIdentity,
    #[error("surface exponent must be at least 1")]
    BadExponent,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Largest step searched by either step method.
pub const MAX_BUDGET: u32 = crate::expr::DEFAULT_MAX_DERIVATIVE_ORDER as u32 + 3;

pub(crate) fn value(e: &Expr, p: &ChartPoint) -> Result<Scalar, LiftError> {
    Ok(match sample_value(e, p)? {
        BigRationalOrFloat::Exact(r) => Scalar::Exact(r),
        BigRationalOrFloat::Float(v) => {
            if !v.is_finite() {
                return Err(LiftError::Eval(EvalError::NotFinite(p.approx())));
            }
            Scalar::Float(v)
        }
    })
}

/// Exact zero, or `|v| ≤ ZERO_TOL` for float values.
pub(crate) fn vanishes(v: &Scalar) -> bool {
    match v {
        Scalar::Exact(_) => v.is_zero(),
        Scalar::Float(f) => f.abs() <= ZERO_TOL,
    }
}
