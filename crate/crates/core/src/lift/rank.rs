use std::fmt;

use super::linalg::scalar_rank;
use super::{value, vanishes, LiftError};
use crate::contact::{ContactData, VectorField};
use crate::expr::{ChartPoint, Expr, Scalar, Var};
use crate::magnetic::MagneticScenario;

/// Step set predicted from the rank of `(dβ₁, dβ₂)` on the zero locus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredictedStep {
    Four,
    FourOrFive,
    AtLeastFive,
}

impl fmt::Display for PredictedStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredictedStep::Four => "{4}",
            PredictedStep::FourOrFive => "{4,5}",
            PredictedStep::AtLeastFive => "{>=5}",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankReport {
    pub point: ChartPoint,
    pub rank: usize,
    /// `matrix[j-1] = [X₁β_j, X₂β_j, X₀β_j]`.
    pub matrix: [[Scalar; 3]; 2],
    pub predicted: PredictedStep,
    /// For rank 1: the index `i` with `dβ_i(p) ≠ 0` defining `Σ = β_i⁻¹(0)`.
    pub surface_index: Option<usize>,
    /// For rank 1: whether `p` is a characteristic point of `Σ`.
    pub characteristic: Option<bool>,
    /// For rank 1: 4 or 5.
    pub refined_step: Option<u32>,
    /// Rank 1 is carried by the `X₀` column alone, so both `dβ_i` vanish on
    /// the horizontal distribution.
    pub reeb_only: bool,
}

/// Rank of `(dβ₁, dβ₂)` at a zero-locus point and the step it predicts.
pub fn rank_classify(s: &MagneticScenario, p: &ChartPoint) -> Result<RankReport, LiftError> {
    let data = &s.data;
    let betas = [&s.field.b1, &s.field.b2];
    let bvals = [value(betas[0], p)?, value(betas[1], p)?];
    if !bvals.iter().all(vanishes) {
        return Err(LiftError::NotInZeroLocus(bvals[0].to_f64().hypot(bvals[1].to_f64())));
    }
    let entry = |j: usize, col: usize| -> Result<Scalar, LiftError> {
        let frame_index = [1, 2, 0][col];
        value(&data.frame[frame_index].apply(betas[j]), p)
    };
    let matrix = [
        [entry(0, 0)?, entry(0, 1)?, entry(0, 2)?],
        [entry(1, 0)?, entry(1, 1)?, entry(1, 2)?],
    ];
    let rank = scalar_rank(&matrix.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
    let mut report = RankReport {
        point: p.clone(),
        rank,
        predicted: match rank {
            2 => PredictedStep::Four,
            1 => PredictedStep::FourOrFive,
            _ => PredictedStep::AtLeastFive,
        },
        matrix,
        surface_index: None,
        characteristic: None,
        refined_step: None,
        reeb_only: false,
    };
    if rank == 1 {
        let nonzero = |r: &[Scalar; 3]| r.iter().any(|v| !vanishes(v));
        let i = if nonzero(&report.matrix[0]) { 0 } else { 1 };
        let horizontal = report.matrix[i][..2].iter().any(|v| !vanishes(v));
        report.surface_index = Some(i + 1);
        report.characteristic = Some(!horizontal);
        report.refined_step = Some(if horizontal { 4 } else { 5 });
        report.reeb_only = !horizontal;
    }
    Ok(report)
}

/// Whether `p` is a characteristic point of the surface `f = 0`:
/// `X₁f(p) = X₂f(p) = 0`.
pub fn is_characteristic_point(data: &ContactData, f: &Expr, p: &ChartPoint) -> Result<bool, LiftError> {
    let fv = value(f, p)?;
    if !vanishes(&fv) {
        return Err(LiftError::NotOnSurface(fv.to_f64()));
    }
    let mut regular = false;
    for v in Var::ALL {
        regular |= !vanishes(&value(&f.d(v), p)?);
    }
    if !regular {
        return Err(LiftError::NonRegular);
    }
    Ok(vanishes(&value(&data.x1().apply(f), p)?) && vanishes(&value(&data.x2().apply(f), p)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceClass {
    OffSurface,
    Regular,
    Characteristic,
}

impl fmt::Display for SurfaceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SurfaceClass::OffSurface => "off-surface",
            SurfaceClass::Regular => "non-characteristic",
            SurfaceClass::Characteristic => "characteristic",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfacePrediction {
    pub class: SurfaceClass,
    pub step: u32,
    pub f_value: Scalar,
    /// `V₁f(p)` with `V₁ = b₁X₁ + b₂X₂`.
    pub v1f_value: Scalar,
}

/// Predicted step for `β = (fⁿ/n!)(b₁, b₂)`: 3 off `Σ = f⁻¹(0)`, `n + 3` on
/// `Σ` away from its characteristic points and `2n + 3` at them.
pub fn surface_family_predict(
    data: &ContactData,
    f: &Expr,
    b1: &Expr,
    b2: &Expr,
    n: u32,
    p: &ChartPoint,
) -> Result<SurfacePrediction, LiftError> {
    if n == 0 {
        return Err(LiftError::BadExponent);
    }
    let v1 = VectorField::combination(&[(b1.clone(), data.x1()), (b2.clone(), data.x2())]);
    let v2 = VectorField::combination(&[(Expr::neg(b2.clone()), data.x1()), (b1.clone(), data.x2())]);
    let div_v2 = data.divergence_of_frame_combination(&Expr::zero(), &Expr::neg(b2.clone()), b1);
    let identity = Expr::sum([
        v2.apply(f),
        Expr::product([div_v2, f.clone(), Expr::ratio(1, n as i64)]),
    ]);
    if !identity.is_identically_zero() {
        return Err(LiftError::ClosednessIdentity);
    }
    let bsq = Expr::sum([Expr::product([b1.clone(), b1.clone()]), Expr::product([b2.clone(), b2.clone()])]);
    if vanishes(&value(&bsq, p)?) {
        return Err(LiftError::DegenerateDirection);
    }
    let f_value = value(f, p)?;
    let v1f_value = value(&v1.apply(f), p)?;
    let class = if !vanishes(&f_value) {
        SurfaceClass::OffSurface
    } else {
        if Var::ALL.iter().all(|v| value(&f.d(*v), p).map(|x| vanishes(&x)).unwrap_or(false)) {
            return Err(LiftError::NonRegular);
        }
        if vanishes(&v1f_value) {
            SurfaceClass::Characteristic
        } else {
            SurfaceClass::Regular
        }
    };
    let step = match class {
        SurfaceClass::OffSurface => 3,
        SurfaceClass::Regular => n + 3,
        SurfaceClass::Characteristic => 2 * n + 3,
    };
    Ok(SurfacePrediction { class, step, f_value, v1f_value })
}
