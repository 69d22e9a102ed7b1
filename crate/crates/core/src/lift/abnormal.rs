use std::fmt;

use crate::magnetic::{step_count, CharacteristicTrajectory, FlowError, MagneticScenario, Trajectory};
use crate::numeric::rk4_step;

/// Characteristic samples need `|b(γ̇)| ≤ CHARACTERISTIC_TOL · |β| · |γ̇|`.
pub const CHARACTERISTIC_TOL: f64 = 1e-8;
/// Samples with `|β| ≤ ZERO_LOCUS_TOL` lie in the zero locus.
pub const ZERO_LOCUS_TOL: f64 = 1e-10;

/// Sampled horizontal curve with frame velocity components.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizontalCurve {
    pub t: Vec<f64>,
    pub points: Vec<[f64; 3]>,
    pub u: Vec<[f64; 2]>,
}

impl From<&Trajectory> for HorizontalCurve {
    fn from(tr: &Trajectory) -> Self {
        HorizontalCurve { t: tr.t.clone(), points: tr.points(), u: tr.u.clone() }
    }
}

impl From<&CharacteristicTrajectory> for HorizontalCurve {
    fn from(tr: &CharacteristicTrajectory) -> Self {
        HorizontalCurve { t: tr.t.clone(), points: tr.points.clone(), u: tr.u.clone() }
    }
}

impl HorizontalCurve {
    /// Concatenation of curves with constant frame controls `(u₁, u₂)`, each
    /// held for its duration. At a junction the sample carries the control
    /// of the segment that starts there.
    pub fn from_controls(
        s: &MagneticScenario,
        p0: [f64; 3],
        controls: &[([f64; 2], f64)],
        dt: f64,
    ) -> Result<Self, FlowError> {
        if !p0.iter().all(|v| v.is_finite()) {
            return Err(FlowError::BadInit);
        }
        let mut curve = HorizontalCurve { t: vec![0.0], points: vec![p0], u: Vec::new() };
        let (mut p, mut t0) = (p0, 0.0);
        for (u, duration) in controls {
            curve.u.pop();
            curve.u.push(*u);
            let n = step_count(*duration, dt)?;
            let field = |y: &[f64; 3]| -> [f64; 3] {
                let v = s.at(*y);
                let (x1, x2) = (v.x(1), v.x(2));
                std::array::from_fn(|c| u[0] * x1[c] + u[1] * x2[c])
            };
            for step in 1..=n {
                p = rk4_step(&p, dt, &field);
                if !p.iter().all(|v| v.is_finite()) {
                    return Err(FlowError::NonFinite { t: t0 + step as f64 * dt });
                }
                curve.t.push(t0 + step as f64 * dt);
                curve.points.push(p);
                curve.u.push(*u);
            }
            t0 += n as f64 * dt;
        }
        if curve.u.is_empty() {
            curve.u.push([0.0, 0.0]);
        }
        Ok(curve)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleClass {
    /// `β ≠ 0` and `γ̇` is characteristic: `b(γ̇) = 0`.
    Characteristic,
    ZeroLocus,
    Violating,
}

impl fmt::Display for SampleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleClass::Characteristic => "characteristic",
            SampleClass::ZeroLocus => "zero-locus",
            SampleClass::Violating => "violating",
        })
    }
}

/// Maximal run of samples with the same class.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub class: SampleClass,
    /// Inclusive sample index range.
    pub start: usize,
    pub end: usize,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbnormalReport {
    pub classes: Vec<SampleClass>,
    /// `b(γ̇) = β₁u₁ + β₂u₂` per sample.
    pub b: Vec<f64>,
    pub beta_norm: Vec<f64>,
    pub segments: Vec<Segment>,
    pub passed: bool,
    /// `max |b| / (|β| |γ̇|)` over samples off the zero locus.
    pub margin: f64,
    pub first_violation: Option<usize>,
}

/// Certifies a horizontal curve as a concatenation of characteristic arcs
/// and arcs in the zero locus of `β`.
pub fn abnormal_certificate(s: &MagneticScenario, curve: &HorizontalCurve) -> AbnormalReport {
    let n = curve.points.len();
    let mut report = AbnormalReport {
        classes: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
        beta_norm: Vec::with_capacity(n),
        segments: Vec::new(),
        passed: true,
        margin: 0.0,
        first_violation: None,
    };
    for (i, (p, u)) in curve.points.iter().zip(&curve.u).enumerate() {
        let beta = s.beta_at(*p);
        let norm = beta[0].hypot(beta[1]);
        let speed = u[0].hypot(u[1]);
        let b = beta[0] * u[0] + beta[1] * u[1];
        let class = if norm <= ZERO_LOCUS_TOL {
            SampleClass::ZeroLocus
        } else {
            let ratio = if speed > 0.0 { b.abs() / (norm * speed) } else { 0.0 };
            report.margin = report.margin.max(ratio);
            if b.abs() <= CHARACTERISTIC_TOL * norm * speed {
                SampleClass::Characteristic
            } else {
                SampleClass::Violating
            }
        };
        if class == SampleClass::Violating && report.first_violation.is_none() {
            report.first_violation = Some(i);
            report.passed = false;
        }
        match report.segments.last_mut() {
            Some(seg) if seg.class == class => {
                seg.end = i;
                seg.t_end = curve.t[i];
            }
            _ => report.segments.push(Segment { class, start: i, end: i, t_start: curve.t[i], t_end: curve.t[i] }),
        }
        report.classes.push(class);
        report.b.push(b);
        report.beta_norm.push(norm);
    }
    report
}
