use std::cell::Cell;

use super::{step_count, FlowError, MagneticScenario};
use crate::numeric::rk4_step;

/// Options of [`characteristic_flow`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacteristicOptions {
    /// Follow `(−β₂X₁ + β₁X₂)/|β|` instead of the raw field.
    pub normalize: bool,
    /// Frame direction `(u₁, u₂)` used wherever `|β|` is below the threshold.
    /// Without it the integration halts on entering the zero locus.
    pub continuation: Option<[f64; 2]>,
    pub threshold: f64,
}

impl Default for CharacteristicOptions {
    fn default() -> Self {
        CharacteristicOptions { normalize: false, continuation: None, threshold: 1e-8 }
    }
}

/// Sampled characteristic curve with its certificate values.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicTrajectory {
    pub t: Vec<f64>,
    pub points: Vec<[f64; 3]>,
    /// Frame components of the velocity.
    pub u: Vec<[f64; 2]>,
    pub beta: Vec<[f64; 2]>,
    /// `b(γ̇) = β₁u₁ + β₂u₂`, the coefficient of `ι_γ̇β` along `ω`.
    pub certificate: Vec<f64>,
    /// Time at which `|β|` dropped below the threshold with no continuation.
    pub halted_at: Option<f64>,
}

fn direction(s: &MagneticScenario, p: [f64; 3], opts: &CharacteristicOptions) -> Option<[f64; 2]> {
    let [b1, b2] = s.beta_at(p);
    let norm = b1.hypot(b2);
    if norm < opts.threshold {
        return opts.continuation;
    }
    let scale = if opts.normalize { 1.0 / norm } else { 1.0 };
    Some([-b2 * scale, b1 * scale])
}

/// RK4 integration of `γ̇ = −β₂X₁ + β₁X₂`.
pub fn characteristic_flow(
    s: &MagneticScenario,
    p0: [f64; 3],
    t_final: f64,
    dt: f64,
    opts: &CharacteristicOptions,
) -> Result<CharacteristicTrajectory, FlowError> {
    if !p0.iter().all(|v| v.is_finite()) {
        return Err(FlowError::BadInit);
    }
    let n = step_count(t_final, dt)?;
    let mut out = CharacteristicTrajectory {
        t: Vec::with_capacity(n + 1),
        points: Vec::with_capacity(n + 1),
        u: Vec::with_capacity(n + 1),
        beta: Vec::with_capacity(n + 1),
        certificate: Vec::with_capacity(n + 1),
        halted_at: None,
    };
    let push = |out: &mut CharacteristicTrajectory, t: f64, p: [f64; 3], u: [f64; 2]| {
        let beta = s.beta_at(p);
        out.t.push(t);
        out.points.push(p);
        out.u.push(u);
        out.beta.push(beta);
        out.certificate.push(beta[0] * u[0] + beta[1] * u[1]);
    };
    let Some(u0) = direction(s, p0, opts) else {
        out.halted_at = Some(0.0);
        push(&mut out, 0.0, p0, [0.0, 0.0]);
        return Ok(out);
    };
    push(&mut out, 0.0, p0, u0);
    let mut p = p0;
    for step in 1..=n {
        // any stage landing in the zero locus without a continuation halts
        let entered = Cell::new(false);
        let field = |y: &[f64; 3]| -> [f64; 3] {
            match direction(s, *y, opts) {
                Some(u) => {
                    let v = s.at(*y);
                    let (x1, x2) = (v.x(1), v.x(2));
                    std::array::from_fn(|c| u[0] * x1[c] + u[1] * x2[c])
                }
                None => {
                    entered.set(true);
                    [0.0; 3]
                }
            }
        };
        let next = rk4_step(&p, dt, &field);
        let t = step as f64 * dt;
        if !next.iter().all(|v| v.is_finite()) {
            return Err(FlowError::NonFinite { t });
        }
        match direction(s, next, opts) {
            Some(u) if !entered.get() => {
                p = next;
                push(&mut out, t, p, u);
            }
            _ => {
                out.halted_at = Some(t);
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{derive_contact_data, heisenberg_frame};
    use crate::expr::parse_expr;
    use crate::rumin::HOneForm;
    use std::sync::Arc;

    fn scenario(a1: &str, a2: &str) -> MagneticScenario {
        let (x1, x2) = heisenberg_frame();
        let d = Arc::new(derive_contact_data(&x1, &x2).unwrap());
        MagneticScenario::from_potential(d, HOneForm::new(parse_expr(a1).unwrap(), parse_expr(a2).unwrap()), 1.0)
    }

    #[test]
    fn engel_characteristic_is_the_x2_line() {
        let s = scenario("0", "x^2/2");
        let c = characteristic_flow(&s, [0.0; 3], 1.0, 1e-2, &CharacteristicOptions::default()).unwrap();
        for (t, p) in c.t.iter().zip(&c.points) {
            assert!(p[0].abs() < 1e-14 && (p[1] - t).abs() < 1e-12 && p[2].abs() < 1e-14);
        }
        assert!(c.certificate.iter().all(|b| *b == 0.0));
        assert!(c.halted_at.is_none());
    }

    #[test]
    fn spiral_stays_on_cylinder() {
        let s = scenario("-x*z", "-x^3/6 - x*y^2/2 - y*z");
        let c = characteristic_flow(&s, [1.0, 0.0, 0.0], 2.0 * std::f64::consts::PI, 1e-3, &CharacteristicOptions::default())
            .unwrap();
        for p in &c.points {
            assert!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn halts_on_the_zero_locus() {
        let s = scenario("-2*z^2", "-x^3*y/6 - x^2*z");
        let opts = CharacteristicOptions { normalize: true, ..Default::default() };
        let c = characteristic_flow(&s, [1.0, 0.0, 0.0], 2.0, 1.0 / 8.0, &opts).unwrap();
        assert_eq!(c.halted_at, Some(1.0));
        assert_eq!(c.points.last().unwrap(), &[0.125, 0.0, 0.0]);
        let cont = CharacteristicOptions { continuation: Some([0.0, 1.0]), ..opts };
        let c = characteristic_flow(&s, [1.0, 0.0, 0.0], 2.0, 1.0 / 8.0, &cont).unwrap();
        assert!(c.halted_at.is_none());
        assert_eq!(c.points.len(), 17);
    }
}
