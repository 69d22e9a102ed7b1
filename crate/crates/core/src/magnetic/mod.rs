//! Magnetic geodesic flows and their verification.

mod characteristic;
mod distance;
mod export;
mod gauge;
mod verify;

use std::sync::Arc;

pub use characteristic::{characteristic_flow, CharacteristicOptions, CharacteristicTrajectory};
pub use distance::{ksr_from_expansion, sr_distance_local, DistanceError, ExpansionFit, ShootingOptions};
pub use export::{fmt_f64, CsvError, TRAJECTORY_HEADER};
pub use gauge::gauge_shift;
pub use verify::ksr_series;
pub use verify::{geodesic_residuals, ksr_value, Residuals, VerifyError};

use crate::contact::ContactData;
use crate::expr::{CompiledSet, Expr};
use crate::numeric::rk4_step;
use crate::rumin::{da12, dh1, HOneForm, HTwoForm};

/// Default relative bound on the per-step energy drift.
pub const DEFAULT_ENERGY_DRIFT: f64 = 1e-6;
/// Upper bound on the number of integration steps.
pub const MAX_STEPS: f64 = 1e7;

/// Contact data together with a magnetic field, optional potential and
/// charge.
#[derive(Clone, Debug)]
pub struct MagneticScenario {
    pub data: Arc<ContactData>,
    pub potential: Option<HOneForm>,
    pub field: HTwoForm,
    pub q: f64,
    model: Arc<FlowModel>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("this operation needs a magnetic potential A")]
    MissingPotential,
    #[error("step size must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("T/dt = {0} exceeds the step limit of 1e7")]
    TooManySteps(f64),
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("energy drift {drift:e} in one step at t = {t} exceeds the bound {bound:e}")]
    EnergyDrift { t: f64, drift: f64, bound: f64 },
    #[error("initial state is not finite")]
    BadInit,
}

// Slots of the compiled field table.
const X1: usize = 0;
const X2: usize = 3;
const X0: usize = 6;
const A1: usize = 9;
const A2: usize = 10;
/// `X_j A_i` at `XA + 2·jslot + (i − 1)` with `jslot` 0, 1, 2 for `X₁, X₂, X₀`.
const XA: usize = 11;
/// `c_ij^k` at `C + 3·pair + k` for pairs `(1,2), (1,0), (2,0)`.
const C: usize = 17;
const ZETA: usize = 26;
const B1: usize = 27;
const B2: usize = 28;
/// `Γ_ij^k` at `GAMMA + 4(i−1) + 2(j−1) + (k−1)`.
const GAMMA: usize = 29;
/// `tau[k][i]` at `TAU + 2k + i`.
const TAU: usize = GAMMA + 8;
/// `j[k][i]` at `J + 2k + i`.
const J: usize = 41;
const SLOTS: usize = 45;

/// Compiled numeric tables of a scenario.
#[derive(Debug)]
pub(crate) struct FlowModel {
    set: CompiledSet,
}

/// Values of every tabulated function at one point.
#[derive(Clone, Debug)]
pub(crate) struct PointValues(pub [f64; SLOTS]);

impl PointValues {
    pub fn x(&self, i: usize) -> [f64; 3] {
        let base = match i {
            0 => X0,
            1 => X1,
            _ => X2,
        };
        [self.0[base], self.0[base + 1], self.0[base + 2]]
    }

    pub fn a(&self) -> [f64; 2] {
        [self.0[A1], self.0[A2]]
    }

    /// `X_j A_i` for `j ∈ {0, 1, 2}`, `i ∈ {1, 2}`.
    pub fn xa(&self, j: usize, i: usize) -> f64 {
        let jslot = match j {
            1 => 0,
            2 => 1,
            _ => 2,
        };
        self.0[XA + 2 * jslot + (i - 1)]
    }

    /// `c_ij^k` for frame indices in `{0, 1, 2}`.
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        let (pair, sign) = match (i, j) {
            (1, 2) => (0, 1.0),
            (2, 1) => (0, -1.0),
            (1, 0) => (1, 1.0),
            (0, 1) => (1, -1.0),
            (2, 0) => (2, 1.0),
            (0, 2) => (2, -1.0),
            _ => return 0.0,
        };
        sign * self.0[C + 3 * pair + k]
    }

    pub fn zeta(&self) -> f64 {
        self.0[ZETA]
    }

    pub fn beta(&self) -> [f64; 2] {
        [self.0[B1], self.0[B2]]
    }

    pub fn tau(&self, k: usize, i: usize) -> f64 {
        self.0[TAU + 2 * (k - 1) + (i - 1)]
    }

    pub fn j(&self, k: usize, i: usize) -> f64 {
        self.0[J + 2 * (k - 1) + (i - 1)]
    }
}

impl FlowModel {
    fn new(data: &ContactData, potential: Option<&HOneForm>, field: &HTwoForm) -> Self {
        let zero = HOneForm::new(Expr::zero(), Expr::zero());
        let a = potential.unwrap_or(&zero);
        let mut exprs: Vec<Expr> = Vec::with_capacity(SLOTS);
        for idx in [1, 2, 0] {
            exprs.extend(data.frame[idx].0.iter().cloned());
        }
        exprs.push(a.a1.clone());
        exprs.push(a.a2.clone());
        for j in [1, 2, 0] {
            for ai in [&a.a1, &a.a2] {
                exprs.push(data.frame[j].apply(ai));
            }
        }
        for (i, j) in [(1, 2), (1, 0), (2, 0)] {
            for k in 0..3 {
                exprs.push(data.c(i, j, k).clone());
            }
        }
        exprs.push(da12(a, data));
        exprs.push(field.b1.clone());
        exprs.push(field.b2.clone());
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    exprs.push(data.gamma[i][j][k].clone());
                }
            }
        }
        for k in 0..2 {
            for i in 0..2 {
                exprs.push(data.tau[k][i].clone());
            }
        }
        for k in 0..2 {
            for i in 0..2 {
                exprs.push(data.j[k][i].clone());
            }
        }
        debug_assert_eq!(exprs.len(), SLOTS);
        FlowModel { set: CompiledSet::new(&exprs) }
    }

    pub fn at(&self, p: [f64; 3]) -> PointValues {
        let mut out = [0.0; SLOTS];
        self.set.eval_into(p, &mut out);
        PointValues(out)
    }
}

impl MagneticScenario {
    /// Builds a scenario. When a potential is given the field is taken as
    /// supplied; use [`MagneticScenario::from_potential`] to derive it.
    pub fn new(data: Arc<ContactData>, potential: Option<HOneForm>, field: HTwoForm, q: f64) -> Self {
        let model = Arc::new(FlowModel::new(&data, potential.as_ref(), &field));
        MagneticScenario { data, potential, field, q, model }
    }

    /// Scenario whose field is `d_H A`.
    pub fn from_potential(data: Arc<ContactData>, potential: HOneForm, q: f64) -> Self {
        let field = dh1(&potential, &data);
        Self::new(data, Some(potential), field, q)
    }

    /// Same geometry and field with a different charge.
    pub fn with_charge(&self, q: f64) -> Self {
        MagneticScenario { q, ..self.clone() }
    }

    pub(crate) fn at(&self, p: [f64; 3]) -> PointValues {
        self.model.at(p)
    }

    /// `(β₁, β₂)` at a point.
    pub fn beta_at(&self, p: [f64; 3]) -> [f64; 2] {
        self.at(p).beta()
    }

    /// Right-hand side of the flow in variables `(x, y, z, h₁, h₂, h₀)`.
    pub fn rhs(&self, y: &[f64; 6]) -> [f64; 6] {
        magnetic_rhs(&self.at([y[0], y[1], y[2]]), self.q, y)
    }
}

pub(crate) fn magnetic_rhs(v: &PointValues, q: f64, y: &[f64; 6]) -> [f64; 6] {
    let a = v.a();
    let h = [y[5], y[3], y[4]]; // indexed by frame slot 0, 1, 2
    let u = [h[1] + q * a[0], h[2] + q * a[1]];
    let (x1, x2) = (v.x(1), v.x(2));
    let mut out = [0.0; 6];
    for c in 0..3 {
        out[c] = u[0] * x1[c] + u[1] * x2[c];
    }
    for (slot, j) in [(3, 1), (4, 2), (5, 0)] {
        let mut acc = 0.0;
        for i in 1..=2 {
            let mut inner = -q * v.xa(j, i);
            for (k, hk) in h.iter().enumerate() {
                inner += v.c(i, j, k) * hk;
            }
            acc += u[i - 1] * inner;
        }
        out[slot] = acc;
    }
    out
}

/// Point plus frame-covector components `h_i = ⟨λ, X_i⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowState {
    pub p: [f64; 3],
    pub h1: f64,
    pub h2: f64,
    pub h0: f64,
}

impl FlowState {
    pub fn new(p: [f64; 3], h1: f64, h2: f64, h0: f64) -> Self {
        FlowState { p, h1, h2, h0 }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.p[0], self.p[1], self.p[2], self.h1, self.h2, self.h0]
    }

    pub fn from_array(y: &[f64; 6]) -> Self {
        FlowState { p: [y[0], y[1], y[2]], h1: y[3], h2: y[4], h0: y[5] }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Uniformly sampled magnetic geodesic.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub q: f64,
    pub t: Vec<f64>,
    pub states: Vec<FlowState>,
    /// `u_i = h_i + qA_i`.
    pub u: Vec<[f64; 2]>,
    /// `ζ = dA(X₁, X₂)`.
    pub zeta: Vec<f64>,
    /// `α = qζ + h₀`.
    pub alpha: Vec<f64>,
    /// `H_A = ½(u₁² + u₂²)`.
    pub energy: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        self.states.iter().map(|s| s.p).collect()
    }

    pub fn dt(&self) -> f64 {
        if self.t.len() < 2 {
            0.0
        } else {
            self.t[1] - self.t[0]
        }
    }

    /// Largest coordinate distance between the projected curves.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .flat_map(|(a, b)| (0..3).map(move |k| (a.p[k] - b.p[k]).abs()))
            .fold(0.0, f64::max)
    }
}

/// Number of steps `round(T/dt)`, validated.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize, FlowError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(FlowError::BadStep(dt));
    }
    let ratio = t_final / dt;
    if !ratio.is_finite() || ratio < 0.0 {
        return Err(FlowError::BadStep(dt));
    }
    if ratio > MAX_STEPS {
        return Err(FlowError::TooManySteps(ratio));
    }
    Ok(ratio.round() as usize)
}

/// RK4 integration of the magnetic geodesic flow.
pub fn integrate_magnetic_flow(
    s: &MagneticScenario,
    init: FlowState,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory, FlowError> {
    integrate_magnetic_flow_with(s, init, t_final, dt, DEFAULT_ENERGY_DRIFT)
}

pub fn integrate_magnetic_flow_with(
    s: &MagneticScenario,
    init: FlowState,
    t_final: f64,
    dt: f64,
    drift_bound: f64,
) -> Result<Trajectory, FlowError> {
    if s.potential.is_none() {
        return Err(FlowError::MissingPotential);
    }
    if !init.is_finite() {
        return Err(FlowError::BadInit);
    }
    let n = step_count(t_final, dt)?;
    let mut traj = Trajectory {
        q: s.q,
        t: Vec::with_capacity(n + 1),
        states: Vec::with_capacity(n + 1),
        u: Vec::with_capacity(n + 1),
        zeta: Vec::with_capacity(n + 1),
        alpha: Vec::with_capacity(n + 1),
        energy: Vec::with_capacity(n + 1),
    };
    let record = |traj: &mut Trajectory, t: f64, y: &[f64; 6]| -> f64 {
        let v = s.at([y[0], y[1], y[2]]);
        let a = v.a();
        let u = [y[3] + s.q * a[0], y[4] + s.q * a[1]];
        let energy = 0.5 * (u[0] * u[0] + u[1] * u[1]);
        traj.t.push(t);
        traj.states.push(FlowState::from_array(y));
        traj.u.push(u);
        traj.zeta.push(v.zeta());
        traj.alpha.push(s.q * v.zeta() + y[5]);
        traj.energy.push(energy);
        energy
    };
    let mut y = init.to_array();
    let h0 = record(&mut traj, 0.0, &y);
    let bound = drift_bound * h0.max(f64::MIN_POSITIVE) + 1e-15;
    let mut prev = h0;
    let f = |y: &[f64; 6]| s.rhs(y);
    for step in 1..=n {
        y = rk4_step(&y, dt, &f);
        let t = step as f64 * dt;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(FlowError::NonFinite { t });
        }
        let e = record(&mut traj, t, &y);
        let drift = (e - prev).abs();
        if drift > bound {
            return Err(FlowError::EnergyDrift { t, drift, bound });
        }
        prev = e;
    }
    Ok(traj)
}

/// Integrates on `[−T, T]` through the state `init` at `t = 0`.
///
/// The backward half uses time reversal: `γ(−s)` is the magnetic geodesic
/// of charge `−q` started from `(p, −h₁, −h₂, −h₀)`.
pub fn integrate_centered(
    s: &MagneticScenario,
    init: FlowState,
    half: f64,
    dt: f64,
) -> Result<Trajectory, FlowError> {
    let fwd = integrate_magnetic_flow(s, init, half, dt)?;
    let rev_init = FlowState::new(init.p, -init.h1, -init.h2, -init.h0);
    let bwd = integrate_magnetic_flow(&s.with_charge(-s.q), rev_init, half, dt)?;
    let n = bwd.len();
    let mut out = Trajectory {
        q: s.q,
        t: Vec::with_capacity(n + fwd.len()),
        states: Vec::with_capacity(n + fwd.len()),
        u: Vec::with_capacity(n + fwd.len()),
        zeta: Vec::with_capacity(n + fwd.len()),
        alpha: Vec::with_capacity(n + fwd.len()),
        energy: Vec::with_capacity(n + fwd.len()),
    };
    for i in (1..n).rev() {
        let st = bwd.states[i];
        let h0 = -st.h0;
        out.t.push(-bwd.t[i]);
        out.states.push(FlowState::new(st.p, -st.h1, -st.h2, h0));
        out.u.push([-bwd.u[i][0], -bwd.u[i][1]]);
        out.zeta.push(bwd.zeta[i]);
        out.alpha.push(s.q * bwd.zeta[i] + h0);
        out.energy.push(bwd.energy[i]);
    }
    out.t.extend(fwd.t);
    out.states.extend(fwd.states);
    out.u.extend(fwd.u);
    out.zeta.extend(fwd.zeta);
    out.alpha.extend(fwd.alpha);
    out.energy.extend(fwd.energy);
    Ok(out)
}
