use super::{build_lift, LiftError};
use crate::expr::{CompiledSet, Expr};
use crate::magnetic::{fmt_f64, step_count, FlowError, FlowState, MagneticScenario, Trajectory, DEFAULT_ENERGY_DRIFT};
use crate::numeric::rk4_step;

pub const LIFTED_HEADER: &str = "t,x,y,z,w,z1,z2,z0,zw,energy";

/// Point of `M × R` with covector components on `Y₁, Y₂, Y₀, ∂w`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiftedState {
    pub p4: [f64; 4],
    pub z1: f64,
    pub z2: f64,
    pub z0: f64,
    pub zw: f64,
}

impl LiftedState {
    pub fn new(p4: [f64; 4], z1: f64, z2: f64, z0: f64, zw: f64) -> Self {
        LiftedState { p4, z1, z2, z0, zw }
    }

    /// Lift of a magnetic state of charge `q`: `ζ_i = h_i + qA_i`,
    /// `ζ₀ = h₀ + q dA(X₁,X₂)`, `ζ_w = q`.
    pub fn from_magnetic(s: &MagneticScenario, init: FlowState, w: f64) -> Result<Self, LiftError> {
        let a = s.potential.as_ref().ok_or(LiftError::MissingPotential)?;
        let zeta = crate::rumin::da12(a, &s.data).eval_f64(init.p);
        let [x, y, z] = init.p;
        Ok(LiftedState {
            p4: [x, y, z, w],
            z1: init.h1 + s.q * a.a1.eval_f64(init.p),
            z2: init.h2 + s.q * a.a2.eval_f64(init.p),
            z0: init.h0 + s.q * zeta,
            zw: s.q,
        })
    }

    fn to_array(self) -> [f64; 8] {
        let [x, y, z, w] = self.p4;
        [x, y, z, w, self.z1, self.z2, self.z0, self.zw]
    }

    fn from_array(a: &[f64; 8]) -> Self {
        LiftedState { p4: [a[0], a[1], a[2], a[3]], z1: a[4], z2: a[5], z0: a[6], zw: a[7] }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftedTrajectory {
    pub t: Vec<f64>,
    pub states: Vec<LiftedState>,
    /// `½(ζ₁² + ζ₂²)`.
    pub energy: Vec<f64>,
    /// `max |ζ_w(t) − ζ_w(0)|`.
    pub zw_drift: f64,
}

impl LiftedTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn base_points(&self) -> Vec<[f64; 3]> {
        self.states.iter().map(|s| [s.p4[0], s.p4[1], s.p4[2]]).collect()
    }

    pub fn write_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "{LIFTED_HEADER}")?;
        for ((t, st), e) in self.t.iter().zip(&self.states).zip(&self.energy) {
            let [x, y, z, wc] = st.p4;
            let row = [*t, x, y, z, wc, st.z1, st.z2, st.z0, st.zw, *e];
            writeln!(w, "{}", row.map(fmt_f64).join(","))?;
        }
        Ok(())
    }

    /// Sup-norm distance between the projection and a base trajectory on the
    /// same grid.
    pub fn projection_distance(&self, base: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&base.states)
            .flat_map(|(a, b)| (0..3).map(move |i| (a.p4[i] - b.p[i]).abs()))
            .fold(0.0, f64::max)
    }
}

// slots: Y₁ and Y₂ components, then (a₁, a₂, a₀, a_w) of [Y₁,Y₂], [Y₁,Y₀], [Y₂,Y₀]
const Y1: usize = 0;
const Y2: usize = 4;
const B12: usize = 8;
const B10: usize = 12;
const B20: usize = 16;
const SLOTS: usize = 20;

fn model(s: &MagneticScenario) -> Result<CompiledSet, LiftError> {
    let lift = build_lift(s)?;
    let mut exprs: Vec<Expr> = Vec::with_capacity(SLOTS);
    exprs.extend(lift.y1.components().into_iter().cloned());
    exprs.extend(lift.y2.components().into_iter().cloned());
    for (i, j) in [(1, 2), (1, 0), (2, 0)] {
        exprs.extend(lift.decompose(&s.data, &lift.field(i).bracket(lift.field(j))));
    }
    Ok(CompiledSet::new(&exprs))
}

fn rhs(m: &CompiledSet, y: &[f64; 8]) -> [f64; 8] {
    let mut buf = [0.0; SLOTS];
    m.eval_into([y[0], y[1], y[2]], &mut buf);
    let z = [y[4], y[5], y[6], y[7]];
    let pair = |at: usize| (0..4).map(|k| buf[at + k] * z[k]).sum::<f64>();
    let (b12, b10, b20) = (pair(B12), pair(B10), pair(B20));
    let mut out = [0.0; 8];
    for c in 0..4 {
        out[c] = z[0] * buf[Y1 + c] + z[1] * buf[Y2 + c];
    }
    out[4] = -z[1] * b12;
    out[5] = z[0] * b12;
    out[6] = z[0] * b10 + z[1] * b20;
    out
}

/// RK4 integration of the normal flow of `½(ζ₁² + ζ₂²)` on `M × R`.
pub fn integrate_lifted_flow(
    s: &MagneticScenario,
    init: LiftedState,
    t_final: f64,
    dt: f64,
) -> Result<LiftedTrajectory, FlowError> {
    let m = model(s).map_err(|_| FlowError::MissingPotential)?;
    if !init.is_finite() {
        return Err(FlowError::BadInit);
    }
    let n = step_count(t_final, dt)?;
    let mut out = LiftedTrajectory {
        t: Vec::with_capacity(n + 1),
        states: Vec::with_capacity(n + 1),
        energy: Vec::with_capacity(n + 1),
        zw_drift: 0.0,
    };
    let mut y = init.to_array();
    let energy = |y: &[f64; 8]| 0.5 * (y[4] * y[4] + y[5] * y[5]);
    let h0 = energy(&y);
    let bound = DEFAULT_ENERGY_DRIFT * h0.max(f64::MIN_POSITIVE) + 1e-15;
    out.t.push(0.0);
    out.states.push(init);
    out.energy.push(h0);
    let mut prev = h0;
    for step in 1..=n {
        y = rk4_step(&y, dt, &|v: &[f64; 8]| rhs(&m, v));
        let t = step as f64 * dt;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(FlowError::NonFinite { t });
        }
        let e = energy(&y);
        if (e - prev).abs() > bound {
            return Err(FlowError::EnergyDrift { t, drift: (e - prev).abs(), bound });
        }
        prev = e;
        out.zw_drift = out.zw_drift.max((y[7] - init.zw).abs());
        out.t.push(t);
        out.states.push(LiftedState::from_array(&y));
        out.energy.push(e);
    }
    Ok(out)
}
