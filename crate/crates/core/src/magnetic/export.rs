use std::io::{self, Write};

use super::{FlowState, MagneticScenario, Trajectory};

pub const TRAJECTORY_HEADER: &str = "t,x,y,z,h1,h2,h0,u1,u2,alpha,energy";

/// Fixed 17-significant-digit rendering used by every CSV export.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CsvError {
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("trajectory needs at least 3 rows and a uniform grid")]
    Grid,
}

impl Trajectory {
    pub fn write_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "{TRAJECTORY_HEADER}")?;
        for i in 0..self.len() {
            let st = &self.states[i];
            let row = [
                self.t[i],
                st.p[0],
                st.p[1],
                st.p[2],
                st.h1,
                st.h2,
                st.h0,
                self.u[i][0],
                self.u[i][1],
                self.alpha[i],
                self.energy[i],
            ];
            writeln!(w, "{}", row.map(fmt_f64).join(","))?;
        }
        Ok(())
    }

    /// Reads the `t, x, y, z, h1, h2, h0` columns of an exported trajectory
    /// and recomputes the derived columns for the scenario.
    pub fn from_csv(text: &str, s: &MagneticScenario) -> Result<Trajectory, CsvError> {
        let mut traj = Trajectory {
            q: s.q,
            t: Vec::new(),
            states: Vec::new(),
            u: Vec::new(),
            zeta: Vec::new(),
            alpha: Vec::new(),
            energy: Vec::new(),
        };
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('t') || line.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| CsvError::Line { line: n + 1, reason: reason.to_string() };
            let v: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad("non-numeric field"))?;
            if v.len() < 7 {
                return Err(bad("expected at least 7 columns"));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(bad("non-finite value"));
            }
            let st = FlowState::new([v[1], v[2], v[3]], v[4], v[5], v[6]);
            let pv = s.at(st.p);
            let a = pv.a();
            let u = [st.h1 + s.q * a[0], st.h2 + s.q * a[1]];
            traj.t.push(v[0]);
            traj.states.push(st);
            traj.u.push(u);
            traj.zeta.push(pv.zeta());
            traj.alpha.push(s.q * pv.zeta() + st.h0);
            traj.energy.push(0.5 * (u[0] * u[0] + u[1] * u[1]));
        }
        if traj.len() < 3 {
            return Err(CsvError::Grid);
        }
        let dt = traj.dt();
        let uniform = traj.t.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1.0));
        if !(dt > 0.0) || !uniform {
            return Err(CsvError::Grid);
        }
        Ok(traj)
    }
}
