use super::{MagneticScenario, Trajectory};
use crate::contact::ContactError;
use crate::numeric::{finite_difference, finite_difference_scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error("time {0} is outside the trajectory")]
    OutOfRange(f64),
    #[error("speed {0} at the requested sample is not 1 within 1e-6")]
    NonUnitSpeed(f64),
}

/// Pointwise residuals of the intrinsic magnetic geodesic equations.
#[derive(Clone, Debug, PartialEq)]
pub struct Residuals {
    /// `|∇_γ̇ γ̇ − α Jγ̇|`.
    pub r1: Vec<f64>,
    /// `|α̇ − g(τγ̇, γ̇) − q b(γ̇)|`.
    pub r2: Vec<f64>,
    pub r1_max: f64,
    pub r2_max: f64,
    /// Root-mean-square values over the grid.
    pub r1_l2: f64,
    pub r2_l2: f64,
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len().max(1) as f64).sqrt()
}

/// Samples of `∇_γ̇γ̇`, `Jγ̇`, `g(τγ̇,γ̇)` and `b(γ̇)`.
struct Kinematics {
    acc: Vec<[f64; 2]>,
    jgd: Vec<[f64; 2]>,
    torsion: Vec<f64>,
    b: Vec<f64>,
}

fn kinematics(traj: &Trajectory, s: &MagneticScenario) -> Result<Kinematics, ContactError> {
    let acc = s.data.covariant_acceleration(&traj.t, &traj.points(), &traj.u)?;
    let n = traj.len();
    let mut k = Kinematics { acc, jgd: Vec::with_capacity(n), torsion: Vec::with_capacity(n), b: Vec::with_capacity(n) };
    for (st, u) in traj.states.iter().zip(&traj.u) {
        let v = s.at(st.p);
        k.jgd.push(std::array::from_fn(|r| v.j(r + 1, 1) * u[0] + v.j(r + 1, 2) * u[1]));
        let mut tq = 0.0;
        for a in 1..=2 {
            for c in 1..=2 {
                tq += v.tau(a, c) * u[c - 1] * u[a - 1];
            }
        }
        k.torsion.push(tq);
        let beta = v.beta();
        k.b.push(beta[0] * u[0] + beta[1] * u[1]);
    }
    Ok(k)
}

/// Residuals of `∇_γ̇γ̇ = αJγ̇` and `α̇ = g(τγ̇,γ̇) + q b(γ̇)` by finite
/// differences along the sampled curve.
pub fn geodesic_residuals(traj: &Trajectory, s: &MagneticScenario) -> Result<Residuals, VerifyError> {
    let k = kinematics(traj, s)?;
    let alpha_dot = finite_difference_scalar(&traj.t, &traj.alpha);
    let r1: Vec<f64> = (0..traj.len())
        .map(|i| {
            let dx = k.acc[i][0] - traj.alpha[i] * k.jgd[i][0];
            let dy = k.acc[i][1] - traj.alpha[i] * k.jgd[i][1];
            dx.hypot(dy)
        })
        .collect();
    let r2: Vec<f64> = (0..traj.len())
        .map(|i| (alpha_dot[i] - k.torsion[i] - traj.q * k.b[i]).abs())
        .collect();
    Ok(Residuals {
        r1_max: r1.iter().cloned().fold(0.0, f64::max),
        r2_max: r2.iter().cloned().fold(0.0, f64::max),
        r1_l2: rms(&r1),
        r2_l2: rms(&r2),
        r1,
        r2,
    })
}

/// Series of `d/dt g(∇_γ̇γ̇, Jγ̇) − g(τγ̇, γ̇)` and of `q b(γ̇)`.
pub fn ksr_series(traj: &Trajectory, s: &MagneticScenario) -> Result<(Vec<f64>, Vec<f64>), VerifyError> {
    let k = kinematics(traj, s)?;
    let g: Vec<[f64; 1]> = (0..traj.len())
        .map(|i| [k.acc[i][0] * k.jgd[i][0] + k.acc[i][1] * k.jgd[i][1]])
        .collect();
    let dg = finite_difference(&traj.t, &g);
    let ksr = (0..traj.len()).map(|i| dg[i][0] - k.torsion[i]).collect();
    let qb = k.b.iter().map(|b| traj.q * b).collect();
    Ok((ksr, qb))
}

/// Sub-Riemannian geodesic curvature at the sample nearest to `t`.
pub fn ksr_value(traj: &Trajectory, s: &MagneticScenario, t: f64) -> Result<f64, VerifyError> {
    let i = nearest_index(traj, t)?;
    let speed = traj.u[i][0].hypot(traj.u[i][1]);
    if (speed - 1.0).abs() > 1e-6 {
        return Err(VerifyError::NonUnitSpeed(speed));
    }
    let (ksr, _) = ksr_series(traj, s)?;
    Ok(ksr[i])
}

pub(crate) fn nearest_index(traj: &Trajectory, t: f64) -> Result<usize, VerifyError> {
    let (first, last) = match (traj.t.first(), traj.t.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(VerifyError::OutOfRange(t)),
    };
    let dt = traj.dt();
    if !(t >= first - 0.5 * dt && t <= last + 0.5 * dt) || dt <= 0.0 {
        return Err(VerifyError::OutOfRange(t));
    }
    Ok((((t - first) / dt).round() as usize).min(traj.len() - 1))
}
