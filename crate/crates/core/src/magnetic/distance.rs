use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use super::Trajectory;
use crate::contact::ContactData;
use crate::expr::{CompiledSet, Expr};
use crate::numeric::rk4_step;

/// Parameters of the geodesic shooting solver.
#[derive(Clone, Debug, PartialEq)]
pub struct ShootingOptions {
    pub h0_min: f64,
    pub h0_max: f64,
    pub h0_step: f64,
    /// RK4 steps over unit time during the seed scan.
    pub coarse_steps: usize,
    /// RK4 steps over unit time during polishing.
    pub fine_steps: usize,
    pub fd_step: f64,
    /// Endpoint error accepted as converged.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            h0_min: -8.0,
            h0_max: 8.0,
            h0_step: 0.1,
            coarse_steps: 60,
            fine_steps: 1000,
            fd_step: 1e-6,
            tolerance: 1e-9,
            max_iterations: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistanceError {
    #[error("no shooting branch converged (best endpoint error {best_residual:e})")]
    NoConvergence { best_residual: f64 },
    #[error("time {0} with the expansion grid leaves the trajectory")]
    OutOfRange(f64),
    #[error("expansion fit residual {0:e} exceeds 1e-6")]
    FitResidual(f64),
    #[error("trajectory speed {0} is not 1 within 1e-6")]
    NonUnitSpeed(f64),
}

/// Endpoint map of the `β = 0` geodesic flow.
struct Shooter {
    /// `X₁`, `X₂` components followed by `c_ij^k` for pairs `(1,2), (1,0), (2,0)`.
    table: CompiledSet,
}

impl Shooter {
    fn new(data: Arc<ContactData>) -> Self {
        let mut exprs: Vec<Expr> = Vec::with_capacity(15);
        exprs.extend(data.x1().0.iter().cloned());
        exprs.extend(data.x2().0.iter().cloned());
        for (i, j) in [(1, 2), (1, 0), (2, 0)] {
            for k in 0..3 {
                exprs.push(data.c(i, j, k).clone());
            }
        }
        Shooter { table: CompiledSet::new(&exprs) }
    }

    fn frame_at(&self, p: [f64; 3]) -> ([f64; 3], [f64; 3]) {
        let mut v = [0.0; 15];
        self.table.eval_into(p, &mut v);
        ([v[0], v[1], v[2]], [v[3], v[4], v[5]])
    }

    /// `ẋ = h₁X₁ + h₂X₂`, `ḣ_j = Σ_i h_i Σ_k c_ij^k h_k` in variables
    /// `(x, y, z, h₁, h₂, h₀)`.
    fn rhs(&self, y: &[f64; 6]) -> [f64; 6] {
        let mut v = [0.0; 15];
        self.table.eval_into([y[0], y[1], y[2]], &mut v);
        let (h1, h2, h0) = (y[3], y[4], y[5]);
        let c12 = |k: usize| v[6 + k];
        let c10 = |k: usize| v[9 + k];
        let c20 = |k: usize| v[12 + k];
        let dot = |c: &dyn Fn(usize) -> f64| c(0) * h0 + c(1) * h1 + c(2) * h2;
        let (s12, s10, s20) = (dot(&c12), dot(&c10), dot(&c20));
        [
            h1 * v[0] + h2 * v[3],
            h1 * v[1] + h2 * v[4],
            h1 * v[2] + h2 * v[5],
            // j = 1: i = 2 term with c_21 = −c_12
            -h2 * s12,
            h1 * s12,
            // j = 0: c_10, c_20
            h1 * s10 + h2 * s20,
        ]
    }

    fn endpoint(&self, p: [f64; 3], h: [f64; 3], steps: usize) -> [f64; 3] {
        let mut y = [p[0], p[1], p[2], h[0], h[1], h[2]];
        let dt = 1.0 / steps as f64;
        let f = |y: &[f64; 6]| self.rhs(y);
        for _ in 0..steps {
            y = rk4_step(&y, dt, &f);
        }
        [y[0], y[1], y[2]]
    }

    fn residual(&self, p: [f64; 3], r: [f64; 3], h: [f64; 3], steps: usize) -> Vector3<f64> {
        let e = self.endpoint(p, h, steps);
        Vector3::new(e[0] - r[0], e[1] - r[1], e[2] - r[2])
    }

    /// Damped Newton iteration with a finite-difference Jacobian and an SVD
    /// pseudo-inverse. Returns the final covector and endpoint error.
    fn newton(
        &self,
        p: [f64; 3],
        r: [f64; 3],
        mut h: [f64; 3],
        steps: usize,
        stop: f64,
        opts: &ShootingOptions,
    ) -> ([f64; 3], f64) {
        let mut f = self.residual(p, r, h, steps);
        let mut err = f.amax();
        for _ in 0..opts.max_iterations {
            if err <= stop || !err.is_finite() {
                break;
            }
            let mut jac = Matrix3::zeros();
            for k in 0..3 {
                let mut hk = h;
                hk[k] += opts.fd_step;
                let fk = self.residual(p, r, hk, steps);
                jac.set_column(k, &((fk - f) / opts.fd_step));
            }
            let svd = jac.svd(true, true);
            let smax = svd.singular_values.max();
            let Ok(pinv) = svd.pseudo_inverse(1e-10 * smax.max(f64::MIN_POSITIVE)) else {
                break;
            };
            let delta = pinv * f;
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..8 {
                let trial = [h[0] - lambda * delta[0], h[1] - lambda * delta[1], h[2] - lambda * delta[2]];
                let ft = self.residual(p, r, trial, steps);
                let et = ft.amax();
                if et < err {
                    h = trial;
                    f = ft;
                    err = et;
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (h, err)
    }

    fn distance(&self, p: [f64; 3], r: [f64; 3], opts: &ShootingOptions) -> Result<f64, DistanceError> {
        if p == r {
            return Ok(0.0);
        }
        let (x1, x2) = self.frame_at(p);
        // least-squares horizontal velocity reaching r − p in unit time
        let delta = [r[0] - p[0], r[1] - p[1], r[2] - p[2]];
        let g11: f64 = (0..3).map(|i| x1[i] * x1[i]).sum();
        let g12: f64 = (0..3).map(|i| x1[i] * x2[i]).sum();
        let g22: f64 = (0..3).map(|i| x2[i] * x2[i]).sum();
        let b1: f64 = (0..3).map(|i| x1[i] * delta[i]).sum();
        let b2: f64 = (0..3).map(|i| x2[i] * delta[i]).sum();
        let det = g11 * g22 - g12 * g12;
        let guess = if det.abs() > 1e-300 {
            [(g22 * b1 - g12 * b2) / det, (g11 * b2 - g12 * b1) / det]
        } else {
            [0.0, 0.0]
        };
        let n_scan = ((opts.h0_max - opts.h0_min) / opts.h0_step).round() as usize;
        // a second seed per h₀ offset in a rotating direction, so that targets
        // with no horizontal displacement still get a nondegenerate start
        let rho = delta.iter().fold(0.0f64, |m, d| m.max(d.abs())).sqrt();
        let mut seeds: Vec<[f64; 3]> = Vec::with_capacity(2 * (n_scan + 1));
        for i in 0..=n_scan {
            let h0 = opts.h0_min + i as f64 * opts.h0_step;
            let theta = i as f64 * 2.399_963_229_728_653;
            seeds.push([guess[0], guess[1], h0]);
            seeds.push([guess[0] + rho * theta.cos(), guess[1] + rho * theta.sin(), h0]);
        }
        let coarse_stop = 1e-8_f64.max(opts.tolerance);
        let coarse: Vec<([f64; 3], f64)> = seeds
            .par_iter()
            .map(|&h| self.newton(p, r, h, opts.coarse_steps, coarse_stop, opts))
            .collect();
        let mut best_residual = f64::INFINITY;
        let mut candidates: Vec<[f64; 3]> = Vec::new();
        for (h, err) in &coarse {
            best_residual = best_residual.min(*err);
            // loose gate: coarse discretization error is polished away below
            if *err <= 1e-4 && !candidates.iter().any(|c| (0..3).all(|k| (c[k] - h[k]).abs() < 1e-5)) {
                candidates.push(*h);
            }
        }
        // polish shortest first; a continuum of minimizers (e.g. over the
        // vertical axis) would otherwise mean polishing every seed
        candidates.sort_by(|a, b| a[0].hypot(a[1]).total_cmp(&b[0].hypot(b[1])));
        let mut best: Option<f64> = None;
        for h in candidates {
            let (h, err) = self.newton(p, r, h, opts.fine_steps, 1e-13, opts);
            best_residual = best_residual.min(err);
            if err <= opts.tolerance {
                // constant speed |u| over unit time
                best = Some(h[0].hypot(h[1]));
                break;
            }
        }
        best.ok_or(DistanceError::NoConvergence { best_residual })
    }
}

/// Local sub-Riemannian distance by geodesic shooting.
pub fn sr_distance_local(
    data: Arc<ContactData>,
    p: [f64; 3],
    r: [f64; 3],
    opts: &ShootingOptions,
) -> Result<f64, DistanceError> {
    Shooter::new(data).distance(p, r, opts)
}

/// Result of [`ksr_from_expansion`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionFit {
    pub k_hat: f64,
    pub c: f64,
    pub eps: Vec<f64>,
    pub d2: Vec<f64>,
    /// Root-mean-square misfit of `d² = ε² − cε⁶`.
    pub residual: f64,
}

/// Default ε grid of the expansion fit.
pub const EXPANSION_GRID: [f64; 5] = [0.05, 0.075, 0.1, 0.125, 0.15];

/// Geodesic curvature magnitude from the small-distance expansion
/// `d²(γ(t+ε), γ(t)) = ε² − k²ε⁶/720`. When samples on both sides of `t`
/// are available the two one-sided squared distances are averaged, which
/// removes the odd-order remainder.
pub fn ksr_from_expansion(
    data: Arc<ContactData>,
    traj: &Trajectory,
    t: f64,
    opts: &ShootingOptions,
) -> Result<ExpansionFit, DistanceError> {
    let dt = traj.dt();
    let index = |s: f64| -> Option<usize> {
        let i = ((s - traj.t[0]) / dt).round();
        if i < 0.0 || i as usize >= traj.len() || ((traj.t[0] + i * dt) - s).abs() > 1e-9 {
            None
        } else {
            Some(i as usize)
        }
    };
    let i0 = index(t).ok_or(DistanceError::OutOfRange(t))?;
    let speed = traj.u[i0][0].hypot(traj.u[i0][1]);
    if (speed - 1.0).abs() > 1e-6 {
        return Err(DistanceError::NonUnitSpeed(speed));
    }
    let shooter = Shooter::new(data);
    let p = traj.states[i0].p;
    let mut jobs: Vec<(usize, usize)> = Vec::new();
    for (e_idx, &eps) in EXPANSION_GRID.iter().enumerate() {
        let fwd = index(t + eps).ok_or(DistanceError::OutOfRange(t + eps))?;
        jobs.push((e_idx, fwd));
        if let Some(bwd) = index(t - eps) {
            jobs.push((e_idx, bwd));
        }
    }
    let dists: Vec<Result<(usize, f64), DistanceError>> = jobs
        .par_iter()
        .map(|&(e_idx, j)| shooter.distance(p, traj.states[j].p, opts).map(|d| (e_idx, d * d)))
        .collect();
    let mut sums = [0.0; EXPANSION_GRID.len()];
    let mut counts = [0usize; EXPANSION_GRID.len()];
    for r in dists {
        let (e_idx, d2) = r?;
        sums[e_idx] += d2;
        counts[e_idx] += 1;
    }
    let d2: Vec<f64> = (0..EXPANSION_GRID.len()).map(|i| sums[i] / counts[i] as f64).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for (eps, d2) in EXPANSION_GRID.iter().zip(&d2) {
        let e6 = eps.powi(6);
        num += (eps * eps - d2) * e6;
        den += e6 * e6;
    }
    let c = num / den;
    let residual = (EXPANSION_GRID
        .iter()
        .zip(&d2)
        .map(|(eps, d2)| (d2 - eps * eps + c * eps.powi(6)).powi(2))
        .sum::<f64>()
        / EXPANSION_GRID.len() as f64)
        .sqrt();
    if residual > 1e-6 {
        return Err(DistanceError::FitResidual(residual));
    }
    Ok(ExpansionFit { k_hat: (720.0 * c.abs()).sqrt(), c, eps: EXPANSION_GRID.to_vec(), d2, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{derive_contact_data, heisenberg_frame};
    use crate::magnetic::{integrate_magnetic_flow, FlowState, MagneticScenario};
    use crate::rumin::HOneForm;

    fn heis() -> Arc<ContactData> {
        let (x1, x2) = heisenberg_frame();
        Arc::new(derive_contact_data(&x1, &x2).unwrap())
    }

    #[test]
    fn horizontal_and_vertical_distances() {
        let d = heis();
        let opts = ShootingOptions::default();
        let h = sr_distance_local(d.clone(), [0.0; 3], [0.1, 0.0, 0.0], &opts).unwrap();
        assert!((h - 0.1).abs() < 1e-6, "{h}");
        let v = sr_distance_local(d, [0.0; 3], [0.0, 0.0, 0.01], &opts).unwrap();
        let exact = (4.0 * std::f64::consts::PI * 0.01).sqrt();
        assert!((v - exact).abs() < 1e-4, "{v} vs {exact}");
    }

    #[test]
    fn straight_line_has_zero_curvature() {
        let d = heis();
        let s = MagneticScenario::from_potential(d.clone(), HOneForm::new(Expr::zero(), Expr::zero()), 1.0);
        let tr = integrate_magnetic_flow(&s, FlowState::new([0.0; 3], 0.6, 0.8, 0.0), 0.2, 1e-3).unwrap();
        let fit = ksr_from_expansion(d, &tr, 0.0, &ShootingOptions::default()).unwrap();
        assert!(fit.k_hat < 0.05, "{}", fit.k_hat);
        for (e, d2) in fit.eps.iter().zip(&fit.d2) {
            assert!((d2 - e * e).abs() < 1e-12);
        }
    }
}

