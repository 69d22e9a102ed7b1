use super::{FlowState, MagneticScenario};
use crate::expr::Expr;

/// Initial covector for the potential `A` reproducing the flow of
/// `A′ = A + d_H f` started at `init`.
///
/// Since `H_{A′}(λ) = H_A(λ + q df)`, the shift is `h_i ↦ h_i + q X_i f(p₀)`
/// for `i = 1, 2, 0`.
pub fn gauge_shift(s: &MagneticScenario, f: &Expr, init: FlowState) -> FlowState {
    let p = init.p;
    let xf = |i: usize| s.data.frame[i].apply(f).eval_f64(p);
    FlowState {
        p,
        h1: init.h1 + s.q * xf(1),
        h2: init.h2 + s.q * xf(2),
        h0: init.h0 + s.q * xf(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{derive_contact_data, heisenberg_frame};
    use crate::expr::parse_expr;
    use crate::magnetic::integrate_magnetic_flow;
    use crate::rumin::{dh0, HOneForm};
    use std::sync::Arc;

    #[test]
    fn shifted_flows_coincide() {
        let (x1, x2) = heisenberg_frame();
        let d = Arc::new(derive_contact_data(&x1, &x2).unwrap());
        let a = HOneForm::new(Expr::zero(), parse_expr("x^2/2").unwrap());
        let f = parse_expr("x*y - z^2/3 + y^3").unwrap();
        let a_shift = a.add(&dh0(&f, &d));
        for q in [0.0, 1.0, -1.5] {
            let s = MagneticScenario::from_potential(d.clone(), a.clone(), q);
            let s_shift = MagneticScenario::from_potential(d.clone(), a_shift.clone(), q);
            let init = FlowState::new([0.2, -0.1, 0.3], 0.4, -0.7, 0.5);
            let moved = gauge_shift(&s, &f, init);
            if q == 0.0 {
                assert_eq!(moved, init);
            }
            let t1 = integrate_magnetic_flow(&s_shift, init, 1.0, 1e-3).unwrap();
            let t2 = integrate_magnetic_flow(&s, moved, 1.0, 1e-3).unwrap();
            assert!(t1.sup_distance(&t2) < 1e-8);
        }
        let s = MagneticScenario::from_potential(d, a, 1.0);
        let init = FlowState::new([1.0, 1.0, 0.0], 1.0, 0.0, 0.0);
        assert_eq!(gauge_shift(&s, &Expr::int(3), init), init);
    }
}
