use srmag_core::lift::{build_lift, surface_family_predict, BracketTower, DerivativeTower, StepValue};
use srmag_core::scenario::{Scenario, LIBRARY};

#[test]
fn step_methods_agree_on_library_points() {
    for (name, src) in LIBRARY {
        let s = Scenario::from_toml_str(src).unwrap();
        let Some(step) = &s.step else { continue };
        let derivs = DerivativeTower::new(s.data(), s.field());
        let brackets = BracketTower::new(&build_lift(&s.magnetic).unwrap());
        for (i, p) in step.points.iter().enumerate() {
            let d = derivs.step(p, step.budget).unwrap();
            let b = brackets.step(p, step.budget).unwrap();
            assert_eq!(d.step, b.step, "{name} at {:?}", p.approx());
            assert!(d.step.lower_bound() >= 3);
            if let Some(expected) = step.expected.get(i) {
                assert_eq!(d.step, StepValue::Exact(*expected), "{name} at {:?}", p.approx());
            }
            if let Some(surf) = &s.surface {
                let pred = surface_family_predict(s.data(), &surf.f, &surf.b1, &surf.b2, surf.n, p).unwrap();
                assert_eq!(StepValue::Exact(pred.step), d.step, "{name} at {:?}", p.approx());
            }
        }
    }
}
