use super::{Scenario, ScenarioError};

/// Bundled scenarios as `(name, source)`.
pub const LIBRARY: &[(&str, &str)] = &[
    ("engel", include_str!("../../scenarios/engel.toml")),
    ("gauge-pair", include_str!("../../scenarios/gauge-pair.toml")),
    ("rank2-axis", include_str!("../../scenarios/rank2-axis.toml")),
    ("rank1-4z-x2", include_str!("../../scenarios/rank1-4z-x2.toml")),
    ("rank0-xn-2", include_str!("../../scenarios/rank0-xn-2.toml")),
    ("rank0-xn-3", include_str!("../../scenarios/rank0-xn-3.toml")),
    ("rank0-xn-4", include_str!("../../scenarios/rank0-xn-4.toml")),
    ("surface-family-1", include_str!("../../scenarios/surface-family-1.toml")),
    ("surface-family-2", include_str!("../../scenarios/surface-family-2.toml")),
    ("surface-family-3", include_str!("../../scenarios/surface-family-3.toml")),
    ("surface-family-4", include_str!("../../scenarios/surface-family-4.toml")),
    ("crossing-1", include_str!("../../scenarios/crossing-1.toml")),
    ("crossing-2", include_str!("../../scenarios/crossing-2.toml")),
    ("spiral-cylinder", include_str!("../../scenarios/spiral-cylinder.toml")),
];

pub fn builtin_source(name: &str) -> Option<&'static str> {
    LIBRARY.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
    Scenario::builtin(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_scenario_certifies() {
        for (name, src) in LIBRARY {
            let s = Scenario::from_toml_str(src).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&s.name, name);
            assert!(s.report.passed());
            assert!(s.potential().is_some());
        }
        assert_eq!(builtin("nope").unwrap_err(), ScenarioError::Unknown("nope".into()));
    }
}
