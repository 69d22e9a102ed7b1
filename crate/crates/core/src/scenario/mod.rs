//! Scenario files: a frame, a magnetic potential and/or field, a charge and
//! optional step, surface and abnormal-curve data, certified at load.

mod library;

use std::sync::Arc;

use serde::Deserialize;

pub use library::{builtin, builtin_source, LIBRARY};

use crate::contact::{derive_contact_data, sample_value, validate_frame, ContactData, ContactError, SampleConfig, VectorField};
use crate::expr::{parse_expr, ChartPoint, EvalError, EvalMode, Expr, ParseError};
use crate::lift::build_lift;
use crate::magnetic::MagneticScenario;
use crate::rumin::{dh1, is_closed, HOneForm, HTwoForm};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario document: {0}")]
    Syntax(String),
    #[error("{field}: {source}")]
    Expr { field: String, source: ParseError },
    #[error("{field}: {reason}")]
    BadValue { field: String, reason: String },
    #[error("scenario needs a [potential] or a [field] section")]
    NoField,
    #[error("unknown scenario `{0}`")]
    Unknown(String),
    #[error("certification failed: {0}")]
    Certification(ValidationReport),
}

impl ScenarioError {
    /// Parse and value errors, as opposed to failed certification.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, ScenarioError::Certification(_))
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub frame: FrameSection,
    pub potential: Option<PotentialSection>,
    pub field: Option<FieldSection>,
    #[serde(default)]
    pub charge: ChargeSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub step: Option<StepSection>,
    pub surface: Option<SurfaceSection>,
    pub abnormal: Option<AbnormalSection>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FrameSection {
    #[serde(rename = "X1")]
    pub x1: [String; 3],
    #[serde(rename = "X2")]
    pub x2: [String; 3],
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(rename = "A1")]
    pub a1: String,
    #[serde(rename = "A2")]
    pub a2: String,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    #[serde(rename = "B1")]
    pub b1: String,
    #[serde(rename = "B2")]
    pub b2: String,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChargeSection {
    pub q: f64,
}

impl Default for ChargeSection {
    fn default() -> Self {
        ChargeSection { q: 1.0 }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    /// Float mode forces float samples in the certification checks.
    #[serde(default)]
    pub mode: EvalMode,
}

#[derive(Clone, Debug, Deserialize, PartialEq, serde::Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Sampled residual bound for identities that cannot be checked exactly.
    pub identity: f64,
    /// Relative per-step energy drift bound of flows.
    pub energy_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { identity: 1e-9, energy_drift: crate::magnetic::DEFAULT_ENERGY_DRIFT }
    }
}

/// Points with known steps, as decimal or `p/q` strings.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StepSection {
    pub budget: u32,
    pub points: Vec<[String; 3]>,
    #[serde(default)]
    pub expected: Vec<u32>,
}

/// `β = (fⁿ/n!)(b₁, b₂)`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    pub f: String,
    pub b1: String,
    pub b2: String,
    pub n: u32,
}

/// Concatenation of constant-control arcs `[u₁, u₂, duration]`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AbnormalSection {
    pub start: [f64; 3],
    pub controls: Vec<[f64; 3]>,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Surface {
    pub f: Expr,
    pub b1: Expr,
    pub b2: Expr,
    pub n: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepPoints {
    pub budget: u32,
    pub points: Vec<ChartPoint>,
    pub expected: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbnormalCurve {
    pub start: [f64; 3],
    pub controls: Vec<([f64; 2], f64)>,
    pub dt: f64,
}

/// One certification check.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Largest sampled residual.
    pub residual: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, residual: f64, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), passed, residual, detail: detail.into() });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        if failed.is_empty() {
            write!(f, "all {} checks passed", self.checks.len())
        } else {
            write!(f, "failed checks: {}", failed.join(", "))
        }
    }
}

/// A certified scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub mode: EvalMode,
    pub tolerances: Tolerances,
    pub magnetic: MagneticScenario,
    pub surface: Option<Surface>,
    pub step: Option<StepPoints>,
    pub abnormal: Option<AbnormalCurve>,
    pub report: ValidationReport,
}

impl Scenario {
    pub fn data(&self) -> &Arc<ContactData> {
        &self.magnetic.data
    }

    pub fn field(&self) -> &HTwoForm {
        &self.magnetic.field
    }

    pub fn potential(&self) -> Option<&HOneForm> {
        self.magnetic.potential.as_ref()
    }

    pub fn from_toml_str(src: &str) -> Result<Scenario, ScenarioError> {
        let (scenario, report) = load(src)?;
        match scenario {
            Some(s) if report.passed() => Ok(s),
            _ => Err(ScenarioError::Certification(report)),
        }
    }

    pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
        Scenario::from_toml_str(builtin_source(name).ok_or_else(|| ScenarioError::Unknown(name.to_string()))?)
    }
}

/// Parses and certifies a scenario document, returning the report even when
/// a check fails. Only malformed input is an error.
pub fn validate_toml_str(src: &str) -> Result<ValidationReport, ScenarioError> {
    load(src).map(|(_, r)| r)
}

struct Parsed {
    file: ScenarioFile,
    x1: VectorField,
    x2: VectorField,
    potential: Option<HOneForm>,
    field: Option<HTwoForm>,
    surface: Option<Surface>,
    step: Option<StepPoints>,
    abnormal: Option<AbnormalCurve>,
}

fn expr(field: &str, s: &str) -> Result<Expr, ScenarioError> {
    parse_expr(s).map_err(|source| ScenarioError::Expr { field: field.to_string(), source })
}

fn bad(field: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::BadValue { field: field.to_string(), reason: reason.into() }
}

fn parse(src: &str) -> Result<Parsed, ScenarioError> {
    let file: ScenarioFile = toml::from_str(src).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
    let vf = |name: &str, c: &[String; 3]| -> Result<VectorField, ScenarioError> {
        Ok(VectorField::new([
            expr(&format!("frame.{name}[0]"), &c[0])?,
            expr(&format!("frame.{name}[1]"), &c[1])?,
            expr(&format!("frame.{name}[2]"), &c[2])?,
        ]))
    };
    let x1 = vf("X1", &file.frame.x1)?;
    let x2 = vf("X2", &file.frame.x2)?;
    let potential = match &file.potential {
        Some(p) => Some(HOneForm::new(expr("potential.A1", &p.a1)?, expr("potential.A2", &p.a2)?)),
        None => None,
    };
    let field = match &file.field {
        Some(b) => Some(HTwoForm::new(expr("field.B1", &b.b1)?, expr("field.B2", &b.b2)?)),
        None => None,
    };
    if potential.is_none() && field.is_none() {
        return Err(ScenarioError::NoField);
    }
    if !file.charge.q.is_finite() {
        return Err(bad("charge.q", "must be finite"));
    }
    let t = &file.tolerances;
    if !(t.identity > 0.0 && t.identity.is_finite()) || !(t.energy_drift > 0.0 && t.energy_drift.is_finite()) {
        return Err(bad("tolerances", "must be positive and finite"));
    }
    let surface = match &file.surface {
        Some(s) => {
            if s.n == 0 {
                return Err(bad("surface.n", "must be at least 1"));
            }
            Some(Surface {
                f: expr("surface.f", &s.f)?,
                b1: expr("surface.b1", &s.b1)?,
                b2: expr("surface.b2", &s.b2)?,
                n: s.n,
            })
        }
        None => None,
    };
    let step = match &file.step {
        Some(s) => {
            let points = s
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    ChartPoint::from_decimal_strs([&p[0], &p[1], &p[2]])
                        .map_err(|e: EvalError| bad(&format!("step.points[{i}]"), e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if !s.expected.is_empty() && s.expected.len() != points.len() {
                return Err(bad("step.expected", "length differs from step.points"));
            }
            Some(StepPoints { budget: s.budget, points, expected: s.expected.clone() })
        }
        None => None,
    };
    let abnormal = match &file.abnormal {
        Some(a) => {
            if !(a.dt > 0.0 && a.dt.is_finite()) || a.controls.iter().flatten().any(|v| !v.is_finite()) {
                return Err(bad("abnormal", "dt and controls must be finite, dt positive"));
            }
            Some(AbnormalCurve {
                start: a.start,
                controls: a.controls.iter().map(|c| ([c[0], c[1]], c[2])).collect(),
                dt: a.dt,
            })
        }
        None => None,
    };
    Ok(Parsed { file, x1, x2, potential, field, surface, step, abnormal })
}

/// Largest sampled `|e|`; an identity passes exactly when `e` is a
/// polynomial, otherwise within `tol`.
fn identity_check(e: &Expr, mode: EvalMode, tol: f64) -> (bool, f64) {
    let mut worst: f64 = 0.0;
    for p in SampleConfig::default().points() {
        let v = match mode {
            EvalMode::Float64 => Ok(e.eval_f64(p.approx())),
            EvalMode::ExactRational => sample_value(e, &p).map(|v| v.to_f64()),
        };
        match v {
            Ok(v) if v.is_finite() => worst = worst.max(v.abs()),
            _ => return (false, f64::INFINITY),
        }
    }
    let passed = if mode == EvalMode::ExactRational && e.is_polynomial() {
        e.is_identically_zero()
    } else {
        worst <= tol
    };
    (passed, worst)
}

fn load(src: &str) -> Result<(Option<Scenario>, ValidationReport), ScenarioError> {
    let p = parse(src)?;
    let mode = p.file.eval.mode;
    let tol = p.file.tolerances.identity;
    let mut report = ValidationReport::default();

    let frame = validate_frame(&p.x1, &p.x2, &SampleConfig::default());
    report.push(
        "frame",
        frame.passed,
        frame.worst_residual,
        format!("{} samples, {} failures", frame.samples, frame.failures),
    );
    let data = match derive_contact_data(&p.x1, &p.x2) {
        Ok(d) => {
            report.push("contact data", true, 0.0, "structure functions derived");
            Arc::new(d)
        }
        Err(e @ (ContactError::Degenerate { .. } | ContactError::SelfCheck(_) | ContactError::Eval(_))) => {
            report.push("contact data", false, f64::INFINITY, e.to_string());
            return Ok((None, report));
        }
        Err(e) => return Err(bad("frame", e.to_string())),
    };

    let field = match (&p.potential, &p.field) {
        (Some(a), Some(b)) => {
            let computed = dh1(a, &data);
            let d1 = Expr::sub(computed.b1.clone(), b.b1.clone()).simplify();
            let d2 = Expr::sub(computed.b2.clone(), b.b2.clone()).simplify();
            let (ok1, r1) = identity_check(&d1, mode, tol);
            let (ok2, r2) = identity_check(&d2, mode, tol);
            report.push("potential", ok1 && ok2, r1.max(r2), "d_H A = B");
            b.clone()
        }
        (Some(a), None) => dh1(a, &data),
        (None, Some(b)) => b.clone(),
        (None, None) => unreachable!("rejected while parsing"),
    };

    let closed = is_closed(&field, &data, &SampleConfig::default());
    report.push(
        "closedness",
        closed.closed && closed.equivalence_holds,
        closed.dbeta_residual.max(closed.divergence_residual),
        if closed.exact { "exact" } else { "sampled" },
    );

    let magnetic = MagneticScenario::new(data.clone(), p.potential.clone(), field.clone(), p.file.charge.q);
    if p.potential.is_some() {
        match build_lift(&magnetic) {
            Ok(_) => report.push("lift", true, 0.0, "[Y1,Y2] = c12^1 Y1 + c12^2 Y2 + Y0"),
            Err(e) => report.push("lift", false, f64::INFINITY, e.to_string()),
        }
    }

    if let Some(s) = &p.surface {
        let scale = Expr::product([
            Expr::pow(s.f.clone(), s.n as i32),
            Expr::constant(num_rational::BigRational::from_integer(factorial(s.n)).recip()),
        ]);
        let d1 = Expr::sub(Expr::product([scale.clone(), s.b1.clone()]), field.b1.clone()).simplify();
        let d2 = Expr::sub(Expr::product([scale, s.b2.clone()]), field.b2.clone()).simplify();
        let (ok1, r1) = identity_check(&d1, mode, tol);
        let (ok2, r2) = identity_check(&d2, mode, tol);
        report.push("surface", ok1 && ok2, r1.max(r2), "B = f^n/n! (b1, b2)");
    }

    let scenario = Scenario {
        name: p.file.name.clone(),
        description: p.file.description.clone(),
        mode,
        tolerances: p.file.tolerances.clone(),
        magnetic,
        surface: p.surface,
        step: p.step,
        abnormal: p.abnormal,
        report: report.clone(),
    };
    Ok((Some(scenario), report))
}

fn factorial(n: u32) -> num_bigint::BigInt {
    (1..=n).map(num_bigint::BigInt::from).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEIS: &str = "name = \"t\"\n[frame]\nX1 = [\"1\", \"0\", \"-y/2\"]\nX2 = [\"0\", \"1\", \"x/2\"]\n";

    #[test]
    fn potential_only_computes_the_field() {
        let s = Scenario::from_toml_str(&format!("{HEIS}[potential]\nA1 = \"0\"\nA2 = \"x^2/2\"\n")).unwrap();
        assert!(s.field().identically_equal(&HTwoForm::new(Expr::one(), Expr::zero())));
        assert_eq!(s.magnetic.q, 1.0);
    }

    #[test]
    fn mismatched_potential_fails_certification() {
        let src = format!("{HEIS}[potential]\nA1 = \"0\"\nA2 = \"x^2/2\"\n[field]\nB1 = \"2\"\nB2 = \"0\"\n");
        let report = validate_toml_str(&src).unwrap();
        assert!(!report.passed());
        let check = report.checks.iter().find(|c| c.name == "potential").unwrap();
        assert!(!check.passed && check.residual == 1.0);
        assert!(matches!(Scenario::from_toml_str(&src), Err(ScenarioError::Certification(_))));
    }

    #[test]
    fn field_only_must_be_closed() {
        let ok = Scenario::from_toml_str(&format!("{HEIS}[field]\nB1 = \"x\"\nB2 = \"y\"\n")).unwrap();
        assert!(ok.potential().is_none());
        let report = validate_toml_str(&format!("{HEIS}[field]\nB1 = \"0\"\nB2 = \"x\"\n")).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn input_errors() {
        let e = validate_toml_str(&format!("{HEIS}[field]\nB1 = \"x +\"\nB2 = \"0\"\n")).unwrap_err();
        assert!(matches!(e, ScenarioError::Expr { ref field, .. } if field == "field.B1"));
        assert!(e.is_input_error());
        assert_eq!(validate_toml_str(HEIS).unwrap_err(), ScenarioError::NoField);
        assert!(matches!(validate_toml_str("name = 1"), Err(ScenarioError::Syntax(_))));
        assert!(matches!(
            validate_toml_str(&format!("{HEIS}[field]\nB1 = \"1\"\nB2 = \"0\"\n[extra]\n")),
            Err(ScenarioError::Syntax(_))
        ));
    }

    #[test]
    fn degenerate_frame_is_a_certification_failure() {
        let src = "name = \"d\"\n[frame]\nX1 = [\"1\", \"0\", \"0\"]\nX2 = [\"0\", \"1\", \"0\"]\n[field]\nB1 = \"0\"\nB2 = \"0\"\n";
        let report = validate_toml_str(src).unwrap();
        assert!(!report.passed());
    }
}
