use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};
use srmag_core::expr::ChartPoint;
use srmag_core::lift::{
    abnormal_certificate, build_lift, integrate_lifted_flow, rank_classify, BracketTower, DerivativeTower,
    HorizontalCurve, LiftError, LiftedState, StepReport,
};
use srmag_core::magnetic::{
    characteristic_flow, fmt_f64, integrate_magnetic_flow_with, ksr_from_expansion, ksr_value, CharacteristicOptions,
    FlowState, ShootingOptions, Trajectory,
};
use srmag_core::scenario::{validate_toml_str, LIBRARY};

use crate::input::{self, parse_floats};
use crate::output::emit;
use crate::{CliError, MethodArg, OutputArgs};

pub fn validate(arg: &str, json_out: bool) -> Result<(), CliError> {
    let source = input::scenario_source(arg)?;
    let report = validate_toml_str(&source).map_err(input::scenario_error)?;
    if json_out {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        for c in &report.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            println!("{status} {:<13} residual={} {}", c.name, fmt_f64(c.residual), c.detail);
        }
        println!("{report}");
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Certification(report.to_string()))
    }
}

pub fn flow(arg: &str, init: &str, t_final: f64, dt: f64, lifted: bool, out: &OutputArgs) -> Result<(), CliError> {
    let loaded = input::load(arg)?;
    let s = &loaded.scenario;
    if s.potential().is_none() {
        return Err(CliError::Input("flows need a [potential] section".into()));
    }
    let mut body = Vec::new();
    if lifted {
        let v = parse_floats::<8>("--init", init)?;
        let state = LiftedState::new([v[0], v[1], v[2], v[3]], v[4], v[5], v[6], v[7]);
        let tr = integrate_lifted_flow(&s.magnetic, state, t_final, dt).map_err(|e| CliError::Numeric(e.to_string()))?;
        tr.write_csv(&mut body).expect("write to memory");
    } else {
        let v = parse_floats::<6>("--init", init)?;
        let state = FlowState::new([v[0], v[1], v[2]], v[3], v[4], v[5]);
        let tr = integrate_magnetic_flow_with(&s.magnetic, state, t_final, dt, s.tolerances.energy_drift)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        tr.write_csv(&mut body).expect("write to memory");
    }
    let args = json!({ "init": init, "T": t_final, "dt": dt, "lifted": lifted });
    emit(out, &body, "flow", s, &loaded.source, args)
}

struct StepRow {
    point: ChartPoint,
    report: StepReport,
    method: &'static str,
    rank: Option<usize>,
    characteristic: Option<bool>,
}

fn step_row(
    s: &srmag_core::scenario::Scenario,
    derivs: &DerivativeTower,
    brackets: Option<&BracketTower>,
    method: MethodArg,
    p: &ChartPoint,
    budget: u32,
) -> Result<StepRow, CliError> {
    let lift_err = |e: LiftError| CliError::Input(format!("at {:?}: {e}", p.approx()));
    let (report, label) = match method {
        MethodArg::Derivatives => (derivs.step(p, budget).map_err(lift_err)?, "derivatives"),
        MethodArg::Brackets => (brackets.expect("tower built").step(p, budget).map_err(lift_err)?, "brackets"),
        MethodArg::Both => {
            let d = derivs.step(p, budget).map_err(lift_err)?;
            let b = brackets.expect("tower built").step(p, budget).map_err(lift_err)?;
            if d.step != b.step {
                return Err(CliError::Certification(format!(
                    "step methods disagree at {:?}: derivatives {}, brackets {}",
                    p.approx(),
                    d.step,
                    b.step
                )));
            }
            (d, "both")
        }
    };
    let (rank, characteristic) = match rank_classify(&s.magnetic, p) {
        Ok(r) => (Some(r.rank), r.characteristic),
        Err(LiftError::NotInZeroLocus(_)) => (None, None),
        Err(e) => return Err(lift_err(e)),
    };
    Ok(StepRow { point: p.clone(), report, method: label, rank, characteristic })
}

pub fn step(
    arg: &str,
    points: Option<&Path>,
    grid: Option<&str>,
    budget: Option<u32>,
    method: MethodArg,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let loaded = input::load(arg)?;
    let s = &loaded.scenario;
    let pts = match (points, grid) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            input::parse_points(&text)?
        }
        (None, Some(spec)) => input::parse_grid(spec)?,
        (None, None) => s.step.as_ref().map(|st| st.points.clone()).unwrap_or_default(),
    };
    if pts.is_empty() {
        return Err(CliError::Input("no points to evaluate".into()));
    }
    let budget = budget.or(s.step.as_ref().map(|st| st.budget)).unwrap_or(8);
    let derivs = DerivativeTower::new(s.data(), s.field());
    let brackets = if method == MethodArg::Derivatives {
        None
    } else {
        let lift = build_lift(&s.magnetic).map_err(|e| CliError::Input(e.to_string()))?;
        Some(BracketTower::new(&lift))
    };
    // rows come back in grid order whatever the completion order
    let rows: Vec<StepRow> = pts
        .par_iter()
        .map(|p| step_row(s, &derivs, brackets.as_ref(), method, p, budget))
        .collect::<Result<_, _>>()?;
    let mut body = String::from("x,y,z,step,method,witness_word,rank,char_flag\n");
    for r in &rows {
        let c = r.point.coords();
        body.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            c[0],
            c[1],
            c[2],
            r.report.step,
            r.method,
            r.report.witness.as_deref().unwrap_or(""),
            r.rank.map(|k| k.to_string()).unwrap_or_default(),
            r.characteristic.map(|b| b.to_string()).unwrap_or_default(),
        ));
    }
    let args = json!({
        "points": points.map(|p| p.display().to_string()),
        "grid": grid,
        "budget": budget,
        "method": format!("{method:?}").to_lowercase(),
    });
    emit(out, body.as_bytes(), "step", s, &loaded.source, args)
}

pub struct CharacteristicArgs {
    pub start: [f64; 3],
    pub t_final: f64,
    pub dt: f64,
    pub normalize: bool,
    pub continuation: Option<[f64; 2]>,
}

pub fn abnormal(
    arg: &str,
    characteristic: Option<CharacteristicArgs>,
    steps: bool,
    budget: u32,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let loaded = input::load(arg)?;
    let s = &loaded.scenario;
    let numeric = |e: srmag_core::magnetic::FlowError| CliError::Numeric(e.to_string());
    let (curve, halted_at, source_args) = match &characteristic {
        Some(c) => {
            let opts = CharacteristicOptions { normalize: c.normalize, continuation: c.continuation, ..Default::default() };
            let tr = characteristic_flow(&s.magnetic, c.start, c.t_final, c.dt, &opts).map_err(numeric)?;
            let args = json!({
                "init": c.start, "T": c.t_final, "dt": c.dt, "normalize": c.normalize, "continuation": c.continuation,
            });
            (HorizontalCurve::from(&tr), tr.halted_at, args)
        }
        None => {
            let a = s
                .abnormal
                .as_ref()
                .ok_or_else(|| CliError::Input("scenario has no [abnormal] section; pass --init, --T and --dt".into()))?;
            let curve = HorizontalCurve::from_controls(&s.magnetic, a.start, &a.controls, a.dt).map_err(numeric)?;
            (curve, None, json!({ "controls": "scenario" }))
        }
    };
    let report = abnormal_certificate(&s.magnetic, &curve);
    let tower = DerivativeTower::new(s.data(), s.field());
    let samples: Vec<Value> = (0..curve.points.len())
        .into_par_iter()
        .map(|i| {
            let p = curve.points[i];
            let mut v = json!({
                "t": curve.t[i], "x": p[0], "y": p[1], "z": p[2],
                "class": report.classes[i], "b": report.b[i],
            });
            if steps {
                let step = ChartPoint::from_f64(p)
                    .ok_or_else(|| CliError::Numeric(format!("non-finite sample {p:?}")))
                    .and_then(|cp| tower.step(&cp, budget).map_err(|e| CliError::Input(e.to_string())))?;
                v["step"] = json!(step.step.to_string());
            }
            Ok(v)
        })
        .collect::<Result<_, CliError>>()?;
    let segments: Vec<Value> = report
        .segments
        .iter()
        .map(|g| json!({ "class": g.class, "start": g.start, "end": g.end, "t_start": g.t_start, "t_end": g.t_end }))
        .collect();
    let doc = json!({
        "passed": report.passed,
        "margin": report.margin,
        "first_violation": report.first_violation,
        "halted_at": halted_at,
        "segments": segments,
        "samples": samples,
    });
    let body = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
    let mut args = source_args;
    args["steps"] = json!(steps);
    args["budget"] = json!(budget);
    emit(out, body.as_bytes(), "abnormal", s, &loaded.source, args)?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Certification(format!(
            "curve is not abnormal: first violation at sample {}, margin {}",
            report.first_violation.unwrap_or(0),
            report.margin
        )))
    }
}

pub fn ksr(arg: &str, traj: &Path, t: f64, expansion: bool, out: &OutputArgs) -> Result<(), CliError> {
    let loaded = input::load(arg)?;
    let s = &loaded.scenario;
    let text = std::fs::read_to_string(traj).map_err(|e| CliError::Input(format!("{}: {e}", traj.display())))?;
    let tr = Trajectory::from_csv(&text, &s.magnetic).map_err(|e| CliError::Input(e.to_string()))?;
    let k = ksr_value(&tr, &s.magnetic, t).map_err(|e| CliError::Numeric(e.to_string()))?;
    let i = (((t - tr.t[0]) / tr.dt()).round() as usize).min(tr.len() - 1);
    let beta = s.magnetic.beta_at(tr.states[i].p);
    let qb = s.magnetic.q * (beta[0] * tr.u[i][0] + beta[1] * tr.u[i][1]);
    let mut doc = json!({ "t": tr.t[i], "ksr": k, "q_b": qb });
    if expansion {
        let fit = ksr_from_expansion(s.data().clone(), &tr, t, &ShootingOptions::default())
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        doc["expansion"] = json!({ "k_hat": fit.k_hat, "c": fit.c, "residual": fit.residual, "eps": fit.eps, "d2": fit.d2 });
    }
    let body = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
    let args = json!({ "traj": traj.display().to_string(), "t": t, "expansion": expansion });
    emit(out, body.as_bytes(), "ksr", s, &loaded.source, args)
}

pub fn list() -> Result<(), CliError> {
    for (name, _) in LIBRARY {
        println!("{name}");
    }
    Ok(())
}
