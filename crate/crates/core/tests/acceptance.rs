//! Acceptance suite: one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srmag_core::contact::{derive_contact_data, heisenberg_frame, ContactData, VectorField};
use srmag_core::expr::{parse_expr, ChartPoint, Expr, Scalar};
use srmag_core::lift::{
    abnormal_certificate, build_lift, derivative_word_value, integrate_lifted_flow, rank_classify, BracketTower,
    DerivativeTower, HorizontalCurve, LiftedField, LiftedState, SampleClass, StepValue,
};
use srmag_core::magnetic::{
    gauge_shift, geodesic_residuals, integrate_centered, integrate_magnetic_flow, ksr_from_expansion, FlowState,
    ShootingOptions,
};
use srmag_core::rumin::{characteristic_divergence, dh0, dh1, dh2, HOneForm, HTwoForm};
use srmag_core::scenario::{Scenario, LIBRARY};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn load(name: &str) -> Result<Scenario, String> {
    Scenario::builtin(name).map_err(|e| format!("{name}: {e}"))
}

fn e(s: &str) -> Expr {
    parse_expr(s).expect("literal expression")
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn pt(n: [i64; 3]) -> ChartPoint {
    ChartPoint::from_ints(n)
}

fn exact(v: &Scalar) -> Option<&BigRational> {
    match v {
        Scalar::Exact(q) => Some(q),
        Scalar::Float(_) => None,
    }
}

/// Step from both methods, which must agree.
fn both_steps(s: &Scenario, p: &ChartPoint, budget: u32) -> Result<(StepValue, Option<String>), String> {
    let lift = build_lift(&s.magnetic).map_err(|e| e.to_string())?;
    let d = DerivativeTower::new(s.data(), s.field()).step(p, budget).map_err(|e| e.to_string())?;
    let b = BracketTower::new(&lift).step(p, budget).map_err(|e| e.to_string())?;
    ensure(d.step == b.step, || {
        format!("{} at {:?}: derivatives {} vs brackets {}", s.name, p.approx(), d.step, b.step)
    })?;
    Ok((d.step, d.witness))
}

fn engel_lift() -> Outcome {
    let s = load("engel")?;
    let data = s.data();
    let beta = dh1(s.potential().ok_or("engel has no potential")?, data);
    ensure(beta.identically_equal(&HTwoForm::new(Expr::one(), Expr::zero())), || {
        format!("d_H A = ({}, {})", beta.b1, beta.b2)
    })?;
    let lift = build_lift(&s.magnetic).map_err(|e| e.to_string())?;
    let y12 = lift.y1.bracket(&lift.y2);
    let dz = VectorField::new([Expr::zero(), Expr::zero(), Expr::one()]);
    let zero = VectorField::zero();
    let expect = [
        ("[Y1,Y2]", y12.clone(), LiftedField::new(dz, Expr::x())),
        ("[Y1,[Y1,Y2]]", lift.y1.bracket(&y12), LiftedField::new(zero.clone(), Expr::one())),
        ("[Y2,[Y1,Y2]]", lift.y2.bracket(&y12), LiftedField::new(zero, Expr::zero())),
    ];
    for (label, got, want) in &expect {
        ensure(got.identically_equal(want), || format!("{label} = {got:?}"))?;
    }
    Ok("d_H A = (1,0); [Y1,Y2] = dz + x dw, [Y1,[Y1,Y2]] = dw, [Y2,[Y1,Y2]] = 0".into())
}

fn step_tables() -> Outcome {
    let s = load("rank1-4z-x2")?;
    let (origin, witness) = both_steps(&s, &pt([0, 0, 0]), 8)?;
    ensure(origin == StepValue::Exact(5), || format!("origin step {origin}"))?;
    let w = derivative_word_value(s.data(), s.field(), &[1, 2], 1, &pt([0, 0, 0])).map_err(|e| e.to_string())?;
    ensure(exact(&w) == Some(&rat(-2, 1)), || format!("X2X1b1(0) = {}", w.to_f64()))?;
    for y in [-2, -1, 1, 2] {
        let (st, _) = both_steps(&s, &pt([0, y, 0]), 8)?;
        ensure(st == StepValue::Exact(4), || format!("(0,{y},0) step {st}"))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 2..=4u32 {
        let s = load(&format!("rank0-xn-{n}"))?;
        for _ in 0..10 {
            let p = ChartPoint::new([
                rat(0, 1),
                rat(rng.gen_range(-300..=300), 100),
                rat(rng.gen_range(-300..=300), 100),
            ]);
            let (st, _) = both_steps(&s, &p, n + 5)?;
            ensure(st == StepValue::Exact(n + 3), || format!("xn-{n} at {:?}: step {st}", p.approx()))?;
        }
    }

    // f = z - xy/2: off the surface, regular (y != 0), characteristic (y = 0)
    let off = [[1, 0, 1], [2, -1, 3], [0, 0, -1]].map(pt);
    let regular = [
        ChartPoint::new([rat(0, 1), rat(1, 1), rat(0, 1)]),
        ChartPoint::new([rat(2, 1), rat(1, 1), rat(1, 1)]),
        ChartPoint::new([rat(-1, 1), rat(3, 1), rat(-3, 2)]),
    ];
    let characteristic = [[0, 0, 0], [1, 0, 0], [-2, 0, 0]].map(pt);
    for n in 1..=2u32 {
        let s = load(&format!("surface-family-{n}"))?;
        let budget = 2 * n + 4;
        for (pts, want) in [(&off, 3), (&regular, n + 3), (&characteristic, 2 * n + 3)] {
            for p in pts.iter() {
                let (st, _) = both_steps(&s, p, budget)?;
                ensure(st == StepValue::Exact(want), || format!("family n={n} at {:?}: step {st}", p.approx()))?;
            }
        }
        let ops: Vec<usize> = (0..n).flat_map(|_| [1, 2]).collect();
        let sign = if n % 2 == 0 { 1 } else { -1 };
        let w = derivative_word_value(s.data(), s.field(), &ops, 1, &pt([0, 0, 0])).map_err(|e| e.to_string())?;
        ensure(exact(&w) == Some(&rat(sign, 1)), || format!("(X2X1)^{n} b1 = {}", w.to_f64()))?;
    }
    Ok(format!(
        "rank1: 5 at origin (witness {}), 4 at (0,±1,0),(0,±2,0); xn: n+3 on 30 points; family n=1,2: 3/n+3/2n+3",
        witness.unwrap_or_default()
    ))
}

fn rank_classification() -> Outcome {
    let s = load("rank2-axis")?;
    for z in [-2, 0, 1, 3] {
        let p = pt([0, 0, z]);
        let r = rank_classify(&s.magnetic, &p).map_err(|e| e.to_string())?;
        ensure(r.rank == 2, || format!("rank2-axis at z={z}: rank {}", r.rank))?;
        let (st, _) = both_steps(&s, &p, 8)?;
        ensure(st == StepValue::Exact(4), || format!("rank2-axis at z={z}: step {st}"))?;
    }
    let s = load("rank1-4z-x2")?;
    for (p, step, ch) in [([0, 0, 0], 5, true), ([0, 1, 0], 4, false), ([0, -2, 0], 4, false)] {
        let r = rank_classify(&s.magnetic, &pt(p)).map_err(|e| e.to_string())?;
        ensure(r.rank == 1 && r.refined_step == Some(step) && r.characteristic == Some(ch), || {
            format!("rank1 at {p:?}: rank {} refined {:?} char {:?}", r.rank, r.refined_step, r.characteristic)
        })?;
        let (st, _) = both_steps(&s, &pt(p), 8)?;
        ensure(st == StepValue::Exact(step), || format!("rank1 at {p:?}: step {st}"))?;
    }
    let s = load("rank0-xn-2")?;
    let r = rank_classify(&s.magnetic, &pt([0, 0, 0])).map_err(|e| e.to_string())?;
    ensure(r.rank == 0, || format!("xn-2 rank {}", r.rank))?;
    let (st, _) = both_steps(&s, &pt([0, 0, 0]), 8)?;
    ensure(st.lower_bound() >= 5, || format!("xn-2 step {st}"))?;
    Ok(format!("rank 2 -> 4 on the z-axis; rank 1 -> 5 (char) / 4; rank 0 -> {st}"))
}

fn random_poly(rng: &mut ChaCha8Rng) -> Expr {
    let terms = rng.gen_range(1..=8);
    Expr::sum((0..terms).map(|_| {
        let a = rng.gen_range(0..=4);
        let b = rng.gen_range(0..=4 - a);
        let c = rng.gen_range(0..=4 - a - b);
        Expr::product([
            Expr::ratio(rng.gen_range(-9..=9), rng.gen_range(1..=5)),
            Expr::pow(Expr::x(), a),
            Expr::pow(Expr::y(), b),
            Expr::pow(Expr::z(), c),
        ])
    }))
}

fn heisenberg() -> ContactData {
    let (x1, x2) = heisenberg_frame();
    derive_contact_data(&x1, &x2).expect("heisenberg frame")
}

fn rumin_complex() -> Outcome {
    let data = heisenberg();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..20 {
        let f = random_poly(&mut rng);
        let ddf = dh1(&dh0(&f, &data), &data);
        ensure(ddf.is_polynomial() && ddf.is_identically_zero(), || format!("d_H(d_H f) != 0 for f = {f}"))?;
        let a = HOneForm::new(random_poly(&mut rng), random_poly(&mut rng));
        let dda = dh2(&dh1(&a, &data), &data).c;
        ensure(dda.is_polynomial() && dda.is_identically_zero(), || {
            format!("sample {i}: d_H(d_H A) = {dda} for A = ({}, {})", a.a1, a.a2)
        })?;
    }
    Ok("d_H^1 d_H^0 = 0 and d_H^2 d_H^1 = 0 on 20 random polynomials each".into())
}

fn maxwell() -> Outcome {
    for (name, _) in LIBRARY {
        let s = load(name)?;
        let c = dh2(s.field(), s.data()).c;
        let d = characteristic_divergence(s.field(), s.data());
        let sum = Expr::sum([c.clone(), d.clone()]);
        ensure(c.is_identically_zero() && d.is_identically_zero() && sum.is_identically_zero(), || {
            format!("{name}: d_H beta = {c}, div = {d}")
        })?;
    }
    let data = heisenberg();
    let control = HTwoForm::new(Expr::zero(), Expr::x());
    let c = dh2(&control, &data).c;
    let d = characteristic_divergence(&control, &data);
    ensure(c.identically_equal(&Expr::one()) && d.identically_equal(&Expr::int(-1)), || {
        format!("control: d_H beta = {c}, div = {d}")
    })?;
    Ok(format!("{} library fields closed in both forms; control (0,x): d_H beta = 1, div = -1", LIBRARY.len()))
}

fn lifted_projection() -> Outcome {
    let s = load("engel")?;
    let init = FlowState::new([0.0; 3], 1.0, 0.0, 0.0);
    let base = integrate_magnetic_flow(&s.magnetic, init, 1.0, 1e-3).map_err(|e| e.to_string())?;
    let lifted = integrate_lifted_flow(&s.magnetic, LiftedState::from_magnetic(&s.magnetic, init, 0.0).map_err(|e| e.to_string())?, 1.0, 1e-3)
        .map_err(|e| e.to_string())?;
    let dist = lifted.projection_distance(&base);
    ensure(dist <= 1e-6, || format!("projection distance {dist:e}"))?;
    ensure(lifted.zw_drift <= 1e-10, || format!("zw drift {:e}", lifted.zw_drift))?;
    Ok(format!("sup distance {dist:.2e}, zw drift {:.2e}", lifted.zw_drift))
}

fn residuals() -> Outcome {
    let s = load("engel")?;
    let inits = [
        FlowState::new([0.0; 3], 1.0, 0.0, 0.0),
        FlowState::new([0.3, -0.2, 0.1], 0.6, -0.8, 0.5),
        FlowState::new([-1.0, 0.5, 2.0], 0.0, 1.0, -1.5),
    ];
    let mut worst = [0.0f64; 2];
    for init in inits {
        for (k, dt) in [1e-2, 1e-3].into_iter().enumerate() {
            let tr = integrate_magnetic_flow(&s.magnetic, init, 1.0, dt).map_err(|e| e.to_string())?;
            let r = geodesic_residuals(&tr, &s.magnetic).map_err(|e| e.to_string())?;
            let m = r.r1_max.max(r.r2_max);
            ensure(m <= 100.0 * dt * dt, || format!("dt={dt}: residual {m:e} > {:e}", 100.0 * dt * dt))?;
            worst[k] = worst[k].max(m);
        }
    }
    let order = (worst[0] / worst[1]).log10();
    ensure((1.5..=2.5).contains(&order), || format!("observed order {order:.2}"))?;
    Ok(format!("max residual {:.2e} (dt=1e-2), {:.2e} (dt=1e-3), observed order {order:.2}", worst[0], worst[1]))
}

fn curvature_expansion() -> Outcome {
    let s = load("engel")?;
    let mut notes = Vec::new();
    for q in [1.0, 2.0] {
        let m = s.magnetic.with_charge(q);
        let init = FlowState::new([0.0; 3], 1.0, 0.0, 0.0);
        let tr = integrate_centered(&m, init, 0.2, 1e-3).map_err(|e| e.to_string())?;
        // b(γ̇) = β·u with β = (1,0) and u = (1,0) at the origin
        let target = q * 1.0;
        let fit = ksr_from_expansion(s.data().clone(), &tr, 0.0, &ShootingOptions::default())
            .map_err(|e| e.to_string())?;
        let rel = (fit.k_hat - target).abs() / target;
        ensure(rel <= 0.1, || format!("q={q}: k_hat {} vs {target} ({:.1}%)", fit.k_hat, 100.0 * rel))?;
        notes.push(format!("q={q}: k_hat {:.4} ({:.2}%)", fit.k_hat, 100.0 * rel));
    }
    Ok(notes.join(", "))
}

fn abnormal_curves() -> Outcome {
    let s = load("engel")?;
    let a = s.abnormal.as_ref().ok_or("engel has no [abnormal]")?;
    let line = HorizontalCurve::from_controls(&s.magnetic, a.start, &a.controls, a.dt).map_err(|e| e.to_string())?;
    let rep = abnormal_certificate(&s.magnetic, &line);
    ensure(rep.passed && rep.segments.len() == 1 && rep.segments[0].class == SampleClass::Characteristic, || {
        format!("engel line: passed {} segments {:?}", rep.passed, rep.segments)
    })?;

    let s = load("crossing-2")?;
    let a = s.abnormal.as_ref().ok_or("crossing-2 has no [abnormal]")?;
    let curve = HorizontalCurve::from_controls(&s.magnetic, a.start, &a.controls, a.dt).map_err(|e| e.to_string())?;
    let rep = abnormal_certificate(&s.magnetic, &curve);
    let classes: Vec<SampleClass> = rep.segments.iter().map(|g| g.class).collect();
    ensure(rep.passed && classes == [SampleClass::Characteristic, SampleClass::ZeroLocus], || {
        format!("crossing-2: passed {} segments {classes:?}", rep.passed)
    })?;
    let tower = DerivativeTower::new(s.data(), s.field());
    let half = curve.t[curve.t.len() - 1] / 2.0;
    for (t, p) in curve.t.iter().zip(&curve.points) {
        let cp = ChartPoint::from_f64(*p).ok_or("non-finite sample")?;
        let st = tower.step(&cp, 8).map_err(|e| e.to_string())?.step;
        let want = if (t - half).abs() < 1e-12 {
            5
        } else if *t < half {
            3
        } else {
            4
        };
        ensure(st == StepValue::Exact(want), || format!("crossing-2 at t={t}: step {st}, want {want}"))?;
    }

    let s = load("engel")?;
    let tr = integrate_magnetic_flow(&s.magnetic, FlowState::new([0.0; 3], 0.6, 0.8, 1.0), 2.0, 1e-2)
        .map_err(|e| e.to_string())?;
    let rep = abnormal_certificate(&s.magnetic, &HorizontalCurve::from(&tr));
    ensure(!rep.passed && rep.margin >= 0.05, || format!("generic geodesic: passed {} margin {}", rep.passed, rep.margin))?;
    Ok(format!("engel line passes; crossing-2 Char -> ZeroLocus with steps 3/5/4; generic margin {:.3}", rep.margin))
}

fn gauge_invariance() -> Outcome {
    let a = load("engel")?;
    let shifted = load("gauge-pair")?;
    let f = e("-(x*z/2 + x^2*y/6)");
    let moved = dh0(&f, a.data());
    let expect = a.potential().ok_or("engel has no potential")?.add(&moved);
    ensure(expect.identically_equal(shifted.potential().ok_or("gauge-pair has no potential")?), || {
        "gauge-pair potential is not A + d_H f".into()
    })?;
    let init = FlowState::new([1.0, 1.0, 0.0], 0.6, -0.8, 0.3);
    let t1 = integrate_magnetic_flow(&shifted.magnetic, init, 1.0, 1e-3).map_err(|e| e.to_string())?;
    let t2 = integrate_magnetic_flow(&a.magnetic, gauge_shift(&a.magnetic, &f, init), 1.0, 1e-3)
        .map_err(|e| e.to_string())?;
    let dist = t1.sup_distance(&t2);
    ensure(dist <= 1e-8, || format!("sup distance {dist:e}"))?;
    Ok(format!("A' = A + d_H f; sup distance {dist:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("engel lift", Duration::from_secs(1), engel_lift),
        ("step tables", Duration::from_secs(30), step_tables),
        ("rank classification", Duration::from_secs(10), rank_classification),
        ("rumin complex", Duration::from_secs(5), rumin_complex),
        ("maxwell equivalence", Duration::from_secs(5), maxwell),
        ("lifted projection", Duration::from_secs(5), lifted_projection),
        ("geodesic residuals", Duration::from_secs(5), residuals),
        ("curvature expansion", Duration::from_secs(30), curvature_expansion),
        ("abnormal certificates", Duration::from_secs(10), abnormal_curves),
        ("gauge invariance", Duration::from_secs(5), gauge_invariance),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = result.and_then(|d| {
            if took > *limit {
                Err(format!("took {took:.2?}, limit {limit:?}; {d}"))
            } else {
                Ok(d)
            }
        });
        match result {
            Ok(detail) => println!("[PASS] {:>2}. {name} ({took:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name} ({took:.2?}): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
