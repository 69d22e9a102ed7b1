use std::fmt;
use std::sync::Mutex;

use super::linalg::scalar_rank;
use super::{value, vanishes, LiftError, LiftedField, LiftedFrame, MAX_BUDGET};
use crate::contact::ContactData;
use crate::expr::{ChartPoint, Expr, Scalar};
use crate::magnetic::MagneticScenario;
use crate::rumin::HTwoForm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMethod {
    Derivatives,
    Brackets,
}

impl fmt::Display for StepMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepMethod::Derivatives => "derivatives",
            StepMethod::Brackets => "brackets",
        })
    }
}

/// A step value, or a lower bound when the budget ran out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepValue {
    Exact(u32),
    AtLeast(u32),
}

impl StepValue {
    pub fn exact(self) -> Option<u32> {
        match self {
            StepValue::Exact(k) => Some(k),
            StepValue::AtLeast(_) => None,
        }
    }

    /// The step, or its lower bound.
    pub fn lower_bound(self) -> u32 {
        match self {
            StepValue::Exact(k) | StepValue::AtLeast(k) => k,
        }
    }
}

impl fmt::Display for StepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepValue::Exact(k) => write!(f, "{k}"),
            StepValue::AtLeast(k) => write!(f, ">={k}"),
        }
    }
}

/// Step of the lifted distribution over a base point. The value holds at
/// every lifted point `(p, w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub point: ChartPoint,
    pub step: StepValue,
    pub method: StepMethod,
    /// Derivative word such as `X2X1b1`, or bracket word such as
    /// `[Y1,[Y1,Y2]]`.
    pub witness: Option<String>,
    /// Value of the derivative word at the point.
    pub witness_value: Option<Scalar>,
    pub budget: u32,
}

fn check_budget(budget: u32) -> Result<(), LiftError> {
    if (3..=MAX_BUDGET).contains(&budget) {
        Ok(())
    } else {
        Err(LiftError::BadBudget(budget))
    }
}

struct Word {
    /// Frame indices in the order they are applied.
    ops: Vec<u8>,
    base: u8,
    expr: Expr,
}

impl Word {
    fn label(&self) -> String {
        let mut s: String = self.ops.iter().rev().map(|i| format!("X{i}")).collect();
        s.push_str(&format!("b{}", self.base));
        s
    }
}

/// Derivative words `X_{i_k}⋯X_{i_1}β_{i_0}`, built level by level on demand
/// and shared between points. Identically vanishing words are dropped.
pub struct DerivativeTower {
    x: [crate::contact::VectorField; 2],
    levels: Mutex<Vec<Vec<Word>>>,
}

impl DerivativeTower {
    pub fn new(data: &ContactData, beta: &HTwoForm) -> Self {
        let level0 = [(1u8, &beta.b1), (2, &beta.b2)]
            .into_iter()
            .filter(|(_, e)| !e.is_identically_zero())
            .map(|(i, e)| Word { ops: Vec::new(), base: i, expr: e.clone() })
            .collect();
        DerivativeTower { x: [data.x1().clone(), data.x2().clone()], levels: Mutex::new(vec![level0]) }
    }

    fn ensure(&self, levels: &mut Vec<Vec<Word>>, j: usize) {
        while levels.len() <= j {
            let next: Vec<Word> = levels
                .last()
                .unwrap()
                .iter()
                .flat_map(|w| {
                    (1..=2u8).filter_map(move |i| {
                        let e = self.x[i as usize - 1].apply(&w.expr);
                        if e.is_identically_zero() {
                            return None;
                        }
                        let mut ops = w.ops.clone();
                        ops.push(i);
                        Some(Word { ops, base: w.base, expr: e })
                    })
                })
                .collect();
            levels.push(next);
        }
    }

    /// First nonvanishing word at `p`, searching lengths `0..=budget−3`.
    pub fn step(&self, p: &ChartPoint, budget: u32) -> Result<StepReport, LiftError> {
        check_budget(budget)?;
        for j in 0..=(budget - 3) as usize {
            // clone the level so evaluation runs without holding the lock
            let words: Vec<(String, Expr)> = {
                let mut levels = self.levels.lock().unwrap();
                self.ensure(&mut levels, j);
                levels[j].iter().map(|w| (w.label(), w.expr.clone())).collect()
            };
            for (label, e) in words {
                let v = value(&e, p)?;
                if !vanishes(&v) {
                    return Ok(StepReport {
                        point: p.clone(),
                        step: StepValue::Exact(j as u32 + 3),
                        method: StepMethod::Derivatives,
                        witness: Some(label),
                        witness_value: Some(v),
                        budget,
                    });
                }
            }
        }
        Ok(StepReport {
            point: p.clone(),
            step: StepValue::AtLeast(budget + 1),
            method: StepMethod::Derivatives,
            witness: None,
            witness_value: None,
            budget,
        })
    }
}

/// Step from the first nonvanishing derivative word of `β` at `p`: length
/// `k` gives step `k + 3`.
pub fn step_via_derivatives(s: &MagneticScenario, p: &ChartPoint, budget: u32) -> Result<StepReport, LiftError> {
    DerivativeTower::new(&s.data, &s.field).step(p, budget)
}

/// Value of `X_{ops[last]}⋯X_{ops[0]} β_{base}` at `p`.
pub fn derivative_word_value(
    data: &ContactData,
    beta: &HTwoForm,
    ops: &[usize],
    base: usize,
    p: &ChartPoint,
) -> Result<Scalar, LiftError> {
    let mut e = if base == 1 { beta.b1.clone() } else { beta.b2.clone() };
    for &i in ops {
        e = data.frame[i].apply(&e);
    }
    value(&e, p)
}

/// Left-normed brackets `[Y_{i_k},[…,[Y₁,Y₂]]]` of the lifted frame, built
/// on demand.
pub struct BracketTower {
    y: [LiftedField; 2],
    levels: Mutex<Vec<Vec<(String, LiftedField)>>>,
}

impl BracketTower {
    pub fn new(lift: &LiftedFrame) -> Self {
        let level1 = vec![("Y1".to_string(), lift.y1.clone()), ("Y2".to_string(), lift.y2.clone())];
        let level2 = vec![("[Y1,Y2]".to_string(), lift.y1.bracket(&lift.y2))];
        BracketTower { y: [lift.y1.clone(), lift.y2.clone()], levels: Mutex::new(vec![level1, level2]) }
    }

    fn ensure(&self, levels: &mut Vec<Vec<(String, LiftedField)>>, k: usize) {
        // levels[k - 1] holds brackets of length k
        while levels.len() < k {
            let next = levels
                .last()
                .unwrap()
                .iter()
                .flat_map(|(label, w)| {
                    (0..2).filter_map(move |i| {
                        let b = self.y[i].bracket(w);
                        if b.is_identically_zero() {
                            None
                        } else {
                            Some((format!("[Y{},{label}]", i + 1), b))
                        }
                    })
                })
                .collect();
            levels.push(next);
        }
    }

    /// Smallest bracket length whose span at `p` has rank 4. The coefficients
    /// do not depend on `w`, so only the base point matters.
    pub fn step(&self, p: &ChartPoint, budget: u32) -> Result<StepReport, LiftError> {
        check_budget(budget)?;
        let mut basis: Vec<Vec<Scalar>> = Vec::new();
        for k in 1..=budget as usize {
            let fields: Vec<(String, LiftedField)> = {
                let mut levels = self.levels.lock().unwrap();
                self.ensure(&mut levels, k);
                levels[k - 1].clone()
            };
            for (label, f) in fields {
                let mut trial = basis.clone();
                trial.push(f.eval(p)?);
                if scalar_rank(&trial) > basis.len() {
                    basis = trial;
                    if basis.len() == 4 {
                        return Ok(StepReport {
                            point: p.clone(),
                            step: StepValue::Exact(k as u32),
                            method: StepMethod::Brackets,
                            witness: Some(label),
                            witness_value: None,
                            budget,
                        });
                    }
                }
            }
        }
        Ok(StepReport {
            point: p.clone(),
            step: StepValue::AtLeast(budget + 1),
            method: StepMethod::Brackets,
            witness: None,
            witness_value: None,
            budget,
        })
    }
}

/// Step from the rank of iterated brackets of `Y₁, Y₂` at `p`.
pub fn step_via_brackets(lift: &LiftedFrame, p: &ChartPoint, budget: u32) -> Result<StepReport, LiftError> {
    BracketTower::new(lift).step(p, budget)
}
