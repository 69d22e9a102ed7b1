//! Horizontal forms and the Rumin differentials `d_H⁰`, `d_H¹`, `d_H²`.

use crate::contact::{sample_value, ContactData, OneForm, SampleConfig, VectorField};
use crate::expr::{Expr, Var};

/// `A₁ν₁ + A₂ν₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct HOneForm {
    pub a1: Expr,
    pub a2: Expr,
}

/// `β₁ ν₁∧ω + β₂ ν₂∧ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct HTwoForm {
    pub b1: Expr,
    pub b2: Expr,
}

/// `C ν₁∧ν₂∧ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct HThreeForm {
    pub c: Expr,
}

impl HOneForm {
    pub fn new(a1: Expr, a2: Expr) -> Self {
        HOneForm { a1: a1.simplify(), a2: a2.simplify() }
    }

    pub fn add(&self, other: &HOneForm) -> HOneForm {
        HOneForm::new(
            Expr::sum([self.a1.clone(), other.a1.clone()]),
            Expr::sum([self.a2.clone(), other.a2.clone()]),
        )
    }

    pub fn identically_equal(&self, other: &HOneForm) -> bool {
        self.a1.identically_equal(&other.a1) && self.a2.identically_equal(&other.a2)
    }
}

impl HTwoForm {
    pub fn new(b1: Expr, b2: Expr) -> Self {
        HTwoForm { b1: b1.simplify(), b2: b2.simplify() }
    }

    pub fn identically_equal(&self, other: &HTwoForm) -> bool {
        self.b1.identically_equal(&other.b1) && self.b2.identically_equal(&other.b2)
    }

    pub fn is_identically_zero(&self) -> bool {
        self.b1.is_identically_zero() && self.b2.is_identically_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.b1.is_polynomial() && self.b2.is_polynomial()
    }
}

/// `d_H⁰ f = (X₁f, X₂f)`.
pub fn dh0(f: &Expr, data: &ContactData) -> HOneForm {
    HOneForm { a1: data.x1().apply(f), a2: data.x2().apply(f) }
}

/// `dA(X₁, X₂) = X₁A₂ − X₂A₁ − c₁₂¹A₁ − c₁₂²A₂`.
pub fn da12(a: &HOneForm, data: &ContactData) -> Expr {
    Expr::sum([
        data.x1().apply(&a.a2),
        Expr::neg(data.x2().apply(&a.a1)),
        Expr::neg(Expr::product([data.c(1, 2, 1).clone(), a.a1.clone()])),
        Expr::neg(Expr::product([data.c(1, 2, 2).clone(), a.a2.clone()])),
    ])
    .simplify()
}

/// `d_H¹ A` by the explicit second-order formulas
/// `β_i = X_i ζ − X₀A_i − c_i0¹A₁ − c_i0²A₂` with `ζ = dA(X₁, X₂)`.
pub fn dh1(a: &HOneForm, data: &ContactData) -> HTwoForm {
    let zeta = da12(a, data);
    let beta = |i: usize| {
        let ai = if i == 1 { &a.a1 } else { &a.a2 };
        Expr::sum([
            data.frame[i].apply(&zeta),
            Expr::neg(data.x0().apply(ai)),
            Expr::neg(Expr::product([data.c(i, 0, 1).clone(), a.a1.clone()])),
            Expr::neg(Expr::product([data.c(i, 0, 2).clone(), a.a2.clone()])),
        ])
        .simplify()
    };
    HTwoForm { b1: beta(1), b2: beta(2) }
}

/// Coordinate exterior derivative of a one-form evaluated on two fields.
fn coordinate_d(form: &OneForm, v: &VectorField, w: &VectorField) -> Expr {
    let mut terms = Vec::new();
    for i in Var::ALL {
        for j in Var::ALL {
            if i == j {
                continue;
            }
            // (dα)_{ij} = ∂_i α_j − ∂_j α_i
            let dij = Expr::sub(form.0[j.index()].d(i), form.0[i.index()].d(j));
            terms.push(Expr::product([
                Expr::ratio(1, 2),
                dij,
                Expr::sub(
                    Expr::product([v.0[i.index()].clone(), w.0[j.index()].clone()]),
                    Expr::product([v.0[j.index()].clone(), w.0[i.index()].clone()]),
                ),
            ]));
        }
    }
    Expr::sum(terms).simplify()
}

/// `d_H¹ A` computed as the full exterior derivative of `A + dA(X₁,X₂)ω`
/// in coordinates. Returns the two-form and the `ν₁∧ν₂` coefficient, which
/// vanishes identically.
pub fn dh1_exterior(a: &HOneForm, data: &ContactData) -> (HTwoForm, Expr) {
    let combine = |parts: &[(Expr, &OneForm)]| {
        OneForm::new(std::array::from_fn(|k| {
            Expr::sum(parts.iter().map(|(f, form)| Expr::product([f.clone(), form.0[k].clone()])))
        }))
    };
    let a_coord = combine(&[(a.a1.clone(), &data.coframe[1]), (a.a2.clone(), &data.coframe[2])]);
    let zeta = coordinate_d(&a_coord, data.x1(), data.x2());
    let lifted = combine(&[
        (a.a1.clone(), &data.coframe[1]),
        (a.a2.clone(), &data.coframe[2]),
        (zeta, &data.coframe[0]),
    ]);
    let b1 = coordinate_d(&lifted, data.x1(), data.x0());
    let b2 = coordinate_d(&lifted, data.x2(), data.x0());
    let vertical = coordinate_d(&lifted, data.x1(), data.x2());
    (HTwoForm { b1, b2 }, vertical)
}

/// `d_H² β = X₁β₂ − X₂β₁ − c₁₂¹β₁ − c₁₂²β₂`.
pub fn dh2(b: &HTwoForm, data: &ContactData) -> HThreeForm {
    HThreeForm {
        c: Expr::sum([
            data.x1().apply(&b.b2),
            Expr::neg(data.x2().apply(&b.b1)),
            Expr::neg(Expr::product([data.c(1, 2, 1).clone(), b.b1.clone()])),
            Expr::neg(Expr::product([data.c(1, 2, 2).clone(), b.b2.clone()])),
        ])
        .simplify(),
    }
}

/// Popp divergence of the characteristic field `−β₂X₁ + β₁X₂`.
pub fn characteristic_divergence(b: &HTwoForm, data: &ContactData) -> Expr {
    data.divergence_of_frame_combination(&Expr::zero(), &Expr::neg(b.b2.clone()), &b.b1)
}

/// Result of [`is_closed`].
#[derive(Clone, Debug, PartialEq)]
pub struct ClosednessReport {
    pub closed: bool,
    /// Decided by exact identity testing rather than float samples.
    pub exact: bool,
    pub dbeta: Expr,
    pub divergence: Expr,
    /// `max |d_H²β|` over samples.
    pub dbeta_residual: f64,
    /// `max |div(−β₂X₁ + β₁X₂)|` over samples.
    pub divergence_residual: f64,
    /// `d_H²β + div(−β₂X₁ + β₁X₂)` vanishes at every sample.
    pub equivalence_holds: bool,
    pub witness: Option<[f64; 3]>,
}

/// Closedness via both `d_H²β` and the divergence form of the Maxwell
/// equation.
pub fn is_closed(b: &HTwoForm, data: &ContactData, samples: &SampleConfig) -> ClosednessReport {
    let dbeta = dh2(b, data).c;
    let divergence = characteristic_divergence(b, data);
    let sum = Expr::sum([dbeta.clone(), divergence.clone()]);
    let exact = dbeta.is_polynomial() && divergence.is_polynomial();
    let mut rep = ClosednessReport {
        closed: true,
        exact,
        dbeta: dbeta.clone(),
        divergence: divergence.clone(),
        dbeta_residual: 0.0,
        divergence_residual: 0.0,
        equivalence_holds: true,
        witness: None,
    };
    for p in samples.points() {
        let vals = [&dbeta, &divergence, &sum].map(|e| sample_value(e, &p));
        let [Ok(c), Ok(d), Ok(s)] = vals else {
            rep.closed = false;
            rep.witness.get_or_insert(p.approx());
            continue;
        };
        let (cf, df) = (c.to_f64().abs(), d.to_f64().abs());
        if cf > rep.dbeta_residual || df > rep.divergence_residual {
            rep.witness.get_or_insert(p.approx());
        }
        rep.dbeta_residual = rep.dbeta_residual.max(cf);
        rep.divergence_residual = rep.divergence_residual.max(df);
        if !s.is_zero_within(1e-9) {
            rep.equivalence_holds = false;
        }
        if !c.is_zero_within(1e-9) || !d.is_zero_within(1e-9) {
            rep.closed = false;
        }
    }
    if exact && rep.closed {
        rep.closed = dbeta.is_identically_zero() && divergence.is_identically_zero();
    }
    if exact && rep.equivalence_holds {
        rep.equivalence_holds = sum.is_identically_zero();
    }
    if rep.closed {
        rep.witness = None;
    }
    rep
}
