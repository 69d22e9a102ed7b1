//! Contact package of a horizontal frame: contact form, Reeb field, dual
//! coframe, structure functions, Tanno Christoffel symbols, torsion and `J`.
//!
//! Frame indices follow the convention `0 = X₀` (Reeb), `1 = X₁`, `2 = X₂`,
//! and likewise `0 = ω`, `1 = ν₁`, `2 = ν₂` for the coframe.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{ChartPoint, EvalError, Expr, ExactLimits, Var};

/// Vector field `V = V^x ∂x + V^y ∂y + V^z ∂z`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField(pub [Expr; 3]);

/// One-form `a_x dx + a_y dy + a_z dz`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm(pub [Expr; 3]);

impl VectorField {
    pub fn new(c: [Expr; 3]) -> Self {
        VectorField(c.map(|e| e.simplify()))
    }

    pub fn zero() -> Self {
        VectorField([Expr::zero(), Expr::zero(), Expr::zero()])
    }

    pub fn coordinate(v: Var) -> Self {
        let mut c = [Expr::zero(), Expr::zero(), Expr::zero()];
        c[v.index()] = Expr::one();
        VectorField(c)
    }

    /// Directional derivative `V f`.
    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::sum(
            Var::ALL
                .iter()
                .filter(|v| !self.0[v.index()].is_zero())
                .map(|&v| Expr::product([self.0[v.index()].clone(), f.d(v)])),
        )
        .simplify()
    }

    pub fn bracket(&self, other: &VectorField) -> VectorField {
        VectorField(std::array::from_fn(|i| {
            Expr::sub(self.apply(&other.0[i]), other.apply(&self.0[i])).simplify()
        }))
    }

    pub fn scaled(&self, f: &Expr) -> VectorField {
        VectorField(std::array::from_fn(|i| Expr::product([f.clone(), self.0[i].clone()]).simplify()))
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField(std::array::from_fn(|i| {
            Expr::sum([self.0[i].clone(), other.0[i].clone()]).simplify()
        }))
    }

    /// `Σ f_k V_k`.
    pub fn combination(terms: &[(Expr, &VectorField)]) -> VectorField {
        VectorField(std::array::from_fn(|i| {
            Expr::sum(terms.iter().map(|(f, v)| Expr::product([f.clone(), v.0[i].clone()]))).simplify()
        }))
    }

    pub fn eval_f64(&self, p: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| self.0[i].eval_f64(p))
    }

    pub fn is_identically_zero(&self) -> bool {
        self.0.iter().all(Expr::is_identically_zero)
    }

    pub fn identically_equal(&self, other: &VectorField) -> bool {
        (0..3).all(|i| self.0[i].identically_equal(&other.0[i]))
    }

    pub fn is_polynomial(&self) -> bool {
        self.0.iter().all(Expr::is_polynomial)
    }
}

impl OneForm {
    pub fn new(c: [Expr; 3]) -> Self {
        OneForm(c.map(|e| e.simplify()))
    }

    /// `⟨α, V⟩`.
    pub fn pair(&self, v: &VectorField) -> Expr {
        Expr::sum((0..3).map(|i| Expr::product([self.0[i].clone(), v.0[i].clone()]))).simplify()
    }

    /// `dα(V, W) = V α(W) − W α(V) − α([V, W])`.
    pub fn d_pair(&self, v: &VectorField, w: &VectorField) -> Expr {
        Expr::sum([
            v.apply(&self.pair(w)),
            Expr::neg(w.apply(&self.pair(v))),
            Expr::neg(self.pair(&v.bracket(w))),
        ])
        .simplify()
    }
}

fn cross(a: &[Expr; 3], b: &[Expr; 3]) -> [Expr; 3] {
    let m = |i: usize, j: usize| Expr::product([a[i].clone(), b[j].clone()]);
    [
        Expr::sub(m(1, 2), m(2, 1)).simplify(),
        Expr::sub(m(2, 0), m(0, 2)).simplify(),
        Expr::sub(m(0, 1), m(1, 0)).simplify(),
    ]
}

fn dot(a: &[Expr; 3], b: &[Expr; 3]) -> Expr {
    Expr::sum((0..3).map(|i| Expr::product([a[i].clone(), b[i].clone()]))).simplify()
}

fn divide(v: [Expr; 3], d: &Expr) -> [Expr; 3] {
    match d.as_constant() {
        Some(c) => {
            let inv = c.recip();
            v.map(|e| e.scale(inv.clone()).simplify())
        }
        None => v.map(|e| Expr::div(e, d.clone()).simplify()),
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContactError {
    #[error("frame is degenerate at ({x}, {y}, {z}): X1, X2, [X1,X2] are dependent")]
    Degenerate { x: f64, y: f64, z: f64 },
    #[error("derived contact data failed self-check: {0}")]
    SelfCheck(&'static str),
    #[error("evaluation failed at sample point: {0}")]
    Eval(#[from] EvalError),
    #[error("trajectory needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
}

/// Sample points used for pointwise validation.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleConfig {
    /// Points per axis of the cubic lattice.
    pub lattice: usize,
    /// Half-width of the lattice cube centred at the origin.
    pub half_width: i64,
    pub random_points: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { lattice: 5, half_width: 1, random_points: 50, seed: 20_240_601 }
    }
}

impl SampleConfig {
    /// Lattice points followed by seeded random points with coordinates
    /// `k/1000`, all exact rationals.
    pub fn points(&self) -> Vec<ChartPoint> {
        let mut out = Vec::with_capacity(self.lattice.pow(3) + self.random_points);
        let n = self.lattice.max(1);
        let coord = |i: usize| -> BigRational {
            if n == 1 {
                return BigRational::zero();
            }
            let num = BigInt::from(self.half_width) * BigInt::from(2 * i as i64 - (n as i64 - 1));
            BigRational::new(num, BigInt::from(n as i64 - 1))
        };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out.push(ChartPoint::new([coord(i), coord(j), coord(k)]));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let lim = 1000 * self.half_width;
        for _ in 0..self.random_points {
            out.push(ChartPoint::new(std::array::from_fn(|_| {
                BigRational::new(BigInt::from(rng.gen_range(-lim..=lim)), BigInt::from(1000))
            })));
        }
        out
    }
}

/// Value of an expression at a sample point, exact when possible.
pub(crate) fn sample_value(e: &Expr, p: &ChartPoint) -> Result<BigRationalOrFloat, EvalError> {
    if e.is_polynomial() {
        e.eval_exact(p, &ExactLimits::default()).map(BigRationalOrFloat::Exact)
    } else {
        Ok(BigRationalOrFloat::Float(e.eval_f64(p.approx())))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum BigRationalOrFloat {
    Exact(BigRational),
    Float(f64),
}

impl BigRationalOrFloat {
    pub fn to_f64(&self) -> f64 {
        match self {
            Self::Exact(r) => crate::expr::ratio_to_f64(r),
            Self::Float(v) => *v,
        }
    }

    /// Exact zero test, or `|v| ≤ tol` in float mode.
    pub fn is_zero_within(&self, tol: f64) -> bool {
        match self {
            Self::Exact(r) => r.is_zero(),
            Self::Float(v) => v.abs() <= tol,
        }
    }

    /// `|v − target|`, exactly zero when equal in exact mode.
    pub fn distance_to(&self, target: i64) -> f64 {
        match self {
            Self::Exact(r) => {
                let d = r - BigRational::from_integer(BigInt::from(target));
                crate::expr::ratio_to_f64(&d.abs())
            }
            Self::Float(v) => (v - target as f64).abs(),
        }
    }
}

/// Full contact package derived from a frame.
#[derive(Clone, Debug)]
pub struct ContactData {
    /// `[X₀, X₁, X₂]`.
    pub frame: [VectorField; 3],
    /// `[ω, ν₁, ν₂]`, dual to `frame`.
    pub coframe: [OneForm; 3],
    /// `c[i][j][k] = ν_k([X_i, X_j])`.
    pub c: [[[Expr; 3]; 3]; 3],
    /// `gamma[i-1][j-1][k-1] = Γ_ij^k` for `i, j, k ∈ {1, 2}`.
    pub gamma: [[[Expr; 2]; 2]; 2],
    /// `tau[k-1][i-1]`: coefficient of `X_k` in `τ(X_i)`. Symmetric.
    pub tau: [[Expr; 2]; 2],
    /// `j[k-1][i-1]`: coefficient of `X_k` in `J X_i`.
    pub j: [[Expr; 2]; 2],
}

impl ContactData {
    pub fn x0(&self) -> &VectorField {
        &self.frame[0]
    }

    pub fn x1(&self) -> &VectorField {
        &self.frame[1]
    }

    pub fn x2(&self) -> &VectorField {
        &self.frame[2]
    }

    pub fn omega(&self) -> &OneForm {
        &self.coframe[0]
    }

    /// `c_ij^k` with frame indices in `{0, 1, 2}`.
    pub fn c(&self, i: usize, j: usize, k: usize) -> &Expr {
        &self.c[i][j][k]
    }

    /// Frame coefficients `(v₀, v₁, v₂)` of a vector field.
    pub fn frame_coefficients(&self, v: &VectorField) -> [Expr; 3] {
        std::array::from_fn(|k| self.coframe[k].pair(v))
    }

    /// Popp divergence via `div X₁ = −c₁₂², div X₂ = c₁₂¹, div X₀ = 0` and
    /// the Leibniz rule.
    pub fn popp_divergence(&self, v: &VectorField) -> Expr {
        let [v0, v1, v2] = self.frame_coefficients(v);
        self.divergence_of_frame_combination(&v0, &v1, &v2)
    }

    /// Popp divergence of `v₀X₀ + v₁X₁ + v₂X₂`.
    pub fn divergence_of_frame_combination(&self, v0: &Expr, v1: &Expr, v2: &Expr) -> Expr {
        Expr::sum([
            self.x1().apply(v1),
            Expr::neg(Expr::product([v1.clone(), self.c(1, 2, 2).clone()])),
            self.x2().apply(v2),
            Expr::product([v2.clone(), self.c(1, 2, 1).clone()]),
            self.x0().apply(v0),
        ])
        .simplify()
    }

    /// `∇_γ̇ γ̇` frame components along a sampled horizontal curve, with `u̇`
    /// by second-order finite differences.
    pub fn covariant_acceleration(
        &self,
        times: &[f64],
        points: &[[f64; 3]],
        u: &[[f64; 2]],
    ) -> Result<Vec<[f64; 2]>, ContactError> {
        let n = times.len();
        if n < 3 || points.len() != n || u.len() != n {
            return Err(ContactError::TooFewSamples(n.min(points.len()).min(u.len())));
        }
        let du = crate::numeric::finite_difference(times, u);
        Ok((0..n)
            .map(|s| {
                let p = points[s];
                let g = self.gamma.each_ref().map(|gi| gi.each_ref().map(|gij| gij.each_ref().map(|e| e.eval_f64(p))));
                std::array::from_fn(|k| {
                    let mut acc = du[s][k];
                    for i in 0..2 {
                        for j in 0..2 {
                            acc += u[s][i] * u[s][j] * g[i][j][k];
                        }
                    }
                    acc
                })
            })
            .collect())
    }
}

/// Derives the contact package of a frame `(X₁, X₂)` assumed orthonormal.
pub fn derive_contact_data(x1: &VectorField, x2: &VectorField) -> Result<ContactData, ContactError> {
    derive_contact_data_with(x1, x2, &SampleConfig::default())
}

pub fn derive_contact_data_with(
    x1: &VectorField,
    x2: &VectorField,
    samples: &SampleConfig,
) -> Result<ContactData, ContactError> {
    let x12 = x1.bracket(x2);
    let n12 = cross(&x1.0, &x2.0);
    let det = dot(&n12, &x12.0);
    for p in samples.points() {
        if sample_value(&det, &p)?.is_zero_within(1e-12) {
            let [x, y, z] = p.approx();
            return Err(ContactError::Degenerate { x, y, z });
        }
    }
    let omega = OneForm(divide(n12, &det));

    // X₀ = [X₁,X₂] + a X₁ + b X₂ with a = dω([X₁,X₂], X₂), b = −dω([X₁,X₂], X₁)
    let a = omega.d_pair(&x12, x2);
    let b = Expr::neg(omega.d_pair(&x12, x1)).simplify();
    let x0 = VectorField::combination(&[(Expr::one(), &x12), (a, x1), (b, x2)]);

    // adjugate rows of [X₀ | X₁ | X₂]; the determinant equals det[X₁|X₂|X₁₂]
    let nu1 = OneForm(divide(cross(&x2.0, &x0.0), &det));
    let nu2 = OneForm(divide(cross(&x0.0, &x1.0), &det));
    let frame = [x0, x1.clone(), x2.clone()];
    let coframe = [omega, nu1, nu2];

    let zero3 = || [Expr::zero(), Expr::zero(), Expr::zero()];
    let mut c: [[[Expr; 3]; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| zero3()));
    for i in 0..3 {
        for j in (i + 1)..3 {
            let br = frame[i].bracket(&frame[j]);
            for k in 0..3 {
                let v = coframe[k].pair(&br);
                c[j][i][k] = Expr::neg(v.clone()).simplify();
                c[i][j][k] = v;
            }
        }
    }

    if !Expr::sub(c[1][2][0].clone(), Expr::one()).is_identically_zero() {
        return Err(ContactError::SelfCheck("c12^0 is not identically 1"));
    }
    if !c[1][0][0].is_identically_zero() || !c[2][0][0].is_identically_zero() {
        return Err(ContactError::SelfCheck("c10^0 or c20^0 does not vanish"));
    }
    for (i, f) in frame.iter().enumerate() {
        for (k, form) in coframe.iter().enumerate() {
            let expect = if i == k { 1 } else { 0 };
            if !Expr::sub(form.pair(f), Expr::int(expect)).is_identically_zero() {
                return Err(ContactError::SelfCheck("coframe is not dual to frame"));
            }
        }
    }

    let half = || Expr::ratio(1, 2);
    let gamma = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            std::array::from_fn(|k| {
                let (i, j, k) = (i + 1, j + 1, k + 1);
                Expr::product([
                    half(),
                    Expr::sum([c[i][j][k].clone(), c[k][i][j].clone(), c[k][j][i].clone()]),
                ])
                .simplify()
            })
        })
    });
    let tau = std::array::from_fn(|k| {
        std::array::from_fn(|i| {
            let (i, k) = (i + 1, k + 1);
            Expr::product([half(), Expr::sum([c[k][0][i].clone(), c[i][0][k].clone()])]).simplify()
        })
    });
    let j = std::array::from_fn(|k| std::array::from_fn(|i| c[i + 1][k + 1][0].clone()));

    Ok(ContactData { frame, coframe, c, gamma, tau, j })
}

/// Result of [`validate_frame`].
#[derive(Clone, Debug, PartialEq)]
pub struct FrameReport {
    pub passed: bool,
    pub independent: bool,
    pub normalized: bool,
    pub samples: usize,
    /// Number of samples failing either check.
    pub failures: usize,
    /// Largest `|−dω(X₁,X₂) − 1|` over samples.
    pub worst_residual: f64,
    /// Value of `−dω(X₁,X₂)` at the worst sample.
    pub worst_value: f64,
    pub witness: Option<[f64; 3]>,
}

/// Checks pointwise independence of `X₁, X₂, [X₁,X₂]` and the normalization
/// `−dω(X₁,X₂) = 1`, where `ω` annihilates `X₁, X₂` and is normalized by
/// `⟨ω, ∂z⟩ = 1`.
pub fn validate_frame(x1: &VectorField, x2: &VectorField, samples: &SampleConfig) -> FrameReport {
    let x12 = x1.bracket(x2);
    let n12 = cross(&x1.0, &x2.0);
    let det = dot(&n12, &x12.0);
    // with ω = n12 / n12_z and X₁, X₂ ∈ ker ω: −dω(X₁,X₂) = ω([X₁,X₂]) = det / n12_z
    let nz = n12[2].clone();
    let points = samples.points();
    let mut rep = FrameReport {
        passed: true,
        independent: true,
        normalized: true,
        samples: points.len(),
        failures: 0,
        worst_residual: 0.0,
        worst_value: 1.0,
        witness: None,
    };
    for p in &points {
        let (d, z) = match (sample_value(&det, p), sample_value(&nz, p)) {
            (Ok(d), Ok(z)) => (d, z),
            _ => {
                rep.independent = false;
                rep.failures += 1;
                rep.witness.get_or_insert(p.approx());
                continue;
            }
        };
        let mut bad = false;
        if d.is_zero_within(1e-10) {
            rep.independent = false;
            bad = true;
        }
        let (value, residual) = if z.is_zero_within(1e-10) {
            (f64::INFINITY, f64::INFINITY)
        } else {
            match (&d, &z) {
                (BigRationalOrFloat::Exact(d), BigRationalOrFloat::Exact(z)) => {
                    let v = BigRationalOrFloat::Exact(d / z);
                    (v.to_f64(), v.distance_to(1))
                }
                _ => {
                    let v = d.to_f64() / z.to_f64();
                    (v, (v - 1.0).abs())
                }
            }
        };
        if residual > 1e-10 {
            rep.normalized = false;
            bad = true;
        }
        if bad {
            rep.failures += 1;
        }
        if residual > rep.worst_residual || (bad && rep.witness.is_none()) {
            if residual >= rep.worst_residual {
                rep.worst_residual = residual;
                rep.worst_value = value;
            }
            rep.witness = Some(p.approx());
        }
    }
    rep.passed = rep.failures == 0;
    if rep.passed {
        rep.witness = None;
    }
    rep
}

/// The frame `X₁ = ∂x − (y/2)∂z`, `X₂ = ∂y + (x/2)∂z`.
pub fn heisenberg_frame() -> (VectorField, VectorField) {
    let half = |e: Expr| Expr::product([Expr::ratio(1, 2), e]);
    (
        VectorField::new([Expr::one(), Expr::zero(), Expr::neg(half(Expr::y()))]),
        VectorField::new([Expr::zero(), Expr::one(), half(Expr::x())]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn vf(c: [&str; 3]) -> VectorField {
        VectorField::new(c.map(|s| parse_expr(s).unwrap()))
    }

    #[test]
    fn heisenberg_brackets() {
        let (x1, x2) = heisenberg_frame();
        assert!(x1.bracket(&x2).identically_equal(&VectorField::coordinate(Var::Z)));
        assert!(x1.bracket(&x1).is_identically_zero());
        let v = vf(["1", "0", "0"]);
        let w = vf(["0", "0", "x"]);
        assert!(v.bracket(&w).identically_equal(&VectorField::coordinate(Var::Z)));
    }

    #[test]
    fn heisenberg_contact_package() {
        let (x1, x2) = heisenberg_frame();
        let d = derive_contact_data(&x1, &x2).unwrap();
        assert!(d.x0().identically_equal(&VectorField::coordinate(Var::Z)));
        let w = &d.omega().0;
        assert!(w[0].identically_equal(&parse_expr("y/2").unwrap()));
        assert!(w[1].identically_equal(&parse_expr("-x/2").unwrap()));
        assert!(w[2].is_one());
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let expect = match (i, j, k) {
                        (1, 2, 0) => 1,
                        (2, 1, 0) => -1,
                        _ => 0,
                    };
                    assert_eq!(d.c(i, j, k), &Expr::int(expect), "c[{i}][{j}][{k}]");
                }
            }
        }
        assert!(d.gamma.iter().flatten().flatten().all(Expr::is_zero));
        assert!(d.tau.iter().flatten().all(Expr::is_zero));
        assert_eq!(d.j, [[Expr::zero(), Expr::int(-1)], [Expr::one(), Expr::zero()]]);
    }

    #[test]
    fn non_nilpotent_frame_invariants() {
        let x1 = vf(["1", "0", "z/4"]);
        let x2 = vf(["0", "1", "x + x^3/3"]);
        let d = derive_contact_data(&x1, &x2).unwrap();
        for a in 1..=2 {
            for b in 1..=2 {
                for k in 1..=2 {
                    let s = Expr::sum([d.gamma[a - 1][b - 1][k - 1].clone(), d.gamma[a - 1][k - 1][b - 1].clone()]);
                    assert!(s.is_identically_zero());
                }
            }
        }
        assert!(d.tau[0][1].identically_equal(&d.tau[1][0]));
        // ι_{X₀} dω = 0
        assert!(d.omega().d_pair(d.x0(), d.x1()).is_identically_zero());
        assert!(d.omega().d_pair(d.x0(), d.x2()).is_identically_zero());
        // J² = −Id
        for r in 0..2 {
            for s in 0..2 {
                let e = Expr::sum((0..2).map(|m| Expr::product([d.j[r][m].clone(), d.j[m][s].clone()])));
                let expect = if r == s { -1 } else { 0 };
                assert!(Expr::sub(e, Expr::int(expect)).is_identically_zero());
            }
        }
        // Jacobi identity of the frame
        let [x0, x1, x2] = &d.frame;
        let j = x0.bracket(&x1.bracket(x2)).add(&x1.bracket(&x2.bracket(x0))).add(&x2.bracket(&x0.bracket(x1)));
        assert!(j.is_identically_zero());
    }

    #[test]
    fn popp_divergence_examples() {
        let (x1, x2) = heisenberg_frame();
        let d = derive_contact_data(&x1, &x2).unwrap();
        assert!(d.popp_divergence(&x2).is_zero());
        assert!(d.popp_divergence(&x1.scaled(&Expr::x())).is_one());
        let f = parse_expr("x^3/6").unwrap();
        assert!(d.popp_divergence(&x2.scaled(&f)).is_zero());
    }

    #[test]
    fn validate_frame_cases() {
        let cfg = SampleConfig::default();
        let (x1, x2) = heisenberg_frame();
        let ok = validate_frame(&x1, &x2, &cfg);
        assert!(ok.passed);
        assert_eq!(ok.worst_residual, 0.0);

        let swapped = validate_frame(&x2, &x1, &cfg);
        assert!(!swapped.passed);
        assert_eq!(swapped.failures, swapped.samples);
        assert_eq!(swapped.worst_value, -1.0);

        let scaled = validate_frame(&x1.scaled(&Expr::int(2)), &x2, &cfg);
        assert!(!scaled.passed);
        assert_eq!(scaled.failures, scaled.samples);
        assert_eq!(scaled.worst_value, 2.0);

        let perturbed = vf(["x", "1", "x/2"]);
        let rep = validate_frame(&x1, &perturbed, &cfg);
        assert!(!rep.passed);
        assert!(rep.independent);
    }

    #[test]
    fn degenerate_frame_is_rejected() {
        let x1 = vf(["1", "0", "0"]);
        let x2 = vf(["0", "1", "0"]);
        assert!(matches!(derive_contact_data(&x1, &x2), Err(ContactError::Degenerate { .. })));
    }
}
