//! (0,1)-forms on a single chart `U × ℂᵏ` and the scalar fields that make up
//! their coefficients.
//!
//! A form is stored as `n` a-coefficients (the `dz̄` part) and `k`
//! b-coefficients (the `dw̄` part) together with a declared decay budget
//! `(ε, C)`. Coefficients are pure closures so forms can be shared freely
//! across threads.

mod builtin;
mod derivative;

pub use builtin::{builtin_form, builtin_names, FormParams, ParamValue};
pub(crate) use derivative::wirtinger_fd_with;
pub use derivative::{compatibility_residual, default_step, wirtinger, wirtinger_fd, CompatibilityReport};

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

/// Complex scalar used for every coefficient and coordinate.
pub type ComplexScalar = Complex64;

/// Inline storage for a coordinate vector; base and fiber dimensions are small.
pub type Coords = SmallVec<[Complex64; 4]>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("{part:?}-coefficient index {index} out of range (form has {len})")]
    IndexOutOfRange { part: Part, index: usize, len: usize },
    #[error("non-finite value while evaluating {context}")]
    NonFinite { context: String },
    #[error("invalid decay budget: epsilon = {epsilon}, C = {c_bound} (both must be positive and finite)")]
    InvalidBudget { epsilon: f64, c_bound: f64 },
    #[error("unknown form `{0}`")]
    UnknownForm(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid sampling: {0}")]
    InvalidSampling(String),
    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),
}

/// Coordinates `(z, w)` of a point in one chart: `n` base and `k` fiber slots.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct BaseFiberPoint {
    pub z: Coords,
    pub w: Coords,
}

impl BaseFiberPoint {
    pub fn new(z: &[Complex64], w: &[Complex64]) -> Self {
        Self { z: Coords::from_slice(z), w: Coords::from_slice(w) }
    }

    /// A point with no base coordinates.
    pub fn fiber(w: &[Complex64]) -> Self {
        Self::new(&[], w)
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn k(&self) -> usize {
        self.w.len()
    }

    pub fn coord(&self, kind: VarKind, index: usize) -> Complex64 {
        match kind {
            VarKind::Base => self.z[index],
            VarKind::Fiber => self.w[index],
        }
    }

    fn coord_mut(&mut self, kind: VarKind, index: usize) -> &mut Complex64 {
        match kind {
            VarKind::Base => &mut self.z[index],
            VarKind::Fiber => &mut self.w[index],
        }
    }

    /// Copy of `self` with one coordinate moved by `delta`.
    pub fn shifted(&self, kind: VarKind, index: usize, delta: Complex64) -> Self {
        let mut p = self.clone();
        *p.coord_mut(kind, index) += delta;
        p
    }

    /// Copy of `self` with fiber slot `slot` replaced by `value`.
    pub fn with_fiber_slot(&self, slot: usize, value: Complex64) -> Self {
        let mut p = self.clone();
        p.w[slot] = value;
        p
    }

    pub fn is_finite(&self) -> bool {
        self.z.iter().chain(self.w.iter()).all(|c| c.is_finite())
    }

    /// `|w| = (Σ|w_γ|²)^{1/2}`.
    pub fn fiber_norm(&self) -> f64 {
        self.w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl fmt::Display for BaseFiberPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &Coords| v.iter().map(|c| format!("{}{:+}i", c.re, c.im)).collect::<Vec<_>>().join(", ");
        write!(f, "(z = [{}], w = [{}])", show(&self.z), show(&self.w))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Base,
    Fiber,
}

/// A complex variable `z_α` or `w_γ` (0-based index) and whether the plain
/// (`∂/∂w`) or conjugate (`∂/∂w̄`) Wirtinger derivative is meant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VariableId {
    pub kind: VarKind,
    pub index: usize,
    pub bar: bool,
}

impl VariableId {
    pub fn base_bar(index: usize) -> Self {
        Self { kind: VarKind::Base, index, bar: true }
    }

    pub fn fiber_bar(index: usize) -> Self {
        Self { kind: VarKind::Fiber, index, bar: true }
    }

    pub fn base(index: usize) -> Self {
        Self { kind: VarKind::Base, index, bar: false }
    }

    pub fn fiber(index: usize) -> Self {
        Self { kind: VarKind::Fiber, index, bar: false }
    }

    pub fn check(&self, p: &BaseFiberPoint) -> Result<(), FieldError> {
        let len = match self.kind {
            VarKind::Base => p.n(),
            VarKind::Fiber => p.k(),
        };
        if self.index >= len {
            return Err(FieldError::Dimension(format!(
                "{:?} variable {} requested at a point with {} such coordinates",
                self.kind, self.index, len
            )));
        }
        Ok(())
    }
}

/// Declared fiber-decay budget: `|b_γ(z,w)| ≤ C / (1 + Σ_δ |w_δ|^{1+ε})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayBudget {
    pub epsilon: f64,
    pub c_bound: f64,
}

impl DecayBudget {
    pub fn new(epsilon: f64, c_bound: f64) -> Result<Self, FieldError> {
        let budget = Self { epsilon, c_bound };
        budget.validate()?;
        Ok(budget)
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if ok(self.epsilon) && ok(self.c_bound) {
            Ok(())
        } else {
            Err(FieldError::InvalidBudget { epsilon: self.epsilon, c_bound: self.c_bound })
        }
    }

    pub fn exponent(&self) -> f64 {
        1.0 + self.epsilon
    }

    /// `Σ_δ |w_δ|^{1+ε}` over all fiber slots.
    pub fn fiber_term(&self, w: &[Complex64]) -> f64 {
        w.iter().map(|c| c.norm().powf(self.exponent())).sum()
    }

    /// `‖w′‖^{1+ε}`: the same sum with slot `slot` left out.
    pub fn off_term(&self, w: &[Complex64], slot: usize) -> f64 {
        w.iter().enumerate().filter(|(j, _)| *j != slot).map(|(_, c)| c.norm().powf(self.exponent())).sum()
    }

    /// The right-hand side `C / (1 + Σ|w_δ|^{1+ε})`.
    pub fn envelope(&self, w: &[Complex64]) -> f64 {
        self.c_bound / (1.0 + self.fiber_term(w))
    }
}

type EvalFn = dyn Fn(&BaseFiberPoint) -> Complex64 + Send + Sync;
type WirtingerFn = dyn Fn(&BaseFiberPoint, VariableId) -> Complex64 + Send + Sync;

/// A pure map `(z, w) → ℂ`, optionally carrying analytic Wirtinger
/// derivatives and a closed-form primitive used as an oracle.
#[derive(Clone)]
pub struct ScalarField {
    eval: Arc<EvalFn>,
    wirtinger: Option<Arc<WirtingerFn>>,
    primitive: Option<Arc<EvalFn>>,
    zero: bool,
}

impl ScalarField {
    pub fn new(f: impl Fn(&BaseFiberPoint) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(f), wirtinger: None, primitive: None, zero: false }
    }

    /// The identically zero field. Its derivatives are analytic and zero.
    pub fn zero() -> Self {
        Self {
            eval: Arc::new(|_| Complex64::new(0.0, 0.0)),
            wirtinger: Some(Arc::new(|_, _| Complex64::new(0.0, 0.0))),
            primitive: None,
            zero: true,
        }
    }

    pub fn with_wirtinger(
        mut self,
        d: impl Fn(&BaseFiberPoint, VariableId) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        self.wirtinger = Some(Arc::new(d));
        self
    }

    pub fn with_primitive(mut self, phi: impl Fn(&BaseFiberPoint) -> Complex64 + Send + Sync + 'static) -> Self {
        self.primitive = Some(Arc::new(phi));
        self
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn has_wirtinger(&self) -> bool {
        self.wirtinger.is_some()
    }

    pub fn has_primitive(&self) -> bool {
        self.primitive.is_some()
    }

    #[inline]
    pub fn evaluate(&self, p: &BaseFiberPoint) -> Complex64 {
        (self.eval)(p)
    }

    pub fn try_evaluate(&self, p: &BaseFiberPoint) -> Result<Complex64, FieldError> {
        let v = self.evaluate(p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FieldError::NonFinite { context: format!("field at {p}") })
        }
    }

    pub fn analytic_wirtinger(&self, p: &BaseFiberPoint, v: VariableId) -> Option<Complex64> {
        self.wirtinger.as_ref().map(|d| d(p, v))
    }

    pub fn primitive(&self, p: &BaseFiberPoint) -> Option<Complex64> {
        self.primitive.as_ref().map(|phi| phi(p))
    }

    /// `scale · self + other`, keeping analytic derivatives when both sides
    /// carry them. Primitives are dropped.
    pub fn axpy(&self, scale: Complex64, other: &ScalarField) -> ScalarField {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let mut out = ScalarField::new(move |p| scale * f(p) + g(p));
        if let (Some(df), Some(dg)) = (self.wirtinger.clone(), other.wirtinger.clone()) {
            out = out.with_wirtinger(move |p, v| scale * df(p, v) + dg(p, v));
        }
        out
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("zero", &self.zero)
            .field("analytic_wirtinger", &self.wirtinger.is_some())
            .field("primitive", &self.primitive.is_some())
            .finish()
    }
}

/// Which part of a form a coefficient belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    /// `a_α`, coefficient of `dz̄_α`.
    A,
    /// `b_γ`, coefficient of `dw̄_γ`.
    B,
}

/// `ω = Σ a_α dz̄_α + Σ b_γ dw̄_γ` in one chart.
#[derive(Clone, Debug)]
pub struct ZeroOneForm {
    name: String,
    a: Vec<ScalarField>,
    b: Vec<ScalarField>,
    decay: DecayBudget,
    closed: bool,
}

impl ZeroOneForm {
    pub fn new(
        name: impl Into<String>,
        a: Vec<ScalarField>,
        b: Vec<ScalarField>,
        decay: DecayBudget,
        closed: bool,
    ) -> Result<Self, FieldError> {
        if b.is_empty() {
            return Err(FieldError::Dimension("a form needs k >= 1 fiber coefficients".into()));
        }
        decay.validate()?;
        Ok(Self { name: name.into(), a, b, decay, closed })
    }

    pub fn zero(n: usize, k: usize, decay: DecayBudget) -> Result<Self, FieldError> {
        Self::new("zero_form", vec![ScalarField::zero(); n], vec![ScalarField::zero(); k], decay, true)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn k(&self) -> usize {
        self.b.len()
    }

    pub fn decay(&self) -> DecayBudget {
        self.decay
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(self.b.iter()).all(ScalarField::is_zero)
    }

    pub fn a_coeffs(&self) -> &[ScalarField] {
        &self.a
    }

    pub fn b_coeffs(&self) -> &[ScalarField] {
        &self.b
    }

    pub fn coeff(&self, part: Part, index: usize) -> Result<&ScalarField, FieldError> {
        let list = match part {
            Part::A => &self.a,
            Part::B => &self.b,
        };
        list.get(index).ok_or(FieldError::IndexOutOfRange { part, index, len: list.len() })
    }

    pub fn with_decay(mut self, decay: DecayBudget) -> Result<Self, FieldError> {
        decay.validate()?;
        self.decay = decay;
        Ok(self)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Replaces one b-coefficient; the closedness flag is cleared.
    pub fn with_b(mut self, index: usize, field: ScalarField) -> Result<Self, FieldError> {
        let len = self.b.len();
        let slot = self.b.get_mut(index).ok_or(FieldError::IndexOutOfRange { part: Part::B, index, len })?;
        *slot = field;
        self.closed = false;
        Ok(self)
    }

    /// Closed-form primitive `φ` with `∂̄φ = ω`, when one is attached.
    pub fn primitive(&self, p: &BaseFiberPoint) -> Option<Complex64> {
        self.b.iter().find_map(|f| f.primitive(p))
    }

    pub fn has_primitive(&self) -> bool {
        self.b.iter().any(ScalarField::has_primitive)
    }

    pub fn check_point(&self, p: &BaseFiberPoint) -> Result<(), FieldError> {
        if p.n() != self.n() || p.k() != self.k() {
            return Err(FieldError::Dimension(format!(
                "form `{}` has (n, k) = ({}, {}) but point has ({}, {})",
                self.name,
                self.n(),
                self.k(),
                p.n(),
                p.k()
            )));
        }
        Ok(())
    }
}

/// Evaluates `a_α(z,w)` or `b_γ(z,w)` (0-based `index`).
pub fn eval_form(form: &ZeroOneForm, p: &BaseFiberPoint, which: Part, index: usize) -> Result<Complex64, FieldError> {
    form.check_point(p)?;
    let field = form.coeff(which, index)?;
    let v = field.evaluate(p);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FieldError::NonFinite { context: format!("{which:?}-coefficient {index} of `{}` at {p}", form.name()) })
    }
}

/// One sample of [`decay_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecaySample {
    pub ray: usize,
    pub radius: f64,
    /// `max_γ |b_γ| (1 + Σ|w_δ|^{1+ε}) / C`; must stay `≤ 1`.
    pub b_ratio: f64,
    /// `max_α |a_α|`.
    pub a_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub samples: Vec<DecaySample>,
    pub max_b_ratio: f64,
    pub b_ok: bool,
    pub a_ok: bool,
    /// Uniformity in `z` over a compact set cannot be certified from finitely
    /// many base samples; this records which base point was used.
    pub note: String,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.b_ok && self.a_ok
    }
}

/// Samples the b-ratios and a-magnitudes along fiber rays `w = r·direction`.
///
/// The a-part passes when, along every ray, the magnitudes are nonincreasing
/// from their maximum onward and the last sample is at most half the
/// maximum (or everything is zero).
pub fn decay_check(
    form: &ZeroOneForm,
    z_fixed: &[Complex64],
    radii: &[f64],
    directions: &[Coords],
) -> Result<DecayReport, FieldError> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FieldError::InvalidSampling("radii must be non-empty and strictly increasing".into()));
    }
    if z_fixed.len() != form.n() {
        return Err(FieldError::Dimension(format!(
            "base point has {} coordinates, form has n = {}",
            z_fixed.len(),
            form.n()
        )));
    }
    let decay = form.decay();
    let mut samples = Vec::with_capacity(radii.len() * directions.len());
    let mut a_ok = true;
    for (ray, dir) in directions.iter().enumerate() {
        if dir.len() != form.k() {
            return Err(FieldError::Dimension(format!(
                "direction {ray} has {} slots, form has k = {}",
                dir.len(),
                form.k()
            )));
        }
        let mut a_values = Vec::with_capacity(radii.len());
        for &r in radii {
            let w: Coords = dir.iter().map(|c| c * r).collect();
            let p = BaseFiberPoint { z: Coords::from_slice(z_fixed), w };
            let weight = (1.0 + decay.fiber_term(&p.w)) / decay.c_bound;
            let mut b_ratio: f64 = 0.0;
            for g in 0..form.k() {
                b_ratio = b_ratio.max(eval_form(form, &p, Part::B, g)?.norm() * weight);
            }
            let mut a_max: f64 = 0.0;
            for a in 0..form.n() {
                a_max = a_max.max(eval_form(form, &p, Part::A, a)?.norm());
            }
            a_values.push(a_max);
            samples.push(DecaySample { ray, radius: r, b_ratio, a_max });
        }
        a_ok &= eventually_vanishing(&a_values);
    }
    let max_b_ratio = samples.iter().map(|s| s.b_ratio).fold(0.0, f64::max);
    Ok(DecayReport {
        b_ok: max_b_ratio <= 1.0,
        max_b_ratio,
        a_ok,
        samples,
        note: format!(
            "sampled at a single base point z = {:?}; uniformity over a compact set is not certified",
            z_fixed.iter().map(|c| (c.re, c.im)).collect::<Vec<_>>()
        ),
    })
}

fn eventually_vanishing(values: &[f64]) -> bool {
    let (peak_at, peak) =
        values.iter().copied().enumerate().fold((0, 0.0_f64), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    if peak == 0.0 {
        return true;
    }
    let slack = 1e-12 * peak;
    let tail = &values[peak_at..];
    tail.windows(2).all(|w| w[1] <= w[0] + slack) && *values.last().unwrap() <= 0.5 * peak
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params() -> FormParams {
        FormParams::new()
    }

    #[test]
    fn zero_form_evaluates_to_zero() {
        let f = builtin_form("zero_form", &params()).unwrap();
        let p = BaseFiberPoint::fiber(&[c(3.0, -1.0)]);
        assert_eq!(eval_form(&f, &p, Part::B, 0).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn gaussian_b_is_one_at_origin() {
        let f = builtin_form("gaussian_form", &params()).unwrap();
        let p = BaseFiberPoint::fiber(&[c(0.0, 0.0)]);
        assert_eq!(eval_form(&f, &p, Part::B, 0).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn rational_b_at_one() {
        let f = builtin_form("rational_form", &params()).unwrap();
        let p = BaseFiberPoint::fiber(&[c(1.0, 0.0)]);
        let v = eval_form(&f, &p, Part::B, 0).unwrap();
        assert!((v - c(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn index_out_of_range_is_reported() {
        let f = builtin_form("rational_form", &params()).unwrap();
        let p = BaseFiberPoint::fiber(&[c(1.0, 0.0)]);
        assert!(matches!(eval_form(&f, &p, Part::B, 1), Err(FieldError::IndexOutOfRange { index: 1, len: 1, .. })));
        assert!(matches!(eval_form(&f, &p, Part::A, 0), Err(FieldError::IndexOutOfRange { .. })));
    }

    #[test]
    fn non_finite_values_are_errors() {
        let bad = ScalarField::new(|p| 1.0 / p.w[0]);
        let f = ZeroOneForm::new("bad", vec![], vec![bad], DecayBudget::new(1.0, 1.0).unwrap(), false).unwrap();
        let p = BaseFiberPoint::fiber(&[c(0.0, 0.0)]);
        assert!(matches!(eval_form(&f, &p, Part::B, 0), Err(FieldError::NonFinite { .. })));
    }

    #[test]
    fn budget_rejects_nonpositive_values() {
        assert!(DecayBudget::new(0.0, 1.0).is_err());
        assert!(DecayBudget::new(1.0, -2.0).is_err());
        assert!(DecayBudget::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn off_term_skips_the_slot() {
        let d = DecayBudget::new(1.0, 1.0).unwrap();
        let w = [c(3.0, 0.0), c(0.0, 2.0)];
        assert!((d.off_term(&w, 0) - 4.0).abs() < 1e-14);
        assert!((d.off_term(&w, 1) - 9.0).abs() < 1e-14);
        assert!((d.envelope(&w) - 1.0 / 14.0).abs() < 1e-15);
    }

    #[test]
    fn decay_check_zero_form_all_ratios_zero() {
        let f = builtin_form("zero_form", &params()).unwrap();
        let rep = decay_check(&f, &[], &[1.0, 2.0, 4.0], &[Coords::from_slice(&[c(1.0, 0.0)])]).unwrap();
        assert!(rep.samples.iter().all(|s| s.b_ratio == 0.0 && s.a_max == 0.0));
        assert!(rep.passed());
    }

    #[test]
    fn decay_check_gaussian_within_budget() {
        let f = builtin_form("gaussian_form", &params()).unwrap();
        let dirs: Vec<Coords> =
            [c(1.0, 0.0), c(0.0, 1.0), c(0.6, -0.8)].iter().map(|d| Coords::from_slice(&[*d])).collect();
        let rep = decay_check(&f, &[], &[1.0, 2.0, 4.0, 8.0], &dirs).unwrap();
        // e^{-r^2}(1 + r^2) evaluated directly
        for s in &rep.samples {
            let expected = (-s.radius * s.radius).exp() * (1.0 + s.radius * s.radius);
            assert!((s.b_ratio - expected).abs() < 1e-14);
        }
        assert!(rep.b_ok);
    }

    #[test]
    fn decay_check_product_form_both_axes() {
        let f = builtin_form("product_form_k2", &params()).unwrap();
        assert_eq!(f.decay(), DecayBudget::new(1.0, 2.0).unwrap());
        let dirs =
            vec![Coords::from_slice(&[c(1.0, 0.0), c(0.0, 0.0)]), Coords::from_slice(&[c(0.0, 0.0), c(1.0, 0.0)])];
        let radii: Vec<f64> = (1..=8).map(f64::from).collect();
        let rep = decay_check(&f, &[], &radii, &dirs).unwrap();
        for s in &rep.samples {
            // direct oracle: r/(1+r^2)^2 * (1 + r^2) / 2
            let r = s.radius;
            let expected = r / (1.0 + r * r) / 2.0;
            assert!((s.b_ratio - expected).abs() < 1e-14, "{s:?}");
        }
        assert!(rep.passed());
    }

    #[test]
    fn decay_check_flags_undersized_budget() {
        let f =
            builtin_form("rational_form", &params()).unwrap().with_decay(DecayBudget::new(1.0, 0.1).unwrap()).unwrap();
        let rep = decay_check(&f, &[], &[0.5, 1.0, 2.0], &[Coords::from_slice(&[c(1.0, 0.0)])]).unwrap();
        assert!(!rep.b_ok);
    }

    #[test]
    fn decay_check_rejects_unsorted_radii() {
        let f = builtin_form("rational_form", &params()).unwrap();
        let dirs = [Coords::from_slice(&[c(1.0, 0.0)])];
        assert!(decay_check(&f, &[], &[2.0, 1.0], &dirs).is_err());
        assert!(decay_check(&f, &[], &[1.0, 1.0], &dirs).is_err());
    }

    #[test]
    fn a_part_must_eventually_vanish() {
        assert!(eventually_vanishing(&[0.1, 0.3, 0.2, 0.05]));
        assert!(!eventually_vanishing(&[0.1, 0.2, 0.3]));
        assert!(!eventually_vanishing(&[0.3, 0.1, 0.2]));
        assert!(eventually_vanishing(&[0.0, 0.0]));
    }

    #[test]
    fn opm_a_part_decays_along_rays() {
        let mut ps = FormParams::new();
        ps.insert("m".into(), ParamValue::Int(1));
        let f = builtin_form("opm_metric_form", &ps).unwrap();
        let dirs = [Coords::from_slice(&[c(1.0, 0.0)])];
        let rep = decay_check(&f, &[c(2.0, 0.0)], &[1.0, 2.0, 4.0, 8.0, 16.0], &dirs).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn evaluation_is_bit_identical() {
        let f = builtin_form("product_form_k2", &params()).unwrap();
        let p = BaseFiberPoint::fiber(&[c(0.3, 0.7), c(-1.1, 0.2)]);
        let x = eval_form(&f, &p, Part::B, 1).unwrap();
        let y = eval_form(&f, &p, Part::B, 1).unwrap();
        assert_eq!(x.re.to_bits(), y.re.to_bits());
        assert_eq!(x.im.to_bits(), y.im.to_bits());
    }
}
