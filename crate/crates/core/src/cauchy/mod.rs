//! The one-variable Cauchy transform
//!
//! ```text
//! T[b](w) = (1/2πi) ∫_ℂ b(w + ζ)/ζ dζ∧dζ̄ = −(1/π) ∫_0^∞ ∫_0^{2π} b(w + r e^{iθ}) e^{−iθ} dθ dr
//! ```
//!
//! evaluated in polar coordinates centred at `w` (the area element cancels
//! the `1/|ζ|` singularity), truncated at a radius chosen from the declared
//! decay budget, together with the integrability and profile bounds that
//! control it.
//!
//! Every result carries `err_estimate = Richardson(r) + coarse-gap(θ) + tail`.
//! The tail term is a rigorous consequence of the decay budget; the
//! discretization terms are estimates validated against closed forms.

mod line;
mod polar;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{BaseFiberPoint, DecayBudget, FieldError, ZeroOneForm};
use polar::{PolarSums, RadialMesh};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CauchyError {
    #[error("invalid quadrature spec: {0}")]
    Spec(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("tail bound {bound:e} still exceeds tol_tail {tol_tail:e} at the largest allowed radius {r_cap:e}")]
    TailBudget { bound: f64, tol_tail: f64, r_cap: f64 },
    #[error("non-finite integrand sample ({0})")]
    NonFinite(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Discretization and tolerance controls for the polar quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Truncation radius; `0` derives it from the decay budget and `tol_tail`.
    pub r_max: f64,
    /// Uniform angular nodes (even, ≥ 8).
    pub n_theta: usize,
    /// Radial nodes per unit length inside the core disc (≥ 2).
    pub n_r: usize,
    /// Target for the discretization error estimate.
    pub tol_abs: f64,
    /// Admissible truncation-tail bound.
    pub tol_tail: f64,
    /// Radius of the uniformly meshed core; `0` means `|w_center| + core_width`.
    pub r_core: f64,
    /// Core margin beyond `|w_center|` when `r_core` is derived.
    pub core_width: f64,
    /// Simpson intervals per dyadic panel outside the core (rounded up to a multiple of 4).
    pub panel_intervals: usize,
    /// Largest truncation radius the tail search may use.
    pub r_cap: f64,
    /// Resolution doublings allowed while `tol_abs` is not met.
    pub max_refinements: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            r_max: 0.0,
            n_theta: 32,
            n_r: 8,
            tol_abs: 1e-8,
            tol_tail: 1e-9,
            r_core: 0.0,
            core_width: 8.0,
            panel_intervals: 16,
            r_cap: 1e30,
            max_refinements: 6,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), CauchyError> {
        let fail = |m: String| Err(CauchyError::Spec(m));
        if self.n_theta < 8 || !self.n_theta.is_multiple_of(2) {
            return fail(format!("n_theta must be even and >= 8, got {}", self.n_theta));
        }
        if self.n_r < 2 {
            return fail(format!("n_r must be >= 2, got {}", self.n_r));
        }
        if self.panel_intervals < 4 {
            return fail(format!("panel_intervals must be >= 4, got {}", self.panel_intervals));
        }
        for (name, v) in [("tol_abs", self.tol_abs), ("tol_tail", self.tol_tail)] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("r_max", self.r_max), ("r_core", self.r_core), ("core_width", self.core_width)] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be >= 0, got {v}"));
            }
        }
        if !(self.r_cap > 0.0) {
            return fail(format!("r_cap must be positive, got {}", self.r_cap));
        }
        Ok(())
    }

    /// Same spec with the tolerance tightened (used by residual checks).
    pub fn with_tol_abs(mut self, tol_abs: f64) -> Self {
        self.tol_abs = tol_abs;
        self
    }
}

/// A coefficient restricted to one fiber slot: `ζ ↦ b(z, w₁, …, ζ, …, w_k)`.
pub struct SliceField<'a> {
    f: Box<dyn Fn(Complex64) -> Complex64 + Send + Sync + 'a>,
    pub decay: DecayBudget,
    /// `‖w′‖^{1+ε}` of the frozen slots.
    pub off_term: f64,
    zero: bool,
}

impl<'a> SliceField<'a> {
    pub fn new(f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'a, decay: DecayBudget, off_term: f64) -> Self {
        Self { f: Box::new(f), decay, off_term, zero: false }
    }

    pub fn zero(decay: DecayBudget) -> Self {
        Self { f: Box::new(|_| Complex64::new(0.0, 0.0)), decay, off_term: 0.0, zero: true }
    }

    /// Slot `delta` (0-based) of `b_delta` at `p`.
    pub fn from_form(form: &'a ZeroOneForm, p: &BaseFiberPoint, delta: usize) -> Result<Self, CauchyError> {
        form.check_point(p)?;
        let field = form.coeff(crate::fields::Part::B, delta)?;
        let decay = form.decay();
        let off_term = decay.off_term(&p.w, delta);
        if field.is_zero() {
            return Ok(Self { off_term, ..Self::zero(decay) });
        }
        let frozen = p.clone();
        Ok(Self::new(move |zeta| field.evaluate(&frozen.with_fiber_slot(delta, zeta)), decay, off_term))
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    #[inline]
    pub fn eval(&self, zeta: Complex64) -> Complex64 {
        (self.f)(zeta)
    }
}

/// Outcome of one polar-quadrature evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CauchyResult {
    pub value: Complex64,
    /// `quad_error + tail_bound`.
    pub err_estimate: f64,
    pub quad_error: f64,
    pub tail_bound: f64,
    pub r_max: f64,
    pub r_core: f64,
    pub n_theta: usize,
    pub n_r: usize,
    pub panel_intervals: usize,
    /// Whether `quad_error ≤ tol_abs` was reached within the refinement budget.
    pub converged: bool,
}

impl CauchyResult {
    fn exact_zero(r_max: f64, r_core: f64, spec: &QuadratureSpec) -> Self {
        Self {
            value: Complex64::new(0.0, 0.0),
            err_estimate: 0.0,
            quad_error: 0.0,
            tail_bound: 0.0,
            r_max,
            r_core,
            n_theta: spec.n_theta,
            n_r: spec.n_r,
            panel_intervals: spec.panel_intervals,
            converged: true,
        }
    }

    /// The spec that reproduces this evaluation's mesh exactly, with
    /// refinement switched off. Nearby evaluations under it are smooth in
    /// the centre, which finite differences of `B` rely on.
    pub fn pinned(&self, base: &QuadratureSpec) -> QuadratureSpec {
        QuadratureSpec {
            r_max: self.r_max,
            r_core: self.r_core,
            n_theta: self.n_theta,
            n_r: self.n_r,
            panel_intervals: self.panel_intervals,
            max_refinements: 0,
            ..*base
        }
    }
}

/// Upper bound for the part of `T[b]` coming from `|ζ| > R`:
/// `2 ∫_R^∞ C / (1 + ‖w′‖^{1+ε} + (ρ − |w_δ|)^{1+ε}) dρ`.
///
/// Monotone decreasing in `R` and `O(R^{−ε})`. Requires `R > 2|w_δ|`.
pub fn tail_bound(decay: &DecayBudget, off_term: f64, w_center_abs: f64, r: f64) -> Result<f64, CauchyError> {
    decay.validate()?;
    if !(off_term >= 0.0) || !(w_center_abs >= 0.0) {
        return Err(CauchyError::Argument("off_term and |w_center| must be >= 0".into()));
    }
    if !(r > 2.0 * w_center_abs) || !r.is_finite() {
        return Err(CauchyError::Argument(format!(
            "truncation radius {r} must exceed 2|w_center| = {}",
            2.0 * w_center_abs
        )));
    }
    Ok(2.0 * decay.c_bound * line::tail_integral(1.0 + off_term, decay.epsilon, r - w_center_abs))
}

fn derive_core(spec: &QuadratureSpec, w_abs: f64) -> f64 {
    if spec.r_core > 0.0 {
        spec.r_core
    } else {
        w_abs + spec.core_width.max(1.0)
    }
}

/// Smallest dyadic radius `R = r_core·2^j` beyond `2|w|` whose tail bound
/// meets `tol_tail`.
fn derive_radius(
    decay: &DecayBudget,
    off_term: f64,
    w_abs: f64,
    r_core: f64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64), CauchyError> {
    let mut r = r_core;
    loop {
        if r > 2.0 * w_abs {
            let bound = tail_bound(decay, off_term, w_abs, r)?;
            if bound <= spec.tol_tail {
                return Ok((r, bound));
            }
            if 2.0 * r > spec.r_cap {
                return Err(CauchyError::TailBudget { bound, tol_tail: spec.tol_tail, r_cap: spec.r_cap });
            }
        }
        r *= 2.0;
    }
}

/// Adaptive driver: doubles the radial and/or angular resolution until each
/// error component is below `tol_abs / 2`.
fn refine(
    g: &impl Fn(f64, Complex64) -> Complex64,
    r_core: f64,
    r_max: f64,
    spec: &QuadratureSpec,
) -> Result<(PolarSums, usize, usize, usize, bool), CauchyError> {
    let (mut nt, mut nr, mut np) = (spec.n_theta, spec.n_r, spec.panel_intervals);
    let half = 0.5 * spec.tol_abs;
    let mut level = 0;
    loop {
        let mesh = RadialMesh::new(r_core, r_max, nr, np);
        let sums = polar::integrate(g, &mesh, nt)
            .ok_or_else(|| CauchyError::NonFinite(format!("polar mesh with {} x {} nodes", mesh.len(), nt)))?;
        let (r_ok, t_ok) = (sums.err_r <= half, sums.err_theta <= half);
        if (r_ok && t_ok) || level >= spec.max_refinements {
            return Ok((sums, nt, nr, np, r_ok && t_ok));
        }
        if !r_ok {
            nr *= 2;
            np *= 2;
        }
        if !t_ok {
            nt *= 2;
        }
        level += 1;
    }
}

/// `T[b](w_center)` with its error estimate.
///
/// When `spec.r_max > 0` that radius is used as given and its tail bound is
/// added to the estimate; otherwise the smallest admissible dyadic radius is
/// searched, failing with [`CauchyError::TailBudget`] beyond `r_cap`.
pub fn cauchy_transform(
    b: &SliceField<'_>,
    w_center: Complex64,
    spec: &QuadratureSpec,
) -> Result<CauchyResult, CauchyError> {
    spec.validate()?;
    b.decay.validate()?;
    if !w_center.is_finite() {
        return Err(CauchyError::Argument("non-finite centre".into()));
    }
    let w_abs = w_center.norm();
    let r_core = derive_core(spec, w_abs);
    let (r_max, tail) = if spec.r_max > 0.0 {
        (spec.r_max, tail_bound(&b.decay, b.off_term, w_abs, spec.r_max)?)
    } else {
        derive_radius(&b.decay, b.off_term, w_abs, r_core, spec)?
    };
    if b.is_zero() {
        return Ok(CauchyResult::exact_zero(r_max, r_core.min(r_max), spec));
    }
    let scale = -1.0 / PI;
    let g = |r: f64, e: Complex64| b.eval(w_center + e * r) * e.conj() * scale;
    let (sums, n_theta, n_r, panel_intervals, converged) = refine(&g, r_core, r_max, spec)?;
    Ok(CauchyResult {
        value: sums.value,
        err_estimate: sums.err() + tail,
        quad_error: sums.err(),
        tail_bound: tail,
        r_max,
        r_core: r_core.min(r_max),
        n_theta,
        n_r,
        panel_intervals,
        converged,
    })
}

/// `(1/2πi) ∫_{D(0,R)} f(w + ζ)/ζ dζ∧dζ̄` over a disc, without tail term.
pub fn disc_transform(
    f: &SliceField<'_>,
    w_center: Complex64,
    radius: f64,
    spec: &QuadratureSpec,
) -> Result<CauchyResult, CauchyError> {
    spec.validate()?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(CauchyError::Argument(format!("disc radius must be positive, got {radius}")));
    }
    let r_core = if spec.r_core > 0.0 { spec.r_core.min(radius) } else { radius };
    if f.is_zero() {
        return Ok(CauchyResult::exact_zero(radius, r_core, spec));
    }
    let scale = -1.0 / PI;
    let g = |r: f64, e: Complex64| f.eval(w_center + e * r) * e.conj() * scale;
    let (sums, n_theta, n_r, panel_intervals, converged) = refine(&g, r_core, radius, spec)?;
    Ok(CauchyResult {
        value: sums.value,
        err_estimate: sums.err(),
        quad_error: sums.err(),
        tail_bound: 0.0,
        r_max: radius,
        r_core,
        n_theta,
        n_r,
        panel_intervals,
        converged,
    })
}

/// `(1/2πi) ∮_{|ζ|=R} f(w + ζ)/ζ dζ`, i.e. the mean of `f` over the circle,
/// by the trapezoid rule with doubling until two levels agree to `tol_abs`.
/// Returns `(value, |T_n − T_{n/2}|)`.
pub fn circle_mean(
    f: &SliceField<'_>,
    w_center: Complex64,
    radius: f64,
    spec: &QuadratureSpec,
) -> Result<(Complex64, f64), CauchyError> {
    spec.validate()?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(CauchyError::Argument(format!("circle radius must be positive, got {radius}")));
    }
    let mean = |n: usize| -> Complex64 {
        let sum: Complex64 =
            (0..n).map(|i| f.eval(w_center + Complex64::from_polar(radius, 2.0 * PI * i as f64 / n as f64))).sum();
        sum / n as f64
    };
    let mut n = spec.n_theta;
    let mut prev = mean(n / 2);
    for _ in 0..=(spec.max_refinements + 4) {
        let cur = mean(n);
        if !cur.is_finite() {
            return Err(CauchyError::NonFinite(format!("circle of radius {radius}")));
        }
        let gap = (cur - prev).norm();
        if gap <= spec.tol_abs {
            return Ok((cur, gap));
        }
        prev = cur;
        n *= 2;
    }
    Ok((prev, (prev - mean(n / 4)).norm()))
}

/// `(4π(1 + 1/ε), 4π ∫_0^∞ dr/(1 + r^{1+ε}))`: the bound on the mass of the
/// dominating kernel `1/(|ζ|(1 + |ζ|^{1+ε}))` against `|dζ∧dζ̄|`, and its
/// numeric value.
pub fn kernel_mass_bound(epsilon: f64) -> Result<(f64, f64), CauchyError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(CauchyError::Argument(format!("epsilon must be positive, got {epsilon}")));
    }
    let bound = 4.0 * PI * (1.0 + 1.0 / epsilon);
    Ok((bound, 4.0 * PI * line::half_line_integral(1.0, epsilon)))
}

/// `(∫_ℝ dr/(1 + off_term + |r|^{1+ε}), 2 + 2/ε)`.
pub fn g_bound_check(off_term: f64, epsilon: f64) -> Result<(f64, f64), CauchyError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) || !(off_term >= 0.0 && off_term.is_finite()) {
        return Err(CauchyError::Argument(format!("need epsilon > 0 and off_term >= 0, got ({epsilon}, {off_term})")));
    }
    Ok((2.0 * line::half_line_integral(1.0 + off_term, epsilon), 2.0 + 2.0 / epsilon))
}

/// One sample of the profile function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub x: f64,
    pub value: f64,
    pub err_estimate: f64,
}

/// `F(x) = ∫_ℂ (1/|ζ|) / (1 + off_term + |x + ζ|^{1+ε}) |dζ∧dζ̄|`
/// `     = ∫_0^{2π} ∫_0^∞ 2 / (1 + off_term + |x + r e^{iθ}|^{1+ε}) dr dθ`.
pub fn f_profile(
    off_term: f64,
    epsilon: f64,
    xs: &[f64],
    spec: &QuadratureSpec,
) -> Result<Vec<ProfilePoint>, CauchyError> {
    spec.validate()?;
    if xs.iter().any(|x| !(*x >= 0.0 && x.is_finite())) || xs.windows(2).any(|w| w[1] < w[0]) {
        return Err(CauchyError::Argument("xs must be nonnegative and nondecreasing".into()));
    }
    if !(off_term >= 0.0 && off_term.is_finite()) {
        return Err(CauchyError::Argument(format!("off_term must be >= 0, got {off_term}")));
    }
    // unit budget: the profile is the envelope integral with C = 1
    let unit = DecayBudget::new(epsilon, 1.0)?;
    let a_const = 1.0 + off_term;
    let p = unit.exponent();
    xs.iter()
        .map(|&x| {
            let r_core = derive_core(spec, x);
            let (r_max, tail) = if spec.r_max > 0.0 {
                (spec.r_max, tail_bound(&unit, off_term, x, spec.r_max)?)
            } else {
                derive_radius(&unit, off_term, x, r_core, spec)?
            };
            let g = |r: f64, e: Complex64| Complex64::new(2.0 / (a_const + (e * r + x).norm().powf(p)), 0.0);
            let (sums, ..) = refine(&g, r_core, r_max, spec)?;
            // angular integral of the radial tail bound
            let tail = PI * tail;
            Ok(ProfilePoint { x, value: sums.value.re, err_estimate: sums.err() + tail })
        })
        .collect()
}

/// Whether a profile is nonincreasing up to twice the larger error estimate
/// of each consecutive pair.
pub fn is_nonincreasing(points: &[ProfilePoint]) -> bool {
    points.windows(2).all(|w| w[1].value <= w[0].value + 2.0 * w[0].err_estimate.max(w[1].err_estimate))
}
