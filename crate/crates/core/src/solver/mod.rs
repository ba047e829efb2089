//! Pointwise solution of `∂̄B = ω` through the fiber-slot Cauchy transform,
//! and the checks that go with it: slot independence, finite-difference
//! residuals, fiber decay and the Bochner–Martinelli split.
//!
//! Slot indices (`delta`) are 0-based here.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cauchy::{
    cauchy_transform, circle_mean, disc_transform, f_profile, CauchyError, QuadratureSpec, SliceField,
};
use crate::fields::{
    eval_form, wirtinger_fd_with, BaseFiberPoint, Coords, DecayBudget, FieldError, Part, ScalarField, VarKind,
    VariableId, ZeroOneForm,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Cauchy(#[from] CauchyError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("coefficient has no analytic derivative in fiber slot {0}")]
    MissingDerivative(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveResult {
    pub value: Complex64,
    pub err_estimate: f64,
    /// Discretization part of `err_estimate` (without the tail bound).
    pub quad_error: f64,
    pub delta_used: usize,
    /// Exact mesh of this evaluation with refinement off; see
    /// [`crate::cauchy::CauchyResult::pinned`].
    pub spec_used: QuadratureSpec,
    pub converged: bool,
}

fn check_delta(form: &ZeroOneForm, delta: usize) -> Result<(), SolveError> {
    if delta >= form.k() {
        return Err(SolveError::Argument(format!("slot {delta} out of range for k = {} (0-based)", form.k())));
    }
    Ok(())
}

/// `B_δ(z, w) = (1/2πi) ∫ b_δ(z, w + ζ e_δ)/ζ dζ∧dζ̄`.
pub fn solve_point(
    form: &ZeroOneForm,
    p: &BaseFiberPoint,
    delta: usize,
    spec: &QuadratureSpec,
) -> Result<SolveResult, SolveError> {
    form.check_point(p)?;
    check_delta(form, delta)?;
    if !p.is_finite() {
        return Err(SolveError::Argument(format!("non-finite point {p}")));
    }
    let slice = SliceField::from_form(form, p, delta)?;
    let r = cauchy_transform(&slice, p.w[delta], spec)?;
    Ok(SolveResult {
        value: r.value,
        err_estimate: r.err_estimate,
        quad_error: r.quad_error,
        delta_used: delta,
        spec_used: r.pinned(spec),
        converged: r.converged,
    })
}

/// [`solve_point`] over many points in parallel; output order follows input.
pub fn solve_grid(
    form: &ZeroOneForm,
    points: &[BaseFiberPoint],
    delta: usize,
    spec: &QuadratureSpec,
) -> Vec<Result<SolveResult, SolveError>> {
    points.par_iter().map(|p| solve_point(form, p, delta, spec)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaConsistency {
    pub results: Vec<SolveResult>,
    /// `max_{δ,δ′} |B_δ − B_δ′|`
    pub max_gap: f64,
    /// Sum of the two error estimates for the pair attaining `max_gap`.
    pub bound: f64,
}

impl DeltaConsistency {
    pub fn passed(&self) -> bool {
        self.max_gap <= self.bound
    }
}

/// Solves in every fiber slot and compares the results pairwise.
pub fn delta_consistency(
    form: &ZeroOneForm,
    p: &BaseFiberPoint,
    spec: &QuadratureSpec,
) -> Result<DeltaConsistency, SolveError> {
    if form.k() < 2 {
        return Err(SolveError::Argument(format!("needs k >= 2, form has k = {}", form.k())));
    }
    let results = (0..form.k()).map(|d| solve_point(form, p, d, spec)).collect::<Result<Vec<_>, _>>()?;
    let (mut max_gap, mut bound) = (0.0_f64, 0.0_f64);
    for i in 0..results.len() {
        for j in (i + 1)..results.len() {
            let gap = (results[i].value - results[j].value).norm();
            let pair = results[i].err_estimate + results[j].err_estimate;
            // keep the pair closest to violating its own bound
            if gap - pair > max_gap - bound || (i, j) == (0, 1) {
                max_gap = gap;
                bound = pair;
            }
        }
    }
    Ok(DeltaConsistency { results, max_gap, bound })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub point: BaseFiberPoint,
    pub fd_step: f64,
    /// `|∂B/∂w̄_γ − b_γ|` for each fiber slot.
    pub fiber: Vec<f64>,
    /// `|∂B/∂z̄_α − a_α|` for each base coordinate.
    pub base: Vec<f64>,
    /// Error estimate of the central solve.
    pub err_estimate: f64,
    /// Quadrature error not small against the FD truncation error `O(h²)`.
    pub quadrature_swamped: bool,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.fiber.iter().chain(&self.base).copied().fold(0.0, f64::max)
    }

    pub fn entries(&self) -> Vec<f64> {
        self.fiber.iter().chain(&self.base).copied().collect()
    }
}

/// Wirtinger derivatives of `B` by central differences with step `h`,
/// compared with the form's coefficients at `p`.
///
/// All stencil solves share one pinned mesh so that `B_h` is a smooth
/// function of the point and the FD sees truncation error only. The mesh is
/// the finest that any stencil node asks for on its own: a centre on a
/// symmetry axis can pass the angular test with a mesh its neighbours
/// cannot use.
pub fn residual(
    form: &ZeroOneForm,
    p: &BaseFiberPoint,
    spec: &QuadratureSpec,
    h: f64,
) -> Result<ResidualReport, SolveError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(FieldError::InvalidStep(h).into());
    }
    let center = solve_point(form, p, 0, spec)?;
    let vars: Vec<_> =
        (0..form.k()).map(VariableId::fiber_bar).chain((0..form.n()).map(VariableId::base_bar)).collect();
    let mut pinned = center.spec_used;
    for &v in &vars {
        let widen = |q: &BaseFiberPoint| {
            solve_point(form, q, 0, spec).map(|r| {
                pinned = finest(&pinned, &r.spec_used);
                r.value
            })
        };
        wirtinger_fd_with(widen, p, v, h)?;
    }
    let b_of = |q: &BaseFiberPoint| solve_point(form, q, 0, &pinned).map(|r| r.value);
    let (mut fiber, mut base) = (Vec::with_capacity(form.k()), Vec::with_capacity(form.n()));
    for &v in &vars {
        let d = wirtinger_fd_with(b_of, p, v, h)?;
        match v.kind {
            VarKind::Fiber => fiber.push((d - eval_form(form, p, Part::B, v.index)?).norm()),
            VarKind::Base => base.push((d - eval_form(form, p, Part::A, v.index)?).norm()),
        }
    }
    let quadrature_swamped = center.err_estimate > 0.1 * h * h;
    if quadrature_swamped {
        log::warn!(
            "quadrature error {:.2e} is not small against h² = {:.2e} at {p}; residuals may be noise",
            center.err_estimate,
            h * h
        );
    }
    Ok(ResidualReport {
        point: p.clone(),
        fd_step: h,
        fiber,
        base,
        err_estimate: center.err_estimate,
        quadrature_swamped,
    })
}

/// Element-wise finer of two pinned meshes.
fn finest(a: &QuadratureSpec, b: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        r_max: a.r_max.max(b.r_max),
        r_core: a.r_core.max(b.r_core),
        n_theta: a.n_theta.max(b.n_theta),
        n_r: a.n_r.max(b.n_r),
        panel_intervals: a.panel_intervals.max(b.panel_intervals),
        ..*a
    }
}

/// Residuals below this are treated as noise by [`residual_convergence`].
/// FD rounding is `~10⁻¹⁶/h`; on a pinned mesh the quadrature error is a
/// smooth function of the point and its FD stays below this at the default
/// step and tolerance.
pub const RESIDUAL_NOISE_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualConvergence {
    pub coarse: ResidualReport,
    pub fine: ResidualReport,
    /// `fine/coarse` per entry where `coarse` exceeds the noise floor.
    pub ratios: Vec<Option<f64>>,
    pub noise_floor: f64,
}

impl ResidualConvergence {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn passed(&self, max_ratio: f64) -> bool {
        self.max_ratio() <= max_ratio
    }
}

/// [`residual`] at `h` and `h/2`.
pub fn residual_convergence(
    form: &ZeroOneForm,
    p: &BaseFiberPoint,
    spec: &QuadratureSpec,
    h: f64,
) -> Result<ResidualConvergence, SolveError> {
    let coarse = residual(form, p, spec, h)?;
    let fine = residual(form, p, spec, 0.5 * h)?;
    let noise_floor = RESIDUAL_NOISE_FLOOR;
    let ratios = coarse.entries().iter().zip(fine.entries()).map(|(c, f)| (*c > noise_floor).then(|| f / c)).collect();
    Ok(ResidualConvergence { coarse, fine, ratios, noise_floor })
}

/// `(C/2π)·F(|w_δ|)` with the off-slot term of `w`: the bound on `|B_δ|`
/// implied by the decay budget. Returns the bound with `F`'s error estimate
/// folded in.
pub fn envelope_bound(
    decay: &DecayBudget,
    w: &[Complex64],
    delta: usize,
    spec: &QuadratureSpec,
) -> Result<f64, SolveError> {
    if delta >= w.len() {
        return Err(SolveError::Argument(format!("slot {delta} out of range for k = {}", w.len())));
    }
    let off = decay.off_term(w, delta);
    let profile_spec = QuadratureSpec { r_max: 0.0, r_core: 0.0, ..spec.with_tol_abs(spec.tol_abs.max(1e-6)) };
    let pt = f_profile(off, decay.epsilon, &[w[delta].norm()], &profile_spec)?[0];
    Ok(decay.c_bound / (2.0 * std::f64::consts::PI) * (pt.value + pt.err_estimate))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayProfileSample {
    pub radius: f64,
    pub w: Coords,
    pub value: Complex64,
    pub abs: f64,
    pub err_estimate: f64,
    pub envelope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayProfile {
    pub z: Coords,
    pub ray: Coords,
    pub samples: Vec<DecayProfileSample>,
}

impl DecayProfile {
    /// `|B| ≤ envelope` at every sample, up to the solve error.
    pub fn envelope_ok(&self) -> bool {
        self.samples.iter().all(|s| s.abs <= s.envelope + s.err_estimate)
    }

    /// Nonincreasing from the largest sample onward (within errors) and the
    /// last sample at most half the largest.
    pub fn tends_to_zero(&self) -> bool {
        let s = &self.samples;
        let Some((peak_at, peak)) =
            s.iter().enumerate().map(|(i, x)| (i, x.abs)).fold(None, |acc: Option<(usize, f64)>, (i, v)| match acc {
                Some((_, best)) if best >= v => acc,
                _ => Some((i, v)),
            })
        else {
            return true;
        };
        let err_max = s.iter().map(|x| x.err_estimate).fold(0.0, f64::max);
        if peak <= err_max {
            return true;
        }
        s[peak_at..].windows(2).all(|w| w[1].abs <= w[0].abs + 2.0 * w[0].err_estimate.max(w[1].err_estimate))
            && s.last().unwrap().abs <= 0.5 * peak + err_max
    }
}

/// `|B|` along `w = r·ray` at fixed `z`, with the envelope at each sample.
pub fn decay_profile(
    form: &ZeroOneForm,
    z_fixed: &[Complex64],
    ray: &[Complex64],
    radii: &[f64],
    spec: &QuadratureSpec,
) -> Result<DecayProfile, SolveError> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|r| !(*r >= 0.0)) {
        return Err(SolveError::Argument("radii must be nonnegative and strictly increasing".into()));
    }
    if ray.len() != form.k() || z_fixed.len() != form.n() {
        return Err(FieldError::Dimension(format!(
            "ray has {} slots and base point {} coordinates; form has (n, k) = ({}, {})",
            ray.len(),
            z_fixed.len(),
            form.n(),
            form.k()
        ))
        .into());
    }
    let norm = ray.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(SolveError::Argument("ray must be a nonzero finite vector".into()));
    }
    let unit: Coords = ray.iter().map(|c| c / norm).collect();
    let decay = form.decay();
    let samples = radii
        .par_iter()
        .map(|&r| {
            let w: Coords = unit.iter().map(|c| c * r).collect();
            let p = BaseFiberPoint::new(z_fixed, &w);
            let s = solve_point(form, &p, 0, spec)?;
            let envelope = envelope_bound(&decay, &w, 0, spec)?;
            Ok(DecayProfileSample {
                radius: r,
                w,
                value: s.value,
                abs: s.value.norm(),
                err_estimate: s.err_estimate,
                envelope,
            })
        })
        .collect::<Result<Vec<_>, SolveError>>()?;
    Ok(DecayProfile { z: Coords::from_slice(z_fixed), ray: unit, samples })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BmResult {
    pub radius: f64,
    /// `(1/2πi) ∫_{D(0,R)} ∂b/∂ζ̄(w_δ + ζ)/ζ dζ∧dζ̄`
    pub interior: Complex64,
    /// `(1/2πi) ∮_{|ζ|=R} b(w_δ + ζ)/ζ dζ`
    pub boundary: Complex64,
    pub interior_err: f64,
    pub boundary_err: f64,
    /// `b(p)`
    pub target: Complex64,
}

impl BmResult {
    /// `|interior + boundary − b(p)|`
    pub fn gap(&self) -> f64 {
        (self.interior + self.boundary - self.target).norm()
    }
}

/// Splits `b(p)` into the interior area integral of `∂b/∂w̄_δ` and the
/// boundary circle integral over `|ζ| = R` around `w_δ`.
pub fn bm_reconstruct(
    b: &ScalarField,
    p: &BaseFiberPoint,
    delta: usize,
    radius: f64,
    spec: &QuadratureSpec,
) -> Result<BmResult, SolveError> {
    if delta >= p.k() {
        return Err(SolveError::Argument(format!("slot {delta} out of range for k = {}", p.k())));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(SolveError::Argument(format!("radius must be positive, got {radius}")));
    }
    let target = b.try_evaluate(p)?;
    let v = VariableId::fiber_bar(delta);
    if b.analytic_wirtinger(p, v).is_none() {
        return Err(SolveError::MissingDerivative(delta));
    }
    // the budget only matters for tail control, which a disc integral has none of
    let unit = DecayBudget::new(1.0, 1.0)?;
    let (interior, interior_err) = if b.is_zero() {
        (Complex64::new(0.0, 0.0), 0.0)
    } else {
        let db = SliceField::new(
            |zeta| b.analytic_wirtinger(&p.with_fiber_slot(delta, zeta), v).unwrap_or(Complex64::new(f64::NAN, 0.0)),
            unit,
            0.0,
        );
        let r = disc_transform(&db, p.w[delta], radius, spec)?;
        (r.value, r.err_estimate)
    };
    let slice = SliceField::new(|zeta| b.evaluate(&p.with_fiber_slot(delta, zeta)), unit, 0.0);
    let (boundary, boundary_err) = circle_mean(&slice, p.w[delta], radius, spec)?;
    Ok(BmResult { radius, interior, boundary, interior_err, boundary_err, target })
}

/// `C/(1 + |R − |w_δ||^{1+ε})`: the decay-budget bound on the boundary term.
pub fn bm_boundary_envelope(decay: &DecayBudget, w_delta_abs: f64, radius: f64) -> f64 {
    decay.c_bound / (1.0 + (radius - w_delta_abs).abs().powf(decay.exponent()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{builtin_form, FormParams, ParamValue};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn form(name: &str) -> ZeroOneForm {
        builtin_form(name, &FormParams::new()).unwrap()
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn zero_form_solves_to_exact_zero() {
        let f = ZeroOneForm::zero(1, 2, DecayBudget::new(1.0, 1.0).unwrap()).unwrap();
        let p = BaseFiberPoint::new(&[c(0.3, 0.0)], &[c(1.0, 2.0), c(-1.0, 0.5)]);
        assert_eq!(solve_point(&f, &p, 1, &spec()).unwrap().value, c(0.0, 0.0));
        let d = delta_consistency(&f, &p, &spec()).unwrap();
        assert_eq!(d.max_gap, 0.0);
        let r = residual(&f, &p, &spec(), 1e-3).unwrap();
        assert_eq!(r.max(), 0.0);
    }

    #[test]
    fn spec_examples() {
        let g = solve_point(&form("gaussian_form"), &BaseFiberPoint::fiber(&[c(1.0, 0.0)]), 0, &spec()).unwrap();
        assert!((g.value - c(0.632121, 0.0)).norm() < 1e-6);
        let pk = form("product_form_k2");
        let s = solve_point(&pk, &BaseFiberPoint::fiber(&[c(0.0, 0.0), c(0.0, 0.0)]), 0, &spec()).unwrap();
        assert!((s.value - c(1.0, 0.0)).norm() < 1e-6 + s.err_estimate, "{s:?}");
    }

    #[test]
    fn slot_out_of_range_is_rejected() {
        let p = BaseFiberPoint::fiber(&[c(1.0, 0.0)]);
        assert!(matches!(solve_point(&form("gaussian_form"), &p, 1, &spec()), Err(SolveError::Argument(_))));
        assert!(delta_consistency(&form("gaussian_form"), &p, &spec()).is_err());
    }

    #[test]
    fn delta_consistency_for_product_form() {
        let pk = form("product_form_k2");
        for p in
            [BaseFiberPoint::fiber(&[c(0.0, 0.0), c(0.0, 0.0)]), BaseFiberPoint::fiber(&[c(1.0, 0.0), c(0.0, 2.0)])]
        {
            let d = delta_consistency(&pk, &p, &spec()).unwrap();
            assert!(d.passed(), "{d:?}");
            let phi = pk.primitive(&p).unwrap();
            assert!((d.results[1].value - phi).norm() <= d.results[1].err_estimate + 1e-9);
        }
    }

    #[test]
    fn gaussian_residual_at_one() {
        let p = BaseFiberPoint::fiber(&[c(1.0, 0.0)]);
        let r = residual(&form("gaussian_form"), &p, &spec(), 1e-3).unwrap();
        assert!(r.max() < 1e-4, "{r:?}");
        assert!(!r.quadrature_swamped);
    }

    #[test]
    fn opm_residuals_and_convergence() {
        let mut ps = FormParams::new();
        ps.insert("m".into(), ParamValue::Int(1));
        let f = builtin_form("opm_metric_form", &ps).unwrap();
        let p = BaseFiberPoint::new(&[c(1.0, 0.0)], &[c(1.0, 0.0)]);
        let conv = residual_convergence(&f, &p, &spec(), 1e-3).unwrap();
        assert!(conv.coarse.max() < 1e-4, "{conv:?}");
        assert_eq!(conv.coarse.base.len(), 1);
        assert!(conv.passed(0.3), "{conv:?}");
    }

    #[test]
    fn residual_at_symmetric_centre_uses_neighbour_mesh() {
        // w = 2 + 2i converges at 32 angular nodes, w ± h does not
        let mut ps = FormParams::new();
        ps.insert("m".into(), ParamValue::Int(1));
        let f = builtin_form("opm_metric_form", &ps).unwrap();
        let p = BaseFiberPoint::new(&[c(0.0, 0.0)], &[c(2.0, 2.0)]);
        let conv = residual_convergence(&f, &p, &spec(), 1e-3).unwrap();
        assert!(conv.coarse.max() < 1e-5, "{conv:?}");
        assert!(conv.passed(0.3), "{conv:?}");
    }

    #[test]
    fn gaussian_decay_profile_matches_primitive() {
        let prof = decay_profile(&form("gaussian_form"), &[], &[c(1.0, 0.0)], &[1.0, 2.0, 4.0, 8.0], &spec()).unwrap();
        for s in &prof.samples {
            let r = s.radius;
            let e = (1.0 - (-r * r).exp()) / r;
            assert!((s.abs - e).abs() < 1e-7, "{s:?}");
        }
        assert!((prof.samples[0].abs - 0.632121).abs() < 1e-6);
        assert!((prof.samples[3].abs - 0.125).abs() < 1e-6);
        assert!(prof.envelope_ok() && prof.tends_to_zero());
    }

    #[test]
    fn profile_rejects_bad_radii() {
        assert!(decay_profile(&form("gaussian_form"), &[], &[c(1.0, 0.0)], &[2.0, 1.0], &spec()).is_err());
        assert!(decay_profile(&form("gaussian_form"), &[], &[c(0.0, 0.0)], &[1.0], &spec()).is_err());
    }

    #[test]
    fn bm_gaussian_and_constant() {
        let g = form("gaussian_form");
        let b = &g.b_coeffs()[0];
        let p = BaseFiberPoint::fiber(&[c(0.0, 0.0)]);
        let decay = g.decay();
        let mut last = f64::INFINITY;
        for r in [2.0, 4.0, 8.0] {
            let res = bm_reconstruct(b, &p, 0, r, &spec()).unwrap();
            assert!(res.gap() < 1e-6, "{res:?}");
            assert!((res.interior.re - (1.0 - (-r * r).exp())).abs() < 1e-7);
            assert!(res.boundary.norm() < last);
            assert!(res.boundary.norm() <= bm_boundary_envelope(&decay, 0.0, r));
            last = res.boundary.norm();
        }
        let constant = ScalarField::new(|_| c(2.0, 1.0)).with_wirtinger(|_, _| c(0.0, 0.0));
        let res = bm_reconstruct(&constant, &p, 0, 3.0, &spec()).unwrap();
        assert!((res.boundary - c(2.0, 1.0)).norm() < 1e-14);
        assert!(res.interior.norm() < 1e-14);
    }

    #[test]
    fn bm_needs_analytic_derivative() {
        let b = ScalarField::new(|p| p.w[0]);
        let p = BaseFiberPoint::fiber(&[c(0.0, 0.0)]);
        assert!(matches!(bm_reconstruct(&b, &p, 0, 1.0, &spec()), Err(SolveError::MissingDerivative(0))));
    }
}
