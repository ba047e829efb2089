use num_complex::Complex64;
use serde::Serialize;

use super::{BaseFiberPoint, FieldError, ScalarField, VariableId, ZeroOneForm};

/// Default central-difference step for variable `v` at `p`:
/// `10⁻⁵ · max(1, |coordinate|)`.
pub fn default_step(p: &BaseFiberPoint, v: VariableId) -> f64 {
    1e-5 * p.coord(v.kind, v.index).norm().max(1.0)
}

/// Wirtinger derivative by central differences in the two real coordinates
/// of `v`: `½(∂f/∂u + i∂f/∂v)` for the conjugate derivative and
/// `½(∂f/∂u − i∂f/∂v)` for the plain one. Truncation error is `O(h²)`.
pub fn wirtinger_fd(f: &ScalarField, p: &BaseFiberPoint, v: VariableId, h: f64) -> Result<Complex64, FieldError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(FieldError::InvalidStep(h));
    }
    v.check(p)?;
    wirtinger_fd_with(|q| f.try_evaluate(q), p, v, h)
}

/// Same stencil as [`wirtinger_fd`] for any fallible map; the solver reuses
/// it to differentiate `B`.
pub(crate) fn wirtinger_fd_with<E>(
    mut f: impl FnMut(&BaseFiberPoint) -> Result<Complex64, E>,
    p: &BaseFiberPoint,
    v: VariableId,
    h: f64,
) -> Result<Complex64, E> {
    let re_step = Complex64::new(h, 0.0);
    let im_step = Complex64::new(0.0, h);
    let du = (f(&p.shifted(v.kind, v.index, re_step))? - f(&p.shifted(v.kind, v.index, -re_step))?) / (2.0 * h);
    let dv = (f(&p.shifted(v.kind, v.index, im_step))? - f(&p.shifted(v.kind, v.index, -im_step))?) / (2.0 * h);
    let i = Complex64::i();
    Ok(if v.bar { 0.5 * (du + i * dv) } else { 0.5 * (du - i * dv) })
}

/// Analytic derivative when the field carries one, otherwise central
/// differences with step `h`.
pub fn wirtinger(f: &ScalarField, p: &BaseFiberPoint, v: VariableId, h: f64) -> Result<Complex64, FieldError> {
    v.check(p)?;
    match f.analytic_wirtinger(p, v) {
        Some(d) if d.is_finite() => Ok(d),
        Some(_) => Err(FieldError::NonFinite { context: format!("analytic derivative {v:?} at {p}") }),
        None => wirtinger_fd(f, p, v, h),
    }
}

/// Largest violation of each family of `∂̄ω = 0` relations at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CompatibilityReport {
    /// `max |∂a_α/∂z̄_β − ∂a_β/∂z̄_α|`
    pub aa: f64,
    /// `max |∂a_α/∂w̄_γ − ∂b_γ/∂z̄_α|`
    pub ab: f64,
    /// `max |∂b_γ/∂w̄_δ − ∂b_δ/∂w̄_γ|`
    pub bb: f64,
}

impl CompatibilityReport {
    pub fn max(&self) -> f64 {
        self.aa.max(self.ab).max(self.bb)
    }
}

/// Evaluates every compatibility relation of a closed (0,1)-form at `p`.
///
/// Analytic derivatives are used where attached, central differences with
/// step `h` otherwise. The zero form returns exactly zero.
pub fn compatibility_residual(
    form: &ZeroOneForm,
    p: &BaseFiberPoint,
    h: f64,
) -> Result<CompatibilityReport, FieldError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(FieldError::InvalidStep(h));
    }
    form.check_point(p)?;
    let (a, b) = (form.a_coeffs(), form.b_coeffs());
    let d = |f: &ScalarField, v: VariableId| wirtinger(f, p, v, h);
    let mut rep = CompatibilityReport::default();
    for al in 0..a.len() {
        for be in (al + 1)..a.len() {
            let gap = d(&a[al], VariableId::base_bar(be))? - d(&a[be], VariableId::base_bar(al))?;
            rep.aa = rep.aa.max(gap.norm());
        }
        for (ga, bg) in b.iter().enumerate() {
            let gap = d(&a[al], VariableId::fiber_bar(ga))? - d(bg, VariableId::base_bar(al))?;
            rep.ab = rep.ab.max(gap.norm());
        }
    }
    for ga in 0..b.len() {
        for de in (ga + 1)..b.len() {
            let gap = d(&b[ga], VariableId::fiber_bar(de))? - d(&b[de], VariableId::fiber_bar(ga))?;
            rep.bb = rep.bb.max(gap.norm());
        }
    }
    Ok(rep)
}
