//! Fiber bundles given by explicit atlases `U_s × ℂᵏ` with transitions
//! `(z, w) ↦ (f(z), g(z, w))`, the change of (0,1)-form coefficients between
//! charts, and the gluing check `B_s(z, w) = B_t(f(z), g(z, w))`.
//!
//! Chart ids are 0-based indices into [`FiberBundleModel::charts`].

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cauchy::QuadratureSpec;
use crate::fields::{BaseFiberPoint, Coords, FieldError, Part, ScalarField, ZeroOneForm};
use crate::report::{CheckRecord, RunMeta, VerificationReport};
use crate::solver::{decay_profile, residual, solve_point, SolveError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BundleError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("base point {z:?} is outside the overlap of charts {from} -> {to}")]
    OutsideOverlap { from: usize, to: usize, z: Vec<(f64, f64)> },
    #[error("no transition from chart {from} to chart {to}")]
    MissingTransition { from: usize, to: usize },
    #[error("{0}")]
    Invalid(String),
}

type BasePredicate = Arc<dyn Fn(&[Complex64]) -> bool + Send + Sync>;
type BaseSampler = Arc<dyn Fn(&mut ChaCha8Rng) -> Coords + Send + Sync>;
type BaseMap = Arc<dyn Fn(&[Complex64]) -> Coords + Send + Sync>;
type FiberMap = Arc<dyn Fn(&BaseFiberPoint) -> Coords + Send + Sync>;
type BaseJacobian = Arc<dyn Fn(&[Complex64]) -> Matrix + Send + Sync>;
type PointJacobian = Arc<dyn Fn(&BaseFiberPoint) -> Matrix + Send + Sync>;
type OverlapSampler = Arc<dyn Fn(&mut ChaCha8Rng) -> OverlapSample + Send + Sync>;

/// Row-major complex matrix.
pub type Matrix = Vec<Vec<Complex64>>;

#[derive(Clone)]
pub struct Chart {
    pub id: usize,
    pub name: String,
    pub n: usize,
    pub k: usize,
    contains: BasePredicate,
    sampler: BaseSampler,
}

impl Chart {
    pub fn new(
        id: usize,
        name: impl Into<String>,
        n: usize,
        k: usize,
        contains: impl Fn(&[Complex64]) -> bool + Send + Sync + 'static,
        sampler: impl Fn(&mut ChaCha8Rng) -> Coords + Send + Sync + 'static,
    ) -> Self {
        Self { id, name: name.into(), n, k, contains: Arc::new(contains), sampler: Arc::new(sampler) }
    }

    pub fn contains(&self, z: &[Complex64]) -> bool {
        z.len() == self.n && (self.contains)(z)
    }

    /// An interior base point; rejection-samples until the predicate holds.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Coords {
        loop {
            let z = (self.sampler)(rng);
            if self.contains(&z) {
                return z;
            }
        }
    }
}

/// `(z, w) ↦ (f(z), g(z, w))` from chart `from` to chart `to`, with the
/// conjugate Jacobians the coefficient change needs.
#[derive(Clone)]
pub struct TransitionMap {
    pub from: usize,
    pub to: usize,
    pub n: usize,
    pub k: usize,
    domain: BasePredicate,
    f: BaseMap,
    g: FiberMap,
    /// `[γ][δ] = ∂ḡ_γ/∂w̄_δ`
    g_wbar: PointJacobian,
    /// `[γ][β] = ∂ḡ_γ/∂z̄_β`
    g_zbar: PointJacobian,
    /// `[α][β] = ∂f̄_α/∂z̄_β`
    f_zbar: BaseJacobian,
}

impl TransitionMap {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        from: usize,
        to: usize,
        n: usize,
        k: usize,
        domain: impl Fn(&[Complex64]) -> bool + Send + Sync + 'static,
        f: impl Fn(&[Complex64]) -> Coords + Send + Sync + 'static,
        g: impl Fn(&BaseFiberPoint) -> Coords + Send + Sync + 'static,
        g_wbar_jacobian: impl Fn(&BaseFiberPoint) -> Matrix + Send + Sync + 'static,
        g_zbar_jacobian: impl Fn(&BaseFiberPoint) -> Matrix + Send + Sync + 'static,
        f_zbar_jacobian: impl Fn(&[Complex64]) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            from,
            to,
            n,
            k,
            domain: Arc::new(domain),
            f: Arc::new(f),
            g: Arc::new(g),
            g_wbar: Arc::new(g_wbar_jacobian),
            g_zbar: Arc::new(g_zbar_jacobian),
            f_zbar: Arc::new(f_zbar_jacobian),
        }
    }

    pub fn in_domain(&self, z: &[Complex64]) -> bool {
        z.len() == self.n && (self.domain)(z)
    }

    fn check(&self, p: &BaseFiberPoint) -> Result<(), BundleError> {
        if p.n() != self.n || p.k() != self.k {
            return Err(FieldError::Dimension(format!(
                "transition is for (n, k) = ({}, {}), point has ({}, {})",
                self.n,
                self.k,
                p.n(),
                p.k()
            ))
            .into());
        }
        if !self.in_domain(&p.z) {
            return Err(BundleError::OutsideOverlap {
                from: self.from,
                to: self.to,
                z: p.z.iter().map(|c| (c.re, c.im)).collect(),
            });
        }
        Ok(())
    }

    /// `(f(z), g(z, w))`
    pub fn apply(&self, p: &BaseFiberPoint) -> Result<BaseFiberPoint, BundleError> {
        self.check(p)?;
        Ok(self.apply_unchecked(p))
    }

    fn apply_unchecked(&self, p: &BaseFiberPoint) -> BaseFiberPoint {
        BaseFiberPoint { z: (self.f)(&p.z), w: (self.g)(p) }
    }

    pub fn g_wbar_jacobian(&self, p: &BaseFiberPoint) -> Result<Matrix, BundleError> {
        self.check(p)?;
        Ok((self.g_wbar)(p))
    }

    pub fn g_zbar_jacobian(&self, p: &BaseFiberPoint) -> Result<Matrix, BundleError> {
        self.check(p)?;
        Ok((self.g_zbar)(p))
    }

    pub fn f_zbar_jacobian(&self, z: &[Complex64]) -> Matrix {
        (self.f_zbar)(z)
    }
}

/// A point of chart `from` lying over an overlap with chart `to`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapSample {
    pub from: usize,
    pub to: usize,
    pub point: BaseFiberPoint,
}

#[derive(Clone)]
pub struct FiberBundleModel {
    pub name: String,
    /// Degree for the O(m) family.
    pub m: Option<i32>,
    pub charts: Vec<Chart>,
    pub transitions: Vec<TransitionMap>,
    overlap_sampler: OverlapSampler,
}

impl FiberBundleModel {
    pub fn new(
        name: impl Into<String>,
        charts: Vec<Chart>,
        transitions: Vec<TransitionMap>,
        overlap_sampler: impl Fn(&mut ChaCha8Rng) -> OverlapSample + Send + Sync + 'static,
    ) -> Result<Self, BundleError> {
        for t in &transitions {
            let (Some(a), Some(b)) = (charts.get(t.from), charts.get(t.to)) else {
                return Err(BundleError::Invalid(format!("transition {} -> {} names a missing chart", t.from, t.to)));
            };
            if (a.n, a.k) != (t.n, t.k) || (b.n, b.k) != (t.n, t.k) {
                return Err(BundleError::Invalid(format!(
                    "transition {} -> {} has mismatched dimensions",
                    t.from, t.to
                )));
            }
        }
        for (i, c) in charts.iter().enumerate() {
            if c.id != i {
                return Err(BundleError::Invalid(format!("chart at position {i} has id {}", c.id)));
            }
        }
        Ok(Self { name: name.into(), m: None, charts, transitions, overlap_sampler: Arc::new(overlap_sampler) })
    }

    pub fn transition(&self, from: usize, to: usize) -> Result<&TransitionMap, BundleError> {
        self.transitions
            .iter()
            .find(|t| t.from == from && t.to == to)
            .ok_or(BundleError::MissingTransition { from, to })
    }

    /// `count` overlap points from a generator seeded with `seed`.
    pub fn sample_overlap(&self, count: usize, seed: u64) -> Vec<OverlapSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| (self.overlap_sampler)(&mut rng)).collect()
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A fiber point with `|w| = 10^u`, `u ~ U(−1, 0.5)`, uniform argument.
fn sample_fiber(rng: &mut ChaCha8Rng) -> Complex64 {
    let r = 10f64.powf(rng.gen_range(-1.0..0.5));
    Complex64::from_polar(r, rng.gen_range(0.0..2.0 * PI))
}

/// A base point in the annulus `0.5 ≤ |z| ≤ 2`, which inversion maps to itself.
fn sample_annulus(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(rng.gen_range(0.5..=2.0), rng.gen_range(0.0..2.0 * PI))
}

/// The line bundle O(m) over ℂP¹: two copies of `ℂ × ℂ` glued over `z ≠ 0`
/// by `z′ = 1/z`, `w′ = w·z^{−m}`. The same law maps back.
pub fn make_opm_bundle(m: i32) -> FiberBundleModel {
    let chart = |id: usize| {
        Chart::new(
            id,
            format!("U{id}"),
            1,
            1,
            |z| z[0].is_finite(),
            |rng| {
                let r = rng.gen_range(0.0..2.0);
                smallvec::smallvec![Complex64::from_polar(r, rng.gen_range(0.0..2.0 * PI))]
            },
        )
    };
    let transition = |from: usize, to: usize| {
        TransitionMap::new(
            from,
            to,
            1,
            1,
            |z| z[0].is_finite() && z[0] != c(0.0, 0.0),
            |z| smallvec::smallvec![z[0].inv()],
            move |p| smallvec::smallvec![p.w[0] * p.z[0].powi(-m)],
            move |p| vec![vec![p.z[0].powi(-m).conj()]],
            move |p| vec![vec![(-f64::from(m) * p.w[0] * p.z[0].powi(-m - 1)).conj()]],
            |z| vec![vec![(-(z[0] * z[0]).inv()).conj()]],
        )
    };
    let mut model = FiberBundleModel::new(
        format!("O({m}) over CP1"),
        vec![chart(0), chart(1)],
        vec![transition(0, 1), transition(1, 0)],
        |rng| OverlapSample {
            from: 0,
            to: 1,
            point: BaseFiberPoint::new(&[sample_annulus(rng)], &[sample_fiber(rng)]),
        },
    )
    .expect("O(m) atlas is consistent");
    model.m = Some(m);
    model
}

/// Largest `|T⁻¹(T(p)) − p| / max(1, |p|)` over the samples, with the inverse
/// taken as the registered reverse transition.
pub fn cocycle_error(bundle: &FiberBundleModel, samples: &[OverlapSample]) -> Result<f64, BundleError> {
    let mut worst: f64 = 0.0;
    for s in samples {
        let forward = bundle.transition(s.from, s.to)?;
        let back = bundle.transition(s.to, s.from)?;
        let q = back.apply(&forward.apply(&s.point)?)?;
        let scale = s.point.z.iter().chain(&s.point.w).map(|x| x.norm()).fold(1.0, f64::max);
        let gap = s
            .point
            .z
            .iter()
            .zip(&q.z)
            .chain(s.point.w.iter().zip(&q.w))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst = worst.max(gap / scale);
    }
    Ok(worst)
}

fn nan() -> Complex64 {
    c(f64::NAN, 0.0)
}

/// The coefficients, in chart `t.from`, of a form given in chart `t.to`:
///
/// ```text
/// b_δ = Σ_γ b′_γ(f, g) ∂ḡ_γ/∂w̄_δ
/// a_β = Σ_α a′_α(f, g) ∂f̄_α/∂z̄_β + Σ_γ b′_γ(f, g) ∂ḡ_γ/∂z̄_β
/// ```
///
/// A primitive, when present, pulls back by composition. Coefficients are
/// NaN outside the overlap, so evaluating there through the checked
/// accessors fails. The decay budget is carried over unchanged.
pub fn pull_form(form: &ZeroOneForm, t: &TransitionMap) -> Result<ZeroOneForm, BundleError> {
    if (form.n(), form.k()) != (t.n, t.k) {
        return Err(FieldError::Dimension(format!(
            "form has (n, k) = ({}, {}), transition ({}, {})",
            form.n(),
            form.k(),
            t.n,
            t.k
        ))
        .into());
    }
    let shared = Arc::new((form.clone(), t.clone()));
    let b = (0..t.k)
        .map(|delta| {
            let s = shared.clone();
            ScalarField::new(move |p| {
                let (form, t) = &*s;
                if !t.in_domain(&p.z) {
                    return nan();
                }
                let q = t.apply_unchecked(p);
                let jac = (t.g_wbar)(p);
                form.b_coeffs().iter().enumerate().map(|(g, bf)| bf.evaluate(&q) * jac[g][delta]).sum()
            })
        })
        .collect::<Vec<_>>();
    let a = (0..t.n)
        .map(|beta| {
            let s = shared.clone();
            ScalarField::new(move |p| {
                let (form, t) = &*s;
                if !t.in_domain(&p.z) {
                    return nan();
                }
                let q = t.apply_unchecked(p);
                let fj = (t.f_zbar)(&p.z);
                let gj = (t.g_zbar)(p);
                let from_a: Complex64 =
                    form.a_coeffs().iter().enumerate().map(|(al, af)| af.evaluate(&q) * fj[al][beta]).sum();
                let from_b: Complex64 =
                    form.b_coeffs().iter().enumerate().map(|(g, bf)| bf.evaluate(&q) * gj[g][beta]).sum();
                from_a + from_b
            })
        })
        .collect::<Vec<_>>();
    let mut b = b;
    if form.has_primitive() {
        let s = shared.clone();
        let first = b.remove(0).with_primitive(move |p| {
            let (form, t) = &*s;
            if !t.in_domain(&p.z) {
                return nan();
            }
            form.primitive(&t.apply_unchecked(p)).unwrap_or_else(nan)
        });
        b.insert(0, first);
    }
    Ok(ZeroOneForm::new(format!("{}@chart{}", form.name(), t.from), a, b, form.decay(), form.is_closed())?)
}

/// Largest coefficient difference between `pull_form(form_to, t)` and
/// `form_from` at the sample points (which must lie in chart `t.from`).
pub fn pullback_gap(
    form_from: &ZeroOneForm,
    form_to: &ZeroOneForm,
    t: &TransitionMap,
    points: &[BaseFiberPoint],
) -> Result<f64, BundleError> {
    let pulled = pull_form(form_to, t)?;
    let mut worst: f64 = 0.0;
    for p in points {
        for (part, len) in [(Part::A, t.n), (Part::B, t.k)] {
            for i in 0..len {
                let x = pulled.coeff(part, i)?.try_evaluate(p)?;
                let y = form_from.coeff(part, i)?.try_evaluate(p)?;
                worst = worst.max((x - y).norm());
            }
        }
    }
    Ok(worst)
}

/// `form` with `amp·e^{−|w₁|²}` added to its first b-coefficient. The result
/// is no longer closed; solving it in one chart only breaks the gluing.
pub fn perturbed(form: &ZeroOneForm, amp: f64) -> Result<ZeroOneForm, BundleError> {
    let bump = ScalarField::new(move |p| c(amp * (-p.w[0].norm_sqr()).exp(), 0.0));
    let b0 = bump.axpy(c(1.0, 0.0), &form.b_coeffs()[0]);
    Ok(form.clone().with_b(0, b0)?.renamed(format!("{}+perturbed", form.name())))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapPoint {
    pub index: usize,
    pub from: usize,
    pub to: usize,
    pub point: BaseFiberPoint,
    pub image: BaseFiberPoint,
    pub b_from: Complex64,
    pub b_to: Complex64,
    pub err_from: f64,
    pub err_to: f64,
    /// `|B_from(p) − B_to(image)|`
    pub gap: f64,
    /// `err_from + err_to + tol_glue`
    pub bound: f64,
    /// `|B_from(p) − φ(p)|` when the form carries a primitive.
    pub primitive_gap: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub points: Vec<OverlapPoint>,
    pub max_gap: f64,
    /// Largest `gap − (err_from + err_to)`; compare with `tol_glue`.
    pub max_excess: f64,
    pub tol_glue: f64,
    pub pass: bool,
}

impl ConsistencyReport {
    pub fn failing(&self) -> Vec<usize> {
        self.points.iter().filter(|p| !p.pass).map(|p| p.index).collect()
    }
}

fn check_forms(bundle: &FiberBundleModel, forms: &[ZeroOneForm]) -> Result<(), BundleError> {
    if forms.len() != bundle.charts.len() {
        return Err(BundleError::Invalid(format!(
            "need one form per chart ({}), got {}",
            bundle.charts.len(),
            forms.len()
        )));
    }
    for (chart, form) in bundle.charts.iter().zip(forms) {
        if (form.n(), form.k()) != (chart.n, chart.k) {
            return Err(BundleError::Invalid(format!(
                "form for chart {} has (n, k) = ({}, {}), chart has ({}, {})",
                chart.id,
                form.n(),
                form.k(),
                chart.n,
                chart.k
            )));
        }
    }
    Ok(())
}

/// Solves at each overlap sample in both charts and compares
/// `B_from(z, w)` with `B_to(f(z), g(z, w))`.
pub fn chart_consistency(
    bundle: &FiberBundleModel,
    forms: &[ZeroOneForm],
    spec: &QuadratureSpec,
    samples: &[OverlapSample],
    tol_glue: f64,
) -> Result<ConsistencyReport, BundleError> {
    check_forms(bundle, forms)?;
    let points = samples
        .par_iter()
        .enumerate()
        .map(|(index, s)| {
            let t = bundle.transition(s.from, s.to)?;
            let image = t.apply(&s.point)?;
            let here = solve_point(&forms[s.from], &s.point, 0, spec)?;
            let there = solve_point(&forms[s.to], &image, 0, spec)?;
            let gap = (here.value - there.value).norm();
            let bound = here.err_estimate + there.err_estimate + tol_glue;
            let primitive_gap = forms[s.from].primitive(&s.point).map(|phi| (here.value - phi).norm());
            let prim_ok = primitive_gap.is_none_or(|g| g <= here.err_estimate + tol_glue);
            Ok(OverlapPoint {
                index,
                from: s.from,
                to: s.to,
                point: s.point.clone(),
                image,
                b_from: here.value,
                b_to: there.value,
                err_from: here.err_estimate,
                err_to: there.err_estimate,
                gap,
                bound,
                primitive_gap,
                pass: gap <= bound && prim_ok,
            })
        })
        .collect::<Result<Vec<_>, BundleError>>()?;
    let max_gap = points.iter().map(|p| p.gap).fold(0.0, f64::max);
    let max_excess = points.iter().map(|p| p.gap - p.err_from - p.err_to).reduce(f64::max).unwrap_or(0.0);
    let pass = points.iter().all(|p| p.pass);
    Ok(ConsistencyReport { points, max_gap, max_excess, tol_glue, pass })
}

/// Sampling and tolerances for [`global_solve_report`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BundleCheckConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub residual_points: usize,
    pub fd_step: f64,
    /// Quadrature tolerance used for residual solves.
    pub residual_tol_abs: f64,
    pub tol_residual: f64,
    pub tol_glue: f64,
    pub tol_pullback: f64,
    pub tol_cocycle: f64,
    pub radii: Vec<f64>,
}

impl Default for BundleCheckConfig {
    fn default() -> Self {
        Self {
            n_samples: 50,
            seed: 0,
            residual_points: 3,
            fd_step: 1e-3,
            residual_tol_abs: 1e-8,
            tol_residual: 1e-4,
            tol_glue: 1e-6,
            tol_pullback: 1e-10,
            tol_cocycle: 1e-12,
            radii: vec![1.0, 2.0, 4.0, 8.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BundleReport {
    pub bundle: String,
    pub records: Vec<CheckRecord>,
    pub overlap: ConsistencyReport,
    pub pass: bool,
}

impl BundleReport {
    pub fn into_verification(self, meta: RunMeta) -> VerificationReport {
        VerificationReport::new(meta, self.records)
    }
}

/// Cocycle, coefficient pullback, per-chart residuals and fiber decay, and
/// overlap gluing, as one set of records.
pub fn global_solve_report(
    bundle: &FiberBundleModel,
    forms: &[ZeroOneForm],
    cfg: &BundleCheckConfig,
    spec: &QuadratureSpec,
) -> Result<BundleReport, BundleError> {
    check_forms(bundle, forms)?;
    let samples = bundle.sample_overlap(cfg.n_samples, cfg.seed);
    let mut records = Vec::new();

    records.push(CheckRecord::at_most(
        "cocycle",
        "(f, g) followed by its inverse is the identity on overlaps",
        cocycle_error(bundle, &samples)?,
        cfg.tol_cocycle,
    ));

    for t in &bundle.transitions {
        let points: Vec<BaseFiberPoint> = samples
            .iter()
            .map(|s| {
                if s.from == t.from {
                    Ok(s.point.clone())
                } else {
                    bundle.transition(s.from, t.from)?.apply(&s.point)
                }
            })
            .collect::<Result<_, BundleError>>()?;
        records.push(CheckRecord::at_most(
            format!("pullback chart{} <- chart{}", t.from, t.to),
            "b_δ = Σ_γ b′_γ ∂ḡ_γ/∂w̄_δ, a_β = Σ_α a′_α ∂f̄_α/∂z̄_β + Σ_γ b′_γ ∂ḡ_γ/∂z̄_β",
            pullback_gap(&forms[t.from], &forms[t.to], t, &points)?,
            cfg.tol_pullback,
        ));
    }

    let residual_spec = spec.with_tol_abs(cfg.residual_tol_abs);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    for (chart, form) in bundle.charts.iter().zip(forms) {
        let points: Vec<BaseFiberPoint> = (0..cfg.residual_points)
            .map(|_| {
                let z = chart.sample(&mut rng);
                let w: Coords = (0..chart.k).map(|_| sample_fiber(&mut rng)).collect();
                BaseFiberPoint { z, w }
            })
            .collect();
        let worst = points
            .par_iter()
            .map(|p| residual(form, p, &residual_spec, cfg.fd_step).map(|r| r.max()))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        records.push(CheckRecord::at_most(
            format!("residual chart{}", chart.id),
            "∂B/∂w̄_γ = b_γ and ∂B/∂z̄_α = a_α",
            worst,
            cfg.tol_residual,
        ));

        let z = points.first().map(|p| p.z.clone()).unwrap_or_else(|| chart.sample(&mut rng));
        let mut ray = Coords::from_elem(c(0.0, 0.0), chart.k);
        ray[0] = c(1.0, 0.0);
        let prof = decay_profile(form, &z, &ray, &cfg.radii, spec)?;
        let last = prof.samples.last().map(|s| s.abs).unwrap_or(0.0);
        records.push(
            CheckRecord::flag(
                format!("fiber decay chart{}", chart.id),
                "lim_{|w|→∞} B(z, w) = 0 in each chart",
                prof.tends_to_zero() && prof.envelope_ok(),
            )
            .with_detail(format!("|B| at r = {} is {last:.3e}", cfg.radii.last().copied().unwrap_or(0.0))),
        );
    }

    let overlap = chart_consistency(bundle, forms, spec, &samples, cfg.tol_glue)?;
    let failing = overlap.failing();
    let mut glue =
        CheckRecord::at_most("overlap gluing", "B_s(z, w) = B_t(f(z), g(z, w))", overlap.max_excess, cfg.tol_glue);
    glue.pass = overlap.pass;
    if !failing.is_empty() {
        glue = glue.with_detail(format!("failing overlap samples: {failing:?}"));
    }
    records.push(glue);
    if let Some(worst) = overlap.points.iter().filter_map(|p| p.primitive_gap.map(|g| g - p.err_from)).reduce(f64::max)
    {
        records.push(CheckRecord::at_most(
            "primitive on overlap",
            "B = φ for the decaying primitive φ",
            worst,
            cfg.tol_glue,
        ));
    }

    let pass = records.iter().all(|r| r.pass);
    Ok(BundleReport { bundle: bundle.name.clone(), records, overlap, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{builtin_form, DecayBudget, FormParams, ParamValue};

    fn opm(m: i64) -> ZeroOneForm {
        let mut ps = FormParams::new();
        ps.insert("m".into(), ParamValue::Int(m));
        builtin_form("opm_metric_form", &ps).unwrap()
    }

    #[test]
    fn transition_arithmetic() {
        let b = make_opm_bundle(1);
        let q = b.transition(0, 1).unwrap().apply(&BaseFiberPoint::new(&[c(2.0, 0.0)], &[c(6.0, 0.0)])).unwrap();
        assert!((q.z[0] - c(0.5, 0.0)).norm() < 1e-15 && (q.w[0] - c(3.0, 0.0)).norm() < 1e-15);
        let b0 = make_opm_bundle(0);
        let p = BaseFiberPoint::new(&[c(0.3, 1.0)], &[c(-2.0, 0.5)]);
        assert_eq!(b0.transition(0, 1).unwrap().apply(&p).unwrap().w, p.w);
    }

    #[test]
    fn outside_overlap_is_an_error() {
        let b = make_opm_bundle(1);
        let p = BaseFiberPoint::new(&[c(0.0, 0.0)], &[c(1.0, 0.0)]);
        assert!(matches!(b.transition(0, 1).unwrap().apply(&p), Err(BundleError::OutsideOverlap { .. })));
        let pulled = pull_form(&opm(1), b.transition(0, 1).unwrap()).unwrap();
        assert!(pulled.b_coeffs()[0].try_evaluate(&p).is_err());
        assert!(b.transition(0, 2).is_err());
    }

    #[test]
    fn cocycle_roundtrip() {
        for m in [-2, 0, 1, 3] {
            let b = make_opm_bundle(m);
            let s = b.sample_overlap(40, 9);
            assert!(cocycle_error(&b, &s).unwrap() < 1e-12);
        }
    }

    #[test]
    fn sampler_is_seeded_and_stays_in_annulus() {
        let b = make_opm_bundle(1);
        assert_eq!(b.sample_overlap(5, 3), b.sample_overlap(5, 3));
        assert_ne!(b.sample_overlap(5, 3), b.sample_overlap(5, 4));
        for s in b.sample_overlap(200, 1) {
            let r = s.point.z[0].norm();
            assert!((0.5..=2.0 + 1e-12).contains(&r));
        }
    }

    #[test]
    fn identity_like_pullback_keeps_coefficients() {
        // m = 0 with a z-independent form: b is unchanged and the a-part only
        // sees ∂f̄/∂z̄ acting on a′ = 0
        let mut ps = FormParams::new();
        ps.insert("z_profile".into(), ParamValue::Text("one".into()));
        let g = builtin_form("gaussian_form", &ps).unwrap();
        let b = make_opm_bundle(0);
        let pts: Vec<_> = b.sample_overlap(20, 2).into_iter().map(|s| s.point).collect();
        assert_eq!(pullback_gap(&g, &g, b.transition(0, 1).unwrap(), &pts).unwrap(), 0.0);
    }

    #[test]
    fn opm_metric_form_is_the_same_form_in_both_charts() {
        for m in [1, 2, -1] {
            let b = make_opm_bundle(m);
            let pts: Vec<_> = b.sample_overlap(30, 5).into_iter().map(|s| s.point).collect();
            let gap = pullback_gap(&opm(m.into()), &opm(m.into()), b.transition(0, 1).unwrap(), &pts).unwrap();
            assert!(gap < 1e-10, "m = {m}: {gap}");
            // a wrong degree is detected
            let wrong = pullback_gap(&opm(m.into()), &opm((m + 1).into()), b.transition(0, 1).unwrap(), &pts).unwrap();
            assert!(wrong > 1e-3);
        }
    }

    #[test]
    fn pulled_primitive_composes() {
        let b = make_opm_bundle(1);
        let pulled = pull_form(&opm(1), b.transition(0, 1).unwrap()).unwrap();
        let p = BaseFiberPoint::new(&[c(2.0, 0.0)], &[c(1.0, 0.0)]);
        assert!((pulled.primitive(&p).unwrap() - c(5.0 / 6.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn spot_gluing_at_two_one() {
        let b = make_opm_bundle(1);
        let forms = [opm(1), opm(1)];
        let s = OverlapSample { from: 0, to: 1, point: BaseFiberPoint::new(&[c(2.0, 0.0)], &[c(1.0, 0.0)]) };
        let r = chart_consistency(&b, &forms, &QuadratureSpec::default(), &[s], 1e-6).unwrap();
        let pt = &r.points[0];
        assert!((pt.image.w[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((pt.b_from - c(5.0 / 6.0, 0.0)).norm() < 1e-6);
        assert!((pt.b_to - c(5.0 / 6.0, 0.0)).norm() < 1e-6);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn zero_form_glues_exactly() {
        let b = make_opm_bundle(1);
        let z = ZeroOneForm::zero(1, 1, DecayBudget::new(1.0, 1.0).unwrap()).unwrap();
        let r =
            chart_consistency(&b, &[z.clone(), z], &QuadratureSpec::default(), &b.sample_overlap(10, 0), 1e-6).unwrap();
        assert_eq!(r.max_gap, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn perturbation_in_one_chart_breaks_gluing() {
        let b = make_opm_bundle(1);
        let forms = [opm(1), perturbed(&opm(1), 1e-2).unwrap()];
        let r = chart_consistency(&b, &forms, &QuadratureSpec::default(), &b.sample_overlap(8, 0), 1e-6).unwrap();
        assert!(!r.pass);
        assert!(!r.failing().is_empty());
    }

    #[test]
    fn wrong_form_count_is_rejected() {
        let b = make_opm_bundle(1);
        assert!(chart_consistency(&b, &[opm(1)], &QuadratureSpec::default(), &[], 1e-6).is_err());
    }

    #[test]
    fn global_report_for_o1() {
        let b = make_opm_bundle(1);
        let cfg = BundleCheckConfig { n_samples: 12, residual_points: 2, ..BundleCheckConfig::default() };
        let r = global_solve_report(&b, &[opm(1), opm(1)], &cfg, &QuadratureSpec::default()).unwrap();
        assert!(r.pass, "{:#?}", r.records);
        assert!(r.records.iter().any(|x| x.check == "primitive on overlap"));

        let z = ZeroOneForm::zero(1, 1, DecayBudget::new(1.0, 1.0).unwrap()).unwrap();
        let r = global_solve_report(&b, &[z.clone(), z], &cfg, &QuadratureSpec::default()).unwrap();
        assert!(r.pass);
        assert_eq!(r.overlap.max_gap, 0.0);

        let bad = [opm(1), perturbed(&opm(1), 1e-2).unwrap()];
        let r = global_solve_report(&b, &bad, &cfg, &QuadratureSpec::default()).unwrap();
        assert!(!r.pass);
        let glue = r.records.iter().find(|x| x.check == "overlap gluing").unwrap();
        assert!(!glue.pass && glue.detail.as_deref().unwrap().contains("failing overlap samples"));
    }
}
