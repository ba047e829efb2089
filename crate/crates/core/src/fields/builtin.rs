//! Registry of closed test forms with closed-form primitives.
//!
//! Every entry is built as `ω = ∂̄φ` from an explicit `φ` that tends to zero
//! along the fibers, so `φ` is the decaying solution the solver must
//! reproduce.
//!
//! | name              | (n, k)     | primitive φ                               |
//! |-------------------|------------|-------------------------------------------|
//! | `zero_form`       | params     | none                                      |
//! | `gaussian_form`   | (0 or 1,1) | `P(z)·(1 − e^{−|w|²})/w`                  |
//! | `rational_form`   | (0, 1)     | `w̄/(1 + |w|²)`                            |
//! | `product_form_k2` | (0, 2)     | `1/((1 + |w₁|²)(1 + |w₂|²))`              |
//! | `opm_metric_form` | (1, 1)     | `1/(1 + |w|²/(1 + |z|²)^m)`               |
//!
//! Common parameters: `epsilon` and `c_bound` override the default decay
//! budget. `gaussian_form` takes `z_profile = "none" | "one" | "gauss"`
//! (`P ≡ 1` without base variable, `P ≡ 1`, `P = e^{−|z|²}`);
//! `opm_metric_form` takes the integer degree `m`; `zero_form` takes `n`, `k`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BaseFiberPoint, DecayBudget, FieldError, ScalarField, VarKind, VariableId, ZeroOneForm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

pub type FormParams = BTreeMap<String, ParamValue>;

pub fn builtin_names() -> &'static [&'static str] {
    &["zero_form", "gaussian_form", "rational_form", "product_form_k2", "opm_metric_form"]
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

struct Params<'a> {
    raw: &'a FormParams,
    allowed: &'static [&'static str],
}

impl<'a> Params<'a> {
    fn new(raw: &'a FormParams, allowed: &'static [&'static str]) -> Result<Self, FieldError> {
        for key in raw.keys() {
            if !allowed.contains(&key.as_str()) && key != "epsilon" && key != "c_bound" {
                return Err(FieldError::InvalidParam {
                    name: key.clone(),
                    reason: format!("not accepted (allowed: epsilon, c_bound, {})", allowed.join(", ")),
                });
            }
        }
        Ok(Self { raw, allowed })
    }

    fn float(&self, key: &str, default: f64) -> Result<f64, FieldError> {
        match self.raw.get(key) {
            None => Ok(default),
            Some(ParamValue::Float(x)) => Ok(*x),
            Some(ParamValue::Int(i)) => Ok(*i as f64),
            Some(other) => Err(bad(key, format!("expected a number, got {other:?}"))),
        }
    }

    fn int(&self, key: &str, default: i64) -> Result<i64, FieldError> {
        debug_assert!(self.allowed.contains(&key));
        match self.raw.get(key) {
            None => Ok(default),
            Some(ParamValue::Int(i)) => Ok(*i),
            Some(ParamValue::Float(x)) if x.fract() == 0.0 && x.abs() < 1e9 => Ok(*x as i64),
            Some(other) => Err(bad(key, format!("expected an integer, got {other:?}"))),
        }
    }

    fn text(&self, key: &str, default: &str) -> Result<String, FieldError> {
        match self.raw.get(key) {
            None => Ok(default.to_string()),
            Some(ParamValue::Text(s)) => Ok(s.clone()),
            Some(other) => Err(bad(key, format!("expected a string, got {other:?}"))),
        }
    }

    fn budget(&self, epsilon: f64, c_bound: f64) -> Result<DecayBudget, FieldError> {
        DecayBudget::new(self.float("epsilon", epsilon)?, self.float("c_bound", c_bound)?)
    }
}

fn bad(name: &str, reason: String) -> FieldError {
    FieldError::InvalidParam { name: name.to_string(), reason }
}

/// Builds a registered closed form by name.
pub fn builtin_form(name: &str, params: &FormParams) -> Result<ZeroOneForm, FieldError> {
    match name {
        "zero_form" => zero_form(params),
        "gaussian_form" => gaussian_form(params),
        "rational_form" => rational_form(params),
        "product_form_k2" => product_form_k2(params),
        "opm_metric_form" => opm_metric_form(params),
        other => Err(FieldError::UnknownForm(other.to_string())),
    }
}

fn zero_form(raw: &FormParams) -> Result<ZeroOneForm, FieldError> {
    let ps = Params::new(raw, &["n", "k"])?;
    let n = ps.int("n", 0)?;
    let k = ps.int("k", 1)?;
    if !(0..=8).contains(&n) || !(1..=8).contains(&k) {
        return Err(bad("n/k", format!("need 0 <= n <= 8 and 1 <= k <= 8, got ({n}, {k})")));
    }
    ZeroOneForm::zero(n as usize, k as usize, ps.budget(1.0, 1.0)?)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ZProfile {
    None,
    One,
    Gauss,
}

impl ZProfile {
    fn value(self, p: &BaseFiberPoint) -> Complex64 {
        match self {
            ZProfile::None | ZProfile::One => Complex64::new(1.0, 0.0),
            ZProfile::Gauss => Complex64::new((-p.z[0].norm_sqr()).exp(), 0.0),
        }
    }

    fn d(self, p: &BaseFiberPoint, bar: bool) -> Complex64 {
        match self {
            ZProfile::None | ZProfile::One => zero(),
            ZProfile::Gauss => {
                let z = p.z[0];
                -(if bar { z } else { z.conj() }) * self.value(p)
            }
        }
    }
}

/// `(1 − e^{−|w|²})/w`, with the removable singularity at 0 filled in.
fn gaussian_primitive(w: Complex64) -> Complex64 {
    let t = w.norm_sqr();
    if t == 0.0 {
        return zero();
    }
    w.conj() * (-(-t).exp_m1() / t)
}

fn gaussian_form(raw: &FormParams) -> Result<ZeroOneForm, FieldError> {
    let ps = Params::new(raw, &["z_profile"])?;
    let profile = match ps.text("z_profile", "none")?.as_str() {
        "none" => ZProfile::None,
        "one" => ZProfile::One,
        "gauss" => ZProfile::Gauss,
        other => return Err(bad("z_profile", format!("unknown profile `{other}`"))),
    };
    let phi = move |p: &BaseFiberPoint| profile.value(p) * gaussian_primitive(p.w[0]);
    let b = ScalarField::new(move |p| profile.value(p) * (-p.w[0].norm_sqr()).exp())
        .with_wirtinger(move |p, v| {
            let e = (-p.w[0].norm_sqr()).exp();
            match v.kind {
                VarKind::Fiber => {
                    let w = p.w[0];
                    -(if v.bar { w } else { w.conj() }) * profile.value(p) * e
                }
                VarKind::Base => profile.d(p, v.bar) * e,
            }
        })
        .with_primitive(phi);
    let a = match profile {
        ZProfile::None => vec![],
        ZProfile::One => vec![ScalarField::zero()],
        ZProfile::Gauss => vec![ScalarField::new(move |p| profile.d(p, true) * gaussian_primitive(p.w[0]))],
    };
    ZeroOneForm::new("gaussian_form", a, vec![b], ps.budget(1.0, 1.0)?, true)
}

fn rational_form(raw: &FormParams) -> Result<ZeroOneForm, FieldError> {
    let ps = Params::new(raw, &[])?;
    let b = ScalarField::new(|p| Complex64::new((1.0 + p.w[0].norm_sqr()).powi(-2), 0.0))
        .with_wirtinger(|p, v| match v.kind {
            VarKind::Fiber => {
                let w = p.w[0];
                -2.0 * (if v.bar { w } else { w.conj() }) * (1.0 + w.norm_sqr()).powi(-3)
            }
            VarKind::Base => zero(),
        })
        .with_primitive(|p| p.w[0].conj() / (1.0 + p.w[0].norm_sqr()));
    ZeroOneForm::new("rational_form", vec![], vec![b], ps.budget(1.0, 1.0)?, true)
}

fn product_form_k2(raw: &FormParams) -> Result<ZeroOneForm, FieldError> {
    let ps = Params::new(raw, &[])?;
    // φ = P₁P₂ with P_j = 1/(1 + |w_j|²), ∂P_j/∂w̄_j = −w_j P_j²
    let factors =
        |p: &BaseFiberPoint| -> [f64; 2] { [1.0 / (1.0 + p.w[0].norm_sqr()), 1.0 / (1.0 + p.w[1].norm_sqr())] };
    let phi = move |p: &BaseFiberPoint| {
        let [p1, p2] = factors(p);
        Complex64::new(p1 * p2, 0.0)
    };
    let coeff = move |j: usize| {
        let o = 1 - j;
        ScalarField::new(move |p| {
            let pf = factors(p);
            -p.w[j] * pf[j] * pf[j] * pf[o]
        })
        .with_wirtinger(move |p, v: VariableId| {
            if v.kind == VarKind::Base {
                return zero();
            }
            let pf = factors(p);
            let (wj, wo) = (p.w[j], p.w[o]);
            if v.index == j {
                if v.bar {
                    2.0 * wj * wj * pf[j].powi(3) * pf[o]
                } else {
                    Complex64::new(-pf[j].powi(2) * pf[o] + 2.0 * wj.norm_sqr() * pf[j].powi(3) * pf[o], 0.0)
                }
            } else {
                let dwo = if v.bar { wo } else { wo.conj() };
                wj * dwo * pf[j].powi(2) * pf[o].powi(2)
            }
        })
        .with_primitive(phi)
    };
    ZeroOneForm::new("product_form_k2", vec![], vec![coeff(0), coeff(1)], ps.budget(1.0, 2.0)?, true)
}

/// `φ(z,w) = 1/(1 + q)` with `q = |w|²/s`, `s = (1 + |z|²)^m`: the hermitian
/// fiber norm of O(m) over ℂP¹, identical in both standard charts.
fn opm_metric_form(raw: &FormParams) -> Result<ZeroOneForm, FieldError> {
    let ps = Params::new(raw, &["m"])?;
    let m = ps.int("m", 1)?;
    if m.abs() > 64 {
        return Err(bad("m", format!("|m| must be at most 64, got {m}")));
    }
    let m = m as i32;
    // (1/s, q, L) with L = m z/(1 + |z|²), so ∂(1/s)/∂z̄ = −L/s and ∂q/∂z̄ = −Lq
    let parts = move |p: &BaseFiberPoint| {
        let z = p.z[0];
        let rho = 1.0 + z.norm_sqr();
        let inv_s = rho.powi(-m);
        let q = p.w[0].norm_sqr() * inv_s;
        (inv_s, q, z * (f64::from(m) / rho))
    };
    let phi = move |p: &BaseFiberPoint| {
        let (_, q, _) = parts(p);
        Complex64::new(1.0 / (1.0 + q), 0.0)
    };
    let b = ScalarField::new(move |p| {
        let (inv_s, q, _) = parts(p);
        -p.w[0] * inv_s / (1.0 + q).powi(2)
    })
    .with_wirtinger(move |p, v| {
        let (inv_s, q, l) = parts(p);
        let w = p.w[0];
        match (v.kind, v.bar) {
            (VarKind::Fiber, true) => 2.0 * (w * inv_s).powi(2) / (1.0 + q).powi(3),
            (VarKind::Fiber, false) => {
                Complex64::new(-inv_s / (1.0 + q).powi(2) + 2.0 * q * inv_s / (1.0 + q).powi(3), 0.0)
            }
            (VarKind::Base, true) => w * l * inv_s * (1.0 - q) / (1.0 + q).powi(3),
            (VarKind::Base, false) => w * l.conj() * inv_s * (1.0 - q) / (1.0 + q).powi(3),
        }
    })
    .with_primitive(phi);
    let a = ScalarField::new(move |p| {
        let (_, q, l) = parts(p);
        l * q / (1.0 + q).powi(2)
    });
    ZeroOneForm::new("opm_metric_form", vec![a], vec![b], ps.budget(1.0, 2.0)?, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{compatibility_residual, wirtinger_fd, Part};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn with(pairs: &[(&str, ParamValue)]) -> FormParams {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn primitives_at_reference_points() {
        let g = builtin_form("gaussian_form", &FormParams::new()).unwrap();
        let v = g.primitive(&BaseFiberPoint::fiber(&[c(1.0, 0.0)])).unwrap();
        assert!((v.re - (1.0 - (-1.0f64).exp())).abs() < 1e-15 && v.im == 0.0);
        assert!((v.re - 0.632121).abs() < 1e-6);
        assert_eq!(g.primitive(&BaseFiberPoint::fiber(&[c(0.0, 0.0)])).unwrap(), zero());

        let r = builtin_form("rational_form", &FormParams::new()).unwrap();
        let v = r.primitive(&BaseFiberPoint::fiber(&[c(1.0, 0.0)])).unwrap();
        assert!((v - c(0.5, 0.0)).norm() < 1e-15);

        let pk = builtin_form("product_form_k2", &FormParams::new()).unwrap();
        let v = pk.primitive(&BaseFiberPoint::fiber(&[c(0.0, 0.0), c(0.0, 0.0)])).unwrap();
        assert_eq!(v, c(1.0, 0.0));
        let v = pk.primitive(&BaseFiberPoint::fiber(&[c(1.0, 0.0), c(0.0, 2.0)])).unwrap();
        assert!((v - c(0.1, 0.0)).norm() < 1e-15);

        let o = builtin_form("opm_metric_form", &with(&[("m", ParamValue::Int(1))])).unwrap();
        let v = o.primitive(&BaseFiberPoint::new(&[c(2.0, 0.0)], &[c(1.0, 0.0)])).unwrap();
        assert!((v - c(5.0 / 6.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gaussian_primitive_is_continuous_at_zero() {
        let tiny = gaussian_primitive(c(1e-9, 1e-9));
        assert!(tiny.norm() < 2e-9);
    }

    #[test]
    fn unknown_names_and_params_are_rejected() {
        assert!(matches!(builtin_form("nope", &FormParams::new()), Err(FieldError::UnknownForm(_))));
        let e = builtin_form("rational_form", &with(&[("m", ParamValue::Int(1))]));
        assert!(matches!(e, Err(FieldError::InvalidParam { .. })));
        let e = builtin_form("gaussian_form", &with(&[("z_profile", ParamValue::Text("cubic".into()))]));
        assert!(matches!(e, Err(FieldError::InvalidParam { .. })));
        let e = builtin_form("opm_metric_form", &with(&[("m", ParamValue::Text("1".into()))]));
        assert!(matches!(e, Err(FieldError::InvalidParam { .. })));
        let e = builtin_form("rational_form", &with(&[("c_bound", ParamValue::Float(-1.0))]));
        assert!(matches!(e, Err(FieldError::InvalidBudget { .. })));
    }

    #[test]
    fn budget_overrides_apply() {
        let f = builtin_form(
            "rational_form",
            &with(&[("epsilon", ParamValue::Float(0.5)), ("c_bound", ParamValue::Int(3))]),
        )
        .unwrap();
        assert_eq!(f.decay(), DecayBudget::new(0.5, 3.0).unwrap());
    }

    fn all_forms() -> Vec<ZeroOneForm> {
        vec![
            builtin_form("gaussian_form", &FormParams::new()).unwrap(),
            builtin_form("gaussian_form", &with(&[("z_profile", ParamValue::Text("gauss".into()))])).unwrap(),
            builtin_form("rational_form", &FormParams::new()).unwrap(),
            builtin_form("product_form_k2", &FormParams::new()).unwrap(),
            builtin_form("opm_metric_form", &with(&[("m", ParamValue::Int(1))])).unwrap(),
            builtin_form("opm_metric_form", &with(&[("m", ParamValue::Int(-2))])).unwrap(),
        ]
    }

    fn sample_point(form: &ZeroOneForm, s: f64) -> BaseFiberPoint {
        let z: Vec<_> = (0..form.n()).map(|i| c(0.4 + 0.3 * s, -0.2 + 0.1 * i as f64)).collect();
        let w: Vec<_> = (0..form.k()).map(|i| c(0.9 * s - 0.3, 0.5 - 0.4 * i as f64 * s)).collect();
        BaseFiberPoint::new(&z, &w)
    }

    /// Central differences of the attached primitive reproduce every
    /// coefficient: this ties each `b_γ` and `a_α` to `∂̄φ`.
    #[test]
    fn coefficients_are_dbar_of_primitive() {
        for form in all_forms() {
            let phi = ScalarField::new({
                let f = form.clone();
                move |p| f.primitive(p).unwrap()
            });
            for s in [0.0, 0.5, 1.0, 1.7] {
                let p = sample_point(&form, s);
                for g in 0..form.k() {
                    let fd = wirtinger_fd(&phi, &p, VariableId::fiber_bar(g), 1e-4).unwrap();
                    let b = form.coeff(Part::B, g).unwrap().evaluate(&p);
                    assert!((fd - b).norm() < 1e-7, "{} b{g} at {p}: {fd} vs {b}", form.name());
                }
                for a in 0..form.n() {
                    let fd = wirtinger_fd(&phi, &p, VariableId::base_bar(a), 1e-4).unwrap();
                    let v = form.coeff(Part::A, a).unwrap().evaluate(&p);
                    assert!((fd - v).norm() < 1e-7, "{} a{a} at {p}: {fd} vs {v}", form.name());
                }
            }
        }
    }

    /// Analytic Wirtinger derivatives agree with central differences and the
    /// error ratio between h and h/2 approaches 4.
    #[test]
    fn analytic_derivatives_match_fd() {
        for form in all_forms() {
            for s in [0.2, 0.9, 1.6] {
                let p = sample_point(&form, s);
                for field in form.b_coeffs() {
                    let vars = (0..form.k())
                        .flat_map(|i| [VariableId::fiber_bar(i), VariableId::fiber(i)])
                        .chain((0..form.n()).flat_map(|i| [VariableId::base_bar(i), VariableId::base(i)]));
                    for v in vars {
                        let exact = field.analytic_wirtinger(&p, v).unwrap();
                        let e1 = (wirtinger_fd(field, &p, v, 2e-2).unwrap() - exact).norm();
                        let e2 = (wirtinger_fd(field, &p, v, 1e-2).unwrap() - exact).norm();
                        assert!(e1 < 1e-2, "{} {v:?} at {p}: err {e1}", form.name());
                        if e1 > 1e-9 {
                            let ratio = e1 / e2;
                            assert!((ratio - 4.0).abs() < 0.3, "{} {v:?} ratio {ratio}", form.name());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn builtins_are_closed() {
        for form in all_forms() {
            for s in [0.1, 0.8, 1.5] {
                let p = sample_point(&form, s);
                let r1 = compatibility_residual(&form, &p, 1e-2).unwrap().max();
                let r2 = compatibility_residual(&form, &p, 5e-3).unwrap().max();
                assert!(r1 < 1e-3, "{} residual {r1}", form.name());
                if r1 > 1e-10 {
                    assert!(r2 < 0.3 * r1, "{} {r1} -> {r2}", form.name());
                }
            }
        }
    }
}
