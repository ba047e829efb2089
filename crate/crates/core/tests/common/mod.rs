//! Random smooth fiber data with an explicit decay constant.
#![allow(dead_code)]

use dbar_fiber::cauchy::SliceField;
use dbar_fiber::fields::DecayBudget;
use num_complex::Complex64;
use rand::Rng;

/// `c·e^{−a|ζ−μ|²} + d/(1 + |ζ−ν|²)²`
#[derive(Clone, Copy, Debug)]
pub struct Bump {
    pub a: f64,
    pub c: Complex64,
    pub mu: Complex64,
    pub d: Complex64,
    pub nu: Complex64,
}

pub fn in_square(rng: &mut impl Rng, r: f64) -> Complex64 {
    Complex64::new(rng.gen_range(-r..r), rng.gen_range(-r..r))
}

impl Bump {
    pub fn random(rng: &mut impl Rng) -> Self {
        Self {
            a: rng.gen_range(0.5..2.0),
            c: in_square(rng, 1.0),
            mu: in_square(rng, 2.0),
            d: in_square(rng, 1.0),
            nu: in_square(rng, 2.0),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.c * (-self.a * (z - self.mu).norm_sqr()).exp() + self.d / (1.0 + (z - self.nu).norm_sqr()).powi(2)
    }

    /// A constant for `|b(ζ)|(1 + |ζ|²) ≤ C`.
    pub fn c_bound(&self) -> f64 {
        let g = 2.0 + 2.0 * self.mu.norm_sqr() + 2.0 / (self.a * std::f64::consts::E);
        let r = 2.0 + 2.0 * self.nu.norm_sqr();
        (self.c.norm() * g + self.d.norm() * r).max(1e-3)
    }

    pub fn budget(&self) -> DecayBudget {
        DecayBudget::new(1.0, self.c_bound()).unwrap()
    }

    pub fn slice(&self) -> SliceField<'static> {
        let me = *self;
        SliceField::new(move |z| me.eval(z), self.budget(), 0.0)
    }
}

/// `αb₁ + βb₂`
pub fn combination(b1: Bump, b2: Bump, alpha: Complex64, beta: Complex64) -> SliceField<'static> {
    let c = alpha.norm() * b1.c_bound() + beta.norm() * b2.c_bound() + 1e-3;
    SliceField::new(move |z| alpha * b1.eval(z) + beta * b2.eval(z), DecayBudget::new(1.0, c).unwrap(), 0.0)
}

/// `ζ ↦ b(ζ + s)`
pub fn translated(b: Bump, s: Complex64) -> SliceField<'static> {
    let c = b.c_bound() * (2.0 + 2.0 * s.norm_sqr());
    SliceField::new(move |z| b.eval(z + s), DecayBudget::new(1.0, c).unwrap(), 0.0)
}

/// `ζ ↦ conj(b(ζ̄))`, whose transform at `w` is `conj(T[b](w̄))`.
pub fn reflected(b: Bump) -> SliceField<'static> {
    SliceField::new(move |z: Complex64| b.eval(z.conj()).conj(), b.budget(), 0.0)
}
