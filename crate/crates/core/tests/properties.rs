//! Structural properties of the fiber transform on random smooth data.

mod common;

use common::{combination, reflected, translated, Bump};
use dbar_fiber::cauchy::{cauchy_transform, QuadratureSpec, SliceField};
use dbar_fiber::fields::DecayBudget;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(x, y)| Complex64::new(x, y))
}

fn bump() -> impl Strategy<Value = Bump> {
    (0.5..2.0, complex(1.0), complex(2.0), complex(1.0), complex(2.0)).prop_map(|(a, c, mu, d, nu)| Bump {
        a,
        c,
        mu,
        d,
        nu,
    })
}

fn cfg() -> Config {
    Config { cases: 100, rng_seed: RngSeed::Fixed(0x5eed), failure_persistence: None, ..Config::default() }
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn transform_is_linear(b1 in bump(), b2 in bump(), alpha in complex(2.0), beta in complex(2.0), w in complex(3.0)) {
        let t = cauchy_transform(&combination(b1, b2, alpha, beta), w, &spec()).unwrap();
        let t1 = cauchy_transform(&b1.slice(), w, &spec()).unwrap();
        let t2 = cauchy_transform(&b2.slice(), w, &spec()).unwrap();
        let gap = (t.value - alpha * t1.value - beta * t2.value).norm();
        let tol = t.err_estimate + alpha.norm() * t1.err_estimate + beta.norm() * t2.err_estimate + 1e-9;
        prop_assert!(gap <= tol, "gap {gap:e} > {tol:e}");
    }

    #[test]
    fn transform_commutes_with_translation(b in bump(), shift in complex(2.0), w in complex(3.0)) {
        let lhs = cauchy_transform(&translated(b, shift), w, &spec()).unwrap();
        let rhs = cauchy_transform(&b.slice(), w + shift, &spec()).unwrap();
        let gap = (lhs.value - rhs.value).norm();
        prop_assert!(gap <= lhs.err_estimate + rhs.err_estimate + 1e-9, "gap {gap:e}");
    }

    #[test]
    fn transform_respects_conjugation(b in bump(), w in complex(3.0)) {
        let lhs = cauchy_transform(&reflected(b), w, &spec()).unwrap();
        let rhs = cauchy_transform(&b.slice(), w.conj(), &spec()).unwrap();
        let gap = (lhs.value - rhs.value.conj()).norm();
        prop_assert!(gap <= lhs.err_estimate + rhs.err_estimate + 1e-9, "gap {gap:e}");
    }

    #[test]
    fn error_estimate_covers_rational_oracle(nu in complex(4.0), w in complex(4.0)) {
        // T[1/(1 + |ζ−ν|²)²](w) = conj(w−ν)/(1 + |w−ν|²)
        let c = 2.0 + 2.0 * nu.norm_sqr();
        let b = SliceField::new(
            move |z: Complex64| Complex64::new((1.0 + (z - nu).norm_sqr()).powi(-2), 0.0),
            DecayBudget::new(1.0, c).unwrap(),
            0.0,
        );
        let r = cauchy_transform(&b, w, &spec()).unwrap();
        let u = w - nu;
        let exact = u.conj() / (1.0 + u.norm_sqr());
        prop_assert!((r.value - exact).norm() <= r.err_estimate);
    }
}
