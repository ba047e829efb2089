//! TOML run description.
//!
//! ```toml
//! seed = 0
//!
//! [form]
//! name = "gaussian_form"
//! params = { z_profile = "none" }
//!
//! [decay]            # optional; overrides the form's own budget
//! epsilon = 1.0
//! c_bound = 1.0
//!
//! [quadrature]       # any QuadratureSpec field
//! tol_abs = 1e-8
//!
//! [grid]
//! points = [{ z = [], w = [[1.0, 0.0]] }]
//! fiber_box = { re = [-2.0, 2.0], im = [-1.0, 1.0], count = 3 }
//! random = { count = 8, w_max = 3.0, z_max = 1.0 }
//! rays = [[[1.0, 0.0]]]
//! radii = [1.0, 2.0, 4.0, 8.0]
//!
//! [tolerances]
//! tol_residual = 1e-4
//!
//! [bounds]
//! epsilons = [0.5, 1.0, 2.0]
//!
//! [bundle]
//! m = 1
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Complex numbers are `[re, im]` pairs. Slot indices (`grid.delta`) are
//! 1-based. When no grid points are given, `random` defaults to 8 points.

use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bundle::BundleCheckConfig;
use crate::cauchy::QuadratureSpec;
use crate::fields::{builtin_form, BaseFiberPoint, Coords, DecayBudget, FormParams, ZeroOneForm};

use super::CliError;

pub type Pair = [f64; 2];

fn to_c(p: &Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub form: FormConfig,
    pub decay: Option<DecayBudget>,
    pub quadrature: QuadratureSpec,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    pub bounds: BoundsConfig,
    pub bundle: Option<BundleConfig>,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormConfig {
    pub name: String,
    pub params: FormParams,
}

impl Default for FormConfig {
    fn default() -> Self {
        Self { name: "gaussian_form".into(), params: FormParams::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    #[serde(default)]
    pub z: Vec<Pair>,
    pub w: Vec<Pair>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub re: Pair,
    pub im: Pair,
    pub count: usize,
}

impl BoxConfig {
    fn values(&self) -> Vec<Complex64> {
        let axis = |r: Pair| -> Vec<f64> {
            if self.count == 1 {
                vec![0.5 * (r[0] + r[1])]
            } else {
                (0..self.count).map(|i| r[0] + (r[1] - r[0]) * i as f64 / (self.count - 1) as f64).collect()
            }
        };
        let (re, im) = (axis(self.re), axis(self.im));
        re.iter().flat_map(|x| im.iter().map(move |y| Complex64::new(*x, *y))).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomGrid {
    pub count: usize,
    #[serde(default = "default_w_max")]
    pub w_max: f64,
    #[serde(default = "default_z_max")]
    pub z_max: f64,
}

fn default_w_max() -> f64 {
    3.0
}

fn default_z_max() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub points: Vec<PointConfig>,
    /// Tensor grid over every fiber coordinate (`count²` values each).
    pub fiber_box: Option<BoxConfig>,
    /// Tensor grid over every base coordinate; `z_fixed` when absent.
    pub base_box: Option<BoxConfig>,
    pub random: Option<RandomGrid>,
    /// Fiber directions for decay profiles; the first axis when empty.
    pub rays: Vec<Vec<Pair>>,
    pub radii: Vec<f64>,
    /// Base point for decay profiles and box grids; the origin when absent.
    pub z_fixed: Option<Vec<Pair>>,
    pub bm_radii: Vec<f64>,
    /// Fiber slot to solve in (1-based).
    pub delta: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points: vec![],
            fiber_box: None,
            base_box: None,
            random: None,
            rays: vec![],
            radii: vec![1.0, 2.0, 4.0, 8.0],
            z_fixed: None,
            bm_radii: vec![2.0, 4.0, 8.0],
            delta: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tol_residual: f64,
    pub tol_oracle: f64,
    pub tol_glue: f64,
    pub tol_bm: f64,
    pub tol_compat: f64,
    /// Absolute ceiling on slot-to-slot differences.
    pub tol_delta: f64,
    pub fd_step: f64,
    /// Quadrature tolerance for the solves inside residual checks.
    pub residual_tol_abs: f64,
    /// Largest admissible `residual(h/2) / residual(h)`.
    pub residual_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_residual: 1e-4,
            tol_oracle: 1e-6,
            tol_glue: 1e-6,
            tol_bm: 1e-6,
            tol_compat: 1e-6,
            tol_delta: 1e-5,
            fd_step: 1e-3,
            residual_tol_abs: 1e-8,
            residual_ratio: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub epsilons: Vec<f64>,
    pub xs: Vec<f64>,
    pub off_terms: Vec<f64>,
    pub tail_radii: Vec<f64>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.5, 1.0, 2.0],
            xs: vec![0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            off_terms: vec![0.0],
            tail_radii: vec![10.0, 100.0, 1000.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BundleConfig {
    /// Only `"opm"` (the line bundle O(m) over ℂP¹).
    pub kind: String,
    pub m: i32,
    pub n_samples: usize,
    pub residual_points: usize,
    /// Amplitude of a bump added to the form in chart 1 only; `0` for none.
    pub perturb: f64,
}

impl Default for BundleConfig {
    fn default() -> Self {
        Self { kind: "opm".into(), m: 1, n_samples: 50, residual_points: 3, perturb: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, csv: true, json: true }
    }
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| cfg_err(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.quadrature.validate().map_err(|e| cfg_err(e.to_string()))?;
        if let Some(d) = &self.decay {
            d.validate().map_err(|e| cfg_err(e.to_string()))?;
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tol_residual", t.tol_residual),
            ("tol_oracle", t.tol_oracle),
            ("tol_glue", t.tol_glue),
            ("tol_bm", t.tol_bm),
            ("tol_compat", t.tol_compat),
            ("tol_delta", t.tol_delta),
            ("fd_step", t.fd_step),
            ("residual_tol_abs", t.residual_tol_abs),
            ("residual_ratio", t.residual_ratio),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(cfg_err(format!("tolerances.{name} must be positive, got {v}")));
            }
        }
        let g = &self.grid;
        for (name, b) in [("fiber_box", &g.fiber_box), ("base_box", &g.base_box)] {
            if let Some(b) = b {
                if b.count < 1 {
                    return Err(cfg_err(format!("grid.{name}.count must be >= 1")));
                }
            }
        }
        if let Some(r) = &g.random {
            if r.count < 1 || !(r.w_max >= 0.0) || !(r.z_max >= 0.0) {
                return Err(cfg_err("grid.random needs count >= 1 and nonnegative radii"));
            }
        }
        if g.delta < 1 {
            return Err(cfg_err("grid.delta is 1-based and must be >= 1"));
        }
        if g.radii.is_empty() || g.radii.windows(2).any(|w| w[1] <= w[0]) || g.radii[0] < 0.0 {
            return Err(cfg_err("grid.radii must be nonnegative and strictly increasing"));
        }
        if g.bm_radii.iter().any(|r| !(*r > 0.0)) {
            return Err(cfg_err("grid.bm_radii must be positive"));
        }
        let b = &self.bounds;
        if b.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(cfg_err("bounds.epsilons must be positive"));
        }
        if b.xs.is_empty() || b.xs.iter().any(|x| !(*x >= 0.0)) || b.xs.windows(2).any(|w| w[1] < w[0]) {
            return Err(cfg_err("bounds.xs must be nonempty, nonnegative and nondecreasing"));
        }
        if b.off_terms.iter().any(|o| !(*o >= 0.0)) || b.tail_radii.iter().any(|r| !(*r > 0.0)) {
            return Err(cfg_err("bounds.off_terms must be >= 0 and bounds.tail_radii > 0"));
        }
        if let Some(bc) = &self.bundle {
            if bc.kind != "opm" {
                return Err(cfg_err(format!("unknown bundle kind `{}` (supported: opm)", bc.kind)));
            }
            if bc.n_samples < 1 || bc.residual_points < 1 {
                return Err(cfg_err("bundle.n_samples and bundle.residual_points must be >= 1"));
            }
            if !(bc.perturb >= 0.0 && bc.perturb.is_finite()) {
                return Err(cfg_err("bundle.perturb must be >= 0"));
            }
        }
        Ok(())
    }

    /// The configured form with any decay override applied.
    pub fn build_form(&self) -> Result<ZeroOneForm, CliError> {
        self.build_named_form(&self.form.params)
    }

    pub(crate) fn build_named_form(&self, params: &FormParams) -> Result<ZeroOneForm, CliError> {
        let form = builtin_form(&self.form.name, params).map_err(|e| cfg_err(e.to_string()))?;
        match self.decay {
            Some(d) => form.with_decay(d).map_err(|e| cfg_err(e.to_string())),
            None => Ok(form),
        }
    }

    /// 0-based slot.
    pub fn delta(&self, k: usize) -> Result<usize, CliError> {
        if self.grid.delta > k {
            return Err(cfg_err(format!("grid.delta = {} exceeds k = {k}", self.grid.delta)));
        }
        Ok(self.grid.delta - 1)
    }

    pub fn z_fixed(&self, n: usize) -> Result<Coords, CliError> {
        match &self.grid.z_fixed {
            None => Ok(Coords::from_elem(Complex64::new(0.0, 0.0), n)),
            Some(z) if z.len() == n => Ok(z.iter().map(to_c).collect()),
            Some(z) => Err(cfg_err(format!("grid.z_fixed has {} entries, form has n = {n}", z.len()))),
        }
    }

    pub fn rays(&self, k: usize) -> Result<Vec<Coords>, CliError> {
        if self.grid.rays.is_empty() {
            let mut e = Coords::from_elem(Complex64::new(0.0, 0.0), k);
            e[0] = Complex64::new(1.0, 0.0);
            return Ok(vec![e]);
        }
        self.grid
            .rays
            .iter()
            .map(|r| {
                if r.len() != k {
                    return Err(cfg_err(format!("grid ray has {} slots, form has k = {k}", r.len())));
                }
                let v: Coords = r.iter().map(to_c).collect();
                if v.iter().all(|c| c.norm() == 0.0) {
                    return Err(cfg_err("grid rays must be nonzero"));
                }
                Ok(v)
            })
            .collect()
    }

    /// Explicit points, then the box grid, then the seeded random points.
    pub fn grid_points(&self, n: usize, k: usize, seed: u64) -> Result<Vec<BaseFiberPoint>, CliError> {
        let g = &self.grid;
        let mut out = Vec::new();
        for p in &g.points {
            if p.z.len() != n || p.w.len() != k {
                return Err(cfg_err(format!(
                    "grid point has ({}, {}) coordinates, form has (n, k) = ({n}, {k})",
                    p.z.len(),
                    p.w.len()
                )));
            }
            let z: Vec<_> = p.z.iter().map(to_c).collect();
            let w: Vec<_> = p.w.iter().map(to_c).collect();
            out.push(BaseFiberPoint::new(&z, &w));
        }
        if g.fiber_box.is_some() || g.base_box.is_some() {
            let zs: Vec<Coords> = match &g.base_box {
                Some(b) => product(&b.values(), n),
                None => vec![self.z_fixed(n)?],
            };
            let ws: Vec<Coords> = match &g.fiber_box {
                Some(b) => product(&b.values(), k),
                None => vec![Coords::from_elem(Complex64::new(0.0, 0.0), k)],
            };
            for z in &zs {
                for w in &ws {
                    out.push(BaseFiberPoint { z: z.clone(), w: w.clone() });
                }
            }
        }
        let random = match (&g.random, out.is_empty()) {
            (Some(r), _) => Some(r.clone()),
            (None, true) => Some(RandomGrid { count: 8, w_max: default_w_max(), z_max: default_z_max() }),
            (None, false) => None,
        };
        if let Some(r) = random {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut disc = |rmax: f64| {
                let rho = rmax * rng.gen_range(0.0f64..1.0).sqrt();
                Complex64::from_polar(rho, rng.gen_range(0.0..std::f64::consts::TAU))
            };
            for _ in 0..r.count {
                let z: Vec<_> = (0..n).map(|_| disc(r.z_max)).collect();
                let w: Vec<_> = (0..k).map(|_| disc(r.w_max)).collect();
                out.push(BaseFiberPoint::new(&z, &w));
            }
        }
        Ok(out)
    }

    pub fn bundle_checks(&self, bc: &BundleConfig, seed: u64) -> BundleCheckConfig {
        let t = &self.tolerances;
        BundleCheckConfig {
            n_samples: bc.n_samples,
            seed,
            residual_points: bc.residual_points,
            fd_step: t.fd_step,
            residual_tol_abs: t.residual_tol_abs,
            tol_residual: t.tol_residual,
            tol_glue: t.tol_glue,
            radii: self.grid.radii.clone(),
            ..BundleCheckConfig::default()
        }
    }
}

/// Every `dim`-tuple of `values`.
fn product(values: &[Complex64], dim: usize) -> Vec<Coords> {
    let mut acc = vec![Coords::new()];
    for _ in 0..dim {
        acc = acc
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push(*v);
                    next
                })
            })
            .collect();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_valid_and_defaults_to_random_grid() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg.form.name, "gaussian_form");
        let pts = cfg.grid_points(0, 1, 0).unwrap();
        assert_eq!(pts.len(), 8);
        assert!(pts.iter().all(|p| p.w[0].norm() <= 3.0));
        assert_eq!(pts, cfg.grid_points(0, 1, 0).unwrap());
        assert_ne!(pts, cfg.grid_points(0, 1, 1).unwrap());
    }

    #[test]
    fn explicit_and_box_points() {
        let cfg = RunConfig::from_toml(
            r#"
            [grid]
            points = [{ w = [[1.0, 0.0], [0.0, 2.0]] }]
            fiber_box = { re = [-1.0, 1.0], im = [0.0, 0.0], count = 2 }
            "#,
        )
        .unwrap();
        let pts = cfg.grid_points(0, 2, 0).unwrap();
        // 1 explicit + (2·2)² box points, no random fill
        assert_eq!(pts.len(), 1 + 16);
        assert_eq!(pts[0].w[1], Complex64::new(0.0, 2.0));
        assert!(cfg.grid_points(1, 2, 0).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            "[tolerances]\ntol_residual = 0.0",
            "[grid]\nradii = [2.0, 1.0]",
            "[quadrature]\nn_theta = 7",
            "[bundle]\nkind = \"torus\"",
            "unknown_key = 1",
            "[decay]\nepsilon = -1.0\nc_bound = 1.0",
            "[grid]\ndelta = 0",
        ] {
            assert!(RunConfig::from_toml(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn form_construction_errors_are_config_errors() {
        let cfg = RunConfig::from_toml("[form]\nname = \"nope\"").unwrap();
        assert!(matches!(cfg.build_form(), Err(CliError::Config(_))));
        let cfg =
            RunConfig::from_toml("[form]\nname = \"rational_form\"\n[decay]\nepsilon = 1.0\nc_bound = 0.1").unwrap();
        assert_eq!(cfg.build_form().unwrap().decay().c_bound, 0.1);
    }
}
