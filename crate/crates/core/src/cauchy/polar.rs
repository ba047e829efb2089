//! Product quadrature on `[0, R] × [0, 2π)`.
//!
//! Radial rule: composite Simpson on a mesh that is uniform (spacing about
//! `1/n_r`) up to the core radius and then grows in dyadic panels
//! `[a, 2a]` with a fixed interval count. Angular rule: the uniform
//! trapezoid. Both rules nest with their half-resolution versions, so the
//! coarse sums come from the same samples.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Radial nodes with fine and coarse (every other node) Simpson weights.
#[derive(Clone, Debug)]
pub(crate) struct RadialMesh {
    pub nodes: Vec<f64>,
    fine: Vec<f64>,
    coarse: Vec<f64>,
}

fn round_up_to_four(n: usize) -> usize {
    n.div_ceil(4).max(1) * 4
}

impl RadialMesh {
    pub fn new(r_core: f64, r_max: f64, n_r: usize, panel_intervals: usize) -> Self {
        let core_end = r_core.min(r_max);
        let mut panels = Vec::new();
        if core_end > 0.0 {
            let m = round_up_to_four((core_end * n_r as f64).ceil() as usize);
            panels.push((0.0, core_end, m));
        }
        let mut a = core_end;
        let per_panel = round_up_to_four(panel_intervals);
        while a < r_max {
            let b = if a > 0.0 { (2.0 * a).min(r_max) } else { r_max };
            // a panel that would be a sliver of the previous one is merged
            let b = if r_max - b < 1e-9 * r_max { r_max } else { b };
            panels.push((a, b, per_panel));
            a = b;
        }

        let mut nodes = vec![0.0];
        let mut fine = vec![0.0];
        let mut coarse = vec![0.0];
        for (a, b, m) in panels {
            let h = (b - a) / m as f64;
            let base = nodes.len() - 1;
            for j in 1..=m {
                nodes.push(if j == m { b } else { a + h * j as f64 });
                fine.push(0.0);
                coarse.push(0.0);
            }
            for j in 0..=m {
                let wf = match j {
                    0 => 1.0,
                    _ if j == m => 1.0,
                    _ if j % 2 == 1 => 4.0,
                    _ => 2.0,
                };
                fine[base + j] += wf * h / 3.0;
                if j % 2 == 0 {
                    let jc = j / 2;
                    let wc = match jc {
                        0 => 1.0,
                        _ if j == m => 1.0,
                        _ if jc % 2 == 1 => 4.0,
                        _ => 2.0,
                    };
                    coarse[base + j] += wc * 2.0 * h / 3.0;
                }
            }
        }
        Self { nodes, fine, coarse }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }
}

/// Sums of one polar integral at full and half resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct PolarSums {
    /// Fine radial and angular rule.
    pub fine: Complex64,
    /// One Richardson step in `r` applied to `fine`.
    pub value: Complex64,
    /// `Σ |fine − coarse_r| / 15` over the coarse Simpson cells, so that
    /// local errors of opposite sign do not cancel.
    pub err_r: f64,
    /// `|fine − coarse_θ|`; the trapezoid converges spectrally for smooth
    /// periodic integrands, so the coarse gap dominates the fine error.
    pub err_theta: f64,
}

impl PolarSums {
    pub fn err(&self) -> f64 {
        self.err_r + self.err_theta
    }
}

/// Integrates `g(r, e^{iθ})` over `[0, R] × [0, 2π)` with `n_theta` angular
/// nodes (even). Returns `None` on a non-finite sample.
pub(crate) fn integrate(
    g: &impl Fn(f64, Complex64) -> Complex64,
    mesh: &RadialMesh,
    n_theta: usize,
) -> Option<PolarSums> {
    debug_assert!(n_theta.is_multiple_of(2));
    let dtheta = 2.0 * PI / n_theta as f64;
    let phases: Vec<Complex64> = (0..n_theta).map(|i| Complex64::from_polar(1.0, dtheta * i as f64)).collect();
    let zero = Complex64::new(0.0, 0.0);
    let (mut ff, mut fc, mut cf) = (zero, zero, zero);
    let mut angular = Vec::with_capacity(mesh.len());
    for (j, &r) in mesh.nodes.iter().enumerate() {
        let (mut even, mut odd) = (zero, zero);
        for (i, &e) in phases.iter().enumerate() {
            let v = g(r, e);
            if i % 2 == 0 {
                even += v;
            } else {
                odd += v;
            }
        }
        let a_fine = (even + odd) * dtheta;
        let a_coarse = even * (2.0 * dtheta);
        ff += a_fine * mesh.fine[j];
        fc += a_fine * mesh.coarse[j];
        cf += a_coarse * mesh.fine[j];
        angular.push(a_fine);
    }
    let mut err_r = 0.0;
    for c in (0..mesh.len().saturating_sub(1)).step_by(4) {
        let (x, a) = (&mesh.nodes[c..=c + 4], &angular[c..=c + 4]);
        let h = x[1] - x[0];
        let fine = (a[0] + a[1] * 4.0 + a[2] * 2.0 + a[3] * 4.0 + a[4]) * (h / 3.0);
        let coarse = (a[0] + a[2] * 4.0 + a[4]) * (2.0 * h / 3.0);
        err_r += (fine - coarse).norm() / 15.0;
    }
    if !(ff.is_finite() && fc.is_finite() && cf.is_finite()) {
        return None;
    }
    Some(PolarSums { fine: ff, value: ff + (ff - fc) / 15.0, err_r, err_theta: (ff - cf).norm() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_covers_interval_and_weights_sum_to_length() {
        for (core, rmax) in [(8.0, 8.0), (9.0, 9.0 * 16.0), (3.0, 100.0), (5.0, 2.0)] {
            let m = RadialMesh::new(core, rmax, 8, 16);
            assert_eq!(*m.nodes.first().unwrap(), 0.0);
            assert_eq!(*m.nodes.last().unwrap(), rmax);
            assert!(m.nodes.windows(2).all(|w| w[1] > w[0]));
            let sf: f64 = m.fine.iter().sum();
            let sc: f64 = m.coarse.iter().sum();
            assert!((sf - rmax).abs() < 1e-12 * rmax);
            assert!((sc - rmax).abs() < 1e-12 * rmax);
            assert!(m.coarse.iter().skip(1).step_by(2).all(|&w| w == 0.0));
        }
    }

    #[test]
    fn simpson_exact_for_cubics_on_graded_mesh() {
        let m = RadialMesh::new(2.0, 64.0, 4, 8);
        let g = |r: f64, _e: Complex64| Complex64::new(r * r * r, 0.0);
        let s = integrate(&g, &m, 8).unwrap();
        let exact = 2.0 * PI * 64f64.powi(4) / 4.0;
        assert!((s.fine.re - exact).abs() < 1e-10 * exact);
        assert!(s.err_r < 1e-8 * exact && s.err_theta < 1e-8 * exact);
    }

    #[test]
    fn radial_estimate_does_not_cancel_across_cells() {
        // odd about r = 2: the two cells err with opposite signs
        let m = RadialMesh::new(4.0, 4.0, 2, 4);
        let odd = |r: f64, _e: Complex64| Complex64::new((r - 2.0).powi(5), 0.0);
        let s = integrate(&odd, &m, 4).unwrap();
        assert!(s.fine.norm() < 1e-12);
        assert!(s.err_r > 1e-3);
    }

    #[test]
    fn unit_disc_area_and_first_moment() {
        let m = RadialMesh::new(1.0, 1.0, 16, 16);
        let area = integrate(&|r, _| Complex64::new(r, 0.0), &m, 16).unwrap();
        assert!((area.value.re - PI).abs() < 1e-13);
        // ∫ e^{-iθ} dθ = 0 exactly on a uniform rule
        let moment = integrate(&|_, e: Complex64| e.conj(), &m, 16).unwrap();
        assert!(moment.value.norm() < 1e-14);
    }

    #[test]
    fn non_finite_samples_are_reported() {
        let m = RadialMesh::new(1.0, 1.0, 4, 4);
        assert!(integrate(&|r, _| Complex64::new(1.0 / r, 0.0), &m, 8).is_none());
    }
}
