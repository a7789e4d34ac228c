//! Euler operator `E = Σ ν_k x_k ∂_k`, radial derivative `R = E / |x|`, and
//! the homogeneity characterisation `E f = ν f ⇔ f(D_r x) = r^ν f(x)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::group::{GroupSpec, QuasiNorm};
use crate::numerics::loglog_slope;

fn check_dims(spec: &GroupSpec, f: &ScalarField, x: &[f64]) -> Result<()> {
    spec.check_point(x)?;
    if f.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: f.dim() });
    }
    Ok(())
}

/// `Σ ν_k x_k g_k` for a precomputed gradient.
#[inline]
pub fn euler_from_gradient(spec: &GroupSpec, x: &[f64], grad: &[Complex64]) -> Complex64 {
    x.iter().zip(grad).zip(spec.nu()).map(|((xk, gk), nk)| *gk * (nk * xk)).sum()
}

/// `E f(x)` from the field's analytic partials.
pub fn euler_apply(spec: &GroupSpec, f: &ScalarField, x: &[f64]) -> Result<Complex64> {
    check_dims(spec, f, x)?;
    let grad = f.gradient(x);
    let e = euler_from_gradient(spec, x, &grad);
    if !(e.re.is_finite() && e.im.is_finite()) {
        return Err(Error::OutsideDomain { field: f.label().to_string(), point: x.to_vec() });
    }
    Ok(e)
}

/// `R f(x) = E f(x) / |x|`.
pub fn radial_derivative(qn: &QuasiNorm, f: &ScalarField, x: &[f64]) -> Result<Complex64> {
    let r = qn.norm(x)?;
    if r == 0.0 {
        return Err(Error::AtOrigin);
    }
    Ok(euler_apply(qn.spec(), f, x)? / r)
}

/// Central difference of `s ↦ f(D_s x)` at `s = 1`, an approximation of `E f(x)`.
pub fn euler_fd(spec: &GroupSpec, f: &ScalarField, x: &[f64], h: f64) -> Complex64 {
    let mut y = vec![0.0; x.len()];
    spec.dilate_into(1.0 + h, x, &mut y);
    let fp = f.value(&y);
    spec.dilate_into(1.0 - h, x, &mut y);
    let fm = f.value(&y);
    (fp - fm) / (2.0 * h)
}

/// `d/dr f(D_r y)` at `r = |x|`, `y = D_{1/|x|} x`, by central differences
/// with absolute radial step `step`.
pub fn radial_derivative_fd(qn: &QuasiNorm, f: &ScalarField, x: &[f64], step: f64) -> Result<Complex64> {
    let y = qn.project_to_sphere(x)?;
    let r = qn.eval(x);
    let spec = qn.spec();
    let mut z = vec![0.0; x.len()];
    spec.dilate_into(r + step, &y, &mut z);
    let fp = f.value(&z);
    spec.dilate_into(r - step, &y, &mut z);
    let fm = f.value(&z);
    Ok((fp - fm) / (2.0 * step))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerConvergence {
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    /// Log-log slope over steps whose error is above the round-off floor.
    pub observed_order: Option<f64>,
}

/// Error of the dilation-ray difference quotient against `E f(x)` over a
/// step sweep.
pub fn euler_fd_convergence(spec: &GroupSpec, f: &ScalarField, x: &[f64], steps: &[f64]) -> Result<EulerConvergence> {
    let exact = euler_apply(spec, f, x)?;
    let mag = f.value(x).norm().max(exact.norm()).max(f64::MIN_POSITIVE);
    let errors: Vec<f64> = steps.iter().map(|&h| (euler_fd(spec, f, x, h) - exact).norm()).collect();
    let (hs, es): (Vec<f64>, Vec<f64>) = steps
        .iter()
        .zip(&errors)
        .filter(|(h, e)| **e > 100.0 * f64::EPSILON * mag / **h)
        .map(|(h, e)| (*h, *e))
        .unzip();
    let observed_order = if hs.len() >= 3 { loglog_slope(&hs, &es) } else { None };
    Ok(EulerConvergence { steps: steps.to_vec(), errors, observed_order })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub field: String,
    pub order: f64,
    /// `|E f(x) - ν f(x)| / max(1, |ν f(x)|, |f(x)|)` per sample point.
    pub euler_residuals: Vec<f64>,
    /// `|f(D_r x) - r^ν f(x)| / max(1, |r^ν f(x)|)` per (point, scale).
    pub dilation_residuals: Vec<f64>,
    pub max_euler_residual: f64,
    pub max_dilation_residual: f64,
    pub tolerance: f64,
    pub euler_pass: bool,
    pub dilation_pass: bool,
    /// Both characterisations pass.
    pub pass: bool,
    /// The two characterisations agree (both pass or both fail).
    pub consistent: bool,
}

/// Checks `E f = ν f` and `f(D_r x) = r^ν f(x)` on a sample grid.
pub fn check_homogeneity(
    spec: &GroupSpec,
    f: &ScalarField,
    order: f64,
    points: &[Vec<f64>],
    scales: &[f64],
    tolerance: f64,
) -> Result<HomogeneityReport> {
    let mut euler_residuals = Vec::with_capacity(points.len());
    let mut dilation_residuals = Vec::with_capacity(points.len() * scales.len());
    let mut y = vec![0.0; spec.dim()];
    for x in points {
        let fx = f.value(x);
        let e = euler_apply(spec, f, x)?;
        let denom = 1.0f64.max(fx.norm() * order.abs()).max(fx.norm());
        euler_residuals.push((e - fx * order).norm() / denom);
        for &r in scales {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::NonPositiveScale(r));
            }
            spec.dilate_into(r, x, &mut y);
            let expected = fx * r.powf(order);
            dilation_residuals.push((f.value(&y) - expected).norm() / 1.0f64.max(expected.norm()));
        }
    }
    let max_euler_residual = euler_residuals.iter().copied().fold(0.0, f64::max);
    let max_dilation_residual = dilation_residuals.iter().copied().fold(0.0, f64::max);
    let euler_pass = max_euler_residual <= tolerance;
    let dilation_pass = max_dilation_residual <= tolerance;
    Ok(HomogeneityReport {
        field: f.label().to_string(),
        order,
        euler_residuals,
        dilation_residuals,
        max_euler_residual,
        max_dilation_residual,
        tolerance,
        euler_pass,
        dilation_pass,
        pass: euler_pass && dilation_pass,
        consistent: euler_pass == dilation_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{self, Phase};
    use approx::assert_relative_eq;

    #[test]
    fn euler_examples() {
        let g2 = GroupSpec::isotropic(2).unwrap();
        let f = fields::monomial(2, 1.0, &[2, 1]).unwrap();
        assert_relative_eq!(euler_apply(&g2, &f, &[1.0, 1.0]).unwrap().re, 3.0, epsilon = 1e-15);

        let h = GroupSpec::heisenberg();
        let x3 = fields::monomial(3, 1.0, &[0, 0, 1]).unwrap();
        assert_relative_eq!(euler_apply(&h, &x3, &[0.0, 0.0, 2.0]).unwrap().re, 4.0, epsilon = 1e-15);

        let c = fields::constant(3, Complex64::new(2.0, -1.0));
        assert_eq!(euler_apply(&h, &c, &[0.3, 0.1, 2.0]).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn euler_rejects_dimension_mismatch_and_singular_points() {
        let h = GroupSpec::heisenberg();
        let f = fields::monomial(3, 1.0, &[1, 0, 0]).unwrap();
        assert!(euler_apply(&h, &f, &[1.0, 2.0]).is_err());
        let inv = fields::norm_power(&QuasiNorm::koranyi(), -1.0);
        assert!(matches!(euler_apply(&h, &inv, &[0.0, 0.0, 0.0]), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn radial_derivative_examples() {
        let qn = QuasiNorm::koranyi();
        let bump = fields::radial_bump(&qn, 2.0, 1.0).unwrap();
        // |(0,0,4)| = 2 in the Korányi norm; φ'(2) = 0.
        let x = [0.0, 0.0, 4.0];
        assert_relative_eq!(qn.eval(&x), 2.0, epsilon = 1e-15);
        assert!(radial_derivative(&qn, &bump, &x).unwrap().norm() < 1e-15);
        assert_eq!(radial_derivative(&qn, &bump, &[0.0, 0.0, 0.0]), Err(Error::AtOrigin));

        let aniso = QuasiNorm::p_sum(GroupSpec::new(vec![1.0, 2.0, 3.0]).unwrap(), 2.0).unwrap();
        let r = fields::norm_power(&aniso, 1.0);
        let y = [0.4, -1.1, 2.3];
        assert_relative_eq!(radial_derivative(&aniso, &r, &y).unwrap().re, 1.0, max_relative = 1e-14);

        let cube = fields::norm_power(&aniso, 3.0);
        let expect = 3.0 * cube.value(&y).re / aniso.eval(&y);
        assert_relative_eq!(radial_derivative(&aniso, &cube, &y).unwrap().re, expect, max_relative = 1e-14);
    }

    #[test]
    fn radial_derivative_matches_dilation_ray_difference() {
        let qn = QuasiNorm::p_sum(GroupSpec::new(vec![1.0, 2.0, 3.0]).unwrap(), 4.0).unwrap();
        let base = fields::angular_product(&qn, 2.0, 1.0, 0).unwrap();
        let f = fields::complex_phase_wrap(&base, Phase::Linear { coefficients: vec![0.5, 0.1, -0.2] }).unwrap();
        for x in qn.sample_annulus(1.2, 2.8, 25, 3, 1e-3) {
            let exact = radial_derivative(&qn, &f, &x).unwrap();
            let fd = radial_derivative_fd(&qn, &f, &x, 1e-5).unwrap();
            assert!((exact - fd).norm() <= 1e-7 * exact.norm().max(1.0), "{exact} vs {fd}");
        }
    }

    #[test]
    fn euler_fd_converges_at_second_order() {
        let qn = QuasiNorm::koranyi();
        let f = fields::angular_product(&qn, 2.0, 1.0, 1).unwrap();
        let steps = crate::numerics::geometric_steps(1e-6, 1e-2, 9);
        for x in qn.sample_annulus(1.3, 2.7, 10, 17, 1e-3) {
            let conv = euler_fd_convergence(qn.spec(), &f, &x, &steps).unwrap();
            assert!(conv.observed_order.unwrap() >= 1.8, "{conv:?}");
        }
    }

    #[test]
    fn homogeneity_detects_orders() {
        let iso = GroupSpec::isotropic(3).unwrap();
        let qn = QuasiNorm::euclidean(3).unwrap();
        let pts = qn.sample_annulus(0.5, 2.0, 40, 1, 1e-3);
        let scales = [0.5, 0.9, 1.7, 3.0];

        let f = fields::monomial(3, 1.0, &[2, 1, 0]).unwrap();
        let rep = check_homogeneity(&iso, &f, 3.0, &pts, &scales, 1e-10).unwrap();
        assert!(rep.pass && rep.consistent, "{rep:?}");

        let inv = fields::norm_power(&qn, -1.0);
        assert!(check_homogeneity(&iso, &inv, -1.0, &pts, &scales, 1e-10).unwrap().pass);

        let bump = fields::radial_bump(&qn, 1.2, 0.7).unwrap();
        let bad = check_homogeneity(&iso, &bump, 0.0, &pts, &scales, 1e-10).unwrap();
        assert!(!bad.pass && bad.consistent);
        assert!(bad.max_euler_residual >= 1e-2);

        let wrong = check_homogeneity(&iso, &f, 2.0, &pts, &scales, 1e-10).unwrap();
        assert!(!wrong.pass);
    }
}
