//! Homogeneous group structure in exponential coordinates.
//!
//! A group is represented by its diagonal dilation exponents `nu`; the
//! dilation `D_λ` scales coordinate `k` by `λ^{nu_k}` and Lebesgue measure on
//! `R^n` is the Haar measure. Only dilations, inverses (coordinate negation)
//! and measure are needed here, so no group product is modelled.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dilation exponents of a homogeneous group together with its cached
/// homogeneous dimension `Q = Σ ν_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct GroupSpec {
    nu: Vec<f64>,
    q: f64,
}

impl GroupSpec {
    pub fn new(nu: Vec<f64>) -> Result<Self> {
        if nu.is_empty() {
            return Err(Error::InvalidGroup("need at least one coordinate".into()));
        }
        if let Some(bad) = nu.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidGroup(format!("dilation exponents must be positive and finite, got {bad}")));
        }
        let q = nu.iter().sum();
        Ok(Self { nu, q })
    }

    /// `R^n` with isotropic dilations, `Q = n`.
    pub fn isotropic(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    /// The first Heisenberg group in exponential coordinates, `ν = (1, 1, 2)`.
    pub fn heisenberg() -> Self {
        Self::new(vec![1.0, 1.0, 2.0]).expect("static exponents are valid")
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    /// Topological dimension `n`.
    pub fn dim(&self) -> usize {
        self.nu.len()
    }

    pub fn homogeneous_dimension(&self) -> f64 {
        self.q
    }

    pub fn is_isotropic(&self) -> bool {
        self.nu.iter().all(|&v| v == 1.0)
    }

    pub fn is_heisenberg(&self) -> bool {
        self.nu == [1.0, 1.0, 2.0]
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// `D_λ(x) = (λ^{ν_1} x_1, ..., λ^{ν_n} x_n)`.
    pub fn dilate(&self, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
        let action = DilationAction::new(lambda)?;
        self.check_point(x)?;
        Ok(action.apply(self, x))
    }

    /// Unchecked dilation into a caller-provided buffer.
    #[inline]
    pub(crate) fn dilate_into(&self, lambda: f64, x: &[f64], out: &mut [f64]) {
        for ((o, &xk), &nk) in out.iter_mut().zip(x).zip(&self.nu) {
            *o = lambda.powf(nk) * xk;
        }
    }
}

impl TryFrom<Vec<f64>> for GroupSpec {
    type Error = Error;

    fn try_from(nu: Vec<f64>) -> Result<Self> {
        Self::new(nu)
    }
}

impl From<GroupSpec> for Vec<f64> {
    fn from(spec: GroupSpec) -> Self {
        spec.nu
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("nu=(")?;
        for (i, v) in self.nu.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// A single dilation `D_λ`, `λ > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilationAction {
    lambda: f64,
}

impl DilationAction {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::NonPositiveScale(lambda));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn apply(&self, spec: &GroupSpec, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        spec.dilate_into(self.lambda, x, &mut out);
        out
    }

    /// `D_λ ∘ D_μ = D_{λμ}`.
    pub fn compose(&self, other: &DilationAction) -> DilationAction {
        DilationAction { lambda: self.lambda * other.lambda }
    }

    /// Jacobian determinant `Π λ^{ν_k} = λ^Q`.
    pub fn jacobian(&self, spec: &GroupSpec) -> f64 {
        self.lambda.powf(spec.homogeneous_dimension())
    }
}

/// Quasi-norm families supported in exponential coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NormFamily {
    /// `(Σ |x_k|^{p/ν_k})^{1/p}`
    PSum { p: f64 },
    /// `max_k |x_k|^{1/ν_k}`
    Max,
    /// `((x_1² + x_2²)² + x_3²)^{1/4}` on the Heisenberg group.
    Koranyi,
    /// Standard Euclidean norm; requires isotropic dilations.
    Euclidean,
}

impl fmt::Display for NormFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormFamily::PSum { p } => write!(f, "psum:{p}"),
            NormFamily::Max => f.write_str("max"),
            NormFamily::Koranyi => f.write_str("koranyi"),
            NormFamily::Euclidean => f.write_str("euclidean"),
        }
    }
}

/// A homogeneous quasi-norm bound to a group.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiNorm {
    family: NormFamily,
    spec: GroupSpec,
}

impl QuasiNorm {
    pub fn new(spec: GroupSpec, family: NormFamily) -> Result<Self> {
        let incompatible =
            |reason| Error::IncompatibleNorm { family: family.to_string(), nu: spec.nu().to_vec(), reason };
        match family {
            NormFamily::PSum { p } if !(p.is_finite() && p > 0.0) => {
                return Err(incompatible("p must be positive and finite"))
            }
            NormFamily::Koranyi if !spec.is_heisenberg() => {
                return Err(incompatible("requires the Heisenberg exponents (1, 1, 2)"))
            }
            NormFamily::Euclidean if !spec.is_isotropic() => return Err(incompatible("requires isotropic exponents")),
            _ => {}
        }
        Ok(Self { family, spec })
    }

    pub fn p_sum(spec: GroupSpec, p: f64) -> Result<Self> {
        Self::new(spec, NormFamily::PSum { p })
    }

    pub fn koranyi() -> Self {
        Self::new(GroupSpec::heisenberg(), NormFamily::Koranyi).expect("Heisenberg spec")
    }

    pub fn euclidean(n: usize) -> Result<Self> {
        Self::new(GroupSpec::isotropic(n)?, NormFamily::Euclidean)
    }

    pub fn family(&self) -> NormFamily {
        self.family
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Checked evaluation of `|x|`.
    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        self.spec.check_point(x)?;
        Ok(self.eval(x))
    }

    /// `|x|` without a dimension check.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let nu = self.spec.nu();
        match self.family {
            NormFamily::PSum { p } => {
                // Scale by the largest homogeneous coordinate so that the
                // p-th powers stay in range.
                let m = x.iter().zip(nu).map(|(xk, nk)| homogeneous_coordinate(*xk, *nk)).fold(0.0, f64::max);
                if m == 0.0 {
                    return 0.0;
                }
                let s: f64 = x.iter().zip(nu).map(|(xk, nk)| power(homogeneous_coordinate(*xk, *nk) / m, p)).sum();
                if p == 2.0 {
                    m * s.sqrt()
                } else if p == 4.0 {
                    m * s.sqrt().sqrt()
                } else {
                    m * s.powf(1.0 / p)
                }
            }
            NormFamily::Max => x.iter().zip(nu).map(|(xk, nk)| homogeneous_coordinate(*xk, *nk)).fold(0.0, f64::max),
            NormFamily::Koranyi => {
                let rho2 = x[0] * x[0] + x[1] * x[1];
                (rho2 * rho2 + x[2] * x[2]).sqrt().sqrt()
            }
            NormFamily::Euclidean => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    /// Evaluates `|x|` and writes `∂_k |x|` into `grad`.
    ///
    /// Where the family is not differentiable (coordinate hyperplanes for
    /// p-sum with `p/ν_k <= 1`, ridges of the max norm) a one-sided value is
    /// returned; callers keep sample points off those sets.
    pub fn eval_with_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let nu = self.spec.nu();
        let r = self.eval(x);
        if r == 0.0 {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return 0.0;
        }
        match self.family {
            NormFamily::PSum { p } => {
                for ((g, &xk), &nk) in grad.iter_mut().zip(x).zip(nu) {
                    *g = if xk == 0.0 {
                        0.0
                    } else {
                        let t = homogeneous_coordinate(xk, nk) / r;
                        r / (nk * xk) * power(t, p)
                    };
                }
            }
            NormFamily::Max => {
                let (arg, _) = x.iter().zip(nu).map(|(xk, nk)| homogeneous_coordinate(*xk, *nk)).enumerate().fold(
                    (0, f64::NEG_INFINITY),
                    |best, (k, t)| {
                        if t > best.1 {
                            (k, t)
                        } else {
                            best
                        }
                    },
                );
                grad.iter_mut().for_each(|g| *g = 0.0);
                grad[arg] = r / (nu[arg] * x[arg]);
            }
            NormFamily::Koranyi => {
                let rho2 = x[0] * x[0] + x[1] * x[1];
                let r3 = r * r * r;
                grad[0] = rho2 * x[0] / r3;
                grad[1] = rho2 * x[1] / r3;
                grad[2] = 0.5 * x[2] / r3;
            }
            NormFamily::Euclidean => {
                for (g, &xk) in grad.iter_mut().zip(x) {
                    *g = xk / r;
                }
            }
        }
        r
    }

    /// Half-widths of the smallest coordinate box containing the closed
    /// quasi-ball of radius `radius`: `radius^{ν_k}` for every family here.
    pub fn ball_half_widths(&self, radius: f64) -> Vec<f64> {
        self.spec.nu().iter().map(|nk| radius.powf(*nk)).collect()
    }

    /// `y = D_{1/|x|} x`, the projection of `x` onto the unit quasi-sphere.
    pub fn project_to_sphere(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = self.norm(x)?;
        if r == 0.0 {
            return Err(Error::AtOrigin);
        }
        Ok(DilationAction::new(1.0 / r)?.apply(&self.spec, x))
    }

    /// True when `x` lies in the smoothness exclusion band: some coordinate
    /// satisfies `|x_k| < band · |x|^{ν_k}`.
    pub fn in_exclusion_band(&self, x: &[f64], band: f64) -> bool {
        let r = self.eval(x);
        x.iter().zip(self.spec.nu()).any(|(xk, nk)| xk.abs() < band * r.powf(*nk))
    }

    /// Deterministic samples with `|x|` uniform in `[a, b]` and angular part
    /// obtained by projecting uniform box samples onto the unit quasi-sphere.
    /// Points inside the exclusion band are redrawn.
    pub fn sample_annulus(&self, a: f64, b: f64, count: usize, seed: u64, band: f64) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut u = vec![0.0; n];
        let mut y = vec![0.0; n];
        while out.len() < count {
            for uk in u.iter_mut() {
                *uk = rng.gen_range(-1.0..1.0);
            }
            let ru = self.eval(&u);
            if ru < 1e-3 {
                continue;
            }
            self.spec.dilate_into(1.0 / ru, &u, &mut y);
            let r = a + (b - a) * rng.gen::<f64>();
            let mut x = vec![0.0; n];
            self.spec.dilate_into(r, &y, &mut x);
            if band > 0.0 && self.in_exclusion_band(&x, band) {
                continue;
            }
            out.push(x);
        }
        out
    }
}

impl fmt::Display for QuasiNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family)
    }
}

/// `|x|^{1/ν}` with exact fast paths for the common exponents.
#[inline]
fn homogeneous_coordinate(x: f64, nu: f64) -> f64 {
    let a = x.abs();
    if nu == 1.0 {
        a
    } else if nu == 2.0 {
        a.sqrt()
    } else if nu == 3.0 {
        a.cbrt()
    } else {
        a.powf(1.0 / nu)
    }
}

#[inline]
fn power(v: f64, p: f64) -> f64 {
    if p == 2.0 {
        v * v
    } else if p == 4.0 {
        let v2 = v * v;
        v2 * v2
    } else if p == 1.0 {
        v
    } else {
        v.powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn homogeneous_dimension_sums_exponents() {
        assert_eq!(GroupSpec::isotropic(3).unwrap().homogeneous_dimension(), 3.0);
        assert_eq!(GroupSpec::heisenberg().homogeneous_dimension(), 4.0);
        let g = GroupSpec::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.homogeneous_dimension(), 6.0);
    }

    #[test]
    fn invalid_exponents_rejected() {
        assert!(GroupSpec::new(vec![]).is_err());
        assert!(GroupSpec::new(vec![1.0, 0.0]).is_err());
        assert!(GroupSpec::new(vec![1.0, -2.0]).is_err());
        assert!(GroupSpec::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn dilate_examples() {
        let g = GroupSpec::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(g.dilate(2.0, &[3.0, 5.0]).unwrap(), vec![6.0, 20.0]);
        let h = GroupSpec::heisenberg();
        assert_eq!(h.dilate(3.0, &[1.0, 0.0, 1.0]).unwrap(), vec![3.0, 0.0, 9.0]);
        assert_eq!(h.dilate(1.0, &[0.3, -1.2, 4.0]).unwrap(), vec![0.3, -1.2, 4.0]);
    }

    #[test]
    fn dilate_rejects_bad_scale() {
        let h = GroupSpec::heisenberg();
        assert_eq!(h.dilate(0.0, &[1.0, 1.0, 1.0]), Err(Error::NonPositiveScale(0.0)));
        assert!(h.dilate(-1.0, &[1.0, 1.0, 1.0]).is_err());
        assert!(h.dilate(2.0, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn quasi_norm_examples() {
        let k = QuasiNorm::koranyi();
        assert_eq!(k.norm(&[0.0, 0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(k.norm(&[1.0, 0.0, 0.0]).unwrap(), 1.0);
        let iso = QuasiNorm::p_sum(GroupSpec::isotropic(3).unwrap(), 2.0).unwrap();
        assert_relative_eq!(iso.norm(&[3.0, 4.0, 0.0]).unwrap(), 5.0, epsilon = 1e-15);
        let aniso = QuasiNorm::p_sum(GroupSpec::new(vec![1.0, 2.0]).unwrap(), 2.0).unwrap();
        assert_relative_eq!(aniso.norm(&[0.0, 9.0]).unwrap(), 3.0, epsilon = 1e-15);
        let m = QuasiNorm::new(GroupSpec::new(vec![1.0, 2.0]).unwrap(), NormFamily::Max).unwrap();
        assert_relative_eq!(m.norm(&[-1.5, 4.0]).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn incompatible_families_rejected() {
        let iso = GroupSpec::isotropic(3).unwrap();
        assert!(matches!(QuasiNorm::new(iso, NormFamily::Koranyi), Err(Error::IncompatibleNorm { .. })));
        assert!(QuasiNorm::new(GroupSpec::heisenberg(), NormFamily::Euclidean).is_err());
        assert!(QuasiNorm::p_sum(GroupSpec::heisenberg(), 0.0).is_err());
    }

    #[test]
    fn gradient_satisfies_euler_relation() {
        // Σ ν_k x_k ∂_k|x| = |x| for every family (1-homogeneity).
        let x = [0.7, -1.3, 2.1];
        let families = [
            QuasiNorm::koranyi(),
            QuasiNorm::p_sum(GroupSpec::new(vec![1.0, 2.0, 3.0]).unwrap(), 4.0).unwrap(),
            QuasiNorm::p_sum(GroupSpec::new(vec![1.0, 1.5, 0.5]).unwrap(), 2.0).unwrap(),
            QuasiNorm::new(GroupSpec::new(vec![1.0, 2.0, 3.0]).unwrap(), NormFamily::Max).unwrap(),
            QuasiNorm::euclidean(3).unwrap(),
        ];
        for qn in &families {
            let mut g = [0.0; 3];
            let r = qn.eval_with_gradient(&x, &mut g);
            let euler: f64 = (0..3).map(|k| qn.spec().nu()[k] * x[k] * g[k]).sum();
            assert_relative_eq!(euler, r, max_relative = 1e-14);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let x = [0.7, -1.3, 2.1];
        for qn in [QuasiNorm::koranyi(), QuasiNorm::p_sum(GroupSpec::new(vec![1.0, 2.0, 3.0]).unwrap(), 4.0).unwrap()] {
            let mut g = [0.0; 3];
            qn.eval_with_gradient(&x, &mut g);
            for k in 0..3 {
                let h = 1e-6;
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                let fd = (qn.eval(&xp) - qn.eval(&xm)) / (2.0 * h);
                assert_relative_eq!(g[k], fd, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn dilation_jacobian_and_composition() {
        let g = GroupSpec::new(vec![1.0, 2.0, 3.0]).unwrap();
        let a = DilationAction::new(1.7).unwrap();
        let b = DilationAction::new(0.4).unwrap();
        assert_relative_eq!(a.jacobian(&g), 1.7f64.powi(6), max_relative = 1e-15);
        let x = [0.3, -2.0, 1.1];
        let lhs = a.apply(&g, &b.apply(&g, &x));
        let rhs = a.compose(&b).apply(&g, &x);
        for (l, r) in lhs.iter().zip(&rhs) {
            assert_relative_eq!(l, r, max_relative = 1e-14);
        }
    }

    #[test]
    fn samples_lie_in_annulus_and_avoid_band() {
        let qn = QuasiNorm::p_sum(GroupSpec::new(vec![1.0, 2.0, 3.0]).unwrap(), 2.0).unwrap();
        let pts = qn.sample_annulus(1.0, 3.0, 200, 7, 1e-8);
        assert_eq!(pts.len(), 200);
        for x in &pts {
            let r = qn.eval(x);
            assert!((1.0 - 1e-12..=3.0 + 1e-12).contains(&r));
            assert!(!qn.in_exclusion_band(x, 1e-8));
        }
        assert_eq!(pts, qn.sample_annulus(1.0, 3.0, 200, 7, 1e-8));
    }
}
