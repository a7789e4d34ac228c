//! Both sides of the weighted remainder identity, its specialisations, and the
//! inequalities that follow from it, evaluated by quadrature and reported
//! with residuals.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fields::{RadialForm, ScalarField};
use crate::group::{GroupSpec, NormFamily, QuasiNorm};
use crate::numerics::{relative, KahanSum};
use crate::operators::euler_from_gradient;
use crate::quadrature::{
    derive_sphere_constant, integrate_cartesian_into, integrate_radial_into, mc_integrate_into, CartesianBox,
    GaussLegendre, QuadratureSettings, SphereMeasureConstant,
};
use crate::tolerance::ToleranceProfile;

/// Step of the dilation-ray central difference in [`Verifier::verify_product_rule`].
pub const PRODUCT_RULE_STEP: f64 = 1e-5;

/// Largest tolerated distance, in standard errors, between Monte-Carlo and
/// tensor-grid estimates.
pub const MC_MAX_Z: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// One-dimensional integral of the radial form against `r^{Q-1}`, scaled by `S`.
    Radial,
    /// Tensor-product grid in the original coordinates.
    Cartesian,
    /// Evaluation at sample points, no integration.
    Pointwise,
    /// Discretised radial eigenproblem.
    Eigensolve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Identity,
    Inequality,
}

/// `A = ‖|x|^{-α} Rf‖²`, `B = ‖f / |x|^{α+1}‖²` and
/// `C = ‖|x|^{-α} Rf + μ f / |x|^{α+1}‖²` with `μ = (Q - 2 - 2α)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormTriple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub mu: f64,
    pub route: Route,
    /// `S` used to scale radial-route integrals; `None` when they are left
    /// unnormalised (radial route with `n > 3`) or the Cartesian route was used.
    pub sphere_constant: Option<f64>,
}

impl WeightedNormTriple {
    /// `A - μ² B`.
    pub fn lhs(&self) -> f64 {
        self.a - self.mu * self.mu * self.b
    }
}

/// Identifies the inputs of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fingerprint {
    pub group: String,
    pub norm: String,
    pub field: String,
    pub alpha: Option<f64>,
    pub settings: QuadratureSettings,
    /// SHA-256 over the other fields and the check name.
    pub digest: String,
}

impl Fingerprint {
    pub fn new(check: &str, qn: &QuasiNorm, field: &str, alpha: Option<f64>, settings: &QuadratureSettings) -> Self {
        Self::from_parts(check, &qn.spec().to_string(), &qn.family().to_string(), field, alpha, settings, "")
    }

    /// Fingerprint from explicit labels; `extra` enters the digest only.
    pub fn from_parts(
        check: &str,
        group: &str,
        norm: &str,
        field: &str,
        alpha: Option<f64>,
        settings: &QuadratureSettings,
        extra: &str,
    ) -> Self {
        let canonical = format!(
            "check={check};group={group};norm={norm};field={field};alpha={alpha:?};settings={settings:?};extra={extra}"
        );
        let digest = hex::encode(Sha256::digest(canonical.as_bytes()));
        Self {
            group: group.to_string(),
            norm: norm.to_string(),
            field: field.to_string(),
            alpha,
            settings: settings.clone(),
            digest,
        }
    }
}

/// Outcome of one identity or inequality check.
///
/// For identities `relative_residual = |lhs - rhs| / max(|lhs|, floor)`. For
/// inequalities `lhs <= rhs` is asserted, `ratio = lhs / rhs` and
/// `relative_residual = max(0, ratio - 1)`. In both cases
/// `pass ⇔ relative_residual <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityReport {
    pub check: String,
    pub kind: CheckKind,
    pub route: Route,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub relative_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub ratio: Option<f64>,
    /// `ratio < 1 - strict_margin`.
    pub strict: Option<bool>,
    pub flags: Vec<String>,
    pub details: BTreeMap<String, f64>,
    pub fingerprint: Fingerprint,
}

/// One evaluation point of a field: `|x|`, `f`, `Rf` and `‖∇f‖²` (the last
/// only where it is available).
#[derive(Debug, Clone, Copy)]
struct Sample {
    r: f64,
    ln_r: f64,
    f: Complex64,
    rf: Complex64,
    grad_sq: f64,
}

/// Runs checks for one quasi-norm with fixed quadrature settings and
/// tolerances. The sphere constant is derived on first use and cached.
#[derive(Debug)]
pub struct Verifier {
    qn: QuasiNorm,
    settings: QuadratureSettings,
    tolerances: ToleranceProfile,
    sphere: OnceLock<Result<Option<SphereMeasureConstant>>>,
}

impl Verifier {
    pub fn new(qn: QuasiNorm, settings: QuadratureSettings, tolerances: ToleranceProfile) -> Result<Self> {
        settings.validate()?;
        Ok(Self { qn, settings, tolerances, sphere: OnceLock::new() })
    }

    pub fn quasi_norm(&self) -> &QuasiNorm {
        &self.qn
    }

    pub fn spec(&self) -> &GroupSpec {
        self.qn.spec()
    }

    pub fn settings(&self) -> &QuadratureSettings {
        &self.settings
    }

    pub fn tolerances(&self) -> &ToleranceProfile {
        &self.tolerances
    }

    pub fn homogeneous_dimension(&self) -> f64 {
        self.qn.spec().homogeneous_dimension()
    }

    /// `S` for this quasi-norm, or `None` for `n > 3` where no tensor grid
    /// is available to derive it.
    pub fn sphere_constant(&self) -> Result<Option<&SphereMeasureConstant>> {
        let cached = self.sphere.get_or_init(|| {
            if self.qn.dim() > 3 {
                return Ok(None);
            }
            derive_sphere_constant(&self.qn, &self.settings, self.tolerances.cartesian).map(Some)
        });
        match cached {
            Ok(s) => Ok(s.as_ref()),
            Err(e) => Err(e.clone()),
        }
    }

    /// Radial when the field declares a radial form in this quasi-norm.
    pub fn route(&self, f: &ScalarField) -> Route {
        if f.radial_form_in(&self.qn).is_some() {
            Route::Radial
        } else {
            Route::Cartesian
        }
    }

    fn require_q(&self, min: f64, requirement: &'static str) -> Result<()> {
        let q = self.homogeneous_dimension();
        if q < min {
            return Err(Error::HypothesisViolation { requirement, q });
        }
        Ok(())
    }

    fn check_dim(&self, f: &ScalarField) -> Result<()> {
        if f.dim() != self.qn.dim() {
            return Err(Error::DimensionMismatch { expected: self.qn.dim(), got: f.dim() });
        }
        Ok(())
    }

    fn fingerprint(&self, check: &str, f: &ScalarField, alpha: Option<f64>) -> Fingerprint {
        Fingerprint::new(check, &self.qn, f.label(), alpha, &self.settings)
    }

    /// `∫_G body(sample) dx` for `m` quantities by the field's route.
    fn integrate_samples(
        &self,
        f: &ScalarField,
        m: usize,
        body: impl Fn(&Sample, &mut [f64]) + Sync,
    ) -> Result<(Vec<f64>, Route, Option<f64>)> {
        self.check_dim(f)?;
        match f.radial_form_in(&self.qn) {
            Some(form) => {
                let (values, s) = self.integrate_radial_samples(f, form.as_ref(), m, body)?;
                Ok((values, Route::Radial, s))
            }
            None => Ok((self.integrate_cartesian_samples(f, m, body)?, Route::Cartesian, None)),
        }
    }

    fn integrate_radial_samples(
        &self,
        f: &ScalarField,
        form: &dyn RadialForm,
        m: usize,
        body: impl Fn(&Sample, &mut [f64]),
    ) -> Result<(Vec<f64>, Option<f64>)> {
        let support = f.support().ok_or_else(|| Error::NoSupport(f.label().to_string()))?;
        let q = self.homogeneous_dimension();
        // |∇|x|| = 1 only for the Euclidean norm.
        let euclidean = self.is_euclidean();
        let mut values = integrate_radial_into(
            |r, out| {
                let (g, dg) = form.eval(r);
                let ln_r = r.ln();
                let sample =
                    Sample { r, ln_r, f: g, rf: dg, grad_sq: if euclidean { dg.norm_sqr() } else { f64::NAN } };
                body(&sample, out);
                let w = ((q - 1.0) * ln_r).exp();
                out.iter_mut().for_each(|v| *v *= w);
            },
            m,
            support.inner,
            support.outer,
            &self.settings,
        )?;
        let s = self.sphere_constant()?.map(|c| c.value);
        if let Some(s) = s {
            values.iter_mut().for_each(|v| *v *= s);
        }
        Ok((values, s))
    }

    fn integrate_cartesian_samples(
        &self,
        f: &ScalarField,
        m: usize,
        body: impl Fn(&Sample, &mut [f64]) + Sync,
    ) -> Result<Vec<f64>> {
        let support = f.support().ok_or_else(|| Error::NoSupport(f.label().to_string()))?;
        let bbox = CartesianBox::covering(support);
        let spec = self.qn.spec();
        integrate_cartesian_into(
            |x, out| {
                if let Some(sample) = self.sample_at(f, support, spec, x) {
                    body(&sample, out);
                }
            },
            m,
            &bbox,
            spec.nu(),
            &self.settings,
        )
    }

    /// Evaluates a sample at `x`, or `None` outside the support.
    #[inline]
    fn sample_at(
        &self,
        f: &ScalarField,
        support: &crate::fields::Support,
        spec: &GroupSpec,
        x: &[f64],
    ) -> Option<Sample> {
        if !support.contains(x) {
            return None;
        }
        let r = self.qn.eval(x);
        if r == 0.0 {
            return None;
        }
        let mut grad = [Complex64::new(0.0, 0.0); 8];
        let mut heap;
        let grad: &mut [Complex64] = if x.len() <= 8 {
            &mut grad[..x.len()]
        } else {
            heap = vec![Complex64::new(0.0, 0.0); x.len()];
            &mut heap
        };
        let value = f.eval(x, grad);
        let rf = euler_from_gradient(spec, x, grad) / r;
        let grad_sq = grad.iter().map(|g| g.norm_sqr()).sum();
        Some(Sample { r, ln_r: r.ln(), f: value, rf, grad_sq })
    }

    /// The Euclidean norm on an isotropic group (p-sum with `p = 2` included).
    pub fn is_euclidean(&self) -> bool {
        self.qn.spec().is_isotropic()
            && match self.qn.family() {
                NormFamily::Euclidean => true,
                NormFamily::PSum { p } => p == 2.0,
                _ => false,
            }
    }

    // -----------------------------------------------------------------------
    // Weighted norm triple and remainder identity

    /// `(A, B, C)` for one `α`.
    pub fn weighted_norm_triple(&self, f: &ScalarField, alpha: f64) -> Result<WeightedNormTriple> {
        Ok(self.weighted_norm_triples(f, &[alpha])?.remove(0))
    }

    /// `(A, B, C)` for several `α` from one pass over the quadrature nodes.
    pub fn weighted_norm_triples(&self, f: &ScalarField, alphas: &[f64]) -> Result<Vec<WeightedNormTriple>> {
        self.require_q(3.0, "Q >= 3")?;
        if alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidSettings(format!("alpha values must be finite, got {alphas:?}")));
        }
        let q = self.homogeneous_dimension();
        let mus: Vec<f64> = alphas.iter().map(|a| (q - 2.0 - 2.0 * a) / 2.0).collect();
        let (values, route, s) = self.integrate_samples(f, 3 * alphas.len(), |p, out| {
            let f2 = p.f.norm_sqr();
            let rf2 = p.rf.norm_sqr();
            if f2 == 0.0 && rf2 == 0.0 {
                return;
            }
            let f_over_r = p.f / p.r;
            for (j, (alpha, mu)) in alphas.iter().zip(&mus).enumerate() {
                let w = (-2.0 * alpha * p.ln_r).exp();
                out[3 * j] = rf2 * w;
                out[3 * j + 1] = f2 * w / (p.r * p.r);
                out[3 * j + 2] = (p.rf + f_over_r * *mu).norm_sqr() * w;
            }
        })?;
        Ok(alphas
            .iter()
            .zip(&mus)
            .enumerate()
            .map(|(j, (alpha, mu))| WeightedNormTriple {
                a: values[3 * j],
                b: values[3 * j + 1],
                c: values[3 * j + 2],
                alpha: *alpha,
                mu: *mu,
                route,
                sphere_constant: s,
            })
            .collect())
    }

    fn route_tolerance(&self, route: Route) -> f64 {
        match route {
            Route::Radial => self.tolerances.radial,
            _ => self.tolerances.cartesian,
        }
    }

    fn route_flags(route: Route, s: Option<f64>) -> Vec<String> {
        let mut flags = Vec::new();
        if route == Route::Radial && s.is_none() {
            flags.push("sphere_constant_unnormalized".to_string());
        }
        flags
    }

    #[allow(clippy::too_many_arguments)]
    fn identity_report(
        &self,
        check: &str,
        f: &ScalarField,
        alpha: Option<f64>,
        route: Route,
        lhs: f64,
        rhs: f64,
        flags: Vec<String>,
        details: BTreeMap<String, f64>,
    ) -> IdentityReport {
        let residual = (lhs - rhs).abs();
        let relative_residual = relative(residual, lhs, self.tolerances.relative_floor);
        let tolerance = self.route_tolerance(route);
        IdentityReport {
            check: check.to_string(),
            kind: CheckKind::Identity,
            route,
            lhs,
            rhs,
            residual,
            relative_residual,
            tolerance,
            pass: relative_residual <= tolerance,
            ratio: None,
            strict: None,
            flags,
            details,
            fingerprint: self.fingerprint(check, f, alpha),
        }
    }

    /// Report for `A - μ² B = C` from a precomputed triple.
    pub fn remainder_report(&self, f: &ScalarField, t: &WeightedNormTriple) -> IdentityReport {
        let mut details = triple_details(t);
        details.insert("mu".into(), t.mu);
        self.identity_report(
            "remainder_identity",
            f,
            Some(t.alpha),
            t.route,
            t.lhs(),
            t.c,
            Self::route_flags(t.route, t.sphere_constant),
            details,
        )
    }

    /// `A - ((Q-2)/2 - α)² B = C`.
    pub fn verify_remainder_identity(&self, f: &ScalarField, alpha: f64) -> Result<IdentityReport> {
        let t = self.weighted_norm_triple(f, alpha)?;
        Ok(self.remainder_report(f, &t))
    }

    /// `‖Rf‖² - ((Q-2)/2)² ‖f/|x|‖² = ‖Rf + (Q-2)/(2|x|) f‖²`, evaluated in
    /// the logarithmic variable `t = ln |x|` (radial route) or from the Euler
    /// operator (Cartesian route), sharing no integrand code with
    /// [`Self::weighted_norm_triples`].
    pub fn verify_alpha_zero_identity(&self, f: &ScalarField) -> Result<IdentityReport> {
        self.require_q(3.0, "Q >= 3")?;
        self.check_dim(f)?;
        let q = self.homogeneous_dimension();
        let mu = (q - 2.0) / 2.0;
        let (sums, route, s) = match f.radial_form_in(&self.qn) {
            Some(form) => {
                let support = f.support().ok_or_else(|| Error::NoSupport(f.label().to_string()))?;
                let sums = log_variable_alpha_zero(form.as_ref(), support.inner, support.outer, q, &self.settings)?;
                let s = self.sphere_constant()?.map(|c| c.value);
                (sums.map(|v| v * s.unwrap_or(1.0)), Route::Radial, s)
            }
            None => {
                let support = f.support().ok_or_else(|| Error::NoSupport(f.label().to_string()))?;
                let spec = self.qn.spec();
                let v = integrate_cartesian_into(
                    |x, out| {
                        if !support.contains(x) {
                            return;
                        }
                        let mut grad = [Complex64::new(0.0, 0.0); 3];
                        let grad = &mut grad[..x.len()];
                        let value = f.eval(x, grad);
                        let e = euler_from_gradient(spec, x, grad);
                        let r2 = self.qn.eval(x).powi(2);
                        out[0] = e.norm_sqr() / r2;
                        out[1] = value.norm_sqr() / r2;
                        out[2] = (e + value * mu).norm_sqr() / r2;
                    },
                    3,
                    &CartesianBox::covering(support),
                    spec.nu(),
                    &self.settings,
                )?;
                ([v[0], v[1], v[2]], Route::Cartesian, None)
            }
        };
        let [a, b, c] = sums;
        let details = BTreeMap::from([("A".into(), a), ("B".into(), b), ("C".into(), c), ("mu".into(), mu)]);
        Ok(self.identity_report(
            "alpha_zero_identity",
            f,
            Some(0.0),
            route,
            a - mu * mu * b,
            c,
            Self::route_flags(route, s),
            details,
        ))
    }

    /// `‖Ef‖² = (Q/2)² ‖f‖² + ‖Ef + (Q/2) f‖²`.
    pub fn verify_euler_relation(&self, f: &ScalarField) -> Result<IdentityReport> {
        self.require_q(3.0, "Q >= 3")?;
        let half_q = self.homogeneous_dimension() / 2.0;
        let (v, route, s) = self.integrate_samples(f, 3, |p, out| {
            let ef = p.rf * p.r;
            out[0] = ef.norm_sqr();
            out[1] = p.f.norm_sqr();
            out[2] = (ef + p.f * half_q).norm_sqr();
        })?;
        let details = BTreeMap::from([
            ("euler_norm_sq".into(), v[0]),
            ("field_norm_sq".into(), v[1]),
            ("remainder".into(), v[2]),
        ]);
        Ok(self.identity_report(
            "euler_relation",
            f,
            Some(-1.0),
            route,
            v[0],
            half_q * half_q * v[1] + v[2],
            Self::route_flags(route, s),
            details,
        ))
    }

    /// `∫ |f|²/|x|² = -2/(Q-2) Re ∫ (f/|x|) conj(Rf)`.
    pub fn verify_ibp_identity(&self, f: &ScalarField) -> Result<IdentityReport> {
        self.require_q(3.0, "Q >= 3")?;
        let q = self.homogeneous_dimension();
        let (v, route, s) = self.integrate_samples(f, 2, |p, out| {
            out[0] = p.f.norm_sqr() / (p.r * p.r);
            out[1] = (p.f * p.rf.conj()).re / p.r;
        })?;
        let rhs = -2.0 / (q - 2.0) * v[1];
        let details = BTreeMap::from([("weighted_field_norm_sq".into(), v[0]), ("cross_term".into(), v[1])]);
        Ok(self.identity_report("ibp_identity", f, None, route, v[0], rhs, Self::route_flags(route, s), details))
    }

    // -----------------------------------------------------------------------
    // Inequalities

    #[allow(clippy::too_many_arguments)]
    fn inequality_report(
        &self,
        check: &str,
        f: &ScalarField,
        alpha: Option<f64>,
        route: Route,
        lhs: f64,
        rhs: f64,
        mut flags: Vec<String>,
        details: BTreeMap<String, f64>,
    ) -> IdentityReport {
        let ratio = if lhs == 0.0 {
            if rhs == 0.0 {
                flags.push("vacuous".into());
            }
            0.0
        } else {
            lhs / rhs
        };
        let relative_residual = (ratio - 1.0).max(0.0);
        let tolerance = self.tolerances.inequality;
        IdentityReport {
            check: check.to_string(),
            kind: CheckKind::Inequality,
            route,
            lhs,
            rhs,
            residual: (lhs - rhs).max(0.0),
            relative_residual,
            tolerance,
            pass: relative_residual <= tolerance,
            ratio: Some(ratio),
            strict: Some(ratio < 1.0 - self.tolerances.strict_margin),
            flags,
            details,
            fingerprint: self.fingerprint(check, f, alpha),
        }
    }

    /// Report for `|μ| ‖f/|x|^{α+1}‖ <= ‖|x|^{-α} Rf‖` from a precomputed triple.
    pub fn ckn_report(&self, f: &ScalarField, t: &WeightedNormTriple) -> Result<IdentityReport> {
        self.ckn_report_named("ckn_inequality", f, t)
    }

    fn ckn_report_named(&self, check: &str, f: &ScalarField, t: &WeightedNormTriple) -> Result<IdentityReport> {
        if t.a == 0.0 && t.b > 0.0 {
            return Err(Error::InconsistentQuadrature(format!(
                "A = 0 with B = {} > 0 for field `{}` at alpha = {}",
                t.b,
                f.label(),
                t.alpha
            )));
        }
        let mut flags = Self::route_flags(t.route, t.sphere_constant);
        if t.mu == 0.0 {
            flags.push("degenerate_constant".into());
        }
        if t.a == 0.0 && t.b == 0.0 {
            flags.push("zero_field".into());
        }
        let mut details = triple_details(t);
        details.insert("constant".into(), t.mu.abs());
        Ok(self.inequality_report(
            check,
            f,
            Some(t.alpha),
            t.route,
            t.mu.abs() * t.b.sqrt(),
            t.a.sqrt(),
            flags,
            details,
        ))
    }

    /// `(|Q-2-2α|/2) ‖f/|x|^{α+1}‖ <= ‖|x|^{-α} Rf‖`.
    pub fn verify_ckn_inequality(&self, f: &ScalarField, alpha: f64) -> Result<IdentityReport> {
        let t = self.weighted_norm_triple(f, alpha)?;
        self.ckn_report(f, &t)
    }

    /// `‖f/|x|²‖ <= (2/(Q-4)) ‖Rf/|x|‖`, only for `Q >= 5`.
    pub fn verify_alpha_one_inequality(&self, f: &ScalarField) -> Result<IdentityReport> {
        self.require_q(5.0, "Q >= 5")?;
        let t = self.weighted_norm_triple(f, 1.0)?;
        self.ckn_report_named("alpha_one_inequality", f, &t)
    }

    /// `‖f‖² <= (2/(Q-2)) ‖Rf‖ ‖|x| f‖`.
    pub fn verify_uncertainty(&self, f: &ScalarField) -> Result<IdentityReport> {
        self.require_q(3.0, "Q >= 3")?;
        let q = self.homogeneous_dimension();
        let (v, route, s) = self.integrate_samples(f, 3, |p, out| {
            let f2 = p.f.norm_sqr();
            out[0] = f2;
            out[1] = p.rf.norm_sqr();
            out[2] = f2 * p.r * p.r;
        })?;
        if v[0] > 0.0 && v[1] == 0.0 {
            return Err(Error::InconsistentQuadrature(format!(
                "‖Rf‖ = 0 with ‖f‖² = {} for field `{}`",
                v[0],
                f.label()
            )));
        }
        let mut flags = Self::route_flags(route, s);
        if v[0] == 0.0 {
            flags.push("zero_field".into());
        }
        let details = BTreeMap::from([
            ("field_norm_sq".into(), v[0]),
            ("radial_derivative_norm_sq".into(), v[1]),
            ("position_weighted_norm_sq".into(), v[2]),
        ]);
        Ok(self.inequality_report(
            "uncertainty",
            f,
            None,
            route,
            (q - 2.0) / 2.0 * v[0],
            (v[1] * v[2]).sqrt(),
            flags,
            details,
        ))
    }

    // -----------------------------------------------------------------------
    // Pointwise checks

    /// Points in the support annulus of `f`, off the coordinate hyperplanes.
    pub fn sample_points(&self, f: &ScalarField, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let support = f.support().ok_or_else(|| Error::NoSupport(f.label().to_string()))?;
        Ok(support.norm.sample_annulus(support.inner, support.outer, count, seed, self.tolerances.exclusion_band))
    }

    /// `|x|^{-α} Rf - R(f/|x|^α) = α f/|x|^{α+1}` at each sample, with the
    /// middle term taken by a central difference along the dilation ray.
    pub fn verify_product_rule(&self, f: &ScalarField, alpha: f64, samples: &[Vec<f64>]) -> Result<IdentityReport> {
        self.check_dim(f)?;
        let spec = self.qn.spec();
        let h = PRODUCT_RULE_STEP;
        let composite = |y: &[f64]| f.value(y) * self.qn.eval(y).powf(-alpha);
        let mut worst = (0.0f64, 0.0f64, 0.0f64);
        let mut scale = 0.0f64;
        let mut yp = vec![0.0; f.dim()];
        let mut ym = vec![0.0; f.dim()];
        for x in samples {
            self.qn.spec().check_point(x)?;
            let r = self.qn.eval(x);
            if r == 0.0 {
                return Err(Error::AtOrigin);
            }
            let mut grad = vec![Complex64::new(0.0, 0.0); x.len()];
            let value = f.eval(x, &mut grad);
            let rf = euler_from_gradient(spec, x, &grad) / r;
            spec.dilate_into(1.0 + h, x, &mut yp);
            spec.dilate_into(1.0 - h, x, &mut ym);
            let r_composite = (composite(&yp) - composite(&ym)) / (2.0 * h * r);
            let weighted = rf * r.powf(-alpha);
            let term = value * (alpha * r.powf(-alpha - 1.0));
            let lhs = weighted - r_composite;
            let residual = (lhs - term).norm();
            scale = scale.max(weighted.norm() + term.norm());
            if residual >= worst.0 {
                worst = (residual, lhs.norm(), term.norm());
            }
        }
        let (residual, lhs, rhs) = worst;
        let relative_residual = relative(residual, scale, self.tolerances.relative_floor.max(1e-300));
        let tolerance = self.tolerances.product_rule;
        let details =
            BTreeMap::from([("samples".into(), samples.len() as f64), ("step".into(), h), ("scale".into(), scale)]);
        Ok(IdentityReport {
            check: "product_rule".into(),
            kind: CheckKind::Identity,
            route: Route::Pointwise,
            lhs,
            rhs,
            residual,
            relative_residual,
            tolerance,
            pass: relative_residual <= tolerance,
            ratio: None,
            strict: None,
            flags: Vec::new(),
            details,
            fingerprint: self.fingerprint("product_rule", f, Some(alpha)),
        })
    }

    /// `|Rf(x)| <= ‖∇f(x)‖` at each sample, and the integrated consequence
    /// `‖|x|^{-α} Rf‖ <= ‖|x|^{-α} ∇f‖`. Euclidean norm on an isotropic
    /// group only.
    pub fn verify_schwarz_step(&self, f: &ScalarField, alpha: f64, samples: &[Vec<f64>]) -> Result<IdentityReport> {
        if !self.is_euclidean() {
            return Err(Error::IncompatibleNorm {
                family: self.qn.family().to_string(),
                nu: self.qn.spec().nu().to_vec(),
                reason: "the Schwarz step is stated for the Euclidean norm on an isotropic group",
            });
        }
        self.check_dim(f)?;
        let spec = self.qn.spec();
        let slack = self.tolerances.schwarz;
        let mut max_violation = 0.0f64;
        let mut max_ratio = 0.0f64;
        let mut max_gap = 0.0f64;
        let mut worst = (0.0, 0.0);
        for x in samples {
            spec.check_point(x)?;
            let r = self.qn.eval(x);
            if r == 0.0 {
                return Err(Error::AtOrigin);
            }
            let mut grad = vec![Complex64::new(0.0, 0.0); x.len()];
            f.eval(x, &mut grad);
            let rf = (euler_from_gradient(spec, x, &grad) / r).norm();
            let gn = grad.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
            let violation = rf - gn;
            if violation >= max_violation {
                max_violation = violation;
                worst = (rf, gn);
            }
            if gn > 0.0 {
                max_ratio = max_ratio.max(rf / gn);
                max_gap = max_gap.max((gn - rf) / gn);
            }
        }
        let (v, route, s) = self.integrate_samples(f, 2, |p, out| {
            let w = (-2.0 * alpha * p.ln_r).exp();
            out[0] = p.rf.norm_sqr() * w;
            out[1] = p.grad_sq * w;
        })?;
        let integrated_ratio = if v[1] > 0.0 { (v[0] / v[1]).sqrt() } else { 0.0 };
        let integrated_violation = (integrated_ratio - 1.0).max(0.0);
        let mut flags = Self::route_flags(route, s);
        let nonzero = max_ratio > 0.0;
        if nonzero && max_gap <= slack {
            flags.push("equality".into());
        } else if nonzero {
            flags.push("strict_somewhere".into());
        } else {
            flags.push("zero_field".into());
        }
        let pointwise_pass = max_violation <= slack;
        let integrated_pass = integrated_violation <= self.tolerance_for(route);
        let details = BTreeMap::from([
            ("samples".into(), samples.len() as f64),
            ("max_pointwise_ratio".into(), max_ratio),
            ("max_relative_gap".into(), max_gap),
            ("integrated_radial_norm_sq".into(), v[0]),
            ("integrated_gradient_norm_sq".into(), v[1]),
            ("integrated_ratio".into(), integrated_ratio),
        ]);
        Ok(IdentityReport {
            check: "schwarz_step".into(),
            kind: CheckKind::Inequality,
            route: Route::Pointwise,
            lhs: worst.0,
            rhs: worst.1,
            residual: max_violation.max(0.0),
            relative_residual: max_violation.max(0.0),
            tolerance: slack,
            pass: pointwise_pass && integrated_pass,
            ratio: Some(max_ratio),
            strict: Some(max_ratio < 1.0 - self.tolerances.strict_margin),
            flags,
            details,
            fingerprint: self.fingerprint("schwarz_step", f, Some(alpha)),
        })
    }

    fn tolerance_for(&self, route: Route) -> f64 {
        match route {
            Route::Radial => self.tolerances.inequality,
            _ => self.tolerances.cartesian,
        }
    }

    // -----------------------------------------------------------------------
    // Quadrature consistency

    /// Norm quantities checked by [`Self::verify_polar_consistency`] and
    /// [`Self::verify_mc_agreement`].
    pub const NORM_QUANTITIES: [&'static str; 4] =
        ["field_norm_sq", "radial_derivative_norm_sq", "position_weighted_norm_sq", "inverse_weighted_norm_sq"];

    fn norm_quantities(p: &Sample, out: &mut [f64]) {
        let f2 = p.f.norm_sqr();
        out[0] = f2;
        out[1] = p.rf.norm_sqr();
        out[2] = f2 * p.r * p.r;
        out[3] = f2 / (p.r * p.r);
    }

    /// For a radial field, `S ∫ (...) r^{Q-1} dr` against the Cartesian grid
    /// for each norm quantity.
    pub fn verify_polar_consistency(&self, f: &ScalarField) -> Result<IdentityReport> {
        self.check_dim(f)?;
        let form = f.radial_form_in(&self.qn).ok_or_else(|| {
            Error::InvalidField(format!("polar consistency needs a field radial in {}", self.qn.family()))
        })?;
        if self.qn.dim() > 3 {
            return Err(Error::DimensionTooLarge(self.qn.dim()));
        }
        let m = Self::NORM_QUANTITIES.len();
        let (radial, s) = self.integrate_radial_samples(f, form.as_ref(), m, Self::norm_quantities)?;
        let cart = self.integrate_cartesian_samples(f, m, Self::norm_quantities)?;
        let mut details = BTreeMap::new();
        let mut worst = (0usize, 0.0f64);
        for (k, name) in Self::NORM_QUANTITIES.iter().enumerate() {
            details.insert(format!("radial_{name}"), radial[k]);
            details.insert(format!("cartesian_{name}"), cart[k]);
            let rel = relative((radial[k] - cart[k]).abs(), radial[k], self.tolerances.relative_floor);
            if rel >= worst.1 {
                worst = (k, rel);
            }
        }
        if let Some(s) = s {
            details.insert("sphere_constant".into(), s);
        }
        let k = worst.0;
        let tolerance = self.tolerances.cartesian;
        Ok(IdentityReport {
            check: "polar_consistency".into(),
            kind: CheckKind::Identity,
            route: Route::Cartesian,
            lhs: radial[k],
            rhs: cart[k],
            residual: (radial[k] - cart[k]).abs(),
            relative_residual: worst.1,
            tolerance,
            pass: worst.1 <= tolerance,
            ratio: None,
            strict: None,
            flags: vec![format!("worst={}", Self::NORM_QUANTITIES[k])],
            details,
            fingerprint: self.fingerprint("polar_consistency", f, None),
        })
    }

    /// Monte-Carlo estimates of the norm quantities against the tensor grid
    /// on the same box; passes when every estimate is within
    /// [`MC_MAX_Z`] standard errors.
    pub fn verify_mc_agreement(&self, f: &ScalarField) -> Result<IdentityReport> {
        self.check_dim(f)?;
        let support = f.support().ok_or_else(|| Error::NoSupport(f.label().to_string()))?;
        let bbox = CartesianBox::covering(support);
        let spec = self.qn.spec();
        let m = Self::NORM_QUANTITIES.len();
        let body = |x: &[f64], out: &mut [f64]| {
            if let Some(p) = self.sample_at(f, support, spec, x) {
                Self::norm_quantities(&p, out);
            }
        };
        let grid = integrate_cartesian_into(body, m, &bbox, spec.nu(), &self.settings)?;
        let mc = mc_integrate_into(body, m, &bbox, &self.settings)?;
        let mut details = BTreeMap::new();
        let mut worst = (0usize, 0.0f64);
        for (k, name) in Self::NORM_QUANTITIES.iter().enumerate() {
            let z = mc[k].z_score(grid[k]);
            details.insert(format!("grid_{name}"), grid[k]);
            details.insert(format!("mc_{name}"), mc[k].value);
            details.insert(format!("mc_se_{name}"), mc[k].standard_error);
            details.insert(format!("z_{name}"), z);
            if z >= worst.1 {
                worst = (k, z);
            }
        }
        details.insert("mc_samples".into(), self.settings.mc_samples as f64);
        let k = worst.0;
        Ok(IdentityReport {
            check: "mc_agreement".into(),
            kind: CheckKind::Identity,
            route: Route::Cartesian,
            lhs: mc[k].value,
            rhs: grid[k],
            residual: (mc[k].value - grid[k]).abs(),
            relative_residual: worst.1,
            tolerance: MC_MAX_Z,
            pass: worst.1 <= MC_MAX_Z,
            ratio: None,
            strict: None,
            flags: vec![format!("worst={}", Self::NORM_QUANTITIES[k]), "relative_residual_in_standard_errors".into()],
            details,
            fingerprint: self.fingerprint("mc_agreement", f, None),
        })
    }
}

fn triple_details(t: &WeightedNormTriple) -> BTreeMap<String, f64> {
    let mut d = BTreeMap::from([("A".into(), t.a), ("B".into(), t.b), ("C".into(), t.c)]);
    if let Some(s) = t.sphere_constant {
        d.insert("sphere_constant".into(), s);
    }
    d
}

/// `(∫|G'|², ∫|G|², ∫|G' + μG|²)` against `e^{(Q-2)t} dt` with
/// `G(t) = g(e^t)`, `G'(t) = e^t g'(e^t)` and `μ = (Q-2)/2`.
fn log_variable_alpha_zero(
    form: &dyn RadialForm,
    a: f64,
    b: f64,
    q: f64,
    settings: &QuadratureSettings,
) -> Result<[f64; 3]> {
    let rule = GaussLegendre::new(settings.nodes_per_panel)?;
    let (t0, t1) = (a.ln(), b.ln());
    let mu = (q - 2.0) / 2.0;
    let width = (t1 - t0) / settings.panels as f64;
    let mut acc = [KahanSum::default(); 3];
    for p in 0..settings.panels {
        let lo = t0 + width * p as f64;
        let hi = if p + 1 == settings.panels { t1 } else { lo + width };
        let panel = [0, 1, 2].map(|k| {
            rule.integrate(lo, hi, |t| {
                let r = t.exp();
                let (g, dg) = form.eval(r);
                let dg_t = dg * r;
                let w = ((q - 2.0) * t).exp();
                w * match k {
                    0 => dg_t.norm_sqr(),
                    1 => g.norm_sqr(),
                    _ => (dg_t + g * mu).norm_sqr(),
                }
            })
        });
        for k in 0..3 {
            acc[k].add(panel[k]);
        }
    }
    Ok(acc.map(|s| s.total()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{
        angular_product, complex_phase_wrap, dilated, extremizer_with_plateau, radial_bump, zero, Phase,
    };

    fn verifier(qn: QuasiNorm) -> Verifier {
        Verifier::new(qn, QuadratureSettings::default(), ToleranceProfile::default()).unwrap()
    }

    fn coarse(qn: QuasiNorm) -> Verifier {
        let s = QuadratureSettings::default().with_cartesian_resolution(64).with_mc_samples(20_000);
        Verifier::new(qn, s, ToleranceProfile::default()).unwrap()
    }

    fn euclid3() -> QuasiNorm {
        QuasiNorm::euclidean(3).unwrap()
    }

    #[test]
    fn zero_field_gives_zero_triple_and_vacuous_inequalities() {
        let qn = QuasiNorm::koranyi();
        let v = verifier(qn.clone());
        let f = zero(&qn, 1.0, 3.0).unwrap();
        let t = v.weighted_norm_triple(&f, 0.3).unwrap();
        assert_eq!((t.a, t.b, t.c), (0.0, 0.0, 0.0));
        let r = v.remainder_report(&f, &t);
        assert!(r.pass);
        assert_eq!(r.relative_residual, 0.0);
        let c = v.ckn_report(&f, &t).unwrap();
        assert!(c.pass && c.flags.contains(&"vacuous".to_string()) && c.flags.contains(&"zero_field".to_string()));
        let u = v.verify_uncertainty(&f).unwrap();
        assert!(u.pass && u.flags.contains(&"zero_field".to_string()));
        assert!(v.verify_ibp_identity(&f).unwrap().pass);
        assert!(v.verify_alpha_zero_identity(&f).unwrap().pass);
    }

    #[test]
    fn heisenberg_bump_remainder_identity_radial_route() {
        let qn = QuasiNorm::koranyi();
        let v = verifier(qn.clone());
        let f = radial_bump(&qn, 2.0, 1.0).unwrap();
        let r = v.verify_remainder_identity(&f, 0.0).unwrap();
        assert_eq!(r.route, Route::Radial);
        assert!(r.pass && r.relative_residual <= 1e-8, "{r:?}");
        assert_eq!(r.tolerance, 1e-8);
        assert!(r.details["sphere_constant"] > 0.0);
    }

    #[test]
    fn phase_wrap_keeps_field_norm() {
        let qn = QuasiNorm::koranyi();
        let v = verifier(qn.clone());
        let f = radial_bump(&qn, 2.0, 1.0).unwrap();
        let w = complex_phase_wrap(&f, Phase::Radial { norm: qn.clone(), scale: 1.7 }).unwrap();
        let tf = v.weighted_norm_triple(&f, 0.4).unwrap();
        let tw = v.weighted_norm_triple(&w, 0.4).unwrap();
        assert!((tf.b - tw.b).abs() <= 1e-13 * tf.b);
        assert!(tw.a > tf.a);
        assert!(v.remainder_report(&w, &tw).pass);
    }

    #[test]
    fn anisotropic_alpha_minus_one_matches_euler_relation() {
        let qn = QuasiNorm::p_sum(GroupSpec::new(vec![1.0, 2.0, 3.0]).unwrap(), 4.0).unwrap();
        let v = verifier(qn.clone());
        let f = radial_bump(&qn, 2.0, 1.0).unwrap();
        let t = v.weighted_norm_triple(&f, -1.0).unwrap();
        let rem = v.remainder_report(&f, &t);
        assert!(rem.pass, "{rem:?}");
        let e = v.verify_euler_relation(&f).unwrap();
        assert!(e.pass, "{e:?}");
        assert!((e.details["euler_norm_sq"] - t.a).abs() <= 1e-10 * t.a);
        assert!((e.details["field_norm_sq"] - t.b).abs() <= 1e-10 * t.b);
        assert!((e.details["remainder"] - t.c).abs() <= 1e-10 * t.c);
    }

    #[test]
    fn alpha_zero_path_agrees_with_general_path() {
        for qn in [QuasiNorm::koranyi(), euclid3()] {
            let v = coarse(qn.clone());
            for f in [radial_bump(&qn, 2.0, 1.0).unwrap(), angular_product(&qn, 2.0, 1.0, 0).unwrap()] {
                let general = v.verify_remainder_identity(&f, 0.0).unwrap();
                let special = v.verify_alpha_zero_identity(&f).unwrap();
                assert!(special.pass, "{special:?}");
                assert_eq!(general.route, special.route);
                for key in ["A", "B", "C"] {
                    let (g, s) = (general.details[key], special.details[key]);
                    assert!((g - s).abs() <= 1e-10 * g.abs(), "{key}: {g} vs {s}");
                }
            }
        }
    }

    #[test]
    fn ibp_identity_real_and_wrapped() {
        let qn = QuasiNorm::koranyi();
        let v = verifier(qn.clone());
        let f = radial_bump(&qn, 2.0, 1.0).unwrap();
        let w = complex_phase_wrap(&f, Phase::Radial { norm: qn.clone(), scale: 1.0 }).unwrap();
        for g in [&f, &w] {
            let r = v.verify_ibp_identity(g).unwrap();
            assert!(r.pass && r.relative_residual <= 1e-8, "{r:?}");
        }
    }

    #[test]
    fn low_homogeneous_dimension_is_rejected() {
        let qn = QuasiNorm::euclidean(2).unwrap();
        let v = verifier(qn.clone());
        let f = radial_bump(&qn, 2.0, 1.0).unwrap();
        let err = v.verify_remainder_identity(&f, 0.0).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolation { q, .. } if q == 2.0));
        assert!(v.verify_ckn_inequality(&f, 0.0).is_err());
        assert!(v.verify_uncertainty(&f).is_err());
        assert!(v.verify_ibp_identity(&f).is_err());
    }

    #[test]
    fn alpha_one_guard() {
        let qn = QuasiNorm::koranyi();
        let v = verifier(qn.clone());
        let f = radial_bump(&qn, 2.0, 1.0).unwrap();
        assert!(matches!(
            v.verify_alpha_one_inequality(&f),
            Err(Error::HypothesisViolation { requirement: "Q >= 5", .. })
        ));

        let qn = QuasiNorm::p_sum(GroupSpec::new(vec![1.0, 2.0, 3.0]).unwrap(), 2.0).unwrap();
        let v = verifier(qn.clone());
        let f = radial_bump(&qn, 2.0, 1.0).unwrap();
        let r = v.verify_alpha_one_inequality(&f).unwrap();
        assert!(r.pass && r.strict == Some(true), "{r:?}");

        // n = 5 isotropic: constant (Q-4)/2 = 1/2, radial route left unnormalised.
        let qn = QuasiNorm::euclidean(5).unwrap();
        let v = verifier(qn.clone());
        let f = radial_bump(&qn, 2.0, 1.0).unwrap();
        let r = v.verify_alpha_one_inequality(&f).unwrap();
        assert_eq!(r.details["constant"], 0.5);
        assert!(r.pass && r.strict == Some(true));
        assert!(r.flags.contains(&"sphere_constant_unnormalized".to_string()));
    }

    #[test]
    fn degenerate_alpha_has_zero_constant() {
        let qn = QuasiNorm::koranyi();
        let v = verifier(qn.clone());
        let f = radial_bump(&qn, 2.0, 1.0).unwrap();
        let r = v.verify_ckn_inequality(&f, 1.0).unwrap();
        assert_eq!(r.ratio, Some(0.0));
        assert!(r.pass && r.flags.contains(&"degenerate_constant".to_string()));
    }

    #[test]
    fn ckn_and_uncertainty_strict_on_bumps() {
        for qn in [euclid3(), QuasiNorm::koranyi()] {
            let v = verifier(qn.clone());
            let f = radial_bump(&qn, 2.0, 1.0).unwrap();
            for alpha in [-1.0, 0.0, 0.5] {
                let r = v.verify_ckn_inequality(&f, alpha).unwrap();
                assert!(r.pass && r.strict == Some(true), "{r:?}");
            }
            let u = v.verify_uncertainty(&f).unwrap();
            assert!(u.pass && u.strict == Some(true), "{u:?}");
        }
    }

    #[test]
    fn ratio_increases_toward_one_along_extremizers() {
        let qn = QuasiNorm::koranyi();
        let v = verifier(qn.clone());
        let alpha = 0.0;
        let mu = (qn.spec().homogeneous_dimension() - 2.0 - 2.0 * alpha) / 2.0;
        let mut prev = 0.0;
        for plateau in [2.0, 4.0, 8.0, 16.0] {
            let f = extremizer_with_plateau(&qn, mu, plateau, 1.0).unwrap();
            let r = v.verify_ckn_inequality(&f, alpha).unwrap();
            let rho = r.ratio.unwrap();
            assert!(rho > prev && rho < 1.0, "plateau {plateau}: {rho}");
            assert!(v.verify_remainder_identity(&f, alpha).unwrap().pass);
            prev = rho;
        }
        assert!(prev > 0.9);
    }

    #[test]
    fn ratios_are_dilation_invariant() {
        let qn = QuasiNorm::p_sum(GroupSpec::new(vec![1.0, 2.0, 3.0]).unwrap(), 2.0).unwrap();
        let v = verifier(qn.clone());
        let f = radial_bump(&qn, 2.0, 1.0).unwrap();
        for alpha in [-0.3, 0.7] {
            let base = v.verify_ckn_inequality(&f, alpha).unwrap().ratio.unwrap();
            for lambda in [0.5, 2.0] {
                let g = dilated(&f, qn.spec(), lambda).unwrap();
                let t = v.weighted_norm_triple(&g, alpha).unwrap();
                assert_eq!(t.route, Route::Radial);
                let rho = v.ckn_report(&g, &t).unwrap().ratio.unwrap();
                assert!((rho - base).abs() <= 1e-10, "{rho} vs {base}");
                assert!(v.remainder_report(&g, &t).pass);
            }
        }
    }

    #[test]
    fn off_radial_field_cartesian_route() {
        let qn = QuasiNorm::koranyi();
        let v = coarse(qn.clone());
        let f = angular_product(&qn, 2.0, 1.0, 0).unwrap();
        let ts = v.weighted_norm_triples(&f, &[-1.0, 0.0, 0.7]).unwrap();
        for t in &ts {
            assert_eq!(t.route, Route::Cartesian);
            let r = v.remainder_report(&f, t);
            assert_eq!(r.tolerance, 1e-4);
            assert!(r.pass, "{r:?}");
            assert_eq!(v.ckn_report(&f, t).unwrap().strict, Some(true));
        }
        assert!(v.verify_ibp_identity(&f).unwrap().pass);
    }

    #[test]
    fn product_rule_pointwise() {
        let qn = QuasiNorm::koranyi();
        let v = verifier(qn.clone());
        let f = radial_bump(&qn, 2.0, 1.0).unwrap();
        let pts = v.sample_points(&f, 200, 7).unwrap();
        for alpha in [0.0, 1.0, -0.3] {
            let r = v.verify_product_rule(&f, alpha, &pts).unwrap();
            assert!(r.pass && r.relative_residual <= 1e-6, "{r:?}");
        }
        let off = angular_product(&qn, 2.0, 1.0, 1).unwrap();
        assert!(v.verify_product_rule(&off, 1.0, &pts).unwrap().pass);
        let ext = extremizer_with_plateau(&qn, 1.0, 4.0, 1.0).unwrap();
        let pts = v.sample_points(&ext, 200, 3).unwrap();
        assert!(v.verify_product_rule(&ext, 0.7, &pts).unwrap().pass);
    }

    #[test]
    fn schwarz_step() {
        let qn = euclid3();
        let v = coarse(qn.clone());
        let f = radial_bump(&qn, 2.0, 1.0).unwrap();
        let pts = v.sample_points(&f, 1000, 11).unwrap();
        let r = v.verify_schwarz_step(&f, 0.3, &pts).unwrap();
        assert!(r.pass && r.flags.contains(&"equality".to_string()), "{r:?}");
        let g = angular_product(&qn, 2.0, 1.0, 0).unwrap();
        let r = v.verify_schwarz_step(&g, 0.3, &pts).unwrap();
        assert!(r.pass && r.flags.contains(&"strict_somewhere".to_string()), "{r:?}");
        assert!(r.details["integrated_ratio"] < 1.0);
        let z = zero(&qn, 1.0, 3.0).unwrap();
        let r = v.verify_schwarz_step(&z, 0.0, &pts).unwrap();
        assert!(r.pass && r.flags.contains(&"zero_field".to_string()));

        let k = verifier(QuasiNorm::koranyi());
        let h = radial_bump(&QuasiNorm::koranyi(), 2.0, 1.0).unwrap();
        assert!(matches!(k.verify_schwarz_step(&h, 0.0, &pts), Err(Error::IncompatibleNorm { .. })));
    }

    #[test]
    fn quadrature_consistency_checks() {
        let qn = QuasiNorm::koranyi();
        let v = Verifier::new(
            qn.clone(),
            QuadratureSettings::default().with_mc_samples(20_000),
            ToleranceProfile::default(),
        )
        .unwrap();
        let f = radial_bump(&qn, 2.0, 1.0).unwrap();
        let p = v.verify_polar_consistency(&f).unwrap();
        assert!(p.pass, "{p:?}");
        let m = v.verify_mc_agreement(&f).unwrap();
        assert!(m.pass, "{m:?}");
        let again = v.verify_mc_agreement(&f).unwrap();
        assert_eq!(m.lhs.to_bits(), again.lhs.to_bits());
    }

    #[test]
    fn fields_without_support_cannot_be_integrated() {
        let qn = euclid3();
        let v = verifier(qn.clone());
        let f = crate::fields::angular_coordinate(&qn, 0).unwrap();
        assert!(matches!(v.weighted_norm_triple(&f, 0.0), Err(Error::NoSupport(_))));
    }

    #[test]
    fn fingerprints_identify_inputs() {
        let qn = QuasiNorm::koranyi();
        let s = QuadratureSettings::default();
        let a = Fingerprint::new("x", &qn, "f", Some(0.5), &s);
        assert_eq!(a, Fingerprint::new("x", &qn, "f", Some(0.5), &s));
        assert_ne!(a.digest, Fingerprint::new("x", &qn, "f", Some(0.25), &s).digest);
        assert_ne!(a.digest, Fingerprint::new("y", &qn, "f", Some(0.5), &s).digest);
        let mut s2 = s.clone();
        s2.mc_seed += 1;
        assert_ne!(a.digest, Fingerprint::new("x", &qn, "f", Some(0.5), &s2).digest);
        assert_eq!(a.digest.len(), 64);
    }
}
