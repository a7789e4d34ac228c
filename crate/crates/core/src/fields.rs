//! Smooth complex-valued test functions with analytic partial derivatives.
//!
//! Compactly supported fields carry a support annulus `[inner, outer]` in a
//! declared quasi-norm and vanish identically (value and gradient) outside
//! it. Fields of the form `g(|x|)` additionally expose their radial form so
//! that weighted norms can be reduced to one-dimensional integrals.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupSpec, QuasiNorm};
use crate::numerics::geometric_steps;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const STACK_DIM: usize = 8;

/// A real profile `φ(r)` with analytic derivative, supported in `[a, b]`.
pub trait RadialProfile: Send + Sync + fmt::Debug {
    fn value(&self, r: f64) -> f64;
    fn derivative(&self, r: f64) -> f64;
    fn support(&self) -> (f64, f64);
}

/// A complex radial form `g(r)` returning `(g(r), g'(r))`.
pub trait RadialForm: Send + Sync + fmt::Debug {
    fn eval(&self, r: f64) -> (Complex64, Complex64);
}

/// Point evaluator behind a [`ScalarField`].
pub trait FieldKernel: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64]) -> Complex64;
    /// Returns `f(x)` and writes `∂_k f(x)` into `grad`.
    fn eval(&self, x: &[f64], grad: &mut [Complex64]) -> Complex64;
}

/// Support annulus `{inner <= |x| <= outer}` in `norm`.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    pub norm: QuasiNorm,
    pub inner: f64,
    pub outer: f64,
}

impl Support {
    pub fn new(norm: QuasiNorm, inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < outer && outer.is_finite()) {
            return Err(Error::InvalidField(format!(
                "support annulus must satisfy 0 < inner < outer < inf, got [{inner}, {outer}]"
            )));
        }
        Ok(Self { norm, inner, outer })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let r = self.norm.eval(x);
        r >= self.inner && r <= self.outer
    }
}

#[derive(Debug, Clone)]
struct RadialData {
    norm: QuasiNorm,
    form: Arc<dyn RadialForm>,
}

/// A smooth complex-valued field on `R^n`.
#[derive(Debug, Clone)]
pub struct ScalarField {
    kernel: Arc<dyn FieldKernel>,
    dim: usize,
    support: Option<Support>,
    radial: Option<RadialData>,
    label: String,
}

impl ScalarField {
    pub fn new(kernel: Arc<dyn FieldKernel>, dim: usize, support: Option<Support>, label: impl Into<String>) -> Self {
        Self { kernel, dim, support, radial: None, label: label.into() }
    }

    /// Declares the field to be `g(|x|)` for the given norm and radial form.
    /// The caller guarantees that the kernel agrees with the form.
    pub fn with_radial_form(mut self, norm: QuasiNorm, form: Arc<dyn RadialForm>) -> Self {
        self.radial = Some(RadialData { norm, form });
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> Option<&Support> {
        self.support.as_ref()
    }

    pub fn kernel(&self) -> &Arc<dyn FieldKernel> {
        &self.kernel
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> Complex64 {
        self.kernel.value(x)
    }

    #[inline]
    pub fn eval(&self, x: &[f64], grad: &mut [Complex64]) -> Complex64 {
        self.kernel.eval(x, grad)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<Complex64> {
        let mut g = vec![ZERO; self.dim];
        self.kernel.eval(x, &mut g);
        g
    }

    /// The radial form of the field when it is radial with respect to `qn`.
    pub fn radial_form_in(&self, qn: &QuasiNorm) -> Option<&Arc<dyn RadialForm>> {
        self.radial.as_ref().filter(|r| &r.norm == qn).map(|r| &r.form)
    }

    /// The norm the field is radial in, if any.
    pub fn radial_norm(&self) -> Option<&QuasiNorm> {
        self.radial.as_ref().map(|r| &r.norm)
    }

    pub fn is_radial(&self) -> bool {
        self.radial.is_some()
    }
}

/// Runs `body` with a zeroed complex scratch buffer of length `n`.
#[inline]
fn with_scratch<R>(n: usize, body: impl FnOnce(&mut [Complex64]) -> R) -> R {
    if n <= STACK_DIM {
        let mut buf = [ZERO; STACK_DIM];
        body(&mut buf[..n])
    } else {
        let mut buf = vec![ZERO; n];
        body(&mut buf)
    }
}

#[inline]
fn with_real_scratch<R>(n: usize, body: impl FnOnce(&mut [f64]) -> R) -> R {
    if n <= STACK_DIM {
        let mut buf = [0.0; STACK_DIM];
        body(&mut buf[..n])
    } else {
        let mut buf = vec![0.0; n];
        body(&mut buf)
    }
}

// ---------------------------------------------------------------------------
// Radial profiles

/// `φ(r) = exp(-1 / (1 - s²))`, `s = (r - center) / width`, on `|s| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub center: f64,
    pub width: f64,
}

impl BumpProfile {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && center.is_finite()) {
            return Err(Error::InvalidField(format!("bump width must be positive, got {width}")));
        }
        if center - width <= 0.0 {
            return Err(Error::InvalidField(format!(
                "bump window [{}, {}] touches the origin",
                center - width,
                center + width
            )));
        }
        Ok(Self { center, width })
    }
}

impl RadialProfile for BumpProfile {
    fn value(&self, r: f64) -> f64 {
        let s = (r - self.center) / self.width;
        if s.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - s * s)).exp()
        }
    }

    fn derivative(&self, r: f64) -> f64 {
        let s = (r - self.center) / self.width;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let d = 1.0 - s * s;
        (-1.0 / d).exp() * (-2.0 * s / (d * d)) / self.width
    }

    fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }
}

/// `exp(-1/x)` for `x > 0`, else 0; returns value and derivative.
#[inline]
fn flat_exp(x: f64) -> (f64, f64) {
    if x <= 0.0 {
        (0.0, 0.0)
    } else {
        let v = (-1.0 / x).exp();
        (v, v / (x * x))
    }
}

/// C^∞ step from 0 (at `x <= 0`) to 1 (at `x >= 1`); value and derivative.
pub fn smooth_step(x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0);
    }
    let (p, dp) = flat_exp(x);
    let (q, dq) = flat_exp(1.0 - x);
    let s = p + q;
    (p / s, (dp * q + p * dq) / (s * s))
}

/// `φ(r) = r^{-μ} w(ln r)` where `w` is a smooth plateau equal to 1 on
/// `[ln a + taper, ln b - taper]` and vanishing at `ln a`, `ln b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPlateauProfile {
    pub mu: f64,
    pub a: f64,
    pub b: f64,
    pub taper: f64,
}

impl LogPlateauProfile {
    pub fn new(mu: f64, a: f64, b: f64, taper: f64) -> Result<Self> {
        if !(a > 0.0 && b > a && b.is_finite() && mu.is_finite()) {
            return Err(Error::InvalidField(format!("need 0 < a < b, got a={a}, b={b}")));
        }
        let half = (b.ln() - a.ln()) / 2.0;
        if !(taper > 0.0 && taper < half) {
            return Err(Error::InvalidField(format!("taper must lie in (0, {half}), got {taper}")));
        }
        Ok(Self { mu, a, b, taper })
    }

    /// Log-length of the region where the profile is an exact power law.
    pub fn plateau_length(&self) -> f64 {
        (self.b / self.a).ln() - 2.0 * self.taper
    }

    /// `[a·e^taper, b·e^{-taper}]`.
    pub fn plateau(&self) -> (f64, f64) {
        (self.a * self.taper.exp(), self.b * (-self.taper).exp())
    }

    fn window(&self, t: f64) -> (f64, f64) {
        let (s1, d1) = smooth_step((t - self.a.ln()) / self.taper);
        let (s2, d2) = smooth_step((self.b.ln() - t) / self.taper);
        (s1 * s2, (d1 * s2 - s1 * d2) / self.taper)
    }
}

impl RadialProfile for LogPlateauProfile {
    fn value(&self, r: f64) -> f64 {
        if r <= self.a || r >= self.b {
            return 0.0;
        }
        let (w, _) = self.window(r.ln());
        r.powf(-self.mu) * w
    }

    fn derivative(&self, r: f64) -> f64 {
        if r <= self.a || r >= self.b {
            return 0.0;
        }
        let (w, dw) = self.window(r.ln());
        r.powf(-self.mu - 1.0) * (dw - self.mu * w)
    }

    fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

/// `φ(r) = sin(π ln(r/a) / L) · r^{-μ}` on `[a, a e^L]`; the exact minimiser
/// of the weighted Rayleigh quotient on that interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinLogProfile {
    pub mu: f64,
    pub a: f64,
    pub length: f64,
}

impl SinLogProfile {
    pub fn new(mu: f64, a: f64, length: f64) -> Result<Self> {
        if !(a > 0.0 && length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidField(format!("need a > 0 and L > 0, got a={a}, L={length}")));
        }
        Ok(Self { mu, a, length })
    }
}

impl RadialProfile for SinLogProfile {
    fn value(&self, r: f64) -> f64 {
        let t = (r / self.a).ln();
        if !(0.0..=self.length).contains(&t) {
            return 0.0;
        }
        (PI * t / self.length).sin() * r.powf(-self.mu)
    }

    fn derivative(&self, r: f64) -> f64 {
        let t = (r / self.a).ln();
        if !(0.0..=self.length).contains(&t) {
            return 0.0;
        }
        let k = PI / self.length;
        r.powf(-self.mu - 1.0) * (k * (k * t).cos() - self.mu * (k * t).sin())
    }

    fn support(&self) -> (f64, f64) {
        (self.a, self.a * self.length.exp())
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A profile given by caller-supplied closures.
#[derive(Clone)]
pub struct FnProfile {
    value: RealFn,
    derivative: RealFn,
    support: (f64, f64),
}

impl FnProfile {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: (f64, f64),
    ) -> Self {
        Self { value: Arc::new(value), derivative: Arc::new(derivative), support }
    }
}

impl fmt::Debug for FnProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnProfile").field("support", &self.support).finish_non_exhaustive()
    }
}

impl RadialProfile for FnProfile {
    fn value(&self, r: f64) -> f64 {
        (self.value)(r)
    }
    fn derivative(&self, r: f64) -> f64 {
        (self.derivative)(r)
    }
    fn support(&self) -> (f64, f64) {
        self.support
    }
}

#[derive(Debug, Clone)]
struct RealForm(Arc<dyn RadialProfile>);

impl RadialForm for RealForm {
    fn eval(&self, r: f64) -> (Complex64, Complex64) {
        (Complex64::from(self.0.value(r)), Complex64::from(self.0.derivative(r)))
    }
}

// ---------------------------------------------------------------------------
// Kernels

#[derive(Debug)]
struct RadialKernel {
    norm: QuasiNorm,
    form: Arc<dyn RadialForm>,
}

impl FieldKernel for RadialKernel {
    fn value(&self, x: &[f64]) -> Complex64 {
        self.form.eval(self.norm.eval(x)).0
    }

    fn eval(&self, x: &[f64], grad: &mut [Complex64]) -> Complex64 {
        with_real_scratch(x.len(), |dr| {
            let r = self.norm.eval_with_gradient(x, dr);
            let (g, dg) = self.form.eval(r);
            for (out, d) in grad.iter_mut().zip(dr.iter()) {
                *out = dg * *d;
            }
            g
        })
    }
}

/// Caller-supplied phase: returns `θ(x)` and writes `∂_k θ` into the slice.
pub type PhaseFn = Arc<dyn Fn(&[f64], &mut [f64]) -> f64 + Send + Sync>;

/// Phase functions for [`complex_phase_wrap`].
#[derive(Clone)]
pub enum Phase {
    /// `θ(x) = scale · |x|` in the given norm.
    Radial {
        norm: QuasiNorm,
        scale: f64,
    },
    /// `θ(x) = Σ c_k x_k`.
    Linear {
        coefficients: Vec<f64>,
    },
    Custom(PhaseFn),
}

impl fmt::Debug for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Radial { norm, scale } => write!(f, "radial({norm}, {scale})"),
            Phase::Linear { coefficients } => write!(f, "linear{coefficients:?}"),
            Phase::Custom(_) => f.write_str("custom"),
        }
    }
}

impl Phase {
    pub fn zero() -> Self {
        Phase::Linear { coefficients: Vec::new() }
    }

    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        match self {
            Phase::Radial { norm, scale } => {
                let r = norm.eval_with_gradient(x, grad);
                grad.iter_mut().for_each(|g| *g *= scale);
                scale * r
            }
            Phase::Linear { coefficients } => {
                let mut th = 0.0;
                for (k, g) in grad.iter_mut().enumerate() {
                    let c = coefficients.get(k).copied().unwrap_or(0.0);
                    *g = c;
                    th += c * x[k];
                }
                th
            }
            Phase::Custom(func) => func(x, grad),
        }
    }

    fn label(&self) -> String {
        match self {
            Phase::Radial { scale, .. } => format!("radial:{scale}"),
            Phase::Linear { coefficients } => {
                let c: Vec<String> = coefficients.iter().map(|c| c.to_string()).collect();
                format!("linear:{}", c.join(","))
            }
            Phase::Custom(_) => "custom".into(),
        }
    }
}

#[derive(Debug)]
struct PhaseKernel {
    base: ScalarField,
    phase: Phase,
}

impl FieldKernel for PhaseKernel {
    fn value(&self, x: &[f64]) -> Complex64 {
        let v = self.base.value(x);
        if v == ZERO {
            return ZERO;
        }
        with_real_scratch(x.len(), |dth| v * Complex64::from_polar(1.0, self.phase.eval(x, dth)))
    }

    fn eval(&self, x: &[f64], grad: &mut [Complex64]) -> Complex64 {
        let v = self.base.eval(x, grad);
        with_real_scratch(x.len(), |dth| {
            let e = Complex64::from_polar(1.0, self.phase.eval(x, dth));
            for (g, d) in grad.iter_mut().zip(dth.iter()) {
                *g = (*g + Complex64::i() * v * *d) * e;
            }
            v * e
        })
    }
}

/// `g(r) e^{i s r}` for a radial base form `g`.
#[derive(Debug)]
struct WrappedForm {
    base: Arc<dyn RadialForm>,
    scale: f64,
}

impl RadialForm for WrappedForm {
    fn eval(&self, r: f64) -> (Complex64, Complex64) {
        let (g, dg) = self.base.eval(r);
        let e = Complex64::from_polar(1.0, self.scale * r);
        (g * e, (dg + Complex64::i() * self.scale * g) * e)
    }
}

#[derive(Debug)]
struct ProductKernel {
    a: ScalarField,
    b: ScalarField,
}

impl FieldKernel for ProductKernel {
    fn value(&self, x: &[f64]) -> Complex64 {
        let va = self.a.value(x);
        if va == ZERO {
            return ZERO;
        }
        va * self.b.value(x)
    }

    fn eval(&self, x: &[f64], grad: &mut [Complex64]) -> Complex64 {
        let va = self.a.eval(x, grad);
        with_scratch(x.len(), |gb| {
            let vb = self.b.eval(x, gb);
            for (g, db) in grad.iter_mut().zip(gb.iter()) {
                *g = *g * vb + va * *db;
            }
            va * vb
        })
    }
}

/// `c · Π x_k^{m_k}`.
#[derive(Debug)]
struct MonomialKernel {
    coeff: f64,
    powers: Vec<u32>,
}

impl FieldKernel for MonomialKernel {
    fn value(&self, x: &[f64]) -> Complex64 {
        let v: f64 = x.iter().zip(&self.powers).map(|(xk, m)| xk.powi(*m as i32)).product();
        Complex64::from(self.coeff * v)
    }

    fn eval(&self, x: &[f64], grad: &mut [Complex64]) -> Complex64 {
        for (k, g) in grad.iter_mut().enumerate() {
            let m = self.powers[k];
            *g = if m == 0 {
                ZERO
            } else {
                let others: f64 = x
                    .iter()
                    .zip(&self.powers)
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .map(|(_, (xj, mj))| xj.powi(*mj as i32))
                    .product();
                Complex64::from(self.coeff * m as f64 * x[k].powi(m as i32 - 1) * others)
            };
        }
        self.value(x)
    }
}

/// `|x|^s`.
#[derive(Debug)]
struct NormPowerKernel {
    norm: QuasiNorm,
    exponent: f64,
}

impl FieldKernel for NormPowerKernel {
    fn value(&self, x: &[f64]) -> Complex64 {
        Complex64::from(self.norm.eval(x).powf(self.exponent))
    }

    fn eval(&self, x: &[f64], grad: &mut [Complex64]) -> Complex64 {
        with_real_scratch(x.len(), |dr| {
            let r = self.norm.eval_with_gradient(x, dr);
            let v = r.powf(self.exponent);
            let dv = self.exponent * r.powf(self.exponent - 1.0);
            for (g, d) in grad.iter_mut().zip(dr.iter()) {
                *g = Complex64::from(dv * d);
            }
            Complex64::from(v)
        })
    }
}

#[derive(Debug)]
struct PowerForm(f64);

impl RadialForm for PowerForm {
    fn eval(&self, r: f64) -> (Complex64, Complex64) {
        (Complex64::from(r.powf(self.0)), Complex64::from(self.0 * r.powf(self.0 - 1.0)))
    }
}

/// `x_k / |x|^{ν_k}`, dilation invariant.
#[derive(Debug)]
struct AngularKernel {
    norm: QuasiNorm,
    axis: usize,
}

impl FieldKernel for AngularKernel {
    fn value(&self, x: &[f64]) -> Complex64 {
        let nk = self.norm.spec().nu()[self.axis];
        Complex64::from(x[self.axis] / self.norm.eval(x).powf(nk))
    }

    fn eval(&self, x: &[f64], grad: &mut [Complex64]) -> Complex64 {
        let nk = self.norm.spec().nu()[self.axis];
        with_real_scratch(x.len(), |dr| {
            let r = self.norm.eval_with_gradient(x, dr);
            let rn = r.powf(nk);
            let v = x[self.axis] / rn;
            for (j, g) in grad.iter_mut().enumerate() {
                let direct = if j == self.axis { 1.0 / rn } else { 0.0 };
                *g = Complex64::from(direct - nk * v / r * dr[j]);
            }
            Complex64::from(v)
        })
    }
}

#[derive(Debug)]
struct ConstantKernel(Complex64);

impl FieldKernel for ConstantKernel {
    fn value(&self, _x: &[f64]) -> Complex64 {
        self.0
    }
    fn eval(&self, _x: &[f64], grad: &mut [Complex64]) -> Complex64 {
        grad.iter_mut().for_each(|g| *g = ZERO);
        self.0
    }
}

#[derive(Debug)]
struct ZeroForm;

impl RadialForm for ZeroForm {
    fn eval(&self, _r: f64) -> (Complex64, Complex64) {
        (ZERO, ZERO)
    }
}

/// `f ∘ D_λ`.
#[derive(Debug)]
struct DilatedKernel {
    inner: ScalarField,
    spec: GroupSpec,
    lambda: f64,
}

impl FieldKernel for DilatedKernel {
    fn value(&self, x: &[f64]) -> Complex64 {
        with_real_scratch(x.len(), |y| {
            self.spec.dilate_into(self.lambda, x, y);
            self.inner.value(y)
        })
    }

    fn eval(&self, x: &[f64], grad: &mut [Complex64]) -> Complex64 {
        with_real_scratch(x.len(), |y| {
            self.spec.dilate_into(self.lambda, x, y);
            let v = self.inner.eval(y, grad);
            for (g, nk) in grad.iter_mut().zip(self.spec.nu()) {
                *g *= self.lambda.powf(*nk);
            }
            v
        })
    }
}

#[derive(Debug)]
struct DilatedForm {
    inner: Arc<dyn RadialForm>,
    lambda: f64,
}

impl RadialForm for DilatedForm {
    fn eval(&self, r: f64) -> (Complex64, Complex64) {
        let (g, dg) = self.inner.eval(self.lambda * r);
        (g, dg * self.lambda)
    }
}

// ---------------------------------------------------------------------------
// Constructors

/// Radial field `φ(|x|)` for an arbitrary profile.
pub fn radial_profile_field(
    qn: &QuasiNorm,
    profile: Arc<dyn RadialProfile>,
    label: impl Into<String>,
) -> Result<ScalarField> {
    let (a, b) = profile.support();
    let support = Support::new(qn.clone(), a, b)?;
    let form: Arc<dyn RadialForm> = Arc::new(RealForm(profile));
    let kernel = Arc::new(RadialKernel { norm: qn.clone(), form: form.clone() });
    Ok(ScalarField::new(kernel, qn.dim(), Some(support), label).with_radial_form(qn.clone(), form))
}

/// The canonical bump `exp(-1/(1 - ((|x| - center)/width)²))`, supported in
/// `[center - width, center + width]`.
pub fn radial_bump(qn: &QuasiNorm, center: f64, width: f64) -> Result<ScalarField> {
    let profile = BumpProfile::new(center, width)?;
    radial_profile_field(qn, Arc::new(profile), format!("bump(c={center},w={width})"))
}

/// `base(x) · exp(i θ(x))`.
pub fn complex_phase_wrap(base: &ScalarField, phase: Phase) -> Result<ScalarField> {
    if let Phase::Radial { norm, .. } = &phase {
        if norm.dim() != base.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), got: norm.dim() });
        }
    }
    let label = format!("wrap[{};{}]", base.label(), phase.label());
    let radial = match (&phase, base.radial.as_ref()) {
        (Phase::Radial { norm, scale }, Some(rd)) if &rd.norm == norm => Some(RadialData {
            norm: norm.clone(),
            form: Arc::new(WrappedForm { base: rd.form.clone(), scale: *scale }),
        }),
        (Phase::Linear { coefficients }, Some(rd)) if coefficients.iter().all(|c| *c == 0.0) => Some(rd.clone()),
        _ => None,
    };
    let kernel = Arc::new(PhaseKernel { base: base.clone(), phase });
    Ok(ScalarField { kernel, dim: base.dim(), support: base.support.clone(), radial, label })
}

/// A member of the extremizing sequence: `φ(|x|) = |x|^{-μ} w(ln |x|)` with a
/// smooth logarithmic plateau cutoff `w`.
pub fn extremizer_member(qn: &QuasiNorm, mu: f64, a: f64, b: f64, taper: f64) -> Result<ScalarField> {
    let profile = LogPlateauProfile::new(mu, a, b, taper)?;
    radial_profile_field(qn, Arc::new(profile), format!("extremizer(mu={mu},a={a:e},b={b:e},taper={taper})"))
}

/// Extremizer member centred at `|x| = 1` with plateau log-length `plateau`.
pub fn extremizer_with_plateau(qn: &QuasiNorm, mu: f64, plateau: f64, taper: f64) -> Result<ScalarField> {
    if !(plateau > 0.0) {
        return Err(Error::InvalidField(format!("plateau length must be positive, got {plateau}")));
    }
    let half = plateau / 2.0 + taper;
    extremizer_member(qn, mu, (-half).exp(), half.exp(), taper)
}

/// `x_k / |x|^{ν_k}` (homogeneous of order 0, not compactly supported).
pub fn angular_coordinate(qn: &QuasiNorm, axis: usize) -> Result<ScalarField> {
    if axis >= qn.dim() {
        return Err(Error::InvalidField(format!("axis {axis} out of range for n = {}", qn.dim())));
    }
    let kernel = Arc::new(AngularKernel { norm: qn.clone(), axis });
    Ok(ScalarField::new(kernel, qn.dim(), None, format!("angular[{}]", axis + 1)))
}

/// Off-radial product `bump(|x|) · x_k / |x|^{ν_k}`.
pub fn angular_product(qn: &QuasiNorm, center: f64, width: f64, axis: usize) -> Result<ScalarField> {
    let bump = radial_bump(qn, center, width)?;
    let ang = angular_coordinate(qn, axis)?;
    Ok(product(&bump, &ang)?.with_label(format!("angular[{}]*{}", axis + 1, bump.label())))
}

/// Pointwise product; the support of the first compactly supported factor is kept.
pub fn product(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let support = a.support.clone().or_else(|| b.support.clone());
    let label = format!("{}*{}", a.label(), b.label());
    let kernel = Arc::new(ProductKernel { a: a.clone(), b: b.clone() });
    Ok(ScalarField::new(kernel, a.dim(), support, label))
}

/// `c · Π x_k^{m_k}`; homogeneous of order `Σ m_k ν_k`.
pub fn monomial(n: usize, coeff: f64, powers: &[u32]) -> Result<ScalarField> {
    if powers.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: powers.len() });
    }
    let label = format!("{coeff}*x^{powers:?}");
    let kernel = Arc::new(MonomialKernel { coeff, powers: powers.to_vec() });
    Ok(ScalarField::new(kernel, n, None, label))
}

/// Homogeneity order of `x^m` under the dilations of `spec`.
pub fn monomial_order(spec: &GroupSpec, powers: &[u32]) -> f64 {
    powers.iter().zip(spec.nu()).map(|(m, n)| *m as f64 * n).sum()
}

/// `|x|^s` (smooth away from the origin and coordinate hyperplanes where the
/// norm itself is non-smooth).
pub fn norm_power(qn: &QuasiNorm, exponent: f64) -> ScalarField {
    let kernel = Arc::new(NormPowerKernel { norm: qn.clone(), exponent });
    ScalarField::new(kernel, qn.dim(), None, format!("|x|^{exponent}"))
        .with_radial_form(qn.clone(), Arc::new(PowerForm(exponent)))
}

pub fn constant(n: usize, value: Complex64) -> ScalarField {
    ScalarField::new(Arc::new(ConstantKernel(value)), n, None, format!("const({value})"))
}

/// The zero field with a nominal support annulus.
pub fn zero(qn: &QuasiNorm, inner: f64, outer: f64) -> Result<ScalarField> {
    let support = Support::new(qn.clone(), inner, outer)?;
    Ok(ScalarField::new(Arc::new(ConstantKernel(ZERO)), qn.dim(), Some(support), "zero")
        .with_radial_form(qn.clone(), Arc::new(ZeroForm)))
}

/// `x ↦ f(D_λ x)`.
pub fn dilated(f: &ScalarField, spec: &GroupSpec, lambda: f64) -> Result<ScalarField> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::NonPositiveScale(lambda));
    }
    if spec.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: spec.dim() });
    }
    let support = match &f.support {
        Some(s) => Some(Support::new(s.norm.clone(), s.inner / lambda, s.outer / lambda)?),
        None => None,
    };
    let radial = f.radial.as_ref().filter(|r| r.norm.spec() == spec).map(|r| RadialData {
        norm: r.norm.clone(),
        form: Arc::new(DilatedForm { inner: r.form.clone(), lambda }) as Arc<dyn RadialForm>,
    });
    let kernel = Arc::new(DilatedKernel { inner: f.clone(), spec: spec.clone(), lambda });
    Ok(ScalarField { kernel, dim: f.dim(), support, radial, label: format!("{}∘D({lambda})", f.label()) })
}

// ---------------------------------------------------------------------------
// Gradient self-check

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepError {
    pub step: f64,
    pub max_relative_error: f64,
    /// Estimated round-off contribution at this step (same normalisation).
    pub roundoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheckReport {
    pub field: String,
    pub samples: usize,
    pub per_step: Vec<StepError>,
    /// Step closest to `1e-5` and its error.
    pub reference_step: f64,
    pub reference_error: f64,
    /// Log-log slope over truncation-dominated steps; `None` when fewer than
    /// three steps rise above round-off (e.g. exact or zero fields).
    pub observed_order: Option<f64>,
    pub pass: bool,
}

/// Default step sweep `1e-2 .. 1e-6`, half-decade spacing.
pub fn default_step_sweep() -> Vec<f64> {
    geometric_steps(1e-6, 1e-2, 9)
}

/// Per-coordinate finite-difference scale: `|x|^{ν_k}` in the support norm,
/// or `max(1, |x_k|)` for fields without a declared norm.
fn fd_scales(f: &ScalarField, x: &[f64]) -> Vec<f64> {
    match f.support.as_ref().map(|s| &s.norm).or_else(|| f.radial_norm()) {
        Some(qn) => {
            let r = qn.eval(x);
            qn.spec().nu().iter().map(|nk| r.powf(*nk)).collect()
        }
        None => x.iter().map(|xk| xk.abs().max(1.0)).collect(),
    }
}

/// Compares analytic partials with central differences over a step sweep.
pub fn gradient_selfcheck(
    f: &ScalarField,
    samples: &[Vec<f64>],
    steps: &[f64],
    tolerance: f64,
    min_order: f64,
) -> GradientCheckReport {
    let n = f.dim();
    let mut per_step = Vec::with_capacity(steps.len());
    for &h in steps {
        let mut worst = 0.0f64;
        let mut noise = 0.0f64;
        for x in samples {
            let mut grad = vec![ZERO; n];
            let v = f.eval(x, &mut grad);
            let scales = fd_scales(f, x);
            let gmax = grad.iter().map(|g| g.norm()).fold(0.0, f64::max);
            let mut xp = x.clone();
            for k in 0..n {
                let hk = h * scales[k];
                xp[k] = x[k] + hk;
                let fp = f.value(&xp);
                xp[k] = x[k] - hk;
                let fm = f.value(&xp);
                xp[k] = x[k];
                let fd = (fp - fm) / (2.0 * hk);
                let err = (grad[k] - fd).norm();
                let denom = if gmax > 0.0 { gmax } else { 1.0 };
                worst = worst.max(err / denom);
                let mag = v.norm().max(fp.norm()).max(fm.norm());
                noise = noise.max(2.0 * f64::EPSILON * mag / hk / denom);
            }
        }
        per_step.push(StepError { step: h, max_relative_error: worst, roundoff: noise });
    }

    let (reference_step, reference_error) = per_step
        .iter()
        .min_by(|a, b| {
            let da = (a.step.ln() - 1e-5f64.ln()).abs();
            let db = (b.step.ln() - 1e-5f64.ln()).abs();
            da.total_cmp(&db)
        })
        .map(|s| (s.step, s.max_relative_error))
        .unwrap_or((f64::NAN, 0.0));

    let usable: Vec<&StepError> =
        per_step.iter().filter(|s| s.max_relative_error > 100.0 * s.roundoff && s.max_relative_error > 1e-14).collect();
    let observed_order = if usable.len() >= 3 {
        let hs: Vec<f64> = usable.iter().map(|s| s.step).collect();
        let es: Vec<f64> = usable.iter().map(|s| s.max_relative_error).collect();
        crate::numerics::loglog_slope(&hs, &es)
    } else {
        None
    };
    let pass = reference_error <= tolerance && observed_order.map_or(true, |p| p >= min_order);
    GradientCheckReport {
        field: f.label().to_string(),
        samples: samples.len(),
        per_step,
        reference_step,
        reference_error,
        observed_order,
        pass,
    }
}
