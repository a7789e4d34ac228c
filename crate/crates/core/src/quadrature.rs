//! Panel Gauss–Legendre quadrature (radial and Cartesian), a Monte-Carlo
//! oracle, and the total mass `S` of the polar-decomposition measure on the
//! unit quasi-sphere.
//!
//! All sums are accumulated per panel/slice and then combined in a fixed
//! order, so results do not depend on how work is scheduled across threads.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{BumpProfile, RadialProfile, Support};
use crate::group::QuasiNorm;
use crate::numerics::{ordered_sum, KahanSum};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from the Tricomi initial guesses.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSettings("Gauss–Legendre order must be >= 1".into()));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Single-panel rule on `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = KahanSum::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        half * acc.total()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Spacing of radial panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RadialMesh {
    /// Uniform in `r`.
    Linear,
    /// Uniform in `ln r`.
    Logarithmic,
    /// Logarithmic when `b / a > 16`, linear otherwise.
    #[default]
    Auto,
}

/// Coordinate map used on each half-axis of a Cartesian box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CartesianGrading {
    /// `x_k = H_k · u`.
    Linear,
    /// `x_k = H_k · u^{ν_k}`; turns `|x_k|^{p/ν_k}` into `u^p`, which keeps
    /// p-sum norms smooth on every half-axis panel.
    #[default]
    Dilation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSettings {
    /// Radial panels.
    pub panels: usize,
    /// Gauss–Legendre order per panel (radial and Cartesian).
    pub nodes_per_panel: usize,
    /// Nodes per Cartesian axis; rounded up to whole panels on each half-axis.
    pub cartesian_resolution: usize,
    pub cartesian_grading: CartesianGrading,
    pub radial_mesh: RadialMesh,
    pub mc_samples: usize,
    pub mc_seed: u64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            panels: 64,
            nodes_per_panel: 16,
            cartesian_resolution: 160,
            cartesian_grading: CartesianGrading::Dilation,
            radial_mesh: RadialMesh::Auto,
            mc_samples: 1_000_000,
            mc_seed: 0x5eed_cafe,
        }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("panels", self.panels),
            ("nodes_per_panel", self.nodes_per_panel),
            ("cartesian_resolution", self.cartesian_resolution),
            ("mc_samples", self.mc_samples),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(Error::InvalidSettings(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    /// Panels per Cartesian half-axis.
    pub fn cartesian_half_panels(&self) -> usize {
        (self.cartesian_resolution.div_ceil(2)).div_ceil(self.nodes_per_panel).max(1)
    }

    /// Nodes per Cartesian axis actually used.
    pub fn cartesian_nodes_per_axis(&self) -> usize {
        2 * self.cartesian_half_panels() * self.nodes_per_panel
    }

    pub fn with_panels(mut self, panels: usize) -> Self {
        self.panels = panels;
        self
    }

    pub fn with_cartesian_resolution(mut self, nodes: usize) -> Self {
        self.cartesian_resolution = nodes;
        self
    }

    pub fn with_mc_samples(mut self, samples: usize) -> Self {
        self.mc_samples = samples;
        self
    }
}

// ---------------------------------------------------------------------------
// Radial

/// `∫_a^b g_k(r) dr` for `m` integrands written by `integrand(r, out)`.
///
/// Panels are uniform in `r` or in `ln r` according to `settings.radial_mesh`.
pub fn integrate_radial_into(
    integrand: impl Fn(f64, &mut [f64]),
    m: usize,
    a: f64,
    b: f64,
    settings: &QuadratureSettings,
) -> Result<Vec<f64>> {
    settings.validate()?;
    if !(a >= 0.0 && b > a && b.is_finite()) {
        return Err(Error::InvalidSettings(format!("radial interval must satisfy 0 <= a < b < inf, got [{a}, {b}]")));
    }
    let rule = GaussLegendre::new(settings.nodes_per_panel)?;
    let logarithmic = match settings.radial_mesh {
        RadialMesh::Linear => false,
        RadialMesh::Logarithmic => a > 0.0,
        RadialMesh::Auto => a > 0.0 && b / a > 16.0,
    };
    let (lo, hi) = if logarithmic { (a.ln(), b.ln()) } else { (a, b) };
    let width = (hi - lo) / settings.panels as f64;
    let mut totals = vec![KahanSum::default(); m];
    let mut acc = vec![KahanSum::default(); m];
    let mut out = vec![0.0; m];
    for p in 0..settings.panels {
        let p0 = lo + width * p as f64;
        let p1 = if p + 1 == settings.panels { hi } else { p0 + width };
        let half = 0.5 * (p1 - p0);
        let mid = 0.5 * (p0 + p1);
        acc.iter_mut().for_each(|s| *s = KahanSum::default());
        for (x, w) in rule.nodes().iter().zip(rule.weights()) {
            let s = mid + half * x;
            let (r, jac) = if logarithmic { (s.exp(), s.exp()) } else { (s, 1.0) };
            out.iter_mut().for_each(|v| *v = 0.0);
            integrand(r, &mut out);
            for (k, v) in out.iter().enumerate() {
                if *v != 0.0 {
                    acc[k].add(w * v * jac);
                }
            }
        }
        for k in 0..m {
            totals[k].add(half * acc[k].total());
        }
    }
    Ok(totals.iter().map(KahanSum::total).collect())
}

/// `∫_a^b g_m(r) r^{e_m} dr` for `M` integrands sharing one node set.
pub fn integrate_radial_weighted<const M: usize>(
    integrand: impl Fn(f64) -> [f64; M],
    exponents: [f64; M],
    a: f64,
    b: f64,
    settings: &QuadratureSettings,
) -> Result<[f64; M]> {
    if a == 0.0 {
        if let Some(e) = exponents.iter().find(|e| **e < 0.0) {
            return Err(Error::UnboundedIntegrand { a, b, exponent: *e });
        }
    }
    let v = integrate_radial_into(
        |r, out| {
            let g = integrand(r);
            let ln_r = r.ln();
            for k in 0..M {
                if g[k] != 0.0 {
                    out[k] = g[k] * (exponents[k] * ln_r).exp();
                }
            }
        },
        M,
        a,
        b,
        settings,
    )?;
    Ok(std::array::from_fn(|k| v[k]))
}

/// `∫_a^b g(r) r^{weight_exponent} dr`.
pub fn integrate_radial(
    integrand: impl Fn(f64) -> f64,
    weight_exponent: f64,
    a: f64,
    b: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    integrate_radial_weighted(|r| [integrand(r)], [weight_exponent], a, b, settings).map(|v| v[0])
}

/// Radial integral of a profile-derived integrand over the profile support.
pub fn integrate_profile(
    profile: &dyn RadialProfile,
    integrand: impl Fn(f64, f64, f64) -> f64,
    weight_exponent: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let (a, b) = profile.support();
    integrate_radial(|r| integrand(r, profile.value(r), profile.derivative(r)), weight_exponent, a, b, settings)
}

// ---------------------------------------------------------------------------
// Cartesian

/// Origin-centred box `Π [-H_k, H_k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartesianBox {
    pub half_widths: Vec<f64>,
}

impl CartesianBox {
    pub fn new(half_widths: Vec<f64>) -> Result<Self> {
        if half_widths.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::InvalidSettings(format!("box half-widths must be positive, got {half_widths:?}")));
        }
        Ok(Self { half_widths })
    }

    /// Smallest box containing the quasi-ball of radius `support.outer`.
    pub fn covering(support: &Support) -> Self {
        Self { half_widths: support.norm.ball_half_widths(support.outer) }
    }

    pub fn dim(&self) -> usize {
        self.half_widths.len()
    }

    pub fn volume(&self) -> f64 {
        self.half_widths.iter().map(|h| 2.0 * h).product()
    }

    /// Errors when part of the support would fall outside the box.
    pub fn check_covers(&self, support: &Support) -> Result<()> {
        let need = support.norm.ball_half_widths(support.outer);
        if need.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: need.len() });
        }
        for (axis, (h, r)) in self.half_widths.iter().zip(&need).enumerate() {
            if *h < r * (1.0 - 1e-12) {
                return Err(Error::BoxTruncatesSupport { axis, half_width: *h, required: *r });
            }
        }
        Ok(())
    }
}

/// Nodes and weights (including the grading Jacobian) along one axis.
fn axis_rule(half_width: f64, grading: f64, rule: &GaussLegendre, half_panels: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(2 * half_panels * rule.order());
    let mut ws = Vec::with_capacity(xs.capacity());
    let width = 1.0 / half_panels as f64;
    let mut positive = Vec::new();
    for p in 0..half_panels {
        let mid = (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        for (t, w) in rule.nodes().iter().zip(rule.weights()) {
            let u = mid + half * t;
            let x = half_width * u.powf(grading);
            let jac = half_width * grading * u.powf(grading - 1.0);
            positive.push((x, w * half * jac));
        }
    }
    for (x, w) in positive.iter().rev() {
        xs.push(-x);
        ws.push(*w);
    }
    for (x, w) in &positive {
        xs.push(*x);
        ws.push(*w);
    }
    (xs, ws)
}

/// Tensor-product panel Gauss–Legendre over `bbox` for `m` integrands
/// written by `integrand(x, out)` into `out[..m]`.
///
/// Each half-axis is mapped by the grading in `settings` with exponents
/// `grading_exponents` (normally the dilation exponents `ν`). The integrand
/// may leave `out` untouched where it vanishes; the buffer is zeroed before
/// each call.
pub fn integrate_cartesian_into(
    integrand: impl Fn(&[f64], &mut [f64]) + Sync,
    m: usize,
    bbox: &CartesianBox,
    grading_exponents: &[f64],
    settings: &QuadratureSettings,
) -> Result<Vec<f64>> {
    settings.validate()?;
    let n = bbox.dim();
    if n == 0 {
        return Err(Error::InvalidSettings("empty box".into()));
    }
    if n > 3 {
        return Err(Error::DimensionTooLarge(n));
    }
    if grading_exponents.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: grading_exponents.len() });
    }
    let rule = GaussLegendre::new(settings.nodes_per_panel)?;
    let half_panels = settings.cartesian_half_panels();
    let axes: Vec<(Vec<f64>, Vec<f64>)> = bbox
        .half_widths
        .iter()
        .zip(grading_exponents)
        .map(|(h, g)| {
            let g = match settings.cartesian_grading {
                CartesianGrading::Linear => 1.0,
                CartesianGrading::Dilation => *g,
            };
            axis_rule(*h, g, &rule, half_panels)
        })
        .collect();

    let slice_sum = |i: usize| -> Vec<f64> {
        let mut acc = vec![KahanSum::default(); m];
        let mut inner = vec![KahanSum::default(); m];
        let mut out = vec![0.0; m];
        let mut x = [0.0f64; 3];
        x[0] = axes[0].0[i];
        let w0 = axes[0].1[i];
        let eval = |x: &[f64], out: &mut [f64]| -> bool {
            out.iter_mut().for_each(|v| *v = 0.0);
            integrand(x, out);
            out.iter().any(|v| *v != 0.0)
        };
        match n {
            1 => {
                if eval(&x[..1], &mut out) {
                    for k in 0..m {
                        acc[k].add(w0 * out[k]);
                    }
                }
            }
            2 => {
                for (x1, w1) in axes[1].0.iter().zip(&axes[1].1) {
                    x[1] = *x1;
                    if eval(&x[..2], &mut out) {
                        for k in 0..m {
                            acc[k].add(w0 * w1 * out[k]);
                        }
                    }
                }
            }
            _ => {
                for (x1, w1) in axes[1].0.iter().zip(&axes[1].1) {
                    x[1] = *x1;
                    inner.iter_mut().for_each(|s| *s = KahanSum::default());
                    let mut any = false;
                    for (x2, w2) in axes[2].0.iter().zip(&axes[2].1) {
                        x[2] = *x2;
                        if eval(&x[..3], &mut out) {
                            any = true;
                            for k in 0..m {
                                inner[k].add(w2 * out[k]);
                            }
                        }
                    }
                    if any {
                        for k in 0..m {
                            acc[k].add(w0 * w1 * inner[k].total());
                        }
                    }
                }
            }
        }
        acc.iter().map(KahanSum::total).collect()
    };

    let slices: Vec<Vec<f64>> = (0..axes[0].0.len()).into_par_iter().map(slice_sum).collect();
    Ok((0..m).map(|k| ordered_sum(slices.iter().map(|s| s[k]))).collect())
}

/// [`integrate_cartesian_into`] for a fixed number of integrands.
pub fn integrate_cartesian_vec<const M: usize>(
    integrand: impl Fn(&[f64]) -> [f64; M] + Sync,
    bbox: &CartesianBox,
    grading_exponents: &[f64],
    settings: &QuadratureSettings,
) -> Result<[f64; M]> {
    let v =
        integrate_cartesian_into(|x, out| out.copy_from_slice(&integrand(x)), M, bbox, grading_exponents, settings)?;
    Ok(std::array::from_fn(|k| v[k]))
}

/// Scalar tensor-grid integral over `bbox`.
pub fn integrate_cartesian(
    integrand: impl Fn(&[f64]) -> f64 + Sync,
    bbox: &CartesianBox,
    grading_exponents: &[f64],
    settings: &QuadratureSettings,
) -> Result<f64> {
    integrate_cartesian_vec(|x| [integrand(x)], bbox, grading_exponents, settings).map(|v| v[0])
}

// ---------------------------------------------------------------------------
// Monte Carlo

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: usize,
}

impl McEstimate {
    /// `|value - reference|` in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = (self.value - reference).abs();
        if self.standard_error == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / self.standard_error
        }
    }
}

pub const MIN_MC_SAMPLES: usize = 10_000;
const MC_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.count += 1.0;
        let d = v - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0.0 {
            return other;
        }
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + d * other.count / count,
            m2: self.m2 + other.m2 + d * d * self.count * other.count / count,
        }
    }
}

/// Uniform-sampling Monte-Carlo estimates over `bbox` for `m` integrands.
/// Chunk `c` draws from stream `c` of a ChaCha8 generator seeded with
/// `settings.mc_seed`, so the result is bit-identical for a fixed seed
/// regardless of thread count.
pub fn mc_integrate_into(
    integrand: impl Fn(&[f64], &mut [f64]) + Sync,
    m: usize,
    bbox: &CartesianBox,
    settings: &QuadratureSettings,
) -> Result<Vec<McEstimate>> {
    let total = settings.mc_samples;
    if total < MIN_MC_SAMPLES {
        return Err(Error::InvalidSettings(format!(
            "Monte-Carlo needs at least {MIN_MC_SAMPLES} samples, got {total}"
        )));
    }
    let n = bbox.dim();
    let chunks = total.div_ceil(MC_CHUNK);
    let seed = settings.mc_seed;
    let per_chunk: Vec<Vec<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = MC_CHUNK.min(total - c * MC_CHUNK);
            let mut mom = vec![Moments::default(); m];
            let mut x = vec![0.0; n];
            let mut out = vec![0.0; m];
            for _ in 0..count {
                for (xk, h) in x.iter_mut().zip(&bbox.half_widths) {
                    *xk = h * (2.0 * rng.gen::<f64>() - 1.0);
                }
                out.iter_mut().for_each(|v| *v = 0.0);
                integrand(&x, &mut out);
                for (mk, v) in mom.iter_mut().zip(&out) {
                    mk.push(*v);
                }
            }
            mom
        })
        .collect();
    let vol = bbox.volume();
    Ok((0..m)
        .map(|k| {
            let all = per_chunk.iter().fold(Moments::default(), |acc, c| acc.merge(c[k]));
            let var = if all.count > 1.0 { all.m2 / (all.count - 1.0) } else { 0.0 };
            McEstimate { value: vol * all.mean, standard_error: vol * (var / all.count).sqrt(), samples: total }
        })
        .collect())
}

/// [`mc_integrate_into`] for a fixed number of integrands.
pub fn mc_integrate_vec<const M: usize>(
    integrand: impl Fn(&[f64]) -> [f64; M] + Sync,
    bbox: &CartesianBox,
    settings: &QuadratureSettings,
) -> Result<[McEstimate; M]> {
    let v = mc_integrate_into(|x, out| out.copy_from_slice(&integrand(x)), M, bbox, settings)?;
    Ok(std::array::from_fn(|k| v[k]))
}

pub fn mc_integrate(
    integrand: impl Fn(&[f64]) -> f64 + Sync,
    bbox: &CartesianBox,
    settings: &QuadratureSettings,
) -> Result<McEstimate> {
    mc_integrate_vec(|x| [integrand(x)], bbox, settings).map(|v| v[0])
}

// ---------------------------------------------------------------------------
// Sphere measure

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereDerivation {
    pub reference: BumpProfile,
    pub cartesian: f64,
    pub radial: f64,
    pub ratio: f64,
}

/// Total `σ`-mass `S` of the unit quasi-sphere, from the ratio of a Cartesian
/// integral of `φ(|x|)` to the radial integral of `φ(r) r^{Q-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereMeasureConstant {
    pub value: f64,
    pub derivations: [SphereDerivation; 2],
    /// Relative discrepancy between the two reference bumps.
    pub discrepancy: f64,
}

pub const SPHERE_REFERENCE_BUMPS: [(f64, f64); 2] = [(2.0, 1.0), (1.4, 0.9)];

pub fn derive_sphere_constant(
    qn: &QuasiNorm,
    settings: &QuadratureSettings,
    tolerance: f64,
) -> Result<SphereMeasureConstant> {
    let n = qn.dim();
    if n > 3 {
        return Err(Error::DimensionTooLarge(n));
    }
    let q = qn.spec().homogeneous_dimension();
    let derive = |(center, width): (f64, f64)| -> Result<SphereDerivation> {
        let bump = BumpProfile::new(center, width)?;
        let (a, b) = bump.support();
        let radial = integrate_radial(|r| bump.value(r), q - 1.0, a, b, settings)?;
        let bbox = CartesianBox { half_widths: qn.ball_half_widths(b) };
        let cartesian = integrate_cartesian(
            |x| {
                let r = qn.eval(x);
                if r <= a || r >= b {
                    0.0
                } else {
                    bump.value(r)
                }
            },
            &bbox,
            qn.spec().nu(),
            settings,
        )?;
        Ok(SphereDerivation { reference: bump, cartesian, radial, ratio: cartesian / radial })
    };
    let first = derive(SPHERE_REFERENCE_BUMPS[0])?;
    let second = derive(SPHERE_REFERENCE_BUMPS[1])?;
    let discrepancy = (first.ratio - second.ratio).abs() / first.ratio.abs();
    if !(discrepancy <= tolerance) || !(first.ratio > 0.0) {
        return Err(Error::SphereConstantMismatch { first: first.ratio, second: second.ratio, discrepancy });
    }
    Ok(SphereMeasureConstant { value: first.ratio, derivations: [first, second], discrepancy })
}
