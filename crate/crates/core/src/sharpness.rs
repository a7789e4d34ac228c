//! The sharp constant `|Q - 2 - 2α| / 2` as the infimum of a radial Rayleigh
//! quotient, its non-attainment along minimiser and extremizer sequences,
//! and the scans that exhibit both.
//!
//! In the variable `t = ln r` both integrals of the quotient carry the weight
//! `e^{2μt}` with `μ = (Q - 2 - 2α)/2`, so the problem on `r ∈ [1, e^L]` is
//! `min ∫ w u'² / ∫ w u²` over `u` vanishing at `t = 0` and `t = L`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{extremizer_with_plateau, RadialProfile};
use crate::identities::{CheckKind, Fingerprint, IdentityReport, Route, Verifier};
use crate::numerics::{linear_fit, loglog_slope};
use crate::operators::radial_derivative;
use crate::quadrature::{integrate_radial_weighted, QuadratureSettings};
use crate::tolerance::ToleranceProfile;

/// Smallest admissible number of interior grid nodes.
pub const MIN_GRID_SIZE: usize = 16;

/// Largest grid for which the dense eigensolver is used as a fallback.
pub const DENSE_LIMIT: usize = 1024;

/// `[∫ φ'² r^{Q-1-2α} dr] / [∫ φ² r^{Q-3-2α} dr]` over the profile support.
pub fn rayleigh_quotient(
    profile: &dyn RadialProfile,
    q: f64,
    alpha: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let (a, b) = profile.support();
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(Error::InvalidProblem(format!("profile support must lie in (0, inf), got [{a}, {b}]")));
    }
    let [num, den] = integrate_radial_weighted(
        |r| {
            let (v, d) = (profile.value(r), profile.derivative(r));
            [d * d, v * v]
        },
        [q - 1.0 - 2.0 * alpha, q - 3.0 - 2.0 * alpha],
        a,
        b,
        settings,
    )?;
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}

/// Which eigensolver to use for [`minimize_rayleigh`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    /// Sturm bisection for the eigenvalue, shifted inverse iteration for the
    /// vector; dense fallback when the iteration stalls and the grid is small.
    #[default]
    Tridiagonal,
    /// Full symmetric eigendecomposition (grids up to [`DENSE_LIMIT`]).
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenSettings {
    /// Interior nodes of the log-variable grid.
    pub grid_size: usize,
    pub method: EigenMethod,
    pub max_iterations: usize,
    /// Convergence threshold on the max-norm change of the normalised eigenvector.
    pub vector_tolerance: f64,
    /// Half-width of the symmetric mid-interval window for the profile
    /// exponent fit, as a fraction of `L`.
    pub exponent_window: f64,
}

impl Default for EigenSettings {
    fn default() -> Self {
        Self {
            grid_size: 8192,
            method: EigenMethod::Tridiagonal,
            max_iterations: 50,
            vector_tolerance: 1e-12,
            exponent_window: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighProblem {
    pub q: f64,
    pub alpha: f64,
    /// `L = ln(b/a)`; the grid covers `r ∈ [1, e^L]`, which loses nothing
    /// because the quotient is dilation invariant.
    pub log_length: f64,
    pub grid_size: usize,
}

/// Symmetrically scaled tridiagonal operator `M^{-1/2} K M^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub diagonal: Vec<f64>,
    /// `off[i]` couples nodes `i` and `i + 1`.
    pub off: Vec<f64>,
    /// Lower neighbour entries assembled separately, for the symmetry check.
    pub off_lower: Vec<f64>,
    /// Diagonal of the weighted mass matrix.
    pub mass: Vec<f64>,
    pub step: f64,
}

impl TridiagonalOperator {
    /// `max |T_{i,i+1} - T_{i+1,i}| / max |T|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.diagonal.iter().map(|d| d.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        self.off.iter().zip(&self.off_lower).map(|(u, l)| (u - l).abs()).fold(0.0, f64::max) / scale
    }

    /// `T v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.diagonal.len();
        (0..n)
            .map(|i| {
                let mut s = self.diagonal[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.diagonal.len() {
            let coupling = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            q = self.diagonal[i] - x - if i == 0 { 0.0 } else { coupling / q };
            if q == 0.0 {
                q = -f64::EPSILON * (self.diagonal[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Solves `(T - σ I) y = b` by the Thomas algorithm.
    pub fn solve_shifted(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let n = self.diagonal.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diagonal[0] - sigma;
        c[0] = if n > 1 { self.off[0] / denom } else { 0.0 };
        d[0] = b[0] / denom;
        for i in 1..n {
            denom = self.diagonal[i] - sigma - self.off[i - 1] * c[i - 1];
            if i + 1 < n {
                c[i] = self.off[i] / denom;
            }
            d[i] = (b[i] - self.off[i - 1] * d[i - 1]) / denom;
        }
        let mut y = d;
        for i in (0..n.saturating_sub(1)).rev() {
            y[i] -= c[i] * y[i + 1];
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.diagonal.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diagonal[i]
            } else if j == i + 1 {
                self.off[i]
            } else if i == j + 1 {
                self.off_lower[j]
            } else {
                0.0
            }
        })
    }
}

impl RayleighProblem {
    pub fn new(q: f64, alpha: f64, log_length: f64, grid_size: usize) -> Result<Self> {
        if q < 3.0 {
            return Err(Error::HypothesisViolation { requirement: "Q >= 3", q });
        }
        if !(log_length > 0.0 && log_length.is_finite()) {
            return Err(Error::InvalidProblem(format!("log interval length must be positive, got {log_length}")));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidProblem(format!("alpha must be finite, got {alpha}")));
        }
        if grid_size < MIN_GRID_SIZE {
            return Err(Error::InvalidProblem(format!("grid size must be at least {MIN_GRID_SIZE}, got {grid_size}")));
        }
        Ok(Self { q, alpha, log_length, grid_size })
    }

    /// `μ = (Q - 2 - 2α)/2`.
    pub fn mu(&self) -> f64 {
        (self.q - 2.0 - 2.0 * self.alpha) / 2.0
    }

    /// `μ² + (π/L)²`, the continuum minimum.
    pub fn continuum_minimum(&self) -> f64 {
        let mu = self.mu();
        mu * mu + (std::f64::consts::PI / self.log_length).powi(2)
    }

    pub fn step(&self) -> f64 {
        self.log_length / (self.grid_size + 1) as f64
    }

    /// Weight `e^{2μ(t - L/2)}`; the shift keeps it in range and cancels in
    /// the quotient.
    fn weight(&self, t: f64) -> f64 {
        (2.0 * self.mu() * (t - self.log_length / 2.0)).exp()
    }

    /// Stiffness `K_ii = (w_{i-1/2} + w_{i+1/2})/h`, `K_{i,i+1} = -w_{i+1/2}/h`
    /// and mass `M_ii = w_i h`, scaled to `M^{-1/2} K M^{-1/2}`.
    pub fn assemble(&self) -> TridiagonalOperator {
        let n = self.grid_size;
        let h = self.step();
        let node = |i: usize| (i + 1) as f64 * h;
        let mass: Vec<f64> = (0..n).map(|i| self.weight(node(i)) * h).collect();
        let half = |i: usize| self.weight(node(i) + 0.5 * h);
        let diagonal = (0..n).map(|i| (self.weight(node(i) - 0.5 * h) + half(i)) / h / mass[i]).collect();
        let off = (0..n - 1).map(|i| -half(i) / h / mass[i].sqrt() / mass[i + 1].sqrt()).collect();
        let off_lower = (0..n - 1).map(|i| -half(i) / h / mass[i + 1].sqrt() / mass[i].sqrt()).collect();
        TridiagonalOperator { diagonal, off, off_lower, mass, step: h }
    }

    /// Smallest eigenvalue of the discrete operator in closed form,
    /// `(2 cosh(μh) - 2 cos(πh/L)) / h²`.
    pub fn discrete_minimum(&self) -> f64 {
        let h = self.step();
        let mu = self.mu();
        (2.0 * (mu * h).cosh() - 2.0 * (std::f64::consts::PI * h / self.log_length).cos()) / (h * h)
    }
}

/// Minimiser on the grid nodes `t_i = i h`, `r_i = e^{t_i}`, scaled to unit
/// maximum and positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizingProfile {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl MinimizingProfile {
    pub fn r(&self) -> impl Iterator<Item = f64> + '_ {
        self.t.iter().map(|t| t.exp())
    }

    /// Least-squares slope of `ln φ` against `ln r` over the window
    /// `|t - L/2| <= fraction · L`.
    pub fn mid_interval_exponent(&self, log_length: f64, fraction: f64) -> Option<f64> {
        let mid = log_length / 2.0;
        let half = fraction * log_length;
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .t
            .iter()
            .zip(&self.values)
            .filter(|(t, v)| (**t - mid).abs() <= half && **v > 0.0)
            .map(|(t, v)| (*t, v.ln()))
            .unzip();
        if xs.len() < 3 {
            return None;
        }
        linear_fit(&xs, &ys).map(|(_, slope)| slope)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighMinimum {
    pub problem: RayleighProblem,
    pub min_value: f64,
    pub profile: MinimizingProfile,
    pub method: EigenMethod,
    pub iterations: usize,
    /// `‖T v - λ v‖_∞` for the unit-max eigenvector.
    pub residual: f64,
    pub asymmetry: f64,
}

/// Smallest eigenvalue and eigenvector of the discretised Rayleigh problem.
pub fn minimize_rayleigh(problem: &RayleighProblem, settings: &EigenSettings) -> Result<RayleighMinimum> {
    let problem = RayleighProblem::new(problem.q, problem.alpha, problem.log_length, problem.grid_size)?;
    let op = problem.assemble();
    let asymmetry = op.asymmetry();
    let solved = match settings.method {
        EigenMethod::Dense => dense_smallest(&op),
        EigenMethod::Tridiagonal => match tridiagonal_smallest(&op, settings) {
            Ok(s) => Ok(s),
            Err(e @ Error::EigenNonConvergence { .. }) if op.diagonal.len() <= DENSE_LIMIT => {
                dense_smallest(&op).map_err(|_| e)
            }
            Err(e) => Err(e),
        },
    };
    let (lambda, vector, iterations, method) = solved?;
    let tv = op.apply(&vector);
    let residual = tv.iter().zip(&vector).map(|(a, v)| (a - lambda * v).abs()).fold(0.0, f64::max);
    // Back to φ-values: u = M^{-1/2} v.
    let mut values: Vec<f64> = vector.iter().zip(&op.mass).map(|(v, m)| v / m.sqrt()).collect();
    normalise(&mut values);
    let t = (0..op.diagonal.len()).map(|i| (i + 1) as f64 * op.step).collect();
    Ok(RayleighMinimum {
        problem,
        min_value: lambda,
        profile: MinimizingProfile { t, values },
        method,
        iterations,
        residual,
        asymmetry,
    })
}

fn normalise(v: &mut [f64]) {
    let vmax = v.iter().fold(0.0f64, |best, x| if x.abs() > best.abs() { *x } else { best });
    if vmax != 0.0 {
        v.iter_mut().for_each(|x| *x /= vmax);
    }
}

type Eigenpair = (f64, Vec<f64>, usize, EigenMethod);

/// Sturm bisection to full precision, then inverse iteration just below it.
fn tridiagonal_smallest(op: &TridiagonalOperator, settings: &EigenSettings) -> Result<Eigenpair> {
    let n = op.diagonal.len();
    let radius =
        |i: usize| (if i > 0 { op.off[i - 1].abs() } else { 0.0 }) + (if i + 1 < n { op.off[i].abs() } else { 0.0 });
    let mut lo = (0..n).map(|i| op.diagonal[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..n).map(|i| op.diagonal[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if op.count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let scale = op.diagonal.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let shift = lambda - 1e-10 * scale.max(1.0);
    let mut v: Vec<f64> = (0..n).map(|i| ((i + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).sin()).collect();
    normalise(&mut v);
    let mut last_change = f64::INFINITY;
    for it in 1..=settings.max_iterations {
        let mut y = op.solve_shifted(shift, &v);
        if y.iter().any(|x| !x.is_finite()) {
            break;
        }
        normalise(&mut y);
        last_change = y.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = y;
        if last_change <= settings.vector_tolerance {
            return Ok((lambda, v, it, EigenMethod::Tridiagonal));
        }
    }
    Err(Error::EigenNonConvergence { iterations: settings.max_iterations, last_change, shift })
}

fn dense_smallest(op: &TridiagonalOperator) -> Result<Eigenpair> {
    let n = op.diagonal.len();
    if n > DENSE_LIMIT {
        return Err(Error::InvalidProblem(format!("dense eigensolver limited to {DENSE_LIMIT} nodes, got {n}")));
    }
    let eig = SymmetricEigen::new(op.to_dense());
    let (k, lambda) =
        eig.eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, l)| if *l < best.1 { (i, *l) } else { best });
    let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    normalise(&mut v);
    Ok((lambda, v, 1, EigenMethod::Dense))
}

// ---------------------------------------------------------------------------
// Scans

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRecord {
    pub log_length: f64,
    pub min_quotient: f64,
    pub mu_squared: f64,
    /// `min_quotient - μ²`.
    pub gap: f64,
    /// Mid-interval power-law exponent of the minimiser.
    pub profile_exponent: Option<f64>,
    /// Gap decay exponent fitted on this and all shorter intervals.
    pub fitted_exponent_so_far: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessScanResult {
    pub q: f64,
    pub alpha: f64,
    pub mu: f64,
    pub grid_size: usize,
    pub records: Vec<ScanRecord>,
    /// `-d ln(gap) / d ln L` over all records.
    pub gap_decay_exponent: Option<f64>,
    /// Intercept of `min_quotient` against `L^{-p}` with `p` the decay exponent.
    pub extrapolated_limit: Option<f64>,
}

impl SharpnessScanResult {
    pub fn mu_squared(&self) -> f64 {
        self.mu * self.mu
    }

    /// `|profile exponent - (-μ)|` on the longest interval.
    pub fn final_exponent_error(&self) -> Option<f64> {
        self.records.last()?.profile_exponent.map(|e| (e + self.mu).abs())
    }
}

/// [`minimize_rayleigh`] over increasing `L`, with decay and limit fits.
pub fn sharpness_scan(q: f64, alpha: f64, lengths: &[f64], settings: &EigenSettings) -> Result<SharpnessScanResult> {
    if lengths.is_empty() {
        return Err(Error::InvalidProblem("empty length sequence".into()));
    }
    if lengths.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidProblem(format!("lengths must be strictly increasing, got {lengths:?}")));
    }
    let problems =
        lengths.iter().map(|l| RayleighProblem::new(q, alpha, *l, settings.grid_size)).collect::<Result<Vec<_>>>()?;
    let mu = problems[0].mu();
    let minima = problems.par_iter().map(|p| minimize_rayleigh(p, settings)).collect::<Result<Vec<_>>>()?;
    let mut records: Vec<ScanRecord> = Vec::with_capacity(minima.len());
    for (k, m) in minima.iter().enumerate() {
        let gap = m.min_value - mu * mu;
        let fitted = if k == 0 {
            None
        } else {
            let ls: Vec<f64> = lengths[..=k].to_vec();
            let gs: Vec<f64> = records.iter().map(|r| r.gap).chain([gap]).collect();
            decay_exponent(&ls, &gs)
        };
        records.push(ScanRecord {
            log_length: m.problem.log_length,
            min_quotient: m.min_value,
            mu_squared: mu * mu,
            gap,
            profile_exponent: m.profile.mid_interval_exponent(m.problem.log_length, settings.exponent_window),
            fitted_exponent_so_far: fitted,
        });
    }
    let gap_decay_exponent = records.last().and_then(|r| r.fitted_exponent_so_far);
    let extrapolated_limit = gap_decay_exponent.and_then(|p| {
        let xs: Vec<f64> = lengths.iter().map(|l| l.powf(-p)).collect();
        let ys: Vec<f64> = records.iter().map(|r| r.min_quotient).collect();
        linear_fit(&xs, &ys).map(|(intercept, _)| intercept)
    });
    Ok(SharpnessScanResult {
        q,
        alpha,
        mu,
        grid_size: settings.grid_size,
        records,
        gap_decay_exponent,
        extrapolated_limit,
    })
}

fn decay_exponent(lengths: &[f64], gaps: &[f64]) -> Option<f64> {
    if gaps.iter().any(|g| !(*g > 0.0)) {
        return None;
    }
    loglog_slope(lengths, gaps).map(|s| -s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremizerRow {
    pub plateau: f64,
    pub field: String,
    pub rho: f64,
    /// `C / B`.
    pub normalized_remainder: f64,
    pub remainder_relative_residual: f64,
    /// Max over plateau samples of `| |x|^{-α} Rf + μ f/|x|^{α+1} |` relative
    /// to `|μ f/|x|^{α+1}|`.
    pub plateau_equation_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremizerTable {
    pub alpha: f64,
    pub mu: f64,
    pub taper: f64,
    pub rows: Vec<ExtremizerRow>,
}

impl ExtremizerTable {
    pub fn rho_strictly_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].rho > w[0].rho)
    }

    pub fn remainder_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].normalized_remainder < w[0].normalized_remainder)
    }

    pub fn rho_below_one(&self) -> bool {
        self.rows.iter().all(|r| r.rho < 1.0)
    }
}

/// Plateau samples per extremizer member for the pointwise equation check.
const PLATEAU_SAMPLES: usize = 64;

/// `ρ` and `C/B` along extremizer members with increasing plateaus.
pub fn extremizer_quotients(verifier: &Verifier, alpha: f64, taper: f64, plateaus: &[f64]) -> Result<ExtremizerTable> {
    if plateaus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidProblem(format!("plateau lengths must be strictly increasing, got {plateaus:?}")));
    }
    let qn = verifier.quasi_norm();
    let q = verifier.homogeneous_dimension();
    let mu = (q - 2.0 - 2.0 * alpha) / 2.0;
    let rows = plateaus
        .iter()
        .map(|&plateau| {
            let f = extremizer_with_plateau(qn, mu, plateau, taper)?;
            let t = verifier.weighted_norm_triple(&f, alpha)?;
            let rem = verifier.remainder_report(&f, &t);
            let ckn = verifier.ckn_report(&f, &t)?;
            let inner = (-plateau / 2.0).exp();
            let outer = (plateau / 2.0).exp();
            let pts = qn.sample_annulus(inner, outer, PLATEAU_SAMPLES, 0, verifier.tolerances().exclusion_band);
            let mut worst = 0.0f64;
            for x in &pts {
                let r = qn.eval(x);
                let value = f.value(x);
                let term = value * (mu * r.powf(-alpha - 1.0));
                let lhs = radial_derivative(qn, &f, x)? * r.powf(-alpha) + term;
                let scale = term.norm().max(verifier.tolerances().relative_floor);
                worst = worst.max(lhs.norm() / scale);
            }
            Ok(ExtremizerRow {
                plateau,
                field: f.label().to_string(),
                rho: ckn.ratio.unwrap_or(0.0),
                normalized_remainder: if t.b > 0.0 { t.c / t.b } else { 0.0 },
                remainder_relative_residual: rem.relative_residual,
                plateau_equation_residual: worst,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExtremizerTable { alpha, mu, taper, rows })
}

// ---------------------------------------------------------------------------
// Reports

/// Pass/fail report for a scan. It passes when every minimum is at least
/// `μ² - eigen_floor`, minima strictly decrease with `L`, every gap is
/// positive, the decay exponent is within `decay_exponent` of 2, the
/// extrapolated limit is within `sharp_limit` of `μ²`, and the minimiser's
/// mid-interval exponent on the longest interval is within
/// `profile_exponent` of `-μ`. Failed conditions are listed in `flags`.
pub fn scan_report(
    name: &str,
    scan: &SharpnessScanResult,
    tolerances: &ToleranceProfile,
    eigen: &EigenSettings,
) -> IdentityReport {
    let mu2 = scan.mu_squared();
    let mut flags = Vec::new();
    if scan.records.iter().any(|r| r.min_quotient < mu2 - tolerances.eigen_floor) {
        flags.push("below_sharp_constant".to_string());
    }
    if scan.records.windows(2).any(|w| !(w[1].min_quotient < w[0].min_quotient)) {
        flags.push("not_decreasing".to_string());
    }
    if scan.records.iter().any(|r| !(r.gap > 0.0)) {
        flags.push("non_positive_gap".to_string());
    }
    match scan.gap_decay_exponent {
        Some(p) if (p - 2.0).abs() <= tolerances.decay_exponent => {}
        _ => flags.push("decay_exponent".to_string()),
    }
    match scan.final_exponent_error() {
        Some(e) if e <= tolerances.profile_exponent => {}
        _ => flags.push("profile_exponent".to_string()),
    }
    let limit = scan.extrapolated_limit.unwrap_or(f64::INFINITY);
    let residual = (limit - mu2).abs();
    if !(residual <= tolerances.sharp_limit) {
        flags.push("extrapolated_limit".to_string());
    }
    let mut details = BTreeMap::from([("mu".to_string(), scan.mu), ("grid_size".to_string(), scan.grid_size as f64)]);
    if let Some(p) = scan.gap_decay_exponent {
        details.insert("gap_decay_exponent".into(), p);
    }
    if let Some(e) = scan.final_exponent_error() {
        details.insert("final_profile_exponent_error".into(), e);
    }
    for r in &scan.records {
        details.insert(format!("min_quotient[L={}]", r.log_length), r.min_quotient);
    }
    let lengths: Vec<String> = scan.records.iter().map(|r| r.log_length.to_string()).collect();
    let fingerprint = Fingerprint::from_parts(
        "sharpness_scan",
        &format!("Q={}", scan.q),
        "radial",
        &format!("{name}:rayleigh(L={})", lengths.join(",")),
        Some(scan.alpha),
        &QuadratureSettings::default(),
        &format!("{eigen:?}"),
    );
    IdentityReport {
        check: "sharpness_scan".into(),
        kind: CheckKind::Identity,
        route: Route::Eigensolve,
        lhs: if limit.is_finite() { limit } else { 0.0 },
        rhs: mu2,
        residual: if residual.is_finite() { residual } else { f64::MAX },
        relative_residual: if residual.is_finite() { residual } else { f64::MAX },
        tolerance: tolerances.sharp_limit,
        pass: flags.is_empty(),
        ratio: None,
        strict: None,
        flags,
        details,
        fingerprint,
    }
}

/// Pass/fail report for an extremizer sequence. It passes when `ρ` is
/// strictly increasing and below 1, `C/B` is strictly decreasing, every
/// member satisfies the remainder identity and the first-order equation
/// holds on each plateau.
pub fn extremizer_report(verifier: &Verifier, table: &ExtremizerTable) -> IdentityReport {
    let tol = verifier.tolerances();
    let mut flags = Vec::new();
    if !table.rho_strictly_increasing() {
        flags.push("rho_not_increasing".to_string());
    }
    if !table.rho_below_one() {
        flags.push("rho_not_below_one".to_string());
    }
    if !table.remainder_strictly_decreasing() {
        flags.push("remainder_not_decreasing".to_string());
    }
    if table.rows.iter().any(|r| !(r.remainder_relative_residual <= tol.radial)) {
        flags.push("remainder_identity".to_string());
    }
    if table.rows.iter().any(|r| !(r.plateau_equation_residual <= tol.plateau_equation)) {
        flags.push("plateau_equation".to_string());
    }
    let mut details = BTreeMap::from([("mu".to_string(), table.mu), ("taper".to_string(), table.taper)]);
    for r in &table.rows {
        details.insert(format!("rho[plateau={}]", r.plateau), r.rho);
        details.insert(format!("remainder_over_b[plateau={}]", r.plateau), r.normalized_remainder);
    }
    let last = table.rows.last().map(|r| r.rho).unwrap_or(0.0);
    let plateaus: Vec<String> = table.rows.iter().map(|r| r.plateau.to_string()).collect();
    IdentityReport {
        check: "extremizer_sequence".into(),
        kind: CheckKind::Inequality,
        route: Route::Radial,
        lhs: last,
        rhs: 1.0,
        residual: (last - 1.0).max(0.0),
        relative_residual: (last - 1.0).max(0.0),
        tolerance: tol.inequality,
        pass: flags.is_empty(),
        ratio: Some(last),
        strict: Some(last < 1.0 - tol.strict_margin),
        flags,
        details,
        fingerprint: Fingerprint::new(
            "extremizer_sequence",
            verifier.quasi_norm(),
            &format!("extremizer(taper={},plateaus={})", table.taper, plateaus.join(",")),
            Some(table.alpha),
            verifier.settings(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{BumpProfile, LogPlateauProfile, SinLogProfile};
    use crate::group::QuasiNorm;

    fn settings(grid: usize) -> EigenSettings {
        EigenSettings { grid_size: grid, ..EigenSettings::default() }
    }

    #[test]
    fn quotient_of_sin_log_profile_is_closed_form() {
        let s = QuadratureSettings::default();
        for (q, alpha, l) in [(3.0, 0.0, 8.0), (6.0, 1.0, 16.0), (4.0, -0.3, 4.0)] {
            let mu: f64 = (q - 2.0 - 2.0 * alpha) / 2.0;
            let p = SinLogProfile::new(mu, 1.0, l).unwrap();
            let v = rayleigh_quotient(&p, q, alpha, &s).unwrap();
            let exact = mu * mu + (std::f64::consts::PI / l).powi(2);
            assert!((v - exact).abs() <= 1e-10 * exact, "{v} vs {exact}");
        }
    }

    #[test]
    fn quotient_exceeds_sharp_constant() {
        let s = QuadratureSettings::default();
        let bump = BumpProfile::new(2.0, 1.0).unwrap();
        assert!(rayleigh_quotient(&bump, 3.0, 0.0, &s).unwrap() > 0.25);
        let mut gaps = Vec::new();
        for plateau in [2.0, 4.0, 8.0, 16.0] {
            let half: f64 = plateau / 2.0 + 1.0;
            let p = LogPlateauProfile::new(0.5, (-half).exp(), half.exp(), 1.0).unwrap();
            gaps.push(rayleigh_quotient(&p, 3.0, 0.0, &s).unwrap() - 0.25);
        }
        // The taper energy is fixed while the plateau mass grows linearly.
        for w in gaps.windows(2) {
            assert!(w[1] > 0.0 && w[1] < 0.75 * w[0], "{gaps:?}");
        }
    }

    #[test]
    fn invalid_problems_rejected() {
        assert!(matches!(RayleighProblem::new(2.0, 0.0, 4.0, 64), Err(Error::HypothesisViolation { .. })));
        assert!(RayleighProblem::new(3.0, 0.0, 0.0, 64).is_err());
        assert!(RayleighProblem::new(3.0, 0.0, 4.0, 8).is_err());
        assert!(sharpness_scan(3.0, 0.0, &[8.0, 4.0], &settings(64)).is_err());
    }

    #[test]
    fn assembled_operator_is_symmetric_and_matches_closed_form() {
        let p = RayleighProblem::new(6.0, 1.0, 16.0, 512).unwrap();
        let op = p.assemble();
        assert!(op.asymmetry() <= 1e-12);
        let h = p.step();
        let mu = p.mu();
        for (d, o) in op.diagonal.iter().zip(&op.off) {
            assert!((d * h * h - 2.0 * (mu * h).cosh()).abs() <= 1e-12);
            assert!((o * h * h + 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn tridiagonal_solver_matches_dense_and_closed_form() {
        for (q, alpha, l) in [(3.0, 0.0, 8.0), (4.0, 0.0, 4.0), (6.0, 1.0, 16.0)] {
            let p = RayleighProblem::new(q, alpha, l, 512).unwrap();
            let tri = minimize_rayleigh(&p, &settings(512)).unwrap();
            let dense = minimize_rayleigh(&p, &EigenSettings { method: EigenMethod::Dense, ..settings(512) }).unwrap();
            assert_eq!(tri.method, EigenMethod::Tridiagonal);
            let exact = p.discrete_minimum();
            assert!((tri.min_value - exact).abs() <= 1e-9 * exact, "{} vs {exact}", tri.min_value);
            assert!((dense.min_value - exact).abs() <= 1e-9 * exact);
            let diff =
                tri.profile.values.iter().zip(&dense.profile.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(diff <= 1e-8, "{diff}");
            assert!((tri.min_value - p.continuum_minimum()).abs() <= 1e-3);
        }
    }

    #[test]
    fn inverse_power_iteration_oracle() {
        let p = RayleighProblem::new(3.0, 0.0, 4.0, 256).unwrap();
        let op = p.assemble();
        let mut v = vec![1.0; 256];
        let mut lambda = 0.0;
        for _ in 0..200 {
            let y = op.solve_shifted(0.0, &v);
            let norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dot: f64 = y.iter().zip(&v).map(|(a, b)| a * b).sum();
            let vnorm: f64 = v.iter().map(|x| x * x).sum();
            lambda = vnorm / dot;
            v = y.iter().map(|x| x / norm).collect();
        }
        let m = minimize_rayleigh(&p, &settings(256)).unwrap();
        assert!((m.min_value - lambda).abs() <= 1e-8 * lambda, "{} vs {lambda}", m.min_value);
    }

    #[test]
    fn spec_examples() {
        let p = RayleighProblem::new(3.0, 0.0, 8.0, 512).unwrap();
        let m = minimize_rayleigh(&p, &settings(512)).unwrap();
        assert!((m.min_value - 0.404213).abs() <= 1e-3);
        let p = RayleighProblem::new(6.0, 1.0, 16.0, 8192).unwrap();
        let m = minimize_rayleigh(&p, &EigenSettings::default()).unwrap();
        assert!((m.min_value - 1.038553).abs() <= 1e-3);
        assert!(m.residual <= 1e-6 * m.min_value.max(1.0), "{}", m.residual);
    }

    #[test]
    fn grid_doubling_converges_at_default_grid() {
        let s = EigenSettings::default();
        for (q, alpha) in [(3.0, 0.0), (6.0, 1.0)] {
            let base = minimize_rayleigh(&RayleighProblem::new(q, alpha, 16.0, s.grid_size).unwrap(), &s).unwrap();
            let fine =
                minimize_rayleigh(&RayleighProblem::new(q, alpha, 16.0, 2 * s.grid_size + 1).unwrap(), &s).unwrap();
            assert!((base.min_value - fine.min_value).abs() < 1e-6);
        }
    }

    #[test]
    fn minimum_above_sharp_constant_and_decreasing() {
        let s = settings(2048);
        for (q, alpha) in [(3.0, 0.0), (4.0, 0.0), (6.0, 1.0), (5.0, 2.0)] {
            let scan = sharpness_scan(q, alpha, &[2.0, 4.0, 8.0, 16.0, 32.0], &s).unwrap();
            let mu2 = scan.mu_squared();
            for w in scan.records.windows(2) {
                assert!(w[1].min_quotient < w[0].min_quotient);
            }
            for r in &scan.records {
                assert!(r.min_quotient >= mu2 - 1e-9 && r.gap > 0.0);
            }
        }
    }

    #[test]
    fn scan_fits_decay_limit_and_profile_exponent() {
        let s = EigenSettings::default();
        for (q, alpha, mu2) in [(3.0, 0.0, 0.25), (4.0, 0.0, 1.0), (6.0, 1.0, 1.0)] {
            let scan = sharpness_scan(q, alpha, &[4.0, 8.0, 16.0], &s).unwrap();
            assert_eq!(scan.mu_squared(), mu2);
            let p = scan.gap_decay_exponent.unwrap();
            assert!((p - 2.0).abs() <= 0.2, "{p}");
            assert!((scan.extrapolated_limit.unwrap() - mu2).abs() <= 1e-3);
            assert!(scan.final_exponent_error().unwrap() <= 0.05);
            assert!(scan.records[0].fitted_exponent_so_far.is_none());
            let report = scan_report("t", &scan, &ToleranceProfile::default(), &s);
            assert!(report.pass, "{report:?}");
            for r in &scan.records {
                let exact = RayleighProblem::new(q, alpha, r.log_length, s.grid_size).unwrap().continuum_minimum();
                assert!((r.min_quotient - exact).abs() <= 1e-3);
            }
        }
    }

    #[test]
    fn negative_mu_profile_exponent_targets_plus_abs_mu() {
        let scan = sharpness_scan(3.0, 1.5, &[4.0, 8.0, 16.0], &EigenSettings::default()).unwrap();
        assert_eq!(scan.mu, -1.0);
        let e = scan.records.last().unwrap().profile_exponent.unwrap();
        assert!((e - 1.0).abs() <= 0.05, "{e}");
    }

    #[test]
    fn extremizer_table_heisenberg() {
        let v =
            Verifier::new(QuasiNorm::koranyi(), QuadratureSettings::default(), ToleranceProfile::default()).unwrap();
        let t = extremizer_quotients(&v, 0.0, 1.0, &[4.0, 8.0, 16.0]).unwrap();
        assert!(extremizer_report(&v, &t).pass);
        assert!(t.rho_strictly_increasing() && t.rho_below_one() && t.remainder_strictly_decreasing(), "{t:?}");
        for r in &t.rows {
            assert!(r.plateau_equation_residual <= 1e-8, "{r:?}");
            assert!(r.remainder_relative_residual <= 1e-8, "{r:?}");
        }
    }
}
