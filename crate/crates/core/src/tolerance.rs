use serde::{Deserialize, Serialize};

/// Caller-owned tolerances for every check in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceProfile {
    /// Pointwise operator identities (Euler lemma residuals).
    pub pointwise: f64,
    /// Smallest step of the finite-difference order-fit window.
    pub fd_min_step: f64,
    /// Largest step of the finite-difference order-fit window.
    pub fd_max_step: f64,
    /// Minimum observed convergence order for central differences.
    pub min_fd_order: f64,
    /// Max relative error of analytic partials against central differences at `h = 1e-5`.
    pub gradient: f64,
    /// Integral identities evaluated by 1D radial quadrature.
    pub radial: f64,
    /// Integral identities evaluated on a Cartesian tensor grid.
    pub cartesian: f64,
    /// Allowed excess of an inequality ratio above 1.
    pub inequality: f64,
    /// A ratio below `1 - strict_margin` counts as strict.
    pub strict_margin: f64,
    /// Pointwise slack in `|Rf| <= |∇f|`.
    pub schwarz: f64,
    /// Pointwise product-rule residual (finite-difference limited).
    pub product_rule: f64,
    /// Samples with some `|x_k| < band·|x|^{ν_k}` are skipped.
    pub exclusion_band: f64,
    /// Floor for relative-residual denominators.
    pub relative_floor: f64,
    /// Extrapolated Rayleigh minimum against `μ²` (absolute).
    pub sharp_limit: f64,
    /// Gap decay exponent against 2 (absolute).
    pub decay_exponent: f64,
    /// Mid-interval minimiser exponent against `-μ` (absolute).
    pub profile_exponent: f64,
    /// Allowed undershoot of a discrete minimum below `μ²`.
    pub eigen_floor: f64,
    /// Pointwise residual of the first-order equation on extremizer plateaus.
    pub plateau_equation: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self {
            pointwise: 1e-10,
            fd_min_step: 1e-6,
            fd_max_step: 1e-2,
            min_fd_order: 1.8,
            gradient: 1e-6,
            radial: 1e-8,
            cartesian: 1e-4,
            inequality: 1e-8,
            strict_margin: 1e-10,
            schwarz: 1e-12,
            product_rule: 1e-6,
            exclusion_band: 1e-8,
            relative_floor: 1e-30,
            sharp_limit: 1e-3,
            decay_exponent: 0.2,
            profile_exponent: 0.05,
            eigen_floor: 1e-9,
            plateau_equation: 1e-8,
        }
    }
}
