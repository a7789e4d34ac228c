//! The `verify`, `sharpness` and `report` commands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ckn_core::identities::{CheckKind, Fingerprint, Route};
use ckn_core::sharpness::{self, ExtremizerTable};
use ckn_core::{Error, IdentityReport, QuasiNorm, ScalarField, SharpnessScanResult, Verifier};

use crate::bundle::{self, ReportBundle};
use crate::config::{Check, ConfigError, GroupEntry, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "CKN_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Bundle { path: PathBuf, source: bundle::BundleError },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_CONFIG
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(RunConfig::parse(&text)?)
}

/// `--out`, then the environment variable, then the config's `output`.
pub fn resolve_out_dir(cli: Option<&Path>, config: &RunConfig) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(&config.run.output),
    }
}

/// Result of running a command before anything is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub bundle: ReportBundle,
    /// Hypothesis-guard rejections that the config did not expect.
    pub violations: Vec<String>,
    pub scan_tables: Vec<(String, SharpnessScanResult)>,
    pub extremizer_tables: Vec<(String, ExtremizerTable)>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if !self.violations.is_empty() {
            EXIT_HYPOTHESIS
        } else if self.bundle.all_pass() {
            EXIT_OK
        } else {
            EXIT_FAILURE
        }
    }
}

// ---------------------------------------------------------------------------
// verify

struct Cell<'a> {
    config: &'a RunConfig,
    group: &'a GroupEntry,
    verifier: Verifier,
    only: &'a [Check],
    reports: Vec<IdentityReport>,
    violations: Vec<String>,
}

impl Cell<'_> {
    fn enabled(&self, check: Check) -> bool {
        self.config.run.checks.contains(&check) && (self.only.is_empty() || self.only.contains(&check))
    }

    fn qn(&self) -> &QuasiNorm {
        self.verifier.quasi_norm()
    }

    fn fingerprint(&self, check: Check, field: &str, alpha: Option<f64>) -> Fingerprint {
        Fingerprint::new(check.name(), self.qn(), field, alpha, self.verifier.settings())
    }

    fn record(
        &mut self,
        check: Check,
        field: &ScalarField,
        alpha: Option<f64>,
        result: ckn_core::Result<IdentityReport>,
    ) {
        let expected = self.group.expect_reject.contains(&check);
        let report = match result {
            Ok(mut r) => {
                if expected {
                    r.pass = false;
                    r.flags.push("expected_rejection_missing".into());
                }
                r
            }
            Err(Error::HypothesisViolation { requirement, q }) => {
                let mut r = self.placeholder(check, field, alpha, format!("hypothesis: {requirement} (Q = {q})"));
                if expected {
                    r.pass = true;
                    r.flags.push("expected_rejection".into());
                } else {
                    r.flags.push("hypothesis_violation".into());
                    self.violations.push(format!(
                        "{} on group `{}` ({}), field `{}`: requires {requirement}, Q = {q}",
                        check.name(),
                        self.group.name,
                        self.qn().family(),
                        field.label()
                    ));
                }
                r
            }
            Err(e) => {
                let mut r = self.placeholder(check, field, alpha, format!("error: {e}"));
                r.flags.push("error".into());
                r
            }
        };
        self.reports.push(bundle::sanitize(report));
    }

    fn placeholder(&self, check: Check, field: &ScalarField, alpha: Option<f64>, note: String) -> IdentityReport {
        let kind = match check {
            Check::Ckn | Check::AlphaOne | Check::Uncertainty | Check::Schwarz => CheckKind::Inequality,
            _ => CheckKind::Identity,
        };
        let route = match check {
            Check::ProductRule | Check::Schwarz => Route::Pointwise,
            _ => self.verifier.route(field),
        };
        IdentityReport {
            check: check.name().into(),
            kind,
            route,
            lhs: 0.0,
            rhs: 0.0,
            residual: 0.0,
            relative_residual: 0.0,
            tolerance: 0.0,
            pass: false,
            ratio: None,
            strict: None,
            flags: vec![note],
            details: BTreeMap::new(),
            fingerprint: self.fingerprint(check, field.label(), alpha),
        }
    }

    fn run_field(&mut self, f: &ScalarField) {
        let alphas = self.config.alphas_for(self.group).to_vec();
        let want_remainder = self.enabled(Check::Remainder);
        let want_ckn = self.enabled(Check::Ckn);
        if want_remainder || want_ckn {
            match self.verifier.weighted_norm_triples(f, &alphas) {
                Ok(triples) => {
                    for t in &triples {
                        if want_remainder {
                            let r = Ok(self.verifier.remainder_report(f, t));
                            self.record(Check::Remainder, f, Some(t.alpha), r);
                        }
                        if want_ckn {
                            let r = self.verifier.ckn_report(f, t);
                            self.record(Check::Ckn, f, Some(t.alpha), r);
                        }
                    }
                }
                Err(e) => {
                    for &alpha in &alphas {
                        for (check, on) in [(Check::Remainder, want_remainder), (Check::Ckn, want_ckn)] {
                            if on {
                                self.record(check, f, Some(alpha), Err(e.clone()));
                            }
                        }
                    }
                }
            }
        }
        if self.enabled(Check::AlphaZero) {
            let r = self.verifier.verify_alpha_zero_identity(f);
            self.record(Check::AlphaZero, f, Some(0.0), r);
        }
        if self.enabled(Check::Ibp) {
            let r = self.verifier.verify_ibp_identity(f);
            self.record(Check::Ibp, f, None, r);
        }
        if self.enabled(Check::Euler) {
            let r = self.verifier.verify_euler_relation(f);
            self.record(Check::Euler, f, Some(-1.0), r);
        }
        if self.enabled(Check::Uncertainty) {
            let r = self.verifier.verify_uncertainty(f);
            self.record(Check::Uncertainty, f, None, r);
        }
        if self.enabled(Check::AlphaOne) {
            let r = self.verifier.verify_alpha_one_inequality(f);
            self.record(Check::AlphaOne, f, Some(1.0), r);
        }
        let schwarz = self.enabled(Check::Schwarz) && self.verifier.is_euclidean();
        if self.enabled(Check::ProductRule) || schwarz {
            let run = &self.config.run;
            match self.verifier.sample_points(f, run.samples, run.sample_seed) {
                Ok(samples) => {
                    for &alpha in &alphas {
                        if self.enabled(Check::ProductRule) {
                            let r = self.verifier.verify_product_rule(f, alpha, &samples);
                            self.record(Check::ProductRule, f, Some(alpha), r);
                        }
                        if schwarz {
                            let r = self.verifier.verify_schwarz_step(f, alpha, &samples);
                            self.record(Check::Schwarz, f, Some(alpha), r);
                        }
                    }
                }
                Err(e) => {
                    for &alpha in &alphas {
                        for (check, on) in
                            [(Check::ProductRule, self.enabled(Check::ProductRule)), (Check::Schwarz, schwarz)]
                        {
                            if on {
                                self.record(check, f, Some(alpha), Err(e.clone()));
                            }
                        }
                    }
                }
            }
        }
        let tensor_grid = self.qn().dim() <= 3;
        if self.enabled(Check::Polar) && tensor_grid && f.radial_form_in(self.qn()).is_some() {
            let r = self.verifier.verify_polar_consistency(f);
            self.record(Check::Polar, f, None, r);
        }
        if self.enabled(Check::Mc) && tensor_grid && f.support().is_some() {
            let r = self.verifier.verify_mc_agreement(f);
            self.record(Check::Mc, f, None, r);
        }
    }
}

/// Runs every enabled check over the configured matrix.
pub fn verify(config: &RunConfig, only: &[Check], timings: bool) -> Outcome {
    let mut bundle = ReportBundle::new(config.fingerprint());
    let mut violations = Vec::new();
    let total = Instant::now();
    for group in &config.groups {
        for &family in &group.norms {
            let start = Instant::now();
            let qn = RunConfig::quasi_norm(group, family).expect("validated at load");
            let verifier = Verifier::new(qn.clone(), config.quadrature.clone(), config.tolerance)
                .expect("settings validated at load");
            let mut cell = Cell { config, group, verifier, only, reports: Vec::new(), violations: Vec::new() };
            for entry in config.fields_for(group) {
                let f = config.build_field(&entry.name, &qn).expect("validated at load");
                cell.run_field(&f);
            }
            bundle.reports.append(&mut cell.reports);
            violations.append(&mut cell.violations);
            if timings {
                bundle.timings.insert(format!("verify/{}/{}", group.name, family), start.elapsed().as_secs_f64());
            }
        }
    }
    if timings {
        bundle.timings.insert("verify/total".into(), total.elapsed().as_secs_f64());
    }
    bundle.sort();
    Outcome { bundle, violations, scan_tables: Vec::new(), extremizer_tables: Vec::new() }
}

pub fn write_verify_outputs(outcome: &Outcome, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join("bundle.json");
    fs::write(&path, outcome.bundle.encode()).map_err(io_err(&path))?;
    let path = dir.join("reports.csv");
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    bundle::write_reports_csv(file, &outcome.bundle.reports).map_err(|source| CliError::Csv { path, source })?;
    Ok(())
}

// ---------------------------------------------------------------------------
// sharpness

/// Runs the configured Rayleigh scans and extremizer sequences.
pub fn sharpness(config: &RunConfig, timings: bool) -> Result<Outcome, CliError> {
    if config.scans.is_empty() && config.extremizers.is_empty() {
        return Err(CliError::Usage("config defines no [scan] or [extremizer] sections".into()));
    }
    let mut bundle = ReportBundle::new(config.fingerprint());
    let mut violations = Vec::new();
    let mut scans = Vec::new();
    let mut tables = Vec::new();
    for scan in &config.scans {
        let start = Instant::now();
        match sharpness::sharpness_scan(scan.q, scan.alpha, &scan.lengths, &config.eigen) {
            Ok(result) => {
                let result = bundle::sanitize_scan(result);
                let report = sharpness::scan_report(&scan.name, &result, &config.tolerance, &config.eigen);
                bundle.reports.push(bundle::sanitize(report));
                bundle.scans.push(result.clone());
                scans.push((scan.name.clone(), result));
            }
            Err(e) => {
                if let Error::HypothesisViolation { requirement, q } = &e {
                    violations.push(format!("scan `{}`: requires {requirement}, Q = {q}", scan.name));
                }
                let fingerprint = Fingerprint::from_parts(
                    "sharpness_scan",
                    &format!("Q={}", scan.q),
                    "radial",
                    &scan.name,
                    Some(scan.alpha),
                    &Default::default(),
                    &format!("{:?}", config.eigen),
                );
                bundle.reports.push(failure_report("sharpness_scan", Route::Eigensolve, fingerprint, &e));
            }
        }
        if timings {
            bundle.timings.insert(format!("scan/{}", scan.name), start.elapsed().as_secs_f64());
        }
    }
    for ex in &config.extremizers {
        let start = Instant::now();
        let group = config.group(&ex.group).expect("validated at load");
        let qn = RunConfig::quasi_norm(group, ex.norm).expect("validated at load");
        let verifier =
            Verifier::new(qn.clone(), config.quadrature.clone(), config.tolerance).expect("settings validated at load");
        match sharpness::extremizer_quotients(&verifier, ex.alpha, ex.taper, &ex.plateaus) {
            Ok(table) => {
                bundle.reports.push(bundle::sanitize(sharpness::extremizer_report(&verifier, &table)));
                tables.push((ex.name.clone(), table));
            }
            Err(e) => {
                if let Error::HypothesisViolation { requirement, q } = &e {
                    violations.push(format!("extremizer `{}`: requires {requirement}, Q = {q}", ex.name));
                }
                let fingerprint =
                    Fingerprint::new("extremizer_sequence", &qn, &ex.name, Some(ex.alpha), &config.quadrature);
                bundle.reports.push(failure_report("extremizer_sequence", Route::Radial, fingerprint, &e));
            }
        }
        if timings {
            bundle.timings.insert(format!("extremizer/{}", ex.name), start.elapsed().as_secs_f64());
        }
    }
    bundle.sort();
    Ok(Outcome { bundle, violations, scan_tables: scans, extremizer_tables: tables })
}

fn failure_report(check: &str, route: Route, fingerprint: Fingerprint, e: &Error) -> IdentityReport {
    let kind = if matches!(e, Error::HypothesisViolation { .. }) { "hypothesis_violation" } else { "error" };
    IdentityReport {
        check: check.into(),
        kind: CheckKind::Identity,
        route,
        lhs: 0.0,
        rhs: 0.0,
        residual: 0.0,
        relative_residual: 0.0,
        tolerance: 0.0,
        pass: false,
        ratio: None,
        strict: None,
        flags: vec![format!("error: {e}"), kind.into()],
        details: BTreeMap::new(),
        fingerprint,
    }
}

pub fn write_sharpness_outputs(outcome: &Outcome, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join("sharpness.json");
    fs::write(&path, outcome.bundle.encode()).map_err(io_err(&path))?;
    for (name, result) in &outcome.scan_tables {
        let path = dir.join(format!("scan_{name}.csv"));
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        bundle::write_scan_csv(file, result).map_err(|source| CliError::Csv { path, source })?;
    }
    for (name, table) in &outcome.extremizer_tables {
        let path = dir.join(format!("extremizer_{name}.csv"));
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        bundle::write_extremizer_csv(file, table).map_err(|source| CliError::Csv { path, source })?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// report

/// Parses bundles and renders the merged summary table.
pub fn report(paths: &[PathBuf]) -> Result<(String, bool), CliError> {
    if paths.is_empty() {
        return Err(CliError::Usage("report needs at least one bundle".into()));
    }
    let mut bundles = Vec::new();
    for path in paths {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let b = ReportBundle::decode(&text).map_err(|source| CliError::Bundle { path: path.clone(), source })?;
        bundles.push((path, b));
    }
    Ok(render_summary(&bundles))
}

fn render_summary(bundles: &[(&PathBuf, ReportBundle)]) -> (String, bool) {
    let mut out = String::new();
    let mut failures = Vec::new();
    let _ = writeln!(
        out,
        "{:<22} {:<14} {:<10} {:<16} {:>6} {:>11} {:>11} {:>11}  result",
        "check", "group", "norm", "field", "alpha", "residual", "rel_resid", "ratio"
    );
    let mut total = 0usize;
    for (path, b) in bundles {
        for r in &b.reports {
            total += 1;
            let f = &r.fingerprint;
            let alpha = f.alpha.map_or_else(|| "-".into(), |a| format!("{a}"));
            let ratio = r.ratio.map_or_else(|| "-".into(), |x| format!("{x:.5}"));
            let _ = writeln!(
                out,
                "{:<22} {:<14} {:<10} {:<16} {:>6} {:>11.3e} {:>11.3e} {:>11}  {}",
                r.check,
                truncate(&f.group, 14),
                truncate(&f.norm, 10),
                truncate(&f.field, 16),
                alpha,
                r.residual,
                r.relative_residual,
                ratio,
                if r.pass { "pass" } else { "FAIL" }
            );
            if !r.pass {
                failures.push(format!(
                    "{}  {} {} {} {} [{}]",
                    f.digest,
                    r.check,
                    f.group,
                    f.norm,
                    f.field,
                    path.display()
                ));
            }
        }
    }
    let _ = writeln!(out, "\n{} reports from {} bundle(s), {} failed", total, bundles.len(), failures.len());
    if !failures.is_empty() {
        let _ = writeln!(out, "failing fingerprints:");
        for f in &failures {
            let _ = writeln!(out, "  {f}");
        }
    }
    (out, failures.is_empty())
}

fn truncate(s: &str, width: usize) -> String {
    if s.chars().count() <= width {
        s.to_string()
    } else {
        let head: String = s.chars().take(width - 1).collect();
        format!("{head}~")
    }
}
