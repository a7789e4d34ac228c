//! Report bundles (JSON) and the plot-ready CSV tables.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use ckn_core::sharpness::ExtremizerTable;
use ckn_core::{IdentityReport, SharpnessScanResult};
use serde::{Deserialize, Serialize};

/// Tool version recorded in every bundle.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportBundle {
    pub version: String,
    /// SHA-256 of the canonical config.
    pub config_fingerprint: String,
    pub reports: Vec<IdentityReport>,
    pub scans: Vec<SharpnessScanResult>,
    /// Wall-clock seconds per matrix cell; empty unless requested.
    pub timings: BTreeMap<String, f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("invalid bundle: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported bundle version `{0}`")]
    Version(String),
}

impl ReportBundle {
    pub fn new(config_fingerprint: String) -> Self {
        Self {
            version: VERSION.to_string(),
            config_fingerprint,
            reports: Vec::new(),
            scans: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    /// Orders reports by group, norm, field, check, alpha and digest.
    pub fn sort(&mut self) {
        self.reports.sort_by(compare_reports);
    }

    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityReport> {
        self.reports.iter().filter(|r| !r.pass)
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn encode(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundles contain only finite numbers");
        s.push('\n');
        s
    }

    /// Strict decode: unknown fields, missing fields and wrong types are errors.
    pub fn decode(text: &str) -> Result<Self, BundleError> {
        let bundle: ReportBundle = serde_json::from_str(text)?;
        if bundle.version.is_empty() {
            return Err(BundleError::Version(bundle.version));
        }
        Ok(bundle)
    }
}

pub fn compare_reports(a: &IdentityReport, b: &IdentityReport) -> Ordering {
    let (fa, fb) = (&a.fingerprint, &b.fingerprint);
    fa.group
        .cmp(&fb.group)
        .then_with(|| fa.norm.cmp(&fb.norm))
        .then_with(|| fa.field.cmp(&fb.field))
        .then_with(|| a.check.cmp(&b.check))
        .then_with(|| match (fa.alpha, fb.alpha) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (x, y) => x.is_some().cmp(&y.is_some()),
        })
        .then_with(|| fa.digest.cmp(&fb.digest))
}

/// Replaces non-finite numbers (which JSON cannot carry) with `±f64::MAX`
/// and marks the report failed.
pub fn sanitize(mut report: IdentityReport) -> IdentityReport {
    let mut bad = false;
    let mut fix = |v: &mut f64| {
        if !v.is_finite() {
            bad = true;
            *v = if *v < 0.0 { -f64::MAX } else { f64::MAX };
        }
    };
    fix(&mut report.lhs);
    fix(&mut report.rhs);
    fix(&mut report.residual);
    fix(&mut report.relative_residual);
    fix(&mut report.tolerance);
    if let Some(r) = report.ratio.as_mut() {
        fix(r);
    }
    if let Some(a) = report.fingerprint.alpha.as_mut() {
        fix(a);
    }
    report.details.values_mut().for_each(&mut fix);
    if bad {
        report.pass = false;
        report.flags.push("non_finite".into());
    }
    report
}

pub fn sanitize_scan(mut scan: SharpnessScanResult) -> SharpnessScanResult {
    let clean = |v: Option<f64>| v.filter(|x| x.is_finite());
    scan.gap_decay_exponent = clean(scan.gap_decay_exponent);
    scan.extrapolated_limit = clean(scan.extrapolated_limit);
    for r in &mut scan.records {
        r.profile_exponent = clean(r.profile_exponent);
        r.fitted_exponent_so_far = clean(r.fitted_exponent_so_far);
    }
    scan
}

// ---------------------------------------------------------------------------
// CSV

/// Seventeen significant digits in scientific notation; locale independent.
pub fn csv_number(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

fn csv_option(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".into(), csv_number)
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

pub const REPORT_COLUMNS: [&str; 18] = [
    "group",
    "norm",
    "field",
    "check",
    "alpha",
    "kind",
    "route",
    "lhs",
    "rhs",
    "residual",
    "relative_residual",
    "tolerance",
    "pass",
    "ratio",
    "strict",
    "flags",
    "digest",
    "settings",
];

pub fn write_reports_csv<W: Write>(out: W, reports: &[IdentityReport]) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for r in reports {
        let f = &r.fingerprint;
        let s = &f.settings;
        w.write_record([
            f.group.clone(),
            f.norm.clone(),
            f.field.clone(),
            r.check.clone(),
            f.alpha.map_or_else(String::new, csv_number),
            enum_name(&r.kind),
            enum_name(&r.route),
            csv_number(r.lhs),
            csv_number(r.rhs),
            csv_number(r.residual),
            csv_number(r.relative_residual),
            csv_number(r.tolerance),
            r.pass.to_string(),
            r.ratio.map_or_else(String::new, csv_number),
            r.strict.map_or_else(String::new, |b| b.to_string()),
            r.flags.join(";"),
            f.digest.clone(),
            format!(
                "panels={};nodes={};resolution={};mc_samples={};mc_seed={}",
                s.panels, s.nodes_per_panel, s.cartesian_resolution, s.mc_samples, s.mc_seed
            ),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn enum_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

pub const SCAN_COLUMNS: [&str; 5] = ["L", "min_quotient", "mu_squared", "gap", "fitted_exponent_so_far"];

pub fn write_scan_csv<W: Write>(out: W, scan: &SharpnessScanResult) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(SCAN_COLUMNS)?;
    for r in &scan.records {
        w.write_record([
            csv_number(r.log_length),
            csv_number(r.min_quotient),
            csv_number(r.mu_squared),
            csv_number(r.gap),
            csv_option(r.fitted_exponent_so_far),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const EXTREMIZER_COLUMNS: [&str; 5] =
    ["plateau", "rho", "normalized_remainder", "remainder_relative_residual", "plateau_equation_residual"];

pub fn write_extremizer_csv<W: Write>(out: W, table: &ExtremizerTable) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(EXTREMIZER_COLUMNS)?;
    for r in &table.rows {
        w.write_record([
            csv_number(r.plateau),
            csv_number(r.rho),
            csv_number(r.normalized_remainder),
            csv_number(r.remainder_relative_residual),
            csv_number(r.plateau_equation_residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ckn_core::identities::{CheckKind, Fingerprint, Route};
    use ckn_core::QuadratureSettings;

    fn report(group: &str, check: &str, alpha: Option<f64>, value: f64) -> IdentityReport {
        IdentityReport {
            check: check.into(),
            kind: CheckKind::Identity,
            route: Route::Radial,
            lhs: value,
            rhs: value,
            residual: 0.0,
            relative_residual: 0.0,
            tolerance: 1e-8,
            pass: true,
            ratio: None,
            strict: None,
            flags: vec![],
            details: BTreeMap::from([("a".into(), value)]),
            fingerprint: Fingerprint::from_parts(check, group, "max", "f", alpha, &QuadratureSettings::default(), ""),
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut b = ReportBundle::new("abc".into());
        b.reports.push(report("g", "c", Some(-0.3), 0.1 + 0.2));
        b.reports.push(report("g", "c", None, 1e-300));
        let text = b.encode();
        assert_eq!(ReportBundle::decode(&text).unwrap(), b);
        assert_eq!(ReportBundle::decode(&text).unwrap().encode(), text);
    }

    #[test]
    fn decoded_floats_are_bit_exact() {
        let mut b = ReportBundle::new(String::new());
        let mut x = 0.8668502690270543f64;
        for i in 0..2000 {
            x = (x * 3.9 * (1.0 - x)).abs();
            b.reports.push(report("g", "c", Some(x), x * 10f64.powi(i % 40 - 20)));
        }
        let decoded = ReportBundle::decode(&b.encode()).unwrap();
        for (a, d) in b.reports.iter().zip(&decoded.reports) {
            assert_eq!(a.lhs.to_bits(), d.lhs.to_bits());
        }
    }

    #[test]
    fn decode_rejects_unknown_and_missing_fields() {
        let b = ReportBundle::new("abc".into());
        let mut v: serde_json::Value = serde_json::from_str(&b.encode()).unwrap();
        v["extra"] = 1.into();
        assert!(ReportBundle::decode(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&b.encode()).unwrap();
        v.as_object_mut().unwrap().remove("timings");
        assert!(ReportBundle::decode(&v.to_string()).is_err());
        assert!(ReportBundle::decode("").is_err());
        assert!(ReportBundle::decode("[]").is_err());
    }

    #[test]
    fn sort_is_canonical() {
        let mut b = ReportBundle::new(String::new());
        b.reports.push(report("b", "c", Some(1.0), 1.0));
        b.reports.push(report("a", "c", Some(0.5), 1.0));
        b.reports.push(report("a", "c", Some(-1.0), 1.0));
        b.reports.push(report("a", "c", None, 1.0));
        b.sort();
        let order: Vec<_> = b.reports.iter().map(|r| (r.fingerprint.group.clone(), r.fingerprint.alpha)).collect();
        assert_eq!(
            order,
            vec![("a".into(), None), ("a".into(), Some(-1.0)), ("a".into(), Some(0.5)), ("b".into(), Some(1.0))]
        );
    }

    #[test]
    fn sanitize_marks_non_finite() {
        let mut r = report("g", "c", None, 1.0);
        r.lhs = f64::NAN;
        r.details.insert("x".into(), f64::NEG_INFINITY);
        let r = sanitize(r);
        assert!(!r.pass);
        assert_eq!(r.lhs, f64::MAX);
        assert_eq!(r.details["x"], -f64::MAX);
        assert!(r.flags.contains(&"non_finite".to_string()));
        let mut b = ReportBundle::new(String::new());
        b.reports.push(r);
        assert!(ReportBundle::decode(&b.encode()).is_ok());
    }

    #[test]
    fn csv_numbers_have_seventeen_digits() {
        assert_eq!(csv_number(0.1), "1.0000000000000001e-1");
        assert_eq!(csv_number(-2.0), "-2.0000000000000000e0");
        for v in [0.1, 1.0 / 3.0, 6.02214076e23, -1e-300] {
            assert_eq!(csv_number(v).parse::<f64>().unwrap(), v);
        }
        let mut buf = Vec::new();
        write_reports_csv(&mut buf, &[report("g,1", "c", Some(0.0), 1.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("group,norm,field,check,alpha"));
        assert!(text.contains("\"g,1\""));
        assert!(!text.contains('\r'));
    }
}
