//! Run configuration: a flat sectioned text format with `key = value`
//! entries, its typed model, the canonical form and the config fingerprint.
//!
//! ```text
//! # comment
//! [run]
//! checks = remainder_identity, ckn_inequality
//! alpha = -1, 0, 0.7
//!
//! [group heisenberg]
//! nu = 1, 1, 2
//! norms = koranyi, psum:2
//! expect_reject = alpha_one_inequality
//!
//! [field bump]
//! family = radial_bump
//! center = 2
//! width = 1
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use ckn_core::fields::{self, Phase, ScalarField};
use ckn_core::{EigenSettings, GroupSpec, NormFamily, QuadratureSettings, QuasiNorm, ToleranceProfile};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// A config error anchored to a 1-based line (0 when no single line applies).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    pub fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config line {}: {}", self.line, self.message)
        }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

// ---------------------------------------------------------------------------
// Checks

/// Every check the `verify` command can run, named as in the reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    Remainder,
    AlphaZero,
    Ibp,
    Euler,
    ProductRule,
    Ckn,
    Uncertainty,
    AlphaOne,
    Schwarz,
    Polar,
    Mc,
}

impl Check {
    pub const ALL: [Check; 11] = [
        Check::Remainder,
        Check::AlphaZero,
        Check::Ibp,
        Check::Euler,
        Check::ProductRule,
        Check::Ckn,
        Check::Uncertainty,
        Check::AlphaOne,
        Check::Schwarz,
        Check::Polar,
        Check::Mc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Remainder => "remainder_identity",
            Check::AlphaZero => "alpha_zero_identity",
            Check::Ibp => "ibp_identity",
            Check::Euler => "euler_relation",
            Check::ProductRule => "product_rule",
            Check::Ckn => "ckn_inequality",
            Check::Uncertainty => "uncertainty",
            Check::AlphaOne => "alpha_one_inequality",
            Check::Schwarz => "schwarz_step",
            Check::Polar => "polar_consistency",
            Check::Mc => "mc_agreement",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Check::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let known: Vec<_> = Check::ALL.iter().map(|c| c.name()).collect();
            format!("unknown check `{s}` (known: {})", known.join(", "))
        })
    }
}

/// Parses a norm spec: `psum:<p>`, `max`, `koranyi` or `euclidean`.
pub fn parse_norm_family(s: &str) -> std::result::Result<NormFamily, String> {
    let s = s.trim();
    match s {
        "max" => return Ok(NormFamily::Max),
        "koranyi" => return Ok(NormFamily::Koranyi),
        "euclidean" => return Ok(NormFamily::Euclidean),
        _ => {}
    }
    let p = s
        .strip_prefix("psum:")
        .ok_or_else(|| format!("unknown norm `{s}` (expected psum:<p>, max, koranyi or euclidean)"))?;
    let p: f64 = p.trim().parse().map_err(|_| format!("invalid p-sum exponent `{p}`"))?;
    if !(p.is_finite() && p > 0.0) {
        return Err(format!("p-sum exponent must be positive and finite, got {p}"));
    }
    Ok(NormFamily::PSum { p })
}

/// Inverse of [`parse_norm_family`].
pub fn format_norm_family(family: &NormFamily) -> String {
    match family {
        NormFamily::PSum { p } => format!("psum:{p}"),
        NormFamily::Max => "max".into(),
        NormFamily::Koranyi => "koranyi".into(),
        NormFamily::Euclidean => "euclidean".into(),
    }
}

// ---------------------------------------------------------------------------
// Model

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub checks: Vec<Check>,
    pub alpha: Vec<f64>,
    /// Pointwise sample count for the product-rule and Schwarz checks.
    pub samples: usize,
    pub sample_seed: u64,
    pub output: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            checks: Check::ALL.to_vec(),
            alpha: vec![-1.0, -0.3, 0.0, 0.7, 1.0],
            samples: 1000,
            sample_seed: 7,
            output: "out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupEntry {
    pub name: String,
    pub nu: Vec<f64>,
    pub norms: Vec<NormFamily>,
    /// Overrides the run-level alpha grid.
    pub alpha: Option<Vec<f64>>,
    /// Restricts the fields run on this group; all fields when absent.
    pub fields: Option<Vec<String>>,
    /// Checks whose hypothesis guard is expected to reject this group.
    pub expect_reject: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSpec {
    /// `θ = scale · |x|` in the norm of the matrix cell.
    Radial { scale: f64 },
    /// `θ = Σ c_k x_k`.
    Linear { coefficients: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldFamily {
    RadialBump {
        center: f64,
        width: f64,
    },
    PhaseWrap {
        base: String,
        phase: PhaseSpec,
    },
    AngularProduct {
        center: f64,
        width: f64,
        axis: usize,
    },
    /// Extremizer member for the weight exponent `alpha`, plateau centred at `|x| = 1`.
    Extremizer {
        alpha: f64,
        plateau: f64,
        taper: f64,
    },
    Zero {
        inner: f64,
        outer: f64,
    },
}

impl FieldFamily {
    fn family_name(&self) -> &'static str {
        match self {
            FieldFamily::RadialBump { .. } => "radial_bump",
            FieldFamily::PhaseWrap { .. } => "phase_wrap",
            FieldFamily::AngularProduct { .. } => "angular_product",
            FieldFamily::Extremizer { .. } => "extremizer",
            FieldFamily::Zero { .. } => "zero",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldEntry {
    pub name: String,
    pub family: FieldFamily,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub name: String,
    pub q: f64,
    pub alpha: f64,
    pub lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremizerEntry {
    pub name: String,
    pub group: String,
    pub norm: NormFamily,
    pub alpha: f64,
    pub taper: f64,
    pub plateaus: Vec<f64>,
}

/// A parsed and validated configuration. Named sections are kept sorted by name.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub run: RunSection,
    pub quadrature: QuadratureSettings,
    pub tolerance: ToleranceProfile,
    pub eigen: EigenSettings,
    pub groups: Vec<GroupEntry>,
    pub fields: Vec<FieldEntry>,
    pub scans: Vec<ScanEntry>,
    pub extremizers: Vec<ExtremizerEntry>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let sections = lex(text)?;
        let mut run = None;
        let mut quadrature = None;
        let mut tolerance = None;
        let mut eigen = None;
        let mut groups = Vec::new();
        let mut fields = Vec::new();
        let mut scans = Vec::new();
        let mut extremizers = Vec::new();
        let mut group_lines = BTreeMap::new();
        let mut field_lines = BTreeMap::new();
        for section in &sections {
            match section.kind.as_str() {
                "run" => run = Some(parse_run(section)?),
                "quadrature" => {
                    let q: QuadratureSettings = parse_serde_section(section)?;
                    q.validate().map_err(|e| ConfigError::at(section.line, e.to_string()))?;
                    quadrature = Some(q);
                }
                "tolerance" => tolerance = Some(parse_serde_section(section)?),
                "eigen" => eigen = Some(parse_serde_section(section)?),
                "group" => {
                    let g = parse_group(section)?;
                    group_lines.insert(g.name.clone(), section.line);
                    groups.push(g);
                }
                "field" => {
                    let f = parse_field(section)?;
                    field_lines.insert(f.name.clone(), section.line);
                    fields.push(f);
                }
                "scan" => scans.push(parse_scan(section)?),
                "extremizer" => extremizers.push(parse_extremizer(section)?),
                other => unreachable!("lexer admitted section kind `{other}`"),
            }
        }
        groups.sort_by(|a, b| a.name.cmp(&b.name));
        fields.sort_by(|a, b| a.name.cmp(&b.name));
        scans.sort_by(|a, b| a.name.cmp(&b.name));
        extremizers.sort_by(|a, b| a.name.cmp(&b.name));
        let config = RunConfig {
            run: run.unwrap_or_default(),
            quadrature: quadrature.unwrap_or_default(),
            tolerance: tolerance.unwrap_or_default(),
            eigen: eigen.unwrap_or_default(),
            groups,
            fields,
            scans,
            extremizers,
        };
        config.validate(&group_lines, &field_lines, &sections)?;
        Ok(config)
    }

    pub fn group(&self, name: &str) -> Option<&GroupEntry> {
        self.groups.iter().find(|g| g.name == name)
    }

    pub fn field(&self, name: &str) -> Option<&FieldEntry> {
        self.fields.iter().find(|f| f.name == name)
    }

    /// Fields run on `group`, in name order.
    pub fn fields_for(&self, group: &GroupEntry) -> Vec<&FieldEntry> {
        match &group.fields {
            Some(names) => self.fields.iter().filter(|f| names.contains(&f.name)).collect(),
            None => self.fields.iter().collect(),
        }
    }

    /// Alpha grid for `group`.
    pub fn alphas_for<'a>(&'a self, group: &'a GroupEntry) -> &'a [f64] {
        group.alpha.as_deref().unwrap_or(&self.run.alpha)
    }

    /// Instantiates field `name` for the quasi-norm `qn`, labelled with its name.
    pub fn build_field(&self, name: &str, qn: &QuasiNorm) -> ckn_core::Result<ScalarField> {
        let entry =
            self.field(name).ok_or_else(|| ckn_core::Error::InvalidField(format!("no field named `{name}`")))?;
        let f = match &entry.family {
            FieldFamily::RadialBump { center, width } => fields::radial_bump(qn, *center, *width)?,
            FieldFamily::PhaseWrap { base, phase } => {
                let base = self.build_field(base, qn)?;
                let phase = match phase {
                    PhaseSpec::Radial { scale } => Phase::Radial { norm: qn.clone(), scale: *scale },
                    PhaseSpec::Linear { coefficients } => Phase::Linear { coefficients: coefficients.clone() },
                };
                fields::complex_phase_wrap(&base, phase)?
            }
            FieldFamily::AngularProduct { center, width, axis } => fields::angular_product(qn, *center, *width, *axis)?,
            FieldFamily::Extremizer { alpha, plateau, taper } => {
                let mu = (qn.spec().homogeneous_dimension() - 2.0 - 2.0 * alpha) / 2.0;
                fields::extremizer_with_plateau(qn, mu, *plateau, *taper)?
            }
            FieldFamily::Zero { inner, outer } => fields::zero(qn, *inner, *outer)?,
        };
        Ok(f.with_label(name))
    }

    /// Builds the quasi-norm for one matrix cell.
    pub fn quasi_norm(group: &GroupEntry, family: NormFamily) -> ckn_core::Result<QuasiNorm> {
        QuasiNorm::new(GroupSpec::new(group.nu.clone())?, family)
    }

    fn validate(
        &self,
        group_lines: &BTreeMap<String, usize>,
        field_lines: &BTreeMap<String, usize>,
        sections: &[RawSection],
    ) -> Result<()> {
        for field in &self.fields {
            if let FieldFamily::PhaseWrap { base, .. } = &field.family {
                let line = field_lines[&field.name];
                match self.field(base) {
                    None => {
                        return Err(ConfigError::at(
                            line,
                            format!("field `{}`: unknown base field `{base}`", field.name),
                        ))
                    }
                    Some(FieldEntry { family: FieldFamily::PhaseWrap { .. }, .. }) => {
                        return Err(ConfigError::at(
                            line,
                            format!("field `{}`: base `{base}` must not itself be phase-wrapped", field.name),
                        ))
                    }
                    Some(_) => {}
                }
            }
        }
        for group in &self.groups {
            let line = group_lines[&group.name];
            if let Some(names) = &group.fields {
                for name in names {
                    if self.field(name).is_none() {
                        return Err(ConfigError::at(line, format!("group `{}`: unknown field `{name}`", group.name)));
                    }
                }
            }
            for family in &group.norms {
                let qn = Self::quasi_norm(group, *family)
                    .map_err(|e| ConfigError::at(line, format!("group `{}`: {e}", group.name)))?;
                for field in self.fields_for(group) {
                    self.build_field(&field.name, &qn).map_err(|e| {
                        ConfigError::at(
                            field_lines[&field.name],
                            format!("field `{}` on group `{}` ({}): {e}", field.name, group.name, family),
                        )
                    })?;
                }
            }
        }
        for ex in &self.extremizers {
            let line = sections
                .iter()
                .find(|s| s.kind == "extremizer" && s.name.as_deref() == Some(ex.name.as_str()))
                .map_or(0, |s| s.line);
            let group = self.group(&ex.group).ok_or_else(|| {
                ConfigError::at(line, format!("extremizer `{}`: unknown group `{}`", ex.name, ex.group))
            })?;
            Self::quasi_norm(group, ex.norm)
                .map_err(|e| ConfigError::at(line, format!("extremizer `{}`: {e}", ex.name)))?;
        }
        Ok(())
    }

    /// The canonical text form: every key with its effective value, fixed
    /// sections first, named sections sorted by name.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let r = &self.run;
        out.push_str("[run]\n");
        kv(&mut out, "checks", &join(r.checks.iter().map(|c| c.name().to_string())));
        kv(&mut out, "alpha", &fmt_list(&r.alpha));
        kv(&mut out, "samples", &r.samples.to_string());
        kv(&mut out, "sample_seed", &r.sample_seed.to_string());
        kv(&mut out, "output", &r.output);
        emit_serde_section(&mut out, "quadrature", &self.quadrature);
        emit_serde_section(&mut out, "tolerance", &self.tolerance);
        emit_serde_section(&mut out, "eigen", &self.eigen);
        for g in &self.groups {
            let _ = write!(out, "\n[group {}]\n", g.name);
            kv(&mut out, "nu", &fmt_list(&g.nu));
            kv(&mut out, "norms", &join(g.norms.iter().map(format_norm_family)));
            if let Some(alpha) = &g.alpha {
                kv(&mut out, "alpha", &fmt_list(alpha));
            }
            if let Some(fields) = &g.fields {
                kv(&mut out, "fields", &join(fields.iter().cloned()));
            }
            kv(&mut out, "expect_reject", &join(g.expect_reject.iter().map(|c| c.name().to_string())));
        }
        for f in &self.fields {
            let _ = write!(out, "\n[field {}]\n", f.name);
            kv(&mut out, "family", f.family.family_name());
            match &f.family {
                FieldFamily::RadialBump { center, width } => {
                    kv(&mut out, "center", &fmt_f64(*center));
                    kv(&mut out, "width", &fmt_f64(*width));
                }
                FieldFamily::PhaseWrap { base, phase } => {
                    kv(&mut out, "base", base);
                    match phase {
                        PhaseSpec::Radial { scale } => {
                            kv(&mut out, "phase", "radial");
                            kv(&mut out, "phase_scale", &fmt_f64(*scale));
                        }
                        PhaseSpec::Linear { coefficients } => {
                            kv(&mut out, "phase", "linear");
                            kv(&mut out, "coefficients", &fmt_list(coefficients));
                        }
                    }
                }
                FieldFamily::AngularProduct { center, width, axis } => {
                    kv(&mut out, "center", &fmt_f64(*center));
                    kv(&mut out, "width", &fmt_f64(*width));
                    kv(&mut out, "axis", &axis.to_string());
                }
                FieldFamily::Extremizer { alpha, plateau, taper } => {
                    kv(&mut out, "alpha", &fmt_f64(*alpha));
                    kv(&mut out, "plateau", &fmt_f64(*plateau));
                    kv(&mut out, "taper", &fmt_f64(*taper));
                }
                FieldFamily::Zero { inner, outer } => {
                    kv(&mut out, "inner", &fmt_f64(*inner));
                    kv(&mut out, "outer", &fmt_f64(*outer));
                }
            }
        }
        for s in &self.scans {
            let _ = write!(out, "\n[scan {}]\n", s.name);
            kv(&mut out, "q", &fmt_f64(s.q));
            kv(&mut out, "alpha", &fmt_f64(s.alpha));
            kv(&mut out, "lengths", &fmt_list(&s.lengths));
        }
        for e in &self.extremizers {
            let _ = write!(out, "\n[extremizer {}]\n", e.name);
            kv(&mut out, "group", &e.group);
            kv(&mut out, "norm", &format_norm_family(&e.norm));
            kv(&mut out, "alpha", &fmt_f64(e.alpha));
            kv(&mut out, "taper", &fmt_f64(e.taper));
            kv(&mut out, "plateaus", &fmt_list(&e.plateaus));
        }
        out
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self> {
        RunConfig::parse(s)
    }
}

// ---------------------------------------------------------------------------
// Lexing

#[derive(Debug, Clone)]
struct RawEntry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone)]
struct RawSection {
    kind: String,
    name: Option<String>,
    line: usize,
    entries: Vec<RawEntry>,
}

const FIXED_SECTIONS: [&str; 4] = ["run", "quadrature", "tolerance", "eigen"];
const NAMED_SECTIONS: [&str; 4] = ["group", "field", "scan", "extremizer"];

fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn lex(text: &str) -> Result<Vec<RawSection>> {
    let mut sections: Vec<RawSection> = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split_once('#').map_or(raw, |(head, _)| head).trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let inner = rest.strip_suffix(']').ok_or_else(|| ConfigError::at(line, "section header is missing `]`"))?;
            let mut parts = inner.split_whitespace();
            let kind = parts.next().ok_or_else(|| ConfigError::at(line, "empty section header"))?;
            let name = parts.next();
            if parts.next().is_some() {
                return Err(ConfigError::at(line, format!("malformed section header `[{inner}]`")));
            }
            let name = if FIXED_SECTIONS.contains(&kind) {
                if let Some(name) = name {
                    return Err(ConfigError::at(line, format!("section [{kind}] takes no name, got `{name}`")));
                }
                None
            } else if NAMED_SECTIONS.contains(&kind) {
                let name = name.ok_or_else(|| ConfigError::at(line, format!("section [{kind}] needs a name")))?;
                if !is_identifier(name) {
                    return Err(ConfigError::at(line, format!("invalid section name `{name}`")));
                }
                Some(name.to_string())
            } else {
                return Err(ConfigError::at(line, format!("unknown section kind `{kind}`")));
            };
            if !seen.insert((kind.to_string(), name.clone())) {
                return Err(ConfigError::at(line, format!("duplicate section `[{inner}]`")));
            }
            sections.push(RawSection { kind: kind.to_string(), name, line, entries: Vec::new() });
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            ConfigError::at(line, format!("expected `key = value` or a section header, got `{content}`"))
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !is_identifier(key) {
            return Err(ConfigError::at(line, format!("invalid key `{key}`")));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| ConfigError::at(line, format!("key `{key}` appears before any section")))?;
        if section.entries.iter().any(|e| e.key == key) {
            return Err(ConfigError::at(line, format!("duplicate key `{key}`")));
        }
        section.entries.push(RawEntry { key: key.to_string(), value: value.to_string(), line });
    }
    Ok(sections)
}

/// Hands out a section's entries by key; leftover keys are errors.
struct Entries<'a> {
    section: &'a RawSection,
    used: Vec<bool>,
}

impl<'a> Entries<'a> {
    fn new(section: &'a RawSection) -> Self {
        Self { section, used: vec![false; section.entries.len()] }
    }

    fn take(&mut self, key: &str) -> Option<&'a RawEntry> {
        let i = self.section.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some(&self.section.entries[i])
    }

    fn require(&mut self, key: &str) -> Result<&'a RawEntry> {
        self.take(key).ok_or_else(|| {
            ConfigError::at(self.section.line, format!("{} is missing required key `{key}`", self.header()))
        })
    }

    fn header(&self) -> String {
        match &self.section.name {
            Some(name) => format!("[{} {name}]", self.section.kind),
            None => format!("[{}]", self.section.kind),
        }
    }

    fn finish(self) -> Result<()> {
        match self.used.iter().position(|u| !u) {
            Some(i) => {
                let e = &self.section.entries[i];
                Err(ConfigError::at(e.line, format!("unknown key `{}` in {}", e.key, self.header())))
            }
            None => Ok(()),
        }
    }
}

// ---------------------------------------------------------------------------
// Values

fn parse_f64(e: &RawEntry) -> Result<f64> {
    parse_f64_str(&e.value).map_err(|m| ConfigError::at(e.line, format!("`{}`: {m}", e.key)))
}

fn parse_f64_str(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("expected a number, got `{}`", s.trim()))?;
    if !v.is_finite() {
        return Err(format!("expected a finite number, got `{}`", s.trim()));
    }
    Ok(v)
}

fn parse_positive(e: &RawEntry) -> Result<f64> {
    let v = parse_f64(e)?;
    if !(v > 0.0) {
        return Err(ConfigError::at(e.line, format!("`{}` must be positive, got {v}", e.key)));
    }
    Ok(v)
}

fn parse_unsigned<T: FromStr>(e: &RawEntry) -> Result<T> {
    e.value.parse().map_err(|_| {
        ConfigError::at(e.line, format!("`{}`: expected a non-negative integer, got `{}`", e.key, e.value))
    })
}

fn split_list(s: &str) -> Vec<&str> {
    if s.trim().is_empty() {
        Vec::new()
    } else {
        s.split(',').map(str::trim).collect()
    }
}

fn parse_f64_list(e: &RawEntry) -> Result<Vec<f64>> {
    split_list(&e.value)
        .into_iter()
        .map(|item| parse_f64_str(item).map_err(|m| ConfigError::at(e.line, format!("`{}`: {m}", e.key))))
        .collect()
}

fn parse_nonempty_f64_list(e: &RawEntry) -> Result<Vec<f64>> {
    let v = parse_f64_list(e)?;
    if v.is_empty() {
        return Err(ConfigError::at(e.line, format!("`{}` must not be empty", e.key)));
    }
    Ok(v)
}

fn parse_name_list(e: &RawEntry) -> Result<Vec<String>> {
    let names: Vec<String> = split_list(&e.value).into_iter().map(str::to_string).collect();
    if let Some(bad) = names.iter().find(|n| !is_identifier(n)) {
        return Err(ConfigError::at(e.line, format!("`{}`: invalid name `{bad}`", e.key)));
    }
    let mut seen = BTreeSet::new();
    if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(ConfigError::at(e.line, format!("`{}`: `{dup}` listed twice", e.key)));
    }
    Ok(names)
}

fn parse_check_list(e: &RawEntry) -> Result<Vec<Check>> {
    let mut checks = parse_name_list(e)?
        .iter()
        .map(|n| n.parse::<Check>().map_err(|m| ConfigError::at(e.line, m)))
        .collect::<Result<Vec<_>>>()?;
    checks.sort();
    Ok(checks)
}

fn strictly_increasing(e: &RawEntry, v: &[f64]) -> Result<()> {
    if v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ConfigError::at(e.line, format!("`{}` must be strictly increasing", e.key)));
    }
    Ok(())
}

/// Shortest round-trip decimal form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_list(v: &[f64]) -> String {
    join(v.iter().map(|x| fmt_f64(*x)))
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(", ")
}

fn kv(out: &mut String, key: &str, value: &str) {
    if value.is_empty() {
        let _ = writeln!(out, "{key} =");
    } else {
        let _ = writeln!(out, "{key} = {value}");
    }
}

// ---------------------------------------------------------------------------
// Sections

fn parse_run(section: &RawSection) -> Result<RunSection> {
    let mut entries = Entries::new(section);
    let mut run = RunSection::default();
    if let Some(e) = entries.take("checks") {
        run.checks = parse_check_list(e)?;
    }
    if let Some(e) = entries.take("alpha") {
        run.alpha = parse_f64_list(e)?;
    }
    if let Some(e) = entries.take("samples") {
        run.samples = parse_unsigned(e)?;
        if run.samples == 0 {
            return Err(ConfigError::at(e.line, "`samples` must be at least 1"));
        }
    }
    if let Some(e) = entries.take("sample_seed") {
        run.sample_seed = parse_unsigned(e)?;
    }
    if let Some(e) = entries.take("output") {
        if e.value.is_empty() || e.value.contains(',') {
            return Err(ConfigError::at(e.line, "`output` must be a single non-empty path"));
        }
        run.output = e.value.clone();
    }
    entries.finish()?;
    Ok(run)
}

/// Maps a section onto a serde struct, one key at a time so that type
/// errors point at the offending line.
fn parse_serde_section<T: Serialize + DeserializeOwned + Default>(section: &RawSection) -> Result<T> {
    let header = format!("[{}]", section.kind);
    let serde_json::Value::Object(mut map) =
        serde_json::to_value(T::default()).expect("settings serialize to a JSON object")
    else {
        unreachable!("settings serialize to a JSON object");
    };
    let mut value = T::default();
    for e in &section.entries {
        if !map.contains_key(&e.key) {
            return Err(ConfigError::at(e.line, format!("unknown key `{}` in {header}", e.key)));
        }
        map.insert(e.key.clone(), scalar_json(&e.value));
        value = serde_json::from_value(serde_json::Value::Object(map.clone()))
            .map_err(|err| ConfigError::at(e.line, format!("`{}`: {err}", e.key)))?;
    }
    Ok(value)
}

fn scalar_json(s: &str) -> serde_json::Value {
    if let Ok(u) = s.parse::<u64>() {
        return u.into();
    }
    if let Ok(i) = s.parse::<i64>() {
        return i.into();
    }
    if let Ok(v) = s.parse::<f64>() {
        if v.is_finite() && v.fract() == 0.0 && v >= 0.0 && v < u64::MAX as f64 {
            return (v as u64).into();
        }
        if let Some(n) = serde_json::Number::from_f64(v) {
            return serde_json::Value::Number(n);
        }
    }
    match s {
        "true" => true.into(),
        "false" => false.into(),
        _ => s.into(),
    }
}

fn emit_serde_section<T: Serialize>(out: &mut String, header: &str, value: &T) {
    let _ = write!(out, "\n[{header}]\n");
    let serde_json::Value::Object(map) = serde_json::to_value(value).expect("settings serialize") else {
        unreachable!("settings serialize to a JSON object");
    };
    for (key, v) in map {
        let text = match v {
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        };
        kv(out, &key, &text);
    }
}

fn parse_group(section: &RawSection) -> Result<GroupEntry> {
    let name = section.name.clone().expect("named section");
    let mut entries = Entries::new(section);
    let e = entries.require("nu")?;
    let nu = parse_nonempty_f64_list(e)?;
    GroupSpec::new(nu.clone()).map_err(|err| ConfigError::at(e.line, err.to_string()))?;
    let e = entries.require("norms")?;
    let norms = split_list(&e.value)
        .into_iter()
        .map(|s| parse_norm_family(s).map_err(|m| ConfigError::at(e.line, m)))
        .collect::<Result<Vec<_>>>()?;
    if norms.is_empty() {
        return Err(ConfigError::at(e.line, "`norms` must not be empty"));
    }
    let alpha = entries.take("alpha").map(parse_f64_list).transpose()?;
    let fields = entries.take("fields").map(parse_name_list).transpose()?;
    let expect_reject = entries.take("expect_reject").map(parse_check_list).transpose()?.unwrap_or_default();
    entries.finish()?;
    Ok(GroupEntry { name, nu, norms, alpha, fields, expect_reject })
}

fn parse_field(section: &RawSection) -> Result<FieldEntry> {
    let name = section.name.clone().expect("named section");
    let mut entries = Entries::new(section);
    let family_entry = entries.require("family")?;
    let get = |entries: &mut Entries, key: &str, default: f64| {
        entries.take(key).map(parse_f64).transpose().map(|v| v.unwrap_or(default))
    };
    let family = match family_entry.value.as_str() {
        "radial_bump" => FieldFamily::RadialBump {
            center: get(&mut entries, "center", 2.0)?,
            width: get(&mut entries, "width", 1.0)?,
        },
        "phase_wrap" => {
            let base = entries.require("base")?.value.clone();
            let phase = match entries.take("phase").map(|e| (e.value.as_str(), e.line)) {
                None | Some(("radial", _)) => PhaseSpec::Radial { scale: get(&mut entries, "phase_scale", 1.0)? },
                Some(("linear", _)) => PhaseSpec::Linear {
                    coefficients: parse_nonempty_f64_list(entries.require("coefficients")?)?,
                },
                Some((other, line)) => {
                    return Err(ConfigError::at(line, format!("unknown phase `{other}` (expected radial or linear)")))
                }
            };
            FieldFamily::PhaseWrap { base, phase }
        }
        "angular_product" => FieldFamily::AngularProduct {
            center: get(&mut entries, "center", 2.0)?,
            width: get(&mut entries, "width", 1.0)?,
            axis: entries.take("axis").map(parse_unsigned).transpose()?.unwrap_or(0),
        },
        "extremizer" => FieldFamily::Extremizer {
            alpha: get(&mut entries, "alpha", 0.0)?,
            plateau: get(&mut entries, "plateau", 4.0)?,
            taper: get(&mut entries, "taper", 1.0)?,
        },
        "zero" => FieldFamily::Zero {
            inner: get(&mut entries, "inner", 1.0)?,
            outer: get(&mut entries, "outer", 2.0)?,
        },
        other => {
            return Err(ConfigError::at(
                family_entry.line,
                format!("unknown field family `{other}` (expected radial_bump, phase_wrap, angular_product, extremizer or zero)"),
            ))
        }
    };
    entries.finish()?;
    Ok(FieldEntry { name, family })
}

fn parse_scan(section: &RawSection) -> Result<ScanEntry> {
    let name = section.name.clone().expect("named section");
    let mut entries = Entries::new(section);
    let q = parse_f64(entries.require("q")?)?;
    let alpha = parse_f64(entries.require("alpha")?)?;
    let e = entries.require("lengths")?;
    let lengths = parse_nonempty_f64_list(e)?;
    if lengths.iter().any(|l| !(*l > 0.0)) {
        return Err(ConfigError::at(e.line, "`lengths` must be positive"));
    }
    strictly_increasing(e, &lengths)?;
    entries.finish()?;
    Ok(ScanEntry { name, q, alpha, lengths })
}

fn parse_extremizer(section: &RawSection) -> Result<ExtremizerEntry> {
    let name = section.name.clone().expect("named section");
    let mut entries = Entries::new(section);
    let group = entries.require("group")?.value.clone();
    let e = entries.require("norm")?;
    let norm = parse_norm_family(&e.value).map_err(|m| ConfigError::at(e.line, m))?;
    let alpha = entries.take("alpha").map(parse_f64).transpose()?.unwrap_or(0.0);
    let taper = entries.take("taper").map(parse_positive).transpose()?.unwrap_or(1.0);
    let e = entries.require("plateaus")?;
    let plateaus = parse_nonempty_f64_list(e)?;
    if plateaus.iter().any(|p| !(*p > 0.0)) {
        return Err(ConfigError::at(e.line, "`plateaus` must be positive"));
    }
    strictly_increasing(e, &plateaus)?;
    entries.finish()?;
    Ok(ExtremizerEntry { name, group, norm, alpha, taper, plateaus })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# sample
[run]
checks = ckn_inequality, remainder_identity
alpha = 0, -0.3
[quadrature]
panels = 32
[group heis]
nu = 1, 1, 2
norms = koranyi, psum:4
expect_reject = alpha_one_inequality
[field bump]
family = radial_bump
[field wrap]
family = phase_wrap
base = bump
phase = linear
coefficients = 0.5, 0, 0
[scan s]
q = 3
alpha = 0
lengths = 4, 8
";

    #[test]
    fn parses_and_round_trips() {
        let c = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.run.checks, vec![Check::Remainder, Check::Ckn]);
        assert_eq!(c.quadrature.panels, 32);
        assert_eq!(c.groups[0].norms, vec![NormFamily::Koranyi, NormFamily::PSum { p: 4.0 }]);
        let canon = c.canonical();
        let again = RunConfig::parse(&canon).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.canonical(), canon);
        assert_eq!(again.fingerprint(), c.fingerprint());
    }

    #[test]
    fn fingerprint_ignores_layout_but_not_values() {
        let a = RunConfig::parse(SAMPLE).unwrap();
        let spaced = SAMPLE.replace(" = ", "=").replace("# sample", "\n\n# other comment\n");
        assert_eq!(RunConfig::parse(&spaced).unwrap().fingerprint(), a.fingerprint());
        let changed = SAMPLE.replace("panels = 32", "panels = 33");
        assert_ne!(RunConfig::parse(&changed).unwrap().fingerprint(), a.fingerprint());
    }

    #[test]
    fn errors_are_line_anchored() {
        let cases = [
            ("[run]\nbogus = 1\n", 2, "unknown key"),
            ("[run]\nalpha = 1\nalpha = 2\n", 3, "duplicate key"),
            ("[run]\n[run]\n", 2, "duplicate section"),
            ("alpha = 1\n", 1, "before any section"),
            ("[wat]\n", 1, "unknown section"),
            ("[quadrature]\npanels = many\n", 2, "panels"),
            ("[quadrature]\nwhatever = 1\n", 2, "unknown key"),
            ("[group g]\nnu = 1, x\nnorms = max\n", 2, "number"),
            ("[group g]\nnu = 1, 1, 1\nnorms = koranyi\n", 1, "koranyi"),
            ("[group g]\nnu = 1\nnorms = psum:-1\n", 3, "positive"),
            ("[scan s]\nq = 3\nalpha = 0\nlengths =\n", 4, "empty"),
            ("[scan s]\nq = 3\nalpha = 0\nlengths = 8, 4\n", 4, "increasing"),
            ("[field f]\nfamily = radial_bump\nplateau = 3\n", 3, "unknown key"),
            ("[field f]\nfamily = nope\n", 2, "unknown field family"),
            ("[run]\nchecks = nope\n", 2, "unknown check"),
            ("[run\n", 1, "missing"),
        ];
        for (text, line, needle) in cases {
            let err = RunConfig::parse(text).unwrap_err();
            assert_eq!(err.line, line, "{text:?}: {err}");
            assert!(err.to_string().contains(needle), "{text:?}: {err}");
        }
    }

    #[test]
    fn load_time_validation_of_combinations() {
        let text = "[group g]\nnu = 1, 1\nnorms = max\n[field f]\nfamily = angular_product\naxis = 5\n";
        let err = RunConfig::parse(text).unwrap_err();
        assert_eq!(err.line, 4);
        let text = "[field w]\nfamily = phase_wrap\nbase = missing\n";
        assert!(RunConfig::parse(text).unwrap_err().message.contains("unknown base"));
        let text = "[extremizer e]\ngroup = nowhere\nnorm = max\nplateaus = 4\n";
        assert!(RunConfig::parse(text).unwrap_err().message.contains("unknown group"));
    }

    #[test]
    fn norm_specs_round_trip() {
        for s in ["psum:2", "psum:4", "psum:1.5", "max", "koranyi", "euclidean"] {
            let f = parse_norm_family(s).unwrap();
            assert_eq!(format_norm_family(&f), s);
        }
        for s in ["", "psum", "psum:", "psum:0", "psum:nan", "l2"] {
            assert!(parse_norm_family(s).is_err(), "{s}");
        }
    }

    #[test]
    fn empty_config_is_all_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.run, RunSection::default());
        assert_eq!(c.quadrature, QuadratureSettings::default());
        assert_eq!(RunConfig::parse(&c.canonical()).unwrap(), c);
    }
}
