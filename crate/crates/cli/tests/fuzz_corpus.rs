//! Replays the checked-in fuzz corpus through the fuzz-target invariants.

use std::fs;
use std::path::{Path, PathBuf};

use ckn_cli::config::{format_norm_family, parse_norm_family};
use ckn_cli::{ReportBundle, RunConfig};

fn corpus(target: &str) -> Vec<(PathBuf, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut entries: Vec<_> =
        fs::read_dir(&dir).unwrap_or_else(|e| panic!("{}: {e}", dir.display())).map(|e| e.unwrap().path()).collect();
    entries.sort();
    assert!(!entries.is_empty(), "empty corpus {}", dir.display());
    entries
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect()
}

fn config_invariant(text: &str) {
    match RunConfig::parse(text) {
        Ok(config) => {
            let canonical = config.canonical();
            let again = RunConfig::parse(&canonical).expect("canonical form reparses");
            assert_eq!(again.canonical(), canonical);
            assert_eq!(again.fingerprint(), config.fingerprint());
        }
        Err(e) => assert!(e.line <= text.lines().count(), "{e}"),
    }
}

#[test]
fn config_corpus() {
    let mut accepted = 0;
    for (path, text) in corpus("config_parser") {
        config_invariant(&text);
        accepted += RunConfig::parse(&text).is_ok() as usize;
        eprintln!("ok {}", path.display());
    }
    assert!(accepted >= 3);
}

#[test]
fn config_hostile_inputs() {
    let cases = [
        "[run]\nalpha = 1e308, -1e308\n",
        "[group g]\nnu = 1e-300\nnorms = psum:1e300\n[field f]\nfamily = radial_bump\ncenter = 1e300\nwidth = 1e299\n",
        "[group g]\nnu = 1, 1\nnorms = max\n[field f]\nfamily = extremizer\nplateau = 1e-300\n",
        "[group g]\nnu = 0\nnorms = max\n",
        "[group g]\nnu = 1, 1, 1, 1, 1, 1, 1, 1, 1, 1\nnorms = euclidean\n[field z]\nfamily = zero\ninner = 2\nouter = 1\n",
        "[run]\nsamples = 18446744073709551616\n",
        "[quadrature]\npanels = 0\n",
        "[quadrature]\npanels = -3\n",
        "[quadrature]\nmc_seed = 1.5\n",
        "[eigen]\nmethod = dense\ngrid_size = 16\n",
        "[field w]\nfamily = phase_wrap\nbase = w\n",
        "[scan s]\nq = 3\nalpha = 0\nlengths = 4, nan\n",
        "[ group  g ]\nnu=1\nnorms=max\n",
        "[run]\nchecks =\n",
        "#[run]\n= 1\n",
        "[run] # trailing comment\n",
        "\u{feff}[run]\n",
    ];
    for text in cases {
        config_invariant(text);
    }
}

#[test]
fn bundle_corpus() {
    for (path, text) in corpus("bundle_decoder") {
        let bundle = ReportBundle::decode(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let encoded = bundle.encode();
        let again = ReportBundle::decode(&encoded).unwrap();
        assert_eq!(again, bundle);
        assert_eq!(again.encode(), encoded);
    }
}

#[test]
fn norm_spec_corpus() {
    for (_, text) in corpus("norm_spec") {
        if let Ok(family) = parse_norm_family(&text) {
            assert_eq!(parse_norm_family(&format_norm_family(&family)), Ok(family));
        }
    }
}
