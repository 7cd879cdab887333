//! Command-line runner: `constants`, `verify` and `probe` over a TOML experiment configuration.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{ConstantsRequest, ExperimentConfig, NamedSpace};

use crate::constants::{
    a_sparse_constant, a_strong_constant, convexity_constants, fujii_wilson_constant, muckenhoupt_space_constant,
    muckenhoupt_weight_constant, op_norm, property_g, ConstantName, ConstantReport, PropertyG,
};
use crate::error::{Error, Result};
use crate::operators::{OperatorSpec, Target};
use crate::spaces::Certification;
use crate::verify::{run_suite, Row, SuiteConfig, SuiteId};

/// The configuration used when `--config` is not given.
pub const DEFAULT_CONFIG: &str = include_str!("../../configs/default.toml");

#[derive(Debug, Parser)]
#[command(name = "qbfs", version, about = "Muckenhoupt-type constants and theorem checks on dyadic meshes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the constants requested in the configuration.
    Constants,
    /// Run the theorem suites and report every assertion.
    Verify,
    /// Record conjecture probe data; never asserts.
    Probe,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// TOML experiment configuration (the bundled default when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Replaces every seed of the configuration.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory for reports.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Fail with exit code 3 when an assertion or constant is not certified.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Worker threads.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Restrict to these suites (repeatable).
    #[arg(long = "suite", global = true, value_name = "ID")]
    pub suites: Vec<String>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CERTIFICATION: i32 = 3;

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("qbfs: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Certification(_) => EXIT_CERTIFICATION,
        _ => EXIT_FAILED,
    }
}

struct Loaded {
    config: ExperimentConfig,
    source: String,
    text: String,
    out: PathBuf,
    strict: bool,
}

fn load(opts: &Options) -> Result<Loaded> {
    let (source, text) = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config { line: None, message: format!("cannot read {}: {e}", path.display()) })?;
            (path.display().to_string(), text)
        }
        None => ("<bundled default>".to_string(), DEFAULT_CONFIG.to_string()),
    };
    let mut config = ExperimentConfig::parse(&text).map_err(|e| match e {
        Error::Config { line, message } => Error::Config { line, message: format!("{source}: {message}") },
        other => other,
    })?;
    if let Some(seed) = opts.seed {
        config.reseed(seed);
    }
    let out = opts.out.clone().or_else(|| config.out.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("reports"));
    let strict = opts.strict || config.strict;
    Ok(Loaded { config, source, text, out, strict })
}

fn execute(cli: &Cli) -> Result<i32> {
    let loaded = load(&cli.options)?;
    let requested: Vec<SuiteId> = cli.options.suites.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    let work = || match cli.command {
        Command::Constants => cmd_constants(&loaded),
        Command::Verify => cmd_suites(&loaded, &requested, false),
        Command::Probe => cmd_suites(&loaded, &requested, true),
    };
    match cli.options.jobs {
        Some(0) => Err(Error::Config { line: None, message: "--jobs must be at least 1".into() }),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Diagnostic(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Suites to run: the configured ones, narrowed (or extended with defaults) by `--suite`.
fn select_suites(config: &ExperimentConfig, requested: &[SuiteId], probe: bool) -> Vec<SuiteConfig> {
    let wanted = |id: SuiteId| (id == SuiteId::ConjectureProbe) == probe;
    let mut out: Vec<SuiteConfig> = if requested.is_empty() {
        let configured: Vec<SuiteConfig> = config.suites.iter().filter(|s| wanted(s.id)).cloned().collect();
        if configured.is_empty() && config.suites.is_empty() {
            SuiteId::ALL.into_iter().filter(|&id| wanted(id)).map(|id| SuiteConfig::new(id, config.seed)).collect()
        } else {
            configured
        }
    } else {
        let mut v = Vec::new();
        for &id in requested.iter().filter(|&&id| wanted(id)) {
            let found: Vec<SuiteConfig> = config.suites.iter().filter(|s| s.id == id).cloned().collect();
            if found.is_empty() {
                v.push(SuiteConfig::new(id, config.seed));
            } else {
                v.extend(found);
            }
        }
        v
    };
    out.dedup();
    out
}

fn cmd_suites(loaded: &Loaded, requested: &[SuiteId], probe: bool) -> Result<i32> {
    let suites = select_suites(&loaded.config, requested, probe);
    let mut files = Files::new(&loaded.out)?;
    let mut failed = Vec::new();
    let mut uncertified = Vec::new();
    let mut counts = std::collections::BTreeMap::new();
    for cfg in &suites {
        let report = run_suite(cfg, false)?;
        let n = counts.entry(cfg.id).or_insert(0usize);
        *n += 1;
        let stem = if *n == 1 { cfg.id.to_string() } else { format!("{}_{}", cfg.id, n) };
        files.write(&format!("{stem}.json"), &report.to_json())?;
        files.write(&format!("{stem}.csv"), &report.to_csv())?;
        println!(
            "{stem}: {} assertions, {} failed, {} uncertified, {} rows",
            report.assertions.len(),
            report.failures().len(),
            report.uncertified().len(),
            report.rows.len()
        );
        failed.extend(report.failures().iter().map(|a| a.id.clone()));
        uncertified.extend(report.uncertified().iter().map(|a| a.id.clone()));
    }
    let command = if probe { "probe" } else { "verify" };
    let mut extra: Vec<String> = suites.iter().map(|s| format!("suite {} seed {}", s.id, s.seed)).collect();
    extra.insert(0, format!("strict {}", loaded.strict));
    files.manifest(command, loaded, &extra)?;
    if probe {
        return Ok(EXIT_OK);
    }
    if loaded.strict && !uncertified.is_empty() {
        for id in &uncertified {
            eprintln!("UNCERTIFIED {id}");
        }
        return Err(Error::Certification(format!("{} assertion(s) rest on uncertified quantities", uncertified.len())));
    }
    for id in &failed {
        eprintln!("FAIL {id}");
    }
    Ok(if failed.is_empty() { EXIT_OK } else { EXIT_FAILED })
}

#[derive(Debug, Serialize)]
struct ConstantsEntry {
    space: String,
    label: String,
    reports: Vec<ConstantReport>,
}

fn compute_constants(req: &ConstantsRequest) -> Result<Vec<ConstantReport>> {
    let x = &req.space.space;
    let mut g: Option<PropertyG> = None;
    let mut conv: Option<(ConstantReport, ConstantReport)> = None;
    let weight = || {
        x.as_weighted_lebesgue().ok_or_else(|| Error::Config {
            line: Some(req.space.line),
            message: format!("weight constants need a weighted Lebesgue space, `{}` is not one", req.space.name),
        })
    };
    let mut out = Vec::new();
    for &name in &req.names {
        let r = match name {
            ConstantName::A => muckenhoupt_space_constant(x)?,
            ConstantName::AStrong => a_strong_constant(x, &req.budget)?,
            ConstantName::ASparse => a_sparse_constant(x, req.eta, &req.budget)?,
            ConstantName::G | ConstantName::C2 | ConstantName::C2Tilde => {
                if g.is_none() {
                    g = Some(property_g(x, &req.budget, &[])?);
                }
                let g = g.as_ref().expect("just computed");
                match name {
                    ConstantName::G => g.g.clone(),
                    ConstantName::C2 => g.c2.clone(),
                    _ => g.c2_tilde.clone(),
                }
            }
            ConstantName::OpNorm => op_norm(&OperatorSpec::DyadicMaximal, x, Target::Strong, &[], &req.budget)?,
            ConstantName::WeakOpNorm => op_norm(&OperatorSpec::DyadicMaximal, x, Target::Weak, &[], &req.budget)?,
            ConstantName::MuckenhouptP => {
                let (p, w) = weight()?;
                muckenhoupt_weight_constant(&w, p)?
            }
            ConstantName::FujiiWilson => {
                let (p, w) = weight()?;
                if !p.is_finite() {
                    return Err(Error::Config {
                        line: Some(req.space.line),
                        message: "the Fujii-Wilson constant needs a finite exponent".into(),
                    });
                }
                fujii_wilson_constant(&w.map(|v| v.powf(p)))?
            }
            ConstantName::Convexity | ConstantName::Concavity => {
                if conv.is_none() {
                    conv = Some(convexity_constants(x, req.r, req.s, &req.budget)?);
                }
                let c = conv.as_ref().expect("just computed");
                if name == ConstantName::Convexity { c.0.clone() } else { c.1.clone() }
            }
        };
        out.push(r);
    }
    Ok(out)
}

fn cmd_constants(loaded: &Loaded) -> Result<i32> {
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for req in &loaded.config.constants {
        let reports = compute_constants(req)?;
        for r in &reports {
            println!("{} {} = {} {:?}", req.space.name, r.name.as_str(), r.value, r.certification);
            rows.push(Row {
                instance: req.space.name.clone(),
                quantity: r.name.as_str().to_string(),
                value: r.value,
                certification: r.certification,
            });
        }
        entries.push(ConstantsEntry { space: req.space.name.clone(), label: req.space.space.label(), reports });
    }
    let mut files = Files::new(&loaded.out)?;
    let json = serde_json::to_string_pretty(&entries).expect("reports always serialize") + "\n";
    files.write("constants.json", &json)?;
    files.write("constants.csv", &rows_csv(&rows))?;
    files.manifest("constants", loaded, &[format!("strict {}", loaded.strict)])?;
    let lower: Vec<String> = rows
        .iter()
        .filter(|r| r.certification != Certification::Exact)
        .map(|r| format!("{}:{}", r.instance, r.quantity))
        .collect();
    if loaded.strict && !lower.is_empty() {
        return Err(Error::Certification(format!("lower bounds only: {}", lower.join(", "))));
    }
    Ok(EXIT_OK)
}

fn rows_csv(rows: &[Row]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows always serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 output")
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Report files of one command, recorded for the manifest in write order.
struct Files {
    dir: PathBuf,
    written: Vec<(String, String)>,
}

impl Files {
    fn new(dir: &Path) -> Result<Files> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Diagnostic(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Files { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::Diagnostic(format!("cannot write {}: {e}", path.display())))?;
        self.written.push((name.to_string(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    fn manifest(&mut self, command: &str, loaded: &Loaded, extra: &[String]) -> Result<()> {
        let mut m = String::new();
        let _ = writeln!(m, "qbfs {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(m, "command {command}");
        let _ = writeln!(m, "config {} sha256 {}", loaded.source, sha256_hex(loaded.text.as_bytes()));
        let _ = writeln!(m, "seed {}", loaded.config.seed);
        for line in extra {
            let _ = writeln!(m, "{line}");
        }
        for (name, hash) in &self.written {
            let _ = writeln!(m, "file {name} sha256 {hash}");
        }
        self.write("MANIFEST", &m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_parses() {
        let c = ExperimentConfig::parse(DEFAULT_CONFIG).unwrap();
        assert!(!c.constants.is_empty());
        let ids: Vec<SuiteId> = c.suites.iter().map(|s| s.id).collect();
        for id in SuiteId::ALL {
            assert!(ids.contains(&id), "{id}");
        }
    }

    #[test]
    fn suite_selection() {
        let c = ExperimentConfig::parse(DEFAULT_CONFIG).unwrap();
        let v = select_suites(&c, &[], false);
        assert!(v.iter().all(|s| s.id != SuiteId::ConjectureProbe));
        let v = select_suites(&c, &[SuiteId::Duality], false);
        assert_eq!(v.iter().map(|s| s.id).collect::<Vec<_>>(), vec![SuiteId::Duality]);
        let p = select_suites(&c, &[], true);
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn hashes() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
