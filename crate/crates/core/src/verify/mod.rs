//! Theorem suites: seeded instances, certified quantities on both sides of each inequality,
//! and a report of assertions and raw rows.

mod appendix;
mod chain;
mod duality;
mod examples;
pub mod instances;
mod probe;
mod theorem_c;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constants::{Budget, ConstantReport};
use crate::error::{Error, Result};
use crate::spaces::{Certification, SpaceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteId {
    TheoremChain,
    Duality,
    TheoremC,
    Appendix,
    Examples,
    ConjectureProbe,
}

impl SuiteId {
    pub const ALL: [SuiteId; 6] = [
        SuiteId::TheoremChain,
        SuiteId::Duality,
        SuiteId::TheoremC,
        SuiteId::Appendix,
        SuiteId::Examples,
        SuiteId::ConjectureProbe,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteId::TheoremChain => "theorem_chain",
            SuiteId::Duality => "duality",
            SuiteId::TheoremC => "theorem_c",
            SuiteId::Appendix => "appendix",
            SuiteId::Examples => "examples",
            SuiteId::ConjectureProbe => "conjecture_probe",
        }
    }

    /// Suites whose inequalities only hold for Banach spaces.
    pub fn needs_banach(self) -> bool {
        matches!(self, SuiteId::TheoremChain | SuiteId::Duality | SuiteId::TheoremC)
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Config { line: None, message: format!("unknown suite `{s}`") })
    }
}

/// Parameters of one suite run.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub id: SuiteId,
    pub seed: u64,
    pub depth: u32,
    /// First and last depth of depth-stability sweeps.
    pub sweep: (u32, u32),
    pub instances: usize,
    pub tolerance: f64,
    pub budget: Budget,
    /// Explicit spaces; when empty the suite generates its own instances.
    pub spaces: Vec<(String, SpaceSpec)>,
}

impl SuiteConfig {
    /// Defaults matching the bundled configuration.
    pub fn new(id: SuiteId, seed: u64) -> SuiteConfig {
        let (depth, sweep, instances, tolerance) = match id {
            SuiteId::TheoremChain => (3, (3, 3), 50, 1e-9),
            SuiteId::Duality => (3, (2, 5), 100, 1e-8),
            SuiteId::TheoremC => (3, (3, 3), 20, 1e-6),
            SuiteId::Appendix => (4, (2, 5), 30, 1e-12),
            SuiteId::Examples => (6, (3, 6), 0, 1e-9),
            SuiteId::ConjectureProbe => (4, (2, 4), 8, 0.0),
        };
        SuiteConfig { id, seed, depth, sweep, instances, tolerance, budget: Budget::default(), spaces: Vec::new() }
    }

    /// Independent generator for instance `i`.
    pub(crate) fn rng(&self, i: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64 + 1);
        rng
    }
}

/// Outcome of one assertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

/// One asserted inequality `lhs ≤ rhs`, `lhs ≥ rhs` or `lhs = rhs`, up to `tolerance`.
///
/// `certified` follows the asymmetric policy: for an inequality one side must be exact, so that
/// a lower bound on the small side can only expose a real violation and a lower bound on the
/// large side can only confirm the inequality; an equality needs both sides exact; a
/// depth-stability trend is never certified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub id: String,
    pub relation: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub certified: bool,
    pub status: Status,
}

/// One CSV row: `(instance, quantity, value, certification)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub instance: String,
    pub quantity: String,
    pub value: f64,
    pub certification: Certification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: SuiteId,
    pub seed: u64,
    pub depth: u32,
    pub instances: usize,
    pub tolerance: f64,
    pub notes: Vec<String>,
    pub assertions: Vec<Assertion>,
    pub rows: Vec<Row>,
}

impl SuiteReport {
    pub fn failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| a.status == Status::Fail).collect()
    }

    pub fn uncertified(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.certified).collect()
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("rows always serialize");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 output")
    }
}

/// A value with its certification, as it enters an assertion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub certification: Certification,
}

impl Quantity {
    pub fn exact(value: f64) -> Quantity {
        Quantity { value, certification: Certification::Exact }
    }

    pub fn lower(value: f64) -> Quantity {
        Quantity { value, certification: Certification::LowerBound }
    }

    fn is_exact(&self) -> bool {
        self.certification == Certification::Exact
    }
}

impl From<&ConstantReport> for Quantity {
    fn from(r: &ConstantReport) -> Quantity {
        Quantity { value: r.value, certification: r.certification }
    }
}

/// Collects assertions and rows of one instance.
#[derive(Debug, Default)]
pub(crate) struct Sheet {
    pub assertions: Vec<Assertion>,
    pub rows: Vec<Row>,
}

impl Sheet {
    pub fn row(&mut self, instance: &str, quantity: &str, q: impl Into<Quantity>) {
        let q = q.into();
        self.rows.push(Row {
            instance: instance.to_string(),
            quantity: quantity.to_string(),
            value: q.value,
            certification: q.certification,
        });
    }

    fn push(&mut self, id: String, relation: &str, lhs: Quantity, rhs: Quantity, tol: f64, certified: bool, ok: bool) {
        let status = if ok { Status::Pass } else { Status::Fail };
        self.assertions.push(Assertion {
            id,
            relation: relation.to_string(),
            lhs: lhs.value,
            rhs: rhs.value,
            tolerance: tol,
            certified,
            status,
        });
    }

    /// `lhs ≤ rhs + tol·max(1, |rhs|)`.
    pub fn le(&mut self, id: impl Into<String>, lhs: impl Into<Quantity>, rhs: impl Into<Quantity>, tol: f64) {
        let (lhs, rhs) = (lhs.into(), rhs.into());
        let ok = lhs.value <= rhs.value + tol * rhs.value.abs().max(1.0);
        self.push(id.into(), "<=", lhs, rhs, tol, lhs.is_exact() || rhs.is_exact(), ok);
    }

    /// `lhs ≥ rhs − tol·max(1, |rhs|)`.
    pub fn ge(&mut self, id: impl Into<String>, lhs: impl Into<Quantity>, rhs: impl Into<Quantity>, tol: f64) {
        let (lhs, rhs) = (lhs.into(), rhs.into());
        let ok = lhs.value >= rhs.value - tol * rhs.value.abs().max(1.0);
        self.push(id.into(), ">=", lhs, rhs, tol, lhs.is_exact() || rhs.is_exact(), ok);
    }

    /// `|lhs − rhs| ≤ tol·max(1, |rhs|)`.
    pub fn eq(&mut self, id: impl Into<String>, lhs: impl Into<Quantity>, rhs: impl Into<Quantity>, tol: f64) {
        let (lhs, rhs) = (lhs.into(), rhs.into());
        let ok = (lhs.value - rhs.value).abs() <= tol * rhs.value.abs().max(1.0);
        self.push(id.into(), "==", lhs, rhs, tol, lhs.is_exact() && rhs.is_exact(), ok);
    }

    /// Empirical `lhs ≤ rhs`, never certified.
    pub fn trend_le(&mut self, id: impl Into<String>, lhs: f64, rhs: f64) {
        let ok = lhs <= rhs;
        self.push(id.into(), "<=", Quantity::lower(lhs), Quantity::lower(rhs), 0.0, false, ok);
    }

    /// Empirical `lhs ≥ rhs`, never certified.
    pub fn trend_ge(&mut self, id: impl Into<String>, lhs: f64, rhs: f64) {
        let ok = lhs >= rhs;
        self.push(id.into(), ">=", Quantity::lower(lhs), Quantity::lower(rhs), 0.0, false, ok);
    }

    /// `value` is finite and positive.
    pub fn finite(&mut self, id: impl Into<String>, q: impl Into<Quantity>) {
        let q = q.into();
        let ok = q.value.is_finite() && q.value > 0.0;
        self.push(id.into(), "finite", q, Quantity::exact(0.0), 0.0, q.is_exact(), ok);
    }

    pub fn extend(&mut self, other: Sheet) {
        self.assertions.extend(other.assertions);
        self.rows.extend(other.rows);
    }
}

/// Runs one suite. With `strict`, any assertion whose sides are not certified per the
/// asymmetric policy turns the run into a certification error.
pub fn run_suite(cfg: &SuiteConfig, strict: bool) -> Result<SuiteReport> {
    if cfg.id.needs_banach() {
        for (name, x) in &cfg.spaces {
            if x.quasi_constant() > 1.0 {
                return Err(Error::Config {
                    line: None,
                    message: format!("suite {} needs Banach spaces, `{name}` is only quasi-Banach", cfg.id),
                });
            }
        }
    }
    let (sheet, notes) = match cfg.id {
        SuiteId::TheoremChain => chain::run(cfg)?,
        SuiteId::Duality => duality::run(cfg)?,
        SuiteId::TheoremC => theorem_c::run(cfg)?,
        SuiteId::Appendix => appendix::run(cfg)?,
        SuiteId::Examples => examples::run(cfg)?,
        SuiteId::ConjectureProbe => probe::run(cfg)?,
    };
    let report = SuiteReport {
        suite: cfg.id,
        seed: cfg.seed,
        depth: cfg.depth,
        instances: cfg.instances,
        tolerance: cfg.tolerance,
        notes,
        assertions: sheet.assertions,
        rows: sheet.rows,
    };
    if strict {
        let bad: Vec<&str> = report.uncertified().iter().map(|a| a.id.as_str()).collect();
        if !bad.is_empty() {
            return Err(Error::Certification(format!(
                "suite {}: {} assertion(s) rest on uncertified quantities: {}",
                cfg.id,
                bad.len(),
                bad.join(", ")
            )));
        }
    }
    Ok(report)
}

/// Runs `f` over instance indices in parallel and merges the sheets in index order.
pub(crate) fn par_instances<F>(n: usize, f: F) -> Result<Sheet>
where
    F: Fn(usize) -> Result<Sheet> + Sync + Send,
{
    use rayon::prelude::*;
    let parts: Vec<Result<Sheet>> = (0..n).into_par_iter().map(f).collect();
    let mut out = Sheet::default();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}
