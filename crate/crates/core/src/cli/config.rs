//! TOML experiment configuration.

use std::collections::BTreeMap;

use serde::Deserialize;
use toml::Spanned;

use crate::constants::{Budget, ConstantName, Mode};
use crate::dyadic::{GridFunction, Mesh};
use crate::error::{Error, Result};
use crate::search::SearchOptions;
use crate::spaces::SpaceSpec;
use crate::verify::instances::Generator;
use crate::verify::{SuiteConfig, SuiteId};

pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    strict: Option<bool>,
    out: Option<String>,
    mesh: Option<RawMesh>,
    #[serde(default)]
    spaces: Vec<Spanned<RawSpace>>,
    #[serde(default)]
    suites: Vec<Spanned<RawSuite>>,
    #[serde(default)]
    constants: Vec<Spanned<RawConstants>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    #[serde(default = "one")]
    dim: u32,
    #[serde(default = "three")]
    depth: u32,
}

fn one() -> u32 {
    1
}

fn three() -> u32 {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SpaceKind {
    Lebesgue,
    Variable,
    Morrey,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ExponentField {
    One(f64),
    Cells(Vec<f64>),
    Generated(Generator),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum WeightField {
    Cells(Vec<f64>),
    Generated(Generator),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    name: String,
    kind: SpaceKind,
    p: Option<Spanned<ExponentField>>,
    q: Option<Spanned<f64>>,
    weight: Option<Spanned<WeightField>>,
    dim: Option<u32>,
    depth: Option<u32>,
    concavify: Option<f64>,
    #[serde(default)]
    dual: bool,
    #[serde(default)]
    weak: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBudget {
    mode: Option<Mode>,
    families: Option<usize>,
    random_starts: Option<usize>,
    sweeps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSuite {
    id: Spanned<String>,
    seed: Option<u64>,
    instances: Option<usize>,
    depth: Option<u32>,
    sweep: Option<[u32; 2]>,
    tolerance: Option<f64>,
    budget: Option<RawBudget>,
    spaces: Option<Vec<Spanned<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    space: Spanned<String>,
    names: Vec<Spanned<String>>,
    eta: Option<f64>,
    r: Option<f64>,
    s: Option<f64>,
    budget: Option<RawBudget>,
}

/// A named space with the line it was declared on.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedSpace {
    pub name: String,
    pub space: SpaceSpec,
    pub line: usize,
}

/// Constants requested for one space.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsRequest {
    pub space: NamedSpace,
    pub names: Vec<ConstantName>,
    pub eta: f64,
    pub r: f64,
    pub s: f64,
    pub budget: Budget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub strict: bool,
    pub out: Option<String>,
    pub spaces: Vec<NamedSpace>,
    pub suites: Vec<SuiteConfig>,
    pub constants: Vec<ConstantsRequest>,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn config_error(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line: Some(line), message: message.into() }
}

fn budget(raw: Option<&RawBudget>, seed: u64) -> Budget {
    let d = Budget::default();
    let s = SearchOptions::default();
    let Some(raw) = raw else {
        return Budget { search: s.with_seed(seed), ..d };
    };
    Budget {
        mode: raw.mode.unwrap_or(d.mode),
        families: raw.families.unwrap_or(d.families),
        search: SearchOptions {
            seed,
            random_starts: raw.random_starts.unwrap_or(s.random_starts),
            sweeps: raw.sweeps.unwrap_or(s.sweeps),
        },
    }
}

fn build_space(src: &str, raw: &Spanned<RawSpace>, mesh: RawMesh) -> Result<NamedSpace> {
    let entry_line = line_of(src, raw.span().start);
    let r = raw.get_ref();
    let at = |span: std::ops::Range<usize>| line_of(src, span.start);
    let wrap = |line: usize| move |e: Error| config_error(line, format!("space `{}`: {e}", r.name));
    let mesh = Mesh::new(r.dim.unwrap_or(mesh.dim), r.depth.unwrap_or(mesh.depth)).map_err(wrap(entry_line))?;
    let w = match &r.weight {
        None => GridFunction::constant(mesh, 1.0),
        Some(spanned) => {
            let line = at(spanned.span());
            match spanned.get_ref() {
                WeightField::Cells(v) => {
                    if v.len() != mesh.cell_count() {
                        return Err(config_error(
                            line,
                            format!("space `{}`: weight has {} values, the mesh has {} cells", r.name, v.len(), mesh.cell_count()),
                        ));
                    }
                    GridFunction::new(mesh, v.clone()).map_err(wrap(line))?
                }
                WeightField::Generated(g) => g.sample(mesh).map_err(wrap(line))?,
            }
        }
    };
    let Some(p_field) = &r.p else {
        return Err(config_error(entry_line, format!("space `{}` needs an exponent `p`", r.name)));
    };
    let p_line = at(p_field.span());
    let scalar = |kind: &str| match p_field.get_ref() {
        ExponentField::One(p) => Ok(*p),
        _ => Err(config_error(p_line, format!("space `{}`: a {kind} space takes a single exponent", r.name))),
    };
    let mut x = match r.kind {
        SpaceKind::Lebesgue => SpaceSpec::weighted(scalar("Lebesgue")?, w).map_err(wrap(p_line))?,
        SpaceKind::Morrey => {
            let Some(q) = &r.q else {
                return Err(config_error(entry_line, format!("Morrey space `{}` needs `q`", r.name)));
            };
            SpaceSpec::morrey(scalar("Morrey")?, *q.get_ref(), w).map_err(wrap(at(q.span())))?
        }
        SpaceKind::Variable => {
            let p = match p_field.get_ref() {
                ExponentField::One(p) => vec![*p; mesh.cell_count()],
                ExponentField::Cells(v) => v.clone(),
                ExponentField::Generated(g) => g.sample(mesh).map_err(wrap(p_line))?.into_values(),
            };
            if p.len() != mesh.cell_count() {
                return Err(config_error(
                    p_line,
                    format!("space `{}`: exponent has {} values, the mesh has {} cells", r.name, p.len(), mesh.cell_count()),
                ));
            }
            SpaceSpec::variable(p, w).map_err(wrap(p_line))?
        }
    };
    if let Some(c) = r.concavify {
        x = x.concavify(c);
    }
    if r.dual {
        x = x.dual();
    }
    if r.weak {
        x = x.weak();
    }
    x.validate().map_err(wrap(entry_line))?;
    Ok(NamedSpace { name: r.name.clone(), space: x, line: p_line })
}

impl ExperimentConfig {
    /// Parses and validates a configuration; every error carries the line it refers to.
    pub fn parse(src: &str) -> Result<ExperimentConfig> {
        let raw: RawConfig = toml::from_str(src).map_err(|e| Error::Config {
            line: e.span().map(|s| line_of(src, s.start)),
            message: e.message().to_string(),
        })?;
        let mesh = raw.mesh.unwrap_or(RawMesh { dim: 1, depth: 3 });
        let seed = raw.seed.unwrap_or(DEFAULT_SEED);

        let mut spaces: Vec<NamedSpace> = Vec::new();
        let mut by_name: BTreeMap<String, usize> = BTreeMap::new();
        for s in &raw.spaces {
            let named = build_space(src, s, mesh)?;
            if by_name.insert(named.name.clone(), spaces.len()).is_some() {
                return Err(config_error(line_of(src, s.span().start), format!("space `{}` is declared twice", named.name)));
            }
            spaces.push(named);
        }
        let lookup = |name: &Spanned<String>| -> Result<&NamedSpace> {
            by_name
                .get(name.get_ref())
                .map(|&i| &spaces[i])
                .ok_or_else(|| config_error(line_of(src, name.span().start), format!("unknown space `{}`", name.get_ref())))
        };

        let mut suites = Vec::new();
        for s in &raw.suites {
            let r = s.get_ref();
            let line = line_of(src, r.id.span().start);
            let id: SuiteId = r.id.get_ref().parse().map_err(|_| config_error(line, format!("unknown suite `{}`", r.id.get_ref())))?;
            let suite_seed = r.seed.unwrap_or(seed);
            let mut cfg = SuiteConfig::new(id, suite_seed);
            if let Some(n) = r.instances {
                cfg.instances = n;
            }
            if let Some(d) = r.depth {
                cfg.depth = d;
            }
            if let Some([a, b]) = r.sweep {
                if a > b {
                    return Err(config_error(line, format!("suite {id}: sweep [{a}, {b}] is empty")));
                }
                cfg.sweep = (a, b);
            }
            if let Some(t) = r.tolerance {
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(config_error(line, format!("suite {id}: tolerance must be a nonnegative number")));
                }
                cfg.tolerance = t;
            }
            cfg.budget = budget(r.budget.as_ref(), suite_seed);
            if let Some(names) = &r.spaces {
                for n in names {
                    let named = lookup(n)?;
                    if id.needs_banach() && named.space.quasi_constant() > 1.0 {
                        return Err(config_error(
                            named.line,
                            format!("suite {id} needs Banach spaces, `{}` is only quasi-Banach", named.name),
                        ));
                    }
                    cfg.spaces.push((named.name.clone(), named.space.clone()));
                }
                if names.is_empty() {
                    cfg.instances = 0;
                }
            }
            suites.push(cfg);
        }

        let mut constants = Vec::new();
        for c in &raw.constants {
            let r = c.get_ref();
            let space = lookup(&r.space)?.clone();
            let names = r
                .names
                .iter()
                .map(|n| {
                    n.get_ref()
                        .parse::<ConstantName>()
                        .map_err(|_| config_error(line_of(src, n.span().start), format!("unknown constant `{}`", n.get_ref())))
                })
                .collect::<Result<Vec<_>>>()?;
            constants.push(ConstantsRequest {
                space,
                names,
                eta: r.eta.unwrap_or(0.5),
                r: r.r.unwrap_or(1.0),
                s: r.s.unwrap_or(f64::INFINITY),
                budget: budget(r.budget.as_ref(), seed),
            });
        }
        Ok(ExperimentConfig { seed, strict: raw.strict.unwrap_or(false), out: raw.out, spaces, suites, constants })
    }

    /// Replaces every seed, global and per suite.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        for s in &mut self.suites {
            s.seed = seed;
            s.budget.search.seed = seed;
        }
        for c in &mut self.constants {
            c.budget.search.seed = seed;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spaces_and_suites() {
        let src = r#"
seed = 7
[mesh]
depth = 2

[[spaces]]
name = "w"
kind = "lebesgue"
p = 2.0
weight = [1.0, 2.0]
depth = 1

[[spaces]]
name = "vl"
kind = "variable"
p = { generator = "two_level", a = 1.5, b = 3.0, split = 0.5 }

[[spaces]]
name = "inf"
kind = "lebesgue"
p = inf

[[suites]]
id = "theorem_chain"
spaces = ["w", "vl"]
budget = { mode = "greedy" }

[[constants]]
space = "w"
names = ["A", "A_strong"]
"#;
        let c = ExperimentConfig::parse(src).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.spaces.len(), 3);
        assert_eq!(c.spaces[0].space.mesh().cell_count(), 2);
        assert_eq!(c.suites[0].spaces.len(), 2);
        assert_eq!(c.suites[0].budget.mode, Mode::Greedy);
        assert_eq!(c.suites[0].budget.search.seed, 7);
        assert_eq!(c.constants[0].names, vec![ConstantName::A, ConstantName::AStrong]);
    }

    #[test]
    fn errors_carry_lines() {
        let src = "[[spaces]]\nname = \"q\"\nkind = \"lebesgue\"\np = 0.5\n\n[[suites]]\nid = \"duality\"\nspaces = [\"q\"]\n";
        match ExperimentConfig::parse(src) {
            Err(Error::Config { line: Some(4), message }) => assert!(message.contains("Banach")),
            other => panic!("{other:?}"),
        }
        let src = "[[suites]]\nid = \"nope\"\n";
        assert!(matches!(ExperimentConfig::parse(src), Err(Error::Config { line: Some(2), .. })));
        let src = "seed = 1\nbogus = 3\n";
        assert!(matches!(ExperimentConfig::parse(src), Err(Error::Config { line: Some(2), .. })));
        let src = "[[spaces]]\nname = \"w\"\nkind = \"lebesgue\"\np = 2.0\nweight = [1.0, 2.0, 3.0]\n";
        assert!(matches!(ExperimentConfig::parse(src), Err(Error::Config { line: Some(5), .. })));
        let src = "[[constants]]\nspace = \"missing\"\nnames = [\"A\"]\n";
        assert!(matches!(ExperimentConfig::parse(src), Err(Error::Config { line: Some(2), .. })));
    }
}
