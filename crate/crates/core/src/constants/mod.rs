//! Estimators for the constants of the theory, each with a witness and a certification level.

pub mod families;
mod convexity;
mod property_g;
mod space;
mod weights;

pub use convexity::convexity_constants;
pub use property_g::{g_constant, property_g, PropertyG};
pub use space::{a_sparse_constant, a_strong_constant, muckenhoupt_space_constant, op_norm};
pub use weights::{fujii_wilson_constant, muckenhoupt_weight_constant};

use serde::{Deserialize, Serialize};

use crate::dyadic::sparse::{parse_collection, render_collection};
use crate::dyadic::{DyadicCube, GridFunction, Mesh};
use crate::error::{domain, Result};
use crate::operators::{OperatorSpec, Target};
use crate::search::SearchOptions;
use crate::spaces::{kothe_dual_norm, norm, Certification, SpaceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstantName {
    #[serde(rename = "A")]
    A,
    #[serde(rename = "A_strong")]
    AStrong,
    #[serde(rename = "A_sparse")]
    ASparse,
    #[serde(rename = "G")]
    G,
    /// Upper constant of the local-norm reconstruction `‖Σ_Q ‖f‖_{X_Q} 1_Q‖_X ≤ C₂‖f‖_X`.
    #[serde(rename = "C2")]
    C2,
    /// Lower constant of the same reconstruction.
    #[serde(rename = "C2_tilde")]
    C2Tilde,
    #[serde(rename = "muckenhoupt_p")]
    MuckenhouptP,
    #[serde(rename = "fujii_wilson")]
    FujiiWilson,
    #[serde(rename = "op_norm")]
    OpNorm,
    #[serde(rename = "weak_op_norm")]
    WeakOpNorm,
    #[serde(rename = "convexity")]
    Convexity,
    #[serde(rename = "concavity")]
    Concavity,
}

impl ConstantName {
    pub const ALL: [ConstantName; 12] = [
        ConstantName::A,
        ConstantName::AStrong,
        ConstantName::ASparse,
        ConstantName::G,
        ConstantName::C2,
        ConstantName::C2Tilde,
        ConstantName::MuckenhouptP,
        ConstantName::FujiiWilson,
        ConstantName::OpNorm,
        ConstantName::WeakOpNorm,
        ConstantName::Convexity,
        ConstantName::Concavity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConstantName::A => "A",
            ConstantName::AStrong => "A_strong",
            ConstantName::ASparse => "A_sparse",
            ConstantName::G => "G",
            ConstantName::C2 => "C2",
            ConstantName::C2Tilde => "C2_tilde",
            ConstantName::MuckenhouptP => "muckenhoupt_p",
            ConstantName::FujiiWilson => "fujii_wilson",
            ConstantName::OpNorm => "op_norm",
            ConstantName::WeakOpNorm => "weak_op_norm",
            ConstantName::Convexity => "convexity",
            ConstantName::Concavity => "concavity",
        }
    }
}

impl std::str::FromStr for ConstantName {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        ConstantName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| crate::Error::Config { line: None, message: format!("unknown constant `{s}`") })
    }
}

/// How the family loop of a constant is run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exhaustive,
    Greedy,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub mode: Mode,
    /// Families evaluated in greedy and random modes.
    pub families: usize,
    pub search: SearchOptions,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { mode: Mode::Exhaustive, families: 64, search: SearchOptions::default() }
    }
}

/// What a search actually spent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetUsed {
    pub mode: Mode,
    pub families: usize,
    pub cubes: usize,
    pub random_starts: usize,
    pub sweeps: usize,
}

impl BudgetUsed {
    fn new(mode: Mode, families: usize, cubes: usize, search: &SearchOptions) -> Self {
        BudgetUsed { mode, families, cubes, random_starts: search.random_starts, sweeps: search.sweeps }
    }

    fn closed_form() -> Self {
        BudgetUsed { mode: Mode::Exhaustive, families: 0, cubes: 0, random_starts: 0, sweeps: 0 }
    }
}

/// Serialized maximizer of a constant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Cube family in collection text format.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cubes: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub function: Option<GridFunction>,
    /// Second function of a pairing (`g ∈ X'`).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dual_function: Option<GridFunction>,
    /// Finite family of functions (convexity and concavity).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub family: Option<Vec<GridFunction>>,
    /// Exponent the constant depends on (`p`, `r`, `s` or `η`).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parameter: Option<f64>,
}

impl Witness {
    fn cubes(cubes: &[DyadicCube]) -> Option<String> {
        Some(render_collection(cubes))
    }

    fn parse_cubes(&self, mesh: &Mesh) -> Result<Vec<DyadicCube>> {
        match &self.cubes {
            Some(text) => parse_collection(mesh, text),
            None => domain("witness has no cube family"),
        }
    }

    fn function(&self) -> Result<&GridFunction> {
        self.function.as_ref().map_or_else(|| domain("witness has no function"), Ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub name: ConstantName,
    pub value: f64,
    pub certification: Certification,
    pub witness: Witness,
    pub seed: u64,
    pub budget: BudgetUsed,
}

/// The object a report is about, needed to re-evaluate its witness.
#[derive(Debug, Clone, Copy)]
pub enum Subject<'a> {
    Weight(&'a GridFunction),
    Space(&'a SpaceSpec),
    Operator(&'a OperatorSpec, &'a SpaceSpec),
}

impl ConstantReport {
    /// Recomputes the value attained by the serialized witness.
    pub fn reevaluate(&self, subject: Subject<'_>) -> Result<f64> {
        let w = &self.witness;
        let param = || w.parameter.map_or_else(|| domain("witness has no parameter"), Ok);
        match (self.name, subject) {
            (ConstantName::MuckenhouptP, Subject::Weight(v)) => {
                let q = single(&w.parse_cubes(&v.mesh())?)?;
                weights::muckenhoupt_on_cube(v, param()?, &q)
            }
            (ConstantName::FujiiWilson, Subject::Weight(v)) => {
                let q = single(&w.parse_cubes(&v.mesh())?)?;
                weights::fujii_wilson_on_cube(v, &q)
            }
            (ConstantName::A, Subject::Space(x)) => {
                let q = single(&w.parse_cubes(&x.mesh())?)?;
                let ind = GridFunction::indicator(&q);
                Ok(norm(x, &ind)? * kothe_dual_norm(x, &ind)?.value / q.measure())
            }
            (ConstantName::AStrong | ConstantName::ASparse, Subject::Space(x)) => {
                let cubes = w.parse_cubes(&x.mesh())?;
                let f = w.function()?;
                let t = OperatorSpec::sparse(cubes)?;
                Ok(norm(x, &t.apply(f)?)? / norm(x, f)?)
            }
            (ConstantName::OpNorm | ConstantName::WeakOpNorm, Subject::Operator(t, x)) => {
                let target = if self.name == ConstantName::OpNorm { Target::Strong } else { Target::Weak };
                let f = w.function()?;
                Ok(target.norm(x, &t.apply(f)?)? / norm(x, f)?)
            }
            (ConstantName::G, Subject::Space(x)) => {
                let cubes = w.parse_cubes(&x.mesh())?;
                let g = w.dual_function.as_ref().map_or_else(|| domain("witness has no dual function"), Ok)?;
                property_g::g_ratio(x, &cubes, w.function()?, g)
            }
            (ConstantName::C2 | ConstantName::C2Tilde, Subject::Space(x)) => {
                let cubes = w.parse_cubes(&x.mesh())?;
                let (up, down) = property_g::reconstruction_ratios(x, &cubes, w.function()?)?;
                Ok(if self.name == ConstantName::C2 { up } else { down })
            }
            (ConstantName::Convexity | ConstantName::Concavity, Subject::Space(x)) => {
                let fam = w.family.as_ref().map_or_else(|| domain("witness has no family"), Ok)?;
                convexity::family_ratio(x, self.name == ConstantName::Convexity, param()?, fam)
            }
            (name, _) => domain(format!("cannot re-evaluate {} against this subject", name.as_str())),
        }
    }
}

fn single(cubes: &[DyadicCube]) -> Result<DyadicCube> {
    match cubes {
        [q] => Ok(*q),
        _ => domain(format!("witness should name one cube, found {}", cubes.len())),
    }
}

/// Picks the larger value; exact ties go to the lexicographically smaller key.
pub(crate) fn better(value: f64, key: &str, best_value: f64, best_key: &str) -> bool {
    value > best_value || (value == best_value && key < best_key)
}
