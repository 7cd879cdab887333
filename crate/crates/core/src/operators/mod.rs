//! Maximal, averaging and sparse operators on grid functions and mixed families.

mod norm;
mod rdf;

pub use norm::{maximal_bound, operator_norm, MaximalBound, Target};
pub use rdf::{a1_constant, rdf_majorant, RdfMajorant};

use std::collections::BTreeSet;

use crate::dyadic::appendix::sparse_operator_pyr;
use crate::dyadic::{DyadicCube, GridFunction, Mesh, Pyramid};
use crate::error::{domain, structural, Result};
use crate::spaces::{mixed_norm, MixedFamily, SpaceSpec};

/// The operators of the laboratory. All act on `|f|` except the sharp maximal function, which
/// subtracts signed averages.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    /// `M^D f = sup_{Q ∋ x} ⟨f⟩_{1,Q}` over all dyadic cubes.
    DyadicMaximal,
    /// `M^P f = sup_{Q ∈ P, Q ∋ x} ⟨f⟩_{1,Q}`, zero off `∪P`.
    RestrictedMaximal { cubes: Vec<DyadicCube> },
    /// `T_Q f = ⟨f⟩_{1,Q} 1_Q`.
    Averaging { cube: DyadicCube },
    /// `A_P f = Σ_{Q∈P} ⟨f⟩_{1,Q} 1_Q` for pairwise disjoint `P`.
    DisjointAveraging { cubes: Vec<DyadicCube> },
    /// `A_S f = Σ_{Q∈S} ⟨f⟩_{1,Q} 1_Q`.
    Sparse { cubes: Vec<DyadicCube> },
    /// `M^# f = sup_{Q ∋ x} ⟨|f − ⟨f⟩_Q|⟩_Q`.
    SharpMaximal,
    /// `M_r f = M^D(|f|^r)^{1/r}`.
    RAverage { r: f64 },
    /// The linearized maximal operator; on a single function it acts through the constant
    /// family over all cubes, whose `ℓ^∞` envelope is `M^D f`.
    LinearizedMaximal,
}

fn same_mesh(cubes: &[DyadicCube]) -> Result<()> {
    if let Some(first) = cubes.first() {
        if cubes.iter().any(|q| q.mesh() != first.mesh()) {
            return structural("cubes of an operator must share one mesh");
        }
    }
    Ok(())
}

fn canonical_cubes(cubes: Vec<DyadicCube>) -> Vec<DyadicCube> {
    cubes.into_iter().collect::<BTreeSet<_>>().into_iter().collect()
}

impl OperatorSpec {
    pub fn restricted(cubes: Vec<DyadicCube>) -> Result<Self> {
        same_mesh(&cubes)?;
        Ok(OperatorSpec::RestrictedMaximal { cubes: canonical_cubes(cubes) })
    }

    pub fn averaging(cube: DyadicCube) -> Self {
        OperatorSpec::Averaging { cube }
    }

    pub fn disjoint_averaging(cubes: Vec<DyadicCube>) -> Result<Self> {
        same_mesh(&cubes)?;
        let cubes = canonical_cubes(cubes);
        for (i, a) in cubes.iter().enumerate() {
            for b in &cubes[i + 1..] {
                if a.contains(b) || b.contains(a) {
                    return domain(format!("cubes {a} and {b} of a disjoint family overlap"));
                }
            }
        }
        Ok(OperatorSpec::DisjointAveraging { cubes })
    }

    pub fn sparse(cubes: Vec<DyadicCube>) -> Result<Self> {
        same_mesh(&cubes)?;
        Ok(OperatorSpec::Sparse { cubes: canonical_cubes(cubes) })
    }

    pub fn r_average(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return domain(format!("averaging exponent must lie in (0, inf), got {r}"));
        }
        Ok(OperatorSpec::RAverage { r })
    }

    /// The mesh fixed by the operator's cubes, if any.
    pub fn mesh(&self) -> Option<Mesh> {
        match self {
            OperatorSpec::Averaging { cube } => Some(cube.mesh()),
            OperatorSpec::RestrictedMaximal { cubes }
            | OperatorSpec::DisjointAveraging { cubes }
            | OperatorSpec::Sparse { cubes } => cubes.first().map(|q| q.mesh()),
            _ => None,
        }
    }

    /// `f ≤ g` pointwise in absolute value implies `Tf ≤ Tg`.
    pub fn is_monotone(&self) -> bool {
        !matches!(self, OperatorSpec::SharpMaximal)
    }

    /// Canonical text descriptor: a tag followed by the cube list in collection line format.
    pub fn descriptor(&self) -> String {
        let list = |cubes: &[DyadicCube]| cubes.iter().map(|q| q.to_line()).collect::<Vec<_>>().join(";");
        match self {
            OperatorSpec::DyadicMaximal => "M^D".into(),
            OperatorSpec::RestrictedMaximal { cubes } => format!("M^P{{{}}}", list(cubes)),
            OperatorSpec::Averaging { cube } => format!("T_Q{{{}}}", cube.to_line()),
            OperatorSpec::DisjointAveraging { cubes } => format!("A_P{{{}}}", list(cubes)),
            OperatorSpec::Sparse { cubes } => format!("A_S{{{}}}", list(cubes)),
            OperatorSpec::SharpMaximal => "M^#".into(),
            OperatorSpec::RAverage { r } => format!("M_r{{{r}}}"),
            OperatorSpec::LinearizedMaximal => "LM".into(),
        }
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if let Some(m) = self.mesh() {
            m.check_same(&f.mesh())?;
        }
        let mesh = f.mesh();
        let out = match self {
            OperatorSpec::DyadicMaximal | OperatorSpec::LinearizedMaximal => level_max(&Pyramid::of_abs(f), None),
            OperatorSpec::RestrictedMaximal { cubes } => {
                let mut member = vec![false; mesh.cube_count()];
                for q in cubes {
                    member[q.id()] = true;
                }
                level_max(&Pyramid::of_abs(f), Some(&member))
            }
            OperatorSpec::Averaging { cube } => {
                let pyr = Pyramid::of_abs(f);
                let mut out = vec![0.0; mesh.cell_count()];
                let a = pyr.get(cube);
                for c in cube.cells() {
                    out[c] = a;
                }
                out
            }
            OperatorSpec::DisjointAveraging { cubes } | OperatorSpec::Sparse { cubes } => {
                sparse_operator_pyr(cubes, &Pyramid::of_abs(f))
            }
            OperatorSpec::SharpMaximal => sharp(f),
            OperatorSpec::RAverage { r } => {
                level_max(&Pyramid::of_power(f, *r), None).into_iter().map(|v| v.powf(1.0 / r)).collect()
            }
        };
        GridFunction::new(mesh, out)
    }
}

// Cellwise maximum over levels of the pyramid, optionally restricted to member cubes.
fn level_max(pyr: &Pyramid, member: Option<&[bool]>) -> Vec<f64> {
    let mesh = pyr.mesh();
    let n = mesh.cell_count();
    let mut out = vec![0.0f64; n];
    for k in 0..=mesh.depth() {
        let shift = (mesh.depth() - k) * mesh.dim();
        let offset = mesh.level_offset(k);
        let row = pyr.level(k);
        for (x, o) in out.iter_mut().enumerate() {
            let code = x >> shift;
            if member.is_none_or(|m| m[offset + code]) {
                *o = o.max(row[code]);
            }
        }
    }
    out
}

fn sharp(f: &GridFunction) -> Vec<f64> {
    let mesh = f.mesh();
    let pyr = Pyramid::new(mesh, f.values());
    let n = mesh.cell_count();
    let mut out = vec![0.0f64; n];
    for k in 0..=mesh.depth() {
        let shift = (mesh.depth() - k) * mesh.dim();
        let means = pyr.level(k);
        let block = 1usize << shift;
        for (code, mean) in means.iter().enumerate() {
            let cells = code * block..(code + 1) * block;
            let osc = f.values()[cells.clone()].iter().map(|v| (v - mean).abs()).sum::<f64>() / block as f64;
            for o in &mut out[cells] {
                *o = o.max(osc);
            }
        }
    }
    out
}

/// `(⟨f_Q⟩_{1,Q} 1_Q)_{Q∈𝒬}`.
pub fn linearized_maximal(family: &MixedFamily) -> MixedFamily {
    let members = family
        .members
        .iter()
        .map(|(q, f)| {
            let avg = Pyramid::of_abs(f).get(q);
            (*q, GridFunction::indicator(q).scale(avg))
        })
        .collect();
    MixedFamily { members }
}

/// `‖𝓜F‖_{X[ℓ²]} / ‖F‖_{X[ℓ²]}`.
pub fn square_function_ratio(x: &SpaceSpec, family: &MixedFamily) -> Result<f64> {
    let den = mixed_norm(x, 2.0, family)?;
    if !(den > 0.0) {
        return domain("square function ratio of a family with zero norm");
    }
    Ok(mixed_norm(x, 2.0, &linearized_maximal(family))? / den)
}
