use rand::Rng;

use super::instances::random_function;
use super::{par_instances, Quantity, Sheet, SuiteConfig};
use crate::constants::families::random_partition;
use crate::constants::op_norm;
use crate::dyadic::{DyadicCube, GridFunction, Mesh};
use crate::error::Result;
use crate::operators::{square_function_ratio, OperatorSpec, Target};
use crate::spaces::{MixedFamily, SpaceSpec};

/// Probe spaces per depth of the sweep: `L²`, a two-valued variable exponent and unweighted Morrey.
fn instances(cfg: &SuiteConfig) -> Result<Vec<(String, SpaceSpec)>> {
    if !cfg.spaces.is_empty() || cfg.instances == 0 {
        return Ok(cfg.spaces.clone());
    }
    let mut out = Vec::new();
    for l in cfg.sweep.0..=cfg.sweep.1 {
        let mesh = Mesh::new(1, l)?;
        let one = GridFunction::constant(mesh, 1.0);
        let half = mesh.cell_count() / 2;
        let p = (0..mesh.cell_count()).map(|c| if c < half { 1.5 } else { 3.0 }).collect();
        out.push((format!("L^2,L={l}"), SpaceSpec::lebesgue(mesh, 2.0)));
        out.push((format!("L^p(.){{1.5|3}},L={l}"), SpaceSpec::variable(p, one.clone())?));
        out.push((format!("M^{{1.5,3}},L={l}"), SpaceSpec::morrey(1.5, 3.0, one)?));
    }
    Ok(out)
}

fn random_family(mesh: Mesh, rng: &mut impl Rng) -> MixedFamily {
    let cubes: Vec<DyadicCube> = if rng.random::<bool>() {
        mesh.cubes().collect()
    } else {
        random_partition(mesh, 0.5, rng)
    };
    let members = cubes.into_iter().map(|q| (q, random_function(mesh, rng))).collect();
    MixedFamily { members }
}

pub(super) fn run(cfg: &SuiteConfig) -> Result<(Sheet, Vec<String>)> {
    let spaces = instances(cfg)?;
    let sheet = par_instances(spaces.len(), |i| {
        let (name, x) = &spaces[i];
        let mut s = Sheet::default();
        let m = op_norm(&OperatorSpec::DyadicMaximal, x, Target::Strong, &[], &cfg.budget)?;
        let md = op_norm(&OperatorSpec::DyadicMaximal, &x.dual(), Target::Strong, &[], &cfg.budget)?;
        let mut rng = cfg.rng(i);
        let mut square: f64 = 0.0;
        for _ in 0..16 {
            square = square.max(square_function_ratio(x, &random_family(x.mesh(), &mut rng))?);
        }
        s.row(name, "op_norm", &m);
        s.row(name, "op_norm_dual", &md);
        s.row(name, "square_function_ratio", Quantity::lower(square));
        s.row(name, "square_function_ratio^2", Quantity::lower(square * square));
        s.row(name, "op_norm*op_norm_dual", Quantity::lower(m.value * md.value));
        Ok(s)
    })?;
    let notes = vec!["probe data only: nothing here is asserted".to_string()];
    Ok((sheet, notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{run_suite, SuiteId};

    #[test]
    fn probe_never_asserts() {
        let mut cfg = SuiteConfig::new(SuiteId::ConjectureProbe, 1);
        cfg.sweep = (2, 2);
        let r = run_suite(&cfg, true).unwrap();
        assert!(r.assertions.is_empty());
        let l2: Vec<f64> = r.rows.iter().filter(|row| row.instance == "L^2,L=2").map(|row| row.value).collect();
        assert!(l2[0] >= 1.0 && l2[1] >= 1.0 && l2[2].is_finite());
        cfg.instances = 0;
        assert!(run_suite(&cfg, false).unwrap().rows.is_empty());
    }
}
