use rand::Rng;

use super::instances::random_function;
use super::{par_instances, Quantity, Sheet, SuiteConfig};
use crate::constants::families::random_sparse_family;
use crate::constants::{a_strong_constant, op_norm, Budget, Mode};
use crate::dyadic::appendix::{sparse_renormalize, weak_decomposition};
use crate::dyadic::sparse::SparseCollection;
use crate::dyadic::{DyadicCube, Mesh};
use crate::error::Result;
use crate::operators::{OperatorSpec, Target};
use crate::spaces::{conjugate_exponent, Certification, SpaceSpec};

fn random_collection(mesh: Mesh, rng: &mut impl Rng) -> Vec<DyadicCube> {
    let keep = rng.random_range(0.2..0.8);
    let mut s: Vec<DyadicCube> = mesh.cubes().filter(|_| rng.random::<f64>() < keep).collect();
    if s.is_empty() {
        s.push(mesh.root());
    }
    s
}

// renormalization postconditions on one seeded (S, f, ν)
fn renormalization(cfg: &SuiteConfig, i: usize) -> Result<Sheet> {
    let mut rng = cfg.rng(i);
    let mesh = Mesh::new(1, rng.random_range(1..=cfg.depth.max(1)))?;
    let cubes = random_collection(mesh, &mut rng);
    let f = random_function(mesh, &mut rng);
    let nu = rng.random_range(0.1..0.9);
    let s = SparseCollection { cubes: cubes.clone(), eta: 0.1, witness: None };
    let r = sparse_renormalize(&s, nu, &f)?;
    let name = format!("renorm#{i}(L={},nu={nu:.3})", mesh.depth());
    let tol = cfg.tolerance;
    let mut sh = Sheet::default();
    sh.row(&name, "constant", Quantity::exact(r.constant));
    sh.row(&name, "cubes", Quantity::exact(r.collection.cubes.len() as f64));
    sh.le(format!("appendix.{name}.child_packing"), Quantity::exact(r.max_child_ratio()), Quantity::exact(1.0 - nu), tol);
    sh.le(
        format!("appendix.{name}.domination"),
        Quantity::exact(r.domination_ratio(&cubes, &f)?),
        Quantity::exact(r.constant),
        tol,
    );
    let bad = if r.collection.check_witness(1e-12).is_ok() { 0.0 } else { 1.0 };
    sh.le(format!("appendix.{name}.witness"), Quantity::exact(bad), Quantity::exact(0.0), 0.0);
    Ok(sh)
}

// layer bounds and the integral inequality on one seeded (S, f, g)
fn decomposition(cfg: &SuiteConfig, i: usize) -> Result<Sheet> {
    let mut rng = cfg.rng(10_000 + i);
    let mesh = Mesh::new(1, rng.random_range(2..=cfg.depth.max(2)))?;
    let nu = rng.random_range(0.1..0.6);
    let f0 = random_function(mesh, &mut rng);
    // a collection with the packing condition, from the renormalization of a random one
    let s = SparseCollection { cubes: random_collection(mesh, &mut rng), eta: 0.1, witness: None };
    let cubes = sparse_renormalize(&s, nu, &f0)?.collection.cubes;
    let scale = rng.random_range(0.005..0.3) / f0.max_abs();
    let f = f0.scale(scale);
    let g = random_function(mesh, &mut rng);
    let w = weak_decomposition(&cubes, nu, &f)?;
    let (lhs, rhs) = w.integral_sides(&g);
    let name = format!("decomp#{i}(L={},nu={nu:.3})", mesh.depth());
    let tol = cfg.tolerance;
    let mut sh = Sheet::default();
    sh.row(&name, "layer_cubes", Quantity::exact(w.total_cubes() as f64));
    sh.le(format!("appendix.{name}.layer_size"), Quantity::exact(w.size_ratio()), Quantity::exact(1.0), tol);
    sh.le(format!("appendix.{name}.integral"), Quantity::exact(lhs), Quantity::exact(rhs), tol);
    Ok(sh)
}

/// The chain of cubes containing the first cell; `1/2`-sparse at every depth.
fn corner_chain(mesh: Mesh) -> Vec<DyadicCube> {
    (0..=mesh.depth()).map(|k| mesh.cell(0).ancestor(k)).collect()
}

pub(super) fn run(cfg: &SuiteConfig) -> Result<(Sheet, Vec<String>)> {
    let n = cfg.instances;
    let mut sheet = par_instances(n, |i| renormalization(cfg, i))?;
    sheet.extend(par_instances(n, |i| decomposition(cfg, i))?);

    // weak-type sparse bound on X' for X = L², r = 2, where X^r = L¹ has an exact strong constant
    let r = 2.0;
    let budget = Budget { mode: Mode::Exhaustive, ..cfg.budget.clone() };
    let (lo, hi) = cfg.sweep;
    let mut prev: Option<f64> = None;
    for depth in lo..=hi {
        let mesh = Mesh::new(1, depth)?;
        let x = SpaceSpec::lebesgue(mesh, 2.0);
        let xr = x.clone().concavify(r);
        let xd = x.dual();
        let name = format!("L^2,r=2,L={depth}");
        let strong = a_strong_constant(&xr, &Budget { mode: Mode::Exhaustive, ..budget.clone() })?;
        sheet.row(&name, "A_strong(X^r)", &strong);
        if strong.certification != Certification::Exact {
            continue;
        }
        let weak_m = op_norm(&OperatorSpec::DyadicMaximal, &xd, Target::Weak, &[], &budget)?;
        let rp = conjugate_exponent(r);
        let bound = rp * (1.0 + rp.ln()) * weak_m.value * strong.value.powf(1.0 / r);
        let mut rng = cfg.rng(20_000 + depth as usize);
        let mut fams = vec![corner_chain(mesh)];
        for _ in 0..4 {
            fams.push(random_sparse_family(mesh, 0.5, &mut rng)?);
        }
        let mut c_obs: f64 = 0.0;
        for fam in fams {
            let e = op_norm(&OperatorSpec::sparse(fam)?, &xd, Target::Weak, &[], &budget)?;
            c_obs = c_obs.max(e.value);
        }
        sheet.row(&name, "weak_op_norm(M,X')", &weak_m);
        sheet.row(&name, "C_obs", Quantity::lower(c_obs));
        sheet.row(&name, "bound", Quantity { value: bound, certification: weak_m.certification });
        sheet.finite(format!("appendix.sparse_weak.{name}.C_obs_finite"), Quantity::lower(c_obs));
        if let Some(p) = prev {
            sheet.trend_le(format!("appendix.sparse_weak.L{depth}<=2*L{}", depth - 1), c_obs, 2.0 * p);
        }
        prev = Some(c_obs);
    }
    let notes = vec![
        "renormalization input collections are random subsets of the mesh cubes".to_string(),
        "weak-type sparse constants are ascent lower bounds over the corner chain and random 1/2-sparse families".to_string(),
    ];
    Ok((sheet, notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::sparse::carleson_packing;
    use crate::verify::{run_suite, SuiteId};

    #[test]
    fn corner_chain_is_half_sparse() {
        let m = Mesh::new(1, 5).unwrap();
        assert!(carleson_packing(&corner_chain(m), 0.5).unwrap());
    }

    #[test]
    fn small_appendix_run() {
        let mut cfg = SuiteConfig::new(SuiteId::Appendix, 9);
        cfg.instances = 8;
        cfg.sweep = (2, 3);
        let r = run_suite(&cfg, false).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
        assert!(r.rows.iter().any(|row| row.quantity == "C_obs"));
    }
}
