use rand::Rng;

use super::instances::{log_normal, random_function};
use super::{par_instances, Quantity, Sheet, SuiteConfig};
use crate::constants::{a_strong_constant, muckenhoupt_space_constant, Budget, Mode};
use crate::dyadic::{GridFunction, Mesh};
use crate::error::Result;
use crate::operators::OperatorSpec;
use crate::spaces::{kothe_dual_norm, norm, SpaceSpec};

const EXPONENTS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];

fn variable_exponent(mesh: Mesh, rng: &mut impl Rng) -> Result<SpaceSpec> {
    let p: Vec<f64> = (0..mesh.cell_count()).map(|_| rng.random_range(1.2..=4.0)).collect();
    SpaceSpec::variable(p, GridFunction::constant(mesh, 1.0))
}

/// Spaces for the constant comparisons: weighted `L^p` for each exponent, then two variable
/// exponent spaces.
fn constant_instances(cfg: &SuiteConfig) -> Result<Vec<(String, SpaceSpec)>> {
    if !cfg.spaces.is_empty() {
        return Ok(cfg.spaces.clone());
    }
    let mesh = Mesh::new(1, cfg.depth)?;
    let mut out = Vec::new();
    for (i, p) in EXPONENTS.into_iter().enumerate() {
        let mut rng = cfg.rng(i);
        let w = log_normal(mesh, 0.7, &mut rng)?;
        out.push((format!("L^{p}_w#{i}"), SpaceSpec::weighted(p, w)?));
    }
    for i in 0..2 {
        let mut rng = cfg.rng(EXPONENTS.len() + i);
        out.push((format!("L^p(.)#{i}"), variable_exponent(mesh, &mut rng)?));
    }
    Ok(out)
}

// sup over random f, g of ∫(M^D f)^p |g| / ∫|f|^p M^D g
fn fefferman_stein(cfg: &SuiteConfig, depth: u32, p: f64) -> Result<f64> {
    let mesh = Mesh::new(1, depth)?;
    let mut rng = cfg.rng(2_000_000 + depth as usize);
    let mut best: f64 = 0.0;
    for _ in 0..64 {
        let f = random_function(mesh, &mut rng);
        let g = random_function(mesh, &mut rng);
        let mf = OperatorSpec::DyadicMaximal.apply(&f)?;
        let mg = OperatorSpec::DyadicMaximal.apply(&g)?;
        let lhs = mf.map(|v| v.powf(p)).pairing(&g);
        let rhs = f.map(|v| v.powf(p)).pairing(&mg);
        if rhs > 0.0 {
            best = best.max(lhs / rhs);
        }
    }
    Ok(best)
}

pub(super) fn run(cfg: &SuiteConfig) -> Result<(Sheet, Vec<String>)> {
    let tol = cfg.tolerance;
    let budget = Budget { mode: Mode::Exhaustive, ..cfg.budget.clone() };
    let spaces = constant_instances(cfg)?;
    let mut sheet = par_instances(spaces.len(), |i| {
        let (name, x) = &spaces[i];
        let xd = x.clone().kothe_dual();
        let mut s = Sheet::default();
        let a = muckenhoupt_space_constant(x)?;
        let ad = muckenhoupt_space_constant(&xd)?;
        s.row(name, "A", &a);
        s.row(name, "A_dual", &ad);
        s.eq(format!("duality.{name}.A_dual==A"), &ad, &a, tol);
        if x.as_weighted_lebesgue().is_some() {
            let st = a_strong_constant(x, &budget)?;
            let std = a_strong_constant(&xd, &budget)?;
            s.row(name, "A_strong", &st);
            s.row(name, "A_strong_dual", &std);
            s.eq(format!("duality.{name}.A_strong_dual==A_strong"), &std, &st, tol);
        }
        Ok(s)
    })?;

    // bidual norms of random functions over a rotating set of spaces
    let mesh = Mesh::new(1, cfg.depth)?;
    let bidual = par_instances(cfg.instances, |i| {
        let mut rng = cfg.rng(1_000_000 + i);
        let x = match spaces.get(i % (spaces.len() + 1)) {
            Some((_, x)) => x.clone(),
            None => variable_exponent(mesh, &mut rng)?,
        };
        let f = random_function(x.mesh(), &mut rng);
        let n = norm(&x, &f)?;
        let e = kothe_dual_norm(&x.clone().kothe_dual(), &f)?;
        let mut s = Sheet::default();
        let name = format!("f#{i}:{}", x.label());
        s.row(&name, "norm", Quantity::exact(n));
        s.row(&name, "bidual_norm", Quantity { value: e.value, certification: e.certification });
        s.eq(format!("duality.bidual.{name}"), Quantity { value: e.value, certification: e.certification }, Quantity::exact(n), tol);
        Ok(s)
    })?;
    sheet.extend(bidual);

    // Fefferman–Stein ratio for p = 2 across depths
    let (lo, hi) = cfg.sweep;
    let mut prev: Option<f64> = None;
    for depth in lo..=hi {
        let r = fefferman_stein(cfg, depth, 2.0)?;
        sheet.row(&format!("depth={depth}"), "fefferman_stein_ratio", Quantity::lower(r));
        if let Some(p) = prev {
            sheet.trend_le(format!("duality.fefferman_stein.depth{depth}<=2*depth{}", depth - 1), r, 2.0 * p);
        }
        prev = Some(r);
    }
    let notes = vec![
        "bidual norms via a closed-form norming function of the inner space".to_string(),
        "Fefferman-Stein ratios are sampled lower bounds and only checked for depth stability".to_string(),
    ];
    Ok((sheet, notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{run_suite, SuiteId};

    #[test]
    fn small_duality_run() {
        let mut cfg = SuiteConfig::new(SuiteId::Duality, 2);
        cfg.instances = 10;
        cfg.depth = 2;
        cfg.sweep = (2, 3);
        let r = run_suite(&cfg, false).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
        assert!(r.assertions.iter().any(|a| a.id.contains("A_strong_dual")));
    }
}
