use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Budget, BudgetUsed, ConstantName, ConstantReport, Mode, Witness};
use crate::dyadic::GridFunction;
use crate::error::{domain, Result};
use crate::spaces::{norm, Certification, SpaceSpec};

fn lp_sum(vals: impl Iterator<Item = f64>, r: f64) -> f64 {
    if r.is_infinite() {
        vals.fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        vals.map(|v| v.abs().powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// `‖(Σ|f_j|^r)^{1/r}‖ / (Σ‖f_j‖^r)^{1/r}` for convexity, and the reciprocal form with `s` for concavity.
pub(super) fn family_ratio(x: &SpaceSpec, convexity: bool, r: f64, fam: &[GridFunction]) -> Result<f64> {
    let Some(first) = fam.first() else {
        return domain("empty function family");
    };
    let mesh = first.mesh();
    let combined: Vec<f64> =
        (0..mesh.cell_count()).map(|i| lp_sum(fam.iter().map(|f| f.values()[i]), r)).collect();
    let combined = norm(x, &GridFunction::new(mesh, combined)?)?;
    let norms: Vec<f64> = fam.iter().map(|f| norm(x, f)).collect::<Result<_>>()?;
    let separate = lp_sum(norms.into_iter(), r);
    let (num, den) = if convexity { (combined, separate) } else { (separate, combined) };
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

fn sample_family(rng: &mut ChaCha8Rng, x: &SpaceSpec, i: usize) -> Vec<GridFunction> {
    let mesh = x.mesh();
    let n = mesh.cell_count();
    let k = 2 + i % 3;
    match i % 3 {
        // disjointly supported blocks
        0 => {
            let owner: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            (0..k)
                .map(|j| {
                    let v = (0..n).map(|c| if owner[c] == j { rng.random::<f64>() + 0.05 } else { 0.0 }).collect();
                    GridFunction::new(mesh, v).expect("finite values")
                })
                .collect()
        }
        // sparse random patterns
        1 => (0..k)
            .map(|_| {
                let v = (0..n).map(|_| if rng.random::<f64>() < 0.4 { rng.random::<f64>() } else { 0.0 }).collect();
                GridFunction::new(mesh, v).expect("finite values")
            })
            .collect(),
        _ => (0..k)
            .map(|_| {
                let v = (0..n).map(|_| rng.random::<f64>().powi(2) + 1e-3).collect();
                GridFunction::new(mesh, v).expect("finite values")
            })
            .collect(),
    }
}

/// Lower bounds for the `r`-convexity constant `M^{(r)}(X)` and the `s`-concavity constant
/// `M_{(s)}(X)` from seeded random families, floored at 1 by the singleton family.
/// For `L^p_w` with `r ≤ p ≤ s` both are 1 in closed form.
pub fn convexity_constants(x: &SpaceSpec, r: f64, s: f64, budget: &Budget) -> Result<(ConstantReport, ConstantReport)> {
    if !(r > 0.0 && r <= s) {
        return domain(format!("convexity exponents need 0 < r <= s, got r={r}, s={s}"));
    }
    let closed = |name, param| ConstantReport {
        name,
        value: 1.0,
        certification: Certification::Exact,
        witness: Witness { parameter: Some(param), ..Default::default() },
        seed: 0,
        budget: BudgetUsed::closed_form(),
    };
    if let Some((p, _)) = x.as_weighted_lebesgue() {
        if r <= p && p <= s {
            return Ok((closed(ConstantName::Convexity, r), closed(ConstantName::Concavity, s)));
        }
    }
    let mesh = x.mesh();
    let singleton = vec![GridFunction::constant(mesh, 1.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(budget.search.seed);
    let families: Vec<Vec<GridFunction>> =
        (0..budget.families).map(|i| sample_family(&mut rng, x, i)).collect();
    let search = |convexity: bool, param: f64| -> Result<(f64, Vec<GridFunction>)> {
        let mut best = (family_ratio(x, convexity, param, &singleton)?, singleton.clone());
        for fam in &families {
            let v = family_ratio(x, convexity, param, fam)?;
            if v > best.0 {
                best = (v, fam.clone());
            }
        }
        Ok(best)
    };
    let report = |name, param, (value, fam): (f64, Vec<GridFunction>)| ConstantReport {
        name,
        value,
        certification: Certification::LowerBound,
        witness: Witness { family: Some(fam), parameter: Some(param), ..Default::default() },
        seed: budget.search.seed,
        budget: BudgetUsed::new(Mode::Random, budget.families + 1, 0, &budget.search),
    };
    Ok((
        report(ConstantName::Convexity, r, search(true, r)?),
        report(ConstantName::Concavity, s, search(false, s)?),
    ))
}
