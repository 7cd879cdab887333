use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::families::{partitions, random_partition};
use super::{better, Budget, BudgetUsed, ConstantName, ConstantReport, Mode, Witness};
use crate::dyadic::sparse::render_collection;
use crate::dyadic::{DyadicCube, GridFunction};
use crate::error::{domain, Result};
use crate::search::ratio_ascent;
use crate::spaces::{kothe_dual_norm, norm, norming_witness, Certification, SpaceSpec};

/// `[X]_𝒢` together with the two reconstruction constants it is bracketed by.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyG {
    pub c2: ConstantReport,
    pub c2_tilde: ConstantReport,
    pub g: ConstantReport,
}

// F = Σ_Q ‖f 1_Q‖_X / ‖1_Q‖_X · 1_Q
fn local_norm_function(x: &SpaceSpec, cubes: &[DyadicCube], f: &GridFunction) -> Result<GridFunction> {
    let mut out = vec![0.0; f.len()];
    for q in cubes {
        let c = norm(x, &f.restrict(q))? / norm(x, &GridFunction::indicator(q))?;
        for i in q.cells() {
            out[i] = c;
        }
    }
    GridFunction::new(f.mesh(), out)
}

fn support_mask(cubes: &[DyadicCube], f: &GridFunction) -> GridFunction {
    let mut out = vec![0.0; f.len()];
    for q in cubes {
        for i in q.cells() {
            out[i] = f.values()[i];
        }
    }
    GridFunction::new(f.mesh(), out).expect("finite values")
}

/// `(‖F‖/‖f‖, ‖f‖/‖F‖)` with `F = Σ_{Q∈𝒫} ‖f‖_{X_Q} 1_Q`, after restricting `f` to `∪𝒫`.
pub(super) fn reconstruction_ratios(x: &SpaceSpec, cubes: &[DyadicCube], f: &GridFunction) -> Result<(f64, f64)> {
    let f = support_mask(cubes, f);
    let nf = norm(x, &f)?;
    if !(nf > 0.0) {
        return Ok((0.0, 0.0));
    }
    let nbig = norm(x, &local_norm_function(x, cubes, &f)?)?;
    Ok((nbig / nf, nf / nbig))
}

/// `Σ_Q ‖f1_Q‖_X ‖g1_Q‖_{X'} / (‖f‖_X ‖g‖_{X'})`, with lower bounds for the local duals and the
/// upper bound for `‖g‖_{X'}`, so the result never overstates the true ratio.
pub(super) fn g_ratio(x: &SpaceSpec, cubes: &[DyadicCube], f: &GridFunction, g: &GridFunction) -> Result<f64> {
    Ok(g_terms(x, cubes, f, g)?.0)
}

// Ratio plus the local dual witnesses h_Q, each normalized to ‖h_Q‖_X = 1.
fn g_terms(x: &SpaceSpec, cubes: &[DyadicCube], f: &GridFunction, g: &GridFunction) -> Result<(f64, Vec<Option<GridFunction>>)> {
    let nf = norm(x, f)?;
    let dg = kothe_dual_norm(x, g)?.upper;
    if !(nf > 0.0 && dg > 0.0 && dg.is_finite()) {
        return Ok((0.0, vec![None; cubes.len()]));
    }
    let mut sum = 0.0;
    let mut hs = Vec::with_capacity(cubes.len());
    for q in cubes {
        let d = kothe_dual_norm(x, &g.restrict(q))?;
        sum += norm(x, &f.restrict(q))? * d.value;
        hs.push(d.witness.map(|h| h.restrict(q)));
    }
    Ok((sum / (nf * dg), hs))
}

/// `[X]_𝒢 = sup Σ_{Q∈𝒫} ‖f1_Q‖_X‖g1_Q‖_{X'} / (‖f‖_X‖g‖_{X'})`; 1 in closed form for `L^p_w`.
pub fn g_constant(x: &SpaceSpec, budget: &Budget) -> Result<ConstantReport> {
    Ok(property_g(x, budget, &[])?.g)
}

struct Best {
    value: f64,
    key: String,
    cubes: Vec<DyadicCube>,
    f: GridFunction,
    g: Option<GridFunction>,
}

impl Best {
    fn new(x: &SpaceSpec) -> Best {
        let mesh = x.mesh();
        Best { value: 0.0, key: String::new(), cubes: vec![mesh.root()], f: GridFunction::zeros(mesh), g: None }
    }

    fn offer(&mut self, value: f64, cubes: &[DyadicCube], f: &GridFunction, g: Option<&GridFunction>) -> bool {
        let key = render_collection(cubes);
        if self.key.is_empty() && value >= self.value || better(value, &key, self.value, &self.key) {
            *self = Best { value, key, cubes: cubes.to_vec(), f: f.clone(), g: g.cloned() };
            return true;
        }
        false
    }
}

/// Estimates `C₂`, `C̃₂` and `[X]_𝒢` under one family loop.
///
/// For each partition the two reconstruction ratios are maximized by ascent. Witnesses are then
/// transported between the three problems until nothing improves: a `C₂` witness `f` gives the
/// pairing `(f, h)` with `h` norming `F`, a `C̃₂` witness gives `(F, h)` with `h` norming `f`,
/// and a `𝒢` witness `(f, g)` gives `f` for `C₂` and `Σ_Q ‖f1_Q‖ h_Q` for `C̃₂`, where `h_Q`
/// norms `g1_Q`. Those are the steps that prove `max{C₂, C̃₂} ≤ [X]_𝒢 ≤ C₂C̃₂`, so the three
/// lower bounds satisfy the bracket up to rounding.
pub fn property_g(x: &SpaceSpec, budget: &Budget, seeds: &[GridFunction]) -> Result<PropertyG> {
    let mesh = x.mesh();
    let fams: Vec<Vec<DyadicCube>> = match budget.mode {
        Mode::Exhaustive => partitions(mesh)?,
        Mode::Greedy => (0..=mesh.depth()).map(|k| mesh.cubes().filter(|q| q.level() == k).collect()).collect(),
        Mode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(budget.search.seed);
            let mut v = vec![vec![mesh.root()]];
            while v.len() < budget.families.max(1) {
                v.push(random_partition(mesh, 0.5, &mut rng));
            }
            v
        }
    };
    if fams.is_empty() {
        return domain("no partition to evaluate");
    }
    let all: Vec<usize> = (0..mesh.cell_count()).collect();
    let mut c2 = Best::new(x);
    let mut c2t = Best::new(x);
    let mut g = Best::new(x);
    for p in &fams {
        let up = |f: &GridFunction| reconstruction_ratios(x, p, f).map(|r| r.0);
        let down = |f: &GridFunction| reconstruction_ratios(x, p, f).map(|r| r.1);
        let (v, f) = ratio_ascent(mesh, &all, &up, seeds, &budget.search)?;
        c2.offer(v, p, &f, None);
        let (v, f) = ratio_ascent(mesh, &all, &down, seeds, &budget.search)?;
        c2t.offer(v, p, &f, None);
    }
    // transport until the three estimates are closed under the proof's constructions
    for _ in 0..8 {
        let mut changed = false;
        let f = support_mask(&c2.cubes, &c2.f);
        let big = local_norm_function(x, &c2.cubes, &f)?;
        if let Some(h) = norming_witness(x, &big)? {
            changed |= g.offer(g_ratio(x, &c2.cubes, &f, &h)?, &c2.cubes, &f, Some(&h));
        }
        let f = support_mask(&c2t.cubes, &c2t.f);
        let big = local_norm_function(x, &c2t.cubes, &f)?;
        if let Some(h) = norming_witness(x, &f)? {
            changed |= g.offer(g_ratio(x, &c2t.cubes, &big, &h)?, &c2t.cubes, &big, Some(&h));
        }
        if let Some(gg) = g.g.clone() {
            let (cubes, f) = (g.cubes.clone(), g.f.clone());
            changed |= c2.offer(reconstruction_ratios(x, &cubes, &f)?.0, &cubes, &f, None);
            let (_, hs) = g_terms(x, &cubes, &f, &gg)?;
            let mut phi = vec![0.0; f.len()];
            for (q, h) in cubes.iter().zip(&hs) {
                let a = norm(x, &f.restrict(q))?;
                for i in q.cells() {
                    phi[i] = match h {
                        Some(h) => a * h.values()[i],
                        None => 0.0,
                    };
                }
            }
            let phi = GridFunction::new(mesh, phi)?;
            changed |= c2t.offer(reconstruction_ratios(x, &cubes, &phi)?.1, &cubes, &phi, None);
        }
        if !changed {
            break;
        }
    }
    let used = BudgetUsed::new(budget.mode, fams.len(), mesh.cube_count(), &budget.search);
    let report = |name, b: &Best| ConstantReport {
        name,
        value: b.value,
        certification: Certification::LowerBound,
        witness: Witness {
            cubes: Witness::cubes(&b.cubes),
            function: Some(b.f.clone()),
            dual_function: b.g.clone(),
            ..Default::default()
        },
        seed: budget.search.seed,
        budget: used.clone(),
    };
    let mut g_report = report(ConstantName::G, &g);
    if x.as_weighted_lebesgue().is_some_and(|(p, _)| p >= 1.0) {
        // sequence Hölder: Σ a_Q b_Q ≤ ‖a‖_{ℓ^p}‖b‖_{ℓ^{p'}} with equality for aligned sequences
        g_report = ConstantReport {
            name: ConstantName::G,
            value: 1.0,
            certification: Certification::Exact,
            witness: Witness { cubes: Witness::cubes(&[mesh.root()]), ..Default::default() },
            seed: 0,
            budget: BudgetUsed::closed_form(),
        };
    }
    Ok(PropertyG { c2: report(ConstantName::C2, &c2), c2_tilde: report(ConstantName::C2Tilde, &c2t), g: g_report })
}
