use serde::{Deserialize, Serialize};

use super::OperatorSpec;
use crate::dyadic::GridFunction;
use crate::error::Result;
use crate::search::{ratio_ascent, SearchOptions};
use crate::spaces::{conjugate_exponent, kothe_dual_norm, norm, weak_norm, Certification, Estimate, SpaceSpec};

/// Target of an operator norm: `X → X` or `X → X_weak`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Strong,
    Weak,
}

impl Target {
    pub fn norm(self, x: &SpaceSpec, f: &GridFunction) -> Result<f64> {
        match self {
            Target::Strong => norm(x, f),
            Target::Weak => weak_norm(x, f),
        }
    }
}

/// `sup_f ‖Tf‖_Y / ‖f‖_X` with `Y = X` or `X_weak`; the witness is the maximizing `f`.
///
/// On `L¹_w` the strong norm is a convex function maximized over a polytope, so enumerating
/// the normalized atoms is exact. On `L^∞_w` a monotone operator is maximal at the top element
/// `1/w` of the ball. For `T_Q`, and for `A_P` on weighted Lebesgue spaces, the norm is at most
/// `max_Q |Q|^{-1}‖1_Q‖_X‖1_Q‖_{X'}` and the dual norming function of `1_Q` is tried as a
/// witness; the estimate is exact when the two meet. Everything else is a seeded ascent lower
/// bound started from `seeds`, atoms, cube indicators and random functions.
pub fn operator_norm(
    t: &OperatorSpec,
    x: &SpaceSpec,
    target: Target,
    seeds: &[GridFunction],
    opts: &SearchOptions,
) -> Result<Estimate> {
    let mesh = x.mesh();
    if let Some(m) = t.mesh() {
        m.check_same(&mesh)?;
    }
    for s in seeds {
        x.check_mesh(s)?;
    }
    let ratio = |f: &GridFunction| -> Result<f64> {
        let d = norm(x, f)?;
        if !(d > 0.0) {
            return Ok(0.0);
        }
        Ok(target.norm(x, &t.apply(f)?)? / d)
    };
    let best_of = |cands: &[GridFunction]| -> Result<(f64, GridFunction)> {
        let mut best = (0.0, GridFunction::zeros(mesh));
        for f in cands {
            let r = ratio(f)?;
            if r > best.0 {
                best = (r, f.clone());
            }
        }
        Ok(best)
    };
    let lebesgue = x.as_weighted_lebesgue();
    if let Some((p, w)) = &lebesgue {
        if *p == 1.0 && target == Target::Strong {
            let atoms: Vec<GridFunction> = (0..mesh.cell_count())
                .map(|c| GridFunction::indicator(&mesh.cell(c)).scale(1.0 / (w.values()[c] * mesh.cell_measure())))
                .collect();
            let (value, f) = best_of(&atoms)?;
            return Ok(exact(value, f));
        }
        if p.is_infinite() && t.is_monotone() {
            let top = w.map(|v| 1.0 / v);
            return Ok(exact(ratio(&top)?, top));
        }
    }
    let mut seeds = seeds.to_vec();
    let mut upper = f64::INFINITY;
    let averaging_cubes = match t {
        OperatorSpec::Averaging { cube } => Some(vec![*cube]),
        OperatorSpec::DisjointAveraging { cubes } if lebesgue.as_ref().is_some_and(|(p, _)| *p >= 1.0) => {
            Some(cubes.clone())
        }
        _ => None,
    };
    if let (Some(cubes), Target::Strong) = (averaging_cubes, target) {
        let mut best = 0.0f64;
        let mut certified = true;
        for q in &cubes {
            let ind = GridFunction::indicator(q);
            let d = kothe_dual_norm(x, &ind)?;
            certified &= d.certification == Certification::Exact;
            best = best.max(norm(x, &ind)? * d.upper / q.measure());
            seeds.extend(d.witness);
        }
        let (value, f) = best_of(&seeds)?;
        if certified && value >= best * (1.0 - 1e-12) {
            return Ok(exact(value, f));
        }
        upper = best;
    }
    let support: Vec<usize> = (0..mesh.cell_count()).collect();
    if let Some((_, w)) = &lebesgue {
        seeds.extend((0..mesh.cell_count()).map(|c| GridFunction::indicator(&mesh.cell(c)).scale(1.0 / w.values()[c])));
        seeds.push(w.map(|v| 1.0 / v));
    }
    let (value, f) = ratio_ascent(mesh, &support, &ratio, &seeds, opts)?;
    Ok(Estimate { value, certification: Certification::LowerBound, upper: upper.max(value), witness: Some(f) })
}

fn exact(value: f64, f: GridFunction) -> Estimate {
    Estimate { value, certification: Certification::Exact, upper: value, witness: Some(f) }
}

/// An upper bound `B ≥ ‖M^D‖_{X→X}` and whether it is certified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximalBound {
    pub value: f64,
    pub certified: bool,
}

/// Safety factor applied to a lower bound of `‖M^D‖_{X→X}` when no certified bound exists.
pub const UNCERTIFIED_ESCALATION: f64 = 1.5;

/// `B ≥ ‖M^D‖_{X→X}`: exact on `L¹_w` and `L^∞_w`, Doob's `p'` on unweighted `L^p`, and
/// otherwise an escalated lower bound flagged as uncertified.
pub fn maximal_bound(x: &SpaceSpec, opts: &SearchOptions) -> Result<MaximalBound> {
    if let Some((p, w)) = x.as_weighted_lebesgue() {
        let unweighted = w.values().iter().all(|&v| v == w.values()[0]);
        if p > 1.0 && p.is_finite() && unweighted {
            return Ok(MaximalBound { value: conjugate_exponent(p), certified: true });
        }
    }
    let e = operator_norm(&OperatorSpec::DyadicMaximal, x, Target::Strong, &[], opts)?;
    Ok(match e.certification {
        Certification::Exact => MaximalBound { value: e.value, certified: true },
        Certification::LowerBound => MaximalBound { value: e.value * UNCERTIFIED_ESCALATION, certified: false },
    })
}
