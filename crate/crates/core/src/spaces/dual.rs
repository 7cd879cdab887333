use serde::{Deserialize, Serialize};

use super::morrey::morrey_dual;
use super::norm::{morrey_norm_arg, norm, norm_estimate, predual_of_block, weighted_lp};
use super::phi::{conjugate_exponent, PhiFunction};
use super::SpaceSpec;
use crate::dyadic::GridFunction;
use crate::error::{structural, Result};
use crate::search::{ratio_ascent, SearchOptions};

/// How much a computed quantity can be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Certification {
    /// Closed form or exhausted search.
    Exact,
    /// Value attained by an explicit witness; the true quantity may be larger.
    LowerBound,
}

impl Certification {
    pub fn and(self, other: Certification) -> Certification {
        if self == Certification::Exact && other == Certification::Exact {
            Certification::Exact
        } else {
            Certification::LowerBound
        }
    }
}

/// A value with its certification, an upper bound (`∞` when none is known) and, for dual
/// norms, a witness `f` in the predual with `‖f‖ ≤ 1` attaining the value.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub certification: Certification,
    pub upper: f64,
    pub witness: Option<GridFunction>,
}

pub type DualEstimate = Estimate;

impl Estimate {
    pub fn exact(value: f64) -> Estimate {
        Estimate { value, certification: Certification::Exact, upper: value, witness: None }
    }

    pub fn lower(value: f64, upper: f64) -> Estimate {
        Estimate { value, certification: Certification::LowerBound, upper: upper.max(value), witness: None }
    }

    fn with_witness(mut self, f: Option<GridFunction>) -> Estimate {
        self.witness = f;
        self
    }
}

/// Budget and seed for the ascent used when no closed form or exact program is available.
pub type DualOptions = SearchOptions;

/// `‖g‖_{X'} = sup_{‖f‖_X ≤ 1} ∫|fg|` with the default ascent budget.
pub fn kothe_dual_norm(x: &SpaceSpec, g: &GridFunction) -> Result<Estimate> {
    kothe_dual_norm_with(x, g, &DualOptions::default())
}

/// `‖g‖_{X'}` with certification.
///
/// Weighted Lebesgue duals are closed forms; Luxemburg duals use the Amemiya formula;
/// Morrey duals solve the tree program of `morrey` and carry its Lagrangian upper bound;
/// biduals pair a norming function with an independent dual evaluation. Everything else
/// falls back to a seeded multi-start ascent and is only a lower bound.
pub fn kothe_dual_norm_with(x: &SpaceSpec, g: &GridFunction, opts: &DualOptions) -> Result<Estimate> {
    x.check_mesh(g)?;
    if g.is_zero() {
        return Ok(Estimate::exact(0.0));
    }
    if let Some((p, w)) = x.as_weighted_lebesgue() {
        return Ok(lebesgue_dual(p, &w, g));
    }
    match x {
        SpaceSpec::VariableLebesgue { p, w } => amemiya_dual(&PhiFunction::variable_lebesgue(p, w)?, g),
        SpaceSpec::MusielakOrlicz { phi } => amemiya_dual(phi, g),
        SpaceSpec::Morrey { p, q, w } => {
            let d = morrey_dual(*p, *q, w, g);
            Ok(Estimate::lower(d.value, d.upper).with_witness(Some(d.witness)))
        }
        SpaceSpec::Block { p, q, w } => bidual(&predual_of_block(*p, *q, w), g, opts),
        SpaceSpec::KotheDual { inner } => bidual(inner, g, opts),
        SpaceSpec::Concavification { .. } | SpaceSpec::WeakType { .. } => {
            check_saturated(x)?;
            let (value, f) = ascent(g, &|h| norm(x, h), seeds_for(x, g), opts)?;
            Ok(Estimate::lower(value, f64::INFINITY).with_witness(Some(f)))
        }
        SpaceSpec::WeightedLebesgue { .. } => unreachable!("handled by the closed form"),
    }
}

fn lebesgue_dual(p: f64, w: &GridFunction, g: &GridFunction) -> Estimate {
    let mesh = g.mesh();
    let mu = mesh.cell_measure();
    if p < 1.0 {
        // extreme points of the quasi-ball are normalized atoms
        let (c, best) = g
            .values()
            .iter()
            .zip(w.values())
            .map(|(g, w)| g.abs() / w)
            .enumerate()
            .fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let mut f = vec![0.0; mesh.cell_count()];
        f[c] = 1.0 / (w.values()[c] * mu.powf(1.0 / p));
        let value = best * mu.powf(1.0 - 1.0 / p);
        return Estimate::exact(value).with_witness(GridFunction::new(mesh, f).ok());
    }
    let pd = conjugate_exponent(p);
    let wd = w.map(|v| 1.0 / v);
    let value = weighted_lp(pd, &wd, g);
    let witness = lebesgue_norming(pd, &wd, g).map(|f| {
        let n = weighted_lp(p, w, &f);
        f.scale(1.0 / n)
    });
    Estimate::exact(value).with_witness(witness)
}

/// `h` with `∫|fh| = ‖f‖_{L^p_w}‖h‖_{L^{p'}_{1/w}}`.
fn lebesgue_norming(p: f64, w: &GridFunction, f: &GridFunction) -> Option<GridFunction> {
    if f.is_zero() {
        return None;
    }
    if p.is_infinite() {
        let (c, _) = f
            .values()
            .iter()
            .zip(w.values())
            .map(|(f, w)| (f * w).abs())
            .enumerate()
            .fold((0, -1.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let mut h = vec![0.0; f.len()];
        h[c] = w.values()[c];
        return GridFunction::new(f.mesh(), h).ok();
    }
    if p == 1.0 {
        return Some(w.clone());
    }
    let h: Vec<f64> = f.values().iter().zip(w.values()).map(|(f, w)| f.abs().powf(p - 1.0) * w.powf(p)).collect();
    GridFunction::new(f.mesh(), h).ok()
}

fn amemiya_dual(phi: &PhiFunction, g: &GridFunction) -> Result<Estimate> {
    let star = phi.conjugate();
    let (value, k) = star.amemiya(g.values())?;
    let f: Vec<f64> = star.cells.iter().zip(g.values()).map(|(c, v)| c.derivative(k * v.abs())).collect();
    let witness = GridFunction::new(g.mesh(), f).ok().and_then(|f| {
        let n = phi.luxemburg(f.values()).ok()?;
        (n > 0.0).then(|| f.scale(1.0 / n))
    });
    Ok(Estimate::exact(value).with_witness(witness))
}

/// Lower bound for `‖g‖_{X''}` from a norming function `h ∈ X'`: `∫|gh| / ‖h‖_{X'}`,
/// against the upper bound `‖g‖_X`.
fn bidual(inner: &SpaceSpec, g: &GridFunction, opts: &DualOptions) -> Result<Estimate> {
    let top = norm_estimate(inner, g)?;
    let (value, h) = match norming_witness(inner, g)? {
        Some(h) => {
            let d = kothe_dual_norm_with(inner, &h, opts)?;
            let denom = d.upper;
            let v = if denom.is_finite() && denom > 0.0 { g.pairing(&h) / denom } else { 0.0 };
            (v, h.scale(1.0 / denom.max(f64::MIN_POSITIVE)))
        }
        None => {
            let dual_norm = |h: &GridFunction| kothe_dual_norm_with(inner, h, opts).map(|d| d.upper);
            ascent(g, &dual_norm, vec![g.abs()], opts)?
        }
    };
    let value = value.min(top.upper);
    let tight = top.certification == Certification::Exact && top.upper - value <= 1e-9 * top.upper;
    let cert = if tight { Certification::Exact } else { Certification::LowerBound };
    Ok(Estimate { value, certification: cert, upper: top.upper, witness: Some(h) })
}

/// A function `h ∈ X'` with `∫|fh| = ‖f‖_X ‖h‖_{X'}`, when one is known in closed form.
pub fn norming_witness(x: &SpaceSpec, f: &GridFunction) -> Result<Option<GridFunction>> {
    x.check_mesh(f)?;
    if f.is_zero() {
        return Ok(None);
    }
    if let Some((p, w)) = x.as_weighted_lebesgue() {
        return Ok(if p >= 1.0 { lebesgue_norming(p, &w, f) } else { None });
    }
    let from_phi = |phi: &PhiFunction| -> Result<Option<GridFunction>> {
        let lam = phi.luxemburg(f.values())?;
        if lam <= 0.0 {
            return Ok(None);
        }
        let h: Vec<f64> = phi.cells.iter().zip(f.values()).map(|(c, v)| c.derivative(v.abs() / lam)).collect();
        Ok(GridFunction::new(f.mesh(), h).ok())
    };
    match x {
        SpaceSpec::VariableLebesgue { p, w } => from_phi(&PhiFunction::variable_lebesgue(p, w)?),
        SpaceSpec::MusielakOrlicz { phi } => from_phi(phi),
        SpaceSpec::Morrey { p, q, w } => {
            let (_, cube) = morrey_norm_arg(*p, *q, w, f);
            let block = f.restrict(&cube).zip_map(w, |v, w| {
                if *p == 1.0 {
                    if v != 0.0 { w } else { 0.0 }
                } else {
                    v.abs().powf(p - 1.0) * w.powf(*p)
                }
            });
            let block = if *p == 1.0 { w.restrict(&cube) } else { block };
            Ok(Some(block))
        }
        SpaceSpec::KotheDual { inner } => {
            Ok(kothe_dual_norm(inner, f)?.witness)
        }
        SpaceSpec::Block { p, q, w } => Ok(kothe_dual_norm(&predual_of_block(*p, *q, w), f)?.witness),
        _ => Ok(None),
    }
}

fn check_saturated(x: &SpaceSpec) -> Result<()> {
    let mesh = x.mesh();
    for c in 0..mesh.cell_count() {
        let ind = GridFunction::indicator(&mesh.cell(c));
        if !(norm(x, &ind)? > 0.0) {
            return structural(format!("space {} is not saturated: cell {c} has zero norm", x.label()));
        }
    }
    Ok(())
}

fn seeds_for(x: &SpaceSpec, g: &GridFunction) -> Vec<GridFunction> {
    let mut seeds = vec![g.abs()];
    if let SpaceSpec::Concavification { inner, r } = x {
        if let Ok(Some(h)) = norming_witness(inner, &g.map(|v| v.abs().powf(1.0 / r))) {
            seeds.push(h);
        }
    }
    if let SpaceSpec::WeakType { inner } = x {
        if let Ok(d) = kothe_dual_norm(inner, g) {
            seeds.extend(d.witness);
        }
    }
    seeds
}

/// Maximizes `∫|g||h| / N(h)` over `h ≥ 0` supported where `g ≠ 0`; the maximizer is
/// returned normalized to `N(h) = 1`.
fn ascent(
    g: &GridFunction,
    n: &dyn Fn(&GridFunction) -> Result<f64>,
    seeds: Vec<GridFunction>,
    opts: &DualOptions,
) -> Result<(f64, GridFunction)> {
    let support: Vec<usize> = (0..g.len()).filter(|&i| g.values()[i] != 0.0).collect();
    let ratio = |h: &GridFunction| -> Result<f64> {
        let d = n(h)?;
        Ok(if d > 0.0 { g.pairing(h) / d } else { 0.0 })
    };
    let mut seeds = seeds;
    for a in [0.5, 2.0] {
        seeds.push(g.map(|v| v.abs().powf(a)));
    }
    let (value, h) = ratio_ascent(g.mesh(), &support, &ratio, &seeds, opts)?;
    let d = n(&h)?;
    Ok((value, if d > 0.0 { h.scale(1.0 / d) } else { h }))
}
