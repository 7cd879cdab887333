use super::dual::{kothe_dual_norm, Certification, Estimate};
use super::phi::PhiFunction;
use super::SpaceSpec;
use crate::dyadic::grid::pairwise_sum;
use crate::dyadic::{DyadicCube, GridFunction, Mesh, Pyramid};
use crate::error::{domain, structural, Result};

/// `(Σ |v_i|^p μ)^{1/p}` with a max-rescaling against overflow; `p = ∞` is the max.
pub(crate) fn lp(values: &[f64], p: f64, mu: f64) -> f64 {
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 || p.is_infinite() {
        return top;
    }
    if p == 1.0 {
        return pairwise_sum(&values.iter().map(|v| v.abs()).collect::<Vec<_>>()) * mu;
    }
    let terms: Vec<f64> = values.iter().map(|v| (v.abs() / top).powf(p)).collect();
    top * (pairwise_sum(&terms) * mu).powf(1.0 / p)
}

pub(crate) fn weighted_lp(p: f64, w: &GridFunction, f: &GridFunction) -> f64 {
    let fw: Vec<f64> = f.values().iter().zip(w.values()).map(|(a, b)| a * b).collect();
    lp(&fw, p, f.mesh().cell_measure())
}

/// Morrey norm and a maximizing cube (the first in cube order on ties).
pub(crate) fn morrey_norm_arg(p: f64, q: f64, w: &GridFunction, f: &GridFunction) -> (f64, DyadicCube) {
    let mesh = f.mesh();
    let fw: Vec<f64> = f.values().iter().zip(w.values()).map(|(a, b)| (a * b).abs()).collect();
    if p.is_infinite() {
        let (i, v) = fw.iter().enumerate().fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        return (v, mesh.cell(i));
    }
    let top = fw.iter().fold(0.0f64, |m, &v| m.max(v));
    if top == 0.0 {
        return (0.0, mesh.root());
    }
    let scaled: Vec<f64> = fw.iter().map(|v| (v / top).powf(p)).collect();
    let pyr = Pyramid::new(mesh, &scaled);
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    let mut best = (0.0, mesh.root());
    for cube in mesh.cubes() {
        let v = cube.measure().powf(inv_q) * pyr.get(&cube).powf(1.0 / p);
        if v > best.0 {
            best = (v, cube);
        }
    }
    (top * best.0, best.1)
}

/// `‖f‖_X` for any space; dual branches return the value of their estimate.
pub fn norm(x: &SpaceSpec, f: &GridFunction) -> Result<f64> {
    Ok(norm_estimate(x, f)?.value)
}

/// `‖f‖_X` with the certification of the computation.
pub fn norm_estimate(x: &SpaceSpec, f: &GridFunction) -> Result<Estimate> {
    x.check_mesh(f)?;
    let exact = |v: f64| Ok(Estimate::exact(v));
    match x {
        SpaceSpec::WeightedLebesgue { p, w } => exact(weighted_lp(*p, w, f)),
        SpaceSpec::VariableLebesgue { p, w } => exact(PhiFunction::variable_lebesgue(p, w)?.luxemburg(f.values())?),
        SpaceSpec::MusielakOrlicz { phi } => exact(phi.luxemburg(f.values())?),
        SpaceSpec::Morrey { p, q, w } => exact(morrey_norm_arg(*p, *q, w, f).0),
        SpaceSpec::Block { .. } | SpaceSpec::KotheDual { .. } => {
            let inner = match x {
                SpaceSpec::KotheDual { inner } => (**inner).clone(),
                SpaceSpec::Block { p, q, w } => predual_of_block(*p, *q, w),
                _ => unreachable!(),
            };
            let mut est = kothe_dual_norm(&inner, f)?;
            est.witness = None;
            Ok(est)
        }
        SpaceSpec::Concavification { inner, r } => {
            let g = f.map(|v| v.abs().powf(1.0 / r));
            let e = norm_estimate(inner, &g)?;
            Ok(Estimate { value: e.value.powf(*r), upper: e.upper.powf(*r), certification: e.certification, witness: None })
        }
        SpaceSpec::WeakType { inner } => weak_estimate(inner, f),
    }
}

pub(crate) fn predual_of_block(p: f64, q: f64, w: &GridFunction) -> SpaceSpec {
    use super::phi::conjugate_exponent as c;
    SpaceSpec::Morrey { p: c(p), q: c(q), w: w.map(|v| 1.0 / v) }
}

/// `‖f‖_{X_weak} = sup_λ λ‖1_{|f|>λ}‖_X`, exact on a finite mesh.
///
/// The supremum is approached from below each distinct value `v` of `|f|`, giving `v‖1_{|f|≥v}‖_X`.
pub fn weak_norm(x: &SpaceSpec, f: &GridFunction) -> Result<f64> {
    Ok(weak_estimate(x, f)?.value)
}

fn weak_estimate(x: &SpaceSpec, f: &GridFunction) -> Result<Estimate> {
    x.check_mesh(f)?;
    let mut levels: Vec<f64> = f.values().iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    let mut best = Estimate::exact(0.0);
    best.upper = 0.0;
    for v in levels {
        let ind = f.map(|u| if u.abs() >= v { 1.0 } else { 0.0 });
        let e = norm_estimate(x, &ind)?;
        if v * e.value > best.value {
            best.value = v * e.value;
        }
        best.upper = best.upper.max(v * e.upper);
        if e.certification == Certification::LowerBound {
            best.certification = Certification::LowerBound;
        }
    }
    Ok(best)
}

/// An indexed family `(f_Q)_{Q∈𝒬}` on one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedFamily {
    pub members: Vec<(DyadicCube, GridFunction)>,
}

impl MixedFamily {
    pub fn new(members: Vec<(DyadicCube, GridFunction)>) -> Result<Self> {
        if let Some((q, f)) = members.first() {
            let mesh = q.mesh();
            for (q2, f2) in &members {
                if q2.mesh() != mesh || f2.mesh() != mesh || f.mesh() != mesh {
                    return structural("members of a mixed family must share one mesh");
                }
            }
        }
        Ok(MixedFamily { members })
    }

    /// The constant family `(|f|)_{Q}` over the given cubes.
    pub fn constant(cubes: &[DyadicCube], f: &GridFunction) -> Self {
        MixedFamily { members: cubes.iter().map(|q| (*q, f.abs())).collect() }
    }

    pub fn mesh(&self) -> Option<Mesh> {
        self.members.first().map(|(q, _)| q.mesh())
    }

    /// Pointwise `(Σ_Q |f_Q|^r)^{1/r}` (`max` for `r = ∞`).
    pub fn envelope(&self, r: f64) -> Result<GridFunction> {
        if !(r >= 1.0) {
            return domain(format!("mixed norm exponent must lie in [1, inf], got {r}"));
        }
        let Some(mesh) = self.mesh() else {
            return domain("empty mixed family has no mesh");
        };
        let n = mesh.cell_count();
        let mut out = vec![0.0f64; n];
        if r.is_infinite() {
            for (_, f) in &self.members {
                for (o, v) in out.iter_mut().zip(f.values()) {
                    *o = o.max(v.abs());
                }
            }
        } else {
            for x in 0..n {
                let terms: Vec<f64> = self.members.iter().map(|(_, f)| f.values()[x].abs()).collect();
                out[x] = lp(&terms, r, 1.0);
            }
        }
        GridFunction::new(mesh, out)
    }
}

/// `‖(Σ_Q |f_Q|^r)^{1/r}‖_X`.
pub fn mixed_norm(x: &SpaceSpec, r: f64, family: &MixedFamily) -> Result<f64> {
    if !(r >= 1.0) {
        return domain(format!("mixed norm exponent must lie in [1, inf], got {r}"));
    }
    if family.members.is_empty() {
        return Ok(0.0);
    }
    norm(x, &family.envelope(r)?)
}
