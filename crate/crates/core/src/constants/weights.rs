use super::{better, BudgetUsed, ConstantName, ConstantReport, Mode, Witness};
use crate::dyadic::{DyadicCube, GridFunction, Pyramid};
use crate::error::{domain, Result};
use crate::spaces::{conjugate_exponent, Certification};

fn check_weight(w: &GridFunction) -> Result<()> {
    if let Some(c) = w.values().iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return domain(format!("weight must be positive and finite, cell {c} has {}", w.values()[c]));
    }
    Ok(())
}

// ⟨w^p⟩_Q^{1/p} with the essential supremum at p = ∞
fn power_mean(vals: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return vals.iter().fold(0.0f64, |m, v| m.max(*v));
    }
    let top = vals.iter().fold(0.0f64, |m, v| m.max(*v));
    let s: f64 = vals.iter().map(|v| (v / top).powf(p)).sum::<f64>() / vals.len() as f64;
    top * s.powf(1.0 / p)
}

pub(super) fn muckenhoupt_on_cube(w: &GridFunction, p: f64, q: &DyadicCube) -> Result<f64> {
    w.check_mesh(&q.mesh())?;
    let vals = &w.values()[q.cells()];
    let inv: Vec<f64> = vals.iter().map(|v| 1.0 / v).collect();
    Ok(power_mean(vals, p) * power_mean(&inv, conjugate_exponent(p)))
}

/// `[w]_p = sup_Q ⟨w^p⟩_Q^{1/p} ⟨w^{-p'}⟩_Q^{1/p'}` over all dyadic cubes, in the multiplier
/// convention; `p = 1` and `p = ∞` take the essential supremum in the corresponding factor.
pub fn muckenhoupt_weight_constant(w: &GridFunction, p: f64) -> Result<ConstantReport> {
    check_weight(w)?;
    if !(p >= 1.0) {
        return domain(format!("Muckenhoupt exponent must lie in [1, inf], got {p}"));
    }
    let mesh = w.mesh();
    let mut best = (0.0, mesh.root());
    for q in mesh.cubes() {
        let v = muckenhoupt_on_cube(w, p, &q)?;
        if better(v, &q.to_line(), best.0, &best.1.to_line()) {
            best = (v, q);
        }
    }
    Ok(ConstantReport {
        name: ConstantName::MuckenhouptP,
        value: best.0,
        certification: Certification::Exact,
        witness: Witness { cubes: Witness::cubes(&[best.1]), parameter: Some(p), ..Default::default() },
        seed: 0,
        budget: BudgetUsed::new(Mode::Exhaustive, 0, mesh.cube_count(), &Default::default()),
    })
}

pub(super) fn fujii_wilson_on_cube(v: &GridFunction, q: &DyadicCube) -> Result<f64> {
    v.check_mesh(&q.mesh())?;
    let local = v.restrict(q);
    let pyr = Pyramid::new(v.mesh(), local.values());
    let mesh = v.mesh();
    // for x ∈ Q only subcubes of Q matter: larger cubes average v1_Q to at most ⟨v⟩_Q
    let mut integral = 0.0;
    for x in q.cells() {
        let m = (q.level()..=mesh.depth()).map(|k| pyr.at_cell(k, x)).fold(0.0f64, f64::max);
        integral += m;
    }
    let mass: f64 = local.values().iter().sum();
    Ok(integral / mass)
}

/// `[v]_FW = sup_Q v(Q)^{-1} ∫_Q M^D(v 1_Q)`, exact over all dyadic cubes.
pub fn fujii_wilson_constant(v: &GridFunction) -> Result<ConstantReport> {
    check_weight(v)?;
    let mesh = v.mesh();
    let mut best = (0.0, mesh.root());
    for q in mesh.cubes() {
        let r = fujii_wilson_on_cube(v, &q)?;
        if better(r, &q.to_line(), best.0, &best.1.to_line()) {
            best = (r, q);
        }
    }
    Ok(ConstantReport {
        name: ConstantName::FujiiWilson,
        value: best.0,
        certification: Certification::Exact,
        witness: Witness { cubes: Witness::cubes(&[best.1]), ..Default::default() },
        seed: 0,
        budget: BudgetUsed::new(Mode::Exhaustive, 0, mesh.cube_count(), &Default::default()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::Subject;
    use crate::dyadic::Mesh;
    use crate::operators::a1_constant;

    #[test]
    fn constant_weights_give_one() {
        let m = Mesh::new(2, 2).unwrap();
        for c in [1.0, 0.37, 12.5] {
            let w = GridFunction::constant(m, c);
            for p in [1.0, 1.5, 2.0, f64::INFINITY] {
                let r = muckenhoupt_weight_constant(&w, p).unwrap();
                assert!((r.value - 1.0).abs() < 1e-12, "c={c} p={p}: {}", r.value);
            }
        }
    }

    #[test]
    fn two_cell_example() {
        let m = Mesh::new(1, 1).unwrap();
        let w = GridFunction::new(m, vec![1.0, 2.0]).unwrap();
        let r = muckenhoupt_weight_constant(&w, 2.0).unwrap();
        assert!((r.value - 1.25).abs() < 1e-12);
        assert_eq!(r.witness.cubes.as_deref(), Some("0 0\n"));
        assert_eq!(r.reevaluate(Subject::Weight(&w)).unwrap(), r.value);
    }

    #[test]
    fn endpoint_identities() {
        let m = Mesh::new(1, 3).unwrap();
        let w = GridFunction::new(m, vec![1.0, 3.0, 0.5, 2.0, 4.0, 1.0, 0.25, 1.5]).unwrap();
        let inv = w.map(|v| 1.0 / v);
        let a_inf = muckenhoupt_weight_constant(&w, f64::INFINITY).unwrap().value;
        let a1_inv = muckenhoupt_weight_constant(&inv, 1.0).unwrap().value;
        assert!((a_inf - a1_inv).abs() < 1e-12 * a_inf);
        assert!((muckenhoupt_weight_constant(&w, 1.0).unwrap().value - a1_constant(&w).unwrap()).abs() < 1e-12);
        assert!(muckenhoupt_weight_constant(&w.map(|v| v - 1.0), 2.0).is_err());
    }

    #[test]
    fn fujii_wilson_examples() {
        let m = Mesh::new(1, 2).unwrap();
        assert!((fujii_wilson_constant(&GridFunction::constant(m, 2.0)).unwrap().value - 1.0).abs() < 1e-15);
        let v = GridFunction::new(m, vec![4.0, 1.0, 1.0, 1.0]).unwrap();
        let r = fujii_wilson_constant(&v).unwrap();
        // brute force on the root: M^D v = (4, 5/2, 7/4, 7/4)
        let brute = (4.0 + 2.5 + 1.75 + 1.75) / 7.0;
        assert!((r.value - brute).abs() < 1e-15);
        assert!((r.value - 10.0 / 7.0).abs() < 1e-15);
        assert!(r.value <= a1_constant(&v).unwrap());
    }
}
