use super::instances::power_weight;
use super::{Quantity, Sheet, SuiteConfig};
use crate::constants::muckenhoupt_space_constant;
use crate::dyadic::{GridFunction, Mesh};
use crate::error::Result;
use crate::operators::OperatorSpec;
use crate::spaces::{kothe_dual_norm, norm_estimate, SpaceSpec};

const P: f64 = 1.5;
const Q: f64 = 3.0;

/// Weight exponents: inside the range, the lower endpoint (still inside) and the excluded upper endpoint.
fn alphas() -> [(&'static str, f64); 3] {
    [("0", 0.0), ("-1/q", -1.0 / Q), ("1/q'", 1.0 - 1.0 / Q)]
}

fn morrey(depth: u32, alpha: f64) -> Result<SpaceSpec> {
    let mesh = Mesh::new(1, depth)?;
    SpaceSpec::morrey(P, Q, power_weight(mesh, alpha)?)
}

// conservative ‖M^D g‖_{X'} / ‖g‖_{X'}: attained value over the upper bound of the denominator
fn dual_maximal_ratio(x: &SpaceSpec, g: &GridFunction) -> Result<f64> {
    let num = kothe_dual_norm(x, &OperatorSpec::DyadicMaximal.apply(g)?)?;
    let den = kothe_dual_norm(x, g)?;
    Ok(num.value / den.upper)
}

pub(super) fn run(cfg: &SuiteConfig) -> Result<(Sheet, Vec<String>)> {
    let (lo, hi) = cfg.sweep;
    let depths: Vec<u32> = (lo..=hi).collect();
    let mut sheet = Sheet::default();
    for (label, alpha) in alphas() {
        let reports: Vec<_> = {
            use rayon::prelude::*;
            depths
                .par_iter()
                .map(|&l| muckenhoupt_space_constant(&morrey(l, alpha)?))
                .collect::<Result<Vec<_>>>()?
        };
        for (l, r) in depths.iter().zip(&reports) {
            sheet.row(&format!("alpha={label},L={l}"), "A", r);
        }
        for (k, pair) in reports.windows(2).enumerate() {
            let growth = pair[1].value / pair[0].value;
            let l = depths[k + 1];
            sheet.row(&format!("alpha={label},L={l}"), "A_growth", Quantity::lower(growth));
            let id = format!("examples.morrey.alpha={label}.growth.L{}->L{l}", l - 1);
            if alpha < 1.0 - 1.0 / Q {
                sheet.trend_le(format!("{id}<=1.2"), growth, 1.2);
            } else {
                sheet.trend_ge(format!("{id}>=1.2"), growth, 1.2);
            }
        }
    }

    // the counterexample weight: 1 lies in the space while M^D fails on the dual side
    let alpha = -1.0 / Q;
    let mut prev: Option<f64> = None;
    for &l in &depths {
        let x = morrey(l, alpha)?;
        let mesh = x.mesh();
        let name = format!("alpha=-1/q,L={l}");
        let one = norm_estimate(&x, &GridFunction::constant(mesh, 1.0))?;
        let one = Quantity { value: one.value, certification: one.certification };
        sheet.row(&name, "norm_of_one", one);
        sheet.finite(format!("examples.morrey.alpha=-1/q.L{l}.norm_of_one_finite"), one);
        let g = GridFunction::indicator(&mesh.cell(0));
        let r = dual_maximal_ratio(&x, &g)?;
        sheet.row(&name, "dual_maximal_ratio(1_cell0)", Quantity::lower(r));
        if let Some(p) = prev {
            sheet.trend_ge(format!("examples.morrey.alpha=-1/q.dual_maximal_ratio.L{l}>L{}", l - 1), r, p * (1.0 + 1e-9));
        }
        prev = Some(r);
        let g = GridFunction::indicator(&mesh.cube(1, 0)?);
        sheet.row(&name, "dual_maximal_ratio(1_left_half)", Quantity::lower(dual_maximal_ratio(&x, &g)?));
    }
    let notes = vec![
        format!("Morrey M^{{{P},{Q}}}_w with w(x) = dist(x,0)^alpha at cell centres, origin cell clamped to half a cell"),
        "power weights on the unit cube stand in for weights on the whole space; boundary effects are not removed".to_string(),
        "dual norms are lower bounds with upper bounds; the dual maximal ratio divides the attained value by the upper bound".to_string(),
    ];
    Ok((sheet, notes))
}
