//! Named generators for weights and exponent fields, and random test functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::dyadic::{GridFunction, Mesh};
use crate::error::{domain, Result};

/// A cellwise field produced from a few parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Generator {
    Constant { c: f64 },
    /// `exp(σZ)` with `Z` standard normal, drawn from the given seed.
    LogNormal { sigma: f64, seed: u64 },
    /// `dist(x, 0)^{αd}` at cell centres, with the distance of the cell at the origin clamped
    /// to half a cell side.
    Power { alpha: f64 },
    /// `a` on cells whose first coordinate is below `split`, `b` elsewhere.
    TwoLevel { a: f64, b: f64, split: f64 },
}

impl Generator {
    pub fn sample(&self, mesh: Mesh) -> Result<GridFunction> {
        match *self {
            Generator::Constant { c } => Ok(GridFunction::constant(mesh, c)),
            Generator::LogNormal { sigma, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                log_normal(mesh, sigma, &mut rng)
            }
            Generator::Power { alpha } => power_weight(mesh, alpha),
            Generator::TwoLevel { a, b, split } => {
                GridFunction::from_fn(mesh, |x| if x[0] < split { a } else { b })
            }
        }
    }
}

pub fn log_normal(mesh: Mesh, sigma: f64, rng: &mut impl Rng) -> Result<GridFunction> {
    let dist = LogNormal::new(0.0, sigma).map_err(|e| crate::Error::Domain(format!("log-normal sigma {sigma}: {e}")))?;
    GridFunction::new(mesh, (0..mesh.cell_count()).map(|_| dist.sample(rng)).collect())
}

pub fn power_weight(mesh: Mesh, alpha: f64) -> Result<GridFunction> {
    if !alpha.is_finite() {
        return domain(format!("power exponent must be finite, got {alpha}"));
    }
    let half = 0.5 * (-(mesh.depth() as f64)).exp2();
    let d = mesh.dim() as f64;
    GridFunction::from_fn(mesh, |x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        r.max(half).powf(alpha * d)
    })
}

/// Nonnegative test function with a random sparsity pattern and heavy-tailed values.
pub fn random_function(mesh: Mesh, rng: &mut impl Rng) -> GridFunction {
    let density = rng.random_range(0.3..1.0);
    let mut v: Vec<f64> =
        (0..mesh.cell_count()).map(|_| if rng.random::<f64>() < density { rng.random::<f64>().powi(3) } else { 0.0 }).collect();
    if v.iter().all(|&x| x == 0.0) {
        let c = rng.random_range(0..v.len());
        v[c] = 1.0;
    }
    GridFunction::new(mesh, v).expect("finite values")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators() {
        let m = Mesh::new(1, 2).unwrap();
        assert_eq!(Generator::Constant { c: 2.0 }.sample(m).unwrap().values(), &[2.0; 4]);
        let t = Generator::TwoLevel { a: 1.0, b: 3.0, split: 0.5 }.sample(m).unwrap();
        assert_eq!(t.values(), &[1.0, 1.0, 3.0, 3.0]);
        // centres 1/8, 3/8, 5/8, 7/8; the first is exactly half a cell from the origin
        let p = Generator::Power { alpha: 1.0 }.sample(m).unwrap();
        assert_eq!(p.values(), &[0.125, 0.375, 0.625, 0.875]);
        let g = Generator::LogNormal { sigma: 0.5, seed: 3 };
        assert_eq!(g.sample(m).unwrap(), g.sample(m).unwrap());
        assert!(g.sample(m).unwrap().is_positive());
    }
}
