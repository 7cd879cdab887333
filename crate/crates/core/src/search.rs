//! Seeded multi-start ascent for ratios of nonnegative functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{GridFunction, Mesh};
use crate::error::Result;

/// Budget of a seeded search. Every start is refined independently and random starts are
/// drawn as a prefix of one stream, so a larger budget never lowers the result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub seed: u64,
    pub random_starts: usize,
    pub sweeps: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { seed: 0x5eed, random_starts: 6, sweeps: 30 }
    }
}

impl SearchOptions {
    pub fn with_seed(&self, seed: u64) -> SearchOptions {
        SearchOptions { seed, ..self.clone() }
    }
}

/// Maximizes `ratio(h)` over `h ≥ 0` supported on `support`.
///
/// Starts are the seeds, `1`, indicators of dyadic cubes (on small meshes) and seeded random
/// functions. Each start is refined by multiplicative single-cell moves whose step shrinks
/// when no move helps. Returns the best ratio and its maximizer; ties keep the earlier start.
pub fn ratio_ascent(
    mesh: Mesh,
    support: &[usize],
    ratio: &dyn Fn(&GridFunction) -> Result<f64>,
    seeds: &[GridFunction],
    opts: &SearchOptions,
) -> Result<(f64, GridFunction)> {
    let n = mesh.cell_count();
    let project = |h: &GridFunction| {
        let mut v = vec![0.0; n];
        for &i in support {
            let x = h.values()[i].abs();
            v[i] = if x.is_finite() { x } else { 0.0 };
        }
        GridFunction::new(mesh, v).expect("finite values")
    };
    let mut starts: Vec<GridFunction> = seeds.iter().map(project).collect();
    starts.push(project(&GridFunction::constant(mesh, 1.0)));
    if mesh.cube_count() <= 128 {
        for q in mesh.cubes() {
            starts.push(project(&GridFunction::indicator(&q)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_starts {
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(2)).collect();
        starts.push(project(&GridFunction::new(mesh, v).expect("finite values")));
    }
    let mut scored = Vec::with_capacity(starts.len());
    for h in starts {
        if h.is_zero() {
            continue;
        }
        let r = ratio(&h)?;
        scored.push((if r.is_nan() { 0.0 } else { r }, h));
    }
    let mut best = (0.0, GridFunction::zeros(mesh));
    for (mut r, h) in scored {
        let mut vals = h.into_values();
        let mut delta = 1.0;
        for _ in 0..opts.sweeps {
            let mut improved = false;
            for &i in support {
                let top = vals.iter().fold(0.0f64, |m, v| m.max(*v));
                for up in [true, false] {
                    let old = vals[i];
                    vals[i] = match (old == 0.0, up) {
                        (true, true) => delta * top,
                        (true, false) => continue,
                        (false, true) => old * (1.0 + delta),
                        (false, false) => old / (1.0 + delta),
                    };
                    let cand = GridFunction::new(mesh, vals.clone()).expect("finite values");
                    let rc = ratio(&cand)?;
                    if rc > r * (1.0 + 1e-15) {
                        r = rc;
                        improved = true;
                        break;
                    }
                    vals[i] = old;
                }
            }
            if !improved {
                delta /= 4.0;
                if delta < 1e-7 {
                    break;
                }
            }
        }
        if r > best.0 || best.1.is_zero() {
            best = (r, GridFunction::new(mesh, vals).expect("finite values"));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_a_cell_maximum() {
        let m = Mesh::new(1, 3).unwrap();
        let weights = [1.0, 3.0, 2.0, 0.5, 7.0, 1.0, 1.0, 1.0];
        // ratio Σ a_i h_i / Σ h_i is maximized by the atom at the largest a_i
        let ratio = |h: &GridFunction| -> Result<f64> {
            let num: f64 = h.values().iter().zip(weights).map(|(h, a)| h * a).sum();
            Ok(num / h.values().iter().sum::<f64>())
        };
        let support: Vec<usize> = (0..8).collect();
        let (r, h) = ratio_ascent(m, &support, &ratio, &[], &SearchOptions::default()).unwrap();
        assert_eq!(r, 7.0);
        assert!(h.values()[4] > 0.0);
    }

    #[test]
    fn larger_budget_never_lowers_the_result() {
        let m = Mesh::new(1, 2).unwrap();
        let ratio = |h: &GridFunction| -> Result<f64> {
            let v = h.values();
            Ok((v[0] * v[1]).sqrt() / (v[0] + v[1] + v[2] + v[3] + 1e-300))
        };
        let support: Vec<usize> = (0..4).collect();
        let small = SearchOptions { random_starts: 1, sweeps: 2, ..Default::default() };
        let large = SearchOptions { random_starts: 8, sweeps: 40, ..Default::default() };
        let a = ratio_ascent(m, &support, &ratio, &[], &small).unwrap().0;
        let b = ratio_ascent(m, &support, &ratio, &[], &large).unwrap().0;
        assert!(b >= a);
        assert!((b - 0.5).abs() < 1e-6);
    }
}
