use serde::Serialize;

use super::{MaximalBound, OperatorSpec};
use crate::dyadic::{GridFunction, Pyramid};
use crate::error::{domain, Error, Result};
use crate::spaces::{norm, SpaceSpec};

/// Output of the Rubio de Francia iteration.
#[derive(Debug, Clone, Serialize)]
pub struct RdfMajorant {
    /// `w_N = Σ_{n=0}^{N} M^n f / (2K_X B)^n`.
    pub w: GridFunction,
    pub iterations: usize,
    /// Bound for `‖w − w_N‖_X / ‖f‖_X` from the geometric tail.
    pub tail: f64,
    /// `[w]_1` in the multiplier convention, see [`a1_constant`].
    pub a1_constant: f64,
    /// `‖w_N‖_X / ‖f‖_X`.
    pub norm_ratio: f64,
    pub bound: MaximalBound,
    /// `2K_X B`, the bound the `A_1` constant is checked against.
    pub a1_target: f64,
}

/// `[w]_1 = max_Q ⟨w⟩_{1,Q} · max_{x∈Q} w(x)^{-1}`.
pub fn a1_constant(w: &GridFunction) -> Result<f64> {
    if !w.is_positive() {
        return domain("A1 constant needs a positive weight");
    }
    let mesh = w.mesh();
    let avg = Pyramid::new(mesh, w.values());
    let inv: Vec<f64> = w.values().iter().map(|v| 1.0 / v).collect();
    // per-cube max of w^{-1}, bottom-up
    let b = mesh.branching();
    let mut level = inv;
    let mut best = 0.0f64;
    for k in (0..=mesh.depth()).rev() {
        for (code, m) in level.iter().enumerate() {
            best = best.max(avg.level(k)[code] * m);
        }
        level = level.chunks(b).map(|c| c.iter().fold(0.0f64, |a, v| a.max(*v))).collect();
    }
    Ok(best)
}

/// Rubio de Francia majorant of `f` in `X` given `B ≥ ‖M^D‖_{X→X}`.
///
/// Iterates until the geometric tail bound `‖M^N f‖ / ((2K_X B)^N ‖f‖) · Σ_{j≥1} (K_X/2)^j`
/// drops below `tol`. A step with `‖M^{n+1} f‖ > K_X B ‖M^n f‖` shows that `B` is too small.
pub fn rdf_majorant(x: &SpaceSpec, f: &GridFunction, bound: MaximalBound, tol: f64, max_iter: usize) -> Result<RdfMajorant> {
    x.check_mesh(f)?;
    if !(bound.value > 0.0 && bound.value.is_finite()) {
        return domain(format!("maximal bound must be positive and finite, got {}", bound.value));
    }
    let k = x.quasi_constant();
    if k >= 2.0 {
        return domain(format!("quasi-triangle constant {k} is too large for a convergent tail estimate"));
    }
    let nf = norm(x, f)?;
    let a1_target = 2.0 * k * bound.value;
    if nf == 0.0 {
        let w = GridFunction::zeros(f.mesh());
        return Ok(RdfMajorant { w, iterations: 0, tail: 0.0, a1_constant: 0.0, norm_ratio: 0.0, bound, a1_target });
    }
    let tail_factor = (k / 2.0) / (1.0 - k / 2.0);
    let mut term = f.abs();
    let mut term_norm = nf;
    let mut acc = term.values().to_vec();
    let mut scale = 1.0;
    let mut n = 0;
    let mut tail = term_norm / nf * tail_factor;
    while tail > tol {
        if n == max_iter {
            return Err(Error::Diagnostic(format!("tail {tail:e} still above {tol:e} after {n} iterations")));
        }
        let next = OperatorSpec::DyadicMaximal.apply(&term)?;
        let next_norm = norm(x, &next)?;
        if next_norm > k * bound.value * term_norm * (1.0 + 1e-9) {
            return Err(Error::Diagnostic(format!(
                "maximal bound {} is below the observed growth {} at iteration {}",
                bound.value,
                next_norm / term_norm,
                n + 1
            )));
        }
        n += 1;
        scale /= a1_target;
        for (a, v) in acc.iter_mut().zip(next.values()) {
            *a += scale * v;
        }
        term = next;
        term_norm = next_norm;
        tail = term_norm * scale / nf * tail_factor;
    }
    let w = GridFunction::new(f.mesh(), acc)?;
    let norm_ratio = norm(x, &w)? / nf;
    let a1 = a1_constant(&w)?;
    Ok(RdfMajorant { w, iterations: n, tail, a1_constant: a1, norm_ratio, bound, a1_target })
}
