use serde::{Deserialize, Serialize};

use super::exponent;
use crate::dyadic::{GridFunction, Mesh};
use crate::error::{domain, Result};

/// `φ(x, ·)` on a single cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellPhi {
    /// `φ(t) = (w t)^p / p`; `p = ∞` is `φ_∞(w t) = ∞·1_{(1,∞)}(w t)`.
    Power {
        #[serde(with = "exponent")]
        p: f64,
        w: f64,
    },
    /// Convex piecewise-linear interpolation of `(0,0), (t_1,v_1), …, (t_n,v_n)`.
    /// Beyond `t_n` the function is `+∞` when `cap` is set, otherwise it continues with the last slope.
    Table { t: Vec<f64>, v: Vec<f64>, cap: bool },
}

impl CellPhi {
    pub fn power(p: f64, w: f64) -> Self {
        CellPhi::Power { p, w }
    }

    /// Samples a convex function `f` with `f(0) = 0` at the given knots.
    pub fn sampled(f: impl Fn(f64) -> f64, knots: &[f64], cap: bool) -> Result<Self> {
        let v = knots.iter().map(|&t| f(t)).collect();
        let phi = CellPhi::Table { t: knots.to_vec(), v, cap };
        phi.validate()?;
        Ok(phi)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CellPhi::Power { p, w } => {
                if !(*p >= 1.0) {
                    return domain(format!("phi exponent must lie in [1, inf], got {p}"));
                }
                if !(*w > 0.0 && w.is_finite()) {
                    return domain(format!("phi weight must be positive and finite, got {w}"));
                }
            }
            CellPhi::Table { t, v, .. } => {
                if t.is_empty() || t.len() != v.len() {
                    return domain("phi table needs matching, nonempty knot and value lists");
                }
                let mut prev = (0.0, 0.0);
                let mut slope = 0.0f64;
                for (&ti, &vi) in t.iter().zip(v) {
                    if !(ti > prev.0) || !ti.is_finite() || !vi.is_finite() {
                        return domain("phi table knots must be finite and strictly increasing from 0");
                    }
                    let s = (vi - prev.1) / (ti - prev.0);
                    if s < slope - 1e-12 * slope.abs().max(1.0) {
                        return domain("phi table must be convex and nondecreasing");
                    }
                    slope = s;
                    prev = (ti, vi);
                }
                if v.last() == Some(&0.0) && !matches!(self, CellPhi::Table { cap: true, .. }) {
                    return domain("phi table must tend to infinity");
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            CellPhi::Power { p, w } => {
                let s = w * t;
                if p.is_infinite() {
                    if s <= 1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else if *p == 1.0 {
                    s
                } else {
                    s.powf(*p) / p
                }
            }
            CellPhi::Table { t: ts, v, cap } => {
                let n = ts.len();
                if t <= 0.0 {
                    return 0.0;
                }
                let i = ts.partition_point(|&k| k < t);
                if i == n {
                    if *cap && t > ts[n - 1] {
                        return f64::INFINITY;
                    }
                    let (t0, v0) = if n >= 2 { (ts[n - 2], v[n - 2]) } else { (0.0, 0.0) };
                    let slope = (v[n - 1] - v0) / (ts[n - 1] - t0);
                    return v[n - 1] + slope * (t - ts[n - 1]);
                }
                let (t0, v0) = if i == 0 { (0.0, 0.0) } else { (ts[i - 1], v[i - 1]) };
                v0 + (v[i] - v0) * (t - t0) / (ts[i] - t0)
            }
        }
    }

    /// A subgradient of `φ` at `t > 0` (the slope of the segment ending at `t` for tables).
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            CellPhi::Power { p, w } => {
                if p.is_infinite() {
                    if w * t >= 1.0 {
                        *w
                    } else {
                        0.0
                    }
                } else {
                    w.powf(*p) * t.powf(p - 1.0)
                }
            }
            CellPhi::Table { t: ts, v, .. } => {
                if t <= 0.0 {
                    return 0.0;
                }
                let n = ts.len();
                let i = ts.partition_point(|&k| k < t).min(n - 1);
                let (t0, v0) = if i == 0 { (0.0, 0.0) } else { (ts[i - 1], v[i - 1]) };
                (v[i] - v0) / (ts[i] - t0)
            }
        }
    }

    /// Convex conjugate `φ*(s) = sup_{t ≥ 0} (st − φ(t))`.
    pub fn conjugate(&self) -> CellPhi {
        match self {
            CellPhi::Power { p, w } => CellPhi::Power { p: conjugate_exponent(*p), w: 1.0 / w },
            CellPhi::Table { t, v, cap } => {
                let n = t.len();
                let mut ks: Vec<f64> = Vec::with_capacity(n + 1);
                let mut vs: Vec<f64> = Vec::with_capacity(n + 1);
                let mut prev = (0.0, 0.0);
                for i in 0..n {
                    let slope = (v[i] - prev.1) / (t[i] - prev.0);
                    prev = (t[i], v[i]);
                    if slope <= 0.0 {
                        continue;
                    }
                    let value = slope * t[i] - v[i];
                    if let Some(last) = ks.last() {
                        if slope <= *last * (1.0 + 1e-14) {
                            // collinear segments share the knot
                            *vs.last_mut().unwrap() = value.max(*vs.last().unwrap());
                            continue;
                        }
                    }
                    ks.push(slope);
                    vs.push(value);
                }
                if *cap {
                    // beyond the last slope the conjugate grows with slope t_n
                    let tn = t[n - 1];
                    let s0 = ks.last().copied().unwrap_or(0.0);
                    let v0 = vs.last().copied().unwrap_or(0.0);
                    let s1 = s0 + s0.max(1.0);
                    ks.push(s1);
                    vs.push(v0 + tn * (s1 - s0));
                }
                CellPhi::Table { t: ks, v: vs, cap: !cap }
            }
        }
    }

    /// `φ(2t) / φ(t)` style growth is only meaningful on finite tables up to the last knot.
    fn sample_limit(&self) -> Option<f64> {
        match self {
            CellPhi::Table { t, .. } => t.last().copied(),
            CellPhi::Power { .. } => None,
        }
    }
}

pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// A generalized Φ-function on a mesh, one convex function per finest cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiFunction {
    pub mesh: Mesh,
    pub cells: Vec<CellPhi>,
}

impl PhiFunction {
    pub fn new(mesh: Mesh, cells: Vec<CellPhi>) -> Result<Self> {
        if cells.len() != mesh.cell_count() {
            return domain(format!("phi has {} cells, mesh {mesh} has {}", cells.len(), mesh.cell_count()));
        }
        for c in &cells {
            c.validate()?;
        }
        Ok(PhiFunction { mesh, cells })
    }

    /// `φ(x,t) = (w(x) t)^{p(x)} / p(x)`, the weighted variable Lebesgue modular.
    pub fn variable_lebesgue(p: &[f64], w: &GridFunction) -> Result<Self> {
        let cells = p.iter().zip(w.values()).map(|(&p, &w)| CellPhi::Power { p, w }).collect();
        Self::new(w.mesh(), cells)
    }

    pub fn uniform(mesh: Mesh, phi: CellPhi) -> Result<Self> {
        Self::new(mesh, vec![phi; mesh.cell_count()])
    }

    pub fn conjugate(&self) -> PhiFunction {
        PhiFunction { mesh: self.mesh, cells: self.cells.iter().map(CellPhi::conjugate).collect() }
    }

    /// `ρ_φ(f) = Σ_x φ(x, |f(x)|) μ`.
    pub fn modular(&self, f: &[f64]) -> f64 {
        let mu = self.mesh.cell_measure();
        let terms: Vec<f64> = self.cells.iter().zip(f).map(|(phi, v)| phi.eval(v.abs())).collect();
        if terms.iter().any(|t| t.is_infinite()) {
            return f64::INFINITY;
        }
        crate::dyadic::grid::pairwise_sum(&terms) * mu
    }

    fn modular_scaled(&self, f: &[f64], k: f64) -> f64 {
        let mu = self.mesh.cell_measure();
        let mut terms = Vec::with_capacity(f.len());
        for (phi, v) in self.cells.iter().zip(f) {
            let t = phi.eval(k * v.abs());
            if t.is_infinite() {
                return f64::INFINITY;
            }
            terms.push(t);
        }
        crate::dyadic::grid::pairwise_sum(&terms) * mu
    }

    /// Luxemburg norm `inf{λ > 0 : ρ_φ(f/λ) ≤ 1}` by bisection in `log λ`.
    pub fn luxemburg(&self, f: &[f64]) -> Result<f64> {
        let top = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if top == 0.0 {
            return Ok(0.0);
        }
        let within = |lam: f64| self.modular_scaled(f, 1.0 / lam) <= 1.0;
        let mut hi = top;
        let mut steps = 0;
        while !within(hi) {
            hi *= 2.0;
            steps += 1;
            if steps > 2000 || !hi.is_finite() {
                return Err(crate::Error::Diagnostic("Luxemburg modular stays above 1 for every scale".into()));
            }
        }
        let mut lo = hi / 2.0;
        steps = 0;
        while within(lo) {
            lo /= 2.0;
            steps += 1;
            if steps > 2000 || lo == 0.0 {
                return Ok(0.0);
            }
        }
        if self.cells.iter().all(|c| matches!(c, CellPhi::Power { p, .. } if p.is_finite())) {
            return Ok(self.luxemburg_newton(f, lo, hi));
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if within(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    // Power cells only: ln ρ(e^{-s} f) is convex in s with derivative −Σ p φ μ / ρ, so a
    // Newton step in s kept inside the bracket [lo, hi] closes it in a few iterations.
    fn luxemburg_newton(&self, f: &[f64], mut lo: f64, mut hi: f64) -> f64 {
        let mu = self.mesh.cell_measure();
        let eval = |lam: f64| {
            let (mut rho, mut slope) = (0.0, 0.0);
            for (c, v) in self.cells.iter().zip(f) {
                if let CellPhi::Power { p, w } = c {
                    let t = (w * v.abs() / lam).powf(*p);
                    rho += t / p;
                    slope += t;
                }
            }
            (rho * mu, slope * mu)
        };
        let mut lam = (lo * hi).sqrt();
        for _ in 0..200 {
            let (rho, slope) = eval(lam);
            if rho <= 1.0 {
                hi = lam;
            } else {
                lo = lam;
            }
            if hi <= lo * (1.0 + 4.0 * f64::EPSILON) {
                break;
            }
            let (a, b) = (lo.ln(), hi.ln());
            let mut s = lam.ln() + rho.ln() * rho / slope;
            if !(s > a && s < b) {
                s = 0.5 * (a + b);
            }
            let mut next = s.exp();
            if (next / lam - 1.0).abs() < 2.0 * f64::EPSILON {
                // at the root up to rounding: step just across it to close the bracket
                next = if rho <= 1.0 { lam * (1.0 - 4.0 * f64::EPSILON) } else { lam * (1.0 + 4.0 * f64::EPSILON) };
                next = next.clamp(lo, hi);
            }
            lam = next;
        }
        hi
    }

    /// Amemiya norm `inf_{k>0} k^{-1}(1 + ρ_φ(k g))`, golden-section search in `log k`.
    ///
    /// Returns the norm and the minimizing `k`.
    pub fn amemiya(&self, g: &[f64]) -> Result<(f64, f64)> {
        let top = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if top == 0.0 {
            return Ok((0.0, f64::INFINITY));
        }
        let h = |lk: f64| {
            let k = lk.exp();
            (1.0 + self.modular_scaled(g, k)) / k
        };
        let mut x = -top.ln();
        let step = std::f64::consts::LN_2;
        let mut hx = h(x);
        let mut n = 0;
        // walk down while infinite or decreasing to the left
        while !hx.is_finite() || h(x - step) < hx {
            x -= step;
            hx = h(x);
            n += 1;
            if n > 4000 {
                return Err(crate::Error::Diagnostic("Amemiya objective could not be bracketed".into()));
            }
        }
        n = 0;
        while h(x + step) < hx {
            x += step;
            hx = h(x);
            n += 1;
            if n > 4000 {
                return Err(crate::Error::Diagnostic("Amemiya objective keeps decreasing".into()));
            }
        }
        let (mut a, mut b) = (x - step, x + step);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut hc, mut hd) = (h(c), h(d));
        for _ in 0..300 {
            if b - a < 1e-15 {
                break;
            }
            if hc <= hd {
                b = d;
                d = c;
                hd = hc;
                c = b - r * (b - a);
                hc = h(c);
            } else {
                a = c;
                c = d;
                hc = hd;
                d = a + r * (b - a);
                hd = h(d);
            }
        }
        let mut best = (hx, x);
        for cand in [a, b, c, d] {
            let v = h(cand);
            if v < best.0 {
                best = (v, cand);
            }
        }
        Ok((best.0, best.1.exp()))
    }
}

/// Outcome of a sampled `Δ₂` / `Δ^s` search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Delta2Report {
    pub holds: bool,
    /// Smallest `K` (with `h ≡ 0`) valid on the sampled grid, `∞` when it fails.
    pub k: f64,
    pub h: f64,
    pub k_s: f64,
    /// `(cell, t, λ)` where the inequality fails or the ratio keeps growing.
    pub witness: Option<(usize, f64, f64)>,
}

/// Searches the doubling grid `t = 2^j` for `φ(x,2t) ≤ Kφ(x,t)` and `λ^{-s}φ(x,λt) ≤ K_s φ(x,t)`.
///
/// Tables are searched up to their last knot; a ratio still increasing at the top of the grid
/// counts as failure since no finite `K` is then supported by the samples.
pub fn delta2_check(phi: &PhiFunction, s: f64) -> Delta2Report {
    let mut k: f64 = 0.0;
    let mut k_s: f64 = 0.0;
    let mut witness = None;
    let mut holds = true;
    for (x, cell) in phi.cells.iter().enumerate() {
        let limit = cell.sample_limit();
        let grid: Vec<f64> = (-40..=40)
            .map(|j| 2f64.powi(j))
            .filter(|&t| limit.is_none_or(|l| 2.0 * t <= l))
            .collect();
        let mut ratios = Vec::new();
        for &t in &grid {
            let a = cell.eval(t);
            let b = cell.eval(2.0 * t);
            let ratio = if a > 0.0 && a.is_finite() {
                b / a
            } else if b > 0.0 {
                f64::INFINITY
            } else {
                continue;
            };
            ratios.push((t, ratio));
            if !ratio.is_finite() {
                holds = false;
                witness.get_or_insert((x, t, 2.0));
            }
            k = k.max(ratio);
            for j in 0..=20 {
                let lam = 2f64.powi(j);
                if limit.is_some_and(|l| lam * t > l) {
                    break;
                }
                let r = cell.eval(lam * t) / (lam.powf(s) * a.max(f64::MIN_POSITIVE));
                k_s = k_s.max(r);
            }
        }
        if holds && ratios.len() >= 3 {
            let n = ratios.len();
            let (t_last, r_last) = ratios[n - 1];
            let earlier = ratios[..n - 2].iter().fold(0.0f64, |m, r| m.max(r.1));
            if r_last > 1.5 * earlier && ratios[n - 2].1 > earlier {
                holds = false;
                witness.get_or_insert((x, t_last, 2.0));
            }
        }
    }
    if !holds {
        k = f64::INFINITY;
    }
    Delta2Report { holds, k, h: 0.0, k_s, witness }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh() -> Mesh {
        Mesh::new(1, 2).unwrap()
    }

    #[test]
    fn power_conjugate_pairs() {
        for &(p, q) in &[(2.0, 2.0), (3.0, 1.5), (1.0, f64::INFINITY), (f64::INFINITY, 1.0)] {
            match CellPhi::power(p, 2.0).conjugate() {
                CellPhi::Power { p: pc, w } => {
                    assert_eq!(pc, q);
                    assert_eq!(w, 0.5);
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn fenchel_young_on_tables() {
        let knots: Vec<f64> = (1..=40).map(|i| i as f64 * 0.25).collect();
        for cap in [false, true] {
            let phi = CellPhi::sampled(|t| t * t / 2.0 + t, &knots, cap).unwrap();
            let star = phi.conjugate();
            star.validate().unwrap();
            // brute-force conjugate on a fine grid
            for j in 1..60 {
                let s = j as f64 * 0.3;
                let brute = (0..=20000)
                    .map(|i| i as f64 * 0.0005)
                    .map(|t| s * t - phi.eval(t))
                    .fold(f64::NEG_INFINITY, f64::max);
                let v = star.eval(s);
                if cap {
                    assert!((v - brute).abs() < 1e-3 * (1.0 + brute.abs()), "s={s} {v} {brute}");
                } else if s <= 11.0 {
                    assert!((v - brute).abs() < 1e-3 * (1.0 + brute.abs()), "s={s} {v} {brute}");
                } else {
                    assert!(v.is_infinite());
                }
            }
            let back = star.conjugate();
            for j in 1..200 {
                let t = j as f64 * 0.05;
                assert!((back.eval(t) - phi.eval(t)).abs() < 1e-9, "t={t}");
            }
        }
    }

    #[test]
    fn luxemburg_power_closed_form() {
        let m = mesh();
        let f = [1.0, -2.0, 0.5, 3.0];
        for &p in &[1.0, 2.0, 3.7] {
            let phi = PhiFunction::uniform(m, CellPhi::power(p, 1.0)).unwrap();
            let lp = (f.iter().map(|v: &f64| v.abs().powf(p)).sum::<f64>() * 0.25).powf(1.0 / p);
            let expect = p.powf(-1.0 / p) * lp;
            assert!((phi.luxemburg(&f).unwrap() - expect).abs() < 1e-12 * expect);
        }
        let phi = PhiFunction::uniform(m, CellPhi::power(2.0, 1.0)).unwrap();
        assert_eq!(phi.luxemburg(&[0.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn amemiya_matches_lebesgue_dual() {
        let m = mesh();
        let g = [1.0, 0.2, 0.5, 3.0];
        // dual of L^2 with phi = t^2/2: amemiya with phi* = s^2/2 gives ||g||_2 * sqrt(2)
        let star = PhiFunction::uniform(m, CellPhi::power(2.0, 1.0)).unwrap();
        let l2 = (g.iter().map(|v| v * v).sum::<f64>() * 0.25).sqrt();
        let (a, _) = star.amemiya(&g).unwrap();
        assert!((a - 2f64.sqrt() * l2).abs() < 1e-10);
        // phi* = phi_inf: the dual of L^1 is the sup norm
        let star = PhiFunction::uniform(m, CellPhi::power(f64::INFINITY, 1.0)).unwrap();
        let (a, _) = star.amemiya(&g).unwrap();
        assert!((a - 3.0).abs() < 1e-12);
    }

    #[test]
    fn delta2_examples() {
        let m = mesh();
        let r = delta2_check(&PhiFunction::uniform(m, CellPhi::power(3.0, 1.0)).unwrap(), 3.0);
        assert!(r.holds);
        assert!((r.k - 8.0).abs() < 1e-9);
        assert!(r.k_s <= 1.0 + 1e-12);
        let r = delta2_check(&PhiFunction::uniform(m, CellPhi::power(f64::INFINITY, 1.0)).unwrap(), 2.0);
        assert!(!r.holds);
        let knots: Vec<f64> = (1..=200).map(|i| i as f64 * 0.1).collect();
        let exp = CellPhi::sampled(|t| t.exp() - 1.0, &knots, false).unwrap();
        let r = delta2_check(&PhiFunction::uniform(m, exp).unwrap(), 2.0);
        assert!(!r.holds);
        assert!(r.witness.unwrap().1 >= 4.0);
    }
}
