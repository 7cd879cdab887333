//! Köthe dual of a weighted Morrey space, computed as a concave program over the dyadic tree.
//!
//! With `u = |f|w`, `κ = |g|/w` and cell masses `y_i = u_i^p μ`, the dual norm of `g` is
//! `max Σ a_i y_i^{1/p}` subject to `Σ_{i∈Q} y_i ≤ |Q|^{1−p/q}` for every dyadic `Q`,
//! where `a_i = κ_i μ^{1/p'}`. The constraints form a laminar family, so the optimum is found
//! by pricing: a subtree facing price `θ` demands `min(B_Q, Σ_children D_c(θ))`.

use crate::dyadic::{DyadicCube, GridFunction, Mesh};

use super::norm::morrey_norm_arg;
use super::phi::conjugate_exponent;

pub(crate) struct MorreyDual {
    pub value: f64,
    pub upper: f64,
    pub witness: GridFunction,
}

struct Tree<'a> {
    mesh: Mesh,
    p: f64,
    p_dual: f64,
    a: &'a [f64],
    cap: Vec<f64>,
}

impl Tree<'_> {
    fn leaf_demand(&self, cell: usize, theta: f64) -> f64 {
        let a = self.a[cell];
        let b = self.cap[self.mesh.cell(cell).id()];
        if a <= 0.0 {
            return 0.0;
        }
        if theta <= 0.0 {
            return b;
        }
        b.min((a / (self.p * theta)).powf(self.p_dual))
    }

    fn demand(&self, q: &DyadicCube, theta: f64) -> f64 {
        if q.level() == self.mesh.depth() {
            return self.leaf_demand(q.cells().start, theta);
        }
        let s: f64 = q.children().map(|c| self.demand(&c, theta)).sum();
        s.min(self.cap[q.id()])
    }

    fn children_demand(&self, q: &DyadicCube, theta: f64) -> f64 {
        q.children().map(|c| self.demand(&c, theta)).sum()
    }

    // Smallest price θ ≥ floor at which the children of q demand at most `target`.
    fn price(&self, q: &DyadicCube, floor: f64, target: f64) -> f64 {
        if self.children_demand(q, floor) <= target {
            return floor;
        }
        let mut hi = floor.max(f64::MIN_POSITIVE * 1e10);
        while self.children_demand(q, hi) > target {
            hi *= 2.0;
        }
        let mut lo = if floor > 0.0 { floor } else { hi };
        while lo > 1e-300 && self.children_demand(q, lo) <= target {
            lo /= 2.0;
        }
        for _ in 0..400 {
            let mid = (lo * hi).sqrt();
            if !(mid > lo && mid < hi) {
                break;
            }
            if self.children_demand(q, mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

pub(crate) fn morrey_dual(p: f64, q: f64, w: &GridFunction, g: &GridFunction) -> MorreyDual {
    let mesh = g.mesh();
    let mu = mesh.cell_measure();
    let kappa: Vec<f64> = g.values().iter().zip(w.values()).map(|(g, w)| g.abs() / w).collect();
    let exponent = if q.is_infinite() { 1.0 } else { 1.0 - p / q };
    let mut cap = vec![0.0; mesh.cube_count()];
    for c in mesh.cubes() {
        cap[c.id()] = c.measure().powf(exponent);
    }
    if p == 1.0 {
        return greedy_p1(mesh, &kappa, &cap, w, g);
    }
    let p_dual = conjugate_exponent(p);
    let a: Vec<f64> = kappa.iter().map(|k| k * mu.powf(1.0 / p_dual)).collect();
    let tree = Tree { mesh, p, p_dual, a: &a, cap };

    let n = mesh.cell_count();
    let mut y = vec![0.0; n];
    let mut upper = 0.0;
    let mut pi = vec![0.0; n];
    // top-down allocation: (cube, allocation, parent price)
    let root = mesh.root();
    let mut stack = vec![(root, tree.demand(&root, 0.0), 0.0f64)];
    while let Some((cube, alloc, floor)) = stack.pop() {
        if cube.level() == mesh.depth() {
            let i = cube.cells().start;
            y[i] = alloc;
            if a[i] > 0.0 && alloc > 0.0 {
                let price = a[i] / (p * alloc.powf(1.0 / p_dual));
                let lambda = (price - floor).max(0.0);
                upper += lambda * tree.cap[cube.id()];
                pi[i] = floor + lambda;
            } else {
                pi[i] = floor;
            }
            continue;
        }
        let theta = tree.price(&cube, floor, alloc);
        upper += (theta - floor) * tree.cap[cube.id()];
        for c in cube.children() {
            stack.push((c, tree.demand(&c, theta), theta));
        }
    }
    for i in 0..n {
        if a[i] > 0.0 {
            if pi[i] <= 0.0 {
                upper = f64::INFINITY;
                break;
            }
            upper += (p - 1.0) * pi[i] * (a[i] / (p * pi[i])).powf(p_dual);
        }
    }
    let u: Vec<f64> = y.iter().map(|&yi| (yi / mu).powf(1.0 / p)).collect();
    finish(p, q, w, g, u, upper)
}

// Linear objective over the laminar polymatroid: greedy by decreasing κ is optimal.
fn greedy_p1(mesh: Mesh, kappa: &[f64], cap: &[f64], w: &GridFunction, g: &GridFunction) -> MorreyDual {
    let mu = mesh.cell_measure();
    let mut slack = cap.to_vec();
    let mut order: Vec<usize> = (0..kappa.len()).filter(|&i| kappa[i] > 0.0).collect();
    order.sort_by(|&i, &j| kappa[j].total_cmp(&kappa[i]).then(i.cmp(&j)));
    let mut u = vec![0.0; kappa.len()];
    for i in order {
        let leaf = mesh.cell(i);
        let chain: Vec<usize> = (0..=mesh.depth()).map(|k| leaf.ancestor(k).id()).collect();
        let amount = chain.iter().map(|&id| slack[id]).fold(f64::INFINITY, f64::min).max(0.0);
        for &id in &chain {
            slack[id] -= amount;
        }
        u[i] = amount / mu;
    }
    let value: f64 = kappa.iter().zip(&u).map(|(k, u)| k * u * mu).sum();
    // feasible by construction, so no rescaling (q = NaN skips it)
    finish(1.0, f64::NAN, w, g, u, value)
}

fn finish(p: f64, q: f64, w: &GridFunction, g: &GridFunction, u: Vec<f64>, upper: f64) -> MorreyDual {
    let f: Vec<f64> = u.iter().zip(w.values()).map(|(u, w)| u / w).collect();
    let f = GridFunction::new(g.mesh(), f).expect("finite witness");
    let scale = if q.is_nan() { 1.0 } else { morrey_norm_arg(p, q, w, &f).0.max(1.0) };
    let f = f.scale(1.0 / scale);
    let value = f.pairing(g);
    MorreyDual { value, upper: upper.max(value), witness: f }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::norm::norm;
    use crate::spaces::SpaceSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(rng: &mut ChaCha8Rng, m: Mesh, lo: f64, hi: f64) -> GridFunction {
        GridFunction::new(m, (0..m.cell_count()).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
    }

    #[test]
    fn matches_lebesgue_when_exponents_coincide() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Mesh::new(1, 3).unwrap();
        for &p in &[1.0, 1.5, 2.0, 4.0] {
            let w = random_grid(&mut rng, m, 0.5, 2.0);
            let g = random_grid(&mut rng, m, 0.0, 3.0);
            let d = morrey_dual(p, p, &w, &g);
            let expect = norm(&SpaceSpec::weighted(p, w.clone()).unwrap().dual(), &g).unwrap();
            assert!((d.value - expect).abs() < 1e-9 * expect, "p={p}: {} vs {expect}", d.value);
            assert!(d.upper >= d.value && d.upper - d.value < 1e-9 * expect);
        }
    }

    #[test]
    fn duality_gap_closes_and_witness_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for l in 1..=5 {
            let m = Mesh::new(1, l).unwrap();
            for &(p, q) in &[(1.5, 3.0), (2.0, 5.0), (1.0, 2.0), (1.2, f64::INFINITY)] {
                let w = random_grid(&mut rng, m, 0.3, 3.0);
                let g = random_grid(&mut rng, m, 0.0, 2.0);
                let d = morrey_dual(p, q, &w, &g);
                let x = SpaceSpec::morrey(p, q, w.clone()).unwrap();
                assert!(norm(&x, &d.witness).unwrap() <= 1.0 + 1e-12);
                assert!(d.upper >= d.value);
                if p > 1.0 {
                    assert!(d.upper - d.value <= 1e-8 * d.value, "L={l} p={p} q={q}: {} {}", d.value, d.upper);
                }
            }
        }
    }

    #[test]
    fn greedy_matches_brute_force_lp_corner() {
        // d=1, L=1, p=1: maximize κ·y over y_0,y_1 ≤ B_cell, y_0+y_1 ≤ 1
        let m = Mesh::new(1, 1).unwrap();
        let w = GridFunction::constant(m, 1.0);
        let g = GridFunction::new(m, vec![3.0, 1.0]).unwrap();
        let q = 2.0;
        let b = 0.5f64.powf(1.0 - 1.0 / q);
        let d = morrey_dual(1.0, q, &w, &g);
        let expect = 3.0 * b + 1.0 * (1.0 - b);
        assert!((d.value - expect).abs() < 1e-12);
    }
}
