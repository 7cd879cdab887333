use std::collections::{BTreeMap, BTreeSet};

use super::grid::{pairwise_sum, GridFunction, Pyramid};
use super::mesh::{DyadicCube, Mesh};
use super::sparse::{children_in, maximal_cubes, CellShare, SparseCollection};
use crate::error::{domain, Error, Result};

/// `A_S f = Σ_{Q∈S} ⟨f⟩_{1,Q} 1_Q`, cellwise.
pub fn sparse_operator(cubes: &[DyadicCube], f: &GridFunction) -> Result<Vec<f64>> {
    for q in cubes {
        f.check_mesh(&q.mesh())?;
    }
    let pyr = Pyramid::of_abs(f);
    Ok(sparse_operator_pyr(cubes, &pyr))
}

pub(crate) fn sparse_operator_pyr(cubes: &[DyadicCube], pyr: &Pyramid) -> Vec<f64> {
    let mesh = pyr.mesh();
    let set: BTreeSet<DyadicCube> = cubes.iter().copied().collect();
    let mut out = vec![0.0; mesh.cell_count()];
    for q in &set {
        let a = pyr.get(q);
        for c in q.cells() {
            out[c] += a;
        }
    }
    out
}

/// Per-cell partial sums `cum[k][x] = Σ_{Q∈S, x∈Q, level(Q) ≥ k} ⟨f⟩_Q`, so that
/// `A_{S(Q)} f = cum[level Q]` on `Q`.
fn localized_sums(mesh: Mesh, member: &[bool], pyr: &Pyramid) -> Vec<Vec<f64>> {
    let n = mesh.cell_count();
    let depth = mesh.depth() as usize;
    let mut cum = vec![vec![0.0; n]; depth + 2];
    for k in (0..=depth).rev() {
        let shift = (depth - k) as u32 * mesh.dim();
        let (head, tail) = cum.split_at_mut(k + 1);
        let below = &tail[0];
        let row = &mut head[k];
        for x in 0..n {
            let code = (x >> shift) as u64;
            let q = mesh.cube(k as u32, code).unwrap();
            row[x] = below[x] + if member[q.id()] { pyr.get(&q) } else { 0.0 };
        }
    }
    cum
}

/// Largest ratio `v·|{A_{S(Q)} f ≥ v} ∩ Q| / ∫_Q |f|` over all dyadic `Q` and all attained values `v`.
///
/// This is the weak (1,1) constant of the localized sparse operators for this `f`, which is
/// exactly what the level-set estimate in the renormalization needs.
pub fn localized_weak_constant(cubes: &[DyadicCube], f: &GridFunction) -> Result<f64> {
    let mesh = f.mesh();
    for q in cubes {
        f.check_mesh(&q.mesh())?;
    }
    let pyr = Pyramid::of_abs(f);
    let mut member = vec![false; mesh.cube_count()];
    for q in cubes {
        member[q.id()] = true;
    }
    let cum = localized_sums(mesh, &member, &pyr);
    Ok(weak_from_cum(mesh, &pyr, &cum))
}

fn weak_from_cum(mesh: Mesh, pyr: &Pyramid, cum: &[Vec<f64>]) -> f64 {
    let mu = mesh.cell_measure();
    let mut best: f64 = 0.0;
    for q in mesh.cubes() {
        let mass = pyr.get(&q) * q.measure();
        if mass <= 0.0 {
            continue;
        }
        let mut vals: Vec<f64> = cum[q.level() as usize][q.cells()].to_vec();
        vals.sort_by(|a, b| b.total_cmp(a));
        for (i, &v) in vals.iter().enumerate() {
            if v <= 0.0 {
                break;
            }
            // cells with value ≥ v are the first i+1 (plus ties, which only increase the count)
            let count = vals[i..].iter().take_while(|&&u| u == v).count() + i;
            best = best.max(v * count as f64 * mu / mass);
        }
    }
    best
}

/// Result of the sparse renormalization.
#[derive(Debug, Clone)]
pub struct Renormalized {
    /// The collection `ℰ`, `ν`-sparse with witness `E_Q = Q ∖ ∪ch_ℰ(Q)`.
    pub collection: SparseCollection,
    /// Domination constant `C = 2K` in `A_S f ≤ C A_ℰ f`.
    pub constant: f64,
    /// The computed weak (1,1) constant behind `K = wk/(1−ν)`.
    pub weak_constant: f64,
}

impl Renormalized {
    /// Largest `Σ_{ch_ℰ(Q)}|Q'| / |Q|` over `Q ∈ ℰ`.
    pub fn max_child_ratio(&self) -> f64 {
        let cubes = &self.collection.cubes;
        cubes
            .iter()
            .map(|q| children_in(cubes, q).iter().map(|c| c.measure()).sum::<f64>() / q.measure())
            .fold(0.0, f64::max)
    }

    /// Largest `A_S f / A_ℰ f` over cells where `A_S f > 0` (infinite if `A_ℰ f` vanishes there).
    pub fn domination_ratio(&self, original: &[DyadicCube], f: &GridFunction) -> Result<f64> {
        let a_s = sparse_operator(original, f)?;
        let a_e = sparse_operator(&self.collection.cubes, f)?;
        Ok(a_s.iter().zip(&a_e).fold(0.0, |m, (&s, &e)| {
            if s <= 0.0 {
                m
            } else if e <= 0.0 {
                f64::INFINITY
            } else {
                m.max(s / e)
            }
        }))
    }
}

/// Builds `ℰ` with `Σ_{ch_ℰ(Q)}|Q'| ≤ (1−ν)|Q|` and `A_S f ≤ 2K·A_ℰ f` pointwise.
///
/// Starting from the maximal cubes of `S`, each `Q₀` receives as children the maximal dyadic
/// cubes inside `{x ∈ Q₀ : A_{S(Q₀)} f(x) > K⟨f⟩_{1,Q₀}}`; the construction then recurses into them.
pub fn sparse_renormalize(s: &SparseCollection, nu: f64, f: &GridFunction) -> Result<Renormalized> {
    if !(nu > 0.0 && nu < 1.0) {
        return domain(format!("nu must lie in (0, 1), got {nu}"));
    }
    let mesh = f.mesh();
    for q in &s.cubes {
        f.check_mesh(&q.mesh())?;
    }
    let pyr = Pyramid::of_abs(f);
    let mut member = vec![false; mesh.cube_count()];
    for q in &s.cubes {
        member[q.id()] = true;
    }
    let cum = localized_sums(mesh, &member, &pyr);
    let wk = weak_from_cum(mesh, &pyr, &cum).max(1.0);
    let k_const = wk / (1.0 - nu);

    let mut out: BTreeSet<DyadicCube> = BTreeSet::new();
    let mut frontier = maximal_cubes(&s.cubes);
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for q0 in frontier {
            out.insert(q0);
            let threshold = k_const * pyr.get(&q0);
            let local = &cum[q0.level() as usize];
            let in_e: Vec<bool> = q0.cells().map(|x| local[x] > threshold).collect();
            next.extend(maximal_inside(&q0, &in_e));
        }
        frontier = next;
    }
    let cubes: Vec<DyadicCube> = out.into_iter().collect();
    let witness = cubes
        .iter()
        .map(|q| {
            let ch = children_in(&cubes, q);
            q.cells()
                .filter(|&x| !ch.iter().any(|c| c.contains_cell(x)))
                .map(|cell| CellShare { cell, share: 1.0 })
                .collect()
        })
        .collect();
    Ok(Renormalized {
        collection: SparseCollection { cubes, eta: nu, witness: Some(witness) },
        constant: 2.0 * k_const,
        weak_constant: wk,
    })
}

// Maximal dyadic subcubes of q (strictly smaller than q) entirely inside the marked cells.
fn maximal_inside(q: &DyadicCube, marked: &[bool]) -> Vec<DyadicCube> {
    let base = q.cells().start;
    let full = |c: &DyadicCube| c.cells().all(|x| marked[x - base]);
    let mut out = Vec::new();
    let mut stack: Vec<DyadicCube> = q.children().collect();
    while let Some(c) = stack.pop() {
        if full(&c) {
            out.push(c);
        } else if c.cells().any(|x| marked[x - base]) {
            stack.extend(c.children());
        }
    }
    out.sort();
    out
}

/// One generation-indexed layer `S_m` with the sets `F_m(Q)`.
#[derive(Debug, Clone)]
pub struct WeakLayer {
    pub m: u32,
    /// `(Q, generation n, cells of F_m(Q))`.
    pub cubes: Vec<(DyadicCube, usize, Vec<usize>)>,
}

#[derive(Debug, Clone)]
pub struct WeakDecomposition {
    pub nu: f64,
    pub layers: Vec<WeakLayer>,
    a_s: Vec<f64>,
    max_dyadic: Vec<f64>,
}

impl WeakDecomposition {
    /// Largest `|F_m(Q)| / ((1−ν)^{2^m}|Q|)`; the size bound holds when this is ≤ 1.
    pub fn size_ratio(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for layer in &self.layers {
            let bound = (1.0 - self.nu).powf(2f64.powi(layer.m.min(60) as i32));
            for (q, _, cells) in &layer.cubes {
                let size = cells.len() as f64 * q.mesh().cell_measure();
                if size > 0.0 {
                    worst = worst.max(size / (bound * q.measure()));
                }
            }
        }
        worst
    }

    /// Both sides of `∫_{{A_S f>2}∖{M^D f>1/4}} |g| ≤ Σ_m 4^{-m} Σ_{Q∈S_m} ∫_{F_m(Q)} |g|`.
    pub fn integral_sides(&self, g: &GridFunction) -> (f64, f64) {
        let mu = g.mesh().cell_measure();
        let gv = g.values();
        let lhs_terms: Vec<f64> = (0..gv.len())
            .map(|x| if self.a_s[x] > 2.0 && self.max_dyadic[x] <= 0.25 { gv[x].abs() } else { 0.0 })
            .collect();
        let lhs = pairwise_sum(&lhs_terms) * mu;
        let mut rhs_terms = Vec::new();
        for layer in &self.layers {
            let scale = 0.25f64.powi(layer.m as i32);
            for (_, _, cells) in &layer.cubes {
                let part: Vec<f64> = cells.iter().map(|&x| gv[x].abs()).collect();
                rhs_terms.push(scale * pairwise_sum(&part) * mu);
            }
        }
        (lhs, pairwise_sum(&rhs_terms))
    }

    pub fn total_cubes(&self) -> usize {
        self.layers.iter().map(|l| l.cubes.len()).sum()
    }
}

/// Checks `Σ_{ch_S(Q)}|Q'| ≤ (1−ν)|Q|` for all `Q ∈ S`, naming the first offending cube.
pub fn check_child_packing(cubes: &[DyadicCube], nu: f64) -> Result<()> {
    for q in cubes {
        let s: f64 = children_in(cubes, q).iter().map(|c| c.measure()).sum();
        if s > (1.0 - nu) * q.measure() * (1.0 + 1e-12) {
            return Err(Error::Precondition {
                cube: Some(q.to_line()),
                message: format!("children cover {} of the cube, more than 1 - nu = {}", s / q.measure(), 1.0 - nu),
            });
        }
    }
    Ok(())
}

/// Layers `S_m = {Q : 4^{-(m+1)} < ⟨f⟩_{1,Q} ≤ 4^{-m}}`, `m ≥ 1`, with their generations and
/// `F_m(Q) = ∪{Q' ∈ S_{m, n+2^m} : Q' ⊆ Q}` for `Q` in generation `n`.
pub fn weak_decomposition(cubes: &[DyadicCube], nu: f64, f: &GridFunction) -> Result<WeakDecomposition> {
    if !(nu > 0.0 && nu < 1.0) {
        return domain(format!("nu must lie in (0, 1), got {nu}"));
    }
    for q in cubes {
        f.check_mesh(&q.mesh())?;
    }
    let set: Vec<DyadicCube> = cubes.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    check_child_packing(&set, nu)?;
    let pyr = Pyramid::of_abs(f);

    let mut by_m: BTreeMap<u32, Vec<DyadicCube>> = BTreeMap::new();
    for q in &set {
        let a = pyr.get(q);
        if a <= 0.0 || a > 0.25 {
            continue;
        }
        // largest m with a ≤ 4^{-m}
        let mut m = (-a.log(4.0)).floor().max(1.0) as u32;
        while 0.25f64.powi(m as i32 + 1) >= a {
            m += 1;
        }
        while m > 1 && 0.25f64.powi(m as i32) < a {
            m -= 1;
        }
        by_m.entry(m).or_default().push(*q);
    }

    let mut layers = Vec::new();
    for (m, members) in by_m {
        // generations: successive maximal elements
        let mut rest = members.clone();
        let mut gens: Vec<Vec<DyadicCube>> = Vec::new();
        while !rest.is_empty() {
            let top = maximal_cubes(&rest);
            rest.retain(|c| !top.contains(c));
            gens.push(top);
        }
        let jump = if m >= 20 { usize::MAX } else { 1usize << m };
        let mut out = Vec::new();
        for (n, gen) in gens.iter().enumerate() {
            let target = n.checked_add(jump).and_then(|t| gens.get(t));
            for q in gen {
                let cells: Vec<usize> = match target {
                    Some(t) => {
                        let mut v: Vec<usize> =
                            t.iter().filter(|c| q.contains(c)).flat_map(|c| c.cells()).collect();
                        v.sort_unstable();
                        v
                    }
                    None => Vec::new(),
                };
                out.push((*q, n, cells));
            }
        }
        out.sort_by_key(|e| e.0);
        layers.push(WeakLayer { m, cubes: out });
    }

    Ok(WeakDecomposition {
        nu,
        layers,
        a_s: sparse_operator_pyr(&set, &pyr),
        max_dyadic: super::grid::maximal_from_pyramid(&pyr),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh(l: u32) -> Mesh {
        Mesh::new(1, l).unwrap()
    }

    fn collection(cubes: Vec<DyadicCube>, eta: f64) -> SparseCollection {
        SparseCollection { cubes, eta, witness: None }
    }

    #[test]
    fn single_root_is_kept() {
        let m = mesh(3);
        let f = GridFunction::constant(m, 1.0);
        let r = sparse_renormalize(&collection(vec![m.root()], 1.0), 0.5, &f).unwrap();
        assert_eq!(r.collection.cubes, vec![m.root()]);
        assert!(r.constant >= 1.0);
        assert!(r.domination_ratio(&[m.root()], &f).unwrap() <= r.constant);
    }

    #[test]
    fn disjoint_collection_is_fixed() {
        let m = mesh(3);
        let s = vec![m.cube(1, 0).unwrap(), m.cube(2, 2).unwrap(), m.cube(3, 6).unwrap()];
        let f = GridFunction::new(m, vec![1.0, 3.0, 0.5, 2.0, 1.0, 0.0, 4.0, 1.0]).unwrap();
        let r = sparse_renormalize(&collection(s.clone(), 1.0), 0.3, &f).unwrap();
        assert_eq!(r.collection.cubes, s);
    }

    #[test]
    fn full_tree_postconditions() {
        let m = mesh(3);
        let s: Vec<DyadicCube> = m.cubes().collect();
        let f = GridFunction::constant(m, 1.0);
        let r = sparse_renormalize(&collection(s.clone(), 0.25), 0.5, &f).unwrap();
        assert!(r.max_child_ratio() <= 0.5 + 1e-12);
        assert!(r.domination_ratio(&s, &f).unwrap() <= r.constant * (1.0 + 1e-12));
        r.collection.check_witness(1e-12).unwrap();
    }

    #[test]
    fn random_renormalizations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let m = mesh(rng.random_range(1..=5));
            let s: Vec<DyadicCube> = m.cubes().filter(|_| rng.random::<f64>() < 0.5).collect();
            if s.is_empty() {
                continue;
            }
            let f = GridFunction::new(m, (0..m.cell_count()).map(|_| rng.random::<f64>().powi(3)).collect()).unwrap();
            let nu = rng.random_range(0.1..0.9);
            let r = sparse_renormalize(&collection(s.clone(), 0.1), nu, &f).unwrap();
            assert!(r.max_child_ratio() <= 1.0 - nu + 1e-12);
            assert!(r.domination_ratio(&s, &f).unwrap() <= r.constant * (1.0 + 1e-12));
            r.collection.check_witness(1e-12).unwrap();
        }
    }

    #[test]
    fn renormalize_rejects_bad_nu() {
        let m = mesh(1);
        let f = GridFunction::constant(m, 1.0);
        assert!(sparse_renormalize(&collection(vec![m.root()], 1.0), 1.0, &f).is_err());
    }

    #[test]
    fn weak_decomposition_constant_function() {
        let m = mesh(3);
        let s = vec![m.root(), m.cube(1, 0).unwrap()];
        let f = GridFunction::constant(m, 1.0);
        let w = weak_decomposition(&s, 0.5, &f).unwrap();
        assert_eq!(w.total_cubes(), 0);
        let (lhs, rhs) = w.integral_sides(&f);
        assert_eq!((lhs, rhs), (0.0, 0.0));
    }

    #[test]
    fn weak_decomposition_partitions_small_functions() {
        let m = mesh(4);
        let s = vec![m.root(), m.cube(1, 0).unwrap(), m.cube(2, 3).unwrap(), m.cube(3, 0).unwrap()];
        let f = GridFunction::new(m, (0..16).map(|i| 0.01 * (i % 5) as f64 + 0.001).collect()).unwrap();
        let w = weak_decomposition(&s, 0.2, &f).unwrap();
        assert_eq!(w.total_cubes(), s.len());
    }

    #[test]
    fn weak_decomposition_names_bad_cube() {
        let m = mesh(2);
        let s: Vec<DyadicCube> = m.cubes().collect();
        let f = GridFunction::constant(m, 0.1);
        match weak_decomposition(&s, 0.5, &f) {
            Err(Error::Precondition { cube: Some(c), .. }) => assert_eq!(c, "0 0"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
