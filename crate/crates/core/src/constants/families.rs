//! Enumeration and sampling of the cube families the constants range over.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dyadic::sparse::carleson_packing;
use crate::dyadic::{DyadicCube, Mesh};
use crate::error::{domain, Result};

/// Largest number of partitions enumerated exhaustively.
pub const PARTITION_CAP: usize = 1000;
/// Largest number of cubes for which all subsets are enumerated.
pub const SUBSET_CUBE_CAP: usize = 15;

/// Number of partitions of the root into dyadic cubes, `b_0 = 1`, `b_{L} = b_{L-1}^{2^d} + 1`.
pub fn partition_count(mesh: Mesh) -> f64 {
    let mut b = 1.0f64;
    for _ in 0..mesh.depth() {
        b = b.powi(mesh.branching() as i32) + 1.0;
    }
    b
}

/// All partitions of the root into dyadic cubes, each sorted, in a fixed recursive order.
///
/// Averaging sums are monotone in the family, so suprema over pairwise disjoint families are
/// attained at these maximal ones.
pub fn partitions(mesh: Mesh) -> Result<Vec<Vec<DyadicCube>>> {
    if partition_count(mesh) > PARTITION_CAP as f64 {
        return domain(format!(
            "{mesh} has {} dyadic partitions, more than the exhaustive cap {PARTITION_CAP}",
            partition_count(mesh)
        ));
    }
    let mut out = partitions_of(&mesh.root());
    for p in &mut out {
        p.sort();
    }
    Ok(out)
}

fn partitions_of(q: &DyadicCube) -> Vec<Vec<DyadicCube>> {
    let mut out = vec![vec![*q]];
    if q.level() == q.mesh().depth() {
        return out;
    }
    let mut combos: Vec<Vec<DyadicCube>> = vec![Vec::new()];
    for c in q.children() {
        let sub = partitions_of(&c);
        let mut next = Vec::with_capacity(combos.len() * sub.len());
        for head in &combos {
            for tail in &sub {
                let mut v = head.clone();
                v.extend_from_slice(tail);
                next.push(v);
            }
        }
        combos = next;
    }
    out.extend(combos);
    out
}

/// A random partition: each cube is split with probability `split` (always kept at the finest level).
pub fn random_partition(mesh: Mesh, split: f64, rng: &mut impl Rng) -> Vec<DyadicCube> {
    let mut out = Vec::new();
    let mut stack = vec![mesh.root()];
    while let Some(q) = stack.pop() {
        if q.level() < mesh.depth() && rng.random::<f64>() < split {
            stack.extend(q.children());
        } else {
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Inclusion-maximal `η`-sparse collections among all subsets of the cubes of a small mesh.
///
/// Sparsity of dyadic collections is hereditary, and sparse operators are monotone in the
/// collection, so these are the only collections a supremum needs.
pub fn maximal_sparse_families(mesh: Mesh, eta: f64) -> Result<Vec<Vec<DyadicCube>>> {
    if !(eta > 0.0 && eta <= 1.0) {
        return domain(format!("sparsity parameter must lie in (0, 1], got {eta}"));
    }
    let n = mesh.cube_count();
    if n > SUBSET_CUBE_CAP {
        return domain(format!("{mesh} has {n} cubes, more than the subset enumeration cap {SUBSET_CUBE_CAP}"));
    }
    let cubes: Vec<DyadicCube> = mesh.cubes().collect();
    let desc: Vec<u32> = cubes
        .iter()
        .map(|q| cubes.iter().enumerate().filter(|(_, c)| q.contains(c)).fold(0u32, |m, (j, _)| m | (1 << j)))
        .collect();
    let sparse = |s: u32| -> bool {
        (0..n).filter(|&i| s >> i & 1 == 1).all(|i| {
            let mass: f64 = (0..n).filter(|&j| (s & desc[i]) >> j & 1 == 1).map(|j| cubes[j].measure()).sum();
            mass <= cubes[i].measure() / eta * (1.0 + 1e-12)
        })
    };
    let total = 1u32 << n;
    let ok: Vec<bool> = (0..total).map(sparse).collect();
    let mut out = Vec::new();
    for s in 0..total {
        if ok[s as usize] && (0..n).all(|j| s >> j & 1 == 1 || !ok[(s | 1 << j) as usize]) {
            out.push((0..n).filter(|&j| s >> j & 1 == 1).map(|j| cubes[j]).collect());
        }
    }
    Ok(out)
}

/// A random maximal sparse collection: cubes in random order, each kept when the collection stays sparse.
pub fn random_sparse_family(mesh: Mesh, eta: f64, rng: &mut impl Rng) -> Result<Vec<DyadicCube>> {
    let mut order: Vec<DyadicCube> = mesh.cubes().collect();
    order.shuffle(rng);
    let mut s: Vec<DyadicCube> = Vec::new();
    for q in order {
        s.push(q);
        if !carleson_packing(&s, eta)? {
            s.pop();
        }
    }
    s.sort();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn partition_counts() {
        for (l, expect) in [(0, 1), (1, 2), (2, 5), (3, 26), (4, 677)] {
            let m = Mesh::new(1, l).unwrap();
            assert_eq!(partition_count(m), expect as f64);
            let ps = partitions(m).unwrap();
            assert_eq!(ps.len(), expect);
            for p in &ps {
                assert_eq!(p.iter().map(|q| q.measure()).sum::<f64>(), 1.0);
            }
        }
        assert_eq!(partitions(Mesh::new(2, 2).unwrap()).unwrap().len(), 17);
        assert!(partitions(Mesh::new(1, 5).unwrap()).is_err());
    }

    #[test]
    fn sparse_families_agree_with_packing() {
        let m = Mesh::new(1, 2).unwrap();
        let fams = maximal_sparse_families(m, 0.5).unwrap();
        assert!(!fams.is_empty());
        let all: Vec<DyadicCube> = m.cubes().collect();
        for f in &fams {
            assert!(carleson_packing(f, 0.5).unwrap());
            for q in &all {
                if !f.contains(q) {
                    let mut g = f.clone();
                    g.push(*q);
                    assert!(!carleson_packing(&g, 0.5).unwrap());
                }
            }
        }
        // the full tree is the unique maximal family once η ≤ 1/(L+1)
        let fams = maximal_sparse_families(m, 1.0 / 3.0).unwrap();
        assert_eq!(fams, vec![all]);
    }

    #[test]
    fn random_families_are_valid() {
        let m = Mesh::new(1, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let p = random_partition(m, 0.6, &mut rng);
            assert_eq!(p.iter().map(|q| q.measure()).sum::<f64>(), 1.0);
            let s = random_sparse_family(m, 0.5, &mut rng).unwrap();
            assert!(carleson_packing(&s, 0.5).unwrap());
        }
    }
}
