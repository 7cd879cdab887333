use serde::{Deserialize, Serialize};

use super::mesh::{DyadicCube, Mesh};
use crate::error::{domain, Result};

/// Real values on the finest cells of a mesh (Morton order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridFunction {
    mesh: Mesh,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGrid {
    mesh: Mesh,
    values: Vec<f64>,
}

impl TryFrom<RawGrid> for GridFunction {
    type Error = crate::Error;
    fn try_from(raw: RawGrid) -> Result<Self> {
        GridFunction::new(raw.mesh, raw.values)
    }
}

impl GridFunction {
    pub fn new(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.cell_count() {
            return domain(format!(
                "grid function has {} values, mesh {mesh} has {} cells",
                values.len(),
                mesh.cell_count()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("non-finite value {} at cell {i}", values[i]));
        }
        Ok(GridFunction { mesh, values })
    }

    pub fn constant(mesh: Mesh, c: f64) -> Self {
        GridFunction { mesh, values: vec![c; mesh.cell_count()] }
    }

    pub fn zeros(mesh: Mesh) -> Self {
        Self::constant(mesh, 0.0)
    }

    pub fn indicator(q: &DyadicCube) -> Self {
        let mesh = q.mesh();
        let mut values = vec![0.0; mesh.cell_count()];
        for c in q.cells() {
            values[c] = 1.0;
        }
        GridFunction { mesh, values }
    }

    /// Indicator of a set of cells.
    pub fn indicator_cells(mesh: Mesh, cells: impl IntoIterator<Item = usize>) -> Self {
        let mut values = vec![0.0; mesh.cell_count()];
        for c in cells {
            values[c] = 1.0;
        }
        GridFunction { mesh, values }
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(mesh: Mesh, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..mesh.cell_count()).map(|c| f(&mesh.cell_center(c))).collect();
        Self::new(mesh, values)
    }

    #[allow(dead_code)]
    pub(crate) fn from_raw(mesh: Mesh, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), mesh.cell_count());
        GridFunction { mesh, values }
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction { mesh: self.mesh, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        debug_assert_eq!(self.mesh, other.mesh);
        GridFunction {
            mesh: self.mesh,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn abs(&self) -> GridFunction {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    pub fn restrict(&self, q: &DyadicCube) -> GridFunction {
        let mut values = vec![0.0; self.values.len()];
        for c in q.cells() {
            values[c] = self.values[c];
        }
        GridFunction { mesh: self.mesh, values }
    }

    pub fn restrict_cells(&self, keep: &[bool]) -> GridFunction {
        GridFunction {
            mesh: self.mesh,
            values: self.values.iter().zip(keep).map(|(&v, &k)| if k { v } else { 0.0 }).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `∫ |f|` with respect to Lebesgue measure on the unit cube.
    pub fn l1(&self) -> f64 {
        pairwise_sum(&self.values.iter().map(|v| v.abs()).collect::<Vec<_>>()) * self.mesh.cell_measure()
    }

    /// `∫ |f g|`.
    pub fn pairing(&self, other: &GridFunction) -> f64 {
        let prod: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| (a * b).abs()).collect();
        pairwise_sum(&prod) * self.mesh.cell_measure()
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    pub(crate) fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        self.mesh.check_same(mesh)
    }
}

/// Pairwise summation over a slice; the reduction tree depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Averages of a cell quantity over every dyadic cube, one vector per level.
///
/// Built bottom-up by averaging children, which fixes the summation tree by cube order.
#[derive(Debug, Clone)]
pub struct Pyramid {
    mesh: Mesh,
    levels: Vec<Vec<f64>>,
}

impl Pyramid {
    pub fn new(mesh: Mesh, cell_values: &[f64]) -> Self {
        debug_assert_eq!(cell_values.len(), mesh.cell_count());
        let b = mesh.branching();
        let inv = 1.0 / b as f64;
        let mut levels = vec![Vec::new(); mesh.depth() as usize + 1];
        levels[mesh.depth() as usize] = cell_values.to_vec();
        for k in (0..mesh.depth() as usize).rev() {
            let finer = &levels[k + 1];
            let coarse: Vec<f64> = finer.chunks(b).map(|ch| ch.iter().sum::<f64>() * inv).collect();
            levels[k] = coarse;
        }
        Pyramid { mesh, levels }
    }

    /// Pyramid of `|f|`.
    pub fn of_abs(f: &GridFunction) -> Self {
        let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
        Self::new(f.mesh(), &abs)
    }

    /// Pyramid of `|f|^r`.
    pub fn of_power(f: &GridFunction, r: f64) -> Self {
        let pw: Vec<f64> = f.values().iter().map(|v| v.abs().powf(r)).collect();
        Self::new(f.mesh(), &pw)
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn get(&self, q: &DyadicCube) -> f64 {
        self.levels[q.level() as usize][q.code() as usize]
    }

    pub fn level(&self, k: u32) -> &[f64] {
        &self.levels[k as usize]
    }

    /// Average over the level-`k` cube containing `cell`.
    pub fn at_cell(&self, k: u32, cell: usize) -> f64 {
        let shift = (self.mesh.depth() - k) * self.mesh.dim();
        self.levels[k as usize][cell >> shift]
    }
}

/// `⟨f⟩_{r,Q} = (|Q|^{-1} ∫_Q |f|^r)^{1/r}`.
pub fn average(f: &GridFunction, q: &DyadicCube, r: f64) -> Result<f64> {
    f.check_mesh(&q.mesh())?;
    if !(r > 0.0) || !r.is_finite() {
        return domain(format!("average exponent must lie in (0, inf), got {r}"));
    }
    let vals = &f.values()[q.cells()];
    let s = if r == 1.0 {
        pairwise_sum(&vals.iter().map(|v| v.abs()).collect::<Vec<_>>())
    } else {
        pairwise_sum(&vals.iter().map(|v| v.abs().powf(r)).collect::<Vec<_>>())
    };
    let mean = s / vals.len() as f64;
    Ok(if r == 1.0 { mean } else { mean.powf(1.0 / r) })
}

/// Dyadic maximal function `M^D f(x) = max_{Q ∋ x} ⟨f⟩_{1,Q}` from a pyramid of `|f|`.
pub fn maximal_from_pyramid(p: &Pyramid) -> Vec<f64> {
    let mesh = p.mesh();
    (0..mesh.cell_count())
        .map(|c| (0..=mesh.depth()).map(|k| p.at_cell(k, c)).fold(0.0, f64::max))
        .collect()
}

/// Maximal dyadic cubes `P` with `⟨f⟩_{1,P} > λ`, level-major order.
pub fn cz_stopping_cubes(f: &GridFunction, lambda: f64) -> Result<Vec<DyadicCube>> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return domain(format!("stopping level must be positive, got {lambda}"));
    }
    let pyr = Pyramid::of_abs(f);
    Ok(stopping_from_pyramid(&pyr, lambda))
}

pub(crate) fn stopping_from_pyramid(pyr: &Pyramid, lambda: f64) -> Vec<DyadicCube> {
    let mesh = pyr.mesh();
    let mut out = Vec::new();
    let mut stack = vec![mesh.root()];
    while let Some(q) = stack.pop() {
        if pyr.get(&q) > lambda {
            out.push(q);
        } else {
            stack.extend(q.children());
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(d: u32, l: u32) -> Mesh {
        Mesh::new(d, l).unwrap()
    }

    #[test]
    fn average_examples() {
        let m = mesh(1, 2);
        let one = GridFunction::constant(m, 1.0);
        for q in m.cubes() {
            assert_eq!(average(&one, &q, 1.0).unwrap(), 1.0);
        }
        let f = GridFunction::new(m, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let left = m.cube(1, 0).unwrap();
        assert_eq!(average(&f, &left, 1.0).unwrap(), 1.5);
        // indicator of the left half of Q, r = 2
        let half = GridFunction::indicator(&m.cube(2, 0).unwrap());
        let v = average(&half, &left, 2.0).unwrap();
        assert!((v - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn average_rejects_foreign_cube() {
        let f = GridFunction::constant(mesh(1, 2), 1.0);
        let q = mesh(1, 3).root();
        assert!(matches!(average(&f, &q, 1.0), Err(crate::Error::Structural(_))));
    }

    #[test]
    fn stopping_examples() {
        let m = mesh(1, 2);
        let one = GridFunction::constant(m, 1.0);
        assert!(cz_stopping_cubes(&one, 2.0).unwrap().is_empty());
        assert_eq!(cz_stopping_cubes(&one, 0.5).unwrap(), vec![m.root()]);
        let f = GridFunction::new(m, vec![4.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(cz_stopping_cubes(&f, 1.5).unwrap(), vec![m.cube(1, 0).unwrap()]);
        assert!(cz_stopping_cubes(&f, 0.0).is_err());
    }

    #[test]
    fn pyramid_matches_direct_average() {
        let m = mesh(2, 2);
        let f = GridFunction::new(m, (0..16).map(|i| (i as f64).sin()).collect()).unwrap();
        let p = Pyramid::of_abs(&f);
        for q in m.cubes() {
            assert!((p.get(&q) - average(&f, &q, 1.0).unwrap()).abs() < 1e-14);
        }
    }
}
