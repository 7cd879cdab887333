use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, structural, Result};

/// Largest supported `dimension * depth`; keeps cell counts addressable and enumerations finite.
pub const MAX_BITS: u32 = 24;

/// Dyadic mesh of the periodic unit cube `[0,1)^d` refined to depth `L`.
///
/// Finest cells are stored in Morton (bit-interleaved) order, so every dyadic cube
/// at level `k` is the contiguous range of `2^{(L-k)d}` cells starting at
/// `code << (L-k)d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawMesh")]
pub struct Mesh {
    dim: u32,
    depth: u32,
}

#[derive(Deserialize)]
struct RawMesh {
    dim: u32,
    depth: u32,
}

impl TryFrom<RawMesh> for Mesh {
    type Error = crate::Error;
    fn try_from(raw: RawMesh) -> Result<Self> {
        Mesh::new(raw.dim, raw.depth)
    }
}

impl Mesh {
    pub fn new(dim: u32, depth: u32) -> Result<Self> {
        if dim == 0 {
            return domain("mesh dimension must be at least 1");
        }
        if dim * depth > MAX_BITS {
            return domain(format!("mesh with d={dim}, L={depth} exceeds 2^{MAX_BITS} cells"));
        }
        Ok(Mesh { dim, depth })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn cell_count(&self) -> usize {
        1usize << (self.depth * self.dim)
    }

    pub fn cell_measure(&self) -> f64 {
        (-((self.depth * self.dim) as f64)).exp2()
    }

    /// Number of children of a non-leaf cube.
    pub fn branching(&self) -> usize {
        1usize << self.dim
    }

    /// Number of cubes at level `k`.
    pub fn cubes_at(&self, level: u32) -> usize {
        1usize << (level * self.dim)
    }

    /// Total number of dyadic cubes, all levels included.
    pub fn cube_count(&self) -> usize {
        self.level_offset(self.depth + 1)
    }

    /// Position of the first level-`k` cube in the level-major enumeration.
    pub fn level_offset(&self, level: u32) -> usize {
        let b = self.branching();
        ((b.pow(level)) - 1) / (b - 1)
    }

    pub fn root(&self) -> DyadicCube {
        DyadicCube { mesh: *self, level: 0, code: 0 }
    }

    pub fn cube(&self, level: u32, code: u64) -> Result<DyadicCube> {
        if level > self.depth {
            return domain(format!("level {level} exceeds mesh depth {}", self.depth));
        }
        if code as usize >= self.cubes_at(level) {
            return domain(format!("code {code} out of range at level {level}"));
        }
        Ok(DyadicCube { mesh: *self, level, code })
    }

    /// Cube from its index vector `(i_1, ..., i_d)`, each in `[0, 2^k)`.
    pub fn cube_from_index(&self, level: u32, index: &[u64]) -> Result<DyadicCube> {
        if index.len() != self.dim as usize {
            return domain(format!("index has {} entries, mesh dimension is {}", index.len(), self.dim));
        }
        if level > self.depth {
            return domain(format!("level {level} exceeds mesh depth {}", self.depth));
        }
        if index.iter().any(|&i| i >> level != 0) {
            return domain(format!("index {index:?} out of range at level {level}"));
        }
        Ok(DyadicCube { mesh: *self, level, code: interleave(index, level) })
    }

    /// The finest cell with Morton id `cell` as a cube.
    pub fn cell(&self, cell: usize) -> DyadicCube {
        debug_assert!(cell < self.cell_count());
        DyadicCube { mesh: *self, level: self.depth, code: cell as u64 }
    }

    /// Cube at position `id` of the level-major enumeration.
    pub fn cube_by_id(&self, id: usize) -> DyadicCube {
        let mut level = 0;
        while self.level_offset(level + 1) <= id {
            level += 1;
        }
        DyadicCube { mesh: *self, level, code: (id - self.level_offset(level)) as u64 }
    }

    /// All cubes, level-major, Morton order within a level.
    pub fn cubes(&self) -> impl Iterator<Item = DyadicCube> + '_ {
        (0..=self.depth).flat_map(move |k| {
            (0..self.cubes_at(k) as u64).map(move |code| DyadicCube { mesh: *self, level: k, code })
        })
    }

    /// Coordinates of the centre of a finest cell.
    pub fn cell_center(&self, cell: usize) -> Vec<f64> {
        let idx = deinterleave(cell as u64, self.depth, self.dim);
        let h = (-(self.depth as f64)).exp2();
        idx.iter().map(|&i| (i as f64 + 0.5) * h).collect()
    }

    pub(crate) fn check_same(&self, other: &Mesh) -> Result<()> {
        if self != other {
            return structural(format!("mesh mismatch: {self} vs {other}"));
        }
        Ok(())
    }
}

impl fmt::Display for Mesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={} L={}", self.dim, self.depth)
    }
}

/// A dyadic cube of a [`Mesh`]: level `k` and Morton code in `[0, 2^{kd})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    mesh: Mesh,
    level: u32,
    code: u64,
}

impl PartialOrd for Mesh {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Mesh {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.dim, self.depth).cmp(&(other.dim, other.depth))
    }
}

impl DyadicCube {
    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn code(&self) -> u64 {
        self.code
    }

    /// Index vector `(i_1, ..., i_d)`.
    pub fn index(&self) -> Vec<u64> {
        deinterleave(self.code, self.level, self.mesh.dim)
    }

    pub fn measure(&self) -> f64 {
        (-((self.level * self.mesh.dim) as f64)).exp2()
    }

    pub fn side_length(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Position in the level-major enumeration of the mesh.
    pub fn id(&self) -> usize {
        self.mesh.level_offset(self.level) + self.code as usize
    }

    /// Range of finest-cell ids covered by the cube.
    pub fn cells(&self) -> std::ops::Range<usize> {
        let shift = (self.mesh.depth - self.level) * self.mesh.dim;
        let start = (self.code << shift) as usize;
        start..start + (1usize << shift)
    }

    pub fn cell_count(&self) -> usize {
        1usize << ((self.mesh.depth - self.level) * self.mesh.dim)
    }

    pub fn parent(&self) -> Option<DyadicCube> {
        (self.level > 0).then(|| DyadicCube {
            mesh: self.mesh,
            level: self.level - 1,
            code: self.code >> self.mesh.dim,
        })
    }

    /// Child `i`, `0 <= i < 2^d`; `None` at the finest level.
    pub fn child(&self, i: usize) -> Option<DyadicCube> {
        if self.level == self.mesh.depth || i >= self.mesh.branching() {
            return None;
        }
        Some(DyadicCube {
            mesh: self.mesh,
            level: self.level + 1,
            code: (self.code << self.mesh.dim) | i as u64,
        })
    }

    pub fn children(&self) -> impl Iterator<Item = DyadicCube> + '_ {
        (0..self.mesh.branching()).filter_map(move |i| self.child(i))
    }

    /// Ancestor at level `k <= self.level`.
    pub fn ancestor(&self, level: u32) -> DyadicCube {
        debug_assert!(level <= self.level);
        DyadicCube {
            mesh: self.mesh,
            level,
            code: self.code >> ((self.level - level) * self.mesh.dim),
        }
    }

    pub fn contains(&self, other: &DyadicCube) -> bool {
        self.mesh == other.mesh
            && other.level >= self.level
            && other.ancestor(self.level).code == self.code
    }

    pub fn contains_cell(&self, cell: usize) -> bool {
        self.cells().contains(&cell)
    }

    /// Descendants including the cube itself, level-major.
    pub fn subtree(&self) -> impl Iterator<Item = DyadicCube> + '_ {
        (self.level..=self.mesh.depth).flat_map(move |k| {
            let shift = (k - self.level) * self.mesh.dim;
            let start = self.code << shift;
            (start..start + (1u64 << shift)).map(move |code| DyadicCube { mesh: self.mesh, level: k, code })
        })
    }

    /// Line of the collection text format: `k i_1 ... i_d`.
    pub fn to_line(&self) -> String {
        let mut s = self.level.to_string();
        for i in self.index() {
            s.push(' ');
            s.push_str(&i.to_string());
        }
        s
    }

    pub fn parse_line(mesh: &Mesh, line: &str) -> Result<DyadicCube> {
        let nums: std::result::Result<Vec<u64>, _> = line.split_whitespace().map(str::parse::<u64>).collect();
        let nums = nums.map_err(|e| crate::Error::Domain(format!("bad cube line {line:?}: {e}")))?;
        if nums.len() != 1 + mesh.dim as usize {
            return domain(format!("cube line {line:?} needs 1 + {} integers", mesh.dim));
        }
        mesh.cube_from_index(nums[0] as u32, &nums[1..])
    }
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.to_line())
    }
}

fn interleave(index: &[u64], level: u32) -> u64 {
    let d = index.len() as u32;
    let mut code = 0u64;
    for b in (0..level).rev() {
        for (j, &i) in index.iter().enumerate() {
            code |= ((i >> b) & 1) << (b * d + (d - 1 - j as u32));
        }
    }
    code
}

fn deinterleave(code: u64, level: u32, dim: u32) -> Vec<u64> {
    let mut index = vec![0u64; dim as usize];
    for b in 0..level {
        for (j, i) in index.iter_mut().enumerate() {
            *i |= ((code >> (b * dim + (dim - 1 - j as u32))) & 1) << b;
        }
    }
    index
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measures_sum_to_one() {
        for (d, l) in [(1, 0), (1, 4), (2, 3), (3, 2)] {
            let m = Mesh::new(d, l).unwrap();
            assert!((m.cell_count() as f64 * m.cell_measure() - 1.0).abs() < 1e-15);
            for k in 0..=l {
                let total: f64 = m.cubes().filter(|q| q.level() == k).map(|q| q.measure()).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn children_partition_parent() {
        let m = Mesh::new(2, 3).unwrap();
        for q in m.cubes().filter(|q| q.level() < 3) {
            let mut cells: Vec<usize> = q.children().flat_map(|c| c.cells()).collect();
            cells.sort_unstable();
            assert_eq!(cells, q.cells().collect::<Vec<_>>());
            for c in q.children() {
                assert_eq!(c.parent(), Some(q));
            }
        }
    }

    #[test]
    fn index_round_trip_and_ids() {
        let m = Mesh::new(2, 3).unwrap();
        for (n, q) in m.cubes().enumerate() {
            assert_eq!(q.id(), n);
            assert_eq!(m.cube_by_id(n), q);
            let back = m.cube_from_index(q.level(), &q.index()).unwrap();
            assert_eq!(back, q);
            assert_eq!(DyadicCube::parse_line(&m, &q.to_line()).unwrap(), q);
        }
    }

    #[test]
    fn morton_cells_are_geometric() {
        // every cell of a cube has its centre inside the cube's box
        let m = Mesh::new(2, 3).unwrap();
        for q in m.cubes() {
            let side = q.side_length();
            let lo: Vec<f64> = q.index().iter().map(|&i| i as f64 * side).collect();
            for c in q.cells() {
                let x = m.cell_center(c);
                for j in 0..2 {
                    assert!(x[j] > lo[j] && x[j] < lo[j] + side);
                }
            }
        }
    }

    #[test]
    fn cube_contains_cell_count() {
        let m = Mesh::new(1, 4).unwrap();
        let q = m.cube(1, 1).unwrap();
        assert_eq!(q.cell_count(), 8);
        assert_eq!(q.cells(), 8..16);
        assert!(q.contains(&m.cell(9)));
        assert!(!q.contains(&m.cell(3)));
        assert_eq!(q.subtree().count(), 15);
    }
}
