use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use super::mesh::{DyadicCube, Mesh};
use crate::error::{domain, structural, Error, Result};

/// Share of a finest cell assigned to a cube's disjoint witness set (`1.0` = whole cell).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellShare {
    pub cell: usize,
    pub share: f64,
}

/// A finite set of dyadic cubes with sparsity parameter `eta` and, optionally, the
/// pairwise disjoint sets `E_Q ⊆ Q` with `|E_Q| ≥ η|Q|` witnessing it.
///
/// Witness sets are measures on finest cells: a cell may be split between cubes.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCollection {
    pub cubes: Vec<DyadicCube>,
    pub eta: f64,
    pub witness: Option<Vec<Vec<CellShare>>>,
}

impl SparseCollection {
    pub fn mesh(&self) -> Option<Mesh> {
        self.cubes.first().map(|q| q.mesh())
    }

    /// Checks the witness invariants: containment, disjointness and proportion.
    pub fn check_witness(&self, tol: f64) -> Result<()> {
        let Some(witness) = &self.witness else {
            return Err(Error::Precondition { cube: None, message: "no witness attached".into() });
        };
        let Some(mesh) = self.mesh() else { return Ok(()) };
        let mu = mesh.cell_measure();
        let mut used = vec![0.0; mesh.cell_count()];
        for (q, e) in self.cubes.iter().zip(witness) {
            let mut mass = 0.0;
            for s in e {
                if !q.contains_cell(s.cell) {
                    return Err(Error::Precondition {
                        cube: Some(q.to_line()),
                        message: format!("witness cell {} lies outside the cube", s.cell),
                    });
                }
                used[s.cell] += s.share;
                mass += s.share * mu;
            }
            if mass < self.eta * q.measure() * (1.0 - tol) {
                return Err(Error::Precondition {
                    cube: Some(q.to_line()),
                    message: format!("witness measure {mass} below eta*|Q| = {}", self.eta * q.measure()),
                });
            }
        }
        if let Some(c) = used.iter().position(|&u| u > 1.0 + tol) {
            return Err(Error::Precondition {
                cube: None,
                message: format!("witness sets overlap on cell {c} (total share {})", used[c]),
            });
        }
        Ok(())
    }

    /// Collection in the line format: one `k i_1 ... i_d` per line.
    pub fn render_cubes(&self) -> String {
        render_collection(&self.cubes)
    }

    /// Witness lines `k i_1 ... i_d : cell,cell,...`; partial cells are written `cell*share`.
    pub fn render_witness(&self) -> Option<String> {
        let witness = self.witness.as_ref()?;
        let mut out = String::new();
        for (q, e) in self.cubes.iter().zip(witness) {
            let cells: Vec<String> = e
                .iter()
                .map(|s| if s.share >= 1.0 { s.cell.to_string() } else { format!("{}*{}", s.cell, s.share) })
                .collect();
            let _ = writeln!(out, "{} : {}", q.to_line(), cells.join(","));
        }
        Some(out)
    }

    pub fn parse_witness(mesh: &Mesh, eta: f64, text: &str) -> Result<SparseCollection> {
        let mut cubes = Vec::new();
        let mut witness = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (head, tail) = line.split_once(':').ok_or_else(|| Error::Config {
                line: Some(n + 1),
                message: "witness line lacks ':'".into(),
            })?;
            cubes.push(DyadicCube::parse_line(mesh, head.trim())?);
            let mut e = Vec::new();
            for tok in tail.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let (cell, share) = match tok.split_once('*') {
                    Some((c, s)) => (c, s.parse::<f64>().ok()),
                    None => (tok, Some(1.0)),
                };
                let cell = cell.parse::<usize>().ok();
                match (cell, share) {
                    (Some(cell), Some(share)) if cell < mesh.cell_count() => e.push(CellShare { cell, share }),
                    _ => {
                        return Err(Error::Config { line: Some(n + 1), message: format!("bad witness cell {tok:?}") })
                    }
                }
            }
            witness.push(e);
        }
        Ok(SparseCollection { cubes, eta, witness: Some(witness) })
    }
}

pub fn render_collection(cubes: &[DyadicCube]) -> String {
    let mut out = String::new();
    for q in cubes {
        out.push_str(&q.to_line());
        out.push('\n');
    }
    out
}

pub fn parse_collection(mesh: &Mesh, text: &str) -> Result<Vec<DyadicCube>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| DyadicCube::parse_line(mesh, l))
        .collect()
}

fn check_family(cubes: &[DyadicCube], eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return domain(format!("sparsity parameter must lie in (0, 1], got {eta}"));
    }
    if let Some(first) = cubes.first() {
        if cubes.iter().any(|q| q.mesh() != first.mesh()) {
            return structural("cubes of a collection must share one mesh");
        }
    }
    Ok(())
}

fn dedup(cubes: &[DyadicCube]) -> Vec<DyadicCube> {
    cubes.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
}

/// Carleson packing `Σ_{Q' ∈ S, Q' ⊆ Q} |Q'| ≤ η^{-1}|Q|` for every `Q ∈ S`.
pub fn carleson_packing(cubes: &[DyadicCube], eta: f64) -> Result<bool> {
    check_family(cubes, eta)?;
    let cubes = dedup(cubes);
    Ok(packing_violation(&cubes, eta).is_none())
}

fn packing_violation(cubes: &[DyadicCube], eta: f64) -> Option<DyadicCube> {
    let Some(mesh) = cubes.first().map(|q| q.mesh()) else { return None };
    // mass[id] = Σ_{Q' ∈ S, Q' ⊆ Q} |Q'|, accumulated bottom-up over all cubes of the mesh
    let mut member = vec![false; mesh.cube_count()];
    for q in cubes {
        member[q.id()] = true;
    }
    let mut mass = vec![0.0; mesh.cube_count()];
    for k in (0..=mesh.depth()).rev() {
        for code in 0..mesh.cubes_at(k) as u64 {
            let q = mesh.cube(k, code).unwrap();
            let mut m: f64 = q.children().map(|c| mass[c.id()]).sum();
            if member[q.id()] {
                m += q.measure();
            }
            mass[q.id()] = m;
        }
    }
    cubes.iter().copied().find(|q| mass[q.id()] * eta > q.measure() * (1.0 + 1e-12))
}

/// Decides `η`-sparsity of a dyadic family and returns a witness when it holds.
///
/// The decision uses Carleson packing; the witness is built deepest cube first, each cube
/// taking `η|Q|` of the measure still free inside it. Packing guarantees that enough is free.
pub fn is_sparse(cubes: &[DyadicCube], eta: f64) -> Result<Option<SparseCollection>> {
    check_family(cubes, eta)?;
    let cubes = dedup(cubes);
    if packing_violation(&cubes, eta).is_some() {
        return Ok(None);
    }
    Ok(Some(greedy_witness(cubes, eta)))
}

fn greedy_witness(cubes: Vec<DyadicCube>, eta: f64) -> SparseCollection {
    let Some(mesh) = cubes.first().map(|q| q.mesh()) else {
        return SparseCollection { cubes, eta, witness: Some(Vec::new()) };
    };
    let mu = mesh.cell_measure();
    let mut free = vec![1.0f64; mesh.cell_count()];
    let mut witness = vec![Vec::new(); cubes.len()];
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse((cubes[i].level(), std::cmp::Reverse(cubes[i].code()))));
    for i in order {
        let q = cubes[i];
        let mut need = eta * q.measure() / mu;
        for c in q.cells() {
            if need <= 1e-12 {
                break;
            }
            if free[c] <= 0.0 {
                continue;
            }
            let take = free[c].min(need);
            free[c] -= take;
            need -= take;
            let share = if (take - 1.0).abs() < 1e-12 { 1.0 } else { take };
            witness[i].push(CellShare { cell: c, share });
        }
    }
    SparseCollection { cubes, eta, witness: Some(witness) }
}

/// Feasibility of disjoint `E_Q ⊆ Q`, `|E_Q| ≥ η|Q|`, by max-flow from cubes to cells.
///
/// Independent of the packing argument; meant for small instances.
pub fn is_sparse_by_flow(cubes: &[DyadicCube], eta: f64) -> Result<Option<SparseCollection>> {
    check_family(cubes, eta)?;
    let cubes = dedup(cubes);
    let Some(mesh) = cubes.first().map(|q| q.mesh()) else {
        return Ok(Some(SparseCollection { cubes, eta, witness: Some(Vec::new()) }));
    };
    let n_cubes = cubes.len();
    let n_cells = mesh.cell_count();
    if n_cubes * n_cells > 1 << 20 {
        return domain("flow oracle limited to small instances");
    }
    // measure in units of one cell
    let demand: Vec<f64> = cubes.iter().map(|q| eta * q.cell_count() as f64).collect();
    let source = 0;
    let sink = 1 + n_cubes + n_cells;
    let mut net = FlowNet::new(sink + 1);
    for (i, q) in cubes.iter().enumerate() {
        net.add_edge(source, 1 + i, demand[i]);
        for c in q.cells() {
            net.add_edge(1 + i, 1 + n_cubes + c, f64::INFINITY);
        }
    }
    for c in 0..n_cells {
        net.add_edge(1 + n_cubes + c, sink, 1.0);
    }
    let flow = net.max_flow(source, sink);
    let total: f64 = demand.iter().sum();
    if flow < total * (1.0 - 1e-12) - 1e-12 {
        return Ok(None);
    }
    let mut witness = vec![Vec::new(); n_cubes];
    for (i, e) in witness.iter_mut().enumerate() {
        for &edge in &net.adj[1 + i] {
            let ed = &net.edges[edge];
            if ed.to > n_cubes && ed.to < sink && ed.flow > 1e-12 {
                let share = if (ed.flow - 1.0).abs() < 1e-12 { 1.0 } else { ed.flow };
                e.push(CellShare { cell: ed.to - 1 - n_cubes, share });
            }
        }
    }
    Ok(Some(SparseCollection { cubes, eta, witness: Some(witness) }))
}

struct FlowEdge {
    to: usize,
    cap: f64,
    flow: f64,
}

struct FlowNet {
    edges: Vec<FlowEdge>,
    adj: Vec<Vec<usize>>,
}

impl FlowNet {
    fn new(n: usize) -> Self {
        FlowNet { edges: Vec::new(), adj: vec![Vec::new(); n] }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: f64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(FlowEdge { to, cap, flow: 0.0 });
        self.adj[to].push(self.edges.len());
        self.edges.push(FlowEdge { to: from, cap: 0.0, flow: 0.0 });
    }

    fn residual(&self, e: usize) -> f64 {
        self.edges[e].cap - self.edges[e].flow
    }

    // Edmonds–Karp; capacities are small multiples of cell shares.
    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            let mut prev = vec![usize::MAX; self.adj.len()];
            let mut queue = VecDeque::from([s]);
            prev[s] = usize::MAX - 1;
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &e in &self.adj[u] {
                    let v = self.edges[e].to;
                    if prev[v] == usize::MAX && self.residual(e) > 1e-13 {
                        prev[v] = e;
                        queue.push_back(v);
                    }
                }
            }
            if prev[t] == usize::MAX {
                return total;
            }
            let mut bottleneck = f64::INFINITY;
            let mut v = t;
            while v != s {
                let e = prev[v];
                bottleneck = bottleneck.min(self.residual(e));
                v = self.edges[e ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let e = prev[v];
                self.edges[e].flow += bottleneck;
                self.edges[e ^ 1].flow -= bottleneck;
                v = self.edges[e ^ 1].to;
            }
            total += bottleneck;
        }
    }
}

/// Maximal elements of `ch_S(Q)`: cubes of `S` strictly inside `Q` with no cube of `S` in between.
pub fn children_in(cubes: &[DyadicCube], q: &DyadicCube) -> Vec<DyadicCube> {
    let inside: Vec<DyadicCube> = cubes.iter().copied().filter(|c| c != q && q.contains(c)).collect();
    inside
        .iter()
        .copied()
        .filter(|c| !inside.iter().any(|o| o != c && o.contains(c)))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Maximal cubes of a collection (with respect to inclusion).
pub fn maximal_cubes(cubes: &[DyadicCube]) -> Vec<DyadicCube> {
    let set = dedup(cubes);
    set.iter().copied().filter(|c| !set.iter().any(|o| o != c && o.contains(c))).collect()
}
