//! Optimal transport: Wasserstein distances on the word graph by min-cost
//! flow, the dense transportation LP, and Kantorovich dual certificates.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::CylinderMeasure;
use crate::wordgraph::WordGraph;

pub const BALANCE_TOL: f64 = 1e-12;

/// A balanced flow instance on the depth-`k` word graph: vertex supplies
/// `mu_k - nu_k`, unit cost on every edge.
pub struct FlowProblem {
    pub graph: WordGraph,
    pub supplies: Vec<f64>,
}

impl FlowProblem {
    pub fn new(mu: &CylinderMeasure, nu: &CylinderMeasure, k: usize) -> Result<Self> {
        let mu = to_depth(mu, k)?;
        let nu = to_depth(nu, k)?;
        let supplies: Vec<f64> = mu
            .weights()
            .iter()
            .zip(nu.weights())
            .map(|(a, b)| a - b)
            .collect();
        let total: f64 = supplies.iter().sum();
        if total.abs() > BALANCE_TOL {
            return Err(Error::Unbalanced(total));
        }
        Ok(FlowProblem {
            graph: WordGraph::new(k)?,
            supplies,
        })
    }
}

fn to_depth(m: &CylinderMeasure, k: usize) -> Result<CylinderMeasure> {
    if k >= m.depth() {
        m.refine(k)
    } else {
        m.coarsen(k)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WassersteinReport {
    pub depth: usize,
    pub value: f64,
    /// 1-Lipschitz dual potential over the word-graph vertices, pinned to 0
    /// at the all-zeros word; pairs with `mu - nu` to `value`.
    pub potential: Vec<f64>,
}

struct Arc {
    to: usize,
    rev: usize,
    cap: f64,
    cost: i64,
}

struct McmfGraph {
    adj: Vec<Vec<Arc>>,
}

impl McmfGraph {
    fn new(n: usize) -> Self {
        McmfGraph {
            adj: (0..n).map(|_| Vec::new()).collect(),
        }
    }

    fn add_edge(&mut self, u: usize, v: usize, cap: f64, cost: i64) {
        let ru = self.adj[u].len();
        let rv = self.adj[v].len();
        self.adj[u].push(Arc {
            to: v,
            rev: rv,
            cap,
            cost,
        });
        self.adj[v].push(Arc {
            to: u,
            rev: ru,
            cap: 0.0,
            cost: -cost,
        });
    }
}

/// W_{d_k}(mu_k, nu_k) by successive shortest paths. Graph arcs are
/// uncapacitated, so every augmentation saturates a source or sink arc
/// exactly and the loop terminates after at most 2^{k+1} rounds even with
/// real-valued supplies.
pub fn wasserstein_graph(
    mu: &CylinderMeasure,
    nu: &CylinderMeasure,
    k: usize,
) -> Result<WassersteinReport> {
    let problem = FlowProblem::new(mu, nu, k)?;
    let n = problem.graph.vertex_count();
    let (source, sink) = (n, n + 1);
    let mut g = McmfGraph::new(n + 2);
    let inf_cap = f64::INFINITY;
    for u in 0..n {
        for v in problem.graph.neighbor_indices(u) {
            if v != u {
                g.add_edge(u, v, inf_cap, 1);
            }
        }
    }
    let mut remaining = 0.0f64;
    for (v, b) in problem.supplies.iter().enumerate() {
        if *b > 0.0 {
            g.add_edge(source, v, *b, 0);
            remaining += *b;
        } else if *b < 0.0 {
            g.add_edge(v, sink, -*b, 0);
        }
    }

    let nn = n + 2;
    let mut potential = vec![0i64; nn];
    let mut value = 0.0f64;
    while remaining > BALANCE_TOL {
        // Dijkstra on reduced costs
        let mut dist = vec![i64::MAX; nn];
        let mut prev: Vec<(usize, usize)> = vec![(usize::MAX, 0); nn];
        dist[source] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0i64, source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for (ei, arc) in g.adj[u].iter().enumerate() {
                if arc.cap <= BALANCE_TOL {
                    continue;
                }
                let nd = d + arc.cost + potential[u] - potential[arc.to];
                if nd < dist[arc.to] {
                    dist[arc.to] = nd;
                    prev[arc.to] = (u, ei);
                    heap.push(Reverse((nd, arc.to)));
                }
            }
        }
        if dist[sink] == i64::MAX {
            // only float dust below the residual threshold is left
            break;
        }
        let d_sink = dist[sink];
        for v in 0..nn {
            potential[v] += dist[v].min(d_sink);
        }
        // bottleneck and true cost along the path
        let mut bottleneck = f64::INFINITY;
        let mut path_cost = 0i64;
        let mut v = sink;
        while v != source {
            let (u, ei) = prev[v];
            bottleneck = bottleneck.min(g.adj[u][ei].cap);
            path_cost += g.adj[u][ei].cost;
            v = u;
        }
        let mut v = sink;
        while v != source {
            let (u, ei) = prev[v];
            let rev = g.adj[u][ei].rev;
            g.adj[u][ei].cap -= bottleneck;
            g.adj[v][rev].cap += bottleneck;
            v = u;
        }
        value += bottleneck * path_cost as f64;
        remaining -= bottleneck;
    }

    // the node potentials are 1-Lipschitz across every edge (both arc
    // directions keep positive residual, forcing |pi_u - pi_v| <= 1); the
    // correctly signed restriction pairs with mu - nu to the flow value
    let mut f: Vec<f64> = potential[..n].iter().map(|p| *p as f64).collect();
    let pairing: f64 = f
        .iter()
        .zip(&problem.supplies)
        .map(|(fi, b)| fi * b)
        .sum();
    if pairing < 0.0 {
        for fi in f.iter_mut() {
            *fi = -*fi;
        }
    }
    let f0 = f[0];
    for fi in f.iter_mut() {
        *fi -= f0;
    }
    Ok(WassersteinReport {
        depth: k,
        value,
        potential: f,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DinftySequence {
    pub values: Vec<f64>,
    /// true when the tail increments stay bounded away from zero, the
    /// finite-depth signature of an infinite limiting distance
    pub divergent: bool,
}

/// The nondecreasing sequence W_{d_1}, ..., W_{d_kMax} approximating the
/// Wasserstein distance for the orbit metric from below.
pub fn wasserstein_dinfty(
    mu: &CylinderMeasure,
    nu: &CylinderMeasure,
    k_max: usize,
) -> Result<DinftySequence> {
    if k_max == 0 {
        return Err(Error::ZeroDepth);
    }
    let mut values = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        values.push(wasserstein_graph(mu, nu, k)?.value);
    }
    let divergent = if k_max >= 4 {
        values
            .windows(2)
            .rev()
            .take(3)
            .all(|w| w[1] - w[0] > 1e-3)
    } else {
        false
    };
    Ok(DinftySequence { values, divergent })
}

/// A dense transportation problem: move `mu` to `nu` at tabulated cost.
#[derive(Debug, Clone)]
pub struct TransportInstance {
    cost: Vec<Vec<f64>>,
    mu: Vec<f64>,
    nu: Vec<f64>,
}

impl TransportInstance {
    pub fn new(cost: Vec<Vec<f64>>, mu: Vec<f64>, nu: Vec<f64>) -> Result<Self> {
        let m = mu.len();
        let n = nu.len();
        if cost.len() != m || cost.iter().any(|row| row.len() != n) {
            return Err(Error::NotSquare {
                rows: cost.len(),
                cols: cost.first().map_or(0, |r| r.len()),
            });
        }
        if cost.iter().flatten().any(|c| *c < 0.0 || !c.is_finite()) {
            return Err(Error::NegativeWeight(f64::NAN));
        }
        for w in mu.iter().chain(&nu) {
            if *w < 0.0 || !w.is_finite() {
                return Err(Error::NegativeWeight(*w));
            }
        }
        let sm: f64 = mu.iter().sum();
        let sn: f64 = nu.iter().sum();
        if (sm - sn).abs() > 1e-9 {
            return Err(Error::Unbalanced(sm - sn));
        }
        Ok(TransportInstance { cost, mu, nu })
    }

    pub fn cost(&self) -> &[Vec<f64>] {
        &self.cost
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Coupling {
    pub plan: Vec<Vec<f64>>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DualReport {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

struct SimplexState {
    m: usize,
    n: usize,
    flow: Vec<Vec<f64>>,
    basis: Vec<(usize, usize)>,
}

const PIVOT_TOL: f64 = 1e-12;

fn northwest_corner(inst: &TransportInstance) -> SimplexState {
    let (m, n) = (inst.mu.len(), inst.nu.len());
    let mut a = inst.mu.clone();
    let mut b = inst.nu.clone();
    let mut flow = vec![vec![0.0; n]; m];
    let mut basis = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let x = a[i].min(b[j]);
        flow[i][j] = x;
        basis.push((i, j));
        a[i] -= x;
        b[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        // advance; on ties keep a (possibly zero) basic cell so the basis
        // always has m + n - 1 entries
        if a[i] <= b[j] && i < m - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    SimplexState { m, n, flow, basis }
}

fn solve_duals(inst: &TransportInstance, st: &SimplexState) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![f64::NAN; st.m];
    let mut v = vec![f64::NAN; st.n];
    u[0] = 0.0;
    loop {
        let mut progressed = false;
        for &(i, j) in &st.basis {
            if !u[i].is_nan() && v[j].is_nan() {
                v[j] = inst.cost[i][j] - u[i];
                progressed = true;
            } else if u[i].is_nan() && !v[j].is_nan() {
                u[i] = inst.cost[i][j] - v[j];
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    (u, v)
}

/// The unique alternating cycle created by adding `(i0, j0)` to the basis
/// tree, as cell sequence starting at the entering cell.
fn find_cycle(st: &SimplexState, i0: usize, j0: usize) -> Vec<(usize, usize)> {
    // bipartite adjacency over basic cells: row nodes 0..m, col nodes m..m+n
    let nodes = st.m + st.n;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for &(i, j) in &st.basis {
        adj[i].push(st.m + j);
        adj[st.m + j].push(i);
    }
    // path from row i0 to col j0 through the tree
    let mut parent = vec![usize::MAX; nodes];
    let mut seen = vec![false; nodes];
    let mut stack = vec![i0];
    seen[i0] = true;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                parent[y] = x;
                stack.push(y);
            }
        }
    }
    let mut path = vec![st.m + j0];
    while *path.last().expect("nonempty") != i0 {
        path.push(parent[*path.last().expect("nonempty")]);
    }
    path.reverse(); // i0, ..., m + j0
    let mut cycle = vec![(i0, j0)];
    for pair in path.windows(2) {
        let (x, y) = (pair[0], pair[1]);
        let cell = if x < st.m {
            (x, y - st.m)
        } else {
            (y, x - st.m)
        };
        cycle.push(cell);
    }
    cycle
}

fn run_simplex(inst: &TransportInstance) -> Result<SimplexState> {
    let mut st = northwest_corner(inst);
    let cap = 10_000 * (st.m + st.n);
    for _ in 0..cap {
        let (u, v) = solve_duals(inst, &st);
        // Bland: first improving cell in row-major order
        let mut entering = None;
        'scan: for i in 0..st.m {
            for j in 0..st.n {
                if inst.cost[i][j] - u[i] - v[j] < -PIVOT_TOL
                    && !st.basis.contains(&(i, j))
                {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((i0, j0)) = entering else {
            return Ok(st);
        };
        let cycle = find_cycle(&st, i0, j0);
        // odd positions lose flow
        let mut theta = f64::INFINITY;
        let mut leaving = None;
        for (pos, &(i, j)) in cycle.iter().enumerate() {
            if pos % 2 == 1 && st.flow[i][j] < theta {
                theta = st.flow[i][j];
                leaving = Some((i, j));
            }
        }
        let leaving = leaving.ok_or(Error::Infeasible)?;
        for (pos, &(i, j)) in cycle.iter().enumerate() {
            if pos % 2 == 0 {
                st.flow[i][j] += theta;
            } else {
                st.flow[i][j] -= theta;
            }
        }
        st.flow[leaving.0][leaving.1] = 0.0;
        let slot = st
            .basis
            .iter()
            .position(|c| *c == leaving)
            .expect("leaving cell is basic");
        st.basis[slot] = (i0, j0);
    }
    Err(Error::NoConvergence {
        cap,
        width: f64::NAN,
    })
}

/// Minimum-cost coupling by the transportation simplex.
pub fn transport_lp(inst: &TransportInstance) -> Result<Coupling> {
    let st = run_simplex(inst)?;
    let value = st
        .flow
        .iter()
        .zip(&inst.cost)
        .map(|(frow, crow)| frow.iter().zip(crow).map(|(f, c)| f * c).sum::<f64>())
        .sum();
    Ok(Coupling {
        plan: st.flow,
        value,
    })
}

/// Kantorovich dual potentials from the optimal simplex multipliers,
/// shifted to strict feasibility (a_i + b_j <= c_ij everywhere).
pub fn kantorovich_dual(inst: &TransportInstance) -> Result<DualReport> {
    let st = run_simplex(inst)?;
    let (mut a, b) = solve_duals(inst, &st);
    let mut worst: f64 = 0.0;
    for i in 0..st.m {
        for j in 0..st.n {
            worst = worst.max(a[i] + b[j] - inst.cost[i][j]);
        }
    }
    if worst > 0.0 {
        for ai in a.iter_mut() {
            *ai -= worst;
        }
    }
    let primal: f64 = st
        .flow
        .iter()
        .zip(&inst.cost)
        .map(|(frow, crow)| frow.iter().zip(crow).map(|(f, c)| f * c).sum::<f64>())
        .sum();
    let dual = a.iter().zip(&inst.mu).map(|(x, w)| x * w).sum::<f64>()
        + b.iter().zip(&inst.nu).map(|(x, w)| x * w).sum::<f64>();
    Ok(DualReport {
        a,
        b,
        primal,
        dual,
        gap: primal - dual,
    })
}

/// Full d_k cost matrix for the dense LP cross-check.
pub fn distance_cost_matrix(k: usize) -> Result<Vec<Vec<f64>>> {
    let g = WordGraph::new(k)?;
    Ok(g.all_pairs()
        .into_iter()
        .map(|row| row.into_iter().map(|d| d as f64).collect())
        .collect())
}
