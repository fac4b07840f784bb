//! Weighted transfer matrices on the de Bruijn word graph, spectral radii via
//! power iteration, and the variational lower bound in both printed and
//! normalized forms.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{Exp, Exponents};
use crate::function::CylinderFunction;
use crate::seminorm::{table_operator_matrix, weighted_koopman_matrix};
use crate::word::Word;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_ITERATION_CAP: usize = 100_000;

/// The weighted transfer operator `phi -> L(|w|^lambda phi)` restricted to
/// depth-`k` tables, where `w` has depth `k+1`.
///
/// Each row `v` has the two structural in-neighbors `u = i v_1 .. v_{k-1}`
/// with weight `|w(i v)|^lambda / 2`; with `w == 1` every row sums to 1.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    depth: usize,
    lambda: f64,
    /// rows[v] = [(source index, weight); 2]
    rows: Vec<[(usize, f64); 2]>,
}

impl TransferMatrix {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rows(&self) -> &[[(usize, f64); 2]] {
        &self.rows
    }

    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r[0].1 * phi[r[0].0] + r[1].1 * phi[r[1].0])
            .collect()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.rows.len();
        let mut m = DMatrix::zeros(n, n);
        for (v, r) in self.rows.iter().enumerate() {
            for (u, w) in r {
                m[(v, *u)] += w;
            }
        }
        m
    }
}

/// Builds the transfer matrix for weight `w` (depth `k+1`) at finite lambda.
pub fn build_transfer(w: &CylinderFunction, p: &Exponents) -> Result<TransferMatrix> {
    let lambda = match p.lambda {
        Exp::Infinity => return Err(Error::InfiniteLambda),
        Exp::Finite(l) => l,
    };
    let k = w.depth() - 1;
    if k == 0 {
        // depth-1 weights live on length-1 words; view them at depth 2
        return build_transfer(&w.lift(2)?, p);
    }
    let rows = Word::iter_all(k)
        .map(|v| {
            let head = v.drop_last();
            [0u8, 1u8].map(|i| {
                let u = head.prepend(i).expect("length k");
                let full = v.prepend(i).expect("length k+1");
                (u.index(), 0.5 * w.values()[full.index()].abs().powf(lambda))
            })
        })
        .collect();
    Ok(TransferMatrix {
        depth: k,
        lambda,
        rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusReport {
    pub radius: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub iterations: usize,
}

/// Perron radius by power iteration with sup-norm normalization, stopping
/// when the Collatz-Wielandt bracket is narrower than `tol`.
///
/// The iteration runs on `T + sI` (same eigenvectors, spectrum shifted by
/// `s`), which removes the cyclic oscillation of the bracket on imprimitive
/// matrices; `s` is subtracted from the returned bracket.
pub fn spectral_radius(t: &TransferMatrix, tol: f64) -> Result<RadiusReport> {
    spectral_radius_capped(t, tol, DEFAULT_ITERATION_CAP)
}

pub fn spectral_radius_capped(
    t: &TransferMatrix,
    tol: f64,
    cap: usize,
) -> Result<RadiusReport> {
    // The radius of a nonnegative matrix is the max over the radii of its
    // strongly connected components (block-triangular structure), and the
    // Collatz-Wielandt bracket only converges on irreducible blocks. So
    // decompose along strictly positive entries first.
    let n = t.rows.len();
    let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (v, row) in t.rows.iter().enumerate() {
        for (u, w) in row {
            if *w > 0.0 {
                out[*u].push((v, *w));
            }
        }
    }
    let comps = strongly_connected_components(&out);
    let mut best = RadiusReport {
        radius: 0.0,
        bracket_lo: 0.0,
        bracket_hi: 0.0,
        iterations: 0,
    };
    let mut total_iters = 0usize;
    for comp in &comps {
        let mut index_of = vec![usize::MAX; n];
        for (local, global) in comp.iter().enumerate() {
            index_of[*global] = local;
        }
        // internal edges only
        let m = comp.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut has_edge = false;
        for (local, global) in comp.iter().enumerate() {
            for (u, w) in &t.rows[*global] {
                if *w > 0.0 && index_of[*u] != usize::MAX {
                    rows[local].push((index_of[*u], *w));
                    has_edge = true;
                }
            }
        }
        if !has_edge {
            continue;
        }
        let report = irreducible_radius(&rows, tol, cap - total_iters)?;
        total_iters += report.iterations;
        if report.radius > best.radius {
            best = report;
        }
    }
    best.iterations = total_iters;
    Ok(best)
}

/// Collatz-Wielandt power iteration on one irreducible nonnegative block.
/// Iterates `T + sI` (same eigenvectors, spectrum shifted by `s`) so the
/// bracket converges on imprimitive blocks too; `s` is subtracted again.
fn irreducible_radius(
    rows: &[Vec<(usize, f64)>],
    tol: f64,
    cap: usize,
) -> Result<RadiusReport> {
    let n = rows.len();
    let shift = rows
        .iter()
        .flat_map(|r| r.iter().map(|(_, w)| *w))
        .fold(0.0, f64::max);
    let mut phi = vec![1.0f64; n];
    let mut bracket = (0.0, f64::INFINITY);
    for iter in 1..=cap {
        let mut next: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().map(|(u, w)| w * phi[*u]).sum::<f64>())
            .collect();
        for (y, x) in next.iter_mut().zip(&phi) {
            *y += shift * x;
        }
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (y, x) in next.iter().zip(&phi) {
            lo = lo.min(y / x);
            hi = hi.max(y / x);
        }
        bracket = (lo - shift, hi - shift);
        if hi - lo <= tol {
            return Ok(RadiusReport {
                radius: 0.5 * (bracket.0 + bracket.1),
                bracket_lo: bracket.0,
                bracket_hi: bracket.1,
                iterations: iter,
            });
        }
        let sup = next.iter().fold(0.0f64, |a, b| a.max(*b));
        for y in next.iter_mut() {
            *y /= sup;
        }
        phi = next;
    }
    Err(Error::NoConvergence {
        cap,
        width: bracket.1 - bracket.0,
    })
}

/// Iterative Tarjan over an out-adjacency list.
fn strongly_connected_components(out: &[Vec<(usize, f64)>]) -> Vec<Vec<usize>> {
    let n = out.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0usize;
    // explicit DFS stack: (node, next child position)
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut child)) = call.last_mut() {
            if *child < out[v].len() {
                let w = out[v][*child].0;
                *child += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("stack holds the component");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Maximum geometric cycle mean of `|w|` over the de Bruijn graph, computed
/// with Karp's minimum mean cycle recurrence on log-weights. This is the
/// max-plus (lambda = inf) limit of the transfer-matrix radius.
pub fn tropical_radius(w: &CylinderFunction) -> f64 {
    let w = if w.depth() < 2 {
        w.lift(2).expect("depth 2 below cap")
    } else {
        w.clone()
    };
    let k = w.depth() - 1;
    let n = 1usize << k;
    // edges u -> v with u = i v_1..v_{k-1}, log-weight log|w(i v)|
    let mut edges: Vec<[(usize, f64); 2]> = Vec::with_capacity(n);
    for v in Word::iter_all(k) {
        let head = v.drop_last();
        edges.push([0u8, 1u8].map(|i| {
            let u = head.prepend(i).expect("length k");
            let full = v.prepend(i).expect("length k+1");
            let a = w.values()[full.index()].abs();
            (u.index(), if a > 0.0 { a.ln() } else { f64::NEG_INFINITY })
        }));
    }
    // Karp: F[m][v] = best m-edge path weight ending at v, any start vertex
    let mut table = vec![vec![0.0f64; n]];
    for m in 1..=n {
        let prev = &table[m - 1];
        let mut cur = vec![f64::NEG_INFINITY; n];
        for (v, ins) in edges.iter().enumerate() {
            for (u, lw) in ins {
                if prev[*u] > f64::NEG_INFINITY && *lw > f64::NEG_INFINITY {
                    cur[v] = cur[v].max(prev[*u] + lw);
                }
            }
        }
        table.push(cur);
    }
    let mut best = f64::NEG_INFINITY;
    for v in 0..n {
        if table[n][v] == f64::NEG_INFINITY {
            continue;
        }
        let mut worst = f64::INFINITY;
        for m in 0..n {
            if table[m][v] == f64::NEG_INFINITY {
                continue;
            }
            worst = worst.min((table[n][v] - table[m][v]) / (n - m) as f64);
        }
        best = best.max(worst);
    }
    if best == f64::NEG_INFINITY {
        0.0
    } else {
        best.exp()
    }
}

/// `r(M_w K)`: the transfer-matrix radius to the power `1/lambda`, or the
/// tropical radius when lambda is infinite.
pub fn weighted_radius(w: &CylinderFunction, p: &Exponents, tol: f64) -> Result<f64> {
    match p.lambda {
        Exp::Infinity => Ok(tropical_radius(w)),
        Exp::Finite(l) => {
            let t = build_transfer(w, p)?;
            let rho = spectral_radius(&t, tol)?.radius;
            Ok(rho.powf(1.0 / l))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundVariant {
    /// `2^(1/lambda) exp(P(lambda log|w|) / lambda)`, with the pressure from
    /// the matrix of raw `|w|^lambda` edge weights (no 1/2).
    AsPrinted,
    /// `rho(T)^(1/lambda)`, the radius of the half-weighted transfer matrix.
    Normalized,
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationalReport {
    pub printed: f64,
    pub normalized: f64,
}

/// Both readings of the variational lower bound, reported side by side.
///
/// The raw pressure matrix is 2x the transfer matrix, so
/// `printed = 2^(2/lambda) * normalized`; they coincide at lambda = inf.
pub fn variational_bound(w: &CylinderFunction, p: &Exponents, tol: f64) -> Result<VariationalReport> {
    match p.lambda {
        Exp::Infinity => {
            let r = tropical_radius(w);
            Ok(VariationalReport {
                printed: r,
                normalized: r,
            })
        }
        Exp::Finite(l) => {
            let normalized = weighted_radius(w, p, tol)?;
            Ok(VariationalReport {
                printed: 2f64.powf(2.0 / l) * normalized,
                normalized,
            })
        }
    }
}

/// Spectral-radius estimate of the commutator block at p = 2: power-iterates
/// the depth-preserving composition `C = (M_w K)(L M_w)`, `w = f o sigma - f`,
/// and returns `rho(C)^(1/2)`. `C` is symmetric positive semidefinite on
/// plain tables, so the Rayleigh quotient converges to the radius.
pub fn commutator_spectral_radius(
    f: &CylinderFunction,
    _p: &Exponents,
    depth: usize,
    iters: usize,
) -> Result<f64> {
    let w = f.derivative()?;
    if depth < w.depth() {
        return Err(Error::InsufficientDepth {
            depth,
            need: w.depth(),
        });
    }
    let w = w.lift(depth)?;
    let b_up = weighted_koopman_matrix(&w); // depth-1 -> depth
    let b_down = table_operator_matrix(depth, depth - 1, |phi| {
        let wphi = CylinderFunction::new(
            depth,
            phi.values()
                .iter()
                .zip(w.values())
                .map(|(a, b)| a * b)
                .collect(),
        )
        .expect("same shape");
        wphi.ruelle()
    });
    let c = &b_up * &b_down;
    let n = c.nrows();
    // deterministic non-uniform start so no eigenspace is missed by symmetry
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i.wrapping_mul(2654435761) % 1009) as f64) / 1009.0)
        .collect();
    let mut rho = 0.0f64;
    for _ in 0..iters {
        let y: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| c[(i, j)] * x[j]).sum())
            .collect();
        let xy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let xx: f64 = x.iter().map(|a| a * a).sum();
        let next = xy / xx;
        let ny: f64 = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        if ny == 0.0 {
            return Ok(0.0);
        }
        let done = (next - rho).abs() <= 1e-14 * next.abs().max(1.0);
        rho = next;
        x = y.iter().map(|a| a / ny).collect();
        if done {
            return Ok(rho.max(0.0).sqrt());
        }
    }
    Err(Error::NoConvergence {
        cap: iters,
        width: f64::NAN,
    })
}
