//! The de Bruijn word graph on depth-`k` words and its metrics.
//!
//! Vertices are the `2^k` binary words of length `k`. Word `u` is adjacent to
//! every word obtained by pushing a symbol in from the left (`i u_1 .. u_{k-1}`)
//! or from the right (`u_2 .. u_k j`), so each vertex has at most four distinct
//! neighbours and the graph has diameter `k`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::CylinderFunction;
use crate::tailpoint::TailPoint;
use crate::word::Word;

pub struct WordGraph {
    depth: usize,
}

impl WordGraph {
    pub fn new(depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::ZeroDepth);
        }
        if depth > crate::MAX_DEPTH {
            return Err(Error::DepthOverflow(depth));
        }
        Ok(WordGraph { depth })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn vertex_count(&self) -> usize {
        1 << self.depth
    }

    /// Indices of the (at most four) neighbours of the word at `index`.
    pub fn neighbor_indices(&self, index: usize) -> Vec<usize> {
        let k = self.depth;
        let mask = (1usize << k) - 1;
        let mut out = Vec::with_capacity(4);
        for i in 0..2usize {
            let prepended = (index >> 1) | (i << (k - 1));
            if !out.contains(&prepended) {
                out.push(prepended);
            }
            let appended = ((index << 1) | i) & mask;
            if !out.contains(&appended) {
                out.push(appended);
            }
        }
        out
    }

    pub fn neighbors(&self, u: &Word) -> Result<Vec<Word>> {
        if u.len() != self.depth {
            return Err(Error::WordLength(self.depth, u.len()));
        }
        Ok(self
            .neighbor_indices(u.index())
            .into_iter()
            .map(|i| Word::from_index(i, self.depth).expect("depth checked"))
            .collect())
    }

    /// BFS distance from `u` to every vertex.
    pub fn distances_from(&self, u: usize) -> Vec<u32> {
        let n = self.vertex_count();
        let mut dist = vec![u32::MAX; n];
        dist[u] = 0;
        let mut frontier = vec![u];
        let mut d = 0u32;
        while !frontier.is_empty() {
            d += 1;
            let mut next = Vec::new();
            for v in frontier {
                for w in self.neighbor_indices(v) {
                    if dist[w] == u32::MAX {
                        dist[w] = d;
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        dist
    }

    pub fn bfs_distance(&self, u: &Word, v: &Word) -> Result<u32> {
        if u.len() != self.depth || v.len() != self.depth {
            let got = if u.len() != self.depth { u.len() } else { v.len() };
            return Err(Error::WordLength(self.depth, got));
        }
        Ok(self.distances_from(u.index())[v.index()])
    }

    /// Full distance matrix, rows in index order. Parallel over sources.
    pub fn all_pairs(&self) -> Vec<Vec<u32>> {
        (0..self.vertex_count())
            .into_par_iter()
            .map(|u| self.distances_from(u))
            .collect()
    }

    /// The longest-common-subword distance formula, evaluated over the
    /// maximal-length placements with 0-based offsets `m` (symbols to the
    /// left of the subword, smaller of the two sides) and `n` (symbols to
    /// the right, likewise):
    /// `min(k, k - l + m + 2n, k - l + n + 2m)`.
    ///
    /// This is a conjectured closed form, not an oracle: it reproduces BFS
    /// exactly for k <= 3 and never undershoots it up to k = 8, but the
    /// "subwords on opposite sides" case can overestimate. `bfs_distance`
    /// is ground truth; `agrees_with_bfs` reports where they part.
    pub fn lcs_distance_formula(&self, u: &Word, v: &Word) -> Result<LcsReport> {
        if u.len() != self.depth || v.len() != self.depth {
            let got = if u.len() != self.depth { u.len() } else { v.len() };
            return Err(Error::WordLength(self.depth, got));
        }
        let k = self.depth;
        if u == v {
            return Ok(LcsReport {
                value: 0,
                lower_bound: 0,
                length: k,
                m: 0,
                n: 0,
            });
        }
        // longest common substring DP over end positions
        let mut longest = 0usize;
        let mut placements: Vec<(usize, usize)> = Vec::new(); // offsets in (u, v)
        let mut prev = vec![0usize; k + 1];
        for i in 1..=k {
            let mut cur = vec![0usize; k + 1];
            for j in 1..=k {
                if u.bit(i - 1) == v.bit(j - 1) {
                    cur[j] = prev[j - 1] + 1;
                    if cur[j] > longest {
                        longest = cur[j];
                        placements.clear();
                    }
                    if cur[j] == longest {
                        placements.push((i - cur[j], j - cur[j]));
                    }
                }
            }
            prev = cur;
        }
        let base = k - longest;
        let mut best = LcsReport {
            value: k as u32,
            lower_bound: base as u32,
            length: longest,
            m: 0,
            n: 0,
        };
        for (mu, mv) in placements {
            let m = mu.min(mv);
            let n = (k - longest - mu).min(k - longest - mv);
            let candidate = (base + m + 2 * n).min(base + n + 2 * m).min(k) as u32;
            if candidate < best.value {
                best = LcsReport {
                    value: candidate,
                    lower_bound: base as u32,
                    length: longest,
                    m,
                    n,
                };
            }
        }
        Ok(best)
    }

    /// Compares the closed form against BFS for one pair.
    pub fn agrees_with_bfs(&self, u: &Word, v: &Word) -> Result<bool> {
        Ok(self.lcs_distance_formula(u, v)?.value == self.bfs_distance(u, v)?)
    }
}

/// Witness data for the longest-common-subword distance formula.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LcsReport {
    pub value: u32,
    /// `k - l`, a true lower bound for the graph distance
    pub lower_bound: u32,
    pub length: usize,
    pub m: usize,
    pub n: usize,
}

/// Distance between eventually periodic points in the shift-orbit metric:
/// the least `m + n` with `sigma^m x = sigma^n y`, or `None` when the points
/// lie in different orbit-closure classes (infinite distance).
pub fn d_infty(x: &TailPoint, y: &TailPoint) -> Option<usize> {
    d_infty_capped(x, y, usize::MAX)
}

/// `d_infty` with a hard cap on the searched `m + n`. The natural window
/// (prefix lengths plus twice the period lcm) is exhaustive on its own; the
/// cap only guards pathological inputs.
pub fn d_infty_capped(x: &TailPoint, y: &TailPoint, cap: usize) -> Option<usize> {
    if !same_class(x, y) {
        return None;
    }
    // after the prefixes are consumed both orbits cycle with period
    // len(period), so a search window of prefix + 2 lcm(periods) is exhaustive
    let l = lcm(x.period().len(), y.period().len());
    let mx = (x.prefix().len() + 2 * l).min(cap);
    let ny = (y.prefix().len() + 2 * l).min(cap);
    let mut best: Option<usize> = None;
    let mut sx = x.clone();
    for m in 0..=mx {
        let mut sy = y.clone();
        for n in 0..=ny {
            if m + n <= cap && best.map(|b| m + n < b).unwrap_or(true) && sx == sy {
                best = Some(m + n);
            }
            sy = sy.shift();
        }
        sx = sx.shift();
    }
    best
}

/// Whether two eventually periodic points share a tail, i.e. have finite
/// `d_infty`. Equivalent to their primitive periods being rotations of each
/// other.
pub fn same_class(x: &TailPoint, y: &TailPoint) -> bool {
    let p = x.period();
    let q = y.period();
    if p.len() != q.len() {
        return false;
    }
    let mut r = q;
    for _ in 0..q.len() {
        if r == p {
            return true;
        }
        r = r.rotate_left();
    }
    false
}

/// The incidence-count gap between two points out to depth `cap`: the largest
/// `N = max_n |ones(x|_n) - ones(y|_n)|`, together with the counting witness
/// `f(w) = #ones(w)` at the maximizing depth. The witness has commutator
/// seminorm at most 1 at every exponent (its backward differences are 0/1)
/// and separates the two truncations by exactly `N`.
#[derive(Debug, Clone, Serialize)]
pub struct IncidenceGap {
    pub gap: usize,
    pub depth: usize,
    /// omitted when the maximizing depth is too deep to tabulate
    pub witness: Option<CylinderFunction>,
}

/// Largest tabulated witness: 2^20 entries.
const WITNESS_DEPTH_CAP: usize = 20;

pub fn incidence_gap(x: &TailPoint, y: &TailPoint, cap: usize) -> IncidenceGap {
    let mut gap = 0usize;
    let mut depth = 1usize;
    for n in 1..=cap {
        let g = x.ones_up_to(n).abs_diff(y.ones_up_to(n));
        if g > gap {
            gap = g;
            depth = n;
        }
    }
    let witness = (depth <= WITNESS_DEPTH_CAP).then(|| {
        let values = Word::iter_all(depth).map(|w| w.ones() as f64).collect();
        CylinderFunction::new(depth, values).expect("depth within table cap")
    });
    IncidenceGap { gap, depth, witness }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbors_of_depth_three_word() {
        let g = WordGraph::new(3).unwrap();
        let u = Word::parse("011").unwrap();
        let ns: Vec<String> = g
            .neighbors(&u)
            .unwrap()
            .iter()
            .map(|w| w.to_string())
            .collect();
        // prepend: 001, 101; append: 110, 111
        for expect in ["001", "101", "110", "111"] {
            assert!(ns.contains(&expect.to_string()), "missing {expect}");
        }
        assert_eq!(ns.len(), 4);
    }

    #[test]
    fn diameter_is_depth() {
        for k in 1..=7 {
            let g = WordGraph::new(k).unwrap();
            let diam = g
                .all_pairs()
                .iter()
                .flat_map(|row| row.iter().copied())
                .max()
                .unwrap();
            assert_eq!(diam as usize, k);
        }
    }

    #[test]
    fn distance_examples() {
        let g = WordGraph::new(4).unwrap();
        let d = |a: &str, b: &str| {
            g.bfs_distance(&Word::parse(a).unwrap(), &Word::parse(b).unwrap())
                .unwrap()
        };
        assert_eq!(d("0110", "0110"), 0);
        assert_eq!(d("0110", "1011"), 1); // prepend 1
        assert_eq!(d("0110", "1100"), 1); // append 0
        assert_eq!(d("0000", "1111"), 4);
    }

    #[test]
    fn lcs_formula_brackets_bfs() {
        // formula is exact through k = 3, and bounded between k - l and k
        // while never undershooting BFS for the depths checked here
        let mut disagreements = 0usize;
        for k in 1..=7 {
            let g = WordGraph::new(k).unwrap();
            let matrix = g.all_pairs();
            for u in Word::iter_all(k) {
                for v in Word::iter_all(k) {
                    let r = g.lcs_distance_formula(&u, &v).unwrap();
                    let d = matrix[u.index()][v.index()];
                    assert!(r.lower_bound <= d, "k={k} u={u} v={v}");
                    assert!(r.value >= d, "k={k} u={u} v={v}: formula undershoots");
                    assert!(r.value <= k as u32);
                    if k <= 3 {
                        assert_eq!(r.value, d, "k={k} u={u} v={v}");
                    } else if r.value != d {
                        disagreements += 1;
                    }
                }
            }
        }
        // the opposite-sides case genuinely disagrees at higher depths
        assert!(disagreements > 0);
    }

    #[test]
    fn lcs_witness_examples() {
        let g = WordGraph::new(4).unwrap();
        let u = Word::parse("0101").unwrap();
        let r = g.lcs_distance_formula(&u, &u).unwrap();
        assert_eq!(r.value, 0);
        assert_eq!(r.length, 4);

        let v = Word::parse("1010").unwrap();
        let r = g.lcs_distance_formula(&u, &v).unwrap();
        assert_eq!(r.length, 3);
        assert_eq!(r.value, 1);

        let zeros = Word::parse("0000").unwrap();
        let ones = Word::parse("1111").unwrap();
        let r = g.lcs_distance_formula(&zeros, &ones).unwrap();
        assert_eq!(r.length, 0);
        assert_eq!(r.value, 4);
    }

    #[test]
    fn truncation_distances_are_monotone() {
        let x = TailPoint::parse("0110", "010").unwrap();
        let y = TailPoint::parse("10", "0110").unwrap();
        let mut prev = 0;
        for k in 1..=8 {
            let g = WordGraph::new(k).unwrap();
            let d = g.bfs_distance(&x.truncate(k), &y.truncate(k)).unwrap();
            assert!(d >= prev, "k = {k}");
            prev = d;
        }
    }

    #[test]
    fn d_infty_examples() {
        // sigma^m x with x = (01)* : distance m + n when tails align
        let x = TailPoint::parse("", "01").unwrap();
        assert_eq!(d_infty(&x, &x), Some(0));
        let y = x.shift();
        assert_eq!(d_infty(&x, &y), Some(1));

        // 0^infty vs 1^infty: different classes
        let zeros = TailPoint::parse("", "0").unwrap();
        let ones = TailPoint::parse("", "1").unwrap();
        assert_eq!(d_infty(&zeros, &ones), None);

        // prefixed points in the same class
        let a = TailPoint::parse("111", "0").unwrap();
        assert_eq!(d_infty(&a, &zeros), Some(3));

        // symmetric
        let b = TailPoint::parse("10", "01").unwrap();
        assert_eq!(d_infty(&x, &b), d_infty(&b, &x));
    }

    #[test]
    fn incidence_gap_grows_for_density_mismatch() {
        // x = (01)*, y = 0^infty: ones(x|_n) ~ n/2, unbounded gap
        let x = TailPoint::parse("", "01").unwrap();
        let y = TailPoint::parse("", "0").unwrap();
        let g = incidence_gap(&x, &y, 40);
        assert_eq!(g.gap, 20);
        // same point: zero gap
        let g = incidence_gap(&x, &x, 40);
        assert_eq!(g.gap, 0);
    }
}
