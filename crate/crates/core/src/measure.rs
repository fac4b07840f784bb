use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tailpoint::TailPoint;
use crate::word::Word;
use crate::MAX_DEPTH;

pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A probability vector over depth-`k` cylinders, indexed by `Word::index`.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct CylinderMeasure {
    depth: usize,
    weights: Vec<f64>,
}

impl CylinderMeasure {
    pub fn new(depth: usize, weights: Vec<f64>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::ZeroDepth);
        }
        if depth > MAX_DEPTH {
            return Err(Error::DepthOverflow(depth));
        }
        if weights.len() != 1 << depth {
            return Err(Error::TableLength {
                depth,
                expected: 1 << depth,
                got: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| **w < 0.0 || !w.is_finite()) {
            return Err(Error::NegativeWeight(*w));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(total));
        }
        Ok(CylinderMeasure { depth, weights })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let m: CylinderMeasure = serde_json::from_str(json)?;
        CylinderMeasure::new(m.depth, m.weights)
    }

    /// The maximal entropy measure at depth `k`: every weight `2^(-k)`.
    pub fn max_entropy(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroDepth);
        }
        if k > MAX_DEPTH {
            return Err(Error::DepthOverflow(k));
        }
        let w = 1.0 / (1u64 << k) as f64;
        CylinderMeasure::new(k, vec![w; 1 << k])
    }

    /// Bernoulli product measure with P(1) = q.
    pub fn bernoulli(k: usize, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::BadStochastic(format!("q = {q} outside [0, 1]")));
        }
        if k == 0 {
            return Err(Error::ZeroDepth);
        }
        if k > MAX_DEPTH {
            return Err(Error::DepthOverflow(k));
        }
        let weights = Word::iter_all(k)
            .map(|w| {
                let ones = w.ones() as i32;
                q.powi(ones) * (1.0 - q).powi(k as i32 - ones)
            })
            .collect();
        CylinderMeasure::new(k, weights)
    }

    /// Stationary Markov measure for a 2x2 row-stochastic matrix `P`.
    pub fn markov(k: usize, p: [[f64; 2]; 2]) -> Result<Self> {
        for row in &p {
            if row.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                return Err(Error::BadStochastic("negative transition entry".into()));
            }
            if (row[0] + row[1] - 1.0).abs() > 1e-12 {
                return Err(Error::BadStochastic(format!(
                    "row sums to {}",
                    row[0] + row[1]
                )));
            }
        }
        if k == 0 {
            return Err(Error::ZeroDepth);
        }
        if k > MAX_DEPTH {
            return Err(Error::DepthOverflow(k));
        }
        // stationary distribution of P
        let denom = p[0][1] + p[1][0];
        let pi = if denom == 0.0 {
            [0.5, 0.5] // both states absorbing; any mixture is stationary
        } else {
            [p[1][0] / denom, p[0][1] / denom]
        };
        let weights = Word::iter_all(k)
            .map(|w| {
                let mut m = pi[w.bit(0) as usize];
                for i in 1..k {
                    m *= p[w.bit(i - 1) as usize][w.bit(i) as usize];
                }
                m
            })
            .collect();
        CylinderMeasure::new(k, weights)
    }

    /// Dirac mass on the depth-`k` truncation of `x`.
    pub fn dirac(x: &TailPoint, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroDepth);
        }
        if k > MAX_DEPTH {
            return Err(Error::DepthOverflow(k));
        }
        let mut weights = vec![0.0; 1 << k];
        weights[x.truncate(k).index()] = 1.0;
        CylinderMeasure::new(k, weights)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, w: &Word) -> f64 {
        debug_assert!(w.len() <= self.depth);
        // cylinder mass: sum over extensions
        let shift = self.depth - w.len();
        let base = w.index() << shift;
        self.weights[base..base + (1 << shift)].iter().sum()
    }

    /// View at depth `m >= depth`, splitting each weight uniformly over the
    /// new trailing coordinates. This is the maximal-entropy extension; it is
    /// exact whenever only depth-`<= depth` cylinder masses are consumed.
    pub fn refine(&self, m: usize) -> Result<Self> {
        if m > MAX_DEPTH {
            return Err(Error::DepthOverflow(m));
        }
        if m < self.depth {
            return Err(Error::InsufficientDepth {
                depth: m,
                need: self.depth,
            });
        }
        let shift = m - self.depth;
        let scale = 1.0 / (1u64 << shift) as f64;
        let weights = (0..1usize << m)
            .map(|i| self.weights[i >> shift] * scale)
            .collect();
        CylinderMeasure::new(m, weights)
    }

    /// Kolmogorov-consistent coarsening to depth `m <= depth`.
    pub fn coarsen(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroDepth);
        }
        if m > self.depth {
            return Err(Error::InsufficientDepth {
                depth: self.depth,
                need: m,
            });
        }
        let shift = self.depth - m;
        let mut weights = vec![0.0; 1 << m];
        for (i, w) in self.weights.iter().enumerate() {
            weights[i >> shift] += w;
        }
        CylinderMeasure::new(m, weights)
    }

    /// Push-forward through the shift: weight(v) = mu([0v]) + mu([1v]).
    pub fn pushforward_shift(&self) -> Result<Self> {
        let k = self.depth;
        if k < 2 {
            return Err(Error::DepthUnderflow);
        }
        let half = 1usize << (k - 1);
        let weights = (0..half)
            .map(|v| self.weights[v] + self.weights[half + v])
            .collect();
        CylinderMeasure::new(k - 1, weights)
    }
}
