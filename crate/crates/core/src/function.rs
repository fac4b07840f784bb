use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{Exp, Exponents};
use crate::measure::CylinderMeasure;
use crate::word::Word;
use crate::MAX_DEPTH;

fn default_order() -> String {
    "msb-first".to_string()
}

/// A locally constant real function of depth `k`, stored as a dense table of
/// length `2^k` indexed by `Word::index` (msb-first).
///
/// A depth-0 (constant) function is represented as a depth-1 table with equal
/// entries, so there is no empty-word special case.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct CylinderFunction {
    depth: usize,
    values: Vec<f64>,
    #[serde(default = "default_order")]
    order: String,
}

impl CylinderFunction {
    pub fn new(depth: usize, values: Vec<f64>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::ZeroDepth);
        }
        if depth > MAX_DEPTH {
            return Err(Error::DepthOverflow(depth));
        }
        if values.len() != 1 << depth {
            return Err(Error::TableLength {
                depth,
                expected: 1 << depth,
                got: values.len(),
            });
        }
        Ok(CylinderFunction {
            depth,
            values,
            order: default_order(),
        })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let f: CylinderFunction = serde_json::from_str(json)?;
        if f.order != "msb-first" {
            return Err(Error::BadWord(format!("unsupported table order {:?}", f.order)));
        }
        CylinderFunction::new(f.depth, f.values)
    }

    pub fn constant(c: f64) -> Self {
        CylinderFunction::new(1, vec![c, c]).expect("depth 1 is valid")
    }

    /// The indicator chi_[w] of the cylinder [w].
    pub fn indicator(w: &Word) -> Self {
        let mut values = vec![0.0; 1 << w.len()];
        values[w.index()] = 1.0;
        CylinderFunction::new(w.len(), values).expect("word length is a valid depth")
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value on the cylinder [w]; requires `|w| >= depth`.
    pub fn eval_word(&self, w: &Word) -> f64 {
        debug_assert!(w.len() >= self.depth);
        self.values[w.index() >> (w.len() - self.depth)]
    }

    /// Same table viewed at depth `m >= depth`; evaluations are unchanged.
    pub fn lift(&self, m: usize) -> Result<Self> {
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
        let values = (0..1usize << m).map(|i| self.values[i >> shift]).collect();
        CylinderFunction::new(m, values)
    }

    /// Koopman operator: `K f = f o sigma`, depth `k -> k+1`.
    pub fn koopman(&self) -> Result<Self> {
        let k = self.depth;
        if k + 1 > MAX_DEPTH {
            return Err(Error::DepthOverflow(k + 1));
        }
        let mask = (1usize << k) - 1;
        let values = (0..1usize << (k + 1)).map(|i| self.values[i & mask]).collect();
        CylinderFunction::new(k + 1, values)
    }

    /// Ruelle operator: `(L f)(v) = (f(0v) + f(1v)) / 2`, depth `k -> max(k-1, 1)`.
    pub fn ruelle(&self) -> Self {
        let k = self.depth;
        if k == 1 {
            // f depends on the first coordinate only, so L f is constant.
            return CylinderFunction::constant(0.5 * (self.values[0] + self.values[1]));
        }
        let half = 1usize << (k - 1);
        let values = (0..half)
            .map(|v| 0.5 * (self.values[v] + self.values[half + v]))
            .collect();
        CylinderFunction::new(k - 1, values).expect("k-1 >= 1")
    }

    /// Discrete-time derivative `f o sigma - f`, depth `k -> k+1`.
    pub fn derivative(&self) -> Result<Self> {
        let k = self.depth;
        if k + 1 > MAX_DEPTH {
            return Err(Error::DepthOverflow(k + 1));
        }
        let mask = (1usize << k) - 1;
        let values = (0..1usize << (k + 1))
            .map(|i| self.values[i & mask] - self.values[i >> 1])
            .collect();
        CylinderFunction::new(k + 1, values)
    }

    /// Conditional expectation `E_n = K^n L^n`: averages over the first `n`
    /// coordinates and recomposes with `sigma^n`. Depth is preserved.
    pub fn conditional_expectation(&self, n: usize) -> Result<Self> {
        let k = self.depth;
        if n > k {
            return Err(Error::LevelTooDeep { n, depth: k });
        }
        if n == 0 {
            return Ok(self.clone());
        }
        let tail = k - n;
        let tail_mask = (1usize << tail) - 1;
        let scale = 1.0 / (1u64 << n) as f64;
        let values = (0..1usize << k)
            .map(|i| {
                let t = i & tail_mask;
                (0..1usize << n)
                    .map(|u| self.values[(u << tail) | t])
                    .sum::<f64>()
                    * scale
            })
            .collect();
        CylinderFunction::new(k, values)
    }

    pub fn integrate(&self, mu: &CylinderMeasure) -> f64 {
        let depth = self.depth.max(mu.depth());
        let f = self.lift(depth).expect("common depth below cap");
        let m = mu.refine(depth).expect("common depth below cap");
        f.values
            .iter()
            .zip(m.weights())
            .map(|(v, w)| v * w)
            .sum()
    }

    /// Weighted `L^p(mu)` norm; for `p = inf` the essential sup over words of
    /// positive measure.
    pub fn lp_norm(&self, mu: &CylinderMeasure, exps: &Exponents) -> f64 {
        let depth = self.depth.max(mu.depth());
        let f = self.lift(depth).expect("common depth below cap");
        let m = mu.refine(depth).expect("common depth below cap");
        match exps.p {
            Exp::Infinity => f
                .values
                .iter()
                .zip(m.weights())
                .filter(|(_, w)| **w > 0.0)
                .map(|(v, _)| v.abs())
                .fold(0.0, f64::max),
            Exp::Finite(p) => f
                .values
                .iter()
                .zip(m.weights())
                .map(|(v, w)| v.abs().powf(p) * w)
                .sum::<f64>()
                .powf(1.0 / p),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: f64) -> Self {
        let values = self.values.iter().map(|v| c * v).collect();
        CylinderFunction::new(self.depth, values).expect("same shape")
    }

    pub fn add(&self, other: &CylinderFunction) -> Result<Self> {
        let depth = self.depth.max(other.depth);
        let a = self.lift(depth)?;
        let b = other.lift(depth)?;
        let values = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
        CylinderFunction::new(depth, values)
    }

    pub fn sub(&self, other: &CylinderFunction) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chi(s: &str) -> CylinderFunction {
        CylinderFunction::indicator(&Word::parse(s).unwrap())
    }

    #[test]
    fn koopman_of_chi1() {
        // chi_[1] o sigma is 1 on [01], [11], 0 elsewhere.
        let f = chi("1").koopman().unwrap();
        assert_eq!(f.depth(), 2);
        assert_eq!(f.values(), &[0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn koopman_fixes_constants() {
        let f = CylinderFunction::constant(1.0).koopman().unwrap();
        assert!(f.values().iter().all(|v| *v == 1.0));
    }

    #[test]
    fn koopman_of_depth2_example() {
        // f = 2 chi_01 + 4 chi_11 + 2 chi_10
        let f = CylinderFunction::new(2, vec![0.0, 2.0, 2.0, 4.0]).unwrap();
        let kf = f.koopman().unwrap();
        // (f o sigma)(w1 w2 w3) = f(w2 w3)
        let expect: Vec<f64> = (0..8).map(|i| f.values()[i & 3]).collect();
        assert_eq!(kf.values(), &expect[..]);
        assert_eq!(kf.values(), &[0.0, 2.0, 2.0, 4.0, 0.0, 2.0, 2.0, 4.0]);
    }

    #[test]
    fn ruelle_of_chi11() {
        let lf = chi("11").ruelle();
        assert_eq!(lf.depth(), 1);
        assert_eq!(lf.values(), &[0.0, 0.5]);
    }

    #[test]
    fn ruelle_fixes_constants() {
        let lf = CylinderFunction::constant(1.0).ruelle();
        assert_eq!(lf.values(), &[1.0, 1.0]);
    }

    #[test]
    fn ruelle_inverts_koopman() {
        let f = CylinderFunction::new(3, (0..8).map(|i| (i * i) as f64).collect()).unwrap();
        let back = f.koopman().unwrap().ruelle();
        assert_eq!(back, f);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let d = CylinderFunction::constant(3.5).derivative().unwrap();
        assert!(d.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn conditional_expectation_basics() {
        // n=1: K L chi_[1] = K(1/2) = 1/2
        let e = chi("1").conditional_expectation(1).unwrap();
        assert_eq!(e.values(), &[0.5, 0.5]);

        // n=0 is the identity
        let f = CylinderFunction::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.conditional_expectation(0).unwrap(), f);

        // matches K^n L^n computed through the operators themselves
        let f = CylinderFunction::new(3, vec![1.0, -2.0, 0.5, 4.0, 0.0, 3.0, -1.0, 2.0]).unwrap();
        let via_ops = f.ruelle().ruelle().koopman().unwrap().koopman().unwrap();
        let e2 = f.conditional_expectation(2).unwrap();
        for (a, b) in e2.values().iter().zip(via_ops.lift(3).unwrap().values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn conditional_expectation_is_idempotent() {
        let f = CylinderFunction::new(5, (0..32).map(|i| ((i * 37) % 11) as f64).collect()).unwrap();
        let once = f.conditional_expectation(2).unwrap();
        let twice = once.conditional_expectation(2).unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn lift_preserves_evaluations() {
        let f = CylinderFunction::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let g = f.lift(5).unwrap();
        for w in Word::iter_all(5) {
            assert_eq!(f.eval_word(&w), g.eval_word(&w));
        }
    }

    #[test]
    fn depth_cap_is_enforced() {
        let f = CylinderFunction::constant(0.0);
        assert!(matches!(f.lift(MAX_DEPTH + 1), Err(Error::DepthOverflow(_))));
        assert!(matches!(
            CylinderFunction::new(MAX_DEPTH + 1, vec![]),
            Err(Error::DepthOverflow(_))
        ));
    }

    #[test]
    fn lp_norms_of_cylinders() {
        let mu = CylinderMeasure::max_entropy(3).unwrap();
        for s in ["1", "01", "110"] {
            let f = chi(s);
            for p in [1.0, 2.0, 3.0] {
                let e = Exponents::new(p).unwrap();
                let expect = 2f64.powf(-(s.len() as f64) / p);
                assert!((f.lp_norm(&mu, &e) - expect).abs() < 1e-14);
            }
            let e = Exponents::infinity();
            assert!((f.lp_norm(&mu, &e) - 1.0).abs() < 1e-14);
        }
        let one = CylinderFunction::constant(1.0);
        for p in [1.0, 2.0, f64::INFINITY] {
            let e = Exponents::new(p).unwrap();
            assert!((one.lp_norm(&mu, &e) - 1.0).abs() < 1e-14);
        }
    }
}
