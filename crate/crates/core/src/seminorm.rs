//! Closed-form commutator seminorms, the inequality chains around them, and
//! exact induced operator norms of finite-depth matrices.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{Exp, Exponents};
use crate::function::CylinderFunction;
use crate::measure::CylinderMeasure;
use crate::word::Word;

/// The lambda-power mean of the two backward differences at one word.
fn lambda_mean(a: f64, b: f64, lambda: Exp) -> f64 {
    match lambda {
        Exp::Infinity => a.max(b),
        Exp::Finite(l) => (0.5 * a.powf(l) + 0.5 * b.powf(l)).powf(1.0 / l),
    }
}

/// The two backward differences `g_i(u) = f(u) - f(i u_1 .. u_{k-1})`.
fn backward_differences(f: &CylinderFunction, u: &Word) -> (f64, f64) {
    let fu = f.values()[u.index()];
    let head = u.drop_last();
    let g0 = fu - f.values()[head.prepend(0).expect("same length").index()];
    let g1 = fu - f.values()[head.prepend(1).expect("same length").index()];
    (g0, g1)
}

/// Kolmogorov means of the two backward differences, each taken sup over all
/// words. The listed order is nondecreasing and brackets the seminorm.
#[derive(Clone, Debug, Serialize)]
pub struct BoundsChain {
    pub min: f64,
    pub harmonic: f64,
    pub geometric: f64,
    pub arithmetic: f64,
    pub quadratic: f64,
    /// `|f - Lf|_inf`, the lower end of the sandwich.
    pub f_minus_lf_sup: f64,
    /// `|Kf - f|_inf`, the sup norm of the discrete derivative.
    pub derivative_sup: f64,
}

impl BoundsChain {
    pub fn as_ordered(&self) -> [f64; 5] {
        [
            self.min,
            self.harmonic,
            self.geometric,
            self.arithmetic,
            self.quadratic,
        ]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeminormReport {
    pub value: f64,
    pub argmax_word: String,
    pub lambda: Exp,
    pub bounds: BoundsChain,
}

/// `|| [D_p, pi(M_f)] ||` evaluated in closed form: the sup over depth-k
/// words of the lambda-mean of the two backward differences.
pub fn commutator_seminorm(f: &CylinderFunction, p: &Exponents) -> SeminormReport {
    let k = f.depth();
    let mut value = f64::NEG_INFINITY;
    let mut argmax = Word::from_index(0, k).expect("depth is valid");
    let mut chain = BoundsChain {
        min: 0.0,
        harmonic: 0.0,
        geometric: 0.0,
        arithmetic: 0.0,
        quadratic: 0.0,
        f_minus_lf_sup: 0.0,
        derivative_sup: 0.0,
    };
    for u in Word::iter_all(k) {
        let (g0, g1) = backward_differences(f, &u);
        let (a, b) = (g0.abs(), g1.abs());
        let m = lambda_mean(a, b, p.lambda);
        // ties broken by smallest word index; iteration order is index order
        if m > value {
            value = m;
            argmax = u;
        }
        chain.min = chain.min.max(a.min(b));
        chain.harmonic = chain.harmonic.max(if a > 0.0 && b > 0.0 {
            2.0 / (1.0 / a + 1.0 / b)
        } else {
            0.0
        });
        chain.geometric = chain.geometric.max((a * b).sqrt());
        chain.arithmetic = chain.arithmetic.max(0.5 * (a + b));
        chain.quadratic = chain.quadratic.max((0.5 * (a * a + b * b)).sqrt());
        chain.f_minus_lf_sup = chain.f_minus_lf_sup.max(0.5 * (g0 + g1).abs());
        chain.derivative_sup = chain.derivative_sup.max(a.max(b));
    }
    SeminormReport {
        value,
        argmax_word: argmax.to_string(),
        lambda: p.lambda,
        bounds: chain,
    }
}

/// The sandwich `|Kf - f|_inf >= seminorm >= |f - Lf|_inf` together with the
/// Kolmogorov-means chain.
#[derive(Clone, Debug, Serialize)]
pub struct SeminormBounds {
    pub upper: f64,
    pub seminorm: f64,
    pub lower: f64,
    pub chain: BoundsChain,
}

pub fn seminorm_bounds(f: &CylinderFunction, p: &Exponents) -> SeminormBounds {
    let report = commutator_seminorm(f, p);
    SeminormBounds {
        upper: report.bounds.derivative_sup,
        seminorm: report.value,
        lower: report.bounds.f_minus_lf_sup,
        chain: report.bounds,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Admissibility {
    /// seminorm <= 1 (+ slack)
    pub admissible: bool,
    /// 1 - seminorm
    pub margin: f64,
    /// `|f o sigma - f|_inf <= 1` (sufficient condition)
    pub sufficient_holds: bool,
    /// `|f o sigma - f|_inf <= 2^(1/lambda)` (necessary condition)
    pub necessary_holds: bool,
}

pub const ADMISSIBLE_SLACK: f64 = 1e-12;

pub fn check_admissible(f: &CylinderFunction, p: &Exponents) -> Admissibility {
    let report = commutator_seminorm(f, p);
    let deriv_sup = report.bounds.derivative_sup;
    Admissibility {
        admissible: report.value <= 1.0 + ADMISSIBLE_SLACK,
        margin: 1.0 - report.value,
        sufficient_holds: deriv_sup <= 1.0 + ADMISSIBLE_SLACK,
        necessary_holds: deriv_sup <= p.two_pow_inv_lambda() + ADMISSIBLE_SLACK,
    }
}

/// An induced operator norm: exact for p in {1, 2, inf}, otherwise a
/// certified interval (lower from test vectors, upper from interpolation).
#[derive(Clone, Copy, Debug, Serialize)]
pub enum NormResult {
    Exact(f64),
    Interval { lo: f64, hi: f64 },
}

impl NormResult {
    pub fn upper(&self) -> f64 {
        match self {
            NormResult::Exact(v) => *v,
            NormResult::Interval { hi, .. } => *hi,
        }
    }

    pub fn lower(&self) -> f64 {
        match self {
            NormResult::Exact(v) => *v,
            NormResult::Interval { lo, .. } => *lo,
        }
    }

    /// Midpoint for reporting.
    pub fn value(&self) -> f64 {
        match self {
            NormResult::Exact(v) => *v,
            NormResult::Interval { lo, hi } => 0.5 * (lo + hi),
        }
    }
}

fn weighted_p1_norm(t: &DMatrix<f64>, cod: &[f64], dom: &[f64]) -> f64 {
    (0..t.ncols())
        .map(|j| {
            (0..t.nrows()).map(|i| cod[i] * t[(i, j)].abs()).sum::<f64>() / dom[j]
        })
        .fold(0.0, f64::max)
}

fn sup_norm_rows(t: &DMatrix<f64>) -> f64 {
    (0..t.nrows())
        .map(|i| (0..t.ncols()).map(|j| t[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn weighted_p2_norm(t: &DMatrix<f64>, cod: &[f64], dom: &[f64]) -> f64 {
    // similarity to the unweighted l2 problem: diag(sqrt(cod)) T diag(1/sqrt(dom))
    let mut s = t.clone();
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            s[(i, j)] *= (cod[i] / dom[j]).sqrt();
        }
    }
    s.singular_values().max()
}

fn lp_vec_norm(v: &[f64], weights: &[f64], p: f64) -> f64 {
    v.iter()
        .zip(weights)
        .map(|(x, w)| x.abs().powf(p) * w)
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Weighted induced norm of a rectangular matrix `T` mapping tables weighted
/// by `dom` into tables weighted by `cod`.
pub fn induced_norm_weighted(
    t: &DMatrix<f64>,
    p: &Exponents,
    dom: &CylinderMeasure,
    cod: &CylinderMeasure,
) -> Result<NormResult> {
    if t.nrows() != cod.weights().len() || t.ncols() != dom.weights().len() {
        return Err(Error::TableLength {
            depth: cod.depth(),
            expected: cod.weights().len(),
            got: t.nrows(),
        });
    }
    if dom.weights().iter().any(|w| *w <= 0.0) || cod.weights().iter().any(|w| *w <= 0.0) {
        return Err(Error::NegativeWeight(0.0));
    }
    let dom_w = dom.weights();
    let cod_w = cod.weights();
    match p.p {
        Exp::Finite(v) if v == 1.0 => Ok(NormResult::Exact(weighted_p1_norm(t, cod_w, dom_w))),
        Exp::Finite(v) if v == 2.0 => Ok(NormResult::Exact(weighted_p2_norm(t, cod_w, dom_w))),
        Exp::Infinity => Ok(NormResult::Exact(sup_norm_rows(t))),
        Exp::Finite(v) => {
            let n1 = weighted_p1_norm(t, cod_w, dom_w);
            let ninf = sup_norm_rows(t);
            // Riesz-Thorin: ||T||_p <= ||T||_1^(1/p) ||T||_inf^(1-1/p)
            let hi = n1.powf(1.0 / v) * ninf.powf(1.0 - 1.0 / v);
            let mut lo: f64 = 0.0;
            let mut probe = |x: &[f64]| {
                let nx = lp_vec_norm(x, dom_w, v);
                if nx > 0.0 {
                    let tx: Vec<f64> = (0..t.nrows())
                        .map(|i| (0..t.ncols()).map(|j| t[(i, j)] * x[j]).sum())
                        .collect();
                    lo = lo.max(lp_vec_norm(&tx, cod_w, v) / nx);
                }
            };
            for j in 0..t.ncols() {
                let mut e = vec![0.0; t.ncols()];
                e[j] = 1.0;
                probe(&e);
            }
            probe(&vec![1.0; t.ncols()]);
            Ok(NormResult::Interval { lo, hi })
        }
    }
}

/// Square variant with a single weighting measure on both sides.
pub fn induced_norm(
    t: &DMatrix<f64>,
    p: &Exponents,
    mu: &CylinderMeasure,
) -> Result<NormResult> {
    if t.nrows() != t.ncols() {
        return Err(Error::NotSquare {
            rows: t.nrows(),
            cols: t.ncols(),
        });
    }
    induced_norm_weighted(t, p, mu, mu)
}

/// Matrix of a linear map from depth-`dom` tables to depth-`cod` tables,
/// built column by column from basis indicators.
pub fn table_operator_matrix<F>(dom_depth: usize, cod_depth: usize, apply: F) -> DMatrix<f64>
where
    F: Fn(&CylinderFunction) -> CylinderFunction,
{
    let ncols = 1usize << dom_depth;
    let nrows = 1usize << cod_depth;
    let mut m = DMatrix::zeros(nrows, ncols);
    for j in 0..ncols {
        let mut values = vec![0.0; ncols];
        values[j] = 1.0;
        let e = CylinderFunction::new(dom_depth, values).expect("valid basis table");
        let out = apply(&e);
        assert_eq!(out.depth(), cod_depth, "operator changed the expected depth");
        for i in 0..nrows {
            m[(i, j)] = out.values()[i];
        }
    }
    m
}

/// Matrix of `M_w K` from depth-`(k-1)` tables into depth-`k` tables, where
/// `w` has depth `k`.
pub fn weighted_koopman_matrix(w: &CylinderFunction) -> DMatrix<f64> {
    let k = w.depth();
    table_operator_matrix(k - 1, k, |f| {
        let kf = f.koopman().expect("depth below cap");
        let values = kf
            .values()
            .iter()
            .zip(w.values())
            .map(|(a, b)| a * b)
            .collect();
        CylinderFunction::new(k, values).expect("same shape")
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct KlCommutatorReport {
    pub n: usize,
    pub depth: usize,
    pub lambda: Exp,
    /// norm of `K (E_n - E_{n-1})`
    pub upper_block: NormResult,
    /// norm of `(E_{n-1} - E_n) L`
    pub lower_block: NormResult,
    /// max of the two block norms, the candidate commutator norm
    pub value: f64,
}

/// Builds the two off-diagonal blocks of `[D_p, pi(K^n L^n)]` as matrices on
/// finite-depth tables and returns their induced norms.
pub fn kl_commutator_norm(n: usize, p: &Exponents, depth: usize) -> Result<KlCommutatorReport> {
    if n == 0 || depth < n + 2 {
        return Err(Error::InsufficientDepth {
            depth,
            need: n + 2,
        });
    }
    let proj_diff = |f: &CylinderFunction| -> CylinderFunction {
        let en = f.conditional_expectation(n).expect("depth checked");
        let enm1 = f.conditional_expectation(n - 1).expect("depth checked");
        en.sub(&enm1).expect("same depth")
    };
    // K (E_n - E_{n-1}) : depth-(d-1) tables -> depth-d tables
    let upper = table_operator_matrix(depth - 1, depth, |f| {
        proj_diff(f).koopman().expect("depth below cap")
    });
    // (E_{n-1} - E_n) L : depth-d tables -> depth-(d-1) tables
    let lower = table_operator_matrix(depth, depth - 1, |f| proj_diff(&f.ruelle()).scale(-1.0));
    let mu_hi = CylinderMeasure::max_entropy(depth)?;
    let mu_lo = CylinderMeasure::max_entropy(depth - 1)?;
    let upper_block = induced_norm_weighted(&upper, p, &mu_lo, &mu_hi)?;
    let lower_block = induced_norm_weighted(&lower, p, &mu_hi, &mu_lo)?;
    Ok(KlCommutatorReport {
        n,
        depth,
        lambda: p.lambda,
        value: upper_block.value().max(lower_block.value()),
        upper_block,
        lower_block,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chi(s: &str) -> CylinderFunction {
        CylinderFunction::indicator(&Word::parse(s).unwrap())
    }

    #[test]
    fn worked_first_example_at_p2() {
        // f = 2 chi_01 + 4 chi_11 + 2 chi_10, p = 2 -> sqrt(2)
        let f = CylinderFunction::new(2, vec![0.0, 2.0, 2.0, 4.0]).unwrap();
        let p = Exponents::new(2.0).unwrap();
        let report = commutator_seminorm(&f, &p);
        assert!((report.value - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn constant_has_zero_seminorm() {
        let f = CylinderFunction::constant(7.0);
        for p in [1.0, 2.0, 3.0] {
            let report = commutator_seminorm(&f, &Exponents::new(p).unwrap());
            assert_eq!(report.value, 0.0);
        }
    }

    #[test]
    fn chi1_seminorm_is_two_to_minus_inv_lambda() {
        let f = chi("1");
        for p in [1.0, 1.5, 2.0, 3.0, 5.0] {
            let e = Exponents::new(p).unwrap();
            let report = commutator_seminorm(&f, &e);
            let expect = match e.lambda {
                Exp::Finite(l) => 2f64.powf(-1.0 / l),
                Exp::Infinity => 1.0,
            };
            assert!((report.value - expect).abs() < 1e-14, "p = {p}");
        }
    }

    #[test]
    fn admissibility_conditions() {
        // |f o sigma - f|_inf <= 1 is sufficient
        let f = chi("1").scale(0.9);
        let p = Exponents::new(2.0).unwrap();
        let a = check_admissible(&f, &p);
        assert!(a.sufficient_holds && a.admissible && a.necessary_holds);

        // f = 2 chi_[1] at p=2: derivative sup 2 > sqrt(2), not admissible
        let f = chi("1").scale(2.0);
        let a = check_admissible(&f, &p);
        assert!(!a.admissible && !a.necessary_holds);
    }

    #[test]
    fn identity_norm_is_one() {
        let mu = CylinderMeasure::bernoulli(3, 0.3).unwrap();
        let id = DMatrix::identity(8, 8);
        for p in [1.0, 2.0, 2.5, f64::INFINITY] {
            let r = induced_norm(&id, &Exponents::new(p).unwrap(), &mu).unwrap();
            assert!(r.lower() <= 1.0 + 1e-12 && 1.0 <= r.upper() + 1e-12);
            if p == 1.0 || p == 2.0 || p.is_infinite() {
                assert!((r.value() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_multiplication_norm_is_sup() {
        let f = CylinderFunction::new(3, vec![0.5, -3.0, 1.0, 2.0, 0.0, -1.0, 2.5, 1.5]).unwrap();
        let mu = CylinderMeasure::max_entropy(3).unwrap();
        let mut d = DMatrix::zeros(8, 8);
        for i in 0..8 {
            d[(i, i)] = f.values()[i];
        }
        for p in [1.0, 2.0, f64::INFINITY] {
            let r = induced_norm(&d, &Exponents::new(p).unwrap(), &mu).unwrap();
            assert!((r.value() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_expectation_is_contractive_at_p2() {
        // matrix of K^1 L^1 at depth 3, p = 2 -> exactly 1
        let m = table_operator_matrix(3, 3, |f| f.conditional_expectation(1).unwrap());
        let mu = CylinderMeasure::max_entropy(3).unwrap();
        let r = induced_norm(&m, &Exponents::new(2.0).unwrap(), &mu).unwrap();
        assert!((r.value() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kl_commutator_norm_is_one_at_p2() {
        let p = Exponents::new(2.0).unwrap();
        for (n, depth) in [(1, 4), (2, 5)] {
            let r = kl_commutator_norm(n, &p, depth).unwrap();
            assert!((r.value - 1.0).abs() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn kl_commutator_insufficient_depth() {
        let p = Exponents::new(2.0).unwrap();
        assert!(kl_commutator_norm(3, &p, 4).is_err());
    }

    #[test]
    fn seminorm_matches_weighted_koopman_p2_norm() {
        let f = CylinderFunction::new(2, vec![0.0, 2.0, 2.0, 4.0]).unwrap();
        let p = Exponents::new(2.0).unwrap();
        let w = f.derivative().unwrap();
        let m = weighted_koopman_matrix(&w);
        let r = induced_norm_weighted(
            &m,
            &p,
            &CylinderMeasure::max_entropy(w.depth() - 1).unwrap(),
            &CylinderMeasure::max_entropy(w.depth()).unwrap(),
        )
        .unwrap();
        let s = commutator_seminorm(&f, &p);
        assert!((r.value() - s.value).abs() < 1e-12);
    }

    #[test]
    fn equality_case_for_shift_composed_functions() {
        // f = g o sigma: the sandwich collapses to equalities
        let g = CylinderFunction::new(3, vec![0.3, -1.0, 2.0, 0.7, -0.2, 1.4, 0.0, 0.9]).unwrap();
        let f = g.koopman().unwrap();
        let b = seminorm_bounds(&f, &Exponents::new(3.0).unwrap());
        assert!((b.upper - b.seminorm).abs() < 1e-12);
        assert!((b.seminorm - b.lower).abs() < 1e-12);
    }
}
