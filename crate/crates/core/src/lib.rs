//! Finite-depth computations on the full 2-shift: cylinder functions and
//! measures, Koopman/Ruelle operators, commutator seminorms, spectral-radius
//! bounds for weighted Koopman operators, word-graph metrics, optimal
//! transport, and Connes-type distance brackets.
//!
//! Everything is indexed by binary words in msb-first order: the word
//! `w_1 w_2 ... w_k` lives at index `sum w_i 2^(k-i)` of a table of length
//! `2^k`.

pub mod connes;
pub mod error;
pub mod exponents;
pub mod function;
pub mod measure;
pub mod seminorm;
pub mod spectral;
pub mod tailpoint;
pub mod transport;
pub mod word;
pub mod wordgraph;

pub use error::{Error, Result};
pub use exponents::{Exp, Exponents};
pub use function::CylinderFunction;
pub use measure::CylinderMeasure;
pub use tailpoint::TailPoint;
pub use word::Word;

/// Hard cap on cylinder depth; tables have `2^depth` entries.
pub const MAX_DEPTH: usize = 28;

/// Reads `RKLAB_THREADS` and configures the global rayon pool once.
/// Unset or invalid values leave rayon's default (all cores).
pub fn init_threads() {
    if let Ok(v) = std::env::var("RKLAB_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                // ignore the error if a pool was already built
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
