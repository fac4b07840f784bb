use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::word::Word;

/// An eventually periodic point `x = prefix . period . period . ...` of the
/// full 2-shift, the finite representation of a pure state.
///
/// Canonical form: the period is primitive (not a proper power) and the
/// prefix is shortest possible, so structural equality is point equality.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct TailPoint {
    prefix: Word,
    period: Word,
}

#[derive(Serialize, Deserialize)]
struct TailPointRepr {
    #[serde(default)]
    prefix: String,
    period: String,
}

impl TailPoint {
    pub fn new(prefix: Word, period: Word) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::EmptyPeriod);
        }
        Ok(TailPoint { prefix, period }.canonicalize())
    }

    pub fn parse(prefix: &str, period: &str) -> Result<Self> {
        TailPoint::new(Word::parse(prefix)?, Word::parse(period)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let repr: TailPointRepr = serde_json::from_str(json)?;
        TailPoint::parse(&repr.prefix, &repr.period)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&TailPointRepr {
            prefix: self.prefix.to_string(),
            period: self.period.to_string(),
        })
        .expect("plain strings serialize")
    }

    pub fn prefix(&self) -> Word {
        self.prefix
    }

    pub fn period(&self) -> Word {
        self.period
    }

    fn canonicalize(mut self) -> Self {
        // reduce the period to its primitive root
        let r = self.period.len();
        'outer: for d in 1..r {
            if r % d != 0 {
                continue;
            }
            let root = self.period.prefix(d);
            for start in (d..r).step_by(d) {
                for i in 0..d {
                    if self.period.bit(start + i) != root.bit(i) {
                        continue 'outer;
                    }
                }
            }
            self.period = root;
            break;
        }
        // absorb the prefix tail into the period by rotating right
        while !self.prefix.is_empty() && self.prefix.last() == self.period.last() {
            self.prefix = self.prefix.drop_last();
            let last = self.period.last();
            self.period = self
                .period
                .drop_last()
                .prepend(last)
                .expect("length unchanged");
        }
        self
    }

    /// `x_i`, 0-based.
    pub fn coordinate(&self, i: usize) -> u8 {
        if i < self.prefix.len() {
            self.prefix.bit(i)
        } else {
            self.period.bit((i - self.prefix.len()) % self.period.len())
        }
    }

    /// `x|_k`, the word of the first `k` coordinates.
    pub fn truncate(&self, k: usize) -> Word {
        let mut w = Word::empty();
        for i in 0..k {
            w = w.append(self.coordinate(i)).expect("k is a valid length");
        }
        w
    }

    /// `sigma(x)`; stays eventually periodic.
    pub fn shift(&self) -> TailPoint {
        if self.prefix.is_empty() {
            TailPoint {
                prefix: Word::empty(),
                period: self.period.rotate_left(),
            }
        } else {
            TailPoint {
                prefix: self.prefix.drop_first(),
                period: self.period,
            }
        }
        .canonicalize()
    }

    pub fn shift_n(&self, n: usize) -> TailPoint {
        let mut x = self.clone();
        for _ in 0..n {
            x = x.shift();
        }
        x
    }

    pub fn ones_up_to(&self, n: usize) -> usize {
        (0..n).map(|i| self.coordinate(i) as usize).sum()
    }
}

impl fmt::Display for TailPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})*", self.prefix, self.period)
    }
}
