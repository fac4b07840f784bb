use std::fmt;

use crate::error::{Error, Result};
use crate::MAX_DEPTH;

/// A finite binary word `w_1 w_2 ... w_k`.
///
/// Bits are packed with `w_1` most significant, so `index(w) = sum w_i 2^(k-i)`
/// is a bijection between words of length `k` and `0..2^k`. This is the same
/// convention that identifies a word with the dyadic rational `sum w_i 2^(-i)`.
///
/// Length 0 is allowed only as the empty prefix of a tail point; every table
/// indexed by words uses lengths in `1..=MAX_DEPTH`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    bits: u32,
    len: u8,
}

impl Word {
    pub fn empty() -> Self {
        Word { bits: 0, len: 0 }
    }

    pub fn from_index(index: usize, len: usize) -> Result<Self> {
        if len > MAX_DEPTH {
            return Err(Error::DepthOverflow(len));
        }
        if index >= (1usize << len) {
            return Err(Error::BadWord(format!("index {index} out of range for length {len}")));
        }
        Ok(Word {
            bits: index as u32,
            len: len as u8,
        })
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s.len() > MAX_DEPTH {
            return Err(Error::DepthOverflow(s.len()));
        }
        let mut bits = 0u32;
        for c in s.chars() {
            bits = (bits << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::BadWord(s.to_string())),
                };
        }
        Ok(Word {
            bits,
            len: s.len() as u8,
        })
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn index(&self) -> usize {
        self.bits as usize
    }

    /// `w_i` for 0-based `i < len`.
    pub fn bit(&self, i: usize) -> u8 {
        debug_assert!(i < self.len());
        ((self.bits >> (self.len() - 1 - i)) & 1) as u8
    }

    pub fn first(&self) -> u8 {
        self.bit(0)
    }

    pub fn last(&self) -> u8 {
        (self.bits & 1) as u8
    }

    /// `w_2 ... w_k`.
    pub fn drop_first(&self) -> Word {
        debug_assert!(self.len > 0);
        Word {
            bits: self.bits & !(1 << (self.len - 1)),
            len: self.len - 1,
        }
    }

    /// `w_1 ... w_{k-1}`.
    pub fn drop_last(&self) -> Word {
        debug_assert!(self.len > 0);
        Word {
            bits: self.bits >> 1,
            len: self.len - 1,
        }
    }

    /// `b w_1 ... w_k`.
    pub fn prepend(&self, b: u8) -> Result<Word> {
        if self.len() + 1 > MAX_DEPTH {
            return Err(Error::DepthOverflow(self.len() + 1));
        }
        Ok(Word {
            bits: ((b as u32) << self.len) | self.bits,
            len: self.len + 1,
        })
    }

    /// `w_1 ... w_k b`.
    pub fn append(&self, b: u8) -> Result<Word> {
        if self.len() + 1 > MAX_DEPTH {
            return Err(Error::DepthOverflow(self.len() + 1));
        }
        Ok(Word {
            bits: (self.bits << 1) | b as u32,
            len: self.len + 1,
        })
    }

    pub fn concat(&self, other: &Word) -> Result<Word> {
        let len = self.len() + other.len();
        if len > MAX_DEPTH {
            return Err(Error::DepthOverflow(len));
        }
        Ok(Word {
            bits: (self.bits << other.len) | other.bits,
            len: len as u8,
        })
    }

    /// `w_1 ... w_m`, m <= len.
    pub fn prefix(&self, m: usize) -> Word {
        debug_assert!(m <= self.len());
        Word {
            bits: self.bits >> (self.len() - m),
            len: m as u8,
        }
    }

    /// Last `m` symbols.
    pub fn suffix(&self, m: usize) -> Word {
        debug_assert!(m <= self.len());
        Word {
            bits: self.bits & ((1u32 << m) - 1),
            len: m as u8,
        }
    }

    pub fn ones(&self) -> usize {
        self.bits.count_ones() as usize
    }

    /// Left rotation by one symbol: `w_2 ... w_k w_1`.
    pub fn rotate_left(&self) -> Word {
        debug_assert!(self.len > 0);
        self.drop_first().append(self.bit(0)).expect("length unchanged")
    }

    /// 0-based position of the first index where the words differ, if any.
    pub fn first_difference(&self, other: &Word) -> Option<usize> {
        debug_assert_eq!(self.len, other.len);
        let diff = self.bits ^ other.bits;
        if diff == 0 {
            None
        } else {
            Some(self.len() - 1 - diff.ilog2() as usize)
        }
    }

    /// Dyadic embedding `sum w_i 2^(-i)`.
    pub fn dyadic(&self) -> f64 {
        self.bits as f64 / (1u64 << self.len) as f64
    }

    pub fn iter_all(len: usize) -> impl Iterator<Item = Word> {
        (0..1usize << len).map(move |i| Word {
            bits: i as u32,
            len: len as u8,
        })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            write!(f, "{}", self.bit(i))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_is_msb_first() {
        // "110" -> 1*4 + 1*2 + 0 = 6, matching sum w_i 2^(k-i)
        let w = Word::parse("110").unwrap();
        assert_eq!(w.index(), 6);
        assert_eq!(w.to_string(), "110");
        assert_eq!(w.bit(0), 1);
        assert_eq!(w.bit(2), 0);
        assert_eq!(w.dyadic(), 0.75);
    }

    #[test]
    fn index_is_a_bijection() {
        for k in 1..=6 {
            let words: Vec<Word> = Word::iter_all(k).collect();
            assert_eq!(words.len(), 1 << k);
            for (i, w) in words.iter().enumerate() {
                assert_eq!(w.index(), i);
                assert_eq!(Word::parse(&w.to_string()).unwrap(), *w);
            }
        }
    }

    #[test]
    fn affix_bookkeeping() {
        let w = Word::parse("0110").unwrap();
        assert_eq!(w.drop_first().to_string(), "110");
        assert_eq!(w.drop_last().to_string(), "011");
        assert_eq!(w.prepend(1).unwrap().to_string(), "10110");
        assert_eq!(w.append(1).unwrap().to_string(), "01101");
        assert_eq!(w.prefix(2).to_string(), "01");
        assert_eq!(w.suffix(2).to_string(), "10");
        let u = Word::parse("10").unwrap();
        assert_eq!(w.concat(&u).unwrap().to_string(), "011010");
        assert_eq!(w.rotate_left().to_string(), "1100");
    }

    #[test]
    fn first_difference_position() {
        let u = Word::parse("0101").unwrap();
        let v = Word::parse("0111").unwrap();
        assert_eq!(u.first_difference(&v), Some(2));
        assert_eq!(u.first_difference(&u), None);
    }

    #[test]
    fn rejects_overlong_words() {
        let s: String = std::iter::repeat('0').take(MAX_DEPTH + 1).collect();
        assert!(Word::parse(&s).is_err());
    }
}
