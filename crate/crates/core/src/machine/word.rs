//! Finite binary strings in the canonical order `λ, 0, 1, 00, 01, ...`,
//! identified with the positive integers.

use std::fmt;

/// A finite binary string.
///
/// The identification with positive integers reads `1` followed by the
/// string as a binary numeral: `λ ↔ 1`, `0 ↔ 2`, `1 ↔ 3`, `00 ↔ 4`, and so
/// on. Ordering follows that numbering (length first, then lexicographic).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Word {
    bits: Vec<bool>,
}

/// Programs for the self-delimiting machine are ordinary binary strings.
pub type Program = Word;

impl Word {
    pub fn empty() -> Self {
        Word { bits: Vec::new() }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Word { bits }
    }

    /// Parses `"0110"`; accepts `"λ"`, `"lambda"`, `"-"`, or `""` for the
    /// empty string.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if s.is_empty() || s == "λ" || s == "lambda" || s == "-" {
            return Some(Word::empty());
        }
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return None,
            }
        }
        Some(Word { bits })
    }

    /// The word with the given positive index.
    pub fn from_index(index: u64) -> Self {
        assert!(index >= 1, "word indices start at 1");
        let len = 63 - index.leading_zeros() as usize;
        let mut bits = Vec::with_capacity(len);
        for k in (0..len).rev() {
            bits.push(index & (1 << k) != 0);
        }
        Word { bits }
    }

    /// The positive integer identified with this word.
    pub fn index(&self) -> u64 {
        assert!(self.bits.len() <= 62, "word too long for a u64 index");
        let mut v: u64 = 1;
        for &b in &self.bits {
            v = (v << 1) | (b as u64);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        self.bits.len() <= other.bits.len() && other.bits[..self.bits.len()] == self.bits[..]
    }

    pub fn is_proper_prefix_of(&self, other: &Word) -> bool {
        self.bits.len() < other.bits.len() && self.is_prefix_of(other)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits.is_empty() {
            return write!(f, "λ");
        }
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.bits
            .len()
            .cmp(&other.bits.len())
            .then_with(|| self.bits.cmp(&other.bits))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Iterates all words of length at most `max_len` in canonical order.
pub fn words_up_to(max_len: usize) -> impl Iterator<Item = Word> {
    WordRange {
        next: 1,
        last: (1u64 << (max_len + 1)) - 1,
    }
}

struct WordRange {
    next: u64,
    last: u64,
}

impl Iterator for WordRange {
    type Item = Word;
    fn next(&mut self) -> Option<Word> {
        if self.next > self.last {
            return None;
        }
        let w = Word::from_index(self.next);
        self.next += 1;
        Some(w)
    }
}
