//! Freely reduced words over a fixed basis `a1, ..., an`.
//!
//! A letter is a non-zero `i32`: `k` stands for `a_k` and `-k` for its
//! inverse. The text form writes `a_k` as the k-th lowercase letter and
//! its inverse in uppercase, so `"abAB"` is the commutator `[a1, a2]`.

use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub type Letter = i32;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    /// Builds the free reduction of `letters`.
    pub fn new(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for x in letters {
            assert!(x != 0, "letter 0 is not a generator");
            if out.last() == Some(&-x) {
                out.pop();
            } else {
                out.push(x);
            }
        }
        Word(out)
    }

    pub fn letter(x: Letter) -> Self {
        Word::new([x])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_generator(&self) -> usize {
        self.0.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn inverse(&self) -> Self {
        Word(self.0.iter().rev().map(|x| -x).collect())
    }

    pub fn pow(&self, k: usize) -> Self {
        Word::new(self.0.iter().copied().cycle().take(self.0.len() * k))
    }

    pub fn conjugate_by(&self, g: &Word) -> Self {
        &(g * self) * &g.inverse()
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.0.first(), self.0.last()) {
            (Some(a), Some(b)) => self.0.len() == 1 || *a != -*b,
            _ => true,
        }
    }

    /// Splits `self = g * c * g^-1` with `c` cyclically reduced.
    pub fn cyclic_split(&self) -> (Word, Word) {
        let w = &self.0;
        let mut i = 0;
        while i < w.len() / 2 && w[i] == -w[w.len() - 1 - i] {
            i += 1;
        }
        (Word(w[..i].to_vec()), Word(w[i..w.len() - i].to_vec()))
    }

    pub fn cyclic_reduce(&self) -> Word {
        self.cyclic_split().1
    }

    /// Least rotation of the cyclic reduction; equal for conjugate words.
    pub fn cyclic_normal_form(&self) -> Word {
        let c = self.cyclic_reduce();
        let n = c.0.len();
        if n == 0 {
            return c;
        }
        (0..n)
            .map(|r| Word(c.0[r..].iter().chain(&c.0[..r]).copied().collect()))
            .min()
            .unwrap()
    }

    pub fn is_conjugate(&self, other: &Word) -> bool {
        self.cyclic_normal_form() == other.cyclic_normal_form()
    }

    /// Returns `(root, k)` with `self = root^k` and `root` not a proper power.
    pub fn root(&self) -> (Word, usize) {
        let (g, c) = self.cyclic_split();
        let n = c.len();
        if n == 0 {
            return (Word::identity(), 1);
        }
        for p in 1..=n {
            if n % p == 0 && (0..n).all(|i| c.0[i] == c.0[i % p]) {
                let r = Word(c.0[..p].to_vec()).conjugate_by(&g);
                return (r, n / p);
            }
        }
        unreachable!()
    }

    pub fn is_proper_power(&self) -> bool {
        self.root().1 > 1
    }

    pub fn parse(s: &str) -> Result<Word, Error> {
        let mut out = Vec::new();
        for ch in s.chars().filter(|c| !c.is_whitespace() && *c != '.') {
            let l = if ch.is_ascii_lowercase() {
                (ch as u8 - b'a' + 1) as Letter
            } else if ch.is_ascii_uppercase() {
                -((ch as u8 - b'A' + 1) as Letter)
            } else if ch == '1' && out.is_empty() {
                continue;
            } else {
                return Err(Error::Parse(format!("bad letter {ch:?} in word {s:?}")));
            };
            out.push(l);
        }
        Ok(Word::new(out))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for &x in &self.0 {
            let base = if x > 0 { b'a' } else { b'A' };
            let k = x.unsigned_abs() as u8 - 1;
            if k < 26 {
                write!(f, "{}", (base + k) as char)?;
            } else {
                write!(f, "[{x}]")?;
            }
        }
        Ok(())
    }
}

impl Mul for &Word {
    type Output = Word;
    fn mul(self, rhs: &Word) -> Word {
        Word::new(self.0.iter().chain(&rhs.0).copied())
    }
}

impl Mul for Word {
    type Output = Word;
    fn mul(self, rhs: Word) -> Word {
        &self * &rhs
    }
}

/// Every generator in both signs, in the order `a1, A1, a2, A2, ...`.
pub fn signed_letters(rank: usize) -> Vec<Letter> {
    (1..=rank as Letter).flat_map(|i| [i, -i]).collect()
}

/// Position of a letter in [`signed_letters`].
pub fn letter_index(x: Letter) -> usize {
    let k = (x.unsigned_abs() as usize - 1) * 2;
    if x > 0 {
        k
    } else {
        k + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduction_and_parse() {
        let w = Word::parse("abBA").unwrap();
        assert!(w.is_trivial());
        assert_eq!(Word::parse("abAB").unwrap().letters(), &[1, 2, -1, -2]);
        assert_eq!(Word::parse("abAB").unwrap().to_string(), "abAB");
        assert!(Word::parse("a?").is_err());
    }

    #[test]
    fn cyclic_split_and_root() {
        let w = Word::parse("abA").unwrap();
        let (g, c) = w.cyclic_split();
        assert_eq!(g, Word::parse("a").unwrap());
        assert_eq!(c, Word::parse("b").unwrap());
        assert_eq!(Word::parse("aa").unwrap().root(), (Word::parse("a").unwrap(), 2));
        assert_eq!(Word::parse("babab").unwrap().root().1, 1);
        let (r, k) = Word::parse("cababC").unwrap().root();
        assert_eq!((r, k), (Word::parse("cabC").unwrap(), 2));
    }

    fn arb_word() -> impl Strategy<Value = Word> {
        prop::collection::vec(prop::sample::select(vec![1, -1, 2, -2, 3, -3]), 0..10)
            .prop_map(Word::new)
    }

    proptest! {
        #[test]
        fn inverse_cancels(w in arb_word()) {
            prop_assert!((&w * &w.inverse()).is_trivial());
        }

        #[test]
        fn normal_form_is_conjugation_invariant(w in arb_word(), g in arb_word()) {
            prop_assert_eq!(w.conjugate_by(&g).cyclic_normal_form(), w.cyclic_normal_form());
        }
    }
}
