//! Reduced words in the free group on `n` generators.
//!
//! A letter is a nonzero signed generator index: `+k` is `x_k`, `-k` is
//! `x_k^-1`. Words are stored freely reduced, so equality of values is
//! equality of group elements.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A freely reduced word. The empty word is the identity `e`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ReducedWord {
    letters: Vec<i32>,
}

/// Position of a letter in the fixed alphabet order `+1 < -1 < +2 < -2 < ...`.
#[inline]
fn letter_key(letter: i32) -> u32 {
    let k = letter.unsigned_abs();
    2 * (k - 1) + u32::from(letter < 0)
}

fn check_letter(letter: i32, n: usize) -> Result<()> {
    if letter == 0 || letter.unsigned_abs() as usize > n {
        return Err(Error::MalformedLetter { letter, n });
    }
    Ok(())
}

/// Free reduction of a raw letter sequence over `n` generators.
pub fn reduce(raw: &[i32], n: usize) -> Result<ReducedWord> {
    for &l in raw {
        check_letter(l, n)?;
    }
    Ok(ReducedWord::reduce_unchecked(raw.iter().copied()))
}

/// Inverse word.
pub fn invert(w: &ReducedWord) -> ReducedWord {
    w.inverse()
}

/// Reduced product `vw`.
pub fn concat(v: &ReducedWord, w: &ReducedWord) -> ReducedWord {
    v.mul(w)
}

/// All reduced words of length at most `d` over `n` generators, in shortlex order.
pub fn enumerate_basis(n: usize, d: usize) -> Vec<ReducedWord> {
    let mut out = vec![ReducedWord::identity()];
    if n == 0 {
        return out;
    }
    let alphabet: Vec<i32> = (1..=n as i32).flat_map(|k| [k, -k]).collect();
    let mut layer = vec![ReducedWord::identity()];
    for _ in 0..d {
        let mut next = Vec::with_capacity(layer.len() * (2 * n));
        for w in &layer {
            let last = w.letters.last().copied();
            for &a in &alphabet {
                if last == Some(-a) {
                    continue;
                }
                let mut letters = w.letters.clone();
                letters.push(a);
                next.push(ReducedWord { letters });
            }
        }
        // Layers are generated in lexicographic order already because the
        // parent layer is sorted and letters are appended in alphabet order.
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Number of reduced words of length at most `d` over `n` generators.
pub fn basis_size(n: usize, d: usize) -> usize {
    if n == 0 {
        return 1;
    }
    let mut total = 1;
    let mut layer = 2 * n;
    for _ in 0..d {
        total += layer;
        layer *= 2 * n - 1;
    }
    total
}

impl ReducedWord {
    pub fn identity() -> Self {
        ReducedWord {
            letters: Vec::new(),
        }
    }

    /// The single-letter word `x_k` (or its inverse for negative `k`).
    pub fn generator(k: i32) -> Self {
        assert!(k != 0, "letter index must be nonzero");
        ReducedWord { letters: vec![k] }
    }

    pub(crate) fn reduce_unchecked(raw: impl IntoIterator<Item = i32>) -> Self {
        let mut letters: Vec<i32> = Vec::new();
        for l in raw {
            if letters.last() == Some(&-l) {
                letters.pop();
            } else {
                letters.push(l);
            }
        }
        ReducedWord { letters }
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Largest generator index appearing in the word, 0 for `e`.
    pub fn max_generator(&self) -> usize {
        self.letters
            .iter()
            .map(|l| l.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn inverse(&self) -> Self {
        ReducedWord {
            letters: self.letters.iter().rev().map(|l| -l).collect(),
        }
    }

    pub fn mul(&self, other: &ReducedWord) -> Self {
        let mut cancel = 0;
        let a = &self.letters;
        let b = &other.letters;
        while cancel < a.len() && cancel < b.len() && a[a.len() - 1 - cancel] == -b[cancel] {
            cancel += 1;
        }
        let mut letters = Vec::with_capacity(a.len() + b.len() - 2 * cancel);
        letters.extend_from_slice(&a[..a.len() - cancel]);
        letters.extend_from_slice(&b[cancel..]);
        ReducedWord { letters }
    }

    /// Left multiplication by a single letter.
    pub fn left_mul_letter(&self, letter: i32) -> Self {
        if self.letters.first() == Some(&-letter) {
            ReducedWord {
                letters: self.letters[1..].to_vec(),
            }
        } else {
            let mut letters = Vec::with_capacity(self.letters.len() + 1);
            letters.push(letter);
            letters.extend_from_slice(&self.letters);
            ReducedWord { letters }
        }
    }

    pub fn is_reduced(&self) -> bool {
        self.letters.windows(2).all(|p| p[0] != -p[1]) && !self.letters.contains(&0)
    }
}

impl Ord for ReducedWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters.len().cmp(&other.letters.len()).then_with(|| {
            self.letters
                .iter()
                .map(|&l| letter_key(l))
                .cmp(other.letters.iter().map(|&l| letter_key(l)))
        })
    }
}

impl PartialOrd for ReducedWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("e");
        }
        for (i, &l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "x{}", l.unsigned_abs())?;
            if l < 0 {
                f.write_str("^-1")?;
            }
        }
        Ok(())
    }
}

/// Parses `e`, `x1`, `x2^-1`, `x1*x2^-1*x1`, ... and applies free reduction.
/// Positive powers such as `x1^2` are accepted as repetition.
impl FromStr for ReducedWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "e" || s == "1" {
            return Ok(ReducedWord::identity());
        }
        let mut raw = Vec::new();
        for factor in s.split('*') {
            let factor = factor.trim();
            if factor == "e" {
                continue;
            }
            let bad = || Error::Parse(format!("malformed word factor `{factor}` in `{s}`"));
            let rest = factor.strip_prefix('x').ok_or_else(bad)?;
            let (idx, power) = match rest.split_once('^') {
                Some((i, p)) => (i, p.trim().parse::<i32>().map_err(|_| bad())?),
                None => (rest, 1),
            };
            let k: i32 = idx.trim().parse().map_err(|_| bad())?;
            if k <= 0 || power == 0 {
                return Err(bad());
            }
            let letter = if power < 0 { -k } else { k };
            for _ in 0..power.unsigned_abs() {
                raw.push(letter);
            }
        }
        Ok(ReducedWord::reduce_unchecked(raw))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(letters: &[i32]) -> ReducedWord {
        reduce(letters, 3).unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(w(&[1, -1]), ReducedWord::identity());
        assert_eq!(w(&[1, 2, -2, 1]).letters(), &[1, 1]);
        assert_eq!(w(&[1, 2]).letters(), &[1, 2]);
    }

    #[test]
    fn reduce_rejects_bad_letters() {
        assert!(matches!(
            reduce(&[0], 2),
            Err(Error::MalformedLetter { .. })
        ));
        assert!(matches!(
            reduce(&[1, 3], 2),
            Err(Error::MalformedLetter { .. })
        ));
        assert!(matches!(
            reduce(&[-3], 2),
            Err(Error::MalformedLetter { .. })
        ));
    }

    #[test]
    fn invert_examples() {
        assert_eq!(invert(&ReducedWord::identity()), ReducedWord::identity());
        assert_eq!(invert(&w(&[1, 2])).letters(), &[-2, -1]);
        assert_eq!(invert(&w(&[1, -2, 1])).letters(), &[-1, 2, -1]);
    }

    #[test]
    fn concat_examples() {
        assert_eq!(concat(&w(&[-1]), &w(&[1, 2])).letters(), &[2]);
        assert_eq!(concat(&w(&[1]), &ReducedWord::identity()).letters(), &[1]);
        assert!(concat(&w(&[1, 2]), &w(&[-2, -1])).is_identity());
    }

    #[test]
    fn basis_counts() {
        let b = enumerate_basis(1, 1);
        assert_eq!(b, vec![ReducedWord::identity(), w(&[1]), w(&[-1])]);
        assert_eq!(enumerate_basis(2, 1).len(), 5);
        assert_eq!(enumerate_basis(2, 2).len(), 17);
        for n in 1..4 {
            for d in 0..4 {
                assert_eq!(enumerate_basis(n, d).len(), basis_size(n, d));
            }
        }
    }

    #[test]
    fn basis_is_strictly_shortlex() {
        for n in 1..4 {
            let b = enumerate_basis(n, 3);
            for p in b.windows(2) {
                assert!(p[0] < p[1], "{} !< {}", p[0], p[1]);
            }
            assert!(b.iter().all(|x| x.is_reduced()));
        }
    }

    #[test]
    fn text_round_trip() {
        let x: ReducedWord = "x1*x2^-1*x1".parse().unwrap();
        assert_eq!(x.letters(), &[1, -2, 1]);
        assert_eq!(x.to_string(), "x1*x2^-1*x1");
        let y: ReducedWord = "x1 * x1^-1".parse().unwrap();
        assert_eq!(y.to_string(), "e");
        let z: ReducedWord = "x2^2".parse().unwrap();
        assert_eq!(z.letters(), &[2, 2]);
        assert!("y1".parse::<ReducedWord>().is_err());
        assert!("x0".parse::<ReducedWord>().is_err());
    }

    fn raw_word() -> impl Strategy<Value = Vec<i32>> {
        prop::collection::vec(prop_oneof![1..=3i32, -3..=-1i32], 0..50)
    }

    proptest! {
        #[test]
        fn reduce_is_idempotent(raw in raw_word()) {
            let r = reduce(&raw, 3).unwrap();
            prop_assert!(r.len() <= raw.len());
            prop_assert_eq!(reduce(r.letters(), 3).unwrap(), r);
        }

        #[test]
        fn concat_is_reduced_and_bounded(a in raw_word(), b in raw_word()) {
            let (v, w) = (reduce(&a, 3).unwrap(), reduce(&b, 3).unwrap());
            let vw = concat(&v, &w);
            prop_assert!(vw.is_reduced());
            prop_assert_eq!(reduce(vw.letters(), 3).unwrap(), vw.clone());
            prop_assert!(vw.len() <= v.len() + w.len());
            prop_assert!(vw.len() >= v.len().abs_diff(w.len()));
            prop_assert!(concat(&invert(&v), &v).is_identity());
            prop_assert_eq!(invert(&invert(&v)), v);
        }

        #[test]
        fn concat_is_associative(a in raw_word(), b in raw_word(), c in raw_word()) {
            let (u, v, w) = (reduce(&a, 3).unwrap(), reduce(&b, 3).unwrap(), reduce(&c, 3).unwrap());
            prop_assert_eq!(concat(&concat(&u, &v), &w), concat(&u, &concat(&v, &w)));
        }
    }
}
