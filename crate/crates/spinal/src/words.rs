//! Words over the generating set S = A ∪ B: parsing and printing, simple
//! reductions to the canonical reduced form, cyclic conjugation, triangular
//! weights, and the abelianized A/B projections.

use crate::error::{Error, Result};
use crate::finite_algebra::{Elem, SpinalData};
use crate::omega::OmegaSequence;

/// One generator. The index is an element of G_A resp. G_B and is never
/// the identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    A(Elem),
    B(Elem),
}

impl Letter {
    pub fn is_a(&self) -> bool {
        matches!(self, Letter::A(_))
    }

    pub fn is_b(&self) -> bool {
        matches!(self, Letter::B(_))
    }

    fn same_kind(&self, other: &Letter) -> bool {
        self.is_a() == other.is_a()
    }

    pub fn name<'d>(&self, data: &'d SpinalData) -> &'d str {
        match *self {
            Letter::A(x) => data.a.name(x),
            Letter::B(x) => data.b.name(x),
        }
    }
}

/// A word together with the ω-shift at which it lives: its B-letters are
/// interpreted through ω_{offset+1}, ω_{offset+2}, … as the word descends
/// the tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    pub letters: Vec<Letter>,
    pub offset: usize,
}

impl Word {
    pub fn empty(offset: usize) -> Self {
        Word {
            letters: Vec::new(),
            offset,
        }
    }

    pub fn new(letters: Vec<Letter>, offset: usize) -> Self {
        Word { letters, offset }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Reduced words alternate in kind: no two adjacent letters share one.
    pub fn is_reduced(&self) -> bool {
        self.letters
            .windows(2)
            .all(|w| !w[0].same_kind(&w[1]))
    }

    pub fn count_b(&self) -> usize {
        self.letters.iter().filter(|l| l.is_b()).count()
    }

    pub fn format(&self, data: &SpinalData) -> String {
        if self.letters.is_empty() {
            return "1".to_string();
        }
        let names: Vec<&str> = self.letters.iter().map(|l| l.name(data)).collect();
        if names.iter().all(|n| n.chars().count() == 1) {
            names.concat()
        } else {
            names.join(".")
        }
    }
}

/// Parses a word from generator names. Single-character names may be run
/// together ("abadac"); multi-character names are separated by dots
/// ("t13.b100000"). Identity names are accepted and dropped. The result
/// is not reduced.
pub fn parse_word(s: &str, data: &SpinalData, offset: usize) -> Result<Word> {
    let tokens: Vec<String> = if s.contains('.') {
        s.split('.').map(str::to_string).collect()
    } else {
        s.chars().map(String::from).collect()
    };
    let mut letters = Vec::new();
    for tok in tokens {
        if tok.is_empty() {
            continue;
        }
        let in_a = data.a.by_name(&tok);
        let in_b = data.b.by_name(&tok);
        let letter = match (in_a, in_b) {
            (Some(x), _) if x == data.a.identity() => continue,
            (_, Some(x)) if x == data.b.identity() => continue,
            (Some(x), None) => Letter::A(x),
            (None, Some(x)) => Letter::B(x),
            (Some(_), Some(_)) => {
                return Err(Error::ParseError(format!(
                    "generator name {tok:?} is ambiguous between the root and level groups"
                )))
            }
            (None, None) => {
                return Err(Error::ParseError(format!("unknown generator name {tok:?}")))
            }
        };
        letters.push(letter);
    }
    Ok(Word::new(letters, offset))
}

/// Parses a vertex word over Y = {1..q} from a digit string, 0-based
/// internally.
pub fn parse_vertex(s: &str, q: usize) -> Result<Vec<usize>> {
    if q > 9 {
        return Err(Error::ParseError(
            "vertex parsing supports degrees up to 9".into(),
        ));
    }
    let mut v = Vec::with_capacity(s.len());
    for c in s.chars() {
        let d = c
            .to_digit(10)
            .ok_or_else(|| Error::ParseError(format!("bad vertex digit {c:?}")))? as usize;
        if d < 1 || d > q {
            return Err(Error::ParseError(format!(
                "vertex digit {d} outside 1..{q}"
            )));
        }
        v.push(d - 1);
    }
    Ok(v)
}

pub fn format_vertex(v: &[usize]) -> String {
    v.iter().map(|d| (d + 1).to_string()).collect()
}

/// Applies simple relations leftmost-first until none applies, returning
/// the reduced letters and the number of relation applications (merges and
/// deletions both count once).
pub fn reduce_letters(letters: &[Letter], data: &SpinalData) -> (Vec<Letter>, usize) {
    let mut stack: Vec<Letter> = Vec::with_capacity(letters.len());
    let mut count = 0usize;
    for &l in letters {
        let mut incoming = Some(l);
        while let Some(cur) = incoming.take() {
            match stack.last() {
                Some(top) if top.same_kind(&cur) => {
                    let top = stack.pop().expect("nonempty");
                    count += 1;
                    let merged = match (top, cur) {
                        (Letter::A(x), Letter::A(y)) => {
                            let p = data.a.mul(x, y);
                            (p != data.a.identity()).then_some(Letter::A(p))
                        }
                        (Letter::B(x), Letter::B(y)) => {
                            let p = data.b.mul(x, y);
                            (p != data.b.identity()).then_some(Letter::B(p))
                        }
                        _ => unreachable!("same_kind checked"),
                    };
                    // a merged letter can in turn merge with the new top
                    incoming = merged;
                }
                _ => stack.push(cur),
            }
        }
    }
    (stack, count)
}

/// Canonical reduced form of w (leftmost-first strategy).
pub fn reduce(w: &Word, data: &SpinalData) -> Word {
    let (letters, _) = reduce_letters(&w.letters, data);
    Word::new(letters, w.offset)
}

/// Reversed word with letterwise inverses; reduce(w · invert(w)) is empty.
pub fn invert(w: &Word, data: &SpinalData) -> Word {
    let letters = w
        .letters
        .iter()
        .rev()
        .map(|&l| match l {
            Letter::A(x) => Letter::A(data.a.inv(x)),
            Letter::B(x) => Letter::B(data.b.inv(x)),
        })
        .collect();
    Word::new(letters, w.offset)
}

/// Concatenation. Both words must live at the same shift.
pub fn concat(u: &Word, v: &Word) -> Word {
    debug_assert_eq!(u.offset, v.offset);
    let mut letters = u.letters.clone();
    letters.extend_from_slice(&v.letters);
    Word::new(letters, u.offset)
}

pub fn power(w: &Word, k: usize) -> Word {
    let mut letters = Vec::with_capacity(w.len() * k);
    for _ in 0..k {
        letters.extend_from_slice(&w.letters);
    }
    Word::new(letters, w.offset)
}

/// True when the reduced word has the cyclically reduced even form
/// b₁a₁…b_ka_k.
pub fn is_cr_form(w: &Word) -> bool {
    w.len() % 2 == 0
        && w.is_reduced()
        && w.letters.first().map_or(false, Letter::is_b)
}

/// Rotates and reduces until the word has length ≤ 1 or the cyclically
/// reduced even form. The result is conjugate to w.
pub fn cyclic_conjugate(w: &Word, data: &SpinalData) -> Result<Word> {
    let mut cur = reduce(w, data);
    let guard = 4 * cur.len() + 4;
    for _ in 0..guard {
        if cur.len() <= 1 || is_cr_form(&cur) {
            return Ok(cur);
        }
        cur.letters.rotate_left(1);
        cur = reduce(&cur, data);
    }
    Err(Error::Internal(
        "cyclic conjugation failed to terminate".into(),
    ))
}

/// Triangular weight scheme for r-homogeneous sequences: η is the
/// contraction factor and τ[i] the weight of a B-letter first killed at
/// index i, with τ[0] the weight of every A-letter.
#[derive(Clone, Debug)]
pub struct WeightScheme {
    pub r: usize,
    pub eta: f64,
    pub tau: Vec<f64>,
}

impl WeightScheme {
    /// The weight of one letter. For a B-letter the index is the smallest
    /// i ≥ 1 with ω_{shift+i}(b) = 1; it must exist within r.
    pub fn letter_weight(
        &self,
        l: Letter,
        shift: usize,
        data: &SpinalData,
        omega: &OmegaSequence,
    ) -> Result<f64> {
        match l {
            Letter::A(_) => Ok(self.tau[0]),
            Letter::B(x) => {
                for i in 1..=self.r {
                    if data.epis[omega.at(shift + i) as usize].in_kernel(x) {
                        return Ok(self.tau[i]);
                    }
                }
                Err(Error::WeightUndefined(data.b.name(x).to_string()))
            }
        }
    }
}

/// Sum of letter weights under the scheme, taking the word's shift into
/// account. With no scheme use `Word::len` instead.
pub fn weight(
    w: &Word,
    scheme: &WeightScheme,
    data: &SpinalData,
    omega: &OmegaSequence,
) -> Result<f64> {
    let mut total = 0.0;
    for &l in &w.letters {
        total += scheme.letter_weight(l, w.offset, data, omega)?;
    }
    Ok(total)
}

/// Images of the A-letter and B-letter subwords in the abelianizations
/// of G_A and G_B.
pub fn ab_projections(w: &Word, data: &SpinalData) -> (Elem, Elem) {
    let mut pa = data.a_ab.group.identity();
    let mut pb = data.b_ab.group.identity();
    for &l in &w.letters {
        match l {
            Letter::A(x) => pa = data.a_ab.group.mul(pa, data.a_ab.project(x)),
            Letter::B(x) => pb = data.b_ab.group.mul(pb, data.b_ab.project(x)),
        }
    }
    (pa, pb)
}

/// Raw (non-abelianized) products of the A-letters and of the B-letters,
/// used where both groups are already abelian.
pub fn raw_projections(w: &Word, data: &SpinalData) -> (Elem, Elem) {
    let mut pa = data.a.identity();
    let mut pb = data.b.identity();
    for &l in &w.letters {
        match l {
            Letter::A(x) => pa = data.a.mul(pa, x),
            Letter::B(x) => pb = data.b.mul(pb, x),
        }
    }
    (pa, pb)
}
