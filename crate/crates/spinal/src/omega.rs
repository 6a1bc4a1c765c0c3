//! Eventually periodic defining sequences over the epimorphism alphabet,
//! with the shift, admissibility, completeness of segments, homogeneity,
//! and greedy factorization into complete blocks.

use crate::error::{Error, Result};
use crate::finite_algebra::SpinalData;

/// ω = ω₁ω₂… as an eventual repetition of `period` after `prefix`,
/// viewed through `offset` applications of the shift. Indexing is
/// 1-based throughout.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OmegaSequence {
    prefix: Vec<u16>,
    period: Vec<u16>,
    offset: usize,
}

impl OmegaSequence {
    pub fn new(prefix: Vec<u16>, period: Vec<u16>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::ValidationError("omega period is empty".into()));
        }
        Ok(OmegaSequence {
            prefix,
            period,
            offset: 0,
        })
    }

    /// Resolves epimorphism ids against the data and builds the sequence.
    pub fn from_ids(prefix: &[String], period: &[String], data: &SpinalData) -> Result<Self> {
        let resolve = |ids: &[String]| -> Result<Vec<u16>> {
            ids.iter().map(|id| data.epi_index(id)).collect()
        };
        OmegaSequence::new(resolve(prefix)?, resolve(period)?)
    }

    /// Epimorphism index at position i ≥ 1 of the shifted sequence.
    #[inline]
    pub fn at(&self, i: usize) -> u16 {
        debug_assert!(i >= 1);
        let j = self.offset + i;
        if j <= self.prefix.len() {
            self.prefix[j - 1]
        } else {
            self.period[(j - self.prefix.len() - 1) % self.period.len()]
        }
    }

    /// σ^k: at(i) of the result equals at(i + k) of self.
    pub fn shift(&self, k: usize) -> OmegaSequence {
        OmegaSequence {
            prefix: self.prefix.clone(),
            period: self.period.clone(),
            offset: self.offset + k,
        }
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    /// Positions past this many shifts see a purely periodic tail.
    fn effective_prefix_len(&self) -> usize {
        self.prefix.len().saturating_sub(self.offset)
    }

    /// Folds an extra shift amount into the smallest one that sees the
    /// same tail. Used as a memoization key component: two equal words
    /// at canonically equal shifts denote the same tree automorphism.
    pub fn canonical_shift(&self, extra: usize) -> usize {
        let p = self.effective_prefix_len();
        if extra <= p {
            extra
        } else {
            p + (extra - p) % self.period_len()
        }
    }

    /// All canonically distinct shift amounts (window for constants that
    /// must hold at every shift, e.g. leaf-order accumulation).
    pub fn canonical_shifts(&self) -> std::ops::Range<usize> {
        0..self.effective_prefix_len() + self.period_len()
    }

    /// True iff every nontrivial element of the level group lies in some
    /// kernel of the period and outside some kernel of the period.
    pub fn is_admissible(&self, data: &SpinalData) -> bool {
        let b = &data.b;
        for x in b.elements() {
            if x == b.identity() {
                continue;
            }
            let mut inside = false;
            let mut outside = false;
            for &e in &self.period {
                if data.epis[e as usize].in_kernel(x) {
                    inside = true;
                } else {
                    outside = true;
                }
            }
            if !(inside && outside) {
                return false;
            }
        }
        true
    }

    /// Smallest r ≤ r_max such that every length-r window is complete,
    /// scanned over the prefix plus two full periods. None if there is
    /// no such r.
    pub fn minimal_homogeneity(&self, data: &SpinalData, r_max: usize) -> Option<usize> {
        let horizon = self.effective_prefix_len() + 2 * self.period_len();
        'next_r: for r in 1..=r_max {
            for start in 1..=horizon {
                let window: Vec<u16> = (start..start + r).map(|i| self.at(i)).collect();
                if !is_complete(data, &window) {
                    continue 'next_r;
                }
            }
            return Some(r);
        }
        None
    }

    /// Greedy factorization of positions 1..=horizon into complete blocks,
    /// each the shortest complete prefix of the remainder. Every block must
    /// fit within r.
    pub fn factor_complete(
        &self,
        data: &SpinalData,
        r: usize,
        horizon: usize,
    ) -> Result<Vec<usize>> {
        if horizon < 1 {
            return Err(Error::InvalidRange("factorization horizon must be >= 1".into()));
        }
        let mut blocks = Vec::new();
        let mut pos = 1usize;
        while pos <= horizon {
            let mut window = Vec::new();
            let mut len = 0usize;
            loop {
                if len == r || pos + len > horizon {
                    return Err(Error::NotFactorable { r, at: pos });
                }
                window.push(self.at(pos + len));
                len += 1;
                if is_complete(data, &window) {
                    break;
                }
            }
            blocks.push(len);
            pos += len;
        }
        Ok(blocks)
    }
}

/// True iff the kernels along the segment jointly cover the level group.
pub fn is_complete(data: &SpinalData, segment: &[u16]) -> bool {
    let b = &data.b;
    for x in b.elements() {
        if x == b.identity() {
            continue;
        }
        if !segment
            .iter()
            .any(|&e| data.epis[e as usize].in_kernel(x))
        {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_composes_and_consumes_prefix() {
        let w = OmegaSequence::new(vec![0], vec![1, 2]).unwrap();
        let s = w.shift(1);
        for i in 1..=20 {
            assert_eq!(s.at(i), w.at(i + 1));
        }
        // pure-periodic view after the prefix is consumed
        assert_eq!(s.at(1), 1);
        assert_eq!(s.at(2), 2);
        assert_eq!(s.at(3), 1);
        let t = w.shift(2).shift(3);
        for i in 1..=20 {
            assert_eq!(t.at(i), w.at(i + 5));
        }
    }

    #[test]
    fn canonical_shift_respects_the_tail() {
        let w = OmegaSequence::new(vec![0, 1], vec![2, 3, 4]).unwrap();
        for extra in 0..30 {
            let c = w.canonical_shift(extra);
            assert!(c <= w.effective_prefix_len() + w.period_len());
            for i in 1..=15 {
                assert_eq!(w.at(i + extra), w.at(i + c));
            }
        }
    }
}
