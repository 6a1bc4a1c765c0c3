//! Growth machinery: exact ball enumeration (by length or by triangular
//! weight), a naive cross-checking oracle, element portraits, the
//! shortening-lemma checkers, and the section-wise composition map behind
//! the word-growth lower bound.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::growth_exponents;
use crate::error::{Error, Result};
use crate::finite_algebra::Elem;
use crate::group::SpinalGroup;
use crate::omega::is_complete;
use crate::words::{concat, parse_word, reduce, weight, Letter, WeightScheme, Word};

/// How ball radii are measured.
#[derive(Clone, Debug)]
pub enum Mode {
    Length,
    Weighted(WeightScheme),
}

/// An exactly enumerated ball: one minimal representative per element,
/// grouped into spheres, with cumulative counts.
#[derive(Clone, Debug)]
pub struct Ball {
    pub n: usize,
    /// Canonical id = index. Representatives are reduced, minimal, and
    /// lexicographically least among minimal words.
    pub reps: Vec<Word>,
    pub radius_of: Vec<usize>,
    /// Exact element weights, in weighted mode.
    pub weight_of: Option<Vec<f64>>,
    /// spheres[m] lists ids at radius m.
    pub spheres: Vec<Vec<usize>>,
    /// gamma[m] counts elements at radius ≤ m.
    pub gamma: Vec<usize>,
}

struct Registry<'g> {
    group: &'g SpinalGroup,
    level: usize,
    reps: Vec<Word>,
    by_digest: HashMap<[u8; 32], Vec<usize>>,
}

impl<'g> Registry<'g> {
    fn new(group: &'g SpinalGroup, level: usize) -> Self {
        Registry {
            group,
            level,
            reps: Vec::new(),
            by_digest: HashMap::new(),
        }
    }

    fn lookup(&self, w: &Word, digest: &[u8; 32]) -> Option<usize> {
        let bucket = self.by_digest.get(digest)?;
        bucket
            .iter()
            .copied()
            .find(|&i| self.group.equals(&self.reps[i], w))
    }

    /// Registers a fresh element, returning its new id, or the existing id.
    fn insert(&mut self, w: Word, digest: [u8; 32]) -> (usize, bool) {
        if let Some(i) = self.lookup(&w, &digest) {
            return (i, false);
        }
        self.reps.push(w);
        let id = self.reps.len() - 1;
        self.by_digest.entry(digest).or_default().push(id);
        (id, true)
    }
}

/// Exact γ(m) for every m ≤ n. Length mode runs a frontier BFS with
/// parallel digest computation and deterministic sorted registration;
/// weighted mode runs a single-threaded best-first search so that the
/// recorded weights are exact minima.
pub fn enumerate_ball(
    group: &SpinalGroup,
    n: usize,
    mode: &Mode,
    max_elements: usize,
) -> Result<Ball> {
    match mode {
        Mode::Length => enumerate_by_length(group, n, max_elements),
        Mode::Weighted(scheme) => enumerate_by_weight(group, n, scheme, max_elements),
    }
}

fn budget_check(count: usize, max_elements: usize) -> Result<()> {
    if count > max_elements {
        return Err(Error::BudgetExceeded(format!(
            "ball already holds {count} elements (limit {max_elements})"
        )));
    }
    Ok(())
}

fn enumerate_by_length(group: &SpinalGroup, n: usize, max_elements: usize) -> Result<Ball> {
    let level = group.internal_hash_level(n.max(2));
    let mut reg = Registry::new(group, level);
    let empty = Word::empty(0);
    let d0 = group.fingerprint(&empty, level);
    reg.insert(empty, d0);
    let mut radius_of = vec![0usize];
    let mut spheres = vec![vec![0usize]];
    let mut gamma = vec![1usize];
    let gens = group.generators(0);

    for m in 1..=n {
        let mut seen: HashSet<Vec<Letter>> = HashSet::new();
        let mut candidates: Vec<Word> = Vec::new();
        for &id in &spheres[m - 1] {
            for g in &gens {
                let w = reduce(&concat(&reg.reps[id], g), &group.data);
                if w.len() == m && seen.insert(w.letters.clone()) {
                    candidates.push(w);
                }
            }
        }
        // sorted registration keeps ids and representatives deterministic
        // and makes the stored rep the lexicographically least minimal word
        candidates.sort_by(|u, v| u.letters.cmp(&v.letters));
        let digests: Vec<[u8; 32]> = candidates
            .par_iter()
            .map(|w| group.fingerprint(w, level))
            .collect();
        let mut sphere = Vec::new();
        for (w, digest) in candidates.into_iter().zip(digests) {
            let (id, fresh) = reg.insert(w, digest);
            if fresh {
                radius_of.push(m);
                sphere.push(id);
            }
        }
        budget_check(reg.reps.len(), max_elements)?;
        gamma.push(gamma[m - 1] + sphere.len());
        spheres.push(sphere);
    }
    Ok(Ball {
        n,
        reps: reg.reps,
        radius_of,
        weight_of: None,
        spheres,
        gamma,
    })
}

/// Totally ordered f64 for heap keys.
#[derive(Clone, Copy, PartialEq, Debug)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

const WEIGHT_EPS: f64 = 1e-9;

fn enumerate_by_weight(
    group: &SpinalGroup,
    n: usize,
    scheme: &WeightScheme,
    max_elements: usize,
) -> Result<Ball> {
    let level = group.internal_hash_level(16.max(n * 4));
    let mut reg = Registry::new(group, level);
    let gens = group.generators(0);
    let budget = n as f64 + WEIGHT_EPS;
    let mut heap: BinaryHeap<Reverse<(OrdF64, Vec<Letter>)>> = BinaryHeap::new();
    heap.push(Reverse((OrdF64(0.0), Vec::new())));
    let mut radius_of: Vec<usize> = Vec::new();
    let mut weight_of: Vec<f64> = Vec::new();
    let mut spheres: Vec<Vec<usize>> = vec![Vec::new(); n + 1];

    while let Some(Reverse((OrdF64(wgt), letters))) = heap.pop() {
        let word = Word::new(letters, 0);
        let digest = group.fingerprint(&word, level);
        if reg.lookup(&word, &digest).is_some() {
            continue;
        }
        // first pop of an element carries its exact minimal weight
        let (id, _) = reg.insert(word, digest);
        budget_check(reg.reps.len(), max_elements)?;
        let bucket = (wgt - WEIGHT_EPS).ceil().max(0.0) as usize;
        radius_of.push(bucket);
        weight_of.push(wgt);
        spheres[bucket].push(id);
        let base = reg.reps[id].clone();
        for g in &gens {
            let cand = reduce(&concat(&base, g), &group.data);
            let cw = weight(&cand, scheme, &group.data, &group.omega)?;
            if cw <= budget {
                heap.push(Reverse((OrdF64(cw), cand.letters)));
            }
        }
    }
    let mut gamma = Vec::with_capacity(n + 1);
    let mut acc = 0;
    for s in &spheres {
        acc += s.len();
        gamma.push(acc);
    }
    Ok(Ball {
        n,
        reps: reg.reps,
        radius_of,
        weight_of: Some(weight_of),
        spheres,
        gamma,
    })
}

/// Independent ball oracle: enumerates every reduced word of length ≤ n in
/// (length, lex) order and groups them into equality classes by pairwise
/// `equals`, pre-bucketing on the exact level-`key_level` action (equal
/// elements can never land in different buckets). Returns γ and the first
/// word of each class.
pub fn naive_ball(group: &SpinalGroup, n: usize, key_level: usize) -> (Vec<usize>, Vec<Word>) {
    let gens = group.generators(0);
    let mut buckets: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    let mut reps: Vec<Word> = Vec::new();
    let mut gamma = Vec::with_capacity(n + 1);

    let mut register = |w: &Word, reps: &mut Vec<Word>| {
        let key = group.level_permutation(w, key_level);
        let bucket = buckets.entry(key).or_default();
        for &i in bucket.iter() {
            if group.equals(&reps[i], w) {
                return;
            }
        }
        reps.push(w.clone());
        bucket.push(reps.len() - 1);
    };

    let mut layer = vec![Word::empty(0)];
    register(&layer[0], &mut reps);
    gamma.push(reps.len());
    for _ in 1..=n {
        let mut next = Vec::new();
        for w in &layer {
            for g in &gens {
                // extending by the opposite kind keeps the word reduced and
                // preserves (length, lex) enumeration order
                let ok = match (w.letters.last(), g.letters[0]) {
                    (None, _) => true,
                    (Some(l), gl) => l.is_a() != gl.is_a(),
                };
                if ok {
                    next.push(concat(w, g));
                }
            }
        }
        for w in &next {
            register(w, &mut reps);
        }
        gamma.push(reps.len());
        layer = next;
    }
    (gamma, reps)
}

/// Serialized ball, keyed by the defining-data hash so stale caches are
/// never reused.
#[derive(Serialize, Deserialize)]
pub struct BallCacheFile {
    pub version: u32,
    pub spec_hash: String,
    pub mode: String,
    pub n: usize,
    pub gamma: Vec<usize>,
    /// Representative words per radius, in id order.
    pub spheres: Vec<Vec<String>>,
    pub weights: Option<Vec<f64>>,
}

pub const BALL_CACHE_VERSION: u32 = 1;

impl BallCacheFile {
    pub fn from_ball(ball: &Ball, group: &SpinalGroup, spec_hash: &str, mode: &Mode) -> Self {
        let spheres = ball
            .spheres
            .iter()
            .map(|s| s.iter().map(|&id| ball.reps[id].format(&group.data)).collect())
            .collect();
        BallCacheFile {
            version: BALL_CACHE_VERSION,
            spec_hash: spec_hash.to_string(),
            mode: match mode {
                Mode::Length => "length".into(),
                Mode::Weighted(s) => format!("weighted-r{}", s.r),
            },
            n: ball.n,
            gamma: ball.gamma.clone(),
            spheres,
            weights: ball.weight_of.clone(),
        }
    }

    /// Rebuilds the ball, re-parsing representatives. Fails if the cache
    /// was written for different defining data.
    pub fn to_ball(&self, group: &SpinalGroup, spec_hash: &str) -> Result<Ball> {
        if self.version != BALL_CACHE_VERSION {
            return Err(Error::ValidationError(format!(
                "ball cache version {} unsupported",
                self.version
            )));
        }
        if self.spec_hash != spec_hash {
            return Err(Error::ValidationError(
                "ball cache was computed for different defining data".into(),
            ));
        }
        let mut reps = Vec::new();
        let mut radius_of = Vec::new();
        let mut spheres = Vec::new();
        for (m, sphere) in self.spheres.iter().enumerate() {
            let mut ids = Vec::new();
            for s in sphere {
                let w = reduce(&parse_word(s, &group.data, 0)?, &group.data);
                reps.push(w);
                radius_of.push(m);
                ids.push(reps.len() - 1);
            }
            spheres.push(ids);
        }
        Ok(Ball {
            n: self.n,
            reps,
            radius_of,
            weight_of: self.weights.clone(),
            spheres,
            gamma: self.gamma.clone(),
        })
    }
}

/// Portrait of an element: recursive ψ-decomposition truncated as soon as
/// the weight drops to the cutoff K.
#[derive(Clone, Debug)]
pub enum Portrait {
    Leaf { word: Word, weight: f64 },
    Node { h: Elem, children: Vec<Portrait> },
}

impl Portrait {
    pub fn leaf_count(&self) -> usize {
        match self {
            Portrait::Leaf { .. } => 1,
            Portrait::Node { children, .. } => children.iter().map(Portrait::leaf_count).sum(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Portrait::Leaf { .. } => 1,
            Portrait::Node { children, .. } => {
                1 + children.iter().map(Portrait::depth).max().unwrap_or(0)
            }
        }
    }
}

/// κ = ητ₀/(q − η), the additive constant of the leaf-count recurrence.
pub fn kappa(q: usize, scheme: &WeightScheme) -> f64 {
    scheme.eta * scheme.tau[0] / (q as f64 - scheme.eta)
}

/// Minimal admissible cutoff for contraction factor ζ.
pub fn k_zeta(scheme: &WeightScheme, zeta: f64) -> f64 {
    scheme.eta * scheme.tau[0] / (zeta - scheme.eta)
}

pub fn default_zeta(scheme: &WeightScheme) -> f64 {
    0.5 * (1.0 + scheme.eta)
}

/// Default cutoff: large enough for both the contraction argument and the
/// q^{1/α}+κ base case of the leaf-count bound.
pub fn default_cutoff(q: usize, scheme: &WeightScheme, zeta: f64) -> Result<f64> {
    let alpha = growth_exponents(q, scheme.r)?.alpha_eta;
    Ok(((q as f64).powf(1.0 / alpha) + kappa(q, scheme)).max(k_zeta(scheme, zeta)))
}

/// Closed form of the leaf-count recurrence: 1 below the cutoff, else
/// (weight − κ)^α.
pub fn leaf_bound(w: f64, q: usize, scheme: &WeightScheme, k: f64) -> Result<f64> {
    let alpha = growth_exponents(q, scheme.r)?.alpha_eta;
    Ok(if w <= k {
        1.0
    } else {
        (w - kappa(q, scheme)).max(1.0).powf(alpha)
    })
}

pub fn portrait(
    group: &SpinalGroup,
    g: &Word,
    k: f64,
    zeta: f64,
    scheme: &WeightScheme,
) -> Result<Portrait> {
    if !(scheme.eta < zeta && zeta < 1.0) {
        return Err(Error::InvalidRange(format!(
            "zeta must lie in (eta, 1), got {zeta}"
        )));
    }
    let kz = k_zeta(scheme, zeta);
    if k < kz {
        return Err(Error::InvalidCutoff { k, kzeta: kz, zeta });
    }
    let red = reduce(g, &group.data);
    portrait_rec(group, &red, k, scheme, 0)
}

fn portrait_rec(
    group: &SpinalGroup,
    g: &Word,
    k: f64,
    scheme: &WeightScheme,
    depth: usize,
) -> Result<Portrait> {
    if depth > 512 {
        return Err(Error::Internal("portrait recursion failed to contract".into()));
    }
    let w = weight(g, scheme, &group.data, &group.omega)?;
    if w <= k {
        return Ok(Portrait::Leaf {
            word: g.clone(),
            weight: w,
        });
    }
    let (h, sections) = group.psi(g);
    let children = sections
        .iter()
        .map(|s| portrait_rec(group, s, k, scheme, depth + 1))
        .collect::<Result<Vec<_>>>()?;
    Ok(Portrait::Node { h, children })
}

/// Checks that the portrait is a faithful decomposition of g: internal
/// labels match the ψ root factors and leaves are equal as group elements.
pub fn portrait_matches(group: &SpinalGroup, p: &Portrait, g: &Word) -> bool {
    match p {
        Portrait::Leaf { word, .. } => group.equals(word, g),
        Portrait::Node { h, children } => {
            let (hh, sections) = group.psi(g);
            hh == *h
                && children
                    .iter()
                    .zip(sections.iter())
                    .all(|(c, s)| portrait_matches(group, c, s))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShorteningVariant {
    ThreeQuarter,
    TwoThird,
}

/// Outcome of one shortening check: the depth used, the measured section
/// length, the bound, and the proof-side statistics.
#[derive(Clone, Debug)]
pub struct ShorteningReport {
    pub variant: ShorteningVariant,
    pub r: usize,
    pub len: usize,
    pub l_r: usize,
    pub bound: f64,
    pub pass: bool,
    pub xi: Vec<usize>,
    pub nu: Vec<usize>,
    pub l_plus: Vec<usize>,
}

/// Verifies the 3/4- resp. 2/3-shortening inequality on one word.
/// The depth r is the smallest one whose hypothesis holds at the word's
/// shift: a complete prefix of length r, resp. (q = 2 only) three kernels
/// within the first r positions that jointly cover the level group.
pub fn check_shortening(
    group: &SpinalGroup,
    f: &Word,
    variant: ShorteningVariant,
) -> Result<ShorteningReport> {
    let f = reduce(f, &group.data);
    let o = f.offset;
    let cap = group.omega.canonical_shifts().end + group.omega.period_len();
    let r = match variant {
        ShorteningVariant::ThreeQuarter => (1..=cap)
            .find(|&r| {
                let seg: Vec<u16> = (1..=r).map(|i| group.omega.at(o + i)).collect();
                is_complete(&group.data, &seg)
            })
            .ok_or_else(|| {
                Error::PreconditionViolated(
                    "the sequence has no complete prefix at this shift".into(),
                )
            })?,
        ShorteningVariant::TwoThird => {
            if group.q() != 2 {
                return Err(Error::PreconditionViolated(
                    "the 2/3 estimate applies to degree 2 only".into(),
                ));
            }
            let mut found = None;
            'outer: for m in 3..=cap {
                for l in 2..m {
                    for k in 1..l {
                        let seg =
                            vec![group.omega.at(o + k), group.omega.at(o + l), group.omega.at(o + m)];
                        if is_complete(&group.data, &seg) {
                            found = Some(m);
                            break 'outer;
                        }
                    }
                }
            }
            found.ok_or_else(|| {
                Error::PreconditionViolated(
                    "no three kernels near this shift cover the level group".into(),
                )
            })?
        }
    };
    let tree = group.depth_decomposition(&f, r).map_err(|e| match e {
        Error::NotLevelStabilizing { level, .. } => Error::PreconditionViolated(format!(
            "word does not stabilize level {level} (needed down to {r})"
        )),
        other => other,
    })?;
    let n = f.len();
    let qr = (group.q() as f64).powi(r as i32);
    let l_r = tree.l_len[r];
    let (bound, pass) = match variant {
        ShorteningVariant::ThreeQuarter => {
            let b = 0.75 * n as f64 + qr;
            (b, l_r as f64 <= b + 1e-9)
        }
        ShorteningVariant::TwoThird => {
            let b = (2.0 / 3.0) * n as f64 + 2.0 / 3.0 + 3.0 * qr;
            (b, (l_r as f64) < b)
        }
    };
    Ok(ShorteningReport {
        variant,
        r,
        len: n,
        l_r,
        bound,
        pass,
        xi: tree.xi,
        nu: tree.nu,
        l_plus: tree.l_plus,
    })
}

/// The free choices of the section-wise composition: the spine mover h
/// (h(1) = q), a per-element retraction ν of the first epimorphism, and
/// conjugators a_i with a_i(q) = i.
#[derive(Clone, Debug)]
pub struct LambdaChoices {
    pub h: Elem,
    pub nu: Vec<Elem>,
    pub conjugators: Vec<Elem>,
}

/// Smallest-index defaults for the composition at parent shift `offset`.
pub fn default_lambda_choices(group: &SpinalGroup, offset: usize) -> Result<LambdaChoices> {
    let a = &group.data.a;
    let q = group.q();
    let act = &group.data.action;
    let h = a
        .elements()
        .find(|&x| act.apply(x, 0) == q - 1)
        .ok_or_else(|| Error::PreconditionViolated("no element maps 1 to q".into()))?;
    let epi = &group.data.epis[group.omega.at(offset + 1) as usize];
    let mut nu = vec![group.data.b.identity(); a.order()];
    for x in a.elements() {
        if x == a.identity() {
            continue;
        }
        nu[x as usize] = group
            .data
            .b
            .elements()
            .find(|&bb| epi.apply(bb) == x)
            .ok_or_else(|| Error::PreconditionViolated("epimorphism not surjective".into()))?;
    }
    let conjugators = (0..q)
        .map(|i| {
            a.elements()
                .find(|&x| act.apply(x, q - 1) == i)
                .ok_or_else(|| Error::PreconditionViolated("root action not transitive".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LambdaChoices { h, nu, conjugators })
}

/// Builds F = Π_i a_i·λ(F_i)·a_i⁻¹ from q sections living one shift deeper,
/// so that section i of F recovers F_i up to bounded factors. λ replaces
/// each A-letter x by h·ν(x)·h⁻¹ and keeps B-letters.
pub fn lambda_compose(
    group: &SpinalGroup,
    sections: &[Word],
    choices: &LambdaChoices,
) -> Result<Word> {
    let q = group.q();
    let a = &group.data.a;
    let act = &group.data.action;
    if sections.len() != q {
        return Err(Error::PreconditionViolated(format!(
            "need exactly {q} sections"
        )));
    }
    let child_offset = sections[0].offset;
    if child_offset == 0 || sections.iter().any(|s| s.offset != child_offset) {
        return Err(Error::PreconditionViolated(
            "sections must share a positive shift".into(),
        ));
    }
    let offset = child_offset - 1;
    if act.apply(choices.h, 0) != q - 1 {
        return Err(Error::PreconditionViolated("h must map 1 to q".into()));
    }
    let epi = &group.data.epis[group.omega.at(offset + 1) as usize];
    for x in a.elements() {
        if x == a.identity() {
            continue;
        }
        let b = choices.nu[x as usize];
        if b == group.data.b.identity() || epi.apply(b) != x {
            return Err(Error::PreconditionViolated(format!(
                "nu({}) is not a preimage under the first epimorphism",
                a.name(x)
            )));
        }
    }
    for (i, &c) in choices.conjugators.iter().enumerate() {
        if act.apply(c, q - 1) != i {
            return Err(Error::PreconditionViolated(format!(
                "conjugator {i} does not map q to {}",
                i + 1
            )));
        }
    }
    if act.apply(choices.h, q - 1) == 0 {
        // junk from A-letters and from B-letters shares one section; only
        // boundedly many A-letters outside <h> keep it from growing
        let h_span = a.closure(&[choices.h]);
        for s in sections {
            let outside = s
                .letters
                .iter()
                .filter(|l| match l {
                    Letter::A(x) => h_span.binary_search(x).is_err(),
                    Letter::B(_) => false,
                })
                .count();
            if outside > q {
                return Err(Error::PreconditionViolated(format!(
                    "a section carries {outside} A-letters outside <h> (limit {q})"
                )));
            }
        }
    }
    let h_inv = a.inv(choices.h);
    let mut letters = Vec::new();
    for (i, s) in sections.iter().enumerate() {
        let c = choices.conjugators[i];
        if c != a.identity() {
            letters.push(Letter::A(c));
        }
        for &l in &s.letters {
            match l {
                Letter::A(x) => {
                    letters.push(Letter::A(choices.h));
                    letters.push(Letter::B(choices.nu[x as usize]));
                    letters.push(Letter::A(h_inv));
                }
                Letter::B(x) => letters.push(Letter::B(x)),
            }
        }
        if c != a.identity() {
            letters.push(Letter::A(a.inv(c)));
        }
    }
    Ok(reduce(&Word::new(letters, offset), &group.data))
}
