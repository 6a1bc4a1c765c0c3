//! The group itself: the action on the tree, section maps, depth-r
//! decompositions with their proof statistics, the word problem, canonical
//! fingerprints, finite subgroup closure, and the abelianization map.

use std::collections::HashMap;

use dashmap::DashMap;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::finite_algebra::{Elem, SpinalData};
use crate::omega::OmegaSequence;
use crate::words::{concat, invert, reduce, reduce_letters, Letter, Word};

/// Hash keys inside the registry act on at most this many vertices; the
/// public fingerprint level formula is not capped. Collisions are resolved
/// by exact equality, so this only trades hash discrimination for speed.
const HASH_VERTEX_BUDGET: usize = 2048;

/// A spinal group: the finite defining data together with one admissible
/// defining sequence. All group-level operations live here.
pub struct SpinalGroup {
    pub data: SpinalData,
    pub omega: OmegaSequence,
    r_hom: usize,
    ident_memo: DashMap<(usize, Box<[Letter]>), bool>,
    pub(crate) order_memo: DashMap<(usize, Box<[Letter]>), u64>,
}

impl SpinalGroup {
    /// Builds the group, rejecting inadmissible sequences.
    pub fn new(data: SpinalData, omega: OmegaSequence) -> Result<Self> {
        if !omega.is_admissible(&data) {
            return Err(Error::ValidationError(
                "defining sequence is not admissible: some nontrivial level element \
                 lies in every period kernel or in none"
                    .into(),
            ));
        }
        // Admissible sequences are homogeneous within one prefix plus two
        // periods: a window that long contains a full period of kernels.
        let r_cap = omega.canonical_shifts().end + omega.period_len();
        let r_hom = omega
            .minimal_homogeneity(&data, r_cap)
            .ok_or_else(|| Error::Internal("admissible but not homogeneous".into()))?;
        Ok(SpinalGroup {
            data,
            omega,
            r_hom,
            ident_memo: DashMap::new(),
            order_memo: DashMap::new(),
        })
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.data.q()
    }

    /// Minimal homogeneity of the defining sequence.
    pub fn r_hom(&self) -> usize {
        self.r_hom
    }

    /// All nontrivial generators as single-letter words at the given shift,
    /// A-letters first.
    pub fn generators(&self, offset: usize) -> Vec<Word> {
        let mut gens = Vec::new();
        for x in self.data.a.elements() {
            if x != self.data.a.identity() {
                gens.push(Word::new(vec![Letter::A(x)], offset));
            }
        }
        for x in self.data.b.elements() {
            if x != self.data.b.identity() {
                gens.push(Word::new(vec![Letter::B(x)], offset));
            }
        }
        gens
    }

    fn epi_at(&self, position: usize) -> &crate::finite_algebra::Epimorphism {
        &self.data.epis[self.omega.at(position) as usize]
    }

    /// Applies one letter to a vertex in place. A-letters permute the first
    /// coordinate; a B-letter moves only vertices of the form q…q1y…, acting
    /// on y through the epimorphism at its depth.
    fn act_letter(&self, l: Letter, shift: usize, v: &mut [usize]) {
        match l {
            Letter::A(x) => {
                if let Some(first) = v.first_mut() {
                    *first = self.data.action.apply(x, *first);
                }
            }
            Letter::B(x) => {
                let q = self.data.q();
                let mut m = 0;
                while m < v.len() && v[m] == q - 1 {
                    m += 1;
                }
                if m + 1 < v.len() && v[m] == 0 {
                    let img = self.epi_at(shift + m + 1).apply(x);
                    v[m + 1] = self.data.action.apply(img, v[m + 1]);
                }
            }
        }
    }

    /// Image of a vertex under the word, letters applied right to left.
    pub fn act_on_vertex(&self, w: &Word, v: &[usize]) -> Vec<usize> {
        let mut v = v.to_vec();
        for &l in w.letters.iter().rev() {
            self.act_letter(l, w.offset, &mut v);
        }
        v
    }

    /// Product in G_A of the A-letters; identity iff the word lies in H.
    pub fn root_permutation(&self, w: &Word) -> Elem {
        let mut p = self.data.a.identity();
        for &l in &w.letters {
            if let Letter::A(x) = l {
                p = self.data.a.mul(p, x);
            }
        }
        p
    }

    /// Extended section map: returns h = root_permutation(w)⁻¹ and the q
    /// reduced sections of h·w (an element of H), living one shift deeper.
    pub fn psi(&self, w: &Word) -> (Elem, Vec<Word>) {
        let (h, sections, _) = self.psi_counted(w);
        (h, sections)
    }

    /// Like `psi`, also reporting how many simple reductions the section
    /// words needed.
    pub fn psi_counted(&self, w: &Word) -> (Elem, Vec<Word>, usize) {
        let a = &self.data.a;
        let q = self.data.q();
        let h = a.inv(self.root_permutation(w));
        let mut buckets: Vec<Vec<Letter>> = vec![Vec::new(); q];
        // c is the running prefix of A-letters of h·w; a B-letter b
        // conjugated by c drops its image at child c(1) and its descent
        // at child c(q)
        let mut c = h;
        for &l in &w.letters {
            match l {
                Letter::A(x) => c = a.mul(c, x),
                Letter::B(x) => {
                    let img = self.epi_at(w.offset + 1).apply(x);
                    if img != a.identity() {
                        buckets[self.data.action.apply(c, 0)].push(Letter::A(img));
                    }
                    buckets[self.data.action.apply(c, q - 1)].push(Letter::B(x));
                }
            }
        }
        debug_assert_eq!(c, a.identity());
        let mut count = 0;
        let sections = buckets
            .into_iter()
            .map(|b| {
                let (red, n) = reduce_letters(&b, &self.data);
                count += n;
                Word::new(red, w.offset + 1)
            })
            .collect();
        (h, sections, count)
    }

    /// True iff the word stabilizes every vertex up to and including the
    /// given level (membership in H^{(level)}).
    pub fn stabilizes_level(&self, w: &Word, level: usize) -> bool {
        if level == 0 {
            return true;
        }
        if self.root_permutation(w) != self.data.a.identity() {
            return false;
        }
        let (_, sections) = self.psi(w);
        sections.iter().all(|s| self.stabilizes_level(s, level - 1))
    }

    /// Whole-tree triviality. Sections strictly shorten, so the recursion
    /// grounds out; results are memoized on (canonical shift, letters).
    pub fn is_identity(&self, w: &Word) -> bool {
        let red = reduce(w, &self.data);
        self.is_identity_reduced(&red)
    }

    fn is_identity_reduced(&self, w: &Word) -> bool {
        if w.is_empty() {
            return true;
        }
        if w.len() == 1 {
            // single generators act nontrivially: A by faithfulness, B by
            // admissibility (it escapes some recurring kernel)
            return false;
        }
        if self.root_permutation(w) != self.data.a.identity() {
            return false;
        }
        let key = (
            self.omega.canonical_shift(w.offset),
            w.letters.clone().into_boxed_slice(),
        );
        if let Some(v) = self.ident_memo.get(&key) {
            return *v;
        }
        let (_, sections) = self.psi(w);
        let ans = sections.iter().all(|s| self.is_identity_reduced(s));
        self.ident_memo.insert(key, ans);
        ans
    }

    /// Group equality of two words at the same shift.
    pub fn equals(&self, u: &Word, v: &Word) -> bool {
        debug_assert_eq!(u.offset, v.offset);
        self.is_identity(&concat(u, &invert(v, &self.data)))
    }

    /// The permutation the word induces on the q^level vertices of one
    /// level, as the image index of each vertex in lexicographic order.
    pub fn level_permutation(&self, w: &Word, level: usize) -> Vec<u32> {
        let q = self.data.q();
        let total = q.checked_pow(level as u32).expect("level fits");
        let mut digits = vec![0usize; level];
        (0..total)
            .map(|idx| {
                let mut rem = idx;
                for d in (0..level).rev() {
                    digits[d] = rem % q;
                    rem /= q;
                }
                let img = self.act_on_vertex(w, &digits);
                img.iter().fold(0u32, |acc, &d| acc * q as u32 + d as u32)
            })
            .collect()
    }

    /// Canonical digest of the level permutation. Equal elements always
    /// collide; unequal ones almost never do, and callers resolve
    /// collisions with `equals`.
    pub fn fingerprint(&self, w: &Word, level: usize) -> [u8; 32] {
        let perm = self.level_permutation(w, level);
        let mut hasher = Sha256::new();
        for p in perm {
            hasher.update(p.to_le_bytes());
        }
        hasher.finalize().into()
    }

    /// Level at which distinct elements of word length ≤ n are expected to
    /// act distinctly: sections halve length, and a surviving generator
    /// acts within r_hom more levels.
    pub fn default_fingerprint_level(&self, n: usize) -> usize {
        let n = n.max(2);
        let log2 = usize::BITS as usize - (n - 1).leading_zeros() as usize;
        log2 + self.r_hom + 1
    }

    /// Hash level used inside registries, trading discrimination for speed.
    pub(crate) fn internal_hash_level(&self, n: usize) -> usize {
        let q = self.data.q();
        let mut level = 1;
        while q.pow(level as u32 + 1) <= HASH_VERTEX_BUDGET {
            level += 1;
        }
        level.min(self.default_fingerprint_level(n))
    }

    /// BFS closure of the generated subgroup, canonicalized by fingerprint
    /// with exact-equality collision resolution. Errors out as soon as the
    /// element count exceeds `limit`.
    pub fn subgroup_closure(&self, gens: &[Word], limit: usize) -> Result<Vec<Word>> {
        if limit < 1 {
            return Err(Error::InvalidRange("closure limit must be >= 1".into()));
        }
        let offset = gens.first().map_or(0, |g| g.offset);
        let mut multipliers = Vec::new();
        for g in gens {
            let r = reduce(g, &self.data);
            multipliers.push(invert(&r, &self.data));
            multipliers.push(r);
        }
        let level = self.internal_hash_level(64);
        let mut reps: Vec<Word> = Vec::new();
        let mut by_digest: HashMap<[u8; 32], Vec<usize>> = HashMap::new();
        let mut frontier: Vec<usize> = Vec::new();

        let mut register =
            |word: Word, reps: &mut Vec<Word>, by_digest: &mut HashMap<[u8; 32], Vec<usize>>| {
                let digest = self.fingerprint(&word, level);
                let bucket = by_digest.entry(digest).or_default();
                for &i in bucket.iter() {
                    if self.equals(&reps[i], &word) {
                        return None;
                    }
                }
                reps.push(word);
                bucket.push(reps.len() - 1);
                Some(reps.len() - 1)
            };

        let id = register(Word::empty(offset), &mut reps, &mut by_digest).expect("fresh");
        frontier.push(id);
        while let Some(i) = frontier.pop() {
            for m in &multipliers {
                let prod = reduce(&concat(&reps[i], m), &self.data);
                if let Some(j) = register(prod, &mut reps, &mut by_digest) {
                    if reps.len() > limit {
                        return Err(Error::ClosureLimitExceeded(limit));
                    }
                    frontier.push(j);
                }
            }
        }
        reps.sort_by(|u, v| u.len().cmp(&v.len()).then_with(|| u.letters.cmp(&v.letters)));
        Ok(reps)
    }

    /// Image in G_A^ab × G_B^ab; constant on group elements, so it factors
    /// through the abelianization.
    pub fn chi(&self, w: &Word) -> (Elem, Elem) {
        crate::words::ab_projections(w, &self.data)
    }

    /// Membership in the commutator subgroup: both chi components trivial.
    pub fn in_commutator(&self, w: &Word) -> bool {
        let (pa, pb) = self.chi(w);
        pa == self.data.a_ab.group.identity() && pb == self.data.b_ab.group.identity()
    }

    /// Expands the word to depth r, recording the statistics that drive the
    /// length-shortening estimates. The word must stabilize each expanded
    /// level.
    pub fn depth_decomposition(&self, f: &Word, r: usize) -> Result<DecompositionTree> {
        if r < 1 {
            return Err(Error::InvalidRange("decomposition depth must be >= 1".into()));
        }
        let root = reduce(f, &self.data);
        let o = root.offset;
        let q = self.data.q();
        let mut levels = vec![vec![root]];
        let mut xi = vec![0usize];
        let mut nu = vec![0usize];
        for level in 1..=r {
            let prev = &levels[level - 1];
            let mut xi_l = 0;
            for w in prev {
                for &letter in &w.letters {
                    if let Letter::B(x) = letter {
                        let now = self.epi_at(o + level).in_kernel(x);
                        let before =
                            (1..level).any(|j| self.epi_at(o + j).in_kernel(x));
                        if now && !before {
                            xi_l += 1;
                        }
                    }
                }
            }
            let mut next = Vec::with_capacity(prev.len() * q);
            let mut nu_l = 0;
            for (idx, w) in prev.iter().enumerate() {
                if self.root_permutation(w) != self.data.a.identity() {
                    return Err(Error::NotLevelStabilizing {
                        level,
                        path: node_path(idx, level - 1, q),
                    });
                }
                let (_, sections, cnt) = self.psi_counted(w);
                nu_l += cnt;
                next.extend(sections);
            }
            levels.push(next);
            xi.push(xi_l);
            nu.push(nu_l);
        }
        Ok(DecompositionTree::assemble(self, levels, xi, nu, r, o))
    }
}

/// 1-based digits of the path from the root to node `idx` at the given
/// depth.
fn node_path(idx: usize, depth: usize, q: usize) -> Vec<usize> {
    let mut path = vec![0usize; depth];
    let mut rem = idx;
    for d in (0..depth).rev() {
        path[d] = rem % q + 1;
        rem /= q;
    }
    path
}

/// Full depth-r expansion of a word with per-level statistics: lengths,
/// letter-kind counts, kernel membership counts, newly-killed B-letters
/// (ξ) and simple reductions performed (ν).
#[derive(Clone, Debug)]
pub struct DecompositionTree {
    pub r: usize,
    /// levels[ℓ] holds the q^ℓ reduced section words, ℓ = 0..=r.
    pub levels: Vec<Vec<Word>>,
    /// xi[ℓ]: B-letters of level ℓ−1 first killed at relative index ℓ.
    pub xi: Vec<usize>,
    /// nu[ℓ]: simple reductions performed while forming level ℓ.
    pub nu: Vec<usize>,
    /// l_len[ℓ] = |L_ℓ|, total reduced length of level ℓ.
    pub l_len: Vec<usize>,
    pub l_a: Vec<usize>,
    pub l_b: Vec<usize>,
    /// l_plus[ℓ]: B-letters at level ℓ outside every kernel of relative
    /// index 1..=ℓ.
    pub l_plus: Vec<usize>,
    /// l_kernel[ℓ][j−1]: B-letters at level ℓ inside the kernel at relative
    /// index j, j = 1..=r.
    pub l_kernel: Vec<Vec<usize>>,
}

impl DecompositionTree {
    fn assemble(
        group: &SpinalGroup,
        levels: Vec<Vec<Word>>,
        xi: Vec<usize>,
        nu: Vec<usize>,
        r: usize,
        root_offset: usize,
    ) -> Self {
        let mut l_len = Vec::with_capacity(r + 1);
        let mut l_a = Vec::with_capacity(r + 1);
        let mut l_b = Vec::with_capacity(r + 1);
        let mut l_plus = Vec::with_capacity(r + 1);
        let mut l_kernel = Vec::with_capacity(r + 1);
        for (level, words) in levels.iter().enumerate() {
            let mut len = 0;
            let mut na = 0;
            let mut nb = 0;
            let mut plus = 0;
            let mut kern = vec![0usize; r];
            for w in words {
                len += w.len();
                for &l in &w.letters {
                    match l {
                        Letter::A(_) => na += 1,
                        Letter::B(x) => {
                            nb += 1;
                            for j in 1..=r {
                                if group.epi_at(root_offset + j).in_kernel(x) {
                                    kern[j - 1] += 1;
                                }
                            }
                            if !(1..=level)
                                .any(|j| group.epi_at(root_offset + j).in_kernel(x))
                            {
                                plus += 1;
                            }
                        }
                    }
                }
            }
            l_len.push(len);
            l_a.push(na);
            l_b.push(nb);
            l_plus.push(plus);
            l_kernel.push(kern);
        }
        DecompositionTree {
            r,
            levels,
            xi,
            nu,
            l_len,
            l_a,
            l_b,
            l_plus,
            l_kernel,
        }
    }
}
