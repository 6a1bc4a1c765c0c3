//! Torsion machinery: exact element orders through the section recursion,
//! period growth tables, weight-contraction shadows with their divisibility
//! certificate, prime-arity period sequences, the abelianized trace rules
//! along the squaring recursion, and the doubling construction that yields
//! lower bounds for period growth.

use std::collections::HashSet;

use crate::bounds::is_prime;
use crate::error::{Error, Result};
use crate::finite_algebra::{Elem, SpinalData};
use crate::group::SpinalGroup;
use crate::growth::Ball;
use crate::words::{
    concat, cyclic_conjugate, power, raw_projections, reduce, weight, Letter, WeightScheme, Word,
};

const WEIGHT_EPS: f64 = 1e-9;

/// Budgets for the order recursion. Exceeding either one aborts with
/// `RecursionLimit` or `LengthBlowup` instead of looping forever, which is
/// the honest outcome when the element may have infinite order.
#[derive(Clone, Debug)]
pub struct OrderLimits {
    pub max_depth: usize,
    pub max_len: usize,
}

impl Default for OrderLimits {
    fn default() -> Self {
        OrderLimits {
            max_depth: 64,
            max_len: 10_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TraceStep {
    pub offset: usize,
    pub word: Word,
    /// Order of the root permutation at this node.
    pub s: u64,
}

#[derive(Clone, Debug)]
pub struct OrderResult {
    pub order: u64,
    /// The recursion steps actually computed, parents before children.
    /// Subtrees served from the memo table do not reappear.
    pub trace: Vec<TraceStep>,
    /// Whether every prime factor of the order divides the arity.
    pub q_power: bool,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn lcm_checked(a: u64, b: u64) -> Result<u64> {
    if a == 0 || b == 0 {
        return Err(Error::Internal("lcm of zero".into()));
    }
    (a / gcd(a, b))
        .checked_mul(b)
        .ok_or_else(|| Error::Internal("element order overflows u64".into()))
}

fn divides_power_of(mut n: u64, q: u64) -> bool {
    loop {
        let g = gcd(n, q);
        if g == 1 {
            break;
        }
        n /= g;
    }
    n == 1
}

type OrderKey = (usize, Box<[Letter]>);

fn order_key(group: &SpinalGroup, w: &Word) -> OrderKey {
    (
        group.omega.canonical_shift(w.offset),
        w.letters.clone().into_boxed_slice(),
    )
}

/// The exact order of the element represented by `g`.
///
/// The word is cyclically reduced, which changes the element only by
/// conjugation. A fixed point of the cyclic reduction of length at most one
/// is a generator whose order is read off the finite groups; admissibility
/// makes the B-letter case exact because no nontrivial power survives every
/// recurring kernel. Otherwise, with s the order of the root permutation,
/// g^s stabilizes the first level and the order of g is s times the least
/// common multiple of the orders of the sections of g^s.
///
/// Re-entering a word already on the current recursion path means the
/// section recursion cycles, so the computation stops with `RecursionLimit`
/// rather than diverge.
pub fn element_order(group: &SpinalGroup, g: &Word, limits: &OrderLimits) -> Result<OrderResult> {
    let mut trace = Vec::new();
    let mut on_path = HashSet::new();
    let order = order_rec(group, g, 0, limits, &mut on_path, &mut trace)?;
    Ok(OrderResult {
        order,
        trace,
        q_power: divides_power_of(order, group.q() as u64),
    })
}

fn order_rec(
    group: &SpinalGroup,
    g: &Word,
    depth: usize,
    limits: &OrderLimits,
    on_path: &mut HashSet<OrderKey>,
    trace: &mut Vec<TraceStep>,
) -> Result<u64> {
    let data = &group.data;
    let w = cyclic_conjugate(g, data)?;
    if w.is_empty() {
        return Ok(1);
    }
    if w.len() == 1 {
        return Ok(match w.letters[0] {
            Letter::A(x) => data.a.elem_order(x),
            Letter::B(x) => data.b.elem_order(x),
        });
    }
    let key = order_key(group, &w);
    if let Some(hit) = group.order_memo.get(&key) {
        return Ok(*hit);
    }
    if depth >= limits.max_depth {
        return Err(Error::RecursionLimit(limits.max_depth));
    }
    if !on_path.insert(key.clone()) {
        return Err(Error::RecursionLimit(limits.max_depth));
    }
    let s = data.a.elem_order(group.root_permutation(&w));
    let blown = w.len().saturating_mul(s as usize);
    if blown > limits.max_len {
        on_path.remove(&key);
        return Err(Error::LengthBlowup {
            len: blown,
            limit: limits.max_len,
        });
    }
    trace.push(TraceStep {
        offset: w.offset,
        word: w.clone(),
        s,
    });
    let ws = reduce(&power(&w, s as usize), data);
    let (_, sections) = group.psi(&ws);
    let mut acc: u64 = 1;
    for sec in &sections {
        match order_rec(group, sec, depth + 1, limits, on_path, trace) {
            Ok(n) => acc = lcm_checked(acc, n)?,
            Err(e) => {
                on_path.remove(&key);
                return Err(e);
            }
        }
    }
    on_path.remove(&key);
    let total = s
        .checked_mul(acc)
        .ok_or_else(|| Error::Internal("element order overflows u64".into()))?;
    group.order_memo.insert(key, total);
    Ok(total)
}

/// Largest element order per radius: entry m is the maximal order among
/// all ball elements within radius m. Nondecreasing by construction.
pub fn period_table(group: &SpinalGroup, ball: &Ball, limits: &OrderLimits) -> Result<Vec<u64>> {
    use rayon::prelude::*;
    let orders = ball
        .reps
        .par_iter()
        .map(|w| element_order(group, w, limits).map(|r| r.order))
        .collect::<Result<Vec<u64>>>()?;
    let mut table = vec![1u64; ball.n + 1];
    for (i, &ord) in orders.iter().enumerate() {
        let m = ball.radius_of[i];
        if ord > table[m] {
            table[m] = ord;
        }
    }
    for m in 1..table.len() {
        table[m] = table[m].max(table[m - 1]);
    }
    Ok(table)
}

fn check_scheme_covers(group: &SpinalGroup, scheme: &WeightScheme) -> Result<()> {
    if scheme.r < group.r_hom() {
        return Err(Error::PreconditionViolated(format!(
            "weight scheme kills letters within {} steps but the sequence is only {}-homogeneous",
            scheme.r,
            group.r_hom()
        )));
    }
    Ok(())
}

/// Least common multiple of the orders of every element of weight at most 1,
/// over every canonical shift. Words of length four or more never qualify:
/// a reduced word of length four weighs at least 2τ_0 + 2τ_1 = 2η^{r-1} > 1,
/// so only single letters and alternating pairs and triples are inspected.
pub fn shadow_constant(
    group: &SpinalGroup,
    scheme: &WeightScheme,
    limits: &OrderLimits,
) -> Result<u64> {
    check_scheme_covers(group, scheme)?;
    let data = &group.data;
    let a_elems: Vec<Elem> = data.a.elements().filter(|&x| x != data.a.identity()).collect();
    let b_elems: Vec<Elem> = data.b.elements().filter(|&x| x != data.b.identity()).collect();
    let mut c: u64 = 1;
    for o in group.omega.canonical_shifts() {
        let mut candidates: Vec<Vec<Letter>> = Vec::new();
        for &x in &a_elems {
            candidates.push(vec![Letter::A(x)]);
        }
        for &y in &b_elems {
            candidates.push(vec![Letter::B(y)]);
        }
        for &x in &a_elems {
            for &y in &b_elems {
                candidates.push(vec![Letter::A(x), Letter::B(y)]);
                candidates.push(vec![Letter::B(y), Letter::A(x)]);
                for &z in &a_elems {
                    candidates.push(vec![Letter::A(x), Letter::B(y), Letter::A(z)]);
                }
                for &z in &b_elems {
                    candidates.push(vec![Letter::B(y), Letter::A(x), Letter::B(z)]);
                }
            }
        }
        for letters in candidates {
            let w = Word::new(letters, o);
            if weight(&w, scheme, data, &group.omega)? <= 1.0 + WEIGHT_EPS {
                let ord = element_order(group, &w, limits)?.order;
                c = lcm_checked(c, ord)?;
            }
        }
    }
    Ok(c)
}

/// Recursion shadow of the order computation under a weight scheme: leaves
/// are cyclically reduced words of weight at most 1, internal nodes record
/// the root permutation order s and carry the sections of w^s.
#[derive(Clone, Debug)]
pub enum PeriodShadow {
    Leaf { word: Word, weight: f64 },
    Node { s: u64, children: Vec<PeriodShadow> },
}

impl PeriodShadow {
    pub fn depth(&self) -> usize {
        match self {
            PeriodShadow::Leaf { .. } => 0,
            PeriodShadow::Node { children, .. } => {
                1 + children.iter().map(|c| c.depth()).max().unwrap_or(0)
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PeriodShadow::Leaf { .. } => 1,
            PeriodShadow::Node { children, .. } => children.iter().map(|c| c.leaf_count()).sum(),
        }
    }
}

/// Builds the shadow of `g`. Requires the root action to be regular, so
/// that the order of every root permutation divides the arity, and a weight
/// scheme that covers the homogeneity radius.
pub fn period_shadow(
    group: &SpinalGroup,
    g: &Word,
    scheme: &WeightScheme,
) -> Result<PeriodShadow> {
    if !group.data.regular_root {
        return Err(Error::PreconditionViolated(
            "shadow certificates need a regular root action".into(),
        ));
    }
    check_scheme_covers(group, scheme)?;
    shadow_rec(group, g, scheme, 0)
}

fn shadow_rec(
    group: &SpinalGroup,
    g: &Word,
    scheme: &WeightScheme,
    depth: usize,
) -> Result<PeriodShadow> {
    if depth > 512 {
        return Err(Error::Internal("shadow recursion exceeded depth 512".into()));
    }
    let data = &group.data;
    let w = cyclic_conjugate(g, data)?;
    let wt = weight(&w, scheme, data, &group.omega)?;
    if wt <= 1.0 + WEIGHT_EPS {
        return Ok(PeriodShadow::Leaf { word: w, weight: wt });
    }
    let s = data.a.elem_order(group.root_permutation(&w));
    let ws = reduce(&power(&w, s as usize), data);
    let (_, sections) = group.psi(&ws);
    let children = sections
        .iter()
        .map(|sec| shadow_rec(group, sec, scheme, depth + 1))
        .collect::<Result<Vec<_>>>()?;
    Ok(PeriodShadow::Node { s, children })
}

#[derive(Clone, Debug)]
pub struct ShadowReport {
    pub shadow: PeriodShadow,
    pub depth: usize,
    /// lcm of the orders of all weight-1 elements at all canonical shifts.
    pub constant: u64,
    pub order: u64,
    /// constant * q^depth; the order always divides it.
    pub bound: u64,
    pub divides: bool,
}

pub fn shadow_report(
    group: &SpinalGroup,
    g: &Word,
    scheme: &WeightScheme,
    limits: &OrderLimits,
) -> Result<ShadowReport> {
    let shadow = period_shadow(group, g, scheme)?;
    let depth = shadow.depth();
    let constant = shadow_constant(group, scheme, limits)?;
    let order = element_order(group, g, limits)?.order;
    let mut bound = constant;
    for _ in 0..depth {
        bound = bound
            .checked_mul(group.q() as u64)
            .ok_or_else(|| Error::Internal("shadow bound overflows u64".into()))?;
    }
    Ok(ShadowReport {
        shadow,
        depth,
        constant,
        order,
        bound,
        divides: bound % order == 0,
    })
}

/// The chain g, F_1, F_11, ... obtained by repeatedly passing to the first
/// section of the p-th power, recorded together with the raw A/B projection
/// pair of every link.
#[derive(Clone, Debug)]
pub struct PeriodSequence {
    /// Cyclically reduced links, starting with the input word.
    pub chain: Vec<Word>,
    /// Raw projections (product of A-letters, product of B-letters).
    pub rho: Vec<(Elem, Elem)>,
    /// Number of p-th power steps taken.
    pub t: usize,
    /// Last link: length at most one, or a level-one stabilizer.
    pub terminal: Word,
}

/// Prime arity only, with the root group cyclic and generated by the
/// standard cycle. Every nontrivial root permutation is then a full
/// p-cycle, the p sections of F^p are conjugate, and each step divides
/// the order by exactly p: ord(g) = p^t * ord(terminal).
pub fn period_sequence(
    group: &SpinalGroup,
    g: &Word,
    limits: &OrderLimits,
) -> Result<PeriodSequence> {
    let data = &group.data;
    let q = group.q();
    if !is_prime(q) {
        return Err(Error::PreconditionViolated(
            "period sequences need prime arity".into(),
        ));
    }
    if data.a.order() != q {
        return Err(Error::PreconditionViolated(
            "period sequences need the root group cyclic of order equal to the arity".into(),
        ));
    }
    let has_cycle = data
        .a
        .elements()
        .any(|x| (0..q).all(|i| data.action.apply(x, i) == (i + 1) % q));
    if !has_cycle {
        return Err(Error::PreconditionViolated(
            "period sequences need the standard cycle in the root group".into(),
        ));
    }
    let mut cur = cyclic_conjugate(g, data)?;
    let mut chain = vec![cur.clone()];
    let mut rho = vec![raw_projections(&cur, data)];
    loop {
        if cur.len() <= 1 || group.root_permutation(&cur) == data.a.identity() {
            break;
        }
        if chain.len() > limits.max_depth {
            return Err(Error::RecursionLimit(limits.max_depth));
        }
        let blown = cur.len().saturating_mul(q);
        if blown > limits.max_len {
            return Err(Error::LengthBlowup {
                len: blown,
                limit: limits.max_len,
            });
        }
        let wp = reduce(&power(&cur, q), data);
        let (_, sections) = group.psi(&wp);
        cur = cyclic_conjugate(&sections[0], data)?;
        chain.push(cur.clone());
        rho.push(raw_projections(&cur, data));
    }
    Ok(PeriodSequence {
        terminal: cur,
        t: chain.len() - 1,
        chain,
        rho,
    })
}

#[derive(Clone, Debug)]
pub struct ChiTraceViolation {
    pub word: Word,
    pub detail: String,
}

/// Checks the projection-pair transition rules along the order recursion.
/// Arity 2 with both finite groups commutative, so the projection pair of
/// a word determines its image in G_A x G_B.
///
/// At a squaring node (root permutation nontrivial, amounting to an odd
/// number of A-letters) both sections of w^2 pick up every B-letter of w in
/// each coordinate, hence carry the pair (im(β), β) with β the B-projection
/// of w. At a stabilizing node the sections split the B-letters by position
/// parity, which forces the crossing rule: the A-projection of each section
/// is the image of the other section's B-projection. When the stabilizing
/// node was itself produced by a squaring step the split degenerates to the
/// two pairs (1, β) and (im(β), 1), or to two equal sections when β = 1.
pub fn check_chi_trace(group: &SpinalGroup, g: &Word) -> Result<Vec<ChiTraceViolation>> {
    let data = &group.data;
    if group.q() != 2 || !data.a.is_abelian() || !data.b.is_abelian() {
        return Err(Error::PreconditionViolated(
            "trace rules are stated for arity 2 with commutative root and spine groups".into(),
        ));
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let w = cyclic_conjugate(g, data)?;
    chi_rec(group, &w, false, &mut seen, &mut out)?;
    Ok(out)
}

fn chi_rec(
    group: &SpinalGroup,
    w: &Word,
    via_squaring: bool,
    seen: &mut HashSet<(usize, Vec<Letter>, bool)>,
    out: &mut Vec<ChiTraceViolation>,
) -> Result<()> {
    if w.len() <= 1 {
        return Ok(());
    }
    let key = (
        group.omega.canonical_shift(w.offset),
        w.letters.clone(),
        via_squaring,
    );
    if !seen.insert(key) {
        return Ok(());
    }
    let data = &group.data;
    let id_a = data.a.identity();
    let id_b = data.b.identity();
    let (pa, pb) = raw_projections(w, data);
    let epi = &data.epis[group.omega.at(w.offset + 1) as usize];
    if pa != id_a {
        let w2 = reduce(&concat(w, w), data);
        let (_, sections) = group.psi(&w2);
        let expected = (epi.apply(pb), pb);
        for sec in &sections {
            if raw_projections(sec, data) != expected {
                out.push(ChiTraceViolation {
                    word: w.clone(),
                    detail: format!(
                        "square section {} does not carry the pair ({}, {})",
                        sec.format(data),
                        data.a.name(expected.0),
                        data.b.name(expected.1)
                    ),
                });
            }
        }
        for sec in &sections {
            let cc = cyclic_conjugate(sec, data)?;
            chi_rec(group, &cc, true, seen, out)?;
        }
    } else {
        let (_, sections) = group.psi(w);
        let chis: Vec<(Elem, Elem)> = sections.iter().map(|s| raw_projections(s, data)).collect();
        if chis[0].0 != epi.apply(chis[1].1) || chis[1].0 != epi.apply(chis[0].1) {
            out.push(ChiTraceViolation {
                word: w.clone(),
                detail: "stabilizer split breaks the crossing rule".into(),
            });
        }
        if via_squaring {
            if pb != id_b {
                let lhs = (id_a, pb);
                let rhs = (epi.apply(pb), id_b);
                let ok = (chis[0] == lhs && chis[1] == rhs)
                    || (chis[0] == rhs && chis[1] == lhs);
                if !ok {
                    out.push(ChiTraceViolation {
                        word: w.clone(),
                        detail: "squared stabilizer does not split into (1, b) and (im b, 1)"
                            .into(),
                    });
                }
            } else if chis[0] != chis[1] {
                out.push(ChiTraceViolation {
                    word: w.clone(),
                    detail: "squared stabilizer with trivial B-projection has unequal sections"
                        .into(),
                });
            }
        }
        for sec in &sections {
            let cc = cyclic_conjugate(sec, data)?;
            chi_rec(group, &cc, false, seen, out)?;
        }
    }
    Ok(())
}

/// A slot between two copies of the conjugating letter: either a decided
/// generator or a set still to be matched.
#[derive(Clone, Debug)]
enum BSlot {
    Fixed(Elem),
    Set(Vec<Elem>),
}

impl BSlot {
    fn contains(&self, x: Elem) -> bool {
        match self {
            BSlot::Fixed(y) => *y == x,
            BSlot::Set(v) => v.binary_search(&x).is_ok(),
        }
    }

    fn iter(&self) -> Box<dyn Iterator<Item = Elem> + '_> {
        match self {
            BSlot::Fixed(y) => Box::new(std::iter::once(*y)),
            BSlot::Set(v) => Box::new(v.iter().copied()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DoublingHypotheses {
    /// Order-2 root letter sending vertex 1 to vertex q.
    pub a: Elem,
    /// Positions where the sequence returns to its first epimorphism,
    /// within one inspection window.
    pub returns: Vec<usize>,
    pub max_gap: usize,
}

fn first_epi_returns(group: &SpinalGroup, up_to: usize) -> Vec<usize> {
    if up_to == 0 {
        return Vec::new();
    }
    let first = group.omega.at(1);
    let mut out = vec![1];
    for i in 2..=up_to {
        if group.omega.at(i) == first && group.omega.at(i - 1) != first {
            out.push(i);
        }
    }
    out
}

/// The first `count` return positions. The window check in
/// `doubling_hypotheses` guarantees one return per period, so the scan is
/// bounded.
fn return_positions(group: &SpinalGroup, count: usize) -> Result<Vec<usize>> {
    let cap = group.omega.effective_prefix_len() + (count + 2) * group.omega.period_len() + 2;
    let all = first_epi_returns(group, cap);
    if all.len() < count {
        return Err(Error::HypothesesViolated(format!(
            "only {} return positions within {} levels, need {}",
            all.len(),
            cap,
            count
        )));
    }
    Ok(all[..count].to_vec())
}

fn coset_of(data: &SpinalData, epi_idx: u16, a: Elem) -> Vec<Elem> {
    let epi = &data.epis[epi_idx as usize];
    data.b.elements().filter(|&x| epi.apply(x) == a).collect()
}

fn check_hypotheses_for(group: &SpinalGroup, a: Elem) -> Result<DoublingHypotheses> {
    let data = &group.data;
    let omega = &group.omega;
    let window = omega.effective_prefix_len() + 2 * omega.period_len();
    let returns = first_epi_returns(group, window);
    if returns.len() < 2 {
        return Err(Error::HypothesesViolated(
            "the first epimorphism never recurs".into(),
        ));
    }
    if *returns.last().unwrap() <= omega.effective_prefix_len() {
        return Err(Error::HypothesesViolated(
            "the first epimorphism does not recur in the periodic part".into(),
        ));
    }
    let max_gap = returns.windows(2).map(|w| w[1] - w[0]).max().unwrap();
    if max_gap > group.r_hom() {
        return Err(Error::HypothesesViolated(format!(
            "return gap {} exceeds the homogeneity radius {}",
            max_gap,
            group.r_hom()
        )));
    }
    let base = coset_of(data, omega.at(1), a);
    if base.is_empty() {
        return Err(Error::HypothesesViolated(
            "the chosen root letter is not an epimorphic image".into(),
        ));
    }
    for i in 1..=window {
        let other = coset_of(data, omega.at(i), a);
        if !base.iter().any(|x| other.binary_search(x).is_ok()) {
            return Err(Error::HypothesesViolated(format!(
                "preimage cosets at positions 1 and {} are disjoint",
                i
            )));
        }
    }
    let first_kernel = &data.epis[omega.at(1) as usize];
    for &j in &returns[1..] {
        let before = coset_of(data, omega.at(j - 1), a);
        if !before.iter().any(|&x| first_kernel.in_kernel(x)) {
            return Err(Error::HypothesesViolated(format!(
                "the first kernel misses the preimage coset at position {}",
                j - 1
            )));
        }
    }
    Ok(DoublingHypotheses { a, returns, max_gap })
}

/// Validates the doubling hypotheses with the smallest admissible root
/// letter.
pub fn doubling_hypotheses(group: &SpinalGroup) -> Result<DoublingHypotheses> {
    let data = &group.data;
    let q = group.q();
    let a = data
        .a
        .elements()
        .find(|&x| data.a.elem_order(x) == 2 && data.action.apply(x, 0) == q - 1)
        .ok_or_else(|| {
            Error::HypothesesViolated(
                "no order-2 root letter sending vertex 1 to vertex q".into(),
            )
        })?;
    check_hypotheses_for(group, a)
}

/// Checks the input shape: alternating pairs (a, b_i) with k odd, sitting
/// at a return position, all b_i in the preimage coset of a except exactly
/// one kernel letter. Returns (a, the b-slots, the kernel position).
fn split_seed(group: &SpinalGroup, g: &Word) -> Result<(Elem, Vec<Elem>, usize)> {
    let data = &group.data;
    let q = group.q();
    if g.len() < 2 || g.len() % 2 != 0 {
        return Err(Error::HypothesesViolated(
            "doubling input must consist of pairs (a, b)".into(),
        ));
    }
    let a = match g.letters[0] {
        Letter::A(x) => x,
        _ => {
            return Err(Error::HypothesesViolated(
                "doubling input must start with its root letter".into(),
            ))
        }
    };
    if data.a.elem_order(a) != 2 || data.action.apply(a, 0) != q - 1 {
        return Err(Error::HypothesesViolated(
            "the root letter must have order 2 and send vertex 1 to vertex q".into(),
        ));
    }
    let mut slots = Vec::with_capacity(g.len() / 2);
    for pair in g.letters.chunks(2) {
        match (pair[0], pair[1]) {
            (Letter::A(x), Letter::B(y)) if x == a => slots.push(y),
            _ => {
                return Err(Error::HypothesesViolated(
                    "doubling input must alternate the same root letter with spine letters"
                        .into(),
                ))
            }
        }
    }
    if slots.len() % 2 == 0 {
        return Err(Error::HypothesesViolated(
            "doubling input needs an odd number of pairs".into(),
        ));
    }
    let pos = g.offset + 1;
    let returns = first_epi_returns(group, pos);
    if *returns.last().unwrap() != pos {
        return Err(Error::HypothesesViolated(format!(
            "offset {} is not one below a return position",
            g.offset
        )));
    }
    let epi = &group.data.epis[group.omega.at(pos) as usize];
    let mut kernel_at = None;
    for (i, &b) in slots.iter().enumerate() {
        if epi.in_kernel(b) {
            if kernel_at.replace(i).is_some() {
                return Err(Error::HypothesesViolated(
                    "more than one spine letter lies in the kernel".into(),
                ));
            }
        } else if epi.apply(b) != a {
            return Err(Error::HypothesesViolated(
                "spine letters must map to the root letter or lie in the kernel".into(),
            ));
        }
    }
    let kernel_at = kernel_at.ok_or_else(|| {
        Error::HypothesesViolated("exactly one spine letter must lie in the kernel".into())
    })?;
    Ok((a, slots, kernel_at))
}

/// One doubling step. The input sits one below a return position j_hi and
/// the output one below the previous return position j_lo, with its order
/// at least doubled: the square of the output stabilizes the level
/// j_hi - j_lo and one of its sections at that level is the input element.
///
/// Each lift from level t to t-1 interleaves the preimage coset of the
/// root letter under ω_t before every slot. At the bottom the unique kernel
/// slot b is replaced by x1, kernel, x2 with x1 x2 = b, the slot list is
/// split in half, and every column of the two halves is resolved to its
/// smallest common element.
pub fn lysionok_step(group: &SpinalGroup, g: &Word) -> Result<Word> {
    let data = &group.data;
    let (a, seed_slots, _) = split_seed(group, g)?;
    check_hypotheses_for(group, a)?;
    let j_hi = g.offset + 1;
    let below = first_epi_returns(group, j_hi - 1);
    let j_lo = *below.last().ok_or_else(|| {
        Error::HypothesesViolated("no return position below the input".into())
    })?;
    let mut slots: Vec<BSlot> = seed_slots.into_iter().map(BSlot::Fixed).collect();
    for t in (j_lo..=g.offset).rev() {
        let coset = coset_of(data, group.omega.at(t), a);
        let mut lifted = Vec::with_capacity(slots.len() * 2);
        for slot in slots {
            lifted.push(BSlot::Set(coset.clone()));
            lifted.push(slot);
        }
        slots = lifted;
    }
    let bottom = &data.epis[group.omega.at(j_lo) as usize];
    let kernel_pos = slots
        .iter()
        .position(|s| matches!(s, BSlot::Fixed(b) if bottom.in_kernel(*b)))
        .ok_or_else(|| Error::Internal("lifted word lost its kernel slot".into()))?;
    let b_u = match slots[kernel_pos] {
        BSlot::Fixed(b) => b,
        _ => unreachable!(),
    };
    let coset1 = coset_of(data, group.omega.at(j_lo), a);
    let (x1, x2) = coset1
        .iter()
        .map(|&x| (x, data.b.mul(data.b.inv(x), b_u)))
        .find(|&(_, y)| y != data.b.identity())
        .ok_or_else(|| {
            Error::HypothesesViolated("kernel letter does not factor over the preimage coset".into())
        })?;
    let kernel_set: Vec<Elem> = bottom
        .kernel()
        .iter()
        .copied()
        .filter(|&x| x != data.b.identity())
        .collect();
    if kernel_set.is_empty() {
        return Err(Error::HypothesesViolated("the first kernel is trivial".into()));
    }
    slots.splice(
        kernel_pos..kernel_pos + 1,
        [BSlot::Fixed(x1), BSlot::Set(kernel_set), BSlot::Fixed(x2)],
    );
    debug_assert_eq!(slots.len() % 2, 0);
    let half = slots.len() / 2;
    let mut letters = Vec::with_capacity(slots.len());
    for j in 0..half {
        let pick = slots[j]
            .iter()
            .find(|&x| slots[half + j].contains(x))
            .ok_or(Error::ColumnMatchFailed(j))?;
        letters.push(Letter::A(a));
        letters.push(Letter::B(pick));
    }
    Ok(Word::new(letters, j_lo - 1))
}

/// Iterates the doubling step. With no seed the word a k starts one below
/// the (steps+1)-th return position, k the smallest nontrivial element of
/// the first kernel, and every step at least doubles the order while the
/// length grows by the pair count 2^{gap-1} k + 1 per step.
pub fn lysionok_build(group: &SpinalGroup, steps: usize, seed: Option<&Word>) -> Result<Word> {
    let hyp = doubling_hypotheses(group)?;
    let data = &group.data;
    let mut g = match seed {
        Some(w) => {
            let w = reduce(w, data);
            split_seed(group, &w)?;
            w
        }
        None => {
            let returns = return_positions(group, steps + 1)?;
            let start = returns[steps];
            let first_kernel = &data.epis[group.omega.at(1) as usize];
            let k0 = first_kernel
                .kernel()
                .iter()
                .copied()
                .find(|&x| x != data.b.identity())
                .ok_or_else(|| {
                    Error::HypothesesViolated("the first kernel is trivial".into())
                })?;
            Word::new(vec![Letter::A(hyp.a), Letter::B(k0)], start - 1)
        }
    };
    for _ in 0..steps {
        g = lysionok_step(group, &g)?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::{divides_power_of, gcd, lcm_checked};

    #[test]
    fn arithmetic_helpers() {
        assert_eq!(gcd(12, 18), 6);
        assert_eq!(lcm_checked(4, 6).unwrap(), 12);
        assert!(lcm_checked(u64::MAX, 2).is_err());
        assert!(divides_power_of(16, 2));
        assert!(divides_power_of(12, 6));
        assert!(!divides_power_of(12, 2));
        assert!(divides_power_of(1, 3));
    }
}
