//! Finite group machinery: multiplication tables, the root action on
//! {1..q}, epimorphisms from the level group onto the root group, and
//! validation of the whole defining data.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Index of an element in its group's table. Everything in scope stays
/// far below u16::MAX.
pub type Elem = u16;

/// A finite group given by its full multiplication table.
#[derive(Clone, Debug)]
pub struct FiniteGroup {
    names: Vec<String>,
    /// Row-major: `table[x * n + y]` is the product xy.
    table: Vec<Elem>,
    inv: Vec<Elem>,
    identity: Elem,
    by_name: HashMap<String, Elem>,
}

impl FiniteGroup {
    /// Builds and fully validates a group from names and a table of element
    /// indices. Associativity is checked exhaustively for orders up to 512
    /// and with Light's test above that (complete either way).
    pub fn build(names: Vec<String>, rows: Vec<Vec<Elem>>) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::ValidationError("group has no elements".into()));
        }
        let mut by_name = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::ValidationError("empty element name".into()));
            }
            if by_name.insert(name.clone(), i as Elem).is_some() {
                return Err(Error::DuplicateName(name.clone()));
            }
        }
        if rows.len() != n {
            return Err(Error::ValidationError(format!(
                "table has {} rows for {} elements",
                rows.len(),
                n
            )));
        }
        let mut table = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(Error::ValidationError("ragged multiplication table".into()));
            }
            for &e in row {
                if (e as usize) >= n {
                    return Err(Error::ValidationError(format!(
                        "table entry {} out of range",
                        e
                    )));
                }
                table.push(e);
            }
        }

        let identity = (0..n)
            .find(|&e| {
                (0..n).all(|x| {
                    table[e * n + x] == x as Elem && table[x * n + e] == x as Elem
                })
            })
            .ok_or(Error::NoIdentity)? as Elem;

        let mut inv = vec![0 as Elem; n];
        for x in 0..n {
            let found = (0..n).find(|&y| {
                table[x * n + y] == identity && table[y * n + x] == identity
            });
            match found {
                Some(y) => inv[x] = y as Elem,
                None => return Err(Error::NoInverse(names[x].clone())),
            }
        }

        let g = FiniteGroup {
            names,
            table,
            inv,
            identity,
            by_name,
        };
        g.check_associativity()?;
        Ok(g)
    }

    fn check_associativity(&self) -> Result<()> {
        let n = self.order();
        let fail = |x: usize, y: usize, z: usize| Error::NotAssociative {
            x: self.names[x].clone(),
            y: self.names[y].clone(),
            z: self.names[z].clone(),
        };
        if n <= 512 {
            for x in 0..n {
                for y in 0..n {
                    let xy = self.table[x * n + y] as usize;
                    for z in 0..n {
                        let yz = self.table[y * n + z] as usize;
                        if self.table[xy * n + z] != self.table[x * n + yz] {
                            return Err(fail(x, y, z));
                        }
                    }
                }
            }
        } else {
            // Light's test: a(xy) = (ax)y for every generator a suffices,
            // because the set of elements satisfying it for all x, y is
            // closed under multiplication and contains a generating set.
            for a in self.generating_set() {
                let a = a as usize;
                for x in 0..n {
                    let ax = self.table[a * n + x] as usize;
                    for y in 0..n {
                        let xy = self.table[x * n + y] as usize;
                        if self.table[a * n + xy] != self.table[ax * n + y] {
                            return Err(fail(a, x, y));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Greedy generating set under the raw table (no associativity assumed).
    fn generating_set(&self) -> Vec<Elem> {
        let n = self.order();
        let mut reached = vec![false; n];
        reached[self.identity as usize] = true;
        let mut members = vec![self.identity];
        let mut gens = Vec::new();
        loop {
            let missing = match (0..n).find(|&e| !reached[e]) {
                Some(e) => e as Elem,
                None => return gens,
            };
            gens.push(missing);
            let mut frontier = vec![missing];
            reached[missing as usize] = true;
            members.push(missing);
            while let Some(fresh) = frontier.pop() {
                let mut add = |e: Elem,
                               reached: &mut Vec<bool>,
                               members: &mut Vec<Elem>,
                               frontier: &mut Vec<Elem>| {
                    if !reached[e as usize] {
                        reached[e as usize] = true;
                        members.push(e);
                        frontier.push(e);
                    }
                };
                // products in both orders against everything reached so far
                for i in 0..members.len() {
                    let m = members[i];
                    add(self.mul(m, fresh), &mut reached, &mut members, &mut frontier);
                    add(self.mul(fresh, m), &mut reached, &mut members, &mut frontier);
                }
            }
        }
    }

    pub fn order(&self) -> usize {
        self.names.len()
    }

    #[inline]
    pub fn mul(&self, x: Elem, y: Elem) -> Elem {
        self.table[x as usize * self.order() + y as usize]
    }

    #[inline]
    pub fn inv(&self, x: Elem) -> Elem {
        self.inv[x as usize]
    }

    #[inline]
    pub fn identity(&self) -> Elem {
        self.identity
    }

    pub fn name(&self, x: Elem) -> &str {
        &self.names[x as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn by_name(&self, name: &str) -> Option<Elem> {
        self.by_name.get(name).copied()
    }

    pub fn elements(&self) -> std::ops::Range<Elem> {
        0..self.order() as Elem
    }

    pub fn power(&self, x: Elem, k: u64) -> Elem {
        let mut acc = self.identity;
        let mut base = x;
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    pub fn elem_order(&self, x: Elem) -> u64 {
        let mut p = x;
        let mut o = 1u64;
        while p != self.identity {
            p = self.mul(p, x);
            o += 1;
        }
        o
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        for x in 0..n as Elem {
            for y in 0..x {
                if self.mul(x, y) != self.mul(y, x) {
                    return false;
                }
            }
        }
        true
    }

    /// Subgroup generated by `gens`, as a sorted element list.
    pub fn closure(&self, gens: &[Elem]) -> Vec<Elem> {
        let mut seen = vec![false; self.order()];
        seen[self.identity as usize] = true;
        let mut members = vec![self.identity];
        let mut frontier: Vec<Elem> = Vec::new();
        for &g in gens {
            if !seen[g as usize] {
                seen[g as usize] = true;
                members.push(g);
                frontier.push(g);
            }
        }
        while let Some(fresh) = frontier.pop() {
            for i in 0..members.len() {
                let m = members[i];
                for e in [self.mul(m, fresh), self.mul(fresh, m)] {
                    if !seen[e as usize] {
                        seen[e as usize] = true;
                        members.push(e);
                        frontier.push(e);
                    }
                }
            }
        }
        members.sort_unstable();
        members
    }

    /// Quotient by a normal subgroup given as a membership mask. Elements of
    /// the quotient are named after the smallest-index coset representative.
    /// Returns the quotient and the projection map.
    pub fn quotient(&self, normal: &[bool]) -> Result<(FiniteGroup, Vec<Elem>)> {
        let n = self.order();
        if normal.len() != n || !normal[self.identity as usize] {
            return Err(Error::Internal("bad normal-subgroup mask".into()));
        }
        let sub: Vec<Elem> = (0..n as Elem).filter(|&e| normal[e as usize]).collect();
        for &g in &(0..n as Elem).collect::<Vec<_>>() {
            for &k in &sub {
                let conj = self.mul(self.mul(g, k), self.inv(g));
                if !normal[conj as usize] {
                    return Err(Error::NotHomomorphism(format!(
                        "subgroup is not normal: {}^{} escapes",
                        self.name(k),
                        self.name(g)
                    )));
                }
            }
        }
        let mut coset_rep = vec![Elem::MAX; n];
        let mut reps = Vec::new();
        for x in 0..n as Elem {
            if coset_rep[x as usize] != Elem::MAX {
                continue;
            }
            // x is the smallest element of its coset xN
            for &k in &sub {
                coset_rep[self.mul(x, k) as usize] = x;
            }
            reps.push(x);
        }
        let index_of: HashMap<Elem, Elem> = reps
            .iter()
            .enumerate()
            .map(|(i, &r)| (r, i as Elem))
            .collect();
        let qn = reps.len();
        let mut rows = vec![vec![0 as Elem; qn]; qn];
        for i in 0..qn {
            for j in 0..qn {
                let prod = self.mul(reps[i], reps[j]);
                rows[i][j] = index_of[&coset_rep[prod as usize]];
            }
        }
        let names = reps.iter().map(|&r| self.name(r).to_string()).collect();
        let quotient = FiniteGroup::build(names, rows)?;
        let proj = (0..n)
            .map(|x| index_of[&coset_rep[x]])
            .collect();
        Ok((quotient, proj))
    }

    /// Abelianization: quotient by the subgroup generated by all commutators
    /// (automatically normal). Returns the quotient and the projection.
    pub fn abelianization(&self) -> Result<(FiniteGroup, Vec<Elem>)> {
        let n = self.order() as Elem;
        let mut comms = Vec::new();
        for x in 0..n {
            for y in 0..x {
                let c = self.mul(self.mul(x, y), self.inv(self.mul(y, x)));
                if c != self.identity {
                    comms.push(c);
                }
            }
        }
        comms.sort_unstable();
        comms.dedup();
        let derived = self.closure(&comms);
        let mut mask = vec![false; self.order()];
        for e in derived {
            mask[e as usize] = true;
        }
        self.quotient(&mask)
    }
}

/// Faithful transitive action of the root group on Y = {1..q}, stored
/// 0-based internally.
#[derive(Clone, Debug)]
pub struct PermutationAction {
    q: usize,
    perms: Vec<Vec<u8>>,
}

impl PermutationAction {
    /// Validates that `perms` (0-based image arrays, one per group element)
    /// is a faithful transitive action by permutations.
    pub fn build(group: &FiniteGroup, perms: Vec<Vec<u8>>) -> Result<Self> {
        let n = group.order();
        if perms.len() != n {
            return Err(Error::ValidationError(format!(
                "{} permutations for {} elements",
                perms.len(),
                n
            )));
        }
        let q = perms
            .first()
            .map(|p| p.len())
            .ok_or_else(|| Error::ValidationError("empty action".into()))?;
        if q < 2 {
            return Err(Error::ValidationError("degree q must be at least 2".into()));
        }
        for (i, p) in perms.iter().enumerate() {
            let mut seen = vec![false; q];
            if p.len() != q {
                return Err(Error::ValidationError("ragged permutation list".into()));
            }
            for &y in p {
                if (y as usize) >= q || seen[y as usize] {
                    return Err(Error::ValidationError(format!(
                        "{} is not a permutation of 1..{}",
                        group.name(i as Elem),
                        q
                    )));
                }
                seen[y as usize] = true;
            }
        }
        let action = PermutationAction { q, perms };
        // homomorphism: (xy)(v) = x(y(v))
        for x in 0..n as Elem {
            for y in 0..n as Elem {
                let xy = group.mul(x, y);
                for v in 0..q {
                    let via = action.apply(x, action.apply(y, v));
                    if action.apply(xy, v) != via {
                        return Err(Error::NotHomomorphism(format!(
                            "action: ({} {})({}) != {}({}({}))",
                            group.name(x),
                            group.name(y),
                            v + 1,
                            group.name(x),
                            group.name(y),
                            v + 1
                        )));
                    }
                }
            }
        }
        for x in 0..n as Elem {
            for y in 0..x {
                if action.perms[x as usize] == action.perms[y as usize] {
                    return Err(Error::NotFaithful(
                        group.name(x).to_string(),
                        group.name(y).to_string(),
                    ));
                }
            }
        }
        let mut orbit = vec![false; q];
        orbit[0] = true;
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            for x in 0..n as Elem {
                let w = action.apply(x, v);
                if !orbit[w] {
                    orbit[w] = true;
                    stack.push(w);
                }
            }
        }
        if !orbit.iter().all(|&b| b) {
            return Err(Error::NotTransitive);
        }
        Ok(action)
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn apply(&self, g: Elem, y: usize) -> usize {
        self.perms[g as usize][y] as usize
    }

    pub fn perm(&self, g: Elem) -> &[u8] {
        &self.perms[g as usize]
    }

    /// True when every element's permutation has all cycles of one length.
    pub fn is_regular_root(&self, group: &FiniteGroup) -> bool {
        for g in 0..group.order() as Elem {
            let mut seen = vec![false; self.q];
            let mut len_seen = None;
            for start in 0..self.q {
                if seen[start] {
                    continue;
                }
                let mut len = 0usize;
                let mut v = start;
                loop {
                    seen[v] = true;
                    len += 1;
                    v = self.apply(g, v);
                    if v == start {
                        break;
                    }
                }
                match len_seen {
                    None => len_seen = Some(len),
                    Some(l) if l != len => return false,
                    _ => {}
                }
            }
        }
        true
    }
}

/// A surjective homomorphism from the level group onto the root group,
/// with its kernel precomputed.
#[derive(Clone, Debug)]
pub struct Epimorphism {
    id: String,
    map: Vec<Elem>,
    in_kernel: Vec<bool>,
    kernel: Vec<Elem>,
}

impl Epimorphism {
    pub fn build(id: String, b: &FiniteGroup, a: &FiniteGroup, map: Vec<Elem>) -> Result<Self> {
        let n = b.order();
        if map.len() != n {
            return Err(Error::ValidationError(format!(
                "epimorphism {} maps {} of {} elements",
                id,
                map.len(),
                n
            )));
        }
        for &img in &map {
            if (img as usize) >= a.order() {
                return Err(Error::ValidationError(format!(
                    "epimorphism {}: image out of range",
                    id
                )));
            }
        }
        for x in 0..n as Elem {
            for y in 0..n as Elem {
                let lhs = map[b.mul(x, y) as usize];
                let rhs = a.mul(map[x as usize], map[y as usize]);
                if lhs != rhs {
                    return Err(Error::NotHomomorphism(format!(
                        "epimorphism {}: at ({}, {})",
                        id,
                        b.name(x),
                        b.name(y)
                    )));
                }
            }
        }
        let mut hit = vec![false; a.order()];
        for &img in &map {
            hit[img as usize] = true;
        }
        if !hit.iter().all(|&h| h) {
            return Err(Error::NotSurjective(id));
        }
        let mut in_kernel = vec![false; n];
        let mut kernel = Vec::new();
        for x in 0..n as Elem {
            if map[x as usize] == a.identity() {
                in_kernel[x as usize] = true;
                kernel.push(x);
            }
        }
        Ok(Epimorphism {
            id,
            map,
            in_kernel,
            kernel,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    #[inline]
    pub fn apply(&self, x: Elem) -> Elem {
        self.map[x as usize]
    }

    #[inline]
    pub fn in_kernel(&self, x: Elem) -> bool {
        self.in_kernel[x as usize]
    }

    /// Kernel elements in index order, identity included.
    pub fn kernel(&self) -> &[Elem] {
        &self.kernel
    }
}

/// Quotient together with the projection onto it.
#[derive(Clone, Debug)]
pub struct Quotient {
    pub group: FiniteGroup,
    pub proj: Vec<Elem>,
}

impl Quotient {
    #[inline]
    pub fn project(&self, x: Elem) -> Elem {
        self.proj[x as usize]
    }
}

/// The complete finite defining data: root group with its action, level
/// group, and the epimorphism alphabet.
#[derive(Clone, Debug)]
pub struct SpinalData {
    pub a: FiniteGroup,
    pub action: PermutationAction,
    pub b: FiniteGroup,
    pub epis: Vec<Epimorphism>,
    pub a_ab: Quotient,
    pub b_ab: Quotient,
    pub regular_root: bool,
}

impl SpinalData {
    pub fn new(
        a: FiniteGroup,
        perms: Vec<Vec<u8>>,
        b: FiniteGroup,
        epi_maps: Vec<(String, Vec<Elem>)>,
    ) -> Result<Self> {
        let action = PermutationAction::build(&a, perms)?;
        if epi_maps.is_empty() {
            return Err(Error::ValidationError("no epimorphisms given".into()));
        }
        let mut epis = Vec::with_capacity(epi_maps.len());
        let mut ids = HashMap::new();
        for (id, map) in epi_maps {
            if ids.insert(id.clone(), ()).is_some() {
                return Err(Error::DuplicateName(id));
            }
            epis.push(Epimorphism::build(id, &b, &a, map)?);
        }
        let (a_ab_g, a_proj) = a.abelianization()?;
        let (b_ab_g, b_proj) = b.abelianization()?;
        let regular_root = action.is_regular_root(&a);
        Ok(SpinalData {
            regular_root,
            a_ab: Quotient {
                group: a_ab_g,
                proj: a_proj,
            },
            b_ab: Quotient {
                group: b_ab_g,
                proj: b_proj,
            },
            a,
            action,
            b,
            epis,
        })
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.action.q()
    }

    pub fn epi_index(&self, id: &str) -> Result<u16> {
        self.epis
            .iter()
            .position(|e| e.id() == id)
            .map(|i| i as u16)
            .ok_or_else(|| Error::UnknownEpiId(id.to_string()))
    }

    /// Union of all kernels covers G_B; intersection of all kernels is
    /// trivial. These are the data-level halves of admissibility.
    pub fn kernels_cover(&self) -> Result<()> {
        for x in 0..self.b.order() as Elem {
            if x == self.b.identity() {
                continue;
            }
            if !self.epis.iter().any(|e| e.in_kernel(x)) {
                return Err(Error::KernelsDoNotCover(self.b.name(x).to_string()));
            }
        }
        Ok(())
    }

    pub fn kernels_intersect_trivially(&self) -> Result<()> {
        for x in 0..self.b.order() as Elem {
            if x == self.b.identity() {
                continue;
            }
            if self.epis.iter().all(|e| e.in_kernel(x)) {
                return Err(Error::KernelIntersectionNontrivial(
                    self.b.name(x).to_string(),
                ));
            }
        }
        Ok(())
    }
}

/// Line-by-line validation outcome, printable as a report.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub checks: Vec<(String, bool, String)>,
}

impl ValidationReport {
    pub fn new() -> Self {
        ValidationReport { checks: Vec::new() }
    }

    pub fn push(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push((name.to_string(), pass, detail));
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|(_, p, _)| *p)
    }
}

impl Default for ValidationReport {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (name, pass, detail) in &self.checks {
            let mark = if *pass { "ok" } else { "FAIL" };
            if detail.is_empty() {
                writeln!(f, "{mark:4} {name}")?;
            } else {
                writeln!(f, "{mark:4} {name}: {detail}")?;
            }
        }
        Ok(())
    }
}

/// Re-runs the semantic checks on already-built data and reports them
/// individually. Building is strict, so on a built SpinalData this should
/// pass; it exists so `validate` can show its work and stays idempotent.
pub fn validate_spinal_data(data: &SpinalData) -> ValidationReport {
    let mut rep = ValidationReport::new();
    rep.push(
        "root group",
        true,
        format!("order {}, acting on {} points", data.a.order(), data.q()),
    );
    rep.push("level group", true, format!("order {}", data.b.order()));
    rep.push(
        "root action regular",
        true,
        if data.regular_root { "yes".into() } else { "no".into() },
    );
    for e in &data.epis {
        let ok = e.kernel().len() * data.a.order() == data.b.order();
        rep.push(
            &format!("epimorphism {}", e.id()),
            ok,
            format!("kernel size {}", e.kernel().len()),
        );
    }
    match data.kernels_cover() {
        Ok(()) => rep.push("kernels cover level group", true, String::new()),
        Err(e) => rep.push("kernels cover level group", false, e.to_string()),
    }
    match data.kernels_intersect_trivially() {
        Ok(()) => rep.push("kernel intersection trivial", true, String::new()),
        Err(e) => rep.push("kernel intersection trivial", false, e.to_string()),
    }
    rep.push(
        "abelianizations",
        true,
        format!(
            "root {} level {}",
            data.a_ab.group.order(),
            data.b_ab.group.order()
        ),
    );
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn klein() -> FiniteGroup {
        // 1, b, c, d with every product of two distinct nontrivial
        // elements giving the third
        let names = ["1", "b", "c", "d"].map(String::from).to_vec();
        let rows = vec![
            vec![0, 1, 2, 3],
            vec![1, 0, 3, 2],
            vec![2, 3, 0, 1],
            vec![3, 2, 1, 0],
        ];
        FiniteGroup::build(names, rows).unwrap()
    }

    #[test]
    fn klein_builds() {
        let g = klein();
        assert_eq!(g.identity(), 0);
        assert_eq!(g.mul(1, 2), 3);
        assert_eq!(g.inv(3), 3);
        assert!(g.is_abelian());
        assert_eq!(g.elem_order(2), 2);
    }

    #[test]
    fn broken_associativity_detected() {
        let names = ["1", "x", "y"].map(String::from).to_vec();
        // a Latin square with identity that is not a group table
        let rows = vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]];
        assert!(FiniteGroup::build(names.clone(), rows).is_ok());
        let rows = vec![vec![0, 1, 2], vec![1, 0, 2], vec![2, 2, 0]];
        assert!(FiniteGroup::build(names, rows).is_err());
    }

    #[test]
    fn lights_test_agrees_with_exhaustive() {
        // force the Light path by building a largish cyclic group twice
        let n = 600usize;
        let names: Vec<String> = (0..n).map(|i| format!("g{i}")).collect();
        let rows: Vec<Vec<Elem>> = (0..n)
            .map(|i| (0..n).map(|j| ((i + j) % n) as Elem).collect())
            .collect();
        let g = FiniteGroup::build(names, rows).unwrap();
        assert_eq!(g.order(), 600);
        assert_eq!(g.elem_order(1), 600);
    }

    #[test]
    fn quotient_collapses_klein_to_z2() {
        let g = klein();
        let mask = vec![true, true, false, false]; // {1, b}
        let (q, proj) = g.quotient(&mask).unwrap();
        assert_eq!(q.order(), 2);
        assert_eq!(proj[0], proj[1]);
        assert_ne!(proj[0], proj[2]);
        assert_eq!(proj[2], proj[3]);
    }

    #[test]
    fn closure_limit_of_generators() {
        let g = klein();
        assert_eq!(g.closure(&[1]).len(), 2);
        assert_eq!(g.closure(&[1, 2]).len(), 4);
        assert_eq!(g.closure(&[]).len(), 1);
    }
}
