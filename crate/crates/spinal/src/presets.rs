//! Built-in group data: the arity-2 group with the Klein four-group spine,
//! its prime-arity generalization, and the arity-3 group whose spine is
//! (Z/3)^6 semidirect (Z/2)^2 with twelve kernels that cover only jointly.

use crate::bounds::is_prime;
use crate::error::{Error, Result};
use crate::finite_algebra::{Elem, FiniteGroup, SpinalData};
use crate::omega::OmegaSequence;

/// Composes image arrays into a multiplication table: entry (i, j) is the
/// element whose permutation is perm_i after perm_j.
fn table_from_perms(perms: &[Vec<u8>]) -> Result<Vec<Vec<Elem>>> {
    let n = perms.len();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let composed: Vec<u8> = (0..perms[0].len())
                .map(|v| perms[i][perms[j][v] as usize])
                .collect();
            let k = perms
                .iter()
                .position(|p| *p == composed)
                .ok_or_else(|| Error::ValidationError("permutations are not closed".into()))?;
            row.push(k as Elem);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Arity 2: root group Z/2, spine the Klein four-group {1, b, c, d}, and
/// the three epimorphisms killing d, c, b in turn. Default sequence cycles
/// through all three, which is 3-homogeneous.
pub fn grigorchuk2() -> Result<(SpinalData, OmegaSequence)> {
    let a = FiniteGroup::build(
        vec!["1".into(), "a".into()],
        vec![vec![0, 1], vec![1, 0]],
    )?;
    let b = FiniteGroup::build(
        vec!["1".into(), "b".into(), "c".into(), "d".into()],
        vec![
            vec![0, 1, 2, 3],
            vec![1, 0, 3, 2],
            vec![2, 3, 0, 1],
            vec![3, 2, 1, 0],
        ],
    )?;
    let epis = vec![
        ("0".to_string(), vec![0, 1, 1, 0]),
        ("1".to_string(), vec![0, 1, 0, 1]),
        ("2".to_string(), vec![0, 0, 1, 1]),
    ];
    let data = SpinalData::new(a, vec![vec![0, 1], vec![1, 0]], b, epis)?;
    let omega = OmegaSequence::new(vec![], vec![0, 1, 2])?;
    Ok((data, omega))
}

/// Prime arity p: root group Z/p acting by rotation, spine (Z/p)^2, and
/// p+1 epimorphisms (x, y) -> x + ky for k < p plus (x, y) -> y. Any p+1
/// consecutive positions of the default sequence exhaust all kernels.
pub fn grigorchuk_p(p: usize) -> Result<(SpinalData, OmegaSequence)> {
    if !is_prime(p) {
        return Err(Error::ValidationError(format!("{} is not prime", p)));
    }
    let a_names: Vec<String> = (0..p)
        .map(|j| match j {
            0 => "1".to_string(),
            1 => "a".to_string(),
            _ => format!("a{}", j),
        })
        .collect();
    let a_rows: Vec<Vec<Elem>> = (0..p)
        .map(|i| (0..p).map(|j| ((i + j) % p) as Elem).collect())
        .collect();
    let perms: Vec<Vec<u8>> = (0..p)
        .map(|j| (0..p).map(|v| ((v + j) % p) as u8).collect())
        .collect();
    let a = FiniteGroup::build(a_names, a_rows)?;

    let idx = |x: usize, y: usize| x * p + y;
    let b_names: Vec<String> = (0..p * p)
        .map(|i| {
            if i == 0 {
                "1".to_string()
            } else {
                format!("b{}{}", i / p, i % p)
            }
        })
        .collect();
    let b_rows: Vec<Vec<Elem>> = (0..p * p)
        .map(|i| {
            let (x1, y1) = (i / p, i % p);
            (0..p * p)
                .map(|j| {
                    let (x2, y2) = (j / p, j % p);
                    idx((x1 + x2) % p, (y1 + y2) % p) as Elem
                })
                .collect()
        })
        .collect();
    let b = FiniteGroup::build(b_names, b_rows)?;

    let mut epis = Vec::with_capacity(p + 1);
    for k in 0..p {
        let map: Vec<Elem> = (0..p * p)
            .map(|i| ((i / p + k * (i % p)) % p) as Elem)
            .collect();
        epis.push((k.to_string(), map));
    }
    let last: Vec<Elem> = (0..p * p).map(|i| (i % p) as Elem).collect();
    epis.push((p.to_string(), last));

    let data = SpinalData::new(a, perms, b, epis)?;
    let omega = OmegaSequence::new(vec![], (0..=p as u16).collect())?;
    Ok((data, omega))
}

const HOLT_DIM: usize = 6;
const HOLT_TRITS: usize = 729;

fn holt_decode(i: usize) -> ([u8; HOLT_DIM], u8) {
    let x = (i / HOLT_TRITS) as u8;
    let mut rest = i % HOLT_TRITS;
    let mut v = [0u8; HOLT_DIM];
    for slot in v.iter_mut().rev() {
        *slot = (rest % 3) as u8;
        rest /= 3;
    }
    (v, x)
}

fn holt_encode(v: [u8; HOLT_DIM], x: u8) -> usize {
    let mut rest = 0usize;
    for &d in &v {
        rest = rest * 3 + d as usize;
    }
    x as usize * HOLT_TRITS + rest
}

/// Coordinates negated by each flip: the first flip fixes the leading pair,
/// the second fixes the middle pair, their product fixes the trailing pair.
fn holt_sign(x: u8, w: [u8; HOLT_DIM]) -> [u8; HOLT_DIM] {
    let mut out = w;
    if x & 1 != 0 {
        for slot in out.iter_mut().take(6).skip(2) {
            *slot = (3 - *slot) % 3;
        }
    }
    if x & 2 != 0 {
        for k in [0, 1, 4, 5] {
            out[k] = (3 - out[k]) % 3;
        }
    }
    out
}

fn holt_name(i: usize) -> String {
    let (v, x) = holt_decode(i);
    let suffix = ["", "x12", "x34", "x56"][x as usize];
    if v == [0; HOLT_DIM] {
        if x == 0 {
            "1".to_string()
        } else {
            suffix.to_string()
        }
    } else {
        let digits: String = v.iter().map(|d| char::from(b'0' + d)).collect();
        format!("b{}{}", digits, suffix)
    }
}

/// Maps a quotient of order 6 onto the symmetric root group: the smallest
/// order-3 element and the smallest order-2 element are sent to their
/// counterparts and products follow the normal form. A quotient that is
/// not symmetric fails the later homomorphism check.
fn symmetric_quotient_map(
    b: &FiniteGroup,
    kernel: &[Elem],
    a: &FiniteGroup,
) -> Result<Vec<Elem>> {
    let mut mask = vec![false; b.order()];
    for &x in kernel {
        mask[x as usize] = true;
    }
    let (q, proj) = b.quotient(&mask)?;
    if q.order() != a.order() {
        return Err(Error::ValidationError(format!(
            "quotient has order {}, root group has {}",
            q.order(),
            a.order()
        )));
    }
    let find = |g: &FiniteGroup, ord: u64| {
        g.elements()
            .find(|&x| g.elem_order(x) == ord)
            .ok_or_else(|| Error::ValidationError(format!("no element of order {}", ord)))
    };
    let (rho, sigma) = (find(&q, 3)?, find(&q, 2)?);
    let (r3, t2) = (find(a, 3)?, find(a, 2)?);
    let mut to_a = vec![None; q.order()];
    for i in 0..3u64 {
        for j in 0..2u64 {
            let src = q.mul(q.power(rho, i), q.power(sigma, j));
            let dst = a.mul(a.power(r3, i), a.power(t2, j));
            if to_a[src as usize].replace(dst).is_some() {
                return Err(Error::ValidationError("quotient is not symmetric".into()));
            }
        }
    }
    Ok(proj
        .iter()
        .map(|&c| to_a[c as usize].expect("all cosets reached"))
        .collect())
}

/// Arity 3: root group the symmetric group on the three vertices, spine
/// (Z/3)^6 extended by two commuting sign flips, of order 2916. The twelve
/// kernels each drop one basis direction or diagonal; none is redundant,
/// so the default sequence through all twelve is exactly 12-homogeneous.
pub fn holt() -> Result<(SpinalData, OmegaSequence)> {
    let a_names: Vec<String> = ["1", "r", "r2", "t12", "t13", "t23"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let perms: Vec<Vec<u8>> = vec![
        vec![0, 1, 2],
        vec![1, 2, 0],
        vec![2, 0, 1],
        vec![1, 0, 2],
        vec![2, 1, 0],
        vec![0, 2, 1],
    ];
    let a = FiniteGroup::build(a_names, table_from_perms(&perms)?)?;

    let order = 4 * HOLT_TRITS;
    let b_names: Vec<String> = (0..order).map(holt_name).collect();
    let b_rows: Vec<Vec<Elem>> = (0..order)
        .map(|i| {
            let (v, x) = holt_decode(i);
            (0..order)
                .map(|j| {
                    let (w, y) = holt_decode(j);
                    let sw = holt_sign(x, w);
                    let mut sum = [0u8; HOLT_DIM];
                    for k in 0..HOLT_DIM {
                        sum[k] = (v[k] + sw[k]) % 3;
                    }
                    holt_encode(sum, x ^ y) as Elem
                })
                .collect()
        })
        .collect();
    let b = FiniteGroup::build(b_names, b_rows)?;

    let kernel_gens: [[&str; 6]; 12] = [
        ["b100000", "b001000", "b000100", "b000010", "b000001", "x12"],
        ["b100000", "b010000", "b001000", "b000010", "b000001", "x34"],
        ["b100000", "b010000", "b001000", "b000100", "b000010", "x56"],
        ["b010000", "b001000", "b000100", "b000010", "b000001", "x12"],
        ["b100000", "b010000", "b000100", "b000010", "b000001", "x34"],
        ["b100000", "b010000", "b001000", "b000100", "b000001", "x56"],
        ["b110000", "b001000", "b000100", "b000010", "b000001", "x12"],
        ["b100000", "b010000", "b001100", "b000010", "b000001", "x34"],
        ["b100000", "b010000", "b001000", "b000100", "b000011", "x56"],
        ["b120000", "b001000", "b000100", "b000010", "b000001", "x12"],
        ["b100000", "b010000", "b001200", "b000010", "b000001", "x34"],
        ["b100000", "b010000", "b001000", "b000100", "b000012", "x56"],
    ];
    let mut epis = Vec::with_capacity(12);
    for (id, gens) in kernel_gens.iter().enumerate() {
        let gen_elems: Vec<Elem> = gens
            .iter()
            .map(|name| {
                b.by_name(name)
                    .ok_or_else(|| Error::ValidationError(format!("unknown generator {}", name)))
            })
            .collect::<Result<Vec<_>>>()?;
        let kernel = b.closure(&gen_elems);
        epis.push((id.to_string(), symmetric_quotient_map(&b, &kernel, &a)?));
    }

    let data = SpinalData::new(a, perms, b, epis)?;
    let omega = OmegaSequence::new(vec![], (0..12).collect())?;
    Ok((data, omega))
}

/// Resolves a preset tag: "grigorchuk2", "grigorchukP" (optionally with an
/// argument such as "grigorchukP(5)"), or "holt".
pub fn by_name(name: &str) -> Result<(SpinalData, OmegaSequence)> {
    match name.trim() {
        "grigorchuk2" => grigorchuk2(),
        "holt" => holt(),
        s if s.starts_with("grigorchukP") => {
            let rest = &s["grigorchukP".len()..];
            let p = if rest.is_empty() {
                3
            } else {
                rest.trim_matches(|c| c == '(' || c == ')')
                    .parse::<usize>()
                    .map_err(|_| Error::ParseError(format!("bad preset argument in {}", s)))?
            };
            grigorchuk_p(p)
        }
        other => Err(Error::ParseError(format!("unknown preset {}", other))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arity2_data_is_admissible() {
        let (data, omega) = grigorchuk2().unwrap();
        assert_eq!(data.q(), 2);
        assert!(omega.is_admissible(&data));
        assert!(data.regular_root);
        // each epimorphism kills exactly one of b, c, d
        for (epi, victim) in data.epis.iter().zip(["d", "c", "b"]) {
            let x = data.b.by_name(victim).unwrap();
            assert!(epi.in_kernel(x));
        }
    }

    #[test]
    fn prime_arity_data_is_admissible() {
        let (data, omega) = grigorchuk_p(3).unwrap();
        assert_eq!(data.q(), 3);
        assert_eq!(data.b.order(), 9);
        assert_eq!(data.epis.len(), 4);
        assert!(omega.is_admissible(&data));
        assert!(grigorchuk_p(4).is_err());
    }

    #[test]
    fn preset_lookup_parses_arguments() {
        assert!(by_name("grigorchuk2").is_ok());
        assert!(by_name("grigorchukP(5)").is_ok());
        assert!(by_name("nosuch").is_err());
    }
}
