//! Numeric estimates: the contraction factor η_r, triangular weight
//! schemes, growth and period exponents, and the comparison table they
//! come from.

use crate::error::{Error, Result};
use crate::words::WeightScheme;

/// Positive root of x^r + x^{r−1} + x^{r−2} − 2 in (0, 1), by bisection.
pub fn solve_eta(r: usize, tol: f64) -> f64 {
    assert!(r >= 3 && tol > 0.0);
    let p = |x: f64| x.powi(r as i32) + x.powi(r as i32 - 1) + x.powi(r as i32 - 2) - 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // p(0) = −2 < 0 < 1 = p(1); p is increasing on [0, 1]
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if p(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

const ETA_TOL: f64 = 1e-12;

/// Weight scheme for r-homogeneous sequences: τ_i = η^r + η^{r−i} − 1 for
/// i ≥ 1 and τ_0 = 1 − η^r, solving η(τ_0 + τ_i) = τ_0 + τ_{i−1} with
/// η(τ_0 + τ_1) = τ_r.
pub fn tau_values(r: usize) -> WeightScheme {
    let eta = solve_eta(r, ETA_TOL);
    let er = eta.powi(r as i32);
    let mut tau = Vec::with_capacity(r + 1);
    tau.push(1.0 - er);
    for i in 1..=r {
        tau.push(er + eta.powi((r - i) as i32) - 1.0);
    }
    WeightScheme { r, eta, tau }
}

/// All growth and period exponents for degree q and homogeneity /
/// factorability parameter r.
#[derive(Clone, Debug)]
pub struct ExponentReport {
    pub q: usize,
    pub r: usize,
    pub eta: f64,
    /// Growth exponents: γ(n) ≼ exp(n^α).
    pub alpha_eta: f64,
    pub alpha_34: f64,
    /// Defined for q = 2 only.
    pub alpha_23: Option<f64>,
    pub alpha_lower: f64,
    /// Period exponents: π(n) ≼ n^p resp. ≽ n^{p_lb}.
    pub p_eta: f64,
    pub p_34: f64,
    pub p_23: Option<f64>,
    /// Defined for prime q only.
    pub p_prime: Option<f64>,
    pub p_half: f64,
    pub p_lb: f64,
}

pub(crate) fn is_prime(n: usize) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

pub fn growth_exponents(q: usize, r: usize) -> Result<ExponentReport> {
    if q < 2 {
        return Err(Error::InvalidRange("degree q must be at least 2".into()));
    }
    if r < q + 1 {
        return Err(Error::InvalidRange(format!(
            "complete segments have length at least q+1 = {}, got r = {r}",
            q + 1
        )));
    }
    let eta = solve_eta(r, ETA_TOL);
    let lq = (q as f64).ln();
    let alpha_eta = lq / (lq - eta.ln());
    let alpha_34 = lq / (lq + (4.0f64 / 3.0).ln() / r as f64);
    let alpha_23 = (q == 2).then(|| lq / (lq + (3.0f64 / 2.0).ln() / r as f64));
    let alpha_lower = lq / (lq + 2.0f64.ln());
    let p_eta = lq / (1.0 / eta).ln();
    let p_34 = r as f64 * lq / (4.0f64 / 3.0).ln();
    let p_23 = (q == 2).then(|| r as f64 * lq / (3.0f64 / 2.0).ln());
    let p_prime = is_prime(q).then(|| (r as f64 - 1.0) * (q as f64).log2());
    Ok(ExponentReport {
        q,
        r,
        eta,
        alpha_eta,
        alpha_34,
        alpha_23,
        alpha_lower,
        p_eta,
        p_34,
        p_23,
        p_prime,
        p_half: r as f64 / 2.0,
        p_lb: 1.0 / (r as f64 - 1.0),
    })
}

/// Rounds up at three decimals, the convention the printed comparisons use.
pub fn ceil3(x: f64) -> f64 {
    (x * 1000.0).ceil() / 1000.0
}

/// One comparison row: exponent kind, degree, and the rounded α for each
/// r in 3..=10 where defined (r ≥ q+1).
#[derive(Clone, Debug)]
pub struct TableRow {
    pub q: usize,
    pub kind: RowKind,
    /// (r, rounded α) pairs.
    pub entries: Vec<(usize, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Homogeneous,
    Factorable23,
    Factorable34,
}

impl RowKind {
    pub fn label(&self) -> &'static str {
        match self {
            RowKind::Homogeneous => "homogeneous",
            RowKind::Factorable23 => "factorable-2/3",
            RowKind::Factorable34 => "factorable-3/4",
        }
    }
}

/// The full comparison table: for q ∈ {2,3,4,5} and r from q+1 through 10,
/// the rounded-up growth exponents from the η-estimate and the applicable
/// factorization estimates.
pub fn reproduce_table2() -> Vec<TableRow> {
    let mut rows = Vec::new();
    for q in 2..=5usize {
        let mut homo = Vec::new();
        let mut f23 = Vec::new();
        let mut f34 = Vec::new();
        for r in (q + 1)..=10 {
            let rep = growth_exponents(q, r).expect("in range");
            homo.push((r, ceil3(rep.alpha_eta)));
            f34.push((r, ceil3(rep.alpha_34)));
            if let Some(a) = rep.alpha_23 {
                f23.push((r, ceil3(a)));
            }
        }
        rows.push(TableRow {
            q,
            kind: RowKind::Homogeneous,
            entries: homo,
        });
        if !f23.is_empty() {
            rows.push(TableRow {
                q,
                kind: RowKind::Factorable23,
                entries: f23,
            });
        }
        rows.push(TableRow {
            q,
            kind: RowKind::Factorable34,
            entries: f34,
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta3_matches_bisection_bracket() {
        let eta = solve_eta(3, 1e-12);
        assert!((0.810535..0.810536).contains(&eta));
        let p = eta.powi(3) + eta.powi(2) + eta - 2.0;
        assert!(p.abs() < 1e-10);
    }

    #[test]
    fn tau_system_residuals() {
        for r in 3..=12 {
            let s = tau_values(r);
            let t0 = s.tau[0];
            // η(τ_0 + τ_i) = τ_0 + τ_{i−1} for i = 2..r, and η(τ_0+τ_1) = τ_r
            for i in 2..=r {
                let res = s.eta * (t0 + s.tau[i]) - (t0 + s.tau[i - 1]);
                assert!(res.abs() < 1e-10, "r={r} i={i} res={res}");
            }
            let res = s.eta * (t0 + s.tau[1]) - s.tau[r];
            assert!(res.abs() < 1e-10);
        }
    }
}
