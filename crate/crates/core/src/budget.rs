//! Exact-rational orders in α of the strong-coupling lower-bound error terms
//!
//! ```text
//! α² e_V / ((1 − ε)(1 − δ)²) − (1 − δ) 2K/P − 1/2 − ΔE − 2αKP²π² / (δ ΔE),   ε = 8α/K,
//! ```
//!
//! with `δ = c₁α^d`, `K = c₂α^k`, `P = c₃α^p`, `ΔE = c₄α^e`. The orders are
//!
//! * T1 (prefactor mismatch, `α² max(δ, ε)`): `max(2 + d, 3 − k)`
//! * T2 (block count `2K/P`): `k − p`
//! * T3 (constant): `0`
//! * T4 (localization `ΔE`): `e`
//! * T5 (block approximation): `1 + k + 2p − d − e`

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "budget";

pub const TERMS: [&str; 5] = ["T1", "T2", "T3", "T4", "T5"];

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// α-exponents `(d, k, p, e)` of `(δ, K, P, ΔE)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentVector {
    pub d: BigRational,
    pub k: BigRational,
    pub p: BigRational,
    pub e: BigRational,
}

/// Configuration form: `{"d": "-1/7", "k": "76/49", "p": "5/49", "e": "64/49"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSpec {
    pub d: String,
    pub k: String,
    pub p: String,
    pub e: String,
}

impl ExponentVector {
    /// Rejects the vector if it violates `d < 0`, `k > 1` or `p < k`.
    pub fn new(d: BigRational, k: BigRational, p: BigRational, e: BigRational) -> Result<Self> {
        if !d.is_negative() {
            return Err(Error::invalid(
                MODULE,
                "d",
                format!("need d < 0 so that δ → 0, got {d}"),
            ));
        }
        if k <= BigRational::one() {
            return Err(Error::invalid(
                MODULE,
                "k",
                format!("need k > 1 so that ε = 8α/K → 0, got {k}"),
            ));
        }
        if p >= k {
            return Err(Error::invalid(
                MODULE,
                "p",
                format!("need p < k so that P < K, got p = {p}, k = {k}"),
            ));
        }
        Ok(ExponentVector { d, k, p, e })
    }

    /// `(−1/7, 76/49, 5/49, 64/49)`
    pub fn published() -> Self {
        ExponentVector::new(q(-7, 49), q(76, 49), q(5, 49), q(64, 49)).expect("feasible")
    }

    pub fn from_spec(spec: &ExponentSpec) -> Result<Self> {
        let parse = |name: &str, s: &str| -> Result<BigRational> {
            s.trim()
                .parse::<BigRational>()
                .map_err(|_| Error::invalid(MODULE, name, format!("expected a rational like \"-1/7\", got {s:?}")))
        };
        ExponentVector::new(
            parse("d", &spec.d)?,
            parse("k", &spec.k)?,
            parse("p", &spec.p)?,
            parse("e", &spec.e)?,
        )
    }

    pub fn to_spec(&self) -> ExponentSpec {
        ExponentSpec {
            d: self.d.to_string(),
            k: self.k.to_string(),
            p: self.p.to_string(),
            e: self.e.to_string(),
        }
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(d, k, p, e) = ({}, {}, {}, {})", self.d, self.k, self.p, self.e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetReport {
    pub exponents: ExponentVector,
    /// Orders of T1..T5 in that order.
    pub orders: [BigRational; 5],
    pub max_order: BigRational,
    /// Terms attaining the maximum.
    pub binding: Vec<&'static str>,
}

/// JSON form with rationals as `"num/den"` strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetJson {
    pub exponents: ExponentSpec,
    pub orders: BTreeMap<String, String>,
    pub max_order: String,
    pub binding: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateJson>,
}

impl BudgetReport {
    pub fn to_json(&self) -> BudgetJson {
        BudgetJson {
            exponents: self.exponents.to_spec(),
            orders: TERMS
                .iter()
                .zip(&self.orders)
                .map(|(t, o)| (t.to_string(), o.to_string()))
                .collect(),
            max_order: self.max_order.to_string(),
            binding: self.binding.iter().map(|s| s.to_string()).collect(),
            certificate: None,
        }
    }
}

pub fn term_orders(ev: &ExponentVector) -> BudgetReport {
    let ExponentVector { d, k, p, e } = ev;
    let two = q(2, 1);
    let t1 = (&two + d).max(q(3, 1) - k);
    let t2 = k - p;
    let t3 = BigRational::zero();
    let t4 = e.clone();
    let t5 = BigRational::one() + k + &two * p - d - e;
    let orders = [t1, t2, t3, t4, t5];
    let max_order = orders.iter().max().expect("five terms").clone();
    let binding = TERMS
        .iter()
        .zip(&orders)
        .filter(|(_, o)| **o == max_order)
        .map(|(t, _)| *t)
        .collect();
    BudgetReport {
        exponents: ev.clone(),
        orders,
        max_order,
        binding,
    }
}

/// A linear form `c₀ + c_d d + c_k k + c_p p + c_e e`.
type Form = [i64; 5];

/// The five affine pieces bounded by `M`: `3 − k`, `k − p`, `2 + d`, `e`, `1 + k + 2p − d − e`.
const PIECES: [(&str, Form); 5] = [
    ("3 - k", [3, 0, -1, 0, 0]),
    ("k - p", [0, 0, 1, -1, 0]),
    ("2 + d", [2, 1, 0, 0, 0]),
    ("e", [0, 0, 0, 0, 1]),
    ("1 + k + 2p - d - e", [1, -1, 1, 2, -1]),
];

/// Nonnegative multipliers on [`PIECES`] whose weighted sum eliminates every
/// exponent: `Σ yᵢ (piece_i) = Σ yᵢ c₀ᵢ ≤ (Σ yᵢ) M`, hence `M ≥ 12/8`.
const DUAL_WEIGHTS: [i64; 5] = [3, 2, 1, 1, 1];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualCertificate {
    pub weights: [i64; 5],
    /// `Σ yᵢ c₀ᵢ`
    pub constant: BigRational,
    /// `Σ yᵢ`
    pub total_weight: BigRational,
    /// `constant / total_weight`, a lower bound on every feasible max order.
    pub bound: BigRational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub pieces: Vec<String>,
    pub weights: Vec<i64>,
    pub lower_bound: String,
}

impl DualCertificate {
    /// Checks that the weights are nonnegative and cancel every exponent.
    pub fn verify(&self) -> bool {
        let cancels = (1..5).all(|var| {
            PIECES
                .iter()
                .zip(&self.weights)
                .map(|((_, f), y)| f[var] * y)
                .sum::<i64>()
                == 0
        });
        let constant: i64 = PIECES.iter().zip(&self.weights).map(|((_, f), y)| f[0] * y).sum();
        let total: i64 = self.weights.iter().sum();
        self.weights.iter().all(|&y| y >= 0)
            && cancels
            && total > 0
            && self.constant == q(constant, 1)
            && self.total_weight == q(total, 1)
            && self.bound == q(constant, total)
    }

    pub fn to_json(&self) -> CertificateJson {
        CertificateJson {
            pieces: PIECES.iter().map(|(n, _)| n.to_string()).collect(),
            weights: self.weights.to_vec(),
            lower_bound: self.bound.to_string(),
        }
    }
}

fn certificate() -> DualCertificate {
    let constant: i64 = PIECES.iter().zip(&DUAL_WEIGHTS).map(|((_, f), y)| f[0] * y).sum();
    let total: i64 = DUAL_WEIGHTS.iter().sum();
    DualCertificate {
        weights: DUAL_WEIGHTS,
        constant: q(constant, 1),
        total_weight: q(total, 1),
        bound: q(constant, total),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Optimum {
    pub report: BudgetReport,
    pub certificate: DualCertificate,
}

impl Optimum {
    pub fn order(&self) -> &BigRational {
        &self.report.max_order
    }

    pub fn to_json(&self) -> BudgetJson {
        BudgetJson {
            certificate: Some(self.certificate.to_json()),
            ..self.report.to_json()
        }
    }
}

/// Exact Gaussian elimination on an augmented square system.
fn solve_exact(mut a: Vec<Vec<BigRational>>) -> Option<Vec<BigRational>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, p) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                    *x -= &f * p;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n].clone()).collect())
}

/// Minimizes `max{2 + d, 3 − k, k − p, e, 1 + k + 2p − d − e}` over feasible
/// exponents by equalizing the five pieces, and certifies the value with the
/// dual bound. Fails only if the certificate or the primal check fails.
pub fn optimize() -> Result<Optimum> {
    // Unknowns (d, k, p, e, M): each piece equals M.
    let rows: Vec<Vec<BigRational>> = PIECES
        .iter()
        .map(|(_, f)| {
            let mut row: Vec<BigRational> = f[1..].iter().map(|&c| q(c, 1)).collect();
            row.push(q(-1, 1));
            row.push(q(-f[0], 1));
            row
        })
        .collect();
    let sol = solve_exact(rows).ok_or_else(|| Error::no_convergence(MODULE, "equalization system is singular"))?;
    let ev = ExponentVector::new(sol[0].clone(), sol[1].clone(), sol[2].clone(), sol[3].clone())?;
    let report = term_orders(&ev);
    let cert = certificate();
    if !cert.verify() || report.max_order != sol[4] || report.max_order != cert.bound {
        return Err(Error::no_convergence(
            MODULE,
            format!(
                "optimality not certified: primal {} vs dual {}",
                report.max_order, cert.bound
            ),
        ));
    }
    Ok(Optimum {
        report,
        certificate: cert,
    })
}

/// Constants `c₁..c₄` in `δ = c₁α^d`, `K = c₂α^k`, `P = c₃α^p`, `ΔE = c₄α^e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants(pub [f64; 4]);

impl Default for Constants {
    fn default() -> Self {
        Constants([1.0; 4])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sandwich {
    pub alpha: f64,
    /// `α² e_V`
    pub upper: f64,
    pub lower: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl Sandwich {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

fn to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().expect("finite rational")
}

/// Both sides of the energy sandwich at one α.
pub fn numeric_sandwich(alpha: f64, ev: &ExponentVector, c: &Constants, e_v: f64) -> Result<Sandwich> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::invalid(MODULE, "alpha", format!("need α > 1, got {alpha}")));
    }
    if let Some(i) = c.0.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::invalid(MODULE, format!("constants[{i}]"), "must be positive"));
    }
    if !(e_v.is_finite() && e_v < 0.0) {
        return Err(Error::invalid(
            MODULE,
            "e_V",
            format!("Pekar energies are negative, got {e_v}"),
        ));
    }
    let [c1, c2, c3, c4] = c.0;
    let delta = c1 * alpha.powf(to_f64(&ev.d));
    let big_k = c2 * alpha.powf(to_f64(&ev.k));
    let big_p = c3 * alpha.powf(to_f64(&ev.p));
    let de = c4 * alpha.powf(to_f64(&ev.e));
    let epsilon = 8.0 * alpha / big_k;
    if epsilon >= 1.0 || delta >= 1.0 {
        return Err(Error::Range {
            module: MODULE,
            detail: format!("α = {alpha} is too small: ε = {epsilon}, δ = {delta}; both must lie below 1"),
        });
    }
    let upper = alpha * alpha * e_v;
    let lower = upper / ((1.0 - epsilon) * (1.0 - delta).powi(2))
        - (1.0 - delta) * 2.0 * big_k / big_p
        - 0.5
        - de
        - 2.0 * alpha * big_k * big_p * big_p * std::f64::consts::PI.powi(2) / (delta * de);
    debug_assert!(upper >= lower);
    Ok(Sandwich {
        alpha,
        upper,
        lower,
        epsilon,
        delta,
    })
}
