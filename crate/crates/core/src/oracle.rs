//! Shanks transformations computed directly from their linear systems.
//!
//! The coefficients `a_0..a_k` solve
//!
//! ```text
//! a_0 + … + a_k = 1
//! a_0 Δs_{n+j} + … + a_k Δs_{n+j+k} = 0,   j = 0..k−1
//! ```
//!
//! by LU with partial pivoting. This is the reference every recursive
//! algorithm is tested against; it is slow on purpose.

use num_traits::{Float, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dense::{self, Lu};
use crate::field::{Field, Real};
use crate::linspace::{Element, Functional, LinalgError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("need {needed} terms, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("singular Shanks system at n={n}, k={k} (condition estimate {condition:e})")]
    Breakdown { n: usize, k: usize, condition: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShanksCoefficients<T: Field> {
    pub k: usize,
    pub n: usize,
    pub a: Vec<T>,
    /// 1-norm condition estimate of the system matrix.
    pub condition: T::Real,
}

impl<T: Field> ShanksCoefficients<T> {
    /// Equivalence tolerance: `1e-12 · condition`, capped at `1e-6`.
    pub fn tolerance(&self) -> f64 {
        (1e-12 * self.condition.as_f64()).min(1e-6)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    /// `ê_k(S_n) = Σ a_i S_{n+i}`.
    First,
    /// `ẽ_k(S_n) = Σ a_i S_{n+k+i}`.
    Second,
}

fn system<T: Field>(s: &[T], n: usize, k: usize) -> Result<Element<T>, OracleError> {
    let needed = n + 2 * k + 1;
    if s.len() < needed {
        return Err(OracleError::TooShort { needed, got: s.len() });
    }
    let m = k + 1;
    let mut a = Element::zeros(crate::linspace::Shape::Matrix(m, m));
    for j in 0..m {
        a.set(0, j, T::one());
    }
    for row in 1..m {
        for i in 0..m {
            let idx = n + row - 1 + i;
            a.set(row, i, s[idx + 1] - s[idx]);
        }
    }
    Ok(a)
}

pub fn solve_coefficients<T: Field>(s: &[T], n: usize, k: usize) -> Result<ShanksCoefficients<T>, OracleError> {
    let a = system(s, n, k)?;
    let condition = dense::condition_1(&a);
    let lu = match Lu::new(&a) {
        Ok(lu) => lu,
        Err(_) => return Err(OracleError::Breakdown { n, k, condition: f64::INFINITY }),
    };
    let mut rhs = vec![T::zero(); k + 1];
    rhs[0] = T::one();
    let coeffs = lu.solve_vec(&rhs);
    if !Float::is_finite(condition) || coeffs.iter().any(|c| !c.finite()) {
        return Err(OracleError::Breakdown { n, k, condition: condition.as_f64() });
    }
    Ok(ShanksCoefficients { k, n, a: coeffs, condition })
}

/// `e_k(s_n)` and the coefficients used.
pub fn shanks_scalar<T: Field>(s: &[T], n: usize, k: usize) -> Result<(T, ShanksCoefficients<T>), OracleError> {
    let c = solve_coefficients(s, n, k)?;
    let v = c.a.iter().enumerate().map(|(i, &a)| a * s[n + i]).sum();
    Ok((v, c))
}

/// First or second topological Shanks transformation with coefficients
/// from `s_n = ⟨y, S_n⟩`.
pub fn shanks_topo<T: Field>(
    seq: &[Element<T>],
    y: &Functional<T>,
    n: usize,
    k: usize,
    transform: Transform,
) -> Result<(Element<T>, ShanksCoefficients<T>), OracleError> {
    let needed = n + 2 * k + 1;
    if seq.len() < needed {
        return Err(OracleError::TooShort { needed, got: seq.len() });
    }
    let s: Vec<T> = seq[..needed].iter().map(|x| y.apply(x)).collect::<Result<_, _>>()?;
    let c = solve_coefficients(&s, n, k)?;
    let start = match transform {
        Transform::First => n,
        Transform::Second => n + k,
    };
    let mut out = Element::zeros(seq[start].shape());
    for (i, &a) in c.a.iter().enumerate() {
        out.axpy(a, &seq[start + i])?;
    }
    Ok((out, c))
}

/// Determinantal ratio for `e_k(s_n)` by first-row cofactor expansion
/// (`k ≤ 3`). Second-tier cross-check only.
pub fn shanks_determinantal<T: Field>(s: &[T], n: usize, k: usize) -> Result<T, OracleError> {
    assert!(k <= 3, "determinantal path is limited to k ≤ 3");
    let a = system(s, n, k)?;
    let den = dense::det(&a)?;
    let m = k + 1;
    let mut num = T::zero();
    for j in 0..m {
        let cof = if m == 1 {
            T::one()
        } else {
            let mut minor = Element::zeros(crate::linspace::Shape::Matrix(m - 1, m - 1));
            for r in 1..m {
                let mut cc = 0;
                for c in 0..m {
                    if c != j {
                        minor.set(r - 1, cc, a.get(r, c));
                        cc += 1;
                    }
                }
            }
            dense::det(&minor)?
        };
        let sign = if j % 2 == 0 { T::one() } else { -T::one() };
        num += sign * s[n + j] * cof;
    }
    if den == T::zero() {
        return Err(OracleError::Breakdown { n, k, condition: f64::INFINITY });
    }
    Ok(num / den)
}

/// `max_j |⟨y, Σ a_i ΔS_{n+j+i}⟩|` over the difference rows.
pub fn system_residual<T: Field>(
    seq: &[Element<T>],
    y: &Functional<T>,
    c: &ShanksCoefficients<T>,
) -> Result<T::Real, OracleError> {
    let mut worst = T::Real::zero();
    for j in 0..c.k {
        let mut acc = Element::zeros(seq[0].shape());
        for (i, &a) in c.a.iter().enumerate() {
            let idx = c.n + j + i;
            acc.axpy(a, &seq[idx + 1].sub(&seq[idx])?)?;
        }
        let r = y.apply(&acc)?.modulus();
        worst = worst.max(r);
    }
    Ok(worst)
}
