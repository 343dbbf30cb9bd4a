//! Wynn's scalar ε-algorithm computed by ascending diagonals.
//!
//! Every appended term `S_d` produces the diagonal `ε_k^{(d−k)}`,
//! `k = 0..=min(max_col, d)`. The two most recent diagonals are kept as
//! working state, which is what the rhombus rule and the particular rule
//! need.
//!
//! # Singularities
//!
//! Before a difference `ε_k^{(n+1)} − ε_k^{(n)}` is inverted it is compared
//! with `10^{−p}|ε_k^{(n)}|`. When the test fires the resulting entry is
//! flagged singular and `σ` is incremented. The entry two columns to the
//! right, which would otherwise be computed from two huge neighbours, is
//! then obtained from the cross rule
//!
//! ```text
//! r = S/(1 − S/C) + N/(1 − N/C) − W/(1 − W/C),   E = r/(1 + r/C)
//! ```
//!
//! with `C` the flagged entry, `N`, `S` its neighbours in the same column
//! and `W` the entry two columns to the left.

use num_traits::{Float, Zero};

use crate::field::{Field, Real};

/// Which difference levels are checked by the singularity test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestLevels {
    Even,
    Odd,
    Both,
}

impl TestLevels {
    fn covers(self, level: usize) -> bool {
        match self {
            TestLevels::Even => level % 2 == 0,
            TestLevels::Odd => level % 2 == 1,
            TestLevels::Both => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarEpsConfig {
    /// Highest column computed.
    pub max_col: usize,
    /// Threshold exponent `p` of the relative test.
    pub p: i32,
    /// Detection and particular rules on or off.
    pub particular_rules: bool,
    pub test_levels: TestLevels,
    /// Keep every computed entry (needed for column queries and identities).
    pub keep_history: bool,
}

impl ScalarEpsConfig {
    pub fn new(max_col: usize) -> Self {
        ScalarEpsConfig {
            max_col,
            p: 10,
            particular_rules: true,
            test_levels: TestLevels::Both,
            keep_history: true,
        }
    }

    pub fn with_p(mut self, p: i32) -> Self {
        self.p = p;
        self
    }

    pub fn without_rules(mut self) -> Self {
        self.particular_rules = false;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsEntry<T> {
    pub value: T,
    /// The difference that produced this entry failed the threshold test.
    pub flagged_singular: bool,
    /// Computed by the cross rule instead of the rhombus rule.
    pub by_particular_rule: bool,
}

impl<T: Field> EpsEntry<T> {
    fn plain(value: T) -> Self {
        EpsEntry { value, flagged_singular: false, by_particular_rule: false }
    }

    pub fn is_valid(&self) -> bool {
        self.value.finite()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EpsError {
    #[error("entry ε_{k}^({n}) is not available")]
    Unavailable { k: usize, n: usize },
}

#[derive(Debug, Clone)]
pub struct ScalarEpsTable<T: Field> {
    cfg: ScalarEpsConfig,
    threshold: T::Real,
    last_diagonal: Vec<EpsEntry<T>>,
    prev_diagonal: Vec<EpsEntry<T>>,
    n_terms: usize,
    sigma: usize,
    history: Vec<Vec<EpsEntry<T>>>,
}

impl<T: Field> ScalarEpsTable<T> {
    pub fn new(cfg: ScalarEpsConfig) -> Self {
        ScalarEpsTable {
            cfg,
            threshold: T::Real::of(10.0).powi(-cfg.p),
            last_diagonal: Vec::new(),
            prev_diagonal: Vec::new(),
            n_terms: 0,
            sigma: 0,
            history: Vec::new(),
        }
    }

    pub fn config(&self) -> &ScalarEpsConfig {
        &self.cfg
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    /// Number of singularities detected so far.
    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn max_col(&self) -> usize {
        self.cfg.max_col
    }

    /// The most recent ascending diagonal, indexed by column.
    pub fn last_diagonal(&self) -> &[EpsEntry<T>] {
        &self.last_diagonal
    }

    /// The diagonal before the last one.
    pub fn prev_diagonal(&self) -> &[EpsEntry<T>] {
        &self.prev_diagonal
    }

    fn fires(&self, upper: T, lower: T) -> bool {
        let diff = (upper - lower).modulus();
        if diff.is_nan() {
            return false;
        }
        let base = lower.modulus();
        if base == T::Real::zero() {
            diff < <T as Field>::eps()
        } else {
            diff < self.threshold * base
        }
    }

    /// Consumes the next term `S_{n_terms}` and returns the new diagonal as
    /// `(k, n, ε_k^{(n)})`.
    pub fn append(&mut self, s: T) -> Vec<(usize, usize, T)> {
        let d = self.n_terms;
        let kmax = self.cfg.max_col.min(d);
        let mut cur: Vec<EpsEntry<T>> = Vec::with_capacity(kmax + 1);
        cur.push(EpsEntry::plain(s));
        let zero = T::zero();
        for k in 1..=kmax {
            let upper = cur[k - 1].value;
            let lower = self.last_diagonal[k - 1].value;
            let west = if k >= 2 { self.last_diagonal[k - 2].value } else { zero };
            let entry = if self.cfg.particular_rules && k >= 3 && self.last_diagonal[k - 2].flagged_singular {
                let c = self.last_diagonal[k - 2].value;
                let north = self.prev_diagonal[k - 2].value;
                let south = cur[k - 2].value;
                let w = if k >= 4 { self.prev_diagonal[k - 4].value } else { zero };
                EpsEntry {
                    value: cross_rule(c, north, south, w),
                    flagged_singular: false,
                    by_particular_rule: true,
                }
            } else {
                let singular = self.cfg.particular_rules
                    && self.cfg.test_levels.covers(k - 1)
                    && self.fires(upper, lower);
                if singular {
                    self.sigma += 1;
                }
                EpsEntry {
                    value: west + (upper - lower).recip_or_inf(),
                    flagged_singular: singular,
                    by_particular_rule: false,
                }
            };
            cur.push(entry);
        }
        if self.cfg.keep_history {
            for (k, e) in cur.iter().enumerate() {
                if self.history.len() <= k {
                    self.history.push(Vec::new());
                }
                self.history[k].push(*e);
            }
        }
        let out = cur.iter().enumerate().map(|(k, e)| (k, d - k, e.value)).collect();
        self.prev_diagonal = std::mem::replace(&mut self.last_diagonal, cur);
        self.n_terms += 1;
        out
    }

    /// Entry `ε_k^{(n)}`; column −1 is not addressable here (it is ≡ 0).
    pub fn entry(&self, k: usize, n: usize) -> Option<EpsEntry<T>> {
        if let Some(col) = self.history.get(k) {
            if let Some(e) = col.get(n) {
                return Some(*e);
            }
        }
        let d = k + n;
        let diag = if d + 1 == self.n_terms {
            &self.last_diagonal
        } else if d + 2 == self.n_terms {
            &self.prev_diagonal
        } else {
            return None;
        };
        diag.get(k).copied()
    }

    pub fn get(&self, k: usize, n: usize) -> Option<T> {
        self.entry(k, n).map(|e| e.value)
    }

    /// `ε_k^{(n)}` with the convention `ε_{−1} ≡ 0` (`k = −1` passed as `None`).
    pub fn get_signed(&self, k: isize, n: usize) -> Option<T> {
        if k == -1 {
            Some(T::zero())
        } else if k < -1 {
            None
        } else {
            self.get(k as usize, n)
        }
    }

    /// All retained entries of column `k`, ordered by `n`.
    pub fn column(&self, k: usize) -> Vec<T> {
        self.history.get(k).map(|c| c.iter().map(|e| e.value).collect()).unwrap_or_default()
    }

    /// `ε_{2k}^{(n)}` for every available `n`.
    pub fn even_column(&self, k: usize) -> Vec<T> {
        self.column(2 * k)
    }

    /// Both diagonal-sum expressions for `ε_{2k}^{(n)}` and `ε_{2k+1}^{(n)}`:
    /// `S_{n+k} + Σ_{i=1..k} 1/Δε_{2i−1}^{(n+k−i)}` and
    /// `Σ_{i=0..k} 1/Δε_{2i}^{(n+k−i)}`.
    pub fn diagonal_sum_identities(&self, k: usize, n: usize) -> Result<(T, T), EpsError> {
        let at = |kk: usize, nn: usize| self.get(kk, nn).ok_or(EpsError::Unavailable { k: kk, n: nn });
        let mut even = at(0, n + k)?;
        for i in 1..=k {
            let m = n + k - i;
            even += (at(2 * i - 1, m + 1)? - at(2 * i - 1, m)?).recip_or_inf();
        }
        let mut odd = T::zero();
        for i in 0..=k {
            let m = n + k - i;
            odd += (at(2 * i, m + 1)? - at(2 * i, m)?).recip_or_inf();
        }
        Ok((even, odd))
    }
}

/// Cross rule around a flagged entry `c`, in the form that stays accurate
/// when `c` is huge.
pub fn cross_rule<T: Field>(c: T, north: T, south: T, west: T) -> T {
    let one = T::one();
    let ic = c.recip_or_inf();
    let part = |x: T| if x == T::zero() { x } else { x / (one - x * ic) };
    let r = part(south) + part(north) - part(west);
    r / (one + r * ic)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(terms: &[f64], max_col: usize) -> ScalarEpsTable<f64> {
        let mut t = ScalarEpsTable::new(ScalarEpsConfig::new(max_col));
        for &s in terms {
            t.append(s);
        }
        t
    }

    #[test]
    fn ln2_partial_sums() {
        let t = table(&[1.0, 0.5, 5.0 / 6.0], 2);
        assert!((t.get(2, 0).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(t.even_column(1).len(), 1);
        assert!((t.even_column(1)[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn geometric_kernel_order_one() {
        let s: Vec<f64> = (0..3).map(|n| 1.0 + 0.5f64.powi(n)).collect();
        let t = table(&s, 2);
        assert_eq!(t.get(2, 0).unwrap(), 1.0);
        let s: Vec<f64> = (0..8).map(|n| 1.0 + 0.5f64.powi(n)).collect();
        let t = table(&s, 2);
        for v in t.even_column(1) {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_sequence_flags_first_column() {
        let mut t = ScalarEpsTable::new(ScalarEpsConfig::new(4));
        for _ in 0..5 {
            t.append(2.5);
        }
        assert_eq!(t.even_column(0), vec![2.5; 5]);
        let e = t.entry(1, 0).unwrap();
        assert!(e.flagged_singular);
        assert!(!e.is_valid());
        assert!(t.column(2).iter().all(|v| !v.is_finite()));
    }

    #[test]
    fn constant_sequence_without_rules() {
        let mut t = ScalarEpsTable::new(ScalarEpsConfig::new(3).without_rules());
        for _ in 0..4 {
            t.append(1.0);
        }
        assert_eq!(t.sigma(), 0);
        assert!(t.get(1, 0).unwrap().is_infinite());
        assert!(t.get(2, 0).unwrap().is_nan());
    }

    #[test]
    fn diagonal_counts() {
        let mut t = ScalarEpsTable::new(ScalarEpsConfig::new(3));
        for n in 0..6 {
            let out = t.append(1.0 / (n as f64 + 1.0));
            assert!(out.len() <= n + 1);
            assert!(out.iter().all(|&(k, _, _)| k <= 3.min(n)));
        }
    }

    #[test]
    fn identities_base_case() {
        let t = table(&[1.0, 0.5, 5.0 / 6.0, 7.0 / 12.0], 3);
        let (e, o) = t.diagonal_sum_identities(0, 1).unwrap();
        assert_eq!(e, t.get(0, 1).unwrap());
        assert_eq!(o, t.get(1, 1).unwrap());
        let (e, _) = t.diagonal_sum_identities(1, 0).unwrap();
        assert!((e - 0.7).abs() < 1e-14);
        assert!(t.diagonal_sum_identities(3, 0).is_err());
    }

    #[test]
    fn cross_rule_matches_rhombus_form() {
        // 1/(N−C) + 1/(S−C) = 1/(W−C) + 1/(E−C)
        let (c, n, s, w) = (3.0, 1.0, 2.0, 0.5);
        let e = cross_rule(c, n, s, w);
        let lhs = 1.0 / (n - c) + 1.0 / (s - c);
        let rhs = 1.0 / (w - c) + 1.0 / (e - c);
        assert!((lhs - rhs).abs() < 1e-12);
        // infinite centre: E = N + S − W
        assert_eq!(cross_rule(f64::INFINITY, n, s, w), n + s - w);
    }
}
