//! Sequence generators and the plain-text sequence format.
//!
//! Every generator is deterministic: randomized parameters are drawn once,
//! at construction, from a ChaCha stream derived from a 64-bit seed.
//! Cloning a source yields an independent copy positioned at the same term.
//!
//! # Text format
//!
//! ```text
//! # comments start with '#'
//! vector 3
//! 1.0 2.0 3.0
//! 0.5 1.0 1.5
//! ```
//!
//! The header is `scalar`, `vector <m>` or `matrix <m> <s>`. Scalars and
//! vectors take one term per line. A matrix term is `m` rows of `s` values,
//! and consecutive matrices are separated by a blank line.

use std::fmt::Write as _;

use num_traits::{Float, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dense;
use crate::field::{Field, Real};
use crate::linspace::{Element, LinalgError, Shape};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SequenceError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Source of the terms `S_0, S_1, …`.
pub trait Sequence<T: Field>: Send {
    fn shape(&self) -> Shape;

    /// Next term, or `None` when a finite source is exhausted.
    fn next_term(&mut self) -> Option<Element<T>>;

    /// Known limit, when one is available.
    fn limit(&self) -> Option<Element<T>> {
        None
    }

    /// Frobenius norm of the equation residual `F(X)` for sources that
    /// iterate towards the solution of an equation.
    fn residual(&self, _x: &Element<T>) -> Option<T::Real> {
        None
    }

    fn boxed_clone(&self) -> Box<dyn Sequence<T>>;
}

impl<T: Field> Clone for Box<dyn Sequence<T>> {
    fn clone(&self) -> Self {
        self.boxed_clone()
    }
}

/// Takes the first `count` terms (fewer if the source ends).
pub fn take<T: Field>(src: &mut dyn Sequence<T>, count: usize) -> Vec<Element<T>> {
    (0..count).map_while(|_| src.next_term()).collect()
}

/// Random stream `stream` of the generator family seeded by `seed`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn uniform<T: Field>(r: &mut ChaCha8Rng, shape: Shape, lo: f64, hi: f64) -> Element<T> {
    Element::from_fn(shape, |_| T::from_f64(r.gen_range(lo..hi)))
}

/// Finite list of terms.
#[derive(Debug, Clone)]
pub struct Recorded<T> {
    terms: Vec<Element<T>>,
    pos: usize,
    limit: Option<Element<T>>,
}

impl<T: Field> Recorded<T> {
    pub fn new(terms: Vec<Element<T>>) -> Result<Self, SequenceError> {
        let Some(first) = terms.first() else {
            return Err(SequenceError::Invalid("empty sequence".into()));
        };
        let shape = first.shape();
        if let Some(bad) = terms.iter().find(|t| t.shape() != shape) {
            return Err(LinalgError::Dimension { expected: shape, found: bad.shape() }.into());
        }
        Ok(Recorded { terms, pos: 0, limit: None })
    }

    pub fn with_limit(mut self, limit: Element<T>) -> Self {
        self.limit = Some(limit);
        self
    }
}

impl<T: Field> Sequence<T> for Recorded<T> {
    fn shape(&self) -> Shape {
        self.terms[0].shape()
    }
    fn next_term(&mut self) -> Option<Element<T>> {
        let t = self.terms.get(self.pos).cloned();
        self.pos += 1;
        t
    }
    fn limit(&self) -> Option<Element<T>> {
        self.limit.clone()
    }
    fn boxed_clone(&self) -> Box<dyn Sequence<T>> {
        Box::new(self.clone())
    }
}

/// Order-5 kernel sequence
/// `S_n = 3S_{n−1} − S_{n−2} + 2S_{n−3} + S_{n−4} − 5S_{n−5}` started from
/// `S_0 = r`, `S_1 = 1`, `S_2 = 1 + 10⁻¹¹r`, `S_3 = r`, `S_4 = r + 10⁻¹¹r`
/// with `r` uniform in `[0, 1]`. Its antilimit is `0`.
#[derive(Debug, Clone)]
pub struct KernelRecurrence<T> {
    window: Vec<Element<T>>,
    emitted: usize,
    r: Element<T>,
}

impl<T: Field> KernelRecurrence<T> {
    pub const COEFFS: [f64; 5] = [3.0, -1.0, 2.0, 1.0, -5.0];

    pub fn new(shape: Shape, seed: u64) -> Self {
        let mut g = rng(seed, 0);
        let r: Element<T> = uniform(&mut g, shape, 0.0, 1.0);
        let ones = Element::from_fn(shape, |_| T::one());
        let tiny = T::from_f64(1e-11);
        let mut s2 = ones.clone();
        s2.axpy(tiny, &r).unwrap();
        let mut s4 = r.clone();
        s4.axpy(tiny, &r).unwrap();
        let window = vec![r.clone(), ones, s2, r.clone(), s4];
        KernelRecurrence { window, emitted: 0, r }
    }

    /// The random element `r`.
    pub fn r(&self) -> &Element<T> {
        &self.r
    }
}

impl<T: Field> Sequence<T> for KernelRecurrence<T> {
    fn shape(&self) -> Shape {
        self.r.shape()
    }
    fn next_term(&mut self) -> Option<Element<T>> {
        let n = self.emitted;
        self.emitted += 1;
        if n < 5 {
            return Some(self.window[n].clone());
        }
        let mut next = Element::zeros(self.shape());
        // window holds S_{n−5..n−1}
        for (i, &c) in Self::COEFFS.iter().enumerate() {
            next.axpy(T::from_f64(c), &self.window[4 - i]).unwrap();
        }
        self.window.remove(0);
        self.window.push(next.clone());
        Some(next)
    }
    fn limit(&self) -> Option<Element<T>> {
        Some(Element::zeros(self.shape()))
    }
    fn boxed_clone(&self) -> Box<dyn Sequence<T>> {
        Box::new(self.clone())
    }
}

/// `S_n = S + (±1)ⁿ Σ aᵢ λᵢⁿ uᵢ`.
#[derive(Debug, Clone)]
pub struct GeometricModes<T> {
    pub limit: Element<T>,
    pub modes: Vec<(T, T, Element<T>)>,
    pub alternating: bool,
    n: usize,
}

impl<T: Field> GeometricModes<T> {
    pub fn new(limit: Element<T>, modes: Vec<(T, T, Element<T>)>, alternating: bool) -> Result<Self, SequenceError> {
        for (_, _, u) in &modes {
            if u.shape() != limit.shape() {
                return Err(LinalgError::Dimension { expected: limit.shape(), found: u.shape() }.into());
            }
        }
        Ok(GeometricModes { limit, modes, alternating, n: 0 })
    }

    /// Random limit and directions, given amplitudes and ratios.
    pub fn random(shape: Shape, amplitudes: &[f64], lambdas: &[f64], alternating: bool, seed: u64) -> Result<Self, SequenceError> {
        if amplitudes.len() != lambdas.len() {
            return Err(SequenceError::Invalid("amplitudes and ratios differ in length".into()));
        }
        let mut g = rng(seed, 1);
        let limit = uniform(&mut g, shape, -1.0, 1.0);
        let modes = amplitudes
            .iter()
            .zip(lambdas)
            .map(|(&a, &l)| (T::from_f64(a), T::from_f64(l), uniform(&mut g, shape, -1.0, 1.0)))
            .collect();
        Self::new(limit, modes, alternating)
    }

    pub fn term(&self, n: usize) -> Element<T> {
        let mut s = self.limit.clone();
        let sign = if self.alternating && n % 2 == 1 { -T::one() } else { T::one() };
        for (a, l, u) in &self.modes {
            let p = (0..n).fold(T::one(), |acc, _| acc * *l);
            s.axpy(sign * *a * p, u).unwrap();
        }
        s
    }
}

impl<T: Field> Sequence<T> for GeometricModes<T> {
    fn shape(&self) -> Shape {
        self.limit.shape()
    }
    fn next_term(&mut self) -> Option<Element<T>> {
        let t = self.term(self.n);
        self.n += 1;
        Some(t)
    }
    fn limit(&self) -> Option<Element<T>> {
        Some(self.limit.clone())
    }
    fn boxed_clone(&self) -> Box<dyn Sequence<T>> {
        Box::new(self.clone())
    }
}

/// `S_n = S + (±1)ⁿ Σᵢ aᵢ (n+b)^{−i} uᵢ`, `i = 1, 2, …`.
#[derive(Debug, Clone)]
pub struct LogarithmicModes<T: Field> {
    pub limit: Element<T>,
    pub modes: Vec<(T, Element<T>)>,
    pub b: T::Real,
    pub alternating: bool,
    n: usize,
}

impl<T: Field> LogarithmicModes<T> {
    pub fn new(limit: Element<T>, modes: Vec<(T, Element<T>)>, b: T::Real, alternating: bool) -> Result<Self, SequenceError> {
        if b <= T::Real::zero() {
            return Err(SequenceError::Invalid("b must be positive".into()));
        }
        Ok(LogarithmicModes { limit, modes, b, alternating, n: 0 })
    }

    pub fn random(shape: Shape, amplitudes: &[f64], b: f64, alternating: bool, seed: u64) -> Result<Self, SequenceError> {
        let mut g = rng(seed, 2);
        let limit = uniform(&mut g, shape, -1.0, 1.0);
        let modes = amplitudes.iter().map(|&a| (T::from_f64(a), uniform(&mut g, shape, -1.0, 1.0))).collect();
        Self::new(limit, modes, T::Real::of(b), alternating)
    }

    pub fn term(&self, n: usize) -> Element<T> {
        let mut s = self.limit.clone();
        let sign = if self.alternating && n % 2 == 1 { -T::one() } else { T::one() };
        let x = T::Real::of(n as f64) + self.b;
        for (i, (a, u)) in self.modes.iter().enumerate() {
            let w = x.powi(-(i as i32 + 1));
            s.axpy(sign * *a * T::from_real(w), u).unwrap();
        }
        s
    }
}

impl<T: Field> Sequence<T> for LogarithmicModes<T> {
    fn shape(&self) -> Shape {
        self.limit.shape()
    }
    fn next_term(&mut self) -> Option<Element<T>> {
        let t = self.term(self.n);
        self.n += 1;
        Some(t)
    }
    fn limit(&self) -> Option<Element<T>> {
        Some(self.limit.clone())
    }
    fn boxed_clone(&self) -> Box<dyn Sequence<T>> {
        Box::new(self.clone())
    }
}

/// Entrywise mixture of decaying exponentials, `S_n = Σ_j μ_jⁿ W_j` with
/// `W_j ≥ 0` and `0 < μ_j < 1`. Totally monotonic; with `oscillating`
/// every odd term is negated, which makes it totally oscillating.
#[derive(Debug, Clone)]
pub struct ExponentialMixture<R> {
    pub rates: Vec<R>,
    pub weights: Vec<Element<R>>,
    pub oscillating: bool,
    n: usize,
}

impl<R: Real> ExponentialMixture<R> {
    pub fn new(rates: Vec<R>, weights: Vec<Element<R>>, oscillating: bool) -> Result<Self, SequenceError> {
        if rates.is_empty() || rates.len() != weights.len() {
            return Err(SequenceError::Invalid("need one weight element per rate".into()));
        }
        if rates.iter().any(|&m| !(m > R::zero() && m < R::one())) {
            return Err(SequenceError::Invalid("rates must lie in (0, 1)".into()));
        }
        if weights.iter().any(|w| w.data().iter().any(|&x| x < R::zero())) {
            return Err(SequenceError::Invalid("weights must be nonnegative".into()));
        }
        Ok(ExponentialMixture { rates, weights, oscillating, n: 0 })
    }

    pub fn random(shape: Shape, modes: usize, oscillating: bool, seed: u64) -> Result<Self, SequenceError> {
        let mut g = rng(seed, 3);
        let rates = (0..modes).map(|_| R::of(g.gen_range(0.1..0.9))).collect();
        let weights = (0..modes).map(|_| uniform(&mut g, shape, 0.0, 1.0)).collect();
        Self::new(rates, weights, oscillating)
    }

    pub fn term(&self, n: usize) -> Element<R> {
        let mut s = Element::zeros(self.weights[0].shape());
        for (m, w) in self.rates.iter().zip(&self.weights) {
            s.axpy(m.powi(n as i32), w).unwrap();
        }
        if self.oscillating && n % 2 == 1 {
            s = s.scale(-R::one());
        }
        s
    }
}

impl<R: Real> Sequence<R> for ExponentialMixture<R> {
    fn shape(&self) -> Shape {
        self.weights[0].shape()
    }
    fn next_term(&mut self) -> Option<Element<R>> {
        let t = self.term(self.n);
        self.n += 1;
        Some(t)
    }
    fn limit(&self) -> Option<Element<R>> {
        Some(Element::zeros(self.shape()))
    }
    fn boxed_clone(&self) -> Box<dyn Sequence<R>> {
        Box::new(self.clone())
    }
}

/// Forward difference `Δ^k S_n` of a finite window.
pub fn forward_difference<T: Field>(terms: &[Element<T>], k: usize, n: usize) -> Option<Element<T>> {
    if n + k >= terms.len() {
        return None;
    }
    let mut cur: Vec<Element<T>> = terms[n..=n + k].to_vec();
    for _ in 0..k {
        cur = cur.windows(2).map(|w| w[1].sub(&w[0]).unwrap()).collect();
    }
    cur.pop()
}

/// `(−1)^k Δ^k S_n ≥ 0` entrywise for all `k ≤ k_max`, `n ≤ n_max`.
pub fn verify_tm<R: Real>(terms: &[Element<R>], k_max: usize, n_max: usize) -> bool {
    for k in 0..=k_max {
        for n in 0..=n_max {
            let Some(d) = forward_difference(terms, k, n) else {
                return false;
            };
            let sign = if k % 2 == 0 { R::one() } else { -R::one() };
            if d.data().iter().any(|&x| sign * x < R::zero()) {
                return false;
            }
        }
    }
    true
}

/// `((−1)ⁿ S_n)` is totally monotonic.
pub fn verify_to<R: Real>(terms: &[Element<R>], k_max: usize, n_max: usize) -> bool {
    let flipped: Vec<_> = terms
        .iter()
        .enumerate()
        .map(|(n, t)| if n % 2 == 1 { t.scale(-R::one()) } else { t.clone() })
        .collect();
    verify_tm(&flipped, k_max, n_max)
}

/// Draws `n_max + k_max + 1` terms from the source and checks the TM
/// inequalities on them.
pub fn verify_tm_source<R: Real>(src: &mut dyn Sequence<R>, k_max: usize, n_max: usize) -> bool {
    let terms = take(src, n_max + k_max + 1);
    verify_tm(&terms, k_max, n_max)
}

/// Parter-type matrix `A_ij = 1/(i − j + 1/2)`.
pub fn parter<R: Real>(m: usize) -> Element<R> {
    Element::from_fn(Shape::Matrix(m, m), |idx| {
        let (i, j) = (idx / m, idx % m);
        R::one() / (R::of(i as f64) - R::of(j as f64) + R::of(0.5))
    })
}

/// Cyclic row projections for `A x = b`, `b = A·1`, from `x_0 = 0`.
#[derive(Debug, Clone)]
pub struct Kaczmarz<R> {
    a: Element<R>,
    b: Vec<R>,
    row_norms: Vec<R>,
    x: Vec<R>,
    rows_per_term: usize,
    row: usize,
    started: bool,
}

impl<R: Real> Kaczmarz<R> {
    pub fn new(a: Element<R>, rows_per_term: Option<usize>) -> Result<Self, SequenceError> {
        let (m, s) = a.dims();
        if !matches!(a.shape(), Shape::Matrix(..)) || m != s {
            return Err(SequenceError::Invalid("Kaczmarz needs a square matrix".into()));
        }
        let ones = Element::vector(vec![R::one(); m]);
        let b = dense::matmul(&a, &ones)?.into_data();
        let row_norms: Vec<R> = (0..m)
            .map(|i| (0..m).fold(R::zero(), |acc, j| acc + a.get(i, j) * a.get(i, j)))
            .collect();
        if row_norms.iter().any(|&r| r == R::zero()) {
            return Err(SequenceError::Invalid("zero row".into()));
        }
        let rows_per_term = rows_per_term.unwrap_or(m);
        if rows_per_term == 0 {
            return Err(SequenceError::Invalid("rows per term must be positive".into()));
        }
        Ok(Kaczmarz { a, b, row_norms, x: vec![R::zero(); m], rows_per_term, row: 0, started: false })
    }

    pub fn rhs(&self) -> &[R] {
        &self.b
    }

    fn project(&mut self) {
        let m = self.x.len();
        let i = self.row;
        let ai = &self.a.data()[i * m..(i + 1) * m];
        let dot = ai.iter().zip(&self.x).fold(R::zero(), |acc, (&p, &q)| acc + p * q);
        let f = (self.b[i] - dot) / self.row_norms[i];
        for (x, &p) in self.x.iter_mut().zip(ai) {
            *x = *x + f * p;
        }
        self.row = (self.row + 1) % m;
    }
}

impl<R: Real> Sequence<R> for Kaczmarz<R> {
    fn shape(&self) -> Shape {
        Shape::Vector(self.x.len())
    }
    fn next_term(&mut self) -> Option<Element<R>> {
        if self.started {
            for _ in 0..self.rows_per_term {
                self.project();
            }
        }
        self.started = true;
        Some(Element::vector(self.x.clone()))
    }
    fn limit(&self) -> Option<Element<R>> {
        Some(Element::vector(vec![R::one(); self.x.len()]))
    }
    fn residual(&self, x: &Element<R>) -> Option<R> {
        let ax = dense::matmul(&self.a, x).ok()?;
        Some(ax.sub(&Element::vector(self.b.clone())).ok()?.norm_fro())
    }
    fn boxed_clone(&self) -> Box<dyn Sequence<R>> {
        Box::new(self.clone())
    }
}

/// Random orthogonal matrix from the eigenvectors of a random symmetric one.
pub fn random_orthogonal<R: Real>(m: usize, seed: u64, stream: u64) -> Result<Element<R>, SequenceError> {
    let mut g = rng(seed, stream);
    let b: Element<R> = uniform(&mut g, Shape::Matrix(m, m), -1.0, 1.0);
    let sym = dense::hermitian_part(&b)?;
    Ok(dense::symmetric_eigen(&sym)?.1)
}

fn spectral<R: Real>(u: &Element<R>, vals: &[R]) -> Element<R> {
    let m = vals.len();
    let mut scaled = u.clone();
    for j in 0..m {
        for i in 0..m {
            scaled.set(i, j, u.get(i, j) * vals[j]);
        }
    }
    dense::matmul(&scaled, &dense::transpose(u)).unwrap()
}

/// Inversion-free iteration for `X + A*X⁻¹A = I`:
/// `S_{n+1} = 2S_n − S_n A^{−*}(I − S_n)A^{−1}S_n`, `S_0 = AA*`.
#[derive(Debug, Clone)]
pub struct NsIteration<R> {
    a: Element<R>,
    a_inv: Element<R>,
    a_inv_adj: Element<R>,
    s: Element<R>,
    limit: Option<Element<R>>,
}

impl<R: Real> NsIteration<R> {
    pub fn new(a: Element<R>) -> Result<Self, SequenceError> {
        let a_inv = dense::inverse(&a)?;
        let a_inv_adj = dense::adjoint(&a_inv);
        let s = dense::matmul(&a, &dense::adjoint(&a))?;
        Ok(NsIteration { a, a_inv, a_inv_adj, s, limit: None })
    }

    /// `A = U diag(a) Uᵀ` with `a` evenly spaced in `[lo, hi] ⊂ (0, 1/2)`;
    /// the limit `U diag((1 − √(1 − 4aᵢ²))/2) Uᵀ` is known.
    pub fn symmetric_instance(m: usize, lo: f64, hi: f64, seed: u64) -> Result<Self, SequenceError> {
        if !(0.0 < lo && lo <= hi && hi < 0.5) {
            return Err(SequenceError::Invalid("spectrum must lie in (0, 1/2)".into()));
        }
        let u = random_orthogonal::<R>(m, seed, 4)?;
        let spread = |i: usize| if m == 1 { lo } else { lo + (hi - lo) * i as f64 / (m - 1) as f64 };
        let av: Vec<R> = (0..m).map(|i| R::of(spread(i))).collect();
        let xv: Vec<R> = (0..m).map(|i| {
            let a = spread(i);
            R::of((1.0 - (1.0 - 4.0 * a * a).sqrt()) / 2.0)
        }).collect();
        let mut it = Self::new(spectral(&u, &av))?;
        it.limit = Some(spectral(&u, &xv));
        Ok(it)
    }
}

impl<R: Real> Sequence<R> for NsIteration<R> {
    fn shape(&self) -> Shape {
        self.s.shape()
    }
    fn next_term(&mut self) -> Option<Element<R>> {
        let out = self.s.clone();
        let m = self.a.dims().0;
        let i_minus = Element::identity(m).sub(&self.s).unwrap();
        let right = dense::matmul(&self.a_inv, &self.s).unwrap();
        let mid = dense::matmul(&i_minus, &right).unwrap();
        let left = dense::matmul(&self.s, &self.a_inv_adj).unwrap();
        let corr = dense::matmul(&left, &mid).unwrap();
        self.s = Element::lincomb(R::of(2.0), &self.s, -R::one(), &corr).unwrap();
        Some(out)
    }
    fn limit(&self) -> Option<Element<R>> {
        self.limit.clone()
    }
    fn residual(&self, x: &Element<R>) -> Option<R> {
        let xi = dense::inverse(x).ok()?;
        let t = dense::matmul(&dense::matmul(&dense::adjoint(&self.a), &xi).ok()?, &self.a).ok()?;
        let m = self.a.dims().0;
        Some(x.add(&t).ok()?.sub(&Element::identity(m)).ok()?.norm_fro())
    }
    fn boxed_clone(&self) -> Box<dyn Sequence<R>> {
        Box::new(self.clone())
    }
}

/// Coupled iteration for `X + A*X^{−q}A = Q`:
/// `X_n = Q − A* Y_n^q A`, `Y_{n+1} = 2Y_n − Y_n X_n Y_n`, `Y_0 = (γQ)⁻¹`.
/// The emitted terms are the `X_n`.
#[derive(Debug, Clone)]
pub struct QpowIteration<R> {
    a: Element<R>,
    q_mat: Element<R>,
    q: R,
    y: Element<R>,
    limit: Option<Element<R>>,
}

impl<R: Real> QpowIteration<R> {
    pub fn new(a: Element<R>, q_mat: Element<R>, q: R, gamma: R) -> Result<Self, SequenceError> {
        if !(q > R::zero()) {
            return Err(SequenceError::Invalid("q must be positive".into()));
        }
        let y = dense::inverse(&q_mat.scale(gamma))?;
        Ok(QpowIteration { a, q_mat, q, y, limit: None })
    }

    /// `Q = I`, `A = U diag(a) Uᵀ` with `a` evenly spaced in `[lo, hi]`.
    /// The limit is `U diag(xᵢ) Uᵀ` with `xᵢ` the largest root of
    /// `x + aᵢ² x^{−q} = 1`.
    pub fn symmetric_instance(m: usize, lo: f64, hi: f64, q: f64, gamma: f64, seed: u64) -> Result<Self, SequenceError> {
        let u = random_orthogonal::<R>(m, seed, 5)?;
        let spread = |i: usize| if m == 1 { lo } else { lo + (hi - lo) * i as f64 / (m - 1) as f64 };
        let mut av = Vec::with_capacity(m);
        let mut xv = Vec::with_capacity(m);
        for i in 0..m {
            let a = spread(i);
            let x = largest_qpow_root(a, q)
                .ok_or_else(|| SequenceError::Invalid(format!("x + {a}²x^-{q} = 1 has no root")))?;
            av.push(R::of(a));
            xv.push(R::of(x));
        }
        let mut it = Self::new(spectral(&u, &av), Element::identity(m), R::of(q), R::of(gamma))?;
        it.limit = Some(spectral(&u, &xv));
        Ok(it)
    }
}

/// Largest root in `(0, 1]` of `x + a² x^{−q} = 1`, by bisection between
/// the minimizer of the left side and 1.
pub fn largest_qpow_root(a: f64, q: f64) -> Option<f64> {
    let c = a * a;
    let g = |x: f64| x + c * x.powf(-q) - 1.0;
    let xmin = (q * c).powf(1.0 / (q + 1.0));
    if g(xmin) > 0.0 || xmin >= 1.0 {
        return None;
    }
    let (mut lo, mut hi) = (xmin, 1.0);
    if g(hi) < 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

impl<R: Real> Sequence<R> for QpowIteration<R> {
    fn shape(&self) -> Shape {
        self.q_mat.shape()
    }
    fn next_term(&mut self) -> Option<Element<R>> {
        let yq = dense::spd_power(&self.y, self.q).ok()?;
        let t = dense::matmul(&dense::matmul(&dense::adjoint(&self.a), &yq).ok()?, &self.a).ok()?;
        let x = self.q_mat.sub(&t).ok()?;
        let yxy = dense::matmul(&dense::matmul(&self.y, &x).ok()?, &self.y).ok()?;
        self.y = Element::lincomb(R::of(2.0), &self.y, -R::one(), &yxy).ok()?;
        Some(x)
    }
    fn limit(&self) -> Option<Element<R>> {
        self.limit.clone()
    }
    fn residual(&self, x: &Element<R>) -> Option<R> {
        let xq = dense::spd_power(x, -self.q).ok()?;
        let t = dense::matmul(&dense::matmul(&dense::adjoint(&self.a), &xq).ok()?, &self.a).ok()?;
        Some(x.add(&t).ok()?.sub(&self.q_mat).ok()?.norm_fro())
    }
    fn boxed_clone(&self) -> Box<dyn Sequence<R>> {
        Box::new(self.clone())
    }
}

/// Smith iteration for the Stein equation `X − AXAᵀ = FFᵀ`:
/// `S_{n+1} = FFᵀ + A S_n Aᵀ`, `S_0 = 0`.
#[derive(Debug, Clone)]
pub struct SmithStein<R> {
    a: Element<R>,
    at: Element<R>,
    c: Element<R>,
    s: Element<R>,
    limit: Element<R>,
}

impl<R: Real> SmithStein<R> {
    pub fn new(a: Element<R>, f: &Element<R>) -> Result<Self, SequenceError> {
        let m = a.dims().0;
        if a.dims() != (m, m) || f.dims().0 != m {
            return Err(SequenceError::Invalid("A must be square and F must have as many rows".into()));
        }
        let rho = dense::spectral_radius_estimate(&a, 500)?;
        if !(rho < R::one()) {
            return Err(SequenceError::Invalid(format!("spectral radius estimate {rho} is not below 1")));
        }
        let at = dense::transpose(&a);
        let c = dense::matmul(f, &dense::transpose(f))?;
        let mut it = SmithStein { a, at, c: c.clone(), s: Element::zeros(c.shape()), limit: c };
        it.limit = it.converged_limit();
        Ok(it)
    }

    /// Tridiagonal Toeplitz `A` with the given diagonals and a seeded random
    /// `F` of size `m × rank` (entries uniform in `[−1, 1]`).
    pub fn tridiagonal_instance(m: usize, diag: f64, off: f64, rank: usize, seed: u64) -> Result<Self, SequenceError> {
        let a = Element::from_fn(Shape::Matrix(m, m), |idx| {
            let (i, j) = (idx / m, idx % m);
            if i == j {
                R::of(diag)
            } else if i.abs_diff(j) == 1 {
                R::of(off)
            } else {
                R::zero()
            }
        });
        let mut g = rng(seed, 6);
        let f = uniform(&mut g, Shape::Matrix(m, rank), -1.0, 1.0);
        Self::new(a, &f)
    }

    fn step(&self, s: &Element<R>) -> Element<R> {
        let t = dense::matmul(&dense::matmul(&self.a, s).unwrap(), &self.at).unwrap();
        self.c.add(&t).unwrap()
    }

    fn converged_limit(&self) -> Element<R> {
        let mut s = Element::zeros(self.c.shape());
        for _ in 0..100_000 {
            let next = self.step(&s);
            let change = next.sub(&s).unwrap().norm_fro();
            let scale = next.norm_fro();
            s = next;
            if change <= R::of(1e-15) * scale {
                break;
            }
        }
        s
    }
}

impl<R: Real> Sequence<R> for SmithStein<R> {
    fn shape(&self) -> Shape {
        self.c.shape()
    }
    fn next_term(&mut self) -> Option<Element<R>> {
        let out = self.s.clone();
        self.s = self.step(&self.s);
        Some(out)
    }
    fn limit(&self) -> Option<Element<R>> {
        Some(self.limit.clone())
    }
    fn residual(&self, x: &Element<R>) -> Option<R> {
        let t = dense::matmul(&dense::matmul(&self.a, x).ok()?, &self.at).ok()?;
        Some(x.sub(&t).ok()?.sub(&self.c).ok()?.norm_fro())
    }
    fn boxed_clone(&self) -> Box<dyn Sequence<R>> {
        Box::new(self.clone())
    }
}

/// Parses the text format into a list of `f64` elements.
pub fn parse_sequence(text: &str) -> Result<Vec<Element<f64>>, SequenceError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()));
    let (hline, header) = loop {
        match lines.next() {
            Some((_, "")) => continue,
            Some(x) => break x,
            None => return Err(SequenceError::Parse { line: 0, msg: "empty input".into() }),
        }
    };
    let perr = |line: usize, msg: String| SequenceError::Parse { line, msg };
    let words: Vec<&str> = header.split_whitespace().collect();
    let dim = |w: &str| w.parse::<usize>().map_err(|_| perr(hline, format!("bad dimension '{w}'")));
    let shape = match words.as_slice() {
        ["scalar"] => Shape::Scalar,
        ["vector", m] => Shape::Vector(dim(m)?),
        ["matrix", m, s] => Shape::Matrix(dim(m)?, dim(s)?),
        _ => return Err(perr(hline, format!("expected 'scalar', 'vector <m>' or 'matrix <m> <s>', found '{header}'"))),
    };
    if shape.is_empty() {
        return Err(perr(hline, "zero dimension".into()));
    }
    let parse_row = |line: usize, s: &str| -> Result<Vec<f64>, SequenceError> {
        s.split_whitespace()
            .map(|w| w.parse::<f64>().map_err(|_| perr(line, format!("bad number '{w}'"))))
            .collect()
    };
    let mut out = Vec::new();
    match shape {
        Shape::Scalar | Shape::Vector(_) => {
            for (ln, l) in lines {
                if l.is_empty() {
                    continue;
                }
                let row = parse_row(ln, l)?;
                if row.len() != shape.len() {
                    return Err(perr(ln, format!("expected {} values, found {}", shape.len(), row.len())));
                }
                out.push(Element::from_f64(shape, &row)?);
            }
        }
        Shape::Matrix(m, s) => {
            let mut block: Vec<f64> = Vec::new();
            let mut start = 0;
            let flush = |block: &mut Vec<f64>, at: usize, out: &mut Vec<Element<f64>>| -> Result<(), SequenceError> {
                if block.is_empty() {
                    return Ok(());
                }
                if block.len() != m * s {
                    return Err(perr(at, format!("matrix block has {} values, expected {}", block.len(), m * s)));
                }
                out.push(Element::from_f64(shape, block)?);
                block.clear();
                Ok(())
            };
            for (ln, l) in lines {
                if l.is_empty() {
                    flush(&mut block, start, &mut out)?;
                    continue;
                }
                if block.is_empty() {
                    start = ln;
                }
                let row = parse_row(ln, l)?;
                if row.len() != s {
                    return Err(perr(ln, format!("expected {s} values per row, found {}", row.len())));
                }
                block.extend(row);
                if block.len() > m * s {
                    return Err(perr(ln, format!("matrix block longer than {m} rows")));
                }
            }
            flush(&mut block, start, &mut out)?;
        }
    }
    if out.is_empty() {
        return Err(perr(hline, "no terms".into()));
    }
    Ok(out)
}

/// Writes elements in the text format. All terms must share one shape.
pub fn format_sequence(terms: &[Element<f64>]) -> String {
    let mut s = String::new();
    let Some(first) = terms.first() else {
        return s;
    };
    match first.shape() {
        Shape::Scalar => s.push_str("scalar\n"),
        Shape::Vector(m) => {
            let _ = writeln!(s, "vector {m}");
        }
        Shape::Matrix(m, c) => {
            let _ = writeln!(s, "matrix {m} {c}");
        }
    }
    let row = |vals: &[f64]| vals.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ");
    for (i, t) in terms.iter().enumerate() {
        match t.shape() {
            Shape::Matrix(m, c) => {
                if i > 0 {
                    s.push('\n');
                }
                for r in 0..m {
                    s.push_str(&row(&t.data()[r * c..(r + 1) * c]));
                    s.push('\n');
                }
            }
            _ => {
                s.push_str(&row(t.data()));
                s.push('\n');
            }
        }
    }
    s
}

/// Declarative description of a source, used by experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    KernelRecurrence {
        dim: usize,
        #[serde(default)]
        cols: Option<usize>,
    },
    GeometricModes {
        dim: usize,
        lambdas: Vec<f64>,
        amplitudes: Vec<f64>,
        #[serde(default)]
        alternating: bool,
    },
    LogarithmicModes {
        dim: usize,
        amplitudes: Vec<f64>,
        b: f64,
        #[serde(default)]
        alternating: bool,
    },
    ExponentialMixture {
        dim: usize,
        modes: usize,
        #[serde(default)]
        oscillating: bool,
    },
    Kaczmarz {
        dim: usize,
        #[serde(default)]
        identity: bool,
        #[serde(default)]
        rows_per_term: Option<usize>,
    },
    Ns {
        dim: usize,
        #[serde(default = "ns_lo")]
        lo: f64,
        #[serde(default = "ns_hi")]
        hi: f64,
    },
    Qpow {
        dim: usize,
        #[serde(default = "qpow_q")]
        q: f64,
        #[serde(default = "one")]
        gamma: f64,
        #[serde(default = "qpow_lo")]
        lo: f64,
        #[serde(default = "qpow_hi")]
        hi: f64,
    },
    Stein {
        dim: usize,
        #[serde(default = "stein_diag")]
        diag: f64,
        #[serde(default = "stein_off")]
        off: f64,
        #[serde(default = "stein_rank")]
        rank: usize,
    },
    Constant {
        value: Vec<f64>,
    },
    Literal {
        terms: Vec<Vec<f64>>,
        #[serde(default)]
        rows: Option<usize>,
        #[serde(default)]
        limit: Option<Vec<f64>>,
    },
}

fn ns_lo() -> f64 {
    0.3
}
fn ns_hi() -> f64 {
    0.49
}
fn qpow_q() -> f64 {
    0.7
}
fn qpow_lo() -> f64 {
    0.2
}
fn qpow_hi() -> f64 {
    0.45
}
fn one() -> f64 {
    1.0
}
fn stein_diag() -> f64 {
    0.45
}
fn stein_off() -> f64 {
    0.225
}
fn stein_rank() -> usize {
    2
}

/// Constant sequence.
#[derive(Debug, Clone)]
pub struct Constant<T>(pub Element<T>);

impl<T: Field> Sequence<T> for Constant<T> {
    fn shape(&self) -> Shape {
        self.0.shape()
    }
    fn next_term(&mut self) -> Option<Element<T>> {
        Some(self.0.clone())
    }
    fn limit(&self) -> Option<Element<T>> {
        Some(self.0.clone())
    }
    fn boxed_clone(&self) -> Box<dyn Sequence<T>> {
        Box::new(self.clone())
    }
}

fn vec_shape(v: &[f64]) -> Shape {
    if v.len() == 1 {
        Shape::Scalar
    } else {
        Shape::Vector(v.len())
    }
}

impl SourceSpec {
    pub fn build(&self, seed: u64) -> Result<Box<dyn Sequence<f64>>, SequenceError> {
        let vshape = |dim: usize| if dim == 1 { Shape::Scalar } else { Shape::Vector(dim) };
        Ok(match self {
            SourceSpec::KernelRecurrence { dim, cols } => {
                let shape = match cols {
                    Some(c) => Shape::Matrix(*dim, *c),
                    None => vshape(*dim),
                };
                Box::new(KernelRecurrence::<f64>::new(shape, seed))
            }
            SourceSpec::GeometricModes { dim, lambdas, amplitudes, alternating } => {
                Box::new(GeometricModes::<f64>::random(vshape(*dim), amplitudes, lambdas, *alternating, seed)?)
            }
            SourceSpec::LogarithmicModes { dim, amplitudes, b, alternating } => {
                Box::new(LogarithmicModes::<f64>::random(vshape(*dim), amplitudes, *b, *alternating, seed)?)
            }
            SourceSpec::ExponentialMixture { dim, modes, oscillating } => {
                Box::new(ExponentialMixture::<f64>::random(vshape(*dim), *modes, *oscillating, seed)?)
            }
            SourceSpec::Kaczmarz { dim, identity, rows_per_term } => {
                let a = if *identity { Element::identity(*dim) } else { parter(*dim) };
                Box::new(Kaczmarz::new(a, *rows_per_term)?)
            }
            SourceSpec::Ns { dim, lo, hi } => Box::new(NsIteration::<f64>::symmetric_instance(*dim, *lo, *hi, seed)?),
            SourceSpec::Qpow { dim, q, gamma, lo, hi } => {
                Box::new(QpowIteration::<f64>::symmetric_instance(*dim, *lo, *hi, *q, *gamma, seed)?)
            }
            SourceSpec::Stein { dim, diag, off, rank } => {
                Box::new(SmithStein::<f64>::tridiagonal_instance(*dim, *diag, *off, *rank, seed)?)
            }
            SourceSpec::Constant { value } => {
                if value.is_empty() {
                    return Err(SequenceError::Invalid("empty constant".into()));
                }
                Box::new(Constant(Element::from_f64(vec_shape(value), value)?))
            }
            SourceSpec::Literal { terms, rows, limit } => {
                let first = terms.first().ok_or_else(|| SequenceError::Invalid("no terms".into()))?;
                let shape = match rows {
                    Some(r) if *r > 0 && first.len() % r == 0 => Shape::Matrix(*r, first.len() / r),
                    Some(r) => return Err(SequenceError::Invalid(format!("{} values do not fill {r} rows", first.len()))),
                    None => vec_shape(first),
                };
                let elems = terms.iter().map(|t| Element::from_f64(shape, t)).collect::<Result<Vec<_>, _>>()?;
                let mut rec = Recorded::new(elems)?;
                if let Some(l) = limit {
                    rec = rec.with_limit(Element::from_f64(shape, l)?);
                }
                Box::new(rec)
            }
        })
    }
}
