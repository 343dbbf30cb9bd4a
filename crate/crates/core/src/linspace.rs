//! Elements of the vector space `E`, linear functionals on it, and the
//! dual elements `c·y` used by the original topological algorithms.
//!
//! An [`Element`] is a dense scalar, vector or row-major matrix. All
//! arithmetic checks shapes and reports a [`LinalgError`] on mismatch.

use std::fmt;
use std::sync::Arc;

use num_traits::{Float, Zero};
use thiserror::Error;

use crate::field::{Field, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: Shape, found: Shape },
    #[error("operation needs a square matrix, found {0}")]
    NotSquare(Shape),
    #[error("singular matrix (pivot {pivot:e} at step {step})")]
    Singular { step: usize, pivot: f64 },
    #[error("functional does not apply to {0}")]
    Functional(Shape),
}

/// Shape of an element: `ℝ`, `ℝ^m` or `ℝ^{m×s}` (or the complex analogues).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Scalar,
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Scalar => 1,
            Shape::Vector(m) => m,
            Shape::Matrix(m, s) => m * s,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Scalar => write!(f, "scalar"),
            Shape::Vector(m) => write!(f, "vector({m})"),
            Shape::Matrix(m, s) => write!(f, "matrix({m}x{s})"),
        }
    }
}

/// Dense element of `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct Element<T> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: Field> Element<T> {
    pub fn scalar(x: T) -> Self {
        Element { shape: Shape::Scalar, data: vec![x] }
    }

    pub fn vector(data: Vec<T>) -> Self {
        Element { shape: Shape::Vector(data.len()), data }
    }

    /// Row-major `m × s` matrix.
    pub fn matrix(m: usize, s: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if data.len() != m * s {
            return Err(LinalgError::Dimension {
                expected: Shape::Matrix(m, s),
                found: Shape::Vector(data.len()),
            });
        }
        Ok(Element { shape: Shape::Matrix(m, s), data })
    }

    pub fn zeros(shape: Shape) -> Self {
        Element { shape, data: vec![T::zero(); shape.len()] }
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize) -> T) -> Self {
        Element { shape, data: (0..shape.len()).map(&mut f).collect() }
    }

    pub fn identity(m: usize) -> Self {
        let mut e = Self::zeros(Shape::Matrix(m, m));
        for i in 0..m {
            e.data[i * m + i] = T::one();
        }
        e
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Rows and columns; a vector is a column, a scalar is `1 × 1`.
    pub fn dims(&self) -> (usize, usize) {
        match self.shape {
            Shape::Scalar => (1, 1),
            Shape::Vector(m) => (m, 1),
            Shape::Matrix(m, s) => (m, s),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        let (_, s) = self.dims();
        self.data[i * s + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let (_, s) = self.dims();
        self.data[i * s + j] = v;
    }

    /// The single entry of a scalar element.
    pub fn as_scalar(&self) -> Option<T> {
        match self.shape {
            Shape::Scalar => Some(self.data[0]),
            _ => None,
        }
    }

    fn check(&self, other: &Self) -> Result<(), LinalgError> {
        if self.shape == other.shape {
            Ok(())
        } else {
            Err(LinalgError::Dimension { expected: self.shape, found: other.shape })
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check(other)?;
        Ok(Element {
            shape: self.shape,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check(other)?;
        Ok(Element {
            shape: self.shape,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        })
    }

    pub fn scale(&self, c: T) -> Self {
        Element { shape: self.shape, data: self.data.iter().map(|&a| c * a).collect() }
    }

    /// `self ← self + a·x`.
    pub fn axpy(&mut self, a: T, x: &Self) -> Result<(), LinalgError> {
        self.check(x)?;
        for (s, &v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
        Ok(())
    }

    /// `a·x + b·z`.
    pub fn lincomb(a: T, x: &Self, b: T, z: &Self) -> Result<Self, LinalgError> {
        x.check(z)?;
        Ok(Element {
            shape: x.shape,
            data: x.data.iter().zip(&z.data).map(|(&u, &v)| a * u + b * v).collect(),
        })
    }

    /// Reporting norm: largest entry modulus. NaN entries make the norm NaN.
    pub fn norm_inf(&self) -> T::Real {
        let mut m = T::Real::zero();
        for &v in &self.data {
            let a = v.modulus();
            if a.is_nan() {
                return a;
            }
            if a > m {
                m = a;
            }
        }
        m
    }

    pub fn norm_fro(&self) -> T::Real {
        self.data.iter().map(|v| {
            let a = v.modulus();
            a * a
        }).fold(T::Real::zero(), |s, x| s + x).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Element { shape: self.shape, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Same data viewed with another shape of equal length.
    pub fn reshaped(mut self, shape: Shape) -> Result<Self, LinalgError> {
        if shape.len() != self.data.len() {
            return Err(LinalgError::Dimension { expected: shape, found: self.shape });
        }
        self.shape = shape;
        Ok(self)
    }
}

/// Entrywise conversion from `f64`.
impl<T: Field> Element<T> {
    pub fn from_f64(shape: Shape, data: &[f64]) -> Result<Self, LinalgError> {
        if data.len() != shape.len() {
            return Err(LinalgError::Dimension { expected: shape, found: Shape::Vector(data.len()) });
        }
        Ok(Element { shape, data: data.iter().map(|&x| T::from_f64(x)).collect() })
    }
}

/// Linear functional `y ∈ E*`.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional<T> {
    /// `⟨y, x⟩ = Σ conj(y_i) x_i` (plain `Σ y_i x_i` when `conjugate` is off).
    /// Applies to scalars, vectors and matrices of matching length.
    Dot { y: Vec<T>, conjugate: bool },
    /// `⟨y, M x⟩` for vectors.
    WeightedDot { y: Vec<T>, m: Element<T>, conjugate: bool },
    /// `trace(X)` for square matrices.
    Trace,
    /// `trace(YᵀX)`.
    TraceY(Element<T>),
    /// `uᵀ X v`.
    Bilinear { u: Vec<T>, v: Vec<T> },
}

impl<T: Field> Functional<T> {
    pub fn dot(y: Vec<T>) -> Self {
        Functional::Dot { y, conjugate: true }
    }

    /// Identity functional on `E = ℝ` (or `ℂ`).
    pub fn identity() -> Self {
        Functional::Dot { y: vec![T::one()], conjugate: true }
    }

    pub fn apply(&self, x: &Element<T>) -> Result<T, LinalgError> {
        match self {
            Functional::Dot { y, conjugate } => {
                if y.len() != x.len() {
                    return Err(LinalgError::Functional(x.shape()));
                }
                Ok(inner(y, x.data(), *conjugate))
            }
            Functional::WeightedDot { y, m, conjugate } => {
                let (r, c) = m.dims();
                if !matches!(x.shape(), Shape::Vector(_)) || c != x.len() || r != y.len() {
                    return Err(LinalgError::Functional(x.shape()));
                }
                let mx: Vec<T> = (0..r)
                    .map(|i| (0..c).map(|j| m.get(i, j) * x.data()[j]).sum())
                    .collect();
                Ok(inner(y, &mx, *conjugate))
            }
            Functional::Trace => match x.shape() {
                Shape::Matrix(m, s) if m == s => Ok((0..m).map(|i| x.get(i, i)).sum()),
                Shape::Scalar => Ok(x.data()[0]),
                sh => Err(LinalgError::Functional(sh)),
            },
            Functional::TraceY(y) => {
                if y.shape() != x.shape() {
                    return Err(LinalgError::Functional(x.shape()));
                }
                // trace(YᵀX) = Σ_ij Y_ij X_ij
                Ok(y.data().iter().zip(x.data()).map(|(&a, &b)| a * b).sum())
            }
            Functional::Bilinear { u, v } => {
                let (m, s) = x.dims();
                if u.len() != m || v.len() != s {
                    return Err(LinalgError::Functional(x.shape()));
                }
                let mut acc = T::zero();
                for i in 0..m {
                    let row: T = (0..s).map(|j| x.get(i, j) * v[j]).sum();
                    acc += u[i] * row;
                }
                Ok(acc)
            }
        }
    }

    /// Whether [`apply`](Self::apply) accepts elements of this shape.
    pub fn accepts(&self, shape: Shape) -> bool {
        self.apply(&Element::zeros(shape)).is_ok()
    }
}

fn inner<T: Field>(y: &[T], x: &[T], conjugate: bool) -> T {
    if conjugate {
        y.iter().zip(x).map(|(&a, &b)| a.conj() * b).sum()
    } else {
        y.iter().zip(x).map(|(&a, &b)| a * b).sum()
    }
}

/// `c·y ∈ E*`.
#[derive(Debug, Clone)]
pub struct DualElement<T> {
    pub coefficient: T,
    pub base: Arc<Functional<T>>,
}

impl<T: Field> DualElement<T> {
    pub fn new(coefficient: T, base: Arc<Functional<T>>) -> Self {
        DualElement { coefficient, base }
    }

    pub fn apply(&self, x: &Element<T>) -> Result<T, LinalgError> {
        Ok(self.coefficient * self.base.apply(x)?)
    }

    /// `self − other`; both must share the same base functional.
    pub fn sub(&self, other: &Self) -> Self {
        debug_assert!(Arc::ptr_eq(&self.base, &other.base) || self.base == other.base);
        DualElement { coefficient: self.coefficient - other.coefficient, base: self.base.clone() }
    }

    pub fn is_finite(&self) -> bool {
        self.coefficient.finite()
    }
}

/// Real part conversion used by reports.
pub fn to_f64_vec<T: Field>(x: &Element<T>) -> Vec<f64> {
    x.data().iter().map(|v| v.re().as_f64()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn norms() {
        let x = Element::<f64>::vector(vec![1.0, -3.0, 2.0]);
        assert_eq!(x.norm_inf(), 3.0);
        assert!((x.norm_fro() - 14f64.sqrt()).abs() < 1e-15);
        assert_eq!(Element::<f64>::zeros(Shape::Vector(4)).norm_inf(), 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let a = Element::vector(vec![1.0, 2.0]);
        let b = Element::vector(vec![1.0, 2.0, 3.0]);
        assert!(matches!(a.add(&b), Err(LinalgError::Dimension { .. })));
    }

    #[test]
    fn functionals() {
        let x = Element::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(Functional::Trace.apply(&x).unwrap(), 5.0);
        let y = Element::matrix(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(Functional::TraceY(y).apply(&x).unwrap(), 4.0);
        let f = Functional::Bilinear { u: vec![1.0, 1.0], v: vec![0.0, 1.0] };
        assert_eq!(f.apply(&x).unwrap(), 6.0);
        let w = Functional::WeightedDot {
            y: vec![1.0, 0.0],
            m: Element::matrix(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap(),
            conjugate: true,
        };
        assert_eq!(w.apply(&Element::vector(vec![5.0, 7.0])).unwrap(), 7.0);
        assert!(Functional::Trace.apply(&Element::vector(vec![1.0])).is_err());
    }

    #[test]
    fn conjugate_dot() {
        let i = Complex64::new(0.0, 1.0);
        let x = Element::vector(vec![i]);
        assert_eq!(Functional::dot(vec![i]).apply(&x).unwrap(), Complex64::new(1.0, 0.0));
        let plain = Functional::Dot { y: vec![i], conjugate: false };
        assert_eq!(plain.apply(&x).unwrap(), Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn dual_element() {
        let f = Arc::new(Functional::dot(vec![1.0, 1.0]));
        let d = DualElement::new(2.0, f.clone()).sub(&DualElement::new(0.5, f));
        assert_eq!(d.apply(&Element::vector(vec![1.0, 3.0])).unwrap(), 6.0);
    }
}
