//! Small dense linear algebra on matrix [`Element`]s.
//!
//! Only what the generators and the oracle need: products, LU with
//! partial pivoting, inverses, determinants and a cyclic Jacobi
//! eigensolver for real symmetric matrices.

use num_traits::{Float, One, Zero};

use crate::field::{Field, Real};
use crate::linspace::{Element, LinalgError, Shape};

fn square<T: Field>(a: &Element<T>) -> Result<usize, LinalgError> {
    match a.shape() {
        Shape::Matrix(m, s) if m == s => Ok(m),
        Shape::Scalar => Ok(1),
        sh => Err(LinalgError::NotSquare(sh)),
    }
}

fn as_matrix<T: Field>(a: &Element<T>) -> Element<T> {
    let (m, s) = a.dims();
    Element::matrix(m, s, a.data().to_vec()).unwrap()
}

/// Matrix product `A·B`. Vectors act as columns.
pub fn matmul<T: Field>(a: &Element<T>, b: &Element<T>) -> Result<Element<T>, LinalgError> {
    let (m, k) = a.dims();
    let (k2, n) = b.dims();
    if k != k2 {
        return Err(LinalgError::Dimension { expected: Shape::Matrix(k, n), found: b.shape() });
    }
    let ad = a.data();
    let bd = b.data();
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = ad[i * k + p];
            if aip == T::zero() {
                continue;
            }
            let brow = &bd[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
    match b.shape() {
        Shape::Vector(_) => Ok(Element::vector(out)),
        _ => Element::matrix(m, n, out),
    }
}

pub fn transpose<T: Field>(a: &Element<T>) -> Element<T> {
    let (m, s) = a.dims();
    let mut out = vec![T::zero(); m * s];
    for i in 0..m {
        for j in 0..s {
            out[j * m + i] = a.get(i, j);
        }
    }
    Element::matrix(s, m, out).unwrap()
}

/// Conjugate transpose.
pub fn adjoint<T: Field>(a: &Element<T>) -> Element<T> {
    transpose(a).map(|v| v.conj())
}

/// `(A + A*)/2`.
pub fn hermitian_part<T: Field>(a: &Element<T>) -> Result<Element<T>, LinalgError> {
    let half = T::from_f64(0.5);
    Element::lincomb(half, a, half, &adjoint(a))
}

/// LU factorization `PA = LU` with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    sign: T,
}

impl<T: Field> Lu<T> {
    pub fn new(a: &Element<T>) -> Result<Self, LinalgError> {
        let n = square(a)?;
        let mut lu = a.data().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].modulus();
            for i in k + 1..n {
                let v = lu[i * n + k].modulus();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::Real::zero() || !Float::is_finite(best) {
                return Err(LinalgError::Singular { step: k, pivot: best.as_f64() });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / piv;
                lu[i * n + k] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let u = lu[k * n + j];
                        lu[i * n + j] -= f * u;
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm, sign })
    }

    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve(&self, b: &Element<T>) -> Result<Element<T>, LinalgError> {
        let (m, s) = b.dims();
        if m != self.n {
            return Err(LinalgError::Dimension { expected: Shape::Matrix(self.n, s), found: b.shape() });
        }
        let mut out = vec![T::zero(); m * s];
        let mut col = vec![T::zero(); m];
        for j in 0..s {
            for i in 0..m {
                col[i] = b.get(i, j);
            }
            let x = self.solve_vec(&col);
            for i in 0..m {
                out[i * s + j] = x[i];
            }
        }
        match b.shape() {
            Shape::Vector(_) => Ok(Element::vector(out)),
            Shape::Scalar => Ok(Element::scalar(out[0])),
            _ => Element::matrix(m, s, out),
        }
    }

    pub fn inverse(&self) -> Element<T> {
        self.solve(&Element::identity(self.n)).unwrap()
    }

    pub fn det(&self) -> T {
        let n = self.n;
        (0..n).fold(self.sign, |d, i| d * self.lu[i * n + i])
    }
}

pub fn inverse<T: Field>(a: &Element<T>) -> Result<Element<T>, LinalgError> {
    let inv = Lu::new(&as_matrix(a))?.inverse();
    match a.shape() {
        Shape::Scalar => Ok(Element::scalar(inv.data()[0])),
        _ => Ok(inv),
    }
}

pub fn solve<T: Field>(a: &Element<T>, b: &Element<T>) -> Result<Element<T>, LinalgError> {
    Lu::new(a)?.solve(b)
}

/// Determinant; zero for exactly singular matrices.
pub fn det<T: Field>(a: &Element<T>) -> Result<T, LinalgError> {
    square(a)?;
    match Lu::new(a) {
        Ok(lu) => Ok(lu.det()),
        Err(LinalgError::Singular { .. }) => Ok(T::zero()),
        Err(e) => Err(e),
    }
}

/// Induced 1-norm (largest column sum).
pub fn norm_1<T: Field>(a: &Element<T>) -> T::Real {
    let (m, s) = a.dims();
    (0..s)
        .map(|j| (0..m).fold(T::Real::zero(), |acc, i| acc + a.get(i, j).modulus()))
        .fold(T::Real::zero(), |a, b| if b > a { b } else { a })
}

/// `‖A‖₁ ‖A⁻¹‖₁`, infinite when singular.
pub fn condition_1<T: Field>(a: &Element<T>) -> T::Real {
    match Lu::new(a) {
        Ok(lu) => norm_1(a) * norm_1(&lu.inverse()),
        Err(_) => T::Real::infinity(),
    }
}

/// Eigendecomposition `A = V diag(λ) Vᵀ` of a real symmetric matrix by
/// cyclic Jacobi rotations. Returns eigenvalues (ascending) and `V`.
pub fn symmetric_eigen<R: Real>(a: &Element<R>) -> Result<(Vec<R>, Element<R>), LinalgError> {
    let n = square(a)?;
    let mut m = a.data().to_vec();
    let mut v = Element::<R>::identity(n).into_data();
    let two = R::of(2.0);
    for _sweep in 0..100 {
        let mut off = R::zero();
        let mut diag = R::zero();
        for i in 0..n {
            diag = diag + m[i * n + i] * m[i * n + i];
            for j in i + 1..n {
                off = off + m[i * n + j] * m[i * n + j];
            }
        }
        if off <= R::epsilon() * R::epsilon() * diag || off == R::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == R::zero() {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + R::one()).sqrt());
                let t = if theta == R::zero() { R::one() } else { t };
                let c = R::one() / (t * t + R::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap());
    let vals = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vs = vec![R::zero(); n * n];
    for (newj, &j) in order.iter().enumerate() {
        for i in 0..n {
            vs[i * n + newj] = v[i * n + j];
        }
    }
    Ok((vals, Element::matrix(n, n, vs)?))
}

/// `V diag(f(λ)) Vᵀ` for a real symmetric matrix.
pub fn symmetric_function<R: Real>(
    a: &Element<R>,
    f: impl Fn(R) -> R,
) -> Result<Element<R>, LinalgError> {
    let sym = hermitian_part(a)?;
    let (vals, v) = symmetric_eigen(&sym)?;
    let n = vals.len();
    let mut scaled = v.clone();
    for j in 0..n {
        let fj = f(vals[j]);
        for i in 0..n {
            scaled.set(i, j, v.get(i, j) * fj);
        }
    }
    matmul(&scaled, &transpose(&v))
}

/// Real power `A^q` of a symmetric positive definite matrix.
pub fn spd_power<R: Real>(a: &Element<R>, q: R) -> Result<Element<R>, LinalgError> {
    symmetric_function(a, |x| x.powf(q))
}

/// Spectral radius estimate `(‖Aᴷx‖/‖x‖)^{1/K}` by normalized power iteration.
pub fn spectral_radius_estimate<T: Field>(a: &Element<T>, iterations: usize) -> Result<T::Real, LinalgError> {
    let n = square(a)?;
    let mut x = Element::vector((0..n).map(|i| T::from_f64(1.0 + 0.1 * ((i * 7919) % 13) as f64)).collect());
    let mut log_growth = T::Real::zero();
    let iterations = iterations.max(1);
    for _ in 0..iterations {
        let nx = x.norm_fro();
        if nx == T::Real::zero() {
            return Ok(T::Real::zero());
        }
        x = x.scale(T::from_real(T::Real::one() / nx));
        x = matmul(a, &x)?;
        let g = x.norm_fro();
        if g == T::Real::zero() {
            return Ok(T::Real::zero());
        }
        log_growth = log_growth + g.ln();
    }
    Ok((log_growth / T::Real::of(iterations as f64)).exp())
}
