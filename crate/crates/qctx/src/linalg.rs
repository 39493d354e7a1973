//! Small dense matrices: products, Kronecker products, LU, eigenvalues and the
//! matrix exponential.
//!
//! Everything here targets matrices up to a few dozen rows, which is all the
//! Liouville representation of one or two qubits ever needs.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{Num, One, Zero};

use crate::error::{Error, Result};
use crate::real::Real;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

pub type CMatrix<T> = Matrix<Complex<T>>;

impl<E: fmt::Debug> fmt::Debug for Matrix<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl<E: Copy> Matrix<E> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<E>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Matrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<E>]) -> Self {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == nc), "ragged rows");
        Matrix { rows: nr, cols: nc, data: rows.iter().flatten().copied().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[E] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<E> {
        (0..self.rows).map(|r| self.data[r * self.cols + c]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<E>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn map<F: Copy>(&self, f: impl Fn(E) -> F) -> Matrix<F> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    /// Sub-block starting at (r0, c0).
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Matrix::from_fn(nr, nc, |r, c| self[(r0 + r, c0 + c)])
    }
}

impl<E: Copy + Num> Matrix<E> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![E::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |r, c| if r == c { E::one() } else { E::zero() })
    }

    pub fn from_diag(d: &[E]) -> Self {
        let n = d.len();
        Matrix::from_fn(n, n, |r, c| if r == c { d[r] } else { E::zero() })
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == E::zero() {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[E]) -> Vec<E> {
        assert_eq!(self.cols, v.len(), "vector length differs from column count");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).fold(E::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    pub fn scale(&self, s: E) -> Self {
        self.map(|x| x * s)
    }

    pub fn trace(&self) -> E {
        (0..self.rows.min(self.cols)).fold(E::zero(), |acc, i| acc + self[(i, i)])
    }

    /// Kronecker product, first factor most significant.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (ra, ca) = self.shape();
        let (rb, cb) = rhs.shape();
        Matrix::from_fn(ra * rb, ca * cb, |r, c| self[(r / rb, c / cb)] * rhs[(r % rb, c % cb)])
    }

    /// Tr[self · rhs] without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> E {
        assert_eq!(self.cols, rhs.rows);
        assert_eq!(self.rows, rhs.cols);
        let mut acc = E::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc = acc + self.data[i * self.cols + j] * rhs.data[j * rhs.cols + i];
            }
        }
        acc
    }

    /// Elementwise product.
    pub fn hadamard(&self, rhs: &Self) -> Self {
        assert_eq!(self.shape(), rhs.shape());
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a * b).collect(),
        }
    }

    /// `self^m` by repeated squaring.
    pub fn powi(&self, mut m: u64) -> Self {
        assert!(self.is_square());
        let mut base = self.clone();
        let mut acc = Matrix::identity(self.rows);
        while m > 0 {
            if m & 1 == 1 {
                acc = acc.matmul(&base);
            }
            m >>= 1;
            if m > 0 {
                base = base.matmul(&base);
            }
        }
        acc
    }
}

impl<E> Index<(usize, usize)> for Matrix<E> {
    type Output = E;
    fn index(&self, (r, c): (usize, usize)) -> &E {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<E> IndexMut<(usize, usize)> for Matrix<E> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut E {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl<E: Copy + Num> Add for &Matrix<E> {
    type Output = Matrix<E>;
    fn add(self, rhs: Self) -> Matrix<E> {
        assert_eq!(self.shape(), rhs.shape());
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<E: Copy + Num> Sub for &Matrix<E> {
    type Output = Matrix<E>;
    fn sub(self, rhs: Self) -> Matrix<E> {
        assert_eq!(self.shape(), rhs.shape());
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<E: Copy + Num> Mul for &Matrix<E> {
    type Output = Matrix<E>;
    fn mul(self, rhs: Self) -> Matrix<E> {
        self.matmul(rhs)
    }
}

impl<E: Copy + Num + Neg<Output = E>> Neg for &Matrix<E> {
    type Output = Matrix<E>;
    fn neg(self) -> Matrix<E> {
        self.map(|x| -x)
    }
}

impl<T: Real> Matrix<Complex<T>> {
    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn from_real(m: &Matrix<T>) -> Self {
        m.map(|x| Complex::new(x, T::zero()))
    }

    pub fn real_part(&self) -> Matrix<T> {
        self.map(|z| z.re)
    }

    pub fn max_abs_c(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.is_square() && (self - &self.dagger()).max_abs_c() <= tol
    }

    /// Checks U†U = I.
    pub fn is_unitary(&self, tol: T) -> bool {
        self.is_square()
            && (&self.dagger().matmul(self) - &Matrix::identity(self.rows)).max_abs_c() <= tol
    }

    /// |ψ⟩⟨ψ| for a column vector given as a slice.
    pub fn projector(psi: &[Complex<T>]) -> Self {
        Matrix::from_fn(psi.len(), psi.len(), |r, c| psi[r] * psi[c].conj())
    }
}

/// LU factorisation with partial pivoting, `P·A = L·U`.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    sign: T,
    singular: bool,
}

impl<T: Real> Lu<T> {
    pub fn new(a: &Matrix<T>) -> Self {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let mut singular = false;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for r in (k + 1)..n {
                let v = lu[(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == T::zero() {
                singular = true;
                continue;
            }
            if p != k {
                for c in 0..n {
                    lu.data.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = lu[(k, k)];
            for r in (k + 1)..n {
                let f = lu[(r, k)] / piv;
                lu[(r, k)] = f;
                if f != T::zero() {
                    for c in (k + 1)..n {
                        let u = lu[(k, c)];
                        lu[(r, c)] -= f * u;
                    }
                }
            }
        }
        Lu { lu, perm, sign, singular }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn det(&self) -> T {
        if self.singular {
            return T::zero();
        }
        (0..self.lu.rows).fold(self.sign, |acc, i| acc * self.lu[(i, i)])
    }

    /// (sign of det, log|det|), with log|det| accumulated from the pivots.
    pub fn log_abs_det(&self) -> (T, T) {
        if self.singular {
            return (T::zero(), T::neg_infinity());
        }
        let mut sign = self.sign;
        let mut acc = T::zero();
        for i in 0..self.lu.rows {
            let p = self.lu[(i, i)];
            if p < T::zero() {
                sign = -sign;
            }
            acc += p.abs().ln();
        }
        (sign, acc)
    }

    pub fn solve_vec(&self, b: &[T]) -> Result<Vec<T>> {
        if self.singular {
            return Err(Error::numerical("singular matrix in solve"));
        }
        let n = self.lu.rows;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn solve(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        let n = self.lu.rows;
        assert_eq!(b.rows, n);
        let mut out = Matrix::zeros(n, b.cols);
        for c in 0..b.cols {
            let col = self.solve_vec(&b.column(c))?;
            for (r, v) in col.into_iter().enumerate() {
                out[(r, c)] = v;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        self.solve(&Matrix::identity(self.lu.rows))
    }
}

impl<T: Real> Matrix<T> {
    pub fn lu(&self) -> Lu<T> {
        Lu::new(self)
    }

    pub fn det(&self) -> T {
        self.lu().det()
    }

    /// (sign, log|det|).
    pub fn log_abs_det(&self) -> (T, T) {
        self.lu().log_abs_det()
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        self.lu().inverse()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// Maximum column sum.
    pub fn norm1(&self) -> T {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn frobenius_sq(&self) -> T {
        self.data.iter().map(|&x| x * x).sum()
    }

    pub fn frobenius(&self) -> T {
        self.frobenius_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// 1-norm condition number; infinite when singular.
    pub fn condition1(&self) -> T {
        match self.inverse() {
            Ok(inv) if inv.is_finite() => self.norm1() * inv.norm1(),
            _ => T::infinity(),
        }
    }

    /// Checks O·Oᵀ = I.
    pub fn is_orthogonal(&self, tol: T) -> bool {
        self.is_square()
            && (&self.matmul(&self.transpose()) - &Matrix::identity(self.rows)).max_abs() <= tol
    }

    /// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
    pub fn expm(&self) -> Result<Matrix<T>> {
        assert!(self.is_square(), "expm needs a square matrix");
        if !self.is_finite() {
            return Err(Error::numerical("non-finite entries in expm argument"));
        }
        const B: [f64; 14] = [
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ];
        const THETA13: f64 = 5.371920351148152;
        let n = self.rows;
        let norm = self.norm1().as_f64();
        let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
        let a = self.scale(T::lit(2f64.powi(-s)));
        let b = |i: usize| T::lit(B[i]);
        let id = Matrix::identity(n);
        let a2 = a.matmul(&a);
        let a4 = a2.matmul(&a2);
        let a6 = a4.matmul(&a2);
        let lin = |c6: T, c4: T, c2: T, c0: T| {
            let mut m = a6.scale(c6);
            m = &m + &a4.scale(c4);
            m = &m + &a2.scale(c2);
            &m + &id.scale(c0)
        };
        let u_inner = &a6.matmul(&lin(b(13), b(11), b(9), T::zero())) + &lin(b(7), b(5), b(3), b(1));
        let u = a.matmul(&u_inner);
        let v = &a6.matmul(&lin(b(12), b(10), b(8), T::zero())) + &lin(b(6), b(4), b(2), b(0));
        let num = &v + &u;
        let den = &v - &u;
        let mut r = den.lu().solve(&num).map_err(|e| e.with_context("Padé denominator"))?;
        for _ in 0..s {
            r = r.matmul(&r);
        }
        if !r.is_finite() {
            return Err(Error::numerical("expm overflow"));
        }
        Ok(r)
    }

    /// Eigenvalues of a general real square matrix.
    ///
    /// Balancing, reduction to upper Hessenberg form and the Francis
    /// double-shift QR iteration. For n ≤ 4 a failed iteration falls back to
    /// the roots of the characteristic polynomial.
    pub fn eigenvalues(&self) -> Result<Vec<Complex<T>>> {
        assert!(self.is_square(), "eigenvalues need a square matrix");
        if !self.is_finite() {
            return Err(Error::numerical("non-finite entries in eigenvalue input"));
        }
        match hqr_eigenvalues(self) {
            Ok(ev) => Ok(ev),
            Err(e) if self.rows <= 4 => {
                charpoly_roots(self).map_err(|_| e.with_context("characteristic polynomial fallback failed"))
            }
            Err(e) => Err(e),
        }
    }

    pub fn spectral_radius(&self) -> Result<T> {
        Ok(self.eigenvalues()?.iter().fold(T::zero(), |m, z| m.max(z.norm())))
    }

    /// Monic characteristic polynomial coefficients c_0..c_{n-1} (Faddeev–LeVerrier),
    /// det(λI − A) = λⁿ + c_{n−1}λⁿ⁻¹ + … + c_0.
    pub fn charpoly(&self) -> Vec<T> {
        let n = self.rows;
        let mut c = vec![T::zero(); n + 1];
        c[n] = T::one();
        let mut m = Matrix::<T>::zeros(n, n);
        let id = Matrix::<T>::identity(n);
        for k in 1..=n {
            m = &self.matmul(&m) + &id.scale(c[n - k + 1]);
            let am = self.matmul(&m);
            c[n - k] = -am.trace() / T::from_usize(k);
        }
        c.truncate(n);
        c
    }
}

struct OneBased<'a, T> {
    d: &'a mut [T],
    n: usize,
}

impl<T> Index<(usize, usize)> for OneBased<'_, T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.d[(i - 1) * self.n + (j - 1)]
    }
}

impl<T> IndexMut<(usize, usize)> for OneBased<'_, T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.d[(i - 1) * self.n + (j - 1)]
    }
}

fn sign<T: Real>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

fn balance<T: Real>(a: &mut OneBased<'_, T>) {
    let n = a.n;
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 1..=n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != T::zero() && r != T::zero() {
                let mut g = r / radix;
                let mut f = T::one();
                let s = c + r;
                while c < g {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= sqrdx;
                }
                if (c + r) / f < T::lit(0.95) * s {
                    done = false;
                    let g = T::one() / f;
                    for j in 1..=n {
                        a[(i, j)] *= g;
                    }
                    for j in 1..=n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
    }
}

fn hessenberg<T: Real>(a: &mut OneBased<'_, T>) {
    let n = a.n;
    for m in 2..n {
        let mut x = T::zero();
        let mut i = m;
        for j in m..=n {
            if a[(j, m - 1)].abs() > x.abs() {
                x = a[(j, m - 1)];
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..=n {
                let t = a[(i, j)];
                a[(i, j)] = a[(m, j)];
                a[(m, j)] = t;
            }
            for j in 1..=n {
                let t = a[(j, i)];
                a[(j, i)] = a[(j, m)];
                a[(j, m)] = t;
            }
        }
        if x != T::zero() {
            for i in (m + 1)..=n {
                let mut y = a[(i, m - 1)];
                if y != T::zero() {
                    y /= x;
                    a[(i, m - 1)] = y;
                    for j in m..=n {
                        let v = a[(m, j)];
                        a[(i, j)] -= y * v;
                    }
                    for j in 1..=n {
                        let v = a[(j, i)];
                        a[(j, m)] += y * v;
                    }
                }
            }
        }
    }
    for i in 3..=n {
        for j in 1..(i - 1) {
            a[(i, j)] = T::zero();
        }
    }
}

fn hqr_eigenvalues<T: Real>(m: &Matrix<T>) -> Result<Vec<Complex<T>>> {
    let n = m.rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut data = m.data.clone();
    let mut a = OneBased { d: &mut data, n };
    balance(&mut a);
    hessenberg(&mut a);
    let mut wr = vec![T::zero(); n + 1];
    let mut wi = vec![T::zero(); n + 1];
    let mut anorm = T::zero();
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[(i, j)].abs();
        }
    }
    let max_its = 60;
    let mut nn = n as isize;
    let mut t = T::zero();
    let (mut p, mut q, mut r, mut s, mut w, mut x, mut y, mut z);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l >= 2 {
                s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == T::zero() {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() + s == s {
                    a[(l, l - 1)] = T::zero();
                    break;
                }
                l -= 1;
            }
            x = a[(nu, nu)];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = T::zero();
                nn -= 1;
            } else {
                y = a[(nu - 1, nu - 1)];
                w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
                if l == nu - 1 {
                    p = T::lit(0.5) * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= T::zero() {
                        z = p + sign(z, p);
                        wr[nu - 1] = x + z;
                        wr[nu] = x + z;
                        if z != T::zero() {
                            wr[nu] = x - w / z;
                        }
                        wi[nu - 1] = T::zero();
                        wi[nu] = T::zero();
                    } else {
                        wr[nu - 1] = x + p;
                        wr[nu] = x + p;
                        wi[nu - 1] = -z;
                        wi[nu] = z;
                    }
                    nn -= 2;
                } else {
                    if its == max_its {
                        return Err(Error::numerical(format!(
                            "QR iteration did not converge (n={n}, active block {l}..{nu})"
                        )));
                    }
                    if its == 10 || its == 20 || its == 40 {
                        t += x;
                        for i in 1..=nu {
                            a[(i, i)] -= x;
                        }
                        s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                        x = T::lit(0.75) * s;
                        y = x;
                        w = T::lit(-0.4375) * s * s;
                    }
                    its += 1;
                    let mut mm = nu - 2;
                    loop {
                        z = a[(mm, mm)];
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / a[(mm + 1, mm)] + a[(mm, mm + 1)];
                        q = a[(mm + 1, mm + 1)] - z - r - s;
                        r = a[(mm + 2, mm + 1)];
                        s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if mm == l {
                            break;
                        }
                        let u = a[(mm, mm - 1)].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[(mm - 1, mm - 1)].abs() + z.abs() + a[(mm + 1, mm + 1)].abs());
                        if u + v == v {
                            break;
                        }
                        mm -= 1;
                    }
                    for i in (mm + 2)..=nu {
                        a[(i, i - 2)] = T::zero();
                        if i != mm + 2 {
                            a[(i, i - 3)] = T::zero();
                        }
                    }
                    let mut k = mm;
                    while k < nu {
                        if k != mm {
                            p = a[(k, k - 1)];
                            q = a[(k + 1, k - 1)];
                            r = T::zero();
                            if k != nu - 1 {
                                r = a[(k + 2, k - 1)];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != T::zero() {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != T::zero() {
                            if k == mm {
                                if l != mm {
                                    a[(k, k - 1)] = -a[(k, k - 1)];
                                }
                            } else {
                                a[(k, k - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nu {
                                p = a[(k, j)] + q * a[(k + 1, j)];
                                if k != nu - 1 {
                                    p += r * a[(k + 2, j)];
                                    a[(k + 2, j)] -= p * z;
                                }
                                a[(k + 1, j)] -= p * y;
                                a[(k, j)] -= p * x;
                            }
                            let mmin = if nu < k + 3 { nu } else { k + 3 };
                            for i in l..=mmin {
                                p = x * a[(i, k)] + y * a[(i, k + 1)];
                                if k != nu - 1 {
                                    p += z * a[(i, k + 2)];
                                    a[(i, k + 2)] -= p * r;
                                }
                                a[(i, k + 1)] -= p * q;
                                a[(i, k)] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if !((l as isize) < nn - 1) {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex::new(wr[i], wi[i])).collect())
}

/// Roots of the characteristic polynomial by Durand–Kerner iteration.
fn charpoly_roots<T: Real>(m: &Matrix<T>) -> Result<Vec<Complex<T>>> {
    let n = m.rows;
    let c = m.charpoly();
    let eval = |z: Complex<T>| {
        let mut acc = Complex::new(T::one(), T::zero());
        for k in (0..n).rev() {
            acc = acc * z + Complex::new(c[k], T::zero());
        }
        acc
    };
    let bound = T::one() + c.iter().fold(T::zero(), |a, x| a.max(x.abs()));
    let seed = Complex::new(T::lit(0.4), T::lit(0.9));
    let mut roots: Vec<Complex<T>> = (0..n).map(|k| seed.powu(k as u32) * bound).collect();
    for _ in 0..2000 {
        let mut delta = T::zero();
        for i in 0..n {
            let mut den = Complex::new(T::one(), T::zero());
            for j in 0..n {
                if i != j {
                    den = den * (roots[i] - roots[j]);
                }
            }
            if den.norm() == T::zero() {
                den = Complex::new(T::epsilon(), T::zero());
            }
            let step = eval(roots[i]) / den;
            roots[i] = roots[i] - step;
            delta = delta.max(step.norm());
        }
        if delta <= T::epsilon() * bound {
            return Ok(roots);
        }
    }
    if roots.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(roots)
    } else {
        Err(Error::numerical("characteristic polynomial roots did not converge"))
    }
}

/// Sorts eigenvalues by (real, imaginary) for multiset comparisons.
pub fn sort_complex<T: Real>(v: &mut [Complex<T>]) {
    v.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Largest distance in a greedy nearest-neighbour matching of two eigenvalue
/// multisets; infinite when the sizes differ.
pub fn multiset_distance<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    if a.len() != b.len() {
        return T::infinity();
    }
    let mut used = vec![false; b.len()];
    let mut worst = T::zero();
    for x in a {
        let mut best = T::infinity();
        let mut idx = 0;
        for (j, y) in b.iter().enumerate() {
            let d = (x - y).norm();
            if !used[j] && d < best {
                best = d;
                idx = j;
            }
        }
        used[idx] = true;
        worst = worst.max(best);
    }
    worst
}

pub fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

pub fn zero_c<T: Real>() -> Complex<T> {
    Complex::zero()
}

pub fn one_c<T: Real>() -> Complex<T> {
    Complex::one()
}
