//! Dense linear algebra at desk scale: complex matrices with log-magnitude
//! determinants, Hermitian eigenvalues by cyclic Jacobi, and exact rational
//! matrices (determinant, solve, Pfaffian) over `BigRational`.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows);
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Submatrix with the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CMat {
        CMat::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        let mut m = self.clone();
        for z in &mut m.data {
            *z *= s;
        }
        m
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dense row-major integer matrix for the exact incidence operators.
#[derive(Clone, Debug, PartialEq)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<i64>,
}

impl IMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IMat {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn mul(&self, other: &IMat) -> IMat {
        assert_eq!(self.cols, other.rows);
        let mut out = IMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..self.cols).all(|j| self[(i, j)] == -self[(j, i)]))
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> IMat {
        let mut m = IMat::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                m[(i, j)] = self[(r, c)];
            }
        }
        m
    }

    pub fn to_qmat(&self) -> QMat {
        QMat::from_int_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    pub fn to_cmat(&self) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| {
            Complex64::new(self[(i, j)] as f64, 0.0)
        })
    }

    pub fn det(&self) -> BigInt {
        let d = self.to_qmat().det();
        debug_assert!(d.is_integer());
        d.to_integer()
    }
}

impl std::ops::Index<(usize, usize)> for IMat {
    type Output = i64;
    fn index(&self, (i, j): (usize, usize)) -> &i64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Determinant in log-magnitude form: `det = phase * exp(log_abs)`, with
/// `phase` on the unit circle (or zero for a singular matrix).
#[derive(Clone, Copy, Debug)]
pub struct LogDet {
    pub log_abs: f64,
    pub phase: Complex64,
}

impl LogDet {
    pub fn value(&self) -> Complex64 {
        self.phase * self.log_abs.exp()
    }

    pub fn is_singular(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }
}

/// LU decomposition with partial pivoting, accumulating the determinant in
/// log-magnitude form so large configurations do not overflow.
pub fn lu_logdet(m: &CMat) -> LogDet {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    if n == 0 {
        return LogDet { log_abs: 0.0, phase: Complex64::new(1.0, 0.0) };
    }
    let mut a = m.clone();
    let mut log_abs = 0.0;
    let mut phase = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let mut pivot = k;
        let mut best = a[(k, k)].norm();
        for i in (k + 1)..n {
            let v = a[(i, k)].norm();
            if v > best {
                best = v;
                pivot = i;
            }
        }
        if best == 0.0 {
            return LogDet { log_abs: f64::NEG_INFINITY, phase: Complex64::new(0.0, 0.0) };
        }
        if pivot != k {
            for j in 0..n {
                let t = a[(k, j)];
                a[(k, j)] = a[(pivot, j)];
                a[(pivot, j)] = t;
            }
            phase = -phase;
        }
        let akk = a[(k, k)];
        log_abs += akk.norm().ln();
        phase *= akk / akk.norm();
        for i in (k + 1)..n {
            let f = a[(i, k)] / akk;
            a[(i, k)] = f;
            for j in (k + 1)..n {
                let v = a[(k, j)];
                a[(i, j)] -= f * v;
            }
        }
    }
    LogDet { log_abs, phase }
}

/// Eigenvalues of a Hermitian matrix by the cyclic complex Jacobi method.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut a = m.clone();
    // Symmetrize against roundoff in the input.
    for i in 0..n {
        for j in 0..n {
            let h = (a[(i, j)] + a[(j, i)].conj()) / 2.0;
            a[(i, j)] = h;
            a[(j, i)] = h.conj();
        }
    }
    let off = |a: &CMat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s
    };
    let scale: f64 = (0..n).map(|i| a[(i, i)].norm()).fold(a.max_abs(), f64::max);
    let tol = (scale * 1e-15).powi(2) * (n as f64);
    for _sweep in 0..60 {
        if off(&a) <= tol.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm() < 1e-300 {
                    continue;
                }
                // Unitary 2x2 elimination of the (p, q) element.
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phi = apq / apq.norm();
                let theta = 0.5 * (2.0 * apq.norm()).atan2(aqq - app);
                let (c, s) = (theta.cos(), theta.sin());
                // Columns: [p q] <- [p q] * [[c, s*phi],[-s*conj(phi), c]]
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c - aiq * s * phi.conj();
                    a[(i, q)] = aip * s * phi + aiq * c;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c - aqj * s * phi;
                    a[(q, j)] = apj * s * phi.conj() + aqj * c;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

// ---------------------------------------------------------------------------
// Exact rational matrices.
// ---------------------------------------------------------------------------

pub type Rat = BigRational;

pub fn rat_int(v: i64) -> Rat {
    BigRational::from_integer(BigInt::from(v))
}

/// Dense row-major matrix over `BigRational`.
#[derive(Clone, Debug, PartialEq)]
pub struct QMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rat>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    pub fn from_int_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> i64) -> Self {
        let mut m = QMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = rat_int(f(i, j));
            }
        }
        m
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> QMat {
        let mut m = QMat::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                m[(i, j)] = self[(r, c)].clone();
            }
        }
        m
    }

    pub fn mul(&self, other: &QMat) -> QMat {
        assert_eq!(self.cols, other.rows);
        let mut out = QMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    if other[(k, j)].is_zero() {
                        continue;
                    }
                    let add = &self[(i, k)] * &other[(k, j)];
                    out[(i, j)] += add;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> QMat {
        let mut m = QMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].clone();
            }
        }
        m
    }

    /// Exact determinant by fraction-aware Gaussian elimination.
    pub fn det(&self) -> Rat {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Rat::one();
        for k in 0..n {
            let pivot = match (k..n).find(|&i| !a[(i, k)].is_zero()) {
                Some(p) => p,
                None => return Rat::zero(),
            };
            if pivot != k {
                for j in 0..n {
                    let t = a[(k, j)].clone();
                    a[(k, j)] = a[(pivot, j)].clone();
                    a[(pivot, j)] = t;
                }
                det = -det;
            }
            let akk = a[(k, k)].clone();
            det *= akk.clone();
            for i in (k + 1)..n {
                if a[(i, k)].is_zero() {
                    continue;
                }
                let f = &a[(i, k)] / &akk;
                for j in k..n {
                    let sub = &f * &a[(k, j)];
                    a[(i, j)] -= sub;
                }
            }
        }
        det
    }

    /// Solves `self * X = rhs` exactly; fails if `self` is singular.
    pub fn solve(&self, rhs: &QMat) -> Result<QMat> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(self.rows, rhs.rows);
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.clone();
        let mut b = rhs.clone();
        for k in 0..n {
            let pivot = (k..n)
                .find(|&i| !a[(i, k)].is_zero())
                .ok_or(Error::SingularMatrix)?;
            if pivot != k {
                for j in 0..n {
                    let t = a[(k, j)].clone();
                    a[(k, j)] = a[(pivot, j)].clone();
                    a[(pivot, j)] = t;
                }
                for j in 0..m {
                    let t = b[(k, j)].clone();
                    b[(k, j)] = b[(pivot, j)].clone();
                    b[(pivot, j)] = t;
                }
            }
            let akk = a[(k, k)].clone();
            for i in 0..n {
                if i == k || a[(i, k)].is_zero() {
                    continue;
                }
                let f = &a[(i, k)] / &akk;
                for j in k..n {
                    let sub = &f * &a[(k, j)];
                    a[(i, j)] -= sub;
                }
                for j in 0..m {
                    let sub = &f * &b[(k, j)];
                    b[(i, j)] -= sub;
                }
            }
        }
        for i in 0..n {
            let aii = a[(i, i)].clone();
            for j in 0..m {
                let v = &b[(i, j)] / &aii;
                b[(i, j)] = v;
            }
        }
        Ok(b)
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (0..self.cols).all(|j| self[(i, j)] == -self[(j, i)].clone()))
    }

    pub fn to_f64(&self) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| {
            Complex64::new(rat_to_f64(&self[(i, j)]), 0.0)
        })
    }
}

impl std::ops::Index<(usize, usize)> for QMat {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Pfaffian of an antisymmetric rational matrix by congruence elimination.
///
/// Uses row/column operations `B -> P B P^T` with `det(P) = +-1` tracked, so
/// the returned value is exact.
pub fn pfaffian(m: &QMat) -> Rat {
    assert_eq!(m.rows, m.cols);
    debug_assert!(m.is_antisymmetric());
    let n = m.rows;
    if n % 2 == 1 {
        return Rat::zero();
    }
    let mut a = m.clone();
    let mut sign = Rat::one();
    let mut pf = Rat::one();
    let mut k = 0;
    while k < n {
        // Pivot: bring a nonzero element into position (k, k+1).
        let pivot = ((k + 1)..n).find(|&i| !a[(k, i)].is_zero());
        let pivot = match pivot {
            Some(p) => p,
            None => return Rat::zero(), // zero row: singular
        };
        if pivot != k + 1 {
            swap_sym(&mut a, pivot, k + 1);
            sign = -sign;
        }
        let piv = a[(k, k + 1)].clone();
        pf *= piv.clone();
        // Eliminate the remaining entries of rows/columns k and k+1.
        for i in (k + 2)..n {
            // Zero a[(k, i)] using row/col k+1.
            if !a[(k, i)].is_zero() {
                let f = &a[(k, i)] / &piv;
                add_sym(&mut a, i, k + 1, &(-f));
            }
            // Zero a[(k+1, i)] using row/col k.
            if !a[(k + 1, i)].is_zero() {
                let piv2 = a[(k + 1, k)].clone(); // = -piv
                let f = &a[(k + 1, i)] / &piv2;
                add_sym(&mut a, i, k, &(-f));
            }
        }
        k += 2;
    }
    pf * sign
}

/// Swaps row i with row j and column i with column j.
fn swap_sym(a: &mut QMat, i: usize, j: usize) {
    let n = a.cols;
    for c in 0..n {
        let t = a[(i, c)].clone();
        a[(i, c)] = a[(j, c)].clone();
        a[(j, c)] = t;
    }
    for r in 0..n {
        let t = a[(r, i)].clone();
        a[(r, i)] = a[(r, j)].clone();
        a[(r, j)] = t;
    }
}

/// Adds `f` times row/column `src` to row/column `dst`.
fn add_sym(a: &mut QMat, dst: usize, src: usize, f: &Rat) {
    let n = a.cols;
    for c in 0..n {
        let add = f * &a[(src, c)];
        a[(dst, c)] += add;
    }
    for r in 0..n {
        let add = f * &a[(r, src)];
        a[(r, dst)] += add;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn logdet_matches_direct_2x2() {
        let m = CMat::from_fn(2, 2, |i, j| {
            Complex64::new((i + 2 * j) as f64 + 1.0, (i as f64) - (j as f64))
        });
        let direct = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let ld = lu_logdet(&m);
        let v = ld.value();
        assert_relative_eq!(v.re, direct.re, epsilon = 1e-12);
        assert_relative_eq!(v.im, direct.im, epsilon = 1e-12);
    }

    #[test]
    fn empty_determinant_is_one() {
        let ld = lu_logdet(&CMat::zeros(0, 0));
        assert_eq!(ld.value(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn jacobi_eigenvalues_of_pauli_like() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m[(1, 1)] = Complex64::new(1.0, 0.0);
        m[(0, 1)] = Complex64::new(0.0, 1.0);
        m[(1, 0)] = Complex64::new(0.0, -1.0);
        let eig = hermitian_eigenvalues(&m);
        assert_relative_eq!(eig[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(eig[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rational_det_and_solve() {
        let a = QMat::from_int_fn(3, 3, |i, j| [[2, 1, 0], [1, 3, 1], [0, 1, 2]][i][j]);
        assert_eq!(a.det(), rat_int(8));
        let x = a.solve(&QMat::identity(3)).unwrap();
        let id = a.mul(&x);
        assert_eq!(id, QMat::identity(3));
    }

    #[test]
    fn pfaffian_squares_to_det() {
        // Random-ish 4x4 antisymmetric integer matrix.
        let vals = [[0, 2, -1, 3], [-2, 0, 4, 1], [1, -4, 0, -2], [-3, -1, 2, 0]];
        let a = QMat::from_int_fn(4, 4, |i, j| vals[i][j]);
        let pf = pfaffian(&a);
        assert_eq!(&pf * &pf, a.det());
        // And the closed form for 4x4: pf = a01*a23 - a02*a13 + a03*a12.
        assert_eq!(pf, rat_int(2 * -2 - -1 * 1 + 3 * 4));
    }

    #[test]
    fn pfaffian_of_odd_block_is_zero() {
        let a = QMat::from_int_fn(3, 3, |i, j| [[0, 1, 2], [-1, 0, 5], [-2, -5, 0]][i][j]);
        assert_eq!(pfaffian(&a), Rat::zero());
    }
}
