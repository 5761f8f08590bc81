//! Dense square matrices over exact complex rationals.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::rational::{fmt_q, Q};

/// An exact complex rational `re + i·im`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct C {
    pub re: Q,
    pub im: Q,
}

impl C {
    pub fn new(re: Q, im: Q) -> Self {
        C { re, im }
    }

    pub fn real(re: Q) -> Self {
        C { re, im: Q::zero() }
    }

    pub fn zero() -> Self {
        C::real(Q::zero())
    }

    pub fn one() -> Self {
        C::real(Q::one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> C {
        C { re: self.re.clone(), im: -&self.im }
    }

    /// `|z|²`.
    pub fn norm_sq(&self) -> Q {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn scale(&self, s: &Q) -> C {
        C { re: &self.re * s, im: &self.im * s }
    }
}

impl Add for &C {
    type Output = C;
    fn add(self, o: &C) -> C {
        if o.is_zero() {
            return self.clone();
        }
        C { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl Sub for &C {
    type Output = C;
    fn sub(self, o: &C) -> C {
        if o.is_zero() {
            return self.clone();
        }
        C { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl Mul for &C {
    type Output = C;
    fn mul(self, o: &C) -> C {
        C { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }
}

impl Neg for &C {
    type Output = C;
    fn neg(self) -> C {
        C { re: -&self.re, im: -&self.im }
    }
}

impl fmt::Display for C {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", fmt_q(&self.re))
        } else {
            write!(f, "{}+{}i", fmt_q(&self.re), fmt_q(&self.im))
        }
    }
}

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mat {
    n: usize,
    data: Vec<C>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat { n, data: vec![C::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m.set(i, i, C::one());
        }
        m
    }

    /// Matrix unit `E_ij`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Mat::zeros(n);
        m.set(i, j, C::one());
        m
    }

    pub fn scalar(n: usize, s: Q) -> Self {
        Mat::identity(n).scale(&s)
    }

    pub fn diag(entries: Vec<C>) -> Self {
        let mut m = Mat::zeros(entries.len());
        for (i, c) in entries.into_iter().enumerate() {
            m.set(i, i, c);
        }
        m
    }

    /// Panics unless `rows` is square.
    pub fn from_rows(rows: Vec<Vec<C>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Mat { n, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_real_rows(rows: &[Vec<Q>]) -> Self {
        Mat::from_rows(rows.iter().map(|r| r.iter().cloned().map(C::real).collect()).collect())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &C {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, c: C) {
        self.data[i * self.n + j] = c;
    }

    pub fn rows(&self) -> Vec<Vec<C>> {
        self.data.chunks(self.n.max(1)).take(self.n).map(<[C]>::to_vec).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(C::is_zero)
    }

    pub fn scale(&self, s: &Q) -> Mat {
        Mat { n: self.n, data: self.data.iter().map(|c| c.scale(s)).collect() }
    }

    pub fn scale_c(&self, s: &C) -> Mat {
        Mat { n: self.n, data: self.data.iter().map(|c| c * s).collect() }
    }

    pub fn adjoint(&self) -> Mat {
        let mut m = Mat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m.set(j, i, self.get(i, j).conj());
            }
        }
        m
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> Q {
        self.data.iter().map(C::norm_sq).sum()
    }

    /// Largest squared Euclidean norm of a row or column, a lower bound for
    /// the squared operator norm.
    pub fn max_line_norm_sq(&self) -> Q {
        let mut best = Q::zero();
        for i in 0..self.n {
            let row: Q = (0..self.n).map(|j| self.get(i, j).norm_sq()).sum();
            let col: Q = (0..self.n).map(|j| self.get(j, i).norm_sq()).sum();
            best = best.max(row).max(col);
        }
        best
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.get(i, j).is_zero()))
    }

    /// The diagonal part (pinching onto the diagonal matrices).
    pub fn diagonal_part(&self) -> Mat {
        Mat::diag((0..self.n).map(|i| self.get(i, i).clone()).collect())
    }

    pub fn block_diag(blocks: &[Mat]) -> Mat {
        let n = blocks.iter().map(Mat::size).sum();
        let mut m = Mat::zeros(n);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.n {
                for j in 0..b.n {
                    m.set(off + i, off + j, b.get(i, j).clone());
                }
            }
            off += b.n;
        }
        m
    }

    /// `self + s·(other − self)`.
    pub fn lerp(&self, other: &Mat, s: &Q) -> Mat {
        assert_eq!(self.n, other.n, "matrix size mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| if a == b { a.clone() } else { C { re: &a.re + s * (&b.re - &a.re), im: &a.im + s * (&b.im - &a.im) } })
            .collect();
        Mat { n: self.n, data }
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, o: &Mat) -> Mat {
        assert_eq!(self.n, o.n, "matrix size mismatch");
        Mat { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, o: &Mat) -> Mat {
        assert_eq!(self.n, o.n, "matrix size mismatch");
        Mat { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, o: &Mat) -> Mat {
        assert_eq!(self.n, o.n, "matrix size mismatch");
        let n = self.n;
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = o.get(k, j);
                    if !b.is_zero() {
                        let cur = m.get(i, j) + &(a * b);
                        m.set(i, j, cur);
                    }
                }
            }
        }
        m
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> =
            self.rows().iter().map(|r| format!("[{}]", r.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))).collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn products_and_adjoints() {
        let a = Mat::from_rows(vec![vec![C::one(), C::new(Q::zero(), qi(1))], vec![C::zero(), C::real(qi(2))]]);
        let b = Mat::unit(2, 1, 0);
        assert_eq!((&a * &b).get(0, 0), &C::new(Q::zero(), qi(1)));
        assert_eq!(a.adjoint().get(1, 0), &C::new(Q::zero(), qi(-1)));
        assert_eq!((&a * &a.adjoint()).adjoint(), &a * &a.adjoint());
        assert_eq!(a.frobenius_sq(), qi(6));
    }

    #[test]
    fn lerp_and_blocks() {
        let z = Mat::zeros(2);
        let e = Mat::unit(2, 0, 0);
        assert_eq!(z.lerp(&e, &q(1, 4)), e.scale(&q(1, 4)));
        let bd = Mat::block_diag(&[Mat::identity(1), Mat::scalar(2, qi(3))]);
        assert_eq!(bd.size(), 3);
        assert!(bd.is_diagonal());
    }
}
