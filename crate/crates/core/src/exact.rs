//! Dense matrices and vectors over the rationals.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = num_rational::BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p"`, `"p/q"` or a terminating decimal such as `"-1.25"`.
/// Accepts the unicode minus sign.
pub fn parse_rational(text: &str) -> Result<Q> {
    let t = text.trim().replace('\u{2212}', "-");
    let bad = || Error::Parse(format!("malformed rational {:?}", text));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {:?}", text)));
        }
        return Ok(Q::new(n, d));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        if fp.is_empty() || !fp.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        let digits = format!("{}{}", if ip.is_empty() { "0" } else { ip }, fp);
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), fp.len());
        let v = Q::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(n))
}

pub fn format_rational(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Nearest `f64`, robust to numerators and denominators beyond the `f64` range.
pub fn to_f64(x: &Q) -> f64 {
    if let (Some(n), Some(d)) = (x.numer().to_f64(), x.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let (m, e) = to_scaled_f64(x);
    m * 2f64.powi(e as i32)
}

/// Returns `(m, e)` with `x ≈ m · 2^e` and `|m|` in `[0.5, 1)`, or `(0, 0)`.
pub fn to_scaled_f64(x: &Q) -> (f64, i64) {
    if x.is_zero() {
        return (0.0, 0);
    }
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    // shift so that the integer quotient carries about 64 significant bits
    let shift = 64 - (nb - db);
    let num = if shift >= 0 { x.numer() << (shift as usize) } else { x.numer() >> ((-shift) as usize) };
    let quo = num.div_floor(x.denom());
    let qb = quo.bits() as i64;
    let (top, extra) = if qb > 60 { (&quo >> ((qb - 60) as usize), qb - 60) } else { (quo.clone(), 0) };
    let m = top.to_f64().unwrap_or(0.0);
    let e = extra - shift;
    let (fm, fe) = frexp(m);
    (fm, fe + e)
}

fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let e = x.abs().log2().floor() as i64 + 1;
    let m = x / 2f64.powi(e as i32);
    if m.abs() >= 1.0 {
        (m / 2.0, e + 1)
    } else if m.abs() < 0.5 {
        (m * 2.0, e - 1)
    } else {
        (m, e)
    }
}

pub type QVec = Vec<Q>;

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    let mut s = Q::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            s += x * y;
        }
    }
    s
}

pub fn unit(n: usize, i: usize) -> QVec {
    let mut v = vec![Q::zero(); n];
    v[i] = Q::one();
    v
}

pub fn scale(v: &[Q], c: &Q) -> QVec {
    v.iter().map(|x| x * c).collect()
}

pub fn add(a: &[Q], b: &[Q]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Q], b: &[Q]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn is_zero_vec(v: &[Q]) -> bool {
    v.iter().all(|x| x.is_zero())
}

/// Scales a nonzero vector by a positive factor so its first nonzero
/// coordinate is ±1. Rays map to a unique representative.
pub fn normalize_ray(v: &[Q]) -> QVec {
    match v.iter().find(|x| !x.is_zero()) {
        None => v.to_vec(),
        Some(f) => {
            let c = f.abs().recip();
            scale(v, &c)
        }
    }
}

/// Positive multiple of `v` with coprime integer coordinates.
pub fn primitive_integer(v: &[Q]) -> QVec {
    let mut l = BigInt::one();
    for x in v {
        l = l.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return v.to_vec();
    }
    ints.into_iter().map(|x| Q::from_integer(x / &g)).collect()
}

pub fn vec_to_f64(v: &[Q]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct QMat {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl Index<(usize, usize)> for QMat {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for QMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for QMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(format_rational).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        QMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect())
    }

    pub fn from_cols(cols: &[QVec]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            for i in 0..r {
                m[(i, j)] = col[i].clone();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Q] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> QVec {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<QVec> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, o: &QMat) -> QMat {
        assert_eq!(self.cols, o.rows, "dimension mismatch");
        let mut m = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = &o[(k, j)];
                    if !b.is_zero() {
                        m.data[i * o.cols + j] += a * b;
                    }
                }
            }
        }
        m
    }

    pub fn apply(&self, v: &[Q]) -> QVec {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Row vector times matrix: the functional `f ∘ self`.
    pub fn pull_back(&self, f: &[Q]) -> QVec {
        assert_eq!(self.rows, f.len(), "dimension mismatch");
        (0..self.cols)
            .map(|j| {
                let mut s = Q::zero();
                for i in 0..self.rows {
                    if !f[i].is_zero() && !self[(i, j)].is_zero() {
                        s += &f[i] * &self[(i, j)];
                    }
                }
                s
            })
            .collect()
    }

    pub fn sub(&self, o: &QMat) -> QMat {
        QMat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect() }
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && *self == Self::identity(self.rows)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> QMat {
        let mut m = Self::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                m[(a, b)] = self[(i, j)].clone();
            }
        }
        m
    }

    pub fn principal(&self, idx: &[usize]) -> QMat {
        self.submatrix(idx, idx)
    }

    /// Reduced row echelon form and the pivot columns.
    pub fn rref(&self) -> (QMat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m[(r, c)].recip();
            for j in c..m.cols {
                let v = &m[(r, j)] * &inv;
                m[(r, j)] = v;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone();
                    for j in c..m.cols {
                        let v = &m[(r, j)] * &f;
                        m[(i, j)] -= v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel.
    pub fn kernel(&self) -> Vec<QVec> {
        let (r, piv) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !piv.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Q::zero(); self.cols];
                v[f] = Q::one();
                for (i, &p) in piv.iter().enumerate() {
                    v[p] = -r[(i, f)].clone();
                }
                v
            })
            .collect()
    }

    pub fn det(&self) -> Q {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let mut m = self.clone();
        let n = m.rows;
        let mut d = Q::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else {
                return Q::zero();
            };
            if p != c {
                m.swap_rows(p, c);
                d = -d;
            }
            let piv = m[(c, c)].clone();
            d *= &piv;
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let f = &m[(i, c)] / &piv;
                for j in c..n {
                    let v = &m[(c, j)] * &f;
                    m[(i, j)] -= v;
                }
            }
        }
        d
    }

    pub fn inverse(&self) -> Option<QMat> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Q::one();
        }
        let (r, piv) = aug.rref();
        if piv.len() < n || piv[n - 1] != n - 1 {
            return None;
        }
        let idx: Vec<usize> = (0..n).collect();
        let cols: Vec<usize> = (n..2 * n).collect();
        Some(r.submatrix(&idx, &cols))
    }

    pub fn trace(&self) -> Q {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).sum()
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| to_f64(&self[(i, j)]))
    }

    /// `(M, e)` with `self ≈ M · 2^e`, where the largest entry of `M` has
    /// magnitude in `[0.5, 1)`. Usable when entries overflow `f64`.
    pub fn to_scaled_f64(&self) -> (nalgebra::DMatrix<f64>, i64) {
        let parts: Vec<(f64, i64)> = self.data.iter().map(to_scaled_f64).collect();
        let e = parts.iter().filter(|p| p.0 != 0.0).map(|p| p.1).max().unwrap_or(0);
        let m = nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| {
            let (m, k) = parts[i * self.cols + j];
            if m == 0.0 {
                0.0
            } else {
                let s = k - e;
                if s < -1100 {
                    0.0
                } else {
                    m * 2f64.powi(s as i32)
                }
            }
        });
        (m, e)
    }

    pub fn entries(&self) -> &[Q] {
        &self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("-3/2").unwrap(), qf(-3, 2));
        assert_eq!(parse_rational("\u{2212}3/2").unwrap(), qf(-3, 2));
        assert_eq!(parse_rational("7").unwrap(), q(7));
        assert_eq!(parse_rational("-1.25").unwrap(), qf(-5, 4));
        assert!(parse_rational("2/0").is_err());
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn det_and_inverse() {
        let a = QMat::from_i64(&[&[2, -3], &[-2, 2]]);
        assert_eq!(a.det(), q(-2));
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).is_identity());
        let s = QMat::from_i64(&[&[2, -2], &[-2, 2]]);
        assert!(s.inverse().is_none());
        assert_eq!(s.kernel().len(), 1);
    }

    #[test]
    fn huge_to_f64() {
        let big = Q::from_integer(num_traits::pow(BigInt::from(10), 400));
        let (m, e) = to_scaled_f64(&big);
        let log10 = (m.ln() + e as f64 * 2f64.ln()) / 10f64.ln();
        assert!((log10 - 400.0).abs() < 1e-12);
        assert_eq!(to_f64(&qf(1, 3)), 1.0 / 3.0);
    }

    #[test]
    fn primitive_rays() {
        let v = vec![qf(2, 3), qf(-4, 9), q(0)];
        assert_eq!(primitive_integer(&v), vec![q(3), q(-2), q(0)]);
        assert_eq!(normalize_ray(&v), vec![q(1), qf(-2, 3), q(0)]);
    }
}
