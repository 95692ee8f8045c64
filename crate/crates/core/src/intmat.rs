//! Square integer matrices standing for rational ones up to a known positive
//! scale. Products of generators stay integral after clearing the Cartan
//! denominators once, which avoids the gcd work of rational arithmetic.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::{QMat, Q};
use crate::system::Gen;
use crate::vinberg::SimplicialRep;

#[derive(Clone, Debug, PartialEq)]
pub struct IntMat {
    n: usize,
    a: Vec<BigInt>,
}

/// `ln |x|` for a nonzero integer of any size.
pub fn ln_abs(x: &BigInt) -> f64 {
    let bits = x.bits() as i64;
    let shift = (bits - 60).max(0);
    let top = (x.abs() >> shift as usize).to_f64().unwrap_or(0.0);
    top.ln() + shift as f64 * LN_2
}

impl IntMat {
    pub fn identity(n: usize) -> Self {
        let mut a = vec![BigInt::zero(); n * n];
        for i in 0..n {
            a[i * n + i] = BigInt::one();
        }
        IntMat { n, a }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.a[i * self.n + j]
    }

    /// `g = M / L` with `L` the lcm of the denominators; returns `(M, ln L)`.
    pub fn from_qmat(g: &QMat) -> (IntMat, f64) {
        let n = g.rows();
        let l = g.entries().iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
        let a = g.entries().iter().map(|x| x.numer() * (&l / x.denom())).collect();
        (IntMat { n, a }, ln_abs(&l))
    }

    pub fn to_qmat(&self) -> QMat {
        let rows =
            (0..self.n).map(|i| (0..self.n).map(|j| Q::from_integer(self.get(i, j).clone())).collect()).collect();
        QMat::from_rows(rows)
    }

    /// `(F, e)` with `M ≈ F · 2^e` and entries of `F` below `2^60`.
    pub fn to_scaled_f64(&self) -> (DMatrix<f64>, i64) {
        let bits = self.a.iter().map(|x| x.bits()).max().unwrap_or(0) as i64;
        let shift = (bits - 60).max(0);
        let f = DMatrix::from_fn(self.n, self.n, |i, j| (self.get(i, j) >> shift as usize).to_f64().unwrap_or(0.0));
        (f, shift)
    }

    pub fn log_top_singular(&self) -> Result<f64> {
        let (f, e) = self.to_scaled_f64();
        let top = f.svd(false, false).singular_values[0];
        if top == 0.0 {
            return Err(Error::Numeric("matrix is zero".into()));
        }
        Ok(top.ln() + e as f64 * LN_2)
    }

    /// Fraction-free determinant of the submatrix on `rows × cols`.
    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> BigInt {
        let k = rows.len();
        match k {
            0 => return BigInt::one(),
            1 => return self.get(rows[0], cols[0]).clone(),
            2 => {
                return self.get(rows[0], cols[0]) * self.get(rows[1], cols[1])
                    - self.get(rows[0], cols[1]) * self.get(rows[1], cols[0])
            }
            _ => {}
        }
        let mut m: Vec<Vec<BigInt>> =
            rows.iter().map(|&r| cols.iter().map(|&c| self.get(r, c).clone()).collect()).collect();
        let mut sign = false;
        let mut prev = BigInt::one();
        for p in 0..k - 1 {
            if m[p][p].is_zero() {
                let Some(r) = (p + 1..k).find(|&r| !m[r][p].is_zero()) else {
                    return BigInt::zero();
                };
                m.swap(p, r);
                sign = !sign;
            }
            for i in p + 1..k {
                for j in p + 1..k {
                    let v = (&m[i][j] * &m[p][p] - &m[i][p] * &m[p][j]) / &prev;
                    m[i][j] = v;
                }
            }
            prev = m[p][p].clone();
        }
        let d = m[k - 1][k - 1].clone();
        if sign {
            -d
        } else {
            d
        }
    }

    pub fn det(&self) -> BigInt {
        let idx: Vec<usize> = (0..self.n).collect();
        self.minor(&idx, &idx)
    }

    pub fn mul(&self, o: &IntMat) -> IntMat {
        let n = self.n;
        let mut a = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let x = self.get(i, k);
                if x.is_zero() {
                    continue;
                }
                for j in 0..n {
                    a[i * n + j] += x * o.get(k, j);
                }
            }
        }
        IntMat { n, a }
    }

    /// Cofactor matrix, `det(M) M^{−T}`.
    pub fn cofactor(&self) -> IntMat {
        let n = self.n;
        let mut a = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let r: Vec<usize> = (0..n).filter(|&x| x != i).collect();
                let c: Vec<usize> = (0..n).filter(|&x| x != j).collect();
                let m = self.minor(&r, &c);
                a.push(if (i + j) % 2 == 1 { -m } else { m });
            }
        }
        IntMat { n, a }
    }

    /// `Λ^k M` in the basis of sorted `k`-subsets.
    pub fn exterior_power(&self, k: usize) -> IntMat {
        let idx = subsets(self.n, k);
        let m = idx.len();
        let mut a = Vec::with_capacity(m * m);
        for r in &idx {
            for c in &idx {
                a.push(self.minor(r, c));
            }
        }
        IntMat { n: m, a }
    }

    /// `log σ₁ + … + log σ_k` of `M` for `k = 0..=n`.
    pub fn log_partial_sums(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0];
        for k in 1..self.n {
            let s = if k == 1 { self.log_top_singular()? } else { self.exterior_power(k).log_top_singular()? };
            out.push(s);
        }
        let det = self.det();
        if det.is_zero() {
            return Err(Error::Numeric("matrix is singular".into()));
        }
        out.push(ln_abs(&det));
        Ok(out)
    }

    /// `μ₁ − μ₂`, which ignores the scale.
    pub fn mu12(&self) -> Result<f64> {
        if self.n < 2 {
            return Ok(0.0);
        }
        let s1 = self.log_top_singular()?;
        let s2 = if self.n == 2 {
            let d = self.det();
            if d.is_zero() {
                return Err(Error::Numeric("matrix is singular".into()));
            }
            ln_abs(&d)
        } else {
            self.exterior_power(2).log_top_singular()?
        };
        Ok(2.0 * s1 - s2)
    }
}

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Generators `R_s = D ρ(s) = D·I − w_s e_sᵀ` with `w_s = D v_s` integral.
#[derive(Clone, Debug)]
pub struct IntRep {
    d: BigInt,
    /// `ln D`: a product of `k` generators is `D^k` times the rational one.
    pub ln_d: f64,
    w: Vec<Vec<BigInt>>,
}

impl IntRep {
    pub fn new(rep: &SimplicialRep) -> IntRep {
        let n = rep.dim();
        let d = (0..n as Gen)
            .flat_map(|s| rep.polar(s).iter().map(|x| x.denom().clone()).collect::<Vec<_>>())
            .fold(BigInt::one(), |l, x| l.lcm(&x));
        let w = (0..n as Gen).map(|s| rep.polar(s).iter().map(|x| x.numer() * (&d / x.denom())).collect()).collect();
        IntRep { ln_d: ln_abs(&d), d, w }
    }

    fn scale(&self, m: &mut IntMat) {
        if !self.d.is_one() {
            for x in m.a.iter_mut() {
                *x *= &self.d;
            }
        }
    }

    /// `M ← M R_s`: scale, then column `s` loses `M w_s`.
    pub fn right_mul(&self, m: &mut IntMat, s: Gen) {
        let n = m.n;
        let s = s as usize;
        let w = &self.w[s];
        let mw: Vec<BigInt> =
            (0..n).map(|i| (0..n).filter(|&j| !w[j].is_zero()).map(|j| m.get(i, j) * &w[j]).sum()).collect();
        self.scale(m);
        for (i, v) in mw.into_iter().enumerate() {
            m.a[i * n + s] -= v;
        }
    }

    /// `M ← R_s M`: scale, then subtract `w_s ⊗ row_s(M)`.
    pub fn left_mul(&self, m: &mut IntMat, s: Gen) {
        let n = m.n;
        let s = s as usize;
        let row: Vec<BigInt> = (0..n).map(|j| m.get(s, j).clone()).collect();
        self.scale(m);
        for (i, wi) in self.w[s].iter().enumerate() {
            if wi.is_zero() {
                continue;
            }
            for (j, r) in row.iter().enumerate() {
                if !r.is_zero() {
                    m.a[i * n + j] -= wi * r;
                }
            }
        }
    }

    pub fn evaluate_word(&self, n: usize, w: &[Gen]) -> IntMat {
        let mut m = IntMat::identity(n);
        for &s in w {
            self.right_mul(&mut m, s);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::builtin;
    use crate::vinberg::{build_rep, random_fully_nondegenerate, RandomCartanOpts};

    #[test]
    fn matches_rational() {
        let sys = builtin("pentagon").unwrap();
        let a = random_fully_nondegenerate(&sys, 4, &RandomCartanOpts::default()).unwrap();
        let rep = build_rep(&a, &sys).unwrap();
        let ir = IntRep::new(&rep);
        let w = sys.parse_word("acebdac").unwrap();
        let m = ir.evaluate_word(5, &w);
        let g = rep.evaluate_word(&w);
        let scale = Q::from_integer(ir.d.pow(w.len() as u32));
        let back = m.to_qmat();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(back[(i, j)], &g[(i, j)] * &scale);
            }
        }
        let mut l = IntMat::identity(5);
        for &s in w.iter().rev() {
            ir.left_mul(&mut l, s);
        }
        assert_eq!(l, m);
        assert_eq!(Q::from_integer(m.det()), g.det() * scale.pow(5));
        let cof = m.cofactor().to_qmat().transpose();
        let prod = cof.mul(&m.to_qmat());
        assert!(prod.sub(&QMat::identity(5)).entries().iter().enumerate().all(|(i, x)| {
            if i % 6 == 0 {
                *x == Q::from_integer(m.det()) - Q::from_integer(1.into())
            } else {
                x.is_zero()
            }
        }));
        let idx = [0, 2, 3];
        assert_eq!(Q::from_integer(m.minor(&idx, &[1, 2, 4])), g.submatrix(&idx, &[1, 2, 4]).det() * scale.pow(3));
    }
}
