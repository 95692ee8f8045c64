//! Cartan matrices and the simplicial representations they generate, in
//! exact rational arithmetic.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact::{dot, format_rational, parse_rational, q, qf, unit, QMat, QVec, Q};
use crate::system::{CoxeterSystem, Gen, NormalForm};

pub const DEFAULT_MINOR_CAP: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CartanMatrix {
    a: QMat,
}

impl CartanMatrix {
    pub fn new(a: QMat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Cartan("matrix is not square".into()));
        }
        Ok(CartanMatrix { a })
    }

    pub fn matrix(&self) -> &QMat {
        &self.a
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.a[(i, j)]
    }

    /// Off-diagonal −2 at non-commuting pairs, 0 at commuting pairs.
    pub fn geometric(sys: &CoxeterSystem) -> Self {
        let n = sys.rank();
        let mut a = QMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = if i == j {
                    q(2)
                } else if sys.commutes(i as Gen, j as Gen) {
                    Q::zero()
                } else {
                    q(-2)
                };
            }
        }
        CartanMatrix { a }
    }

    pub fn transpose(&self) -> Self {
        CartanMatrix { a: self.a.transpose() }
    }

    pub fn principal(&self, idx: &[usize]) -> Self {
        CartanMatrix { a: self.a.principal(idx) }
    }

    /// Accepts `[[..], ..]` or `{"matrix": [[..], ..]}` with rational strings
    /// or JSON numbers as entries.
    pub fn parse_json(text: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("Cartan file: {}", e)))?;
        let rows = match &v {
            serde_json::Value::Object(m) => m.get("matrix").cloned().unwrap_or(serde_json::Value::Null),
            other => other.clone(),
        };
        let rows = rows.as_array().ok_or_else(|| Error::Parse("Cartan file: expected an array of rows".into()))?;
        let mut out = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_array().ok_or_else(|| Error::Parse(format!("Cartan file: row {} is not an array", i)))?;
            let mut row = Vec::new();
            for (j, x) in r.iter().enumerate() {
                let s = match x {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Number(n) => n.to_string(),
                    _ => return Err(Error::Parse(format!("Cartan file: entry [{}][{}] is not a rational", i, j))),
                };
                row.push(parse_rational(&s).map_err(|e| Error::Parse(format!("Cartan entry [{}][{}]: {}", i, j, e)))?);
            }
            out.push(row);
        }
        let n = out.len();
        if out.iter().any(|r| r.len() != n) {
            return Err(Error::Cartan("matrix is not square".into()));
        }
        Ok(CartanMatrix { a: QMat::from_rows(out) })
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        self.a.to_rows().iter().map(|r| r.iter().map(format_rational).collect()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.a == self.a.transpose()
    }
}

/// Checks the three Cartan conditions. `Ok((false, reason))` on failure.
pub fn validate_cartan(a: &CartanMatrix, sys: &CoxeterSystem) -> Result<(bool, Option<String>)> {
    let n = sys.rank();
    if a.n() != n {
        return Err(Error::Cartan(format!("matrix has size {} but the system has {} generators", a.n(), n)));
    }
    for i in 0..n {
        if *a.get(i, i) != q(2) {
            return Ok((false, Some(format!("diagonal entry {} is not 2", i))));
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            let (si, sj) = (sys.name(i as Gen), sys.name(j as Gen));
            if sys.commutes(i as Gen, j as Gen) {
                if !a.get(i, j).is_zero() {
                    return Ok((false, Some(format!("entry ({}, {}) must vanish for commuting generators", si, sj))));
                }
            } else {
                if !a.get(i, j).is_negative() {
                    return Ok((false, Some(format!("entry ({}, {}) must be negative", si, sj))));
                }
                if i < j && a.get(i, j) * a.get(j, i) < q(4) {
                    return Ok((
                        false,
                        Some(format!("product of entries ({0}, {1}) and ({1}, {0}) is below 4", si, sj)),
                    ));
                }
            }
        }
    }
    Ok((true, None))
}

/// Mask of the first subset (in increasing mask order) whose principal minor
/// vanishes, if any.
pub fn first_vanishing_minor(a: &CartanMatrix, cap: usize) -> Result<Option<u64>> {
    let n = a.n();
    if n > cap {
        return Err(Error::Limit(format!("{} generators exceed the minor sweep cap {}", n, cap)));
    }
    for mask in 1u64..(1u64 << n) {
        let idx: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if a.matrix().principal(&idx).det().is_zero() {
            return Ok(Some(mask));
        }
    }
    Ok(None)
}

pub fn is_fully_nondegenerate(a: &CartanMatrix, cap: usize) -> Result<bool> {
    Ok(first_vanishing_minor(a, cap)?.is_none())
}

/// Whether `A` has a negative eigenvalue. `B = 2I − A` is nonnegative and
/// irreducible, so its Perron root `ρ(B)` gives the real eigenvalue `2 − ρ(B)`
/// of `A` of least real part, and every negative eigenvalue `λ` of `A` makes
/// `2 − λ > 2` an eigenvalue of `B`. For a Z-matrix, `ρ(B) < 2` holds exactly
/// when all leading principal minors of `A` are positive.
pub fn is_negative_type(a: &CartanMatrix, sys: &CoxeterSystem) -> Result<bool> {
    if a.n() != sys.rank() {
        return Err(Error::Cartan("dimension mismatch".into()));
    }
    if !sys.is_irreducible() {
        return Err(Error::Precondition("system is reducible".into()));
    }
    let n = a.n();
    let m = a.matrix();
    if m.det().is_zero() {
        return Err(Error::Precondition("Cartan matrix is singular".into()));
    }
    for k in 1..=n {
        let idx: Vec<usize> = (0..k).collect();
        if !m.principal(&idx).det().is_positive() {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Clone, Debug)]
pub struct SimplicialRep {
    cartan: CartanMatrix,
    /// `v_i`, the i-th column of the Cartan matrix.
    polars: Vec<QVec>,
    mats: Vec<QMat>,
}

impl SimplicialRep {
    pub fn dim(&self) -> usize {
        self.cartan.n()
    }

    pub fn cartan(&self) -> &CartanMatrix {
        &self.cartan
    }

    pub fn generator(&self, s: Gen) -> &QMat {
        &self.mats[s as usize]
    }

    pub fn polar(&self, s: Gen) -> &QVec {
        &self.polars[s as usize]
    }

    /// `α_s = e^s`.
    pub fn functional(&self, s: Gen) -> QVec {
        unit(self.dim(), s as usize)
    }

    /// Product of generator matrices along `w`.
    pub fn evaluate_word(&self, w: &[Gen]) -> QMat {
        let n = self.dim();
        let mut x = QMat::identity(n);
        for &s in w {
            // X (I − v e_sᵀ) changes only column s
            let xv = x.apply(&self.polars[s as usize]);
            for i in 0..n {
                if !xv[i].is_zero() {
                    let v = &x[(i, s as usize)] - &xv[i];
                    x[(i, s as usize)] = v;
                }
            }
        }
        x
    }

    pub fn evaluate(&self, g: &NormalForm) -> QMat {
        self.evaluate_word(g.letters())
    }

    pub fn evaluate_inverse(&self, g: &NormalForm) -> QMat {
        let w: Vec<Gen> = g.letters().iter().rev().copied().collect();
        self.evaluate_word(&w)
    }

    /// `ρ(g)x` without forming the matrix.
    pub fn act(&self, w: &[Gen], x: &[Q]) -> QVec {
        let mut y = x.to_vec();
        for &s in w.iter().rev() {
            let c = y[s as usize].clone();
            if !c.is_zero() {
                for (yi, vi) in y.iter_mut().zip(&self.polars[s as usize]) {
                    if !vi.is_zero() {
                        *yi -= &c * vi;
                    }
                }
            }
        }
        y
    }

    /// `f ∘ ρ(g)⁻¹`, the dual action on functionals.
    pub fn act_dual(&self, w: &[Gen], f: &[Q]) -> QVec {
        // ρ(s)⁻ᵀ = I − e_s v_sᵀ, applied right to left along w
        let mut y = f.to_vec();
        for &s in w.iter().rev() {
            let c = dot(&y, &self.polars[s as usize]);
            if !c.is_zero() {
                y[s as usize] -= c;
            }
        }
        y
    }
}

pub fn build_rep(a: &CartanMatrix, sys: &CoxeterSystem) -> Result<SimplicialRep> {
    if let (false, Some(reason)) = validate_cartan(a, sys)? {
        return Err(Error::Cartan(reason));
    }
    Ok(build_rep_unchecked(a, sys))
}

/// Builds `ρ(s_i) = I − v_i ⊗ e^i` and verifies the defining relations of
/// the nerve exactly.
pub fn build_rep_unchecked(a: &CartanMatrix, sys: &CoxeterSystem) -> SimplicialRep {
    let n = a.n();
    let polars: Vec<QVec> = (0..n).map(|i| a.matrix().col(i)).collect();
    let mats: Vec<QMat> = (0..n)
        .map(|i| {
            let mut m = QMat::identity(n);
            for k in 0..n {
                let v = &m[(k, i)] - &polars[i][k];
                m[(k, i)] = v;
            }
            m
        })
        .collect();
    let rep = SimplicialRep { cartan: a.clone(), polars, mats };
    for (i, m) in rep.mats.iter().enumerate() {
        assert!(m.mul(m).is_identity(), "generator {} is not an involution", i);
    }
    for (i, j) in sys.edges() {
        let (x, y) = (&rep.mats[i], &rep.mats[j]);
        assert_eq!(x.mul(y), y.mul(x), "generators {} and {} do not commute", i, j);
    }
    rep
}

pub fn geometric_rep(sys: &CoxeterSystem) -> SimplicialRep {
    build_rep_unchecked(&CartanMatrix::geometric(sys), sys)
}

/// The contragredient representation. On the dual basis it acts by
/// `ρ(g)⁻ᵀ`; the isomorphism `Aᵀ: V* → ℝⁿ` conjugates it to the simplicial
/// representation of the transposed Cartan matrix.
#[derive(Clone, Debug)]
pub struct DualRep {
    base: SimplicialRep,
    simplicial: SimplicialRep,
    identification: QMat,
}

impl DualRep {
    /// Matrix of `ρ*(g)` on the dual basis.
    pub fn evaluate(&self, g: &NormalForm) -> QMat {
        self.base.evaluate_inverse(g).transpose()
    }

    pub fn simplicial(&self) -> &SimplicialRep {
        &self.simplicial
    }

    /// `L` with `L ρ(g)⁻ᵀ L⁻¹ = ρ_{Aᵀ}(g)`.
    pub fn identification(&self) -> &QMat {
        &self.identification
    }

    pub fn base(&self) -> &SimplicialRep {
        &self.base
    }
}

pub fn dual_rep(rep: &SimplicialRep, sys: &CoxeterSystem) -> Result<DualRep> {
    let at = rep.cartan().transpose();
    if at.matrix().det().is_zero() {
        return Err(Error::Precondition("Cartan matrix is singular".into()));
    }
    Ok(DualRep { base: rep.clone(), simplicial: build_rep_unchecked(&at, sys), identification: at.matrix().clone() })
}

/// `V = V_T ⊕ V_T^⊥` with `C(T)` acting block-diagonally.
#[derive(Clone, Debug)]
pub struct RestrictedRep {
    pub subset: Vec<Gen>,
    /// `v_t` for `t ∈ T`.
    pub basis_vt: Vec<QVec>,
    /// `e_k` for `k ∉ T`, spanning `∩_{t ∈ T} ker α_t`.
    pub basis_perp: Vec<QVec>,
    /// Columns: `basis_vt` then `basis_perp`.
    pub change: QMat,
    pub change_inv: QMat,
    /// `ρ_T(t)` in the basis `basis_vt`, indexed like `subset`.
    pub blocks: Vec<QMat>,
}

impl RestrictedRep {
    pub fn dim_t(&self) -> usize {
        self.subset.len()
    }

    /// `ρ_T(g)` for `g ∈ C(T)`.
    pub fn evaluate_block(&self, g: &[Gen]) -> Result<QMat> {
        let k = self.dim_t();
        let mut m = QMat::identity(k);
        for &s in g {
            let i = self
                .subset
                .iter()
                .position(|&t| t == s)
                .ok_or_else(|| Error::Precondition("word leaves the standard subgroup".into()))?;
            m = m.mul(&self.blocks[i]);
        }
        Ok(m)
    }

    /// `P⁻¹ ρ(g) P`.
    pub fn adapted(&self, rep: &SimplicialRep, g: &[Gen]) -> QMat {
        self.change_inv.mul(&rep.evaluate_word(g)).mul(&self.change)
    }

    /// Cartan matrix of `ρ_T`, read off from the rank-one parts `I − ρ_T(t)`.
    pub fn cartan(&self) -> QMat {
        let k = self.dim_t();
        let mut polars = Vec::new();
        let mut funcs = Vec::new();
        for b in &self.blocks {
            let r = QMat::identity(k).sub(b);
            // r = p fᵀ with rank one; pick a nonzero column for p
            let (col, piv) = (0..k)
                .find_map(|j| (0..k).find(|&i| !r[(i, j)].is_zero()).map(|i| (j, i)))
                .expect("reflection block differs from identity");
            let p = r.col(col);
            let f: QVec = (0..k).map(|j| &r[(piv, j)] / &p[piv]).collect();
            polars.push(p);
            funcs.push(f);
        }
        let mut c = QMat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                c[(i, j)] = dot(&funcs[i], &polars[j]);
            }
        }
        c
    }
}

pub fn restrict(rep: &SimplicialRep, t: &[Gen]) -> Result<RestrictedRep> {
    let n = rep.dim();
    let mut subset = t.to_vec();
    subset.sort();
    subset.dedup();
    let idx: Vec<usize> = subset.iter().map(|&s| s as usize).collect();
    if rep.cartan().matrix().principal(&idx).det().is_zero() {
        return Err(Error::Precondition("principal minor of the subset vanishes".into()));
    }
    let basis_vt: Vec<QVec> = subset.iter().map(|&s| rep.polar(s).clone()).collect();
    let basis_perp: Vec<QVec> = (0..n).filter(|k| !idx.contains(k)).map(|k| unit(n, k)).collect();
    let cols: Vec<QVec> = basis_vt.iter().chain(&basis_perp).cloned().collect();
    let change = QMat::from_cols(&cols);
    let change_inv = change.inverse().ok_or_else(|| Error::Precondition("summands are not transverse".into()))?;
    let k = subset.len();
    let a = rep.cartan().matrix();
    let blocks = subset
        .iter()
        .enumerate()
        .map(|(ti, &s)| {
            // ρ(t) v_u = v_u − A_{tu} v_t
            let mut m = QMat::identity(k);
            for (ui, &u) in subset.iter().enumerate() {
                let v = &m[(ti, ui)] - &a[(s as usize, u as usize)];
                m[(ti, ui)] = v;
            }
            m
        })
        .collect();
    Ok(RestrictedRep { subset, basis_vt, basis_perp, change, change_inv, blocks })
}

#[derive(Clone, Debug)]
pub struct RandomCartanOpts {
    /// Largest magnitude of an off-diagonal entry.
    pub range: Q,
    pub symmetric: bool,
    pub integer: bool,
    pub max_attempts: usize,
}

impl Default for RandomCartanOpts {
    fn default() -> Self {
        RandomCartanOpts { range: q(4), symmetric: false, integer: false, max_attempts: 1000 }
    }
}

/// Rejection sampler: entries `A_ij A_ji > 4` at non-edges, resampled until
/// every principal minor is nonzero. Rational entries have denominator 4.
pub fn random_fully_nondegenerate(sys: &CoxeterSystem, seed: u64, opts: &RandomCartanOpts) -> Result<CartanMatrix> {
    let n = sys.rank();
    let denom: i64 = if opts.integer { 1 } else { 4 };
    let top = (&opts.range * Q::from_integer(denom.into())).floor().to_integer();
    let top: i64 = top.try_into().map_err(|_| Error::Precondition("range too large".into()))?;
    // magnitudes are k/denom with 1 ≤ k ≤ top; need top² > 4 denom²
    if top * top <= 4 * denom * denom {
        return Err(Error::Precondition("range too small for products above 4".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..opts.max_attempts {
        let mut a = QMat::identity(n);
        for i in 0..n {
            a[(i, i)] = q(2);
        }
        for i in 0..n {
            for j in i + 1..n {
                if sys.commutes(i as Gen, j as Gen) {
                    continue;
                }
                let (x, y) = if opts.symmetric {
                    let lo = 2 * denom + 1;
                    if lo > top {
                        return Err(Error::Precondition("range too small for symmetric entries".into()));
                    }
                    let k = rng.gen_range(lo..=top);
                    (k, k)
                } else {
                    // x·y > 4 denom² with y ≤ top forces x > 4 denom² / top
                    let xlo = 4 * denom * denom / top + 1;
                    let x = rng.gen_range(xlo..=top);
                    let ylo = 4 * denom * denom / x + 1;
                    let y = rng.gen_range(ylo..=top);
                    if rng.gen_bool(0.5) {
                        (x, y)
                    } else {
                        (y, x)
                    }
                };
                a[(i, j)] = -qf(x, denom);
                a[(j, i)] = -qf(y, denom);
            }
        }
        let c = CartanMatrix { a };
        debug_assert!(validate_cartan(&c, sys).unwrap().0);
        if is_fully_nondegenerate(&c, usize::MAX)? {
            return Ok(c);
        }
    }
    Err(Error::Limit(format!("no fully nondegenerate sample in {} attempts", opts.max_attempts)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::builtin;

    fn dihedral(a: &[&[i64]]) -> (CoxeterSystem, SimplicialRep) {
        let s = builtin("dihedral").unwrap();
        let rep = build_rep(&CartanMatrix::new(QMat::from_i64(a)).unwrap(), &s).unwrap();
        (s, rep)
    }

    #[test]
    fn dihedral_generators() {
        let (_, rep) = dihedral(&[&[2, -2], &[-2, 2]]);
        assert_eq!(*rep.generator(0), QMat::from_i64(&[&[-1, 0], &[2, 1]]));
        assert_eq!(*rep.generator(1), QMat::from_i64(&[&[1, 2], &[0, -1]]));
        let st = rep.evaluate_word(&[0, 1]);
        assert_eq!(st.trace(), q(2));
        let u = st.sub(&QMat::identity(2));
        assert!(u.mul(&u).is_zero());
    }

    #[test]
    fn validation() {
        let s = builtin("dihedral").unwrap();
        let c = |a: &[&[i64]]| CartanMatrix::new(QMat::from_i64(a)).unwrap();
        assert!(validate_cartan(&CartanMatrix::geometric(&s), &s).unwrap().0);
        assert!(!validate_cartan(&c(&[&[2, -1], &[-1, 2]]), &s).unwrap().0);
        assert!(validate_cartan(&c(&[&[2, -3], &[-2, 2]]), &s).unwrap().0);
        assert!(validate_cartan(&c(&[&[2]]), &s).is_err());
        assert!(!is_fully_nondegenerate(&c(&[&[2, -2], &[-2, 2]]), 16).unwrap());
        assert!(is_fully_nondegenerate(&c(&[&[2, -3], &[-2, 2]]), 16).unwrap());
        assert!(is_negative_type(&c(&[&[2, -3], &[-2, 2]]), &s).unwrap());
        assert!(is_negative_type(&c(&[&[2, -2], &[-2, 2]]), &s).is_err());
        let one = CoxeterSystem::from_names(&["a"], &[]).unwrap();
        assert!(!is_negative_type(&c(&[&[2]]), &one).unwrap());
    }

    #[test]
    fn random_is_reproducible() {
        let s = builtin("fig-a1").unwrap();
        let o = RandomCartanOpts::default();
        let a = random_fully_nondegenerate(&s, 1, &o).unwrap();
        assert_eq!(a, random_fully_nondegenerate(&s, 1, &o).unwrap());
        assert!(validate_cartan(&a, &s).unwrap().0);
        let sym = random_fully_nondegenerate(&s, 2, &RandomCartanOpts { symmetric: true, ..o.clone() }).unwrap();
        assert!(sym.is_symmetric());
        let int = random_fully_nondegenerate(&s, 3, &RandomCartanOpts { integer: true, ..o }).unwrap();
        assert!(int.matrix().entries().iter().all(|x| x.is_integer()));
    }
}
