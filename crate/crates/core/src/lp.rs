//! Exact linear programming over the rationals: a dense two-phase simplex
//! with Bland's rule, plus the cone queries built on it.

use num_traits::{One, Signed, Zero};

use crate::exact::{dot, is_zero_vec, normalize_ray, QMat, QVec, Q};

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: QVec, value: Q },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<QVec>,
    rhs: Vec<Q>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for x in self.rows[r].iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        self.rhs[r] *= &inv;
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for (x, p) in self.rows[i].iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
            self.rhs[i] -= &f * &prhs;
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost · x` over the current feasible basis; `allowed` masks
    /// the columns that may enter.
    fn optimize(&mut self, cost: &[Q], allowed: &[bool]) -> bool {
        let ncols = cost.len();
        loop {
            // reduced cost d_j = c_j − c_B B⁻¹ A_j
            let mut entering = None;
            for j in 0..ncols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !cost[b].is_zero() && !self.rows[i][j].is_zero() {
                        d -= &cost[b] * &self.rows[i][j];
                    }
                }
                if d.is_negative() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else {
                return true;
            };
            let mut leave: Option<(usize, Q)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if a.is_positive() {
                    let ratio = &self.rhs[i] / a;
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

/// Optimizes `c · x` subject to `A x = b`, `x ≥ 0`.
pub fn solve(a: &[QVec], b: &[Q], c: &[Q], maximize: bool) -> LpOutcome {
    let m = a.len();
    let k = c.len();
    assert!(a.iter().all(|r| r.len() == k) && b.len() == m, "LP dimension mismatch");
    let mut rows: Vec<QVec> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let neg = b[i].is_negative();
        let mut r: QVec = if neg { a[i].iter().map(|x| -x).collect() } else { a[i].clone() };
        for j in 0..m {
            r.push(if i == j { Q::one() } else { Q::zero() });
        }
        rows.push(r);
        rhs.push(if neg { -b[i].clone() } else { b[i].clone() });
    }
    let mut t = Tableau { rows, rhs, basis: (k..k + m).collect() };
    let mut phase1 = vec![Q::zero(); k + m];
    for x in phase1[k..].iter_mut() {
        *x = Q::one();
    }
    t.optimize(&phase1, &vec![true; k + m]);
    let infeas: Q = t.basis.iter().zip(&t.rhs).filter(|(b, _)| **b >= k).map(|(_, r)| r.clone()).sum();
    if infeas.is_positive() {
        return LpOutcome::Infeasible;
    }
    // drive artificials out of the basis, dropping redundant rows
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= k {
            match (0..k).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.rhs.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    let cost: QVec = (0..k + m)
        .map(|j| {
            if j < k {
                if maximize {
                    -c[j].clone()
                } else {
                    c[j].clone()
                }
            } else {
                Q::zero()
            }
        })
        .collect();
    let allowed: Vec<bool> = (0..k + m).map(|j| j < k).collect();
    if !t.optimize(&cost, &allowed) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Q::zero(); k];
    for (i, &bv) in t.basis.iter().enumerate() {
        if bv < k {
            x[bv] = t.rhs[i].clone();
        }
    }
    let value = dot(c, &x);
    LpOutcome::Optimal { x, value }
}

/// Coefficients `λ ≥ 0` with `Σ λ_j g_j = p`, if `p` lies in the cone.
pub fn cone_membership(gens: &[QVec], p: &[Q]) -> Option<QVec> {
    let n = p.len();
    let a: Vec<QVec> = (0..n).map(|i| gens.iter().map(|g| g[i].clone()).collect()).collect();
    match solve(&a, p, &vec![Q::zero(); gens.len()], false) {
        LpOutcome::Optimal { x, .. } => Some(x),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RayScale {
    Finite(Q),
    Infinite,
    /// The base point itself is outside the cone.
    Outside,
}

/// Largest `t ≥ 0` with `base + t · dir` in the cone spanned by `gens`.
pub fn max_ray_scale(gens: &[QVec], base: &[Q], dir: &[Q]) -> RayScale {
    let n = base.len();
    let k = gens.len();
    let a: Vec<QVec> = (0..n)
        .map(|i| {
            let mut r: QVec = gens.iter().map(|g| g[i].clone()).collect();
            r.push(-dir[i].clone());
            r
        })
        .collect();
    let mut c = vec![Q::zero(); k + 1];
    c[k] = Q::one();
    match solve(&a, base, &c, true) {
        LpOutcome::Optimal { value, .. } => RayScale::Finite(value),
        LpOutcome::Unbounded => RayScale::Infinite,
        LpOutcome::Infeasible => RayScale::Outside,
    }
}

/// A functional `φ` with `φ(g) ≥ 1` on every generator, minimizing
/// `Σ φ(g)`. `None` when the generators do not lie in an open half-space.
pub fn positive_chart(gens: &[QVec]) -> Option<QVec> {
    let n = gens.first()?.len();
    let k = gens.len();
    // variables φ⁺ (n), φ⁻ (n), slack (k): φ·g_j − s_j = 1
    let a: Vec<QVec> = gens
        .iter()
        .enumerate()
        .map(|(j, g)| {
            let mut r: QVec = g.clone();
            r.extend(g.iter().map(|x| -x));
            for l in 0..k {
                r.push(if l == j { -Q::one() } else { Q::zero() });
            }
            r
        })
        .collect();
    let mut c = vec![Q::zero(); 2 * n + k];
    for x in c[2 * n..].iter_mut() {
        *x = Q::one();
    }
    match solve(&a, &vec![Q::one(); k], &c, false) {
        LpOutcome::Optimal { x, .. } => Some((0..n).map(|i| &x[i] - &x[n + i]).collect()),
        _ => None,
    }
}

/// Extreme rays of `{λ ≥ 0 : M λ ≤ 0}`, normalized and sorted.
pub fn extreme_rays(m: &QMat, cap: usize) -> Result<Vec<QVec>, String> {
    let k = m.cols();
    if k == 0 {
        return Ok(Vec::new());
    }
    // constraint rows g with g·λ ≤ 0: −e_i (λ_i ≥ 0) and the rows of M
    let mut cons: Vec<QVec> = (0..k)
        .map(|i| {
            let mut e = vec![Q::zero(); k];
            e[i] = -Q::one();
            e
        })
        .collect();
    cons.extend(m.to_rows());
    let feasible = |x: &QVec| cons.iter().all(|g| !dot(g, x).is_positive());
    let mut out: Vec<QVec> = Vec::new();
    if k == 1 {
        let r = vec![Q::one()];
        if feasible(&r) {
            out.push(r);
        }
        return Ok(out);
    }
    let mut subset: Vec<usize> = (0..k - 1).collect();
    let total = cons.len();
    let mut visited = 0usize;
    loop {
        visited += 1;
        if visited > cap {
            return Err(format!("more than {} constraint subsets", cap));
        }
        let rows: Vec<QVec> = subset.iter().map(|&i| cons[i].clone()).collect();
        let ker = QMat::from_rows(rows).kernel();
        if ker.len() == 1 {
            for sign in [Q::one(), -Q::one()] {
                let r: QVec = ker[0].iter().map(|x| x * &sign).collect();
                if !is_zero_vec(&r) && feasible(&r) {
                    let r = normalize_ray(&r);
                    if !out.contains(&r) {
                        out.push(r);
                    }
                }
            }
        }
        // next combination
        let mut i = k - 1;
        loop {
            if i == 0 {
                out.sort();
                return Ok(out);
            }
            i -= 1;
            if subset[i] < total - (k - 1 - i) {
                subset[i] += 1;
                for j in i + 1..k - 1 {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}
