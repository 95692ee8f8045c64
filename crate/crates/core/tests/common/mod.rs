//! Independent references: naive rewriting, growth series, brute-force bicliques.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use racg::walls::WallPoset;
use racg::{CoxeterSystem, Gen};

/// Word rewriting with only the defining relations: delete `ss`, swap
/// adjacent commuting letters.
pub struct Rewriter {
    n: usize,
    comm: Vec<Vec<bool>>,
}

impl Rewriter {
    pub fn new(sys: &CoxeterSystem) -> Rewriter {
        let n = sys.rank();
        let mut comm = vec![vec![false; n]; n];
        for (i, j) in sys.edges() {
            comm[i][j] = true;
            comm[j][i] = true;
        }
        Rewriter { n, comm }
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    /// Every word reachable from `w` by the two moves.
    pub fn closure(&self, w: &[Gen]) -> HashSet<Vec<Gen>> {
        let mut seen: HashSet<Vec<Gen>> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(w.to_vec());
        queue.push_back(w.to_vec());
        while let Some(x) = queue.pop_front() {
            for i in 0..x.len().saturating_sub(1) {
                let (a, b) = (x[i] as usize, x[i + 1] as usize);
                let next = if a == b {
                    let mut y = x.clone();
                    y.drain(i..i + 2);
                    y
                } else if self.comm[a][b] {
                    let mut y = x.clone();
                    y.swap(i, i + 1);
                    y
                } else {
                    continue;
                };
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        seen
    }

    /// Shortest words in the closure, which are the geodesic representatives.
    pub fn geodesics(&self, w: &[Gen]) -> Vec<Vec<Gen>> {
        let c = self.closure(w);
        let m = c.iter().map(Vec::len).min().unwrap_or(0);
        let mut v: Vec<Vec<Gen>> = c.into_iter().filter(|x| x.len() == m).collect();
        v.sort();
        v
    }

    /// Shortlex-least geodesic representative.
    pub fn normal_form(&self, w: &[Gen]) -> Vec<Gen> {
        self.geodesics(w).into_iter().next().unwrap_or_default()
    }

    /// Sphere sizes by breadth-first search over rewriting normal forms.
    pub fn sphere_sizes(&self, radius: usize) -> Vec<usize> {
        let mut seen: HashSet<Vec<Gen>> = HashSet::new();
        seen.insert(Vec::new());
        let mut layer = vec![Vec::new()];
        let mut sizes = vec![1];
        for _ in 0..radius {
            let mut next = Vec::new();
            for x in &layer {
                for s in 0..self.n as Gen {
                    let mut y: Vec<Gen> = x.clone();
                    y.push(s);
                    let nf = self.normal_form(&y);
                    if nf.len() == x.len() + 1 && seen.insert(nf.clone()) {
                        next.push(nf);
                    }
                }
            }
            sizes.push(next.len());
            layer = next;
        }
        sizes
    }
}

/// Sphere sizes from the growth series `1/W(t) = Σ_σ (−t/(1+t))^{|σ|}`
/// summed over the cliques `σ` of the nerve, the empty one included.
pub fn growth_sphere_sizes(sys: &CoxeterSystem, radius: usize) -> Vec<i128> {
    let n = sys.rank();
    let mut clique_counts = vec![0i128; n + 1];
    for mask in 0u64..(1u64 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let ok = members
            .iter()
            .enumerate()
            .all(|(a, &i)| members[a + 1..].iter().all(|&j| sys.commutes(i as Gen, j as Gen)));
        if ok {
            clique_counts[members.len()] += 1;
        }
    }
    let len = radius + 1;
    // (−t/(1+t))^k = (−t)^k Σ_m C(m+k−1, m)(−t)^m
    let mut denom = vec![0i128; len];
    for (k, &c) in clique_counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        for m in 0..len {
            if k + m >= len {
                break;
            }
            let sign = if (k + m) % 2 == 0 { 1 } else { -1 };
            denom[k + m] += c * sign * binom((m + k) as i128 - 1, m as i128);
        }
    }
    // invert the power series
    let mut out = vec![0i128; len];
    out[0] = 1;
    for i in 1..len {
        let s: i128 = (1..=i).map(|j| denom[j] * out[i - j]).sum();
        out[i] = -s;
    }
    out
}

fn binom(n: i128, k: i128) -> i128 {
    if k == 0 {
        return 1;
    }
    if n < k || n < 0 {
        return 0;
    }
    let mut r = 1i128;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Largest `k` with disjoint `A`, `B`, `|A| = |B| = k`, every cross pair
/// incomparable, by trying every `A`.
pub fn biclique_brute(p: &WallPoset) -> usize {
    let n = p.len();
    assert!(n <= 16);
    let mut best = 0;
    for a in 1u32..(1 << n) {
        let na = a.count_ones() as usize;
        if na <= best {
            continue;
        }
        let nb = (0..n)
            .filter(|&j| a >> j & 1 == 0 && (0..n).filter(|&i| a >> i & 1 == 1).all(|i| p.incomparable(i, j)))
            .count();
        best = best.max(na.min(nb));
    }
    best
}

/// All words of length `len` over `n` letters.
pub fn all_words(n: usize, len: usize) -> Vec<Vec<Gen>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * n);
        for w in &out {
            for s in 0..n as Gen {
                let mut x = w.clone();
                x.push(s);
                next.push(x);
            }
        }
        out = next;
    }
    out
}
