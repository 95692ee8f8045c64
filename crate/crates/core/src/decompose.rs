//! Bounded product projections, low-crossing minimal walls, and the
//! decomposition of an itinerary along pairwise disjoint walls.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::{CoxeterSystem, Gen, NormalForm};
use crate::walls::{gamma_of, walls_of, Itinerary, Wall, WallPoset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Bpp {
    Value(usize),
    OverCap,
}

/// Largest `k` such that the incomparability graph of `p` contains two
/// disjoint sets `A`, `B` of size `k` with every cross pair incomparable.
pub fn bpp_of_poset(p: &WallPoset) -> usize {
    let n = p.len();
    assert!(n <= 128, "at most 128 walls");
    let nbr: Vec<u128> =
        (0..n).map(|i| (0..n).filter(|&j| p.incomparable(i, j)).fold(0u128, |m, j| m | 1 << j)).collect();
    // bicliques live inside connected components of the incomparability graph
    let mut seen = 0u128;
    let mut best = 0;
    for v in 0..n {
        if seen >> v & 1 == 1 || nbr[v] == 0 {
            continue;
        }
        let mut comp = 1u128 << v;
        let mut frontier = comp;
        while frontier != 0 {
            let mut next = 0u128;
            for i in 0..n {
                if frontier >> i & 1 == 1 {
                    next |= nbr[i];
                }
            }
            frontier = next & !comp;
            comp |= next;
        }
        seen |= comp;
        search(&nbr, comp, 0, comp, comp, &mut best);
    }
    best
}

/// Branch and bound over the side `A`, kept in increasing index order.
/// `common` is the common neighbourhood of `A` and `cands` the vertices that
/// may still join `A`.
fn search(nbr: &[u128], comp: u128, size: usize, common: u128, cands: u128, best: &mut usize) {
    let mut rest = cands;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let c = common & nbr[v];
        let a = size + 1;
        let val = a.min(c.count_ones() as usize);
        if val > *best {
            *best = val;
        }
        let upper = (a + rest.count_ones() as usize).min(c.count_ones() as usize);
        if upper > *best {
            search(nbr, comp, a, c, rest & comp, best);
        }
    }
}

pub fn bpp_constant(sys: &CoxeterSystem, gamma: &NormalForm, cap: usize) -> Bpp {
    let d = bpp_of_poset(&walls_of(sys, gamma));
    if d > cap {
        Bpp::OverCap
    } else {
        Bpp::Value(d)
    }
}

pub fn low_crossing_bound(d: usize) -> usize {
    (2 * d + 1) * 4usize.pow(d as u32)
}

#[derive(Clone, Debug, Serialize)]
pub struct LowCrossing {
    pub position: usize,
    pub crossings: usize,
    pub bound: usize,
    /// False when the intersection-type construction produced no candidate
    /// and the wall was found by checking every minimal wall.
    pub constructive: bool,
}

fn crossings_within(p: &WallPoset, mask: &[bool], v: usize) -> usize {
    (0..p.len()).filter(|&j| mask[j] && j != v && p.incomparable(v, j)).count()
}

/// Minimal wall of the masked sub-poset crossing few walls of it, chosen by
/// intersection types against the minimal walls.
pub fn low_crossing_in(p: &WallPoset, mask: &[bool], d: usize) -> Result<LowCrossing> {
    let bound = low_crossing_bound(d);
    let mins = p.minimal(mask);
    if mins.is_empty() {
        return Err(Error::Precondition("no walls remain".into()));
    }
    // intersection type of each wall: which minimal walls it crosses
    let mut types: Vec<(u128, usize)> = Vec::new();
    for j in (0..p.len()).filter(|&j| mask[j]) {
        let mut t = 0u128;
        for (k, &m) in mins.iter().enumerate() {
            if m != j && p.incomparable(m, j) {
                t |= 1 << k;
            }
        }
        match types.iter_mut().find(|x| x.0 == t) {
            Some(x) => x.1 += 1,
            None => types.push((t, 1)),
        }
    }
    let heavy: u128 = types.iter().filter(|x| x.1 > 2 * d + 1).fold(0, |m, x| m | x.0);
    if let Some(k) = (0..mins.len()).find(|&k| heavy >> k & 1 == 0) {
        let c = crossings_within(p, mask, mins[k]);
        if c <= bound {
            return Ok(LowCrossing { position: mins[k], crossings: c, bound, constructive: true });
        }
    }
    for &m in &mins {
        let c = crossings_within(p, mask, m);
        if c <= bound {
            return Ok(LowCrossing { position: m, crossings: c, bound, constructive: false });
        }
    }
    Err(Error::Diagnostic(format!(
        "no minimal wall crosses at most {} walls (D = {}); the bounded product projection hypothesis must fail",
        bound, d
    )))
}

pub fn minimal_wall_low_crossings(sys: &CoxeterSystem, gamma: &NormalForm, d: usize) -> Result<(Wall, LowCrossing)> {
    let p = walls_of(sys, gamma);
    if p.is_empty() {
        return Err(Error::Precondition("identity has no walls".into()));
    }
    let lc = low_crossing_in(&p, &vec![true; p.len()], d)?;
    Ok((p.walls()[lc.position].clone(), lc))
}

#[derive(Clone, Debug)]
pub struct Window {
    pub i: usize,
    pub j: usize,
    pub eta_i: NormalForm,
    pub middle: NormalForm,
    pub eta_j: NormalForm,
}

#[derive(Clone, Debug)]
pub struct DisjointDecomposition {
    pub d: usize,
    pub r_prime: usize,
    pub r: usize,
    /// Positions of the chain walls in the poset of the normal form.
    pub chain_positions: Vec<usize>,
    pub chain: Vec<Wall>,
    pub spacers: Vec<Itinerary>,
    /// The reordered itinerary `W_1, V_1, ..., W_n, V_n` departing from the identity.
    pub itinerary: Itinerary,
    pub order: Vec<usize>,
    pub windows: Vec<Window>,
}

pub fn r_constants(d: usize) -> (usize, usize) {
    let rp = low_crossing_bound(d);
    (rp, rp * d + d)
}

/// Peels minimal low-crossing walls. Verifies the four structural properties
/// and the window factorization before returning.
pub fn disjoint_decomposition(sys: &CoxeterSystem, gamma: &NormalForm, d: usize) -> Result<DisjointDecomposition> {
    let p = walls_of(sys, gamma);
    let actual = bpp_of_poset(&p);
    if actual > d {
        return Err(Error::Precondition(format!("element has product projection constant {} > {}", actual, d)));
    }
    let n = p.len();
    let (r_prime, r) = r_constants(d);
    let mut rem = vec![true; n];
    let mut order = Vec::with_capacity(n);
    let mut chain_positions = Vec::new();
    let mut spacer_pos: Vec<Vec<usize>> = Vec::new();
    while rem.iter().any(|b| *b) {
        let lc = low_crossing_in(&p, &rem, d)?;
        let w = lc.position;
        rem[w] = false;
        let mut vmask = vec![false; n];
        for j in 0..n {
            if rem[j] && p.incomparable(w, j) {
                vmask[j] = true;
            }
        }
        let v = p.sort_by_key(&vmask, |j| j);
        for &j in &v {
            rem[j] = false;
        }
        order.push(w);
        order.extend_from_slice(&v);
        chain_positions.push(w);
        spacer_pos.push(v);
    }
    let letters: Vec<Gen> = order.iter().map(|&j| p.letters()[j]).collect();
    let itinerary = Itinerary::new(sys, NormalForm::identity(), letters);
    let mut spacers = Vec::new();
    let mut offset = 0;
    for v in &spacer_pos {
        offset += 1;
        let dep = sys.normalize(&itinerary.letters[..offset]);
        spacers.push(Itinerary::new(sys, dep, itinerary.letters[offset..offset + v.len()].to_vec()));
        offset += v.len();
    }
    let chain: Vec<Wall> = chain_positions.iter().map(|&j| p.walls()[j].clone()).collect();

    // order validity and the four properties
    for a in 0..n {
        for b in a + 1..n {
            if p.less(order[b], order[a]) {
                return Err(Error::Diagnostic("peeled order is not compatible with the wall order".into()));
            }
        }
    }
    if sys.normalize(&itinerary.letters) != *gamma {
        return Err(Error::Diagnostic("reordered itinerary traverses a different element".into()));
    }
    for (k, v) in spacer_pos.iter().enumerate() {
        if v.len() > r {
            return Err(Error::Diagnostic(format!("spacer {} has {} > R = {} walls", k, v.len(), r)));
        }
        if v.iter().any(|&j| !p.incomparable(chain_positions[k], j)) {
            return Err(Error::Diagnostic(format!("spacer {} contains a wall disjoint from its chain wall", k)));
        }
    }
    for a in 0..chain_positions.len() {
        for b in a + 1..chain_positions.len() {
            if p.incomparable(chain_positions[a], chain_positions[b]) {
                return Err(Error::Diagnostic(format!("chain walls {} and {} cross", a, b)));
            }
        }
        let c = crossings_within(&p, &vec![true; n], chain_positions[a]);
        if c > r {
            return Err(Error::Diagnostic(format!("chain wall {} crosses {} > R = {} walls", a, c, r)));
        }
    }

    let index_in_order: Vec<usize> = {
        let mut v = vec![0; n];
        for (k, &j) in order.iter().enumerate() {
            v[j] = k;
        }
        v
    };
    let mut windows = Vec::new();
    for a in 0..chain_positions.len() {
        for b in a + 1..chain_positions.len() {
            let wa = chain_positions[a];
            let wb = chain_positions[b];
            let (lo, hi) = (index_in_order[wa], index_in_order[wb]);
            let mut mask = vec![false; n];
            for &j in &order[lo..=hi] {
                mask[j] = true;
            }
            let blocks: Vec<u8> = (0..n)
                .map(|j| {
                    if j == wa {
                        1
                    } else if j == wb {
                        3
                    } else if p.incomparable(wa, j) {
                        0
                    } else if p.incomparable(wb, j) {
                        4
                    } else {
                        2
                    }
                })
                .collect();
            let sorted = p.sort_by_key(&mask, |j| blocks[j]);
            if sorted.windows(2).any(|w| blocks[w[0]] > blocks[w[1]]) {
                return Err(Error::Diagnostic(format!("window ({}, {}) cannot be put in factored form", a, b)));
            }
            let word = |f: &dyn Fn(u8) -> bool| -> Vec<Gen> {
                sorted.iter().filter(|&&j| f(blocks[j])).map(|&j| p.letters()[j]).collect()
            };
            let yi = word(&|b| b == 0);
            let mid = word(&|b| (1..=3).contains(&b));
            let yj = word(&|b| b == 4);
            if yi.len() > r || yj.len() > r {
                return Err(Error::Diagnostic(format!("window ({}, {}) has an end factor longer than R", a, b)));
            }
            let eta_i = sys.normalize(&yi);
            let eta_j = sys.normalize(&yj);
            let middle = sys.normalize(&mid);
            let whole: Vec<Gen> = order[lo..=hi].iter().map(|&j| p.letters()[j]).collect();
            if sys.multiply_all(&[&eta_i, &middle, &eta_j]) != sys.normalize(&whole) {
                return Err(Error::Diagnostic(format!("window ({}, {}) factorization mismatch", a, b)));
            }
            if middle != gamma_of(sys, &chain[a], &chain[b])? {
                return Err(Error::Diagnostic(format!("window ({}, {}) middle factor is not γ(W_i, W_j)", a, b)));
            }
            windows.push(Window { i: a, j: b, eta_i, middle, eta_j });
        }
    }
    Ok(DisjointDecomposition { d, r_prime, r, chain_positions, chain, spacers, itinerary, order, windows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::builtin;

    #[test]
    fn bpp_examples() {
        let s = builtin("fig-a1").unwrap();
        let g = |t: &str| s.normalize(&s.parse_word(t).unwrap());
        assert_eq!(bpp_constant(&s, &g("bdeac"), 10), Bpp::Value(0));
        assert_eq!(bpp_constant(&s, &g("ab"), 10), Bpp::Value(1));
        assert_eq!(bpp_constant(&s, &g("bdbdacac"), 10), Bpp::Value(4));
        assert_eq!(bpp_constant(&s, &g("bdbdacac"), 3), Bpp::OverCap);
        assert_eq!(bpp_constant(&s, &g("bdbdeacac"), 10), Bpp::Value(0));
    }

    #[test]
    fn decomposition_examples() {
        let s = builtin("fig-a1").unwrap();
        let g = |t: &str| s.normalize(&s.parse_word(t).unwrap());
        let dd = disjoint_decomposition(&s, &g("bdeac"), 0).unwrap();
        assert_eq!(dd.chain.len(), 5);
        assert!(dd.spacers.iter().all(|v| v.is_empty()));
        let dd = disjoint_decomposition(&s, &g("ab"), 1).unwrap();
        assert_eq!(dd.chain.len(), 1);
        assert_eq!(dd.spacers[0].len(), 1);
        let dd = disjoint_decomposition(&s, &g("bdbdeacac"), 2).unwrap();
        for (i, a) in dd.chain.iter().enumerate() {
            for b in &dd.chain[i + 1..] {
                assert!(!crate::walls::walls_cross(&s, a, b).unwrap());
            }
        }
        assert!(disjoint_decomposition(&s, &g("bdbdacac"), 2).is_err());
    }
}
