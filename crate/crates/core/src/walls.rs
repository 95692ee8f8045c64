//! Walls as canonical reflections, the dependence order on the walls of a
//! geodesic, and efficient itineraries between two walls.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::{CoxeterSystem, Gen, NormalForm};

/// Fixed set of the reflection `u s u⁻¹`. `prefix` is the shortest `u`
/// realizing the reflection, i.e. the minimal representative of `u` modulo
/// the centralizer `C(star(s))`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Wall {
    reflection: NormalForm,
    ty: Gen,
    prefix: NormalForm,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct WallJson {
    pub prefix: String,
    #[serde(rename = "type")]
    pub ty: String,
}

impl Wall {
    pub fn new(sys: &CoxeterSystem, u: &[Gen], s: Gen) -> Wall {
        let prefix = canonical_prefix(sys, u, s);
        let reflection = conjugate(sys, &prefix, s);
        Wall { reflection, ty: s, prefix }
    }

    pub fn standard(sys: &CoxeterSystem, s: Gen) -> Wall {
        Wall::new(sys, &[], s)
    }

    /// `g · W`.
    pub fn translate(&self, sys: &CoxeterSystem, g: &NormalForm) -> Wall {
        let mut w = g.letters().to_vec();
        w.extend_from_slice(self.prefix.letters());
        Wall::new(sys, &w, self.ty)
    }

    pub fn reflection(&self) -> &NormalForm {
        &self.reflection
    }

    pub fn ty(&self) -> Gen {
        self.ty
    }

    pub fn prefix(&self) -> &NormalForm {
        &self.prefix
    }

    pub fn to_json(&self, sys: &CoxeterSystem) -> WallJson {
        WallJson { prefix: sys.format_word(self.prefix.letters()), ty: sys.name(self.ty).to_string() }
    }

    pub fn display(&self, sys: &CoxeterSystem) -> String {
        if self.prefix.is_empty() {
            format!("W({})", sys.name(self.ty))
        } else {
            format!("{}·W({})", sys.format_word(self.prefix.letters()), sys.name(self.ty))
        }
    }
}

fn conjugate(sys: &CoxeterSystem, u: &NormalForm, s: Gen) -> NormalForm {
    let mut w = u.letters().to_vec();
    w.push(s);
    w.extend(u.letters().iter().rev());
    sys.normalize(&w)
}

/// Strips right descents lying in `star(s)` until none remain.
pub fn canonical_prefix(sys: &CoxeterSystem, u: &[Gen], s: Gen) -> NormalForm {
    let star = sys.star_mask(s);
    let mut w = sys.normalize(u).into_letters();
    loop {
        let n = w.len();
        let pos = (0..n).rev().find(|&i| star >> w[i] & 1 == 1 && w[i + 1..].iter().all(|&t| sys.commutes(w[i], t)));
        match pos {
            Some(i) => {
                w.remove(i);
            }
            None => break,
        }
    }
    sys.normalize(&w)
}

/// Whether the wall separates the identity chamber from chamber `x`.
pub fn separates(sys: &CoxeterSystem, wall: &Wall, x: &NormalForm) -> bool {
    sys.multiply(&wall.reflection, x).len() < x.len()
}

/// Walls cross iff their reflections commute.
pub fn walls_cross(sys: &CoxeterSystem, w1: &Wall, w2: &Wall) -> Result<bool> {
    if w1 == w2 {
        return Err(Error::Precondition("crossing test needs distinct walls".into()));
    }
    Ok(reflections_commute(sys, &w1.reflection, &w2.reflection))
}

pub fn reflections_commute(sys: &CoxeterSystem, r1: &NormalForm, r2: &NormalForm) -> bool {
    sys.multiply(r1, r2) == sys.multiply(r2, r1)
}

/// Walls of a geodesic with the dependence order on positions.
#[derive(Clone, Debug)]
pub struct WallPoset {
    letters: Vec<Gen>,
    walls: Vec<Wall>,
    below: Vec<Vec<bool>>,
}

impl WallPoset {
    /// Walls of the itinerary departing from `departure` along the reduced
    /// word `letters`.
    pub fn from_word(sys: &CoxeterSystem, departure: &NormalForm, letters: &[Gen]) -> WallPoset {
        let n = letters.len();
        let mut walls = Vec::with_capacity(n);
        let mut pre = departure.letters().to_vec();
        for &s in letters {
            walls.push(Wall::new(sys, &pre, s));
            pre.push(s);
        }
        let mut below = vec![vec![false; n]; n];
        for j in 0..n {
            for i in (0..j).rev() {
                if sys.dependent(letters[i], letters[j]) {
                    below[j][i] = true;
                    let (lo, hi) = below.split_at_mut(j);
                    for (k, b) in lo[i].iter().enumerate() {
                        if *b {
                            hi[0][k] = true;
                        }
                    }
                }
            }
        }
        WallPoset { letters: letters.to_vec(), walls, below }
    }

    pub fn len(&self) -> usize {
        self.walls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walls.is_empty()
    }

    pub fn walls(&self) -> &[Wall] {
        &self.walls
    }

    pub fn letters(&self) -> &[Gen] {
        &self.letters
    }

    /// `W_i < W_j`.
    pub fn less(&self, i: usize, j: usize) -> bool {
        self.below[j][i]
    }

    pub fn comparable(&self, i: usize, j: usize) -> bool {
        i == j || self.below[i][j] || self.below[j][i]
    }

    pub fn incomparable(&self, i: usize, j: usize) -> bool {
        !self.comparable(i, j)
    }

    pub fn position(&self, w: &Wall) -> Option<usize> {
        self.walls.iter().position(|x| x == w)
    }

    /// Minimal positions among those flagged in `mask`.
    pub fn minimal(&self, mask: &[bool]) -> Vec<usize> {
        (0..self.len()).filter(|&j| mask[j] && !(0..self.len()).any(|i| mask[i] && self.less(i, j))).collect()
    }

    /// Linear extension of the positions in `mask` that takes, at every step,
    /// the available position with the least key.
    pub fn sort_by_key<K: Ord>(&self, mask: &[bool], key: impl Fn(usize) -> K) -> Vec<usize> {
        let n = self.len();
        let mut placed = vec![false; n];
        let mut out = Vec::new();
        let total = mask.iter().filter(|b| **b).count();
        while out.len() < total {
            let next = (0..n)
                .filter(|&j| mask[j] && !placed[j] && !(0..n).any(|i| mask[i] && !placed[i] && self.less(i, j)))
                .min_by_key(|&j| (key(j), j))
                .expect("poset is acyclic");
            placed[next] = true;
            out.push(next);
        }
        out
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for j in 0..self.len() {
            for i in 0..j {
                if self.incomparable(i, j) {
                    v.push((i, j));
                }
            }
        }
        v
    }
}

pub fn walls_of(sys: &CoxeterSystem, gamma: &NormalForm) -> WallPoset {
    WallPoset::from_word(sys, &NormalForm::identity(), gamma.letters())
}

/// All compatible total orders, as geodesic words.
pub fn linear_extensions(p: &WallPoset, limit: usize) -> Result<Vec<Vec<Gen>>> {
    fn rec(p: &WallPoset, placed: &mut Vec<bool>, cur: &mut Vec<Gen>, out: &mut Vec<Vec<Gen>>, limit: usize) -> bool {
        let n = p.len();
        if cur.len() == n {
            out.push(cur.clone());
            return out.len() <= limit;
        }
        for j in 0..n {
            if placed[j] || (0..n).any(|i| !placed[i] && p.less(i, j)) {
                continue;
            }
            placed[j] = true;
            cur.push(p.letters[j]);
            let ok = rec(p, placed, cur, out, limit);
            cur.pop();
            placed[j] = false;
            if !ok {
                return false;
            }
        }
        true
    }
    let mut out = Vec::new();
    if !rec(p, &mut vec![false; p.len()], &mut Vec::new(), &mut out, limit) {
        return Err(Error::Limit(format!("more than {} linear extensions", limit)));
    }
    Ok(out)
}

/// Number of compatible total orders, by dynamic programming over down-sets.
pub fn count_linear_extensions(p: &WallPoset) -> Result<u128> {
    let n = p.len();
    if n > 40 {
        return Err(Error::Limit("extension counting supports at most 40 walls".into()));
    }
    let pred: Vec<u64> = (0..n).map(|j| (0..n).filter(|&i| p.less(i, j)).fold(0u64, |m, i| m | 1 << i)).collect();
    let mut memo = std::collections::HashMap::new();
    fn go(set: u64, n: usize, pred: &[u64], memo: &mut std::collections::HashMap<u64, u128>) -> u128 {
        if set.count_ones() as usize == n {
            return 1;
        }
        if let Some(&v) = memo.get(&set) {
            return v;
        }
        let mut total = 0;
        for j in 0..n {
            if set >> j & 1 == 0 && pred[j] & !set == 0 {
                total += go(set | 1 << j, n, pred, memo);
            }
        }
        memo.insert(set, total);
        total
    }
    Ok(go(0, n, &pred, &mut memo))
}

/// Sequence of walls crossed along a geodesic edge path.
#[derive(Clone, Debug)]
pub struct Itinerary {
    pub departure: NormalForm,
    pub letters: Vec<Gen>,
    pub walls: Vec<Wall>,
}

impl Itinerary {
    pub fn new(sys: &CoxeterSystem, departure: NormalForm, letters: Vec<Gen>) -> Itinerary {
        let walls = WallPoset::from_word(sys, &departure, &letters).walls;
        Itinerary { departure, letters, walls }
    }

    pub fn gamma(&self, sys: &CoxeterSystem) -> NormalForm {
        sys.normalize(&self.letters)
    }

    pub fn arrival(&self, sys: &CoxeterSystem) -> NormalForm {
        let mut w = self.departure.letters().to_vec();
        w.extend_from_slice(&self.letters);
        sys.normalize(&w)
    }

    pub fn is_geodesic(&self, sys: &CoxeterSystem) -> bool {
        self.gamma(sys).len() == self.letters.len()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

/// A chamber adjacent to both of two crossing walls, as the prefix `g` with
/// `g W(s1) = W1`, `g W(t) = W2`.
fn corner_chamber(sys: &CoxeterSystem, w1: &Wall, w2: &Wall) -> Result<(NormalForm, Gen)> {
    let u1 = w1.prefix();
    let u1inv = sys.invert(u1);
    let r = sys.multiply_all(&[&u1inv, w2.reflection(), u1]);
    let inner = reflection_to_wall(sys, &r)
        .ok_or_else(|| Error::Diagnostic("conjugated reflection is not a reflection".into()))?;
    let g = sys.multiply(u1, inner.prefix());
    Ok((g, inner.ty()))
}

/// Recovers the wall of a reflection given in normal form. The wall of `r`
/// separates the identity from `r`, so it is among the walls of `r`.
pub fn reflection_to_wall(sys: &CoxeterSystem, r: &NormalForm) -> Option<Wall> {
    walls_of(sys, r).walls.into_iter().find(|w| w.reflection() == r)
}

/// Block of a wall relative to the pair `(W1, W2)` when sorting an
/// itinerary into the shape `X1, W1, Sep, W2, X2`.
fn block(sys: &CoxeterSystem, w: &Wall, w1: &Wall, w2: &Wall) -> u8 {
    if w == w1 {
        1
    } else if w == w2 {
        3
    } else if reflections_commute(sys, w.reflection(), w1.reflection()) {
        0
    } else if reflections_commute(sys, w.reflection(), w2.reflection()) {
        4
    } else {
        2
    }
}

/// Efficient itinerary from `W1` to `W2`.
pub fn efficient_itinerary(sys: &CoxeterSystem, w1: &Wall, w2: &Wall) -> Result<Itinerary> {
    if w1 == w2 {
        return Err(Error::Precondition("efficient itinerary needs distinct walls".into()));
    }
    if reflections_commute(sys, w1.reflection(), w2.reflection()) {
        let (g, t) = corner_chamber(sys, w1, w2)?;
        return Ok(Itinerary::new(sys, g, vec![w1.ty(), t]));
    }
    let u1 = w1.prefix().clone();
    let u1s = sys.mul_gen(&u1, w1.ty());
    let u2 = w2.prefix().clone();
    let u2s = sys.mul_gen(&u2, w2.ty());
    let side2 = separates(sys, w1, &u2);
    let alpha = if separates(sys, w1, &u1) != side2 { u1.clone() } else { u1s };
    let side1 = separates(sys, w2, &u1);
    let beta = if separates(sys, w2, &u2) != side1 { u2 } else { u2s };
    efficient_itinerary_from(sys, w1, w2, &alpha, &beta)
}

/// Efficient itinerary built from given chambers: `alpha` adjacent to `W1`
/// on the side away from `W2`, `beta` adjacent to `W2` on the side away from
/// `W1`.
pub fn efficient_itinerary_from(
    sys: &CoxeterSystem,
    w1: &Wall,
    w2: &Wall,
    alpha: &NormalForm,
    beta: &NormalForm,
) -> Result<Itinerary> {
    let delta = sys.multiply(&sys.invert(alpha), beta);
    let p = WallPoset::from_word(sys, alpha, delta.letters());
    let i1 = p.position(w1).ok_or_else(|| Error::Precondition("first wall does not separate the chambers".into()))?;
    let i2 = p.position(w2).ok_or_else(|| Error::Precondition("last wall does not separate the chambers".into()))?;
    let blocks: Vec<u8> = p.walls().iter().map(|w| block(sys, w, w1, w2)).collect();
    let order = p.sort_by_key(&vec![true; p.len()], |j| blocks[j]);
    if order.windows(2).any(|w| blocks[w[0]] > blocks[w[1]]) {
        return Err(Error::Diagnostic("itinerary cannot be sorted into efficient shape".into()));
    }
    let a = order.iter().position(|&j| j == i1).unwrap();
    let b = order.iter().position(|&j| j == i2).unwrap();
    if a > b {
        return Err(Error::Diagnostic("first wall follows last wall".into()));
    }
    let mut dep = alpha.letters().to_vec();
    dep.extend(order[..a].iter().map(|&j| p.letters()[j]));
    let departure = sys.normalize(&dep);
    let letters: Vec<Gen> = order[a..=b].iter().map(|&j| p.letters()[j]).collect();
    let it = Itinerary::new(sys, departure, letters);
    debug_assert!(it.walls.first() == Some(w1) && it.walls.last() == Some(w2));
    Ok(it)
}

/// Element traversed by any efficient itinerary from `W1` to `W2`.
pub fn gamma_of(sys: &CoxeterSystem, w1: &Wall, w2: &Wall) -> Result<NormalForm> {
    Ok(efficient_itinerary(sys, w1, w2)?.gamma(sys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::builtin;

    #[test]
    fn appendix_walls() {
        let s = builtin("fig-a1").unwrap();
        let g = s.normalize(&s.parse_word("bdeac").unwrap());
        let p = walls_of(&s, &g);
        assert_eq!(p.len(), 5);
        let last = &p.walls()[4];
        assert_eq!(s.format_word(last.prefix().letters()), "bdea");
        assert_eq!(last.ty(), s.gen("c"));
        for i in 0..5 {
            for j in i + 1..5 {
                assert!(p.less(i, j));
            }
        }
        let w = Wall::standard(&s, s.gen("b"));
        assert!(!walls_cross(&s, &w, last).unwrap());
        let gm = gamma_of(&s, &w, last).unwrap();
        assert_eq!(s.format_word(gm.letters()), "bdeac");
    }

    #[test]
    fn crossing_basics() {
        let s = builtin("fig-a1").unwrap();
        let a = Wall::standard(&s, s.gen("a"));
        let b = Wall::standard(&s, s.gen("b"));
        let c = Wall::standard(&s, s.gen("c"));
        assert!(walls_cross(&s, &a, &b).unwrap());
        assert!(!walls_cross(&s, &a, &c).unwrap());
        assert!(walls_cross(&s, &a, &a).is_err());
        assert_eq!(s.format_word(gamma_of(&s, &a, &c).unwrap().letters()), "ac");
    }

    #[test]
    fn adjacent_walls_free_product() {
        let s = builtin("free3").unwrap();
        let a = Wall::standard(&s, 0);
        let ab = Wall::new(&s, &[0], 1);
        let it = efficient_itinerary(&s, &a, &ab).unwrap();
        assert_eq!(it.walls, vec![a, ab]);
        assert_eq!(s.format_word(it.gamma(&s).letters()), "ab");
    }

    #[test]
    fn canonical_prefixes() {
        let s = builtin("fig-a1").unwrap();
        // a commutes with b so a·W(b) = W(b)
        let w = Wall::new(&s, &[s.gen("a")], s.gen("b"));
        assert!(w.prefix().is_empty());
        assert_eq!(w, Wall::standard(&s, s.gen("b")));
        let g = s.normalize(&s.parse_word("ab").unwrap());
        let p = walls_of(&s, &g);
        assert_eq!(linear_extensions(&p, 10).unwrap().len(), 2);
    }

    #[test]
    fn reflection_round_trip() {
        let s = builtin("fig-a1").unwrap();
        for x in s.enumerate_ball(4, 12).unwrap() {
            for t in 0..5 {
                let w = Wall::new(&s, x.letters(), t);
                assert_eq!(reflection_to_wall(&s, w.reflection()).as_ref(), Some(&w));
            }
        }
    }
}
