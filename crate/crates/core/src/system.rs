//! Right-angled Coxeter systems, the word problem and geodesic normal forms.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Gen = u8;

pub const MAX_GENERATORS: usize = 64;
pub const DEFAULT_RADIUS_CAP: usize = 12;

/// Generators with an adjacency mask of commuting pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoxeterSystem {
    names: Vec<String>,
    commute: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct NerveFile {
    generators: Vec<String>,
    edges: Vec<(String, String)>,
}

/// Canonical geodesic representative: the lexicographically least linear
/// extension of the heap of any reduced word for the element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NormalForm {
    letters: Vec<Gen>,
}

impl NormalForm {
    pub fn identity() -> Self {
        NormalForm { letters: Vec::new() }
    }

    pub fn letters(&self) -> &[Gen] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn into_letters(self) -> Vec<Gen> {
        self.letters
    }
}

impl CoxeterSystem {
    pub fn new(names: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        if names.len() > MAX_GENERATORS {
            return Err(Error::Nerve(format!("at most {} generators supported", MAX_GENERATORS)));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if n.is_empty() || n.chars().any(|c| c.is_whitespace() || c == ',') {
                return Err(Error::Nerve(format!("bad generator name {:?}", n)));
            }
            if !seen.insert(n.as_str()) {
                return Err(Error::Nerve(format!("duplicate generator {:?}", n)));
            }
        }
        let mut commute = vec![0u64; names.len()];
        for &(i, j) in edges {
            if i >= names.len() || j >= names.len() {
                return Err(Error::Nerve(format!("edge ({}, {}) out of range", i, j)));
            }
            if i == j {
                return Err(Error::Nerve(format!("self-loop at {:?}", names[i])));
            }
            commute[i] |= 1 << j;
            commute[j] |= 1 << i;
        }
        Ok(CoxeterSystem { names, commute })
    }

    pub fn from_names(gens: &[&str], edges: &[(&str, &str)]) -> Result<Self> {
        let names: Vec<String> = gens.iter().map(|s| s.to_string()).collect();
        let idx = |n: &str| {
            names.iter().position(|x| x == n).ok_or_else(|| Error::Nerve(format!("unknown generator {:?} in edge", n)))
        };
        let mut e = Vec::new();
        for (a, b) in edges {
            e.push((idx(a)?, idx(b)?));
        }
        Self::new(names, &e)
    }

    /// Parses `{"generators": [...], "edges": [[a, b], ...]}`.
    pub fn parse_nerve(text: &str) -> Result<Self> {
        let f: NerveFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("nerve file: {}", e)))?;
        let gens: Vec<&str> = f.generators.iter().map(String::as_str).collect();
        let edges: Vec<(&str, &str)> = f.edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        Self::from_names(&gens, &edges)
    }

    pub fn to_nerve_json(&self) -> serde_json::Value {
        let f = NerveFile {
            generators: self.names.clone(),
            edges: self.edges().into_iter().map(|(i, j)| (self.names[i].clone(), self.names[j].clone())).collect(),
        };
        serde_json::to_value(f).expect("nerve serializes")
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, s: Gen) -> &str {
        &self.names[s as usize]
    }

    pub fn index_of(&self, name: &str) -> Option<Gen> {
        self.names.iter().position(|n| n == name).map(|i| i as Gen)
    }

    pub fn gen(&self, name: &str) -> Gen {
        self.index_of(name).unwrap_or_else(|| panic!("no generator named {:?}", name))
    }

    /// Sorted list of commuting pairs `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.rank();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.commute[i] >> j & 1 == 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    #[inline]
    pub fn commutes(&self, s: Gen, t: Gen) -> bool {
        self.commute[s as usize] >> t & 1 == 1
    }

    /// Non-commuting or equal.
    #[inline]
    pub fn dependent(&self, s: Gen, t: Gen) -> bool {
        s == t || !self.commutes(s, t)
    }

    pub fn link_mask(&self, s: Gen) -> u64 {
        self.commute[s as usize]
    }

    pub fn star_mask(&self, s: Gen) -> u64 {
        self.commute[s as usize] | 1 << s
    }

    pub fn full_mask(&self) -> u64 {
        if self.rank() == 64 {
            u64::MAX
        } else {
            (1u64 << self.rank()) - 1
        }
    }

    pub fn check_word(&self, w: &[Gen]) -> Result<()> {
        match w.iter().find(|&&s| s as usize >= self.rank()) {
            Some(s) => Err(Error::Word(format!("generator index {} out of range", s))),
            None => Ok(()),
        }
    }

    /// Freely reduces using commutations: each letter cancels against the
    /// nearest earlier occurrence of itself when only commuting letters
    /// separate them.
    pub fn reduce(&self, w: &[Gen]) -> Vec<Gen> {
        let mut out: Vec<Gen> = Vec::with_capacity(w.len());
        for &s in w {
            push_reduced(self, &mut out, s);
        }
        out
    }

    /// Lexicographically least linear extension of the heap of `w`.
    /// `w` must already be reduced.
    pub fn lex_least(&self, w: &[Gen]) -> Vec<Gen> {
        let n = w.len();
        let mut indeg = vec![0usize; n];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for j in 0..n {
            // only the immediate dependent predecessor of each letter class matters
            // for reachability, but the quadratic closure is simple and small
            for i in 0..j {
                if self.dependent(w[i], w[j]) {
                    indeg[j] += 1;
                    succ[i].push(j);
                }
            }
        }
        let mut avail: BTreeSet<(Gen, usize)> = (0..n).filter(|&i| indeg[i] == 0).map(|i| (w[i], i)).collect();
        let mut out = Vec::with_capacity(n);
        while let Some(&(s, i)) = avail.iter().next() {
            avail.remove(&(s, i));
            out.push(s);
            for &j in &succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    avail.insert((w[j], j));
                }
            }
        }
        out
    }

    pub fn normalize(&self, w: &[Gen]) -> NormalForm {
        NormalForm { letters: self.lex_least(&self.reduce(w)) }
    }

    pub fn try_normalize(&self, w: &[Gen]) -> Result<NormalForm> {
        self.check_word(w)?;
        Ok(self.normalize(w))
    }

    pub fn generator(&self, s: Gen) -> NormalForm {
        NormalForm { letters: vec![s] }
    }

    pub fn multiply(&self, x: &NormalForm, y: &NormalForm) -> NormalForm {
        let mut w = x.letters.clone();
        w.extend_from_slice(&y.letters);
        self.normalize(&w)
    }

    pub fn multiply_all(&self, xs: &[&NormalForm]) -> NormalForm {
        let w: Vec<Gen> = xs.iter().flat_map(|x| x.letters.iter().copied()).collect();
        self.normalize(&w)
    }

    pub fn invert(&self, x: &NormalForm) -> NormalForm {
        let w: Vec<Gen> = x.letters.iter().rev().copied().collect();
        NormalForm { letters: self.lex_least(&w) }
    }

    /// `x s`, reusing the normal form of `x`.
    pub fn mul_gen(&self, x: &NormalForm, s: Gen) -> NormalForm {
        let mut w = x.letters.clone();
        push_reduced(self, &mut w, s);
        NormalForm { letters: self.lex_least(&w) }
    }

    /// Whether `|x s| = |x| + 1`.
    pub fn extends(&self, x: &[Gen], s: Gen) -> bool {
        for &t in x.iter().rev() {
            if t == s {
                return false;
            }
            if !self.commutes(s, t) {
                return true;
            }
        }
        true
    }

    /// Reduced word of length `len`, each letter uniform among those that
    /// lengthen the current prefix.
    pub fn random_geodesic<R: rand::Rng>(&self, len: usize, rng: &mut R) -> Vec<Gen> {
        let mut w = Vec::with_capacity(len);
        for _ in 0..len {
            let choices: Vec<Gen> = (0..self.rank() as Gen).filter(|&s| self.extends(&w, s)).collect();
            if choices.is_empty() {
                break;
            }
            w.push(choices[rng.gen_range(0..choices.len())]);
        }
        w
    }

    /// Bitmask of the letters of any reduced word for `x`.
    pub fn support(&self, x: &NormalForm) -> u64 {
        x.letters.iter().fold(0u64, |m, &s| m | 1 << s)
    }

    pub fn in_standard_subgroup(&self, x: &NormalForm, t: u64) -> bool {
        self.support(x) & !t == 0
    }

    /// True iff the complement of the nerve is connected.
    pub fn is_irreducible(&self) -> bool {
        let n = self.rank();
        if n <= 1 {
            return true;
        }
        let full = self.full_mask();
        let mut seen = 1u64;
        let mut frontier = 1u64;
        while frontier != 0 {
            let mut next = 0u64;
            for i in 0..n {
                if frontier >> i & 1 == 1 {
                    next |= !self.commute[i] & full & !(1 << i);
                }
            }
            frontier = next & !seen;
            seen |= next;
        }
        seen == full
    }

    /// Irreducible components of a generator subset, as masks.
    pub fn components(&self, mask: u64) -> Vec<u64> {
        let mut rest = mask;
        let mut out = Vec::new();
        while rest != 0 {
            let start = rest.trailing_zeros();
            let mut comp = 1u64 << start;
            let mut frontier = comp;
            while frontier != 0 {
                let mut next = 0u64;
                for i in 0..self.rank() {
                    if frontier >> i & 1 == 1 {
                        next |= !self.commute[i] & mask & !(1 << i);
                    }
                }
                frontier = next & !comp;
                comp |= next;
            }
            out.push(comp);
            rest &= !comp;
        }
        out
    }

    /// All elements of word length at most `radius`, sorted by length then
    /// lexicographically, as a list of spheres.
    pub fn spheres(&self, radius: usize, cap: usize) -> Result<Vec<Vec<NormalForm>>> {
        self.spheres_in(self.full_mask(), radius, cap)
    }

    /// Spheres of the standard subgroup generated by `mask`.
    pub fn spheres_in(&self, mask: u64, radius: usize, cap: usize) -> Result<Vec<Vec<NormalForm>>> {
        if radius > cap {
            return Err(Error::Limit(format!("radius {} exceeds cap {}", radius, cap)));
        }
        let mut spheres = vec![vec![NormalForm::identity()]];
        for _ in 0..radius {
            let last = spheres.last().unwrap();
            let mut next: HashSet<NormalForm> = HashSet::new();
            for x in last {
                for s in 0..self.rank() as Gen {
                    if mask >> s & 1 == 1 && self.extends(&x.letters, s) {
                        let mut w = x.letters.clone();
                        w.push(s);
                        next.insert(NormalForm { letters: self.lex_least(&w) });
                    }
                }
            }
            let mut v: Vec<NormalForm> = next.into_iter().collect();
            v.sort();
            spheres.push(v);
        }
        Ok(spheres)
    }

    pub fn enumerate_ball(&self, radius: usize, cap: usize) -> Result<Vec<NormalForm>> {
        Ok(self.spheres(radius, cap)?.into_iter().flatten().collect())
    }

    /// Parses generator names separated by whitespace or commas. A token that
    /// is not itself a name is split by longest-prefix matching, so `bdeac`
    /// works when all names are single letters. `ε` or an empty string is the
    /// identity.
    pub fn parse_word(&self, text: &str) -> Result<Vec<Gen>> {
        let mut out = Vec::new();
        for tok in text.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            if let Some(s) = self.index_of(tok) {
                out.push(s);
                continue;
            }
            if tok == "ε" || tok == "1" {
                continue;
            }
            let mut rest = tok;
            while !rest.is_empty() {
                let best = self
                    .names
                    .iter()
                    .enumerate()
                    .filter(|(_, n)| rest.starts_with(n.as_str()))
                    .max_by_key(|(_, n)| n.len());
                match best {
                    Some((i, n)) => {
                        out.push(i as Gen);
                        rest = &rest[n.len()..];
                    }
                    None => return Err(Error::Word(format!("cannot parse {:?} into generators", tok))),
                }
            }
        }
        Ok(out)
    }

    pub fn format_word(&self, w: &[Gen]) -> String {
        if w.is_empty() {
            return "ε".to_string();
        }
        let single = self.names.iter().all(|n| n.chars().count() == 1);
        let parts: Vec<&str> = w.iter().map(|&s| self.name(s)).collect();
        if single {
            parts.concat()
        } else {
            parts.join(" ")
        }
    }

    pub fn format_mask(&self, mask: u64) -> Vec<String> {
        (0..self.rank()).filter(|&i| mask >> i & 1 == 1).map(|i| self.names[i].clone()).collect()
    }

    pub fn mask_of(&self, names: &[&str]) -> u64 {
        names.iter().fold(0u64, |m, n| m | 1 << self.gen(n))
    }
}

fn push_reduced(sys: &CoxeterSystem, out: &mut Vec<Gen>, s: Gen) {
    for k in (0..out.len()).rev() {
        let t = out[k];
        if t == s {
            out.remove(k);
            return;
        }
        if !sys.commutes(s, t) {
            break;
        }
    }
    out.push(s);
}

pub struct WordDisplay<'a>(pub &'a CoxeterSystem, pub &'a [Gen]);

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.format_word(self.1))
    }
}

/// Built-in systems addressable by name.
pub fn builtin(name: &str) -> Option<CoxeterSystem> {
    let sys = match name {
        "fig-a1" => {
            CoxeterSystem::from_names(&["a", "b", "c", "d", "e"], &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")])
        }
        "fig-a2" => CoxeterSystem::from_names(
            &["d1", "d2", "t1", "t2", "t3", "e"],
            &[
                ("d1", "t1"),
                ("d1", "t2"),
                ("d1", "t3"),
                ("d2", "t1"),
                ("d2", "t2"),
                ("d2", "t3"),
                ("t1", "e"),
                ("t3", "e"),
            ],
        ),
        "pentagon" => CoxeterSystem::from_names(
            &["a", "b", "c", "d", "e"],
            &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("e", "a")],
        ),
        "dihedral" => CoxeterSystem::from_names(&["s", "t"], &[]),
        "free3" => CoxeterSystem::from_names(&["a", "b", "c"], &[]),
        _ => return None,
    };
    Some(sys.expect("built-in nerves are valid"))
}

pub const BUILTIN_NAMES: [&str; 5] = ["fig-a1", "fig-a2", "pentagon", "dihedral", "free3"];

/// Resolves either a built-in name or a path to a nerve file.
pub fn load_nerve(spec: &str) -> Result<CoxeterSystem> {
    if let Some(s) = builtin(spec) {
        return Ok(s);
    }
    let text =
        std::fs::read_to_string(spec).map_err(|e| Error::Parse(format!("cannot read nerve {:?}: {}", spec, e)))?;
    CoxeterSystem::parse_nerve(&text)
}
