//! Projective walls of a simplicial representation, depth-N polyhedral inner
//! approximations of the Vinberg domain and of half-cones, the nesting
//! probe, duality of half-cones and the Σ polytopes of the minimal domain.
//!
//! Points are rays in the cone over the domain, stored as primitive integer
//! vectors so that set comparisons are exact.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{dot, format_rational, primitive_integer, scale, sub, to_f64, unit, QMat, QVec, Q};
use crate::lp::{extreme_rays, max_ray_scale, positive_chart, RayScale};
use crate::system::{CoxeterSystem, Gen, NormalForm};
use crate::vinberg::SimplicialRep;
use crate::walls::{separates, walls_cross, Wall};

pub const DEFAULT_DECAY_TOL: f64 = 1e-3;
pub const DEFAULT_SUBSET_CAP: usize = 1_000_000;

/// `−(1, …, 1)`, interior point of the fundamental cone `Δ̃ = {x ≤ 0}`.
pub fn sample_point(n: usize) -> QVec {
    vec![-Q::one(); n]
}

/// Vertex `−e_k` of the fundamental simplex.
pub fn simplex_vertex(n: usize, k: usize) -> QVec {
    let mut v = unit(n, k);
    v[k] = -Q::one();
    v
}

pub fn vec_strings(v: &[Q]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WallGeometry {
    pub wall: Wall,
    /// `α_W`, negative on the interior of the fundamental cone.
    pub functional: QVec,
    /// `v_W` with `α_W(v_W) = 2`.
    pub polar: QVec,
}

impl WallGeometry {
    /// Roles of functional and polar exchanged.
    pub fn dual(&self) -> WallGeometry {
        WallGeometry { wall: self.wall.clone(), functional: self.polar.clone(), polar: self.functional.clone() }
    }

    pub fn reflection_matrix(&self) -> QMat {
        let n = self.polar.len();
        let mut m = QMat::identity(n);
        for i in 0..n {
            for j in 0..n {
                let v = &m[(i, j)] - &self.polar[i] * &self.functional[j];
                m[(i, j)] = v;
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Negative,
    Zero,
    Positive,
}

impl Side {
    pub fn of(x: &Q) -> Side {
        if x.is_positive() {
            Side::Positive
        } else if x.is_negative() {
            Side::Negative
        } else {
            Side::Zero
        }
    }
}

/// Transports `(α_s, v_s)` along the canonical prefix `u` of `W = u·W(s)`
/// and checks `I − v_W ⊗ α_W = ρ(u s u⁻¹)` exactly.
pub fn wall_geometry(rep: &SimplicialRep, w: &Wall) -> Result<WallGeometry> {
    let n = rep.dim();
    let u = w.prefix().letters();
    let s = w.ty() as usize;
    let mut functional = rep.act_dual(u, &unit(n, s));
    let mut polar = rep.act(u, rep.polar(w.ty()));
    let side = dot(&functional, &sample_point(n));
    if side.is_zero() {
        return Err(Error::Numeric("wall hyperplane meets the fundamental cone interior".into()));
    }
    if side.is_positive() {
        functional = scale(&functional, &-Q::one());
        polar = scale(&polar, &-Q::one());
    }
    let g = WallGeometry { wall: w.clone(), functional, polar };
    if g.reflection_matrix() != rep.evaluate(w.reflection()) {
        return Err(Error::Certification("reflection matrix does not match the transported wall".into()));
    }
    Ok(g)
}

pub fn halfspace_side(geom: &WallGeometry, x: &[Q]) -> Side {
    Side::of(&dot(&geom.functional, x))
}

/// `Hs₊(W₂) ⊂ Hs₊(W₁)`, where `Hs₊` is the side away from the identity.
pub fn halfspace_nested(sys: &CoxeterSystem, w1: &Wall, w2: &Wall) -> Result<bool> {
    if walls_cross(sys, w1, w2)? {
        return Ok(false);
    }
    let x = w2.prefix().clone();
    let y = sys.mul_gen(&x, w2.ty());
    Ok(separates(sys, w1, &x) && separates(sys, w1, &y))
}

/// Orbit of the simplex vertices over a ball of chambers.
#[derive(Clone, Debug)]
pub struct DomainApprox {
    pub depth: usize,
    pub chambers: Vec<NormalForm>,
    pub vertices: BTreeSet<QVec>,
    /// Vertices of the tile facets lying in each wall.
    pub faces: BTreeMap<Wall, BTreeSet<QVec>>,
}

fn chamber_vertices(rep: &SimplicialRep, g: &[Gen]) -> Vec<QVec> {
    let n = rep.dim();
    (0..n).map(|k| primitive_integer(&rep.act(g, &simplex_vertex(n, k)))).collect()
}

pub fn tile_domain(sys: &CoxeterSystem, rep: &SimplicialRep, depth: usize, cap: usize) -> Result<DomainApprox> {
    let chambers = sys.enumerate_ball(depth, cap)?;
    let verts: Vec<Vec<QVec>> = chambers.par_iter().map(|g| chamber_vertices(rep, g.letters())).collect();
    let mut vertices = BTreeSet::new();
    let mut faces: BTreeMap<Wall, BTreeSet<QVec>> = BTreeMap::new();
    for (g, vs) in chambers.iter().zip(&verts) {
        vertices.extend(vs.iter().cloned());
        for s in 0..sys.rank() {
            let face = faces.entry(Wall::new(sys, g.letters(), s as Gen)).or_default();
            face.extend(vs.iter().enumerate().filter(|(k, _)| *k != s).map(|(_, v)| v.clone()));
        }
    }
    Ok(DomainApprox { depth, chambers, vertices, faces })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConeSign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// Generators of a polyhedral inner approximation of `Hc_±(W)`: the polar
/// (signed) together with the facet vertices of the tiles adjacent to `W`
/// within distance `depth` of the gate chamber `u`, measured in the
/// centralizer `C(link(s))`.
#[derive(Clone, Debug)]
pub struct HalfConeApprox {
    pub geometry: WallGeometry,
    pub sign: ConeSign,
    pub depth: usize,
    pub polar: QVec,
    /// Facet vertices with the relative depth at which they first appear,
    /// sorted by depth then coordinates.
    pub face: Vec<(QVec, usize)>,
}

impl HalfConeApprox {
    pub fn generators(&self) -> Vec<QVec> {
        self.generators_to(self.depth)
    }

    pub fn generators_to(&self, depth: usize) -> Vec<QVec> {
        let mut out = vec![self.polar.clone()];
        out.extend(self.face.iter().filter(|(_, d)| *d <= depth).map(|(p, _)| p.clone()));
        out
    }

    pub fn face_points(&self) -> BTreeSet<QVec> {
        self.face.iter().map(|(p, _)| p.clone()).collect()
    }

    /// `ρ(u)(±v_s − Σ_{k≠s} e_k)`, interior to every depth of the approximation.
    pub fn centre(&self, rep: &SimplicialRep) -> QVec {
        let s = self.geometry.wall.ty() as usize;
        let sign = if self.sign == ConeSign::Plus { Q::one() } else { -Q::one() };
        let mut x = scale(rep.polar(s as Gen), &sign);
        for (k, xk) in x.iter_mut().enumerate() {
            if k != s {
                *xk -= Q::one();
            }
        }
        rep.act(self.geometry.wall.prefix().letters(), &x)
    }
}

pub fn wall_face_vertices(
    sys: &CoxeterSystem,
    rep: &SimplicialRep,
    w: &Wall,
    depth: usize,
    cap: usize,
) -> Result<Vec<(QVec, usize)>> {
    let s = w.ty();
    let spheres = sys.spheres_in(sys.link_mask(s), depth, cap)?;
    let jobs: Vec<(Vec<Gen>, usize)> = spheres
        .iter()
        .enumerate()
        .flat_map(|(r, sp)| {
            sp.iter().map(move |h| {
                let mut c = w.prefix().letters().to_vec();
                c.extend_from_slice(h.letters());
                (c, r)
            })
        })
        .collect();
    let pts: Vec<(Vec<QVec>, usize)> = jobs
        .par_iter()
        .map(|(c, r)| {
            let mut vs = chamber_vertices(rep, c);
            vs.remove(s as usize);
            (vs, *r)
        })
        .collect();
    let mut first: BTreeMap<QVec, usize> = BTreeMap::new();
    for (vs, r) in pts {
        for v in vs {
            first.entry(v).or_insert(r);
        }
    }
    let mut out: Vec<(QVec, usize)> = first.into_iter().collect();
    out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

pub fn halfcone_approx(
    sys: &CoxeterSystem,
    rep: &SimplicialRep,
    w: &Wall,
    sign: ConeSign,
    depth: usize,
    cap: usize,
) -> Result<HalfConeApprox> {
    let geometry = wall_geometry(rep, w)?;
    let polar = match sign {
        ConeSign::Plus => primitive_integer(&geometry.polar),
        ConeSign::Minus => primitive_integer(&scale(&geometry.polar, &-Q::one())),
    };
    let face = wall_face_vertices(sys, rep, w, depth, cap)?;
    Ok(HalfConeApprox { geometry, sign, depth, polar, face })
}

/// An affine chart: a functional positive on every given point. The sum
/// functional against the fundamental sample `−(1, …, 1)` is preferred; an
/// LP-chosen one is used when it fails.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub functional: QVec,
    pub kind: &'static str,
}

impl Chart {
    pub fn fit(points: &[&QVec]) -> Result<Chart> {
        let n = points.first().map(|p| p.len()).unwrap_or(0);
        let sum = sample_point(n);
        if points.iter().all(|p| dot(&sum, p).is_positive()) {
            return Ok(Chart { functional: sum, kind: "sum" });
        }
        let owned: Vec<QVec> = points.iter().map(|p| (*p).clone()).collect();
        match positive_chart(&owned) {
            Some(f) => Ok(Chart { functional: f, kind: "lp" }),
            None => Err(Error::Numeric("points do not lie in an open half-space".into())),
        }
    }

    pub fn normalize(&self, p: &[Q]) -> Result<QVec> {
        let h = dot(&self.functional, p);
        if !h.is_positive() {
            return Err(Error::Numeric("point at or beyond the chart's hyperplane at infinity".into()));
        }
        Ok(scale(p, &h.recip()))
    }
}

/// Margin of `g` inside `cone(outer)` seen from the interior point `centre`:
/// `1 − 1/t` where `t` is the largest scale with `c + t(g − c)` in the cone,
/// both points normalized in `chart`. Nonnegative iff `g` is in the cone;
/// zero iff `g` is on its boundary.
pub fn margin(outer: &[QVec], centre: &[Q], g: &[Q], chart: &Chart) -> Result<Q> {
    let c = chart.normalize(centre)?;
    let g = chart.normalize(g)?;
    match max_ray_scale(outer, &c, &sub(&g, &c)) {
        RayScale::Infinite => Ok(Q::one()),
        RayScale::Finite(t) if t.is_positive() => Ok(Q::one() - t.recip()),
        RayScale::Finite(_) => Err(Error::Numeric("probe centre lies on the outer boundary".into())),
        RayScale::Outside => Err(Error::Numeric("probe centre lies outside the outer approximation".into())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Relation {
    Crossing,
    Nested,
    StronglyNestedAtDepth,
    MarginDecay,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct DepthMargin {
    pub depth: usize,
    /// Inner generators of relative depth at most `depth`.
    pub points: usize,
    pub min_margin: f64,
    pub min_margin_exact: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct NestingProbeReport {
    pub relation: Relation,
    pub halfspace_nested: bool,
    /// Depth of the outer approximation `Hc₊(W₁)`, held fixed across the trace.
    pub outer_depth: usize,
    pub outer_generators: usize,
    pub chart: &'static str,
    pub decay_tol: f64,
    pub trace: Vec<DepthMargin>,
    /// Inner generator attaining the final minimum.
    pub worst_point: Option<Vec<String>>,
}

#[derive(Clone, Debug)]
pub struct ProbeOpts {
    pub max_depth: usize,
    pub decay_tol: f64,
    pub cap: usize,
}

impl Default for ProbeOpts {
    fn default() -> Self {
        ProbeOpts { max_depth: 6, decay_tol: DEFAULT_DECAY_TOL, cap: crate::system::DEFAULT_RADIUS_CAP }
    }
}

/// Measures how far `Hc₊(W₂)` sits inside `Hc₊(W₁)`. The outer approximation
/// is built once at `max_depth`; entry `N` of the trace is the least margin
/// over inner generators of depth `≤ N`, so the trace is non-increasing.
pub fn nesting_probe(
    sys: &CoxeterSystem,
    rep: &SimplicialRep,
    w1: &Wall,
    w2: &Wall,
    opts: &ProbeOpts,
) -> Result<NestingProbeReport> {
    if w1 == w2 {
        return Err(Error::Precondition("nesting probe needs two distinct walls".into()));
    }
    let empty = |relation, nested| NestingProbeReport {
        relation,
        halfspace_nested: nested,
        outer_depth: opts.max_depth,
        outer_generators: 0,
        chart: "none",
        decay_tol: opts.decay_tol,
        trace: Vec::new(),
        worst_point: None,
    };
    if walls_cross(sys, w1, w2)? {
        return Ok(empty(Relation::Crossing, false));
    }
    let nested = halfspace_nested(sys, w1, w2)?;
    if !nested {
        return Ok(empty(Relation::Inconclusive, false));
    }
    let outer = halfcone_approx(sys, rep, w1, ConeSign::Plus, opts.max_depth, opts.cap)?;
    let inner = halfcone_approx(sys, rep, w2, ConeSign::Plus, opts.max_depth, opts.cap)?;
    let outer_gens = outer.generators();
    let centre = outer.centre(rep);
    let mut inner_pts: Vec<(QVec, usize)> = vec![(inner.polar.clone(), 0)];
    inner_pts.extend(inner.face.iter().cloned());
    let mut all: Vec<&QVec> = outer_gens.iter().collect();
    all.extend(inner_pts.iter().map(|(p, _)| p));
    all.push(&centre);
    let chart = Chart::fit(&all)?;
    let margins: Vec<Q> =
        inner_pts.par_iter().map(|(p, _)| margin(&outer_gens, &centre, p, &chart)).collect::<Result<_>>()?;
    let mut trace = Vec::new();
    let mut worst: Option<usize> = None;
    for n in 0..=opts.max_depth {
        let mut count = 0;
        for (i, (_, d)) in inner_pts.iter().enumerate() {
            if *d <= n {
                count += 1;
                if worst.map_or(true, |w| margins[i] < margins[w]) {
                    worst = Some(i);
                }
            }
        }
        let m = &margins[worst.unwrap()];
        trace.push(DepthMargin {
            depth: n,
            points: count,
            min_margin: to_f64(m),
            min_margin_exact: format_rational(m),
        });
    }
    let last = margins[worst.unwrap()].clone();
    let relation = if last.is_negative() {
        Relation::Inconclusive
    } else if opts.max_depth == 0 {
        Relation::Nested
    } else if to_f64(&last) > opts.decay_tol {
        Relation::StronglyNestedAtDepth
    } else {
        Relation::MarginDecay
    };
    Ok(NestingProbeReport {
        relation,
        halfspace_nested: true,
        outer_depth: opts.max_depth,
        outer_generators: outer_gens.len(),
        chart: chart.kind,
        decay_tol: opts.decay_tol,
        trace,
        worst_point: worst.map(|i| vec_strings(&inner_pts[i].0)),
    })
}

/// Vertices of `Σ̃* = {f = Σ λ_t α_t : λ ≥ 0, f(v_s) ≤ 0 for all s}`, the
/// fundamental piece of the dual domain `Ω_Vin*` (every such `f` is
/// nonpositive on the closed Vinberg cone), in dual-basis coordinates.
pub fn dual_sigma_vertices(rep: &SimplicialRep) -> Result<Vec<QVec>> {
    let a = rep.cartan().matrix();
    if a.det().is_zero() {
        return Err(Error::Precondition("Cartan matrix is singular".into()));
    }
    let rays = extreme_rays(&a.transpose(), DEFAULT_SUBSET_CAP).map_err(Error::Limit)?;
    if rays.is_empty() {
        return Err(Error::Precondition("dual domain is empty: the Cartan matrix has no negative direction".into()));
    }
    Ok(rays.iter().map(|r| primitive_integer(r)).collect())
}

/// The wall `W*` of the dual domain fixed by the same reflection, in
/// dual-basis coordinates: functional `v_W`, polar `α_W`.
pub fn dual_wall(rep: &SimplicialRep, w: &Wall) -> Result<WallGeometry> {
    let verts = dual_sigma_vertices(rep)?;
    let mut g = wall_geometry(rep, w)?.dual();
    let n = rep.dim();
    let mut sample = vec![Q::zero(); n];
    for v in &verts {
        sample = crate::exact::add(&sample, v);
    }
    // ⟨f, v_W⟩ on the dual fundamental piece; a dual wall through it is
    // oriented by the dual chamber of `u`
    let sample = rep.act_dual(w.prefix().letters(), &sample);
    let side = dot(&g.functional, &sample);
    if side.is_positive() {
        g.functional = scale(&g.functional, &-Q::one());
        g.polar = scale(&g.polar, &-Q::one());
    }
    // ρ*(r) = ρ(r)⁻ᵀ = ρ(r)ᵀ for an involution
    if g.reflection_matrix() != rep.evaluate(w.reflection()).transpose() {
        return Err(Error::Certification("dual reflection matrix mismatch".into()));
    }
    Ok(g)
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityReport {
    pub depth: usize,
    pub functionals: usize,
    pub points: usize,
    pub pairings: usize,
    pub violations: usize,
    pub max_pairing: f64,
    pub max_pairing_exact: String,
    pub passed: bool,
}

/// Pairs every generator functional of `Hc₋(W*)` (the polar `−α_W` and the
/// translates of `Σ̃*` vertices on `W*(s)`) against every generator point of
/// `Hc₊(W)` at the same depth; all pairings must be `≤ 0`.
pub fn halfcone_duality_check(
    sys: &CoxeterSystem,
    rep: &SimplicialRep,
    w: &Wall,
    depth: usize,
    cap: usize,
) -> Result<DualityReport> {
    let verts = dual_sigma_vertices(rep)?;
    let dw = dual_wall(rep, w)?;
    let points = halfcone_approx(sys, rep, w, ConeSign::Plus, depth, cap)?.generators();
    let s = w.ty();
    let spheres = sys.spheres_in(sys.link_mask(s), depth, cap)?;
    let mut funcs: BTreeSet<QVec> = BTreeSet::new();
    funcs.insert(primitive_integer(&scale(&dw.polar, &-Q::one())));
    for h in spheres.iter().flatten() {
        let mut c = w.prefix().letters().to_vec();
        c.extend_from_slice(h.letters());
        for f in verts.iter().filter(|f| dot(f, rep.polar(s)).is_zero()) {
            funcs.insert(primitive_integer(&rep.act_dual(&c, f)));
        }
    }
    let funcs: Vec<QVec> = funcs.into_iter().collect();
    let per: Vec<(usize, Q)> = funcs
        .par_iter()
        .map(|f| {
            let mut viol = 0;
            let mut max: Option<Q> = None;
            for p in &points {
                let x = dot(f, p);
                if x.is_positive() {
                    viol += 1;
                }
                if max.as_ref().map_or(true, |m| x > *m) {
                    max = Some(x);
                }
            }
            (viol, max.unwrap_or_else(Q::zero))
        })
        .collect();
    let violations: usize = per.iter().map(|p| p.0).sum();
    let max = per.iter().map(|p| p.1.clone()).max().unwrap_or_else(Q::zero);
    Ok(DualityReport {
        depth,
        functionals: funcs.len(),
        points: points.len(),
        pairings: funcs.len() * points.len(),
        violations,
        max_pairing: to_f64(&max),
        max_pairing_exact: format_rational(&max),
        passed: violations == 0,
    })
}

/// `Σ̃_{S'} = {Σ_{t∈S'} λ_t v_t : λ ≥ 0, α_s ≤ 0 for all s}` by its extreme rays.
#[derive(Clone, Debug)]
pub struct SigmaPolytope {
    pub subset: Vec<Gen>,
    pub vertices: Vec<QVec>,
}

pub fn sigma_polytope(rep: &SimplicialRep, subset: &[Gen], cap: usize) -> Result<SigmaPolytope> {
    let a = rep.cartan().matrix();
    if a.det().is_zero() {
        return Err(Error::Precondition("Σ polytopes need a nonsingular Cartan matrix".into()));
    }
    let mut subset = subset.to_vec();
    subset.sort_unstable();
    subset.dedup();
    let n = rep.dim();
    let cols: Vec<usize> = subset.iter().map(|&t| t as usize).collect();
    let m = a.submatrix(&(0..n).collect::<Vec<_>>(), &cols);
    let rays = extreme_rays(&m, cap).map_err(Error::Limit)?;
    let mut vertices: Vec<QVec> = rays
        .iter()
        .map(|lam| {
            let mut x = vec![Q::zero(); n];
            for (l, &t) in lam.iter().zip(&subset) {
                x = crate::exact::add(&x, &scale(rep.polar(t), l));
            }
            primitive_integer(&x)
        })
        .collect();
    vertices.sort();
    vertices.dedup();
    Ok(SigmaPolytope { subset, vertices })
}

/// Orbit of the vertices of `Σ = Σ_S` over the ball of radius `depth`.
#[derive(Clone, Debug)]
pub struct MinDomainApprox {
    pub depth: usize,
    pub sigma: SigmaPolytope,
    pub vertices: BTreeSet<QVec>,
}

pub fn min_domain_approx(
    sys: &CoxeterSystem,
    rep: &SimplicialRep,
    depth: usize,
    cap: usize,
) -> Result<MinDomainApprox> {
    if sys.rank() <= 2 || !sys.is_irreducible() {
        return Err(Error::Precondition("minimal domain needs an irreducible system of rank above 2".into()));
    }
    let all: Vec<Gen> = (0..sys.rank() as Gen).collect();
    let sigma = sigma_polytope(rep, &all, DEFAULT_SUBSET_CAP)?;
    let ball = sys.enumerate_ball(depth, cap)?;
    let orbit: Vec<Vec<QVec>> = ball
        .par_iter()
        .map(|g| sigma.vertices.iter().map(|v| primitive_integer(&rep.act(g.letters(), v))).collect())
        .collect();
    Ok(MinDomainApprox { depth, sigma, vertices: orbit.into_iter().flatten().collect() })
}

/// Finite-depth proxy for `W̄₁ ∩ W̄₂ ≠ ∅`: the two walls share a tile facet
/// vertex within the given relative depth.
pub fn closure_proxy_meets(
    sys: &CoxeterSystem,
    rep: &SimplicialRep,
    w1: &Wall,
    w2: &Wall,
    depth: usize,
    cap: usize,
) -> Result<bool> {
    let a: BTreeSet<QVec> = wall_face_vertices(sys, rep, w1, depth, cap)?.into_iter().map(|p| p.0).collect();
    Ok(wall_face_vertices(sys, rep, w2, depth, cap)?.into_iter().any(|(p, _)| a.contains(&p)))
}
