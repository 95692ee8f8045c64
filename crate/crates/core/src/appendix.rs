//! Exact certificates that half-cones of disjoint walls can fail to nest
//! strongly, for the two five- and six-generator examples: the word family
//! `(bd)^k e (ac)^k` on `fig-a1` and `t1 t3 t2 e d1 d2` on `fig-a2`.
//!
//! For walls `W`, `W'` with `Hs₊(W') ⊂ Hs₊(W)`, a witness point `p` in the
//! closure of `W'` certifies failure when
//!
//! * `p` lies in the closure of `Hc₊(W)`: `p = x₀ + t·v_W` with `t ≥ 0` and
//!   `x₀ = (p + r_W p)/2` on the wall hyperplane, `p` and `r_W p` orbit
//!   points of a closed fundamental piece;
//! * some `φ = Σ λ_t α_t` with `λ ≥ 0`, `λ ≠ 0`, `φ(v_s) ≤ 0` for all `s`
//!   and `φ(v_W) ≤ 0` vanishes at `p`. Such `φ` is nonpositive on the closed
//!   Vinberg cone, hence on `Hc₊(W)`, and negative on its interior.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{dot, format_rational, primitive_integer, scale, sub, QMat, QVec, Q};
use crate::lp::{solve, LpOutcome};
use crate::projgeom::{
    halfspace_nested, nesting_probe, sample_point, sigma_polytope, simplex_vertex, vec_strings, wall_face_vertices,
    wall_geometry, NestingProbeReport, ProbeOpts, Relation, WallGeometry, DEFAULT_SUBSET_CAP,
};
use crate::system::{builtin, CoxeterSystem, Gen, NormalForm};
use crate::vinberg::{build_rep, is_fully_nondegenerate, CartanMatrix, SimplicialRep, DEFAULT_MINOR_CAP};
use crate::walls::{gamma_of, separates, Itinerary, WallJson};

pub const A1_DEFAULT_DEPTH: usize = 6;
pub const A2_DEFAULT_DEPTH: usize = 5;

#[derive(Clone, Debug, Serialize)]
pub struct Incidence {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub name: String,
    pub points: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AppendixReport {
    pub case: &'static str,
    pub k: Option<usize>,
    pub word: String,
    pub wall: WallJson,
    pub wall_prime: WallJson,
    pub gamma: String,
    pub cartan: Vec<Vec<String>>,
    pub depth: usize,
    pub checks: Vec<Incidence>,
    pub witnesses: Vec<Witness>,
    pub supporting_functional: Option<Vec<String>>,
    pub probe: NestingProbeReport,
    pub certified: bool,
}

impl AppendixReport {
    pub fn failures(&self) -> Vec<&Incidence> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// `Err` naming the first failing incidence.
    pub fn into_result(self) -> Result<AppendixReport> {
        match self.failures().first() {
            None => Ok(self),
            Some(c) => Err(Error::Certification(format!("{}: {}", c.name, c.detail))),
        }
    }
}

/// Common fixed subspace of `ρ(s)` for `s` in `gens`, as a kernel of the
/// stacked `ρ(s) − I`; basis vectors scaled so the first nonzero entry is 1.
pub fn fixed_subspace(rep: &SimplicialRep, gens: &[Gen]) -> Vec<QVec> {
    let n = rep.dim();
    let mut rows = Vec::new();
    for &s in gens {
        let m = rep.generator(s).sub(&QMat::identity(n));
        rows.extend(m.to_rows());
    }
    if rows.is_empty() {
        return (0..n).map(|i| crate::exact::unit(n, i)).collect();
    }
    QMat::from_rows(rows)
        .kernel()
        .into_iter()
        .map(|v| {
            let f = v.iter().find(|x| !x.is_zero()).cloned().unwrap_or_else(Q::one);
            scale(&v, &f.recip())
        })
        .collect()
}

pub fn in_span(basis: &[QVec], x: &[Q]) -> bool {
    if basis.is_empty() {
        return x.iter().all(|v| v.is_zero());
    }
    let r = QMat::from_rows(basis.to_vec()).rank();
    let mut rows = basis.to_vec();
    rows.push(x.to_vec());
    QMat::from_rows(rows).rank() == r
}

/// `φ = Σ λ_t α_t`, `λ ≥ 0`, `Σ λ = 1`, with `φ(v_s) ≤ 0` for every `s`,
/// `φ(v_W) ≤ 0`, and `φ(p) = 0` on each witness point.
pub fn supporting_functional(rep: &SimplicialRep, polar: &[Q], zeros: &[QVec]) -> Option<QVec> {
    let n = rep.dim();
    let ineq: Vec<QVec> = (0..n as Gen).map(|s| rep.polar(s).clone()).chain(std::iter::once(polar.to_vec())).collect();
    let m = ineq.len();
    let width = n + m;
    let mut rows: Vec<QVec> = Vec::new();
    let mut rhs: Vec<Q> = Vec::new();
    let mut r = vec![Q::zero(); width];
    for x in r.iter_mut().take(n) {
        *x = Q::one();
    }
    rows.push(r);
    rhs.push(Q::one());
    for (j, g) in ineq.iter().enumerate() {
        let mut r: QVec = g.clone();
        r.resize(width, Q::zero());
        r[n + j] = Q::one();
        rows.push(r);
        rhs.push(Q::zero());
    }
    for z in zeros {
        let mut r = z.clone();
        r.resize(width, Q::zero());
        rows.push(r);
        rhs.push(Q::zero());
    }
    match solve(&rows, &rhs, &vec![Q::zero(); width], false) {
        LpOutcome::Optimal { x, .. } => Some(x[..n].to_vec()),
        _ => None,
    }
}

struct Builder {
    checks: Vec<Incidence>,
    witnesses: Vec<Witness>,
}

impl Builder {
    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Incidence { name: name.into(), passed, detail: detail.into() });
    }

    fn witness(&mut self, name: &str, pts: &[QVec]) {
        self.witnesses.push(Witness { name: name.into(), points: pts.iter().map(|p| vec_strings(p)).collect() });
    }
}

struct Setup<'a> {
    sys: &'a CoxeterSystem,
    rep: &'a SimplicialRep,
    word: Vec<Gen>,
    depth: usize,
}

struct Walls {
    w: WallGeometry,
    wp: WallGeometry,
    gamma: NormalForm,
}

/// Checks shared by both cases: geodesic word, efficiency of the itinerary,
/// full support of `γ(W, W')` and nesting of the half-spaces.
fn common_checks(su: &Setup, b: &mut Builder) -> Result<Walls> {
    let sys = su.sys;
    let nf = sys.normalize(&su.word);
    b.check("geodesic", nf.len() == su.word.len(), format!("|w| = {}, normal form length {}", su.word.len(), nf.len()));
    let it = Itinerary::new(sys, NormalForm::identity(), su.word.clone());
    let (w, wp) = (it.walls[0].clone(), it.walls[it.walls.len() - 1].clone());
    let gamma = gamma_of(sys, &w, &wp)?;
    b.check("efficient itinerary", gamma == nf, format!("gamma(W, W') = {}", sys.format_word(gamma.letters())));
    let supp = sys.support(&gamma);
    b.check(
        "full support",
        supp == sys.full_mask(),
        format!("support of gamma = {{{}}}", sys.format_mask(supp).join(",")),
    );
    let nested = halfspace_nested(sys, &w, &wp)?;
    b.check("half-space nesting (combinatorial)", nested, "W separates the identity from both chambers at W'");
    let w = wall_geometry(su.rep, &w)?;
    let wp = wall_geometry(su.rep, &wp)?;
    // exact sign sweep on sample points of chambers beyond W'
    let n = su.rep.dim();
    let x0 = sample_point(n);
    let beyond = sys.mul_gen(wp.wall.prefix(), wp.wall.ty()).letters().to_vec();
    let mut samples = 0;
    let mut bad = 0;
    for h in sys.enumerate_ball(3, 12)? {
        let mut g = beyond.clone();
        g.extend_from_slice(h.letters());
        let g = sys.normalize(&g);
        if !separates(sys, &wp.wall, &g) {
            continue;
        }
        samples += 1;
        let p = su.rep.act(g.letters(), &x0);
        if !dot(&w.functional, &p).is_positive() || !dot(&wp.functional, &p).is_positive() {
            bad += 1;
        }
    }
    b.check(
        "half-space nesting (sample signs)",
        bad == 0 && samples > 0,
        format!("{} chamber samples beyond W', {} with nonpositive alpha_W", samples, bad),
    );
    Ok(Walls { w, wp, gamma })
}

/// Witness incidences shared by both cases for points `pts` in the closure
/// of `W'`, each with its mirror image `r_W p` also an orbit point.
fn witness_checks(su: &Setup, walls: &Walls, pts: &[QVec], b: &mut Builder) -> Option<QVec> {
    let (w, wp) = (&walls.w, &walls.wp);
    let on_wp = pts.iter().all(|p| dot(&wp.functional, p).is_zero());
    b.check("witness on the hyperplane of W'", on_wp, "alpha_W'(p) = 0 exactly");
    let vals: Vec<Q> = pts.iter().map(|p| dot(&w.functional, p)).collect();
    b.check(
        "witness on the closed + side of W",
        vals.iter().all(|v| !v.is_negative()),
        format!("alpha_W(p) = [{}]", vals.iter().map(format_rational).collect::<Vec<_>>().join(", ")),
    );
    let half = Q::one() / Q::from_integer(2.into());
    let mids: Vec<QVec> = pts.iter().zip(&vals).map(|(p, a)| sub(p, &scale(&w.polar, &(a * &half)))).collect();
    let r = su.rep.evaluate(w.wall.reflection());
    let mid_ok = pts.iter().zip(&mids).all(|(p, m)| {
        let rp = r.apply(p);
        let avg: QVec = p.iter().zip(&rp).map(|(x, y)| (x + y) * &half).collect();
        avg == *m && dot(&w.functional, m).is_zero()
    });
    b.check(
        "witness in the closure of Hc+(W)",
        mid_ok,
        "p = x0 + (alpha_W(p)/2) v_W with x0 = (p + r_W p)/2 on the wall hyperplane",
    );
    b.witness("wall projections x0", &mids);
    let phi = supporting_functional(su.rep, &w.polar, pts);
    match &phi {
        None => b.check("supporting functional", false, "no phi in the dual cone vanishes on the witness"),
        Some(phi) => {
            let n = su.rep.dim();
            let cone_ok = (0..n as Gen).all(|s| !dot(phi, su.rep.polar(s)).is_positive());
            let polar_ok = !dot(phi, &w.polar).is_positive();
            let zero_ok = pts.iter().all(|p| dot(phi, p).is_zero());
            let nonneg = phi.iter().all(|x| !x.is_negative()) && phi.iter().any(|x| x.is_positive());
            let supp: Vec<String> = phi
                .iter()
                .enumerate()
                .filter(|(_, x)| !x.is_zero())
                .map(|(i, _)| su.sys.name(i as Gen).to_string())
                .collect();
            b.check(
                "supporting functional",
                cone_ok && polar_ok && zero_ok && nonneg,
                format!(
                    "phi = sum lambda_t alpha_t supported on {{{}}}; phi(v_s) <= 0, phi(v_W) <= 0, phi(p) = 0",
                    supp.join(",")
                ),
            );
        }
    }
    phi
}

fn probe_checks(su: &Setup, walls: &Walls, opts: &ProbeOpts, b: &mut Builder) -> Result<NestingProbeReport> {
    let probe = nesting_probe(su.sys, su.rep, &walls.w.wall, &walls.wp.wall, opts)?;
    let monotone = probe.trace.windows(2).all(|p| p[1].min_margin <= p[0].min_margin);
    let last = probe.trace.last().map(|t| t.min_margin).unwrap_or(f64::NAN);
    b.check(
        "nesting probe",
        probe.relation == Relation::MarginDecay && monotone && last < opts.decay_tol,
        format!("{:?}, margin {} at depth {}", probe.relation, last, opts.max_depth),
    );
    Ok(probe)
}

fn finish(
    case: &'static str,
    k: Option<usize>,
    su: &Setup,
    walls: Walls,
    mut b: Builder,
    phi: Option<QVec>,
    probe: NestingProbeReport,
) -> AppendixReport {
    let certified = b.checks.iter().all(|c| c.passed);
    let witnesses = std::mem::take(&mut b.witnesses);
    AppendixReport {
        case,
        k,
        word: su.sys.format_word(&su.word),
        wall: walls.w.wall.to_json(su.sys),
        wall_prime: walls.wp.wall.to_json(su.sys),
        gamma: su.sys.format_word(walls.gamma.letters()),
        cartan: su.rep.cartan().to_strings(),
        depth: su.depth,
        checks: b.checks,
        witnesses,
        supporting_functional: phi.map(|p| vec_strings(&p)),
        probe,
        certified,
    }
}

/// `(bd)^k e (ac)^k` on `fig-a1`, for any valid Cartan matrix. The witness is
/// the edge `(bd)^k · F_{a,c,e}` of the polygon `C(b,d)·F_{a,c}` in
/// `H_{a,c}`, spanned by `(bd)^k(−e_b)` and `(bd)^k(−e_d)`.
pub fn certify_a1(k: usize, cartan: &CartanMatrix, depth: usize) -> Result<AppendixReport> {
    if k == 0 {
        return Err(Error::Precondition("k must be positive".into()));
    }
    let sys = builtin("fig-a1").expect("built-in nerve");
    let rep = build_rep(cartan, &sys)?;
    let [a, b_, c, d, e] = ["a", "b", "c", "d", "e"].map(|s| sys.gen(s));
    let mut word = Vec::new();
    for _ in 0..k {
        word.extend([b_, d]);
    }
    word.push(e);
    for _ in 0..k {
        word.extend([a, c]);
    }
    let su = Setup { sys: &sys, rep: &rep, word, depth };
    let mut b = Builder { checks: Vec::new(), witnesses: Vec::new() };
    let walls = common_checks(&su, &mut b)?;
    let n = rep.dim();

    let h_ac = fixed_subspace(&rep, &[a, c]);
    b.check("H_{a,c} dimension", h_ac.len() == n - 2, format!("dim ker = {}", h_ac.len()));
    b.witness("H_{a,c} basis", &h_ac);
    b.check("polar of W in H_{a,c}", in_span(&h_ac, &walls.w.polar), "v_b fixed by a and c");
    let invariant = [b_, d].iter().all(|&s| h_ac.iter().all(|v| in_span(&h_ac, &rep.generator(s).apply(v))));
    b.check("C(b,d) preserves H_{a,c}", invariant, "rho(b), rho(d) map H_{a,c} into itself");
    let face: Vec<QVec> = [b_, d].iter().map(|&s| simplex_vertex(n, s as usize)).collect();
    let face_ok = face.iter().all(|v| in_span(&h_ac, v) && [a, c, e].iter().all(|&s| rep.act(&[s], v) == *v));
    b.check("F_{a,c,e} in H_{a,c}", face_ok, "vertices -e_b, -e_d fixed by a, c, e");

    let bd: Vec<Gen> = su.word[..2 * k].to_vec();
    let pts: Vec<QVec> = face.iter().map(|v| rep.act(&bd, v)).collect();
    b.witness("witness edge (bd)^k F_{a,c,e}", &pts);
    b.check("witness in H_{a,c}", pts.iter().all(|p| in_span(&h_ac, p)), "C(b,d) maps F_{a,c} into the polygon");
    let faces = wall_face_vertices(&sys, &rep, &walls.wp.wall, 0, 12)?;
    let in_face = pts.iter().all(|p| faces.iter().any(|(f, _)| *f == primitive_integer(p)));
    b.check("witness is a facet vertex of W'", in_face, "tile vertices at relative depth 0 of W'");
    let phi = witness_checks(&su, &walls, &pts, &mut b);
    let probe = probe_checks(&su, &walls, &ProbeOpts { max_depth: depth, ..Default::default() }, &mut b)?;
    Ok(finish("A1", Some(k), &su, walls, b, phi, probe))
}

/// `t1 t3 t2 e d1 d2` on `fig-a2`, for a fully nondegenerate Cartan matrix.
/// The witness is the segment `t1 t3 t2 · Σ_{t1,t3}`, valid for every
/// reflection domain since `Σ` lies in the minimal one.
pub fn certify_a2(cartan: &CartanMatrix, depth: usize) -> Result<AppendixReport> {
    let sys = builtin("fig-a2").expect("built-in nerve");
    if !is_fully_nondegenerate(cartan, DEFAULT_MINOR_CAP)? {
        return Err(Error::Precondition("A2 certification needs a fully nondegenerate Cartan matrix".into()));
    }
    let rep = build_rep(cartan, &sys)?;
    let [d1, d2, t1, t2, t3, e] = ["d1", "d2", "t1", "t2", "t3", "e"].map(|s| sys.gen(s));
    let su = Setup { sys: &sys, rep: &rep, word: vec![t1, t3, t2, e, d1, d2], depth };
    let mut b = Builder { checks: Vec::new(), witnesses: Vec::new() };
    let walls = common_checks(&su, &mut b)?;
    let n = rep.dim();

    let h_d = fixed_subspace(&rep, &[d1, d2]);
    let h_de = fixed_subspace(&rep, &[d1, d2, e]);
    b.check("H_D dimension", h_d.len() == n - 2, format!("dim = {}", h_d.len()));
    b.check("H_{D,E} dimension", h_de.len() == n - 3, format!("dim = {}", h_de.len()));
    b.witness("H_D basis", &h_d);
    b.witness("H_{D,E} basis", &h_de);
    let f_d: Vec<QVec> = [t1, t2, t3, e].iter().map(|&s| simplex_vertex(n, s as usize)).collect();
    b.check("F_D in H_D", f_d.iter().all(|v| in_span(&h_d, v)), "tetrahedron with vertices -e_t1, -e_t2, -e_t3, -e_e");
    b.check("V_T in H_D", [t1, t2, t3].iter().all(|&t| in_span(&h_d, rep.polar(t))), "polars of T fixed by D");
    let sig_t = sigma_polytope(&rep, &[t1, t2, t3], DEFAULT_SUBSET_CAP)?;
    b.check("Sigma_T is a hexagon", sig_t.vertices.len() == 6, format!("{} vertices", sig_t.vertices.len()));
    b.witness("Sigma_T vertices", &sig_t.vertices);
    let in_fd = sig_t.vertices.iter().all(|v| in_span(&h_d, v) && v.iter().all(|x| !x.is_positive()));
    b.check("Sigma_T in F_D", in_fd, "vertices in H_D and in the closed fundamental cone");
    let edge = sigma_polytope(&rep, &[t1, t3], DEFAULT_SUBSET_CAP)?;
    let edge_ok =
        edge.vertices.len() == 2 && edge.vertices.iter().all(|v| sig_t.vertices.contains(v) && in_span(&h_de, v));
    b.check("Sigma_{t1,t3} is an edge of Sigma_T in H_{D,E}", edge_ok, format!("{} vertices", edge.vertices.len()));
    let g = [t1, t3, t2];
    let pts: Vec<QVec> = edge.vertices.iter().map(|v| rep.act(&g, v)).collect();
    b.witness("witness segment t1 t3 t2 Sigma_{t1,t3}", &pts);
    let uprime = walls.wp.wall.prefix().letters().to_vec();
    let fixed = edge.vertices.iter().all(|v| rep.act(&[e, d1], v) == *v)
        && pts.iter().zip(&edge.vertices).all(|(p, v)| rep.act(&uprime, v) == *p);
    b.check("witness in t1t3t2ed1 H_{d2}", fixed, "e and d1 fix Sigma_{t1,t3}, so the witness lies on W'");
    let phi = witness_checks(&su, &walls, &pts, &mut b);
    // the tile vertices (t1t3t2)(−e_t) of the Vinberg wall W' against the same φ
    if let Some(phi) = &phi {
        let tiles: Vec<QVec> = [t1, t2, t3].iter().map(|&t| rep.act(&g, &simplex_vertex(n, t as usize))).collect();
        let zero = tiles.iter().all(|p| dot(phi, p).is_zero());
        b.check("Vinberg tile witness", zero, "phi vanishes on (t1t3t2)(-e_t), t in T");
        b.witness("Vinberg tile witness (t1t3t2) F_{D,E}", &tiles);
    }
    let probe = probe_checks(&su, &walls, &ProbeOpts { max_depth: depth, ..Default::default() }, &mut b)?;
    Ok(finish("A2", None, &su, walls, b, phi, probe))
}
