//! Singular value gaps: μ-vectors, stable and unstable subspaces, the
//! additivity and transversality estimates, gap traces along geodesics,
//! `(A, B)`-gap fits, uniform regularity and subspace convergence.
//!
//! Exact matrices are converted to floating point once, balanced by a power
//! of two. Partial sums `μ₁ + … + μ_k` come from the top singular value of
//! the exact exterior power `Λ^k g`, which stays accurate when the smaller
//! singular values underflow relative to the largest.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{to_f64, QMat, QVec, Q};
use crate::hilbert::{ball_image_diameter, hilbert_diameter};
use crate::intmat::{IntMat, IntRep};
use crate::lp::{max_ray_scale, RayScale};
use crate::projgeom::{halfcone_approx, ConeSign};
use crate::system::{CoxeterSystem, Gen, NormalForm, DEFAULT_RADIUS_CAP};
use crate::vinberg::SimplicialRep;
use crate::walls::Itinerary;

/// Below this `μ_{1,2}` the subspaces `E^±` are undefined.
pub const GAP_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_B_CAP: f64 = 10.0;

#[derive(Clone, Debug, Serialize)]
pub struct SingularReport {
    /// `log σ_i`, descending.
    pub mu: Vec<f64>,
    /// `μ_i − μ_{i+1}`.
    pub gaps: Vec<f64>,
    /// Unit vector spanning `E^+_1`, the longest axis of `g·B`.
    pub unstable: Option<Vec<f64>>,
    /// Unit normal of the hyperplane `E^-_{d−1} = E^+_{d−1}(g⁻¹)`.
    pub stable_normal: Option<Vec<f64>>,
    /// Unit normal of `E^+_{d−1}`, the span of the `d − 1` longest axes of
    /// `g·B`; defined when `μ_{d−1} − μ_d` clears the threshold.
    pub dominant_normal: Option<Vec<f64>>,
}

impl SingularReport {
    pub fn mu12(&self) -> f64 {
        self.gaps.first().copied().unwrap_or(0.0)
    }

    pub fn mu1d(&self) -> f64 {
        self.mu.first().copied().unwrap_or(0.0) - self.mu.last().copied().unwrap_or(0.0)
    }

    pub fn subspaces_defined(&self) -> bool {
        self.unstable.is_some()
    }
}

/// Fixes the sign of a projective unit vector: largest entry positive.
fn canonical_sign(v: DVector<f64>) -> Vec<f64> {
    let mut best = 0;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    let s = if v[best] < 0.0 { -1.0 } else { 1.0 };
    v.iter().map(|x| x * s).collect()
}

/// Top singular pair of `f`, polished by power steps on `f fᵀ` and `fᵀ f`:
/// the plain SVD loses accuracy in the vectors when `σ₂/σ₁` is tiny.
fn top_vectors(f: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let scale = f.amax();
    let f = if scale > 0.0 { f / scale } else { f.clone() };
    let svd = f.clone().svd(true, true);
    let mut u = svd.u.unwrap().column(0).into_owned();
    let mut v = svd.v_t.unwrap().row(0).transpose();
    let ft = f.transpose();
    for _ in 0..8 {
        let nu = &f * (&ft * &u);
        let nv = &ft * (&f * &v);
        let (a, b) = (nu.norm(), nv.norm());
        if a == 0.0 || b == 0.0 {
            break;
        }
        u = nu / a;
        v = nv / b;
    }
    (u, v)
}

/// `f` is the matrix, `cof` a multiple of its cofactor matrix,
/// whose top left singular vector is the bottom one of `f`.
fn report_from(mu: Vec<f64>, f: &DMatrix<f64>, cof: &DMatrix<f64>) -> SingularReport {
    let gaps: Vec<f64> = mu.windows(2).map(|w| w[0] - w[1]).collect();
    let defined = gaps.first().is_some_and(|g| *g > GAP_THRESHOLD);
    let low = gaps.last().is_some_and(|g| *g > GAP_THRESHOLD);
    let (u1, v1) = top_vectors(f);
    SingularReport {
        mu,
        unstable: defined.then(|| canonical_sign(u1)),
        stable_normal: defined.then(|| canonical_sign(v1)),
        dominant_normal: low.then(|| canonical_sign(top_vectors(cof).0)),
        gaps,
    }
}

/// SVD-based report for a floating point matrix.
pub fn singular_report(g: &DMatrix<f64>) -> Result<SingularReport> {
    if !g.is_square() || g.nrows() == 0 {
        return Err(Error::Precondition("singular report needs a nonempty square matrix".into()));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let svd = g.clone().svd(false, false);
    let s = &svd.singular_values;
    let top = s[0];
    if top == 0.0 || s[s.len() - 1] <= top * 1e-14 {
        return Err(Error::Numeric("matrix is numerically singular".into()));
    }
    let mu: Vec<f64> = s.iter().map(|x| x.ln()).collect();
    let inv = g.clone().try_inverse().ok_or_else(|| Error::Numeric("matrix is numerically singular".into()))?;
    Ok(report_from(mu, g, &inv.transpose()))
}

/// `Λ^k g` in the basis of sorted `k`-subsets, from exact minors.
pub fn exterior_power(g: &QMat, k: usize) -> QMat {
    let l = g.entries().iter().fold(num_bigint::BigInt::from(1), |l, x| num_integer::Integer::lcm(&l, x.denom()));
    let p = IntMat::from_qmat(g).0.exterior_power(k).to_qmat();
    let scale = Q::from_integer(l.pow(k as u32));
    let rows = p.to_rows().into_iter().map(|r| r.into_iter().map(|x| x / &scale).collect()).collect();
    QMat::from_rows(rows)
}

/// `log σ₁` of an exact matrix.
pub fn log_top_singular(g: &QMat) -> Result<f64> {
    let (m, ln_l) = IntMat::from_qmat(g);
    Ok(m.log_top_singular()? - ln_l)
}

/// `μ_{1,2}` of an exact matrix, as `2 log σ₁(g) − log σ₁(Λ² g)`.
pub fn mu12_exact(g: &QMat) -> Result<f64> {
    IntMat::from_qmat(g).0.mu12()
}

/// Report for `M e^{−c}` with `M` integral.
fn report_int(m: &IntMat, c: f64) -> Result<SingularReport> {
    let partial = m.log_partial_sums()?;
    let mu: Vec<f64> = partial.windows(2).map(|w| w[1] - w[0] - c).collect();
    Ok(report_from(mu, &m.to_scaled_f64().0, &m.cofactor().to_scaled_f64().0))
}

/// Full report for an exact invertible matrix.
pub fn singular_report_exact(g: &QMat) -> Result<SingularReport> {
    if !g.is_square() || g.rows() == 0 {
        return Err(Error::Precondition("singular report needs a nonempty square matrix".into()));
    }
    let (m, ln_l) = IntMat::from_qmat(g);
    report_int(&m, ln_l)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct AdditivityReport {
    pub deviation: f64,
    pub bound: f64,
    pub violated: bool,
}

/// `‖μ(h₁ g h₂) − μ(g)‖ ≤ ‖μ(h₁)‖ + ‖μ(h₂)‖` in the Euclidean norm.
pub fn check_additivity(g: &DMatrix<f64>, h1: &DMatrix<f64>, h2: &DMatrix<f64>, tol: f64) -> Result<AdditivityReport> {
    let mg = singular_report(g)?.mu;
    let m = singular_report(&(h1 * g * h2))?.mu;
    let diff: Vec<f64> = m.iter().zip(&mg).map(|(a, b)| a - b).collect();
    let deviation = norm(&diff);
    let bound = norm(&singular_report(h1)?.mu) + norm(&singular_report(h2)?.mu);
    Ok(AdditivityReport { deviation, bound, violated: deviation > bound + tol })
}

#[derive(Clone, Debug, Serialize)]
pub struct TransversalityReport {
    pub theta: f64,
    pub lhs: f64,
    pub rhs: Option<f64>,
    /// `θ = 0`: the inequality says nothing.
    pub vacuous: bool,
    pub violated: bool,
}

/// `μ_{1,2}(gh) ≥ μ_{1,2}(g) + μ_{1,2}(h) + 2 log sin θ` with `θ` the angle
/// between `E^-_{d−1}(g)` and `E^+_1(h)`.
pub fn check_transversality(g: &DMatrix<f64>, h: &DMatrix<f64>, tol: f64) -> Result<TransversalityReport> {
    let rg = singular_report(g)?;
    let rh = singular_report(h)?;
    let (Some(normal), Some(line)) = (&rg.stable_normal, &rh.unstable) else {
        return Err(Error::Precondition("subspaces undefined: gap below threshold".into()));
    };
    let c: f64 = normal.iter().zip(line).map(|(a, b)| a * b).sum::<f64>().abs().min(1.0);
    // angle between a line and a hyperplane: sin θ = |⟨n, u⟩|
    let sin = c;
    let theta = sin.asin();
    let lhs = singular_report(&(g * h))?.mu12();
    if sin == 0.0 {
        return Ok(TransversalityReport { theta, lhs, rhs: None, vacuous: true, violated: false });
    }
    let rhs = rg.mu12() + rh.mu12() + 2.0 * sin.ln();
    Ok(TransversalityReport { theta, lhs, rhs: Some(rhs), vacuous: false, violated: lhs < rhs - tol })
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub n: usize,
    pub length: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub gap12: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapTrace {
    pub word: String,
    pub rows: Vec<TraceRow>,
    /// `E^+_1(ρ(γ_n))`, when defined.
    #[serde(skip)]
    pub unstable: Vec<Option<Vec<f64>>>,
    #[serde(skip)]
    pub stable_normal: Vec<Option<Vec<f64>>>,
    /// Normal of `E^+_{d−1}(ρ(γ_n))`, when defined.
    #[serde(skip)]
    pub dominant_normal: Vec<Option<Vec<f64>>>,
    /// `M[n][m] = μ_{1,2}(ρ(γ_n⁻¹ γ_m))`, square with zero diagonal.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairwise: Option<Vec<Vec<f64>>>,
    /// `μ_{1,d}(ρ(γ_n⁻¹ γ_m))`, symmetric.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairwise_mu1d: Option<Vec<Vec<f64>>>,
}

impl GapTrace {
    /// `(n, μ_{1,2})` samples: every row, and with pairwise data
    /// every subword `γ_n⁻¹γ_m` and its inverse.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.n as f64, r.gap12)).collect();
        if let Some(p) = &self.pairwise {
            for (i, row) in p.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    if i > 0 && i != j {
                        out.push((i.abs_diff(j) as f64, *v));
                    }
                }
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,length,mu1,mu2,gap12\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n,
                r.length,
                crate::report::fmt_f64(r.mu1),
                crate::report::fmt_f64(r.mu2),
                crate::report::fmt_f64(r.gap12)
            ));
        }
        s
    }

    pub fn pairwise_csv(&self) -> Option<String> {
        self.pairwise.as_ref().map(|p| crate::report::matrix_csv(p))
    }
}

fn row_of(n: usize, length: usize, rep: &SingularReport) -> TraceRow {
    let mu1 = rep.mu[0];
    let mu2 = rep.mu.get(1).copied().unwrap_or(mu1);
    TraceRow { n, length, mu1, mu2, gap12: rep.mu12() }
}

/// Prefix trace along a geodesic word, with the optional pairwise matrices.
pub fn gap_trace(sys: &CoxeterSystem, rep: &SimplicialRep, word: &[Gen], pairwise: bool) -> Result<GapTrace> {
    sys.check_word(word)?;
    if sys.reduce(word).len() != word.len() {
        return Err(Error::Word("gap traces need a geodesic word".into()));
    }
    let ir = IntRep::new(rep);
    let d = rep.dim();
    let mut prefixes = vec![IntMat::identity(d)];
    for &s in word {
        let mut m = prefixes.last().unwrap().clone();
        ir.right_mul(&mut m, s);
        prefixes.push(m);
    }
    let reports: Vec<SingularReport> =
        prefixes.par_iter().enumerate().map(|(k, m)| report_int(m, k as f64 * ir.ln_d)).collect::<Result<_>>()?;
    let rows = reports.iter().enumerate().map(|(n, r)| row_of(n, n, r)).collect();
    let (pw, pw1d) = if pairwise {
        let (a, b) = pairwise_with(&ir, d, word)?;
        (Some(a), Some(b))
    } else {
        (None, None)
    };
    Ok(GapTrace {
        word: sys.format_word(word),
        rows,
        unstable: reports.iter().map(|r| r.unstable.clone()).collect(),
        stable_normal: reports.iter().map(|r| r.stable_normal.clone()).collect(),
        dominant_normal: reports.iter().map(|r| r.dominant_normal.clone()).collect(),
        pairwise: pw,
        pairwise_mu1d: pw1d,
    })
}

type Matrix = Vec<Vec<f64>>;

/// Square matrices of `μ_{1,2}` and `μ_{1,d}` over all subwords. The entry
/// `(n, m)` with `n < m` uses `g = s_{n+1} ⋯ s_m`; the entry `(m, n)` uses
/// `g⁻¹ = s_m ⋯ s_{n+1}`, built alongside.
pub fn pairwise_matrices(rep: &SimplicialRep, word: &[Gen]) -> Result<(Matrix, Matrix)> {
    pairwise_with(&IntRep::new(rep), rep.dim(), word)
}

fn pairwise_with(ir: &IntRep, d: usize, word: &[Gen]) -> Result<(Matrix, Matrix)> {
    let l = word.len();
    type Row = Vec<(usize, f64, f64, f64)>;
    let rows: Vec<Row> = (0..=l)
        .into_par_iter()
        .map(|n| {
            let mut out = Vec::new();
            let mut g = IntMat::identity(d);
            let mut ginv = IntMat::identity(d);
            for m in n + 1..=l {
                let s = word[m - 1];
                ir.right_mul(&mut g, s);
                ir.left_mul(&mut ginv, s);
                let spread = g.log_top_singular()? + ginv.log_top_singular()? - 2.0 * (m - n) as f64 * ir.ln_d;
                out.push((m, g.mu12()?, ginv.mu12()?, spread));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut a = vec![vec![0.0; l + 1]; l + 1];
    let mut b = vec![vec![0.0; l + 1]; l + 1];
    for (n, row) in rows.into_iter().enumerate() {
        for (m, fwd, bwd, spread) in row {
            a[n][m] = fwd;
            a[m][n] = bwd;
            b[n][m] = spread;
            b[m][n] = spread;
        }
    }
    Ok((a, b))
}

fn trace_of(label: String, mats: &[IntMat], scale: f64, step_len: usize) -> Result<GapTrace> {
    let reports: Vec<SingularReport> =
        mats.par_iter().enumerate().map(|(n, p)| report_int(p, n as f64 * scale)).collect::<Result<_>>()?;
    Ok(GapTrace {
        word: label,
        rows: reports.iter().enumerate().map(|(n, r)| row_of(n, n * step_len, r)).collect(),
        unstable: reports.iter().map(|r| r.unstable.clone()).collect(),
        stable_normal: reports.iter().map(|r| r.stable_normal.clone()).collect(),
        dominant_normal: reports.iter().map(|r| r.dominant_normal.clone()).collect(),
        pairwise: None,
        pairwise_mu1d: None,
    })
}

/// Trace of `(base)^n` for `n = 0..=n_max`, with the repetition count as
/// abscissa `n` and `length = n·|base|`.
pub fn power_trace(sys: &CoxeterSystem, rep: &SimplicialRep, base: &[Gen], n_max: usize) -> Result<GapTrace> {
    sys.check_word(base)?;
    let ir = IntRep::new(rep);
    let mut m = IntMat::identity(rep.dim());
    let mut powers = vec![m.clone()];
    for _ in 0..n_max {
        for &s in base {
            ir.right_mul(&mut m, s);
        }
        powers.push(m.clone());
    }
    trace_of(format!("({})^n", sys.format_word(base)), &powers, base.len() as f64 * ir.ln_d, base.len())
}

/// Trace of `g^n` for an arbitrary exact invertible matrix; `length = n`.
pub fn matrix_power_trace(g: &QMat, n_max: usize) -> Result<GapTrace> {
    if !g.is_square() || num_traits::Zero::is_zero(&g.det()) {
        return Err(Error::Precondition("powers need an invertible square matrix".into()));
    }
    let (step, ln_l) = IntMat::from_qmat(g);
    let mut powers = vec![IntMat::identity(g.rows())];
    for _ in 0..n_max {
        let next = powers.last().unwrap().mul(&step);
        powers.push(next);
    }
    trace_of("g^n".into(), &powers, ln_l, 1)
}

/// `count` random geodesics of length `len`; geodesic `i` uses the stream
/// seeded by `(seed, i)`, so the list does not depend on thread count.
pub fn random_geodesics(sys: &CoxeterSystem, count: usize, len: usize, seed: u64) -> Vec<Vec<Gen>> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            sys.random_geodesic(len, &mut rng)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct GapFit {
    /// Reported slope: the least-squares slope capped by the largest
    /// feasible one, never negative.
    pub a: f64,
    /// Least offset making `μ_{1,2} ≥ A·n − B` hold on every sample.
    pub b: f64,
    pub a_least_squares: f64,
    /// Largest slope feasible with offset at most `b_cap`.
    pub a_max_feasible: f64,
    pub b_cap: f64,
    pub samples: usize,
    pub min_slack: f64,
    pub residual_rms: f64,
}

pub fn fit_samples(samples: &[(f64, f64)], b_cap: f64) -> Result<GapFit> {
    if samples.is_empty() {
        return Err(Error::Precondition("no samples to fit".into()));
    }
    if !(b_cap >= 0.0) {
        return Err(Error::Precondition("B cap must be nonnegative".into()));
    }
    let k = samples.len() as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / k;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / k;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mx) * (s.0 - mx)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
    let a_ls = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - a_ls * mx;
    let residual_rms = (samples.iter().map(|s| (s.1 - a_ls * s.0 - intercept).powi(2)).sum::<f64>() / k).sqrt();
    // y ≥ A x − B_cap for all samples; samples at x = 0 constrain B only
    let base_ok = samples.iter().filter(|s| s.0 <= 0.0).all(|s| s.1 + b_cap >= 0.0);
    let a_mf = if base_ok {
        samples.iter().filter(|s| s.0 > 0.0).map(|s| (s.1 + b_cap) / s.0).fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    let a_mf = if a_mf.is_finite() { a_mf.max(0.0) } else { a_ls.max(0.0) };
    let a = a_ls.min(a_mf).max(0.0);
    let b = samples.iter().map(|s| a * s.0 - s.1).fold(0.0, f64::max);
    let min_slack = samples.iter().map(|s| s.1 - (a * s.0 - b)).fold(f64::INFINITY, f64::min);
    debug_assert!(min_slack >= -1e-9);
    Ok(GapFit {
        a,
        b,
        a_least_squares: a_ls,
        a_max_feasible: a_mf,
        b_cap,
        samples: samples.len(),
        min_slack,
        residual_rms,
    })
}

pub fn fit_gaps(traces: &[GapTrace], b_cap: f64) -> Result<GapFit> {
    let samples: Vec<(f64, f64)> = traces.iter().flat_map(|t| t.samples()).collect();
    fit_samples(&samples, b_cap)
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub a: f64,
    pub b: f64,
    pub pairs: usize,
    pub violations: usize,
    pub worst_slack: f64,
    pub passed: bool,
}

/// `μ_{1,2}(γ_n⁻¹γ_m) ≥ A μ_{1,d}(γ_n⁻¹γ_m) − B` over all pairs.
pub fn uniform_regularity_check(traces: &[GapTrace], a: f64, b: f64, tol: f64) -> Result<RegularityReport> {
    let mut pairs = 0;
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for t in traces {
        let (Some(p), Some(q)) = (&t.pairwise, &t.pairwise_mu1d) else {
            return Err(Error::Precondition("uniform regularity needs pairwise trace data".into()));
        };
        for (rp, rq) in p.iter().zip(q) {
            for (x, y) in rp.iter().zip(rq) {
                let slack = x - (a * y - b);
                pairs += 1;
                worst = worst.min(slack);
                if slack < -tol {
                    violations += 1;
                }
            }
        }
    }
    Ok(RegularityReport { a, b, pairs, violations, worst_slack: worst, passed: violations == 0 })
}

/// `max_s μ_{1,d}(ρ(s))`, so that `μ_{1,d}(ρ(γ)) ≤ K|γ|` by subadditivity.
pub fn generator_spread(sys: &CoxeterSystem, rep: &SimplicialRep) -> Result<f64> {
    let mut k: f64 = 0.0;
    for s in 0..sys.rank() as Gen {
        // ρ(s) is an involution, so σ₁(ρ(s)⁻¹) = σ₁(ρ(s))
        k = k.max(2.0 * log_top_singular(rep.generator(s))?);
    }
    Ok(k)
}

#[derive(Clone, Debug, Serialize)]
pub struct GapScan {
    pub geodesics: usize,
    pub length: usize,
    pub geodesic_seed: u64,
    pub fit: GapFit,
    /// `K = max_s μ_{1,d}(ρ(s))`.
    pub spread: f64,
    /// Checked with slope `A/K`, since `μ_{1,d} ≤ K n`.
    pub regularity: RegularityReport,
}

/// Fits gaps over `count` random geodesics with full pairwise data, then
/// checks uniform regularity with the fitted constants.
pub fn gap_scan(
    sys: &CoxeterSystem,
    rep: &SimplicialRep,
    count: usize,
    len: usize,
    geodesic_seed: u64,
    b_cap: f64,
    tol: f64,
) -> Result<GapScan> {
    let words = random_geodesics(sys, count, len, geodesic_seed);
    let traces = words.par_iter().map(|w| gap_trace(sys, rep, w, true)).collect::<Result<Vec<_>>>()?;
    let fit = fit_gaps(&traces, b_cap)?;
    let spread = generator_spread(sys, rep)?;
    let a_reg = if spread > 0.0 { fit.a / spread } else { 0.0 };
    let regularity = uniform_regularity_check(&traces, a_reg, fit.b, tol)?;
    Ok(GapScan { geodesics: count, length: len, geodesic_seed, fit, spread, regularity })
}

/// Angle metric on `ℙ(ℝ^d)`, via `atan2` so small angles keep precision.
pub fn projective_distance(u: &[f64], v: &[f64]) -> f64 {
    let (nu, nv) = (norm(u), norm(v));
    let c: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / (nu * nv);
    let perp: Vec<f64> = u.iter().zip(v).map(|(a, b)| a / nu - c * b / nv).collect();
    norm(&perp).atan2(c.abs())
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    /// First index with `E^+_1` defined.
    pub start: usize,
    /// `d(E^+_1(γ_n), E^+_1(γ_{n+1}))` for `n ≥ start`.
    pub unstable_steps: Vec<f64>,
    /// Dual metric between consecutive `E^+_{d−1}(γ_n)`: the angle between
    /// their normals. `None` where a hyperplane is undefined.
    pub hyperplane_steps: Vec<Option<f64>>,
    /// Every unstable step is exactly zero.
    pub constant: bool,
    /// Slope `r` of the fit `log d_n ≈ c − r n`; infinite when constant.
    pub decay_rate: Option<f64>,
    /// Exponent `p` of the competing fit `log d_n ≈ c − p log n`.
    pub power_exponent: Option<f64>,
    pub exponential_rms: Option<f64>,
    pub power_rms: Option<f64>,
    pub final_step: f64,
    pub target: f64,
    /// Constant, or: positive rate, exponential fit beats the power law,
    /// and the last step is below `target`.
    pub certified_decay: bool,
}

/// Least squares line through `pts`: `(slope, rms residual)`.
fn line_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let rms = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / k).sqrt();
    Some((slope, rms))
}

pub fn convergence_check(trace: &GapTrace, target: f64) -> Result<ConvergenceReport> {
    let start = trace
        .unstable
        .iter()
        .position(|u| u.is_some())
        .ok_or_else(|| Error::Precondition("subspaces undefined along the whole trace".into()))?;
    let mut unstable_steps = Vec::new();
    let mut hyperplane_steps = Vec::new();
    for n in start..trace.unstable.len().saturating_sub(1) {
        let (Some(a), Some(b)) = (&trace.unstable[n], &trace.unstable[n + 1]) else {
            return Err(Error::Precondition(format!("subspace undefined at n = {}", n + 1)));
        };
        unstable_steps.push(projective_distance(a, b));
        hyperplane_steps.push(match (&trace.dominant_normal[n], &trace.dominant_normal[n + 1]) {
            (Some(a), Some(b)) => Some(projective_distance(a, b)),
            _ => None,
        });
    }
    let constant = unstable_steps.iter().all(|d| *d == 0.0);
    let logs: Vec<(usize, f64)> =
        unstable_steps.iter().enumerate().filter(|(_, d)| **d > 0.0).map(|(i, d)| (start + i, d.ln())).collect();
    let exp_pts: Vec<(f64, f64)> = logs.iter().map(|&(n, y)| (n as f64, y)).collect();
    let pow_pts: Vec<(f64, f64)> = logs.iter().map(|&(n, y)| ((n as f64).max(1.0).ln(), y)).collect();
    let exp = line_fit(&exp_pts);
    let pow = line_fit(&pow_pts);
    let final_step = unstable_steps.last().copied().unwrap_or(0.0);
    let decay_rate = if constant { Some(f64::INFINITY) } else { exp.map(|f| -f.0) };
    let certified_decay = constant
        || match (exp, pow) {
            (Some(e), Some(p)) => -e.0 > 0.0 && e.1 < p.1 && final_step < target,
            _ => false,
        };
    Ok(ConvergenceReport {
        start,
        unstable_steps,
        hyperplane_steps,
        constant,
        decay_rate,
        power_exponent: pow.map(|f| -f.0),
        exponential_rms: exp.map(|f| f.1),
        power_rms: pow.map(|f| f.1),
        final_step,
        target,
        certified_decay,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HilbertGapReport {
    pub mu12: f64,
    pub diameter: f64,
    /// `μ_{1,2}(g) + log diam`.
    pub slack: f64,
    /// Least `D ≥ 0` with `μ_{1,2}(g) ≥ −log diam − D`.
    pub d_needed: f64,
}

/// Containment `g·cone(gens1) ⊂ int cone(gens2)`, checked along rays from a
/// centre of `cone(gens2)`.
pub fn strictly_inside(gens2: &[QVec], points: &[QVec]) -> bool {
    let n = gens2[0].len();
    let mut c = vec![Q::from_integer(0.into()); n];
    for g in gens2 {
        c = crate::exact::add(&c, g);
    }
    points.iter().all(|p| {
        let d = crate::exact::sub(p, &c);
        match max_ray_scale(gens2, &c, &d) {
            RayScale::Infinite => true,
            RayScale::Finite(t) => t > Q::from_integer(1.into()),
            RayScale::Outside => false,
        }
    })
}

/// `μ_{1,2}(g) ≥ −log diam_{Ω₂}(gΩ₁) − D` for polyhedral `Ω₁, Ω₂`; reports
/// the least `D` that makes it hold.
pub fn hilbert_gap_bound_check(gens1: &[QVec], gens2: &[QVec], g: &QMat) -> Result<HilbertGapReport> {
    let image: Vec<QVec> = gens1.iter().map(|p| g.apply(p)).collect();
    if !strictly_inside(gens2, &image) {
        return Err(Error::Precondition("g·closure(Ω₁) is not contained in Ω₂".into()));
    }
    let diameter = hilbert_diameter(gens2, &image)?;
    let mu12 = mu12_exact(g)?;
    let slack = mu12 + diameter.ln();
    Ok(HilbertGapReport { mu12, diameter, slack, d_needed: (-slack).max(0.0) })
}

#[derive(Clone, Debug, Serialize)]
pub struct BallGapReport {
    pub mu12: f64,
    pub diameter: f64,
    pub closed_form: f64,
    pub error: f64,
}

/// Ball model: `g = diag(H, λ)` maps the unit ball of the chart `x_d = 1`
/// to an ellipsoid with semi-major axis `σ₁(H)/|λ| = e^{−μ_{1,2}(g)}`.
pub fn ball_gap_check(h: &DMatrix<f64>, lambda: f64) -> Result<BallGapReport> {
    let d = h.nrows() + 1;
    let mut g = DMatrix::zeros(d, d);
    g.view_mut((0, 0), (d - 1, d - 1)).copy_from(h);
    g[(d - 1, d - 1)] = lambda;
    let mu12 = singular_report(&g)?.mu12();
    let svd = h.clone().svd(true, false);
    let axis = svd.singular_values[0] / lambda.abs();
    if axis >= 1.0 - 1e-12 {
        return Err(Error::Precondition("g·B is not strictly inside B".into()));
    }
    let diameter = ball_image_diameter(axis)?;
    let r = (-mu12).exp();
    let closed_form = ((1.0 + r) / (1.0 - r)).ln();
    Ok(BallGapReport { mu12, diameter, closed_form, error: (diameter - closed_form).abs() })
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LocalityReport {
    Undefined {
        mu12: f64,
    },
    Measured {
        mu12: f64,
        /// Angle from `E^+_1` to the depth-approximated `Hc₊(W_k)`.
        halfcone_distance: f64,
        /// Angles to `ℙ(V_T)` and `ℙ(V_T^⊥)` when the support `T` is proper.
        vt_distance: Option<f64>,
        vt_perp_distance: Option<f64>,
        /// Least angle between `V_T` and `V_T^⊥`.
        transversality: Option<f64>,
        /// `E^+_1` lies within `ε` of the half-cone.
        within: bool,
        /// `E^+_1` lies within `ε` of `ℙ(V_T)`.
        vt_within: Option<bool>,
    },
}

/// Nonnegative least squares by projected coordinate descent on the normal
/// equations; small problems only.
fn cone_residual(gens: &[Vec<f64>], x: &[f64]) -> f64 {
    let k = gens.len();
    if k == 0 {
        return norm(x);
    }
    let gram: Vec<Vec<f64>> =
        gens.iter().map(|a| gens.iter().map(|b| a.iter().zip(b).map(|(p, q)| p * q).sum()).collect()).collect();
    let rhs: Vec<f64> = gens.iter().map(|a| a.iter().zip(x).map(|(p, q)| p * q).sum()).collect();
    let mut lam = vec![0.0; k];
    for _ in 0..5000 {
        let mut change: f64 = 0.0;
        for i in 0..k {
            if gram[i][i] <= 0.0 {
                continue;
            }
            let r: f64 = rhs[i] - (0..k).map(|j| gram[i][j] * lam[j]).sum::<f64>();
            let new = (lam[i] + r / gram[i][i]).max(0.0);
            change = change.max((new - lam[i]).abs());
            lam[i] = new;
        }
        if change < 1e-15 {
            break;
        }
    }
    let mut res = x.to_vec();
    for (l, g) in lam.iter().zip(gens) {
        for (r, v) in res.iter_mut().zip(g) {
            *r -= l * v;
        }
    }
    norm(&res)
}

/// Angle from the line `u` to the cone spanned by `gens` (both signs of `u`).
pub fn angle_to_cone(gens: &[QVec], u: &[f64]) -> f64 {
    let g: Vec<Vec<f64>> = gens
        .iter()
        .map(|p| {
            let v: Vec<f64> = p.iter().map(to_f64).collect();
            let n = norm(&v);
            v.iter().map(|x| x / n).collect()
        })
        .collect();
    let un = norm(u);
    let u: Vec<f64> = u.iter().map(|x| x / un).collect();
    let neg: Vec<f64> = u.iter().map(|x| -x).collect();
    let r = cone_residual(&g, &u).min(cone_residual(&g, &neg));
    r.min(1.0).asin()
}

/// Angle from `u` to the span of `basis`.
pub fn angle_to_subspace(basis: &[Vec<f64>], u: &[f64]) -> f64 {
    let d = u.len();
    if basis.is_empty() {
        return std::f64::consts::FRAC_PI_2;
    }
    let m = DMatrix::from_fn(d, basis.len(), |i, j| basis[j][i]);
    let q = m.qr().q();
    let uv = DVector::from_column_slice(u);
    let proj = &q * (q.transpose() * &uv);
    let c = proj.norm() / uv.norm();
    c.min(1.0).acos()
}

/// Least principal angle between two subspaces.
pub fn subspace_angle(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let d = a[0].len();
    let qa = DMatrix::from_fn(d, a.len(), |i, j| a[j][i]).qr().q();
    let qb = DMatrix::from_fn(d, b.len(), |i, j| b[j][i]).qr().q();
    let s = (qa.transpose() * qb).svd(false, false).singular_values;
    s.iter().cloned().fold(0.0, f64::max).min(1.0).acos()
}

pub fn halfcone_subspace_check(
    sys: &CoxeterSystem,
    rep: &SimplicialRep,
    word: &[Gen],
    k: usize,
    depth: usize,
    eps: f64,
) -> Result<LocalityReport> {
    sys.check_word(word)?;
    if sys.reduce(word).len() != word.len() {
        return Err(Error::Word("itineraries follow geodesic words".into()));
    }
    if k == 0 || k > word.len() {
        return Err(Error::Precondition(format!("wall index {} outside 1..={}", k, word.len())));
    }
    let g = rep.evaluate_word(word);
    let r = singular_report_exact(&g)?;
    let Some(u) = &r.unstable else {
        return Ok(LocalityReport::Undefined { mu12: r.mu12() });
    };
    let it = Itinerary::new(sys, NormalForm::identity(), word.to_vec());
    let hc = halfcone_approx(sys, rep, &it.walls[k - 1], ConeSign::Plus, depth, DEFAULT_RADIUS_CAP)?;
    let halfcone_distance = angle_to_cone(&hc.generators(), u);
    let supp = sys.support(&sys.normalize(word));
    let (mut vt, mut vp, mut tr) = (None, None, None);
    if supp != sys.full_mask() {
        let t: Vec<usize> = (0..sys.rank()).filter(|i| supp >> i & 1 == 1).collect();
        let vt_basis: Vec<Vec<f64>> = t.iter().map(|&i| rep.polar(i as Gen).iter().map(to_f64).collect()).collect();
        let perp: Vec<Vec<f64>> = (0..sys.rank())
            .filter(|i| supp >> i & 1 == 0)
            .map(|i| (0..rep.dim()).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        vt = Some(angle_to_subspace(&vt_basis, u));
        vp = Some(angle_to_subspace(&perp, u));
        tr = Some(subspace_angle(&vt_basis, &perp));
    }
    let within = halfcone_distance <= eps;
    let vt_within = vt.map(|x| x <= eps);
    Ok(LocalityReport::Measured {
        mu12: r.mu12(),
        halfcone_distance,
        vt_distance: vt,
        vt_perp_distance: vp,
        transversality: tr,
        within,
        vt_within,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::builtin;
    use crate::vinberg::{build_rep, geometric_rep, CartanMatrix};

    #[test]
    fn diagonal() {
        let r = singular_report(&DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0, 0.25]))).unwrap();
        assert!((r.mu[0] - 4f64.ln()).abs() < 1e-12 && r.mu[1].abs() < 1e-12);
        assert!((r.mu12() - 4f64.ln()).abs() < 1e-12);
        let id = singular_report(&DMatrix::identity(3, 3)).unwrap();
        assert!(id.unstable.is_none() && id.mu12() == 0.0);
    }

    #[test]
    fn exact_matches_float() {
        let sys = builtin("pentagon").unwrap();
        let rep = geometric_rep(&sys);
        let w = sys.parse_word("acebd").unwrap();
        let g = rep.evaluate_word(&w);
        let a = singular_report_exact(&g).unwrap();
        let b = singular_report(&g.to_f64()).unwrap();
        for (x, y) in a.mu.iter().zip(&b.mu) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn hyperbolic_dihedral_slope() {
        let sys = builtin("dihedral").unwrap();
        let a = CartanMatrix::new(QMat::from_i64(&[&[2, -3], &[-2, 2]])).unwrap();
        let rep = build_rep(&a, &sys).unwrap();
        let t = power_trace(&sys, &rep, &[0, 1], 64).unwrap();
        let fit = fit_gaps(&[t], DEFAULT_B_CAP).unwrap();
        let target = 2.0 * (2.0 + 3f64.sqrt()).ln();
        assert!((fit.a - target).abs() / target < 0.05, "{:?}", fit);
    }

    #[test]
    fn feasible_fit() {
        let s: Vec<(f64, f64)> = (0..10).map(|n| (n as f64, 2.0 * n as f64)).collect();
        let f = fit_samples(&s, 5.0).unwrap();
        assert!((f.a - 2.0).abs() < 1e-12 && f.b.abs() < 1e-12);
    }

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(v.to_vec()))
    }

    fn rotation(t: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()])
    }

    #[test]
    fn empty_trace() {
        let sys = builtin("pentagon").unwrap();
        let t = gap_trace(&sys, &geometric_rep(&sys), &[], true).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].gap12, 0.0);
        assert_eq!(t.to_csv(), format!("n,length,mu1,mu2,gap12\n0,0,{0},{0},{0}\n", crate::report::fmt_f64(0.0)));
    }

    #[test]
    fn transversality_tight_on_diagonal() {
        let g = diag(&[3.0, 1.0]);
        let r = check_transversality(&g, &g, 1e-12).unwrap();
        assert!((r.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((r.lhs - r.rhs.unwrap()).abs() < 1e-12 && !r.violated);
        let inv = g.clone().try_inverse().unwrap();
        // E^+_1(g⁻¹) always lies in E^-_{d−1}(g): the bound degenerates to −∞
        let r = check_transversality(&g, &inv, 1e-12).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.vacuous && !r.violated);
        assert!(check_transversality(&DMatrix::identity(2, 2), &g, 1e-12).is_err());
    }

    #[test]
    fn additivity_trivial_cases() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0]);
        let id = DMatrix::identity(3, 3);
        assert!(check_additivity(&g, &id, &id, 1e-12).unwrap().deviation < 1e-12);
        let h = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let r = check_additivity(&g, &h, &h.transpose(), 1e-12).unwrap();
        assert!(r.deviation < 1e-9 && !r.violated);
    }

    #[test]
    fn unipotent_is_flat() {
        let sys = builtin("dihedral").unwrap();
        let t = power_trace(&sys, &geometric_rep(&sys), &[0, 1], 1024).unwrap();
        // one Jordan block of size 2: σ₁ grows linearly and det = 1
        let n = 1024.0f64;
        assert!((t.rows[1024].gap12 - 2.0 * n.ln()).abs() < 4.0);
        let fit = fit_gaps(&[t.clone()], DEFAULT_B_CAP).unwrap();
        assert!(fit.a < 0.01, "{fit:?}");
        assert!(!convergence_check(&t, 1e-6).unwrap().certified_decay);
    }

    #[test]
    fn constant_powers_converge_exactly() {
        let g = QMat::from_rows(vec![
            vec![Q::from_integer(4.into()), Q::from_integer(0.into()), Q::from_integer(0.into())],
            vec![Q::from_integer(0.into()), Q::from_integer(1.into()), Q::from_integer(0.into())],
            vec![Q::from_integer(0.into()), Q::from_integer(0.into()), Q::new(1.into(), 4.into())],
        ]);
        let t = matrix_power_trace(&g, 10).unwrap();
        assert!((t.rows[3].gap12 - 3.0 * 4f64.ln()).abs() < 1e-12);
        let c = convergence_check(&t, 1e-6).unwrap();
        assert!(c.constant && c.certified_decay && c.decay_rate == Some(f64::INFINITY));
    }

    #[test]
    fn hyperbolic_matches_eigenvalue() {
        let sys = builtin("dihedral").unwrap();
        let a = CartanMatrix::new(QMat::from_i64(&[&[2, -3], &[-2, 2]])).unwrap();
        let rep = build_rep(&a, &sys).unwrap();
        let p = rep.evaluate_word(&[0, 1]);
        let (tr, det) = (to_f64(&p.trace()), to_f64(&p.det()));
        let lambda = (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0;
        let t = power_trace(&sys, &rep, &[0, 1], 64).unwrap();
        let fit = fit_gaps(&[t], DEFAULT_B_CAP).unwrap();
        assert!((fit.a / (2.0 * lambda.ln()) - 1.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn pairwise_inverse_reverses() {
        let sys = builtin("pentagon").unwrap();
        let a = crate::vinberg::random_fully_nondegenerate(&sys, 2, &Default::default()).unwrap();
        let rep = build_rep(&a, &sys).unwrap();
        let w = random_geodesics(&sys, 1, 12, 3).remove(0);
        let t = gap_trace(&sys, &rep, &w, true).unwrap();
        let (p, q) = (t.pairwise.as_ref().unwrap(), t.pairwise_mu1d.as_ref().unwrap());
        for n in 0..=12 {
            for m in n + 1..=12 {
                let g = rep.evaluate_word(&w[n..m]);
                let r = singular_report_exact(&g).unwrap();
                let d = r.mu.len();
                assert!((p[n][m] - r.mu12()).abs() < 1e-9);
                assert!((p[m][n] - (r.mu[d - 2] - r.mu[d - 1])).abs() < 1e-9);
                assert!((q[n][m] - r.mu1d()).abs() < 1e-9 && q[n][m] == q[m][n]);
            }
        }
        assert!((p[0][12] - t.rows[12].gap12).abs() < 1e-9);
    }

    #[test]
    fn ball_gap_closed_form() {
        let r = ball_gap_check(&diag(&[0.5, 0.2]), 2.0).unwrap();
        assert!(r.error < 1e-9);
        assert!(ball_gap_check(&rotation(0.3), 1.0).is_err());
    }

    #[test]
    fn locality_reports() {
        let sys = builtin("pentagon").unwrap();
        let a = crate::vinberg::random_fully_nondegenerate(&sys, 1, &Default::default()).unwrap();
        let rep = build_rep(&a, &sys).unwrap();
        assert!(matches!(halfcone_subspace_check(&sys, &rep, &[], 1, 2, 1e-6), Err(_)));
        let w = sys.parse_word(&"ac".repeat(15)).unwrap();
        match halfcone_subspace_check(&sys, &rep, &w, 1, 4, 1e-6).unwrap() {
            LocalityReport::Measured { vt_distance, vt_perp_distance, transversality, within, .. } => {
                assert!(within && vt_distance.unwrap() < 1e-6);
                assert!(vt_perp_distance.unwrap() >= transversality.unwrap() - vt_distance.unwrap());
            }
            r => panic!("{r:?}"),
        }
    }
}
