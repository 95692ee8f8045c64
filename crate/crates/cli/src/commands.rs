//! Subcommands and their reports.

use clap::{Args, Subcommand};
use racg::anosov::{self, GapTrace, TraceRow};
use racg::appendix::{certify_a1, certify_a2, A1_DEFAULT_DEPTH, A2_DEFAULT_DEPTH};
use racg::decompose::{bpp_constant, bpp_of_poset, disjoint_decomposition, Bpp};
use racg::exact::{parse_rational, QMat, QVec};
use racg::hilbert::{ball_distance, hilbert_distance};
use racg::projgeom::{nesting_probe, vec_strings, ProbeOpts};
use racg::report::fmt_f64;
use racg::system::{load_nerve, CoxeterSystem, Gen};
use racg::vinberg::{
    build_rep, is_fully_nondegenerate, is_negative_type, random_fully_nondegenerate, validate_cartan, CartanMatrix,
    RandomCartanOpts, SimplicialRep, DEFAULT_MINOR_CAP,
};
use racg::walls::{count_linear_extensions, linear_extensions, walls_of, Wall};
use serde_json::{json, Value};

use crate::config::{RunConfig, DEFAULT_DEPTH};
use crate::emit::{emit, Output};
use crate::CliError;

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Nerve parsing and structure.
    #[command(subcommand)]
    Nerve(NerveCmd),
    /// Cartan matrices and simplicial representations.
    #[command(subcommand)]
    Rep(RepCmd),
    /// Normal forms, products and balls.
    #[command(subcommand)]
    Word(WordCmd),
    /// Walls of an element, their poset and decompositions.
    #[command(subcommand)]
    Walls(WallsCmd),
    /// Singular value gaps along words and geodesics.
    #[command(subcommand)]
    Gaps(GapsCmd),
    /// Half-cone nesting probes.
    #[command(subcommand)]
    Halfcone(HalfconeCmd),
    /// Hilbert distances in a polyhedral cone.
    #[command(subcommand)]
    Hilbert(HilbertCmd),
    /// Certified appendix examples.
    #[command(subcommand)]
    Appendix(AppendixCmd),
}

#[derive(Subcommand, Debug)]
pub enum NerveCmd {
    /// Parse a nerve and report its structure.
    Validate,
}

#[derive(Subcommand, Debug)]
pub enum RepCmd {
    /// Generator matrices of the simplicial representation.
    Build,
    /// A seeded random fully nondegenerate Cartan matrix.
    Random,
    /// Validity, nondegeneracy and negative type of a Cartan matrix.
    Check,
}

#[derive(Args, Debug)]
pub struct WordArg {
    /// Generator names, whitespace- or comma-separated.
    #[arg(long)]
    pub word: String,
}

#[derive(Subcommand, Debug)]
pub enum WordCmd {
    Normalize(WordArg),
    /// Product of the words in the order given.
    Mul {
        #[arg(long, required = true)]
        word: Vec<String>,
    },
    /// Sphere sizes of a ball in the Cayley graph.
    Ball {
        /// Radius; defaults to the radius cap.
        #[arg(long)]
        r: Option<usize>,
        /// Also list the elements.
        #[arg(long)]
        list: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum WallsCmd {
    /// Walls separating the identity from the element.
    Show(WordArg),
    /// Wall order and crossing pairs.
    Poset(WordArg),
    /// Linear extensions of the wall poset, as geodesic words.
    Extensions {
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 1000)]
        limit: usize,
    },
    /// Product projection constant.
    Bpp {
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 64)]
        cap: usize,
    },
    /// Disjoint-walls decomposition.
    Decompose {
        #[arg(long)]
        word: String,
        /// Defaults to the product projection constant of the element.
        #[arg(long)]
        d: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
pub enum GapsCmd {
    /// μ along prefixes of a geodesic, or along powers with --power.
    Trace {
        #[arg(long)]
        word: Option<String>,
        /// Matrix file whose powers are traced instead of a word.
        #[arg(long)]
        matrix: Option<String>,
        #[arg(long)]
        power: Option<usize>,
        #[arg(long)]
        pairwise: bool,
    },
    /// μ₁₂ of every subword of a geodesic.
    Pairwise(WordArg),
    /// Fit μ₁₂ ≥ A·n − B to trace files (CSV or JSON).
    Fit {
        #[arg(long = "trace", required = true)]
        traces: Vec<String>,
    },
    /// Gap fits over random geodesics for several random Cartan matrices.
    Scan {
        /// Cartan seeds, comma-separated; defaults to --seed.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 40)]
        length: usize,
        #[arg(long = "geodesic-seed", default_value_t = 7)]
        geodesic_seed: u64,
    },
}

#[derive(Subcommand, Debug)]
pub enum HalfconeCmd {
    /// Nesting of two half-cones, walls given as prefix:type.
    Probe {
        #[arg(long)]
        wall1: String,
        #[arg(long)]
        wall2: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum HilbertCmd {
    /// Hilbert distance in a polyhedral cone or the unit ball.
    Dist {
        /// JSON file listing the cone generators.
        #[arg(long, conflicts_with = "ball")]
        cone: Option<String>,
        #[arg(long)]
        ball: bool,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum AppendixCmd {
    /// The (bd)^k e(ac)^k family on its nerve.
    A1 {
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// The t₁t₃t₂ed₁d₂ example.
    A2,
}

fn system(cfg: &RunConfig) -> Result<CoxeterSystem, CliError> {
    let spec = cfg.nerve.as_deref().ok_or_else(|| CliError::Usage("--nerve is required".into()))?;
    Ok(load_nerve(spec)?)
}

fn matrix_file(path: &str) -> Result<CartanMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {}", path, e)))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {}", path, e)))?;
    // reports from `rep random` keep the matrix under "result"
    let inner = v.get("result").cloned().unwrap_or(v);
    Ok(CartanMatrix::parse_json(&inner.to_string())?)
}

/// The Cartan matrix named by the config; the seed is returned when it was drawn.
fn cartan(cfg: &RunConfig, sys: &CoxeterSystem) -> Result<(CartanMatrix, Option<u64>), CliError> {
    match cfg.cartan.as_deref().unwrap_or("random") {
        "geometric" => Ok((CartanMatrix::geometric(sys), None)),
        "random" => {
            let opts = RandomCartanOpts {
                range: cfg.range.clone(),
                symmetric: cfg.symmetric,
                integer: cfg.integer,
                ..Default::default()
            };
            Ok((random_fully_nondegenerate(sys, cfg.seed, &opts)?, Some(cfg.seed)))
        }
        path => Ok((matrix_file(path)?, None)),
    }
}

fn rep(cfg: &RunConfig, sys: &CoxeterSystem) -> Result<(SimplicialRep, Option<u64>), CliError> {
    let (a, seed) = cartan(cfg, sys)?;
    Ok((build_rep(&a, sys)?, seed))
}

fn with_seed(out: Output, name: &str, seed: Option<u64>) -> Output {
    match seed {
        Some(s) => out.seed(name, s),
        None => out,
    }
}

fn qmat_strings(m: &QMat) -> Vec<Vec<String>> {
    m.to_rows().iter().map(|r| vec_strings(r)).collect()
}

fn parse_wall(sys: &CoxeterSystem, text: &str) -> Result<Wall, CliError> {
    let (prefix, ty) = text
        .rsplit_once(':')
        .ok_or_else(|| CliError::Usage(format!("wall {:?} is not of the form prefix:type", text)))?;
    let u = sys.parse_word(prefix)?;
    let s = sys
        .index_of(ty.trim())
        .ok_or_else(|| CliError::Usage(format!("wall {:?}: unknown generator {:?}", text, ty)))?;
    Ok(Wall::new(sys, &u, s))
}

fn parse_qvec(field: &str, text: &str) -> Result<QVec, CliError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| parse_rational(t).map_err(|e| CliError::Usage(format!("invalid value for {}: {}", field, e))))
        .collect()
}

fn parse_fvec(field: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| CliError::Usage(format!("invalid value for {}: {:?}", field, t))))
        .collect()
}

fn cone_file(path: &str) -> Result<Vec<QVec>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {}", path, e)))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {}", path, e)))?;
    let rows = v.get("generators").unwrap_or(&v);
    let rows = rows.as_array().ok_or_else(|| CliError::Usage(format!("{}: expected a list of generators", path)))?;
    let mut out = Vec::new();
    for r in rows {
        let r = r.as_array().ok_or_else(|| CliError::Usage(format!("{}: generator is not an array", path)))?;
        let mut g = Vec::new();
        for x in r {
            let t = match x {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                _ => return Err(CliError::Usage(format!("{}: entry {} is not a rational", path, x))),
            };
            g.push(parse_rational(&t).map_err(|e| CliError::Usage(format!("{}: {}", path, e)))?);
        }
        out.push(g);
    }
    if out.is_empty() || out.iter().any(|g| g.len() != out[0].len()) {
        return Err(CliError::Usage(format!("{}: generators must be nonempty and of equal length", path)));
    }
    Ok(out)
}

/// Trace rows (and pairwise data, when present) from a CSV trace or a JSON
/// report written by `gaps trace`.
fn load_trace(path: &str) -> Result<GapTrace, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {}", path, e)))?;
    let blank = |rows, pairwise, mu1d| GapTrace {
        word: path.to_string(),
        rows,
        unstable: Vec::new(),
        stable_normal: Vec::new(),
        dominant_normal: Vec::new(),
        pairwise,
        pairwise_mu1d: mu1d,
    };
    if let Ok(v) = serde_json::from_str::<Value>(&text) {
        let t = v.get("result").map(|r| r.get("trace").unwrap_or(r)).unwrap_or(&v);
        let bad = || CliError::Usage(format!("{}: not a gap trace report", path));
        let rows = t.get("rows").and_then(Value::as_array).ok_or_else(bad)?;
        let mut out = Vec::new();
        for r in rows {
            let num = |k: &str| r.get(k).and_then(Value::as_f64).ok_or_else(bad);
            out.push(TraceRow {
                n: num("n")? as usize,
                length: num("length")? as usize,
                mu1: num("mu1")?,
                mu2: num("mu2")?,
                gap12: num("gap12")?,
            });
        }
        let mat = |k: &str| -> Option<Vec<Vec<f64>>> {
            let a = t.get(k)?.as_array()?;
            a.iter().map(|r| r.as_array().map(|r| r.iter().map(|x| x.as_f64().unwrap_or(f64::NAN)).collect())).collect()
        };
        return Ok(blank(out, mat("pairwise"), mat("pairwise_mu1d")));
    }
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| CliError::Usage(format!("{}: CSV trace has no {:?} column", path, name)))
    };
    let (cn, cl, c1, c2, cg) = (col("n")?, col("length")?, col("mu1")?, col("mu2")?, col("gap12")?);
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let cells: Vec<&str> = l.split(',').map(str::trim).collect();
        let bad = || CliError::Usage(format!("{}: malformed row {}", path, i + 1));
        let f = |c: usize| cells.get(c).and_then(|x| x.parse::<f64>().ok()).ok_or_else(bad);
        let u = |c: usize| cells.get(c).and_then(|x| x.parse::<usize>().ok()).ok_or_else(bad);
        rows.push(TraceRow { n: u(cn)?, length: u(cl)?, mu1: f(c1)?, mu2: f(c2)?, gap12: f(cg)? });
    }
    Ok(blank(rows, None, None))
}

/// Runs the command and emits its report. `Ok(false)` marks a report that
/// was written but records a failed certification.
pub fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<bool, CliError> {
    let (name, out, ok) = match cmd {
        Command::Nerve(NerveCmd::Validate) => {
            let sys = system(cfg)?;
            let names = sys.names();
            let edges: Vec<[&str; 2]> =
                sys.edges().iter().map(|&(i, j)| [names[i].as_str(), names[j].as_str()]).collect();
            let comps: Vec<Vec<String>> = sys.components(sys.full_mask()).iter().map(|&m| sys.format_mask(m)).collect();
            let r = json!({
                "generators": names,
                "edges": edges,
                "rank": sys.rank(),
                "irreducible": sys.is_irreducible(),
                "components": comps,
            });
            ("nerve validate", Output::json(&r)?, true)
        }
        Command::Rep(c) => {
            let sys = system(cfg)?;
            match c {
                RepCmd::Build => {
                    let (rep, seed) = rep(cfg, &sys)?;
                    let gens: Vec<Value> = (0..sys.rank() as Gen)
                        .map(|s| {
                            json!({
                                "name": sys.name(s),
                                "matrix": qmat_strings(rep.generator(s)),
                                "polar": vec_strings(rep.polar(s)),
                            })
                        })
                        .collect();
                    let r = json!({"cartan": rep.cartan().to_strings(), "generators": gens});
                    ("rep build", with_seed(Output::json(&r)?, "cartan", seed), true)
                }
                RepCmd::Random => {
                    let (a, seed) = cartan(&RunConfig { cartan: Some("random".into()), ..cfg.clone() }, &sys)?;
                    let r = json!({"matrix": a.to_strings()});
                    ("rep random", with_seed(Output::json(&r)?, "cartan", seed), true)
                }
                RepCmd::Check => {
                    let (a, seed) = cartan(cfg, &sys)?;
                    let (valid, reason) = validate_cartan(&a, &sys)?;
                    let nondeg = is_fully_nondegenerate(&a, DEFAULT_MINOR_CAP)?;
                    let negative = if valid { Some(is_negative_type(&a, &sys)?) } else { None };
                    let r = json!({
                        "matrix": a.to_strings(),
                        "valid": valid,
                        "reason": reason,
                        "fully_nondegenerate": nondeg,
                        "negative_type": negative,
                        "symmetric": a.is_symmetric(),
                    });
                    ("rep check", with_seed(Output::json(&r)?, "cartan", seed), valid)
                }
            }
        }
        Command::Word(c) => {
            let sys = system(cfg)?;
            match c {
                WordCmd::Normalize(w) => {
                    let nf = sys.try_normalize(&sys.parse_word(&w.word)?)?;
                    let r = json!({"input": w.word, "normal_form": sys.format_word(nf.letters()), "length": nf.len()});
                    ("word normalize", Output::json(&r)?, true)
                }
                WordCmd::Mul { word } => {
                    let mut prod = racg::NormalForm::identity();
                    for w in word {
                        let x = sys.try_normalize(&sys.parse_word(w)?)?;
                        prod = sys.multiply(&prod, &x);
                    }
                    let r = json!({"factors": word, "product": sys.format_word(prod.letters()), "length": prod.len()});
                    ("word mul", Output::json(&r)?, true)
                }
                WordCmd::Ball { r, list } => {
                    let radius = r.unwrap_or(cfg.radius);
                    let spheres = sys.spheres(radius, cfg.radius)?;
                    let sizes: Vec<usize> = spheres.iter().map(Vec::len).collect();
                    let mut res = json!({
                        "radius": radius,
                        "sphere_sizes": sizes,
                        "total": sizes.iter().sum::<usize>(),
                    });
                    if *list {
                        let el: Vec<String> = spheres.iter().flatten().map(|x| sys.format_word(x.letters())).collect();
                        res["elements"] = json!(el);
                    }
                    ("word ball", Output::json(&res)?, true)
                }
            }
        }
        Command::Walls(c) => walls(c, cfg)?,
        Command::Gaps(c) => gaps(c, cfg)?,
        Command::Halfcone(HalfconeCmd::Probe { wall1, wall2 }) => {
            let sys = system(cfg)?;
            let (rep, seed) = rep(cfg, &sys)?;
            let (w1, w2) = (parse_wall(&sys, wall1)?, parse_wall(&sys, wall2)?);
            let opts = ProbeOpts { max_depth: cfg.depth_or(DEFAULT_DEPTH), cap: cfg.radius, ..Default::default() };
            let p = nesting_probe(&sys, &rep, &w1, &w2, &opts)?;
            let mut csv = String::from("depth,min_margin\n");
            for t in &p.trace {
                csv.push_str(&format!("{},{}\n", t.depth, fmt_f64(t.min_margin)));
            }
            let r = json!({"wall1": w1.to_json(&sys), "wall2": w2.to_json(&sys), "probe": p});
            ("halfcone probe", with_seed(Output::json(&r)?.with_csv(csv), "cartan", seed), true)
        }
        Command::Hilbert(HilbertCmd::Dist { cone, ball, x, y }) => {
            let r = if *ball {
                let (x, y) = (parse_fvec("x", x)?, parse_fvec("y", y)?);
                if x.len() != y.len() {
                    return Err(CliError::Usage("x and y must have the same length".into()));
                }
                json!({"domain": "ball", "distance": ball_distance(&x, &y)?})
            } else {
                let path =
                    cone.as_deref().ok_or_else(|| CliError::Usage("one of --cone or --ball is required".into()))?;
                let gens = cone_file(path)?;
                let (x, y) = (parse_qvec("x", x)?, parse_qvec("y", y)?);
                if x.len() != gens[0].len() || y.len() != gens[0].len() {
                    return Err(CliError::Usage("x and y must match the cone dimension".into()));
                }
                json!({"domain": "cone", "generators": gens.len(), "distance": hilbert_distance(&gens, &x, &y)?})
            };
            ("hilbert dist", Output::json(&r)?, true)
        }
        Command::Appendix(c) => {
            let (nerve, default_depth) = match c {
                AppendixCmd::A1 { .. } => ("fig-a1", A1_DEFAULT_DEPTH),
                AppendixCmd::A2 => ("fig-a2", A2_DEFAULT_DEPTH),
            };
            let sys = racg::builtin(nerve).expect("built-in nerve");
            let (a, seed) = cartan(cfg, &sys)?;
            let depth = cfg.depth_or(default_depth);
            let (name, r) = match c {
                AppendixCmd::A1 { k } => ("appendix a1", certify_a1(*k, &a, depth)?),
                AppendixCmd::A2 => ("appendix a2", certify_a2(&a, depth)?),
            };
            for f in r.failures() {
                eprintln!("racg: check {} failed: {}", f.name, f.detail);
            }
            let ok = r.certified;
            (name, with_seed(Output::json(&r)?, "cartan", seed), ok)
        }
    };
    emit(name, cfg, out)?;
    Ok(ok)
}

fn walls(c: &WallsCmd, cfg: &RunConfig) -> Result<(&'static str, Output, bool), CliError> {
    let sys = system(cfg)?;
    let word = match c {
        WallsCmd::Show(w) | WallsCmd::Poset(w) => &w.word,
        WallsCmd::Extensions { word, .. } | WallsCmd::Bpp { word, .. } | WallsCmd::Decompose { word, .. } => word,
    };
    let gamma = sys.try_normalize(&sys.parse_word(word)?)?;
    let p = walls_of(&sys, &gamma);
    let listing: Vec<Value> = p
        .walls()
        .iter()
        .enumerate()
        .map(|(i, w)| json!({"index": i, "wall": w.to_json(&sys), "display": w.display(&sys)}))
        .collect();
    let gw = sys.format_word(gamma.letters());
    Ok(match c {
        WallsCmd::Show(_) => ("walls show", Output::json(&json!({"element": gw, "walls": listing}))?, true),
        WallsCmd::Poset(_) => {
            let n = p.len();
            let order: Vec<[usize; 2]> = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|&(i, j)| p.less(i, j))
                .map(|(i, j)| [i, j])
                .collect();
            let crossing: Vec<[usize; 2]> = p.edge_pairs().into_iter().map(|(i, j)| [i, j]).collect();
            let r = json!({"element": gw, "walls": listing, "order": order, "crossing": crossing});
            ("walls poset", Output::json(&r)?, true)
        }
        WallsCmd::Extensions { limit, .. } => {
            let count = count_linear_extensions(&p)?;
            let ext = linear_extensions(&p, *limit)?;
            let words: Vec<String> = ext.iter().map(|w| sys.format_word(w)).collect();
            let count = u64::try_from(count).map(Value::from).unwrap_or_else(|_| Value::from(count.to_string()));
            let r = json!({"element": gw, "count": count, "limit": limit, "extensions": words});
            ("walls extensions", Output::json(&r)?, true)
        }
        WallsCmd::Bpp { cap, .. } => {
            let value = match bpp_constant(&sys, &gamma, *cap) {
                Bpp::Value(v) => Some(v),
                Bpp::OverCap => None,
            };
            let r = json!({"element": gw, "cap": cap, "bpp": value, "over_cap": value.is_none()});
            ("walls bpp", Output::json(&r)?, true)
        }
        WallsCmd::Decompose { d, .. } => {
            let d = d.unwrap_or_else(|| bpp_of_poset(&p));
            let dec = disjoint_decomposition(&sys, &gamma, d)?;
            let fw = |x: &racg::NormalForm| sys.format_word(x.letters());
            let chain: Vec<Value> =
                dec.chain.iter().map(|w| json!({"wall": w.to_json(&sys), "display": w.display(&sys)})).collect();
            let spacers: Vec<String> = dec.spacers.iter().map(|it| sys.format_word(&it.letters)).collect();
            let windows: Vec<Value> = dec
                .windows
                .iter()
                .map(|w| json!({"i": w.i, "j": w.j, "eta_i": fw(&w.eta_i), "middle": fw(&w.middle), "eta_j": fw(&w.eta_j)}))
                .collect();
            let r = json!({
                "element": gw,
                "d": dec.d,
                "r_prime": dec.r_prime,
                "r": dec.r,
                "chain": chain,
                "chain_positions": dec.chain_positions,
                "spacers": spacers,
                "itinerary": sys.format_word(&dec.itinerary.letters),
                "order": dec.order,
                "windows": windows,
            });
            ("walls decompose", Output::json(&r)?, true)
        }
    })
}

fn gaps(c: &GapsCmd, cfg: &RunConfig) -> Result<(&'static str, Output, bool), CliError> {
    Ok(match c {
        GapsCmd::Trace { word, matrix, power, pairwise } => {
            let (trace, seed) = match (word, matrix) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(CliError::Usage("exactly one of --word or --matrix is required".into()))
                }
                (None, Some(path)) => {
                    let n = power.ok_or_else(|| CliError::Usage("--matrix needs --power".into()))?;
                    (anosov::matrix_power_trace(matrix_file(path)?.matrix(), n)?, None)
                }
                (Some(w), None) => {
                    let sys = system(cfg)?;
                    let (rep, seed) = rep(cfg, &sys)?;
                    let w = sys.parse_word(w)?;
                    let t = match power {
                        Some(n) => anosov::power_trace(&sys, &rep, &w, *n)?,
                        None => anosov::gap_trace(&sys, &rep, &w, *pairwise)?,
                    };
                    (t, seed)
                }
            };
            let conv = anosov::convergence_check(&trace, cfg.tol).ok();
            let csv = trace.to_csv();
            let r = json!({"trace": trace, "convergence": conv});
            ("gaps trace", with_seed(Output::json(&r)?.with_csv(csv), "cartan", seed), true)
        }
        GapsCmd::Pairwise(w) => {
            let sys = system(cfg)?;
            let (rep, seed) = rep(cfg, &sys)?;
            let t = anosov::gap_trace(&sys, &rep, &sys.parse_word(&w.word)?, true)?;
            let csv = t.pairwise_csv().unwrap_or_default();
            let r = json!({"word": t.word, "pairwise": t.pairwise, "pairwise_mu1d": t.pairwise_mu1d});
            ("gaps pairwise", with_seed(Output::json(&r)?.with_csv(csv), "cartan", seed), true)
        }
        GapsCmd::Fit { traces } => {
            let loaded = traces.iter().map(|p| load_trace(p)).collect::<Result<Vec<_>, _>>()?;
            let fit = anosov::fit_gaps(&loaded, cfg.b_cap)?;
            let r = json!({"inputs": traces, "fit": fit});
            ("gaps fit", Output::json(&r)?, true)
        }
        GapsCmd::Scan { seeds, count, length, geodesic_seed } => {
            let sys = system(cfg)?;
            let seeds: Vec<u64> = match seeds {
                None => vec![cfg.seed],
                Some(s) => s
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<u64>()
                            .map_err(|_| CliError::Usage(format!("invalid value for seeds: {:?}", t)))
                    })
                    .collect::<Result<_, _>>()?,
            };
            let opts = RandomCartanOpts {
                range: cfg.range.clone(),
                symmetric: cfg.symmetric,
                integer: cfg.integer,
                ..Default::default()
            };
            let mut runs = Vec::new();
            let mut all_pass = true;
            for &seed in &seeds {
                let a = random_fully_nondegenerate(&sys, seed, &opts)?;
                let rep = build_rep(&a, &sys)?;
                let scan = anosov::gap_scan(&sys, &rep, *count, *length, *geodesic_seed, cfg.b_cap, cfg.tol)?;
                all_pass &= scan.fit.a > 0.0 && scan.regularity.passed;
                runs.push(json!({"seed": seed, "cartan": a.to_strings(), "scan": scan}));
            }
            let mut out = Output::json(&json!({"runs": runs, "passed": all_pass}))?.seed("geodesics", *geodesic_seed);
            for (i, &s) in seeds.iter().enumerate() {
                out = out.seed(&format!("cartan.{}", i), s);
            }
            ("gaps scan", out, all_pass)
        }
    })
}
