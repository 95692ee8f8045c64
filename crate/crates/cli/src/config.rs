//! Run configuration: an optional JSON file overlaid by command-line flags.

use std::path::Path;

use clap::Args;
use racg::exact::{format_rational, parse_rational, Q};
use racg::system::DEFAULT_RADIUS_CAP;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_DEPTH: usize = 6;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Args, Clone, Debug, Default)]
pub struct GlobalArgs {
    /// JSON file with configuration values; flags override it.
    #[arg(long, global = true)]
    pub config: Option<String>,
    /// Built-in nerve name or path to a nerve file.
    #[arg(long, global = true)]
    pub nerve: Option<String>,
    /// Cartan matrix: a file path, "geometric", or "random".
    #[arg(long, global = true)]
    pub cartan: Option<String>,
    /// Seed for random Cartan matrices.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Largest off-diagonal magnitude for random Cartan matrices.
    #[arg(long, global = true)]
    pub range: Option<String>,
    /// Symmetric random Cartan matrices.
    #[arg(long, global = true)]
    pub symmetric: bool,
    /// Integer entries in random Cartan matrices.
    #[arg(long, global = true)]
    pub integer: bool,
    /// Ball radius cap.
    #[arg(long, global = true)]
    pub radius: Option<usize>,
    /// Depth cap for half-cone approximations.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Numerical tolerance for certification checks.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Largest offset B allowed when fitting gaps.
    #[arg(long = "b-cap", global = true)]
    pub b_cap: Option<f64>,
    /// json or csv.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Worker threads; defaults to RACG_THREADS or the available parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

/// Values a config file may set.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    nerve: Option<String>,
    cartan: Option<String>,
    seed: Option<u64>,
    range: Option<serde_json::Value>,
    symmetric: Option<bool>,
    integer: Option<bool>,
    radius: Option<usize>,
    depth: Option<usize>,
    tol: Option<f64>,
    b_cap: Option<f64>,
    format: Option<String>,
    out: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Fully resolved configuration, echoed into every report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub nerve: Option<String>,
    pub cartan: Option<String>,
    pub seed: u64,
    #[serde(serialize_with = "ser_q")]
    pub range: Q,
    pub symmetric: bool,
    pub integer: bool,
    pub radius: usize,
    /// `None` means the subcommand default.
    pub depth: Option<usize>,
    pub tol: f64,
    pub b_cap: f64,
    pub format: Format,
    pub out: Option<String>,
}

fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(x))
}

fn pick<T: std::fmt::Debug + Clone>(name: &str, file: Option<T>, flag: Option<T>) -> Option<T> {
    match (&file, &flag) {
        (Some(a), Some(b)) => {
            eprintln!("config: {} = {:?} from flag (file had {:?})", name, b, a);
            flag
        }
        (Some(a), None) => {
            eprintln!("config: {} = {:?} from file", name, a);
            file
        }
        (None, Some(b)) => {
            eprintln!("config: {} = {:?} from flag", name, b);
            flag
        }
        (None, None) => None,
    }
}

fn parse_range(text: &str) -> Result<Q, CliError> {
    parse_rational(text).map_err(|e| CliError::Usage(format!("invalid value for range: {}", e)))
}

impl RunConfig {
    pub fn load(g: &GlobalArgs) -> Result<RunConfig, CliError> {
        let file = match &g.config {
            None => FileConfig::default(),
            Some(p) => read_file(Path::new(p))?,
        };
        let range_file = match file.range {
            None => None,
            Some(serde_json::Value::String(s)) => Some(s),
            Some(serde_json::Value::Number(n)) => Some(n.to_string()),
            Some(v) => return Err(CliError::Usage(format!("invalid value for range: {}", v))),
        };
        let nerve = pick("nerve", file.nerve, g.nerve.clone());
        let cartan = pick("cartan", file.cartan, g.cartan.clone());
        let seed = pick("seed", file.seed, g.seed).unwrap_or(DEFAULT_SEED);
        let range = match pick("range", range_file, g.range.clone()) {
            Some(t) => parse_range(&t)?,
            None => racg::vinberg::RandomCartanOpts::default().range,
        };
        let symmetric = pick("symmetric", file.symmetric, g.symmetric.then_some(true)).unwrap_or(false);
        let integer = pick("integer", file.integer, g.integer.then_some(true)).unwrap_or(false);
        let radius = pick("radius", file.radius, g.radius).unwrap_or(DEFAULT_RADIUS_CAP);
        let depth = pick("depth", file.depth, g.depth);
        let tol = pick("tol", file.tol, g.tol).unwrap_or(DEFAULT_TOL);
        let b_cap = pick("b_cap", file.b_cap, g.b_cap).unwrap_or(racg::anosov::DEFAULT_B_CAP);
        let format = match pick("format", file.format, g.format.clone()).as_deref() {
            None | Some("json") => Format::Json,
            Some("csv") => Format::Csv,
            Some(other) => {
                return Err(CliError::Usage(format!("invalid value for format: {:?} (expected json or csv)", other)))
            }
        };
        let out = pick("out", file.out, g.out.clone());
        if radius == 0 {
            return Err(CliError::Usage("invalid value for radius: must be positive".into()));
        }
        if depth == Some(0) {
            return Err(CliError::Usage("invalid value for depth: must be positive".into()));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Usage("invalid value for tol: must be positive".into()));
        }
        if !(b_cap >= 0.0 && b_cap.is_finite()) {
            return Err(CliError::Usage("invalid value for b_cap: must be non-negative".into()));
        }
        if range <= Q::from_integer(0.into()) {
            return Err(CliError::Usage("invalid value for range: must be positive".into()));
        }
        Ok(RunConfig { nerve, cartan, seed, range, symmetric, integer, radius, depth, tol, b_cap, format, out })
    }

    pub fn depth_or(&self, default: usize) -> usize {
        self.depth.unwrap_or(default)
    }
}

fn read_file(p: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(p)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {}", p.display(), e)))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {}", p.display(), e)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::load(&GlobalArgs::default()).unwrap();
        assert_eq!(c.radius, 12);
        assert_eq!(c.depth_or(DEFAULT_DEPTH), 6);
        assert_eq!(c.tol, 1e-9);
        assert_eq!(c.format, Format::Json);
    }

    #[test]
    fn bad_rational_names_field() {
        let g = GlobalArgs { range: Some("2/0".into()), ..Default::default() };
        match RunConfig::load(&g) {
            Err(CliError::Usage(m)) => assert!(m.contains("range"), "{}", m),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn flag_beats_file() {
        let dir = std::env::temp_dir().join(format!("racg-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("c.json");
        std::fs::write(&p, r#"{"seed": 3, "radius": 5}"#).unwrap();
        let g = GlobalArgs { config: Some(p.display().to_string()), seed: Some(9), ..Default::default() };
        let c = RunConfig::load(&g).unwrap();
        assert_eq!((c.seed, c.radius), (9, 5));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
