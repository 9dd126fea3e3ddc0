//! Command-line front end: every subcommand turns its arguments into a
//! [`RunConfig`], validates it, and renders CSV or JSON text.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nncalc_core::bell::ch_scan;
use nncalc_core::entropy::{renyi_closed, renyi_kn, shannon, Distribution};
use nncalc_core::fubini::{geodesic_distance, hidden_prob, ladder, StateVector};
use nncalc_core::lln::{fig3_table, LevelBinomial};
use nncalc_core::probability::{alpha_of_theta, singlet_table};
use nncalc_core::{ArithmeticContext, Bijection, ExtendedGenerator, GeneratorConfig, Op};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] nncalc_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// 2 for bad input, 3 for numeric failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn read_file(path: &str) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

/// Radians, or degrees with a `deg` suffix.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let (num, scale) = match t.strip_suffix("deg") {
        Some(n) => (n.trim(), PI / 180.0),
        None => (t, 1.0),
    };
    let v: f64 = num.parse().map_err(|_| format!("not an angle: '{s}'"))?;
    if !v.is_finite() {
        return Err(format!("not a finite angle: '{s}'"));
    }
    Ok(v * scale)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("bad {what} '{x}' in '{s}'")))
        .collect()
}

// Aliases keep clap from treating the comma lists as repeated flags.
type Levels = Vec<i32>;
type Probs = Vec<f64>;

fn parse_levels(s: &str) -> Result<Levels, String> {
    parse_list(s, "level")
}

fn parse_probs(s: &str) -> Result<Probs, String> {
    parse_list(s, "probability")
}

#[derive(Debug, Parser)]
#[command(name = "nncalc", version, about = "Hierarchical arithmetics, non-Newtonian calculus and their probability models")]
pub struct Cli {
    /// Generator: `sine`, `identity`, a JSON object, or a file holding one.
    #[arg(long, global = true, default_value = "sine")]
    pub generator: String,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for commands that sample.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// CSV of g^k(p) on a uniform grid of [0,1].
    Iterate(IterateArgs),
    /// CSV of the hidden angle alpha against the detector angle theta.
    AlphaTheta(GridArgs),
    /// JSON report of the Clauser-Horne grid scan.
    BellScan(BellScanArgs),
    /// CSV of Chebyshev bounds per level and number of trials.
    Lln(LlnArgs),
    /// JSON report of a Monte Carlo check of the Chebyshev bound.
    LlnSim(LlnSimArgs),
    /// JSON singlet probability table.
    Singlet(SingletArgs),
    /// JSON Rényi and Shannon entropies.
    Entropy(EntropyArgs),
    /// JSON geodesic distance, hidden probability and its level ladder.
    Fubini(FubiniArgs),
    /// One operation of the level-k arithmetic.
    Arith(ArithArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IterateArgs {
    #[arg(long, value_parser = parse_levels, allow_hyphen_values = true, default_value = "1,2,5,15")]
    pub levels: Levels,
    #[arg(long, default_value_t = 1001)]
    pub grid: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    #[arg(long, default_value_t = 1001)]
    pub grid: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BellScanArgs {
    /// Grid step, e.g. `1deg` or `0.0174533`.
    #[arg(long, value_parser = parse_angle, default_value = "1deg")]
    pub resolution: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LlnArgs {
    #[arg(long, value_parser = parse_levels, allow_hyphen_values = true, default_value = "1,2,3,4")]
    pub levels: Levels,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 25)]
    pub n_min: u64,
    #[arg(long, default_value_t = 75)]
    pub n_max: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LlnSimArgs {
    /// Trials per experiment.
    #[arg(long = "N", default_value_t = 100)]
    pub n: u64,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Level of the success probability.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub k: i32,
    /// Level of the arithmetic the bound is read in.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub l: i32,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Number of simulated experiments.
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SingletArgs {
    /// Angle between the detectors, radians or `deg`.
    #[arg(long, value_parser = parse_angle)]
    pub theta: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EntropyArgs {
    #[arg(long, value_parser = parse_probs)]
    pub probs: Probs,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FubiniArgs {
    /// JSON file with the components of |a>, each a number or [re, im].
    #[arg(long)]
    pub state_a: String,
    #[arg(long)]
    pub state_b: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ArithArgs {
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub level: i32,
    /// add, sub, mul or div.
    #[arg(long)]
    pub op: String,
    #[arg(allow_hyphen_values = true)]
    pub x: f64,
    #[arg(allow_hyphen_values = true)]
    pub y: f64,
}

/// Everything a run depends on. Two runs with equal configs produce the
/// same bytes.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub generator: GeneratorConfig,
    #[serde(flatten)]
    pub command: Command,
    pub seed: u64,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> CliResult<Self> {
        let generator = load_generator(&cli.generator)?;
        let config = RunConfig { generator, command: cli.command.clone(), seed: cli.seed };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("--{name} must be positive, got {v}")))
            }
        };
        match &self.command {
            Command::Iterate(a) => {
                if a.grid < 2 {
                    return Err(invalid("--grid must be at least 2"));
                }
                if a.levels.is_empty() {
                    return Err(invalid("--levels is empty"));
                }
            }
            Command::AlphaTheta(a) => {
                if a.grid < 2 {
                    return Err(invalid("--grid must be at least 2"));
                }
            }
            Command::BellScan(a) => positive("resolution", a.resolution)?,
            Command::Lln(a) => {
                positive("eps", a.eps)?;
                if a.n_min == 0 || a.n_min > a.n_max {
                    return Err(invalid(format!("need 1 <= --n-min <= --n-max, got {}..{}", a.n_min, a.n_max)));
                }
            }
            Command::LlnSim(a) => {
                positive("eps", a.eps)?;
                if a.n == 0 || a.trials == 0 {
                    return Err(invalid("--N and --trials must be positive"));
                }
            }
            Command::Singlet(_) | Command::Fubini(_) => {}
            Command::Entropy(a) => positive("alpha", a.alpha)?,
            Command::Arith(a) => {
                a.op.parse::<Op>()?;
            }
        }
        Ok(())
    }
}

/// A generator name, an inline JSON object, or a path to a JSON file.
pub fn load_generator(spec: &str) -> CliResult<GeneratorConfig> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else if std::path::Path::new(spec).is_file() {
        read_file(spec)?
    } else {
        let config = GeneratorConfig::named(spec);
        config.build()?;
        return Ok(config);
    };
    let config = GeneratorConfig::from_json(&text)?;
    config.build()?;
    Ok(config)
}

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn uniform_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

/// Runs a validated config and returns the text to write.
pub fn execute(config: &RunConfig) -> CliResult<String> {
    let g = ExtendedGenerator::new(config.generator.build()?);
    match &config.command {
        Command::Iterate(a) => {
            let ps = uniform_grid(a.grid, 0.0, 1.0);
            let mut columns = Vec::new();
            for &k in &a.levels {
                g.check_level(i64::from(k))?;
                columns.push(g.iterate_probabilities(k, &ps)?.0);
            }
            let mut out = String::from("p");
            for k in &a.levels {
                write!(out, ",g^{k}(p)").unwrap();
            }
            out.push('\n');
            for (i, p) in ps.iter().enumerate() {
                out.push_str(&float(*p));
                for c in &columns {
                    write!(out, ",{}", float(c[i])).unwrap();
                }
                out.push('\n');
            }
            Ok(out)
        }
        Command::AlphaTheta(a) => {
            let mut out = String::from("theta,alpha\n");
            for theta in uniform_grid(a.grid, 0.0, PI) {
                writeln!(out, "{},{}", float(theta), float(alpha_of_theta(theta)?)).unwrap();
            }
            Ok(out)
        }
        Command::BellScan(a) => Ok(json(&ch_scan(&g, a.resolution)?)),
        Command::Lln(a) => {
            let rows = fig3_table(&g, &a.levels, a.n_min..=a.n_max, a.eps)?;
            let mut out = String::from("level,N,bound\n");
            for r in rows {
                writeln!(out, "{},{},{}", r.level, r.n, float(r.bound)).unwrap();
            }
            Ok(out)
        }
        Command::LlnSim(a) => {
            let model = LevelBinomial::new(a.n, a.p, a.k, a.l)?;
            Ok(json(&model.simulate(&g, a.eps, a.trials, config.seed)?))
        }
        Command::Singlet(a) => Ok(json(&singlet_table(&g, a.theta)?)),
        Command::Entropy(a) => {
            #[derive(Serialize)]
            struct Report {
                alpha: f64,
                renyi_kn: f64,
                renyi_closed: f64,
                shannon: f64,
            }
            let d = Distribution::new(a.probs.clone())?;
            Ok(json(&Report {
                alpha: a.alpha,
                renyi_kn: renyi_kn(&d, a.alpha)?,
                renyi_closed: renyi_closed(&d, a.alpha)?,
                shannon: shannon(&d),
            }))
        }
        Command::Fubini(a) => {
            #[derive(Serialize)]
            struct Rung {
                k: i32,
                value: f64,
            }
            #[derive(Serialize)]
            struct Report {
                theta: f64,
                quantum_p: f64,
                hidden_p: f64,
                ladder: Vec<Rung>,
            }
            let sa = StateVector::from_json(&read_file(&a.state_a)?)?;
            let sb = StateVector::from_json(&read_file(&a.state_b)?)?;
            let theta = geodesic_distance(&sa, &sb)?;
            let quantum_p = theta.cos().powi(2);
            let hidden_p = hidden_prob(theta)?;
            let ladder = ladder(&g, quantum_p, -3, 3)?.into_iter().map(|(k, value)| Rung { k, value }).collect();
            Ok(json(&Report { theta, quantum_p, hidden_p, ladder }))
        }
        Command::Arith(a) => {
            let ctx = ArithmeticContext::new(&g, a.level)?;
            let op: Op = a.op.parse()?;
            Ok(format!("{}\n", float(ctx.arith(op, a.x, a.y)?)))
        }
    }
}

/// Runs `cli` and writes the result where `--out` says.
pub fn run(cli: &Cli) -> CliResult<()> {
    let config = RunConfig::from_cli(cli)?;
    let text = execute(&config)?;
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source }),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> CliResult<RunConfig> {
        let cli = Cli::try_parse_from(std::iter::once("nncalc").chain(args.iter().copied())).unwrap();
        RunConfig::from_cli(&cli)
    }

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0.5").unwrap(), 0.5);
        assert!((parse_angle("180deg").unwrap() - PI).abs() < 1e-15);
        assert!((parse_angle("1 deg").unwrap() - PI / 180.0).abs() < 1e-18);
        assert!(parse_angle("deg").is_err());
        assert!(parse_angle("inf").is_err());
    }

    #[test]
    fn generators() {
        assert_eq!(load_generator("sine").unwrap(), GeneratorConfig::named("sine"));
        let c = load_generator(r#"{"name":"convex","components":[{"name":"sine"},{"name":"identity"}],"weights":[0.5,0.5]}"#)
            .unwrap();
        assert_eq!(c.components.len(), 2);
        assert!(load_generator("cosine").is_err());
        assert!(load_generator(r#"{"name":"sine","extra":1}"#).is_err());
    }

    #[test]
    fn validation() {
        assert_eq!(config(&["iterate", "--grid", "1"]).unwrap_err().exit_code(), 2);
        assert_eq!(config(&["lln", "--n-min", "10", "--n-max", "5"]).unwrap_err().exit_code(), 2);
        assert_eq!(config(&["arith", "--op", "pow", "1", "2"]).unwrap_err().exit_code(), 2);
        assert!(config(&["iterate", "--levels", "-15,0,1"]).is_ok());
    }

    #[test]
    fn outputs() {
        let out = execute(&config(&["lln", "--levels", "1", "--n-min", "50", "--n-max", "50"]).unwrap()).unwrap();
        assert_eq!(out, "level,N,bound\n1,50,5.0000000000000000e-1\n");
        let out = execute(&config(&["iterate", "--levels", "0", "--grid", "3"]).unwrap()).unwrap();
        assert_eq!(out.lines().nth(2).unwrap(), "5.0000000000000000e-1,5.0000000000000000e-1");
        let out = execute(&config(&["arith", "--level", "1", "--op", "mul", "0.5", "0.5"]).unwrap()).unwrap();
        // g(f(½)·f(½)) = g(¼) = sin²(π/8)
        let v: f64 = out.trim().parse().unwrap();
        assert!((v - (PI / 8.0).sin().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn division_by_zero_is_numeric() {
        let c = config(&["arith", "--level", "0", "--op", "div", "1", "0"]).unwrap();
        assert_eq!(execute(&c).unwrap_err().exit_code(), 3);
    }
}
