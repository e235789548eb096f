//! The `qnk` command line.

use crate::error::Error;
use crate::report::Report;
use crate::theta::Precision;
use crate::verify::{header, run, Config};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "qnk",
    version,
    about = "Verify elliptic R-matrices and the algebras Q_{n,k}(E,τ)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Identities of R(z) itself
    Check {
        #[arg(value_enum)]
        what: CheckKind,
    },
    /// Ranks and kernels of F_d(−τ)
    Hilbert,
    /// Ranks, kernels and images of F_d(τ)
    Dual,
    /// Intersection lattice dimensions in V^⊗d
    Koszul,
    /// Pairings into the top degree of the dual algebra
    Frobenius,
    /// Degenerations as τ → 0
    Limits,
    /// Rank invariance under (1/n)Λ shifts
    Twist,
    /// A whole suite; `all` runs the checks listed in the config (every check by default)
    Report {
        #[arg(value_enum)]
        suite: Suite,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CheckKind {
    Qybe,
    Transforms,
    Det,
    Inverse,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PrecisionArg {
    Double,
    Extended,
}

#[derive(Args, Debug, Default)]
struct Opts {
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    k: Option<usize>,
    /// "re,im"
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_pair)]
    eta: Option<[f64; 2]>,
    /// "re,im"; default 0.1234 + 0.4321η
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_pair)]
    tau: Option<[f64; 2]>,
    #[arg(long, global = true)]
    d_max: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    precision: Option<PrecisionArg>,
    /// random samples per randomized identity
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// do not count ambiguous or refused results as failures
    #[arg(long, global = true)]
    allow_ambiguous: bool,
    /// JSON file with flat keys named like the flags (`d_max`, `allow_ambiguous`, ...)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// report wall_time as 0 so output is byte-stable
    #[arg(long, global = true)]
    no_timings: bool,
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [re, im] => Ok([
            re.parse().map_err(|e| format!("{re}: {e}"))?,
            im.parse().map_err(|e| format!("{im}: {e}"))?,
        ]),
        _ => Err(format!("expected \"re,im\", got \"{s}\"")),
    }
}

/// Everything the run needs once the file and the flags are merged.
#[derive(Debug)]
pub struct Settings {
    pub config: Config,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub allow_ambiguous: bool,
}

/// Parses a config file. Output keys (`out`, `format`, `allow_ambiguous`)
/// are split off; the rest must be [`Config`] fields.
pub fn load_config_file(path: &Path) -> crate::Result<Settings> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> crate::Result<Settings> {
    let bad = |e: String| Error::InvalidParams(format!("config: {e}"));
    let mut map: Map<String, Value> = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let out = match map.remove("out") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(v) => return Err(bad(format!("out must be a string, got {v}"))),
    };
    let format = match map.remove("format") {
        None | Some(Value::Null) => Format::Json,
        Some(Value::String(s)) => Format::from_str(&s, true).map_err(bad)?,
        Some(v) => return Err(bad(format!("format must be a string, got {v}"))),
    };
    let allow_ambiguous = match map.remove("allow_ambiguous") {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => b,
        Some(v) => return Err(bad(format!("allow_ambiguous must be a boolean, got {v}"))),
    };
    let config: Config = serde_json::from_value(Value::Object(map)).map_err(|e| bad(e.to_string()))?;
    Ok(Settings {
        config,
        out,
        format,
        allow_ambiguous,
    })
}

fn settings(cli: &Cli) -> crate::Result<Settings> {
    let mut s = match &cli.opts.config {
        Some(p) => load_config_file(p)?,
        None => Settings {
            config: Config::default(),
            out: None,
            format: Format::Json,
            allow_ambiguous: false,
        },
    };
    let o = &cli.opts;
    let c = &mut s.config;
    if let Some(v) = o.n {
        c.n = v;
    }
    if let Some(v) = o.k {
        c.k = v;
    }
    if let Some(v) = o.eta {
        c.eta = v;
    }
    if let Some(v) = o.tau {
        c.tau = Some(v);
    }
    if let Some(v) = o.d_max {
        c.d_max = v;
    }
    if let Some(v) = o.seed {
        c.seed = v;
    }
    if let Some(v) = o.precision {
        c.precision = match v {
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::Extended => Precision::Extended,
        };
    }
    if let Some(v) = o.trials {
        c.trials = v;
    }
    if o.no_timings {
        c.timings = false;
    }
    let checks: Option<Vec<&str>> = match &cli.command {
        Command::Check { what } => Some(vec![match what {
            CheckKind::Qybe => "qybe",
            CheckKind::Transforms => "transforms",
            CheckKind::Det => "det",
            CheckKind::Inverse => "inverse",
        }]),
        Command::Hilbert => Some(vec!["hilbert"]),
        Command::Dual => Some(vec!["dual"]),
        Command::Koszul => Some(vec!["koszul"]),
        Command::Frobenius => Some(vec!["frobenius"]),
        Command::Limits => Some(vec!["limits"]),
        Command::Twist => Some(vec!["twist"]),
        Command::Report { suite: Suite::All } => None,
    };
    if let Some(list) = checks {
        c.checks = list.into_iter().map(String::from).collect();
    }
    if let Some(p) = &o.out {
        s.out = Some(p.clone());
    }
    if let Some(f) = o.format {
        s.format = f;
    }
    s.allow_ambiguous |= o.allow_ambiguous;
    Ok(s)
}

pub fn render(report: &Report, format: Format) -> crate::Result<String> {
    match format {
        Format::Json => report.to_json().map(|mut s| {
            s.push('\n');
            s
        }),
        Format::Csv => report.to_csv(),
    }
}

/// Runs the command line and returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let s = match settings(&cli) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    if let Err(e) = s.config.validate().and_then(|_| s.config.params()) {
        let _ = writeln!(stderr, "error: {e}");
        return 2;
    }
    let _ = writeln!(stderr, "{}", header(&s.config));
    let report = match run(&s.config) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    let text = match render(&report, s.format) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    let written = match &s.out {
        Some(p) => std::fs::write(p, &text).map_err(|e| format!("{}: {e}", p.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return 2;
    }
    let m = report.summary;
    let _ = writeln!(
        stderr,
        "total={} pass={} fail={} ambiguous={} refused={}",
        m.total, m.pass, m.fail, m.ambiguous, m.refused
    );
    report.exit_code(s.allow_ambiguous)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("qnk").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn pairs() {
        assert_eq!(parse_pair("0.5,-1.25").unwrap(), [0.5, -1.25]);
        assert_eq!(parse_pair(" -1 , 2 ").unwrap(), [-1.0, 2.0]);
        assert!(parse_pair("1").is_err());
        assert!(parse_pair("a,b").is_err());
    }

    #[test]
    fn subcommands_select_checks() {
        let s = settings(&cli(&["check", "qybe", "--n", "2"])).unwrap();
        assert_eq!(s.config.checks, ["qybe"]);
        assert_eq!(s.config.n, 2);
        let s = settings(&cli(&["--k", "2", "hilbert", "--d-max", "3"])).unwrap();
        assert_eq!((s.config.k, s.config.d_max), (2, 3));
        assert_eq!(s.config.checks, ["hilbert"]);
        let s = settings(&cli(&["report", "all", "--eta", "-0.2,1.1", "--format", "csv"])).unwrap();
        assert_eq!(s.config.checks, ["all"]);
        assert_eq!(s.config.eta, [-0.2, 1.1]);
        assert_eq!(s.format, Format::Csv);
    }

    #[test]
    fn config_keys() {
        let s =
            parse_config(r#"{"n": 4, "d_max": 3, "out": "r.csv", "format": "csv", "allow_ambiguous": true}"#).unwrap();
        assert_eq!((s.config.n, s.config.d_max), (4, 3));
        assert_eq!(s.out, Some(PathBuf::from("r.csv")));
        assert_eq!(s.format, Format::Csv);
        assert!(s.allow_ambiguous);
        assert!(parse_config(r#"{"nn": 4}"#).is_err());
        assert!(parse_config(r#"{"format": "xml"}"#).is_err());
        assert!(parse_config("[1]").is_err());
    }
}
