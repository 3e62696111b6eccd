//! The `qcomp` command-line tool: reads JSON maps, ensembles and experiments,
//! runs the library computations and writes JSON reports.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcomp::deficiency::{classical_comparison_scan, deficiency, lecam_distance, thm1_verify, thm2_coro1_scan};
use qcomp::discrimination::{ensemble_from_cp_map, psucc, tomographic_states, Ensemble};
use qcomp::experiments::{
    classical_deficiency, coro2_scan, exp_deficiency, random_experiment, thm4_verify, Experiment,
};
use qcomp::norms::{diamond_norm, dual_diamond_norm};
use qcomp::random::{self, trial_rng};
use qcomp::sdp::{audit, Certificate};
use qcomp::{Error, HermitianMap};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "qcomp", version, about = "Channel norms, discrimination and deficiency computations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    run: RunConfig,
}

#[derive(Args, Debug, Clone)]
struct RunConfig {
    /// Tolerance used when counting violations.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Number of sampled instances (default 20, or 1 for `gen`).
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

impl RunConfig {
    fn trials(&self) -> usize {
        self.trials.unwrap_or(20)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Diamond norm of a Hermitian-preserving map.
    Diamond {
        #[arg(long)]
        map: PathBuf,
    },
    /// Dual diamond norm of a Hermitian-preserving map.
    Dual {
        #[arg(long)]
        map: PathBuf,
    },
    /// Optimal guessing probability of an ensemble.
    Psucc {
        #[arg(long)]
        ensemble: PathBuf,
    },
    /// Equiprobable ensemble of a completely positive map.
    EnsembleFromMap {
        #[arg(long)]
        map: PathBuf,
    },
    /// Deficiency of one channel with respect to another.
    Deficiency {
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        psi: PathBuf,
    },
    /// Le Cam distance of two channels.
    Lecam {
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        psi: PathBuf,
    },
    /// Deficiency of experiment `s` with respect to experiment `t`.
    ExpDeficiency {
        #[arg(long)]
        s: PathBuf,
        #[arg(long)]
        t: PathBuf,
    },
    /// Le Cam distance of two classical experiments.
    LecamClassical {
        #[arg(long)]
        s: PathBuf,
        #[arg(long)]
        t: PathBuf,
    },
    /// Randomized consistency checks for channel comparison.
    Verify {
        #[arg(long, value_enum)]
        suite: ChannelSuite,
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        psi: PathBuf,
        /// Number of outcomes for the classical comparison (default: output dimension).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Randomized consistency checks for experiment comparison.
    ExpVerify {
        #[arg(long, value_enum)]
        suite: ExperimentSuite,
        #[arg(long)]
        s: PathBuf,
        #[arg(long)]
        t: PathBuf,
        /// Complete reference experiment (default: tomographic states).
        #[arg(long)]
        s0: Option<PathBuf>,
    },
    /// Seeded random instances, one JSON document per line.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ChannelSuite {
    Thm1,
    Prop7,
    Coro1,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExperimentSuite {
    Thm4,
    Coro2,
}

#[derive(Subcommand, Debug)]
enum GenKind {
    Channel {
        #[arg(long, default_value_t = 2)]
        d_in: usize,
        #[arg(long, default_value_t = 2)]
        d_out: usize,
    },
    Ensemble {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    Experiment {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
enum Failure {
    Validation { kind: &'static str, message: String },
    Solver(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Validation { .. } => EXIT_VALIDATION,
            Failure::Solver(_) => EXIT_SOLVER,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Failure::Validation { kind, message } => {
                json!({ "error": { "kind": kind, "message": message } })
            }
            Failure::Solver(message) => {
                json!({ "error": { "kind": "solver", "message": message } })
            }
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Validation { kind: "io", message: format!("{}: {e}", path.display()) }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Solver { .. } => return Failure::Solver(e.to_string()),
            Error::Json(_) => "parse",
            Error::DimensionMismatch(_) | Error::SizeMismatch(_) => "dimension",
            Error::ShapeError(_) => "shape",
            Error::LabelUnknown(_) | Error::LabelMismatch(_) => "label",
            _ => "validation",
        };
        Failure::Validation { kind, message: e.to_string() }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct Residual {
    primal: f64,
    dual: f64,
    gap: f64,
}

#[derive(Serialize)]
struct Report {
    command: String,
    inputs: BTreeMap<String, String>,
    values: Value,
    certificates: BTreeMap<String, Certificate>,
    residuals: BTreeMap<String, Residual>,
    wall_time: f64,
}

struct Builder {
    command: &'static str,
    inputs: BTreeMap<String, String>,
    certificates: BTreeMap<String, Certificate>,
}

impl Builder {
    fn new(command: &'static str) -> Self {
        Builder { command, inputs: BTreeMap::new(), certificates: BTreeMap::new() }
    }

    fn read<T: DeserializeOwned>(&mut self, name: &str, path: &Path) -> Outcome<T> {
        self.inputs.insert(name.to_string(), path.display().to_string());
        let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::Validation { kind: "parse", message: format!("{}: {e}", path.display()) })
    }

    fn certify(&mut self, name: &str, c: Certificate) {
        self.certificates.insert(name.to_string(), c);
    }

    /// Records the worst status and residuals over `solves`.
    fn certify_all(&mut self, solves: &[Certificate]) {
        if let Some((first, rest)) = solves.split_first() {
            self.certify("all_solves", rest.iter().fold(*first, |a, c| a.merge(c)));
        }
    }

    fn finish(self, values: Value, start: Instant) -> Report {
        let residuals = self
            .certificates
            .iter()
            .map(|(k, c)| (k.clone(), Residual { primal: c.primal_infeas, dual: c.dual_infeas, gap: c.gap }))
            .collect();
        Report {
            command: self.command.to_string(),
            inputs: self.inputs,
            values,
            certificates: self.certificates,
            residuals,
            wall_time: start.elapsed().as_secs_f64(),
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types serialize")
}

/// Runs the tool on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let f = Failure::Validation { kind: "usage", message: e.to_string() };
            eprintln!("{}", f.to_json());
            return f.code();
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("{}", f.to_json());
            f.code()
        }
    }
}

fn execute(cli: Cli) -> Outcome<i32> {
    let mut cfg = cli.run;
    if !(cfg.tol > 0.0 && cfg.tol.is_finite()) {
        return Err(Failure::Validation { kind: "usage", message: "--tol must be positive".into() });
    }
    let gen = matches!(cli.command, Command::Gen { .. });
    cfg.trials.get_or_insert(if gen { 1 } else { 20 });
    if let Command::Gen { kind } = &cli.command {
        let lines = generate(kind, &cfg)?;
        emit(&cfg.output, &lines)?;
        return Ok(EXIT_OK);
    }
    let (report, code) = compute(cli.command, &cfg)?;
    let line = serde_json::to_string(&report).expect("reports serialize");
    emit(&cfg.output, &[line])?;
    Ok(code)
}

fn emit(output: &Option<PathBuf>, lines: &[String]) -> Outcome<()> {
    let mut text = lines.join("\n");
    text.push('\n');
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::io(p, e)),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::io(Path::new("<stdout>"), e)),
    }
}

fn compute(command: Command, cfg: &RunConfig) -> Outcome<(Report, i32)> {
    let start = Instant::now();
    let mut code = EXIT_OK;
    let (b, values) = match command {
        Command::Diamond { map } => {
            let mut b = Builder::new("diamond");
            let phi: HermitianMap = b.read("map", &map)?;
            let v = diamond_norm(&phi)?;
            b.certify("diamond", v.certificate);
            (b, json!({ "value": v.value }))
        }
        Command::Dual { map } => {
            let mut b = Builder::new("dual");
            let phi: HermitianMap = b.read("map", &map)?;
            let v = dual_diamond_norm(&phi)?;
            b.certify("dual", v.certificate);
            (b, json!({ "value": v.value }))
        }
        Command::Psucc { ensemble } => {
            let mut b = Builder::new("psucc");
            let e: Ensemble = b.read("ensemble", &ensemble)?;
            let p = psucc(&e)?;
            b.certify("psucc", p.certificate);
            (b, json!({ "value": p.value, "povm": to_value(&p.povm.elements()) }))
        }
        Command::EnsembleFromMap { map } => {
            let mut b = Builder::new("ensemble-from-map");
            let gamma: HermitianMap = b.read("map", &map)?;
            let e = ensemble_from_cp_map(&gamma)?;
            (b, json!({ "trace": gamma.choi().trace_re(), "ensemble": to_value(&e) }))
        }
        Command::Deficiency { phi, psi } => {
            let mut b = Builder::new("deficiency");
            let phi: HermitianMap = b.read("phi", &phi)?;
            let psi: HermitianMap = b.read("psi", &psi)?;
            let d = deficiency(&phi, &psi)?;
            b.certify("deficiency", d.certificate);
            let values = json!({
                "value": d.value,
                "witness_value": d.witness_value,
                "certified_gap": d.certified_gap,
                "postprocessing": to_value(&d.optimal_postprocessing),
                "witness": to_value(&d.witness),
            });
            (b, values)
        }
        Command::Lecam { phi, psi } => {
            let mut b = Builder::new("lecam");
            let phi: HermitianMap = b.read("phi", &phi)?;
            let psi: HermitianMap = b.read("psi", &psi)?;
            let v = lecam_distance(&phi, &psi)?;
            b.certify("lecam", v.certificate);
            (b, json!({ "value": v.value }))
        }
        Command::ExpDeficiency { s, t } => {
            let mut b = Builder::new("exp-deficiency");
            let s: Experiment = b.read("s", &s)?;
            let t: Experiment = b.read("t", &t)?;
            let d = exp_deficiency(&s, &t)?;
            b.certify("exp-deficiency", d.certificate);
            (b, json!({ "value": d.epsilon, "randomization": to_value(&d.channel) }))
        }
        Command::LecamClassical { s, t } => {
            let mut b = Builder::new("lecam-classical");
            let s: Experiment = b.read("s", &s)?;
            let t: Experiment = b.read("t", &t)?;
            let st = classical_deficiency(&s, &t)?;
            let ts = classical_deficiency(&t, &s)?;
            b.certify("s_t", st.certificate);
            b.certify("t_s", ts.certificate);
            let values = json!({
                "value": st.epsilon.max(ts.epsilon),
                "deficiency_s_t": st.epsilon,
                "deficiency_t_s": ts.epsilon,
            });
            (b, values)
        }
        Command::Verify { suite, phi, psi, k } => {
            let mut b = Builder::new("verify");
            let phi: HermitianMap = b.read("phi", &phi)?;
            let psi: HermitianMap = b.read("psi", &psi)?;
            let (outcome, solves) = audit(|| -> Outcome<(Value, bool)> {
                Ok(match suite {
                    ChannelSuite::Thm1 => {
                        let r = thm1_verify(&phi, &psi, cfg.trials(), cfg.seed, cfg.tol)?;
                        b.certify("deficiency", r.certificate);
                        (to_value(&r), r.violations > 0)
                    }
                    ChannelSuite::Prop7 => {
                        let k = k.unwrap_or(phi.d_out());
                        let r = classical_comparison_scan(&phi, &psi, k, cfg.trials(), cfg.seed)?;
                        (to_value(&r), !r.consistent)
                    }
                    ChannelSuite::Coro1 => {
                        let spanning = tomographic_states(phi.d_in());
                        let r = thm2_coro1_scan(&phi, &psi, &spanning, cfg.trials(), cfg.seed)?;
                        (to_value(&r), r.violation)
                    }
                })
            });
            let (values, bad) = outcome?;
            b.certify_all(&solves);
            if bad {
                code = EXIT_VIOLATION;
            }
            (b, json!({ "suite": suite_name(suite), "report": values }))
        }
        Command::ExpVerify { suite, s, t, s0 } => {
            let mut b = Builder::new("exp-verify");
            let s: Experiment = b.read("s", &s)?;
            let t: Experiment = b.read("t", &t)?;
            let (outcome, solves) = audit(|| -> Outcome<(Value, bool, &str)> {
                Ok(match suite {
                    ExperimentSuite::Thm4 => {
                        let r = thm4_verify(&s, &t, cfg.trials(), cfg.seed, cfg.tol)?;
                        b.certify("exp-deficiency", r.certificate);
                        (to_value(&r), r.violations > 0, "thm4")
                    }
                    ExperimentSuite::Coro2 => {
                        let s0: Experiment = match s0 {
                            Some(p) => b.read("s0", &p)?,
                            None => Experiment::from_states(tomographic_states(s.dim()))?,
                        };
                        let r = coro2_scan(&s, &t, &s0, cfg.trials(), cfg.seed)?;
                        (to_value(&r), r.violation, "coro2")
                    }
                })
            });
            let (values, bad, name) = outcome?;
            b.certify_all(&solves);
            if bad {
                code = EXIT_VIOLATION;
            }
            (b, json!({ "suite": name, "report": values }))
        }
        Command::Gen { .. } => unreachable!("handled before"),
    };
    Ok((b.finish(values, start), code))
}

fn suite_name(s: ChannelSuite) -> &'static str {
    match s {
        ChannelSuite::Thm1 => "thm1",
        ChannelSuite::Prop7 => "prop7",
        ChannelSuite::Coro1 => "coro1",
    }
}

fn positive(name: &str, v: usize) -> Outcome<()> {
    if v == 0 {
        return Err(Failure::Validation { kind: "usage", message: format!("--{name} must be at least 1") });
    }
    Ok(())
}

/// Serializes `v`, checks that it parses back to an equal value, and returns the line.
fn checked_line<T: Serialize + DeserializeOwned + PartialEq>(v: &T) -> Outcome<String> {
    let line = serde_json::to_string(v).expect("library types serialize");
    let back: T = serde_json::from_str(&line).map_err(Error::from)?;
    if &back != v {
        return Err(Failure::Validation { kind: "roundtrip", message: "emitted instance does not parse back".into() });
    }
    Ok(line)
}

fn generate(kind: &GenKind, cfg: &RunConfig) -> Outcome<Vec<String>> {
    positive("trials", cfg.trials())?;
    (0..cfg.trials() as u64)
        .map(|i| {
            let mut r = trial_rng(cfg.seed, i);
            match *kind {
                GenKind::Channel { d_in, d_out } => {
                    positive("d-in", d_in)?;
                    positive("d-out", d_out)?;
                    checked_line(&random::generic_channel(&mut r, d_in, d_out))
                }
                GenKind::Ensemble { dim, n } => {
                    positive("dim", dim)?;
                    positive("n", n)?;
                    let w = random::probability(&mut r, n);
                    let states: Vec<_> = (0..n).map(|_| random::state(&mut r, dim)).collect();
                    checked_line(&Ensemble::from_parts(&w, &states)?)
                }
                GenKind::Experiment { dim, n } => {
                    positive("dim", dim)?;
                    positive("n", n)?;
                    checked_line(&random_experiment(&mut r, dim, n))
                }
            }
        })
        .collect()
}
