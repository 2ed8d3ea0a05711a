//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 invalid value or input,
//! 3 budget exhaustion (infinite complexity, undefined information).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::bits::BitString;
use crate::codec::{self, PovmFile, StateFile};
use crate::experiments::{
    self, ConservationConfig, ExperimentError, NoInfoConfig, PovmSpec, Relativization,
};
use crate::info::{self, Channel, FiniteProbability, InfoCalcError};
use crate::machine::{self, Complexity, InfoError, MachineBudget, MachineError};
use crate::quantum::{self, Povm, PureState, QuantumError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<MachineError> for CliError {
    fn from(e: MachineError) -> Self {
        match e {
            MachineError::InvalidBudget(_) => CliError::Validation(e.to_string()),
            MachineError::EnumerationCap { .. } => CliError::Budget(e.to_string()),
        }
    }
}

impl From<InfoError> for CliError {
    fn from(e: InfoError) -> Self {
        CliError::Budget(e.to_string())
    }
}

impl From<InfoCalcError> for CliError {
    fn from(e: InfoCalcError) -> Self {
        match e {
            InfoCalcError::Info(inner) => inner.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<QuantumError> for CliError {
    fn from(e: QuantumError) -> Self {
        match e {
            QuantumError::Probability(inner) => inner.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Budget { .. } => CliError::Budget(e.to_string()),
            ExperimentError::Machine(m) => m.into(),
            ExperimentError::Quantum(q) => q.into(),
            ExperimentError::InfoCalc(i) => i.into(),
            ExperimentError::Io(io) => io.into(),
            ExperimentError::Config(_) | ExperimentError::Json(_) => {
                CliError::Validation(e.to_string())
            }
        }
    }
}

/// Every tunable parameter, as read from `--config` and echoed into
/// reports. Command-line flags override file values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<MachineBudget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povm: Option<PovmSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relativization: Option<Relativization>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_max_len: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overridden_by(self, other: RunConfig) -> RunConfig {
        RunConfig {
            budget: other.budget.or(self.budget),
            seed: other.seed.or(self.seed),
            samples: other.samples.or(self.samples),
            n: other.n.or(self.n),
            out: other.out.or(self.out),
            workers: other.workers.or(self.workers),
            povm: other.povm.or(self.povm),
            relativization: other.relativization.or(self.relativization),
            trials: other.trials.or(self.trials),
            support_size: other.support_size.or(self.support_size),
            pool_max_len: other.pool_max_len.or(self.pool_max_len),
        }
    }

    pub fn noinfo(&self) -> NoInfoConfig {
        let d = NoInfoConfig::default();
        NoInfoConfig {
            povm: self.povm.clone().unwrap_or(d.povm),
            n_values: self.n.clone().unwrap_or(d.n_values),
            samples_per_n: self.samples.unwrap_or(d.samples_per_n),
            budget: self.budget.unwrap_or(d.budget),
            seed: self.seed.unwrap_or(d.seed),
            relativization: self.relativization.unwrap_or(d.relativization),
        }
    }

    pub fn conservation(&self) -> ConservationConfig {
        let d = ConservationConfig::default();
        ConservationConfig {
            trials: self.trials.unwrap_or(d.trials),
            support_size: self.support_size.unwrap_or(d.support_size),
            pool_max_len: self.pool_max_len.unwrap_or(d.pool_max_len),
            budget: self.budget.unwrap_or(d.budget),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

fn parse_budget(s: &str) -> Result<MachineBudget, String> {
    s.parse().map_err(|e: MachineError| e.to_string())
}

/// `basis`, `uniform:M`, `random:M` or `random:M:SEED`.
fn parse_povm_spec(s: &str) -> Result<PovmSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| {
        p.parse::<u64>()
            .map_err(|_| format!("bad number {p:?} in {s:?}"))
    };
    match parts.as_slice() {
        ["basis"] => Ok(PovmSpec::Basis),
        ["uniform", m] => Ok(PovmSpec::Uniform {
            outcomes: num(m)? as usize,
        }),
        ["random", m] => Ok(PovmSpec::Random {
            outcomes: num(m)? as usize,
            seed: 0,
        }),
        ["random", m, seed] => Ok(PovmSpec::Random {
            outcomes: num(m)? as usize,
            seed: num(seed)?,
        }),
        _ => Err(format!(
            "unknown POVM spec {s:?}; use basis, uniform:M or random:M[:SEED]"
        )),
    }
}

fn parse_relativization(s: &str) -> Result<Relativization, String> {
    match s {
        "povm" => Ok(Relativization::Povm),
        "qubits" => Ok(Relativization::Qubits),
        _ => Err(format!("unknown relativization {s:?}; use povm or qubits")),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "algoinfo",
    version,
    about = "Resource-bounded algorithmic information and quantum measurement experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Machine budget, e.g. `L=18,T=10000,M=64`; omitted keys keep defaults.
    #[arg(long, global = true, value_parser = parse_budget)]
    pub budget: Option<MachineBudget>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Qubit counts, comma separated.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1)]
    pub n: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// JSON run configuration; command-line flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// A bit string given in exactly one of three forms.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct StringArg {
    /// 0/1 literal or `0x`-prefixed hex.
    #[arg(long = "string")]
    pub string: Option<String>,
    /// 0/1 literal.
    #[arg(long)]
    pub bits: Option<String>,
    /// Hex, optionally with a `/len` suffix.
    #[arg(long)]
    pub hex: Option<String>,
}

impl StringArg {
    fn value(&self) -> Result<BitString, CliError> {
        let r = match (&self.string, &self.bits, &self.hex) {
            (Some(s), _, _) => BitString::parse_cli(s),
            (_, Some(b), _) => BitString::from_bits(b),
            (_, _, Some(h)) => BitString::from_hex(h),
            _ => return Err(CliError::Usage("a string is required".into())),
        };
        r.map_err(|e| CliError::Validation(e.to_string()))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump every halting program (program_hex,output_hex,steps,aux_consumed).
    Enumerate {
        /// Aux tape as a 0/1 literal or 0x-hex.
        #[arg(long)]
        aux: Option<String>,
    },
    /// Prefix complexity of a string.
    K {
        #[command(flatten)]
        x: StringArg,
        #[arg(long)]
        aux: Option<String>,
        /// Also print the algorithmic probability.
        #[arg(long)]
        prob: bool,
    },
    /// Algorithmic information i(x:y) between two strings.
    InfoStrings {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        aux: Option<String>,
    },
    /// Information i(p:q) between probability files; with --channel also
    /// i(fp:q) and the slack.
    InfoProbs {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        channel: Option<PathBuf>,
        #[arg(long)]
        aux: Option<String>,
    },
    /// Born-rule outcome distribution of a state under a POVM.
    Measure {
        /// POVM file (JSON, or canonical serialization otherwise).
        #[arg(long, conflicts_with = "basis")]
        povm: Option<PathBuf>,
        /// Use the computational basis on --n qubits.
        #[arg(long)]
        basis: bool,
        /// State file (JSON, or canonical serialization otherwise); a Haar
        /// sample from --seed when absent.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Monte Carlo first and second moments of Haar-random states.
    HaarCheck {
        /// Write the estimated moment matrices as CSV here.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
    /// Mean of 2^{i(Eψ:Eψ)} over Haar-random states.
    ExpNoinfo {
        /// basis, uniform:M or random:M[:SEED]
        #[arg(long, value_parser = parse_povm_spec)]
        povm: Option<PovmSpec>,
        /// POVM file to use instead of a generated family.
        #[arg(long, conflicts_with = "povm")]
        povm_file: Option<PathBuf>,
        /// povm or qubits
        #[arg(long, value_parser = parse_relativization)]
        relativize: Option<Relativization>,
    },
    /// Conservation slack i(fp:q) - i(p:q) over random triples.
    ExpConservation {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        support_size: Option<usize>,
        #[arg(long)]
        pool_max_len: Option<usize>,
    },
    /// Check a POVM file for Hermiticity, positivity and completeness.
    ValidatePovm {
        #[arg(long)]
        file: PathBuf,
    },
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_povm(path: &Path) -> Result<Povm, CliError> {
    let bytes = read_file(path)?;
    if is_json(path) {
        let file: PovmFile = serde_json::from_slice(&bytes)?;
        Ok(Povm::from_file(&file)?)
    } else {
        Ok(Povm::from_canonical_bytes(&bytes)?)
    }
}

fn load_state(path: &Path) -> Result<PureState, CliError> {
    let bytes = read_file(path)?;
    if is_json(path) {
        let file: StateFile = serde_json::from_slice(&bytes)?;
        Ok(PureState::from_file(&file)?)
    } else {
        Ok(PureState::from_canonical_bytes(&bytes)?)
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = read_file(path)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn aux_arg(aux: &Option<String>) -> Result<BitString, CliError> {
    match aux {
        Some(s) => BitString::parse_cli(s).map_err(|e| CliError::Validation(e.to_string())),
        None => Ok(BitString::new()),
    }
}

fn single_n(config: &RunConfig) -> Result<usize, CliError> {
    match config.n.as_deref() {
        Some([n]) => Ok(*n),
        None => Ok(1),
        Some(_) => Err(CliError::Usage("this command takes a single --n".into())),
    }
}

fn write_or_print(
    out: &Option<PathBuf>,
    text: &str,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn dispatch<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                clap::error::ErrorKind::ValueValidation => 2,
                _ => 1,
            };
        }
    };
    match run(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let from_file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut flags = RunConfig {
        budget: cli.budget,
        seed: cli.seed,
        samples: cli.samples,
        n: cli.n.clone(),
        out: cli.out.clone(),
        workers: cli.workers,
        ..Default::default()
    };
    match &cli.command {
        Command::ExpNoinfo {
            povm,
            povm_file,
            relativize,
        } => {
            flags.povm = match povm_file {
                Some(path) => Some(PovmSpec::Explicit {
                    povm: load_povm(path)?.to_file(),
                }),
                None => povm.clone(),
            };
            flags.relativization = *relativize;
        }
        Command::ExpConservation {
            trials,
            support_size,
            pool_max_len,
        } => {
            flags.trials = *trials;
            flags.support_size = *support_size;
            flags.pool_max_len = *pool_max_len;
        }
        _ => {}
    }
    let config = from_file.overridden_by(flags);

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        if w == 0 {
            return Err(CliError::Validation("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| CliError::Io(e.to_string()))?;
    // Output is buffered so the work itself can run inside the pool.
    let mut out = Vec::new();
    let mut err = Vec::new();
    let result = pool.install(|| execute(&cli.command, &config, &mut out, &mut err));
    stdout.write_all(&out)?;
    stderr.write_all(&err)?;
    result
}

fn execute(
    command: &Command,
    config: &RunConfig,
    stdout: &mut Vec<u8>,
    stderr: &mut Vec<u8>,
) -> Result<(), CliError> {
    let budget = config.budget.unwrap_or_default();
    match command {
        Command::Enumerate { aux } => {
            let records = machine::enumerate(&aux_arg(aux)?, &budget)?;
            let mut buf = Vec::new();
            machine::write_dump(&records, &mut buf)?;
            write_or_print(&config.out, &String::from_utf8_lossy(&buf), stdout)?;
        }
        Command::K { x, aux, prob } => {
            let x = x.value()?;
            let aux = aux_arg(aux)?;
            let k = machine::complexity(&x, &aux, &budget);
            writeln!(stdout, "{k}")?;
            if *prob {
                let m = machine::algorithmic_probability(&x, &aux, &budget);
                writeln!(stdout, "{m}")?;
            }
            if k == Complexity::Infinite {
                return Err(CliError::Budget(format!(
                    "K(\"{x}\") is infinite at {budget}"
                )));
            }
        }
        Command::InfoStrings { x, y, aux } => {
            let parse =
                |s: &str| BitString::parse_cli(s).map_err(|e| CliError::Validation(e.to_string()));
            let i = machine::string_info(&parse(x)?, &parse(y)?, &aux_arg(aux)?, &budget)?;
            writeln!(stdout, "{i}")?;
        }
        Command::InfoProbs { p, q, channel, aux } => {
            let p: FiniteProbability = load_json(p)?;
            let q: FiniteProbability = load_json(q)?;
            p.check_budget(&budget)?;
            q.check_budget(&budget)?;
            let channel: Option<Channel> = channel.as_deref().map(load_json).transpose()?;
            let fp = channel
                .as_ref()
                .map(|f| info::transform(f, &p))
                .transpose()?;
            let mut strings: Vec<BitString> = p.support().chain(q.support()).cloned().collect();
            if let Some(fp) = &fp {
                strings.extend(fp.support().cloned());
            }
            strings.sort();
            strings.dedup();
            let table = machine::ComplexityTable::for_pairs(&aux_arg(aux)?, &budget, &strings)?;
            let ipq = info::prob_info(&p, &q, &table)?;
            let mut result = json!({ "info_pq": ipq });
            if let Some(fp) = &fp {
                let ifq = info::prob_info(fp, &q, &table)?;
                result["info_fpq"] = json!(ifq);
                result["slack"] = json!(ifq - ipq);
            }
            writeln!(stdout, "{}", serde_json::to_string_pretty(&result)?)?;
        }
        Command::Measure { povm, basis, state } => {
            let n = single_n(config)?;
            let e = match (povm, basis) {
                (Some(path), _) => load_povm(path)?,
                (None, true) => Povm::computational_basis(n)?,
                (None, false) => return Err(CliError::Usage("give --povm FILE or --basis".into())),
            };
            let psi = match state {
                Some(path) => load_state(path)?,
                None => quantum::haar_sample(e.qubits(), config.seed.unwrap_or(0))?,
            };
            let p = quantum::measure(&e, &psi)?;
            write_or_print(
                &config.out,
                &(serde_json::to_string_pretty(&p)? + "\n"),
                stdout,
            )?;
        }
        Command::HaarCheck { dump_dir } => {
            let samples = config.samples.unwrap_or(100_000);
            let seed = config.seed.unwrap_or(0);
            let mut rows = Vec::new();
            for &n in config.n.as_deref().unwrap_or(&[1, 2]) {
                let d = 1usize << n;
                let first = quantum::first_moment_estimate(n, samples, seed)?;
                let target = quantum::CMatrix::identity(d, d).unscale(d as f64);
                let second = quantum::second_moment_estimate(n, samples, seed)?;
                let proj = quantum::symmetric_projector(n)?;
                let scaled = proj.unscale(quantum::symmetric_dimension(n) as f64);
                let anti = quantum::CMatrix::identity(d * d, d * d) - &proj;
                let anti_block = &anti * &second * &anti;
                let anti_max = anti_block.iter().map(|z| z.norm()).fold(0.0, f64::max);
                rows.push(json!({
                    "n": n,
                    "samples": samples,
                    "first_moment_max_dev": quantum::max_abs_diff(&first, &target),
                    "second_moment_max_dev": quantum::max_abs_diff(&second, &scaled),
                    "antisymmetric_max": anti_max,
                    "symmetric_dimension": quantum::symmetric_dimension(n),
                }));
                if let Some(dir) = dump_dir {
                    fs::create_dir_all(dir)?;
                    fs::write(
                        dir.join(format!("first_moment_n{n}.csv")),
                        codec::matrix_to_csv(&first),
                    )?;
                    fs::write(
                        dir.join(format!("second_moment_n{n}.csv")),
                        codec::matrix_to_csv(&second),
                    )?;
                }
            }
            let text =
                serde_json::to_string_pretty(&json!({ "seed": seed, "results": rows }))? + "\n";
            write_or_print(&config.out, &text, stdout)?;
        }
        Command::ExpNoinfo { .. } => {
            let report = experiments::run_noinfo(&config.noinfo())?;
            finish_report(&report, config, stdout, stderr)?;
        }
        Command::ExpConservation { .. } => {
            let report = experiments::run_conservation(&config.conservation())?;
            finish_report(&report, config, stdout, stderr)?;
        }
        Command::ValidatePovm { file } => {
            let bytes = read_file(file)?;
            let elements = if is_json(file) {
                let f: PovmFile = serde_json::from_slice(&bytes)?;
                f.elements
                    .iter()
                    .map(codec::matrix_from_json)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::Validation(e.to_string()))?
            } else {
                codec::parse_canonical_matrices(&bytes)
                    .map_err(|e| CliError::Validation(e.to_string()))?
            };
            match quantum::validate_povm(elements) {
                Ok(e) => writeln!(
                    stdout,
                    "valid: {} qubit(s), {} outcome(s)",
                    e.qubits(),
                    e.outcomes()
                )?,
                Err(e) => return Err(CliError::Validation(format!("{}: {e}", e.condition()))),
            }
        }
    }
    Ok(())
}

fn finish_report(
    report: &experiments::ExperimentReport,
    config: &RunConfig,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    match &config.out {
        Some(path) => {
            let csv = experiments::emit_report(report, path)?;
            writeln!(stdout, "wrote {} and {}", path.display(), csv.display())?;
        }
        None => stdout.write_all(report.to_json()?.as_bytes())?,
    }
    writeln!(stderr, "wall time: {:.3} s", report.wall_time)?;
    Ok(())
}
