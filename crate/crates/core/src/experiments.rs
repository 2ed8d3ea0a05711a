//! Seeded Monte Carlo studies: the exponential self-information of Born-rule
//! outcome distributions of Haar-random states, and the conservation slack
//! of information between probabilities under random channels.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::IndexedRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::codec::{self, PovmFile};
use crate::info::{self, Channel, FiniteProbability, InfoCalcError, PairwiseInfo};
use crate::machine::{ComplexityTable, InfoError, MachineBudget, MachineError};
use crate::quantum::{self, Povm, QuantumError};

pub const SCHEMA_VERSION: u32 = 1;

/// Budget used by the experiments unless overridden: 3-bit outcome labels
/// need `L = 33` before every pair complexity is finite.
pub const EXPERIMENT_BUDGET: MachineBudget = MachineBudget {
    max_program_bits: 33,
    max_steps: 10_000,
    max_output_bits: 64,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("budget too small for {context}: {source}")]
    Budget {
        context: String,
        #[source]
        source: InfoError,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    InfoCalc(#[from] InfoCalcError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Which measurement a no-information run uses for each `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PovmSpec {
    /// Computational-basis projectors, `2^n` outcomes.
    Basis,
    /// `outcomes` copies of `I/outcomes`.
    Uniform { outcomes: usize },
    /// Random POVM with the given outcome count; seeded per `n`.
    Random { outcomes: usize, seed: u64 },
    /// A fixed POVM; `n_values` must match its qubit count.
    Explicit { povm: PovmFile },
}

impl PovmSpec {
    pub fn build(&self, n: usize) -> Result<Povm, ExperimentError> {
        Ok(match self {
            PovmSpec::Basis => Povm::computational_basis(n)?,
            PovmSpec::Uniform { outcomes } => Povm::uniform(n, *outcomes)?,
            PovmSpec::Random { outcomes, seed } => {
                quantum::random_povm(n, *outcomes, seed.wrapping_add(n as u64))?
            }
            PovmSpec::Explicit { povm } => {
                let e = Povm::from_file(povm)?;
                if e.qubits() != n {
                    return Err(ExperimentError::Config(format!(
                        "explicit POVM acts on {} qubits, asked for n={n}",
                        e.qubits()
                    )));
                }
                e
            }
        })
    }
}

/// What goes on the aux tape when computing outcome complexities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relativization {
    /// `<E>`, the canonical serialization of the measurement.
    Povm,
    /// `<binary(n)>`, the qubit count only.
    Qubits,
}

impl Relativization {
    pub fn aux(&self, povm: &Povm) -> BitString {
        match self {
            Relativization::Povm => povm.aux(),
            Relativization::Qubits => codec::aux_for_integer(povm.qubits() as u64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoInfoConfig {
    pub povm: PovmSpec,
    pub n_values: Vec<usize>,
    pub samples_per_n: usize,
    pub budget: MachineBudget,
    pub seed: u64,
    pub relativization: Relativization,
}

impl Default for NoInfoConfig {
    fn default() -> Self {
        NoInfoConfig {
            povm: PovmSpec::Basis,
            n_values: vec![1, 2, 3],
            samples_per_n: 10_000,
            budget: EXPERIMENT_BUDGET,
            seed: 0,
            relativization: Relativization::Povm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationConfig {
    pub trials: usize,
    pub support_size: usize,
    /// Supports are drawn from all strings of at most this length.
    pub pool_max_len: usize,
    pub budget: MachineBudget,
    pub seed: u64,
}

impl Default for ConservationConfig {
    fn default() -> Self {
        ConservationConfig {
            trials: 1000,
            support_size: 3,
            pool_max_len: 2,
            budget: EXPERIMENT_BUDGET,
            seed: 0,
        }
    }
}

/// Summary of `i(p:p)` in bits over one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoBits {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerN {
    pub n: usize,
    /// Mean of `2^{i(p:p)}`.
    pub mean: f64,
    pub se: f64,
    pub samples: usize,
    pub outcomes: usize,
    pub aux_bits: usize,
    pub pair_info_min: i64,
    pub pair_info_max: i64,
    pub info_bits: InfoBits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub trials: usize,
    /// Largest `|slack|` over identity-channel controls.
    pub identity_max_abs: f64,
    /// Largest `|slack|` over constant channels applied to a point mass at
    /// their target.
    pub constant_max_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackSummary {
    pub trials: usize,
    pub max: f64,
    /// `max` as the hex of its IEEE-754 bits, for exact regression checks.
    pub max_bits: String,
    pub median: f64,
    pub mean: f64,
    pub min: f64,
    pub histogram: Vec<Bucket>,
    pub controls: Controls,
}

/// One per-sample value; written to the CSV next to the JSON report.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub group: usize,
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment_id: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub per_n: Vec<PerN>,
    pub slack: Option<SlackSummary>,
    pub budget: MachineBudget,
    pub schema_version: u32,
    #[serde(skip)]
    pub wall_time: f64,
    #[serde(skip)]
    pub rows: Vec<SampleRow>,
    #[serde(skip)]
    pub csv_header: String,
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn median_of_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Mean and standard error of the mean, summed in the given order.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Unit-width buckets `[k, k+1)` covering the data.
pub fn histogram(values: &[f64]) -> Vec<Bucket> {
    if values.is_empty() {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let hi = values
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .floor();
    let count = (hi - lo) as usize + 1;
    let mut buckets: Vec<Bucket> = (0..count)
        .map(|k| Bucket {
            lo: lo + k as f64,
            hi: lo + k as f64 + 1.0,
            count: 0,
        })
        .collect();
    for v in values {
        buckets[(v.floor() - lo) as usize].count += 1;
    }
    buckets
}

/// Pairwise information table over `labels`, or a budget error naming the
/// first undefined pair.
pub fn pairwise_info(
    labels: &[BitString],
    aux: &BitString,
    budget: &MachineBudget,
    context: &str,
) -> Result<PairwiseInfo, ExperimentError> {
    let table = ComplexityTable::for_pairs(aux, budget, labels)?;
    PairwiseInfo::new(labels, &table).map_err(|source| ExperimentError::Budget {
        context: context.to_string(),
        source,
    })
}

/// Estimates `E_psi[2^{i(E psi : E psi)}]` over Haar-random states for each
/// requested qubit count.
pub fn run_noinfo(config: &NoInfoConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    config.budget.validate()?;
    if config.samples_per_n == 0 || config.n_values.is_empty() {
        return Err(ExperimentError::Config(
            "need at least one n and one sample".into(),
        ));
    }
    let mut per_n = Vec::new();
    let mut rows = Vec::new();
    for &n in &config.n_values {
        let povm = config.povm.build(n)?;
        let aux = config.relativization.aux(&povm);
        let pw = pairwise_info(
            povm.labels(),
            &aux,
            &config.budget,
            &format!("n={n} outcome pairs"),
        )?;

        let chunks: Vec<Result<Vec<f64>, QuantumError>> =
            quantum::stream_sizes(config.samples_per_n)
                .into_par_iter()
                .enumerate()
                .map(|(stream, count)| {
                    let mut rng =
                        quantum::stream_rng(config.seed, (n as u64) << 32 | stream as u64);
                    (0..count)
                        .map(|_| {
                            let psi = quantum::haar_sample_with(n, &mut rng)?;
                            let p = povm.outcome_probabilities(&psi)?;
                            Ok(pw.exp_info(&p, &p))
                        })
                        .collect()
                })
                .collect();
        let mut values = Vec::with_capacity(config.samples_per_n);
        for c in chunks {
            values.extend(c?);
        }

        let (mean, se) = mean_and_se(&values);
        let bits = sorted(&values.iter().map(|v| v.log2()).collect::<Vec<_>>());
        per_n.push(PerN {
            n,
            mean,
            se,
            samples: values.len(),
            outcomes: povm.outcomes(),
            aux_bits: aux.len(),
            pair_info_min: pw.min_info(),
            pair_info_max: pw.max_info(),
            info_bits: InfoBits {
                min: bits[0],
                median: median_of_sorted(&bits),
                max: bits[bits.len() - 1],
            },
        });
        rows.extend(
            values
                .into_iter()
                .enumerate()
                .map(|(index, value)| SampleRow {
                    group: n,
                    index,
                    value,
                }),
        );
    }
    let kind = match config.povm {
        PovmSpec::Basis => "basis",
        PovmSpec::Uniform { .. } => "uniform",
        PovmSpec::Random { .. } => "random",
        PovmSpec::Explicit { .. } => "explicit",
    };
    Ok(ExperimentReport {
        experiment_id: format!("noinfo-{kind}-seed{}", config.seed),
        seed: config.seed,
        config: serde_json::to_value(config)?,
        per_n,
        slack: None,
        budget: config.budget,
        schema_version: SCHEMA_VERSION,
        wall_time: start.elapsed().as_secs_f64(),
        rows,
        csv_header: "n,sample,exp_self_info".into(),
    })
}

struct TrialOutcome {
    slack: f64,
    identity: f64,
    constant: f64,
}

fn random_probability<R: rand::Rng>(
    support: &[BitString],
    rng: &mut R,
) -> Result<FiniteProbability, InfoCalcError> {
    FiniteProbability::new(
        support
            .iter()
            .cloned()
            .zip(info::random_simplex(rng, support.len())),
    )
}

fn pick<R: rand::Rng>(pool: &[BitString], k: usize, rng: &mut R) -> Vec<BitString> {
    let mut s: Vec<BitString> = pool.choose_multiple(rng, k).cloned().collect();
    s.sort();
    s
}

fn conservation_trial(
    config: &ConservationConfig,
    pool: &[BitString],
    table: &ComplexityTable,
    trial: usize,
) -> Result<TrialOutcome, ExperimentError> {
    let k = config.support_size;
    let mut rng = quantum::stream_rng(config.seed, trial as u64);
    let inputs = pick(pool, k, &mut rng);
    let outputs = pick(pool, k, &mut rng);
    let q_support = pick(pool, k, &mut rng);
    let p = random_probability(&inputs, &mut rng)?;
    let q = random_probability(&q_support, &mut rng)?;
    let f = info::random_channel_with(&inputs, &outputs, &mut rng)?;
    let slack = info::conservation_slack(&f, &p, &q, table)?;

    let identity = info::conservation_slack(&Channel::identity(&inputs)?, &p, &q, table)?;
    let target = outputs[0].clone();
    let concentrated = FiniteProbability::point(target.clone());
    let constant = Channel::constant(std::slice::from_ref(&target), target.clone())?;
    let constant = info::conservation_slack(&constant, &concentrated, &q, table)?;
    Ok(TrialOutcome {
        slack,
        identity,
        constant,
    })
}

/// Draws random `(p, q, f)` and records `i(fp:q) - i(p:q)`. Each trial also
/// runs an identity-channel control on the same `(p, q)` and a constant
/// channel on a point mass already at its target; both must give zero.
pub fn run_conservation(config: &ConservationConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    config.budget.validate()?;
    let pool: Vec<BitString> = BitString::all_up_to(config.pool_max_len).collect();
    if config.support_size == 0 || config.support_size > pool.len() {
        return Err(ExperimentError::Config(format!(
            "support size {} must be in 1..={}",
            config.support_size,
            pool.len()
        )));
    }
    if config.trials == 0 {
        return Err(ExperimentError::Config("need at least one trial".into()));
    }
    let table = ComplexityTable::for_pairs(&BitString::new(), &config.budget, &pool)?;
    PairwiseInfo::new(&pool, &table).map_err(|source| ExperimentError::Budget {
        context: format!("strings of length <= {}", config.pool_max_len),
        source,
    })?;

    let outcomes: Vec<Result<TrialOutcome, ExperimentError>> = (0..config.trials)
        .into_par_iter()
        .map(|t| conservation_trial(config, &pool, &table, t))
        .collect();
    let mut slacks = Vec::with_capacity(config.trials);
    let mut identity_max = 0.0f64;
    let mut constant_max = 0.0f64;
    for o in outcomes {
        let o = o?;
        slacks.push(o.slack);
        identity_max = identity_max.max(o.identity.abs());
        constant_max = constant_max.max(o.constant.abs());
    }
    let s = sorted(&slacks);
    let max = s[s.len() - 1];
    let summary = SlackSummary {
        trials: config.trials,
        max,
        max_bits: format!("{:016x}", max.to_bits()),
        median: median_of_sorted(&s),
        mean: mean_and_se(&slacks).0,
        min: s[0],
        histogram: histogram(&slacks),
        controls: Controls {
            trials: config.trials,
            identity_max_abs: identity_max,
            constant_max_abs: constant_max,
        },
    };
    Ok(ExperimentReport {
        experiment_id: format!("conservation-k{}-seed{}", config.support_size, config.seed),
        seed: config.seed,
        config: serde_json::to_value(config)?,
        per_n: Vec::new(),
        slack: Some(summary),
        budget: config.budget,
        schema_version: SCHEMA_VERSION,
        wall_time: start.elapsed().as_secs_f64(),
        rows: slacks
            .into_iter()
            .enumerate()
            .map(|(index, value)| SampleRow {
                group: 0,
                index,
                value,
            })
            .collect(),
        csv_header: "group,trial,slack".into(),
    })
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.csv_header)?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.group, r.index, r.value)?;
        }
        Ok(())
    }
}

/// Path of the per-sample CSV written beside a report.
pub fn csv_path(path: &Path) -> PathBuf {
    path.with_extension("csv")
}

/// Writes the JSON report to `path` and per-sample values beside it.
pub fn emit_report(report: &ExperimentReport, path: &Path) -> Result<PathBuf, ExperimentError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, report.to_json()?)?;
    let csv = csv_path(path);
    let mut file = io::BufWriter::new(fs::File::create(&csv)?);
    report.write_csv(&mut file)?;
    file.flush()?;
    Ok(csv)
}
