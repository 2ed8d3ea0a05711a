//! A concrete self-delimiting prefix machine and resource-bounded
//! complexity, algorithmic probability and string information on top of it.
//!
//! Programs are read three bits at a time:
//!
//! | opcode | mnemonic  | effect                                           |
//! |--------|-----------|--------------------------------------------------|
//! | `000`  | HALT      | stop, the output is the result                   |
//! | `001`  | OUT0      | append `0`                                       |
//! | `010`  | OUT1      | append `1`                                       |
//! | `011`  | READAUX   | append the next aux bit, diverge if none is left |
//! | `100`  | DUP       | append a copy of the current output              |
//! | `101`  | OUTAUXALL | append every remaining aux bit                   |
//! | `110`  | -         | diverge                                          |
//! | `111`  | -         | diverge                                          |
//!
//! Every instruction, HALT included, costs one step. An append that would
//! make the output longer than the budget's `M` diverges. The program of a
//! halting run is exactly the bits consumed through HALT, so the set of
//! halting programs is prefix-free.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;

pub const OPCODE_BITS: usize = 3;

/// Largest `L` accepted by [`MachineBudget::validate`]; keeps dyadic masses
/// representable as `u128` numerators over `2^L`.
pub const MAX_PROGRAM_BITS: u32 = 120;

/// Default cap on `2^(L+1)` for full enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 31;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
    #[error("enumeration at L={bits} needs 2^{} candidates, above the cap of {cap}", bits + 1)]
    EnumerationCap { bits: u32, cap: u64 },
}

/// Resource bound `(L, T, M)`: program bits, VM steps, output bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MachineBudget {
    pub max_program_bits: u32,
    pub max_steps: u64,
    pub max_output_bits: u32,
}

impl Default for MachineBudget {
    fn default() -> Self {
        MachineBudget {
            max_program_bits: 18,
            max_steps: 10_000,
            max_output_bits: 64,
        }
    }
}

impl MachineBudget {
    pub fn new(
        max_program_bits: u32,
        max_steps: u64,
        max_output_bits: u32,
    ) -> Result<Self, MachineError> {
        let b = MachineBudget {
            max_program_bits,
            max_steps,
            max_output_bits,
        };
        b.validate()?;
        Ok(b)
    }

    /// Default `T` and `M` with the given `L`.
    pub fn with_program_bits(max_program_bits: u32) -> Self {
        MachineBudget {
            max_program_bits,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        if self.max_program_bits < OPCODE_BITS as u32 {
            return Err(MachineError::InvalidBudget(format!(
                "L={} is below the 3-bit HALT program",
                self.max_program_bits
            )));
        }
        if self.max_program_bits > MAX_PROGRAM_BITS {
            return Err(MachineError::InvalidBudget(format!(
                "L={} exceeds the supported maximum {MAX_PROGRAM_BITS}",
                self.max_program_bits
            )));
        }
        if self.max_steps < 1 {
            return Err(MachineError::InvalidBudget("T must be at least 1".into()));
        }
        if self.max_output_bits < 1 {
            return Err(MachineError::InvalidBudget("M must be at least 1".into()));
        }
        Ok(())
    }

    /// Most instructions (HALT included) a halting program can execute.
    fn max_instructions(&self) -> usize {
        let by_bits = self.max_program_bits as usize / OPCODE_BITS;
        by_bits.min(self.max_steps.min(usize::MAX as u64) as usize)
    }
}

impl fmt::Display for MachineBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "L={},T={},M={}",
            self.max_program_bits, self.max_steps, self.max_output_bits
        )
    }
}

/// Parses `L=..,T=..,M=..`; omitted components keep their defaults.
impl FromStr for MachineBudget {
    type Err = MachineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut b = MachineBudget::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                MachineError::InvalidBudget(format!("expected KEY=VALUE, got {part:?}"))
            })?;
            let bad = || MachineError::InvalidBudget(format!("bad value in {part:?}"));
            match key.trim() {
                "L" => b.max_program_bits = value.trim().parse().map_err(|_| bad())?,
                "T" => b.max_steps = value.trim().parse().map_err(|_| bad())?,
                "M" => b.max_output_bits = value.trim().parse().map_err(|_| bad())?,
                other => {
                    return Err(MachineError::InvalidBudget(format!(
                        "unknown budget key {other:?}"
                    )))
                }
            }
        }
        b.validate()?;
        Ok(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Opcode {
    Halt,
    Out0,
    Out1,
    ReadAux,
    Dup,
    OutAuxAll,
    Diverge,
}

impl Opcode {
    pub const ALL_CODES: [u8; 8] = [0, 1, 2, 3, 4, 5, 6, 7];

    pub fn decode(code: u8) -> Opcode {
        match code {
            0 => Opcode::Halt,
            1 => Opcode::Out0,
            2 => Opcode::Out1,
            3 => Opcode::ReadAux,
            4 => Opcode::Dup,
            5 => Opcode::OutAuxAll,
            _ => Opcode::Diverge,
        }
    }
}

/// One halting run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaltingRecord {
    /// Bits consumed through HALT; a multiple of three.
    pub program: BitString,
    pub output: BitString,
    pub aux_consumed: usize,
    pub steps: u64,
}

/// Why a run did not produce a [`HaltingRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum NonHalting {
    #[error("step budget exhausted")]
    StepLimit,
    #[error("program bits exhausted before HALT")]
    ProgramExhausted,
    #[error("program longer than the L budget")]
    ProgramTooLong,
    #[error("READAUX with no aux bits left")]
    AuxExhausted,
    #[error("output exceeds the M budget")]
    OutputOverflow,
    #[error("divergent opcode")]
    DivergentOpcode,
}

/// Mutable VM state shared by [`run`] and the enumerators.
struct Vm<'a> {
    aux: &'a [bool],
    aux_pos: usize,
    output: Vec<bool>,
    max_output: usize,
}

impl<'a> Vm<'a> {
    fn new(aux: &'a BitString, budget: &MachineBudget) -> Self {
        Vm {
            aux: aux.bits(),
            aux_pos: 0,
            output: Vec::new(),
            max_output: budget.max_output_bits as usize,
        }
    }

    /// Applies a non-HALT opcode. On error the state is unchanged.
    fn step(&mut self, op: Opcode) -> Result<(), NonHalting> {
        match op {
            Opcode::Halt => Ok(()),
            Opcode::Out0 | Opcode::Out1 => {
                self.check_room(1)?;
                self.output.push(op == Opcode::Out1);
                Ok(())
            }
            Opcode::ReadAux => {
                let bit = *self.aux.get(self.aux_pos).ok_or(NonHalting::AuxExhausted)?;
                self.check_room(1)?;
                self.output.push(bit);
                self.aux_pos += 1;
                Ok(())
            }
            Opcode::Dup => {
                let n = self.output.len();
                self.check_room(n)?;
                self.output.extend_from_within(..n);
                Ok(())
            }
            Opcode::OutAuxAll => {
                let rest = &self.aux[self.aux_pos..];
                self.check_room(rest.len())?;
                self.output.extend_from_slice(rest);
                self.aux_pos = self.aux.len();
                Ok(())
            }
            Opcode::Diverge => Err(NonHalting::DivergentOpcode),
        }
    }

    fn check_room(&self, extra: usize) -> Result<(), NonHalting> {
        if self.output.len() + extra > self.max_output {
            Err(NonHalting::OutputOverflow)
        } else {
            Ok(())
        }
    }
}

fn opcode_bits(code: u8) -> [bool; 3] {
    [code & 4 != 0, code & 2 != 0, code & 1 != 0]
}

/// Runs `program` on `aux`. Bits after the HALT instruction are ignored and
/// do not appear in the returned record.
pub fn run(
    program: &BitString,
    aux: &BitString,
    budget: &MachineBudget,
) -> Result<HaltingRecord, NonHalting> {
    let mut vm = Vm::new(aux, budget);
    let bits = program.bits();
    let mut pc = 0;
    let mut steps = 0u64;
    loop {
        if pc + OPCODE_BITS > bits.len() {
            return Err(NonHalting::ProgramExhausted);
        }
        if pc + OPCODE_BITS > budget.max_program_bits as usize {
            return Err(NonHalting::ProgramTooLong);
        }
        if steps >= budget.max_steps {
            return Err(NonHalting::StepLimit);
        }
        let code = bits[pc..pc + OPCODE_BITS]
            .iter()
            .fold(0u8, |acc, b| acc << 1 | *b as u8);
        pc += OPCODE_BITS;
        steps += 1;
        match Opcode::decode(code) {
            Opcode::Halt => {
                return Ok(HaltingRecord {
                    program: BitString::from_bools(bits[..pc].to_vec()),
                    output: BitString::from_bools(vm.output),
                    aux_consumed: vm.aux_pos,
                    steps,
                })
            }
            op => vm.step(op)?,
        }
    }
}

/// Every halting program of length at most `L`, in lexicographic order,
/// using the default enumeration cap.
pub fn enumerate(
    aux: &BitString,
    budget: &MachineBudget,
) -> Result<Vec<HaltingRecord>, MachineError> {
    enumerate_with_cap(aux, budget, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_with_cap(
    aux: &BitString,
    budget: &MachineBudget,
    cap: u64,
) -> Result<Vec<HaltingRecord>, MachineError> {
    budget.validate()?;
    let bits = budget.max_program_bits;
    if bits + 1 >= 64 || (1u64 << (bits + 1)) > cap {
        return Err(MachineError::EnumerationCap { bits, cap });
    }
    let max_instr = budget.max_instructions();
    if max_instr == 0 {
        return Ok(Vec::new());
    }
    // The tree is split on the first opcode; concatenating the subtrees in
    // opcode order keeps the result lexicographic for any thread count.
    let parts: Vec<Vec<HaltingRecord>> = Opcode::ALL_CODES
        .par_iter()
        .map(|&first| {
            let mut out = Vec::new();
            let mut vm = Vm::new(aux, budget);
            let mut program = Vec::with_capacity(max_instr * OPCODE_BITS);
            program.extend_from_slice(&opcode_bits(first));
            match Opcode::decode(first) {
                Opcode::Halt => out.push(HaltingRecord {
                    program: BitString::from_bools(program),
                    output: BitString::new(),
                    aux_consumed: 0,
                    steps: 1,
                }),
                op => {
                    if max_instr >= 2 && vm.step(op).is_ok() {
                        descend(&mut vm, &mut program, 1, max_instr, &mut out);
                    }
                }
            }
            out
        })
        .collect();
    Ok(parts.into_iter().flatten().collect())
}

/// `executed` instructions have run; the next one may be HALT if
/// `executed < max_instr`.
fn descend(
    vm: &mut Vm<'_>,
    program: &mut Vec<bool>,
    executed: usize,
    max_instr: usize,
    out: &mut Vec<HaltingRecord>,
) {
    if executed >= max_instr {
        return;
    }
    for code in Opcode::ALL_CODES {
        let op = Opcode::decode(code);
        program.extend_from_slice(&opcode_bits(code));
        if op == Opcode::Halt {
            out.push(HaltingRecord {
                program: BitString::from_bools(program.clone()),
                output: BitString::from_bools(vm.output.clone()),
                aux_consumed: vm.aux_pos,
                steps: executed as u64 + 1,
            });
        } else if executed + 1 < max_instr {
            let (len, pos) = (vm.output.len(), vm.aux_pos);
            if vm.step(op).is_ok() {
                descend(vm, program, executed + 1, max_instr, out);
                vm.output.truncate(len);
                vm.aux_pos = pos;
            }
        }
        program.truncate(program.len() - OPCODE_BITS);
    }
}

/// Writes `program_hex,output_hex,steps,aux_consumed`, one line per record.
pub fn write_dump<W: Write>(records: &[HaltingRecord], mut w: W) -> io::Result<()> {
    for r in records {
        writeln!(
            w,
            "{},{},{},{}",
            r.program.to_hex(),
            r.output.to_hex(),
            r.steps,
            r.aux_consumed
        )?;
    }
    Ok(())
}

/// Exact dyadic rational `numer / 2^exp`, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Dyadic {
    numer: u128,
    exp: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { numer: 0, exp: 0 };

    pub fn new(numer: u128, exp: u32) -> Self {
        assert!(exp <= 127, "dyadic exponent out of range");
        Dyadic { numer, exp }.reduced()
    }

    /// `2^-exp`.
    pub fn pow2_neg(exp: u32) -> Self {
        Dyadic::new(1, exp)
    }

    pub fn numer(&self) -> u128 {
        self.numer
    }

    pub fn exp(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.numer == 0
    }

    fn reduced(mut self) -> Self {
        if self.numer == 0 {
            return Dyadic::ZERO;
        }
        let tz = self.numer.trailing_zeros().min(self.exp);
        self.numer >>= tz;
        self.exp -= tz;
        self
    }

    fn numer_at(&self, exp: u32) -> u128 {
        self.numer
            .checked_shl(exp - self.exp)
            .filter(|v| v >> (exp - self.exp) == self.numer)
            .expect("dyadic overflow")
    }

    pub fn to_f64(&self) -> f64 {
        self.numer as f64 * (-(self.exp as f64)).exp2()
    }
}

impl std::ops::Add for Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: Dyadic) -> Dyadic {
        let exp = self.exp.max(rhs.exp);
        Dyadic::new(self.numer_at(exp) + rhs.numer_at(exp), exp)
    }
}

impl std::iter::Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::ZERO, |a, b| a + b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let exp = self.exp.max(other.exp);
        self.numer_at(exp).cmp(&other.numer_at(exp))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.numer)
        } else {
            write!(f, "{}/2^{}", self.numer, self.exp)
        }
    }
}

/// Prefix complexity in bits, or `Infinite` when nothing within the budget
/// produces the string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Complexity {
    Finite(u32),
    Infinite,
}

impl Complexity {
    pub fn finite(self) -> Option<u32> {
        match self {
            Complexity::Finite(k) => Some(k),
            Complexity::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Complexity::Finite(_))
    }
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Complexity::Finite(k) => write!(f, "{k}"),
            Complexity::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InfoError {
    #[error("i({x}:{y}) is undefined at {budget}: K({missing}) is infinite (raise the budget)")]
    Undefined {
        x: BitString,
        y: BitString,
        missing: BitString,
        budget: MachineBudget,
    },
    #[error("string \"{0}\" is not covered by this complexity table")]
    NotCovered(BitString),
}

/// Complexity and probability of a single target, computed by a dynamic
/// program over `(output length, aux position)`.
///
/// Every instruction only appends to the output, so any run that ends with
/// output `x` keeps its output a prefix of `x` throughout; the count of
/// such runs per length is exact without visiting other programs.
fn analyze_target(x: &BitString, aux: &BitString, budget: &MachineBudget) -> (Complexity, Dyadic) {
    let max_out = budget.max_output_bits as usize;
    if x.len() > max_out {
        return (Complexity::Infinite, Dyadic::ZERO);
    }
    let xs = x.bits();
    let aux = aux.bits();
    let max_instr = budget.max_instructions();

    let mut best: Option<u32> = None;
    let mut mass = Dyadic::ZERO;
    // (output length, aux position) -> number of distinct opcode sequences
    let mut layer: HashMap<(usize, usize), u128> = HashMap::from([((0, 0), 1)]);
    for executed in 0..max_instr {
        let program_bits = ((executed + 1) * OPCODE_BITS) as u32;
        let halting: u128 = layer
            .iter()
            .filter(|((len, _), _)| *len == xs.len())
            .map(|(_, w)| w)
            .sum();
        if halting > 0 {
            best.get_or_insert(program_bits);
            mass = mass + Dyadic::new(halting, program_bits);
        }
        if executed + 1 >= max_instr {
            break;
        }
        let mut next: HashMap<(usize, usize), u128> = HashMap::new();
        for (&(len, pos), &ways) in &layer {
            let mut push = |state: (usize, usize)| *next.entry(state).or_insert(0) += ways;
            if len < xs.len() {
                // OUT0 / OUT1: exactly one of them extends the prefix.
                push((len + 1, pos));
                if pos < aux.len() && aux[pos] == xs[len] {
                    push((len + 1, pos + 1));
                }
            }
            // DUP
            if 2 * len <= xs.len() && xs[len..2 * len] == xs[..len] {
                push((2 * len, pos));
            }
            // OUTAUXALL
            let rest = &aux[pos..];
            if len + rest.len() <= xs.len() && xs[len..len + rest.len()] == *rest {
                push((len + rest.len(), aux.len()));
            }
        }
        layer = next;
    }
    let k = best.map_or(Complexity::Infinite, Complexity::Finite);
    (k, mass)
}

/// `K(x/aux)` at the budget: the shortest halting program with output `x`.
pub fn complexity(x: &BitString, aux: &BitString, budget: &MachineBudget) -> Complexity {
    analyze_target(x, aux, budget).0
}

/// `m(x/aux)` at the budget: total `2^-|p|` over halting programs with output `x`.
pub fn algorithmic_probability(x: &BitString, aux: &BitString, budget: &MachineBudget) -> Dyadic {
    analyze_target(x, aux, budget).1
}

/// `K(x,y)`, the complexity of `<x>y`.
pub fn joint_complexity(
    x: &BitString,
    y: &BitString,
    aux: &BitString,
    budget: &MachineBudget,
) -> Complexity {
    complexity(&BitString::pair(x, y), aux, budget)
}

/// `i(x:y) = K(x) + K(y) - K(x,y)`.
pub fn string_info(
    x: &BitString,
    y: &BitString,
    aux: &BitString,
    budget: &MachineBudget,
) -> Result<i64, InfoError> {
    combine_info(x, y, budget, |s| Ok(complexity(s, aux, budget)))
}

fn combine_info(
    x: &BitString,
    y: &BitString,
    budget: &MachineBudget,
    k: impl Fn(&BitString) -> Result<Complexity, InfoError>,
) -> Result<i64, InfoError> {
    let joint = BitString::pair(x, y);
    let mut total = 0i64;
    for (s, sign) in [(x, 1), (y, 1), (&joint, -1)] {
        match k(s)? {
            Complexity::Finite(v) => total += sign * v as i64,
            Complexity::Infinite => {
                return Err(InfoError::Undefined {
                    x: x.clone(),
                    y: y.clone(),
                    missing: s.clone(),
                    budget: *budget,
                })
            }
        }
    }
    Ok(total)
}

/// Total `2^-|p|` over all halting programs; at most 1.
pub fn kraft_sum(aux: &BitString, budget: &MachineBudget) -> Result<Dyadic, MachineError> {
    Ok(enumerate(aux, budget)?
        .iter()
        .map(|r| Dyadic::pow2_neg(r.program.len() as u32))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub k: u32,
    #[serde(skip)]
    pub m: Dyadic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Coverage {
    /// Built from a full enumeration: absent strings have infinite complexity.
    All,
    /// Only the listed strings were analysed.
    Targets(BTreeSet<BitString>),
}

/// Per-budget, per-aux map from strings to `(K, m)`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityTable {
    budget: MachineBudget,
    aux: BitString,
    coverage: Coverage,
    entries: BTreeMap<BitString, TableEntry>,
}

impl ComplexityTable {
    /// Full table from exhaustive enumeration.
    pub fn enumerate(aux: &BitString, budget: &MachineBudget) -> Result<Self, MachineError> {
        let records = enumerate(aux, budget)?;
        let mut entries: BTreeMap<BitString, TableEntry> = BTreeMap::new();
        for r in records {
            let len = r.program.len() as u32;
            entries
                .entry(r.output)
                .and_modify(|e| {
                    e.k = e.k.min(len);
                    e.m = e.m + Dyadic::pow2_neg(len);
                })
                .or_insert(TableEntry {
                    k: len,
                    m: Dyadic::pow2_neg(len),
                });
        }
        Ok(ComplexityTable {
            budget: *budget,
            aux: aux.clone(),
            coverage: Coverage::All,
            entries,
        })
    }

    /// Table covering exactly `targets`, without a full enumeration. Works
    /// at program budgets far beyond what enumeration can reach.
    pub fn for_targets<I>(
        aux: &BitString,
        budget: &MachineBudget,
        targets: I,
    ) -> Result<Self, MachineError>
    where
        I: IntoIterator<Item = BitString>,
    {
        budget.validate()?;
        let targets: BTreeSet<BitString> = targets.into_iter().collect();
        let list: Vec<&BitString> = targets.iter().collect();
        let analysed: Vec<(Complexity, Dyadic)> = list
            .par_iter()
            .map(|x| analyze_target(x, aux, budget))
            .collect();
        let entries = list
            .iter()
            .zip(analysed)
            .filter_map(|(x, (k, m))| k.finite().map(|k| ((*x).clone(), TableEntry { k, m })))
            .collect();
        Ok(ComplexityTable {
            budget: *budget,
            aux: aux.clone(),
            coverage: Coverage::Targets(targets),
            entries,
        })
    }

    /// Covers every string in `strings` and every pair encoding `<x>y` among
    /// them, which is what [`ComplexityTable::string_info`] needs.
    pub fn for_pairs(
        aux: &BitString,
        budget: &MachineBudget,
        strings: &[BitString],
    ) -> Result<Self, MachineError> {
        let mut targets: Vec<BitString> = strings.to_vec();
        for x in strings {
            for y in strings {
                targets.push(BitString::pair(x, y));
            }
        }
        Self::for_targets(aux, budget, targets)
    }

    pub fn budget(&self) -> &MachineBudget {
        &self.budget
    }

    pub fn aux(&self) -> &BitString {
        &self.aux
    }

    pub fn is_full(&self) -> bool {
        self.coverage == Coverage::All
    }

    fn covers(&self, x: &BitString) -> bool {
        match &self.coverage {
            Coverage::All => true,
            Coverage::Targets(t) => t.contains(x),
        }
    }

    /// Finite entries, in lexicographic order of the string.
    pub fn entries(&self) -> impl Iterator<Item = (&BitString, &TableEntry)> {
        self.entries.iter()
    }

    pub fn complexity(&self, x: &BitString) -> Result<Complexity, InfoError> {
        if !self.covers(x) {
            return Err(InfoError::NotCovered(x.clone()));
        }
        Ok(self
            .entries
            .get(x)
            .map_or(Complexity::Infinite, |e| Complexity::Finite(e.k)))
    }

    pub fn probability(&self, x: &BitString) -> Result<Dyadic, InfoError> {
        if !self.covers(x) {
            return Err(InfoError::NotCovered(x.clone()));
        }
        Ok(self.entries.get(x).map_or(Dyadic::ZERO, |e| e.m))
    }

    pub fn joint_complexity(&self, x: &BitString, y: &BitString) -> Result<Complexity, InfoError> {
        self.complexity(&BitString::pair(x, y))
    }

    pub fn string_info(&self, x: &BitString, y: &BitString) -> Result<i64, InfoError> {
        combine_info(x, y, &self.budget, |s| self.complexity(s))
    }

    /// Sum of all recorded masses (only meaningful for a full table).
    pub fn total_mass(&self) -> Dyadic {
        self.entries.values().map(|e| e.m).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn budget(l: u32) -> MachineBudget {
        MachineBudget::new(l, 10, 8).unwrap()
    }

    #[test]
    fn halt_alone() {
        let r = run(&b("000"), &BitString::new(), &budget(3)).unwrap();
        assert_eq!(r.output, BitString::new());
        assert_eq!(r.program, b("000"));
        assert_eq!(r.steps, 1);
    }

    #[test]
    fn out0_then_halt() {
        let r = run(&b("001000"), &BitString::new(), &MachineBudget::default()).unwrap();
        assert_eq!(r.output, b("0"));
    }

    #[test]
    fn dup_doubles_output() {
        let r = run(
            &b("001100100000"),
            &BitString::new(),
            &MachineBudget::default(),
        )
        .unwrap();
        assert_eq!(r.output, b("0000"));
        assert_eq!(r.steps, 4);
    }

    #[test]
    fn trailing_bits_are_not_part_of_the_program() {
        let r = run(
            &b("010000111"),
            &BitString::new(),
            &MachineBudget::default(),
        )
        .unwrap();
        assert_eq!(r.program, b("010000"));
        assert_eq!(r.output, b("1"));
    }

    #[test]
    fn aux_instructions() {
        let aux = b("101");
        let r = run(&b("011011000"), &aux, &MachineBudget::default()).unwrap();
        assert_eq!((r.output, r.aux_consumed), (b("10"), 2));
        let r = run(&b("011101000"), &aux, &MachineBudget::default()).unwrap();
        assert_eq!((r.output, r.aux_consumed), (b("101"), 3));
        assert_eq!(
            run(&b("011011011011000"), &aux, &MachineBudget::default()),
            Err(NonHalting::AuxExhausted)
        );
    }

    #[test]
    fn non_halting_reasons() {
        let d = MachineBudget::default();
        let e = BitString::new();
        assert_eq!(run(&b("001"), &e, &d), Err(NonHalting::ProgramExhausted));
        assert_eq!(run(&b("00100"), &e, &d), Err(NonHalting::ProgramExhausted));
        assert_eq!(run(&b("110000"), &e, &d), Err(NonHalting::DivergentOpcode));
        assert_eq!(run(&b("111000"), &e, &d), Err(NonHalting::DivergentOpcode));
        let tight = MachineBudget::new(18, 2, 64).unwrap();
        assert_eq!(run(&b("001001000"), &e, &tight), Err(NonHalting::StepLimit));
        let short = MachineBudget::new(6, 10, 64).unwrap();
        assert_eq!(
            run(&b("001001000"), &e, &short),
            Err(NonHalting::ProgramTooLong)
        );
        let narrow = MachineBudget::new(18, 10, 2).unwrap();
        assert_eq!(
            run(&b("001100100000"), &e, &narrow),
            Err(NonHalting::OutputOverflow)
        );
    }

    #[test]
    fn budget_validation_and_parsing() {
        assert!(MachineBudget::new(2, 1, 1).is_err());
        assert!(MachineBudget::new(3, 0, 1).is_err());
        assert!(MachineBudget::new(3, 1, 0).is_err());
        let b: MachineBudget = "L=12".parse().unwrap();
        assert_eq!(b, MachineBudget::new(12, 10_000, 64).unwrap());
        let b: MachineBudget = "L=9, T=5,M=7".parse().unwrap();
        assert_eq!(b, MachineBudget::new(9, 5, 7).unwrap());
        assert!("X=3".parse::<MachineBudget>().is_err());
        assert!("L=2".parse::<MachineBudget>().is_err());
        assert_eq!(
            MachineBudget::default()
                .to_string()
                .parse::<MachineBudget>()
                .unwrap(),
            MachineBudget::default()
        );
    }

    #[test]
    fn enumerate_small_budgets() {
        let e = BitString::new();
        for l in [3, 4, 5] {
            let recs = enumerate(&e, &budget(l)).unwrap();
            assert_eq!(recs.len(), 1, "L={l}");
            assert_eq!(recs[0].program, b("000"));
        }
        let progs: Vec<String> = enumerate(&e, &budget(6))
            .unwrap()
            .iter()
            .map(|r| r.program.to_string())
            .collect();
        assert_eq!(progs, ["000", "001000", "010000", "100000", "101000"]);
    }

    #[test]
    fn enumeration_cap() {
        let err = enumerate_with_cap(&BitString::new(), &budget(12), 1 << 12).unwrap_err();
        assert!(matches!(err, MachineError::EnumerationCap { bits: 12, .. }));
    }

    #[test]
    fn small_complexities() {
        let e = BitString::new();
        let d = MachineBudget::default();
        assert_eq!(complexity(&e, &e, &budget(3)), Complexity::Finite(3));
        assert_eq!(complexity(&b("0"), &e, &d), Complexity::Finite(6));
        assert_eq!(complexity(&b("0000"), &e, &d), Complexity::Finite(12));
        assert_eq!(complexity(&b("0"), &e, &budget(5)), Complexity::Infinite);
        assert_eq!(joint_complexity(&e, &e, &e, &d), Complexity::Finite(6));
        assert_eq!(string_info(&e, &e, &e, &d), Ok(0));
    }

    #[test]
    fn probability_of_empty_string() {
        let e = BitString::new();
        assert_eq!(
            algorithmic_probability(&e, &e, &budget(3)),
            Dyadic::pow2_neg(3)
        );
        // HALT, DUP HALT, OUTAUXALL HALT.
        assert_eq!(
            algorithmic_probability(&e, &e, &budget(6)),
            Dyadic::pow2_neg(3) + Dyadic::pow2_neg(6) + Dyadic::pow2_neg(6)
        );
    }

    #[test]
    fn undefined_is_reported_not_zero() {
        let e = BitString::new();
        let err = string_info(&b("0101"), &b("1"), &e, &budget(9)).unwrap_err();
        assert!(matches!(err, InfoError::Undefined { .. }));
    }

    #[test]
    fn targeted_table_matches_full_table() {
        for aux in [BitString::new(), b("101"), b("11010")] {
            for l in [3, 9, 12, 15, 18] {
                let bud = MachineBudget::new(l, 10_000, 64).unwrap();
                let full = ComplexityTable::enumerate(&aux, &bud).unwrap();
                let strings: Vec<BitString> = BitString::all_up_to(8).collect();
                let part = ComplexityTable::for_targets(&aux, &bud, strings.clone()).unwrap();
                for s in &strings {
                    assert_eq!(
                        full.complexity(s),
                        part.complexity(s),
                        "{s} aux={aux} L={l}"
                    );
                    assert_eq!(
                        full.probability(s),
                        part.probability(s),
                        "{s} aux={aux} L={l}"
                    );
                }
            }
        }
    }

    #[test]
    fn not_covered_is_an_error() {
        let t = ComplexityTable::for_targets(&BitString::new(), &budget(9), [b("0")]).unwrap();
        assert_eq!(t.complexity(&b("1")), Err(InfoError::NotCovered(b("1"))));
    }

    #[test]
    fn dyadic_arithmetic() {
        let half = Dyadic::pow2_neg(1);
        assert_eq!(half + half, Dyadic::new(1, 0));
        assert_eq!(Dyadic::new(4, 3), half);
        assert!(Dyadic::pow2_neg(3) < Dyadic::pow2_neg(2));
        assert_eq!(Dyadic::new(3, 2).to_f64(), 0.75);
        assert_eq!(Dyadic::new(3, 2).to_string(), "3/2^2");
    }

    #[test]
    fn dump_format() {
        let recs = enumerate(&BitString::new(), &budget(6)).unwrap();
        let mut buf = Vec::new();
        write_dump(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("0/3,,1,0"));
        assert_eq!(text.lines().nth(1), Some("08/6,0/1,2,0"));
    }
}
