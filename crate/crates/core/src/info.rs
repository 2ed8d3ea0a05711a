//! Information between finitely supported probabilities, channels acting on
//! them, and the conservation slack `i(fp:q) - i(p:q)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::machine::{ComplexityTable, InfoError, MachineBudget};

/// Tolerance on probability totals and channel column sums.
pub const EPS_NORM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InfoCalcError {
    #[error("invalid probability: {0}")]
    InvalidProbability(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("channel has no column for input \"{0}\"")]
    MissingColumn(BitString),
    #[error(transparent)]
    Info(#[from] InfoError),
}

/// A nonnegative measure on finitely many bit strings with total in
/// `(0, 1 + EPS_NORM]`. Only strings with positive mass are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteProbability {
    mass: BTreeMap<BitString, f64>,
    total: f64,
}

impl FiniteProbability {
    pub fn new<I>(masses: I) -> Result<Self, InfoCalcError>
    where
        I: IntoIterator<Item = (BitString, f64)>,
    {
        let mut mass = BTreeMap::new();
        for (x, v) in masses {
            if !v.is_finite() || v < 0.0 {
                return Err(InfoCalcError::InvalidProbability(format!(
                    "mass {v} on \"{x}\""
                )));
            }
            if mass.insert(x.clone(), v).is_some() {
                return Err(InfoCalcError::InvalidProbability(format!(
                    "\"{x}\" listed twice"
                )));
            }
        }
        mass.retain(|_, v| *v > 0.0);
        let total: f64 = mass.values().sum();
        if total <= 0.0 || total > 1.0 + EPS_NORM {
            return Err(InfoCalcError::InvalidProbability(format!(
                "total mass {total}"
            )));
        }
        Ok(FiniteProbability { mass, total })
    }

    pub fn point(x: BitString) -> Self {
        FiniteProbability {
            mass: BTreeMap::from([(x, 1.0)]),
            total: 1.0,
        }
    }

    pub fn uniform(support: &[BitString]) -> Result<Self, InfoCalcError> {
        let w = 1.0 / support.len() as f64;
        Self::new(support.iter().map(|x| (x.clone(), w)))
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn mass(&self, x: &BitString) -> f64 {
        self.mass.get(x).copied().unwrap_or(0.0)
    }

    /// Positive-mass strings in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&BitString, f64)> {
        self.mass.iter().map(|(x, v)| (x, *v))
    }

    pub fn support(&self) -> impl Iterator<Item = &BitString> {
        self.mass.keys()
    }

    /// Every supported string must fit the budget's output bound.
    pub fn check_budget(&self, budget: &MachineBudget) -> Result<(), InfoCalcError> {
        match self
            .support()
            .find(|x| x.len() > budget.max_output_bits as usize)
        {
            Some(x) => Err(InfoCalcError::InvalidProbability(format!(
                "\"{x}\" is longer than M={}",
                budget.max_output_bits
            ))),
            None => Ok(()),
        }
    }

    /// `lambda * a + (1 - lambda) * b`.
    pub fn mixture(lambda: f64, a: &Self, b: &Self) -> Result<Self, InfoCalcError> {
        let mut mass: BTreeMap<BitString, f64> = BTreeMap::new();
        for (x, v) in a.iter() {
            *mass.entry(x.clone()).or_default() += lambda * v;
        }
        for (x, v) in b.iter() {
            *mass.entry(x.clone()).or_default() += (1.0 - lambda) * v;
        }
        Self::new(mass)
    }
}

#[derive(Serialize, Deserialize)]
struct ProbabilityFile {
    support: Vec<BitString>,
    mass: Vec<f64>,
}

impl Serialize for FiniteProbability {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ProbabilityFile {
            support: self.mass.keys().cloned().collect(),
            mass: self.mass.values().copied().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FiniteProbability {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let f = ProbabilityFile::deserialize(deserializer)?;
        if f.support.len() != f.mass.len() {
            return Err(serde::de::Error::custom("support and mass lengths differ"));
        }
        FiniteProbability::new(f.support.into_iter().zip(f.mass)).map_err(serde::de::Error::custom)
    }
}

/// Stochastic kernel `f(x|y)`. `kernel[i][j]` is the probability of
/// `outputs[i]` given `inputs[j]`, so every column sums to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Channel {
    inputs: Vec<BitString>,
    outputs: Vec<BitString>,
    kernel: Vec<Vec<f64>>,
}

impl Channel {
    pub fn new(
        inputs: Vec<BitString>,
        outputs: Vec<BitString>,
        kernel: Vec<Vec<f64>>,
    ) -> Result<Self, InfoCalcError> {
        let bad = |m: String| Err(InfoCalcError::InvalidChannel(m));
        if inputs.is_empty() || outputs.is_empty() {
            return bad("empty input or output set".into());
        }
        for (name, set) in [("input", &inputs), ("output", &outputs)] {
            let mut sorted = set.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != set.len() {
                return bad(format!("duplicate {name} string"));
            }
        }
        if kernel.len() != outputs.len() || kernel.iter().any(|row| row.len() != inputs.len()) {
            return bad(format!(
                "kernel must be {} x {}",
                outputs.len(),
                inputs.len()
            ));
        }
        for (j, y) in inputs.iter().enumerate() {
            let mut sum = 0.0;
            for row in &kernel {
                let v = row[j];
                if !v.is_finite() || v < 0.0 {
                    return bad(format!("entry {v} in column \"{y}\""));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > EPS_NORM {
                return bad(format!("column \"{y}\" sums to {sum}"));
            }
        }
        Ok(Channel {
            inputs,
            outputs,
            kernel,
        })
    }

    pub fn identity(support: &[BitString]) -> Result<Self, InfoCalcError> {
        let n = support.len();
        let kernel = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(support.to_vec(), support.to_vec(), kernel)
    }

    /// Sends every input to `target`.
    pub fn constant(inputs: &[BitString], target: BitString) -> Result<Self, InfoCalcError> {
        Self::new(inputs.to_vec(), vec![target], vec![vec![1.0; inputs.len()]])
    }

    pub fn inputs(&self) -> &[BitString] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[BitString] {
        &self.outputs
    }

    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.kernel
    }

    /// `f(x|y)`, zero when either string is unknown to the channel.
    pub fn prob(&self, x: &BitString, y: &BitString) -> f64 {
        let i = self.outputs.iter().position(|o| o == x);
        let j = self.inputs.iter().position(|v| v == y);
        match (i, j) {
            (Some(i), Some(j)) => self.kernel[i][j],
            _ => 0.0,
        }
    }
}

#[derive(Deserialize)]
struct ChannelFile {
    inputs: Vec<BitString>,
    outputs: Vec<BitString>,
    kernel: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let f = ChannelFile::deserialize(deserializer)?;
        Channel::new(f.inputs, f.outputs, f.kernel).map_err(serde::de::Error::custom)
    }
}

/// A point drawn uniformly from the `k`-simplex via normalized exponentials.
pub fn random_simplex<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let sum: f64 = draws.iter().sum();
    draws.into_iter().map(|v| v / sum).collect()
}

/// Channel whose columns are independent uniform draws from the simplex
/// over `outputs`.
pub fn random_channel(
    inputs: &[BitString],
    outputs: &[BitString],
    seed: u64,
) -> Result<Channel, InfoCalcError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_channel_with(inputs, outputs, &mut rng)
}

pub fn random_channel_with<R: Rng>(
    inputs: &[BitString],
    outputs: &[BitString],
    rng: &mut R,
) -> Result<Channel, InfoCalcError> {
    let columns: Vec<Vec<f64>> = inputs
        .iter()
        .map(|_| random_simplex(rng, outputs.len()))
        .collect();
    let kernel = (0..outputs.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    Channel::new(inputs.to_vec(), outputs.to_vec(), kernel)
}

/// Pushforward `fp(x) = sum_y f(x|y) p(y)`.
pub fn transform(f: &Channel, p: &FiniteProbability) -> Result<FiniteProbability, InfoCalcError> {
    let mut cols = Vec::new();
    for (y, py) in p.iter() {
        let j = f
            .inputs
            .iter()
            .position(|v| v == y)
            .ok_or_else(|| InfoCalcError::MissingColumn(y.clone()))?;
        cols.push((j, py));
    }
    let mass = f.outputs.iter().zip(&f.kernel).map(|(x, row)| {
        let v: f64 = cols.iter().map(|&(j, py)| row[j] * py).sum();
        (x.clone(), v)
    });
    FiniteProbability::new(mass)
}

/// `log2 sum_{x,y} 2^{i(x:y)} p(x) q(y)` in bits, summed in lexicographic
/// support order with the largest exponent factored out.
pub fn prob_info(
    p: &FiniteProbability,
    q: &FiniteProbability,
    table: &ComplexityTable,
) -> Result<f64, InfoError> {
    let mut terms = Vec::new();
    for (x, px) in p.iter() {
        for (y, qy) in q.iter() {
            terms.push((table.string_info(x, y)?, px * qy));
        }
    }
    let top = terms
        .iter()
        .map(|t| t.0)
        .max()
        .expect("probabilities have nonempty support");
    let sum: f64 = terms
        .iter()
        .map(|&(i, w)| ((i - top) as f64).exp2() * w)
        .sum();
    Ok(top as f64 + sum.log2())
}

/// `i(fp:q) - i(p:q)`.
pub fn conservation_slack(
    f: &Channel,
    p: &FiniteProbability,
    q: &FiniteProbability,
    table: &ComplexityTable,
) -> Result<f64, InfoCalcError> {
    let fp = transform(f, p)?;
    Ok(prob_info(&fp, q, table)? - prob_info(p, q, table)?)
}

/// `i(x:y)` for every ordered pair of a fixed label list, for evaluating
/// `2^{i(p:q)}` on dense probability vectors over those labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseInfo {
    labels: Vec<BitString>,
    info: Vec<i64>,
    weight: Vec<f64>,
}

impl PairwiseInfo {
    pub fn new(labels: &[BitString], table: &ComplexityTable) -> Result<Self, InfoError> {
        let mut info = Vec::with_capacity(labels.len() * labels.len());
        for x in labels {
            for y in labels {
                info.push(table.string_info(x, y)?);
            }
        }
        let weight = info.iter().map(|&i| (i as f64).exp2()).collect();
        Ok(PairwiseInfo {
            labels: labels.to_vec(),
            info,
            weight,
        })
    }

    pub fn labels(&self) -> &[BitString] {
        &self.labels
    }

    pub fn info(&self, i: usize, j: usize) -> i64 {
        self.info[i * self.labels.len() + j]
    }

    pub fn min_info(&self) -> i64 {
        *self.info.iter().min().unwrap()
    }

    pub fn max_info(&self) -> i64 {
        *self.info.iter().max().unwrap()
    }

    /// `sum_{i,j} 2^{i(k_i:k_j)} p_i q_j`.
    pub fn exp_info(&self, p: &[f64], q: &[f64]) -> f64 {
        let m = self.labels.len();
        assert_eq!(p.len(), m);
        assert_eq!(q.len(), m);
        let mut total = 0.0;
        for (i, &pi) in p.iter().enumerate() {
            let row = &self.weight[i * m..(i + 1) * m];
            let inner: f64 = row.iter().zip(q).map(|(w, qj)| w * qj).sum();
            total += pi * inner;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn table(strings: &[BitString]) -> ComplexityTable {
        ComplexityTable::for_pairs(
            &BitString::new(),
            &MachineBudget::with_program_bits(24),
            strings,
        )
        .unwrap()
    }

    #[test]
    fn probability_validation() {
        assert!(FiniteProbability::new([(b("0"), 0.6), (b("1"), 0.6)]).is_err());
        assert!(FiniteProbability::new([(b("0"), -0.1), (b("1"), 0.6)]).is_err());
        assert!(FiniteProbability::new([(b("0"), 0.0)]).is_err());
        assert!(FiniteProbability::new([(b("0"), 0.5), (b("0"), 0.5)]).is_err());
        let p = FiniteProbability::new([(b("0"), 0.25), (b("1"), 0.0)]).unwrap();
        assert_eq!(p.support().count(), 1);
        assert_eq!(p.total(), 0.25);
        let p = FiniteProbability::new([(b("0"), 0.5), (b("1"), 0.5 + 1e-10)]).unwrap();
        assert!(p.total() > 1.0);
        let long = FiniteProbability::point(BitString::from_bools(vec![true; 70]));
        assert!(long.check_budget(&MachineBudget::default()).is_err());
    }

    #[test]
    fn channel_validation() {
        let io = vec![b("0"), b("1")];
        assert!(
            Channel::new(io.clone(), io.clone(), vec![vec![0.5, 1.0], vec![0.4, 0.0]]).is_err()
        );
        assert!(Channel::new(io.clone(), io.clone(), vec![vec![1.0, 1.0]]).is_err());
        assert!(Channel::new(
            vec![b("0"), b("0")],
            io.clone(),
            vec![vec![1.0, 1.0], vec![0.0, 0.0]]
        )
        .is_err());
        assert!(Channel::new(io.clone(), io, vec![vec![0.5, 1.0], vec![0.5, 0.0]]).is_ok());
    }

    #[test]
    fn point_masses_give_string_info() {
        let e = BitString::new();
        let t = table(&[e.clone(), b("0"), b("1")]);
        let pe = FiniteProbability::point(e.clone());
        assert_eq!(prob_info(&pe, &pe, &t).unwrap(), 0.0);
        let (x, y) = (b("0"), b("1"));
        let v = prob_info(
            &FiniteProbability::point(x.clone()),
            &FiniteProbability::point(y.clone()),
            &t,
        )
        .unwrap();
        assert_eq!(v, t.string_info(&x, &y).unwrap() as f64);
    }

    #[test]
    fn uniform_pair_matches_direct_sum() {
        let s = [b("0"), b("1")];
        let t = table(&s);
        let u = FiniteProbability::uniform(&s).unwrap();
        let mut direct = 0.0;
        for x in &s {
            for y in &s {
                direct += (t.string_info(x, y).unwrap() as f64).exp2() * 0.25;
            }
        }
        assert!((prob_info(&u, &u, &t).unwrap() - direct.log2()).abs() < 1e-12);
        let pw = PairwiseInfo::new(&s, &t).unwrap();
        assert!((pw.exp_info(&[0.5, 0.5], &[0.5, 0.5]) - direct).abs() < 1e-12);
    }

    #[test]
    fn undefined_propagates() {
        let t = ComplexityTable::for_pairs(
            &BitString::new(),
            &MachineBudget::with_program_bits(9),
            &[b("0101")],
        )
        .unwrap();
        let p = FiniteProbability::point(b("0101"));
        assert!(matches!(
            prob_info(&p, &p, &t),
            Err(InfoError::Undefined { .. })
        ));
    }

    #[test]
    fn transforms() {
        let s = vec![b("0"), b("1")];
        let p = FiniteProbability::new([(b("0"), 0.3), (b("1"), 0.7)]).unwrap();
        assert_eq!(transform(&Channel::identity(&s).unwrap(), &p).unwrap(), p);

        let c = transform(&Channel::constant(&s, b("00")).unwrap(), &p).unwrap();
        assert_eq!(c, FiniteProbability::point(b("00")));

        let f = Channel::new(
            vec![b("0")],
            vec![b("00"), b("11")],
            vec![vec![0.5], vec![0.5]],
        )
        .unwrap();
        let fp = transform(&f, &FiniteProbability::point(b("0"))).unwrap();
        assert_eq!(fp.mass(&b("00")), 0.5);
        assert_eq!(fp.mass(&b("11")), 0.5);

        let err = transform(&f, &p).unwrap_err();
        assert_eq!(err, InfoCalcError::MissingColumn(b("1")));
    }

    #[test]
    fn slack_examples() {
        let s = vec![BitString::new(), b("0"), b("1")];
        let t = table(&s);
        let p = FiniteProbability::new([(b("0"), 0.5), (b("1"), 0.5)]).unwrap();
        let q = FiniteProbability::point(b("0"));
        assert_eq!(
            conservation_slack(&Channel::identity(&s).unwrap(), &p, &q, &t).unwrap(),
            0.0
        );

        let conc = FiniteProbability::point(b("0"));
        let to0 = Channel::constant(&[b("0"), b("1")], b("0")).unwrap();
        assert_eq!(conservation_slack(&to0, &conc, &q, &t).unwrap(), 0.0);

        // From the uniform p every mass moves onto "0"; q is the point at "0".
        let i00 = t.string_info(&b("0"), &b("0")).unwrap() as f64;
        let i10 = t.string_info(&b("1"), &b("0")).unwrap() as f64;
        let expected = i00 - (0.5 * i00.exp2() + 0.5 * i10.exp2()).log2();
        let got = conservation_slack(&to0, &p, &q, &t).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn random_channel_columns() {
        let ins = vec![b("0"), b("1"), b("10")];
        let single = random_channel(&ins, &[b("11")], 3).unwrap();
        assert!(single.kernel()[0].iter().all(|v| *v == 1.0));
        let outs = vec![b("0"), b("01"), b("11")];
        let f = random_channel(&ins, &outs, 1).unwrap();
        for j in 0..ins.len() {
            let s: f64 = f.kernel().iter().map(|r| r[j]).sum();
            assert!((s - 1.0).abs() <= EPS_NORM);
        }
        assert_eq!(f, random_channel(&ins, &outs, 1).unwrap());
        assert_ne!(f, random_channel(&ins, &outs, 2).unwrap());
    }

    #[test]
    fn file_formats() {
        let p: FiniteProbability =
            serde_json::from_str(r#"{"support": ["0/1", "3/2"], "mass": [0.25, 0.75]}"#).unwrap();
        assert_eq!(p.mass(&b("11")), 0.75);
        assert!(serde_json::from_str::<FiniteProbability>(
            r#"{"support": ["0/1"], "mass": [0.25, 0.75]}"#
        )
        .is_err());
        let f: Channel = serde_json::from_str(
            r#"{"inputs": ["0/1"], "outputs": ["0/1", "1/1"], "kernel": [[0.5], [0.5]]}"#,
        )
        .unwrap();
        assert_eq!(f.prob(&b("1"), &b("0")), 0.5);
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<Channel>(&json).unwrap(), f);
    }
}
