use std::sync::OnceLock;

use algoinfo_core::bits::BitString;
use algoinfo_core::info::{self, Channel, FiniteProbability};
use algoinfo_core::machine::{self, Complexity, ComplexityTable, Dyadic, MachineBudget};
use proptest::prelude::*;

fn bitstring(max_len: usize) -> impl Strategy<Value = BitString> {
    proptest::collection::vec(any::<bool>(), 0..=max_len).prop_map(BitString::from_bools)
}

fn pool() -> Vec<BitString> {
    BitString::all_up_to(2).collect()
}

fn table() -> &'static ComplexityTable {
    static T: OnceLock<ComplexityTable> = OnceLock::new();
    T.get_or_init(|| {
        ComplexityTable::for_pairs(
            &BitString::new(),
            &MachineBudget::with_program_bits(33),
            &pool(),
        )
        .unwrap()
    })
}

/// A probability on a nonempty subset of the pool.
fn probability() -> impl Strategy<Value = FiniteProbability> {
    proptest::collection::vec(0.0f64..1.0, 7).prop_filter_map("empty", |w| {
        let total: f64 = w.iter().sum();
        (total > 1e-3).then(|| {
            FiniteProbability::new(pool().into_iter().zip(w.iter().map(|v| v / total))).ok()
        })?
    })
}

fn budget() -> impl Strategy<Value = MachineBudget> {
    (3u32..=15, 1u64..=8, 1u32..=10).prop_map(|(l, t, m)| MachineBudget::new(l, t, m).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn halting_set_is_prefix_free(aux in bitstring(6), l in 3u32..=15) {
        let records = machine::enumerate(&aux, &MachineBudget::with_program_bits(l)).unwrap();
        for w in records.windows(2) {
            // Sorted order puts any prefix right before its extensions.
            prop_assert!(!w[0].program.is_prefix_of(&w[1].program));
        }
        let kraft = machine::kraft_sum(&aux, &MachineBudget::with_program_bits(l)).unwrap();
        prop_assert!(kraft <= Dyadic::new(1, 0));
    }

    #[test]
    fn budget_growth_is_monotone(
        x in bitstring(6),
        aux in bitstring(4),
        small in budget(),
        extra in (0u32..=4, 0u64..=8, 0u32..=6),
    ) {
        let big = MachineBudget::new(
            small.max_program_bits + extra.0,
            small.max_steps + extra.1,
            small.max_output_bits + extra.2,
        ).unwrap();
        prop_assert!(machine::complexity(&x, &aux, &big) <= machine::complexity(&x, &aux, &small)
            || machine::complexity(&x, &aux, &small) == Complexity::Infinite);
        prop_assert!(
            machine::algorithmic_probability(&x, &aux, &big) >= machine::algorithmic_probability(&x, &aux, &small)
        );
    }

    #[test]
    fn probability_dominates_shortest_program(x in bitstring(8), aux in bitstring(5), l in 3u32..=18) {
        let b = MachineBudget::with_program_bits(l);
        if let Complexity::Finite(k) = machine::complexity(&x, &aux, &b) {
            prop_assert!(machine::algorithmic_probability(&x, &aux, &b) >= Dyadic::pow2_neg(k));
        } else {
            prop_assert!(machine::algorithmic_probability(&x, &aux, &b).is_zero());
        }
    }

    #[test]
    fn exp_info_is_linear_in_each_argument(
        p1 in probability(), p2 in probability(), q in probability(), lambda in 0.0f64..=1.0,
    ) {
        let t = table();
        let mix = FiniteProbability::mixture(lambda, &p1, &p2).unwrap();
        let lhs = info::prob_info(&mix, &q, t).unwrap().exp2();
        let rhs = lambda * info::prob_info(&p1, &q, t).unwrap().exp2()
            + (1.0 - lambda) * info::prob_info(&p2, &q, t).unwrap().exp2();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0), "{lhs} vs {rhs}");
        let lhs = info::prob_info(&q, &mix, t).unwrap().exp2();
        let rhs = lambda * info::prob_info(&q, &p1, t).unwrap().exp2()
            + (1.0 - lambda) * info::prob_info(&q, &p2, t).unwrap().exp2();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn prob_info_lies_between_supported_terms(p in probability(), q in probability()) {
        let t = table();
        let terms: Vec<i64> = p.support()
            .flat_map(|x| q.support().map(move |y| t.string_info(x, y).unwrap()))
            .collect();
        let v = info::prob_info(&p, &q, t).unwrap();
        let lo = *terms.iter().min().unwrap() as f64;
        let hi = *terms.iter().max().unwrap() as f64;
        prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "{v} not in [{lo}, {hi}]");
    }

    #[test]
    fn asymmetry_is_bounded_by_pairwise_asymmetry(p in probability(), q in probability()) {
        let t = table();
        let bound = p.support()
            .flat_map(|x| q.support().map(move |y| (t.string_info(x, y).unwrap() - t.string_info(y, x).unwrap()).abs()))
            .max()
            .unwrap() as f64;
        let d = info::prob_info(&p, &q, t).unwrap() - info::prob_info(&q, &p, t).unwrap();
        prop_assert!(d.abs() <= bound + 1e-9, "{d} exceeds {bound}");
    }

    #[test]
    fn identity_channel_slack_is_zero(p in probability(), q in probability()) {
        let f = Channel::identity(&pool()).unwrap();
        prop_assert_eq!(info::conservation_slack(&f, &p, &q, table()).unwrap(), 0.0);
    }

    #[test]
    fn random_channels_preserve_total(p in probability(), seed in any::<u64>()) {
        let f = info::random_channel(&pool(), &pool()[..3], seed).unwrap();
        let fp = info::transform(&f, &p).unwrap();
        prop_assert!((fp.total() - p.total()).abs() <= 1e-9);
    }
}
