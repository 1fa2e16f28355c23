//! Property tests: round trips and structural invariants under randomly
//! drawn offspring laws, seeds, and forest sizes.

use proptest::prelude::*;

use allelic_core::ballot::{ballot_probability, first_passage_shift_count};
use allelic_core::exact::{ExactConvolutionTable, ExactJointLaw, Rational};
use allelic_core::forest::{sample_dfs_sequence, SampleError};
use allelic_core::genealogy::generation_view;
use allelic_core::height::{height_function, HeightVariant};
use allelic_core::law::Marginal;
use allelic_core::partition::{
    allelic_partition, cluster_slices, reconstruct_from_partition, PartitionKey,
};
use allelic_core::{ConvolutionTable, DfsSequence, JointOffspringLaw};
use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::ToPrimitive;

fn forest(law: &JointOffspringLaw, seed: u64, n_trees: u64) -> DfsSequence {
    match sample_dfs_sequence(law, seed, n_trees, 1 << 20) {
        Ok(seq) => seq,
        Err(SampleError::CapExceeded { partial, .. }) => partial,
        Err(e) => panic!("sampling failed: {e}"),
    }
}

fn check_round_trip(seq: &DfsSequence) {
    let partition = allelic_partition(seq);
    let slices = cluster_slices(seq, &partition);
    let rebuilt = reconstruct_from_partition(&slices).unwrap();
    assert_eq!(&rebuilt, seq);

    let steps = seq.steps();
    let mut offset = 0usize;
    for (tree, &end) in seq.tree_ends().iter().enumerate() {
        let from_steps = PartitionKey::from_tree_steps(&steps[offset..end]);
        let from_partition = PartitionKey::from_partition(&partition, tree);
        assert_eq!(from_steps, from_partition);
        offset = end;
    }

    let view = generation_view(seq);
    let genealogical = height_function(seq, HeightVariant::Genealogical);
    let mut pos = 0usize;
    for tree in seq.trees() {
        let block = &genealogical.values[pos..pos + tree.size()];
        assert_eq!(block[0], 0);
        for w in block.windows(2) {
            assert!(w[1] <= w[0] + 1);
        }
        pos += tree.size();
    }
    let allelic = height_function(seq, HeightVariant::AllelicClusters);
    for (i, r) in view.iter().enumerate() {
        assert_eq!(allelic.values[i], r.cluster_depth);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Bernoulli pairs with p_c + p_m <= 1 keep the total offspring mean
    // at or below 1, so the forest is almost surely finite.
    #[test]
    fn bernoulli_forests_round_trip(
        pc in 0u32..=10,
        pm in 0u32..=10,
        seed in any::<u64>(),
        n_trees in 1u64..40,
    ) {
        let clone = Marginal::bernoulli(pc as f64 / 20.0).unwrap();
        let mutant = Marginal::bernoulli(pm as f64 / 20.0).unwrap();
        let law = JointOffspringLaw::independent(&clone, &mutant).unwrap();
        let seq = forest(&law, seed, n_trees);
        prop_assume!(!seq.is_empty());
        check_round_trip(&seq);
    }

    #[test]
    fn pruned_forests_round_trip(
        a in 1u32..=50,
        p in 1u32..=99,
        seed in any::<u64>(),
        n_trees in 1u64..40,
    ) {
        // Geometric(a) has mean a/(1-a) <= 1 for a <= 1/2.
        let base = Marginal::geometric(a as f64 / 100.0, 1e-12).unwrap();
        let law = JointOffspringLaw::from_pruning(&base, p as f64 / 100.0).unwrap();
        let seq = forest(&law, seed, n_trees);
        prop_assume!(!seq.is_empty());
        check_round_trip(&seq);
    }

    // Cyclic-shift count equals the negated total for any skip-free
    // downward step sequence. Padding with -1 steps forces the total
    // negative; the shuffle restores arbitrary order.
    #[test]
    fn shift_count_matches_negated_total(
        values in (prop::collection::vec(-1i64..=3, 0..12), 1usize..6)
            .prop_map(|(mut v, pad)| {
                let sum: i64 = v.iter().sum();
                v.extend(core::iter::repeat_n(-1, sum.max(0) as usize + pad));
                v
            })
            .prop_shuffle(),
    ) {
        let sum: i64 = values.iter().sum();
        prop_assert!(sum < 0);
        let count = first_passage_shift_count(&values).unwrap();
        prop_assert_eq!(count, (-sum) as u64);
        let prob = ballot_probability(&values).unwrap();
        prop_assert_eq!(prob, Ratio::new(count, values.len() as u64));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Sixteenths are exact in binary, so a float table and a rational
    // table of the same law may differ only by convolution roundoff.
    #[test]
    fn float_powers_track_rational_powers(pc in 0u32..=8, pm in 0u32..=8) {
        let sixteenth = |i: u32| Rational::new(BigInt::from(i), BigInt::from(16));
        let exact_law = ExactJointLaw::independent(
            &[sixteenth(16 - pc), sixteenth(pc)],
            &[sixteenth(16 - pm), sixteenth(pm)],
        ).unwrap();
        let clone = Marginal::bernoulli(pc as f64 / 16.0).unwrap();
        let mutant = Marginal::bernoulli(pm as f64 / 16.0).unwrap();
        let law = JointOffspringLaw::independent(&clone, &mutant).unwrap();

        let n_max = 5;
        let exact_table = ExactConvolutionTable::build(&exact_law, n_max);
        let table = ConvolutionTable::build(&law, n_max, ConvolutionTable::DEFAULT_MEMORY_CAP)
            .unwrap();
        for n in 1..=n_max {
            for (k, l, p) in table.slice(n).unwrap().entries() {
                let want = exact_table.entry(n, k, l).unwrap().to_f64().unwrap();
                prop_assert!((p - want).abs() <= 1e-14, "n={n} k={k} l={l}: {p} vs {want}");
            }
        }
    }
}
