//! Property tests for partitioning: every sample lands in exactly one
//! partition, per-class counts stay within one sample of the exact ratios,
//! fold validation sets tile the cross-validation pool, and splits are
//! deterministic in the seed.

use proptest::prelude::*;

use ensemblepool_core::sampling::{kfold_split, percentage_split, KFoldSpec, SplitRatios};
use ensemblepool_core::{Assignment, FoldRole, LabelVector};

fn arb_labels() -> impl Strategy<Value = LabelVector> {
    (1usize..=5)
        .prop_flat_map(|classes| {
            proptest::collection::vec(5usize..=40, classes)
        })
        .prop_map(|per_class| {
            let mut ids = Vec::new();
            let mut labels = Vec::new();
            for (class, &count) in per_class.iter().enumerate() {
                for i in 0..count {
                    ids.push(format!("c{class}_{i:03}"));
                    labels.push(class);
                }
            }
            LabelVector::new(ids, labels).unwrap()
        })
}

proptest! {
    #[test]
    fn every_sample_in_exactly_one_partition(labels in arb_labels(), seed in 0u64..1000) {
        let split = percentage_split(&labels, &SplitRatios::default(), seed, true).unwrap();
        prop_assert_eq!(split.len(), labels.len());
        let counts = split.partition_counts();
        prop_assert_eq!(counts.iter().sum::<usize>(), labels.len());
    }

    #[test]
    fn per_class_counts_stay_within_one_of_exact(labels in arb_labels(), seed in 0u64..1000) {
        let ratios = SplitRatios::default();
        let split = percentage_split(&labels, &ratios, seed, true).unwrap();
        let class_count = labels.class_count();
        for class in 0..class_count {
            let ids: Vec<&String> = labels
                .sample_ids()
                .iter()
                .zip(labels.labels())
                .filter(|&(_, &l)| l == class)
                .map(|(id, _)| id)
                .collect();
            let n_c = ids.len() as f64;
            for (k, fraction) in ratios.as_array().iter().enumerate() {
                let partition = [
                    Assignment::ModelTrain,
                    Assignment::ModelVal,
                    Assignment::EnsembleTrain,
                    Assignment::Testing,
                ][k];
                let got = ids.iter().filter(|id| split.get(id) == Some(partition)).count();
                let exact = fraction * n_c;
                prop_assert!(
                    (got as f64 - exact).abs() < 1.0,
                    "class {class}: partition {k} holds {got}, exact share {exact}"
                );
            }
        }
    }

    #[test]
    fn splits_are_deterministic(labels in arb_labels(), seed in 0u64..1000) {
        let a = percentage_split(&labels, &SplitRatios::default(), seed, true).unwrap();
        let b = percentage_split(&labels, &SplitRatios::default(), seed, true).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn fold_val_sets_tile_the_cv_pool(labels in arb_labels(), seed in 0u64..100, k in 2usize..=5) {
        let base = percentage_split(&labels, &SplitRatios::default(), seed, true).unwrap();
        let pool: Vec<&String> = labels
            .sample_ids()
            .iter()
            .filter(|id| {
                matches!(
                    base.get(id),
                    Some(Assignment::ModelTrain | Assignment::ModelVal)
                )
            })
            .collect();
        let per_class_minimum = (0..labels.class_count()).all(|class| {
            labels
                .sample_ids()
                .iter()
                .zip(labels.labels())
                .filter(|&(id, &l)| l == class && pool.contains(&id))
                .count()
                >= k
        });
        prop_assume!(per_class_minimum);

        let folds = kfold_split(&labels, &base, &KFoldSpec::new(k, seed).unwrap()).unwrap();
        prop_assert_eq!(folds.len(), k);
        for id in &pool {
            let val_appearances = folds
                .iter()
                .filter(|f| {
                    matches!(
                        f.get(id),
                        Some(Assignment::Fold { role: FoldRole::FoldVal, .. })
                    )
                })
                .count();
            prop_assert_eq!(val_appearances, 1, "sample {} not FoldVal exactly once", id);
        }
        // Every fold assignment covers the whole dataset.
        for fold in &folds {
            prop_assert_eq!(fold.len(), labels.len());
        }
    }
}
