mod common;

use proptest::prelude::*;

use common::{corpus_from, naive_depths};
use tte_depth::ranksum::discordant_counts;
use tte_depth::{
    depth_scores, depth_wrt, mcnemar, q_estimate_with, r_fraction, select, wilcoxon_test, DistanceKind, SelfMatch,
    Strategy as Pick,
};

fn raw_corpus(max_size: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(
        prop::collection::vec(-1.0f64..1.0, dim).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3)),
        1..max_size,
    )
}

fn kind() -> impl Strategy<Value = DistanceKind> {
    prop_oneof![Just(DistanceKind::Cosine), Just(DistanceKind::Chord)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scores_match_the_double_loop(raw in raw_corpus(40, 5), kind in kind()) {
        let report = depth_scores(&corpus_from("c", &raw), kind);
        for (got, want) in report.depths().iter().zip(naive_depths(&raw, kind)) {
            prop_assert!((got - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn depth_against_itself_matches_depth_scores(raw in raw_corpus(30, 4), kind in kind()) {
        let corpus = corpus_from("c", &raw);
        let wrt = depth_wrt(&corpus, &corpus, kind).unwrap();
        let own = depth_scores(&corpus, kind);
        prop_assert_eq!(wrt, own.scores);
    }

    #[test]
    fn ordering_is_sorted_and_median_is_deepest(raw in raw_corpus(30, 3), kind in kind()) {
        let report = depth_scores(&corpus_from("c", &raw), kind);
        let ordered: Vec<f64> = report.ordering.iter().map(|id| report.depth(id).unwrap()).collect();
        prop_assert!(ordered.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(&report.median_id, &report.ordering[0]);
        prop_assert_eq!(report.rank(&report.median_id), Some(1));
    }

    #[test]
    fn q_and_r_stay_in_the_unit_interval(
        f in raw_corpus(25, 3),
        g in raw_corpus(25, 3),
        kind in kind(),
        include in any::<bool>(),
    ) {
        let mode = if include { SelfMatch::Include } else { SelfMatch::Exclude };
        let est = q_estimate_with(&corpus_from("f", &f), &corpus_from("g", &g), kind, mode).unwrap();
        prop_assert!((0.0..=1.0).contains(&est.q_hat));
        prop_assert_eq!((est.m, est.n), (f.len(), g.len()));
        let depths = depth_scores(&corpus_from("f", &f), kind).depths();
        prop_assert!((0.0..=1.0).contains(&r_fraction(est.med_query_depth, &depths).unwrap()));
    }

    #[test]
    fn one_sided_p_is_monotone_in_q(a in 0.0f64..=1.0, b in 0.0f64..=1.0, m in 1usize..2000, n in 1usize..2000) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (tl, th) = (wilcoxon_test(lo, m, n).unwrap(), wilcoxon_test(hi, m, n).unwrap());
        prop_assert!(tl.p_one_sided <= th.p_one_sided);
        prop_assert!(tl.p_one_sided > 0.0 && th.p_one_sided < 1.0);
        prop_assert!(tl.p_two_sided() <= 1.0);
    }

    #[test]
    fn mcnemar_is_symmetric(b in 0u64..500, c in 0u64..500) {
        let (x, y) = (mcnemar(b, c), mcnemar(c, b));
        prop_assert_eq!(x.chi2.to_bits(), y.chi2.to_bits());
        prop_assert!((0.0..=1.0).contains(&x.p));
    }

    #[test]
    fn discordant_counts_split_the_disagreements(pairs in prop::collection::vec(any::<(bool, bool)>(), 0..100)) {
        let (a, b): (Vec<bool>, Vec<bool>) = pairs.iter().copied().unzip();
        let (only_a, only_b) = discordant_counts(&a, &b).unwrap();
        let disagree = pairs.iter().filter(|(x, y)| x != y).count() as u64;
        prop_assert_eq!(only_a + only_b, disagree);
    }

    #[test]
    fn rand_selection_is_a_seeded_subset(raw in raw_corpus(40, 3), n in 1usize..50, seed in any::<u64>()) {
        let corpus = corpus_from("c", &raw);
        let plan = select(&corpus, Pick::Rand, n, seed, DistanceKind::Cosine).unwrap();
        let again = select(&corpus, Pick::Rand, n, seed, DistanceKind::Cosine).unwrap();
        prop_assert_eq!(&plan.selected, &again.selected);
        prop_assert_eq!(plan.selected.len(), n.min(corpus.len()));
        let mut uniq = plan.selected.clone();
        uniq.sort();
        uniq.dedup();
        prop_assert_eq!(uniq.len(), plan.selected.len());
        prop_assert_eq!(plan.warnings.is_empty(), n <= corpus.len());
    }
}
