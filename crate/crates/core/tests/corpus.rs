mod io {
    use paraembed::corpus::*;

    use std::path::Path;

    use paraembed::error::Error;

    fn origin() -> &'static Path {
        Path::new("mem.tsv")
    }

    #[test]
    fn corpus_in_file_order() {
        let c = parse_pair_corpus("a b\tc\t0.9\nd\te f\t0.8\ng\th\t0.7\n", origin()).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.pairs[0].a.text(), "a b");
        assert_eq!(c.pairs[2].b.text(), "h");
        let scores: Vec<_> = c.pairs.iter().map(|p| p.rank_score.unwrap()).collect();
        assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn malformed_line_names_its_number() {
        let err = parse_pair_corpus("a\tb\nonly-one-field\n", origin()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(
            parse_pair_corpus("", origin()).unwrap_err(),
            Error::EmptyInput(_)
        ));
        assert!(matches!(
            parse_pair_corpus("\n\n", origin()).unwrap_err(),
            Error::EmptyInput(_)
        ));
    }

    #[test]
    fn increasing_scores_are_rejected() {
        let err = parse_pair_corpus("a\tb\t0.5\nc\td\t0.6\n", origin()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn annotated_rejects_off_scale_grades() {
        assert!(parse_annotated_set("a\tb\t3.5\n", origin()).is_ok());
        assert!(matches!(
            parse_annotated_set("a\tb\t3.2\n", origin()).unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn labeled_set_serialization_roundtrip() {
        let set = parse_labeled_set("1\ta b\tc\n0\td\te f\n", origin()).unwrap();
        let mut buf = Vec::new();
        write_labeled_set(&set, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "1\ta b\tc\n0\td\te f\n"
        );
        assert_eq!(
            parse_labeled_set(std::str::from_utf8(&buf).unwrap(), origin()).unwrap(),
            set
        );
    }

    #[test]
    fn labeled_set_rejects_bad_label() {
        assert!(parse_labeled_set("2\ta\tb\n", origin()).is_err());
    }
}

mod corpus {
    use paraembed::corpus::*;

    fn s(x: &str) -> Sentence {
        Sentence::parse(x).unwrap()
    }

    fn graded(grade: f64) -> AnnotatedPair {
        AnnotatedPair {
            a: s("a b"),
            b: s("c"),
            grade,
        }
    }

    #[test]
    fn sentence_tokens_join_to_normalized_raw() {
        let x = s("  okay ,  you   don 't get it ");
        assert_eq!(x.text(), "okay , you don 't get it");
        assert_eq!(x.len(), 7);
        assert!(Sentence::parse("   ").is_err());
    }

    #[test]
    fn binarize_grades() {
        let set = AnnotatedPairSet::new(GRADES.iter().map(|&g| graded(g)).collect()).unwrap();
        let out = binarize_annotations(&set);
        assert_eq!(out.len(), 6);
        assert_eq!(out.positives(), 3);
        assert_eq!(out.negatives(), 3);
        let labels: Vec<_> = out.pairs.iter().map(|p| p.label).collect();
        assert_eq!(labels[0], Label::Negative);
        assert_eq!(labels[5], Label::Positive);
    }

    #[test]
    fn binarize_drops_only_borderline() {
        let set = AnnotatedPairSet::new(vec![graded(2.5), graded(4.0), graded(1.0), graded(2.5)])
            .unwrap();
        let out = binarize_annotations(&set);
        assert_eq!(out.len(), 2);
        assert_eq!(out.pairs[0].label, Label::Positive);
        assert_eq!(out.pairs[1].label, Label::Negative);
    }

    #[test]
    fn invalid_grade_is_rejected() {
        assert!(AnnotatedPairSet::new(vec![graded(2.7)]).is_err());
        assert!(AnnotatedPairSet::new(vec![graded(0.5)]).is_err());
    }

    #[test]
    fn rank_scores_must_not_increase() {
        let p = |score| RankedPair {
            a: s("x"),
            b: s("y"),
            rank_score: score,
        };
        assert!(RankedPairCorpus::new(vec![p(Some(0.9)), p(None), p(Some(0.8))]).is_ok());
        assert!(RankedPairCorpus::new(vec![p(Some(0.7)), p(Some(0.8))]).is_err());
    }
}

mod quality {
    use paraembed::corpus::*;

    use paraembed::error::Error;
    use proptest::prelude::*;

    #[test]
    fn constant_curve_takes_everything() {
        let c = QualityCurve::new(vec![(10, 0.7), (100, 0.7)]).unwrap();
        assert_eq!(select_prefix_for_quality(&c, 0.7).unwrap(), 100);
    }

    #[test]
    fn english_style_curve() {
        let c = QualityCurve::new(vec![(5_000_000, 0.8), (20_000_000, 0.7), (34_000_000, 0.6)])
            .unwrap();
        assert_eq!(select_prefix_for_quality(&c, 0.8).unwrap(), 5_000_000);
        assert_eq!(select_prefix_for_quality(&c, 0.7).unwrap(), 20_000_000);
        assert_eq!(select_prefix_for_quality(&c, 0.6).unwrap(), 34_000_000);
    }

    #[test]
    fn interpolates_between_points() {
        // 0.9 + (x - 10) / 10 * (0.5 - 0.9) = 0.7  =>  x = 15
        let c = QualityCurve::new(vec![(10, 0.9), (20, 0.5)]).unwrap();
        assert_eq!(select_prefix_for_quality(&c, 0.7).unwrap(), 15);
        assert!((c.fraction_at(15).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn unattainable_target() {
        let c = QualityCurve::new(vec![(10, 0.9), (20, 0.5)]).unwrap();
        assert!(matches!(
            select_prefix_for_quality(&c, 0.95).unwrap_err(),
            Error::UnattainableQuality { .. }
        ));
    }

    #[test]
    fn rejects_bad_curves() {
        assert!(QualityCurve::new(vec![]).is_err());
        assert!(QualityCurve::new(vec![(10, 0.9), (10, 0.8)]).is_err());
        assert!(QualityCurve::new(vec![(10, 1.2)]).is_err());
    }

    proptest! {
        #[test]
        fn lower_targets_never_shrink_the_prefix(
            fracs in proptest::collection::vec(0.0f64..=1.0, 1..8),
            t1 in 0.0f64..=1.0,
            t2 in 0.0f64..=1.0,
        ) {
            let pts: Vec<(u64, f64)> = fracs.iter().enumerate().map(|(i, &f)| ((i as u64 + 1) * 1000, f)).collect();
            let c = QualityCurve::new(pts).unwrap();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            if let (Ok(a), Ok(b)) = (select_prefix_for_quality(&c, lo), select_prefix_for_quality(&c, hi)) {
                prop_assert!(a >= b, "target {lo} -> {a}, target {hi} -> {b}");
            }
            if let Ok(x) = select_prefix_for_quality(&c, hi) {
                prop_assert!(c.fraction_at(x).unwrap() >= hi - 1e-6);
            }
        }
    }
}

mod sampling {
    use paraembed::corpus::*;

    use paraembed::corpus::{Label, LabeledPairSet, RankedPair, RankedPairCorpus};

    use paraembed::corpus::{write_labeled_set, Sentence};
    use proptest::prelude::*;

    fn corpus(lengths: &[usize]) -> RankedPairCorpus {
        let pairs = lengths
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let half = n / 2;
                let words = |side: &str, k: usize| {
                    Sentence::from_tokens((0..k.max(1)).map(|t| format!("{side}{i}w{t}"))).unwrap()
                };
                RankedPair {
                    a: words("a", half),
                    b: words("b", n - half),
                    rank_score: None,
                }
            })
            .collect();
        RankedPairCorpus { pairs }
    }

    fn serialized(set: &LabeledPairSet) -> Vec<u8> {
        let mut buf = Vec::new();
        write_labeled_set(set, &mut buf).unwrap();
        buf
    }

    #[test]
    fn five_of_ten() {
        let c = corpus(&[2; 10]);
        let set = sample_training_set(&c, 5, 1).unwrap();
        assert_eq!(set.len(), 10);
        assert_eq!(set.positives(), 5);
        for (p, src) in set.pairs.iter().zip(&c.pairs[..5]) {
            assert_eq!(p.a, src.a);
            assert_eq!(p.b, src.b);
        }
    }

    #[test]
    fn too_many_positives() {
        assert!(sample_training_set(&corpus(&[2; 3]), 4, 0).is_err());
    }

    #[test]
    fn same_seed_same_bytes() {
        let c = corpus(&[3; 50]);
        let a = sample_training_set(&c, 40, 9).unwrap();
        let b = sample_training_set(&c, 40, 9).unwrap();
        assert_eq!(serialized(&a), serialized(&b));
        let other = sample_training_set(&c, 40, 10).unwrap();
        assert_ne!(serialized(&a), serialized(&other));
    }

    #[test]
    fn negatives_come_from_the_prefix() {
        let c = corpus(&[2; 20]);
        let set = sample_training_set(&c, 4, 3).unwrap();
        let prefix: Vec<_> = c.pairs[..4].iter().flat_map(|p| [&p.a, &p.b]).collect();
        for p in set.pairs.iter().filter(|p| p.label == Label::Negative) {
            assert!(prefix.contains(&&p.a) && prefix.contains(&&p.b));
        }
    }

    #[test]
    fn token_budget_prefixes() {
        let c = corpus(&[4, 4, 4]);
        assert_eq!(sample_by_token_budget(&c, 10, 0).unwrap().positives(), 2);
        assert_eq!(sample_by_token_budget(&c, 12, 0).unwrap().positives(), 3);
        assert_eq!(sample_by_token_budget(&c, 4, 0).unwrap().positives(), 1);
        assert!(sample_by_token_budget(&c, 3, 0).is_err());
        assert!(sample_by_token_budget(&RankedPairCorpus::default(), 3, 0).is_err());
    }

    proptest! {
        #[test]
        fn balanced_prefix_property(n_pairs in 1usize..40, frac in 0.0f64..=1.0, seed in any::<u64>()) {
            let c = corpus(&vec![2; n_pairs]);
            let n = ((n_pairs as f64) * frac) as usize;
            let set = sample_training_set(&c, n, seed).unwrap();
            prop_assert_eq!(set.positives(), n);
            prop_assert_eq!(set.negatives(), n);
            for (p, src) in set.pairs.iter().take(n).zip(&c.pairs) {
                prop_assert_eq!(&p.a, &src.a);
                prop_assert_eq!(p.label, Label::Positive);
            }
        }

        #[test]
        fn token_budget_overshoot_is_less_than_one_pair(
            lengths in proptest::collection::vec(2usize..9, 1..30),
            extra in 0usize..200,
        ) {
            let c = corpus(&lengths);
            let budget = lengths[0] + extra;
            let set = sample_by_token_budget(&c, budget, 0).unwrap();
            let k = set.positives();
            let used: usize = lengths[..k].iter().sum();
            prop_assert!(used <= budget);
            if k < lengths.len() {
                prop_assert!(budget - used < lengths[k]);
            }
        }
    }
}

mod vocab {
    use paraembed::corpus::*;

    use paraembed::corpus::Sentence;

    fn sents(xs: &[&str]) -> Vec<Sentence> {
        xs.iter().map(|x| Sentence::parse(x).unwrap()).collect()
    }

    #[test]
    fn counts_and_threshold() {
        let s = sents(&["a b", "a"]);
        let v = build_vocab(&s, 1);
        assert_eq!(v.known_len(), 2);
        assert_eq!(v.len(), 3);
        assert_eq!(v.id("a"), 1);
        let v2 = build_vocab(&s, 2);
        assert_eq!(v2.known_tokens().collect::<Vec<_>>(), vec!["a"]);
        assert_eq!(v2.id("b"), Vocabulary::UNKNOWN_ID);
    }

    #[test]
    fn literal_unk_token_gets_its_own_id() {
        let s = sents(&["<unk> x"]);
        let v = build_vocab(&s, 1);
        assert_ne!(v.id("<unk>"), Vocabulary::UNKNOWN_ID);
        assert_eq!(v.id("never-seen"), Vocabulary::UNKNOWN_ID);
    }

    #[test]
    fn ids_are_dense() {
        let s = sents(&["q w e r t y", "q w e"]);
        let v = build_vocab(&s, 1);
        let mut ids: Vec<u32> = v.known_tokens().map(|t| v.id(t)).collect();
        ids.sort_unstable();
        assert_eq!(ids, (1..v.len() as u32).collect::<Vec<_>>());
    }
}
