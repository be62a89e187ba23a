mod synthetic {
    use paraembed::synthetic::*;

    #[test]
    fn generators_are_seeded() {
        let mut a = ParaphraseGenerator::new(ParaphraseConfig::default(), 3).unwrap();
        let mut b = ParaphraseGenerator::new(ParaphraseConfig::default(), 3).unwrap();
        assert_eq!(a.labeled_set(20, 20), b.labeled_set(20, 20));
        let m = MorphologyConfig::default();
        assert_eq!(
            compositional_corpus(&m, 50, 1).unwrap(),
            compositional_corpus(&m, 50, 1).unwrap()
        );
    }

    #[test]
    fn paraphrases_share_concepts() {
        let mut g = ParaphraseGenerator::new(
            ParaphraseConfig {
                filler_rate: 0.0,
                ..Default::default()
            },
            1,
        )
        .unwrap();
        let concept_of = |g: &ParaphraseGenerator, w: &str| {
            g.concepts().iter().position(|s| s.iter().any(|x| x == w))
        };
        for _ in 0..20 {
            let (a, b) = g.paraphrase_pair();
            let ca: Vec<_> = a.tokens().iter().map(|w| concept_of(&g, w)).collect();
            let cb: Vec<_> = b.tokens().iter().map(|w| concept_of(&g, w)).collect();
            assert_eq!(ca, cb);
        }
    }

    #[test]
    fn class_counts() {
        let mut g = ParaphraseGenerator::new(ParaphraseConfig::default(), 2).unwrap();
        let s = g.labeled_set(728, 272);
        assert_eq!((s.positives(), s.negatives()), (728, 272));
        let ann = g.annotated_set(3, 2);
        assert_eq!(ann.len(), 5);
    }

    #[test]
    fn corruption_rewires_a_fraction() {
        let mut g = ParaphraseGenerator::new(ParaphraseConfig::default(), 2).unwrap();
        let clean = g.ranked_corpus(100).unwrap();
        let noisy = corrupt_positives(&clean, 0.4, 9).unwrap();
        let changed = clean
            .pairs
            .iter()
            .zip(&noisy.pairs)
            .filter(|(c, n)| c.b != n.b)
            .count();
        assert!(changed <= 40 && changed >= 35, "{changed}");
        assert!(clean
            .pairs
            .iter()
            .zip(&noisy.pairs)
            .all(|(c, n)| c.a == n.a));
    }
}
