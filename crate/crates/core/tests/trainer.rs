mod loss {
    use paraembed::trainer::*;

    use paraembed::corpus::Label;
    use paraembed::scalar::norm;
    use proptest::prelude::*;

    #[test]
    fn distance_cases() {
        assert_eq!(cosine_distance(&[0.3f64, -1.2], &[0.3, -1.2]), 0.0);
        assert_eq!(cosine_distance(&[1.0f64, 2.0], &[-1.0, -2.0]), 2.0);
        assert_eq!(cosine_distance(&[1.0f32, 0.0], &[0.0, 1.0]), 1.0);
    }

    #[test]
    fn zero_vector_counts_a_warning() {
        let before = zero_norm_warnings();
        assert_eq!(cosine_distance(&[0.0f64, 0.0], &[1.0, 0.0]), 1.0);
        assert!(zero_norm_warnings() > before);
        let (d, du, dv) = cosine_distance_grad(&[0.0f64, 0.0], &[1.0, 0.0]);
        assert_eq!(d, 1.0);
        assert!(du.iter().chain(&dv).all(|&g| g == 0.0));
    }

    #[test]
    fn loss_cases() {
        assert_eq!(margin_loss(0.3, Label::Positive, 0.4), 0.3);
        assert_eq!(margin_loss(0.5, Label::Negative, 0.4), 0.0);
        assert!((margin_loss(0.1, Label::Negative, 0.4) - 0.09).abs() < 1e-15);
        assert_eq!(margin_loss_grad(0.5, Label::Negative, 0.4), 0.0);
        assert_eq!(margin_loss_grad(0.4, Label::Negative, 0.4), 0.0);
    }

    fn finite_diff(u: &[f64], v: &[f64], k: usize, wrt_u: bool) -> f64 {
        let h = 1e-6;
        let bump = |s: f64| {
            let (mut a, mut b) = (u.to_vec(), v.to_vec());
            if wrt_u {
                a[k] += s;
            } else {
                b[k] += s;
            }
            cosine_distance(&a, &b)
        };
        (bump(h) - bump(-h)) / (2.0 * h)
    }

    proptest! {
        #[test]
        fn loss_is_non_negative(d in 0.0f64..=2.0, m in 0.0f64..2.0, pos in any::<bool>()) {
            let label = if pos { Label::Positive } else { Label::Negative };
            let l = margin_loss(d, label, m);
            prop_assert!(l >= 0.0);
            let zero = match label {
                Label::Positive => d == 0.0,
                Label::Negative => d >= m,
            };
            prop_assert_eq!(l == 0.0, zero);
        }

        #[test]
        fn negative_gradient_vanishes_outside_margin(m in 0.0f64..2.0, extra in 0.0f64..2.0) {
            let d = (m + extra).min(2.0);
            prop_assert_eq!(margin_loss_grad(d, Label::Negative, m), 0.0);
        }

        #[test]
        fn distance_gradient_matches_differences(
            u in prop::collection::vec(-2.0f64..2.0, 4),
            v in prop::collection::vec(-2.0f64..2.0, 4),
        ) {
            prop_assume!(norm(&u) > 0.3 && norm(&v) > 0.3);
            let d = cosine_distance(&u, &v);
            prop_assume!(d > 1e-3 && d < 2.0 - 1e-3);
            let (_, du, dv) = cosine_distance_grad(&u, &v);
            for k in 0..4 {
                prop_assert!((du[k] - finite_diff(&u, &v, k, true)).abs() < 1e-6);
                prop_assert!((dv[k] - finite_diff(&u, &v, k, false)).abs() < 1e-6);
            }
        }

        #[test]
        fn distance_is_scale_invariant(
            u in prop::collection::vec(-2.0f64..2.0, 5),
            v in prop::collection::vec(-2.0f64..2.0, 5),
            s in 0.01f64..100.0,
        ) {
            prop_assume!(norm(&u) > 1e-3 && norm(&v) > 1e-3);
            let scaled: Vec<f64> = u.iter().map(|x| x * s).collect();
            prop_assert!((cosine_distance(&u, &v) - cosine_distance(&scaled, &v)).abs() < 1e-12);
        }
    }
}

mod trainer {
    use paraembed::trainer::*;

    use paraembed::corpus::{Label, LabeledPairSet};
    use paraembed::encoders::{Encoder, EncoderKind, EncoderModel, GranOptions};
    use paraembed::error::Error;

    use paraembed::numcore::{seeded_rng, Activation};

    use paraembed::corpus::{LabeledPair, Sentence};
    use paraembed::encoders::names;
    use paraembed::numcore::gradient_check;
    use rand::Rng;

    fn random_batch(vocab: usize, n: usize, seed: u64) -> Vec<EncodedPair> {
        let mut rng = seeded_rng(seed);
        let sentence = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<u32> {
            let len = rng.gen_range(1..=6);
            (0..len).map(|_| rng.gen_range(0..vocab as u32)).collect()
        };
        (0..n)
            .map(|k| EncodedPair {
                a: sentence(&mut rng),
                b: sentence(&mut rng),
                label: if k % 2 == 0 {
                    Label::Positive
                } else {
                    Label::Negative
                },
            })
            .collect()
    }

    fn check_encoder(kind: EncoderKind, options: GranOptions, margin: f64) -> f64 {
        let mut enc = Encoder::<f64>::init(kind, 20, 8, options, 11).unwrap();
        // Unit-scale embeddings so that the gates operate away from their linear regime.
        enc.params_mut()
            .get_mut(names::EMBEDDING)
            .unwrap()
            .scale(100.0);
        let batch = random_batch(20, 4, 5);
        for p in &batch {
            let (ua, _) = enc.forward(&p.a, None).unwrap();
            let (ub, _) = enc.forward(&p.b, None).unwrap();
            let d = cosine_distance(&ua, &ub);
            assert!((d - margin).abs() > 1e-3, "pair sits on the margin kink");
        }
        let report = gradient_check(
            |params| {
                let e = Encoder::from_params(kind, params.clone(), options)?;
                batch_loss_and_grad(&e, &batch, margin)
            },
            enc.params(),
            1e-5,
            3,
        )
        .unwrap();
        assert_eq!(report.parameters.len(), enc.params().len());
        report.max_relative_error
    }

    #[test]
    fn wa_gradients_match_differences() {
        let err = check_encoder(EncoderKind::Wa, GranOptions::default(), 1.5);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn gran_gradients_match_differences() {
        let options = GranOptions {
            hidden: 8,
            ..Default::default()
        };
        let err = check_encoder(EncoderKind::Gran, options, 1.5);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn gran_variants_gradients_match_differences() {
        for options in [
            GranOptions {
                hidden: 5,
                gate_biases: true,
                ..Default::default()
            },
            GranOptions {
                hidden: 5,
                activation: Activation::Tanh,
                ..Default::default()
            },
        ] {
            let err = check_encoder(EncoderKind::Gran, options, 1.5);
            assert!(err < 1e-4, "{options:?}: {err}");
        }
    }

    #[test]
    fn dropout_gradients_match_differences() {
        let options = GranOptions {
            hidden: 6,
            ..Default::default()
        };
        let mut enc = Encoder::<f64>::init(EncoderKind::Gran, 15, 6, options, 2).unwrap();
        enc.params_mut()
            .get_mut(names::EMBEDDING)
            .unwrap()
            .scale(100.0);
        let batch = random_batch(15, 2, 8);
        let mut rng = seeded_rng(4);
        let masks: Vec<_> = (0..4)
            .map(|_| enc.sample_masks(0.7, &mut rng).unwrap())
            .collect();
        let report = gradient_check(
            |params| {
                let e = Encoder::from_params(EncoderKind::Gran, params.clone(), options)?;
                let mut grads = params.zeros_like();
                let mut loss = 0.0;
                for (k, p) in batch.iter().enumerate() {
                    let m = [masks[2 * k].as_ref(), masks[2 * k + 1].as_ref()];
                    loss += pair_loss(&e, p, 1.5, m, Some((&mut grads, 0.5)))? * 0.5;
                }
                Ok((loss, grads))
            },
            enc.params(),
            1e-4,
            1,
        )
        .unwrap();
        assert!(report.max_relative_error < 1e-4, "{report:?}");
    }

    fn toy_set(dim_words: usize) -> LabeledPairSet {
        let same = Sentence::parse("the cat sat on the mat").unwrap();
        let left = Sentence::from_tokens((0..dim_words).map(|i| format!("l{i}"))).unwrap();
        let right = Sentence::from_tokens((0..dim_words).map(|i| format!("r{i}"))).unwrap();
        LabeledPairSet {
            pairs: vec![
                LabeledPair {
                    a: same.clone(),
                    b: same,
                    label: Label::Positive,
                },
                LabeledPair {
                    a: left,
                    b: right,
                    label: Label::Negative,
                },
            ],
        }
    }

    fn toy_config(kind: EncoderKind) -> TrainConfig {
        TrainConfig {
            encoder: kind,
            epochs: 50,
            dim: 16,
            hidden: 8,
            batch_size: 2,
            lr: 0.01,
            keep_prob: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn toy_loss_decreases() {
        let data = toy_set(12);
        let before = data.clone();
        for kind in [EncoderKind::Wa, EncoderKind::Gran] {
            // Without dropout the identical pair costs nothing; a wide margin
            // gives the disjoint pair a loss to reduce.
            let config = TrainConfig {
                margin: 1.5,
                ..toy_config(kind)
            };
            let (_, log) = train::<f32>(&config, &data, None).unwrap();
            assert_eq!(log.epochs.len(), 50);
            let losses: Vec<f64> = log.epochs.iter().map(|r| r.mean_loss).collect();
            assert!(
                losses[0] > 0.0 && losses[49] < losses[0],
                "{kind}: {losses:?}"
            );
            for w in losses[10..].windows(2) {
                assert!(w[1] <= w[0] * 1.05 + 1e-9, "{kind}: {losses:?}");
            }
        }
        let dropout = TrainConfig {
            keep_prob: 0.8,
            ..toy_config(EncoderKind::Gran)
        };
        let (_, log) = train::<f32>(&dropout, &data, None).unwrap();
        assert!(log.final_loss().unwrap() < log.epochs[0].mean_loss);
        assert_eq!(data, before);
    }

    #[test]
    fn batches_per_epoch_arithmetic() {
        let c = TrainConfig::default();
        assert_eq!(c.batch_size, 128);
        assert_eq!(c.lr, 0.001);
        assert_eq!(c.margin, 0.4);
        assert_eq!(c.batches_per_epoch(2_000_000), 15_625);
        assert_eq!(c.batches_per_epoch(129), 2);
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            TrainConfig {
                batch_size: 0,
                ..ok.clone()
            },
            TrainConfig {
                margin: -0.1,
                ..ok.clone()
            },
            TrainConfig {
                keep_prob: 0.0,
                ..ok.clone()
            },
            TrainConfig {
                lr: 0.0,
                ..ok.clone()
            },
            TrainConfig {
                patience: Some(0),
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn non_finite_loss_names_the_batch() {
        let config = TrainConfig {
            lr: 1e30,
            ..toy_config(EncoderKind::Gran)
        };
        let data = LabeledPairSet {
            pairs: toy_set(12).pairs.into_iter().cycle().take(8).collect(),
        };
        match train::<f32>(&config, &data, None) {
            Err(Error::NonFiniteLoss { epoch, batch }) => assert!(epoch >= 1 && batch < 4),
            other => panic!("expected a non-finite loss, got {other:?}"),
        }
    }

    fn trained(kind: EncoderKind, seed: u64) -> (EncoderModel<f32>, TrainConfig) {
        let config = TrainConfig {
            seed,
            epochs: 3,
            keep_prob: 0.8,
            ..toy_config(kind)
        };
        (train::<f32>(&config, &toy_set(5), None).unwrap().0, config)
    }

    #[test]
    fn training_is_deterministic() {
        for kind in [EncoderKind::Wa, EncoderKind::Gran] {
            let (a, ca) = trained(kind, 7);
            let (b, cb) = trained(kind, 7);
            assert_eq!(
                write_checkpoint(&a, &ca).unwrap(),
                write_checkpoint(&b, &cb).unwrap()
            );
            let (c, cc) = trained(kind, 8);
            assert_ne!(
                write_checkpoint(&a, &ca).unwrap(),
                write_checkpoint(&c, &cc).unwrap()
            );
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        for kind in [EncoderKind::Wa, EncoderKind::Gran] {
            let (model, config) = trained(kind, 1);
            let bytes = write_checkpoint(&model, &config).unwrap();
            assert_eq!(&bytes[..5], b"PARA1");
            let back = read_checkpoint(&bytes).unwrap();
            assert_eq!(back.config, config);
            assert_eq!(back.model.vocab, model.vocab);
            for ((na, a), (nb, b)) in back
                .model
                .encoder
                .params()
                .iter()
                .zip(model.encoder.params().iter())
            {
                assert_eq!(na, nb);
                let bits = |m: &paraembed::numcore::Matrix<f32>| {
                    m.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>()
                };
                assert_eq!(bits(a), bits(b), "{na}");
            }
            assert_eq!(write_checkpoint(&back.model, &back.config).unwrap(), bytes);
        }
    }

    #[test]
    fn wa_checkpoint_has_no_recurrent_parameters() {
        let (model, config) = trained(EncoderKind::Wa, 1);
        let back = read_checkpoint(&write_checkpoint(&model, &config).unwrap()).unwrap();
        assert_eq!(
            back.model.encoder.params().names(),
            vec![names::EMBEDDING.to_owned()]
        );
    }

    #[test]
    fn checkpoint_damage_is_reported() {
        let (model, config) = trained(EncoderKind::Gran, 1);
        let bytes = write_checkpoint(&model, &config).unwrap();

        let mut flipped = bytes.clone();
        let k = bytes.len() - 200;
        flipped[k] ^= 0x10;
        assert!(matches!(
            read_checkpoint(&flipped),
            Err(Error::Checksum { .. })
        ));

        for cut in [bytes.len() - 1, bytes.len() - 4, bytes.len() / 2, 30] {
            assert!(
                matches!(read_checkpoint(&bytes[..cut]), Err(Error::Truncated)),
                "cut at {cut}"
            );
        }

        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(read_checkpoint(&magic), Err(Error::BadMagic)));

        let mut version = bytes.clone();
        version[5] = 9;
        assert!(matches!(
            read_checkpoint(&version),
            Err(Error::VersionMismatch {
                found: 9,
                expected: 1
            })
        ));
    }

    #[test]
    fn checkpoint_kind_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wa.ckpt");
        let (model, config) = trained(EncoderKind::Wa, 1);
        save_checkpoint(&model, &config, &path).unwrap();
        assert!(load_checkpoint_as(&path, EncoderKind::Wa).is_ok());
        assert!(matches!(
            load_checkpoint_as(&path, EncoderKind::Gran),
            Err(Error::KindMismatch {
                expected: "gran",
                found: "wa"
            })
        ));
        assert!(matches!(
            load_checkpoint(&dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn mismatched_config_is_refused() {
        let (model, config) = trained(EncoderKind::Gran, 1);
        let wrong = TrainConfig {
            hidden: 9,
            ..config
        };
        assert!(write_checkpoint(&model, &wrong).is_err());
    }

    #[test]
    fn log_csv_layout() {
        let log = TrainLog {
            epochs: vec![
                EpochRecord {
                    epoch: 1,
                    mean_loss: 0.5,
                    seconds: 1.25,
                    dev_accuracy: None,
                },
                EpochRecord {
                    epoch: 2,
                    mean_loss: 0.25,
                    seconds: 1.0,
                    dev_accuracy: Some(0.75),
                },
            ],
            best_epoch: None,
        };
        assert_eq!(
            log.to_csv(),
            "epoch,mean_loss,seconds,dev_accuracy\n1,0.5,1.250,\n2,0.25,1.000,0.75\n"
        );
    }
}
