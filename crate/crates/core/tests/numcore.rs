mod activation {
    use paraembed::numcore::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!((sigmoid(50.0f64) - 1.0).abs() < 1e-15);
        assert!(sigmoid(-800.0f64) >= 0.0);
        assert!(sigmoid(800.0f64) <= 1.0);
        assert_eq!(sigmoid_grad_from_output(sigmoid(0.0f64)), 0.25);
    }

    #[test]
    fn sigmoid_is_finite_over_wide_range() {
        for i in -1000..=1000 {
            let x = i as f32 * 0.1;
            let y = sigmoid(x);
            assert!(y.is_finite() && (0.0..=1.0).contains(&y));
        }
    }

    #[test]
    fn leaky_relu_values() {
        let a = Activation::default();
        assert_eq!(a.apply(2.0f64), 2.0);
        assert_eq!(a.apply(-1.0f64), -0.01);
        assert_eq!(a.grad(-5.0f64), 0.01);
        assert_eq!(a.grad(3.0f64), 1.0);
    }

    #[test]
    fn tanh_derivative_matches_finite_difference() {
        let a = Activation::Tanh;
        let x = 0.3f64;
        let h = 1e-6;
        let fd = (a.apply(x + h) - a.apply(x - h)) / (2.0 * h);
        assert!((fd - a.grad(x)).abs() < 1e-9);
    }
}

mod adam {
    use paraembed::numcore::*;

    use paraembed::error::Error;
    use paraembed::numcore::ParameterSet;

    use paraembed::numcore::Matrix;

    fn single(value: f64) -> ParameterSet<f64> {
        ParameterSet::new()
            .with("w", Matrix::filled(1, 1, value))
            .unwrap()
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        for g in [3.0, -0.25, 1e-3] {
            let mut p = single(1.0);
            let mut grads = p.zeros_like();
            grads.get_mut("w").unwrap().set(0, 0, g);
            adam_step(&mut p, &grads, &AdamConfig::default()).unwrap();
            let moved = p.get("w").unwrap().get(0, 0) - 1.0;
            // m_hat / sqrt(v_hat) = g / |g| exactly, up to eps.
            let expected = -0.001 * g.signum() * g.abs() / (g.abs() + 1e-8);
            assert!((moved - expected).abs() < 1e-15, "g={g} moved={moved}");
            assert_eq!(p.step(), 1);
        }
    }

    #[test]
    fn zero_gradient_leaves_fresh_state_unchanged() {
        let mut p = single(0.5);
        let grads = p.zeros_like();
        adam_step(&mut p, &grads, &AdamConfig::default()).unwrap();
        assert_eq!(p.get("w").unwrap().get(0, 0), 0.5);
        assert_eq!(p.first_moment("w").unwrap().get(0, 0), 0.0);
        assert_eq!(p.second_moment("w").unwrap().get(0, 0), 0.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = single(0.5);
        let other = ParameterSet::<f64>::new()
            .with("w", Matrix::zeros(2, 1))
            .unwrap();
        let err = adam_step(&mut p, &other.zeros_like(), &AdamConfig::default()).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
        assert_eq!(p.step(), 0);
    }

    #[test]
    fn deterministic_from_identical_state() {
        let mut a = single(0.1);
        let mut grads = a.zeros_like();
        grads.get_mut("w").unwrap().set(0, 0, 0.7);
        let mut b = a.clone();
        for _ in 0..5 {
            adam_step(&mut a, &grads, &AdamConfig::default()).unwrap();
            adam_step(&mut b, &grads, &AdamConfig::default()).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut p = single(2.0);
        let cfg = AdamConfig::with_lr(0.05);
        for _ in 0..2000 {
            let x = p.get("w").unwrap().get(0, 0);
            let mut g = p.zeros_like();
            g.get_mut("w").unwrap().set(0, 0, 2.0 * (x - 0.5));
            adam_step(&mut p, &g, &cfg).unwrap();
        }
        assert!((p.get("w").unwrap().get(0, 0) - 0.5).abs() < 1e-3);
    }
}

mod dropout {
    use paraembed::numcore::*;

    #[test]
    fn keep_one_is_identity() {
        let m = make_variational_mask::<f32>(16, 1.0, 3).unwrap();
        assert!(m.as_slice().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn rejects_bad_keep_prob() {
        assert!(make_variational_mask::<f32>(4, 0.0, 0).is_err());
        assert!(make_variational_mask::<f32>(4, 1.5, 0).is_err());
    }

    #[test]
    fn entries_are_zero_or_inverse_keep() {
        let m = make_variational_mask::<f64>(1000, 0.8, 1).unwrap();
        assert!(m.as_slice().iter().all(|&x| x == 0.0 || x == 1.0 / 0.8));
    }

    #[test]
    fn zero_fraction_matches_drop_rate() {
        // Binomial(1e5, 0.2) / 1e5 has sd ~0.0013; 0.01 is ~8 sd.
        let m = make_variational_mask::<f32>(100_000, 0.8, 11).unwrap();
        let zeros = m.as_slice().iter().filter(|&&x| x == 0.0).count() as f64 / 1e5;
        assert!((zeros - 0.2).abs() < 0.01, "zero fraction {zeros}");
    }

    #[test]
    fn masked_constant_keeps_its_mean() {
        let m = make_variational_mask::<f64>(200_000, 0.6, 5).unwrap();
        let mut out = vec![0.0; m.len()];
        m.apply_into(&vec![3.0; m.len()], &mut out);
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        assert!((mean - 3.0).abs() < 0.03, "mean {mean}");
    }
}

mod gradcheck {
    use paraembed::numcore::*;

    use paraembed::error::{Error, Result};
    use paraembed::numcore::Matrix;
    use paraembed::numcore::{Gradients, ParameterSet};

    fn params() -> ParameterSet<f64> {
        ParameterSet::new()
            .with(
                "a",
                Matrix::from_vec(2, 2, vec![0.3, -1.2, 2.0, 0.7]).unwrap(),
            )
            .unwrap()
            .with("b", Matrix::column_vector(vec![-0.4, 0.9, 1.5]))
            .unwrap()
    }

    fn sum_of_squares(p: &ParameterSet<f64>, fault: f64) -> Result<(f64, Gradients<f64>)> {
        let mut g = p.zeros_like();
        let mut loss = 0.0;
        for (name, m) in p.iter() {
            let gm = g.get_mut(name)?;
            for (gi, &x) in gm.as_mut_slice().iter_mut().zip(m.as_slice()) {
                loss += x * x;
                *gi = 2.0 * x;
            }
        }
        g.get_mut("b")?.as_mut_slice()[1] *= fault;
        Ok((loss, g))
    }

    #[test]
    fn quadratic_is_exact() {
        let r = gradient_check(|p| sum_of_squares(p, 1.0), &params(), 1e-4, 0).unwrap();
        assert!(r.max_relative_error < 1e-9, "{r:?}");
        assert_eq!(r.parameters.len(), 2);
    }

    #[test]
    fn injected_fault_is_detected() {
        // Doubling one entry gives |2g - g| / |2g| = 1/2.
        let r = gradient_check(|p| sum_of_squares(p, 2.0), &params(), 1e-4, 0).unwrap();
        assert!(r.max_relative_error >= 1.0 / 3.0, "{r:?}");
        assert_eq!(r.worst().unwrap().name, "b");
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let err =
            gradient_check(|p| Ok((f64::NAN, p.zeros_like())), &params(), 1e-4, 0).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn samples_at_most_the_cap() {
        let big = ParameterSet::new()
            .with("w", Matrix::filled(30, 30, 0.5))
            .unwrap();
        let r = gradient_check(|p| sum_of_squares_single(p), &big, 1e-4, 9).unwrap();
        assert_eq!(r.parameters[0].coordinates, MAX_COORDS_PER_PARAMETER);
    }

    fn sum_of_squares_single(p: &ParameterSet<f64>) -> Result<(f64, Gradients<f64>)> {
        let m = p.get("w")?;
        let mut g = p.zeros_like();
        let loss = m.as_slice().iter().map(|x| x * x).sum();
        *g.get_mut("w")? = m.map(|x| 2.0 * x);
        Ok((loss, g))
    }
}

mod init {
    use paraembed::numcore::*;

    #[test]
    fn uniform_respects_bounds_and_seed() {
        let a = uniform_init::<f32>(50, 40, -0.01, 0.01, 7).unwrap();
        assert!(a.as_slice().iter().all(|x| (-0.01..=0.01).contains(x)));
        assert_eq!(a, uniform_init::<f32>(50, 40, -0.01, 0.01, 7).unwrap());
        assert_ne!(a, uniform_init::<f32>(50, 40, -0.01, 0.01, 8).unwrap());
    }

    #[test]
    fn uniform_narrow_band() {
        let eps = 1e-6;
        let a = uniform_init::<f64>(10, 10, 1.0 - eps, 1.0, 1).unwrap();
        assert!(a.as_slice().iter().all(|&x| x >= 1.0 - eps && x <= 1.0));
    }

    #[test]
    fn uniform_rejects_empty_range() {
        assert!(uniform_init::<f32>(1, 1, 0.5, 0.5, 0).is_err());
    }

    #[test]
    fn xavier_bound_and_mean() {
        assert!((xavier_bound(3, 3) - 1.0).abs() < 1e-15);
        let a = xavier_init::<f64>(100, 100, 3).unwrap();
        let b = xavier_bound(100, 100);
        assert!(a.as_slice().iter().all(|x| x.abs() <= b));
        // Uniform(-b, b) has sd b/sqrt(3) ~ 0.1, so the mean of 1e4 draws has sd ~ 0.001.
        let mean: f64 = a.as_slice().iter().sum::<f64>() / a.len() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
    }
}

mod matrix {
    use paraembed::numcore::*;

    fn m() -> Matrix<f64> {
        Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap()
    }

    #[test]
    fn matvec_and_transpose() {
        let a = m();
        assert_eq!(a.matvec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        let mut out = vec![1.0; 3];
        a.matvec_transposed_add(&[1.0, 1.0], &mut out);
        assert_eq!(out, vec![6.0, 8.0, 10.0]);
    }

    #[test]
    fn outer_product_accumulates() {
        let mut a = Matrix::<f32>::zeros(2, 2);
        a.add_outer(&[1.0, 2.0], &[3.0, 4.0]);
        a.add_outer(&[1.0, 0.0], &[1.0, 1.0]);
        assert_eq!(a.as_slice(), &[4.0, 5.0, 6.0, 8.0]);
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(Matrix::<f32>::from_vec(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn cast_roundtrip_is_exact_for_f32_values() {
        let a = Matrix::<f32>::from_vec(1, 3, vec![0.1, -2.5, 1e-7]).unwrap();
        assert_eq!(a.cast::<f64>().cast::<f32>(), a);
    }
}
