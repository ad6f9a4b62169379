//! Property-based tests for the structural invariants.

use proptest::prelude::*;

use tklmc::diagnostics::w2_1d_empirical;
use tklmc::experiment::{parse_config, ExperimentSpec, SamplerChoice};
use tklmc::kernels::{psi, GaussianPairKernel};
use tklmc::samplers::{InitialState, SamplerKind};
use tklmc::taming::TamedGradient;
use tklmc::targets::TargetPotential;

fn coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn taming_dissipativity_and_growth(
        x in coords(3),
        gamma in 0.1..1000.0f64,
        quadratic in any::<bool>(),
    ) {
        let target = if quadratic {
            TargetPotential::quadratic(5.0, 3).unwrap()
        } else {
            TargetPotential::quartic(3)
        };
        let tamed = TamedGradient::new(&target, gamma).unwrap();
        let ht = tamed.eval(&x);
        let norm_x = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let norm_ht = ht.iter().map(|c| c * c).sum::<f64>().sqrt();
        let inner: f64 = ht.iter().zip(&x).map(|(a, b)| a * b).sum();
        prop_assert!(inner >= 0.5 * target.m * norm_x * norm_x - target.u0);
        prop_assert!(norm_ht <= 2.0 * gamma.sqrt() + 0.5 * target.m * norm_x);
        // the rescaled part itself stays inside 2 sqrt(gamma)
        let f_tam: f64 = ht
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - 0.5 * target.m * b) * (a - 0.5 * target.m * b))
            .sum::<f64>()
            .sqrt();
        prop_assert!(f_tam <= 2.0 * gamma.sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn kernel_bounds_hold_across_scales(
        log_gamma in -3.0..3.0f64,
        log_lambda in -9.0..1.0f64,
    ) {
        let gamma = 10f64.powf(log_gamma);
        let lambda = 10f64.powf(log_lambda);
        let k = GaussianPairKernel::build(gamma, lambda).unwrap();
        prop_assert!(k.c11 >= 0.0 && k.c11 <= lambda);
        prop_assert!(k.c22 >= 0.0 && k.c22 <= lambda * lambda * lambda / 3.0);
        prop_assert!(k.c12 <= lambda * lambda / 2.0);
        prop_assert!(k.c11 * k.c22 - k.c12 * k.c12 >= -1e-18);
        // Cholesky factor reproduces the covariance entries
        prop_assert!((k.chol_l11 * k.chol_l11 - k.c11).abs() <= 1e-12 * k.c11.max(1e-300));
        prop_assert!((k.chol_l11 * k.chol_l21 - k.c12).abs() <= 1e-10 * k.c12.abs().max(1e-300));
    }

    #[test]
    fn psi_values_stay_in_range(t in 0.0..100.0f64, gamma in 1e-3..1e3f64) {
        let p0 = psi(0, t, gamma);
        let p1 = psi(1, t, gamma);
        let p2 = psi(2, t, gamma);
        prop_assert!((0.0..=1.0).contains(&p0));
        prop_assert!((0.0..=t.min(1.0 / gamma) * 1.0000000001).contains(&p1));
        prop_assert!(p2 >= 0.0 && p2 <= t * t / 2.0 * 1.0000000001);
    }

    #[test]
    fn w2_symmetry_and_identity(
        a in prop::collection::vec(-10.0..10.0f64, 1..60),
        shift in -2.0..2.0f64,
    ) {
        let b: Vec<f64> = a.iter().map(|v| v + shift).collect();
        let ab = w2_1d_empirical(&a, &b).unwrap();
        let ba = w2_1d_empirical(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        // shifting every sample by the same amount moves W2 by exactly |shift|
        prop_assert!((ab - shift.abs()).abs() < 1e-9);
        prop_assert_eq!(w2_1d_empirical(&a, &a).unwrap(), 0.0);
    }
}

fn sampler_strategy() -> impl Strategy<Value = SamplerChoice> {
    prop_oneof![
        Just(SamplerChoice::Chain(SamplerKind::Tklmc1)),
        Just(SamplerChoice::Chain(SamplerKind::Tklmc2)),
        Just(SamplerChoice::Chain(SamplerKind::OverdampedTamed)),
    ]
}

fn spec_strategy() -> impl Strategy<Value = ExperimentSpec> {
    (
        (
            prop_oneof![
                Just("quartic".to_string()),
                (0.5..10.0f64).prop_map(|a| format!("quadratic:a={a}"))
            ],
            sampler_strategy(),
            1..4usize,
            (1e-6..0.2f64, 0.5..700.0f64, 0.1..20.0f64),
            10..100_000usize,
            any::<u64>(),
            1..16usize,
            1..50usize,
        ),
        (
            any::<bool>(),
            any::<bool>(),
            prop::option::of(1e-4..0.5f64),
            prop::option::of(1.0..1e4f64),
            (-4.0..4.0f64, 0.1..3.0f64, any::<bool>()),
            prop::collection::vec(1..6u32, 0..3),
            any::<bool>(),
            prop::option::of(1.0..10.0f64),
            0..8usize,
        ),
    )
        .prop_map(
            |(
                (target, sampler, dim, (lambda, gamma, beta), n_steps, seed, n_chains, thin),
                (
                    strict,
                    untamed,
                    epsilon,
                    lipschitz_k,
                    (point, scale, gaussian),
                    moment_halves,
                    w2,
                    tail_radius,
                    jobs,
                ),
            )| {
                ExperimentSpec {
                    target,
                    sampler,
                    dim,
                    lambda,
                    gamma,
                    beta,
                    n_steps,
                    burn_in: n_steps / 3,
                    seed,
                    n_chains,
                    thin,
                    strict,
                    untamed,
                    epsilon,
                    lipschitz_k,
                    init: if gaussian {
                        InitialState::Gaussian { scale }
                    } else {
                        InitialState::Point(vec![point; dim])
                    },
                    moments: moment_halves.into_iter().map(|h| 2 * h).collect(),
                    w2,
                    tail_radius,
                    jobs,
                    ..ExperimentSpec::default()
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn config_round_trip(spec in spec_strategy()) {
        let rendered = spec.render();
        let parsed = parse_config(&rendered).unwrap();
        prop_assert_eq!(parsed, spec);
    }
}
