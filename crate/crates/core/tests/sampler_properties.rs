use drexel_core::energy::make_ising_lattice;
use drexel_core::math::softmax_in_place;
use drexel_core::oracle::{detailed_balance_check, enumerate_tempered, exact_single_kernel};
use drexel_core::rng::aux_stream;
use drexel_core::sampler::{binary_flip_probs, proposal_logits, swap_probability};
use drexel_core::{ChainParams, DomainSpec, EnergyModel, QuadraticEnergy, RbmFreeEnergy, StateVector, SwapConfig, SwapVariant};
use proptest::prelude::*;
use rand::Rng;

fn random_quadratic(domain: DomainSpec, seed: u64) -> QuadraticEnergy {
    let n = domain.dim();
    let mut rng = aux_stream(seed);
    let mut j = vec![0.0; n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let v = rng.random_range(-1.0..1.0);
            j[a * n + b] = v;
            j[b * n + a] = v;
        }
    }
    let bias = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
    QuadraticEnergy::new(domain, j, bias, rng.random_range(0.05..0.5)).unwrap()
}

fn random_state<R: Rng>(domain: &DomainSpec, rng: &mut R) -> StateVector {
    StateVector::new((0..domain.dim()).map(|_| rng.random_range(0..domain.levels())).collect())
}

/// Flip probabilities from the general categorical proposal.
fn softmax_flip_probs<M: EnergyModel>(m: &M, s: &StateVector, p: &ChainParams) -> Vec<f64> {
    (0..m.domain().dim())
        .map(|c| {
            let mut l = proposal_logits(m, s, p, c).unwrap();
            softmax_in_place(&mut l);
            l[1 - s.indices()[c]]
        })
        .collect()
}

#[test]
fn flip_probs_agree_with_softmax_on_spin_and_binary() {
    let ising = make_ising_lattice(4, 0.15, vec![0.1; 16], true).unwrap();
    let rbm = {
        let mut rng = aux_stream(3);
        RbmFreeEnergy::new(
            (0..8 * 16).map(|_| rng.random_range(-1.0..1.0)).collect(),
            (0..8).map(|_| rng.random_range(-1.0..1.0)).collect(),
            (0..16).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    };
    let mut rng = aux_stream(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = ChainParams::new(rng.random_range(0.05..3.0), rng.random_range(0.5..4.0), false).unwrap();
        let s = random_state(ising.domain(), &mut rng);
        for (a, b) in binary_flip_probs(&ising, &s, &p).unwrap().iter().zip(softmax_flip_probs(&ising, &s, &p)) {
            worst = worst.max((a - b).abs());
        }
        let s = random_state(rbm.domain(), &mut rng);
        for (a, b) in binary_flip_probs(&rbm, &s, &p).unwrap().iter().zip(softmax_flip_probs(&rbm, &s, &p)) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn single_chain_mh_kernel_is_reversible_for_any_step() {
    let q = random_quadratic(DomainSpec::spin(5).unwrap(), 9);
    for (alpha, tau) in [(0.01, 1.0), (0.4, 1.0), (2.0, 0.5), (25.0, 3.0)] {
        let p = ChainParams::new(alpha, tau, true).unwrap();
        let k = exact_single_kernel(&q, &p, true).unwrap();
        let pi = enumerate_tempered(&q, tau).unwrap();
        assert!(detailed_balance_check(&k, &pi).unwrap() <= 1e-12);
        assert!(k.max_row_sum_error() <= 1e-12);
        // at α = 0.01 multi-flip moves underflow to exactly zero
        if alpha >= 0.1 {
            assert!(k.min_entry() > 0.0);
        }
    }
    let g = random_quadratic(DomainSpec::grid(2, 6, -1.0, 1.0).unwrap(), 10);
    let p = ChainParams::new(0.3, 1.0, true).unwrap();
    let k = exact_single_kernel(&g, &p, true).unwrap();
    assert!(detailed_balance_check(&k, &enumerate_tempered(&g, 1.0).unwrap()).unwrap() <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn proposal_softmax_sums_to_one(
        seed in any::<u64>(),
        levels in 2usize..40,
        alpha in 1e-3f64..10.0,
        tau in 0.1f64..10.0,
    ) {
        let m = random_quadratic(DomainSpec::grid(3, levels, -2.0, 2.0).unwrap(), seed);
        let mut rng = aux_stream(seed ^ 1);
        let s = random_state(m.domain(), &mut rng);
        let p = ChainParams::new(alpha, tau, false).unwrap();
        for c in 0..3 {
            let mut l = proposal_logits(&m, &s, &p, c).unwrap();
            softmax_in_place(&mut l);
            prop_assert!((l.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn history_swap_is_time_reversal_symmetric(
        t1 in 0.1f64..5.0, t2 in 0.1f64..5.0,
        a in -50.0f64..50.0, b in -50.0f64..50.0, c in -50.0f64..50.0, d in -50.0f64..50.0,
        rho in 0.0f64..=1.0,
    ) {
        let cfg = SwapConfig::new(SwapVariant::History, rho).unwrap();
        let fwd = swap_probability(&cfg, t1, t2, a, b, c, d).unwrap();
        let rev = swap_probability(&cfg, t1, t2, c, d, a, b).unwrap();
        prop_assert_eq!(fwd, rev);
        prop_assert!((0.0..=1.0).contains(&fwd));
    }

    #[test]
    fn swap_probabilities_in_unit_interval(
        t1 in 0.1f64..5.0, t2 in 0.1f64..5.0,
        a in -50.0f64..50.0, b in -50.0f64..50.0,
        sigma2 in 0.0f64..3.0, rho in 0.0f64..=1.0,
    ) {
        for v in [SwapVariant::Naive, SwapVariant::BiasCorrected { sigma2 }, SwapVariant::History] {
            let p = swap_probability(&SwapConfig::new(v, rho).unwrap(), t1, t2, a, b, b, a).unwrap();
            prop_assert!((0.0..=rho).contains(&p));
        }
    }

    #[test]
    fn single_kernels_are_stochastic_and_positive(seed in any::<u64>(), alpha in 0.05f64..3.0, mh in any::<bool>()) {
        let q = random_quadratic(DomainSpec::spin(4).unwrap(), seed);
        let k = exact_single_kernel(&q, &ChainParams::new(alpha, 1.0, mh).unwrap(), mh).unwrap();
        prop_assert!(k.max_row_sum_error() <= 1e-12);
        prop_assert!(k.min_entry() > 0.0);
    }
}
