//! Cross-checks between independent constructions of the same law, and
//! structural properties of the operators and processes.

use fragcoag::distributions::{sample_dirichlet_sym, sample_gamma, sample_gamma_jumps, sample_pd, DEFAULT_TAIL_TOL};
use fragcoag::operators::{coag_a, coag_k, frag_inf, frag_k};
use fragcoag::stats::ks_two_sample;
use fragcoag::yule::simulate_yule_counts;
use fragcoag::{rank, RngStream, TruncatedRankedPartition, Validate};
use proptest::prelude::*;

const N: usize = 20_000;

fn draws(seed: u64, mut f: impl FnMut(&mut RngStream) -> f64) -> Vec<f64> {
    let mut rng = RngStream::new(seed, 0);
    (0..N).map(|_| f(&mut rng)).collect()
}

#[test]
fn stick_breaking_and_gamma_jumps_give_the_same_pd() {
    for theta in [0.5, 1.0, 3.0] {
        let sticks = draws(1, |rng| sample_pd(theta, DEFAULT_TAIL_TOL, rng).unwrap().largest());
        let jumps = draws(2, |rng| sample_gamma_jumps(theta, 1e-6, rng).unwrap().normalized().largest());
        let ks = ks_two_sample(&sticks, &jumps).unwrap();
        assert!(ks.p_value > 0.001, "theta {theta}: {ks:?}");
    }
}

#[test]
fn dirichlet_coordinate_is_a_beta_ratio() {
    // First coordinate of Dir_n(alpha) has the law G1 / (G1 + G2) with
    // G1 ~ Gamma(alpha), G2 ~ Gamma(n alpha).
    for (parts, alpha) in [(3, 1.0), (5, 0.5), (2, 2.5)] {
        let dir = draws(3, |rng| sample_dirichlet_sym(parts, alpha, rng).unwrap().masses()[0]);
        let ratio = draws(4, |rng| {
            let g1 = sample_gamma(alpha, 1.0, rng).unwrap();
            let g2 = sample_gamma((parts - 1) as f64 * alpha, 1.0, rng).unwrap();
            g1 / (g1 + g2)
        });
        let ks = ks_two_sample(&dir, &ratio).unwrap();
        assert!(ks.p_value > 0.001, "{parts} parts, alpha {alpha}: {ks:?}");
    }
}

#[test]
fn frag_then_coag_returns_to_the_same_level() {
    // Coag_k(Frag_k(x)) returns to the level of x.
    let mut rng = RngStream::new(5, 0);
    for _ in 0..1000 {
        let x = sample_dirichlet_sym(4, 0.5, &mut rng).unwrap();
        let y = frag_k(&x, 2, &mut rng).unwrap().output;
        let z = coag_k(&y, 2, &mut rng).unwrap().output;
        assert_eq!(z.len(), x.len());
        assert!((z.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frag_k_adds_k_masses(seed in any::<u64>(), parts in 1usize..8, k in 1usize..5) {
        let mut rng = RngStream::new(seed, 0);
        let x = sample_dirichlet_sym(parts, 1.0, &mut rng).unwrap();
        let rec = frag_k(&x, k, &mut rng).unwrap();
        prop_assert_eq!(rec.output.len(), parts + k);
        prop_assert!(rec.output.is_valid());
        prop_assert!((rec.output.masses().iter().sum::<f64>() - x.total()).abs() < 1e-12);
        prop_assert!(rank(&rec.output).largest() <= rank(&x).largest() + 1e-15);
    }

    #[test]
    fn coag_k_removes_k_masses(seed in any::<u64>(), extra in 0usize..6, k in 1usize..4) {
        let mut rng = RngStream::new(seed, 0);
        let x = sample_dirichlet_sym(extra + k + 1, 0.7, &mut rng).unwrap();
        let rec = coag_k(&x, k, &mut rng).unwrap();
        prop_assert_eq!(rec.output.len(), extra + 1);
        prop_assert!(rec.merge_start <= extra);
        prop_assert!(rank(&rec.output).largest() >= rank(&x).largest() - 1e-15);
    }

    #[test]
    fn infinite_operators_conserve_mass(seed in any::<u64>(), theta in 0.2f64..4.0, a in 0.05f64..1.0) {
        let mut rng = RngStream::new(seed, 0);
        let x = sample_pd(theta, DEFAULT_TAIL_TOL, &mut rng).unwrap();
        let check = |y: &TruncatedRankedPartition| -> Result<(), TestCaseError> {
            prop_assert!(y.is_valid());
            let sum: f64 = y.atoms().iter().sum::<f64>() + y.tail_mass();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(y.atoms().windows(2).all(|w| w[0] >= w[1]));
            Ok(())
        };
        check(&frag_inf(&x, &mut rng).unwrap())?;
        check(&coag_a(&x, a, &mut rng).unwrap())?;
    }

    #[test]
    fn yule_paths_jump_by_k(seed in any::<u64>(), k in 1usize..4, t_max in 0.1f64..1.5) {
        let p = simulate_yule_counts(k, t_max, &mut RngStream::new(seed, 0)).unwrap();
        let mut prev = p.initial;
        for (t, v) in p.jump_times.iter().zip(&p.values) {
            prop_assert!(*t > 0.0 && *t <= t_max);
            prop_assert_eq!(*v - prev, k as f64);
            prev = *v;
        }
        prop_assert!(p.jump_times.windows(2).all(|w| w[0] < w[1]));
    }
}
