use proptest::prelude::*;

use tre_kit::divergence::{tre, tre_limit, tre_psd, Endpoint};
use tre_kit::frechet::t_map;
use tre_kit::harness::ensemble::{ginibre_state, random_hermitian, random_psd, trial_rng};
use tre_kit::operator::{
    positive_part, support_projector, trace_distance, DensityMatrix, HermitianMatrix, PsdMatrix, ToleranceConfig,
};
use tre_kit::quadrature::quadrature_tre;

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn state(seed: u64, stream: u64, dim: usize, rank: usize) -> DensityMatrix {
    ginibre_state(&mut trial_rng(seed, stream), dim, rank).unwrap()
}

/// Full-rank state with spectrum bounded below by 1/(2 dim).
fn conditioned(seed: u64, stream: u64, dim: usize) -> DensityMatrix {
    state(seed, stream, dim, dim).mix(0.5, &DensityMatrix::maximally_mixed(dim)).unwrap()
}

fn min_eigenvalue(h: &HermitianMatrix) -> f64 {
    h.spectral().unwrap().lambda_min()
}

fn dims() -> impl Strategy<Value = usize> {
    2usize..=5
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn support_projector_fixes_operator(seed in any::<u64>(), dim in dims(), deficit in 0usize..2) {
        let x = state(seed, 0, dim, dim - deficit.min(dim - 1));
        let p = support_projector(&x, &tol());
        let px = HermitianMatrix::hermitian_part(&(p.entries() * x.entries()));
        prop_assert!(px.max_abs_diff(&x) < 1e-12);
        prop_assert!(p.max_abs_diff(&HermitianMatrix::hermitian_part(&(p.entries() * p.entries()))) < 1e-12);
    }

    #[test]
    fn positive_part_decomposition(seed in any::<u64>(), dim in dims()) {
        let x = random_hermitian(&mut trial_rng(seed, 1), dim);
        let plus = positive_part(&x).unwrap();
        let minus = positive_part(&x.scale(-1.0)).unwrap();
        prop_assert!((&*plus - &*minus).max_abs_diff(&x) < 1e-12 * x.max_abs().max(1.0));
        prop_assert!((plus.entries() * minus.entries()).camax() < 1e-12 * x.max_abs().powi(2).max(1.0));
    }

    #[test]
    fn trace_distance_is_a_metric(seed in any::<u64>(), dim in dims()) {
        let (r, s, w) = (state(seed, 0, dim, dim), state(seed, 1, dim, 1), state(seed, 2, dim, dim));
        let rs = trace_distance(&r, &s).unwrap();
        let sw = trace_distance(&s, &w).unwrap();
        let rw = trace_distance(&r, &w).unwrap();
        prop_assert!(rw <= rs + sw + 1e-14);
        prop_assert!((0.0..=1.0 + 1e-14).contains(&rs));
        prop_assert!((rs - trace_distance(&s, &r).unwrap()).abs() < 1e-14);
        prop_assert!(trace_distance(&r, &r).unwrap() < 1e-14);
    }

    #[test]
    fn t_map_is_self_adjoint_and_positive(seed in any::<u64>(), dim in dims()) {
        let a: PsdMatrix = conditioned(seed, 0, dim).into_psd();
        let mut rng = trial_rng(seed, 1);
        let (x, y) = (random_hermitian(&mut rng, dim), random_hermitian(&mut rng, dim));
        let tx = t_map(&a, &x, &tol()).unwrap();
        let ty = t_map(&a, &y, &tol()).unwrap();
        let scale = tx.max_abs().max(ty.max_abs()) * x.max_abs().max(y.max_abs());
        prop_assert!((y.trace_product(&tx) - x.trace_product(&ty)).abs() <= 1e-12 * scale);
        prop_assert!(x.trace_product(&tx) >= 0.0);

        // positivity of a linear map is order preservation
        let p = random_psd(&mut rng, dim, 1 + (seed as usize) % dim).unwrap();
        let tp = t_map(&a, &p, &tol()).unwrap();
        prop_assert!(min_eigenvalue(&tp) >= -1e-12 * tp.max_abs());
    }

    #[test]
    fn tre_matches_resolvent_quadrature(seed in any::<u64>(), dim in dims(), a in 0.02f64..0.98) {
        let rho = conditioned(seed, 0, dim);
        let sigma = conditioned(seed, 1, dim);
        let direct = tre(a, &rho, &sigma, &tol()).unwrap().value;
        let quad = quadrature_tre(a, &rho, &sigma, 2).unwrap();
        prop_assert!((direct - quad).abs() <= 1e-7, "direct {direct} quadrature {quad}");
    }

    #[test]
    fn tre_is_homogeneous(seed in any::<u64>(), dim in dims(), a in 0.02f64..0.98, b in 0.01f64..100.0) {
        let rho = state(seed, 0, dim, dim);
        let sigma = state(seed, 1, dim, 1 + (seed as usize) % dim);
        let base = tre(a, &rho, &sigma, &tol()).unwrap().value;
        let scaled = tre_psd(a, &rho.scaled(b).unwrap(), &sigma.scaled(b).unwrap(), &tol()).unwrap().value;
        prop_assert!((scaled - b * base).abs() <= 1e-10 * b.max(1.0));
    }

    #[test]
    fn tre_is_bounded_and_approaches_endpoints(seed in any::<u64>(), dim in dims(), rank in 1usize..=5) {
        let rho = state(seed, 0, dim, rank.min(dim));
        let sigma = state(seed, 1, dim, dim);
        let s0 = tre_limit(Endpoint::Zero, &rho, &sigma, &tol()).unwrap();
        let s1 = tre_limit(Endpoint::One, &rho, &sigma, &tol()).unwrap();
        let value = |a: f64| tre(a, &rho, &sigma, &tol()).unwrap().value;

        for a in [0.1, 0.5, 0.9] {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&value(a)));
        }
        let near_zero: Vec<f64> = [1e-2, 1e-4, 1e-6].iter().map(|&a| (value(a) - s0).abs()).collect();
        let near_one: Vec<f64> = [1.0 - 1e-2, 1.0 - 1e-4].iter().map(|&a| (value(a) - s1).abs()).collect();
        prop_assert!(near_zero.windows(2).all(|w| w[1] <= w[0]), "{near_zero:?}");
        prop_assert!(near_one[1] <= near_one[0], "{near_one:?}");
    }
}
