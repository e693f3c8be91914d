use iontomo::entanglement::fidelity;
use iontomo::gate::apply_ideal_gate;
use iontomo::pipeline::{fitted_fidelity, run_tomography, NoiseModel, TomographyConfig};
use iontomo::state::{pauli_pair, random_density, validate_density, Basis, DensityMatrix, PureState};
use iontomo::stats::{bootstrap, Seed};
use iontomo::tomography::{
    linear_inversion, mle_fit, simulate_counts, CountsRecord, DetectionModel, MeasurementSetting, MleOptions,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn psi1() -> DensityMatrix {
    apply_ideal_gate(&PureState::basis(Basis::Uu), 0.0, 0.0).density()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mle_output_is_always_physical(counts in prop::collection::vec(prop::array::uniform4(0u64..60), 9)) {
        let records: Vec<CountsRecord> = MeasurementSetting::all()
            .into_iter()
            .zip(&counts)
            .map(|(s, c)| {
                let mut c = *c;
                if c.iter().sum::<u64>() == 0 {
                    c[3] = 1;
                }
                CountsRecord::new(s, c).unwrap()
            })
            .collect();
        let fit = mle_fit(&records, &DetectionModel::symmetric(0.97), &MleOptions::default()).unwrap();
        prop_assert!(!validate_density(fit.rho_hat.matrix(), 1e-9).flagged);
    }

    #[test]
    fn record_permutation_leaves_fit_unchanged(seed in 0u64..1000, rot in 1usize..9) {
        let det = DetectionModel::symmetric(0.97);
        let recs = simulate_counts(&psi1(), &MeasurementSetting::all(), 200, &det, Seed(seed)).unwrap();
        let mut perm = recs.clone();
        perm.rotate_left(rot);
        let a = mle_fit(&recs, &det, &MleOptions::default()).unwrap();
        let b = mle_fit(&perm, &det, &MleOptions::default()).unwrap();
        prop_assert!(a.rho_hat.matrix().max_abs_diff(b.rho_hat.matrix()) <= 1e-10);
    }
}

#[test]
fn mle_is_consistent_at_large_shot_counts() {
    let det = DetectionModel::symmetric(0.97);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for k in 0..3 {
        let rho = random_density(&mut rng);
        let recs = simulate_counts(&rho, &MeasurementSetting::all(), 1_000_000, &det, Seed(k)).unwrap();
        let fit = mle_fit(&recs, &det, &MleOptions::default()).unwrap();
        let d = fit.rho_hat.trace_distance(&rho).unwrap();
        assert!(d <= 5e-3, "trace distance {d}");
    }
}

#[test]
fn detection_round_trip_is_unbiased() {
    let det = DetectionModel::asymmetric([0.02, 0.03], [0.04, 0.01]);
    let rho = DensityMatrix::mix(0.8, &psi1(), &DensityMatrix::maximally_mixed()).unwrap();
    let n = 200;
    let estimates: Vec<[[f64; 4]; 4]> = (0..n)
        .map(|s| {
            let recs = simulate_counts(&rho, &MeasurementSetting::all(), 200, &det, Seed(500 + s)).unwrap();
            linear_inversion(&recs, &det).unwrap().coeffs.0
        })
        .collect();
    for i in 0..4 {
        for j in 0..4 {
            let truth = rho.expectation(&pauli_pair(i, j)).re;
            let vals: Vec<f64> = estimates.iter().map(|e| e[i][j]).collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let se = (var / n as f64).sqrt();
            assert!((mean - truth).abs() <= 3.0 * se + 1e-12, "r_{i}{j}: {mean} vs {truth} (se {se})");
        }
    }
}

#[test]
fn bell_fidelity_clears_threshold_in_most_seeds() {
    let cfg = TomographyConfig {
        resamples: 0,
        ..TomographyConfig::default()
    };
    let good = (0..100u64)
        .into_par_iter()
        .filter(|&s| {
            let run = run_tomography(Basis::Uu, &cfg, Seed(7000 + s)).unwrap();
            fidelity(&run.mle.rho_hat, &run.target.pure()) >= 0.95
        })
        .count();
    assert!(good >= 90, "{good}/100");
}

#[test]
fn reference_noise_fidelities_fall_in_reported_band() {
    let cfg = TomographyConfig {
        phi_e: -1.1,
        phi_o: 0.43,
        noise: NoiseModel::reference(),
        resamples: 0,
        ..TomographyConfig::default()
    };
    for b in Basis::ALL {
        let f = run_tomography(b, &cfg, Seed(11)).unwrap().measures.f;
        assert!((0.6..=0.9).contains(&f), "{b}: {f}");
    }
}

#[test]
fn quadrupling_shots_halves_bootstrap_error() {
    let cfg = TomographyConfig {
        noise: NoiseModel::reference(),
        resamples: 0,
        ..TomographyConfig::default()
    };
    let (truth, _) = iontomo::pipeline::prepare_output(Basis::Uu, &cfg).unwrap();
    let det = DetectionModel::symmetric(0.97);
    let opts = MleOptions::default();
    let se = |shots: u64| {
        let recs = simulate_counts(&truth, &MeasurementSetting::all(), shots, &det, Seed(shots)).unwrap();
        bootstrap("f", &recs, 300, |r| fitted_fidelity(r, &det, Basis::Uu, &opts), Seed(9), false)
            .unwrap()
            .standard_error
    };
    let ratio = se(200) / se(800);
    assert!((ratio - 2.0).abs() <= 0.6, "ratio {ratio}");
}
