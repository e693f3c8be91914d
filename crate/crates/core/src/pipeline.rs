//! End-to-end simulated tomography of one gate output.
//!
//! input basis state → preparation error (odd inputs) → ideal gate →
//! scattering → shot-noise counts with biased detection → calibration from
//! `|↑↑>`/`|↓↓>` control runs → linear inversion and MLE → measures →
//! bootstrap of the fidelity.

use serde::{Deserialize, Serialize};

use crate::entanglement::{analyze, fidelity, parity_class, MeasuresReport, ParityClass, TargetState};
use crate::error::{invalid, Result};
use crate::gate::noise::{prep_error_channel, scattering_channel, DEFAULT_KAPPA};
use crate::gate::ideal_gate_unitary;
use crate::state::{Basis, DensityMatrix};
use crate::stats::{bootstrap, BootstrapReport, Seed, DEFAULT_RESAMPLES};
use crate::tomography::{
    calibrate_detection, linear_inversion, mle_fit, simulate_counts, Calibration, CountsRecord, DetectionModel,
    LinearInversion, MeasurementSetting, MleOptions, TomographyResult,
};

/// Gate phases and error channels applied to the prepared state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p_sc: f64,
    pub kappa: f64,
    /// Preparation fidelity of odd-parity inputs; even inputs are ideal.
    pub f_prep_odd: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            p_sc: 0.0,
            kappa: DEFAULT_KAPPA,
            f_prep_odd: 1.0,
        }
    }

    /// `p_sc = 0.3`, `κ = 0.27`, odd-input preparation fidelity 0.85.
    pub fn reference() -> Self {
        Self {
            p_sc: 0.3,
            kappa: DEFAULT_KAPPA,
            f_prep_odd: 0.85,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TomographyConfig {
    pub phi_e: f64,
    pub phi_o: f64,
    pub noise: NoiseModel,
    /// Detector used to generate all counts.
    pub detection: DetectionModel,
    pub shots: u64,
    pub control_shots: u64,
    /// Zero disables the bootstrap.
    pub resamples: usize,
    pub mle: MleOptions,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            phi_e: 0.0,
            phi_o: 0.0,
            noise: NoiseModel::noiseless(),
            detection: DetectionModel::symmetric(0.97),
            shots: 200,
            control_shots: 200,
            resamples: DEFAULT_RESAMPLES,
            mle: MleOptions::default(),
        }
    }
}

/// Everything produced by one simulated tomography run.
#[derive(Clone, Debug)]
pub struct TomographyRun {
    pub input: Basis,
    pub target: TargetState,
    /// Simulated state before measurement.
    pub truth: DensityMatrix,
    pub records: Vec<CountsRecord>,
    pub controls: [CountsRecord; 2],
    pub calibration: Calibration,
    pub linear: LinearInversion,
    pub mle: TomographyResult,
    pub measures: MeasuresReport,
    /// Fidelity of the reconstruction to the simulated state's target at the configured gate phase.
    pub target_fidelity: f64,
    pub bootstrap: Option<BootstrapReport>,
}

/// The state reaching the detector for computational input `input`.
pub fn prepare_output(input: Basis, cfg: &TomographyConfig) -> Result<(DensityMatrix, TargetState)> {
    let mut rho = DensityMatrix::basis(input);
    if parity_class(input) == ParityClass::Odd {
        rho = prep_error_channel(&rho, cfg.noise.f_prep_odd)?;
    }
    let rho = rho.evolve(&ideal_gate_unitary(cfg.phi_e, cfg.phi_o));
    let target = TargetState::from_gate_phases(input, cfg.phi_e, cfg.phi_o);
    let rho = scattering_channel(&rho, cfg.noise.p_sc, cfg.noise.kappa, &target.pure())?;
    Ok((rho, target))
}

/// Simulated control records for `|↑↑>` and `|↓↓>` in the (z,z) basis.
pub fn control_runs(detection: &DetectionModel, shots: u64, seed: Seed) -> Result<[CountsRecord; 2]> {
    let zz = [MeasurementSetting::ZZ];
    let uu = simulate_counts(&DensityMatrix::basis(Basis::Uu), &zz, shots, detection, seed.derive(0))?;
    let dd = simulate_counts(&DensityMatrix::basis(Basis::Dd), &zz, shots, detection, seed.derive(1))?;
    Ok([uu[0].clone(), dd[0].clone()])
}

/// Fidelity at the fitted target phase of an MLE reconstruction.
pub fn fitted_fidelity(records: &[CountsRecord], detection: &DetectionModel, input: Basis, opts: &MleOptions) -> Result<f64> {
    let fit = mle_fit(records, detection, opts)?;
    Ok(analyze(&fit.rho_hat, input)?.f)
}

pub fn run_tomography(input: Basis, cfg: &TomographyConfig, seed: Seed) -> Result<TomographyRun> {
    if cfg.shots == 0 || cfg.control_shots == 0 {
        return Err(invalid("shots", "must be positive"));
    }
    cfg.detection.validate()?;
    let (truth, target) = prepare_output(input, cfg)?;
    let records = simulate_counts(&truth, &MeasurementSetting::all(), cfg.shots, &cfg.detection, seed.derive(10))?;
    let controls = control_runs(&cfg.detection, cfg.control_shots, seed.derive(20))?;
    let calibration = calibrate_detection(&controls[0], &controls[1])?;
    let model = calibration.model;
    let linear = linear_inversion(&records, &model)?;
    let mle = mle_fit(&records, &model, &cfg.mle)?;
    let measures = analyze(&mle.rho_hat, input)?;
    let target_fidelity = fidelity(&mle.rho_hat, &target.pure());
    let bootstrap = if cfg.resamples > 0 {
        let opts = cfg.mle;
        Some(bootstrap(
            "fidelity",
            &records,
            cfg.resamples,
            |r| fitted_fidelity(r, &model, input, &opts),
            seed.derive(30),
            false,
        )?)
    } else {
        None
    };
    Ok(TomographyRun {
        input,
        target,
        truth,
        records,
        controls,
        calibration,
        linear,
        mle,
        measures,
        target_fidelity,
        bootstrap,
    })
}
