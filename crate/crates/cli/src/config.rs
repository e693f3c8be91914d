//! TOML run configuration. External units: kHz, µs, radians.

use std::path::Path;

use iontomo::gate::noise::{BudgetInputs, DEFAULT_KAPPA};
use iontomo::gate::{gate_operating_point, khz_to_rad_s, GateParams};
use iontomo::pipeline::{NoiseModel, TomographyConfig};
use iontomo::tomography::{DetectionModel, DetectorKind, MleOptions};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gate: GateSection,
    pub scan: ScanSection,
    pub noise: NoiseSection,
    pub detection: DetectionSection,
    pub tomography: TomographySection,
    pub budget: BudgetSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSection {
    pub eta_omega_khz: f64,
    /// Defaults to the closed-loop value `2ηΩ√m`.
    pub delta_khz: Option<f64>,
    pub m: u32,
    pub phi_e_rad: f64,
    pub phi_o_rad: f64,
    pub nbar: f64,
    pub n_max: usize,
}

impl Default for GateSection {
    fn default() -> Self {
        Self {
            eta_omega_khz: 6.4,
            delta_khz: None,
            m: 1,
            phi_e_rad: 0.0,
            phi_o_rad: 0.0,
            nbar: 0.0,
            n_max: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    /// Pulse length of a detuning scan; defaults to the gate time.
    pub t_us: Option<f64>,
    pub delta_min_khz: f64,
    pub delta_max_khz: f64,
    /// Time scans run from 0 to `t_max_us`; defaults to four gate times.
    pub t_max_us: Option<f64>,
    pub points: usize,
    pub phase_points: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            t_us: None,
            delta_min_khz: 8.0,
            delta_max_khz: 18.0,
            t_max_us: None,
            points: 201,
            phase_points: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub p_sc: f64,
    pub kappa: f64,
    /// Preparation fidelity of odd-parity inputs.
    pub f_prep: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            p_sc: 0.0,
            kappa: DEFAULT_KAPPA,
            f_prep: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionSection {
    /// Symmetric per-qubit readout fidelity, used unless both flip arrays are given.
    pub fidelity: f64,
    pub flip_up: Option<[f64; 2]>,
    pub flip_down: Option<[f64; 2]>,
    pub kind: DetectorKind,
}

impl Default for DetectionSection {
    fn default() -> Self {
        Self {
            fidelity: 0.97,
            flip_up: None,
            flip_down: None,
            kind: DetectorKind::Camera,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographySection {
    pub shots: u64,
    pub control_shots: u64,
    pub resamples: usize,
    pub restarts: usize,
}

impl Default for TomographySection {
    fn default() -> Self {
        Self {
            shots: 200,
            control_shots: 200,
            resamples: 500,
            restarts: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    pub gamma_khz: f64,
    pub raman_detuning_khz: f64,
    pub epsilon: f64,
    pub zeta: f64,
    pub eta: f64,
    pub omega_hf_khz: f64,
    pub dnu_st_khz: Option<f64>,
    pub tau_g_us: f64,
    pub kappa: f64,
}

impl Default for BudgetSection {
    fn default() -> Self {
        Self {
            gamma_khz: 60e3,
            raman_detuning_khz: 200e6,
            epsilon: 0.2,
            zeta: 0.5,
            eta: 0.1,
            omega_hf_khz: 14.53e6,
            dnu_st_khz: Some(75.0),
            tau_g_us: 80.0,
            kappa: DEFAULT_KAPPA,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn gate_params(&self) -> Result<GateParams, CliError> {
        let g = &self.gate;
        let eta_omega = khz_to_rad_s(g.eta_omega_khz);
        let params = match g.delta_khz {
            Some(d) => GateParams::new(eta_omega, khz_to_rad_s(d), g.m),
            None => gate_operating_point(eta_omega, g.m),
        }
        .map_err(CliError::config)?;
        if !(g.nbar >= 0.0 && g.nbar.is_finite()) {
            return Err(CliError::Config(format!("gate.nbar must be non-negative, got {}", g.nbar)));
        }
        Ok(params.with_phases(g.phi_e_rad, g.phi_o_rad).with_nbar(g.nbar))
    }

    pub fn detection(&self) -> Result<DetectionModel, CliError> {
        let d = &self.detection;
        let model = match (d.flip_up, d.flip_down) {
            (Some(up), Some(down)) => DetectionModel::asymmetric(up, down),
            (None, None) => DetectionModel::symmetric(d.fidelity),
            _ => return Err(CliError::Config("detection.flip_up and flip_down must be given together".into())),
        }
        .with_kind(d.kind);
        model.validate().map_err(CliError::config)?;
        Ok(model)
    }

    pub fn tomography(&self) -> Result<TomographyConfig, CliError> {
        let detection = self.detection()?;
        if detection.kind == DetectorKind::Pmt {
            return Err(CliError::Config(
                "tomography needs camera readout; PMT mode is only used for scans".into(),
            ));
        }
        let t = &self.tomography;
        if t.shots == 0 || t.control_shots == 0 {
            return Err(CliError::Config("tomography shot counts must be positive".into()));
        }
        if t.resamples != 0 && t.resamples < 100 {
            return Err(CliError::Config(format!("tomography.resamples must be 0 or ≥ 100, got {}", t.resamples)));
        }
        let n = &self.noise;
        if !(0.0..=1.0).contains(&n.p_sc) || !(0.0..=1.0).contains(&n.kappa) || !(0.25..=1.0).contains(&n.f_prep) {
            return Err(CliError::Config("noise: p_sc, kappa in [0, 1]; f_prep in [0.25, 1]".into()));
        }
        Ok(TomographyConfig {
            phi_e: self.gate.phi_e_rad,
            phi_o: self.gate.phi_o_rad,
            noise: NoiseModel {
                p_sc: n.p_sc,
                kappa: n.kappa,
                f_prep_odd: n.f_prep,
            },
            detection,
            shots: t.shots,
            control_shots: t.control_shots,
            resamples: t.resamples,
            mle: MleOptions {
                restarts: t.restarts,
                ..MleOptions::default()
            },
        })
    }

    pub fn budget_inputs(&self) -> BudgetInputs {
        let b = &self.budget;
        BudgetInputs {
            gamma: khz_to_rad_s(b.gamma_khz),
            raman_detuning: khz_to_rad_s(b.raman_detuning_khz),
            epsilon: b.epsilon,
            zeta: b.zeta,
            eta: b.eta,
            omega_hf: khz_to_rad_s(b.omega_hf_khz),
            dnu_st: b.dnu_st_khz.map(khz_to_rad_s),
            tau_g: b.tau_g_us * 1e-6,
            kappa: b.kappa,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        let p = c.gate_params().unwrap();
        assert!((p.tau_g * 1e6 - 78.125).abs() < 1e-9);
    }

    #[test]
    fn sections_override_defaults() {
        let c = RunConfig::parse(
            "[gate]\neta_omega_khz = 6.3\nphi_e_rad = -1.1\n[noise]\np_sc = 0.3\nf_prep = 0.85\n[detection]\nflip_up = [0.02, 0.02]\nflip_down = [0.04, 0.04]\n",
        )
        .unwrap();
        assert_eq!(c.gate.eta_omega_khz, 6.3);
        let t = c.tomography().unwrap();
        assert_eq!(t.noise.p_sc, 0.3);
        assert_eq!(t.detection.confusion[0][1][0], 0.02);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::parse("[gate]\netaomega = 1\n"), Err(CliError::Config(_))));
    }

    #[test]
    fn half_specified_bias_is_rejected() {
        let c = RunConfig::parse("[detection]\nflip_up = [0.1, 0.1]\n").unwrap();
        assert!(c.detection().is_err());
    }

    #[test]
    fn pmt_tomography_rejected() {
        let c = RunConfig::parse("[detection]\nkind = \"pmt\"\n").unwrap();
        assert!(c.detection().is_ok());
        assert!(c.tomography().is_err());
    }
}
