//! End-of-gate error channels and the scattering / Stark-shift error budget.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::ComplexMatrix;
use crate::state::{DensityMatrix, PureState};

/// Default residual overlap of a post-scattering state with the target.
pub const DEFAULT_KAPPA: f64 = 0.27;

/// Spontaneous scattering as a convex mixture:
/// `(1 - p) ρ + p [κ |Ψ><Ψ| + (1 - κ)(I - |Ψ><Ψ|)/3]`.
pub fn scattering_channel(
    rho: &DensityMatrix,
    p_sc: f64,
    kappa: f64,
    target: &PureState,
) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p_sc) {
        return Err(invalid("p_sc", format!("{p_sc} outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&kappa) {
        return Err(invalid("kappa", format!("{kappa} outside [0, 1]")));
    }
    let proj = target.projector();
    let complement = &ComplexMatrix::identity(4) - &proj;
    let scattered = &proj.scale_re(kappa) + &complement.scale_re((1.0 - kappa) / 3.0);
    let m = &rho.matrix().scale_re(1.0 - p_sc) + &scattered.scale_re(p_sc);
    Ok(DensityMatrix::from_trusted(m.hermitian_part()))
}

/// Imperfect input preparation with fidelity `f_prep` to the ideal input:
/// `(4F - 1)/3 ρ + 4(1 - F)/3 · I/4`.
pub fn prep_error_channel(rho: &DensityMatrix, f_prep: f64) -> Result<DensityMatrix> {
    if !(0.25..=1.0).contains(&f_prep) {
        return Err(invalid("f_prep", format!("{f_prep} outside [0.25, 1]")));
    }
    let keep = (4.0 * f_prep - 1.0) / 3.0;
    DensityMatrix::mix(keep, rho, &DensityMatrix::maximally_mixed())
}

/// Laser and atomic inputs of the error budget. Angular frequencies in rad/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetInputs {
    /// Optical linewidth γ.
    pub gamma: f64,
    /// Raman detuning Δ from optical resonance.
    pub raman_detuning: f64,
    /// Raman transition efficiency of the EOM sidebands.
    pub epsilon: f64,
    /// Clebsch-Gordan factor.
    pub zeta: f64,
    /// Lamb-Dicke parameter of the gate mode.
    pub eta: f64,
    /// Hyperfine qubit splitting.
    pub omega_hf: f64,
    /// Measured differential ac Stark shift, if available.
    pub dnu_st: Option<f64>,
    pub tau_g: f64,
    pub kappa: f64,
}

/// Derived noise figures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub inputs: BudgetInputs,
    /// `√2 π / (ε ζ η)`.
    pub beta: f64,
    /// `2 β γ / Δ`.
    pub p_sc_theory: f64,
    /// `β ω_hf / Δ`.
    pub phi_st_theory: f64,
    /// `δν_st τ_g`.
    pub phi_st_measured: Option<f64>,
    /// `φ_st(meas) · 2γ / ω_hf`.
    pub p_sc_inferred: Option<f64>,
    /// Inferred value when a Stark shift was measured, theory otherwise.
    pub p_sc: f64,
    /// Scattering rate per ion, `p_sc / (2 τ_g)`.
    pub gamma_sc: f64,
    /// `(1 - κ) p_sc`.
    pub infidelity: f64,
}

impl BudgetInputs {
    pub fn complete(self) -> Result<ErrorBudget> {
        error_budget(self)
    }
}

pub fn error_budget(inputs: BudgetInputs) -> Result<ErrorBudget> {
    let positive = [
        ("gamma", inputs.gamma),
        ("raman_detuning", inputs.raman_detuning),
        ("epsilon", inputs.epsilon),
        ("zeta", inputs.zeta),
        ("eta", inputs.eta),
        ("omega_hf", inputs.omega_hf),
        ("tau_g", inputs.tau_g),
    ];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(name, format!("must be positive and finite, got {v}")));
        }
    }
    if !(0.0..=1.0).contains(&inputs.kappa) {
        return Err(invalid("kappa", format!("{} outside [0, 1]", inputs.kappa)));
    }
    if let Some(d) = inputs.dnu_st {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(invalid("dnu_st", format!("must be non-negative, got {d}")));
        }
    }
    let beta = 2f64.sqrt() * std::f64::consts::PI / (inputs.epsilon * inputs.zeta * inputs.eta);
    let p_sc_theory = 2.0 * beta * inputs.gamma / inputs.raman_detuning;
    let phi_st_theory = beta * inputs.omega_hf / inputs.raman_detuning;
    let phi_st_measured = inputs.dnu_st.map(|d| d * inputs.tau_g);
    let p_sc_inferred = phi_st_measured.map(|phi| phi * 2.0 * inputs.gamma / inputs.omega_hf);
    let p_sc = p_sc_inferred.unwrap_or(p_sc_theory);
    Ok(ErrorBudget {
        inputs,
        beta,
        p_sc_theory,
        phi_st_theory,
        phi_st_measured,
        p_sc_inferred,
        p_sc,
        gamma_sc: p_sc / (2.0 * inputs.tau_g),
        infidelity: (1.0 - inputs.kappa) * p_sc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::fidelity;
    use crate::gate::{apply_ideal_gate, ideal_gate_unitary, khz_to_rad_s};
    use crate::state::{random_density, Basis};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn psi1() -> PureState {
        apply_ideal_gate(&PureState::basis(Basis::Uu), 0.0, 0.0)
    }

    pub(crate) fn reference_inputs() -> BudgetInputs {
        BudgetInputs {
            gamma: khz_to_rad_s(60e3),
            raman_detuning: khz_to_rad_s(200e6),
            epsilon: 0.2,
            zeta: 0.5,
            eta: 0.1,
            omega_hf: khz_to_rad_s(14.53e6),
            dnu_st: Some(khz_to_rad_s(75.0)),
            tau_g: 80e-6,
            kappa: DEFAULT_KAPPA,
        }
    }

    #[test]
    fn scattering_zero_probability_is_identity() {
        let rho = psi1().density();
        let out = scattering_channel(&rho, 0.0, 0.27, &psi1()).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn scattering_reproduces_infidelity_factor() {
        let out = scattering_channel(&psi1().density(), 0.3, 0.27, &psi1()).unwrap();
        let f = fidelity(&out, &psi1());
        assert!((f - 0.781).abs() < 1e-12);
        assert!(((1.0 - f) - 0.73 * 0.3).abs() < 1e-12);
    }

    #[test]
    fn full_overlap_keeps_fidelity() {
        for p in [0.1, 0.5, 1.0] {
            let out = scattering_channel(&psi1().density(), p, 1.0, &psi1()).unwrap();
            assert!((fidelity(&out, &psi1()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scattering_rejects_bad_ranges() {
        let rho = psi1().density();
        assert!(scattering_channel(&rho, 1.2, 0.27, &psi1()).is_err());
        assert!(scattering_channel(&rho, 0.2, -0.1, &psi1()).is_err());
    }

    #[test]
    fn prep_channel_limits() {
        let rho = DensityMatrix::basis(Basis::Ud);
        let same = prep_error_channel(&rho, 1.0).unwrap();
        assert!(same.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let mixed = prep_error_channel(&rho, 0.25).unwrap();
        assert!(mixed
            .matrix()
            .max_abs_diff(DensityMatrix::maximally_mixed().matrix())
            < 1e-15);
        assert!(prep_error_channel(&rho, 0.2).is_err());
    }

    #[test]
    fn prep_error_carries_through_gate() {
        let input = DensityMatrix::basis(Basis::Ud);
        let noisy = prep_error_channel(&input, 0.85).unwrap();
        assert!((fidelity(&noisy, &PureState::basis(Basis::Ud)) - 0.85).abs() < 1e-12);
        let out = noisy.evolve(&ideal_gate_unitary(0.0, 0.0));
        let psi3 = apply_ideal_gate(&PureState::basis(Basis::Ud), 0.0, 0.0);
        assert!((fidelity(&out, &psi3) - 0.85).abs() < 1e-12);
    }

    #[test]
    fn channels_preserve_trace_and_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let rho = random_density(&mut rng);
            let a = scattering_channel(&rho, 0.37, 0.27, &psi1()).unwrap();
            let b = prep_error_channel(&rho, 0.6).unwrap();
            for out in [a, b] {
                assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
                assert!(!out.validate(1e-12).flagged);
            }
        }
    }

    #[test]
    fn beta_estimate() {
        let b = error_budget(reference_inputs()).unwrap();
        assert!((b.beta - 444.288).abs() < 1e-3);
    }

    #[test]
    fn stark_phase_and_inferred_scattering() {
        let b = error_budget(reference_inputs()).unwrap();
        assert!((b.phi_st_measured.unwrap() - 12.0 * PI).abs() < 1e-9);
        let p = b.p_sc_inferred.unwrap();
        assert!((p - 0.3113).abs() < 1e-3, "{p}");
        assert!((b.infidelity - 0.73 * p).abs() < 1e-12);
    }

    #[test]
    fn tenfold_detuning_tenfold_suppression() {
        let base = error_budget(reference_inputs()).unwrap();
        let mut wide = reference_inputs();
        wide.raman_detuning *= 10.0;
        let wide = error_budget(wide).unwrap();
        assert!((base.p_sc_theory / wide.p_sc_theory - 10.0).abs() < 1e-9);
        assert!((base.phi_st_theory / wide.phi_st_theory - 10.0).abs() < 1e-9);
    }

    #[test]
    fn zero_efficiency_rejected() {
        let mut inputs = reference_inputs();
        inputs.epsilon = 0.0;
        assert!(error_budget(inputs).is_err());
    }
}
