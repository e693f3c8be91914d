//! Mølmer-Sørensen gate dynamics.
//!
//! Closed forms for the spin-dependent displacement and its geometric phase
//! live here; [`fock`] propagates the spin ⊗ truncated-Fock register directly,
//! [`curves`] turns either route into brightness and parity scans, and
//! [`noise`] holds the end-of-gate error channels and the error budget.
//!
//! All quantities are SI internally: angular frequencies in rad/s, times in s.

pub mod curves;
pub mod fock;
pub mod noise;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{ComplexMatrix, I, ZERO};
use crate::state::{DensityMatrix, PureState};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Converts an ordinary frequency in kHz to angular frequency in rad/s.
pub fn khz_to_rad_s(f_khz: f64) -> f64 {
    TAU * f_khz * 1e3
}

pub fn rad_s_to_khz(omega: f64) -> f64 {
    omega / (TAU * 1e3)
}

/// Which collective axial mode the gate drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Com,
    Stretch,
}

/// Axial normal modes of a two-ion crystal and the Lamb-Dicke parameter of the driven one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    pub omega_c: f64,
    pub omega_s: f64,
    /// Total mass of the excitation, kg.
    pub mass: f64,
    /// Raman wavevector difference along the axis, 1/m.
    pub k: f64,
    pub mode: Mode,
}

impl ModeParams {
    /// Largest Lamb-Dicke parameter for which the leading-order closed forms are trusted.
    pub const MAX_ETA: f64 = 0.3;

    pub fn new(omega_c: f64, mass: f64, k: f64, mode: Mode) -> Result<Self> {
        for (name, v) in [("omega_c", omega_c), ("mass", mass), ("k", k)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        let p = Self {
            omega_c,
            omega_s: 3f64.sqrt() * omega_c,
            mass,
            k,
            mode,
        };
        let eta = p.lamb_dicke();
        if eta >= Self::MAX_ETA {
            return Err(invalid(
                "eta",
                format!("Lamb-Dicke parameter {eta:.3} outside the Lamb-Dicke regime"),
            ));
        }
        Ok(p)
    }

    pub fn omega(&self) -> f64 {
        match self.mode {
            Mode::Com => self.omega_c,
            Mode::Stretch => self.omega_s,
        }
    }

    /// Zero-point wavepacket size `sqrt(ħ / 2Mω)`.
    pub fn z0(&self) -> f64 {
        (HBAR / (2.0 * self.mass * self.omega())).sqrt()
    }

    pub fn lamb_dicke(&self) -> f64 {
        self.k * self.z0()
    }
}

/// Drive and phase parameters of one gate application.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    /// Sideband Rabi frequency ηΩ.
    pub eta_omega: f64,
    /// Symmetric sideband detuning δ.
    pub delta: f64,
    /// Number of phase-space loops completed at `tau_g`.
    pub m: u32,
    pub tau_g: f64,
    pub phi_e: f64,
    pub phi_o: f64,
    /// Initial thermal occupation of the driven mode.
    pub nbar: f64,
}

impl GateParams {
    pub fn new(eta_omega: f64, delta: f64, m: u32) -> Result<Self> {
        if !(eta_omega > 0.0 && eta_omega.is_finite()) {
            return Err(invalid("eta_omega", format!("must be positive, got {eta_omega}")));
        }
        if delta == 0.0 || !delta.is_finite() {
            return Err(invalid("delta", "detuning must be finite and non-zero"));
        }
        if m == 0 {
            return Err(invalid("m", "loop index must be at least 1"));
        }
        Ok(Self {
            eta_omega,
            delta,
            m,
            tau_g: TAU * f64::from(m) / delta.abs(),
            phi_e: 0.0,
            phi_o: 0.0,
            nbar: 0.0,
        })
    }

    pub fn with_phases(mut self, phi_e: f64, phi_o: f64) -> Self {
        self.phi_e = phi_e;
        self.phi_o = phi_o;
        self
    }

    pub fn with_nbar(mut self, nbar: f64) -> Self {
        self.nbar = nbar;
        self
    }

    /// `α_o = ηΩ / δ`.
    pub fn alpha_o(&self) -> f64 {
        self.eta_omega / self.delta
    }

    /// Far-detuned effective coupling `Ω̃ = (ηΩ)² / δ`.
    pub fn omega_tilde(&self) -> f64 {
        self.eta_omega * self.eta_omega / self.delta
    }

    /// Drive frequency `ω_d = ω + δ` for a mode at `omega_mode`.
    pub fn drive_frequency(&self, omega_mode: f64) -> f64 {
        omega_mode + self.delta
    }

    pub fn geometric_phase(&self) -> f64 {
        trajectory_phase(self.tau_g, self.delta, self.alpha_o())
    }
}

/// Phase-space displacement `α(t, δ) = α_o (1 - e^{-iδt})`.
pub fn displacement_alpha(t: f64, delta: f64, alpha_o: f64) -> C64 {
    alpha_o * (C64::new(1.0, 0.0) - C64::from_polar(1.0, -delta * t))
}

/// Phase accumulated along the trajectory, `α_o² (δt - sin δt)`.
pub fn trajectory_phase(t: f64, delta: f64, alpha_o: f64) -> f64 {
    let x = delta * t;
    alpha_o * alpha_o * (x - x.sin())
}

/// Closed-loop parameters giving a π/2 geometric phase after `m` loops:
/// `δ = 2ηΩ√m`, `τ_g = 2πm/δ`.
pub fn gate_operating_point(eta_omega: f64, m: u32) -> Result<GateParams> {
    if m == 0 {
        return Err(invalid("m", "loop index must be at least 1"));
    }
    GateParams::new(eta_omega, 2.0 * eta_omega * f64::from(m).sqrt(), m)
}

/// The 4×4 unitary taking each computational state to its Bell-like image.
///
/// Columns: `|↑↑> -> (|↑↑> + i e^{iφe}|↓↓>)/√2`, `|↓↓> -> (|↓↓> + i e^{-iφe}|↑↑>)/√2`,
/// `|↑↓> -> (|↑↓> + i e^{iφo}|↓↑>)/√2`, `|↓↑> -> (|↓↑> + i e^{-iφo}|↑↓>)/√2`.
pub fn ideal_gate_unitary(phi_e: f64, phi_o: f64) -> ComplexMatrix {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let ie = |phi: f64| I * C64::from_polar(FRAC_1_SQRT_2, phi);
    let z = ZERO;
    ComplexMatrix::from_rows([
        [h, z, z, ie(-phi_e)],
        [z, h, ie(-phi_o), z],
        [z, ie(phi_o), h, z],
        [ie(phi_e), z, z, h],
    ])
}

pub fn apply_ideal_gate(state: &PureState, phi_e: f64, phi_o: f64) -> PureState {
    state.apply(&ideal_gate_unitary(phi_e, phi_o))
}

pub fn apply_ideal_gate_density(rho: &DensityMatrix, phi_e: f64, phi_o: f64) -> DensityMatrix {
    rho.evolve(&ideal_gate_unitary(phi_e, phi_o))
}

/// Geometric phase that makes the gate maximally entangling.
pub const TARGET_PHASE: f64 = FRAC_PI_2;

/// `2πm α_o²`, the phase left after `m` closed loops.
pub fn closed_loop_phase(m: u32, alpha_o: f64) -> f64 {
    2.0 * PI * f64::from(m) * alpha_o * alpha_o
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Basis;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn alpha_vanishes_at_start_and_loop_closure() {
        assert_eq!(displacement_alpha(0.0, 3.0, 0.5), C64::new(0.0, 0.0));
        let delta = khz_to_rad_s(12.8);
        assert!(displacement_alpha(TAU / delta, delta, 0.5).norm() < 1e-15);
    }

    #[test]
    fn alpha_at_half_loop() {
        let a = displacement_alpha(PI, 1.0, 0.5);
        assert!((a - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn phase_examples() {
        assert_eq!(trajectory_phase(0.0, 5.0, 0.5), 0.0);
        assert!((trajectory_phase(TAU, 1.0, 0.5) - FRAC_PI_2).abs() < 1e-15);
        assert!((trajectory_phase(2.0 * TAU, 1.0, 0.5) - PI).abs() < 1e-15);
        assert!((closed_loop_phase(2, 0.5) - PI).abs() < 1e-15);
    }

    #[test]
    fn operating_point_fig3_values() {
        let p = gate_operating_point(khz_to_rad_s(6.4), 1).unwrap();
        assert!((rad_s_to_khz(p.delta) - 12.8).abs() < 1e-12);
        assert!((p.tau_g * 1e6 - 78.125).abs() < 1e-9);
        assert!((p.geometric_phase() - FRAC_PI_2).abs() < 1e-12);
        assert!(displacement_alpha(p.tau_g, p.delta, p.alpha_o()).norm() < 1e-12);
    }

    #[test]
    fn operating_point_fig2_values() {
        let p = gate_operating_point(khz_to_rad_s(6.3), 1).unwrap();
        assert!((rad_s_to_khz(p.delta) - 12.6).abs() < 1e-12);
    }

    #[test]
    fn four_loops_double_detuning_and_time() {
        let w = khz_to_rad_s(6.0);
        let p1 = gate_operating_point(w, 1).unwrap();
        let p4 = gate_operating_point(w, 4).unwrap();
        assert!((p4.delta / p1.delta - 2.0).abs() < 1e-14);
        assert!((p4.tau_g / p1.tau_g - 2.0).abs() < 1e-14);
        assert!((p4.geometric_phase() - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn ideal_gate_columns() {
        let (pe, po) = (-1.1, 0.43);
        let out = apply_ideal_gate(&PureState::basis(Basis::Uu), pe, po);
        let a = out.amplitudes();
        assert!((a[0] - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((a[3] - I * C64::from_polar(FRAC_1_SQRT_2, pe)).norm() < 1e-15);
        let out = apply_ideal_gate(&PureState::basis(Basis::Du), pe, po);
        let a = out.amplitudes();
        assert!((a[2] - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((a[1] - I * C64::from_polar(FRAC_1_SQRT_2, -po)).norm() < 1e-15);
    }

    #[test]
    fn gate_squared_is_xx_up_to_phase() {
        let u = ideal_gate_unitary(0.0, 0.0);
        let out = PureState::basis(Basis::Uu).apply(&(&u * &u));
        let a = out.amplitudes();
        assert!((a[3] - I).norm() < 1e-15);
        assert!(a[0].norm() < 1e-15);
    }

    #[test]
    fn ideal_gate_is_unitary() {
        for (pe, po) in [(0.0, 0.0), (-1.1, 0.43), (2.5, -3.0), (10.0, 7.0)] {
            let u = ideal_gate_unitary(pe, po);
            let uu = &u.adjoint() * &u;
            assert!(uu.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        }
    }

    #[test]
    fn far_detuned_phase_matches_effective_coupling() {
        let eta_omega = khz_to_rad_s(1.0);
        for alpha_o in [0.05, 0.03, 0.01] {
            let delta = eta_omega / alpha_o;
            for m in 1..=3 {
                let t = TAU * f64::from(m) / delta;
                let p = GateParams::new(eta_omega, delta, m).unwrap();
                let phi = trajectory_phase(t, delta, alpha_o);
                assert!((phi - p.omega_tilde() * t).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn stretch_mode_lamb_dicke() {
        // 111Cd+, 2.05 MHz COM; single-ion mass, counter-propagating 214.5 nm beams
        let amu = 1.660_539_066_6e-27;
        let m = ModeParams::new(TAU * 2.05e6, 2.0 * 111.0 * amu, 2.0 * TAU / 214.5e-9, Mode::Stretch)
            .unwrap();
        assert!((m.omega_s / m.omega_c - 3f64.sqrt()).abs() < 1e-15);
        let z0 = (HBAR / (2.0 * m.mass * m.omega_s)).sqrt();
        assert!((m.lamb_dicke() - m.k * z0).abs() < 1e-15);
        assert!(m.lamb_dicke() > 0.05 && m.lamb_dicke() < 0.3);
        assert!(ModeParams::new(TAU * 1e3, amu, 1e8, Mode::Com).is_err());
    }

    #[test]
    fn params_reject_bad_inputs() {
        assert!(GateParams::new(1.0, 0.0, 1).is_err());
        assert!(GateParams::new(-1.0, 1.0, 1).is_err());
        assert!(gate_operating_point(1.0, 0).is_err());
    }
}
