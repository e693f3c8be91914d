//! Spin ⊗ truncated-Fock propagation of the spin-dependent displacement.
//!
//! The register holds two spins times motional levels `0..=n_max`. In the
//! σ_x-diagonal gate basis the evolution is the identity on `|↑x↑x>` and
//! `|↓x↓x>` and `e^{-iΦ} D(±α)` on `|↑x↓x>` / `|↓x↑x>`, where `D` is built by
//! exponentiating `α a† - α* a` on the truncated ladder.

use num_complex::Complex64 as C64;

use super::{displacement_alpha, trajectory_phase, GateParams};
use crate::error::{invalid, Error, Result};
use crate::linalg::{ComplexMatrix, ZERO};
use crate::state::{Basis, DensityMatrix, PureState};

/// Default Fock truncation.
pub const DEFAULT_N_MAX: usize = 20;

/// Largest population tolerated on the top Fock level.
pub const TRUNCATION_THRESHOLD: f64 = 1e-6;

/// Annihilation operator on levels `0..=n_max`.
pub fn annihilation(n_max: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(n_max + 1, n_max + 1);
    for n in 1..=n_max {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Truncated displacement operator `exp(α a† - α* a)`.
pub fn displacement(alpha: C64, n_max: usize) -> ComplexMatrix {
    let a = annihilation(n_max);
    let gen = &a.adjoint().scale(alpha) - &a.scale(alpha.conj());
    gen.expm()
}

/// Joint spin-motion amplitudes, indexed `spin * (n_max + 1) + n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinMotionState {
    n_max: usize,
    amps: Vec<C64>,
}

impl SpinMotionState {
    pub const NORM_TOL: f64 = 1e-9;

    /// `|spin> ⊗ |n>`.
    pub fn product(spin: &PureState, n: usize, n_max: usize) -> Result<Self> {
        if n > n_max {
            return Err(invalid("n", format!("Fock level {n} above truncation {n_max}")));
        }
        let dim = n_max + 1;
        let mut amps = vec![ZERO; 4 * dim];
        for (s, a) in spin.amplitudes().iter().enumerate() {
            amps[s * dim + n] = *a;
        }
        Ok(Self { n_max, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>, n_max: usize) -> Result<Self> {
        if amps.len() != 4 * (n_max + 1) {
            return Err(Error::Dimension(format!(
                "{} amplitudes for n_max = {n_max}",
                amps.len()
            )));
        }
        let s = Self { n_max, amps };
        if (s.norm_sqr() - 1.0).abs() > Self::NORM_TOL {
            return Err(invalid("amplitudes", "state is not normalized"));
        }
        Ok(s)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn amplitude(&self, spin: Basis, n: usize) -> C64 {
        self.amps[spin.index() * (self.n_max + 1) + n]
    }

    /// Motional wavefunction attached to one computational spin state.
    pub fn motional(&self, spin: Basis) -> &[C64] {
        let dim = self.n_max + 1;
        &self.amps[spin.index() * dim..(spin.index() + 1) * dim]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Total population on the highest Fock level.
    pub fn top_population(&self) -> f64 {
        let dim = self.n_max + 1;
        (0..4).map(|s| self.amps[s * dim + self.n_max].norm_sqr()).sum()
    }

    pub fn check_truncation(&self) -> Result<()> {
        let population = self.top_population();
        if population > TRUNCATION_THRESHOLD {
            return Err(Error::Truncation {
                population,
                threshold: TRUNCATION_THRESHOLD,
            });
        }
        Ok(())
    }

    /// Computational-basis spin populations, motion traced out.
    pub fn spin_populations(&self) -> [f64; 4] {
        Basis::ALL.map(|b| self.motional(b).iter().map(|a| a.norm_sqr()).sum())
    }

    /// `S_av = 2 P_↓↓ + P_↑↓ + P_↓↑`.
    pub fn brightness(&self) -> f64 {
        let p = self.spin_populations();
        Basis::ALL
            .iter()
            .map(|b| f64::from(b.bright_count()) * p[b.index()])
            .sum()
    }

    /// `Π = (P_↑↑ + P_↓↓) - (P_↑↓ + P_↓↑)`.
    pub fn parity(&self) -> f64 {
        let p = self.spin_populations();
        Basis::ALL.iter().map(|b| b.parity() * p[b.index()]).sum()
    }

    /// Reduced spin density matrix.
    pub fn reduced_spin(&self) -> DensityMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        for r in Basis::ALL {
            for c in Basis::ALL {
                m[(r.index(), c.index())] = self
                    .motional(r)
                    .iter()
                    .zip(self.motional(c))
                    .map(|(a, b)| a * b.conj())
                    .sum();
            }
        }
        DensityMatrix::from_trusted(m.hermitian_part())
    }

    /// Applies a 4×4 matrix to the spin index of every Fock level.
    fn apply_spin(&self, u: &[[f64; 4]; 4]) -> Self {
        let dim = self.n_max + 1;
        let mut out = vec![ZERO; self.amps.len()];
        for (r, row) in u.iter().enumerate() {
            for (c, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for n in 0..dim {
                    out[r * dim + n] += self.amps[c * dim + n] * w;
                }
            }
        }
        Self {
            n_max: self.n_max,
            amps: out,
        }
    }
}

/// `H ⊗ H`; maps computational amplitudes to `|↑x↑x>, |↑x↓x>, |↓x↑x>, |↓x↓x>`
/// amplitudes with `|↑x> = (|↑> + |↓>)/√2`. It is its own inverse.
const HADAMARD2: [[f64; 4]; 4] = {
    let h = 0.5;
    [[h, h, h, h], [h, -h, h, -h], [h, h, -h, -h], [h, -h, -h, h]]
};

/// Evolution operator of the spin-dependent displacement at one `(t, δ)`.
#[derive(Clone, Debug)]
pub struct SpinDependentDisplacement {
    pub alpha: C64,
    pub phase: f64,
    plus: ComplexMatrix,
    minus: ComplexMatrix,
}

impl SpinDependentDisplacement {
    pub fn new(eta_omega: f64, delta: f64, t: f64, n_max: usize) -> Self {
        let alpha_o = eta_omega / delta;
        let alpha = displacement_alpha(t, delta, alpha_o);
        let phase = trajectory_phase(t, delta, alpha_o);
        let phased = C64::from_polar(1.0, -phase);
        Self {
            alpha,
            phase,
            plus: displacement(alpha, n_max).scale(phased),
            minus: displacement(-alpha, n_max).scale(phased),
        }
    }

    pub fn from_params(params: &GateParams, t: f64, n_max: usize) -> Self {
        Self::new(params.eta_omega, params.delta, t, n_max)
    }

    /// Applies the evolution without the truncation check.
    pub fn apply_unchecked(&self, state: &SpinMotionState) -> SpinMotionState {
        let dim = state.n_max + 1;
        assert_eq!(self.plus.rows(), dim, "operator truncation differs from state");
        let mut x = state.apply_spin(&HADAMARD2);
        for (branch, op) in [(1usize, &self.plus), (2, &self.minus)] {
            let v = op.matvec(&x.amps[branch * dim..(branch + 1) * dim]);
            x.amps[branch * dim..(branch + 1) * dim].copy_from_slice(&v);
        }
        x.apply_spin(&HADAMARD2)
    }

    pub fn apply(&self, state: &SpinMotionState) -> Result<SpinMotionState> {
        state.check_truncation()?;
        let out = self.apply_unchecked(state);
        out.check_truncation()?;
        Ok(out)
    }
}

/// Propagates `initial` for time `t` under the gate drive.
pub fn propagate_spin_motion(
    initial: &SpinMotionState,
    params: &GateParams,
    t: f64,
) -> Result<SpinMotionState> {
    SpinDependentDisplacement::from_params(params, t, initial.n_max).apply(initial)
}

/// Thermal occupation probabilities `n̄ⁿ / (1 + n̄)ⁿ⁺¹` for `n = 0..=n_max`.
pub fn thermal_populations(nbar: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(invalid("nbar", format!("must be non-negative, got {nbar}")));
    }
    let ratio = nbar / (1.0 + nbar);
    let mut p = Vec::with_capacity(n_max + 1);
    let mut w = 1.0 / (1.0 + nbar);
    for _ in 0..=n_max {
        p.push(w);
        w *= ratio;
    }
    Ok(p)
}

/// Unit coherent-state amplitudes `e^{-|α|²/2} αⁿ / √n!` (untruncated series, cut at `n_max`).
pub fn coherent_amplitudes(alpha: C64, n_max: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut term = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..=n_max {
        out.push(term);
        term = term * alpha / ((n + 1) as f64).sqrt();
    }
    out
}

/// Basis state helper used by tests and scans.
pub fn spin_basis_with_fock(spin: Basis, n: usize, n_max: usize) -> Result<SpinMotionState> {
    SpinMotionState::product(&PureState::basis(spin), n, n_max)
}
