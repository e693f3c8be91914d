//! Average brightness and parity scans over `(t, δ)` grids.
//!
//! Two routes are available. The closed forms
//! `S_av = 1 - cos Φ e^{-|α|²/2}` and `Π = ½(1 + e^{-2|α|²})` hold for the
//! motional ground state; with `n̄ > 0` the candidate forms scale the decay
//! exponents by `2n̄ + 1`. The propagation route starts `|↑↑>` in each Fock
//! level, evolves it through [`SpinDependentDisplacement`], and averages over
//! the thermal distribution.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fock::{thermal_populations, SpinDependentDisplacement, SpinMotionState, TRUNCATION_THRESHOLD};
use super::{displacement_alpha, rad_s_to_khz, trajectory_phase, GateParams};
use crate::error::{Error, Result};
use crate::state::{Basis, PureState};

/// One evaluated grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub t: f64,
    pub delta: f64,
    pub s_av: f64,
    pub parity: f64,
}

/// How scan values are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Closed forms (thermal candidate when `n̄ > 0`).
    ClosedForm,
    /// Probability-weighted Fock-level propagation.
    Propagation,
}

/// Closed-form brightness; `nbar = 0` gives the ground-state expression.
pub fn closed_form_brightness(t: f64, delta: f64, eta_omega: f64, nbar: f64) -> f64 {
    let alpha_o = eta_omega / delta;
    let a2 = displacement_alpha(t, delta, alpha_o).norm_sqr();
    let phi = trajectory_phase(t, delta, alpha_o);
    1.0 - phi.cos() * (-(2.0 * nbar + 1.0) * a2 / 2.0).exp()
}

/// Closed-form parity; `nbar = 0` gives the ground-state expression.
pub fn closed_form_parity(t: f64, delta: f64, eta_omega: f64, nbar: f64) -> f64 {
    let alpha_o = eta_omega / delta;
    let a2 = displacement_alpha(t, delta, alpha_o).norm_sqr();
    0.5 * (1.0 + (-2.0 * (2.0 * nbar + 1.0) * a2).exp())
}

/// Thermally averaged `(S_av, Π)` from direct propagation of `|↑↑> ⊗ |n>`.
pub fn propagated_observables(
    eta_omega: f64,
    t: f64,
    delta: f64,
    nbar: f64,
    n_max: usize,
) -> Result<(f64, f64)> {
    let weights = thermal_populations(nbar, n_max)?;
    let tail = 1.0 - weights.iter().sum::<f64>();
    if tail > TRUNCATION_THRESHOLD {
        return Err(Error::Truncation {
            population: tail,
            threshold: TRUNCATION_THRESHOLD,
        });
    }
    let evolution = SpinDependentDisplacement::new(eta_omega, delta, t, n_max);
    let up_up = PureState::basis(Basis::Uu);
    let (mut s_av, mut parity, mut top) = (0.0, 0.0, 0.0);
    for (n, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let out = evolution.apply_unchecked(&SpinMotionState::product(&up_up, n, n_max)?);
        s_av += w * out.brightness();
        parity += w * out.parity();
        top += w * out.top_population();
    }
    if top > TRUNCATION_THRESHOLD {
        return Err(Error::Truncation {
            population: top,
            threshold: TRUNCATION_THRESHOLD,
        });
    }
    Ok((s_av, parity))
}

/// Evaluates a scan over `(t, δ)` pairs for the drive strength and `n̄` in `params`.
pub fn scan(params: &GateParams, grid: &[(f64, f64)], route: Route, n_max: usize) -> Result<Vec<ScanPoint>> {
    grid.par_iter()
        .map(|&(t, delta)| {
            let (s_av, parity) = match route {
                Route::ClosedForm => (
                    closed_form_brightness(t, delta, params.eta_omega, params.nbar),
                    closed_form_parity(t, delta, params.eta_omega, params.nbar),
                ),
                Route::Propagation => propagated_observables(params.eta_omega, t, delta, params.nbar, n_max)?,
            };
            Ok(ScanPoint { t, delta, s_av, parity })
        })
        .collect()
}

/// Default route: closed form for the ground state, propagation otherwise.
pub fn default_route(nbar: f64) -> Route {
    if nbar == 0.0 {
        Route::ClosedForm
    } else {
        Route::Propagation
    }
}

pub fn brightness_curve(params: &GateParams, grid: &[(f64, f64)], n_max: usize) -> Result<Vec<f64>> {
    Ok(scan(params, grid, default_route(params.nbar), n_max)?
        .into_iter()
        .map(|p| p.s_av)
        .collect())
}

pub fn parity_curve(params: &GateParams, grid: &[(f64, f64)], n_max: usize) -> Result<Vec<f64>> {
    Ok(scan(params, grid, default_route(params.nbar), n_max)?
        .into_iter()
        .map(|p| p.parity)
        .collect())
}

/// `n` evenly spaced values over `[start, stop]`.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Fixed gate time, varying detuning.
pub fn detuning_grid(t: f64, deltas: &[f64]) -> Vec<(f64, f64)> {
    deltas.iter().map(|&d| (t, d)).collect()
}

/// Fixed detuning, varying gate time.
pub fn time_grid(delta: f64, times: &[f64]) -> Vec<(f64, f64)> {
    times.iter().map(|&t| (t, delta)).collect()
}

/// Offset and contrast applied to a model brightness, `c S_av + o`, after thermal averaging.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContrastFit {
    pub contrast: f64,
    pub offset: f64,
}

impl Default for ContrastFit {
    fn default() -> Self {
        Self {
            contrast: 1.0,
            offset: 0.0,
        }
    }
}

impl ContrastFit {
    pub fn apply(&self, s_av: f64) -> f64 {
        self.contrast * s_av + self.offset
    }
}

/// Writes `t_us, delta_kHz, s_av, parity` rows.
pub fn write_scan_csv<W: Write>(mut w: W, points: &[ScanPoint]) -> std::io::Result<()> {
    writeln!(w, "t_us, delta_kHz, s_av, parity")?;
    for p in points {
        writeln!(
            w,
            "{}, {}, {}, {}",
            p.t * 1e6,
            rad_s_to_khz(p.delta),
            p.s_av,
            p.parity
        )?;
    }
    Ok(())
}
