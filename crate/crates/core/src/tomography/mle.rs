//! Maximum-likelihood reconstruction.
//!
//! The state is parameterised as `ρ = T†T / Tr(T†T)` with `T` lower triangular
//! (4 real diagonal and 6 complex off-diagonal entries), so every point of the
//! 16-dimensional search space is a valid density matrix. The fit minimises
//! a modified χ², `Σ (n_k - N p_k)² / max(N p_k, floor)`, by Nelder-Mead with
//! randomised restarts around the incumbent.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::simplex::{minimize_from, SimplexOptions};
use super::{
    linear_inversion_from_frequencies, outcome_probabilities, CountsRecord, DetectionModel, DetectorKind,
    MeasurementSetting,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::{herm_eig, kron, ComplexMatrix};
use crate::state::{pauli_expansion, DensityMatrix, DensityMatrixJson, PauliCoeffs, ValidationReport};
use crate::stats::Seed;

/// Number of real parameters of `T`.
pub const N_PARAMS: usize = 16;

/// Objective improvement over a full simplex refresh below which the fit has converged.
pub const CONVERGENCE_TOL: f64 = 1e-10;

/// Nominal shot count used when fitting exact probabilities.
pub const EXACT_SHOTS: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleOptions {
    /// Fresh simplices built around the incumbent after the first run.
    pub restarts: usize,
    /// Lower bound on the χ² denominator.
    pub variance_floor: f64,
    pub simplex: SimplexOptions,
    /// Seeds the restart simplices; fits are deterministic for fixed data.
    pub seed: u64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            restarts: 3,
            variance_floor: 0.5,
            simplex: SimplexOptions::default(),
            seed: 0x6d6c_6566_6974,
        }
    }
}

/// Counts and measurement operators of one setting.
#[derive(Clone, Debug)]
struct Block {
    /// Transposed, flattened POVM elements so `p_k = Re Σ ρ_i m_i`.
    povm_t: Vec<[C64; 16]>,
    counts: Vec<f64>,
    shots: f64,
}

/// Fit input: per-setting counts (possibly fractional) with their POVMs.
#[derive(Clone, Debug)]
pub struct FitData {
    blocks: Vec<Block>,
    /// Reported frequencies for the linear-inversion starting point.
    frequencies: BTreeMap<MeasurementSetting, Vec<f64>>,
    detection: DetectionModel,
}

/// POVM elements `M_k = Σ_s C[k][s] U†|s><s|U` of one setting (three for PMT readout).
pub fn povm(setting: MeasurementSetting, detection: &DetectionModel) -> Vec<ComplexMatrix> {
    let (r1, r2) = setting.rotations();
    let u = kron(&r1, &r2);
    let ud = u.adjoint();
    let projectors: Vec<ComplexMatrix> = (0..4)
        .map(|s| {
            let mut e = ComplexMatrix::zeros(4, 4);
            e[(s, s)] = C64::new(1.0, 0.0);
            &(&ud * &e) * &u
        })
        .collect();
    let c = detection.joint();
    let camera: Vec<ComplexMatrix> = (0..4)
        .map(|k| {
            projectors
                .iter()
                .enumerate()
                .fold(ComplexMatrix::zeros(4, 4), |acc, (s, p)| &acc + &p.scale_re(c[k][s]))
        })
        .collect();
    match detection.kind {
        DetectorKind::Camera => camera,
        DetectorKind::Pmt => vec![camera[0].clone(), &camera[1] + &camera[2], camera[3].clone()],
    }
}

fn flatten_t(m: &ComplexMatrix) -> [C64; 16] {
    let mut out = [C64::new(0.0, 0.0); 16];
    for a in 0..4 {
        for b in 0..4 {
            out[4 * a + b] = m[(b, a)];
        }
    }
    out
}

fn outcome_count(detection: &DetectionModel) -> usize {
    match detection.kind {
        DetectorKind::Camera => 4,
        DetectorKind::Pmt => 3,
    }
}

impl FitData {
    fn from_map(map: BTreeMap<MeasurementSetting, (Vec<f64>, f64)>, detection: &DetectionModel) -> Result<Self> {
        if map.is_empty() {
            return Err(invalid("records", "no measurement records"));
        }
        let mut blocks = Vec::with_capacity(map.len());
        let mut frequencies = BTreeMap::new();
        for (setting, (counts, shots)) in map {
            if shots <= 0.0 {
                return Err(invalid("records", format!("setting {setting} has no shots")));
            }
            frequencies.insert(setting, counts.iter().map(|c| c / shots).collect());
            blocks.push(Block {
                povm_t: povm(setting, detection).iter().map(flatten_t).collect(),
                counts,
                shots,
            });
        }
        Ok(Self {
            blocks,
            frequencies,
            detection: *detection,
        })
    }

    /// Merges records per setting; record order does not matter.
    pub fn from_records(records: &[CountsRecord], detection: &DetectionModel) -> Result<Self> {
        let k = outcome_count(detection);
        let mut map: BTreeMap<MeasurementSetting, (Vec<f64>, f64)> = BTreeMap::new();
        for r in records {
            if r.counts.len() != k {
                return Err(invalid(
                    "records",
                    format!("setting {} has {} outcomes, detector reports {k}", r.setting, r.counts.len()),
                ));
            }
            let entry = map.entry(r.setting).or_insert_with(|| (vec![0.0; k], 0.0));
            for (e, &c) in entry.0.iter_mut().zip(&r.counts) {
                *e += c as f64;
            }
            entry.1 += r.shots() as f64;
        }
        Self::from_map(map, detection)
    }

    /// Noise-free data: `N p_k` for all nine settings at nominal shot count `shots`.
    pub fn from_probabilities(rho: &DensityMatrix, detection: &DetectionModel, shots: f64) -> Result<Self> {
        let map = MeasurementSetting::all()
            .into_iter()
            .map(|s| {
                let p = outcome_probabilities(rho, s, detection);
                (s, (p.iter().map(|x| x * shots).collect(), shots))
            })
            .collect();
        Self::from_map(map, detection)
    }

    /// Modified χ² of a density matrix.
    pub fn objective(&self, rho: &ComplexMatrix, floor: f64) -> f64 {
        let flat: Vec<C64> = (0..16).map(|i| rho[(i / 4, i % 4)]).collect();
        let mut total = 0.0;
        for b in &self.blocks {
            for (m, &n) in b.povm_t.iter().zip(&b.counts) {
                let p: f64 = flat.iter().zip(m).map(|(r, x)| (r * x).re).sum();
                let expected = b.shots * p;
                total += (n - expected).powi(2) / expected.max(floor);
            }
        }
        total
    }

    fn starting_point(&self) -> ComplexMatrix {
        if self.detection.kind == DetectorKind::Camera {
            let freqs = self
                .frequencies
                .iter()
                .map(|(s, f)| (*s, [f[0], f[1], f[2], f[3]]))
                .collect();
            if let Ok(li) = linear_inversion_from_frequencies(&freqs, &self.detection) {
                return li.matrix;
            }
        }
        ComplexMatrix::identity(4).scale_re(0.25)
    }
}

/// `ρ = T†T / Tr(T†T)` from the 16 parameters.
pub fn params_to_density(x: &[f64]) -> ComplexMatrix {
    let t = lower_triangular(x);
    let m = &t.adjoint() * &t;
    let tr = m.trace().re;
    if tr > 0.0 {
        m.scale_re(1.0 / tr)
    } else {
        ComplexMatrix::identity(4).scale_re(0.25)
    }
}

fn lower_triangular(x: &[f64]) -> ComplexMatrix {
    let mut t = ComplexMatrix::zeros(4, 4);
    for i in 0..4 {
        t[(i, i)] = C64::new(x[i], 0.0);
    }
    let mut k = 4;
    for i in 1..4 {
        for j in 0..i {
            t[(i, j)] = C64::new(x[k], x[k + 1]);
            k += 2;
        }
    }
    t
}

/// Parameters of a positive-definite `ρ`, via Cholesky of `JρJ` with `J` the exchange matrix.
pub fn density_to_params(rho: &ComplexMatrix) -> Result<Vec<f64>> {
    let mut a = ComplexMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            a[(i, j)] = rho[(3 - i, 3 - j)];
        }
    }
    // JρJ = L L†, so ρ = (JLJ)(JLJ)† and T = (JLJ)†
    let mut l = ComplexMatrix::zeros(4, 4);
    for j in 0..4 {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(Error::Numerical("starting state is not positive definite".into()));
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in j + 1..4 {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    let mut jlj = ComplexMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            jlj[(i, j)] = l[(3 - i, 3 - j)];
        }
    }
    let t = jlj.adjoint();
    let mut x = vec![0.0; N_PARAMS];
    for i in 0..4 {
        x[i] = t[(i, i)].re;
    }
    let mut k = 4;
    for i in 1..4 {
        for j in 0..i {
            x[k] = t[(i, j)].re;
            x[k + 1] = t[(i, j)].im;
            k += 2;
        }
    }
    Ok(x)
}

/// Clips negative eigenvalues, renormalises, and mixes in `mix` of the identity.
fn physical_start(m: &ComplexMatrix, mix: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(&m.hermitian_part())?;
    let clipped = eig.map_spectrum(|v| v.max(0.0));
    let tr = clipped.trace().re;
    let base = if tr > 0.0 {
        clipped.scale_re(1.0 / tr)
    } else {
        ComplexMatrix::identity(4).scale_re(0.25)
    };
    Ok(&base.scale_re(1.0 - mix) + &ComplexMatrix::identity(4).scale_re(mix / 4.0))
}

/// Fit output.
#[derive(Clone, Debug, PartialEq)]
pub struct TomographyResult {
    pub rho_hat: DensityMatrix,
    pub coeffs: PauliCoeffs,
    pub objective: f64,
    /// Objective evaluations over all simplex runs.
    pub iterations: usize,
    pub restarts_used: usize,
    pub converged: bool,
    pub validation: ValidationReport,
}

#[derive(Serialize, Deserialize)]
struct Diagnostics {
    objective: f64,
    iterations: usize,
    restarts_used: usize,
    converged: bool,
}

#[derive(Serialize, Deserialize)]
struct ResultJson {
    #[serde(flatten)]
    density: DensityMatrixJson,
    diagnostics: Diagnostics,
}

impl TomographyResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ResultJson {
            density: self.rho_hat.to_json(),
            diagnostics: Diagnostics {
                objective: self.objective,
                iterations: self.iterations,
                restarts_used: self.restarts_used,
                converged: self.converged,
            },
        })
        .expect("result serialises")
    }
}

/// Maximum-likelihood fit of counts records, started from linear inversion.
pub fn mle_fit(records: &[CountsRecord], detection: &DetectionModel, opts: &MleOptions) -> Result<TomographyResult> {
    mle_fit_data(&FitData::from_records(records, detection)?, None, opts)
}

/// Fit from prepared data. `initial` replaces the linear-inversion starting point.
pub fn mle_fit_data(data: &FitData, initial: Option<&ComplexMatrix>, opts: &MleOptions) -> Result<TomographyResult> {
    let floor = opts.variance_floor;
    if !(floor > 0.0) {
        return Err(invalid("variance_floor", "must be positive"));
    }
    let f = |x: &[f64]| data.objective(&params_to_density(x), floor);

    let start = match initial {
        Some(m) => physical_start(m, 1e-3)?,
        None => physical_start(&data.starting_point(), 1e-3)?,
    };
    let mut best = density_to_params(&start)?;
    let mut best_f = f(&best);
    let mut step = 0.05;
    let mut rng = Seed(opts.seed).rng();
    let mut evals = 0;
    let mut converged = false;
    let mut restarts_used = 0;

    for run in 0..=opts.restarts {
        let scale = best.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut vertices = vec![best.clone()];
        for i in 0..N_PARAMS {
            let mut v = best.clone();
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            v[i] += sign * step * scale * rng.random_range(0.5..1.5);
            vertices.push(v);
        }
        let r = minimize_from(f, vertices, &opts.simplex);
        evals += r.evals;
        let improvement = best_f - r.f;
        if r.f < best_f {
            best = r.x;
            best_f = r.f;
        }
        restarts_used = run;
        if run > 0 && r.converged && improvement < CONVERGENCE_TOL {
            converged = true;
            break;
        }
        // later simplices probe a neighbourhood matched to the remaining error
        step = (step * 0.1).max(1e-6);
    }

    let m = params_to_density(&best);
    let rho_hat = DensityMatrix::new(m.hermitian_part())?;
    Ok(TomographyResult {
        coeffs: pauli_expansion(rho_hat.matrix()),
        validation: rho_hat.validate(crate::state::PSD_TOL),
        rho_hat,
        objective: best_f,
        iterations: evals,
        restarts_used,
        converged,
    })
}
