//! Two-qubit state tomography in the nine Pauli product bases.
//!
//! Each setting rotates both qubits into the σ_z basis, reads the four joint
//! outcomes (`↑↑, ↑↓, ↓↑, ↓↓`) through per-qubit detection confusion, and
//! records counts. Reconstruction is either direct linear inversion of the
//! Pauli coefficients or a maximum-likelihood fit (see [`mle`]).

pub mod mle;
pub mod simplex;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{invert_real, ComplexMatrix};
use crate::state::{rotation, Basis, DensityMatrix, PauliCoeffs, ValidationReport};
use crate::stats::{multinomial_sample, Seed};

pub use mle::{mle_fit, MleOptions, TomographyResult};

/// Measured Pauli axis on one qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// Pauli index 1, 2 or 3.
    pub fn pauli_index(self) -> usize {
        match self {
            Axis::X => 1,
            Axis::Y => 2,
            Axis::Z => 3,
        }
    }

    /// Rotation applied before σ_z readout so that outcome `↑` is the +1 eigenvalue.
    pub fn rotation(self) -> ComplexMatrix {
        match self {
            Axis::X => rotation(FRAC_PI_2, -FRAC_PI_2),
            Axis::Y => rotation(FRAC_PI_2, 0.0),
            Axis::Z => ComplexMatrix::identity(2),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::Parse(format!("unknown measurement axis `{other}`"))),
        }
    }
}

/// Measurement basis σ_i ⊗ σ_j.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub q1: Axis,
    pub q2: Axis,
}

impl MeasurementSetting {
    pub const ZZ: MeasurementSetting = MeasurementSetting { q1: Axis::Z, q2: Axis::Z };

    pub fn new(q1: Axis, q2: Axis) -> Self {
        Self { q1, q2 }
    }

    /// All nine settings, first qubit major.
    pub fn all() -> Vec<MeasurementSetting> {
        Axis::ALL
            .iter()
            .flat_map(|&a| Axis::ALL.iter().map(move |&b| MeasurementSetting::new(a, b)))
            .collect()
    }

    pub fn rotations(&self) -> (ComplexMatrix, ComplexMatrix) {
        setting_rotations(*self)
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.q1.label(), self.q2.label())
    }
}

pub fn setting_rotations(setting: MeasurementSetting) -> (ComplexMatrix, ComplexMatrix) {
    (setting.q1.rotation(), setting.q2.rotation())
}

/// Outcome counts for one setting, ordered `↑↑, ↑↓, ↓↑, ↓↓`
/// (or `↑↑, {↑↓,↓↑}, ↓↓` for PMT readout).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub setting: MeasurementSetting,
    pub counts: Vec<u64>,
}

impl CountsRecord {
    pub fn new(setting: MeasurementSetting, counts: [u64; 4]) -> Result<Self> {
        let r = Self {
            setting,
            counts: counts.to_vec(),
        };
        if r.shots() == 0 {
            return Err(invalid("counts", "record has no shots"));
        }
        Ok(r)
    }

    pub fn shots(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.shots() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Readout hardware.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    /// Resolves each ion; four outcomes.
    Camera,
    /// Counts total fluorescence; `↑↓` and `↓↑` merge.
    Pmt,
}

/// Per-qubit confusion: `confusion[q][reported][true]`, outcome 0 = `↑`, 1 = `↓`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    pub confusion: [[[f64; 2]; 2]; 2],
    pub kind: DetectorKind,
}

impl DetectionModel {
    pub fn perfect() -> Self {
        Self::symmetric(1.0)
    }

    /// Same readout fidelity for both outcomes on both qubits.
    pub fn symmetric(fidelity: f64) -> Self {
        let e = 1.0 - fidelity;
        Self::asymmetric([e, e], [e, e])
    }

    /// `flip_up[q]` = P(read ↓ | ↑), `flip_down[q]` = P(read ↑ | ↓).
    pub fn asymmetric(flip_up: [f64; 2], flip_down: [f64; 2]) -> Self {
        let c = |q: usize| [[1.0 - flip_up[q], flip_down[q]], [flip_up[q], 1.0 - flip_down[q]]];
        Self {
            confusion: [c(0), c(1)],
            kind: DetectorKind::Camera,
        }
    }

    pub fn with_kind(mut self, kind: DetectorKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for q in &self.confusion {
            for col in 0..2 {
                let s = q[0][col] + q[1][col];
                if (s - 1.0).abs() > 1e-12 || !(0.0..=1.0).contains(&q[0][col]) || !(0.0..=1.0).contains(&q[1][col]) {
                    return Err(invalid("detection", format!("confusion column {col} is not a distribution")));
                }
            }
        }
        Ok(())
    }

    /// Joint 4×4 confusion `C1 ⊗ C2` acting on `↑↑, ↑↓, ↓↑, ↓↓` probabilities.
    pub fn joint(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.confusion[0][r / 2][c / 2] * self.confusion[1][r % 2][c % 2];
            }
        }
        out
    }

    /// Inverse of the joint confusion.
    pub fn joint_inverse(&self) -> Result<[[f64; 4]; 4]> {
        let mut inv = [[[0.0; 2]; 2]; 2];
        for (q, c) in self.confusion.iter().enumerate() {
            let m = invert_real(&[c[0].to_vec(), c[1].to_vec()]).ok_or(Error::SingularConfusion { qubit: q })?;
            inv[q] = [[m[0][0], m[0][1]], [m[1][0], m[1][1]]];
        }
        let mut out = [[0.0; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = inv[0][r / 2][c / 2] * inv[1][r % 2][c % 2];
            }
        }
        Ok(out)
    }
}

fn apply4(m: &[[f64; 4]; 4], v: &[f64]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

/// Outcome probabilities of one setting: rotate, read the diagonal, apply confusion.
pub fn outcome_probabilities(rho: &DensityMatrix, setting: MeasurementSetting, detection: &DetectionModel) -> Vec<f64> {
    let (r1, r2) = setting.rotations();
    let pops = rho.apply_rotations(&r1, &r2).populations().map(|p| p.max(0.0));
    let reported = apply4(&detection.joint(), &pops);
    let total: f64 = reported.iter().sum();
    let p: Vec<f64> = reported.iter().map(|x| x / total).collect();
    match detection.kind {
        DetectorKind::Camera => p,
        DetectorKind::Pmt => vec![p[0], p[1] + p[2], p[3]],
    }
}

/// Multinomial shot noise for each setting, from one seeded stream.
pub fn simulate_counts(
    rho: &DensityMatrix,
    settings: &[MeasurementSetting],
    shots: u64,
    detection: &DetectionModel,
    seed: Seed,
) -> Result<Vec<CountsRecord>> {
    if shots == 0 {
        return Err(invalid("shots", "must be positive"));
    }
    let mut rng = seed.rng();
    settings
        .iter()
        .map(|&setting| {
            let p = outcome_probabilities(rho, setting, detection);
            Ok(CountsRecord {
                setting,
                counts: multinomial_sample(&p, shots, &mut rng)?,
            })
        })
        .collect()
}

/// Merges records per setting and orders them canonically.
pub fn aggregate(records: &[CountsRecord]) -> Result<BTreeMap<MeasurementSetting, Vec<u64>>> {
    let mut map: BTreeMap<MeasurementSetting, Vec<u64>> = BTreeMap::new();
    for r in records {
        if r.counts.len() != 4 {
            return Err(invalid(
                "records",
                format!("setting {} has {} outcomes; tomography needs camera readout", r.setting, r.counts.len()),
            ));
        }
        let entry = map.entry(r.setting).or_insert_with(|| vec![0; 4]);
        for (e, c) in entry.iter_mut().zip(&r.counts) {
            *e += c;
        }
    }
    Ok(map)
}

/// ±1 eigenvalue of the measured operator on each qubit for outcome `k`.
fn outcome_signs(k: usize) -> (f64, f64) {
    let s = |bit: usize| if bit == 0 { 1.0 } else { -1.0 };
    (s(k / 2), s(k % 2))
}

/// Output of direct inversion; the matrix may be unphysical.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearInversion {
    pub coeffs: PauliCoeffs,
    pub matrix: ComplexMatrix,
    pub validation: ValidationReport,
}

impl LinearInversion {
    pub fn is_physical(&self) -> bool {
        !self.validation.flagged
    }
}

/// Raw outcome frequencies per setting, canonically ordered.
pub fn frequencies(records: &[CountsRecord]) -> Result<BTreeMap<MeasurementSetting, [f64; 4]>> {
    Ok(aggregate(records)?
        .into_iter()
        .map(|(s, c)| {
            let n: u64 = c.iter().sum();
            (s, [0, 1, 2, 3].map(|k| c[k] as f64 / n as f64))
        })
        .collect())
}

/// Pauli coefficients from frequencies; single-qubit terms averaged over the three settings sharing the marginal.
pub fn linear_inversion(records: &[CountsRecord], detection: &DetectionModel) -> Result<LinearInversion> {
    linear_inversion_from_frequencies(&frequencies(records)?, detection)
}

/// As [`linear_inversion`], from per-setting reported frequencies.
pub fn linear_inversion_from_frequencies(
    freqs: &BTreeMap<MeasurementSetting, [f64; 4]>,
    detection: &DetectionModel,
) -> Result<LinearInversion> {
    let inv = detection.joint_inverse()?;
    for s in MeasurementSetting::all() {
        if !freqs.contains_key(&s) {
            return Err(Error::MissingSetting(s.to_string()));
        }
    }
    let mut r = [[0.0; 4]; 4];
    r[0][0] = 1.0;
    for (s, f) in freqs {
        let q = apply4(&inv, f);
        let (i, j) = (s.q1.pauli_index(), s.q2.pauli_index());
        for (k, &p) in q.iter().enumerate() {
            let (a, b) = outcome_signs(k);
            r[i][j] += a * b * p;
            r[i][0] += a * p / 3.0;
            r[0][j] += b * p / 3.0;
        }
    }
    let coeffs = PauliCoeffs(r);
    let matrix = coeffs.reconstruct();
    let validation = crate::state::validate_density(&matrix, crate::state::PSD_TOL);
    Ok(LinearInversion {
        coeffs,
        matrix,
        validation,
    })
}

/// Detection model inferred from `|↑↑>` and `|↓↓>` control runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub model: DetectionModel,
    /// False when the controls cannot separate the two states; `model` is then perfect detection.
    pub informative: bool,
}

/// Per-qubit flip probabilities from (z,z) control records of `|↑↑>` and `|↓↓>`.
pub fn calibrate_detection(control_uu: &CountsRecord, control_dd: &CountsRecord) -> Result<Calibration> {
    for rec in [control_uu, control_dd] {
        if rec.setting != MeasurementSetting::ZZ || rec.counts.len() != 4 {
            return Err(invalid("control", "control runs must be four-outcome (z,z) records"));
        }
        if rec.shots() == 0 {
            return Err(invalid("control", "empty control record"));
        }
    }
    let single = |r: &CountsRecord| r.counts.iter().position(|&c| c == r.shots());
    if let (Some(a), Some(b)) = (single(control_uu), single(control_dd)) {
        if a == b {
            return Ok(Calibration {
                model: DetectionModel::perfect(),
                informative: false,
            });
        }
    }
    let fu = control_uu.frequencies();
    let fd = control_dd.frequencies();
    let flip_up = [fu[2] + fu[3], fu[1] + fu[3]];
    let flip_down = [fd[0] + fd[1], fd[0] + fd[2]];
    let model = DetectionModel::asymmetric(flip_up, flip_down);
    if model.joint_inverse().is_err() || flip_up[0] + flip_down[0] >= 1.0 || flip_up[1] + flip_down[1] >= 1.0 {
        return Ok(Calibration {
            model: DetectionModel::perfect(),
            informative: false,
        });
    }
    Ok(Calibration {
        model,
        informative: true,
    })
}

/// Writes `basis_q1, basis_q2, n_uu, n_ud, n_du, n_dd` rows.
pub fn write_counts_csv<W: Write>(mut w: W, records: &[CountsRecord]) -> std::io::Result<()> {
    writeln!(w, "basis_q1, basis_q2, n_uu, n_ud, n_du, n_dd")?;
    for r in records {
        let c = &r.counts;
        if c.len() != 4 {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                "counts CSV holds four-outcome records only",
            ));
        }
        writeln!(w, "{}, {}, {}, {}, {}, {}", r.setting.q1.label(), r.setting.q2.label(), c[0], c[1], c[2], c[3])?;
    }
    Ok(())
}

pub fn read_counts_csv<R: BufRead>(r: R) -> Result<Vec<CountsRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("basis_q1")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(Error::Parse(format!("line {}: expected 6 fields", lineno + 1)));
        }
        let setting = MeasurementSetting::new(fields[0].parse()?, fields[1].parse()?);
        let mut counts = [0u64; 4];
        for (c, f) in counts.iter_mut().zip(&fields[2..]) {
            *c = f
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad count `{f}`", lineno + 1)))?;
        }
        out.push(CountsRecord::new(setting, counts)?);
    }
    Ok(out)
}

/// Expected (noise-free) records; counts are rounded `shots · p`.
pub fn expected_counts(rho: &DensityMatrix, shots: u64, detection: &DetectionModel) -> Vec<CountsRecord> {
    MeasurementSetting::all()
        .into_iter()
        .map(|setting| {
            let p = outcome_probabilities(rho, setting, detection);
            CountsRecord {
                setting,
                counts: p.iter().map(|x| (x * shots as f64).round() as u64).collect(),
            }
        })
        .collect()
}

/// Computational basis label for outcome `k` of a four-outcome record.
pub fn outcome_label(k: usize) -> Basis {
    Basis::ALL[k]
}
