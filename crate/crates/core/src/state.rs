//! Two-qubit states and the operator algebra built on them.
//!
//! Basis order is `|↑↑>, |↑↓>, |↓↑>, |↓↓>` with `σ_z|↑> = +|↑>`; the first
//! qubit is the most significant index.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{herm_eig, kron, ComplexMatrix, I, ONE, ZERO};

/// Label written into serialized density matrices.
pub const BASIS_ORDER: &str = "uu,ud,du,dd";

/// Tolerances used by [`DensityMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;

/// Computational basis state of two qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Uu,
    Ud,
    Du,
    Dd,
}

impl Basis {
    pub const ALL: [Basis; 4] = [Basis::Uu, Basis::Ud, Basis::Du, Basis::Dd];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Basis::Uu => "uu",
            Basis::Ud => "ud",
            Basis::Du => "du",
            Basis::Dd => "dd",
        }
    }

    /// Number of ions reading `↓` (bright).
    pub fn bright_count(self) -> u32 {
        match self {
            Basis::Uu => 0,
            Basis::Ud | Basis::Du => 1,
            Basis::Dd => 2,
        }
    }

    /// Eigenvalue of σ_z ⊗ σ_z.
    pub fn parity(self) -> f64 {
        match self {
            Basis::Uu | Basis::Dd => 1.0,
            Basis::Ud | Basis::Du => -1.0,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uu" => Ok(Basis::Uu),
            "ud" => Ok(Basis::Ud),
            "du" => Ok(Basis::Du),
            "dd" => Ok(Basis::Dd),
            other => Err(Error::Parse(format!("unknown basis state `{other}`"))),
        }
    }
}

/// Pauli matrix `σ_k` with `σ_0 = I`.
pub fn pauli(k: usize) -> ComplexMatrix {
    let z = ZERO;
    match k {
        0 => ComplexMatrix::identity(2),
        1 => ComplexMatrix::from_rows([[z, ONE], [ONE, z]]),
        2 => ComplexMatrix::from_rows([[z, -I], [I, z]]),
        3 => ComplexMatrix::from_rows([[ONE, z], [z, -ONE]]),
        _ => panic!("Pauli index {k} out of range"),
    }
}

/// `σ_i ⊗ σ_j`.
pub fn pauli_pair(i: usize, j: usize) -> ComplexMatrix {
    kron(&pauli(i), &pauli(j))
}

/// Normalized two-qubit pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: [C64; 4],
}

impl PureState {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(amps: [C64; 4]) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(invalid("amplitudes", format!("squared norm {norm} != 1")));
        }
        Ok(Self { amps })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amps: [C64; 4]) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(invalid("amplitudes", "zero or non-finite norm"));
        }
        Ok(Self {
            amps: amps.map(|a| a / norm),
        })
    }

    pub fn basis(b: Basis) -> Self {
        let mut amps = [ZERO; 4];
        amps[b.index()] = ONE;
        Self { amps }
    }

    /// `(|a> + e^{iθ}|b>)/√2` for distinct basis states.
    pub fn bell_like(a: Basis, b: Basis, theta: f64) -> Self {
        assert_ne!(a, b);
        let mut amps = [ZERO; 4];
        amps[a.index()] = C64::new(FRAC_1_SQRT_2, 0.0);
        amps[b.index()] = C64::from_polar(FRAC_1_SQRT_2, theta);
        Self { amps }
    }

    /// Product state `|ψ1> ⊗ |ψ2>` of single-qubit amplitudes.
    pub fn product(q1: [C64; 2], q2: [C64; 2]) -> Result<Self> {
        Self::normalized([q1[0] * q2[0], q1[0] * q2[1], q1[1] * q2[0], q1[1] * q2[1]])
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.amps
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn apply(&self, u: &ComplexMatrix) -> PureState {
        let v = u.matvec(&self.amps);
        PureState {
            amps: [v[0], v[1], v[2], v[3]],
        }
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amps, &self.amps)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            m: self.projector(),
        }
    }
}

/// Two-qubit density matrix satisfying Hermiticity, unit trace and positivity.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates a 4×4 matrix against the density-matrix invariants.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.rows() != 4 || m.cols() != 4 {
            return Err(Error::Dimension(format!(
                "density matrix must be 4x4, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let report = ValidationReport::inspect(&m)?;
        if !report.is_valid(HERMITIAN_TOL, TRACE_TOL, PSD_TOL) {
            return Err(invalid("density matrix", report.to_string()));
        }
        Ok(Self {
            m: m.hermitian_part(),
        })
    }

    /// Wraps a matrix already known to be physical (internal constructions).
    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        debug_assert_eq!((m.rows(), m.cols()), (4, 4));
        Self { m }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            m: ComplexMatrix::identity(4).scale_re(0.25),
        }
    }

    pub fn basis(b: Basis) -> Self {
        PureState::basis(b).density()
    }

    /// Convex combination `w ρ_a + (1 - w) ρ_b`.
    pub fn mix(w: f64, a: &DensityMatrix, b: &DensityMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(invalid("weight", format!("{w} outside [0, 1]")));
        }
        Ok(Self {
            m: &a.m.scale_re(w) + &b.m.scale_re(1.0 - w),
        })
    }

    pub fn product(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> Result<Self> {
        let ma = ComplexMatrix::from_rows(*a);
        let mb = ComplexMatrix::from_rows(*b);
        Self::new(kron(&ma, &mb))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    pub fn get(&self, row: Basis, col: Basis) -> C64 {
        self.m[(row.index(), col.index())]
    }

    pub fn populations(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|k| self.m[(k, k)].re)
    }

    /// `U ρ U^dagger` for a 4×4 unitary.
    pub fn evolve(&self, u: &ComplexMatrix) -> DensityMatrix {
        DensityMatrix {
            m: self.m.conjugate_by(u).hermitian_part(),
        }
    }

    /// Global or independent single-qubit rotations, `(R1 ⊗ R2) ρ (R1 ⊗ R2)^dagger`.
    pub fn apply_rotations(&self, r1: &ComplexMatrix, r2: &ComplexMatrix) -> DensityMatrix {
        self.evolve(&kron(r1, r2))
    }

    pub fn expectation(&self, op: &ComplexMatrix) -> C64 {
        (&self.m * op).trace()
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        let diff = &self.m - &other.m;
        let eig = herm_eig(&diff.hermitian_part())?;
        Ok(0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>())
    }

    pub fn validate(&self, tol: f64) -> ValidationReport {
        validate_density(&self.m, tol)
    }

    pub fn to_json(&self) -> DensityMatrixJson {
        DensityMatrixJson::from_matrix(&self.m)
    }

    pub fn from_json(doc: &DensityMatrixJson) -> Result<Self> {
        Self::new(doc.to_matrix()?)
    }
}

/// Pauli coefficients `r_ij = Tr(ρ σ_i ⊗ σ_j)`, so `r_00 = 1` for unit trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliCoeffs(pub [[f64; 4]; 4]);

impl PauliCoeffs {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    /// Inverse of [`pauli_expansion`]: `ρ = (1/4) Σ r_ij σ_i ⊗ σ_j`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                let r = self.0[i][j];
                if r != 0.0 {
                    out = &out + &pauli_pair(i, j).scale_re(0.25 * r);
                }
            }
        }
        out
    }
}

/// Expands any 4×4 operator in the two-qubit Pauli basis (real parts).
pub fn pauli_expansion(m: &ComplexMatrix) -> PauliCoeffs {
    let mut r = [[0.0; 4]; 4];
    for (i, row) in r.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (m * &pauli_pair(i, j)).trace().re;
        }
    }
    PauliCoeffs(r)
}

/// Which qubit's indices a partial transpose acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Partial transpose of a 4×4 operator.
pub fn partial_transpose(m: &ComplexMatrix, sub: Subsystem) -> ComplexMatrix {
    assert_eq!((m.rows(), m.cols()), (4, 4));
    let mut out = ComplexMatrix::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    // <a b| ρ |c d>
                    let v = m[(2 * a + b, 2 * c + d)];
                    let (r, s) = match sub {
                        Subsystem::First => (2 * c + b, 2 * a + d),
                        Subsystem::Second => (2 * a + d, 2 * c + b),
                    };
                    out[(r, s)] = v;
                }
            }
        }
    }
    out
}

/// Single-qubit rotation `exp(-i θ/2 (cos φ σ_x + sin φ σ_y))`.
pub fn rotation(theta: f64, phi: f64) -> ComplexMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    let off = C64::new(0.0, -s);
    ComplexMatrix::from_rows([
        [C64::new(c, 0.0), off * C64::from_polar(1.0, -phi)],
        [off * C64::from_polar(1.0, phi), C64::new(c, 0.0)],
    ])
}

/// Defects of a candidate density matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub hermiticity_defect: f64,
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
    /// Set when any defect exceeds the inspection tolerance.
    pub flagged: bool,
}

impl ValidationReport {
    fn inspect(m: &ComplexMatrix) -> Result<Self> {
        let hermiticity_defect = m.hermiticity_defect();
        let trace_defect = (m.trace() - ONE).norm();
        let min_eigenvalue = herm_eig(&m.hermitian_part())?.values[0];
        Ok(Self {
            hermiticity_defect,
            trace_defect,
            min_eigenvalue,
            flagged: false,
        })
    }

    fn is_valid(&self, herm: f64, trace: f64, psd: f64) -> bool {
        self.hermiticity_defect <= herm && self.trace_defect <= trace && self.min_eigenvalue >= -psd
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "hermiticity defect {:.3e}, trace defect {:.3e}, min eigenvalue {:.3e}",
            self.hermiticity_defect, self.trace_defect, self.min_eigenvalue
        )
    }
}

/// Inspects a matrix without rejecting it; negative eigenvalues are reported, not errors.
pub fn validate_density(m: &ComplexMatrix, tol: f64) -> ValidationReport {
    match ValidationReport::inspect(m) {
        Ok(mut r) => {
            r.flagged = !r.is_valid(tol, tol, tol);
            r
        }
        Err(_) => ValidationReport {
            hermiticity_defect: m.hermiticity_defect(),
            trace_defect: (m.trace() - ONE).norm(),
            min_eigenvalue: f64::NAN,
            flagged: true,
        },
    }
}

/// Serialized form `{"dim":4, "basis_order":..., "re":[[..]], "im":[[..]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub dim: usize,
    pub basis_order: String,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl DensityMatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            dim: m.rows(),
            basis_order: BASIS_ORDER.to_string(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let n = self.dim;
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !shape_ok(&self.re) || !shape_ok(&self.im) {
            return Err(Error::Dimension(format!(
                "JSON density matrix does not match dim {n}"
            )));
        }
        if self.basis_order != BASIS_ORDER {
            return Err(Error::Parse(format!(
                "unsupported basis order `{}`",
                self.basis_order
            )));
        }
        let data = self
            .re
            .iter()
            .flatten()
            .zip(self.im.iter().flatten())
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        ComplexMatrix::from_vec(n, n, data)
    }
}

/// Random full-rank state `G G^dagger / Tr` from a complex Gaussian `G`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let data = (0..16)
        .map(|_| {
            C64::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            )
        })
        .collect();
    let g = ComplexMatrix::from_vec(4, 4, data).expect("16 finite entries");
    let gg = &g * &g.adjoint();
    let tr = gg.trace().re;
    DensityMatrix::from_trusted(gg.scale_re(1.0 / tr).hermitian_part())
}

/// Haar-random pure state.
pub fn random_pure<R: Rng + ?Sized>(rng: &mut R) -> PureState {
    let amps = [0; 4].map(|_| {
        C64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    PureState::normalized(amps).expect("Gaussian vector is non-zero")
}

/// Haar-random single-qubit unitary.
pub fn random_unitary_2<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    let a = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let b = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (a, b) = (a / n, b / n);
    let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    ComplexMatrix::from_rows([[a, -b.conj() * phase], [b, a.conj() * phase]])
}
