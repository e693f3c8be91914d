//! State-quality metrics: target fidelity with fitted phases, parity-oscillation
//! analysis, partial-transpose negativity, concurrence and entanglement of formation.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, invert_real, sqrt_psd};
use crate::state::{partial_transpose, pauli_pair, rotation, Basis, DensityMatrix, PureState, Subsystem};

/// Clip threshold for eigenvalues of `√ρ ρ̃ √ρ`.
pub const CONCURRENCE_CLIP: f64 = 1e-9;

/// Relative size below which eigenvalues of `√ρ ρ̃ √ρ` are treated as zero.
const NOISE_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Below this coherence magnitude the target phase is undetermined.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// `<Ψ|ρ|Ψ>`.
pub fn fidelity(rho: &DensityMatrix, psi: &PureState) -> f64 {
    let v = rho.matrix().matvec(psi.amplitudes());
    psi.amplitudes()
        .iter()
        .zip(&v)
        .map(|(a, b)| a.conj() * b)
        .sum::<C64>()
        .re
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityClass {
    Even,
    Odd,
}

/// Bell-like image of a computational input under the ideal gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub input: Basis,
    /// `φ_e` for even inputs, `φ_o` for odd ones.
    pub phase: f64,
}

impl TargetState {
    pub fn new(input: Basis, phase: f64) -> Self {
        Self { input, phase }
    }

    /// Picks `φ_e` or `φ_o` according to the parity of `input`.
    pub fn from_gate_phases(input: Basis, phi_e: f64, phi_o: f64) -> Self {
        let phase = match parity_class(input) {
            ParityClass::Even => phi_e,
            ParityClass::Odd => phi_o,
        };
        Self { input, phase }
    }

    pub fn class(&self) -> ParityClass {
        parity_class(self.input)
    }

    /// Conventional name `Ψ1..Ψ4` for inputs uu, dd, ud, du.
    pub fn name(&self) -> &'static str {
        match self.input {
            Basis::Uu => "psi1",
            Basis::Dd => "psi2",
            Basis::Ud => "psi3",
            Basis::Du => "psi4",
        }
    }

    pub fn pure(&self) -> PureState {
        PureState::bell_like(self.input, partner(self.input), relative_phase(self.input, self.phase))
    }
}

pub fn parity_class(b: Basis) -> ParityClass {
    match b {
        Basis::Uu | Basis::Dd => ParityClass::Even,
        Basis::Ud | Basis::Du => ParityClass::Odd,
    }
}

/// Both qubits flipped.
fn partner(b: Basis) -> Basis {
    match b {
        Basis::Uu => Basis::Dd,
        Basis::Dd => Basis::Uu,
        Basis::Ud => Basis::Du,
        Basis::Du => Basis::Ud,
    }
}

/// Sign with which the gate phase enters the partner amplitude.
fn phase_sign(b: Basis) -> f64 {
    match b {
        Basis::Uu | Basis::Ud => 1.0,
        Basis::Dd | Basis::Du => -1.0,
    }
}

/// Relative phase θ in `(|b> + e^{iθ}|b̄>)/√2`, i.e. `π/2 ± φ`.
fn relative_phase(b: Basis, phase: f64) -> f64 {
    FRAC_PI_2 + phase_sign(b) * phase
}

fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Closed-form best target phase for a given input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseFit {
    pub phase: f64,
    pub fidelity: f64,
    /// The relevant coherence vanishes, so any phase is optimal.
    pub degenerate: bool,
}

/// Maximizes `F(φ) = ½(ρ_bb + ρ_b̄b̄) + Re(e^{iθ(φ)} ρ_bb̄)` over the gate phase.
pub fn fit_target_phase(rho: &DensityMatrix, input: Basis) -> PhaseFit {
    let other = partner(input);
    let pops = 0.5 * (rho.get(input, input).re + rho.get(other, other).re);
    let coherence = rho.get(input, other);
    if coherence.norm() < DEGENERACY_TOL {
        return PhaseFit {
            phase: 0.0,
            fidelity: pops,
            degenerate: true,
        };
    }
    let theta = -coherence.arg();
    PhaseFit {
        phase: wrap_phase(phase_sign(input) * (theta - FRAC_PI_2)),
        fidelity: pops + coherence.norm(),
        degenerate: false,
    }
}

/// Result of a global π/2 analysis-phase scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParityAnalysis {
    /// `(φ, Π(φ))`.
    pub curve: Vec<(f64, f64)>,
    /// Non-negative amplitude A of `A cos(2φ + φ₀) + B`.
    pub amplitude: f64,
    pub phase_offset: f64,
    pub offset: f64,
    /// `A / 2`.
    pub coherence: f64,
}

/// Parity after `R(π/2, φ) ⊗ R(π/2, φ)`.
pub fn analysis_parity(rho: &DensityMatrix, phi: f64) -> f64 {
    let r = rotation(FRAC_PI_2, phi);
    let p = rho.apply_rotations(&r, &r).populations();
    Basis::ALL.iter().map(|b| b.parity() * p[b.index()]).sum()
}

/// Scans the analysis phase and fits `A cos(2φ + φ₀) + B` by linear least squares.
pub fn parity_analysis(rho: &DensityMatrix, phases: &[f64]) -> Result<ParityAnalysis> {
    let curve: Vec<(f64, f64)> = phases.iter().map(|&phi| (phi, analysis_parity(rho, phi))).collect();
    let (a, b, offset) = fit_double_frequency(&curve)?;
    let amplitude = a.hypot(b);
    Ok(ParityAnalysis {
        curve,
        amplitude,
        phase_offset: (-b).atan2(a),
        offset,
        coherence: amplitude / 2.0,
    })
}

/// Least-squares `(a, b, c)` for `y ≈ a cos 2φ + b sin 2φ + c`.
fn fit_double_frequency(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let mut ata = vec![vec![0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for &(phi, y) in points {
        let row = [(2.0 * phi).cos(), (2.0 * phi).sin(), 1.0];
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let inv = invert_real(&ata).ok_or_else(|| {
        Error::Numerical("parity fit needs at least three distinct analysis phases".into())
    })?;
    let sol: Vec<f64> = (0..3).map(|i| (0..3).map(|j| inv[i][j] * aty[j]).sum()).collect();
    Ok((sol[0], sol[1], sol[2]))
}

/// `N = 2 max(0, -λ_min(ρ^{T_B}))` and the ascending partial-transpose spectrum.
pub fn negativity(rho: &DensityMatrix) -> Result<(f64, [f64; 4])> {
    let pt = partial_transpose(rho.matrix(), Subsystem::Second);
    let v = herm_eig(&pt)?.values;
    let spectrum = [v[0], v[1], v[2], v[3]];
    Ok(((-2.0 * spectrum[0]).max(0.0), spectrum))
}

/// Binary entropy in bits with `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(x) + term(1.0 - x)
}

/// Entanglement of formation from concurrence.
pub fn eof_from_concurrence(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    binary_entropy(0.5 * (1.0 + (1.0 - c * c).sqrt()))
}

/// Concurrence via the eigenvalues of `√ρ ρ̃ √ρ`, with `ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    let yy = pauli_pair(2, 2);
    let tilde = &(&yy * &rho.matrix().conj()) * &yy;
    let root = sqrt_psd(rho.matrix())?;
    let m = &(&root * &tilde) * &root;
    let values = herm_eig(&m.hermitian_part())?.values;
    if values[0] < -CONCURRENCE_CLIP {
        return Err(Error::Numerical(format!(
            "negative eigenvalue {:.3e} in concurrence product",
            values[0]
        )));
    }
    // eigenvalues at round-off level would otherwise leak ~1e-8 through the square root
    let floor = NOISE_FLOOR * values[3].abs().max(1.0);
    let mut lambdas: Vec<f64> = values
        .iter()
        .map(|&v| if v < floor { 0.0 } else { v.sqrt() })
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0))
}

pub fn concurrence_eof(rho: &DensityMatrix) -> Result<(f64, f64)> {
    let c = concurrence(rho)?;
    Ok((c, eof_from_concurrence(c)))
}

/// Summary of state quality against a Bell-like target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuresReport {
    pub f: f64,
    pub n: f64,
    pub c: f64,
    pub e_f: f64,
    pub pt_spectrum: [f64; 4],
    pub phi_fit: f64,
}

/// Fidelity at the fitted target phase plus negativity, concurrence and E_F.
pub fn analyze(rho: &DensityMatrix, input: Basis) -> Result<MeasuresReport> {
    let fit = fit_target_phase(rho, input);
    let target = TargetState::new(input, fit.phase);
    let (n, pt_spectrum) = negativity(rho)?;
    let (c, e_f) = concurrence_eof(rho)?;
    Ok(MeasuresReport {
        f: fidelity(rho, &target.pure()).clamp(0.0, 1.0),
        n,
        c,
        e_f,
        pt_spectrum,
        phi_fit: fit.phase,
    })
}

/// Writes `phi_rad, parity` rows.
pub fn write_parity_csv<W: Write>(mut w: W, curve: &[(f64, f64)]) -> std::io::Result<()> {
    writeln!(w, "phi_rad, parity")?;
    for (phi, p) in curve {
        writeln!(w, "{phi}, {p}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::noise::scattering_channel;
    use crate::gate::{apply_ideal_gate, ideal_gate_unitary};
    use crate::linalg::{kron, ComplexMatrix};
    use crate::state::{random_density, random_pure, random_unitary_2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn werner(p: f64) -> DensityMatrix {
        let singlet = PureState::bell_like(Basis::Ud, Basis::Du, PI).density();
        DensityMatrix::mix(p, &singlet, &DensityMatrix::maximally_mixed()).unwrap()
    }

    fn phases(n: usize) -> Vec<f64> {
        (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
    }

    /// ρ with given even-block populations and uu-dd coherence, nothing else.
    fn even_block(p_uu: f64, p_dd: f64, coh: C64) -> DensityMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = C64::new(p_uu, 0.0);
        m[(3, 3)] = C64::new(p_dd, 0.0);
        m[(0, 3)] = coh;
        m[(3, 0)] = coh.conj();
        DensityMatrix::new(m).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let psi = TargetState::new(Basis::Uu, 0.3).pure();
        assert!((fidelity(&psi.density(), &psi) - 1.0).abs() < 1e-15);
        assert!((fidelity(&DensityMatrix::maximally_mixed(), &psi) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn target_states_follow_gate_images() {
        for input in Basis::ALL {
            let t = TargetState::from_gate_phases(input, -1.1, 0.43);
            let img = apply_ideal_gate(&PureState::basis(input), -1.1, 0.43);
            assert!((t.pure().inner(&img).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn phase_fit_recovers_gate_phase() {
        for input in Basis::ALL {
            let rho = TargetState::new(input, -1.1).pure().density();
            let fit = fit_target_phase(&rho, input);
            assert!((fit.phase + 1.1).abs() < 1e-12, "{input}: {fit:?}");
            assert!((fit.fidelity - 1.0).abs() < 1e-12);
            assert!(!fit.degenerate);
        }
    }

    #[test]
    fn phase_fit_degenerate_for_mixed_state() {
        let fit = fit_target_phase(&DensityMatrix::maximally_mixed(), Basis::Uu);
        assert!(fit.degenerate);
        assert_eq!(fit.phase, 0.0);
        assert!((fit.fidelity - 0.25).abs() < 1e-15);
    }

    #[test]
    fn phase_fit_populations_plus_coherence() {
        let rho = even_block(0.5, 0.5, C64::from_polar(0.33, 0.7));
        let fit = fit_target_phase(&rho, Basis::Uu);
        assert!((fit.fidelity - 0.83).abs() < 1e-12);
    }

    #[test]
    fn phase_fit_matches_brute_force_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let rho = random_density(&mut rng);
            for input in [Basis::Uu, Basis::Du] {
                let fit = fit_target_phase(&rho, input);
                let best = (0..100_000)
                    .map(|k| -PI + 2.0 * PI * k as f64 / 100_000.0)
                    .map(|phi| fidelity(&rho, &TargetState::new(input, phi).pure()))
                    .fold(f64::MIN, f64::max);
                assert!(fit.fidelity >= best - 1e-12);
                assert!(fit.fidelity - best < 1e-8);
            }
        }
    }

    #[test]
    fn parity_of_ideal_bell_state() {
        let rho = TargetState::new(Basis::Uu, 0.0).pure().density();
        let a = parity_analysis(&rho, &phases(24)).unwrap();
        assert!((a.amplitude - 1.0).abs() < 1e-12);
        assert!((a.coherence - 0.5).abs() < 1e-12);
    }

    #[test]
    fn parity_of_mixed_state_is_flat() {
        let a = parity_analysis(&DensityMatrix::maximally_mixed(), &phases(16)).unwrap();
        assert!(a.amplitude < 1e-12);
    }

    #[test]
    fn parity_amplitude_for_coherence_0395() {
        let rho = even_block(0.5, 0.5, C64::from_polar(0.395, -1.1));
        let a = parity_analysis(&rho, &phases(36)).unwrap();
        assert!((a.amplitude - 0.79).abs() < 1e-12);
    }

    #[test]
    fn parity_oscillates_at_twice_the_analysis_phase() {
        // dense brute-force scan: peak-to-peak period is π
        let rho = even_block(0.6, 0.4, C64::from_polar(0.3, 0.4));
        let a = parity_analysis(&rho, &phases(720)).unwrap();
        for &(phi, y) in &a.curve {
            let model = a.amplitude * (2.0 * phi + a.phase_offset).cos() + a.offset;
            assert!((y - model).abs() < 1e-12);
            assert!((analysis_parity(&rho, phi + PI) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn parity_fit_needs_three_phases() {
        assert!(parity_analysis(&DensityMatrix::maximally_mixed(), &[0.0, 1.0]).is_err());
    }

    #[test]
    fn bell_measures() {
        let rho = TargetState::new(Basis::Dd, 0.2).pure().density();
        let (n, spec) = negativity(&rho).unwrap();
        assert!((n - 1.0).abs() < 1e-12);
        for (v, w) in spec.iter().zip([-0.5, 0.5, 0.5, 0.5]) {
            assert!((v - w).abs() < 1e-12);
        }
        let (c, e) = concurrence_eof(&rho).unwrap();
        assert!((c - 1.0).abs() < 1e-9 && (e - 1.0).abs() < 1e-9);
    }

    #[test]
    fn product_states_unentangled() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let u = kron(&random_unitary_2(&mut rng), &random_unitary_2(&mut rng));
            let rho = DensityMatrix::basis(Basis::Uu).evolve(&u);
            let (n, _) = negativity(&rho).unwrap();
            let (c, e) = concurrence_eof(&rho).unwrap();
            assert!(n < 1e-12 && c < 1e-6 && e < 1e-9, "{n} {c} {e}");
        }
    }

    #[test]
    fn werner_state_measures() {
        // Brute-force PT eigenvalues of the Werner state: (1 - 3p)/4 once, (1 + p)/4 three times.
        let rho = werner(0.75);
        let (n, spec) = negativity(&rho).unwrap();
        assert!((spec[0] - (1.0 - 3.0 * 0.75) / 4.0).abs() < 1e-12);
        assert!((n - 0.625).abs() < 1e-12);
        let (c, e) = concurrence_eof(&rho).unwrap();
        assert!((c - 0.625).abs() < 1e-9);
        let want = binary_entropy((1.0 + (1.0 - 0.625f64 * 0.625).sqrt()) / 2.0);
        assert!((e - want).abs() < 1e-9);
    }

    #[test]
    fn pure_state_concurrence_matches_spin_flip_overlap() {
        // C(ψ) = |<ψ| σ_y⊗σ_y |ψ*>| for pure states.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let yy = pauli_pair(2, 2);
        for _ in 0..50 {
            let psi = random_pure(&mut rng);
            let conj: Vec<C64> = psi.amplitudes().iter().map(|a| a.conj()).collect();
            let flipped = yy.matvec(&conj);
            let want: C64 = psi.amplitudes().iter().zip(&flipped).map(|(a, b)| a.conj() * b).sum();
            let c = concurrence(&psi.density()).unwrap();
            assert!((c - want.norm()).abs() < 1e-6, "{c} vs {}", want.norm());
        }
    }

    #[test]
    fn binary_entropy_edges() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn analyze_examples() {
        let psi2 = TargetState::new(Basis::Dd, -1.1).pure().density();
        let r = analyze(&psi2, Basis::Dd).unwrap();
        assert!((r.f - 1.0).abs() < 1e-12 && (r.n - 1.0).abs() < 1e-12 && (r.e_f - 1.0).abs() < 1e-9);

        let psi1 = apply_ideal_gate(&PureState::basis(Basis::Uu), 0.0, 0.0);
        let noisy = scattering_channel(&psi1.density(), 0.3, 0.27, &psi1).unwrap();
        let r = analyze(&noisy, Basis::Uu).unwrap();
        assert!((r.f - 0.781).abs() < 1e-12);

        let r = analyze(&DensityMatrix::maximally_mixed(), Basis::Ud).unwrap();
        assert!((r.f - 0.25).abs() < 1e-12 && r.n == 0.0 && r.e_f < 1e-12);
    }

    #[test]
    fn measures_invariant_under_local_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let rho = random_density(&mut rng).evolve(&ideal_gate_unitary(0.2, 0.1));
            let u = kron(&random_unitary_2(&mut rng), &random_unitary_2(&mut rng));
            let moved = rho.evolve(&u);
            let (n0, _) = negativity(&rho).unwrap();
            let (n1, _) = negativity(&moved).unwrap();
            let (c0, e0) = concurrence_eof(&rho).unwrap();
            let (c1, e1) = concurrence_eof(&moved).unwrap();
            assert!((n0 - n1).abs() < 1e-10);
            assert!((c0 - c1).abs() < 1e-10, "{c0} {c1}");
            assert!((e0 - e1).abs() < 1e-10);
        }
    }

    #[test]
    fn parity_csv_header() {
        let mut buf = Vec::new();
        write_parity_csv(&mut buf, &[(0.0, 1.0)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "phi_rad, parity\n0, 1\n");
    }
}
