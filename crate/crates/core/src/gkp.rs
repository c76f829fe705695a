//! The square GKP code.
//!
//! Lattice constants in the q = (a + a†)/√2, [q, p] = i convention:
//! a_x = √(2π), a_z = i√(2π), a_y = a_x + a_z. A displacement by a full
//! lattice constant is a stabilizer, by half a constant a logical Pauli.
//! Finite-energy code states carry the photon-number envelope
//! e^{−Δ²n/2} applied to the ideal position comb.

use ndarray::Array1;
use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};
use crate::fock::{self, FockSpace};
use crate::linalg::{fidelity, mat_vec, Operator, QState, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogicalLabel {
    Zero,
    One,
    Plus,
    Minus,
}

/// Logical displacement selector: half a lattice constant for Paulis,
/// a full constant for stabilizers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogicalOp {
    Pauli(PauliAxis),
    Stabilizer(PauliAxis),
}

/// The square GKP code on a truncated Fock space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GkpCode {
    a_x: C64,
    a_y: C64,
    a_z: C64,
    delta: f64,
    space: FockSpace,
}

impl GkpCode {
    /// Square-lattice code: a_x = √(2π), a_z = i√(2π).
    pub fn square(delta: f64, space: FockSpace) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(SimError::InvalidInput(format!("delta must be in (0, 1), got {delta}")));
        }
        let root = (2.0 * std::f64::consts::PI).sqrt();
        let a_x = C64::new(root, 0.0);
        let a_z = C64::new(0.0, root);
        let code = Self { a_x, a_y: a_x + a_z, a_z, delta, space };
        let floor = (4.0 / (delta * delta)).ceil() as usize;
        if space.cutoff() < floor {
            log::warn!(
                "cutoff {} below the heuristic floor 4/delta^2 = {floor}; envelope tails will be clipped",
                space.cutoff()
            );
        }
        debug_assert!((code.a_x.conj() * code.a_z).im - std::f64::consts::TAU < 1e-12);
        Ok(code)
    }

    pub fn lattice(&self, axis: PauliAxis) -> C64 {
        match axis {
            PauliAxis::X => self.a_x,
            PauliAxis::Y => self.a_y,
            PauliAxis::Z => self.a_z,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn cutoff(&self) -> usize {
        self.space.cutoff()
    }
}

const ROOT_PI: f64 = 1.7724538509055159; // √π, the logical lattice pitch in q

fn ideal_comb(space: FockSpace, parity: u8) -> Array1<f64> {
    let n = space.cutoff();
    // position comb at q = (2k + parity)√π; centers beyond the Hermite
    // turning point of the highest level contribute nothing
    let qmax = (2.0 * n as f64 + 1.0).sqrt() + 6.0;
    let mut comb = vec![0.0f64; n];
    let kmin = (-(qmax / (2.0 * ROOT_PI)) - 1.0).floor() as i64;
    let kmax = ((qmax / (2.0 * ROOT_PI)) + 1.0).ceil() as i64;
    for k in kmin..=kmax {
        let c = (2 * k + parity as i64) as f64 * ROOT_PI;
        if c.abs() > qmax {
            continue;
        }
        let phi = fock::hermite_functions(c, n);
        for (acc, p) in comb.iter_mut().zip(phi.iter()) {
            *acc += p;
        }
    }
    Array1::from_vec(comb)
}

/// Finite-energy logical state: the ideal position comb under the
/// photon-number envelope e^{−Δ²n/2}, truncated and renormalized.
pub fn gkp_state(code: &GkpCode, label: LogicalLabel) -> Result<StateVector> {
    let n = code.cutoff();
    let build = |parity: u8| -> StateVector {
        let comb = ideal_comb(code.space(), parity);
        let tau = code.delta() * code.delta() / 2.0;
        let amps = Array1::from_shape_fn(n, |k| C64::new((-(tau) * k as f64).exp() * comb[k], 0.0));
        StateVector::new(vec![n], amps).expect("in budget").normalized()
    };
    let state = match label {
        LogicalLabel::Zero => build(0),
        LogicalLabel::One => build(1),
        LogicalLabel::Plus | LogicalLabel::Minus => {
            let zero = build(0);
            let one = build(1);
            let sign = if label == LogicalLabel::Plus { 1.0 } else { -1.0 };
            let amps = zero.amps() + &one.amps().mapv(|v| v * sign);
            StateVector::new(vec![n], amps)?.normalized()
        }
    };
    Ok(state)
}

/// D(a_i/2) for logical Paulis, D(a_i) for stabilizers.
pub fn logical_displacement(code: &GkpCode, which: LogicalOp) -> Result<Operator> {
    let alpha = match which {
        LogicalOp::Pauli(axis) => code.lattice(axis) / 2.0,
        LogicalOp::Stabilizer(axis) => code.lattice(axis),
    };
    fock::displacement(code.space(), alpha)
}

/// ⟨ψ|D(α)|ψ⟩ for a single-mode state.
pub fn displacement_expectation(psi: &StateVector, alpha: C64) -> Result<C64> {
    if psi.dims().len() != 1 {
        return Err(SimError::InvalidInput("displacement_expectation expects a single mode".into()));
    }
    let d = fock::displacement_matrix(psi.len(), alpha);
    let applied = mat_vec(&d, psi.amps());
    Ok(psi.amps().iter().zip(applied.iter()).map(|(a, b)| a.conj() * b).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeBasis {
    X,
    Z,
}

/// Result of a quadrature-binning decode.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct Decode {
    pub bit: u8,
    pub confidence: f64,
    pub ambiguous: bool,
}

const AMBIGUOUS_MARGIN: f64 = 0.05;
const DECODE_STEP: f64 = 0.01;

/// Decodes a logical bit by integrating the quadrature distribution
/// (q for Z, p for X) over bins of width √π centered on the logical
/// lattice: even bins vote 0, odd bins vote 1. Mass exactly on a bin
/// edge goes to the lower bin.
pub fn decode_logical(state: QState<'_>, code: &GkpCode, basis: DecodeBasis) -> Result<Decode> {
    let n = match state {
        QState::Pure(s) => {
            if s.dims().len() != 1 {
                return Err(SimError::InvalidInput("decode_logical expects a single mode".into()));
            }
            s.len()
        }
        QState::Mixed(o) => {
            if o.dims().len() != 1 {
                return Err(SimError::InvalidInput("decode_logical expects a single mode".into()));
            }
            o.side()
        }
    };
    let theta = match basis {
        DecodeBasis::Z => 0.0,
        DecodeBasis::X => std::f64::consts::FRAC_PI_2,
    };
    let extent = (2.0 * n as f64 + 1.0).sqrt() + 2.0;
    let steps = (2.0 * extent / DECODE_STEP).ceil() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| -extent + DECODE_STEP * i as f64).collect();
    let density: Vec<f64> = match state {
        QState::Pure(s) => {
            fock::quadrature_wavefunction(s, theta, &grid)?.iter().map(|v| v.norm_sqr()).collect()
        }
        QState::Mixed(o) => fock::quadrature_density(o, theta, &grid)?,
    };
    let mut mass = [0.0f64; 2];
    for (i, (&x, &p)) in grid.iter().zip(density.iter()).enumerate() {
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        // nearest lattice point, edges resolving to the lower bin
        let bin = (x / ROOT_PI - 0.5).ceil() as i64;
        let bit = (bin.rem_euclid(2)) as usize;
        mass[bit] += w * p * DECODE_STEP;
    }
    let total = mass[0] + mass[1];
    if total <= 0.0 {
        return Err(SimError::Numerical("decode_logical: zero probability mass".into()));
    }
    let bit = if mass[1] > mass[0] { 1u8 } else { 0u8 };
    let confidence = mass[bit as usize] / total;
    Ok(Decode { bit, confidence, ambiguous: confidence < 0.5 + AMBIGUOUS_MARGIN })
}

/// Fidelity against the target logical state evaluated in the tracked
/// displacement frame: F(D(−δ)ψ, |target⟩).
pub fn logical_fidelity(
    psi: &StateVector,
    code: &GkpCode,
    target: LogicalLabel,
    frame_offset: C64,
) -> Result<f64> {
    let corrected = apply_frame_correction(psi, frame_offset)?;
    let ideal = gkp_state(code, target)?;
    fidelity(QState::Pure(&corrected), QState::Pure(&ideal))
}

/// Density-operator variant of [`logical_fidelity`].
pub fn logical_fidelity_rho(
    rho: &Operator,
    code: &GkpCode,
    target: LogicalLabel,
    frame_offset: C64,
) -> Result<f64> {
    let ideal = gkp_state(code, target)?;
    if frame_offset == C64::new(0.0, 0.0) {
        return fidelity(QState::Mixed(rho), QState::Pure(&ideal));
    }
    let d = fock::displacement_matrix(rho.side(), frame_offset);
    // ⟨t|D(−δ) ρ D(δ)|t⟩ = ⟨D(δ)t| ρ |D(δ)t⟩
    let shifted = StateVector::new(vec![rho.side()], mat_vec(&d, ideal.amps()))?;
    fidelity(QState::Mixed(rho), QState::Pure(&shifted))
}

/// D(−δ)ψ for a single-mode state.
pub fn apply_frame_correction(psi: &StateVector, frame_offset: C64) -> Result<StateVector> {
    if frame_offset == C64::new(0.0, 0.0) {
        return Ok(psi.clone());
    }
    if psi.dims().len() != 1 {
        return Err(SimError::InvalidInput("frame correction expects a single mode".into()));
    }
    let d = fock::displacement_matrix(psi.len(), -frame_offset);
    StateVector::new(vec![psi.len()], mat_vec(&d, psi.amps()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{phase_rotation, wigner, PhaseGrid};
    use crate::linalg::apply_to_subsystem;

    fn ci(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn code(delta: f64, cutoff: usize) -> GkpCode {
        GkpCode::square(delta, FockSpace::with_default_guard(cutoff).unwrap()).unwrap()
    }

    fn block_diff(a: &Operator, b: &Operator, block: usize) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..block {
            for j in 0..block {
                worst = worst.max((a.matrix()[(i, j)] - b.matrix()[(i, j)]).norm());
            }
        }
        worst
    }

    #[test]
    fn lattice_identities() {
        let c = code(0.25, 60);
        assert!(((c.a_x.conj() * c.a_z).im - std::f64::consts::TAU).abs() < 1e-12);
        assert_eq!(c.a_y - c.a_x - c.a_z, ci(0., 0.));
        // |a_x/2| shifts q by √π
        assert!((c.a_x.re / 2.0 * std::f64::consts::SQRT_2 - ROOT_PI).abs() < 1e-12);
    }

    #[test]
    fn logical_halves_anticommute() {
        let c = code(0.25, 100);
        let x = logical_displacement(&c, LogicalOp::Pauli(PauliAxis::X)).unwrap();
        let z = logical_displacement(&c, LogicalOp::Pauli(PauliAxis::Z)).unwrap();
        let xz = x.mul(&z).unwrap();
        let zx_neg = z.mul(&x).unwrap().scale(ci(-1., 0.));
        assert!(block_diff(&xz, &zx_neg, 40) < 1e-9);
    }

    #[test]
    fn stabilizers_commute_with_logicals() {
        let c = code(0.25, 144);
        for si in PauliAxis::ALL {
            for pj in PauliAxis::ALL {
                let s = logical_displacement(&c, LogicalOp::Stabilizer(si)).unwrap();
                let p = logical_displacement(&c, LogicalOp::Pauli(pj)).unwrap();
                let comm = s.mul(&p).unwrap().sub(&p.mul(&s).unwrap()).unwrap();
                let zero = Operator::from_matrix(vec![144], ndarray::Array2::zeros((144, 144))).unwrap();
                assert!(block_diff(&comm, &zero, 28) < 1e-8, "axes {si:?} {pj:?}");
            }
        }
    }

    #[test]
    fn pauli_squared_is_stabilizer() {
        let c = code(0.25, 100);
        for axis in PauliAxis::ALL {
            let p = logical_displacement(&c, LogicalOp::Pauli(axis)).unwrap();
            let s = logical_displacement(&c, LogicalOp::Stabilizer(axis)).unwrap();
            let p2 = p.mul(&p).unwrap();
            // colinear displacements compose without phase
            assert!(block_diff(&p2, &s, 36) < 1e-9, "axis {axis:?}");
        }
    }

    #[test]
    fn logical_states_nearly_orthogonal() {
        let c = code(0.25, 150);
        let zero = gkp_state(&c, LogicalLabel::Zero).unwrap();
        let one = gkp_state(&c, LogicalLabel::One).unwrap();
        let ov = zero.inner(&one).unwrap().norm();
        assert!(ov <= 1e-4, "overlap {ov}");
    }

    #[test]
    fn logical_zero_is_parity_even() {
        let c = code(0.2, 150);
        let zero = gkp_state(&c, LogicalLabel::Zero).unwrap();
        let parity: f64 = zero
            .amps()
            .iter()
            .enumerate()
            .map(|(k, a)| if k % 2 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum();
        assert!((parity - 1.0).abs() < 1e-3, "parity {parity}");
    }

    #[test]
    fn stabilizer_expectation_thresholds_and_sweep() {
        // real, ≥ 0.9 at Δ = 0.25, increasing toward 1 as Δ shrinks
        let mut last = 0.0;
        for delta in [0.4, 0.3, 0.2] {
            let c = code(delta, 150);
            let zero = gkp_state(&c, LogicalLabel::Zero).unwrap();
            let s = displacement_expectation(&zero, c.a_x).unwrap();
            assert!(s.im.abs() < 1e-9, "imag part {}", s.im);
            assert!(s.re > last, "not increasing at delta {delta}");
            last = s.re;
        }
        let c = code(0.25, 150);
        let zero = gkp_state(&c, LogicalLabel::Zero).unwrap();
        let s = displacement_expectation(&zero, c.a_x).unwrap();
        assert!(s.re >= 0.9, "stabilizer expectation {}", s.re);
    }

    #[test]
    fn logical_z_expectations() {
        let c = code(0.25, 150);
        let zero = gkp_state(&c, LogicalLabel::Zero).unwrap();
        let one = gkp_state(&c, LogicalLabel::One).unwrap();
        let z0 = displacement_expectation(&zero, c.a_z / 2.0).unwrap();
        let z1 = displacement_expectation(&one, c.a_z / 2.0).unwrap();
        assert!(z0.re >= 0.9, "⟨Z⟩ on |0⟩: {}", z0.re);
        assert!(z1.re <= -0.9, "⟨Z⟩ on |1⟩: {}", z1.re);
    }

    #[test]
    fn decode_logical_zero_and_flipped() {
        let c = code(0.25, 150);
        let zero = gkp_state(&c, LogicalLabel::Zero).unwrap();
        let d = decode_logical(QState::Pure(&zero), &c, DecodeBasis::Z).unwrap();
        assert_eq!(d.bit, 0);
        assert!(d.confidence >= 0.95, "confidence {}", d.confidence);
        assert!(!d.ambiguous);
        // X_L |0⟩ decodes to 1 (renormalized: the displaced envelope
        // sheds ~1e-5 norm past the cutoff)
        let x = logical_displacement(&c, LogicalOp::Pauli(PauliAxis::X)).unwrap();
        let flipped = x.apply(&zero).unwrap().normalized();
        let d = decode_logical(QState::Pure(&flipped), &c, DecodeBasis::Z).unwrap();
        assert_eq!(d.bit, 1);
        assert!(d.confidence >= 0.9, "confidence {}", d.confidence);
    }

    #[test]
    fn decode_both_labels_high_confidence() {
        let c = code(0.25, 150);
        for (label, want) in [(LogicalLabel::Zero, 0u8), (LogicalLabel::One, 1u8)] {
            let s = gkp_state(&c, label).unwrap();
            let d = decode_logical(QState::Pure(&s), &c, DecodeBasis::Z).unwrap();
            assert_eq!(d.bit, want);
            assert!(d.confidence >= 0.9);
        }
        // X basis distinguishes |±⟩
        for (label, want) in [(LogicalLabel::Plus, 0u8), (LogicalLabel::Minus, 1u8)] {
            let s = gkp_state(&c, label).unwrap();
            let d = decode_logical(QState::Pure(&s), &c, DecodeBasis::X).unwrap();
            assert_eq!(d.bit, want);
            assert!(d.confidence >= 0.9);
        }
    }

    #[test]
    fn decode_vacuum_recorded_value() {
        // vacuum sits centered in the 0 bin; the in-bin mass is the
        // erf(√π/2) Gaussian integral ≈ 0.78937 plus far-bin crumbs
        let c = code(0.25, 60);
        let vac = StateVector::basis(vec![60], &[0]).unwrap();
        let d = decode_logical(QState::Pure(&vac), &c, DecodeBasis::Z).unwrap();
        assert_eq!(d.bit, 0);
        assert!((d.confidence - 0.7897).abs() < 1e-3, "confidence {}", d.confidence);
    }

    #[test]
    fn decode_mixed_agrees_with_pure() {
        let c = code(0.3, 80);
        let zero = gkp_state(&c, LogicalLabel::Zero).unwrap();
        let dp = decode_logical(QState::Pure(&zero), &c, DecodeBasis::Z).unwrap();
        let rho = zero.density();
        let dm = decode_logical(QState::Mixed(&rho), &c, DecodeBasis::Z).unwrap();
        assert_eq!(dp.bit, dm.bit);
        assert!((dp.confidence - dm.confidence).abs() < 1e-9);
    }

    #[test]
    fn logical_fidelity_trivial_and_frame_cancellation() {
        let c = code(0.25, 150);
        let zero = gkp_state(&c, LogicalLabel::Zero).unwrap();
        let f = logical_fidelity(&zero, &c, LogicalLabel::Zero, ci(0., 0.)).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        // Frame cancellation is exact up to the envelope mass shed past
        // the cutoff on the round trip. At Δ = 0.45 the edge amplitude is
        // ~2e-7 and the cancellation reaches 1e-10; at the default
        // Δ = 0.25 the same round trip costs ~3e-5.
        let sharp = code(0.45, 150);
        let zs = gkp_state(&sharp, LogicalLabel::Zero).unwrap();
        let quarter = sharp.a_x / 4.0;
        let shifted = fock::displacement(sharp.space(), quarter).unwrap().apply(&zs).unwrap();
        let f = logical_fidelity(&shifted, &sharp, LogicalLabel::Zero, quarter).unwrap();
        assert!((f - 1.0).abs() < 1e-10, "frame cancellation fidelity {f}");
        let quarter = c.a_x / 4.0;
        let shifted = fock::displacement(c.space(), quarter).unwrap().apply(&zero).unwrap();
        let f = logical_fidelity(&shifted, &c, LogicalLabel::Zero, quarter).unwrap();
        assert!((f - 1.0).abs() < 1e-4, "frame cancellation fidelity {f}");
    }

    #[test]
    fn logical_fidelity_envelope_mismatch_under_flip() {
        // X_L|0⟩ vs |1⟩: the displaced envelope costs a few percent
        let c = code(0.25, 150);
        let zero = gkp_state(&c, LogicalLabel::Zero).unwrap();
        let x = logical_displacement(&c, LogicalOp::Pauli(PauliAxis::X)).unwrap();
        let flipped = x.apply(&zero).unwrap();
        let f = logical_fidelity(&flipped, &c, LogicalLabel::One, ci(0., 0.)).unwrap();
        assert!(f >= 0.85, "fidelity {f}");
        assert!(f < 0.999, "fidelity {f} suspiciously perfect");
    }

    #[test]
    fn hadamard_symmetry_via_phase_space_rotation() {
        // exp(iπn̂/2)|0_L⟩ has X-basis decode 0 (square-lattice self-duality)
        let c = code(0.25, 150);
        let zero = gkp_state(&c, LogicalLabel::Zero).unwrap();
        let rot = phase_rotation(c.space(), std::f64::consts::FRAC_PI_2);
        let rotated = rot.apply(&zero).unwrap();
        let d = decode_logical(QState::Pure(&rotated), &c, DecodeBasis::X).unwrap();
        assert_eq!(d.bit, 0);
        assert!(d.confidence >= 0.9, "confidence {}", d.confidence);
    }

    #[test]
    fn quadrature_peaks_on_even_lattice() {
        // |⟨x|0_L⟩|² peaks at even multiples of √π
        let c = code(0.25, 150);
        let zero = gkp_state(&c, LogicalLabel::Zero).unwrap();
        let grid: Vec<f64> = (0..=1200).map(|i| -6.0 + 0.01 * i as f64).collect();
        let vals = fock::quadrature_wavefunction(&zero, 0.0, &grid).unwrap();
        let dens: Vec<f64> = vals.iter().map(|v| v.norm_sqr()).collect();
        let mut peaks = Vec::new();
        for i in 1..dens.len() - 1 {
            if dens[i] > dens[i - 1] && dens[i] > dens[i + 1] && dens[i] > 0.05 {
                peaks.push(grid[i]);
            }
        }
        assert!(!peaks.is_empty());
        for p in peaks {
            let k = (p / (2.0 * ROOT_PI)).round();
            assert!((p - 2.0 * ROOT_PI * k).abs() < 0.05, "peak at {p} off-lattice");
        }
    }

    #[test]
    fn wigner_lattice_of_logical_zero() {
        // peaks along the Re-axis at multiples of |a_x|/2 = √(π/2), and a
        // negative interference feature at the odd-odd half-lattice site
        let c = code(0.25, 100);
        let zero = gkp_state(&c, LogicalLabel::Zero).unwrap();
        let rho = zero.density();
        let half = (std::f64::consts::PI / 2.0).sqrt();
        let xs: Vec<f64> = (0..=240).map(|i| -3.0 + 0.025 * i as f64).collect();
        let grid = PhaseGrid::new(xs.clone(), vec![0.0]);
        let w = wigner(&rho, &grid).unwrap();
        let mut peaks = Vec::new();
        for i in 1..xs.len() - 1 {
            if w[(0, i)] > w[(0, i - 1)] && w[(0, i)] > w[(0, i + 1)] && w[(0, i)] > 0.1 {
                peaks.push(xs[i]);
            }
        }
        assert!(peaks.len() >= 3, "expected several lattice peaks, got {peaks:?}");
        for p in &peaks {
            let k = (p / half).round();
            assert!((p - half * k).abs() < 0.05, "peak at {p} off the a_x/2 lattice");
        }
        // sign-alternating interference fringe: the odd-q lattice line
        // carries cos(2√π p) fringes, negative at p = √π/2, i.e. at
        // grid point (s, s/2)
        let probe = PhaseGrid::new(vec![half], vec![half / 2.0]);
        let w_neg = wigner(&rho, &probe).unwrap()[(0, 0)];
        assert!(w_neg < -0.3, "expected a negative fringe at (a_x/2, a_x/4), got {w_neg}");
    }

    #[test]
    fn rejects_bad_delta() {
        let sp = FockSpace::with_default_guard(60).unwrap();
        assert!(GkpCode::square(0.0, sp).is_err());
        assert!(GkpCode::square(1.0, sp).is_err());
    }

    #[test]
    fn frame_correction_on_multimode_rejected() {
        let c = code(0.25, 20);
        let two = StateVector::basis(vec![20, 20], &[0, 0]).unwrap();
        assert!(apply_frame_correction(&two, ci(0.1, 0.0)).is_err());
        let _ = c;
    }

    #[test]
    fn rotation_moves_z_decode_to_x() {
        // plumbing check used by the protocols module: rotate a register
        // state and decode the reduced mode
        let c = code(0.3, 80);
        let zero = gkp_state(&c, LogicalLabel::Zero).unwrap();
        let joint = StateVector::basis(vec![2], &[0]).unwrap().tensor(&zero).unwrap();
        let rot = phase_rotation(c.space(), std::f64::consts::FRAC_PI_2);
        let rotated = apply_to_subsystem(&joint, rot.matrix(), 1).unwrap();
        let rho = rotated.partial_trace(&[1]).unwrap();
        let d = decode_logical(QState::Mixed(&rho), &c, DecodeBasis::X).unwrap();
        assert_eq!(d.bit, 0);
    }
}
