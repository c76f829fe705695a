//! The free-electron ancilla.
//!
//! Two representations: a finite coherent energy comb on a ring of energy
//! indices (used by the convergence harness), and the idealized two-level
//! qubit spanned by the even/odd 2ω combs (the production representation
//! for all protocol simulation). Energy indices n run over
//! −(M−1)/2 … +(M−1)/2 and are stored at ring slot j = n + (M−1)/2.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SimError};
use crate::linalg::{Operator, StateVector};

/// Parameters of a coherent electron energy comb: Gaussian envelope of
/// width `sigma` (dimensionless; 0 is the single-tooth sentinel), phase
/// `phi` per tooth, teeth every `spacing` energy quanta.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CombSpec {
    ring_size: usize,
    sigma: f64,
    phi: f64,
    spacing: u8,
}

impl CombSpec {
    pub fn new(ring_size: usize, sigma: f64, phi: f64, spacing: u8) -> Result<Self> {
        if ring_size % 2 == 0 {
            return Err(SimError::InvalidInput(format!(
                "ring size must be odd so a center tooth exists, got {ring_size}"
            )));
        }
        if !(spacing == 1 || spacing == 2) {
            return Err(SimError::InvalidInput(format!(
                "comb spacing must be 1 or 2, got {spacing}"
            )));
        }
        if !(sigma >= 0.0) {
            return Err(SimError::InvalidInput(format!("sigma must be >= 0, got {sigma}")));
        }
        if (ring_size as f64) < 8.0 * sigma + 1.0 {
            return Err(SimError::InvalidInput(format!(
                "ring size {ring_size} too small for sigma {sigma}: need >= 8*sigma + 1 to keep tail truncation below e^-8"
            )));
        }
        Ok(Self { ring_size, sigma, phi, spacing })
    }

    /// Smallest odd ring satisfying the tail bound for this sigma.
    pub fn auto_ring(sigma: f64, phi: f64, spacing: u8) -> Result<Self> {
        let mut m = (8.0 * sigma + 1.0).ceil() as usize;
        if m % 2 == 0 {
            m += 1;
        }
        Self::new(m.max(9), sigma, phi, spacing)
    }

    pub fn ring_size(&self) -> usize {
        self.ring_size
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn spacing(&self) -> u8 {
        self.spacing
    }

    fn center(&self) -> i64 {
        (self.ring_size as i64 - 1) / 2
    }
}

/// Comb with teeth shifted by `offset` quanta; the envelope stays
/// centered on n = 0, which is what makes |1⟩ₑ = odd comb distinct from
/// b|0⟩ₑ by O(1/σ²).
pub(crate) fn comb_state_offset(spec: &CombSpec, offset: i64) -> StateVector {
    let m = spec.ring_size();
    let c = spec.center();
    let s = spec.spacing() as i64;
    let mut amps = Array1::<C64>::zeros(m);
    if spec.sigma() == 0.0 {
        // degenerate comb: single tooth nearest the center
        let j = (offset + c) as usize;
        amps[j] = C64::new(1.0, 0.0);
        return StateVector::new(vec![m], amps).expect("in budget");
    }
    for j in 0..m {
        let n = j as i64 - c;
        if (n - offset).rem_euclid(s) != 0 {
            continue;
        }
        let nf = n as f64;
        let env = (-nf * nf / (2.0 * spec.sigma() * spec.sigma())).exp();
        amps[j] = C64::from_polar(env, spec.phi() * nf);
    }
    StateVector::new(vec![m], amps).expect("in budget").normalized()
}

/// The coherent energy comb, amplitudes ∝ e^{−n²/2σ²} e^{iφn} on teeth
/// n ≡ 0 (mod spacing), normalized.
pub fn comb_state(spec: &CombSpec) -> StateVector {
    comb_state_offset(spec, 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingBoundary {
    /// Cyclic shift; exactly unitary with b b† = b† b = I.
    Periodic,
    /// Nilpotent edge rows, retained for leakage diagnostics.
    Truncated,
}

/// Energy-lowering ladder b: |n⟩ ↦ |n−1⟩ on the ring index.
pub fn ladder(ring_size: usize, boundary: RingBoundary) -> Operator {
    let m = ring_size;
    let mut mat = Array2::<C64>::zeros((m, m));
    for j in 1..m {
        mat[(j - 1, j)] = C64::new(1.0, 0.0);
    }
    if boundary == RingBoundary::Periodic {
        mat[(m - 1, 0)] = C64::new(1.0, 0.0);
    }
    Operator::from_matrix(vec![m], mat).expect("in budget")
}

/// The electron qubit basis on a 2ω comb: |0⟩ₑ on even teeth, |1⟩ₑ on
/// odd teeth (both envelope-centered, so exactly orthogonal by disjoint
/// support).
pub fn qubit_states(spec: &CombSpec) -> Result<(StateVector, StateVector)> {
    if spec.spacing() != 2 {
        return Err(SimError::InvalidInput(format!(
            "qubit basis needs comb spacing 2, got {}",
            spec.spacing()
        )));
    }
    Ok((comb_state_offset(spec, 0), comb_state_offset(spec, 1)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RotationAxis {
    X,
    Z,
}

/// Qubit-level electron rotation: PINEM drives R_x(θ) = exp(−iθσ_x/2),
/// free-space drift drives R_z(θ) = exp(−iθσ_z/2).
pub fn electron_rotation(axis: RotationAxis, angle: f64) -> Operator {
    let th = angle / 2.0;
    let mat = match axis {
        RotationAxis::X => ndarray::array![
            [C64::new(th.cos(), 0.0), C64::new(0.0, -th.sin())],
            [C64::new(0.0, -th.sin()), C64::new(th.cos(), 0.0)],
        ],
        RotationAxis::Z => ndarray::array![
            [C64::from_polar(1.0, -th), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::from_polar(1.0, th)],
        ],
    };
    Operator::from_matrix(vec![2], mat).expect("2x2")
}

/// Electron Hadamard (exact matrix; equal to R_z(π/2)R_x(π/2)R_z(π/2) up
/// to global phase).
pub fn hadamard() -> Operator {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Operator::from_matrix(
        vec![2],
        ndarray::array![
            [C64::new(h, 0.0), C64::new(h, 0.0)],
            [C64::new(h, 0.0), C64::new(-h, 0.0)],
        ],
    )
    .expect("2x2")
}

/// A general electron qubit α|0⟩ₑ + β|1⟩ₑ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElectronQubit {
    pub alpha: C64,
    pub beta: C64,
}

impl ElectronQubit {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(SimError::InvalidInput(format!(
                "electron qubit amplitudes not normalized: |α|²+|β|² = {norm}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn zero() -> Self {
        Self { alpha: C64::new(1.0, 0.0), beta: C64::new(0.0, 0.0) }
    }

    pub fn one() -> Self {
        Self { alpha: C64::new(0.0, 0.0), beta: C64::new(1.0, 0.0) }
    }

    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { alpha: C64::new(h, 0.0), beta: C64::new(h, 0.0) }
    }

    pub fn minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { alpha: C64::new(h, 0.0), beta: C64::new(-h, 0.0) }
    }

    pub fn state(&self) -> StateVector {
        StateVector::new(vec![2], Array1::from_vec(vec![self.alpha, self.beta])).expect("dim 2")
    }
}

// ---------------------------------------------------------------------
// Comb-level gates (diagnostics for the σ → ∞ reduction)

fn ring_fourier_apply(ring_size: usize, eig: impl Fn(usize) -> C64) -> Operator {
    let m = ring_size;
    let mf = m as f64;
    let tau = std::f64::consts::TAU;
    let mut mat = Array2::<C64>::zeros((m, m));
    for k in 0..m {
        let u = eig(k);
        for j in 0..m {
            let fj = C64::from_polar(1.0, tau * ((k * j) % m) as f64 / mf);
            for j2 in 0..m {
                let fj2 = C64::from_polar(1.0, -(tau * ((k * j2) % m) as f64 / mf));
                mat[(j, j2)] += fj * u * fj2 / mf;
            }
        }
    }
    Operator::from_matrix(vec![m], mat).expect("in budget")
}

/// PINEM interaction with Rabi angle θ and laser phase φ_L, exactly
/// diagonal in the ring Fourier basis: eigenphase −(θ/2)cos(2πk/M − φ_L).
/// On the qubit subspace this approaches R_x(θ) (at φ_L = 0) as σ grows.
pub fn comb_pinem(ring_size: usize, theta: f64, laser_phase: f64) -> Operator {
    let m = ring_size as f64;
    ring_fourier_apply(ring_size, |k| {
        let ang = std::f64::consts::TAU * k as f64 / m - laser_phase;
        C64::from_polar(1.0, -(theta / 2.0) * ang.cos())
    })
}

/// Free-space drift at a quarter-Talbot multiple: the quadratic spectral
/// phase e^{iκn²} with κ = q·π/2 acts as an exact parity phase
/// diag(1, e^{iqπ/2}), i.e. an exact Z rotation by qπ/2 on the qubit.
/// Non-quarter κ does not reduce to a qubit rotation at any σ (the
/// within-parity phase spread grows with the envelope), so arbitrary Z
/// angles are composed from PINEM conjugated by comb Hadamards.
pub fn comb_drift_quarter(ring_size: usize, quarter_turns: i64) -> Operator {
    let m = ring_size;
    let c = (m as i64 - 1) / 2;
    let mut mat = Array2::<C64>::zeros((m, m));
    let odd_phase = C64::from_polar(1.0, quarter_turns as f64 * std::f64::consts::FRAC_PI_2);
    for j in 0..m {
        let n = j as i64 - c;
        mat[(j, j)] = if n.rem_euclid(2) == 1 { odd_phase } else { C64::new(1.0, 0.0) };
    }
    Operator::from_matrix(vec![m], mat).expect("in budget")
}

/// Comb-level Hadamard: drift(π/2) · PINEM(π/2) · drift(π/2), the same
/// Euler sandwich as the qubit-level identity, up to global phase.
pub fn comb_hadamard(ring_size: usize) -> Operator {
    let d = comb_drift_quarter(ring_size, 1);
    let p = comb_pinem(ring_size, std::f64::consts::FRAC_PI_2, 0.0);
    d.mul(&p).unwrap().mul(&d).unwrap()
}

/// Comb-level rotation about X (PINEM) or Z (Hadamard-conjugated PINEM).
pub fn comb_rotation(ring_size: usize, axis: RotationAxis, angle: f64) -> Operator {
    match axis {
        RotationAxis::X => comb_pinem(ring_size, angle, 0.0),
        RotationAxis::Z => {
            let h = comb_hadamard(ring_size);
            h.mul(&comb_pinem(ring_size, angle, 0.0)).unwrap().mul(&h).unwrap()
        }
    }
}

// ---------------------------------------------------------------------
// Measurement

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ElectronOutcome {
    Plus,
    Minus,
}

impl ElectronOutcome {
    pub fn sign(self) -> f64 {
        match self {
            ElectronOutcome::Plus => 1.0,
            ElectronOutcome::Minus => -1.0,
        }
    }
}

/// One measurement branch: the outcome, its Born probability, and the
/// renormalized remaining state with the electron factored out.
#[derive(Clone, Debug)]
pub struct MeasurementBranch {
    pub outcome: ElectronOutcome,
    pub probability: f64,
    pub state: StateVector,
}

/// How to resolve a projective measurement.
pub enum MeasureMode<'r> {
    /// Return every branch with probability above 1e−14.
    Enumerate,
    /// Draw one branch from the Born distribution.
    Sample(&'r mut ChaCha8Rng),
    /// Project onto the requested branch (errors if its probability is
    /// numerically zero).
    Forced(ElectronOutcome),
}

const BRANCH_EPS: f64 = 1e-14;

/// Measures the electron (subsystem 0, qubit representation) in the
/// equatorial basis |φ±⟩ = (e^{iφ/2}|0⟩ ± e^{−iφ/2}|1⟩)/√2 and removes it
/// from the register.
pub fn measure_electron(
    joint: &StateVector,
    basis_angle: f64,
    mode: MeasureMode<'_>,
) -> Result<Vec<MeasurementBranch>> {
    let dims = joint.dims();
    if dims.len() < 2 || dims[0] != 2 {
        return Err(SimError::InvalidInput(format!(
            "measure_electron expects a qubit electron as subsystem 0 plus photonic modes, got dims {dims:?}"
        )));
    }
    let rest = joint.len() / 2;
    let rest_dims = dims[1..].to_vec();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let ph = C64::from_polar(half, -basis_angle / 2.0);
    let ph_conj = C64::from_polar(half, basis_angle / 2.0);
    let amps = joint.amps();

    let branch = |sign: f64| -> (f64, Array1<C64>) {
        let mut c = Array1::<C64>::zeros(rest);
        for i in 0..rest {
            c[i] = ph * amps[i] + ph_conj * amps[rest + i] * sign;
        }
        let p: f64 = c.iter().map(|v| v.norm_sqr()).sum();
        (p, c)
    };

    let make = |outcome: ElectronOutcome, p: f64, c: Array1<C64>| -> Result<MeasurementBranch> {
        let state = StateVector::new(rest_dims.clone(), c)?.normalized();
        Ok(MeasurementBranch { outcome, probability: p, state })
    };

    match mode {
        MeasureMode::Enumerate => {
            let mut out = Vec::with_capacity(2);
            for (outcome, sign) in [(ElectronOutcome::Plus, 1.0), (ElectronOutcome::Minus, -1.0)] {
                let (p, c) = branch(sign);
                if p >= BRANCH_EPS {
                    out.push(make(outcome, p, c)?);
                }
            }
            Ok(out)
        }
        MeasureMode::Sample(rng) => {
            let (p_plus, c_plus) = branch(1.0);
            let u: f64 = rng.gen();
            if u < p_plus {
                Ok(vec![make(ElectronOutcome::Plus, p_plus, c_plus)?])
            } else {
                let (p_minus, c_minus) = branch(-1.0);
                Ok(vec![make(ElectronOutcome::Minus, p_minus, c_minus)?])
            }
        }
        MeasureMode::Forced(outcome) => {
            let (p, c) = branch(outcome.sign());
            if p < BRANCH_EPS {
                return Err(SimError::DegenerateBranch { probability: p });
            }
            Ok(vec![make(outcome, p, c)?])
        }
    }
}
