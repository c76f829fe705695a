//! Electron-photon coupling.
//!
//! The scattering unitary S(g) = exp(g b a† − g* b† a) on comb ⊗ Fock,
//! its qubit-level conditional-displacement reduction
//! CD(g) = |+⟩⟨+|⊗D(g) + |−⟩⟨−|⊗D(−g), efficient in-register
//! application, and the comb → qubit convergence harness.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::electron::{self, CombSpec, RingBoundary};
use crate::error::{Result, SimError};
use crate::fock::{self, FockSpace};
use crate::linalg::{
    apply_controlled_op, apply_to_subsystem, fidelity, kron, matexp, Operator, QState, StateVector,
};

/// Default ceiling on |g|; couplings beyond this are outside the
/// truncation budget of any cutoff this crate runs at.
pub const MAX_COUPLING: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Representation {
    /// Idealized two-level electron (production path).
    Qubit,
    /// Finite energy comb on a periodic ring.
    Comb { ring_size: usize },
}

/// One electron-photon interaction event: coupling g on `target_mode`
/// (0-based photonic mode; the electron is register subsystem 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingSpec {
    g: C64,
    target_mode: usize,
    representation: Representation,
}

impl CouplingSpec {
    pub fn new(g: C64, target_mode: usize, representation: Representation) -> Result<Self> {
        if g.norm() > MAX_COUPLING {
            return Err(SimError::InvalidInput(format!(
                "|g| = {:.2} exceeds the configured maximum {MAX_COUPLING}",
                g.norm()
            )));
        }
        Ok(Self { g, target_mode, representation })
    }

    pub fn qubit(g: C64, target_mode: usize) -> Result<Self> {
        Self::new(g, target_mode, Representation::Qubit)
    }

    pub fn g(&self) -> C64 {
        self.g
    }

    pub fn target_mode(&self) -> usize {
        self.target_mode
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }
}

fn check_mode_amplitude(g: C64, mode_dim: usize) -> Result<()> {
    let x = g.norm_sqr();
    if x > mode_dim as f64 / 2.0 {
        return Err(SimError::Truncation {
            alpha_sq: x,
            required_cutoff: (4.0 * x).ceil() as usize,
            cutoff: mode_dim,
        });
    }
    Ok(())
}

/// Generator g·(b⊗a†) − g*·(b†⊗a) of the scattering unitary; `matexp` of
/// this is the oracle path for [`scattering_exact`].
pub fn scattering_generator(
    g: C64,
    ring_size: usize,
    boundary: RingBoundary,
    space: FockSpace,
) -> Result<Operator> {
    let b = electron::ladder(ring_size, boundary);
    let adag = fock::creation(space);
    let a = fock::annihilation(space);
    kron(&b, &adag)?.scale(g).sub(&kron(&b.dagger(), &a)?.scale(g.conj()))
}

/// Dense scattering unitary S(g) on (ring ⊗ Fock).
///
/// Periodic rings take the fast path: b is diagonal in the ring Fourier
/// basis with eigenvalues λ_k = e^{i2πk/M}, so S = ⊕_k D(g λ_k) is a
/// block circulant in the ring index — M displacement builds instead of
/// one (M·N)³ exponential. A truncated ring falls back to matexp.
pub fn scattering_exact(
    g: C64,
    ring_size: usize,
    boundary: RingBoundary,
    space: FockSpace,
) -> Result<Operator> {
    check_mode_amplitude(g, space.cutoff())?;
    if boundary == RingBoundary::Truncated {
        log::warn!("truncated ring has no Fourier fast path; falling back to matexp");
        return matexp(&scattering_generator(g, ring_size, boundary, space)?);
    }
    let m = ring_size;
    let n = space.cutoff();
    // circulant blocks E_d = (1/M) Σ_k e^{i2πkd/M} D(g λ_k)
    let tau = std::f64::consts::TAU;
    let mut blocks: Vec<Array2<C64>> = vec![Array2::zeros((n, n)); m];
    for k in 0..m {
        let lambda = C64::from_polar(1.0, tau * k as f64 / m as f64);
        let d_k = fock::displacement_matrix(n, g * lambda);
        for (d, block) in blocks.iter_mut().enumerate() {
            let w = C64::from_polar(1.0 / m as f64, tau * ((k * d) % m) as f64 / m as f64);
            block.zip_mut_with(&d_k, |acc, &v| *acc += w * v);
        }
    }
    let side = m * n;
    let mut mat = Array2::<C64>::zeros((side, side));
    for row_ring in 0..m {
        for col_ring in 0..m {
            let d = (row_ring + m - col_ring) % m;
            let block = &blocks[d];
            for a in 0..n {
                for bq in 0..n {
                    mat[(row_ring * n + a, col_ring * n + bq)] = block[(a, bq)];
                }
            }
        }
    }
    Operator::from_matrix(vec![m, n], mat)
}

/// Conditional displacement CD(g) = |+⟩⟨+|⊗D(g) + |−⟩⟨−|⊗D(−g) on
/// (electron qubit ⊗ Fock), built from the projector decomposition.
pub fn conditional_displacement(g: C64, space: FockSpace) -> Result<Operator> {
    let d_plus = fock::displacement(space, g)?;
    let d_minus = fock::displacement(space, -g)?;
    kron(&projector_pm(1.0), &d_plus)?.add(&kron(&projector_pm(-1.0), &d_minus)?)
}

fn projector_pm(sign: f64) -> Operator {
    let h = C64::new(0.5, 0.0);
    let s = C64::new(0.5 * sign, 0.0);
    Operator::from_matrix(vec![2], ndarray::array![[h, s], [s, h]]).expect("2x2")
}

/// The equivalent sum form ½[I⊗(D(g)+D(−g)) + σ_x⊗(D(g)−D(−g))]; built
/// separately so the two algebraic routes of the reduction can be
/// compared.
pub fn conditional_displacement_sum_form(g: C64, space: FockSpace) -> Result<Operator> {
    let d_plus = fock::displacement(space, g)?;
    let d_minus = fock::displacement(space, -g)?;
    let eye = Operator::identity(&[2])?;
    let sx = Operator::from_matrix(
        vec![2],
        ndarray::array![
            [C64::new(0., 0.), C64::new(1., 0.)],
            [C64::new(1., 0.), C64::new(0., 0.)]
        ],
    )?;
    let sum = d_plus.add(&d_minus)?;
    let diff = d_plus.sub(&d_minus)?;
    kron(&eye, &sum)?.add(&kron(&sx, &diff)?).map(|op| op.scale(C64::new(0.5, 0.0)))
}

/// Applies the scattering to a register state without materializing any
/// register-wide operator: Fourier transform the electron ring index,
/// displace the target mode by g·λ_k per Fourier component, transform
/// back.
fn apply_scattering_comb(state: &StateVector, g: C64, target_sub: usize) -> Result<StateVector> {
    let m = state.dims()[0];
    let n = state.dims()[target_sub];
    let tau = std::f64::consts::TAU;
    let mf = m as f64;
    let f_mat = Array2::from_shape_fn((m, m), |(row, k)| {
        C64::from_polar(1.0 / mf.sqrt(), tau * ((row * k) % m) as f64 / mf)
    });
    let f_dag = Array2::from_shape_fn((m, m), |(k, row)| {
        C64::from_polar(1.0 / mf.sqrt(), -(tau * ((row * k) % m) as f64 / mf))
    });
    let ops: Vec<Array2<C64>> = (0..m)
        .map(|k| {
            let lambda = C64::from_polar(1.0, tau * k as f64 / mf);
            fock::displacement_matrix(n, g * lambda)
        })
        .collect();
    let st = apply_to_subsystem(state, &f_dag, 0)?;
    let st = apply_controlled_op(&st, 0, target_sub, &ops)?;
    apply_to_subsystem(&st, &f_mat, 0)
}

/// Applies one interaction event to a multi-mode register (electron is
/// subsystem 0), branch-wise on the electron basis so that no operator on
/// the full register is ever formed.
pub fn apply_interaction(state: &StateVector, spec: &CouplingSpec) -> Result<StateVector> {
    let dims = state.dims();
    let target_sub = 1 + spec.target_mode();
    if target_sub >= dims.len() {
        return Err(SimError::InvalidInput(format!(
            "target mode {} outside register with {} photonic modes",
            spec.target_mode(),
            dims.len() - 1
        )));
    }
    let mode_dim = dims[target_sub];
    check_mode_amplitude(spec.g(), mode_dim)?;
    match spec.representation() {
        Representation::Qubit => {
            if dims[0] != 2 {
                return Err(SimError::InvalidInput(format!(
                    "qubit representation requires electron dim 2, register has {}",
                    dims[0]
                )));
            }
            // rotate electron to the X basis, displace ± per branch, rotate back
            let h = electron::hadamard();
            let st = apply_to_subsystem(state, h.matrix(), 0)?;
            let ops = [
                fock::displacement_matrix(mode_dim, spec.g()),
                fock::displacement_matrix(mode_dim, -spec.g()),
            ];
            let st = apply_controlled_op(&st, 0, target_sub, &ops)?;
            apply_to_subsystem(&st, h.matrix(), 0)
        }
        Representation::Comb { ring_size } => {
            if dims[0] != ring_size {
                return Err(SimError::InvalidInput(format!(
                    "comb representation expects electron dim {ring_size}, register has {}",
                    dims[0]
                )));
            }
            apply_scattering_comb(state, spec.g(), target_sub)
        }
    }
}

/// Fidelity of the exact comb-level scattering against the ideal
/// qubit-level CD prediction, per σ. The qubit comb states at each σ are
/// scattered exactly and compared against CD(g) acting on the idealized
/// qubit, embedded back into comb space. σ = ∞ runs the uniform-comb
/// (single Fourier mode) limit, which is an exact eigenstate.
pub fn comb_convergence(g: C64, sigmas: &[f64], space: FockSpace) -> Result<Vec<f64>> {
    let n = space.cutoff();
    let vac = StateVector::basis(vec![n], &[0])?;
    let mut out = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        if sigma.is_infinite() {
            // k = 0 Fourier mode: uniform single-spacing comb, exact b eigenstate
            let m = 9;
            let uniform = StateVector::new(
                vec![m],
                ndarray::Array1::from_elem(m, C64::new(1.0 / (m as f64).sqrt(), 0.0)),
            )?;
            let joint = uniform.tensor(&vac)?;
            let spec = CouplingSpec::new(g, 0, Representation::Comb { ring_size: m })?;
            let actual = apply_interaction(&joint, &spec)?;
            let ideal = uniform.tensor(&fock::displacement(space, g)?.apply(&vac)?)?;
            out.push(fidelity(QState::Pure(&actual), QState::Pure(&ideal))?);
            continue;
        }
        let comb = CombSpec::auto_ring(sigma, 0.0, 2)?;
        let m = comb.ring_size();
        let (zero, one) = electron::qubit_states(&comb)?;
        let joint = zero.tensor(&vac)?;
        let spec = CouplingSpec::new(g, 0, Representation::Comb { ring_size: m })?;
        let actual = apply_interaction(&joint, &spec)?;
        // ideal: CD(g) on the two-level electron, embedded back into the comb
        let q_in = electron::ElectronQubit::zero().state().tensor(&vac)?;
        let q_out = conditional_displacement(g, space)?.apply(&q_in)?;
        let mut amps = ndarray::Array1::<C64>::zeros(m * n);
        for (j, ket) in [(0usize, &zero), (1usize, &one)] {
            for ring in 0..m {
                let w = ket.amps()[ring];
                if w == C64::new(0.0, 0.0) {
                    continue;
                }
                for a in 0..n {
                    amps[ring * n + a] += w * q_out.amps()[j * n + a];
                }
            }
        }
        let ideal = StateVector::new(vec![m, n], amps)?;
        out.push(fidelity(QState::Pure(&actual), QState::Pure(&ideal))?);
    }
    Ok(out)
}
