//! Protocol compilation and execution.
//!
//! Protocols are compiled into [`Schedule`]s of physical steps — electron
//! injections, interactions, electron gates, projective measurements with
//! feedforward, laser displacements — and executed either by exhaustive
//! branch enumeration or by seeded Monte Carlo sampling. Deterministic
//! displacement offsets (the D(−a_i/4) corrections) are not applied
//! physically; they accumulate in a per-mode frame ledger and are undone
//! in post-processing.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::electron::{
    self, measure_electron, ElectronOutcome, ElectronQubit, MeasureMode, RotationAxis,
};
use crate::error::{Result, SimError};
use crate::fock::{self, FockSpace};
use crate::gkp::{GkpCode, PauliAxis};
use crate::interaction::{apply_interaction, CouplingSpec};
use crate::linalg::{apply_to_subsystem, StateVector, MAX_STATE_LEN};

pub(crate) mod cpair {
    use num_complex::Complex64 as C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &C64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

pub(crate) mod cpair_vec {
    use num_complex::Complex64 as C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

/// Initial electron qubit state for a `NewElectron` step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElectronInit {
    Zero,
    One,
    Plus,
    Minus,
}

impl ElectronInit {
    fn state(self) -> StateVector {
        match self {
            ElectronInit::Zero => ElectronQubit::zero(),
            ElectronInit::One => ElectronQubit::one(),
            ElectronInit::Plus => ElectronQubit::plus(),
            ElectronInit::Minus => ElectronQubit::minus(),
        }
        .state()
    }
}

/// Single-electron gate inside a schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElectronGate {
    RotX { angle: f64 },
    RotZ { angle: f64 },
    Hadamard,
}

impl ElectronGate {
    fn operator(self) -> crate::linalg::Operator {
        match self {
            ElectronGate::RotX { angle } => electron::electron_rotation(RotationAxis::X, angle),
            ElectronGate::RotZ { angle } => electron::electron_rotation(RotationAxis::Z, angle),
            ElectronGate::Hadamard => electron::hadamard(),
        }
    }
}

/// Continuations spliced in after a measurement, keyed by outcome.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Feedforward {
    pub on_plus: Vec<Step>,
    pub on_minus: Vec<Step>,
}

impl Feedforward {
    pub fn none() -> Self {
        Self::default()
    }

    fn branch(&self, outcome: ElectronOutcome) -> &[Step] {
        match outcome {
            ElectronOutcome::Plus => &self.on_plus,
            ElectronOutcome::Minus => &self.on_minus,
        }
    }
}

/// One physical step of a protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Step {
    /// Inject a fresh electron (only one may be in flight at a time).
    NewElectron { init: ElectronInit },
    /// Electron-photon interaction with coupling g on a photonic mode.
    /// The executed coupling is g rotated by the accumulated Hadamard
    /// frame, g·e^{iθ_frame}.
    Interact {
        #[serde(with = "cpair")]
        g: C64,
        mode: usize,
    },
    /// Single-qubit gate on the in-flight electron.
    ElectronGate { gate: ElectronGate },
    /// Projective electron measurement in the |φ±⟩ basis, removing the
    /// electron and splicing in the feedforward continuation.
    MeasureElectron { basis_angle: f64, feedforward: Feedforward },
    /// Deterministic laser displacement of a mode (physical).
    LaserDisplace {
        mode: usize,
        #[serde(with = "cpair")]
        alpha: C64,
    },
    /// Record a pending displacement offset in the frame ledger instead
    /// of applying it physically. Like `Interact`, the recorded value is
    /// rotated by the accumulated Hadamard frame.
    FrameShift {
        mode: usize,
        #[serde(with = "cpair")]
        delta: C64,
    },
    /// Logical Hadamard by reference-frame change: multiplies every
    /// subsequent coupling and frame shift by e^{iπ/2}.
    HadamardFrame,
}

/// Serializable code parameters carried by a schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub delta: f64,
    pub cutoff: usize,
    pub guard: usize,
}

impl CodeSpec {
    pub fn of(code: &GkpCode) -> Self {
        Self { delta: code.delta(), cutoff: code.cutoff(), guard: code.space().guard() }
    }

    pub fn code(&self) -> Result<GkpCode> {
        GkpCode::square(self.delta, FockSpace::new(self.cutoff, self.guard)?)
    }
}

/// A compiled protocol: ordered steps over a register of photonic modes,
/// plus the code parameters and the net deterministic frame offset of
/// the main path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub steps: Vec<Step>,
    pub mode_cutoffs: Vec<usize>,
    pub code: CodeSpec,
    #[serde(with = "cpair_vec")]
    pub frame_ledger: Vec<C64>,
}

impl Schedule {
    pub fn new(steps: Vec<Step>, mode_cutoffs: Vec<usize>, code: CodeSpec) -> Result<Self> {
        let mut sched = Self { steps, mode_cutoffs, code, frame_ledger: Vec::new() };
        sched.validate()?;
        sched.frame_ledger = sched.static_frame();
        Ok(sched)
    }

    pub fn n_modes(&self) -> usize {
        self.mode_cutoffs.len()
    }

    /// Net frame offsets accumulated by the main path (feedforward
    /// branches of compiled protocols apply Pauli passes, never frame
    /// shifts).
    fn static_frame(&self) -> Vec<C64> {
        let mut frame = vec![C64::new(0.0, 0.0); self.n_modes()];
        let mut quarter = 0u32;
        for step in &self.steps {
            match step {
                Step::FrameShift { mode, delta } => {
                    frame[*mode] += delta * hadamard_phase(quarter);
                }
                Step::HadamardFrame => quarter += 1,
                _ => {}
            }
        }
        frame
    }

    /// Structural validation: one electron in flight at a time, every
    /// gate/interaction/measurement has an electron to act on, all mode
    /// indices exist, feedforward branches leave no electron dangling,
    /// and the register fits the state budget.
    pub fn validate(&self) -> Result<()> {
        if self.mode_cutoffs.is_empty() {
            return Err(SimError::Schedule("schedule needs at least one photonic mode".into()));
        }
        for (m, &c) in self.mode_cutoffs.iter().enumerate() {
            if c < 4 {
                return Err(SimError::Schedule(format!("mode {m} cutoff {c} below minimum 4")));
            }
        }
        let len: usize = 2 * self.mode_cutoffs.iter().product::<usize>();
        if len > MAX_STATE_LEN {
            return Err(SimError::DimensionBudget { required: len, budget: MAX_STATE_LEN });
        }
        let end_state = self.walk(&self.steps, false)?;
        if end_state {
            return Err(SimError::Schedule(
                "schedule ends with an electron still in flight".into(),
            ));
        }
        Ok(())
    }

    fn walk(&self, steps: &[Step], mut in_flight: bool) -> Result<bool> {
        for step in steps {
            match step {
                Step::NewElectron { .. } => {
                    if in_flight {
                        return Err(SimError::Schedule(
                            "NewElectron while an electron is still in flight; measure it first"
                                .into(),
                        ));
                    }
                    in_flight = true;
                }
                Step::Interact { mode, .. } => {
                    self.check_mode(*mode)?;
                    if !in_flight {
                        return Err(SimError::Schedule("Interact without an electron".into()));
                    }
                }
                Step::ElectronGate { .. } => {
                    if !in_flight {
                        return Err(SimError::Schedule("ElectronGate without an electron".into()));
                    }
                }
                Step::MeasureElectron { feedforward, .. } => {
                    if !in_flight {
                        return Err(SimError::Schedule(
                            "MeasureElectron without an electron".into(),
                        ));
                    }
                    in_flight = false;
                    for branch in [&feedforward.on_plus, &feedforward.on_minus] {
                        if self.walk(branch, false)? {
                            return Err(SimError::Schedule(
                                "feedforward branch leaves an electron in flight".into(),
                            ));
                        }
                    }
                }
                Step::LaserDisplace { mode, .. } | Step::FrameShift { mode, .. } => {
                    self.check_mode(*mode)?;
                }
                Step::HadamardFrame => {}
            }
        }
        Ok(in_flight)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(SimError::Schedule(format!(
                "mode {mode} outside register of {} modes",
                self.n_modes()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| SimError::Schedule(format!("serialize: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sched: Schedule = serde_json::from_str(text)
            .map_err(|e| SimError::Schedule(format!("parse: {e}")))?;
        sched.validate()?;
        Ok(sched)
    }
}

fn hadamard_phase(quarters: u32) -> C64 {
    match quarters % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Classical frame record carried through execution: per-mode pending
/// displacement offsets and the number of accumulated Hadamard-frame
/// quarter turns.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameLedger {
    pub offsets: Vec<C64>,
    pub hadamard_quarters: u32,
}

/// One execution leaf: measurement outcomes in order, the branch
/// probability, the final photonic state, and the frame ledger snapshot.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub outcomes: Vec<ElectronOutcome>,
    pub probability: f64,
    pub final_state: StateVector,
    pub frame: FrameLedger,
}

impl TrajectoryRecord {
    /// Final state with the pending frame offsets undone, D(−δ_m) per
    /// mode. Hadamard-frame quarter turns are left to the caller, which
    /// conjugates its verification observables instead.
    pub fn frame_corrected_state(&self) -> Result<StateVector> {
        let mut state = self.final_state.clone();
        for (m, &delta) in self.frame.offsets.iter().enumerate() {
            if delta == C64::new(0.0, 0.0) {
                continue;
            }
            let d = fock::displacement_matrix(state.dims()[m], -delta);
            state = apply_to_subsystem(&state, &d, m)?;
        }
        Ok(state.normalized())
    }

    /// Reduced density operator of one mode of the frame-corrected state.
    pub fn reduced_mode(&self, mode: usize) -> Result<crate::linalg::Operator> {
        self.frame_corrected_state()?.partial_trace(&[mode])
    }
}

/// Execution strategy for [`execute`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ExecMode {
    /// Depth-first enumeration of all measurement branches (plus before
    /// minus, so records are outcome-lexicographic).
    Enumerate,
    /// A single trajectory drawn with the given RNG seed.
    Sample { seed: u64 },
}

struct ExecState {
    state: StateVector,
    prob: f64,
    outcomes: Vec<ElectronOutcome>,
    frame: FrameLedger,
}

/// Runs a schedule on an initial photonic register state (modes only; the
/// electron enters via `NewElectron` steps).
pub fn execute(
    schedule: &Schedule,
    initial: &StateVector,
    mode: ExecMode,
) -> Result<Vec<TrajectoryRecord>> {
    schedule.validate()?;
    if initial.dims() != schedule.mode_cutoffs {
        return Err(SimError::DimMismatch {
            expected: schedule.mode_cutoffs.clone(),
            got: initial.dims().to_vec(),
        });
    }
    initial.assert_normalized()?;
    let mut records = Vec::new();
    let start = ExecState {
        state: initial.clone(),
        prob: 1.0,
        outcomes: Vec::new(),
        frame: FrameLedger {
            offsets: vec![C64::new(0.0, 0.0); schedule.n_modes()],
            hadamard_quarters: 0,
        },
    };
    let mut rng = match mode {
        ExecMode::Enumerate => None,
        ExecMode::Sample { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    run_steps(schedule, &schedule.steps, start, &mut rng, &mut records)?;
    Ok(records)
}

const PRUNE_EPS: f64 = 1e-12;

fn run_steps(
    schedule: &Schedule,
    pending: &[Step],
    mut exec: ExecState,
    rng: &mut Option<ChaCha8Rng>,
    records: &mut Vec<TrajectoryRecord>,
) -> Result<()> {
    let n_modes = schedule.n_modes();
    for (idx, step) in pending.iter().enumerate() {
        let electron_in_flight = exec.state.dims().len() == n_modes + 1;
        match step {
            Step::NewElectron { init } => {
                exec.state = init.state().tensor(&exec.state)?;
            }
            Step::Interact { g, mode } => {
                let g_eff = g * hadamard_phase(exec.frame.hadamard_quarters);
                let spec = CouplingSpec::qubit(g_eff, *mode)?;
                exec.state = apply_interaction(&exec.state, &spec)?.normalized();
            }
            Step::ElectronGate { gate } => {
                exec.state = apply_to_subsystem(&exec.state, gate.operator().matrix(), 0)?;
            }
            Step::LaserDisplace { mode, alpha } => {
                let sub = if electron_in_flight { 1 + mode } else { *mode };
                let d = fock::displacement_matrix(exec.state.dims()[sub], *alpha);
                exec.state = apply_to_subsystem(&exec.state, &d, sub)?.normalized();
            }
            Step::FrameShift { mode, delta } => {
                exec.frame.offsets[*mode] += delta * hadamard_phase(exec.frame.hadamard_quarters);
            }
            Step::HadamardFrame => {
                exec.frame.hadamard_quarters += 1;
            }
            Step::MeasureElectron { basis_angle, feedforward } => {
                let rest = &pending[idx + 1..];
                let branches = match rng {
                    None => measure_electron(&exec.state, *basis_angle, MeasureMode::Enumerate)?,
                    Some(r) => measure_electron(&exec.state, *basis_angle, MeasureMode::Sample(r))?,
                };
                for branch in branches {
                    let p = exec.prob * branch.probability;
                    if p < PRUNE_EPS {
                        continue;
                    }
                    let mut outcomes = exec.outcomes.clone();
                    outcomes.push(branch.outcome);
                    let mut continuation: Vec<Step> =
                        feedforward.branch(branch.outcome).to_vec();
                    continuation.extend_from_slice(rest);
                    let next = ExecState {
                        state: branch.state,
                        prob: p,
                        outcomes,
                        frame: exec.frame.clone(),
                    };
                    run_steps(schedule, &continuation, next, rng, records)?;
                }
                return Ok(());
            }
        }
    }
    records.push(TrajectoryRecord {
        outcomes: exec.outcomes,
        probability: exec.prob,
        final_state: exec.state,
        frame: exec.frame,
    });
    Ok(())
}

// ---------------------------------------------------------------------
// Compilers (Table-1 protocols and the multimode entanglers)

fn rotation_axis_to_pauli(axis: PauliAxis) -> PauliAxis {
    axis
}

fn pauli_pass(code: &GkpCode, axis: PauliAxis, mode: usize) -> Vec<Step> {
    vec![
        Step::NewElectron { init: ElectronInit::Plus },
        Step::Interact { g: code.lattice(axis) / 2.0, mode },
        Step::MeasureElectron { basis_angle: 0.0, feedforward: Feedforward::none() },
    ]
}

/// Logical Pauli σ_i: one |+⟩ₑ electron at g = a_i/2 (a CD eigenbranch,
/// so the electron factors out deterministically).
pub fn compile_pauli(code: &GkpCode, axis: PauliAxis) -> Result<Schedule> {
    Schedule::new(pauli_pass(code, axis, 0), vec![code.cutoff()], CodeSpec::of(code))
}

/// Readout of σ_i: |0⟩ₑ electron at g = a_i/4, electron energy
/// measurement (Hadamard then |φ=0,±⟩), offset a_i/4 to the frame
/// ledger. Outcome + ↔ eigenvalue +1 ↔ bit 0.
pub fn compile_readout(code: &GkpCode, axis: PauliAxis) -> Result<Schedule> {
    let steps = vec![
        Step::NewElectron { init: ElectronInit::Zero },
        Step::Interact { g: code.lattice(axis) / 4.0, mode: 0 },
        Step::ElectronGate { gate: ElectronGate::Hadamard },
        Step::MeasureElectron { basis_angle: 0.0, feedforward: Feedforward::none() },
        Step::FrameShift { mode: 0, delta: code.lattice(axis) / 4.0 },
    ];
    Schedule::new(steps, vec![code.cutoff()], CodeSpec::of(code))
}

/// Teleported rotation R_i(φ): |0⟩ₑ electron at g = a_i/4, measurement in
/// the |φ±⟩ basis, Pauli σ_i feedforward on the − outcome (an inline
/// physical electron pass), offset a_i/4 to the frame ledger.
///
/// Both corrected branches realize cos(φ/2)·I − i sin(φ/2)·D(±a_i/2),
/// i.e. R_i(φ) with the Pauli realized as a half-lattice displacement;
/// the branch correction table {+: none, −: σ_i} is fixed by that
/// algebra and pinned by the tests.
pub fn compile_rotation(code: &GkpCode, axis: PauliAxis, angle: f64) -> Result<Schedule> {
    let axis = rotation_axis_to_pauli(axis);
    let steps = vec![
        Step::NewElectron { init: ElectronInit::Zero },
        Step::Interact { g: code.lattice(axis) / 4.0, mode: 0 },
        Step::MeasureElectron {
            basis_angle: angle,
            feedforward: Feedforward { on_plus: vec![], on_minus: pauli_pass(code, axis, 0) },
        },
        Step::FrameShift { mode: 0, delta: code.lattice(axis) / 4.0 },
    ];
    Schedule::new(steps, vec![code.cutoff()], CodeSpec::of(code))
}

/// S gate: R_z(π/2).
pub fn compile_s_gate(code: &GkpCode) -> Result<Schedule> {
    compile_rotation(code, PauliAxis::Z, std::f64::consts::FRAC_PI_2)
}

/// T gate: R_z(π/4).
pub fn compile_t_gate(code: &GkpCode) -> Result<Schedule> {
    compile_rotation(code, PauliAxis::Z, std::f64::consts::FRAC_PI_4)
}

/// CNOT between two GKP modes (control mode 0, target mode 1): one
/// electron interacts with the control at a_z/4, is Hadamard-rotated,
/// interacts with the target at a_x/4, and is measured in the energy
/// basis; outcome |1⟩ₑ feeds forward a σ_z pass on the control.
pub fn compile_cnot2(code: &GkpCode) -> Result<Schedule> {
    let steps = vec![
        Step::NewElectron { init: ElectronInit::Zero },
        Step::Interact { g: code.lattice(PauliAxis::Z) / 4.0, mode: 0 },
        Step::ElectronGate { gate: ElectronGate::Hadamard },
        Step::Interact { g: code.lattice(PauliAxis::X) / 4.0, mode: 1 },
        Step::ElectronGate { gate: ElectronGate::Hadamard },
        Step::MeasureElectron {
            basis_angle: 0.0,
            feedforward: Feedforward {
                on_plus: vec![],
                on_minus: pauli_pass(code, PauliAxis::Z, 0),
            },
        },
        Step::FrameShift { mode: 0, delta: code.lattice(PauliAxis::Z) / 4.0 },
        Step::FrameShift { mode: 1, delta: code.lattice(PauliAxis::X) / 4.0 },
    ];
    Schedule::new(steps, vec![code.cutoff(); 2], CodeSpec::of(code))
}

/// GHZ preparation over `modes` GKP modes with a single flying electron:
/// a chain of electron-control CNOTs (Hadamard-conjugated interactions at
/// g = a_x/4; adjacent Hadamards between consecutive CNOTs cancel, as do
/// the final electron Hadamard and the energy-measurement one, leaving an
/// X-basis measurement). The per-mode D(−a_x/4) corrections go to the
/// frame ledger; outcome − feeds forward a σ_z pass on mode 0.
pub fn compile_ghz(code: &GkpCode, modes: usize) -> Result<Schedule> {
    if modes < 2 {
        return Err(SimError::InvalidInput(format!("GHZ needs >= 2 modes, got {modes}")));
    }
    let mut steps = vec![
        Step::NewElectron { init: ElectronInit::Plus },
        Step::ElectronGate { gate: ElectronGate::Hadamard },
    ];
    for m in 0..modes {
        steps.push(Step::Interact { g: code.lattice(PauliAxis::X) / 4.0, mode: m });
        steps.push(Step::FrameShift { mode: m, delta: code.lattice(PauliAxis::X) / 4.0 });
    }
    steps.push(Step::ElectronGate { gate: ElectronGate::Hadamard });
    steps.push(Step::MeasureElectron {
        basis_angle: 0.0,
        feedforward: Feedforward { on_plus: vec![], on_minus: pauli_pass(code, PauliAxis::Z, 0) },
    });
    Schedule::new(steps, vec![code.cutoff(); modes], CodeSpec::of(code))
}

/// 1D cluster state over `modes` GKP modes: the GHZ chain with an extra
/// electron Hadamard after every interaction (the pulsed-emitter
/// pattern), X-basis measurement at the end, σ_z feedforward on the last
/// mode.
pub fn compile_cluster1d(code: &GkpCode, modes: usize) -> Result<Schedule> {
    if modes < 2 {
        return Err(SimError::InvalidInput(format!("cluster needs >= 2 modes, got {modes}")));
    }
    let mut steps = vec![
        Step::NewElectron { init: ElectronInit::Plus },
        Step::ElectronGate { gate: ElectronGate::Hadamard },
    ];
    for m in 0..modes {
        steps.push(Step::Interact { g: code.lattice(PauliAxis::X) / 4.0, mode: m });
        steps.push(Step::FrameShift { mode: m, delta: code.lattice(PauliAxis::X) / 4.0 });
        steps.push(Step::ElectronGate { gate: ElectronGate::Hadamard });
    }
    steps.push(Step::MeasureElectron {
        basis_angle: 0.0,
        feedforward: Feedforward {
            on_plus: vec![],
            on_minus: pauli_pass(code, PauliAxis::Z, modes - 1),
        },
    });
    Schedule::new(steps, vec![code.cutoff(); modes], CodeSpec::of(code))
}

/// ⟨ψ| Π_m D_m(α_m) |ψ⟩ over a multimode register (None skips a mode) —
/// the verification-side observable for logical Pauli products.
pub fn mode_displacement_expectation(
    state: &StateVector,
    alphas: &[Option<C64>],
) -> Result<C64> {
    if alphas.len() != state.dims().len() {
        return Err(SimError::DimMismatch {
            expected: vec![state.dims().len()],
            got: vec![alphas.len()],
        });
    }
    let mut applied = state.clone();
    for (m, alpha) in alphas.iter().enumerate() {
        if let Some(a) = alpha {
            let d = fock::displacement_matrix(state.dims()[m], *a);
            applied = apply_to_subsystem(&applied, &d, m)?;
        }
    }
    state.inner(&applied)
}

/// Initial register |μ₁…μ_M⟩ of logical states.
pub fn logical_register(code: &GkpCode, labels: &[crate::gkp::LogicalLabel]) -> Result<StateVector> {
    if labels.is_empty() {
        return Err(SimError::InvalidInput("register needs at least one mode".into()));
    }
    let mut state: Option<StateVector> = None;
    for &label in labels {
        let mode = crate::gkp::gkp_state(code, label)?;
        state = Some(match state {
            None => mode,
            Some(s) => s.tensor(&mode)?,
        });
    }
    Ok(state.expect("nonempty"))
}
