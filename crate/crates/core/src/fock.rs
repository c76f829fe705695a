//! Single-mode truncated Fock space.
//!
//! Operators live on the leading `cutoff` number states. Gate operators
//! are only trusted on the leading `cutoff - guard` block; the guard band
//! absorbs truncation damage near the edge.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::linalg::{Operator, StateVector};

/// Hard ceiling on the Fock cutoff; keeps the Laguerre recurrences far
/// from f64 overflow.
pub const MAX_CUTOFF: usize = 360;

/// A truncated single-mode Fock space of dimension `cutoff` with a
/// `guard`-level band near the edge where operators are not trusted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    cutoff: usize,
    guard: usize,
}

impl FockSpace {
    pub fn new(cutoff: usize, guard: usize) -> Result<Self> {
        if cutoff < 4 || cutoff > MAX_CUTOFF {
            return Err(SimError::InvalidInput(format!(
                "Fock cutoff must be in 4..={MAX_CUTOFF}, got {cutoff}"
            )));
        }
        if guard >= cutoff / 2 {
            return Err(SimError::InvalidInput(format!(
                "guard band {guard} must be < cutoff/2 = {}",
                cutoff / 2
            )));
        }
        Ok(Self { cutoff, guard })
    }

    /// Guard band of cutoff/5, the default for production use.
    pub fn with_default_guard(cutoff: usize) -> Result<Self> {
        Self::new(cutoff, cutoff / 5)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn guard(&self) -> usize {
        self.guard
    }

    /// Side of the leading block on which operators are trusted.
    pub fn trusted(&self) -> usize {
        self.cutoff - self.guard
    }
}

/// Annihilation operator: ⟨n−1|a|n⟩ = √n.
pub fn annihilation(space: FockSpace) -> Operator {
    let n = space.cutoff();
    let mut mat = Array2::<C64>::zeros((n, n));
    for k in 1..n {
        mat[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    Operator::from_matrix(vec![n], mat).expect("in budget")
}

/// Creation operator a†.
pub fn creation(space: FockSpace) -> Operator {
    annihilation(space).dagger()
}

/// Number operator a†a.
pub fn number(space: FockSpace) -> Operator {
    let n = space.cutoff();
    let mut mat = Array2::<C64>::zeros((n, n));
    for k in 0..n {
        mat[(k, k)] = C64::new(k as f64, 0.0);
    }
    Operator::from_matrix(vec![n], mat).expect("in budget")
}

/// Photon-number parity (−1)^n.
pub fn parity(space: FockSpace) -> Operator {
    let n = space.cutoff();
    let mut mat = Array2::<C64>::zeros((n, n));
    for k in 0..n {
        mat[(k, k)] = C64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    Operator::from_matrix(vec![n], mat).expect("in budget")
}

/// Phase-space rotation exp(iθ a†a) = diag(e^{iθn}).
pub fn phase_rotation(space: FockSpace, theta: f64) -> Operator {
    let n = space.cutoff();
    let mut mat = Array2::<C64>::zeros((n, n));
    for k in 0..n {
        mat[(k, k)] = C64::from_polar(1.0, theta * k as f64);
    }
    Operator::from_matrix(vec![n], mat).expect("in budget")
}

/// Generator αa† − α*a of the displacement; `matexp` of this is the
/// oracle path against which the analytic construction is checked.
pub fn displacement_generator(space: FockSpace, alpha: C64) -> Operator {
    let adag = creation(space);
    let a = annihilation(space);
    adag.scale(alpha).sub(&a.scale(alpha.conj())).expect("same dims")
}

fn check_amplitude(space: FockSpace, alpha: C64) -> Result<()> {
    let x = alpha.norm_sqr();
    let nc = space.cutoff() as f64;
    if x > nc / 2.0 {
        return Err(SimError::Truncation {
            alpha_sq: x,
            required_cutoff: (4.0 * x).ceil() as usize,
            cutoff: space.cutoff(),
        });
    }
    if x > nc / 4.0 {
        log::warn!(
            "displacement amplitude |alpha|^2 = {x:.2} above cutoff/4 = {:.1}; truncation tails grow",
            nc / 4.0
        );
    }
    Ok(())
}

fn log_factorials(n: usize) -> Vec<f64> {
    let mut lf = vec![0.0f64; n];
    for k in 1..n {
        lf[k] = lf[k - 1] + (k as f64).ln();
    }
    lf
}

/// Raw analytic displacement matrix, no cache, no amplitude checks.
///
/// Matrix elements from the associated-Laguerre closed form,
///   ⟨i+k|D(α)|i⟩ = √(i!/(i+k)!) α^k e^{−|α|²/2} L_i^{(k)}(|α|²),
/// filled one diagonal at a time so each Laguerre recurrence is a single
/// sweep. Phases are iterated products so that D(−α) is bitwise the
/// adjoint of D(α).
pub(crate) fn displacement_matrix(cutoff: usize, alpha: C64) -> Array2<C64> {
    let n = cutoff;
    let mut mat = Array2::<C64>::zeros((n, n));
    if alpha == C64::new(0.0, 0.0) {
        for i in 0..n {
            mat[(i, i)] = C64::new(1.0, 0.0);
        }
        return mat;
    }
    let x = alpha.norm_sqr();
    let r = alpha.norm();
    let ln_r = r.ln();
    let phase = alpha / r;
    let lf = log_factorials(n);

    let mut phase_lower = C64::new(1.0, 0.0); // (α/|α|)^k
    let mut phase_upper = C64::new(1.0, 0.0); // (−conj(α)/|α|)^k
    for k in 0..n {
        // Laguerre sweep: L_i^{(k)}(x) for i = 0..n-k
        let mut l_prev = 0.0f64;
        let mut l_cur = 1.0f64;
        for i in 0..(n - k) {
            if i > 0 {
                let fi = i as f64;
                let fk = k as f64;
                let l_next =
                    ((2.0 * (fi - 1.0) + fk + 1.0 - x) * l_cur - (fi - 1.0 + fk) * l_prev) / fi;
                l_prev = l_cur;
                l_cur = l_next;
            }
            let scale = (0.5 * (lf[i] - lf[i + k]) - 0.5 * x + k as f64 * ln_r).exp();
            let common = scale * l_cur;
            mat[(i + k, i)] = phase_lower * common;
            mat[(i, i + k)] = phase_upper * common;
        }
        phase_lower *= phase;
        phase_upper *= -phase.conj();
    }
    mat
}

type DispKey = (usize, u64, u64);
static DISP_CACHE: OnceLock<RwLock<HashMap<DispKey, Arc<Array2<C64>>>>> = OnceLock::new();
const DISP_CACHE_MAX: usize = 1024;

/// Coherent displacement operator D(α) = exp(αa† − α*a), built from the
/// analytic Laguerre form (the production path; see
/// [`displacement_generator`] for the independent matexp oracle).
///
/// Results are cached per (cutoff, α). The cache is read-mostly: readers
/// only ever observe fully constructed entries.
pub fn displacement(space: FockSpace, alpha: C64) -> Result<Operator> {
    check_amplitude(space, alpha)?;
    let key: DispKey = (space.cutoff(), alpha.re.to_bits(), alpha.im.to_bits());
    let cache = DISP_CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(hit) = cache.read().expect("cache lock").get(&key) {
        return Operator::from_matrix(vec![space.cutoff()], hit.as_ref().clone());
    }
    let mat = displacement_matrix(space.cutoff(), alpha);
    {
        let mut w = cache.write().expect("cache lock");
        if w.len() < DISP_CACHE_MAX {
            w.entry(key).or_insert_with(|| Arc::new(mat.clone()));
        }
    }
    Operator::from_matrix(vec![space.cutoff()], mat)
}

/// Coherent state |α⟩ with amplitudes e^{−|α|²/2} αⁿ/√n!.
pub fn coherent_state(space: FockSpace, alpha: C64) -> Result<StateVector> {
    check_amplitude(space, alpha)?;
    let n = space.cutoff();
    let mut amps = Array1::<C64>::zeros(n);
    let mut cur = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps[0] = cur;
    for k in 1..n {
        cur *= alpha / C64::new((k as f64).sqrt(), 0.0);
        amps[k] = cur;
    }
    StateVector::new(vec![n], amps)
}

/// Hermite functions φ_n(x) = ⟨x|n⟩ for n = 0..nmax, by upward recurrence.
pub(crate) fn hermite_functions(x: f64, nmax: usize) -> Vec<f64> {
    let mut phi = vec![0.0f64; nmax];
    if nmax == 0 {
        return phi;
    }
    phi[0] = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
    if nmax > 1 {
        phi[1] = std::f64::consts::SQRT_2 * x * phi[0];
    }
    for n in 2..nmax {
        let fn_ = n as f64;
        phi[n] = x * (2.0 / fn_).sqrt() * phi[n - 1] - ((fn_ - 1.0) / fn_).sqrt() * phi[n - 2];
    }
    phi
}

/// Rotated-quadrature wavefunction ⟨x_θ|ψ⟩ = Σ_n ψ_n e^{−inθ} φ_n(x) on
/// the given grid, where x_θ = (a e^{−iθ} + a† e^{iθ})/√2.
pub fn quadrature_wavefunction(psi: &StateVector, theta: f64, grid: &[f64]) -> Result<Vec<C64>> {
    if psi.dims().len() != 1 {
        return Err(SimError::InvalidInput(
            "quadrature_wavefunction expects a single-mode state".into(),
        ));
    }
    psi.assert_normalized()?;
    let n = psi.len();
    let extent = grid.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let valid = (2.0 * n as f64 + 1.0).sqrt() + 4.0;
    if extent > valid {
        log::warn!(
            "quadrature grid extent {extent:.1} beyond Hermite validity ~{valid:.1} at cutoff {n}"
        );
    }
    let rotated: Vec<C64> = (0..n)
        .map(|k| psi.amps()[k] * C64::from_polar(1.0, -theta * k as f64))
        .collect();
    Ok(grid
        .iter()
        .map(|&x| {
            let phi = hermite_functions(x, n);
            rotated.iter().zip(phi.iter()).map(|(c, &p)| c * p).sum()
        })
        .collect())
}

/// Quadrature probability density ⟨x_θ|ρ|x_θ⟩ for a density operator.
pub fn quadrature_density(rho: &Operator, theta: f64, grid: &[f64]) -> Result<Vec<f64>> {
    let n = rho.side();
    Ok(grid
        .iter()
        .map(|&x| {
            let phi = hermite_functions(x, n);
            let v: Vec<C64> = (0..n).map(|k| C64::from_polar(phi[k], -theta * k as f64)).collect();
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                if v[i] == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    acc += v[i].conj() * rho.matrix()[(i, j)] * v[j];
                }
            }
            acc.re
        })
        .collect())
}

/// Rectangular phase-space grid of displacement amplitudes α = x + iy.
///
/// In the q = (a + a†)/√2 convention a point (x, y) sits at quadratures
/// (q, p) = (√2 x, √2 y); the measure d²α makes W integrate to 1.
#[derive(Clone, Debug)]
pub struct PhaseGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl PhaseGrid {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Self { xs, ys }
    }

    /// Square grid over [−extent, extent]² with `n` points per axis.
    pub fn centered(extent: f64, n: usize) -> Self {
        let step = if n > 1 { 2.0 * extent / (n - 1) as f64 } else { 0.0 };
        let axis: Vec<f64> = (0..n).map(|i| -extent + step * i as f64).collect();
        Self { xs: axis.clone(), ys: axis }
    }

    pub fn dx(&self) -> f64 {
        if self.xs.len() > 1 {
            self.xs[1] - self.xs[0]
        } else {
            0.0
        }
    }

    pub fn dy(&self) -> f64 {
        if self.ys.len() > 1 {
            self.ys[1] - self.ys[0]
        } else {
            0.0
        }
    }
}

/// Wigner function by displaced parity, W(α) = (2/π) Tr[D(α) Π D†(α) ρ].
///
/// Using ΠD†(α)Π = D(α), the displaced parity collapses to D(2α)Π, so each
/// grid point costs one analytic displacement build plus a contraction.
/// Returned matrix is indexed [y, x].
pub fn wigner(rho: &Operator, grid: &PhaseGrid) -> Result<Array2<f64>> {
    let n = rho.side();
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(SimError::InvalidInput(format!("wigner: trace {tr} not 1 within 1e-8")));
    }
    if !rho.is_hermitian(1e-8) {
        return Err(SimError::InvalidInput(
            "wigner: density operator not Hermitian within 1e-8".into(),
        ));
    }
    // B = Π ρ, so W = (2/π) Σ_{m,k} D(2α)[m,k] B[k,m]
    let mut b = rho.matrix().clone();
    for i in 0..n {
        if i % 2 == 1 {
            for j in 0..n {
                b[(i, j)] = -b[(i, j)];
            }
        }
    }
    let mut out = Array2::<f64>::zeros((grid.ys.len(), grid.xs.len()));
    let rows: Vec<(usize, Vec<f64>)> = grid
        .ys
        .par_iter()
        .enumerate()
        .map(|(iy, &y)| {
            let row: Vec<f64> = grid
                .xs
                .iter()
                .map(|&x| {
                    let d = displacement_matrix(n, C64::new(2.0 * x, 2.0 * y));
                    let mut acc = C64::new(0.0, 0.0);
                    for m in 0..n {
                        for k in 0..n {
                            acc += d[(m, k)] * b[(k, m)];
                        }
                    }
                    acc.re * std::f64::consts::FRAC_2_PI
                })
                .collect();
            (iy, row)
        })
        .collect();
    for (iy, row) in rows {
        for (ix, v) in row.into_iter().enumerate() {
            out[(iy, ix)] = v;
        }
    }
    Ok(out)
}

/// Serializes a Wigner grid as CSV: header row of q-axis values, first
/// column of p-axis values, W in the body.
pub fn wigner_csv(grid: &PhaseGrid, w: &Array2<f64>) -> String {
    let mut s = String::new();
    s.push_str("p\\q");
    for x in &grid.xs {
        s.push_str(&format!(",{x}"));
    }
    s.push('\n');
    for (iy, y) in grid.ys.iter().enumerate() {
        s.push_str(&format!("{y}"));
        for ix in 0..grid.xs.len() {
            s.push_str(&format!(",{}", w[(iy, ix)]));
        }
        s.push('\n');
    }
    s
}
