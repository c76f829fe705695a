//! Dense complex linear algebra over composite Hilbert spaces.
//!
//! Everything here is plain dense storage (`ndarray` arrays of
//! `Complex64`). Subsystem ordering is fixed globally: the electron is
//! subsystem 0, photonic modes follow, and the leftmost subsystem varies
//! slowest in the flat index.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Result, SimError};

/// Largest matrix side dense operators may take (memory budget).
pub const MAX_OPERATOR_SIDE: usize = 1 << 14;
/// Largest amplitude-vector length dense states may take.
pub const MAX_STATE_LEN: usize = 1 << 21;

/// Threshold above which subsystem kernels switch to rayon.
const PAR_LEN: usize = 1 << 14;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Strides of a mixed-radix index with `dims` (leftmost slowest).
pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// ⟨a|b⟩ with the left argument conjugated.
pub fn vdot(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Dense matrix product, axpy over rows, parallel for larger matrices.
pub(crate) fn mat_mul(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (n, k) = a.dim();
    let (kb, m) = b.dim();
    assert_eq!(k, kb, "inner dimensions must agree");
    let mut out = Array2::<C64>::zeros((n, m));
    let bs = b.as_slice().expect("contiguous");
    let do_row = |i: usize, row_out: &mut [C64]| {
        for kk in 0..k {
            let aik = a[(i, kk)];
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            let brow = &bs[kk * m..(kk + 1) * m];
            for (o, bv) in row_out.iter_mut().zip(brow.iter()) {
                *o += aik * *bv;
            }
        }
    };
    if n * m * k >= 1 << 18 {
        out.as_slice_mut()
            .expect("contiguous")
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(i, row)| do_row(i, row));
    } else {
        for (i, row) in out.as_slice_mut().expect("contiguous").chunks_mut(m).enumerate() {
            do_row(i, row);
        }
    }
    out
}

pub(crate) fn mat_vec(a: &Array2<C64>, v: &Array1<C64>) -> Array1<C64> {
    let (n, m) = a.dim();
    assert_eq!(m, v.len());
    let mut out = Array1::<C64>::zeros(n);
    for i in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..m {
            acc += a[(i, j)] * v[j];
        }
        out[i] = acc;
    }
    out
}

pub(crate) fn dagger_matrix(a: &Array2<C64>) -> Array2<C64> {
    let (n, m) = a.dim();
    Array2::from_shape_fn((m, n), |(i, j)| a[(j, i)].conj())
}

fn one_norm(a: &Array2<C64>) -> f64 {
    let (n, m) = a.dim();
    (0..m)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// A dense operator on a composite space, tagged with its subsystem
/// signature. The matrix side is the product of `dims`.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dims: Vec<usize>,
    mat: Array2<C64>,
}

impl Operator {
    pub fn from_matrix(dims: Vec<usize>, mat: Array2<C64>) -> Result<Self> {
        let side: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) {
            return Err(SimError::InvalidInput("operator dims must be nonempty and nonzero".into()));
        }
        if side > MAX_OPERATOR_SIDE {
            return Err(SimError::DimensionBudget { required: side * side, budget: MAX_OPERATOR_SIDE * MAX_OPERATOR_SIDE });
        }
        if mat.dim() != (side, side) {
            return Err(SimError::DimMismatch { expected: vec![side, side], got: vec![mat.dim().0, mat.dim().1] });
        }
        Ok(Self { dims, mat })
    }

    pub fn identity(dims: &[usize]) -> Result<Self> {
        let side: usize = dims.iter().product();
        if side > MAX_OPERATOR_SIDE {
            return Err(SimError::DimensionBudget { required: side * side, budget: MAX_OPERATOR_SIDE * MAX_OPERATOR_SIDE });
        }
        Ok(Self { dims: dims.to_vec(), mat: Array2::eye(side) })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn side(&self) -> usize {
        self.mat.dim().0
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Operator {
        Operator { dims: self.dims.clone(), mat: dagger_matrix(&self.mat) }
    }

    pub fn trace(&self) -> C64 {
        (0..self.side()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn scale(&self, z: C64) -> Operator {
        Operator { dims: self.dims.clone(), mat: self.mat.mapv(|v| v * z) }
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dims(other)?;
        Ok(Operator { dims: self.dims.clone(), mat: &self.mat + &other.mat })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dims(other)?;
        Ok(Operator { dims: self.dims.clone(), mat: &self.mat - &other.mat })
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dims(other)?;
        Ok(Operator { dims: self.dims.clone(), mat: mat_mul(&self.mat, &other.mat) })
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if self.dims != state.dims {
            return Err(SimError::DimMismatch { expected: self.dims.clone(), got: state.dims.clone() });
        }
        Ok(StateVector { dims: state.dims.clone(), amps: mat_vec(&self.mat, &state.amps), norm_tol: state.norm_tol })
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.side();
        for i in 0..n {
            for j in i..n {
                if (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// ‖U†U − I‖_max ≤ tol over the whole matrix.
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_unitary_on_block(self.side(), tol)
    }

    /// Unitarity restricted to the leading `block` rows/columns: checks
    /// (U†U − I)[i,j] for i,j < block. Truncated-space gates are only
    /// trusted away from the cutoff edge, so callers pass the guarded side.
    pub fn is_unitary_on_block(&self, block: usize, tol: f64) -> bool {
        let n = self.side();
        let block = block.min(n);
        for i in 0..block {
            for j in 0..block {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.mat[(k, i)].conj() * self.mat[(k, j)];
                }
                let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                if (acc - target).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    fn check_same_dims(&self, other: &Operator) -> Result<()> {
        if self.dims != other.dims {
            return Err(SimError::DimMismatch { expected: self.dims.clone(), got: other.dims.clone() });
        }
        Ok(())
    }
}

impl std::ops::Mul<&Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.mul(rhs).expect("operator dims must agree")
    }
}

/// A pure state over a composite space with declared subsystem dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amps: Array1<C64>,
    norm_tol: f64,
}

impl StateVector {
    pub const DEFAULT_NORM_TOL: f64 = 1e-10;

    pub fn new(dims: Vec<usize>, amps: Array1<C64>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) {
            return Err(SimError::InvalidInput("state dims must be nonempty and nonzero".into()));
        }
        if len > MAX_STATE_LEN {
            return Err(SimError::DimensionBudget { required: len, budget: MAX_STATE_LEN });
        }
        if amps.len() != len {
            return Err(SimError::DimMismatch { expected: vec![len], got: vec![amps.len()] });
        }
        Ok(Self { dims, amps, norm_tol: Self::DEFAULT_NORM_TOL })
    }

    /// Basis state |i0⟩⊗|i1⟩⊗… .
    pub fn basis(dims: Vec<usize>, indices: &[usize]) -> Result<Self> {
        if indices.len() != dims.len() {
            return Err(SimError::DimMismatch { expected: vec![dims.len()], got: vec![indices.len()] });
        }
        let st = strides(&dims);
        let flat: usize = indices
            .iter()
            .zip(dims.iter())
            .zip(st.iter())
            .map(|((&i, &d), &s)| {
                assert!(i < d, "basis index out of range");
                i * s
            })
            .sum();
        let len: usize = dims.iter().product();
        let mut amps = Array1::zeros(len);
        amps[flat] = C64::new(1.0, 0.0);
        Self::new(dims, amps)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amps(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut Array1<C64> {
        &mut self.amps
    }

    pub fn norm_tol(&self) -> f64 {
        self.norm_tol
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amps.mapv_inplace(|a| a / n);
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// Checks the norm invariant ‖ψ‖ ∈ [1 − tol, 1 + tol].
    pub fn assert_normalized(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > self.norm_tol {
            return Err(SimError::Numerical(format!("state norm {n} outside 1 +/- {}", self.norm_tol)));
        }
        Ok(())
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dims != other.dims {
            return Err(SimError::DimMismatch { expected: self.dims.clone(), got: other.dims.clone() });
        }
        Ok(vdot(&self.amps, &other.amps))
    }

    /// |self⟩ ⊗ |other⟩ with concatenated subsystem lists.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut amps = Array1::zeros(self.len() * other.len());
        for (i, a) in self.amps.iter().enumerate() {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in other.amps.iter().enumerate() {
                amps[i * other.len() + j] = *a * *b;
            }
        }
        StateVector::new(dims, amps)
    }

    /// |ψ⟩⟨ψ| as a density operator.
    pub fn density(&self) -> Operator {
        let n = self.len();
        let mat = Array2::from_shape_fn((n, n), |(i, j)| self.amps[i] * self.amps[j].conj());
        Operator { dims: self.dims.clone(), mat }
    }

    /// Reduced density operator on `keep` (see [`partial_trace`]).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Operator> {
        partial_trace(QState::Pure(self), keep)
    }
}

/// Pure-or-mixed input for the operations whose contract admits both.
#[derive(Clone, Copy)]
pub enum QState<'a> {
    Pure(&'a StateVector),
    Mixed(&'a Operator),
}

/// Tensor product; dims concatenate, leftmost subsystem slowest.
pub fn kron(a: &Operator, b: &Operator) -> Result<Operator> {
    let side = a.side().checked_mul(b.side()).ok_or(SimError::DimensionBudget {
        required: usize::MAX,
        budget: MAX_OPERATOR_SIDE * MAX_OPERATOR_SIDE,
    })?;
    if side > MAX_OPERATOR_SIDE {
        return Err(SimError::DimensionBudget { required: side * side, budget: MAX_OPERATOR_SIDE * MAX_OPERATOR_SIDE });
    }
    let (na, nb) = (a.side(), b.side());
    let mut mat = Array2::<C64>::zeros((side, side));
    for i1 in 0..na {
        for j1 in 0..na {
            let av = a.mat[(i1, j1)];
            if av == C64::new(0.0, 0.0) {
                continue;
            }
            for i2 in 0..nb {
                for j2 in 0..nb {
                    mat[(i1 * nb + i2, j1 * nb + j2)] = av * b.mat[(i2, j2)];
                }
            }
        }
    }
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    Ok(Operator { dims, mat })
}

// Padé orders and 1-norm thresholds for the scaling-and-squaring
// exponential (double precision backward-error bounds).
const EXPM_THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

fn pade_coeffs(m: usize) -> Vec<f64> {
    match m {
        3 => vec![120., 60., 12., 1.],
        5 => vec![30240., 15120., 3360., 420., 30., 1.],
        7 => vec![17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.],
        9 => vec![
            17643225600., 8821612800., 2075673600., 302702400., 30270240., 2162160., 110880.,
            3960., 90., 1.,
        ],
        13 => vec![
            64764752532480000.,
            32382376266240000.,
            7771770303897600.,
            1187353796428800.,
            129060195264000.,
            10559470521600.,
            670442572800.,
            33522128640.,
            1323241920.,
            40840800.,
            960960.,
            16380.,
            182.,
            1.,
        ],
        _ => unreachable!(),
    }
}

/// Matrix exponential via Padé approximants with scaling and squaring.
pub fn matexp(m: &Operator) -> Result<Operator> {
    if m.mat.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(SimError::InvalidInput("matexp: non-finite entries".into()));
    }
    let n = m.side();
    let norm = one_norm(&m.mat);

    let mut order = 13;
    let mut s: u32 = 0;
    for &(ord, theta) in EXPM_THETA.iter() {
        if norm <= theta {
            order = ord;
            break;
        }
    }
    if norm > EXPM_THETA[4].1 {
        s = (norm / EXPM_THETA[4].1).log2().ceil() as u32;
    }
    let scale = C64::new(0.5f64.powi(s as i32), 0.0);
    let a = m.mat.mapv(|v| v * scale);

    let b = pade_coeffs(order);
    let eye = Array2::<C64>::eye(n);
    let a2 = mat_mul(&a, &a);
    let (u, v) = match order {
        3 => {
            let u_in = &a2.mapv(|x| x * b[3]) + &eye.mapv(|x| x * b[1]);
            (mat_mul(&a, &u_in), &a2.mapv(|x| x * b[2]) + &eye.mapv(|x| x * b[0]))
        }
        5 => {
            let a4 = mat_mul(&a2, &a2);
            let u_in = &(&a4.mapv(|x| x * b[5]) + &a2.mapv(|x| x * b[3])) + &eye.mapv(|x| x * b[1]);
            let v = &(&a4.mapv(|x| x * b[4]) + &a2.mapv(|x| x * b[2])) + &eye.mapv(|x| x * b[0]);
            (mat_mul(&a, &u_in), v)
        }
        7 => {
            let a4 = mat_mul(&a2, &a2);
            let a6 = mat_mul(&a4, &a2);
            let u_in = &(&(&a6.mapv(|x| x * b[7]) + &a4.mapv(|x| x * b[5])) + &a2.mapv(|x| x * b[3]))
                + &eye.mapv(|x| x * b[1]);
            let v = &(&(&a6.mapv(|x| x * b[6]) + &a4.mapv(|x| x * b[4])) + &a2.mapv(|x| x * b[2]))
                + &eye.mapv(|x| x * b[0]);
            (mat_mul(&a, &u_in), v)
        }
        9 => {
            let a4 = mat_mul(&a2, &a2);
            let a6 = mat_mul(&a4, &a2);
            let a8 = mat_mul(&a6, &a2);
            let u_in = &(&(&(&a8.mapv(|x| x * b[9]) + &a6.mapv(|x| x * b[7]))
                + &a4.mapv(|x| x * b[5]))
                + &a2.mapv(|x| x * b[3]))
                + &eye.mapv(|x| x * b[1]);
            let v = &(&(&(&a8.mapv(|x| x * b[8]) + &a6.mapv(|x| x * b[6]))
                + &a4.mapv(|x| x * b[4]))
                + &a2.mapv(|x| x * b[2]))
                + &eye.mapv(|x| x * b[0]);
            (mat_mul(&a, &u_in), v)
        }
        13 => {
            let a4 = mat_mul(&a2, &a2);
            let a6 = mat_mul(&a4, &a2);
            let w1 = &(&a6.mapv(|x| x * b[13]) + &a4.mapv(|x| x * b[11])) + &a2.mapv(|x| x * b[9]);
            let w2 = &(&(&a6.mapv(|x| x * b[7]) + &a4.mapv(|x| x * b[5])) + &a2.mapv(|x| x * b[3]))
                + &eye.mapv(|x| x * b[1]);
            let u_in = &mat_mul(&a6, &w1) + &w2;
            let z1 = &(&a6.mapv(|x| x * b[12]) + &a4.mapv(|x| x * b[10])) + &a2.mapv(|x| x * b[8]);
            let z2 = &(&(&a6.mapv(|x| x * b[6]) + &a4.mapv(|x| x * b[4])) + &a2.mapv(|x| x * b[2]))
                + &eye.mapv(|x| x * b[0]);
            let v = &mat_mul(&a6, &z1) + &z2;
            (mat_mul(&a, &u_in), v)
        }
        _ => unreachable!(),
    };

    // r = (V - U)^{-1} (V + U)
    let mut lhs = &v - &u;
    let mut rhs = &v + &u;
    lu_solve_inplace(&mut lhs, &mut rhs)?;
    let mut r = rhs;
    for _ in 0..s {
        r = mat_mul(&r, &r);
    }
    Ok(Operator { dims: m.dims.clone(), mat: r })
}

/// Solves `a * x = b` in place (x returned in `b`), LU with partial pivoting.
pub(crate) fn lu_solve_inplace(a: &mut Array2<C64>, b: &mut Array2<C64>) -> Result<()> {
    let n = a.dim().0;
    assert_eq!(a.dim().1, n);
    assert_eq!(b.dim().0, n);
    let m = b.dim().1;
    for col in 0..n {
        // pivot
        let mut piv = col;
        let mut best = a[(col, col)].norm();
        for r in col + 1..n {
            let v = a[(r, col)].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return Err(SimError::Numerical("LU: singular matrix".into()));
        }
        if piv != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(piv, j)];
                a[(piv, j)] = tmp;
            }
            for j in 0..m {
                let tmp = b[(col, j)];
                b[(col, j)] = b[(piv, j)];
                b[(piv, j)] = tmp;
            }
        }
        let d = a[(col, col)];
        for r in col + 1..n {
            let f = a[(r, col)] / d;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            a[(r, col)] = f;
            for j in col + 1..n {
                let v = a[(col, j)];
                a[(r, j)] -= f * v;
            }
            for j in 0..m {
                let v = b[(col, j)];
                b[(r, j)] -= f * v;
            }
        }
    }
    // back substitution
    for col in (0..n).rev() {
        let d = a[(col, col)];
        for j in 0..m {
            let mut acc = b[(col, j)];
            for k in col + 1..n {
                acc -= a[(col, k)] * b[(k, j)];
            }
            b[(col, j)] = acc / d;
        }
    }
    Ok(())
}

/// Partial trace onto the subsystems in `keep` (indices into `dims`,
/// deduplicated and kept in subsystem order). Returns a density operator;
/// pure inputs are traced as |ψ⟩⟨ψ|.
pub fn partial_trace(input: QState<'_>, keep: &[usize]) -> Result<Operator> {
    let dims: Vec<usize> = match input {
        QState::Pure(s) => s.dims.clone(),
        QState::Mixed(o) => o.dims.clone(),
    };
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() {
        return Err(SimError::InvalidInput("partial_trace: empty keep set".into()));
    }
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(SimError::InvalidInput(format!(
            "partial_trace: keep {keep:?} outside 0..{}",
            dims.len()
        )));
    }
    let st = strides(&dims);
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced.iter().map(|&k| dims[k]).product();

    // Flat offsets contributed by every kept (resp. traced) multi-index.
    let offsets = |subs: &[usize], count: usize| -> Vec<usize> {
        let mut out = vec![0usize; count];
        for (flat_out, out_v) in out.iter_mut().enumerate() {
            let mut rem = flat_out;
            let mut off = 0usize;
            for &s in subs.iter().rev() {
                let d = dims[s];
                off += (rem % d) * st[s];
                rem /= d;
            }
            *out_v = off;
        }
        out
    };
    let keep_off = offsets(&keep, dk);
    let tr_off = offsets(&traced, dt);

    let mut rho = Array2::<C64>::zeros((dk, dk));
    match input {
        QState::Pure(s) => {
            for (i, &oi) in keep_off.iter().enumerate() {
                for (j, &oj) in keep_off.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for &ot in tr_off.iter() {
                        acc += s.amps[oi + ot] * s.amps[oj + ot].conj();
                    }
                    rho[(i, j)] = acc;
                }
            }
        }
        QState::Mixed(o) => {
            for (i, &oi) in keep_off.iter().enumerate() {
                for (j, &oj) in keep_off.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for &ot in tr_off.iter() {
                        acc += o.mat[(oi + ot, oj + ot)];
                    }
                    rho[(i, j)] = acc;
                }
            }
        }
    }
    Operator::from_matrix(kept_dims, rho)
}

/// State fidelity in [0, 1]: |⟨x|y⟩|² for two pure states, ⟨y|ρ|y⟩ for a
/// mixed/pure pair, Uhlmann fidelity for two density operators.
pub fn fidelity(x: QState<'_>, y: QState<'_>) -> Result<f64> {
    let dims_of = |q: &QState<'_>| match q {
        QState::Pure(s) => s.dims.clone(),
        QState::Mixed(o) => o.dims.clone(),
    };
    if dims_of(&x) != dims_of(&y) {
        return Err(SimError::DimMismatch { expected: dims_of(&x), got: dims_of(&y) });
    }
    let f = match (x, y) {
        (QState::Pure(a), QState::Pure(b)) => vdot(&a.amps, &b.amps).norm_sqr(),
        (QState::Mixed(rho), QState::Pure(psi)) | (QState::Pure(psi), QState::Mixed(rho)) => {
            let rp = mat_vec(&rho.mat, &psi.amps);
            vdot(&psi.amps, &rp).re
        }
        (QState::Mixed(a), QState::Mixed(b)) => uhlmann(&a.mat, &b.mat)?,
    };
    Ok(f.clamp(0.0, 1.0))
}

fn uhlmann(rho: &Array2<C64>, sigma: &Array2<C64>) -> Result<f64> {
    let sqrt_rho = psd_sqrt(rho)?;
    let inner = mat_mul(&mat_mul(&sqrt_rho, sigma), &sqrt_rho);
    let (evals, _) = hermitian_eig(&inner)?;
    let tr: f64 = evals.iter().map(|&l| l.max(0.0).sqrt()).sum();
    Ok(tr * tr)
}

fn psd_sqrt(a: &Array2<C64>) -> Result<Array2<C64>> {
    let (evals, vecs) = hermitian_eig(a)?;
    let n = a.dim().0;
    let mut out = Array2::<C64>::zeros((n, n));
    for (k, &l) in evals.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        if s == 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = vecs[(i, k)];
            for j in 0..n {
                out[(i, j)] += vi * vecs[(j, k)].conj() * s;
            }
        }
    }
    Ok(out)
}

/// Cyclic Jacobi eigensolver for Hermitian matrices. Returns eigenvalues
/// and the matrix whose columns are the eigenvectors. Adequate for the
/// modest sizes this crate traffics in; not a general-purpose solver.
pub(crate) fn hermitian_eig(a: &Array2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    let n = a.dim().0;
    let mut m = a.clone();
    let mut v = Array2::<C64>::eye(n);
    let scale: f64 = a.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-14 * scale;

    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.norm() <= tol * 1e-2 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // Unitary 2x2 rotation zeroing the (p, q) element.
                let phase = apq / apq.norm();
                let theta = 0.5 * (2.0 * apq.norm()).atan2(aqq - app);
                let (cs, sn) = (theta.cos(), theta.sin());
                let s_pq = phase * sn;
                // columns update: [c, s; -s*, c] applied on the right,
                // conjugate on the left
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * cs - miq * s_pq.conj();
                    m[(i, q)] = mip * s_pq + miq * cs;
                }
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = mpj * cs - mqj * s_pq;
                    m[(q, j)] = mpj * s_pq.conj() + mqj * cs;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * cs - viq * s_pq.conj();
                    v[(i, q)] = vip * s_pq + viq * cs;
                }
            }
        }
    }
    let evals: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    Ok((evals, v))
}

/// Applies `op` (a d×d matrix, d = dims[sub]) to one subsystem of a state.
pub fn apply_to_subsystem(state: &StateVector, op: &Array2<C64>, sub: usize) -> Result<StateVector> {
    let dims = &state.dims;
    if sub >= dims.len() {
        return Err(SimError::InvalidInput(format!("subsystem {sub} outside 0..{}", dims.len())));
    }
    let d = dims[sub];
    if op.dim() != (d, d) {
        return Err(SimError::DimMismatch { expected: vec![d, d], got: vec![op.dim().0, op.dim().1] });
    }
    let st = strides(dims);
    let stride = st[sub];
    let block = d * stride;
    let len = state.len();
    let mut out = Array1::<C64>::zeros(len);
    let inp = state.amps.as_slice().expect("contiguous");
    let transform = |chunk_in: &[C64], chunk_out: &mut [C64]| {
        for inner in 0..stride {
            for i in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..d {
                    let x = chunk_in[j * stride + inner];
                    if x != C64::new(0.0, 0.0) {
                        acc += op[(i, j)] * x;
                    }
                }
                chunk_out[i * stride + inner] = acc;
            }
        }
    };
    if len >= PAR_LEN && len / block > 1 {
        out.as_slice_mut()
            .expect("contiguous")
            .par_chunks_mut(block)
            .enumerate()
            .for_each(|(o, chunk_out)| transform(&inp[o * block..(o + 1) * block], chunk_out));
    } else {
        for (o, chunk_out) in out.as_slice_mut().expect("contiguous").chunks_mut(block).enumerate() {
            transform(&inp[o * block..(o + 1) * block], chunk_out);
        }
    }
    Ok(StateVector { dims: dims.clone(), amps: out, norm_tol: state.norm_tol })
}

/// Applies one of `ops` to subsystem `target`, selected by the index of
/// subsystem `control`: |c⟩⊗|t⟩ ↦ |c⟩⊗(ops[c]|t⟩). `ops` must hold one
/// matrix per control index.
pub fn apply_controlled_op(
    state: &StateVector,
    control: usize,
    target: usize,
    ops: &[Array2<C64>],
) -> Result<StateVector> {
    let dims = &state.dims;
    if control >= dims.len() || target >= dims.len() || control == target {
        return Err(SimError::InvalidInput(format!(
            "controlled op: bad subsystems ({control}, {target}) for {} subsystems",
            dims.len()
        )));
    }
    let dc = dims[control];
    let dt = dims[target];
    if ops.len() != dc {
        return Err(SimError::DimMismatch { expected: vec![dc], got: vec![ops.len()] });
    }
    for op in ops {
        if op.dim() != (dt, dt) {
            return Err(SimError::DimMismatch { expected: vec![dt, dt], got: vec![op.dim().0, op.dim().1] });
        }
    }
    let st = strides(dims);
    let (sc, stt) = (st[control], st[target]);
    let len = state.len();
    let inp = state.amps.as_slice().expect("contiguous");
    let mut out = Array1::<C64>::zeros(len);
    // Iterate over the flat index with the target index factored out.
    let outer = len / dt;
    let ob = out.as_slice_mut().expect("contiguous");
    for o in 0..outer {
        // reconstruct the base flat index with target index 0
        let hi = o / stt;
        let lo = o % stt;
        let base = hi * (dt * stt) + lo;
        let cidx = (base / sc) % dc;
        let op = &ops[cidx];
        for i in 0..dt {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..dt {
                let x = inp[base + j * stt];
                if x != C64::new(0.0, 0.0) {
                    acc += op[(i, j)] * x;
                }
            }
            ob[base + i * stt] = acc;
        }
    }
    Ok(StateVector { dims: dims.clone(), amps: out, norm_tol: state.norm_tol })
}

/// ⟨ψ|(op on subsystem `sub`)|ψ⟩.
pub fn expect_on_subsystem(state: &StateVector, op: &Array2<C64>, sub: usize) -> Result<C64> {
    let applied = apply_to_subsystem(state, op, sub)?;
    state.inner(&applied)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ci(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sigma_x() -> Operator {
        Operator::from_matrix(
            vec![2],
            ndarray::array![[ci(0., 0.), ci(1., 0.)], [ci(1., 0.), ci(0., 0.)]],
        )
        .unwrap()
    }

    fn sigma_z() -> Operator {
        Operator::from_matrix(
            vec![2],
            ndarray::array![[ci(1., 0.), ci(0., 0.)], [ci(0., 0.), ci(-1., 0.)]],
        )
        .unwrap()
    }

    fn random_op(rng: &mut ChaCha8Rng, dims: Vec<usize>) -> Operator {
        let n: usize = dims.iter().product();
        let mat = Array2::from_shape_fn((n, n), |_| ci(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        Operator::from_matrix(dims, mat).unwrap()
    }

    /// Entries from a dyadic grid so products associate exactly in f64.
    fn random_dyadic_op(rng: &mut ChaCha8Rng, dims: Vec<usize>) -> Operator {
        let n: usize = dims.iter().product();
        let grid = [-0.5, -0.25, 0.0, 0.25, 0.5, 1.0];
        let mat = Array2::from_shape_fn((n, n), |_| {
            ci(grid[rng.gen_range(0..grid.len())], grid[rng.gen_range(0..grid.len())])
        });
        Operator::from_matrix(dims, mat).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, dims: Vec<usize>) -> StateVector {
        let n: usize = dims.iter().product();
        let amps = Array1::from_shape_fn(n, |_| ci(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        StateVector::new(dims, amps).unwrap().normalized()
    }

    /// Independent oracle: tensor product by direct two-loop construction
    /// over explicit multi-indices.
    fn kron_oracle(a: &Operator, b: &Operator) -> Array2<C64> {
        let (na, nb) = (a.side(), b.side());
        let mut out = Array2::<C64>::zeros((na * nb, na * nb));
        for i1 in 0..na {
            for i2 in 0..nb {
                for j1 in 0..na {
                    for j2 in 0..nb {
                        out[(i1 * nb + i2, j1 * nb + j2)] =
                            a.matrix()[(i1, j1)] * b.matrix()[(i2, j2)];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn kron_identity_case() {
        let i2 = Operator::identity(&[2]).unwrap();
        let i3 = Operator::identity(&[3]).unwrap();
        let k = kron(&i2, &i3).unwrap();
        assert_eq!(k.dims(), &[2, 3]);
        assert_eq!(k.max_abs_diff(&Operator::identity(&[2, 3]).unwrap()), 0.0);
    }

    #[test]
    fn kron_basis_action() {
        let i2 = Operator::identity(&[2]).unwrap();
        let op = kron(&sigma_x(), &i2).unwrap();
        let s00 = StateVector::basis(vec![2, 2], &[0, 0]).unwrap();
        let s10 = StateVector::basis(vec![2, 2], &[1, 0]).unwrap();
        let out = op.apply(&s00).unwrap();
        assert!((out.inner(&s10).unwrap() - ci(1., 0.)).norm() < 1e-15);
    }

    #[test]
    fn kron_matches_two_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let a = random_op(&mut rng, vec![3]);
            let b = random_op(&mut rng, vec![4]);
            let k = kron(&a, &b).unwrap();
            let oracle = kron_oracle(&a, &b);
            let diff = k
                .matrix()
                .iter()
                .zip(oracle.iter())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert_eq!(diff, 0.0);
        }
    }

    #[test]
    fn kron_associative_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let a = random_dyadic_op(&mut rng, vec![2]);
            let b = random_dyadic_op(&mut rng, vec![3]);
            let c = random_dyadic_op(&mut rng, vec![2]);
            let left = kron(&kron(&a, &b).unwrap(), &c).unwrap();
            let right = kron(&a, &kron(&b, &c).unwrap()).unwrap();
            assert_eq!(left.max_abs_diff(&right), 0.0);
        }
    }

    #[test]
    fn kron_budget_error() {
        let a = Operator::identity(&[128]).unwrap();
        let b = Operator::identity(&[129]).unwrap();
        assert!(matches!(kron(&a, &b), Err(SimError::DimensionBudget { .. })));
    }

    #[test]
    fn matexp_zero_is_identity() {
        let z = Operator::from_matrix(vec![3], Array2::zeros((3, 3))).unwrap();
        let e = matexp(&z).unwrap();
        assert!(e.max_abs_diff(&Operator::identity(&[3]).unwrap()) < 1e-15);
    }

    #[test]
    fn matexp_diagonal_case() {
        let theta = 0.73;
        let m = Operator::from_matrix(
            vec![2],
            ndarray::array![[ci(0., theta), ci(0., 0.)], [ci(0., 0.), ci(0., -theta)]],
        )
        .unwrap();
        let e = matexp(&m).unwrap();
        assert!((e.matrix()[(0, 0)] - C64::from_polar(1.0, theta)).norm() < 1e-14);
        assert!((e.matrix()[(1, 1)] - C64::from_polar(1.0, -theta)).norm() < 1e-14);
        assert!(e.matrix()[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn matexp_inverse_identity() {
        // exp(M) exp(-M) = I for anti-Hermitian M with sizable norm.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let g = Array2::from_shape_fn((n, n), |_| ci(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let mut anti = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                anti[(i, j)] = (g[(i, j)] - g[(j, i)].conj()) / 2.0;
            }
        }
        // scale to 1-norm around 10
        let nn = super::one_norm(&anti);
        let anti = anti.mapv(|v| v * ci(10.0 / nn, 0.0));
        let m = Operator::from_matrix(vec![n], anti.clone()).unwrap();
        let mneg = Operator::from_matrix(vec![n], anti.mapv(|v| -v)).unwrap();
        let prod = matexp(&m).unwrap().mul(&matexp(&mneg).unwrap()).unwrap();
        assert!(prod.max_abs_diff(&Operator::identity(&[n]).unwrap()) < 1e-10);
    }

    #[test]
    fn matexp_rejects_nonfinite() {
        let mut mat = Array2::<C64>::zeros((2, 2));
        mat[(0, 1)] = ci(f64::NAN, 0.0);
        let m = Operator::from_matrix(vec![2], mat).unwrap();
        assert!(matches!(matexp(&m), Err(SimError::InvalidInput(_))));
    }

    #[test]
    fn partial_trace_product_state() {
        let s = StateVector::basis(vec![2, 2], &[0, 1]).unwrap();
        let rho = s.partial_trace(&[1]).unwrap();
        assert!((rho.matrix()[(1, 1)] - ci(1., 0.)).norm() < 1e-15);
        assert!(rho.matrix()[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn partial_trace_bell_pair() {
        let mut amps = Array1::zeros(4);
        amps[0] = ci(std::f64::consts::FRAC_1_SQRT_2, 0.);
        amps[3] = ci(std::f64::consts::FRAC_1_SQRT_2, 0.);
        let bell = StateVector::new(vec![2, 2], amps).unwrap();
        let rho = bell.partial_trace(&[0]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 0.5 } else { 0.0 };
                assert!((rho.matrix()[(i, j)] - ci(want, 0.)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..5 {
            let s = random_state(&mut rng, vec![2, 3, 2]);
            let rho = s.partial_trace(&[1]).unwrap();
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
            assert!(rho.trace().im.abs() < 1e-12);
            let full = s.density();
            let rho2 = partial_trace(QState::Mixed(&full), &[0, 2]).unwrap();
            assert!((rho2.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_empty_keep_errors() {
        let s = StateVector::basis(vec![2, 2], &[0, 0]).unwrap();
        assert!(matches!(s.partial_trace(&[]), Err(SimError::InvalidInput(_))));
    }

    #[test]
    fn fidelity_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let psi = random_state(&mut rng, vec![5]);
        assert!((fidelity(QState::Pure(&psi), QState::Pure(&psi)).unwrap() - 1.0).abs() < 1e-12);
        let zero = StateVector::basis(vec![2], &[0]).unwrap();
        let one = StateVector::basis(vec![2], &[1]).unwrap();
        assert_eq!(fidelity(QState::Pure(&zero), QState::Pure(&one)).unwrap(), 0.0);
    }

    #[test]
    fn fidelity_mixed_pure_and_uhlmann_agree_on_pure_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let a = random_state(&mut rng, vec![4]);
        let b = random_state(&mut rng, vec![4]);
        let pp = fidelity(QState::Pure(&a), QState::Pure(&b)).unwrap();
        let mp = fidelity(QState::Mixed(&a.density()), QState::Pure(&b)).unwrap();
        let mm = fidelity(QState::Mixed(&a.density()), QState::Mixed(&b.density())).unwrap();
        assert!((pp - mp).abs() < 1e-12);
        assert!((pp - mm).abs() < 1e-9);
    }

    #[test]
    fn fidelity_unitary_invariance_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = random_state(&mut rng, vec![2]);
        let b = random_state(&mut rng, vec![2]);
        let f_ab = fidelity(QState::Pure(&a), QState::Pure(&b)).unwrap();
        let f_ba = fidelity(QState::Pure(&b), QState::Pure(&a)).unwrap();
        assert!((f_ab - f_ba).abs() < 1e-12);
        // unitary: exp(i * 0.4 * sigma_x) via matexp
        let gen = sigma_x().scale(ci(0., 0.4));
        let u = matexp(&gen).unwrap();
        let ua = u.apply(&a).unwrap();
        let ub = u.apply(&b).unwrap();
        let f_u = fidelity(QState::Pure(&ua), QState::Pure(&ub)).unwrap();
        assert!((f_ab - f_u).abs() < 1e-12);
    }

    #[test]
    fn fidelity_uhlmann_mixed_mixed() {
        // I/2 vs |0><0| has fidelity 1/2.
        let eye = Operator::from_matrix(vec![2], Array2::eye(2).mapv(|v: f64| ci(v * 0.5, 0.))).unwrap();
        let zero = StateVector::basis(vec![2], &[0]).unwrap().density();
        let f = fidelity(QState::Mixed(&eye), QState::Mixed(&zero)).unwrap();
        assert!((f - 0.5).abs() < 1e-10);
    }

    #[test]
    fn unitarity_check() {
        let gen = sigma_z().scale(ci(0., 1.3));
        let u = matexp(&gen).unwrap();
        assert!(u.is_unitary(1e-12));
        assert!(!sigma_x().scale(ci(0.5, 0.)).is_unitary(1e-12));
    }

    #[test]
    fn apply_to_subsystem_matches_kron() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let s = random_state(&mut rng, vec![2, 3, 2]);
        let op = random_op(&mut rng, vec![3]);
        let fast = apply_to_subsystem(&s, op.matrix(), 1).unwrap();
        let full = kron(&kron(&Operator::identity(&[2]).unwrap(), &op).unwrap(), &Operator::identity(&[2]).unwrap())
            .unwrap();
        let slow = full.apply(&s).unwrap();
        let diff = fast
            .amps()
            .iter()
            .zip(slow.amps().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-13);
    }

    #[test]
    fn apply_controlled_op_matches_projector_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let s = random_state(&mut rng, vec![2, 4]);
        let op0 = random_op(&mut rng, vec![4]);
        let op1 = random_op(&mut rng, vec![4]);
        let fast =
            apply_controlled_op(&s, 0, 1, &[op0.matrix().clone(), op1.matrix().clone()]).unwrap();
        // oracle: P0 x op0 + P1 x op1
        let mut p0 = Array2::<C64>::zeros((2, 2));
        p0[(0, 0)] = ci(1., 0.);
        let mut p1 = Array2::<C64>::zeros((2, 2));
        p1[(1, 1)] = ci(1., 0.);
        let full = kron(&Operator::from_matrix(vec![2], p0).unwrap(), &op0)
            .unwrap()
            .add(&kron(&Operator::from_matrix(vec![2], p1).unwrap(), &op1).unwrap())
            .unwrap();
        let slow = full.apply(&s).unwrap();
        let diff = fast
            .amps()
            .iter()
            .zip(slow.amps().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-13);
    }

    #[test]
    fn controlled_op_on_middle_control() {
        // control to the right of target
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let s = random_state(&mut rng, vec![3, 2, 2]);
        let ops: Vec<_> = (0..2).map(|_| random_op(&mut rng, vec![3]).into_matrix()).collect();
        let fast = apply_controlled_op(&s, 1, 0, &ops).unwrap();
        let mut acc = None;
        for cix in 0..2 {
            let mut p = Array2::<C64>::zeros((2, 2));
            p[(cix, cix)] = ci(1., 0.);
            let term = kron(
                &kron(&Operator::from_matrix(vec![3], ops[cix].clone()).unwrap(), &Operator::from_matrix(vec![2], p).unwrap()).unwrap(),
                &Operator::identity(&[2]).unwrap(),
            )
            .unwrap();
            acc = Some(match acc {
                None => term,
                Some(a) => term.add(&a).unwrap(),
            });
        }
        let slow = acc.unwrap().apply(&s).unwrap();
        let diff = fast
            .amps()
            .iter()
            .zip(slow.amps().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-13);
    }

    #[test]
    fn state_budget_error() {
        let err = StateVector::new(vec![2, MAX_STATE_LEN], Array1::zeros(2 * MAX_STATE_LEN));
        assert!(matches!(err, Err(SimError::DimensionBudget { .. })));
    }
}
