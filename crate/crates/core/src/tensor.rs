//! Dense complex linear algebra over labeled qudit registers.
//!
//! A [`QuantumState`] is either a pure vector or a density matrix together
//! with an ordered list of [`Subsystem`] registers. Flat indices are
//! row-major over the register list: the first register is the most
//! significant digit.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QcrError, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Default cap on the total Hilbert-space dimension of constructed states.
pub const DEFAULT_DIM_CAP: usize = 4096;
/// Absolute tolerance on Hermiticity, trace and negative eigenvalues.
pub const PSD_TOL: f64 = 1e-9;
/// Eigenvalues at or below this are treated as exact zeros when purifying.
pub const RANK_THRESHOLD: f64 = 1e-12;
/// Measurement outcomes with probability at or below this are dropped.
pub const ZERO_PROBABILITY: f64 = 1e-14;

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// What a register is for inside a dealer/player layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    DealerInfo,
    DealerShield,
    /// Information register of player `k` (1-based).
    PlayerInfo(usize),
    /// Shield register of player `k` (1-based).
    PlayerShield(usize),
    Environment,
    /// Register outside the dealer/player structure.
    Other,
}

impl Role {
    /// Sort key of the canonical ordering: dealer first, players by index,
    /// information before shield, environment last.
    pub fn canonical_key(&self) -> (usize, usize) {
        match *self {
            Role::DealerInfo => (0, 0),
            Role::DealerShield => (0, 1),
            Role::PlayerInfo(k) => (k, 0),
            Role::PlayerShield(k) => (k, 1),
            Role::Other => (usize::MAX - 1, 0),
            Role::Environment => (usize::MAX, 0),
        }
    }

    pub fn is_info(&self) -> bool {
        matches!(self, Role::DealerInfo | Role::PlayerInfo(_))
    }

    pub fn is_shield(&self) -> bool {
        matches!(self, Role::DealerShield | Role::PlayerShield(_))
    }

    /// Party index: 0 for the dealer, `k` for player `k`.
    pub fn party(&self) -> Option<usize> {
        match *self {
            Role::DealerInfo | Role::DealerShield => Some(0),
            Role::PlayerInfo(k) | Role::PlayerShield(k) => Some(k),
            Role::Environment | Role::Other => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Subsystem {
    pub label: String,
    pub role: Role,
    pub dim: usize,
}

impl Subsystem {
    pub fn new(label: impl Into<String>, role: Role, dim: usize) -> Self {
        Self {
            label: label.into(),
            role,
            dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateData {
    Pure(ComplexVector),
    Density(ComplexMatrix),
}

/// A normalized pure vector or density matrix bound to its registers.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    registers: Vec<Subsystem>,
    data: StateData,
}

fn check_registers(registers: &[Subsystem]) -> Result<usize> {
    let mut seen = HashSet::new();
    let mut dim = 1usize;
    for r in registers {
        if r.dim == 0 {
            return Err(QcrError::InvalidLayout(format!(
                "register `{}` has dimension 0",
                r.label
            )));
        }
        if !seen.insert(r.label.as_str()) {
            return Err(QcrError::LabelCollision(r.label.clone()));
        }
        dim = dim.checked_mul(r.dim).ok_or(QcrError::DimensionCap {
            dim: usize::MAX,
            cap: DEFAULT_DIM_CAP,
        })?;
    }
    Ok(dim)
}

impl QuantumState {
    /// Pure state; the squared norm must be within `PSD_TOL` of 1.
    pub fn pure(registers: Vec<Subsystem>, amplitudes: ComplexVector) -> Result<Self> {
        let dim = check_registers(&registers)?;
        if amplitudes.len() != dim {
            return Err(QcrError::DimensionMismatch {
                expected: dim,
                actual: amplitudes.len(),
            });
        }
        let norm_sqr = amplitudes.norm_squared();
        if (norm_sqr - 1.0).abs() > PSD_TOL {
            return Err(QcrError::NotNormalized(norm_sqr));
        }
        Ok(Self {
            registers,
            data: StateData::Pure(amplitudes),
        })
    }

    /// Density matrix, validated with [`validate_density`] at `PSD_TOL`.
    pub fn density(registers: Vec<Subsystem>, matrix: ComplexMatrix) -> Result<Self> {
        let dim = check_registers(&registers)?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(QcrError::DimensionMismatch {
                expected: dim,
                actual: matrix.nrows(),
            });
        }
        validate_density(&matrix, PSD_TOL)?;
        Ok(Self {
            registers,
            data: StateData::Density(matrix),
        })
    }

    /// Skips validation; callers guarantee the data is a valid state.
    pub(crate) fn from_parts(registers: Vec<Subsystem>, data: StateData) -> Self {
        debug_assert_eq!(
            registers.iter().map(|r| r.dim).product::<usize>(),
            match &data {
                StateData::Pure(v) => v.len(),
                StateData::Density(m) => m.nrows(),
            }
        );
        Self { registers, data }
    }

    pub fn registers(&self) -> &[Subsystem] {
        &self.registers
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.dim).collect()
    }

    pub fn dim(&self) -> usize {
        match &self.data {
            StateData::Pure(v) => v.len(),
            StateData::Density(m) => m.nrows(),
        }
    }

    pub fn is_pure_vector(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.label == label)
            .ok_or_else(|| QcrError::UnknownLabel(label.to_string()))
    }

    pub fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.position(l.as_ref())?;
            if out.contains(&p) {
                return Err(QcrError::LabelCollision(l.as_ref().to_string()));
            }
            out.push(p);
        }
        Ok(out)
    }

    pub fn labels_where(&self, pred: impl Fn(&Subsystem) -> bool) -> Vec<String> {
        self.registers
            .iter()
            .filter(|r| pred(r))
            .map(|r| r.label.clone())
            .collect()
    }

    pub fn density_matrix(&self) -> ComplexMatrix {
        match &self.data {
            StateData::Pure(v) => v * v.adjoint(),
            StateData::Density(m) => m.clone(),
        }
    }

    /// The same state as a density matrix.
    pub fn to_density(&self) -> QuantumState {
        Self::from_parts(
            self.registers.clone(),
            StateData::Density(self.density_matrix()),
        )
    }

    pub fn trace(&self) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.norm_squared(),
            StateData::Density(m) => m.trace().re,
        }
    }

    /// tr(ρ²)
    pub fn purity(&self) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.norm_squared().powi(2),
            StateData::Density(m) => m.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    /// Largest entrywise difference between the density matrices of two
    /// states on identical registers.
    pub fn max_entry_diff(&self, other: &QuantumState) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(QcrError::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let a = self.density_matrix();
        let b = other.density_matrix();
        Ok(a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max))
    }

    /// Replace register labels and roles, keeping dimensions.
    pub fn with_registers(&self, registers: Vec<Subsystem>) -> Result<QuantumState> {
        check_registers(&registers)?;
        if registers.iter().map(|r| r.dim).collect::<Vec<_>>() != self.dims() {
            return Err(QcrError::InvalidLayout(
                "relabeling must preserve register dimensions".into(),
            ));
        }
        Ok(Self::from_parts(registers, self.data.clone()))
    }
}

/// Checks Hermiticity, unit trace and positivity, each within `tol`.
pub fn validate_density(m: &ComplexMatrix, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(QcrError::NotSquare(m.nrows(), m.ncols()));
    }
    let herm = hermiticity_defect(m);
    if herm > tol {
        return Err(QcrError::InvalidDensity(format!(
            "not Hermitian (defect {herm:.3e})"
        )));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(QcrError::InvalidDensity(format!("trace {tr}")));
    }
    let min = min_eigenvalue(m);
    if min < -tol {
        return Err(QcrError::InvalidDensity(format!(
            "negative eigenvalue {min:.3e}"
        )));
    }
    Ok(())
}

pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

pub fn eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let prod = u.adjoint() * u;
    let n = u.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn check_unitary(u: &ComplexMatrix, tol: f64) -> Result<()> {
    if u.nrows() != u.ncols() {
        return Err(QcrError::NotSquare(u.nrows(), u.ncols()));
    }
    let defect = unitarity_defect(u);
    if defect > tol {
        return Err(QcrError::NotUnitary(defect));
    }
    Ok(())
}

/// Mixed-radix bookkeeping for a selection of registers.
///
/// `sel[i]` and `rest[i]` are the coordinates of flat index `i` in the
/// selected registers (in selection order) and in the remaining registers
/// (in original order). `join` inverts the map.
pub(crate) struct RegisterSplit {
    pub sel_dim: usize,
    pub rest_dim: usize,
    pub sel: Vec<usize>,
    pub rest: Vec<usize>,
    join: Vec<usize>,
}

impl RegisterSplit {
    pub fn new(dims: &[usize], selected: &[usize]) -> Self {
        let total: usize = dims.iter().product();
        let rest_pos: Vec<usize> = (0..dims.len()).filter(|p| !selected.contains(p)).collect();
        let sel_dim: usize = selected.iter().map(|&p| dims[p]).product();
        let rest_dim: usize = rest_pos.iter().map(|&p| dims[p]).product();

        let mut sel = vec![0usize; total];
        let mut rest = vec![0usize; total];
        let mut join = vec![0usize; total];
        let mut digits = vec![0usize; dims.len()];
        for flat in 0..total {
            let mut s = 0;
            for &p in selected {
                s = s * dims[p] + digits[p];
            }
            let mut r = 0;
            for &p in &rest_pos {
                r = r * dims[p] + digits[p];
            }
            sel[flat] = s;
            rest[flat] = r;
            join[s * rest_dim + r] = flat;
            // increment the mixed-radix counter, last register fastest
            for p in (0..dims.len()).rev() {
                digits[p] += 1;
                if digits[p] < dims[p] {
                    break;
                }
                digits[p] = 0;
            }
        }
        Self {
            sel_dim,
            rest_dim,
            sel,
            rest,
            join,
        }
    }

    #[inline]
    pub fn flat(&self, s: usize, r: usize) -> usize {
        self.join[s * self.rest_dim + r]
    }
}

/// Decompose `index` into digits with the given radices, most significant first.
pub fn index_to_digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for p in (0..dims.len()).rev() {
        out[p] = index % dims[p];
        index /= dims[p];
    }
    out
}

pub fn digits_to_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&d, &r)| acc * r + d)
}

pub fn tensor_product(a: &QuantumState, b: &QuantumState) -> Result<QuantumState> {
    tensor_product_capped(a, b, DEFAULT_DIM_CAP)
}

/// Kronecker product `a ⊗ b` with concatenated registers.
pub fn tensor_product_capped(
    a: &QuantumState,
    b: &QuantumState,
    cap: usize,
) -> Result<QuantumState> {
    let mut registers = a.registers.clone();
    registers.extend(b.registers.iter().cloned());
    let dim = check_registers(&registers)?;
    if dim > cap {
        return Err(QcrError::DimensionCap { dim, cap });
    }
    let data = match (&a.data, &b.data) {
        (StateData::Pure(x), StateData::Pure(y)) => StateData::Pure(x.kronecker(y)),
        _ => StateData::Density(a.density_matrix().kronecker(&b.density_matrix())),
    };
    Ok(QuantumState::from_parts(registers, data))
}

/// Reduced state on the registers not listed in `over`.
pub fn partial_trace<S: AsRef<str>>(s: &QuantumState, over: &[S]) -> Result<QuantumState> {
    let traced = s.positions(over)?;
    let keep: Vec<usize> = (0..s.registers.len())
        .filter(|p| !traced.contains(p))
        .collect();
    Ok(reduce_to_positions(s, &keep))
}

/// Reduced density matrix on `keep` (in the given order).
pub(crate) fn reduce_to_positions(s: &QuantumState, keep: &[usize]) -> QuantumState {
    let dims = s.dims();
    let split = RegisterSplit::new(&dims, keep);
    let registers: Vec<Subsystem> = keep.iter().map(|&p| s.registers[p].clone()).collect();
    let m = match &s.data {
        StateData::Pure(v) => {
            let block =
                ComplexMatrix::from_fn(split.sel_dim, split.rest_dim, |a, r| v[split.flat(a, r)]);
            &block * block.adjoint()
        }
        StateData::Density(rho) => {
            let mut out = ComplexMatrix::zeros(split.sel_dim, split.sel_dim);
            for a in 0..split.sel_dim {
                for b in 0..split.sel_dim {
                    let mut acc = ZERO;
                    for r in 0..split.rest_dim {
                        acc += rho[(split.flat(a, r), split.flat(b, r))];
                    }
                    out[(a, b)] = acc;
                }
            }
            out
        }
    };
    QuantumState::from_parts(registers, StateData::Density(m))
}

/// Partial transpose on the listed registers.
pub fn partial_transpose<S: AsRef<str>>(s: &QuantumState, over: &[S]) -> Result<ComplexMatrix> {
    let rho = match &s.data {
        StateData::Density(m) => m,
        StateData::Pure(_) => return Err(QcrError::PureStateInput),
    };
    let sel = s.positions(over)?;
    let split = RegisterSplit::new(&s.dims(), &sel);
    let n = rho.nrows();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let row = split.flat(split.sel[j], split.rest[i]);
            let col = split.flat(split.sel[i], split.rest[j]);
            out[(row, col)] = rho[(i, j)];
        }
    }
    Ok(out)
}

/// Sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(QcrError::NotSquare(a.nrows(), a.ncols()));
    }
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(a.clone().singular_values().iter().sum())
}

#[derive(Clone, Debug)]
pub struct MeasurementBranch {
    /// One digit per measured register, in the requested order.
    pub outcome: Vec<usize>,
    pub probability: f64,
    /// Normalized post-measurement state on the full register list.
    pub state: QuantumState,
}

/// Projective measurement of `on` in the computational basis.
///
/// Branches are listed in lexicographic outcome order; outcomes with
/// probability at most `ZERO_PROBABILITY` are omitted.
pub fn measure_computational<S: AsRef<str>>(
    s: &QuantumState,
    on: &[S],
) -> Result<Vec<MeasurementBranch>> {
    let sel = s.positions(on)?;
    let dims = s.dims();
    let sel_dims: Vec<usize> = sel.iter().map(|&p| dims[p]).collect();
    let split = RegisterSplit::new(&dims, &sel);
    let mut branches = Vec::new();
    for outcome in 0..split.sel_dim {
        let members: Vec<usize> = (0..split.rest_dim)
            .map(|r| split.flat(outcome, r))
            .collect();
        let data = match &s.data {
            StateData::Pure(v) => {
                let p: f64 = members.iter().map(|&i| v[i].norm_sqr()).sum();
                if p <= ZERO_PROBABILITY {
                    continue;
                }
                let scale = 1.0 / p.sqrt();
                let mut post = ComplexVector::zeros(v.len());
                for &i in &members {
                    post[i] = v[i] * scale;
                }
                (p, StateData::Pure(post))
            }
            StateData::Density(rho) => {
                let p: f64 = members.iter().map(|&i| rho[(i, i)].re).sum();
                if p <= ZERO_PROBABILITY {
                    continue;
                }
                let mut post = ComplexMatrix::zeros(rho.nrows(), rho.ncols());
                for &i in &members {
                    for &j in &members {
                        post[(i, j)] = rho[(i, j)] / p;
                    }
                }
                (p, StateData::Density(post))
            }
        };
        branches.push(MeasurementBranch {
            outcome: index_to_digits(outcome, &sel_dims),
            probability: data.0,
            state: QuantumState::from_parts(s.registers.clone(), data.1),
        });
    }
    Ok(branches)
}

/// Outcome distribution of a computational-basis measurement, without
/// building post-measurement states. Entry `k` is the probability of the
/// outcome with flat index `k` over the measured registers.
pub fn outcome_distribution<S: AsRef<str>>(s: &QuantumState, on: &[S]) -> Result<Vec<f64>> {
    let sel = s.positions(on)?;
    let split = RegisterSplit::new(&s.dims(), &sel);
    let mut probs = vec![0.0; split.sel_dim];
    for i in 0..s.dim() {
        probs[split.sel[i]] += match &s.data {
            StateData::Pure(v) => v[i].norm_sqr(),
            StateData::Density(m) => m[(i, i)].re,
        };
    }
    Ok(probs)
}

fn fresh_label(registers: &[Subsystem], base: &str) -> String {
    if registers.iter().all(|r| r.label != base) {
        return base.to_string();
    }
    (2..)
        .map(|k| format!("{base}{k}"))
        .find(|l| registers.iter().all(|r| &r.label != l))
        .expect("unbounded label search")
}

/// Pure state on the input registers plus an appended environment register
/// whose dimension is the numerical rank of the input.
pub fn purify(s: &QuantumState) -> Result<QuantumState> {
    let mut registers = s.registers.clone();
    let env_label = fresh_label(&registers, "E");
    match &s.data {
        StateData::Pure(v) => {
            registers.push(Subsystem::new(env_label, Role::Environment, 1));
            Ok(QuantumState::from_parts(
                registers,
                StateData::Pure(v.clone()),
            ))
        }
        StateData::Density(rho) => {
            let (values, vectors) = hermitian_eigen(rho);
            if let Some(&min) = values.first() {
                if min < -PSD_TOL {
                    return Err(QcrError::InvalidDensity(format!(
                        "negative eigenvalue {min:.3e}"
                    )));
                }
            }
            let kept: Vec<usize> = (0..values.len())
                .filter(|&k| values[k] > RANK_THRESHOLD)
                .collect();
            let rank = kept.len().max(1);
            let n = rho.nrows();
            let mut psi = ComplexVector::zeros(n * rank);
            for (x, &k) in kept.iter().enumerate() {
                let w = values[k].sqrt();
                for i in 0..n {
                    psi[i * rank + x] = vectors[(i, k)] * w;
                }
            }
            registers.push(Subsystem::new(env_label, Role::Environment, rank));
            Ok(QuantumState::from_parts(registers, StateData::Pure(psi)))
        }
    }
}

/// Apply `u` to the listed registers (in that order).
pub fn apply_unitary<S: AsRef<str>>(
    s: &QuantumState,
    u: &ComplexMatrix,
    on: &[S],
) -> Result<QuantumState> {
    let targets: Vec<&str> = on.iter().map(|l| l.as_ref()).collect();
    let none: [&str; 0] = [];
    apply_controlled_unitary(s, &none, &targets, |_| Some(u))
}

/// Apply `Σ_c |c⟩⟨c| ⊗ U_c` where `c` ranges over computational-basis
/// digits of `controls`. `family` returning `None` means identity.
pub fn apply_controlled_unitary<'u, S: AsRef<str>, T: AsRef<str>>(
    s: &QuantumState,
    controls: &[S],
    targets: &[T],
    family: impl Fn(&[usize]) -> Option<&'u ComplexMatrix>,
) -> Result<QuantumState> {
    let ctrl = s.positions(controls)?;
    let tgt = s.positions(targets)?;
    if let Some(p) = ctrl.iter().find(|p| tgt.contains(p)) {
        return Err(QcrError::LabelCollision(s.registers[*p].label.clone()));
    }
    let dims = s.dims();
    let ctrl_dims: Vec<usize> = ctrl.iter().map(|&p| dims[p]).collect();
    let tgt_dim: usize = tgt.iter().map(|&p| dims[p]).product();
    let ctrl_dim: usize = ctrl_dims.iter().product();

    let mut blocks: Vec<Option<&ComplexMatrix>> = Vec::with_capacity(ctrl_dim);
    for c in 0..ctrl_dim {
        let u = family(&index_to_digits(c, &ctrl_dims));
        if let Some(u) = u {
            if u.nrows() != tgt_dim || u.ncols() != tgt_dim {
                return Err(QcrError::DimensionMismatch {
                    expected: tgt_dim,
                    actual: u.nrows(),
                });
            }
            check_unitary(u, PSD_TOL)?;
        }
        blocks.push(u);
    }

    let selected: Vec<usize> = ctrl.iter().chain(tgt.iter()).copied().collect();
    let split = RegisterSplit::new(&dims, &selected);

    // left-multiply every column of `m` (rows indexed by the full space)
    let left_apply = |m: &ComplexMatrix| -> ComplexMatrix {
        let mut out = m.clone();
        let mut buf = ComplexVector::zeros(tgt_dim);
        for col in 0..m.ncols() {
            for (c, block) in blocks.iter().enumerate() {
                let Some(u) = block else { continue };
                for r in 0..split.rest_dim {
                    for t in 0..tgt_dim {
                        buf[t] = m[(split.flat(c * tgt_dim + t, r), col)];
                    }
                    let mapped = *u * &buf;
                    for t in 0..tgt_dim {
                        out[(split.flat(c * tgt_dim + t, r), col)] = mapped[t];
                    }
                }
            }
        }
        out
    };

    let data = match &s.data {
        StateData::Pure(v) => {
            let col = ComplexMatrix::from_column_slice(v.len(), 1, v.as_slice());
            StateData::Pure(left_apply(&col).column(0).into_owned())
        }
        StateData::Density(rho) => {
            let half = left_apply(rho);
            StateData::Density(left_apply(&half.adjoint()).adjoint())
        }
    };
    Ok(QuantumState::from_parts(s.registers.clone(), data))
}

/// Reorder registers: output register `k` is input register `order[k]`.
pub fn permute_registers(s: &QuantumState, order: &[usize]) -> Result<QuantumState> {
    let n = s.registers.len();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(QcrError::InvalidArgument(format!(
            "{order:?} is not a permutation of {n} registers"
        )));
    }
    let split = RegisterSplit::new(&s.dims(), order);
    debug_assert_eq!(split.rest_dim, 1);
    let registers: Vec<Subsystem> = order.iter().map(|&p| s.registers[p].clone()).collect();
    let data = match &s.data {
        StateData::Pure(v) => {
            StateData::Pure(ComplexVector::from_fn(v.len(), |k, _| v[split.flat(k, 0)]))
        }
        StateData::Density(m) => {
            StateData::Density(ComplexMatrix::from_fn(m.nrows(), m.ncols(), |a, b| {
                m[(split.flat(a, 0), split.flat(b, 0))]
            }))
        }
    };
    Ok(QuantumState::from_parts(registers, data))
}

/// Stable reorder into dealer / players / environment order.
pub fn canonical_order(registers: &[Subsystem]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..registers.len()).collect();
    order.sort_by_key(|&p| registers[p].role.canonical_key());
    order
}

pub fn to_canonical_order(s: &QuantumState) -> QuantumState {
    let order = canonical_order(&s.registers);
    permute_registers(s, &order).expect("canonical order is a permutation")
}

/// Computational-basis ket `|digits⟩` on the given registers.
pub fn basis_state(registers: Vec<Subsystem>, digits: &[usize]) -> Result<QuantumState> {
    let dims: Vec<usize> = registers.iter().map(|r| r.dim).collect();
    if digits.len() != dims.len() {
        return Err(QcrError::DimensionMismatch {
            expected: dims.len(),
            actual: digits.len(),
        });
    }
    for (&d, &r) in digits.iter().zip(&dims) {
        if d >= r {
            return Err(QcrError::DigitOutOfRange {
                digit: d,
                modulus: r,
            });
        }
    }
    let total = check_registers(&registers)?;
    let mut v = ComplexVector::zeros(total);
    v[digits_to_index(digits, &dims)] = ONE;
    QuantumState::pure(registers, v)
}

/// `Σ_i |i + shift⟩⟨i|` on a `d`-dimensional register.
pub fn shift_unitary(d: usize, shift: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |r, c| if r == (c + shift) % d { ONE } else { ZERO })
}

/// Modular controlled addition `Σ_{j,k} |j+k, k⟩⟨j, k|` (first register is the target).
pub fn controlled_add(d: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    for j in 0..d {
        for k in 0..d {
            m[(((j + k) % d) * d + k, j * d + k)] = ONE;
        }
    }
    m
}
