//! Reduction and composition of resource states.
//!
//! [`reduce`]: a subset of players measures its information registers and
//! announces the digit sum `β`; the dealer shifts its information register
//! by `β` and the remaining parties hold a smaller resource state.
//!
//! [`compose`]: the dealers of two resource states are merged by a modular
//! controlled addition from the second dealer digit into the first. The
//! first dealer register stays the information part; the second becomes
//! part of the merged dealer's shield.
//!
//! Rate statements about distillation are not computed here. Their finite
//! ingredients are closure of these two maps (tested against the verifier)
//! and the telescoping bound on trace distance in [`crate::analysis`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QcrError, Result};
use crate::registers::{digit_sum, SystemLayout};
use crate::tensor::{
    apply_unitary, controlled_add, measure_computational, partial_trace, shift_unitary,
    tensor_product_capped, QuantumState, Role, Subsystem, DEFAULT_DIM_CAP,
};
use crate::verify::{is_qcr, PROTOCOL_TOL};

/// Which measurement branches [`reduce`] returns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BranchSelection {
    /// Every outcome with nonzero probability.
    All,
    /// The branch with these digits (one per measured player, ascending player order).
    Outcome(Vec<usize>),
    /// One branch drawn with the Born probabilities from a seeded generator.
    Sample(u64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolOptions {
    pub tol: f64,
    /// Reject inputs that fail verification.
    pub certify: bool,
    pub dim_cap: usize,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self {
            tol: PROTOCOL_TOL,
            certify: true,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }
}

impl ProtocolOptions {
    pub fn unchecked() -> Self {
        Self {
            certify: false,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReductionOutcome {
    /// Announced digit sum of the measured players.
    pub beta: usize,
    /// Measured digits, ascending player order.
    pub measured: Vec<usize>,
    pub measured_players: Vec<usize>,
    /// Original indices of the players that remain, renumbered `1..=M` in `state`.
    pub kept_players: Vec<usize>,
    pub probability: f64,
    /// Whether the dealer applied a nontrivial shift (`β ≠ 0`).
    pub correction_applied: bool,
    /// State of the dealer and remaining players.
    pub state: QuantumState,
}

fn certify(s: &QuantumState, what: &str, opts: &ProtocolOptions) -> Result<()> {
    if opts.certify {
        let report = is_qcr(s, opts.tol)?;
        if !report.verdict {
            return Err(QcrError::NotCertified(format!(
                "{what} fails {}",
                report.failing_conditions().join(" and ")
            )));
        }
    }
    Ok(())
}

/// Players in `measured` announce the digit sum of their outcomes; the
/// dealer corrects with `Σ_i |i+β⟩⟨i|` and the measured players' registers
/// are discarded.
pub fn reduce(
    s: &QuantumState,
    measured: &[usize],
    selection: &BranchSelection,
    opts: &ProtocolOptions,
) -> Result<Vec<ReductionOutcome>> {
    let layout = SystemLayout::from_registers(s.registers())?;
    let d = layout.d();
    let n = layout.players();
    let mut measured = measured.to_vec();
    measured.sort_unstable();
    measured.dedup();
    if measured.is_empty() {
        return Err(QcrError::InvalidPlayerSubset(
            "no players to measure".into(),
        ));
    }
    if let Some(&k) = measured.iter().find(|&&k| k == 0 || k > n) {
        return Err(QcrError::InvalidPlayerSubset(format!(
            "player {k} outside 1..={n}"
        )));
    }
    if measured.len() == n {
        return Err(QcrError::InvalidPlayerSubset(
            "at least one player must remain".into(),
        ));
    }
    if !layout.environment_labels().is_empty() {
        return Err(QcrError::InvalidLayout(
            "reduce expects a state without environment".into(),
        ));
    }
    certify(s, "input", opts)?;

    let kept: Vec<usize> = (1..=n).filter(|k| !measured.contains(k)).collect();
    let info: Vec<String> = measured
        .iter()
        .map(|&k| layout.player_info(k).label.clone())
        .collect();
    let discarded: Vec<String> = measured
        .iter()
        .flat_map(|&k| layout.party_labels(k))
        .collect();

    let mut branches = measure_computational(s, &info)?;
    match selection {
        BranchSelection::All => {}
        BranchSelection::Outcome(digits) => {
            if digits.len() != measured.len() || digits.iter().any(|&x| x >= d) {
                return Err(QcrError::InvalidArgument(format!(
                    "outcome {digits:?} for {} measured players over Z_{d}",
                    measured.len()
                )));
            }
            branches.retain(|b| &b.outcome == digits);
            if branches.is_empty() {
                return Err(QcrError::InvalidArgument(format!(
                    "outcome {digits:?} has probability zero"
                )));
            }
        }
        BranchSelection::Sample(seed) => {
            let mut rng = crate::random::seeded_rng(*seed);
            let total: f64 = branches.iter().map(|b| b.probability).sum();
            let mut x = rng.random::<f64>() * total;
            let pick = branches
                .iter()
                .position(|b| {
                    x -= b.probability;
                    x < 0.0
                })
                .unwrap_or(branches.len() - 1);
            branches = vec![branches.swap_remove(pick)];
        }
    }

    let dealer = layout.dealer_info().label.clone();
    branches
        .into_iter()
        .map(|branch| {
            let beta = digit_sum(&branch.outcome, d)?;
            let corrected = if beta == 0 {
                branch.state
            } else {
                apply_unitary(&branch.state, &shift_unitary(d, beta), &[dealer.as_str()])?
            };
            let reduced = partial_trace(&corrected, &discarded)?;
            let registers = renumber_players(reduced.registers(), &kept);
            Ok(ReductionOutcome {
                beta,
                measured: branch.outcome,
                measured_players: measured.clone(),
                kept_players: kept.clone(),
                probability: branch.probability,
                correction_applied: beta != 0,
                state: crate::construct::canonicalize(&reduced.with_registers(registers)?)?,
            })
        })
        .collect()
}

fn renumber_players(registers: &[Subsystem], kept: &[usize]) -> Vec<Subsystem> {
    let new_index = |k: usize| kept.iter().position(|&x| x == k).expect("kept player") + 1;
    registers
        .iter()
        .map(|r| {
            let role = match r.role {
                Role::PlayerInfo(k) => Role::PlayerInfo(new_index(k)),
                Role::PlayerShield(k) => Role::PlayerShield(new_index(k)),
                other => other,
            };
            Subsystem::new(r.label.clone(), role, r.dim)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionRecord {
    pub d: usize,
    pub inputs: [Vec<Subsystem>; 2],
    pub merged: Vec<Subsystem>,
    /// `cX = Σ_{j,k} |j+k, k⟩⟨j, k|` on (target, control).
    pub unitary: String,
    /// Merged-layout label of the first dealer's information register.
    pub target: String,
    /// Merged-layout label of the second dealer's information register,
    /// now a dealer shield.
    pub control: String,
}

/// Merge the dealers of two resource states with a controlled addition.
///
/// Players of `b` are renumbered after those of `a`.
pub fn compose(
    a: &QuantumState,
    b: &QuantumState,
    opts: &ProtocolOptions,
) -> Result<(QuantumState, CompositionRecord)> {
    let la = SystemLayout::from_registers(a.registers())?;
    let lb = SystemLayout::from_registers(b.registers())?;
    if la.d() != lb.d() {
        return Err(QcrError::ModulusMismatch(la.d(), lb.d()));
    }
    if !la.environment_labels().is_empty() || !lb.environment_labels().is_empty() {
        return Err(QcrError::InvalidLayout(
            "compose expects states without environment".into(),
        ));
    }
    certify(a, "first input", opts)?;
    certify(b, "second input", opts)?;
    let d = la.d();
    let n = la.players();

    // Tag registers so labels cannot collide, then retag by role.
    let tagged =
        |s: &QuantumState, tag: &str, shift: usize, dealer_info: Role| -> Result<QuantumState> {
            let regs = s
                .registers()
                .iter()
                .map(|r| {
                    let role = match r.role {
                        Role::DealerInfo => dealer_info,
                        Role::PlayerInfo(k) => Role::PlayerInfo(k + shift),
                        Role::PlayerShield(k) => Role::PlayerShield(k + shift),
                        other => other,
                    };
                    Subsystem::new(format!("{tag}{}", r.label), role, r.dim)
                })
                .collect();
            s.with_registers(regs)
        };
    let ta = tagged(a, "a:", 0, Role::DealerInfo)?;
    let tb = tagged(b, "b:", n, Role::DealerShield)?;
    let target = format!("a:{}", la.dealer_info().label);
    let control = format!("b:{}", lb.dealer_info().label);

    let joint = tensor_product_capped(&ta, &tb, opts.dim_cap)?;
    let mixed = apply_unitary(
        &joint,
        &controlled_add(d),
        &[target.as_str(), control.as_str()],
    )?;

    let order = crate::tensor::canonical_order(mixed.registers());
    let target_pos = order
        .iter()
        .position(|&p| mixed.registers()[p].label == target)
        .expect("target");
    let control_pos = order
        .iter()
        .position(|&p| mixed.registers()[p].label == control)
        .expect("control");
    let merged = crate::construct::canonicalize(&mixed)?;

    let record = CompositionRecord {
        d,
        inputs: [a.registers().to_vec(), b.registers().to_vec()],
        merged: merged.registers().to_vec(),
        unitary: "cX".into(),
        target: merged.registers()[target_pos].label.clone(),
        control: merged.registers()[control_pos].label.clone(),
    };
    Ok((merged, record))
}

/// Left fold of [`compose`] over two-party states.
pub fn expand_from_private(
    privates: &[QuantumState],
    opts: &ProtocolOptions,
) -> Result<QuantumState> {
    let (first, rest) = privates
        .split_first()
        .ok_or_else(|| QcrError::InvalidArgument("no input states".into()))?;
    for (k, s) in privates.iter().enumerate() {
        let l = SystemLayout::from_registers(s.registers())?;
        if l.players() != 1 {
            return Err(QcrError::InvalidArgument(format!(
                "input {k} has {} players, expected 1",
                l.players()
            )));
        }
    }
    let mut acc = first.clone();
    for s in rest {
        acc = compose(&acc, s, opts)?.0;
    }
    Ok(acc)
}
