//! Builders for resource-state families.
//!
//! Every builder assembles
//! `(1/d^N) Σ_{I,J} |I⟩⟨J| ⊗ W^I σ (W^J)†` over the digit-sum-0 index set,
//! where `σ` is a shield seed on all shield registers and `W^I` is an
//! information-controlled twisting unitary, then returns it in canonical
//! register order. The builders do not prove the result is a resource
//! state for an arbitrary twist; [`build_twisted_qcr`] attaches a
//! verification report for that reason.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{QcrError, Result};
use crate::random::{haar_unitary, random_density};
use crate::registers::{canonical_labels, index_set, negate_mod, SystemLayout};
use crate::tensor::{
    apply_unitary, check_unitary, digits_to_index, permute_registers, to_canonical_order,
    validate_density, ComplexMatrix, ComplexVector, QuantumState, Role, StateData, Subsystem,
    PSD_TOL,
};
use crate::verify::{is_qcr, VerificationReport};

/// The state `σ` placed on the shield registers, one dimension per party
/// (dealer first).
#[derive(Clone, Debug, PartialEq)]
pub struct ShieldSeed {
    dims: Vec<usize>,
    data: StateData,
}

impl ShieldSeed {
    /// Dimension-1 shields for `parties` parties.
    pub fn trivial(parties: usize) -> Self {
        Self {
            dims: vec![1; parties],
            data: StateData::Pure(ComplexVector::from_element(1, Complex64::new(1.0, 0.0))),
        }
    }

    pub fn pure(dims: Vec<usize>, amplitudes: ComplexVector) -> Result<Self> {
        let dim = Self::checked_dim(&dims)?;
        if amplitudes.len() != dim {
            return Err(QcrError::DimensionMismatch {
                expected: dim,
                actual: amplitudes.len(),
            });
        }
        let n = amplitudes.norm_squared();
        if (n - 1.0).abs() > PSD_TOL {
            return Err(QcrError::NotNormalized(n));
        }
        Ok(Self {
            dims,
            data: StateData::Pure(amplitudes),
        })
    }

    pub fn mixed(dims: Vec<usize>, sigma: ComplexMatrix) -> Result<Self> {
        let dim = Self::checked_dim(&dims)?;
        if sigma.nrows() != dim {
            return Err(QcrError::DimensionMismatch {
                expected: dim,
                actual: sigma.nrows(),
            });
        }
        validate_density(&sigma, PSD_TOL)?;
        Ok(Self {
            dims,
            data: StateData::Density(sigma),
        })
    }

    /// Computational-basis product state `|digits⟩`.
    pub fn basis(dims: Vec<usize>, digits: &[usize]) -> Result<Self> {
        let dim = Self::checked_dim(&dims)?;
        if digits.len() != dims.len() || digits.iter().zip(&dims).any(|(a, b)| a >= b) {
            return Err(QcrError::InvalidArgument(format!(
                "basis digits {digits:?} for shields {dims:?}"
            )));
        }
        let mut v = ComplexVector::zeros(dim);
        v[digits_to_index(digits, &dims)] = Complex64::new(1.0, 0.0);
        Self::pure(dims, v)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        let dim = Self::checked_dim(&dims)?;
        Self::mixed(dims, ComplexMatrix::identity(dim, dim).unscale(dim as f64))
    }

    /// Random density matrix of the given rank (full rank if `None`).
    pub fn random(dims: Vec<usize>, rank: Option<usize>, rng: &mut impl Rng) -> Result<Self> {
        let dim = Self::checked_dim(&dims)?;
        let sigma = random_density(dim, rank.unwrap_or(dim), rng);
        Self::mixed(dims, sigma)
    }

    fn checked_dim(dims: &[usize]) -> Result<usize> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(QcrError::InvalidArgument(format!(
                "shield dimensions {dims:?}"
            )));
        }
        Ok(dims.iter().product())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }
}

/// Unitaries on the joint shield space keyed by information digit strings.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistingFamily {
    dim: usize,
    unitaries: BTreeMap<Vec<usize>, ComplexMatrix>,
}

impl TwistingFamily {
    pub fn new(entries: impl IntoIterator<Item = (Vec<usize>, ComplexMatrix)>) -> Result<Self> {
        let unitaries: BTreeMap<_, _> = entries.into_iter().collect();
        let dim = match unitaries.values().next() {
            Some(u) => u.nrows(),
            None => return Err(QcrError::InvalidTwist("empty family".into())),
        };
        for (key, u) in &unitaries {
            if u.nrows() != dim || u.ncols() != dim {
                return Err(QcrError::InvalidTwist(format!(
                    "unitary for {key:?} is {}x{}, expected {dim}x{dim}",
                    u.nrows(),
                    u.ncols()
                )));
            }
            check_unitary(u, PSD_TOL)
                .map_err(|e| QcrError::InvalidTwist(format!("key {key:?}: {e}")))?;
        }
        Ok(Self { dim, unitaries })
    }

    /// Identity on a `dim`-dimensional shield for every key.
    pub fn identity(keys: impl IntoIterator<Item = Vec<usize>>, dim: usize) -> Result<Self> {
        Self::new(
            keys.into_iter()
                .map(|k| (k, ComplexMatrix::identity(dim, dim))),
        )
    }

    /// Independent Haar-random unitaries for every key.
    pub fn random(
        keys: impl IntoIterator<Item = Vec<usize>>,
        dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let entries: Vec<_> = keys
            .into_iter()
            .map(|k| (k, haar_unitary(dim, rng)))
            .collect();
        Self::new(entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, key: &[usize]) -> Option<&ComplexMatrix> {
        self.unitaries.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.unitaries.keys()
    }

    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }
}

/// Builds the superposition over the digit-sum-0 set in order
/// `[info registers…, shield registers…]` and returns it canonically ordered.
fn assemble<'a>(
    d: usize,
    players: usize,
    sigma: &ShieldSeed,
    twist: impl Fn(&[usize]) -> Option<&'a ComplexMatrix>,
) -> Result<QuantumState> {
    if sigma.parties() != players + 1 {
        return Err(QcrError::InvalidArgument(format!(
            "shield seed covers {} parties, layout has {}",
            sigma.parties(),
            players + 1
        )));
    }
    let support = index_set(players + 1, 0, d)?;
    let info_dims = vec![d; players + 1];
    let info_dim: usize = info_dims.iter().product();
    let sh = sigma.total_dim();
    let norm = 1.0 / (support.len() as f64);

    let twisted = |key: &[usize]| -> Result<Option<&'a ComplexMatrix>> {
        let u = twist(key);
        if let Some(u) = u {
            if u.nrows() != sh {
                return Err(QcrError::DimensionMismatch {
                    expected: sh,
                    actual: u.nrows(),
                });
            }
        }
        Ok(u)
    };

    let data = match sigma.data() {
        StateData::Pure(s) => {
            let mut v = ComplexVector::zeros(info_dim * sh);
            let amp = norm.sqrt();
            for key in support.members() {
                let block = match twisted(key)? {
                    Some(u) => u * s,
                    None => s.clone(),
                };
                let base = digits_to_index(key, &info_dims) * sh;
                for k in 0..sh {
                    v[base + k] = block[k] * amp;
                }
            }
            StateData::Pure(v)
        }
        StateData::Density(s) => {
            let rotated: Vec<(usize, ComplexMatrix)> = support
                .members()
                .iter()
                .map(|key| {
                    let u = twisted(key)?;
                    Ok((
                        digits_to_index(key, &info_dims),
                        u.cloned()
                            .unwrap_or_else(|| ComplexMatrix::identity(sh, sh)),
                    ))
                })
                .collect::<Result<_>>()?;
            let mut m = ComplexMatrix::zeros(info_dim * sh, info_dim * sh);
            for (ia, ua) in &rotated {
                let left = ua * s;
                for (ib, ub) in &rotated {
                    let block = (&left * ub.adjoint()).scale(norm);
                    m.view_mut((ia * sh, ib * sh), (sh, sh)).copy_from(&block);
                }
            }
            StateData::Density(m)
        }
    };

    let mut registers = Vec::with_capacity(2 * (players + 1));
    registers.push(Subsystem::new("", Role::DealerInfo, d));
    registers.extend((1..=players).map(|k| Subsystem::new("", Role::PlayerInfo(k), d)));
    registers.push(Subsystem::new("", Role::DealerShield, sigma.dims()[0]));
    registers
        .extend((1..=players).map(|k| Subsystem::new("", Role::PlayerShield(k), sigma.dims()[k])));
    canonical_labels(&mut registers);
    Ok(to_canonical_order(&QuantumState::from_parts(
        registers, data,
    )))
}

/// Two-party private state `(1/d) Σ_{i,j} |i,−i⟩⟨j,−j| ⊗ U^i σ (U^j)†`.
///
/// `twist` must hold exactly the keys `[0]`, …, `[d-1]`, each a unitary on
/// the dealer and player shields jointly.
pub fn build_private_state(
    d: usize,
    sigma: &ShieldSeed,
    twist: &TwistingFamily,
) -> Result<QuantumState> {
    if d < 2 {
        return Err(QcrError::InvalidModulus(d));
    }
    let expected: Vec<Vec<usize>> = (0..d).map(|i| vec![i]).collect();
    if twist.keys().cloned().collect::<Vec<_>>() != expected {
        return Err(QcrError::InvalidTwist(format!(
            "private-state twist needs keys 0..{d} exactly, got {:?}",
            twist.keys().collect::<Vec<_>>()
        )));
    }
    assemble(d, 1, sigma, |key| {
        debug_assert_eq!(key[1], negate_mod(key[0], d));
        twist.get(&key[..1])
    })
}

/// `(1/√d) Σ_i |i, −i⟩` with dimension-1 shields.
pub fn maximally_entangled(d: usize) -> Result<QuantumState> {
    let twist = TwistingFamily::identity((0..d).map(|i| vec![i]), 1)?;
    build_private_state(d, &ShieldSeed::trivial(2), &twist)
}

/// Private state with a full-rank random shield seed and Haar-random twist.
pub fn random_private_state(
    d: usize,
    dealer_shield: usize,
    player_shield: usize,
    rng: &mut impl Rng,
) -> Result<QuantumState> {
    let sigma = ShieldSeed::random(vec![dealer_shield, player_shield], None, rng)?;
    let twist = TwistingFamily::random((0..d).map(|i| vec![i]), sigma.total_dim(), rng)?;
    build_private_state(d, &sigma, &twist)
}

/// The three-party qubit example: amplitudes 1/2 on
/// `|000⟩|000⟩ + |011⟩|100⟩ + |101⟩|100⟩ + |110⟩|000⟩` over
/// `D̄ Ā B̄ D̃ Ã B̃`, returned in canonical order.
pub fn build_example_state() -> QuantumState {
    // (info D A B, shield D A B)
    const KETS: [([usize; 3], [usize; 3]); 4] = [
        ([0, 0, 0], [0, 0, 0]),
        ([0, 1, 1], [1, 0, 0]),
        ([1, 0, 1], [1, 0, 0]),
        ([1, 1, 0], [0, 0, 0]),
    ];
    let mut v = ComplexVector::zeros(64);
    for (info, shield) in KETS {
        let digits: Vec<usize> = info.iter().chain(shield.iter()).copied().collect();
        v[digits_to_index(&digits, &[2; 6])] = Complex64::new(0.5, 0.0);
    }
    let mut registers = vec![
        Subsystem::new("", Role::DealerInfo, 2),
        Subsystem::new("", Role::PlayerInfo(1), 2),
        Subsystem::new("", Role::PlayerInfo(2), 2),
        Subsystem::new("", Role::DealerShield, 2),
        Subsystem::new("", Role::PlayerShield(1), 2),
        Subsystem::new("", Role::PlayerShield(2), 2),
    ];
    canonical_labels(&mut registers);
    to_canonical_order(&QuantumState::from_parts(registers, StateData::Pure(v)))
}

/// Untwisted GHZ-type state `(1/d^N) Σ_{I,J} |I⟩⟨J| ⊗ σ`.
pub fn build_ghz_qcr(d: usize, players: usize, sigma: &ShieldSeed) -> Result<QuantumState> {
    if d < 2 {
        return Err(QcrError::InvalidModulus(d));
    }
    if players == 0 {
        return Err(QcrError::InvalidLayout("need at least one player".into()));
    }
    assemble(d, players, sigma, |_| None)
}

/// Apply `Σ_I |I⟩⟨I| ⊗ W^I` to `base`, with `I` running over all
/// information strings (dealer digit first) and `W^I` acting on every
/// shield register in canonical order. Keys must cover the digit-sum-0 set;
/// strings outside it carry no amplitude and default to the identity.
///
/// The result is a candidate; the attached report decides whether it is a
/// resource state.
pub fn build_twisted_qcr(
    base: &QuantumState,
    twist: &TwistingFamily,
    tol: f64,
) -> Result<(QuantumState, VerificationReport)> {
    let layout = SystemLayout::from_registers(base.registers())?;
    let support = index_set(layout.players() + 1, 0, layout.d())?;
    if let Some(missing) = support.members().iter().find(|k| twist.get(k).is_none()) {
        return Err(QcrError::InvalidTwist(format!(
            "no unitary for information string {missing:?}"
        )));
    }
    let shields: Vec<String> = (0..=layout.players())
        .flat_map(|p| layout.shield_labels(p))
        .collect();
    let shield_dim: usize = (0..=layout.players())
        .map(|p| layout.shield_dim(p))
        .product();
    if twist.dim() != shield_dim {
        return Err(QcrError::DimensionMismatch {
            expected: shield_dim,
            actual: twist.dim(),
        });
    }
    let state =
        crate::tensor::apply_controlled_unitary(base, &layout.info_labels(), &shields, |key| {
            twist.get(key)
        })?;
    let report = is_qcr(&state, tol)?;
    Ok((state, report))
}

/// The twist turning `build_ghz_qcr(2, 2, |000⟩)` into the three-party
/// example: `X` on the dealer shield for information strings 011 and 101.
pub fn example_twist() -> TwistingFamily {
    let id = ComplexMatrix::identity(8, 8);
    let x_dealer = crate::tensor::shift_unitary(2, 1).kronecker(&ComplexMatrix::identity(4, 4));
    let entries = index_set(3, 0, 2)
        .expect("valid")
        .members()
        .iter()
        .map(|k| {
            let u = if k == &[0, 1, 1] || k == &[1, 0, 1] {
                x_dealer.clone()
            } else {
                id.clone()
            };
            (k.clone(), u)
        })
        .collect::<Vec<_>>();
    TwistingFamily::new(entries).expect("permutation matrices are unitary")
}

/// A twist that copies the dealer digit into player 1's shield (shield
/// dimension `d`, all others trivial). The coalition holding player 1 can
/// read the dealer's digit, so condition (ii) fails.
pub fn dealer_leak_twist(d: usize, players: usize) -> Result<TwistingFamily> {
    let support = index_set(players + 1, 0, d)?;
    let entries = support
        .members()
        .iter()
        .map(|k| (k.clone(), crate::tensor::shift_unitary(d, k[0])))
        .collect::<Vec<_>>();
    TwistingFamily::new(entries)
}

/// `Σ_i |−i⟩⟨i|`, mapping the `|i, −i⟩` correlation convention to `|i, i⟩`
/// (and back) when applied to the player's information register.
pub fn negation_unitary(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |r, c| {
        if r == negate_mod(c, d) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Relabel player `k`'s information basis by `i ↦ −i`.
pub fn negate_player_digits(s: &QuantumState, k: usize) -> Result<QuantumState> {
    let layout = SystemLayout::from_registers(s.registers())?;
    if k == 0 || k > layout.players() {
        return Err(QcrError::InvalidPlayerSubset(format!("no player {k}")));
    }
    apply_unitary(
        s,
        &negation_unitary(layout.d()),
        &[layout.player_info(k).label.as_str()],
    )
}

/// Total dimension of a standard layout with the given shields.
pub fn required_dim(d: usize, players: usize, shield_dims: &[usize]) -> Option<usize> {
    let mut dim = 1usize;
    for _ in 0..=players {
        dim = dim.checked_mul(d)?;
    }
    shield_dims
        .iter()
        .try_fold(dim, |acc, &s| acc.checked_mul(s))
}

/// Reorder registers of `s` given in an arbitrary order into canonical order.
pub fn canonicalize(s: &QuantumState) -> Result<QuantumState> {
    let order = crate::tensor::canonical_order(s.registers());
    let mut out = permute_registers(s, &order)?;
    let mut regs = out.registers().to_vec();
    canonical_labels(&mut regs);
    out = out.with_registers(regs)?;
    Ok(out)
}
