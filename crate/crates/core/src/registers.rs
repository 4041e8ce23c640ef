//! Dealer/player register layouts and modular digit-sum index sets.

use crate::error::{QcrError, Result};
use crate::tensor::{Role, Subsystem};

/// All strings in `ℤ_d^k` whose digit sum is `target` mod `modulus`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    digits: usize,
    modulus: usize,
    target: usize,
    members: Vec<Vec<usize>>,
}

impl IndexSet {
    pub fn digits(&self) -> usize {
        self.digits
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Members in lexicographic order.
    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, s: &[usize]) -> bool {
        self.members
            .binary_search_by(|m| m.as_slice().cmp(s))
            .is_ok()
    }
}

/// Enumerate the index set of `k`-digit strings over `ℤ_d` with digit sum `t`.
///
/// The last digit is determined by the others, so there are `d^(k-1)` members.
pub fn index_set(k: usize, t: usize, d: usize) -> Result<IndexSet> {
    if d < 2 {
        return Err(QcrError::InvalidModulus(d));
    }
    if k == 0 {
        return Err(QcrError::InvalidArgument("digit count must be >= 1".into()));
    }
    if t >= d {
        return Err(QcrError::DigitOutOfRange {
            digit: t,
            modulus: d,
        });
    }
    let free = k - 1;
    let count = d
        .checked_pow(free as u32)
        .ok_or_else(|| QcrError::InvalidArgument("index set too large".into()))?;
    let mut members = Vec::with_capacity(count);
    let mut prefix = vec![0usize; free];
    for _ in 0..count {
        let partial: usize = prefix.iter().sum::<usize>() % d;
        let mut member = prefix.clone();
        member.push((t + d - partial) % d);
        members.push(member);
        for p in (0..free).rev() {
            prefix[p] += 1;
            if prefix[p] < d {
                break;
            }
            prefix[p] = 0;
        }
    }
    Ok(IndexSet {
        digits: k,
        modulus: d,
        target: t,
        members,
    })
}

pub fn digit_sum(s: &[usize], d: usize) -> Result<usize> {
    if d < 2 {
        return Err(QcrError::InvalidModulus(d));
    }
    let mut acc = 0usize;
    for &digit in s {
        if digit >= d {
            return Err(QcrError::DigitOutOfRange { digit, modulus: d });
        }
        acc = (acc + digit) % d;
    }
    Ok(acc)
}

/// Additive inverse in `ℤ_d`.
pub fn negate_mod(x: usize, d: usize) -> usize {
    (d - x % d) % d
}

pub fn dealer_info_label() -> String {
    "D.i".to_string()
}

pub fn player_info_label(k: usize) -> String {
    format!("A{k}.i")
}

fn party_name(party: usize) -> String {
    if party == 0 {
        "D".to_string()
    } else {
        format!("A{party}")
    }
}

/// Regenerate labels from roles: `D.i`, `D.s`, `A1.i`, `A1.s`, …; parties
/// with several shield registers get `.s1`, `.s2`, … Environment registers
/// become `E`, `E2`, …
pub fn canonical_labels(registers: &mut [Subsystem]) {
    let shield_count = |party: usize, regs: &[Subsystem]| {
        regs.iter()
            .filter(|r| r.role.is_shield() && r.role.party() == Some(party))
            .count()
    };
    let counts: Vec<(Role, usize)> = registers
        .iter()
        .map(|r| {
            (
                r.role,
                r.role.party().map_or(0, |p| shield_count(p, registers)),
            )
        })
        .collect();
    let mut seen_shields = std::collections::HashMap::<usize, usize>::new();
    let mut env_seen = 0usize;
    let mut other_seen = 0usize;
    for (r, (role, n_shields)) in registers.iter_mut().zip(counts) {
        r.label = match role {
            Role::DealerInfo | Role::PlayerInfo(_) => {
                format!("{}.i", party_name(role.party().unwrap()))
            }
            Role::DealerShield | Role::PlayerShield(_) => {
                let party = role.party().unwrap();
                let k = seen_shields.entry(party).or_insert(0);
                *k += 1;
                if n_shields == 1 {
                    format!("{}.s", party_name(party))
                } else {
                    format!("{}.s{}", party_name(party), k)
                }
            }
            Role::Environment => {
                env_seen += 1;
                if env_seen == 1 {
                    "E".to_string()
                } else {
                    format!("E{env_seen}")
                }
            }
            Role::Other => {
                other_seen += 1;
                format!("X{other_seen}")
            }
        };
    }
}

/// Validated dealer/player structure of a register list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemLayout {
    d: usize,
    players: usize,
    subsystems: Vec<Subsystem>,
}

impl SystemLayout {
    /// Check that `registers` hold one dealer and `N ≥ 1` players, each with
    /// exactly one information register of a common dimension `d ≥ 2`, any
    /// number of shield registers, and at most one environment register.
    pub fn from_registers(registers: &[Subsystem]) -> Result<Self> {
        let bad = |msg: String| Err(QcrError::InvalidLayout(msg));
        let dealer: Vec<&Subsystem> = registers
            .iter()
            .filter(|r| r.role == Role::DealerInfo)
            .collect();
        if dealer.len() != 1 {
            return bad(format!(
                "expected one dealer information register, found {}",
                dealer.len()
            ));
        }
        let d = dealer[0].dim;
        if d < 2 {
            return Err(QcrError::InvalidModulus(d));
        }
        let players = registers
            .iter()
            .filter_map(|r| match r.role {
                Role::PlayerInfo(k) | Role::PlayerShield(k) => Some(k),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        if players == 0 {
            return bad("layout has no players".into());
        }
        for k in 1..=players {
            let info: Vec<&Subsystem> = registers
                .iter()
                .filter(|r| r.role == Role::PlayerInfo(k))
                .collect();
            if info.len() != 1 {
                return bad(format!(
                    "player {k} needs exactly one information register, found {}",
                    info.len()
                ));
            }
            if info[0].dim != d {
                return bad(format!(
                    "player {k} information dimension {} differs from dealer's {d}",
                    info[0].dim
                ));
            }
        }
        if registers
            .iter()
            .any(|r| matches!(r.role, Role::PlayerInfo(0) | Role::PlayerShield(0)))
        {
            return bad("player indices start at 1".into());
        }
        if registers
            .iter()
            .filter(|r| r.role == Role::Environment)
            .count()
            > 1
        {
            return bad("at most one environment register".into());
        }
        if let Some(r) = registers.iter().find(|r| r.role == Role::Other) {
            return bad(format!("register `{}` has no dealer/player role", r.label));
        }
        Ok(Self {
            d,
            players,
            subsystems: registers.to_vec(),
        })
    }

    /// Canonical layout `D̄ D̃ Ā₁ Ã₁ … Ā_N Ã_N`.
    ///
    /// `shield_dims` lists one shield dimension per party (dealer first);
    /// an empty slice omits shield registers entirely. Dimension-1 shields
    /// are kept as registers.
    pub fn standard(d: usize, players: usize, shield_dims: &[usize]) -> Result<Self> {
        if d < 2 {
            return Err(QcrError::InvalidModulus(d));
        }
        if players == 0 {
            return Err(QcrError::InvalidLayout("need at least one player".into()));
        }
        if !shield_dims.is_empty() && shield_dims.len() != players + 1 {
            return Err(QcrError::InvalidLayout(format!(
                "{} shield dimensions given for {} parties",
                shield_dims.len(),
                players + 1
            )));
        }
        if shield_dims.contains(&0) {
            return Err(QcrError::InvalidLayout("shield dimension 0".into()));
        }
        let mut regs = Vec::new();
        for party in 0..=players {
            let (info, shield) = if party == 0 {
                (Role::DealerInfo, Role::DealerShield)
            } else {
                (Role::PlayerInfo(party), Role::PlayerShield(party))
            };
            regs.push(Subsystem::new("", info, d));
            if let Some(&s) = shield_dims.get(party) {
                regs.push(Subsystem::new("", shield, s));
            }
        }
        canonical_labels(&mut regs);
        Self::from_registers(&regs)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn into_subsystems(self) -> Vec<Subsystem> {
        self.subsystems
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(|r| r.dim).product()
    }

    pub fn dealer_info(&self) -> &Subsystem {
        self.subsystems
            .iter()
            .find(|r| r.role == Role::DealerInfo)
            .expect("validated layout")
    }

    /// Information labels: dealer first, then players 1..N.
    pub fn info_labels(&self) -> Vec<String> {
        let mut out = vec![self.dealer_info().label.clone()];
        out.extend((1..=self.players).map(|k| self.player_info(k).label.clone()));
        out
    }

    pub fn player_info(&self, k: usize) -> &Subsystem {
        self.subsystems
            .iter()
            .find(|r| r.role == Role::PlayerInfo(k))
            .expect("validated layout")
    }

    /// Every register owned by party `party` (0 = dealer).
    pub fn party_labels(&self, party: usize) -> Vec<String> {
        self.subsystems
            .iter()
            .filter(|r| r.role.party() == Some(party))
            .map(|r| r.label.clone())
            .collect()
    }

    pub fn shield_labels(&self, party: usize) -> Vec<String> {
        self.subsystems
            .iter()
            .filter(|r| r.role.is_shield() && r.role.party() == Some(party))
            .map(|r| r.label.clone())
            .collect()
    }

    pub fn environment_labels(&self) -> Vec<String> {
        self.subsystems
            .iter()
            .filter(|r| r.role == Role::Environment)
            .map(|r| r.label.clone())
            .collect()
    }

    /// Product of all shield dimensions of `party`.
    pub fn shield_dim(&self, party: usize) -> usize {
        self.subsystems
            .iter()
            .filter(|r| r.role.is_shield() && r.role.party() == Some(party))
            .map(|r| r.dim)
            .product()
    }
}

/// All `size`-element subsets of players `1..=players`, lexicographic.
pub fn player_subsets(players: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(
        start: usize,
        players: usize,
        size: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for k in start..=players {
            cur.push(k);
            rec(k + 1, players, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if size <= players {
        rec(1, players, size, &mut Vec::new(), &mut out);
    }
    out
}

/// Convenience wrapper over [`SystemLayout::standard`].
pub fn standard_layout(d: usize, players: usize, shield_dims: &[usize]) -> Result<SystemLayout> {
    SystemLayout::standard(d, players, shield_dims)
}
