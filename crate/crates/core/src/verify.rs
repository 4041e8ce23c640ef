//! Operational certification of resource states.
//!
//! A state is certified when both measurable security conditions hold:
//!
//! * **condition (i)**: measuring every information register in the
//!   computational basis yields the uniform distribution on the digit-sum-0
//!   index set, i.e. probability `1/d^N` on each member and nothing elsewhere;
//! * **condition (ii)**: for every coalition of dishonest players, the joint
//!   state of the coalition and an eavesdropper holding a purification does
//!   not depend on the dealer's measured digit.
//!
//! Only coalitions of size `N-1` are checked by default. Smaller coalitions
//! hold partial traces of larger ones and trace distance cannot grow under
//! partial trace, so they pass whenever the maximal ones do. The empty
//! coalition (eavesdropper alone) is covered the same way, except at `N = 1`
//! where it is the maximal coalition itself.
//!
//! The dealer's shield and every honest player's registers are traced out of
//! the adversary state. Environment registers already present in the input
//! are treated as adversarial.

use serde::{Deserialize, Serialize};

use crate::error::{QcrError, Result};
use crate::registers::{index_set, player_subsets, SystemLayout};
use crate::tensor::{
    outcome_distribution, purify, trace_norm, ComplexMatrix, QuantumState, RegisterSplit, Role,
    StateData,
};

pub const DEFAULT_TOL: f64 = 1e-9;
/// Recommended tolerance after protocol transformations.
pub const PROTOCOL_TOL: f64 = 1e-7;
/// Dealer outcomes with probability at or below this are not compared.
pub const SKIP_PROBABILITY: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub tol: f64,
    /// Check every coalition size from 0 to `N-1`, not just the maximal ones.
    pub exhaustive: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            exhaustive: false,
        }
    }
}

impl VerifyOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Dishonest players and their (nonempty) honest complement, 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoalitionSpec {
    pub dishonest: Vec<usize>,
    pub honest: Vec<usize>,
}

impl CoalitionSpec {
    pub fn new(players: usize, dishonest: &[usize]) -> Result<Self> {
        let mut dishonest = dishonest.to_vec();
        dishonest.sort_unstable();
        dishonest.dedup();
        if let Some(&k) = dishonest.iter().find(|&&k| k == 0 || k > players) {
            return Err(QcrError::InvalidPlayerSubset(format!(
                "player {k} outside 1..={players}"
            )));
        }
        let honest: Vec<usize> = (1..=players).filter(|k| !dishonest.contains(k)).collect();
        if honest.is_empty() {
            return Err(QcrError::InvalidPlayerSubset(
                "at least one player must be honest".into(),
            ));
        }
        Ok(Self { dishonest, honest })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbability {
    pub digits: Vec<usize>,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionIReport {
    pub pass: bool,
    /// max over the digit-sum-0 set of `|p_I - 1/d^N|`
    pub max_deviation: f64,
    pub off_support_mass: f64,
    /// Outcomes with nonzero probability, lexicographic.
    pub distribution: Vec<OutcomeProbability>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalitionReport {
    pub coalition: CoalitionSpec,
    pub pass: bool,
    /// Largest pairwise trace distance between adversary states.
    pub max_distance: f64,
    /// Dealer outcomes with nonzero probability that were compared.
    pub dealer_outcomes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionIIReport {
    pub pass: bool,
    pub max_distance: f64,
    pub coalitions: Vec<CoalitionReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub d: usize,
    pub players: usize,
    pub condition_i: ConditionIReport,
    pub condition_ii: ConditionIIReport,
    pub verdict: bool,
    pub tolerance: f64,
}

impl VerificationReport {
    /// Names of the conditions that failed.
    pub fn failing_conditions(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.condition_i.pass {
            out.push("condition (i)");
        }
        if !self.condition_ii.pass {
            out.push("condition (ii)");
        }
        out
    }
}

/// Unbiased, perfectly correlated information digits.
pub fn check_condition_i(s: &QuantumState, tol: f64) -> Result<ConditionIReport> {
    let layout = SystemLayout::from_registers(s.registers())?;
    let (d, n) = (layout.d(), layout.players());
    let probs = outcome_distribution(s, &layout.info_labels())?;
    let support = index_set(n + 1, 0, d)?;
    let expected = 1.0 / (d as f64).powi(n as i32);

    let dims = vec![d; n + 1];
    let mut max_deviation = 0.0f64;
    let mut off_support_mass = 0.0f64;
    let mut distribution = Vec::new();
    for (k, &p) in probs.iter().enumerate() {
        let digits = crate::tensor::index_to_digits(k, &dims);
        if support.contains(&digits) {
            max_deviation = max_deviation.max((p - expected).abs());
        } else {
            off_support_mass += p.max(0.0);
        }
        if p > crate::tensor::ZERO_PROBABILITY {
            distribution.push(OutcomeProbability {
                digits,
                probability: p,
            });
        }
    }
    Ok(ConditionIReport {
        pass: max_deviation <= tol && off_support_mass <= tol,
        max_deviation,
        off_support_mass,
        distribution,
    })
}

/// Coalitions examined for a given player count.
pub fn coalitions(players: usize, exhaustive: bool) -> Vec<CoalitionSpec> {
    let sizes: Vec<usize> = if exhaustive {
        (0..players).collect()
    } else {
        vec![players - 1]
    };
    sizes
        .into_iter()
        .flat_map(|size| player_subsets(players, size))
        .map(|dishonest| CoalitionSpec::new(players, &dishonest).expect("proper subset"))
        .collect()
}

/// Adversary states conditioned on each dealer digit, for one coalition.
///
/// Returns `(dealer digit, probability, normalized state)` for every digit
/// whose probability exceeds `SKIP_PROBABILITY`. `purified` must be a pure
/// state on the layout's registers plus environment.
pub fn adversary_states(
    purified: &QuantumState,
    layout: &SystemLayout,
    coalition: &CoalitionSpec,
) -> Result<Vec<(usize, f64, ComplexMatrix)>> {
    let StateData::Pure(psi) = purified.data() else {
        return Err(QcrError::InvalidArgument(
            "adversary states need a purification".into(),
        ));
    };
    let d = layout.d();
    let dealer = purified.position(&layout.dealer_info().label)?;
    let adversary: Vec<usize> = purified
        .registers()
        .iter()
        .enumerate()
        .filter(|(_, r)| match r.role {
            Role::PlayerInfo(k) | Role::PlayerShield(k) => coalition.dishonest.contains(&k),
            Role::Environment => true,
            _ => false,
        })
        .map(|(p, _)| p)
        .collect();
    let mut selected = vec![dealer];
    selected.extend(&adversary);
    let split = RegisterSplit::new(&purified.dims(), &selected);
    let adv_dim = split.sel_dim / d;

    let mut out = Vec::new();
    for i in 0..d {
        let block = ComplexMatrix::from_fn(adv_dim, split.rest_dim, |a, r| {
            psi[split.flat(i * adv_dim + a, r)]
        });
        let gamma = &block * block.adjoint();
        let p = gamma.trace().re;
        if p <= SKIP_PROBABILITY {
            continue;
        }
        out.push((i, p, gamma.unscale(p)));
    }
    Ok(out)
}

/// Dealer-digit independence of every (maximal, or all) coalition's view.
pub fn check_condition_ii(s: &QuantumState, opts: &VerifyOptions) -> Result<ConditionIIReport> {
    let layout = SystemLayout::from_registers(s.registers())?;
    let purified = purify(s)?;
    let mut reports = Vec::new();
    for coalition in coalitions(layout.players(), opts.exhaustive) {
        let states = adversary_states(&purified, &layout, &coalition)?;
        let mut max_distance = 0.0f64;
        for (a, (_, _, ga)) in states.iter().enumerate() {
            for (_, _, gb) in &states[a + 1..] {
                max_distance = max_distance.max(trace_norm(&(ga - gb))?);
            }
        }
        reports.push(CoalitionReport {
            coalition,
            pass: max_distance <= opts.tol,
            max_distance,
            dealer_outcomes: states.iter().map(|(i, _, _)| *i).collect(),
        });
    }
    let max_distance = reports.iter().map(|c| c.max_distance).fold(0.0, f64::max);
    Ok(ConditionIIReport {
        pass: reports.iter().all(|c| c.pass),
        max_distance,
        coalitions: reports,
    })
}

pub fn is_qcr(s: &QuantumState, tol: f64) -> Result<VerificationReport> {
    is_qcr_with(s, &VerifyOptions::with_tol(tol))
}

pub fn is_qcr_with(s: &QuantumState, opts: &VerifyOptions) -> Result<VerificationReport> {
    let layout = SystemLayout::from_registers(s.registers())?;
    let condition_i = check_condition_i(s, opts.tol)?;
    let condition_ii = check_condition_ii(s, opts)?;
    Ok(VerificationReport {
        d: layout.d(),
        players: layout.players(),
        verdict: condition_i.pass && condition_ii.pass,
        condition_i,
        condition_ii,
        tolerance: opts.tol,
    })
}
