//! Partial-transpose tests across bipartite cuts, and trace distance.

use serde::{Deserialize, Serialize};

use crate::error::{QcrError, Result};
use crate::registers::{player_subsets, SystemLayout};
use crate::tensor::{
    min_eigenvalue, partial_trace, partial_transpose, tensor_product_capped, trace_norm,
    QuantumState, Role, Subsystem, DEFAULT_DIM_CAP,
};

/// Default PPT tolerance on the minimum eigenvalue of the partial transpose.
pub const PPT_TOL: f64 = 1e-9;

/// Bipartition of the non-environment registers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutSpec {
    pub side_one: Vec<String>,
    pub side_two: Vec<String>,
}

impl CutSpec {
    /// Cut with `side_two` as given and everything else (except environment)
    /// on side one.
    pub fn with_side_two<S: AsRef<str>>(s: &QuantumState, side_two: &[S]) -> Result<Self> {
        let two: Vec<String> = side_two.iter().map(|l| l.as_ref().to_string()).collect();
        for l in &two {
            s.position(l)?;
        }
        let one = s.labels_where(|r| r.role != Role::Environment && !two.contains(&r.label));
        let cut = Self {
            side_one: one,
            side_two: two,
        };
        cut.validate(s)?;
        Ok(cut)
    }

    pub fn validate(&self, s: &QuantumState) -> Result<()> {
        if self.side_one.is_empty() || self.side_two.is_empty() {
            return Err(QcrError::InvalidCut("both sides must be nonempty".into()));
        }
        let mut all: Vec<&String> = self.side_one.iter().chain(&self.side_two).collect();
        let n = all.len();
        all.sort();
        all.dedup();
        if all.len() != n {
            return Err(QcrError::InvalidCut("sides overlap".into()));
        }
        for l in &all {
            let p = s.position(l)?;
            if s.registers()[p].role == Role::Environment {
                return Err(QcrError::InvalidCut(format!(
                    "environment register `{l}` in cut"
                )));
            }
        }
        let expected = s
            .registers()
            .iter()
            .filter(|r| r.role != Role::Environment)
            .count();
        if all.len() != expected {
            return Err(QcrError::InvalidCut(
                "cut does not cover every non-environment register".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutResult {
    pub cut: CutSpec,
    pub min_eigenvalue: f64,
    pub ppt: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PptReport {
    pub cuts: Vec<CutResult>,
    pub all_ppt: bool,
    pub tolerance: f64,
}

fn without_environment(s: &QuantumState) -> Result<QuantumState> {
    let env = s.labels_where(|r| r.role == Role::Environment);
    if env.is_empty() {
        Ok(s.to_density())
    } else {
        partial_trace(s, &env)
    }
}

/// Minimum eigenvalue of the partial transpose over `cut.side_two`, and
/// whether it is at least `-tol`.
pub fn ppt_check(s: &QuantumState, cut: &CutSpec, tol: f64) -> Result<(f64, bool)> {
    cut.validate(s)?;
    let rho = without_environment(s)?;
    let pt = partial_transpose(&rho, &cut.side_two)?;
    let min = min_eigenvalue(&pt);
    Ok((min, min >= -tol))
}

pub fn ppt_report(s: &QuantumState, cuts: Vec<CutSpec>, tol: f64) -> Result<PptReport> {
    let cuts = cuts
        .into_iter()
        .map(|cut| {
            let (min_eigenvalue, ppt) = ppt_check(s, &cut, tol)?;
            Ok(CutResult {
                cut,
                min_eigenvalue,
                ppt,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PptReport {
        all_ppt: cuts.iter().all(|c| c.ppt),
        cuts,
        tolerance: tol,
    })
}

/// Cuts `{dealer ∪ P₁ : P₂}` for every nonempty player subset `P₂`; the
/// subset of all players gives the `{dealer : players}` cut.
pub fn dealer_cuts(s: &QuantumState) -> Result<Vec<CutSpec>> {
    let layout = SystemLayout::from_registers(s.registers())?;
    let mut cuts = Vec::new();
    for size in 1..=layout.players() {
        for p2 in player_subsets(layout.players(), size) {
            let two: Vec<String> = p2.iter().flat_map(|&k| layout.party_labels(k)).collect();
            cuts.push(CutSpec::with_side_two(s, &two)?);
        }
    }
    Ok(cuts)
}

pub fn all_dealer_cuts_ppt(s: &QuantumState, tol: f64) -> Result<PptReport> {
    ppt_report(s, dealer_cuts(s)?, tol)
}

/// `‖a − b‖₁`, in `[0, 2]` for states.
pub fn trace_distance(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(QcrError::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    trace_norm(&(a.density_matrix() - b.density_matrix()))
}

/// Tensor product of two-party states `ρ_{D_1A_1} ⊗ … ⊗ ρ_{D_NA_N}` viewed
/// as one dealer `D = D_1…D_N` and players `A_1…A_N`. The first dealer's
/// information register remains the dealer's information part; the other
/// dealer registers become dealer shields.
pub fn merge_dealers(factors: &[QuantumState]) -> Result<QuantumState> {
    let mut acc: Option<QuantumState> = None;
    for (idx, f) in factors.iter().enumerate() {
        let layout = SystemLayout::from_registers(f.registers())?;
        if layout.players() != 1 {
            return Err(QcrError::InvalidArgument(format!(
                "factor {idx} is not a two-party state"
            )));
        }
        let regs = f
            .registers()
            .iter()
            .map(|r| {
                let role = match r.role {
                    Role::DealerInfo if idx > 0 => Role::DealerShield,
                    Role::PlayerInfo(_) => Role::PlayerInfo(idx + 1),
                    Role::PlayerShield(_) => Role::PlayerShield(idx + 1),
                    other => other,
                };
                Subsystem::new(format!("f{idx}:{}", r.label), role, r.dim)
            })
            .collect();
        let tagged = f.with_registers(regs)?;
        acc = Some(match acc {
            None => tagged,
            Some(a) => tensor_product_capped(&a, &tagged, DEFAULT_DIM_CAP)?,
        });
    }
    let joint = acc.ok_or_else(|| QcrError::InvalidArgument("no factors".into()))?;
    crate::construct::canonicalize(&joint)
}
