//! Small reference states used as negative controls and PPT examples.

use num_complex::Complex64;
use rand::Rng;

use crate::analysis::merge_dealers;
use crate::error::{QcrError, Result};
use crate::random::random_separable;
use crate::registers::{negate_mod, standard_layout};
use crate::tensor::{basis_state, ComplexMatrix, ComplexVector, QuantumState};

fn check_modulus(d: usize) -> Result<()> {
    if d < 2 {
        Err(QcrError::InvalidModulus(d))
    } else {
        Ok(())
    }
}

/// `|0⟩_D |0⟩_A`.
pub fn product_state(d: usize) -> Result<QuantumState> {
    check_modulus(d)?;
    basis_state(standard_layout(d, 1, &[])?.into_subsystems(), &[0, 0])
}

/// `√(1/3)|00⟩ + √(2/3)|11⟩`: perfectly correlated qubits with a 1/6 bias.
pub fn biased_pure_state() -> QuantumState {
    let mut v = ComplexVector::zeros(4);
    v[0] = Complex64::new((1.0f64 / 3.0).sqrt(), 0.0);
    v[3] = Complex64::new((2.0f64 / 3.0).sqrt(), 0.0);
    let regs = standard_layout(2, 1, &[]).expect("valid").into_subsystems();
    QuantumState::pure(regs, v).expect("normalized")
}

/// `(1/d) Σ_i |i, −i⟩⟨i, −i|`: correct statistics, no privacy.
pub fn classically_correlated(d: usize) -> Result<QuantumState> {
    check_modulus(d)?;
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        let k = i * d + negate_mod(i, d);
        m[(k, k)] = Complex64::new(1.0 / d as f64, 0.0);
    }
    QuantumState::density(standard_layout(d, 1, &[])?.into_subsystems(), m)
}

/// Random mixture of product states on one qudit dealer register and one
/// player register.
pub fn random_separable_pair(d: usize, terms: usize, rng: &mut impl Rng) -> Result<QuantumState> {
    check_modulus(d)?;
    let m = random_separable(d, d, terms, rng);
    QuantumState::density(standard_layout(d, 1, &[])?.into_subsystems(), m)
}

/// `ρ_{D₁A₁} ⊗ … ⊗ ρ_{D_NA_N}` with separable random factors, read as one
/// dealer `D₁…D_N` and `N` players. PPT across every dealer cut.
pub fn separable_product(
    d: usize,
    players: usize,
    terms: usize,
    rng: &mut impl Rng,
) -> Result<QuantumState> {
    if players == 0 {
        return Err(QcrError::InvalidLayout("need at least one player".into()));
    }
    let factors = (0..players)
        .map(|_| random_separable_pair(d, terms, rng))
        .collect::<Result<Vec<_>>>()?;
    merge_dealers(&factors)
}
