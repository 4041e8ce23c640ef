//! Seeded random unitaries, density matrices and separable states.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tensor::{ComplexMatrix, ComplexVector};

pub type StateRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> StateRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-distributed unitary from the QR factorization of a Ginibre matrix,
/// with the phases of `R`'s diagonal folded back into `Q`.
pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let qr = ginibre(n, n, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for c in 0..n {
        let rc = r[(c, c)];
        let phase = if rc.norm() > 0.0 {
            rc / rc.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for row in 0..n {
            q[(row, c)] *= phase;
        }
    }
    q
}

pub fn random_pure(n: usize, rng: &mut impl Rng) -> ComplexVector {
    let v = ComplexVector::from_fn(n, |_, _| gaussian(rng));
    let norm = v.norm();
    v.unscale(norm)
}

/// `G G† / tr(G G†)` with `G` an `n × rank` Ginibre matrix.
pub fn random_density(n: usize, rank: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(n, rank.clamp(1, n), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let mut m = m.unscale(tr);
    // exact Hermiticity
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in 0..i {
            m[(i, j)] = m[(j, i)].conj();
        }
    }
    m
}

/// Random mixture of `terms` product states `|a⟩⟨a| ⊗ |b⟩⟨b|` on
/// `dim_a × dim_b`; separable by construction.
pub fn random_separable(
    dim_a: usize,
    dim_b: usize,
    terms: usize,
    rng: &mut impl Rng,
) -> ComplexMatrix {
    let n = dim_a * dim_b;
    let mut out = ComplexMatrix::zeros(n, n);
    let weights: Vec<f64> = (0..terms.max(1))
        .map(|_| rng.random::<f64>() + 1e-3)
        .collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let a = random_pure(dim_a, rng);
        let b = random_pure(dim_b, rng);
        let v = a.kronecker(&b);
        out += (&v * v.adjoint()).scale(w / total);
    }
    for i in 0..n {
        out[(i, i)].im = 0.0;
        for j in 0..i {
            out[(i, j)] = out[(j, i)].conj();
        }
    }
    out
}
