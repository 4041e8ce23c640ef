//! Checks against independent hand-rolled oracles.

use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use qcr_core::analysis::{ppt_check, CutSpec, PPT_TOL};
use qcr_core::construct::{
    build_example_state, build_ghz_qcr, build_twisted_qcr, dealer_leak_twist, example_twist,
    maximally_entangled, ShieldSeed,
};
use qcr_core::fixtures::classically_correlated;
use qcr_core::protocols::{compose, reduce, BranchSelection, ProtocolOptions};
use qcr_core::registers::index_set;
use qcr_core::tensor::{partial_transpose, ComplexMatrix};
use qcr_core::verify::{is_qcr, DEFAULT_TOL};

/// Brute-force enumeration of digit strings with the given sum.
fn brute_index_set(k: usize, t: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for n in 0..d.pow(k as u32) {
        let mut digits = vec![0; k];
        let mut m = n;
        for slot in digits.iter_mut().rev() {
            *slot = m % d;
            m /= d;
        }
        if digits.iter().sum::<usize>() % d == t {
            out.push(digits);
        }
    }
    out
}

#[test]
fn index_sets_match_enumeration() {
    for d in 2..=3 {
        for k in 1..=5 {
            let mut union = Vec::new();
            for t in 0..d {
                let set = index_set(k, t, d).unwrap();
                let brute = brute_index_set(k, t, d);
                assert_eq!(set.members(), brute.as_slice(), "k={k} t={t} d={d}");
                assert_eq!(set.len(), d.pow(k as u32 - 1));
                union.extend(brute);
            }
            union.sort();
            union.dedup();
            assert_eq!(union.len(), d.pow(k as u32));
        }
    }
}

#[test]
fn bell_partial_transpose_matches_swap_spectrum() {
    // The partial transpose of |Φ⟩⟨Φ| is SWAP/2, eigenvalues {1/2, 1/2, 1/2, -1/2}.
    let s = maximally_entangled(2).unwrap();
    let pt = partial_transpose(&s.to_density(), &["A1.i"]).unwrap();
    let mut swap = ComplexMatrix::zeros(4, 4);
    for (r, c) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
        swap[(r, c)] = Complex64::new(0.5, 0.0);
    }
    // Bell pair is |00⟩+|11⟩ under the |i,−i⟩ convention for d=2.
    let max_diff = (pt - swap).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(max_diff < 1e-15);
    let cut = CutSpec::with_side_two(&s, &["A1.i", "A1.s"]).unwrap();
    let (min, ppt) = ppt_check(&s, &cut, PPT_TOL).unwrap();
    assert!(!ppt);
    assert_abs_diff_eq!(min, -0.5, epsilon = 1e-12);
}

#[test]
fn twisting_the_ghz_state_gives_the_example() {
    let base = build_ghz_qcr(2, 2, &ShieldSeed::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap()).unwrap();
    let (twisted, report) = build_twisted_qcr(&base, &example_twist(), DEFAULT_TOL).unwrap();
    assert!(report.verdict);
    assert!(twisted.max_entry_diff(&build_example_state()).unwrap() < 1e-15);
}

#[test]
fn leaking_twist_is_rejected() {
    // With one player the copy sits with the honest party and nothing leaks.
    let base = build_ghz_qcr(2, 1, &ShieldSeed::basis(vec![1, 2], &[0, 0]).unwrap()).unwrap();
    let (_, report) =
        build_twisted_qcr(&base, &dealer_leak_twist(2, 1).unwrap(), DEFAULT_TOL).unwrap();
    assert!(report.verdict);
    for (d, n) in [(2, 2), (3, 2), (2, 3)] {
        let mut dims = vec![1; n + 1];
        dims[1] = d;
        let base = build_ghz_qcr(d, n, &ShieldSeed::basis(dims, &vec![0; n + 1]).unwrap()).unwrap();
        let (_, report) =
            build_twisted_qcr(&base, &dealer_leak_twist(d, n).unwrap(), DEFAULT_TOL).unwrap();
        assert!(report.condition_i.pass);
        assert!(!report.condition_ii.pass);
        assert_abs_diff_eq!(report.condition_ii.max_distance, 2.0, epsilon = 1e-9);
    }
}

#[test]
fn classical_purification_oracle() {
    // Purification Σ_i √(1/d)|i,−i⟩|e_i⟩: adversary states |e_i⟩⟨e_i| are orthogonal.
    for d in 2..=4 {
        let r = is_qcr(&classically_correlated(d).unwrap(), DEFAULT_TOL).unwrap();
        assert!(r.condition_i.pass);
        assert_abs_diff_eq!(r.condition_ii.max_distance, 2.0, epsilon = 1e-9);
    }
}

#[test]
fn reducing_ghz_drops_a_player() {
    let opts = ProtocolOptions::default();
    let big = build_ghz_qcr(2, 3, &ShieldSeed::trivial(4)).unwrap();
    let small = build_ghz_qcr(2, 2, &ShieldSeed::trivial(3)).unwrap();
    let out = reduce(&big, &[3], &BranchSelection::All, &opts).unwrap();
    assert_eq!(out.len(), 2);
    for b in &out {
        assert_abs_diff_eq!(b.probability, 0.5, epsilon = 1e-12);
        assert_eq!(b.correction_applied, b.beta != 0);
        assert!(b.state.max_entry_diff(&small).unwrap() < 1e-12);
    }
}

#[test]
fn example_reduction_keeps_two_branches() {
    let opts = ProtocolOptions::default();
    let out = reduce(&build_example_state(), &[2], &BranchSelection::All, &opts).unwrap();
    assert_eq!(out.len(), 2);
    for b in out {
        assert!(is_qcr(&b.state, 1e-7).unwrap().verdict);
    }
}

#[test]
fn composing_bell_pairs_gives_ghz() {
    let me = maximally_entangled(2).unwrap();
    let (c, record) = compose(&me, &me, &ProtocolOptions::default()).unwrap();
    assert_eq!(record.unitary, "cX");
    assert!((c.purity() - 1.0).abs() < 1e-12);
    let r = is_qcr(&c, 1e-7).unwrap();
    assert!(r.verdict);
    assert_eq!(r.players, 2);
    // After the controlled addition the second dealer digit equals player 2's
    // negated digit: a GHZ state with the shield holding a copy of it.
    for o in &r.condition_i.distribution {
        assert_abs_diff_eq!(o.probability, 0.25, epsilon = 1e-12);
    }
}

#[test]
fn composition_rejects_mismatched_moduli() {
    let a = maximally_entangled(2).unwrap();
    let b = maximally_entangled(3).unwrap();
    assert!(compose(&a, &b, &ProtocolOptions::default()).is_err());
}
