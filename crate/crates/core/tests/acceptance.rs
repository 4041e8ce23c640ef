//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines are always shown.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use qcr_core::analysis::{all_dealer_cuts_ppt, ppt_check, trace_distance, CutSpec, PPT_TOL};
use qcr_core::construct::{
    build_example_state, build_ghz_qcr, build_twisted_qcr, dealer_leak_twist, maximally_entangled,
    random_private_state, ShieldSeed, TwistingFamily,
};
use qcr_core::fixtures::{
    biased_pure_state, classically_correlated, product_state, separable_product,
};
use qcr_core::protocols::{compose, expand_from_private, reduce, BranchSelection, ProtocolOptions};
use qcr_core::random::{random_density, seeded_rng};
use qcr_core::registers::{index_set, player_subsets, SystemLayout};
use qcr_core::statefile::{state_from_json, state_to_json};
use qcr_core::tensor::{
    digits_to_index, partial_trace, purify, tensor_product, trace_norm, ComplexMatrix,
    QuantumState, Role, Subsystem,
};
use qcr_core::verify::{is_qcr, is_qcr_with, VerifyOptions};
use rand::Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Duration);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn example_fixture() -> Check {
    let s = build_example_state();
    // The four kets of the three-party example, in canonical order
    // (D.i, D.s, A1.i, A1.s, A2.i, A2.s).
    const KETS: [[usize; 6]; 4] = [
        [0, 0, 0, 0, 0, 0],
        [0, 1, 1, 0, 1, 0],
        [1, 1, 0, 0, 1, 0],
        [1, 0, 1, 0, 0, 0],
    ];
    let mut expected = ComplexMatrix::zeros(64, 1);
    for k in KETS {
        expected[(digits_to_index(&k, &[2; 6]), 0)] = Complex64::new(0.5, 0.0);
    }
    let rho = s.density_matrix();
    let oracle = &expected * expected.adjoint();
    let diff = (rho - oracle).iter().map(|z| z.norm()).fold(0.0, f64::max);
    ensure(
        diff == 0.0,
        format!("state differs from fixture amplitudes by {diff:e}"),
    )?;

    let r = is_qcr(&s, 1e-9).map_err(err)?;
    let support: Vec<Vec<usize>> = r
        .condition_i
        .distribution
        .iter()
        .map(|o| o.digits.clone())
        .collect();
    ensure(
        support == [vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]],
        format!("support {support:?}"),
    )?;
    ensure(
        r.condition_i
            .distribution
            .iter()
            .all(|o| o.probability == 0.25),
        "probabilities not exactly 1/4",
    )?;
    ensure(
        r.condition_i.max_deviation == 0.0,
        format!("deviation {}", r.condition_i.max_deviation),
    )?;
    ensure(
        r.condition_ii.max_distance <= 1e-9,
        format!("distance {:e}", r.condition_ii.max_distance),
    )?;
    ensure(r.verdict, "verdict false")?;
    Ok(format!(
        "deviation {}, max coalition distance {:.1e}",
        r.condition_i.max_deviation, r.condition_ii.max_distance
    ))
}

fn private_family() -> Check {
    let mut passed = 0;
    for d in [2usize, 3] {
        for i in 0..20u64 {
            let mut rng = seeded_rng(1000 * d as u64 + i);
            let ds = rng.random_range(1..=2);
            let ps = rng.random_range(1..=3);
            let s = random_private_state(d, ds, ps, &mut rng).map_err(err)?;
            let r = is_qcr(&s, 1e-9).map_err(err)?;
            ensure(
                r.verdict,
                format!(
                    "d={d} seed {i} (shields {ds}x{ps}) fails: {:?}",
                    r.failing_conditions()
                ),
            )?;
            passed += 1;
        }
    }
    Ok(format!("{passed}/40 random private states certified"))
}

fn reduction_closure() -> Check {
    let trivial = |n| ShieldSeed::trivial(n);
    let fixtures = vec![
        ("example", build_example_state()),
        ("ghz(2,2)", build_ghz_qcr(2, 2, &trivial(3)).map_err(err)?),
        ("ghz(2,3)", build_ghz_qcr(2, 3, &trivial(4)).map_err(err)?),
        ("ghz(3,2)", build_ghz_qcr(3, 2, &trivial(3)).map_err(err)?),
    ];
    let opts = ProtocolOptions::default();
    let mut branches = 0;
    let mut failing = Vec::new();
    for (name, s) in &fixtures {
        let n = SystemLayout::from_registers(s.registers())
            .map_err(err)?
            .players();
        for size in 1..n {
            for keep in player_subsets(n, size) {
                let measured: Vec<usize> = (1..=n).filter(|k| !keep.contains(k)).collect();
                for out in reduce(s, &measured, &BranchSelection::All, &opts).map_err(err)? {
                    branches += 1;
                    let r = is_qcr(&out.state, 1e-7).map_err(err)?;
                    if !r.verdict {
                        failing.push(format!("{name} keep {keep:?} branch {:?}", out.measured));
                    }
                }
            }
        }
    }
    ensure(failing.is_empty(), format!("failing branches: {failing:?}"))?;
    Ok(format!("{branches} branches, 0 failing"))
}

fn composition_closure() -> Check {
    let mut rng = seeded_rng(44);
    let inputs = vec![
        ("maximally entangled", maximally_entangled(2).map_err(err)?),
        (
            "random private",
            random_private_state(2, 2, 2, &mut rng).map_err(err)?,
        ),
        ("example", build_example_state()),
    ];
    let opts = ProtocolOptions::default();
    let mut pairs = 0;
    for (na, a) in &inputs {
        for (nb, b) in &inputs {
            let (c, _) = compose(a, b, &opts).map_err(err)?;
            let r = is_qcr(&c, 1e-7).map_err(err)?;
            ensure(
                r.verdict,
                format!("{na} + {nb} fails {:?}", r.failing_conditions()),
            )?;
            pairs += 1;
        }
    }
    let me = maximally_entangled(2).map_err(err)?;
    let expanded = expand_from_private(&[me.clone(), me.clone(), me], &opts).map_err(err)?;
    let layout = SystemLayout::from_registers(expanded.registers()).map_err(err)?;
    ensure(
        layout.players() == 3,
        format!("{} players after expansion", layout.players()),
    )?;
    let r = is_qcr(&expanded, 1e-7).map_err(err)?;
    let support = index_set(4, 0, 2).map_err(err)?;
    let dist = &r.condition_i.distribution;
    ensure(dist.len() == 8, format!("{} outcomes", dist.len()))?;
    ensure(
        dist.iter()
            .all(|o| support.contains(&o.digits) && (o.probability - 0.125).abs() <= 1e-12),
        "distribution is not 1/8 on the digit-sum-0 set",
    )?;
    ensure(r.verdict, "expanded state fails")?;
    Ok(format!(
        "{pairs} ordered pairs certified; expansion gives 4 parties, uniform 1/8"
    ))
}

fn negative_controls() -> Check {
    let product = is_qcr(&product_state(2).map_err(err)?, 1e-9).map_err(err)?;
    ensure(!product.verdict, "product state passes")?;
    ensure(
        product.failing_conditions().contains(&"condition (i)"),
        "product: condition (i) not named",
    )?;

    let biased = is_qcr(&biased_pure_state(), 1e-9).map_err(err)?;
    ensure(!biased.verdict, "biased state passes")?;
    ensure(
        biased.failing_conditions() == ["condition (i)"],
        format!("biased: {:?}", biased.failing_conditions()),
    )?;
    let bias = biased.condition_i.max_deviation;
    ensure((bias - 1.0 / 6.0).abs() <= 1e-12, format!("bias {bias}"))?;

    let classical = is_qcr(&classically_correlated(2).map_err(err)?, 1e-9).map_err(err)?;
    ensure(!classical.verdict, "classical state passes")?;
    ensure(
        classical.failing_conditions() == ["condition (ii)"],
        format!("classical: {:?}", classical.failing_conditions()),
    )?;
    let dist = classical.condition_ii.max_distance;
    ensure(
        (dist - 2.0).abs() <= 1e-9,
        format!("classical distance {dist}"),
    )?;
    Ok(format!("bias {bias:.15}, classical distance {dist:.12}"))
}

fn ppt_properties() -> Check {
    let me = maximally_entangled(2).map_err(err)?;
    let cut = CutSpec::with_side_two(&me, &["A1.i", "A1.s"]).map_err(err)?;
    let (min, ppt) = ppt_check(&me, &cut, PPT_TOL).map_err(err)?;
    ensure(
        !ppt && (min + 0.5).abs() <= 1e-10,
        format!("min eigenvalue {min}"),
    )?;

    let mut worst = f64::INFINITY;
    for seed in 0..100u64 {
        let mut rng = seeded_rng(6000 + seed);
        let players = rng.random_range(1..=3);
        let terms = rng.random_range(1..=4);
        let s = separable_product(2, players, terms, &mut rng).map_err(err)?;
        let report = all_dealer_cuts_ppt(&s, PPT_TOL).map_err(err)?;
        ensure(
            report.all_ppt,
            format!("seed {seed}: a dealer cut is not PPT"),
        )?;
        for c in &report.cuts {
            ensure(
                c.min_eigenvalue >= -1e-9,
                format!("seed {seed}: {}", c.min_eigenvalue),
            )?;
            worst = worst.min(c.min_eigenvalue);
        }
    }
    Ok(format!(
        "maximally entangled min eigenvalue {min}; 100 products PPT (worst {worst:.1e})"
    ))
}

fn two_qubit(m: ComplexMatrix) -> QuantumState {
    let regs = vec![
        Subsystem::new("X1", Role::Other, 2),
        Subsystem::new("X2", Role::Other, 2),
    ];
    QuantumState::density(regs, m).expect("valid density")
}

fn telescoping() -> Check {
    let mut slack = f64::INFINITY;
    for seed in 0..200u64 {
        let mut rng = seeded_rng(7000 + seed);
        let mut draw = || {
            let rank = rng.random_range(1..=4);
            random_density(4, rank, &mut rng)
        };
        let (s1, s2, t1, t2) = (draw(), draw(), draw(), draw());
        let lhs = trace_norm(&(s1.kronecker(&s2) - t1.kronecker(&t2))).map_err(err)?;
        let rhs = trace_distance(&two_qubit(s1), &two_qubit(t1)).map_err(err)?
            + trace_distance(&two_qubit(s2), &two_qubit(t2)).map_err(err)?;
        ensure(lhs <= rhs + 1e-10, format!("seed {seed}: {lhs} > {rhs}"))?;
        slack = slack.min(rhs - lhs);
    }
    Ok(format!("200 trials, smallest slack {slack:.2e}"))
}

fn coalition_monotone(s: &QuantumState) -> Result<(), String> {
    let r = is_qcr_with(
        s,
        &VerifyOptions {
            tol: 1e-9,
            exhaustive: true,
        },
    )
    .map_err(err)?;
    let cs = &r.condition_ii.coalitions;
    ensure(cs.len() == 7, format!("{} coalitions", cs.len()))?;
    for small in cs {
        for large in cs {
            let subset = small
                .coalition
                .dishonest
                .iter()
                .all(|k| large.coalition.dishonest.contains(k));
            if subset {
                ensure(
                    small.max_distance <= large.max_distance + 1e-9,
                    format!(
                        "{:?}: {} > {:?}: {}",
                        small.coalition.dishonest,
                        small.max_distance,
                        large.coalition.dishonest,
                        large.max_distance
                    ),
                )?;
            }
        }
    }
    Ok(())
}

fn infrastructure() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = seeded_rng(8000 + seed);
        let n = rng.random_range(2..=16);
        let rank = rng.random_range(1..=n);
        let rho = random_density(n, rank, &mut rng);
        let s =
            QuantumState::density(vec![Subsystem::new("X1", Role::Other, n)], rho).map_err(err)?;
        let p = purify(&s).map_err(err)?;
        let env = p.labels_where(|r| r.role == Role::Environment);
        let back = partial_trace(&p, &env).map_err(err)?;
        let diff = back.max_entry_diff(&s).map_err(err)?;
        ensure(diff <= 1e-12, format!("seed {seed} (dim {n}): {diff:e}"))?;
        worst = worst.max(diff);
    }

    let mut rng = seeded_rng(81);
    let mut fixtures = vec![
        build_example_state(),
        build_example_state().to_density(),
        maximally_entangled(3).map_err(err)?,
        build_ghz_qcr(2, 3, &ShieldSeed::trivial(4)).map_err(err)?,
        build_ghz_qcr(
            3,
            2,
            &ShieldSeed::random(vec![2, 1, 2], None, &mut rng).map_err(err)?,
        )
        .map_err(err)?,
        random_private_state(2, 2, 2, &mut rng).map_err(err)?,
        random_private_state(3, 1, 2, &mut rng).map_err(err)?,
        product_state(2).map_err(err)?,
        biased_pure_state(),
        classically_correlated(3).map_err(err)?,
        separable_product(2, 2, 3, &mut rng).map_err(err)?,
    ];
    fixtures.push(
        tensor_product(
            &fixtures[2]
                .with_registers(
                    fixtures[2]
                        .registers()
                        .iter()
                        .map(|r| Subsystem::new(format!("p:{}", r.label), Role::Other, r.dim))
                        .collect(),
                )
                .map_err(err)?,
            &two_qubit(random_density(4, 2, &mut rng)),
        )
        .map_err(err)?,
    );
    for (k, s) in fixtures.iter().enumerate() {
        let back = state_from_json(&state_to_json(s, None)).map_err(err)?;
        ensure(
            &back == s,
            format!("fixture {k} does not round-trip bit-exactly"),
        )?;
    }

    let ghz3 = build_ghz_qcr(2, 3, &ShieldSeed::trivial(4)).map_err(err)?;
    coalition_monotone(&ghz3)?;
    let base = build_ghz_qcr(
        2,
        3,
        &ShieldSeed::basis(vec![1, 2, 1, 1], &[0, 0, 0, 0]).map_err(err)?,
    )
    .map_err(err)?;
    let (leaky, _) =
        build_twisted_qcr(&base, &dealer_leak_twist(2, 3).map_err(err)?, 1e-9).map_err(err)?;
    coalition_monotone(&leaky)?;
    let keys = index_set(4, 0, 2).map_err(err)?.members().to_vec();
    let sigma = ShieldSeed::random(vec![2, 1, 2, 1], None, &mut rng).map_err(err)?;
    let base = build_ghz_qcr(2, 3, &sigma).map_err(err)?;
    let twist = TwistingFamily::random(keys, 4, &mut rng).map_err(err)?;
    let (random_twisted, _) = build_twisted_qcr(&base, &twist, 1e-9).map_err(err)?;
    coalition_monotone(&random_twisted)?;

    Ok(format!(
        "purification error {worst:.1e}; {} files bit-exact; monotone on 3 states at N=3",
        fixtures.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 example fixture", example_fixture, Duration::from_secs(1)),
        (
            "2 private-state family",
            private_family,
            Duration::from_secs(30),
        ),
        (
            "3 reduction closure",
            reduction_closure,
            Duration::from_secs(120),
        ),
        (
            "4 composition closure",
            composition_closure,
            Duration::from_secs(120),
        ),
        (
            "5 negative controls",
            negative_controls,
            Duration::from_secs(60),
        ),
        ("6 PPT properties", ppt_properties, Duration::from_secs(60)),
        ("7 telescoping bound", telescoping, Duration::from_secs(60)),
        ("8 infrastructure", infrastructure, Duration::from_secs(60)),
    ];
    let mut failures = 0;
    for (name, run, bound) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > bound => Err(format!("{detail}; exceeded {bound:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{elapsed:.2?}]"),
            Err(why) => {
                failures += 1;
                println!("FAIL criterion {name}: {why} [{elapsed:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 8 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
