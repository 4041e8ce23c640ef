use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qcr_core::analysis::{dealer_cuts, ppt_report, trace_distance, CutSpec, PPT_TOL};
use qcr_core::construct::{
    build_example_state, build_ghz_qcr, build_private_state, build_twisted_qcr,
    maximally_entangled, required_dim, ShieldSeed, TwistingFamily,
};
use qcr_core::fixtures::{
    biased_pure_state, classically_correlated, product_state, separable_product,
};
use qcr_core::protocols::{self, BranchSelection, ProtocolOptions};
use qcr_core::random::seeded_rng;
use qcr_core::registers::{index_set, SystemLayout};
use qcr_core::statefile::{read_state, write_state, Document};
use qcr_core::tensor::{index_to_digits, outcome_distribution, QuantumState, Role};
use qcr_core::verify::{
    is_qcr, is_qcr_with, OutcomeProbability, VerifyOptions, DEFAULT_TOL, PROTOCOL_TOL,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::{CliError, ConstructArgs, CutMode, Family, ReportFormat, EXIT_FAIL, EXIT_NOT_PPT};

pub struct Outcome {
    pub code: u8,
    doc: Value,
    text: String,
    format: ReportFormat,
}

impl Outcome {
    fn new<T: Serialize>(code: u8, kind: &str, body: T, text: String) -> Self {
        let doc = serde_json::to_value(Document::new(kind, body)).expect("reports serialize");
        Self {
            code,
            doc,
            text,
            format: ReportFormat::Text,
        }
    }

    pub fn with_format(mut self, format: ReportFormat) -> Self {
        self.format = format;
        self
    }

    pub fn render(&self) -> String {
        match self.format {
            ReportFormat::Json => {
                serde_json::to_string_pretty(&self.doc).expect("reports serialize")
            }
            ReportFormat::Text => self.text.trim_end().to_string(),
        }
    }
}

fn load(path: &Path) -> Result<QuantumState, CliError> {
    read_state(path).map_err(|e| match CliError::from(e) {
        CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
        other => CliError::Data(format!("{}: {}", path.display(), other_message(other))),
    })
}

fn other_message(e: CliError) -> String {
    match e {
        CliError::Usage(m) | CliError::Data(m) | CliError::Io(m) | CliError::Rejected(m) => m,
    }
}

fn save(path: &Path, s: &QuantumState, note: Option<String>) -> Result<(), CliError> {
    write_state(path, s, note).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn require_out(cfg: &RunConfig) -> Result<&Path, CliError> {
    cfg.out
        .as_deref()
        .ok_or_else(|| CliError::Usage("--out is required".into()))
}

fn digits_text(digits: &[usize]) -> String {
    digits
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("")
}

#[derive(Serialize)]
struct StateSummary {
    file: Option<String>,
    labels: Vec<String>,
    dims: Vec<usize>,
    dim: usize,
    representation: &'static str,
    purity: f64,
    d: Option<usize>,
    players: Option<usize>,
    /// Information-register distribution when the registers form a layout.
    distribution: Option<Vec<OutcomeProbability>>,
}

fn summarize(s: &QuantumState, file: Option<&Path>) -> Result<StateSummary, CliError> {
    let layout = SystemLayout::from_registers(s.registers()).ok();
    let distribution = match &layout {
        Some(l) => {
            let labels = l.info_labels();
            let dims = vec![l.d(); labels.len()];
            let probs = outcome_distribution(s, &labels)?;
            Some(nonzero_outcomes(&probs, &dims))
        }
        None => None,
    };
    Ok(StateSummary {
        file: file.map(|p| p.display().to_string()),
        labels: s.registers().iter().map(|r| r.label.clone()).collect(),
        dims: s.dims(),
        dim: s.dim(),
        representation: if s.is_pure_vector() {
            "pure"
        } else {
            "density"
        },
        purity: s.purity(),
        d: layout.as_ref().map(|l| l.d()),
        players: layout.as_ref().map(|l| l.players()),
        distribution,
    })
}

fn nonzero_outcomes(probs: &[f64], dims: &[usize]) -> Vec<OutcomeProbability> {
    probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > qcr_core::tensor::ZERO_PROBABILITY)
        .map(|(k, &p)| OutcomeProbability {
            digits: index_to_digits(k, dims),
            probability: p,
        })
        .collect()
}

fn summary_text(s: &StateSummary) -> String {
    let mut t = String::new();
    if let Some(f) = &s.file {
        let _ = writeln!(t, "wrote {f}");
    }
    let regs: Vec<String> = s
        .labels
        .iter()
        .zip(&s.dims)
        .map(|(l, d)| format!("{l}:{d}"))
        .collect();
    let _ = writeln!(
        t,
        "registers {} (dim {}, {})",
        regs.join(" "),
        s.dim,
        s.representation
    );
    let _ = writeln!(t, "purity {:.12}", s.purity);
    if let Some(dist) = &s.distribution {
        let parts: Vec<String> = dist
            .iter()
            .map(|o| format!("{}:{:.6}", digits_text(&o.digits), o.probability))
            .collect();
        let _ = writeln!(t, "information distribution {}", parts.join(" "));
    }
    t
}

fn trivial(shields: &[usize]) -> bool {
    shields.iter().all(|&x| x == 1)
}

pub fn construct(cfg: &RunConfig, args: &ConstructArgs) -> Result<Outcome, CliError> {
    let out = require_out(cfg)?;
    let d = args.d;
    let n = args.n;
    if d < 2 {
        return Err(CliError::Usage(format!("--d must be at least 2, got {d}")));
    }
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let shields = args.shields.clone().unwrap_or_else(|| match args.family {
        Family::Twisted => {
            let mut v = vec![1; n + 1];
            v[0] = 2;
            v
        }
        _ => vec![1; n + 1],
    });
    if shields.contains(&0) {
        return Err(CliError::Usage("shield dimensions must be positive".into()));
    }
    let single_pair = |what: &str| -> Result<(), CliError> {
        if n != 1 {
            return Err(CliError::Usage(format!("{what} has exactly one player")));
        }
        Ok(())
    };
    let mut report = None;
    let state = match args.family {
        Family::Private | Family::Ghz | Family::Twisted => {
            if args.family == Family::Private {
                single_pair("a private state")?;
            }
            if shields.len() != n + 1 {
                return Err(CliError::Usage(format!(
                    "--shields needs {} entries, one per party",
                    n + 1
                )));
            }
            cfg.check_dim(required_dim(d, n, &shields))?;
            match args.family {
                Family::Private if trivial(&shields) => maximally_entangled(d)?,
                Family::Private => {
                    let mut rng = seeded_rng(cfg.require_seed("a shielded private state")?);
                    let sigma = ShieldSeed::random(shields.clone(), args.rank, &mut rng)?;
                    let twist = TwistingFamily::random(
                        (0..d).map(|i| vec![i]),
                        sigma.total_dim(),
                        &mut rng,
                    )?;
                    build_private_state(d, &sigma, &twist)?
                }
                Family::Ghz if trivial(&shields) => {
                    build_ghz_qcr(d, n, &ShieldSeed::trivial(n + 1))?
                }
                Family::Ghz => {
                    let mut rng = seeded_rng(cfg.require_seed("a shielded GHZ state")?);
                    build_ghz_qcr(
                        d,
                        n,
                        &ShieldSeed::random(shields.clone(), args.rank, &mut rng)?,
                    )?
                }
                _ => {
                    let mut rng = seeded_rng(cfg.require_seed("a twisted state")?);
                    let sigma = ShieldSeed::random(shields.clone(), args.rank, &mut rng)?;
                    let base = build_ghz_qcr(d, n, &sigma)?;
                    let keys = index_set(n + 1, 0, d)?.members().to_vec();
                    let twist = TwistingFamily::random(keys, sigma.total_dim(), &mut rng)?;
                    let (s, r) = build_twisted_qcr(&base, &twist, cfg.tol_or(DEFAULT_TOL))?;
                    report = Some(r);
                    s
                }
            }
        }
        Family::Example => build_example_state(),
        Family::Product => {
            single_pair("the product state")?;
            cfg.check_dim(d.checked_mul(d))?;
            product_state(d)?
        }
        Family::Classical => {
            single_pair("the classical state")?;
            cfg.check_dim(d.checked_mul(d))?;
            classically_correlated(d)?
        }
        Family::Biased => {
            single_pair("the biased state")?;
            if d != 2 {
                return Err(CliError::Usage(
                    "the biased state is defined for --d 2".into(),
                ));
            }
            biased_pure_state()
        }
        Family::Separable => {
            cfg.check_dim(u32::try_from(2 * n).ok().and_then(|e| d.checked_pow(e)))?;
            let mut rng = seeded_rng(cfg.require_seed("a separable product")?);
            separable_product(d, n, args.terms, &mut rng)?
        }
    };
    if state.dim() > cfg.cap {
        return Err(CliError::Usage(format!(
            "dimension {} exceeds cap {}",
            state.dim(),
            cfg.cap
        )));
    }
    let note = args.note.clone().or_else(|| {
        let family = format!("{:?}", args.family).to_lowercase();
        Some(match cfg.seed {
            Some(seed) => format!("qcr construct {family} d={d} n={n} seed={seed}"),
            None => format!("qcr construct {family} d={d} n={n}"),
        })
    });
    save(out, &state, note)?;
    let summary = summarize(&state, Some(out))?;
    let mut text = summary_text(&summary);
    if let Some(r) = &report {
        let _ = writeln!(
            text,
            "twisted candidate verdict {} (max coalition distance {:.3e})",
            if r.verdict { "pass" } else { "fail" },
            r.condition_ii.max_distance
        );
    }
    Ok(Outcome::new(
        0,
        "qcr-construct-summary",
        json!({ "state": summary, "verification": report }),
        text,
    ))
}

pub fn verify(cfg: &RunConfig, file: &Path, exhaustive: bool) -> Result<Outcome, CliError> {
    let s = load(file)?;
    let opts = VerifyOptions {
        tol: cfg.tol_or(DEFAULT_TOL),
        exhaustive,
    };
    let r = is_qcr_with(&s, &opts)?;
    let mut text = String::new();
    let _ = writeln!(text, "{}: d={} players={}", file.display(), r.d, r.players);
    let _ = writeln!(
        text,
        "condition (i): {} (max deviation {:.3e}, off-support mass {:.3e})",
        pass_word(r.condition_i.pass),
        r.condition_i.max_deviation,
        r.condition_i.off_support_mass
    );
    let _ = writeln!(
        text,
        "condition (ii): {} (max distance {:.12})",
        pass_word(r.condition_ii.pass),
        r.condition_ii.max_distance
    );
    for c in &r.condition_ii.coalitions {
        let _ = writeln!(
            text,
            "  dishonest {:?}: distance {:.3e}",
            c.coalition.dishonest, c.max_distance
        );
    }
    if r.verdict {
        let _ = writeln!(text, "verdict: pass");
    } else {
        let _ = writeln!(
            text,
            "verdict: fail ({})",
            r.failing_conditions().join(", ")
        );
    }
    let code = if r.verdict { 0 } else { EXIT_FAIL };
    let failing = r.failing_conditions();
    Ok(Outcome::new(
        code,
        "qcr-verify-report",
        json!({ "file": file.display().to_string(), "failing": failing, "report": r }),
        text,
    ))
}

fn pass_word(p: bool) -> &'static str {
    if p {
        "pass"
    } else {
        "fail"
    }
}

fn protocol_options(cfg: &RunConfig, certify: bool) -> ProtocolOptions {
    ProtocolOptions {
        tol: cfg.tol_or(PROTOCOL_TOL),
        certify,
        dim_cap: cfg.cap,
    }
}

#[derive(Serialize)]
struct BranchReport {
    measured: Vec<usize>,
    beta: usize,
    probability: f64,
    correction_applied: bool,
    file: String,
    verdict: bool,
}

fn branch_path(stem: &Path, digits: &[usize]) -> PathBuf {
    let name = stem
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    stem.with_file_name(format!("{name}.branch-{}.json", digits_text(digits)))
}

pub fn reduce(
    cfg: &RunConfig,
    file: &Path,
    keep: &[usize],
    branch: Option<Vec<usize>>,
) -> Result<Outcome, CliError> {
    let s = load(file)?;
    let layout = SystemLayout::from_registers(s.registers())?;
    let n = layout.players();
    if keep.is_empty() {
        return Err(CliError::Usage(
            "--keep must name at least one player".into(),
        ));
    }
    if let Some(&k) = keep.iter().find(|&&k| k == 0 || k > n) {
        return Err(CliError::Usage(format!("player {k} outside 1..={n}")));
    }
    let measured: Vec<usize> = (1..=n).filter(|k| !keep.contains(k)).collect();
    if measured.is_empty() {
        return Err(CliError::Usage(
            "--keep must leave at least one player to measure".into(),
        ));
    }
    let selection = branch.map_or(BranchSelection::All, BranchSelection::Outcome);
    let opts = protocol_options(cfg, true);
    let outcomes = protocols::reduce(&s, &measured, &selection, &opts)?;
    let stem = cfg.out.clone().unwrap_or_else(|| file.with_extension(""));
    let mut reports = Vec::new();
    let mut text = String::new();
    let _ = writeln!(text, "measured players {measured:?}, kept {keep:?}");
    for o in &outcomes {
        let path = branch_path(&stem, &o.measured);
        let note = format!(
            "qcr reduce {} measured {:?} outcome {:?}",
            file.display(),
            measured,
            o.measured
        );
        save(&path, &o.state, Some(note))?;
        let verdict = is_qcr(&o.state, opts.tol)?.verdict;
        let _ = writeln!(
            text,
            "branch {} (p={:.6}, beta={}): {} -> {}",
            digits_text(&o.measured),
            o.probability,
            o.beta,
            path.display(),
            pass_word(verdict)
        );
        reports.push(BranchReport {
            measured: o.measured.clone(),
            beta: o.beta,
            probability: o.probability,
            correction_applied: o.correction_applied,
            file: path.display().to_string(),
            verdict,
        });
    }
    let code = if reports.iter().all(|b| b.verdict) {
        0
    } else {
        EXIT_FAIL
    };
    let kept_players = outcomes
        .first()
        .map(|o| o.kept_players.clone())
        .unwrap_or_default();
    Ok(Outcome::new(
        code,
        "qcr-reduce-report",
        json!({
            "input": file.display().to_string(),
            "measured_players": measured,
            "kept_players": kept_players,
            "branches": reports,
        }),
        text,
    ))
}

pub fn compose(
    cfg: &RunConfig,
    first: &Path,
    second: &Path,
    force: bool,
) -> Result<Outcome, CliError> {
    let out = require_out(cfg)?;
    let a = load(first)?;
    let b = load(second)?;
    let opts = protocol_options(cfg, !force);
    let (merged, record) = protocols::compose(&a, &b, &opts).map_err(|e| match e {
        qcr_core::QcrError::ModulusMismatch(x, y) => {
            CliError::Data(format!("inputs have different moduli: d={x} and d={y}"))
        }
        other => other.into(),
    })?;
    let note = format!("qcr compose {} {}", first.display(), second.display());
    save(out, &merged, Some(note))?;
    let r = is_qcr(&merged, opts.tol)?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "wrote {} ({} players, dim {}); cX target {} control {}",
        out.display(),
        r.players,
        merged.dim(),
        record.target,
        record.control
    );
    let _ = writeln!(text, "verdict: {}", pass_word(r.verdict));
    let code = if r.verdict { 0 } else { EXIT_FAIL };
    Ok(Outcome::new(
        code,
        "qcr-compose-report",
        json!({ "output": out.display().to_string(), "record": record, "verdict": r.verdict, "report": r }),
        text,
    ))
}

/// Every bipartition of the parties (dealer, each player, each unassigned register).
fn party_cuts(s: &QuantumState) -> Result<Vec<CutSpec>, CliError> {
    let mut groups: Vec<(Option<usize>, Vec<String>)> = Vec::new();
    for r in s.registers() {
        if r.role == Role::Environment {
            continue;
        }
        match r.role.party() {
            Some(p) => match groups.iter_mut().find(|(k, _)| *k == Some(p)) {
                Some((_, labels)) => labels.push(r.label.clone()),
                None => groups.push((Some(p), vec![r.label.clone()])),
            },
            None => groups.push((None, vec![r.label.clone()])),
        }
    }
    if groups.len() < 2 {
        return Err(CliError::Usage(
            "state has a single party; nothing to cut".into(),
        ));
    }
    if groups.len() > 16 {
        return Err(CliError::Usage(format!(
            "{} parties give too many cuts; use --cuts explicit",
            groups.len()
        )));
    }
    let m = groups.len();
    let mut cuts = Vec::new();
    for mask in 1u32..(1 << (m - 1)) {
        let two: Vec<String> = (1..m)
            .filter(|&g| mask & (1 << (g - 1)) != 0)
            .flat_map(|g| groups[g].1.clone())
            .collect();
        cuts.push(CutSpec::with_side_two(s, &two)?);
    }
    Ok(cuts)
}

pub fn ppt(
    cfg: &RunConfig,
    file: &Path,
    mode: CutMode,
    side_two: &[String],
) -> Result<Outcome, CliError> {
    let s = load(file)?;
    if mode != CutMode::Explicit && !side_two.is_empty() {
        return Err(CliError::Usage("--side-two needs --cuts explicit".into()));
    }
    let cuts = match mode {
        CutMode::All => party_cuts(&s)?,
        CutMode::Dealer => dealer_cuts(&s)?,
        CutMode::Explicit => {
            if side_two.is_empty() {
                return Err(CliError::Usage(
                    "--cuts explicit needs at least one --side-two".into(),
                ));
            }
            side_two
                .iter()
                .map(|spec| {
                    let labels: Vec<&str> = spec
                        .split(',')
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .collect();
                    CutSpec::with_side_two(&s, &labels).map_err(CliError::from)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    let report = ppt_report(&s, cuts, cfg.tol_or(PPT_TOL))?;
    let mut text = String::new();
    for c in &report.cuts {
        let _ = writeln!(
            text,
            "{{{}}} | {{{}}}: min eigenvalue {:.6e} {}",
            c.cut.side_one.join(","),
            c.cut.side_two.join(","),
            c.min_eigenvalue,
            if c.ppt { "PPT" } else { "NPT" }
        );
    }
    let _ = writeln!(
        text,
        "{}",
        if report.all_ppt {
            "all cuts PPT"
        } else {
            "some cut is not PPT"
        }
    );
    let code = if report.all_ppt { 0 } else { EXIT_NOT_PPT };
    Ok(Outcome::new(
        code,
        "qcr-ppt-report",
        json!({ "file": file.display().to_string(), "report": report }),
        text,
    ))
}

pub fn distance(_cfg: &RunConfig, first: &Path, second: &Path) -> Result<Outcome, CliError> {
    let a = load(first)?;
    let b = load(second)?;
    let value = trace_distance(&a, &b)?;
    Ok(Outcome::new(
        0,
        "qcr-distance-report",
        json!({ "first": first.display().to_string(), "second": second.display().to_string(), "trace_norm": value }),
        format!("trace norm of difference: {value:.15}"),
    ))
}

pub fn measure(_cfg: &RunConfig, file: &Path, on: &[String]) -> Result<Outcome, CliError> {
    let s = load(file)?;
    let dims: Vec<usize> = s.positions(on)?.iter().map(|&p| s.dims()[p]).collect();
    let probs = outcome_distribution(&s, on)?;
    let outcomes = nonzero_outcomes(&probs, &dims);
    let mut text = String::new();
    let _ = writeln!(text, "measuring {}", on.join(","));
    for o in &outcomes {
        let _ = writeln!(text, "  {:?}: {:.12}", o.digits, o.probability);
    }
    Ok(Outcome::new(
        0,
        "qcr-measure-report",
        json!({ "file": file.display().to_string(), "registers": on, "outcomes": outcomes }),
        text,
    ))
}
