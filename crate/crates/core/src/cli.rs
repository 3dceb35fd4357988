//! Command-line front end. Exit status: 0 pass, 1 check failure,
//! 2 incompatible scenario (witness emitted), 3 parse or usage error.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::check::{Check, MaxResidual};
use crate::compat::{is_compatible, max_order_gap, OrderWitness};
use crate::error::{Error, Result};
use crate::ontic::{
    bb_model_demo, subsets_for_checks, variation_optimality, verify_kolmogorov, verify_model,
    DeterministicModel, CONDITIONING_FLOOR,
};
use crate::quantum::{
    builtins, sequential_distribution_with, Observable, State, DEFAULT_SPACE_CAP,
};
use crate::report::{
    CompatibilityBlock, ModelBlock, Report, SampleBlock, TablePair, VariationBlock, WitnessBlock,
};
use crate::sampler::{compare_empirical, run_shots};
use crate::scenario::{Scenario, ScenarioFile};
use crate::suite::{verify_pairs, verify_updates, MIN_WITNESS_GAP};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_WITNESS: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

/// Largest tolerated fraction of tuples outside their 4σ band.
pub const SAMPLE_FLAG_RATE: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(
    name = "luders",
    version,
    about = "Lüders updates, compatibility and ontological models for quantum scenarios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pairwise compatibility matrix with commutator norms
    Analyze(Options),
    /// Build and verify the deterministic model, or emit an order witness
    Model(Options),
    /// Maximal order-dependence witness for --pair A B
    Witness(Options),
    /// Run every applicable verification suite
    Verify(Options),
    /// Simulate --shots sequential measurements of --sequence on --state
    Sample(Options),
    /// Pure-state model for two decompositions named by --pair
    #[command(name = "bb-demo")]
    BbDemo(Options),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Debug, clap::Args)]
pub struct Options {
    /// Scenario file (JSON)
    pub file: PathBuf,
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub pair: Option<Vec<String>>,
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub sequence: Option<Vec<String>>,
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long = "cluster-tol", default_value_t = 1e-8)]
    pub cluster_tol: f64,
    #[arg(long = "null-threshold", default_value_t = 1e-12)]
    pub null_threshold: f64,
    /// Write the report here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A finished command: its report and exit status.
pub struct Outcome {
    pub report: Report,
    pub exit: i32,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn load(opts: &Options) -> Result<Scenario> {
    ScenarioFile::load(&opts.file)?.resolve_with(opts.cluster_tol)
}

/// Scenario states, or the maximally mixed state when none are given.
fn states_or_default(s: &Scenario) -> Vec<(String, State)> {
    if s.states.is_empty() {
        vec![(
            "maximally_mixed".to_string(),
            State::maximally_mixed(s.dimension),
        )]
    } else {
        s.states.clone()
    }
}

fn witness_tables(
    w: &OrderWitness,
    a: &Observable,
    b: &Observable,
    null: f64,
) -> Result<TablePair> {
    Ok(TablePair {
        forward: sequential_distribution_with(&w.witness_state, &[a, b], null, DEFAULT_SPACE_CAP)?,
        reverse: sequential_distribution_with(&w.witness_state, &[b, a], null, DEFAULT_SPACE_CAP)?,
    })
}

fn pair_names(opts: &Options) -> Result<(String, String)> {
    match opts.pair.as_deref() {
        Some([a, b]) => Ok((a.clone(), b.clone())),
        _ => Err(usage("--pair A B is required")),
    }
}

pub fn execute(command: &Command) -> Result<Outcome> {
    let (name, opts) = match command {
        Command::Analyze(o) => ("analyze", o),
        Command::Model(o) => ("model", o),
        Command::Witness(o) => ("witness", o),
        Command::Verify(o) => ("verify", o),
        Command::Sample(o) => ("sample", o),
        Command::BbDemo(o) => ("bb-demo", o),
    };
    let scenario = load(opts)?;
    let mut report = Report::new(name, &opts.file.display().to_string());
    let mut exit = EXIT_PASS;
    match command {
        Command::Analyze(_) => analyze(&scenario, opts, &mut report)?,
        Command::Model(_) => exit = model(&scenario, opts, &mut report)?,
        Command::Witness(_) => witness(&scenario, opts, &mut report)?,
        Command::Verify(_) => exit = verify(&scenario, opts, &mut report)?,
        Command::Sample(_) => sample(&scenario, opts, &mut report)?,
        Command::BbDemo(_) => bb(&scenario, opts, &mut report)?,
    }
    if !report.pass {
        exit = EXIT_FAIL;
    }
    Ok(Outcome { report, exit })
}

fn analyze(s: &Scenario, opts: &Options, report: &mut Report) -> Result<()> {
    let n = s.observables.len();
    let mut matrix = vec![vec![true; n]; n];
    let mut pairs = Vec::new();
    for (i, a) in s.observables.iter().enumerate() {
        for (j, b) in s.observables.iter().enumerate().skip(i + 1) {
            let r = is_compatible(a, b, opts.tol)?;
            matrix[i][j] = r.is_compatible();
            matrix[j][i] = r.is_compatible();
            report
                .summary
                .push(format!("({}, {}): {:?}", r.pair.0, r.pair.1, r.verdict));
            pairs.push(r);
        }
    }
    let all = matrix.iter().flatten().all(|&b| b);
    report.summary.push(format!(
        "scenario is {}",
        if all {
            "pairwise compatible"
        } else {
            "not pairwise compatible"
        }
    ));
    report.compatibility = Some(CompatibilityBlock {
        observables: s.observables.iter().map(|o| o.name().to_string()).collect(),
        matrix,
        pairs,
    });
    Ok(())
}

fn incompatible(err: Error, s: &Scenario, opts: &Options, report: &mut Report) -> Result<i32> {
    match err {
        Error::IncompatibleScenario(w) => {
            let a = s.observable(&w.pair.0)?;
            let b = s.observable(&w.pair.1)?;
            let tables = witness_tables(&w, a, b, opts.null_threshold)?;
            report.summary.push(format!(
                "incompatible pair ({}, {}): no state-updating model exists; order gap {}",
                w.pair.0,
                w.pair.1,
                serde_json::Value::from(w.gap)
            ));
            report.witness = Some(WitnessBlock::new(&w, Some(tables)));
            Ok(EXIT_WITNESS)
        }
        other => Err(other),
    }
}

fn model(s: &Scenario, opts: &Options, report: &mut Report) -> Result<i32> {
    let model = match DeterministicModel::build(&s.observables, opts.tol, DEFAULT_SPACE_CAP) {
        Ok(m) => m,
        Err(e) => return incompatible(e, s, opts, report),
    };
    let states = states_or_default(s);
    report.model = Some(ModelBlock::from(model.document(&states)?));
    report.add_checks(verify_model(&model, &states, opts.tol)?.checks);
    report.summary.push(format!(
        "deterministic model on {} ontic points",
        model.space().size()
    ));
    Ok(EXIT_PASS)
}

fn witness(s: &Scenario, opts: &Options, report: &mut Report) -> Result<()> {
    let (na, nb) = pair_names(opts)?;
    let a = s.observable(&na)?;
    let b = s.observable(&nb)?;
    let w = max_order_gap(a, b)?;
    let compatible = is_compatible(a, b, opts.tol)?.is_compatible();
    if compatible || w.gap < MIN_WITNESS_GAP {
        report
            .summary
            .push(format!("({na}, {nb}) compatible: no witness exists"));
    } else {
        report.summary.push(format!(
            "({na}, {nb}) incompatible: order gap {}",
            serde_json::Value::from(w.gap)
        ));
    }
    report.add_checks([Check::new(
        "witness_gap_reproduced",
        (w.gap - w.sequential_gap).abs(),
        opts.tol,
    )]);
    let tables = witness_tables(&w, a, b, opts.null_threshold)?;
    report.witness = Some(WitnessBlock::new(&w, Some(tables)));
    Ok(())
}

fn verify(s: &Scenario, opts: &Options, report: &mut Report) -> Result<i32> {
    report.seed = Some(opts.seed);
    let states = states_or_default(s);
    report
        .add_checks(verify_updates(&s.observables, &states, opts.tol, opts.null_threshold)?.checks);
    let (pairs, witnesses) = verify_pairs(&s.observables, &states, opts.tol)?;
    report.add_checks(pairs.checks);

    if let Some(w) = witnesses.iter().max_by(|x, y| x.gap.total_cmp(&y.gap)) {
        let a = s.observable(&w.pair.0)?;
        let b = s.observable(&w.pair.1)?;
        report.summary.push(format!(
            "{} incompatible pair(s); model suite replaced by the witness for ({}, {})",
            witnesses.len(),
            w.pair.0,
            w.pair.1
        ));
        report.witness = Some(WitnessBlock::new(
            w,
            Some(witness_tables(w, a, b, opts.null_threshold)?),
        ));
        return Ok(EXIT_WITNESS);
    }
    if s.observables.len() < 2 {
        report
            .summary
            .push("model suite needs at least two observables".into());
        return Ok(EXIT_PASS);
    }

    let model = DeterministicModel::build(&s.observables, opts.tol, DEFAULT_SPACE_CAP)?;
    report.model = Some(ModelBlock::from(model.document(&states)?));
    report.add_checks(verify_model(&model, &states, opts.tol)?.checks);
    report.add_checks(verify_kolmogorov(&model, &states, opts.tol)?.checks);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut reports = Vec::new();
    for (_, rho) in &states {
        let mu = model.state_map(rho)?;
        for (k, obs) in model.observables().iter().enumerate() {
            let kernel = &model.kernels()[k];
            for d in subsets_for_checks(obs.outcome_count()) {
                if mu.mass(&kernel.preimage(&d)) <= CONDITIONING_FLOOR {
                    continue;
                }
                reports.push(variation_optimality(
                    &mu,
                    kernel,
                    &d,
                    opts.trials,
                    &mut rng,
                    opts.tol,
                )?);
            }
        }
    }
    let mut closed = MaxResidual::default();
    let mut shortfall = MaxResidual::default();
    for r in &reports {
        for c in &r.checks {
            match c.name.as_str() {
                "variation_closed_form" => closed.push(c.residual),
                _ => shortfall.push(c.residual),
            }
        }
    }
    report.add_checks([Check::new("variation_closed_form", closed.0, opts.tol)]);
    if opts.trials > 0 {
        report.add_checks([Check::new("variation_lower_bound", shortfall.0, opts.tol)]);
    } else {
        report
            .summary
            .push("trials = 0: variation sampling skipped".into());
    }
    report.variation = Some(VariationBlock::from_reports(&reports, opts.trials));
    report.summary.push(format!(
        "deterministic model on {} ontic points",
        model.space().size()
    ));
    Ok(EXIT_PASS)
}

fn sample(s: &Scenario, opts: &Options, report: &mut Report) -> Result<()> {
    report.seed = Some(opts.seed);
    let state_name = opts
        .state
        .as_deref()
        .ok_or_else(|| usage("--state is required"))?;
    let rho = s.state(state_name)?;
    let names = opts
        .sequence
        .as_deref()
        .ok_or_else(|| usage("--sequence is required"))?;
    let seq = names
        .iter()
        .map(|n| s.observable(n))
        .collect::<Result<Vec<_>>>()?;
    if opts.shots == 0 {
        return Err(usage("--shots must be at least 1"));
    }
    let record = run_shots(rho, &seq, opts.shots, opts.seed)?;
    let analytic = sequential_distribution_with(rho, &seq, opts.null_threshold, DEFAULT_SPACE_CAP)?;
    let comparison = compare_empirical(&record, &analytic)?;
    report.add_checks([Check::new(
        "within_4sigma_fraction_flagged",
        comparison.flag_rate(),
        SAMPLE_FLAG_RATE,
    )]);
    report.summary.push(format!(
        "{} shots, {} of {} tuples outside 4σ, max deviation {}",
        opts.shots,
        comparison.flagged,
        comparison.tuples.len(),
        serde_json::Value::from(comparison.max_deviation)
    ));
    report.samples = Some(SampleBlock { record, comparison });
    Ok(())
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn bb(s: &Scenario, opts: &Options, report: &mut Report) -> Result<()> {
    let (na, nb) = pair_names(opts)?;
    let a = s.state(&na)?;
    let b = s.state(&nb)?;
    let mut observables = s.observables.clone();
    if s.dimension == 2 {
        for o in [
            builtins::sigma_x(),
            builtins::sigma_y(),
            builtins::sigma_z(),
        ] {
            if observables.iter().all(|x| x.name() != o.name()) {
                observables.push(o);
            }
        }
    }
    let r = bb_model_demo(a, b, &observables)?;
    report.add_checks([
        Check::new("born_reproduced_a", r.born_residual_a, opts.tol),
        Check::new("born_reproduced_b", r.born_residual_b, opts.tol),
    ]);
    report.summary.push(format!(
        "measures differ: {}; Born reproduced: {}; conditional update matches Lüders: {}",
        yes_no(r.measures_differ),
        yes_no(r.born_reproduced),
        yes_no(r.update_matches_luders)
    ));
    if let Some(e) = &r.exhibited {
        report.summary.push(format!(
            "exhibited case [{} = {}]: total variation {} between conditioned and Lüders measures",
            e.observable,
            serde_json::Value::from(e.outcome),
            serde_json::Value::from(e.tv_discrepancy)
        ));
    }
    report.bb = Some(r);
    Ok(())
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
    }
}

/// Parses `args` (including the program name), runs the command and writes
/// the report. Returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    let opts = match &cli.command {
        Command::Analyze(o)
        | Command::Model(o)
        | Command::Witness(o)
        | Command::Verify(o)
        | Command::Sample(o)
        | Command::BbDemo(o) => o.clone(),
    };
    match execute(&cli.command) {
        Ok(outcome) => {
            let text = render(&outcome.report, opts.format);
            match &opts.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return EXIT_USAGE;
                    }
                }
                None => print!("{text}"),
            }
            outcome.exit
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
