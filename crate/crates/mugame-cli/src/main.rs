//! Command-line front end: checking, game-tree export, play tracing,
//! differential testing and instance generation.
//!
//! Exit codes: 0 when the queried property holds (or every check passed),
//! 1 when it does not (or some check failed), 2 on usage or input errors.

use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use mugame::formula::{parse_formula, Formula};
use mugame::game::{
    gts_truth, ChoiceError, ChoiceLabel, ChoiceSource, GameSpec, MoveOption, Player, Position,
    ScriptSource, StrategySource,
};
use mugame::harness::{
    random_instance, random_sentence, run_corpus_with_jobs, CheckReport, CheckRow,
    InstanceParams,
};
use mugame::kripke::{KripkeModel, StateId};
use mugame::ordinal::Ordinal;
use mugame::semantics::{eval_bounded, eval_standard, Assignment};

#[derive(Parser)]
#[command(
    name = "mugame",
    version,
    about = "Model checker for the modal mu-calculus with clock-bounded game and fixpoint semantics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a sentence on a model under one of the three semantics.
    Check(CheckArgs),
    /// Export the evaluation game tree as a DOT digraph.
    Game(GameArgs),
    /// Play one game and print the transcript.
    Trace(TraceArgs),
    /// Run the differential test harness on random instances.
    Diff(DiffArgs),
    /// Generate a random model or sentence.
    Gen(GenArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SemanticsArg {
    /// Bounded game-theoretic semantics (finite clock bound only).
    Gts,
    /// Bounded compositional semantics (any ordinal bound).
    Comp,
    /// Standard fixpoint semantics (no bound).
    Standard,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
#[command(group(ArgGroup::new("formula_src").required(true).args(["formula", "formula_file"])))]
struct CheckArgs {
    /// Model file (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Formula text.
    #[arg(long)]
    formula: Option<String>,
    /// File containing the formula text.
    #[arg(long)]
    formula_file: Option<PathBuf>,
    /// Clock bound, e.g. "3", "w", "w^2*2+w+4".
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long, value_enum)]
    semantics: SemanticsArg,
    /// Query a single state instead of the whole model.
    #[arg(long)]
    state: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
#[command(group(ArgGroup::new("formula_src").required(true).args(["formula", "formula_file"])))]
struct GameArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    formula: Option<String>,
    #[arg(long)]
    formula_file: Option<PathBuf>,
    /// Clock bound (finite).
    #[arg(long)]
    gamma: String,
    /// Output path for the DOT digraph; "-" writes to stdout.
    #[arg(long)]
    emit_dot: PathBuf,
    #[arg(long, default_value_t = 5000)]
    max_nodes: usize,
    /// Initial state (defaults to the lexicographically first one).
    #[arg(long)]
    state: Option<String>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("formula_src").required(true).args(["formula", "formula_file"])))]
struct TraceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    formula: Option<String>,
    #[arg(long)]
    formula_file: Option<PathBuf>,
    /// Clock bound (finite).
    #[arg(long)]
    gamma: String,
    /// Initial state (defaults to the lexicographically first one).
    #[arg(long)]
    state: Option<String>,
    /// Eloise's choices: "strategy", "stdin", or "script FILE".
    #[arg(long, num_args = 1..=2, default_values_t = [String::from("strategy")])]
    eloise: Vec<String>,
    /// Abelard's choices: "strategy", "stdin", or "script FILE".
    #[arg(long, num_args = 1..=2, default_values_t = [String::from("strategy")])]
    abelard: Vec<String>,
}

#[derive(Args)]
struct DiffArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    /// Instance parameters file (JSON).
    #[arg(long)]
    params: Option<PathBuf>,
    /// Worker threads for instance checking; 1 forces the sequential path.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    what: GenKind,
}

#[derive(Subcommand)]
enum GenKind {
    /// Print a random model document.
    Model(GenCommon),
    /// Print a random sentence.
    Formula(GenCommon),
}

#[derive(Args)]
struct GenCommon {
    #[arg(long)]
    seed: u64,
    /// Instance parameters file (JSON).
    #[arg(long)]
    params: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Deep games recurse one frame per round; give them room.
    let worker = std::thread::Builder::new()
        .name("mugame".into())
        .stack_size(256 << 20)
        .spawn(move || run(cli))
        .expect("spawn worker");
    match worker.join() {
        Ok(Ok(code)) => code,
        Ok(Err(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(panic) => std::panic::resume_unwind(panic),
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.cmd {
        Cmd::Check(args) => cmd_check(args),
        Cmd::Game(args) => cmd_game(args),
        Cmd::Trace(args) => cmd_trace(args),
        Cmd::Diff(args) => cmd_diff(args),
        Cmd::Gen(args) => cmd_gen(args),
    }
}

fn load_model(path: &PathBuf) -> Result<KripkeModel, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read model {}: {e}", path.display()))?;
    KripkeModel::load(&text).map_err(|e| format!("model {}: {e}", path.display()))
}

fn load_formula(text: &Option<String>, file: &Option<PathBuf>) -> Result<Formula, String> {
    let source = match (text, file) {
        (Some(t), None) => t.clone(),
        (None, Some(p)) => std::fs::read_to_string(p)
            .map_err(|e| format!("cannot read formula {}: {e}", p.display()))?,
        _ => unreachable!("clap enforces exactly one formula source"),
    };
    parse_formula(source.trim()).map_err(|e| format!("formula: {e}"))
}

fn parse_gamma(text: &str) -> Result<Ordinal, String> {
    text.parse::<Ordinal>().map_err(|e| e.to_string())
}

fn resolve_state(m: &KripkeModel, name: &Option<String>) -> Result<StateId, String> {
    match name {
        Some(n) => m.resolve(n).map_err(|e| e.to_string()),
        None => Ok(StateId(0)),
    }
}

fn cmd_check(args: CheckArgs) -> Result<ExitCode, String> {
    let model = load_model(&args.model)?;
    let formula = load_formula(&args.formula, &args.formula_file)?;
    let semantics_name = match args.semantics {
        SemanticsArg::Gts => "gts",
        SemanticsArg::Comp => "comp",
        SemanticsArg::Standard => "standard",
    };

    let (truth, gamma_text): (Vec<bool>, Option<String>) = match args.semantics {
        SemanticsArg::Standard => {
            if args.gamma.is_some() {
                eprintln!("warning: --semantics standard ignores --gamma");
            }
            let set = eval_standard(&model, &formula, &Assignment::empty());
            (model.states().map(|w| set.contains(w)).collect(), None)
        }
        SemanticsArg::Comp => {
            let gamma_text = args
                .gamma
                .as_deref()
                .ok_or("--semantics comp requires --gamma")?;
            let gamma = parse_gamma(gamma_text)?;
            let set = eval_bounded(&model, &formula, &Assignment::empty(), &gamma)
                .map_err(|e| e.to_string())?;
            (
                model.states().map(|w| set.contains(w)).collect(),
                Some(gamma.to_string()),
            )
        }
        SemanticsArg::Gts => {
            let gamma_text = args
                .gamma
                .as_deref()
                .ok_or("--semantics gts requires --gamma")?;
            let gamma = parse_gamma(gamma_text)?;
            let mut truth = Vec::new();
            for w in model.states() {
                truth.push(gts_truth(&model, w, &formula, &gamma).map_err(|e| e.to_string())?);
            }
            (truth, Some(gamma.to_string()))
        }
    };

    let rows: Vec<CheckRow> = model
        .states()
        .zip(&truth)
        .map(|(w, &result)| CheckRow {
            state: model.name(w).to_string(),
            result,
        })
        .collect();
    let query = match &args.state {
        Some(name) => {
            let id = model.resolve(name).map_err(|e| e.to_string())?;
            Some(CheckRow {
                state: name.clone(),
                result: truth[id.index()],
            })
        }
        None => None,
    };
    let all_true = rows.iter().all(|r| r.result);
    let report = CheckReport {
        formula: formula.to_string(),
        semantics: semantics_name.to_string(),
        gamma: gamma_text,
        rows,
        query,
        all_true,
    };

    match args.format {
        Format::Json => {
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"))
        }
        Format::Text => match &report.query {
            Some(row) => println!("{}", row.result),
            None => {
                for row in &report.rows {
                    println!("{}: {}", row.state, row.result);
                }
            }
        },
    }

    let holds = match &report.query {
        Some(row) => row.result,
        None => report.all_true,
    };
    Ok(ExitCode::from(if holds { 0 } else { 1 }))
}

fn cmd_game(args: GameArgs) -> Result<ExitCode, String> {
    let model = load_model(&args.model)?;
    let formula = load_formula(&args.formula, &args.formula_file)?;
    let gamma = parse_gamma(&args.gamma)?;
    let state = resolve_state(&model, &args.state)?;
    let g = GameSpec::new(&model, state, &formula, &gamma).map_err(|e| e.to_string())?;
    let dot = g.export_game_tree(args.max_nodes);
    if args.emit_dot.as_os_str() == "-" {
        print!("{dot}");
    } else {
        std::fs::write(&args.emit_dot, dot)
            .map_err(|e| format!("cannot write {}: {e}", args.emit_dot.display()))?;
    }
    Ok(ExitCode::from(0))
}

enum SourceSpec {
    Strategy,
    Stdin,
    Script(PathBuf),
}

fn parse_source(values: &[String], flag: &str) -> Result<SourceSpec, String> {
    match values {
        [v] if v == "strategy" => Ok(SourceSpec::Strategy),
        [v] if v == "stdin" => Ok(SourceSpec::Stdin),
        [v, path] if v == "script" => Ok(SourceSpec::Script(PathBuf::from(path))),
        _ => Err(format!(
            "--{flag} takes \"strategy\", \"stdin\" or \"script FILE\""
        )),
    }
}

/// Prompts on stderr and reads one choice token per line from stdin.
struct StdinSource;

impl ChoiceSource for StdinSource {
    fn choose(
        &mut self,
        g: &GameSpec,
        pos: &Position,
        chooser: Player,
        options: &[MoveOption],
    ) -> Result<ChoiceLabel, ChoiceError> {
        let legal: Vec<String> = options.iter().map(|o| g.describe_choice(&o.choice)).collect();
        eprintln!("{chooser} to move at {}", g.describe_position(pos));
        eprint!("choose one of [{}]: ", legal.join(", "));
        std::io::stderr().flush().ok();
        let mut line = String::new();
        std::io::stdin()
            .lock()
            .read_line(&mut line)
            .map_err(|_| ChoiceError::Exhausted)?;
        if line.is_empty() {
            return Err(ChoiceError::Exhausted);
        }
        mugame::game::parse_choice_token(g, options, line.trim())
            .ok_or_else(|| ChoiceError::Invalid(line.trim().to_string()))
    }
}

fn build_source(
    spec: SourceSpec,
    result: &mugame::game::SolveResult,
    player: Player,
) -> Result<Box<dyn ChoiceSource + '_>, String> {
    match spec {
        SourceSpec::Strategy => Ok(Box::new(StrategySource::new(result.strategy(player)))),
        SourceSpec::Stdin => Ok(Box::new(StdinSource)),
        SourceSpec::Script(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read script {}: {e}", path.display()))?;
            let tokens: Vec<String> = serde_json::from_str(&text)
                .map_err(|e| format!("script {}: expected a JSON array of strings: {e}", path.display()))?;
            Ok(Box::new(ScriptSource::new(tokens)))
        }
    }
}

fn cmd_trace(args: TraceArgs) -> Result<ExitCode, String> {
    let model = load_model(&args.model)?;
    let formula = load_formula(&args.formula, &args.formula_file)?;
    let gamma = parse_gamma(&args.gamma)?;
    let state = resolve_state(&model, &args.state)?;
    let g = GameSpec::new(&model, state, &formula, &gamma).map_err(|e| e.to_string())?;
    let solved = g.solve();
    let mut eloise = build_source(parse_source(&args.eloise, "eloise")?, &solved, Player::Eloise)?;
    let mut abelard =
        build_source(parse_source(&args.abelard, "abelard")?, &solved, Player::Abelard)?;
    let transcript = g.play(eloise.as_mut(), abelard.as_mut()).map_err(|e| e.to_string())?;
    for (i, round) in transcript.rounds.iter().enumerate() {
        println!(
            "round {:>3}: {} — {} chooses {}",
            i + 1,
            round.position,
            round.chooser,
            round.choice
        );
    }
    println!("ending position: {}", transcript.final_position);
    println!(
        "winner: {} after {} moves",
        transcript.winner,
        transcript.length()
    );
    Ok(ExitCode::from(if transcript.winner == Player::Eloise {
        0
    } else {
        1
    }))
}

fn load_params(path: &Option<PathBuf>) -> Result<InstanceParams, String> {
    let params: InstanceParams = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read params {}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("params {}: {e}", p.display()))?
        }
        None => InstanceParams::default(),
    };
    params.validate().map_err(|e| e.to_string())?;
    Ok(params)
}

fn cmd_diff(args: DiffArgs) -> Result<ExitCode, String> {
    let params = load_params(&args.params)?;
    let report = run_corpus_with_jobs(args.seed, args.instances, &params, args.jobs);
    match args.format {
        Format::Json => {
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"))
        }
        Format::Text => {
            println!("{}/{} pass", report.passed, report.total);
            println!(
                "oracle: {} cross-checked, {} over budget",
                report.oracle_checked, report.oracle_skipped
            );
            for failure in &report.failures {
                println!(
                    "FAIL seed {}: {}",
                    failure.seed,
                    serde_json::to_string(&failure).expect("report serializes")
                );
            }
        }
    }
    Ok(ExitCode::from(if report.pass() { 0 } else { 1 }))
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode, String> {
    match args.what {
        GenKind::Model(common) => {
            let params = load_params(&common.params)?;
            let (model, _, _, _) = random_instance(common.seed, &params);
            println!("{}", model.save());
        }
        GenKind::Formula(common) => {
            let params = load_params(&common.params)?;
            println!("{}", random_sentence(common.seed, &params));
        }
    }
    Ok(ExitCode::from(0))
}
