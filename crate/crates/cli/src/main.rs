use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use tsvar_cli::{run, Command, Expect, Format, Options};
use tsvar_core::composition::Objective;

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    AnalyzeScale,
    Solve,
    CheckEl,
    Transversality,
    IsoCheck,
    Synthesize,
    Helmholtz,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Obj {
    Min,
    Max,
}

#[derive(Clone, Copy, ValueEnum)]
enum Exp {
    El,
    NotEl,
}

/// Calculus of variations on time scales.
///
/// Exit status: 0 on success, 1 on input errors, 2 when a check fails.
#[derive(Parser)]
#[command(name = "tsvar", version)]
struct Cli {
    command: Cmd,
    /// Problem file (`analyze-scale` also takes a scale spec such as `hZ(0.5, 0, 2)`).
    input: String,
    #[arg(long, value_enum)]
    format: Option<Fmt>,
    /// Constancy tolerance, replacing the per-scale default.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    multistart: Option<usize>,
    #[arg(long, value_enum)]
    objective: Option<Obj>,
    /// Comma-separated steps h for an hZ refinement sweep over the problem's interval.
    #[arg(long, value_delimiter = ',')]
    refine: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    expect: Option<Exp>,
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
    /// Append wall-clock timings (makes the report nondeterministic).
    #[arg(long)]
    timings: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let command = match cli.command {
        Cmd::AnalyzeScale => Command::AnalyzeScale,
        Cmd::Solve => Command::Solve,
        Cmd::CheckEl => Command::CheckEl,
        Cmd::Transversality => Command::Transversality,
        Cmd::IsoCheck => Command::IsoCheck,
        Cmd::Synthesize => Command::Synthesize,
        Cmd::Helmholtz => Command::Helmholtz,
    };
    let opts = Options {
        format: cli.format.map(|f| match f {
            Fmt::Text => Format::Text,
            Fmt::Json => Format::Json,
            Fmt::Csv => Format::Csv,
        }),
        tol: cli.tol,
        seed: cli.seed,
        multistart: cli.multistart,
        objective: cli.objective.map(|o| match o {
            Obj::Min => Objective::Min,
            Obj::Max => Objective::Max,
        }),
        refine: cli.refine,
        expect: cli.expect.map(|e| match e {
            Exp::El => Expect::El,
            Exp::NotEl => Expect::NotEl,
        }),
        timings: cli.timings,
    };
    // The echo leaves out the output path so that `-o` does not change the report.
    let mut echo = vec!["tsvar".to_string()];
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "-o" || a == "--output" {
            args.next();
        } else if !a.starts_with("--output=") {
            echo.push(a);
        }
    }

    let outcome = match run(command, &cli.input, &opts, &echo.join(" ")) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("tsvar: {e}");
            return ExitCode::from(1);
        }
    };
    let text = outcome.report.render(outcome.format);
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("tsvar: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(if outcome.passed { 0 } else { 2 })
}
