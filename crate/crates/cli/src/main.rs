use std::io::{self, BufReader};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use sparse_wm::corpus::data::{bundled_script, bundled_suite};
use sparse_wm::corpus::harness::{ablation, crossvalidate, k_sweep, suite_config, sweep_table};
use sparse_wm::corpus::house::{house_config, run_house_eval};
use sparse_wm::corpus::script::{replay, run_script, AnswerKey, Script};
use sparse_wm::interface::{repl, serve, Console};
use sparse_wm::{Config, Session};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    /// Bundled categorization script; every keyed question must be right.
    Categorization,
    /// Bundled pronoun script; every keyed question must be right.
    Pronouns,
    /// Rounds of train-then-test over the bundled question banks.
    Crossvalidation,
    /// Component ablations; accuracy must fall as components are removed.
    Ablation,
    /// Winner-count sweep; accuracy must not change with k.
    KSweep,
    /// Virtual house tasks after 1 to 5 training examples.
    House,
}

/// Sparse-signal working-memory agent.
///
/// Without --script, --serve or --eval, reads lines from standard input.
#[derive(Parser, Debug)]
#[command(name = "swm", version)]
struct Args {
    /// Replay a script file through the terminal dispatcher.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Answer key for --script: `<line>\t<answer>|...` per question line.
    #[arg(long, requires = "script")]
    key: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON configuration file; unset fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Serve the HTTP interface on this local port.
    #[arg(long)]
    serve: Option<u16>,
    #[arg(long, value_enum)]
    eval: Option<Suite>,
    /// Cross-validation rounds.
    #[arg(long, default_value_t = 4)]
    rounds: usize,
    /// Lowest accepted cross-validation accuracy.
    #[arg(long, default_value_t = 0.0)]
    min_accuracy: f64,
}

fn config(args: &Args, base: Config) -> Result<Config, String> {
    let mut c = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            Config::from_json(&text).map_err(|e| e.to_string())?
        }
        None => base,
    };
    if let Some(seed) = args.seed {
        c.seed = seed;
    }
    Ok(c)
}

fn eval(args: &Args, suite: Suite) -> Result<bool, String> {
    let e = |e: sparse_wm::Error| e.to_string();
    match suite {
        Suite::Categorization | Suite::Pronouns => {
            let name = if matches!(suite, Suite::Categorization) { "categorization" } else { "pronouns" };
            let (text, key) = bundled_script(name).expect("bundled script");
            let script = Script::parse(text, name).map_err(e)?;
            let key = AnswerKey::parse(key.expect("bundled key")).map_err(e)?;
            let mut session = Session::new(config(args, suite_config())?).map_err(e)?;
            let run = replay(&mut session, &script, &key);
            for r in &run.results {
                println!("{}\t{}\t{}\t{}", r.line, if r.correct { "PASS" } else { "FAIL" }, r.question, r.answer);
            }
            for (line, why) in &run.errors {
                println!("{line}\terror\t{why}");
            }
            println!("{}/{} correct", run.correct(), run.total());
            Ok(run.correct() == run.total() && run.total() > 0)
        }
        Suite::Crossvalidation => {
            let report = crossvalidate(&config(args, suite_config())?, &bundled_suite(), args.rounds).map_err(e)?;
            print!("{report}");
            Ok(report.accuracy() >= args.min_accuracy)
        }
        Suite::Ablation => {
            let removals = vec![vec!["comparison".to_string()], vec!["working_phrase".to_string()]];
            let rows = ablation(&config(args, suite_config())?, &bundled_suite(), args.rounds, &removals).map_err(e)?;
            print!("{}", sweep_table(&rows));
            let acc: Vec<f64> = rows.iter().map(|r| r.report.accuracy()).collect();
            Ok(acc[0] > acc[1] && acc[1] > acc[2])
        }
        Suite::KSweep => {
            let rows = k_sweep(&config(args, suite_config())?, &bundled_suite(), args.rounds, &[1, 3, 5, 10, 20]).map_err(e)?;
            print!("{}", sweep_table(&rows));
            Ok(rows.windows(2).all(|w| w[0].report.correct() == w[1].report.correct()))
        }
        Suite::House => {
            let report = run_house_eval(&config(args, house_config())?, &[1, 2, 3, 4], 5).map_err(e)?;
            print!("{report}");
            let means = report.means();
            Ok(means[0] >= 0.75 && means[4] >= 0.95 && means.windows(2).all(|w| w[0] <= w[1]))
        }
    }
}

fn run(args: &Args) -> Result<bool, String> {
    if let Some(suite) = args.eval {
        return eval(args, suite);
    }
    let interactive = Config {
        auto_exploit: true,
        ..Config::default()
    };
    let session = Session::new(config(args, interactive)?).map_err(|e| e.to_string())?;
    let mut console = Console::new(session);
    if let Some(path) = &args.script {
        let stdout = io::stdout();
        if let Some(key_path) = &args.key {
            let script = Script::load(path).map_err(|e| e.to_string())?;
            let key = AnswerKey::load(key_path).map_err(|e| e.to_string())?;
            key.check(&script).map_err(|e| e.to_string())?;
            let report = run_script(console.session_mut(), &script, &key);
            print!("{report}");
            return Ok(report.correct() == report.total());
        }
        let file = std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
        repl(&mut console, BufReader::new(file), stdout.lock()).map_err(|e| e.to_string())?;
        if args.serve.is_none() {
            return Ok(true);
        }
    }
    if let Some(port) = args.serve {
        let addr = SocketAddr::from(([127, 0, 0, 1], port));
        eprintln!("serving on http://{addr}");
        let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
        runtime.block_on(serve(console, addr)).map_err(|e| e.to_string())?;
        return Ok(true);
    }
    repl(&mut console, io::stdin().lock(), io::stdout().lock()).map_err(|e| e.to_string())?;
    Ok(true)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("evaluation failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
