//! The `readorder` command-line tool.

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

mod args;
mod commands;
mod config;
pub mod failure;
pub mod render;

pub use args::{Cli, Command};
pub use config::FileConfig;
use failure::{classify, Failure};

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    // a second call from the same process (tests) keeps the first logger
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let ctx = commands::RunContext {
        seed: cli.seed.or(file.seed),
        file,
    };
    let jobs = cli.jobs.or(ctx.file.jobs).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::usage(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Gen(a) => commands::gen(&ctx, a),
        Command::Stats(a) => commands::stats(a),
        Command::Align(a) => commands::align(a),
        Command::Train(a) => commands::train_cmd(&ctx, a),
        Command::Predict(a) => commands::predict(&ctx, a),
        Command::Eval(a) => commands::eval(a),
        Command::AdaptLines(a) => commands::adapt_lines(a),
        Command::Render(a) => commands::render(a),
    })
}

/// Runs the tool on `args` (program name first) and returns the exit code.
/// Failures are reported on stderr as a single JSON object.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let f = Failure::usage(e.render().to_string().trim().to_string());
            eprintln!("{}", f.to_json());
            return f.code;
        }
    };
    init_logging(cli.verbose);
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            let f = classify(&e);
            eprintln!("{}", f.to_json());
            f.code
        }
    }
}
