//! Batch command-line front end for `wmh-core`.
//!
//! Every subcommand reads a CSV manifest, processes cases on a worker pool and
//! writes results in manifest order, so output files do not depend on the
//! number of workers.

pub mod args;
pub mod commands;
pub mod manifest;
pub mod report;

use anyhow::Result;

pub use args::{Cli, Command};

/// Version tag written at the top level of every JSON report.
pub const SCHEMA_VERSION: &str = "1.0";

/// Runs a parsed command line and returns the process exit code: 0 when every
/// case succeeded, 1 when some cases failed or were excluded.
pub fn run(cli: Cli) -> Result<i32> {
    let pool = build_pool(cli.workers)?;
    pool.install(|| match cli.command {
        Command::Preprocess(a) => commands::preprocess::run(&a),
        Command::Evaluate(a) => commands::evaluate::run(&a),
        Command::Fuse(a) => commands::fuse::run(&a),
        Command::Distribution(a) => commands::distribution::run(&a),
        Command::Phantom(a) => commands::phantom::run(&a),
        Command::Stats(a) => commands::stats::run(&a),
    })
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()?)
}

/// Maps `f` over `items` on the current pool, keeping input order.
pub fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// The error chain joined with ": ", skipping causes already quoted by the
/// message before them.
pub fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}
