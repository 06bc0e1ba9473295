//! `painleve`: command-line front end.
//!
//! Exit codes: 0 on success, 1 on bad flags or a failed verification, 2 when
//! a computation fails. Every run that gets past flag parsing leaves
//! `run_<command>.json` in the output directory.

mod commands;
mod record;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use commands::Cmd;
use record::{RunRecord, Sink};

#[derive(Parser)]
#[command(name = "painleve", version, about = "Connection problem for Phi'' = (Phi'^2 - 1) cot Phi + (1 - Phi')/x")]
struct Cli {
    /// Output directory.
    #[arg(long, env = "PAINLEVE_OUT_DIR", default_value = "painleve-out", global = true)]
    out_dir: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
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
    let start = Instant::now();
    let mut sink = match Sink::new(&cli.out_dir) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", cli.out_dir.display());
            return ExitCode::from(2);
        }
    };
    let (code, error) = match cli.cmd.run(&mut sink) {
        Ok(code) => (code, None),
        Err(f) => {
            eprintln!("error: {}", f.message);
            (f.code, Some(f.message))
        }
    };
    let parameters = match cli.cmd.parameters() {
        serde_json::Value::Object(m) => m.into_iter().collect(),
        _ => BTreeMap::new(),
    };
    let rec = RunRecord {
        command: cli.cmd.name().to_string(),
        parameters,
        outputs: sink.outputs.clone(),
        timings: BTreeMap::from([("total_seconds".to_string(), start.elapsed().as_secs_f64())]),
        version: record::version(),
        exit_code: code,
        error,
    };
    if let Err(e) = record::save(sink.dir(), &rec) {
        eprintln!("error: cannot write run record: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code as u8)
}
