//! jamsentry: synthesize OFDM links under weak jamming, turn IQ captures
//! into constellation-histogram images, train/run the two detectors, and
//! reproduce the evaluation experiments.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/format error, 3 scenario
//! rejected by the weak-regime check.

mod commands;
mod manifest;

use clap::error::ErrorKind;
use clap::Parser;

use jamsentry::error::Error;

fn main() {
    let cli = match commands::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not usage errors
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::ScenarioRejected { .. } => 3,
                Error::Parameter(_) => 1,
                _ => 2,
            };
            std::process::exit(code);
        }
    }
}
