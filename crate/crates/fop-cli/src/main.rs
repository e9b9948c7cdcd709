use clap::Parser;
use fop_cli::commands::{self, Cli, NumericError, UsageError};

// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
fn main() {
    let cli = Cli::parse(); // clap exits with 2 on parse errors
    if let Err(err) = commands::run(cli) {
        eprintln!("error: {err:#}");
        let code = if err.downcast_ref::<UsageError>().is_some() {
            2
        } else if err.downcast_ref::<NumericError>().is_some() {
            4
        } else if matches!(
            err.downcast_ref::<fop_core::Error>(),
            Some(fop_core::Error::NonFinite)
        ) {
            4
        } else {
            3
        };
        std::process::exit(code);
    }
}
