use std::process::ExitCode;

use bandsel_cli::CliError;

fn main() -> ExitCode {
    match bandsel_cli::run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprint!("{m}"),
                CliError::Core(_) => eprintln!("error: {e}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
