use std::process::ExitCode;

use ep_cavity_cli::{parse_config, run_command, CliError};

fn main() -> ExitCode {
    let result = parse_config(std::env::args_os().skip(1)).and_then(|config| run_command(&config));
    let Err(err) = result else {
        return ExitCode::SUCCESS;
    };
    let code = err.exit_code();
    match err {
        CliError::Clap(e) => {
            let _ = e.print();
        }
        CliError::Usage(msg) => eprintln!("{msg}"),
        other => eprintln!("error: {}", other.to_string().replace('\n', " ")),
    }
    ExitCode::from(code as u8)
}
