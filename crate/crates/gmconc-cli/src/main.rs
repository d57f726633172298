use std::process::ExitCode;

fn main() -> ExitCode {
    let config = gmconc_cli::parse_args_or_exit(std::env::args());
    match gmconc_cli::run(&config) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
