use std::process::ExitCode;

fn main() -> ExitCode {
    let result = biclock::cli::run(std::env::args_os());
    if result.exit_code == biclock::cli::EXIT_OK {
        if !result.message.is_empty() {
            println!("{}", result.message.trim_end());
        }
        for p in &result.artifacts {
            println!("wrote {}", p.display());
        }
    } else {
        eprintln!("{}", result.message.trim_end());
    }
    ExitCode::from(result.exit_code as u8)
}
