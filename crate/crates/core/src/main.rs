use std::process::ExitCode;

fn configure_threads() {
    let Ok(v) = std::env::var("MARKERLENS_THREADS") else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(0) => {}
        Ok(n) => {
            // Fails only if a pool already exists, which cannot happen this early.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Err(_) => eprintln!("ignoring MARKERLENS_THREADS={v:?}: not a count"),
    }
}

fn main() -> ExitCode {
    configure_threads();
    let code = markerlens::cli::run_cli(std::env::args_os());
    ExitCode::from(code as u8)
}
