use std::io::Write;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let budget = std::env::var("MEANX_BUDGET").ok();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = meanx_cli::run(
        std::env::args_os(),
        budget.as_deref(),
        &mut stdout.lock(),
        &mut stderr.lock(),
    );
    let _ = std::io::stdout().flush();
    std::process::exit(code);
}
