use std::io::Write;

use dnpsim::cli::{run, EXIT_CONFIG, THREADS_ENV};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        match value.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    eprintln!("error: cannot start {n} worker threads: {e}");
                    std::process::exit(EXIT_CONFIG);
                }
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got '{value}'");
                std::process::exit(EXIT_CONFIG);
            }
        }
    }
    let args: Vec<String> = std::env::args().collect();
    let (stdout, stderr) = (std::io::stdout(), std::io::stderr());
    let code = run(&args, &mut stdout.lock(), &mut stderr.lock());
    let _ = std::io::stdout().flush();
    std::process::exit(code);
}
