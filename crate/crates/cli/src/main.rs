use clap::Parser;
use kgr_cli::{commands, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            std::process::exit(2);
        }
        Err(e) => {
            let _ = e.print();
            return;
        }
    };
    if let Err(e) = commands::run(&cli) {
        eprintln!("kgr: {e}");
        std::process::exit(e.exit_code());
    }
}
