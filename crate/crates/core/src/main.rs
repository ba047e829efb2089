use clap::Parser;

use dbar_fiber::cli::{run, Cli, Invocation};

fn main() {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let code = match Invocation::from_cli(&cli).and_then(|inv| run(cli.command, &inv)) {
        Ok(outcome) => {
            if !cli.quiet {
                println!("{}", outcome.summary);
                for f in &outcome.files {
                    println!("  wrote {}", f.display());
                }
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("dbar-fiber: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
