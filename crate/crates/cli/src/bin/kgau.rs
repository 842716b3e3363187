use clap::Parser;

fn main() {
    let cli = kgau_cli::Cli::parse();
    if !matches!(cli.command, kgau_cli::Command::Worker { .. }) {
        env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    }
    let code = kgau_cli::dispatch(cli, &mut std::io::stdout().lock());
    std::process::exit(code);
}
