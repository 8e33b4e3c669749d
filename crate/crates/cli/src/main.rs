use clap::Parser;

fn main() {
    let cli = instrux_cli::Cli::parse();
    let _ = env_logger::Builder::new()
        .parse_filters(&cli.globals.log_level)
        .format_timestamp(None)
        .try_init();
    std::process::exit(instrux_cli::run(&cli));
}
