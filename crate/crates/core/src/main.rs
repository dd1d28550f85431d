use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = quintic_pib::cli::Args::parse();
    std::process::exit(quintic_pib::cli::main_with(args));
}
