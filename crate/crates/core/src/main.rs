use clap::Parser;

fn main() {
    let cli = flatsteer::cli::Cli::parse();
    std::process::exit(flatsteer::cli::run(cli));
}
