use clap::Parser;

fn main() {
    let cli = nvkin::cli::Cli::parse();
    std::process::exit(nvkin::cli::run(&cli));
}
