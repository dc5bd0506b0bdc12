use clap::Parser;

fn main() {
    let cli = pipelint::cli::Cli::parse();
    let code = pipelint::cli::execute(cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
