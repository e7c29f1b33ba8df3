use clap::Parser;

fn main() {
    let cli = cim_cli::Cli::parse();
    let code = cim_cli::run(cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
