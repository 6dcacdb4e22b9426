use clap::Parser;

fn main() {
    let cli = weylpinch_cli::Cli::try_parse().unwrap_or_else(|e| {
        // usage errors share the configuration exit code
        let code = if e.use_stderr() { weylpinch_cli::EXIT_ERROR } else { 0 };
        let _ = e.print();
        std::process::exit(code);
    });
    std::process::exit(weylpinch_cli::run(cli));
}
