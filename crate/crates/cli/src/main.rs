use clap::Parser;

fn main() {
    let cli = fdcr_cli::Cli::parse();
    match fdcr_cli::run(&cli) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
        }
        Err(e) => {
            eprintln!("fdcr: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
