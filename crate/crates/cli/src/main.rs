use clap::Parser;

fn main() -> anyhow::Result<()> {
    qpop_cli::run(qpop_cli::Cli::parse())
}
