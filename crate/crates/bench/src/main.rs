use clap::Parser;
use hetgp_bench::cli::{run, Cli};

fn main() -> anyhow::Result<()> {
    run(Cli::parse())
}
