use clap::Parser;

use edge_dynamics_cli::commands::{self, Cli};
use edge_dynamics_cli::exit_code_for;

fn main() {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("EDGE_DYNAMICS_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            if k >= 1 {
                // ignore failure: the pool may already be initialized
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
        }
    }
    if let Err(e) = commands::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code_for(&e));
    }
}
