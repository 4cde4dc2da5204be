use std::io::{stderr, stdout};

fn main() {
    // stderr stays unlocked: progress lines are written from worker threads.
    let code = linmdtw_cli::run(std::env::args_os(), &mut stdout().lock(), &mut stderr());
    std::process::exit(code);
}
