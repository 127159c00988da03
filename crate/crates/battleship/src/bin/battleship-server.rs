use std::time::Duration;

use battleship::server::{serve, ServeOptions};
use clap::Parser;

/// Battleship game server.
#[derive(Parser)]
struct Args {
    /// `host:port` for WebSocket, or `mem:name`.
    #[arg(long, default_value = "127.0.0.1:9001")]
    bind: String,
    /// Exit after this many matches.
    #[arg(long)]
    matches: Option<usize>,
    /// Abort a match when a player is silent for this many seconds.
    #[arg(long, default_value_t = 300)]
    timeout: u64,
}

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let listener = match mpst_runtime::listen(&args.bind).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("cannot bind {}: {e}", args.bind);
            std::process::exit(2);
        }
    };
    log::info!("listening on {}", args.bind);
    let opts = ServeOptions {
        max_matches: args.matches,
        recv_timeout: Some(Duration::from_secs(args.timeout)),
        observer: None,
    };
    if let Err(e) = serve(listener, opts).await {
        eprintln!("server stopped: {e}");
        std::process::exit(1);
    }
}
