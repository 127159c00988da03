use battleship::bot::Bot;
use battleship::player::{play, GameResult};
use battleship::{Player, PROTOCOL};
use clap::{Parser, ValueEnum};
use mpst_runtime::SessionConfig;

#[derive(Clone, Copy, ValueEnum)]
enum Role {
    P1,
    P2,
}

/// Computer Battleship player.
#[derive(Parser)]
struct Args {
    #[arg(long, default_value = "ws://127.0.0.1:9001/")]
    url: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, ignore_case = true, default_value_t = Role::P1)]
    role: Role,
}

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let role = match args.role {
        Role::P1 => Player::P1,
        Role::P2 => Player::P2,
    };
    let mut bot = Bot::new(args.seed);
    match play(role, SessionConfig::new(PROTOCOL), &args.url, &mut bot).await {
        Ok(GameResult::Won) => println!("{role} won"),
        Ok(GameResult::Lost) => println!("{role} lost"),
        Err(e) => {
            eprintln!("{role}: {e}");
            std::process::exit(1);
        }
    }
}
