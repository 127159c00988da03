use battleship::bot::random_fleet;
use battleship::model::{Grid, FLEET};
use battleship::player::{play, GameResult};
use battleship::terminal::Terminal;
use battleship::{Player, PROTOCOL};
use clap::{Parser, ValueEnum};
use mpst_runtime::SessionConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, ValueEnum)]
enum Role {
    P1,
    P2,
}

/// Play Battleship from the terminal. Ships are placed for you.
#[derive(Parser)]
struct Args {
    #[arg(long, default_value = "ws://127.0.0.1:9001/")]
    url: String,
    #[arg(long, value_enum, ignore_case = true, default_value_t = Role::P1)]
    role: Role,
    /// Seed for ship placement; random when omitted.
    #[arg(long)]
    seed: Option<u64>,
}

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let role = match args.role {
        Role::P1 => Player::P1,
        Role::P2 => Player::P2,
    };
    let mut rng = match args.seed {
        Some(s) => ChaCha8Rng::seed_from_u64(s),
        None => ChaCha8Rng::from_os_rng(),
    };
    let fleet = random_fleet(&mut rng, Grid::default(), &FLEET);
    let stdin = tokio::io::BufReader::new(tokio::io::stdin());
    let mut term = Terminal::new(stdin, std::io::stdout(), fleet);
    println!("connecting to {} as {role}", args.url);
    match play(role, SessionConfig::new(PROTOCOL), &args.url, &mut term).await {
        Ok(GameResult::Won) => println!("game over: you won"),
        Ok(GameResult::Lost) => println!("game over: you lost"),
        Err(e) => {
            eprintln!("game aborted: {e}");
            std::process::exit(1);
        }
    }
}
