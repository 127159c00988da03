//! Interactive player: boards on stdout, attacks typed on stdin.

use std::io::Write;

use async_trait::async_trait;
use tokio::io::{AsyncBufRead, AsyncBufReadExt};

use crate::model::{Board, Config, Grid, Location};
use crate::player::{Incoming, Reply, Strategy};

/// Parses `attack x y` (the keyword is optional).
pub fn parse_attack(line: &str, grid: Grid) -> Result<Location, String> {
    let mut words = line.split_whitespace().peekable();
    if words.peek().is_some_and(|w| w.eq_ignore_ascii_case("attack")) {
        words.next();
    }
    let nums: Vec<&str> = words.collect();
    let [x, y] = nums[..] else {
        return Err("type: attack x y".into());
    };
    let x: i32 = x.parse().map_err(|_| format!("`{x}` is not a number"))?;
    let y: i32 = y.parse().map_err(|_| format!("`{y}` is not a number"))?;
    let l = Location::new(x, y);
    if !grid.contains(l) {
        return Err(format!("{l} is off the board"));
    }
    Ok(l)
}

pub struct Terminal<R, W> {
    input: R,
    out: W,
    grid: Grid,
    fleet: Config,
    own: Board,
    enemy: Board,
}

impl<R, W> Terminal<R, W> {
    pub fn new(input: R, out: W, fleet: Config) -> Self {
        Terminal {
            input,
            out,
            grid: Grid::default(),
            own: Board::own(&fleet),
            enemy: Board::default(),
            fleet,
        }
    }
}

impl<R, W: Write> Terminal<R, W> {
    fn say(&mut self, text: &str) {
        let _ = writeln!(self.out, "{text}");
        let _ = self.out.flush();
    }

    fn boards(&mut self) {
        let text = format!(
            "opponent\n{}\nyou\n{}",
            self.enemy.render(self.grid),
            self.own.render(self.grid)
        );
        self.say(&text);
    }
}

#[async_trait]
impl<R, W> Strategy for Terminal<R, W>
where
    R: AsyncBufRead + Unpin + Send,
    W: Write + Send,
{
    fn fleet(&mut self) -> Config {
        self.fleet.clone()
    }

    async fn next_attack(&mut self) -> Location {
        self.boards();
        loop {
            let _ = write!(self.out, "attack x y> ");
            let _ = self.out.flush();
            let mut line = String::new();
            match self.input.read_line(&mut line).await {
                Ok(0) | Err(_) => {
                    // Input closed: keep the session legal by firing somewhere.
                    return Location::new(0, 0);
                }
                Ok(_) => {}
            }
            match parse_attack(&line, self.grid) {
                Ok(l) => return l,
                Err(e) => self.say(&e),
            }
        }
    }

    fn attacked(&mut self, at: Location, reply: Reply) {
        match reply {
            Reply::Miss => {
                self.enemy.misses.insert(at);
                self.say(&format!("{at}: miss"));
            }
            Reply::Hit => {
                self.enemy.hits.insert(at);
                self.say(&format!("{at}: hit"));
            }
            Reply::Sunk => {
                self.enemy.hits.insert(at);
                self.say(&format!("{at}: sunk!"));
            }
            Reply::Winner => {
                self.enemy.hits.insert(at);
                self.say("you win");
            }
        }
    }

    fn defended(&mut self, at: Location, what: Incoming) {
        match what {
            Incoming::Miss => {
                self.own.misses.insert(at);
                self.say(&format!("opponent missed at {at}"));
            }
            Incoming::Hit => {
                self.own.hits.insert(at);
                self.say(&format!("opponent hit {at}"));
            }
            Incoming::Loser => {
                self.own.hits.insert(at);
                self.boards();
                self.say("you lose");
            }
        }
    }
}
