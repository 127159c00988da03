//! Client side of a match, shared by the bot and the terminal player.

use async_trait::async_trait;
use mpst_runtime::{session, SessionConfig, SessionError};

use crate::model::{Config, Location, Player};

/// Reply to one of our attacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reply {
    Hit,
    Miss,
    Sunk,
    Winner,
}

/// What the opponent did to our board.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Incoming {
    Hit,
    Miss,
    Loser,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameResult {
    Won,
    Lost,
}

/// Decisions a player makes during a match.
#[async_trait]
pub trait Strategy: Send {
    fn fleet(&mut self) -> Config;

    async fn next_attack(&mut self) -> Location;

    fn attacked(&mut self, _at: Location, _reply: Reply) {}

    fn defended(&mut self, _at: Location, _what: Incoming) {}
}

// P1 and P2 differ only in state names and in who attacks first.
macro_rules! client {
    ($name:ident, $api:ident, $role:ident, $first:ident, atk: $atk:ident / $atk_ch:ident, def: $def:ident / $def_ch:ident) => {
        pub async fn $name<S: Strategy>(
            config: SessionConfig,
            url: &str,
            strategy: &mut S,
        ) -> Result<GameResult, SessionError> {
            use crate::game::messages::*;
            use crate::game::$api::*;
            use mpst_runtime::Channel;

            enum Turn {
                Attack(Channel<$role, $atk>),
                Defend(Channel<$role, $def>),
            }

            session::<$role, _, _, _>(config, |ch| async move {
                let ch = ch.connect(url).await?;
                let ch = ch.send(Init(strategy.fleet())).await?;
                let mut turn = Turn::$first(ch);
                loop {
                    turn = match turn {
                        Turn::Attack(ch) => {
                            let (ch, at) = ch.lift(strategy.next_attack()).await;
                            let ch = ch.send(Attack(at)).await?;
                            match ch.choice().await? {
                                $atk_ch::Hit(ch) => {
                                    let (Hit, ch) = ch.receive().await?;
                                    strategy.attacked(at, Reply::Hit);
                                    Turn::Attack(ch)
                                }
                                $atk_ch::Sunk(ch) => {
                                    let (Sunk, ch) = ch.receive().await?;
                                    strategy.attacked(at, Reply::Sunk);
                                    Turn::Attack(ch)
                                }
                                $atk_ch::Miss(ch) => {
                                    let (Miss, ch) = ch.receive().await?;
                                    strategy.attacked(at, Reply::Miss);
                                    Turn::Defend(ch)
                                }
                                $atk_ch::Winner(ch) => {
                                    let (Winner, ch) = ch.receive().await?;
                                    strategy.attacked(at, Reply::Winner);
                                    return Ok((ch, GameResult::Won));
                                }
                            }
                        }
                        Turn::Defend(ch) => match ch.choice().await? {
                            $def_ch::Hit(ch) => {
                                let (HitLocation(at), ch) = ch.receive().await?;
                                strategy.defended(at, Incoming::Hit);
                                Turn::Defend(ch)
                            }
                            $def_ch::Miss(ch) => {
                                let (MissLocation(at), ch) = ch.receive().await?;
                                strategy.defended(at, Incoming::Miss);
                                Turn::Attack(ch)
                            }
                            $def_ch::Loser(ch) => {
                                let (Loser(at), ch) = ch.receive().await?;
                                strategy.defended(at, Incoming::Loser);
                                return Ok((ch, GameResult::Lost));
                            }
                        },
                    };
                }
            })
            .await
        }
    };
}

client!(play_p1, battle_ships_p1, P1, Attack, atk: S2 / S3Choices, def: S4 / S4Choices);
client!(play_p2, battle_ships_p2, P2, Defend, atk: S3 / S4Choices, def: S2 / S2Choices);

/// Plays one match as `role` against the server at `url`.
pub async fn play<S: Strategy>(
    role: Player,
    config: SessionConfig,
    url: &str,
    strategy: &mut S,
) -> Result<GameResult, SessionError> {
    match role {
        Player::P1 => play_p1(config, url, strategy).await,
        Player::P2 => play_p2(config, url, strategy).await,
    }
}
