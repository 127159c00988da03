//! Battleship played over the session APIs generated from `battleship.scr`.
//!
//! Two players connect to a [`server`], send their fleets and then take turns
//! attacking. A hit lets the attacker go again, a miss swaps the roles.

pub mod bot;
pub mod model;
pub mod player;
pub mod server;
pub mod terminal;

/// Generated at build time from the BattleShips protocol.
pub mod game {
    pub mod messages {
        include!(concat!(env!("OUT_DIR"), "/game/messages.rs"));
    }
    pub mod battle_ships_p1 {
        include!(concat!(env!("OUT_DIR"), "/game/battle_ships_p1.rs"));
    }
    pub mod battle_ships_p2 {
        include!(concat!(env!("OUT_DIR"), "/game/battle_ships_p2.rs"));
    }
    pub mod battle_ships_game_server {
        include!(concat!(env!("OUT_DIR"), "/game/battle_ships_game_server.rs"));
    }
}

pub use game::battle_ships_game_server::PROTOCOL;
pub use model::{AttackOutcome, Config, Location, Player};
