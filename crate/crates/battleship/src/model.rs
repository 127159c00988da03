//! Game rules: boards, fleets and attack judging.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub const WIDTH: i32 = 10;
pub const HEIGHT: i32 = 10;
/// Ship lengths of the classic fleet.
pub const FLEET: [usize; 5] = [5, 4, 3, 3, 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Location {
    pub x: i32,
    pub y: i32,
}

impl Location {
    pub fn new(x: i32, y: i32) -> Self {
        Location { x, y }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A player's secret ship placement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    pub ships: Vec<Vec<Location>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub width: i32,
    pub height: i32,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            width: WIDTH,
            height: HEIGHT,
        }
    }
}

impl Grid {
    pub fn contains(&self, l: Location) -> bool {
        (0..self.width).contains(&l.x) && (0..self.height).contains(&l.y)
    }

    pub fn cells(&self) -> impl Iterator<Item = Location> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Location::new(x, y)))
    }

    pub fn size(&self) -> usize {
        (self.width * self.height) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    OutOfBounds { ship: usize, at: Location },
    EmptyShip { ship: usize },
    NotStraight { ship: usize },
    NotContiguous { ship: usize },
    Overlap { at: Location },
    Fleet { expected: Vec<usize>, found: Vec<usize> },
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::OutOfBounds { .. } => "OUT_OF_BOUNDS",
            Violation::EmptyShip { .. } => "EMPTY_SHIP",
            Violation::NotStraight { .. } => "NOT_STRAIGHT",
            Violation::NotContiguous { .. } => "NOT_CONTIGUOUS",
            Violation::Overlap { .. } => "OVERLAP",
            Violation::Fleet { .. } => "FLEET",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfBounds { ship, at } => write!(f, "ship {ship} leaves the board at {at}"),
            Violation::EmptyShip { ship } => write!(f, "ship {ship} has no cells"),
            Violation::NotStraight { ship } => write!(f, "ship {ship} is not a straight line"),
            Violation::NotContiguous { ship } => write!(f, "ship {ship} has gaps"),
            Violation::Overlap { at } => write!(f, "ships overlap at {at}"),
            Violation::Fleet { expected, found } => write!(f, "fleet should be {expected:?}, got {found:?}"),
        }
    }
}

/// Checks bounds, shape, disjointness and the fleet multiset.
pub fn validate_config(c: &Config, grid: Grid, fleet: &[usize]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut overlaps = BTreeSet::new();
    for (i, ship) in c.ships.iter().enumerate() {
        if ship.is_empty() {
            out.push(Violation::EmptyShip { ship: i });
            continue;
        }
        for &l in ship {
            if !grid.contains(l) {
                out.push(Violation::OutOfBounds { ship: i, at: l });
            }
            if !seen.insert(l) {
                overlaps.insert(l);
            }
        }
        let same_row = ship.iter().all(|l| l.y == ship[0].y);
        let same_col = ship.iter().all(|l| l.x == ship[0].x);
        if !same_row && !same_col {
            out.push(Violation::NotStraight { ship: i });
            continue;
        }
        let mut along: Vec<i32> = ship.iter().map(|l| if same_row { l.x } else { l.y }).collect();
        along.sort_unstable();
        if along.windows(2).any(|w| w[1] != w[0] + 1) {
            out.push(Violation::NotContiguous { ship: i });
        }
    }
    out.extend(overlaps.into_iter().map(|at| Violation::Overlap { at }));
    let mut expected = fleet.to_vec();
    let mut found: Vec<usize> = c.ships.iter().map(Vec::len).collect();
    expected.sort_unstable();
    found.sort_unstable();
    if expected != found {
        out.push(Violation::Fleet { expected, found });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackOutcome {
    Hit,
    Miss,
    Sunk,
    Win,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepeatAttack(pub Location);

impl fmt::Display for RepeatAttack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} was already attacked", self.0)
    }
}

impl std::error::Error for RepeatAttack {}

/// Judges `loc` against `defender`'s fleet given the cells judged so far.
/// `judged` holds hits and misses alike.
pub fn judge_attack(
    defender: &Config,
    judged: &BTreeSet<Location>,
    loc: Location,
) -> Result<AttackOutcome, RepeatAttack> {
    if judged.contains(&loc) {
        return Err(RepeatAttack(loc));
    }
    let Some(ship) = defender.ships.iter().find(|s| s.contains(&loc)) else {
        return Ok(AttackOutcome::Miss);
    };
    let hit = |l: &Location| *l == loc || judged.contains(l);
    if !ship.iter().all(hit) {
        return Ok(AttackOutcome::Hit);
    }
    if defender.ships.iter().flatten().all(hit) {
        Ok(AttackOutcome::Win)
    } else {
        Ok(AttackOutcome::Sunk)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    P1,
    P2,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::P1 => Player::P2,
            Player::P2 => Player::P1,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::P1 => "P1",
            Player::P2 => "P2",
        })
    }
}

/// Server-side match state.
#[derive(Debug, Clone)]
pub struct MatchState {
    configs: [Config; 2],
    /// Cells of each player's board that were hit.
    hits: [BTreeSet<Location>; 2],
    misses: [BTreeSet<Location>; 2],
    turn: Player,
    attacks: usize,
}

impl MatchState {
    pub fn new(p1: Config, p2: Config) -> Self {
        MatchState {
            configs: [p1, p2],
            hits: Default::default(),
            misses: Default::default(),
            turn: Player::P1,
            attacks: 0,
        }
    }

    pub fn turn(&self) -> Player {
        self.turn
    }

    pub fn attacks(&self) -> usize {
        self.attacks
    }

    pub fn hits_on(&self, p: Player) -> &BTreeSet<Location> {
        &self.hits[p.index()]
    }

    pub fn misses_on(&self, p: Player) -> &BTreeSet<Location> {
        &self.misses[p.index()]
    }

    /// Applies an attack by the player whose turn it is. A repeated cell, or
    /// one off the board, counts as a miss.
    pub fn attack(&mut self, loc: Location) -> AttackOutcome {
        let def = self.turn.other().index();
        self.attacks += 1;
        let mut judged = self.hits[def].clone();
        judged.extend(self.misses[def].iter().copied());
        let outcome = match judge_attack(&self.configs[def], &judged, loc) {
            Ok(o) => o,
            Err(e) => {
                log::warn!("{} repeats an attack: {e}", self.turn);
                AttackOutcome::Miss
            }
        };
        match outcome {
            AttackOutcome::Miss => {
                if !judged.contains(&loc) {
                    self.misses[def].insert(loc);
                }
                self.turn = self.turn.other();
            }
            _ => {
                self.hits[def].insert(loc);
            }
        }
        outcome
    }
}

/// What a player knows about one board.
#[derive(Debug, Clone, Default)]
pub struct Board {
    pub ships: BTreeSet<Location>,
    pub hits: BTreeSet<Location>,
    pub misses: BTreeSet<Location>,
}

impl Board {
    pub fn own(c: &Config) -> Self {
        Board {
            ships: c.ships.iter().flatten().copied().collect(),
            ..Board::default()
        }
    }

    /// ASCII grid: `#` ship, `X` hit, `o` miss, `.` unknown water.
    pub fn render(&self, grid: Grid) -> String {
        let mut s = String::from("  ");
        for x in 0..grid.width {
            s.push_str(&format!(" {}", x % 10));
        }
        s.push('\n');
        for y in 0..grid.height {
            s.push_str(&format!("{y:>2}"));
            for x in 0..grid.width {
                let l = Location::new(x, y);
                let c = if self.hits.contains(&l) {
                    'X'
                } else if self.misses.contains(&l) {
                    'o'
                } else if self.ships.contains(&l) {
                    '#'
                } else {
                    '.'
                };
                s.push(' ');
                s.push(c);
            }
            s.push('\n');
        }
        s
    }
}
