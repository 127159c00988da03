//! A seeded computer player.

use std::collections::BTreeSet;

use async_trait::async_trait;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Config, Grid, Location, FLEET};
use crate::player::{Reply, Strategy};

/// Places a fleet uniformly at random, retrying placements that collide.
pub fn random_fleet(rng: &mut impl Rng, grid: Grid, fleet: &[usize]) -> Config {
    let mut used = BTreeSet::new();
    let mut ships = Vec::new();
    for &len in fleet {
        let len = len as i32;
        loop {
            let horizontal = rng.random_bool(0.5);
            let (w, h) = if horizontal {
                (grid.width - len + 1, grid.height)
            } else {
                (grid.width, grid.height - len + 1)
            };
            let x0 = rng.random_range(0..w);
            let y0 = rng.random_range(0..h);
            let ship: Vec<Location> = (0..len)
                .map(|i| {
                    if horizontal {
                        Location::new(x0 + i, y0)
                    } else {
                        Location::new(x0, y0 + i)
                    }
                })
                .collect();
            if ship.iter().all(|l| !used.contains(l)) {
                used.extend(ship.iter().copied());
                ships.push(ship);
                break;
            }
        }
    }
    Config { ships }
}

/// Fires at random cells, then works outwards from each hit. Never repeats a
/// cell, so a match ends after at most one board's worth of attacks.
pub struct Bot {
    grid: Grid,
    fleet: Config,
    untried: Vec<Location>,
    targets: Vec<Location>,
    tried: BTreeSet<Location>,
}

impl Bot {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = Grid::default();
        let fleet = random_fleet(&mut rng, grid, &FLEET);
        let mut untried: Vec<Location> = grid.cells().collect();
        untried.shuffle(&mut rng);
        Bot {
            grid,
            fleet,
            untried,
            targets: Vec::new(),
            tried: BTreeSet::new(),
        }
    }

    /// A bot that sends the given fleet instead of a random one.
    pub fn with_fleet(seed: u64, fleet: Config) -> Self {
        Bot {
            fleet,
            ..Bot::new(seed)
        }
    }

    fn pick(&mut self) -> Location {
        while let Some(l) = self.targets.pop() {
            if !self.tried.contains(&l) {
                return l;
            }
        }
        while let Some(l) = self.untried.pop() {
            if !self.tried.contains(&l) {
                return l;
            }
        }
        // Every cell tried; the server judges repeats as misses.
        Location::new(0, 0)
    }
}

#[async_trait]
impl Strategy for Bot {
    fn fleet(&mut self) -> Config {
        self.fleet.clone()
    }

    async fn next_attack(&mut self) -> Location {
        let l = self.pick();
        self.tried.insert(l);
        l
    }

    fn attacked(&mut self, at: Location, reply: Reply) {
        if reply == Reply::Hit {
            for (dx, dy) in [(0, 1), (0, -1), (1, 0), (-1, 0)] {
                let n = Location::new(at.x + dx, at.y + dy);
                if self.grid.contains(n) && !self.tried.contains(&n) {
                    self.targets.push(n);
                }
            }
        }
    }
}
