//! Tile positions and movement directions.

use serde::{Deserialize, Serialize};

/// A tile coordinate, `x` growing east and `y` growing south.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub x: u16,
    pub y: u16,
}

impl Pos {
    pub fn new(x: u16, y: u16) -> Self {
        Pos { x, y }
    }

    /// Neighbor tile in `dir`, or `None` when it would leave the grid.
    pub fn step(self, dir: Direction, width: u16, height: u16) -> Option<Pos> {
        let (dx, dy) = dir.delta();
        let x = self.x as i32 + dx;
        let y = self.y as i32 + dy;
        if x < 0 || y < 0 || x >= width as i32 || y >= height as i32 {
            None
        } else {
            Some(Pos::new(x as u16, y as u16))
        }
    }
}

/// The four compass moves. `ALL` fixes the tie-break order used everywhere:
/// north, east, south, west.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::North => (0, -1),
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::North => Direction::South,
            Direction::East => Direction::West,
            Direction::South => Direction::North,
            Direction::West => Direction::East,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::North => "N",
            Direction::East => "E",
            Direction::South => "S",
            Direction::West => "W",
        }
    }

    pub fn from_name(s: &str) -> Option<Direction> {
        match s {
            "N" => Some(Direction::North),
            "E" => Some(Direction::East),
            "S" => Some(Direction::South),
            "W" => Some(Direction::West),
            _ => None,
        }
    }
}

/// What the agent can do in one step. `Stop` is only offered by the
/// look-ahead planner at calibrated zig-zag positions; the world itself
/// treats it as standing still while everything else advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentAction {
    Move(Direction),
    Stop,
}

impl AgentAction {
    /// Rank used when breaking value ties between trajectories: the four
    /// directions in fixed order, then `Stop`.
    pub fn tie_rank(self) -> u8 {
        match self {
            AgentAction::Move(Direction::North) => 0,
            AgentAction::Move(Direction::East) => 1,
            AgentAction::Move(Direction::South) => 2,
            AgentAction::Move(Direction::West) => 3,
            AgentAction::Stop => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentAction::Move(d) => d.name(),
            AgentAction::Stop => "Stop",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opposite_is_involutive() {
        for d in Direction::ALL {
            assert_eq!(d.opposite().opposite(), d);
        }
    }

    #[test]
    fn step_stays_on_grid() {
        let p = Pos::new(0, 0);
        assert_eq!(p.step(Direction::North, 5, 5), None);
        assert_eq!(p.step(Direction::West, 5, 5), None);
        assert_eq!(p.step(Direction::East, 5, 5), Some(Pos::new(1, 0)));
        assert_eq!(p.step(Direction::South, 5, 5), Some(Pos::new(0, 1)));
    }

    #[test]
    fn tie_rank_orders_directions_before_stop() {
        let mut ranks: Vec<u8> = Direction::ALL
            .into_iter()
            .map(|d| AgentAction::Move(d).tie_rank())
            .collect();
        ranks.push(AgentAction::Stop.tie_rank());
        let mut sorted = ranks.clone();
        sorted.sort_unstable();
        assert_eq!(ranks, sorted);
    }
}
