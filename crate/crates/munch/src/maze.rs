//! Static maze geometry: walls, corridors, item spawn sets, and the
//! corridor-graph BFS that every distance query in the crate goes through.
//!
//! Maze files are plain ASCII, one glyph per tile: `#` wall, `.` dot,
//! `o` power dot, ` ` empty corridor, `P` agent spawn, `G` ghost spawn
//! (exactly four), `H` ghost home. Rows must have equal length.

use std::collections::BTreeSet;
use std::collections::VecDeque;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::grid::{Direction, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tile {
    Wall,
    Corridor,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MazeError {
    #[error("row {row} has length {len}, expected {expected}")]
    RaggedRow { row: usize, len: usize, expected: usize },
    #[error("unknown glyph '{glyph}' at row {row}, column {col}")]
    UnknownGlyph { glyph: char, row: usize, col: usize },
    #[error("maze is empty")]
    Empty,
    #[error("missing agent spawn (no 'P' tile)")]
    MissingAgentSpawn,
    #[error("expected exactly 4 ghost spawns, found {0}")]
    GhostSpawnCount(usize),
    #[error("missing ghost home (no 'H' tile)")]
    MissingGhostHome,
    #[error("multiple agent spawns")]
    MultipleAgentSpawns,
    #[error("multiple ghost homes")]
    MultipleGhostHomes,
    #[error("corridors are not a single connected component")]
    DisconnectedCorridors,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistanceError {
    #[error("position ({0}, {1}) is not a corridor")]
    NotCorridor(u16, u16),
}

/// BFS distance between two corridor tiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distance {
    Steps(u32),
    Unreachable,
}

#[derive(Debug, Clone)]
pub struct Maze {
    width: u16,
    height: u16,
    tiles: Vec<Tile>,
    pub dot_spawn: BTreeSet<Pos>,
    pub power_dot_spawn: BTreeSet<Pos>,
    pub agent_spawn: Pos,
    pub ghost_spawn: Vec<Pos>,
    pub ghost_home: Pos,
    /// Lazily filled single-source BFS fields, one slot per tile.
    field_cache: Vec<OnceLock<DistanceField>>,
}

impl Maze {
    /// Parse and validate a maze from its ASCII file contents.
    pub fn parse(text: &str) -> Result<Maze, MazeError> {
        let rows: Vec<&str> = text.lines().collect();
        if rows.is_empty() {
            return Err(MazeError::Empty);
        }
        let width = rows[0].chars().count();
        if width == 0 {
            return Err(MazeError::Empty);
        }
        let height = rows.len();

        let mut tiles = vec![Tile::Wall; width * height];
        let mut dot_spawn = BTreeSet::new();
        let mut power_dot_spawn = BTreeSet::new();
        let mut agent_spawn = None;
        let mut ghost_spawn = Vec::new();
        let mut ghost_home = None;

        for (y, row) in rows.iter().enumerate() {
            let len = row.chars().count();
            if len != width {
                return Err(MazeError::RaggedRow { row: y, len, expected: width });
            }
            for (x, glyph) in row.chars().enumerate() {
                let pos = Pos::new(x as u16, y as u16);
                let tile = match glyph {
                    '#' => Tile::Wall,
                    ' ' => Tile::Corridor,
                    '.' => {
                        dot_spawn.insert(pos);
                        Tile::Corridor
                    }
                    'o' => {
                        power_dot_spawn.insert(pos);
                        Tile::Corridor
                    }
                    'P' => {
                        if agent_spawn.replace(pos).is_some() {
                            return Err(MazeError::MultipleAgentSpawns);
                        }
                        Tile::Corridor
                    }
                    'G' => {
                        ghost_spawn.push(pos);
                        Tile::Corridor
                    }
                    'H' => {
                        if ghost_home.replace(pos).is_some() {
                            return Err(MazeError::MultipleGhostHomes);
                        }
                        Tile::Corridor
                    }
                    other => {
                        return Err(MazeError::UnknownGlyph { glyph: other, row: y, col: x })
                    }
                };
                tiles[y * width + x] = tile;
            }
        }

        let agent_spawn = agent_spawn.ok_or(MazeError::MissingAgentSpawn)?;
        if ghost_spawn.len() != 4 {
            return Err(MazeError::GhostSpawnCount(ghost_spawn.len()));
        }
        let ghost_home = ghost_home.ok_or(MazeError::MissingGhostHome)?;

        let mut maze = Maze {
            width: width as u16,
            height: height as u16,
            tiles,
            dot_spawn,
            power_dot_spawn,
            agent_spawn,
            ghost_spawn,
            ghost_home,
            field_cache: Vec::new(),
        };
        maze.field_cache = (0..maze.tiles.len()).map(|_| OnceLock::new()).collect();
        maze.check_connected()?;
        Ok(maze)
    }

    /// Assemble a maze from raw parts, validating only corridor
    /// connectivity. Intended for small hand-built test layouts where the
    /// strict one-glyph-per-tile file format cannot express overlapping
    /// roles (a dot on the agent spawn, say).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        width: u16,
        height: u16,
        walls: &[Pos],
        dot_spawn: &[Pos],
        power_dot_spawn: &[Pos],
        agent_spawn: Pos,
        ghost_spawn: [Pos; 4],
        ghost_home: Pos,
    ) -> Result<Maze, MazeError> {
        let mut tiles = vec![Tile::Corridor; width as usize * height as usize];
        for w in walls {
            tiles[w.y as usize * width as usize + w.x as usize] = Tile::Wall;
        }
        let mut maze = Maze {
            width,
            height,
            tiles,
            dot_spawn: dot_spawn.iter().copied().collect(),
            power_dot_spawn: power_dot_spawn.iter().copied().collect(),
            agent_spawn,
            ghost_spawn: ghost_spawn.to_vec(),
            ghost_home,
            field_cache: Vec::new(),
        };
        maze.field_cache = (0..maze.tiles.len()).map(|_| OnceLock::new()).collect();
        maze.check_connected()?;
        Ok(maze)
    }

    fn check_connected(&self) -> Result<(), MazeError> {
        let corridors: Vec<Pos> = (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| Pos::new(x, y)))
            .filter(|&p| self.is_corridor(p))
            .collect();
        if corridors.is_empty() {
            return Err(MazeError::Empty);
        }
        let field = self.distance_field(&[corridors[0]]);
        for p in &corridors {
            if field.get(*p).is_none() {
                return Err(MazeError::DisconnectedCorridors);
            }
        }
        for spawn in self
            .ghost_spawn
            .iter()
            .chain([&self.agent_spawn, &self.ghost_home])
        {
            if !self.is_corridor(*spawn) {
                return Err(MazeError::DisconnectedCorridors);
            }
        }
        Ok(())
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn tile(&self, pos: Pos) -> Tile {
        self.tiles[pos.y as usize * self.width as usize + pos.x as usize]
    }

    pub fn is_corridor(&self, pos: Pos) -> bool {
        pos.x < self.width && pos.y < self.height && self.tile(pos) == Tile::Corridor
    }

    /// Corridor neighbor in `dir`, if any.
    pub fn neighbor(&self, pos: Pos, dir: Direction) -> Option<Pos> {
        pos.step(dir, self.width, self.height)
            .filter(|&p| self.is_corridor(p))
    }

    /// Directions whose target tile is a corridor, in fixed N,E,S,W order.
    pub fn open_directions(&self, pos: Pos) -> Vec<Direction> {
        Direction::ALL
            .into_iter()
            .filter(|&d| self.neighbor(pos, d).is_some())
            .collect()
    }

    /// Multi-source BFS over the corridor graph. Unreached tiles (walls,
    /// or corridors cut off from every source) read as `None`.
    /// Single-source fields are served from a per-maze cache, since they
    /// depend only on the static corridor graph; ghost steering and
    /// observations hit that path every step.
    pub fn distance_field(&self, sources: &[Pos]) -> DistanceField {
        if let [source] = sources {
            if self.is_corridor(*source) {
                let idx = source.y as usize * self.width as usize + source.x as usize;
                let slot = &self.field_cache[idx];
                if let Some(field) = slot.get() {
                    return field.clone();
                }
                let field = self.compute_field(sources);
                let _ = slot.set(field.clone());
                return field;
            }
        }
        self.compute_field(sources)
    }

    fn compute_field(&self, sources: &[Pos]) -> DistanceField {
        let mut dist = vec![u32::MAX; self.tiles.len()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if self.is_corridor(s) {
                let idx = s.y as usize * self.width as usize + s.x as usize;
                if dist[idx] != 0 {
                    dist[idx] = 0;
                    queue.push_back(s);
                }
            }
        }
        while let Some(p) = queue.pop_front() {
            let d = dist[p.y as usize * self.width as usize + p.x as usize];
            for dir in Direction::ALL {
                if let Some(n) = self.neighbor(p, dir) {
                    let idx = n.y as usize * self.width as usize + n.x as usize;
                    if dist[idx] == u32::MAX {
                        dist[idx] = d + 1;
                        queue.push_back(n);
                    }
                }
            }
        }
        DistanceField { width: self.width, dist: Arc::new(dist) }
    }

    /// BFS shortest-path length between two corridor tiles.
    pub fn shortest_path_distance(&self, from: Pos, to: Pos) -> Result<Distance, DistanceError> {
        if !self.is_corridor(from) {
            return Err(DistanceError::NotCorridor(from.x, from.y));
        }
        if !self.is_corridor(to) {
            return Err(DistanceError::NotCorridor(to.x, to.y));
        }
        let field = self.distance_field(&[from]);
        Ok(match field.get(to) {
            Some(d) => Distance::Steps(d),
            None => Distance::Unreachable,
        })
    }

    /// Best achievable score on this maze: every dot, every power dot, and
    /// the full 200+400+800+1600 ghost chain per power dot.
    pub fn max_score(&self) -> u64 {
        let dots = self.dot_spawn.len() as u64;
        let power = self.power_dot_spawn.len() as u64;
        dots * 10 + power * 40 + power * 3000
    }

    /// Render back to the ASCII glyph form (spawn/home glyphs win over
    /// item glyphs on shared tiles, which only builder-made mazes have).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height {
            for x in 0..self.width {
                let pos = Pos::new(x, y);
                let glyph = if self.tile(pos) == Tile::Wall {
                    '#'
                } else if pos == self.agent_spawn {
                    'P'
                } else if self.ghost_spawn.contains(&pos) {
                    'G'
                } else if pos == self.ghost_home {
                    'H'
                } else if self.power_dot_spawn.contains(&pos) {
                    'o'
                } else if self.dot_spawn.contains(&pos) {
                    '.'
                } else {
                    ' '
                };
                out.push(glyph);
            }
            out.push('\n');
        }
        out
    }
}

/// Dense distance map from one BFS run; clones share the backing store.
#[derive(Debug, Clone)]
pub struct DistanceField {
    width: u16,
    dist: Arc<Vec<u32>>,
}

impl DistanceField {
    pub fn get(&self, pos: Pos) -> Option<u32> {
        let d = self.dist[pos.y as usize * self.width as usize + pos.x as usize];
        (d != u32::MAX).then_some(d)
    }
}

/// The maze that ships with the crate.
pub fn canonical_maze() -> Maze {
    Maze::parse(include_str!("../assets/canonical.maze"))
        .expect("bundled maze must parse")
}

#[cfg(test)]
pub(crate) mod test_mazes {
    use super::*;

    /// 5x5 ring: an 8-cell corridor loop around a center wall, every ring
    /// cell carrying a dot. Spawns overlap ring cells, which only the
    /// builder can express.
    pub fn ring5() -> Maze {
        let mut walls = vec![Pos::new(2, 2)];
        for i in 0..5u16 {
            walls.push(Pos::new(i, 0));
            walls.push(Pos::new(i, 4));
            walls.push(Pos::new(0, i));
            walls.push(Pos::new(4, i));
        }
        let ring: Vec<Pos> = vec![
            Pos::new(1, 1),
            Pos::new(2, 1),
            Pos::new(3, 1),
            Pos::new(1, 2),
            Pos::new(3, 2),
            Pos::new(1, 3),
            Pos::new(2, 3),
            Pos::new(3, 3),
        ];
        Maze::from_parts(
            5,
            5,
            &walls,
            &ring,
            &[],
            Pos::new(1, 1),
            [Pos::new(3, 3), Pos::new(3, 1), Pos::new(1, 3), Pos::new(3, 2)],
            Pos::new(2, 1),
        )
        .unwrap()
    }

    /// Straight east-west corridor of the given length with everything on
    /// it; handy for single-axis distance setups.
    pub fn corridor(len: u16) -> Maze {
        let mut walls = Vec::new();
        for x in 0..len + 2 {
            walls.push(Pos::new(x, 0));
            walls.push(Pos::new(x, 2));
        }
        walls.push(Pos::new(0, 1));
        walls.push(Pos::new(len + 1, 1));
        let cells: Vec<Pos> = (1..=len).map(|x| Pos::new(x, 1)).collect();
        Maze::from_parts(
            len + 2,
            3,
            &walls,
            &cells,
            &[],
            cells[0],
            [cells[len as usize - 1]; 4],
            cells[len as usize / 2],
        )
        .unwrap()
    }
}
