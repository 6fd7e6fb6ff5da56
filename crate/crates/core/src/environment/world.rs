use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Absolute heading. North is decreasing row index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];

    pub fn from_index(i: usize) -> Direction {
        Self::ALL[i % 4]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn right(self) -> Direction {
        Self::from_index(self.index() + 1)
    }

    pub fn left(self) -> Direction {
        Self::from_index(self.index() + 3)
    }

    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::North => (0, -1),
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
        }
    }

    pub fn glyph(self) -> char {
        match self {
            Direction::North => '^',
            Direction::East => '>',
            Direction::South => 'v',
            Direction::West => '<',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub x: usize,
    pub y: usize,
}

impl Pos {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

/// Environment parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldParams {
    pub width: usize,
    pub height: usize,
    pub wall_probability: f64,
    pub start_distance: u32,
    pub steps: u32,
    pub goal_bonus: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            wall_probability: 1.0 / 7.0,
            start_distance: 32,
            steps: 512,
            goal_bonus: 512.0,
        }
    }
}

/// Wall layout. Cells are indexed row-major, `y * width + x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    width: usize,
    height: usize,
    walls: Vec<bool>,
}

impl Grid {
    pub fn new(width: usize, height: usize, walls: Vec<bool>) -> Self {
        assert_eq!(walls.len(), width * height);
        Self {
            width,
            height,
            walls,
        }
    }

    pub fn open(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![false; width * height])
    }

    /// Parses rows of `#` (wall) and anything else (open).
    pub fn parse(text: &str) -> Self {
        let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let width = rows.first().map_or(0, |r| r.len());
        let walls = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| c == '#'))
            .collect();
        Self::new(width, rows.len(), walls)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.walls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walls.is_empty()
    }

    pub fn index(&self, p: Pos) -> usize {
        p.y * self.width + p.x
    }

    pub fn pos(&self, index: usize) -> Pos {
        Pos::new(index % self.width, index / self.width)
    }

    pub fn is_wall(&self, p: Pos) -> bool {
        self.walls[self.index(p)]
    }

    pub fn set_wall(&mut self, p: Pos, wall: bool) {
        let i = self.index(p);
        self.walls[i] = wall;
    }

    pub fn step(&self, p: Pos, d: Direction) -> Option<Pos> {
        let (dx, dy) = d.offset();
        let x = p.x.checked_add_signed(dx)?;
        let y = p.y.checked_add_signed(dy)?;
        (x < self.width && y < self.height).then_some(Pos::new(x, y))
    }

    /// Calls `f` for each open 4-neighbour of cell `i`, in N, E, S, W order.
    #[inline]
    fn for_each_open_neighbour(&self, i: usize, mut f: impl FnMut(Direction, usize)) {
        let w = self.width;
        let x = i % w;
        if i >= w && !self.walls[i - w] {
            f(Direction::North, i - w);
        }
        if x + 1 < w && !self.walls[i + 1] {
            f(Direction::East, i + 1);
        }
        if i + w < self.walls.len() && !self.walls[i + w] {
            f(Direction::South, i + w);
        }
        if x > 0 && !self.walls[i - 1] {
            f(Direction::West, i - 1);
        }
    }
}

/// Shortest-path distances to the goal; `None` for walls and unreachable
/// tiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceField {
    width: usize,
    dist: Vec<u32>,
}

impl DistanceField {
    pub const UNREACHABLE: u32 = u32::MAX;

    pub fn get(&self, p: Pos) -> Option<u32> {
        self.at(p.y * self.width + p.x)
    }

    pub fn at(&self, index: usize) -> Option<u32> {
        let d = self.dist[index];
        (d != Self::UNREACHABLE).then_some(d)
    }

    pub fn raw(&self) -> &[u32] {
        &self.dist
    }
}

/// Unit-cost Dijkstra from the goal with a bucket priority queue, 4-connected.
/// With unit edge costs only the current and next buckets are ever live, so
/// two vectors are swapped instead of keeping one bucket per distance.
pub fn dijkstra_distances(grid: &Grid, goal: Pos) -> DistanceField {
    let mut dist = vec![DistanceField::UNREACHABLE; grid.len()];
    let start = grid.index(goal);
    assert!(!grid.walls[start], "goal must be open");
    dist[start] = 0;
    let mut current = vec![start];
    let mut next = Vec::new();
    let mut d = 0u32;
    while !current.is_empty() {
        for &u in &current {
            if dist[u] != d {
                continue;
            }
            grid.for_each_open_neighbour(u, |_, v| {
                if d + 1 < dist[v] {
                    dist[v] = d + 1;
                    next.push(v);
                }
            });
        }
        current.clear();
        std::mem::swap(&mut current, &mut next);
        d += 1;
    }
    DistanceField {
        width: grid.width,
        dist,
    }
}

/// A labelled maze.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    grid: Grid,
    goal: Pos,
    distances: DistanceField,
    arrows: Vec<Option<Direction>>,
    start_tiles: Vec<usize>,
}

/// What a tile holds, as seen from outside.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tile {
    Wall,
    Open {
        distance: Option<u32>,
        arrow: Option<Direction>,
    },
}

impl World {
    /// Labels `grid` for `goal`. Arrow ties are broken uniformly with `rng`.
    pub fn label<R: Rng + ?Sized>(grid: Grid, goal: Pos, start_distance: u32, rng: &mut R) -> World {
        let distances = dijkstra_distances(&grid, goal);
        let mut arrows = vec![None; grid.len()];
        let mut start_tiles = Vec::new();
        for i in 0..grid.len() {
            let Some(d) = distances.at(i) else { continue };
            if d == start_distance {
                start_tiles.push(i);
            }
            if d == 0 {
                continue;
            }
            let mut closer = [Direction::North; 4];
            let mut n = 0;
            grid.for_each_open_neighbour(i, |dir, j| {
                if distances.dist[j] == d - 1 {
                    closer[n] = dir;
                    n += 1;
                }
            });
            arrows[i] = Some(match n {
                1 => closer[0],
                n => closer[rng.random_range(0..n)],
            });
        }
        World {
            grid,
            goal,
            distances,
            arrows,
            start_tiles,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn goal(&self) -> Pos {
        self.goal
    }

    pub fn distances(&self) -> &DistanceField {
        &self.distances
    }

    pub fn distance(&self, p: Pos) -> Option<u32> {
        self.distances.get(p)
    }

    pub fn arrow(&self, p: Pos) -> Option<Direction> {
        self.arrows[self.grid.index(p)]
    }

    pub fn tile(&self, p: Pos) -> Tile {
        if self.grid.is_wall(p) {
            Tile::Wall
        } else {
            Tile::Open {
                distance: self.distance(p),
                arrow: self.arrow(p),
            }
        }
    }

    /// Tiles at exactly the start distance.
    pub fn start_tiles(&self) -> impl Iterator<Item = Pos> + '_ {
        self.start_tiles.iter().map(|&i| self.grid.pos(i))
    }

    pub fn random_start<R: Rng + ?Sized>(&self, rng: &mut R) -> Pos {
        self.grid.pos(self.start_tiles[rng.random_range(0..self.start_tiles.len())])
    }

    pub fn has_start(&self) -> bool {
        !self.start_tiles.is_empty()
    }

    /// Border walls, interior walls with the configured probability, a
    /// uniformly placed goal. Regenerated until some tile lies at the start
    /// distance.
    pub fn generate<R: Rng + ?Sized>(params: &WorldParams, rng: &mut R) -> World {
        let (w, h) = (params.width, params.height);
        loop {
            let mut walls = vec![true; w * h];
            let mut open = Vec::with_capacity(w * h);
            for y in 1..h.saturating_sub(1) {
                for x in 1..w.saturating_sub(1) {
                    let i = y * w + x;
                    if rng.random::<f64>() >= params.wall_probability {
                        walls[i] = false;
                        open.push(i);
                    }
                }
            }
            if open.is_empty() {
                continue;
            }
            let grid = Grid::new(w, h, walls);
            let goal = grid.pos(open[rng.random_range(0..open.len())]);
            let world = World::label(grid, goal, params.start_distance, rng);
            if world.has_start() {
                return world;
            }
        }
    }

    /// `#` wall, `G` goal, arrows `^>v<`, `.` for open tiles with no route.
    pub fn dump(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for y in 0..self.grid.height {
            for x in 0..self.grid.width {
                let p = Pos::new(x, y);
                let c = if p == self.goal {
                    'G'
                } else {
                    match self.tile(p) {
                        Tile::Wall => '#',
                        Tile::Open { arrow: Some(a), .. } => a.glyph(),
                        Tile::Open { arrow: None, .. } => '.',
                    }
                };
                write!(f, "{c}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
