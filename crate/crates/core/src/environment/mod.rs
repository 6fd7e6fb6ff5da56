//! Maze worlds, agent embodiment and the fitness function.

mod trial;
mod world;

pub use trial::*;
pub use world::*;

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Forward,
    TurnLeft,
    TurnRight,
    DoNothing,
}

impl Action {
    pub const ALL: [Action; 4] = [
        Action::Forward,
        Action::TurnLeft,
        Action::TurnRight,
        Action::DoNothing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Action::Forward => "forward",
            Action::TurnLeft => "left",
            Action::TurnRight => "right",
            Action::DoNothing => "nothing",
        }
    }
}

pub const N_MAPPINGS: usize = 24;

/// One of the 24 bijections from output options (bit pairs 00, 01, 10, 11)
/// to actions. Index `k` is the k-th permutation of [`Action::ALL`] in
/// lexicographic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mapping {
    index: u8,
    actions: [Action; 4],
}

impl Mapping {
    pub fn new(index: usize) -> Option<Mapping> {
        if index >= N_MAPPINGS {
            return None;
        }
        // factorial-base digits pick from the remaining actions
        let mut pool: Vec<Action> = Action::ALL.to_vec();
        let mut rest = index;
        let mut actions = [Action::DoNothing; 4];
        for (slot, radix) in [6, 2, 1, 1].into_iter().enumerate() {
            actions[slot] = pool.remove(rest / radix);
            rest %= radix;
        }
        Some(Mapping {
            index: index as u8,
            actions,
        })
    }

    pub fn all() -> impl Iterator<Item = Mapping> {
        (0..N_MAPPINGS).map(|k| Mapping::new(k).unwrap())
    }

    pub fn index(&self) -> usize {
        self.index as usize
    }

    pub fn actions(&self) -> [Action; 4] {
        self.actions
    }

    pub fn action(&self, option: usize) -> Action {
        self.actions[option]
    }

    pub fn option_for(&self, action: Action) -> usize {
        self.actions.iter().position(|&a| a == action).unwrap()
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.actions.iter().map(|a| a.name()).collect();
        write!(f, "{}:{}", self.index, names.join(","))
    }
}

/// Output bits to option index; node 4 is the high bit.
pub fn option_from_outputs(out: [bool; 2]) -> usize {
    ((out[0] as usize) << 1) | out[1] as usize
}

pub fn outputs_for_option(option: usize) -> [bool; 2] {
    [option & 2 == 2, option & 1 == 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Agent {
    pub pos: Pos,
    pub heading: Direction,
}

/// One-hot sensors over (forward, right, backward, left), relative to the
/// agent's heading. All zero on a tile without an arrow.
pub fn perceive(world: &World, agent: &Agent) -> [bool; 4] {
    let mut s = [false; 4];
    if let Some(arrow) = world.arrow(agent.pos) {
        s[(arrow.index() + 4 - agent.heading.index()) % 4] = true;
    }
    s
}

pub fn apply_action(world: &World, agent: &Agent, action: Action) -> Agent {
    match action {
        Action::TurnLeft => Agent {
            heading: agent.heading.left(),
            ..*agent
        },
        Action::TurnRight => Agent {
            heading: agent.heading.right(),
            ..*agent
        },
        Action::Forward => match world.grid().step(agent.pos, agent.heading) {
            Some(next) if !world.grid().is_wall(next) => Agent { pos: next, ..*agent },
            _ => *agent,
        },
        Action::DoNothing => *agent,
    }
}
