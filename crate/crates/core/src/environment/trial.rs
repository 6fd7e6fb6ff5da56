use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    apply_action, option_from_outputs, outputs_for_option, perceive, Action, Agent, Direction,
    Mapping, Pos, World, WorldParams, N_MAPPINGS,
};
use crate::brain::Brain;
use crate::gates::ProbabilityTable;
use crate::rng::{Purpose, StreamKey};

/// Anything that turns four sensor bits into two output bits.
pub trait Controller {
    fn act<R: Rng + ?Sized>(&mut self, sensors: [bool; 4], rng: &mut R) -> [bool; 2];
}

impl Controller for Brain {
    fn act<R: Rng + ?Sized>(&mut self, sensors: [bool; 4], rng: &mut R) -> [bool; 2] {
        self.step(sensors, rng)
    }
}

/// Scripted agent that knows the mapping and follows the arrows.
#[derive(Debug, Clone, Copy)]
pub struct OracleWalker {
    pub mapping: Mapping,
}

impl Controller for OracleWalker {
    fn act<R: Rng + ?Sized>(&mut self, s: [bool; 4], _rng: &mut R) -> [bool; 2] {
        let action = match s {
            [true, ..] => Action::Forward,
            [_, true, ..] | [_, _, true, _] => Action::TurnRight,
            [_, _, _, true] => Action::TurnLeft,
            _ => Action::DoNothing,
        };
        outputs_for_option(self.mapping.option_for(action))
    }
}

/// Scripted agent that always picks one action.
#[derive(Debug, Clone, Copy)]
pub struct FixedAction {
    pub mapping: Mapping,
    pub action: Action,
}

impl Controller for FixedAction {
    fn act<R: Rng + ?Sized>(&mut self, _s: [bool; 4], _rng: &mut R) -> [bool; 2] {
        outputs_for_option(self.mapping.option_for(self.action))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCounts {
    pub forward: u64,
    pub turn: u64,
    pub nothing: u64,
}

impl ActionCounts {
    pub fn record(&mut self, action: Action) {
        match action {
            Action::Forward => self.forward += 1,
            Action::TurnLeft | Action::TurnRight => self.turn += 1,
            Action::DoNothing => self.nothing += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.forward + self.turn + self.nothing
    }

    pub fn add(&mut self, other: &ActionCounts) {
        self.forward += other.forward;
        self.turn += other.turn;
        self.nothing += other.nothing;
    }

    /// (forward, turn, nothing) as fractions of all actions.
    pub fn fractions(&self) -> [f64; 3] {
        let t = self.total().max(1) as f64;
        [
            self.forward as f64 / t,
            self.turn as f64 / t,
            self.nothing as f64 / t,
        ]
    }
}

/// One world update as seen by a replay trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: u32,
    pub sensors: [bool; 4],
    pub outputs: [bool; 2],
    pub action: Action,
    pub pos: Pos,
    pub heading: Direction,
    pub distance: u32,
    pub reached_goal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub mapping: usize,
    /// Sum of `1 / (1 + d)` over the trial.
    pub score: f64,
    pub goal_reaches: u32,
    pub actions: ActionCounts,
    /// `(birth, end)` table per feedback gate; empty unless captured.
    pub tables: Vec<(ProbabilityTable, ProbabilityTable)>,
}

impl TrialResult {
    pub fn term(&self, goal_bonus: f64) -> f64 {
        self.score + goal_bonus * self.goal_reaches as f64
    }
}

fn place<R: Rng + ?Sized>(world: &World, rng: &mut R) -> Agent {
    Agent {
        pos: world.random_start(rng),
        heading: Direction::from_index(rng.random_range(0..4)),
    }
}

/// Runs one lifetime in a freshly generated world. The agent is re-placed
/// at a random start tile every time it reaches the goal; controller state
/// carries over.
pub fn run_trial<C, R1, R2>(
    controller: &mut C,
    mapping: Mapping,
    params: &WorldParams,
    world_rng: &mut R1,
    brain_rng: &mut R2,
    observe: Option<&mut dyn FnMut(&StepRecord)>,
) -> TrialResult
where
    C: Controller,
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let world = World::generate(params, world_rng);
    run_trial_in(&world, controller, mapping, params, world_rng, brain_rng, observe)
}

/// As [`run_trial`], in a given world.
pub fn run_trial_in<C, R1, R2>(
    world: &World,
    controller: &mut C,
    mapping: Mapping,
    params: &WorldParams,
    world_rng: &mut R1,
    brain_rng: &mut R2,
    mut observe: Option<&mut dyn FnMut(&StepRecord)>,
) -> TrialResult
where
    C: Controller,
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let mut agent = place(world, world_rng);
    let mut score = 0.0;
    let mut goal_reaches = 0;
    let mut actions = ActionCounts::default();
    for step in 0..params.steps {
        let sensors = perceive(world, &agent);
        let outputs = controller.act(sensors, brain_rng);
        let action = mapping.action(option_from_outputs(outputs));
        agent = apply_action(world, &agent, action);
        actions.record(action);
        let d = world.distance(agent.pos).expect("agent stays on reachable tiles");
        score += 1.0 / (1.0 + d as f64);
        if let Some(f) = observe.as_mut() {
            f(&StepRecord {
                step,
                sensors,
                outputs,
                action,
                pos: agent.pos,
                heading: agent.heading,
                distance: d,
                reached_goal: d == 0,
            });
        }
        if d == 0 {
            goal_reaches += 1;
            agent = place(world, world_rng);
        }
    }
    TrialResult {
        mapping: mapping.index(),
        score,
        goal_reaches,
        actions,
        tables: Vec::new(),
    }
}

/// Result of evaluating a brain on every mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct Fitness {
    /// Natural log of the product fitness `W`.
    pub log_w: f64,
    pub trials: Vec<TrialResult>,
}

impl Fitness {
    pub fn w(&self) -> f64 {
        self.log_w.exp()
    }

    pub fn total_goals(&self) -> u32 {
        self.trials.iter().map(|t| t.goal_reaches).sum()
    }

    /// Mean goal reaches per mapping trial, the headline performance number.
    pub fn goal_count(&self) -> f64 {
        self.total_goals() as f64 / self.trials.len().max(1) as f64
    }

    pub fn goals_per_mapping(&self) -> Vec<u32> {
        self.trials.iter().map(|t| t.goal_reaches).collect()
    }

    pub fn actions(&self) -> ActionCounts {
        let mut c = ActionCounts::default();
        for t in &self.trials {
            c.add(&t.actions);
        }
        c
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FitnessOptions {
    /// Keep each feedback gate's birth and end tables per trial.
    pub capture_tables: bool,
    /// Evaluate with feedback updates disabled.
    pub frozen: bool,
}

/// Evaluates `brain` on all 24 mappings. Mapping `m` uses the World and
/// Brain substreams of `key` with mapping index `m`, so trials can run in
/// any order.
pub fn fitness(brain: &Brain, params: &WorldParams, key: StreamKey, opts: FitnessOptions) -> Fitness {
    let mappings: Vec<Mapping> = Mapping::all().collect();
    fitness_over(brain, params, key, opts, &mappings)
}

pub fn fitness_over(
    brain: &Brain,
    params: &WorldParams,
    key: StreamKey,
    opts: FitnessOptions,
    mappings: &[Mapping],
) -> Fitness {
    let mut brain = if opts.frozen { brain.frozen() } else { brain.clone() };
    let mut trials = Vec::with_capacity(N_MAPPINGS);
    for &mapping in mappings {
        brain.reset();
        let m = mapping.index() as u64;
        let mut world_rng = key.purpose(Purpose::World).mapping(m).rng();
        let mut brain_rng = key.purpose(Purpose::Brain).mapping(m).rng();
        let mut result = run_trial(&mut brain, mapping, params, &mut world_rng, &mut brain_rng, None);
        if opts.capture_tables {
            result.tables = brain.feedback_tables();
        }
        trials.push(result);
    }
    let log_w = log_fitness(&trials, params.goal_bonus);
    Fitness { log_w, trials }
}

/// `ln W`, summing the log of each trial's term so the product cannot
/// overflow.
pub fn log_fitness(trials: &[TrialResult], goal_bonus: f64) -> f64 {
    trials.iter().map(|t| t.term(goal_bonus).ln()).sum()
}
