//! Generational loop: evaluation, tournament selection and mutation, plus
//! the ancestry bookkeeping needed to reconstruct lines of descent.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brain::{Brain, GateCounts};
use crate::config::RunConfig;
use crate::environment::{fitness, ActionCounts, Fitness, FitnessOptions};
use crate::genome::{Genome, MutationEvent};
use crate::rng::{Purpose, StreamKey};

/// What evaluation recorded about an individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub log_w: f64,
    pub goal_count: f64,
    pub goals_per_mapping: Vec<u32>,
    pub actions: ActionCounts,
    pub gates: GateCounts,
}

impl Summary {
    pub fn from_fitness(f: &Fitness, gates: GateCounts) -> Self {
        Self {
            log_w: f.log_w,
            goal_count: f.goal_count(),
            goals_per_mapping: f.goals_per_mapping(),
            actions: f.actions(),
            gates,
        }
    }

    /// Fraction of mapping trials that never reached the goal.
    pub fn zero_goal_fraction(&self) -> f64 {
        if self.goals_per_mapping.is_empty() {
            return 1.0;
        }
        let zeros = self.goals_per_mapping.iter().filter(|&&g| g == 0).count();
        zeros as f64 / self.goals_per_mapping.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub id: u64,
    /// `None` for founders.
    pub parent_id: Option<u64>,
    pub generation: u64,
    pub genome: Arc<Genome>,
    /// Changes from the parent genome; empty for founders.
    pub mutations: Vec<MutationEvent>,
    pub summary: Option<Summary>,
}

impl Individual {
    pub fn log_w(&self) -> f64 {
        self.summary
            .as_ref()
            .expect("individual has been evaluated")
            .log_w
    }
}

pub fn founders(config: &RunConfig) -> Vec<Individual> {
    let g = &config.genome;
    let kinds = config.run.gates.kinds();
    (0..config.run.population)
        .map(|i| {
            let mut rng = StreamKey::new(config.run.seed, Purpose::Founders)
                .individual(i as u64)
                .rng();
            let genome = Genome::random(g.initial_length, g.initial_codons, kinds, &mut rng)
                .expect("validated config");
            Individual {
                id: i as u64,
                parent_id: None,
                generation: 0,
                genome: Arc::new(genome),
                mutations: Vec::new(),
                summary: None,
            }
        })
        .collect()
}

/// Evaluation key of slot `index` in generation `generation`.
pub fn evaluation_key(seed: u64, generation: u64, index: usize) -> StreamKey {
    StreamKey::new(seed, Purpose::World)
        .generation(generation)
        .individual(index as u64)
}

pub fn evaluate_individual(genome: &Genome, config: &RunConfig, key: StreamKey) -> Summary {
    let brain = Brain::build(genome, config.run.gates.kinds());
    let f = fitness(&brain, &config.world, key, FitnessOptions::default());
    Summary::from_fitness(&f, brain.gate_counts())
}

/// Scores every individual. Each slot has its own substreams, so the
/// result does not depend on how rayon schedules the work.
pub fn evaluate_population(pop: &mut [Individual], config: &RunConfig) {
    let seed = config.run.seed;
    pop.par_iter_mut().enumerate().for_each(|(i, ind)| {
        let key = evaluation_key(seed, ind.generation, i);
        ind.summary = Some(evaluate_individual(&ind.genome, config, key));
    });
}

/// Draws `k` indices with replacement and returns the fittest. Ties between
/// distinct individuals are broken uniformly.
pub fn tournament_select<R: Rng + ?Sized>(log_w: &[f64], k: usize, rng: &mut R) -> usize {
    assert!(k >= 1 && !log_w.is_empty());
    let mut best = f64::NEG_INFINITY;
    let mut tied: Vec<usize> = Vec::with_capacity(k);
    for _ in 0..k {
        let i = rng.random_range(0..log_w.len());
        let w = log_w[i];
        if w > best || tied.is_empty() {
            best = w;
            tied.clear();
            tied.push(i);
        } else if w == best && !tied.contains(&i) {
            tied.push(i);
        }
    }
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.random_range(0..tied.len())]
    }
}

/// Builds generation `generation` from the evaluated previous one.
/// Offspring ids start at `next_id`.
pub fn next_generation(
    pop: &[Individual],
    config: &RunConfig,
    generation: u64,
    next_id: u64,
) -> Vec<Individual> {
    let seed = config.run.seed;
    let log_w: Vec<f64> = pop.iter().map(Individual::log_w).collect();
    let mut select_rng = StreamKey::new(seed, Purpose::Selection)
        .generation(generation)
        .rng();
    let parents: Vec<usize> = (0..config.run.population)
        .map(|_| tournament_select(&log_w, config.run.tournament_size, &mut select_rng))
        .collect();
    parents
        .into_par_iter()
        .enumerate()
        .map(|(slot, p)| {
            let parent = &pop[p];
            let mut rng = StreamKey::new(seed, Purpose::Mutation)
                .generation(generation)
                .individual(slot as u64)
                .rng();
            let (child, mutations) = parent.genome.mutate_logged(&config.genome, &mut rng);
            let genome = if mutations.is_empty() {
                Arc::clone(&parent.genome)
            } else {
                Arc::new(child)
            };
            Individual {
                id: next_id + slot as u64,
                parent_id: Some(parent.id),
                generation,
                genome,
                mutations,
                summary: None,
            }
        })
        .collect()
}

/// One row of the per-generation statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: u64,
    #[serde(rename = "max_W_log")]
    pub max_w_log: f64,
    #[serde(rename = "mean_W_log")]
    pub mean_w_log: f64,
    pub mean_goal_count: f64,
    pub frac_zero_goal: f64,
    pub mean_det_gates: f64,
    pub mean_prob_gates: f64,
    pub mean_fb_gates: f64,
    pub frac_forward: f64,
    pub frac_turn: f64,
    pub frac_nothing: f64,
}

impl GenerationStats {
    pub const HEADER: [&'static str; 11] = [
        "generation",
        "max_W_log",
        "mean_W_log",
        "mean_goal_count",
        "frac_zero_goal",
        "mean_det_gates",
        "mean_prob_gates",
        "mean_fb_gates",
        "frac_forward",
        "frac_turn",
        "frac_nothing",
    ];

    pub fn compute(generation: u64, pop: &[Individual]) -> Self {
        let n = pop.len() as f64;
        let summaries: Vec<&Summary> = pop
            .iter()
            .map(|i| i.summary.as_ref().expect("evaluated"))
            .collect();
        let mean = |f: &dyn Fn(&Summary) -> f64| summaries.iter().map(|s| f(s)).sum::<f64>() / n;
        let mut actions = ActionCounts::default();
        for s in &summaries {
            actions.add(&s.actions);
        }
        let [frac_forward, frac_turn, frac_nothing] = actions.fractions();
        Self {
            generation,
            max_w_log: summaries
                .iter()
                .map(|s| s.log_w)
                .fold(f64::NEG_INFINITY, f64::max),
            mean_w_log: mean(&|s| s.log_w),
            mean_goal_count: mean(&|s| s.goal_count),
            frac_zero_goal: mean(&|s| s.zero_goal_fraction()),
            mean_det_gates: mean(&|s| s.gates.deterministic as f64),
            mean_prob_gates: mean(&|s| s.gates.probabilistic as f64),
            mean_fb_gates: mean(&|s| s.gates.feedback as f64),
            frac_forward,
            frac_turn,
            frac_nothing,
        }
    }

    pub fn values(&self) -> [f64; 10] {
        [
            self.max_w_log,
            self.mean_w_log,
            self.mean_goal_count,
            self.frac_zero_goal,
            self.mean_det_gates,
            self.mean_prob_gates,
            self.mean_fb_gates,
            self.frac_forward,
            self.frac_turn,
            self.frac_nothing,
        ]
    }
}

/// Compact archive entry kept for every individual ever evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AncestryRow {
    pub id: u64,
    /// -1 for founders.
    pub parent_id: i64,
    pub generation: u64,
    pub log_w: f64,
}

impl AncestryRow {
    pub fn of(ind: &Individual) -> Self {
        Self {
            id: ind.id,
            parent_id: ind.parent_id.map_or(-1, |p| p as i64),
            generation: ind.generation,
            log_w: ind.log_w(),
        }
    }
}

#[derive(Debug, Clone)]
struct LineageNode {
    individual: Individual,
    children: u32,
}

/// Ancestry tree pruned to individuals with living descendants. Genomes of
/// everything on any surviving lineage are retained, so a line of descent
/// can be written out exactly at the end of a run.
#[derive(Debug, Clone, Default)]
pub struct Lineage {
    nodes: HashMap<u64, LineageNode>,
}

impl Lineage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&Individual> {
        self.nodes.get(&id).map(|n| &n.individual)
    }

    /// Adds a freshly evaluated generation.
    pub fn add_generation(&mut self, pop: &[Individual]) {
        for ind in pop {
            if let Some(p) = ind.parent_id {
                if let Some(node) = self.nodes.get_mut(&p) {
                    node.children += 1;
                }
            }
            self.nodes.insert(
                ind.id,
                LineageNode {
                    individual: ind.clone(),
                    children: 0,
                },
            );
        }
    }

    /// Drops every individual of `previous` that left no offspring, then
    /// walks up removing ancestors whose lines died out.
    pub fn prune(&mut self, previous: &[Individual]) {
        for ind in previous {
            let mut next = Some(ind.id);
            while let Some(id) = next {
                let Some(node) = self.nodes.get(&id) else { break };
                if node.children > 0 {
                    break;
                }
                let parent = node.individual.parent_id;
                self.nodes.remove(&id);
                next = parent.filter(|p| match self.nodes.get_mut(p) {
                    Some(pn) => {
                        pn.children -= 1;
                        true
                    }
                    None => false,
                });
            }
        }
    }
}

/// One ancestor on a line of descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LodRecord {
    pub id: u64,
    pub parent_id: i64,
    pub generation: u64,
    pub log_w: f64,
    pub goal_count: f64,
    pub goals_per_mapping: Vec<u32>,
    pub actions: ActionCounts,
    pub gates: GateCounts,
    /// Lowercase hex of the genome.
    pub genome: String,
    pub mutations: Vec<MutationEvent>,
}

impl LodRecord {
    pub fn of(ind: &Individual) -> Self {
        let s = ind.summary.as_ref().expect("evaluated");
        Self {
            id: ind.id,
            parent_id: ind.parent_id.map_or(-1, |p| p as i64),
            generation: ind.generation,
            log_w: s.log_w,
            goal_count: s.goal_count,
            goals_per_mapping: s.goals_per_mapping.clone(),
            actions: s.actions,
            gates: s.gates,
            genome: ind.genome.to_hex(),
            mutations: ind.mutations.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineOfDescent {
    /// Founder first, sampled final individual last.
    pub records: Vec<LodRecord>,
    /// Deepest strict ancestor shared by the whole final population, if the
    /// population has coalesced.
    pub mrca: Option<u64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum LodError {
    #[error("ancestor {0} is missing from the archive")]
    MissingAncestor(u64),
    #[error("final population is empty")]
    EmptyPopulation,
}

fn ancestor_chain(lineage: &Lineage, id: u64) -> Result<Vec<&Individual>, LodError> {
    let mut chain = Vec::new();
    let mut next = Some(id);
    while let Some(id) = next {
        let ind = lineage.get(id).ok_or(LodError::MissingAncestor(id))?;
        chain.push(ind);
        next = ind.parent_id;
    }
    chain.reverse();
    Ok(chain)
}

/// Follows a uniformly chosen final individual back to its founder.
pub fn trace_lod<R: Rng + ?Sized>(
    lineage: &Lineage,
    final_ids: &[u64],
    rng: &mut R,
) -> Result<LineOfDescent, LodError> {
    if final_ids.is_empty() {
        return Err(LodError::EmptyPopulation);
    }
    let chosen = final_ids[rng.random_range(0..final_ids.len())];
    let chain = ancestor_chain(lineage, chosen)?;

    let mut through: HashMap<u64, usize> = HashMap::new();
    for &id in final_ids {
        for ind in ancestor_chain(lineage, id)? {
            *through.entry(ind.id).or_default() += 1;
        }
    }
    let n = final_ids.len();
    let mrca = chain[..chain.len() - 1]
        .iter()
        .rev()
        .find(|ind| through.get(&ind.id) == Some(&n))
        .map(|ind| ind.id);

    Ok(LineOfDescent {
        records: chain.into_iter().map(LodRecord::of).collect(),
        mrca,
    })
}

/// Receives each generation as soon as it is evaluated.
pub trait RunObserver {
    fn on_generation(
        &mut self,
        stats: &GenerationStats,
        population: &[Individual],
    ) -> std::io::Result<()>;
}

impl RunObserver for () {
    fn on_generation(&mut self, _: &GenerationStats, _: &[Individual]) -> std::io::Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub stats: Vec<GenerationStats>,
    pub ancestry: Vec<AncestryRow>,
    pub final_population: Vec<Individual>,
    pub lineage: Lineage,
}

impl RunArtifacts {
    pub fn final_ids(&self) -> Vec<u64> {
        self.final_population.iter().map(|i| i.id).collect()
    }

    /// The line of descent of a final individual picked with the run's
    /// `Lod` substream.
    pub fn lod(&self, seed: u64) -> Result<LineOfDescent, LodError> {
        let mut rng = StreamKey::new(seed, Purpose::Lod).rng();
        trace_lod(&self.lineage, &self.final_ids(), &mut rng)
    }
}

/// Runs `config.run.generations` evaluated generations (founders count as
/// the first; zero still evaluates the founders) on `workers` threads.
pub fn run_evolution<O: RunObserver + ?Sized>(
    config: &RunConfig,
    workers: usize,
    observer: &mut O,
) -> std::io::Result<RunArtifacts> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(std::io::Error::other)?;
    run_sequential(config, &pool, observer)
}

fn run_sequential<O: RunObserver + ?Sized>(
    config: &RunConfig,
    pool: &rayon::ThreadPool,
    observer: &mut O,
) -> std::io::Result<RunArtifacts> {
    let generations = config.run.generations.max(1);
    let mut stats = Vec::with_capacity(generations as usize);
    let mut ancestry = Vec::new();
    let mut lineage = Lineage::new();
    let mut pop = founders(config);
    let mut next_id = pop.len() as u64;

    for g in 0..generations {
        if g > 0 {
            let children = pool.install(|| next_generation(&pop, config, g, next_id));
            next_id += children.len() as u64;
            let previous = std::mem::replace(&mut pop, children);
            pool.install(|| evaluate_population(&mut pop, config));
            lineage.add_generation(&pop);
            lineage.prune(&previous);
        } else {
            pool.install(|| evaluate_population(&mut pop, config));
            lineage.add_generation(&pop);
        }
        ancestry.extend(pop.iter().map(AncestryRow::of));
        let row = GenerationStats::compute(g, &pop);
        observer.on_generation(&row, &pop)?;
        stats.push(row);
    }

    Ok(RunArtifacts {
        stats,
        ancestry,
        final_population: pop,
        lineage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GateSet;
    use crate::genome::GenomeParams;
    use crate::rng::SimRng;
    use rand::SeedableRng;

    pub(crate) fn tiny_config(seed: u64) -> RunConfig {
        let mut c = RunConfig::default();
        c.run.seed = seed;
        c.run.population = 8;
        c.run.generations = 5;
        c.world.width = 16;
        c.world.height = 16;
        c.world.start_distance = 6;
        c.world.steps = 48;
        c.genome.initial_length = 1000;
        c
    }

    #[test]
    fn strict_maximum_wins() {
        let w = [1.0, 2.0, 3.0, 9.0, 5.0];
        let mut rng = SimRng::seed_from_u64(1);
        // With enough draws the maximum is almost surely included.
        for _ in 0..100 {
            let i = tournament_select(&w, 60, &mut rng);
            assert_eq!(i, 3);
        }
    }

    #[test]
    fn k_one_is_uniform() {
        let w = [5.0, 1.0, 3.0, 2.0];
        let mut rng = SimRng::seed_from_u64(2);
        let mut counts = [0u32; 4];
        for _ in 0..40_000 {
            counts[tournament_select(&w, 1, &mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 400.0, "{counts:?}");
        }
    }

    #[test]
    fn equal_fitness_selects_uniformly() {
        let w = vec![0.0; 10];
        let mut rng = SimRng::seed_from_u64(3);
        let mut counts = [0f64; 10];
        let draws = 100_000;
        for _ in 0..draws {
            counts[tournament_select(&w, 5, &mut rng)] += 1.0;
        }
        let e = draws as f64 / 10.0;
        let chi2: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
        // 9 degrees of freedom, p = 0.001.
        assert!(chi2 < 27.88, "chi2 {chi2}");
    }

    #[test]
    fn winners_beat_the_mean() {
        let mut rng = SimRng::seed_from_u64(4);
        let w: Vec<f64> = (0..100).map(|_| rng.random::<f64>() * 10.0).collect();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let winners: f64 = (0..10_000)
            .map(|_| w[tournament_select(&w, 5, &mut rng)])
            .sum::<f64>()
            / 10_000.0;
        assert!(winners >= mean);
    }

    fn synthetic(pop_size: usize, seed: u64) -> Vec<Individual> {
        let mut rng = SimRng::seed_from_u64(seed);
        (0..pop_size as u64)
            .map(|i| Individual {
                id: i,
                parent_id: None,
                generation: 0,
                genome: Arc::new(Genome::from_sites(vec![i as u8; 1000])),
                mutations: Vec::new(),
                summary: Some(Summary {
                    log_w: rng.random(),
                    goal_count: 0.0,
                    goals_per_mapping: vec![0; 24],
                    actions: ActionCounts::default(),
                    gates: GateCounts::default(),
                }),
            })
            .collect()
    }

    #[test]
    fn zero_rates_copy_parents() {
        let mut c = tiny_config(5);
        c.genome = GenomeParams::none();
        c.run.population = 20;
        let pop = synthetic(20, 5);
        let next = next_generation(&pop, &c, 1, 20);
        assert_eq!(next.len(), 20);
        for child in &next {
            let parent = &pop[child.parent_id.unwrap() as usize];
            assert_eq!(child.genome, parent.genome);
            assert!(child.mutations.is_empty());
            assert_eq!(child.generation, 1);
        }
        let ids: Vec<u64> = next.iter().map(|i| i.id).collect();
        assert_eq!(ids, (20..40).collect::<Vec<_>>());
    }

    #[test]
    fn best_genome_is_usually_retained() {
        // Tournaments carry no elitism, so the best individual is kept with
        // probability 1 - (1 - 1/N)^(kN), about 0.993 for N = 100, k = 5.
        let mut c = tiny_config(6);
        c.genome = GenomeParams::none();
        c.run.population = 100;
        let mut kept = 0;
        for trial in 0..500 {
            c.run.seed = trial;
            let pop = synthetic(100, trial);
            let best = (0..100)
                .max_by(|&a, &b| pop[a].log_w().total_cmp(&pop[b].log_w()))
                .unwrap() as u64;
            let next = next_generation(&pop, &c, 1, 100);
            if next.iter().any(|i| i.parent_id == Some(best)) {
                kept += 1;
            }
        }
        assert!(kept >= 485, "kept {kept}/500");
    }

    #[test]
    fn founders_have_no_parents() {
        let c = tiny_config(7);
        let f = founders(&c);
        assert_eq!(f.len(), 8);
        assert!(f.iter().all(|i| i.parent_id.is_none() && i.generation == 0));
        assert_eq!(founders(&c), f);
    }

    #[test]
    fn identical_deterministic_genomes_with_pinned_worlds() {
        let mut c = tiny_config(8);
        c.run.gates = GateSet::Deterministic;
        let genome = founders(&c)[0].genome.clone();
        let key = evaluation_key(8, 0, 0);
        let a = evaluate_individual(&genome, &c, key);
        let b = evaluate_individual(&genome, &c, key);
        assert_eq!(a, b);
    }

    #[test]
    fn evaluation_is_reproducible() {
        let c = tiny_config(9);
        let mut a = founders(&c);
        let mut b = founders(&c);
        evaluate_population(&mut a, &c);
        evaluate_population(&mut b, &c);
        let wa: Vec<u64> = a.iter().map(|i| i.log_w().to_bits()).collect();
        let wb: Vec<u64> = b.iter().map(|i| i.log_w().to_bits()).collect();
        assert_eq!(wa, wb);
    }

    #[test]
    fn zero_generations_evaluates_founders_only() {
        let mut c = tiny_config(10);
        c.run.generations = 0;
        let art = run_evolution(&c, 1, &mut ()).unwrap();
        assert_eq!(art.stats.len(), 1);
        assert!(art.final_population.iter().all(|i| i.generation == 0));
        let lod = art.lod(10).unwrap();
        assert_eq!(lod.records.len(), 1);
        assert_eq!(lod.mrca, None);
    }

    #[test]
    fn every_individual_reaches_a_founder() {
        let c = tiny_config(11);
        let art = run_evolution(&c, 1, &mut ()).unwrap();
        assert_eq!(art.stats.len(), 5);
        let by_id: HashMap<u64, AncestryRow> = art.ancestry.iter().map(|r| (r.id, *r)).collect();
        for row in &art.ancestry {
            let mut r = *row;
            while r.parent_id >= 0 {
                let p = by_id[&(r.parent_id as u64)];
                assert_eq!(p.generation + 1, r.generation);
                r = p;
            }
            assert_eq!(r.generation, 0);
        }
    }

    #[test]
    fn single_lineage_population() {
        let mut c = tiny_config(12);
        c.run.population = 1;
        c.run.tournament_size = 1;
        let art = run_evolution(&c, 1, &mut ()).unwrap();
        let lod = art.lod(12).unwrap();
        assert_eq!(lod.records.len(), 5);
        let gens: Vec<u64> = lod.records.iter().map(|r| r.generation).collect();
        assert_eq!(gens, vec![0, 1, 2, 3, 4]);
        assert_eq!(lod.mrca, Some(lod.records[3].id));
        // Nothing dies out in a single lineage, and nothing else exists.
        assert_eq!(art.lineage.len(), 5);
    }

    #[test]
    fn pruning_keeps_only_living_lines() {
        let mut c = tiny_config(13);
        c.run.generations = 12;
        let art = run_evolution(&c, 1, &mut ()).unwrap();
        let final_ids = art.final_ids();
        let mut alive = std::collections::HashSet::new();
        for &id in &final_ids {
            let mut next = Some(id);
            while let Some(i) = next {
                alive.insert(i);
                next = art.lineage.get(i).unwrap().parent_id;
            }
        }
        assert_eq!(alive.len(), art.lineage.len());
    }

    #[test]
    fn missing_ancestor_is_reported() {
        let c = tiny_config(14);
        let art = run_evolution(&c, 1, &mut ()).unwrap();
        let mut rng = SimRng::seed_from_u64(0);
        let err = trace_lod(&Lineage::new(), &art.final_ids(), &mut rng).unwrap_err();
        assert!(matches!(err, LodError::MissingAncestor(_)));
    }

    #[test]
    fn feedback_free_configs_never_build_feedback_gates() {
        for gates in [GateSet::Deterministic, GateSet::DeterministicProbabilistic] {
            let mut c = tiny_config(15);
            c.run.gates = gates;
            let art = run_evolution(&c, 1, &mut ()).unwrap();
            assert!(art.stats.iter().all(|s| s.mean_fb_gates == 0.0));
            if gates == GateSet::Deterministic {
                assert!(art.stats.iter().all(|s| s.mean_prob_gates == 0.0));
            }
        }
    }

    #[test]
    fn stats_fractions_sum_to_one() {
        let c = tiny_config(16);
        let art = run_evolution(&c, 1, &mut ()).unwrap();
        for s in &art.stats {
            assert!((s.frac_forward + s.frac_turn + s.frac_nothing - 1.0).abs() < 1e-9);
            assert!(s.max_w_log >= s.mean_w_log);
            assert!((0.0..=1.0).contains(&s.frac_zero_goal));
        }
    }
}
