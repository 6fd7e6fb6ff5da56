//! Post-hoc analyses of evolved agents: feedback ablation, information
//! gained by feedback tables, performance curves, gate-count correlation
//! and action usage. Every report renders to a plot-ready CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::brain::{Brain, GateCounts};
use crate::config::RunConfig;
use crate::environment::{fitness, run_trial, ActionCounts, FitnessOptions, Mapping, StepRecord, TrialResult};
use crate::evolution::LodRecord;
use crate::gates::{FeedbackGate, ProbabilityTable, Wiring, MAX_DEPTH};
use crate::genome::Genome;
use crate::rng::{Purpose, StreamKey};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {needed} agents, got {got}")]
    TooFewAgents { needed: usize, got: usize },
    #[error("{0} count is constant, correlation is undefined")]
    DegenerateVariance(&'static str),
}

/// Evaluation key for repeat `repeat` of agent `agent`. Kept apart from the
/// evolution streams by hashing through the `Analysis` purpose.
pub fn analysis_key(seed: u64, agent: u64, repeat: u64) -> StreamKey {
    let base = StreamKey::new(seed, Purpose::Analysis)
        .individual(agent)
        .generation(repeat)
        .hash();
    StreamKey::new(base, Purpose::World)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationReport {
    /// Mean goals per mapping trial with feedback working.
    pub active: f64,
    /// Same, with every feedback gate frozen.
    pub frozen: f64,
}

impl AblationReport {
    pub fn difference(&self) -> f64 {
        self.active - self.frozen
    }
}

/// Evaluates the agent `config.analysis.repeats` times with and without
/// feedback, on the same worlds and brain streams.
pub fn ablate_and_compare(genome: &Genome, config: &RunConfig, seed: u64, agent: u64) -> AblationReport {
    let brain = Brain::build(genome, config.run.gates.kinds());
    let repeats = config.analysis.repeats.max(1);
    let mut active = 0.0;
    let mut frozen = 0.0;
    for r in 0..repeats {
        let key = analysis_key(seed, agent, r as u64);
        let on = FitnessOptions::default();
        let off = FitnessOptions { frozen: true, ..on };
        active += fitness(&brain, &config.world, key, on).goal_count();
        frozen += fitness(&brain, &config.world, key, off).goal_count();
    }
    AblationReport {
        active: active / repeats as f64,
        frozen: frozen / repeats as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateMi {
    pub birth_mi: f64,
    /// End-of-trial information, one entry per mapping trial and repeat.
    pub end_mi: Vec<f64>,
}

impl GateMi {
    pub fn mean_end(&self) -> f64 {
        self.end_mi.iter().sum::<f64>() / self.end_mi.len() as f64
    }

    pub fn delta(&self) -> f64 {
        self.end_mi.iter().map(|e| e - self.birth_mi).sum::<f64>() / self.end_mi.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiReport {
    pub gates: Vec<GateMi>,
    pub goal_count: f64,
    /// `(mapping, [(birth, end)] per gate)` from the first repeat.
    pub tables: Vec<(usize, Vec<(ProbabilityTable, ProbabilityTable)>)>,
}

impl MiReport {
    /// Mean change over gates; `None` for agents without feedback gates.
    pub fn delta(&self) -> Option<f64> {
        mean(self.gates.iter().map(GateMi::delta))
    }

    pub fn birth_mi(&self) -> Option<f64> {
        mean(self.gates.iter().map(|g| g.birth_mi))
    }

    pub fn end_mi(&self) -> Option<f64> {
        mean(self.gates.iter().map(GateMi::mean_end))
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn mi_report(genome: &Genome, config: &RunConfig, seed: u64, agent: u64, frozen: bool) -> MiReport {
    let brain = Brain::build(genome, config.run.gates.kinds());
    let mut gates: Vec<GateMi> = brain
        .feedback_gates()
        .map(|g| GateMi {
            birth_mi: g.birth_table().mutual_information(),
            end_mi: Vec::new(),
        })
        .collect();
    let opts = FitnessOptions {
        capture_tables: true,
        frozen,
    };
    let repeats = config.analysis.repeats.max(1);
    let mut goals = 0.0;
    let mut tables = Vec::new();
    for r in 0..repeats {
        let f = fitness(&brain, &config.world, analysis_key(seed, agent, r as u64), opts);
        goals += f.goal_count();
        for trial in &f.trials {
            for (g, (_, end)) in gates.iter_mut().zip(&trial.tables) {
                g.end_mi.push(end.mutual_information());
            }
            if r == 0 && !trial.tables.is_empty() {
                tables.push((trial.mapping, trial.tables.clone()));
            }
        }
    }
    MiReport {
        gates,
        goal_count: goals / repeats as f64,
        tables,
    }
}

/// Runs one mapping trial of an agent and records every world update.
/// Streams depend only on `(seed, agent, mapping)`.
pub fn replay(genome: &Genome, config: &RunConfig, seed: u64, agent: u64, mapping: Mapping) -> (TrialResult, Vec<StepRecord>) {
    let base = StreamKey::new(seed, Purpose::Replay).individual(agent).hash();
    let m = mapping.index() as u64;
    let mut world_rng = StreamKey::new(base, Purpose::World).mapping(m).rng();
    let mut brain_rng = StreamKey::new(base, Purpose::Brain).mapping(m).rng();
    let mut brain = Brain::build(genome, config.run.gates.kinds());
    let mut steps = Vec::with_capacity(config.world.steps as usize);
    let mut record = |r: &StepRecord| steps.push(*r);
    let result = run_trial(&mut brain, mapping, &config.world, &mut world_rng, &mut brain_rng, Some(&mut record));
    (result, steps)
}

/// Width-one performance bin of a goal count.
pub fn performance_bin(goal_count: f64) -> i64 {
    goal_count.floor() as i64
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiBin {
    pub bin: i64,
    pub n: usize,
    pub mean_delta: Option<f64>,
}

/// Groups `(goal_count, delta)` pairs into consecutive width-one bins that
/// span the observed range, empty bins included.
pub fn bin_by_performance(points: &[(f64, f64)]) -> Vec<MiBin> {
    let Some(lo) = points.iter().map(|p| performance_bin(p.0)).min() else {
        return Vec::new();
    };
    let hi = points.iter().map(|p| performance_bin(p.0)).max().unwrap();
    (lo..=hi)
        .map(|bin| {
            let deltas: Vec<f64> = points
                .iter()
                .filter(|p| performance_bin(p.0) == bin)
                .map(|p| p.1)
                .collect();
            MiBin {
                bin,
                n: deltas.len(),
                mean_delta: mean(deltas.into_iter()),
            }
        })
        .collect()
}

/// One replicate's performance at one generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfPoint {
    pub generation: u64,
    pub goal_count: f64,
    /// Variance of goal reaches across the mapping trials, if known.
    pub mapping_variance: Option<f64>,
}

impl PerfPoint {
    pub fn from_lod(r: &LodRecord) -> Self {
        Self {
            generation: r.generation,
            goal_count: r.goal_count,
            mapping_variance: variance(&r.goals_per_mapping.iter().map(|&g| g as f64).collect::<Vec<_>>()),
        }
    }
}

/// Population variance; `None` for an empty slice.
fn variance(xs: &[f64]) -> Option<f64> {
    let m = mean(xs.iter().copied())?;
    Some(xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceRow {
    pub generation: u64,
    pub replicates: usize,
    pub mean_goal_count: f64,
    /// Standard error across replicates; absent with a single replicate.
    pub se_goal_count: Option<f64>,
    pub mapping_variance: Option<f64>,
    /// Fraction of replicates that never reached the goal.
    pub frac_zero_goal: f64,
}

/// Summarises per-replicate series generation by generation.
pub fn performance_summary(series: &[Vec<PerfPoint>]) -> Vec<PerformanceRow> {
    let mut by_gen: BTreeMap<u64, Vec<PerfPoint>> = BTreeMap::new();
    for s in series {
        for p in s {
            by_gen.entry(p.generation).or_default().push(*p);
        }
    }
    by_gen
        .into_iter()
        .map(|(generation, points)| {
            let n = points.len();
            let goals: Vec<f64> = points.iter().map(|p| p.goal_count).collect();
            let m = mean(goals.iter().copied()).unwrap();
            let se = (n > 1).then(|| {
                let var = goals.iter().map(|g| (g - m).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            });
            PerformanceRow {
                generation,
                replicates: n,
                mean_goal_count: m,
                se_goal_count: se,
                mapping_variance: mean(points.iter().filter_map(|p| p.mapping_variance)),
                frac_zero_goal: goals.iter().filter(|&&g| g == 0.0).count() as f64 / n as f64,
            }
        })
        .collect()
}

/// Pearson correlation of `(x, y)` pairs.
pub fn pearson(pairs: &[(f64, f64)]) -> Result<f64, AnalysisError> {
    if pairs.len() < 3 {
        return Err(AnalysisError::TooFewAgents {
            needed: 3,
            got: pairs.len(),
        });
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 {
        return Err(AnalysisError::DegenerateVariance("first"));
    }
    if syy == 0.0 {
        return Err(AnalysisError::DegenerateVariance("second"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation between feedback-gate and deterministic-gate counts.
pub fn gate_count_correlation(agents: &[GateCounts]) -> Result<f64, AnalysisError> {
    let pairs: Vec<(f64, f64)> = agents
        .iter()
        .map(|g| (g.feedback as f64, g.deterministic as f64))
        .collect();
    pearson(&pairs).map_err(|e| match e {
        AnalysisError::DegenerateVariance("first") => AnalysisError::DegenerateVariance("feedback gate"),
        AnalysisError::DegenerateVariance(_) => AnalysisError::DegenerateVariance("deterministic gate"),
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionRow {
    pub generation: u64,
    pub with_feedback: bool,
    pub replicates: usize,
    pub fractions: [f64; 3],
}

/// Forward, turn and do-nothing fractions along each line of descent,
/// pooled per generation over replicates whose final agent does or does not
/// carry feedback gates.
pub fn action_usage(lods: &[Vec<LodRecord>]) -> Vec<ActionRow> {
    let mut groups: BTreeMap<(bool, u64), (usize, ActionCounts)> = BTreeMap::new();
    for lod in lods {
        let Some(last) = lod.last() else { continue };
        let with_feedback = last.gates.feedback > 0;
        for r in lod {
            let e = groups.entry((with_feedback, r.generation)).or_default();
            e.0 += 1;
            e.1.add(&r.actions);
        }
    }
    groups
        .into_iter()
        .map(|((with_feedback, generation), (replicates, counts))| ActionRow {
            generation,
            with_feedback,
            replicates,
            fractions: counts.fractions(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    pub positive: usize,
    pub negative: usize,
    /// One-sided `P(X >= positive)` for `X ~ Binomial(positive + negative, 1/2)`.
    pub p_value: f64,
}

/// Paired sign test of `a > b`; ties are dropped.
pub fn sign_test(pairs: &[(f64, f64)]) -> SignTest {
    let positive = pairs.iter().filter(|(a, b)| a > b).count();
    let negative = pairs.iter().filter(|(a, b)| a < b).count();
    let n = positive + negative;
    let mut tail = 0.0;
    for k in positive..=n {
        tail += binomial(n, k);
    }
    SignTest {
        positive,
        negative,
        p_value: tail / 2f64.powi(n as i32),
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Outcome of one run of the teacher testbed.
#[derive(Debug, Clone, PartialEq)]
pub struct TestbedOutcome {
    pub initial_mi: f64,
    pub final_mi: f64,
    /// First evaluation after which the table carried at least the target
    /// information.
    pub reached_at: Option<usize>,
    /// Evaluations whose output matched the hidden mapping.
    pub correct: usize,
}

/// A single 2-in, 2-out feedback gate with depth one and maximal step size,
/// born with a near-uniform table. Each evaluation presents a random input;
/// a teacher raises the positive feedback bit on the next evaluation exactly
/// when the output matched `hidden[input]`.
pub struct Testbed {
    pub gate: FeedbackGate,
    pub hidden: [usize; 4],
}

impl Testbed {
    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let bytes: Vec<u8> = (0..16).map(|_| rng.random_range(96..=159)).collect();
        let table = ProbabilityTable::from_bytes(4, 4, &bytes);
        let wiring = Wiring::new(&[0, 1], &[4, 5]);
        let gate = FeedbackGate::new(wiring, table, 6, 7, 1, [0.5; MAX_DEPTH]);
        let mut hidden = [0, 1, 2, 3];
        for i in (1..4).rev() {
            hidden.swap(i, rng.random_range(0..=i));
        }
        Self { gate, hidden }
    }

    pub fn run<R: Rng + ?Sized>(&mut self, evaluations: usize, target_mi: f64, rng: &mut R) -> TestbedOutcome {
        let initial_mi = self.gate.table().mutual_information();
        let mut reward = false;
        let mut reached_at = None;
        let mut correct = 0;
        for t in 0..evaluations {
            let input = rng.random_range(0..4);
            let out = self.gate.eval(input, reward, false, rng);
            reward = out == self.hidden[input];
            correct += reward as usize;
            if reached_at.is_none() && self.gate.table().mutual_information() >= target_mi {
                reached_at = Some(t + 1);
            }
        }
        // The last reward is still pending; deliver it before reading the table.
        if reward {
            self.gate.apply_feedback(1.0, rng);
        }
        let final_mi = self.gate.table().mutual_information();
        if reached_at.is_none() && final_mi >= target_mi {
            reached_at = Some(evaluations);
        }
        TestbedOutcome {
            initial_mi,
            final_mi,
            reached_at,
            correct,
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn performance_csv(rows: &[PerformanceRow]) -> String {
    let mut s = String::from(
        "generation,replicates,mean_goal_count,se_goal_count,mapping_variance,frac_zero_goal\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.generation,
            r.replicates,
            r.mean_goal_count,
            opt(r.se_goal_count),
            opt(r.mapping_variance),
            r.frac_zero_goal
        );
    }
    s
}

/// Birth and end tables of every feedback gate, one probability per line.
pub fn tables_csv(replicate: &str, report: &MiReport) -> String {
    let mut s = String::new();
    for (mapping, gates) in &report.tables {
        for (g, (birth, end)) in gates.iter().enumerate() {
            for (stage, t) in [("birth", birth), ("end", end)] {
                for i in 0..t.rows() {
                    for o in 0..t.cols() {
                        let _ = writeln!(s, "{replicate},{g},{mapping},{stage},{i},{o},{}", t.get(i, o));
                    }
                }
            }
        }
    }
    s
}

pub const TABLES_HEADER: &str = "replicate,gate,mapping,stage,row,col,p\n";
pub const MI_HEADER: &str = "replicate,goal_count,bin,feedback_gates,birth_mi,end_mi,delta_mi\n";

pub fn mi_row(replicate: &str, report: &MiReport) -> String {
    format!(
        "{replicate},{},{},{},{},{},{}\n",
        report.goal_count,
        performance_bin(report.goal_count),
        report.gates.len(),
        opt(report.birth_mi()),
        opt(report.end_mi()),
        opt(report.delta())
    )
}

pub fn mi_bins_csv(bins: &[MiBin]) -> String {
    let mut s = String::from("bin,agents,mean_delta_mi\n");
    for b in bins {
        let _ = writeln!(s, "{},{},{}", b.bin, b.n, opt(b.mean_delta));
    }
    s
}

pub fn gates_csv(agents: &[(String, GateCounts)], r: Option<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# pearson_r_feedback_deterministic={}", opt(r));
    s.push_str("replicate,feedback,deterministic,probabilistic\n");
    for (name, g) in agents {
        let _ = writeln!(s, "{name},{},{},{}", g.feedback, g.deterministic, g.probabilistic);
    }
    s
}

pub fn actions_csv(rows: &[ActionRow]) -> String {
    let mut s = String::from("generation,group,replicates,frac_forward,frac_turn,frac_nothing\n");
    for r in rows {
        let group = if r.with_feedback { "feedback" } else { "no_feedback" };
        let [f, t, n] = r.fractions;
        let _ = writeln!(s, "{},{group},{},{f},{t},{n}", r.generation, r.replicates);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GateSet;
    use crate::rng::SimRng;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn small_config() -> RunConfig {
        let mut c = RunConfig::default();
        c.world.width = 16;
        c.world.height = 16;
        c.world.start_distance = 6;
        c.world.steps = 64;
        c.analysis.repeats = 2;
        c
    }

    fn founder(c: &RunConfig, seed: u64) -> Genome {
        let mut rng = SimRng::seed_from_u64(seed);
        Genome::random(2000, 40, c.run.gates.kinds(), &mut rng).unwrap()
    }

    #[test]
    fn no_feedback_gates_no_ablation_effect() {
        let mut c = small_config();
        c.run.gates = GateSet::DeterministicProbabilistic;
        for seed in 0..4 {
            let r = ablate_and_compare(&founder(&c, seed), &c, seed, 0);
            assert_eq!(r.difference(), 0.0);
        }
    }

    #[test]
    fn frozen_ablation_is_reproducible() {
        let c = small_config();
        let g = founder(&c, 3);
        assert_eq!(ablate_and_compare(&g, &c, 1, 2), ablate_and_compare(&g, &c, 1, 2));
    }

    #[test]
    fn mi_report_of_feedback_free_agent_is_empty() {
        let mut c = small_config();
        c.run.gates = GateSet::Deterministic;
        let r = mi_report(&founder(&c, 1), &c, 1, 0, false);
        assert!(r.gates.is_empty() && r.tables.is_empty());
        assert_eq!(r.delta(), None);
    }

    #[test]
    fn frozen_agent_gains_nothing() {
        let c = small_config();
        let g = founder(&c, 5);
        assert!(Brain::build(&g, c.run.gates.kinds()).feedback_gates().count() > 0);
        let r = mi_report(&g, &c, 5, 0, true);
        assert_eq!(r.delta(), Some(0.0));
        let live = mi_report(&g, &c, 5, 0, false);
        assert_eq!(live.gates.len(), r.gates.len());
        assert_eq!(live.tables.len(), 24);
    }

    #[test]
    fn bins_cover_the_range() {
        let bins = bin_by_performance(&[(2.3, 0.1), (2.9, 0.3), (5.0, -0.2)]);
        let ids: Vec<i64> = bins.iter().map(|b| b.bin).collect();
        assert_eq!(ids, vec![2, 3, 4, 5]);
        assert_eq!(bins[0].n, 2);
        assert!((bins[0].mean_delta.unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(bins[1].mean_delta, None);
        assert!(bin_by_performance(&[]).is_empty());
    }

    fn points(goals: &[f64]) -> Vec<PerfPoint> {
        goals
            .iter()
            .enumerate()
            .map(|(g, &goal_count)| PerfPoint {
                generation: g as u64,
                goal_count,
                mapping_variance: None,
            })
            .collect()
    }

    #[test]
    fn single_replicate_has_no_standard_error() {
        let rows = performance_summary(&[points(&[0.0, 1.0])]);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.se_goal_count.is_none()));
        assert_eq!(rows[0].frac_zero_goal, 1.0);
    }

    #[test]
    fn summary_matches_hand_computation() {
        let rows = performance_summary(&[points(&[0.0, 2.0]), points(&[0.0, 4.0]), points(&[0.0, 9.0])]);
        assert_eq!(rows[0].frac_zero_goal, 1.0);
        assert_eq!(rows[0].se_goal_count, Some(0.0));
        assert_eq!(rows[1].mean_goal_count, 5.0);
        // sample variance of (2, 4, 9) is 13
        assert!((rows[1].se_goal_count.unwrap() - (13.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(rows[1].frac_zero_goal, 0.0);
    }

    #[test]
    fn perfect_negative_correlation() {
        let agents: Vec<GateCounts> = [(0, 10), (1, 8), (2, 6), (3, 4)]
            .iter()
            .map(|&(f, d)| GateCounts {
                deterministic: d,
                probabilistic: 0,
                feedback: f,
            })
            .collect();
        assert!((gate_count_correlation(&agents).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_coordinate_is_degenerate() {
        let pairs = [(1.0, 2.0), (1.0, 3.0), (1.0, 5.0)];
        assert!(matches!(pearson(&pairs), Err(AnalysisError::DegenerateVariance(_))));
        assert!(matches!(pearson(&pairs[..2]), Err(AnalysisError::TooFewAgents { .. })));
    }

    #[test]
    fn independent_pairs_are_uncorrelated() {
        let mut rng = SimRng::seed_from_u64(9);
        let pairs: Vec<(f64, f64)> = (0..1000).map(|_| (rng.random(), rng.random())).collect();
        assert!(pearson(&pairs).unwrap().abs() < 0.1);
    }

    #[test]
    fn sign_test_tails() {
        let all = vec![(2.0, 1.0); 5];
        assert!((sign_test(&all).p_value - 1.0 / 32.0).abs() < 1e-15);
        let mut mixed = vec![(2.0, 1.0); 9];
        mixed.push((0.0, 1.0));
        mixed.push((1.0, 1.0));
        let t = sign_test(&mixed);
        assert_eq!((t.positive, t.negative), (9, 1));
        assert!((t.p_value - 11.0 / 1024.0).abs() < 1e-15);
    }

    fn lod_record(generation: u64, actions: ActionCounts, feedback: u32) -> LodRecord {
        LodRecord {
            id: generation,
            parent_id: generation as i64 - 1,
            generation,
            log_w: 0.0,
            goal_count: 0.0,
            goals_per_mapping: vec![0; 24],
            actions,
            gates: GateCounts {
                deterministic: 1,
                probabilistic: 0,
                feedback,
            },
            genome: String::new(),
            mutations: Vec::new(),
        }
    }

    #[test]
    fn idle_lineage_does_nothing() {
        let idle = ActionCounts {
            forward: 0,
            turn: 0,
            nothing: 512,
        };
        let lod = vec![lod_record(0, idle, 0), lod_record(1, idle, 0)];
        let rows = action_usage(&[lod]);
        assert_eq!(rows.len(), 2);
        for r in rows {
            assert!(!r.with_feedback);
            assert_eq!(r.fractions, [0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn action_groups_split_on_final_agent() {
        let a = ActionCounts {
            forward: 3,
            turn: 1,
            nothing: 0,
        };
        let with = vec![lod_record(0, a, 0), lod_record(1, a, 2)];
        let without = vec![lod_record(0, a, 0), lod_record(1, a, 0)];
        let rows = action_usage(&[with, without]);
        assert_eq!(rows.iter().filter(|r| r.with_feedback).count(), 2);
        for r in rows {
            assert!((r.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn teacher_drives_table_to_permutation() {
        let mut rng = SimRng::seed_from_u64(21);
        let mut bed = Testbed::new(&mut rng);
        let out = bed.run(2000, 1.7, &mut rng);
        assert!(out.initial_mi <= 0.3);
        assert!(out.final_mi >= 1.7, "{out:?}");
        let t = bed.gate.table();
        for i in 0..4 {
            assert!(t.get(i, bed.hidden[i]) > 0.9);
        }
    }

    #[test]
    fn frozen_learner_scores_less() {
        let mut rng = SimRng::seed_from_u64(22);
        let mut live = Testbed::new(&mut rng);
        let mut frozen = Testbed {
            gate: live.gate.freeze(),
            hidden: live.hidden,
        };
        let a = live.run(2000, 1.7, &mut SimRng::seed_from_u64(1));
        let b = frozen.run(2000, 1.7, &mut SimRng::seed_from_u64(1));
        assert!(b.correct < a.correct);
        assert_eq!(b.final_mi, b.initial_mi);
    }

    #[test]
    fn replay_is_reproducible() {
        let c = small_config();
        let g = founder(&c, 8);
        let m = Mapping::new(5).unwrap();
        let (ra, a) = replay(&g, &c, 1, 4, m);
        let (rb, b) = replay(&g, &c, 1, 4, m);
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert_eq!(a.len(), c.world.steps as usize);
        assert_eq!(a.iter().filter(|s| s.reached_goal).count() as u32, ra.goal_reaches);
    }

    proptest! {
        #[test]
        fn pearson_is_bounded_and_affine_invariant(
            xs in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0), 3..40),
            a in 0.1f64..10.0,
            b in -50.0f64..50.0,
        ) {
            if let Ok(r) = pearson(&xs) {
                prop_assert!((-1.0..=1.0).contains(&r));
                let scaled: Vec<(f64, f64)> = xs.iter().map(|&(x, y)| (a * x + b, y)).collect();
                let r2 = pearson(&scaled).unwrap();
                prop_assert!((r - r2).abs() < 1e-9);
            }
        }
    }
}
