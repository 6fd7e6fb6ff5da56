//! Run configuration as TOML, one section per module.
//! Every field has a default, so an empty file describes the reference
//! setup.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::environment::WorldParams;
use crate::genome::{GateKind, GenomeParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown gate set {0:?} (expected d, dp or dpf)")]
    GateSet(String),
}

/// Which gate kinds genes may code for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateSet {
    Deterministic,
    DeterministicProbabilistic,
    All,
}

impl GateSet {
    pub fn kinds(self) -> &'static [GateKind] {
        match self {
            GateSet::Deterministic => &[GateKind::Deterministic],
            GateSet::DeterministicProbabilistic => {
                &[GateKind::Deterministic, GateKind::Probabilistic]
            }
            GateSet::All => &GateKind::ALL,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            GateSet::Deterministic => "d",
            GateSet::DeterministicProbabilistic => "dp",
            GateSet::All => "dpf",
        }
    }
}

impl fmt::Display for GateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for GateSet {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "d" | "deterministic" => Ok(GateSet::Deterministic),
            "dp" | "deterministic+probabilistic" => Ok(GateSet::DeterministicProbabilistic),
            "dpf" | "all" => Ok(GateSet::All),
            other => Err(ConfigError::GateSet(other.to_string())),
        }
    }
}

impl Serialize for GateSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for GateSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunParams {
    pub seed: u64,
    pub population: usize,
    pub generations: u64,
    pub tournament_size: usize,
    pub gates: GateSet,
    pub snapshot_interval: u64,
}

impl Default for RunParams {
    fn default() -> Self {
        Self {
            seed: 1,
            population: 100,
            generations: 1000,
            tournament_size: 5,
            gates: GateSet::All,
            snapshot_interval: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisParams {
    /// Re-evaluations per agent for ablation and information reports.
    pub repeats: u32,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self { repeats: 10 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunParams,
    pub genome: GenomeParams,
    pub world: WorldParams,
    pub analysis: AnalysisParams,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        let r = &self.run;
        let g = &self.genome;
        let w = &self.world;
        if r.population == 0 {
            return bad("run.population must be at least 1".into());
        }
        if r.tournament_size == 0 || r.tournament_size > r.population {
            return bad(format!(
                "run.tournament_size must be in 1..={} (population)",
                r.population
            ));
        }
        for (name, p) in [
            ("genome.point_rate", g.point_rate),
            ("genome.duplication_rate", g.duplication_rate),
            ("genome.deletion_rate", g.deletion_rate),
            ("world.wall_probability", w.wall_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if g.min_length > g.max_length
            || !(g.min_length..=g.max_length).contains(&g.initial_length)
        {
            return bad("genome lengths must satisfy min_length <= initial_length <= max_length".into());
        }
        if g.initial_codons > g.initial_length / 2 {
            return bad("genome.initial_codons do not fit in genome.initial_length".into());
        }
        if g.duplication_min > g.duplication_max || g.deletion_min > g.deletion_max {
            return bad("stretch length ranges must have min <= max".into());
        }
        if w.width < 3 || w.height < 3 {
            return bad("world must be at least 3x3".into());
        }
        if w.wall_probability >= 1.0 {
            return bad("world.wall_probability must leave room for open tiles".into());
        }
        let max_distance = (w.width - 2) * (w.height - 2);
        if w.start_distance as usize >= max_distance {
            return bad("world.start_distance cannot be reached inside this world".into());
        }
        if w.goal_bonus < 0.0 {
            return bad("world.goal_bonus must be non-negative".into());
        }
        Ok(())
    }
}

/// Every config key with its default and meaning, for `--help`.
pub fn reference() -> String {
    let d = RunConfig::default();
    let rows: Vec<(String, String, &str)> = vec![
        ("run.seed".into(), d.run.seed.to_string(), "master seed; every random stream derives from it"),
        ("run.population".into(), d.run.population.to_string(), "individuals per generation"),
        ("run.generations".into(), d.run.generations.to_string(), "generations evaluated; 0 evaluates founders only"),
        ("run.tournament_size".into(), d.run.tournament_size.to_string(), "individuals per selection tournament"),
        ("run.gates".into(), format!("\"{}\"", d.run.gates), "gate kinds genes may code for: d, dp or dpf"),
        ("run.snapshot_interval".into(), d.run.snapshot_interval.to_string(), "write a genome snapshot every N generations (0 = final only)"),
        ("genome.initial_length".into(), d.genome.initial_length.to_string(), "founder genome length in sites"),
        ("genome.initial_codons".into(), d.genome.initial_codons.to_string(), "start codons written into each founder"),
        ("genome.point_rate".into(), d.genome.point_rate.to_string(), "per-site point mutation probability"),
        ("genome.duplication_rate".into(), d.genome.duplication_rate.to_string(), "probability of one stretch duplication per birth"),
        ("genome.deletion_rate".into(), d.genome.deletion_rate.to_string(), "probability of one stretch deletion per birth"),
        ("genome.duplication_min".into(), d.genome.duplication_min.to_string(), "shortest duplicated stretch"),
        ("genome.duplication_max".into(), d.genome.duplication_max.to_string(), "longest duplicated stretch"),
        ("genome.deletion_min".into(), d.genome.deletion_min.to_string(), "shortest deleted stretch"),
        ("genome.deletion_max".into(), d.genome.deletion_max.to_string(), "longest deleted stretch"),
        ("genome.min_length".into(), d.genome.min_length.to_string(), "genomes never shrink below this"),
        ("genome.max_length".into(), d.genome.max_length.to_string(), "genomes never grow beyond this"),
        ("world.width".into(), d.world.width.to_string(), "world width in tiles, border included"),
        ("world.height".into(), d.world.height.to_string(), "world height in tiles, border included"),
        ("world.wall_probability".into(), d.world.wall_probability.to_string(), "chance an interior tile is a wall (1/7)"),
        ("world.start_distance".into(), d.world.start_distance.to_string(), "path distance of every start tile"),
        ("world.steps".into(), d.world.steps.to_string(), "world updates per mapping trial"),
        ("world.goal_bonus".into(), d.world.goal_bonus.to_string(), "fitness bonus per goal reached"),
        ("analysis.repeats".into(), d.analysis.repeats.to_string(), "re-evaluations per agent in ablation and information reports"),
    ];
    let mut out = String::from("Config keys (TOML, one [section] per module) and defaults:\n");
    for (key, default, what) in rows {
        out.push_str(&format!("  {key:<24} = {default:<20} {what}\n"));
    }
    out
}
