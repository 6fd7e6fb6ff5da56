use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use markov_feedback::analysis::{
    self, ablate_and_compare, action_usage, bin_by_performance, gate_count_correlation, mi_report,
    performance_summary, sign_test, PerfPoint,
};
use markov_feedback::config::{self, GateSet, RunConfig};
use markov_feedback::environment::{Mapping, N_MAPPINGS};
use markov_feedback::evolution::{run_evolution, LodRecord};
use markov_feedback::genome::Genome;
use markov_feedback::rundir::{self, RunWriter};

#[derive(Parser)]
#[command(
    name = "mfb",
    version,
    about = "Evolve Markov Brains with feedback gates in randomized mazes",
    after_long_help = config::reference()
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an evolution experiment into a run directory.
    #[command(after_long_help = config::reference())]
    Evolve(EvolveArgs),
    /// Write a step-by-step trace of one line-of-descent agent on one mapping.
    Replay(ReplayArgs),
    /// Write figure-ready CSV reports over one or more run directories.
    Analyze(AnalyzeArgs),
    /// Compare final agents with their feedback gates active and frozen.
    Ablate(AblateArgs),
    /// Print the line of descent of a run as CSV.
    Lod(LodArgs),
}

#[derive(Args)]
struct EvolveArgs {
    /// TOML config file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output run directory.
    #[arg(long)]
    out: PathBuf,
    /// Evaluation threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    generations: Option<u64>,
    #[arg(long)]
    population: Option<usize>,
    /// Gate kinds genes may code for: d, dp or dpf.
    #[arg(long)]
    gates: Option<GateSet>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Run directory written by `evolve`.
    #[arg(long)]
    run: PathBuf,
    /// Generation of the line-of-descent agent; defaults to the final one.
    #[arg(long)]
    generation: Option<u64>,
    /// Mapping index, 0 to 23.
    #[arg(long)]
    mapping: usize,
    /// Seed for the replay streams; defaults to the run's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Trace file; defaults to `<run>/trace_g<generation>_m<mapping>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Run directories, one per replicate.
    #[arg(long = "run", required = true, num_args = 1..)]
    runs: Vec<PathBuf>,
    /// Directory for the report files.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long = "run", required = true, num_args = 1..)]
    runs: Vec<PathBuf>,
    /// CSV output; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LodArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Evolve(a) => evolve(a),
        Command::Replay(a) => replay(a),
        Command::Analyze(a) => analyze(a),
        Command::Ablate(a) => ablate(a),
        Command::Lod(a) => lod(a),
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn evolve(a: EvolveArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = a.seed {
        config.run.seed = s;
    }
    if let Some(g) = a.generations {
        config.run.generations = g;
    }
    if let Some(p) = a.population {
        config.run.population = p;
    }
    if let Some(g) = a.gates {
        config.run.gates = g;
    }
    config.validate()?;

    if a.out.exists() {
        eprintln!(
            "warning: {} already exists; its run files will be overwritten",
            a.out.display()
        );
    }
    let workers = a.workers.unwrap_or_else(default_workers);
    let mut writer = RunWriter::create(&a.out, &config)?;
    let artifacts = run_evolution(&config, workers, &mut writer)
        .with_context(|| format!("writing {}", a.out.display()))?;
    let lod = artifacts.lod(config.run.seed)?;
    writer.finish(&lod)?;

    let last = artifacts.stats.last().expect("at least one generation");
    println!(
        "generation {}: max log W {:.3}, mean goals per mapping {:.3}, mean feedback gates {:.2}",
        last.generation, last.max_w_log, last.mean_goal_count, last.mean_fb_gates
    );
    Ok(())
}

fn load_run(dir: &Path) -> Result<(RunConfig, Vec<LodRecord>)> {
    let config = rundir::read_config(dir)?;
    let lod = rundir::read_lod(dir)?;
    if lod.is_empty() {
        bail!("{} has an empty line of descent", dir.display());
    }
    Ok((config, lod))
}

fn genome_of(r: &LodRecord) -> Result<Genome> {
    Genome::from_hex(&r.genome).with_context(|| format!("genome of agent {}", r.id))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn replay(a: ReplayArgs) -> Result<()> {
    let Some(mapping) = Mapping::new(a.mapping) else {
        bail!("invalid mapping index {} (must be 0 to {})", a.mapping, N_MAPPINGS - 1);
    };
    let (config, lod) = load_run(&a.run)?;
    let record = match a.generation {
        None => lod.last().unwrap(),
        Some(g) => lod
            .iter()
            .find(|r| r.generation == g)
            .with_context(|| format!("no line-of-descent agent at generation {g}"))?,
    };
    let seed = a.seed.unwrap_or(config.run.seed);
    let (_, steps) = analysis::replay(&genome_of(record)?, &config, seed, record.id, mapping);
    let text = rundir::trace_csv(seed, record.generation, mapping.index(), &steps);
    let out = a.out.unwrap_or_else(|| {
        a.run
            .join(format!("trace_g{}_m{}.csv", record.generation, mapping.index()))
    });
    fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
    eprintln!("wrote {} steps to {}", steps.len(), out.display());
    Ok(())
}

fn replicate_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn seeds_line(configs: &[RunConfig]) -> String {
    let seeds: Vec<String> = configs.iter().map(|c| c.run.seed.to_string()).collect();
    format!("# seed={}\n", seeds.join(";"))
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let runs: Vec<(String, RunConfig, Vec<LodRecord>)> = a
        .runs
        .iter()
        .map(|d| load_run(d).map(|(c, l)| (replicate_name(d), c, l)))
        .collect::<Result<_>>()?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let configs: Vec<RunConfig> = runs.iter().map(|r| r.1.clone()).collect();
    let head = seeds_line(&configs);
    let write = |name: &str, body: String| -> Result<()> {
        let p = a.out.join(name);
        fs::write(&p, head.clone() + &body).with_context(|| format!("writing {}", p.display()))
    };

    let series: Vec<Vec<PerfPoint>> = runs
        .iter()
        .map(|(_, _, lod)| lod.iter().map(PerfPoint::from_lod).collect())
        .collect();
    write("fig2_performance.csv", analysis::performance_csv(&performance_summary(&series)))?;

    let pool = rayon_pool(a.workers.unwrap_or_else(default_workers))?;
    let reports = pool.install(|| {
        use rayon::prelude::*;
        runs.par_iter()
            .map(|(_, c, lod)| {
                let last = lod.last().unwrap();
                genome_of(last).map(|g| mi_report(&g, c, c.run.seed, last.id, false))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut tables = String::from(analysis::TABLES_HEADER);
    let mut mi = String::from(analysis::MI_HEADER);
    let mut points = Vec::new();
    for ((name, _, _), report) in runs.iter().zip(&reports) {
        tables.push_str(&analysis::tables_csv(name, report));
        mi.push_str(&analysis::mi_row(name, report));
        if let Some(d) = report.delta() {
            points.push((report.goal_count, d));
        }
    }
    write("fig3_tables.csv", tables)?;
    write("fig4_mi.csv", mi)?;
    write("fig4_mi_bins.csv", analysis::mi_bins_csv(&bin_by_performance(&points)))?;

    let gates: Vec<(String, _)> = runs
        .iter()
        .map(|(n, _, lod)| (n.clone(), lod.last().unwrap().gates))
        .collect();
    let counts: Vec<_> = gates.iter().map(|g| g.1).collect();
    let r = match gate_count_correlation(&counts) {
        Ok(r) => Some(r),
        Err(e) => {
            eprintln!("warning: gate correlation not reported: {e}");
            None
        }
    };
    write("fig5_gates.csv", analysis::gates_csv(&gates, r))?;

    let lods: Vec<Vec<LodRecord>> = runs.into_iter().map(|r| r.2).collect();
    write("fig6_actions.csv", analysis::actions_csv(&action_usage(&lods)))?;
    eprintln!("wrote reports for {} runs to {}", lods.len(), a.out.display());
    Ok(())
}

fn rayon_pool(workers: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?)
}

fn ablate(a: AblateArgs) -> Result<()> {
    let mut configs = Vec::new();
    let mut body = String::from("replicate,feedback_gates,active_goal_count,frozen_goal_count,difference\n");
    let mut pairs = Vec::new();
    for dir in &a.runs {
        let (config, lod) = load_run(dir)?;
        let last = lod.last().unwrap();
        let report = ablate_and_compare(&genome_of(last)?, &config, config.run.seed, last.id);
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            replicate_name(dir),
            last.gates.feedback,
            report.active,
            report.frozen,
            report.difference()
        ));
        if last.gates.feedback > 0 {
            pairs.push((report.active, report.frozen));
        }
        configs.push(config);
    }
    let t = sign_test(&pairs);
    let text = format!(
        "{}# sign_test positive={} negative={} p={}\n{body}",
        seeds_line(&configs),
        t.positive,
        t.negative,
        t.p_value
    );
    write_or_print(a.out.as_deref(), &text)
}

fn lod(a: LodArgs) -> Result<()> {
    let (config, lod) = load_run(&a.run)?;
    let mut text = format!(
        "# seed={}\ngeneration,id,parent_id,log_w,goal_count,det_gates,prob_gates,fb_gates,genome_length,mutations\n",
        config.run.seed
    );
    for r in &lod {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.generation,
            r.id,
            r.parent_id,
            r.log_w,
            r.goal_count,
            r.gates.deterministic,
            r.gates.probabilistic,
            r.gates.feedback,
            r.genome.len() / 2,
            r.mutations.len()
        ));
    }
    write_or_print(a.out.as_deref(), &text)
}
