//! On-disk layout of a run.
//!
//! ```text
//! <dir>/config.toml          effective configuration
//! <dir>/stats.csv            one row per generation
//! <dir>/ancestry.csv         id, parent and fitness of every individual
//! <dir>/genomes/gen_NNNNNN.txt   periodic population snapshots
//! <dir>/lod.jsonl            line of descent, founder first
//! ```
//!
//! Every file starts with a `# seed=<seed>` comment line.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::environment::{Direction, StepRecord};
use crate::evolution::{AncestryRow, GenerationStats, Individual, LineOfDescent, LodRecord, RunObserver};

pub const CONFIG_FILE: &str = "config.toml";
pub const STATS_FILE: &str = "stats.csv";
pub const ANCESTRY_FILE: &str = "ancestry.csv";
pub const LOD_FILE: &str = "lod.jsonl";
pub const GENOMES_DIR: &str = "genomes";

#[derive(Debug, Error)]
pub enum RunDirError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path} line {line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunDirError + '_ {
    move |source| RunDirError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn seed_line(seed: u64) -> String {
    format!("# seed={seed}\n")
}

pub fn config_text(config: &RunConfig) -> String {
    seed_line(config.run.seed) + &config.to_text()
}

pub fn stats_header() -> String {
    GenerationStats::HEADER.join(",") + "\n"
}

pub fn stats_row(s: &GenerationStats) -> String {
    let mut line = s.generation.to_string();
    for v in s.values() {
        line.push(',');
        line.push_str(&v.to_string());
    }
    line.push('\n');
    line
}

pub fn ancestry_row(r: &AncestryRow) -> String {
    format!("{},{},{},{}\n", r.id, r.parent_id, r.generation, r.log_w)
}

/// Streams a run to disk as it progresses.
pub struct RunWriter {
    dir: PathBuf,
    seed: u64,
    snapshot_interval: u64,
    last_generation: u64,
    stats: BufWriter<File>,
    ancestry: BufWriter<File>,
}

impl RunWriter {
    /// Creates the directory (which may already exist) and writes the
    /// config snapshot and file headers.
    pub fn create(dir: &Path, config: &RunConfig) -> Result<RunWriter, RunDirError> {
        fs::create_dir_all(dir.join(GENOMES_DIR)).map_err(io_err(dir))?;
        let seed = config.run.seed;
        let path = dir.join(CONFIG_FILE);
        fs::write(&path, config_text(config)).map_err(io_err(&path))?;

        let open = |name: &str, header: &str| -> Result<BufWriter<File>, RunDirError> {
            let path = dir.join(name);
            let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
            w.write_all(seed_line(seed).as_bytes())
                .and_then(|_| w.write_all(header.as_bytes()))
                .map_err(io_err(&path))?;
            Ok(w)
        };
        let stats = open(STATS_FILE, &stats_header())?;
        let ancestry = open(ANCESTRY_FILE, "id,parent_id,generation,log_w\n")?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            seed,
            snapshot_interval: config.run.snapshot_interval,
            last_generation: config.run.generations.max(1) - 1,
            stats,
            ancestry,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn snapshot(&self, generation: u64, pop: &[Individual]) -> io::Result<()> {
        let path = self.dir.join(GENOMES_DIR).join(format!("gen_{generation:06}.txt"));
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# seed={} generation={generation}", self.seed)?;
        for ind in pop {
            let parent = ind.parent_id.map_or(-1, |p| p as i64);
            writeln!(w, "#id={} parent={parent} generation={}", ind.id, ind.generation)?;
            writeln!(w, "{}", ind.genome.to_hex())?;
        }
        w.flush()
    }

    /// Flushes the streams and writes the line of descent.
    pub fn finish(mut self, lod: &LineOfDescent) -> Result<(), RunDirError> {
        self.stats.flush().map_err(io_err(&self.dir.join(STATS_FILE)))?;
        self.ancestry
            .flush()
            .map_err(io_err(&self.dir.join(ANCESTRY_FILE)))?;
        let path = self.dir.join(LOD_FILE);
        fs::write(&path, lod_text(self.seed, lod)).map_err(io_err(&path))
    }
}

impl RunObserver for RunWriter {
    fn on_generation(&mut self, stats: &GenerationStats, population: &[Individual]) -> io::Result<()> {
        self.stats.write_all(stats_row(stats).as_bytes())?;
        for ind in population {
            self.ancestry
                .write_all(ancestry_row(&AncestryRow::of(ind)).as_bytes())?;
        }
        let g = stats.generation;
        let periodic = self.snapshot_interval > 0 && g.is_multiple_of(self.snapshot_interval);
        if periodic || g == self.last_generation {
            self.snapshot(g, population)?;
        }
        Ok(())
    }
}

pub fn lod_text(seed: u64, lod: &LineOfDescent) -> String {
    let mut s = seed_line(seed);
    match lod.mrca {
        Some(id) => s.push_str(&format!("# mrca={id}\n")),
        None => s.push_str("# mrca=none\n"),
    }
    for r in &lod.records {
        s.push_str(&serde_json::to_string(r).expect("records serialise"));
        s.push('\n');
    }
    s
}

fn read_lines(path: &Path) -> Result<Vec<String>, RunDirError> {
    let f = File::open(path).map_err(io_err(path))?;
    BufReader::new(f)
        .lines()
        .collect::<io::Result<Vec<_>>>()
        .map_err(io_err(path))
}

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> RunDirError {
    RunDirError::Format {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn read_config(dir: &Path) -> Result<RunConfig, RunDirError> {
    let path = dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    Ok(RunConfig::parse(&text)?)
}

pub fn read_lod(dir: &Path) -> Result<Vec<LodRecord>, RunDirError> {
    let path = dir.join(LOD_FILE);
    let mut out = Vec::new();
    for (n, line) in read_lines(&path)?.iter().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(line).map_err(|e| format_err(&path, n + 1, e.to_string()))?;
        out.push(r);
    }
    Ok(out)
}

pub fn read_stats(dir: &Path) -> Result<Vec<GenerationStats>, RunDirError> {
    let path = dir.join(STATS_FILE);
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (n, line) in read_lines(&path)?.iter().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line.trim() != stats_header().trim() {
                return Err(format_err(&path, n + 1, "unexpected header"));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != GenerationStats::HEADER.len() {
            return Err(format_err(&path, n + 1, "wrong column count"));
        }
        let generation = fields[0]
            .parse()
            .map_err(|_| format_err(&path, n + 1, "bad generation"))?;
        let mut v = [0.0; 10];
        for (x, f) in v.iter_mut().zip(&fields[1..]) {
            *x = f
                .parse()
                .map_err(|_| format_err(&path, n + 1, format!("bad number {f:?}")))?;
        }
        rows.push(GenerationStats {
            generation,
            max_w_log: v[0],
            mean_w_log: v[1],
            mean_goal_count: v[2],
            frac_zero_goal: v[3],
            mean_det_gates: v[4],
            mean_prob_gates: v[5],
            mean_fb_gates: v[6],
            frac_forward: v[7],
            frac_turn: v[8],
            frac_nothing: v[9],
        });
    }
    Ok(rows)
}

pub fn read_ancestry(dir: &Path) -> Result<Vec<AncestryRow>, RunDirError> {
    let path = dir.join(ANCESTRY_FILE);
    let mut rows = Vec::new();
    for (n, line) in read_lines(&path)?.iter().enumerate().skip(2) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || format_err(&path, n + 1, "malformed ancestry row");
        if f.len() != 4 {
            return Err(bad());
        }
        rows.push(AncestryRow {
            id: f[0].parse().map_err(|_| bad())?,
            parent_id: f[1].parse().map_err(|_| bad())?,
            generation: f[2].parse().map_err(|_| bad())?,
            log_w: f[3].parse().map_err(|_| bad())?,
        });
    }
    Ok(rows)
}

fn heading_letter(d: Direction) -> char {
    match d {
        Direction::North => 'N',
        Direction::East => 'E',
        Direction::South => 'S',
        Direction::West => 'W',
    }
}

fn bits(b: &[bool]) -> String {
    b.iter().map(|&x| if x { '1' } else { '0' }).collect()
}

pub const TRACE_HEADER: &str = "generation,mapping,step,sensors,outputs,x,y,heading,action,distance\n";

/// One CSV line per world update.
pub fn trace_csv(seed: u64, generation: u64, mapping: usize, steps: &[StepRecord]) -> String {
    let mut s = seed_line(seed) + TRACE_HEADER;
    for r in steps {
        s.push_str(&format!(
            "{generation},{mapping},{},{},{},{},{},{},{},{}\n",
            r.step,
            bits(&r.sensors),
            bits(&r.outputs),
            r.pos.x,
            r.pos.y,
            heading_letter(r.heading),
            r.action.name(),
            r.distance
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::run_evolution;

    fn tiny(seed: u64) -> RunConfig {
        let mut c = RunConfig::default();
        c.run.seed = seed;
        c.run.population = 6;
        c.run.generations = 4;
        c.run.snapshot_interval = 2;
        c.world.width = 16;
        c.world.height = 16;
        c.world.start_distance = 6;
        c.world.steps = 32;
        c.genome.initial_length = 1000;
        c
    }

    #[test]
    fn written_run_reads_back() {
        let tmp = tempfile::tempdir().unwrap();
        let c = tiny(3);
        let mut w = RunWriter::create(tmp.path(), &c).unwrap();
        let art = run_evolution(&c, 1, &mut w).unwrap();
        let lod = art.lod(3).unwrap();
        w.finish(&lod).unwrap();

        assert_eq!(read_config(tmp.path()).unwrap(), c);
        let stats = read_stats(tmp.path()).unwrap();
        assert_eq!(stats, art.stats);
        assert_eq!(read_ancestry(tmp.path()).unwrap(), art.ancestry);
        assert_eq!(read_lod(tmp.path()).unwrap(), lod.records);

        let snaps: Vec<String> = fs::read_dir(tmp.path().join(GENOMES_DIR))
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        let mut snaps = snaps;
        snaps.sort();
        assert_eq!(snaps, vec!["gen_000000.txt", "gen_000002.txt", "gen_000003.txt"]);

        for name in [CONFIG_FILE, STATS_FILE, ANCESTRY_FILE, LOD_FILE] {
            let text = fs::read_to_string(tmp.path().join(name)).unwrap();
            assert!(text.starts_with("# seed=3\n"), "{name}");
        }
    }

    #[test]
    fn stats_rows_round_trip_exactly() {
        let s = GenerationStats {
            generation: 7,
            max_w_log: 65.123456789,
            mean_w_log: 1.0 / 3.0,
            mean_goal_count: 0.0,
            frac_zero_goal: 1.0,
            mean_det_gates: 2.5,
            mean_prob_gates: 0.1,
            mean_fb_gates: 0.0,
            frac_forward: 0.2,
            frac_turn: 0.3,
            frac_nothing: 0.5,
        };
        let tmp = tempfile::tempdir().unwrap();
        let text = seed_line(1) + &stats_header() + &stats_row(&s);
        fs::write(tmp.path().join(STATS_FILE), text).unwrap();
        assert_eq!(read_stats(tmp.path()).unwrap(), vec![s]);
    }

    #[test]
    fn missing_files_are_io_errors() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(read_lod(tmp.path()), Err(RunDirError::Io { .. })));
        assert!(matches!(read_config(tmp.path()), Err(RunDirError::Io { .. })));
    }
}
