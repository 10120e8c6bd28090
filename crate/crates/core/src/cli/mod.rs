//! Command-line entry point: parse a `.scop.dsl` file, run the model, the
//! simulator or both, and print miss reports or scaling benchmarks.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::frontend::{load, ErrorKind, FrontendError, Program};
use crate::model::{analyze, AnalysisOptions, CacheConfig, MissCounts, MissReport, ModelError};
use crate::simulator::{compare, dump_trace, run as simulate, Diff, MemoryTrace, Simulation};

/// Exit status when `verify` finds a disagreement.
pub const EXIT_DIFF: i32 = 1;
/// Exit status for unreadable input, parse errors and bad configurations.
pub const EXIT_INPUT: i32 = 2;
/// Exit status for internal invariant violations.
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Analytical model only.
    Model,
    /// Trace-driven simulation only.
    Simulate,
    /// Both, failing on any difference.
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

/// Exact LRU cache miss counts for affine loop nests.
#[derive(Parser, Debug, Clone)]
#[command(name = "stackdist", version)]
pub struct RunConfig {
    /// Loop nest in the `.scop.dsl` language.
    pub input: PathBuf,
    /// Cache line size in bytes.
    #[arg(long, default_value_t = 64)]
    pub line_size: u64,
    /// Level capacity in bytes, K and M suffixes allowed; repeat for more levels.
    #[arg(long = "cache", value_parser = parse_size, default_values = ["32K", "1M"])]
    pub caches: Vec<u64>,
    #[arg(long, value_enum, default_value_t = Mode::Model)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long)]
    pub no_equalization: bool,
    #[arg(long)]
    pub no_rasterization: bool,
    #[arg(long)]
    pub no_partial_enumeration: bool,
    /// Write the simulated trace with distances and classes as CSV.
    #[arg(long, value_name = "PATH")]
    pub dump_trace: Option<PathBuf>,
    /// Override a `const` declaration; repeatable.
    #[arg(long = "define", short = 'D', value_name = "NAME=VALUE", value_parser = parse_define)]
    pub defines: Vec<(String, i64)>,
    /// Time model and simulator with the scaled constant set to each value.
    #[arg(long, value_delimiter = ',', value_name = "N,N,...")]
    pub bench_scales: Vec<i64>,
    /// Constant varied by `--bench-scales`.
    #[arg(long, default_value = "N")]
    pub bench_param: String,
}

/// Parses a byte count such as `64`, `32K`, `32KiB` or `1M`.
pub fn parse_size(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let t = t.strip_suffix("iB").or_else(|| t.strip_suffix('B')).unwrap_or(t);
    let (digits, scale) = match t.char_indices().last() {
        Some((i, 'K' | 'k')) => (&t[..i], 1u64 << 10),
        Some((i, 'M' | 'm')) => (&t[..i], 1 << 20),
        Some((i, 'G' | 'g')) => (&t[..i], 1 << 30),
        _ => (t, 1),
    };
    let v: u64 = digits.parse().map_err(|_| format!("invalid size `{s}`"))?;
    v.checked_mul(scale).ok_or_else(|| format!("size `{s}` is too large"))
}

fn parse_define(s: &str) -> Result<(String, i64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let v = value.trim().parse().map_err(|_| format!("invalid value in `{s}`"))?;
    Ok((name.trim().to_string(), v))
}

/// Formats a byte count with the largest exact binary suffix.
pub fn format_size(b: u64) -> String {
    if b >= 1 << 20 && b.is_multiple_of(1 << 20) {
        format!("{}MiB", b >> 20)
    } else if b >= 1 << 10 && b.is_multiple_of(1 << 10) {
        format!("{}KiB", b >> 10)
    } else {
        format!("{b}B")
    }
}

/// A failure with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub msg: String,
}

impl Failure {
    fn input(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, msg: msg.into() }
    }
    fn internal(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_INTERNAL, msg: msg.into() }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Config(c) => Failure::input(c.to_string()),
            e => Failure::internal(e.to_string()),
        }
    }
}

impl RunConfig {
    pub fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            equalization: !self.no_equalization,
            rasterization: !self.no_rasterization,
            partial_enumeration: !self.no_partial_enumeration,
        }
    }

    pub fn cache(&self) -> Result<CacheConfig, Failure> {
        CacheConfig::new(self.line_size, self.caches.clone()).map_err(|e| Failure::input(e.to_string()))
    }

    fn overrides(&self) -> HashMap<String, i64> {
        self.defines.iter().cloned().collect()
    }
}

fn frontend_failure(path: &str, e: FrontendError) -> Failure {
    let msg = format!("{path}:{e}");
    if e.kind == ErrorKind::Internal {
        Failure::internal(msg)
    } else {
        Failure::input(msg)
    }
}

fn load_program(cfg: &RunConfig, src: &str, overrides: &HashMap<String, i64>) -> Result<Program, Failure> {
    let line_size = i64::try_from(cfg.line_size).map_err(|_| Failure::input("line size is too large"))?;
    load(src, overrides, line_size).map_err(|e| frontend_failure(&cfg.input.display().to_string(), e))
}

fn read_input(cfg: &RunConfig) -> Result<String, Failure> {
    std::fs::read_to_string(&cfg.input).map_err(|e| Failure::input(format!("{}: {e}", cfg.input.display())))
}

/// Machine-readable result of one invocation.
#[derive(Serialize)]
pub struct JsonReport<'a> {
    pub input: String,
    pub mode: Mode,
    pub line_size: u64,
    pub levels: &'a [u64],
    /// Present in `model` and `verify` modes.
    pub model: Option<&'a MissReport>,
    /// Present in `simulate` and `verify` modes.
    pub simulator: Option<SimulatorSummary<'a>>,
    /// Present in `verify` mode; empty means exact agreement.
    pub diff: Option<&'a Diff>,
}

#[derive(Serialize)]
pub struct SimulatorSummary<'a> {
    pub counts: &'a MissCounts,
    pub trace_length: usize,
    pub seconds: f64,
}

struct Outcome {
    model: Option<MissReport>,
    sim: Option<(usize, f64, MissCounts)>,
    diff: Option<Diff>,
}

/// Runs one invocation, writing the report to `out`, and returns the exit
/// status.
pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, Failure> {
    let src = read_input(cfg)?;
    let cache = cfg.cache()?;
    if !cfg.bench_scales.is_empty() {
        return bench(cfg, &src, &cache, out);
    }
    let program = load_program(cfg, &src, &cfg.overrides())?;
    let model = match cfg.mode {
        Mode::Model | Mode::Verify => Some(analyze(&program, &cache, cfg.options())?),
        Mode::Simulate => None,
    };
    let need_sim = cfg.mode != Mode::Model || cfg.dump_trace.is_some();
    let sim = if need_sim {
        let t = Instant::now();
        let (trace, sim) = simulate(&program, &cache).map_err(|e| Failure::internal(e.to_string()))?;
        let secs = t.elapsed().as_secs_f64();
        if let Some(path) = &cfg.dump_trace {
            write_trace(path, &trace, &sim)?;
        }
        (cfg.mode != Mode::Model).then(|| (trace.len(), secs, sim.counts))
    } else {
        None
    };
    let diff = match (&model, &sim) {
        (Some(m), Some((_, _, s))) => Some(compare(&m.counts, s).map_err(|e| Failure::internal(e.to_string()))?),
        _ => None,
    };
    let outcome = Outcome { model, sim, diff };
    let written = match cfg.format {
        Format::Table => write_table(cfg, &outcome, out),
        Format::Json => write_json(cfg, &cache, &outcome, out),
        Format::Csv => write_csv(&outcome, out),
    };
    written.map_err(|e| Failure::internal(format!("writing report: {e}")))?;
    Ok(match &outcome.diff {
        Some(d) if !d.is_empty() => EXIT_DIFF,
        _ => 0,
    })
}

fn write_trace(path: &PathBuf, trace: &MemoryTrace, sim: &Simulation) -> Result<(), Failure> {
    let f = File::create(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    dump_trace(trace, sim, BufWriter::new(f)).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn counts_table(counts: &MissCounts, out: &mut dyn Write) -> io::Result<()> {
    writeln!(
        out,
        "{:<12} {:>10} {:>12} {:>12} {:>12} {:>12}",
        "statement", "level", "accesses", "compulsory", "capacity", "hits"
    )?;
    for s in counts.statements.iter().chain(std::iter::once(&counts.total)) {
        for l in &s.levels {
            writeln!(
                out,
                "{:<12} {:>10} {:>12} {:>12} {:>12} {:>12}",
                s.statement,
                format_size(l.capacity_bytes),
                s.accesses,
                l.compulsory,
                l.capacity,
                l.hits
            )?;
        }
    }
    for l in &counts.total.levels {
        writeln!(
            out,
            "{}: compulsory {}, capacity {}, hits {}",
            format_size(l.capacity_bytes),
            l.compulsory,
            l.capacity,
            l.hits
        )?;
    }
    Ok(())
}

fn write_table(cfg: &RunConfig, o: &Outcome, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "{} with {}-byte lines", cfg.input.display(), cfg.line_size)?;
    if let Some(m) = &o.model {
        writeln!(out, "\nmodel")?;
        counts_table(&m.counts, out)?;
        writeln!(
            out,
            "pieces {} ({} affine, {} non-affine), enumerated {}, {:.3}s",
            m.pieces, m.affine_pieces, m.non_affine_pieces, m.enumerated_points, m.timings.total
        )?;
    }
    if let Some((len, secs, counts)) = &o.sim {
        writeln!(out, "\nsimulator")?;
        counts_table(counts, out)?;
        writeln!(out, "trace of {len} accesses, {secs:.3}s")?;
    }
    if let Some(d) = &o.diff {
        if d.is_empty() {
            writeln!(out, "\nverify: model and simulator agree")?;
        } else {
            writeln!(out, "\nverify: {} differences", d.entries.len())?;
            for e in &d.entries {
                let level = e.level.map_or_else(|| "-".to_string(), format_size);
                writeln!(
                    out,
                    "  {} {} {}: model {}, simulator {}",
                    e.statement, level, e.field, e.model, e.simulator
                )?;
            }
        }
    }
    Ok(())
}

fn write_json(cfg: &RunConfig, cache: &CacheConfig, o: &Outcome, out: &mut dyn Write) -> io::Result<()> {
    let report = JsonReport {
        input: cfg.input.display().to_string(),
        mode: cfg.mode,
        line_size: cache.line_size,
        levels: &cache.levels,
        model: o.model.as_ref(),
        simulator: o.sim.as_ref().map(|(len, secs, counts)| SimulatorSummary {
            counts,
            trace_length: *len,
            seconds: *secs,
        }),
        diff: o.diff.as_ref(),
    };
    serde_json::to_writer_pretty(&mut *out, &report)?;
    writeln!(out)
}

fn write_csv(o: &Outcome, out: &mut dyn Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["source", "statement", "level_bytes", "accesses", "compulsory", "capacity", "hits"])?;
    let sources = o
        .model
        .as_ref()
        .map(|m| ("model", &m.counts))
        .into_iter()
        .chain(o.sim.as_ref().map(|(_, _, c)| ("simulator", c)));
    for (source, counts) in sources {
        for s in counts.statements.iter().chain(std::iter::once(&counts.total)) {
            for l in &s.levels {
                w.write_record([
                    source.to_string(),
                    s.statement.clone(),
                    l.capacity_bytes.to_string(),
                    s.accesses.to_string(),
                    l.compulsory.to_string(),
                    l.capacity.to_string(),
                    l.hits.to_string(),
                ])?;
            }
        }
    }
    w.flush()
}

/// One row of the scaling benchmark.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub scale: i64,
    pub accesses: u64,
    pub pieces: usize,
    pub model_seconds: f64,
    pub simulator_seconds: f64,
    pub agree: bool,
}

/// Times the model and the simulator with the scaled constant set to each
/// value and writes one CSV row per scale.
pub fn bench(cfg: &RunConfig, src: &str, cache: &CacheConfig, out: &mut dyn Write) -> Result<i32, Failure> {
    let mut rows = Vec::new();
    for &scale in &cfg.bench_scales {
        let mut overrides = cfg.overrides();
        overrides.insert(cfg.bench_param.clone(), scale);
        let program = load_program(cfg, src, &overrides)?;
        let t = Instant::now();
        let report = analyze(&program, cache, cfg.options())?;
        let model_seconds = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let (_, sim) = simulate(&program, cache).map_err(|e| Failure::internal(e.to_string()))?;
        let simulator_seconds = t.elapsed().as_secs_f64();
        let diff = compare(&report.counts, &sim.counts).map_err(|e| Failure::internal(e.to_string()))?;
        rows.push(BenchRow {
            scale,
            accesses: report.counts.total.accesses,
            pieces: report.pieces,
            model_seconds,
            simulator_seconds,
            agree: diff.is_empty(),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    for r in &rows {
        w.serialize(r).map_err(|e| Failure::internal(format!("writing report: {e}")))?;
    }
    w.flush().map_err(|e| Failure::internal(format!("writing report: {e}")))?;
    Ok(if rows.iter().all(|r| r.agree) { 0 } else { EXIT_DIFF })
}

/// Parses the command line, runs, and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { 0 };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(&cfg, &mut out) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(parse_size("64"), Ok(64));
        assert_eq!(parse_size("32K"), Ok(32 << 10));
        assert_eq!(parse_size("32KiB"), Ok(32 << 10));
        assert_eq!(parse_size("1M"), Ok(1 << 20));
        assert_eq!(parse_size("8B"), Ok(8));
        assert!(parse_size("K").is_err());
        assert!(parse_size("12Q").is_err());
        assert_eq!(format_size(32 << 10), "32KiB");
        assert_eq!(format_size(1 << 20), "1MiB");
        assert_eq!(format_size(128), "128B");
    }

    #[test]
    fn defaults() {
        let c = RunConfig::try_parse_from(["stackdist", "x.scop.dsl"]).unwrap();
        assert_eq!(c.line_size, 64);
        assert_eq!(c.caches, vec![32 << 10, 1 << 20]);
        assert_eq!(c.mode, Mode::Model);
        assert_eq!(c.options(), AnalysisOptions::default());
        let c = RunConfig::try_parse_from(["stackdist", "x", "--cache", "8", "--bench-scales", "16,32", "-D", "N=4"])
            .unwrap();
        assert_eq!(c.caches, vec![8]);
        assert_eq!(c.bench_scales, vec![16, 32]);
        assert_eq!(c.defines, vec![("N".to_string(), 4)]);
    }

    #[test]
    fn exit_statuses() {
        assert_eq!(Failure::from(ModelError::Invariant("x".into())).code, EXIT_INTERNAL);
        let config = crate::model::ConfigError::NoLevels;
        assert_eq!(Failure::from(ModelError::Config(config)).code, EXIT_INPUT);
        let pos = crate::frontend::Pos { line: 1, col: 1 };
        let internal = FrontendError::new(ErrorKind::Internal, pos, "x".into());
        assert_eq!(frontend_failure("f", internal).code, EXIT_INTERNAL);
        let syntax = FrontendError::new(ErrorKind::Syntax, pos, "x".into());
        assert_eq!(frontend_failure("f", syntax).code, EXIT_INPUT);
    }
}
