//! Trace-driven fully associative LRU simulation: the exactness oracle for
//! the analytical model.

mod lru;
mod trace;

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

pub use lru::{stack_distances, LruState};
pub use trace::{generate_trace, MemoryTrace, TraceRecord};

use crate::frontend::Program;
use crate::model::{CacheConfig, MissCounts, StatementCounts};

/// Classification of one access at one level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Compulsory,
    Capacity,
    Hit,
}

impl Class {
    pub fn as_str(self) -> &'static str {
        match self {
            Class::Compulsory => "compulsory",
            Class::Capacity => "capacity",
            Class::Hit => "hit",
        }
    }
}

/// Result of simulating a trace.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub config: CacheConfig,
    /// Stack distance per record in lines; `None` on first touch.
    pub distances: Vec<Option<u64>>,
    pub counts: MissCounts,
}

impl Simulation {
    pub fn class(&self, record: usize, level: usize) -> Class {
        match self.distances[record] {
            None => Class::Compulsory,
            Some(d) if d > self.config.capacity_lines(level) => Class::Capacity,
            Some(_) => Class::Hit,
        }
    }
}

/// Interns line identities `(array, coordinates)` as dense integers.
fn line_ids(trace: &MemoryTrace) -> Vec<usize> {
    let mut ids: HashMap<(usize, &[i64]), usize> = HashMap::new();
    trace
        .records
        .iter()
        .map(|r| {
            let next = ids.len();
            *ids.entry((r.array, r.line.as_slice())).or_insert(next)
        })
        .collect()
}

/// Simulates `trace` on every level of `cfg` at once by thresholding stack
/// distances. With debug assertions, an explicit per-level LRU state is
/// replayed alongside and checked for agreement and inclusion.
pub fn simulate(trace: &MemoryTrace, cfg: &CacheConfig) -> Simulation {
    let ids = line_ids(trace);
    let distances = stack_distances(&ids);
    let lines = cfg.level_lines();
    if cfg!(debug_assertions) {
        let mut state = LruState::new(&lines);
        for (t, &l) in ids.iter().enumerate() {
            let hits = state.access(l);
            for (k, &c) in lines.iter().enumerate() {
                assert_eq!(hits[k], distances[t].is_some_and(|d| d <= c), "LRU state disagrees with stack distance");
            }
            assert!(state.inclusion_holds_at_boundary(), "inclusion violated");
        }
    }
    let mut counts = MissCounts::new(cfg.line_size, &cfg.levels);
    counts.statements = trace.statements.iter().map(|s| StatementCounts::new(s, 0, &cfg.levels)).collect();
    for (r, d) in trace.records.iter().zip(&distances) {
        let s = &mut counts.statements[r.stmt];
        s.accesses += 1;
        for (k, &c) in lines.iter().enumerate() {
            match d {
                None => s.levels[k].compulsory += 1,
                Some(d) if *d > c => s.levels[k].capacity += 1,
                Some(_) => {}
            }
        }
    }
    counts.finish();
    Simulation { config: cfg.clone(), distances, counts }
}

/// Generates the trace of `p` and simulates it.
pub fn run(p: &Program, cfg: &CacheConfig) -> Result<(MemoryTrace, Simulation), crate::polyhedra::PolyError> {
    let trace = generate_trace(p)?;
    let sim = simulate(&trace, cfg);
    Ok((trace, sim))
}

/// Stack distance of every non-first access keyed by
/// `(statement, access index, instance)`.
pub fn distances_by_access(trace: &MemoryTrace, sim: &Simulation) -> HashMap<(String, usize, Vec<i64>), Option<u64>> {
    trace
        .records
        .iter()
        .zip(&sim.distances)
        .map(|(r, d)| ((trace.statements[r.stmt].clone(), r.access, r.instance.clone()), *d))
        .collect()
}

/// Writes the trace as CSV: `seq,stmt,instance,access,array,line,distance`
/// followed by one `class@L<k>` column per level.
pub fn dump_trace(trace: &MemoryTrace, sim: &Simulation, out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        ["seq", "stmt", "instance", "access", "array", "line", "distance"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=sim.config.levels.len()).map(|k| format!("class@L{k}")));
    w.write_record(&header)?;
    let tuple = |v: &[i64]| format!("({})", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
    for (seq, r) in trace.records.iter().enumerate() {
        let mut row = vec![
            seq.to_string(),
            trace.statements[r.stmt].clone(),
            tuple(&r.instance),
            r.access.to_string(),
            trace.arrays[r.array].clone(),
            tuple(&r.line),
            sim.distances[seq].map_or_else(|| "inf".to_string(), |d| d.to_string()),
        ];
        row.extend((0..sim.config.levels.len()).map(|k| sim.class(seq, k).as_str().to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One disagreement between two sets of counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiffEntry {
    pub statement: String,
    /// Capacity of the level in bytes; `None` for level-independent fields.
    pub level: Option<u64>,
    pub field: &'static str,
    pub model: u64,
    pub simulator: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Diff {
    pub entries: Vec<DiffEntry>,
}

impl Diff {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error("configurations differ: model uses {model:?}, simulator uses {simulator:?}")]
    Config { model: Vec<u64>, simulator: Vec<u64> },
    #[error("line sizes differ: {0} vs {1}")]
    LineSize(u64, u64),
}

/// Per-statement, per-level differences between model and simulator
/// counts. An empty diff means exact agreement.
pub fn compare(model: &MissCounts, sim: &MissCounts) -> Result<Diff, CompareError> {
    if model.capacities != sim.capacities {
        return Err(CompareError::Config { model: model.capacities.clone(), simulator: sim.capacities.clone() });
    }
    if model.line_size != sim.line_size {
        return Err(CompareError::LineSize(model.line_size, sim.line_size));
    }
    let mut entries = Vec::new();
    let empty = |name: &str| StatementCounts::new(name, 0, &model.capacities);
    let mut names: Vec<&str> = model.statements.iter().map(|s| s.statement.as_str()).collect();
    for s in &sim.statements {
        if !names.contains(&s.statement.as_str()) {
            names.push(&s.statement);
        }
    }
    let rows = names
        .iter()
        .map(|n| (model.statement(n).cloned().unwrap_or_else(|| empty(n)), sim.statement(n).cloned().unwrap_or_else(|| empty(n))))
        .chain(std::iter::once((model.total.clone(), sim.total.clone())));
    for (m, s) in rows {
        let mut push = |level, field, a: u64, b: u64| {
            if a != b {
                entries.push(DiffEntry { statement: m.statement.clone(), level, field, model: a, simulator: b });
            }
        };
        push(None, "accesses", m.accesses, s.accesses);
        for (lm, ls) in m.levels.iter().zip(&s.levels) {
            let lv = Some(lm.capacity_bytes);
            push(lv, "compulsory", lm.compulsory, ls.compulsory);
            push(lv, "capacity", lm.capacity, ls.capacity);
            push(lv, "hits", lm.hits, ls.hits);
        }
    }
    Ok(Diff { entries })
}
