//! The analytical model: stack distances as piecewise quasi-polynomials,
//! floor-eliminating rewrites, and exact compulsory and capacity miss
//! counts per statement and cache level.

mod config;
mod distance;
mod misses;
mod order;
mod report;
mod rewrite;

use std::time::Instant;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

pub use config::{CacheConfig, ConfigError};
pub use distance::{compute_stack_distances, AccessDistances, DistanceSet};
pub use misses::{
    bind_non_affine_dimensions, count_affine_piece, count_capacity_misses, count_capacity_misses_by_enumeration,
    count_compulsory_misses, get_non_affine_domain, non_affine_dims,
};
pub use order::{build_order_maps, schedule_range};
pub use report::{LevelCounts, MissCounts, StatementCounts};
pub use rewrite::{equalize, rasterize, simplify_pieces};

use crate::frontend::Program;
use crate::polyhedra::PolyError;
use misses::Plan;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Poly { context: String, source: PolyError },
    #[error("{0}")]
    Invariant(String),
}

fn ctx(context: impl Into<String>) -> impl FnOnce(PolyError) -> ModelError {
    let context = context.into();
    move |source| ModelError::Poly { context, source }
}

/// Switches for the rewrites and for partial enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AnalysisOptions {
    pub equalization: bool,
    pub rasterization: bool,
    pub partial_enumeration: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { equalization: true, rasterization: true, partial_enumeration: true }
    }
}

/// Wall-clock seconds spent in each phase.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub distances: f64,
    pub rewrites: f64,
    pub compulsory: f64,
    /// Building enumeration domains and bound pieces, shared by all levels.
    pub enumeration: f64,
    /// Threshold counting, one entry per level.
    pub levels: Vec<f64>,
    pub total: f64,
}

/// Result of [`analyze`].
#[derive(Clone, Debug, Serialize)]
pub struct MissReport {
    pub counts: MissCounts,
    /// Distance pieces after the rewrites.
    pub pieces: usize,
    pub affine_pieces: usize,
    pub non_affine_pieces: usize,
    /// Bound pieces or points produced by enumeration.
    pub enumerated_points: usize,
    pub options: AnalysisOptions,
    pub timings: Timings,
}

/// Report plus the distance pieces it was computed from.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub distances: DistanceSet,
    pub report: MissReport,
}

fn to_u64(v: &BigInt, what: &str) -> Result<u64, ModelError> {
    v.to_u64().ok_or_else(|| ModelError::Invariant(format!("{what} count {v} is out of range")))
}

/// Distances once, then compulsory misses once and capacity misses for
/// every level, reusing distances and enumeration domains.
pub fn analyze(p: &Program, cfg: &CacheConfig, opts: AnalysisOptions) -> Result<MissReport, ModelError> {
    Ok(analyze_full(p, cfg, opts)?.report)
}

pub fn analyze_full(p: &Program, cfg: &CacheConfig, opts: AnalysisOptions) -> Result<Analysis, ModelError> {
    cfg.validate()?;
    if cfg.line_size != p.line_size as u64 {
        return Err(ModelError::Invariant(format!(
            "program lowered for {}-byte lines, cache uses {}",
            p.line_size, cfg.line_size
        )));
    }
    let start = Instant::now();
    let mut timings = Timings::default();

    let t = Instant::now();
    let mut distances = compute_stack_distances(p).map_err(ctx("stack distances"))?;
    timings.distances = t.elapsed().as_secs_f64();

    let t = Instant::now();
    for a in &mut distances.accesses {
        let pieces = std::mem::take(&mut a.pieces);
        a.pieces = simplify_pieces(pieces, opts.equalization, opts.rasterization);
    }
    timings.rewrites = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let compulsory = count_compulsory_misses(p).map_err(ctx("compulsory misses"))?;
    timings.compulsory = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let mut plans: Vec<(usize, Plan)> = Vec::new();
    for a in &distances.accesses {
        let s = p.statements.iter().position(|st| st.name == a.statement).expect("known statement");
        for piece in &a.pieces {
            let plan = Plan::new(piece, opts.partial_enumeration)
                .map_err(ctx(format!("enumeration domain of {}#{}", a.statement, a.access)))?;
            plans.push((s, plan));
        }
    }
    timings.enumeration = t.elapsed().as_secs_f64();

    let mut counts = MissCounts::new(cfg.line_size, &cfg.levels);
    for (s, st) in p.statements.iter().enumerate() {
        let instances = st.domain.cardinality().map_err(ctx(format!("domain of {}", st.name)))?;
        let accesses = instances * BigInt::from(st.accesses.len());
        let mut row = StatementCounts::new(&st.name, to_u64(&accesses, "access")?, &cfg.levels);
        let first = to_u64(&compulsory[s], "compulsory")?;
        for l in &mut row.levels {
            l.compulsory = first;
        }
        counts.statements.push(row);
    }
    for level in 0..cfg.levels.len() {
        let t = Instant::now();
        let c = cfg.capacity_lines(level);
        let mut per_stmt = vec![BigInt::from(0); p.statements.len()];
        for (s, plan) in &plans {
            per_stmt[*s] += plan.count(c).map_err(ctx(format!("capacity misses at {c} lines")))?;
        }
        for (s, v) in per_stmt.iter().enumerate() {
            counts.statements[s].levels[level].capacity = to_u64(v, "capacity")?;
        }
        timings.levels.push(t.elapsed().as_secs_f64());
    }
    for s in &counts.statements {
        for l in &s.levels {
            if l.compulsory + l.capacity > s.accesses {
                return Err(ModelError::Invariant(format!("{} has more misses than accesses", s.statement)));
            }
        }
    }
    counts.finish();
    timings.total = start.elapsed().as_secs_f64();

    let affine_pieces = plans.iter().filter(|(_, p)| matches!(p, Plan::Affine(_))).count();
    let report = MissReport {
        counts,
        pieces: plans.len(),
        affine_pieces,
        non_affine_pieces: plans.len() - affine_pieces,
        enumerated_points: plans.iter().map(|(_, p)| p.enumerated_points()).sum(),
        options: opts,
        timings,
    };
    Ok(Analysis { distances, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load;
    use std::collections::HashMap;

    const RUNNING: &str = "
        array M[4] elem 4;
        for i = 0 .. 3 { S0: M[i] = i; }
        for j = 0 .. 3 { S1: s = M[3 - j]; }
    ";

    #[test]
    fn running_example() {
        let p = load(RUNNING, &HashMap::new(), 4).unwrap();
        let cfg = CacheConfig::lines(4, 2).unwrap();
        let a = analyze_full(&p, &cfg, AnalysisOptions::default()).unwrap();
        let s0 = a.report.counts.statement("S0").unwrap();
        let s1 = a.report.counts.statement("S1").unwrap();
        assert_eq!((s0.levels[0].compulsory, s0.levels[0].capacity), (4, 0));
        assert_eq!((s1.levels[0].compulsory, s1.levels[0].capacity), (0, 2));
        assert_eq!(a.distances.get("S0", 0).unwrap().pieces.len(), 0);
        let d = &a.distances.get("S1", 0).unwrap().pieces;
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].fmt_with_space(), "{ S1[j] -> j + 1 : j <= 3 and j >= 0 }");
    }

    #[test]
    fn running_example_two_elements_per_line() {
        let p = load(RUNNING, &HashMap::new(), 8).unwrap();
        let counts = count_compulsory_misses(&p).unwrap();
        assert_eq!(counts, vec![BigInt::from(2), BigInt::from(0)]);
    }

    #[test]
    fn rejects_line_size_mismatch() {
        let p = load(RUNNING, &HashMap::new(), 4).unwrap();
        let cfg = CacheConfig::lines(8, 2).unwrap();
        assert!(matches!(analyze(&p, &cfg, AnalysisOptions::default()), Err(ModelError::Invariant(_))));
    }
}
