//! Acceptance suite: one PASS/FAIL line per criterion, run sequentially so
//! that timing comparisons are not disturbed by parallel tests.

mod common;

use std::time::{Duration, Instant};

use common::{
    brute_points, check_distances, check_rewrites_and_counting, configs, kernel, model_and_simulator,
    random_floor_piece, random_set, small_n, to_set, KERNELS,
};
use stackdist::model::{analyze, analyze_full, equalize, rasterize, AnalysisOptions, CacheConfig, MissReport};
use stackdist::polyhedra::{fallback_count, parse_set, AffineExpr, Piece, QuasiPolynomial};
use stackdist::simulator::run;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn running_example() -> Outcome {
    let start = Instant::now();
    let p = kernel("running", None, 4);
    let cfg = CacheConfig::lines(4, 2).map_err(|e| e.to_string())?;
    let a = analyze_full(&p, &cfg, AnalysisOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let level = &a.report.counts.total.levels[0];
    if level.compulsory != 4 || level.capacity != 2 {
        return Err(format!("compulsory {} capacity {}", level.compulsory, level.capacity));
    }
    let pieces = &a.distances.get("S1", 0).ok_or("no S1 access")?.pieces;
    let want_domain = parse_set("{ S1[j] : 0 <= j < 4 }").unwrap();
    let want_poly = QuasiPolynomial::var(1, 0).add(&QuasiPolynomial::from_int(1, 1));
    let exact = pieces.len() == 1
        && pieces[0].poly == want_poly
        && pieces[0].domain.is_equal(&want_domain).map_err(|e| e.to_string())?;
    if !exact {
        let got: Vec<String> = pieces.iter().map(Piece::fmt_with_space).collect();
        return Err(format!("distance pieces {got:?}"));
    }
    if elapsed >= Duration::from_secs(1) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("compulsory 4, capacity 2, {} in {elapsed:.2?}", pieces[0].fmt_with_space()))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut runs = 0;
    for name in KERNELS {
        let p = kernel(name, None, 64);
        let widest = p.arrays.iter().flat_map(|a| a.extents.iter()).max().copied().unwrap_or(0);
        if widest > 64 {
            return Err(format!("{name} has an extent of {widest}"));
        }
        for cfg in configs() {
            let (_, diff) = model_and_simulator(&p, &cfg);
            if !diff.is_empty() {
                return Err(format!("{name} {:?}: {:?}", cfg.levels, diff.entries));
            }
            runs += 1;
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(300) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{} kernels, {runs} kernel/config pairs, zero diff in {elapsed:.1?}", KERNELS.len()))
}

fn distance_pointwise() -> Outcome {
    let mut points = 0;
    for name in KERNELS {
        for line_size in [8, 64] {
            let p = kernel(name, Some(small_n(name)), line_size);
            points += check_distances(&p).map_err(|e| format!("{name} at {line_size}-byte lines: {e}"))?;
        }
    }
    Ok(format!("{points} access instances checked over {} kernels, extents <= 16", KERNELS.len()))
}

fn rewrite_soundness() -> Outcome {
    let grid = parse_set("{ S[i, j] : 0 <= i < 3 and 0 <= j < 2 }").unwrap();
    let i = AffineExpr::var(2, 0);
    let j = QuasiPolynomial::var(2, 1);
    let floor3 = |e: AffineExpr| QuasiPolynomial::from_affine(&e.floor_div(3));
    let diff = floor3(i.add_constant(1)).sub(&floor3(i.clone()));
    let equalized = Piece::new(grid.clone(), diff.mul(&j));
    let residue = QuasiPolynomial::from_affine(&i.modulo(3));
    let rasterized = Piece::new(grid, residue.mul(&j));
    if equalize(&equalized).is_none() {
        return Err("equalization does not apply to the floor difference".into());
    }
    if rasterize(&rasterized).is_none() {
        return Err("rasterization does not apply to the residue".into());
    }
    for (what, piece) in [("floor difference", &equalized), ("residue", &rasterized)] {
        check_rewrites_and_counting(piece).map_err(|e| format!("{what}: {e}"))?;
    }
    let (mut eq, mut ra) = (0, 0);
    for seed in 0..100 {
        let piece = random_floor_piece(seed);
        eq += usize::from(equalize(&piece).is_some());
        ra += usize::from(rasterize(&piece).is_some());
        check_rewrites_and_counting(&piece).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    Ok(format!("2 reference and 100 random pieces sound ({eq} equalized, {ra} rasterized)"))
}

fn best_of<T>(runs: usize, mut f: impl FnMut() -> T) -> (Duration, T) {
    let mut best = None;
    let mut last = None;
    for _ in 0..runs {
        let start = Instant::now();
        let v = f();
        let t = start.elapsed();
        best = Some(best.map_or(t, |b: Duration| b.min(t)));
        last = Some(v);
    }
    (best.unwrap(), last.unwrap())
}

fn matmul_scaling() -> Outcome {
    // 32-byte lines keep at least four lines per row at N = 16, so every
    // size has the same piece structure.
    let line_size = 32;
    let cfg = CacheConfig::new(line_size, vec![32 * 1024, 1024 * 1024]).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for n in [16, 32, 64] {
        let p = kernel("matmul", Some(n), line_size);
        let (model_t, report): (Duration, MissReport) =
            best_of(2, || analyze(&p, &cfg, AnalysisOptions::default()).unwrap());
        let (sim_t, _) = best_of(2, || run(&p, &cfg).unwrap());
        rows.push((n, model_t, sim_t, report.pieces));
    }
    let (first, last) = (rows[0], rows[2]);
    let model_ratio = last.1.as_secs_f64() / first.1.as_secs_f64();
    let sim_ratio = last.2.as_secs_f64() / first.2.as_secs_f64();
    let pieces: Vec<usize> = rows.iter().map(|r| r.3).collect();
    let summary = format!("model x{model_ratio:.2}, simulator x{sim_ratio:.1}, pieces {pieces:?}");
    if model_ratio > 3.0 || sim_ratio < 20.0 || pieces.iter().any(|&c| c != pieces[0]) {
        return Err(summary);
    }
    Ok(summary)
}

fn multi_level_economy() -> Outcome {
    let one = CacheConfig::new(64, vec![32 * 1024]).unwrap();
    let two = CacheConfig::new(64, vec![32 * 1024, 1024 * 1024]).unwrap();
    let mut ratios = Vec::new();
    for name in KERNELS {
        let p = kernel(name, Some(small_n(name)), 64);
        let cost = |cfg: &CacheConfig| {
            best_of(2, || analyze(&p, cfg, AnalysisOptions::default()).unwrap().timings.total)
                .1
        };
        let (t1, t2) = (cost(&one), cost(&two));
        ratios.push(t2 / t1);
    }
    ratios.sort_by(|a, b| a.total_cmp(b));
    let median = ratios[ratios.len() / 2];
    let summary = format!("median two-level/one-level cost {median:.2} over {} kernels", ratios.len());
    if median >= 1.8 {
        return Err(summary);
    }
    Ok(summary)
}

fn counting_engine() -> Outcome {
    let start = Instant::now();
    let before = fallback_count();
    for seed in 0..500u64 {
        let r = random_set(seed);
        let s = to_set(&r);
        let want = brute_points(&r).len();
        let got = s.cardinality().map_err(|e| format!("seed {seed}: {e}"))?;
        if got != want.into() {
            return Err(format!("seed {seed}: counted {got}, enumerated {want}"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(60) {
        return Err(format!("took {elapsed:?}"));
    }
    let fallbacks = fallback_count() - before;
    Ok(format!("500 sets exact in {elapsed:.1?} ({fallbacks} answered by the enumeration fallback)"))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 running example", running_example),
        ("2 oracle equivalence", oracle_equivalence),
        ("3 distance pointwise", distance_pointwise),
        ("4 rewrite soundness", rewrite_soundness),
        ("5 matmul scaling", matmul_scaling),
        ("6 multi-level economy", multi_level_economy),
        ("7 counting engine", counting_engine),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(msg)) => println!("PASS criterion {name}: {msg}"),
            Ok(Err(msg)) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL criterion {name}: panicked");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
