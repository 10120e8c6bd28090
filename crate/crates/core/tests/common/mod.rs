#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use stackdist::frontend::{load, Program};
use stackdist::model::{
    analyze, compute_stack_distances, count_capacity_misses, count_capacity_misses_by_enumeration, equalize,
    rasterize, AnalysisOptions, CacheConfig, MissReport,
};
use stackdist::polyhedra::{AffineExpr, BasicSet, Constraint, Piece, QuasiPolynomial, Set, Space};
use stackdist::simulator::{compare, distances_by_access, run, Diff};

pub const KERNELS: &[&str] = &[
    "matmul",
    "jacobi1d",
    "jacobi2d",
    "trisolve",
    "lu",
    "cholesky",
    "gemver",
    "tiled_matmul",
    "strided",
    "multisum",
    "transpose",
];

pub fn kernel_source(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "kernels", &format!("{name}.scop.dsl")].iter().collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn kernel(name: &str, n: Option<i64>, line_size: u64) -> Program {
    let mut defs = HashMap::new();
    if let Some(n) = n {
        defs.insert("N".to_string(), n);
    }
    load(&kernel_source(name), &defs, line_size as i64).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Cache configurations used for oracle checks, all with 64-byte lines.
pub fn configs() -> Vec<CacheConfig> {
    vec![
        CacheConfig::lines(64, 2).unwrap(),
        CacheConfig::lines(64, 16).unwrap(),
        CacheConfig::new(64, vec![32 * 1024, 1024 * 1024]).unwrap(),
    ]
}

pub fn model_and_simulator(p: &Program, cfg: &CacheConfig) -> (MissReport, Diff) {
    let report = analyze(p, cfg, AnalysisOptions::default()).unwrap();
    let (_, sim) = run(p, cfg).unwrap();
    let diff = compare(&report.counts, &sim.counts).unwrap();
    (report, diff)
}

const BOX: i64 = 6;

pub struct RandomSet {
    pub n: usize,
    pub cons: Vec<Constraint>,
}

fn random_expr(rng: &mut StdRng, n: usize, with_floor: bool) -> AffineExpr {
    let mut e = AffineExpr::constant(n, rng.gen_range(-5..=5));
    for i in 0..n {
        if rng.gen_bool(0.6) {
            e = e.add(&AffineExpr::var(n, i).scale(rng.gen_range(-5..=5)));
        }
    }
    if with_floor && rng.gen_bool(0.5) {
        let mut inner = AffineExpr::constant(n, rng.gen_range(-5..=5));
        for i in 0..n {
            if rng.gen_bool(0.5) {
                inner = inner.add(&AffineExpr::var(n, i).scale(rng.gen_range(-5..=5)));
            }
        }
        let d = rng.gen_range(2..=4);
        e = e.add(&inner.floor_div(d).scale(rng.gen_range(-5..=5)));
    }
    e
}

pub fn random_set(seed: u64) -> RandomSet {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(1..=4);
    let mut cons = Vec::new();
    for i in 0..n {
        let x = AffineExpr::var(n, i);
        cons.push(Constraint::ge(x.add_constant(rng.gen_range(0..=2))));
        cons.push(Constraint::ge(x.neg().add_constant(rng.gen_range(2..=BOX))));
    }
    for _ in 0..rng.gen_range(0..=3) {
        let e = random_expr(&mut rng, n, true);
        cons.push(if rng.gen_bool(0.15) { Constraint::eq(e) } else { Constraint::ge(e) });
    }
    RandomSet { n, cons }
}

pub fn brute_points(r: &RandomSet) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut p = vec![-2i64; r.n];
    loop {
        if r.cons.iter().all(|c| c.holds(&p)) {
            out.push(p.clone());
        }
        let mut k = r.n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if p[k] < BOX {
                p[k] += 1;
                break;
            }
            p[k] = -2;
        }
    }
}

pub fn to_set(r: &RandomSet) -> Set {
    let dims: Vec<String> = (0..r.n).map(|i| format!("x{i}")).collect();
    Set::from_basic(BasicSet::new(Space::named("R", dims), r.cons.clone()))
}

/// A random box over `i, j` (and sometimes `k`) with a polynomial of degree
/// two built from variables, floors and residues.
pub fn random_floor_piece(seed: u64) -> Piece {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(2..=3);
    let mut cons = Vec::new();
    for v in 0..n {
        let x = AffineExpr::var(n, v);
        cons.push(Constraint::ge(x.clone()));
        cons.push(Constraint::ge(x.neg().add_constant(rng.gen_range(2..=7))));
    }
    let dims: Vec<String> = ["i", "j", "k"][..n].iter().map(|s| s.to_string()).collect();
    let domain = Set::from_basic(BasicSet::new(Space::named("S", dims), cons));
    let var = |v: usize| QuasiPolynomial::var(n, v);
    let factor = |rng: &mut StdRng| -> QuasiPolynomial {
        let v = rng.gen_range(0..n);
        let d = rng.gen_range(2..=4);
        let x = AffineExpr::var(n, v).scale(rng.gen_range(1..=2));
        let shifted = |k: i64| QuasiPolynomial::from_affine(&x.add_constant(k).floor_div(d));
        match rng.gen_range(0..4) {
            0 => var(v),
            1 => shifted(rng.gen_range(0..d)),
            2 => shifted(rng.gen_range(0..d)).sub(&shifted(rng.gen_range(0..d))),
            _ => QuasiPolynomial::from_affine(&x.modulo(d)),
        }
    };
    let mut poly = QuasiPolynomial::from_int(n, rng.gen_range(0..=3));
    for _ in 0..rng.gen_range(1..=3) {
        let a = factor(&mut rng);
        let b = factor(&mut rng);
        poly = poly.add(&a.mul(&b));
    }
    Piece::new(domain, poly)
}

/// Checks that `out` partitions the domain of `input` and agrees with it
/// pointwise.
pub fn check_rewrite(input: &Piece, out: &[Piece]) -> Result<(), String> {
    let name = input.space().and_then(|s| s.name.clone());
    let mut covered = 0usize;
    for (_, pt) in input.domain.enumerate().map_err(|e| e.to_string())? {
        let hits: Vec<&Piece> = out.iter().filter(|p| p.domain.contains(name.as_deref(), &pt)).collect();
        if hits.len() != 1 {
            return Err(format!("point {pt:?} lies in {} pieces", hits.len()));
        }
        let (want, got) = (input.poly.eval(&pt), hits[0].poly.eval(&pt));
        if want != got {
            return Err(format!("point {pt:?}: {got} instead of {want}"));
        }
        covered += 1;
    }
    let total: usize = out.iter().map(|p| p.domain.enumerate().map(|v| v.len()).unwrap_or(usize::MAX)).sum();
    if total != covered {
        return Err(format!("outputs hold {total} points, input {covered}"));
    }
    Ok(())
}

/// Applies both rewrites and compares partial with full enumeration on
/// every resulting piece.
pub fn check_rewrites_and_counting(piece: &Piece) -> Result<(), String> {
    let mut pieces = vec![piece.clone()];
    if let Some(out) = equalize(piece) {
        check_rewrite(piece, &out).map_err(|e| format!("equalize: {e}"))?;
        pieces = out;
    }
    let mut next = Vec::new();
    for p in &pieces {
        match rasterize(p) {
            Some(out) => {
                check_rewrite(p, &out).map_err(|e| format!("rasterize: {e}"))?;
                next.extend(out);
            }
            None => next.push(p.clone()),
        }
    }
    for c in 0..12 {
        for p in next.iter().chain(std::iter::once(piece)) {
            let single = std::slice::from_ref(p);
            let partial = count_capacity_misses(single, c).map_err(|e| e.to_string())?;
            let full = count_capacity_misses_by_enumeration(single, c).map_err(|e| e.to_string())?;
            if partial != full {
                return Err(format!("capacity {c}: partial {partial}, full {full} on {}", p.fmt_with_space()));
            }
        }
    }
    Ok(())
}

/// Evaluates every distance piece at every point of its domain and compares
/// with the simulator's stack distance of the same access. Instances outside
/// all pieces must be first touches.
pub fn check_distances(p: &Program) -> Result<usize, String> {
    let cfg = CacheConfig::lines(p.line_size as u64, 1).unwrap();
    let (trace, sim) = run(p, &cfg).map_err(|e| e.to_string())?;
    let sim_d = distances_by_access(&trace, &sim);
    let model = compute_stack_distances(p).map_err(|e| e.to_string())?;
    let mut seen = HashMap::new();
    for a in &model.accesses {
        for piece in &a.pieces {
            for (_, pt) in piece.domain.enumerate().map_err(|e| e.to_string())? {
                let v = piece.poly.eval(&pt);
                let key = (a.statement.clone(), a.access, pt.clone());
                let want = sim_d.get(&key).ok_or_else(|| format!("{key:?} not executed"))?;
                if want.map(|w| v != num_rational::BigRational::from_integer(w.into())).unwrap_or(true) {
                    return Err(format!("{key:?}: model {v}, simulator {want:?}"));
                }
                if seen.insert(key.clone(), ()).is_some() {
                    return Err(format!("{key:?} lies in two pieces"));
                }
            }
        }
    }
    for (key, d) in &sim_d {
        if d.is_some() && !seen.contains_key(key) {
            return Err(format!("{key:?} has distance {d:?} but no piece"));
        }
    }
    Ok(seen.len())
}

/// Size override keeping every array extent of a kernel at most 16.
pub fn small_n(name: &str) -> i64 {
    match name {
        "strided" => 5,
        _ => 16,
    }
}
