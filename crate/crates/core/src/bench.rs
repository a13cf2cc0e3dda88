//! Batch experiments: generate seeded instances, solve them, summarize.
//!
//! Instance `i` of a batch with base seed `S` is generated from seed
//! `S + i` (wrapping). Jobs run on a pool of scoped threads; each solve is
//! single-threaded and results are reported in instance order.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{op_norm_2, sigma_min};
use crate::probgen::{self, site_rng, GenKind, GenSpec, DEFAULT_DENSITY};
use crate::pwls::{newton_solve, PwlsProblem, SolveOptions, SolveStatus, X0Strategy};
use crate::soc::ConeRegion;
use crate::vector::{dist, norm2};

/// Draw sites of the region experiment's starting points, one per region.
pub const SITE_START: [u64; 3] = [101, 102, 103];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Dense,
    Sparse,
    Spd,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Dense => "dense",
            Suite::Sparse => "sparse",
            Suite::Spd => "spd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub suite: Suite,
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    pub density: f64,
    pub target_cond: Option<f64>,
    pub threads: usize,
    pub solve: SolveOptions,
    /// Compute `cond(T)` for every instance (costly for large sparse T).
    pub compute_cond: bool,
}

impl BenchConfig {
    pub fn new(suite: Suite, n: usize, count: usize, seed: u64) -> Self {
        Self {
            suite,
            n,
            count,
            seed,
            density: DEFAULT_DENSITY,
            target_cond: None,
            threads: 1,
            solve: SolveOptions::default(),
            compute_cond: true,
        }
    }

    pub fn instance_spec(&self, index: usize) -> GenSpec {
        let seed = self.seed.wrapping_add(index as u64);
        let kind = match self.suite {
            Suite::Dense => GenKind::Dense,
            Suite::Sparse => GenKind::Sparse {
                density: self.density,
            },
            Suite::Spd => GenKind::SpdDense,
        };
        GenSpec {
            target_cond: if self.suite == Suite::Sparse { self.target_cond } else { None },
            ..GenSpec::new(self.n, kind, seed)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidInput("count must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::InvalidInput("threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub index: usize,
    pub seed: u64,
    pub n: usize,
    /// `sigma_max / sigma_min`; NaN when not computed.
    pub cond: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub final_residual: f64,
    pub stopped_by_v_fixpoint: bool,
    /// `||x - x*||` against the planted solution.
    pub error_to_planted: f64,
    pub time_s: f64,
}

impl InstanceResult {
    pub fn solved(&self) -> bool {
        self.status == SolveStatus::SolutionFound
    }
}

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummaryRow {
    pub kind: String,
    pub n: usize,
    pub avg_cond: f64,
    pub solved: usize,
    pub total: usize,
    pub solved_pct: f64,
    /// Over solved instances; NaN when none was solved.
    pub avg_iters: f64,
    /// Over solved instances; NaN when none was solved.
    pub avg_time_s: f64,
}

impl BenchSummaryRow {
    pub fn from_results(kind: &str, n: usize, results: &[InstanceResult]) -> Self {
        let solved: Vec<&InstanceResult> = results.iter().filter(|r| r.solved()).collect();
        let mean = |v: &mut dyn Iterator<Item = f64>| {
            let (s, c) = v.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
            if c == 0 {
                f64::NAN
            } else {
                s / c as f64
            }
        };
        let total = results.len();
        Self {
            kind: kind.to_string(),
            n,
            avg_cond: mean(&mut results.iter().map(|r| r.cond).filter(|c| !c.is_nan())),
            solved: solved.len(),
            total,
            solved_pct: if total == 0 { 0.0 } else { 100.0 * solved.len() as f64 / total as f64 },
            avg_iters: mean(&mut solved.iter().map(|r| r.iterations as f64)),
            avg_time_s: mean(&mut solved.iter().map(|r| r.time_s)),
        }
    }
}

/// Runs `job(i)` for `i in 0..count` on `threads` workers and returns the
/// results in index order.
pub fn parallel_map<T: Send>(
    count: usize,
    threads: usize,
    job: impl Fn(usize) -> T + Sync,
) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<(usize, T)>> = Mutex::new(Vec::with_capacity(count));
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, count.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let r = job(i);
                out.lock().expect("worker panicked").push((i, r));
            });
        }
    });
    let mut v = out.into_inner().expect("worker panicked");
    v.sort_by_key(|(i, _)| *i);
    v.into_iter().map(|(_, r)| r).collect()
}

pub fn condition_number(p: &PwlsProblem) -> f64 {
    match sigma_min(p.t()) {
        Ok(s) if s > 0.0 => op_norm_2(p.t()) / s,
        _ => f64::INFINITY,
    }
}

fn solve_timed(p: &PwlsProblem, opts: &SolveOptions) -> (Result<crate::pwls::SolveReport>, f64) {
    let start = Instant::now();
    let r = newton_solve(p, opts);
    (r, start.elapsed().as_secs_f64())
}

fn instance_result(
    index: usize,
    seed: u64,
    p: &PwlsProblem,
    cond: f64,
    report: Result<crate::pwls::SolveReport>,
    time_s: f64,
) -> InstanceResult {
    match report {
        Ok(r) => InstanceResult {
            index,
            seed,
            n: p.dim(),
            cond,
            status: r.status,
            iterations: r.iterations,
            final_residual: r.final_residual(),
            stopped_by_v_fixpoint: r.stopped_by_v_fixpoint,
            error_to_planted: p
                .planted_solution()
                .map_or(f64::NAN, |x| dist(x, &r.final_x)),
            time_s,
        },
        // only the initial linear solve can fail outright
        Err(_) => InstanceResult {
            index,
            seed,
            n: p.dim(),
            cond,
            status: SolveStatus::LinearSolveFailure { iteration: 0 },
            iterations: 0,
            final_residual: f64::NAN,
            stopped_by_v_fixpoint: false,
            error_to_planted: f64::NAN,
            time_s,
        },
    }
}

/// Generates and solves a batch.
pub fn run_bench(cfg: &BenchConfig) -> Result<(BenchSummaryRow, Vec<InstanceResult>)> {
    cfg.validate()?;
    // surface generator errors before spawning workers
    probgen::gen_pwls(&cfg.instance_spec(0))?;
    let results = parallel_map(cfg.count, cfg.threads, |i| -> Result<InstanceResult> {
        let spec = cfg.instance_spec(i);
        let p = probgen::gen_pwls(&spec)?;
        let cond = if cfg.compute_cond { condition_number(&p) } else { f64::NAN };
        let (report, t) = solve_timed(&p, &cfg.solve);
        Ok(instance_result(i, spec.seed, &p, cond, report, t))
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((BenchSummaryRow::from_results(cfg.suite.name(), cfg.n, &results), results))
}

pub const SUMMARY_CSV_HEADER: [&str; 7] =
    ["kind", "n", "avg_cond", "solved", "solved_pct", "avg_iters", "avg_time_s"];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("csv: {other:?}")),
    }
}

pub fn write_summary_csv(rows: &[BenchSummaryRow], w: impl Write) -> Result<()> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(SUMMARY_CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        c.write_record([
            r.kind.clone(),
            r.n.to_string(),
            format!("{:.4e}", r.avg_cond),
            r.solved.to_string(),
            format!("{:.1}", r.solved_pct),
            format!("{:.2}", r.avg_iters),
            format!("{:.3}", r.avg_time_s),
        ])
        .map_err(csv_err)?;
    }
    c.flush()?;
    Ok(())
}

pub const INSTANCE_CSV_HEADER: [&str; 10] = [
    "index",
    "seed",
    "n",
    "cond",
    "status",
    "iterations",
    "final_residual",
    "stopped_by_v_fixpoint",
    "error_to_planted",
    "time_s",
];

pub fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::SolutionFound => "SolutionFound",
        SolveStatus::MaxIterations => "MaxIterations",
        SolveStatus::LinearSolveFailure { .. } => "LinearSolveFailure",
    }
}

pub fn write_instances_csv(results: &[InstanceResult], w: impl Write) -> Result<()> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(INSTANCE_CSV_HEADER).map_err(csv_err)?;
    for r in results {
        c.write_record([
            r.index.to_string(),
            r.seed.to_string(),
            r.n.to_string(),
            format!("{:.4e}", r.cond),
            status_name(r.status).to_string(),
            r.iterations.to_string(),
            format!("{:.3e}", r.final_residual),
            r.stopped_by_v_fixpoint.to_string(),
            format!("{:.3e}", r.error_to_planted),
            format!("{:.3}", r.time_s),
        ])
        .map_err(csv_err)?;
    }
    c.flush()?;
    Ok(())
}

/// Aligned text rendering of summary rows.
pub fn summary_table(rows: &[BenchSummaryRow]) -> String {
    let mut s = format!(
        "{:<8} {:>6} {:>11} {:>16} {:>7} {:>10}\n",
        "kind", "n", "Cond(T)", "solved", "It", "time (s)"
    );
    for r in rows {
        let solved = format!("{}/{} ({:.1}%)", r.solved, r.total, r.solved_pct);
        s.push_str(&format!(
            "{:<8} {:>6} {:>11.3e} {:>16} {:>7.2} {:>10.3}\n",
            r.kind, r.n, r.avg_cond, solved, r.avg_iters, r.avg_time_s
        ));
    }
    s
}

/// A starting point strictly inside region 1 (interior of K), 2 (interior
/// of the polar cone) or 3 (neither).
pub fn region_start(n: usize, region: usize, seed: u64) -> Result<Vec<f64>> {
    if !(1..=3).contains(&region) {
        return Err(Error::InvalidInput(format!("region must be 1, 2 or 3, got {region}")));
    }
    if n < 2 {
        return Err(Error::InvalidInput("region starts need n >= 2".into()));
    }
    let mut rng = site_rng(seed, SITE_START[region - 1]);
    loop {
        let x2: Vec<f64> = (1..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let nx = norm2(&x2);
        let u: f64 = rng.random();
        let x1 = match region {
            1 => nx * (1.0 + u) + f64::MIN_POSITIVE,
            2 => -nx * (1.0 + u) - f64::MIN_POSITIVE,
            _ => nx * (2.0 * u - 1.0),
        };
        let want = [ConeRegion::InteriorCone, ConeRegion::InteriorPolar, ConeRegion::Outside][region - 1];
        if nx > 0.0 && crate::soc::classify_parts(x1, nx, 0.0) == want {
            let mut x = vec![x1];
            x.extend(x2);
            return Ok(x);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub region: usize,
    pub solved: usize,
    pub total: usize,
    /// Over solved runs.
    pub avg_time_s: f64,
    pub avg_iters: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionsReport {
    pub kind: String,
    pub n: usize,
    pub regions: Vec<RegionStats>,
    /// Instances solved from at least two regions.
    pub compared: usize,
    /// Of those, instances whose solutions agree to `1e-6 (1 + ||x||)`.
    pub identical_solutions: usize,
    pub runs: Vec<[InstanceResult; 3]>,
}

/// Solves every instance from one starting point in each of the three regions.
pub fn run_regions(cfg: &BenchConfig) -> Result<RegionsReport> {
    cfg.validate()?;
    probgen::gen_pwls(&cfg.instance_spec(0))?;
    let per_instance = parallel_map(cfg.count, cfg.threads, |i| -> Result<_> {
        let spec = cfg.instance_spec(i);
        let p = probgen::gen_pwls(&spec)?;
        let mut runs = Vec::with_capacity(3);
        let mut finals = Vec::new();
        for region in 1..=3 {
            let opts = SolveOptions {
                x0_strategy: X0Strategy::Given(region_start(p.dim(), region, spec.seed)?),
                ..cfg.solve.clone()
            };
            let (report, t) = solve_timed(&p, &opts);
            if let Ok(r) = &report {
                if r.solved() {
                    finals.push(r.final_x.clone());
                }
            }
            runs.push(instance_result(i, spec.seed, &p, f64::NAN, report, t));
        }
        let agree = finals.len() >= 2
            && finals
                .iter()
                .all(|x| dist(x, &finals[0]) <= 1e-6 * (1.0 + norm2(&finals[0])));
        let runs: [InstanceResult; 3] = runs.try_into().expect("three regions");
        Ok((runs, finals.len() >= 2, agree))
    });
    let per_instance = per_instance.into_iter().collect::<Result<Vec<_>>>()?;
    let regions = (0..3)
        .map(|k| {
            let results: Vec<InstanceResult> = per_instance.iter().map(|(r, _, _)| r[k].clone()).collect();
            let row = BenchSummaryRow::from_results("", cfg.n, &results);
            RegionStats {
                region: k + 1,
                solved: row.solved,
                total: row.total,
                avg_time_s: row.avg_time_s,
                avg_iters: row.avg_iters,
            }
        })
        .collect();
    Ok(RegionsReport {
        kind: cfg.suite.name().to_string(),
        n: cfg.n,
        regions,
        compared: per_instance.iter().filter(|(_, c, _)| *c).count(),
        identical_solutions: per_instance.iter().filter(|(_, _, a)| *a).count(),
        runs: per_instance.into_iter().map(|(r, _, _)| r).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let v = parallel_map(50, 4, |i| i * i);
        assert_eq!(v, (0..50).map(|i| i * i).collect::<Vec<_>>());
        assert_eq!(parallel_map(3, 1, |i| i), vec![0, 1, 2]);
    }

    #[test]
    fn small_dense_batch_is_deterministic() {
        let cfg = BenchConfig {
            threads: 3,
            ..BenchConfig::new(Suite::Dense, 30, 6, 42)
        };
        let (row, res) = run_bench(&cfg).unwrap();
        assert_eq!(res.len(), 6);
        assert_eq!(row.total, 6);
        assert!(row.solved >= 5);
        let (_, again) = run_bench(&BenchConfig { threads: 1, ..cfg }).unwrap();
        for (a, b) in res.iter().zip(&again) {
            assert_eq!(a.seed, b.seed);
            assert_eq!(a.iterations, b.iterations);
            assert_eq!(a.final_residual.to_bits(), b.final_residual.to_bits());
        }
    }

    #[test]
    fn csv_outputs() {
        let cfg = BenchConfig::new(Suite::Spd, 10, 3, 1);
        let (row, res) = run_bench(&cfg).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(std::slice::from_ref(&row), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("kind,n,avg_cond,solved,solved_pct,avg_iters,avg_time_s\nspd,10,"));
        let mut buf = Vec::new();
        write_instances_csv(&res, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
        assert!(summary_table(&[row]).contains("spd"));
    }

    #[test]
    fn region_starts() {
        for region in 1..=3 {
            let x = region_start(5, region, 3).unwrap();
            let nx = norm2(&x[1..]);
            match region {
                1 => assert!(x[0] > nx),
                2 => assert!(x[0] < -nx),
                _ => assert!(x[0].abs() < nx),
            }
        }
        assert!(region_start(5, 4, 3).is_err());
    }

    #[test]
    fn regions_agree_on_dense() {
        let rep = run_regions(&BenchConfig::new(Suite::Dense, 20, 4, 5)).unwrap();
        assert_eq!(rep.regions.len(), 3);
        assert_eq!(rep.identical_solutions, rep.compared);
        assert!(rep.compared >= 3);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(run_bench(&BenchConfig::new(Suite::Dense, 10, 0, 1)).is_err());
        let mut cfg = BenchConfig::new(Suite::Sparse, 100, 2, 1);
        cfg.density = 1e-9;
        assert!(matches!(run_bench(&cfg), Err(Error::InvalidSpec(_))));
    }
}
