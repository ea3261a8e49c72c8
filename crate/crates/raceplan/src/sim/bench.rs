//! Benchmark harnesses. Two measurements matter: what the grip lookups add
//! to a full planning cycle (the map has to be close to free to earn its
//! place in the loop), and whether a single lookup is really independent of
//! grid size. Both run single-threaded on one fixed, seeded workload so the
//! with/without comparison sees identical work.

use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::SimError;
use crate::gggv::GggvModel;
use crate::gripmap::{GripMap, SWrap};
use crate::planner::{
    evaluate_cost, hard_feasibility, sample_candidates, OpponentState, PlannerConfig, PlannerState,
};
use crate::raceline::{RacelineRow, RacelineTable};
use crate::track::{synth, TrackGeometry, TrackLoadOptions};

/// Serializes wall-clock measurements; timing tests should hold this so they
/// never run concurrently with each other.
pub static BENCH_LOCK: Mutex<()> = Mutex::new(());

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Measured cycles per configuration (after warm-up).
    pub cycles: usize,
    /// Warm-up cycles excluded from the stats.
    pub warmup: usize,
    pub seed: u64,
    /// Workload shape; the default is the full sampling grid (1000
    /// candidates at 40 points each).
    pub planner: PlannerConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { cycles: 1000, warmup: 50, seed: 2024, planner: PlannerConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchStats {
    pub mean_cycle_s: f64,
    pub std_cycle_s: f64,
    pub samples: usize,
}

fn stats(samples: &[f64]) -> BenchStats {
    let n = samples.len().max(1) as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    BenchStats { mean_cycle_s: mean, std_cycle_s: var.sqrt(), samples: samples.len() }
}

/// Planner-cycle comparison on one seeded workload. `without_map` runs the
/// identical candidate sets but scores with no grip input, which skips the
/// per-point grip lookups and the grip cost term — nothing else differs.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub with_map: BenchStats,
    pub without_map: BenchStats,
    /// `mean_with / mean_without - 1`.
    pub overhead: f64,
    pub per_cycle_with_s: Vec<f64>,
    pub per_cycle_without_s: Vec<f64>,
}

struct BenchWorld {
    track: TrackGeometry,
    model: GggvModel,
    raceline: RacelineTable,
    grid: GripMap,
}

fn bench_world() -> Result<BenchWorld, SimError> {
    let track = TrackGeometry::from_points(
        &synth::speedway_points(300.0, 80.0, 6.0, 2.0),
        TrackLoadOptions::default(),
    )?;
    let model = GggvModel::default_flat();
    let s_max = track.s_max();
    let grid = GripMap::build(&track, 256, 16, 6.0, 1.0)?
        .with_region((0.25 * s_max, 0.45 * s_max), (-6.0, 0.0), 0.85, SWrap::Wrap)?
        .with_region((0.7 * s_max, 0.8 * s_max), (-2.0, 4.0), 0.9, SWrap::Wrap)?;
    let count = (s_max / 2.0).round() as usize;
    let rows: Vec<RacelineRow> = (0..=count)
        .map(|k| RacelineRow {
            s: s_max * k as f64 / count as f64,
            n: 0.0,
            x: 0.0,
            y: 0.0,
            kappa: 0.0,
            v: 30.0,
            ax: 0.0,
            ay: 0.0,
            t: 0.0,
            theta: 1.0,
        })
        .collect();
    let raceline = RacelineTable::from_rows(&rows, &track)?;
    Ok(BenchWorld { track, model, raceline, grid })
}

fn cycle_state(track: &TrackGeometry, rng: &mut ChaCha8Rng) -> (PlannerState, Vec<OpponentState>) {
    let s = rng.gen_range(0.0..track.s_max());
    let state = PlannerState {
        s,
        s_dot: rng.gen_range(22.0..38.0),
        s_ddot: rng.gen_range(-2.0..2.0),
        n: rng.gen_range(-2.5..2.5),
        n_dot: rng.gen_range(-0.8..0.8),
        n_ddot: 0.0,
    };
    let opponents = vec![OpponentState {
        s: s + rng.gen_range(20.0..70.0),
        n: rng.gen_range(-2.0..2.0),
        v: rng.gen_range(20.0..35.0),
    }];
    (state, opponents)
}

/// One full scored cycle: sample, screen, evaluate every feasible candidate.
/// Returns elapsed seconds; the accumulated cost keeps the work observable.
fn timed_cycle(
    world: &BenchWorld,
    state: &PlannerState,
    opponents: &[OpponentState],
    grid: Option<&GripMap>,
    cfg: &PlannerConfig,
) -> Result<f64, SimError> {
    let wrap = SWrap::for_track(&world.track);
    let kappa_max = cfg.kappa_limit(&world.model);
    let start = Instant::now();
    let mut cands = sample_candidates(state, &world.raceline, &world.track, cfg)?;
    let mut acc = 0.0;
    let mut lookups = 0u64;
    for c in cands.iter_mut() {
        if !hard_feasibility(c, &world.track, &world.model, kappa_max).is_feasible() {
            continue;
        }
        let cost =
            evaluate_cost(c, &world.raceline, grid, wrap, &world.model, opponents, cfg, &mut lookups)?;
        acc += cost.total;
    }
    let elapsed = start.elapsed().as_secs_f64();
    std::hint::black_box(acc);
    std::hint::black_box(lookups);
    Ok(elapsed)
}

pub fn bench_planner(cfg: &BenchConfig) -> Result<BenchReport, SimError> {
    if cfg.cycles == 0 {
        return Err(SimError::Scenario("bench needs at least 1 measured cycle".into()));
    }
    cfg.planner.validate()?;
    let world = bench_world()?;
    let mut with_s = Vec::with_capacity(cfg.cycles);
    let mut without_s = Vec::with_capacity(cfg.cycles);
    for i in 0..cfg.warmup + cfg.cycles {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
        let (state, opponents) = cycle_state(&world.track, &mut rng);
        // Alternate measurement order so slow drift cancels instead of
        // biasing one configuration.
        let (first_grid, second_grid) = if i % 2 == 0 {
            (None, Some(&world.grid))
        } else {
            (Some(&world.grid), None)
        };
        let t_first = timed_cycle(&world, &state, &opponents, first_grid, &cfg.planner)?;
        let t_second = timed_cycle(&world, &state, &opponents, second_grid, &cfg.planner)?;
        let (t_without, t_with) = if i % 2 == 0 { (t_first, t_second) } else { (t_second, t_first) };
        if i >= cfg.warmup {
            with_s.push(t_with);
            without_s.push(t_without);
        }
    }
    let with_map = stats(&with_s);
    let without_map = stats(&without_s);
    Ok(BenchReport {
        overhead: with_map.mean_cycle_s / without_map.mean_cycle_s - 1.0,
        with_map,
        without_map,
        per_cycle_with_s: with_s,
        per_cycle_without_s: without_s,
    })
}

/// Result of the lookup micro-benchmark on one grid size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LookupBench {
    pub cells: usize,
    pub lookups: u64,
    /// Median pass time over the repeats [s].
    pub total_s: f64,
    pub per_lookup_ns: f64,
    /// Sum of looked-up factors, kept so the work cannot be optimized away.
    pub checksum: f64,
}

/// Times a fixed trajectory-shaped access pattern (1000 trajectories at 40
/// points) against a grid of the given dimensions. The pattern is identical
/// across grid sizes, so comparing `per_lookup_ns` isolates the effect of
/// cell count.
pub fn bench_lookup(s_dim: u32, n_dim: u32, passes: usize, seed: u64) -> Result<LookupBench, SimError> {
    if passes == 0 {
        return Err(SimError::Scenario("bench needs at least 1 pass".into()));
    }
    let track = TrackGeometry::from_points(
        &synth::speedway_points(300.0, 80.0, 6.0, 2.0),
        TrackLoadOptions::default(),
    )?;
    let grid = GripMap::build(&track, s_dim, n_dim, 6.0, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(40_000);
    for _ in 0..1000 {
        let s0 = rng.gen_range(0.0..track.s_max());
        let n0 = rng.gen_range(-4.0..4.0);
        let dn = rng.gen_range(-0.08..0.08);
        for k in 0..40 {
            pairs.push((s0 + 2.5 * k as f64, (n0 + dn * k as f64).clamp(-5.9, 5.9)));
        }
    }
    let mut times = Vec::with_capacity(passes);
    let mut checksum = 0.0;
    for _ in 0..passes {
        let start = Instant::now();
        let mut acc = 0.0;
        for &(s, n) in &pairs {
            acc += grid.theta_at(s, n, SWrap::Wrap)?;
        }
        times.push(start.elapsed().as_secs_f64());
        checksum = std::hint::black_box(acc);
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total_s = times[times.len() / 2];
    let lookups = pairs.len() as u64;
    Ok(LookupBench {
        cells: grid.cell_count(),
        lookups,
        total_s,
        per_lookup_ns: total_s / lookups as f64 * 1e9,
        checksum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lock() -> std::sync::MutexGuard<'static, ()> {
        BENCH_LOCK.lock().unwrap_or_else(std::sync::PoisonError::into_inner)
    }

    fn small_workload() -> PlannerConfig {
        PlannerConfig {
            end_speed_offsets: vec![-4.0, 0.0, 4.0],
            end_offset_count: 4,
            horizons: vec![1.0, 2.0],
            ..PlannerConfig::default()
        }
    }

    #[test]
    fn planner_bench_produces_stats_on_identical_workloads() {
        let _g = lock();
        let cfg = BenchConfig { cycles: 20, warmup: 3, seed: 7, planner: small_workload() };
        let report = bench_planner(&cfg).unwrap();
        assert_eq!(report.with_map.samples, 20);
        assert_eq!(report.without_map.samples, 20);
        assert_eq!(report.per_cycle_with_s.len(), 20);
        assert!(report.with_map.mean_cycle_s > 0.0);
        assert!(report.without_map.mean_cycle_s > 0.0);
        assert!(report.overhead.is_finite());
    }

    #[test]
    fn degenerate_workload_has_negligible_overhead() {
        let _g = lock();
        let planner = PlannerConfig {
            end_speed_offsets: vec![0.0],
            end_offset_count: 1,
            horizons: vec![1.0],
            ..PlannerConfig::default()
        };
        let cfg = BenchConfig { cycles: 200, warmup: 20, seed: 11, planner };
        let report = bench_planner(&cfg).unwrap();
        assert!(
            report.overhead.abs() < 0.5,
            "single-candidate overhead should drown in noise, got {}",
            report.overhead
        );
    }

    #[test]
    fn lookup_bench_counts_and_times() {
        let _g = lock();
        let b = bench_lookup(16, 4, 3, 5).unwrap();
        assert_eq!(b.lookups, 40_000);
        assert_eq!(b.cells, 16 * 8);
        assert!(b.total_s > 0.0);
        assert!(b.per_lookup_ns > 0.0);
        assert!((b.checksum - 40_000.0).abs() < 1e-6);
    }
}
