//! Spatial grid of grip scaling factors over the Frenet frame.
//!
//! The map discretizes a track into `s_dim` longitudinal slices of length
//! `delta_s = s_max / s_dim` and `2 * n_dim` lateral cells of width
//! `delta_n = w_max / n_dim`, where `w_max` is the half-width the grid
//! covers. Cell `(i, j)` stores a dimensionless factor `theta` that scales
//! the acceleration envelope inside that cell; `theta = 1` means nominal
//! grip, `theta = 0.8` means 80 % of nominal.
//!
//! Lookups are a perfect hash of the coordinates — two floor divisions and a
//! clamp — so the query path is O(1), allocation-free, and safe to run tens
//! of thousands of times per planning cycle. Coordinates outside the grid do
//! not fail: `s` beyond the lap wraps on closed circuits (clamps on open
//! ones), and `n` beyond the covered half-width clamps to the edge cells, so
//! the planner always sees some conservative value.

mod io;
mod refine;

pub use io::{load_gripmap, load_gripmap_from, load_gripmap_with_cap, save_gripmap, save_gripmap_to};
pub use refine::{
    load_telemetry_csv, suggest_theta_updates, SuggestConfig, SuggestReason, TelemetrySample, ThetaSuggestion,
};

use crate::track::TrackGeometry;

/// Default upper bound for grip scaling factors. Values above 1 describe
/// better-than-nominal grip (e.g. rubbered-in line); the cap keeps telemetry
/// feedback from inflating the map without bound.
pub const DEFAULT_THETA_CAP: f64 = 1.2;

#[derive(Debug, thiserror::Error)]
pub enum GripMapError {
    #[error("grid dimensions must be at least 1, got s_dim={s_dim}, n_dim={n_dim}")]
    InvalidDims { s_dim: u32, n_dim: u32 },
    #[error("grid extent must be positive and finite, got s_max={s_max}, w_max={w_max}")]
    InvalidExtent { s_max: f64, w_max: f64 },
    #[error("theta must satisfy 0 < theta <= {cap}, got {value}")]
    InvalidTheta { value: f64, cap: f64 },
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("cell index ({i}, {j}) outside grid {s_dim} x {n_cells}")]
    CellOutOfRange { i: usize, j: usize, s_dim: usize, n_cells: usize },
    #[error("invalid region bounds")]
    InvalidRegion,
    #[error("refinement step must satisfy 0 < step < 0.1, got {step}")]
    InvalidStep { step: f64 },
    #[error("telemetry sample {index} is not finite")]
    BadTelemetry { index: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a gripmap file (bad magic)")]
    BadMagic,
    #[error("unsupported gripmap file version {0}")]
    UnsupportedVersion(u16),
    #[error("gripmap file truncated")]
    Truncated,
    #[error("gripmap file checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("telemetry csv parse error at line {line}: {msg}")]
    TelemetryParse { line: usize, msg: String },
}

/// How arc-length coordinates outside `[0, s_max)` fold onto the grid:
/// closed circuits wrap (lap distance is periodic), open tracks clip to the
/// end slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SWrap {
    Clip,
    Wrap,
}

impl SWrap {
    pub fn for_track(track: &TrackGeometry) -> Self {
        if track.closed() {
            SWrap::Wrap
        } else {
            SWrap::Clip
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellIndex {
    pub i: usize,
    pub j: usize,
}

/// Frenet-frame rectangle covered by one cell.
#[derive(Debug, Clone, Copy)]
pub struct CellBounds {
    pub s_lo: f64,
    pub s_hi: f64,
    pub n_lo: f64,
    pub n_hi: f64,
}

/// Dense grid of grip scaling factors. See the module docs for the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GripMap {
    s_dim: u32,
    n_dim: u32,
    s_max: f64,
    w_max: f64,
    delta_s: f64,
    delta_n: f64,
    theta_cap: f64,
    /// Row-major, `i` outer: `theta[i * 2 * n_dim + j]`.
    theta: Vec<f64>,
}

impl GripMap {
    /// Creates a uniform grid. `s_dim` slices of `s_max / s_dim` meters,
    /// `2 * n_dim` lateral cells covering `[-w_max, w_max)`.
    pub fn new(
        s_dim: u32,
        n_dim: u32,
        s_max: f64,
        w_max: f64,
        init_theta: f64,
        theta_cap: f64,
    ) -> Result<Self, GripMapError> {
        if s_dim == 0 || n_dim == 0 {
            return Err(GripMapError::InvalidDims { s_dim, n_dim });
        }
        if !(s_max.is_finite() && s_max > 0.0 && w_max.is_finite() && w_max > 0.0) {
            return Err(GripMapError::InvalidExtent { s_max, w_max });
        }
        if !(theta_cap.is_finite() && theta_cap > 0.0) {
            return Err(GripMapError::InvalidTheta { value: theta_cap, cap: theta_cap });
        }
        if !(init_theta.is_finite() && init_theta > 0.0 && init_theta <= theta_cap) {
            return Err(GripMapError::InvalidTheta { value: init_theta, cap: theta_cap });
        }
        let cells = s_dim as usize * 2 * n_dim as usize;
        Ok(Self {
            s_dim,
            n_dim,
            s_max,
            w_max,
            delta_s: s_max / s_dim as f64,
            delta_n: w_max / n_dim as f64,
            theta_cap,
            theta: vec![init_theta; cells],
        })
    }

    /// Grid sized from a track's arc length, with the default theta cap.
    pub fn build(track: &TrackGeometry, s_dim: u32, n_dim: u32, w_max: f64, init_theta: f64) -> Result<Self, GripMapError> {
        Self::new(s_dim, n_dim, track.s_max(), w_max, init_theta, DEFAULT_THETA_CAP)
    }

    pub fn s_dim(&self) -> u32 {
        self.s_dim
    }

    pub fn n_dim(&self) -> u32 {
        self.n_dim
    }

    /// Number of lateral cells (`2 * n_dim`).
    pub fn n_cells(&self) -> usize {
        2 * self.n_dim as usize
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    pub fn delta_s(&self) -> f64 {
        self.delta_s
    }

    pub fn delta_n(&self) -> f64 {
        self.delta_n
    }

    pub fn theta_cap(&self) -> f64 {
        self.theta_cap
    }

    pub fn cell_count(&self) -> usize {
        self.theta.len()
    }

    pub fn theta_values(&self) -> &[f64] {
        &self.theta
    }

    /// Lower `s` boundary of slice `i`. Slice `i` covers
    /// `[s_boundary(i), s_boundary(i + 1))`.
    #[inline]
    pub fn s_boundary(&self, i: usize) -> f64 {
        i as f64 * self.delta_s
    }

    /// Lower `n` boundary of lateral cell `j`. Cell `j` covers
    /// `[n_boundary(j), n_boundary(j + 1))`; boundaries run from `-w_max`
    /// (j = 0) through `0` (j = n_dim) up to `w_max - delta_n`.
    #[inline]
    pub fn n_boundary(&self, j: usize) -> f64 {
        (j as f64 - self.n_dim as f64) * self.delta_n
    }

    pub fn cell_bounds(&self, idx: CellIndex) -> CellBounds {
        CellBounds {
            s_lo: self.s_boundary(idx.i),
            s_hi: self.s_boundary(idx.i + 1),
            n_lo: self.n_boundary(idx.j),
            n_hi: self.n_boundary(idx.j + 1),
        }
    }

    #[inline]
    fn fold_s(&self, s: f64, wrap: SWrap) -> f64 {
        match wrap {
            SWrap::Clip => s,
            SWrap::Wrap => {
                let mut s = s % self.s_max;
                if s < 0.0 {
                    s += self.s_max;
                }
                s
            }
        }
    }

    /// Maps a Frenet position to its cell. O(1): floor division with a
    /// one-step guard so results agree exactly with the boundary intervals
    /// of [`Self::s_boundary`] / [`Self::n_boundary`] even when the division
    /// rounds across a cell edge. Out-of-range `n` clips to the edge cells;
    /// `s` behavior is controlled by `wrap`.
    #[inline]
    pub fn index_of(&self, s: f64, n: f64, wrap: SWrap) -> Result<CellIndex, GripMapError> {
        if !(s.is_finite() && n.is_finite()) {
            return Err(GripMapError::NonFinite);
        }
        let s = self.fold_s(s, wrap);
        let max_i = self.s_dim as usize - 1;
        let mut i = ((s / self.delta_s) as i64).clamp(0, max_i as i64) as usize;
        while i < max_i && s >= self.s_boundary(i + 1) {
            i += 1;
        }
        while i > 0 && s < self.s_boundary(i) {
            i -= 1;
        }
        let max_j = self.n_cells() - 1;
        let mut j = (((n / self.delta_n) + self.n_dim as f64).floor() as i64).clamp(0, max_j as i64) as usize;
        while j < max_j && n >= self.n_boundary(j + 1) {
            j += 1;
        }
        while j > 0 && n < self.n_boundary(j) {
            j -= 1;
        }
        Ok(CellIndex { i, j })
    }

    /// Grip scaling factor at a Frenet position. The planner's hot path:
    /// no allocation, no branching beyond the index guards.
    #[inline]
    pub fn theta_at(&self, s: f64, n: f64, wrap: SWrap) -> Result<f64, GripMapError> {
        let idx = self.index_of(s, n, wrap)?;
        Ok(self.theta[idx.i * self.n_cells() + idx.j])
    }

    pub fn theta_at_cell(&self, idx: CellIndex) -> Result<f64, GripMapError> {
        self.check_cell(idx)?;
        Ok(self.theta[idx.i * self.n_cells() + idx.j])
    }

    fn check_cell(&self, idx: CellIndex) -> Result<(), GripMapError> {
        if idx.i >= self.s_dim as usize || idx.j >= self.n_cells() {
            return Err(GripMapError::CellOutOfRange {
                i: idx.i,
                j: idx.j,
                s_dim: self.s_dim as usize,
                n_cells: self.n_cells(),
            });
        }
        Ok(())
    }

    fn check_theta(&self, value: f64) -> Result<(), GripMapError> {
        if !(value.is_finite() && value > 0.0 && value <= self.theta_cap) {
            return Err(GripMapError::InvalidTheta { value, cap: self.theta_cap });
        }
        Ok(())
    }

    /// Returns a copy with one cell changed. Updates never mutate in place,
    /// so a grid shared with a running planner stays consistent.
    pub fn with_theta(&self, idx: CellIndex, value: f64) -> Result<Self, GripMapError> {
        self.check_cell(idx)?;
        self.check_theta(value)?;
        let mut next = self.clone();
        let stride = next.n_cells();
        next.theta[idx.i * stride + idx.j] = value;
        Ok(next)
    }

    /// Returns a copy with every cell whose rectangle intersects the given
    /// ranges set to `value`. Under [`SWrap::Wrap`] an `s` range with
    /// `s_lo > s_hi` (or extending past `s_max`) wraps across the lap seam;
    /// `n` ranges clip to the covered half-width.
    pub fn with_region(
        &self,
        s_range: (f64, f64),
        n_range: (f64, f64),
        value: f64,
        wrap: SWrap,
    ) -> Result<Self, GripMapError> {
        let (s_lo, s_hi) = s_range;
        let (n_lo, n_hi) = n_range;
        if !(s_lo.is_finite() && s_hi.is_finite() && n_lo.is_finite() && n_hi.is_finite()) {
            return Err(GripMapError::NonFinite);
        }
        if n_lo > n_hi {
            return Err(GripMapError::InvalidRegion);
        }
        self.check_theta(value)?;
        let i_lo = self.index_of(s_lo, 0.0, wrap)?.i;
        let i_hi = self.index_of(s_hi, 0.0, wrap)?.i;
        let j_lo = self.index_of(0.0, n_lo, wrap)?.j;
        let j_hi = self.index_of(0.0, n_hi, wrap)?.j;
        let folded_lo = self.fold_s(s_lo, wrap);
        let folded_hi = self.fold_s(s_hi, wrap);
        let wraps = match wrap {
            SWrap::Clip => {
                if s_lo > s_hi {
                    return Err(GripMapError::InvalidRegion);
                }
                false
            }
            // Wrapping is signaled either by a descending range or by a range
            // at least one lap long.
            SWrap::Wrap => folded_lo > folded_hi || (s_hi - s_lo) >= self.s_max,
        };
        let mut next = self.clone();
        let stride = next.n_cells();
        let paint_rows = |from: usize, to: usize, theta: &mut Vec<f64>| {
            for i in from..=to {
                for j in j_lo..=j_hi {
                    theta[i * stride + j] = value;
                }
            }
        };
        if wraps && (s_hi - s_lo) >= self.s_max {
            paint_rows(0, self.s_dim as usize - 1, &mut next.theta);
        } else if wraps {
            paint_rows(i_lo, self.s_dim as usize - 1, &mut next.theta);
            paint_rows(0, i_hi, &mut next.theta);
        } else {
            paint_rows(i_lo, i_hi, &mut next.theta);
        }
        Ok(next)
    }

    /// Returns a copy with every cell recomputed by `f` (given the cell, its
    /// bounds, and the current value). Used to derive maps from analytic
    /// grip fields and for sweep experiments.
    pub fn map_cells(&self, mut f: impl FnMut(CellIndex, CellBounds, f64) -> f64) -> Result<Self, GripMapError> {
        let mut next = self.clone();
        let stride = self.n_cells();
        for i in 0..self.s_dim as usize {
            for j in 0..stride {
                let idx = CellIndex { i, j };
                let value = f(idx, self.cell_bounds(idx), self.theta[i * stride + j]);
                self.check_theta(value)?;
                next.theta[i * stride + j] = value;
            }
        }
        Ok(next)
    }

    /// Smallest factor stored anywhere in the grid.
    pub fn theta_min(&self) -> f64 {
        self.theta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn theta_max(&self) -> f64 {
        self.theta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn theta_mean(&self) -> f64 {
        self.theta.iter().sum::<f64>() / self.theta.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Independent index computation: linear scan over the boundary
    /// intervals, the definition the fast path must reproduce exactly.
    pub(crate) fn oracle_index(grid: &GripMap, s: f64, n: f64, wrap: SWrap) -> CellIndex {
        let s = match wrap {
            SWrap::Clip => s,
            SWrap::Wrap => {
                let mut v = s % grid.s_max();
                if v < 0.0 {
                    v += grid.s_max();
                }
                v
            }
        };
        let mut i = grid.s_dim() as usize - 1;
        for cand in 0..grid.s_dim() as usize {
            if s < grid.s_boundary(cand + 1) {
                i = cand;
                break;
            }
        }
        if s < grid.s_boundary(0) {
            i = 0;
        }
        let mut j = grid.n_cells() - 1;
        for cand in 0..grid.n_cells() {
            if n < grid.n_boundary(cand + 1) {
                j = cand;
                break;
            }
        }
        if n < grid.n_boundary(0) {
            j = 0;
        }
        CellIndex { i, j }
    }

    #[test]
    fn worked_index_example() {
        // 4 lateral half-cells of 1.5 m: n = 0 sits in cell j = n_dim.
        let g = GripMap::new(100, 4, 500.0, 6.0, 1.0, DEFAULT_THETA_CAP).unwrap();
        assert!((g.delta_n() - 1.5).abs() < 1e-12);
        let idx = g.index_of(0.0, 0.0, SWrap::Clip).unwrap();
        assert_eq!(idx, CellIndex { i: 0, j: 4 });
    }

    #[test]
    fn s_max_wraps_or_clips_by_track_kind() {
        let g = GripMap::new(10, 2, 100.0, 4.0, 1.0, DEFAULT_THETA_CAP).unwrap();
        assert_eq!(g.index_of(100.0, 0.0, SWrap::Wrap).unwrap().i, 0);
        assert_eq!(g.index_of(100.0, 0.0, SWrap::Clip).unwrap().i, 9);
        assert_eq!(g.index_of(-0.5, 0.0, SWrap::Wrap).unwrap().i, 9);
        assert_eq!(g.index_of(-0.5, 0.0, SWrap::Clip).unwrap().i, 0);
    }

    #[test]
    fn lateral_overflow_clips_to_edge_cells() {
        let g = GripMap::new(10, 4, 100.0, 6.0, 1.0, DEFAULT_THETA_CAP).unwrap();
        assert_eq!(g.index_of(5.0, -100.0, SWrap::Clip).unwrap().j, 0);
        assert_eq!(g.index_of(5.0, 100.0, SWrap::Clip).unwrap().j, 7);
    }

    #[test]
    fn nan_is_rejected() {
        let g = GripMap::new(10, 4, 100.0, 6.0, 1.0, DEFAULT_THETA_CAP).unwrap();
        assert!(g.index_of(f64::NAN, 0.0, SWrap::Clip).is_err());
        assert!(g.theta_at(0.0, f64::INFINITY, SWrap::Wrap).is_err());
    }

    #[test]
    fn index_matches_interval_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(07_04_2024);
        for _ in 0..8 {
            let s_dim = rng.gen_range(1..60);
            let n_dim = rng.gen_range(1..12);
            let s_max = rng.gen_range(10.0..5000.0);
            let w_max = rng.gen_range(1.0..15.0);
            let g = GripMap::new(s_dim, n_dim, s_max, w_max, 1.0, DEFAULT_THETA_CAP).unwrap();
            for _ in 0..5000 {
                let (s, n) = random_query(&mut rng, &g);
                for wrap in [SWrap::Clip, SWrap::Wrap] {
                    let got = g.index_of(s, n, wrap).unwrap();
                    let want = oracle_index(&g, s, n, wrap);
                    assert_eq!(got, want, "s={s}, n={n}, wrap={wrap:?}, grid {s_dim}x{n_dim} {s_max}x{w_max}");
                }
            }
        }
    }

    pub(crate) fn random_query(rng: &mut impl Rng, g: &GripMap) -> (f64, f64) {
        // Mix uniform draws with exact boundary values and out-of-range
        // coordinates; boundaries are where naive floor division slips.
        let s = match rng.gen_range(0..5) {
            0 => g.s_boundary(rng.gen_range(0..=g.s_dim() as usize)),
            1 => -rng.gen_range(0.0..g.s_max()),
            2 => g.s_max() + rng.gen_range(0.0..g.s_max()),
            _ => rng.gen_range(0.0..g.s_max()),
        };
        let n = match rng.gen_range(0..5) {
            0 => g.n_boundary(rng.gen_range(0..=g.n_cells())),
            1 => -g.w_max() - rng.gen_range(0.0..g.w_max()),
            2 => g.w_max() + rng.gen_range(0.0..g.w_max()),
            _ => rng.gen_range(-g.w_max()..g.w_max()),
        };
        (s, n)
    }

    #[test]
    fn batch_and_scalar_lookups_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let g = GripMap::new(50, 6, 800.0, 9.0, 1.0, DEFAULT_THETA_CAP)
            .unwrap()
            .with_region((100.0, 300.0), (-9.0, 0.0), 0.8, SWrap::Wrap)
            .unwrap();
        let queries: Vec<(f64, f64)> = (0..1000).map(|_| random_query(&mut rng, &g)).collect();
        let batch: Vec<f64> = queries.iter().map(|&(s, n)| g.theta_at(s, n, SWrap::Wrap).unwrap()).collect();
        for (&(s, n), &b) in queries.iter().zip(&batch) {
            assert_eq!(g.theta_at(s, n, SWrap::Wrap).unwrap(), b);
        }
    }

    #[test]
    fn updates_are_copy_on_write() {
        let g = GripMap::new(10, 2, 100.0, 4.0, 1.0, DEFAULT_THETA_CAP).unwrap();
        let idx = CellIndex { i: 3, j: 1 };
        let g2 = g.with_theta(idx, 0.7).unwrap();
        assert_eq!(g.theta_at_cell(idx).unwrap(), 1.0);
        assert_eq!(g2.theta_at_cell(idx).unwrap(), 0.7);
    }

    #[test]
    fn invalid_theta_is_rejected() {
        let g = GripMap::new(10, 2, 100.0, 4.0, 1.0, DEFAULT_THETA_CAP).unwrap();
        let idx = CellIndex { i: 0, j: 0 };
        assert!(g.with_theta(idx, 0.0).is_err());
        assert!(g.with_theta(idx, -0.5).is_err());
        assert!(g.with_theta(idx, 1.3).is_err());
        assert!(g.with_theta(idx, f64::NAN).is_err());
        assert!(GripMap::new(10, 2, 100.0, 4.0, 0.0, DEFAULT_THETA_CAP).is_err());
        assert!(GripMap::new(0, 2, 100.0, 4.0, 1.0, DEFAULT_THETA_CAP).is_err());
    }

    #[test]
    fn region_update_spanning_the_seam_touches_both_lap_ends() {
        let g = GripMap::new(10, 2, 100.0, 4.0, 1.0, DEFAULT_THETA_CAP).unwrap();
        // 95..105 wraps: slices 9 and 0 change, everything else stays.
        let g2 = g.with_region((95.0, 105.0), (-4.0, 4.0), 0.8, SWrap::Wrap).unwrap();
        for i in 0..10 {
            for j in 0..4 {
                let expect = if i == 9 || i == 0 { 0.8 } else { 1.0 };
                assert_eq!(g2.theta_at_cell(CellIndex { i, j }).unwrap(), expect, "cell ({i}, {j})");
            }
        }
    }

    #[test]
    fn region_update_matches_cell_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let g = GripMap::new(rng.gen_range(2..20), rng.gen_range(1..6), 200.0, 8.0, 1.0, DEFAULT_THETA_CAP).unwrap();
            let a = rng.gen_range(0.0..200.0);
            let b = rng.gen_range(0.0..250.0);
            let n_lo = rng.gen_range(-10.0..8.0);
            let n_hi = n_lo + rng.gen_range(0.0..6.0);
            let g2 = g.with_region((a, b), (n_lo, n_hi), 0.9, SWrap::Wrap).unwrap();
            // Expected set: every cell whose rectangle intersects the folded
            // query, built by scanning all cells.
            let lo_idx = oracle_index(&g, a, 0.0, SWrap::Wrap).i;
            let hi_idx = oracle_index(&g, b, 0.0, SWrap::Wrap).i;
            let wraps = {
                let fold = |v: f64| {
                    let mut v = v % 200.0;
                    if v < 0.0 {
                        v += 200.0;
                    }
                    v
                };
                fold(a) > fold(b) || (b - a) >= 200.0
            };
            for i in 0..g.s_dim() as usize {
                let in_s = if (b - a) >= 200.0 {
                    true
                } else if wraps {
                    i >= lo_idx || i <= hi_idx
                } else {
                    i >= lo_idx && i <= hi_idx
                };
                for j in 0..g.n_cells() {
                    let jl = oracle_index(&g, 0.0, n_lo, SWrap::Wrap).j;
                    let jh = oracle_index(&g, 0.0, n_hi, SWrap::Wrap).j;
                    let in_n = j >= jl && j <= jh;
                    let expect = if in_s && in_n { 0.9 } else { 1.0 };
                    assert_eq!(g2.theta_at_cell(CellIndex { i, j }).unwrap(), expect, "cell ({i}, {j}) a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn storage_is_exactly_one_scalar_per_cell() {
        let g = GripMap::new(2000, 8, 5000.0, 12.0, 1.0, DEFAULT_THETA_CAP).unwrap();
        assert_eq!(g.cell_count(), 2000 * 16);
        assert_eq!(g.theta_values().len(), g.cell_count());
        // vec![x; n] allocates exactly n slots: the map's heap footprint is
        // cells * 8 bytes, nothing hidden.
        assert_eq!(g.theta.capacity(), g.theta.len());
    }
}
