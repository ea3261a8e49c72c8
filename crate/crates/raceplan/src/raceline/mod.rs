//! Offline raceline optimization: minimum-time path selection on a lateral
//! offset lattice plus a forward/backward velocity-profile solver, both
//! driven by the grip map.
//!
//! The split mirrors how the result is used: [`lattice`] picks *where* to
//! drive (a lateral offset per station), [`speed`] computes *how fast* that
//! line can be driven under the map-scaled acceleration envelope. The
//! headline comparison — how much lap time a spatially resolved grip map
//! buys over one global scalar — lives in [`compare_global_vs_map`].

mod lattice;
mod speed;

pub use lattice::{evaluate_offsets, optimize_raceline, RacelineConfig};
pub use speed::{speed_profile, speed_profile_with, SpeedProfileOptions};
pub(crate) use speed::lateral_cap;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::gggv::{GggvError, GggvModel};
use crate::gripmap::{GripMap, GripMapError, SWrap};
use crate::track::{TrackError, TrackGeometry};

#[derive(Debug, thiserror::Error)]
pub enum RacelineError {
    #[error("raceline configuration error: {0}")]
    Config(String),
    #[error("path layers spaced {spacing:.3} m apart exceed the grip map slice length {delta_s:.3} m")]
    SpacingTooCoarse { spacing: f64, delta_s: f64 },
    #[error("layer {layer} (s = {s:.2} m) is infeasible: {detail}")]
    InfeasibleLayer { layer: usize, s: f64, detail: String },
    #[error("no feasible lattice transition into layer {layer} (s = {s:.2} m)")]
    NoTransition { layer: usize, s: f64 },
    #[error("velocity profile did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("raceline csv parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    GripMap(#[from] GripMapError),
    #[error(transparent)]
    Gggv(#[from] GggvError),
}

/// One station of a raceline path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLayer {
    pub s: f64,
    pub n: f64,
    /// Curvature of the driven path (not the centerline) [1/m].
    pub kappa_path: f64,
    /// Path heading relative to the centerline tangent [rad].
    pub heading_rel: f64,
}

/// Geometric raceline: ordered stations along the lap. Closed paths carry a
/// final layer at `s = s_max` that duplicates the first lateral offset, so
/// segment arithmetic and lap times cover the seam without special cases.
#[derive(Debug, Clone, PartialEq)]
pub struct RacelinePath {
    pub layers: Vec<PathLayer>,
    pub closed: bool,
}

impl RacelinePath {
    pub fn validate(&self, track: &TrackGeometry) -> Result<(), RacelineError> {
        if self.layers.len() < 2 {
            return Err(RacelineError::Config(format!("path needs at least 2 layers, got {}", self.layers.len())));
        }
        for w in self.layers.windows(2) {
            if !(w[1].s > w[0].s) {
                return Err(RacelineError::Config(format!("layer s values must be strictly increasing ({} -> {})", w[0].s, w[1].s)));
            }
        }
        for (k, layer) in self.layers.iter().enumerate() {
            let slice = track.slice_at(track.wrap_s(layer.s))?;
            let tol = 1e-9;
            if layer.n < slice.n_min - tol || layer.n > slice.n_max + tol {
                return Err(RacelineError::Config(format!(
                    "layer {} (s = {:.2}) offset {:.3} outside corridor [{:.3}, {:.3}]",
                    k, layer.s, layer.n, slice.n_min, slice.n_max
                )));
            }
            if layer.heading_rel.abs() > std::f64::consts::FRAC_PI_2 + tol {
                return Err(RacelineError::Config(format!(
                    "layer {} (s = {:.2}) relative heading {:.3} rad exceeds pi/2",
                    k, layer.s, layer.heading_rel
                )));
            }
        }
        if self.closed {
            let first = self.layers.first().unwrap();
            let last = self.layers.last().unwrap();
            if (last.s - track.s_max()).abs() > 1e-6 {
                return Err(RacelineError::Config(format!(
                    "closed path must end at s_max = {}, ends at {}",
                    track.s_max(),
                    last.s
                )));
            }
            if (last.n - first.n).abs() > 1e-9 {
                return Err(RacelineError::Config(format!("closed path must wrap: n[0] = {}, n[last] = {}", first.n, last.n)));
            }
        }
        Ok(())
    }

    /// Path that follows the centerline with the track's own curvature.
    /// Useful as a comparison baseline and for constant-curvature checks.
    pub fn centerline(track: &TrackGeometry, layer_step: f64) -> Result<Self, RacelineError> {
        if !(layer_step.is_finite() && layer_step > 0.0) {
            return Err(RacelineError::Config(format!("layer_step must be positive, got {layer_step}")));
        }
        let count = (track.s_max() / layer_step).round().max(2.0) as usize;
        let step = track.s_max() / count as f64;
        let mut layers = Vec::with_capacity(count + 1);
        for k in 0..=count {
            let s = if k == count { track.s_max() } else { k as f64 * step };
            let slice = track.slice_at(track.wrap_s(s))?;
            layers.push(PathLayer { s, n: 0.0, kappa_path: slice.kappa, heading_rel: 0.0 });
        }
        Ok(Self { layers, closed: track.closed() })
    }
}

/// Velocity profile over the layers of a path. `v[k]`, `ax[k]`, `ay[k]` are
/// the speed and accelerations at layer `k`; `t[k]` is elapsed time from the
/// first layer, so `t.last()` is the lap (or segment) time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    pub v: Vec<f64>,
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
    pub t: Vec<f64>,
}

impl SpeedProfile {
    pub fn lap_time(&self) -> f64 {
        *self.t.last().unwrap()
    }
}

/// A solved raceline: geometry plus its velocity profile.
#[derive(Debug, Clone, PartialEq)]
pub struct RacelineResult {
    pub path: RacelinePath,
    pub profile: SpeedProfile,
}

impl RacelineResult {
    pub fn lap_time(&self) -> f64 {
        self.profile.lap_time()
    }
}

/// Outcome of [`compare_global_vs_map`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GripComparison {
    /// The single conservative factor a map-less stack would have to assume:
    /// the minimum theta over every cell the car can reach.
    pub theta_global: f64,
    pub lap_time_map: f64,
    pub lap_time_global: f64,
    /// `1 - lap_time_map / lap_time_global`; positive when spatial grip
    /// resolution buys lap time.
    pub improvement: f64,
}

/// Minimum theta over every cell that intersects the drivable corridor.
/// This is what a global-scalar stack must assume to stay safe everywhere
/// the car might go.
pub fn reachable_theta_min(track: &TrackGeometry, grid: &GripMap) -> Result<f64, RacelineError> {
    let wrap = SWrap::for_track(track);
    let mut theta_min = f64::INFINITY;
    for i in 0..grid.s_dim() as usize {
        let s_lo = grid.s_boundary(i);
        let s_hi = grid.s_boundary(i + 1);
        // Track bounds vary within a slice; probe a few stations and take
        // the widest corridor seen.
        let mut n_lo = f64::INFINITY;
        let mut n_hi = f64::NEG_INFINITY;
        for frac in [0.0, 0.5, 1.0] {
            let s = (s_lo + frac * (s_hi - s_lo)).min(track.s_max());
            let slice = track.slice_at(s)?;
            n_lo = n_lo.min(slice.n_min);
            n_hi = n_hi.max(slice.n_max);
        }
        let j_lo = grid.index_of(s_lo, n_lo, wrap)?.j;
        let j_hi = grid.index_of(s_lo, n_hi, wrap)?.j;
        for j in j_lo..=j_hi {
            theta_min = theta_min.min(grid.theta_at_cell(crate::gripmap::CellIndex { i, j })?);
        }
    }
    Ok(theta_min)
}

/// Optimizes the raceline twice — once with the spatial map, once with the
/// conservative global scalar it implies — and reports the lap-time gain.
pub fn compare_global_vs_map(
    track: &TrackGeometry,
    model: &GggvModel,
    grid: &GripMap,
    cfg: &RacelineConfig,
) -> Result<GripComparison, RacelineError> {
    let theta_global = reachable_theta_min(track, grid)?;
    let uniform = grid.map_cells(|_, _, _| theta_global)?;
    let with_map = optimize_raceline(track, model, grid, cfg)?;
    let with_global = optimize_raceline(track, model, &uniform, cfg)?;
    let lap_time_map = with_map.lap_time();
    let lap_time_global = with_global.lap_time();
    Ok(GripComparison {
        theta_global,
        lap_time_map,
        lap_time_global,
        improvement: 1.0 - lap_time_map / lap_time_global,
    })
}

/// One row of the raceline CSV (`s,n,x,y,kappa,v,ax,ay,t,theta`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RacelineRow {
    pub s: f64,
    pub n: f64,
    pub x: f64,
    pub y: f64,
    pub kappa: f64,
    pub v: f64,
    pub ax: f64,
    pub ay: f64,
    pub t: f64,
    pub theta: f64,
}

/// Flattens a result into CSV rows (Cartesian positions and the map factor
/// are resolved here so the file is self-contained for plotting).
pub fn raceline_rows(
    result: &RacelineResult,
    track: &TrackGeometry,
    grid: &GripMap,
) -> Result<Vec<RacelineRow>, RacelineError> {
    let wrap = SWrap::for_track(track);
    let mut rows = Vec::with_capacity(result.path.layers.len());
    for (k, layer) in result.path.layers.iter().enumerate() {
        let pose = track.frenet_to_cartesian(crate::track::FrenetPoint { s: track.wrap_s(layer.s), n: layer.n })?;
        rows.push(RacelineRow {
            s: layer.s,
            n: layer.n,
            x: pose.x,
            y: pose.y,
            kappa: layer.kappa_path,
            v: result.profile.v[k],
            ax: result.profile.ax[k],
            ay: result.profile.ay[k],
            t: result.profile.t[k],
            theta: grid.theta_at(layer.s, layer.n, wrap)?,
        });
    }
    Ok(rows)
}

pub fn write_raceline_csv<W: Write>(rows: &[RacelineRow], writer: W) -> Result<(), RacelineError> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row).map_err(|e| RacelineError::Parse { line: 0, msg: e.to_string() })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_raceline_csv<R: Read>(reader: R) -> Result<Vec<RacelineRow>, RacelineError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    for (idx, rec) in rdr.deserialize::<RacelineRow>().enumerate() {
        rows.push(rec.map_err(|e| RacelineError::Parse { line: idx + 2, msg: e.to_string() })?);
    }
    if rows.len() < 2 {
        return Err(RacelineError::Parse { line: 1, msg: format!("raceline needs at least 2 rows, got {}", rows.len()) });
    }
    Ok(rows)
}

/// Interpolation view over raceline rows, used by the online planner
/// (tracking target) and the simulator (ground-truth plateau center,
/// opponent speed caps). Layer spacing from the optimizer is uniform, so
/// station lookup is a direct index.
#[derive(Debug, Clone)]
pub struct RacelineTable {
    s: Vec<f64>,
    n: Vec<f64>,
    v: Vec<f64>,
    closed: bool,
    s_max: f64,
}

impl RacelineTable {
    pub fn from_rows(rows: &[RacelineRow], track: &TrackGeometry) -> Result<Self, RacelineError> {
        if rows.len() < 2 {
            return Err(RacelineError::Parse { line: 0, msg: "need at least 2 rows".into() });
        }
        Ok(Self {
            s: rows.iter().map(|r| r.s).collect(),
            n: rows.iter().map(|r| r.n).collect(),
            v: rows.iter().map(|r| r.v).collect(),
            closed: track.closed(),
            s_max: track.s_max(),
        })
    }

    pub fn from_result(result: &RacelineResult, track: &TrackGeometry) -> Self {
        Self {
            s: result.path.layers.iter().map(|l| l.s).collect(),
            n: result.path.layers.iter().map(|l| l.n).collect(),
            v: result.profile.v.clone(),
            closed: track.closed(),
            s_max: track.s_max(),
        }
    }

    #[inline]
    fn locate(&self, s: f64) -> (usize, f64) {
        let mut s = s;
        if self.closed {
            s = s % self.s_max;
            if s < 0.0 {
                s += self.s_max;
            }
        }
        let count = self.s.len();
        let step = (self.s[count - 1] - self.s[0]) / (count - 1) as f64;
        let mut k = (((s - self.s[0]) / step) as isize).clamp(0, count as isize - 2) as usize;
        while k > 0 && s < self.s[k] {
            k -= 1;
        }
        while k + 2 < count && s >= self.s[k + 1] {
            k += 1;
        }
        let den = (self.s[k + 1] - self.s[k]).max(1e-12);
        (k, ((s - self.s[k]) / den).clamp(0.0, 1.0))
    }

    /// Raceline lateral offset at a station.
    #[inline]
    pub fn n_at(&self, s: f64) -> f64 {
        let (k, t) = self.locate(s);
        self.n[k] + t * (self.n[k + 1] - self.n[k])
    }

    /// Raceline speed at a station.
    #[inline]
    pub fn v_at(&self, s: f64) -> f64 {
        let (k, t) = self.locate(s);
        self.v[k] + t * (self.v[k + 1] - self.v[k])
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    /// Signed station difference `a - b`, wrapped to the shorter way around
    /// on closed tracks.
    #[inline]
    pub fn s_delta(&self, a: f64, b: f64) -> f64 {
        if !self.closed {
            return a - b;
        }
        let mut d = (a - b) % self.s_max;
        if d > 0.5 * self.s_max {
            d -= self.s_max;
        } else if d <= -0.5 * self.s_max {
            d += self.s_max;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::{synth, TrackLoadOptions};

    #[test]
    fn csv_round_trip_is_loss_free() {
        let rows = vec![
            RacelineRow { s: 0.0, n: 0.1, x: 1.0, y: 2.0, kappa: 0.01, v: 31.62, ax: 0.0, ay: 10.0, t: 0.0, theta: 1.0 },
            RacelineRow { s: 2.0, n: -0.2, x: 3.0, y: 4.0, kappa: 0.011, v: 31.0, ax: -0.5, ay: 9.9, t: 0.064, theta: 0.75 },
        ];
        let mut buf = Vec::new();
        write_raceline_csv(&rows, &mut buf).unwrap();
        let rows2 = read_raceline_csv(&buf[..]).unwrap();
        assert_eq!(rows, rows2);
    }

    #[test]
    fn raceline_table_interpolates_and_wraps() {
        let pts = synth::circle_points(50.0, 5.0, 1.0);
        let track = crate::track::TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        let s_max = track.s_max();
        let count = 100usize;
        let rows: Vec<RacelineRow> = (0..=count)
            .map(|k| {
                let s = s_max * k as f64 / count as f64;
                RacelineRow { s, n: 1.0, x: 0.0, y: 0.0, kappa: 0.02, v: 30.0, ax: 0.0, ay: 0.0, t: 0.0, theta: 1.0 }
            })
            .collect();
        let table = RacelineTable::from_rows(&rows, &track).unwrap();
        assert!((table.n_at(10.0) - 1.0).abs() < 1e-12);
        assert!((table.n_at(-3.0) - 1.0).abs() < 1e-12);
        assert!((table.v_at(s_max * 3.0 + 1.0) - 30.0).abs() < 1e-12);
    }
}
