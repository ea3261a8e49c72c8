//! Track centerline geometry and Frenet-frame conversions.
//!
//! A track is a sampled centerline with per-sample lateral bounds and an
//! optional vertical-acceleration profile. Positions are expressed either in
//! Cartesian `(x, y)` or in the Frenet frame `(s, n)`: `s` is arc length
//! along the centerline, `n` is the signed lateral offset, positive to the
//! left of the direction of travel.
//!
//! Loading recomputes everything derived: input points are re-sampled at a
//! uniform arc-length step, cumulative arc length is rebuilt from the
//! re-sampled chords, and heading/curvature come from central finite
//! differences (curvature on a moving-average-smoothed copy so that input
//! noise does not leak into the planner).

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Default gravitational vertical acceleration [m/s^2] when a track file has
/// no `a_z` column.
pub const DEFAULT_A_Z: f64 = 9.81;

#[derive(Debug, thiserror::Error)]
pub enum TrackError {
    #[error("i/o error reading track: {0}")]
    Io(#[from] std::io::Error),
    #[error("track csv parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("track needs at least 4 input points, got {count}")]
    TooFewPoints { count: usize },
    #[error("lateral bounds at line {line} must satisfy n_min < 0 < n_max, got [{n_min}, {n_max}]")]
    InvalidBounds { line: usize, n_min: f64, n_max: f64 },
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("arc length {s} outside [0, {s_max}] on an open track")]
    OutOfRange { s: f64, s_max: f64 },
    #[error("point is {n:.3} m from the centerline (corridor limit {corridor} m), nearest s = {nearest_s:.3}")]
    OutOfCorridor { n: f64, corridor: f64, nearest_s: f64 },
    #[error("degenerate frame at s = {s:.3}: |kappa * n| = {knl:.3} >= 1")]
    DegenerateFrame { s: f64, knl: f64 },
    #[error("projection did not converge within {max_iter} iterations")]
    NoConvergence { max_iter: usize },
}

/// One input row of a track file, before any re-sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawTrackPoint {
    pub x: f64,
    pub y: f64,
    /// Right lateral bound, negative [m].
    pub n_min: f64,
    /// Left lateral bound, positive [m].
    pub n_max: f64,
    /// Vertical acceleration at this station [m/s^2].
    pub a_z: f64,
}

/// One derived centerline sample. `s` is cumulative chord length of the
/// re-sampled polyline, so within a segment Cartesian distance equals
/// arc-length distance exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    /// Centerline tangent heading [rad].
    pub heading: f64,
    /// Centerline curvature [1/m], positive for left turns.
    pub kappa: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub a_z: f64,
}

/// Position in the Frenet frame of a track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrenetPoint {
    pub s: f64,
    pub n: f64,
}

/// Cartesian pose; `heading` is the centerline tangent heading at `s`, not
/// rotated by the lateral offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

/// Everything the track knows at one arc-length station, linearly
/// interpolated between samples.
#[derive(Debug, Clone, Copy)]
pub struct TrackSlice {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub kappa: f64,
    /// d(kappa)/ds, piecewise constant between samples [1/m^2].
    pub dkappa_ds: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub a_z: f64,
}

/// Options for [`TrackGeometry::from_points`] / [`load_track`].
#[derive(Debug, Clone, Copy)]
pub struct TrackLoadOptions {
    /// Uniform re-sampling step along the centerline [m].
    pub resample_step: f64,
    /// Moving-average window (samples) applied to a copy of the centerline
    /// before heading/curvature estimation. `1` disables smoothing.
    pub smooth_window: usize,
    /// Force open/closed; `None` auto-detects (closing gap comparable to the
    /// median input spacing).
    pub closed: Option<bool>,
}

impl Default for TrackLoadOptions {
    fn default() -> Self {
        Self { resample_step: 1.0, smooth_window: 3, closed: None }
    }
}

/// Sampled track centerline with Frenet conversions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackGeometry {
    samples: Vec<Sample>,
    s_max: f64,
    closed: bool,
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    // Maps to (-pi, pi]. Inputs here are always within a few turns of zero.
    let mut a = a % std::f64::consts::TAU;
    if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    } else if a <= -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    }
    a
}

fn chord(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.0 - a.0).hypot(b.1 - a.1)
}

impl TrackGeometry {
    /// Builds a track from raw centerline points.
    ///
    /// Positions are re-sampled at `opts.resample_step` on an interpolating
    /// cubic spline through the input vertices (periodic when closed), so a
    /// densely dumped smooth centerline does not inherit the flat spots of a
    /// piecewise-linear read-off; width and banking interpolate linearly.
    /// Cumulative arc length is recomputed from the re-sampled chords, and
    /// heading and curvature are estimated with central finite differences
    /// (curvature on a smoothed copy of the positions; arc length is never
    /// smoothed). A sharply cornered polygon input gets rounded within the
    /// spacing of its vertices.
    pub fn from_points(points: &[RawTrackPoint], opts: TrackLoadOptions) -> Result<Self, TrackError> {
        if points.len() < 4 {
            return Err(TrackError::TooFewPoints { count: points.len() });
        }
        for (idx, p) in points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.n_min.is_finite() && p.n_max.is_finite() && p.a_z.is_finite()) {
                return Err(TrackError::Parse { line: idx + 2, msg: "non-finite value".into() });
            }
            if !(p.n_min < 0.0 && 0.0 < p.n_max) {
                return Err(TrackError::InvalidBounds { line: idx + 2, n_min: p.n_min, n_max: p.n_max });
            }
        }
        if !(opts.resample_step.is_finite() && opts.resample_step > 0.0) {
            return Err(TrackError::Parse { line: 0, msg: format!("resample step must be positive, got {}", opts.resample_step) });
        }
        // A loop given with its first point repeated at the end would leave a
        // zero-length closing segment; drop the duplicate.
        let pts: &[RawTrackPoint] = if chord(
            (points[0].x, points[0].y),
            (points[points.len() - 1].x, points[points.len() - 1].y),
        ) <= 1e-9
        {
            &points[..points.len() - 1]
        } else {
            points
        };
        let m = pts.len();
        if m < 4 {
            return Err(TrackError::TooFewPoints { count: m });
        }

        // Cumulative parameter along the input polyline.
        let mut u = Vec::with_capacity(m + 1);
        u.push(0.0);
        for w in pts.windows(2) {
            let d = chord((w[0].x, w[0].y), (w[1].x, w[1].y));
            if d <= 1e-12 {
                return Err(TrackError::Parse { line: u.len() + 1, msg: "duplicate consecutive point".into() });
            }
            u.push(u.last().unwrap() + d);
        }
        let open_len = *u.last().unwrap();
        let closing_gap = chord((pts[m - 1].x, pts[m - 1].y), (pts[0].x, pts[0].y)).max(1e-12);
        let closed = opts.closed.unwrap_or_else(|| {
            let mut spacings: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
            spacings.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = spacings[spacings.len() / 2];
            closing_gap <= 2.0 * median
        });

        // Interpolating cubic spline through the vertices, parameterized by
        // cumulative chord length (periodic over the closing segment when
        // closed, natural ends otherwise).
        let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
        let mut h: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
        if closed {
            h.push(closing_gap);
        }
        let mx = spline_moments(&xs, &h, closed);
        let my = spline_moments(&ys, &h, closed);

        // Re-sample uniformly along the chord parameter (including the
        // closing segment for closed tracks).
        let total = if closed { open_len + closing_gap } else { open_len };
        let interp_at = |target: f64| -> RawTrackPoint {
            let (k, t, d) = if closed && target >= open_len {
                (m - 1, ((target - open_len) / closing_gap).min(1.0), closing_gap)
            } else {
                let k = u.partition_point(|&v| v <= target).saturating_sub(1).min(m - 2);
                let d = u[k + 1] - u[k];
                (k, ((target - u[k]) / d).clamp(0.0, 1.0), d)
            };
            let j = (k + 1) % m;
            let mut out = lerp_raw(pts[k], pts[j], t);
            let a = 1.0 - t;
            let w0 = (a * a * a - a) * d * d / 6.0;
            let w1 = (t * t * t - t) * d * d / 6.0;
            out.x = a * xs[k] + t * xs[j] + w0 * mx[k] + w1 * mx[j];
            out.y = a * ys[k] + t * ys[j] + w0 * my[k] + w1 * my[j];
            out
        };
        let resampled: Vec<RawTrackPoint> = if closed {
            let count = ((total / opts.resample_step).round() as usize).max(4);
            let step = total / count as f64;
            (0..count).map(|i| interp_at(i as f64 * step)).collect()
        } else {
            let segs = ((total / opts.resample_step).round() as usize).max(3);
            let step = total / segs as f64;
            (0..=segs).map(|i| interp_at((i as f64 * step).min(total))).collect()
        };

        // Arc length from the re-sampled chords (unsmoothed positions).
        let n = resampled.len();
        let mut s = vec![0.0; n];
        for i in 1..n {
            s[i] = s[i - 1] + chord((resampled[i - 1].x, resampled[i - 1].y), (resampled[i].x, resampled[i].y));
        }
        let s_max = if closed {
            s[n - 1] + chord((resampled[n - 1].x, resampled[n - 1].y), (resampled[0].x, resampled[0].y))
        } else {
            s[n - 1]
        };

        // Heading and curvature from a smoothed copy of the positions.
        let w = opts.smooth_window.max(1);
        let half = w / 2;
        let smooth_xy: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                if w <= 1 {
                    return (resampled[i].x, resampled[i].y);
                }
                let mut acc = (0.0, 0.0);
                let mut cnt = 0.0;
                for off in -(half as isize)..=(half as isize) {
                    let j = if closed {
                        (i as isize + off).rem_euclid(n as isize) as usize
                    } else {
                        let j = i as isize + off;
                        if j < 0 || j >= n as isize {
                            continue;
                        }
                        j as usize
                    };
                    acc.0 += resampled[j].x;
                    acc.1 += resampled[j].y;
                    cnt += 1.0;
                }
                (acc.0 / cnt, acc.1 / cnt)
            })
            .collect();

        let seg_count = if closed { n } else { n - 1 };
        // Per-segment chord headings and lengths of the smoothed polyline.
        let mut seg_heading = vec![0.0; seg_count];
        let mut seg_len = vec![0.0; seg_count];
        for k in 0..seg_count {
            let a = smooth_xy[k];
            let b = smooth_xy[(k + 1) % n];
            seg_heading[k] = (b.1 - a.1).atan2(b.0 - a.0);
            seg_len[k] = chord(a, b).max(1e-12);
        }
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let (heading, kappa) = if closed {
                let prev = (i + seg_count - 1) % seg_count;
                let h = seg_heading[prev] + 0.5 * wrap_angle(seg_heading[i] - seg_heading[prev]);
                let k = wrap_angle(seg_heading[i] - seg_heading[prev]) / (0.5 * (seg_len[prev] + seg_len[i]));
                (wrap_angle(h), k)
            } else if i == 0 {
                (seg_heading[0], wrap_angle(seg_heading[1] - seg_heading[0]) / (0.5 * (seg_len[0] + seg_len[1])))
            } else if i == n - 1 {
                let k = wrap_angle(seg_heading[seg_count - 1] - seg_heading[seg_count - 2])
                    / (0.5 * (seg_len[seg_count - 2] + seg_len[seg_count - 1]));
                (seg_heading[seg_count - 1], k)
            } else {
                let prev = i - 1;
                let h = seg_heading[prev] + 0.5 * wrap_angle(seg_heading[i] - seg_heading[prev]);
                let k = wrap_angle(seg_heading[i] - seg_heading[prev]) / (0.5 * (seg_len[prev] + seg_len[i]));
                (wrap_angle(h), k)
            };
            samples.push(Sample {
                s: s[i],
                x: resampled[i].x,
                y: resampled[i].y,
                heading,
                kappa,
                n_min: resampled[i].n_min,
                n_max: resampled[i].n_max,
                a_z: resampled[i].a_z,
            });
        }

        Ok(Self { samples, s_max, closed })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Total centerline arc length [m]. For closed tracks this includes the
    /// closing segment, so sample `s` values all lie strictly below it.
    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    /// Wraps an arc-length coordinate into `[0, s_max)` on closed tracks;
    /// identity on open tracks.
    pub fn wrap_s(&self, s: f64) -> f64 {
        if !self.closed {
            return s;
        }
        let mut s = s % self.s_max;
        if s < 0.0 {
            s += self.s_max;
        }
        s
    }

    /// Signed wrapped difference `a - b`: on closed tracks the result lies in
    /// `(-s_max/2, s_max/2]`.
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

    /// Index of the segment containing `s` (after wrapping/clamping). The
    /// re-sampled spacing is near-uniform, so a direct guess plus a short
    /// walk is O(1).
    fn segment_index(&self, s: f64) -> usize {
        let n = self.samples.len();
        let seg_count = if self.closed { n } else { n - 1 };
        let mean = self.s_max / seg_count as f64;
        let mut k = ((s / mean) as isize).clamp(0, seg_count as isize - 1) as usize;
        loop {
            let lo = self.samples[k].s;
            let hi = if k + 1 < n { self.samples[k + 1].s } else { self.s_max };
            if s < lo && k > 0 {
                k -= 1;
            } else if s >= hi && k + 1 < seg_count {
                k += 1;
            } else {
                return k;
            }
        }
    }

    /// Interpolated track data at arc length `s`. Closed tracks wrap; open
    /// tracks accept `[0, s_max]` with a small epsilon and clamp.
    pub fn slice_at(&self, s: f64) -> Result<TrackSlice, TrackError> {
        if !s.is_finite() {
            return Err(TrackError::NonFinite);
        }
        let s = if self.closed {
            self.wrap_s(s)
        } else {
            if s < -1e-9 || s > self.s_max + 1e-9 {
                return Err(TrackError::OutOfRange { s, s_max: self.s_max });
            }
            s.clamp(0.0, self.s_max)
        };
        let k = self.segment_index(s);
        let n = self.samples.len();
        let a = &self.samples[k];
        let b = &self.samples[(k + 1) % n];
        let hi = if k + 1 < n { b.s } else { self.s_max };
        let len = (hi - a.s).max(1e-12);
        let t = ((s - a.s) / len).clamp(0.0, 1.0);
        Ok(TrackSlice {
            x: a.x + t * (b.x - a.x),
            y: a.y + t * (b.y - a.y),
            heading: wrap_angle(a.heading + t * wrap_angle(b.heading - a.heading)),
            kappa: a.kappa + t * (b.kappa - a.kappa),
            dkappa_ds: (b.kappa - a.kappa) / len,
            n_min: a.n_min + t * (b.n_min - a.n_min),
            n_max: a.n_max + t * (b.n_max - a.n_max),
            a_z: a.a_z + t * (b.a_z - a.a_z),
        })
    }

    /// Converts a Frenet position to Cartesian. Fails when the frame is
    /// degenerate (`|kappa * n| >= 1`, i.e. the offset reaches the local
    /// center of curvature).
    pub fn frenet_to_cartesian(&self, p: FrenetPoint) -> Result<CartesianPose, TrackError> {
        if !(p.s.is_finite() && p.n.is_finite()) {
            return Err(TrackError::NonFinite);
        }
        let slice = self.slice_at(p.s)?;
        let knl = (slice.kappa * p.n).abs();
        if knl >= 1.0 {
            return Err(TrackError::DegenerateFrame { s: p.s, knl });
        }
        let (sin_h, cos_h) = slice.heading.sin_cos();
        Ok(CartesianPose {
            x: slice.x - p.n * sin_h,
            y: slice.y + p.n * cos_h,
            heading: slice.heading,
        })
    }

    /// Projects a Cartesian point onto the centerline: coarse nearest-sample
    /// search, then Newton refinement of the tangential projection residual
    /// (tolerance 1e-9 m, at most 20 iterations). `corridor` bounds the
    /// accepted |n|.
    pub fn cartesian_to_frenet(&self, x: f64, y: f64, corridor: f64) -> Result<FrenetPoint, TrackError> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(TrackError::NonFinite);
        }
        let n_samples = self.samples.len();
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, sm) in self.samples.iter().enumerate() {
            let d = (x - sm.x) * (x - sm.x) + (y - sm.y) * (y - sm.y);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        let seg_count = if self.closed { n_samples } else { n_samples - 1 };
        let step = self.s_max / seg_count as f64;
        // Work in an unwrapped local coordinate around the nearest sample so
        // the seam of closed tracks needs no special cases.
        let eval = |s_local: f64| -> (f64, f64, f64) {
            // Tangential residual g, its derivative g', and the lateral
            // offset estimate at the (possibly unwrapped) coordinate.
            let slice = self.slice_at(if self.closed { self.wrap_s(s_local) } else { s_local }).unwrap();
            let (sin_h, cos_h) = slice.heading.sin_cos();
            let dx = x - slice.x;
            let dy = y - slice.y;
            let g = dx * cos_h + dy * sin_h;
            let n_est = -dx * sin_h + dy * cos_h;
            let gp = -1.0 + n_est * slice.kappa;
            (g, gp, n_est)
        };
        let mut s_local = self.samples[best].s;
        const MAX_ITER: usize = 20;
        for _ in 0..MAX_ITER {
            let (g, gp, n_est) = eval(s_local);
            let at_start = !self.closed && s_local <= 0.0 && g < 0.0;
            let at_end = !self.closed && s_local >= self.s_max && g > 0.0;
            if g.abs() < 1e-9 || at_start || at_end {
                let s = if self.closed { self.wrap_s(s_local) } else { s_local.clamp(0.0, self.s_max) };
                if n_est.abs() > corridor {
                    return Err(TrackError::OutOfCorridor { n: n_est, corridor, nearest_s: s });
                }
                return Ok(FrenetPoint { s, n: n_est });
            }
            // g' is about -1 + n*kappa, strictly negative inside the valid
            // corridor; fall back to a unit-slope step if it degenerates.
            let delta = if gp < -1e-3 { -g / gp } else { g };
            s_local += delta.clamp(-2.0 * step, 2.0 * step);
            if !self.closed {
                s_local = s_local.clamp(0.0, self.s_max);
            }
            if !s_local.is_finite() {
                break;
            }
        }
        Err(TrackError::NoConvergence { max_iter: MAX_ITER })
    }
}

fn lerp_raw(a: RawTrackPoint, b: RawTrackPoint, t: f64) -> RawTrackPoint {
    RawTrackPoint {
        x: a.x + t * (b.x - a.x),
        y: a.y + t * (b.y - a.y),
        n_min: a.n_min + t * (b.n_min - a.n_min),
        n_max: a.n_max + t * (b.n_max - a.n_max),
        a_z: a.a_z + t * (b.a_z - a.a_z),
    }
}

/// Solves a tridiagonal system in the usual three-band layout: row `i` reads
/// `sub[i-1]*x[i-1] + diag[i]*x[i] + sup[i]*x[i+1] = rhs[i]`. The spline
/// systems built here are strictly diagonally dominant, so no pivoting.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    debug_assert!(sub.len() == n - 1 && sup.len() == n - 1 && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    c[0] = if n > 1 { sup[0] / diag[0] } else { 0.0 };
    x[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = sup[i] / denom;
        }
        x[i] = (rhs[i] - sub[i - 1] * x[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// Second derivatives of the interpolating cubic spline through `y`.
/// `h[i]` is the knot spacing from `y[i]` to `y[i+1]`; a periodic spline
/// includes the closing spacing `y[last] -> y[0]`, an open one gets natural
/// ends. The periodic system is cyclic tridiagonal; the two corner entries
/// are folded in with a rank-one update and two plain solves.
fn spline_moments(y: &[f64], h: &[f64], periodic: bool) -> Vec<f64> {
    let m = y.len();
    if periodic {
        debug_assert_eq!(h.len(), m);
        let slope = |i: usize| (y[(i + 1) % m] - y[i]) / h[i];
        let mut sub = vec![0.0; m - 1];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m - 1];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            let prev = (i + m - 1) % m;
            diag[i] = (h[prev] + h[i]) / 3.0;
            rhs[i] = slope(i) - slope(prev);
            if i > 0 {
                sub[i - 1] = h[prev] / 6.0;
            }
            if i < m - 1 {
                sup[i] = h[i] / 6.0;
            }
        }
        // Corner entries: row 0 couples y[m-1] and row m-1 couples y[0],
        // both with weight h[m-1]/6.
        let corner = h[m - 1] / 6.0;
        let gamma = -diag[0];
        let mut diag_mod = diag;
        diag_mod[0] -= gamma;
        diag_mod[m - 1] -= corner * corner / gamma;
        let mut unit = vec![0.0; m];
        unit[0] = gamma;
        unit[m - 1] = corner;
        let base = thomas(&sub, &diag_mod, &sup, &rhs);
        let corr = thomas(&sub, &diag_mod, &sup, &unit);
        let factor = (base[0] + corner / gamma * base[m - 1]) / (1.0 + corr[0] + corner / gamma * corr[m - 1]);
        base.iter().zip(&corr).map(|(b, z)| b - factor * z).collect()
    } else {
        debug_assert_eq!(h.len(), m - 1);
        let n = m - 2;
        let slope = |i: usize| (y[i + 1] - y[i]) / h[i];
        let sub: Vec<f64> = (1..n).map(|j| h[j] / 6.0).collect();
        let diag: Vec<f64> = (0..n).map(|j| (h[j] + h[j + 1]) / 3.0).collect();
        let sup: Vec<f64> = (0..n - 1).map(|j| h[j + 1] / 6.0).collect();
        let rhs: Vec<f64> = (0..n).map(|j| slope(j + 1) - slope(j)).collect();
        let interior = thomas(&sub, &diag, &sup, &rhs);
        let mut out = vec![0.0; m];
        out[1..=n].copy_from_slice(&interior);
        out
    }
}

/// Parses a track CSV (`x,y,n_min,n_max[,a_z]`, `#` comments allowed) and
/// builds the geometry.
pub fn load_track<R: Read>(reader: R, opts: TrackLoadOptions) -> Result<TrackGeometry, TrackError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| TrackError::Parse { line: 1, msg: e.to_string() })?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let has_az = match cols.as_slice() {
        ["x", "y", "n_min", "n_max"] => false,
        ["x", "y", "n_min", "n_max", "a_z"] => true,
        _ => {
            return Err(TrackError::Parse { line: 1, msg: format!("expected header x,y,n_min,n_max[,a_z], got {}", cols.join(",")) });
        }
    };
    let mut points = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| TrackError::Parse { line, msg: e.to_string() })?;
        let field = |i: usize| -> Result<f64, TrackError> {
            rec.get(i)
                .ok_or_else(|| TrackError::Parse { line, msg: format!("missing column {i}") })?
                .parse::<f64>()
                .map_err(|e| TrackError::Parse { line, msg: e.to_string() })
        };
        points.push(RawTrackPoint {
            x: field(0)?,
            y: field(1)?,
            n_min: field(2)?,
            n_max: field(3)?,
            a_z: if has_az { field(4)? } else { DEFAULT_A_Z },
        });
    }
    TrackGeometry::from_points(&points, opts)
}

/// Convenience wrapper over [`load_track`] for a file path.
pub fn load_track_file<P: AsRef<Path>>(path: P, opts: TrackLoadOptions) -> Result<TrackGeometry, TrackError> {
    let f = std::fs::File::open(path)?;
    load_track(std::io::BufReader::new(f), opts)
}

/// Synthetic track builders shared by tests, benchmarks, and the bundled
/// assets.
pub mod synth {
    use super::*;

    /// Counter-clockwise circle of radius `r`; curvature is `+1/r`.
    pub fn circle_points(r: f64, half_width: f64, step_deg: f64) -> Vec<RawTrackPoint> {
        let n = (360.0 / step_deg).round() as usize;
        (0..n)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / n as f64;
                RawTrackPoint { x: r * a.cos(), y: r * a.sin(), n_min: -half_width, n_max: half_width, a_z: DEFAULT_A_Z }
            })
            .collect()
    }

    /// Straight segment along +x starting at the origin.
    pub fn straight_points(length: f64, half_width: f64, spacing: f64) -> Vec<RawTrackPoint> {
        let n = (length / spacing).round() as usize;
        (0..=n)
            .map(|i| RawTrackPoint {
                x: length * i as f64 / n as f64,
                y: 0.0,
                n_min: -half_width,
                n_max: half_width,
                a_z: DEFAULT_A_Z,
            })
            .collect()
    }

    /// Stadium oval: two straights of `straight_len` joined by 180-degree
    /// arcs of radius `r`, traversed counter-clockwise.
    pub fn speedway_points(straight_len: f64, r: f64, half_width: f64, spacing: f64) -> Vec<RawTrackPoint> {
        let mut pts = Vec::new();
        let arc_len = std::f64::consts::PI * r;
        let total = 2.0 * straight_len + 2.0 * arc_len;
        let n = (total / spacing).round() as usize;
        for i in 0..n {
            let d = total * i as f64 / n as f64;
            let (x, y) = if d < straight_len {
                (d, -r)
            } else if d < straight_len + arc_len {
                let a = (d - straight_len) / r;
                (straight_len + r * a.sin(), -r * a.cos())
            } else if d < 2.0 * straight_len + arc_len {
                (straight_len - (d - straight_len - arc_len), r)
            } else {
                let a = (d - 2.0 * straight_len - arc_len) / r;
                (-r * a.sin(), r * a.cos())
            };
            pts.push(RawTrackPoint { x, y, n_min: -half_width, n_max: half_width, a_z: DEFAULT_A_Z });
        }
        pts
    }

    /// Writes points in the track CSV format understood by [`load_track`].
    pub fn write_track_csv<W: std::io::Write>(mut w: W, points: &[RawTrackPoint]) -> std::io::Result<()> {
        writeln!(w, "x,y,n_min,n_max,a_z")?;
        for p in points {
            writeln!(w, "{},{},{},{},{}", p.x, p.y, p.n_min, p.n_max, p.a_z)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_str(csv: &str, opts: TrackLoadOptions) -> Result<TrackGeometry, TrackError> {
        load_track(csv.as_bytes(), opts)
    }

    #[test]
    fn unit_square_is_closed_with_perimeter_arc_length() {
        // Unit-square perimeter traced at 0.25 m spacing; the corners are
        // input vertices, so the default 1 m re-sampling lands on them and
        // the chord arc length is the exact perimeter.
        let mut pts = Vec::new();
        for side in 0..4 {
            for step in 0..4 {
                let d = step as f64 * 0.25;
                let (x, y) = match side {
                    0 => (d, 0.0),
                    1 => (1.0, d),
                    2 => (1.0 - d, 1.0),
                    _ => (0.0, 1.0 - d),
                };
                pts.push(RawTrackPoint { x, y, n_min: -0.2, n_max: 0.2, a_z: DEFAULT_A_Z });
            }
        }
        let mut csv = Vec::new();
        synth::write_track_csv(&mut csv, &pts).unwrap();
        let t = load_track(csv.as_slice(), TrackLoadOptions::default()).unwrap();
        assert!(t.closed());
        assert!((t.s_max() - 4.0).abs() < 1e-12, "s_max = {}", t.s_max());
        let last = t.samples().last().unwrap();
        assert!(last.s < t.s_max());
    }

    #[test]
    fn straight_track_is_open_with_zero_curvature() {
        let pts = synth::straight_points(100.0, 3.0, 0.5);
        let t = TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        assert!(!t.closed());
        assert!((t.s_max() - 100.0).abs() < 1e-9);
        for sm in t.samples() {
            assert!(sm.kappa.abs() < 1e-9, "kappa = {} at s = {}", sm.kappa, sm.s);
        }
        // Open tracks keep the endpoint sample.
        assert!((t.samples().last().unwrap().s - t.s_max()).abs() < 1e-12);
    }

    #[test]
    fn circle_curvature_within_tolerance() {
        let pts = synth::circle_points(50.0, 3.0, 1.0);
        let t = TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        assert!(t.closed());
        for sm in t.samples() {
            assert!((sm.kappa - 0.02).abs() < 1e-3, "kappa = {}", sm.kappa);
        }
    }

    #[test]
    fn coarse_circle_input_keeps_accurate_curvature() {
        // Input vertices 1.7 m apart re-sampled at 1 m: the spline read-off
        // must not alias the vertex chords into curvature ripple.
        let pts = synth::circle_points(100.0, 5.0, 1.0);
        let t = TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        for sm in t.samples() {
            assert!((sm.kappa - 0.01).abs() < 1e-5, "kappa = {} at s = {}", sm.kappa, sm.s);
        }
    }

    #[test]
    fn duplicated_closing_point_is_dropped() {
        let mut pts = synth::circle_points(30.0, 3.0, 2.0);
        pts.push(pts[0]);
        let t = TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        assert!(t.closed());
        let expected = std::f64::consts::TAU * 30.0;
        assert!((t.s_max() - expected).abs() / expected < 1e-3, "s_max = {}", t.s_max());
    }

    #[test]
    fn inside_of_ccw_circle_has_positive_offset() {
        let pts = synth::circle_points(50.0, 5.0, 1.0);
        let t = TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        // A point at radius 48 lies toward the center, i.e. left of travel.
        let p = t.cartesian_to_frenet(48.0, 0.0, 10.0).unwrap();
        assert!((p.n - 2.0).abs() < 1e-2, "n = {}", p.n);
    }

    #[test]
    fn frenet_round_trip_is_tight() {
        let pts = synth::circle_points(50.0, 5.0, 1.0);
        let t = TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        for &(s, n) in &[(0.0, 0.0), (10.0, 2.0), (100.0, -3.0), (260.0, 4.9), (313.0, -4.9), (157.0, 0.001)] {
            let pose = t.frenet_to_cartesian(FrenetPoint { s, n }).unwrap();
            let back = t.cartesian_to_frenet(pose.x, pose.y, 10.0).unwrap();
            assert!(t.s_delta(back.s, s).abs() < 1e-6, "s: {} -> {}", s, back.s);
            assert!((back.n - n).abs() < 1e-6, "n: {} -> {}", n, back.n);
        }
    }

    #[test]
    fn arc_length_parameterization_matches_distance() {
        let pts = synth::circle_points(50.0, 5.0, 1.0);
        let t = TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        let ds = 1e-3;
        for &s in &[0.0, 13.7, 200.2, 310.0] {
            let a = t.frenet_to_cartesian(FrenetPoint { s, n: 0.0 }).unwrap();
            let b = t.frenet_to_cartesian(FrenetPoint { s: s + ds, n: 0.0 }).unwrap();
            let d = (b.x - a.x).hypot(b.y - a.y);
            assert!((d - ds).abs() / ds < 0.01, "moved {} for ds {}", d, ds);
        }
    }

    #[test]
    fn closed_track_wraps_arc_length() {
        let pts = synth::circle_points(50.0, 5.0, 1.0);
        let t = TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        let a = t.frenet_to_cartesian(FrenetPoint { s: 5.0, n: 1.0 }).unwrap();
        let b = t.frenet_to_cartesian(FrenetPoint { s: t.s_max() + 5.0, n: 1.0 }).unwrap();
        assert!((a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9);
    }

    #[test]
    fn degenerate_frame_is_rejected() {
        let pts = synth::circle_points(50.0, 5.0, 1.0);
        let t = TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        let err = t.frenet_to_cartesian(FrenetPoint { s: 10.0, n: 55.0 }).unwrap_err();
        assert!(matches!(err, TrackError::DegenerateFrame { .. }), "{err}");
    }

    #[test]
    fn out_of_corridor_reports_nearest_s() {
        let pts = synth::straight_points(100.0, 3.0, 1.0);
        let t = TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        let err = t.cartesian_to_frenet(40.0, 25.0, 10.0).unwrap_err();
        match err {
            TrackError::OutOfCorridor { nearest_s, n, .. } => {
                assert!((nearest_s - 40.0).abs() < 0.6, "nearest_s = {nearest_s}");
                assert!((n - 25.0).abs() < 0.1);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let bad_value = "x,y,n_min,n_max\n0,0,-1,1\n1,zero,-1,1\n2,0,-1,1\n3,0,-1,1\n";
        assert!(matches!(load_str(bad_value, TrackLoadOptions::default()), Err(TrackError::Parse { line: 3, .. })));

        let too_few = "x,y,n_min,n_max\n0,0,-1,1\n1,0,-1,1\n2,0,-1,1\n";
        assert!(matches!(load_str(too_few, TrackLoadOptions::default()), Err(TrackError::TooFewPoints { count: 3 })));

        let bad_bounds = "x,y,n_min,n_max\n0,0,-1,1\n1,0,1,2,\n2,0,-1,1\n3,0,-1,1\n";
        assert!(load_str(bad_bounds, TrackLoadOptions::default()).is_err());

        let bad_header = "x,y,left,right\n0,0,-1,1\n1,0,-1,1\n2,0,-1,1\n3,0,-1,1\n";
        assert!(matches!(load_str(bad_header, TrackLoadOptions::default()), Err(TrackError::Parse { line: 1, .. })));
    }

    #[test]
    fn a_z_column_is_parsed_and_defaulted() {
        let with = "x,y,n_min,n_max,a_z\n0,0,-1,1,12.0\n10,0,-1,1,12.0\n20,0,-1,1,12.0\n30,0,-1,1,12.0\n";
        let t = load_str(with, TrackLoadOptions { closed: Some(false), ..Default::default() }).unwrap();
        assert!((t.slice_at(15.0).unwrap().a_z - 12.0).abs() < 1e-9);

        let without = "x,y,n_min,n_max\n0,0,-1,1\n10,0,-1,1\n20,0,-1,1\n30,0,-1,1\n";
        let t = load_str(without, TrackLoadOptions { closed: Some(false), ..Default::default() }).unwrap();
        assert!((t.slice_at(15.0).unwrap().a_z - DEFAULT_A_Z).abs() < 1e-9);
    }

    #[test]
    fn comments_are_ignored() {
        let csv = "x,y,n_min,n_max\n# a comment\n0,0,-1,1\n1,0,-1,1\n# another\n2,0,-1,1\n3,0,-1,1\n";
        load_str(csv, TrackLoadOptions { closed: Some(false), ..Default::default() }).unwrap();
    }

    #[test]
    fn speedway_has_straights_and_arcs() {
        let pts = synth::speedway_points(700.0, 130.0, 6.0, 2.0);
        let t = TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        assert!(t.closed());
        let expected = 2.0 * 700.0 + 2.0 * std::f64::consts::PI * 130.0;
        assert!((t.s_max() - expected).abs() / expected < 2e-3, "s_max = {}", t.s_max());
        // Mid-straight is straight, mid-turn curvature is about 1/130.
        assert!(t.slice_at(350.0).unwrap().kappa.abs() < 1e-4);
        let mid_turn = 700.0 + 0.5 * std::f64::consts::PI * 130.0;
        let k = t.slice_at(mid_turn).unwrap().kappa;
        assert!((k - 1.0 / 130.0).abs() < 4e-4, "kappa = {k}");
    }
}
