//! Minimum-time velocity profile along a fixed path.
//!
//! Classic quasi-steady decomposition: cap each layer's speed by lateral
//! grip, then sweep forward (traction-limited) and backward (braking-limited)
//! until nothing changes. Every per-layer bound is evaluated against the
//! *effective* envelope — base limits at (v, a_z) scaled by the local grip
//! factor — so the profile automatically slows where the map says grip is
//! poor. Closed tracks are solved on the ring (the duplicated closing layer
//! is dropped, then restored), with sweeps anchored at the slowest layer so
//! the wrap seam is exact by construction.

use super::{RacelineError, RacelinePath, SpeedProfile};
use crate::gggv::GggvModel;
use crate::gripmap::{GripMap, SWrap};
use crate::track::{FrenetPoint, TrackGeometry};

#[derive(Debug, Clone)]
pub struct SpeedProfileOptions {
    /// Layers whose grip-limited speed falls below this are reported
    /// infeasible instead of crawled through [m/s].
    pub v_floor: f64,
    /// Hard bound on sweep repetitions before giving up.
    pub max_passes: usize,
    /// Fixed-point tolerance on per-layer speed change [m/s].
    pub tol: f64,
    /// Entry speed for open tracks (ignored on closed tracks); `None`
    /// means a flying start at the local limit.
    pub v_start: Option<f64>,
    /// Exit speed bound for open tracks (ignored on closed tracks).
    pub v_end: Option<f64>,
}

impl Default for SpeedProfileOptions {
    fn default() -> Self {
        Self { v_floor: 0.1, max_passes: 200, tol: 1e-9, v_start: None, v_end: None }
    }
}

struct LayerData {
    s: f64,
    kappa: f64,
    theta: f64,
    a_z: f64,
    x: f64,
    y: f64,
}

pub fn speed_profile(
    track: &TrackGeometry,
    path: &RacelinePath,
    model: &GggvModel,
    grid: &GripMap,
) -> Result<SpeedProfile, RacelineError> {
    speed_profile_with(track, path, model, grid, &SpeedProfileOptions::default())
}

pub fn speed_profile_with(
    track: &TrackGeometry,
    path: &RacelinePath,
    model: &GggvModel,
    grid: &GripMap,
    opts: &SpeedProfileOptions,
) -> Result<SpeedProfile, RacelineError> {
    path.validate(track)?;
    model.validate()?;
    if (grid.s_max() - track.s_max()).abs() > 1e-6 {
        return Err(RacelineError::Config(format!(
            "grip map covers s_max = {:.3} but the track has s_max = {:.3}",
            grid.s_max(),
            track.s_max()
        )));
    }
    // A layer in every map slice, or low-grip cells could be stepped over.
    let delta_s = grid.delta_s();
    for w in path.layers.windows(2) {
        let spacing = w[1].s - w[0].s;
        if spacing > delta_s * (1.0 + 1e-9) {
            return Err(RacelineError::SpacingTooCoarse { spacing, delta_s });
        }
    }

    let wrap = SWrap::for_track(track);
    let p = model.shape_exponent;
    let layers: Vec<LayerData> = path
        .layers
        .iter()
        .map(|l| {
            let s_w = track.wrap_s(l.s);
            let slice = track.slice_at(s_w)?;
            let pose = track.frenet_to_cartesian(FrenetPoint { s: s_w, n: l.n })?;
            Ok(LayerData {
                s: l.s,
                kappa: l.kappa_path,
                theta: grid.theta_at(l.s, l.n, wrap)?,
                a_z: slice.a_z,
                x: pose.x,
                y: pose.y,
            })
        })
        .collect::<Result<_, RacelineError>>()?;

    let count = layers.len();
    let seg: Vec<f64> = layers
        .windows(2)
        .map(|w| ((w[1].x - w[0].x).powi(2) + (w[1].y - w[0].y).powi(2)).sqrt())
        .collect();
    if let Some(k) = seg.iter().position(|&l| l < 1e-9) {
        return Err(RacelineError::Config(format!("layers {} and {} are coincident in the plane", k, k + 1)));
    }

    let ring = path.closed;
    // Solver nodes: the closing duplicate collapses onto node 0 on a ring.
    let m = if ring { count - 1 } else { count };

    let mut cap = vec![0.0; m];
    for (k, d) in layers.iter().take(m).enumerate() {
        if d.kappa.abs() > model.kappa_max {
            return Err(RacelineError::InfeasibleLayer {
                layer: k,
                s: d.s,
                detail: format!(
                    "path curvature {:.4} 1/m exceeds the steering limit {:.4} 1/m",
                    d.kappa.abs(),
                    model.kappa_max
                ),
            });
        }
        let c = curvature_cap(model, d)?;
        if c < opts.v_floor {
            return Err(RacelineError::InfeasibleLayer {
                layer: k,
                s: d.s,
                detail: format!(
                    "grip-limited corner speed {:.3} m/s is below the floor {:.3} m/s (theta = {:.3})",
                    c, opts.v_floor, d.theta
                ),
            });
        }
        cap[k] = c;
    }

    let mut v = cap.clone();
    if !ring {
        if let Some(v0) = opts.v_start {
            v[0] = v[0].min(v0.max(0.0));
        }
        if let Some(ve) = opts.v_end {
            v[m - 1] = v[m - 1].min(ve.max(0.0));
        }
    }

    // The slowest corner anchors ring sweeps; every other speed is
    // reachable from it, so two trips around settle the seam.
    let start = cap
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(k, _)| k)
        .unwrap_or(0);

    let mut converged = false;
    for _ in 0..opts.max_passes {
        let mut delta: f64 = 0.0;

        // Forward: traction remainder at the upstream layer.
        let fwd_steps = if ring { 2 * m } else { m - 1 };
        for cnt in 0..fwd_steps {
            let k = if ring { (start + cnt) % m } else { cnt };
            let next = if ring { (k + 1) % m } else { k + 1 };
            let avail = ax_remainder(model, &layers[k], v[k], false, p)?.max(0.0);
            let reach = (v[k] * v[k] + 2.0 * avail * seg[k]).sqrt();
            if reach < v[next] {
                delta = delta.max(v[next] - reach);
                v[next] = reach;
            }
        }

        // Backward: braking remainder at the layer that starts the braking
        // segment, evaluated at its own (implicit) speed so the reported
        // per-layer accelerations stay inside that layer's envelope.
        let bwd_steps = if ring { 2 * m } else { m - 1 };
        for cnt in 0..bwd_steps {
            let k = if ring {
                ((start as i64 - 1 - cnt as i64).rem_euclid(m as i64)) as usize
            } else {
                m - 2 - cnt
            };
            let next = if ring { (k + 1) % m } else { k + 1 };
            let bound = brake_bound(model, &layers[k], v[next], cap[k], seg[k], p)?;
            if bound < v[k] {
                delta = delta.max(v[k] - bound);
                v[k] = bound;
            }
        }

        if delta < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(RacelineError::NoConvergence { iterations: opts.max_passes });
    }

    // Restore the closing duplicate and derive accelerations/times from the
    // discrete profile: ax over the outgoing segment, ay from the local
    // curvature, dt from the trapezoidal speed over each chord.
    let vfull: Vec<f64> = (0..count).map(|k| if ring && k == count - 1 { v[0] } else { v[k] }).collect();
    let segs = count - 1;
    let mut ax = vec![0.0; count];
    for k in 0..segs {
        ax[k] = (vfull[k + 1] * vfull[k + 1] - vfull[k] * vfull[k]) / (2.0 * seg[k]);
    }
    ax[count - 1] = if ring { ax[0] } else { 0.0 };
    let ay: Vec<f64> = (0..count).map(|k| vfull[k] * vfull[k] * layers[k].kappa).collect();
    let mut t = vec![0.0; count];
    for k in 0..segs {
        t[k + 1] = t[k] + 2.0 * seg[k] / (vfull[k] + vfull[k + 1]);
    }
    Ok(SpeedProfile { v: vfull, ax, ay, t })
}

/// Largest speed whose centripetal demand fits the effective lateral limit:
/// bisection on v²·κ − θ·ay_max(v, a_z) over [0, v_max]. Shared by the
/// profile solver and the lattice optimizer's per-segment speed estimate.
pub(crate) fn lateral_cap(model: &GggvModel, kappa_abs: f64, theta: f64, a_z: f64) -> Result<f64, RacelineError> {
    if kappa_abs < 1e-12 {
        return Ok(model.v_max);
    }
    let excess = |v: f64| -> Result<f64, RacelineError> {
        let lim = model.base_limits(v, a_z)?;
        Ok(v * v * kappa_abs - theta * lim.ay_max)
    };
    if excess(model.v_max)? <= 0.0 {
        return Ok(model.v_max);
    }
    let (mut lo, mut hi) = (0.0, model.v_max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn curvature_cap(model: &GggvModel, d: &LayerData) -> Result<f64, RacelineError> {
    lateral_cap(model, d.kappa.abs(), d.theta, d.a_z)
}

/// Longitudinal acceleration left over at a layer once the centripetal
/// share v²·κ is spent, under the effective (grip-scaled) envelope.
fn ax_remainder(model: &GggvModel, d: &LayerData, v: f64, braking: bool, p: f64) -> Result<f64, RacelineError> {
    let lim = model.base_limits(v, d.a_z)?.scaled(d.theta);
    Ok(lim.ax_available(v * v * d.kappa, braking, p))
}

/// Highest entry speed at a layer from which the next layer's speed is
/// reachable under braking. Implicit in the entry speed (faster entry both
/// needs more braking and leaves less of the envelope for it); solved by
/// bisection on the energy balance, which is increasing in the entry speed.
fn brake_bound(
    model: &GggvModel,
    d: &LayerData,
    v_next: f64,
    cap: f64,
    seg_len: f64,
    p: f64,
) -> Result<f64, RacelineError> {
    let deficit = |v: f64| -> Result<f64, RacelineError> {
        let brake = ax_remainder(model, d, v, true, p)?.max(0.0);
        Ok(v * v - v_next * v_next - 2.0 * brake * seg_len)
    };
    if deficit(cap)? <= 0.0 {
        return Ok(cap);
    }
    let (mut lo, mut hi) = (v_next.min(cap), cap);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if deficit(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
