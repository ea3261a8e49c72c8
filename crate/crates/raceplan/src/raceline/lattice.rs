//! Minimum-time path search on a lateral-offset lattice.
//!
//! The lap is cut into uniform stations; each station carries a small set of
//! lateral offset candidates spanning the corridor. Every station-to-station
//! transition gets a stage cost — traversal time from a segment-local
//! quasi-steady speed estimate under the grip map, plus a smoothness penalty
//! on the heading change at each node — and a dynamic program finds the
//! cheapest chain. The smoothness term needs the previous segment's heading,
//! so the DP state is the (previous, current) offset pair. On closed tracks
//! periodicity couples the seam node's smoothness to both the first and last
//! segment; that is handled exactly by solving one DP per (first, second)
//! offset pair and taking the overall minimum, which subsumes the
//! per-start-offset sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::speed::{lateral_cap, speed_profile_with, SpeedProfileOptions};
use super::{PathLayer, RacelineError, RacelinePath, RacelineResult};
use crate::gggv::GggvModel;
use crate::gripmap::{GripMap, SWrap};
use crate::track::{wrap_angle, FrenetPoint, TrackGeometry};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RacelineConfig {
    /// Station spacing along the lap [m]; rounded so stations divide the lap.
    pub layer_step: f64,
    /// Lateral offset candidates per station (≥ 3).
    pub n_candidates: usize,
    /// Weight on squared heading change per node [s/rad²].
    pub smooth_weight: f64,
    /// Corridor shrink on both sides before placing offsets [m].
    pub margin: f64,
    /// Microscopic stage-cost bias toward the centerline [s]; exists only to
    /// break exact ties (e.g. on a straight, where every parallel line costs
    /// the same) deterministically toward n = 0. Part of the objective, so
    /// exhaustive-enumeration checks see it too.
    pub center_bias: f64,
}

impl Default for RacelineConfig {
    fn default() -> Self {
        Self { layer_step: 2.0, n_candidates: 9, smooth_weight: 0.1, margin: 0.0, center_bias: 1e-7 }
    }
}

impl RacelineConfig {
    pub fn validate(&self) -> Result<(), RacelineError> {
        if !(self.layer_step.is_finite() && self.layer_step > 0.0) {
            return Err(RacelineError::Config(format!("layer_step must be positive, got {}", self.layer_step)));
        }
        if self.n_candidates < 3 || self.n_candidates > 1024 {
            return Err(RacelineError::Config(format!("n_candidates must be in [3, 1024], got {}", self.n_candidates)));
        }
        if !(self.smooth_weight.is_finite() && self.smooth_weight >= 0.0) {
            return Err(RacelineError::Config(format!("smooth_weight must be ≥ 0, got {}", self.smooth_weight)));
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(RacelineError::Config(format!("margin must be ≥ 0, got {}", self.margin)));
        }
        if !(self.center_bias.is_finite() && self.center_bias >= 0.0) {
            return Err(RacelineError::Config(format!("center_bias must be ≥ 0, got {}", self.center_bias)));
        }
        Ok(())
    }
}

/// Per-segment transition tables, `k_off × k_off` entries indexed `a·K + b`.
/// Invalid transitions carry `time = +inf`.
struct SegTable {
    time: Vec<f64>,
    psi: Vec<f64>,
    len: Vec<f64>,
}

/// Precomputed lattice geometry and stage costs. The DP core runs on this
/// alone, which keeps it testable against doctored instances.
pub(crate) struct Lattice {
    closed: bool,
    k_off: usize,
    node_s: Vec<f64>,
    node_ref_heading: Vec<f64>,
    /// Offset values per node layer (outer) and candidate (inner).
    offs: Vec<Vec<f64>>,
    seg: Vec<SegTable>,
}

const DEGENERACY_FLOOR: f64 = 0.05;

pub(crate) fn build_lattice(
    track: &TrackGeometry,
    model: &GggvModel,
    grid: &GripMap,
    cfg: &RacelineConfig,
) -> Result<Lattice, RacelineError> {
    cfg.validate()?;
    model.validate()?;
    if (grid.s_max() - track.s_max()).abs() > 1e-6 {
        return Err(RacelineError::Config(format!(
            "grip map covers s_max = {:.3} but the track has s_max = {:.3}",
            grid.s_max(),
            track.s_max()
        )));
    }
    let closed = track.closed();
    let r = (track.s_max() / cfg.layer_step).round() as i64;
    let min_r: i64 = if closed { 3 } else { 2 };
    if r < min_r {
        return Err(RacelineError::Config(format!(
            "layer_step = {} leaves only {} stations on a {:.1} m track (need ≥ {})",
            cfg.layer_step,
            r.max(0),
            track.s_max(),
            min_r
        )));
    }
    let r = r as usize;
    let step = track.s_max() / r as f64;
    if step > grid.delta_s() * (1.0 + 1e-9) {
        return Err(RacelineError::SpacingTooCoarse { spacing: step, delta_s: grid.delta_s() });
    }

    let wrap = SWrap::for_track(track);
    let k = cfg.n_candidates;
    let node_layers = if closed { r } else { r + 1 };
    let mut node_s = Vec::with_capacity(node_layers);
    let mut node_ref_heading = Vec::with_capacity(node_layers);
    let mut offs: Vec<Vec<f64>> = Vec::with_capacity(node_layers);
    let mut pos: Vec<Vec<Option<(f64, f64)>>> = Vec::with_capacity(node_layers);
    for kl in 0..node_layers {
        let s = if !closed && kl == r { track.s_max() } else { kl as f64 * step };
        let s_w = track.wrap_s(s);
        let slice = track.slice_at(s_w)?;
        let lo = slice.n_min + cfg.margin;
        let hi = slice.n_max - cfg.margin;
        if lo > hi {
            return Err(RacelineError::Config(format!(
                "margin {} swallows the corridor [{:.2}, {:.2}] at s = {:.1}",
                cfg.margin, slice.n_min, slice.n_max, s
            )));
        }
        let row_offs: Vec<f64> = (0..k).map(|a| lo + (hi - lo) * a as f64 / (k - 1) as f64).collect();
        // An offset too close to the curvature center has no usable frame;
        // such candidates are simply absent at this station.
        let row_pos: Vec<Option<(f64, f64)>> = row_offs
            .iter()
            .map(|&n| track.frenet_to_cartesian(FrenetPoint { s: s_w, n }).ok().map(|p| (p.x, p.y)))
            .collect();
        if row_pos.iter().all(|p| p.is_none()) {
            return Err(RacelineError::NoTransition { layer: kl, s });
        }
        node_s.push(s);
        node_ref_heading.push(slice.heading);
        offs.push(row_offs);
        pos.push(row_pos);
    }

    let mut seg = Vec::with_capacity(r);
    for t in 0..r {
        let from = t;
        let to = if closed { (t + 1) % node_layers } else { t + 1 };
        let mid_s = (t as f64 + 0.5) * step;
        let mid = track.slice_at(track.wrap_s(mid_s))?;
        let mut time = vec![f64::INFINITY; k * k];
        let mut psi = vec![0.0; k * k];
        let mut len = vec![0.0; k * k];
        let mut any = false;
        let mut coarse = false;
        for a in 0..k {
            let Some((x0, y0)) = pos[from][a] else { continue };
            for b in 0..k {
                let Some((x1, y1)) = pos[to][b] else { continue };
                let (dx, dy) = (x1 - x0, y1 - y0);
                let l = dx.hypot(dy);
                if l < 1e-9 {
                    continue;
                }
                let heading = dy.atan2(dx);
                let chi = wrap_angle(heading - mid.heading);
                if chi.abs() > std::f64::consts::FRAC_PI_2 {
                    if a == b {
                        coarse = true;
                    }
                    continue;
                }
                let n_bar = 0.5 * (offs[from][a] + offs[to][b]);
                let denom = 1.0 - n_bar * mid.kappa;
                if denom <= DEGENERACY_FLOOR {
                    continue;
                }
                // Offset-line curvature at the segment midpoint stands in
                // for the driven curvature of this transition.
                let kappa_est = (mid.kappa / denom).abs();
                let theta = grid.theta_at(mid_s, n_bar, wrap)?;
                let v_est = lateral_cap(model, kappa_est, theta, mid.a_z)?;
                if v_est < 1e-6 {
                    continue;
                }
                let idx = a * k + b;
                time[idx] = l / v_est + cfg.center_bias * (n_bar / grid.w_max()).powi(2);
                psi[idx] = heading;
                len[idx] = l;
                any = true;
            }
        }
        if coarse {
            return Err(RacelineError::Config(format!(
                "lattice too coarse: a straight-across segment near s = {mid_s:.1} turns more than pi/2; reduce layer_step"
            )));
        }
        if !any {
            return Err(RacelineError::NoTransition { layer: to, s: node_s[to] });
        }
        seg.push(SegTable { time, psi, len });
    }
    Ok(Lattice { closed, k_off: k, node_s, node_ref_heading, offs, seg })
}

/// Total objective of a caller-chosen offset-index sequence under the same
/// stage costs the optimizer minimizes (`+inf` if any transition is
/// invalid). Lets exhaustive enumeration and what-if tooling score paths on
/// equal footing with the DP.
pub fn evaluate_offsets(
    track: &TrackGeometry,
    model: &GggvModel,
    grid: &GripMap,
    cfg: &RacelineConfig,
    offsets: &[usize],
) -> Result<f64, RacelineError> {
    let lat = build_lattice(track, model, grid, cfg)?;
    lattice_path_cost(&lat, cfg.smooth_weight, offsets)
}

pub(crate) fn lattice_path_cost(lat: &Lattice, smooth_weight: f64, offsets: &[usize]) -> Result<f64, RacelineError> {
    let r = lat.seg.len();
    let nodes = if lat.closed { r } else { r + 1 };
    if offsets.len() != nodes {
        return Err(RacelineError::Config(format!("expected {} offsets, got {}", nodes, offsets.len())));
    }
    if let Some(&bad) = offsets.iter().find(|&&a| a >= lat.k_off) {
        return Err(RacelineError::Config(format!("offset index {} out of range (< {})", bad, lat.k_off)));
    }
    let k = lat.k_off;
    let mut total = 0.0;
    let mut psi = Vec::with_capacity(r);
    for t in 0..r {
        let a = offsets[t];
        let b = offsets[if lat.closed { (t + 1) % r } else { t + 1 }];
        let time = lat.seg[t].time[a * k + b];
        if !time.is_finite() {
            return Ok(f64::INFINITY);
        }
        total += time;
        psi.push(lat.seg[t].psi[a * k + b]);
    }
    if lat.closed {
        for kl in 0..r {
            let d = wrap_angle(psi[kl] - psi[(kl + r - 1) % r]);
            total += smooth_weight * d * d;
        }
    } else {
        for t in 1..r {
            let d = wrap_angle(psi[t] - psi[t - 1]);
            total += smooth_weight * d * d;
        }
    }
    Ok(total)
}

pub(crate) fn solve_dp(lat: &Lattice, smooth_weight: f64) -> Result<(Vec<usize>, f64), RacelineError> {
    if lat.closed {
        solve_closed(lat, smooth_weight)
    } else {
        solve_open(lat, smooth_weight)
    }
}

/// Rolls the (prev, cur) state table across one segment. `cost[p·K + c]` is
/// the best prefix ending with offsets (p, c); the roll adds segment `t`'s
/// time and the node smoothness between segments `t - 1` and `t`, recording
/// argmin backpointers.
fn roll(
    lat: &Lattice,
    smooth_weight: f64,
    t: usize,
    cost: &[f64],
) -> (Vec<f64>, Vec<u16>) {
    let k = lat.k_off;
    let st = &lat.seg[t];
    let sp = &lat.seg[t - 1];
    let mut next = vec![f64::INFINITY; k * k];
    let mut bp = vec![u16::MAX; k * k];
    for c in 0..k {
        for n in 0..k {
            let idx_cn = c * k + n;
            let t_cn = st.time[idx_cn];
            if !t_cn.is_finite() {
                continue;
            }
            let psi_cn = st.psi[idx_cn];
            let mut best = f64::INFINITY;
            let mut best_p = u16::MAX;
            for p in 0..k {
                let base = cost[p * k + c];
                if !base.is_finite() {
                    continue;
                }
                let d = wrap_angle(psi_cn - sp.psi[p * k + c]);
                let v = base + t_cn + smooth_weight * d * d;
                if v < best {
                    best = v;
                    best_p = p as u16;
                }
            }
            if best_p != u16::MAX {
                next[idx_cn] = best;
                bp[idx_cn] = best_p;
            }
        }
    }
    (next, bp)
}

fn solve_open(lat: &Lattice, smooth_weight: f64) -> Result<(Vec<usize>, f64), RacelineError> {
    let k = lat.k_off;
    let r = lat.seg.len();
    let mut cost = lat.seg[0].time.clone();
    let mut bps: Vec<Vec<u16>> = Vec::with_capacity(r - 1);
    for t in 1..r {
        let (next, bp) = roll(lat, smooth_weight, t, &cost);
        cost = next;
        bps.push(bp);
    }
    let mut best = f64::INFINITY;
    let mut best_state = None;
    for p in 0..k {
        for c in 0..k {
            let v = cost[p * k + c];
            if v < best {
                best = v;
                best_state = Some((p, c));
            }
        }
    }
    let (p, c) = best_state.ok_or(RacelineError::NoTransition { layer: r, s: lat.node_s[r] })?;
    let mut off = vec![0usize; r + 1];
    off[r] = c;
    off[r - 1] = p;
    for t in (1..r).rev() {
        off[t - 1] = bps[t - 1][off[t] * k + off[t + 1]] as usize;
    }
    Ok((off, best))
}

fn solve_closed(lat: &Lattice, smooth_weight: f64) -> Result<(Vec<usize>, f64), RacelineError> {
    let k = lat.k_off;
    let pairs: Vec<(usize, usize)> = (0..k * k).map(|i| (i / k, i % k)).collect();
    let solutions: Vec<Option<(f64, Vec<usize>)>> = pairs
        .par_iter()
        .map(|&(a0, a1)| solve_closed_pair(lat, smooth_weight, a0, a1))
        .collect();
    // Sequential argmin in pair order: deterministic no matter how the
    // parallel solves were scheduled.
    let mut best: Option<&(f64, Vec<usize>)> = None;
    for sol in solutions.iter().flatten() {
        if best.map_or(true, |b| sol.0 < b.0) {
            best = Some(sol);
        }
    }
    match best {
        Some((cost, off)) => Ok((off.clone(), *cost)),
        None => Err(RacelineError::NoTransition { layer: 0, s: 0.0 }),
    }
}

fn solve_closed_pair(lat: &Lattice, smooth_weight: f64, a0: usize, a1: usize) -> Option<(f64, Vec<usize>)> {
    let k = lat.k_off;
    let r = lat.seg.len();
    let t0 = lat.seg[0].time[a0 * k + a1];
    if !t0.is_finite() {
        return None;
    }
    let mut cost = vec![f64::INFINITY; k * k];
    cost[a0 * k + a1] = t0;
    let mut bps: Vec<Vec<u16>> = Vec::with_capacity(r.saturating_sub(2));
    for t in 1..r - 1 {
        let (next, bp) = roll(lat, smooth_weight, t, &cost);
        cost = next;
        bps.push(bp);
    }
    // Close the ring: last segment must return to a0, and both the last
    // node and the seam node contribute smoothness.
    let s_last = &lat.seg[r - 1];
    let s_prev = &lat.seg[r - 2];
    let psi_first = lat.seg[0].psi[a0 * k + a1];
    let mut best = f64::INFINITY;
    let mut best_state = None;
    for p in 0..k {
        for c in 0..k {
            let base = cost[p * k + c];
            if !base.is_finite() {
                continue;
            }
            let t_close = s_last.time[c * k + a0];
            if !t_close.is_finite() {
                continue;
            }
            let psi_last = s_last.psi[c * k + a0];
            let d_last = wrap_angle(psi_last - s_prev.psi[p * k + c]);
            let d_seam = wrap_angle(psi_first - psi_last);
            let v = base + t_close + smooth_weight * (d_last * d_last + d_seam * d_seam);
            if v < best {
                best = v;
                best_state = Some((p, c));
            }
        }
    }
    let (p, c) = best_state?;
    let mut off = vec![0usize; r];
    off[r - 1] = c;
    off[r - 2] = p;
    for t in (1..=r - 2).rev() {
        off[t - 1] = bps[t - 1][off[t] * k + off[t + 1]] as usize;
    }
    debug_assert_eq!(off[0], a0);
    debug_assert_eq!(off[1], a1);
    Some((best, off))
}

fn assemble_path(lat: &Lattice, off: &[usize], s_max: f64) -> RacelinePath {
    let k = lat.k_off;
    let r = lat.seg.len();
    let nodes = if lat.closed { r } else { r + 1 };
    let seg_idx = |t: usize| -> usize {
        let a = off[t];
        let b = off[if lat.closed { (t + 1) % r } else { t + 1 }];
        a * k + b
    };
    let psi: Vec<f64> = (0..r).map(|t| lat.seg[t].psi[seg_idx(t)]).collect();
    let len: Vec<f64> = (0..r).map(|t| lat.seg[t].len[seg_idx(t)]).collect();

    let node_geom = |kl: usize| -> (f64, f64) {
        // Interior node: curvature from the heading change across its two
        // segments, relative heading from their circular mean.
        let t_in = (kl + r - 1) % r;
        let t_out = kl % r;
        let d = wrap_angle(psi[t_out] - psi[t_in]);
        let kappa = d / (0.5 * (len[t_in] + len[t_out]));
        let heading_rel = wrap_angle(psi[t_in] + 0.5 * d - lat.node_ref_heading[kl]);
        (kappa, heading_rel)
    };

    let mut layers = Vec::with_capacity(nodes + 1);
    for kl in 0..nodes {
        let (kappa, heading_rel) = if lat.closed {
            node_geom(kl)
        } else if kl == 0 {
            let (kappa, _) = node_geom(1);
            (kappa, wrap_angle(psi[0] - lat.node_ref_heading[0]))
        } else if kl == r {
            let (kappa, _) = node_geom(r - 1);
            (kappa, wrap_angle(psi[r - 1] - lat.node_ref_heading[r]))
        } else {
            node_geom(kl)
        };
        layers.push(PathLayer { s: lat.node_s[kl], n: lat.offs[kl][off[kl]], kappa_path: kappa, heading_rel });
    }
    if lat.closed {
        // The closing duplicate sits at s_max with the seam node's geometry.
        let first = layers[0];
        layers.push(PathLayer { s: s_max, ..first });
    }
    RacelinePath { layers, closed: lat.closed }
}

/// Lap-time-minimizing path over the offset lattice, then an exact velocity
/// profile along the winner.
pub fn optimize_raceline(
    track: &TrackGeometry,
    model: &GggvModel,
    grid: &GripMap,
    cfg: &RacelineConfig,
) -> Result<RacelineResult, RacelineError> {
    let lat = build_lattice(track, model, grid, cfg)?;
    let (off, _) = solve_dp(&lat, cfg.smooth_weight)?;
    let path = assemble_path(&lat, &off, track.s_max());
    let profile = speed_profile_with(track, &path, model, grid, &SpeedProfileOptions::default())?;
    Ok(RacelineResult { path, profile })
}

#[cfg(test)]
mod tests {
    use super::super::{compare_global_vs_map, speed_profile};
    use super::*;
    use crate::track::{synth, RawTrackPoint, TrackLoadOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn doctored(rng: &mut ChaCha8Rng, r: usize, k: usize, closed: bool) -> Lattice {
        let nodes = if closed { r } else { r + 1 };
        let seg = (0..r)
            .map(|_| {
                let mut time = Vec::with_capacity(k * k);
                let mut psi = Vec::with_capacity(k * k);
                for _ in 0..k * k {
                    time.push(if rng.gen::<f64>() < 0.12 { f64::INFINITY } else { rng.gen_range(0.5..2.0) });
                    psi.push(rng.gen_range(-0.6..0.6));
                }
                SegTable { time, psi, len: vec![1.0; k * k] }
            })
            .collect();
        Lattice {
            closed,
            k_off: k,
            node_s: (0..nodes).map(|i| i as f64).collect(),
            node_ref_heading: vec![0.0; nodes],
            offs: vec![(0..k).map(|a| a as f64).collect(); nodes],
            seg,
        }
    }

    fn enumerate_best(lat: &Lattice, w: f64) -> Option<(Vec<usize>, f64)> {
        let r = lat.seg.len();
        let nodes = if lat.closed { r } else { r + 1 };
        let k = lat.k_off;
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut seq = vec![0usize; nodes];
        loop {
            let cost = lattice_path_cost(lat, w, &seq).unwrap();
            if cost.is_finite() && best.as_ref().map_or(true, |(_, b)| cost < *b) {
                best = Some((seq.clone(), cost));
            }
            // odometer increment
            let mut d = 0;
            loop {
                seq[d] += 1;
                if seq[d] < k {
                    break;
                }
                seq[d] = 0;
                d += 1;
                if d == nodes {
                    return best;
                }
            }
        }
    }

    #[test]
    fn dp_matches_exhaustive_enumeration_on_doctored_lattices() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..40 {
            let closed = trial % 2 == 0;
            let r = rng.gen_range(3..=6);
            let k = rng.gen_range(2..=4);
            let lat = doctored(&mut rng, r, k, closed);
            let w = 0.2;
            match (solve_dp(&lat, w), enumerate_best(&lat, w)) {
                (Ok((off, cost)), Some((best_off, best_cost))) => {
                    assert!((cost - best_cost).abs() < 1e-9, "trial {trial}: dp {cost} vs enum {best_cost}");
                    let dp_cost = lattice_path_cost(&lat, w, &off).unwrap();
                    assert!((dp_cost - best_cost).abs() < 1e-9, "trial {trial}: path cost mismatch");
                    // Random costs make ties measure-zero, so paths agree.
                    assert_eq!(off, best_off, "trial {trial}");
                }
                (Err(err), None) => {
                    assert!(matches!(err, RacelineError::NoTransition { .. }), "trial {trial}: {err:?}");
                }
                (dp, brute) => panic!("trial {trial}: dp = {dp:?} disagrees with enumeration = {brute:?}"),
            }
        }
    }

    #[test]
    fn dead_layer_is_reported_as_missing_transition() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &closed in &[false, true] {
            let mut lat = doctored(&mut rng, 5, 3, closed);
            for t in lat.seg[2].time.iter_mut() {
                *t = f64::INFINITY;
            }
            let err = solve_dp(&lat, 0.1).unwrap_err();
            assert!(matches!(err, RacelineError::NoTransition { .. }), "{err:?}");
        }
    }

    #[test]
    fn straight_track_stays_centered() {
        let pts = synth::straight_points(200.0, 5.0, 1.0);
        let track = TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        let model = GggvModel::default_flat();
        let grid = GripMap::build(&track, 100, 4, 5.0, 1.0).unwrap();
        let result = optimize_raceline(&track, &model, &grid, &RacelineConfig::default()).unwrap();
        for layer in &result.path.layers {
            assert!(layer.n.abs() < 1e-9, "s = {}, n = {}", layer.s, layer.n);
        }
    }

    fn corner_track() -> TrackGeometry {
        // 80 m straight, 90° left turn of radius 40, 80 m straight.
        let mut pts = Vec::new();
        let push = |pts: &mut Vec<RawTrackPoint>, x: f64, y: f64| {
            pts.push(RawTrackPoint { x, y, n_min: -6.0, n_max: 6.0, a_z: 9.81 });
        };
        let mut d = 0.0;
        while d < 80.0 {
            push(&mut pts, d, 0.0);
            d += 2.0;
        }
        let arc = std::f64::consts::FRAC_PI_2 * 40.0;
        let mut a = 0.0;
        while a * 40.0 < arc {
            push(&mut pts, 80.0 + 40.0 * a.sin(), 40.0 * (1.0 - a.cos()));
            a += 0.05;
        }
        for i in 0..=40 {
            push(&mut pts, 120.0, 40.0 + 2.0 * i as f64);
        }
        TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap()
    }

    #[test]
    fn corner_is_cut_inside_and_beats_the_centerline() {
        let track = corner_track();
        assert!(!track.closed());
        let model = GggvModel::default_flat();
        let grid = GripMap::build(&track, 80, 6, 6.0, 1.0).unwrap();
        let result = optimize_raceline(&track, &model, &grid, &RacelineConfig::default()).unwrap();
        let center = RacelinePath::centerline(&track, 2.0).unwrap();
        let center_profile = speed_profile(&track, &center, &model, &grid).unwrap();
        assert!(
            result.lap_time() < center_profile.lap_time(),
            "optimized {} vs centerline {}",
            result.lap_time(),
            center_profile.lap_time()
        );
        // The apex is cut toward the inside of the left-hander (positive n).
        let apex_s = 80.0 + 0.5 * std::f64::consts::FRAC_PI_2 * 40.0;
        let apex = result
            .path
            .layers
            .iter()
            .min_by(|a, b| (a.s - apex_s).abs().partial_cmp(&(b.s - apex_s).abs()).unwrap())
            .unwrap();
        assert!(apex.n > 1.0, "apex offset {}", apex.n);
    }

    fn arc_track() -> TrackGeometry {
        let pts: Vec<RawTrackPoint> = (0..=60)
            .map(|i| {
                let a = i as f64 * std::f64::consts::FRAC_PI_2 / 60.0;
                RawTrackPoint { x: 60.0 * a.sin(), y: 60.0 * (1.0 - a.cos()), n_min: -4.0, n_max: 4.0, a_z: 9.81 }
            })
            .collect();
        TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap()
    }

    #[test]
    fn tiny_open_instance_matches_geometric_enumeration() {
        let track = arc_track();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid = GripMap::build(&track, 4, 3, 4.0, 1.0)
            .unwrap()
            .map_cells(|_, _, _| rng.gen_range(0.6..1.2))
            .unwrap();
        let model = GggvModel::default_flat();
        let cfg = RacelineConfig {
            layer_step: track.s_max() / 4.0,
            n_candidates: 3,
            smooth_weight: 0.1,
            ..Default::default()
        };
        let lat = build_lattice(&track, &model, &grid, &cfg).unwrap();
        let (off, cost) = solve_dp(&lat, cfg.smooth_weight).unwrap();
        let (best_off, best_cost) = enumerate_best(&lat, cfg.smooth_weight).unwrap();
        assert_eq!(off, best_off);
        assert!((cost - best_cost).abs() < 1e-9);
        // The public scoring path agrees with the DP's internal total.
        let scored = evaluate_offsets(&track, &model, &grid, &cfg, &off).unwrap();
        assert!((scored - cost).abs() < 1e-9);
    }

    #[test]
    fn tiny_closed_instance_matches_geometric_enumeration() {
        let pts = synth::circle_points(30.0, 5.0, 2.0);
        let track = TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let grid = GripMap::build(&track, 6, 3, 5.0, 1.0)
            .unwrap()
            .map_cells(|_, _, _| rng.gen_range(0.6..1.2))
            .unwrap();
        let model = GggvModel::default_flat();
        let cfg = RacelineConfig {
            layer_step: track.s_max() / 6.0,
            n_candidates: 3,
            smooth_weight: 0.1,
            ..Default::default()
        };
        let lat = build_lattice(&track, &model, &grid, &cfg).unwrap();
        let (off, cost) = solve_dp(&lat, cfg.smooth_weight).unwrap();
        let (best_off, best_cost) = enumerate_best(&lat, cfg.smooth_weight).unwrap();
        assert_eq!(off, best_off);
        assert!((cost - best_cost).abs() < 1e-9);
    }

    fn weak_corner_speedway() -> (TrackGeometry, GripMap) {
        let pts = synth::speedway_points(300.0, 80.0, 6.0, 2.0);
        let track = TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        let grid = GripMap::build(&track, 300, 6, 6.0, 1.0).unwrap();
        // First 180° turn starts after the first straight.
        let arc = std::f64::consts::PI * 80.0;
        let weak = grid
            .with_region((300.0, 300.0 + arc), (-6.0, 6.0), 0.75, SWrap::Wrap)
            .unwrap();
        (track, weak)
    }

    #[test]
    fn uniform_grip_yields_exactly_zero_improvement() {
        let pts = synth::speedway_points(300.0, 80.0, 6.0, 2.0);
        let track = TrackGeometry::from_points(&pts, TrackLoadOptions::default()).unwrap();
        let grid = GripMap::build(&track, 300, 6, 6.0, 0.85).unwrap();
        let model = GggvModel::default_flat();
        let cfg = RacelineConfig { layer_step: 3.0, n_candidates: 7, ..Default::default() };
        let cmp = compare_global_vs_map(&track, &model, &grid, &cfg).unwrap();
        assert_eq!(cmp.theta_global, 0.85);
        assert_eq!(cmp.improvement, 0.0);
        assert_eq!(cmp.lap_time_map, cmp.lap_time_global);
    }

    #[test]
    fn weak_corner_map_beats_the_global_scalar() {
        let (track, grid) = weak_corner_speedway();
        let model = GggvModel::default_flat();
        let cfg = RacelineConfig { layer_step: 3.0, n_candidates: 7, ..Default::default() };
        let cmp = compare_global_vs_map(&track, &model, &grid, &cfg).unwrap();
        assert_eq!(cmp.theta_global, 0.75);
        assert!(cmp.improvement > 0.0, "improvement = {}", cmp.improvement);
        assert!(cmp.lap_time_map < cmp.lap_time_global);
    }

    #[test]
    fn optimizer_is_deterministic_across_runs() {
        let (track, grid) = weak_corner_speedway();
        let model = GggvModel::default_flat();
        let cfg = RacelineConfig { layer_step: 3.0, ..Default::default() };
        let a = optimize_raceline(&track, &model, &grid, &cfg).unwrap();
        let b = optimize_raceline(&track, &model, &grid, &cfg).unwrap();
        assert_eq!(a.path, b.path);
        assert_eq!(a.profile, b.profile);
    }

    #[test]
    fn config_round_trips_and_rejects_bad_values() {
        let cfg = RacelineConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: RacelineConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg.layer_step, back.layer_step);
        assert_eq!(cfg.n_candidates, back.n_candidates);
        assert!(RacelineConfig { n_candidates: 2, ..Default::default() }.validate().is_err());
        assert!(RacelineConfig { layer_step: -1.0, ..Default::default() }.validate().is_err());
        assert!(RacelineConfig { smooth_weight: f64::NAN, ..Default::default() }.validate().is_err());
    }
}
