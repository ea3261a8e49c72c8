//! On-line sampling planner: each cycle connects the current Frenet state to
//! a grid of end states with boundary-value polynomials, discards candidates
//! that leave the corridor or exceed steering/speed bounds, scores the rest
//! with soft cost terms — grip-limit excess included — and returns the
//! cheapest one. Exceeding the local grip envelope is a graded penalty, not
//! a hard reject, so briefly leaning on the limit stays available when
//! everything else is worse.

pub mod poly;

use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::gggv::{GggvError, GggvModel};
use crate::gripmap::{GripMap, GripMapError, SWrap};
use crate::raceline::RacelineTable;
use crate::track::{TrackError, TrackGeometry};
use poly::{Quartic, Quintic};

#[derive(Debug, thiserror::Error)]
pub enum PlannerError {
    #[error("planner configuration invalid: {0}")]
    Config(String),
    #[error("planner state invalid: {0}")]
    State(String),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    GripMap(#[from] GripMapError),
    #[error(transparent)]
    Gggv(#[from] GggvError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("planner config parse error: {0}")]
    Parse(String),
}

/// Current vehicle state in Frenet coordinates. Longitudinal motion must be
/// forward (`s_dot > 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerState {
    pub s: f64,
    pub s_dot: f64,
    pub s_ddot: f64,
    pub n: f64,
    pub n_dot: f64,
    pub n_ddot: f64,
}

/// One discretized point of a candidate. Accelerations are in the track
/// frame (longitudinal along the velocity, lateral across it, centripetal
/// `v^2 * kappa` included); `theta_local`/`utilization` are filled in during
/// cost evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub s: f64,
    pub n: f64,
    pub v: f64,
    pub ax: f64,
    pub ay: f64,
    pub kappa: f64,
    pub a_z: f64,
    pub theta_local: f64,
    pub utilization: f64,
}

/// A candidate trajectory over one horizon: lateral quintic, longitudinal
/// quartic (free end position), and the fixed-count discretization.
#[derive(Debug, Clone)]
pub struct CandidateTrajectory {
    pub horizon: f64,
    /// Lateral quintic coefficients, `n(t) = sum lateral[k] t^k`.
    pub lateral: [f64; 6],
    /// Longitudinal quartic coefficients, `s(t) = sum longitudinal[k] t^k`.
    pub longitudinal: [f64; 5],
    pub points: Vec<TrajectoryPoint>,
}

/// Additive cost terms, all per-point means over the candidate's
/// discretization except `progress`, the average advance rate [m/s]. `total`
/// is the weighted sum, with progress entering as a reward (subtracted).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub raceline_tracking: f64,
    pub jerk: f64,
    pub opponent_proximity: f64,
    pub grip_excess: f64,
    pub progress: f64,
    pub total: f64,
}

/// Opponent snapshot; prediction over the horizon is constant velocity along
/// the track at fixed lateral offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpponentState {
    pub s: f64,
    pub n: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub track: f64,
    pub jerk: f64,
    pub opponent: f64,
    pub grip: f64,
    pub progress: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        // Jerk is a smoothness tiebreaker. Weighted much higher it becomes a
        // commitment device: reshaping a hard-braking profile costs more than
        // the progress it buys, and the argmin locks onto whatever
        // acceleration the previous cycle committed. Grip excess is a
        // per-point mean of a squared hinge, so mild sustained overspeed
        // (utilization 1.0-1.1, enough to spin) scores in the hundredths;
        // the weight has to be in the hundreds for that to outbid a few
        // points of progress.
        Self { track: 1.0, jerk: 0.02, opponent: 5.0, grip: 400.0, progress: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Discretization points per candidate.
    pub points_per_candidate: usize,
    /// End-speed set as offsets from the reference-line speed at the station
    /// each candidate is predicted to reach [m/s]; resulting end speeds clamp
    /// at a small positive floor.
    pub end_speed_offsets: Vec<f64>,
    /// Number of end lateral offsets spread across the corridor at the
    /// current station.
    pub end_offset_count: usize,
    /// Lateral margin kept from the corridor edges when sampling end
    /// offsets [m].
    pub margin: f64,
    /// Horizon set [s].
    pub horizons: Vec<f64>,
    /// Steering-limit override; `None` uses the model's `kappa_max`.
    pub kappa_max: Option<f64>,
    /// Opponent barrier reach [m]: proximity cost is zero beyond this
    /// predicted distance.
    pub d_safe: f64,
    pub weights: CostWeights,
    /// Re-plan period the caller is expected to run at [s]; recorded with
    /// results, not enforced here.
    pub replan_period: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            points_per_candidate: 40,
            end_speed_offsets: vec![-12.0, -10.0, -8.0, -6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0],
            end_offset_count: 20,
            margin: 0.3,
            horizons: vec![1.0, 1.5, 2.0, 2.5, 3.0],
            kappa_max: None,
            d_safe: 10.0,
            weights: CostWeights::default(),
            replan_period: 0.1,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        let err = |msg: String| Err(PlannerError::Config(msg));
        if self.points_per_candidate < 4 {
            return err(format!("points_per_candidate must be at least 4, got {}", self.points_per_candidate));
        }
        if self.end_speed_offsets.is_empty() {
            return err("end_speed_offsets must be non-empty".into());
        }
        if !self.end_speed_offsets.iter().all(|x| x.is_finite()) {
            return err("end_speed_offsets must be finite".into());
        }
        if self.end_offset_count == 0 {
            return err("end_offset_count must be at least 1".into());
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return err(format!("margin must be non-negative, got {}", self.margin));
        }
        if self.horizons.is_empty() {
            return err("horizons must be non-empty".into());
        }
        if !self.horizons.iter().all(|t| t.is_finite() && *t > 0.0) {
            return err("horizons must be positive".into());
        }
        if let Some(k) = self.kappa_max {
            if !(k.is_finite() && k > 0.0) {
                return err(format!("kappa_max override must be positive, got {k}"));
            }
        }
        if !(self.d_safe.is_finite() && self.d_safe > 0.0) {
            return err(format!("d_safe must be positive, got {}", self.d_safe));
        }
        let w = &self.weights;
        for (name, x) in [
            ("track", w.track),
            ("jerk", w.jerk),
            ("opponent", w.opponent),
            ("grip", w.grip),
            ("progress", w.progress),
        ] {
            if !(x.is_finite() && x >= 0.0) {
                return err(format!("weight {name} must be non-negative and finite, got {x}"));
            }
        }
        if !(self.replan_period.is_finite() && self.replan_period > 0.0) {
            return err(format!("replan_period must be positive, got {}", self.replan_period));
        }
        Ok(())
    }

    /// Steering limit in effect given a model.
    pub fn kappa_limit(&self, model: &GggvModel) -> f64 {
        self.kappa_max.unwrap_or(model.kappa_max)
    }
}

pub fn load_planner_config<R: Read>(reader: R) -> Result<PlannerConfig, PlannerError> {
    let cfg: PlannerConfig = serde_json::from_reader(reader).map_err(|e| PlannerError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn save_planner_config<W: Write>(cfg: &PlannerConfig, writer: W) -> Result<(), PlannerError> {
    cfg.validate()?;
    serde_json::to_writer_pretty(writer, cfg).map_err(|e| PlannerError::Parse(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleReason {
    Bounds,
    Curvature,
    Speed,
}

impl std::fmt::Display for InfeasibleReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InfeasibleReason::Bounds => write!(f, "bounds"),
            InfeasibleReason::Curvature => write!(f, "curvature"),
            InfeasibleReason::Speed => write!(f, "speed"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Infeasible { reason: InfeasibleReason, point: usize },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }
}

/// Samples the candidate set for one cycle: the cross product of end-speed
/// offsets, end lateral offsets across the corridor at the current station,
/// and horizons — in that nesting order, so candidate indices are
/// reproducible.
///
/// End speeds anchor to the reference-line speed at the station a candidate
/// is predicted to reach, not to the current speed. The reference profile
/// already knows where braking zones start, so a corner near the far end of
/// the horizon pulls end speeds down long before every candidate would have
/// to cross it — anchoring to the current speed instead leaves "hold speed
/// on a horizon that stops short of the corner" as the cheapest option until
/// braking is no longer possible.
///
/// The quartic's terminal condition fixes the station rate `s_dot`; the
/// reference profile is a ground speed. The two differ by the projection
/// factor `1 - n kappa` at the endpoint, which deep inside a corner is a
/// systematic double-digit-percent error, so each anchor is divided by the
/// endpoint's projection factor before the offset applies.
pub fn sample_candidates(
    state: &PlannerState,
    raceline: &RacelineTable,
    track: &TrackGeometry,
    cfg: &PlannerConfig,
) -> Result<Vec<CandidateTrajectory>, PlannerError> {
    cfg.validate()?;
    check_state(state)?;
    let slice0 = track.slice_at(state.s)?;
    let offsets = end_offsets(slice0.n_min, slice0.n_max, cfg);
    let ends: Vec<(f64, f64)> = cfg
        .horizons
        .iter()
        .map(|&t| -> Result<(f64, f64), PlannerError> {
            let s_end = state.s + state.s_dot * t;
            let s_query = if track.closed() { s_end } else { s_end.clamp(0.0, track.s_max()) };
            Ok((raceline.v_at(s_end), track.slice_at(s_query)?.kappa))
        })
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(cfg.end_speed_offsets.len() * offsets.len() * cfg.horizons.len());
    for &off in &cfg.end_speed_offsets {
        for &ne in &offsets {
            for (&t_end, &(anchor, kappa_end)) in cfg.horizons.iter().zip(&ends) {
                let d_end = (1.0 - ne * kappa_end).max(0.2);
                let ve = ((anchor + off) / d_end).max(END_SPEED_FLOOR);
                let lateral = Quintic::solve(state.n, state.n_dot, state.n_ddot, ne, 0.0, 0.0, t_end);
                let longitudinal = Quartic::solve(state.s, state.s_dot, state.s_ddot, ve, 0.0, t_end);
                let points = discretize(&lateral, &longitudinal, t_end, cfg.points_per_candidate, track)?;
                out.push(CandidateTrajectory {
                    horizon: t_end,
                    lateral: lateral.c,
                    longitudinal: longitudinal.c,
                    points,
                });
            }
        }
    }
    Ok(out)
}

const END_SPEED_FLOOR: f64 = 0.1;

fn check_state(state: &PlannerState) -> Result<(), PlannerError> {
    let vals = [state.s, state.s_dot, state.s_ddot, state.n, state.n_dot, state.n_ddot];
    if !vals.iter().all(|x| x.is_finite()) {
        return Err(PlannerError::State("state must be finite".into()));
    }
    if !(state.s_dot > 0.0) {
        return Err(PlannerError::State(format!("s_dot must be positive, got {}", state.s_dot)));
    }
    Ok(())
}

fn end_offsets(n_min: f64, n_max: f64, cfg: &PlannerConfig) -> Vec<f64> {
    let lo = n_min + cfg.margin;
    let hi = n_max - cfg.margin;
    let count = cfg.end_offset_count;
    if !(hi > lo) {
        // Corridor narrower than twice the margin: aim for the middle.
        return vec![0.5 * (n_min + n_max); count];
    }
    if count == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect()
}

/// Discretizes the polynomial pair into track-frame points. For closed
/// tracks station queries wrap; for open tracks geometry clamps at the end
/// and the overrun is left to the feasibility check.
fn discretize(
    lateral: &Quintic,
    longitudinal: &Quartic,
    t_end: f64,
    count: usize,
    track: &TrackGeometry,
) -> Result<Vec<TrajectoryPoint>, PlannerError> {
    let dt = t_end / (count - 1) as f64;
    let mut points = Vec::with_capacity(count);
    for k in 0..count {
        let t = if k + 1 == count { t_end } else { k as f64 * dt };
        let s = longitudinal.pos(t);
        let s_dot = longitudinal.vel(t);
        let s_ddot = longitudinal.acc(t);
        let n = lateral.pos(t);
        let n_dot = lateral.vel(t);
        let n_ddot = lateral.acc(t);
        let s_query = if track.closed() { s } else { s.clamp(0.0, track.s_max()) };
        let slice = track.slice_at(s_query)?;
        let d = 1.0 - n * slice.kappa;
        let d_dot = -n_dot * slice.kappa - n * slice.dkappa_ds * s_dot;
        let vt = s_dot * d;
        let vn = n_dot;
        let v = vt.hypot(vn);
        let at = s_ddot * d + s_dot * d_dot - slice.kappa * s_dot * n_dot;
        let an = slice.kappa * s_dot * s_dot * d + n_ddot;
        let (ax, ay, kappa) = if v > 1e-6 {
            let cross = vt * an - vn * at;
            ((vt * at + vn * an) / v, cross / v, cross / (v * v * v))
        } else {
            (at, an, slice.kappa)
        };
        points.push(TrajectoryPoint {
            t,
            s,
            n,
            v,
            ax,
            ay,
            kappa,
            a_z: slice.a_z,
            theta_local: 1.0,
            utilization: 0.0,
        });
    }
    Ok(points)
}

/// Hard screen: corridor bounds, steering limit, speed ceiling. Acceleration
/// limits are deliberately not checked here — grip is a soft cost.
pub fn hard_feasibility(
    candidate: &CandidateTrajectory,
    track: &TrackGeometry,
    model: &GggvModel,
    kappa_max: f64,
) -> Feasibility {
    for (k, pt) in candidate.points.iter().enumerate() {
        if !track.closed() && (pt.s < -1e-9 || pt.s > track.s_max() + 1e-9) {
            return Feasibility::Infeasible { reason: InfeasibleReason::Bounds, point: k };
        }
        let s_query = if track.closed() { pt.s } else { pt.s.clamp(0.0, track.s_max()) };
        let slice = match track.slice_at(s_query) {
            Ok(s) => s,
            Err(_) => return Feasibility::Infeasible { reason: InfeasibleReason::Bounds, point: k },
        };
        if pt.n < slice.n_min - 1e-9 || pt.n > slice.n_max + 1e-9 {
            return Feasibility::Infeasible { reason: InfeasibleReason::Bounds, point: k };
        }
        // Offsets at or past the local center of curvature have no valid
        // frame; treat like leaving the corridor.
        if 1.0 - pt.n * slice.kappa <= 0.05 {
            return Feasibility::Infeasible { reason: InfeasibleReason::Bounds, point: k };
        }
        if pt.kappa.abs() > kappa_max + 1e-12 {
            return Feasibility::Infeasible { reason: InfeasibleReason::Curvature, point: k };
        }
        if pt.v > model.v_max + 1e-9 {
            return Feasibility::Infeasible { reason: InfeasibleReason::Speed, point: k };
        }
    }
    Feasibility::Feasible
}

/// Scores one candidate and annotates its points with the local grip factor
/// and utilization. `grid = None` evaluates against unscaled limits and
/// skips the grip term entirely (the no-map baseline). Each in-bounds point
/// costs at most one grip lookup, counted into `lookups`.
pub fn evaluate_cost(
    candidate: &mut CandidateTrajectory,
    raceline: &RacelineTable,
    grid: Option<&GripMap>,
    wrap: SWrap,
    model: &GggvModel,
    opponents: &[OpponentState],
    cfg: &PlannerConfig,
    lookups: &mut u64,
) -> Result<CostBreakdown, PlannerError> {
    let count = candidate.points.len();
    if count < 2 {
        return Err(PlannerError::Config("candidate must have at least 2 points".into()));
    }
    let p = model.shape_exponent;
    let mut tracking_sq = 0.0;
    let mut opp_sum = 0.0;
    let mut grip_excess = 0.0;
    for pt in candidate.points.iter_mut() {
        let base = model.base_limits(pt.v, pt.a_z)?;
        let base_util = base.utilization(pt.ax, pt.ay, p);
        let (theta, util) = match grid {
            Some(g) => {
                *lookups += 1;
                let theta = g.theta_at(pt.s, pt.n, wrap)?;
                (theta, base_util / theta)
            }
            None => (1.0, base_util),
        };
        pt.theta_local = theta;
        pt.utilization = util;
        if grid.is_some() {
            let excess = (util - 1.0).max(0.0);
            grip_excess += excess * excess;
        }
        let dn = pt.n - raceline.n_at(pt.s);
        tracking_sq += dn * dn;
        for opp in opponents {
            let ds = raceline.s_delta(pt.s, opp.s + opp.v * pt.t);
            // Proximity is anisotropic: a car-width of lateral clearance
            // buys what a full braking-zone slot in line does. An isotropic
            // barrier would charge for clean in-line following and pay the
            // planner to dodge sideways exactly where that is worst.
            let dist = ds.hypot(OPPONENT_LATERAL_WEIGHT * (pt.n - opp.n));
            let gap = (1.0 - dist / cfg.d_safe).max(0.0);
            opp_sum += gap * gap;
        }
    }
    // Jerk comes from the polynomials themselves, not from differencing the
    // track-frame accelerations: the latter spikes wherever the track's
    // curvature ramps, charging every candidate for the geometry it must
    // cross (and rewarding crossing it slowly).
    let mut jerk_sq = 0.0;
    for pt in candidate.points.iter() {
        let c = &candidate.lateral;
        let jn = 6.0 * c[3] + 24.0 * c[4] * pt.t + 60.0 * c[5] * pt.t * pt.t;
        let c = &candidate.longitudinal;
        let js = 6.0 * c[3] + 24.0 * c[4] * pt.t;
        jerk_sq += jn * jn + js * js;
    }
    // Every term is a per-point mean and progress is a rate, so candidates
    // with different horizons compare on equal footing; integrated terms
    // would hand the longest horizon more reward (and more penalty) for the
    // same driving.
    let raceline_tracking = tracking_sq / count as f64;
    let jerk = jerk_sq / count as f64;
    let opponent_proximity = opp_sum / count as f64;
    let grip_excess = grip_excess / count as f64;
    let progress = (candidate.points[count - 1].s - candidate.points[0].s) / candidate.horizon;
    let w = &cfg.weights;
    let total = w.track * raceline_tracking + w.jerk * jerk + w.opponent * opponent_proximity
        + w.grip * grip_excess
        - w.progress * progress;
    Ok(CostBreakdown { raceline_tracking, jerk, opponent_proximity, grip_excess, progress, total })
}

/// Result of one planning cycle.
#[derive(Debug, Clone)]
pub struct CycleResult {
    pub best: CandidateTrajectory,
    pub cost: CostBreakdown,
    pub n_candidates: usize,
    pub n_feasible: usize,
    pub n_theta_lookups: u64,
    pub cycle_time_s: f64,
    /// Set when no candidate survived the hard screen; `best` is then a
    /// maximal-braking trajectory along the current offset.
    pub emergency: bool,
}

/// Per-cycle diagnostic record, one JSON object per line in run logs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle_time_s: f64,
    pub n_candidates: usize,
    pub n_feasible: usize,
    pub best_cost_breakdown: CostBreakdown,
    /// Horizon of the selected candidate [s].
    pub chosen_horizon: f64,
    /// Terminal speed of the selected candidate [m/s].
    pub chosen_end_speed: f64,
}

impl CycleResult {
    pub fn record(&self) -> CycleRecord {
        CycleRecord {
            cycle_time_s: self.cycle_time_s,
            n_candidates: self.n_candidates,
            n_feasible: self.n_feasible,
            best_cost_breakdown: self.cost,
            chosen_horizon: self.best.horizon,
            chosen_end_speed: self.best.points.last().map_or(0.0, |p| p.v),
        }
    }
}

/// Runs one full cycle: sample, screen, score, select. Selection is the
/// minimum total cost with deterministic tie-breaks (lower grip excess, then
/// lower candidate index). With zero feasible candidates the result carries
/// the emergency flag and a braking fallback.
pub fn plan_cycle(
    state: &PlannerState,
    raceline: &RacelineTable,
    grid: Option<&GripMap>,
    model: &GggvModel,
    track: &TrackGeometry,
    opponents: &[OpponentState],
    cfg: &PlannerConfig,
) -> Result<CycleResult, PlannerError> {
    let start = Instant::now();
    let mut candidates = sample_candidates(state, raceline, track, cfg)?;
    let n_candidates = candidates.len();
    let kappa_max = cfg.kappa_limit(model);
    let wrap = SWrap::for_track(track);
    let mut lookups = 0u64;
    let mut n_feasible = 0usize;
    let mut best: Option<(usize, CostBreakdown)> = None;
    for idx in 0..candidates.len() {
        if !hard_feasibility(&candidates[idx], track, model, kappa_max).is_feasible() {
            continue;
        }
        n_feasible += 1;
        let cost = evaluate_cost(&mut candidates[idx], raceline, grid, wrap, model, opponents, cfg, &mut lookups)?;
        let better = match &best {
            None => true,
            Some((_, b)) => {
                cost.total < b.total || (cost.total == b.total && cost.grip_excess < b.grip_excess)
            }
        };
        if better {
            best = Some((idx, cost));
        }
    }
    match best {
        Some((idx, cost)) => Ok(CycleResult {
            best: candidates.swap_remove(idx),
            cost,
            n_candidates,
            n_feasible,
            n_theta_lookups: lookups,
            cycle_time_s: start.elapsed().as_secs_f64(),
            emergency: false,
        }),
        None => {
            let mut fallback = braking_fallback(state, track, model, cfg)?;
            let cost =
                evaluate_cost(&mut fallback, raceline, grid, wrap, model, opponents, cfg, &mut lookups)?;
            Ok(CycleResult {
                best: fallback,
                cost,
                n_candidates,
                n_feasible: 0,
                n_theta_lookups: lookups,
                cycle_time_s: start.elapsed().as_secs_f64(),
                emergency: true,
            })
        }
    }
}

/// Maximal braking along the current lateral offset: end state is rest-like
/// (small forward speed floor) with the horizon set by the base braking
/// limit at the current operating point.
fn braking_fallback(
    state: &PlannerState,
    track: &TrackGeometry,
    model: &GggvModel,
    cfg: &PlannerConfig,
) -> Result<CandidateTrajectory, PlannerError> {
    let slice = track.slice_at(state.s)?;
    let brake = model.base_limits(state.s_dot, slice.a_z)?.ax_min.max(0.1);
    let t_end = ((state.s_dot - END_SPEED_FLOOR) / brake).clamp(0.2, 5.0);
    let lateral = Quintic::solve(state.n, state.n_dot, state.n_ddot, state.n, 0.0, 0.0, t_end);
    let longitudinal = Quartic::solve(state.s, state.s_dot, state.s_ddot, END_SPEED_FLOOR, 0.0, t_end);
    let points = discretize(&lateral, &longitudinal, t_end, cfg.points_per_candidate, track)?;
    Ok(CandidateTrajectory { horizon: t_end, lateral: lateral.c, longitudinal: longitudinal.c, points })
}
