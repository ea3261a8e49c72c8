//! Scenario files and the closed-loop runner. A scenario names a track, a
//! raceline, the grip input the planner drives with (a map file or
//! `"uniform:<theta>"`), the ground-truth grip field, and the cars. The
//! runner replans at the configured period, executes with [`step_vehicle`],
//! and scripted opponents hold their lane under a speed cap with honest
//! braking for corners.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    step_vehicle, FollowerGains, GroundTruthGrip, PlanTarget, RunAggregates, RunEvents, RunReport, SimError,
    SimVehicle, SpinRule, StepContext, MIN_FRAME_FACTOR,
};
use crate::gggv::{load_gggv_json, GggvModel};
use crate::gripmap::{load_gripmap_from, GripMap, SWrap};
use crate::planner::poly::Quintic;
use crate::planner::{plan_cycle, CandidateTrajectory, CostWeights, OpponentState, PlannerConfig, PlannerState};
use crate::raceline::{
    lateral_cap, optimize_raceline, raceline_rows, read_raceline_csv, RacelineConfig, RacelineRow, RacelineTable,
};
use crate::track::{load_track_file, synth, TrackGeometry, TrackLoadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleRole {
    Ego,
    Opponent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub role: VehicleRole,
    pub s: f64,
    pub n: f64,
    pub v: f64,
    /// Speed cap for scripted opponents; `None` means hold the initial speed
    /// as the cap. Ignored for the ego.
    #[serde(default)]
    pub v_cap: Option<f64>,
    /// Fraction of the local lateral speed cap a scripted opponent is
    /// willing to corner at.
    #[serde(default = "default_corner_margin")]
    pub corner_margin: f64,
}

fn default_corner_margin() -> f64 {
    0.97
}

fn default_sim_dt() -> f64 {
    0.01
}

/// Scenario file schema. Paths are resolved relative to the scenario file's
/// directory when loading from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Track CSV path.
    pub track: String,
    /// Acceleration-envelope model JSON path.
    pub model: String,
    /// Raceline CSV path; must belong to the same track.
    pub raceline: String,
    /// Planner grip input: a map file path, or `"uniform:<theta>"` for a
    /// constant-factor map built on the fly.
    pub gripmap: String,
    pub truth: GroundTruthGrip,
    pub vehicles: Vec<VehicleSpec>,
    /// Recorded into the report; the reference loop itself is deterministic.
    pub seed: u64,
    /// Simulated duration [s].
    pub duration: f64,
    /// Re-plan period [s].
    pub planner_period: f64,
    /// Integration step [s].
    #[serde(default = "default_sim_dt")]
    pub dt: f64,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub spin_rule: SpinRule,
    #[serde(default)]
    pub gains: FollowerGains,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Scenario(msg));
        for (name, s) in [
            ("track", &self.track),
            ("model", &self.model),
            ("raceline", &self.raceline),
            ("gripmap", &self.gripmap),
        ] {
            if s.is_empty() {
                return bad(format!("{name} path must be non-empty"));
            }
        }
        self.truth.validate()?;
        let egos = self.vehicles.iter().filter(|v| v.role == VehicleRole::Ego).count();
        if egos != 1 {
            return bad(format!("scenario needs exactly one ego vehicle, got {egos}"));
        }
        for (k, v) in self.vehicles.iter().enumerate() {
            if ![v.s, v.n, v.v].iter().all(|x| x.is_finite()) || v.v < 0.0 {
                return bad(format!("vehicle {k} has invalid initial state"));
            }
            if v.role == VehicleRole::Ego && v.v <= 0.0 {
                return bad("ego initial speed must be positive".into());
            }
            if !(v.corner_margin > 0.0 && v.corner_margin <= 1.0) {
                return bad(format!("vehicle {k} corner_margin must be in (0, 1], got {}", v.corner_margin));
            }
            if let Some(cap) = v.v_cap {
                if !(cap.is_finite() && cap > 0.0) {
                    return bad(format!("vehicle {k} v_cap must be positive, got {cap}"));
                }
            }
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if !(self.dt > 0.0 && self.dt <= 0.05) {
            return bad(format!("dt must be in (0, 0.05] s, got {}", self.dt));
        }
        if !(self.planner_period.is_finite() && self.planner_period >= self.dt) {
            return bad(format!(
                "planner_period must be at least dt ({}), got {}",
                self.dt, self.planner_period
            ));
        }
        self.planner.validate()?;
        if !(self.spin_rule.threshold.is_finite() && self.spin_rule.threshold > 0.0) {
            return bad(format!("spin threshold must be positive, got {}", self.spin_rule.threshold));
        }
        if !(self.spin_rule.dwell.is_finite() && self.spin_rule.dwell > 0.0) {
            return bad(format!("spin dwell must be positive, got {}", self.spin_rule.dwell));
        }
        let g = &self.gains;
        if ![g.k_v, g.omega_n, g.zeta].iter().all(|x| x.is_finite() && *x > 0.0) {
            return bad("follower gains must be positive".into());
        }
        if !(g.spin_decel_frac > 0.0 && g.spin_decel_frac <= 1.0) {
            return bad(format!("spin_decel_frac must be in (0, 1], got {}", g.spin_decel_frac));
        }
        Ok(())
    }
}

pub fn load_scenario_json<R: Read>(reader: R) -> Result<Scenario, SimError> {
    let sc: Scenario = serde_json::from_reader(reader).map_err(|e| SimError::Parse(e.to_string()))?;
    sc.validate()?;
    Ok(sc)
}

pub fn save_scenario_json<W: std::io::Write>(sc: &Scenario, writer: W) -> Result<(), SimError> {
    sc.validate()?;
    serde_json::to_writer_pretty(writer, sc).map_err(|e| SimError::Parse(e.to_string()))?;
    Ok(())
}

/// A scenario with every referenced input resolved and cross-checked.
#[derive(Debug, Clone)]
pub struct ScenarioBundle {
    pub scenario: Scenario,
    pub track: TrackGeometry,
    pub model: GggvModel,
    pub raceline: RacelineTable,
    pub assumed: GripMap,
}

impl ScenarioBundle {
    /// Builds a bundle from in-memory pieces, validating that they belong
    /// together.
    pub fn assemble(
        scenario: Scenario,
        track: TrackGeometry,
        model: GggvModel,
        raceline_rows: &[RacelineRow],
        assumed: GripMap,
    ) -> Result<Self, SimError> {
        scenario.validate()?;
        check_raceline_matches(raceline_rows, &track)?;
        let s_tol = 1e-6 * track.s_max().max(1.0);
        if (assumed.s_max() - track.s_max()).abs() > s_tol {
            return Err(SimError::Scenario(format!(
                "grip map covers {:.3} m but the track is {:.3} m long",
                assumed.s_max(),
                track.s_max()
            )));
        }
        let raceline = RacelineTable::from_rows(raceline_rows, &track)?;
        for v in &scenario.vehicles {
            let slice = track.slice_at(track.wrap_s(v.s))?;
            if v.n < slice.n_min - 1e-9 || v.n > slice.n_max + 1e-9 {
                return Err(SimError::Scenario(format!(
                    "vehicle starts at n = {} outside the corridor [{}, {}]",
                    v.n, slice.n_min, slice.n_max
                )));
            }
        }
        Ok(Self { scenario, track, model, raceline, assumed })
    }

    /// Loads a scenario file and everything it references.
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self, SimError> {
        let path = path.as_ref();
        let scenario = load_scenario_json(BufReader::new(File::open(path)?))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let track = load_track_file(resolve(base, &scenario.track), TrackLoadOptions::default())?;
        let model = load_gggv_json(BufReader::new(File::open(resolve(base, &scenario.model))?))?;
        let rows = read_raceline_csv(BufReader::new(File::open(resolve(base, &scenario.raceline))?))?;
        let assumed = resolve_gripmap(&scenario.gripmap, base, &track)?;
        Self::assemble(scenario, track, model, &rows, assumed)
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Resolves the scenario's grip input: `"uniform:<theta>"` builds a constant
/// map sized to the track, anything else is a map file path.
pub fn resolve_gripmap(spec: &str, base: &Path, track: &TrackGeometry) -> Result<GripMap, SimError> {
    if let Some(theta_str) = spec.strip_prefix("uniform:") {
        let theta: f64 = theta_str
            .trim()
            .parse()
            .map_err(|_| SimError::Parse(format!("bad uniform grip spec {spec:?}")))?;
        let s_dim = ((track.s_max() / 10.0).ceil() as u32).clamp(8, 4096);
        let w = corridor_half_extent(track)?;
        Ok(GripMap::build(track, s_dim, 8, w, theta)?)
    } else {
        Ok(load_gripmap_from(resolve(base, spec))?)
    }
}

/// Largest lateral corridor extent on either side, sampled along the track.
pub fn corridor_half_extent(track: &TrackGeometry) -> Result<f64, SimError> {
    let step = (track.s_max() / 512.0).max(0.5);
    let mut w = 0.0_f64;
    let mut s = 0.0;
    while s < track.s_max() {
        let slice = track.slice_at(s)?;
        w = w.max(slice.n_max.max(-slice.n_min));
        s += step;
    }
    Ok(w.max(0.1))
}

fn check_raceline_matches(rows: &[RacelineRow], track: &TrackGeometry) -> Result<(), SimError> {
    if rows.len() < 2 {
        return Err(SimError::Scenario("raceline needs at least 2 rows".into()));
    }
    let last_s = rows[rows.len() - 1].s;
    let s_max = track.s_max();
    if track.closed() {
        if (last_s - s_max).abs() > 1e-6 * s_max.max(1.0) {
            return Err(SimError::Scenario(format!(
                "raceline ends at s = {last_s:.3} but the closed track is {s_max:.3} m long"
            )));
        }
    } else if !(last_s <= s_max + 1e-6 && last_s >= 0.5 * s_max) {
        return Err(SimError::Scenario(format!(
            "raceline ends at s = {last_s:.3}, expected near the track end {s_max:.3}"
        )));
    }
    for k in [0, rows.len() / 2, rows.len() - 1] {
        let row = &rows[k];
        let slice = track.slice_at(track.wrap_s(row.s))?;
        if row.n < slice.n_min - 1e-6 || row.n > slice.n_max + 1e-6 {
            return Err(SimError::Scenario(format!(
                "raceline offset n = {} at s = {:.3} leaves the corridor",
                row.n, row.s
            )));
        }
        let pose = track.frenet_to_cartesian(crate::track::FrenetPoint { s: track.wrap_s(row.s), n: row.n })?;
        let err = (pose.x - row.x).hypot(pose.y - row.y);
        if err > 0.5 {
            return Err(SimError::Scenario(format!(
                "raceline geometry does not match the track: {err:.3} m offset at s = {:.3}",
                row.s
            )));
        }
    }
    Ok(())
}

/// The plan currently being followed, with its start time.
struct ActivePlan {
    t0: f64,
    horizon: f64,
    lateral: Quintic,
    candidate: CandidateTrajectory,
}

impl ActivePlan {
    fn new(candidate: CandidateTrajectory, t0: f64) -> Self {
        Self { t0, horizon: candidate.horizon, lateral: Quintic { c: candidate.lateral }, candidate }
    }

    fn target_at(&self, t_abs: f64) -> PlanTarget {
        let tau = (t_abs - self.t0).clamp(0.0, self.horizon);
        let pts = &self.candidate.points;
        let m = pts.len();
        let dt = self.horizon / (m - 1) as f64;
        let x = (tau / dt).min((m - 1) as f64);
        let k = (x as usize).min(m - 2);
        let f = x - k as f64;
        PlanTarget {
            n: self.lateral.pos(tau),
            n_dot: self.lateral.vel(tau),
            n_ddot: self.lateral.acc(tau),
            v: pts[k].v + f * (pts[k + 1].v - pts[k].v),
            ax: pts[k].ax + f * (pts[k + 1].ax - pts[k].ax),
        }
    }
}

struct Opponent {
    s: f64,
    n: f64,
    v: f64,
    cap: f64,
    margin: f64,
}

/// Scripted opponent update: hold the lane, chase the lowest allowed speed
/// within braking reach (cap or upcoming cornering limit on true grip),
/// brake honestly for it.
fn advance_opponent(
    o: &mut Opponent,
    track: &TrackGeometry,
    model: &GggvModel,
    truth: &GroundTruthGrip,
    dt: f64,
) -> Result<(), SimError> {
    let q = |s: f64| if track.closed() { track.wrap_s(s) } else { s.clamp(0.0, track.s_max()) };
    let slice = track.slice_at(q(o.s))?;
    let mult = truth.multiplier(o.n);
    let base = model.base_limits(o.v.max(0.1), slice.a_z)?;
    let brake = base.ax_min * mult;
    let mut v_target = o.cap;
    let reach = o.cap * o.cap / (1.7 * brake) + 20.0;
    let mut d = 0.0;
    while d <= reach {
        let sl = track.slice_at(q(o.s + d))?;
        let frame = (1.0 - o.n * sl.kappa).max(MIN_FRAME_FACTOR);
        let keff = (sl.kappa / frame).abs();
        if keff > 1e-9 {
            let cap_v = lateral_cap(model, keff, mult * o.margin * o.margin, sl.a_z)?;
            v_target = v_target.min((cap_v * cap_v + 1.7 * brake * d).sqrt());
        }
        d += 2.0;
    }
    // Brake at full strength the moment the target is exceeded; the 1.7
    // (vs 2.0) factor in the lookahead leaves reserve for the lag.
    let accel = if o.v > v_target {
        -brake
    } else {
        (3.0 * (v_target - o.v)).min(0.5 * base.ax_max * mult)
    };
    o.v = (o.v + accel * dt).max(0.0);
    let frame = (1.0 - o.n * slice.kappa).max(MIN_FRAME_FACTOR);
    o.s += o.v / frame * dt;
    Ok(())
}

/// Curvature level that counts as "in a corner" for entry statistics; `None`
/// on tracks with no meaningful corners.
fn corner_kappa_threshold(track: &TrackGeometry) -> Result<Option<f64>, SimError> {
    let step = (track.s_max() / 2048.0).max(0.5);
    let mut k_max = 0.0_f64;
    let mut s = 0.0;
    while s < track.s_max() {
        k_max = k_max.max(track.slice_at(s)?.kappa.abs());
        s += step;
    }
    Ok(if k_max < 1e-3 { None } else { Some(0.5 * k_max) })
}

/// Runs the closed loop: replan at the configured period, follow the
/// selected trajectory between replans, advance scripted opponents, log
/// every step. The loop is fully deterministic for a given bundle.
/// Lateral overshoot past the corridor edge tolerated before a run-off is
/// declared [m].
const OFF_TRACK_GRACE: f64 = 1.0;
/// How far ahead of now the follower reads the active plan [s].
const PLAN_PREVIEW: f64 = 0.1;

pub fn run_scenario(bundle: &ScenarioBundle) -> Result<RunReport, SimError> {
    let sc = &bundle.scenario;
    let track = &bundle.track;
    let wrap = SWrap::for_track(track);
    let dt = sc.dt;
    let steps_total = (sc.duration / dt).round() as usize;
    let replan_every = ((sc.planner_period / dt).round() as usize).max(1);

    let ego_spec = sc.vehicles.iter().find(|v| v.role == VehicleRole::Ego).expect("validated");
    let mut ego = SimVehicle::new(ego_spec.s, ego_spec.n, ego_spec.v);
    let mut opponents: Vec<Opponent> = sc
        .vehicles
        .iter()
        .filter(|v| v.role == VehicleRole::Opponent)
        .map(|v| Opponent { s: v.s, n: v.n, v: v.v, cap: v.v_cap.unwrap_or(v.v), margin: v.corner_margin })
        .collect();

    let mut plan: Option<ActivePlan> = None;
    let mut steps = Vec::with_capacity(steps_total);
    let mut cycles = Vec::new();
    let mut events = RunEvents::default();
    let mut agg = RunAggregates::default();
    let kappa_corner = corner_kappa_threshold(track)?;
    let mut in_corner = false;
    let mut lap_start_t = 0.0;
    let s_start = ego.s;
    let q = |s: f64| if track.closed() { track.wrap_s(s) } else { s.clamp(0.0, track.s_max()) };

    for k in 0..steps_total {
        if !track.closed() && ego.s >= track.s_max() - 1.0 {
            break;
        }
        if !ego.loss_of_control && k % replan_every == 0 {
            let slice = track.slice_at(q(ego.s))?;
            let frame = (1.0 - ego.n * slice.kappa).max(MIN_FRAME_FACTOR);
            // Position and velocity re-anchor on the measured state, but
            // acceleration re-anchors on the previous plan: anchoring on the
            // *executed* acceleration feeds every saturation back into the
            // next plan's continuity condition and the loop ratchets to the
            // envelope.
            let (s_ddot0, n_ddot0) = match &plan {
                Some(p) => {
                    let at_now = p.target_at(ego.t);
                    (at_now.ax / frame, at_now.n_ddot)
                }
                None => (ego.ax_exec / frame, ego.n_ddot_exec),
            };
            let state = PlannerState {
                s: ego.s,
                s_dot: ego.v / frame,
                s_ddot: s_ddot0,
                n: ego.n,
                n_dot: ego.n_dot,
                n_ddot: n_ddot0,
            };
            if state.s_dot > 0.5 {
                let opp_states: Vec<OpponentState> =
                    opponents.iter().map(|o| OpponentState { s: o.s, n: o.n, v: o.v }).collect();
                let res = plan_cycle(
                    &state,
                    &bundle.raceline,
                    Some(&bundle.assumed),
                    &bundle.model,
                    track,
                    &opp_states,
                    &sc.planner,
                )?;
                if res.emergency {
                    agg.emergency_cycles += 1;
                }
                cycles.push(res.record());
                plan = Some(ActivePlan::new(res.best, ego.t));
            } else {
                plan = None;
            }
        }

        // Feedforward reads the plan a short lead ahead: each replan pins the
        // polynomials' initial acceleration for continuity, so at lead zero
        // the commanded acceleration never develops. The feedback references
        // stay at the current time — previewing them too would count the
        // upcoming speed change once as feedforward and again as error.
        let mut target = match (&plan, ego.loss_of_control) {
            (Some(p), false) => {
                let now = p.target_at(ego.t);
                let ahead = p.target_at(ego.t + PLAN_PREVIEW);
                PlanTarget { n: now.n, n_dot: now.n_dot, n_ddot: ahead.n_ddot, v: now.v, ax: ahead.ax }
            }
            _ => PlanTarget { n: ego.n, n_dot: 0.0, n_ddot: 0.0, v: 0.0, ax: 0.0 },
        };
        let slice = track.slice_at(q(ego.s))?;
        let theta = bundle.assumed.theta_at(ego.s, ego.n, wrap)?;
        // Execution-layer speed governor, the same rule the opponents use but
        // against the reference profile: carry no more speed than braking at
        // a reserved fraction of the assumed envelope can bleed down to the
        // profile anywhere within stopping reach. Smooth-polynomial plans
        // structurally under-deliver sustained full braking (their
        // deceleration tapers to the terminal condition), and this backstop
        // is what turns that shortfall into earlier braking instead of a hot
        // corner entry.
        if !ego.loss_of_control {
            let brake_gov = 0.85 * bundle.model.base_limits(ego.v, slice.a_z)?.ax_min * theta;
            if brake_gov > 0.0 {
                let mut v_gov = f64::INFINITY;
                let reach = ego.v * ego.v / (2.0 * brake_gov) + 20.0;
                let mut ahead = 0.0;
                while ahead <= reach {
                    let mut vt = bundle.raceline.v_at(ego.s + ahead);
                    // The corner margin applies only where the profile is
                    // grip-limited: cornering references get a pad that
                    // absorbs the follower's convergence lag — arriving a
                    // little hot on a narrow grip groove starts a slide the
                    // planner cannot arrest — while straight-line top speed
                    // stays untouched.
                    if vt < 0.995 * bundle.model.v_max {
                        vt *= ego_spec.corner_margin;
                    }
                    v_gov = v_gov.min((vt * vt + 2.0 * brake_gov * ahead).sqrt());
                    ahead += 2.0;
                }
                if target.v > v_gov {
                    target.v = v_gov;
                    target.ax = target.ax.min(0.0);
                }
            }
        }
        let ctx = StepContext { theta_assumed: theta, kappa: slice.kappa, a_z: slice.a_z };
        let s_before = ego.s;
        let row =
            step_vehicle(&mut ego, &target, &ctx, &sc.truth, &bundle.model, &sc.spin_rule, &sc.gains, dt)?;
        agg.max_util_true = agg.max_util_true.max(row.util_true);
        if events.spin_time.is_none() {
            events.spin_time = ego.spin_time;
        }
        // Leaving the corridor past the grace band is a run-off: the car is in
        // the gravel and control is gone, whatever the grip says.
        if !ego.loss_of_control && (ego.n < slice.n_min - OFF_TRACK_GRACE || ego.n > slice.n_max + OFF_TRACK_GRACE) {
            ego.loss_of_control = true;
            events.off_track_time = Some(ego.t);
        }
        if let Some(kc) = kappa_corner {
            let now_in = slice.kappa.abs() >= kc;
            if now_in && !in_corner {
                agg.corner_entry_v_min =
                    Some(agg.corner_entry_v_min.map_or(row.v, |m: f64| m.min(row.v)));
                agg.corner_entry_v_max =
                    Some(agg.corner_entry_v_max.map_or(row.v, |m: f64| m.max(row.v)));
            }
            in_corner = now_in;
        }
        if track.closed() {
            let s_max = track.s_max();
            if (ego.s / s_max).floor() > (s_before / s_max).floor() {
                agg.lap_times.push(ego.t - lap_start_t);
                lap_start_t = ego.t;
            }
        }
        // A pass only counts while the car is still composed.
        if events.overtake_complete.is_none()
            && !ego.loss_of_control
            && !opponents.is_empty()
            && opponents.iter().all(|o| bundle.raceline.s_delta(ego.s, o.s) > 5.0)
        {
            events.overtake_complete = Some(ego.t);
        }
        steps.push(row);
        for o in opponents.iter_mut() {
            advance_opponent(o, track, &bundle.model, &sc.truth, dt)?;
        }
    }

    agg.distance = ego.s - s_start;
    agg.mean_speed = if ego.t > 0.0 { agg.distance / ego.t } else { 0.0 };
    agg.final_speed = ego.v;
    agg.planner_cycles = cycles.len();
    Ok(RunReport { steps, events, aggregates: agg, cycles, seed: sc.seed })
}

/// Everything needed to materialize the outside-overtake scenario: a stadium
/// speedway, an opponent camped on the inside groove under a speed cap, a
/// faster ego, and ground truth that only keeps full grip near the groove.
/// `with_map` controls whether the planner's map matches the truth or
/// assumes uniform full grip.
pub struct OvertakeParts {
    pub scenario: Scenario,
    pub track: TrackGeometry,
    pub model: GggvModel,
    pub raceline_rows: Vec<RacelineRow>,
    pub assumed: GripMap,
}

/// Design values for the overtake preset, shared by tests and the CLI.
pub const OVERTAKE_FLOOR: f64 = 0.65;
pub const OVERTAKE_DURATION: f64 = 30.0;

pub fn overtake_parts(with_map: bool, floor: f64, duration: f64) -> Result<OvertakeParts, SimError> {
    let track = TrackGeometry::from_points(
        &synth::speedway_points(700.0, 130.0, 6.0, 2.0),
        TrackLoadOptions::default(),
    )?;
    let mut model = GggvModel::default_flat();
    model.v_max = 78.0;
    // The groove sits on the racing line itself (the inside hug both
    // racelines pick), with a fast falloff: driving the line is safe at
    // full commitment, and the grip deficit lives exactly where an
    // overtake has to go — one car-width off the groove is already near
    // the floor.
    let truth = GroundTruthGrip { n_rl: 5.5, w_p: 1.0, slope: 0.4, floor };
    let base_map = GripMap::build(&track, 256, 30, 6.0, 1.0)?;
    let assumed = if with_map {
        base_map.map_cells(|_, b, _| truth.multiplier(0.5 * (b.n_lo + b.n_hi)))?
    } else {
        base_map
    };
    let raceline_cfg = RacelineConfig { margin: 0.5, ..RacelineConfig::default() };
    let result = optimize_raceline(&track, &model, &assumed, &raceline_cfg)?;
    let rows = raceline_rows(&result, &track, &assumed)?;
    let table = RacelineTable::from_rows(&rows, &track)?;

    let ego_s = 450.0;
    let scenario = Scenario {
        track: "speedway.csv".into(),
        model: "model.json".into(),
        raceline: if with_map { "raceline_map.csv".into() } else { "raceline_uniform.csv".into() },
        gripmap: if with_map { "truth.gmap".into() } else { "uniform:1.0".into() },
        truth,
        vehicles: vec![
            VehicleSpec {
                role: VehicleRole::Ego,
                s: ego_s,
                n: table.n_at(ego_s),
                v: 60.0,
                v_cap: None,
                corner_margin: default_corner_margin(),
            },
            VehicleSpec {
                role: VehicleRole::Opponent,
                s: 530.0,
                n: truth.n_rl,
                v: 69.0,
                v_cap: Some(69.0),
                corner_margin: default_corner_margin(),
            },
        ],
        seed: 42,
        duration,
        planner_period: 0.1,
        dt: 0.01,
        planner: PlannerConfig {
            d_safe: 12.0,
            weights: CostWeights { track: 0.5, jerk: 0.02, opponent: 5.0, grip: 2000.0, progress: 2.0 },
            ..PlannerConfig::default()
        },
        spin_rule: SpinRule::default(),
        gains: FollowerGains::default(),
    };
    Ok(OvertakeParts { scenario, track, model, raceline_rows: rows, assumed })
}

pub fn overtake_bundle(with_map: bool, floor: f64, duration: f64) -> Result<ScenarioBundle, SimError> {
    let parts = overtake_parts(with_map, floor, duration)?;
    ScenarioBundle::assemble(parts.scenario, parts.track, parts.model, &parts.raceline_rows, parts.assumed)
}
