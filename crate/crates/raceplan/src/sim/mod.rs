//! Closed-loop desk-scale simulator. The world carries a ground-truth grip
//! field the planner never sees directly; the planner drives with whatever
//! grip map it was given. A point-mass follower executes the selected
//! trajectories, commanded accelerations saturate against the *true*
//! envelope, and sustained over-demand trips a loss-of-control latch. Runs
//! emit a per-step log plus aggregate events so map-on / map-off behavior
//! can be compared offline.

pub mod bench;
pub mod scenario;

use serde::{Deserialize, Serialize};

use crate::gggv::{GggvError, GggvModel};
use crate::gripmap::GripMapError;
use crate::planner::{CycleRecord, PlannerError};
use crate::raceline::RacelineError;
use crate::track::TrackError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("scenario invalid: {0}")]
    Scenario(String),
    #[error("simulation step invalid: {0}")]
    Step(String),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Gggv(#[from] GggvError),
    #[error(transparent)]
    GripMap(#[from] GripMapError),
    #[error(transparent)]
    Raceline(#[from] RacelineError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario parse error: {0}")]
    Parse(String),
}

/// Ground-truth grip field: full grip on a plateau around a reference lateral
/// offset, linear falloff beyond it, floored. The multiplier scales the whole
/// acceleration envelope, exactly like a map factor would — the difference is
/// that this one is *true* and the planner only knows its own map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthGrip {
    /// Lateral center of the high-grip groove [m].
    pub n_rl: f64,
    /// Plateau half-width around the groove [m].
    pub w_p: f64,
    /// Multiplier drop per meter beyond the plateau [1/m].
    pub slope: f64,
    /// Lower bound on the multiplier.
    pub floor: f64,
}

impl GroundTruthGrip {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Scenario(msg));
        if !self.n_rl.is_finite() {
            return bad(format!("truth n_rl must be finite, got {}", self.n_rl));
        }
        if !(self.w_p.is_finite() && self.w_p >= 0.0) {
            return bad(format!("truth w_p must be non-negative, got {}", self.w_p));
        }
        if !(self.slope.is_finite() && self.slope >= 0.0) {
            return bad(format!("truth slope must be non-negative, got {}", self.slope));
        }
        if !(self.floor.is_finite() && self.floor > 0.0 && self.floor <= 1.0) {
            return bad(format!("truth floor must be in (0, 1], got {}", self.floor));
        }
        Ok(())
    }

    /// True grip multiplier at a lateral offset. Piecewise linear and
    /// continuous: 1 on the plateau, `1 - slope * excess` beyond it, never
    /// below the floor.
    #[inline]
    pub fn multiplier(&self, n: f64) -> f64 {
        let excess = ((n - self.n_rl).abs() - self.w_p).max(0.0);
        (1.0 - self.slope * excess).max(self.floor)
    }
}

/// Loss-of-control rule: sustained true over-utilization spins the car.
/// Threshold and dwell are design values, tunable per scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinRule {
    /// True utilization above this counts toward the dwell timer.
    pub threshold: f64,
    /// Consecutive seconds above threshold before control is lost [s].
    pub dwell: f64,
}

impl Default for SpinRule {
    fn default() -> Self {
        Self { threshold: 1.15, dwell: 0.3 }
    }
}

/// Follower gains for the point-mass execution model: speed tracking plus a
/// critically-damped-by-default lateral PD. Design values, tunable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FollowerGains {
    /// Speed error gain [1/s].
    pub k_v: f64,
    /// Lateral natural frequency [rad/s].
    pub omega_n: f64,
    /// Lateral damping ratio.
    pub zeta: f64,
    /// Deceleration after control is lost, as a fraction of the base braking
    /// limit (a spinning car scrubs speed, it does not brake cleanly).
    pub spin_decel_frac: f64,
}

impl Default for FollowerGains {
    fn default() -> Self {
        Self { k_v: 2.0, omega_n: 2.0, zeta: 1.0, spin_decel_frac: 0.3 }
    }
}

/// Simulated vehicle state in Frenet coordinates. `v` is speed along the
/// vehicle's own path; the loss-of-control latch persists once set.
#[derive(Debug, Clone, Copy)]
pub struct SimVehicle {
    pub t: f64,
    pub s: f64,
    pub n: f64,
    pub n_dot: f64,
    pub v: f64,
    pub loss_of_control: bool,
    /// Time at which control was lost, if it was.
    pub spin_time: Option<f64>,
    /// Consecutive time spent above the spin threshold [s].
    pub over_limit_time: f64,
    /// Executed accelerations from the last step, fed back to the planner as
    /// the current state's second derivatives.
    pub ax_exec: f64,
    pub n_ddot_exec: f64,
}

impl SimVehicle {
    pub fn new(s: f64, n: f64, v: f64) -> Self {
        Self {
            t: 0.0,
            s,
            n,
            n_dot: 0.0,
            v,
            loss_of_control: false,
            spin_time: None,
            over_limit_time: 0.0,
            ax_exec: 0.0,
            n_ddot_exec: 0.0,
        }
    }
}

/// One target point of the commanded trajectory, already interpolated to the
/// current time: where the plan wants the vehicle and at what speed, plus
/// feedforward accelerations.
#[derive(Debug, Clone, Copy)]
pub struct PlanTarget {
    pub n: f64,
    pub n_dot: f64,
    pub n_ddot: f64,
    pub v: f64,
    pub ax: f64,
}

/// Local context for one step: what the planner's map claims here, and the
/// reference geometry at the vehicle's station.
#[derive(Debug, Clone, Copy)]
pub struct StepContext {
    pub theta_assumed: f64,
    pub kappa: f64,
    pub a_z: f64,
}

/// One per-step log row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStep {
    pub t: f64,
    pub s: f64,
    pub n: f64,
    pub v: f64,
    pub ax_cmd: f64,
    pub ay_cmd: f64,
    /// Utilization against the planner-assumed envelope (its map factor).
    pub util_assumed: f64,
    /// Utilization against the true envelope; equals
    /// `util_assumed * theta_assumed / multiplier_true` by construction.
    pub util_true: f64,
}

const MAX_STEP_DT: f64 = 0.05;
/// Frenet frames degenerate at the center of curvature; keep the projection
/// factor away from zero.
pub(crate) const MIN_FRAME_FACTOR: f64 = 0.05;
/// Fraction of the longitudinal envelope always kept available for braking
/// when deceleration is demanded, even at full lateral saturation.
const BRAKE_RESERVE: f64 = 0.3;
/// Deceleration commanded per unit of lateral-demand shortfall when steering
/// saturates [s^-1 . (m/s^2) per (m/s^2)].
const UNDERSTEER_BRAKE_GAIN: f64 = 2.0;

/// Advances the vehicle one step. Commands come from a follower law around
/// the target (feedforward plus feedback) and are budgeted inside the
/// *assumed* envelope (the controller trusts the planner's map) with lateral
/// priority: steering keeps its demand first, longitudinal gets what friction
/// remains, except that braking always holds a small reserve — giving the
/// whole circle to steering while overspeed would leave no way to ever slow
/// down. Execution then saturates against the *true* envelope: demand beyond
/// it is radially scaled down and the lateral shortfall feeds straight into
/// the offset dynamics, so the car runs wide. Sustained true
/// over-utilization sets the loss-of-control latch, after which the car just
/// scrubs speed along its offset.
pub fn step_vehicle(
    vehicle: &mut SimVehicle,
    target: &PlanTarget,
    ctx: &StepContext,
    truth: &GroundTruthGrip,
    model: &GggvModel,
    rule: &SpinRule,
    gains: &FollowerGains,
    dt: f64,
) -> Result<RunStep, SimError> {
    if !(dt > 0.0 && dt <= MAX_STEP_DT) {
        return Err(SimError::Step(format!("dt must be in (0, {MAX_STEP_DT}] s, got {dt}")));
    }
    let base = model.base_limits(vehicle.v, ctx.a_z)?;
    let p = model.shape_exponent;

    let (ax_cmd, ay_cmd, n_ddot_cmd) = if vehicle.loss_of_control {
        (-gains.spin_decel_frac * base.ax_min, 0.0, 0.0)
    } else {
        let mut ax_raw = target.ax + gains.k_v * (target.v - vehicle.v);
        let n_ddot_raw = target.n_ddot
            + 2.0 * gains.zeta * gains.omega_n * (target.n_dot - vehicle.n_dot)
            + gains.omega_n * gains.omega_n * (target.n - vehicle.n);
        let frame = (1.0 - vehicle.n * ctx.kappa).max(MIN_FRAME_FACTOR);
        let ay_raw = ctx.kappa / frame * vehicle.v * vehicle.v + n_ddot_raw;
        // Steering saturation converts into a brake demand. Once the tires
        // are asked for more lateral than the envelope holds, the shortfall
        // feeds the offset error, which raises the demand again: holding
        // speed there is a stable slide toward the outside wall, and
        // scrubbing speed is the only exit.
        let assumed = base.scaled(ctx.theta_assumed);
        let lat_shortfall = ay_raw.abs() - assumed.ay_max;
        if lat_shortfall > 0.0 {
            ax_raw = ax_raw.min(-UNDERSTEER_BRAKE_GAIN * lat_shortfall);
        }
        // The controller trusts the planner's map: never ask the tires for
        // more than the assumed envelope. Lateral first, with a braking
        // reserve; the longitudinal budget is the friction left over. The
        // reserve scales with the braking actually demanded: a fixed
        // carve-out would tax the apex — where the speed profile rides the
        // full lateral envelope and the tracking loop's trim braking would
        // instantly shrink it — for reserve the trim never uses.
        let braking = ax_raw < 0.0;
        let ay_cap = if braking {
            let r = (ax_raw.abs() / assumed.ax_min).min(BRAKE_RESERVE);
            assumed.ay_max * (1.0 - r.powf(p)).powf(1.0 / p)
        } else {
            assumed.ay_max
        };
        let ay = ay_raw.clamp(-ay_cap, ay_cap);
        let ax_lim = if braking { assumed.ax_min } else { assumed.ax_max };
        let ax_budget = ax_lim * (1.0 - (ay.abs() / assumed.ay_max).powf(p)).max(0.0).powf(1.0 / p);
        let ax = ax_raw.clamp(-ax_budget, ax_budget);
        (ax, ay, (n_ddot_raw - ay_raw) + ay)
    };

    let util_assumed = base.scaled(ctx.theta_assumed).utilization(ax_cmd, ay_cmd, p);
    let multiplier = truth.multiplier(vehicle.n);
    let util_true = util_assumed * ctx.theta_assumed / multiplier;

    // Saturation against the true envelope: radial clamp, lateral shortfall
    // becomes tracking error.
    let exec_scale = if util_true > 1.0 { 1.0 / util_true } else { 1.0 };
    let ax_exec = ax_cmd * exec_scale;
    let n_ddot_exec = if vehicle.loss_of_control { 0.0 } else { n_ddot_cmd + (ay_cmd * exec_scale - ay_cmd) };

    let row = RunStep {
        t: vehicle.t,
        s: vehicle.s,
        n: vehicle.n,
        v: vehicle.v,
        ax_cmd,
        ay_cmd,
        util_assumed,
        util_true,
    };

    if !vehicle.loss_of_control {
        if util_true > rule.threshold {
            vehicle.over_limit_time += dt;
            if vehicle.over_limit_time >= rule.dwell - 1e-12 {
                vehicle.loss_of_control = true;
                vehicle.spin_time = Some(vehicle.t);
            }
        } else {
            vehicle.over_limit_time = 0.0;
        }
    }

    vehicle.v = (vehicle.v + ax_exec * dt).max(0.0);
    if vehicle.loss_of_control {
        vehicle.n_dot = 0.0;
    } else {
        vehicle.n_dot += n_ddot_exec * dt;
        vehicle.n += vehicle.n_dot * dt;
    }
    let frame = (1.0 - vehicle.n * ctx.kappa).max(MIN_FRAME_FACTOR);
    vehicle.s += vehicle.v / frame * dt;
    vehicle.t += dt;
    vehicle.ax_exec = ax_exec;
    vehicle.n_ddot_exec = n_ddot_exec;
    Ok(row)
}

/// Events observed during a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct RunEvents {
    /// Time control was lost, if it was [s].
    pub spin_time: Option<f64>,
    /// Time the ego first got clear past every opponent, if it did [s].
    pub overtake_complete: Option<f64>,
    /// Time the ego left the corridor past the grace band, if it did [s].
    pub off_track_time: Option<f64>,
}

/// Aggregates over a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunAggregates {
    pub max_util_true: f64,
    pub corner_entry_v_min: Option<f64>,
    pub corner_entry_v_max: Option<f64>,
    pub lap_times: Vec<f64>,
    pub distance: f64,
    pub mean_speed: f64,
    pub final_speed: f64,
    pub emergency_cycles: usize,
    pub planner_cycles: usize,
}

/// Full run output: the per-step log, events, aggregates, and per-cycle
/// planner diagnostics. The diagnostics carry wall-clock timings and are
/// excluded from the CSV/summary writers, which are byte-deterministic for a
/// given scenario.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub steps: Vec<RunStep>,
    pub events: RunEvents,
    pub aggregates: RunAggregates,
    pub cycles: Vec<CycleRecord>,
    pub seed: u64,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    seed: u64,
    steps: usize,
    events: &'a RunEvents,
    aggregates: &'a RunAggregates,
}

impl RunReport {
    /// Writes the per-step log as CSV. Output is deterministic for a given
    /// scenario: floats use shortest round-trip formatting and no wall-clock
    /// data is included.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<(), SimError> {
        writeln!(w, "t,s,n,v,ax_cmd,ay_cmd,util_assumed,util_true")?;
        for r in &self.steps {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.t, r.s, r.n, r.v, r.ax_cmd, r.ay_cmd, r.util_assumed, r.util_true
            )?;
        }
        Ok(())
    }

    /// Writes the events-and-aggregates summary as JSON (deterministic, like
    /// the CSV).
    pub fn write_summary<W: std::io::Write>(&self, w: W) -> Result<(), SimError> {
        let summary = RunSummary {
            seed: self.seed,
            steps: self.steps.len(),
            events: &self.events,
            aggregates: &self.aggregates,
        };
        serde_json::to_writer_pretty(w, &summary).map_err(|e| SimError::Parse(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_truth(floor: f64) -> GroundTruthGrip {
        GroundTruthGrip { n_rl: 0.0, w_p: 1.5, slope: 0.1, floor }
    }

    fn straight_ctx(theta: f64) -> StepContext {
        StepContext { theta_assumed: theta, kappa: 0.0, a_z: 9.81 }
    }

    fn hold_target(n: f64, v: f64) -> PlanTarget {
        PlanTarget { n, n_dot: 0.0, n_ddot: 0.0, v, ax: 0.0 }
    }

    #[test]
    fn multiplier_has_plateau_falloff_and_floor() {
        let truth = GroundTruthGrip { n_rl: 2.0, w_p: 1.5, slope: 0.1, floor: 0.65 };
        assert_eq!(truth.multiplier(2.0), 1.0);
        assert_eq!(truth.multiplier(3.5), 1.0);
        assert_eq!(truth.multiplier(0.5), 1.0);
        assert!((truth.multiplier(4.5) - 0.9).abs() < 1e-12);
        assert!((truth.multiplier(-0.5) - 0.9).abs() < 1e-12);
        assert_eq!(truth.multiplier(40.0), 0.65);
        // Continuity: steps bounded by slope times spacing.
        let mut prev = truth.multiplier(-10.0);
        let mut n = -10.0;
        while n < 14.0 {
            n += 0.01;
            let m = truth.multiplier(n);
            assert!((m - prev).abs() <= truth.slope * 0.01 + 1e-12);
            prev = m;
        }
    }

    #[test]
    fn truth_validation_rejects_bad_fields() {
        assert!(flat_truth(0.65).validate().is_ok());
        assert!(flat_truth(0.0).validate().is_err());
        assert!(flat_truth(1.5).validate().is_err());
        assert!(GroundTruthGrip { n_rl: f64::NAN, ..flat_truth(0.65) }.validate().is_err());
        assert!(GroundTruthGrip { w_p: -1.0, ..flat_truth(0.65) }.validate().is_err());
        assert!(GroundTruthGrip { slope: -0.1, ..flat_truth(0.65) }.validate().is_err());
    }

    #[test]
    fn below_limit_commands_execute_exactly() {
        let model = GggvModel::default_flat();
        let mut veh = SimVehicle::new(100.0, 0.0, 20.0);
        // Target slightly faster: commanded ax = k_v * 1.0 = 2, well inside.
        let target = hold_target(0.0, 21.0);
        let row = step_vehicle(
            &mut veh,
            &target,
            &straight_ctx(1.0),
            &flat_truth(0.65),
            &model,
            &SpinRule::default(),
            &FollowerGains::default(),
            0.01,
        )
        .unwrap();
        assert!((row.ax_cmd - 2.0).abs() < 1e-12);
        assert_eq!(row.ay_cmd, 0.0);
        assert!(row.util_true < 1.0);
        assert!((veh.v - (20.0 + 2.0 * 0.01)).abs() < 1e-12);
        assert_eq!(veh.n, 0.0);
        assert!(!veh.loss_of_control);
    }

    #[test]
    fn saturation_radially_clamps_and_grows_tracking_error() {
        let model = GggvModel::default_flat();
        let truth = GroundTruthGrip { n_rl: 0.0, w_p: 0.0, slope: 1.0, floor: 0.5 };
        // Vehicle far off the groove: true multiplier is the floor 0.5, but
        // the map claims 1.0. Demand near the assumed limit.
        let mut veh = SimVehicle::new(100.0, 4.0, 30.0);
        let target = PlanTarget { n: 4.0, n_dot: 0.0, n_ddot: 9.0, v: 30.0, ax: 0.0 };
        let row = step_vehicle(
            &mut veh,
            &target,
            &straight_ctx(1.0),
            &truth,
            &model,
            &SpinRule::default(),
            &FollowerGains::default(),
            0.01,
        )
        .unwrap();
        assert!((row.ay_cmd - 9.0).abs() < 1e-12);
        assert!((row.util_true - 1.8).abs() < 1e-12, "util_true = {}", row.util_true);
        // Executed lateral accel is clamped to the true limit 5, so the
        // tracking-error state grows by the shortfall.
        let expected_n_ddot = 9.0 / 1.8 - 9.0 + 9.0;
        assert!((veh.n_ddot_exec - expected_n_ddot).abs() < 1e-9);
        assert!(veh.n_dot < 9.0 * 0.01);
    }

    #[test]
    fn utilization_identity_holds_exactly() {
        let model = GggvModel::default_flat();
        let truth = flat_truth(0.65);
        for (theta, n, ax, v) in [(1.0, 5.0, 6.0, 30.0), (0.8, 2.0, 4.0, 20.0), (0.65, -3.0, 8.0, 40.0)] {
            let mut veh = SimVehicle::new(10.0, n, v);
            let target = PlanTarget { n, n_dot: 0.0, n_ddot: 0.0, v: v + ax / 2.0, ax: 0.0 };
            let row = step_vehicle(
                &mut veh,
                &target,
                &straight_ctx(theta),
                &truth,
                &model,
                &SpinRule::default(),
                &FollowerGains::default(),
                0.01,
            )
            .unwrap();
            let expected = row.util_assumed * theta / truth.multiplier(n);
            assert_eq!(row.util_true.to_bits(), expected.to_bits());
        }
    }

    #[test]
    fn commands_never_exceed_the_assumed_envelope() {
        let model = GggvModel::default_flat();
        let mut veh = SimVehicle::new(0.0, 0.0, 20.0);
        // Huge target error: raw command far beyond limits, clipped to the
        // assumed envelope boundary.
        let target = PlanTarget { n: 5.0, n_dot: 0.0, n_ddot: 0.0, v: 60.0, ax: 5.0 };
        let row = step_vehicle(
            &mut veh,
            &target,
            &straight_ctx(0.9),
            &flat_truth(1.0),
            &model,
            &SpinRule::default(),
            &FollowerGains::default(),
            0.01,
        )
        .unwrap();
        assert!(row.util_assumed <= 1.0 + 1e-9, "util_assumed = {}", row.util_assumed);
        assert!(row.util_assumed > 0.999);
    }

    #[test]
    fn sustained_overload_spins_and_blips_do_not() {
        let model = GggvModel::default_flat();
        let truth = GroundTruthGrip { n_rl: 0.0, w_p: 0.0, slope: 1.0, floor: 0.65 };
        let rule = SpinRule::default();
        let gains = FollowerGains::default();
        // Off-groove cornering demand at the assumed limit: util_true ~ 1.54.
        let spin_target = PlanTarget { n: 4.0, n_dot: 0.0, n_ddot: 9.5, v: 30.0, ax: 0.0 };
        let calm_target = hold_target(4.0, 30.0);

        let mut veh = SimVehicle::new(0.0, 4.0, 30.0);
        let mut spun_at = None;
        for k in 0..50 {
            veh.n = 4.0;
            veh.n_dot = 0.0;
            let row =
                step_vehicle(&mut veh, &spin_target, &straight_ctx(1.0), &truth, &model, &rule, &gains, 0.01)
                    .unwrap();
            assert!(row.util_true > rule.threshold);
            if veh.loss_of_control {
                spun_at = Some(k);
                break;
            }
        }
        // 0.3 s dwell at 10 ms steps: the 30th over-limit step trips it.
        assert_eq!(spun_at, Some(29));
        assert!((veh.spin_time.unwrap() - 0.29).abs() < 1e-9);

        // Blips shorter than the dwell reset cleanly.
        let mut veh = SimVehicle::new(0.0, 4.0, 30.0);
        for _ in 0..3 {
            for _ in 0..20 {
                veh.n = 4.0;
                veh.n_dot = 0.0;
                step_vehicle(&mut veh, &spin_target, &straight_ctx(1.0), &truth, &model, &rule, &gains, 0.01)
                    .unwrap();
            }
            step_vehicle(&mut veh, &calm_target, &straight_ctx(1.0), &truth, &model, &rule, &gains, 0.01)
                .unwrap();
            assert_eq!(veh.over_limit_time, 0.0);
        }
        assert!(!veh.loss_of_control);
    }

    #[test]
    fn loss_of_control_persists_and_scrubs_speed() {
        let model = GggvModel::default_flat();
        let truth = flat_truth(0.65);
        let mut veh = SimVehicle::new(50.0, 3.0, 25.0);
        veh.loss_of_control = true;
        veh.spin_time = Some(1.0);
        let rule = SpinRule::default();
        let gains = FollowerGains::default();
        let target = hold_target(0.0, 60.0);
        let mut last_v = veh.v;
        for _ in 0..100 {
            let row = step_vehicle(&mut veh, &target, &straight_ctx(1.0), &truth, &model, &rule, &gains, 0.02)
                .unwrap();
            assert!(veh.loss_of_control);
            assert!(row.ax_cmd < 0.0);
            assert!(veh.v <= last_v);
            last_v = veh.v;
        }
        assert_eq!(veh.spin_time, Some(1.0));
        assert_eq!(veh.n, 3.0);
        assert!(veh.v < 20.0);
    }

    #[test]
    fn step_rejects_bad_dt() {
        let model = GggvModel::default_flat();
        let truth = flat_truth(0.65);
        for dt in [0.0, -0.01, 0.051, f64::NAN] {
            let mut veh = SimVehicle::new(0.0, 0.0, 10.0);
            let out = step_vehicle(
                &mut veh,
                &hold_target(0.0, 10.0),
                &straight_ctx(1.0),
                &truth,
                &model,
                &SpinRule::default(),
                &FollowerGains::default(),
                dt,
            );
            assert!(matches!(out, Err(SimError::Step(_))), "dt = {dt}");
        }
    }

    #[test]
    fn report_writers_are_deterministic() {
        let report = RunReport {
            steps: vec![
                RunStep { t: 0.0, s: 1.0, n: 0.1, v: 30.0, ax_cmd: 0.5, ay_cmd: 9.0, util_assumed: 0.9, util_true: 1.1 },
                RunStep { t: 0.01, s: 1.3, n: 0.11, v: 30.0, ax_cmd: 0.4, ay_cmd: 9.1, util_assumed: 0.91, util_true: 1.12 },
            ],
            events: RunEvents { spin_time: Some(2.5), overtake_complete: None, off_track_time: None },
            aggregates: RunAggregates { max_util_true: 1.12, ..Default::default() },
            cycles: Vec::new(),
            seed: 7,
        };
        let mut csv1 = Vec::new();
        let mut csv2 = Vec::new();
        report.write_csv(&mut csv1).unwrap();
        report.write_csv(&mut csv2).unwrap();
        assert_eq!(csv1, csv2);
        assert!(csv1.starts_with(b"t,s,n,v,ax_cmd,ay_cmd,util_assumed,util_true\n"));
        let mut js = Vec::new();
        report.write_summary(&mut js).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&js).unwrap();
        assert_eq!(v["events"]["spin_time"], 2.5);
        assert_eq!(v["steps"], 2);
    }
}
