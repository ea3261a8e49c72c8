//! End-to-end closed-loop runs of the bundled overtake scenario.

use raceplan::sim::scenario::{overtake_bundle, run_scenario, OVERTAKE_FLOOR};

#[test]
fn probe_overtake() {
    let bundle = overtake_bundle(true, OVERTAKE_FLOOR, 45.0).unwrap();
    let report = run_scenario(&bundle).unwrap();
    println!(
        "spin: {:?}  overtake: {:?}  off_track: {:?}  emergencies {}",
        report.events.spin_time, report.events.overtake_complete, report.events.off_track_time,
        report.aggregates.emergency_cycles
    );
    println!("cycles 25..32:");
    for (i, c) in report.cycles.iter().enumerate() {
        let t = i as f64 * 0.1;
        if !(25.0..=32.0).contains(&t) || i % 3 != 0 {
            continue;
        }
        let b = &c.best_cost_breakdown;
        println!(
            "  t={:5.1} feas={:4} H={:.1} ve={:5.1} | track={:7.2} opp={:6.3} grip={:8.4} prog={:5.1} total={:8.2}",
            t, c.n_feasible, c.chosen_horizon, c.chosen_end_speed, b.raceline_tracking, b.opponent_proximity, b.grip_excess, b.progress, b.total
        );
    }
    panic!("probe only");
}
