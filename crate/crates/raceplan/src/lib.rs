//! Grip-aware trajectory planning toolkit for autonomous racing.
//!
//! The crate is organized around a single idea: vehicle-dynamics limits are
//! not uniform over a race track, so the planning stack should consult a
//! spatial map of grip scaling factors instead of one global friction
//! assumption. The pieces fit together like this:
//!
//! * [`track`] — centerline geometry in the Frenet frame (arc length `s`,
//!   signed lateral offset `n`), CSV loading, and coordinate conversions.
//! * [`gripmap`] — the `(s, n)` grid of grip scaling factors with O(1)
//!   cell lookup, region updates, telemetry-driven refinement suggestions,
//!   and a checksummed binary file format.
//! * [`gggv`] — speed- and vertical-acceleration-dependent acceleration
//!   envelope (traction/braking/lateral limits) and utilization math.
//! * [`raceline`] — offline minimum-time path + velocity-profile solver on
//!   a lateral-offset lattice.
//! * [`planner`] — online sampling planner: polynomial candidate
//!   trajectories scored by soft costs, with per-point grip lookups.
//! * [`sim`] — closed-loop simulation against a ground-truth grip model
//!   that the planner does not see, plus benchmark harnesses.

pub mod gggv;
pub mod gripmap;
pub mod planner;
pub mod raceline;
pub mod sim;
pub mod track;

pub use gggv::GggvModel;
pub use gripmap::GripMap;
pub use track::TrackGeometry;
