//! Acceleration-envelope model ("g-g-g-v"): traction, braking, and lateral
//! limits as functions of speed and vertical acceleration, plus the
//! utilization metric that the planner, raceline solver, and simulator all
//! share.
//!
//! Base limits come from three tables over a (speed, vertical-acceleration)
//! grid, bilinearly interpolated and clamped at the edges. A grip map scales
//! all three limits by the local factor theta. Feasibility of a commanded
//! acceleration is a p-norm test:
//!
//! ```text
//! utilization = ((|ax| / ax_lim)^p + (|ay| / ay_lim)^p)^(1/p)   <= 1
//! ```
//!
//! with `ax_lim` picked by sign (traction vs braking) and `p` the shape
//! exponent of the envelope (2 = ellipse, 1 = diamond).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::gripmap::{GripMap, GripMapError, SWrap};

#[derive(Debug, thiserror::Error)]
pub enum GggvError {
    #[error("speed must be non-negative and finite, got {v}")]
    InvalidSpeed { v: f64 },
    #[error("model validation failed: {0}")]
    Invalid(String),
    #[error("model json parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    GripMap(#[from] GripMapError),
}

/// Acceleration limits at one operating point, all positive magnitudes
/// [m/s^2]. `ax_min` is the braking limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub ax_max: f64,
    pub ax_min: f64,
    pub ay_max: f64,
}

impl Limits {
    /// Limits scaled by a grip factor.
    #[inline]
    pub fn scaled(self, theta: f64) -> Self {
        Self { ax_max: theta * self.ax_max, ax_min: theta * self.ax_min, ay_max: theta * self.ay_max }
    }

    /// p-norm envelope utilization of a commanded acceleration pair.
    #[inline]
    pub fn utilization(self, ax: f64, ay: f64, p: f64) -> f64 {
        let ax_lim = if ax >= 0.0 { self.ax_max } else { self.ax_min };
        let rx = ax.abs() / ax_lim;
        let ry = ay.abs() / self.ay_max;
        if p == 2.0 {
            (rx * rx + ry * ry).sqrt()
        } else if p == 1.0 {
            rx + ry
        } else {
            (rx.powf(p) + ry.powf(p)).powf(1.0 / p)
        }
    }

    /// Longitudinal acceleration still available at a given lateral demand:
    /// the envelope remainder `ax_lim * (1 - (|ay|/ay_lim)^p)^(1/p)`, zero
    /// once the lateral limit is saturated.
    #[inline]
    pub fn ax_available(self, ay: f64, braking: bool, p: f64) -> f64 {
        let ax_lim = if braking { self.ax_min } else { self.ax_max };
        let ry = (ay.abs() / self.ay_max).min(1.0);
        let remainder = if p == 2.0 {
            (1.0 - ry * ry).max(0.0).sqrt()
        } else if p == 1.0 {
            1.0 - ry
        } else {
            (1.0 - ry.powf(p)).max(0.0).powf(1.0 / p)
        };
        ax_lim * remainder
    }
}

/// Speed- and vertical-acceleration-dependent acceleration envelope.
///
/// Tables are row-major over `(v_grid, az_grid)` (speed outer). The JSON
/// form mirrors the struct field-for-field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GggvModel {
    pub v_grid: Vec<f64>,
    pub az_grid: Vec<f64>,
    pub ax_max: Vec<Vec<f64>>,
    pub ax_min: Vec<Vec<f64>>,
    pub ay_max: Vec<Vec<f64>>,
    /// Envelope shape exponent p >= 1.
    pub shape_exponent: f64,
    /// Hard speed ceiling [m/s].
    pub v_max: f64,
    /// Minimum-turning-radius bound as a curvature [1/m].
    pub kappa_max: f64,
}

impl GggvModel {
    /// Model with speed- and az-independent limits.
    pub fn constant(ax_max: f64, ax_min: f64, ay_max: f64, v_max: f64, kappa_max: f64) -> Self {
        Self {
            v_grid: vec![0.0],
            az_grid: vec![9.81],
            ax_max: vec![vec![ax_max]],
            ax_min: vec![vec![ax_min]],
            ay_max: vec![vec![ay_max]],
            shape_exponent: 2.0,
            v_max,
            kappa_max,
        }
    }

    /// Bench-scale default: a 10 m/s^2 envelope in every direction, 80 m/s
    /// ceiling, 10 m minimum turning radius.
    pub fn default_flat() -> Self {
        Self::constant(10.0, 10.0, 10.0, 80.0, 0.1)
    }

    pub fn validate(&self) -> Result<(), GggvError> {
        let err = |msg: String| Err(GggvError::Invalid(msg));
        if self.v_grid.is_empty() || self.az_grid.is_empty() {
            return err("v_grid and az_grid must be non-empty".into());
        }
        for w in self.v_grid.windows(2) {
            if !(w[1] > w[0]) {
                return err(format!("v_grid not strictly ascending at {} -> {}", w[0], w[1]));
            }
        }
        for w in self.az_grid.windows(2) {
            if !(w[1] > w[0]) {
                return err(format!("az_grid not strictly ascending at {} -> {}", w[0], w[1]));
            }
        }
        if self.v_grid[0] < 0.0 || !self.v_grid.iter().all(|v| v.is_finite()) {
            return err("v_grid must be finite and non-negative".into());
        }
        if !self.az_grid.iter().all(|v| v.is_finite()) {
            return err("az_grid must be finite".into());
        }
        for (name, table) in [("ax_max", &self.ax_max), ("ax_min", &self.ax_min), ("ay_max", &self.ay_max)] {
            if table.len() != self.v_grid.len() {
                return err(format!("{name} must have one row per v_grid entry"));
            }
            for (vi, row) in table.iter().enumerate() {
                if row.len() != self.az_grid.len() {
                    return err(format!("{name} row {vi} must have one column per az_grid entry"));
                }
                for (ai, &x) in row.iter().enumerate() {
                    if !(x.is_finite() && x > 0.0) {
                        return err(format!("{name}[{vi}][{ai}] must be positive and finite, got {x}"));
                    }
                    // Downforce can only add grip: limits must not shrink as
                    // vertical load grows.
                    if ai > 0 && x < row[ai - 1] {
                        return err(format!("{name}[{vi}] decreases along az at column {ai}"));
                    }
                }
            }
        }
        if !(self.shape_exponent.is_finite() && self.shape_exponent >= 1.0) {
            return err(format!("shape_exponent must be >= 1, got {}", self.shape_exponent));
        }
        if !(self.v_max.is_finite() && self.v_max > 0.0) {
            return err(format!("v_max must be positive, got {}", self.v_max));
        }
        if !(self.kappa_max.is_finite() && self.kappa_max > 0.0) {
            return err(format!("kappa_max must be positive, got {}", self.kappa_max));
        }
        Ok(())
    }

    /// True when the tables are a single node, i.e. limits are operating-
    /// point independent. Lets hot paths skip interpolation entirely.
    #[inline]
    pub fn is_constant(&self) -> bool {
        self.v_grid.len() == 1 && self.az_grid.len() == 1
    }

    /// Base (unscaled) limits at an operating point. Queries outside the
    /// grid clamp to the edges; negative or non-finite speed is an error.
    #[inline]
    pub fn base_limits(&self, v: f64, a_z: f64) -> Result<Limits, GggvError> {
        if !(v.is_finite() && v >= 0.0) {
            return Err(GggvError::InvalidSpeed { v });
        }
        if self.is_constant() {
            return Ok(Limits { ax_max: self.ax_max[0][0], ax_min: self.ax_min[0][0], ay_max: self.ay_max[0][0] });
        }
        let (vi, vt) = locate(&self.v_grid, v);
        let (ai, at) = locate(&self.az_grid, a_z);
        let pick = |table: &Vec<Vec<f64>>| -> f64 {
            let v0 = table[vi][ai] + at * (table[vi][ai + 1] - table[vi][ai]);
            let v1 = table[vi + 1][ai] + at * (table[vi + 1][ai + 1] - table[vi + 1][ai]);
            v0 + vt * (v1 - v0)
        };
        Ok(Limits { ax_max: pick(&self.ax_max), ax_min: pick(&self.ax_min), ay_max: pick(&self.ay_max) })
    }

    /// Limits scaled by the grip map factor at `(s, n)`.
    #[inline]
    pub fn effective_limits(
        &self,
        grid: &GripMap,
        wrap: SWrap,
        s: f64,
        n: f64,
        v: f64,
        a_z: f64,
    ) -> Result<Limits, GggvError> {
        let theta = grid.theta_at(s, n, wrap)?;
        Ok(self.base_limits(v, a_z)?.scaled(theta))
    }

    /// Envelope utilization of commanded accelerations under map-scaled
    /// limits at `(s, n)`.
    pub fn utilization(
        &self,
        grid: &GripMap,
        wrap: SWrap,
        s: f64,
        n: f64,
        v: f64,
        a_z: f64,
        ax: f64,
        ay: f64,
    ) -> Result<f64, GggvError> {
        Ok(self.effective_limits(grid, wrap, s, n, v, a_z)?.utilization(ax, ay, self.shape_exponent))
    }

    /// A state/command is feasible when utilization stays within the
    /// envelope and speed below the ceiling.
    pub fn feasible(
        &self,
        grid: &GripMap,
        wrap: SWrap,
        s: f64,
        n: f64,
        v: f64,
        a_z: f64,
        ax: f64,
        ay: f64,
    ) -> Result<bool, GggvError> {
        Ok(self.utilization(grid, wrap, s, n, v, a_z, ax, ay)? <= 1.0 && v <= self.v_max)
    }
}

/// Interval index and interpolation fraction for a clamped query into an
/// ascending grid with at least 2 entries.
#[inline]
fn locate(grid: &[f64], x: f64) -> (usize, f64) {
    if grid.len() == 1 {
        return (0, 0.0);
    }
    if x <= grid[0] {
        return (0, 0.0);
    }
    let last = grid.len() - 1;
    if x >= grid[last] {
        return (last - 1, 1.0);
    }
    let mut i = grid.partition_point(|&g| g <= x) - 1;
    i = i.min(last - 1);
    ((i), (x - grid[i]) / (grid[i + 1] - grid[i]))
}

/// Parses and validates a model from JSON.
pub fn load_gggv_json<R: Read>(reader: R) -> Result<GggvModel, GggvError> {
    let model: GggvModel = serde_json::from_reader(reader)?;
    model.validate()?;
    Ok(model)
}

pub fn save_gggv_json<W: Write>(model: &GggvModel, writer: W) -> Result<(), GggvError> {
    model.validate()?;
    serde_json::to_writer_pretty(writer, model)?;
    Ok(())
}
