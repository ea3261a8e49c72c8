//! Boundary-value polynomials connecting the current state to a sampled end
//! state: a quintic pins position, velocity, and acceleration at both ends;
//! a quartic pins only end velocity and acceleration, leaving the end
//! position free (the natural shape for "reach this speed" longitudinal
//! candidates).

/// `x(t) = sum c[k] t^k`, both endpoint states fully constrained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quintic {
    pub c: [f64; 6],
}

impl Quintic {
    /// Connects `(x0, v0, a0)` at `t = 0` to `(xe, ve, ae)` at `t = t_end`.
    pub fn solve(x0: f64, v0: f64, a0: f64, xe: f64, ve: f64, ae: f64, t_end: f64) -> Self {
        let t = t_end;
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let c3 = (20.0 * (xe - x0) - (8.0 * ve + 12.0 * v0) * t - (3.0 * a0 - ae) * t2) / (2.0 * t3);
        let c4 = (30.0 * (x0 - xe) + (14.0 * ve + 16.0 * v0) * t + (3.0 * a0 - 2.0 * ae) * t2) / (2.0 * t4);
        let c5 = (12.0 * (xe - x0) - 6.0 * (ve + v0) * t - (a0 - ae) * t2) / (2.0 * t5);
        Self { c: [x0, v0, 0.5 * a0, c3, c4, c5] }
    }

    pub fn pos(&self, t: f64) -> f64 {
        let c = &self.c;
        ((((c[5] * t + c[4]) * t + c[3]) * t + c[2]) * t + c[1]) * t + c[0]
    }

    pub fn vel(&self, t: f64) -> f64 {
        let c = &self.c;
        (((5.0 * c[5] * t + 4.0 * c[4]) * t + 3.0 * c[3]) * t + 2.0 * c[2]) * t + c[1]
    }

    pub fn acc(&self, t: f64) -> f64 {
        let c = &self.c;
        ((20.0 * c[5] * t + 12.0 * c[4]) * t + 6.0 * c[3]) * t + 2.0 * c[2]
    }
}

/// `x(t) = sum c[k] t^k` with free end position: the start state is pinned,
/// the end constrains only velocity and acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartic {
    pub c: [f64; 5],
}

impl Quartic {
    /// Connects `(x0, v0, a0)` at `t = 0` to end velocity/acceleration
    /// `(ve, ae)` at `t = t_end`.
    pub fn solve(x0: f64, v0: f64, a0: f64, ve: f64, ae: f64, t_end: f64) -> Self {
        let t = t_end;
        let dv = ve - v0 - a0 * t;
        let da = ae - a0;
        let c3 = dv / (t * t) - da / (3.0 * t);
        let c4 = da / (4.0 * t * t) - dv / (2.0 * t * t * t);
        Self { c: [x0, v0, 0.5 * a0, c3, c4] }
    }

    pub fn pos(&self, t: f64) -> f64 {
        let c = &self.c;
        (((c[4] * t + c[3]) * t + c[2]) * t + c[1]) * t + c[0]
    }

    pub fn vel(&self, t: f64) -> f64 {
        let c = &self.c;
        ((4.0 * c[4] * t + 3.0 * c[3]) * t + 2.0 * c[2]) * t + c[1]
    }

    pub fn acc(&self, t: f64) -> f64 {
        let c = &self.c;
        (12.0 * c[4] * t + 6.0 * c[3]) * t + 2.0 * c[2]
    }
}
