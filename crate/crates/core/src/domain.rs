//! Parameters, the reduced state space and the gain function.

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryFn;
use crate::error::{domain, Result};

/// Slack used when checking state-space inequalities.
pub const STATE_SLACK: f64 = 1e-12;

/// Number of rays of the spider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Params {
    n: u32,
}

impl Params {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(domain("the spider needs at least one ray"));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn n_f64(&self) -> f64 {
        f64::from(self.n)
    }

    /// Probability that an excursion of the signed coordinate from zero is
    /// negative, `1 − 1/n`.
    pub fn skew(&self) -> f64 {
        1.0 - 1.0 / self.n_f64()
    }
}

/// A point `(x, y, z)` of the reduced state space: `x` is the signed
/// position (positive on the longest rib), `y` the longest rib and `-z` the
/// second-longest rib.
///
/// For a single ray the state is `(x, y, 0)` with `|x| ≤ y`; those code paths
/// ignore `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl State {
    /// Validated state with `z ≤ 0 ≤ y`, `z ≤ x ≤ y` and `y + z ≥ 0`.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let s = Self { x, y, z };
        s.check()?;
        Ok(s)
    }

    /// Validated single-ray state with `|x| ≤ y` and `z = 0`.
    pub fn single_ray(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(domain("state coordinates must be finite"));
        }
        if x.abs() > y + STATE_SLACK {
            return Err(domain(format!(
                "single-ray state needs |x| ≤ y, got x = {x}, y = {y}"
            )));
        }
        Ok(Self { x, y, z: 0.0 })
    }

    /// Validated state for `params`: single-ray rules for `n = 1`, the full
    /// state space otherwise.
    pub fn for_params(params: Params, x: f64, y: f64, z: f64) -> Result<Self> {
        if params.n() == 1 {
            if z != 0.0 {
                return Err(domain("a single-ray state has z = 0"));
            }
            Self::single_ray(x, y)
        } else {
            Self::new(x, y, z)
        }
    }

    pub fn origin() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        let Self { x, y, z } = *self;
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(domain("state coordinates must be finite"));
        }
        if z > STATE_SLACK || y < -STATE_SLACK {
            return Err(domain(format!("need z ≤ 0 ≤ y, got y = {y}, z = {z}")));
        }
        if x < z - STATE_SLACK || x > y + STATE_SLACK {
            return Err(domain(format!("need z ≤ x ≤ y, got ({x}, {y}, {z})")));
        }
        if y + z < -STATE_SLACK {
            return Err(domain(format!("need y + z ≥ 0, got y = {y}, z = {z}")));
        }
        Ok(())
    }

    /// Diameter of the visited set, `y − z`.
    pub fn diameter(&self) -> f64 {
        self.y - self.z
    }
}

/// The gain `y − z − x²`.
pub fn gain(state: &State) -> Result<f64> {
    state.check()?;
    Ok(gain_unchecked(state))
}

pub(crate) fn gain_unchecked(s: &State) -> f64 {
    s.y - s.z - s.x * s.x
}

/// Whether immediate stopping is optimal at `state`.
///
/// For `n ≥ 2` this is `f(z) ≤ x ≤ y − ½`, which already implies that the
/// first stage (`f(z) ≤ g(y)`) is over. For `n = 1` it is `y − |x| ≥ ½`.
/// Both boundaries belong to the stopping set.
pub fn in_stopping_region(params: Params, state: &State) -> Result<bool> {
    if params.n() == 1 {
        let s = State::single_ray(state.x, state.y)?;
        return Ok(s.y - s.x.abs() >= 0.5);
    }
    state.check()?;
    let upper = state.y - 0.5;
    if state.x > upper {
        return Ok(false);
    }
    let lower = BoundaryFn::new(params)?.f_lower(state.z.min(0.0))?;
    Ok(lower <= state.x)
}
