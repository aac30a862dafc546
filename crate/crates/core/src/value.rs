//! The value function `U(x, y, z) = sup E[D_τ − τ]` and the sharp constant
//! `C_n = 2√U(0,0,0)`.
//!
//! One and two rays have closed forms ([`u_n1`], [`u_n2`]). For `n ≥ 2` the
//! [`ValueEvaluator`] splits the state space into three regions:
//!
//! * `R1`: `y ≥ ½` and `z ≤ φ(y − ½)`; the first stage of the optimal rule
//!   is over and `U` is an explicit five-branch piecewise quadratic.
//! * `R2`: `y ≥ ½` and `z > φ(y − ½)`; `U` is its value on the `R1` seam at
//!   height `f(z) + ½` minus the integral of `U_y` down to `y`.
//! * `R3`: `y < ½`; `U` is the expectation of `U(½, ½, Z_σ)` at the first
//!   time `σ` the longest rib reaches ½, integrated against the law of
//!   `Z_σ`. The slice `s ↦ U(½, ½, s)` is tabulated once per evaluator.

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryFn;
use crate::domain::{Params, State};
use crate::error::{domain, Result};
use crate::numerics::{integrate, ChebyshevTable, QuadratureConfig};

/// Number of Chebyshev nodes in the `U(½, ½, ·)` table.
pub const DEFAULT_TABLE_NODES: usize = 2049;

/// Value function of the one-sided problem `sup E[Y_τ − τ]` for a standard
/// Brownian motion with running maximum `Y`.
pub fn v_onesided(x: f64, y: f64) -> Result<f64> {
    if !(y >= x.max(0.0)) {
        return Err(domain(format!(
            "V needs y ≥ max(x, 0), got x = {x}, y = {y}"
        )));
    }
    Ok(v_onesided_unchecked(x, y))
}

fn v_onesided_unchecked(x: f64, y: f64) -> f64 {
    if y - x >= 0.5 {
        y - x * x
    } else {
        y * y + 0.25 - (2.0 * y - 1.0) * x
    }
}

/// Value function for a single ray (reflected Brownian motion).
pub fn u_n1(x: f64, y: f64) -> Result<f64> {
    if !(y >= x.abs()) {
        return Err(domain(format!("U needs y ≥ |x|, got x = {x}, y = {y}")));
    }
    Ok(if y < 0.5 {
        0.5
    } else {
        v_onesided_unchecked(x.abs(), y)
    })
}

/// Value function for two rays (standard Brownian motion, `D` = range).
pub fn u_n2(x: f64, y: f64, z: f64) -> Result<f64> {
    if !(z <= 0.0 && 0.0 <= y && z <= x && x <= y) {
        return Err(domain(format!(
            "U needs z ≤ 0 ≤ y and z ≤ x ≤ y, got ({x}, {y}, {z})"
        )));
    }
    if y - z < 1.0 {
        return Ok(y - z - x * (y + z) + ((y - 1.0).powi(2) + (z + 1.0).powi(2)) / 2.0 - 0.25);
    }
    Ok(if y - x < x - z {
        v_onesided_unchecked(x, y) - z
    } else {
        v_onesided_unchecked(-x, -z) + y
    })
}

/// Which formula applies at a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "region", rename_all = "snake_case")]
pub enum Region {
    /// Single ray, branch 1 (`y ≥ |x| + ½`, stopping), 2 (`y ≥ ½`) or
    /// 3 (`y < ½`).
    SingleRay {
        branch: u8,
    },
    /// Branches 1–5 in the order `x ≤ f(z) ≤ 0`, `x ≤ 0 ≤ f(z)`,
    /// `0 ≤ x ≤ f(z)`, `f(z) ≤ x ≤ y − ½` (stopping), `x ≥ y − ½`.
    R1 {
        branch: u8,
    },
    R2,
    R3,
}

impl Region {
    pub fn label(&self) -> String {
        match self {
            Region::SingleRay { branch } => format!("single-ray branch {branch}"),
            Region::R1 { branch } => format!("R1 branch {branch}"),
            Region::R2 => "R2".to_string(),
            Region::R3 => "R3".to_string(),
        }
    }
}

fn single_ray_branch(x: f64, y: f64) -> u8 {
    if y < 0.5 {
        3
    } else if y >= x.abs() + 0.5 {
        1
    } else {
        2
    }
}

fn r1_branch(x: f64, y: f64, f: f64) -> u8 {
    if f <= 0.0 && x <= f {
        1
    } else if x <= 0.0 && 0.0 <= f {
        2
    } else if 0.0 <= x && x <= f {
        3
    } else if x <= y - 0.5 {
        4
    } else {
        5
    }
}

/// Region of `state` for `params` (`n = 1` uses the single-ray branches).
pub fn classify(params: Params, state: &State) -> Result<Region> {
    if params.n() == 1 {
        let s = State::single_ray(state.x, state.y)?;
        return Ok(Region::SingleRay {
            branch: single_ray_branch(s.x, s.y),
        });
    }
    state.check()?;
    classify_with(&BoundaryFn::new(params)?, state)
}

fn classify_with(boundary: &BoundaryFn, s: &State) -> Result<Region> {
    if s.y < 0.5 {
        return Ok(Region::R3);
    }
    if boundary.stage1_satisfied(s.y, s.z) {
        let f = boundary.f_lower(s.z.min(0.0))?;
        Ok(Region::R1 {
            branch: r1_branch(s.x, s.y, f),
        })
    } else {
        Ok(Region::R2)
    }
}

/// Value and region at `state`: closed forms for `n ≤ 2`, the general
/// construction for `n ≥ 3`.
pub fn evaluate(params: Params, state: &State, quad: &QuadratureConfig) -> Result<(f64, Region)> {
    match params.n() {
        1 => {
            let region = classify(params, state)?;
            Ok((u_n1(state.x, state.y)?, region))
        }
        2 => {
            let region = classify(params, state)?;
            Ok((u_n2(state.x, state.y, state.z)?, region))
        }
        _ => {
            let ev = ValueEvaluator::with_config(params, *quad, DEFAULT_TABLE_NODES)?;
            Ok((ev.value(state)?, ev.region(state)?))
        }
    }
}

/// `U(0, 0, 0)` for any `n ≥ 1`.
pub fn u000(params: Params) -> Result<f64> {
    u000_with(params, &QuadratureConfig::default())
}

pub fn u000_with(params: Params, quad: &QuadratureConfig) -> Result<f64> {
    if params.n() == 1 {
        return u_n1(0.0, 0.0);
    }
    ValueEvaluator::with_config(params, *quad, DEFAULT_TABLE_NODES)?.u000()
}

/// The best constant `C_n` in `E[D_τ] ≤ C_n √(E τ)`.
pub fn best_constant(params: Params) -> Result<f64> {
    best_constant_with(params, &QuadratureConfig::default())
}

pub fn best_constant_with(params: Params, quad: &QuadratureConfig) -> Result<f64> {
    match params.n() {
        1 => Ok(2f64.sqrt()),
        2 => Ok(3f64.sqrt()),
        _ => Ok(2.0 * u000_with(params, quad)?.sqrt()),
    }
}

/// Region-dispatching evaluator of `U` for `n ≥ 2`.
///
/// Construction tabulates `s ↦ U(½, ½, s)` on `[−½, 0]`; afterwards the
/// evaluator is immutable and can be shared across threads.
#[derive(Debug, Clone)]
pub struct ValueEvaluator {
    params: Params,
    boundary: BoundaryFn,
    quad: QuadratureConfig,
    half_half: ChebyshevTable,
}

impl ValueEvaluator {
    pub fn new(params: Params) -> Result<Self> {
        Self::with_config(params, QuadratureConfig::default(), DEFAULT_TABLE_NODES)
    }

    pub fn with_config(params: Params, quad: QuadratureConfig, table_nodes: usize) -> Result<Self> {
        quad.validate()?;
        if table_nodes < 2 {
            return Err(domain("the U(½, ½, ·) table needs at least two nodes"));
        }
        let boundary = BoundaryFn::new(params)?;
        let mut ev = Self {
            params,
            boundary,
            quad,
            half_half: ChebyshevTable::build(-0.5, 0.0, 2, |_| Ok(0.0))?,
        };
        ev.half_half = ChebyshevTable::build(-0.5, 0.0, table_nodes, |s| ev.u_half_half(s))?;
        Ok(ev)
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn boundary(&self) -> &BoundaryFn {
        &self.boundary
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    /// The cached `(s, U(½, ½, s))` nodes.
    pub fn half_half_table(&self) -> &ChebyshevTable {
        &self.half_half
    }

    fn m(&self) -> f64 {
        self.params.n_f64() - 1.0
    }

    pub fn region(&self, state: &State) -> Result<Region> {
        state.check()?;
        classify_with(&self.boundary, state)
    }

    /// `U(state)`.
    pub fn value(&self, state: &State) -> Result<f64> {
        state.check()?;
        match classify_with(&self.boundary, state)? {
            Region::R1 { .. } => self.value_r1(state),
            Region::R2 => self.value_r2(state),
            Region::R3 => self.value_r3(state),
            Region::SingleRay { .. } => unreachable!("evaluator requires n ≥ 2"),
        }
    }

    /// The `R1` formula, applied at any state with `y ≥ ½`. Inside `R1` this
    /// is `U`; on the `R1`/`R2` seam both formulas agree.
    pub fn value_r1(&self, s: &State) -> Result<f64> {
        let f = self.boundary.f_lower(s.z.min(0.0))?;
        Ok(self.r1_formula(s.x, s.y, s.z, f))
    }

    fn r1_formula(&self, x: f64, y: f64, z: f64, f: f64) -> f64 {
        let base = y - z;
        match r1_branch(x, y, f) {
            1 => base - 2.0 * (z + 0.5) * x + (z + 0.5).powi(2),
            2 => base - 2.0 * f * x / self.m() + f * f,
            3 => base - 2.0 * f * x + f * f,
            4 => base - x * x,
            _ => base - 2.0 * (y - 0.5) * x + (y - 0.5).powi(2),
        }
    }

    /// `(n−1)s − φ(s − ½)`, the denominator of `U_y` at running height `s`.
    fn uy_denominator(&self, s: f64) -> f64 {
        self.m() * s - self.boundary.phi_unchecked(s - 0.5)
    }

    fn uy_formula(&self, x: f64, y: f64) -> f64 {
        let numerator = if x >= 0.0 {
            self.m() * (y - x)
        } else {
            self.m() * y - x
        };
        numerator / self.uy_denominator(y)
    }

    /// `U_y` on `R2`.
    pub fn u_y_partial(&self, state: &State) -> Result<f64> {
        state.check()?;
        if classify_with(&self.boundary, state)? != Region::R2 {
            return Err(domain(format!(
                "U_y formula applies on y ≥ ½, z > φ(y − ½); got ({}, {}, {})",
                state.x, state.y, state.z
            )));
        }
        Ok(self.uy_formula(state.x, state.y))
    }

    /// The `R2` formula: the seam value at height `f(z) + ½` minus the
    /// integral of `U_y` from `y` up to that height.
    pub fn value_r2(&self, s: &State) -> Result<f64> {
        if !(s.y >= 0.5) {
            return Err(domain("the R2 formula needs y ≥ ½"));
        }
        let f = self.boundary.f_lower(s.z.min(0.0))?;
        let top = f + 0.5;
        let anchor = self.r1_formula(s.x, top, s.z, f);
        if top <= s.y {
            return Ok(anchor);
        }
        let x = s.x;
        let drop = integrate(|h| self.uy_formula(x, h), s.y, top, &self.quad)?;
        Ok(anchor - drop.value)
    }

    /// `U(½, ½, s)` for `s ∈ [−½, 0]`, computed directly from the `R1`/`R2`
    /// formulas (no table).
    pub fn u_half_half(&self, s: f64) -> Result<f64> {
        if !(-0.5..=0.0).contains(&s) {
            return Err(domain(format!("U(½, ½, s) needs s ∈ [−½, 0], got {s}")));
        }
        let state = State {
            x: 0.5,
            y: 0.5,
            z: s,
        };
        if self.boundary.stage1_satisfied(0.5, s) {
            self.value_r1(&state)
        } else {
            self.value_r2(&state)
        }
    }

    /// Cached `U(½, ½, s)`.
    pub fn half_half(&self, s: f64) -> f64 {
        self.half_half.eval(s)
    }

    fn kernel_integral(&self, a: f64, b: f64) -> Result<f64> {
        if a >= b {
            return Ok(0.0);
        }
        let m = self.m();
        let r = integrate(
            |s| self.half_half.eval(s) / (m - 2.0 * s).powi(2),
            a,
            b,
            &self.quad,
        )?;
        Ok(r.value)
    }

    /// The `R3` formula (`y < ½`).
    pub fn value_r3(&self, s: &State) -> Result<f64> {
        let n = self.params.n_f64();
        let m = self.m();
        let State { x, y, z } = *s;
        let at_minus_y = self.half_half(-y);
        let at_z = self.half_half(z);
        let far = 2.0 * n * m * self.kernel_integral(-0.5, -y)?;
        let near = self.kernel_integral(-y, z)?;
        let value = if x < 0.0 {
            at_minus_y * 2.0 * (m * y - x) / (m + 2.0 * y)
                + at_z * 2.0 * (x - z) / (m - 2.0 * z)
                + far
                + 2.0 * (m - 2.0 * x) * near
        } else {
            at_minus_y * 2.0 * m * (y - x) / (m + 2.0 * y)
                + at_z * 2.0 * (m * x - z) / (m - 2.0 * z)
                + far
                + 2.0 * m * (1.0 - 2.0 * x) * near
        };
        Ok(value)
    }

    /// `U(0, 0, 0) = 2n(n−1) ∫_{−½}^{0} U(½, ½, s) / (n−1−2s)² ds`.
    pub fn u000(&self) -> Result<f64> {
        let n = self.params.n_f64();
        Ok(2.0 * n * self.m() * self.kernel_integral(-0.5, 0.0)?)
    }

    pub fn best_constant(&self) -> Result<f64> {
        Ok(2.0 * self.u000()?.sqrt())
    }
}
