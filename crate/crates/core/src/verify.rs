//! Property suites for the value function, the boundary and the simulator.
//!
//! Each suite returns a [`SuiteReport`] listing the measured residual of
//! every property next to its tolerance. The deterministic suites sample
//! states on regular grids over the state space; `zsigma`, `scaling` and
//! `inequality` run the Monte Carlo engine.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::boundary::BoundaryFn;
use crate::domain::{gain_unchecked, in_stopping_region, Params, State};
use crate::error::{domain, Error, Result};
use crate::montecarlo::{
    audit_battery, audit_inequality, verify_scaling, verify_zsigma, ScalingSpec, SimConfig,
};
use crate::value::{u_n2, Region, ValueEvaluator};

/// Largest `y` sampled by the grid suites.
pub const GRID_Y_MAX: f64 = 2.5;

/// Offset used to evaluate both sides of a seam.
const SEAM_OFFSET: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Majorization,
    Seams,
    Kink,
    Neumann,
    Symmetry,
    N2Reduction,
    Ode,
    Uy,
    Zsigma,
    Scaling,
    Inequality,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Majorization,
        Suite::Seams,
        Suite::Kink,
        Suite::Neumann,
        Suite::Symmetry,
        Suite::N2Reduction,
        Suite::Ode,
        Suite::Uy,
        Suite::Zsigma,
        Suite::Scaling,
        Suite::Inequality,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Majorization => "majorization",
            Suite::Seams => "seams",
            Suite::Kink => "kink",
            Suite::Neumann => "neumann",
            Suite::Symmetry => "symmetry",
            Suite::N2Reduction => "n2-reduction",
            Suite::Ode => "ode",
            Suite::Uy => "uy",
            Suite::Zsigma => "zsigma",
            Suite::Scaling => "scaling",
            Suite::Inequality => "inequality",
        }
    }

    /// Whether the suite runs the simulator.
    pub fn is_statistical(&self) -> bool {
        matches!(self, Suite::Zsigma | Suite::Scaling | Suite::Inequality)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| domain(format!("unknown suite `{s}`")))
    }
}

/// Settings shared by the suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    /// Intervals per axis of the state grids.
    pub grid: usize,
    pub paths: u64,
    pub step: f64,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            grid: 12,
            paths: 100_000,
            step: 1.0 / 64.0,
            seed: 1,
            threads: None,
        }
    }
}

impl VerifyConfig {
    pub fn sim(&self) -> SimConfig {
        SimConfig {
            threads: self.threads,
            ..SimConfig::new(self.step, self.paths, self.seed)
        }
    }
}

/// One property: `passed` is `measured ≤ tolerance` unless stated otherwise
/// in `name`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub samples: u64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, measured: f64, tolerance: f64, samples: u64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            samples,
            passed: measured <= tolerance,
        }
    }

    fn at_least(name: impl Into<String>, measured: f64, tolerance: f64, samples: u64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            samples,
            passed: measured >= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub n: u32,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: Suite, n: u32, checks: Vec<Check>) -> Self {
        Self {
            suite,
            n,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

/// Run one suite for `n` rays.
pub fn run_suite(params: Params, suite: Suite, cfg: &VerifyConfig) -> Result<SuiteReport> {
    if params.n() < 2 {
        return Err(domain("the property suites need n ≥ 2"));
    }
    if cfg.grid < 2 {
        return Err(Error::Config("grid needs at least two intervals".into()));
    }
    let n = params.n();
    let checks = match suite {
        Suite::Ode => ode_checks(params, cfg)?,
        Suite::N2Reduction => {
            if n != 2 {
                return Err(domain("the n2-reduction suite runs with n = 2"));
            }
            n2_checks(&ValueEvaluator::new(params)?, cfg)?
        }
        Suite::Zsigma => zsigma_checks(params, cfg)?,
        Suite::Scaling => scaling_checks(params, cfg)?,
        Suite::Inequality => inequality_checks(params, cfg)?,
        _ => {
            let ev = ValueEvaluator::new(params)?;
            match suite {
                Suite::Majorization => majorization_checks(&ev, cfg)?,
                Suite::Seams => seam_checks(&ev, cfg)?,
                Suite::Kink => kink_checks(&ev, cfg)?,
                Suite::Neumann => neumann_checks(&ev, cfg)?,
                Suite::Symmetry => symmetry_checks(&ev, cfg)?,
                Suite::Uy => uy_checks(&ev, cfg)?,
                _ => unreachable!(),
            }
        }
    };
    Ok(SuiteReport::new(suite, n, checks))
}

fn linspace(a: f64, b: f64, intervals: usize) -> impl Iterator<Item = f64> {
    (0..=intervals).map(move |i| {
        if i == intervals {
            b
        } else {
            a + (b - a) * i as f64 / intervals as f64
        }
    })
}

/// Regular grid over the state space with `y ≤ GRID_Y_MAX`.
pub fn state_grid(intervals: usize) -> Vec<State> {
    let mut out = Vec::new();
    for y in linspace(0.0, GRID_Y_MAX, intervals) {
        for z in linspace(-y, 0.0, intervals) {
            for x in linspace(z, y, intervals) {
                out.push(State { x, y, z });
            }
        }
    }
    out
}

fn majorization_checks(ev: &ValueEvaluator, cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let params = ev.params();
    let mut worst: f64 = f64::INFINITY;
    let mut stop_gap: f64 = 0.0;
    let (mut count, mut stops) = (0u64, 0u64);
    for s in state_grid(cfg.grid) {
        let u = ev.value(&s)?;
        let g = gain_unchecked(&s);
        worst = worst.min(u - g);
        count += 1;
        if in_stopping_region(params, &s)? {
            stop_gap = stop_gap.max((u - g).abs());
            stops += 1;
        }
    }
    // monotone in y (up) and z (down) along grid lines
    let mut violation: f64 = 0.0;
    let mut lines = 0u64;
    let k = cfg.grid;
    for z in linspace(-1.0, 0.0, 4) {
        for x in linspace(z, 0.6, 4) {
            let ys: Vec<f64> = linspace(x.max(-z).max(0.0), GRID_Y_MAX, k).collect();
            let us = ys
                .iter()
                .map(|&y| ev.value(&State { x, y, z }))
                .collect::<Result<Vec<_>>>()?;
            violation = us.windows(2).fold(violation, |v, w| v.max(w[0] - w[1]));
            lines += 1;
        }
    }
    for y in linspace(0.2, GRID_Y_MAX, 4) {
        for x in linspace(-0.2f64.min(y), y, 4) {
            let zs: Vec<f64> = linspace(x.min(0.0), -y, k).collect();
            let us = zs
                .iter()
                .map(|&z| ev.value(&State { x, y, z }))
                .collect::<Result<Vec<_>>>()?;
            violation = us.windows(2).fold(violation, |v, w| v.max(w[0] - w[1]));
            lines += 1;
        }
    }
    Ok(vec![
        Check::at_least("min U − gain", worst, -1e-8, count),
        Check::at_most("max |U − gain| on the stopping set", stop_gap, 1e-12, stops),
        Check::at_most(
            "max decrease along increasing y / decreasing z",
            violation,
            1e-9,
            lines,
        ),
    ])
}

fn seam_checks(ev: &ValueEvaluator, cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let b = ev.boundary();
    let d = SEAM_OFFSET;
    let k = cfg.grid;
    let jump = |a: State, c: State| -> Result<f64> { Ok((ev.value(&a)? - ev.value(&c)?).abs()) };

    // R1 | R2 at z = φ(y − ½)
    let (mut r12, mut n12) = (0.0f64, 0u64);
    for y in linspace(0.5, GRID_Y_MAX, k) {
        let zs = b.phi(y - 0.5)?;
        if zs + d > 0.0 || zs - d < -y {
            continue;
        }
        for x in linspace(zs + d, y, k) {
            r12 = r12.max(jump(State { x, y, z: zs - d }, State { x, y, z: zs + d })?);
            n12 += 1;
        }
    }

    // R2/R1 | R3 at y = ½
    let (mut r3, mut n3) = (0.0f64, 0u64);
    let y = 0.5;
    for z in linspace(-0.5 + d, 0.0, k) {
        for x in linspace(z, y - d, k) {
            r3 = r3.max(jump(State { x, y, z }, State { x, y: y - d, z })?);
            n3 += 1;
        }
    }

    // branch seams inside R1: x = f(z), x = 0 (when f(z) > 0), x = y − ½
    let (mut r1, mut n1) = (0.0f64, 0u64);
    for y in linspace(0.5, GRID_Y_MAX, k) {
        for z in linspace(-y, 0.0, k) {
            if !b.stage1_satisfied(y, z) {
                continue;
            }
            let f = b.f_lower(z)?;
            let mut seams = vec![f, y - 0.5];
            if f > 0.0 {
                seams.push(0.0);
            }
            for x0 in seams {
                if x0 - d < z || x0 + d > y {
                    continue;
                }
                r1 = r1.max(jump(State { x: x0 - d, y, z }, State { x: x0 + d, y, z })?);
                n1 += 1;
            }
        }
    }
    Ok(vec![
        Check::at_most("R1/R2 seam jump", r12, 1e-8, n12),
        Check::at_most("y = ½ seam jump", r3, 1e-8, n3),
        Check::at_most("R1 branch seam jump", r1, 1e-8, n1),
    ])
}

/// Pieces of `[z, y]` on which `U` is affine in `x`.
fn continuation_pieces(ev: &ValueEvaluator, y: f64, z: f64) -> Result<Vec<(f64, f64)>> {
    let b = ev.boundary();
    let mut pieces = Vec::new();
    if y >= 0.5 && b.stage1_satisfied(y, z) {
        let f = b.f_lower(z)?;
        pieces.push((z, f.min(0.0)));
        if f > 0.0 {
            pieces.push((0.0, f));
        }
        pieces.push(((y - 0.5).max(f).max(0.0), y));
    } else {
        pieces.push((z, 0.0));
        pieces.push((0.0, y));
    }
    Ok(pieces.into_iter().filter(|(a, c)| c - a > 1e-3).collect())
}

fn kink_checks(ev: &ValueEvaluator, cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let m = ev.params().n_f64() - 1.0;
    let b = ev.boundary();
    let k = cfg.grid;
    let h = 1e-5;
    let (mut ratio_err, mut kinks) = (0.0f64, 0u64);
    let (mut second, mut pieces) = (0.0f64, 0u64);
    for y in linspace(0.05, GRID_Y_MAX, k) {
        for z in linspace(-y, 0.0, k) {
            let u = |x: f64| ev.value(&State { x, y, z });
            // kink at 0 where both sides are in the continuation region
            // on R1 the slope to the right of 0 is continuation only up to f(z)
            let room = if y >= 0.5 && b.stage1_satisfied(y, z) {
                b.f_lower(z)?
            } else {
                y
            };
            if z < -2.0 * h && room > 2.0 * h && y > 2.0 * h {
                let u0 = u(0.0)?;
                let right = (u(h)? - u0) / h;
                let left = (u0 - u(-h)?) / h;
                if left.abs() > 1e-3 {
                    ratio_err = ratio_err.max((right / left - m).abs());
                    kinks += 1;
                }
            }
            for (a, c) in continuation_pieces(ev, y, z)? {
                let w = (c - a) / 4.0;
                let d2 = u(a + w)? - 2.0 * u(a + 2.0 * w)? + u(a + 3.0 * w)?;
                second = second.max(d2.abs());
                pieces += 1;
            }
        }
    }
    Ok(vec![
        Check::at_most("|U_x(0+)/U_x(0−) − (n−1)|", ratio_err, 1e-6, kinks),
        Check::at_most(
            "second difference in x on continuation pieces",
            second,
            1e-8,
            pieces,
        ),
    ])
}

/// One-sided second-order derivative `(−3f(0) + 4f(δ) − f(2δ)) / 2δ`.
fn one_sided(f: impl Fn(f64) -> Result<f64>, delta: f64) -> Result<f64> {
    Ok((-3.0 * f(0.0)? + 4.0 * f(delta)? - f(2.0 * delta)?) / (2.0 * delta))
}

fn neumann_checks(ev: &ValueEvaluator, cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let k = cfg.grid;
    let delta = 1e-4;
    let (mut uy, mut ny) = (0.0f64, 0u64);
    let (mut uz, mut nz) = (0.0f64, 0u64);
    for y in linspace(0.05, GRID_Y_MAX, k) {
        for z in linspace((-y + 3.0 * delta).min(0.0), 0.0, k) {
            // with x at the running maximum, raising y costs nothing to first order
            let dy = one_sided(|e| ev.value(&State { x: y, y: y + e, z }), delta)?;
            uy = uy.max(dy.abs());
            ny += 1;
            // same at the running minimum, lowering z
            let dz = one_sided(|e| ev.value(&State { x: z, y, z: z - e }), delta)?;
            uz = uz.max(dz.abs());
            nz += 1;
        }
    }
    Ok(vec![
        Check::at_most("|U_y(y, y+, z)|", uy, 1e-5, ny),
        Check::at_most("|U_z(z, y, z−)|", uz, 1e-5, nz),
    ])
}

fn symmetry_checks(ev: &ValueEvaluator, cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut worst: f64 = 0.0;
    let mut count = 0u64;
    for y in linspace(0.0, GRID_Y_MAX, 4 * cfg.grid).skip(1) {
        let plus = ev.value(&State { x: y, y, z: -y })?;
        let minus = ev.value(&State { x: -y, y, z: -y })?;
        worst = worst.max((plus - minus).abs());
        count += 1;
    }
    Ok(vec![Check::at_most(
        "|U(−y, y, −y) − U(y, y, −y)|",
        worst,
        1e-8,
        count,
    )])
}

/// Compare the general construction with the two-ray closed form on a grid
/// of `(intervals + 1)³` states.
pub fn n2_residual(ev: &ValueEvaluator, intervals: usize) -> Result<(f64, u64)> {
    if ev.params().n() != 2 {
        return Err(domain("the n2 reduction compares against n = 2"));
    }
    let mut worst: f64 = 0.0;
    let mut count = 0u64;
    for s in state_grid(intervals) {
        worst = worst.max((ev.value(&s)? - u_n2(s.x, s.y, s.z)?).abs());
        count += 1;
    }
    Ok((worst, count))
}

fn n2_checks(ev: &ValueEvaluator, cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let (worst, count) = n2_residual(ev, cfg.grid)?;
    let u000 = ev.u000()?;
    Ok(vec![
        Check::at_most("|U(0,0,0) − ¾|", (u000 - 0.75).abs(), 1e-8, 1),
        Check::at_most("max |U − closed form|", worst, 1e-8, count),
    ])
}

/// Largest residual of `2f'(z)[f(z) − z/(n−1)] = 1` over `z ∈ (−½, 0)`,
/// with `f'` from central differences.
pub fn ode_residual(params: Params, points: usize) -> Result<f64> {
    let b = BoundaryFn::new(params)?;
    let m = params.n_f64() - 1.0;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 1..points {
        let z = -0.5 + 0.5 * i as f64 / points as f64;
        let hi = (z + h).min(0.0);
        let slope = (b.f_lower(hi)? - b.f_lower(z - h)?) / (hi - (z - h));
        worst = worst.max((2.0 * slope * (b.f_lower(z)? - z / m) - 1.0).abs());
    }
    Ok(worst)
}

fn ode_checks(params: Params, cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let points = 8 * cfg.grid;
    let residual = ode_residual(params, points)?;
    Ok(vec![Check::at_most(
        "|2f'(z)[f(z) − z/(n−1)] − 1|",
        residual,
        1e-6,
        points as u64 - 1,
    )])
}

fn uy_checks(ev: &ValueEvaluator, cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let k = cfg.grid;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut count = 0u64;
    for y in linspace(0.5 + 2.0 * h, GRID_Y_MAX, k) {
        for z in linspace(h - y, 0.0, k) {
            let s = State { x: 0.0, y, z };
            if ev.region(&State { y: y - h, ..s })? != Region::R2
                || ev.region(&State { y: y + h, ..s })? != Region::R2
            {
                continue;
            }
            for x in linspace(z, y - h, k) {
                let s = State { x, y, z };
                let fd = (ev.value(&State { y: y + h, ..s })?
                    - ev.value(&State { y: y - h, ..s })?)
                    / (2.0 * h);
                worst = worst.max((fd - ev.u_y_partial(&s)?).abs());
                count += 1;
            }
        }
    }
    Ok(vec![Check::at_most(
        "|central difference in y − U_y|",
        worst,
        1e-6,
        count,
    )])
}

/// Starting states for the `Z_σ` check: the origin and a state with an atom.
pub fn zsigma_starts() -> [State; 2] {
    [
        State::origin(),
        State {
            x: 0.125,
            y: 0.25,
            z: -0.125,
        },
    ]
}

fn zsigma_checks(params: Params, cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let sim = cfg.sim();
    let mut checks = Vec::new();
    for start in zsigma_starts() {
        let r = verify_zsigma(params, &sim, &start)?;
        let at = format!("from ({}, {}, {})", start.x, start.y, start.z);
        checks.push(Check::at_most(
            format!("KS distance {at}"),
            r.ks_distance,
            0.01,
            r.num_samples,
        ));
        let p = r.atom_lattice;
        let se = (p * (1.0 - p) / r.num_samples as f64).sqrt();
        checks.push(Check::at_most(
            format!("|atom − (1 − F(z − h))| in standard errors {at}"),
            if se > 0.0 {
                (r.atom_empirical - p).abs() / se
            } else {
                (r.atom_empirical - p).abs()
            },
            4.0,
            r.num_samples,
        ));
        if r.capped > 0 {
            checks.push(Check::at_most(
                format!("capped paths {at}"),
                r.capped as f64,
                0.0,
                r.capped,
            ));
        }
    }
    Ok(checks)
}

/// Start of the scaling check, on the grid for steps dividing ⅛.
pub const SCALING_START: State = State {
    x: 0.125,
    y: 0.25,
    z: -0.125,
};

fn scaling_checks(params: Params, cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let start = if params.n() == 1 {
        State {
            z: 0.0,
            ..SCALING_START
        }
    } else {
        SCALING_START
    };
    let report = verify_scaling(params, &cfg.sim(), &ScalingSpec::new(2.0, 1.0, start))?;
    Ok(vec![Check::at_most(
        "max moment discrepancy in standard errors, λ = 2",
        report.max_standardized_discrepancy,
        4.0,
        cfg.paths,
    )])
}

fn inequality_checks(params: Params, cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let c_n = crate::value::best_constant(params)?;
    let rows = audit_inequality(params, &cfg.sim(), &audit_battery(), c_n)?;
    let mut checks = Vec::new();
    for row in rows {
        // gap − band ≤ 0
        checks.push(Check::at_most(
            format!("E[D] − C_n√(Eτ) − band, {}", row.rule),
            row.gap - row.band,
            0.0,
            cfg.paths,
        ));
        if row.attains.is_some() {
            checks.push(Check::at_most(
                format!("|E[D] − C_n√(Eτ)| − band, {}", row.rule),
                row.gap.abs() - row.band,
                0.0,
                cfg.paths,
            ));
        }
    }
    Ok(checks)
}
