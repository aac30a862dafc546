//! Adaptive quadrature, bracketed root finding and Chebyshev interpolation.
//!
//! These are small, self-contained routines tuned for the smooth
//! one-dimensional integrands and monotone equations that show up in the
//! value-function construction.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureConfig {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::Config(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::Config("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of a quadrature: the value and an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Integral {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        // odd Kronrod nodes are the 7-point Gauss nodes
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Integral {
        value: kronrod * half,
        error_estimate: ((kronrod - gauss) * half).abs(),
    }
}

struct Segment {
    a: f64,
    b: f64,
    est: Integral,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.est.error_estimate == other.est.error_estimate
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error_estimate.total_cmp(&other.est.error_estimate)
    }
}

/// Globally adaptive 15-point Gauss–Kronrod quadrature of `f` over `[a, b]`.
///
/// The segment with the largest local error estimate is bisected until the
/// summed estimate drops below `max(abs_tol, rel_tol·|value|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    cfg.validate()?;
    if !(a <= b) {
        return Err(Error::Domain(format!(
            "integration bounds out of order: [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error_estimate: 0.0,
        });
    }
    let first = kronrod15(&f, a, b);
    let mut value = first.value;
    let mut error = first.error_estimate;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, est: first });

    let mut subdivisions = 1;
    loop {
        if !value.is_finite() {
            return Err(Error::Tolerance {
                a,
                b,
                tolerance: cfg.abs_tol,
                estimate: f64::INFINITY,
            });
        }
        let target = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= target {
            // re-sum to shed the drift of the running updates
            let (v, e) = heap.iter().fold((0.0, 0.0), |(v, e), s| {
                (v + s.est.value, e + s.est.error_estimate)
            });
            return Ok(Integral {
                value: v,
                error_estimate: e,
            });
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::Tolerance {
                a,
                b,
                tolerance: target,
                estimate: error,
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // segment below floating-point resolution
            return Err(Error::Tolerance {
                a,
                b,
                tolerance: target,
                estimate: error,
            });
        }
        let left = kronrod15(&f, worst.a, mid);
        let right = kronrod15(&f, mid, worst.b);
        value += left.value + right.value - worst.est.value;
        error += left.error_estimate + right.error_estimate - worst.est.error_estimate;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            est: left,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            est: right,
        });
        subdivisions += 1;
    }
}

/// Settings for the bracketed root finders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConfig {
    pub abs_tol: f64,
    pub max_iterations: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_iterations: 200,
        }
    }
}

impl RootConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::Config("root tolerance must be positive".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_bracket(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<()> {
    if f_lo.is_nan() || f_hi.is_nan() || f_lo * f_hi > 0.0 {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    Ok(())
}

/// Bisection on `[lo, hi]`; requires `f(lo)·f(hi) ≤ 0`.
pub fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, cfg: &RootConfig) -> Result<f64> {
    cfg.validate()?;
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    check_bracket(lo, hi, f_lo, f_hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    for _ in 0..cfg.max_iterations {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 2.0 * cfg.abs_tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iterations,
    })
}

/// Bisection down to `polish_width`, then Newton steps safeguarded by the
/// bracket. `df` is the derivative of `f`.
pub fn find_root_newton<F, D>(
    f: F,
    df: D,
    lo: f64,
    hi: f64,
    polish_width: f64,
    cfg: &RootConfig,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    cfg.validate()?;
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let f_lo = f(lo);
    let f_hi = f(hi);
    check_bracket(lo, hi, f_lo, f_hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    let lo_negative = f_lo < 0.0;
    let mut iterations = 0;
    while hi - lo > polish_width.max(2.0 * cfg.abs_tol) {
        if iterations == cfg.max_iterations {
            return Err(Error::NonConvergence { iterations });
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    while iterations < cfg.max_iterations {
        iterations += 1;
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == lo_negative {
            lo = x;
        } else {
            hi = x;
        }
        let slope = df(x);
        let mut next = x - fx / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= cfg.abs_tol || hi - lo <= 2.0 * cfg.abs_tol {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NonConvergence { iterations })
}

/// Barycentric interpolant through Chebyshev points of the second kind on
/// `[a, b]`.
#[derive(Debug, Clone)]
pub struct ChebyshevTable {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl ChebyshevTable {
    /// Chebyshev–Lobatto nodes on `[a, b]`, in increasing order.
    pub fn nodes(a: f64, b: f64, count: usize) -> Vec<f64> {
        assert!(count >= 2, "need at least two interpolation nodes");
        let m = (count - 1) as f64;
        (0..count)
            .map(|j| {
                let t = -(PI * j as f64 / m).cos();
                0.5 * (a + b) + 0.5 * (b - a) * t
            })
            .collect()
    }

    /// Build the table by sampling `f` at `count` nodes.
    pub fn build<F>(a: f64, b: f64, count: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let nodes = Self::nodes(a, b, count);
        let values = nodes.iter().map(|&s| f(s)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            a,
            b,
            nodes,
            values,
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// `(node, value)` pairs in increasing node order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.values.iter().copied())
    }

    pub fn eval(&self, s: f64) -> f64 {
        let last = self.nodes.len() - 1;
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, (&node, &value)) in self.nodes.iter().zip(&self.values).enumerate() {
            let diff = s - node;
            if diff == 0.0 {
                return value;
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == last {
                w *= 0.5;
            }
            let t = w / diff;
            num += t * value;
            den += t;
        }
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut acc = f(a) + f(b);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn integrates_linear_and_sine() {
        let cfg = QuadratureConfig::default();
        let r = integrate(|x| x, 0.0, 1.0, &cfg).unwrap();
        assert_abs_diff_eq!(r.value, 0.5, epsilon = 1e-14);
        let r = integrate(f64::sin, 0.0, PI, &cfg).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn integrates_the_two_ray_kernel() {
        let h = |s: f64| (0.625 - s / 2.0 + s * s / 2.0) / (1.0 - 2.0 * s).powi(2);
        // composite Simpson as an independent check; 3/16 by substitution t = 1 − 2s
        let oracle = simpson(h, -0.5, 0.0, 20_000);
        assert_abs_diff_eq!(oracle, 0.1875, epsilon = 1e-12);
        let r = integrate(h, -0.5, 0.0, &QuadratureConfig::default()).unwrap();
        assert_abs_diff_eq!(r.value, 0.1875, epsilon = 1e-10);
    }

    #[test]
    fn empty_interval_and_bad_bounds() {
        let cfg = QuadratureConfig::default();
        assert_eq!(integrate(|x| x, 1.0, 1.0, &cfg).unwrap().value, 0.0);
        assert!(matches!(
            integrate(|x| x, 1.0, 0.0, &cfg),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn reports_tolerance_failure() {
        let cfg = QuadratureConfig {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            max_subdivisions: 3,
        };
        let err = integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::Tolerance { .. }));
    }

    #[test]
    fn exact_on_high_degree_polynomials() {
        // K15 integrates degree 22 exactly on a single panel
        let p = |x: f64| x.powi(22) - 3.0 * x.powi(7) + 1.0;
        let exact = 2.0 / 23.0 + 2.0;
        let r = integrate(p, -1.0, 1.0, &QuadratureConfig::default()).unwrap();
        assert_abs_diff_eq!(r.value, exact, epsilon = 1e-13);
    }

    #[test]
    fn roots_of_simple_functions() {
        let cfg = RootConfig::default();
        assert_abs_diff_eq!(
            find_root(|x| x - 1.0, 0.0, 2.0, &cfg).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let r = find_root(|x| x * x - 2.0, 0.0, 2.0, &cfg).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-12);
        let r = find_root_newton(|x| x * x - 2.0, |x| 2.0 * x, 0.0, 2.0, 1e-4, &cfg).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn bracket_errors() {
        let cfg = RootConfig::default();
        assert!(matches!(
            find_root(|x| x * x + 1.0, -1.0, 1.0, &cfg),
            Err(Error::Bracket { .. })
        ));
        let tight = RootConfig {
            abs_tol: 1e-15,
            max_iterations: 3,
        };
        assert!(matches!(
            find_root(|x| x - 0.3, 0.0, 1.0, &tight),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn chebyshev_reproduces_smooth_functions() {
        let table = ChebyshevTable::build(-0.5, 0.0, 65, |s| Ok((3.0 * s).exp())).unwrap();
        for k in 0..=100 {
            let s = -0.5 + 0.005 * k as f64;
            assert_abs_diff_eq!(table.eval(s), (3.0 * s).exp(), epsilon = 1e-13);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn additive_over_adjacent_intervals(a in -2.0f64..0.0, w1 in 0.01f64..2.0, w2 in 0.01f64..2.0) {
                let f = |x: f64| (x * 1.7).cos() + x * x;
                let cfg = QuadratureConfig::default();
                let b = a + w1;
                let c = b + w2;
                let left = integrate(f, a, b, &cfg).unwrap().value;
                let right = integrate(f, b, c, &cfg).unwrap().value;
                let whole = integrate(f, a, c, &cfg).unwrap().value;
                prop_assert!((left + right - whole).abs() < 3e-10);
            }

            #[test]
            fn root_stable_under_bracket_growth(r in -1.0f64..1.0, grow_lo in 0.0f64..5.0, grow_hi in 0.0f64..5.0) {
                let f = |x: f64| (x - r).powi(3) + (x - r);
                let cfg = RootConfig::default();
                let small = find_root(f, -1.5, 1.5, &cfg).unwrap();
                let large = find_root(f, -1.5 - grow_lo, 1.5 + grow_hi, &cfg).unwrap();
                prop_assert!((small - large).abs() < 1e-11);
                prop_assert!((small - r).abs() < 1e-11);
            }
        }
    }
}
