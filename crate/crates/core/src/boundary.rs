//! The free boundary of the stopping region.
//!
//! For `n ≥ 2` rays the stopping band in `x` is `[f(z), g(y)]` with
//! `g(y) = y − ½`. On `z ≤ −½` the lower edge is affine, `f(z) = z + ½`; on
//! `(−½, 0]` it is the inverse of
//!
//! ```text
//! φ(s) = (n−1)s − (n−1)²/2 + n(n−2)/2 · exp(−2s/(n−1)),   s ≥ 0,
//! ```
//!
//! which solves `2f'(z)[f(z) − z/(n−1)] = 1` with `f(−½) = 0`.

use crate::domain::Params;
use crate::error::{domain, Result};
use crate::numerics::{find_root_newton, RootConfig};

/// Bracket width at which the inverse switches from bisection to Newton.
const NEWTON_SWITCH_WIDTH: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFn {
    params: Params,
    root: RootConfig,
}

impl BoundaryFn {
    pub fn new(params: Params) -> Result<Self> {
        Self::with_root_config(params, RootConfig::default())
    }

    pub fn with_root_config(params: Params, root: RootConfig) -> Result<Self> {
        if params.n() < 2 {
            return Err(domain("the free boundary is defined for n ≥ 2"));
        }
        root.validate()?;
        Ok(Self { params, root })
    }

    pub fn params(&self) -> Params {
        self.params
    }

    /// `φ(s)` for `s ≥ 0`.
    pub fn phi(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(domain(format!("φ is defined for s ≥ 0, got {s}")));
        }
        Ok(self.phi_unchecked(s))
    }

    pub(crate) fn phi_unchecked(&self, s: f64) -> f64 {
        let n = self.params.n_f64();
        let m = n - 1.0;
        m * s - 0.5 * m * m + 0.5 * n * (n - 2.0) * (-2.0 * s / m).exp()
    }

    pub(crate) fn phi_prime(&self, s: f64) -> f64 {
        let n = self.params.n_f64();
        let m = n - 1.0;
        m - n * (n - 2.0) / m * (-2.0 * s / m).exp()
    }

    /// Lower edge `f(z)` of the stopping band, for `z ≤ 0`.
    pub fn f_lower(&self, z: f64) -> Result<f64> {
        if !(z <= 0.0) {
            return Err(domain(format!("f is defined for z ≤ 0, got {z}")));
        }
        if z <= -0.5 || self.params.n() == 2 {
            return Ok(z + 0.5);
        }
        let target = |s: f64| self.phi_unchecked(s) - z;
        let mut hi = 1.0;
        while target(hi) < 0.0 {
            hi *= 2.0;
        }
        find_root_newton(
            target,
            |s| self.phi_prime(s),
            0.0,
            hi,
            NEWTON_SWITCH_WIDTH,
            &self.root,
        )
    }

    /// Upper edge `g(y) = y − ½` of the stopping band, for `y ≥ ½`.
    pub fn g_upper(&self, y: f64) -> Result<f64> {
        g_upper(y)
    }

    /// Whether the first stage of the optimal rule is over: `y ≥ ½` and
    /// `z ≤ φ(y − ½)`, equivalently `f(z) ≤ g(y)`.
    pub fn stage1_satisfied(&self, y: f64, z: f64) -> bool {
        y >= 0.5 && z <= self.phi_unchecked(y - 0.5)
    }
}

/// `g(y) = y − ½` for `y ≥ ½`.
pub fn g_upper(y: f64) -> Result<f64> {
    if !(y >= 0.5) {
        return Err(domain(format!("g is defined for y ≥ ½, got {y}")));
    }
    Ok(y - 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn b(n: u32) -> BoundaryFn {
        BoundaryFn::new(Params::new(n).unwrap()).unwrap()
    }

    // closed-form values evaluated at 30 digits
    const PHI3_AT_1: f64 = 0.551_819_161_757_163_482;
    const PHI3_AT_HALF: f64 = -0.090_204_010_431_049_864_6;
    const F3_AT_QUARTER: f64 = 0.342_511_038_227_666_636;
    const F3_AT_TENTH: f64 = 0.490_980_488_365_357_483;
    const F3_AT_ZERO: f64 = 0.580_131_399_025_977_086;

    #[test]
    fn phi_values() {
        for n in 2..10 {
            assert_abs_diff_eq!(b(n).phi(0.0).unwrap(), -0.5, epsilon = 1e-14);
        }
        for s in [0.0, 0.3, 1.0, 7.5] {
            assert_abs_diff_eq!(b(2).phi(s).unwrap(), s - 0.5, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(b(3).phi(1.0).unwrap(), PHI3_AT_1, epsilon = 1e-14);
        assert_abs_diff_eq!(b(3).phi(0.5).unwrap(), PHI3_AT_HALF, epsilon = 1e-14);
        assert!(b(3).phi(-0.1).is_err());
        assert!(BoundaryFn::new(Params::new(1).unwrap()).is_err());
    }

    #[test]
    fn f_lower_values() {
        let b3 = b(3);
        assert_eq!(b3.f_lower(-0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(b3.f_lower(-0.7).unwrap(), -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(b(2).f_lower(-0.25).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(b3.f_lower(-0.25).unwrap(), F3_AT_QUARTER, epsilon = 1e-12);
        assert_abs_diff_eq!(b3.f_lower(-0.1).unwrap(), F3_AT_TENTH, epsilon = 1e-12);
        assert_abs_diff_eq!(b3.f_lower(0.0).unwrap(), F3_AT_ZERO, epsilon = 1e-12);
        assert!(b3.f_lower(0.01).is_err());
    }

    #[test]
    fn f_lower_matches_plain_bisection() {
        let b3 = b(3);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if b3.phi(mid).unwrap() < -0.25 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let f = b3.f_lower(-0.25).unwrap();
        assert_abs_diff_eq!(f, lo, epsilon = 1e-12);
        assert_abs_diff_eq!(b3.phi(f).unwrap(), -0.25, epsilon = 1e-12);
    }

    #[test]
    fn g_upper_values() {
        assert_eq!(g_upper(0.5).unwrap(), 0.0);
        assert_eq!(g_upper(1.0).unwrap(), 0.5);
        assert_eq!(g_upper(2.5).unwrap(), 2.0);
        assert!(g_upper(0.4).is_err());
    }

    #[test]
    fn stage1_examples() {
        for n in 2..6 {
            assert!(!b(n).stage1_satisfied(0.4, -0.4));
        }
        assert!(b(2).stage1_satisfied(1.0, -0.1));
        assert!(!b(3).stage1_satisfied(1.0, 0.0));
        assert!(b(3).stage1_satisfied(1.0, -0.1));
    }

    #[test]
    fn boundary_ode_residual() {
        for n in 3..9 {
            let bn = b(n);
            let m = f64::from(n - 1);
            let h = 1e-5;
            for k in 1..50 {
                let z = -0.5 + 0.01 * k as f64;
                let fz = bn.f_lower(z).unwrap();
                let slope = (bn.f_lower(z + h).unwrap() - bn.f_lower(z - h).unwrap()) / (2.0 * h);
                let residual = 2.0 * slope * (fz - z / m) - 1.0;
                assert!(residual.abs() < 1e-6, "n={n} z={z} residual={residual}");
            }
        }
    }

    #[test]
    fn continuous_at_the_knee() {
        let b5 = b(5);
        for eps in [1e-3, 1e-6, 1e-9] {
            assert!(b5.f_lower(-0.5 - eps).unwrap().abs() <= eps + 1e-15);
            assert!(b5.f_lower(-0.5 + eps).unwrap().abs() < 10.0 * eps);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn phi_inverts_f(n in 2u32..12, z in -0.5f64..=0.0) {
                let bn = b(n);
                let f = bn.f_lower(z).unwrap();
                prop_assert!((bn.phi(f).unwrap() - z).abs() < 1e-10);
            }

            #[test]
            fn f_and_phi_increasing(n in 2u32..12, a in -1.0f64..0.0, d in 1e-6f64..0.5, s in 0.0f64..10.0) {
                let bn = b(n);
                let z2 = (a + d).min(0.0);
                prop_assume!(z2 > a);
                prop_assert!(bn.f_lower(z2).unwrap() > bn.f_lower(a).unwrap());
                prop_assert!(bn.phi(s + d).unwrap() > bn.phi(s).unwrap());
            }
        }
    }
}
