//! Weakly singular kernels `g`, their truncated approximants, closed-form
//! line integrals, and the nonlinear factor `N(s, t, u)`.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

/// Shared single-variable real function.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Shared three-variable real function for `N(s, t, u)` and its `u`-derivative.
pub type UrysohnFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Monotonicity/symmetry class of a weakly singular kernel on `[0, L]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryClass {
    /// `g` decreases away from its only singularity at `r = 0`.
    Decreasing,
    /// `g` is symmetric about `L/2` and decreases on `(0, L/2]`; it is
    /// singular at both `r = 0` and `r = L`.
    SymmetricDecreasing,
}

/// A weakly singular, integrable function `g(r)` on `(0, L]` together with an
/// optional primitive `G` (with `G' = g`, `G(0) = 0` conventionally) and its
/// symmetry class.
#[derive(Clone)]
pub struct SingularKernel {
    eval: RealFn,
    primitive: Option<RealFn>,
    symmetry_class: SymmetryClass,
    interval_length: f64,
}

impl SingularKernel {
    pub fn new(
        eval: RealFn,
        primitive: Option<RealFn>,
        symmetry_class: SymmetryClass,
        interval_length: f64,
    ) -> Self {
        assert!(
            interval_length > 0.0,
            "kernel needs a positive interval length"
        );
        Self {
            eval,
            primitive,
            symmetry_class,
            interval_length,
        }
    }

    /// Evaluates `g(r)`. The argument must be strictly positive: solver code
    /// only reaches `g` through a truncated kernel, which never passes 0.
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        debug_assert!(r > 0.0, "g is evaluated on (0, L] only, got r = {r}");
        (self.eval)(r)
    }

    /// Evaluates the primitive `G(r)` if one is available.
    pub fn primitive(&self, r: f64) -> Option<f64> {
        self.primitive.as_ref().map(|g| g(r))
    }

    pub fn has_primitive(&self) -> bool {
        self.primitive.is_some()
    }

    pub fn symmetry_class(&self) -> SymmetryClass {
        self.symmetry_class
    }

    pub fn interval_length(&self) -> f64 {
        self.interval_length
    }
}

impl std::fmt::Debug for SingularKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SingularKernel")
            .field("symmetry_class", &self.symmetry_class)
            .field("interval_length", &self.interval_length)
            .field("has_primitive", &self.primitive.is_some())
            .finish()
    }
}

/// Closed-form value of the line integral `f(s) = int_a^b g(|s - t|) dt`
/// through the primitive: `f(s) = G(s - a) + G(b - s) - 2 G(0)`.
///
/// Returns `None` when the kernel carries no primitive; callers fall back to
/// the fine quadrature in that case. Panics if `s` lies outside `[a, b]`.
pub fn exact_line_integral(kernel: &SingularKernel, a: f64, b: f64, s: f64) -> Option<f64> {
    assert!(
        a <= s && s <= b,
        "line integral evaluated outside [{a}, {b}]: s = {s}"
    );
    let g0 = kernel.primitive(0.0)?;
    let left = kernel.primitive(s - a)?;
    let right = kernel.primitive(b - s)?;
    Some(left + right - 2.0 * g0)
}

/// A kernel flattened to the constant `g(delta)` on a width-`delta`
/// neighborhood of each singular point, making it continuous on `[0, L]`.
#[derive(Clone, Debug)]
pub struct TruncatedKernel {
    base: SingularKernel,
    delta: f64,
}

impl TruncatedKernel {
    pub fn new(base: SingularKernel, delta: f64) -> Self {
        assert!(delta > 0.0, "truncation width must be positive");
        assert!(
            delta < base.interval_length,
            "truncation width must be smaller than the interval"
        );
        Self { base, delta }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn base(&self) -> &SingularKernel {
        &self.base
    }

    /// Piecewise evaluation of the truncated kernel.
    ///
    /// On `[0, delta]` this returns `g(delta)`; past that it returns `g(r)`.
    /// Kernels that are singular at both endpoints additionally return
    /// `g(delta)` on `[L - delta, L]`. Panics when `r` lies outside `[0, L]`.
    #[inline]
    pub fn eval_truncated(&self, r: f64) -> f64 {
        let len = self.base.interval_length;
        assert!(
            (0.0..=len).contains(&r),
            "truncated kernel evaluated outside [0, {len}]: r = {r}"
        );
        if r <= self.delta {
            return self.base.eval(self.delta);
        }
        if self.base.symmetry_class == SymmetryClass::SymmetricDecreasing && r >= len - self.delta
        {
            return self.base.eval(self.delta);
        }
        self.base.eval(r)
    }
}

/// The nonlinear Urysohn factor `N(s, t, u)` with its partial derivative
/// with respect to `u`, both supplied as closures.
#[derive(Clone)]
pub struct Nonlinearity {
    n_eval: UrysohnFn,
    dn_du: UrysohnFn,
}

impl Nonlinearity {
    pub fn new(n_eval: UrysohnFn, dn_du: UrysohnFn) -> Self {
        Self { n_eval, dn_du }
    }

    /// `N(s, t, u)`.
    #[inline]
    pub fn n(&self, s: f64, t: f64, u: f64) -> f64 {
        (self.n_eval)(s, t, u)
    }

    /// `dN/du (s, t, u)`.
    #[inline]
    pub fn du(&self, s: f64, t: f64, u: f64) -> f64 {
        (self.dn_du)(s, t, u)
    }
}

impl std::fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Nonlinearity {..}")
    }
}

/// Accurate values of the Riemann zeta function at even integers 2..=24,
/// used by the Clausen series below. Truncating a raw `sum 1/m^(2n)` instead
/// would lose five digits in the first entry and poison the primitive.
const ZETA_EVEN: [f64; 12] = [
    1.644_934_066_848_226_4,
    1.082_323_233_711_138_2,
    1.017_343_061_984_449_1,
    1.004_077_356_197_944_3,
    1.000_994_575_127_818_1,
    1.000_246_086_553_308_0,
    1.000_061_248_135_058_7,
    1.000_015_282_259_408_6,
    1.000_003_817_293_265_0,
    1.000_000_953_962_033_8,
    1.000_000_238_450_502_7,
    1.000_000_059_608_189_1,
];

/// The Clausen function `Cl2(theta) = -int_0^theta log|2 sin(x/2)| dx`.
///
/// This is the primitive needed for logarithmic kernels of the form
/// `-2 log sin(pi r)`: their antiderivative is `2 log(2) r + Cl2(2 pi r)/pi`.
/// Computed by range reduction to `[0, pi]` followed by the classical series
/// `theta - theta log theta + sum_n zeta(2n)/(n (2n+1)) theta (theta/2pi)^(2n)`,
/// which converges geometrically with ratio at most 1/4 on that range.
pub fn clausen2(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    let mut sign = 1.0;
    if t > PI {
        t = TAU - t;
        sign = -1.0;
    }
    if t == 0.0 {
        return 0.0;
    }
    let mut acc = t - t * t.ln();
    let x2 = (t / TAU) * (t / TAU);
    let mut pow = 1.0;
    for n in 1..=40usize {
        pow *= x2;
        let zeta = if n <= ZETA_EVEN.len() {
            ZETA_EVEN[n - 1]
        } else {
            1.0
        };
        let term = zeta / (n as f64 * (2 * n + 1) as f64) * t * pow;
        acc += term;
        if term < 1e-18 * acc.abs() {
            break;
        }
    }
    sign * acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn sqrt_kernel() -> SingularKernel {
        SingularKernel::new(
            Arc::new(|r: f64| 0.5 / r.sqrt()),
            Some(Arc::new(|r: f64| r.sqrt())),
            SymmetryClass::Decreasing,
            1.0,
        )
    }

    fn log_kernel() -> SingularKernel {
        SingularKernel::new(
            Arc::new(|r: f64| std::f64::consts::LN_2 - (1.0 - (TAU * r).cos()).ln()),
            Some(Arc::new(|r: f64| {
                2.0 * std::f64::consts::LN_2 * r + clausen2(TAU * r) / PI
            })),
            SymmetryClass::SymmetricDecreasing,
            1.0,
        )
    }

    #[test]
    fn truncation_flattens_the_singular_zone() {
        let k = TruncatedKernel::new(sqrt_kernel(), 0.04);
        // inside the flat zone: g(0.04) = 0.5 / 0.2 = 2.5
        assert_relative_eq!(k.eval_truncated(0.01), 2.5);
        assert_relative_eq!(k.eval_truncated(0.0), 2.5);
        // untouched region: g(0.25) = 0.5 / 0.5 = 1.0
        assert_relative_eq!(k.eval_truncated(0.25), 1.0);
    }

    #[test]
    fn symmetric_kernels_are_flattened_at_both_ends() {
        let k = TruncatedKernel::new(log_kernel(), 0.1);
        let expected = std::f64::consts::LN_2 - (1.0 - (TAU * 0.1).cos()).ln();
        assert_relative_eq!(expected, 2.348_718_011_239_097_5, epsilon = 1e-12);
        assert_relative_eq!(k.eval_truncated(0.95), expected);
        assert_relative_eq!(k.eval_truncated(0.05), expected);
    }

    #[test]
    fn truncation_is_continuous_at_the_splice() {
        for (kernel, delta) in [(sqrt_kernel(), 0.04), (log_kernel(), 0.1)] {
            let k = TruncatedKernel::new(kernel, delta);
            let below = k.eval_truncated(delta);
            let above = k.eval_truncated(delta + 1e-12);
            assert_relative_eq!(below, above, max_relative = 1e-9);
        }
    }

    #[test]
    #[should_panic(expected = "outside")]
    fn truncated_kernel_rejects_negative_radii() {
        TruncatedKernel::new(sqrt_kernel(), 0.01).eval_truncated(-0.5);
    }

    #[test]
    #[should_panic(expected = "outside")]
    fn truncated_kernel_rejects_radii_past_the_interval() {
        TruncatedKernel::new(sqrt_kernel(), 0.01).eval_truncated(1.5);
    }

    #[test]
    fn line_integral_of_sqrt_kernel_matches_hand_values() {
        let k = sqrt_kernel();
        assert_relative_eq!(exact_line_integral(&k, 0.0, 1.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            exact_line_integral(&k, 0.0, 1.0, 0.25).unwrap(),
            0.5 + 0.75f64.sqrt(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            exact_line_integral(&k, 0.0, 1.0, 0.25).unwrap(),
            1.366_025_403_784_438_6,
            epsilon = 1e-15
        );
    }

    #[test]
    fn line_integral_of_log_kernel_is_constant_two_log_two() {
        let k = log_kernel();
        let expected = 2.0 * std::f64::consts::LN_2;
        for s in [0.0, 0.1, 0.3, 0.5, 0.77, 1.0] {
            assert_relative_eq!(
                exact_line_integral(&k, 0.0, 1.0, s).unwrap(),
                expected,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn line_integral_is_symmetric_about_the_midpoint() {
        for k in [sqrt_kernel(), log_kernel()] {
            for s in [0.05, 0.2, 0.41] {
                let fs = exact_line_integral(&k, 0.0, 1.0, s).unwrap();
                let fm = exact_line_integral(&k, 0.0, 1.0, 1.0 - s).unwrap();
                assert_relative_eq!(fs, fm, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sqrt_kernel_line_integral_increases_up_to_the_midpoint() {
        let k = sqrt_kernel();
        let mut prev = exact_line_integral(&k, 0.0, 1.0, 0.0).unwrap();
        for i in 1..=25 {
            let s = 0.5 * i as f64 / 25.0;
            let cur = exact_line_integral(&k, 0.0, 1.0, s).unwrap();
            assert!(cur > prev, "f must increase on [a, midpoint]");
            prev = cur;
        }
    }

    #[test]
    fn kernels_without_a_primitive_report_no_closed_form() {
        let k = SingularKernel::new(
            Arc::new(|r: f64| 0.5 / r.sqrt()),
            None,
            SymmetryClass::Decreasing,
            1.0,
        );
        assert!(exact_line_integral(&k, 0.0, 1.0, 0.3).is_none());
        assert!(!k.has_primitive());
    }

    #[test]
    fn primitive_difference_quotients_recover_the_kernel() {
        for kernel in [sqrt_kernel(), log_kernel()] {
            for r in [0.11, 0.27, 0.4] {
                let h = 1e-7;
                let fd = (kernel.primitive(r + h).unwrap() - kernel.primitive(r).unwrap()) / h;
                assert_relative_eq!(fd, kernel.eval(r), max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn clausen_matches_reference_points() {
        // Cl2(pi/2) is Catalan's constant.
        assert_abs_diff_eq!(clausen2(PI / 2.0), 0.915_965_594_177_219, epsilon = 1e-14);
        assert_abs_diff_eq!(clausen2(PI), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(clausen2(0.0), 0.0);
        // odd symmetry through the reduction: Cl2(2 pi - x) = -Cl2(x)
        for x in [0.3, 1.1, 2.9] {
            assert_abs_diff_eq!(clausen2(TAU - x), -clausen2(x), epsilon = 1e-13);
        }
    }

    #[test]
    fn clausen_derivative_matches_minus_log_two_sin_half() {
        for theta in [0.4, 1.0, 2.2] {
            let h = 1e-6;
            let fd = (clausen2(theta + h) - clausen2(theta - h)) / (2.0 * h);
            let exact = -(2.0 * (theta / 2.0).sin()).ln();
            assert_relative_eq!(fd, exact, max_relative = 1e-7);
        }
    }

    #[test]
    fn truncated_values_never_exceed_the_splice_value() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::deterministic();
        runner
            .run(&(1e-4..0.2f64, 0.0..1.0f64), |(delta, r)| {
                for kernel in [sqrt_kernel(), log_kernel()] {
                    let cap = kernel.eval(delta);
                    let k = TruncatedKernel::new(kernel, delta);
                    let v = k.eval_truncated(r);
                    prop_assert!(v > 0.0 || v == 0.0 && (r - 0.5).abs() < 1e-12);
                    prop_assert!(v <= cap * (1.0 + 1e-12));
                }
                Ok(())
            })
            .unwrap();
    }

    #[test]
    fn kernels_decrease_on_their_monotone_range() {
        let sqrt_k = sqrt_kernel();
        let log_k = log_kernel();
        for i in 1..50 {
            let r0 = 0.01 * i as f64;
            let r1 = r0 + 0.005;
            assert!(sqrt_k.eval(r1) <= sqrt_k.eval(r0));
            if r1 <= 0.5 {
                assert!(log_k.eval(r1) <= log_k.eval(r0));
            }
        }
        // midpoint symmetry of the doubly singular kernel
        for r in [0.1, 0.23, 0.4] {
            assert_relative_eq!(log_k.eval(r), log_k.eval(1.0 - r), epsilon = 1e-12);
        }
    }
}
