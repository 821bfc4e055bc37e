//! Bracketed root finding and standard normal distribution functions.

use crate::error::{domain, Error, Result};

/// Iteration cap for the hybrid solver. Bisection alone reaches double
/// resolution on any finite bracket well before this.
pub const MAX_ITERATIONS: usize = 200;

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    lo: f64,
    hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(domain(format!(
                "bracket endpoints must be finite: [{lo}, {hi}]"
            )));
        }
        if lo >= hi {
            return Err(domain(format!(
                "bracket requires lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Bracket { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult {
    pub root: f64,
    /// `|f(root)|`
    pub residual: f64,
    pub iterations: usize,
    /// How many of the iterations took a bisection step instead of Newton.
    pub bisection_steps: usize,
}

fn eval(f: &impl Fn(f64) -> f64, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFinite { x })
    }
}

/// Central difference with step `1e-6 * max(1, |x|)`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-6 * x.abs().max(1.0);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

struct Endpoints {
    f_lo: f64,
    f_hi: f64,
}

fn check_endpoints(f: &impl Fn(f64) -> f64, bracket: Bracket, tol: f64) -> Result<Endpoints> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(domain(format!("tolerance must be positive, got {tol}")));
    }
    let f_lo = eval(f, bracket.lo)?;
    let f_hi = eval(f, bracket.hi)?;
    if f_lo * f_hi > 0.0 {
        return Err(Error::NoSignChange {
            lo: bracket.lo,
            hi: bracket.hi,
            f_lo,
            f_hi,
        });
    }
    Ok(Endpoints { f_lo, f_hi })
}

/// Tracks the evaluated point with the smallest `|f|`.
struct Best {
    x: f64,
    fx: f64,
}

impl Best {
    fn offer(&mut self, x: f64, fx: f64) {
        if fx.abs() < self.fx.abs() {
            self.x = x;
            self.fx = fx;
        }
    }
}

/// Safeguarded Newton iteration with an analytic derivative.
///
/// A Newton step is taken when it lands strictly inside the current bracket
/// and shrinks faster than half the step before last; otherwise the bracket
/// is bisected. Stops when `|f(x)| <= tol`, when the bracket is narrower
/// than `tol`, or when the bracket can no longer be split in double
/// precision. The returned root always lies in the initial bracket.
pub fn newton_bisect(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    bracket: Bracket,
    start: f64,
    tol: f64,
) -> Result<RootResult> {
    let ends = check_endpoints(&f, bracket, tol)?;
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let lo_negative = ends.f_lo < 0.0;
    let mut best = if ends.f_lo.abs() <= ends.f_hi.abs() {
        Best {
            x: lo,
            fx: ends.f_lo,
        }
    } else {
        Best {
            x: hi,
            fx: ends.f_hi,
        }
    };
    if best.fx.abs() <= tol {
        return Ok(RootResult {
            root: best.x,
            residual: best.fx.abs(),
            iterations: 0,
            bisection_steps: 0,
        });
    }

    let mut x = if start.is_finite() && lo < start && start < hi {
        start
    } else {
        0.5 * (lo + hi)
    };
    let mut step_before_last = hi - lo;
    let mut last_step = hi - lo;
    let mut bisection_steps = 0;

    for iteration in 1..=MAX_ITERATIONS {
        let fx = eval(&f, x)?;
        best.offer(x, fx);
        if fx.abs() <= tol {
            return Ok(RootResult {
                root: x,
                residual: fx.abs(),
                iterations: iteration,
                bisection_steps,
            });
        }
        if (fx < 0.0) == lo_negative {
            lo = x;
        } else {
            hi = x;
        }

        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(RootResult {
                root: best.x,
                residual: best.fx.abs(),
                iterations: iteration,
                bisection_steps,
            });
        }

        let slope = df(x);
        let newton = x - fx / slope;
        let progressing = (newton - x).abs() < 0.5 * step_before_last.abs();
        let next = if slope.is_finite() && slope != 0.0 && lo < newton && newton < hi && progressing
        {
            newton
        } else {
            bisection_steps += 1;
            mid
        };
        step_before_last = last_step;
        last_step = next - x;
        x = next;
    }

    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual: best.fx.abs(),
    })
}

/// Hybrid root finder using a central-difference derivative, started from
/// the bracket midpoint.
pub fn find_root(f: impl Fn(f64) -> f64, bracket: Bracket, tol: f64) -> Result<RootResult> {
    let start = 0.5 * (bracket.lo + bracket.hi);
    newton_bisect(&f, |x| central_difference(&f, x), bracket, start, tol)
}

/// Plain bisection. Same stopping rules as [`newton_bisect`].
pub fn bisect(f: impl Fn(f64) -> f64, bracket: Bracket, tol: f64) -> Result<RootResult> {
    let ends = check_endpoints(&f, bracket, tol)?;
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let lo_negative = ends.f_lo < 0.0;
    let mut best = if ends.f_lo.abs() <= ends.f_hi.abs() {
        Best {
            x: lo,
            fx: ends.f_lo,
        }
    } else {
        Best {
            x: hi,
            fx: ends.f_hi,
        }
    };
    let mut iterations = 0;
    while best.fx.abs() > tol {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        if iterations == MAX_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations,
                residual: best.fx.abs(),
            });
        }
        iterations += 1;
        let fm = eval(&f, mid)?;
        best.offer(mid, fm);
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RootResult {
        root: best.x,
        residual: best.fx.abs(),
        iterations,
        bisection_steps: iterations,
    })
}

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF, `0.5 * erfc(-x / sqrt 2)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(x)` without cancellation for large `x`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

// Wichura, algorithm AS 241 (PPND16).
#[allow(clippy::excessive_precision)]
const A: [f64; 8] = [
    3.387_132_872_796_366_608_0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
#[allow(clippy::excessive_precision)]
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083_0e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061_0e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561_0e3,
];
#[allow(clippy::excessive_precision)]
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_90,
    5.769_497_221_460_691_405_50,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_70e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_40e-4,
];
#[allow(clippy::excessive_precision)]
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_40,
    6.897_673_349_851_000_045_50e-1,
    1.481_039_764_274_800_745_90e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946_00e-4,
    1.050_750_071_644_416_843_24e-9,
];
#[allow(clippy::excessive_precision)]
const E: [f64; 8] = [
    6.657_904_643_501_103_777_20,
    5.463_784_911_164_114_369_90,
    1.784_826_539_917_291_335_80,
    2.965_605_718_285_048_912_30e-1,
    2.653_218_952_657_612_309_30e-2,
    1.242_660_947_388_078_438_60e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
#[allow(clippy::excessive_precision)]
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_90e-1,
    1.369_298_809_227_358_053_10e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591_00e-4,
    1.846_318_317_510_054_681_80e-5,
    1.421_511_758_316_445_888_70e-7,
    2.044_263_103_389_939_785_64e-15,
];

fn poly(coeffs: &[f64; 8], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Quantile for `p <= 0.5`: rational approximation plus one Newton step on
/// the CDF.
fn lower_quantile(p: f64) -> f64 {
    let x = ppnd16(p);
    let density = normal_pdf(x);
    if density > 0.0 {
        x - (normal_cdf(x) - p) / density
    } else {
        x
    }
}

/// Inverse of the standard normal CDF on the open interval `(0, 1)`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("quantile requires 0 < p < 1, got {p}")));
    }
    if p <= 0.5 {
        Ok(lower_quantile(p))
    } else {
        Ok(-lower_quantile(1.0 - p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_of_x_tanh_x() {
        let b = Bracket::new(1.0, 1.5).unwrap();
        let r = find_root(|x| x * x.tanh() - 1.0, b, 1e-12).unwrap();
        assert!((r.root - 1.199_678_64).abs() < 1e-8);
        assert!(r.residual <= 1e-12);
    }

    #[test]
    fn odd_function_symmetric_bracket() {
        let b = Bracket::new(-1.0, 1.0).unwrap();
        let r = find_root(|x| x, b, 1e-12).unwrap();
        assert_eq!(r.root, 0.0);
    }

    #[test]
    fn sqrt_two_against_bisection() {
        let b = Bracket::new(1.0, 2.0).unwrap();
        let oracle = bisect(|x| x * x - 2.0, b, 1e-12).unwrap();
        let r = find_root(|x| x * x - 2.0, b, 1e-12).unwrap();
        assert!((r.root - oracle.root).abs() < 1e-12);
        assert!((r.root - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn endpoint_root_returned_immediately() {
        let b = Bracket::new(0.0, 3.0).unwrap();
        let r = find_root(|x| x * (x - 5.0), b, 1e-12).unwrap();
        assert_eq!(r.root, 0.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn no_sign_change() {
        let b = Bracket::new(-1.0, 1.0).unwrap();
        let err = find_root(|x| x * x + 1.0, b, 1e-12).unwrap_err();
        assert!(matches!(err, Error::NoSignChange { .. }));
    }

    #[test]
    fn non_finite_evaluation() {
        let b = Bracket::new(-1.0, 2.0).unwrap();
        let err = find_root(
            |x| {
                if x > 0.4 && x < 0.6 {
                    f64::NAN
                } else {
                    x - 0.5
                }
            },
            b,
            1e-12,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn bad_inputs() {
        assert!(Bracket::new(1.0, 1.0).is_err());
        assert!(Bracket::new(f64::NAN, 1.0).is_err());
        let b = Bracket::new(0.0, 1.0).unwrap();
        assert!(find_root(|x| x - 0.5, b, 0.0).is_err());
    }

    #[test]
    fn bad_derivative_falls_back_to_bisection() {
        let b = Bracket::new(0.0, 2.0).unwrap();
        let r = newton_bisect(|x| x * x * x - 1.0, |_| 0.0, b, 0.3, 1e-13).unwrap();
        assert!((r.root - 1.0).abs() < 1e-13);
        assert_eq!(r.bisection_steps, r.iterations - 1);
    }

    #[test]
    fn cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(10.0) - 1.0).abs() < 1e-12);
        assert!(normal_cdf(-10.0) < 1e-12);
        // mpmath, 30 digits: ncdf(1.959964) = 0.9750000009035...
        assert!((normal_cdf(1.959964) - 0.975_000_000_903_557_6).abs() < 1e-15);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_sf(8.0) - 6.220_960_574_271_785e-16).abs() < 1e-28);
    }

    #[test]
    fn quantile_values() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        // mpmath: sqrt(2)*erfinv(2p-1)
        let cases = [
            (0.975, 1.959_963_984_540_054),
            (0.025, -1.959_963_984_540_054),
            (0.9, 1.281_551_565_544_600_5),
            (1e-10, -6.361_340_902_404_056),
            (0.999, 3.090_232_306_167_813_5),
        ];
        for (p, z) in cases {
            let got = normal_quantile(p).unwrap();
            assert!((got - z).abs() < 1e-13, "p={p}: {got} vs {z}");
        }
    }

    #[test]
    fn quantile_domain() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(normal_quantile(p), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn quantile_matches_root_solve_oracle() {
        let b = Bracket::new(0.0, 5.0).unwrap();
        let oracle = bisect(|x| normal_cdf(x) - 0.975, b, 1e-15).unwrap();
        assert!((normal_quantile(0.975).unwrap() - oracle.root).abs() < 1e-9);
    }
}
